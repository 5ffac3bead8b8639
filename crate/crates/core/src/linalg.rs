//! Self-contained dense linear algebra for desk-scale eigenproblems.
//!
//! Nonsymmetric path: balance, Householder Hessenberg reduction, Francis
//! double-shift QR (eigenvalues), inverse iteration (eigenvectors). The QR
//! core follows the classic EISPACK/JAMA hqr lineage. Symmetric path:
//! Householder tridiagonalization plus implicit-shift QL, and Sturm-sequence
//! bisection when only eigenvalues below a bound are wanted.

use crate::error::{Error, Result};

/// Dense row-major matrix of f64.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut m = Matrix::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let mut s = 0.0;
            for j in 0..self.cols {
                s += self[(i, j)] * v[j];
            }
            out[i] = s;
        }
        out
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn scaled(&self, factor: f64) -> Matrix {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= factor;
        }
        out
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (v, w) in out.data.iter_mut().zip(&other.data) {
            *v += w;
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()))
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// All eigenvalues of a real square matrix as (re, im) pairs, sorted by
/// real part then imaginary part.
///
/// Balances first, reduces to Hessenberg form, then runs double-shift QR.
pub fn eigenvalues(a: &Matrix) -> Result<Vec<(f64, f64)>> {
    assert!(a.is_square());
    let n = a.rows;
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = a.clone();
    balance_in_place(&mut h);
    hessenberg_in_place(&mut h);
    let mut eig = hqr_eigenvalues(&mut h)?;
    eig.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    Ok(eig)
}

/// Parlett-Reinsch balancing: diagonal similarity making row and column
/// norms comparable. Eigenvalues are unchanged.
fn balance_in_place(a: &mut Matrix) {
    let n = a.rows;
    let radix = 2.0_f64;
    let sqrdx = radix * radix;
    loop {
        let mut done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / radix;
                let mut f = 1.0;
                let s = c + r;
                let mut c_scaled = c;
                while c_scaled < g {
                    f *= radix;
                    c_scaled *= sqrdx;
                }
                g = r * radix;
                while c_scaled > g {
                    f /= radix;
                    c_scaled /= sqrdx;
                }
                if (c_scaled + r) / f < 0.95 * s {
                    done = false;
                    let ginv = 1.0 / f;
                    for j in 0..n {
                        a[(i, j)] *= ginv;
                    }
                    for j in 0..n {
                        a[(j, i)] *= f;
                    }
                }
            }
        }
        if done {
            break;
        }
    }
}

/// Householder reduction to upper Hessenberg form, in place. Entries below
/// the first subdiagonal are zeroed on exit.
fn hessenberg_in_place(h: &mut Matrix) {
    let n = h.rows;
    if n < 3 {
        return;
    }
    let mut ort = vec![0.0_f64; n];
    let high = n - 1;
    for m in 1..high {
        let mut scale = 0.0;
        for i in m..=high {
            scale += h[(i, m - 1)].abs();
        }
        if scale == 0.0 {
            continue;
        }
        let mut hh = 0.0;
        for i in (m..=high).rev() {
            ort[i] = h[(i, m - 1)] / scale;
            hh += ort[i] * ort[i];
        }
        let mut g = hh.sqrt();
        if ort[m] > 0.0 {
            g = -g;
        }
        hh -= ort[m] * g;
        ort[m] -= g;

        // H = (I - u uᵀ/h) H (I - u uᵀ/h)
        for j in m..n {
            let mut f = 0.0;
            for i in (m..=high).rev() {
                f += ort[i] * h[(i, j)];
            }
            f /= hh;
            for i in m..=high {
                h[(i, j)] -= f * ort[i];
            }
        }
        for i in 0..=high {
            let mut f = 0.0;
            for j in (m..=high).rev() {
                f += ort[j] * h[(i, j)];
            }
            f /= hh;
            for j in m..=high {
                h[(i, j)] -= f * ort[j];
            }
        }
        h[(m, m - 1)] = scale * g;
        for i in (m + 1)..=high {
            h[(i, m - 1)] = 0.0;
        }
    }
}

/// Eigenvalues of an upper Hessenberg matrix by Francis double-shift QR
/// (EISPACK/JAMA hqr, eigenvalue-only variant). Destroys `h`.
fn hqr_eigenvalues(h: &mut Matrix) -> Result<Vec<(f64, f64)>> {
    let nn = h.rows;
    let eps = f64::EPSILON;
    let mut d = vec![0.0_f64; nn];
    let mut e = vec![0.0_f64; nn];

    let mut norm = 0.0;
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += h[(i, j)].abs();
        }
    }
    if norm == 0.0 {
        return Ok(vec![(0.0, 0.0); nn]);
    }

    let mut n = nn - 1;
    let mut exshift = 0.0;
    let mut iter = 0usize;
    let mut total_iters = 0usize;
    let iter_cap = 50 * nn + 100;

    let (mut p, mut q, mut r, mut s, mut z);
    let (mut w, mut x, mut y);

    loop {
        // Look for a single small subdiagonal element.
        let mut l = n;
        while l > 0 {
            s = h[(l - 1, l - 1)].abs() + h[(l, l)].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[(l, l - 1)].abs() < eps * s {
                break;
            }
            l -= 1;
        }

        if l == n {
            // One root found.
            d[n] = h[(n, n)] + exshift;
            e[n] = 0.0;
            if n == 0 {
                break;
            }
            n -= 1;
            iter = 0;
        } else if l + 1 == n {
            // Two roots found.
            w = h[(n, n - 1)] * h[(n - 1, n)];
            p = (h[(n - 1, n - 1)] - h[(n, n)]) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            x = h[(n, n)] + exshift;
            if q >= 0.0 {
                z = if p >= 0.0 { p + z } else { p - z };
                d[n - 1] = x + z;
                d[n] = if z != 0.0 { x - w / z } else { d[n - 1] };
                e[n - 1] = 0.0;
                e[n] = 0.0;
            } else {
                d[n - 1] = x + p;
                d[n] = x + p;
                e[n - 1] = z;
                e[n] = -z;
            }
            if n <= 1 {
                break;
            }
            n -= 2;
            iter = 0;
        } else {
            // Form shift.
            x = h[(n, n)];
            y = h[(n - 1, n - 1)];
            w = h[(n, n - 1)] * h[(n - 1, n)];

            if iter == 10 {
                // Wilkinson's exceptional shift.
                exshift += x;
                for i in 0..=n {
                    h[(i, i)] -= x;
                }
                s = h[(n, n - 1)].abs() + h[(n - 1, n - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in 0..=n {
                        h[(i, i)] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }

            iter += 1;
            total_iters += 1;
            if total_iters > iter_cap {
                return Err(Error::internal(
                    "QR eigenvalue iteration failed to converge".to_string(),
                ));
            }

            // Look for two consecutive small subdiagonal elements.
            let mut m = n - 2;
            loop {
                z = h[(m, m)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[(m + 1, m)] + h[(m, m + 1)];
                q = h[(m + 1, m + 1)] - z - r - s;
                r = h[(m + 2, m + 1)];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if h[(m, m - 1)].abs() * (q.abs() + r.abs())
                    < eps
                        * (p.abs()
                            * (h[(m - 1, m - 1)].abs() + z.abs() + h[(m + 1, m + 1)].abs()))
                {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=n {
                h[(i, i - 2)] = 0.0;
                if i > m + 2 {
                    h[(i, i - 3)] = 0.0;
                }
            }

            // Double QR step on rows l..=n, columns m..=n.
            for k in m..n {
                let notlast = k != n - 1;
                if k != m {
                    p = h[(k, k - 1)];
                    q = h[(k + 1, k - 1)];
                    r = if notlast { h[(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s == 0.0 {
                    continue;
                }
                if k != m {
                    h[(k, k - 1)] = -s * x;
                } else if l != m {
                    h[(k, k - 1)] = -h[(k, k - 1)];
                }
                p += s;
                x = p / s;
                y = q / s;
                z = r / s;
                q /= p;
                r /= p;

                for j in k..nn {
                    p = h[(k, j)] + q * h[(k + 1, j)];
                    if notlast {
                        p += r * h[(k + 2, j)];
                        h[(k + 2, j)] -= p * z;
                    }
                    h[(k, j)] -= p * x;
                    h[(k + 1, j)] -= p * y;
                }
                let upper = n.min(k + 3);
                for i in 0..=upper {
                    p = x * h[(i, k)] + y * h[(i, k + 1)];
                    if notlast {
                        p += z * h[(i, k + 2)];
                        h[(i, k + 2)] -= p * r;
                    }
                    h[(i, k)] -= p;
                    h[(i, k + 1)] -= p * q;
                }
            }
        }
    }

    Ok(d.into_iter().zip(e).collect())
}

/// LU factorization with partial pivoting. Returns (LU, pivots, sign).
fn lu_factor(a: &Matrix) -> (Matrix, Vec<usize>, f64) {
    assert!(a.is_square());
    let n = a.rows;
    let mut lu = a.clone();
    let mut piv: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    for k in 0..n {
        let mut pmax = lu[(k, k)].abs();
        let mut prow = k;
        for i in (k + 1)..n {
            if lu[(i, k)].abs() > pmax {
                pmax = lu[(i, k)].abs();
                prow = i;
            }
        }
        if prow != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(prow, j)];
                lu[(prow, j)] = tmp;
            }
            piv.swap(k, prow);
            sign = -sign;
        }
        let pivot = lu[(k, k)];
        if pivot == 0.0 {
            continue;
        }
        for i in (k + 1)..n {
            let factor = lu[(i, k)] / pivot;
            lu[(i, k)] = factor;
            for j in (k + 1)..n {
                let sub = factor * lu[(k, j)];
                lu[(i, j)] -= sub;
            }
        }
    }
    (lu, piv, sign)
}

fn lu_solve(lu: &Matrix, piv: &[usize], b: &[f64], tiny_floor: f64) -> Vec<f64> {
    let n = lu.rows;
    let mut x: Vec<f64> = piv.iter().map(|&p| b[p]).collect();
    for i in 1..n {
        for j in 0..i {
            x[i] -= lu[(i, j)] * x[j];
        }
    }
    for i in (0..n).rev() {
        for j in (i + 1)..n {
            x[i] -= lu[(i, j)] * x[j];
        }
        let mut pivot = lu[(i, i)];
        if pivot.abs() < tiny_floor {
            pivot = if pivot < 0.0 { -tiny_floor } else { tiny_floor };
        }
        x[i] /= pivot;
    }
    x
}

/// Determinant via LU (used by tests as an eigenvalue-product cross-check).
pub fn determinant(a: &Matrix) -> f64 {
    let n = a.rows;
    let (lu, _, sign) = lu_factor(a);
    let mut det = sign;
    for i in 0..n {
        det *= lu[(i, i)];
    }
    det
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Eigenvector for a known real eigenvalue by inverse iteration.
///
/// `orth_against` lets the caller peel off previously found vectors of a
/// (near-)degenerate cluster so the returned vector is distinct.
pub fn eigenvector_inverse_iteration(
    a: &Matrix,
    lambda: f64,
    orth_against: &[Vec<f64>],
) -> Result<Vec<f64>> {
    assert!(a.is_square());
    let n = a.rows;
    let scale = a.max_abs().max(lambda.abs()).max(1.0);
    let tiny = f64::EPSILON * scale * n as f64;

    let mut shifted = a.clone();
    for i in 0..n {
        shifted[(i, i)] -= lambda;
    }
    let (lu, piv, _) = lu_factor(&shifted);

    let starts: [fn(usize, usize) -> f64; 3] = [
        |i, _| 1.0 / (1.0 + i as f64),
        |i, _| if i % 2 == 0 { 1.0 } else { -0.5 },
        |i, n| ((i * 2654435761 % n) as f64 + 1.0) / n as f64,
    ];
    for start in starts {
        let mut v: Vec<f64> = (0..n).map(|i| start(i, n)).collect();
        orthogonalize(&mut v, orth_against);
        let nv = norm2(&v);
        if nv == 0.0 {
            continue;
        }
        for x in &mut v {
            *x /= nv;
        }
        for _ in 0..5 {
            let mut w = lu_solve(&lu, &piv, &v, tiny);
            orthogonalize(&mut w, orth_against);
            let nw = norm2(&w);
            if nw == 0.0 || !nw.is_finite() {
                break;
            }
            for x in &mut w {
                *x /= nw;
            }
            v = w;
        }
        let av = a.mul_vec(&v);
        let resid: f64 = av
            .iter()
            .zip(&v)
            .map(|(awi, vi)| (awi - lambda * vi).abs())
            .fold(0.0, f64::max);
        if resid <= 1e-8 * scale {
            return Ok(v);
        }
    }
    Err(Error::internal(format!(
        "inverse iteration failed for eigenvalue {lambda}"
    )))
}

fn orthogonalize(v: &mut [f64], against: &[Vec<f64>]) {
    for u in against {
        assert_eq!(v.len(), u.len(), "orthogonalization dimension mismatch");
        let nu = dot(u, u);
        if nu == 0.0 {
            continue;
        }
        let c = dot(v, u) / nu;
        for (vi, ui) in v.iter_mut().zip(u) {
            *vi -= c * ui;
        }
    }
}

/// All eigenvalues of a real symmetric matrix, ascending.
pub fn symmetric_eigenvalues(a: &Matrix) -> Result<Vec<f64>> {
    let (d, e) = householder_tridiagonalize(a);
    tridiagonal_eigenvalues(&d, &e)
}

/// Householder similarity reduction of a symmetric matrix to tridiagonal
/// form. Returns (diagonal, subdiagonal).
pub fn householder_tridiagonalize(a: &Matrix) -> (Vec<f64>, Vec<f64>) {
    assert!(a.is_square());
    let n = a.rows;
    let mut a = a.clone();
    let mut u = vec![0.0_f64; n];
    for k in 0..n.saturating_sub(2) {
        let col_norm: f64 = (k + 1..n).map(|i| a[(i, k)] * a[(i, k)]).sum::<f64>().sqrt();
        if col_norm == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let alpha = if x0 >= 0.0 { -col_norm } else { col_norm };
        for item in u.iter_mut().take(k + 1) {
            *item = 0.0;
        }
        u[k + 1] = x0 - alpha;
        for i in (k + 2)..n {
            u[i] = a[(i, k)];
        }
        let un = norm2(&u[k + 1..]);
        if un == 0.0 {
            continue;
        }
        for item in u.iter_mut().skip(k + 1) {
            *item /= un;
        }
        // H A H with H = I - 2uuᵀ: A ← A - 2u wᵀ - 2w uᵀ, w = Au - (uᵀAu) u
        let v = a.mul_vec(&u);
        let c = dot(&u, &v);
        let w: Vec<f64> = v.iter().zip(&u).map(|(vi, ui)| vi - c * ui).collect();
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] -= 2.0 * (u[i] * w[j] + w[i] * u[j]);
            }
        }
    }
    let d: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    let e: Vec<f64> = (0..n.saturating_sub(1)).map(|i| a[(i + 1, i)]).collect();
    (d, e)
}

/// Eigenvalues of a symmetric tridiagonal matrix by the implicit-shift QL
/// algorithm (EISPACK tql lineage), ascending.
pub fn tridiagonal_eigenvalues(diag: &[f64], sub: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    assert_eq!(sub.len(), n - 1);
    let mut d = diag.to_vec();
    let mut e = vec![0.0_f64; n];
    e[..n - 1].copy_from_slice(sub);

    let eps = f64::EPSILON;
    let mut f = 0.0_f64;
    let mut tst1 = 0.0_f64;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(Error::internal(
                        "QL iteration failed to converge".to_string(),
                    ));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for item in d.iter_mut().take(n).skip(l + 2) {
                    *item -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0_f64;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0_f64;
                let mut s2 = 0.0_f64;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let gg = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * gg;
                    d[i + 1] = h + s * (c * gg + s * d[i]);
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Number of eigenvalues of the symmetric tridiagonal matrix strictly below
/// `x`, by Sturm sequence.
fn sturm_count(diag: &[f64], sub: &[f64], x: f64) -> usize {
    let n = diag.len();
    let tiny = f64::MIN_POSITIVE;
    let mut count = 0usize;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..n {
        if q == 0.0 {
            q = tiny;
        }
        q = diag[i] - x - sub[i - 1] * sub[i - 1] / q;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Eigenvalues of a symmetric tridiagonal matrix strictly below `bound`,
/// ascending, by Sturm bisection.
pub fn tridiagonal_eigenvalues_below(diag: &[f64], sub: &[f64], bound: f64) -> Vec<f64> {
    let n = diag.len();
    if n == 0 {
        return Vec::new();
    }
    // Gershgorin lower bound.
    let mut lo = f64::INFINITY;
    for i in 0..n {
        let left = if i > 0 { sub[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < n { sub[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - left - right);
    }
    let k = sturm_count(diag, sub, bound);
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        // j-th eigenvalue = inf { x : count(x) >= j+1 }
        let (mut a, mut b) = (lo, bound);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if sturm_count(diag, sub, mid) >= j + 1 {
                b = mid;
            } else {
                a = mid;
            }
        }
        out.push(0.5 * (a + b));
    }
    out
}

/// Eigenvector of a symmetric tridiagonal matrix for a known eigenvalue, by
/// inverse iteration with a pivoting tridiagonal solve. Normalized to unit
/// Euclidean norm.
pub fn tridiagonal_eigenvector(diag: &[f64], sub: &[f64], lambda: f64) -> Vec<f64> {
    let n = diag.len();
    let scale = diag
        .iter()
        .chain(sub.iter())
        .fold(lambda.abs().max(1.0), |acc, v| acc.max(v.abs()));
    let tiny = f64::EPSILON * scale * 4.0;

    // Rows of (T - λI) as (sub, diag, super); factored with partial
    // pivoting, which introduces a second superdiagonal.
    let mut dd: Vec<f64> = diag.iter().map(|&v| v - lambda).collect();
    let mut du: Vec<f64> = (0..n - 1).map(|i| sub[i]).collect();
    let mut du2 = vec![0.0_f64; n];
    let mut dl: Vec<f64> = (0..n - 1).map(|i| sub[i]).collect();
    let mut swap = vec![false; n];

    for k in 0..n - 1 {
        if dl[k].abs() > dd[k].abs() {
            swap[k] = true;
            std::mem::swap(&mut dd[k], &mut dl[k]);
            let tmp = du[k];
            du[k] = dd[k + 1];
            dd[k + 1] = tmp;
            if k + 1 < n - 1 {
                du2[k] = du[k + 1];
                du[k + 1] = 0.0;
            }
        }
        if dd[k].abs() < tiny {
            dd[k] = tiny;
        }
        let factor = dl[k] / dd[k];
        dl[k] = factor;
        dd[k + 1] -= factor * du[k];
        if k + 1 < n - 1 {
            du[k + 1] -= factor * du2[k];
        }
    }
    if dd[n - 1].abs() < tiny {
        dd[n - 1] = tiny;
    }

    let solve = |b: &[f64]| -> Vec<f64> {
        let mut x = b.to_vec();
        for k in 0..n - 1 {
            if swap[k] {
                x.swap(k, k + 1);
            }
            let sub_term = dl[k] * x[k];
            x[k + 1] -= sub_term;
        }
        for k in (0..n).rev() {
            let mut v = x[k];
            if k + 1 < n {
                v -= du[k] * x[k + 1];
            }
            if k + 2 < n {
                v -= du2[k] * x[k + 2];
            }
            x[k] = v / dd[k];
        }
        x
    };

    let mut v = vec![1.0_f64; n];
    for _ in 0..4 {
        let w = solve(&v);
        let nw = norm2(&w);
        if nw == 0.0 || !nw.is_finite() {
            break;
        }
        v = w.into_iter().map(|x| x / nw).collect();
    }
    v
}

/// Least squares solve min ‖A X − B‖ by Householder QR, for A with full
/// column rank and at least as many rows as columns.
///
/// Returns (X, condition estimate) where the condition estimate is the ratio
/// of extreme |R| diagonal magnitudes — cheap, adequate for flagging
/// hopeless bases.
pub fn least_squares(a: &Matrix, b: &Matrix) -> Result<(Matrix, f64)> {
    let mrows = a.rows;
    let ncols = a.cols;
    assert!(mrows >= ncols && ncols > 0);
    assert_eq!(b.rows, mrows);
    let mut qr = a.clone();
    let mut rhs = b.clone();
    let nrhs = b.cols;

    for k in 0..ncols {
        let col_norm: f64 = (k..mrows).map(|i| qr[(i, k)] * qr[(i, k)]).sum::<f64>().sqrt();
        if col_norm == 0.0 {
            return Err(Error::Conditioning(
                "rank-deficient least-squares basis".to_string(),
            ));
        }
        let alpha = if qr[(k, k)] >= 0.0 { -col_norm } else { col_norm };
        let mut u = vec![0.0_f64; mrows];
        u[k] = qr[(k, k)] - alpha;
        for i in (k + 1)..mrows {
            u[i] = qr[(i, k)];
        }
        let un = norm2(&u[k..]);
        if un == 0.0 {
            continue;
        }
        for item in u.iter_mut().skip(k) {
            *item /= un;
        }
        for j in k..ncols {
            let mut f = 0.0;
            for i in k..mrows {
                f += u[i] * qr[(i, j)];
            }
            for i in k..mrows {
                qr[(i, j)] -= 2.0 * f * u[i];
            }
        }
        for j in 0..nrhs {
            let mut f = 0.0;
            for i in k..mrows {
                f += u[i] * rhs[(i, j)];
            }
            for i in k..mrows {
                rhs[(i, j)] -= 2.0 * f * u[i];
            }
        }
        qr[(k, k)] = alpha;
    }

    let mut rmax = 0.0_f64;
    let mut rmin = f64::INFINITY;
    for k in 0..ncols {
        let v = qr[(k, k)].abs();
        rmax = rmax.max(v);
        rmin = rmin.min(v);
    }
    let cond = if rmin == 0.0 { f64::INFINITY } else { rmax / rmin };

    let mut x = Matrix::zeros(ncols, nrhs);
    for j in 0..nrhs {
        for i in (0..ncols).rev() {
            let mut v = rhs[(i, j)];
            for k in (i + 1)..ncols {
                v -= qr[(i, k)] * x[(k, j)];
            }
            x[(i, j)] = v / qr[(i, i)];
        }
    }
    Ok((x, cond))
}
