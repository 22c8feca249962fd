//! Small dense complex linear algebra: just enough for 5x5 spectral algebra
//! and the quadrature-grid oracle. Row-major, `Complex64` throughout.

use num_complex::Complex64;
use thiserror::Error;

pub type Cx = Complex64;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("matrix is singular (pivot magnitude {0:.3e})")]
    Singular(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("eigensolver did not converge after {0} sweeps")]
    NoConvergence(usize),
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Cx>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat { rows, cols, data: vec![Cx::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Cx::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Cx>]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        assert!(rows.iter().all(|row| row.len() == c));
        CMat { rows: r, cols: c, data: rows.iter().flatten().copied().collect() }
    }

    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), rows * cols);
        CMat { rows, cols, data: entries.iter().map(|&x| Cx::new(x, 0.0)).collect() }
    }

    pub fn transpose(&self) -> Self {
        let mut t = CMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn conj(&self) -> Self {
        CMat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        self.transpose().conj()
    }

    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = CMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                if a == Cx::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(l, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[Cx]) -> Vec<Cx> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn add(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        CMat { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        CMat { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: Cx) -> CMat {
        CMat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Spectral norm via the largest eigenvalue of A^H A (Hermitian Jacobi).
    pub fn two_norm(&self) -> f64 {
        let g = self.adjoint().matmul(self);
        let ev = hermitian_eigenvalues(&g).expect("gram eigensolve");
        ev.into_iter().fold(0.0f64, f64::max).max(0.0).sqrt()
    }

    /// Singular values, descending (through the Hermitian Gram matrix).
    pub fn singular_values(&self) -> Vec<f64> {
        let g = self.adjoint().matmul(self);
        let mut ev = hermitian_eigenvalues(&g).expect("gram eigensolve");
        ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
        ev.into_iter().map(|x| x.max(0.0).sqrt()).collect()
    }

    fn lu(&self) -> Result<(CMat, Vec<usize>, i32), LinalgError> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1i32;
        for col in 0..n {
            let (piv, pmag) = (col..n)
                .map(|r| (r, a[(r, col)].norm()))
                .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
                .unwrap();
            if pmag == 0.0 {
                return Err(LinalgError::Singular(pmag));
            }
            if piv != col {
                for j in 0..n {
                    let tmp = a[(col, j)];
                    a[(col, j)] = a[(piv, j)];
                    a[(piv, j)] = tmp;
                }
                perm.swap(col, piv);
                sign = -sign;
            }
            let d = a[(col, col)];
            for r in col + 1..n {
                let f = a[(r, col)] / d;
                a[(r, col)] = f;
                for j in col + 1..n {
                    let s = f * a[(col, j)];
                    a[(r, j)] -= s;
                }
            }
        }
        Ok((a, perm, sign))
    }

    pub fn det(&self) -> Cx {
        match self.lu() {
            Ok((lu, _, sign)) => {
                let mut d = Cx::new(sign as f64, 0.0);
                for i in 0..self.rows {
                    d *= lu[(i, i)];
                }
                d
            }
            Err(_) => Cx::new(0.0, 0.0),
        }
    }

    pub fn solve(&self, rhs: &[Cx]) -> Result<Vec<Cx>, LinalgError> {
        let n = self.rows;
        assert_eq!(rhs.len(), n);
        let (lu, perm, _) = self.lu()?;
        let mut x: Vec<Cx> = perm.iter().map(|&p| rhs[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let s = lu[(i, j)] * x[j];
                x[i] -= s;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let s = lu[(i, j)] * x[j];
                x[i] -= s;
            }
            x[i] /= lu[(i, i)];
        }
        Ok(x)
    }

    pub fn solve_mat(&self, rhs: &CMat) -> Result<CMat, LinalgError> {
        let mut out = CMat::zeros(self.rows, rhs.cols);
        for j in 0..rhs.cols {
            let col: Vec<Cx> = (0..rhs.rows).map(|i| rhs[(i, j)]).collect();
            let x = self.solve(&col)?;
            for i in 0..self.rows {
                out[(i, j)] = x[i];
            }
        }
        Ok(out)
    }

    pub fn inverse(&self) -> Result<CMat, LinalgError> {
        self.solve_mat(&CMat::identity(self.rows))
    }

    /// Adjugate via cofactors; well defined also for singular matrices.
    pub fn adjugate(&self) -> CMat {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut adj = CMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let minor = self.minor(j, i);
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                adj[(i, j)] = minor.det_small() * sign;
            }
        }
        adj
    }

    fn minor(&self, drop_row: usize, drop_col: usize) -> CMat {
        let n = self.rows;
        let mut m = CMat::zeros(n - 1, n - 1);
        let mut r = 0;
        for i in 0..n {
            if i == drop_row {
                continue;
            }
            let mut c = 0;
            for j in 0..n {
                if j == drop_col {
                    continue;
                }
                m[(r, c)] = self[(i, j)];
                c += 1;
            }
            r += 1;
        }
        m
    }

    /// Cofactor-expansion determinant; exact on zero-heavy small matrices
    /// where LU pivoting would bail out.
    fn det_small(&self) -> Cx {
        let n = self.rows;
        match n {
            0 => Cx::new(1.0, 0.0),
            1 => self[(0, 0)],
            2 => self[(0, 0)] * self[(1, 1)] - self[(0, 1)] * self[(1, 0)],
            _ => {
                let mut s = Cx::new(0.0, 0.0);
                for j in 0..n {
                    if self[(0, j)] == Cx::new(0.0, 0.0) {
                        continue;
                    }
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    s += self[(0, j)] * self.minor(0, j).det_small() * sign;
                }
                s
            }
        }
    }

    /// Matrix exponential by scaling and squaring with the Pade-13 approximant.
    pub fn expm(&self) -> CMat {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let theta13 = 5.371920351148152;
        let nrm = self.one_norm();
        let s = if nrm > theta13 { (nrm / theta13).log2().ceil() as i32 } else { 0 };
        let a = self.scale(Cx::new(0.5f64.powi(s), 0.0));

        const B: [f64; 14] = [
            64764752532480000.0,
            32382376266240000.0,
            7771770303897600.0,
            1187353796428800.0,
            129060195264000.0,
            10559470521600.0,
            670442572800.0,
            33522128640.0,
            1323241920.0,
            40840800.0,
            960960.0,
            16380.0,
            182.0,
            1.0,
        ];
        let a2 = a.matmul(&a);
        let a4 = a2.matmul(&a2);
        let a6 = a2.matmul(&a4);
        let id = CMat::identity(n);
        let b = |i: usize| Cx::new(B[i], 0.0);
        let u_inner = a6
            .scale(b(13))
            .add(&a4.scale(b(11)))
            .add(&a2.scale(b(9)));
        let u = a.matmul(
            &a6.matmul(&u_inner)
                .add(&a6.scale(b(7)))
                .add(&a4.scale(b(5)))
                .add(&a2.scale(b(3)))
                .add(&id.scale(b(1))),
        );
        let v_inner = a6
            .scale(b(12))
            .add(&a4.scale(b(10)))
            .add(&a2.scale(b(8)));
        let v = a6
            .matmul(&v_inner)
            .add(&a6.scale(b(6)))
            .add(&a4.scale(b(4)))
            .add(&a2.scale(b(2)))
            .add(&id.scale(b(0)));
        let mut r = v.sub(&u).solve_mat(&v.add(&u)).expect("expm solve");
        for _ in 0..s {
            r = r.matmul(&r);
        }
        r
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = Cx;
    fn index(&self, (i, j): (usize, usize)) -> &Cx {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Cx {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// For the 2x2 block [[a, b],[b*, g]] the unitary U = [[c, -e^{ip}s],[e^{-ip}s, c]]
/// with b = |b| e^{ip} and 2t = atan2(2|b|, a-g) annihilates the off-diagonal.
pub fn hermitian_eigenvalues(a: &CMat) -> Result<Vec<f64>, LinalgError> {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut m = a.clone();
    let scale = m.frobenius_norm().max(1e-300);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += m[(i, j)].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            return Ok((0..n).map(|i| m[(i, i)].re).collect());
        }
        for p in 0..n {
            for q in p + 1..n {
                let beta = m[(p, q)];
                let g = beta.norm();
                if g <= 1e-300 {
                    continue;
                }
                let alpha = m[(p, p)].re;
                let gamma = m[(q, q)].re;
                let theta = 0.5 * (2.0 * g).atan2(alpha - gamma);
                let (s_r, c) = theta.sin_cos();
                let w = (beta / g) * s_r; // e^{i phi} sin(theta)
                for i in 0..n {
                    let aip = m[(i, p)];
                    let aiq = m[(i, q)];
                    m[(i, p)] = aip * c + aiq * w.conj();
                    m[(i, q)] = -aip * w + aiq * c;
                }
                for j in 0..n {
                    let apj = m[(p, j)];
                    let aqj = m[(q, j)];
                    m[(p, j)] = apj * c + aqj * w;
                    m[(q, j)] = -apj * w.conj() + aqj * c;
                }
            }
        }
    }
    Err(LinalgError::NoConvergence(100))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Cx {
        Cx::new(re, im)
    }

    #[test]
    fn solve_and_det_roundtrip() {
        let a = CMat::from_rows(&[
            vec![c(2.0, 1.0), c(0.0, -1.0), c(1.0, 0.0)],
            vec![c(0.5, 0.0), c(3.0, 0.0), c(-1.0, 2.0)],
            vec![c(0.0, 0.3), c(1.0, 1.0), c(4.0, -0.5)],
        ]);
        let x = vec![c(1.0, -2.0), c(0.5, 0.5), c(-3.0, 1.0)];
        let b = a.matvec(&x);
        let xs = a.solve(&b).unwrap();
        for (u, v) in x.iter().zip(&xs) {
            assert!((u - v).norm() < 1e-12);
        }
        let inv = a.inverse().unwrap();
        let should_be_id = a.matmul(&inv);
        assert!(should_be_id.sub(&CMat::identity(3)).max_abs() < 1e-12);
        // det(A) * det(A^-1) = 1
        assert!((a.det() * inv.det() - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn adjugate_identity() {
        let a = CMat::from_rows(&[
            vec![c(1.0, 0.0), c(2.0, -1.0), c(0.0, 0.0), c(0.0, 1.0)],
            vec![c(0.0, 0.0), c(1.5, 0.0), c(2.0, 2.0), c(0.0, 0.0)],
            vec![c(3.0, 0.0), c(0.0, 0.0), c(1.0, -1.0), c(0.5, 0.0)],
            vec![c(0.0, -2.0), c(1.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)],
        ]);
        let adj = a.adjugate();
        let prod = a.matmul(&adj);
        let d = a.det();
        let target = CMat::identity(4).scale(d);
        assert!(prod.sub(&target).max_abs() < 1e-10 * d.norm().max(1.0));
    }

    #[test]
    fn expm_diagonal_and_nilpotent() {
        let a = CMat::from_rows(&[
            vec![c(0.0, 1.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(-2.0, 0.0)],
        ]);
        let e = a.expm();
        assert!((e[(0, 0)] - Cx::new(1.0f64.cos(), 1.0f64.sin())).norm() < 1e-14);
        assert!((e[(1, 1)] - c((-2.0f64).exp(), 0.0)).norm() < 1e-14);

        // nilpotent: exp([[0,1],[0,0]]) = [[1,1],[0,1]]
        let n = CMat::from_rows(&[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 0.0)]]);
        let en = n.expm();
        assert!((en[(0, 1)] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn expm_semigroup() {
        let a = CMat::from_rows(&[
            vec![c(-0.3, 2.0), c(1.0, -0.5), c(0.2, 0.0)],
            vec![c(0.0, 0.7), c(-1.0, 0.0), c(0.4, 0.4)],
            vec![c(0.1, 0.0), c(0.0, -0.2), c(-0.5, 1.0)],
        ]);
        let e1 = a.scale(c(0.6, 0.0)).expm();
        let e2 = a.scale(c(0.4, 0.0)).expm();
        let e = a.expm();
        assert!(e1.matmul(&e2).sub(&e).max_abs() < 1e-12);
    }

    #[test]
    fn hermitian_jacobi_known_spectrum() {
        // A = Q D Q^H with simple unitary-ish construction
        let a = CMat::from_rows(&[
            vec![c(2.0, 0.0), c(0.0, 1.0), c(0.5, 0.0)],
            vec![c(0.0, -1.0), c(3.0, 0.0), c(0.0, 0.25)],
            vec![c(0.5, 0.0), c(0.0, -0.25), c(1.0, 0.0)],
        ]);
        let mut ev = hermitian_eigenvalues(&a).unwrap();
        ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
        // invariants: trace and Frobenius norm
        let tr: f64 = ev.iter().sum();
        assert!((tr - 6.0).abs() < 1e-12);
        let fr: f64 = ev.iter().map(|x| x * x).sum();
        assert!((fr - a.frobenius_norm().powi(2)).abs() < 1e-10);
        // char poly residual at each eigenvalue
        for &l in &ev {
            let shifted = a.sub(&CMat::identity(3).scale(c(l, 0.0)));
            assert!(shifted.det().norm() < 1e-10);
        }
    }

    #[test]
    fn two_norm_matches_known() {
        let a = CMat::from_rows(&[vec![c(3.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 4.0)]]);
        assert!((a.two_norm() - 4.0).abs() < 1e-12);
        let sv = a.singular_values();
        assert!((sv[0] - 4.0).abs() < 1e-12 && (sv[1] - 3.0).abs() < 1e-12);
    }
}
