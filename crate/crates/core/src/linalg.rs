//! Dense complex linear-algebra helpers shared by the detector, the
//! asymptotic analysis and the beamforming code.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::random::complex_normal;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const J: C64 = C64 { re: 0.0, im: 1.0 };

/// Eigen-decomposition of a Hermitian matrix, eigenvalues sorted in decreasing order.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Eigenvectors as columns, ordered like `values`.
    pub vectors: CMat,
}

pub fn hermitian_eigen(a: &CMat) -> Result<HermitianEigen> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigen-decomposition of a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(HermitianEigen {
            values: Vec::new(),
            vectors: CMat::zeros(0, 0),
        });
    }
    let sym = hermitian_part(a);
    let eig = sym
        .try_symmetric_eigen(1e-15, 10_000)
        .ok_or_else(|| Error::NumericalFailure("Hermitian eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

/// Eigenvalues only, decreasing.
pub fn hermitian_eigenvalues(a: &CMat) -> Result<Vec<f64>> {
    Ok(hermitian_eigen(a)?.values)
}

pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

/// Largest relative deviation from Hermitian symmetry.
pub fn hermitian_defect(a: &CMat) -> f64 {
    let scale = a.norm().max(1.0);
    (a - a.adjoint()).norm() / scale
}

/// Inverse of a Hermitian positive-definite matrix.
pub fn inverse_hpd(a: &CMat) -> Result<CMat> {
    let chol = hermitian_part(a)
        .cholesky()
        .ok_or_else(|| Error::NumericalFailure("matrix is not positive definite".into()))?;
    Ok(chol.inverse())
}

/// Solves `a x = b` for Hermitian positive-definite `a`.
pub fn solve_hpd(a: &CMat, b: &CMat) -> Result<CMat> {
    let chol = hermitian_part(a)
        .cholesky()
        .ok_or_else(|| Error::NumericalFailure("matrix is not positive definite".into()))?;
    Ok(chol.solve(b))
}

/// Real trace of a (nominally Hermitian) product `tr(a b)`.
pub fn trace_product_re(a: &CMat, b: &CMat) -> f64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    acc
}

pub fn outer(a: &CVec, b: &CVec) -> CMat {
    a * b.adjoint()
}

/// Quadratic form `v^H A v` (real part).
pub fn quad_form(a: &CMat, v: &CVec) -> f64 {
    v.dotc(&(a * v)).re
}

/// Matrix with i.i.d. CN(0, variance) entries.
pub fn cn_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, variance: f64) -> CMat {
    // column-major fill keeps draws reproducible regardless of shape iteration
    let mut m = CMat::zeros(rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            m[(r, c)] = complex_normal(rng, variance);
        }
    }
    m
}

pub fn cn_vector<R: Rng + ?Sized>(rng: &mut R, n: usize, variance: f64) -> CVec {
    CVec::from_fn(n, |_, _| complex_normal(rng, variance))
}

/// Haar-distributed unitary matrix (QR of a complex Gaussian matrix with phase fix).
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let g = cn_matrix(rng, n, n, 1.0);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// Principal square root of a Hermitian PSD matrix (negative eigenvalues clipped).
pub fn psd_sqrt(a: &CMat) -> Result<CMat> {
    let eig = hermitian_eigen(a)?;
    let n = a.nrows();
    let mut out = CMat::zeros(n, n);
    for (k, &lam) in eig.values.iter().enumerate() {
        if lam <= 0.0 {
            continue;
        }
        let v = eig.vectors.column(k);
        out += (v * v.adjoint()).scale(lam.sqrt());
    }
    Ok(out)
}

/// `A^H B` through four real products, which take the blocked f64 GEMM path.
pub fn adjoint_product(a: &CMat, b: &CMat) -> CMat {
    let (ar, ai) = (a.map(|v| v.re).transpose(), a.map(|v| v.im).transpose());
    let (br, bi) = (b.map(|v| v.re), b.map(|v| v.im));
    let re = &ar * &br + &ai * &bi;
    let im = &ar * &bi - &ai * &br;
    re.zip_map(&im, C64::new)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::master_rng;

    #[test]
    fn adjoint_product_matches_the_generic_product() {
        let mut rng = master_rng(8);
        let a = cn_matrix(&mut rng, 7, 5, 1.0);
        let b = cn_matrix(&mut rng, 7, 3, 1.0);
        assert!((adjoint_product(&a, &b) - a.adjoint() * &b).norm() < 1e-12);
    }

    #[test]
    fn eigen_residual_is_small() {
        let mut rng = master_rng(3);
        let g = cn_matrix(&mut rng, 12, 12, 1.0);
        let a = &g * g.adjoint();
        let eig = hermitian_eigen(&a).unwrap();
        for w in eig.values.windows(2) {
            assert!(w[0] >= w[1]);
        }
        for (k, &lam) in eig.values.iter().enumerate() {
            let v = eig.vectors.column(k).into_owned();
            let r = (&a * &v - v.scale(lam)).norm();
            assert!(r <= 1e-10 * a.norm(), "residual {r}");
        }
    }

    #[test]
    fn unitary_is_unitary() {
        let mut rng = master_rng(5);
        let u = random_unitary(&mut rng, 7);
        let e = (&u * u.adjoint() - CMat::identity(7, 7)).norm();
        assert!(e < 1e-12);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let mut rng = master_rng(9);
        let g = cn_matrix(&mut rng, 5, 3, 1.0);
        let a = &g * g.adjoint();
        let s = psd_sqrt(&a).unwrap();
        assert!((&s * &s - &a).norm() < 1e-10 * a.norm());
    }
}
