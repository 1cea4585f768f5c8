use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex<f64>>;

/// Relative entry asymmetry tolerated before a matrix is refused as non-Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Spectral decomposition `M = V diag(values) V*` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: DVector<f64>,
    pub vectors: CMat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatFn {
    Exp,
    Log,
    Sqrt,
    InvSqrt,
}

pub(crate) fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub(crate) fn hermitian_defect(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub(crate) fn check_hermitian(m: &CMat) -> Result<()> {
    if !m.is_square() {
        return Err(Error::contract(format!("matrix must be square, got {}x{}", m.nrows(), m.ncols())));
    }
    let scale = max_abs(m);
    let defect = hermitian_defect(m);
    if defect > HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::contract(format!("matrix is not Hermitian (asymmetry {defect:e})")));
    }
    Ok(())
}

/// Eigen-decomposition of a Hermitian matrix.
pub fn pd_eig(m: &CMat) -> Result<Eigen> {
    check_hermitian(m)?;
    let n = m.nrows();
    // exact symmetrization so the solver sees a Hermitian input
    let sym = (m + m.adjoint()).scale(0.5);
    let is_diagonal = (0..n).all(|i| (0..n).all(|j| i == j || sym[(i, j)].norm() == 0.0));
    let (raw_values, raw_vectors) = if is_diagonal {
        (DVector::from_fn(n, |i, _| sym[(i, i)].re), CMat::identity(n, n))
    } else {
        let se = sym.symmetric_eigen();
        (se.eigenvalues, se.eigenvectors)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| raw_values[a].total_cmp(&raw_values[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| raw_values[i]));
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &raw_vectors.column(src));
    }
    Ok(Eigen { values, vectors })
}

/// `V diag(values) V*`.
pub fn reconstruct(eig: &Eigen) -> CMat {
    apply_spectrum(&eig.vectors, eig.values.iter().copied())
}

fn apply_spectrum(v: &CMat, values: impl Iterator<Item = f64>) -> CMat {
    let mut scaled = v.clone();
    for (j, lam) in values.enumerate() {
        scaled.column_mut(j).scale_mut(lam);
    }
    &scaled * v.adjoint()
}

/// Applies a scalar function to a Hermitian matrix through its eigenframe.
pub fn mat_fn(m: &CMat, func: MatFn) -> Result<CMat> {
    let eig = pd_eig(m)?;
    if func != MatFn::Exp {
        if let Some(&bad) = eig.values.iter().find(|&&l| !(l > 0.0)) {
            return Err(Error::domain(format!("{func:?} needs positive eigenvalues"), bad));
        }
    }
    let mapped = eig.values.iter().map(|&l| match func {
        MatFn::Exp => l.exp(),
        MatFn::Log => l.ln(),
        MatFn::Sqrt => l.sqrt(),
        MatFn::InvSqrt => 1.0 / l.sqrt(),
    });
    Ok(apply_spectrum(&eig.vectors, mapped))
}
