//! Shared numerical kernels: adaptive quadrature, Hermitian eigen-decomposition,
//! spectral matrix functions and finite-difference stencils on uniform time grids.

mod finite_diff;
mod linalg;
mod quadrature;

pub use finite_diff::{fd_derivative, fornberg_weights, PathValue, SampledPath};
pub(crate) use linalg::{check_hermitian, max_abs};
pub use linalg::{mat_fn, pd_eig, reconstruct, CMat, Eigen, MatFn, HERMITIAN_TOL};
pub use quadrature::{
    gauss_legendre, integrate, integrate_unit, Integral, QuadratureRule, QuadratureSpec,
};

/// `log(sum(exp(v)))` without overflow.
pub fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Numerically stable `log(1 + e^x)`.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// The logistic function `e^x / (1 + e^x)`.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Inverse of [`logistic`].
pub fn logit(p: f64) -> f64 {
    p.ln() - (-p).ln_1p()
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_handles_large_exponents() {
        let v = log_sum_exp([1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(Vec::<f64>::new()), f64::NEG_INFINITY);
    }

    #[test]
    fn logistic_and_logit_invert() {
        for &x in &[-40.0, -3.0, 0.0, 0.5, 12.0] {
            assert!((logit(logistic(x)) - x).abs() < 1e-9 * (1.0 + x.abs()));
        }
        assert!((softplus(-800.0)).abs() < 1e-300);
        assert!((softplus(800.0) - 800.0).abs() < 1e-12);
    }

    #[test]
    fn slope_of_exact_power_law() {
        let xs: Vec<f64> = [1.0f64, 2.0, 4.0, 8.0].iter().map(|v| v.ln()).collect();
        let ys: Vec<f64> = [1.0f64, 2.0, 4.0, 8.0].iter().map(|v| (3.0 * v.powi(-2)).ln()).collect();
        assert!((ls_slope(&xs, &ys) + 2.0).abs() < 1e-12);
    }
}
