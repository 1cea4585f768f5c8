//! The symmetric space of positive-definite Hermitian forms with the metric
//! `(A, B)_H = Tr(A H^-1 B H^-1)`.
//!
//! Besides the general matrix routines there are fast paths for diagonal
//! forms stored by their log-diagonal, which is how the quantized CP^1 model
//! represents every point it produces. In an orthonormal frame a diagonal
//! form `diag(e^l)` has velocity `l'` and covariant acceleration `l''`.

use nalgebra::{Complex, DMatrix};
use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{
    fd_derivative, mat_fn, pd_eig, CMat, MatFn, SampledPath,
};
use crate::numerics::{check_hermitian, max_abs};

/// Eigenvalues below this fraction of the largest one are treated as singular.
pub const PD_TOL: f64 = 1e-12;

/// A point of the symmetric space: an N×N positive-definite Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianForm {
    m: CMat,
}

/// A Hermitian matrix read as a tangent vector at some form.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentForm {
    m: CMat,
}

impl HermitianForm {
    pub fn new(m: CMat) -> Result<Self> {
        check_hermitian(&m)?;
        let eig = pd_eig(&m)?;
        let top = eig.values[eig.values.len() - 1];
        let low = eig.values[0];
        if !(top > 0.0) || low < PD_TOL * top {
            return Err(Error::domain("Hermitian form is not positive definite", low));
        }
        Ok(Self { m })
    }

    pub fn identity(n: usize) -> Self {
        Self { m: CMat::identity(n, n) }
    }

    pub fn from_diagonal(d: &[f64]) -> Result<Self> {
        let n = d.len();
        Self::new(CMat::from_fn(n, n, |i, j| if i == j { Complex::new(d[i], 0.0) } else { Complex::new(0.0, 0.0) }))
    }

    pub fn from_real(n: usize, row_major: &[f64]) -> Result<Self> {
        Self::new(CMat::from_row_slice(n, n, &row_major.iter().map(|&x| Complex::new(x, 0.0)).collect::<Vec<_>>()))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn inverse(&self) -> CMat {
        self.m.clone().try_inverse().expect("positive-definite forms are invertible")
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.m[(i, j)].norm() == 0.0))
    }

    /// Congruence `G* H G`.
    pub fn congruence(&self, g: &CMat) -> Result<Self> {
        Self::new(g.adjoint() * &self.m * g)
    }
}

impl TangentForm {
    pub fn new(m: CMat) -> Result<Self> {
        check_hermitian(&m)?;
        Ok(Self { m: (&m + m.adjoint()).scale(0.5) })
    }

    /// Hermitian part of `m`, for matrices that are Hermitian up to rounding by construction.
    pub(crate) fn hermitian_part(m: CMat) -> Self {
        Self { m: (&m + m.adjoint()).scale(0.5) }
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self { m: CMat::from_fn(n, n, |i, j| if i == j { Complex::new(d[i], 0.0) } else { Complex::new(0.0, 0.0) }) }
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }
}

fn same_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::contract(format!("dimension mismatch: {a} vs {b}")));
    }
    Ok(())
}

/// `Tr(A H^-1 B H^-1)`.
pub fn inner(h: &HermitianForm, a: &TangentForm, b: &TangentForm) -> Result<f64> {
    same_dim(h.dim(), a.dim())?;
    same_dim(h.dim(), b.dim())?;
    let hi = h.inverse();
    Ok((&a.m * &hi * &b.m * &hi).trace().re)
}

/// Length of a tangent vector in the `inner` metric.
pub fn norm(h: &HermitianForm, a: &TangentForm) -> Result<f64> {
    Ok(inner(h, a, a)?.max(0.0).sqrt())
}

/// `H0^{-1/2} H1 H0^{-1/2}` together with `H0^{1/2}`.
fn relative_position(h0: &HermitianForm, h1: &HermitianForm) -> Result<(CMat, CMat)> {
    same_dim(h0.dim(), h1.dim())?;
    let s = mat_fn(&h0.m, MatFn::Sqrt)?;
    let si = mat_fn(&h0.m, MatFn::InvSqrt)?;
    let rel = &si * &h1.m * &si;
    Ok((s, (&rel + rel.adjoint()).scale(0.5)))
}

/// The geodesic `H0^{1/2} exp(t A) H0^{1/2}` through `H0` (t = 0) and `H1` (t = 1).
pub fn geodesic(h0: &HermitianForm, h1: &HermitianForm, t: f64) -> Result<HermitianForm> {
    let (s, rel) = relative_position(h0, h1)?;
    let a = mat_fn(&rel, MatFn::Log)?;
    let e = mat_fn(&a.scale(t), MatFn::Exp)?;
    let out = &s * e * &s;
    HermitianForm::new((&out + out.adjoint()).scale(0.5))
}

/// Velocity of [`geodesic`] at time `t`.
pub fn geodesic_velocity(h0: &HermitianForm, h1: &HermitianForm, t: f64) -> Result<TangentForm> {
    let (s, rel) = relative_position(h0, h1)?;
    let a = mat_fn(&rel, MatFn::Log)?;
    let e = mat_fn(&a.scale(t), MatFn::Exp)?;
    Ok(TangentForm::hermitian_part(&s * (&a * e) * &s))
}

/// Geodesic distance `sqrt(sum log^2 λ_i)`, λ the spectrum of `H0^{-1} H1`.
pub fn distance(h0: &HermitianForm, h1: &HermitianForm) -> Result<f64> {
    let (_, rel) = relative_position(h0, h1)?;
    let eig = pd_eig(&rel)?;
    if let Some(&bad) = eig.values.iter().find(|&&l| !(l > 0.0)) {
        return Err(Error::domain("relative position lost positivity", bad));
    }
    Ok(eig.values.iter().map(|l| l.ln().powi(2)).sum::<f64>().sqrt())
}

/// Distance between diagonal forms given by their log-diagonals.
pub fn log_diag_distance(l0: &[f64], l1: &[f64]) -> Result<f64> {
    same_dim(l0.len(), l1.len())?;
    Ok(l0.iter().zip(l1).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt())
}

/// `Ḧ - Ḣ H^-1 Ḣ` at grid index `index`, derivatives by fourth-order differences.
pub fn covariant_accel(path: &SampledPath<HermitianForm>, index: usize) -> Result<TangentForm> {
    let mats = path.map(|h| h.m.clone());
    let hd = fd_derivative(&mats, 1, index)?;
    let hdd = fd_derivative(&mats, 2, index)?;
    let hi = path.values()[index].inverse();
    Ok(TangentForm::hermitian_part(&hdd - &hd * hi * &hd))
}

/// Euclidean comparison angle at `hb` of the triangle `(ha, hb, hc)`.
pub fn comparison_angle(ha: &HermitianForm, hb: &HermitianForm, hc: &HermitianForm) -> Result<f64> {
    let dab = distance(ha, hb)?;
    let dbc = distance(hb, hc)?;
    let dac = distance(ha, hc)?;
    angle_from_sides(dab, dbc, dac)
}

/// Law-of-cosines angle opposite `opposite`, between sides `left` and `right`.
pub fn angle_from_sides(left: f64, right: f64, opposite: f64) -> Result<f64> {
    let scale = left.max(right).max(opposite).max(1.0);
    if left <= 1e-14 * scale || right <= 1e-14 * scale {
        return Err(Error::DegenerateTriangle(format!("side lengths {left:e}, {right:e} at the corner")));
    }
    let c = (left * left + right * right - opposite * opposite) / (2.0 * left * right);
    Ok(c.clamp(-1.0, 1.0).acos())
}

/// Outcome of checking the near-geodesic length and tangent bounds on a sampled path.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct NearGeodesicReport {
    /// Largest covariant acceleration norm over the grid.
    pub eps: f64,
    pub length: f64,
    pub dist: f64,
    /// `|γ'(i) - γ̃'(i)|` at `i = 0, 1` against the geodesic `γ̃` through the endpoints.
    pub tangent_gaps: (f64, f64),
    /// `d - (L - eps)`.
    pub length_slack: f64,
    /// `9/4 eps^2 + 4 eps |γ'(1-i)| - gap_i^2` for `i = 0, 1`.
    pub tangent_slacks: (f64, f64),
    pub length_ok: bool,
    pub tangent_ok: bool,
}

/// Flag tolerance, scaled by the path length so that long quantized paths are judged relatively.
pub const NEAR_GEODESIC_TOL: f64 = 1e-7;

fn simpson(h: f64, ys: &[f64]) -> f64 {
    let n = ys.len();
    if n % 2 == 0 {
        // trapezoid on the last interval keeps an even count usable
        return simpson(h, &ys[..n - 1]) + 0.5 * h * (ys[n - 2] + ys[n - 1]);
    }
    let inner: f64 = ys[1..n - 1].iter().enumerate().map(|(i, y)| if i % 2 == 0 { 4.0 * y } else { 2.0 * y }).sum();
    h / 3.0 * (ys[0] + ys[n - 1] + inner)
}

fn assemble_report(eps: f64, speeds: &[f64], h: f64, dist: f64, gaps: (f64, f64)) -> NearGeodesicReport {
    let length = simpson(h, speeds);
    let v0 = speeds[0];
    let v1 = *speeds.last().unwrap();
    let length_slack = dist - (length - eps);
    let bound = |other: f64| 2.25 * eps * eps + 4.0 * eps * other;
    let tangent_slacks = (bound(v1) - gaps.0 * gaps.0, bound(v0) - gaps.1 * gaps.1);
    let tol_len = NEAR_GEODESIC_TOL * length.max(1.0);
    let tol_sq = NEAR_GEODESIC_TOL * length.max(1.0).powi(2);
    NearGeodesicReport {
        eps,
        length,
        dist,
        tangent_gaps: gaps,
        length_slack,
        tangent_slacks,
        length_ok: length_slack >= -tol_len,
        tangent_ok: tangent_slacks.0 >= -tol_sq && tangent_slacks.1 >= -tol_sq,
    }
}

/// Measures how far a sampled path is from a geodesic and checks the
/// length bound `d(γ(0), γ(1)) ≥ L(γ) - eps` and the endpoint tangent bounds
/// `|γ'(i) - γ̃'(i)|^2 ≤ 9/4 eps^2 + 4 eps |γ'(1-i)|`.
pub fn near_geodesic_check(path: &SampledPath<HermitianForm>) -> Result<NearGeodesicReport> {
    let n = path.len();
    let mats = path.map(|h| h.m.clone());
    let mut eps: f64 = 0.0;
    let mut speeds = Vec::with_capacity(n);
    let mut vel = Vec::with_capacity(n);
    for i in 0..n {
        let base = &path.values()[i];
        let hd = TangentForm::hermitian_part(fd_derivative(&mats, 1, i)?);
        eps = eps.max(norm(base, &covariant_accel(path, i)?)?);
        speeds.push(norm(base, &hd)?);
        vel.push(hd);
    }
    let h0 = &path.values()[0];
    let h1 = &path.values()[n - 1];
    let dist = distance(h0, h1)?;
    let gap = |base: &HermitianForm, a: &TangentForm, b: TangentForm| -> Result<f64> {
        norm(base, &TangentForm { m: &a.m - &b.m })
    };
    let gaps = if dist == 0.0 {
        (norm(h0, &vel[0])?, norm(h1, &vel[n - 1])?)
    } else {
        (
            gap(h0, &vel[0], geodesic_velocity(h0, h1, 0.0)?)?,
            gap(h1, &vel[n - 1], geodesic_velocity(h0, h1, 1.0)?)?,
        )
    };
    Ok(assemble_report(eps, &speeds, path.step(), dist, gaps))
}

/// [`near_geodesic_check`] for a path of diagonal forms given by log-diagonals.
pub fn near_geodesic_check_log_diag(path: &SampledPath<Vec<f64>>) -> Result<NearGeodesicReport> {
    let n = path.len();
    let euclid = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut eps: f64 = 0.0;
    let mut speeds = Vec::with_capacity(n);
    let mut vel = Vec::with_capacity(n);
    for i in 0..n {
        let v = fd_derivative(path, 1, i)?;
        eps = eps.max(euclid(&fd_derivative(path, 2, i)?));
        speeds.push(euclid(&v));
        vel.push(v);
    }
    let l0 = &path.values()[0];
    let l1 = &path.values()[n - 1];
    let chord: Vec<f64> = l1.iter().zip(l0).map(|(b, a)| b - a).collect();
    let gap = |v: &[f64]| euclid(&v.iter().zip(&chord).map(|(a, b)| a - b).collect::<Vec<_>>());
    Ok(assemble_report(eps, &speeds, path.step(), euclid(&chord), (gap(&vel[0]), gap(&vel[n - 1]))))
}

/// A random positive-definite form `G G* + floor I` with complex Gaussian-like entries.
pub fn random_pd<R: Rng>(rng: &mut R, n: usize, spread: f64) -> HermitianForm {
    loop {
        let g = DMatrix::from_fn(n, n, |_, _| {
            Complex::new(rng.gen_range(-1.0..1.0) * spread, rng.gen_range(-1.0..1.0) * spread)
        });
        let m = &g * g.adjoint() + CMat::identity(n, n).scale(0.2);
        if let Ok(h) = HermitianForm::new((&m + m.adjoint()).scale(0.5)) {
            return h;
        }
    }
}

/// A random Hermitian direction with unit Frobenius norm.
pub fn random_hermitian<R: Rng>(rng: &mut R, n: usize) -> TangentForm {
    let g = DMatrix::from_fn(n, n, |_, _| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let h = (&g + g.adjoint()).scale(0.5);
    let s = max_abs(&h).max(1e-300);
    let m = h.scale(1.0 / s);
    let fro = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    TangentForm { m: m.scale(1.0 / fro) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{E, PI};

    fn diag(d: &[f64]) -> HermitianForm {
        HermitianForm::from_diagonal(d).unwrap()
    }

    #[test]
    fn inner_product_examples() {
        let i3 = HermitianForm::identity(3);
        let id = TangentForm::from_diagonal(&[1.0, 1.0, 1.0]);
        assert!((inner(&i3, &id, &id).unwrap() - 3.0).abs() < 1e-15);
        let h = diag(&[2.0, 2.0]);
        let a = TangentForm::from_diagonal(&[2.0, 2.0]);
        assert!((inner(&h, &a, &a).unwrap() - 2.0).abs() < 1e-15);
        let i2 = HermitianForm::identity(2);
        let v = inner(&i2, &TangentForm::from_diagonal(&[1.0, -1.0]), &TangentForm::from_diagonal(&[1.0, 1.0])).unwrap();
        assert!(v.abs() < 1e-15);
        assert!(matches!(inner(&i2, &id, &id), Err(Error::Contract(_))));
    }

    #[test]
    fn geodesic_examples() {
        let mid = geodesic(&HermitianForm::identity(2), &diag(&[4.0, 9.0]), 0.5).unwrap();
        assert!((mid.matrix()[(0, 0)].re - 2.0).abs() < 1e-12 && (mid.matrix()[(1, 1)].re - 3.0).abs() < 1e-12);
        let h = HermitianForm::from_real(2, &[2.0, 0.5, 0.5, 1.0]).unwrap();
        for t in [-1.0, 0.3, 2.0] {
            let g = geodesic(&h, &h, t).unwrap();
            assert!((g.matrix() - h.matrix()).iter().all(|z| z.norm() < 1e-12));
        }
        let g = geodesic(&HermitianForm::identity(3), &diag(&[E * E; 3]), 0.5).unwrap();
        assert!((0..3).all(|i| (g.matrix()[(i, i)].re - E).abs() < 1e-12));
    }

    #[test]
    fn geodesic_equation_residual_is_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h0 = random_pd(&mut rng, 4, 0.5);
        let h1 = random_pd(&mut rng, 4, 0.5);
        let path = SampledPath::try_from_fn(33, |t| geodesic(&h0, &h1, t)).unwrap();
        for i in 0..33 {
            let base = &path.values()[i];
            let v = norm(base, &geodesic_velocity(&h0, &h1, path.times()[i]).unwrap()).unwrap();
            let acc = norm(base, &covariant_accel(&path, i).unwrap()).unwrap();
            assert!(acc <= 1e-6 * v * v, "index {i}: {acc} vs {}", v * v);
        }
    }

    #[test]
    fn distance_examples() {
        let h = HermitianForm::from_real(2, &[2.0, 0.5, 0.5, 1.0]).unwrap();
        assert!(distance(&h, &h).unwrap() < 1e-12);
        let c: f64 = 0.7;
        let d = distance(&HermitianForm::identity(5), &diag(&[c.exp(); 5])).unwrap();
        assert!((d - c * 5f64.sqrt()).abs() < 1e-12);
        let d = distance(&diag(&[1.0, 4.0]), &diag(&[4.0, 1.0])).unwrap();
        assert!((d - 2f64.sqrt() * 4f64.ln()).abs() < 1e-12);
        assert!((d - 1.96052).abs() < 1e-5);
        assert!((log_diag_distance(&[0.0, 4f64.ln()], &[4f64.ln(), 0.0]).unwrap() - d).abs() < 1e-12);
    }

    #[test]
    fn distance_matches_geodesic_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h0 = random_pd(&mut rng, 3, 1.0);
        let h1 = random_pd(&mut rng, 3, 1.0);
        let (x, w) = crate::numerics::gauss_legendre(20);
        let length: f64 = x
            .iter()
            .zip(&w)
            .map(|(xi, wi)| {
                let t = 0.5 * (xi + 1.0);
                0.5 * wi * norm(&geodesic(&h0, &h1, t).unwrap(), &geodesic_velocity(&h0, &h1, t).unwrap()).unwrap()
            })
            .sum();
        assert!((length - distance(&h0, &h1).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn covariant_acceleration_examples() {
        // linear path I -> diag(3, 5): H'' = 0, H' = diag(2, 4)
        let path = SampledPath::from_fn(33, |t| diag(&[1.0 + 2.0 * t, 1.0 + 4.0 * t])).unwrap();
        let acc = covariant_accel(&path, 0).unwrap();
        assert!((acc.matrix()[(0, 0)].re + 4.0).abs() < 1e-8);
        assert!((acc.matrix()[(1, 1)].re + 16.0).abs() < 1e-8);
        // scalar e^{t^2}: acceleration 2 at t = 0
        let path = SampledPath::from_fn(65, |t| diag(&[(t * t).exp()])).unwrap();
        let acc = covariant_accel(&path, 0).unwrap();
        assert!((acc.matrix()[(0, 0)].re - 2.0).abs() < 1e-6);
    }

    #[test]
    fn comparison_angle_examples() {
        let a = diag(&[1.0, 1.0]);
        let c = diag(&[E * E, E]);
        let b = geodesic(&a, &c, 0.4).unwrap();
        assert!((comparison_angle(&a, &b, &c).unwrap() - PI).abs() < 1e-6);
        assert!(comparison_angle(&c, &b, &c).unwrap().abs() < 1e-7);
        // sides 1, 1 and sqrt 2
        let right = comparison_angle(&diag(&[E, 1.0]), &HermitianForm::identity(2), &diag(&[1.0, E])).unwrap();
        assert!((right - PI / 2.0).abs() < 1e-12);
        let eq = comparison_angle(&diag(&[E, 1.0]), &HermitianForm::identity(2), &diag(&[E.sqrt(), E.powf(0.5 * 3f64.sqrt())])).unwrap();
        assert!((eq - PI / 3.0).abs() < 1e-12);
        assert!(matches!(comparison_angle(&a, &a, &c), Err(Error::DegenerateTriangle(_))));
    }

    #[test]
    fn non_positive_definite_rejected() {
        assert!(matches!(HermitianForm::from_diagonal(&[1.0, -1.0]), Err(Error::Domain { .. })));
        assert!(matches!(HermitianForm::from_diagonal(&[1.0, 1e-14]), Err(Error::Domain { .. })));
    }

    #[test]
    fn near_geodesic_examples() {
        let h0 = HermitianForm::from_real(2, &[2.0, 0.3, 0.3, 1.0]).unwrap();
        let h1 = diag(&[0.5, 3.0]);
        let exact = SampledPath::try_from_fn(33, |t| geodesic(&h0, &h1, t)).unwrap();
        let r = near_geodesic_check(&exact).unwrap();
        assert!(r.eps < 1e-6 && (r.dist - r.length).abs() < 1e-6);
        assert!(r.tangent_gaps.0 < 1e-6 && r.tangent_gaps.1 < 1e-6);
        assert!(r.length_ok && r.tangent_ok);

        let p = CMat::from_row_slice(2, 2, &[Complex::new(1.0, 0.0), Complex::new(0.0, 0.5), Complex::new(0.0, -0.5), Complex::new(-1.0, 0.0)]);
        let bent = SampledPath::try_from_fn(33, |t| {
            let g = geodesic(&h0, &h1, t)?;
            HermitianForm::new(g.matrix() + p.scale(0.01 * (PI * t).sin()))
        })
        .unwrap();
        let r = near_geodesic_check(&bent).unwrap();
        assert!(r.eps > 1e-3);
        assert!(r.length_slack > 0.0 && r.tangent_slacks.0 > 0.0 && r.tangent_slacks.1 > 0.0);

        let constant = SampledPath::try_from_fn(9, |_| Ok(h0.clone())).unwrap();
        let r = near_geodesic_check(&constant).unwrap();
        assert!(r.eps < 1e-9 && r.length < 1e-9 && r.dist < 1e-12);
    }

    #[test]
    fn diagonal_fast_path_agrees_with_matrix_route() {
        let logs = |t: f64| vec![0.3 * t + 0.2 * (PI * t).sin(), -0.5 * t, 0.1 * t * t];
        let lp = SampledPath::from_fn(33, logs).unwrap();
        let mp = SampledPath::from_fn(33, |t| diag(&logs(t).iter().map(|l| l.exp()).collect::<Vec<_>>())).unwrap();
        let a = near_geodesic_check_log_diag(&lp).unwrap();
        let b = near_geodesic_check(&mp).unwrap();
        assert!((a.eps - b.eps).abs() < 1e-5 * a.eps.max(1.0));
        assert!((a.length - b.length).abs() < 1e-5);
        assert!((a.dist - b.dist).abs() < 1e-12);
        assert!((a.tangent_gaps.0 - b.tangent_gaps.0).abs() < 1e-6);
    }
}
