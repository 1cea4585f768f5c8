use std::sync::Arc;

use super::SymplecticPotential;
use crate::error::{Error, Result};
use crate::numerics::{logistic, logit, softplus, Integral, QuadratureSpec};

/// `ψ` and its first four x-derivatives at one point, with `1 - ψ'` kept separately
/// so that both tails of the moment map stay accurate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub psi: f64,
    pub d1: f64,
    pub d1c: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
    /// Scalar curvature when a closed form is available, NaN otherwise.
    curv: f64,
}

impl Jet {
    const ZERO: Jet = Jet { psi: 0.0, d1: 0.0, d1c: 0.0, d2: 0.0, d3: 0.0, d4: 0.0, curv: f64::NAN };

    fn add_scaled(&mut self, w: f64, o: &Jet) {
        self.psi += w * o.psi;
        self.d1 += w * o.d1;
        self.d1c += w * o.d1c;
        self.d2 += w * o.d2;
        self.d3 += w * o.d3;
        self.d4 += w * o.d4;
    }

    /// Scalar curvature `-(ψ''''/ψ''² - ψ'''²/ψ''³)`.
    pub fn scalar_curvature(&self) -> f64 {
        if !self.curv.is_nan() {
            return self.curv;
        }
        let g = self.d2;
        -(self.d4 / (g * g) - self.d3 * self.d3 / (g * g * g))
    }

    /// Toric jet from the moment coordinate (`p`, `1 - p`).
    fn toric(u: &SymplecticPotential, p: f64, pc: f64) -> (f64, Jet) {
        let fj = u.f_jet(p);
        let [g, g1, g2] = u.inverse_hessian_split(p, pc);
        let x = (p / pc).ln() + fj[1];
        let psi = -pc.ln() + p * fj[1] - fj[0];
        (x, Jet { psi, d1: p, d1c: pc, d2: g, d3: g1 * g, d4: (g2 * g + g1 * g1) * g, curv: -g2 })
    }
}

/// A building block of an invariant potential.
#[derive(Debug, Clone, PartialEq)]
pub enum Component {
    /// Legendre dual of a symplectic potential.
    Toric(Arc<SymplecticPotential>),
    /// `(1/k) log Σ_j e^{jx - l_j}`, the Fubini–Study potential of `diag(e^{l_j})`.
    Quantized { k: usize, log_h: Arc<Vec<f64>> },
}

impl Component {
    fn jet(&self, x: f64) -> Jet {
        match self {
            Component::Toric(u) => {
                let y = u.logit_moment(x);
                Jet::toric(u, logistic(y), logistic(-y)).1
            }
            Component::Quantized { k, log_h } => quantized_jet(*k, log_h, x),
        }
    }

    fn limits(&self) -> (f64, f64) {
        match self {
            Component::Toric(u) => {
                let f = u.correction();
                (-f[0], -f.iter().sum::<f64>())
            }
            Component::Quantized { k, log_h } => (-log_h[0] / *k as f64, -log_h[*k] / *k as f64),
        }
    }
}

fn quantized_jet(k: usize, log_h: &[f64], x: f64) -> Jet {
    let a: Vec<f64> = log_h.iter().enumerate().map(|(j, l)| j as f64 * x - l).collect();
    let m = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = a.iter().map(|v| (v - m).exp()).collect();
    let z: f64 = w.iter().sum();
    let kf = k as f64;
    let mean = w.iter().enumerate().map(|(j, w)| j as f64 * w).sum::<f64>() / z;
    let mean_c = w.iter().enumerate().map(|(j, w)| (kf - j as f64) * w).sum::<f64>() / z;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for (j, wj) in w.iter().enumerate() {
        let d = j as f64 - mean;
        let d2 = d * d;
        m2 += wj * d2;
        m3 += wj * d2 * d;
        m4 += wj * d2 * d2;
    }
    let (m2, m3, m4) = (m2 / z, m3 / z, m4 / z);
    Jet {
        psi: (m + z.ln()) / kf,
        d1: mean / kf,
        d1c: mean_c / kf,
        d2: m2 / kf,
        d3: m3 / kf,
        d4: (m4 - 3.0 * m2 * m2) / kf,
        curv: f64::NAN,
    }
}

/// A point of the volume measure as seen by an integrand.
#[derive(Debug, Clone, Copy)]
pub struct MeasurePoint {
    pub x: f64,
    pub jet: Jet,
}

/// An S¹-invariant potential `ψ(x) = Σ w_i ψ_i(x) + b σ(x) + c` with `Σ w_i = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantPotential {
    terms: Vec<(f64, Component)>,
    bump: f64,
    constant: f64,
}

/// Interior x-grid on which convexity of composite potentials is verified.
fn check_grid() -> impl Iterator<Item = f64> {
    let n = super::CONVEXITY_GRID;
    (1..=n).map(move |i| logit(i as f64 / (n + 1) as f64))
}

impl InvariantPotential {
    pub fn fubini_study() -> Self {
        legendre(&SymplecticPotential::fubini_study())
    }

    /// `FS_k` of the diagonal form `diag(e^{l_0}, .., e^{l_k})`.
    pub fn quantized(k: usize, log_h: Vec<f64>) -> Result<Self> {
        if k == 0 || log_h.len() != k + 1 {
            return Err(Error::contract(format!("quantized potential needs k >= 1 and k + 1 entries, got k = {k}, {}", log_h.len())));
        }
        if let Some(bad) = log_h.iter().find(|v| !v.is_finite()) {
            return Err(Error::domain("non-finite log-diagonal entry", *bad));
        }
        Ok(Self { terms: vec![(1.0, Component::Quantized { k, log_h: Arc::new(log_h) })], bump: 0.0, constant: 0.0 })
    }

    /// Affine combination `Σ a_i φ_i`, requiring `Σ a_i = 1`.
    pub fn combine(parts: &[(f64, &InvariantPotential)]) -> Result<Self> {
        let total: f64 = parts.iter().map(|(a, _)| a).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::contract(format!("combination weights must sum to 1, got {total}")));
        }
        let mut terms: Vec<(f64, Component)> = Vec::new();
        let (mut bump, mut constant) = (0.0, 0.0);
        for (a, phi) in parts {
            if *a == 0.0 {
                continue;
            }
            for (w, c) in &phi.terms {
                match terms.iter_mut().find(|(_, d)| d == c) {
                    Some(slot) => slot.0 += a * w,
                    None => terms.push((a * w, c.clone())),
                }
            }
            bump += a * phi.bump;
            constant += a * phi.constant;
        }
        terms.retain(|(w, _)| *w != 0.0);
        let out = Self { terms, bump, constant };
        if parts.iter().any(|(a, _)| *a < 0.0) {
            out.check_convex()?;
        }
        Ok(out)
    }

    /// `φ + c`.
    pub fn plus_constant(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.constant += c;
        out
    }

    /// `φ + b σ(x)`, σ the logistic function; rejected if convexity fails.
    pub fn plus_logistic(&self, b: f64) -> Result<Self> {
        let mut out = self.clone();
        out.bump += b;
        if b != 0.0 {
            out.check_convex()?;
        }
        Ok(out)
    }

    fn check_convex(&self) -> Result<()> {
        for x in check_grid() {
            let d2 = self.jet(x).d2;
            if !(d2 > 0.0) {
                return Err(Error::domain(format!("potential is not strictly convex at x = {x:.6}"), d2));
            }
        }
        Ok(())
    }

    pub fn components(&self) -> &[(f64, Component)] {
        &self.terms
    }

    pub fn jet(&self, x: f64) -> Jet {
        if let [(w, c)] = self.terms.as_slice() {
            if *w == 1.0 && self.bump == 0.0 {
                let mut j = c.jet(x);
                j.psi += self.constant;
                return j;
            }
        }
        let mut j = Jet::ZERO;
        for (w, c) in &self.terms {
            j.add_scaled(*w, &c.jet(x));
        }
        if self.bump != 0.0 {
            let s = logistic(x);
            let sc = logistic(-x);
            let s1 = s * sc;
            let b = self.bump;
            j.psi += b * s;
            j.d1 += b * s1;
            j.d1c -= b * s1;
            j.d2 += b * s1 * (sc - s);
            j.d3 += b * s1 * (1.0 - 6.0 * s * sc);
            j.d4 += b * s1 * (sc - s) * (1.0 - 12.0 * s * sc);
        }
        j.psi += self.constant;
        j
    }

    /// `ψ(x)`.
    pub fn psi(&self, x: f64) -> f64 {
        self.jet(x).psi
    }

    /// `φ(x) = ψ(x) - log(1 + e^x)`.
    pub fn phi(&self, x: f64) -> f64 {
        self.psi(x) - softplus(x)
    }

    /// Moment map `p(x) = ψ'(x)`.
    pub fn moment(&self, x: f64) -> f64 {
        self.jet(x).d1
    }

    /// `(φ(-∞), φ(+∞))`.
    pub fn phi_limits(&self) -> (f64, f64) {
        let mut lo = self.constant;
        let mut hi = self.constant + self.bump;
        for (w, c) in &self.terms {
            let (a, b) = c.limits();
            lo += w * a;
            hi += w * b;
        }
        (lo, hi)
    }

    /// The symplectic potential when this is a pure toric potential.
    pub fn as_toric(&self) -> Option<SymplecticPotential> {
        match self.terms.as_slice() {
            [(w, Component::Toric(u))] if (*w - 1.0).abs() <= 1e-15 && self.bump == 0.0 => Some(u.shifted(self.constant)),
            _ => None,
        }
    }

    /// Solves `ψ'(x) = p`.
    pub fn moment_inverse(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain("moment coordinate outside (0, 1)", p));
        }
        let mut x = logit(p);
        let resid = |x: f64| {
            let j = self.jet(x);
            (if p < 0.5 { j.d1 - p } else { (1.0 - p) - j.d1c }, j.d2)
        };
        let (mut lo, mut hi) = (x - 1.0, x + 1.0);
        while resid(lo).0 > 0.0 {
            lo -= 2.0 * (x - lo);
        }
        while resid(hi).0 < 0.0 {
            hi += 2.0 * (hi - x);
        }
        let mut last_step = hi - lo;
        for _ in 0..200 {
            let (r, d) = resid(x);
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let newton = x - r / d;
            // bisect when Newton leaves the bracket or stops halving its step
            let next = if newton > lo && newton < hi && (2.0 * r).abs() <= (last_step * d).abs() {
                newton
            } else {
                0.5 * (lo + hi)
            };
            last_step = (next - x).abs();
            let done = (next - x).abs() <= 1e-15 * x.abs().max(1.0);
            x = next;
            if done || hi - lo <= 1e-15 * x.abs().max(1.0) {
                break;
            }
        }
        Ok(x)
    }

    /// Legendre dual `u(p) = x p - ψ(x)` at `ψ'(x) = p`.
    pub fn symplectic_value(&self, p: f64) -> Result<f64> {
        let x = self.moment_inverse(p)?;
        Ok(x * p - self.psi(x))
    }

    /// Maps `q ∈ (0, 1)` to a measure point and the density of `dμ` with respect to `dq`:
    /// the moment coordinate for pure toric potentials, the Fubini–Study pullback otherwise.
    pub fn chart_point(&self, toric: Option<&SymplecticPotential>, q: f64) -> (MeasurePoint, f64) {
        let qc = 1.0 - q;
        match toric {
            Some(u) => {
                let (x, jet) = Jet::toric(u, q, qc);
                (MeasurePoint { x, jet }, 1.0)
            }
            None => {
                let x = (q / qc).ln();
                let jet = self.jet(x);
                (MeasurePoint { x, jet }, jet.d2 / (q * qc))
            }
        }
    }

    /// `∫ g dμ_φ` over the chart of [`Self::chart_point`], split at `breaks ⊂ (0, 1)`.
    pub fn integrate_mu_split(
        &self,
        g: impl Fn(&MeasurePoint) -> f64,
        spec: &QuadratureSpec,
        breaks: &[f64],
    ) -> Result<Integral> {
        let toric = self.as_toric();
        self.integrate_chart(|m, jac| g(m) * jac, toric.as_ref(), spec, breaks)
    }

    /// `∫_0^1 h(point(q), jacobian(q)) dq`; points where the Jacobian underflows contribute zero.
    pub fn integrate_chart(
        &self,
        h: impl Fn(&MeasurePoint, f64) -> f64,
        toric: Option<&SymplecticPotential>,
        spec: &QuadratureSpec,
        breaks: &[f64],
    ) -> Result<Integral> {
        let integrand = |q: f64| -> f64 {
            let (m, jac) = self.chart_point(toric, q);
            if jac == 0.0 || !jac.is_finite() {
                return 0.0;
            }
            h(&m, jac)
        };
        let mut pts = vec![0.0];
        pts.extend(breaks.iter().copied().filter(|b| *b > 0.0 && *b < 1.0));
        pts.push(1.0);
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        let mut total = Integral { value: 0.0, err_est: 0.0 };
        for w in pts.windows(2) {
            let part = crate::numerics::integrate(&integrand, w[0], w[1], spec)?;
            total.value += part.value;
            total.err_est += part.err_est;
        }
        Ok(total)
    }

    /// `∫ g dμ_φ`.
    pub fn integrate_mu(&self, g: impl Fn(&MeasurePoint) -> f64, spec: &QuadratureSpec) -> Result<Integral> {
        self.integrate_mu_split(g, spec, &[])
    }
}

/// Legendre transform `ψ(x) = sup_p (x p - u(p))`.
pub fn legendre(u: &SymplecticPotential) -> InvariantPotential {
    InvariantPotential { terms: vec![(1.0, Component::Toric(Arc::new(u.clone())))], bump: 0.0, constant: 0.0 }
}
