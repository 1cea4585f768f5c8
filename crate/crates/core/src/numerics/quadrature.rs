use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Panel rule used by the adaptive composite scheme.
const PANEL_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureRule {
    GaussLegendreComposite,
    TanhSinh,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub rule: QuadratureRule,
    pub rel_tol: f64,
    /// Absolute floor below which the relative criterion is not enforced.
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rule: QuadratureRule::GaussLegendreComposite,
            rel_tol: 1e-11,
            abs_tol: 1e-14,
            max_panels: 4000,
        }
    }
}

impl QuadratureSpec {
    pub fn tanh_sinh() -> Self {
        Self { rule: QuadratureRule::TanhSinh, ..Self::default() }
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::contract("quadrature rel_tol must be positive"));
        }
        if self.max_panels == 0 {
            return Err(Error::contract("quadrature max_panels must be at least 1"));
        }
        Ok(())
    }

    fn accepts(&self, value: f64, err: f64) -> bool {
        err <= (self.rel_tol * value.abs()).max(self.abs_tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub err_est: f64,
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // three-term recurrence for P_n and its derivative
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn panel_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(PANEL_NODES))
}

fn gl_panel<F: Fn(f64) -> f64>(f: &F, l: f64, r: f64) -> f64 {
    let (x, w) = panel_rule();
    let c = 0.5 * (l + r);
    let h = 0.5 * (r - l);
    h * x.iter().zip(w).map(|(xi, wi)| wi * f(c + h * xi)).sum::<f64>()
}

struct Panel {
    l: f64,
    r: f64,
    fine: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn make_panel<F: Fn(f64) -> f64>(f: &F, l: f64, r: f64, coarse: f64) -> Panel {
    let m = 0.5 * (l + r);
    let fine = gl_panel(f, l, m) + gl_panel(f, m, r);
    Panel { l, r, fine, err: (fine - coarse).abs() }
}

fn adaptive_gl<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Integral> {
    const INITIAL: usize = 4;
    let mut heap = BinaryHeap::new();
    let h = (b - a) / INITIAL as f64;
    for i in 0..INITIAL {
        let l = a + h * i as f64;
        let r = if i + 1 == INITIAL { b } else { l + h };
        heap.push(make_panel(f, l, r, gl_panel(f, l, r)));
    }
    loop {
        // sum from small to large panels is not needed at these tolerances
        let value: f64 = heap.iter().map(|p| p.fine).sum();
        let err: f64 = heap.iter().map(|p| p.err).sum();
        if !value.is_finite() {
            return Err(Error::domain("non-finite integrand value", value));
        }
        if spec.accepts(value, err) {
            return Ok(Integral { value, err_est: err });
        }
        if heap.len() >= spec.max_panels {
            return Err(Error::Tolerance { best: value, err_est: err });
        }
        let worst = heap.pop().expect("panel heap is never empty");
        let m = 0.5 * (worst.l + worst.r);
        let left = gl_panel(f, worst.l, m);
        let right = worst.fine - left;
        heap.push(make_panel(f, worst.l, m, left));
        heap.push(make_panel(f, m, worst.r, right));
    }
}

fn tanh_sinh<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Integral> {
    use std::f64::consts::FRAC_PI_2;
    let half = 0.5 * (b - a);
    let t_max = 3.5;
    let node = |t: f64| -> f64 {
        let s = FRAC_PI_2 * t.sinh();
        // distance from the nearer endpoint, computed without cancellation
        let gap = half * 2.0 / (1.0 + (2.0 * s.abs()).exp());
        let w = FRAC_PI_2 * t.cosh() / s.cosh().powi(2);
        let x = if s >= 0.0 { b - gap } else { a + gap };
        if gap <= 0.0 || x <= a || x >= b {
            return 0.0;
        }
        half * w * f(x)
    };
    let mut h = 1.0;
    let mut sum = node(0.0);
    let mut k = 1;
    while k as f64 * h <= t_max {
        sum += node(k as f64 * h) + node(-(k as f64) * h);
        k += 1;
    }
    let mut prev = sum * h;
    let max_levels = spec.max_panels.clamp(1, 12);
    let mut last_err = f64::INFINITY;
    for _ in 0..max_levels {
        h *= 0.5;
        let mut k = 1;
        while k as f64 * h <= t_max {
            sum += node(k as f64 * h) + node(-(k as f64) * h);
            k += 2;
        }
        let est = sum * h;
        last_err = (est - prev).abs();
        if !est.is_finite() {
            return Err(Error::domain("non-finite integrand value", est));
        }
        if spec.accepts(est, last_err) {
            return Ok(Integral { value: est, err_est: last_err });
        }
        prev = est;
    }
    Err(Error::Tolerance { best: prev, err_est: last_err })
}

/// Integrates `f` over `[a, b]`; infinite endpoints are mapped onto a bounded
/// interval by a rational substitution before the rule is applied.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Integral> {
    spec.validate()?;
    if !(a < b) {
        return Err(Error::contract(format!("integration bounds must satisfy a < b, got [{a}, {b}]")));
    }
    match (a.is_finite(), b.is_finite()) {
        (true, true) => bounded(&f, a, b, spec),
        (false, false) => bounded(
            &|t: f64| {
                let d = 1.0 - t * t;
                f(t / d) * (1.0 + t * t) / (d * d)
            },
            -1.0,
            1.0,
            spec,
        ),
        (true, false) => bounded(&|t: f64| f(a + t / (1.0 - t)) / (1.0 - t).powi(2), 0.0, 1.0, spec),
        (false, true) => bounded(&|t: f64| f(b - (1.0 - t) / t) / (t * t), 0.0, 1.0, spec),
    }
}

/// Shorthand for integrals over the moment interval `(0, 1)`.
pub fn integrate_unit<F: Fn(f64) -> f64>(f: F, spec: &QuadratureSpec) -> Result<Integral> {
    integrate(f, 0.0, 1.0, spec)
}

fn bounded<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Integral> {
    match spec.rule {
        QuadratureRule::GaussLegendreComposite => adaptive_gl(f, a, b, spec),
        QuadratureRule::TanhSinh => tanh_sinh(f, a, b, spec),
    }
}
