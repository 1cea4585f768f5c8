use nalgebra::Complex;

use super::linalg::CMat;
use crate::error::{Error, Result};

/// Values that can be combined linearly by a finite-difference stencil.
pub trait PathValue: Clone {
    fn combine(terms: &[(f64, &Self)]) -> Self;
}

impl PathValue for f64 {
    fn combine(terms: &[(f64, &Self)]) -> Self {
        terms.iter().map(|(w, v)| w * **v).sum()
    }
}

impl PathValue for Vec<f64> {
    fn combine(terms: &[(f64, &Self)]) -> Self {
        let mut out = vec![0.0; terms[0].1.len()];
        for (w, v) in terms {
            for (o, x) in out.iter_mut().zip(v.iter()) {
                *o += w * x;
            }
        }
        out
    }
}

impl PathValue for CMat {
    fn combine(terms: &[(f64, &Self)]) -> Self {
        let (r, c) = terms[0].1.shape();
        let mut out = CMat::zeros(r, c);
        for (w, v) in terms {
            out += v.map(|z| z * Complex::new(*w, 0.0));
        }
        out
    }
}

/// A one-parameter family sampled on a uniform grid of `[0, 1]`.
#[derive(Debug, Clone)]
pub struct SampledPath<T> {
    times: Vec<f64>,
    values: Vec<T>,
}

impl<T: Clone> SampledPath<T> {
    pub fn new(times: Vec<f64>, values: Vec<T>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::contract("sampled path needs one value per time"));
        }
        if times.len() < 5 {
            return Err(Error::contract(format!("sampled path needs at least 5 samples, got {}", times.len())));
        }
        if times[0] < 0.0 || *times.last().unwrap() > 1.0 {
            return Err(Error::contract("sample times must lie in [0, 1]"));
        }
        let h = times[1] - times[0];
        if !(h > 0.0) {
            return Err(Error::contract("sample times must be strictly increasing"));
        }
        for w in times.windows(2) {
            if ((w[1] - w[0]) - h).abs() > 1e-12 {
                return Err(Error::contract("sample times must be uniformly spaced"));
            }
        }
        Ok(Self { times, values })
    }

    /// Samples `f` at `n` uniform points of `[0, 1]`.
    pub fn from_fn(n: usize, mut f: impl FnMut(f64) -> T) -> Result<Self> {
        if n < 2 {
            return Err(Error::contract("a sampled path needs at least 5 samples"));
        }
        let times = uniform_grid(n);
        let values = times.iter().map(|&t| f(t)).collect();
        Self::new(times, values)
    }

    pub fn try_from_fn(n: usize, mut f: impl FnMut(f64) -> Result<T>) -> Result<Self> {
        if n < 2 {
            return Err(Error::contract("a sampled path needs at least 5 samples"));
        }
        let times = uniform_grid(n);
        let values = times.iter().map(|&t| f(t)).collect::<Result<Vec<_>>>()?;
        Self::new(times, values)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Applies `f` to every sample, keeping the time grid.
    pub fn map<U: Clone>(&self, f: impl FnMut(&T) -> U) -> SampledPath<U> {
        SampledPath { times: self.times.clone(), values: self.values.iter().map(f).collect() }
    }

    pub fn step(&self) -> f64 {
        (self.times[self.len() - 1] - self.times[0]) / (self.len() - 1) as f64
    }
}

pub(crate) fn uniform_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

/// Finite-difference weights for the `order`-th derivative at `x0` (Fornberg's recursion).
pub fn fornberg_weights(x0: f64, nodes: &[f64], order: usize) -> Vec<f64> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// Fourth-order accurate derivative of a sampled path at grid index `index`.
///
/// Interior points use centred stencils; near the ends the window slides to
/// stay inside the grid and grow to `order + 6` points for first and second
/// derivatives (`order + 4` for the third, or on short grids),
/// so one-sided error constants stay comparable to the centred ones.
pub fn fd_derivative<T: PathValue>(path: &SampledPath<T>, order: usize, index: usize) -> Result<T> {
    if !(1..=3).contains(&order) {
        return Err(Error::contract(format!("derivative order must be 1, 2 or 3, got {order}")));
    }
    let n = path.len();
    if index >= n {
        return Err(Error::contract(format!("grid index {index} outside path of {n} samples")));
    }
    let central = if order == 3 { 7 } else { 5 };
    let half = central / 2;
    let (start, len) = if index >= half && index + half < n {
        (index - half, central)
    } else {
        if n < order + 4 {
            return Err(Error::contract(format!("{n} samples are too few for a derivative of order {order}")));
        }
        let len = if order < 3 && n >= order + 6 { order + 6 } else { order + 4 };
        let start = index.saturating_sub(len / 2).min(n - len);
        (start, len)
    };
    if n < len {
        return Err(Error::contract(format!("{n} samples are too few for a derivative of order {order}")));
    }
    let nodes = &path.times[start..start + len];
    let w = fornberg_weights(path.times[index], nodes, order);
    let terms: Vec<(f64, &T)> = w.iter().copied().zip(&path.values[start..start + len]).collect();
    Ok(T::combine(&terms))
}
