use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::flow::FramePair;
use crate::quadrature::{Grid, State};
use crate::{Error, Result};

use super::space::StateSpace;

/// Tabulated potentials are clamped from below at this fraction of their
/// grid maximum. Gaussian tails underflow to zero and kernel expansions
/// vanish at the interval ends; the clamp keeps every table strictly
/// positive.
pub const POTENTIAL_FLOOR_REL: f64 = 1e-12;

/// Values below `-NEGATIVE_TOLERANCE_REL * max` are rejected as genuinely
/// negative; smaller negatives are rounding noise and get clamped.
const NEGATIVE_TOLERANCE_REL: f64 = 1e-9;

/// Node potential on the optical-flow grid: brightness constancy between
/// two frames at pixel `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowObservation {
    pub frames: Arc<FramePair>,
    pub i: usize,
    pub j: usize,
    pub sigma_u: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NodePotential {
    /// `sum_i w_i exp(-(x - mu_i)^2 / (2 sigma_i^2))`.
    GaussianMixture {
        weights: Vec<f64>,
        means: Vec<f64>,
        variances: Vec<f64>,
    },
    Uniform,
    /// Values on the model grid.
    GridTable { values: Vec<f64> },
    #[serde(skip)]
    FlowObservation(FlowObservation),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EdgePotential {
    Uniform,
    /// `sum_i w_i exp(-(x_u - x_v)^2 / (2 sigma_i^2))`.
    GaussianMixtureDiff { weights: Vec<f64>, variances: Vec<f64> },
    /// `sum_j lambda_j phi_j(x) phi_j(y)` over the orthonormal half-sine
    /// functions of the state interval.
    FiniteKernelExpansion { eigenvalues: Vec<f64> },
    /// `exp(-|x_u - x_v|^2 / (2 sigma^2))`.
    GaussianKernel { bandwidth: f64 },
    /// Row-major `psi(x_a, x_b)` for stored edge `(a, b)` on the model grid.
    GridTable { values: Vec<f64> },
}

impl NodePotential {
    pub fn validate(&self, space: &StateSpace) -> Result<()> {
        match self {
            NodePotential::GaussianMixture {
                weights,
                means,
                variances,
            } => {
                if space.dims() != 1 {
                    return Err(Error::Config(
                        "Gaussian-mixture node potentials need a 1-D space".into(),
                    ));
                }
                check_mixture(weights, variances)?;
                if means.len() != weights.len() || means.iter().any(|m| !m.is_finite()) {
                    return Err(Error::Config("mixture means malformed".into()));
                }
                Ok(())
            }
            NodePotential::FlowObservation(o) => {
                if !(o.sigma_u > 0.0) {
                    return Err(Error::Config(format!("sigma_u must be positive, got {}", o.sigma_u)));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Pointwise value at `x` (grid tables are evaluated at their nearest
    /// node only through [`NodePotential::tabulate`]).
    pub fn eval(&self, x: &State) -> f64 {
        match self {
            NodePotential::GaussianMixture {
                weights,
                means,
                variances,
            } => weights
                .iter()
                .zip(means)
                .zip(variances)
                .map(|((w, m), s2)| w * (-(x[0] - m).powi(2) / (2.0 * s2)).exp())
                .sum(),
            NodePotential::Uniform => 1.0,
            NodePotential::GridTable { .. } => f64::NAN,
            NodePotential::FlowObservation(o) => {
                let a = o.frames.first_at(o.i, o.j);
                let b = o
                    .frames
                    .second_bilinear(o.i as f64 + x[0], o.j as f64 + x[1]);
                (-(a - b).powi(2) / (2.0 * o.sigma_u * o.sigma_u)).exp()
            }
        }
    }

    /// Values on `grid`, clamped to be strictly positive.
    pub fn tabulate(&self, grid: &Grid) -> Result<Vec<f64>> {
        let mut values = match self {
            NodePotential::GridTable { values } => {
                grid.check(values)?;
                values.clone()
            }
            _ => (0..grid.len()).map(|i| self.eval(&grid.point(i))).collect(),
        };
        clamp_positive(&mut values, "node potential")?;
        Ok(values)
    }
}

impl EdgePotential {
    /// `lambda_j = j^{-alpha}` for `j = 1..=terms`.
    pub fn kernel_expansion(alpha: f64, terms: usize) -> Self {
        EdgePotential::FiniteKernelExpansion {
            eigenvalues: (1..=terms).map(|j| (j as f64).powf(-alpha)).collect(),
        }
    }

    pub fn validate(&self, space: &StateSpace) -> Result<()> {
        match self {
            EdgePotential::GaussianMixtureDiff { weights, variances } => {
                if space.dims() != 1 {
                    return Err(Error::Config(
                        "Gaussian-mixture edge potentials need a 1-D space".into(),
                    ));
                }
                check_mixture(weights, variances)
            }
            EdgePotential::FiniteKernelExpansion { eigenvalues } => {
                if space.dims() != 1 {
                    return Err(Error::Config("kernel expansions need a 1-D space".into()));
                }
                if eigenvalues.is_empty()
                    || eigenvalues.iter().any(|l| !(*l >= 0.0) || !l.is_finite())
                    || eigenvalues.windows(2).any(|w| w[1] > w[0])
                {
                    return Err(Error::Config(
                        "kernel eigenvalues must be non-negative and non-increasing".into(),
                    ));
                }
                Ok(())
            }
            EdgePotential::GaussianKernel { bandwidth } => {
                if !(*bandwidth > 0.0) || !bandwidth.is_finite() {
                    return Err(Error::Config(format!(
                        "Gaussian kernel bandwidth must be positive, got {bandwidth}"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Pointwise value `psi(x_a, x_b)` for stored edge orientation `(a, b)`.
    pub fn eval(&self, space: &StateSpace, xa: &State, xb: &State) -> f64 {
        match self {
            EdgePotential::Uniform => 1.0,
            EdgePotential::GaussianMixtureDiff { weights, variances } => {
                let d2 = (xa[0] - xb[0]).powi(2);
                weights
                    .iter()
                    .zip(variances)
                    .map(|(w, s2)| w * (-d2 / (2.0 * s2)).exp())
                    .sum()
            }
            EdgePotential::FiniteKernelExpansion { eigenvalues } => {
                let a = space.axes()[0];
                let c = 2.0 / a.len();
                let (sa, sb) = ((xa[0] - a.lo) / a.len(), (xb[0] - a.lo) / a.len());
                eigenvalues
                    .iter()
                    .enumerate()
                    .map(|(j, l)| {
                        let f = (2 * j + 1) as f64 * PI;
                        l * c * (f * sa).sin() * (f * sb).sin()
                    })
                    .sum()
            }
            EdgePotential::GaussianKernel { bandwidth } => {
                let d2: f64 = (0..space.dims()).map(|d| (xa[d] - xb[d]).powi(2)).sum();
                (-d2 / (2.0 * bandwidth * bandwidth)).exp()
            }
            EdgePotential::GridTable { .. } => f64::NAN,
        }
    }

    /// Tabulates on `grid`, clamped strictly positive.
    pub fn tabulate(&self, space: &StateSpace, grid: &Grid) -> Result<EdgeTable> {
        let n = grid.len();
        let mut table = match self {
            EdgePotential::Uniform => EdgeTable::Constant(1.0),
            EdgePotential::GaussianMixtureDiff { .. } | EdgePotential::GaussianKernel { .. } => {
                let shape = [
                    grid.axis(0).len(),
                    if grid.dims() == 2 { grid.axis(1).len() } else { 1 },
                ];
                let span = [2 * shape[0] - 1, 2 * shape[1] - 1];
                let steps = [
                    grid.axis(0).step(),
                    if grid.dims() == 2 { grid.axis(1).step() } else { 0.0 },
                ];
                let mut offsets = Vec::with_capacity(span[0] * span[1]);
                for a in 0..span[0] {
                    for b in 0..span[1] {
                        let d0 = (a as f64 - (shape[0] - 1) as f64) * steps[0];
                        let d1 = (b as f64 - (shape[1] - 1) as f64) * steps[1];
                        offsets.push(self.eval(space, &[d0, d1], &[0.0, 0.0]));
                    }
                }
                EdgeTable::Stationary {
                    shape,
                    offsets,
                    reversed: Vec::new(),
                }
            }
            EdgePotential::FiniteKernelExpansion { eigenvalues } => {
                // psi = Phi^T diag(lambda) Phi with Phi tabulated once.
                let a = space.axes()[0];
                let c = (2.0 / a.len()).sqrt();
                let s: Vec<f64> = (0..n).map(|i| (grid.point(i)[0] - a.lo) / a.len()).collect();
                let phi: Vec<Vec<f64>> = (0..eigenvalues.len())
                    .map(|j| {
                        let f = (2 * j + 1) as f64 * PI;
                        s.iter().map(|t| c * (f * t).sin()).collect()
                    })
                    .collect();
                use rayon::prelude::*;
                let values: Vec<f64> = (0..n)
                    .into_par_iter()
                    .flat_map_iter(|x| {
                        let mut row = vec![0.0; n];
                        for (l, p) in eigenvalues.iter().zip(&phi) {
                            let lx = l * p[x];
                            row.iter_mut().zip(p).for_each(|(r, py)| *r += lx * py);
                        }
                        row
                    })
                    .collect();
                EdgeTable::Dense { n, values }
            }
            EdgePotential::GridTable { values } => {
                if values.len() != n * n {
                    return Err(Error::GridMismatch {
                        expected: n * n,
                        got: values.len(),
                    });
                }
                EdgeTable::Dense {
                    n,
                    values: values.clone(),
                }
            }
        };
        table.clamp_positive()?;
        Ok(table)
    }
}

fn check_mixture(weights: &[f64], variances: &[f64]) -> Result<()> {
    if weights.is_empty() || weights.len() != variances.len() {
        return Err(Error::Config("mixture needs matching, non-empty weights and variances".into()));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "mixture weights must be non-negative and sum to 1, got {weights:?}"
        )));
    }
    if variances.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Config(format!("mixture variances must be positive, got {variances:?}")));
    }
    Ok(())
}

fn clamp_positive(values: &mut [f64], what: &str) -> Result<()> {
    let max = values.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config(format!("{what} is not finite on the grid")));
    }
    if !(max > 0.0) {
        return Err(Error::Degenerate(format!("{what} vanishes on the whole grid")));
    }
    let min = values.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    if min < -NEGATIVE_TOLERANCE_REL * max {
        return Err(Error::Config(format!("{what} takes negative value {min}")));
    }
    let floor = POTENTIAL_FLOOR_REL * max;
    values.iter_mut().for_each(|v| *v = v.max(floor));
    Ok(())
}

/// Grid tabulation of an edge potential.
///
/// `Stationary` tables depend only on the index offset `x - y` and hold
/// `(2 n0 - 1) x (2 n1 - 1)` values; `Dense` tables hold the full `n x n`
/// matrix `psi(x_a, x_b)`.
#[derive(Debug, Clone, PartialEq)]
pub enum EdgeTable {
    Constant(f64),
    Stationary {
        shape: [usize; 2],
        offsets: Vec<f64>,
        reversed: Vec<f64>,
    },
    Dense {
        n: usize,
        values: Vec<f64>,
    },
}

impl EdgeTable {
    fn clamp_positive(&mut self) -> Result<()> {
        match self {
            EdgeTable::Constant(c) => {
                if !(*c > 0.0) {
                    return Err(Error::Degenerate("constant edge potential is not positive".into()));
                }
            }
            EdgeTable::Stationary {
                offsets, reversed, ..
            } => {
                clamp_positive(offsets, "edge potential")?;
                *reversed = offsets.iter().rev().copied().collect();
            }
            EdgeTable::Dense { values, .. } => clamp_positive(values, "edge potential")?,
        }
        Ok(())
    }

    /// `psi(x_a, x_b)` at grid nodes, or `psi(x_b, x_a)` when `transposed`.
    #[inline]
    pub fn value(&self, grid: &Grid, x: usize, y: usize, transposed: bool) -> f64 {
        match self {
            EdgeTable::Constant(c) => *c,
            EdgeTable::Stationary {
                shape,
                offsets,
                reversed,
            } => {
                let t = if transposed { reversed } else { offsets };
                let (mx, my) = (grid.multi_index(x), grid.multi_index(y));
                let a = mx[0] + shape[0] - 1 - my[0];
                let b = mx[1] + shape[1] - 1 - my[1];
                t[a * (2 * shape[1] - 1) + b]
            }
            EdgeTable::Dense { n, values } => {
                if transposed {
                    values[y * n + x]
                } else {
                    values[x * n + y]
                }
            }
        }
    }

    /// Fills `out[x] = value(x, y)` for every grid node `x`.
    pub fn column(&self, grid: &Grid, y: usize, transposed: bool, out: &mut [f64]) {
        let n = grid.len();
        match self {
            EdgeTable::Constant(c) => out.iter_mut().for_each(|v| *v = *c),
            EdgeTable::Stationary { shape, .. } if shape[1] == 1 => {
                let t = self.oriented(transposed);
                out.copy_from_slice(&t[n - 1 - y..2 * n - 1 - y]);
            }
            EdgeTable::Dense { values, .. } if transposed => {
                out.copy_from_slice(&values[y * n..(y + 1) * n]);
            }
            _ => {
                for (x, o) in out.iter_mut().enumerate() {
                    *o = self.value(grid, x, y, transposed);
                }
            }
        }
    }

    /// `out[x] = sum_y value(x, y) h[y]` (`h` already carries quadrature
    /// weights).
    pub fn apply(&self, grid: &Grid, h: &[f64], transposed: bool, out: &mut [f64]) {
        let n = grid.len();
        out.iter_mut().for_each(|v| *v = 0.0);
        match self {
            EdgeTable::Constant(c) => {
                let s: f64 = h.iter().sum();
                out.iter_mut().for_each(|v| *v = c * s);
            }
            EdgeTable::Stationary { shape, .. } if shape[1] == 1 => {
                let t = self.oriented(transposed);
                for (y, hy) in h.iter().enumerate() {
                    if *hy == 0.0 {
                        continue;
                    }
                    let col = &t[n - 1 - y..2 * n - 1 - y];
                    out.iter_mut().zip(col).for_each(|(o, k)| *o += hy * k);
                }
            }
            EdgeTable::Dense { values, .. } => {
                if transposed {
                    for (y, hy) in h.iter().enumerate() {
                        let row = &values[y * n..(y + 1) * n];
                        out.iter_mut().zip(row).for_each(|(o, k)| *o += hy * k);
                    }
                } else {
                    for (x, o) in out.iter_mut().enumerate() {
                        let row = &values[x * n..(x + 1) * n];
                        *o = row.iter().zip(h).map(|(k, hy)| k * hy).sum();
                    }
                }
            }
            _ => {
                let mut col = vec![0.0; n];
                for (y, hy) in h.iter().enumerate() {
                    self.column(grid, y, transposed, &mut col);
                    out.iter_mut().zip(&col).for_each(|(o, k)| *o += hy * k);
                }
            }
        }
    }

    fn oriented(&self, transposed: bool) -> &[f64] {
        match self {
            EdgeTable::Stationary {
                offsets, reversed, ..
            } => {
                if transposed {
                    reversed
                } else {
                    offsets
                }
            }
            _ => unreachable!("only stationary tables carry offsets"),
        }
    }

    pub(crate) fn hash_into(&self, h: &mut Sha256) {
        match self {
            EdgeTable::Constant(c) => {
                h.update(b"C");
                h.update(c.to_le_bytes());
            }
            EdgeTable::Stationary { shape, offsets, .. } => {
                h.update(b"S");
                h.update((shape[0] as u64).to_le_bytes());
                h.update((shape[1] as u64).to_le_bytes());
                offsets.iter().for_each(|v| h.update(v.to_le_bytes()));
            }
            EdgeTable::Dense { n, values } => {
                h.update(b"D");
                h.update((*n as u64).to_le_bytes());
                values.iter().for_each(|v| h.update(v.to_le_bytes()));
            }
        }
    }
}

/// Random three-component mixture potentials for an `n`-node chain:
/// variances uniform on `(0, 0.5]`, node means uniform on `[-3, 3]`,
/// weights uniform on the simplex.
pub fn sample_mixture_ensemble(
    n: usize,
    seed: u64,
) -> Result<(Vec<NodePotential>, Vec<EdgePotential>)> {
    if n < 2 {
        return Err(Error::Config(format!("ensemble needs n >= 2, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = (0..n)
        .map(|_| {
            let weights = simplex3(&mut rng);
            let means = (0..3).map(|_| rng.random_range(-3.0..=3.0)).collect();
            let variances = (0..3).map(|_| variance(&mut rng)).collect();
            NodePotential::GaussianMixture {
                weights,
                means,
                variances,
            }
        })
        .collect();
    let edges = (0..n - 1)
        .map(|_| {
            let weights = simplex3(&mut rng);
            let variances = (0..3).map(|_| variance(&mut rng)).collect();
            EdgePotential::GaussianMixtureDiff { weights, variances }
        })
        .collect();
    Ok((nodes, edges))
}

fn simplex3<R: Rng>(rng: &mut R) -> Vec<f64> {
    let e: [f64; 3] = [Exp1.sample(rng), Exp1.sample(rng), Exp1.sample(rng)];
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

/// Uniform on `(0, 0.5]`.
fn variance<R: Rng>(rng: &mut R) -> f64 {
    0.5 * (1.0 - rng.random::<f64>())
}
