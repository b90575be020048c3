//! Experiment drivers shared by the command-line tool and the test suite.

use std::sync::Arc;

use crate::basis::{Basis, BasisSpec};
use crate::bp_dense::{run_to_fixed_point, FixedPointRun};
use crate::model::{sample_mixture_ensemble, EdgePotential, PairwiseMrf, StateSpace};
use crate::quadrature::CompatTables;
use crate::sosmp::{RunTrace, Sosmp, SosmpConfig};
use crate::{Error, Result};

/// Kernel expansions truncate after this many terms.
pub const KERNEL_TERMS: usize = 1000;

/// Random Gaussian-mixture chain of `n` nodes on `[-5, 5]` at 100 points
/// per unit.
pub fn mixture_chain(n: usize, seed: u64) -> Result<PairwiseMrf> {
    let (nodes, edges) = sample_mixture_ensemble(n, seed)?;
    PairwiseMrf::chain(StateSpace::standard(), nodes, edges.into_iter().map(Arc::new).collect())
}

/// Chain with mixture node potentials and one shared kernel edge potential
/// `lambda_j = j^{-alpha}`, `j <= terms`.
pub fn kernel_chain(n: usize, alpha: f64, terms: usize, seed: u64) -> Result<PairwiseMrf> {
    let (nodes, _) = sample_mixture_ensemble(n, seed)?;
    let edge = Arc::new(EdgePotential::kernel_expansion(alpha, terms));
    PairwiseMrf::chain(StateSpace::standard(), nodes, vec![edge; n - 1])
}

/// Dense BP fixed point; trees converge in `diameter + 1` sweeps.
pub fn oracle(mrf: &PairwiseMrf) -> Result<FixedPointRun> {
    let g = mrf.graph();
    let max = if g.is_tree() { g.diameter() + 2 } else { 1000 };
    run_to_fixed_point(mrf, 1e-12, max)
}

/// Basis, compatibility tables and reference coefficients for one `r`.
pub struct Prepared {
    pub basis: Basis,
    pub tables: CompatTables,
    pub reference: Vec<Vec<f64>>,
}

pub fn prepare(mrf: &PairwiseMrf, oracle: &FixedPointRun, r: usize) -> Result<Prepared> {
    let basis = Basis::new(BasisSpec::for_space(mrf.space(), r)?, mrf.grid());
    let tables = CompatTables::compute(mrf, &basis)?;
    let reference = oracle.messages.project(&basis)?;
    Ok(Prepared {
        basis,
        tables,
        reference,
    })
}

/// One run per seed; `config.seed` is replaced by each seed in turn.
pub fn run_seeds(
    mrf: &PairwiseMrf,
    prepared: &Prepared,
    config: &SosmpConfig,
    seeds: &[u64],
) -> Result<Vec<RunTrace>> {
    if seeds.is_empty() {
        return Err(Error::Config("at least one seed is required".into()));
    }
    seeds
        .iter()
        .map(|&s| {
            let cfg = config.clone().with_seed(s);
            Sosmp::new(mrf, &prepared.basis, &prepared.tables, cfg)?.run(Some(&prepared.reference))
        })
        .collect()
}

/// Seed average of a recorded trace point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanPoint {
    pub t: usize,
    pub e_t: f64,
    pub e_rel: f64,
}

/// Pointwise mean over traces recorded at identical times.
pub fn mean_trace(traces: &[RunTrace]) -> Vec<MeanPoint> {
    let Some(first) = traces.first() else {
        return Vec::new();
    };
    let n = traces.len() as f64;
    first
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| MeanPoint {
            t: r.t,
            e_t: traces.iter().map(|tr| tr.records[i].e_t).sum::<f64>() / n,
            e_rel: traces.iter().map(|tr| tr.records[i].e_rel).sum::<f64>() / n,
        })
        .collect()
}

/// Seed average of the final-decade mean error.
pub fn mean_tail(traces: &[RunTrace]) -> f64 {
    traces.iter().map(|t| t.tail_mean).sum::<f64>() / traces.len().max(1) as f64
}

/// Seed average of the final-decade mean of `e_t / e_0`.
pub fn mean_tail_rel(traces: &[RunTrace]) -> f64 {
    traces.iter().map(|t| t.tail_mean_rel()).sum::<f64>() / traces.len().max(1) as f64
}

/// Least-squares slope of `log e` against `log t` over `t in [lo, hi]`.
pub fn loglog_slope(points: &[(usize, f64)], lo: usize, hi: usize) -> f64 {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(t, e)| *t >= lo && *t <= hi && *t > 0 && *e > 0.0)
        .map(|(t, e)| ((*t as f64).ln(), e.ln()))
        .collect();
    let n = pts.len() as f64;
    if n < 2.0 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// `seeds` consecutive seeds starting at `base`.
pub fn seed_range(base: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|i| base + i).collect()
}
