//! Stochastic orthogonal-series message passing.
//!
//! Every directed edge `v -> u` carries `r` basis coefficients. One
//! iteration, simultaneously for all directed edges:
//!
//! 1. synthesize the incoming messages and keep their positive part,
//! 2. draw `k` samples from the density `∝ beta_uv(y) prod_w m_{w->v}(y)`,
//! 3. average the precomputed `g_{vu;j}` over the samples,
//! 4. blend the average into the coefficients with step size `eta_t`.
//!
//! Randomness for edge `i` at iteration `t` comes from a ChaCha stream keyed
//! by `(seed, i, t)`, so results do not depend on scheduling or thread
//! count.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{positive_part, Basis};
use crate::model::{Graph, PairwiseMrf};
use crate::quadrature::{CompatTables, Grid, State};
use crate::{Error, Result};

/// Step-size schedule for the coefficient update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StepRule {
    /// `eta_t = 1 / (t + 1)`.
    Basic,
    /// `eta_t = 1 / (gamma (t + 1))` for a `gamma`-contractive BP operator.
    Contractive { gamma: f64 },
}

impl StepRule {
    #[inline]
    pub fn eta(&self, t: usize) -> f64 {
        match self {
            StepRule::Basic => 1.0 / (t as f64 + 1.0),
            StepRule::Contractive { gamma } => 1.0 / (gamma * (t as f64 + 1.0)),
        }
    }

    /// Whether every step is a convex combination (`eta_t <= 1`).
    pub fn is_convex(&self) -> bool {
        match self {
            StepRule::Basic => true,
            StepRule::Contractive { gamma } => *gamma >= 1.0,
        }
    }
}

/// Which iterations a [`RunTrace`] records: every `t < dense_until`, then
/// `per_decade` log-spaced times per factor of ten, plus the last one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cadence {
    pub dense_until: usize,
    pub per_decade: usize,
}

impl Default for Cadence {
    fn default() -> Self {
        Self {
            dense_until: 100,
            per_decade: 20,
        }
    }
}

impl Cadence {
    pub fn times(&self, iters: usize) -> Vec<usize> {
        let mut out: Vec<usize> = (0..self.dense_until.min(iters + 1)).collect();
        if iters >= self.dense_until {
            let base = self.dense_until.max(1) as f64;
            let mut k = 0;
            loop {
                let t = (base * 10f64.powf(k as f64 / self.per_decade.max(1) as f64)).round() as usize;
                if t > iters {
                    break;
                }
                if out.last().is_none_or(|&l| t > l) {
                    out.push(t);
                }
                k += 1;
            }
            if out.last() != Some(&iters) {
                out.push(iters);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SosmpConfig {
    /// Coefficients kept per directed edge.
    pub r: usize,
    /// Samples per directed edge per iteration.
    pub k: usize,
    pub step_rule: StepRule,
    pub seed: u64,
    pub iters: usize,
    #[serde(default)]
    pub cadence: Cadence,
}

impl SosmpConfig {
    pub fn new(r: usize, k: usize) -> Self {
        Self {
            r,
            k,
            step_rule: StepRule::Basic,
            seed: 0,
            iters: 1000,
            cadence: Cadence::default(),
        }
    }

    pub fn with_iters(mut self, iters: usize) -> Self {
        self.iters = iters;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_step_rule(mut self, rule: StepRule) -> Self {
        self.step_rule = rule;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.r == 0 || self.k == 0 {
            return Err(Error::Config(format!(
                "r and k must be positive, got r = {}, k = {}",
                self.r, self.k
            )));
        }
        if let StepRule::Contractive { gamma } = self.step_rule {
            if !(gamma > 0.0 && gamma < 2.0) {
                return Err(Error::Config(format!("gamma must lie in (0, 2), got {gamma}")));
            }
        }
        Ok(())
    }
}

/// Iteration counter and coefficient vectors, one per directed edge.
#[derive(Debug, Clone, PartialEq)]
pub struct SosmpState {
    pub t: usize,
    pub coeffs: Vec<Vec<f64>>,
}

/// `a_j = 1 / r` on every directed edge, `t = 0`.
pub fn init_state(config: &SosmpConfig, graph: &Graph) -> SosmpState {
    SosmpState {
        t: 0,
        coeffs: vec![vec![1.0 / config.r as f64; config.r]; graph.num_directed()],
    }
}

/// `[sum_j a_j phi_j]_+` on the grid.
pub fn projected_message(coeffs: &[f64], basis: &Basis) -> Result<Vec<f64>> {
    Ok(positive_part(&basis.synthesize(coeffs)?))
}

/// Draws from a tabulated density.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub states: Vec<State>,
    /// The density had no mass and the draws fell back to uniform.
    pub fallback: bool,
}

/// `k` i.i.d. draws from the density `∝ density` on `grid`.
///
/// A grid node is selected with probability proportional to its quadrature
/// mass `w_i * density_i` by inverse-CDF lookup; the draw is then placed
/// uniformly inside that node's cell. A density without mass falls back to
/// uniform draws and sets [`Samples::fallback`].
pub fn sample_density<R: Rng + ?Sized>(grid: &Grid, density: &[f64], k: usize, rng: &mut R) -> Samples {
    let w = grid.weights();
    let mut cdf = Vec::with_capacity(density.len());
    let mut total = 0.0;
    for (p, wi) in density.iter().zip(w) {
        total += p.max(0.0) * wi;
        cdf.push(total);
    }
    let fallback = !(total > 0.0) || !total.is_finite();
    if fallback {
        total = 0.0;
        cdf.clear();
        for wi in w {
            total += wi;
            cdf.push(total);
        }
    }
    let states = (0..k)
        .map(|_| {
            let u = rng.random::<f64>() * total;
            let idx = cdf.partition_point(|c| *c <= u).min(cdf.len() - 1);
            let cell = grid.cell(idx);
            let mut x = [0.0; 2];
            for (d, xd) in x.iter_mut().enumerate().take(grid.dims()) {
                let (lo, hi) = cell[d];
                *xd = lo + (hi - lo) * rng.random::<f64>();
            }
            x
        })
        .collect();
    Samples { states, fallback }
}

/// Unnormalized sampling density `beta_uv(y) prod_{w in N(v)\u} m_{w->v}(y)`
/// for directed edge `edge`, given every projected message.
pub fn edge_density(
    graph: &Graph,
    tables: &CompatTables,
    edge: usize,
    projected: &[Vec<f64>],
) -> Vec<f64> {
    let mut d = tables.edge(edge).beta().to_vec();
    for &k in graph.inputs(edge) {
        d.iter_mut().zip(&projected[k]).for_each(|(a, m)| *a *= m);
    }
    d
}

/// `b_j = (1/k) sum_i g_{vu;j}(Y_i)` with `g` interpolated between grid nodes.
pub fn stochastic_coeffs(tables: &CompatTables, grid: &Grid, edge: usize, samples: &[State]) -> Vec<f64> {
    let mut b = vec![0.0; tables.r()];
    if samples.is_empty() {
        return b;
    }
    let w = 1.0 / samples.len() as f64;
    for y in samples {
        tables.accumulate_g(grid, edge, y, w, &mut b);
    }
    b
}

/// RNG stream for directed edge `edge` at iteration `t`.
pub fn edge_rng(seed: u64, edge: usize, t: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(edge as u64).to_le_bytes());
    key[16..24].copy_from_slice(&(t as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub t: usize,
    /// `(1/|E|) sum_edges sum_j (a_j - a*_j)^2`.
    pub e_t: f64,
    /// `e_t / e_0`.
    pub e_rel: f64,
    /// Largest per-edge squared coefficient error.
    pub max_edge_err: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
    /// Mean of `e_t` over every `t` in `(T/10, T]` (NaN without reference).
    pub tail_mean: f64,
    /// Per-edge squared coefficient errors at the last iteration.
    pub final_edge_errors: Vec<f64>,
    /// Edge-iterations that hit the zero-density fallback.
    pub fallbacks: usize,
    pub final_state: SosmpState,
}

impl RunTrace {
    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// Error at `t = 0`.
    pub fn e0(&self) -> f64 {
        self.records.first().filter(|r| r.t == 0).map_or(f64::NAN, |r| r.e_t)
    }

    /// Final-decade mean of `e_t / e_0`.
    pub fn tail_mean_rel(&self) -> f64 {
        self.tail_mean / self.e0()
    }
}

/// A configured SOSMP run over precomputed tables.
pub struct Sosmp<'a> {
    mrf: &'a PairwiseMrf,
    basis: &'a Basis,
    tables: &'a CompatTables,
    config: SosmpConfig,
}

impl<'a> Sosmp<'a> {
    pub fn new(
        mrf: &'a PairwiseMrf,
        basis: &'a Basis,
        tables: &'a CompatTables,
        config: SosmpConfig,
    ) -> Result<Self> {
        config.validate()?;
        if basis.len() != config.r || tables.r() != config.r {
            return Err(Error::Config(format!(
                "config r = {} but basis has {} and tables {} functions",
                config.r,
                basis.len(),
                tables.r()
            )));
        }
        if tables.num_edges() != mrf.graph().num_directed() {
            return Err(Error::Config("tables were built for a different graph".into()));
        }
        Ok(Self {
            mrf,
            basis,
            tables,
            config,
        })
    }

    pub fn config(&self) -> &SosmpConfig {
        &self.config
    }

    pub fn init(&self) -> SosmpState {
        init_state(&self.config, self.mrf.graph())
    }

    /// Projected messages `[sum_j a_j phi_j]_+` for every directed edge.
    pub fn projected(&self, state: &SosmpState) -> Vec<Vec<f64>> {
        let n = self.basis.grid_len();
        state
            .coeffs
            .par_iter()
            .map(|a| {
                let mut m = vec![0.0; n];
                self.basis.synthesize_into(a, &mut m);
                m.iter_mut().for_each(|v| *v = v.max(0.0));
                m
            })
            .collect()
    }

    /// Fresh stochastic estimates `b^{t+1}` for every directed edge, plus
    /// the number of fallback draws.
    pub fn estimates(&self, state: &SosmpState) -> (Vec<Vec<f64>>, usize) {
        let projected = self.projected(state);
        let graph = self.mrf.graph();
        let grid = self.mrf.grid();
        let out: Vec<(Vec<f64>, bool)> = (0..graph.num_directed())
            .into_par_iter()
            .map(|i| {
                let density = edge_density(graph, self.tables, i, &projected);
                let mut rng = edge_rng(self.config.seed, i, state.t);
                let s = sample_density(grid, &density, self.config.k, &mut rng);
                (stochastic_coeffs(self.tables, grid, i, &s.states), s.fallback)
            })
            .collect();
        let fallbacks = out.iter().filter(|(_, f)| *f).count();
        (out.into_iter().map(|(b, _)| b).collect(), fallbacks)
    }

    /// One synchronous iteration `a^{t+1} = (1 - eta_t) a^t + eta_t b^{t+1}`.
    /// Returns the number of fallback draws.
    pub fn step(&self, state: &mut SosmpState) -> usize {
        let (fresh, fallbacks) = self.estimates(state);
        let eta = self.config.step_rule.eta(state.t);
        let bounds = self.tables.bounds();
        let convex = self.config.step_rule.is_convex();
        state
            .coeffs
            .par_iter_mut()
            .zip(fresh.par_iter())
            .for_each(|(a, b)| {
                for (j, (aj, bj)) in a.iter_mut().zip(b).enumerate() {
                    debug_assert!(bj.abs() <= bounds[j] * (1.0 + 1e-12) + 1e-300);
                    *aj = (1.0 - eta) * *aj + eta * bj;
                    debug_assert!(!convex || aj.abs() <= bounds[j] * (1.0 + 1e-9) + 1e-300);
                }
            });
        state.t += 1;
        fallbacks
    }

    /// Runs `config.iters` iterations from the uniform initialization.
    pub fn run(&self, reference: Option<&[Vec<f64>]>) -> Result<RunTrace> {
        self.run_with(reference, |_| {})
    }

    /// As [`Sosmp::run`], calling `observe` after every iteration.
    pub fn run_with(
        &self,
        reference: Option<&[Vec<f64>]>,
        mut observe: impl FnMut(&SosmpState),
    ) -> Result<RunTrace> {
        if let Some(r) = reference {
            if r.len() != self.mrf.graph().num_directed()
                || r.iter().any(|a| a.len() != self.config.r)
            {
                return Err(Error::Config(
                    "reference coefficients do not match the graph and r".into(),
                ));
            }
        }
        let iters = self.config.iters;
        let times = self.config.cadence.times(iters);
        let mut next_record = 0;
        let start = Instant::now();
        let mut state = self.init();
        let mut fallbacks = 0;
        let mut e0 = f64::NAN;
        let mut records = Vec::with_capacity(times.len());
        let tail_start = iters / 10 + 1;
        let mut tail_sum = 0.0;
        let mut tail_count = 0usize;
        let mut edge_errs = Vec::new();
        loop {
            let t = state.t;
            let want_record = next_record < times.len() && times[next_record] == t;
            let in_tail = t >= tail_start && t <= iters;
            if let Some(reference) = reference.filter(|_| want_record || in_tail || t == 0 || t == iters) {
                edge_errs = state
                    .coeffs
                    .iter()
                    .zip(reference)
                    .map(|(a, s)| a.iter().zip(s).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
                    .collect();
                let e_t = edge_errs.iter().sum::<f64>() / edge_errs.len().max(1) as f64;
                if t == 0 {
                    e0 = e_t;
                }
                if in_tail {
                    tail_sum += e_t;
                    tail_count += 1;
                }
                if want_record {
                    records.push(TraceRecord {
                        t,
                        e_t,
                        e_rel: e_t / e0,
                        max_edge_err: edge_errs.iter().copied().fold(0.0, f64::max),
                        wall_ms: start.elapsed().as_secs_f64() * 1e3,
                    });
                }
            } else if want_record {
                records.push(TraceRecord {
                    t,
                    e_t: f64::NAN,
                    e_rel: f64::NAN,
                    max_edge_err: f64::NAN,
                    wall_ms: start.elapsed().as_secs_f64() * 1e3,
                });
            }
            if want_record {
                next_record += 1;
            }
            if t >= iters {
                break;
            }
            fallbacks += self.step(&mut state);
            observe(&state);
        }
        Ok(RunTrace {
            records,
            tail_mean: if tail_count > 0 {
                tail_sum / tail_count as f64
            } else {
                f64::NAN
            },
            final_edge_errors: edge_errs,
            fallbacks,
            final_state: state,
        })
    }
}

/// `tau_u ∝ psi_u prod_{v in N(u)} [sum_j a_{v->u;j} phi_j]_+`.
pub fn marginal_from_coeffs(
    mrf: &PairwiseMrf,
    basis: &Basis,
    state: &SosmpState,
    u: usize,
) -> Result<Vec<f64>> {
    let mut tau = mrf.node_table(u).to_vec();
    let mut m = vec![0.0; basis.grid_len()];
    for &k in mrf.graph().incoming(u) {
        basis.synthesize_into(&state.coeffs[k], &mut m);
        tau.iter_mut().zip(&m).for_each(|(a, v)| *a *= v.max(0.0));
    }
    mrf.grid()
        .normalize(&mut tau)
        .map_err(|_| Error::Degenerate(format!("SOSMP marginal at node {u} has zero mass")))?;
    Ok(tau)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::basis::BasisSpec;
    use crate::model::{EdgePotential, NodePotential, StateSpace};

    fn constant_chain(n: usize, r: usize) -> (PairwiseMrf, Basis, CompatTables) {
        let space = StateSpace::standard();
        let mrf = PairwiseMrf::chain(
            space.clone(),
            vec![NodePotential::Uniform; n],
            vec![Arc::new(EdgePotential::Uniform); n - 1],
        )
        .unwrap();
        let basis = Basis::new(BasisSpec::for_space(&space, r).unwrap(), mrf.grid());
        let tables = CompatTables::compute(&mrf, &basis).unwrap();
        (mrf, basis, tables)
    }

    #[test]
    fn init_is_one_over_r() {
        let g = Graph::chain(3).unwrap();
        let s = init_state(&SosmpConfig::new(10, 5), &g);
        assert_eq!(s.t, 0);
        assert!(s.coeffs.iter().flatten().all(|v| *v == 0.1));
        assert_eq!(s.coeffs[0], s.coeffs[1]);
        let s1 = init_state(&SosmpConfig::new(1, 5), &g);
        assert_eq!(s1.coeffs[0], vec![1.0]);
    }

    #[test]
    fn projected_message_cases() {
        let (_, basis, _) = constant_chain(2, 3);
        let m = projected_message(&[1.0, 0.0, 0.0], &basis).unwrap();
        assert_eq!(m, positive_part(basis.row(0)));
        let z = projected_message(&[-1.0, 0.0, 0.0], &basis).unwrap();
        assert!(z.iter().all(|v| *v == 0.0));
        let u = projected_message(&[1.0 / 3.0; 3], &basis).unwrap();
        let interior = &u[1..u.len() - 1];
        assert!(interior.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn sampler_single_draw_in_range() {
        let grid = StateSpace::standard().grid().unwrap();
        let mut rng = edge_rng(1, 0, 0);
        let s = sample_density(&grid, &vec![1.0; grid.len()], 1, &mut rng);
        assert_eq!(s.states.len(), 1);
        assert!((-5.0..=5.0).contains(&s.states[0][0]));
        assert!(!s.fallback);
    }

    #[test]
    fn sampler_zero_density_falls_back_to_uniform() {
        let grid = StateSpace::standard().grid().unwrap();
        let mut rng = edge_rng(1, 0, 0);
        let s = sample_density(&grid, &vec![0.0; grid.len()], 2000, &mut rng);
        assert!(s.fallback);
        let mean = s.states.iter().map(|x| x[0]).sum::<f64>() / 2000.0;
        assert!(mean.abs() < 0.5);
    }

    #[test]
    fn sampler_uniform_ks() {
        let grid = StateSpace::standard().grid().unwrap();
        let mut rng = edge_rng(7, 3, 0);
        let s = sample_density(&grid, &vec![2.5; grid.len()], 10_000, &mut rng);
        let mut xs: Vec<f64> = s.states.iter().map(|x| x[0]).collect();
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let f = (x + 5.0) / 10.0;
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.05, "KS = {ks}");
    }

    #[test]
    fn sampler_mean_matches_quadrature() {
        let space = StateSpace::standard();
        let grid = space.grid().unwrap();
        let basis = Basis::new(BasisSpec::for_space(&space, 2).unwrap(), &grid);
        // phi_1^2 + 0.3 phi_2^2 is asymmetric only through nothing; add a tilt
        let density: Vec<f64> = (0..grid.len())
            .map(|i| basis.row(0)[i].powi(2) * (1.0 + 0.15 * grid.point(i)[0]))
            .collect();
        let mass = grid.integrate(&density);
        let xs: Vec<f64> = grid.points().iter().map(|p| p[0]).collect();
        let mean = grid.inner(&density, &xs) / mass;
        let x2: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let var = grid.inner(&density, &x2) / mass - mean * mean;
        let mut rng = edge_rng(11, 0, 0);
        let n = 10_000;
        let s = sample_density(&grid, &density, n, &mut rng);
        let emp = s.states.iter().map(|x| x[0]).sum::<f64>() / n as f64;
        let se = (var / n as f64).sqrt();
        assert!((emp - mean).abs() < 3.0 * se, "emp {emp} vs {mean} (se {se})");
    }

    #[test]
    fn constant_kernel_coefficients_are_deterministic() {
        let (mrf, basis, tables) = constant_chain(3, 4);
        let grid = mrf.grid();
        let want: Vec<f64> = (0..4).map(|j| grid.integrate(basis.row(j)) / 10.0).collect();
        let samples = vec![[-2.3, 0.0], [4.99, 0.0], [0.0, 0.0]];
        let b = stochastic_coeffs(&tables, grid, 0, &samples);
        for (x, y) in b.iter().zip(&want) {
            assert!((x - y).abs() < 1e-10);
        }
        let cfg = SosmpConfig::new(4, 3).with_iters(5).with_seed(3);
        let run = Sosmp::new(&mrf, &basis, &tables, cfg).unwrap();
        let mut state = run.init();
        run.step(&mut state);
        // eta_0 = 1 so a^1 = b^1 exactly
        for a in &state.coeffs {
            assert_eq!(a, &stochastic_coeffs(&tables, grid, 0, &samples));
        }
        let a1 = state.coeffs.clone();
        for _ in 0..4 {
            run.step(&mut state);
        }
        for (a, b) in state.coeffs.iter().zip(&a1) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn equal_samples_give_point_value() {
        let space = StateSpace::standard();
        let (nodes, edges) = crate::model::sample_mixture_ensemble(2, 3).unwrap();
        let mrf = PairwiseMrf::chain(space.clone(), nodes, edges.into_iter().map(Arc::new).collect()).unwrap();
        let basis = Basis::new(BasisSpec::for_space(&space, 5).unwrap(), mrf.grid());
        let tables = CompatTables::compute(&mrf, &basis).unwrap();
        let y0 = [0.731, 0.0];
        let b = stochastic_coeffs(&tables, mrf.grid(), 1, &[y0; 6]);
        for (j, bj) in b.iter().enumerate() {
            let want = mrf.grid().interpolate(tables.edge(1).g(j), &y0);
            assert!((bj - want).abs() < 1e-12);
        }
    }

    #[test]
    fn contractive_gamma_one_equals_basic() {
        for t in 0..50 {
            assert_eq!(StepRule::Basic.eta(t), StepRule::Contractive { gamma: 1.0 }.eta(t));
        }
        let bad = SosmpConfig::new(3, 1).with_step_rule(StepRule::Contractive { gamma: 2.0 });
        assert!(bad.validate().is_err());
        assert!(SosmpConfig::new(0, 1).validate().is_err());
    }

    #[test]
    fn runs_are_deterministic_and_reference_errors_vanish() {
        let (mrf, basis, tables) = constant_chain(4, 3);
        let cfg = SosmpConfig::new(3, 2).with_iters(30).with_seed(9);
        let s = Sosmp::new(&mrf, &basis, &tables, cfg).unwrap();
        let reference = s.run(None).unwrap().final_state.coeffs;
        let a = s.run(Some(&reference)).unwrap();
        let b = s.run(Some(&reference)).unwrap();
        assert_eq!(a.final_state, b.final_state);
        let ea: Vec<f64> = a.records.iter().map(|r| r.e_t).collect();
        let eb: Vec<f64> = b.records.iter().map(|r| r.e_t).collect();
        assert_eq!(ea, eb);
        assert_eq!(a.last().unwrap().e_t, 0.0);
        assert!(s.run(Some(&reference[..2])).is_err());
    }

    #[test]
    fn cadence_is_dense_then_logarithmic() {
        let c = Cadence::default();
        let t = c.times(5000);
        assert_eq!(&t[..100], &(0..100).collect::<Vec<_>>()[..]);
        assert_eq!(t[100], 100);
        assert_eq!(*t.last().unwrap(), 5000);
        assert!(t.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(c.times(10), (0..=10).collect::<Vec<_>>());
    }

    #[test]
    fn marginal_from_uniform_equivalent_messages() {
        let (mrf, basis, _) = constant_chain(3, 2);
        let state = SosmpState {
            t: 1,
            coeffs: vec![vec![1.0, 0.0]; 4],
        };
        let tau = marginal_from_coeffs(&mrf, &basis, &state, 0).unwrap();
        assert!((mrf.grid().integrate(&tau) - 1.0).abs() < 1e-10);
        let zero = SosmpState {
            t: 1,
            coeffs: vec![vec![-1.0, 0.0]; 4],
        };
        assert!(matches!(
            marginal_from_coeffs(&mrf, &basis, &zero, 1),
            Err(Error::Degenerate(_))
        ));
    }
}
