//! Trapezoid quadrature on boxes and the normalized compatibility tables.
//!
//! Every integral in the crate is a weighted sum over a [`Grid`]. The tables
//! in [`CompatTables`] hold, for each directed edge `v -> u`, the sampling
//! weight `beta_uv(y) = psi_v(y) * int psi_uv(x, y) dx` and the inner
//! products `g_j(y) = <Gamma_uv(., y), phi_j>` of the normalized
//! compatibility function with the first `r` basis functions.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::basis::Basis;
use crate::bp_dense::DenseMessages;
use crate::model::{EdgeTable, PairwiseMrf};
use crate::{Error, Result};

/// A point of a (one- or two-dimensional) state space. The second
/// coordinate is ignored for one-dimensional spaces.
pub type State = [f64; 2];

/// One axis of a tensor trapezoid grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    lo: f64,
    hi: f64,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl Axis {
    /// `n >= 2` equally spaced nodes on `[lo, hi]` with trapezoid weights.
    pub fn trapezoid(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Config(format!(
                "invalid axis [{lo}, {hi}] with {n} points"
            )));
        }
        let h = (hi - lo) / (n - 1) as f64;
        let points = (0..n)
            .map(|i| if i == n - 1 { hi } else { lo + h * i as f64 })
            .collect();
        let mut weights = vec![h; n];
        weights[0] = 0.5 * h;
        weights[n - 1] = 0.5 * h;
        Ok(Self {
            lo,
            hi,
            points,
            weights,
        })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.len() - 1) as f64
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Left node index and fractional offset of `x`, clamped to the axis.
    #[inline]
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let n = self.len();
        let s = ((x - self.lo) / self.step()).clamp(0.0, (n - 1) as f64);
        let i = (s.floor() as usize).min(n - 2);
        (i, s - i as f64)
    }

    /// The quadrature cell owned by node `i`: half a step on each side,
    /// clipped to the axis.
    #[inline]
    pub fn cell(&self, i: usize) -> (f64, f64) {
        let h = 0.5 * self.step();
        let x = self.points[i];
        ((x - h).max(self.lo), (x + h).min(self.hi))
    }
}

/// Tensor-product trapezoid grid over a 1-D interval or 2-D box.
///
/// Two-dimensional grids are flattened row-major: `idx = i0 * n1 + i1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    axes: Vec<Axis>,
    weights: Vec<f64>,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        let weights = match axes.as_slice() {
            [a] => a.weights.clone(),
            [a, b] => a
                .weights
                .iter()
                .flat_map(|wa| b.weights.iter().map(move |wb| wa * wb))
                .collect(),
            _ => {
                return Err(Error::Config(format!(
                    "grids must have 1 or 2 axes, got {}",
                    axes.len()
                )))
            }
        };
        Ok(Self { axes, weights })
    }

    pub fn interval(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(vec![Axis::trapezoid(lo, hi, n)?])
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, d: usize) -> &Axis {
        &self.axes[d]
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn volume(&self) -> f64 {
        self.axes.iter().map(|a| a.hi - a.lo).product()
    }

    /// Per-axis node indices of flat index `idx`.
    #[inline]
    pub fn multi_index(&self, idx: usize) -> [usize; 2] {
        if self.axes.len() == 1 {
            [idx, 0]
        } else {
            let n1 = self.axes[1].len();
            [idx / n1, idx % n1]
        }
    }

    #[inline]
    pub fn flat_index(&self, mi: [usize; 2]) -> usize {
        if self.axes.len() == 1 {
            mi[0]
        } else {
            mi[0] * self.axes[1].len() + mi[1]
        }
    }

    /// Coordinates of grid node `idx`.
    #[inline]
    pub fn point(&self, idx: usize) -> State {
        let mi = self.multi_index(idx);
        let mut p = [0.0; 2];
        for (d, a) in self.axes.iter().enumerate() {
            p[d] = a.points[mi[d]];
        }
        p
    }

    pub fn points(&self) -> Vec<State> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    pub fn check(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::GridMismatch {
                expected: self.len(),
                got: f.len(),
            });
        }
        Ok(())
    }

    /// Trapezoid approximation of `int f dmu`.
    #[inline]
    pub fn integrate(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.len());
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// `<f, g>` in `L^2(mu)`.
    #[inline]
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.len());
        debug_assert_eq!(g.len(), self.len());
        self.weights
            .iter()
            .zip(f.iter().zip(g))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }

    pub fn norm_sq(&self, f: &[f64]) -> f64 {
        self.inner(f, f)
    }

    /// Squared `L^2` distance between two grid functions.
    pub fn dist_sq(&self, f: &[f64], g: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(f.iter().zip(g))
            .map(|(w, (a, b))| w * (a - b) * (a - b))
            .sum()
    }

    /// `L^1` distance between two grid functions.
    pub fn l1_dist(&self, f: &[f64], g: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(f.iter().zip(g))
            .map(|(w, (a, b))| w * (a - b).abs())
            .sum()
    }

    /// Rescales `f` in place to integrate to one. Returns the original mass.
    pub fn normalize(&self, f: &mut [f64]) -> Result<f64> {
        let z = self.integrate(f);
        if !(z > 0.0) || !z.is_finite() {
            return Err(Error::Degenerate(format!(
                "cannot normalize a function with mass {z}"
            )));
        }
        f.iter_mut().for_each(|v| *v /= z);
        Ok(z)
    }

    /// Piecewise (bi)linear interpolation of grid values at `x`, clamped
    /// to the box.
    #[inline]
    pub fn interpolate(&self, f: &[f64], x: &State) -> f64 {
        match self.axes.len() {
            1 => {
                let (i, s) = self.axes[0].locate(x[0]);
                f[i] * (1.0 - s) + f[i + 1] * s
            }
            _ => {
                let n1 = self.axes[1].len();
                let (i, s) = self.axes[0].locate(x[0]);
                let (j, t) = self.axes[1].locate(x[1]);
                let a = f[i * n1 + j];
                let b = f[i * n1 + j + 1];
                let c = f[(i + 1) * n1 + j];
                let d = f[(i + 1) * n1 + j + 1];
                (1.0 - s) * ((1.0 - t) * a + t * b) + s * ((1.0 - t) * c + t * d)
            }
        }
    }

    /// Interpolation stencil at `x`: up to four `(index, weight)` pairs.
    #[inline]
    pub fn stencil(&self, x: &State) -> ([usize; 4], [f64; 4], usize) {
        match self.axes.len() {
            1 => {
                let (i, s) = self.axes[0].locate(x[0]);
                ([i, i + 1, 0, 0], [1.0 - s, s, 0.0, 0.0], 2)
            }
            _ => {
                let n1 = self.axes[1].len();
                let (i, s) = self.axes[0].locate(x[0]);
                let (j, t) = self.axes[1].locate(x[1]);
                (
                    [i * n1 + j, i * n1 + j + 1, (i + 1) * n1 + j, (i + 1) * n1 + j + 1],
                    [
                        (1.0 - s) * (1.0 - t),
                        (1.0 - s) * t,
                        s * (1.0 - t),
                        s * t,
                    ],
                    4,
                )
            }
        }
    }

    /// Quadrature cell `[lo, hi]` per axis for node `idx`.
    pub fn cell(&self, idx: usize) -> [(f64, f64); 2] {
        let mi = self.multi_index(idx);
        let mut c = [(0.0, 0.0); 2];
        for (d, a) in self.axes.iter().enumerate() {
            c[d] = a.cell(mi[d]);
        }
        c
    }

    pub fn contains(&self, x: &State) -> bool {
        self.axes
            .iter()
            .enumerate()
            .all(|(d, a)| x[d] >= a.lo && x[d] <= a.hi)
    }
}

/// `g_j` tables for one (edge potential, orientation) pair, shared by all
/// directed edges that use the same potential.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelInnerProducts {
    r: usize,
    n: usize,
    /// `int psi_uv(x, y) dmu(x)` for every grid `y`.
    column_mass: Vec<f64>,
    /// `g_j(y)`, row-major `r x n`.
    g: Vec<f64>,
}

impl KernelInnerProducts {
    fn compute(grid: &Grid, table: &EdgeTable, transposed: bool, basis: &Basis) -> Result<Self> {
        let n = grid.len();
        let r = basis.len();
        let w = grid.weights();
        let rows: Vec<(f64, Vec<f64>)> = (0..n)
            .into_par_iter()
            .map(|y| {
                let mut col = vec![0.0; n];
                table.column(grid, y, transposed, &mut col);
                let mut mass = 0.0;
                for x in 0..n {
                    col[x] *= w[x];
                    mass += col[x];
                }
                let gy = (0..r)
                    .map(|j| {
                        let phi = basis.row(j);
                        col.iter().zip(phi).map(|(a, b)| a * b).sum::<f64>() / mass
                    })
                    .collect();
                (mass, gy)
            })
            .collect();
        let mut column_mass = Vec::with_capacity(n);
        let mut g = vec![0.0; r * n];
        for (y, (mass, gy)) in rows.into_iter().enumerate() {
            if !(mass > 0.0) || !mass.is_finite() {
                return Err(Error::Degenerate(format!(
                    "edge potential has zero mass in column {y}"
                )));
            }
            column_mass.push(mass);
            for (j, v) in gy.into_iter().enumerate() {
                g[j * n + y] = v;
            }
        }
        Ok(Self {
            r,
            n,
            column_mass,
            g,
        })
    }

    #[inline]
    pub fn row(&self, j: usize) -> &[f64] {
        &self.g[j * self.n..(j + 1) * self.n]
    }
}

/// Precomputed sampling weights and inner-product tables for one directed
/// edge `v -> u`.
#[derive(Debug, Clone)]
pub struct EdgeCompat {
    beta: Vec<f64>,
    inner: Arc<KernelInnerProducts>,
    table_key: (usize, bool),
}

impl EdgeCompat {
    /// `beta_uv(y)` on the grid.
    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// `g_{vu;j}` on the grid (0-based `j`).
    pub fn g(&self, j: usize) -> &[f64] {
        self.inner.row(j)
    }

    /// `int psi_uv(x, y) dmu(x)` on the grid.
    pub fn column_mass(&self) -> &[f64] {
        &self.inner.column_mass
    }
}

/// Normalized compatibility objects for every directed edge plus the
/// uniform bounds `B_j`.
#[derive(Debug, Clone)]
pub struct CompatTables {
    r: usize,
    edges: Vec<EdgeCompat>,
    bounds: Vec<f64>,
    content_hash: u64,
}

const CACHE_MAGIC: &[u8; 8] = b"SOSMPCT\0";
const CACHE_VERSION: u32 = 1;

impl CompatTables {
    /// Builds `beta`, `g_j` and `B_j` for every directed edge of `mrf`.
    ///
    /// Inner-product tables depend only on the edge potential and its
    /// orientation, so edges sharing a potential share one table.
    pub fn compute(mrf: &PairwiseMrf, basis: &Basis) -> Result<Self> {
        let grid = mrf.grid();
        if basis.grid_len() != grid.len() {
            return Err(Error::GridMismatch {
                expected: grid.len(),
                got: basis.grid_len(),
            });
        }
        let graph = mrf.graph();
        let mut keys: Vec<(usize, bool)> = Vec::new();
        let mut seen: HashMap<(usize, bool), usize> = HashMap::new();
        let mut edge_keys = Vec::with_capacity(graph.num_directed());
        for i in 0..graph.num_directed() {
            let (table_id, transposed) = mrf.edge_table_key(i);
            let key = (table_id, transposed);
            if !seen.contains_key(&key) {
                seen.insert(key, keys.len());
                keys.push(key);
            }
            edge_keys.push(key);
        }
        let mut inner: HashMap<(usize, bool), Arc<KernelInnerProducts>> = HashMap::new();
        for key in &keys {
            let table = mrf.table_by_id(key.0);
            let ip = KernelInnerProducts::compute(grid, table, key.1, basis)?;
            inner.insert(*key, Arc::new(ip));
        }
        let mut edges = Vec::with_capacity(graph.num_directed());
        for (i, key) in edge_keys.iter().enumerate() {
            let (v, _u) = graph.directed_edge(i);
            let ip = inner[key].clone();
            let psi_v = mrf.node_table(v);
            let beta: Vec<f64> = psi_v
                .iter()
                .zip(&ip.column_mass)
                .map(|(a, b)| a * b)
                .collect();
            if let Some(y) = beta.iter().position(|b| !(*b > 0.0) || !b.is_finite()) {
                return Err(Error::Degenerate(format!(
                    "beta vanishes at grid point {y} on directed edge {i}"
                )));
            }
            edges.push(EdgeCompat {
                beta,
                inner: ip,
                table_key: *key,
            });
        }
        let r = basis.len();
        let bounds = (0..r)
            .map(|j| {
                inner
                    .values()
                    .map(|ip| ip.row(j).iter().fold(0.0f64, |m, v| m.max(v.abs())))
                    .fold(0.0f64, f64::max)
            })
            .collect();
        Ok(Self {
            r,
            edges,
            bounds,
            content_hash: content_hash(mrf, basis),
        })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, i: usize) -> &EdgeCompat {
        &self.edges[i]
    }

    /// `B_j = max over edges and grid points of |g_j|`.
    pub fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    pub fn content_hash(&self) -> u64 {
        self.content_hash
    }

    /// Evaluates all `g_{vu;j}(y)` at an off-grid state by interpolation,
    /// accumulating `weight * g_j(y)` into `acc`.
    #[inline]
    pub fn accumulate_g(&self, grid: &Grid, edge: usize, y: &State, weight: f64, acc: &mut [f64]) {
        let ip = &self.edges[edge].inner;
        let (idx, wts, m) = grid.stencil(y);
        for (j, a) in acc.iter_mut().enumerate().take(self.r) {
            let row = ip.row(j);
            let mut v = 0.0;
            for s in 0..m {
                v += wts[s] * row[idx[s]];
            }
            *a += weight * v;
        }
    }

    /// `Gamma_uv(., y)` on the grid for grid node `y` (a density in `x`).
    pub fn gamma_slice(&self, mrf: &PairwiseMrf, edge: usize, y: usize) -> Vec<f64> {
        let grid = mrf.grid();
        let key = self.edges[edge].table_key;
        let mut col = vec![0.0; grid.len()];
        mrf.table_by_id(key.0).column(grid, y, key.1, &mut col);
        let mass = self.edges[edge].inner.column_mass[y];
        col.iter_mut().for_each(|v| *v /= mass);
        col
    }

    /// Writes the tables to a versioned little-endian binary file.
    pub fn write_cache(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        let n = self.edges.first().map_or(0, |e| e.beta.len());
        out.write_all(CACHE_MAGIC)?;
        out.write_all(&CACHE_VERSION.to_le_bytes())?;
        out.write_all(&self.content_hash.to_le_bytes())?;
        for v in [self.edges.len(), self.r, n] {
            out.write_all(&(v as u64).to_le_bytes())?;
        }
        for e in &self.edges {
            out.write_all(&(e.table_key.0 as u64).to_le_bytes())?;
            out.write_all(&[e.table_key.1 as u8])?;
            for v in e.beta.iter().chain(&e.inner.column_mass).chain(&e.inner.g) {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        for b in &self.bounds {
            out.write_all(&b.to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads tables written by [`CompatTables::write_cache`]; fails unless
    /// the stored content hash equals `expected_hash`.
    pub fn read_cache(path: &Path, expected_hash: u64) -> Result<Self> {
        let mut inp = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 8];
        inp.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(Error::Parse("not a compat-table cache file".into()));
        }
        let version = read_u32(&mut inp)?;
        if version != CACHE_VERSION {
            return Err(Error::Parse(format!("unsupported cache version {version}")));
        }
        let hash = read_u64(&mut inp)?;
        if hash != expected_hash {
            return Err(Error::Parse(format!(
                "cache hash {hash:016x} does not match model {expected_hash:016x}"
            )));
        }
        let num_edges = read_u64(&mut inp)? as usize;
        let r = read_u64(&mut inp)? as usize;
        let n = read_u64(&mut inp)? as usize;
        let mut shared: HashMap<(usize, bool), Arc<KernelInnerProducts>> = HashMap::new();
        let mut edges = Vec::with_capacity(num_edges);
        for _ in 0..num_edges {
            let id = read_u64(&mut inp)? as usize;
            let mut flag = [0u8; 1];
            inp.read_exact(&mut flag)?;
            let key = (id, flag[0] != 0);
            let beta = read_f64s(&mut inp, n)?;
            let column_mass = read_f64s(&mut inp, n)?;
            let g = read_f64s(&mut inp, r * n)?;
            let inner = shared
                .entry(key)
                .or_insert_with(|| {
                    Arc::new(KernelInnerProducts {
                        r,
                        n,
                        column_mass,
                        g,
                    })
                })
                .clone();
            edges.push(EdgeCompat {
                beta,
                inner,
                table_key: key,
            });
        }
        let bounds = read_f64s(&mut inp, r)?;
        Ok(Self {
            r,
            edges,
            bounds,
            content_hash: hash,
        })
    }

    /// Loads the tables from `path` when it holds a matching cache,
    /// otherwise computes them and writes the cache.
    pub fn cached(mrf: &PairwiseMrf, basis: &Basis, path: &Path) -> Result<Self> {
        let hash = content_hash(mrf, basis);
        if path.exists() {
            if let Ok(t) = Self::read_cache(path, hash) {
                return Ok(t);
            }
        }
        let t = Self::compute(mrf, basis)?;
        t.write_cache(path)?;
        Ok(t)
    }
}

/// Hash of the tabulated potentials, graph and basis that determine the
/// compatibility tables.
pub fn content_hash(mrf: &PairwiseMrf, basis: &Basis) -> u64 {
    let mut h = Sha256::new();
    let grid = mrf.grid();
    for a in grid.axes() {
        h.update(a.lo().to_le_bytes());
        h.update(a.hi().to_le_bytes());
        h.update((a.len() as u64).to_le_bytes());
    }
    h.update(format!("{:?}", basis.spec()).as_bytes());
    let graph = mrf.graph();
    for &(a, b) in graph.edges() {
        h.update((a as u64).to_le_bytes());
        h.update((b as u64).to_le_bytes());
    }
    for v in 0..graph.num_nodes() {
        for x in mrf.node_table(v) {
            h.update(x.to_le_bytes());
        }
    }
    for e in 0..graph.num_edges() {
        mrf.edge_table(e).hash_into(&mut h);
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64s(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; 8 * n];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

/// Outcome of the approximation-error condition on one directed edge.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFloorCheck {
    /// `min_x inf_y Pi^r(Gamma_uv(x, y))`.
    pub positivity_margin: f64,
    /// `min_x (inf_y Pi^r(Gamma_uv(x, y)) / 2 - |A^r(x)|)`.
    pub approx_margin: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FloorReport {
    pub edges: Vec<EdgeFloorCheck>,
}

impl FloorReport {
    pub fn all_hold(&self) -> bool {
        self.edges.iter().all(|e| e.holds)
    }

    pub fn min_positivity_margin(&self) -> f64 {
        self.edges
            .iter()
            .map(|e| e.positivity_margin)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn min_approx_margin(&self) -> f64 {
        self.edges
            .iter()
            .map(|e| e.approx_margin)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Evaluates, on the grid, whether the projected compatibility functions
/// stay positive and dominate twice the truncation error of the reference
/// fixed point `mstar`.
///
/// Points where every basis function vanishes (the interval endpoints for
/// half-sine bases) are skipped: no finite expansion can represent a value
/// there.
pub fn check_floor_condition(
    tables: &CompatTables,
    basis: &Basis,
    mstar: &DenseMessages,
) -> Result<FloorReport> {
    let n = basis.grid_len();
    let r = tables.r();
    if basis.len() != r {
        return Err(Error::Config(format!(
            "basis has {} functions but tables were built for {r}",
            basis.len()
        )));
    }
    let support: Vec<usize> = (0..n)
        .filter(|&x| (0..r).any(|j| basis.row(j)[x].abs() > 1e-12))
        .collect();
    // inf_y of the projected compatibility function, per shared table.
    let mut inf_cache: HashMap<(usize, bool), Vec<f64>> = HashMap::new();
    let mut edges = Vec::with_capacity(tables.num_edges());
    for i in 0..tables.num_edges() {
        let e = tables.edge(i);
        let inf_y = inf_cache
            .entry(e.table_key)
            .or_insert_with(|| {
                support
                    .par_iter()
                    .map(|&x| {
                        let mut m = f64::INFINITY;
                        for y in 0..n {
                            let mut p = 0.0;
                            for j in 0..r {
                                p += e.g(j)[y] * basis.row(j)[x];
                            }
                            m = m.min(p);
                        }
                        m
                    })
                    .collect()
            })
            .clone();
        let m = mstar.message(i);
        let coeffs = basis.project(m)?;
        let proj = basis.synthesize(&coeffs)?;
        let mut positivity = f64::INFINITY;
        let mut approx = f64::INFINITY;
        for (s, &x) in support.iter().enumerate() {
            positivity = positivity.min(inf_y[s]);
            approx = approx.min(0.5 * inf_y[s] - (m[x] - proj[x]).abs());
        }
        edges.push(EdgeFloorCheck {
            positivity_margin: positivity,
            approx_margin: approx,
            holds: positivity > 0.0 && approx >= 0.0,
        });
    }
    Ok(FloorReport { edges })
}
