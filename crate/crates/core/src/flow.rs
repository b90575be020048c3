//! Optical flow on a pixel grid.
//!
//! Every pixel carries a motion vector `x in [-d, d]^2`. The node potential
//! is brightness constancy `exp(-(I(i,j) - I'(i + x1, j + x2))^2 / (2 sigma_u^2))`
//! and every lattice edge shares the smoothness prior
//! `exp(-|x_u - x_v|^2 / (2 sigma_uv^2))`. Pixel `(i, j)` is column `i`, row
//! `j`; a translation by `(1, 0)` means `I'(i + 1, j) = I(i, j)`.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{Basis, BasisSpec};
use crate::model::{EdgePotential, FlowObservation, NodePotential, PairwiseMrf, StateSpace};
use crate::quadrature::CompatTables;
use crate::sosmp::{marginal_from_coeffs, Sosmp, SosmpConfig, SosmpState};
use crate::{Error, Result};

/// Two grayscale frames of equal size, intensities in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePair {
    width: usize,
    height: usize,
    first: Vec<f64>,
    second: Vec<f64>,
}

impl FramePair {
    pub fn new(width: usize, height: usize, first: Vec<f64>, second: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Config("frames must be non-empty".into()));
        }
        for f in [&first, &second] {
            if f.len() != width * height {
                return Err(Error::GridMismatch {
                    expected: width * height,
                    got: f.len(),
                });
            }
            if f.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::Config("intensities must lie in [0, 1]".into()));
            }
        }
        Ok(Self {
            width,
            height,
            first,
            second,
        })
    }

    pub fn load(first: &Path, second: &Path) -> Result<Self> {
        let (w1, h1, a) = read_pgm(first)?;
        let (w2, h2, b) = read_pgm(second)?;
        if (w1, h1) != (w2, h2) {
            return Err(Error::Config(format!(
                "frame sizes differ: {w1}x{h1} vs {w2}x{h2}"
            )));
        }
        Self::new(w1, h1, a, b)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn first(&self) -> &[f64] {
        &self.first
    }

    pub fn second(&self) -> &[f64] {
        &self.second
    }

    pub fn first_at(&self, i: usize, j: usize) -> f64 {
        self.first[j * self.width + i]
    }

    /// `I'` at a real position, bilinear, coordinates clamped to the frame.
    pub fn second_bilinear(&self, x: f64, y: f64) -> f64 {
        let x = x.clamp(0.0, (self.width - 1) as f64);
        let y = y.clamp(0.0, (self.height - 1) as f64);
        let (i0, j0) = (x.floor() as usize, y.floor() as usize);
        let (i1, j1) = ((i0 + 1).min(self.width - 1), (j0 + 1).min(self.height - 1));
        let (fx, fy) = (x - i0 as f64, y - j0 as f64);
        let at = |i: usize, j: usize| self.second[j * self.width + i];
        (1.0 - fy) * ((1.0 - fx) * at(i0, j0) + fx * at(i1, j0))
            + fy * ((1.0 - fx) * at(i0, j1) + fx * at(i1, j1))
    }
}

/// Smooth random texture and its copy translated by `(dx, dy)` pixels.
pub fn synthetic_shift_pair(width: usize, height: usize, dx: i64, dy: i64, seed: u64) -> Result<FramePair> {
    let (mx, my) = (dx.unsigned_abs() as usize, dy.unsigned_abs() as usize);
    let (bw, bh) = (width + 2 * mx, height + 2 * my);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<f64> = (0..bw * bh).map(|_| rng.random::<f64>()).collect();
    // 3x3 box blur keeps the texture resolvable by bilinear lookups
    let mut tex = vec![0.0; bw * bh];
    for j in 0..bh {
        for i in 0..bw {
            let (mut s, mut c) = (0.0, 0.0);
            for jj in j.saturating_sub(1)..=(j + 1).min(bh - 1) {
                for ii in i.saturating_sub(1)..=(i + 1).min(bw - 1) {
                    s += noise[jj * bw + ii];
                    c += 1.0;
                }
            }
            tex[j * bw + i] = s / c;
        }
    }
    let (lo, hi) = tex
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    tex.iter_mut().for_each(|v| *v = (*v - lo) / (hi - lo));
    let crop = |ox: i64, oy: i64| -> Vec<f64> {
        let mut out = Vec::with_capacity(width * height);
        for j in 0..height {
            for i in 0..width {
                let (si, sj) = ((i + mx) as i64 + ox, (j + my) as i64 + oy);
                out.push(tex[sj as usize * bw + si as usize]);
            }
        }
        out
    };
    // I'(i, j) = I(i - dx, j - dy)
    FramePair::new(width, height, crop(0, 0), crop(-dx, -dy))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    /// Largest displacement per axis.
    pub d: f64,
    pub sigma_u: f64,
    pub sigma_uv: f64,
    /// Grid resolution of the displacement box.
    pub points_per_unit: usize,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            d: 2.0,
            sigma_u: 0.03,
            sigma_uv: 0.5,
            points_per_unit: 5,
        }
    }
}

/// Lattice MRF over the frame pixels, node id `j * width + i`.
pub fn build_flow_mrf(frames: Arc<FramePair>, params: &FlowParams) -> Result<PairwiseMrf> {
    if !(params.d > 0.0) {
        return Err(Error::Config(format!("d must be positive, got {}", params.d)));
    }
    if !(params.sigma_uv > 0.0) {
        return Err(Error::Config(format!("sigma_uv must be positive, got {}", params.sigma_uv)));
    }
    let space = StateSpace::square(-params.d, params.d, params.points_per_unit)?;
    let (w, h) = (frames.width(), frames.height());
    let nodes = (0..h)
        .flat_map(|j| (0..w).map(move |i| (i, j)))
        .map(|(i, j)| {
            NodePotential::FlowObservation(FlowObservation {
                frames: frames.clone(),
                i,
                j,
                sigma_u: params.sigma_u,
            })
        })
        .collect();
    let edge = Arc::new(EdgePotential::GaussianKernel {
        bandwidth: params.sigma_uv,
    });
    let num_edges = w * (h - 1) + h * (w - 1);
    PairwiseMrf::grid2d(space, w, h, nodes, vec![edge; num_edges])
}

/// Per-pixel motion vectors, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub width: usize,
    pub height: usize,
    pub vectors: Vec<[f64; 2]>,
}

impl FlowField {
    pub fn at(&self, i: usize, j: usize) -> [f64; 2] {
        self.vectors[j * self.width + i]
    }

    /// Component-wise median over pixels at least `margin` from the border.
    pub fn interior_median(&self, margin: usize) -> [f64; 2] {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for j in margin..self.height.saturating_sub(margin) {
            for i in margin..self.width.saturating_sub(margin) {
                let v = self.at(i, j);
                xs.push(v[0]);
                ys.push(v[1]);
            }
        }
        [median(&mut xs), median(&mut ys)]
    }
}

fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// How a motion vector is read from a node marginal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Readout {
    #[default]
    Mode,
    Mean,
}

pub fn read_flow(mrf: &PairwiseMrf, basis: &Basis, state: &SosmpState, readout: Readout) -> Result<FlowField> {
    let grid = mrf.grid();
    let n = mrf.graph().num_nodes();
    let vectors = (0..n)
        .map(|u| {
            let tau = marginal_from_coeffs(mrf, basis, state, u)?;
            Ok(match readout {
                Readout::Mode => {
                    let best = tau
                        .iter()
                        .enumerate()
                        .fold((0, f64::NEG_INFINITY), |b, (i, v)| if *v > b.1 { (i, *v) } else { b })
                        .0;
                    grid.point(best)
                }
                Readout::Mean => {
                    let x: Vec<f64> = (0..grid.len()).map(|i| grid.point(i)[0]).collect();
                    let y: Vec<f64> = (0..grid.len()).map(|i| grid.point(i)[1]).collect();
                    [grid.inner(&tau, &x), grid.inner(&tau, &y)]
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let width = match mrf.node_potential(0) {
        NodePotential::FlowObservation(o) => o.frames.width(),
        _ => n,
    };
    Ok(FlowField {
        width,
        height: n / width,
        vectors,
    })
}

/// Final flow and the flows after each iteration listed in `snapshots`.
pub struct FlowRun {
    pub flow: FlowField,
    pub snapshots: Vec<(usize, FlowField)>,
}

/// Runs SOSMP on a flow model with the 2-D basis of `config.r` functions
/// and reads the flow from the node marginals.
pub fn estimate_flow(
    mrf: &PairwiseMrf,
    config: SosmpConfig,
    readout: Readout,
    snapshots: &[usize],
) -> Result<FlowRun> {
    let basis = Basis::new(BasisSpec::for_space(mrf.space(), config.r)?, mrf.grid());
    let tables = CompatTables::compute(mrf, &basis)?;
    let runner = Sosmp::new(mrf, &basis, &tables, config)?;
    let mut shots = Vec::new();
    let mut err = None;
    let trace = runner.run_with(None, |s| {
        if err.is_none() && snapshots.contains(&s.t) {
            match read_flow(mrf, &basis, s, readout) {
                Ok(f) => shots.push((s.t, f)),
                Err(e) => err = Some(e),
            }
        }
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(FlowRun {
        flow: read_flow(mrf, &basis, &trace.final_state, readout)?,
        snapshots: shots,
    })
}

/// HSV colour per pixel: hue = motion angle, saturation = `|x| / (d sqrt 2)`
/// clamped to 1, value 1; returned as 8-bit RGB.
pub fn hsv_encode(flow: &FlowField, d: f64) -> Vec<[u8; 3]> {
    flow.vectors
        .iter()
        .map(|v| {
            let (h, s) = hue_saturation(*v, d);
            hsv_to_rgb(h, s, 1.0)
        })
        .collect()
}

/// Hue in degrees `[0, 360)` and saturation in `[0, 1]`.
pub fn hue_saturation(v: [f64; 2], d: f64) -> (f64, f64) {
    let hue = v[1].atan2(v[0]).to_degrees().rem_euclid(360.0);
    let sat = (v[0].hypot(v[1]) / (d * std::f64::consts::SQRT_2)).clamp(0.0, 1.0);
    (if hue >= 360.0 { 0.0 } else { hue }, sat)
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [u8; 3] {
    let c = v * s;
    let hp = h / 60.0;
    let x = c * (1.0 - (hp.rem_euclid(2.0) - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    let q = |t: f64| ((t + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    [q(r), q(g), q(b)]
}

/// Reads a binary 8-bit PGM (P5) into intensities in `[0, 1]`.
pub fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    parse_pgm(&fs::read(path)?)
}

pub fn parse_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<f64>)> {
    let mut pos = 0;
    let mut token = || -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Parse("truncated PGM header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return Err(Error::Parse("not a binary PGM (P5) file".into()));
    }
    let mut num = |what: &str| -> Result<usize> {
        token()?
            .parse()
            .map_err(|_| Error::Parse(format!("bad PGM {what}")))
    };
    let (w, h, maxval) = (num("width")?, num("height")?, num("maxval")?);
    if w == 0 || h == 0 || maxval == 0 || maxval > 255 {
        return Err(Error::Parse(format!("unsupported PGM {w}x{h} maxval {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    let start = pos + 1;
    let data = bytes
        .get(start..start + w * h)
        .ok_or_else(|| Error::Parse("truncated PGM raster".into()))?;
    Ok((w, h, data.iter().map(|b| *b as f64 / maxval as f64).collect()))
}

pub fn write_pgm(path: &Path, width: usize, height: usize, values: &[f64]) -> Result<()> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(values.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    fs::write(path, out)?;
    Ok(())
}

pub fn write_ppm(path: &Path, width: usize, height: usize, rgb: &[[u8; 3]]) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    write!(f, "P6\n{width} {height}\n255\n")?;
    for p in rgb {
        f.write_all(p)?;
    }
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bilinear_and_clamping() {
        let f = FramePair::new(2, 2, vec![0.0; 4], vec![0.0, 1.0, 0.5, 0.5]).unwrap();
        assert_eq!(f.second_bilinear(0.5, 0.0), 0.5);
        assert_eq!(f.second_bilinear(0.5, 0.5), 0.5);
        assert_eq!(f.second_bilinear(-3.0, 0.0), 0.0);
        assert_eq!(f.second_bilinear(7.0, -1.0), 1.0);
        assert!(FramePair::new(2, 2, vec![0.0; 3], vec![0.0; 4]).is_err());
        assert!(FramePair::new(1, 1, vec![1.5], vec![0.0]).is_err());
    }

    #[test]
    fn shift_pair_satisfies_translation() {
        let f = synthetic_shift_pair(12, 10, 1, 0, 4).unwrap();
        for j in 0..10 {
            for i in 0..11 {
                assert_eq!(f.second_bilinear((i + 1) as f64, j as f64), f.first_at(i, j));
            }
        }
    }

    #[test]
    fn flow_mrf_shape_and_potentials() {
        let f = Arc::new(synthetic_shift_pair(32, 32, 0, 0, 1).unwrap());
        let p = FlowParams::default();
        let mrf = build_flow_mrf(f, &p).unwrap();
        assert_eq!(mrf.graph().num_edges(), 2 * 32 * 31);
        assert_eq!(mrf.grid().len(), 21 * 21);
        // identical frames: zero motion is a maximum of every node potential
        let zero = mrf.grid().flat_index([10, 10]);
        let t = mrf.node_table(5);
        assert!(t.iter().all(|v| *v <= t[zero]));
        assert_eq!(t[zero], 1.0);
        assert!((mrf.edge_value(0, zero, zero) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hsv_cases() {
        let d = 2.0;
        let white = hsv_encode(
            &FlowField {
                width: 1,
                height: 1,
                vectors: vec![[0.0, 0.0]],
            },
            d,
        );
        assert_eq!(white[0], [255, 255, 255]);
        let (h, s) = hue_saturation([d, 0.0], d);
        assert_eq!(h, 0.0);
        assert!((s - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        let hues: Vec<f64> = (0..36)
            .map(|k| {
                let a = (k as f64 * 10.0).to_radians();
                hue_saturation([a.cos(), a.sin()], d).0
            })
            .collect();
        assert!(hues.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn pgm_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.pgm");
        let v: Vec<f64> = (0..6).map(|i| i as f64 / 5.0).collect();
        write_pgm(&p, 3, 2, &v).unwrap();
        let (w, h, back) = read_pgm(&p).unwrap();
        assert_eq!((w, h), (3, 2));
        for (a, b) in v.iter().zip(&back) {
            assert!((a - b).abs() <= 0.5 / 255.0);
        }
        assert!(matches!(parse_pgm(b"P2\n1 1\n255\n0"), Err(Error::Parse(_))));
        assert!(matches!(parse_pgm(b"P5\n2 2\n255\n\x00"), Err(Error::Parse(_))));
        let (w, _, _) = parse_pgm(b"P5\n# comment\n1 1\n255\n\x80").unwrap();
        assert_eq!(w, 1);
    }
}
