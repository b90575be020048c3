//! Orthonormal half-sine systems and series projection / synthesis.
//!
//! On `[lo, hi]` with `L = hi - lo` the functions
//! `phi_j(x) = sqrt(2 / L) sin((2j - 1) pi (x - lo) / L)` are orthonormal in
//! `L^2`. Two-dimensional bases are tensor products, enumerated by
//! increasing `j1 + j2` and then by `j1`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::model::{Interval, StateSpace};
use crate::quadrature::{Grid, State};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisFamily {
    HalfSine,
    HalfSine2D,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    family: BasisFamily,
    axes: Vec<Interval>,
    count: usize,
    /// 1-based `(j1, j2)` per function; `j2 = 0` in one dimension.
    index: Vec<(usize, usize)>,
}

impl BasisSpec {
    pub fn half_sine(interval: Interval, count: usize) -> Result<Self> {
        check_count(count)?;
        Ok(Self {
            family: BasisFamily::HalfSine,
            axes: vec![interval],
            count,
            index: (1..=count).map(|j| (j, 0)).collect(),
        })
    }

    pub fn half_sine_2d(a: Interval, b: Interval, count: usize) -> Result<Self> {
        check_count(count)?;
        let mut index = Vec::with_capacity(count);
        let mut total = 2;
        while index.len() < count {
            for j1 in 1..total {
                if index.len() == count {
                    break;
                }
                index.push((j1, total - j1));
            }
            total += 1;
        }
        Ok(Self {
            family: BasisFamily::HalfSine2D,
            axes: vec![a, b],
            count,
            index,
        })
    }

    /// The half-sine family matching the dimension of `space`.
    pub fn for_space(space: &StateSpace, count: usize) -> Result<Self> {
        match space.axes() {
            [a] => Self::half_sine(*a, count),
            [a, b] => Self::half_sine_2d(*a, *b, count),
            _ => Err(Error::Config("unsupported state-space dimension".into())),
        }
    }

    pub fn family(&self) -> BasisFamily {
        self.family
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// 1-based per-axis frequencies of function `j` (1-based).
    pub fn frequencies(&self, j: usize) -> Option<(usize, usize)> {
        j.checked_sub(1).and_then(|k| self.index.get(k).copied())
    }

    /// `phi_j(x)` for 1-based `j`.
    pub fn eval(&self, j: usize, x: &State) -> Result<f64> {
        if j == 0 || j > self.count {
            return Err(Error::Config(format!(
                "basis index {j} outside 1..={}",
                self.count
            )));
        }
        Ok(self.eval0(j - 1, x))
    }

    #[inline]
    fn eval0(&self, k: usize, x: &State) -> f64 {
        let (j1, j2) = self.index[k];
        let mut v = half_sine(self.axes[0], j1, x[0]);
        if self.family == BasisFamily::HalfSine2D {
            v *= half_sine(self.axes[1], j2, x[1]);
        }
        v
    }
}

fn check_count(count: usize) -> Result<()> {
    if count == 0 {
        return Err(Error::Config("basis needs at least one function".into()));
    }
    Ok(())
}

#[inline]
fn half_sine(a: Interval, j: usize, x: f64) -> f64 {
    let l = a.len();
    (2.0 / l).sqrt() * ((2 * j - 1) as f64 * PI * (x - a.lo) / l).sin()
}

/// A basis tabulated on a grid, with quadrature projection and synthesis.
#[derive(Debug, Clone)]
pub struct Basis {
    spec: BasisSpec,
    grid: Grid,
    /// Row-major `r x n`.
    values: Vec<f64>,
}

impl Basis {
    pub fn new(spec: BasisSpec, grid: &Grid) -> Self {
        let n = grid.len();
        let mut values = Vec::with_capacity(spec.len() * n);
        for k in 0..spec.len() {
            values.extend((0..n).map(|i| spec.eval0(k, &grid.point(i))));
        }
        Self {
            spec,
            grid: grid.clone(),
            values,
        }
    }

    pub fn spec(&self) -> &BasisSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.spec.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spec.is_empty()
    }

    pub fn grid_len(&self) -> usize {
        self.grid.len()
    }

    /// `phi_j` on the grid, 0-based `j`.
    #[inline]
    pub fn row(&self, j: usize) -> &[f64] {
        let n = self.grid.len();
        &self.values[j * n..(j + 1) * n]
    }

    /// `a_j = <f, phi_j>` for `j = 1..=r`.
    pub fn project(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.grid.check(f)?;
        Ok((0..self.len())
            .map(|j| self.grid.inner(f, self.row(j)))
            .collect())
    }

    /// `sum_j a_j phi_j` on the grid.
    pub fn synthesize(&self, a: &[f64]) -> Result<Vec<f64>> {
        if a.len() != self.len() {
            return Err(Error::Config(format!(
                "{} coefficients for a basis of {}",
                a.len(),
                self.len()
            )));
        }
        let mut out = vec![0.0; self.grid.len()];
        self.synthesize_into(a, &mut out);
        Ok(out)
    }

    #[inline]
    pub fn synthesize_into(&self, a: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (j, aj) in a.iter().enumerate() {
            out.iter_mut()
                .zip(self.row(j))
                .for_each(|(o, p)| *o += aj * p);
        }
    }

    /// Gram matrix `<phi_i, phi_j>` under grid quadrature, row-major.
    pub fn gram(&self) -> Vec<f64> {
        let r = self.len();
        let mut g = vec![0.0; r * r];
        for i in 0..r {
            for j in 0..r {
                g[i * r + j] = self.grid.inner(self.row(i), self.row(j));
            }
        }
        g
    }
}

/// Pointwise `max(f, 0)`.
pub fn positive_part(f: &[f64]) -> Vec<f64> {
    f.iter().map(|v| v.max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn standard(r: usize) -> Basis {
        let space = StateSpace::standard();
        Basis::new(
            BasisSpec::for_space(&space, r).unwrap(),
            &space.grid().unwrap(),
        )
    }

    #[test]
    fn eval_known_values() {
        let spec = BasisSpec::half_sine(Interval::new(-5.0, 5.0).unwrap(), 4).unwrap();
        assert!((spec.eval(1, &[0.0, 0.0]).unwrap() - (0.2f64).sqrt()).abs() < 1e-15);
        assert!(spec.eval(1, &[-5.0, 0.0]).unwrap().abs() < 1e-15);
        assert!(spec.eval(0, &[0.0, 0.0]).is_err());
        assert!(spec.eval(5, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn gram_is_identity() {
        let b = standard(64);
        let g = b.gram();
        let r = b.len();
        let worst = (0..r * r)
            .map(|k| (g[k] - if k / r == k % r { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-6, "max |G - I| = {worst}");
        assert!(g[r + 2].abs() < 1e-8);
    }

    #[test]
    fn project_examples() {
        let b = standard(3);
        let a = b.project(b.row(1)).unwrap();
        assert!((a[0]).abs() < 1e-8 && (a[1] - 1.0).abs() < 1e-8 && a[2].abs() < 1e-8);
        assert!(b.project(&vec![0.0; b.grid_len()]).unwrap().iter().all(|v| *v == 0.0));
        let b4 = standard(4);
        let f = b4.synthesize(&[1.0, 0.0, 0.0, 2.0]).unwrap();
        let b2 = standard(2);
        let a = b2.project(&f).unwrap();
        assert!((a[0] - 1.0).abs() < 1e-8 && a[1].abs() < 1e-8);
        assert!(b2.project(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn synthesize_examples() {
        let b = standard(5);
        let e1 = b.synthesize(&[1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(e1, b.row(0));
        assert!(b.synthesize(&[0.0; 5]).unwrap().iter().all(|v| *v == 0.0));
        assert!(b.synthesize(&[1.0]).is_err());
    }

    #[test]
    fn positive_part_examples() {
        let b = standard(1);
        let phi = b.row(0).to_vec();
        assert_eq!(positive_part(&phi), phi);
        let neg: Vec<f64> = phi.iter().map(|v| -v).collect();
        assert!(positive_part(&neg).iter().all(|v| *v == 0.0));
        // phi_1 - max/2 is positive on |x| < 10/3:
        // int (sqrt(1/5) cos(pi x / 10) - sqrt(1/5) / 2) dx over that range
        let c = (0.2f64).sqrt();
        let clipped = positive_part(&phi.iter().map(|v| v - 0.5 * c).collect::<Vec<_>>());
        let want = c * (20.0 / std::f64::consts::PI * (std::f64::consts::PI / 3.0).sin() - 10.0 / 3.0);
        assert!((b.grid().integrate(&clipped) - want).abs() < 1e-4);
    }

    #[test]
    fn two_dimensional_ordering() {
        let a = Interval::new(-2.0, 2.0).unwrap();
        let spec = BasisSpec::half_sine_2d(a, a, 9).unwrap();
        let order: Vec<_> = (1..=9).map(|j| spec.frequencies(j).unwrap()).collect();
        assert_eq!(
            order,
            vec![(1, 1), (1, 2), (2, 1), (1, 3), (2, 2), (3, 1), (1, 4), (2, 3), (3, 2)]
        );
        let space = StateSpace::square(-2.0, 2.0, 10).unwrap();
        let b = Basis::new(spec, &space.grid().unwrap());
        let g = b.gram();
        for i in 0..9 {
            for j in 0..9 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g[i * 9 + j] - want).abs() < 1e-8);
            }
        }
    }

    proptest! {
        #[test]
        fn coefficient_round_trip(a in proptest::collection::vec(-3.0f64..3.0, 8)) {
            let b = standard(8);
            let back = b.project(&b.synthesize(&a).unwrap()).unwrap();
            for (x, y) in a.iter().zip(&back) {
                prop_assert!((x - y).abs() < 1e-8);
            }
            let norm = b.grid().norm_sq(&b.synthesize(&a).unwrap());
            let sum: f64 = a.iter().map(|v| v * v).sum();
            prop_assert!((norm - sum).abs() < 1e-8);
        }

        #[test]
        fn pythagoras(mu in -3.0f64..3.0, s in 0.2f64..2.0, r in 1usize..20) {
            let b = standard(r);
            let f: Vec<f64> = b.grid().points().iter()
                .map(|p| (-(p[0] - mu).powi(2) / (2.0 * s * s)).exp()).collect();
            let a = b.project(&f).unwrap();
            let resid = b.grid().dist_sq(&f, &b.synthesize(&a).unwrap());
            let lhs = resid + a.iter().map(|v| v * v).sum::<f64>();
            prop_assert!((lhs - b.grid().norm_sq(&f)).abs() < 1e-6);
        }

        #[test]
        fn positive_part_idempotent_nonexpansive(
            a in proptest::collection::vec(-1.0f64..1.0, 6),
            c in proptest::collection::vec(0.0f64..1.0, 6),
        ) {
            let b = standard(6);
            let f = b.synthesize(&a).unwrap();
            let g = positive_part(&b.synthesize(&c).unwrap());
            let fp = positive_part(&f);
            prop_assert_eq!(positive_part(&fp), fp.clone());
            prop_assert!(b.grid().dist_sq(&fp, &g) <= b.grid().dist_sq(&f, &g) + 1e-15);
        }
    }
}
