use serde::{Deserialize, Serialize};

use crate::quadrature::{Axis, Grid};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Config(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Compact interval or 2-D box carrying the quadrature resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpace {
    axes: Vec<Interval>,
    points_per_unit: usize,
}

impl StateSpace {
    pub const DEFAULT_POINTS_PER_UNIT: usize = 100;

    pub fn new(axes: Vec<Interval>, points_per_unit: usize) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::Config(format!(
                "state spaces have 1 or 2 dimensions, got {}",
                axes.len()
            )));
        }
        for a in &axes {
            Interval::new(a.lo, a.hi)?;
        }
        if points_per_unit < 2 {
            return Err(Error::Config(format!(
                "resolution must be at least 2 points per unit, got {points_per_unit}"
            )));
        }
        Ok(Self {
            axes,
            points_per_unit,
        })
    }

    pub fn interval(lo: f64, hi: f64, points_per_unit: usize) -> Result<Self> {
        Self::new(vec![Interval::new(lo, hi)?], points_per_unit)
    }

    /// `[lo, hi]^2`.
    pub fn square(lo: f64, hi: f64, points_per_unit: usize) -> Result<Self> {
        let a = Interval::new(lo, hi)?;
        Self::new(vec![a, a], points_per_unit)
    }

    /// `[-5, 5]` at 100 points per unit.
    pub fn standard() -> Self {
        Self::interval(-5.0, 5.0, Self::DEFAULT_POINTS_PER_UNIT).expect("valid interval")
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Interval] {
        &self.axes
    }

    pub fn points_per_unit(&self) -> usize {
        self.points_per_unit
    }

    /// Nodes per axis: `round(length * points_per_unit) + 1`.
    pub fn nodes_per_axis(&self, d: usize) -> usize {
        (self.axes[d].len() * self.points_per_unit as f64).round() as usize + 1
    }

    pub fn grid(&self) -> Result<Grid> {
        let axes = self
            .axes
            .iter()
            .enumerate()
            .map(|(d, a)| Axis::trapezoid(a.lo, a.hi, self.nodes_per_axis(d)))
            .collect::<Result<Vec<_>>>()?;
        Grid::new(axes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_space_has_1001_nodes() {
        let g = StateSpace::standard().grid().unwrap();
        assert_eq!(g.len(), 1001);
        assert!((g.axis(0).step() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn invalid_spaces_rejected() {
        assert!(StateSpace::interval(1.0, -1.0, 100).is_err());
        assert!(StateSpace::interval(-1.0, 1.0, 1).is_err());
        assert!(StateSpace::new(vec![], 10).is_err());
    }

    #[test]
    fn square_flow_space() {
        let s = StateSpace::square(-2.0, 2.0, 5).unwrap();
        assert_eq!(s.grid().unwrap().len(), 21 * 21);
    }
}
