//! Stochastic orthogonal-series message passing (SOSMP) for belief
//! propagation on pairwise Markov random fields with continuous states.
//!
//! The crate is organised bottom-up:
//!
//! | module | contents |
//! |--------|----------|
//! | [`quadrature`] | trapezoid grids, integration, normalized compatibility tables |
//! | [`model`] | state spaces, graphs, potential families, the pairwise MRF |
//! | [`basis`] | half-sine orthonormal systems, projection and synthesis |
//! | [`bp_dense`] | grid-based belief propagation, the reference fixed point |
//! | [`sosmp`] | the stochastic coefficient-space message passing algorithm |
//! | [`planner`] | critical dimension and operation-count estimates |
//! | [`flow`] | optical-flow grid model, image I/O and HSV rendering |
//! | [`experiments`] | reusable experiment drivers used by the CLI and tests |
//!
//! A minimal run on a random Gaussian-mixture chain:
//!
//! ```no_run
//! use sosmp::prelude::*;
//!
//! let mrf = experiments::mixture_chain(20, 7).unwrap();
//! let basis = Basis::new(BasisSpec::for_space(mrf.space(), 10).unwrap(), mrf.grid());
//! let tables = CompatTables::compute(&mrf, &basis).unwrap();
//! let oracle = run_to_fixed_point(&mrf, 1e-10, 200).unwrap();
//! let reference = oracle.messages.project(&basis).unwrap();
//! let config = SosmpConfig::new(10, 5).with_iters(500);
//! let trace = Sosmp::new(&mrf, &basis, &tables, config).unwrap().run(Some(&reference)).unwrap();
//! println!("final e_t = {}", trace.last().unwrap().e_t);
//! ```

pub mod basis;
pub mod bp_dense;
pub mod config;
pub mod error;
pub mod experiments;
pub mod flow;
pub mod io;
pub mod model;
pub mod planner;
pub mod quadrature;
pub mod sosmp;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::basis::{positive_part, Basis, BasisFamily, BasisSpec};
    pub use crate::bp_dense::{
        brute_force_marginal, bp_update_edge, build_nilpotent_matrix, estimate_contraction,
        marginal, run_to_fixed_point, DenseMessages, FixedPointRun, NilpotentMatrix,
    };
    pub use crate::experiments;
    pub use crate::model::{
        EdgePotential, Graph, Interval, NodePotential, PairwiseMrf, StateSpace,
    };
    pub use crate::quadrature::{CompatTables, Grid};
    pub use crate::sosmp::{
        init_state, marginal_from_coeffs, RunTrace, Sosmp, SosmpConfig, SosmpState, StepRule,
    };
    pub use crate::{Error, Result};
}
