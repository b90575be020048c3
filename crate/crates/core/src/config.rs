//! Model files and experiment configurations (TOML), plus the named
//! presets for the standard studies.
//!
//! A model file:
//!
//! ```toml
//! [space]
//! lo = -5.0
//! hi = 5.0
//! points_per_unit = 100
//!
//! [graph]
//! kind = "chain"
//! n = 100
//!
//! [potentials]
//! source = "mixture_ensemble"
//! seed = 7
//! ```
//!
//! `graph.kind` is `chain` (`n`), `grid2d` (`width`, `height`) or `edges`
//! (`n`, `edges = [[0, 1], ...]`). `potentials.source` is
//! `mixture_ensemble` (`seed`, trees only), `kernel` (`alpha`, `terms`,
//! `seed`: mixture nodes with one shared kernel edge), `shared` (`node`,
//! `edge` tables) or `explicit` (`nodes`, `edges` arrays of tables).

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::flow::{FlowParams, Readout};
use crate::model::{sample_mixture_ensemble, EdgePotential, Graph, Interval, NodePotential, PairwiseMrf, StateSpace};
use crate::sosmp::StepRule;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub lo: f64,
    pub hi: f64,
    #[serde(default = "one")]
    pub dims: usize,
    pub points_per_unit: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    Chain { n: usize },
    Grid2d { width: usize, height: usize },
    Edges { n: usize, edges: Vec<[usize; 2]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    MixtureEnsemble {
        seed: u64,
    },
    Kernel {
        alpha: f64,
        #[serde(default = "default_terms")]
        terms: usize,
        seed: u64,
    },
    Shared {
        node: NodePotential,
        edge: EdgePotential,
    },
    Explicit {
        nodes: Vec<NodePotential>,
        edges: Vec<EdgePotential>,
    },
}

fn default_terms() -> usize {
    crate::experiments::KERNEL_TERMS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub space: SpaceSpec,
    pub graph: GraphSpec,
    pub potentials: PotentialSpec,
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("model file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("model files always serialize")
    }

    /// Mixture chain on the standard space.
    pub fn mixture_chain(n: usize, seed: u64) -> Self {
        Self {
            space: SpaceSpec {
                lo: -5.0,
                hi: 5.0,
                dims: 1,
                points_per_unit: 100,
            },
            graph: GraphSpec::Chain { n },
            potentials: PotentialSpec::MixtureEnsemble { seed },
        }
    }

    pub fn graph(&self) -> Result<Graph> {
        match &self.graph {
            GraphSpec::Chain { n } => Graph::chain(*n),
            GraphSpec::Grid2d { width, height } => Graph::grid2d(*width, *height),
            GraphSpec::Edges { n, edges } => Graph::new(*n, edges.iter().map(|e| (e[0], e[1])).collect()),
        }
    }

    pub fn build(&self) -> Result<PairwiseMrf> {
        let s = &self.space;
        let iv = Interval::new(s.lo, s.hi)?;
        let space = match s.dims {
            1 => StateSpace::new(vec![iv], s.points_per_unit)?,
            2 => StateSpace::new(vec![iv, iv], s.points_per_unit)?,
            d => return Err(Error::Config(format!("dims must be 1 or 2, got {d}"))),
        };
        let graph = self.graph()?;
        let (n, m) = (graph.num_nodes(), graph.num_edges());
        let (nodes, edges): (Vec<NodePotential>, Vec<Arc<EdgePotential>>) = match &self.potentials {
            PotentialSpec::MixtureEnsemble { seed } => {
                if m + 1 != n {
                    return Err(Error::Config(
                        "the mixture ensemble draws n - 1 edge potentials; use a tree".into(),
                    ));
                }
                let (nodes, edges) = sample_mixture_ensemble(n, *seed)?;
                (nodes, edges.into_iter().map(Arc::new).collect())
            }
            PotentialSpec::Kernel { alpha, terms, seed } => {
                let (nodes, _) = sample_mixture_ensemble(n.max(2), *seed)?;
                let e = Arc::new(EdgePotential::kernel_expansion(*alpha, *terms));
                (nodes.into_iter().take(n).collect(), vec![e; m])
            }
            PotentialSpec::Shared { node, edge } => {
                let e = Arc::new(edge.clone());
                (vec![node.clone(); n], vec![e; m])
            }
            PotentialSpec::Explicit { nodes, edges } => {
                (nodes.clone(), edges.iter().cloned().map(Arc::new).collect())
            }
        };
        PairwiseMrf::new(space, graph, nodes, edges)
    }
}

fn default_seeds() -> Vec<u64> {
    (1..=10).collect()
}

/// Mixture-chain study: one trace per `(r, k, seed)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainMixtureConfig {
    pub n: usize,
    pub model_seed: u64,
    pub r_values: Vec<usize>,
    pub k_values: Vec<usize>,
    pub iters: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "basic")]
    pub step_rule: StepRule,
}

fn basic() -> StepRule {
    StepRule::Basic
}

/// Kernel-smoothness study: traces and error floors per `(alpha, r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSmoothnessConfig {
    pub n: usize,
    pub model_seed: u64,
    pub alphas: Vec<f64>,
    pub terms: usize,
    pub r_values: Vec<usize>,
    pub k: usize,
    pub iters: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub r: usize,
    pub k: usize,
    pub iters: usize,
    pub seed: u64,
    pub snapshots: Vec<usize>,
    pub params: FlowParams,
    #[serde(default)]
    pub readout: Readout,
}

impl ChainMixtureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() || self.r_values.is_empty() || self.k_values.is_empty() {
            return Err(Error::Config("seeds, r_values and k_values must be non-empty".into()));
        }
        Ok(())
    }
}

impl KernelSmoothnessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() || self.r_values.is_empty() || self.alphas.is_empty() {
            return Err(Error::Config("seeds, r_values and alphas must be non-empty".into()));
        }
        if self.alphas.iter().any(|a| !(*a > 0.0)) {
            return Err(Error::Config("alphas must be positive".into()));
        }
        Ok(())
    }
}

/// Named presets for the standard studies.
#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    ChainMixture(ChainMixtureConfig),
    KernelSmoothness(KernelSmoothnessConfig),
    Flow(FlowConfig),
}

pub const PRESET_NAMES: [&str; 6] = ["fig4", "fig6a", "fig6b", "fig8", "fig9", "fig11"];

/// Iterations for the synthetic presets.
pub const PRESET_ITERS: usize = 10_000;

pub fn preset(name: &str) -> Result<Preset> {
    let chain = |r_values: Vec<usize>, k_values: Vec<usize>, seeds: Vec<u64>| {
        Preset::ChainMixture(ChainMixtureConfig {
            n: 100,
            model_seed: 1,
            r_values,
            k_values,
            iters: PRESET_ITERS,
            seeds,
            step_rule: StepRule::Basic,
        })
    };
    let kernel = |r_values: Vec<usize>| {
        Preset::KernelSmoothness(KernelSmoothnessConfig {
            n: 100,
            model_seed: 1,
            alphas: vec![0.1, 1.0],
            terms: crate::experiments::KERNEL_TERMS,
            r_values,
            k: 5,
            iters: PRESET_ITERS,
            seeds: (1..=5).collect(),
        })
    };
    Ok(match name {
        "fig4" => chain(vec![10], vec![5], (1..=10).collect()),
        "fig6a" => chain(vec![2, 3, 5, 10], vec![5], (1..=5).collect()),
        "fig6b" => chain(vec![10], vec![1, 2, 5, 10], (1..=5).collect()),
        "fig8" => kernel(vec![10]),
        "fig9" => kernel(vec![2, 3, 5, 10]),
        "fig11" => Preset::Flow(FlowConfig {
            r: 9,
            k: 3,
            iters: 40,
            seed: 1,
            snapshots: vec![1, 10, 40],
            params: FlowParams::default(),
            readout: Readout::Mode,
        }),
        other => {
            return Err(Error::Config(format!(
                "unknown preset {other:?}; expected one of {}",
                PRESET_NAMES.join(", ")
            )))
        }
    })
}

/// Parses a TOML configuration of type `T`.
pub fn parse_config<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Config(format!("config file: {e}")))
}

/// Canonical TOML of a configuration, the input to the config hash.
pub fn canonical<T: Serialize>(cfg: &T) -> String {
    toml::to_string(cfg).expect("configurations always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_file_round_trip() {
        let text = r#"
[space]
lo = -1.0
hi = 1.0
points_per_unit = 10

[graph]
kind = "chain"
n = 3

[potentials]
source = "shared"
node = { type = "uniform" }
edge = { type = "gaussian_kernel", bandwidth = 0.5 }
"#;
        let m = ModelFile::parse(text).unwrap();
        let mrf = m.build().unwrap();
        assert_eq!(mrf.graph().num_nodes(), 3);
        assert_eq!(ModelFile::parse(&m.to_toml()).unwrap(), m);
    }

    #[test]
    fn mixture_file_matches_builder() {
        let m = ModelFile::mixture_chain(5, 3).build().unwrap();
        let direct = crate::experiments::mixture_chain(5, 3).unwrap();
        assert_eq!(m.node_table(2), direct.node_table(2));
    }

    #[test]
    fn bad_files_are_config_errors() {
        assert!(matches!(ModelFile::parse("nonsense = 1"), Err(Error::Config(_))));
        let cyc = ModelFile {
            graph: GraphSpec::Edges {
                n: 3,
                edges: vec![[0, 1], [1, 2], [2, 0]],
            },
            ..ModelFile::mixture_chain(3, 1)
        };
        assert!(matches!(cyc.build(), Err(Error::Config(_))));
    }

    #[test]
    fn presets() {
        for name in PRESET_NAMES {
            preset(name).unwrap();
        }
        match preset("fig6a").unwrap() {
            Preset::ChainMixture(c) => {
                assert_eq!(c.r_values, vec![2, 3, 5, 10]);
                assert_eq!(c.k_values, vec![5]);
            }
            _ => panic!(),
        }
        match preset("fig11").unwrap() {
            Preset::Flow(f) => {
                assert_eq!((f.r, f.k), (9, 3));
                assert_eq!(f.snapshots, vec![1, 10, 40]);
            }
            _ => panic!(),
        }
        assert!(preset("fig99").is_err());
        let c = match preset("fig4").unwrap() {
            Preset::ChainMixture(c) => c,
            _ => panic!(),
        };
        assert_eq!(parse_config::<ChainMixtureConfig>(&canonical(&c)).unwrap(), c);
    }
}
