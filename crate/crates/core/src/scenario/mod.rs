//! What-if experiments: a topology, a destination, a list of transforms
//! and an inference mode, run end to end into a report.
//!
//! Scenarios are TOML files:
//!
//! ```toml
//! name = "figure1"
//! seed = 7
//! mode = "certain-oracles"
//! shortest_path = false
//! oracles = "figure1-oracles.csv"
//!
//! [topology]
//! path = "figure1.rel"
//!
//! [[destination.ingress]]
//! name = "m1"
//! nodes = [1]
//!
//! [[destination.ingress]]
//! name = "m2"
//! nodes = [2]
//!
//! [[transform]]
//! kind = "prepend"
//! ingress = "m2"
//! times = 2
//!
//! [planner]
//! budget = 2
//!
//! [simulation]
//! runs = 100
//! ```

mod compare;
mod pipeline;
mod sweep;

use std::fmt;
use std::path::{Path as FsPath, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{
    apply_prepending, attach_destination, derive_vf_policies, generate_random_topology,
    parse_caida_asrel, parse_topology, Attachment, AugmentedTopology, DestinationSpec,
    GeneratorParams, IngressId, NodeId, Origin, Relationship, Topology,
};

pub use compare::{compare_with_simulation, IngressComparison, SimulationComparison};
pub use pipeline::{run_scenario, OracleSummary, ScenarioReport, ScenarioSummary};
pub use sweep::prepending_sweep;

/// Inference variants, each a fixed sequence of algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InferenceMode {
    /// Routing graph, then certain routes.
    #[default]
    Certain,
    /// Adds route probabilities and expected loads.
    Probabilistic,
    /// Certain routes refined by observations.
    CertainOracles,
    /// Route probabilities conditioned on observations.
    ProbabilisticOracles,
}

impl InferenceMode {
    pub fn as_str(self) -> &'static str {
        match self {
            InferenceMode::Certain => "certain",
            InferenceMode::Probabilistic => "probabilistic",
            InferenceMode::CertainOracles => "certain-oracles",
            InferenceMode::ProbabilisticOracles => "probabilistic-oracles",
        }
    }

    pub fn uses_oracles(self) -> bool {
        matches!(
            self,
            InferenceMode::CertainOracles | InferenceMode::ProbabilisticOracles
        )
    }
}

impl fmt::Display for InferenceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InferenceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "certain" => Ok(InferenceMode::Certain),
            "probabilistic" => Ok(InferenceMode::Probabilistic),
            "certain-oracles" => Ok(InferenceMode::CertainOracles),
            "probabilistic-oracles" => Ok(InferenceMode::ProbabilisticOracles),
            other => Err(Error::Input(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySource {
    /// CAIDA relationship file or canonical topology file.
    pub path: Option<PathBuf>,
    /// Synthetic topology instead of a file.
    pub generate: Option<GeneratorParams>,
    /// Built-in instance; only `figure1` is known.
    pub fixture: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngressConfig {
    pub name: String,
    pub nodes: Vec<NodeId>,
    /// Link label seen from the destination.
    #[serde(default = "default_relationship")]
    pub relationship: Relationship,
}

fn default_relationship() -> Relationship {
    Relationship::C2p
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DestinationConfig {
    #[serde(default)]
    pub ingress: Vec<IngressConfig>,
    /// Existing origin ASes of a multi-origin prefix.
    #[serde(default)]
    pub moas: Vec<NodeId>,
    pub id: Option<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Transform {
    Prepend { ingress: String, times: usize },
    AddIngress {
        name: String,
        nodes: Vec<NodeId>,
        #[serde(default = "default_relationship")]
        relationship: Relationship,
    },
    RemoveIngress { name: String },
    ShortestPath,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerConfig {
    pub budget: f64,
    /// Defaults to every real node.
    pub candidates: Option<Vec<NodeId>>,
    /// Random candidate sets evaluated as a baseline.
    #[serde(default = "default_random_plans")]
    pub random_plans: usize,
    /// Also search every affordable subset exactly; small graphs only.
    #[serde(default)]
    pub exhaustive: bool,
}

fn default_random_plans() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: InferenceMode,
    #[serde(default)]
    pub shortest_path: bool,
    pub topology: TopologySource,
    #[serde(default)]
    pub destination: DestinationConfig,
    #[serde(default, rename = "transform")]
    pub transforms: Vec<Transform>,
    /// Observation file, `node,ingress[,provenance]` lines.
    pub oracles: Option<PathBuf>,
    /// Skip observations that contradict the model instead of failing.
    #[serde(default)]
    pub skip_conflicting_oracles: bool,
    /// Per-node traffic, `node,volume` lines; one unit per node otherwise.
    pub traffic: Option<PathBuf>,
    /// Samples for conditioning when the graph is too large to enumerate.
    #[serde(default = "default_trials")]
    pub monte_carlo_trials: usize,
    pub planner: Option<PlannerConfig>,
    pub simulation: Option<SimulationConfig>,
    /// Directories searched for relative paths, in order.
    #[serde(skip)]
    pub search_dirs: Vec<PathBuf>,
}

fn default_name() -> String {
    "scenario".into()
}

fn default_trials() -> usize {
    100_000
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Input(format!("invalid scenario: {e}")))
    }

    /// Loads a scenario; relative paths resolve against the file's
    /// directory, then `data_dir`.
    pub fn from_file(path: &FsPath, data_dir: Option<&FsPath>) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut s = Self::from_toml(&text)?;
        if let Some(dir) = path.parent() {
            s.search_dirs.push(dir.to_path_buf());
        }
        if let Some(d) = data_dir {
            s.search_dirs.push(d.to_path_buf());
        }
        Ok(s)
    }

    pub(crate) fn resolve_path(&self, p: &FsPath) -> PathBuf {
        if p.is_absolute() {
            return p.to_path_buf();
        }
        self.search_dirs
            .iter()
            .map(|d| d.join(p))
            .find(|c| c.exists())
            .unwrap_or_else(|| p.to_path_buf())
    }

    pub(crate) fn read(&self, p: &FsPath) -> Result<String> {
        let full = self.resolve_path(p);
        std::fs::read_to_string(&full).map_err(|e| Error::Io(format!("{}: {e}", full.display())))
    }

    /// Shortest-path preference from the flag or a transform.
    pub fn shortest_path_enabled(&self) -> bool {
        self.shortest_path || self.transforms.iter().any(|t| matches!(t, Transform::ShortestPath))
    }

    /// Loads the topology, adding valley-free policies when none are given.
    pub fn load_topology(&self) -> Result<Topology> {
        let src = &self.topology;
        let given = [src.path.is_some(), src.generate.is_some(), src.fixture.is_some()];
        if given.iter().filter(|&&b| b).count() != 1 {
            return Err(Error::Input(
                "topology needs exactly one of `path`, `generate` or `fixture`".into(),
            ));
        }
        let t = if let Some(p) = &src.path {
            let text = self.read(p)?;
            if text.trim_start().starts_with("# catchment-topology") {
                parse_topology(&text)?
            } else {
                parse_caida_asrel(&text)?
            }
        } else if let Some(params) = &src.generate {
            generate_random_topology(params)?
        } else {
            match src.fixture.as_deref() {
                Some("figure1") => crate::fixtures::figure1_base(),
                Some(other) => return Err(Error::lookup("fixture", other)),
                None => unreachable!(),
            }
        };
        Ok(if t.has_policies() {
            t
        } else {
            derive_vf_policies(&t)
        })
    }

    /// Destination spec after the ingress transforms, and the prepends to
    /// apply in order.
    fn destination_spec(&self) -> Result<(DestinationSpec, Vec<(IngressId, usize)>)> {
        let d = &self.destination;
        let mut ingresses: Vec<IngressConfig> = d.ingress.clone();
        if !d.moas.is_empty() {
            if !ingresses.is_empty() {
                return Err(Error::Spec("use either `ingress` or `moas`, not both".into()));
            }
            ingresses = d
                .moas
                .iter()
                .map(|&o| IngressConfig {
                    name: o.to_string(),
                    nodes: vec![o],
                    relationship: Relationship::C2p,
                })
                .collect();
        }
        let mut prepends: Vec<(IngressId, usize)> = Vec::new();
        for t in &self.transforms {
            match t {
                Transform::Prepend { ingress, times } => {
                    prepends.push((IngressId::new(ingress.as_str()), *times));
                }
                Transform::AddIngress {
                    name,
                    nodes,
                    relationship,
                } => {
                    if ingresses.iter().any(|i| &i.name == name) {
                        return Err(Error::Spec(format!("ingress {name} already exists")));
                    }
                    ingresses.push(IngressConfig {
                        name: name.clone(),
                        nodes: nodes.clone(),
                        relationship: *relationship,
                    });
                }
                Transform::RemoveIngress { name } => {
                    let before = ingresses.len();
                    ingresses.retain(|i| &i.name != name);
                    if ingresses.len() == before {
                        return Err(Error::lookup("ingress", name));
                    }
                    prepends.retain(|(m, _)| m.as_str() != name);
                }
                Transform::ShortestPath => {}
            }
        }
        let spec = DestinationSpec {
            ingresses: ingresses.iter().map(|i| IngressId::new(i.name.as_str())).collect(),
            attachments: ingresses
                .iter()
                .flat_map(|i| {
                    i.nodes.iter().map(move |&n| Attachment {
                        neighbor: n,
                        ingress: IngressId::new(i.name.as_str()),
                        relationship: i.relationship,
                    })
                })
                .collect(),
            origin: if d.moas.is_empty() {
                Origin::NewNode
            } else {
                let kept: Vec<NodeId> = ingresses.iter().flat_map(|i| i.nodes.clone()).collect();
                Origin::Moas(kept)
            },
            dst_id: d.id,
        };
        Ok((spec, prepends))
    }

    /// Topology with the destination attached and every transform applied.
    pub fn augmented(&self) -> Result<AugmentedTopology> {
        let topo = self.load_topology().map_err(|e| e.in_step("load topology"))?;
        self.augment(&topo)
    }

    pub(crate) fn augment(&self, topo: &Topology) -> Result<AugmentedTopology> {
        let (spec, prepends) = self.destination_spec().map_err(|e| e.in_step("destination"))?;
        let mut aug = attach_destination(topo, &spec).map_err(|e| e.in_step("destination"))?;
        for (m, k) in prepends {
            aug = apply_prepending(&aug, &m, k).map_err(|e| e.in_step("prepend"))?;
        }
        Ok(aug)
    }
}
