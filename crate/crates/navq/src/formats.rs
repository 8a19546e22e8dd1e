//! JSON documents: world files, global maps, checkpoints and mission reports.

use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use navq_core::agents::{AgentConfig, Learner, Method, MissionReport};
use navq_core::eval::SequenceResult;
use navq_core::gridmap::{CellState, GlobalMap, GridCoord};
use navq_core::neuralnet::{AdamState, Architecture, ArchitectureTag, NetworkParams, Tensor};
use navq_core::worldsim::{Obstacle, World, WorldSpec};

pub const WORLD_VERSION: u32 = 1;
pub const CHECKPOINT_VERSION: u32 = 1;
pub const REPORT_VERSION: u32 = 1;

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldFile {
    pub version: u32,
    pub spec: WorldSpec,
    pub obstacles: Vec<Obstacle>,
}

impl WorldFile {
    pub fn from_world(world: &World) -> Self {
        Self { version: WORLD_VERSION, spec: world.spec().clone(), obstacles: world.obstacles().to_vec() }
    }

    pub fn into_world(self) -> Result<World> {
        ensure!(self.version == WORLD_VERSION, "unsupported world file version {}", self.version);
        Ok(World::from_parts(self.spec, self.obstacles)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub r: i32,
    pub c: i32,
    pub state: CellState,
}

/// Global map document; only non-free cells are listed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalMapFile {
    pub width: u32,
    pub height: u32,
    pub start: [i32; 2],
    pub goal: [i32; 2],
    pub cells: Vec<CellRecord>,
}

impl GlobalMapFile {
    pub fn from_map(map: &GlobalMap) -> Self {
        let cells = map
            .annotated_cells()
            .into_iter()
            .map(|(c, state)| CellRecord { r: c.row, c: c.col, state })
            .collect();
        Self {
            width: map.width(),
            height: map.height(),
            start: [map.start().row, map.start().col],
            goal: [map.goal().row, map.goal().col],
            cells,
        }
    }

    pub fn to_map(&self) -> Result<GlobalMap> {
        let cells: Vec<(GridCoord, CellState)> =
            self.cells.iter().map(|r| (GridCoord::new(r.r, r.c), r.state)).collect();
        let at = |p: [i32; 2]| GridCoord::new(p[0], p[1]);
        Ok(GlobalMap::from_cells(self.width, self.height, at(self.start), at(self.goal), &cells)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamRecord {
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub learning_rate: f64,
    pub first_moment: Vec<NamedTensor>,
    pub second_moment: Vec<NamedTensor>,
}

/// Weights, optimiser moments and the configuration they were trained with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub architecture_tag: ArchitectureTag,
    pub architecture: Architecture,
    pub config: AgentConfig,
    pub tensors: Vec<NamedTensor>,
    pub adam: AdamRecord,
}

fn named(names: &[&str], tensors: &[Tensor]) -> Vec<NamedTensor> {
    names
        .iter()
        .zip(tensors)
        .map(|(n, t)| NamedTensor { name: n.to_string(), shape: t.shape().to_vec(), data: t.data().to_vec() })
        .collect()
}

fn unnamed(records: &[NamedTensor]) -> Result<Vec<(String, Tensor)>> {
    records
        .iter()
        .map(|r| Ok((r.name.clone(), Tensor::new(r.shape.clone(), r.data.clone())?)))
        .collect()
}

impl Checkpoint {
    pub fn from_learner(learner: &Learner) -> Self {
        let params = learner.online();
        let names: Vec<&str> = params.named_tensors().map(|(n, _)| n).collect();
        let adam = learner.adam();
        Self {
            version: CHECKPOINT_VERSION,
            architecture_tag: params.architecture().tag(),
            architecture: *params.architecture(),
            config: *learner.config(),
            tensors: named(&names, params.tensors()),
            adam: AdamRecord {
                step: adam.step,
                beta1: adam.beta1,
                beta2: adam.beta2,
                epsilon: adam.epsilon,
                learning_rate: adam.learning_rate,
                first_moment: named(&names, &adam.first_moment),
                second_moment: named(&names, &adam.second_moment),
            },
        }
    }

    pub fn method(&self) -> Method {
        self.config.method
    }

    /// Rebuilds a learner with these weights and moments under `config`,
    /// which must describe the same network.
    pub fn into_learner(self, config: AgentConfig) -> Result<Learner> {
        ensure!(self.version == CHECKPOINT_VERSION, "unsupported checkpoint version {}", self.version);
        ensure!(self.architecture.tag() == self.architecture_tag, "architecture tag does not match layout");
        if config.network_architecture() != self.architecture {
            bail!("configuration describes a different network than the checkpoint");
        }
        let params = NetworkParams::from_named(self.architecture, unnamed(&self.tensors)?)?;
        let order = |records: &[NamedTensor]| -> Result<Vec<Tensor>> {
            let by_name = unnamed(records)?;
            params
                .named_tensors()
                .map(|(n, t)| {
                    let (_, m) = by_name
                        .iter()
                        .find(|(name, _)| name == n)
                        .with_context(|| format!("optimiser state lacks {n}"))?;
                    ensure!(m.shape() == t.shape(), "optimiser state for {n} has the wrong shape");
                    Ok(m.clone())
                })
                .collect()
        };
        let adam = AdamState {
            first_moment: order(&self.adam.first_moment)?,
            second_moment: order(&self.adam.second_moment)?,
            step: self.adam.step,
            beta1: self.adam.beta1,
            beta2: self.adam.beta2,
            epsilon: self.adam.epsilon,
            learning_rate: self.adam.learning_rate,
        };
        Ok(Learner::from_params(config, params, Some(adam)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub version: u32,
    pub missions: Vec<SequenceResult>,
}

impl ReportFile {
    pub fn new(missions: Vec<SequenceResult>) -> Self {
        Self { version: REPORT_VERSION, missions }
    }

    pub fn reports(&self) -> impl Iterator<Item = &MissionReport> {
        self.missions.iter().map(|m| &m.report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use navq_core::worldsim::{generate_world, Domain};

    #[test]
    fn world_file_round_trip() {
        let spec = WorldSpec::for_domain(Domain::Savanna, 30, 30, GridCoord::new(0, 0), GridCoord::new(29, 29), 4);
        let world = generate_world(&spec).unwrap();
        let file = WorldFile::from_world(&world);
        let text = serde_json::to_string(&file).unwrap();
        let back: WorldFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.clone().into_world().unwrap(), world);
        assert!(text.contains("\"vx\""));
    }

    #[test]
    fn global_map_round_trip() {
        let mut map = GlobalMap::new(12, 12, GridCoord::new(1, 1), GridCoord::new(10, 10)).unwrap();
        map.set(GridCoord::new(3, 4), CellState::Blocked).unwrap();
        map.set(GridCoord::new(2, 2), CellState::Visited).unwrap();
        let file = GlobalMapFile::from_map(&map);
        let text = serde_json::to_string(&file).unwrap();
        assert!(text.contains("\"state\":\"blocked\"") && text.contains("\"state\":\"target\""));
        let back: GlobalMapFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_map().unwrap(), map);
    }

    #[test]
    fn checkpoint_round_trip() {
        let config = AgentConfig::default();
        let learner = Learner::new(config, 11).unwrap();
        let cp = Checkpoint::from_learner(&learner);
        assert_eq!(cp.architecture_tag, ArchitectureTag::Feedforward);
        assert_eq!(cp.tensors[0].name, "conv1.weight");
        let text = serde_json::to_string(&cp).unwrap();
        let back: Checkpoint = serde_json::from_str(&text).unwrap();
        let restored = back.into_learner(config).unwrap();
        assert_eq!(restored.online(), learner.online());
        assert_eq!(restored.adam(), learner.adam());
    }

    #[test]
    fn checkpoint_rejects_other_network() {
        let learner = Learner::new(AgentConfig::default(), 1).unwrap();
        let cp = Checkpoint::from_learner(&learner);
        let other = AgentConfig::default().with_method(Method::Drqn100);
        assert!(cp.into_learner(other).is_err());
    }
}
