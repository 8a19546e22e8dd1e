//! Plain-text `key = value` run configuration. Command-line flags are
//! applied on top of the file; unknown keys are rejected.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

use navq_core::agents::{AgentConfig, EpsilonBranch, GreedyScope, Method};
use navq_core::eval::{DecayConfig, SequenceScale, TEST_SEQUENCE};
use navq_core::gridmap::GridCoord;
use navq_core::worldsim::{Domain, WeatherCondition, WeatherKind, WorldSpec};

/// Which missions `evaluate` flies.
#[derive(Debug, Clone, PartialEq)]
pub enum MissionSelection {
    /// The ten-test sequence.
    Sequence,
    /// One mission built from the domain, weather, side and distance keys.
    Single,
    /// A subset of the sequence, by label, in the given order.
    Labels(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub agent: AgentConfig,
    pub domain: Domain,
    pub width: u32,
    pub height: u32,
    /// `None` takes the domain default.
    pub density: Option<f64>,
    pub dynamic_count: Option<u32>,
    pub obstacle_radius: f64,
    pub start: GridCoord,
    pub goal: GridCoord,
    pub world_file: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub weather: WeatherKind,
    pub intensity: f64,
    pub scale: SequenceScale,
    pub missions: MissionSelection,
    pub side: u32,
    pub distance: f64,
    pub runs: usize,
    pub workers: usize,
    pub population: usize,
    pub reward: f64,
    pub updates: usize,
    pub step_size: f64,
    pub step_spread: f64,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let decay = DecayConfig::default();
        Self {
            agent: AgentConfig::default(),
            domain: Domain::Forest,
            width: 10,
            height: 10,
            density: None,
            dynamic_count: None,
            obstacle_radius: navq_core::worldsim::DEFAULT_OBSTACLE_RADIUS,
            start: GridCoord::new(0, 0),
            goal: GridCoord::new(9, 9),
            world_file: None,
            checkpoint: None,
            weather: WeatherKind::Clear,
            intensity: 0.0,
            scale: SequenceScale::desk(),
            missions: MissionSelection::Sequence,
            side: 20,
            distance: 14.0,
            runs: 1,
            workers: 1,
            population: decay.population,
            reward: decay.reward,
            updates: decay.updates,
            step_size: decay.step_size,
            step_spread: decay.step_spread,
            seed: 0,
            out: PathBuf::from("out"),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| anyhow!("invalid value {value:?} for {key}"))
}

fn parse_opt<T: FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    if value == "default" {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn parse_triple(key: &str, value: &str) -> Result<[usize; 3]> {
    let parts: Vec<usize> = value.split(',').map(|p| parse(key, p.trim())).collect::<Result<_>>()?;
    parts.try_into().map_err(|_| anyhow!("{key} takes three comma-separated values"))
}

fn parse_coord(key: &str, value: &str) -> Result<GridCoord> {
    let (r, c) = value.split_once(',').ok_or_else(|| anyhow!("{key} takes row,col"))?;
    Ok(GridCoord::new(parse(key, r.trim())?, parse(key, c.trim())?))
}

fn opt_text<T: Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "default".to_string(), T::to_string)
}

fn branch_name(b: EpsilonBranch) -> &'static str {
    match b {
        EpsilonBranch::RandomBelow => "random-below",
        EpsilonBranch::GreedyBelow => "greedy-below",
    }
}

fn scope_name(s: GreedyScope) -> &'static str {
    match s {
        GreedyScope::AllActions => "all-actions",
        GreedyScope::ValidOnly => "valid-only",
    }
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let a = &mut self.agent;
        match key {
            "epsilon_train" => a.epsilon_train = parse(key, value)?,
            "epsilon_test" => a.epsilon_test = parse(key, value)?,
            "gamma" => a.gamma = parse(key, value)?,
            "bootstrap_coefficient" => a.bootstrap_coefficient = parse_opt(key, value)?,
            "replay_capacity" => a.replay_capacity = parse(key, value)?,
            "sync_every" => a.sync_every = parse(key, value)?,
            "learning_rate" => a.learning_rate = parse(key, value)?,
            "batch_size" => a.batch_size = parse(key, value)?,
            "method" | "rule" => {
                a.method = Method::parse(value).ok_or_else(|| anyhow!("unknown method {value:?}"))?
            }
            "max_episodes" => a.max_episodes = parse(key, value)?,
            "success_streak" => a.success_streak = parse(key, value)?,
            "max_steps_per_episode" => a.max_steps_per_episode = parse(key, value)?,
            "max_steps_per_mission" => a.max_steps_per_mission = parse(key, value)?,
            "train_every" => a.train_every = parse(key, value)?,
            "epsilon_branch" => {
                a.epsilon_branch = match value {
                    "random-below" => EpsilonBranch::RandomBelow,
                    "greedy-below" => EpsilonBranch::GreedyBelow,
                    _ => bail!("unknown epsilon_branch {value:?}"),
                }
            }
            "greedy_scope" => {
                a.greedy_scope = match value {
                    "all-actions" => GreedyScope::AllActions,
                    "valid-only" => GreedyScope::ValidOnly,
                    _ => bail!("unknown greedy_scope {value:?}"),
                }
            }
            "input_size" => a.architecture.input_size = parse(key, value)?,
            "conv_filters" => a.architecture.conv_filters = parse_triple(key, value)?,
            "conv_kernels" => a.architecture.conv_kernels = parse_triple(key, value)?,
            "dense_hidden" => a.architecture.dense_hidden = parse(key, value)?,
            "dropout" => a.architecture.dropout = parse(key, value)?,
            "domain" => self.domain = Domain::parse(value).ok_or_else(|| anyhow!("unknown domain {value:?}"))?,
            "width" => self.width = parse(key, value)?,
            "height" => self.height = parse(key, value)?,
            "density" => self.density = parse_opt(key, value)?,
            "dynamic_count" => self.dynamic_count = parse_opt(key, value)?,
            "obstacle_radius" => self.obstacle_radius = parse(key, value)?,
            "start" => self.start = parse_coord(key, value)?,
            "goal" => self.goal = parse_coord(key, value)?,
            "world" => self.world_file = (value != "none").then(|| PathBuf::from(value)),
            "checkpoint" => self.checkpoint = (value != "none").then(|| PathBuf::from(value)),
            "weather" => {
                self.weather = WeatherKind::parse(value).ok_or_else(|| anyhow!("unknown weather {value:?}"))?
            }
            "intensity" => self.intensity = parse(key, value)?,
            "scale" => {
                self.scale = match value {
                    "desk" => SequenceScale::desk(),
                    "full" => SequenceScale::full(),
                    _ => bail!("scale is desk or full"),
                }
            }
            "missions" => {
                self.missions = match value {
                    "sequence" => MissionSelection::Sequence,
                    "single" => MissionSelection::Single,
                    list => {
                        let labels: Vec<String> = list.split(',').map(|l| l.trim().to_string()).collect();
                        if let Some(bad) = labels.iter().find(|l| !TEST_SEQUENCE.contains(&l.as_str())) {
                            bail!("unknown mission label {bad:?}");
                        }
                        MissionSelection::Labels(labels)
                    }
                }
            }
            "side" => self.side = parse(key, value)?,
            "distance" => self.distance = parse(key, value)?,
            "runs" => self.runs = parse(key, value)?,
            "workers" => self.workers = parse(key, value)?,
            "population" => self.population = parse(key, value)?,
            "reward" => self.reward = parse(key, value)?,
            "updates" => self.updates = parse(key, value)?,
            "step_size" => self.step_size = parse(key, value)?,
            "step_spread" => self.step_spread = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "out" => self.out = PathBuf::from(value),
            _ => bail!("unknown configuration key {key:?}"),
        }
        Ok(())
    }

    /// Parses a configuration file body on top of the defaults. Blank lines
    /// and `#` comments are skipped.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key = value", n + 1))?;
            cfg.set(k.trim(), v.trim()).with_context(|| format!("line {}", n + 1))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse_text(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Every key except `out` with its effective value, in a form
    /// [`RunConfig::parse_text`] reads back. Leaving out the output
    /// directory keeps the dump identical across output locations.
    pub fn dump(&self) -> String {
        let a = &self.agent;
        let arch = &a.architecture;
        let triple = |t: [usize; 3]| format!("{},{},{}", t[0], t[1], t[2]);
        let scale = if self.scale == SequenceScale::full() { "full" } else { "desk" };
        let missions = match &self.missions {
            MissionSelection::Sequence => "sequence".to_string(),
            MissionSelection::Single => "single".to_string(),
            MissionSelection::Labels(l) => l.join(","),
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map_or_else(|| "none".to_string(), |p| p.display().to_string());
        let pairs: Vec<(&str, String)> = vec![
            ("epsilon_train", a.epsilon_train.to_string()),
            ("epsilon_test", a.epsilon_test.to_string()),
            ("gamma", a.gamma.to_string()),
            ("bootstrap_coefficient", opt_text(&a.bootstrap_coefficient)),
            ("replay_capacity", a.replay_capacity.to_string()),
            ("sync_every", a.sync_every.to_string()),
            ("learning_rate", a.learning_rate.to_string()),
            ("batch_size", a.batch_size.to_string()),
            ("method", a.method.name().to_string()),
            ("max_episodes", a.max_episodes.to_string()),
            ("success_streak", a.success_streak.to_string()),
            ("max_steps_per_episode", a.max_steps_per_episode.to_string()),
            ("max_steps_per_mission", a.max_steps_per_mission.to_string()),
            ("train_every", a.train_every.to_string()),
            ("epsilon_branch", branch_name(a.epsilon_branch).to_string()),
            ("greedy_scope", scope_name(a.greedy_scope).to_string()),
            ("input_size", arch.input_size.to_string()),
            ("conv_filters", triple(arch.conv_filters)),
            ("conv_kernels", triple(arch.conv_kernels)),
            ("dense_hidden", arch.dense_hidden.to_string()),
            ("dropout", arch.dropout.to_string()),
            ("domain", self.domain.name().to_string()),
            ("width", self.width.to_string()),
            ("height", self.height.to_string()),
            ("density", opt_text(&self.density)),
            ("dynamic_count", opt_text(&self.dynamic_count)),
            ("obstacle_radius", self.obstacle_radius.to_string()),
            ("start", format!("{},{}", self.start.row, self.start.col)),
            ("goal", format!("{},{}", self.goal.row, self.goal.col)),
            ("world", path(&self.world_file)),
            ("checkpoint", path(&self.checkpoint)),
            ("weather", self.weather.name().to_string()),
            ("intensity", self.intensity.to_string()),
            ("scale", scale.to_string()),
            ("missions", missions),
            ("side", self.side.to_string()),
            ("distance", self.distance.to_string()),
            ("runs", self.runs.to_string()),
            ("workers", self.workers.to_string()),
            ("population", self.population.to_string()),
            ("reward", self.reward.to_string()),
            ("updates", self.updates.to_string()),
            ("step_size", self.step_size.to_string()),
            ("step_spread", self.step_spread.to_string()),
            ("seed", self.seed.to_string()),
        ];
        pairs.into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn world_spec(&self) -> WorldSpec {
        let mut spec = WorldSpec::for_domain(self.domain, self.width, self.height, self.start, self.goal, self.seed);
        if let Some(d) = self.density {
            spec.obstacle_density = d;
        }
        if let Some(n) = self.dynamic_count {
            spec.dynamic_count = n;
        }
        spec.obstacle_radius = self.obstacle_radius;
        spec
    }

    pub fn weather_condition(&self) -> Result<WeatherCondition> {
        Ok(WeatherCondition::new(self.weather, self.intensity)?)
    }

    pub fn decay_config(&self) -> DecayConfig {
        DecayConfig {
            population: self.population,
            reward: self.reward,
            gamma: self.agent.gamma,
            updates: self.updates,
            step_size: self.step_size,
            step_spread: self.step_spread,
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_carry_agent_defaults() {
        let c = RunConfig::default();
        assert_eq!(c.agent, AgentConfig::default());
        assert_eq!(c.decay_config().reward, -0.04);
    }

    #[test]
    fn dump_reloads_identically() {
        let mut c = RunConfig::default();
        c.set("rule", "drqn100").unwrap();
        c.set("density", "12.5").unwrap();
        c.set("missions", "F100,s30").unwrap();
        c.set("bootstrap_coefficient", "0.9").unwrap();
        c.set("scale", "full").unwrap();
        assert_eq!(RunConfig::parse_text(&c.dump()).unwrap(), c);
        assert_eq!(RunConfig::parse_text(&RunConfig::default().dump()).unwrap(), RunConfig::default());
    }

    #[test]
    fn rejects_unknown_keys_and_values() {
        assert!(RunConfig::parse_text("colour = blue").is_err());
        assert!(RunConfig::parse_text("gamma = lots").is_err());
        assert!(RunConfig::parse_text("missions = Z9").is_err());
        assert!(RunConfig::parse_text("no separator").is_err());
        let c = RunConfig::parse_text("# comment\n\nseed = 4  # trailing\n").unwrap();
        assert_eq!(c.seed, 4);
    }
}
