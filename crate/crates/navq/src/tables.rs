//! CSV tables: training log, mission reports and decay summaries.

use std::path::Path;

use anyhow::{anyhow, Context, Result};
use serde::{Deserialize, Serialize};

use navq_core::agents::{EpisodeLog, Method, MissionReport};
use navq_core::eval::DecayExperimentResult;
use navq_core::worldsim::{Domain, WeatherCondition, WeatherKind};

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    r.deserialize().map(|row| row.map_err(anyhow::Error::from)).collect()
}

pub fn write_training_log(path: &Path, log: &[EpisodeLog]) -> Result<()> {
    write_rows(path, log)
}

pub fn read_training_log(path: &Path) -> Result<Vec<EpisodeLog>> {
    read_rows(path)
}

/// `clear`, or `<kind>@<intensity>` for degraded weather.
pub fn weather_label(kind: WeatherKind, intensity: f64) -> String {
    match kind {
        WeatherKind::Clear => "clear".to_string(),
        k => format!("{}@{}", k.name(), intensity),
    }
}

pub fn parse_weather_label(label: &str) -> Result<WeatherCondition> {
    let (name, intensity) = match label.split_once('@') {
        Some((n, i)) => (n, i.parse::<f64>().map_err(|_| anyhow!("bad weather intensity in {label:?}"))?),
        None => (label, 0.0),
    };
    let kind = WeatherKind::parse(name).ok_or_else(|| anyhow!("unknown weather {name:?}"))?;
    Ok(WeatherCondition::new(kind, intensity)?)
}

/// One mission per row in table column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: Method,
    pub domain: Domain,
    pub weather: String,
    pub distance_m: f64,
    pub time_s: u64,
    pub completed: bool,
    pub obstacles: u64,
    pub predictions: u64,
    pub corrections: u64,
    pub random: u64,
}

impl From<&MissionReport> for ReportRow {
    fn from(r: &MissionReport) -> Self {
        Self {
            method: r.method,
            domain: r.domain,
            weather: weather_label(r.weather, r.intensity),
            distance_m: r.distance_m,
            time_s: r.time_s,
            completed: r.completed,
            obstacles: r.obstacles,
            predictions: r.predictions,
            corrections: r.corrections,
            random: r.random,
        }
    }
}

pub fn write_reports<'a>(path: &Path, reports: impl IntoIterator<Item = &'a MissionReport>) -> Result<()> {
    write_rows(path, reports.into_iter().map(ReportRow::from))
}

pub fn read_reports(path: &Path) -> Result<Vec<ReportRow>> {
    read_rows(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub rule: String,
    pub update: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Rows for update indices `1..=K` per rule; with `K = 0` the single row
/// is the untouched initial population.
pub fn decay_rows(result: &DecayExperimentResult) -> Vec<DecayRow> {
    let rule = result.rule.name().to_string();
    let row = |s: &navq_core::eval::DecaySummary| DecayRow {
        rule: rule.clone(),
        update: s.update,
        min: s.min,
        q1: s.q1,
        median: s.median,
        q3: s.q3,
        max: s.max,
    };
    if result.summaries.is_empty() {
        let initial = navq_core::eval::DecaySummary::of(0, &result.final_values());
        return vec![row(&initial)];
    }
    result.summaries.iter().map(row).collect()
}

pub fn write_decay(path: &Path, results: &[DecayExperimentResult]) -> Result<()> {
    write_rows(path, results.iter().flat_map(decay_rows))
}

pub fn read_decay(path: &Path) -> Result<Vec<DecayRow>> {
    read_rows(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use navq_core::agents::Rule;
    use navq_core::eval::{decay_experiment, DecayConfig};

    #[test]
    fn weather_labels_round_trip() {
        for (k, i) in [(WeatherKind::Clear, 0.0), (WeatherKind::Fog, 0.3), (WeatherKind::Snow, 0.15)] {
            let w = parse_weather_label(&weather_label(k, i)).unwrap();
            assert_eq!((w.kind(), w.intensity()), (k, i));
        }
        assert!(parse_weather_label("hail").is_err());
    }

    #[test]
    fn decay_rows_per_update() {
        let r = decay_experiment(Rule::Eddqn, &DecayConfig { updates: 10, ..DecayConfig::default() }).unwrap();
        let rows = decay_rows(&r);
        assert_eq!(rows.len(), 10);
        assert_eq!(rows[9].update, 10);
        let flat = decay_experiment(Rule::Ddqn, &DecayConfig { updates: 0, ..DecayConfig::default() }).unwrap();
        let rows = decay_rows(&flat);
        assert_eq!(rows.len(), 1);
        assert!(rows[0].min == -0.04 && rows[0].max == -0.04);
    }

    #[test]
    fn emitted_reports_parse_back() {
        use crate::formats::{read_json, write_json, ReportFile};
        use navq_core::agents::{AgentConfig, Learner};
        use navq_core::eval::{run_mission, MissionSpec, SequenceResult};

        let config = AgentConfig { max_steps_per_mission: 120, ..AgentConfig::default() };
        let mut learner = Learner::new(config, 4).unwrap();
        let fog = WeatherCondition::new(WeatherKind::Fog, WeatherCondition::HEAVY).unwrap();
        let missions: Vec<SequenceResult> = [(Domain::Forest, WeatherCondition::clear()), (Domain::Savanna, fog)]
            .into_iter()
            .enumerate()
            .map(|(i, (domain, weather))| {
                let spec = MissionSpec::new(domain, 12, 6.0, weather, i as u64).unwrap();
                SequenceResult { label: format!("m{i}"), report: run_mission(&spec, &mut learner).unwrap() }
            })
            .collect();
        let file = ReportFile::new(missions);
        let dir = tempfile::tempdir().unwrap();
        let (csv_path, json_path) = (dir.path().join("report.csv"), dir.path().join("report.json"));
        write_reports(&csv_path, file.reports()).unwrap();
        write_json(&json_path, &file).unwrap();

        let rows = read_reports(&csv_path).unwrap();
        let expected: Vec<ReportRow> = file.reports().map(ReportRow::from).collect();
        assert_eq!(rows, expected);
        let back: ReportFile = read_json(&json_path).unwrap();
        assert_eq!(back, file);
        assert_eq!(rows[1].weather, "fog@0.3");
    }
}
