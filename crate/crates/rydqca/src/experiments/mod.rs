//! Named experiments. Each returns its tables, reports and shot files; the
//! caller decides where they are written.

use serde_json::Value;

use crate::config::{ExperimentKind, LoadedConfig};
use crate::error::Result;
use crate::io::{ShotFile, Table};

pub mod bell;
pub mod cluster;
pub mod ghz;
pub mod graph_qca;
pub mod pxp_orbit;
pub mod quasiparticle;
pub mod rotation_scan;
pub mod spam_demo;

/// Everything an experiment produces, keyed by relative output path.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub tables: Vec<(String, Table)>,
    pub reports: Vec<(String, Value)>,
    pub shots: Vec<(String, ShotFile)>,
}

impl Artifacts {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn report(&self, name: &str) -> Option<&Value> {
        self.reports.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    fn add_table(&mut self, name: &str, table: Table) {
        self.tables.push((name.to_string(), table));
    }

    fn add_report(&mut self, name: &str, value: Value) {
        self.reports.push((name.to_string(), value));
    }

    fn add_step_shots(&mut self, ensembles: &[rydqca_core::ShotEnsemble], pattern: &str) {
        for e in ensembles {
            let step = e.meta.step.unwrap_or(0);
            self.shots.push((
                format!("shots/step_{step:03}.shots"),
                ShotFile { ensemble: e.clone(), pattern: Some(pattern.to_string()) },
            ));
        }
    }
}

pub fn execute(cfg: &LoadedConfig) -> Result<Artifacts> {
    match cfg.config.experiment {
        ExperimentKind::PxpOrbit => pxp_orbit::run(cfg),
        ExperimentKind::Quasiparticle => quasiparticle::run(cfg),
        ExperimentKind::RotationScan => rotation_scan::run(cfg),
        ExperimentKind::GhzGrowth => ghz::run(cfg),
        ExperimentKind::Bell => bell::run(cfg),
        ExperimentKind::Cluster => cluster::run(cfg),
        ExperimentKind::GraphQca => graph_qca::run(cfg),
        ExperimentKind::SpamDemo => spam_demo::run(cfg),
    }
}

pub(crate) fn pattern_string(chain: &rydqca_core::ChainSpec) -> String {
    chain.pattern().iter().map(|s| s.to_string()).collect()
}

/// Angle difference wrapped into `(−π, π]`.
pub(crate) fn wrap_angle(x: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let r = (x + PI).rem_euclid(TAU) - PI;
    if r <= -PI {
        r + TAU
    } else {
        r
    }
}

/// Finite floats as numbers, everything else as `null`.
pub(crate) fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub(crate) fn initial_state(cfg: &LoadedConfig, chain: &rydqca_core::ChainSpec) -> Result<rydqca_core::QuantumState> {
    let excited = &cfg.config.schedule.initial_excited;
    if excited.is_empty() {
        return Ok(rydqca_core::QuantumState::vacuum(chain));
    }
    let mut bits = vec![0u8; chain.n_sites()];
    for &s in excited {
        bits[s] = 1;
    }
    Ok(rydqca_core::QuantumState::basis_state(chain, &bits)?)
}
