//! Experiment configuration documents (TOML).
//!
//! Every block except the top-level keys is optional; missing values take
//! the defaults below. Semantic errors are reported against the line of the
//! offending key.

use std::fmt;
use std::path::{Path, PathBuf};

use rydqca_core::lattice::{build_alternating_chain_with, C6Table};
use rydqca_core::physical::{
    nnn_shift, IntermediateState, ModelOptions, NoiseConfig, Propagator, PxpScheduleOptions, DEFAULT_MASK_SHIFT_MHZ,
    DEFAULT_RABI_MHZ,
};
use rydqca_core::spam::{SpamParams, SpeciesSpam};
use rydqca_core::{ChainSpec, Species};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    PxpOrbit,
    Quasiparticle,
    RotationScan,
    GhzGrowth,
    Bell,
    Cluster,
    GraphQca,
    SpamDemo,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::PxpOrbit => "pxp_orbit",
            ExperimentKind::Quasiparticle => "quasiparticle",
            ExperimentKind::RotationScan => "rotation_scan",
            ExperimentKind::GhzGrowth => "ghz_growth",
            ExperimentKind::Bell => "bell",
            ExperimentKind::Cluster => "cluster",
            ExperimentKind::GraphQca => "graph_qca",
            ExperimentKind::SpamDemo => "spam_demo",
        }
    }

    pub fn engines(self) -> &'static [EngineKind] {
        use EngineKind::*;
        match self {
            ExperimentKind::PxpOrbit | ExperimentKind::Quasiparticle | ExperimentKind::RotationScan => &[Ideal, Physical],
            ExperimentKind::Bell => &[Ideal, Physical],
            ExperimentKind::Cluster | ExperimentKind::GraphQca => &[Ideal, Clifford],
            ExperimentKind::GhzGrowth | ExperimentKind::SpamDemo => &[Ideal],
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    Ideal,
    Physical,
    Clifford,
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EngineKind::Ideal => "ideal",
            EngineKind::Physical => "physical",
            EngineKind::Clifford => "clifford",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpeciesName {
    A,
    B,
}

impl From<SpeciesName> for Species {
    fn from(s: SpeciesName) -> Species {
        match s {
            SpeciesName::A => Species::A,
            SpeciesName::B => Species::B,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct C6Block {
    pub aa: Option<f64>,
    pub ab: Option<f64>,
    pub bb: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainBlock {
    pub n_sites: Option<usize>,
    pub spacing_um: f64,
    pub first_species: SpeciesName,
    /// Explicit species string such as `"BAB"`; overrides `n_sites`.
    pub pattern: Option<String>,
    /// Multiplies every C6 coefficient (strong-blockade limits).
    pub c6_scale: f64,
    pub c6: C6Block,
}

impl Default for ChainBlock {
    fn default() -> Self {
        ChainBlock {
            n_sites: None,
            spacing_um: rydqca_core::lattice::DEFAULT_SPACING_UM,
            first_species: SpeciesName::A,
            pattern: None,
            c6_scale: 1.0,
            c6: C6Block::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    /// Exact `∏CZ ∏√X` step with the gate's local phases undone.
    #[default]
    Corrected,
    /// π/2 pulse followed by the bare mediated layer.
    Hardware,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleBlock {
    pub n_pulses: Option<usize>,
    pub theta_over_pi: f64,
    pub thetas_over_pi: Vec<f64>,
    /// Sites prepared in |1⟩ (basis-state initialization).
    pub initial_excited: Vec<usize>,
    /// Single domain wall: B sites at or beyond this index start excited.
    pub wall_first: Option<usize>,
    /// B site left unmasked by the GHZ initialization pulse.
    pub ghz_seed_site: Option<usize>,
    pub n_data: Option<usize>,
    pub steps: Option<usize>,
    pub data_species: SpeciesName,
    pub rabi_mhz: f64,
    pub nnn_compensation: bool,
    /// Constant detuning error per species (A, B) in MHz.
    pub detuning_error_mhz: [f64; 2],
    /// Additional detuning error in units of each species' NNN shift.
    pub detuning_error_nnn: f64,
    pub protocol: Protocol,
    pub readout_angles: usize,
    pub alpha_over_pi: f64,
    /// Glider initial operators, e.g. `"U0"` or `"D5"`.
    pub gliders: Vec<String>,
}

impl Default for ScheduleBlock {
    fn default() -> Self {
        ScheduleBlock {
            n_pulses: None,
            theta_over_pi: 1.0,
            thetas_over_pi: vec![1.0, 1.1, 1.2],
            initial_excited: Vec::new(),
            wall_first: None,
            ghz_seed_site: None,
            n_data: None,
            steps: None,
            data_species: SpeciesName::A,
            rabi_mhz: DEFAULT_RABI_MHZ,
            nnn_compensation: true,
            detuning_error_mhz: [0.0; 2],
            detuning_error_nnn: 0.0,
            protocol: Protocol::Corrected,
            readout_angles: 16,
            alpha_over_pi: 0.5,
            gliders: vec!["U0".into(), "D5".into()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoisePreset {
    #[default]
    None,
    Standard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntermediateMode {
    Off,
    Eliminated,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseBlock {
    pub preset: NoisePreset,
    pub n_trajectories: Option<usize>,
    pub rydberg_lifetime_us: Option<[f64; 2]>,
    pub dephasing_rate_per_us: Option<[f64; 2]>,
    pub intensity_sigma: Option<[f64; 2]>,
    pub position_sigma_um: Option<f64>,
    pub intermediate: Option<IntermediateMode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropagatorName {
    #[default]
    Chebyshev,
    Krylov,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelBlock {
    pub interaction_range: Option<usize>,
    pub mask_light_shift_mhz: f64,
    pub propagator: PropagatorName,
}

impl Default for ModelBlock {
    fn default() -> Self {
        ModelBlock { interaction_range: None, mask_light_shift_mhz: DEFAULT_MASK_SHIFT_MHZ, propagator: PropagatorName::Chebyshev }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl GridBlock {
    pub fn values(&self) -> Vec<f64> {
        if self.points < 2 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.start + step * i as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisBlock {
    /// Pulses included in the magnetization decay fit.
    pub fit_window: Option<usize>,
    /// Detuning scan for the mediated-gate calibration, in units of Ω.
    pub delta_grid_over_omega: GridBlock,
    /// Quasiparticle number conditioned on in position histograms.
    pub histogram_q: usize,
}

impl Default for AnalysisBlock {
    fn default() -> Self {
        AnalysisBlock {
            fit_window: None,
            delta_grid_over_omega: GridBlock { start: 0.3, stop: 1.8, points: 61 },
            histogram_q: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpamPreset {
    #[default]
    Corrected,
    Raw,
    Perfect,
}

/// Per-species overrides, named after the calibration table columns.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesSpamBlock {
    pub eta: Option<f64>,
    pub f_p: Option<f64>,
    pub f_n: Option<f64>,
    pub survival: Option<f64>,
    pub d_g: Option<f64>,
    pub d_r: Option<f64>,
}

impl SpeciesSpamBlock {
    fn apply(&self, base: &mut SpeciesSpam) {
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut base.eta, self.eta);
        set(&mut base.f_p, self.f_p);
        set(&mut base.f_n, self.f_n);
        set(&mut base.survival, self.survival);
        set(&mut base.d_g, self.d_g);
        set(&mut base.d_r, self.d_r);
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpamBlock {
    pub preset: SpamPreset,
    pub a: SpeciesSpamBlock,
    pub b: SpeciesSpamBlock,
}

impl SpamBlock {
    pub fn params(&self) -> SpamParams {
        let mut p = match self.preset {
            SpamPreset::Corrected => SpamParams::calibrated(),
            SpamPreset::Raw => SpamParams::raw_calibration(),
            SpamPreset::Perfect => SpamParams::perfect(),
        };
        self.a.apply(&mut p.a);
        self.b.apply(&mut p.b);
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub engine: EngineKind,
    pub seed: u64,
    #[serde(default)]
    pub shots: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub chain: ChainBlock,
    #[serde(default)]
    pub schedule: ScheduleBlock,
    #[serde(default)]
    pub noise: NoiseBlock,
    #[serde(default)]
    pub model: ModelBlock,
    #[serde(default)]
    pub analysis: AnalysisBlock,
    #[serde(default)]
    pub spam: SpamBlock,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs/out")
}

/// A parsed config with the text it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub source: String,
    pub path: String,
}

impl LoadedConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_str(&text, &path.display().to_string())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn from_str(text: &str, path: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_of_offset(text, s.start)).unwrap_or(1);
            HarnessError::Config { path: path.to_string(), line, message: e.message().trim().to_string() }
        })?;
        let loaded = LoadedConfig { config, source: text.to_string(), path: path.to_string() };
        loaded.validate()?;
        Ok(loaded)
    }

    /// Error anchored at the line defining `key` (a dotted path such as
    /// `"schedule.n_pulses"`), or at line 1 when the key is absent.
    pub fn error_at(&self, key: &str, message: impl Into<String>) -> HarnessError {
        HarnessError::Config { path: self.path.clone(), line: key_line(&self.source, key), message: message.into() }
    }

    fn validate(&self) -> Result<()> {
        let c = &self.config;
        if !c.experiment.engines().contains(&c.engine) {
            return Err(self.error_at(
                "engine",
                format!("experiment {} does not support engine {}", c.experiment, c.engine),
            ));
        }
        if let Some(p) = &c.chain.pattern {
            if p.is_empty() || p.chars().any(|ch| Species::from_char(ch).is_none()) {
                return Err(self.error_at("chain.pattern", format!("pattern '{p}' must be a non-empty string of A and B")));
            }
        }
        if !(c.chain.spacing_um > 0.0) {
            return Err(self.error_at("chain.spacing_um", "spacing must be positive"));
        }
        if !(c.chain.c6_scale > 0.0) {
            return Err(self.error_at("chain.c6_scale", "c6_scale must be positive"));
        }
        if !(c.schedule.rabi_mhz > 0.0) {
            return Err(self.error_at("schedule.rabi_mhz", "Rabi frequency must be positive"));
        }
        if c.noise.n_trajectories == Some(0) {
            return Err(self.error_at("noise.n_trajectories", "need at least one trajectory"));
        }
        let needs_sites = matches!(
            c.experiment,
            ExperimentKind::PxpOrbit
                | ExperimentKind::Quasiparticle
                | ExperimentKind::RotationScan
                | ExperimentKind::GhzGrowth
                | ExperimentKind::SpamDemo
        );
        if needs_sites && c.chain.n_sites.is_none() && c.chain.pattern.is_none() {
            return Err(self.error_at("chain", "chain.n_sites or chain.pattern is required"));
        }
        if matches!(c.experiment, ExperimentKind::PxpOrbit | ExperimentKind::Quasiparticle | ExperimentKind::RotationScan | ExperimentKind::GhzGrowth)
            && c.schedule.n_pulses.is_none()
        {
            return Err(self.error_at("schedule", "schedule.n_pulses is required"));
        }
        if c.engine == EngineKind::Physical
            && matches!(c.experiment, ExperimentKind::Quasiparticle | ExperimentKind::RotationScan)
            && c.shots == 0
        {
            return Err(self.error_at("shots", "physical quasiparticle statistics need shots > 0"));
        }
        if c.experiment == ExperimentKind::SpamDemo && c.shots == 0 {
            return Err(self.error_at("shots", "spam_demo needs shots > 0"));
        }
        if c.experiment == ExperimentKind::RotationScan && c.schedule.thetas_over_pi.is_empty() {
            return Err(self.error_at("schedule.thetas_over_pi", "empty rotation-angle list"));
        }
        if c.experiment == ExperimentKind::GhzGrowth && c.schedule.ghz_seed_site.is_none() {
            return Err(self.error_at("schedule", "schedule.ghz_seed_site is required"));
        }
        if matches!(c.experiment, ExperimentKind::Cluster | ExperimentKind::GraphQca) {
            match c.schedule.n_data {
                Some(n) if n >= 2 => {}
                Some(_) => return Err(self.error_at("schedule.n_data", "need at least two data atoms")),
                None => return Err(self.error_at("schedule", "schedule.n_data is required")),
            }
        }
        if c.schedule.readout_angles < 8 {
            return Err(self.error_at("schedule.readout_angles", "need at least 8 readout angles"));
        }
        if c.analysis.delta_grid_over_omega.points == 0 {
            return Err(self.error_at("analysis.delta_grid_over_omega", "empty detuning grid"));
        }
        let chain = self.chain().map_err(|e| self.error_at("chain", e.to_string()))?;
        for &s in &c.schedule.initial_excited {
            if s >= chain.n_sites() {
                return Err(self.error_at("schedule.initial_excited", format!("site {s} outside the chain")));
            }
        }
        if let Some(s) = c.schedule.ghz_seed_site {
            if s >= chain.n_sites() {
                return Err(self.error_at("schedule.ghz_seed_site", format!("site {s} outside the chain")));
            }
        }
        self.noise().validate().map_err(|e| self.error_at("noise", e.to_string()))?;
        c.spam.params().a.map().and(c.spam.params().b.map()).map_err(|e| self.error_at("spam", e.to_string()))?;
        Ok(())
    }

    pub fn c6(&self) -> C6Table {
        let b = &self.config.chain.c6;
        let d = C6Table::standard();
        C6Table { aa: b.aa.unwrap_or(d.aa), ab: b.ab.unwrap_or(d.ab), bb: b.bb.unwrap_or(d.bb) }.scaled(self.config.chain.c6_scale)
    }

    /// The configured chain. Experiments on data qubits may ignore it.
    pub fn chain(&self) -> rydqca_core::Result<ChainSpec> {
        let c = &self.config.chain;
        match (&c.pattern, c.n_sites) {
            (Some(p), _) => ChainSpec::from_pattern_str(p, c.spacing_um, self.c6()),
            (None, Some(n)) => build_alternating_chain_with(n, c.spacing_um, c.first_species.into(), self.c6()),
            (None, None) => build_alternating_chain_with(1, c.spacing_um, c.first_species.into(), self.c6()),
        }
    }

    pub fn noise(&self) -> NoiseConfig {
        let b = &self.config.noise;
        let mut n = match b.preset {
            NoisePreset::None => NoiseConfig::noiseless(self.config.seed),
            NoisePreset::Standard => NoiseConfig::standard(self.config.seed),
        };
        if let Some(v) = b.n_trajectories {
            n.n_trajectories = v;
        }
        if let Some(v) = b.rydberg_lifetime_us {
            n.rydberg_lifetime = v;
        }
        if let Some(v) = b.dephasing_rate_per_us {
            n.dephasing_rate = v;
        }
        if let Some(v) = b.intensity_sigma {
            n.intensity_sigma = v;
        }
        if let Some(v) = b.position_sigma_um {
            n.position_sigma = v;
        }
        if let Some(mode) = b.intermediate {
            let ladders = IntermediateState::standard_ladders();
            n.intermediate = match mode {
                IntermediateMode::Off => IntermediateState::Off,
                IntermediateMode::Eliminated => IntermediateState::Eliminated(ladders),
                IntermediateMode::Explicit => IntermediateState::Explicit(ladders),
            };
        }
        n
    }

    pub fn model_options(&self) -> ModelOptions {
        let m = &self.config.model;
        ModelOptions {
            interaction_range: m.interaction_range,
            mask_light_shift: m.mask_light_shift_mhz,
            propagator: match m.propagator {
                PropagatorName::Chebyshev => Propagator::Chebyshev,
                PropagatorName::Krylov => Propagator::Krylov,
            },
        }
    }

    pub fn pxp_options(&self, chain: &ChainSpec, theta: f64) -> PxpScheduleOptions {
        let s = &self.config.schedule;
        let err = |sp: Species| s.detuning_error_mhz[sp.index()] + s.detuning_error_nnn * nnn_shift(chain, sp);
        PxpScheduleOptions {
            theta,
            rabi: s.rabi_mhz,
            nnn_compensation: s.nnn_compensation,
            detuning_error: [err(Species::A), err(Species::B)],
        }
    }

    pub fn data_species(&self) -> Species {
        self.config.schedule.data_species.into()
    }
}

pub(crate) fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Line (1-based) where a dotted key is defined, falling back to its table
/// header and then to line 1.
pub fn key_line(text: &str, key: &str) -> usize {
    let (table, leaf) = match key.rsplit_once('.') {
        Some((t, l)) => (t, l),
        None => ("", key),
    };
    let mut current = String::new();
    let mut header_line = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(h) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = h.trim().to_string();
            if current == key {
                return i + 1;
            }
            if current == table {
                header_line = Some(i + 1);
            }
            continue;
        }
        if current == table {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == leaf {
                    return i + 1;
                }
            }
        }
    }
    header_line.unwrap_or(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "experiment = \"pxp_orbit\"\nengine = \"ideal\"\nseed = 3\n\n[chain]\nn_sites = 5\n\n[schedule]\nn_pulses = 6\n";

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = LoadedConfig::from_str(MINIMAL, "m.toml").unwrap();
        assert_eq!(c.config.seed, 3);
        assert_eq!(c.chain().unwrap().n_sites(), 5);
        assert_eq!(c.config.schedule.rabi_mhz, DEFAULT_RABI_MHZ);
        assert!(c.noise().is_noiseless());
    }

    #[test]
    fn missing_seed_is_rejected() {
        let err = LoadedConfig::from_str("experiment = \"bell\"\nengine = \"ideal\"\n", "x.toml").unwrap_err();
        assert!(err.to_string().contains("seed"), "{err}");
    }

    #[test]
    fn syntax_errors_point_at_their_line() {
        let text = "experiment = \"pxp_orbit\"\nengine = \"ideal\"\nseed = 1\n[chain]\nn_sites = = 3\n";
        match LoadedConfig::from_str(text, "x.toml").unwrap_err() {
            HarnessError::Config { line, .. } => assert_eq!(line, 5),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn semantic_errors_point_at_their_key() {
        let text = MINIMAL.replace("engine = \"ideal\"", "engine = \"clifford\"");
        match LoadedConfig::from_str(&text, "x.toml").unwrap_err() {
            HarnessError::Config { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("clifford"));
            }
            other => panic!("{other}"),
        }
        let text = MINIMAL.replace("n_sites = 5", "n_sites = 5\nc6_scale = -1.0");
        match LoadedConfig::from_str(&text, "x.toml").unwrap_err() {
            HarnessError::Config { line, .. } => assert_eq!(line, 7),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("n_pulses = 6", "n_pulses = 6\nn_pulse = 7");
        match LoadedConfig::from_str(&text, "x.toml").unwrap_err() {
            HarnessError::Config { line, message, .. } => {
                assert_eq!(line, 10);
                assert!(message.contains("n_pulse"));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn overrides_reach_core_types() {
        let text = format!(
            "{MINIMAL}\n[noise]\npreset = \"standard\"\nn_trajectories = 7\nposition_sigma_um = 0.0\n\n[spam]\npreset = \"perfect\"\n[spam.b]\nd_g = 0.9\n\n[chain.c6]\nab = 1.0e6\n"
        );
        let c = LoadedConfig::from_str(&text, "x.toml").unwrap();
        let n = c.noise();
        assert_eq!(n.n_trajectories, 7);
        assert_eq!(n.position_sigma, 0.0);
        assert!(n.dephasing_rate[0] > 0.0);
        assert_eq!(c.config.spam.params().b.d_g, 0.9);
        assert_eq!(c.config.spam.params().a, SpeciesSpam::PERFECT);
        assert_eq!(c.c6().ab, 1.0e6);
    }

    #[test]
    fn detuning_error_in_nnn_units() {
        let text = MINIMAL.replace("n_pulses = 6", "n_pulses = 6\ndetuning_error_nnn = -1.0");
        let c = LoadedConfig::from_str(&text, "x.toml").unwrap();
        let chain = c.chain().unwrap();
        let o = c.pxp_options(&chain, std::f64::consts::PI);
        assert!((o.detuning_error[0] + 0.3).abs() < 1e-9);
        assert!((o.detuning_error[1] + 0.2).abs() < 1e-9);
    }

    #[test]
    fn key_lines() {
        let text = "a = 1\n[x]\nb = 2\n[y.z]\nc = 3\n";
        assert_eq!(key_line(text, "a"), 1);
        assert_eq!(key_line(text, "x.b"), 3);
        assert_eq!(key_line(text, "y.z.c"), 5);
        assert_eq!(key_line(text, "y.z"), 4);
        assert_eq!(key_line(text, "x.missing"), 2);
        assert_eq!(key_line(text, "nothing"), 1);
    }
}
