//! Stand-alone operations on shot files.

use std::path::Path;

use rydqca_core::quasiparticle::{detect_ensemble, position_histogram};
use rydqca_core::spam::{correct, correct_marginal, marginal};
use rydqca_core::ChainSpec;
use serde::Deserialize;

use crate::config::{line_of_offset, SpamBlock};
use crate::error::{format_err, io_err, HarnessError, Result};
use crate::io::{f, read_shots, ShotFile, Table};

/// Largest register whose joint distribution is corrected as a whole.
const JOINT_LIMIT: usize = 16;

/// Parameter file for `spam-correct`: a `[spam]` table as in experiment
/// configs, optionally with the species pattern of the register.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpamParamsFile {
    #[serde(default)]
    pub spam: SpamBlock,
    pub pattern: Option<String>,
}

impl SpamParamsFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        toml::from_str(&text).map_err(|e| {
            let line = e.span().map(|s| line_of_offset(&text, s.start)).unwrap_or(1);
            HarnessError::Config { path: path.display().to_string(), line, message: e.message().trim().to_string() }
        })
    }
}

fn chain_for(file: &ShotFile, pattern: Option<&str>, path: &Path) -> Result<ChainSpec> {
    let p = pattern
        .or(file.pattern.as_deref())
        .ok_or_else(|| format_err(path, "no species pattern in the shot file; pass one explicitly"))?;
    if p.len() != file.ensemble.n_sites() {
        return Err(HarnessError::InvalidArgument(format!(
            "pattern {p} has {} sites, shots have {}",
            p.len(),
            file.ensemble.n_sites()
        )));
    }
    Ok(ChainSpec::from_pattern_str(p, rydqca_core::lattice::DEFAULT_SPACING_UM, rydqca_core::lattice::C6Table::standard())?)
}

/// Per-site raw and SPAM-corrected excitation probabilities.
pub fn spam_correct(shots: &Path, params: &SpamParamsFile, pattern: Option<&str>) -> Result<Table> {
    let file = read_shots(shots)?;
    let chain = chain_for(&file, pattern.or(params.pattern.as_deref()), shots)?;
    let p = params.spam.params();
    let e = &file.ensemble;
    let n = e.n_sites();
    let raw = e.site_means();
    let joint = if n <= JOINT_LIMIT { Some(correct(&e.distribution()?, &chain, &p)?) } else { None };
    let mut t = Table::new(&["site", "species", "raw_p1", "raw_stderr", "corrected_p1", "joint_corrected_p1"]);
    for s in 0..n {
        let m = raw[s].0;
        let local = correct_marginal(&[1.0 - m, m], &chain, &[s], &p)?[1];
        let j = joint.as_ref().map_or(String::new(), |c| f(marginal(&c.dist, n, &[s])[1]));
        t.push(vec![s.to_string(), chain.species(s).to_string(), f(m), f(raw[s].1), f(local), j]);
    }
    Ok(t)
}

/// Per-shot quasiparticle number and detector positions.
pub fn detect_qp(shots: &Path) -> Result<Table> {
    let file = read_shots(shots)?;
    let mut t = Table::new(&["shot", "q", "positions"]);
    for r in detect_ensemble(&file.ensemble)? {
        let pos = r.positions.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(";");
        t.push(vec![r.shot_index.to_string(), r.count().to_string(), pos]);
    }
    Ok(t)
}

/// Position histogram over shots with exactly `q` quasiparticles.
pub fn qp_histogram(shots: &Path, q: usize) -> Result<Table> {
    let file = read_shots(shots)?;
    let h = position_histogram(std::slice::from_ref(&file.ensemble), q)?;
    let mut t = Table::new(&["position", "count", "n_conditioned"]);
    if let Some(step) = h.first() {
        if let Some(counts) = &step.counts {
            for (j, c) in counts.iter().enumerate().skip(1) {
                t.push(vec![j.to_string(), c.to_string(), step.n_conditioned.to_string()]);
            }
        }
    }
    Ok(t)
}
