//! Domain-wall quasiparticles of the PXP vacuum orbit, detected on
//! readout bitstrings with the 4-site windows `0001`, `1000`, `1001` and
//! the edge windows `001` (left) and `100` (right).

use crate::error::invalid;
use crate::fit::{fit_damped_classical, DampedFit};
use crate::lattice::Species;
use crate::prelude::*;
use crate::statevec::{label_to_bits, QuantumState, ShotEnsemble};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuasiparticleRecord {
    pub shot_index: usize,
    /// Detector positions `j ∈ 1..L` that fired, increasing.
    pub positions: Vec<usize>,
}

impl QuasiparticleRecord {
    pub fn count(&self) -> usize {
        self.positions.len()
    }
}

#[inline]
fn p(b: &[u8], k: usize) -> bool {
    b[k] == 0
}

#[inline]
fn n(b: &[u8], k: usize) -> bool {
    b[k] != 0
}

/// Value of the density operator `q_j` on a bitstring of length `L ≥ 4`,
/// `1 ≤ j ≤ L−1`.
pub fn q_density(bits: &[u8], j: usize) -> bool {
    let l = bits.len();
    if j == 1 {
        p(bits, 0) && p(bits, 1) && n(bits, 2)
    } else if j == l - 1 {
        n(bits, l - 3) && p(bits, l - 2) && p(bits, l - 1)
    } else {
        let core = p(bits, j - 1) && p(bits, j);
        core && ((p(bits, j - 2) && n(bits, j + 1)) || (n(bits, j - 2) && p(bits, j + 1)) || (n(bits, j - 2) && n(bits, j + 1)))
    }
}

/// Fired detectors of one bitstring.
pub fn detect(bits: &[u8]) -> Result<QuasiparticleRecord> {
    detect_indexed(bits, 0)
}

fn detect_indexed(bits: &[u8], shot_index: usize) -> Result<QuasiparticleRecord> {
    if bits.len() < 4 {
        return Err(invalid(format!("quasiparticle detection needs L ≥ 4, got {}", bits.len())));
    }
    let positions = (1..bits.len()).filter(|&j| q_density(bits, j)).collect();
    Ok(QuasiparticleRecord { shot_index, positions })
}

/// Records for every shot of an ensemble.
pub fn detect_ensemble(ensemble: &ShotEnsemble) -> Result<Vec<QuasiparticleRecord>> {
    ensemble
        .bitstrings
        .iter()
        .enumerate()
        .map(|(i, b)| detect_indexed(b, i))
        .collect()
}

/// One row of a conditioned position histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramStep {
    pub step: usize,
    /// Counts per detector position, indexed by `j` (entry 0 unused).
    /// `None` when no shot had the requested quasiparticle number.
    pub counts: Option<Vec<u64>>,
    pub n_conditioned: usize,
}

impl HistogramStep {
    /// Normalized distribution over positions.
    pub fn normalized(&self) -> Option<Vec<f64>> {
        let counts = self.counts.as_ref()?;
        let total: u64 = counts.iter().sum();
        Some(counts.iter().map(|&c| c as f64 / total as f64).collect())
    }

    /// Position(s) with the largest count.
    pub fn peaks(&self) -> Vec<usize> {
        let Some(counts) = &self.counts else { return vec![] };
        let max = counts.iter().copied().max().unwrap_or(0);
        if max == 0 {
            return vec![];
        }
        (0..counts.len()).filter(|&j| counts[j] == max).collect()
    }
}

/// Histogram of detector positions over shots with exactly `k`
/// quasiparticles, one entry per time step. Other shots are discarded.
pub fn position_histogram(ensembles: &[ShotEnsemble], k: usize) -> Result<Vec<HistogramStep>> {
    ensembles
        .iter()
        .enumerate()
        .map(|(idx, ens)| {
            let step = ens.meta.step.unwrap_or(idx);
            let l = ens.n_sites();
            let mut counts = vec![0u64; l];
            let mut n_conditioned = 0;
            for rec in detect_ensemble(ens)? {
                if rec.count() == k {
                    n_conditioned += 1;
                    for j in rec.positions {
                        counts[j] += 1;
                    }
                }
            }
            let counts = (n_conditioned > 0).then_some(counts);
            Ok(HistogramStep { step, counts, n_conditioned })
        })
        .collect()
}

/// Species-averaged Rydberg populations differenced, `⟨n⟩_A − ⟨n⟩_B`.
pub fn staggered_from_populations(pattern: &[Species], pops: &[f64]) -> Result<f64> {
    let mean = |s: Species| -> Result<f64> {
        let v: Vec<f64> = pattern.iter().zip(pops).filter(|(p, _)| **p == s).map(|(_, x)| *x).collect();
        if v.is_empty() {
            return Err(invalid(format!("chain has no {s} sites")));
        }
        Ok(v.iter().sum::<f64>() / v.len() as f64)
    };
    Ok(mean(Species::A)? - mean(Species::B)?)
}

pub fn staggered_magnetization(state: &QuantumState) -> Result<f64> {
    staggered_from_populations(state.chain().pattern(), &state.populations())
}

pub fn staggered_magnetization_shots(ensemble: &ShotEnsemble, pattern: &[Species]) -> Result<f64> {
    let means: Vec<f64> = ensemble.site_means().iter().map(|m| m.0).collect();
    staggered_from_populations(pattern, &means)
}

/// Damped-classical fit of a magnetisation trace indexed by pulse count.
pub fn fit_magnetization_decay(m: &[f64]) -> Result<DampedFit> {
    let classical: Vec<f64> = (0..m.len()).map(crate::fit::classical_magnetization).collect();
    fit_damped_classical(m, &classical)
}

/// Exact `⟨Q⟩` of a two-level state (no sampling).
pub fn mean_q_exact(state: &QuantumState) -> Result<f64> {
    let n = state.n_sites();
    let dist = state.outcome_distribution()?;
    let mut total = 0.0;
    for (label, pr) in dist.iter().enumerate() {
        if *pr > 0.0 {
            total += pr * detect(&label_to_bits(label, n))?.count() as f64;
        }
    }
    Ok(total)
}

/// Mean quasiparticle number and its standard error for one ensemble.
pub fn mean_q(ensemble: &ShotEnsemble) -> Result<(f64, f64)> {
    let qs: Vec<f64> = detect_ensemble(ensemble)?.iter().map(|r| r.count() as f64).collect();
    if qs.is_empty() {
        return Err(invalid("empty ensemble"));
    }
    let n = qs.len() as f64;
    let mean = qs.iter().sum::<f64>() / n;
    let var = if qs.len() > 1 { qs.iter().map(|q| (q - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    Ok((mean, (var / n).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthPoint {
    pub pulses: usize,
    pub mean_q: f64,
    pub stderr: f64,
}

/// Mean `Q` per pulse count (`ensembles[k]` measured after `k` pulses
/// unless `meta.step` says otherwise). Pulse counts divisible by three are
/// dropped when `omit_mod3` is set.
pub fn quasiparticle_growth(ensembles: &[ShotEnsemble], omit_mod3: bool) -> Result<Vec<GrowthPoint>> {
    let mut out = Vec::new();
    for (idx, ens) in ensembles.iter().enumerate() {
        let pulses = ens.meta.step.unwrap_or(idx);
        if omit_mod3 && pulses % 3 == 0 {
            continue;
        }
        let (mean_q, stderr) = mean_q(ens)?;
        out.push(GrowthPoint { pulses, mean_q, stderr });
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
