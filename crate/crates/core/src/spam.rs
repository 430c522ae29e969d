//! Tensor-product SPAM model: one column-stochastic 2×2 map per species,
//! assembled along the chain, applied forward or inverted site by site.
//!
//! Matrices are indexed `[measured][true]`; index 1 means a `'1'` outcome
//! (Rydberg, i.e. atom absent at readout).

use crate::error::invalid;
use crate::lattice::{ChainSpec, Species};
use crate::prelude::*;
use crate::statevec::ShotEnsemble;

pub type Map2 = [[f64; 2]; 2];

/// Per-species calibration parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeciesSpam {
    /// Optical pumping fidelity η.
    pub eta: f64,
    /// Imaging false-positive rate.
    pub f_p: f64,
    /// Imaging false-negative rate.
    pub f_n: f64,
    /// Imaging survival probability `F` (also written S).
    pub survival: f64,
    /// Ground-state detection fidelity.
    pub d_g: f64,
    /// Rydberg-state detection fidelity.
    pub d_r: f64,
}

impl SpeciesSpam {
    pub const PERFECT: SpeciesSpam = SpeciesSpam { eta: 1.0, f_p: 0.0, f_n: 0.0, survival: 1.0, d_g: 1.0, d_r: 1.0 };

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eta", self.eta),
            ("f_p", self.f_p),
            ("f_n", self.f_n),
            ("survival", self.survival),
            ("d_g", self.d_g),
            ("d_r", self.d_r),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(format!("SPAM parameter {name} = {v} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Probability of reading `'1'` for a true `|0⟩` (e₀) and `'0'` for a
    /// true `|1⟩` (e₁).
    pub fn assignment_errors(&self) -> (f64, f64) {
        let e0 = self.d_g * self.f_n + (1.0 - self.d_g) * (1.0 - self.f_p);
        let e1 = self.d_r * self.f_p + (1.0 - self.d_r) * (1.0 - self.f_n);
        (e0, e1)
    }

    /// The single-atom map `A`.
    pub fn map(&self) -> Result<Map2> {
        self.validate()?;
        let (e0, e1) = self.assignment_errors();
        let (f, eta) = (self.survival, self.eta);
        let good = f * eta;
        let unpumped = f * (1.0 - eta);
        let lost = 1.0 - f;
        Ok([
            [good * (1.0 - e0) + unpumped * (1.0 - e0) + lost * e1, good * e1 + unpumped * (1.0 - e0) + lost * e1],
            [good * e0 + unpumped * e0 + lost * (1.0 - e1), good * (1.0 - e1) + unpumped * e0 + lost * (1.0 - e1)],
        ])
    }
}

/// Species A is the rubidium-like species, B the caesium-like one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpamParams {
    pub a: SpeciesSpam,
    pub b: SpeciesSpam,
}

impl SpamParams {
    pub fn perfect() -> Self {
        SpamParams { a: SpeciesSpam::PERFECT, b: SpeciesSpam::PERFECT }
    }

    /// Corrected calibration values (Rb → A, Cs → B).
    pub fn calibrated() -> Self {
        SpamParams {
            a: SpeciesSpam { eta: 0.9943, f_p: 0.0047, f_n: 0.0058, survival: 0.994, d_g: 0.978, d_r: 0.94 },
            b: SpeciesSpam { eta: 0.9903, f_p: 0.0063, f_n: 0.0076, survival: 0.979, d_g: 0.986, d_r: 1.00 },
        }
    }

    /// Uncorrected calibration values as measured.
    pub fn raw_calibration() -> Self {
        SpamParams {
            a: SpeciesSpam { eta: 0.9943, f_p: 0.0047, f_n: 0.0058, survival: 0.987, d_g: 0.966, d_r: 0.94 },
            b: SpeciesSpam { eta: 0.9903, f_p: 0.0063, f_n: 0.0076, survival: 0.972, d_g: 0.959, d_r: 0.99 },
        }
    }

    pub fn species(&self, s: Species) -> &SpeciesSpam {
        match s {
            Species::A => &self.a,
            Species::B => &self.b,
        }
    }
}

pub fn single_atom_map(params: &SpamParams, species: Species) -> Result<Map2> {
    params.species(species).map()
}

fn invert(m: &Map2, species: Species) -> Result<Map2> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det.abs() < 1e-12 {
        return Err(Error::NonInvertibleModel(species.to_string()));
    }
    Ok([[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]])
}

fn check_normalized(dist: &[f64], n_sites: usize) -> Result<()> {
    if dist.len() != 1usize << n_sites {
        return Err(invalid(format!("distribution of length {} for {n_sites} sites", dist.len())));
    }
    let total: f64 = dist.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(invalid(format!("distribution sums to {total}")));
    }
    Ok(())
}

/// Contract `maps[k]` into axis `k` of a `2^n` vector (site 0 most
/// significant).
fn apply_local(dist: &[f64], maps: &[Map2]) -> Vec<f64> {
    let n = maps.len();
    let mut v = dist.to_vec();
    for (k, m) in maps.iter().enumerate() {
        let stride = 1usize << (n - 1 - k);
        for base in (0..v.len()).step_by(2 * stride) {
            for off in 0..stride {
                let i0 = base + off;
                let i1 = i0 + stride;
                let (x0, x1) = (v[i0], v[i1]);
                v[i0] = m[0][0] * x0 + m[0][1] * x1;
                v[i1] = m[1][0] * x0 + m[1][1] * x1;
            }
        }
    }
    v
}

fn site_maps(species: impl Iterator<Item = Species>, params: &SpamParams) -> Result<Vec<Map2>> {
    species.map(|s| single_atom_map(params, s)).collect()
}

/// `p = M P` with `M = ⊗_k A_{species(k)}`.
pub fn forward(true_dist: &[f64], chain: &ChainSpec, params: &SpamParams) -> Result<Vec<f64>> {
    check_normalized(true_dist, chain.n_sites())?;
    let maps = site_maps(chain.pattern().iter().copied(), params)?;
    Ok(apply_local(true_dist, &maps))
}

/// Output of [`correct`].
#[derive(Debug, Clone, PartialEq)]
pub struct Corrected {
    pub dist: Vec<f64>,
    /// Total negative probability removed before renormalizing.
    pub clipped_mass: f64,
}

/// `M⁻¹ p` without any clipping.
pub fn correct_unclipped(measured: &[f64], chain: &ChainSpec, params: &SpamParams) -> Result<Vec<f64>> {
    check_normalized(measured, chain.n_sites())?;
    let inverses = chain
        .pattern()
        .iter()
        .map(|&s| invert(&single_atom_map(params, s)?, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(apply_local(measured, &inverses))
}

/// Local inversion, then negative entries clipped to zero and the result
/// renormalized.
pub fn correct(measured: &[f64], chain: &ChainSpec, params: &SpamParams) -> Result<Corrected> {
    let mut dist = correct_unclipped(measured, chain, params)?;
    let mut clipped_mass = 0.0;
    for p in &mut dist {
        if *p < 0.0 {
            clipped_mass -= *p;
            *p = 0.0;
        }
    }
    let total: f64 = dist.iter().sum();
    if total > 0.0 {
        dist.iter_mut().for_each(|p| *p /= total);
    }
    Ok(Corrected { dist, clipped_mass })
}

pub fn correct_ensemble(ensemble: &ShotEnsemble, chain: &ChainSpec, params: &SpamParams) -> Result<Corrected> {
    correct(&ensemble.distribution()?, chain, params)
}

/// Marginal distribution of `sites` (in the given order) from a full
/// distribution over `n` sites.
pub fn marginal(dist: &[f64], n: usize, sites: &[usize]) -> Vec<f64> {
    let k = sites.len();
    let mut out = vec![0.0; 1 << k];
    for (label, p) in dist.iter().enumerate() {
        let sub = sites
            .iter()
            .fold(0usize, |acc, &s| (acc << 1) | ((label >> (n - 1 - s)) & 1));
        out[sub] += p;
    }
    out
}

/// Corrected marginal on `sites` using only their local maps; exact for a
/// tensor-product model and independent of the system size.
pub fn correct_marginal(
    measured_marginal: &[f64],
    chain: &ChainSpec,
    sites: &[usize],
    params: &SpamParams,
) -> Result<Vec<f64>> {
    check_normalized(measured_marginal, sites.len())?;
    let inverses = sites
        .iter()
        .map(|&s| {
            let sp = chain.species(s);
            invert(&single_atom_map(params, sp)?, sp)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(apply_local(measured_marginal, &inverses))
}

/// SPAM-corrected `⟨∏_{k∈sites} Z_k⟩` directly from shots.
pub fn corrected_z_product(
    ensemble: &ShotEnsemble,
    chain: &ChainSpec,
    sites: &[usize],
    params: &SpamParams,
) -> Result<f64> {
    if ensemble.is_empty() {
        return Err(invalid("empty ensemble"));
    }
    let mut counts = vec![0.0; 1 << sites.len()];
    for b in &ensemble.bitstrings {
        let sub = sites.iter().fold(0usize, |acc, &s| (acc << 1) | b[s] as usize);
        counts[sub] += 1.0;
    }
    let total = ensemble.len() as f64;
    counts.iter_mut().for_each(|c| *c /= total);
    let corrected = correct_marginal(&counts, chain, sites, params)?;
    Ok(z_product_of(&corrected))
}

/// `Σ_x P(x) (−1)^{popcount(x)}`.
pub fn z_product_of(dist: &[f64]) -> f64 {
    dist.iter()
        .enumerate()
        .map(|(x, p)| if x.count_ones() % 2 == 0 { *p } else { -*p })
        .sum()
}

/// Corrected parameters recovered from raw calibration numbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenestedSpam {
    pub survival: f64,
    pub d_g: f64,
    pub d_r: f64,
    /// Rydberg detection before clipping into `[0, 1]`.
    pub d_r_unclipped: f64,
}

/// Remove nested error contributions from raw calibration numbers, in the
/// order discrimination → survival → pumping → detection:
///
/// - survival: a raw survival `S_raw` is `F_p + S (1 − F_n − F_p)`;
/// - ground detection: the raw drop-and-recapture value is the map entry
///   `A[0][0]` (pumping cancels there);
/// - Rydberg detection: the raw value is `A[1][1]`.
///
/// The two detection equations are coupled through `e₀`/`e₁` and solved
/// by fixed-point iteration.
pub fn denest_raw(raw: &SpeciesSpam) -> Result<DenestedSpam> {
    raw.validate()?;
    let disc = 1.0 - raw.f_n - raw.f_p;
    if disc <= 0.0 {
        return Err(invalid("discrimination errors leave no signal"));
    }
    let survival = ((raw.survival - raw.f_p) / disc).clamp(0.0, 1.0);
    let f = survival;
    let eta = raw.eta;
    let mut d_g = raw.d_g;
    let mut d_r = raw.d_r;
    let mut d_r_unclipped = d_r;
    for _ in 0..200 {
        let e1 = d_r * raw.f_p + (1.0 - d_r) * (1.0 - raw.f_n);
        // F (F_p + D_g disc) + (1 − F) e₁ = raw d_g
        let new_g = ((raw.d_g - (1.0 - f) * e1) / f - raw.f_p) / disc;
        let new_g = new_g.clamp(0.0, 1.0);
        let e0 = new_g * raw.f_n + (1.0 - new_g) * (1.0 - raw.f_p);
        // F η (1 − e₁) + F (1 − η) e₀ + (1 − F)(1 − e₁) = raw d_r, with
        // 1 − e₁ = F_n + D_r disc.
        let lin = f * eta + (1.0 - f);
        let unclipped = ((raw.d_r - f * (1.0 - eta) * e0) / lin - raw.f_n) / disc;
        let new_r = unclipped.clamp(0.0, 1.0);
        let done = (new_g - d_g).abs() < 1e-15 && (new_r - d_r).abs() < 1e-15;
        d_g = new_g;
        d_r = new_r;
        d_r_unclipped = unclipped;
        if done {
            break;
        }
    }
    Ok(DenestedSpam { survival, d_g, d_r, d_r_unclipped })
}
