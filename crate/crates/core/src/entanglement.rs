//! Fidelity estimators for GHZ, Bell and cluster/graph states, built on
//! rotated-readout parity sweeps.

use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, TAU};

use crate::error::invalid;
use crate::fit::{fit_cosine, fit_form, fit_r_curve, FitForm, FormFit};
use crate::lattice::Species;
use crate::prelude::*;
use crate::statevec::{PauliFactor, PauliString, QuantumState, ShotEnsemble};

/// Parity (or `r(ϑ)`) values against readout phase.
#[derive(Debug, Clone, PartialEq)]
pub struct ParitySweep {
    pub angles: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_qubits: usize,
}

impl ParitySweep {
    pub fn new(angles: Vec<f64>, values: Vec<f64>, n_qubits: usize) -> Result<Self> {
        if angles.len() != values.len() {
            return Err(invalid("angles and values differ in length"));
        }
        let stderr = vec![0.0; values.len()];
        Ok(ParitySweep { angles, values, stderr, n_qubits })
    }

    fn covers(&self, span: f64) -> bool {
        let mut a: Vec<f64> = self.angles.iter().map(|&x| rem_euclid(x, TAU)).collect();
        a.sort_by(f64::total_cmp);
        a.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
        if a.len() < 2 {
            return false;
        }
        // Largest gap on the circle must leave an arc of at least `span`.
        let mut gap = a[0] + TAU - a[a.len() - 1];
        for w in a.windows(2) {
            gap = gap.max(w[1] - w[0]);
        }
        TAU - gap + 1e-9 >= span.min(TAU) * (1.0 - 1.0 / a.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityReport {
    /// Population term (Q for GHZ, P = ⟨ZZ⟩ for Bell).
    pub population_term: f64,
    /// Coherence term (max parity for GHZ, max W for Bell).
    pub coherence_term: f64,
    pub fidelity: f64,
    /// Fidelity before clipping into `[0, 1]`.
    pub fidelity_unclipped: f64,
    pub clipped: bool,
    pub postselected_fraction: Option<f64>,
    pub spam_corrected: bool,
    pub lower_bound: bool,
    pub warnings: Vec<String>,
}

impl FidelityReport {
    fn new(population_term: f64, coherence_term: f64, fidelity: f64) -> Self {
        let clamped = fidelity.clamp(0.0, 1.0);
        FidelityReport {
            population_term,
            coherence_term,
            fidelity: clamped,
            fidelity_unclipped: fidelity,
            clipped: clamped != fidelity,
            postselected_fraction: None,
            spam_corrected: false,
            lower_bound: true,
            warnings: Vec::new(),
        }
    }
}

/// `Q = p(b) + p(b̄)` on `sites`, where `pattern` is one branch of the GHZ
/// state (`0…0` when `None`).
pub fn ghz_population_term(shots: &ShotEnsemble, sites: &[usize], pattern: Option<&[u8]>) -> Result<f64> {
    if shots.is_empty() {
        return Err(invalid("empty population ensemble"));
    }
    let zeros = vec![0u8; sites.len()];
    let pat = pattern.unwrap_or(&zeros);
    if pat.len() != sites.len() {
        return Err(invalid("branch pattern length differs from site count"));
    }
    let hits = shots
        .bitstrings
        .iter()
        .filter(|b| {
            let same = sites.iter().zip(pat).all(|(&s, &p)| b[s] == p);
            let flipped = sites.iter().zip(pat).all(|(&s, &p)| b[s] != p);
            same || flipped
        })
        .count();
    Ok(hits as f64 / shots.len() as f64)
}

/// `max_φ B(φ)` from a cosine fit with the period fixed to `2π/N`.
pub fn ghz_parity_max(sweep: &ParitySweep) -> Result<f64> {
    let n = sweep.n_qubits;
    if n == 0 {
        return Err(invalid("sweep over zero qubits"));
    }
    if sweep.angles.len() < 8 || !sweep.covers(TAU / n as f64) {
        return Err(invalid("parity sweep must cover one period 2π/N with at least 8 points"));
    }
    Ok(fit_cosine(&sweep.angles, &sweep.values, n as f64)?.maximum())
}

/// `F ≥ Q − 1/2 + max_φ B(φ)/2`.
pub fn ghz_fidelity_from(q: f64, sweep: &ParitySweep) -> Result<FidelityReport> {
    let b = ghz_parity_max(sweep)?;
    Ok(FidelityReport::new(q, b, q - 0.5 + 0.5 * b))
}

pub fn ghz_fidelity(
    population_shots: &ShotEnsemble,
    sites: &[usize],
    sweep: &ParitySweep,
) -> Result<FidelityReport> {
    ghz_fidelity_from(ghz_population_term(population_shots, sites, None)?, sweep)
}

/// Per-step inputs for the dual-species bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GhzStepData {
    pub q: f64,
    /// Fitted parity maximum, when a parity sweep was possible.
    pub parity_max: Option<f64>,
}

/// Lower bound at `t0` using the best parity of any later step.
pub fn ghz_dual_species_bound(steps: &[GhzStepData], t0: usize) -> Result<FidelityReport> {
    if t0 >= steps.len() {
        return Err(invalid(format!("step {t0} out of range")));
    }
    if t0 + 1 == steps.len() {
        return Err(Error::NoLaterData(t0));
    }
    let later: Vec<f64> = steps[t0 + 1..].iter().filter_map(|s| s.parity_max).collect();
    if later.is_empty() {
        return Err(Error::NoLaterData(t0));
    }
    let b = later.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let q = steps[t0].q;
    Ok(FidelityReport::new(q, b, q - 0.5 + 0.5 * b))
}

/// `max_φ |⟨GHZ_b(φ)|ψ⟩|²` over the branch pair `(b, b̄)` on `sites`, with
/// all other sites traced out (brute force over a fine φ grid plus the
/// analytic optimum).
pub fn ghz_overlap_exact(state: &QuantumState, sites: &[usize], pattern: &[u8]) -> Result<f64> {
    if !state.is_two_level() {
        return Err(Error::UnsupportedRepresentation("GHZ overlap on two-level states only".into()));
    }
    let n = state.n_sites();
    let amps = state.amplitudes();
    // Reduced coherence between the two branches: ρ_bb, ρ_b̄b̄, ρ_b̄b.
    let mut rho_bb = 0.0;
    let mut rho_cc = 0.0;
    let mut rho_cb = C64::new(0.0, 0.0);
    let mut mask = 0usize;
    let mut bits_b = 0usize;
    for (&s, &p) in sites.iter().zip(pattern) {
        let bit = 1usize << (n - 1 - s);
        mask |= bit;
        if p != 0 {
            bits_b |= bit;
        }
    }
    let bits_c = mask & !bits_b;
    for (idx, a) in amps.iter().enumerate() {
        let sub = idx & mask;
        if sub == bits_b {
            rho_bb += a.norm_sqr();
            let partner = (idx & !mask) | bits_c;
            rho_cb += amps[partner] * a.conj();
        } else if sub == bits_c {
            rho_cc += a.norm_sqr();
        }
    }
    // ⟨GHZ(φ)|ρ|GHZ(φ)⟩ = (ρ_bb + ρ_cc)/2 + Re(e^{-iφ} ρ_cb), maximal at |ρ_cb|.
    Ok(0.5 * (rho_bb + rho_cc) + rho_cb.norm())
}

/// Bell fidelity `F_C = (1 − P)/4 + max_ϑ W(ϑ)` from a fitted `r(ϑ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BellReport {
    pub report: FidelityReport,
    pub a: f64,
    pub b: f64,
    pub theta_star: f64,
    pub fit_rss: f64,
}

/// Residual threshold per point above which the `r(ϑ)` fit is flagged.
pub const R_FIT_RSS_WARN: f64 = 1e-3;

pub fn bell_fidelity_from(p: f64, sweep: &ParitySweep) -> Result<BellReport> {
    if sweep.angles.len() < 12 || !sweep.covers(TAU) {
        return Err(invalid("r(ϑ) sweep needs at least 12 angles spanning [0, 2π)"));
    }
    let fit = fit_r_curve(&sweep.angles, &sweep.values)?;
    let (w, _) = fit.max_w();
    let mut report = FidelityReport::new(p, w, (1.0 - p) / 4.0 + w);
    report.lower_bound = false;
    if fit.rss / sweep.angles.len() as f64 > R_FIT_RSS_WARN {
        report.warnings.push(format!("r(ϑ) fit residual {:.3e} above threshold", fit.rss));
    }
    Ok(BellReport { report, a: fit.a, b: fit.b, theta_star: fit.theta_star, fit_rss: fit.rss })
}

pub fn bell_fidelity(population_shots: &ShotEnsemble, sites: [usize; 2], r_sweep: &ParitySweep) -> Result<BellReport> {
    let (p, _) = population_shots.parity(&sites);
    bell_fidelity_from(p, r_sweep)
}

/// `max_ϑ W(ϑ)` evaluated directly on a uniform sweep whose length is a
/// multiple of 4 (no fit).
pub fn max_w_direct(sweep: &ParitySweep) -> Result<f64> {
    let m = sweep.values.len();
    if m == 0 || m % 4 != 0 {
        return Err(invalid("direct W evaluation needs a uniform grid with 4k points"));
    }
    let q = m / 4;
    Ok((0..m)
        .map(|i| {
            let r = |k: usize| sweep.values[(i + k) % m];
            (r(0) + r(q) + r(3 * q) - r(2 * q)) / 4.0
        })
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Which data-qubit parity class is rotated before readout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadoutClass {
    Even,
    Odd,
}

impl ReadoutClass {
    pub fn of(index: usize) -> Self {
        if index % 2 == 0 {
            ReadoutClass::Even
        } else {
            ReadoutClass::Odd
        }
    }
}

/// Shots taken after rotating one class of data atoms for phase `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotatedEnsemble {
    pub class: ReadoutClass,
    pub alpha: f64,
    pub shots: ShotEnsemble,
}

/// Apply the rotated readout: `π/2` about `α − π/2` on the data atoms of
/// `class` (the other class is light-shifted away).
pub fn apply_rotated_readout(
    state: &mut QuantumState,
    data_species: Species,
    data_sites: &[usize],
    class: ReadoutClass,
    alpha: f64,
) -> Result<()> {
    let mask: Vec<usize> = data_sites
        .iter()
        .enumerate()
        .filter(|(i, _)| ReadoutClass::of(*i) != class)
        .map(|(_, &s)| s)
        .collect();
    state.apply_product_rotation(data_species, FRAC_PI_2, alpha - FRAC_PI_2, &mask)
}

/// Exact `⟨∏ Z⟩` on `sites`.
pub fn exact_z_parity(state: &QuantumState, sites: &[usize]) -> Result<f64> {
    let terms: Vec<(usize, PauliFactor)> = sites.iter().map(|&s| (s, PauliFactor::Z)).collect();
    state.expect(&PauliString::from_sparse(state.n_sites(), &terms))
}

/// Value of a cluster stabilizer `S_i` extracted from an α sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilizerValue {
    pub index: usize,
    /// Fitted peak amplitude `|A|`.
    pub amplitude: f64,
    pub offset: f64,
    /// α at which the fitted curve peaks.
    pub phase: f64,
}

/// Sites `(i−1, i, i+1)` clipped to the chain, as data indices.
fn stabilizer_support(i: usize, n: usize) -> Vec<usize> {
    (i.saturating_sub(1)..=(i + 1).min(n - 1)).collect()
}

/// `⟨Z_{i−1} R_i(α) Z_{i+1}⟩` fitted with `A cos(α − α₀) + C` for every
/// data index `i`, using the ensembles in which index `i` was rotated.
pub fn stabilizer_scan(ensembles: &[RotatedEnsemble], data_sites: &[usize]) -> Result<Vec<StabilizerValue>> {
    let n = data_sites.len();
    if n < 2 {
        return Err(invalid("need at least two data atoms"));
    }
    (0..n)
        .map(|i| {
            let class = ReadoutClass::of(i);
            let chosen: Vec<&RotatedEnsemble> = ensembles.iter().filter(|e| e.class == class).collect();
            if chosen.len() < 8 {
                return Err(invalid(format!(
                    "site {i} needs ≥ 8 {class:?}-rotated ensembles, found {}",
                    chosen.len()
                )));
            }
            let sites: Vec<usize> = stabilizer_support(i, n).iter().map(|&k| data_sites[k]).collect();
            let alphas: Vec<f64> = chosen.iter().map(|e| e.alpha).collect();
            let values: Vec<f64> = chosen.iter().map(|e| e.shots.parity(&sites).0).collect();
            let fit = fit_cosine(&alphas, &values, 1.0)?;
            Ok(StabilizerValue { index: i, amplitude: fit.amplitude, offset: fit.offset, phase: fit.phase })
        })
        .collect()
}

/// A cut between data indices `k` and `k+1` is certified entangled when the
/// stabilizers on both sides exceed 1/2.
pub fn entangled_cuts(values: &[StabilizerValue]) -> Vec<bool> {
    values.windows(2).map(|w| w[0].amplitude > 0.5 && w[1].amplitude > 0.5).collect()
}

/// Operators and fit forms with non-zero expectation at each step of the
/// five-atom graph automaton, with their ideal maxima.
pub fn graph_operator_table(step: usize) -> Option<Vec<(&'static str, FitForm, f64)>> {
    use FitForm::*;
    let s3 = 3f64.sqrt();
    let small = 2.0 / (3.0 * s3);
    let rows: Vec<(&'static str, FitForm, f64)> = match step {
        0 => ["IIIIZ", "IIIZI", "IIZII", "IZIII", "ZIIII", "IIZIZ", "IZIZI", "ZIIIZ", "ZIZII", "ZIZIZ"]
            .into_iter()
            .map(|l| (l, Constant, 1.0))
            .collect(),
        1 => vec![
            ("IIIZR", Cos, 1.0),
            ("RZIII", Cos, 1.0),
            ("IIZRZ", Cos, 1.0),
            ("IZRZI", Cos, 1.0),
            ("ZRZII", Cos, 1.0),
            ("RZIZR", Cos2, 1.0),
            ("IZRIR", Cos2, 0.5),
            ("RIRZI", Cos2, 0.5),
            ("RIRIR", Cos2Sin, small),
        ],
        2 => vec![
            ("IIZRI", Cos, 1.0),
            ("IRZII", Cos, 1.0),
            ("IRIRI", Cos2, 1.0),
            ("RIIIR", Cos2, 1.0),
            ("IZRZR", Cos2, 1.0),
            ("RZRZI", Cos2, 1.0),
            ("RZRZR", Cos3, 1.0),
        ],
        3 => vec![
            ("IZIZI", Constant, 1.0),
            ("ZIIIZ", Constant, 1.0),
            ("IIRZI", Cos, 1.0),
            ("IZRII", Cos, 1.0),
            ("RIIZR", Cos2, 1.0),
            ("RZIIR", Cos2, 1.0),
            ("IRZRZ", Cos2, 1.0),
            ("ZRZRI", Cos2, 1.0),
            ("RIRIR", Cos2Sin, 2.0 * small),
            ("RZRZR", Cos2Sin, 2.0 * small),
        ],
        4 => vec![
            ("IIIRZ", Cos, 1.0),
            ("ZRIII", Cos, 1.0),
            ("ZRIRZ", Cos2, 1.0),
            ("RZIZR", Cos2, 1.0),
            ("IIRZR", Cos2, 0.5),
            ("RZRII", Cos2, 0.5),
            ("RZRZR", Cos2Sin, small),
        ],
        5 => vec![
            ("IIIIR", Cos, 1.0),
            ("IIIRI", Cos, 1.0),
            ("IIRII", Cos, 1.0),
            ("IRIII", Cos, 1.0),
            ("RIIII", Cos, 1.0),
            ("IIRIR", Cos2, 1.0),
            ("IRIRI", Cos2, 1.0),
            ("RIIIR", Cos2, 1.0),
            ("RIRII", Cos2, 1.0),
            ("RIRIR", Cos3, 1.0),
        ],
        _ => return None,
    };
    Some(rows)
}

/// Readout class implied by the `R` positions of an operator label.
pub fn label_class(label: &str) -> Result<Option<ReadoutClass>> {
    let mut class = None;
    for (i, c) in label.chars().enumerate() {
        match c {
            'R' => {
                let k = ReadoutClass::of(i);
                if class.is_some_and(|c| c != k) {
                    return Err(invalid(format!("{label} mixes rotated parity classes")));
                }
                class = Some(k);
            }
            'Z' | 'I' => {}
            other => return Err(invalid(format!("unexpected letter '{other}' in {label}"))),
        }
    }
    if let Some(k) = class {
        for (i, c) in label.chars().enumerate() {
            if c == 'Z' && ReadoutClass::of(i) == k {
                return Err(invalid(format!("{label} has Z on a rotated site")));
            }
        }
    }
    Ok(class)
}

/// Ensemble class to read `label` from: the class of its `R` sites, or for
/// α-independent labels the class that leaves every `Z` site unrotated.
pub fn sweep_class(label: &str) -> Result<ReadoutClass> {
    if let Some(k) = label_class(label)? {
        return Ok(k);
    }
    let mut z_class = None;
    for (i, c) in label.chars().enumerate() {
        if c == 'Z' {
            let k = ReadoutClass::of(i);
            if z_class.is_some_and(|c| c != k) {
                return Err(invalid(format!("{label} has Z on both parity classes and no unrotated readout")));
            }
            z_class = Some(k);
        }
    }
    Ok(match z_class {
        Some(ReadoutClass::Even) | None => ReadoutClass::Odd,
        Some(ReadoutClass::Odd) => ReadoutClass::Even,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorValue {
    pub label: String,
    pub fit: FormFit,
    /// `|A| + |C|`, or `|mean|` for α-independent operators.
    pub value: f64,
    pub stderr: f64,
    pub ideal: f64,
}

/// Fit one operator's α curve with its tabulated form.
pub fn fit_operator_curve(label: &str, form: FitForm, alphas: &[f64], values: &[f64], ideal: f64) -> Result<OperatorValue> {
    let fit = fit_form(alphas, values, form)?;
    let n = values.len() as f64;
    let stderr = if form == FitForm::Constant && values.len() > 1 {
        let mean = fit.offset;
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
    } else {
        (fit.rss / (n - 2.0).max(1.0)).sqrt()
    };
    Ok(OperatorValue { label: label.to_string(), fit, value: fit.peak(), stderr, ideal })
}

/// Fitted operator values at `time_step` from rotated-readout ensembles.
/// `labels` selects operators from the table; `None` means all of them.
pub fn graph_operator_scan(
    ensembles: &[RotatedEnsemble],
    data_sites: &[usize],
    time_step: usize,
    labels: Option<&[&str]>,
) -> Result<Vec<OperatorValue>> {
    let table = graph_operator_table(time_step).ok_or_else(|| invalid(format!("no operator table for step {time_step}")))?;
    let wanted: Vec<(&str, FitForm, f64)> = match labels {
        None => table.clone(),
        Some(ls) => ls
            .iter()
            .map(|l| {
                table
                    .iter()
                    .find(|(t, _, _)| t == l)
                    .copied()
                    .ok_or_else(|| invalid(format!("operator {l} is not listed at step {time_step}")))
            })
            .collect::<Result<_>>()?,
    };
    wanted
        .into_iter()
        .map(|(label, form, ideal)| {
            if label.len() != data_sites.len() {
                return Err(invalid(format!("{label} does not match {} data atoms", data_sites.len())));
            }
            let class = sweep_class(label)?;
            let chosen: Vec<&RotatedEnsemble> = ensembles.iter().filter(|e| e.class == class).collect();
            if chosen.is_empty() {
                return Err(invalid(format!("no ensembles for {label}")));
            }
            let sites: Vec<usize> = label
                .chars()
                .enumerate()
                .filter(|(_, c)| *c != 'I')
                .map(|(i, _)| data_sites[i])
                .collect();
            let alphas: Vec<f64> = chosen.iter().map(|e| e.alpha).collect();
            let values: Vec<f64> = chosen.iter().map(|e| e.shots.parity(&sites).0).collect();
            fit_operator_curve(label, form, &alphas, &values, ideal)
        })
        .collect()
}

/// Noise-free operator sweep on a state: for each α, apply the rotated
/// readout and take the exact Z parity.
pub fn exact_operator_sweep(
    state: &QuantumState,
    data_species: Species,
    data_sites: &[usize],
    label: &str,
    alphas: &[f64],
) -> Result<Vec<f64>> {
    let class = sweep_class(label)?;
    let sites: Vec<usize> = label
        .chars()
        .enumerate()
        .filter(|(_, c)| *c != 'I')
        .map(|(i, _)| data_sites[i])
        .collect();
    alphas
        .iter()
        .map(|&a| {
            let mut s = state.clone();
            apply_rotated_readout(&mut s, data_species, data_sites, class, a)?;
            exact_z_parity(&s, &sites)
        })
        .collect()
}

/// `r(ϑ)` measured as the two-site Z parity after a `π/4` pulse about
/// `ϑ − π/2` on the data species.
pub fn exact_r_sweep(state: &QuantumState, data_species: Species, sites: [usize; 2], thetas: &[f64]) -> Result<Vec<f64>> {
    thetas
        .iter()
        .map(|&t| {
            let mut s = state.clone();
            s.apply_product_rotation(data_species, FRAC_PI_4, t - FRAC_PI_2, &[])?;
            exact_z_parity(&s, &sites)
        })
        .collect()
}

/// `r(ϑ) = ⟨(R(ϑ)+Z)^{⊗2}⟩/2` computed from Pauli expectations.
pub fn r_direct(state: &QuantumState, sites: [usize; 2], theta: f64) -> Result<f64> {
    let n = state.n_sites();
    let mut total = 0.0;
    for fa in [PauliFactor::R(theta), PauliFactor::Z] {
        for fb in [PauliFactor::R(theta), PauliFactor::Z] {
            total += state.expect(&PauliString::from_sparse(n, &[(sites[0], fa), (sites[1], fb)]))?;
        }
    }
    Ok(total / 2.0)
}

/// Uniform angle grid on `[0, 2π)`.
pub fn angle_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| TAU * i as f64 / n as f64).collect()
}

#[cfg(test)]
mod tests;
