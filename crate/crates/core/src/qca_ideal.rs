//! Perfect-blockade unitary steps: PXP pulses, masked initialization,
//! mediated CZ layers and the graph-state automaton step.
//!
//! Every operation acts in place on two-level sites. Nearest neighbours
//! blockade each other regardless of species; nothing beyond distance one
//! interacts.

use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::error::invalid;
use crate::lattice::Species;
use crate::prelude::*;
use crate::statevec::{rotation_matrix, QuantumState};

/// Tolerance on auxiliary-atom population for mediated layers.
pub const AUX_TOL: f64 = 1e-9;

/// One global, species-selective pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PxpStep {
    pub species: Species,
    pub theta: f64,
    pub axis_phase: f64,
}

impl PxpStep {
    pub fn pi(species: Species) -> Self {
        PxpStep { species, theta: PI, axis_phase: 0.0 }
    }
}

fn require_two_level(state: &QuantumState) -> Result<()> {
    if state.is_two_level() {
        Ok(())
    } else {
        Err(Error::UnsupportedRepresentation(
            "ideal steps need every site to be two-level".into(),
        ))
    }
}

/// Rotate `sites`, each only where all nearest neighbours are in |0⟩.
fn blockaded_rotation(state: &mut QuantumState, sites: &[usize], theta: f64, axis_phase: f64) {
    let u = rotation_matrix(theta, axis_phase);
    let n = state.n_sites();
    for &j in sites {
        let strides = state.strides().to_vec();
        let sj = strides[j];
        let left = (j > 0).then(|| strides[j - 1]);
        let right = (j + 1 < n).then(|| strides[j + 1]);
        let amps = state.amplitudes_mut();
        for i0 in 0..amps.len() {
            if i0 & sj != 0 {
                continue;
            }
            if left.is_some_and(|s| i0 & s != 0) || right.is_some_and(|s| i0 & s != 0) {
                continue;
            }
            let i1 = i0 | sj;
            let (a0, a1) = (amps[i0], amps[i1]);
            amps[i0] = u[0][0] * a0 + u[0][1] * a1;
            amps[i1] = u[1][0] * a0 + u[1][1] * a1;
        }
    }
}

/// `∏_j exp(-iθ/2 · P_{j-1} G_j P_{j+1})` over the sites of `step.species`.
pub fn pxp_pulse(state: &mut QuantumState, step: PxpStep) -> Result<()> {
    require_two_level(state)?;
    if !state.chain().has_species(step.species) {
        return Err(invalid(format!("chain has no {} sites", step.species)));
    }
    let sites: Vec<usize> = state.chain().sites_of(step.species).collect();
    blockaded_rotation(state, &sites, step.theta, step.axis_phase);
    Ok(())
}

/// Species driven by pulse number `k` (0-based): A, B, A, ...
pub fn pulse_species(k: usize) -> Species {
    if k % 2 == 0 {
        Species::A
    } else {
        Species::B
    }
}

/// States after each of `n_pulses` alternating pulses, starting with the
/// input (length `n_pulses + 1`). A pulse on a species absent from the
/// chain is the identity.
pub fn pxp_sequence(state: &QuantumState, n_pulses: usize, theta: f64) -> Result<Vec<QuantumState>> {
    require_two_level(state)?;
    let mut out = Vec::with_capacity(n_pulses + 1);
    let mut cur = state.clone();
    out.push(cur.clone());
    for k in 0..n_pulses {
        let species = pulse_species(k);
        if cur.chain().has_species(species) {
            pxp_pulse(&mut cur, PxpStep { species, theta, axis_phase: 0.0 })?;
        }
        out.push(cur.clone());
    }
    Ok(out)
}

/// Rydberg populations after each pulse of the alternating automaton.
pub fn run_pxp_automaton(state: &QuantumState, n_pulses: usize, theta: f64) -> Result<Vec<Vec<f64>>> {
    Ok(pxp_sequence(state, n_pulses, theta)?
        .iter()
        .skip(1)
        .map(QuantumState::populations)
        .collect())
}

/// Blockaded rotation on the B sites not listed in `mask` (the masked ones
/// are light-shifted out of resonance).
pub fn masked_init_pulse(state: &mut QuantumState, mask: &[usize], theta: f64) -> Result<()> {
    require_two_level(state)?;
    for &m in mask {
        if m >= state.n_sites() || state.chain().species(m) != Species::B {
            return Err(invalid(format!("mask site {m} is not a B site")));
        }
    }
    let sites: Vec<usize> = state
        .chain()
        .sites_of(Species::B)
        .filter(|s| !mask.contains(s))
        .collect();
    blockaded_rotation(state, &sites, theta, 0.0);
    Ok(())
}

/// Parameters of an auxiliary-mediated diagonal gate layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediatedLayer {
    /// Auxiliary detuning in units of the Rabi frequency.
    pub delta: f64,
    /// Rabi frequency in MHz (unused by the ideal engine).
    pub omega: f64,
    pub data_species: Species,
    pub aux_species: Species,
    /// The dynamical phase φ picked up by the data atoms.
    pub phi_extra: f64,
}

impl MediatedLayer {
    pub fn new(delta: f64, data_species: Species) -> Self {
        MediatedLayer {
            delta,
            omega: 2.9,
            data_species,
            aux_species: data_species.other(),
            phi_extra: 0.0,
        }
    }

    /// Layer with `φ = 0` and `Φ = π/2`, i.e. `α = π/2`.
    pub fn cz(data_species: Species) -> Self {
        Self::new(1.0 / 3f64.sqrt(), data_species)
    }

    /// Layer realising an arbitrary `α`, keeping `Δ = Ω/√3` and moving the
    /// rest into `φ`.
    pub fn with_alpha(alpha: f64, data_species: Species) -> Self {
        let mut layer = Self::cz(data_species);
        layer.phi_extra = alpha - FRAC_PI_2;
        layer
    }

    /// Geometric phase of the auxiliary loop, `Φ = π(1 − Δ/√(Ω²+Δ²))`.
    pub fn big_phi(&self) -> f64 {
        geometric_phase(self.delta)
    }

    /// Entangling angle `α = φ + Φ`.
    pub fn alpha(&self) -> f64 {
        self.phi_extra + self.big_phi()
    }
}

/// `Φ(Δ) = π(1 − Δ/√(1+Δ²))` with `Δ` in units of Ω. Infinite detuning
/// gives 0.
pub fn geometric_phase(delta: f64) -> f64 {
    if delta.is_infinite() {
        return if delta > 0.0 { 0.0 } else { 2.0 * PI };
    }
    PI * (1.0 - delta / (1.0 + delta * delta).sqrt())
}

/// Data pairs `(i, i+2)` with an auxiliary atom at `i+1`.
pub fn mediated_pairs(state: &QuantumState, layer: &MediatedLayer) -> Vec<(usize, usize)> {
    let pattern = state.chain().pattern();
    (0..pattern.len().saturating_sub(2))
        .filter(|&i| {
            pattern[i] == layer.data_species
                && pattern[i + 1] == layer.aux_species
                && pattern[i + 2] == layer.data_species
        })
        .map(|i| (i, i + 2))
        .collect()
}

fn check_mediated(state: &QuantumState, layer: &MediatedLayer) -> Result<()> {
    require_two_level(state)?;
    if layer.data_species == layer.aux_species {
        return Err(invalid("data and auxiliary species must differ"));
    }
    let pops = state.populations();
    for (site, p) in pops.iter().enumerate() {
        if state.chain().species(site) == layer.aux_species && *p > AUX_TOL {
            return Err(Error::Precondition(format!(
                "auxiliary site {site} has Rydberg population {p:.3e}"
            )));
        }
    }
    Ok(())
}

fn z_of(index: usize, stride: usize) -> f64 {
    if index & stride == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Apply `U_Δ = [e^{i(φ−Φ)Z/4}]^{⊗2} e^{i(φ+Φ)ZZ/4}` on every bridged pair.
pub fn mediated_u_delta(state: &mut QuantumState, layer: &MediatedLayer) -> Result<()> {
    check_mediated(state, layer)?;
    let pairs = mediated_pairs(state, layer);
    let big = layer.big_phi();
    let single = (layer.phi_extra - big) / 4.0;
    let double = (layer.phi_extra + big) / 4.0;
    let strides: Vec<(usize, usize)> = pairs
        .iter()
        .map(|&(a, b)| (state.strides()[a], state.strides()[b]))
        .collect();
    state.apply_diagonal(|idx| {
        let angle: f64 = strides
            .iter()
            .map(|&(sa, sb)| {
                let (za, zb) = (z_of(idx, sa), z_of(idx, sb));
                single * (za + zb) + double * za * zb
            })
            .sum();
        C64::from_polar(1.0, angle)
    });
    Ok(())
}

fn x_on(state: &mut QuantumState, sites: &[usize]) {
    let x = [[C64::new(0.0, 0.0), C64::new(1.0, 0.0)], [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]];
    for &s in sites {
        state.apply_site_matrix(s, x);
    }
}

/// Echoed layer `V_Δ = U_Δ X^{⊗data} U_Δ`.
pub fn mediated_v_layer(state: &mut QuantumState, layer: &MediatedLayer) -> Result<()> {
    mediated_u_delta(state, layer)?;
    let data: Vec<usize> = state.chain().sites_of(layer.data_species).collect();
    x_on(state, &data);
    mediated_u_delta(state, layer)
}

/// Data sites with the number of bridged partners each has.
fn data_degrees(state: &QuantumState, layer: &MediatedLayer) -> Vec<(usize, usize)> {
    let pairs = mediated_pairs(state, layer);
    state
        .chain()
        .sites_of(layer.data_species)
        .map(|s| (s, pairs.iter().filter(|&&(a, b)| a == s || b == s).count()))
        .collect()
}

/// One step of the graph-state automaton, `∏ CZ_{i,i+1} ∏ √X_i` on the data
/// species with `√X = e^{-iπX/4}`. The CZ layer is realised by a mediated
/// `V` layer at `α = π/2` whose X flip and local Z phases are undone.
pub fn graph_step(state: &mut QuantumState, data_species: Species) -> Result<()> {
    let layer = MediatedLayer::cz(data_species);
    check_mediated(state, &layer)?;
    state.apply_product_rotation(data_species, FRAC_PI_2, 0.0, &[])?;
    mediated_v_layer(state, &layer)?;
    let degrees = data_degrees(state, &layer);
    let data: Vec<usize> = degrees.iter().map(|&(s, _)| s).collect();
    x_on(state, &data);
    let corrections: Vec<(usize, f64)> = degrees
        .iter()
        .map(|&(s, d)| (state.strides()[s], -FRAC_PI_4 * d as f64))
        .collect();
    state.apply_diagonal(|idx| {
        let angle: f64 = corrections.iter().map(|&(st, a)| a * z_of(idx, st)).sum();
        C64::from_polar(1.0, angle)
    });
    Ok(())
}

/// Drive-phase sequence that reproduces the measured graph-automaton
/// operators: the first π/2 pulse about X, later ones about Y.
pub fn graph_protocol_phase(step: usize) -> f64 {
    if step == 0 {
        0.0
    } else {
        FRAC_PI_2
    }
}

/// Step as run on hardware: a π/2 pulse about `axis_phase` on the data
/// species, then the uncorrected mediated layer at `α = π/2` (global X flip
/// and boundary S phases included).
pub fn graph_protocol_step(state: &mut QuantumState, data_species: Species, axis_phase: f64) -> Result<()> {
    let layer = MediatedLayer::cz(data_species);
    check_mediated(state, &layer)?;
    state.apply_product_rotation(data_species, FRAC_PI_2, axis_phase, &[])?;
    mediated_v_layer(state, &layer)
}

/// States after `0..=n_steps` protocol steps from `state`.
pub fn graph_protocol_sequence(
    state: &QuantumState,
    data_species: Species,
    n_steps: usize,
) -> Result<Vec<QuantumState>> {
    let mut out = vec![state.clone()];
    let mut cur = state.clone();
    for t in 0..n_steps {
        graph_protocol_step(&mut cur, data_species, graph_protocol_phase(t))?;
        out.push(cur.clone());
    }
    Ok(out)
}

/// Ideal detuning-scan objective `|⟨Z₁⟩⟨Z₂⟩|` for a data-aux-data triple:
/// π/2 pulse on the data atoms, `V_Δ`, and a second π/2 pulse about the same
/// axis.
pub fn detuning_objective(state: &QuantumState, layer: &MediatedLayer) -> Result<f64> {
    let mut s = state.clone();
    s.apply_product_rotation(layer.data_species, FRAC_PI_2, 0.0, &[])?;
    mediated_v_layer(&mut s, layer)?;
    s.apply_product_rotation(layer.data_species, FRAC_PI_2, 0.0, &[])?;
    let pops = s.populations();
    let data: Vec<usize> = s.chain().sites_of(layer.data_species).collect();
    Ok(data.iter().map(|&d| 1.0 - 2.0 * pops[d]).product::<f64>().abs())
}
