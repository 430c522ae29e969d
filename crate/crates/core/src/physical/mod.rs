//! Hamiltonian-level simulation of pulse schedules: finite blockade,
//! van-der-Waals tails and a quantum-trajectory noise model.
//!
//! Units: frequencies in MHz (ordinary, not angular), times in µs, rates in
//! 1/µs. A drive of Rabi frequency `Ω` rotates by `2π Ω t`, so a π pulse
//! lasts `1/(2Ω)`.

use core::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::invalid;
use crate::lattice::{ChainSpec, Species};
use crate::prelude::*;
use crate::qca_ideal::pulse_species;
use crate::rng::{standard_normal, stream_id, stream_rng, Domain};
use crate::statevec::{rydberg_level, QuantumState};

pub mod linalg;

use linalg::{chebyshev_expm_apply, krylov_expm_apply};

/// Two-photon Rabi frequency used throughout (MHz).
pub const DEFAULT_RABI_MHZ: f64 = 2.9;
/// Light shift on masked sites (MHz).
pub const DEFAULT_MASK_SHIFT_MHZ: f64 = 35.0;
/// Krylov tolerance per segment.
pub const KRYLOV_TOL: f64 = 1e-9;
/// Jump times are located to this precision (µs).
pub const JUMP_TIME_TOL: f64 = 1e-6;
/// Longest stretch integrated before checking the jump threshold (µs).
const MAX_CHUNK: f64 = 0.05;

/// Duration of a rotation by `theta` at Rabi frequency `rabi`.
pub fn pulse_duration(theta: f64, rabi: f64) -> f64 {
    theta / (TAU * rabi)
}

/// One piece of a pulse schedule: a constant drive on one species.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveSegment {
    pub species: Species,
    /// Two-photon Rabi frequency (MHz).
    pub rabi: f64,
    /// Two-photon detuning (MHz); enters as `−Δ n`.
    pub detuning: f64,
    pub axis_phase: f64,
    pub duration: f64,
    /// Sites of `species` excluded from the drive.
    pub mask: Vec<usize>,
    pub label: String,
}

impl DriveSegment {
    /// Resonant rotation by `theta` about `axis_phase`.
    pub fn pulse(species: Species, theta: f64, axis_phase: f64, rabi: f64) -> Self {
        DriveSegment {
            species,
            rabi,
            detuning: 0.0,
            axis_phase,
            duration: pulse_duration(theta, rabi),
            mask: Vec::new(),
            label: format!("{species}-pulse({:.3}π)", theta / PI),
        }
    }

    /// No drive; interactions and noise still act.
    pub fn idle(duration: f64) -> Self {
        DriveSegment {
            species: Species::A,
            rabi: 0.0,
            detuning: 0.0,
            axis_phase: 0.0,
            duration,
            mask: Vec::new(),
            label: "idle".into(),
        }
    }

    pub fn with_detuning(mut self, detuning: f64) -> Self {
        self.detuning = detuning;
        self
    }

    pub fn with_mask(mut self, mask: Vec<usize>) -> Self {
        self.mask = mask;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn validate(&self, chain: &ChainSpec) -> Result<()> {
        if !(self.duration >= 0.0) || !self.duration.is_finite() {
            return Err(invalid(format!("segment '{}': duration must be finite and ≥ 0", self.label)));
        }
        if !(self.rabi >= 0.0) || !self.rabi.is_finite() {
            return Err(invalid(format!("segment '{}': rabi must be finite and ≥ 0", self.label)));
        }
        if !self.detuning.is_finite() || !self.axis_phase.is_finite() {
            return Err(invalid(format!("segment '{}': non-finite detuning or phase", self.label)));
        }
        if self.rabi > 0.0 && !chain.has_species(self.species) {
            return Err(invalid(format!("segment '{}': chain has no {} sites", self.label, self.species)));
        }
        for &m in &self.mask {
            if m >= chain.n_sites() || chain.species(m) != self.species {
                return Err(invalid(format!("segment '{}': masked site {m} is not a {} site", self.label, self.species)));
            }
        }
        Ok(())
    }
}

/// Single-photon ladder `|0⟩ ↔ |e⟩ ↔ |1⟩` of one species.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ladder {
    /// Lower-leg Rabi frequency (MHz).
    pub blue_rabi: f64,
    /// Upper-leg Rabi frequency (MHz).
    pub ir_rabi: f64,
    /// Intermediate-state detuning (MHz, signed).
    pub detuning: f64,
    /// Intermediate-state linewidth `Γ/2π` (MHz).
    pub linewidth: f64,
}

impl Ladder {
    /// Species A (Rb-like): 5P3/2 intermediate state.
    pub fn species_a() -> Self {
        Ladder { blue_rabi: 109.0, ir_rabi: 120.0, detuning: 2300.0, linewidth: 6.07 }
    }

    /// Species B (Cs-like): 7P3/2 intermediate state.
    pub fn species_b() -> Self {
        Ladder { blue_rabi: 124.0, ir_rabi: 209.0, detuning: -4300.0, linewidth: 1.03 }
    }

    pub fn two_photon_rabi(&self) -> f64 {
        self.blue_rabi * self.ir_rabi / (2.0 * self.detuning.abs())
    }

    /// Leg Rabi frequencies rescaled (same ratio) to give two-photon `rabi`.
    pub fn legs_for(&self, rabi: f64) -> (f64, f64) {
        let s = (rabi / self.two_photon_rabi()).sqrt();
        (self.blue_rabi * s, self.ir_rabi * s)
    }

    /// Copy with the intermediate detuning multiplied by `factor`, keeping
    /// the two-photon Rabi frequency.
    pub fn detuned_by(&self, factor: f64) -> Self {
        let s = factor.abs().sqrt();
        Ladder { blue_rabi: self.blue_rabi * s, ir_rabi: self.ir_rabi * s, detuning: self.detuning * factor, ..*self }
    }

    /// Scattering rates (1/µs) out of |0⟩ and |1⟩ while driven at `rabi`.
    pub fn scattering_rates(&self, rabi: f64) -> (f64, f64) {
        let (b, r) = self.legs_for(rabi);
        let gamma = TAU * self.linewidth;
        let d = 2.0 * self.detuning;
        (gamma * (b / d).powi(2), gamma * (r / d).powi(2))
    }
}

/// How the intermediate state enters the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntermediateState {
    Off,
    /// Two-level sites; off-resonant scattering added as loss channels with
    /// adiabatically eliminated rates.
    Eliminated([Ladder; 2]),
    /// Three-level sites with the full ladder drive.
    Explicit([Ladder; 2]),
}

impl IntermediateState {
    pub fn standard_ladders() -> [Ladder; 2] {
        [Ladder::species_a(), Ladder::species_b()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseConfig {
    /// Rydberg lifetime per species (µs); `∞` disables decay.
    pub rydberg_lifetime: [f64; 2],
    /// Dephasing rate `γ` of the ground-Rydberg coherence per species
    /// (1/µs); jump operator `√(2γ) n`.
    pub dephasing_rate: [f64; 2],
    /// Relative shot-to-shot std-dev of the two-photon Rabi frequency.
    pub intensity_sigma: [f64; 2],
    /// Shot-to-shot position std-dev per axis (µm).
    pub position_sigma: f64,
    pub intermediate: IntermediateState,
    pub n_trajectories: usize,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn noiseless(seed: u64) -> Self {
        NoiseConfig {
            rydberg_lifetime: [f64::INFINITY; 2],
            dephasing_rate: [0.0; 2],
            intensity_sigma: [0.0; 2],
            position_sigma: 0.0,
            intermediate: IntermediateState::Off,
            n_trajectories: 1,
            seed,
        }
    }

    /// Default noise budget for the experiment's lasers and traps.
    ///
    /// Dephasing: white frequency noise at `S_f = 10⁴ Hz²/Hz`, rate
    /// `γ = π S_f`. Rabi noise per species is the quadrature sum of its two
    /// lasers' intensity noise.
    pub fn standard(seed: u64) -> Self {
        let gamma = PI * 1e4 * 1e-6;
        let quad = |a: f64, b: f64| (a * a + b * b).sqrt();
        NoiseConfig {
            rydberg_lifetime: [100.0; 2],
            dephasing_rate: [gamma; 2],
            intensity_sigma: [quad(0.014, 0.003), quad(0.005, 0.005)],
            position_sigma: 0.1,
            intermediate: IntermediateState::Eliminated(IntermediateState::standard_ladders()),
            n_trajectories: 100,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for s in 0..2 {
            if !(self.rydberg_lifetime[s] > 0.0) {
                return Err(invalid("rydberg_lifetime must be positive"));
            }
            if !(self.dephasing_rate[s] >= 0.0) || !self.dephasing_rate[s].is_finite() {
                return Err(invalid("dephasing_rate must be finite and ≥ 0"));
            }
            if !(self.intensity_sigma[s] >= 0.0) || !self.intensity_sigma[s].is_finite() {
                return Err(invalid("intensity_sigma must be finite and ≥ 0"));
            }
        }
        if !(self.position_sigma >= 0.0) || !self.position_sigma.is_finite() {
            return Err(invalid("position_sigma must be finite and ≥ 0"));
        }
        if self.n_trajectories == 0 {
            return Err(invalid("n_trajectories must be at least 1"));
        }
        if let IntermediateState::Eliminated(l) | IntermediateState::Explicit(l) = &self.intermediate {
            for x in l {
                if x.detuning == 0.0 || !(x.blue_rabi > 0.0) || !(x.ir_rabi > 0.0) || !(x.linewidth >= 0.0) {
                    return Err(invalid("intermediate ladder needs non-zero detuning and positive Rabi rates"));
                }
            }
        }
        Ok(())
    }

    /// True when a trajectory is fully deterministic.
    pub fn is_noiseless(&self) -> bool {
        self.rydberg_lifetime.iter().all(|t| t.is_infinite())
            && self.dephasing_rate.iter().all(|&g| g == 0.0)
            && self.intensity_sigma.iter().all(|&s| s == 0.0)
            && self.position_sigma == 0.0
            && match self.intermediate {
                IntermediateState::Off => true,
                IntermediateState::Eliminated(l) | IntermediateState::Explicit(l) => l.iter().all(|x| x.linewidth == 0.0),
            }
    }

    fn site_dim(&self) -> u8 {
        match self.intermediate {
            IntermediateState::Explicit(_) => 3,
            _ => 2,
        }
    }
}

/// Time propagator used between jumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Propagator {
    /// Chebyshev expansion (no orthogonalization; fastest for wide spectra).
    Chebyshev,
    /// Adaptive Arnoldi projection.
    Krylov,
}

/// Model choices that are not noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelOptions {
    /// Keep only couplings with `|i − j| ≤ range`; `None` keeps all tails.
    pub interaction_range: Option<usize>,
    /// Light shift added to |1⟩ of masked sites (MHz).
    pub mask_light_shift: f64,
    pub propagator: Propagator,
}

impl Default for ModelOptions {
    fn default() -> Self {
        ModelOptions {
            interaction_range: None,
            mask_light_shift: DEFAULT_MASK_SHIFT_MHZ,
            propagator: Propagator::Chebyshev,
        }
    }
}

/// Parameters drawn once per shot.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenNoise {
    /// Per-site displacement `(x, y, z)` in µm.
    pub offsets: Vec<[f64; 3]>,
    /// Multiplicative Rabi scale per species.
    pub intensity: [f64; 2],
}

impl FrozenNoise {
    pub fn none(n_sites: usize) -> Self {
        FrozenNoise { offsets: vec![[0.0; 3]; n_sites], intensity: [1.0; 2] }
    }

    pub fn sample<R: Rng + ?Sized>(n_sites: usize, noise: &NoiseConfig, rng: &mut R) -> Self {
        let mut f = Self::none(n_sites);
        for s in 0..2 {
            if noise.intensity_sigma[s] > 0.0 {
                f.intensity[s] = (1.0 + noise.intensity_sigma[s] * standard_normal(rng)).max(0.0);
            }
        }
        if noise.position_sigma > 0.0 {
            for o in f.offsets.iter_mut() {
                for x in o.iter_mut() {
                    *x = noise.position_sigma * standard_normal(rng);
                }
            }
        }
        f
    }
}

/// Kind of quantum jump.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpKind {
    /// Rydberg decay out of the manifold (atom lost).
    Decay,
    /// Off-resonant scattering via the intermediate state (atom lost).
    Scattering,
    /// Projective dephasing `n`.
    Dephasing,
}

/// Jump operator `√rate |target⟩⟨level|` (loss) or `√rate |level⟩⟨level|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpChannel {
    pub site: usize,
    pub level: usize,
    pub rate: f64,
    pub kind: JumpKind,
}

/// `H += amp |hi⟩⟨lo| + h.c.` on one site.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Coupling {
    site: usize,
    lo: usize,
    hi: usize,
    amp: C64,
}

/// Sparse Hamiltonian (MHz) in the layout of a [`QuantumState`], plus the
/// jump channels active during the segment.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    dims: Vec<u8>,
    strides: Vec<usize>,
    diag: Vec<f64>,
    /// `Σ_c rate_c ⟨idx|L_c†L_c|idx⟩ / rate`-weighted total per basis label.
    loss: Vec<f64>,
    couplings: Vec<Coupling>,
    channels: Vec<JumpChannel>,
}

fn level_of(idx: usize, strides: &[usize], dims: &[u8], site: usize) -> usize {
    (idx / strides[site]) % dims[site] as usize
}

impl Hamiltonian {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn channels(&self) -> &[JumpChannel] {
        &self.channels
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// True when the effective Hamiltonian has an anti-Hermitian part.
    pub fn has_loss(&self) -> bool {
        !self.channels.is_empty()
    }

    /// `out = H v`.
    pub fn apply(&self, v: &[C64], out: &mut [C64]) {
        for ((o, x), d) in out.iter_mut().zip(v).zip(&self.diag) {
            *o = x * d;
        }
        self.add_couplings(v, out, C64::new(1.0, 0.0));
    }

    fn add_couplings(&self, v: &[C64], out: &mut [C64], factor: C64) {
        let n = v.len();
        for c in &self.couplings {
            let stride = self.strides[c.site];
            let d = self.dims[c.site] as usize;
            let block = stride * d;
            let up = c.amp * factor;
            let down = c.amp.conj() * factor;
            let (lo_off, hi_off) = (c.lo * stride, c.hi * stride);
            for base in (0..n).step_by(block) {
                for off in 0..stride {
                    let il = base + off + lo_off;
                    let ih = base + off + hi_off;
                    out[ih] += up * v[il];
                    out[il] += down * v[ih];
                }
            }
        }
    }

    /// `out = (−2πi H − ½ Σ L†L) v`.
    pub fn apply_generator(&self, v: &[C64], out: &mut [C64]) {
        let mi = C64::new(0.0, -TAU);
        for (((o, x), d), l) in out.iter_mut().zip(v).zip(&self.diag).zip(&self.loss) {
            *o = x * (mi * d - 0.5 * l);
        }
        self.add_couplings(v, out, mi);
    }

    /// `Re ⟨v|H|v⟩ / ⟨v|v⟩`.
    pub fn expectation(&self, v: &[C64]) -> f64 {
        let mut out = vec![C64::new(0.0, 0.0); v.len()];
        self.apply(v, &mut out);
        let num: C64 = v.iter().zip(&out).map(|(a, b)| a.conj() * b).sum();
        num.re / v.iter().map(|a| a.norm_sqr()).sum::<f64>()
    }

    /// Dense matrix of `H` (tests and small systems only).
    pub fn to_dense(&self) -> linalg::DenseMatrix {
        let n = self.dim();
        let mut m = linalg::DenseMatrix::zeros(n);
        let mut e = vec![C64::new(0.0, 0.0); n];
        let mut col = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            e[j] = C64::new(1.0, 0.0);
            self.apply(&e, &mut col);
            for i in 0..n {
                m.set(i, j, col[i]);
            }
            e[j] = C64::new(0.0, 0.0);
        }
        m
    }

    /// Gershgorin interval `[e_min, e_max]` containing the spectrum of the
    /// Hermitian part (MHz).
    pub fn spectral_bounds(&self) -> (f64, f64) {
        let off: f64 = self.couplings.iter().map(|c| c.amp.norm()).sum();
        let lo = self.diag.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.diag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo - off, hi + off)
    }

    /// `out = (H − i Σ L†L / 4π) v`, so that `exp(−2πi t K)` is the
    /// no-jump propagator.
    pub fn apply_effective(&self, v: &[C64], out: &mut [C64]) {
        let k = 1.0 / (2.0 * TAU);
        for (((o, x), d), l) in out.iter_mut().zip(v).zip(&self.diag).zip(&self.loss) {
            *o = x * C64::new(*d, -k * l);
        }
        self.add_couplings(v, out, C64::new(1.0, 0.0));
    }
}

/// Build the Hamiltonian for `segment` on a state with site dimensions
/// `dims`.
///
/// `H = Σ_drive (Ω/2)(e^{iφ}|1⟩⟨0| + h.c.) − Σ_drive Δ n + Σ_masked s n
/// + Σ_{i<j} V_ij n_i n_j`, with `V_ij` evaluated at the frozen positions.
/// With three-level sites the drive is the two-leg ladder, and the bare
/// |1⟩ energy absorbs the differential light shift so the dressed
/// transition stays resonant at `Δ = 0`.
pub fn build_hamiltonian(
    chain: &ChainSpec,
    dims: &[u8],
    segment: &DriveSegment,
    frozen: &FrozenNoise,
    options: &ModelOptions,
    noise: &NoiseConfig,
) -> Result<Hamiltonian> {
    build_with_lost(chain, dims, segment, frozen, options, noise, &vec![false; chain.n_sites()])
}

fn build_with_lost(
    chain: &ChainSpec,
    dims: &[u8],
    segment: &DriveSegment,
    frozen: &FrozenNoise,
    options: &ModelOptions,
    noise: &NoiseConfig,
    lost: &[bool],
) -> Result<Hamiltonian> {
    let n = chain.n_sites();
    segment.validate(chain)?;
    if dims.len() != n || frozen.offsets.len() != n {
        return Err(invalid("state or frozen-noise dimensions do not match the chain"));
    }
    let three = match noise.intermediate {
        IntermediateState::Explicit(_) => true,
        _ => false,
    };
    if dims.iter().any(|&d| d != if three { 3 } else { 2 }) {
        return Err(Error::UnsupportedRepresentation(
            "site dimensions do not match the intermediate-state setting".into(),
        ));
    }
    let mut strides = vec![1usize; n];
    for k in (0..n.saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1] as usize;
    }
    let dim = strides[0] * dims[0] as usize;

    // Per-site single-particle energies by level.
    let mut level_energy: Vec<[f64; 3]> = vec![[0.0; 3]; n];
    let mut couplings = Vec::new();
    let mut channels = Vec::new();
    let driven = |j: usize| {
        segment.rabi > 0.0 && !lost[j] && chain.species(j) == segment.species && !segment.mask.contains(&j)
    };
    for j in 0..n {
        if lost[j] {
            continue;
        }
        let sp = chain.species(j).index();
        let ryd = rydberg_level(dims[j]);
        if segment.mask.contains(&j) {
            level_energy[j][ryd] += options.mask_light_shift;
        }
        if driven(j) {
            let rabi = segment.rabi * frozen.intensity[sp];
            let phase = C64::from_polar(1.0, segment.axis_phase);
            match noise.intermediate {
                IntermediateState::Explicit(ladders) => {
                    let l = ladders[sp];
                    let (b, r) = l.legs_for(rabi);
                    let sign = l.detuning.signum();
                    couplings.push(Coupling { site: j, lo: 0, hi: 1, amp: phase * (b / 2.0) });
                    couplings.push(Coupling { site: j, lo: 1, hi: 2, amp: C64::new(sign * r / 2.0, 0.0) });
                    level_energy[j][1] += -l.detuning;
                    level_energy[j][2] += -segment.detuning + (b * b - r * r) / (4.0 * l.detuning);
                }
                IntermediateState::Eliminated(ladders) => {
                    couplings.push(Coupling { site: j, lo: 0, hi: 1, amp: phase * (rabi / 2.0) });
                    level_energy[j][1] += -segment.detuning;
                    let (g0, g1) = ladders[sp].scattering_rates(rabi);
                    if g0 > 0.0 {
                        channels.push(JumpChannel { site: j, level: 0, rate: g0, kind: JumpKind::Scattering });
                    }
                    if g1 > 0.0 {
                        channels.push(JumpChannel { site: j, level: 1, rate: g1, kind: JumpKind::Scattering });
                    }
                }
                IntermediateState::Off => {
                    couplings.push(Coupling { site: j, lo: 0, hi: 1, amp: phase * (rabi / 2.0) });
                    level_energy[j][1] += -segment.detuning;
                }
            }
        }
        if let IntermediateState::Explicit(ladders) = noise.intermediate {
            let g = TAU * ladders[sp].linewidth;
            if g > 0.0 {
                channels.push(JumpChannel { site: j, level: 1, rate: g, kind: JumpKind::Scattering });
            }
        }
        let tau = noise.rydberg_lifetime[sp];
        if tau.is_finite() {
            channels.push(JumpChannel { site: j, level: ryd, rate: 1.0 / tau, kind: JumpKind::Decay });
        }
        let g = noise.dephasing_rate[sp];
        if g > 0.0 {
            channels.push(JumpChannel { site: j, level: ryd, rate: 2.0 * g, kind: JumpKind::Dephasing });
        }
    }

    // Pair interactions at the frozen positions.
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if lost[i] || lost[j] || options.interaction_range.is_some_and(|r| j - i > r) {
                continue;
            }
            let mut r2 = 0.0;
            for ax in 0..3 {
                let mut d = frozen.offsets[j][ax] - frozen.offsets[i][ax];
                if ax == 0 {
                    d += chain.position(j) - chain.position(i);
                }
                r2 += d * d;
            }
            let v = chain.interaction_at(chain.species(i), chain.species(j), r2.sqrt());
            if v != 0.0 {
                pairs.push((i, j, v));
            }
        }
    }

    let mut diag = vec![0.0; dim];
    let mut loss = vec![0.0; dim];
    for idx in 0..dim {
        let mut e = 0.0;
        for j in 0..n {
            e += level_energy[j][level_of(idx, &strides, dims, j)];
        }
        for &(i, j, v) in &pairs {
            if level_of(idx, &strides, dims, i) == rydberg_level(dims[i])
                && level_of(idx, &strides, dims, j) == rydberg_level(dims[j])
            {
                e += v;
            }
        }
        diag[idx] = e;
        loss[idx] = channels
            .iter()
            .filter(|c| level_of(idx, &strides, dims, c.site) == c.level)
            .map(|c| c.rate)
            .sum();
    }
    Ok(Hamiltonian { dims: dims.to_vec(), strides, diag, loss, couplings, channels })
}

/// One recorded quantum jump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpRecord {
    pub segment: usize,
    /// Time since the start of the schedule (µs).
    pub time: f64,
    pub site: usize,
    pub kind: JumpKind,
}

/// Embed a two-level state into three-level sites (|1⟩ → level 2).
pub fn embed_three_level(state: &QuantumState) -> Result<QuantumState> {
    if state.dims().iter().all(|&d| d == 3) {
        return Ok(state.clone());
    }
    if !state.is_two_level() {
        return Err(Error::UnsupportedRepresentation("mixed site dimensions".into()));
    }
    let n = state.n_sites();
    let dims = vec![3u8; n];
    let mut amps = vec![C64::new(0.0, 0.0); 3usize.pow(n as u32)];
    for (idx, a) in state.amplitudes().iter().enumerate() {
        let mut t = 0usize;
        for site in 0..n {
            t = t * 3 + 2 * state.level(idx, site);
        }
        amps[t] = *a;
    }
    let mut out = QuantumState::from_amplitudes(state.chain(), dims, amps)?;
    for (s, &l) in state.lost_mask().iter().enumerate() {
        if l {
            out.set_lost(s);
        }
    }
    Ok(out)
}

/// Project a three-level state onto the {|0⟩, |1⟩} blocks, renormalized.
pub fn project_two_level(state: &QuantumState) -> Result<QuantumState> {
    if state.is_two_level() {
        return Ok(state.clone());
    }
    let n = state.n_sites();
    let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
    for (idx, a) in state.amplitudes().iter().enumerate() {
        let mut t = 0usize;
        let mut keep = true;
        for site in 0..n {
            let l = state.level(idx, site);
            let r = rydberg_level(state.dims()[site]);
            if l != 0 && l != r {
                keep = false;
                break;
            }
            t = (t << 1) | (l == r) as usize;
        }
        if keep {
            amps[t] = *a;
        }
    }
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::Precondition("no weight in the computational subspace".into()));
    }
    for a in amps.iter_mut() {
        *a /= norm;
    }
    QuantumState::from_amplitudes(state.chain(), vec![2; n], amps)
}

fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

/// Advance `v` by `t` under the no-jump evolution of `h`.
pub fn propagate(h: &Hamiltonian, v: &mut [C64], t: f64, propagator: Propagator, label: &str) -> Result<()> {
    let r = match propagator {
        Propagator::Krylov => krylov_expm_apply(|x, out| h.apply_generator(x, out), v, t, KRYLOV_TOL).map(|_| ()),
        Propagator::Chebyshev => {
            let (lo, hi) = h.spectral_bounds();
            chebyshev_expm_apply(|x, out| h.apply_effective(x, out), v, t, lo, hi, KRYLOV_TOL).map(|_| ())
        }
    };
    r.map_err(|e| match e {
            Error::NumericalFailure { reason, .. } => Error::NumericalFailure { segment: label.to_string(), reason },
            other => other,
        })
}

/// Apply a jump from `channel` to the amplitudes.
fn apply_jump(state: &mut QuantumState, channel: &JumpChannel) {
    let site = channel.site;
    let stride = state.strides()[site];
    let d = state.dims()[site] as usize;
    let level = channel.level;
    let amps = state.amplitudes_mut();
    let block = stride * d;
    let len = amps.len();
    for base in (0..len).step_by(block) {
        for off in 0..stride {
            let from = base + off + level * stride;
            let keep = amps[from];
            for l in 0..d {
                amps[base + off + l * stride] = C64::new(0.0, 0.0);
            }
            match channel.kind {
                JumpKind::Dephasing => amps[from] = keep,
                JumpKind::Decay | JumpKind::Scattering => amps[base + off] = keep,
            }
        }
    }
    state.normalize();
    if channel.kind != JumpKind::Dephasing {
        state.set_lost(site);
    }
}

fn pick_channel(state: &QuantumState, h: &Hamiltonian, rng: &mut ChaCha8Rng) -> Option<JumpChannel> {
    let pops: Vec<f64> = h
        .channels
        .iter()
        .map(|c| {
            let mut p = 0.0;
            for (idx, a) in state.amplitudes().iter().enumerate() {
                if state.level(idx, c.site) == c.level {
                    p += a.norm_sqr();
                }
            }
            p * c.rate
        })
        .collect();
    let total: f64 = pops.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let mut u = rng.gen::<f64>() * total;
    for (c, w) in h.channels.iter().zip(&pops) {
        if u < *w {
            return Some(*c);
        }
        u -= w;
    }
    h.channels.iter().zip(&pops).rev().find(|(_, w)| **w > 0.0).map(|(c, _)| *c)
}

/// Per-trajectory inputs.
pub struct TrajectoryContext<'a> {
    pub noise: &'a NoiseConfig,
    pub options: &'a ModelOptions,
    pub frozen: FrozenNoise,
}

/// Integrate one trajectory; `observe(k, state)` is called with the
/// normalized state after segment `k`.
pub fn evolve_observed(
    state: &QuantumState,
    schedule: &[DriveSegment],
    ctx: &TrajectoryContext<'_>,
    rng: &mut ChaCha8Rng,
    mut observe: impl FnMut(usize, &QuantumState),
) -> Result<(QuantumState, Vec<JumpRecord>)> {
    ctx.noise.validate()?;
    let chain = state.chain().clone();
    for seg in schedule {
        seg.validate(&chain)?;
    }
    let mut psi = if ctx.noise.site_dim() == 3 { embed_three_level(state)? } else { state.clone() };
    if ctx.noise.site_dim() == 2 && !psi.is_two_level() {
        return Err(Error::UnsupportedRepresentation("three-level state with a two-level model".into()));
    }
    let mut jumps = Vec::new();
    let mut threshold: f64 = rng.gen();
    let mut clock = 0.0;
    for (k, seg) in schedule.iter().enumerate() {
        let mut h = build_with_lost(&chain, psi.dims(), seg, &ctx.frozen, ctx.options, ctx.noise, psi.lost_mask())?;
        let mut t = 0.0;
        while t < seg.duration {
            let remaining = seg.duration - t;
            if !h.has_loss() {
                propagate(&h, psi.amplitudes_mut(), remaining, ctx.options.propagator, &seg.label)?;
                break;
            }
            let chunk = remaining.min(MAX_CHUNK);
            let start: Vec<C64> = psi.amplitudes().to_vec();
            propagate(&h, psi.amplitudes_mut(), chunk, ctx.options.propagator, &seg.label)?;
            if norm_sqr(psi.amplitudes()) > threshold {
                t += chunk;
                continue;
            }
            // Locate the crossing by bisection, re-integrating from `start`.
            let (mut lo, mut hi) = (0.0, chunk);
            let mut at_hi = psi.amplitudes().to_vec();
            while hi - lo > JUMP_TIME_TOL {
                let mid = 0.5 * (lo + hi);
                let mut trial = start.clone();
                propagate(&h, &mut trial, mid, ctx.options.propagator, &seg.label)?;
                if norm_sqr(&trial) > threshold {
                    lo = mid;
                } else {
                    hi = mid;
                    at_hi = trial;
                }
            }
            psi.amplitudes_mut().copy_from_slice(&at_hi);
            psi.normalize();
            t += hi;
            if let Some(c) = pick_channel(&psi, &h, rng) {
                apply_jump(&mut psi, &c);
                jumps.push(JumpRecord { segment: k, time: clock + t, site: c.site, kind: c.kind });
                if c.kind != JumpKind::Dephasing {
                    h = build_with_lost(&chain, psi.dims(), seg, &ctx.frozen, ctx.options, ctx.noise, psi.lost_mask())?;
                }
            }
            threshold = rng.gen();
        }
        clock += seg.duration;
        // Keep the running norm but hand observers a normalized copy.
        let nrm = norm_sqr(psi.amplitudes());
        if !(nrm > 0.0) || !nrm.is_finite() {
            return Err(Error::NumericalFailure { segment: seg.label.clone(), reason: "state norm collapsed".into() });
        }
        let mut snapshot = psi.clone();
        snapshot.normalize();
        observe(k, &snapshot);
    }
    psi.normalize();
    Ok((psi, jumps))
}

/// Trajectory `index` of a run seeded with `seed`: frozen noise and jump
/// draws come from separate streams keyed by the index.
pub fn evolve_indexed(
    state: &QuantumState,
    schedule: &[DriveSegment],
    noise: &NoiseConfig,
    options: &ModelOptions,
    seed: u64,
    index: u64,
    observe: impl FnMut(usize, &QuantumState),
) -> Result<(QuantumState, Vec<JumpRecord>)> {
    let mut frozen_rng = stream_rng(seed, stream_id(Domain::FrozenNoise, index));
    let frozen = FrozenNoise::sample(state.n_sites(), noise, &mut frozen_rng);
    let mut rng = stream_rng(seed, stream_id(Domain::Trajectory, index));
    let ctx = TrajectoryContext { noise, options, frozen };
    evolve_observed(state, schedule, &ctx, &mut rng, observe)
}

/// One trajectory with default model options.
pub fn evolve_trajectory(
    state: &QuantumState,
    schedule: &[DriveSegment],
    noise: &NoiseConfig,
    traj_seed: u64,
) -> Result<(QuantumState, Vec<JumpRecord>)> {
    evolve_indexed(state, schedule, noise, &ModelOptions::default(), traj_seed, 0, |_, _| {})
}

/// Populations `⟨n_j⟩` (readout convention) before and after each segment
/// for trajectory `index`.
pub fn trajectory_populations(
    state: &QuantumState,
    schedule: &[DriveSegment],
    noise: &NoiseConfig,
    options: &ModelOptions,
    index: u64,
) -> Result<Vec<Vec<f64>>> {
    let mut trace = vec![readout_populations(state)];
    evolve_indexed(state, schedule, noise, options, noise.seed, index, |_, s| trace.push(readout_populations(s)))?;
    Ok(trace)
}

/// `⟨n_j⟩` with lost atoms counted as reading `0`.
pub fn readout_populations(state: &QuantumState) -> Vec<f64> {
    let mut pops = state.populations();
    for (p, &l) in pops.iter_mut().zip(state.lost_mask()) {
        if l {
            *p = 0.0;
        }
    }
    pops
}

/// Trajectory-averaged population trace, computed sequentially.
pub fn mean_population_trace(
    state: &QuantumState,
    schedule: &[DriveSegment],
    noise: &NoiseConfig,
    options: &ModelOptions,
) -> Result<Vec<Vec<f64>>> {
    let n_traj = if noise.is_noiseless() { 1 } else { noise.n_trajectories };
    let mut acc: Option<Vec<Vec<f64>>> = None;
    for i in 0..n_traj {
        let tr = trajectory_populations(state, schedule, noise, options, i as u64)?;
        acc = Some(match acc {
            None => tr,
            Some(mut a) => {
                for (ra, rt) in a.iter_mut().zip(&tr) {
                    for (x, y) in ra.iter_mut().zip(rt) {
                        *x += y;
                    }
                }
                a
            }
        });
    }
    let mut a = acc.unwrap_or_default();
    for row in a.iter_mut() {
        for x in row.iter_mut() {
            *x /= n_traj as f64;
        }
    }
    Ok(a)
}

/// Options for the global π-pulse schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PxpScheduleOptions {
    pub theta: f64,
    pub rabi: f64,
    /// Detune each species by its next-nearest-neighbour shift.
    pub nnn_compensation: bool,
    /// Extra constant detuning per species (MHz).
    pub detuning_error: [f64; 2],
}

impl Default for PxpScheduleOptions {
    fn default() -> Self {
        PxpScheduleOptions { theta: PI, rabi: DEFAULT_RABI_MHZ, nnn_compensation: true, detuning_error: [0.0; 2] }
    }
}

/// Same-species shift at twice the spacing (MHz).
pub fn nnn_shift(chain: &ChainSpec, species: Species) -> f64 {
    chain.interaction_at(species, species, 2.0 * chain.spacing())
}

/// Alternating species pulses `A, B, A, ...`.
pub fn pxp_schedule(chain: &ChainSpec, n_pulses: usize, opts: &PxpScheduleOptions) -> Vec<DriveSegment> {
    (0..n_pulses)
        .map(|k| {
            let sp = pulse_species(k);
            let comp = if opts.nnn_compensation { nnn_shift(chain, sp) } else { 0.0 };
            DriveSegment::pulse(sp, opts.theta, 0.0, opts.rabi)
                .with_detuning(comp + opts.detuning_error[sp.index()])
                .with_label(format!("pulse {}", k + 1))
        })
        .collect()
}

/// `V_Δ`: detuned closed loop on the auxiliary species, π pulse on the
/// data species, closed loop again.
pub fn mediated_gate_schedule(delta: f64, rabi: f64, data: Species) -> Vec<DriveSegment> {
    let aux = data.other();
    let loop_time = 1.0 / (rabi * rabi + delta * delta).sqrt();
    let u = DriveSegment {
        species: aux,
        rabi,
        detuning: delta,
        axis_phase: 0.0,
        duration: loop_time,
        mask: Vec::new(),
        label: "U_delta".into(),
    };
    vec![u.clone(), DriveSegment::pulse(data, PI, 0.0, rabi).with_label("data-X"), u]
}

/// Gate-calibration objective `|⟨Z₁⟩⟨Z₂⟩|` on a data-aux-data chain:
/// π/2 on data, `V_Δ`, π/2 on data about the same axis.
pub fn mediated_objective(chain: &ChainSpec, delta: f64, rabi: f64, data: Species, options: &ModelOptions) -> Result<f64> {
    let data_sites: Vec<usize> = chain.sites_of(data).collect();
    if data_sites.len() != 2 || chain.n_sites() != 3 || chain.species(1) == data {
        return Err(Error::Precondition("expected a data-aux-data chain".into()));
    }
    let mut schedule = vec![DriveSegment::pulse(data, FRAC_PI_2, 0.0, rabi).with_label("init")];
    schedule.extend(mediated_gate_schedule(delta, rabi, data));
    schedule.push(DriveSegment::pulse(data, FRAC_PI_2, 0.0, rabi).with_label("close"));
    let noise = NoiseConfig::noiseless(0);
    let vac = QuantumState::vacuum(chain);
    let ctx = TrajectoryContext { noise: &noise, options, frozen: FrozenNoise::none(3) };
    let mut rng = stream_rng(0, 0);
    let (out, _) = evolve_observed(&vac, &schedule, &ctx, &mut rng, |_, _| {})?;
    let pops = out.populations();
    Ok(((1.0 - 2.0 * pops[data_sites[0]]) * (1.0 - 2.0 * pops[data_sites[1]])).abs())
}

/// Arg-min of `objective` over `grid`, refined by a parabola through the
/// best grid point and its neighbours.
pub fn optimize_detuning(grid: &[f64], mut objective: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
    if grid.is_empty() {
        return Err(invalid("detuning grid is empty"));
    }
    let values = grid.iter().map(|&d| objective(d)).collect::<Result<Vec<f64>>>()?;
    let best = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    if best == 0 || best + 1 == grid.len() {
        return Ok(grid[best]);
    }
    let (x0, x1, x2) = (grid[best - 1], grid[best], grid[best + 1]);
    let (y0, y1, y2) = (values[best - 1], values[best], values[best + 1]);
    let denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
    let a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
    let b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
    if !(a > 0.0) || !a.is_finite() {
        return Ok(x1);
    }
    Ok((-b / (2.0 * a)).clamp(x0, x2))
}

/// Physical gate calibration on a data-aux-data chain.
pub fn optimize_mediated_detuning(
    chain: &ChainSpec,
    data: Species,
    rabi: f64,
    options: &ModelOptions,
    delta_grid: &[f64],
) -> Result<f64> {
    optimize_detuning(delta_grid, |d| mediated_objective(chain, d, rabi, data, options))
}
