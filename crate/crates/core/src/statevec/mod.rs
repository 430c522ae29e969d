//! Dense state vectors over mixed 2-/3-level sites.
//!
//! Basis labels use site 0 as the most significant digit. Two-level sites
//! hold `{|0⟩, |1⟩}` at levels `0, 1`; three-level sites hold
//! `{|0⟩, |e⟩, |1⟩}` at levels `0, 1, 2`. The Rydberg level is always the
//! last one, and a readout character `'1'` means Rydberg.

mod pauli;
mod shots;

use alloc::sync::Arc;

use rand::Rng;

pub use pauli::{PauliFactor, PauliString};
pub(crate) use pauli::single_product;
pub use shots::{bits_to_label, label_to_bits, shot_parity, ShotEnsemble, ShotMeta};

use crate::error::invalid;
use crate::lattice::{ChainSpec, Species};
use crate::prelude::*;
use crate::rng::{stream_id, stream_rng, Domain};

/// Hard cap on the number of stored amplitudes.
pub const MAX_AMPLITUDES: usize = 1 << 24;

/// Tolerance for normalization checks on public states.
pub const NORM_TOL: f64 = 1e-9;

/// Rydberg level index for a site of dimension `dim`.
#[inline]
pub fn rydberg_level(dim: u8) -> usize {
    dim as usize - 1
}

/// Single-site ket, either two or three complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteKet(pub Vec<C64>);

impl SiteKet {
    pub fn ground() -> Self {
        SiteKet(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)])
    }

    pub fn rydberg() -> Self {
        SiteKet(vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)])
    }

    /// `(|0⟩ + |1⟩)/√2`.
    pub fn plus() -> Self {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        SiteKet(vec![C64::new(h, 0.0), C64::new(h, 0.0)])
    }

    pub fn bit(b: bool) -> Self {
        if b {
            Self::rydberg()
        } else {
            Self::ground()
        }
    }

    /// Three-level ket with all weight on |0⟩ or |1⟩.
    pub fn three_level(b: bool) -> Self {
        let mut v = vec![C64::new(0.0, 0.0); 3];
        v[if b { 2 } else { 0 }] = C64::new(1.0, 0.0);
        SiteKet(v)
    }
}

#[derive(Debug, Clone)]
pub struct QuantumState {
    chain: Arc<ChainSpec>,
    dims: Vec<u8>,
    strides: Vec<usize>,
    amps: Vec<C64>,
    lost: Vec<bool>,
}

fn strides_for(dims: &[u8]) -> Result<(Vec<usize>, usize)> {
    let mut strides = vec![0usize; dims.len()];
    let mut total = 1usize;
    for (k, &d) in dims.iter().enumerate().rev() {
        if d != 2 && d != 3 {
            return Err(invalid(format!("site {k} has unsupported dimension {d}")));
        }
        strides[k] = total;
        total = total
            .checked_mul(d as usize)
            .filter(|t| *t <= MAX_AMPLITUDES)
            .ok_or_else(|| invalid(format!("state exceeds the {MAX_AMPLITUDES}-amplitude cap")))?;
    }
    Ok((strides, total))
}

impl QuantumState {
    /// Tensor product of per-site kets in site order.
    pub fn product_state(chain: &ChainSpec, site_kets: &[SiteKet]) -> Result<Self> {
        Self::product_state_shared(Arc::new(chain.clone()), site_kets)
    }

    pub fn product_state_shared(chain: Arc<ChainSpec>, site_kets: &[SiteKet]) -> Result<Self> {
        if site_kets.len() != chain.n_sites() {
            return Err(invalid(format!(
                "{} site kets for {} sites",
                site_kets.len(),
                chain.n_sites()
            )));
        }
        let mut dims = Vec::with_capacity(site_kets.len());
        for (k, ket) in site_kets.iter().enumerate() {
            let norm: f64 = ket.0.iter().map(|a| a.norm_sqr()).sum();
            if (norm - 1.0).abs() > NORM_TOL {
                return Err(invalid(format!("site ket {k} has squared norm {norm}")));
            }
            dims.push(ket.0.len() as u8);
        }
        let (strides, total) = strides_for(&dims)?;
        let mut amps = vec![C64::new(1.0, 0.0)];
        amps.reserve(total);
        for ket in site_kets {
            let mut next = Vec::with_capacity(amps.len() * ket.0.len());
            for a in &amps {
                for b in &ket.0 {
                    next.push(a * b);
                }
            }
            amps = next;
        }
        let lost = vec![false; dims.len()];
        Ok(QuantumState { chain, dims, strides, amps, lost })
    }

    /// All sites in |0⟩, every site two-level.
    pub fn vacuum(chain: &ChainSpec) -> Self {
        Self::basis_state(chain, &vec![0u8; chain.n_sites()]).expect("vacuum fits in memory")
    }

    /// Computational basis state from 0/1 occupations, two-level sites.
    pub fn basis_state(chain: &ChainSpec, bits: &[u8]) -> Result<Self> {
        let kets: Vec<SiteKet> = bits.iter().map(|&b| SiteKet::bit(b != 0)).collect();
        Self::product_state(chain, &kets)
    }

    /// Build from raw amplitudes; the vector must be normalized.
    pub fn from_amplitudes(chain: &ChainSpec, dims: Vec<u8>, amps: Vec<C64>) -> Result<Self> {
        if dims.len() != chain.n_sites() {
            return Err(invalid("dimension list does not match chain"));
        }
        let (strides, total) = strides_for(&dims)?;
        if amps.len() != total {
            return Err(invalid(format!("expected {total} amplitudes, got {}", amps.len())));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(invalid(format!("amplitudes have squared norm {norm}")));
        }
        let lost = vec![false; dims.len()];
        Ok(QuantumState { chain: Arc::new(chain.clone()), dims, strides, amps, lost })
    }

    pub fn chain(&self) -> &ChainSpec {
        &self.chain
    }

    pub fn n_sites(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[u8] {
        &self.dims
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn is_two_level(&self) -> bool {
        self.dims.iter().all(|&d| d == 2)
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn lost_mask(&self) -> &[bool] {
        &self.lost
    }

    pub(crate) fn set_lost(&mut self, site: usize) {
        self.lost[site] = true;
    }

    /// Level of `site` in basis label `index`.
    #[inline]
    pub fn level(&self, index: usize, site: usize) -> usize {
        (index / self.strides[site]) % self.dims[site] as usize
    }

    /// Basis index for per-site levels.
    pub fn index_of(&self, levels: &[usize]) -> usize {
        levels.iter().zip(&self.strides).map(|(l, s)| l * s).sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub(crate) fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            let inv = 1.0 / n;
            self.amps.iter_mut().for_each(|a| *a *= inv);
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &QuantumState) -> Result<C64> {
        if self.dims != other.dims {
            return Err(invalid("inner product of states with different layouts"));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|⟨self|other⟩|²`.
    pub fn overlap(&self, other: &QuantumState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Largest amplitude deviation after removing the global phase.
    pub fn distance_mod_phase(&self, other: &QuantumState) -> Result<f64> {
        let ip = self.inner(other)?;
        let phase = if ip.norm() > 0.0 { ip / ip.norm() } else { C64::new(1.0, 0.0) };
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a * phase - b).norm())
            .fold(0.0, f64::max))
    }

    /// Per-site Rydberg populations `⟨n_j⟩`.
    pub fn populations(&self) -> Vec<f64> {
        let n = self.n_sites();
        let mut pops = vec![0.0; n];
        for (idx, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            for (site, pop) in pops.iter_mut().enumerate() {
                if self.level(idx, site) == rydberg_level(self.dims[site]) {
                    *pop += p;
                }
            }
        }
        pops
    }

    /// Population of the intermediate level on each site (zero for
    /// two-level sites).
    pub fn intermediate_populations(&self) -> Vec<f64> {
        let mut pops = vec![0.0; self.n_sites()];
        for (idx, a) in self.amps.iter().enumerate() {
            for (site, pop) in pops.iter_mut().enumerate() {
                if self.dims[site] == 3 && self.level(idx, site) == 1 {
                    *pop += a.norm_sqr();
                }
            }
        }
        pops
    }

    /// Readout bit for `site` in basis label `index`: Rydberg reads `1`,
    /// ground, intermediate and lost atoms read `0`.
    #[inline]
    pub fn readout_bit(&self, index: usize, site: usize) -> u8 {
        if self.lost[site] {
            return 0;
        }
        (self.level(index, site) == rydberg_level(self.dims[site])) as u8
    }

    /// Probability of each readout bitstring, indexed with site 0 as the
    /// most significant bit. Length `2^n`.
    pub fn outcome_distribution(&self) -> Result<Vec<f64>> {
        let n = self.n_sites();
        if n > 24 {
            return Err(invalid("outcome distribution limited to 24 sites"));
        }
        let mut dist = vec![0.0; 1 << n];
        for (idx, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            dist[self.readout_label(idx)] += p;
        }
        Ok(dist)
    }

    fn readout_label(&self, idx: usize) -> usize {
        let n = self.n_sites();
        (0..n).fold(0usize, |acc, site| (acc << 1) | self.readout_bit(idx, site) as usize)
    }

    /// Apply a 2×2 matrix `[[m00, m01], [m10, m11]]` to the {|0⟩, |1⟩}
    /// block of `site`.
    pub fn apply_site_matrix(&mut self, site: usize, m: [[C64; 2]; 2]) {
        let stride = self.strides[site];
        let d = self.dims[site] as usize;
        let r = rydberg_level(self.dims[site]);
        let block = stride * d;
        for base in (0..self.amps.len()).step_by(block) {
            for off in 0..stride {
                let i0 = base + off;
                let i1 = i0 + r * stride;
                let a0 = self.amps[i0];
                let a1 = self.amps[i1];
                self.amps[i0] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[i1] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    /// Multiply each amplitude by `f(index)`.
    pub fn apply_diagonal(&mut self, f: impl Fn(usize) -> C64) {
        for (idx, a) in self.amps.iter_mut().enumerate() {
            *a *= f(idx);
        }
    }

    /// Rotation `exp(-iθ/2 [cos φ X + sin φ Y])` on every site of `species`
    /// not listed in `mask`.
    pub fn apply_product_rotation(
        &mut self,
        species: Species,
        theta: f64,
        axis_phase: f64,
        mask: &[usize],
    ) -> Result<()> {
        for &m in mask {
            if m >= self.n_sites() || self.chain.species(m) != species {
                return Err(invalid(format!("masked site {m} is not a {species} site")));
            }
        }
        let u = rotation_matrix(theta, axis_phase);
        let sites: Vec<usize> = self.chain.sites_of(species).filter(|s| !mask.contains(s)).collect();
        for s in sites {
            self.apply_site_matrix(s, u);
        }
        Ok(())
    }

    /// Complex expectation `⟨ψ|P|ψ⟩` for a Pauli string on the {|0⟩,|1⟩}
    /// blocks.
    pub fn expect_complex(&self, op: &PauliString) -> Result<C64> {
        let n = self.n_sites();
        if op.len() > n {
            return Err(invalid(format!("Pauli string of length {} on {n} sites", op.len())));
        }
        let touched: Vec<usize> = op.support().collect();
        for &site in &touched {
            if self.dims[site] == 3 {
                let e = self.intermediate_populations()[site];
                if e > 1e-9 {
                    return Err(Error::Precondition(format!(
                        "site {site} has intermediate-level population {e:.3e}"
                    )));
                }
            }
        }
        let mut acc = C64::new(0.0, 0.0);
        for (idx, a) in self.amps.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let mut target = idx;
            let mut coeff = C64::new(1.0, 0.0);
            let mut vanishes = false;
            for &site in &touched {
                let d = self.dims[site];
                let r = rydberg_level(d);
                let l = self.level(idx, site);
                if d == 3 && l == 1 {
                    vanishes = true;
                    break;
                }
                let bit = l == r;
                let (c, flip) = op.factor(site).action(bit);
                coeff *= c;
                if flip {
                    let jump = r * self.strides[site];
                    target = if bit { target - jump } else { target + jump };
                }
            }
            if !vanishes {
                acc += self.amps[target].conj() * coeff * a;
            }
        }
        Ok(acc * op.sign())
    }

    /// Real expectation of a Hermitian Pauli string.
    pub fn expect(&self, op: &PauliString) -> Result<f64> {
        if !op.is_hermitian() {
            return Err(invalid(format!("Pauli string {op} is not Hermitian")));
        }
        let v = self.expect_complex(op)?;
        if v.im.abs() > 1e-9 {
            return Err(Error::Internal(format!(
                "Hermitian expectation has imaginary part {:.3e}",
                v.im
            )));
        }
        Ok(v.re)
    }

    /// `n_shots` projective readouts, deterministic in `seed`.
    pub fn sample(&self, n_shots: usize, seed: u64) -> Result<ShotEnsemble> {
        if n_shots == 0 {
            return Err(invalid("n_shots must be at least 1"));
        }
        let mut rng = stream_rng(seed, stream_id(Domain::Sampling, 0));
        let shots = self.sample_with(n_shots, &mut rng)?;
        Ok(ShotEnsemble::new(shots, ShotMeta { seed, ..ShotMeta::default() }))
    }

    /// Draw readout bitstrings with an external generator.
    pub fn sample_with<R: Rng + ?Sized>(&self, n_shots: usize, rng: &mut R) -> Result<Vec<Vec<u8>>> {
        let n = self.n_sites();
        let mut cumulative = Vec::with_capacity(self.amps.len());
        let mut total = 0.0;
        for a in &self.amps {
            total += a.norm_sqr();
            cumulative.push(total);
        }
        if !(total > 0.0) {
            return Err(Error::Internal("cannot sample from a zero vector".into()));
        }
        let mut out = Vec::with_capacity(n_shots);
        for _ in 0..n_shots {
            let u: f64 = rng.gen::<f64>() * total;
            let idx = cumulative.partition_point(|&c| c <= u).min(self.amps.len() - 1);
            out.push((0..n).map(|s| self.readout_bit(idx, s)).collect());
        }
        Ok(out)
    }
}

/// Matrix of `exp(-iθ/2 [cos φ X + sin φ Y])`.
pub fn rotation_matrix(theta: f64, axis_phase: f64) -> [[C64; 2]; 2] {
    let c = (theta / 2.0).cos();
    let s = (theta / 2.0).sin();
    let minus_i_s = C64::new(0.0, -s);
    [
        [C64::new(c, 0.0), minus_i_s * C64::from_polar(1.0, -axis_phase)],
        [minus_i_s * C64::from_polar(1.0, axis_phase), C64::new(c, 0.0)],
    ]
}

#[cfg(test)]
mod tests;
