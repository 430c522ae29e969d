use crate::error::invalid;
use crate::prelude::*;

/// Metadata carried with a set of measured bitstrings.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ShotMeta {
    /// Time step (pulse count) at which the shots were taken.
    pub step: Option<usize>,
    /// Readout basis angle α of a rotated readout, radians.
    pub basis_angle: Option<f64>,
    pub seed: u64,
    pub postselected: bool,
    /// Free-form labels such as `"even"` / `"odd"` readout class.
    pub flags: Vec<String>,
}

/// Measured bitstrings, one `Vec<u8>` of 0/1 per shot with site 0 first.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotEnsemble {
    pub bitstrings: Vec<Vec<u8>>,
    pub meta: ShotMeta,
}

impl ShotEnsemble {
    pub fn new(bitstrings: Vec<Vec<u8>>, meta: ShotMeta) -> Self {
        ShotEnsemble { bitstrings, meta }
    }

    /// Validating constructor: every shot has the same length and only 0/1.
    pub fn try_new(bitstrings: Vec<Vec<u8>>, meta: ShotMeta) -> Result<Self> {
        if let Some(first) = bitstrings.first() {
            let n = first.len();
            for (k, b) in bitstrings.iter().enumerate() {
                if b.len() != n {
                    return Err(invalid(format!("shot {k} has length {} instead of {n}", b.len())));
                }
                if b.iter().any(|&x| x > 1) {
                    return Err(invalid(format!("shot {k} contains a non-binary value")));
                }
            }
        }
        Ok(Self::new(bitstrings, meta))
    }

    pub fn len(&self) -> usize {
        self.bitstrings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bitstrings.is_empty()
    }

    pub fn n_sites(&self) -> usize {
        self.bitstrings.first().map_or(0, |b| b.len())
    }

    /// Mean of each site's outcome with its standard error.
    pub fn site_means(&self) -> Vec<(f64, f64)> {
        let n = self.n_sites();
        let shots = self.len().max(1) as f64;
        (0..n)
            .map(|s| {
                let ones = self.bitstrings.iter().filter(|b| b[s] == 1).count() as f64;
                let p = ones / shots;
                (p, (p * (1.0 - p) / shots).sqrt())
            })
            .collect()
    }

    /// Empirical distribution over bitstrings indexed with site 0 as the
    /// most significant bit.
    pub fn distribution(&self) -> Result<Vec<f64>> {
        let n = self.n_sites();
        if n > 24 {
            return Err(invalid("distribution limited to 24 sites"));
        }
        let mut dist = vec![0.0; 1 << n];
        for b in &self.bitstrings {
            dist[bits_to_label(b)] += 1.0;
        }
        let total = self.len() as f64;
        if total > 0.0 {
            dist.iter_mut().for_each(|p| *p /= total);
        }
        Ok(dist)
    }

    /// Mean parity `∏(1 − 2bᵢ)` over `sites` and its standard error.
    pub fn parity(&self, sites: &[usize]) -> (f64, f64) {
        let shots = self.len() as f64;
        if shots == 0.0 {
            return (0.0, 0.0);
        }
        let sum: f64 = self.bitstrings.iter().map(|b| shot_parity(b, sites)).sum();
        let mean = sum / shots;
        (mean, ((1.0 - mean * mean).max(0.0) / shots).sqrt())
    }

    /// Keep shots satisfying `keep`; returns the filtered ensemble and the
    /// discarded fraction.
    pub fn postselect(&self, keep: impl Fn(&[u8]) -> bool) -> (ShotEnsemble, f64) {
        let kept: Vec<Vec<u8>> = self.bitstrings.iter().filter(|b| keep(b)).cloned().collect();
        let discarded = if self.is_empty() {
            0.0
        } else {
            1.0 - kept.len() as f64 / self.len() as f64
        };
        let mut meta = self.meta.clone();
        meta.postselected = true;
        (ShotEnsemble::new(kept, meta), discarded)
    }

    /// Restrict every shot to `sites` (in the given order).
    pub fn restrict(&self, sites: &[usize]) -> ShotEnsemble {
        let bitstrings = self.bitstrings.iter().map(|b| sites.iter().map(|&s| b[s]).collect()).collect();
        ShotEnsemble::new(bitstrings, self.meta.clone())
    }
}

/// Parity `∏(1 − 2bᵢ)` of a single shot over `sites`.
pub fn shot_parity(bits: &[u8], sites: &[usize]) -> f64 {
    if sites.iter().filter(|&&s| bits[s] == 1).count() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Bitstring → label with site 0 most significant.
pub fn bits_to_label(bits: &[u8]) -> usize {
    bits.iter().fold(0usize, |acc, &b| (acc << 1) | (b as usize & 1))
}

/// Label → bitstring of length `n`.
pub fn label_to_bits(label: usize, n: usize) -> Vec<u8> {
    (0..n).map(|s| ((label >> (n - 1 - s)) & 1) as u8).collect()
}
