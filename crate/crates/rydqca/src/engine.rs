//! Parallel trajectory execution and seeded sampling.
//!
//! Trajectory `i` of a run always uses the same random streams, and results
//! are gathered in index order before any reduction, so thread count never
//! changes the output.

use rayon::prelude::*;
use rydqca_core::physical::{evolve_indexed, readout_populations, DriveSegment, ModelOptions, NoiseConfig};
use rydqca_core::rng::{stream_id, stream_rng, Domain};
use rydqca_core::{QuantumState, ShotEnsemble, ShotMeta};

use crate::error::Result;

/// Run `f(i)` for `i in 0..n` in parallel, results in index order.
pub fn map_indexed<T: Send>(n: usize, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..n as u64).into_par_iter().map(f).collect()
}

/// Shots taken from trajectory `i` when `total` are spread over `n`.
pub fn shots_for(total: usize, n: usize, i: usize) -> usize {
    total / n + usize::from(i < total % n)
}

fn sampling_stream(index: u64, step: usize) -> u64 {
    stream_id(Domain::Sampling, (index << 20) | step as u64)
}

/// Seeded projective samples of `state` for block `(index, step)`.
pub fn sample_state(state: &QuantumState, n_shots: usize, seed: u64, index: u64, step: usize) -> Result<Vec<Vec<u8>>> {
    let mut rng = stream_rng(seed, sampling_stream(index, step));
    Ok(state.sample_with(n_shots, &mut rng)?)
}

/// Shot ensembles for a sequence of exact states, one per step.
pub fn sample_sequence(states: &[QuantumState], n_shots: usize, seed: u64) -> Result<Vec<ShotEnsemble>> {
    states
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let bits = sample_state(s, n_shots, seed, 0, k)?;
            Ok(ShotEnsemble::new(bits, ShotMeta { step: Some(k), seed, ..Default::default() }))
        })
        .collect()
}

/// Trajectory-resolved populations and pooled shots.
#[derive(Debug, Clone)]
pub struct TrajectoryRun {
    /// `traces[i][k][j]`: readout population of site `j` after `k` segments
    /// in trajectory `i` (`k = 0` is the initial state).
    pub traces: Vec<Vec<Vec<f64>>>,
    /// Pooled shots per step; empty when no shots were requested.
    pub shots: Vec<ShotEnsemble>,
    pub n_jumps: usize,
}

impl TrajectoryRun {
    pub fn n_trajectories(&self) -> usize {
        self.traces.len()
    }

    pub fn n_steps(&self) -> usize {
        self.traces.first().map_or(0, Vec::len)
    }

    /// Mean and standard error over trajectories of `g(populations)` at
    /// every step.
    pub fn statistic(&self, g: impl Fn(&[f64]) -> f64) -> Vec<(f64, f64)> {
        let n = self.n_trajectories() as f64;
        (0..self.n_steps())
            .map(|k| {
                let vals: Vec<f64> = self.traces.iter().map(|t| g(&t[k])).collect();
                mean_stderr(&vals, n)
            })
            .collect()
    }

    /// Per-site mean and standard error at every step.
    pub fn populations(&self) -> Vec<Vec<(f64, f64)>> {
        let n_sites = self.traces.first().and_then(|t| t.first()).map_or(0, Vec::len);
        let per_site: Vec<Vec<(f64, f64)>> = (0..n_sites).map(|j| self.statistic(|p| p[j])).collect();
        (0..self.n_steps()).map(|k| per_site.iter().map(|s| s[k]).collect()).collect()
    }
}

fn mean_stderr(vals: &[f64], n: f64) -> (f64, f64) {
    let mean = vals.iter().sum::<f64>() / n;
    if vals.len() < 2 {
        return (mean, 0.0);
    }
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Integrate `noise.n_trajectories` trajectories (one when noiseless) and
/// sample `shots` bitstrings per step, spread evenly over trajectories.
pub fn run_trajectories(
    init: &QuantumState,
    schedule: &[DriveSegment],
    noise: &NoiseConfig,
    options: &ModelOptions,
    shots: usize,
) -> Result<TrajectoryRun> {
    let n_traj = if noise.is_noiseless() { 1 } else { noise.n_trajectories };
    let seed = noise.seed;
    let per: Vec<(Vec<Vec<f64>>, Vec<Vec<Vec<u8>>>, usize)> = map_indexed(n_traj, |i| {
        let take = shots_for(shots, n_traj, i as usize);
        let mut trace = vec![readout_populations(init)];
        let mut samples = vec![sample_state(init, take, seed, i, 0)?];
        let mut sample_err = None;
        let (_, jumps) = evolve_indexed(init, schedule, noise, options, seed, i, |k, s| {
            trace.push(readout_populations(s));
            match sample_state(s, take, seed, i, k + 1) {
                Ok(b) => samples.push(b),
                Err(e) => sample_err = Some(e),
            }
        })?;
        if let Some(e) = sample_err {
            return Err(e);
        }
        Ok((trace, samples, jumps.len()))
    })?;
    let n_steps = schedule.len() + 1;
    let mut shots_out = Vec::new();
    if shots > 0 {
        for k in 0..n_steps {
            let bits: Vec<Vec<u8>> = per.iter().flat_map(|(_, s, _)| s[k].iter().cloned()).collect();
            shots_out.push(ShotEnsemble::new(bits, ShotMeta { step: Some(k), seed, ..Default::default() }));
        }
    }
    let n_jumps = per.iter().map(|p| p.2).sum();
    Ok(TrajectoryRun { traces: per.into_iter().map(|p| p.0).collect(), shots: shots_out, n_jumps })
}

/// Final states of every trajectory.
pub fn final_states(
    init: &QuantumState,
    schedule: &[DriveSegment],
    noise: &NoiseConfig,
    options: &ModelOptions,
) -> Result<Vec<QuantumState>> {
    let n_traj = if noise.is_noiseless() { 1 } else { noise.n_trajectories };
    map_indexed(n_traj, |i| Ok(evolve_indexed(init, schedule, noise, options, noise.seed, i, |_, _| {})?.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rydqca_core::lattice::build_alternating_chain;
    use rydqca_core::physical::{pxp_schedule, PxpScheduleOptions};

    #[test]
    fn shots_are_spread_evenly() {
        let total: usize = (0..7).map(|i| shots_for(100, 7, i)).sum();
        assert_eq!(total, 100);
        assert_eq!(shots_for(100, 7, 0), 15);
        assert_eq!(shots_for(100, 7, 6), 14);
    }

    #[test]
    fn noisy_runs_do_not_depend_on_thread_count() {
        let chain = build_alternating_chain(3, 5.3, rydqca_core::Species::A).unwrap();
        let sched = pxp_schedule(&chain, 3, &PxpScheduleOptions::default());
        let mut noise = NoiseConfig::standard(5);
        noise.n_trajectories = 6;
        let init = QuantumState::vacuum(&chain);
        let opts = ModelOptions::default();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| run_trajectories(&init, &sched, &noise, &opts, 40)).unwrap();
        let b = three.install(|| run_trajectories(&init, &sched, &noise, &opts, 40)).unwrap();
        assert_eq!(a.traces, b.traces);
        assert_eq!(a.shots, b.shots);
        assert_eq!(a.shots[2].len(), 40);
        let pops = a.populations();
        assert_eq!(pops.len(), 4);
        assert!(pops[1][0].1 > 0.0);
    }
}
