//! Domain-wall dynamics: conditioned position histograms and mean `Q`.

use std::f64::consts::PI;

use rydqca_core::physical::{pxp_schedule, DriveSegment};
use rydqca_core::qca_ideal::{masked_init_pulse, pxp_sequence};
use rydqca_core::quasiparticle::{detect, mean_q, mean_q_exact, position_histogram};
use rydqca_core::statevec::label_to_bits;
use rydqca_core::{ChainSpec, QuantumState, ShotEnsemble, Species};
use serde_json::json;

use super::{initial_state, num, pattern_string, Artifacts};
use crate::config::{EngineKind, LoadedConfig};
use crate::engine::{run_trajectories, sample_sequence};
use crate::error::Result;
use crate::io::{f, Table};

/// B sites left dark by the wall initialization (those left of `first`).
pub fn wall_mask(chain: &ChainSpec, first: usize) -> Vec<usize> {
    chain.sites_of(Species::B).filter(|&s| s < first).collect()
}

/// Exact distribution of detector positions over outcomes with exactly `k`
/// quasiparticles, and the total probability of those outcomes.
pub fn exact_position_distribution(state: &QuantumState, k: usize) -> Result<(Vec<f64>, f64)> {
    let n = state.n_sites();
    let dist = state.outcome_distribution()?;
    let mut out = vec![0.0; n];
    let mut total = 0.0;
    for (label, &p) in dist.iter().enumerate() {
        if p < 1e-15 {
            continue;
        }
        let rec = detect(&label_to_bits(label, n))?;
        if rec.count() == k {
            total += p;
            for j in rec.positions {
                out[j] += p;
            }
        }
    }
    if total > 0.0 {
        out.iter_mut().for_each(|x| *x /= total);
    }
    Ok((out, total))
}

fn argmax(v: &[f64]) -> Option<usize> {
    let max = v.iter().copied().fold(0.0, f64::max);
    (max > 0.0).then(|| v.iter().position(|&x| x == max)).flatten()
}

pub fn run(cfg: &LoadedConfig) -> Result<Artifacts> {
    let c = &cfg.config;
    let chain = cfg.chain()?;
    let n_pulses = c.schedule.n_pulses.unwrap_or(0);
    let theta = c.schedule.theta_over_pi * PI;
    let k = c.analysis.histogram_q;
    let mut art = Artifacts::default();

    let mask = c.schedule.wall_first.map(|first| wall_mask(&chain, first));
    let (ensembles, exact): (Vec<ShotEnsemble>, Option<Vec<QuantumState>>) = match c.engine {
        EngineKind::Physical => {
            let init = initial_state(cfg, &chain)?;
            let mut schedule = Vec::new();
            if let Some(m) = &mask {
                schedule.push(DriveSegment::pulse(Species::B, PI, 0.0, c.schedule.rabi_mhz).with_mask(m.clone()).with_label("wall init"));
            }
            schedule.extend(pxp_schedule(&chain, n_pulses, &cfg.pxp_options(&chain, theta)));
            let run = run_trajectories(&init, &schedule, &cfg.noise(), &cfg.model_options(), c.shots)?;
            let skip = usize::from(mask.is_some());
            let shots: Vec<ShotEnsemble> = run.shots[skip..]
                .iter()
                .enumerate()
                .map(|(step, e)| {
                    let mut e = e.clone();
                    e.meta.step = Some(step);
                    e
                })
                .collect();
            (shots, None)
        }
        _ => {
            let mut init = initial_state(cfg, &chain)?;
            if let Some(m) = &mask {
                masked_init_pulse(&mut init, m, PI)?;
            }
            let states = pxp_sequence(&init, n_pulses, theta)?;
            let shots = if c.shots > 0 { sample_sequence(&states, c.shots, c.seed)? } else { Vec::new() };
            (shots, Some(states))
        }
    };

    let mut peaks = Vec::new();
    if !ensembles.is_empty() {
        let hist = position_histogram(&ensembles, k)?;
        let mut table = Table::new(&["step", "position", "count", "n_conditioned"]);
        for h in &hist {
            if let Some(counts) = &h.counts {
                for (j, &cnt) in counts.iter().enumerate().skip(1) {
                    table.push(vec![h.step.to_string(), j.to_string(), cnt.to_string(), h.n_conditioned.to_string()]);
                }
            }
            peaks.push(h.peaks().first().copied());
        }
        art.add_table("histogram.csv", table);
        art.add_step_shots(&ensembles, &pattern_string(&chain));
    }

    let mut exact_peaks = Vec::new();
    let mut table = Table::new(&["step", "mean", "stderr", "exact"]);
    for step in 0..=n_pulses {
        let (m, e) = match ensembles.get(step) {
            Some(ens) => {
                let (m, e) = mean_q(ens)?;
                (f(m), f(e))
            }
            None => (String::new(), String::new()),
        };
        let ex = match &exact {
            Some(states) => f(mean_q_exact(&states[step])?),
            None => String::new(),
        };
        table.push(vec![step.to_string(), m, e, ex]);
    }
    art.add_table("mean_q.csv", table);

    if let Some(states) = &exact {
        let mut table = Table::new(&["step", "position", "probability", "conditioned_mass"]);
        for (step, s) in states.iter().enumerate() {
            let (dist, mass) = exact_position_distribution(s, k)?;
            for (j, p) in dist.iter().enumerate().skip(1) {
                table.push(vec![step.to_string(), j.to_string(), f(*p), f(mass)]);
            }
            exact_peaks.push(argmax(&dist));
        }
        art.add_table("exact_histogram.csv", table);
    }

    let report = json!({
        "experiment": "quasiparticle",
        "engine": c.engine.to_string(),
        "n_sites": chain.n_sites(),
        "n_pulses": n_pulses,
        "conditioned_q": k,
        "wall_first": c.schedule.wall_first,
        "sampled_peaks": peaks,
        "exact_peaks": exact_peaks,
        "theta_over_pi": num(c.schedule.theta_over_pi),
    });
    art.add_report("quasiparticle.json", report);
    Ok(art)
}
