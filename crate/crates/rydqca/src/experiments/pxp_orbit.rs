//! Global alternating pulse sequence: populations, staggered magnetization
//! and its decay fit.

use std::f64::consts::PI;

use rydqca_core::physical::pxp_schedule;
use rydqca_core::qca_ideal::pxp_sequence;
use rydqca_core::quasiparticle::{fit_magnetization_decay, staggered_from_populations};
use serde_json::json;

use super::{initial_state, num, pattern_string, Artifacts};
use crate::config::{EngineKind, LoadedConfig};
use crate::engine::{run_trajectories, sample_sequence};
use crate::error::Result;
use crate::io::{f, Table};

/// Smallest `p ≥ 1` with `pops[k + p] ≈ pops[k]` for every available `k`.
pub fn population_period(pops: &[Vec<f64>], tol: f64) -> Option<usize> {
    (1..pops.len()).find(|&p| {
        (0..pops.len() - p).all(|k| pops[k].iter().zip(&pops[k + p]).all(|(a, b)| (a - b).abs() < tol))
    })
}

pub fn run(cfg: &LoadedConfig) -> Result<Artifacts> {
    let c = &cfg.config;
    let chain = cfg.chain()?;
    let n_pulses = c.schedule.n_pulses.unwrap_or(0);
    let theta = c.schedule.theta_over_pi * PI;
    let init = initial_state(cfg, &chain)?;
    let mut art = Artifacts::default();
    let mut report = json!({
        "experiment": "pxp_orbit",
        "engine": c.engine.to_string(),
        "n_sites": chain.n_sites(),
        "n_pulses": n_pulses,
        "theta_over_pi": c.schedule.theta_over_pi,
    });

    // pops[k][j] = (mean, stderr); mags[k] = (mean, stderr)
    let (pops, mags): (Vec<Vec<(f64, f64)>>, Vec<Option<(f64, f64)>>) = match c.engine {
        EngineKind::Physical => {
            let schedule = pxp_schedule(&chain, n_pulses, &cfg.pxp_options(&chain, theta));
            let run = run_trajectories(&init, &schedule, &cfg.noise(), &cfg.model_options(), c.shots)?;
            let pattern = chain.pattern().to_vec();
            let mags = if staggered_from_populations(&pattern, &vec![0.0; chain.n_sites()]).is_ok() {
                run.statistic(|p| staggered_from_populations(&pattern, p).unwrap_or(f64::NAN))
                    .into_iter()
                    .map(Some)
                    .collect()
            } else {
                vec![None; n_pulses + 1]
            };
            report["n_trajectories"] = json!(run.n_trajectories());
            report["n_jumps"] = json!(run.n_jumps);
            art.add_step_shots(&run.shots, &pattern_string(&chain));
            (run.populations(), mags)
        }
        _ => {
            let states = pxp_sequence(&init, n_pulses, theta)?;
            let last = states.last().expect("sequence includes the initial state");
            report["return_fidelity"] = num(last.overlap(&init)?);
            let exact: Vec<Vec<f64>> = states.iter().map(|s| s.populations()).collect();
            report["period"] = json!(population_period(&exact, 1e-10));
            if c.shots > 0 {
                art.add_step_shots(&sample_sequence(&states, c.shots, c.seed)?, &pattern_string(&chain));
            }
            let mags = exact
                .iter()
                .map(|p| staggered_from_populations(chain.pattern(), p).ok().map(|m| (m, 0.0)))
                .collect();
            (exact.into_iter().map(|p| p.into_iter().map(|x| (x, 0.0)).collect()).collect(), mags)
        }
    };

    let mut table = Table::new(&["step", "site", "mean", "stderr"]);
    for (k, row) in pops.iter().enumerate() {
        for (j, (m, e)) in row.iter().enumerate() {
            table.push(vec![k.to_string(), j.to_string(), f(*m), f(*e)]);
        }
    }
    art.add_table("populations.csv", table);

    if mags.iter().all(Option::is_some) {
        let m: Vec<(f64, f64)> = mags.into_iter().flatten().collect();
        let mut table = Table::new(&["step", "mean", "stderr"]);
        for (k, (v, e)) in m.iter().enumerate() {
            table.push(vec![k.to_string(), f(*v), f(*e)]);
        }
        art.add_table("magnetization.csv", table);
        let window = c.analysis.fit_window.unwrap_or(n_pulses).min(n_pulses);
        let values: Vec<f64> = m[..=window].iter().map(|x| x.0).collect();
        if let Ok(fit) = fit_magnetization_decay(&values) {
            report["decay"] = json!({
                "window": window,
                "tau_pulses": num(fit.tau),
                "amplitude": num(fit.amplitude),
                "rss": num(fit.rss),
            });
        }
    }
    art.add_report("pxp_orbit.json", report);
    Ok(art)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn period_detection() {
        let seq: Vec<Vec<f64>> = (0..13).map(|k| vec![(k % 6) as f64]).collect();
        assert_eq!(population_period(&seq, 1e-12), Some(6));
        let flat = vec![vec![0.5]; 4];
        assert_eq!(population_period(&flat, 1e-12), Some(1));
        let growing: Vec<Vec<f64>> = (0..5).map(|k| vec![k as f64]).collect();
        assert_eq!(population_period(&growing, 1e-12), None);
    }
}
