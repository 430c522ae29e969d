//! Quasiparticle growth from the vacuum for a list of pulse areas.

use std::f64::consts::PI;

use rydqca_core::physical::pxp_schedule;
use rydqca_core::qca_ideal::pxp_sequence;
use rydqca_core::quasiparticle::{mean_q_exact, quasiparticle_growth};
use rydqca_core::{QuantumState, ShotEnsemble};
use serde_json::json;

use super::{num, Artifacts};
use crate::config::{EngineKind, LoadedConfig};
use crate::engine::{run_trajectories, sample_sequence};
use crate::error::Result;
use crate::io::{f, Table};

pub fn run(cfg: &LoadedConfig) -> Result<Artifacts> {
    let c = &cfg.config;
    let chain = cfg.chain()?;
    let n_pulses = c.schedule.n_pulses.unwrap_or(0);
    let vac = QuantumState::vacuum(&chain);
    let mut table = Table::new(&["theta_over_pi", "pulses", "retained", "exact_mean_q", "mean_q", "stderr"]);
    let mut summary = Vec::new();

    for &t in &c.schedule.thetas_over_pi {
        let theta = t * PI;
        let (exact, shots): (Option<Vec<f64>>, Vec<ShotEnsemble>) = match c.engine {
            EngineKind::Physical => {
                let schedule = pxp_schedule(&chain, n_pulses, &cfg.pxp_options(&chain, theta));
                (None, run_trajectories(&vac, &schedule, &cfg.noise(), &cfg.model_options(), c.shots)?.shots)
            }
            _ => {
                let states = pxp_sequence(&vac, n_pulses, theta)?;
                let exact = states.iter().map(mean_q_exact).collect::<rydqca_core::Result<Vec<f64>>>()?;
                let shots = if c.shots > 0 { sample_sequence(&states, c.shots, c.seed)? } else { Vec::new() };
                (Some(exact), shots)
            }
        };
        let sampled = quasiparticle_growth(&shots, false)?;
        for k in 0..=n_pulses {
            let ex = exact.as_ref().map_or(String::new(), |e| f(e[k]));
            let (m, se) = sampled.get(k).map_or((String::new(), String::new()), |g| (f(g.mean_q), f(g.stderr)));
            table.push(vec![f(t), k.to_string(), (k % 3 != 0).to_string(), ex, m, se]);
        }
        let final_q = match &exact {
            Some(e) => e[n_pulses],
            None => sampled.last().map_or(f64::NAN, |g| g.mean_q),
        };
        let retained_max = (0..=n_pulses)
            .filter(|k| k % 3 != 0)
            .map(|k| match &exact {
                Some(e) => e[k],
                None => sampled[k].mean_q,
            })
            .fold(0.0, f64::max);
        summary.push(json!({
            "theta_over_pi": num(t),
            "final_mean_q": num(final_q),
            "max_retained_mean_q": num(retained_max),
        }));
    }

    let mut art = Artifacts::default();
    art.add_table("growth.csv", table);
    art.add_report(
        "rotation_scan.json",
        json!({
            "experiment": "rotation_scan",
            "engine": c.engine.to_string(),
            "n_sites": chain.n_sites(),
            "n_pulses": n_pulses,
            "runs": summary,
        }),
    );
    Ok(art)
}
