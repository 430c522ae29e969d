//! Mediated two-qubit entangling gate on a data-aux-data triple, with the
//! Bell fidelity read out through an `r(ϑ)` sweep.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use rydqca_core::entanglement::{angle_grid, bell_fidelity_from, exact_r_sweep, exact_z_parity, max_w_direct, ParitySweep};
use rydqca_core::physical::{mediated_gate_schedule, optimize_detuning, optimize_mediated_detuning, DriveSegment};
use rydqca_core::qca_ideal::{detuning_objective, mediated_v_layer, MediatedLayer};
use rydqca_core::{ChainSpec, QuantumState, ShotEnsemble, ShotMeta, Species};
use serde_json::json;

use super::{num, Artifacts};
use crate::config::{EngineKind, LoadedConfig};
use crate::engine::{final_states, sample_state};
use crate::error::{HarnessError, Result};
use crate::io::{f, Table};

/// `⟨∏Z⟩` in the readout convention: lost atoms read `0`, i.e. `Z = +1`.
fn readout_parity(state: &QuantumState, sites: &[usize]) -> Result<f64> {
    let lost = state.lost_mask();
    let kept: Vec<usize> = sites.iter().copied().filter(|&s| !lost[s]).collect();
    Ok(exact_z_parity(state, &kept)?)
}

fn data_pair(chain: &ChainSpec, data: Species) -> Result<[usize; 2]> {
    let sites: Vec<usize> = chain.sites_of(data).collect();
    if chain.n_sites() != 3 || sites != [0, 2] {
        return Err(HarnessError::InvalidArgument(format!(
            "bell experiment needs a data-aux-data chain with data species {data}"
        )));
    }
    Ok([0, 2])
}

pub fn run(cfg: &LoadedConfig) -> Result<Artifacts> {
    let c = &cfg.config;
    let data = cfg.data_species();
    let chain = match &c.chain.pattern {
        Some(_) => cfg.chain()?,
        None => {
            let p: String = [data, data.other(), data].iter().map(|s| s.to_string()).collect();
            ChainSpec::from_pattern_str(&p, c.chain.spacing_um, cfg.c6())?
        }
    };
    let sites = data_pair(&chain, data)?;
    let thetas = angle_grid(c.schedule.readout_angles);
    let grid = c.analysis.delta_grid_over_omega.values();
    let rabi = c.schedule.rabi_mhz;
    let vac = QuantumState::vacuum(&chain);

    let (p, r, delta_star) = match c.engine {
        EngineKind::Physical => {
            let options = cfg.model_options();
            let grid_mhz: Vec<f64> = grid.iter().map(|g| g * rabi).collect();
            let delta = optimize_mediated_detuning(&chain, data, rabi, &options, &grid_mhz)?;
            let mut prep = vec![DriveSegment::pulse(data, FRAC_PI_2, FRAC_PI_2, rabi).with_label("prepare |+>")];
            prep.extend(mediated_gate_schedule(delta, rabi, data));
            let noise = cfg.noise();
            let mean = |states: &[QuantumState]| -> Result<f64> {
                let mut total = 0.0;
                for s in states {
                    total += readout_parity(s, &sites)?;
                }
                Ok(total / states.len() as f64)
            };
            let p = mean(&final_states(&vac, &prep, &noise, &options)?)?;
            let mut r = Vec::with_capacity(thetas.len());
            for &t in &thetas {
                let mut sched = prep.clone();
                sched.push(DriveSegment::pulse(data, FRAC_PI_4, t - FRAC_PI_2, rabi).with_label("r readout"));
                r.push(mean(&final_states(&vac, &sched, &noise, &options)?)?);
            }
            (p, r, delta / rabi)
        }
        _ => {
            let delta = optimize_detuning(&grid, |d| detuning_objective(&vac, &MediatedLayer::new(d, data)))?;
            let mut s = vac.clone();
            s.apply_product_rotation(data, FRAC_PI_2, FRAC_PI_2, &[])?;
            mediated_v_layer(&mut s, &MediatedLayer::with_alpha(c.schedule.alpha_over_pi * PI, data))?;
            if c.shots == 0 {
                (exact_z_parity(&s, &sites)?, exact_r_sweep(&s, data, sites, &thetas)?, delta)
            } else {
                let ens = |st: &QuantumState, k: usize| -> Result<f64> {
                    let bits = sample_state(st, c.shots, c.seed, 0, k)?;
                    Ok(ShotEnsemble::new(bits, ShotMeta::default()).parity(&sites).0)
                };
                let p = ens(&s, 0)?;
                let mut r = Vec::with_capacity(thetas.len());
                for (k, &t) in thetas.iter().enumerate() {
                    let mut st = s.clone();
                    st.apply_product_rotation(data, FRAC_PI_4, t - FRAC_PI_2, &[])?;
                    r.push(ens(&st, k + 1)?);
                }
                (p, r, delta)
            }
        }
    };

    let sweep = ParitySweep::new(thetas.clone(), r.clone(), 2)?;
    let rep = bell_fidelity_from(p, &sweep)?;
    let direct = max_w_direct(&sweep).ok();

    let mut table = Table::new(&["theta", "theta_over_pi", "r", "r_fit"]);
    let fit = rydqca_core::fit::RFit { a: rep.a, b: rep.b, theta_star: rep.theta_star, rss: rep.fit_rss };
    for (t, v) in thetas.iter().zip(&r) {
        table.push(vec![f(*t), f(t / PI), f(*v), f(fit.eval(*t))]);
    }
    let mut art = Artifacts::default();
    art.add_table("r_sweep.csv", table);
    art.add_report(
        "bell.json",
        json!({
            "experiment": "bell",
            "engine": c.engine.to_string(),
            "pattern": chain.pattern().iter().map(|s| s.to_string()).collect::<String>(),
            "data_species": data.to_string(),
            "alpha_over_pi": num(c.schedule.alpha_over_pi),
            "fidelity": num(rep.report.fidelity),
            "fidelity_unclipped": num(rep.report.fidelity_unclipped),
            "P": num(p),
            "max_w": num(rep.report.coherence_term),
            "max_w_direct": direct.map(num),
            "a": num(rep.a),
            "b": num(rep.b),
            "theta_star": num(rep.theta_star),
            "theta_star_over_pi": num(rep.theta_star / PI),
            "fit_rss": num(rep.fit_rss),
            "delta_star_over_omega": num(delta_star),
            "warnings": rep.report.warnings,
        }),
    );
    Ok(art)
}
