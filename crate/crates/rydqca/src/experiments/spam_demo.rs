//! Detection errors applied shot by shot to a known state, then removed
//! again by inverting the per-atom confusion maps.

use std::f64::consts::PI;

use rand::Rng;
use rydqca_core::qca_ideal::pxp_sequence;
use rydqca_core::rng::{stream_id, stream_rng, Domain};
use rydqca_core::spam::{correct, marginal, single_atom_map};
use rydqca_core::{ShotEnsemble, ShotMeta, Species};
use serde_json::json;

use super::{initial_state, num, pattern_string, Artifacts};
use crate::config::LoadedConfig;
use crate::engine::sample_state;
use crate::error::Result;
use crate::io::{f, ShotFile, Table};

/// Largest chain whose full outcome distribution is corrected at once.
const FULL_CORRECTION_SITES: usize = 16;

pub fn run(cfg: &LoadedConfig) -> Result<Artifacts> {
    let c = &cfg.config;
    let chain = cfg.chain()?;
    let n = chain.n_sites();
    let params = c.spam.params();
    let n_pulses = c.schedule.n_pulses.unwrap_or(0);
    let init = initial_state(cfg, &chain)?;
    let state = pxp_sequence(&init, n_pulses, c.schedule.theta_over_pi * PI)?.pop().expect("non-empty");
    let truth = state.populations();

    let clean = sample_state(&state, c.shots, c.seed, 0, 0)?;
    let maps = [single_atom_map(&params, Species::A)?, single_atom_map(&params, Species::B)?];
    let mut rng = stream_rng(c.seed, stream_id(Domain::Experiment, 0));
    let noisy: Vec<Vec<u8>> = clean
        .iter()
        .map(|shot| {
            shot.iter()
                .enumerate()
                .map(|(s, &t)| {
                    let m = &maps[chain.species(s).index()];
                    u8::from(rng.gen::<f64>() < m[1][t as usize])
                })
                .collect()
        })
        .collect();
    let meta = ShotMeta { step: Some(n_pulses), seed: c.seed, ..Default::default() };
    let measured = ShotEnsemble::new(noisy, meta.clone());
    let clean = ShotEnsemble::new(clean, meta);

    let raw = measured.site_means();
    let (corrected, clipped): (Vec<f64>, Option<f64>) = if n <= FULL_CORRECTION_SITES {
        let fixed = correct(&measured.distribution()?, &chain, &params)?;
        let p1 = (0..n).map(|s| marginal(&fixed.dist, n, &[s])[1]).collect();
        (p1, Some(fixed.clipped_mass))
    } else {
        let p1 = (0..n)
            .map(|s| {
                let m = raw[s].0;
                let inv = rydqca_core::spam::correct_marginal(&[1.0 - m, m], &chain, &[s], &params)?;
                Ok(inv[1])
            })
            .collect::<rydqca_core::Result<Vec<f64>>>()?;
        (p1, None)
    };

    let mut table = Table::new(&["site", "species", "true_p1", "clean_p1", "raw_p1", "corrected_p1"]);
    let clean_means = clean.site_means();
    let mut worst_raw: f64 = 0.0;
    let mut worst_corrected: f64 = 0.0;
    for s in 0..n {
        worst_raw = worst_raw.max((raw[s].0 - truth[s]).abs());
        worst_corrected = worst_corrected.max((corrected[s] - truth[s]).abs());
        table.push(vec![
            s.to_string(),
            chain.species(s).to_string(),
            f(truth[s]),
            f(clean_means[s].0),
            f(raw[s].0),
            f(corrected[s]),
        ]);
    }

    let mut art = Artifacts::default();
    art.add_table("spam.csv", table);
    let pattern = pattern_string(&chain);
    art.shots.push(("shots/clean.shots".into(), ShotFile { ensemble: clean, pattern: Some(pattern.clone()) }));
    art.shots.push(("shots/measured.shots".into(), ShotFile { ensemble: measured, pattern: Some(pattern) }));
    art.add_report(
        "spam_demo.json",
        json!({
            "experiment": "spam_demo",
            "engine": c.engine.to_string(),
            "n_sites": n,
            "shots": c.shots,
            "clipped_mass": clipped.map(num),
            "max_raw_error": num(worst_raw),
            "max_corrected_error": num(worst_corrected),
        }),
    );
    Ok(art)
}
