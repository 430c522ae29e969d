//! GHZ growth from a single seeded superposition.
//!
//! All B atoms except the seed are masked during a π/2 pulse; subsequent π
//! pulses copy the seed's branch outward. At each step the entangled atoms
//! are those where the two classical branches (vacuum, seed excited)
//! differ.

use std::f64::consts::{FRAC_PI_2, PI};

use rydqca_core::entanglement::{
    angle_grid, exact_z_parity, ghz_dual_species_bound, ghz_fidelity_from, ghz_overlap_exact, ghz_parity_max,
    ghz_population_term, FidelityReport, GhzStepData, ParitySweep,
};
use rydqca_core::qca_ideal::{masked_init_pulse, pxp_sequence};
use rydqca_core::{ChainSpec, QuantumState, ShotEnsemble, ShotMeta, Species};
use serde_json::{json, Value};

use super::{num, Artifacts};
use crate::config::LoadedConfig;
use crate::engine::sample_state;
use crate::error::Result;
use crate::io::{f, Table};

/// Classical configurations reached from `bits` after each of `n` π pulses.
fn classical_orbit(chain: &ChainSpec, bits: &[u8], n: usize) -> Result<Vec<Vec<u8>>> {
    let s = QuantumState::basis_state(chain, bits)?;
    Ok(pxp_sequence(&s, n, PI)?
        .iter()
        .map(|st| st.populations().iter().map(|p| p.round() as u8).collect())
        .collect())
}

/// Entangled sites and the seed-excited branch pattern on them, per step.
pub fn ghz_supports(chain: &ChainSpec, seed: usize, n_pulses: usize) -> Result<Vec<(Vec<usize>, Vec<u8>)>> {
    let l = chain.n_sites();
    let vac = classical_orbit(chain, &vec![0; l], n_pulses)?;
    let mut excited = vec![0u8; l];
    excited[seed] = 1;
    let exc = classical_orbit(chain, &excited, n_pulses)?;
    Ok(vac
        .iter()
        .zip(&exc)
        .map(|(v, e)| {
            let sites: Vec<usize> = (0..l).filter(|&k| v[k] != e[k]).collect();
            let pattern = sites.iter().map(|&k| e[k]).collect();
            (sites, pattern)
        })
        .collect())
}

/// `B(φ)` on `sites`: π/2 about `φ − π/2` on `species`, then the Z parity,
/// exactly or from `shots` samples per angle.
fn parity_sweep(
    state: &QuantumState,
    species: Species,
    sites: &[usize],
    angles: &[f64],
    shots: usize,
    seed: u64,
    block: u64,
) -> Result<ParitySweep> {
    let mut values = Vec::with_capacity(angles.len());
    let mut errs = Vec::with_capacity(angles.len());
    for (a, &phi) in angles.iter().enumerate() {
        let mut s = state.clone();
        s.apply_product_rotation(species, FRAC_PI_2, phi - FRAC_PI_2, &[])?;
        if shots == 0 {
            values.push(exact_z_parity(&s, sites)?);
            errs.push(0.0);
        } else {
            let ens = ShotEnsemble::new(sample_state(&s, shots, seed, block, a)?, ShotMeta::default());
            let (v, e) = ens.parity(sites);
            values.push(v);
            errs.push(e);
        }
    }
    let mut sweep = ParitySweep::new(angles.to_vec(), values, sites.len())?;
    sweep.stderr = errs;
    Ok(sweep)
}

#[derive(Debug, Clone)]
struct Row {
    step: usize,
    sites: Vec<usize>,
    species: String,
    q: f64,
    parity_max: Option<f64>,
    report: Option<FidelityReport>,
    estimator: &'static str,
    overlap: f64,
}

pub fn run(cfg: &LoadedConfig) -> Result<Artifacts> {
    let c = &cfg.config;
    let chain = cfg.chain()?;
    let seed_site = c.schedule.ghz_seed_site.expect("validated");
    let n_pulses = c.schedule.n_pulses.unwrap_or(0);
    let mask: Vec<usize> = chain.sites_of(chain.species(seed_site)).filter(|&s| s != seed_site).collect();
    let mut init = QuantumState::vacuum(&chain);
    masked_init_pulse(&mut init, &mask, FRAC_PI_2)?;
    let states = pxp_sequence(&init, n_pulses, PI)?;
    let supports = ghz_supports(&chain, seed_site, n_pulses)?;
    let angles = angle_grid(c.schedule.readout_angles);

    let mut rows = Vec::new();
    let mut data = Vec::new();
    for (step, (state, (sites, pattern))) in states.iter().zip(&supports).enumerate() {
        let overlap = ghz_overlap_exact(state, sites, pattern)?;
        let q = if c.shots == 0 {
            let dist = state.outcome_distribution()?;
            let n = state.n_sites();
            dist.iter()
                .enumerate()
                .filter(|(label, _)| {
                    let bit = |s: usize| ((label >> (n - 1 - s)) & 1) as u8;
                    let same = sites.iter().zip(pattern).all(|(&s, &p)| bit(s) == p);
                    let flip = sites.iter().zip(pattern).all(|(&s, &p)| bit(s) != p);
                    same || flip
                })
                .map(|(_, p)| p)
                .sum()
        } else {
            let ens = ShotEnsemble::new(sample_state(state, c.shots, c.seed, 0, step)?, ShotMeta::default());
            ghz_population_term(&ens, sites, Some(pattern))?
        };
        let species = chain.species(sites[0]);
        let single = sites.iter().all(|&s| chain.species(s) == species);
        let (parity_max, report) = if single {
            let sweep = parity_sweep(state, species, sites, &angles, c.shots, c.seed, 1 + step as u64)?;
            (Some(ghz_parity_max(&sweep)?), Some(ghz_fidelity_from(q, &sweep)?))
        } else {
            (None, None)
        };
        data.push(GhzStepData { q, parity_max });
        rows.push(Row {
            step,
            sites: sites.clone(),
            species: if single { species.to_string() } else { "AB".into() },
            q,
            parity_max,
            estimator: if single { "direct" } else { "dual_bound" },
            report,
            overlap,
        });
    }
    for row in rows.iter_mut().filter(|r| r.report.is_none()) {
        match ghz_dual_species_bound(&data, row.step) {
            Ok(r) => row.report = Some(r),
            Err(rydqca_core::Error::NoLaterData(_)) => row.estimator = "unavailable",
            Err(e) => return Err(e.into()),
        }
    }

    let mut table = Table::new(&[
        "step",
        "n_atoms",
        "sites",
        "species",
        "q",
        "parity_max",
        "fidelity",
        "fidelity_unclipped",
        "estimator",
        "overlap",
    ]);
    let mut json_rows: Vec<Value> = Vec::new();
    for r in &rows {
        let sites = r.sites.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(";");
        let (fid, unc) = r.report.as_ref().map_or((String::new(), String::new()), |x| (f(x.fidelity), f(x.fidelity_unclipped)));
        table.push(vec![
            r.step.to_string(),
            r.sites.len().to_string(),
            sites,
            r.species.clone(),
            f(r.q),
            r.parity_max.map_or(String::new(), f),
            fid,
            unc,
            r.estimator.to_string(),
            f(r.overlap),
        ]);
        json_rows.push(json!({
            "step": r.step,
            "sites": r.sites,
            "species": r.species,
            "estimator": r.estimator,
            "population_term": num(r.q),
            "parity_max": r.parity_max.map(num),
            "fidelity": r.report.as_ref().map(|x| num(x.fidelity)),
            "fidelity_unclipped": r.report.as_ref().map(|x| num(x.fidelity_unclipped)),
            "clipped": r.report.as_ref().map(|x| x.clipped),
            "lower_bound": r.report.as_ref().map(|x| x.lower_bound),
            "exact_overlap": num(r.overlap),
        }));
    }
    let mut art = Artifacts::default();
    art.add_table("ghz.csv", table);
    art.add_report(
        "ghz.json",
        json!({
            "experiment": "ghz_growth",
            "engine": c.engine.to_string(),
            "n_sites": chain.n_sites(),
            "seed_site": seed_site,
            "shots": c.shots,
            "steps": json_rows,
        }),
    );
    Ok(art)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rydqca_core::lattice::build_alternating_chain;

    #[test]
    fn supports_grow_by_one_site_per_pulse() {
        let chain = build_alternating_chain(11, 5.3, Species::A).unwrap();
        let s = ghz_supports(&chain, 5, 3).unwrap();
        assert_eq!(s[0], (vec![5], vec![1]));
        assert_eq!(s[1].0, vec![4, 5, 6]);
        assert!(s[2].0.iter().all(|&k| chain.species(k) == Species::B) || s[2].0.len() > 1);
    }
}
