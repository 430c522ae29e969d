//! One-step cluster-state preparation and stabilizer readout.

use std::f64::consts::{FRAC_PI_2, PI};

use rydqca_core::clifford::{graph_step_layers, protocol_step_layers, StabilizerState};
use rydqca_core::entanglement::{
    angle_grid, apply_rotated_readout, entangled_cuts, exact_operator_sweep, stabilizer_scan, ReadoutClass,
    RotatedEnsemble, StabilizerValue,
};
use rydqca_core::fit::fit_cosine;
use rydqca_core::lattice::build_alternating_chain_with;
use rydqca_core::qca_ideal::{graph_protocol_step, graph_step};
use rydqca_core::{ChainSpec, PauliFactor, PauliString, QuantumState, ShotEnsemble, ShotMeta, Species};
use serde_json::json;

use super::{num, wrap_angle, Artifacts};
use crate::config::{EngineKind, LoadedConfig, Protocol};
use crate::engine::sample_state;
use crate::error::Result;
use crate::io::{f, Table};

/// Data atoms on even sites of a `2n − 1` chain, auxiliaries in between.
pub fn data_chain(cfg: &LoadedConfig, n: usize, data: Species) -> Result<ChainSpec> {
    Ok(build_alternating_chain_with(2 * n - 1, cfg.config.chain.spacing_um, data, cfg.c6())?)
}

pub fn data_sites(n: usize) -> Vec<usize> {
    (0..n).map(|k| 2 * k).collect()
}

/// `Z_{i−1} R_i Z_{i+1}` clipped to the chain.
pub fn stabilizer_label(i: usize, n: usize) -> String {
    (0..n)
        .map(|k| if k == i { 'R' } else if k + 1 == i || k == i + 1 { 'Z' } else { 'I' })
        .collect()
}

/// Positive amplitude, phase in `(−π, π]`.
fn normalized(mut v: StabilizerValue) -> StabilizerValue {
    if v.amplitude < 0.0 {
        v.amplitude = -v.amplitude;
        v.phase += PI;
    }
    v.phase = wrap_angle(v.phase);
    v
}

/// Shots after the rotated readout of each class at every angle.
pub fn rotated_ensembles(
    state: &QuantumState,
    data: Species,
    sites: &[usize],
    alphas: &[f64],
    shots: usize,
    seed: u64,
) -> Result<Vec<RotatedEnsemble>> {
    let mut out = Vec::new();
    for (block, class) in [(1u64, ReadoutClass::Even), (2, ReadoutClass::Odd)] {
        for (k, &alpha) in alphas.iter().enumerate() {
            let mut s = state.clone();
            apply_rotated_readout(&mut s, data, sites, class, alpha)?;
            let bits = sample_state(&s, shots, seed, block, k)?;
            let meta = ShotMeta { basis_angle: Some(alpha), seed, ..Default::default() };
            out.push(RotatedEnsemble { class, alpha, shots: ShotEnsemble::new(bits, meta) });
        }
    }
    Ok(out)
}

fn ideal_values(cfg: &LoadedConfig, n: usize) -> Result<Vec<StabilizerValue>> {
    let c = &cfg.config;
    let data = cfg.data_species();
    let chain = data_chain(cfg, n, data)?;
    let mut s = QuantumState::vacuum(&chain);
    match c.schedule.protocol {
        Protocol::Corrected => graph_step(&mut s, data)?,
        Protocol::Hardware => graph_protocol_step(&mut s, data, FRAC_PI_2)?,
    }
    let sites = data_sites(n);
    let alphas = angle_grid(c.schedule.readout_angles);
    if c.shots > 0 {
        let ens = rotated_ensembles(&s, data, &sites, &alphas, c.shots, c.seed)?;
        return Ok(stabilizer_scan(&ens, &sites)?);
    }
    (0..n)
        .map(|i| {
            let v = exact_operator_sweep(&s, data, &sites, &stabilizer_label(i, n), &alphas)?;
            let fit = fit_cosine(&alphas, &v, 1.0)?;
            Ok(StabilizerValue { index: i, amplitude: fit.amplitude, offset: fit.offset, phase: fit.phase })
        })
        .collect()
}

fn clifford_values(cfg: &LoadedConfig, n: usize) -> Result<Vec<StabilizerValue>> {
    let layers = match cfg.config.schedule.protocol {
        Protocol::Corrected => graph_step_layers(n),
        Protocol::Hardware => protocol_step_layers(n, FRAC_PI_2)?,
    };
    let st = StabilizerState::evolve_vacuum(n, &layers)?;
    (0..n)
        .map(|i| {
            let with = |center: PauliFactor| -> Result<f64> {
                let mut terms = vec![(i, center)];
                if i > 0 {
                    terms.push((i - 1, PauliFactor::Z));
                }
                if i + 1 < n {
                    terms.push((i + 1, PauliFactor::Z));
                }
                Ok(st.expect(&PauliString::from_sparse(n, &terms))?)
            };
            let (x, y) = (with(PauliFactor::X)?, with(PauliFactor::Y)?);
            Ok(StabilizerValue { index: i, amplitude: x.hypot(y), offset: 0.0, phase: y.atan2(x) })
        })
        .collect()
}

pub fn run(cfg: &LoadedConfig) -> Result<Artifacts> {
    let c = &cfg.config;
    let n = c.schedule.n_data.expect("validated");
    let values: Vec<StabilizerValue> = match c.engine {
        EngineKind::Clifford => clifford_values(cfg, n)?,
        _ => ideal_values(cfg, n)?,
    }
    .into_iter()
    .map(normalized)
    .collect();
    let cuts = entangled_cuts(&values);

    let mut table = Table::new(&["index", "amplitude", "offset", "phase"]);
    for v in &values {
        table.push(vec![v.index.to_string(), f(v.amplitude), f(v.offset), f(v.phase)]);
    }
    let mut cut_table = Table::new(&["cut", "entangled"]);
    for (k, e) in cuts.iter().enumerate() {
        cut_table.push(vec![k.to_string(), e.to_string()]);
    }
    let min_amp = values.iter().map(|v| v.amplitude).fold(f64::INFINITY, f64::min);
    // Phase of each boundary stabilizer relative to its bulk neighbour.
    let boundary = if n >= 3 {
        json!([num(wrap_angle(values[0].phase - values[1].phase)), num(wrap_angle(values[n - 1].phase - values[n - 2].phase))])
    } else {
        json!(null)
    };

    let mut art = Artifacts::default();
    art.add_table("stabilizers.csv", table);
    art.add_table("cuts.csv", cut_table);
    art.add_report(
        "cluster.json",
        json!({
            "experiment": "cluster",
            "engine": c.engine.to_string(),
            "n_data": n,
            "protocol": format!("{:?}", c.schedule.protocol).to_lowercase(),
            "min_amplitude": num(min_amp),
            "entangled_cuts": cuts.iter().filter(|&&b| b).count(),
            "all_cuts_entangled": cuts.iter().all(|&b| b),
            "boundary_phase_shift": boundary,
        }),
    );
    Ok(art)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels() {
        assert_eq!(stabilizer_label(0, 4), "RZII");
        assert_eq!(stabilizer_label(2, 4), "IZRZ");
        assert_eq!(stabilizer_label(3, 4), "IIZR");
    }
}
