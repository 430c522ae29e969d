//! Repeated graph-automaton steps: low-weight Pauli expectations, the
//! rotated-readout operator table and glider propagation.

use rydqca_core::clifford::{glider_trajectory_with, graph_step_layers, protocol_step_layers, Glider, StabilizerState};
use rydqca_core::entanglement::{angle_grid, exact_operator_sweep, fit_operator_curve, graph_operator_scan, graph_operator_table};
use rydqca_core::qca_ideal::{graph_protocol_phase, graph_protocol_step, graph_step};
use rydqca_core::{PauliFactor, PauliString, QuantumState};
use serde_json::{json, Value};

use super::cluster::{data_chain, data_sites, rotated_ensembles};
use super::{num, Artifacts};
use crate::config::{EngineKind, LoadedConfig, Protocol};
use crate::error::{HarnessError, Result};
use crate::io::{f, Table};

const LETTERS: [PauliFactor; 3] = [PauliFactor::X, PauliFactor::Y, PauliFactor::Z];

/// Every Pauli string of weight one or two on `n` qubits, as sparse terms
/// in a fixed order.
pub fn low_weight_strings(n: usize) -> Vec<Vec<(usize, PauliFactor)>> {
    let mut out = Vec::new();
    for i in 0..n {
        for a in LETTERS {
            out.push(vec![(i, a)]);
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            for a in LETTERS {
                for b in LETTERS {
                    out.push(vec![(i, a), (j, b)]);
                }
            }
        }
    }
    out
}

fn label(n: usize, terms: &[(usize, PauliFactor)]) -> String {
    PauliString::from_sparse(n, terms).factors().iter().map(|p| p.letter()).collect()
}

fn parse_glider(s: &str) -> Result<Glider> {
    let bad = || HarnessError::InvalidArgument(format!("glider '{s}' must look like U3 or D0"));
    let (head, idx) = s.split_at(1.min(s.len()));
    let k: usize = idx.parse().map_err(|_| bad())?;
    match head {
        "U" => Ok(Glider::Up(k)),
        "D" => Ok(Glider::Down(k)),
        _ => Err(bad()),
    }
}

fn glider_name(g: Option<Glider>) -> String {
    match g {
        Some(Glider::Up(k)) => format!("U{k}"),
        Some(Glider::Down(k)) => format!("D{k}"),
        None => String::new(),
    }
}

fn step_layers(protocol: Protocol, n: usize, t: usize) -> rydqca_core::Result<Vec<rydqca_core::clifford::CliffordLayer>> {
    match protocol {
        Protocol::Corrected => Ok(graph_step_layers(n)),
        Protocol::Hardware => protocol_step_layers(n, graph_protocol_phase(t)),
    }
}

pub fn run(cfg: &LoadedConfig) -> Result<Artifacts> {
    let c = &cfg.config;
    let n = c.schedule.n_data.expect("validated");
    let steps = c.schedule.steps.unwrap_or(0);
    let protocol = c.schedule.protocol;
    let strings = low_weight_strings(n);
    let mut art = Artifacts::default();
    let mut table = Table::new(&["step", "operator", "value"]);
    let mut report = json!({
        "experiment": "graph_qca",
        "engine": c.engine.to_string(),
        "n_data": n,
        "steps": steps,
        "protocol": format!("{protocol:?}").to_lowercase(),
    });

    match c.engine {
        EngineKind::Clifford => {
            let mut st = StabilizerState::evolve_vacuum(n, &[])?;
            for t in 0..=steps {
                if t > 0 {
                    st.evolve(&step_layers(protocol, n, t - 1)?)?;
                }
                for terms in &strings {
                    let v = st.expect(&PauliString::from_sparse(n, terms))?;
                    table.push(vec![t.to_string(), label(n, terms), f(v)]);
                }
            }
            let mut gt = Table::new(&["glider", "step", "operator", "family", "reflected"]);
            let mut summary = Vec::new();
            for name in &c.schedule.gliders {
                let g = parse_glider(name)?;
                let traj = glider_trajectory_with(&g.to_pauli(n), n, steps, |t| step_layers(protocol, n, t))?;
                for s in &traj {
                    gt.push(vec![name.clone(), s.step.to_string(), s.op.to_string(), glider_name(s.glider), s.reflected.to_string()]);
                }
                summary.push(json!({
                    "initial": name,
                    "reflections": traj.iter().filter(|s| s.reflected).count(),
                    "stays_glider": traj.iter().all(|s| s.glider.is_some()),
                }));
            }
            art.add_table("gliders.csv", gt);
            report["gliders"] = Value::Array(summary);
        }
        _ => {
            let data = cfg.data_species();
            let chain = data_chain(cfg, n, data)?;
            let sites = data_sites(n);
            let l = chain.n_sites();
            let mut s = QuantumState::vacuum(&chain);
            let mut op_table = Table::new(&["step", "operator", "form", "value", "stderr", "ideal"]);
            let alphas = angle_grid(c.schedule.readout_angles);
            let mut worst: f64 = 0.0;
            for t in 0..=steps {
                if t > 0 {
                    match protocol {
                        Protocol::Corrected => graph_step(&mut s, data)?,
                        Protocol::Hardware => graph_protocol_step(&mut s, data, graph_protocol_phase(t - 1))?,
                    }
                }
                for terms in &strings {
                    let embedded: Vec<(usize, PauliFactor)> = terms.iter().map(|&(k, p)| (sites[k], p)).collect();
                    let v = s.expect(&PauliString::from_sparse(l, &embedded))?;
                    table.push(vec![t.to_string(), label(n, terms), f(v)]);
                }
                // The tabulated operators describe the hardware sequence on five atoms.
                if protocol != Protocol::Hardware || n != 5 {
                    continue;
                }
                let Some(ops) = graph_operator_table(t) else { continue };
                let values = if c.shots > 0 {
                    let ens = rotated_ensembles(&s, data, &sites, &alphas, c.shots, c.seed.wrapping_add(t as u64))?;
                    graph_operator_scan(&ens, &sites, t, None)?
                } else {
                    ops.iter()
                        .map(|&(lbl, form, ideal)| {
                            let v = exact_operator_sweep(&s, data, &sites, lbl, &alphas)?;
                            fit_operator_curve(lbl, form, &alphas, &v, ideal)
                        })
                        .collect::<rydqca_core::Result<Vec<_>>>()?
                };
                for v in &values {
                    worst = worst.max((v.value - v.ideal).abs());
                    op_table.push(vec![
                        t.to_string(),
                        v.label.clone(),
                        v.fit.form.label().to_string(),
                        f(v.value),
                        f(v.stderr),
                        f(v.ideal),
                    ]);
                }
            }
            if !op_table.rows.is_empty() {
                art.add_table("operators.csv", op_table);
                report["max_operator_deviation"] = num(worst);
            }
        }
    }
    art.add_table("expectations.csv", table);
    art.add_report("graph_qca.json", report);
    Ok(art)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn string_count() {
        assert_eq!(low_weight_strings(5).len(), 15 + 90);
        assert_eq!(label(3, &[(0, PauliFactor::X), (2, PauliFactor::Z)]), "XIZ");
    }

    #[test]
    fn glider_names_round_trip() {
        for s in ["U0", "D5", "U12"] {
            assert_eq!(glider_name(Some(parse_glider(s).unwrap())), s);
        }
        assert!(parse_glider("X1").is_err());
        assert!(parse_glider("").is_err());
    }
}
