use super::*;
use crate::clifford;
use crate::fit::RFit;
use crate::lattice::{build_alternating_chain, ChainSpec, C6Table};
use crate::qca_ideal::{
    graph_protocol_sequence, graph_protocol_step, graph_step, masked_init_pulse, mediated_v_layer, pxp_sequence,
    MediatedLayer,
};
use crate::rng::{standard_normal, stream_rng};
use crate::statevec::{ShotMeta, SiteKet};
use core::f64::consts::PI;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn abc() -> ChainSpec {
    ChainSpec::from_pattern_str("ABA", 5.3, C6Table::standard()).unwrap()
}

/// `p(b) + p(b̄)` on `sites` from the exact outcome distribution.
fn exact_q(state: &QuantumState, sites: &[usize], pattern: &[u8]) -> f64 {
    let n = state.n_sites();
    let dist = state.outcome_distribution().unwrap();
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
}

/// Exact parity sweep `B(φ)`: π/2 about `φ − π/2` on `species`, then the Z
/// parity of `sites`.
fn exact_parity_sweep(state: &QuantumState, species: Species, sites: &[usize], angles: &[f64]) -> ParitySweep {
    let values = angles
        .iter()
        .map(|&phi| {
            let mut s = state.clone();
            s.apply_product_rotation(species, FRAC_PI_2, phi - FRAC_PI_2, &[]).unwrap();
            exact_z_parity(&s, sites).unwrap()
        })
        .collect();
    ParitySweep::new(angles.to_vec(), values, sites.len()).unwrap()
}

/// Classical branches of the GHZ growth run: the PXP image of the vacuum and
/// of the seed-excited state after `t` pulses.
fn branches(l: usize, seed: usize, t: usize) -> (Vec<u8>, Vec<u8>) {
    let ch = build_alternating_chain(l, 5.3, Species::A).unwrap();
    let run = |bits: &[u8]| -> Vec<u8> {
        let s = QuantumState::basis_state(&ch, bits).unwrap();
        let last = pxp_sequence(&s, t, PI).unwrap().pop().unwrap();
        last.populations().iter().map(|p| p.round() as u8).collect()
    };
    let mut excited = vec![0u8; l];
    excited[seed] = 1;
    (run(&vec![0u8; l]), run(&excited))
}

fn ghz_run(l: usize, seed: usize, n_pulses: usize) -> Vec<QuantumState> {
    let ch = build_alternating_chain(l, 5.3, Species::A).unwrap();
    let mask: Vec<usize> = ch.sites_of(Species::B).filter(|&s| s != seed).collect();
    let mut s = QuantumState::vacuum(&ch);
    masked_init_pulse(&mut s, &mask, FRAC_PI_2).unwrap();
    pxp_sequence(&s, n_pulses, PI).unwrap()
}

#[test]
fn ghz_growth_has_unit_fidelity_on_single_species_steps() {
    let (l, seed) = (11, 5);
    let states = ghz_run(l, seed, 16);
    let ch = states[0].chain().clone();
    let mut checked = Vec::new();
    for (t, st) in states.iter().enumerate() {
        let (vac, exc) = branches(l, seed, t);
        let sites: Vec<usize> = (0..l).filter(|&k| vac[k] != exc[k]).collect();
        let species = ch.species(sites[0]);
        if sites.iter().any(|&k| ch.species(k) != species) {
            continue;
        }
        let pattern: Vec<u8> = sites.iter().map(|&k| exc[k]).collect();
        let q = exact_q(st, &sites, &pattern);
        // the branches are |0…0⟩ and |1…1⟩ on the entangled atoms
        assert!(pattern.iter().all(|&b| b == pattern[0]));
        let sweep = exact_parity_sweep(st, species, &sites, &angle_grid(24));
        let rep = ghz_fidelity_from(q, &sweep).unwrap();
        assert!((rep.fidelity_unclipped - 1.0).abs() < 1e-9, "t={t} N={}: {rep:?}", sites.len());
        assert!((ghz_overlap_exact(st, &sites, &pattern).unwrap() - 1.0).abs() < 1e-12);
        checked.push(sites.len());
    }
    // single atom, then up to four entangled atoms before the edges
    for n in 1..=4 {
        assert!(checked.contains(&n), "{checked:?}");
    }
}

#[test]
fn ghz_sampled_fidelity_is_close_to_one() {
    let states = ghz_run(11, 5, 5);
    let st = &states[5];
    let sites = [3, 5, 7];
    let shots = st.sample(4000, 9).unwrap();
    let q = ghz_population_term(&shots, &sites, None).unwrap();
    assert!((q - 1.0).abs() < 1e-12);
    let sweep = exact_parity_sweep(st, Species::B, &sites, &angle_grid(16));
    let rep = ghz_fidelity(&shots, &sites, &sweep).unwrap();
    assert!(rep.fidelity > 0.999 && rep.lower_bound);
}

#[test]
fn ghz_dual_species_bound_is_conservative() {
    let (l, seed) = (11, 5);
    let states = ghz_run(l, seed, 9);
    let ch = states[0].chain().clone();
    let mut data = Vec::new();
    let mut overlaps = Vec::new();
    for (t, st) in states.iter().enumerate() {
        let (vac, exc) = branches(l, seed, t);
        let sites: Vec<usize> = (0..l).filter(|&k| vac[k] != exc[k]).collect();
        let pattern: Vec<u8> = sites.iter().map(|&k| exc[k]).collect();
        let species = ch.species(sites[0]);
        let single = sites.iter().all(|&k| ch.species(k) == species);
        let parity_max = single.then(|| ghz_parity_max(&exact_parity_sweep(st, species, &sites, &angle_grid(24))).unwrap());
        data.push(GhzStepData { q: exact_q(st, &sites, &pattern), parity_max });
        overlaps.push(ghz_overlap_exact(st, &sites, &pattern).unwrap());
    }
    for t0 in [1, 4, 7] {
        assert!(data[t0].parity_max.is_none(), "step {t0} should be dual-species");
        let b = ghz_dual_species_bound(&data, t0).unwrap();
        assert!(b.fidelity <= overlaps[t0] + 1e-9);
        assert!(b.lower_bound);
    }
    assert!(matches!(ghz_dual_species_bound(&data, data.len() - 1), Err(Error::NoLaterData(_))));
}

#[test]
fn dual_species_bound_examples() {
    let steps = [
        GhzStepData { q: 0.9, parity_max: None },
        GhzStepData { q: 0.8, parity_max: Some(0.8) },
        GhzStepData { q: 0.7, parity_max: Some(0.7) },
    ];
    let r = ghz_dual_species_bound(&steps, 0).unwrap();
    assert!((r.coherence_term - 0.8).abs() < 1e-15);
    assert!((r.fidelity - (0.9 - 0.5 + 0.4)).abs() < 1e-15);
    let zeros = [GhzStepData { q: 0.9, parity_max: None }, GhzStepData { q: 0.8, parity_max: Some(0.0) }];
    assert!((ghz_dual_species_bound(&zeros, 0).unwrap().fidelity - 0.4).abs() < 1e-15);
    let none = [GhzStepData { q: 0.9, parity_max: None }, GhzStepData { q: 0.8, parity_max: None }];
    assert!(matches!(ghz_dual_species_bound(&none, 0), Err(Error::NoLaterData(0))));
}

#[test]
fn mixed_populations_clip_to_zero() {
    let n = 4;
    let angles = angle_grid(16);
    let sweep = ParitySweep::new(angles.clone(), vec![0.0; 16], n).unwrap();
    let q = 2.0 / 16.0;
    let rep = ghz_fidelity_from(q, &sweep).unwrap();
    assert!((rep.fidelity_unclipped - (q - 0.5)).abs() < 1e-12);
    assert!(rep.clipped && rep.fidelity == 0.0);
}

#[test]
fn parity_sweep_coverage_is_checked() {
    let few = ParitySweep::new(angle_grid(6), vec![0.0; 6], 1).unwrap();
    assert!(ghz_parity_max(&few).is_err());
    // eight points bunched in a quarter turn do not cover a period of 2π/3
    let bunched: Vec<f64> = (0..8).map(|i| 0.2 * i as f64).collect();
    let s = ParitySweep::new(bunched, vec![0.0; 8], 3).unwrap();
    assert!(ghz_parity_max(&s).is_err());
    let one_period: Vec<f64> = (0..8).map(|i| TAU / 3.0 * i as f64 / 8.0).collect();
    let vals: Vec<f64> = one_period.iter().map(|a| 0.7 * (3.0 * a - 0.4).cos()).collect();
    let s = ParitySweep::new(one_period, vals, 3).unwrap();
    assert!((ghz_parity_max(&s).unwrap() - 0.7).abs() < 1e-9);
    assert!(ParitySweep::new(vec![0.0], vec![], 1).is_err());
}

fn random_state(n: usize, seed: u64) -> QuantumState {
    let ch = build_alternating_chain(n, 5.3, Species::A).unwrap();
    let mut rng = stream_rng(seed, 21);
    let mut amps: Vec<C64> = (0..1 << n).map(|_| c(standard_normal(&mut rng), standard_normal(&mut rng))).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
    QuantumState::from_amplitudes(&ch, vec![2; n], amps).unwrap()
}

/// Brute-force `max_φ |⟨GHZ(φ)|ψ⟩|²` over a fine φ grid.
fn ghz_overlap_scan(state: &QuantumState) -> f64 {
    let a = state.amplitudes();
    let last = a.len() - 1;
    (0..20000)
        .map(|k| {
            let phi = TAU * k as f64 / 20000.0;
            ((a[0] + C64::from_polar(1.0, -phi) * a[last]) / 2f64.sqrt()).norm_sqr()
        })
        .fold(0.0, f64::max)
}

#[test]
fn ghz_bound_never_exceeds_true_overlap() {
    // three qubits, all rotated: use an all-A chain so one species covers them
    let ch = ChainSpec::from_pattern_str("AAA", 5.3, C6Table::standard()).unwrap();
    for seed in 0..200 {
        let r = random_state(3, seed);
        let s = QuantumState::from_amplitudes(&ch, vec![2; 3], r.amplitudes().to_vec()).unwrap();
        let q = exact_q(&s, &[0, 1, 2], &[0, 0, 0]);
        let sweep = exact_parity_sweep(&s, Species::A, &[0, 1, 2], &angle_grid(24));
        let bound = ghz_fidelity_from(q, &sweep).unwrap().fidelity_unclipped;
        let exact = ghz_overlap_exact(&s, &[0, 1, 2], &[0, 0, 0]).unwrap();
        assert!((exact - ghz_overlap_scan(&s)).abs() < 1e-6);
        assert!(bound <= exact + 1e-9, "seed {seed}: {bound} > {exact}");
    }
}

fn cluster_pair(phi: f64) -> QuantumState {
    let e = C64::from_polar(1.0, -2.0 * phi);
    let mut amps = vec![c(0.0, 0.0); 8];
    amps[0b000] = e * 0.5;
    amps[0b001] = c(0.5, 0.0);
    amps[0b100] = c(0.5, 0.0);
    amps[0b101] = -e.conj() * 0.5;
    QuantumState::from_amplitudes(&abc(), vec![2; 3], amps).unwrap()
}

fn bell_report(state: &QuantumState, n_angles: usize) -> BellReport {
    let th = angle_grid(n_angles);
    let r = exact_r_sweep(state, Species::A, [0, 2], &th).unwrap();
    let p = exact_z_parity(state, &[0, 2]).unwrap();
    bell_fidelity_from(p, &ParitySweep::new(th, r, 2).unwrap()).unwrap()
}

#[test]
fn r_measurement_matches_definition() {
    let s = random_state(3, 5);
    let th = angle_grid(12);
    let pulse = exact_r_sweep(&s, Species::A, [0, 2], &th).unwrap();
    for (t, v) in th.iter().zip(pulse) {
        assert!((v - r_direct(&s, [0, 2], *t).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn bell_fidelity_is_one_on_every_cluster_pair() {
    for k in 0..16 {
        let phi = TAU * k as f64 / 16.0;
        let rep = bell_report(&cluster_pair(phi), 32);
        assert!((rep.report.fidelity_unclipped - 1.0).abs() < 1e-9, "φ={phi}: {rep:?}");
        assert!(rep.report.warnings.is_empty());
        assert!(!rep.report.lower_bound);
    }
}

#[test]
fn mediated_bell_state() {
    let kets = [SiteKet::plus(), SiteKet::ground(), SiteKet::plus()];
    let mut s = QuantumState::product_state(&abc(), &kets).unwrap();
    let before = bell_report(&s, 32);
    assert!((before.report.fidelity - 0.5).abs() < 1e-9);
    assert!((before.report.coherence_term - 0.25).abs() < 1e-9);
    assert!(before.report.population_term.abs() < 1e-12);

    mediated_v_layer(&mut s, &MediatedLayer::cz(Species::A)).unwrap();
    let rep = bell_report(&s, 32);
    assert!((rep.report.fidelity_unclipped - 1.0).abs() < 1e-9);
    // the optimum does not depend on how α = π/2 is split between φ and Φ
    for delta in [0.3, 0.9, 2.0] {
        let mut layer = MediatedLayer::new(delta, Species::A);
        layer.phi_extra = FRAC_PI_2 - layer.big_phi();
        let mut t = QuantumState::product_state(&abc(), &kets).unwrap();
        mediated_v_layer(&mut t, &layer).unwrap();
        let other = bell_report(&t, 32);
        assert!((rem_euclid(other.theta_star - rep.theta_star + PI, TAU) - PI).abs() < 1e-6);
        assert!((other.report.fidelity - 1.0).abs() < 1e-9);
    }
    // direct W agrees with the fitted one on a uniform grid
    let th = angle_grid(64);
    let sweep = ParitySweep::new(th.clone(), exact_r_sweep(&s, Species::A, [0, 2], &th).unwrap(), 2).unwrap();
    assert!((max_w_direct(&sweep).unwrap() - rep.report.coherence_term).abs() < 1e-9);
}

#[test]
fn published_sweep_shape_regression() {
    // r(ϑ) with the published optimum and an overall fidelity of 0.967
    let truth = RFit { a: 0.2425, b: 0.955, theta_star: 0.718 * PI, rss: 0.0 };
    let th = angle_grid(24);
    let r: Vec<f64> = th.iter().map(|&t| truth.eval(t)).collect();
    let (w, _) = truth.max_w();
    let p = 1.0 - 4.0 * (0.967 - w);
    let rep = bell_fidelity_from(p, &ParitySweep::new(th, r, 2).unwrap()).unwrap();
    assert!((rep.theta_star - 0.718 * PI).abs() < 1e-6);
    assert!((rep.a - truth.a).abs() < 1e-9 && (rep.b - truth.b).abs() < 1e-9);
    assert!((rep.report.fidelity - 0.967).abs() < 1e-9);
}

#[test]
fn noisy_r_fit_raises_warning() {
    let th = angle_grid(16);
    let r: Vec<f64> = th.iter().enumerate().map(|(i, _)| if i % 2 == 0 { 0.5 } else { -0.5 }).collect();
    let rep = bell_fidelity_from(0.0, &ParitySweep::new(th, r, 2).unwrap()).unwrap();
    assert!(!rep.report.warnings.is_empty());
    let short = ParitySweep::new(angle_grid(8), vec![0.0; 8], 2).unwrap();
    assert!(bell_fidelity_from(0.0, &short).is_err());
}

fn data_sites(n: usize) -> Vec<usize> {
    (0..n).map(|k| 2 * k).collect()
}

fn rotated_ensembles(state: &QuantumState, n: usize, alphas: &[f64], shots: usize) -> Vec<RotatedEnsemble> {
    let mut out = Vec::new();
    for class in [ReadoutClass::Even, ReadoutClass::Odd] {
        for (k, &alpha) in alphas.iter().enumerate() {
            let mut s = state.clone();
            apply_rotated_readout(&mut s, Species::A, &data_sites(n), class, alpha).unwrap();
            let meta = ShotMeta { basis_angle: Some(alpha), ..Default::default() };
            let mut e = s.sample(shots, 1000 + k as u64 + 100 * (class == ReadoutClass::Odd) as u64).unwrap();
            e.meta = meta;
            out.push(RotatedEnsemble { class, alpha, shots: e });
        }
    }
    out
}

fn data_chain(n: usize) -> ChainSpec {
    build_alternating_chain(2 * n - 1, 5.3, Species::A).unwrap()
}

#[test]
fn stabilizer_curves_match_literal_operators() {
    let n = 5;
    let mut s = QuantumState::vacuum(&data_chain(n));
    graph_step(&mut s, Species::A).unwrap();
    let alphas = angle_grid(12);
    for i in 0..n {
        let mut label: Vec<char> = vec!['I'; n];
        label[i] = 'R';
        if i > 0 {
            label[i - 1] = 'Z';
        }
        if i + 1 < n {
            label[i + 1] = 'Z';
        }
        let label: String = label.into_iter().collect();
        let values = exact_operator_sweep(&s, Species::A, &data_sites(n), &label, &alphas).unwrap();
        let fit = fit_cosine(&alphas, &values, 1.0).unwrap();
        for (alpha, letter) in [(0.0, PauliFactor::X), (FRAC_PI_2, PauliFactor::Y)] {
            let mut terms = vec![(2 * i, letter)];
            if i > 0 {
                terms.push((2 * i - 2, PauliFactor::Z));
            }
            if i + 1 < n {
                terms.push((2 * i + 2, PauliFactor::Z));
            }
            let literal = s.expect(&PauliString::from_sparse(s.n_sites(), &terms)).unwrap();
            assert!((fit.eval(alpha, 1.0) - literal).abs() < 1e-9, "{label} at {alpha}");
        }
    }
}

#[test]
fn sampled_stabilizer_scan_of_cluster_state() {
    let n = 5;
    let mut s = QuantumState::vacuum(&data_chain(n));
    graph_step(&mut s, Species::A).unwrap();
    let ens = rotated_ensembles(&s, n, &angle_grid(8), 400);
    let values = stabilizer_scan(&ens, &data_sites(n)).unwrap();
    assert_eq!(values.len(), n);
    for v in &values {
        assert!((v.amplitude - 1.0).abs() < 0.1, "{v:?}");
    }
    assert!(entangled_cuts(&values).iter().all(|&b| b));
    assert!(stabilizer_scan(&ens[..4], &data_sites(n)).is_err());
    assert!(stabilizer_scan(&ens, &data_sites(1)).is_err());
}

#[test]
fn boundary_stabilizers_are_shifted_by_quarter_turn() {
    // hardware cluster preparation: π/2 pulse, then the uncorrected layer
    let n = 5;
    let mut s = QuantumState::vacuum(&data_chain(n));
    graph_protocol_step(&mut s, Species::A, FRAC_PI_2).unwrap();
    let alphas = angle_grid(16);
    let phases: Vec<f64> = (0..n)
        .map(|i| {
            let mut label: Vec<char> = vec!['I'; n];
            label[i] = 'R';
            if i > 0 {
                label[i - 1] = 'Z';
            }
            if i + 1 < n {
                label[i + 1] = 'Z';
            }
            let label: String = label.into_iter().collect();
            let v = exact_operator_sweep(&s, Species::A, &data_sites(n), &label, &alphas).unwrap();
            let fit = fit_cosine(&alphas, &v, 1.0).unwrap();
            assert!((fit.amplitude.abs() - 1.0).abs() < 1e-9);
            fit.phase
        })
        .collect();
    let diff = |a: f64, b: f64| (rem_euclid(a - b + PI, TAU) - PI).abs();
    for i in 1..n - 1 {
        assert!(diff(phases[i], phases[1]) < 1e-9 || (diff(phases[i], phases[1]) - PI).abs() < 1e-9);
    }
    for edge in [0, n - 1] {
        assert!((diff(phases[edge], phases[1]) - FRAC_PI_2).abs() < 1e-9, "{phases:?}");
    }
}

#[test]
fn seventeen_qubit_cluster_is_certified() {
    let n = 17;
    let st = clifford::StabilizerState::evolve_vacuum(n, &clifford::cluster_preparation(n)).unwrap();
    let values: Vec<StabilizerValue> = clifford::cluster_stabilizers(n)
        .unwrap()
        .iter()
        .enumerate()
        .map(|(i, p)| StabilizerValue { index: i, amplitude: st.expect(p).unwrap(), offset: 0.0, phase: 0.0 })
        .collect();
    assert!(values.iter().all(|v| v.amplitude == 1.0));
    assert!(entangled_cuts(&values).iter().all(|&b| b));
    let mut weak = values.clone();
    weak[8].amplitude = 0.4;
    let cuts = entangled_cuts(&weak);
    assert!(!cuts[7] && !cuts[8] && cuts[6] && cuts[9]);
}

#[test]
fn label_classes() {
    assert_eq!(label_class("RZIZR").unwrap(), Some(ReadoutClass::Even));
    assert_eq!(label_class("IRZII").unwrap(), Some(ReadoutClass::Odd));
    assert_eq!(label_class("ZIZIZ").unwrap(), None);
    assert!(label_class("RRIII").is_err());
    assert!(label_class("RIZII").is_err());
    assert!(label_class("XIIII").is_err());
    assert_eq!(sweep_class("ZIZIZ").unwrap(), ReadoutClass::Odd);
    assert_eq!(sweep_class("IZIZI").unwrap(), ReadoutClass::Even);
    assert!(sweep_class("ZZIII").is_err());
}

#[test]
fn graph_operator_maxima_match_table() {
    let n = 5;
    let vac = QuantumState::vacuum(&data_chain(n));
    let states = graph_protocol_sequence(&vac, Species::A, 5).unwrap();
    let alphas = angle_grid(36);
    for (t, st) in states.iter().enumerate() {
        for (label, form, ideal) in graph_operator_table(t).unwrap() {
            let v = exact_operator_sweep(st, Species::A, &data_sites(n), label, &alphas).unwrap();
            let op = fit_operator_curve(label, form, &alphas, &v, ideal).unwrap();
            assert!((op.value - ideal).abs() < 1e-6, "t={t} {label}: {} vs {ideal}", op.value);
        }
    }
    assert!(graph_operator_table(6).is_none());
}

#[test]
fn graph_operator_scan_on_shots() {
    let n = 5;
    let vac = QuantumState::vacuum(&data_chain(n));
    let st = graph_protocol_sequence(&vac, Species::A, 1).unwrap().pop().unwrap();
    let ens = rotated_ensembles(&st, n, &angle_grid(12), 600);
    let vals = graph_operator_scan(&ens, &data_sites(n), 1, Some(&["RZIZR", "IZRZI"])).unwrap();
    for v in &vals {
        assert!((v.value - v.ideal).abs() < 0.12, "{} {}", v.label, v.value);
    }
    assert!(graph_operator_scan(&ens, &data_sites(n), 1, Some(&["XXXXX"])).is_err());
    assert!(graph_operator_scan(&ens, &data_sites(n), 9, None).is_err());
    let zero = graph_operator_scan(&rotated_ensembles(&vac, n, &angle_grid(8), 50), &data_sites(n), 0, Some(&["ZIZIZ"]))
        .unwrap();
    assert!((zero[0].value - 1.0).abs() < 1e-12 && zero[0].stderr == 0.0);
}

proptest! {
    #[test]
    fn cosine_fit_recovers_parameters(amp in 0.05f64..1.0, phase in -3.0f64..3.0, off in -0.5f64..0.5, n in 1usize..=6) {
        let angles: Vec<f64> = (0..10).map(|k| TAU / n as f64 * k as f64 / 10.0).collect();
        let values: Vec<f64> = angles.iter().map(|a| amp * (n as f64 * a - phase).cos() + off).collect();
        let fit = fit_cosine(&angles, &values, n as f64).unwrap();
        prop_assert!((fit.amplitude - amp).abs() < 1e-9);
        prop_assert!((fit.offset - off).abs() < 1e-9);
        prop_assert!((rem_euclid(n as f64 * fit.phase - phase + PI, TAU) - PI).abs() < 1e-9);
    }
}
