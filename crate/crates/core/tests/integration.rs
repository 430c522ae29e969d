//! Cross-module checks through the public API only.

use std::f64::consts::PI;

use proptest::prelude::*;
use rydqca_core::clifford::{cluster_preparation, cluster_stabilizers, StabilizerState};
use rydqca_core::lattice::{build_alternating_chain, DEFAULT_SPACING_UM};
use rydqca_core::qca_ideal::pxp_sequence;
use rydqca_core::quasiparticle::detect;
use rydqca_core::spam::{correct, forward, SpamParams};
use rydqca_core::statevec::bits_to_label;
use rydqca_core::{QuantumState, Species};

/// Windows 0001, 1000 and 1001 centred on their third site, plus 001 and
/// 100 at the two ends.
fn pattern_scan(bits: &[u8]) -> Vec<usize> {
    let s: String = bits.iter().map(|&b| char::from(b'0' + b)).collect();
    let l = s.len();
    let mut out = Vec::new();
    if s.starts_with("001") {
        out.push(1);
    }
    out.extend((0..=l - 4).filter(|&i| matches!(&s[i..i + 4], "0001" | "1000" | "1001")).map(|i| i + 2));
    if s.ends_with("100") {
        out.push(l - 1);
    }
    out.sort_unstable();
    out
}

fn blockaded(bits: &[u8]) -> bool {
    bits.windows(2).all(|w| w[0] + w[1] < 2)
}

#[test]
fn vacuum_orbit_has_period_six() {
    for n in 3..=12 {
        let chain = build_alternating_chain(n, DEFAULT_SPACING_UM, Species::A).unwrap();
        let vac = QuantumState::vacuum(&chain);
        let states = pxp_sequence(&vac, 6, PI).unwrap();
        assert!((states[6].overlap(&vac).unwrap() - 1.0).abs() < 1e-12, "n = {n}");
    }
}

#[test]
fn cluster_stabilizers_hold_for_many_sizes() {
    for n in 2..=24 {
        let st = StabilizerState::evolve_vacuum(n, &cluster_preparation(n)).unwrap();
        for p in cluster_stabilizers(n).unwrap() {
            assert_eq!(st.expect(&p).unwrap(), 1.0, "n = {n}");
        }
    }
}

proptest! {
    #[test]
    fn detector_matches_pattern_scan(bits in prop::collection::vec(0u8..2, 4..18)) {
        prop_assert_eq!(detect(&bits).unwrap().positions, pattern_scan(&bits));
    }

    #[test]
    fn classical_pulses_conserve_quasiparticles(bits in prop::collection::vec(0u8..2, 5..11)) {
        prop_assume!(blockaded(&bits));
        let chain = build_alternating_chain(bits.len(), DEFAULT_SPACING_UM, Species::A).unwrap();
        let q0 = detect(&bits).unwrap().count();
        for s in pxp_sequence(&QuantumState::basis_state(&chain, &bits).unwrap(), 6, PI).unwrap() {
            let dist = s.outcome_distribution().unwrap();
            let label = dist.iter().position(|&p| p > 1.0 - 1e-9).expect("stays a basis state");
            let now = rydqca_core::statevec::label_to_bits(label, bits.len());
            prop_assert!(blockaded(&now));
            prop_assert_eq!(detect(&now).unwrap().count(), q0);
        }
    }

    #[test]
    fn spam_round_trip(raw in prop::collection::vec(0.01f64..1.0, 16), first_b in any::<bool>()) {
        let total: f64 = raw.iter().sum();
        let dist: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let first = if first_b { Species::B } else { Species::A };
        let chain = build_alternating_chain(4, DEFAULT_SPACING_UM, first).unwrap();
        for p in [SpamParams::calibrated(), SpamParams::raw_calibration()] {
            let measured = forward(&dist, &chain, &p).unwrap();
            prop_assert!((measured.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let back = correct(&measured, &chain, &p).unwrap();
            prop_assert!(back.clipped_mass < 1e-12);
            for (a, b) in back.dist.iter().zip(&dist) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn label_round_trip() {
    for label in 0..64 {
        assert_eq!(bits_to_label(&rydqca_core::statevec::label_to_bits(label, 6)), label);
    }
}
