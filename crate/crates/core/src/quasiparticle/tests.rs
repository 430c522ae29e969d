use super::*;
use crate::lattice::{build_alternating_chain, ChainSpec};
use crate::qca_ideal::{masked_init_pulse, pxp_sequence};
use crate::statevec::ShotMeta;
use core::f64::consts::PI;
use proptest::prelude::*;

fn bits(s: &str) -> Vec<u8> {
    s.bytes().map(|b| b - b'0').collect()
}

fn q(s: &str) -> usize {
    detect(&bits(s)).unwrap().count()
}

/// Independent scan: bulk windows `0001`, `1000`, `1001` starting at
/// `j−2`, plus the edge windows.
fn brute_force(b: &[u8]) -> Vec<usize> {
    let s: String = b.iter().map(|&x| (b'0' + x) as char).collect();
    let l = b.len();
    let mut out = Vec::new();
    for j in 1..l {
        let hit = if j == 1 {
            &s[0..3] == "001"
        } else if j == l - 1 {
            &s[l - 3..] == "100"
        } else {
            matches!(&s[j - 2..j + 2], "0001" | "1000" | "1001")
        };
        if hit {
            out.push(j);
        }
    }
    out
}

fn ensemble(shots: &[&str], step: usize) -> ShotEnsemble {
    let meta = ShotMeta { step: Some(step), ..Default::default() };
    ShotEnsemble::new(shots.iter().map(|s| bits(s)).collect(), meta)
}

#[test]
fn detection_examples() {
    assert_eq!(q("10100001010"), 2);
    assert_eq!(detect(&bits("10100001010")).unwrap().positions, vec![4, 6]);
    assert_eq!(q("00000000000"), 0);
    assert_eq!(q("01010101010"), 0);
    assert_eq!(q("10101010101"), 0);
    // a lost atom in the all-zero vacuum looks like two walls
    assert_eq!(q("00000100000"), 2);
    assert!(detect(&bits("010")).is_err());
}

#[test]
fn detection_matches_pattern_scan_exhaustively() {
    let l = 11;
    for label in 0..1usize << l {
        let b = label_to_bits(label, l);
        let rec = detect(&b).unwrap();
        assert_eq!(rec.positions, brute_force(&b), "{b:?}");
        assert!(rec.positions.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn bulk_windows_are_mutually_exclusive() {
    for label in 0..16usize {
        let w = label_to_bits(label, 4);
        let s: String = w.iter().map(|&x| (b'0' + x) as char).collect();
        let hits = ["0001", "1000", "1001"].iter().filter(|p| **p == s).count();
        assert!(hits <= 1);
    }
}

fn exact_q_trace(state: &QuantumState, n_pulses: usize) -> Vec<f64> {
    pxp_sequence(state, n_pulses, PI)
        .unwrap()
        .iter()
        .map(|s| mean_q_exact(s).unwrap())
        .collect()
}

#[test]
fn q_is_conserved_by_pi_pulses() {
    let ch = build_alternating_chain(9, 5.3, Species::A).unwrap();
    // blockade-respecting configurations only
    for label in (0..1usize << 9).filter(|l| l & (l >> 1) == 0) {
        let s = QuantumState::basis_state(&ch, &label_to_bits(label, 9)).unwrap();
        let trace = exact_q_trace(&s, 12);
        assert!(trace.iter().all(|&x| (x - trace[0]).abs() < 1e-12), "{label:09b}: {trace:?}");
    }
}

/// Single domain wall: vacuum left of `first`, B atoms excited from `first` on.
fn single_wall_run(l: usize, first: usize, n_pulses: usize) -> Vec<ShotEnsemble> {
    let ch = build_alternating_chain(l, 5.3, Species::A).unwrap();
    let mask: Vec<usize> = ch.sites_of(Species::B).filter(|&s| s < first).collect();
    let mut s = QuantumState::vacuum(&ch);
    masked_init_pulse(&mut s, &mask, PI).unwrap();
    pxp_sequence(&s, n_pulses, PI)
        .unwrap()
        .iter()
        .enumerate()
        .map(|(k, st)| {
            let mut e = st.sample(200, 3 + k as u64).unwrap();
            e.meta.step = Some(k);
            e
        })
        .collect()
}

#[test]
fn single_wall_moves_one_site_per_three_pulses_and_reflects() {
    let l = 11;
    let hist = position_histogram(&single_wall_run(l, 7, 60), 1).unwrap();
    let peaks: Vec<usize> = hist
        .iter()
        .map(|h| {
            let p = h.peaks();
            assert_eq!(p.len(), 1, "step {}: {:?}", h.step, h.counts);
            p[0]
        })
        .collect();
    // runs of equal peaks: three pulses per site in the bulk, two at the
    // edge where the wall turns around
    let mut runs: Vec<(usize, usize)> = Vec::new();
    for &p in &peaks {
        match runs.last_mut() {
            Some((q, len)) if *q == p => *len += 1,
            _ => runs.push((p, 1)),
        }
    }
    let (first, last) = (runs[0], runs[runs.len() - 1]);
    for &(p, len) in &runs[1..runs.len() - 1] {
        let want = if p == 1 || p == l - 1 { 2 } else { 3 };
        assert_eq!(len, want, "{peaks:?}");
    }
    assert!(first.1 <= 3 && last.1 <= 3);
    assert!(runs.windows(2).all(|w| w[0].0.abs_diff(w[1].0) == 1), "{peaks:?}");
    assert!(peaks.contains(&1) && peaks.contains(&(l - 1)));
    for h in &hist {
        assert_eq!(h.n_conditioned, 200);
    }
}

#[test]
fn vacuum_shots_give_empty_histograms() {
    let e = ensemble(&["00000", "00000"], 0);
    let hist = position_histogram(&[e.clone(), e], 1).unwrap();
    assert!(hist.iter().all(|h| h.counts.is_none() && h.n_conditioned == 0));
    assert!(hist[0].normalized().is_none() && hist[0].peaks().is_empty());
}

#[test]
fn histogram_counts_and_normalization() {
    let e = ensemble(&["0001010", "0001010", "1010100", "0000000"], 4);
    let h = &position_histogram(&[e], 1).unwrap()[0];
    assert_eq!(h.step, 4);
    assert_eq!(h.n_conditioned, 3);
    let counts = h.counts.as_ref().unwrap();
    assert_eq!(counts[2], 2);
    let norm = h.normalized().unwrap();
    assert!((norm.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn staggered_magnetization_examples() {
    let ch = build_alternating_chain(7, 5.3, Species::A).unwrap();
    let z2 = QuantumState::basis_state(&ch, &[1, 0, 1, 0, 1, 0, 1]).unwrap();
    assert_eq!(staggered_magnetization(&z2).unwrap(), 1.0);
    assert_eq!(staggered_magnetization(&QuantumState::vacuum(&ch)).unwrap(), 0.0);
    let m: Vec<f64> = pxp_sequence(&QuantumState::vacuum(&ch), 12, PI)
        .unwrap()
        .iter()
        .map(|s| staggered_magnetization(s).unwrap())
        .collect();
    let want = [0.0, 1.0, 1.0, 0.0, -1.0, -1.0];
    for (k, x) in m.iter().enumerate() {
        assert!((x - want[k % 6]).abs() < 1e-12, "{m:?}");
    }
    let fit = fit_magnetization_decay(&m).unwrap();
    assert!(fit.tau > 1e3 || fit.tau.is_infinite(), "{fit:?}");
    let single = ChainSpec::from_pattern_str("AAAA", 5.3, crate::lattice::C6Table::standard()).unwrap();
    assert!(staggered_magnetization(&QuantumState::vacuum(&single)).is_err());
}

#[test]
fn shot_magnetization_uses_site_means() {
    let e = ensemble(&["10101", "10001"], 0);
    let pattern = [Species::A, Species::B, Species::A, Species::B, Species::A];
    let m = staggered_magnetization_shots(&e, &pattern).unwrap();
    assert!((m - 5.0 / 6.0).abs() < 1e-12);
}

#[test]
fn growth_examples() {
    let ch = build_alternating_chain(15, 5.3, Species::A).unwrap();
    let vac = QuantumState::vacuum(&ch);
    let ideal = exact_q_trace(&vac, 14);
    assert!(ideal.iter().all(|&x| x.abs() < 1e-12));

    let q14 = |dev: f64| {
        let states = pxp_sequence(&vac, 14, PI * (1.0 + dev)).unwrap();
        mean_q_exact(&states[14]).unwrap()
    };
    for sign in [1.0, -1.0] {
        assert!(q14(0.2 * sign) > q14(0.1 * sign), "sign {sign}");
    }

    let ensembles: Vec<ShotEnsemble> = (0..7).map(|k| ensemble(&["0000000", "1010101"], k)).collect();
    let g = quasiparticle_growth(&ensembles, true).unwrap();
    assert_eq!(g.iter().map(|p| p.pulses).collect::<Vec<_>>(), vec![1, 2, 4, 5]);
    assert!(g.iter().all(|p| p.mean_q == 0.0 && p.stderr == 0.0));
    assert_eq!(quasiparticle_growth(&ensembles, false).unwrap().len(), 7);
}

#[test]
fn mean_q_statistics() {
    let e = ensemble(&["0001010", "0000000"], 0);
    let (m, se) = mean_q(&e).unwrap();
    assert!((m - 0.5).abs() < 1e-12 && (se - 0.5).abs() < 1e-12);
    assert!(mean_q(&ensemble(&[], 0)).is_err());
}

proptest! {
    #[test]
    fn positions_are_increasing_and_in_range(b in proptest::collection::vec(0u8..2, 4..40)) {
        let rec = detect(&b).unwrap();
        prop_assert!(rec.positions.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(rec.positions.iter().all(|&j| j >= 1 && j < b.len()));
        prop_assert_eq!(rec.positions, brute_force(&b));
    }
}
