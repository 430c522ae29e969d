use super::*;
use crate::lattice::{build_alternating_chain, Species};
use crate::rng::stream_rng;
use core::f64::consts::{FRAC_1_SQRT_2, PI};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn chain(n: usize) -> ChainSpec {
    build_alternating_chain(n, 5.3, Species::A).unwrap()
}

/// exp(M) for a 2×2 matrix by a long Taylor series (test oracle).
fn expm2(m: [[C64; 2]; 2]) -> [[C64; 2]; 2] {
    let mut result = [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]];
    let mut term = result;
    for k in 1..60 {
        let mut next = [[c(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for l in 0..2 {
                    next[i][j] += term[i][l] * m[l][j];
                }
                next[i][j] /= k as f64;
            }
        }
        term = next;
        for i in 0..2 {
            for j in 0..2 {
                result[i][j] += term[i][j];
            }
        }
    }
    result
}

fn random_state(n: usize, seed: u64) -> QuantumState {
    let mut rng = stream_rng(seed, 99);
    let dim = 1 << n;
    let mut amps: Vec<C64> = (0..dim)
        .map(|_| c(crate::rng::standard_normal(&mut rng), crate::rng::standard_normal(&mut rng)))
        .collect();
    let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
    QuantumState::from_amplitudes(&chain(n), vec![2; n], amps).unwrap()
}

#[test]
fn product_state_ordering() {
    let ch = chain(4);
    let s = QuantumState::vacuum(&ch);
    assert_eq!(s.amplitudes()[0], c(1.0, 0.0));
    let s = QuantumState::basis_state(&ch, &[1, 0, 0, 0]).unwrap();
    assert_eq!(s.amplitudes()[0b1000], c(1.0, 0.0));

    let kets = vec![SiteKet::ground(), SiteKet::plus(), SiteKet::ground(), SiteKet::ground()];
    let s = QuantumState::product_state(&ch, &kets).unwrap();
    let nonzero: Vec<usize> = (0..16).filter(|&i| s.amplitudes()[i].norm() > 0.0).collect();
    assert_eq!(nonzero, vec![0b0000, 0b0100]);
    assert!((s.amplitudes()[0b0100].re - FRAC_1_SQRT_2).abs() < 1e-15);
}

#[test]
fn unnormalized_site_ket_rejected() {
    let ch = chain(2);
    let bad = SiteKet(vec![c(0.9_f64.sqrt() * 0.9_f64.sqrt(), 0.0), c(0.0, 0.0)]);
    let err = QuantumState::product_state(&ch, &[bad, SiteKet::ground()]).unwrap_err();
    assert!(matches!(err, Error::InvalidArgument(_)));
}

#[test]
fn expectation_examples() {
    let ch = chain(4);
    let vac = QuantumState::vacuum(&ch);
    let z0 = PauliString::single(4, 0, PauliFactor::Z);
    assert_eq!(vac.expect(&z0).unwrap(), 1.0);

    // GHZ₂ with a dense 4×4 X⊗X oracle.
    let ch2 = chain(2);
    let h = FRAC_1_SQRT_2;
    let amps = vec![c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)];
    let ghz = QuantumState::from_amplitudes(&ch2, vec![2, 2], amps.clone()).unwrap();
    let mut xx = [[c(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        xx[i][3 - i] = c(1.0, 0.0);
    }
    let mut oracle = c(0.0, 0.0);
    for i in 0..4 {
        for j in 0..4 {
            oracle += amps[i].conj() * xx[i][j] * amps[j];
        }
    }
    let xx_str: PauliString = "XX".parse().unwrap();
    assert!((ghz.expect(&xx_str).unwrap() - oracle.re).abs() < 1e-12);
    assert!((oracle.re - 1.0).abs() < 1e-12);

    let plus = QuantumState::product_state(&chain(1), &[SiteKet::plus()]).unwrap();
    assert!(plus.expect(&"Z".parse().unwrap()).unwrap().abs() < 1e-15);
}

#[test]
fn non_hermitian_and_intermediate_population_errors() {
    let ch = chain(2);
    let s = QuantumState::vacuum(&ch);
    let op: PauliString = "+iZZ".parse().unwrap();
    assert!(s.expect(&op).is_err());
    assert!(s.expect_complex(&op).is_ok());

    let e = 0.6_f64.sqrt();
    let ket = SiteKet(vec![c(0.8_f64.sqrt() * 0.0 + 0.8, 0.0), c(e * 0.0 + 0.6, 0.0), c(0.0, 0.0)]);
    let s3 = QuantumState::product_state(&ch, &[ket, SiteKet::ground()]).unwrap();
    let err = s3.expect(&"ZI".parse().unwrap()).unwrap_err();
    assert!(matches!(err, Error::Precondition(_)));
    // Untouched three-level site is fine.
    assert_eq!(s3.expect(&"IZ".parse().unwrap()).unwrap(), 1.0);
}

#[test]
fn rotation_matches_matrix_exponential() {
    for &(theta, phi) in &[(0.0, 0.0), (PI, 0.0), (PI / 2.0, 0.0), (1.234, 0.77), (2.0 * PI, 2.1)] {
        let g = [[c(0.0, 0.0), C64::from_polar(1.0, -phi)], [C64::from_polar(1.0, phi), c(0.0, 0.0)]];
        let arg = c(0.0, -theta / 2.0);
        let oracle = expm2([[g[0][0] * arg, g[0][1] * arg], [g[1][0] * arg, g[1][1] * arg]]);
        let got = rotation_matrix(theta, phi);
        for i in 0..2 {
            for j in 0..2 {
                assert!((got[i][j] - oracle[i][j]).norm() < 1e-12, "θ={theta} φ={phi}");
            }
        }
    }
    let ch = chain(1);
    let mut s = QuantumState::vacuum(&ch);
    s.apply_product_rotation(Species::A, PI, 0.0, &[]).unwrap();
    assert!((s.amplitudes()[1] - c(0.0, -1.0)).norm() < 1e-15);
    let mut s = QuantumState::vacuum(&ch);
    s.apply_product_rotation(Species::A, PI / 2.0, 0.0, &[]).unwrap();
    assert!((s.amplitudes()[0] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    assert!((s.amplitudes()[1] - c(0.0, -FRAC_1_SQRT_2)).norm() < 1e-15);
    let mut s = random_state(1, 3);
    let before = s.clone();
    s.apply_product_rotation(Species::A, 0.0, 0.3, &[]).unwrap();
    assert!(s.distance_mod_phase(&before).unwrap() < 1e-15);
}

#[test]
fn rotation_mask_validation() {
    let ch = chain(3);
    let mut s = QuantumState::vacuum(&ch);
    assert!(s.apply_product_rotation(Species::A, PI, 0.0, &[1]).is_err());
    s.apply_product_rotation(Species::A, PI, 0.0, &[2]).unwrap();
    let pops = s.populations();
    assert!((pops[0] - 1.0).abs() < 1e-12 && pops[2].abs() < 1e-12);
}

#[test]
fn sampling_examples() {
    let ch = chain(4);
    let s = QuantumState::basis_state(&ch, &[1, 0, 1, 0]).unwrap();
    let shots = s.sample(200, 5).unwrap();
    assert!(shots.bitstrings.iter().all(|b| b == &vec![1, 0, 1, 0]));

    let plus = QuantumState::product_state(&chain(1), &[SiteKet::plus()]).unwrap();
    let shots = plus.sample(100_000, 11).unwrap();
    let frac = shots.site_means()[0].0;
    assert!((0.494..=0.506).contains(&frac), "fraction {frac}");

    let a = plus.sample(1000, 42).unwrap();
    let b = plus.sample(1000, 42).unwrap();
    assert_eq!(a, b);
    assert!(plus.sample(0, 1).is_err());
}

#[test]
fn lost_sites_read_zero() {
    let ch = chain(2);
    let mut s = QuantumState::basis_state(&ch, &[1, 1]).unwrap();
    s.set_lost(0);
    let shots = s.sample(10, 0).unwrap();
    assert!(shots.bitstrings.iter().all(|b| b == &vec![0, 1]));
}

#[test]
fn chi_square_sampling_consistency() {
    // 5 sites, 32 outcomes, 31 dof; the p = 0.001 critical value is 61.098.
    let s = random_state(5, 17);
    let probs = s.outcome_distribution().unwrap();
    let n = 100_000;
    let shots = s.sample(n, 2024).unwrap();
    let mut counts = vec![0usize; 32];
    for b in &shots.bitstrings {
        counts[bits_to_label(b)] += 1;
    }
    let chi2: f64 = counts
        .iter()
        .zip(&probs)
        .map(|(&k, &p)| {
            let e = p * n as f64;
            (k as f64 - e).powi(2) / e
        })
        .sum();
    assert!(chi2 < 61.098, "chi2 = {chi2}");
}

#[test]
fn three_level_layout() {
    let ch = chain(2);
    let s = QuantumState::product_state(&ch, &[SiteKet::three_level(true), SiteKet::ground()]).unwrap();
    assert_eq!(s.dim(), 6);
    assert_eq!(s.populations(), vec![1.0, 0.0]);
    assert_eq!(s.outcome_distribution().unwrap(), vec![0.0, 0.0, 1.0, 0.0]);
}

#[test]
fn pauli_text_round_trip() {
    let p: PauliString = "-XZIIY".parse().unwrap();
    assert_eq!(p.to_string(), "-XZIIY");
    assert_eq!(p.weight(), 3);
    let q: PauliString = "+iZ".parse().unwrap();
    assert_eq!(q.to_string(), "+iZ");
    let xy = "XI".parse::<PauliString>().unwrap().try_mul(&"YI".parse().unwrap()).unwrap();
    assert_eq!(xy.to_string(), "+iZI");
}

proptest! {
    #[test]
    fn rotations_preserve_norm(seed in 0u64..1000, theta in 0.0f64..6.3, phi in 0.0f64..6.3) {
        let mut s = random_state(5, seed);
        s.apply_product_rotation(Species::B, theta, phi, &[]).unwrap();
        s.apply_product_rotation(Species::A, theta * 0.5, -phi, &[2]).unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        prop_assert!((s.expect(&PauliString::identity(5)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn three_level_rotation_preserves_norm(theta in 0.0f64..6.3, phi in 0.0f64..6.3) {
        let h = FRAC_1_SQRT_2;
        let ket = SiteKet(vec![c(h, 0.0), c(0.5, 0.0), c(0.0, 0.5)]);
        let ch = chain(3);
        let mut s = QuantumState::product_state(&ch, &[ket.clone(), SiteKet::plus(), ket]).unwrap();
        s.apply_product_rotation(Species::A, theta, phi, &[]).unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
    }
}
