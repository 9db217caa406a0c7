//! Independent reference calculations for the beamsplitter and the coincidence
//! model. None of these go through the Gram-matrix code in `interference`.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use bels_core::elements::{apply_to_arm, beamsplitter, stack_jones, ElementKind, JonesMatrix, OpticalElement};
use bels_core::fockstate::{bell_mixture, make_bell, BellKind, Mode, Path, Pol, Ports, TwoPhotonState};
use bels_core::interference::{
    coincidence_probabilities, coincidence_probabilities_at_overlap, overlap_kernel,
    ChannelProbabilities, CoincidenceChannel, Detector, FilterShape, SpectralFilter,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Poly = BTreeMap<(Mode, Mode), Complex64>;

fn m(path: Path, pol: Pol) -> Mode {
    Mode { path, pol }
}

/// Creation operator of an input mode written in output creation operators,
/// a† → (c† + d†)/√2, b† → (c† − d†)/√2.
fn expand_input(mode: Mode) -> Vec<(Mode, f64)> {
    let s = FRAC_1_SQRT_2;
    match mode.path {
        Path::A => vec![(m(Path::C, mode.pol), s), (m(Path::D, mode.pol), s)],
        Path::B => vec![(m(Path::C, mode.pol), s), (m(Path::D, mode.pol), -s)],
        _ => unreachable!(),
    }
}

/// Multiplies out Σ c·x†y† into a commuting polynomial in output operators.
fn expand_state(terms: &[(Mode, Mode, Complex64)]) -> Poly {
    let mut out = Poly::new();
    for &(x, y, c) in terms {
        for (mx, cx) in expand_input(x) {
            for (my, cy) in expand_input(y) {
                let key = if mx <= my { (mx, my) } else { (my, mx) };
                *out.entry(key).or_default() += c * cx * cy;
            }
        }
    }
    out.retain(|_, v| v.norm() > 1e-15);
    out
}

/// Normalized Fock amplitude of a monomial: (m†)² = √2·|2_m⟩.
fn fock_amplitude(poly: &Poly, x: Mode, y: Mode) -> Complex64 {
    let key = if x <= y { (x, y) } else { (y, x) };
    let c = poly.get(&key).copied().unwrap_or_default();
    if x == y {
        c * 2f64.sqrt()
    } else {
        c
    }
}

fn bell_creation_terms(kind: BellKind) -> Vec<(Mode, Mode, Complex64)> {
    let s = Complex64::from(FRAC_1_SQRT_2);
    let (ah, av) = (m(Path::A, Pol::H), m(Path::A, Pol::V));
    let (bh, bv) = (m(Path::B, Pol::H), m(Path::B, Pol::V));
    match kind {
        BellKind::PhiPlus => vec![(ah, bh, s), (av, bv, s)],
        BellKind::PhiMinus => vec![(ah, bh, s), (av, bv, -s)],
        BellKind::PsiPlus => vec![(ah, bv, s), (av, bh, s)],
        BellKind::PsiMinus => vec![(ah, bv, s), (av, bh, -s)],
    }
}

fn assert_state_matches(state: &TwoPhotonState, expected: &[(Mode, Mode, f64)]) {
    let mut seen = 0;
    for ((x, y), amp) in state.iter() {
        if amp.norm() < 1e-14 {
            continue;
        }
        let want = expected
            .iter()
            .find(|(a, b, _)| (*a, *b) == (x, y) || (*b, *a) == (x, y))
            .unwrap_or_else(|| panic!("unexpected term {x}{y} = {amp}"));
        assert!((amp - Complex64::from(want.2)).norm() < 1e-14, "{x}{y}: {amp} vs {}", want.2);
        seen += 1;
    }
    assert_eq!(seen, expected.len());
}

#[test]
fn beamsplitter_outputs_match_printed_bell_transformations() {
    let (hc, vc) = (m(Path::C, Pol::H), m(Path::C, Pol::V));
    let (hd, vd) = (m(Path::D, Pol::H), m(Path::D, Pol::V));
    let s = FRAC_1_SQRT_2;
    // |HV⟩c|0⟩d − |0⟩c|HV⟩d, all over √2
    assert_state_matches(
        &beamsplitter(&make_bell(BellKind::PsiPlus)).unwrap(),
        &[(hc, vc, s), (hd, vd, -s)],
    );
    // −(|H⟩c|V⟩d − |V⟩c|H⟩d)/√2
    assert_state_matches(
        &beamsplitter(&make_bell(BellKind::PsiMinus)).unwrap(),
        &[(hc, vd, -s), (vc, hd, s)],
    );
    // (|HH⟩c ± |VV⟩c − |HH⟩d ∓ |VV⟩d)/(2√2) with |HH⟩ = (a†)²|0⟩ = √2|2⟩
    for (kind, pm) in [(BellKind::PhiPlus, 1.0), (BellKind::PhiMinus, -1.0)] {
        assert_state_matches(
            &beamsplitter(&make_bell(kind)).unwrap(),
            &[(hc, hc, 0.5), (vc, vc, pm * 0.5), (hd, hd, -0.5), (vd, vd, -pm * 0.5)],
        );
    }
}

#[test]
fn beamsplitter_matches_operator_expansion_for_all_bell_states() {
    for kind in BellKind::ALL {
        let poly = expand_state(&bell_creation_terms(kind));
        let out = beamsplitter(&make_bell(kind)).unwrap();
        let modes: Vec<Mode> = [Path::C, Path::D]
            .into_iter()
            .flat_map(|p| Pol::BOTH.map(|q| m(p, q)))
            .collect();
        for &x in &modes {
            for &y in &modes {
                let want = fock_amplitude(&poly, x, y);
                assert!((out.amplitude(x, y) - want).norm() < 1e-14, "{kind} {x}{y}");
            }
        }
        assert!((out.norm_sqr() - 1.0).abs() < 1e-14);
    }
}

fn random_state(rng: &mut ChaCha8Rng) -> TwoPhotonState {
    let w: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>());
    let ph: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>() * std::f64::consts::TAU);
    bell_mixture(w, ph).unwrap()
}

fn random_unitary(rng: &mut ChaCha8Rng) -> OpticalElement {
    let kinds = [
        ElementKind::Rotation { theta: rng.random::<f64>() * 6.3 },
        ElementKind::Hwp { theta: rng.random::<f64>() * 6.3 },
        ElementKind::Qwp { theta: rng.random::<f64>() * 6.3 },
        ElementKind::Retarder {
            phase: rng.random::<f64>() * 6.3,
            axis: rng.random::<f64>() * 6.3,
        },
        ElementKind::Faraday { theta: rng.random::<f64>() * 6.3 },
    ];
    OpticalElement::thin(kinds[rng.random_range(0..kinds.len())])
}

fn random_arm(rng: &mut ChaCha8Rng) -> Vec<OpticalElement> {
    (0..rng.random_range(0..4)).map(|_| random_unitary(rng)).collect()
}

/// Single-photon amplitude into a detector, written out from the Jones matrix
/// and the beamsplitter rows.
fn photon_amp(j: &JonesMatrix, arm: Path, pol: Pol, det: Detector) -> Complex64 {
    let jones = match (det.pol(), pol) {
        (Pol::H, Pol::H) => j.a,
        (Pol::H, Pol::V) => j.b,
        (Pol::V, Pol::H) => j.c,
        (Pol::V, Pol::V) => j.d,
    };
    let bs = match (arm, det.path()) {
        (Path::B, Path::D) => -FRAC_1_SQRT_2,
        _ => FRAC_1_SQRT_2,
    };
    jones * bs
}

/// Photons labelled by their arm and never interfering: a sum of
/// probabilities over which photon reached which detector.
fn distinguishable_oracle(
    state: &TwoPhotonState,
    arm_a: &[OpticalElement],
    arm_b: &[OpticalElement],
) -> ([f64; 6], [f64; 4]) {
    let (ja, jb) = (stack_jones(arm_a), stack_jones(arm_b));
    // joint amplitude for photon a at x and photon b at y
    let joint = |x: Detector, y: Detector| -> Complex64 {
        let mut s = Complex64::default();
        for pa in Pol::BOTH {
            for pb in Pol::BOTH {
                let c = state.amplitude(m(Path::A, pa), m(Path::B, pb));
                s += c * photon_amp(&ja, Path::A, pa, x) * photon_amp(&jb, Path::B, pb, y);
            }
        }
        s
    };
    let mut coinc = [0.0; 6];
    for ch in CoincidenceChannel::ALL {
        let (x, y) = ch.detectors();
        coinc[ch.index()] = joint(x, y).norm_sqr() + joint(y, x).norm_sqr();
    }
    let bunched = Detector::ALL.map(|d| joint(d, d).norm_sqr());
    (coinc, bunched)
}

/// Indistinguishable photons via the Fock-state path: transform the state,
/// interfere it on the beamsplitter and read off output amplitudes.
fn fock_oracle(
    state: &TwoPhotonState,
    arm_a: &[OpticalElement],
    arm_b: &[OpticalElement],
) -> ([f64; 6], [f64; 4]) {
    let s = apply_to_arm(state, &stack_jones(arm_a), Path::A);
    let s = apply_to_arm(&s, &stack_jones(arm_b), Path::B);
    let out = beamsplitter(&s).unwrap();
    assert_eq!(out.ports(), Ports::Output);
    let mode = |d: Detector| m(d.path(), d.pol());
    let mut coinc = [0.0; 6];
    for ch in CoincidenceChannel::ALL {
        let (x, y) = ch.detectors();
        coinc[ch.index()] = out.amplitude(mode(x), mode(y)).norm_sqr();
    }
    let bunched = Detector::ALL.map(|d| out.amplitude(mode(d), mode(d)).norm_sqr());
    (coinc, bunched)
}

fn assert_probs(p: &ChannelProbabilities, coinc: &[f64; 6], bunched: &[f64; 4], tol: f64) {
    for (i, (got, want)) in p.coincidence.iter().zip(coinc).enumerate() {
        assert!((got - want).abs() < tol, "channel {i}: {got} vs {want}");
    }
    for (i, (got, want)) in p.bunched.iter().zip(bunched).enumerate() {
        assert!((got - want).abs() < tol, "bunched {i}: {got} vs {want}");
    }
}

#[test]
fn fully_distinguishable_matches_tensor_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let state = random_state(&mut rng);
        let (arm_a, arm_b) = (random_arm(&mut rng), random_arm(&mut rng));
        let p = coincidence_probabilities_at_overlap(&state, &arm_a, &arm_b, 0.0).unwrap();
        let (c, b) = distinguishable_oracle(&state, &arm_a, &arm_b);
        assert_probs(&p, &c, &b, 1e-12);
    }
}

#[test]
fn fully_indistinguishable_matches_fock_path() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..300 {
        let state = random_state(&mut rng);
        let (arm_a, arm_b) = (random_arm(&mut rng), random_arm(&mut rng));
        let p = coincidence_probabilities_at_overlap(&state, &arm_a, &arm_b, 1.0).unwrap();
        let (c, b) = fock_oracle(&state, &arm_a, &arm_b);
        assert_probs(&p, &c, &b, 1e-12);
    }
}

#[test]
fn partial_overlap_interpolates_linearly_between_oracles() {
    let filter = SpectralFilter::new(FilterShape::Gaussian, 810.0, 10.0, Some(59.0)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..300 {
        let state = random_state(&mut rng);
        let (arm_a, arm_b) = (random_arm(&mut rng), random_arm(&mut rng));
        let delay = rng.random_range(-150.0..150.0);
        let mu = rng.random_range(0.0..=1.0);
        let k = mu * overlap_kernel(&filter, delay);
        let p = coincidence_probabilities(&state, &arm_a, &arm_b, delay, &filter, mu).unwrap();
        let (c0, b0) = distinguishable_oracle(&state, &arm_a, &arm_b);
        let (c1, b1) = fock_oracle(&state, &arm_a, &arm_b);
        let c: [f64; 6] = std::array::from_fn(|i| k * c1[i] + (1.0 - k) * c0[i]);
        let b: [f64; 4] = std::array::from_fn(|i| k * b1[i] + (1.0 - k) * b0[i]);
        assert_probs(&p, &c, &b, 1e-12);
    }
}

#[test]
fn psi_minus_cross_channels_follow_overlap() {
    // Anti-bunched channels rise from 1/4 (distinguishable) to 1/2 at full overlap.
    let state = make_bell(BellKind::PsiMinus);
    let filter = SpectralFilter::new(FilterShape::Gaussian, 810.0, 10.0, Some(59.0)).unwrap();
    for delay in [-300.0, -59.0, -29.5, 0.0, 10.0, 400.0] {
        let p = coincidence_probabilities(&state, &[], &[], delay, &filter, 1.0).unwrap();
        let k = overlap_kernel(&filter, delay);
        for ch in [CoincidenceChannel::HcVd, CoincidenceChannel::VcHd] {
            assert!((p.get(ch) - (1.0 + k) / 4.0).abs() < 1e-14);
        }
        let (c0, _) = distinguishable_oracle(&state, &[], &[]);
        let (c1, _) = fock_oracle(&state, &[], &[]);
        let i = CoincidenceChannel::VcHd.index();
        assert!((c0[i] - 0.25).abs() < 1e-14 && (c1[i] - 0.5).abs() < 1e-14);
    }
}
