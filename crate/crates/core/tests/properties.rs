use bels_core::elements::{
    beamsplitter, compose, decompose, ElementKind, JonesMatrix, OpticalElement,
};
use bels_core::fockstate::{bell_fractions, bell_mixture, inner_product, superpose, BellKind};
use bels_core::interference::{coincidence_probabilities, FilterShape, SpectralFilter};
use num_complex::Complex64;
use proptest::prelude::*;

fn angle() -> impl Strategy<Value = f64> {
    -7.0..7.0f64
}

fn element_kind() -> impl Strategy<Value = ElementKind> {
    prop_oneof![
        Just(ElementKind::Identity),
        angle().prop_map(|theta| ElementKind::Rotation { theta }),
        angle().prop_map(|theta| ElementKind::Hwp { theta }),
        angle().prop_map(|theta| ElementKind::Qwp { theta }),
        (angle(), angle()).prop_map(|(phase, axis)| ElementKind::Retarder { phase, axis }),
        angle().prop_map(|theta| ElementKind::Faraday { theta }),
    ]
}

fn element() -> impl Strategy<Value = OpticalElement> {
    (element_kind(), 0.0..200.0f64, 0.0..200.0f64)
        .prop_map(|(k, h, v)| OpticalElement::new(k, h, v).unwrap())
}

fn state() -> impl Strategy<Value = bels_core::TwoPhotonState> {
    (
        prop::array::uniform4(0.0..1.0f64),
        prop::array::uniform4(0.0..6.3f64),
    )
        .prop_filter("non-zero weights", |(w, _)| w.iter().sum::<f64>() > 1e-3)
        .prop_map(|(w, p)| bell_mixture(w, p).unwrap())
}

fn filter() -> impl Strategy<Value = SpectralFilter> {
    (
        prop_oneof![Just(FilterShape::Gaussian), Just(FilterShape::Rectangular)],
        1.0..60.0f64,
        prop::option::of(5.0..100.0f64),
    )
        .prop_map(|(shape, bw, lc)| SpectralFilter::new(shape, 810.0, bw, lc).unwrap())
}

fn complex() -> impl Strategy<Value = Complex64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| Complex64::new(a, b))
}

proptest! {
    #[test]
    fn probability_is_conserved(
        s in state(),
        arm_a in prop::collection::vec(element(), 0..4),
        arm_b in prop::collection::vec(element(), 0..4),
        delay in -500.0..500.0f64,
        f in filter(),
        mu in 0.0..=1.0f64,
    ) {
        let p = coincidence_probabilities(&s, &arm_a, &arm_b, delay, &f, mu).unwrap();
        prop_assert!((p.total() - 1.0).abs() < 1e-9, "total {}", p.total());
        prop_assert!(p.coincidence.iter().chain(&p.bunched).all(|&x| x >= 0.0));
    }

    #[test]
    fn named_elements_are_unitary(k in element_kind()) {
        let j = k.jones();
        prop_assert!(j.is_unitary());
        prop_assert!(j.then_after(&j.adjoint()).max_abs_diff(&JonesMatrix::identity()) < 1e-12);
    }

    #[test]
    fn decomposition_round_trips(a in complex(), b in complex(), c in complex(), d in complex()) {
        let j = JonesMatrix::new(a, b, c, d);
        prop_assert!(compose(&decompose(&j)).max_abs_diff(&j) < 1e-12);
    }

    #[test]
    fn beamsplitter_is_linear(s1 in state(), s2 in state(), c1 in complex(), c2 in complex()) {
        let mixed = superpose(&[(c1, &s1), (c2, &s2)]).unwrap();
        let lhs = beamsplitter(&mixed).unwrap();
        let o1 = beamsplitter(&s1).unwrap();
        let o2 = beamsplitter(&s2).unwrap();
        let rhs = superpose(&[(c1, &o1), (c2, &o2)]).unwrap();
        for ((x, y), amp) in lhs.iter().chain(rhs.iter()) {
            prop_assert!((lhs.amplitude(x, y) - rhs.amplitude(x, y)).norm() < 1e-12, "{} {}", x, amp);
        }
        prop_assert!((o1.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inner_product_is_hermitian(s1 in state(), s2 in state()) {
        let xy = inner_product(&s1, &s2).unwrap();
        let yx = inner_product(&s2, &s1).unwrap();
        prop_assert!((xy - yx.conj()).norm() < 1e-12);
        prop_assert!((inner_product(&s1, &s1).unwrap().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bell_fractions_match_weights(w in prop::array::uniform4(0.01..1.0f64), p in prop::array::uniform4(0.0..6.3f64)) {
        let f = bell_fractions(&bell_mixture(w, p).unwrap()).unwrap();
        let total: f64 = w.iter().sum();
        for (k, kind) in BellKind::ALL.into_iter().enumerate() {
            prop_assert!((f.get(kind) - w[k] / total).abs() < 1e-12);
        }
    }

    #[test]
    fn walk_off_shifts_the_dip(
        s in state(),
        extra in 0.0..300.0f64,
        delay in -300.0..300.0f64,
        f in filter(),
    ) {
        // equal extra path on both polarizations in arm a moves the whole
        // landscape by that amount along the stage axis
        let sample = OpticalElement::new(ElementKind::Identity, extra, extra).unwrap();
        let shifted = coincidence_probabilities(&s, &[sample], &[], delay + extra, &f, 1.0).unwrap();
        let plain = coincidence_probabilities(&s, &[], &[], delay, &f, 1.0).unwrap();
        for (a, b) in shifted.coincidence.iter().zip(&plain.coincidence) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        // a matching compensator in arm b puts it back
        let comp = OpticalElement::new(ElementKind::Identity, extra, extra).unwrap();
        let back = coincidence_probabilities(&s, &[sample], &[comp], delay, &f, 1.0).unwrap();
        for (a, b) in back.coincidence.iter().zip(&plain.coincidence) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
