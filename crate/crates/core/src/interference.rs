//! Polarization-resolved coincidence probabilities with partial photon
//! distinguishability.
//!
//! Each photon carries a temporal label: the optical path (µm) accumulated in
//! its input arm, which depends on the arm, on the polarization it was emitted
//! with, and (for arm b) on the stage delay. Two-photon amplitudes that reach
//! the same pair of detectors interfere with a weight set by the overlap of
//! their relative-delay wavepackets. For the direct/exchanged pair of a single
//! source term this reduces to
//!
//! `P = |A₁₂|² + |A₂₁|² + 2·Re(A₁₂·A₂₁*)·μ·K(Δ)`
//!
//! with `Δ = t_a − t_b`, `K` the [`overlap_kernel`] and `μ` an additional
//! mode-overlap factor (spatial/spectral mismatch not captured by delay).
//! The relative-delay autocorrelation is `K(x/2)`, which keeps the model a
//! proper inner product, so probability is conserved exactly for any kernel.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::elements::{beamsplitter_amplitude, stack_jones, JonesMatrix, OpticalElement};
use crate::error::{Error, Result};
use crate::fockstate::{Path, Pol, Ports, TwoPhotonState};

/// `x` such that `sinc²(πx) = 1/2`.
pub const SINC2_HALF_MAX: f64 = 0.442_946_470_689_452_37;

const NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterShape {
    Gaussian,
    Rectangular,
}

/// Band-pass filter description. The dip FWHM `coherence_length` is normally
/// configured directly; when absent it falls back to `λ²/(2πΔλ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralFilter {
    pub shape: FilterShape,
    /// nm
    pub center_wavelength: f64,
    /// nm
    pub bandwidth_fwhm: f64,
    /// µm
    #[serde(default)]
    pub coherence_length: Option<f64>,
}

impl SpectralFilter {
    pub fn new(
        shape: FilterShape,
        center_wavelength: f64,
        bandwidth_fwhm: f64,
        coherence_length: Option<f64>,
    ) -> Result<Self> {
        let f = SpectralFilter {
            shape,
            center_wavelength,
            bandwidth_fwhm,
            coherence_length,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.center_wavelength > 0.0 && self.center_wavelength.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "filter center wavelength must be positive, got {}",
                self.center_wavelength
            )));
        }
        if !(self.bandwidth_fwhm > 0.0 && self.bandwidth_fwhm.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "filter bandwidth must be positive, got {}",
                self.bandwidth_fwhm
            )));
        }
        if let Some(l) = self.coherence_length {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "coherence length must be positive, got {l}"
                )));
            }
        }
        Ok(())
    }

    /// `λ²/(2πΔλ)` in µm. For 810 nm and 10 nm this is ≈10.4 µm, well short of
    /// the dip widths seen with such filters, which is why the configured value
    /// takes precedence.
    pub fn formula_coherence_length(&self) -> f64 {
        let l = self.center_wavelength;
        l * l / (2.0 * std::f64::consts::PI * self.bandwidth_fwhm) * 1e-3
    }

    /// Dip FWHM in µm.
    pub fn coherence_length(&self) -> f64 {
        self.coherence_length
            .unwrap_or_else(|| self.formula_coherence_length())
    }
}

/// Two-photon overlap `K(Δ)` for relative delay `delta` (µm). `K(0) = 1`, even,
/// decays to 0; the central-lobe FWHM equals the filter's coherence length.
pub fn overlap_kernel(filter: &SpectralFilter, delta: f64) -> f64 {
    let lc = filter.coherence_length();
    match filter.shape {
        FilterShape::Gaussian => (-4.0 * std::f64::consts::LN_2 * delta * delta / (lc * lc)).exp(),
        FilterShape::Rectangular => {
            let l_eff = lc / (2.0 * SINC2_HALF_MAX);
            let x = std::f64::consts::PI * delta / l_eff;
            if x == 0.0 {
                1.0
            } else {
                let s = x.sin() / x;
                s * s
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Detector {
    Hc,
    Vc,
    Hd,
    Vd,
}

impl Detector {
    pub const ALL: [Detector; 4] = [Detector::Hc, Detector::Vc, Detector::Hd, Detector::Vd];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn path(self) -> Path {
        match self {
            Detector::Hc | Detector::Vc => Path::C,
            Detector::Hd | Detector::Vd => Path::D,
        }
    }

    pub fn pol(self) -> Pol {
        match self {
            Detector::Hc | Detector::Hd => Pol::H,
            Detector::Vc | Detector::Vd => Pol::V,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Detector::Hc => "Hc",
            Detector::Vc => "Vc",
            Detector::Hd => "Hd",
            Detector::Vd => "Vd",
        }
    }
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Detector {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Detector::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| format!("unknown detector `{s}` (expected Hc, Vc, Hd or Vd)"))
    }
}

/// The six detector pairs. Listed in the fixed output order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CoincidenceChannel {
    HcHd,
    HcVd,
    VcHd,
    VcVd,
    HcVc,
    HdVd,
}

impl CoincidenceChannel {
    pub const ALL: [CoincidenceChannel; 6] = [
        CoincidenceChannel::HcHd,
        CoincidenceChannel::HcVd,
        CoincidenceChannel::VcHd,
        CoincidenceChannel::VcVd,
        CoincidenceChannel::HcVc,
        CoincidenceChannel::HdVd,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn detectors(self) -> (Detector, Detector) {
        use Detector::*;
        match self {
            CoincidenceChannel::HcHd => (Hc, Hd),
            CoincidenceChannel::HcVd => (Hc, Vd),
            CoincidenceChannel::VcHd => (Vc, Hd),
            CoincidenceChannel::VcVd => (Vc, Vd),
            CoincidenceChannel::HcVc => (Hc, Vc),
            CoincidenceChannel::HdVd => (Hd, Vd),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CoincidenceChannel::HcHd => "Hc:Hd",
            CoincidenceChannel::HcVd => "Hc:Vd",
            CoincidenceChannel::VcHd => "Vc:Hd",
            CoincidenceChannel::VcVd => "Vc:Vd",
            CoincidenceChannel::HcVc => "Hc:Vc",
            CoincidenceChannel::HdVd => "Hd:Vd",
        }
    }
}

impl fmt::Display for CoincidenceChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CoincidenceChannel {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        CoincidenceChannel::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = CoincidenceChannel::ALL.iter().map(|c| c.name()).collect();
                format!("unknown channel `{s}` (expected one of {})", names.join(", "))
            })
    }
}

/// Probability of each of the ten detection outcomes for one pair: the six
/// cross-detector coincidence channels plus both photons on the same detector
/// (`bunched`, indexed by [`Detector`]), which a non-number-resolving detector
/// registers as a single click.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ChannelProbabilities {
    pub coincidence: [f64; 6],
    pub bunched: [f64; 4],
}

impl ChannelProbabilities {
    pub fn get(&self, ch: CoincidenceChannel) -> f64 {
        self.coincidence[ch.index()]
    }

    pub fn bunched_at(&self, d: Detector) -> f64 {
        self.bunched[d.index()]
    }

    pub fn total(&self) -> f64 {
        self.coincidence.iter().sum::<f64>() + self.bunched.iter().sum::<f64>()
    }

    pub fn validate(&self) -> Result<()> {
        let all = self.coincidence.iter().chain(self.bunched.iter());
        for &p in all {
            if !(-1e-12..=1.0 + 1e-12).contains(&p) || !p.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "outcome probability {p} outside [0, 1]"
                )));
            }
        }
        if (self.total() - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidParameter(format!(
                "outcome probabilities sum to {}",
                self.total()
            )));
        }
        Ok(())
    }
}

/// Accumulated optical path (µm) per input arm and emitted polarization.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TemporalLabels {
    pub a: [f64; 2],
    pub b: [f64; 2],
}

impl TemporalLabels {
    pub fn get(&self, arm: Path, pol: Pol) -> f64 {
        match arm {
            Path::A => self.a[pol.index()],
            Path::B => self.b[pol.index()],
            _ => 0.0,
        }
    }
}

fn stack_path(stack: &[OpticalElement], pol: Pol) -> f64 {
    // elements that mix H and V are charged their mean extra path
    stack
        .iter()
        .map(|e| {
            if e.jones().is_diagonal() {
                e.extra_path(pol)
            } else {
                0.5 * (e.extra_path(Pol::H) + e.extra_path(Pol::V))
            }
        })
        .sum()
}

/// Labels for the given stacks; `stage_delay` lengthens arm b.
pub fn temporal_labels(
    arm_a: &[OpticalElement],
    arm_b: &[OpticalElement],
    stage_delay: f64,
) -> TemporalLabels {
    let mut t = TemporalLabels::default();
    for pol in Pol::BOTH {
        t.a[pol.index()] = stack_path(arm_a, pol);
        t.b[pol.index()] = stack_path(arm_b, pol) + stage_delay;
    }
    t
}

/// One-photon-per-arm source amplitudes `ψ[pa][pb]`.
fn source_amplitudes(source: &TwoPhotonState) -> Result<[[Complex64; 2]; 2]> {
    if source.ports() != Ports::Input {
        return Err(Error::ExpectedInputPorts);
    }
    let norm = source.norm_sqr();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized(norm));
    }
    let mut psi = [[Complex64::default(); 2]; 2];
    for ((m1, m2), amp) in source.iter() {
        // canonical order puts arm a first
        if m1.path != Path::A || m2.path != Path::B {
            return Err(Error::NotOnePhotonPerArm(m1, m2));
        }
        psi[m1.pol.index()][m2.pol.index()] = amp;
    }
    Ok(psi)
}

fn check_unitary(stack: &[OpticalElement]) -> Result<()> {
    match stack.iter().find(|e| !e.is_unitary()) {
        Some(e) => Err(Error::NonUnitaryElement(e.kind().to_string())),
        None => Ok(()),
    }
}

/// A contribution to one detection outcome: amplitude, relative delay between
/// the photon at the first detector and the photon at the second, and which
/// photon went where.
#[derive(Clone, Copy)]
struct Term {
    amp: Complex64,
    delay: f64,
    exchanged: bool,
}

struct Overlap<'a> {
    /// Relative-delay autocorrelation; `None` means all delays coincide.
    kernel: Option<&'a SpectralFilter>,
    mode_overlap: f64,
}

impl Overlap<'_> {
    fn weight(&self, x: &Term, y: &Term) -> f64 {
        let k = match self.kernel {
            Some(f) => overlap_kernel(f, 0.5 * (x.delay - y.delay)),
            None => 1.0,
        };
        if x.exchanged == y.exchanged {
            k
        } else {
            k * self.mode_overlap
        }
    }

    fn gram_norm(&self, terms: &[Term]) -> f64 {
        let mut total = 0.0;
        for (i, x) in terms.iter().enumerate() {
            total += x.amp.norm_sqr() * self.weight(x, x);
            for y in &terms[i + 1..] {
                total += 2.0 * (x.amp.conj() * y.amp).re * self.weight(x, y);
            }
        }
        total
    }
}

/// Single-photon amplitude from `(arm, emitted pol)` to `det` through the arm's
/// Jones matrix and the beamsplitter.
fn detector_amplitude(jones: &JonesMatrix, arm: Path, pol: Pol, det: Detector) -> Complex64 {
    jones.entry(det.pol(), pol) * beamsplitter_amplitude(arm, det.path())
}

fn outcome_probabilities(
    psi: &[[Complex64; 2]; 2],
    ja: &JonesMatrix,
    jb: &JonesMatrix,
    labels: &TemporalLabels,
    overlap: &Overlap<'_>,
) -> ChannelProbabilities {
    let mut out = ChannelProbabilities::default();
    let mut terms = Vec::with_capacity(8);
    for ch in CoincidenceChannel::ALL {
        let (x, y) = ch.detectors();
        terms.clear();
        for pa in Pol::BOTH {
            for pb in Pol::BOTH {
                let c = psi[pa.index()][pb.index()];
                if c == Complex64::default() {
                    continue;
                }
                let ta = labels.get(Path::A, pa);
                let tb = labels.get(Path::B, pb);
                terms.push(Term {
                    amp: c * detector_amplitude(ja, Path::A, pa, x)
                        * detector_amplitude(jb, Path::B, pb, y),
                    delay: ta - tb,
                    exchanged: false,
                });
                terms.push(Term {
                    amp: c * detector_amplitude(ja, Path::A, pa, y)
                        * detector_amplitude(jb, Path::B, pb, x),
                    delay: tb - ta,
                    exchanged: true,
                });
            }
        }
        out.coincidence[ch.index()] = overlap.gram_norm(&terms).max(0.0);
    }
    for det in Detector::ALL {
        terms.clear();
        for pa in Pol::BOTH {
            for pb in Pol::BOTH {
                let c = psi[pa.index()][pb.index()];
                if c == Complex64::default() {
                    continue;
                }
                let amp = c
                    * detector_amplitude(ja, Path::A, pa, det)
                    * detector_amplitude(jb, Path::B, pb, det);
                let d = labels.get(Path::A, pa) - labels.get(Path::B, pb);
                // both photon orderings describe the same event
                terms.push(Term {
                    amp,
                    delay: d,
                    exchanged: false,
                });
                terms.push(Term {
                    amp,
                    delay: -d,
                    exchanged: true,
                });
            }
        }
        out.bunched[det.index()] = (0.5 * overlap.gram_norm(&terms)).max(0.0);
    }
    out
}

/// Outcome probabilities for a source on `{a, b}` with one photon per arm,
/// element stacks per arm, a stage delay (µm, added to arm b), the filter's
/// overlap kernel and an extra mode-overlap factor `μ ∈ [0, 1]`.
pub fn coincidence_probabilities(
    source: &TwoPhotonState,
    arm_a: &[OpticalElement],
    arm_b: &[OpticalElement],
    stage_delay: f64,
    filter: &SpectralFilter,
    mode_overlap: f64,
) -> Result<ChannelProbabilities> {
    check_mode_overlap(mode_overlap)?;
    filter.validate()?;
    let psi = source_amplitudes(source)?;
    check_unitary(arm_a)?;
    check_unitary(arm_b)?;
    let labels = temporal_labels(arm_a, arm_b, stage_delay);
    let overlap = Overlap {
        kernel: Some(filter),
        mode_overlap,
    };
    Ok(outcome_probabilities(
        &psi,
        &stack_jones(arm_a),
        &stack_jones(arm_b),
        &labels,
        &overlap,
    ))
}

/// Same model with every temporal label equal and the exchange overlap pinned
/// to `k`: `k = 1` is full two-photon interference, `k = 0` distinguishable
/// photons.
pub fn coincidence_probabilities_at_overlap(
    source: &TwoPhotonState,
    arm_a: &[OpticalElement],
    arm_b: &[OpticalElement],
    k: f64,
) -> Result<ChannelProbabilities> {
    check_mode_overlap(k)?;
    let psi = source_amplitudes(source)?;
    check_unitary(arm_a)?;
    check_unitary(arm_b)?;
    let overlap = Overlap {
        kernel: None,
        mode_overlap: k,
    };
    Ok(outcome_probabilities(
        &psi,
        &stack_jones(arm_a),
        &stack_jones(arm_b),
        &TemporalLabels::default(),
        &overlap,
    ))
}

fn check_mode_overlap(k: f64) -> Result<()> {
    if (0.0..=1.0).contains(&k) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "overlap must lie in [0, 1], got {k}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elements::ElementKind;
    use crate::fockstate::{make_bell, superpose, BellKind};

    fn gauss(lc: f64) -> SpectralFilter {
        SpectralFilter::new(FilterShape::Gaussian, 810.0, 10.0, Some(lc)).unwrap()
    }

    #[test]
    fn kernel_is_one_at_zero_and_half_at_half_width() {
        for shape in [FilterShape::Gaussian, FilterShape::Rectangular] {
            let f = SpectralFilter::new(shape, 810.0, 30.0, Some(59.0)).unwrap();
            assert_eq!(overlap_kernel(&f, 0.0), 1.0);
            assert!((overlap_kernel(&f, 29.5) - 0.5).abs() < 1e-12, "{shape:?}");
            assert!((overlap_kernel(&f, -29.5) - 0.5).abs() < 1e-12);
            assert!(overlap_kernel(&f, 5000.0) < 1e-3);
        }
    }

    #[test]
    fn rectangular_kernel_has_sidelobes() {
        let f = SpectralFilter::new(FilterShape::Rectangular, 810.0, 30.0, Some(59.0)).unwrap();
        let l_eff = 59.0 / (2.0 * SINC2_HALF_MAX);
        // first zero, then a secondary maximum near 1.43 l_eff
        assert!(overlap_kernel(&f, l_eff) < 1e-20);
        assert!(overlap_kernel(&f, 1.4303 * l_eff) > 0.04);
    }

    #[test]
    fn formula_coherence_length_for_10nm() {
        let f = SpectralFilter::new(FilterShape::Gaussian, 810.0, 10.0, None).unwrap();
        assert!((f.coherence_length() - 10.442_155_816_259_254).abs() < 1e-9);
        assert_eq!(gauss(59.0).coherence_length(), 59.0);
    }

    #[test]
    fn filter_validation() {
        assert!(SpectralFilter::new(FilterShape::Gaussian, 810.0, -1.0, None).is_err());
        assert!(SpectralFilter::new(FilterShape::Gaussian, 0.0, 10.0, None).is_err());
        assert!(SpectralFilter::new(FilterShape::Gaussian, 810.0, 10.0, Some(0.0)).is_err());
    }

    #[test]
    fn phi_plus_plateau_and_dip() {
        let s = make_bell(BellKind::PhiPlus);
        let far = coincidence_probabilities_at_overlap(&s, &[], &[], 0.0).unwrap();
        assert!((far.get(CoincidenceChannel::HcHd) - 0.25).abs() < 1e-12);
        assert!((far.get(CoincidenceChannel::VcVd) - 0.25).abs() < 1e-12);
        for ch in [
            CoincidenceChannel::HcVd,
            CoincidenceChannel::VcHd,
            CoincidenceChannel::HcVc,
            CoincidenceChannel::HdVd,
        ] {
            assert!(far.get(ch).abs() < 1e-12);
        }
        let near = coincidence_probabilities_at_overlap(&s, &[], &[], 1.0).unwrap();
        for ch in CoincidenceChannel::ALL {
            assert!(near.get(ch).abs() < 1e-12, "{ch}");
        }
        assert!((near.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn psi_minus_cross_channels_follow_one_plus_k() {
        let s = make_bell(BellKind::PsiMinus);
        for k in [0.0, 0.3, 0.981, 1.0] {
            let p = coincidence_probabilities_at_overlap(&s, &[], &[], k).unwrap();
            assert!((p.get(CoincidenceChannel::HcVd) - (1.0 + k) / 4.0).abs() < 1e-12);
            assert!((p.get(CoincidenceChannel::VcHd) - (1.0 + k) / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn upsilon_cross_channel_grows_as_sin_squared() {
        let pp = make_bell(BellKind::PhiPlus);
        let pm = make_bell(BellKind::PsiMinus);
        for theta in [0.1f64, 0.5, 1.2] {
            let u = superpose(&[(theta.cos().into(), &pp), (theta.sin().into(), &pm)]).unwrap();
            let p = coincidence_probabilities_at_overlap(&u, &[], &[], 1.0).unwrap();
            let expect = theta.sin().powi(2) / 2.0;
            assert!((p.get(CoincidenceChannel::VcHd) - expect).abs() < 1e-12);
            assert!((p.get(CoincidenceChannel::HcVd) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_dip_shape() {
        let s = make_bell(BellKind::PhiPlus);
        let f = gauss(59.0);
        for delay in [-80.0, -29.5, 0.0, 10.0, 29.5, 100.0] {
            let p = coincidence_probabilities(&s, &[], &[], delay, &f, 1.0).unwrap();
            let expect = 0.25 * (1.0 - overlap_kernel(&f, delay));
            assert!((p.get(CoincidenceChannel::HcHd) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_sources_and_elements() {
        let f = gauss(59.0);
        let unnorm = make_bell(BellKind::PhiPlus).scaled(2.0.into());
        assert!(matches!(
            coincidence_probabilities(&unnorm, &[], &[], 0.0, &f, 1.0),
            Err(Error::NotNormalized(_))
        ));
        let lossy = OpticalElement::thin(ElementKind::Custom {
            matrix: JonesMatrix::real(0.5, 0.0, 0.0, 1.0),
        });
        assert!(matches!(
            coincidence_probabilities(&make_bell(BellKind::PhiPlus), &[lossy], &[], 0.0, &f, 1.0),
            Err(Error::NonUnitaryElement(_))
        ));
        assert!(coincidence_probabilities(&make_bell(BellKind::PhiPlus), &[], &[], 0.0, &f, 1.5)
            .is_err());
    }

    #[test]
    fn channel_names_parse() {
        for ch in CoincidenceChannel::ALL {
            assert_eq!(ch.name().parse::<CoincidenceChannel>().unwrap(), ch);
        }
        assert!("Hc:Hc".parse::<CoincidenceChannel>().is_err());
    }
}
