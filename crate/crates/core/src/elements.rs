//! Jones-matrix optical elements and the 50/50 beamsplitter.
//!
//! Jones matrices act on `(H, V)` column vectors. A photon entering with
//! polarization `p` leaves with amplitude `J[q][p]` in polarization `q`.
//!
//! Besides the standard quarter-wave plate, the library exposes `rotation(90°)`
//! = `[[0, 1], [-1, 0]]`, the antisymmetric basis matrix of the orthogonal
//! decomposition that is sometimes loosely called a "quarter-wave" action on
//! Bell states. The two are different elements.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fockstate::{Mode, Path, Pol, Ports, TwoPhotonState};

const UNITARY_TOL: f64 = 1e-10;

/// Row-major 2×2 complex matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JonesMatrix {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl JonesMatrix {
    pub const fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        JonesMatrix { a, b, c, d }
    }

    pub fn real(a: f64, b: f64, c: f64, d: f64) -> Self {
        JonesMatrix::new(a.into(), b.into(), c.into(), d.into())
    }

    pub fn identity() -> Self {
        JonesMatrix::real(1.0, 0.0, 0.0, 1.0)
    }

    /// Matrix element `J[row][col]` with rows/columns indexed by `Pol`.
    pub fn entry(&self, out: Pol, inp: Pol) -> Complex64 {
        match (out, inp) {
            (Pol::H, Pol::H) => self.a,
            (Pol::H, Pol::V) => self.b,
            (Pol::V, Pol::H) => self.c,
            (Pol::V, Pol::V) => self.d,
        }
    }

    /// `self · rhs`: `rhs` acts first.
    pub fn then_after(&self, rhs: &JonesMatrix) -> JonesMatrix {
        JonesMatrix {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        }
    }

    pub fn adjoint(&self) -> JonesMatrix {
        JonesMatrix {
            a: self.a.conj(),
            b: self.c.conj(),
            c: self.b.conj(),
            d: self.d.conj(),
        }
    }

    pub fn apply(&self, h: Complex64, v: Complex64) -> (Complex64, Complex64) {
        (self.a * h + self.b * v, self.c * h + self.d * v)
    }

    pub fn is_unitary(&self) -> bool {
        let p = self.adjoint().then_after(self);
        let id = JonesMatrix::identity();
        [p.a - id.a, p.b, p.c, p.d - id.d]
            .iter()
            .all(|z| z.norm() < UNITARY_TOL)
    }

    pub fn is_diagonal(&self) -> bool {
        self.b == Complex64::default() && self.c == Complex64::default()
    }

    pub fn max_abs_diff(&self, other: &JonesMatrix) -> f64 {
        [
            self.a - other.a,
            self.b - other.b,
            self.c - other.c,
            self.d - other.d,
        ]
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
    }
}

/// Coefficients on the orthogonal basis `1`, `diag(1,−1)`, `[[0,1],[1,0]]`,
/// `[[0,1],[−1,0]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JonesDecomposition {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub kappa: Complex64,
    pub delta: Complex64,
}

impl JonesDecomposition {
    pub fn compose(&self) -> JonesMatrix {
        JonesMatrix {
            a: self.alpha + self.beta,
            b: self.kappa + self.delta,
            c: self.kappa - self.delta,
            d: self.alpha - self.beta,
        }
    }
}

pub fn decompose(j: &JonesMatrix) -> JonesDecomposition {
    JonesDecomposition {
        alpha: (j.a + j.d) / 2.0,
        beta: (j.a - j.d) / 2.0,
        kappa: (j.b + j.c) / 2.0,
        delta: (j.b - j.c) / 2.0,
    }
}

pub fn compose(d: &JonesDecomposition) -> JonesMatrix {
    d.compose()
}

/// `[[cos θ, sin θ], [−sin θ, cos θ]]`, θ in radians.
pub fn rotation(theta: f64) -> JonesMatrix {
    let (s, c) = theta.sin_cos();
    JonesMatrix::real(c, s, -s, c)
}

/// General linear retarder: `R(−axis) · diag(1, e^{iφ}) · R(axis)`, both in radians.
pub fn retarder(phase: f64, axis: f64) -> JonesMatrix {
    let core = JonesMatrix::new(
        1.0.into(),
        0.0.into(),
        0.0.into(),
        Complex64::from_polar(1.0, phase),
    );
    rotation(-axis).then_after(&core).then_after(&rotation(axis))
}

/// Half-wave plate with its fast axis at θ (radians) to H:
/// `[[cos 2θ, sin 2θ], [sin 2θ, −cos 2θ]]`. The `e^{−iπ/2}` retardation phase
/// is dropped, so this is the real form.
pub fn hwp(theta: f64) -> JonesMatrix {
    let (s, c) = (2.0 * theta).sin_cos();
    JonesMatrix::real(c, s, s, -c)
}

/// Quarter-wave plate with its fast axis at θ (radians) to H, global phase dropped.
pub fn qwp(theta: f64) -> JonesMatrix {
    retarder(std::f64::consts::FRAC_PI_2, theta)
}

/// Faraday rotation by θ radians. Same matrix as [`rotation`]; the element is
/// field-agnostic and callers map field to angle.
pub fn faraday(theta: f64) -> JonesMatrix {
    rotation(theta)
}

/// Named element constructors as they appear in experiment configs. Angles are
/// in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ElementKind {
    Identity,
    Rotation { theta: f64 },
    Hwp { theta: f64 },
    Qwp { theta: f64 },
    Retarder { phase: f64, axis: f64 },
    Faraday { theta: f64 },
    Custom { matrix: JonesMatrix },
}

impl ElementKind {
    pub fn jones(&self) -> JonesMatrix {
        match *self {
            ElementKind::Identity => JonesMatrix::identity(),
            ElementKind::Rotation { theta } => rotation(theta),
            ElementKind::Hwp { theta } => hwp(theta),
            ElementKind::Qwp { theta } => qwp(theta),
            ElementKind::Retarder { phase, axis } => retarder(phase, axis),
            ElementKind::Faraday { theta } => faraday(theta),
            ElementKind::Custom { matrix } => matrix,
        }
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementKind::Identity => write!(f, "identity"),
            ElementKind::Rotation { theta } => write!(f, "rotation({:.4}°)", theta.to_degrees()),
            ElementKind::Hwp { theta } => write!(f, "hwp({:.4}°)", theta.to_degrees()),
            ElementKind::Qwp { theta } => write!(f, "qwp({:.4}°)", theta.to_degrees()),
            ElementKind::Retarder { phase, axis } => write!(
                f,
                "retarder({:.4} rad, {:.4}°)",
                phase,
                axis.to_degrees()
            ),
            ElementKind::Faraday { theta } => write!(f, "faraday({:.4}°)", theta.to_degrees()),
            ElementKind::Custom { .. } => write!(f, "custom"),
        }
    }
}

/// A Jones element plus the optical path (µm) it adds to H- and V-polarized
/// photons. The path lengths feed the distinguishability model only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ElementRepr", into = "ElementRepr")]
pub struct OpticalElement {
    kind: ElementKind,
    extra_path_h: f64,
    extra_path_v: f64,
}

impl OpticalElement {
    pub fn new(kind: ElementKind, extra_path_h: f64, extra_path_v: f64) -> Result<Self> {
        for (name, v) in [("extra_path_h", extra_path_h), ("extra_path_v", extra_path_v)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be a finite non-negative length, got {v}"
                )));
            }
        }
        Ok(OpticalElement {
            kind,
            extra_path_h,
            extra_path_v,
        })
    }

    /// Element with no added path length.
    pub fn thin(kind: ElementKind) -> Self {
        OpticalElement {
            kind,
            extra_path_h: 0.0,
            extra_path_v: 0.0,
        }
    }

    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn jones(&self) -> JonesMatrix {
        self.kind.jones()
    }

    pub fn extra_path(&self, pol: Pol) -> f64 {
        match pol {
            Pol::H => self.extra_path_h,
            Pol::V => self.extra_path_v,
        }
    }

    /// Custom matrices may be lossy; such elements are accepted here but
    /// rejected by the interference model.
    pub fn is_unitary(&self) -> bool {
        self.jones().is_unitary()
    }
}

#[derive(Serialize, Deserialize)]
struct ElementRepr {
    #[serde(flatten)]
    kind: ElementKind,
    #[serde(default)]
    extra_path_h: f64,
    #[serde(default)]
    extra_path_v: f64,
}

impl TryFrom<ElementRepr> for OpticalElement {
    type Error = Error;
    fn try_from(r: ElementRepr) -> Result<Self> {
        OpticalElement::new(r.kind, r.extra_path_h, r.extra_path_v)
    }
}

impl From<OpticalElement> for ElementRepr {
    fn from(e: OpticalElement) -> Self {
        ElementRepr {
            kind: e.kind,
            extra_path_h: e.extra_path_h,
            extra_path_v: e.extra_path_v,
        }
    }
}

/// Product of a stack in propagation order (`stack[0]` acts first).
pub fn stack_jones(stack: &[OpticalElement]) -> JonesMatrix {
    stack
        .iter()
        .fold(JonesMatrix::identity(), |acc, e| e.jones().then_after(&acc))
}

/// Applies the single-photon polarization map `j` to the photon(s) on `arm`.
/// Modes on other paths are untouched.
pub fn apply_to_arm(state: &TwoPhotonState, j: &JonesMatrix, arm: Path) -> TwoPhotonState {
    state
        .map_modes(state.ports(), |m| {
            if m.path != arm {
                return vec![(m, Complex64::new(1.0, 0.0))];
            }
            Pol::BOTH
                .iter()
                .map(|&q| (Mode::new(arm, q), j.entry(q, m.pol)))
                .filter(|(_, u)| *u != Complex64::default())
                .collect()
        })
        .expect("image modes stay on the same ports")
}

/// Beamsplitter amplitude for a photon entering on `input` to leave on `output`.
///
/// Creation operators transform as `a† → (c† + d†)/√2`, `b† → (c† − d†)/√2`,
/// independent of polarization. This is the sign choice that reproduces the
/// output states for all four Bell inputs exactly, including the overall `−`
/// on the Ψ− output.
pub fn beamsplitter_amplitude(input: Path, output: Path) -> f64 {
    match (input, output) {
        (Path::A, Path::C) | (Path::A, Path::D) | (Path::B, Path::C) => FRAC_1_SQRT_2,
        (Path::B, Path::D) => -FRAC_1_SQRT_2,
        _ => 0.0,
    }
}

/// Propagates a state on `{a, b}` through the 50/50 beamsplitter onto `{c, d}`.
pub fn beamsplitter(state: &TwoPhotonState) -> Result<TwoPhotonState> {
    if state.ports() != Ports::Input {
        return Err(Error::ExpectedInputPorts);
    }
    state.map_modes(Ports::Output, |m| {
        [Path::C, Path::D]
            .iter()
            .map(|&out| {
                (
                    Mode::new(out, m.pol),
                    Complex64::new(beamsplitter_amplitude(m.path, out), 0.0),
                )
            })
            .collect()
    })
}
