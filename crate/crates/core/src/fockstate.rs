//! Two-photon bosonic states over the discrete path ⊗ polarization modes.
//!
//! Amplitudes are stored against the *normalized* Fock basis of unordered mode
//! pairs: for `m != n` the basis ket is `a†_m a†_n |0⟩`, for a doubly occupied
//! mode it is `|2_m⟩ = (a†_m)² |0⟩ / √2`. With this convention the squared
//! modulus of a stored amplitude is directly a probability, and a ket written
//! as `|HH⟩_c` in creation-operator form (which equals `√2 |2⟩`) contributes
//! its √2 automatically when built through [`TwoPhotonState::add_creation`].

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Path {
    #[serde(rename = "a")]
    A,
    #[serde(rename = "b")]
    B,
    #[serde(rename = "c")]
    C,
    #[serde(rename = "d")]
    D,
}

impl Path {
    pub fn ports(self) -> Ports {
        match self {
            Path::A | Path::B => Ports::Input,
            Path::C | Path::D => Ports::Output,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Path::A => "a",
            Path::B => "b",
            Path::C => "c",
            Path::D => "d",
        }
    }
}

impl FromStr for Path {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "a" => Ok(Path::A),
            "b" => Ok(Path::B),
            "c" => Ok(Path::C),
            "d" => Ok(Path::D),
            other => Err(format!("unknown path `{other}` (expected a, b, c or d)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pol {
    H,
    V,
}

impl Pol {
    pub const BOTH: [Pol; 2] = [Pol::H, Pol::V];

    pub fn index(self) -> usize {
        match self {
            Pol::H => 0,
            Pol::V => 1,
        }
    }
}

impl FromStr for Pol {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "H" => Ok(Pol::H),
            "V" => Ok(Pol::V),
            other => Err(format!("unknown polarization `{other}` (expected H or V)")),
        }
    }
}

/// A single-photon mode. The derived ordering is path-major, then polarization,
/// which gives every unordered pair a canonical `(low, high)` representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Mode {
    pub path: Path,
    pub pol: Pol,
}

impl Mode {
    pub const fn new(path: Path, pol: Pol) -> Self {
        Mode { path, pol }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}{}", self.pol, self.path.label())
    }
}

/// Which pair of paths a state is supported on: the beamsplitter inputs
/// `{a, b}` or its outputs `{c, d}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ports {
    Input,
    Output,
}

impl Ports {
    pub fn paths(self) -> [Path; 2] {
        match self {
            Ports::Input => [Path::A, Path::B],
            Ports::Output => [Path::C, Path::D],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BellKind {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellKind {
    pub const ALL: [BellKind; 4] = [
        BellKind::PhiPlus,
        BellKind::PhiMinus,
        BellKind::PsiPlus,
        BellKind::PsiMinus,
    ];

    pub fn index(self) -> usize {
        match self {
            BellKind::PhiPlus => 0,
            BellKind::PhiMinus => 1,
            BellKind::PsiPlus => 2,
            BellKind::PsiMinus => 3,
        }
    }
}

impl fmt::Display for BellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BellKind::PhiPlus => "Φ+",
            BellKind::PhiMinus => "Φ−",
            BellKind::PsiPlus => "Ψ+",
            BellKind::PsiMinus => "Ψ−",
        };
        f.write_str(s)
    }
}

/// Weight of each Bell state, indexed in [`BellKind::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BellFractions {
    pub phi_plus: f64,
    pub phi_minus: f64,
    pub psi_plus: f64,
    pub psi_minus: f64,
}

impl BellFractions {
    pub fn from_array(w: [f64; 4]) -> Self {
        BellFractions {
            phi_plus: w[0],
            phi_minus: w[1],
            psi_plus: w[2],
            psi_minus: w[3],
        }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.phi_plus, self.phi_minus, self.psi_plus, self.psi_minus]
    }

    pub fn get(&self, kind: BellKind) -> f64 {
        self.to_array()[kind.index()]
    }

    pub fn sum(&self) -> f64 {
        self.to_array().iter().sum()
    }

    pub fn max_abs_diff(&self, other: &BellFractions) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

type Pair = (Mode, Mode);

fn canonical(m1: Mode, m2: Mode) -> Pair {
    if m1 <= m2 {
        (m1, m2)
    } else {
        (m2, m1)
    }
}

/// Complex amplitudes over canonical unordered mode pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "StateRepr", try_from = "StateRepr")]
pub struct TwoPhotonState {
    ports: Ports,
    amplitudes: BTreeMap<Pair, Complex64>,
}

impl TwoPhotonState {
    /// The zero vector on the given ports.
    pub fn zero(ports: Ports) -> Self {
        TwoPhotonState {
            ports,
            amplitudes: BTreeMap::new(),
        }
    }

    pub fn ports(&self) -> Ports {
        self.ports
    }

    fn check_mode(&self, m: Mode) -> Result<()> {
        if m.path.ports() == self.ports {
            Ok(())
        } else {
            Err(Error::ModeOutsidePorts(m, self.ports))
        }
    }

    /// Amplitude on the normalized Fock ket of the unordered pair `{m1, m2}`.
    pub fn amplitude(&self, m1: Mode, m2: Mode) -> Complex64 {
        self.amplitudes
            .get(&canonical(m1, m2))
            .copied()
            .unwrap_or_default()
    }

    pub fn set_amplitude(&mut self, m1: Mode, m2: Mode, amp: Complex64) -> Result<()> {
        self.check_mode(m1)?;
        self.check_mode(m2)?;
        let key = canonical(m1, m2);
        if amp == Complex64::default() {
            self.amplitudes.remove(&key);
        } else {
            self.amplitudes.insert(key, amp);
        }
        Ok(())
    }

    /// Adds `coeff · a†_{m1} a†_{m2} |0⟩`.
    pub fn add_creation(&mut self, m1: Mode, m2: Mode, coeff: Complex64) -> Result<()> {
        self.check_mode(m1)?;
        self.check_mode(m2)?;
        let fock = if m1 == m2 { coeff * SQRT_2 } else { coeff };
        let key = canonical(m1, m2);
        *self.amplitudes.entry(key).or_default() += fock;
        Ok(())
    }

    /// Builds a state from creation-operator terms `coeff · a†_{m1} a†_{m2} |0⟩`.
    pub fn from_creation_terms(ports: Ports, terms: &[(Mode, Mode, Complex64)]) -> Result<Self> {
        let mut state = TwoPhotonState::zero(ports);
        for &(m1, m2, c) in terms {
            state.add_creation(m1, m2, c)?;
        }
        state.prune();
        Ok(state)
    }

    fn prune(&mut self) {
        self.amplitudes.retain(|_, a| *a != Complex64::default());
    }

    /// Non-zero entries as `((low mode, high mode), Fock amplitude)`.
    pub fn iter(&self) -> impl Iterator<Item = ((Mode, Mode), Complex64)> + '_ {
        self.amplitudes.iter().map(|(k, v)| (*k, *v))
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroState);
        }
        Ok(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        for a in out.amplitudes.values_mut() {
            *a *= c;
        }
        out.prune();
        out
    }

    /// Applies a single-photon linear map to every photon. `f(mode)` returns the
    /// image of `a†_mode` as a list of `(mode, coefficient)`; the result lives on
    /// `target` ports.
    pub fn map_modes<F>(&self, target: Ports, f: F) -> Result<Self>
    where
        F: Fn(Mode) -> Vec<(Mode, Complex64)>,
    {
        let mut out = TwoPhotonState::zero(target);
        for (&(m1, m2), &amp) in &self.amplitudes {
            // back to creation-operator coefficient
            let coeff = if m1 == m2 { amp / SQRT_2 } else { amp };
            let img1 = f(m1);
            let img2 = f(m2);
            for &(n1, u1) in &img1 {
                for &(n2, u2) in &img2 {
                    out.add_creation(n1, n2, coeff * u1 * u2)?;
                }
            }
        }
        out.prune();
        Ok(out)
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &TwoPhotonState) -> Result<Complex64> {
        inner_product(self, other)
    }

    /// Overlap modulus `|⟨x|y⟩|` compared to `‖x‖‖y‖`; states are equal up to a
    /// global phase when this is 1.
    pub fn phase_insensitive_overlap(&self, other: &TwoPhotonState) -> Result<f64> {
        let ip = inner_product(self, other)?;
        Ok(ip.norm() / (self.norm_sqr() * other.norm_sqr()).sqrt())
    }
}

pub fn inner_product(x: &TwoPhotonState, y: &TwoPhotonState) -> Result<Complex64> {
    if x.ports != y.ports {
        return Err(Error::PortMismatch(x.ports, y.ports));
    }
    Ok(x.amplitudes
        .iter()
        .filter_map(|(k, a)| y.amplitudes.get(k).map(|b| a.conj() * b))
        .sum())
}

/// Linear combination `Σ cᵢ |ψᵢ⟩`. Not normalized.
pub fn superpose(terms: &[(Complex64, &TwoPhotonState)]) -> Result<TwoPhotonState> {
    let (_, first) = terms.first().ok_or(Error::EmptySuperposition)?;
    let ports = first.ports;
    let mut out = TwoPhotonState::zero(ports);
    for &(c, state) in terms {
        if state.ports != ports {
            return Err(Error::PortMismatch(ports, state.ports));
        }
        for (k, a) in &state.amplitudes {
            *out.amplitudes.entry(*k).or_default() += c * a;
        }
    }
    out.prune();
    Ok(out)
}

pub fn make_bell(kind: BellKind) -> TwoPhotonState {
    use Path::{A, B};
    use Pol::{H, V};
    let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let (first, second, sign) = match kind {
        BellKind::PhiPlus => ((H, H), (V, V), 1.0),
        BellKind::PhiMinus => ((H, H), (V, V), -1.0),
        BellKind::PsiPlus => ((H, V), (V, H), 1.0),
        BellKind::PsiMinus => ((H, V), (V, H), -1.0),
    };
    let terms = [
        (Mode::new(A, first.0), Mode::new(B, first.1), s),
        (Mode::new(A, second.0), Mode::new(B, second.1), s * sign),
    ];
    TwoPhotonState::from_creation_terms(Ports::Input, &terms)
        .expect("Bell modes are input modes")
}

/// `Σ √wₖ e^{iφₖ} |Bellₖ⟩`, normalized. Weights need not sum to one.
pub fn bell_mixture(weights: [f64; 4], phases: [f64; 4]) -> Result<TwoPhotonState> {
    if weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "Bell weights must be finite and non-negative, got {weights:?}"
        )));
    }
    let bells: Vec<TwoPhotonState> = BellKind::ALL.iter().map(|k| make_bell(*k)).collect();
    let terms: Vec<(Complex64, &TwoPhotonState)> = bells
        .iter()
        .enumerate()
        .map(|(i, b)| (Complex64::from_polar(weights[i].sqrt(), phases[i]), b))
        .collect();
    superpose(&terms)?.normalized()
}

/// `|⟨Bellₖ|state⟩|²` for each of the four Bell states.
pub fn bell_fractions(state: &TwoPhotonState) -> Result<BellFractions> {
    if state.ports != Ports::Input {
        return Err(Error::ExpectedInputPorts);
    }
    let mut w = [0.0; 4];
    for kind in BellKind::ALL {
        w[kind.index()] = inner_product(&make_bell(kind), state)?.norm_sqr();
    }
    Ok(BellFractions::from_array(w))
}

/// Text form: an optional `ports input|output` header, then one row per
/// non-zero amplitude `path pol path pol re im`.
impl fmt::Display for TwoPhotonState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ports = match self.ports {
            Ports::Input => "input",
            Ports::Output => "output",
        };
        writeln!(f, "ports {ports}")?;
        for ((m1, m2), a) in self.iter() {
            writeln!(
                f,
                "{} {:?} {} {:?} {} {}",
                m1.path.label(),
                m1.pol,
                m2.path.label(),
                m2.pol,
                a.re,
                a.im
            )?;
        }
        Ok(())
    }
}

impl FromStr for TwoPhotonState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut ports: Option<Ports> = None;
        let mut rows = Vec::new();
        for (i, raw) in s.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse_err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            if fields[0] == "ports" {
                if fields.len() != 2 {
                    return Err(parse_err("expected `ports input|output`".into()));
                }
                ports = Some(match fields[1] {
                    "input" => Ports::Input,
                    "output" => Ports::Output,
                    other => return Err(parse_err(format!("unknown port set `{other}`"))),
                });
                continue;
            }
            if fields.len() != 6 {
                return Err(parse_err(format!(
                    "expected 6 fields `path pol path pol re im`, got {}",
                    fields.len()
                )));
            }
            let p1: Path = fields[0].parse().map_err(parse_err)?;
            let q1: Pol = fields[1].parse().map_err(parse_err)?;
            let p2: Path = fields[2].parse().map_err(parse_err)?;
            let q2: Pol = fields[3].parse().map_err(parse_err)?;
            let re: f64 = fields[4]
                .parse()
                .map_err(|e| parse_err(format!("bad real part: {e}")))?;
            let im: f64 = fields[5]
                .parse()
                .map_err(|e| parse_err(format!("bad imaginary part: {e}")))?;
            rows.push((line_no, Mode::new(p1, q1), Mode::new(p2, q2), Complex64::new(re, im)));
        }
        let ports = match ports {
            Some(p) => p,
            None => match rows.first() {
                Some((_, m, _, _)) => m.path.ports(),
                None => {
                    return Err(Error::Parse {
                        line: 0,
                        message: "empty state needs a `ports` header".into(),
                    })
                }
            },
        };
        let mut state = TwoPhotonState::zero(ports);
        for (line, m1, m2, a) in rows {
            let key = canonical(m1, m2);
            if state.amplitudes.contains_key(&key) {
                return Err(Error::Parse {
                    line,
                    message: format!("duplicate entry for ({m1}, {m2})"),
                });
            }
            state.set_amplitude(m1, m2, a).map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?;
        }
        Ok(state)
    }
}

#[derive(Serialize, Deserialize)]
struct StateRepr {
    ports: Ports,
    terms: Vec<TermRepr>,
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    modes: [Mode; 2],
    amplitude: Complex64,
}

impl From<TwoPhotonState> for StateRepr {
    fn from(s: TwoPhotonState) -> Self {
        StateRepr {
            ports: s.ports,
            terms: s
                .iter()
                .map(|((m1, m2), a)| TermRepr {
                    modes: [m1, m2],
                    amplitude: a,
                })
                .collect(),
        }
    }
}

impl TryFrom<StateRepr> for TwoPhotonState {
    type Error = Error;

    fn try_from(r: StateRepr) -> Result<Self> {
        let mut s = TwoPhotonState::zero(r.ports);
        for t in r.terms {
            s.set_amplitude(t.modes[0], t.modes[1], t.amplitude)?;
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    fn m(path: Path, pol: Pol) -> Mode {
        Mode::new(path, pol)
    }

    #[test]
    fn phi_plus_amplitudes() {
        let s = make_bell(BellKind::PhiPlus);
        let r = FRAC_1_SQRT_2;
        assert!((s.amplitude(m(Path::A, Pol::H), m(Path::B, Pol::H)).re - r).abs() < TOL);
        assert!((s.amplitude(m(Path::A, Pol::V), m(Path::B, Pol::V)).re - r).abs() < TOL);
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn psi_minus_amplitudes() {
        let s = make_bell(BellKind::PsiMinus);
        let r = FRAC_1_SQRT_2;
        assert!((s.amplitude(m(Path::A, Pol::H), m(Path::B, Pol::V)).re - r).abs() < TOL);
        // argument order does not matter for the unordered pair
        assert!((s.amplitude(m(Path::B, Pol::H), m(Path::A, Pol::V)).re + r).abs() < TOL);
    }

    #[test]
    fn bell_states_orthonormal() {
        for a in BellKind::ALL {
            for b in BellKind::ALL {
                let ip = inner_product(&make_bell(a), &make_bell(b)).unwrap();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((ip - Complex64::new(expect, 0.0)).norm() < TOL, "{a} {b}");
            }
        }
    }

    #[test]
    fn superposition_of_phi_states() {
        let r = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let pp = make_bell(BellKind::PhiPlus);
        let pm = make_bell(BellKind::PhiMinus);
        let s = superpose(&[(r, &pp), (r, &pm)]).unwrap();
        let hh = s.amplitude(m(Path::A, Pol::H), m(Path::B, Pol::H));
        let vv = s.amplitude(m(Path::A, Pol::V), m(Path::B, Pol::V));
        assert!((hh - Complex64::new(1.0, 0.0)).norm() < TOL);
        assert!(vv.norm() < TOL);
    }

    #[test]
    fn upsilon_overlap_and_fractions() {
        let pp = make_bell(BellKind::PhiPlus);
        let psm = make_bell(BellKind::PsiMinus);
        for theta in [0.0, 0.3, 1.0, 2.5] {
            let (c, s) = (f64::cos(theta), f64::sin(theta));
            let u = superpose(&[(c.into(), &pp), (s.into(), &psm)]).unwrap();
            let ip = inner_product(&pp, &u).unwrap();
            assert!((ip.re - c).abs() < TOL && ip.im.abs() < TOL);
            let f = bell_fractions(&u).unwrap();
            assert!((f.phi_plus - c * c).abs() < TOL);
            assert!((f.psi_minus - s * s).abs() < TOL);
            assert!(f.phi_minus.abs() < TOL && f.psi_plus.abs() < TOL);
        }
    }

    #[test]
    fn doubly_occupied_mode_carries_sqrt2() {
        let c = m(Path::C, Pol::H);
        let s = TwoPhotonState::from_creation_terms(Ports::Output, &[(c, c, 1.0.into())]).unwrap();
        assert!((s.norm_sqr() - 2.0).abs() < TOL);
    }

    #[test]
    fn mismatched_ports_rejected() {
        let out = TwoPhotonState::from_creation_terms(
            Ports::Output,
            &[(m(Path::C, Pol::H), m(Path::D, Pol::V), 1.0.into())],
        )
        .unwrap();
        let pp = make_bell(BellKind::PhiPlus);
        assert!(matches!(inner_product(&pp, &out), Err(Error::PortMismatch(..))));
        assert!(matches!(
            superpose(&[(1.0.into(), &pp), (1.0.into(), &out)]),
            Err(Error::PortMismatch(..))
        ));
        assert_eq!(bell_fractions(&out), Err(Error::ExpectedInputPorts));
        assert_eq!(superpose(&[]), Err(Error::EmptySuperposition));
    }

    #[test]
    fn mode_outside_ports_rejected() {
        let mut s = TwoPhotonState::zero(Ports::Input);
        let err = s
            .add_creation(m(Path::C, Pol::H), m(Path::A, Pol::H), 1.0.into())
            .unwrap_err();
        assert!(matches!(err, Error::ModeOutsidePorts(..)));
    }

    #[test]
    fn text_form_round_trips() {
        let s = bell_mixture([0.82, 0.15, 0.03, 0.0], [0.0, 0.4, -1.2, 0.0]).unwrap();
        let text = s.to_string();
        let back: TwoPhotonState = text.parse().unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn text_form_diagnostics() {
        let err = "a H b\n".parse::<TwoPhotonState>().unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = "a H x V 1 0\n".parse::<TwoPhotonState>().unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = "ports input\na H c V 1 0\n".parse::<TwoPhotonState>().unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn json_round_trip() {
        let s = bell_mixture([0.5, 0.2, 0.2, 0.1], [0.0, 1.0, 2.0, 3.0]).unwrap();
        let j = serde_json::to_string(&s).unwrap();
        let back: TwoPhotonState = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
    }
}
