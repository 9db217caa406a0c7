//! Experiment configuration files.
//!
//! Configs are TOML. Physical quantities may be written as bare numbers in the
//! default unit of their key or as strings with a unit suffix, e.g. `"59um"`,
//! `"10 mm"`, `"5ns"`, `"45deg"`, `"0.5T"`, `"810nm"`.

use std::path::{Path as FsPath, PathBuf};

use bels_core::analysis::FieldSign;
use bels_core::detection::AcquisitionConfig;
use bels_core::elements::{ElementKind, OpticalElement};
use bels_core::experiment::{Apparatus, FaradaySample};
use bels_core::fockstate::{bell_mixture, make_bell, BellKind};
use bels_core::interference::{CoincidenceChannel, FilterShape, SpectralFilter};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("TOML syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("invalid config{}: {message}", .line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Schema { line: Option<usize>, message: String },
    #[error("`{key}`: {message}")]
    Range { key: String, message: String },
    #[error("cannot read {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("unknown figure `{0}`; expected one of fig2, fig3, fig4, fig5, fig6")]
    UnknownFigure(String),
}

fn range_err(key: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Range {
        key: key.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dim {
    /// µm
    Length,
    /// nm
    Wavelength,
    /// s
    Time,
    /// degrees
    Angle,
    /// T
    Field,
    /// s⁻¹
    Rate,
}

impl Dim {
    fn default_unit(self) -> &'static str {
        match self {
            Dim::Length => "um",
            Dim::Wavelength => "nm",
            Dim::Time => "s",
            Dim::Angle => "deg",
            Dim::Field => "T",
            Dim::Rate => "/s",
        }
    }

    fn scale(self, unit: &str) -> Option<f64> {
        let s = match (self, unit) {
            (Dim::Length, "um" | "µm" | "micron") => 1.0,
            (Dim::Length, "nm") => 1e-3,
            (Dim::Length, "mm") => 1e3,
            (Dim::Length, "cm") => 1e4,
            (Dim::Length, "m") => 1e6,
            (Dim::Wavelength, "nm") => 1.0,
            (Dim::Wavelength, "um" | "µm") => 1e3,
            (Dim::Time, "s") => 1.0,
            (Dim::Time, "ms") => 1e-3,
            (Dim::Time, "us" | "µs") => 1e-6,
            (Dim::Time, "ns") => 1e-9,
            (Dim::Time, "ps") => 1e-12,
            (Dim::Angle, "deg" | "°") => 1.0,
            (Dim::Angle, "rad") => 180.0 / std::f64::consts::PI,
            (Dim::Angle, "mrad") => 0.18 / std::f64::consts::PI,
            (Dim::Field, "T") => 1.0,
            (Dim::Field, "mT") => 1e-3,
            (Dim::Rate, "/s" | "Hz" | "cps") => 1.0,
            (Dim::Rate, "kHz") => 1e3,
            (Dim::Rate, "MHz") => 1e6,
            _ => return None,
        };
        Some(s)
    }
}

/// A number in the key's default unit, or a string with a unit suffix.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Quantity {
    fn value(&self, key: &str, dim: Dim) -> Result<f64, ConfigError> {
        let v = match self {
            Quantity::Int(i) => *i as f64,
            Quantity::Float(f) => *f,
            Quantity::Text(s) => parse_with_unit(s, dim).ok_or_else(|| {
                range_err(
                    key,
                    format!(
                        "cannot read `{s}` as a quantity (expected a number with a unit such as {}, or a bare number in {})",
                        example_unit(dim),
                        dim.default_unit()
                    ),
                )
            })?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(range_err(key, "value must be finite"))
        }
    }
}

fn example_unit(dim: Dim) -> &'static str {
    match dim {
        Dim::Length => "`59um` or `10mm`",
        Dim::Wavelength => "`810nm`",
        Dim::Time => "`5ns` or `1s`",
        Dim::Angle => "`45deg`",
        Dim::Field => "`0.5T`",
        Dim::Rate => "`23kHz`",
    }
}

fn parse_with_unit(s: &str, dim: Dim) -> Option<f64> {
    let s = s.trim();
    // longest numeric prefix whose remainder is a known unit
    for split in (1..=s.len()).rev() {
        if !s.is_char_boundary(split) {
            continue;
        }
        let (num, unit) = s.split_at(split);
        let Ok(v) = num.trim().parse::<f64>() else {
            continue;
        };
        let unit = unit.trim();
        if unit.is_empty() {
            return Some(v);
        }
        return dim.scale(unit).map(|k| v * k);
    }
    None
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum OneOrFour {
    One(f64),
    Four([f64; 4]),
}

impl OneOrFour {
    fn expand(&self) -> [f64; 4] {
        match self {
            OneOrFour::One(v) => [*v; 4],
            OneOrFour::Four(a) => *a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SourceKind {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
    Mixture,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BellTable {
    phi_plus: Option<Quantity>,
    phi_minus: Option<Quantity>,
    psi_plus: Option<Quantity>,
    psi_minus: Option<Quantity>,
}

impl BellTable {
    fn values(&self, key: &str, dim: Option<Dim>) -> Result<[f64; 4], ConfigError> {
        let mut out = [0.0; 4];
        let entries = [
            ("phi_plus", &self.phi_plus),
            ("phi_minus", &self.phi_minus),
            ("psi_plus", &self.psi_plus),
            ("psi_minus", &self.psi_minus),
        ];
        for (i, (name, q)) in entries.into_iter().enumerate() {
            if let Some(q) = q {
                let k = format!("{key}.{name}");
                out[i] = match dim {
                    Some(d) => q.value(&k, d)?,
                    None => q.value(&k, Dim::Rate)?,
                };
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSource {
    kind: SourceKind,
    fractions: Option<BellTable>,
    /// Relative phases of the mixture components.
    phases: Option<BellTable>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFilter {
    shape: FilterShape,
    center: Quantity,
    bandwidth: Quantity,
    coherence_length: Option<Quantity>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ElementType {
    Identity,
    Rotation,
    Hwp,
    Qwp,
    Retarder,
    Faraday,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawElement {
    #[serde(rename = "type")]
    kind: ElementType,
    angle: Option<Quantity>,
    phase: Option<Quantity>,
    axis: Option<Quantity>,
    /// Same extra path for both polarizations.
    extra_path: Option<Quantity>,
    extra_path_h: Option<Quantity>,
    extra_path_v: Option<Quantity>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAcquisition {
    pair_rate: Quantity,
    duration: Option<Quantity>,
    efficiency: Option<OneOrFour>,
    dark_rate: Option<OneOrFour>,
    window: Option<Quantity>,
    jitter: Option<Quantity>,
}

fn default_overlap() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawApparatus {
    source: RawSource,
    filter: RawFilter,
    #[serde(default)]
    arm_a: Vec<RawElement>,
    #[serde(default)]
    arm_b: Vec<RawElement>,
    #[serde(default = "default_overlap")]
    mode_overlap: f64,
    acquisition: RawAcquisition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ScanType {
    Delay,
    Hwp,
    Rotation,
    Field,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRange {
    start: Quantity,
    stop: Quantity,
    step: Quantity,
}

impl RawRange {
    fn expand(&self, key: &str, dim: Dim) -> Result<Vec<f64>, ConfigError> {
        let start = self.start.value(&format!("{key}.start"), dim)?;
        let stop = self.stop.value(&format!("{key}.stop"), dim)?;
        let step = self.step.value(&format!("{key}.step"), dim)?;
        if step == 0.0 || (stop - start) * step < 0.0 {
            return Err(range_err(
                format!("{key}.step"),
                format!("step {step} does not lead from {start} to {stop}"),
            ));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
        if n > 100_000 {
            return Err(range_err(key, format!("{n} points is more than 100000")));
        }
        Ok((0..n).map(|i| start + step * i as f64).collect())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSample {
    /// rad·T⁻¹·m⁻¹
    verdet: f64,
    length: Quantity,
    #[serde(default)]
    extra_path: Option<Quantity>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScan {
    #[serde(rename = "type")]
    kind: ScanType,
    settings: Option<Vec<Quantity>>,
    range: Option<RawRange>,
    /// Per-point acquisition time, overriding the apparatus value.
    duration: Option<Quantity>,
    at_delay: Option<Quantity>,
    /// Extra path of the calibrated rotator (rotation scans).
    extra_path: Option<Quantity>,
    /// Delay rows of each field in a field scan.
    delays: Option<RawRange>,
    sample: Option<RawSample>,
    center_offsets: Option<Vec<Quantity>>,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVerdet {
    channel: Option<String>,
    calibration: Option<RawRange>,
    #[serde(default)]
    sign: FieldSign,
    #[serde(default)]
    intercept: bool,
    expected: Option<f64>,
    /// Relative tolerance on `expected`.
    tolerance: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnalysis {
    #[serde(default = "default_true")]
    fits: bool,
    visibility_channel: Option<String>,
    #[serde(default)]
    bell_fractions: bool,
    verdet: Option<RawVerdet>,
}

impl Default for RawAnalysis {
    fn default() -> Self {
        RawAnalysis {
            fits: true,
            visibility_channel: None,
            bell_fractions: false,
            verdet: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<String>,
    prefix: Option<String>,
    format: Option<OutputFormat>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    description: Option<String>,
    seed: Option<u64>,
    apparatus: RawApparatus,
    scan: RawScan,
    #[serde(default)]
    analysis: RawAnalysis,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScanPlan {
    /// Stage delays in µm.
    Delay { delays: Vec<f64> },
    /// Wave-plate angles in degrees at a fixed delay (µm).
    Hwp { angles: Vec<f64>, at_delay: f64 },
    Rotation {
        angles: Vec<f64>,
        at_delay: f64,
        extra_path: f64,
    },
    Field {
        fields: Vec<f64>,
        delays: Vec<f64>,
        sample: FaradaySample,
        center_offsets: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerdetPlan {
    pub channel: CoincidenceChannel,
    /// Calibration rotation angles in degrees.
    pub calibration_angles: Vec<f64>,
    pub sign: FieldSign,
    pub intercept: bool,
    pub expected: Option<f64>,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisPlan {
    pub fits: bool,
    pub visibility_channel: CoincidenceChannel,
    pub bell_fractions: bool,
    pub verdet: Option<VerdetPlan>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputPlan {
    pub dir: PathBuf,
    pub prefix: String,
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub description: Option<String>,
    pub seed: u64,
    pub apparatus: Apparatus,
    pub scan: ScanPlan,
    pub analysis: AnalysisPlan,
    pub output: OutputPlan,
}

impl Config {
    /// Replaces the seed everywhere it is used.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.apparatus.acquisition.rng_seed = seed;
    }
}

fn line_of(text: &str, span: Option<std::ops::Range<usize>>) -> Option<usize> {
    span.map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
}

/// Parses and validates a config.
pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    if let Err(e) = text.parse::<toml::Table>() {
        return Err(ConfigError::Syntax {
            line: line_of(text, e.span()).unwrap_or(1),
            message: e.message().to_string(),
        });
    }
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Schema {
        line: line_of(text, e.span()),
        message: e.message().to_string(),
    })?;
    build(raw)
}

pub fn load_config(path: &FsPath) -> Result<Config, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

/// Figure configs shipped with the binary.
pub const BUNDLED: [(&str, &str); 5] = [
    ("fig2", include_str!("../configs/fig2.toml")),
    ("fig3", include_str!("../configs/fig3.toml")),
    ("fig4", include_str!("../configs/fig4.toml")),
    ("fig5", include_str!("../configs/fig5.toml")),
    ("fig6", include_str!("../configs/fig6.toml")),
];

pub fn bundled_text(figure: &str) -> Result<&'static str, ConfigError> {
    BUNDLED
        .iter()
        .find(|(name, _)| *name == figure)
        .map(|(_, t)| *t)
        .ok_or_else(|| ConfigError::UnknownFigure(figure.to_string()))
}

pub fn bundled(figure: &str) -> Result<Config, ConfigError> {
    parse_config(bundled_text(figure)?)
}

fn build(raw: RawConfig) -> Result<Config, ConfigError> {
    let seed = raw.seed.unwrap_or(0);
    let mut apparatus = build_apparatus(&raw.apparatus, seed)?;
    if let Some(d) = &raw.scan.duration {
        let v = d.value("scan.duration", Dim::Time)?;
        if v < 0.0 {
            return Err(range_err("scan.duration", "must not be negative"));
        }
        apparatus.acquisition.duration = v;
    }
    let scan = build_scan(&raw.scan)?;
    let analysis = build_analysis(&raw.analysis, &scan)?;
    let output = OutputPlan {
        dir: PathBuf::from(raw.output.dir.as_deref().unwrap_or("out")),
        prefix: raw.output.prefix.clone().unwrap_or_else(|| "scan".into()),
        format: raw.output.format.unwrap_or_default(),
    };
    if output.prefix.is_empty() || output.prefix.contains(['/', '\\']) {
        return Err(range_err("output.prefix", "must be a plain, non-empty file name"));
    }
    Ok(Config {
        description: raw.description,
        seed,
        apparatus,
        scan,
        analysis,
        output,
    })
}

fn build_apparatus(raw: &RawApparatus, seed: u64) -> Result<Apparatus, ConfigError> {
    let src = &raw.source;
    let source = match src.kind {
        SourceKind::PhiPlus => make_bell(BellKind::PhiPlus),
        SourceKind::PhiMinus => make_bell(BellKind::PhiMinus),
        SourceKind::PsiPlus => make_bell(BellKind::PsiPlus),
        SourceKind::PsiMinus => make_bell(BellKind::PsiMinus),
        SourceKind::Mixture => {
            let f = src.fractions.as_ref().ok_or_else(|| {
                range_err("apparatus.source.fractions", "required when kind = \"mixture\"")
            })?;
            let w = f.values("apparatus.source.fractions", None)?;
            if w.iter().any(|&x| x < 0.0) || w.iter().sum::<f64>() <= 0.0 {
                return Err(range_err(
                    "apparatus.source.fractions",
                    "fractions must be non-negative with a positive sum",
                ));
            }
            let ph_deg = match &src.phases {
                Some(p) => p.values("apparatus.source.phases", Some(Dim::Angle))?,
                None => [0.0; 4],
            };
            bell_mixture(w, ph_deg.map(f64::to_radians))
                .map_err(|e| range_err("apparatus.source", e.to_string()))?
        }
    };
    if src.kind != SourceKind::Mixture && (src.fractions.is_some() || src.phases.is_some()) {
        return Err(range_err(
            "apparatus.source",
            "fractions and phases apply only to kind = \"mixture\"",
        ));
    }

    let f = &raw.filter;
    let filter = SpectralFilter::new(
        f.shape,
        f.center.value("apparatus.filter.center", Dim::Wavelength)?,
        f.bandwidth.value("apparatus.filter.bandwidth", Dim::Wavelength)?,
        f.coherence_length
            .as_ref()
            .map(|q| q.value("apparatus.filter.coherence_length", Dim::Length))
            .transpose()?,
    )
    .map_err(|e| range_err("apparatus.filter", e.to_string()))?;

    let arm = |name: &str, elems: &[RawElement]| -> Result<Vec<OpticalElement>, ConfigError> {
        elems
            .iter()
            .enumerate()
            .map(|(i, e)| build_element(&format!("apparatus.{name}[{i}]"), e))
            .collect()
    };
    let arm_a = arm("arm_a", &raw.arm_a)?;
    let arm_b = arm("arm_b", &raw.arm_b)?;

    if !(0.0..=1.0).contains(&raw.mode_overlap) {
        return Err(range_err(
            "apparatus.mode_overlap",
            format!("must lie in [0, 1], got {}", raw.mode_overlap),
        ));
    }

    let a = &raw.acquisition;
    let mut acquisition = AcquisitionConfig {
        pair_rate: a.pair_rate.value("apparatus.acquisition.pair_rate", Dim::Rate)?,
        rng_seed: seed,
        ..Default::default()
    };
    if let Some(d) = &a.duration {
        acquisition.duration = d.value("apparatus.acquisition.duration", Dim::Time)?;
    }
    if let Some(e) = &a.efficiency {
        acquisition.efficiency = e.expand();
    }
    if let Some(d) = &a.dark_rate {
        acquisition.dark_rate = d.expand();
    }
    if let Some(w) = &a.window {
        acquisition.coincidence_window = w.value("apparatus.acquisition.window", Dim::Time)?;
    }
    if let Some(j) = &a.jitter {
        acquisition.jitter = j.value("apparatus.acquisition.jitter", Dim::Time)?;
    }
    acquisition
        .validate()
        .map_err(|e| range_err("apparatus.acquisition", e.to_string()))?;

    let apparatus = Apparatus {
        source,
        arm_a,
        arm_b,
        filter,
        mode_overlap: raw.mode_overlap,
        acquisition,
    };
    apparatus
        .validate()
        .map_err(|e| range_err("apparatus", e.to_string()))?;
    Ok(apparatus)
}

fn build_element(key: &str, e: &RawElement) -> Result<OpticalElement, ConfigError> {
    let angle = |name: &str, q: &Option<Quantity>| -> Result<f64, ConfigError> {
        q.as_ref()
            .ok_or_else(|| range_err(format!("{key}.{name}"), "required for this element type"))?
            .value(&format!("{key}.{name}"), Dim::Angle)
            .map(f64::to_radians)
    };
    let kind = match e.kind {
        ElementType::Identity => ElementKind::Identity,
        ElementType::Rotation => ElementKind::Rotation {
            theta: angle("angle", &e.angle)?,
        },
        ElementType::Hwp => ElementKind::Hwp {
            theta: angle("angle", &e.angle)?,
        },
        ElementType::Qwp => ElementKind::Qwp {
            theta: angle("angle", &e.angle)?,
        },
        ElementType::Faraday => ElementKind::Faraday {
            theta: angle("angle", &e.angle)?,
        },
        ElementType::Retarder => ElementKind::Retarder {
            phase: angle("phase", &e.phase)?,
            axis: angle("axis", &e.axis)?,
        },
    };
    if e.kind != ElementType::Retarder && (e.phase.is_some() || e.axis.is_some()) {
        return Err(range_err(key, "phase and axis apply only to retarders"));
    }
    if e.kind == ElementType::Identity && e.angle.is_some() {
        return Err(range_err(format!("{key}.angle"), "identity elements take no angle"));
    }
    let len = |name: &str, q: &Option<Quantity>| -> Result<Option<f64>, ConfigError> {
        q.as_ref()
            .map(|q| q.value(&format!("{key}.{name}"), Dim::Length))
            .transpose()
    };
    let both = len("extra_path", &e.extra_path)?;
    let h = len("extra_path_h", &e.extra_path_h)?;
    let v = len("extra_path_v", &e.extra_path_v)?;
    if both.is_some() && (h.is_some() || v.is_some()) {
        return Err(range_err(
            key,
            "give either extra_path or extra_path_h/extra_path_v, not both",
        ));
    }
    let h = h.or(both).unwrap_or(0.0);
    let v = v.or(both).unwrap_or(0.0);
    OpticalElement::new(kind, h, v).map_err(|err| range_err(key, err.to_string()))
}

fn settings(raw: &RawScan, dim: Dim) -> Result<Vec<f64>, ConfigError> {
    let values = match (&raw.settings, &raw.range) {
        (Some(_), Some(_)) => {
            return Err(range_err("scan", "give either settings or range, not both"))
        }
        (None, None) => return Err(range_err("scan", "one of settings or range is required")),
        (Some(list), None) => list
            .iter()
            .enumerate()
            .map(|(i, q)| q.value(&format!("scan.settings[{i}]"), dim))
            .collect::<Result<Vec<_>, _>>()?,
        (None, Some(r)) => r.expand("scan.range", dim)?,
    };
    if values.is_empty() {
        return Err(range_err("scan.settings", "must not be empty"));
    }
    let up = values.windows(2).all(|w| w[0] < w[1]);
    let down = values.windows(2).all(|w| w[0] > w[1]);
    if !(up || down) {
        return Err(range_err("scan.settings", "must be strictly monotone"));
    }
    Ok(values)
}

fn build_scan(raw: &RawScan) -> Result<ScanPlan, ConfigError> {
    let at_delay = raw
        .at_delay
        .as_ref()
        .map(|q| q.value("scan.at_delay", Dim::Length))
        .transpose()?;
    let only = |present: bool, key: &str, kinds: &str| -> Result<(), ConfigError> {
        if present {
            Err(range_err(format!("scan.{key}"), format!("applies only to {kinds} scans")))
        } else {
            Ok(())
        }
    };
    only(
        raw.kind != ScanType::Field && (raw.delays.is_some() || raw.sample.is_some() || raw.center_offsets.is_some()),
        "sample",
        "field",
    )?;
    only(
        raw.kind == ScanType::Delay && raw.at_delay.is_some(),
        "at_delay",
        "hwp, rotation and field",
    )?;
    only(
        raw.kind != ScanType::Rotation && raw.extra_path.is_some(),
        "extra_path",
        "rotation",
    )?;
    Ok(match raw.kind {
        ScanType::Delay => ScanPlan::Delay {
            delays: settings(raw, Dim::Length)?,
        },
        ScanType::Hwp => ScanPlan::Hwp {
            angles: settings(raw, Dim::Angle)?,
            at_delay: at_delay.unwrap_or(0.0),
        },
        ScanType::Rotation => {
            let extra_path = raw
                .extra_path
                .as_ref()
                .map(|q| q.value("scan.extra_path", Dim::Length))
                .transpose()?
                .unwrap_or(0.0);
            if extra_path < 0.0 {
                return Err(range_err("scan.extra_path", "must not be negative"));
            }
            ScanPlan::Rotation {
                angles: settings(raw, Dim::Angle)?,
                at_delay: at_delay.unwrap_or(0.0),
                extra_path,
            }
        }
        ScanType::Field => {
            let fields = settings(raw, Dim::Field)?;
            let delays = match &raw.delays {
                Some(r) => r.expand("scan.delays", Dim::Length)?,
                None => vec![at_delay.unwrap_or(0.0)],
            };
            let s = raw
                .sample
                .as_ref()
                .ok_or_else(|| range_err("scan.sample", "required for field scans"))?;
            let sample = FaradaySample {
                verdet: s.verdet,
                length: s.length.value("scan.sample.length", Dim::Length)? * 1e-6,
                extra_path: s
                    .extra_path
                    .as_ref()
                    .map(|q| q.value("scan.sample.extra_path", Dim::Length))
                    .transpose()?
                    .unwrap_or(0.0),
            };
            sample
                .validate()
                .map_err(|e| range_err("scan.sample", e.to_string()))?;
            let center_offsets = raw
                .center_offsets
                .as_ref()
                .map(|v| {
                    v.iter()
                        .enumerate()
                        .map(|(i, q)| q.value(&format!("scan.center_offsets[{i}]"), Dim::Length))
                        .collect::<Result<Vec<_>, _>>()
                })
                .transpose()?;
            if let Some(off) = &center_offsets {
                if off.len() != fields.len() {
                    return Err(range_err(
                        "scan.center_offsets",
                        format!("{} offsets for {} fields", off.len(), fields.len()),
                    ));
                }
            }
            ScanPlan::Field {
                fields,
                delays,
                sample,
                center_offsets,
            }
        }
    })
}

fn channel(key: &str, name: &str) -> Result<CoincidenceChannel, ConfigError> {
    name.parse()
        .map_err(|_| range_err(key, format!("unknown coincidence channel `{name}`")))
}

fn build_analysis(raw: &RawAnalysis, scan: &ScanPlan) -> Result<AnalysisPlan, ConfigError> {
    let visibility_channel = match &raw.visibility_channel {
        Some(n) => channel("analysis.visibility_channel", n)?,
        None => CoincidenceChannel::HcHd,
    };
    if raw.bell_fractions && !matches!(scan, ScanPlan::Delay { .. }) {
        return Err(range_err(
            "analysis.bell_fractions",
            "needs a delay scan",
        ));
    }
    let verdet = match &raw.verdet {
        None => None,
        Some(v) => {
            if !matches!(scan, ScanPlan::Field { .. }) {
                return Err(range_err("analysis.verdet", "needs a field scan"));
            }
            let calibration_angles = match &v.calibration {
                Some(r) => r.expand("analysis.verdet.calibration", Dim::Angle)?,
                None => (0..=36).map(|i| i as f64 * 5.0).collect(),
            };
            if calibration_angles.len() < 4 {
                return Err(range_err(
                    "analysis.verdet.calibration",
                    "needs at least 4 angles",
                ));
            }
            if let Some(t) = v.tolerance {
                if !(t > 0.0 && t.is_finite()) {
                    return Err(range_err("analysis.verdet.tolerance", "must be positive"));
                }
            }
            Some(VerdetPlan {
                channel: match &v.channel {
                    Some(n) => channel("analysis.verdet.channel", n)?,
                    None => CoincidenceChannel::VcHd,
                },
                calibration_angles,
                sign: v.sign,
                intercept: v.intercept,
                expected: v.expected,
                tolerance: v.tolerance,
            })
        }
    };
    Ok(AnalysisPlan {
        fits: raw.fits,
        visibility_channel,
        bell_fractions: raw.bell_fractions,
        verdet,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 3

[apparatus.source]
kind = "phi_plus"

[apparatus.filter]
shape = "gaussian"
center = "810nm"
bandwidth = "10nm"
coherence_length = "59um"

[apparatus.acquisition]
pair_rate = 23224

[scan]
type = "delay"
range = { start = "-100um", stop = "100um", step = "10um" }
"#;

    #[test]
    fn units() {
        assert_eq!(parse_with_unit("59um", Dim::Length), Some(59.0));
        assert_eq!(parse_with_unit("10 mm", Dim::Length), Some(10_000.0));
        assert_eq!(parse_with_unit("5ns", Dim::Time), Some(5e-9));
        assert_eq!(parse_with_unit("1e-3 s", Dim::Time), Some(1e-3));
        assert_eq!(parse_with_unit("45deg", Dim::Angle), Some(45.0));
        assert_eq!(parse_with_unit("0.5T", Dim::Field), Some(0.5));
        assert_eq!(parse_with_unit("250mT", Dim::Field), Some(0.25));
        assert_eq!(parse_with_unit("810", Dim::Wavelength), Some(810.0));
        assert_eq!(parse_with_unit("5 parsecs", Dim::Length), None);
        assert_eq!(parse_with_unit("45deg", Dim::Length), None);
    }

    #[test]
    fn minimal_config() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.apparatus.acquisition.rng_seed, 3);
        let ScanPlan::Delay { delays } = &c.scan else {
            panic!("not a delay scan")
        };
        assert_eq!(delays.len(), 21);
        assert_eq!(delays[20], 100.0);
        assert_eq!(c.output.format, OutputFormat::Csv);
    }

    #[test]
    fn syntax_error_names_line() {
        let text = MINIMAL.replace("kind = \"phi_plus\"", "kind = ");
        let err = parse_config(&text).unwrap_err();
        let ConfigError::Syntax { line, .. } = err else {
            panic!("{err:?}")
        };
        assert_eq!(line, 5);
    }

    #[test]
    fn unknown_key_is_schema_error() {
        let text = MINIMAL.replace("bandwidth = \"10nm\"", "bandwidht = \"10nm\"");
        let err = parse_config(&text).unwrap_err();
        assert!(matches!(err, ConfigError::Schema { .. }), "{err:?}");
        assert!(err.to_string().contains("bandwidht"), "{err}");
    }

    #[test]
    fn out_of_range_names_key() {
        let text = MINIMAL.replace("[apparatus.acquisition]", "[apparatus.acquisition]\nwindow = \"-5ns\"");
        let err = parse_config(&text).unwrap_err();
        assert!(matches!(err, ConfigError::Range { .. }), "{err:?}");
        let text = MINIMAL.replace("coherence_length = \"59um\"", "coherence_length = \"59deg\"");
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("apparatus.filter.coherence_length"), "{err}");
        let text = MINIMAL.replace("seed = 3", "seed = 3\n[apparatus]\nmode_overlap = 1.5");
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn bundled_configs_parse() {
        for (name, _) in BUNDLED {
            let c = bundled(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(c.output.prefix, name);
        }
        assert!(matches!(bundled("fig9"), Err(ConfigError::UnknownFigure(_))));
    }
}
