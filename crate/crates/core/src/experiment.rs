//! Apparatus description and the three scan drivers (stage delay, wave-plate
//! angle, magnetic field).
//!
//! Every scan row draws its shot noise from its own ChaCha stream derived from
//! the master seed and the row index, so rows can be computed in parallel and
//! the result is bit-for-bit reproducible.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detection::{sample_counts_with_rng, AcquisitionConfig, ChannelCounts};
use crate::elements::{ElementKind, OpticalElement};
use crate::error::{Error, Result};
use crate::fockstate::{Ports, TwoPhotonState};
use crate::interference::{coincidence_probabilities, ChannelProbabilities, SpectralFilter};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Apparatus {
    pub source: TwoPhotonState,
    /// Elements in arm a in propagation order (sample side).
    pub arm_a: Vec<OpticalElement>,
    /// Elements in arm b (compensator side).
    pub arm_b: Vec<OpticalElement>,
    pub filter: SpectralFilter,
    /// Exchange overlap from mode mismatch not captured by the delay kernel;
    /// sets the ceiling on HOM visibility.
    pub mode_overlap: f64,
    pub acquisition: AcquisitionConfig,
}

impl Apparatus {
    pub fn validate(&self) -> Result<()> {
        if self.source.ports() != Ports::Input {
            return Err(Error::ExpectedInputPorts);
        }
        let n = self.source.norm_sqr();
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized(n));
        }
        if !(0.0..=1.0).contains(&self.mode_overlap) {
            return Err(Error::InvalidParameter(format!(
                "mode_overlap must lie in [0, 1], got {}",
                self.mode_overlap
            )));
        }
        self.filter.validate()?;
        self.acquisition.validate()
    }

    pub fn probabilities_at(&self, stage_delay: f64) -> Result<ChannelProbabilities> {
        coincidence_probabilities(
            &self.source,
            &self.arm_a,
            &self.arm_b,
            stage_delay,
            &self.filter,
            self.mode_overlap,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanVariable {
    /// Stage delay in µm.
    Delay,
    /// Half-wave plate angle in degrees.
    HwpAngle,
    /// Known polarization rotation in degrees.
    RotationAngle,
    /// Magnetic field in tesla.
    Field,
}

impl ScanVariable {
    pub fn name(self) -> &'static str {
        match self {
            ScanVariable::Delay => "delay",
            ScanVariable::HwpAngle => "hwp_angle",
            ScanVariable::RotationAngle => "rotation_angle",
            ScanVariable::Field => "field",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            ScanVariable::Delay => "um",
            ScanVariable::HwpAngle | ScanVariable::RotationAngle => "deg",
            ScanVariable::Field => "T",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [
            ScanVariable::Delay,
            ScanVariable::HwpAngle,
            ScanVariable::RotationAngle,
            ScanVariable::Field,
        ]
        .into_iter()
        .find(|v| v.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub setting: f64,
    pub counts: ChannelCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub variable: ScanVariable,
    pub rows: Vec<ScanRow>,
    /// Apparatus as scanned, before any per-row element insertion.
    pub apparatus: Apparatus,
    pub seed: u64,
    /// Fixed conditions of the scan, e.g. `field_T` for one member of a field
    /// series or `at_delay_um` for angle scans.
    #[serde(default)]
    pub context: BTreeMap<String, f64>,
}

impl ScanResult {
    pub fn settings(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.setting).collect()
    }

    /// Row whose setting is closest to `x`.
    pub fn nearest_row(&self, x: f64) -> Option<&ScanRow> {
        self.rows
            .iter()
            .min_by(|a, b| (a.setting - x).abs().total_cmp(&(b.setting - x).abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaradaySample {
    /// rad·T⁻¹·m⁻¹
    pub verdet: f64,
    /// m
    pub length: f64,
    /// Optical path added in arm a, µm.
    pub extra_path: f64,
}

impl FaradaySample {
    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sample length must be positive, got {}",
                self.length
            )));
        }
        if !self.verdet.is_finite() {
            return Err(Error::InvalidParameter("Verdet constant must be finite".into()));
        }
        if !(self.extra_path >= 0.0 && self.extra_path.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sample extra path must be non-negative, got {}",
                self.extra_path
            )));
        }
        Ok(())
    }

    /// θ = V·L·B in radians.
    pub fn rotation_angle(&self, field: f64) -> f64 {
        self.verdet * self.length * field
    }
}

fn check_settings(settings: &[f64]) -> Result<()> {
    if settings.is_empty() {
        return Err(Error::EmptyScan);
    }
    if settings.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidParameter("scan settings must be finite".into()));
    }
    let up = settings.windows(2).all(|w| w[0] < w[1]);
    let down = settings.windows(2).all(|w| w[0] > w[1]);
    if up || down {
        Ok(())
    } else {
        Err(Error::NonMonotoneSettings)
    }
}

fn row_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs `point(setting)` → probabilities for every setting and samples counts.
fn run_scan<F>(
    app: &Apparatus,
    variable: ScanVariable,
    settings: &[f64],
    stream_base: u64,
    context: BTreeMap<String, f64>,
    point: F,
) -> Result<ScanResult>
where
    F: Fn(f64) -> Result<ChannelProbabilities> + Sync,
{
    app.validate()?;
    check_settings(settings)?;
    let seed = app.acquisition.rng_seed;
    let rows = settings
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let probs = point(x)?;
            let mut rng = row_rng(seed, stream_base + i as u64);
            Ok(ScanRow {
                setting: x,
                counts: sample_counts_with_rng(&probs, &app.acquisition, &mut rng),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanResult {
        variable,
        rows,
        apparatus: app.clone(),
        seed,
        context,
    })
}

/// Coincidences versus stage delay (µm), rows in input order.
pub fn run_delay_scan(app: &Apparatus, delays: &[f64]) -> Result<ScanResult> {
    run_scan(app, ScanVariable::Delay, delays, 0, BTreeMap::new(), |x| {
        app.probabilities_at(x)
    })
}

fn run_angle_scan<F>(
    app: &Apparatus,
    variable: ScanVariable,
    angles_deg: &[f64],
    at_delay: f64,
    make: F,
) -> Result<ScanResult>
where
    F: Fn(f64) -> OpticalElement + Sync,
{
    let context = BTreeMap::from([("at_delay_um".to_string(), at_delay)]);
    run_scan(app, variable, angles_deg, 0, context, |deg| {
        let mut arm_a = Vec::with_capacity(app.arm_a.len() + 1);
        arm_a.push(make(deg.to_radians()));
        arm_a.extend_from_slice(&app.arm_a);
        coincidence_probabilities(
            &app.source,
            &arm_a,
            &app.arm_b,
            at_delay,
            &app.filter,
            app.mode_overlap,
        )
    })
}

/// Half-wave plate at each angle (degrees) inserted at the head of arm a.
pub fn run_hwp_scan(app: &Apparatus, angles_deg: &[f64], at_delay: f64) -> Result<ScanResult> {
    run_angle_scan(app, ScanVariable::HwpAngle, angles_deg, at_delay, |theta| {
        OpticalElement::thin(ElementKind::Hwp { theta })
    })
}

/// Calibrated polarization rotation at each angle (degrees) inserted at the head
/// of arm a with the given extra path (µm). Used to calibrate the sin²θ
/// response before converting field-scan counts to angles.
pub fn run_rotation_scan(
    app: &Apparatus,
    angles_deg: &[f64],
    at_delay: f64,
    extra_path: f64,
) -> Result<ScanResult> {
    OpticalElement::new(ElementKind::Identity, extra_path, extra_path)?;
    run_angle_scan(app, ScanVariable::RotationAngle, angles_deg, at_delay, |theta| {
        OpticalElement::new(ElementKind::Rotation { theta }, extra_path, extra_path)
            .expect("extra path validated")
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FieldScanOptions {
    /// Extra stage offset (µm) per field, to emulate a drifting dip center.
    pub center_offsets: Option<Vec<f64>>,
}

/// One delay scan per field with a Faraday element `θ = V·L·B` appended to arm a.
pub fn run_field_scan(
    app: &Apparatus,
    sample: &FaradaySample,
    fields: &[f64],
    at_delays: &[f64],
) -> Result<Vec<ScanResult>> {
    run_field_scan_with(app, sample, fields, at_delays, &FieldScanOptions::default())
}

pub fn run_field_scan_with(
    app: &Apparatus,
    sample: &FaradaySample,
    fields: &[f64],
    at_delays: &[f64],
    opts: &FieldScanOptions,
) -> Result<Vec<ScanResult>> {
    sample.validate()?;
    if fields.is_empty() {
        return Err(Error::EmptyScan);
    }
    if let Some(off) = &opts.center_offsets {
        if off.len() != fields.len() {
            return Err(Error::InvalidParameter(format!(
                "{} center offsets for {} fields",
                off.len(),
                fields.len()
            )));
        }
    }
    check_settings(at_delays)?;
    fields
        .par_iter()
        .enumerate()
        .map(|(k, &field)| {
            let theta = sample.rotation_angle(field);
            let mut with_sample = app.clone();
            with_sample.arm_a.push(OpticalElement::new(
                ElementKind::Faraday { theta },
                sample.extra_path,
                sample.extra_path,
            )?);
            let offset = opts.center_offsets.as_ref().map_or(0.0, |o| o[k]);
            let mut context = BTreeMap::from([
                ("field_T".to_string(), field),
                ("theta_rad".to_string(), theta),
            ]);
            if offset != 0.0 {
                context.insert("center_offset_um".to_string(), offset);
            }
            let stream_base = ((k as u64) + 1) << 32;
            let mut scan = run_scan(
                &with_sample,
                ScanVariable::Delay,
                at_delays,
                stream_base,
                context,
                |x| with_sample.probabilities_at(x + offset),
            )?;
            scan.apparatus = app.clone();
            Ok(scan)
        })
        .collect()
}
