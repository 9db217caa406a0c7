//! Runs a configured scan, analyzes it and writes the results.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use bels_core::analysis::{
    coherence_from_fit, estimate_bell_fractions, fit_angle_channels, fit_delay_channels,
    fit_sin2_offset, verdet_from_field_scans, visibility, BellFractionEstimate, ChannelFits,
    CoherenceEstimate, Estimate, FitResult, RotationCalibration, Sin2Mode, VerdetEstimate,
};
use bels_core::detection::ChannelCounts;
use bels_core::experiment::{
    run_delay_scan, run_field_scan_with, run_hwp_scan, run_rotation_scan, Apparatus,
    FieldScanOptions, ScanResult, ScanVariable,
};
use bels_core::fockstate::{bell_fractions, BellFractions};
use bels_core::interference::CoincidenceChannel;
use serde::Serialize;
use thiserror::Error;

use crate::config::{AnalysisPlan, Config, ConfigError, OutputFormat, ScanPlan, VerdetPlan};
use crate::table::{self, TableError};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("simulation failed: {0}")]
    Core(#[from] bels_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Table { path: PathBuf, source: TableError },
    #[error("{0}")]
    Serialize(#[from] serde_json::Error),
}

impl RunError {
    /// 1 for bad configuration, 2 for everything that fails later.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FitEntry {
    /// Set for members of a field series.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field_t: Option<f64>,
    pub channel: CoincidenceChannel,
    pub fit: Option<FitResult>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChannelEstimate {
    pub channel: CoincidenceChannel,
    pub estimate: Estimate,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoherenceSummary {
    pub channel: CoincidenceChannel,
    pub estimate: CoherenceEstimate,
}

#[derive(Debug, Clone, Serialize)]
pub struct BellSummary {
    pub injected: BellFractions,
    pub estimate: BellFractionEstimate,
    /// Counts at zero delay with a half-wave plate at 45° in arm a.
    pub hwp45_counts: ChannelCounts,
    pub max_abs_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Endpoints {
    pub channel: CoincidenceChannel,
    pub at_0deg: f64,
    pub at_45deg: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldPoint {
    pub field_t: f64,
    pub visibility: Option<Estimate>,
    /// Fitted dip or peak center, µm.
    pub center: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerdetSummary {
    pub channel: CoincidenceChannel,
    pub calibration: RotationCalibration,
    pub calibration_fit: FitResult,
    pub estimate: VerdetEstimate,
    pub expected: Option<f64>,
    /// Relative.
    pub tolerance: Option<f64>,
    pub within_tolerance: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub description: Option<String>,
    pub scan_variable: ScanVariable,
    pub seed: u64,
    pub scans: usize,
    pub rows: usize,
    pub visibility: Option<ChannelEstimate>,
    pub coherence: Option<CoherenceSummary>,
    pub hwp_endpoints: Vec<Endpoints>,
    pub field_points: Vec<FieldPoint>,
    pub bell_fractions: Option<BellSummary>,
    pub verdet: Option<VerdetSummary>,
    /// Requested analyses that could not be completed.
    pub failures: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Run {
    pub scans: Vec<ScanResult>,
    /// Rotation calibration scan behind a Verdet estimate.
    pub calibration: Option<ScanResult>,
    pub fits: Vec<FitEntry>,
    pub summary: Summary,
}

/// Independent seed for an auxiliary acquisition of the same run.
fn aux_seed(seed: u64, k: u64) -> u64 {
    seed ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn with_seed(app: &Apparatus, seed: u64) -> Apparatus {
    let mut a = app.clone();
    a.acquisition.rng_seed = seed;
    a
}

fn entries(
    field_t: Option<f64>,
    fits: BTreeMap<CoincidenceChannel, bels_core::Result<FitResult>>,
) -> Vec<FitEntry> {
    fits.into_iter()
        .map(|(channel, r)| match r {
            Ok(fit) => FitEntry {
                field_t,
                channel,
                fit: Some(fit),
                error: None,
            },
            Err(e) => FitEntry {
                field_t,
                channel,
                fit: None,
                error: Some(e.to_string()),
            },
        })
        .collect()
}

fn find_fit(fits: &[FitEntry], field_t: Option<f64>, ch: CoincidenceChannel) -> Option<&FitResult> {
    fits.iter()
        .find(|e| e.channel == ch && e.field_t == field_t)
        .and_then(|e| e.fit.as_ref())
}

/// Fits and the derived quantities that need no further acquisitions.
pub fn analyze(scans: &[ScanResult], plan: &AnalysisPlan, description: Option<String>) -> Run {
    let first = &scans[0];
    let mut summary = Summary {
        description,
        scan_variable: first.variable,
        seed: first.seed,
        scans: scans.len(),
        rows: scans.iter().map(|s| s.rows.len()).sum(),
        visibility: None,
        coherence: None,
        hwp_endpoints: Vec::new(),
        field_points: Vec::new(),
        bell_fractions: None,
        verdet: None,
        failures: Vec::new(),
    };
    let mut fits = Vec::new();
    if !plan.fits {
        return Run {
            scans: scans.to_vec(),
            calibration: None,
            fits,
            summary,
        };
    }
    let vch = plan.visibility_channel;

    for scan in scans {
        let field_t = scan.context.get("field_T").copied();
        match scan.variable {
            ScanVariable::Delay => fits.extend(entries(field_t, fit_delay_channels(scan))),
            ScanVariable::HwpAngle => {
                fits.extend(entries(field_t, fit_angle_channels(scan, Sin2Mode::Hwp2Theta)))
            }
            ScanVariable::RotationAngle | ScanVariable::Field => {
                fits.extend(entries(field_t, fit_angle_channels(scan, Sin2Mode::RotationTheta)))
            }
        }
    }

    match first.variable {
        ScanVariable::Delay if !first.context.contains_key("field_T") => match find_fit(&fits, None, vch) {
            Some(fit) => {
                match visibility(fit) {
                    Ok(v) => summary.visibility = Some(ChannelEstimate { channel: vch, estimate: v }),
                    Err(e) => summary.failures.push(format!("visibility on {vch}: {e}")),
                }
                match coherence_from_fit(fit) {
                    Ok(c) => summary.coherence = Some(CoherenceSummary { channel: vch, estimate: c }),
                    Err(e) => summary.failures.push(format!("coherence on {vch}: {e}")),
                }
            }
            None => summary.failures.push(format!("no converged fit on {vch}")),
        },
        ScanVariable::Delay => {
            for scan in scans {
                let field_t = scan.context.get("field_T").copied().unwrap_or(f64::NAN);
                let fit = find_fit(&fits, Some(field_t), vch);
                summary.field_points.push(FieldPoint {
                    field_t,
                    visibility: fit.and_then(|f| visibility(f).ok()),
                    center: fit.and_then(|f| f.value("x0")),
                });
            }
        }
        ScanVariable::HwpAngle => {
            for e in fits.iter().filter(|e| e.field_t.is_none()) {
                let Some(fit) = &e.fit else { continue };
                if let (Some(at_0deg), Some(at_45deg)) = (fit.eval(0.0), fit.eval(45.0)) {
                    summary.hwp_endpoints.push(Endpoints {
                        channel: e.channel,
                        at_0deg,
                        at_45deg,
                    });
                }
            }
        }
        _ => {}
    }
    Run {
        scans: scans.to_vec(),
        calibration: None,
        fits,
        summary,
    }
}

fn add_bell_fractions(run: &mut Run, app: &Apparatus, seed: u64) -> Result<(), RunError> {
    let scan = &run.scans[0];
    let fits: ChannelFits = run
        .fits
        .iter()
        .filter_map(|e| e.fit.clone().map(|f| (e.channel, f)))
        .collect();
    let hwp = run_hwp_scan(&with_seed(app, aux_seed(seed, 1)), &[45.0], 0.0)?;
    let hwp45 = hwp.rows[0].counts;
    match estimate_bell_fractions(scan, &hwp45, &fits) {
        Ok(estimate) => {
            let injected = bell_fractions(&app.source)?;
            run.summary.bell_fractions = Some(BellSummary {
                max_abs_error: estimate.fractions.max_abs_diff(&injected),
                injected,
                estimate,
                hwp45_counts: hwp45,
            });
        }
        Err(e) => run.summary.failures.push(format!("bell fractions: {e}")),
    }
    Ok(())
}

fn add_verdet(
    run: &mut Run,
    app: &Apparatus,
    seed: u64,
    plan: &VerdetPlan,
    length: f64,
    extra_path: f64,
) -> Result<(), RunError> {
    let cal_scan = run_rotation_scan(
        &with_seed(app, aux_seed(seed, 2)),
        &plan.calibration_angles,
        0.0,
        extra_path,
    )?;
    let y: Vec<f64> = cal_scan
        .rows
        .iter()
        .map(|r| r.counts.get(plan.channel) as f64)
        .collect();
    let result = fit_sin2_offset(&cal_scan.settings(), &y, Sin2Mode::RotationTheta).and_then(|fit| {
        let cal = RotationCalibration::from_fit(&fit, plan.channel)?;
        let est = verdet_from_field_scans(&run.scans, &cal, length, plan.sign, plan.intercept)?;
        Ok((fit, cal, est))
    });
    run.calibration = Some(cal_scan);
    match result {
        Ok((calibration_fit, calibration, estimate)) => {
            let within_tolerance = match (plan.expected, plan.tolerance) {
                (Some(x), Some(tol)) => {
                    Some((estimate.verdet.value - x).abs() <= tol * x.abs())
                }
                _ => None,
            };
            if within_tolerance == Some(false) {
                run.summary.failures.push(format!(
                    "Verdet constant {:.3} outside {} ± {}%",
                    estimate.verdet.value,
                    plan.expected.unwrap_or(f64::NAN),
                    100.0 * plan.tolerance.unwrap_or(f64::NAN)
                ));
            }
            run.summary.verdet = Some(VerdetSummary {
                channel: plan.channel,
                calibration,
                calibration_fit,
                estimate,
                expected: plan.expected,
                tolerance: plan.tolerance,
                within_tolerance,
            });
        }
        Err(e) => run.summary.failures.push(format!("Verdet estimate: {e}")),
    }
    Ok(())
}

/// Simulates the configured scan and runs every requested analysis.
pub fn simulate(config: &Config) -> Result<Run, RunError> {
    let app = &config.apparatus;
    app.validate()?;
    let scans = match &config.scan {
        ScanPlan::Delay { delays } => vec![run_delay_scan(app, delays)?],
        ScanPlan::Hwp { angles, at_delay } => vec![run_hwp_scan(app, angles, *at_delay)?],
        ScanPlan::Rotation {
            angles,
            at_delay,
            extra_path,
        } => vec![run_rotation_scan(app, angles, *at_delay, *extra_path)?],
        ScanPlan::Field {
            fields,
            delays,
            sample,
            center_offsets,
        } => run_field_scan_with(
            app,
            sample,
            fields,
            delays,
            &FieldScanOptions {
                center_offsets: center_offsets.clone(),
            },
        )?,
    };
    let mut run = analyze(&scans, &config.analysis, config.description.clone());
    if config.analysis.bell_fractions && config.analysis.fits {
        add_bell_fractions(&mut run, app, config.seed)?;
    }
    if let (Some(plan), ScanPlan::Field { sample, .. }) = (&config.analysis.verdet, &config.scan) {
        add_verdet(&mut run, app, config.seed, plan, sample.length, sample.extra_path)?;
    }
    Ok(run)
}

fn write_file(path: PathBuf, text: &str) -> Result<PathBuf, RunError> {
    std::fs::write(&path, text).map_err(|source| RunError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Writes `{prefix}_scan`, `{prefix}_calibration` (if any), `{prefix}_fits.json`
/// and `{prefix}_summary.json` into `dir`, returning the paths written.
pub fn write_outputs(
    run: &Run,
    dir: &Path,
    prefix: &str,
    format: OutputFormat,
) -> Result<Vec<PathBuf>, RunError> {
    std::fs::create_dir_all(dir).map_err(|source| RunError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let ext = table::extension(format);
    let table_err = |path: PathBuf| move |source| RunError::Table { path, source };
    let mut written = Vec::new();

    let path = dir.join(format!("{prefix}_scan.{ext}"));
    let text = table::write_table(&run.scans, format).map_err(table_err(path.clone()))?;
    written.push(write_file(path, &text)?);
    if let Some(cal) = &run.calibration {
        let path = dir.join(format!("{prefix}_calibration.{ext}"));
        let text =
            table::write_table(std::slice::from_ref(cal), format).map_err(table_err(path.clone()))?;
        written.push(write_file(path, &text)?);
    }
    let fits = serde_json::to_string_pretty(&run.fits)?;
    written.push(write_file(dir.join(format!("{prefix}_fits.json")), &fits)?);
    let summary = serde_json::to_string_pretty(&run.summary)?;
    written.push(write_file(dir.join(format!("{prefix}_summary.json")), &summary)?);
    Ok(written)
}

/// Reads a scan table written by [`write_outputs`].
pub fn load_scans(path: &Path) -> Result<Vec<ScanResult>, RunError> {
    let text = std::fs::read_to_string(path).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    table::read_table(&text).map_err(|source| RunError::Table {
        path: path.to_path_buf(),
        source,
    })
}
