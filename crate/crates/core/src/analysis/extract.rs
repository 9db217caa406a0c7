//! Physical quantities from fitted scans: HOM visibility, coherence length and
//! time, Bell-state fractions, rotation angles and the Verdet constant.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::fit::{
    fit_gaussian_offset, fit_linear, fit_sin2_offset, FitResult, GaussianOffset, Model, Sin2Mode,
};
use crate::detection::{accidental_rate, AcquisitionConfig, ChannelCounts};
use crate::error::{Error, Result};
use crate::experiment::ScanResult;
use crate::fockstate::BellFractions;
use crate::interference::CoincidenceChannel;

/// Speed of light in µm/fs.
pub const SPEED_OF_LIGHT: f64 = 0.299_792_458;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub uncertainty: f64,
}

fn fitted(fit: &FitResult, name: &str) -> Result<(f64, f64)> {
    let p = fit
        .get(name)
        .ok_or_else(|| Error::InvalidParameter(format!("fit has no parameter {name}")))?;
    Ok((p.value, p.uncertainty))
}

/// `|A|/C` of a Gaussian fit with first-order error propagation, including the
/// A–C covariance.
pub fn visibility(fit: &FitResult) -> Result<Estimate> {
    let (a, sa) = fitted(fit, "A")?;
    let (c, sc) = fitted(fit, "C")?;
    if c <= 0.0 {
        return Err(Error::Degenerate(format!("plateau C = {c} is not positive")));
    }
    let v = a.abs() / c;
    let cov = fit.covariance_of("A", "C").unwrap_or(0.0);
    let sign = if a < 0.0 { -1.0 } else { 1.0 };
    // ∂V/∂A = sign/C, ∂V/∂C = −V/C
    let var = (sa / c).powi(2) + (v * sc / c).powi(2) - 2.0 * sign * v * cov / (c * c);
    Ok(Estimate {
        value: v,
        uncertainty: var.max(0.0).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceEstimate {
    /// µm
    pub length: Estimate,
    /// fs
    pub time: Estimate,
}

/// ℓc is the fitted FWHM; τc = ℓc/c.
pub fn coherence_from_fit(fit: &FitResult) -> Result<CoherenceEstimate> {
    let (w, sw) = fitted(fit, "w")?;
    let w = w.abs();
    Ok(CoherenceEstimate {
        length: Estimate {
            value: w,
            uncertainty: sw,
        },
        time: Estimate {
            value: w / SPEED_OF_LIGHT,
            uncertainty: sw / SPEED_OF_LIGHT,
        },
    })
}

/// Background-free coincidence counts of one channel in one acquisition.
fn subtract_accidentals(counts: &ChannelCounts, ch: CoincidenceChannel, acq: &AcquisitionConfig) -> f64 {
    let (x, y) = ch.detectors();
    let t = acq.duration;
    if t.is_nan() || t <= 0.0 {
        return counts.get(ch) as f64;
    }
    let r1 = counts.singles_at(x) as f64 / t;
    let r2 = counts.singles_at(y) as f64 / t;
    counts.get(ch) as f64 - accidental_rate(r1, r2, acq.coincidence_window) * t
}

/// Fits every coincidence channel of a delay scan with a Gaussian plus offset.
/// A failing channel does not stop the others.
pub fn fit_delay_channels(scan: &ScanResult) -> BTreeMap<CoincidenceChannel, Result<FitResult>> {
    let x = scan.settings();
    CoincidenceChannel::ALL
        .into_iter()
        .map(|ch| {
            let y: Vec<f64> = scan.rows.iter().map(|r| r.counts.get(ch) as f64).collect();
            (ch, fit_gaussian_offset(&x, &y))
        })
        .collect()
}

/// Fits every coincidence channel of an angle scan with a sin² plus offset.
pub fn fit_angle_channels(
    scan: &ScanResult,
    mode: Sin2Mode,
) -> BTreeMap<CoincidenceChannel, Result<FitResult>> {
    let x = scan.settings();
    CoincidenceChannel::ALL
        .into_iter()
        .map(|ch| {
            let y: Vec<f64> = scan.rows.iter().map(|r| r.counts.get(ch) as f64).collect();
            (ch, fit_sin2_offset(&x, &y, mode))
        })
        .collect()
}

pub type ChannelFits = BTreeMap<CoincidenceChannel, FitResult>;

/// Plateau and dip-center levels of one channel, background subtracted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelLevels {
    pub plateau: f64,
    pub center: f64,
}

/// How the levels entering the Bell-fraction ratios were obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellMethod {
    pub description: String,
    /// Channel whose fit fixed the common dip shape, if any fit was usable.
    pub shape_channel: Option<CoincidenceChannel>,
    pub shape_center: f64,
    pub shape_width: f64,
    pub levels: BTreeMap<CoincidenceChannel, ChannelLevels>,
    /// Sum of the Hc:Hd, Vc:Vd, Hc:Vc and Vc:Hd plateaus.
    pub plateau_sum: f64,
    /// Exchange overlap at the dip center, from the Hc:Hd and Vc:Vd dip depths.
    pub mode_overlap: f64,
    /// `false` when the Φ channels were too weak and full overlap was assumed.
    pub mode_overlap_measured: bool,
    /// (Hc:Vc − Vc:Hd) at zero delay over plateau_sum·mode_overlap, i.e. p(Ψ+) − p(Ψ−).
    pub psi_asymmetry: f64,
    /// (Hc:Vc − Vc:Hd)/(Hc:Vc + Vc:Hd) at HWP 45° over mode_overlap, i.e.
    /// (p(Φ+) − p(Φ−))/(p(Φ+) + p(Φ−)).
    pub phi_contrast: f64,
    /// Accidentals removed per row, averaged over the scan, for Hc:Hd.
    pub mean_accidentals: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellFractionEstimate {
    pub fractions: BellFractions,
    pub method: BellMethod,
    /// Counts left at zero delay in Hc:Hd + Vc:Vd relative to their plateaus.
    /// The ratio procedure treats this as negligible.
    pub zero_delay_residual: Option<f64>,
    pub warnings: Vec<String>,
}

const BELL_CHANNELS: [CoincidenceChannel; 4] = [
    CoincidenceChannel::HcHd,
    CoincidenceChannel::VcVd,
    CoincidenceChannel::HcVc,
    CoincidenceChannel::VcHd,
];

/// Below this the weight or overlap is too small to form a ratio.
const MIN_RATIO_BASE: f64 = 0.05;

fn usable(fit: &FitResult) -> bool {
    fit.converged
        && fit.parameters.iter().all(|p| p.value.is_finite())
        && fit.value("w").is_some_and(|w| w.abs() > 0.0)
}

/// Weighted linear least squares for `y = C + A·g` with the shape `g` fixed.
fn linear_levels(g: &[f64], y: &[f64], raw: &[f64]) -> (f64, f64) {
    let (mut sw, mut sg, mut sgg, mut sy, mut sgy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..y.len() {
        let w = 1.0 / raw[i].max(1.0);
        sw += w;
        sg += w * g[i];
        sgg += w * g[i] * g[i];
        sy += w * y[i];
        sgy += w * g[i] * y[i];
    }
    let det = sw * sgg - sg * sg;
    if det.abs() <= 1e-12 * sw * sgg.max(1e-300) {
        return (sy / sw, 0.0);
    }
    ((sgg * sy - sg * sgy) / det, (sw * sgy - sg * sy) / det)
}

/// Estimates the four Bell-state fractions from a delay scan and one HWP = 45°
/// acquisition taken at the dip center.
///
/// Reading of the ratio procedure:
/// 1. Accidentals (from each row's singles) are removed from every count.
/// 2. All four channels share one dip shape, taken from the most significant
///    usable Gaussian fit; each channel's plateau C and center level C + A
///    then come from a linear fit against that shape.
/// 3. The Ψ weight is (Hc:Vc + Vc:Hd plateaus) over the sum of all four
///    plateaus, and the Φ weight is the remainder.
/// 4. p(Ψ+) − p(Ψ−) is the bunching/anti-bunching asymmetry of Hc:Vc versus
///    Vc:Hd at zero delay, normalized by the plateau sum and the overlap
///    measured from the Hc:Hd and Vc:Vd dip depths.
/// 5. The HWP swaps Φ± into Ψ±, so the same asymmetry at 45° splits Φ+ from Φ−.
///
/// Negative intermediate values are clamped to 0 and reported in `warnings`.
pub fn estimate_bell_fractions(
    scan: &ScanResult,
    hwp45: &ChannelCounts,
    fits: &ChannelFits,
) -> Result<BellFractionEstimate> {
    for ch in BELL_CHANNELS {
        if !fits.contains_key(&ch) {
            return Err(Error::MissingChannel(ch));
        }
    }
    if scan.rows.is_empty() {
        return Err(Error::EmptyScan);
    }
    let acq = &scan.apparatus.acquisition;
    let x = scan.settings();
    let mut warnings = Vec::new();

    // Common shape from the fit with the most significant amplitude.
    let shape = BELL_CHANNELS
        .iter()
        .filter(|ch| usable(&fits[ch]))
        .map(|&ch| {
            let f = &fits[&ch];
            let a = f.value("A").unwrap_or(0.0);
            let sa = f.uncertainty("A").unwrap_or(f64::INFINITY);
            (ch, a.abs() / sa)
        })
        .filter(|(_, z)| z.is_finite() && *z > 3.0)
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(ch, _)| {
            let f = &fits[&ch];
            (ch, f.value("x0").unwrap(), f.value("w").unwrap().abs())
        });
    if shape.is_none() {
        warnings.push("no channel shows a significant dip or peak; using raw levels".into());
    }

    let mut levels = BTreeMap::new();
    let mut mean_acc = 0.0;
    for ch in BELL_CHANNELS {
        let raw: Vec<f64> = scan.rows.iter().map(|r| r.counts.get(ch) as f64).collect();
        let y: Vec<f64> = scan
            .rows
            .iter()
            .map(|r| subtract_accidentals(&r.counts, ch, acq))
            .collect();
        if ch == CoincidenceChannel::HcHd {
            mean_acc = raw.iter().zip(&y).map(|(r, y)| r - y).sum::<f64>() / raw.len() as f64;
        }
        let (plateau, center) = match shape {
            Some((_, x0, w)) => {
                let g: Vec<f64> = x
                    .iter()
                    .map(|&xi| GaussianOffset.eval(xi, &[1.0, x0, w, 0.0]))
                    .collect();
                let (c, a) = linear_levels(&g, &y, &raw);
                (c, c + a)
            }
            None => {
                let mean = y.iter().sum::<f64>() / y.len() as f64;
                (mean, mean)
            }
        };
        let mut lv = ChannelLevels { plateau, center };
        if lv.plateau < 0.0 {
            warnings.push(format!("{ch} plateau {:.3} clamped to 0", lv.plateau));
            lv.plateau = 0.0;
        }
        if lv.center < 0.0 {
            warnings.push(format!("{ch} zero-delay level {:.3} clamped to 0", lv.center));
            lv.center = 0.0;
        }
        levels.insert(ch, lv);
    }

    let lv = |ch: CoincidenceChannel| levels[&ch];
    let (hh, vv) = (lv(CoincidenceChannel::HcHd), lv(CoincidenceChannel::VcVd));
    let (hv, vh) = (lv(CoincidenceChannel::HcVc), lv(CoincidenceChannel::VcHd));
    let phi_plateau = hh.plateau + vv.plateau;
    let psi_plateau = hv.plateau + vh.plateau;
    let s = phi_plateau + psi_plateau;
    if s <= 0.0 {
        return Err(Error::Degenerate("all plateaus are empty".into()));
    }
    let w_psi = psi_plateau / s;
    let w_phi = phi_plateau / s;

    let (mu, measured) = if w_phi >= MIN_RATIO_BASE && shape.is_some() {
        let depth = (phi_plateau - hh.center - vv.center) / phi_plateau;
        if !(0.0..=1.0).contains(&depth) {
            warnings.push(format!("dip depth {depth:.4} clamped to [0, 1]"));
        }
        (depth.clamp(0.0, 1.0), true)
    } else {
        (1.0, false)
    };
    let zero_delay_residual =
        (phi_plateau > 0.0 && shape.is_some()).then(|| (hh.center + vv.center) / phi_plateau);

    let psi_asym = if mu >= MIN_RATIO_BASE {
        (hv.center - vh.center) / (s * mu)
    } else {
        warnings.push("overlap too small to split Ψ+ from Ψ−".into());
        0.0
    };
    let psi_asym = if psi_asym.abs() > w_psi {
        warnings.push(format!("Ψ asymmetry {psi_asym:.4} exceeds Ψ weight; clamped"));
        psi_asym.signum() * w_psi
    } else {
        psi_asym
    };

    let a = subtract_accidentals(hwp45, CoincidenceChannel::HcVc, acq);
    let b = subtract_accidentals(hwp45, CoincidenceChannel::VcHd, acq);
    let phi_contrast = if a + b > 0.0 && mu >= MIN_RATIO_BASE {
        let r = (a - b) / (mu * (a + b));
        if r.abs() > 1.0 {
            warnings.push(format!("HWP contrast {r:.4} clamped to [-1, 1]"));
        }
        r.clamp(-1.0, 1.0)
    } else {
        if w_phi >= MIN_RATIO_BASE {
            warnings.push("HWP 45° point has no usable Hc:Vc / Vc:Hd counts".into());
        }
        0.0
    };

    let mut raw = [
        w_phi * (1.0 + phi_contrast) / 2.0,
        w_phi * (1.0 - phi_contrast) / 2.0,
        (w_psi + psi_asym) / 2.0,
        (w_psi - psi_asym) / 2.0,
    ];
    for v in raw.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
        *v = v.min(1.0);
    }

    Ok(BellFractionEstimate {
        fractions: BellFractions::from_array(raw),
        method: BellMethod {
            description: "levels from a common-shape linear fit per channel; \
                          Ψ weight = (Hc:Vc + Vc:Hd plateaus)/(four-plateau sum); \
                          Ψ± split from the zero-delay Hc:Vc − Vc:Hd asymmetry; \
                          Φ± split from the HWP 45° Hc:Vc − Vc:Hd asymmetry"
                .into(),
            shape_channel: shape.map(|s| s.0),
            shape_center: shape.map_or(f64::NAN, |s| s.1),
            shape_width: shape.map_or(f64::NAN, |s| s.2),
            levels,
            plateau_sum: s,
            mode_overlap: mu,
            mode_overlap_measured: measured,
            psi_asymmetry: psi_asym,
            phi_contrast,
            mean_accidentals: mean_acc,
        },
        zero_delay_residual,
        warnings,
    })
}

/// Offset and saturating amplitude of the sin²θ response of one channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationCalibration {
    pub channel: CoincidenceChannel,
    pub offset: f64,
    pub offset_uncertainty: f64,
    pub amplitude: f64,
    pub amplitude_uncertainty: f64,
}

impl RotationCalibration {
    /// From a rotation-mode sin² fit of `channel`. The fitted phase offset is
    /// taken to be the zero of rotation.
    pub fn from_fit(fit: &FitResult, channel: CoincidenceChannel) -> Result<Self> {
        if fit.value("k") != Some(1.0) {
            return Err(Error::InvalidParameter(
                "calibration needs a rotation-mode sin² fit".into(),
            ));
        }
        let (a, sa) = fitted(fit, "A")?;
        let (c, sc) = fitted(fit, "C")?;
        Ok(RotationCalibration {
            channel,
            offset: c,
            offset_uncertainty: if sc.is_finite() { sc } else { 0.0 },
            amplitude: a,
            amplitude_uncertainty: if sa.is_finite() { sa } else { 0.0 },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationEstimate {
    /// rad, in [0, π/2]
    pub theta: f64,
    pub uncertainty: f64,
    /// The count fell outside the calibrated range and was clamped.
    pub clamped: bool,
}

/// θ = arcsin √((N − C)/A).
///
/// The uncertainty is the half-width of the θ interval spanned by u ± σᵤ
/// (u = (N − C)/A, clamped to [0, 1]); this equals first-order propagation
/// where arcsin √u is smooth and stays finite at θ = 0 and θ = 90°.
pub fn rotation_from_counts(
    counts: &ChannelCounts,
    cal: &RotationCalibration,
) -> Result<RotationEstimate> {
    rotation_from_level(counts.get(cal.channel) as f64, cal)
}

/// As [`rotation_from_counts`] for a bare count level.
pub fn rotation_from_level(n: f64, cal: &RotationCalibration) -> Result<RotationEstimate> {
    if cal.amplitude.is_nan() || cal.amplitude <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "calibration amplitude must be positive, got {}",
            cal.amplitude
        )));
    }
    let a = cal.amplitude;
    let u = (n - cal.offset) / a;
    let var_u = (n.max(1.0) + cal.offset_uncertainty.powi(2) + (u * cal.amplitude_uncertainty).powi(2))
        / (a * a);
    let su = var_u.sqrt();
    let theta_of = |u: f64| u.clamp(0.0, 1.0).sqrt().asin();
    let clamped = !(0.0..=1.0).contains(&u);
    Ok(RotationEstimate {
        theta: theta_of(u),
        uncertainty: 0.5 * (theta_of(u + su) - theta_of(u - su)),
        clamped,
    })
}

/// Sign of θ for a positive field. Count rates are even in θ, so the sign of
/// the rotation comes from this convention rather than from the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldSign {
    Positive,
    #[default]
    Negative,
}

impl FieldSign {
    pub fn signed(self, theta: f64, field: f64) -> f64 {
        let s = match self {
            FieldSign::Positive => 1.0,
            FieldSign::Negative => -1.0,
        };
        if field == 0.0 {
            0.0
        } else {
            s * field.signum() * theta
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerdetPoint {
    /// T
    pub field: f64,
    /// rad, signed
    pub theta: f64,
    pub uncertainty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdetEstimate {
    /// rad·T⁻¹·m⁻¹
    pub verdet: Estimate,
    pub fit: FitResult,
    pub points: Vec<VerdetPoint>,
    pub length: f64,
}

/// Linear fit of θ(B) = V·L·B (+ intercept when requested); V = slope/L.
/// Uses 1/σ² weights when every point has a positive finite uncertainty.
pub fn fit_verdet(points: &[VerdetPoint], length: f64, intercept: bool) -> Result<VerdetEstimate> {
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "sample length must be positive, got {length}"
        )));
    }
    if points.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: points.len(),
        });
    }
    let b: Vec<f64> = points.iter().map(|p| p.field).collect();
    if b.iter().all(|&x| x == b[0]) {
        return Err(Error::Degenerate("all field values coincide".into()));
    }
    let theta: Vec<f64> = points.iter().map(|p| p.theta).collect();
    let sigma: Vec<f64> = points.iter().map(|p| p.uncertainty).collect();
    let weighted = sigma.iter().all(|s| s.is_finite() && *s > 0.0);
    let fit = fit_linear(&b, &theta, weighted.then_some(sigma.as_slice()), intercept)?;
    let (slope, ss) = fitted(&fit, "slope")?;
    Ok(VerdetEstimate {
        verdet: Estimate {
            value: slope / length,
            uncertainty: ss / length,
        },
        fit,
        points: points.to_vec(),
        length,
    })
}

/// Field series (one delay scan per field) → signed rotations at the delay
/// row nearest zero → Verdet constant.
pub fn verdet_from_field_scans(
    scans: &[ScanResult],
    cal: &RotationCalibration,
    length: f64,
    sign: FieldSign,
    intercept: bool,
) -> Result<VerdetEstimate> {
    let mut points = Vec::with_capacity(scans.len());
    for scan in scans {
        let field = *scan
            .context
            .get("field_T")
            .ok_or_else(|| Error::InvalidParameter("scan has no field_T context".into()))?;
        let row = scan.nearest_row(0.0).ok_or(Error::EmptyScan)?;
        let rot = rotation_from_counts(&row.counts, cal)?;
        points.push(VerdetPoint {
            field,
            theta: sign.signed(rot.theta, field),
            uncertainty: rot.uncertainty,
        });
    }
    fit_verdet(&points, length, intercept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::fit::FitParameter;

    fn gaussian_fit(a: f64, c: f64, w: f64) -> FitResult {
        let p = |name: &str, value: f64| FitParameter {
            name: name.into(),
            value,
            uncertainty: 1.0,
        };
        FitResult {
            model: "gaussian_offset".into(),
            parameters: vec![p("A", a), p("x0", 0.0), p("w", w), p("C", c)],
            covariance: (0..4)
                .map(|i| (0..4).map(|k| if i == k { 1.0 } else { 0.0 }).collect())
                .collect(),
            residual_sum_squares: 0.0,
            points: 10,
            converged: true,
            iterations: 1,
            gradient_measure: 0.0,
        }
    }

    #[test]
    fn visibility_full_suppression() {
        let v = visibility(&gaussian_fit(-5806.0, 5806.0, 59.0)).unwrap();
        assert!((v.value - 1.0).abs() < 1e-15);
        assert!(v.uncertainty > 0.0);
        assert!(visibility(&gaussian_fit(-1.0, 0.0, 59.0)).is_err());
    }

    #[test]
    fn coherence_time_values() {
        let t = |w| coherence_from_fit(&gaussian_fit(-1.0, 1.0, w)).unwrap().time.value;
        assert!((t(59.0) - 196.8).abs() < 0.05);
        assert!((t(20.0) - 66.7).abs() < 0.05);
        assert_eq!(t(0.0), 0.0);
    }

    fn cal() -> RotationCalibration {
        RotationCalibration {
            channel: CoincidenceChannel::VcHd,
            offset: 100.0,
            offset_uncertainty: 0.0,
            amplitude: 1000.0,
            amplitude_uncertainty: 0.0,
        }
    }

    #[test]
    fn rotation_inversion() {
        let deg = |n: f64| rotation_from_level(n, &cal()).unwrap().theta.to_degrees();
        assert!(deg(100.0).abs() < 1e-12);
        assert!((deg(1100.0) - 90.0).abs() < 1e-12);
        assert!((deg(600.0) - 45.0).abs() < 1e-12);
        let over = rotation_from_level(1500.0, &cal()).unwrap();
        assert!(over.clamped);
        assert!(over.uncertainty.is_finite());
        let bad = RotationCalibration {
            amplitude: 0.0,
            ..cal()
        };
        assert!(rotation_from_level(500.0, &bad).is_err());
    }

    #[test]
    fn rotation_uncertainty_is_first_order_midrange() {
        let r = rotation_from_level(600.0, &cal()).unwrap();
        // dθ/du = 1/(2√(u(1−u))) = 1 at u = 1/2; σᵤ = √600/1000
        let first_order = 600f64.sqrt() / 1000.0;
        assert!((r.uncertainty - first_order).abs() < 1e-3 * first_order);
    }

    #[test]
    fn verdet_exact_line() {
        let points: Vec<VerdetPoint> = [-0.3, -0.1, 0.2, 0.4]
            .iter()
            .map(|&b| VerdetPoint {
                field: b,
                theta: -71.0 * 0.01 * b,
                uncertainty: 0.0,
            })
            .collect();
        let v = fit_verdet(&points, 0.01, true).unwrap();
        assert!((v.verdet.value + 71.0).abs() < 1e-10);
        assert!(fit_verdet(&points[..1], 0.01, true).is_err());
        let same: Vec<_> = points.iter().map(|p| VerdetPoint { field: 0.2, ..*p }).collect();
        assert!(fit_verdet(&same, 0.01, false).is_err());
    }

    #[test]
    fn field_sign_convention() {
        assert_eq!(FieldSign::Negative.signed(0.2, 0.5), -0.2);
        assert_eq!(FieldSign::Negative.signed(0.2, -0.5), 0.2);
        assert_eq!(FieldSign::Positive.signed(0.2, -0.5), -0.2);
        assert_eq!(FieldSign::Positive.signed(0.2, 0.0), 0.0);
    }
}
