//! Weighted nonlinear least squares for the three model families used on scan
//! data: Gaussian plus offset, sin² plus offset, and a straight line.

use std::f64::consts::{LN_2, PI};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A model `y = f(x; p)` with an analytic Jacobian.
pub trait Model {
    fn name(&self) -> &'static str;
    fn param_names(&self) -> &'static [&'static str];
    fn eval(&self, x: f64, p: &[f64]) -> f64;
    /// Writes ∂f/∂pᵢ into `out`.
    fn gradient(&self, x: f64, p: &[f64], out: &mut [f64]);

    fn n_params(&self) -> usize {
        self.param_names().len()
    }
}

const FOUR_LN2: f64 = 4.0 * LN_2;

/// `C + A·exp(−4 ln2 (x−x₀)²/w²)`, parameters `(A, x0, w, C)`; `w` is the FWHM.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GaussianOffset;

impl Model for GaussianOffset {
    fn name(&self) -> &'static str {
        "gaussian_offset"
    }

    fn param_names(&self) -> &'static [&'static str] {
        &["A", "x0", "w", "C"]
    }

    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        let u = x - p[1];
        p[3] + p[0] * (-FOUR_LN2 * u * u / (p[2] * p[2])).exp()
    }

    fn gradient(&self, x: f64, p: &[f64], out: &mut [f64]) {
        let (a, w) = (p[0], p[2]);
        let u = x - p[1];
        let g = (-FOUR_LN2 * u * u / (w * w)).exp();
        out[0] = g;
        out[1] = a * g * 2.0 * FOUR_LN2 * u / (w * w);
        out[2] = a * g * 2.0 * FOUR_LN2 * u * u / (w * w * w);
        out[3] = 1.0;
    }
}

/// Which sin² law an angle scan follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sin2Mode {
    /// `sin²(2θ)`, a half-wave plate at angle θ.
    Hwp2Theta,
    /// `sin²θ`, a rotation of the polarization by θ.
    RotationTheta,
}

impl Sin2Mode {
    pub fn k(self) -> f64 {
        match self {
            Sin2Mode::Hwp2Theta => 2.0,
            Sin2Mode::RotationTheta => 1.0,
        }
    }
}

/// `C + A·sin²(k(θ−θ₀))` with θ in degrees, parameters `(A, theta0, C)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sin2Offset {
    pub k: f64,
}

impl Sin2Offset {
    pub fn new(mode: Sin2Mode) -> Self {
        Sin2Offset { k: mode.k() }
    }

    fn phase(&self, theta: f64, theta0: f64) -> f64 {
        self.k * (theta - theta0) * PI / 180.0
    }
}

impl Model for Sin2Offset {
    fn name(&self) -> &'static str {
        "sin2_offset"
    }

    fn param_names(&self) -> &'static [&'static str] {
        &["A", "theta0", "C"]
    }

    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        let s = self.phase(x, p[1]).sin();
        p[2] + p[0] * s * s
    }

    fn gradient(&self, x: f64, p: &[f64], out: &mut [f64]) {
        let phi = self.phase(x, p[1]);
        let s = phi.sin();
        out[0] = s * s;
        out[1] = -p[0] * (2.0 * phi).sin() * self.k * PI / 180.0;
        out[2] = 1.0;
    }
}

/// `slope·x + intercept`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Linear;

impl Model for Linear {
    fn name(&self) -> &'static str {
        "linear"
    }

    fn param_names(&self) -> &'static [&'static str] {
        &["slope", "intercept"]
    }

    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        p[0] * x + p[1]
    }

    fn gradient(&self, x: f64, _p: &[f64], out: &mut [f64]) {
        out[0] = x;
        out[1] = 1.0;
    }
}

/// Non-finite values (an unidentifiable parameter) travel through JSON as `null`.
mod nullable_matrix {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<Option<f64>>> = m
            .iter()
            .map(|r| r.iter().map(|v| v.is_finite().then_some(*v)).collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
        let rows = Vec::<Vec<Option<f64>>>::deserialize(d)?;
        Ok(rows
            .into_iter()
            .map(|r| r.into_iter().map(|v| v.unwrap_or(f64::INFINITY)).collect())
            .collect())
    }
}

mod nullable_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitParameter {
    pub name: String,
    pub value: f64,
    /// 1σ; infinite when the data do not constrain the parameter.
    #[serde(with = "nullable_f64")]
    pub uncertainty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: String,
    pub parameters: Vec<FitParameter>,
    /// Covariance of the fitted (non-fixed) parameters, in parameter order.
    #[serde(with = "nullable_matrix")]
    pub covariance: Vec<Vec<f64>>,
    /// Weighted sum of squared residuals, Σ((y − f)/σ)².
    pub residual_sum_squares: f64,
    pub points: usize,
    pub converged: bool,
    pub iterations: usize,
    /// Cosine between the weighted residual and the Jacobian column space at the
    /// solution; zero at an exact stationary point.
    pub gradient_measure: f64,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<&FitParameter> {
        self.parameters.iter().find(|p| p.name == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.get(name).map(|p| p.value)
    }

    pub fn uncertainty(&self, name: &str) -> Option<f64> {
        self.get(name).map(|p| p.uncertainty)
    }

    /// Covariance between two named fitted parameters.
    pub fn covariance_of(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.parameters.iter().position(|p| p.name == a)?;
        let k = self.parameters.iter().position(|p| p.name == b)?;
        self.covariance.get(i)?.get(k).copied()
    }

    pub fn values(&self) -> Vec<f64> {
        self.parameters.iter().map(|p| p.value).collect()
    }

    pub fn dof(&self) -> usize {
        self.points.saturating_sub(self.covariance.len())
    }

    pub fn reduced_chi_squared(&self) -> f64 {
        match self.dof() {
            0 => f64::NAN,
            n => self.residual_sum_squares / n as f64,
        }
    }

    /// Evaluates the fitted curve, if the model is one of the known families.
    pub fn eval(&self, x: f64) -> Option<f64> {
        let p = self.values();
        match self.model.as_str() {
            "gaussian_offset" => Some(GaussianOffset.eval(x, &p)),
            "sin2_offset" => {
                let k = self.value("k")?;
                Some(Sin2Offset { k }.eval(x, &p))
            }
            "linear" => Some(Linear.eval(x, &p)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Convergence threshold on [`FitResult::gradient_measure`].
    pub gradient_tolerance: f64,
    pub initial_lambda: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 500,
            gradient_tolerance: 1e-7,
            initial_lambda: 1e-3,
        }
    }
}

/// σᵢ = √max(yᵢ, 1).
pub fn poisson_sigma(y: &[f64]) -> Vec<f64> {
    y.iter().map(|&v| v.max(1.0).sqrt()).collect()
}

struct Problem<'a, M: Model> {
    model: &'a M,
    x: &'a [f64],
    y: &'a [f64],
    /// 1/σ
    inv_sigma: Vec<f64>,
}

impl<M: Model> Problem<'_, M> {
    fn residuals(&self, p: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.x.len(),
            self.x
                .iter()
                .zip(self.y)
                .zip(&self.inv_sigma)
                .map(|((&x, &y), &s)| (y - self.model.eval(x, p)) * s),
        )
    }

    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let np = self.model.n_params();
        let mut j = DMatrix::zeros(self.x.len(), np);
        let mut row = vec![0.0; np];
        for (i, (&x, &s)) in self.x.iter().zip(&self.inv_sigma).enumerate() {
            self.model.gradient(x, p, &mut row);
            for (k, g) in row.iter().enumerate() {
                j[(i, k)] = g * s;
            }
        }
        j
    }

    fn scale(&self) -> f64 {
        self.y
            .iter()
            .zip(&self.inv_sigma)
            .map(|(y, s)| (y * s).powi(2))
            .sum()
    }
}

fn gradient_measure(j: &DMatrix<f64>, r: &DVector<f64>, scale: f64) -> f64 {
    let rr = r.norm_squared();
    if rr <= 1e-24 * scale.max(1.0) {
        return 0.0;
    }
    let g = j.transpose() * r;
    let jn = j.norm();
    if jn == 0.0 {
        return 0.0;
    }
    g.norm() / (jn * rr.sqrt())
}

/// Inverse of the normal matrix restricted to the parameters it constrains.
fn covariance(normal: &DMatrix<f64>) -> DMatrix<f64> {
    let n = normal.nrows();
    let max_diag = (0..n).map(|i| normal[(i, i)]).fold(0.0, f64::max);
    let active: Vec<usize> = (0..n)
        .filter(|&i| normal[(i, i)] > 1e-14 * max_diag && normal[(i, i)] > 0.0)
        .collect();
    let mut cov = DMatrix::from_element(n, n, 0.0);
    for i in 0..n {
        cov[(i, i)] = f64::INFINITY;
    }
    let sub = DMatrix::from_fn(active.len(), active.len(), |a, b| normal[(active[a], active[b])]);
    let inv = sub
        .clone()
        .cholesky()
        .map(|c| c.inverse())
        .or_else(|| sub.try_inverse());
    if let Some(inv) = inv {
        for (a, &i) in active.iter().enumerate() {
            for (b, &k) in active.iter().enumerate() {
                cov[(i, k)] = inv[(a, b)];
            }
        }
    }
    cov
}

fn check_data(x: &[f64], y: &[f64], sigma: &[f64], min_points: usize) -> Result<()> {
    if x.len() != y.len() || x.len() != sigma.len() {
        return Err(Error::InvalidParameter(format!(
            "length mismatch: {} x, {} y, {} sigma",
            x.len(),
            y.len(),
            sigma.len()
        )));
    }
    if x.len() < min_points {
        return Err(Error::InsufficientData {
            needed: min_points,
            got: x.len(),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("data must be finite".into()));
    }
    if sigma.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::InvalidParameter("sigma must be positive and finite".into()));
    }
    Ok(())
}

fn finish<M: Model>(
    prob: &Problem<M>,
    p: &[f64],
    iterations: usize,
    opts: &FitOptions,
    extra: &[(&str, f64)],
) -> FitResult {
    let j = prob.jacobian(p);
    let r = prob.residuals(p);
    let gm = gradient_measure(&j, &r, prob.scale());
    let cov = covariance(&(j.transpose() * &j));
    let mut parameters: Vec<FitParameter> = prob
        .model
        .param_names()
        .iter()
        .enumerate()
        .map(|(i, n)| FitParameter {
            name: n.to_string(),
            value: p[i],
            uncertainty: cov[(i, i)].max(0.0).sqrt(),
        })
        .collect();
    parameters.extend(extra.iter().map(|&(n, v)| FitParameter {
        name: n.to_string(),
        value: v,
        uncertainty: 0.0,
    }));
    let np = prob.model.n_params();
    FitResult {
        model: prob.model.name().to_string(),
        parameters,
        covariance: (0..np)
            .map(|i| (0..np).map(|k| cov[(i, k)]).collect())
            .collect(),
        residual_sum_squares: r.norm_squared(),
        points: prob.x.len(),
        converged: gm.is_finite() && gm < opts.gradient_tolerance,
        iterations,
        gradient_measure: gm,
    }
}

/// Levenberg–Marquardt from `p0`. Returns the final parameters and the
/// iteration count; never fails once the data are valid.
fn minimize<M: Model>(prob: &Problem<M>, p0: &[f64], opts: &FitOptions) -> (Vec<f64>, usize) {
    let np = p0.len();
    let mut p = p0.to_vec();
    let mut r = prob.residuals(&p);
    let mut chi2 = r.norm_squared();
    let mut lambda = opts.initial_lambda;
    let scale = prob.scale();
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let j = prob.jacobian(&p);
        if gradient_measure(&j, &r, scale) < opts.gradient_tolerance * 1e-3 {
            break;
        }
        let jt = j.transpose();
        let normal = &jt * &j;
        let g = &jt * &r;
        let max_diag = (0..np).map(|i| normal[(i, i)]).fold(0.0, f64::max);
        let floor = 1e-12 * max_diag.max(1e-300);

        let mut accepted = false;
        while lambda < 1e16 {
            let mut m = normal.clone();
            for i in 0..np {
                m[(i, i)] += lambda * normal[(i, i)].max(floor);
            }
            let Some(delta) = m.cholesky().map(|c| c.solve(&g)) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(delta.iter()).map(|(a, d)| a + d).collect();
            let r_new = prob.residuals(&trial);
            let chi2_new = r_new.norm_squared();
            if chi2_new.is_finite() && chi2_new <= chi2 {
                let small_step = delta
                    .iter()
                    .zip(&p)
                    .all(|(d, v)| d.abs() <= 1e-14 * (v.abs() + 1e-10));
                let tiny_gain = chi2 - chi2_new <= 1e-16 * chi2;
                p = trial;
                r = r_new;
                chi2 = chi2_new;
                lambda = (lambda * 0.1).max(1e-15);
                accepted = true;
                if small_step && tiny_gain {
                    return (p, iterations);
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    (p, iterations)
}

/// General weighted fit of `model` from the starting point `p0`.
pub fn fit_model<M: Model>(
    model: &M,
    x: &[f64],
    y: &[f64],
    sigma: &[f64],
    p0: &[f64],
    opts: &FitOptions,
) -> Result<FitResult> {
    check_data(x, y, sigma, model.n_params())?;
    if p0.len() != model.n_params() {
        return Err(Error::InvalidParameter(format!(
            "{} starting values for {} parameters",
            p0.len(),
            model.n_params()
        )));
    }
    let prob = Problem {
        model,
        x,
        y,
        inv_sigma: sigma.iter().map(|s| 1.0 / s).collect(),
    };
    let (p, it) = minimize(&prob, p0, opts);
    Ok(finish(&prob, &p, it, opts, &[]))
}

fn check_monotone(x: &[f64]) -> Result<()> {
    let up = x.windows(2).all(|w| w[0] < w[1]);
    let down = x.windows(2).all(|w| w[0] > w[1]);
    if up || down {
        Ok(())
    } else {
        Err(Error::NonMonotoneSettings)
    }
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Gaussian-plus-constant fit with Poisson weights.
pub fn fit_gaussian_offset(x: &[f64], y: &[f64]) -> Result<FitResult> {
    fit_gaussian_offset_with(x, y, &poisson_sigma(y), &FitOptions::default())
}

pub fn fit_gaussian_offset_with(
    x: &[f64],
    y: &[f64],
    sigma: &[f64],
    opts: &FitOptions,
) -> Result<FitResult> {
    check_data(x, y, sigma, 5)?;
    check_monotone(x)?;
    let c0 = median(y);
    let (i_ext, _) = y
        .iter()
        .enumerate()
        .map(|(i, v)| (i, (v - c0).abs()))
        .fold((0, -1.0), |acc, (i, d)| if d > acc.1 { (i, d) } else { acc });
    let a0 = y[i_ext] - c0;
    let span = (x[x.len() - 1] - x[0]).abs();
    let spacing = span / (x.len() - 1) as f64;
    // Second start from the number of points past half depth, which is far
    // better than span/4 when the dip is narrow compared to the scan.
    let above_half = y.iter().filter(|v| (*v - c0).abs() > 0.5 * a0.abs()).count();
    let w_half = (above_half as f64 * spacing).max(2.0 * spacing);

    let prob = Problem {
        model: &GaussianOffset,
        x,
        y,
        inv_sigma: sigma.iter().map(|s| 1.0 / s).collect(),
    };
    let mut best: Option<(Vec<f64>, usize, f64)> = None;
    let mut total_it = 0;
    for w0 in [span / 4.0, w_half] {
        let (p, it) = minimize(&prob, &[a0, x[i_ext], w0, c0], opts);
        total_it += it;
        let chi2 = prob.residuals(&p).norm_squared();
        if best.as_ref().is_none_or(|b| chi2 < b.2) {
            best = Some((p, it, chi2));
        }
    }
    let (mut p, _, _) = best.expect("two starts");
    p[2] = p[2].abs();
    Ok(finish(&prob, &p, total_it, opts, &[]))
}

/// Sin²-plus-constant fit of an angle scan (degrees) with Poisson weights.
///
/// The phase offset is reported in `[−45/k, 45/k)` degrees, flipping the sign
/// of `A` where needed, so `C` is always the value at `θ₀`. The result carries
/// the law's `k` as a fixed extra parameter.
pub fn fit_sin2_offset(theta_deg: &[f64], y: &[f64], mode: Sin2Mode) -> Result<FitResult> {
    fit_sin2_offset_with(theta_deg, y, &poisson_sigma(y), mode, &FitOptions::default())
}

pub fn fit_sin2_offset_with(
    theta_deg: &[f64],
    y: &[f64],
    sigma: &[f64],
    mode: Sin2Mode,
    opts: &FitOptions,
) -> Result<FitResult> {
    check_data(theta_deg, y, sigma, 4)?;
    let model = Sin2Offset::new(mode);
    let k = model.k;
    let w: Vec<f64> = sigma.iter().map(|s| 1.0 / (s * s)).collect();

    // Coarse grid over θ₀ with the linear (C, A) solved in closed form.
    let mut start = [0.0, 0.0, median(y)];
    let mut best = f64::INFINITY;
    let period = 180.0 / k;
    for step in 0..180 {
        let t0 = -period / 2.0 + period * step as f64 / 180.0;
        let s: Vec<f64> = theta_deg
            .iter()
            .map(|&t| model.phase(t, t0).sin().powi(2))
            .collect();
        let (mut sw, mut ss, mut sss, mut sy, mut ssy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..y.len() {
            sw += w[i];
            ss += w[i] * s[i];
            sss += w[i] * s[i] * s[i];
            sy += w[i] * y[i];
            ssy += w[i] * s[i] * y[i];
        }
        let det = sw * sss - ss * ss;
        let (c, a) = if det.abs() > 1e-12 * sw * sss.max(1e-300) {
            ((sss * sy - ss * ssy) / det, (sw * ssy - ss * sy) / det)
        } else {
            (sy / sw, 0.0)
        };
        let chi2: f64 = (0..y.len())
            .map(|i| w[i] * (y[i] - c - a * s[i]).powi(2))
            .sum();
        if chi2 < best {
            best = chi2;
            start = [a, t0, c];
        }
    }

    let prob = Problem {
        model: &model,
        x: theta_deg,
        y,
        inv_sigma: sigma.iter().map(|s| 1.0 / s).collect(),
    };
    let (mut p, it) = minimize(&prob, &start, opts);

    // θ₀ → θ₀ − 90/k maps A sin² to A − A sin², i.e. (A, C) → (−A, C + A).
    let quarter = 90.0 / k;
    let shifts = ((p[1] + quarter / 2.0) / quarter).floor();
    p[1] -= shifts * quarter;
    if (shifts as i64).rem_euclid(2) == 1 {
        p[2] += p[0];
        p[0] = -p[0];
    }
    if p[1] >= quarter / 2.0 {
        p[1] -= quarter;
        p[2] += p[0];
        p[0] = -p[0];
    }
    Ok(finish(&prob, &p, it, opts, &[("k", k)]))
}

/// Weighted straight-line fit in closed form. With `intercept = false` the line
/// passes through the origin. With `sigma = None` unit weights are used and the
/// uncertainties are scaled by the residual variance.
pub fn fit_linear(
    x: &[f64],
    y: &[f64],
    sigma: Option<&[f64]>,
    intercept: bool,
) -> Result<FitResult> {
    let ones = vec![1.0; x.len()];
    let s = sigma.unwrap_or(&ones);
    check_data(x, y, s, if intercept { 2 } else { 1 })?;
    let w: Vec<f64> = s.iter().map(|v| 1.0 / (v * v)).collect();
    let sw: f64 = w.iter().sum();
    let swx: f64 = w.iter().zip(x).map(|(w, x)| w * x).sum();
    let swy: f64 = w.iter().zip(y).map(|(w, y)| w * y).sum();
    let swxx: f64 = w.iter().zip(x).map(|(w, x)| w * x * x).sum();
    let swxy: f64 = w.iter().zip(x).zip(y).map(|((w, x), y)| w * x * y).sum();

    let (slope, icpt, var_s, var_i, cov_si) = if intercept {
        let det = sw * swxx - swx * swx;
        if det <= 1e-12 * sw * swxx {
            return Err(Error::Degenerate("all x values coincide".into()));
        }
        let slope = (sw * swxy - swx * swy) / det;
        let icpt = (swxx * swy - swx * swxy) / det;
        (slope, icpt, sw / det, swxx / det, -swx / det)
    } else {
        if swxx <= 0.0 {
            return Err(Error::Degenerate("all x values are zero".into()));
        }
        (swxy / swxx, 0.0, 1.0 / swxx, 0.0, 0.0)
    };

    let chi2: f64 = (0..x.len())
        .map(|i| w[i] * (y[i] - slope * x[i] - icpt).powi(2))
        .sum();
    let n_free = if intercept { 2 } else { 1 };
    let dof = x.len().saturating_sub(n_free);
    let inflate = if sigma.is_none() && dof > 0 {
        chi2 / dof as f64
    } else {
        1.0
    };
    let rss_scale = chi2.max(1e-300);
    let gm = if chi2 <= 1e-24 * swy.abs().max(1.0) {
        0.0
    } else {
        let g_s: f64 = (0..x.len())
            .map(|i| w[i] * x[i] * (y[i] - slope * x[i] - icpt))
            .sum();
        g_s.abs() / (swxx.sqrt() * rss_scale.sqrt())
    };
    Ok(FitResult {
        model: Linear.name().to_string(),
        parameters: vec![
            FitParameter {
                name: "slope".into(),
                value: slope,
                uncertainty: (var_s * inflate).sqrt(),
            },
            FitParameter {
                name: "intercept".into(),
                value: icpt,
                uncertainty: (var_i * inflate).sqrt(),
            },
        ],
        covariance: vec![
            vec![var_s * inflate, cov_si * inflate],
            vec![cov_si * inflate, var_i * inflate],
        ],
        residual_sum_squares: chi2,
        points: x.len(),
        converged: true,
        iterations: 1,
        gradient_measure: gm,
    })
}
