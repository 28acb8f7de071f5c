//! Distribution models for adjacency-factor frequencies, least-squares
//! fitting, and the mean normalized deviation (MND) goodness-of-fit metric.
//!
//! Two models are provided:
//!
//! * the S* model `c * (b * x^-a)^(log x)`, fitted on `x >= 1`;
//! * the exponentially modified Gaussian (EMG) for T* distributions,
//!   `lambda/2 * exp(lambda/2 * (2 mu + lambda sigma^2 - 2x)) * erfc((mu + lambda sigma^2 - x) / (sqrt(2) sigma))`.

pub mod simplex;
pub mod special;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::census::DistributionSeries;
use simplex::{nelder_mead, Bounds, SimplexOptions};
pub use special::{erf, erfc, erfcx};

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("need at least {needed} support points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
}

/// Base of the logarithm in the S* model exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LogBase {
    #[default]
    #[serde(rename = "10")]
    Ten,
    #[serde(rename = "e")]
    E,
}

impl LogBase {
    pub fn log(&self, x: f64) -> f64 {
        match self {
            LogBase::Ten => x.log10(),
            LogBase::E => x.ln(),
        }
    }
}

impl fmt::Display for LogBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogBase::Ten => f.write_str("10"),
            LogBase::E => f.write_str("e"),
        }
    }
}

impl FromStr for LogBase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "10" => Ok(LogBase::Ten),
            "e" | "E" => Ok(LogBase::E),
            other => Err(format!("unknown log base {other:?} (expected 10 or e)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    SModel,
    Emg,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Model::SModel => f.write_str("s_model"),
            Model::Emg => f.write_str("emg"),
        }
    }
}

impl FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "s" | "s_model" => Ok(Model::SModel),
            "emg" | "t" => Ok(Model::Emg),
            other => Err(format!("unknown model {other:?} (expected s_model or emg)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", content = "params", rename_all = "snake_case")]
pub enum ModelParams {
    SModel { a: f64, b: f64, c: f64 },
    Emg { lambda: f64, mu: f64, sigma: f64 },
}

impl ModelParams {
    pub fn model(&self) -> Model {
        match self {
            ModelParams::SModel { .. } => Model::SModel,
            ModelParams::Emg { .. } => Model::Emg,
        }
    }

    pub fn values(&self) -> [f64; 3] {
        match *self {
            ModelParams::SModel { a, b, c } => [a, b, c],
            ModelParams::Emg { lambda, mu, sigma } => [lambda, mu, sigma],
        }
    }

    pub fn names(model: Model) -> [&'static str; 3] {
        match model {
            Model::SModel => ["a", "b", "c"],
            Model::Emg => ["lambda", "mu", "sigma"],
        }
    }

    pub fn from_values(model: Model, v: [f64; 3]) -> Self {
        match model {
            Model::SModel => ModelParams::SModel {
                a: v[0],
                b: v[1],
                c: v[2],
            },
            Model::Emg => ModelParams::Emg {
                lambda: v[0],
                mu: v[1],
                sigma: v[2],
            },
        }
    }

    pub fn eval(&self, x: f64, log_base: LogBase) -> Result<f64, FitError> {
        match *self {
            ModelParams::SModel { a, b, c } => eval_s_model(x, a, b, c, log_base),
            ModelParams::Emg { lambda, mu, sigma } => eval_emg(x, lambda, mu, sigma),
        }
    }
}

/// `c * (b * x^-a)^(log x)`, computed as `c * exp(log(x) * (ln b - a ln x))`.
pub fn eval_s_model(x: f64, a: f64, b: f64, c: f64, log_base: LogBase) -> Result<f64, FitError> {
    if !(x > 0.0) {
        return Err(FitError::Domain(format!("S model needs x > 0, got {x}")));
    }
    if !(b > 0.0) {
        return Err(FitError::Domain(format!("S model needs b > 0, got {b}")));
    }
    Ok(s_model_unchecked(x, a, b, c, log_base))
}

fn s_model_unchecked(x: f64, a: f64, b: f64, c: f64, log_base: LogBase) -> f64 {
    let exponent = log_base.log(x);
    if exponent == 0.0 {
        return c;
    }
    c * (exponent * (b.ln() - a * x.ln())).exp()
}

/// Exponentially modified Gaussian density. `sigma = 0` uses the exponential
/// limit `lambda * exp(-lambda (x - mu))` for `x >= mu`, else 0.
pub fn eval_emg(x: f64, lambda: f64, mu: f64, sigma: f64) -> Result<f64, FitError> {
    if !(lambda > 0.0) {
        return Err(FitError::Domain(format!("EMG needs lambda > 0, got {lambda}")));
    }
    if !(sigma >= 0.0) {
        return Err(FitError::Domain(format!("EMG needs sigma >= 0, got {sigma}")));
    }
    Ok(emg_unchecked(x, lambda, mu, sigma))
}

fn emg_unchecked(x: f64, lambda: f64, mu: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return if x >= mu {
            lambda * (-lambda * (x - mu)).exp()
        } else {
            0.0
        };
    }
    let z = (mu + lambda * sigma * sigma - x) / (std::f64::consts::SQRT_2 * sigma);
    if z <= 0.0 {
        let exponent = 0.5 * lambda * (2.0 * mu + lambda * sigma * sigma - 2.0 * x);
        0.5 * lambda * exponent.exp() * erfc(z)
    } else {
        // exp(A) erfc(z) = exp(A - z^2) erfcx(z) with A - z^2 = -(x - mu)^2 / (2 sigma^2)
        let d = x - mu;
        0.5 * lambda * (-(d * d) / (2.0 * sigma * sigma)).exp() * erfcx(z)
    }
}

/// Observed curve `(x, y)` on a common support.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Samples {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Samples {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        assert_eq!(x.len(), y.len(), "x and y lengths differ");
        Samples { x, y }
    }

    /// Samples a model on the given support.
    pub fn from_model(params: &ModelParams, xs: &[f64], log_base: LogBase) -> Result<Self, FitError> {
        let y = xs
            .iter()
            .map(|&x| params.eval(x, log_base))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Samples::new(xs.to_vec(), y))
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn filter(&self, keep: impl Fn(f64, f64) -> bool) -> Samples {
        let (x, y) = self
            .x
            .iter()
            .zip(&self.y)
            .filter(|(&x, &y)| keep(x, y))
            .map(|(&x, &y)| (x, y))
            .unzip();
        Samples { x, y }
    }

    /// The points a model is fitted and scored on: positive `y`, and `x >= 1`
    /// for the S model.
    pub fn restrict_for(&self, model: Model) -> Samples {
        match model {
            Model::SModel => self.filter(|x, y| x >= 1.0 && y > 0.0),
            Model::Emg => self.filter(|_, y| y > 0.0),
        }
    }
}

impl From<&DistributionSeries> for Samples {
    fn from(series: &DistributionSeries) -> Self {
        Samples::new(
            series.support.iter().map(|&s| s as f64).collect(),
            series.freq.clone(),
        )
    }
}

/// A curve compared against observations by [`mnd`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Predictor {
    Model { params: ModelParams, log_base: LogBase },
    Constant(f64),
}

impl Predictor {
    pub fn eval(&self, x: f64) -> Result<f64, FitError> {
        match self {
            Predictor::Model { params, log_base } => params.eval(x, *log_base),
            Predictor::Constant(c) => Ok(*c),
        }
    }
}

/// Mean over points with positive observed value of `|f'(x) - f(x)| / f(x)`.
pub fn mnd(observed: &Samples, predictor: &Predictor) -> Result<f64, FitError> {
    let predicted = observed
        .x
        .iter()
        .map(|&x| predictor.eval(x))
        .collect::<Result<Vec<_>, _>>()?;
    mnd_values(&observed.y, &predicted)
}

/// MND of paired values; points where `observed <= 0` are skipped.
pub fn mnd_values(observed: &[f64], predicted: &[f64]) -> Result<f64, FitError> {
    assert_eq!(observed.len(), predicted.len(), "curves differ in length");
    let (total, count) = observed
        .iter()
        .zip(predicted)
        .filter(|(&f, _)| f > 0.0)
        .fold((0.0, 0usize), |(sum, n), (&f, &g)| (sum + (g - f).abs() / f, n + 1));
    if count == 0 {
        return Err(FitError::Domain(
            "MND needs at least one point with positive frequency".into(),
        ));
    }
    Ok(total / count as f64)
}

/// Flat baseline `y = c` placed on the long tail: `c` is the geometric mean
/// of the positive values at `x >=` the median support value, falling back
/// to the whole support. Returns `c` and the MND of the baseline.
pub fn reference_constant(observed: &Samples) -> Result<(f64, f64), FitError> {
    let positive = observed.filter(|_, y| y > 0.0);
    if positive.is_empty() {
        return Err(FitError::Domain("reference needs a nonempty series".into()));
    }
    let mut xs = positive.x.clone();
    xs.sort_by(f64::total_cmp);
    let mid = xs.len() / 2;
    let median = if xs.len() % 2 == 1 {
        xs[mid]
    } else {
        0.5 * (xs[mid - 1] + xs[mid])
    };
    let mut tail = positive.filter(|x, _| x >= median);
    if tail.is_empty() {
        tail = positive.clone();
    }
    let log_mean = tail.y.iter().map(|y| y.ln()).sum::<f64>() / tail.len() as f64;
    let c = log_mean.exp();
    let score = mnd(&positive, &Predictor::Constant(c))?;
    Ok((c, score))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub log_base: LogBase,
    /// Quasi-random starting points for the simplex search.
    pub starts: usize,
    /// Extra simplex restarts from the incumbent per start.
    pub polish_rounds: usize,
    pub simplex: SimplexOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            log_base: LogBase::Ten,
            starts: 16,
            polish_rounds: 4,
            simplex: SimplexOptions::default(),
        }
    }
}

/// Minimum number of support points a fit accepts.
pub const MIN_FIT_POINTS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    #[serde(flatten)]
    pub params: ModelParams,
    pub sse: f64,
    pub mnd: f64,
    pub support_min: f64,
    pub support_max: f64,
    pub points: usize,
    pub converged: bool,
    pub restarts: usize,
    pub log_base: LogBase,
}

impl FitResult {
    pub fn predictor(&self) -> Predictor {
        Predictor::Model {
            params: self.params,
            log_base: self.log_base,
        }
    }

    /// `x,model` rows over the integer grid spanning the fitted support.
    pub fn write_curve_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x,model")?;
        let lo = self.support_min.ceil() as i64;
        let hi = self.support_max.floor() as i64;
        for x in lo..=hi {
            let y = self.params.eval(x as f64, self.log_base).unwrap_or(f64::NAN);
            writeln!(out, "{x},{y:?}")?;
        }
        out.flush()
    }
}

fn parameter_bounds(model: Model, data: &Samples) -> [Bounds; 3] {
    let x_max = data.x.iter().copied().fold(0.0f64, f64::max).max(1.0);
    match model {
        Model::SModel => [
            Bounds::new(0.0, 3.0),
            Bounds::new(1e-9, 2.0),
            Bounds::new(1e-12, 1.0),
        ],
        Model::Emg => [
            Bounds::new(1e-9, 5.0),
            Bounds::new(0.0, x_max),
            Bounds::new(0.0, x_max),
        ],
    }
}

/// Element `index` of the Halton sequence in `base`, in (0, 1).
fn halton(mut index: usize, base: usize) -> f64 {
    let mut result = 0.0;
    let mut f = 1.0 / base as f64;
    while index > 0 {
        result += f * (index % base) as f64;
        index /= base;
        f /= base as f64;
    }
    result
}

fn sse(model: Model, v: &[f64], data: &Samples, log_base: LogBase) -> f64 {
    data.x
        .iter()
        .zip(&data.y)
        .map(|(&x, &y)| {
            let fx = match model {
                Model::SModel => s_model_unchecked(x, v[0], v[1], v[2], log_base),
                Model::Emg => emg_unchecked(x, v[0], v[1], v[2]),
            };
            let r = fx - y;
            r * r
        })
        .sum()
}

struct StartOutcome {
    x: Vec<f64>,
    value: f64,
    converged: bool,
}

/// Least-squares fit of `model` to the observations via multi-start bounded
/// Nelder-Mead. Starts run in parallel; the best objective wins, ties going
/// to the lower start index, so the result is deterministic.
pub fn fit(model: Model, observed: &Samples, opts: &FitOptions) -> Result<FitResult, FitError> {
    let data = observed.restrict_for(model);
    if data.len() < MIN_FIT_POINTS {
        return Err(FitError::TooFewPoints {
            needed: MIN_FIT_POINTS,
            got: data.len(),
        });
    }
    let bounds = parameter_bounds(model, &data);
    let steps: Vec<f64> = bounds.iter().map(|b| 0.1 * b.width()).collect();
    let objective = |v: &[f64]| sse(model, v, &data, opts.log_base);

    let outcomes: Vec<StartOutcome> = (0..opts.starts.max(1))
        .into_par_iter()
        .map(|i| {
            let start: Vec<f64> = bounds
                .iter()
                .zip([2, 3, 5])
                .map(|(b, base)| b.lower + halton(i + 1, base) * b.width())
                .collect();
            let mut best = nelder_mead(objective, &start, &steps, &bounds, &opts.simplex);
            let mut scale = 0.1;
            for _ in 0..opts.polish_rounds {
                let local: Vec<f64> = best
                    .x
                    .iter()
                    .zip(&bounds)
                    .map(|(&x, b)| (scale * x.abs()).max(1e-6 * b.width()))
                    .collect();
                let next = nelder_mead(objective, &best.x, &local, &bounds, &opts.simplex);
                let improved = next.value < best.value;
                if improved {
                    best = next;
                }
                if !improved || best.value == 0.0 {
                    break;
                }
                scale *= 0.5;
            }
            StartOutcome {
                x: best.x,
                value: best.value,
                converged: best.converged,
            }
        })
        .collect();

    let (_, best) = outcomes
        .iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.value.total_cmp(&b.value).then(ia.cmp(ib)))
        .expect("at least one start");
    let params = ModelParams::from_values(model, [best.x[0], best.x[1], best.x[2]]);
    let predictor = Predictor::Model {
        params,
        log_base: opts.log_base,
    };
    let support_min = data.x.iter().copied().fold(f64::INFINITY, f64::min);
    let support_max = data.x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(FitResult {
        params,
        sse: best.value,
        mnd: mnd(&data, &predictor)?,
        support_min,
        support_max,
        points: data.len(),
        converged: best.converged,
        restarts: outcomes.len(),
        log_base: opts.log_base,
    })
}

/// Fits a normalised frequency series.
pub fn fit_series(
    model: Model,
    series: &DistributionSeries,
    opts: &FitOptions,
) -> Result<FitResult, FitError> {
    fit(model, &Samples::from(series), opts)
}
