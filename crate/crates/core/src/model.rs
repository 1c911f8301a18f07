//! Cubic beta-power response model over interference intensity.
//!
//! Intensity `x` is a percentage in `[0, 100]`; the Cognitive Load Index is
//! `100 - x`. Coefficients are reported in percent units; the fit runs on
//! `u = x / 100`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optim::{nelder_mead_minimize, NelderMeadOptions};

/// Scale between reported percent units and the internal unit interval.
const X_SCALE: f64 = 100.0;

/// `|β3|` below this (in unit-interval coordinates) counts as no cubic term.
const CUBIC_EPS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("need at least {needed} observations, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("intensity {0} lies outside [0, 100]")]
    IntensityOutOfRange(f64),
    #[error("non-finite observation ({x}, {y})")]
    NonFinite { x: f64, y: f64 },
    #[error("cubic fit needs at least 4 distinct intensities, got {0}")]
    RankDeficient(usize),
    #[error("model has no cubic term, so no inflection point")]
    NoInflection,
    #[error("no observations")]
    Empty,
}

/// Paired (intensity %, normalized beta power) observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSet {
    points: Vec<(f64, f64)>,
}

impl ObservationSet {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, ModelError> {
        if points.len() < 2 {
            return Err(ModelError::TooFewPoints {
                needed: 2,
                got: points.len(),
            });
        }
        for &(x, y) in &points {
            if !x.is_finite() || !y.is_finite() {
                return Err(ModelError::NonFinite { x, y });
            }
            if !(0.0..=100.0).contains(&x) {
                return Err(ModelError::IntensityOutOfRange(x));
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn distinct_x(&self) -> usize {
        let mut xs: Vec<f64> = self.points.iter().map(|p| p.0).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs.len()
    }
}

/// Location of the zero of the second derivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Inflection {
    pub x: f64,
    pub in_range: bool,
}

/// Fitted cubic `β0 + β1 x + β2 x² + β3 x³` with its fit statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadModel {
    pub beta0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    /// May be negative when the model is scored on data it was not fit to.
    pub r_squared: f64,
    pub rmse: f64,
    pub n_points: usize,
    pub inflection: Option<Inflection>,
}

impl LoadModel {
    /// Model with the given percent-unit coefficients and no fit statistics.
    pub fn from_coefficients(beta: [f64; 4]) -> Self {
        let mut model = Self {
            beta0: beta[0],
            beta1: beta[1],
            beta2: beta[2],
            beta3: beta[3],
            r_squared: 1.0,
            rmse: 0.0,
            n_points: 0,
            inflection: None,
        };
        model.inflection = inflection_point(&model).ok();
        model
    }

    pub fn coefficients(&self) -> [f64; 4] {
        [self.beta0, self.beta1, self.beta2, self.beta3]
    }

    /// Coefficients in unit-interval coordinates `u = x / 100`.
    pub fn scaled_coefficients(&self) -> [f64; 4] {
        let mut s = 1.0;
        self.coefficients().map(|b| {
            let v = b * s;
            s *= X_SCALE;
            v
        })
    }

    pub fn predict(&self, x: f64) -> f64 {
        predict(self, x)
    }
}

pub fn predict(model: &LoadModel, x: f64) -> f64 {
    ((model.beta3 * x + model.beta2) * x + model.beta1) * x + model.beta0
}

/// Least-squares cubic through the observations.
pub fn fit_cubic(obs: &ObservationSet) -> Result<LoadModel, ModelError> {
    let distinct = obs.distinct_x();
    if distinct < 4 {
        return Err(ModelError::RankDeficient(distinct));
    }

    // Normal equations on u = x / 100.
    let mut gram = [[0.0_f64; 4]; 4];
    let mut rhs = [0.0_f64; 4];
    for &(x, y) in obs.points() {
        let u = x / X_SCALE;
        let row = [1.0, u, u * u, u * u * u];
        for i in 0..4 {
            rhs[i] += row[i] * y;
            for j in 0..4 {
                gram[i][j] += row[i] * row[j];
            }
        }
    }
    let scaled = solve4(gram, rhs).ok_or(ModelError::RankDeficient(distinct))?;

    let mut s = 1.0;
    let beta = scaled.map(|c| {
        let v = c / s;
        s *= X_SCALE;
        v
    });
    let mut model = LoadModel::from_coefficients(beta);
    let stats = residual_statistics(&model, obs);
    model.rmse = stats.rmse;
    // A constant target is fit exactly by β0 alone.
    model.r_squared = stats.r_squared.unwrap_or(1.0);
    model.n_points = obs.len();
    Ok(model)
}

/// Gaussian elimination with partial pivoting on a 4×4 system.
fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    let scale = a.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
    for col in 0..4 {
        let pivot = (col..4).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= scale * 1e-14 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let (upper, lower) = a.split_at_mut(col + 1);
        let pivot_row = &upper[col];
        for (offset, row) in lower.iter_mut().enumerate() {
            let f = row[col] / pivot_row[col];
            for (r, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *r -= f * p;
            }
            b[col + 1 + offset] -= f * b[col];
        }
    }
    let mut x = [0.0; 4];
    for row in (0..4).rev() {
        let tail: f64 = (row + 1..4).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}

/// Goodness of fit. `r_squared` is `None` when the observations have no variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitStatistics {
    pub r_squared: Option<f64>,
    pub rmse: f64,
}

fn residual_statistics(model: &LoadModel, obs: &ObservationSet) -> FitStatistics {
    let n = obs.len() as f64;
    let mean = obs.points().iter().map(|p| p.1).sum::<f64>() / n;
    let (ss_res, ss_tot) = obs.points().iter().fold((0.0, 0.0), |(r, t), &(x, y)| {
        (r + (y - predict(model, x)).powi(2), t + (y - mean).powi(2))
    });
    FitStatistics {
        r_squared: (ss_tot > 0.0).then(|| 1.0 - ss_res / ss_tot),
        rmse: (ss_res / n).sqrt(),
    }
}

/// Recomputes R² and RMSE of `model` on `obs`.
pub fn fit_statistics(
    model: &LoadModel,
    obs: &ObservationSet,
) -> Result<FitStatistics, ModelError> {
    if obs.is_empty() {
        return Err(ModelError::Empty);
    }
    Ok(residual_statistics(model, obs))
}

/// Zero of the second derivative, `-β2 / (3 β3)`.
pub fn inflection_point(model: &LoadModel) -> Result<Inflection, ModelError> {
    let [_, _, _, b3_scaled] = model.scaled_coefficients();
    if b3_scaled.is_nan() || b3_scaled.abs() <= CUBIC_EPS {
        return Err(ModelError::NoInflection);
    }
    let x = -model.beta2 / (3.0 * model.beta3);
    Ok(Inflection {
        x,
        in_range: (0.0..=100.0).contains(&x),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimumKind {
    InteriorMaximum,
    Boundary,
    /// Stationary point that is also an inflection (flat saddle).
    Inflection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub x_star: f64,
    pub y_star: f64,
    pub kind: OptimumKind,
}

/// Beta-power maximizer over `x ∈ [0, 100]` and the corresponding CLI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CliOptimum {
    pub cli_star: f64,
    pub optimum: Optimum,
}

/// Real stationary points of the cubic in the open interval `(0, 100)`.
fn stationary_points(model: &LoadModel) -> Vec<f64> {
    // Coefficients in u.
    let [_, c1, c2, c3] = model.scaled_coefficients();
    let (a, b, c) = (3.0 * c3, 2.0 * c2, c1);
    let mut roots = Vec::new();
    if a.abs() <= CUBIC_EPS {
        if b.abs() > CUBIC_EPS {
            roots.push(-c / b);
        }
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            // Numerically stable pair.
            let q = -0.5 * (b + b.signum() * sq);
            if q != 0.0 {
                roots.push(q / a);
                roots.push(c / q);
            } else {
                roots.push(-b / (2.0 * a));
            }
        }
    }
    roots
        .into_iter()
        .map(|u| u * X_SCALE)
        .filter(|x| x.is_finite() && *x > 0.0 && *x < 100.0)
        .collect()
}

/// Locates the maximizer of the predicted beta power on `[0, 100]`.
///
/// Candidates are both boundaries, the analytic stationary points, and a
/// Nelder-Mead search on the negated prediction (projected onto the interval,
/// with a quadratic penalty on the projection distance). The highest candidate
/// wins; ties go to the lower `x`.
pub fn optimal_cli(model: &LoadModel) -> CliOptimum {
    let clamp = |x: f64| x.clamp(0.0, 100.0);
    let scale = 1.0
        + model
            .scaled_coefficients()
            .iter()
            .fold(0.0_f64, |m, c| m.max(c.abs()));
    let objective = |p: &[f64]| {
        let x = p[0];
        let inside = clamp(x);
        -predict(model, inside) + scale * (x - inside).powi(2)
    };
    let opts = NelderMeadOptions {
        step: 25.0,
        x_tolerance: 1e-9,
        f_tolerance: f64::INFINITY,
        max_iter: 500,
    };
    let mut candidates = vec![0.0, 100.0];
    candidates.extend(stationary_points(model));
    if let Ok(res) = nelder_mead_minimize(objective, &[50.0], &opts) {
        candidates.push(clamp(res.argmin[0]));
    }

    let tie = 1e-12 * scale;
    let mut best_x = f64::NAN;
    let mut best_y = f64::NEG_INFINITY;
    for x in candidates {
        let y = predict(model, x);
        // Near-equal values at distinct locations are ties; near-equal values at
        // (numerically) the same location are the same maximum.
        let distinct = (x - best_x).abs() > 1e-6;
        if y > best_y + tie || ((y - best_y).abs() <= tie && distinct && x < best_x) {
            best_x = x;
            best_y = y;
        }
    }

    let kind = if best_x == 0.0 || best_x == 100.0 {
        OptimumKind::Boundary
    } else {
        // Second derivative vanishing at the maximizer marks a flat inflection.
        let [_, _, c2, c3] = model.scaled_coefficients();
        let u = best_x / X_SCALE;
        if (6.0 * c3 * u + 2.0 * c2).abs() <= 1e-9 * scale {
            OptimumKind::Inflection
        } else {
            OptimumKind::InteriorMaximum
        }
    };
    CliOptimum {
        cli_star: 100.0 - best_x,
        optimum: Optimum {
            x_star: best_x,
            y_star: best_y,
            kind,
        },
    }
}
