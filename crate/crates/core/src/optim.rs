//! Derivative-free Nelder-Mead simplex minimization.

use thiserror::Error;

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum OptimError {
    #[error("problem dimension must be at least 1")]
    EmptyStart,
    #[error("initial simplex step must be positive, got {0}")]
    InvalidStep(f64),
    #[error("objective returned {value} at {point:?}")]
    NonFinite { point: Vec<f64>, value: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadOptions {
    /// Offset of each initial vertex from the start point along one axis.
    pub step: f64,
    /// Converged once every vertex lies within this distance of the best vertex...
    pub x_tolerance: f64,
    /// ...and the spread of vertex values is at most this.
    pub f_tolerance: f64,
    pub max_iter: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            step: 1.0,
            x_tolerance: 1e-10,
            f_tolerance: 1e-12,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub argmin: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

struct Vertex {
    x: Vec<f64>,
    f: f64,
}

/// Minimizes `objective` from `start` with the standard reflect / expand /
/// contract / shrink moves (coefficients 1, 2, 0.5, 0.5).
///
/// Deterministic for a given objective and inputs. The returned value is never
/// larger than the objective at `start`.
pub fn nelder_mead_minimize<F>(
    objective: F,
    start: &[f64],
    options: &NelderMeadOptions,
) -> Result<Minimum, OptimError>
where
    F: Fn(&[f64]) -> f64,
{
    let n = start.len();
    if n == 0 {
        return Err(OptimError::EmptyStart);
    }
    if !(options.step > 0.0 && options.step.is_finite()) {
        return Err(OptimError::InvalidStep(options.step));
    }
    let eval = |x: Vec<f64>| -> Result<Vertex, OptimError> {
        let f = objective(&x);
        if f.is_finite() {
            Ok(Vertex { x, f })
        } else {
            Err(OptimError::NonFinite { point: x, value: f })
        }
    };

    let mut simplex = Vec::with_capacity(n + 1);
    simplex.push(eval(start.to_vec())?);
    for i in 0..n {
        let mut x = start.to_vec();
        x[i] += options.step;
        simplex.push(eval(x)?);
    }

    let mut iterations = 0;
    loop {
        // Stable sort keeps ties in insertion order, so runs are reproducible.
        simplex.sort_by(|a, b| a.f.total_cmp(&b.f));
        let best = &simplex[0];
        let worst_f = simplex[n].f;
        let diameter = simplex[1..]
            .iter()
            .map(|v| distance(&v.x, &best.x))
            .fold(0.0_f64, f64::max);
        // Requiring both keeps symmetric ties (equal values far apart) from
        // ending the search early.
        if (diameter < options.x_tolerance && worst_f - best.f <= options.f_tolerance)
            || iterations >= options.max_iter
        {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(&v.x) {
                *c += xi / n as f64;
            }
        }
        let toward = |from: &[f64], coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(from)
                .map(|(c, p)| c + coef * (p - c))
                .collect()
        };

        let reflected = eval(toward(&simplex[n].x, -REFLECT))?;
        if reflected.f < simplex[0].f {
            let expanded = eval(toward(&reflected.x, EXPAND))?;
            simplex[n] = if expanded.f < reflected.f {
                expanded
            } else {
                reflected
            };
            continue;
        }
        if reflected.f < simplex[n - 1].f {
            simplex[n] = reflected;
            continue;
        }
        let contracted = if reflected.f < worst_f {
            let outside = eval(toward(&reflected.x, CONTRACT))?;
            (outside.f <= reflected.f).then_some(outside)
        } else {
            let inside = eval(toward(&simplex[n].x, CONTRACT))?;
            (inside.f < worst_f).then_some(inside)
        };
        match contracted {
            Some(v) => simplex[n] = v,
            None => {
                let anchor = simplex[0].x.clone();
                for v in simplex.iter_mut().skip(1) {
                    let x = anchor
                        .iter()
                        .zip(&v.x)
                        .map(|(a, p)| a + SHRINK * (p - a))
                        .collect();
                    *v = eval(x)?;
                }
            }
        }
    }

    let best = simplex.swap_remove(0);
    Ok(Minimum {
        argmin: best.x,
        value: best.f,
        iterations,
    })
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}
