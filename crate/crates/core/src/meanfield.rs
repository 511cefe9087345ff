//! Fixed points of `x = tanh(beta x + B)`, regime classification, and
//! the mean-field prediction for the log-partition function.

use serde::{Deserialize, Serialize};

use crate::coupling::CouplingMatrix;
use crate::error::{Error, Result};

/// Inverse temperature and external field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub beta: f64,
    #[serde(rename = "b")]
    pub b_field: f64,
}

impl ModelParams {
    pub fn new(beta: f64, b_field: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "beta must be a positive finite real, got {beta}"
            )));
        }
        if !b_field.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "b must be finite, got {b_field}"
            )));
        }
        Ok(Self { beta, b_field })
    }
}

/// Parameter regimes of the model.
///
/// `Theta11`: `B = 0, beta < 1`; `Theta12`: `B != 0`; `Theta2`:
/// `B = 0, beta > 1`; `Theta3`: the critical point `(1, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeLabel {
    Theta11,
    Theta12,
    Theta2,
    Theta3,
}

impl std::fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RegimeLabel::Theta11 => "Theta11",
            RegimeLabel::Theta12 => "Theta12",
            RegimeLabel::Theta2 => "Theta2",
            RegimeLabel::Theta3 => "Theta3",
        };
        f.write_str(s)
    }
}

/// Classification of `(beta, B)` together with the fixed point `t`,
/// the derivative `phi'(t)` and the limit variance `tau` (absent at
/// the critical point where the limit is non-Gaussian).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Regime {
    pub label: RegimeLabel,
    pub t: f64,
    pub phi_prime: f64,
    pub tau: Option<f64>,
}

/// Classify `(beta, B)` and report the associated fixed-point data.
///
/// The critical point is detected by exact comparison on the inputs;
/// near-critical parameters such as `beta = 1 + 1e-9` are classified
/// as `Theta2`/`Theta11` without smoothing.
pub fn classify(params: ModelParams) -> Regime {
    let ModelParams { beta, b_field } = params;
    let label = if b_field != 0.0 {
        RegimeLabel::Theta12
    } else if beta == 1.0 {
        RegimeLabel::Theta3
    } else if beta < 1.0 {
        RegimeLabel::Theta11
    } else {
        RegimeLabel::Theta2
    };
    let t = solve_fixed_point(params);
    // At the root, tanh(beta t + B) = t, so phi'(t) = 1 - beta (1 - t^2).
    let phi_prime = 1.0 - beta * (1.0 - t * t);
    let tau = match label {
        RegimeLabel::Theta3 => None,
        _ => Some((1.0 - t * t) / phi_prime),
    };
    Regime {
        label,
        t,
        phi_prime,
        tau,
    }
}

/// Solve `phi(x) = x - tanh(beta x + B) = 0` to residual `< 1e-12`.
///
/// For `B = 0, beta > 1` the positive root is returned (the negative
/// root is `-t` by symmetry); the sign of the root matches the sign
/// of `B` when `B != 0`.
pub fn solve_fixed_point(params: ModelParams) -> f64 {
    let ModelParams { beta, b_field } = params;
    if b_field < 0.0 {
        return -solve_fixed_point(ModelParams {
            beta,
            b_field: -b_field,
        });
    }
    if b_field == 0.0 && beta <= 1.0 {
        return 0.0;
    }
    let phi = |x: f64| x - (beta * x + b_field).tanh();
    // phi is negative just above 0 in both remaining cases (B > 0, or
    // B = 0 with beta > 1), and positive at 1 - 1e-15 unless the root
    // has been pushed against 1 by an extreme beta + B.
    let mut lo = 1e-15;
    let mut hi = 1.0 - 1e-15;
    if phi(hi) <= 0.0 {
        return hi;
    }
    debug_assert!(phi(lo) < 0.0);
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `I(x) = ((1+x)/2) log((1+x)/2) + ((1-x)/2) log((1-x)/2)` with the
/// convention `0 log 0 = 0` at the endpoints.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(x.abs() <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "binary entropy needs |x| <= 1, got {x}"
        )));
    }
    let half = |h: f64| if h > 0.0 { h * h.ln() } else { 0.0 };
    Ok(half(0.5 * (1.0 + x)) + half(0.5 * (1.0 - x)))
}

/// The mean-field prediction
/// `M_N = N (beta t^2/2 + B t - I(t)) + (beta t^2/2) sum_i (R_i - 1)`.
pub fn mean_field_prediction(a: &CouplingMatrix, params: ModelParams) -> f64 {
    let t = solve_fixed_point(params);
    let n = a.n() as f64;
    let entropy = binary_entropy(t).expect("fixed point lies in [-1, 1]");
    let sum_dev: f64 = a.row_sums().iter().map(|r| r - 1.0).sum();
    n * (params.beta * t * t / 2.0 + params.b_field * t - entropy)
        + params.beta * t * t / 2.0 * sum_dev
}

/// `log Z - M_N`.  The variational bound guarantees this is
/// nonnegative; a value below `-1e-9` signals a bug in one of the
/// inputs and is reported as an error.
pub fn mean_field_gap(a: &CouplingMatrix, params: ModelParams, log_z: f64) -> Result<f64> {
    let gap = log_z - mean_field_prediction(a, params);
    if gap < -1e-9 {
        return Err(Error::MeanFieldInconsistency { gap });
    }
    Ok(gap)
}
