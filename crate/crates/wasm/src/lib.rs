//! wasm-bindgen surface for the browser demo.
//!
//! Three interactive operations: regime classification over
//! `(beta, B)`, the exact magnetization law with its limit-law
//! overlay, and a Glauber trajectory on a random regular graph.
//! Everything returns plain JSON strings or flat float arrays so the
//! page needs no framework.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use ising_core::analysis::{center_law, ks_distance, Law, LimitLaw, Statistic};
use ising_core::coupling::{build_regular, RegularKind};
use ising_core::exact::magnetization_law_cw;
use ising_core::meanfield::{classify, ModelParams, RegimeLabel};
use ising_core::sampler::{glauber_sweep, ChainState, InitKind};

fn err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Regime label, fixed point, derivative and limit variance at
/// `(beta, B)` as a JSON string.
#[wasm_bindgen]
pub fn classify_regime(beta: f64, b: f64) -> Result<String, JsError> {
    let params = ModelParams::new(beta, b).map_err(err)?;
    let regime = classify(params);
    serde_json::to_string(&regime).map_err(err)
}

#[derive(Serialize)]
struct LawOverlay {
    regime: RegimeLabel,
    statistic: &'static str,
    t: f64,
    tau: Option<f64>,
    ks: f64,
    /// pmf on the sigma_bar axis: parallel arrays
    pmf_x: Vec<f64>,
    pmf_p: Vec<f64>,
    /// CDF overlay on the centered axis
    grid: Vec<f64>,
    exact_cdf: Vec<f64>,
    limit_cdf: Vec<f64>,
    /// limit density on the same grid (for drawing)
    limit_density: Vec<f64>,
}

/// Exact magnetization law at `(n, beta, B)` with the matching limit
/// law: Gaussian after `sqrt(n)` centering away from criticality
/// (sign-dependent centering in the low-temperature phase), the
/// quartic law under `n^{1/4}` scaling at the critical point.
/// Returns a JSON string with the pmf, both CDFs on a shared grid and
/// the Kolmogorov-Smirnov distance.
#[wasm_bindgen]
pub fn law_vs_limit(n: usize, beta: f64, b: f64) -> Result<String, JsError> {
    if !(2..=100_000).contains(&n) {
        return Err(JsError::new("n must lie in [2, 100000]"));
    }
    let params = ModelParams::new(beta, b).map_err(err)?;
    let regime = classify(params);
    let law = magnetization_law_cw(n, params).map_err(err)?;

    let (stat, stat_name, limit) = match regime.label {
        RegimeLabel::Theta3 => (Statistic::QuarterN, "quarterN", LimitLaw::QuarticW),
        RegimeLabel::Theta2 => (
            Statistic::SqrtNMinusM,
            "sqrtN_minus_M",
            LimitLaw::gaussian(regime.tau.unwrap()).map_err(err)?,
        ),
        _ => (
            Statistic::SqrtNMinusT,
            "sqrtN_minus_t",
            LimitLaw::gaussian(regime.tau.unwrap()).map_err(err)?,
        ),
    };
    let centered = center_law(&law, stat, regime.t).map_err(err)?;
    let ks = ks_distance(&centered, &Law::Limit(limit.clone())).map_err(err)?;

    // pmf thinned to at most ~2000 atoms for drawing
    let stride = (law.support().len() / 2000).max(1);
    let mut pmf_x = Vec::new();
    let mut pmf_p = Vec::new();
    for (k, (&s, &p)) in law.support().iter().zip(law.probs()).enumerate() {
        if k % stride == 0 {
            pmf_x.push(s as f64 / n as f64);
            pmf_p.push(p * stride as f64);
        }
    }

    // shared CDF grid over the centered axis
    let spread = match &limit {
        LimitLaw::Gaussian { tau } => 4.0 * tau.sqrt(),
        _ => 4.0,
    };
    let lo = -spread - regime.t.abs();
    let hi = spread + regime.t.abs();
    let grid: Vec<f64> = (0..=400)
        .map(|k| lo + (hi - lo) * k as f64 / 400.0)
        .collect();
    let Law::Atomic { xs, ps } = &centered else {
        unreachable!()
    };
    let mut cum = 0.0;
    let mut idx = 0;
    let mut exact_cdf = Vec::with_capacity(grid.len());
    for &g in &grid {
        while idx < xs.len() && xs[idx] <= g {
            cum += ps[idx];
            idx += 1;
        }
        exact_cdf.push(cum);
    }
    let limit_cdf: Vec<f64> = grid.iter().map(|&x| limit.cdf(x)).collect();
    let limit_density: Vec<f64> = {
        let h = (hi - lo) / 400.0;
        grid.iter()
            .map(|&x| (limit.cdf(x + 0.5 * h) - limit.cdf(x - 0.5 * h)) / h)
            .collect()
    };

    let overlay = LawOverlay {
        regime: regime.label,
        statistic: stat_name,
        t: regime.t,
        tau: regime.tau,
        ks,
        pmf_x,
        pmf_p,
        grid,
        exact_cdf,
        limit_cdf,
        limit_density,
    };
    serde_json::to_string(&overlay).map_err(err)
}

/// `sigma_bar` after each sweep of random-scan Glauber dynamics on a
/// random `d`-regular graph, starting from all spins up.
#[wasm_bindgen]
pub fn glauber_trace(
    n: usize,
    d: usize,
    beta: f64,
    b: f64,
    sweeps: usize,
    seed: u64,
) -> Result<Vec<f64>, JsError> {
    if n > 2000 || sweeps > 5000 {
        return Err(JsError::new("demo caps: n <= 2000, sweeps <= 5000"));
    }
    let params = ModelParams::new(beta, b).map_err(err)?;
    let a = build_regular(n, d, RegularKind::RandomRegular, seed).map_err(err)?;
    let mut state = ChainState::new(&a, params, InitKind::AllPlus, seed, 0);
    let mut trace = Vec::with_capacity(sweeps + 1);
    trace.push(state.config.sigma_bar());
    for _ in 0..sweeps {
        glauber_sweep(&a, params, &mut state);
        trace.push(state.config.sigma_bar());
    }
    Ok(trace)
}
