//! Kolmogorov-Smirnov comparisons between exact magnetization laws,
//! empirical samples, and the analytic limit laws, plus centering
//! statistics, concentration curves and event-probability comparisons.

use std::sync::OnceLock;

use serde::Serialize;
use statrs::function::erf::erfc;

use crate::coupling::{MatrixDiagnostics, RateTerms};
use crate::error::{Error, Result};
use crate::exact::MagnetizationLaw;
use crate::meanfield::{ModelParams, Regime, RegimeLabel};
use crate::quadrature::adaptive_simpson;

/// Quadrature tolerance for the quartic CDFs.
const CDF_TOL: f64 = 1e-10;
/// Beyond |x| = 8 the quartic densities are below e^-341.
const QUARTIC_SUPPORT: f64 = 8.0;

/// Analytic limit laws of the centered magnetization.
#[derive(Debug, Clone, PartialEq)]
pub enum LimitLaw {
    /// `N(0, tau)`.
    Gaussian { tau: f64 },
    /// Density proportional to `exp(-x^4/12)`.
    QuarticW,
    /// Density proportional to `exp(-x^4/12 - x^2/sqrt(2))`.
    ModifiedWTilde,
    /// `base + mu`.
    Shifted { base: Box<LimitLaw>, mu: f64 },
}

impl LimitLaw {
    pub fn gaussian(tau: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "gaussian limit law needs tau > 0, got {tau}"
            )));
        }
        Ok(LimitLaw::Gaussian { tau })
    }

    pub fn shifted(base: LimitLaw, mu: f64) -> Self {
        LimitLaw::Shifted {
            base: Box::new(base),
            mu,
        }
    }

    /// Normalizer of the unshifted quartic kinds (cached after the
    /// first quadrature).
    pub fn normalizer(kind_is_modified: bool) -> f64 {
        static QUARTIC: OnceLock<f64> = OnceLock::new();
        static MODIFIED: OnceLock<f64> = OnceLock::new();
        let cell = if kind_is_modified { &MODIFIED } else { &QUARTIC };
        *cell.get_or_init(|| {
            let density = move |x: f64| unnormalized_density(kind_is_modified, x);
            adaptive_simpson(&density, -QUARTIC_SUPPORT, QUARTIC_SUPPORT, CDF_TOL)
        })
    }

    /// CDF evaluated by the complementary error function (Gaussian) or
    /// adaptive Simpson quadrature (quartic kinds).
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            LimitLaw::Gaussian { tau } => 0.5 * erfc(-x / (2.0 * tau).sqrt()),
            LimitLaw::QuarticW => quartic_cdf(false, x),
            LimitLaw::ModifiedWTilde => quartic_cdf(true, x),
            LimitLaw::Shifted { base, mu } => base.cdf(x - mu),
        }
    }
}

fn unnormalized_density(modified: bool, x: f64) -> f64 {
    let x2 = x * x;
    let mut e = -x2 * x2 / 12.0;
    if modified {
        e -= x2 / std::f64::consts::SQRT_2;
    }
    e.exp()
}

fn quartic_cdf(modified: bool, x: f64) -> f64 {
    if x <= -QUARTIC_SUPPORT {
        return 0.0;
    }
    if x >= QUARTIC_SUPPORT {
        return 1.0;
    }
    let z = LimitLaw::normalizer(modified);
    // integrate from 0 and use the even symmetry of the density
    let half = adaptive_simpson(
        &|u: f64| unnormalized_density(modified, u),
        0.0,
        x.abs(),
        CDF_TOL,
    ) / z;
    let v = if x >= 0.0 { 0.5 + half } else { 0.5 - half };
    v.clamp(0.0, 1.0)
}

/// Centering statistics for magnetization samples and laws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Statistic {
    /// `sqrt(n) (sigma_bar - t)`.
    #[serde(rename = "sqrtN_minus_t")]
    SqrtNMinusT,
    /// `sqrt(n) (sigma_bar - sign(sigma_bar) t)` with `sign(0) = +1`.
    #[serde(rename = "sqrtN_minus_M")]
    SqrtNMinusM,
    /// `n^{1/4} sigma_bar` (critical scaling; requires `t = 0`).
    #[serde(rename = "quarterN")]
    QuarterN,
}

impl std::str::FromStr for Statistic {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sqrtN_minus_t" | "sqrt-n-minus-t" => Ok(Statistic::SqrtNMinusT),
            "sqrtN_minus_M" | "sqrt-n-minus-m" => Ok(Statistic::SqrtNMinusM),
            "quarterN" | "quarter-n" => Ok(Statistic::QuarterN),
            other => Err(Error::InvalidParameter(format!(
                "unknown statistic `{other}`"
            ))),
        }
    }
}

/// Samples after applying a centering statistic.
#[derive(Debug, Clone)]
pub struct CenteredSample {
    pub values: Vec<f64>,
    pub statistic: Statistic,
    pub n: usize,
    pub t: f64,
}

/// A probability law usable on either side of a KS comparison.
#[derive(Debug, Clone)]
pub enum Law {
    /// Sorted atoms with probabilities.
    Atomic { xs: Vec<f64>, ps: Vec<f64> },
    /// Sorted empirical sample (equal weights).
    Sample { sorted: Vec<f64> },
    /// Analytic limit law.
    Limit(LimitLaw),
}

impl From<CenteredSample> for Law {
    fn from(cs: CenteredSample) -> Self {
        let mut sorted = cs.values;
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Law::Sample { sorted }
    }
}

impl From<LimitLaw> for Law {
    fn from(l: LimitLaw) -> Self {
        Law::Limit(l)
    }
}

fn transform(stat: Statistic, n: usize, t: f64, sigma_bar: f64) -> f64 {
    let nf = n as f64;
    match stat {
        Statistic::SqrtNMinusT => nf.sqrt() * (sigma_bar - t),
        Statistic::SqrtNMinusM => {
            let center = if sigma_bar >= 0.0 { t } else { -t };
            nf.sqrt() * (sigma_bar - center)
        }
        Statistic::QuarterN => nf.powf(0.25) * sigma_bar,
    }
}

fn check_statistic(stat: Statistic, t: f64) -> Result<()> {
    if stat == Statistic::QuarterN && t != 0.0 {
        return Err(Error::StatisticMismatch(format!(
            "quarterN centering requires t = 0, got t = {t}"
        )));
    }
    Ok(())
}

/// Center raw `sigma_bar` draws.
pub fn center_samples(
    sigma_bars: &[f64],
    stat: Statistic,
    n: usize,
    t: f64,
) -> Result<CenteredSample> {
    check_statistic(stat, t)?;
    if sigma_bars.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(CenteredSample {
        values: sigma_bars.iter().map(|&s| transform(stat, n, t, s)).collect(),
        statistic: stat,
        n,
        t,
    })
}

/// Center an exact law into an atomic law on the transformed axis.
/// Atoms with magnetization `S = 0` take the positive center.
pub fn center_law(law: &MagnetizationLaw, stat: Statistic, t: f64) -> Result<Law> {
    check_statistic(stat, t)?;
    let n = law.n();
    let mut pairs: Vec<(f64, f64)> = law
        .support()
        .iter()
        .zip(law.probs())
        .map(|(&s, &p)| (transform(stat, n, t, s as f64 / n as f64), p))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    // merge collided atoms
    let mut xs = Vec::with_capacity(pairs.len());
    let mut ps = Vec::with_capacity(pairs.len());
    for (x, p) in pairs {
        if xs.last() == Some(&x) {
            *ps.last_mut().unwrap() += p;
        } else {
            xs.push(x);
            ps.push(p);
        }
    }
    Ok(Law::Atomic { xs, ps })
}

/// `sup_x |F_lhs(x) - F_rhs(x)|`.
///
/// For atomic or empirical laws the supremum is evaluated at both
/// one-sided limits of every atom; continuous-continuous comparisons
/// refine a dense grid.
pub fn ks_distance(lhs: &Law, rhs: &Law) -> Result<f64> {
    use Law::*;
    match (lhs, rhs) {
        (Sample { sorted }, _) if sorted.is_empty() => Err(Error::EmptySample),
        (_, Sample { sorted }) if sorted.is_empty() => Err(Error::EmptySample),
        (Atomic { xs, .. }, _) if xs.is_empty() => Err(Error::EmptySample),
        (_, Atomic { xs, .. }) if xs.is_empty() => Err(Error::EmptySample),
        (Limit(a), Limit(b)) => Ok(ks_continuous(a, b)),
        (a, b) => {
            let sa = StepCdf::build(a);
            let sb = StepCdf::build(b);
            match (sa, sb) {
                (Some(sa), Some(sb)) => Ok(ks_step_step(&sa, &sb)),
                (Some(sa), None) => {
                    let Limit(l) = b else { unreachable!() };
                    Ok(ks_step_continuous(&sa, l))
                }
                (None, Some(sb)) => {
                    let Limit(l) = a else { unreachable!() };
                    Ok(ks_step_continuous(&sb, l))
                }
                (None, None) => unreachable!("limit-limit handled above"),
            }
        }
    }
}

/// Right-continuous step CDF: jump points with cumulative values.
struct StepCdf {
    xs: Vec<f64>,
    cum: Vec<f64>,
}

impl StepCdf {
    fn build(law: &Law) -> Option<Self> {
        match law {
            Law::Atomic { xs, ps } => {
                let mut cum = Vec::with_capacity(ps.len());
                let mut acc = 0.0;
                for p in ps {
                    acc += p;
                    cum.push(acc);
                }
                Some(StepCdf {
                    xs: xs.clone(),
                    cum,
                })
            }
            Law::Sample { sorted } => {
                // merge duplicates
                let m = sorted.len() as f64;
                let mut xs = Vec::new();
                let mut cum = Vec::new();
                for (i, &x) in sorted.iter().enumerate() {
                    let c = (i + 1) as f64 / m;
                    if xs.last() == Some(&x) {
                        *cum.last_mut().unwrap() = c;
                    } else {
                        xs.push(x);
                        cum.push(c);
                    }
                }
                Some(StepCdf { xs, cum })
            }
            Law::Limit(_) => None,
        }
    }

    fn value_before(&self, idx: usize) -> f64 {
        if idx == 0 {
            0.0
        } else {
            self.cum[idx - 1]
        }
    }

    /// CDF evaluated at `x` (right-continuous).
    fn at(&self, x: f64) -> f64 {
        match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => self.cum[i],
            Err(0) => 0.0,
            Err(i) => self.cum[i - 1],
        }
    }
}

fn ks_step_continuous(step: &StepCdf, limit: &LimitLaw) -> f64 {
    let mut sup: f64 = 0.0;
    for (i, &x) in step.xs.iter().enumerate() {
        let c = limit.cdf(x);
        sup = sup.max((step.cum[i] - c).abs());
        sup = sup.max((step.value_before(i) - c).abs());
    }
    sup
}

fn ks_step_step(a: &StepCdf, b: &StepCdf) -> f64 {
    let mut sup: f64 = 0.0;
    for &x in a.xs.iter().chain(b.xs.iter()) {
        sup = sup.max((a.at(x) - b.at(x)).abs());
    }
    sup
}

fn ks_continuous(a: &LimitLaw, b: &LimitLaw) -> f64 {
    // bracket both effective supports, scan, then refine each local
    // maximum of |F_a - F_b| by ternary search
    let lo = -40.0f64;
    let hi = 40.0f64;
    let grid = 4096;
    let h = (hi - lo) / grid as f64;
    let diff = |x: f64| (a.cdf(x) - b.cdf(x)).abs();
    let mut best = 0.0f64;
    let mut best_x = lo;
    for k in 0..=grid {
        let x = lo + k as f64 * h;
        let d = diff(x);
        if d > best {
            best = d;
            best_x = x;
        }
    }
    let (mut l, mut r) = (best_x - h, best_x + h);
    for _ in 0..200 {
        let m1 = l + (r - l) / 3.0;
        let m2 = r - (r - l) / 3.0;
        if diff(m1) < diff(m2) {
            l = m1;
        } else {
            r = m2;
        }
    }
    best.max(diff(0.5 * (l + r)))
}

/// Exact `log P(|sigma_bar - M(sigma)| > delta)` for every requested
/// `delta`, with `M(sigma) = sign(sigma_bar) t` and `sign(0) = +1`.
pub fn concentration_curve(
    law: &MagnetizationLaw,
    t: f64,
    deltas: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if deltas.is_empty() {
        return Err(Error::InvalidParameter("need at least one delta".into()));
    }
    for w in deltas.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidParameter(
                "deltas must be positive increasing".into(),
            ));
        }
    }
    if deltas[0] <= 0.0 {
        return Err(Error::InvalidParameter(
            "deltas must be positive increasing".into(),
        ));
    }
    Ok(deltas
        .iter()
        .map(|&d| {
            let lp = law.log_prob_where(|sb| {
                let center = if sb >= 0.0 { t } else { -t };
                (sb - center).abs() > d
            });
            (d, lp)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventSide {
    Above,
    Below,
}

/// Log-probabilities of a magnetization threshold event under a model
/// law and a reference law, and their gap.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EventComparison {
    pub log_p: f64,
    pub log_ref: f64,
    /// `log_p - log_ref`; zero when both events are impossible,
    /// `+inf` (flagged) when only the reference event is.
    pub gap: f64,
    pub ref_event_impossible: bool,
}

pub fn event_comparison(
    law_p: &MagnetizationLaw,
    law_ref: &MagnetizationLaw,
    side: EventSide,
    level: f64,
) -> Result<EventComparison> {
    if law_p.n() != law_ref.n() {
        return Err(Error::DimensionMismatch(format!(
            "laws live on different sizes: {} vs {}",
            law_p.n(),
            law_ref.n()
        )));
    }
    let keep = |sb: f64| match side {
        EventSide::Above => sb > level,
        EventSide::Below => sb < level,
    };
    let log_p = law_p.log_prob_where(keep);
    let log_ref = law_ref.log_prob_where(keep);
    let (gap, flag) = if log_p == f64::NEG_INFINITY && log_ref == f64::NEG_INFINITY {
        (0.0, false)
    } else if log_ref == f64::NEG_INFINITY {
        (f64::INFINITY, true)
    } else {
        (log_p - log_ref, false)
    };
    Ok(EventComparison {
        log_p,
        log_ref,
        gap,
        ref_event_impossible: flag,
    })
}

/// The sparse/irregular counterexample families with an explicit
/// limit shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CounterexampleFamily {
    /// Line graph of the complete graph:
    /// `mu = beta t / (sqrt(2) (1 - beta(1-t^2)) (2 - beta(1-t^2)))`.
    LineGraph,
    /// Two complete graphs of sizes `N - sqrt(N)` and `sqrt(N)`:
    /// `mu = beta t (1-t^2)/(1 - beta(1-t^2)) + tanh(B) - t`.
    RegularityA,
    /// `K_N` scaled by `N - sqrt(N)`:
    /// `mu = beta t (1-t^2)/(1 - beta(1-t^2))`.
    RegularityB,
}

/// Shift constant of the named counterexample at `(beta, B)`.
pub fn counterexample_mu(params: ModelParams, which: CounterexampleFamily) -> Result<f64> {
    let beta = params.beta;
    let b = params.b_field;
    let t = crate::meanfield::solve_fixed_point(params);
    let phi_prime = 1.0 - beta * (1.0 - t * t);
    match which {
        CounterexampleFamily::LineGraph => {
            if beta == 1.0 && b == 0.0 {
                return Err(Error::RegimeMismatch(
                    "line-graph shift is undefined at the critical point (the limit is the modified quartic law)".into(),
                ));
            }
            Ok(beta * t
                / (std::f64::consts::SQRT_2 * phi_prime * (2.0 - beta * (1.0 - t * t))))
        }
        CounterexampleFamily::RegularityA | CounterexampleFamily::RegularityB => {
            if b == 0.0 {
                return Err(Error::RegimeMismatch(
                    "regularity counterexamples require B != 0".into(),
                ));
            }
            let base = beta * t * (1.0 - t * t) / phi_prime;
            match which {
                CounterexampleFamily::RegularityA => Ok(base + b.tanh() - t),
                _ => Ok(base),
            }
        }
    }
}

/// Dvoretzky-Kiefer-Wolfowitz envelope half-width at confidence
/// `1 - alpha` for `m` draws.
pub fn dkw_band(m: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * m as f64)).sqrt()
}

/// Theorem right-hand side for the KS distance in the given regime,
/// assembled from the rate terms.
pub fn ks_rate_rhs(diag: &MatrixDiagnostics, regime: &Regime, n: usize) -> f64 {
    let rt: RateTerms = crate::coupling::rate_terms(diag, regime.t.abs(), n);
    let nf = n as f64;
    match regime.label {
        RegimeLabel::Theta11 => rt.theta11,
        RegimeLabel::Theta12 => {
            (diag.frobenius_sq + diag.sum_dev_sq + regime.t.abs() * diag.sum_dev.abs()) / nf.sqrt()
        }
        RegimeLabel::Theta2 => rt.nonuniq / nf.sqrt(),
        RegimeLabel::Theta3 => {
            rt.epsilon / nf.sqrt()
                + rt.epsilon * rt.r / nf.powf(0.25)
                + nf.ln().powi(2) * rt.delta.sqrt() / nf.powf(0.25)
        }
    }
}

/// Report emitted by the `analyze` pipeline.
#[derive(Debug, Serialize)]
pub struct AnalysisReport {
    pub statistic: Statistic,
    pub n: usize,
    pub regime: RegimeLabel,
    pub ks: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_rhs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitted_constant: Option<f64>,
    pub runtime_ms: u128,
}
