//! Samplers: single-site Glauber dynamics (the exchangeable-pair
//! kernel), the exact auxiliary-variable representation of the
//! Curie-Weiss model, and the analytic limit laws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::LimitLaw;
use crate::coupling::CouplingMatrix;
use crate::error::{Error, Result};
use crate::exact::SpinConfiguration;
use crate::meanfield::{solve_fixed_point, ModelParams};

const CHAIN_TAG: u64 = 0x474c_4155_4245_5201; // per-chain Glauber streams
const AUX_TAG: u64 = 0x4155_5849_4c49_4152; // auxiliary-variable streams
const LIMIT_TAG: u64 = 0x4c49_4d49_544c_4157; // limit-law streams

/// Deterministic stream splitting: the 256-bit ChaCha key is
/// `(master_seed, stream_index, tag, 0)` in little-endian words.
fn stream_rng(master_seed: u64, stream: u64, tag: u64) -> ChaCha12Rng {
    let mut seed = [0u8; 32];
    seed[0..8].copy_from_slice(&master_seed.to_le_bytes());
    seed[8..16].copy_from_slice(&stream.to_le_bytes());
    seed[16..24].copy_from_slice(&tag.to_le_bytes());
    ChaCha12Rng::from_seed(seed)
}

/// Initial condition of a chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    AllPlus,
    AllMinus,
    Random,
    /// iid spins with mean `t` (the fixed point of the parameters).
    ColdAtT,
}

/// Burn-in, thinning and chain layout for MCMC runs.  A sweep is `n`
/// single-site updates.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub burn_in_sweeps: usize,
    pub thin_sweeps: usize,
    pub n_samples: usize,
    pub n_chains: usize,
    pub master_seed: u64,
    pub init: InitKind,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            burn_in_sweeps: 200,
            thin_sweeps: 1,
            n_samples: 1000,
            n_chains: 4,
            master_seed: 0,
            init: InitKind::Random,
        }
    }
}

impl SamplerConfig {
    fn validate(&self) -> Result<()> {
        if self.thin_sweeps == 0 || self.n_samples == 0 || self.n_chains == 0 {
            return Err(Error::InvalidParameter(
                "sampler counts must be positive (thin_sweeps >= 1)".into(),
            ));
        }
        Ok(())
    }
}

/// One Markov chain: configuration, sweep counter and its private
/// random stream.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub config: SpinConfiguration,
    pub sweep_count: u64,
    rng: ChaCha12Rng,
}

impl ChainState {
    pub fn new(
        a: &CouplingMatrix,
        params: ModelParams,
        init: InitKind,
        master_seed: u64,
        chain_index: u64,
    ) -> Self {
        let mut rng = stream_rng(master_seed, chain_index, CHAIN_TAG);
        let n = a.n();
        let config = match init {
            InitKind::AllPlus => SpinConfiguration::all_plus(a),
            InitKind::AllMinus => SpinConfiguration::all_minus(a),
            InitKind::Random => {
                let spins: Vec<i8> = (0..n)
                    .map(|_| if rng.gen::<bool>() { 1 } else { -1 })
                    .collect();
                SpinConfiguration::new(a, spins).expect("valid spins")
            }
            InitKind::ColdAtT => {
                let t = solve_fixed_point(params);
                let p_plus = 0.5 * (1.0 + t);
                let spins: Vec<i8> = (0..n)
                    .map(|_| if rng.gen::<f64>() < p_plus { 1 } else { -1 })
                    .collect();
                SpinConfiguration::new(a, spins).expect("valid spins")
            }
        };
        Self {
            config,
            sweep_count: 0,
            rng,
        }
    }
}

/// One random-scan update: pick a uniform site `I` and resample
/// `sigma_I` to `+1` with probability `(1 + tanh(beta m_I + B)) / 2`.
pub fn glauber_step(a: &CouplingMatrix, params: ModelParams, state: &mut ChainState) {
    let n = a.n();
    let i = state.rng.gen_range(0..n);
    let p_plus = 0.5 * (1.0 + (params.beta * state.config.local_field(i) + params.b_field).tanh());
    let new = if state.rng.gen::<f64>() < p_plus { 1 } else { -1 };
    state.config.set_spin(a, i, new);
}

/// `n` single-site updates.
pub fn glauber_sweep(a: &CouplingMatrix, params: ModelParams, state: &mut ChainState) {
    for _ in 0..a.n() {
        glauber_step(a, params, state);
    }
    state.sweep_count += 1;
    // cancel local-field drift on long runs
    if state.sweep_count % 64 == 0 {
        state.config.refresh(a);
    }
}

/// One recorded draw.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MagnetizationSample {
    pub chain: usize,
    pub draw: usize,
    pub sigma_bar: f64,
    /// `sign(sigma_bar)` with zero mapped to `+1`.
    pub m_sign: i8,
}

/// Run independent Glauber chains and record `sigma_bar` after
/// burn-in with thinning.  Chains own disjoint random streams and the
/// output is merged in chain order, so results are reproducible
/// regardless of scheduling.
pub fn sample_ising(
    a: &CouplingMatrix,
    params: ModelParams,
    cfg: &SamplerConfig,
) -> Result<Vec<MagnetizationSample>> {
    cfg.validate()?;
    let per_chain: Vec<Vec<MagnetizationSample>> = (0..cfg.n_chains)
        .into_par_iter()
        .map(|chain| {
            let mut state = ChainState::new(a, params, cfg.init, cfg.master_seed, chain as u64);
            for _ in 0..cfg.burn_in_sweeps {
                glauber_sweep(a, params, &mut state);
            }
            let mut out = Vec::with_capacity(cfg.n_samples);
            for draw in 0..cfg.n_samples {
                for _ in 0..cfg.thin_sweeps {
                    glauber_sweep(a, params, &mut state);
                }
                let sigma_bar = state.config.sigma_bar();
                out.push(MagnetizationSample {
                    chain,
                    draw,
                    sigma_bar,
                    m_sign: if sigma_bar >= 0.0 { 1 } else { -1 },
                });
            }
            out
        })
        .collect();
    Ok(per_chain.into_iter().flatten().collect())
}

/// Explicit `2^n x 2^n` random-scan Glauber transition matrix
/// (row-major, bit `i` of a state mask set means `sigma_i = +1`).
/// Verification tool for small systems.
pub fn glauber_transition_matrix(a: &CouplingMatrix, params: ModelParams) -> Result<Vec<f64>> {
    let n = a.n();
    if n > 10 {
        return Err(Error::SizeCap {
            op: "explicit transition matrix",
            cap: 10,
            got: n,
        });
    }
    let states = 1usize << n;
    let mut t = vec![0.0; states * states];
    for mask in 0..states {
        let spins: Vec<i8> = (0..n)
            .map(|i| if mask >> i & 1 == 1 { 1 } else { -1 })
            .collect();
        let cfg = SpinConfiguration::new(a, spins).expect("valid spins");
        let mut stay = 0.0;
        for i in 0..n {
            let p_plus =
                0.5 * (1.0 + (params.beta * cfg.local_field(i) + params.b_field).tanh());
            let flip_mask = mask ^ (1 << i);
            let (p_new, p_same) = if mask >> i & 1 == 1 {
                (1.0 - p_plus, p_plus)
            } else {
                (p_plus, 1.0 - p_plus)
            };
            t[mask * states + flip_mask] += p_new / n as f64;
            stay += p_same / n as f64;
        }
        t[mask * states + mask] += stay;
    }
    Ok(t)
}

/// Piecewise-linear representation of the auxiliary-variable density
/// `w ~ exp(-n f(w))`, `f(w) = beta w^2/2 - log cosh(beta w + B)`.
struct AuxiliaryDensity {
    xs: Vec<f64>,
    cdf: Vec<f64>,
    pdf: Vec<f64>,
}

fn log_cosh(x: f64) -> f64 {
    x.abs() + (-2.0 * x.abs()).exp().ln_1p() - std::f64::consts::LN_2
}

impl AuxiliaryDensity {
    fn build(n: usize, params: ModelParams) -> Result<Self> {
        let beta = params.beta;
        let b = params.b_field;
        let pad = 10.0 / (n as f64 * beta).sqrt();
        let (lo, hi) = (-1.0 - pad, 1.0 + pad);
        let f = |w: f64| 0.5 * beta * w * w - log_cosh(beta * w + b);

        let mut points = 1025usize;
        let mut prev_mass: Option<f64> = None;
        loop {
            let h = (hi - lo) / (points - 1) as f64;
            let xs: Vec<f64> = (0..points).map(|k| lo + k as f64 * h).collect();
            let fs: Vec<f64> = xs.iter().map(|&w| f(w)).collect();
            let fmin = fs.iter().copied().fold(f64::INFINITY, f64::min);
            let pdf: Vec<f64> = fs.iter().map(|&v| (-(n as f64) * (v - fmin)).exp()).collect();
            // trapezoid cumulative of the piecewise-linear density
            let mut cdf = vec![0.0; points];
            for k in 1..points {
                cdf[k] = cdf[k - 1] + 0.5 * (pdf[k - 1] + pdf[k]) * h;
            }
            let mass = cdf[points - 1];
            let converged = match prev_mass {
                Some(m) => (mass - m).abs() <= 1e-10 * mass,
                None => false,
            };
            if converged || points >= (1 << 17) + 1 {
                // exponential-tail estimate of the mass beyond the grid
                let slope = |w: f64| (n as f64) * (beta * w - beta * (beta * w + b).tanh());
                let tail_hi = pdf[points - 1] / slope(hi).max(1e-300);
                let tail_lo = pdf[0] / (-slope(lo)).max(1e-300);
                let covered = mass / (mass + tail_hi.max(0.0) + tail_lo.max(0.0));
                if covered < 1.0 - 1e-12 {
                    return Err(Error::GridCoverage { mass: covered });
                }
                let cdf: Vec<f64> = cdf.iter().map(|c| c / mass).collect();
                return Ok(Self { xs, cdf, pdf });
            }
            prev_mass = Some(mass);
            points = (points - 1) * 2 + 1;
        }
    }

    /// Inverse-CDF draw; the piecewise-linear density is inverted
    /// exactly within each cell.
    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        let k = match self
            .cdf
            .binary_search_by(|c| c.partial_cmp(&u).unwrap())
        {
            Ok(k) => k,
            Err(k) => k.saturating_sub(1).min(self.xs.len() - 2),
        };
        let k = k.min(self.xs.len() - 2);
        let h = self.xs[k + 1] - self.xs[k];
        let mass = self.cdf[k + 1] - self.cdf[k];
        if mass <= 0.0 {
            return self.xs[k];
        }
        let v = (u - self.cdf[k]) / mass; // in [0,1] within the cell
        let (g0, g1) = (self.pdf[k], self.pdf[k + 1]);
        let s = if (g1 - g0).abs() < 1e-14 * (g0 + g1) {
            v * h
        } else {
            // solve g0 s + (g1-g0) s^2 / (2h) = v * (g0+g1) h / 2
            let a = 0.5 * (g1 - g0) / h;
            let c = -v * 0.5 * (g0 + g1) * h;
            let disc = (g0 * g0 - 4.0 * a * c).max(0.0);
            (-g0 + disc.sqrt()) / (2.0 * a)
        };
        self.xs[k] + s.clamp(0.0, h)
    }
}

/// Exact iid sampler for the Curie-Weiss magnetization: draw the
/// auxiliary variable `W` by inverse CDF, then `sigma_bar` from a
/// binomial with per-spin mean `tanh(beta W + B)`.  No Markov chain is
/// involved; draws are independent.
pub fn sample_cw_auxiliary(
    n: usize,
    params: ModelParams,
    cfg: &SamplerConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if n == 0 || n > crate::exact::SUFFICIENT_CAP {
        return Err(Error::SizeCap {
            op: "auxiliary Curie-Weiss sampler",
            cap: crate::exact::SUFFICIENT_CAP,
            got: n,
        });
    }
    let density = AuxiliaryDensity::build(n, params)?;
    let mut out = Vec::with_capacity(cfg.n_chains * cfg.n_samples);
    for chain in 0..cfg.n_chains {
        let mut rng = stream_rng(cfg.master_seed, chain as u64, AUX_TAG);
        for _ in 0..cfg.n_samples {
            let w = density.sample(&mut rng);
            let p_plus = 0.5 * (1.0 + (params.beta * w + params.b_field).tanh());
            let plus = Binomial::new(n as u64, p_plus)
                .expect("valid probability")
                .sample(&mut rng);
            out.push((2.0 * plus as f64 - n as f64) / n as f64);
        }
    }
    Ok(out)
}

/// iid draws from a limit law.  Quartic kinds use rejection from a
/// Gaussian envelope with an analytic envelope constant; shifts reuse
/// the base stream so matched seeds differ by exactly `mu`.
pub fn sample_limit_law(law: &LimitLaw, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, 0, LIMIT_TAG);
    let mut out = Vec::with_capacity(count);
    draw_limit_into(law, count, &mut rng, &mut out);
    out
}

fn draw_limit_into<R: Rng>(law: &LimitLaw, count: usize, rng: &mut R, out: &mut Vec<f64>) {
    match law {
        LimitLaw::Gaussian { tau } => {
            let sd = tau.sqrt();
            for _ in 0..count {
                let z: f64 = StandardNormal.sample(rng);
                out.push(sd * z);
            }
        }
        LimitLaw::QuarticW => {
            // e^{-x^4/12} <= e^{3/16} e^{-x^2/4}: propose N(0, 2)
            let sd = 2f64.sqrt();
            for _ in 0..count {
                loop {
                    let z: f64 = StandardNormal.sample(rng);
                    let x = sd * z;
                    let log_accept = x * x / 4.0 - x.powi(4) / 12.0 - 3.0 / 16.0;
                    if rng.gen::<f64>().ln() < log_accept {
                        out.push(x);
                        break;
                    }
                }
            }
        }
        LimitLaw::ModifiedWTilde => {
            // e^{-x^4/12 - x^2/sqrt(2)} <= e^{-x^2/sqrt(2)}: propose
            // the Gaussian with 2 sigma^2 = sqrt(2)
            let sd = (std::f64::consts::SQRT_2 / 2.0).sqrt();
            for _ in 0..count {
                loop {
                    let z: f64 = StandardNormal.sample(rng);
                    let x = sd * z;
                    if rng.gen::<f64>().ln() < -x.powi(4) / 12.0 {
                        out.push(x);
                        break;
                    }
                }
            }
        }
        LimitLaw::Shifted { base, mu } => {
            let start = out.len();
            draw_limit_into(base, count, rng, out);
            for v in &mut out[start..] {
                *v += mu;
            }
        }
    }
}

/// Sidecar metadata for serialized samples.
#[derive(Debug, Serialize)]
pub struct SamplesSidecar<'a> {
    pub config: &'a SamplerConfig,
    pub coupling_label: &'a str,
    pub beta: f64,
    #[serde(rename = "B")]
    pub b: f64,
}

/// CSV serialization: header `chain,draw,sigma_bar,m_sign`.
pub fn write_samples_csv<W: std::io::Write>(
    samples: &[MagnetizationSample],
    mut w: W,
) -> Result<()> {
    writeln!(w, "chain,draw,sigma_bar,m_sign")?;
    for s in samples {
        writeln!(w, "{},{},{},{}", s.chain, s.draw, s.sigma_bar, s.m_sign)?;
    }
    Ok(())
}
