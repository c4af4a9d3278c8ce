//! Path simulation of the log-return SDE with exponential-Vasicek volatility
//! and compound-Poisson jumps. This is the independent oracle for the Fourier
//! route: it never touches `F` or `e^U`.
//!
//! Per step `Δt` the log-volatility `z = ln σ` takes the exact
//! Ornstein-Uhlenbeck transition and the log-return takes an Euler step with
//! `σ` frozen at the start of the step. Each path (or antithetic pair) owns
//! four ChaCha substreams keyed by its index, for diffusion normals, OU
//! normals, jump counts and jump sizes, so results depend only on the seed
//! and never on how paths are spread over threads.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, ValidationError};
use crate::jumps::NumericJumps;
use crate::model::{check, JumpKind, JumpSpec, MarketRequest, SvModel};

const CHUNK: usize = 4096;
const INVERSE_CDF_CELLS: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathConfig {
    /// Simulated paths; with antithetics this counts both members of each pair.
    pub n_paths: usize,
    /// Time steps per year; a horizon `T` uses `ceil(n_steps·T)` steps.
    pub n_steps: usize,
    pub seed: u64,
    pub antithetic: bool,
    /// Thread count; `None` uses the global pool. Results do not depend on it.
    pub workers: Option<usize>,
}

impl Default for PathConfig {
    fn default() -> Self {
        PathConfig {
            n_paths: 100_000,
            n_steps: 252,
            seed: 42,
            antithetic: true,
            workers: None,
        }
    }
}

impl PathConfig {
    pub fn violations(&self) -> Vec<ValidationError> {
        let mut errs = Vec::new();
        if self.n_paths == 0 {
            errs.push(ValidationError::PathConfigZero { field: "n_paths" });
        }
        if self.n_steps == 0 {
            errs.push(ValidationError::PathConfigZero { field: "n_steps" });
        }
        if self.workers == Some(0) {
            errs.push(ValidationError::PathConfigZero { field: "workers" });
        }
        errs
    }

    fn units(&self) -> usize {
        if self.antithetic {
            self.n_paths.div_ceil(2)
        } else {
            self.n_paths
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_effective: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexEstimate {
    pub mean: Complex64,
    pub stderr_re: f64,
    pub stderr_im: f64,
}

/// Terminal log-returns `x_T − x₀`. Antithetic partners sit at adjacent
/// indices `2i, 2i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalSample {
    pub log_returns: Vec<f64>,
    pub antithetic: bool,
    pub seed: u64,
    pub t: f64,
}

impl TerminalSample {
    fn unit_len(&self) -> usize {
        if self.antithetic {
            2
        } else {
            1
        }
    }

    /// Mean and standard error of `f(x_T − x₀)`, pair-averaging antithetic
    /// partners before accumulating.
    pub fn estimate<F: Fn(f64) -> f64>(&self, f: F) -> MCEstimate {
        let values: Vec<f64> = self
            .log_returns
            .chunks(self.unit_len())
            .map(|u| u.iter().map(|&y| f(y)).sum::<f64>() / u.len() as f64)
            .collect();
        let (mean, stderr) = mean_stderr(&values);
        MCEstimate {
            mean,
            stderr,
            n_effective: self.log_returns.len(),
            seed: self.seed,
        }
    }

    /// Empirical `E[e^{−ip(x_T − x₀ − rT)}]`.
    pub fn char_fn(&self, p: f64, r: f64) -> ComplexEstimate {
        let drift = r * self.t;
        let re = self.estimate(|y| (p * (y - drift)).cos());
        let im = self.estimate(|y| -(p * (y - drift)).sin());
        ComplexEstimate {
            mean: Complex64::new(re.mean, im.mean),
            stderr_re: re.stderr,
            stderr_im: im.stderr,
        }
    }

    pub fn call(&self, s0: f64, k: f64, r: f64) -> MCEstimate {
        let discount = (-r * self.t).exp();
        self.estimate(|y| discount * (s0 * y.exp() - k).max(0.0))
    }

    /// Histogram over `edges`; samples outside the edges are counted in
    /// `outside`.
    pub fn histogram(&self, edges: &[f64]) -> Result<Histogram> {
        check_edges(edges)?;
        let bins = edges.len() - 1;
        let locate = |y: f64| -> Option<usize> {
            if y < edges[0] || y > edges[bins] {
                return None;
            }
            let i = edges.partition_point(|e| *e <= y);
            Some(i.saturating_sub(1).min(bins - 1))
        };
        // per-bin first and second moments of the (pair-averaged) indicator
        let mut sum = vec![0.0; bins];
        let mut sum_sq = vec![0.0; bins];
        let mut outside = 0.0;
        for unit in self.log_returns.chunks(self.unit_len()) {
            let w = 1.0 / unit.len() as f64;
            let slots: Vec<Option<usize>> = unit.iter().map(|&y| locate(y)).collect();
            for (n, slot) in slots.iter().enumerate() {
                match slot {
                    None => outside += w,
                    Some(i) => {
                        if slots[..n].contains(slot) {
                            continue;
                        }
                        let v = w * slots.iter().filter(|s| *s == slot).count() as f64;
                        sum[*i] += v;
                        sum_sq[*i] += v * v;
                    }
                }
            }
        }
        let units = (self.log_returns.len() / self.unit_len()) as f64;
        let mass: Vec<f64> = sum.iter().map(|s| s / units).collect();
        let stderr: Vec<f64> = mass
            .iter()
            .zip(&sum_sq)
            .map(|(m, sq)| {
                let var = (sq / units - m * m).max(0.0) * units / (units - 1.0).max(1.0);
                (var / units).sqrt()
            })
            .collect();
        let density = mass
            .iter()
            .zip(edges.windows(2))
            .map(|(m, w)| m / (w[1] - w[0]))
            .collect();
        Ok(Histogram {
            edges: edges.to_vec(),
            mass,
            stderr,
            density,
            outside: outside / units,
        })
    }
}

/// Normalized histogram of terminal log-returns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    /// Fraction of samples in each bin.
    pub mass: Vec<f64>,
    /// Standard error of each bin's mass.
    pub stderr: Vec<f64>,
    /// `mass / width`.
    pub density: Vec<f64>,
    /// Fraction of samples outside `[edges[0], edges[last]]`.
    pub outside: f64,
}

impl Histogram {
    pub fn centres(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

fn check_edges(edges: &[f64]) -> Result<()> {
    if edges.len() < 2 {
        return Err(ValidationError::TooFewBins(edges.len().saturating_sub(1)).into());
    }
    if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ValidationError::Other("histogram edges must be finite and increasing".into()).into());
    }
    Ok(())
}

fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

enum JumpSampler {
    None,
    Merton { nu: f64, delta: f64 },
    Kou { up: f64, eta_plus: f64, eta_minus: f64 },
    Table { nodes: Vec<f64>, cdf: Vec<f64> },
}

impl JumpSampler {
    fn new(spec: &JumpSpec) -> Result<Self> {
        if spec.is_trivial() {
            return Ok(JumpSampler::None);
        }
        Ok(match &spec.kind {
            JumpKind::Merton { nu, delta } => JumpSampler::Merton {
                nu: *nu,
                delta: *delta,
            },
            JumpKind::Kou {
                p_plus,
                p_minus,
                eta_plus,
                eta_minus,
            } => JumpSampler::Kou {
                up: p_plus / (p_plus + p_minus),
                eta_plus: *eta_plus,
                eta_minus: *eta_minus,
            },
            JumpKind::Custom(density) => {
                let (lo, hi) = NumericJumps::new(density.clone(), spec.lambda)?.truncated_support();
                let h = (hi - lo) / INVERSE_CDF_CELLS as f64;
                let nodes: Vec<f64> = (0..=INVERSE_CDF_CELLS).map(|i| lo + i as f64 * h).collect();
                let mut cdf = Vec::with_capacity(nodes.len());
                let mut acc = 0.0;
                let mut prev = density.pdf(lo);
                cdf.push(0.0);
                for &x in &nodes[1..] {
                    let cur = density.pdf(x);
                    acc += 0.5 * h * (prev + cur);
                    cdf.push(acc);
                    prev = cur;
                }
                cdf.iter_mut().for_each(|c| *c /= acc);
                JumpSampler::Table { nodes, cdf }
            }
        })
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            JumpSampler::None => 0.0,
            JumpSampler::Merton { nu, delta } => {
                let z: f64 = StandardNormal.sample(rng);
                nu + delta * z
            }
            JumpSampler::Kou {
                up,
                eta_plus,
                eta_minus,
            } => {
                let e: f64 = Exp1.sample(rng);
                if rng.gen::<f64>() < *up {
                    eta_plus * e
                } else {
                    -eta_minus * e
                }
            }
            JumpSampler::Table { nodes, cdf } => {
                let u: f64 = rng.gen();
                let i = cdf.partition_point(|c| *c < u).clamp(1, cdf.len() - 1);
                let (c0, c1) = (cdf[i - 1], cdf[i]);
                let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
                nodes[i - 1] + frac * (nodes[i] - nodes[i - 1])
            }
        }
    }
}

enum Vol {
    Constant(f64),
    Ou {
        z0: f64,
        a_bar: f64,
        decay: f64,
        shock: f64,
        rho: f64,
        rho_perp: f64,
    },
}

struct Simulator {
    vol: Vol,
    r_drift: f64,
    dt: f64,
    sqrt_dt: f64,
    steps: usize,
    counts: Option<Poisson<f64>>,
    sampler: JumpSampler,
    antithetic: bool,
    base: ChaCha8Rng,
}

impl Simulator {
    fn new(model: &SvModel, jumps: &JumpSpec, t: f64, config: &PathConfig) -> Result<Self> {
        let mut errs = model.simulation_violations();
        errs.extend(jumps.violations());
        errs.extend(config.violations());
        if !(t > 0.0 && t.is_finite()) {
            errs.push(ValidationError::MaturityNotPositive(t));
        }
        check(errs)?;

        let steps = ((config.n_steps as f64 * t).ceil() as usize).max(1);
        let dt = t / steps as f64;
        let vol = match model {
            SvModel::ConstVol { sigma, .. } => Vol::Constant(*sigma),
            SvModel::Ln(p) => {
                let decay = (-p.beta * dt).exp();
                Vol::Ou {
                    z0: p.sigma0.ln(),
                    a_bar: p.a_bar,
                    decay,
                    shock: p.gamma * ((-(-2.0 * p.beta * dt).exp_m1()) / (2.0 * p.beta)).sqrt(),
                    rho: p.rho,
                    rho_perp: (1.0 - p.rho * p.rho).max(0.0).sqrt(),
                }
            }
        };
        let trivial = jumps.is_trivial();
        let m_j = if trivial {
            0.0
        } else {
            crate::jumps::compensator(jumps)?
        };
        let lambda = if trivial { 0.0 } else { jumps.lambda };
        let counts = if lambda > 0.0 {
            Some(Poisson::new(lambda * dt).map_err(|e| Error::invalid(vec![ValidationError::Other(e.to_string())]))?)
        } else {
            None
        };
        Ok(Simulator {
            vol,
            r_drift: model.rate() - lambda * m_j,
            dt,
            sqrt_dt: dt.sqrt(),
            steps,
            counts,
            sampler: JumpSampler::new(jumps)?,
            antithetic: config.antithetic,
            base: ChaCha8Rng::seed_from_u64(config.seed),
        })
    }

    fn stream(&self, unit: u64, sub: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(4 * unit + sub);
        rng.set_word_pos(0);
        rng
    }

    /// Terminal log-returns of one path, or of an antithetic pair.
    fn unit(&self, unit: u64, out: &mut Vec<f64>) {
        let mut diffusion = self.stream(unit, 0);
        let mut ou = self.stream(unit, 1);
        let mut x = [0.0f64; 2];
        match self.vol {
            Vol::Constant(sigma) => {
                let drift = (self.r_drift - 0.5 * sigma * sigma) * self.dt;
                for _ in 0..self.steps {
                    let z1: f64 = StandardNormal.sample(&mut diffusion);
                    let dw = sigma * self.sqrt_dt * z1;
                    x[0] += drift + dw;
                    x[1] += drift - dw;
                }
            }
            Vol::Ou {
                z0,
                a_bar,
                decay,
                shock,
                rho,
                rho_perp,
            } => {
                let mut z = [z0; 2];
                for _ in 0..self.steps {
                    let z1: f64 = StandardNormal.sample(&mut diffusion);
                    let z2: f64 = StandardNormal.sample(&mut ou);
                    for (k, sign) in [1.0, -1.0].into_iter().enumerate() {
                        let sigma = z[k].exp();
                        let w = sign * (rho * z2 + rho_perp * z1);
                        x[k] += (self.r_drift - 0.5 * sigma * sigma) * self.dt + sigma * self.sqrt_dt * w;
                        z[k] = a_bar + (z[k] - a_bar) * decay + shock * sign * z2;
                    }
                }
            }
        }
        if let Some(counts) = &self.counts {
            let mut count_rng = self.stream(unit, 2);
            let mut size_rng = self.stream(unit, 3);
            let mut jump_sum = 0.0;
            for _ in 0..self.steps {
                let n = counts.sample(&mut count_rng) as u64;
                for _ in 0..n {
                    jump_sum += self.sampler.sample(&mut size_rng);
                }
            }
            x[0] += jump_sum;
            x[1] += jump_sum;
        }
        out.push(x[0]);
        if self.antithetic {
            out.push(x[1]);
        }
    }
}

fn run_pool<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(job()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(job))
            .map_err(|e| Error::invalid(vec![ValidationError::Other(e.to_string())])),
    }
}

/// Simulate terminal log-returns `x_T − x₀`.
pub fn simulate_terminal(
    model: &SvModel,
    jumps: &JumpSpec,
    t: f64,
    config: &PathConfig,
) -> Result<TerminalSample> {
    let sim = Simulator::new(model, jumps, t, config)?;
    let units = config.units();
    let chunks: Vec<Vec<f64>> = run_pool(config.workers, || {
        (0..units.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let lo = c * CHUNK;
                let hi = (lo + CHUNK).min(units);
                let mut out = Vec::with_capacity((hi - lo) * 2);
                for u in lo..hi {
                    sim.unit(u as u64, &mut out);
                }
                out
            })
            .collect()
    })?;
    Ok(TerminalSample {
        log_returns: chunks.concat(),
        antithetic: config.antithetic,
        seed: config.seed,
        t,
    })
}

/// Discounted call payoff average.
pub fn mc_call_price(
    model: &SvModel,
    jumps: &JumpSpec,
    req: &MarketRequest,
    config: &PathConfig,
) -> Result<MCEstimate> {
    check(req.violations())?;
    Ok(simulate_terminal(model, jumps, req.t, config)?.call(req.s0, req.k, model.rate()))
}

/// Call estimates for several strikes from one set of paths.
pub fn mc_call_prices(
    model: &SvModel,
    jumps: &JumpSpec,
    s0: f64,
    t: f64,
    strikes: &[f64],
    config: &PathConfig,
) -> Result<Vec<MCEstimate>> {
    let mut errs = Vec::new();
    for &k in strikes {
        errs.extend(MarketRequest::new(s0, k, t).violations());
    }
    check(errs)?;
    let sample = simulate_terminal(model, jumps, t, config)?;
    Ok(strikes.iter().map(|&k| sample.call(s0, k, model.rate())).collect())
}

/// Histogram of `x_T − x₀` with `bins` equal bins spanning every sample, so
/// the masses sum to one.
pub fn mc_density(
    model: &SvModel,
    jumps: &JumpSpec,
    t: f64,
    config: &PathConfig,
    bins: usize,
) -> Result<Histogram> {
    if bins < 10 {
        return Err(ValidationError::TooFewBins(bins).into());
    }
    let sample = simulate_terminal(model, jumps, t, config)?;
    let lo = sample.log_returns.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = sample.log_returns.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = 1e-9 * (hi - lo).max(1.0);
    let (lo, hi) = (lo - pad, hi + pad);
    let edges: Vec<f64> = (0..=bins).map(|i| lo + (hi - lo) * i as f64 / bins as f64).collect();
    sample.histogram(&edges)
}

/// Sample estimates of `E[e^{−ip(x_T − x₀ − rT)}]` on a real grid.
pub fn mc_char_fn(
    model: &SvModel,
    jumps: &JumpSpec,
    t: f64,
    config: &PathConfig,
    p_grid: &[f64],
) -> Result<Vec<ComplexEstimate>> {
    if let Some(&bad) = p_grid.iter().find(|p| !p.is_finite()) {
        return Err(ValidationError::NonFinite { field: "p", value: bad }.into());
    }
    let sample = simulate_terminal(model, jumps, t, config)?;
    Ok(p_grid.iter().map(|&p| sample.char_fn(p, model.rate())).collect())
}
