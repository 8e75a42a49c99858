//! Right-censored data from an additive-hazard truth `h(u | x) = x' alpha(u)`.
//!
//! Every individual `i` draws from two ChaCha20 streams of the configured seed:
//! stream `2i` for covariates and `2i + 1` for event and censoring times, so the
//! first `n` records do not depend on the sample size.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aalen::{fit_submodel, IndexSet};
use crate::data::{Dataset, SurvivalRecord};
use crate::error::{FicError, Result};
use crate::linalg::pairwise_sum;
use crate::oracle::{Censoring, GammaCovariateSpec, OracleConfig};

/// Right-continuous step function: `levels[k]` on `[breaks[k-1], breaks[k])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "PiecewiseWire", into = "PiecewiseWire")]
pub struct PiecewiseConstant {
    breaks: Vec<f64>,
    levels: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PiecewiseWire {
    Constant(f64),
    Steps { breaks: Vec<f64>, levels: Vec<f64> },
}

impl From<PiecewiseWire> for PiecewiseConstant {
    fn from(w: PiecewiseWire) -> Self {
        match w {
            PiecewiseWire::Constant(c) => PiecewiseConstant::constant(c),
            PiecewiseWire::Steps { breaks, levels } => PiecewiseConstant { breaks, levels },
        }
    }
}

impl From<PiecewiseConstant> for PiecewiseWire {
    fn from(p: PiecewiseConstant) -> Self {
        if p.breaks.is_empty() {
            PiecewiseWire::Constant(p.levels[0])
        } else {
            PiecewiseWire::Steps { breaks: p.breaks, levels: p.levels }
        }
    }
}

impl PiecewiseConstant {
    pub fn constant(level: f64) -> Self {
        PiecewiseConstant { breaks: Vec::new(), levels: vec![level] }
    }

    pub fn new(breaks: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        let p = PiecewiseConstant { breaks, levels };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.len() != self.breaks.len() + 1 {
            return Err(FicError::Validation(format!(
                "{} breaks need {} levels, got {}",
                self.breaks.len(),
                self.breaks.len() + 1,
                self.levels.len()
            )));
        }
        if self.breaks.iter().any(|b| !(b.is_finite() && *b > 0.0)) || self.breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(FicError::Validation("breaks must be positive, finite and increasing".into()));
        }
        if self.levels.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(FicError::Validation("regressor levels must be finite and nonnegative".into()));
        }
        Ok(())
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn value(&self, u: f64) -> f64 {
        self.levels[self.breaks.partition_point(|&b| b <= u)]
    }

    /// `int_0^t alpha(u) du`
    pub fn integral(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        let mut start = 0.0;
        for (k, &b) in self.breaks.iter().enumerate() {
            if t <= b {
                return acc + self.levels[k] * (t - start);
            }
            acc += self.levels[k] * (b - start);
            start = b;
        }
        acc + self.levels[self.breaks.len()] * (t - start)
    }

    pub fn final_level(&self) -> f64 {
        self.levels[self.breaks.len()]
    }

    /// `Some(alpha)` when the function has no breaks.
    pub fn as_constant(&self) -> Option<f64> {
        self.breaks.is_empty().then(|| self.levels[0])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovariateSource {
    Gamma(GammaCovariateSpec),
    /// One covariate vector per individual.
    Explicit(Vec<Vec<f64>>),
}

/// Whether replications redraw covariates or hold the seed's draw fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovariateMode {
    #[default]
    Marginal,
    Conditional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub covariates: CovariateSource,
    pub alphas: Vec<PiecewiseConstant>,
    #[serde(default)]
    pub censoring: Censoring,
    pub seed: u64,
    #[serde(default)]
    pub mode: CovariateMode,
}

impl SimConfig {
    /// Constant regressor functions and the gamma law of an oracle configuration.
    pub fn from_oracle(cfg: &OracleConfig, n: usize, seed: u64) -> Self {
        SimConfig {
            n,
            covariates: CovariateSource::Gamma(cfg.covariates.clone()),
            alphas: cfg.alphas.iter().map(|&a| PiecewiseConstant::constant(a)).collect(),
            censoring: cfg.censoring,
            seed,
            mode: CovariateMode::Marginal,
        }
    }

    pub fn r(&self) -> usize {
        self.alphas.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(FicError::Validation("sample size must be positive".into()));
        }
        if self.alphas.is_empty() {
            return Err(FicError::Validation("at least one regressor function is required".into()));
        }
        for a in &self.alphas {
            a.validate()?;
        }
        self.censoring.validate()?;
        let r = self.r();
        match &self.covariates {
            CovariateSource::Gamma(spec) => {
                spec.validate()?;
                if spec.shape.len() != r {
                    return Err(FicError::Dimension { expected: r, got: spec.shape.len() });
                }
                // Gamma draws are positive, so mass is infinite iff some final level is.
                if self.censoring == Censoring::None && self.alphas.iter().all(|a| a.final_level() == 0.0) {
                    return Err(unbounded_follow_up());
                }
            }
            CovariateSource::Explicit(xs) => {
                if xs.len() != self.n {
                    return Err(FicError::Validation(format!(
                        "explicit covariates list {} vectors for n = {}",
                        xs.len(),
                        self.n
                    )));
                }
                for x in xs {
                    if x.len() != r {
                        return Err(FicError::Dimension { expected: r, got: x.len() });
                    }
                    if x.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                        return Err(FicError::Validation("explicit covariates must be finite and nonnegative".into()));
                    }
                    if self.censoring == Censoring::None && final_hazard(x, &self.alphas) == 0.0 {
                        return Err(unbounded_follow_up());
                    }
                }
            }
        }
        Ok(())
    }
}

fn unbounded_follow_up() -> FicError {
    FicError::Validation("finite total hazard without censoring leaves follow-up unbounded".into())
}

fn final_hazard(x: &[f64], alphas: &[PiecewiseConstant]) -> f64 {
    x.iter().zip(alphas).map(|(xj, a)| xj * a.final_level()).sum()
}

/// Smallest `t` with `int_0^t x' alpha(u) du = target`; infinite when the
/// total hazard mass stays below the target.
pub fn invert_cumulative_hazard(x: &[f64], alphas: &[PiecewiseConstant], target: f64) -> f64 {
    let mut cuts: Vec<f64> = alphas.iter().flat_map(|a| a.breaks().iter().copied()).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let rate = |u: f64| -> f64 { x.iter().zip(alphas).map(|(xj, a)| xj * a.value(u)).sum() };
    let mut acc = 0.0;
    let mut start = 0.0;
    for &end in &cuts {
        let h = rate(start);
        if h > 0.0 && acc + h * (end - start) >= target {
            return start + (target - acc) / h;
        }
        acc += h * (end - start);
        start = end;
    }
    let h = rate(start);
    if h > 0.0 {
        start + (target - acc) / h
    } else {
        f64::INFINITY
    }
}

fn stream(seed: u64, id: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn draw_covariates(source: &CovariateSource, i: usize, seed: u64) -> Vec<f64> {
    match source {
        CovariateSource::Explicit(xs) => xs[i].clone(),
        CovariateSource::Gamma(spec) => {
            let mut rng = stream(seed, 2 * i as u64);
            spec.shape
                .iter()
                .zip(&spec.rate)
                .map(|(&a, &b)| Gamma::new(a, 1.0 / b).expect("validated gamma parameters").sample(&mut rng))
                .collect()
        }
    }
}

fn draw_record(cfg: &SimConfig, i: usize, x_seed: u64, t_seed: u64) -> SurvivalRecord {
    let x = draw_covariates(&cfg.covariates, i, x_seed);
    let mut rng = stream(t_seed, 2 * i as u64 + 1);
    let e: f64 = Exp1.sample(&mut rng);
    let t0 = invert_cumulative_hazard(&x, &cfg.alphas, e);
    let c = match cfg.censoring {
        Censoring::None => f64::INFINITY,
        Censoring::Exponential { rate } => {
            let z: f64 = Exp1.sample(&mut rng);
            z / rate
        }
        Censoring::Administrative { time } => time,
    };
    SurvivalRecord { time: t0.min(c), event: t0 < c, covariates: x }
}

fn simulate_with(cfg: &SimConfig, x_seed: u64, t_seed: u64) -> Result<Dataset> {
    let records: Vec<SurvivalRecord> = (0..cfg.n).into_par_iter().map(|i| draw_record(cfg, i, x_seed, t_seed)).collect();
    Dataset::new(records)
}

/// Draws one dataset; identical configurations give identical datasets.
pub fn simulate_dataset(cfg: &SimConfig) -> Result<Dataset> {
    cfg.validate()?;
    simulate_with(cfg, cfg.seed, cfg.seed)
}

/// SplitMix64 finaliser, used to derive per-replication seeds.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `k` under base seed `seed`.
pub fn replication_seed(seed: u64, k: usize) -> u64 {
    splitmix64(seed ^ splitmix64(k as u64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseReplication {
    pub mean: f64,
    pub se: f64,
    pub used: usize,
    pub dropped: usize,
    /// `n (H_I(t|x) - H(t|x))^2` per used replication, in replication order.
    pub losses: Vec<f64>,
}

/// Monte Carlo `n E{H_I(t|x) - H(t|x)}^2` for the submodel `set`.
pub fn replicate_mse(cfg: &SimConfig, set: &IndexSet, x: &[f64], t: f64, reps: usize) -> Result<MseReplication> {
    cfg.validate()?;
    let r = cfg.r();
    if set.r() != r {
        return Err(FicError::Dimension { expected: r, got: set.r() });
    }
    if x.len() != r {
        return Err(FicError::Dimension { expected: r, got: x.len() });
    }
    if reps < 2 {
        return Err(FicError::Validation("at least two replications are required".into()));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(FicError::Validation(format!("horizon t = {t} must be finite and nonnegative")));
    }
    let truth: f64 = x.iter().zip(&cfg.alphas).map(|(xj, a)| xj * a.integral(t)).sum();
    let outcomes = (0..reps)
        .into_par_iter()
        .map(|k| -> Result<Option<f64>> {
            let seed = replication_seed(cfg.seed, k);
            let x_seed = match cfg.mode {
                CovariateMode::Marginal => seed,
                CovariateMode::Conditional => cfg.seed,
            };
            let d = simulate_with(cfg, x_seed, seed)?;
            match fit_submodel(&d, set, t) {
                Ok(fit) => {
                    let est = fit.cumulative_hazard(x, t)?;
                    Ok(Some(cfg.n as f64 * (est - truth).powi(2)))
                }
                Err(FicError::Singular { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let losses: Vec<f64> = outcomes.iter().flatten().copied().collect();
    let dropped = reps - losses.len();
    if 2 * dropped > reps || losses.len() < 2 {
        return Err(FicError::TooManySingular { dropped, reps });
    }
    let m = losses.len() as f64;
    let mean = pairwise_sum(&losses) / m;
    let dev: Vec<f64> = losses.iter().map(|l| (l - mean).powi(2)).collect();
    let se = (pairwise_sum(&dev) / (m - 1.0) / m).sqrt();
    Ok(MseReplication { mean, se, used: losses.len(), dropped, losses })
}
