//! Focussed information criteria for choosing covariate subsets in the
//! Aalen linear hazard model.
//!
//! For a candidate index set `I`, focal covariate vector `x` and window
//! `(t1, t2]`, the estimated risk of `x_I' A~_I` as an estimator of `x' A`
//! is split into a squared-bias part and a variance part:
//!
//! ```text
//! b(u)   = G10(u) G00(u)^{-1} x_I - x_II
//! sqb^   = n (sum_u b' dA^_II)^2 - sum_u b' dQ^ b
//! var^   = sum_u x_I' G00^{-1} dJ^_00 G00^{-1} x_I
//! FIC    = max(sqb^, 0) + var^
//! ```
//!
//! where `dJ^(u) = n^{-1} sum_i Y_i(u) x_i x_i' x_i' dA^(u)` uses the full-model
//! estimator and `dQ^` is the `II` block of `G^{-1} dJ^ G^{-1}`. All sums run
//! over event times; windows are half-open on the left so that variance and
//! bias sums are additive across adjacent windows.
//!
//! The weighted criterion averages the untruncated ingredients over a weight
//! measure first and truncates the averaged squared bias afterwards.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aalen::{gn_at, sweep, IndexSet, StepEstimate};
use crate::data::{Dataset, EventGrid};
use crate::error::{FicError, Result};
use crate::linalg::{bilinear, select, select_vec, Factor};

/// Largest dimension for which every subset is enumerated automatically.
pub const MAX_ENUMERATED_DIMENSION: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasFunctionSample {
    pub time: f64,
    pub values: Vec<f64>,
}

/// One symmetric matrix increment per grid time.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixIncrements {
    pub grid: EventGrid,
    pub increments: Vec<DMatrix<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FicScore {
    pub sqb_hat: f64,
    pub var_hat: f64,
    pub score: f64,
}

impl FicScore {
    fn from_parts(sqb_hat: f64, var_hat: f64) -> Self {
        FicScore { sqb_hat, var_hat, score: sqb_hat.max(0.0) + var_hat }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightPoint {
    pub x: Vec<f64>,
    pub t: f64,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightSpec {
    /// Finitely many focal points with nonnegative weights summing to one.
    Points(Vec<WeightPoint>),
    /// Fixed time, weights given by the empirical covariate distribution.
    EmpiricalCovariates { t: f64 },
}

impl WeightSpec {
    /// Equal weights over the given covariate vectors at one time.
    pub fn uniform(xs: &[Vec<f64>], t: f64) -> Self {
        let w = 1.0 / xs.len() as f64;
        WeightSpec::Points(xs.iter().map(|x| WeightPoint { x: x.clone(), t, w }).collect())
    }

    fn validate(&self, r: usize) -> Result<()> {
        match self {
            WeightSpec::Points(pts) => {
                if pts.is_empty() {
                    return Err(FicError::Validation("weight spec has no points".into()));
                }
                for (j, p) in pts.iter().enumerate() {
                    if p.x.len() != r {
                        return Err(FicError::Dimension { expected: r, got: p.x.len() });
                    }
                    if !(p.w >= 0.0 && p.w.is_finite()) || p.t.is_nan() || p.t < 0.0 {
                        return Err(FicError::Validation(format!("weight point {j} has invalid w or t")));
                    }
                }
                let total: f64 = pts.iter().map(|p| p.w).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(FicError::Validation(format!("weights sum to {total}, expected 1")));
                }
                Ok(())
            }
            WeightSpec::EmpiricalCovariates { t } if *t >= 0.0 => Ok(()),
            WeightSpec::EmpiricalCovariates { t } => {
                Err(FicError::Validation(format!("time must be nonnegative, got {t}")))
            }
        }
    }
}

/// What a report is focused on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Focal {
    Point { x: Vec<f64>, t: f64 },
    Interval { x: Vec<f64>, t1: f64, t2: f64 },
    Weighted(WeightSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateScore {
    pub index_set: IndexSet,
    pub sqb_hat: Option<f64>,
    pub var_hat: Option<f64>,
    pub score: Option<f64>,
    pub feasible: bool,
    pub reason: Option<String>,
    /// Set when the variance estimate came out negative; it is reported unmodified.
    pub negative_variance: bool,
}

/// Ranked scores for one focal specification. Serialized with 1-based index
/// lists: `{r, focal, candidates: [{I, sqb_hat, var_hat, score, feasible}], winner}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FicReport {
    pub focal: Focal,
    /// Feasible candidates by ascending score, then infeasible ones in input order.
    pub candidates: Vec<CandidateScore>,
    pub winner: Option<IndexSet>,
}

impl FicReport {
    pub fn feasible(&self) -> impl Iterator<Item = &CandidateScore> {
        self.candidates.iter().filter(|c| c.feasible)
    }

    pub fn infeasible(&self) -> impl Iterator<Item = &CandidateScore> {
        self.candidates.iter().filter(|c| !c.feasible)
    }
}

#[derive(Serialize, Deserialize)]
struct CandidateWire {
    #[serde(rename = "I")]
    index_set: Vec<usize>,
    sqb_hat: Option<f64>,
    var_hat: Option<f64>,
    score: Option<f64>,
    feasible: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    negative_variance: bool,
}

#[derive(Serialize, Deserialize)]
struct ReportWire {
    r: usize,
    focal: Focal,
    candidates: Vec<CandidateWire>,
    winner: Option<Vec<usize>>,
}

impl Serialize for FicReport {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let r = self.candidates.first().map_or(0, |c| c.index_set.r());
        ReportWire {
            r,
            focal: self.focal.clone(),
            candidates: self
                .candidates
                .iter()
                .map(|c| CandidateWire {
                    index_set: c.index_set.one_based(),
                    sqb_hat: c.sqb_hat,
                    var_hat: c.var_hat,
                    score: c.score,
                    feasible: c.feasible,
                    reason: c.reason.clone(),
                    negative_variance: c.negative_variance,
                })
                .collect(),
            winner: self.winner.as_ref().map(IndexSet::one_based),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FicReport {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let w = ReportWire::deserialize(d)?;
        let set = |ix: &[usize]| IndexSet::new(ix, w.r).map_err(D::Error::custom);
        let candidates = w
            .candidates
            .iter()
            .map(|c| {
                Ok(CandidateScore {
                    index_set: set(&c.index_set)?,
                    sqb_hat: c.sqb_hat,
                    var_hat: c.var_hat,
                    score: c.score,
                    feasible: c.feasible,
                    reason: c.reason.clone(),
                    negative_variance: c.negative_variance,
                })
            })
            .collect::<std::result::Result<_, D::Error>>()?;
        let winner = w.winner.as_deref().map(set).transpose()?;
        Ok(FicReport { focal: w.focal, candidates, winner })
    }
}

/// Per-event-time quantities of the full model, computed once and shared by
/// every candidate, focal point and window.
#[derive(Debug, Clone)]
pub struct FicEngine {
    n: usize,
    r: usize,
    grid: Vec<f64>,
    g: Vec<DMatrix<f64>>,
    dahat: Vec<DVector<f64>>,
    djhat: Vec<DMatrix<f64>>,
    /// `G^{-1} dJ^ G^{-1}`
    sandwich: Vec<DMatrix<f64>>,
    /// First event time at which the full `G_n` fails the condition test.
    first_singular: Option<f64>,
    /// `n^{-1} sum_i x_i x_i'` over all records.
    second_moment: DMatrix<f64>,
}

/// Raw window sums for one (I, x, window).
#[derive(Debug, Clone, Copy)]
struct WindowSums {
    bias: f64,
    qterm: f64,
    var: f64,
}

impl FicEngine {
    pub fn new(d: &Dataset) -> Self {
        let r = d.r();
        let all: Vec<usize> = (0..r).collect();
        let mut engine = FicEngine {
            n: d.n(),
            r,
            grid: Vec::new(),
            g: Vec::new(),
            dahat: Vec::new(),
            djhat: Vec::new(),
            sandwich: Vec::new(),
            first_singular: None,
            second_moment: DMatrix::zeros(r, r),
        };
        sweep(d, &all, f64::INFINITY, true, |sums| {
            if engine.first_singular.is_some() {
                return;
            }
            let Some(f) = Factor::new(&sums.g) else {
                engine.first_singular = Some(sums.time);
                return;
            };
            let da = f.solve_vec(&sums.s);
            let third = sums.third.expect("third moments requested");
            let mut dj = DMatrix::zeros(r, r);
            for (l, m) in third.iter().enumerate() {
                dj += m * da[l];
            }
            let ginv = f.inverse();
            engine.sandwich.push(&ginv * &dj * &ginv);
            engine.grid.push(sums.time);
            engine.g.push(sums.g);
            engine.dahat.push(da);
            engine.djhat.push(dj);
        });
        let n = d.n() as f64;
        for &i in &d.canonical_order() {
            let x = DVector::from_column_slice(&d.records()[i].covariates);
            engine.second_moment += &x * x.transpose();
        }
        engine.second_moment /= n;
        engine
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// Event times at which the full model is estimable.
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn first_singular(&self) -> Option<f64> {
        self.first_singular
    }

    /// Full-model estimate on event times <= tau.
    pub fn full_estimate(&self, tau: f64) -> Result<StepEstimate> {
        self.require_through(tau)?;
        let end = self.grid.partition_point(|&u| u <= tau);
        Ok(StepEstimate {
            index_set: IndexSet::full(self.r),
            grid: EventGrid { times: self.grid[..end].to_vec() },
            increments: self.dahat[..end].iter().map(|v| v.iter().copied().collect()).collect(),
        })
    }

    /// `dJ^` increments on event times <= tau.
    pub fn jhat(&self, tau: f64) -> Result<MatrixIncrements> {
        self.require_through(tau)?;
        let end = self.grid.partition_point(|&u| u <= tau);
        Ok(MatrixIncrements {
            grid: EventGrid { times: self.grid[..end].to_vec() },
            increments: self.djhat[..end].to_vec(),
        })
    }

    fn require_through(&self, t: f64) -> Result<()> {
        match self.first_singular {
            Some(time) if time <= t => Err(FicError::Singular { time }),
            _ => Ok(()),
        }
    }

    fn check(&self, set: &IndexSet, x: &[f64]) -> Result<()> {
        if set.r() != self.r {
            return Err(FicError::Dimension { expected: self.r, got: set.r() });
        }
        if x.len() != self.r {
            return Err(FicError::Dimension { expected: self.r, got: x.len() });
        }
        Ok(())
    }

    fn window_range(&self, t1: f64, t2: f64) -> std::ops::Range<usize> {
        let lo = self.grid.partition_point(|&u| u <= t1);
        let hi = self.grid.partition_point(|&u| u <= t2);
        lo..hi.max(lo)
    }

    fn window_sums(&self, set: &IndexSet, x: &[f64], t1: f64, t2: f64) -> Result<WindowSums> {
        self.check(set, x)?;
        if !(t1 >= 0.0 && t1 <= t2) {
            return Err(FicError::Validation(format!("invalid window ({t1}, {t2}]")));
        }
        self.require_through(t2)?;
        let keep = set.indices();
        let drop = set.complement();
        let x_keep = select_vec(x, keep);
        let x_drop = select_vec(x, &drop);
        let mut sums = WindowSums { bias: 0.0, qterm: 0.0, var: 0.0 };
        for k in self.window_range(t1, t2) {
            let g00 = select(&self.g[k], keep, keep);
            let f = Factor::new(&g00).ok_or(FicError::Singular { time: self.grid[k] })?;
            let w = f.solve_vec(&x_keep);
            let dj00 = select(&self.djhat[k], keep, keep);
            sums.var += bilinear(&w, &dj00, &w);
            if !drop.is_empty() {
                let b = select(&self.g[k], &drop, keep) * &w - &x_drop;
                let da_drop = select_vec(self.dahat[k].as_slice(), &drop);
                sums.bias += b.dot(&da_drop);
                sums.qterm += bilinear(&b, &select(&self.sandwich[k], &drop, &drop), &b);
            }
        }
        Ok(sums)
    }

    fn score_from(&self, s: WindowSums) -> FicScore {
        FicScore::from_parts(self.n as f64 * s.bias * s.bias - s.qterm, s.var)
    }

    pub fn sqb_hat(&self, set: &IndexSet, x: &[f64], t: f64) -> Result<f64> {
        Ok(self.fic_score(set, x, t)?.sqb_hat)
    }

    pub fn var_hat(&self, set: &IndexSet, x: &[f64], t: f64) -> Result<f64> {
        Ok(self.window_sums(set, x, 0.0, t)?.var)
    }

    pub fn fic_score(&self, set: &IndexSet, x: &[f64], t: f64) -> Result<FicScore> {
        self.fic_interval(set, x, 0.0, t)
    }

    /// Criterion for `H(t2|x) - H(t1|x)`: sums restricted to (t1, t2].
    pub fn fic_interval(&self, set: &IndexSet, x: &[f64], t1: f64, t2: f64) -> Result<FicScore> {
        Ok(self.score_from(self.window_sums(set, x, t1, t2)?))
    }

    /// `B^_I(t) = sum_u G00^{-1} G01 dA^_II`, the drift picked up by the
    /// submodel estimator from the omitted covariates.
    pub fn drift(&self, set: &IndexSet, t: f64) -> Result<Vec<f64>> {
        self.require_through(t)?;
        let keep = set.indices();
        let drop = set.complement();
        let mut acc = DVector::zeros(keep.len());
        if drop.is_empty() {
            return Ok(acc.iter().copied().collect());
        }
        for k in self.window_range(0.0, t) {
            let f = Factor::new(&select(&self.g[k], keep, keep))
                .ok_or(FicError::Singular { time: self.grid[k] })?;
            let rhs = select(&self.g[k], keep, &drop) * select_vec(self.dahat[k].as_slice(), &drop);
            acc += f.solve_vec(&rhs);
        }
        Ok(acc.iter().copied().collect())
    }

    /// Weighted criterion; the truncation at zero is applied to the weighted
    /// squared-bias sum, not to the individual terms.
    pub fn wfic_score(&self, set: &IndexSet, w: &WeightSpec) -> Result<FicScore> {
        w.validate(self.r)?;
        match w {
            WeightSpec::Points(pts) => {
                let mut w_sqb = 0.0;
                let mut w_var = 0.0;
                for (j, p) in pts.iter().enumerate() {
                    let s = self.fic_score(set, &p.x, p.t).map_err(|e| match e {
                        FicError::Dimension { .. } => e,
                        other => FicError::InfeasiblePoint {
                            index: j,
                            x: p.x.clone(),
                            t: p.t,
                            reason: other.to_string(),
                        },
                    })?;
                    w_sqb += p.w * s.sqb_hat;
                    w_var += p.w * s.var_hat;
                }
                Ok(FicScore::from_parts(w_sqb, w_var))
            }
            WeightSpec::EmpiricalCovariates { t } => self.wfic_empirical(set, *t),
        }
    }

    /// Empirical-covariate weighting in closed form: trace of the integrated
    /// sandwich against the covariate second moment for the variance, and the
    /// drift `B^_I` for the squared bias.
    fn wfic_empirical(&self, set: &IndexSet, t: f64) -> Result<FicScore> {
        if set.r() != self.r {
            return Err(FicError::Dimension { expected: self.r, got: set.r() });
        }
        self.require_through(t).map_err(|e| FicError::InfeasiblePoint {
            index: 0,
            x: Vec::new(),
            t,
            reason: e.to_string(),
        })?;
        let keep = set.indices();
        let drop = set.complement();
        let s00 = select(&self.second_moment, keep, keep);
        let mut var_integral = DMatrix::zeros(keep.len(), keep.len());
        let mut qterm = 0.0;
        let mut a_drop = DVector::zeros(drop.len());
        let mut drift = DVector::zeros(keep.len());
        for k in self.window_range(0.0, t) {
            let g00 = select(&self.g[k], keep, keep);
            let f = Factor::new(&g00).ok_or(FicError::Singular { time: self.grid[k] })?;
            let g00inv = f.inverse();
            var_integral += &g00inv * select(&self.djhat[k], keep, keep) * &g00inv;
            if drop.is_empty() {
                continue;
            }
            let da_drop = select_vec(self.dahat[k].as_slice(), &drop);
            let g01 = select(&self.g[k], keep, &drop);
            drift += &g00inv * (&g01 * &da_drop);
            a_drop += &da_drop;
            // b_i = L x_i with L = [G10 G00^{-1}, -I] in (I, II) coordinates
            let m = g01.transpose() * &g00inv;
            let mut l = DMatrix::zeros(drop.len(), self.r);
            for (c, &j) in keep.iter().enumerate() {
                l.set_column(j, &m.column(c));
            }
            for (c, &j) in drop.iter().enumerate() {
                l[(c, j)] = -1.0;
            }
            let bb = &l * &self.second_moment * l.transpose();
            qterm += (select(&self.sandwich[k], &drop, &drop) * bb).trace();
        }
        let w_var = (var_integral * s00).trace();
        // sum_i (x_iI' B - x_iII' A_II)^2 = n c' S c
        let mut c = DVector::zeros(self.r);
        for (p, &j) in keep.iter().enumerate() {
            c[j] = drift[p];
        }
        for (p, &j) in drop.iter().enumerate() {
            c[j] = -a_drop[p];
        }
        let w_sqb = self.n as f64 * bilinear(&c, &self.second_moment, &c) - qterm;
        Ok(FicScore::from_parts(w_sqb, w_var))
    }

    fn score_focal(&self, set: &IndexSet, focal: &Focal) -> Result<FicScore> {
        match focal {
            Focal::Point { x, t } => self.fic_score(set, x, *t),
            Focal::Interval { x, t1, t2 } => self.fic_interval(set, x, *t1, *t2),
            Focal::Weighted(w) => self.wfic_score(set, w),
        }
    }

    /// Scores every candidate; infeasible ones are listed after the ranking.
    pub fn report(&self, candidates: &[IndexSet], focal: &Focal) -> Result<FicReport> {
        if candidates.is_empty() {
            return Err(FicError::Validation("no candidate models given".into()));
        }
        let scored: Vec<CandidateScore> = candidates
            .par_iter()
            .map(|set| match self.score_focal(set, focal) {
                Ok(s) => Ok(CandidateScore {
                    index_set: set.clone(),
                    sqb_hat: Some(s.sqb_hat),
                    var_hat: Some(s.var_hat),
                    score: Some(s.score),
                    feasible: true,
                    reason: None,
                    negative_variance: s.var_hat < 0.0,
                }),
                Err(e @ (FicError::Dimension { .. } | FicError::Validation(_))) => Err(e),
                Err(e) => Ok(CandidateScore {
                    index_set: set.clone(),
                    sqb_hat: None,
                    var_hat: None,
                    score: None,
                    feasible: false,
                    reason: Some(e.to_string()),
                    negative_variance: false,
                }),
            })
            .collect::<Result<_>>()?;
        let (mut ok, bad): (Vec<_>, Vec<_>) = scored.into_iter().partition(|c| c.feasible);
        ok.sort_by(|a, b| {
            a.score
                .unwrap()
                .total_cmp(&b.score.unwrap())
                .then_with(|| a.index_set.cmp(&b.index_set))
        });
        let winner = ok.first().map(|c| c.index_set.clone());
        ok.extend(bad);
        Ok(FicReport { focal: focal.clone(), candidates: ok, winner })
    }

    pub fn rank_models(&self, candidates: &[IndexSet], focal: &Focal) -> Result<FicReport> {
        let report = self.report(candidates, focal)?;
        if report.winner.is_none() {
            return Err(FicError::AllInfeasible);
        }
        Ok(report)
    }

    /// One report per window `[max(0, c - delta), c + delta]`; windows where
    /// nothing is feasible keep `winner = None`.
    pub fn gliding_window(
        &self,
        candidates: &[IndexSet],
        x: &[f64],
        centers: &[f64],
        delta: f64,
    ) -> Result<Vec<FicReport>> {
        if delta.is_nan() || delta <= 0.0 {
            return Err(FicError::Validation(format!("window half-width must be positive, got {delta}")));
        }
        centers
            .iter()
            .map(|&c| {
                let focal = Focal::Interval { x: x.to_vec(), t1: (c - delta).max(0.0), t2: c + delta };
                self.report(candidates, &focal)
            })
            .collect()
    }
}

/// `b_{I,n}(u, x) = G10(u) G00(u)^{-1} x_I - x_II`, evaluated at any time u.
pub fn bias_function(d: &Dataset, set: &IndexSet, x: &[f64], u: f64) -> Result<BiasFunctionSample> {
    if x.len() != d.r() || set.r() != d.r() {
        return Err(FicError::Dimension { expected: d.r(), got: x.len() });
    }
    let g = gn_at(d, u);
    let keep = set.indices();
    let drop = set.complement();
    let f = Factor::new(&select(&g, keep, keep)).ok_or(FicError::Singular { time: u })?;
    let w = f.solve_vec(&select_vec(x, keep));
    let b = select(&g, &drop, keep) * w - select_vec(x, &drop);
    Ok(BiasFunctionSample { time: u, values: b.iter().copied().collect() })
}

/// `dJ^(u) = n^{-1} sum_i Y_i(u) x_i x_i' (x_i' dA^(u))` at the grid of a
/// full-model fit, summed record by record.
pub fn jhat_increments(d: &Dataset, ahat: &StepEstimate) -> Result<MatrixIncrements> {
    if !ahat.index_set.is_full() || ahat.index_set.r() != d.r() {
        return Err(FicError::Validation("jhat needs a full-model estimate fitted on the same data".into()));
    }
    let n = d.n() as f64;
    let order = d.canonical_order();
    let increments = ahat
        .grid
        .times
        .iter()
        .zip(&ahat.increments)
        .map(|(&u, da)| {
            let da = DVector::from_column_slice(da);
            let mut m = DMatrix::zeros(d.r(), d.r());
            for &i in &order {
                let rec = &d.records()[i];
                if rec.time >= u {
                    let x = DVector::from_column_slice(&rec.covariates);
                    m += &x * x.transpose() * x.dot(&da);
                }
            }
            m / n
        })
        .collect();
    Ok(MatrixIncrements { grid: ahat.grid.clone(), increments })
}

/// `dQ^(u)`: the `II` block of `G_n^{-1} dJ^ G_n^{-1}`.
pub fn qhat_increments(d: &Dataset, ahat: &StepEstimate, set: &IndexSet) -> Result<MatrixIncrements> {
    if set.r() != d.r() {
        return Err(FicError::Dimension { expected: d.r(), got: set.r() });
    }
    let jhat = jhat_increments(d, ahat)?;
    let drop = set.complement();
    let increments = jhat
        .grid
        .times
        .iter()
        .zip(&jhat.increments)
        .map(|(&u, dj)| {
            let f = Factor::new(&gn_at(d, u)).ok_or(FicError::Singular { time: u })?;
            let ginv = f.inverse();
            Ok(select(&(&ginv * dj * &ginv), &drop, &drop))
        })
        .collect::<Result<_>>()?;
    Ok(MatrixIncrements { grid: jhat.grid, increments })
}

pub fn sqb_hat(d: &Dataset, set: &IndexSet, x: &[f64], t: f64) -> Result<f64> {
    FicEngine::new(d).sqb_hat(set, x, t)
}

pub fn var_hat(d: &Dataset, set: &IndexSet, x: &[f64], t: f64) -> Result<f64> {
    FicEngine::new(d).var_hat(set, x, t)
}

pub fn fic_score(d: &Dataset, set: &IndexSet, x: &[f64], t: f64) -> Result<FicScore> {
    FicEngine::new(d).fic_score(set, x, t)
}

pub fn fic_interval(d: &Dataset, set: &IndexSet, x: &[f64], t1: f64, t2: f64) -> Result<FicScore> {
    FicEngine::new(d).fic_interval(set, x, t1, t2)
}

pub fn gliding_window(
    d: &Dataset,
    candidates: &[IndexSet],
    x: &[f64],
    centers: &[f64],
    delta: f64,
) -> Result<Vec<FicReport>> {
    FicEngine::new(d).gliding_window(candidates, x, centers, delta)
}

pub fn wfic_score(d: &Dataset, set: &IndexSet, w: &WeightSpec) -> Result<FicScore> {
    FicEngine::new(d).wfic_score(set, w)
}

pub fn rank_models(d: &Dataset, candidates: &[IndexSet], focal: &Focal) -> Result<FicReport> {
    FicEngine::new(d).rank_models(candidates, focal)
}

/// All nonempty subsets of `{0..r-1}` containing `protected` (0-based), in
/// parsimony-first order.
pub fn enumerate_candidates(r: usize, protected: &[usize]) -> Result<Vec<IndexSet>> {
    if r == 0 || r > MAX_ENUMERATED_DIMENSION {
        return Err(FicError::Validation(format!(
            "automatic candidate enumeration needs 1 <= r <= {MAX_ENUMERATED_DIMENSION}, got {r}"
        )));
    }
    if protected.iter().any(|&j| j >= r) {
        return Err(FicError::Validation("protected index outside covariate dimension".into()));
    }
    let must: u32 = protected.iter().fold(0, |m, &j| m | (1 << j));
    let mut out: Vec<IndexSet> = (1u32..(1 << r))
        .filter(|mask| mask & must == must)
        .map(|mask| IndexSet::from_zero_based((0..r).filter(|j| mask >> j & 1 == 1).collect(), r))
        .collect::<Result<_>>()?;
    out.sort();
    Ok(out)
}
