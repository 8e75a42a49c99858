//! Aalen least-squares estimators for the linear hazard model, full and
//! restricted to a covariate subset, plus the derived cumulative-hazard and
//! product-integral survival predictions.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, EventGrid};
use crate::error::{FicError, Result};
use crate::linalg::{select, symmetric_rcond, Factor, RCOND_THRESHOLD};

/// A nonempty subset of covariate positions, stored 0-based and sorted,
/// together with the ambient dimension `r` so the complement is derivable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndexSet {
    indices: Vec<usize>,
    r: usize,
}

impl IndexSet {
    /// Builds from 1-based indices, as users and file formats write them.
    pub fn new(one_based: &[usize], r: usize) -> Result<Self> {
        if one_based.iter().any(|&j| j == 0 || j > r) {
            return Err(FicError::Validation(format!(
                "index set {one_based:?} has entries outside 1..={r}"
            )));
        }
        Self::from_zero_based(one_based.iter().map(|j| j - 1).collect(), r)
    }

    pub fn from_zero_based(mut indices: Vec<usize>, r: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(FicError::Validation("index set must be nonempty".into()));
        }
        if indices.iter().any(|&j| j >= r) {
            return Err(FicError::Validation(format!("index set has entries outside dimension {r}")));
        }
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(FicError::Validation("index set has duplicate entries".into()));
        }
        Ok(IndexSet { indices, r })
    }

    pub fn full(r: usize) -> Self {
        IndexSet { indices: (0..r).collect(), r }
    }

    /// Kept positions, 0-based.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Dropped positions (the complement), 0-based.
    pub fn complement(&self) -> Vec<usize> {
        (0..self.r).filter(|j| self.indices.binary_search(j).is_err()).collect()
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.indices.iter().map(|j| j + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn is_full(&self) -> bool {
        self.indices.len() == self.r
    }

    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.one_based().iter().map(|j| j.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Parsimony-first order: fewer covariates, then lexicographic.
impl Ord for IndexSet {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.len().cmp(&other.len()).then_with(|| self.indices.cmp(&other.indices))
    }
}

impl PartialOrd for IndexSet {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// `G_n(u)` partitioned by a kept set and its complement.
#[derive(Debug, Clone)]
pub struct GnBlocks {
    pub full: DMatrix<f64>,
    pub g00: DMatrix<f64>,
    pub g01: DMatrix<f64>,
    pub g10: DMatrix<f64>,
    pub g11: DMatrix<f64>,
}

impl GnBlocks {
    pub fn partition(full: DMatrix<f64>, set: &IndexSet) -> Self {
        let keep = set.indices();
        let drop = set.complement();
        GnBlocks {
            g00: select(&full, keep, keep),
            g01: select(&full, keep, &drop),
            g10: select(&full, &drop, keep),
            g11: select(&full, &drop, &drop),
            full,
        }
    }
}

/// `G_n(u) = n^{-1} sum_i Y_i(u) x_i x_i'`.
pub fn gn_at(d: &Dataset, u: f64) -> DMatrix<f64> {
    let r = d.r();
    let n = d.n() as f64;
    let mut g = DMatrix::zeros(r, r);
    for &i in &d.canonical_order() {
        let rec = &d.records()[i];
        if rec.time >= u {
            let x = DVector::from_column_slice(&rec.covariates);
            g += &x * x.transpose();
        }
    }
    g / n
}

/// Risk-set sums at one event time, already divided by n.
pub(crate) struct GridSums<'a> {
    pub time: f64,
    /// `n^{-1} sum_{at risk} x x'`
    pub g: DMatrix<f64>,
    /// `n^{-1} sum_{events at u} x`
    pub s: DVector<f64>,
    /// `n^{-1} sum_{at risk} x x' x_l` for each l, when requested.
    pub third: Option<&'a [DMatrix<f64>]>,
}

type SweepRow = (f64, DMatrix<f64>, DVector<f64>, Option<Vec<DMatrix<f64>>>);

/// Visits event times <= tau in increasing order, supplying the risk-set sums
/// restricted to `columns`. Accumulation runs backwards in time over the
/// canonical record order, so results are independent of input order.
pub(crate) fn sweep<F>(d: &Dataset, columns: &[usize], tau: f64, with_third: bool, mut visit: F)
where
    F: FnMut(GridSums<'_>),
{
    let k = columns.len();
    let n = d.n() as f64;
    let order = d.canonical_order();
    let recs = d.records();
    let mut xx = DMatrix::<f64>::zeros(k, k);
    let mut third: Vec<DMatrix<f64>> = if with_third { vec![DMatrix::zeros(k, k); k] } else { Vec::new() };
    let mut out: Vec<SweepRow> = Vec::new();

    let mut pos = order.len();
    while pos > 0 {
        let time = recs[order[pos - 1]].time;
        let mut start = pos;
        while start > 0 && recs[order[start - 1]].time == time {
            start -= 1;
        }
        let mut events = DVector::<f64>::zeros(k);
        let mut any_event = false;
        for &i in order[start..pos].iter().rev() {
            let rec = &recs[i];
            let x = DVector::from_iterator(k, columns.iter().map(|&j| rec.covariates[j]));
            let outer = &x * x.transpose();
            if with_third {
                for (l, m) in third.iter_mut().enumerate() {
                    *m += &outer * x[l];
                }
            }
            xx += outer;
            if rec.event {
                events += &x;
                any_event = true;
            }
        }
        if any_event && time <= tau {
            let third_scaled = with_third.then(|| third.iter().map(|m| m / n).collect());
            out.push((time, &xx / n, events / n, third_scaled));
        }
        pos = start;
    }

    for (time, g, s, third) in out.into_iter().rev() {
        visit(GridSums { time, g, s, third: third.as_deref() });
    }
}

/// Aalen step-function estimate: one increment vector per event time.
#[derive(Debug, Clone, PartialEq)]
pub struct StepEstimate {
    pub index_set: IndexSet,
    pub grid: EventGrid,
    pub increments: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum IndexSpecWire {
    Named(String),
    List(Vec<usize>),
}

#[derive(Serialize, Deserialize)]
struct StepEstimateWire {
    index_set: IndexSpecWire,
    r: usize,
    grid: Vec<f64>,
    increments: Vec<Vec<f64>>,
}

impl Serialize for StepEstimate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let index_set = if self.index_set.is_full() {
            IndexSpecWire::Named("full".into())
        } else {
            IndexSpecWire::List(self.index_set.one_based())
        };
        StepEstimateWire {
            index_set,
            r: self.index_set.r(),
            grid: self.grid.times.clone(),
            increments: self.increments.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for StepEstimate {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let w = StepEstimateWire::deserialize(d)?;
        let index_set = match w.index_set {
            IndexSpecWire::Named(s) if s == "full" => IndexSet::full(w.r),
            IndexSpecWire::Named(s) => return Err(D::Error::custom(format!("unknown index set {s:?}"))),
            IndexSpecWire::List(l) => IndexSet::new(&l, w.r).map_err(D::Error::custom)?,
        };
        if w.grid.len() != w.increments.len() || w.increments.iter().any(|v| v.len() != index_set.len()) {
            return Err(D::Error::custom("increments do not match grid and index set"));
        }
        Ok(StepEstimate { index_set, grid: EventGrid { times: w.grid }, increments: w.increments })
    }
}

/// Product-integral survival value with a flag set when some factor
/// `1 - x' dA(u)` falls outside (0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalEstimate {
    pub value: f64,
    pub proper: bool,
}

impl StepEstimate {
    /// Cumulative coefficient vector at t (right-continuous, zero at t = 0).
    pub fn cumulative(&self, t: f64) -> Vec<f64> {
        let mut acc = vec![0.0; self.index_set.len()];
        for inc in &self.increments[..self.grid.window(f64::NEG_INFINITY, t).end] {
            acc.iter_mut().zip(inc).for_each(|(a, v)| *a += v);
        }
        acc
    }

    fn projected(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.index_set.r() {
            return Err(FicError::Dimension { expected: self.index_set.r(), got: x.len() });
        }
        Ok(self.index_set.indices().iter().map(|&j| x[j]).collect())
    }

    /// Jump of `x' A(u)` at each grid time.
    pub fn hazard_jumps(&self, x: &[f64]) -> Result<Vec<f64>> {
        let xi = self.projected(x)?;
        Ok(self.increments.iter().map(|inc| dot(&xi, inc)).collect())
    }

    pub fn cumulative_hazard(&self, x: &[f64], t: f64) -> Result<f64> {
        let xi = self.projected(x)?;
        Ok(dot(&xi, &self.cumulative(t)))
    }

    pub fn survival_estimate(&self, x: &[f64], t: f64) -> Result<SurvivalEstimate> {
        let jumps = self.hazard_jumps(x)?;
        let upto = self.grid.window(f64::NEG_INFINITY, t).end;
        let mut value = 1.0;
        let mut proper = true;
        for j in &jumps[..upto] {
            let factor = 1.0 - j;
            proper &= factor > 0.0 && factor <= 1.0;
            value *= factor;
        }
        Ok(SurvivalEstimate { value, proper })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Full-model Aalen estimator on event times <= tau.
pub fn fit_full(d: &Dataset, tau: f64) -> Result<StepEstimate> {
    fit_submodel(d, &IndexSet::full(d.r()), tau)
}

/// Aalen estimator using only the covariates in `set`.
pub fn fit_submodel(d: &Dataset, set: &IndexSet, tau: f64) -> Result<StepEstimate> {
    if set.r() != d.r() {
        return Err(FicError::Dimension { expected: d.r(), got: set.r() });
    }
    let mut grid = Vec::new();
    let mut increments = Vec::new();
    let mut failure = None;
    sweep(d, set.indices(), tau, false, |sums| {
        if failure.is_some() {
            return;
        }
        match Factor::new(&sums.g) {
            Some(f) => {
                grid.push(sums.time);
                increments.push(f.solve_vec(&sums.s).iter().copied().collect());
            }
            None => failure = Some(sums.time),
        }
    });
    if let Some(time) = failure {
        return Err(FicError::Singular { time });
    }
    Ok(StepEstimate { index_set: set.clone(), grid: EventGrid { times: grid }, increments })
}

/// Largest event time t such that the `set` block of `G_n` passes the
/// condition test at every event time <= t; 0 if there is none.
pub fn invertibility_horizon(d: &Dataset, set: &IndexSet) -> f64 {
    let mut horizon = 0.0;
    let mut broken = false;
    sweep(d, set.indices(), f64::INFINITY, false, |sums| {
        if broken {
            return;
        }
        if symmetric_rcond(&sums.g) >= RCOND_THRESHOLD {
            horizon = sums.time;
        } else {
            broken = true;
        }
    });
    horizon
}
