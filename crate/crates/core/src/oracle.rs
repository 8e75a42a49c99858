//! Closed-form population risk for independent covariates with known Laplace
//! exponents and constant regressor functions `A_j(t) = alpha_j t`.
//!
//! With `E exp(-theta_j x_j) = exp(-M_j(theta_j))` and the derivatives of `M_j`
//! evaluated at `A_j(u)`:
//!
//! ```text
//! G(u)  = f(u) {D(u) + z(u) z(u)'} C(u),     f = exp(-sum_l M_l),  D = diag(-M''),  z = M'
//! b_I   = z_1 (z_0' D_0^{-1} x_I) / (1 + z_0' D_0^{-1} z_0) - x_II
//! dJ/du = f(u) {E(u) + F(u)} C(u)
//!   E_jj = M_j''' alpha_j - g M_j'',          g = sum_l M_l' alpha_l
//!   F_jk = -M_j' M_k'' alpha_k - M_j'' M_k' alpha_j + g M_j' M_k'
//! ```

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::aalen::IndexSet;
use crate::error::{FicError, Result};
use crate::linalg::{bilinear, select, select_vec, Factor};
use crate::quadrature::{integrate, Tolerance};

/// `(M, M', M'', M''')` at one argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceDerivatives {
    pub m: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

/// Independent covariate components described through their Laplace exponents.
pub trait IndependentCovariates: Sync {
    fn dim(&self) -> usize;
    fn laplace(&self, j: usize, theta: f64) -> Result<LaplaceDerivatives>;
    /// `E x_j`
    fn mean(&self, j: usize) -> f64 {
        self.laplace(j, 0.0).map(|l| l.d1).unwrap_or(f64::NAN)
    }
}

/// Independent `Gamma(shape_j, rate_j)` components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaCovariateSpec {
    pub shape: Vec<f64>,
    pub rate: Vec<f64>,
}

impl GammaCovariateSpec {
    pub fn new(shape: Vec<f64>, rate: Vec<f64>) -> Result<Self> {
        let spec = GammaCovariateSpec { shape, rate };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.shape.is_empty() || self.shape.len() != self.rate.len() {
            return Err(FicError::Validation("gamma spec needs equal-length, nonempty shape and rate".into()));
        }
        if self.shape.iter().chain(&self.rate).any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(FicError::Validation("gamma shapes and rates must be positive".into()));
        }
        Ok(())
    }

    /// `xi_j = E x_j = a_j / b_j`
    pub fn xi(&self, j: usize) -> f64 {
        self.shape[j] / self.rate[j]
    }
}

impl IndependentCovariates for GammaCovariateSpec {
    fn dim(&self) -> usize {
        self.shape.len()
    }

    fn laplace(&self, j: usize, theta: f64) -> Result<LaplaceDerivatives> {
        laplace_derivatives(self, j, theta)
    }
}

/// `M_j(theta) = a_j log(1 + theta / b_j)` and its first three derivatives.
pub fn laplace_derivatives(spec: &GammaCovariateSpec, j: usize, theta: f64) -> Result<LaplaceDerivatives> {
    let (a, b) = (spec.shape[j], spec.rate[j]);
    if theta.is_nan() || theta <= -b {
        return Err(FicError::Domain(format!("theta = {theta} must exceed -rate = {}", -b)));
    }
    let xi = a / b;
    let s = 1.0 + theta / b;
    Ok(LaplaceDerivatives {
        m: a * s.ln(),
        d1: xi / s,
        d2: -(xi / b) / (s * s),
        d3: 2.0 * (xi / (b * b)) / (s * s * s),
    })
}

/// Censoring survival function `C(u) = P(C >= u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Censoring {
    #[default]
    None,
    Exponential { rate: f64 },
    Administrative { time: f64 },
}

impl Censoring {
    pub fn survival(&self, u: f64) -> f64 {
        match *self {
            Censoring::None => 1.0,
            Censoring::Exponential { rate } => (-rate * u).exp(),
            Censoring::Administrative { time } => {
                if u <= time {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Censoring::None => Ok(()),
            Censoring::Exponential { rate } if rate > 0.0 && rate.is_finite() => Ok(()),
            Censoring::Administrative { time } if time > 0.0 && time.is_finite() => Ok(()),
            other => Err(FicError::Validation(format!("invalid censoring law {other:?}"))),
        }
    }
}

/// Population configuration for the exact risk calculations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub covariates: GammaCovariateSpec,
    pub alphas: Vec<f64>,
    #[serde(default)]
    pub censoring: Censoring,
    pub x: Vec<f64>,
    pub t: f64,
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        self.covariates.validate()?;
        self.censoring.validate()?;
        let r = self.covariates.dim();
        for (what, len) in [("alphas", self.alphas.len()), ("x", self.x.len())] {
            if len != r {
                return Err(FicError::Validation(format!("{what} has length {len}, expected {r}")));
            }
        }
        if self.alphas.iter().any(|&a| !(a >= 0.0 && a.is_finite())) {
            return Err(FicError::Validation("regressor levels must be nonnegative".into()));
        }
        if !(self.t >= 0.0 && self.t.is_finite()) {
            return Err(FicError::Validation(format!("horizon t = {} must be finite and nonnegative", self.t)));
        }
        Ok(())
    }

    pub fn model(&self) -> ExactModel<'_> {
        ExactModel { law: &self.covariates, alphas: &self.alphas, censoring: self.censoring }
    }
}

/// Closed-form population quantities for any independent covariate law.
#[derive(Clone, Copy)]
pub struct ExactModel<'a> {
    pub law: &'a dyn IndependentCovariates,
    pub alphas: &'a [f64],
    pub censoring: Censoring,
}

struct Pieces {
    f: f64,
    c: f64,
    lap: Vec<LaplaceDerivatives>,
}

impl ExactModel<'_> {
    fn r(&self) -> usize {
        self.alphas.len()
    }

    fn pieces(&self, u: f64) -> Result<Pieces> {
        let lap = (0..self.r())
            .map(|j| self.law.laplace(j, self.alphas[j] * u))
            .collect::<Result<Vec<_>>>()?;
        let f = (-lap.iter().map(|l| l.m).sum::<f64>()).exp();
        Ok(Pieces { f, c: self.censoring.survival(u), lap })
    }

    /// `D + z z'` without the `f C` factor.
    fn shape_matrix(p: &Pieces) -> DMatrix<f64> {
        let r = p.lap.len();
        DMatrix::from_fn(r, r, |j, k| p.lap[j].d1 * p.lap[k].d1 - if j == k { p.lap[j].d2 } else { 0.0 })
    }

    pub fn g(&self, u: f64) -> Result<DMatrix<f64>> {
        let p = self.pieces(u)?;
        Ok(Self::shape_matrix(&p) * (p.f * p.c))
    }

    /// Sherman-Morrison form of `G10 G00^{-1} x_I - x_II`; the scalar `f C` cancels.
    pub fn b(&self, set: &IndexSet, x: &[f64], u: f64) -> Result<Vec<f64>> {
        let a: Vec<f64> = self.alphas.iter().map(|al| al * u).collect();
        b_from_cumulative(self.law, set, x, &a)
    }

    /// Density of `dJ(u)` with respect to `du`.
    pub fn dj(&self, u: f64) -> Result<DMatrix<f64>> {
        let p = self.pieces(u)?;
        let r = self.r();
        let a = self.alphas;
        let l = &p.lap;
        let g: f64 = (0..r).map(|k| l[k].d1 * a[k]).sum();
        let scale = p.f * p.c;
        let mut m = DMatrix::zeros(r, r);
        for j in 0..r {
            for k in j..r {
                let e = if j == k { l[j].d3 * a[j] - g * l[j].d2 } else { 0.0 };
                let v = (e - l[j].d1 * l[k].d2 * a[k] - l[j].d2 * l[k].d1 * a[j] + g * l[j].d1 * l[k].d1) * scale;
                m[(j, k)] = v;
                m[(k, j)] = v;
            }
        }
        Ok(m)
    }

    /// `x_I' G00^{-1} dJ00 G00^{-1} x_I` per unit time.
    pub fn variance_density(&self, set: &IndexSet, x: &[f64], u: f64) -> Result<f64> {
        let keep = set.indices();
        let g00 = select(&self.g(u)?, keep, keep);
        let f = Factor::new(&g00).ok_or(FicError::Singular { time: u })?;
        let w = f.solve_vec(&select_vec(x, keep));
        Ok(bilinear(&w, &select(&self.dj(u)?, keep, keep), &w))
    }

    /// `b_I(u)' alpha_II`
    pub fn bias_density(&self, set: &IndexSet, x: &[f64], u: f64) -> Result<f64> {
        let b = self.b(set, x, u)?;
        Ok(set.complement().iter().zip(&b).map(|(&j, bj)| bj * self.alphas[j]).sum())
    }
}

/// `b_I` from the cumulative regressor values `A_j(u)` alone, so any
/// nonnegative regressor path can be used.
pub fn b_from_cumulative(
    law: &dyn IndependentCovariates,
    set: &IndexSet,
    x: &[f64],
    cumulative: &[f64],
) -> Result<Vec<f64>> {
    let lap = cumulative
        .iter()
        .enumerate()
        .map(|(j, &a)| law.laplace(j, a))
        .collect::<Result<Vec<_>>>()?;
    let mut zdx = 0.0;
    let mut zdz = 0.0;
    for &j in set.indices() {
        let dj = -lap[j].d2;
        zdx += lap[j].d1 * x[j] / dj;
        zdz += lap[j].d1 * lap[j].d1 / dj;
    }
    let ratio = zdx / (1.0 + zdz);
    Ok(set.complement().iter().map(|&j| lap[j].d1 * ratio - x[j]).collect())
}

/// Integrates a fallible integrand, surfacing the first evaluation error.
fn integrate_checked<F>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let failure = std::cell::RefCell::new(None);
    let q = integrate(
        |u| match f(u) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        },
        a,
        b,
        tol,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(q?.value)
}

pub fn g_exact(cfg: &OracleConfig, u: f64) -> Result<DMatrix<f64>> {
    cfg.validate()?;
    cfg.model().g(u)
}

pub fn b_exact(cfg: &OracleConfig, set: &IndexSet, u: f64) -> Result<Vec<f64>> {
    cfg.validate()?;
    cfg.model().b(set, &cfg.x, u)
}

/// The gamma-specific componentwise form
/// `b_j = g_I / (1 + sum_{I} b_k xi_k) * xi_j / (1 + A_j / b_j) - x_j`,
/// `g_I = sum_{k in I} (b_k + A_k) x_k`.
pub fn b_exact_gamma(cfg: &OracleConfig, set: &IndexSet, u: f64) -> Result<Vec<f64>> {
    cfg.validate()?;
    let spec = &cfg.covariates;
    let a = |j: usize| cfg.alphas[j] * u;
    let g_i: f64 = set.indices().iter().map(|&k| (spec.rate[k] + a(k)) * cfg.x[k]).sum();
    let denom = 1.0 + set.indices().iter().map(|&k| spec.rate[k] * spec.xi(k)).sum::<f64>();
    Ok(set
        .complement()
        .iter()
        .map(|&j| g_i / denom * spec.xi(j) / (1.0 + a(j) / spec.rate[j]) - cfg.x[j])
        .collect())
}

pub fn dj_exact(cfg: &OracleConfig, u: f64) -> Result<DMatrix<f64>> {
    cfg.validate()?;
    cfg.model().dj(u)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactRisk {
    /// `int_0^t b_I' dA_II`
    pub bias: f64,
    pub sqb: f64,
    pub var: f64,
    pub mse: f64,
}

fn check_horizon(cfg: &OracleConfig) -> Result<()> {
    cfg.validate()?;
    if cfg.censoring.survival(cfg.t) <= 0.0 {
        return Err(FicError::Domain(format!("no follow-up left at t = {}", cfg.t)));
    }
    Ok(())
}

fn exact_variance(cfg: &OracleConfig, set: &IndexSet) -> Result<f64> {
    let model = cfg.model();
    integrate_checked(|u| model.variance_density(set, &cfg.x, u), 0.0, cfg.t, Tolerance::default())
}

fn exact_bias(cfg: &OracleConfig, set: &IndexSet) -> Result<f64> {
    if set.is_full() {
        return Ok(0.0);
    }
    let model = cfg.model();
    integrate_checked(|u| model.bias_density(set, &cfg.x, u), 0.0, cfg.t, Tolerance::default())
}

/// `sqb = n (int b_I' dA_II)^2`, `var = x_I' int G00^{-1} dJ00 G00^{-1} x_I`.
pub fn exact_risk(cfg: &OracleConfig, set: &IndexSet, n: usize) -> Result<ExactRisk> {
    check_horizon(cfg)?;
    if set.r() != cfg.alphas.len() {
        return Err(FicError::Dimension { expected: cfg.alphas.len(), got: set.r() });
    }
    let bias = exact_bias(cfg, set)?;
    let var = exact_variance(cfg, set)?;
    let sqb = n as f64 * bias * bias;
    Ok(ExactRisk { bias, sqb, var, mse: sqb + var })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceRadius {
    /// `n (int b_I' dA_II)^2`
    pub lhs: f64,
    /// `var(full) - var(I)`
    pub rhs: f64,
    pub submodel_preferred: bool,
}

/// Whether the submodel's squared bias fits inside the variance it saves.
pub fn tolerance_radius(cfg: &OracleConfig, set: &IndexSet, n: usize) -> Result<ToleranceRadius> {
    let sub = exact_risk(cfg, set, n)?;
    let full = exact_variance(cfg, &IndexSet::full(set.r()))?;
    let rhs = full - sub.var;
    Ok(ToleranceRadius { lhs: sub.sqb, rhs, submodel_preferred: sub.sqb <= rhs })
}

/// Cumulative `int_0^u dJ` entrywise.
pub fn j_integral(cfg: &OracleConfig, a: f64, b: f64, tol: Tolerance) -> Result<DMatrix<f64>> {
    cfg.validate()?;
    let model = cfg.model();
    let r = cfg.alphas.len();
    let mut out = DMatrix::zeros(r, r);
    for j in 0..r {
        for k in j..r {
            let v = integrate_checked(|u| Ok(model.dj(u)?[(j, k)]), a, b, tol)?;
            out[(j, k)] = v;
            out[(k, j)] = v;
        }
    }
    Ok(out)
}

/// Mean covariate vector of the configured law.
pub fn covariate_mean(cfg: &OracleConfig) -> DVector<f64> {
    DVector::from_iterator(cfg.alphas.len(), (0..cfg.alphas.len()).map(|j| cfg.covariates.xi(j)))
}
