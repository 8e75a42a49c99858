//! Library-versus-brute-force comparison on one random dataset.
#![allow(dead_code)]

use aalen_fic::linalg::symmetric_rcond;
use aalen_fic::{
    fit_full, fit_submodel, gn_at, invertibility_horizon, jhat_increments, qhat_increments, Dataset, FicEngine,
    IndexSet, SurvivalRecord,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::brute::brute;
use super::random::{close, random_records, Raw};

pub const TOL: f64 = 1e-12;

pub struct Case {
    pub raw: Vec<Raw>,
    pub data: Dataset,
    pub set: IndexSet,
    pub x: Vec<f64>,
    pub t: f64,
}

/// A well-conditioned random case with `n <= 6`, `r <= 3`, or `None` when the
/// draw for `seed` is unusable.
pub fn case(seed: u64) -> Option<Case> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = rng.random_range(1..=3);
    let n = rng.random_range(r + 1..=6);
    let raw = random_records(&mut rng, n, r);
    let data = Dataset::new(
        raw.iter().map(|(t, e, x)| SurvivalRecord { time: *t, event: *e, covariates: x.clone() }).collect(),
    )
    .ok()?;
    let full = IndexSet::full(r);
    let t = invertibility_horizon(&data, &full);
    let grid = data.event_grid(t);
    if grid.is_empty() || grid.times.iter().any(|&u| symmetric_rcond(&gn_at(&data, u)) < 1e-2) {
        return None;
    }
    let mask: Vec<usize> = (0..r).filter(|_| rng.random_bool(0.5)).collect();
    let set = if mask.is_empty() { full } else { IndexSet::from_zero_based(mask, r).ok()? };
    let x = (0..r).map(|_| rng.random_range(0.0..2.0)).collect();
    Some(Case { raw, data, set, x, t })
}

fn check(what: &str, a: f64, b: f64) -> Result<(), String> {
    if close(a, b, TOL) {
        Ok(())
    } else {
        Err(format!("{what}: library {a:e} vs brute force {b:e}"))
    }
}

fn check_all<'a>(what: &str, a: impl IntoIterator<Item = &'a f64>, b: impl IntoIterator<Item = &'a f64>) -> Result<(), String> {
    let (a, b): (Vec<f64>, Vec<f64>) = (a.into_iter().copied().collect(), b.into_iter().copied().collect());
    if a.len() != b.len() {
        return Err(format!("{what}: length {} vs {}", a.len(), b.len()));
    }
    a.iter().zip(&b).try_for_each(|(p, q)| check(what, *p, *q))
}

/// Compares every FIC ingredient; `Err` names the first disagreement.
pub fn compare(c: &Case) -> Result<(), String> {
    let b = brute(&c.raw, c.set.indices(), &c.x, c.t).ok_or("brute force found a singular matrix")?;
    let e = |err: aalen_fic::FicError| err.to_string();
    let ahat = fit_full(&c.data, c.t).map_err(e)?;
    check_all("grid", &ahat.grid.times, &b.grid)?;
    for (k, &u) in b.grid.iter().enumerate() {
        let g = gn_at(&c.data, u);
        check_all("G_n", g.transpose().iter(), b.gn[k].iter().flatten())?;
    }
    check_all("A^", ahat.increments.iter().flatten(), b.dahat.iter().flatten())?;
    let atil = fit_submodel(&c.data, &c.set, c.t).map_err(e)?;
    check_all("A~_I", atil.increments.iter().flatten(), b.datilde.iter().flatten())?;
    let jhat = jhat_increments(&c.data, &ahat).map_err(e)?;
    for (m, bm) in jhat.increments.iter().zip(&b.djhat) {
        check_all("J^", m.transpose().iter(), bm.iter().flatten())?;
    }
    let engine = FicEngine::new(&c.data);
    let jeng = engine.jhat(c.t).map_err(e)?;
    for (m, bm) in jeng.increments.iter().zip(&b.djhat) {
        check_all("J^ (engine)", m.transpose().iter(), bm.iter().flatten())?;
    }
    let qhat = qhat_increments(&c.data, &ahat, &c.set).map_err(e)?;
    for (m, bm) in qhat.increments.iter().zip(&b.dqhat) {
        check_all("Q^", m.transpose().iter(), bm.iter().flatten())?;
    }
    let s = engine.fic_score(&c.set, &c.x, c.t).map_err(e)?;
    // sqb^ is a difference of two terms; compare on the scale of those terms.
    if (s.sqb_hat - b.sqb).abs() > TOL * b.sqb_scale.max(1.0) {
        return Err(format!("sqb^: library {:e} vs brute force {:e}", s.sqb_hat, b.sqb));
    }
    check("var^", s.var_hat, b.var)?;
    check("FIC", s.score, b.fic)
}

/// The first `count` usable cases in seed order.
pub fn cases(count: usize) -> Vec<Case> {
    (0u64..).filter_map(case).take(count).collect()
}
