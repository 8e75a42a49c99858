//! Small random censored datasets with ties on a coarse time lattice.
#![allow(dead_code)]

use rand::Rng;

pub type Raw = (f64, bool, Vec<f64>);

pub fn random_records<R: Rng>(rng: &mut R, n: usize, r: usize) -> Vec<Raw> {
    (0..n)
        .map(|_| {
            let time = rng.random_range(1..=8) as f64 * 0.5;
            let event = rng.random_bool(0.8);
            let x = (0..r).map(|_| rng.random_range(0.1..3.0)).collect();
            (time, event, x)
        })
        .collect()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}
