//! First-principles recomputation of every FIC ingredient: direct O(n^2)
//! sums over records at each event time and Gauss-Jordan inversion.
//! Deliberately shares no code with the library.
#![allow(dead_code)]

pub type Mat = Vec<Vec<f64>>;

pub struct Brute {
    pub grid: Vec<f64>,
    pub gn: Vec<Mat>,
    pub dahat: Vec<Vec<f64>>,
    pub datilde: Vec<Vec<f64>>,
    pub djhat: Vec<Mat>,
    pub dqhat: Vec<Mat>,
    pub sqb: f64,
    /// `n B^2 + sum b' dQ b`, the scale of the cancellation inside `sqb`.
    pub sqb_scale: f64,
    pub var: f64,
    pub fic: f64,
}

pub fn invert(m: &Mat) -> Option<Mat> {
    let k = m.len();
    let mut a: Mat = m
        .iter()
        .enumerate()
        .map(|(i, row)| row.iter().copied().chain((0..k).map(|j| (i == j) as u8 as f64)).collect())
        .collect();
    for c in 0..k {
        let p = (c..k).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        (a[p][c].abs() >= 1e-9).then_some(())?;
        a.swap(c, p);
        let piv = a[c][c];
        a[c].iter_mut().for_each(|v| *v /= piv);
        for i in (0..k).filter(|&i| i != c) {
            let f = a[i][c];
            let pivot_row = a[c].clone();
            a[i].iter_mut().zip(&pivot_row).for_each(|(v, p)| *v -= f * p);
        }
    }
    Some(a.into_iter().map(|r| r[k..].to_vec()).collect())
}

pub fn mul(a: &Mat, b: &Mat) -> Mat {
    (0..a.len())
        .map(|i| (0..b[0].len()).map(|j| (0..b.len()).map(|l| a[i][l] * b[l][j]).sum()).collect())
        .collect()
}

fn mv(a: &Mat, v: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(v).map(|(p, q)| p * q).sum()).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

fn block(m: &Mat, rows: &[usize], cols: &[usize]) -> Mat {
    rows.iter().map(|&i| cols.iter().map(|&j| m[i][j]).collect()).collect()
}

fn pick(v: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| v[i]).collect()
}

/// `recs` are (time, event, covariates); `keep` is a 0-based index set.
/// Returns None when any required matrix is singular at a grid time <= t.
pub fn brute(recs: &[(f64, bool, Vec<f64>)], keep: &[usize], x: &[f64], t: f64) -> Option<Brute> {
    let n = recs.len() as f64;
    let r = x.len();
    let drop: Vec<usize> = (0..r).filter(|j| !keep.contains(j)).collect();
    let mut grid: Vec<f64> = recs.iter().filter(|c| c.1 && c.0 <= t).map(|c| c.0).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut out = Brute {
        grid: grid.clone(), gn: vec![], dahat: vec![], datilde: vec![], djhat: vec![], dqhat: vec![],
        sqb: 0.0, sqb_scale: 0.0, var: 0.0, fic: 0.0,
    };
    let (mut bias, mut qterm) = (0.0, 0.0);
    for &u in &grid {
        let mut g = vec![vec![0.0; r]; r];
        let mut s = vec![0.0; r];
        for (ti, di, xi) in recs {
            for a in 0..r {
                (0..r).for_each(|b| g[a][b] += if *ti >= u { xi[a] * xi[b] / n } else { 0.0 });
                s[a] += if *di && *ti == u { xi[a] / n } else { 0.0 };
            }
        }
        let gi = invert(&g)?;
        let da = mv(&gi, &s);
        let g00i = invert(&block(&g, keep, keep))?;
        let dat = mv(&g00i, &pick(&s, keep));
        let mut dj = vec![vec![0.0; r]; r];
        for (_, _, xi) in recs.iter().filter(|c| c.0 >= u) {
            let h = dot(xi, &da);
            (0..r).for_each(|a| (0..r).for_each(|b| dj[a][b] += xi[a] * xi[b] * h / n));
        }
        let dq = block(&mul(&mul(&gi, &dj), &gi), &drop, &drop);
        let m = mul(&block(&g, &drop, keep), &g00i);
        let bvec: Vec<f64> = mv(&m, &pick(x, keep)).iter().zip(pick(x, &drop)).map(|(p, q)| p - q).collect();
        bias += dot(&bvec, &pick(&da, &drop));
        qterm += dot(&bvec, &mv(&dq, &bvec));
        let v = mv(&g00i, &pick(x, keep));
        out.var += dot(&v, &mv(&block(&dj, keep, keep), &v));
        out.gn.push(g);
        out.dahat.push(da);
        out.datilde.push(dat);
        out.djhat.push(dj);
        out.dqhat.push(dq);
    }
    out.sqb = n * bias * bias - qterm;
    out.sqb_scale = n * bias * bias + qterm.abs();
    out.fic = out.sqb.max(0.0) + out.var;
    Some(out)
}
