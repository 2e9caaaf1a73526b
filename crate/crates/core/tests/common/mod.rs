//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use bigmovie_core::regress::{LinearModel, ModelKind};
use bigmovie_core::tensor::{AcquaintanceTensor, TensorEntry};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Accelerated projected gradient on the non-negative Lasso objective
/// `||y - Xw - b||^2 + lambda * sum(w)` over `w >= 0`, `b` free.
/// Returns `(w, b, objective)`.
pub fn lasso_pg_oracle(
    x: &[Vec<f64>],
    y: &[f64],
    lambda: f64,
    iters: usize,
) -> (Vec<f64>, f64, f64) {
    let n = x.len();
    let p = x[0].len();
    // Augmented design [X, 1]; Lipschitz bound 2 * ||A||_F^2.
    let frob: f64 = x.iter().flatten().map(|v| v * v).sum::<f64>() + n as f64;
    let step = 1.0 / (2.0 * frob);

    let objective = |th: &[f64]| -> f64 {
        let mut rss = 0.0;
        for i in 0..n {
            let pred: f64 = (0..p).map(|j| x[i][j] * th[j]).sum::<f64>() + th[p];
            rss += (y[i] - pred).powi(2);
        }
        rss + lambda * th[..p].iter().sum::<f64>()
    };
    let gradient = |th: &[f64]| -> Vec<f64> {
        let mut g = vec![0.0; p + 1];
        for i in 0..n {
            let pred: f64 = (0..p).map(|j| x[i][j] * th[j]).sum::<f64>() + th[p];
            let r = pred - y[i];
            for j in 0..p {
                g[j] += 2.0 * r * x[i][j];
            }
            g[p] += 2.0 * r;
        }
        for gj in g.iter_mut().take(p) {
            *gj += lambda;
        }
        g
    };
    let proj = |th: &mut [f64]| {
        for v in th.iter_mut().take(p) {
            *v = v.max(0.0);
        }
    };

    let mut th = vec![0.0; p + 1];
    let mut z = th.clone();
    let mut t = 1.0f64;
    let mut f_prev = objective(&th);
    for _ in 0..iters {
        let g = gradient(&z);
        let mut next: Vec<f64> = z.iter().zip(&g).map(|(zi, gi)| zi - step * gi).collect();
        proj(&mut next);
        let moved = next
            .iter()
            .zip(&th)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let f_next = objective(&next);
        if f_next > f_prev {
            // Restart momentum.
            t = 1.0;
            z = th.clone();
            continue;
        }
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let mom = (t - 1.0) / t_next;
        z = next
            .iter()
            .zip(&th)
            .map(|(a, b)| a + mom * (a - b))
            .collect();
        th = next;
        t = t_next;
        f_prev = f_next;
        if moved < 1e-14 {
            break;
        }
    }
    let f = objective(&th);
    let b = th[p];
    th.truncate(p);
    (th, b, f)
}

/// Dense symmetric tensor `W[n][m][l]` with zero diagonal.
pub fn dense_tensor(t: &AcquaintanceTensor) -> Vec<Vec<Vec<u64>>> {
    let (c, g) = (t.crew_len(), t.genre_len());
    let mut w = vec![vec![vec![0u64; g]; c]; c];
    for e in t.entries() {
        w[e.n][e.m][e.l] += e.count;
        w[e.m][e.n][e.l] += e.count;
    }
    w
}

/// Triple loop over every `(n, m, l)`.
pub fn dense_acquaintance(w: &[Vec<Vec<u64>>], x: &[f64]) -> f64 {
    let c = w.len();
    let mut s = 0.0;
    for n in 0..c {
        for m in 0..c {
            for (l, &count) in w[n][m].iter().enumerate() {
                s += count as f64 * x[n] * x[m] * x[c + l];
            }
        }
    }
    s
}

pub fn random_tensor(
    r: &mut ChaCha8Rng,
    c: usize,
    g: usize,
    density: f64,
    max_count: u64,
) -> AcquaintanceTensor {
    let mut entries = Vec::new();
    for n in 0..c {
        for m in n + 1..c {
            for l in 0..g {
                if r.random_bool(density) {
                    entries.push(TensorEntry {
                        n,
                        m,
                        l,
                        count: r.random_range(1..=max_count),
                    });
                }
            }
        }
    }
    AcquaintanceTensor::from_entries(c, g, entries).unwrap()
}

/// Euclidean projection onto `{x in [0,1]^n : w.x <= c}` by enumerating
/// every active set: each coordinate at 0, at 1 or free, and the budget
/// constraint active or not. Exponential; only for small `n`.
pub fn projection_oracle(y: &[f64], w: &[f64], c: f64) -> Vec<f64> {
    let n = y.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut states = vec![0u8; n];
    loop {
        for budget_active in [false, true] {
            let mut x = vec![0.0; n];
            let mut ok = true;
            let free: Vec<usize> = (0..n).filter(|&i| states[i] == 2).collect();
            for i in 0..n {
                x[i] = match states[i] {
                    0 => 0.0,
                    1 => 1.0,
                    _ => y[i],
                };
            }
            if budget_active {
                let wf: f64 = free.iter().map(|&i| w[i] * w[i]).sum();
                if wf == 0.0 {
                    ok = false;
                } else {
                    let load: f64 = (0..n).map(|i| w[i] * x[i]).sum();
                    let mu = (load - c) / wf;
                    if mu < 0.0 {
                        ok = false;
                    }
                    for &i in &free {
                        x[i] = y[i] - mu * w[i];
                    }
                }
            }
            let load: f64 = (0..n).map(|i| w[i] * x[i]).sum();
            if ok && x.iter().all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v)) && load <= c + 1e-12 {
                let d: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
                if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                    best = Some((d, x));
                }
            }
        }
        // Next ternary assignment.
        let mut k = 0;
        while k < n && states[k] == 2 {
            states[k] = 0;
            k += 1;
        }
        if k == n {
            break;
        }
        states[k] += 1;
    }
    best.expect("projection set is non-empty").1
}

/// Random planning instance: `c` crew and `g` genres, every position a
/// candidate. Budget is a random fraction of the total cost.
pub struct Instance {
    pub gross: LinearModel,
    pub budget: LinearModel,
    pub tensor: AcquaintanceTensor,
    pub cap: f64,
}

pub fn random_instance(r: &mut ChaCha8Rng, c: usize, g: usize) -> Instance {
    let n = c + g;
    let blocks = [c, 0, 0, 0, g];
    let mut gw = vec![0.0];
    gw.extend((0..n).map(|_| {
        if r.random_bool(0.2) {
            0.0
        } else {
            r.random_range(0.0..10.0)
        }
    }));
    let bw: Vec<f64> = (0..n).map(|_| r.random_range(0.5..5.0)).collect();
    let total: f64 = bw.iter().sum();
    let cap = total * r.random_range(0.25..0.6);
    Instance {
        gross: LinearModel {
            kind: ModelKind::Gross,
            intercept: 0.0,
            weights: gw,
            lambda: 0.0,
            feature_block_sizes: blocks,
        },
        budget: LinearModel {
            kind: ModelKind::Budget,
            intercept: 0.0,
            weights: bw,
            lambda: 0.0,
            feature_block_sizes: blocks,
        },
        tensor: random_tensor(r, c, g, 0.3, 5),
        cap,
    }
}
