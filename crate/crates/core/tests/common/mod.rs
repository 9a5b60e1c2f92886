//! Independent reference computations used by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn weights<R: Rng>(rng: &mut R, n: usize, spread: f64) -> Vec<f64> {
    (0..n)
        .map(|_| rng.random_range(-spread..spread).exp())
        .collect()
}

pub fn vector<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// K for ℓ∞(w0), ℓ∞(w1): `min_h h + t·max_n w1_n (|x_n| − h/w0_n)⁺`, a convex
/// function of `h ∈ [0, max w0|x|]`, minimized by golden-section search.
pub fn k_inf(w0: &[f64], w1: &[f64], t: f64, x: &[f64]) -> f64 {
    let g = |h: f64| {
        let tail = x
            .iter()
            .zip(w0.iter().zip(w1))
            .map(|(v, (a, b))| b * (v.abs() - h / a).max(0.0))
            .fold(0.0, f64::max);
        h + t * tail
    };
    let hi = x
        .iter()
        .zip(w0)
        .map(|(v, a)| a * v.abs())
        .fold(0.0, f64::max);
    let (mut a, mut b) = (0.0, hi);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..300 {
        let (c, d) = (b - r * (b - a), a + r * (b - a));
        if g(c) <= g(d) {
            b = d;
        } else {
            a = c;
        }
    }
    g(0.0).min(g(hi)).min(g(0.5 * (a + b)))
}

/// K for ℓ¹(w0), ℓ¹(w1) by a per-coordinate split-fraction grid.
pub fn k_one_grid(w0: &[f64], w1: &[f64], t: f64, x: &[f64], levels: usize) -> f64 {
    x.iter()
        .zip(w0.iter().zip(w1))
        .map(|(v, (a, b))| {
            (0..levels)
                .map(|i| {
                    let f = i as f64 / (levels - 1) as f64;
                    (1.0 - f) * a * v.abs() + f * t * b * v.abs()
                })
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

/// Joint split-fraction grid over every coordinate (small N only).
pub fn k_one_joint_grid(w0: &[f64], w1: &[f64], t: f64, x: &[f64], levels: usize) -> f64 {
    let n = x.len();
    let mut idx = vec![0usize; n];
    let mut best = f64::INFINITY;
    loop {
        let (mut s0, mut s1) = (0.0, 0.0);
        for i in 0..n {
            let f = idx[i] as f64 / (levels - 1) as f64;
            s0 += (1.0 - f) * w0[i] * x[i].abs();
            s1 += f * w1[i] * x[i].abs();
        }
        best = best.min(s0 + t * s1);
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            idx[i] += 1;
            if idx[i] < levels {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

/// J for ℓ¹ weights.
pub fn j_one(z0: &[f64], z1: &[f64], t: f64, y: &[f64]) -> f64 {
    let a: f64 = y.iter().zip(z0).map(|(v, w)| w * v.abs()).sum();
    let b: f64 = y.iter().zip(z1).map(|(v, w)| w * v.abs()).sum();
    a.max(t * b)
}

/// `max_{|x_k| ≤ 1} Σ_j |Σ_k a_jk x_k|` by plain enumeration of sign vectors.
pub fn inf_to_one(a: &[Vec<f64>]) -> f64 {
    let cols = a.first().map_or(0, Vec::len);
    if cols == 0 {
        return 0.0;
    }
    let mut best: f64 = 0.0;
    for mask in 0u64..(1 << (cols - 1)) {
        let s: f64 = a
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(k, v)| {
                        if k > 0 && mask >> (k - 1) & 1 == 1 {
                            -v
                        } else {
                            *v
                        }
                    })
                    .sum::<f64>()
                    .abs()
            })
            .sum();
        best = best.max(s);
    }
    best
}

/// `diag(v) a diag(1/u)` as rows.
pub fn weighted_rows(a: &interp_core::Matrix, u: &[f64], v: &[f64]) -> Vec<Vec<f64>> {
    (0..a.rows())
        .map(|j| (0..a.cols()).map(|k| v[j] * a[(j, k)] / u[k]).collect())
        .collect()
}

/// Solve a square system by Gaussian elimination with partial pivoting.
pub fn solve(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
        if m[p][c].abs() < 1e-12 {
            return None;
        }
        m.swap(c, p);
        rhs.swap(c, p);
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            if f != 0.0 {
                for k in c..n {
                    m[r][k] -= f * m[c][k];
                }
                rhs[r] -= f * rhs[c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for c in (0..n).rev() {
        let s: f64 = (c + 1..n).map(|k| m[c][k] * x[k]).sum();
        x[c] = (rhs[c] - s) / m[c][c];
    }
    Some(x)
}

/// All `k`-subsets of `0..n`, in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Every permutation of `v` (Heap's algorithm).
pub fn permutations(v: &[f64]) -> Vec<Vec<f64>> {
    fn heap(k: usize, a: &mut Vec<f64>, out: &mut Vec<Vec<f64>>) {
        if k <= 1 {
            out.push(a.clone());
            return;
        }
        heap(k - 1, a, out);
        for i in 0..k - 1 {
            if k.is_multiple_of(2) {
                a.swap(i, k - 1);
            } else {
                a.swap(0, k - 1);
            }
            heap(k - 1, a, out);
        }
    }
    let mut out = Vec::new();
    heap(v.len(), &mut v.to_vec(), &mut out);
    out
}
