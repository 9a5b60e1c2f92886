//! Block partitions `e_k` of a weighted couple and the partial-retract maps
//! `ι`, `π` onto the λ-adic couple.

use std::collections::BTreeMap;

use rand::Rng;

use crate::couples::{CoupleOperator, Exponent, Side, WeightedCouple};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::numeric::{lp_norm, powi};

/// Partition of the index set into blocks
/// `e_k = { n : w⁰_n ≤ λ^k w¹_n < λ w⁰_n }`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockPartition {
    lambda: f64,
    /// block label → positions into the couple's index list
    blocks: BTreeMap<i64, Vec<usize>>,
    phi: Vec<i64>,
}

impl BlockPartition {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn blocks(&self) -> &BTreeMap<i64, Vec<usize>> {
        &self.blocks
    }

    /// Block label of position `n`.
    pub fn phi(&self) -> &[i64] {
        &self.phi
    }

    pub fn block(&self, k: i64) -> &[usize] {
        self.blocks.get(&k).map_or(&[], Vec::as_slice)
    }

    /// Smallest and largest occupied block labels.
    pub fn label_range(&self) -> Option<(i64, i64)> {
        Some((
            *self.blocks.keys().next()?,
            *self.blocks.keys().next_back()?,
        ))
    }

    /// All labels in the contiguous span of occupied blocks.
    pub fn labels(&self) -> Vec<i64> {
        self.label_range()
            .map_or_else(Vec::new, |(a, b)| (a..=b).collect())
    }

    /// Blocks keyed by label, listing the couple's own index labels.
    pub fn labelled_blocks(&self, c: &WeightedCouple) -> BTreeMap<i64, Vec<i64>> {
        self.blocks
            .iter()
            .map(|(&k, ns)| (k, ns.iter().map(|&n| c.labels()[n]).collect()))
            .collect()
    }
}

/// The unique `k` with `w⁰ ≤ λ^k w¹ < λ w⁰`.
pub fn block_index(w0: f64, w1: f64, lambda: f64) -> i64 {
    let mut k = ((w0 / w1).ln() / lambda.ln()).ceil() as i64;
    while powi(lambda, k) * w1 < w0 {
        k += 1;
    }
    while powi(lambda, k - 1) * w1 >= w0 {
        k -= 1;
    }
    k
}

pub fn partition(c: &WeightedCouple, lambda: f64) -> Result<BlockPartition> {
    if !(lambda > 1.0 && lambda.is_finite()) {
        return Err(Error::Parameter(format!("λ = {lambda} must exceed 1")));
    }
    let phi: Vec<i64> = c
        .w0()
        .iter()
        .zip(c.w1())
        .map(|(&a, &b)| block_index(a, b, lambda))
        .collect();
    let mut blocks: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (n, &k) in phi.iter().enumerate() {
        blocks.entry(k).or_default().push(n);
    }
    Ok(BlockPartition {
        lambda,
        blocks,
        phi,
    })
}

/// The λ-adic couple `(ℓp, ℓp(λ^{−k}))` on the given labels.
pub fn lambda_adic_on(labels: &[i64], lambda: f64, p: Exponent) -> Result<WeightedCouple> {
    WeightedCouple::new(
        labels.to_vec(),
        vec![1.0; labels.len()],
        labels.iter().map(|&k| powi(lambda, -k)).collect(),
        p,
    )
}

/// Output of [`iota`]: block norms `s_k` and the norming functionals `α_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Iota {
    pub labels: Vec<i64>,
    pub s: Vec<f64>,
    /// Row `k` holds `α_k` as a vector under the standard pairing; supported on `e_k`.
    pub functionals: Matrix,
}

impl Iota {
    /// `s_k` for block label `k` (zero outside the span).
    pub fn s_at(&self, k: i64) -> f64 {
        self.labels
            .iter()
            .position(|&l| l == k)
            .map_or(0.0, |i| self.s[i])
    }

    /// The linear map `b ↦ {α_k(b)}`.
    pub fn apply(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.functionals.mul_vec(b)
    }

    /// `ι` as a couple operator into the λ-adic couple.
    pub fn operator(&self, c: &WeightedCouple, lambda: f64) -> Result<CoupleOperator> {
        CoupleOperator::new(
            self.functionals.clone(),
            c.clone(),
            lambda_adic_on(&self.labels, lambda, c.p())?,
        )
    }
}

/// `s_k = ‖(w⁰_n x_n)_{n∈e_k}‖_p`, with explicit functionals `α_k` of dual
/// norm at most 1 on the `w⁰`-weighted block and `α_k(x) = s_k`.
pub fn iota(c: &WeightedCouple, part: &BlockPartition, x: &[f64]) -> Result<Iota> {
    c.check(x)?;
    crate::error::check_len(part.phi.len(), x.len())?;
    let labels = part.labels();
    let k0 = labels.first().copied().unwrap_or(0);
    let (w0, p) = (c.w0(), c.p());
    let mut s = vec![0.0; labels.len()];
    let mut f = Matrix::zeros(labels.len(), x.len());
    for (&k, ns) in part.blocks() {
        let row = (k - k0) as usize;
        let sk = lp_norm(ns.iter().map(|&n| w0[n] * x[n]), p.value());
        s[row] = sk;
        if sk == 0.0 {
            continue;
        }
        if p.is_one() {
            for &n in ns {
                f[(row, n)] = w0[n] * sign(x[n]);
            }
        } else if p.is_inf() {
            let n_star = ns.iter().copied().fold(ns[0], |b, n| {
                if (w0[n] * x[n]).abs() > (w0[b] * x[b]).abs() {
                    n
                } else {
                    b
                }
            });
            f[(row, n_star)] = w0[n_star] * sign(x[n_star]);
        } else {
            // dual vector of y = w⁰x in ℓp: sign(y)|y|^{p−1} / ‖y‖_p^{p−1}
            let pv = p.value();
            for &n in ns {
                let y = w0[n] * x[n] / sk;
                f[(row, n)] = w0[n] * sign(y) * y.abs().powf(pv - 1.0);
            }
        }
    }
    Ok(Iota {
        labels,
        s,
        functionals: f,
    })
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `π(a)_n = a_{φ_n} x_n / s_{φ_n}`.
pub fn pi(
    c: &WeightedCouple,
    part: &BlockPartition,
    x: &[f64],
    iota: &Iota,
    a: &[f64],
) -> Result<Vec<f64>> {
    pi_matrix(c, part, x, iota)?.mul_vec(a)
}

/// Matrix of `π` for fixed `x`: columns over block labels, rows over the couple.
pub fn pi_matrix(
    c: &WeightedCouple,
    part: &BlockPartition,
    x: &[f64],
    iota: &Iota,
) -> Result<Matrix> {
    c.check(x)?;
    let k0 = iota.labels.first().copied().unwrap_or(0);
    let mut m = Matrix::zeros(x.len(), iota.labels.len());
    for (n, &k) in part.phi().iter().enumerate() {
        let col = (k - k0) as usize;
        let sk = iota.s[col];
        if x[n] == 0.0 {
            continue;
        }
        if sk == 0.0 {
            return Err(Error::DegenerateElement { block: k });
        }
        m[(n, col)] = x[n] / sk;
    }
    Ok(m)
}

/// Exact side norms `(‖·‖₀, ‖·‖₁)` of a block-diagonal operator, one column
/// or row block per label. Valid for `ι` (rows are disjointly supported
/// functionals) and `π` (columns are disjointly supported vectors).
fn block_diagonal_norms(op: &CoupleOperator, transposed_blocks: bool) -> [f64; 2] {
    let (src, tgt) = (&op.source, &op.target);
    let m = &op.matrix;
    Side::BOTH.map(|side| {
        let (u, v) = (src.weights(side), tgt.weights(side));
        if transposed_blocks {
            // row r is a functional on ℓp(u), scaled by v_r; disjoint supports
            // make the ℓp → ℓp norm the largest row dual norm
            (0..m.rows())
                .map(|r| {
                    v[r] * lp_norm(
                        m.row(r).iter().zip(u).map(|(a, w)| a / w),
                        src.p().conjugate().value(),
                    )
                })
                .fold(0.0, f64::max)
        } else {
            // column c is the image of the unit vector e_c, of norm 1/u_c
            (0..m.cols())
                .map(|col| {
                    lp_norm((0..m.rows()).map(|r| v[r] * m[(r, col)]), tgt.p().value()) / u[col]
                })
                .fold(0.0, f64::max)
        }
    })
}

/// Exact side norms of `ι` into the λ-adic couple.
pub fn iota_norms(c: &WeightedCouple, part: &BlockPartition, io: &Iota) -> Result<[f64; 2]> {
    Ok(block_diagonal_norms(&io.operator(c, part.lambda())?, true))
}

/// Exact side norms of `π` from the λ-adic couple.
pub fn pi_norms(
    c: &WeightedCouple,
    part: &BlockPartition,
    x: &[f64],
    io: &Iota,
) -> Result<[f64; 2]> {
    let op = CoupleOperator::new(
        pi_matrix(c, part, x, io)?,
        lambda_adic_on(&io.labels, part.lambda(), c.p())?,
        c.clone(),
    )?;
    Ok(block_diagonal_norms(&op, false))
}

/// Lower estimate of a side norm by random probing with sign and Gaussian
/// vectors; never exceeds the true norm.
pub fn probe_side_norm<R: Rng>(
    op: &CoupleOperator,
    side: Side,
    samples: usize,
    rng: &mut R,
) -> f64 {
    let (src, tgt) = (&op.source, &op.target);
    let n = op.matrix.cols();
    let mut best: f64 = 0.0;
    for i in 0..samples {
        let b: Vec<f64> = (0..n)
            .map(|_| {
                if i % 2 == 0 {
                    if rng.random::<bool>() {
                        1.0
                    } else {
                        -1.0
                    }
                } else {
                    rng.random_range(-1.0..1.0)
                }
            })
            .collect();
        let x: Vec<f64> = b
            .iter()
            .zip(src.weights(side))
            .map(|(b, w)| b / w)
            .collect();
        let den = lp_norm(
            x.iter().zip(src.weights(side)).map(|(x, w)| x * w),
            src.p().value(),
        );
        if den == 0.0 {
            continue;
        }
        let y = op
            .matrix
            .mul_vec(&x)
            .expect("shape checked at construction");
        let num = lp_norm(
            y.iter().zip(tgt.weights(side)).map(|(y, w)| y * w),
            tgt.p().value(),
        );
        best = best.max(num / den);
    }
    best
}

/// x-independent retract built on one representative per requested block.
#[derive(Clone, Debug, PartialEq)]
pub struct RetractPair {
    pub labels: Vec<i64>,
    pub representatives: Vec<usize>,
    /// λ-adic couple → `c`
    pub iota: CoupleOperator,
    /// `c` → λ-adic couple
    pub pi: CoupleOperator,
}

/// Build `ι`, `π` through the smallest index of each block `e_k`, `k ∈ labels`.
pub fn retract_pair(
    c: &WeightedCouple,
    part: &BlockPartition,
    labels: &[i64],
) -> Result<RetractPair> {
    let adic = lambda_adic_on(labels, part.lambda(), c.p())?;
    let mut reps = Vec::with_capacity(labels.len());
    for &k in labels {
        let r = *part
            .block(k)
            .iter()
            .min()
            .ok_or(Error::HypothesisViolation(k))?;
        reps.push(r);
    }
    let mut i_m = Matrix::zeros(c.len(), labels.len());
    let mut p_m = Matrix::zeros(labels.len(), c.len());
    for (col, &r) in reps.iter().enumerate() {
        i_m[(r, col)] = 1.0 / c.w0()[r];
        p_m[(col, r)] = c.w0()[r];
    }
    Ok(RetractPair {
        labels: labels.to_vec(),
        representatives: reps,
        iota: CoupleOperator::new(i_m, adic.clone(), c.clone())?,
        pi: CoupleOperator::new(p_m, c.clone(), adic)?,
    })
}

impl RetractPair {
    /// `π ∘ ι` on the block labels.
    pub fn composition(&self) -> Result<Matrix> {
        self.pi.matrix.matmul(&self.iota.matrix)
    }

    /// Exact side norms of `ι` and `π` (both maps have one nonzero per column).
    pub fn norms(&self) -> ([f64; 2], [f64; 2]) {
        (
            block_diagonal_norms(&self.iota, false),
            block_diagonal_norms(&self.pi, false),
        )
    }
}
