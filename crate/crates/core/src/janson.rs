//! Diagonal-sum estimates for `ℓ∞ → ℓ¹` couple operators, the ε-profiles
//! controlling them, the grid and partition operators used to pass between
//! a general couple and the λ-adic one, and the assembled verifier.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::couples::{
    couple_opnorm_with, opnorm_inf_to_1_with, side_opnorm, CoupleOperator, Exponent, NormOptions,
    Side, WeightedCouple,
};
use crate::error::{check_len, Error, Result};
use crate::matrix::Matrix;
use crate::nuclear::NuclearDecomposition;
use crate::numeric::{csum, powi, ratio};
use crate::qcfun::{derived_weight, QcFunction, SparseSequence};

/// `a_jk = max(z⁰_j/w⁰_k, z¹_j/w¹_k)·t_jk`.
pub fn scaled_matrix(t: &CoupleOperator) -> Matrix {
    let (w0, w1) = (t.source.w0(), t.source.w1());
    let (z0, z1) = (t.target.w0(), t.target.w1());
    Matrix::from_fn(t.matrix.rows(), t.matrix.cols(), |j, k| {
        (z0[j] / w0[k]).max(z1[j] / w1[k]) * t.matrix[(j, k)]
    })
}

/// `m ↦ Σ_{j−k=m} |a_jk|` with `j` a row label and `k` a column label.
pub fn diagonal_sums(
    a: &Matrix,
    row_labels: &[i64],
    col_labels: &[i64],
) -> Result<BTreeMap<i64, f64>> {
    check_len(a.rows(), row_labels.len())?;
    check_len(a.cols(), col_labels.len())?;
    let mut terms: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    for (j, &rj) in row_labels.iter().enumerate() {
        for (k, &ck) in col_labels.iter().enumerate() {
            terms.entry(rj - ck).or_default().push(a[(j, k)].abs());
        }
    }
    Ok(terms.into_iter().map(|(m, v)| (m, csum(v))).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpsilonProfile {
    /// `m = j − k` (target label minus source label) → `ε_m`.
    pub values: BTreeMap<i64, f64>,
    pub sum: f64,
    /// Both tails decay geometrically (estimated from the outermost values).
    pub convergent: bool,
}

impl EpsilonProfile {
    pub fn from_values(values: BTreeMap<i64, f64>) -> Self {
        let sum = csum(values.values().copied());
        let convergent = tails_decay(&values);
        Self {
            values,
            sum,
            convergent,
        }
    }

    pub fn get(&self, m: i64) -> f64 {
        self.values.get(&m).copied().unwrap_or(0.0)
    }
}

const TAIL_POINTS: usize = 3;

fn tails_decay(values: &BTreeMap<i64, f64>) -> bool {
    let v: Vec<f64> = values.values().copied().collect();
    let decays = |tail: &[f64]| {
        // tail ordered from the centre outwards
        if tail.len() < 2 {
            return true;
        }
        let (first, last) = (tail[0], tail[tail.len() - 1]);
        last == 0.0 || (last / first).powf(1.0 / (tail.len() - 1) as f64) < 1.0 - 1e-9
    };
    let n = v.len().min(TAIL_POINTS);
    let right: Vec<f64> = v[v.len() - n..].to_vec();
    let left: Vec<f64> = v[..n].iter().rev().copied().collect();
    decays(&right) && decays(&left)
}

/// Tight profile `ε_m = max_{j−k=m} min(w⁰_k/z⁰_j, w¹_k/z¹_j)`.
pub fn epsilon_profile(source: &WeightedCouple, target: &WeightedCouple) -> EpsilonProfile {
    let mut values: BTreeMap<i64, f64> = BTreeMap::new();
    for (j, &lj) in target.labels().iter().enumerate() {
        for (k, &lk) in source.labels().iter().enumerate() {
            let v = (source.w0()[k] / target.w0()[j]).min(source.w1()[k] / target.w1()[j]);
            let e = values.entry(lj - lk).or_insert(0.0);
            *e = e.max(v);
        }
    }
    EpsilonProfile::from_values(values)
}

/// `ε_m = max_{j−k=m} min(1, σ_j/τ_k)·ρ(τ_k)/λ(σ_j)` with `τ`, `σ` the weight
/// ratios of source and target.
pub fn epsilon_profile_rho(
    source: &WeightedCouple,
    target: &WeightedCouple,
    rho: &QcFunction,
    lam: &QcFunction,
) -> EpsilonProfile {
    let tau = source.ratios();
    let sigma = target.ratios();
    let mut values: BTreeMap<i64, f64> = BTreeMap::new();
    for (j, &lj) in target.labels().iter().enumerate() {
        for (k, &lk) in source.labels().iter().enumerate() {
            let v = (sigma[j] / tau[k]).min(1.0) * rho.at(tau[k]) / lam.at(sigma[j]);
            let e = values.entry(lj - lk).or_insert(0.0);
            *e = e.max(v);
        }
    }
    EpsilonProfile::from_values(values)
}

/// Profile from the dilation function on a λ-adic grid:
/// `ε_m = min(1, λ^m)·s_ρ(λ^{−m})`.
pub fn dilation_profile(
    rho: &QcFunction,
    lambda: f64,
    m_min: i64,
    m_max: i64,
    grid: &[f64],
) -> Result<EpsilonProfile> {
    let mut values = BTreeMap::new();
    for m in m_min..=m_max {
        let s = rho.dilation(powi(lambda, -m), grid)?;
        values.insert(m, powi(lambda, m).min(1.0) * s);
    }
    Ok(EpsilonProfile::from_values(values))
}

/// `min(w⁰_k, w¹_k)` is nonincreasing as `|k|` grows away from 0.
pub fn condition_one_prime(c: &WeightedCouple) -> bool {
    let mut pos: Vec<(i64, f64)> = Vec::new();
    let mut neg: Vec<(i64, f64)> = Vec::new();
    for ((&k, &a), &b) in c.labels().iter().zip(c.w0()).zip(c.w1()) {
        if k >= 0 {
            pos.push((k, a.min(b)));
        }
        if k <= 0 {
            neg.push((-k, a.min(b)));
        }
    }
    let mono = |mut v: Vec<(i64, f64)>| {
        v.sort_by_key(|e| e.0);
        v.windows(2).all(|w| w[1].1 <= w[0].1)
    };
    mono(pos) && mono(neg)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lemma1Bound {
    pub c_base: f64,
    pub c_base_exact: bool,
    pub eps_sum: f64,
    /// `C·Σ ε_m`, infinite for a non-convergent profile.
    pub bound: f64,
    /// `Σ |t_jk|`: the nuclear norm of the point-mass decomposition below.
    pub nu: f64,
    pub decomposition: NuclearDecomposition,
}

/// `‖T‖_{ℓ∞ → ℓ¹} ≤ Σ_{j,k} |t_jk| ≤ C·Σ_m ε_m` with `C = ‖T‖` on the couples.
pub fn lemma1_bound(
    t: &CoupleOperator,
    profile: &EpsilonProfile,
    opts: &NormOptions,
) -> Result<Lemma1Bound> {
    let c = couple_opnorm_with(t, opts)?;
    let mut terms = Vec::new();
    let (n_src, n_tgt) = (t.matrix.cols(), t.matrix.rows());
    for j in 0..n_tgt {
        for k in 0..n_src {
            let v = t.matrix[(j, k)];
            if v != 0.0 {
                let mut l = vec![0.0; n_src];
                l[k] = 1.0;
                let mut b = vec![0.0; n_tgt];
                b[j] = v;
                terms.push((l, b));
            }
        }
    }
    let bound = if c.value == 0.0 {
        0.0
    } else if profile.convergent {
        c.value * profile.sum
    } else {
        f64::INFINITY
    };
    Ok(Lemma1Bound {
        c_base: c.value,
        c_base_exact: c.exact,
        eps_sum: profile.sum,
        bound,
        nu: t.matrix.abs_sum(),
        decomposition: NuclearDecomposition::new(terms)?,
    })
}

/// Grid interpolation operator for the scalar couple `(L∞, L∞(1/t))`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridIota {
    /// `a_k = x(τ_k)`.
    pub a: Vec<f64>,
    /// Rows over grid points, columns over `k`.
    pub iota: Matrix,
    pub operator: CoupleOperator,
    /// Exact side norms.
    pub side_norms: [f64; 2],
    /// `max_grid |ι a − x|`.
    pub reproduction_error: f64,
}

/// Piecewise-linear prolongation `ι b(t) = (1−θ) b_k + θ b_{k+1}` on
/// `[τ_k, τ_{k+1}]`, constant beyond the last node. `x` is sampled on `grid`,
/// which must lie in `[τ_{k_min}, ∞)` and contain every `τ_k`.
pub fn lemma2_grid_iota(grid: &[f64], x: &[f64], tau: &SparseSequence) -> Result<GridIota> {
    check_len(grid.len(), x.len())?;
    let t = tau.tau();
    if t.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Parameter("τ must be strictly increasing".into()));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Parameter("grid must be strictly increasing".into()));
    }
    if grid.first().is_some_and(|&g| g < t[0]) {
        return Err(Error::Parameter("grid extends below τ_{k_min}".into()));
    }
    let mut a = Vec::with_capacity(t.len());
    for &tk in t {
        let i = grid
            .iter()
            .position(|&g| (g - tk).abs() <= 1e-12 * tk)
            .ok_or_else(|| Error::Parameter(format!("τ = {tk} is not a grid point")))?;
        a.push(x[i]);
    }
    let mut m = Matrix::zeros(grid.len(), t.len());
    for (r, &g) in grid.iter().enumerate() {
        match t.iter().position(|&tk| tk >= g) {
            None => m[(r, t.len() - 1)] = 1.0,
            Some(0) => m[(r, 0)] = 1.0,
            Some(k1) => {
                let k = k1 - 1;
                let theta = (g - t[k]) / (t[k1] - t[k]);
                m[(r, k)] = 1.0 - theta;
                m[(r, k1)] = theta;
            }
        }
    }
    let src = WeightedCouple::new(
        tau.labels(),
        vec![1.0; t.len()],
        t.iter().map(|v| 1.0 / v).collect(),
        Exponent::INF,
    )?;
    let tgt = WeightedCouple::from_weights(
        vec![1.0; grid.len()],
        grid.iter().map(|v| 1.0 / v).collect(),
        Exponent::INF,
    )?;
    let operator = CoupleOperator::new(m.clone(), src, tgt)?;
    let opts = NormOptions::default();
    let side_norms = [
        side_opnorm(&operator, Side::Zero, &opts)?.value,
        side_opnorm(&operator, Side::One, &opts)?.value,
    ];
    let ia = m.mul_vec(&a)?;
    let reproduction_error = ia
        .iter()
        .zip(x)
        .map(|(u, v)| (u - v).abs())
        .fold(0.0, f64::max);
    Ok(GridIota {
        a,
        iota: m,
        operator,
        side_norms,
        reproduction_error,
    })
}

/// Partition projection onto the sparse sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionPi {
    /// `b = π y` over the labels of `τ`.
    pub b: Vec<f64>,
    pub pi: Matrix,
    /// `H_k`: label → atom positions.
    pub partition: BTreeMap<i64, Vec<usize>>,
    /// Per atom `max(1, σ_n/τ_k)·ρ(τ_k)/ρ(σ_n)` at its assigned `k`.
    pub atom_values: Vec<f64>,
    /// Exact side norms into `(ℓ¹, ℓ¹(1/τ))`.
    pub side_norms: [f64; 2],
    /// `Σ_k |b_k|/ρ(τ_k)`.
    pub b_norm: f64,
    /// `Σ_n z⁰_n |y_n| / ρ(σ_n)`.
    pub y_norm: f64,
}

pub const COVERING_CONSTANT: f64 = 2.0;

/// Assign atom `n` to `argmin_k max(1, σ_n/τ_k)·ρ(τ_k)/ρ(σ_n)` and set
/// `(π v)_k = ρ(τ_k) Σ_{n∈H_k} sign(y_n) z⁰_n v_n / ρ(σ_n)`.
pub fn lemma3_pi(
    target: &WeightedCouple,
    y: &[f64],
    tau: &SparseSequence,
    rho: &QcFunction,
) -> Result<PartitionPi> {
    if !target.p().is_one() {
        return Err(Error::UnsupportedExponent(target.p().value()));
    }
    target.check(y)?;
    let t = tau.tau();
    let labels = tau.labels();
    let sigma = target.ratios();
    let z0 = target.w0();
    let rho_tau: Vec<f64> = t.iter().map(|&v| rho.at(v)).collect();
    let mut partition: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    let mut atom_values = Vec::with_capacity(y.len());
    let mut pi = Matrix::zeros(t.len(), y.len());
    for n in 0..y.len() {
        let rs = rho.at(sigma[n]);
        let (k, v) = t
            .iter()
            .enumerate()
            .map(|(k, &tk)| (k, (sigma[n] / tk).max(1.0) * rho_tau[k] / rs))
            .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
        if v > COVERING_CONSTANT + 1e-12 {
            return Err(Error::Certification {
                atom: n,
                value: v,
                bound: COVERING_CONSTANT,
            });
        }
        atom_values.push(v);
        partition.entry(labels[k]).or_default().push(n);
        let s = if y[n] < 0.0 { -1.0 } else { 1.0 };
        pi[(k, n)] = rho_tau[k] * s * z0[n] / rs;
    }
    let b = pi.mul_vec(y)?;
    let lam = WeightedCouple::new(
        labels,
        vec![1.0; t.len()],
        t.iter().map(|v| 1.0 / v).collect(),
        Exponent::ONE,
    )?;
    let op = CoupleOperator::new(pi.clone(), target.clone(), lam)?;
    let opts = NormOptions::default();
    let side_norms = [
        side_opnorm(&op, Side::Zero, &opts)?.value,
        side_opnorm(&op, Side::One, &opts)?.value,
    ];
    let b_norm = csum(b.iter().zip(&rho_tau).map(|(b, r)| b.abs() / r));
    let dw = derived_weight(rho, target.w0(), target.w1())?;
    let y_norm = csum(dw.iter().zip(y).map(|(w, v)| w * v.abs()));
    Ok(PartitionPi {
        b,
        pi,
        partition,
        atom_values,
        side_norms,
        b_norm,
        y_norm,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OvchinnikovReport {
    pub c_base: f64,
    pub c_rho: f64,
    pub ratio: f64,
    pub bound: f64,
    pub eps_sum: f64,
    /// `Σ |t̃_jk|` for the ρ-weighted matrix.
    pub nu: f64,
    /// All norms were computed exactly (within the enumeration cap).
    pub exact: bool,
    pub tolerance: f64,
    pub pass: bool,
}

pub const CHECK_TOL: f64 = 1e-9;

/// For `T: ℓ∞(w̄) → ℓ¹(z̄)` compare the exact norm between the ρ-derived
/// weights with `‖T‖·Σ ε_m`, the profile taken from [`epsilon_profile_rho`].
pub fn verify_ovchinnikov(
    t: &CoupleOperator,
    rho: &QcFunction,
    opts: &NormOptions,
) -> Result<OvchinnikovReport> {
    if !t.source.p().is_inf() {
        return Err(Error::UnsupportedExponent(t.source.p().value()));
    }
    if !t.target.p().is_one() {
        return Err(Error::UnsupportedExponent(t.target.p().value()));
    }
    let u = derived_weight(rho, t.source.w0(), t.source.w1())?;
    let v = derived_weight(rho, t.target.w0(), t.target.w1())?;
    let c_rho = opnorm_inf_to_1_with(&t.matrix, &u, &v, opts)?;
    let profile = epsilon_profile_rho(&t.source, &t.target, rho, rho);
    // the same operator viewed between the ρ-normalized couples
    let inv_u: Vec<f64> = u.iter().map(|x| 1.0 / x).collect();
    let tilde = CoupleOperator::new(
        t.matrix.scaled(&v, &inv_u)?,
        t.source.rescaled(&u)?,
        t.target.rescaled(&v)?,
    )?;
    let l1 = lemma1_bound(&tilde, &profile, opts)?;
    let pass = c_rho.value <= l1.bound + CHECK_TOL;
    Ok(OvchinnikovReport {
        c_base: l1.c_base,
        c_rho: c_rho.value,
        ratio: ratio(c_rho.value, l1.c_base),
        bound: l1.bound,
        eps_sum: l1.eps_sum,
        nu: l1.nu,
        exact: c_rho.exact && l1.c_base_exact,
        tolerance: CHECK_TOL,
        pass,
    })
}
