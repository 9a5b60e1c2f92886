//! Weighted sequence couples `(ℓp(w⁰), ℓp(w¹))` over a finite labelled index
//! set: side norms, K- and J-functionals, ρ-weighted norms and exact
//! `ℓ∞ → ℓ¹` operator norms.

use crate::error::{check_len, Error, Result};
use crate::matrix::Matrix;
use crate::numeric::{conjugate_exponent, csum, lp_norm, CompensatedSum};
use crate::par::Execution;
use crate::qcfun::{derived_weight, QcFunction};

/// Exponent `p ∈ [1, ∞]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Exponent(f64);

impl Exponent {
    pub const ONE: Exponent = Exponent(1.0);
    pub const INF: Exponent = Exponent(f64::INFINITY);

    pub fn new(p: f64) -> Result<Self> {
        if p >= 1.0 {
            Ok(Exponent(p))
        } else {
            Err(Error::UnsupportedExponent(p))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_inf(self) -> bool {
        self.0.is_infinite()
    }

    pub fn is_one(self) -> bool {
        self.0 == 1.0
    }

    pub fn conjugate(self) -> Exponent {
        Exponent(conjugate_exponent(self.0))
    }
}

impl std::fmt::Display for Exponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_inf() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// One of the two spaces of a couple.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Zero,
    One,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Zero, Side::One];
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightedCouple {
    labels: Vec<i64>,
    w0: Vec<f64>,
    w1: Vec<f64>,
    p: Exponent,
}

impl WeightedCouple {
    pub fn new(labels: Vec<i64>, w0: Vec<f64>, w1: Vec<f64>, p: Exponent) -> Result<Self> {
        check_len(labels.len(), w0.len())?;
        check_len(labels.len(), w1.len())?;
        for (&a, &b) in w0.iter().zip(&w1) {
            if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
                return Err(Error::Parameter(format!(
                    "weights must be positive and finite, got ({a}, {b})"
                )));
            }
            if !(a / b).is_finite() || a / b == 0.0 {
                return Err(Error::Parameter(format!(
                    "weight ratio {a}/{b} not representable"
                )));
            }
        }
        let mut seen = labels.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != labels.len() {
            return Err(Error::Parameter("duplicate index labels".into()));
        }
        Ok(Self { labels, w0, w1, p })
    }

    /// Unlabelled couple; labels are `0..n`.
    pub fn from_weights(w0: Vec<f64>, w1: Vec<f64>, p: Exponent) -> Result<Self> {
        let labels = (0..w0.len() as i64).collect();
        Self::new(labels, w0, w1, p)
    }

    /// The λ-adic couple: `w⁰_k = 1`, `w¹_k = λ^{−k}` for `k ∈ [k_min, k_max]`.
    pub fn lambda_adic(lambda: f64, k_min: i64, k_max: i64, p: Exponent) -> Result<Self> {
        if !(lambda > 1.0) {
            return Err(Error::Parameter(format!("λ = {lambda} must exceed 1")));
        }
        let labels: Vec<i64> = (k_min..=k_max).collect();
        let w1 = labels.iter().map(|&k| lambda.powi(-k as i32)).collect();
        Self::new(labels.clone(), vec![1.0; labels.len()], w1, p)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn w0(&self) -> &[f64] {
        &self.w0
    }

    pub fn w1(&self) -> &[f64] {
        &self.w1
    }

    pub fn weights(&self, side: Side) -> &[f64] {
        match side {
            Side::Zero => &self.w0,
            Side::One => &self.w1,
        }
    }

    pub fn p(&self) -> Exponent {
        self.p
    }

    pub fn with_exponent(&self, p: Exponent) -> Self {
        Self { p, ..self.clone() }
    }

    /// `τ_n = w⁰_n / w¹_n`.
    pub fn ratios(&self) -> Vec<f64> {
        self.w0.iter().zip(&self.w1).map(|(a, b)| a / b).collect()
    }

    /// Couple with both weight vectors divided entrywise by `d`.
    pub fn rescaled(&self, d: &[f64]) -> Result<Self> {
        check_len(self.len(), d.len())?;
        Self::new(
            self.labels.clone(),
            self.w0.iter().zip(d).map(|(w, s)| w / s).collect(),
            self.w1.iter().zip(d).map(|(w, s)| w / s).collect(),
            self.p,
        )
    }

    pub(crate) fn check(&self, x: &[f64]) -> Result<()> {
        check_len(self.len(), x.len())
    }
}

/// `‖x‖_{ℓp(w^i)}`.
pub fn norm_side(c: &WeightedCouple, side: Side, x: &[f64]) -> Result<f64> {
    c.check(x)?;
    let w = c.weights(side);
    Ok(lp_norm(w.iter().zip(x).map(|(w, v)| w * v), c.p.value()))
}

/// Norm of a functional `l` (standard pairing) in the dual of side `i`:
/// the `ℓq(1/w^i)` norm with `q` conjugate to `p`.
pub fn dual_norm_side(c: &WeightedCouple, side: Side, l: &[f64]) -> Result<f64> {
    c.check(l)?;
    let w = c.weights(side);
    Ok(lp_norm(
        w.iter().zip(l).map(|(w, v)| v / w),
        c.p.conjugate().value(),
    ))
}

/// K-functional `inf_{x = x₀ + x₁} ‖x₀‖₀ + t‖x₁‖₁`, exact for `p ∈ {1, ∞}`.
pub fn k_exact(c: &WeightedCouple, t: f64, x: &[f64]) -> Result<f64> {
    c.check(x)?;
    check_t(t)?;
    if c.p.is_one() {
        return Ok(csum(
            c.w0.iter()
                .zip(&c.w1)
                .zip(x)
                .map(|((a, b), v)| a.min(t * b) * v.abs()),
        ));
    }
    if !c.p.is_inf() {
        return Err(Error::UnsupportedExponent(c.p.value()));
    }
    Ok(k_sup_exact(&c.w0, &c.w1, t, x))
}

// For p = ∞ with budget c on side 0 the cheapest remainder is the clip
// residual; the objective c + t·R(c) is convex piecewise linear in c and its
// kinks are the clip points c = w⁰|x| and the crossings of the residual lines.
fn k_sup_exact(w0: &[f64], w1: &[f64], t: f64, x: &[f64]) -> f64 {
    // residual line n: w¹|x| − (w¹/w⁰)·c
    let lines: Vec<(f64, f64)> = w0
        .iter()
        .zip(w1)
        .zip(x)
        .filter(|(_, v)| **v != 0.0)
        .map(|((a, b), v)| (b * v.abs(), b / a))
        .collect();
    if lines.is_empty() {
        return 0.0;
    }
    let objective = |c: f64| {
        let r = lines
            .iter()
            .map(|&(h, s)| (h - s * c).max(0.0))
            .fold(0.0, f64::max);
        c + t * r
    };
    let c_max = lines.iter().map(|&(h, s)| h / s).fold(0.0, f64::max);
    let mut best = objective(0.0).min(c_max);
    for &(h, s) in &lines {
        best = best.min(objective(h / s));
    }
    for (i, &(h1, s1)) in lines.iter().enumerate() {
        for &(h2, s2) in &lines[i + 1..] {
            if s1 != s2 {
                let c = (h1 - h2) / (s1 - s2);
                if c > 0.0 && c < c_max {
                    best = best.min(objective(c));
                }
            }
        }
    }
    best
}

/// `sup_n min(w⁰_n, t w¹_n)|x_n|` for `p = ∞`; equal to [`k_exact`] for `p = 1`.
pub fn k_surrogate(c: &WeightedCouple, t: f64, x: &[f64]) -> Result<f64> {
    c.check(x)?;
    check_t(t)?;
    if c.p.is_one() {
        return k_exact(c, t, x);
    }
    if !c.p.is_inf() {
        return Err(Error::UnsupportedExponent(c.p.value()));
    }
    Ok(c.w0
        .iter()
        .zip(&c.w1)
        .zip(x)
        .map(|((a, b), v)| a.min(t * b) * v.abs())
        .fold(0.0, f64::max))
}

/// `J(t, x) = max(‖x‖₀, t‖x‖₁)`.
pub fn j_functional(c: &WeightedCouple, t: f64, x: &[f64]) -> Result<f64> {
    check_t(t)?;
    Ok(norm_side(c, Side::Zero, x)?.max(t * norm_side(c, Side::One, x)?))
}

/// `(Σ (w⁰_n |x_n| / ρ(w⁰_n/w¹_n))^p)^{1/p}`.
pub fn rho_norm(c: &WeightedCouple, rho: &QcFunction, x: &[f64]) -> Result<f64> {
    c.check(x)?;
    let w = derived_weight(rho, &c.w0, &c.w1)?;
    Ok(lp_norm(w.iter().zip(x).map(|(w, v)| w * v), c.p.value()))
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("K/J parameter t = {t}")))
    }
}

/// An operator norm value with a flag telling whether it is exact or only an
/// upper bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OpNorm {
    pub value: f64,
    pub exact: bool,
}

/// Options for operator-norm evaluation.
#[derive(Clone, Copy, Debug)]
pub struct NormOptions {
    /// Largest source dimension handled by full sign enumeration.
    pub exact_cap: usize,
    pub execution: Execution,
}

pub const DEFAULT_EXACT_CAP: usize = 20;

impl Default for NormOptions {
    fn default() -> Self {
        Self {
            exact_cap: DEFAULT_EXACT_CAP,
            execution: Execution::default(),
        }
    }
}

/// `‖A‖` from `ℓ∞(u)` to `ℓ¹(v)` with default options.
pub fn opnorm_inf_to_1(a: &Matrix, u: &[f64], v: &[f64]) -> Result<OpNorm> {
    opnorm_inf_to_1_with(a, u, v, &NormOptions::default())
}

/// `‖A‖` from `ℓ∞(u)` to `ℓ¹(v)`: the maximum over sign vectors `ζ` of
/// `Σ_j |Σ_k ã_jk ζ_k|` with `ã_jk = v_j a_jk / u_k`. Above the exact cap the
/// entrywise absolute sum is returned as an upper bound.
pub fn opnorm_inf_to_1_with(
    a: &Matrix,
    u: &[f64],
    v: &[f64],
    opts: &NormOptions,
) -> Result<OpNorm> {
    check_len(a.cols(), u.len())?;
    check_len(a.rows(), v.len())?;
    let inv_u: Vec<f64> = u.iter().map(|x| 1.0 / x).collect();
    let scaled = a.scaled(v, &inv_u)?;
    if scaled.cols() > opts.exact_cap {
        return Ok(OpNorm {
            value: scaled.abs_sum(),
            exact: false,
        });
    }
    Ok(OpNorm {
        value: sign_enumeration(&scaled, opts.execution),
        exact: true,
    })
}

const CHUNK_BITS: usize = 10;

/// Exact `max_ζ Σ_j |Σ_k a_jk ζ_k|` over `ζ ∈ {±1}^cols`.
///
/// `ζ_0 = +1` by symmetry. The remaining patterns are split into fixed
/// chunks (high bits) each walked by a Gray code over the low bits, so the
/// reduction order does not depend on the execution strategy.
pub fn sign_enumeration(a: &Matrix, exec: Execution) -> f64 {
    let (rows, cols) = (a.rows(), a.cols());
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    let free = cols - 1;
    let low = free.min(CHUNK_BITS);
    let high = free - low;
    let chunks = 1usize << high;
    let col = |k: usize| -> Vec<f64> { (0..rows).map(|j| a[(j, k)]).collect() };
    let columns: Vec<Vec<f64>> = (0..cols).map(col).collect();

    let results = exec.map(chunks, |h| {
        // signs: bit set ⇒ −1; column 0 fixed +1, low free columns 1..=low,
        // high free columns low+1..cols
        let mut mask: u64 = (h as u64) << (low + 1);
        let mut sums: Vec<f64> = (0..rows)
            .map(|j| {
                let mut acc = CompensatedSum::new();
                for (k, c) in columns.iter().enumerate() {
                    let s = if mask >> k & 1 == 1 { -1.0 } else { 1.0 };
                    acc.add(s * c[j]);
                }
                acc.value()
            })
            .collect();
        let eval = |s: &[f64]| s.iter().map(|v| v.abs()).sum::<f64>();
        let mut best = (eval(&sums), mask);
        for i in 1..(1usize << low) {
            let k = 1 + i.trailing_zeros() as usize;
            let sign = if mask >> k & 1 == 1 { -1.0 } else { 1.0 };
            // flipping column k from `sign` to `−sign`
            for (s, c) in sums.iter_mut().zip(&columns[k]) {
                *s -= 2.0 * sign * c;
            }
            mask ^= 1 << k;
            let val = eval(&sums);
            if val > best.0 {
                best = (val, mask);
            }
        }
        best
    });
    let (_, mask) =
        results.into_iter().fold(
            (f64::NEG_INFINITY, 0u64),
            |b, r| if r.0 > b.0 { r } else { b },
        );
    // exact re-evaluation of the winning pattern
    csum((0..rows).map(|j| {
        let mut acc = CompensatedSum::new();
        for (k, c) in columns.iter().enumerate() {
            let s = if mask >> k & 1 == 1 { -1.0 } else { 1.0 };
            acc.add(s * c[j]);
        }
        acc.value().abs()
    }))
}

/// A bounded operator between two weighted couples.
#[derive(Clone, Debug, PartialEq)]
pub struct CoupleOperator {
    pub matrix: Matrix,
    pub source: WeightedCouple,
    pub target: WeightedCouple,
}

impl CoupleOperator {
    pub fn new(matrix: Matrix, source: WeightedCouple, target: WeightedCouple) -> Result<Self> {
        check_len(source.len(), matrix.cols())?;
        check_len(target.len(), matrix.rows())?;
        Ok(Self {
            matrix,
            source,
            target,
        })
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.matrix.mul_vec(x)
    }
}

/// Norm of `T` on one side, `ℓp(w^i) → ℓq(z^i)`. Exact for `(∞, 1)` by sign
/// enumeration, for `p = 1` by column norms and for `q = ∞` by row norms;
/// other exponent pairs get the column-sum upper bound.
pub fn side_opnorm(t: &CoupleOperator, side: Side, opts: &NormOptions) -> Result<OpNorm> {
    let (p, q) = (t.source.p(), t.target.p());
    let u = t.source.weights(side);
    let v = t.target.weights(side);
    if p.is_inf() && q.is_one() {
        return opnorm_inf_to_1_with(&t.matrix, u, v, opts);
    }
    let inv_u: Vec<f64> = u.iter().map(|x| 1.0 / x).collect();
    let a = t.matrix.scaled(v, &inv_u)?;
    let col_norm = |k: usize| lp_norm((0..a.rows()).map(|j| a[(j, k)]), q.value());
    if p.is_one() {
        let value = (0..a.cols()).map(col_norm).fold(0.0, f64::max);
        return Ok(OpNorm { value, exact: true });
    }
    if q.is_inf() {
        let value = (0..a.rows())
            .map(|j| lp_norm(a.row(j).iter().copied(), p.conjugate().value()))
            .fold(0.0, f64::max);
        return Ok(OpNorm { value, exact: true });
    }
    Ok(OpNorm {
        value: csum((0..a.cols()).map(col_norm)),
        exact: false,
    })
}

/// `‖T‖ = max(‖T₀‖, ‖T₁‖)`.
pub fn couple_opnorm(t: &CoupleOperator) -> Result<OpNorm> {
    couple_opnorm_with(t, &NormOptions::default())
}

pub fn couple_opnorm_with(t: &CoupleOperator, opts: &NormOptions) -> Result<OpNorm> {
    let a = side_opnorm(t, Side::Zero, opts)?;
    let b = side_opnorm(t, Side::One, opts)?;
    Ok(OpNorm {
        value: a.value.max(b.value),
        exact: a.exact && b.exact,
    })
}

/// Diagonal multiplier `a_k ↦ b_k` on a couple, as a map `ℓ∞(w̄) → ℓ¹(w̄)`,
/// together with `S = Σ_k |b_k/a_k|` (terms with `b_k = 0` count as 0).
pub fn multiplier(c: &WeightedCouple, a: &[f64], b: &[f64]) -> Result<(CoupleOperator, f64)> {
    c.check(a)?;
    c.check(b)?;
    let mut d = Vec::with_capacity(a.len());
    for (&x, &y) in a.iter().zip(b) {
        if y != 0.0 && x == 0.0 {
            return Err(Error::Domain(
                "multiplier b/a has a zero denominator".into(),
            ));
        }
        d.push(crate::numeric::ratio(y, x));
    }
    let s = csum(d.iter().map(|v| v.abs()));
    let op = CoupleOperator::new(
        Matrix::diagonal(&d),
        c.with_exponent(Exponent::INF),
        c.with_exponent(Exponent::ONE),
    )?;
    Ok((op, s))
}
