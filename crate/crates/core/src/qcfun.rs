//! Quasi-concave parameter functions: a closed catalog with exact evaluation,
//! the dilation function, the conjugate `t / ρ(t)`, derived weights, and the
//! doubling sequence `τ` used to discretize a parameter function.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Direction, Error, Result};

/// A positive function on `(0, ∞)` that is nondecreasing with `ρ(t)/t`
/// nonincreasing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QcSpec", into = "QcSpec")]
pub struct QcFunction {
    kind: QcKind,
}

#[derive(Clone, Debug, PartialEq)]
pub enum QcKind {
    /// `t^θ`, `θ ∈ [0, 1]`.
    PowerLaw { theta: f64 },
    /// `t^θ (1 + |ln t|)^β` with `|β| ≤ min(θ, 1 − θ)`.
    PowerLog { theta: f64, beta: f64 },
    /// `max_i min(c_i, t·d_i)`.
    MinAffine { pairs: Vec<(f64, f64)> },
    /// Least nondecreasing concave majorant of `(0,0)` and the samples.
    ConcaveMajorant {
        samples: Vec<(f64, f64)>,
        hull: Vec<(f64, f64)>,
    },
}

/// Serialized form, e.g. `{"kind":"power","theta":0.5}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QcSpec {
    Power { theta: f64 },
    PowerLog { theta: f64, beta: f64 },
    MinAffine { pairs: Vec<[f64; 2]> },
    ConcaveMajorant { samples: Vec<[f64; 2]> },
}

impl TryFrom<QcSpec> for QcFunction {
    type Error = Error;
    fn try_from(spec: QcSpec) -> Result<Self> {
        match spec {
            QcSpec::Power { theta } => QcFunction::power(theta),
            QcSpec::PowerLog { theta, beta } => QcFunction::power_log(theta, beta),
            QcSpec::MinAffine { pairs } => {
                QcFunction::min_affine(pairs.into_iter().map(|[c, d]| (c, d)).collect())
            }
            QcSpec::ConcaveMajorant { samples } => {
                QcFunction::concave_majorant(samples.into_iter().map(|[t, y]| (t, y)).collect())
            }
        }
    }
}

impl From<QcFunction> for QcSpec {
    fn from(f: QcFunction) -> Self {
        match f.kind {
            QcKind::PowerLaw { theta } => QcSpec::Power { theta },
            QcKind::PowerLog { theta, beta } => QcSpec::PowerLog { theta, beta },
            QcKind::MinAffine { pairs } => QcSpec::MinAffine {
                pairs: pairs.into_iter().map(|(c, d)| [c, d]).collect(),
            },
            QcKind::ConcaveMajorant { samples, .. } => QcSpec::ConcaveMajorant {
                samples: samples.into_iter().map(|(t, y)| [t, y]).collect(),
            },
        }
    }
}

impl QcFunction {
    pub fn power(theta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::Parameter(format!(
                "power exponent {theta} not in [0,1]"
            )));
        }
        Ok(Self {
            kind: QcKind::PowerLaw { theta },
        })
    }

    pub fn power_log(theta: f64, beta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::Parameter(format!(
                "power-log exponent {theta} not in (0,1)"
            )));
        }
        if !(beta.is_finite() && beta.abs() <= theta.min(1.0 - theta)) {
            return Err(Error::Parameter(format!(
                "power-log correction {beta} exceeds min(θ, 1-θ) = {}",
                theta.min(1.0 - theta)
            )));
        }
        Ok(Self {
            kind: QcKind::PowerLog { theta, beta },
        })
    }

    pub fn min_affine(pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Parameter(
                "min-affine needs at least one pair".into(),
            ));
        }
        if pairs
            .iter()
            .any(|&(c, d)| !(c > 0.0 && d > 0.0 && c.is_finite() && d.is_finite()))
        {
            return Err(Error::Parameter(
                "min-affine pairs must be positive and finite".into(),
            ));
        }
        Ok(Self {
            kind: QcKind::MinAffine { pairs },
        })
    }

    pub fn concave_majorant(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples
            .iter()
            .any(|&(t, y)| !(t > 0.0 && t.is_finite() && y >= 0.0 && y.is_finite()))
        {
            return Err(Error::Parameter(
                "majorant samples need t > 0 and finite y ≥ 0".into(),
            ));
        }
        if !samples.iter().any(|&(_, y)| y > 0.0) {
            return Err(Error::Parameter("majorant needs a positive sample".into()));
        }
        let hull = majorant_hull(&samples);
        Ok(Self {
            kind: QcKind::ConcaveMajorant { samples, hull },
        })
    }

    pub fn kind(&self) -> &QcKind {
        &self.kind
    }

    /// Exponent of a pure power law.
    pub fn power_exponent(&self) -> Option<f64> {
        match self.kind {
            QcKind::PowerLaw { theta } => Some(theta),
            _ => None,
        }
    }

    /// `ρ(t)`; errors for `t ≤ 0`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) || t.is_infinite() {
            return Err(Error::Domain(format!("ρ evaluated at t = {t}")));
        }
        Ok(self.at(t))
    }

    /// `ρ(t)` for `t > 0` without the domain check.
    pub fn at(&self, t: f64) -> f64 {
        match &self.kind {
            QcKind::PowerLaw { theta } => power(t, *theta),
            QcKind::PowerLog { theta, beta } => power(t, *theta) * (1.0 + t.ln().abs()).powf(*beta),
            QcKind::MinAffine { pairs } => {
                pairs.iter().map(|&(c, d)| c.min(t * d)).fold(0.0, f64::max)
            }
            QcKind::ConcaveMajorant { hull, .. } => eval_hull(hull, t),
        }
    }

    /// The conjugate `ρ′(t) = t / ρ(t)`.
    pub fn conjugate_at(&self, t: f64) -> f64 {
        match self.kind {
            QcKind::PowerLaw { theta } => power(t, 1.0 - theta),
            _ => t / self.at(t),
        }
    }

    /// `s_ρ(t) = sup_u ρ(tu)/ρ(u)`, the sup taken over `grid` (exact for power
    /// laws).
    pub fn dilation(&self, t: f64, grid: &[f64]) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("dilation at t = {t}")));
        }
        if let Some(theta) = self.power_exponent() {
            return Ok(power(t, theta));
        }
        if grid.is_empty() {
            return Err(Error::Parameter("dilation needs a non-empty grid".into()));
        }
        Ok(grid
            .iter()
            .map(|&u| self.at(t * u) / self.at(u))
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// Growth exponents of the dilation function at the two ends of `grid`.
    pub fn dilation_indices(&self, grid: &[f64]) -> Result<DilationIndices> {
        let lo = grid.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = grid.iter().copied().fold(0.0, f64::max);
        if !(lo < 1.0 && hi > 1.0) {
            return Err(Error::Parameter("index grid must straddle t = 1".into()));
        }
        Ok(DilationIndices {
            at_zero: self.dilation(lo, grid)?.ln() / lo.ln(),
            at_infinity: self.dilation(hi, grid)?.ln() / hi.ln(),
        })
    }

    /// Verify the defining monotonicity properties on `grid` (sorted ascending).
    pub fn check_quasi_concave(&self, grid: &[f64]) -> Result<()> {
        let tol = 1e-12;
        for w in grid.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (ra, rb) = (self.at(a), self.at(b));
            if !(ra > 0.0) {
                return Err(Error::Domain(format!("ρ({a}) = {ra} is not positive")));
            }
            if rb < ra * (1.0 - tol) {
                return Err(Error::Domain(format!("ρ decreases between {a} and {b}")));
            }
            if rb / b > (ra / a) * (1.0 + tol) {
                return Err(Error::Domain(format!(
                    "ρ(t)/t increases between {a} and {b}"
                )));
            }
        }
        Ok(())
    }
}

/// Growth exponents `ln s(t)/ln t` near `t → 0` and `t → ∞`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DilationIndices {
    pub at_zero: f64,
    pub at_infinity: f64,
}

impl DilationIndices {
    /// Both exponents strictly inside `(0, 1)`: the two-sided power-type class.
    pub fn is_two_sided(&self) -> bool {
        let inside = |a: f64| a > 1e-9 && a < 1.0 - 1e-9;
        inside(self.at_zero) && inside(self.at_infinity)
    }
}

fn power(t: f64, theta: f64) -> f64 {
    if theta == 0.0 {
        1.0
    } else if theta == 1.0 {
        t
    } else if theta == 0.5 {
        t.sqrt()
    } else {
        t.powf(theta)
    }
}

// Upper hull of the origin and the samples, cut flat at the maximum value.
fn majorant_hull(samples: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = samples.to_vec();
    pts.push((0.0, 0.0));
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        while let Some(&last) = hull.last() {
            if last.0 == p.0 {
                hull.pop();
                continue;
            }
            if hull.len() >= 2 {
                let a = hull[hull.len() - 2];
                // drop `last` if it lies on or below the chord a→p
                let cross = (last.0 - a.0) * (p.1 - a.1) - (last.1 - a.1) * (p.0 - a.0);
                if cross >= 0.0 {
                    hull.pop();
                    continue;
                }
            }
            break;
        }
        hull.push(p);
    }
    let top = hull
        .iter()
        .enumerate()
        .fold(0, |best, (i, p)| if p.1 > hull[best].1 { i } else { best });
    hull.truncate(top + 1);
    hull
}

fn eval_hull(hull: &[(f64, f64)], t: f64) -> f64 {
    let last = hull[hull.len() - 1];
    if t >= last.0 {
        return last.1;
    }
    let i = hull.partition_point(|p| p.0 <= t);
    let (a, b) = (hull[i - 1], hull[i]);
    a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0)
}

/// `n ↦ w⁰_n / ρ(w⁰_n / w¹_n)`.
pub fn derived_weight(rho: &QcFunction, w0: &[f64], w1: &[f64]) -> Result<Vec<f64>> {
    check_len(w0.len(), w1.len())?;
    w0.iter()
        .zip(w1)
        .map(|(&a, &b)| {
            if !(a > 0.0 && b > 0.0) {
                return Err(Error::Domain("weights must be positive".into()));
            }
            Ok(a / rho.eval(a / b)?)
        })
        .collect()
}

/// Doubling sequence `τ_k` with `τ_0 = 1` and
/// `min(ρ(τ_{k+1})/ρ(τ_k), ρ′(τ_{k+1})/ρ′(τ_k)) = 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSequence {
    k_min: i64,
    tau: Vec<f64>,
    rho: QcFunction,
    pub ratio_constant: f64,
    pub truncated_low: bool,
    pub truncated_high: bool,
}

impl SparseSequence {
    pub fn k_min(&self) -> i64 {
        self.k_min
    }

    pub fn k_max(&self) -> i64 {
        self.k_min + self.tau.len() as i64 - 1
    }

    pub fn labels(&self) -> Vec<i64> {
        (self.k_min..=self.k_max()).collect()
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn tau_at(&self, k: i64) -> Option<f64> {
        usize::try_from(k - self.k_min)
            .ok()
            .and_then(|i| self.tau.get(i).copied())
    }

    pub fn rho(&self) -> &QcFunction {
        &self.rho
    }

    pub fn rho_values(&self) -> Vec<f64> {
        self.tau.iter().map(|&t| self.rho.at(t)).collect()
    }

    /// Rows `(k, τ_k, ρ(τ_k))`.
    pub fn rows(&self) -> Vec<(i64, f64, f64)> {
        self.labels()
            .into_iter()
            .zip(&self.tau)
            .map(|(k, &t)| (k, t, self.rho.at(t)))
            .collect()
    }

    /// `max_{j,k} min(1, τ_j/τ_k) ρ(τ_k)/ρ(τ_j) · 2^{|j−k|}`; at most 1 when
    /// the sequence is correctly separated.
    pub fn separation_ratio(&self) -> f64 {
        let rho = self.rho_values();
        let mut worst: f64 = 0.0;
        for (j, (&tj, &rj)) in self.tau.iter().zip(&rho).enumerate() {
            for (k, (&tk, &rk)) in self.tau.iter().zip(&rho).enumerate() {
                let d = (j as i32 - k as i32).abs();
                let v = (tj / tk).min(1.0) * rk / rj * 2f64.powi(d);
                worst = worst.max(v);
            }
        }
        worst
    }

    /// `max_t ρ(t) / sup_k min(1, t/τ_k) ρ(τ_k)` over `grid`.
    pub fn covering_constant(&self, grid: &[f64]) -> f64 {
        let rho = self.rho_values();
        grid.iter()
            .map(|&t| {
                let lower = self
                    .tau
                    .iter()
                    .zip(&rho)
                    .map(|(&tk, &rk)| (t / tk).min(1.0) * rk)
                    .fold(0.0, f64::max);
                self.rho.at(t) / lower
            })
            .fold(0.0, f64::max)
    }
}

const RATIO: f64 = 2.0;

/// Build `τ_k` for `k ∈ [k_min, k_max]`.
///
/// If ρ or ρ′ is bounded on one side the recursion cannot reach ratio 2; this
/// is an error unless `truncate` is set, in which case the sequence stops at
/// the failing side and the corresponding flag is raised.
pub fn sparse_tau(
    rho: &QcFunction,
    k_min: i64,
    k_max: i64,
    truncate: bool,
) -> Result<SparseSequence> {
    if k_min > k_max {
        return Err(Error::Parameter(format!(
            "empty label range [{k_min}, {k_max}]"
        )));
    }
    let (lo, hi) = (k_min.min(0), k_max.max(0));
    let mut forward = vec![1.0];
    let mut truncated_high = false;
    for k in 0..hi {
        match forward_step(rho, forward[k as usize]) {
            Some(t) => forward.push(t),
            None if truncate => {
                truncated_high = true;
                break;
            }
            None => {
                return Err(Error::RangeAssumptionViolated {
                    direction: Direction::Forward,
                    k,
                })
            }
        }
    }
    let mut backward = Vec::new();
    let mut truncated_low = false;
    let mut cur = 1.0;
    for k in (lo + 1..=0).rev() {
        match backward_step(rho, cur) {
            Some(t) => {
                backward.push(t);
                cur = t;
            }
            None if truncate => {
                truncated_low = true;
                break;
            }
            None => {
                return Err(Error::RangeAssumptionViolated {
                    direction: Direction::Backward,
                    k,
                })
            }
        }
    }
    let start = -(backward.len() as i64);
    backward.reverse();
    backward.extend(forward);
    // keep only the requested window
    let from = (k_min.max(start) - start) as usize;
    let to = ((k_max - start) as usize + 1).min(backward.len());
    if from >= to {
        return Err(Error::RangeAssumptionViolated {
            direction: if k_min > 0 {
                Direction::Forward
            } else {
                Direction::Backward
            },
            k: 0,
        });
    }
    Ok(SparseSequence {
        k_min: k_min.max(start),
        tau: backward[from..to].to_vec(),
        rho: rho.clone(),
        ratio_constant: RATIO,
        truncated_low,
        truncated_high,
    })
}

fn forward_step(rho: &QcFunction, tk: f64) -> Option<f64> {
    let (r0, c0) = (rho.at(tk), rho.conjugate_at(tk));
    let g = |t: f64| (rho.at(t) / r0).min(rho.conjugate_at(t) / c0);
    let mut lo = tk;
    let mut hi = tk * 2.0;
    while !(g(hi) >= RATIO) {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() || hi > f64::MAX / 4.0 {
            return None;
        }
    }
    loop {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            return Some(hi);
        }
        if g(mid) >= RATIO {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

fn backward_step(rho: &QcFunction, tk: f64) -> Option<f64> {
    let (r0, c0) = (rho.at(tk), rho.conjugate_at(tk));
    let h = |t: f64| (r0 / rho.at(t)).min(c0 / rho.conjugate_at(t));
    let mut hi = tk;
    let mut lo = tk * 0.5;
    while !(h(lo) >= RATIO) {
        hi = lo;
        lo *= 0.5;
        if lo < f64::MIN_POSITIVE * 4.0 {
            return None;
        }
    }
    loop {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            return Some(lo);
        }
        if h(mid) >= RATIO {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}
