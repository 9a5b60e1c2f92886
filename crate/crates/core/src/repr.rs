//! Representations `x = Σ_k x_k`, the discrete Calderón transform, block
//! representations from the fundamental lemma, and the J/K-gap minimizer.

use serde::Serialize;

use crate::couples::{j_functional, k_exact, k_surrogate, Side, WeightedCouple};
use crate::error::{check_len, Error, Result};
use crate::lp::{LinearProgram, Relation};
use crate::numeric::{csum, powi, ratio};
use crate::retract::{block_index, partition};

/// A finite family `{x_k}`, `k ∈ [k_min, k_max]`, summing to `target`.
#[derive(Clone, Debug, PartialEq)]
pub struct Representation {
    lambda: f64,
    k_min: i64,
    parts: Vec<Vec<f64>>,
    target: Vec<f64>,
}

pub const REPRESENTATION_TOL: f64 = 1e-10;

impl Representation {
    pub fn new(lambda: f64, k_min: i64, parts: Vec<Vec<f64>>, target: Vec<f64>) -> Result<Self> {
        if !(lambda > 1.0) {
            return Err(Error::Parameter(format!("λ = {lambda} must exceed 1")));
        }
        for p in &parts {
            check_len(target.len(), p.len())?;
        }
        let rep = Self {
            lambda,
            k_min,
            parts,
            target,
        };
        let scale = rep.target.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for (s, t) in rep.sum().iter().zip(&rep.target) {
            if (s - t).abs() > REPRESENTATION_TOL * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::Infeasible(format!("parts sum to {s}, expected {t}")));
            }
        }
        Ok(rep)
    }

    /// The zero representation on `[k_min, k_max]`.
    pub fn zero(lambda: f64, k_min: i64, k_max: i64, n: usize) -> Result<Self> {
        let len = (k_max - k_min + 1).max(0) as usize;
        Self::new(lambda, k_min, vec![vec![0.0; n]; len], vec![0.0; n])
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn k_min(&self) -> i64 {
        self.k_min
    }

    pub fn k_max(&self) -> i64 {
        self.k_min + self.parts.len() as i64 - 1
    }

    pub fn labels(&self) -> impl Iterator<Item = i64> + '_ {
        self.k_min..=self.k_max()
    }

    pub fn parts(&self) -> &[Vec<f64>] {
        &self.parts
    }

    pub fn part(&self, k: i64) -> Option<&[f64]> {
        let i = k.checked_sub(self.k_min)?;
        self.parts.get(usize::try_from(i).ok()?).map(Vec::as_slice)
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    /// Coordinatewise compensated sum of the parts.
    pub fn sum(&self) -> Vec<f64> {
        (0..self.target.len())
            .map(|n| csum(self.parts.iter().map(|p| p[n])))
            .collect()
    }

    /// `J(λ^k, x_k)` for every `k` in range.
    pub fn j_values(&self, c: &WeightedCouple) -> Result<Vec<f64>> {
        self.labels()
            .zip(&self.parts)
            .map(|(k, p)| j_functional(c, powi(self.lambda, k), p))
            .collect()
    }

    /// Rows `k, label, value` of the nonzero parts.
    pub fn to_csv(&self, labels: &[i64]) -> String {
        let mut out = String::from("k,label,value\n");
        for (k, p) in self.labels().zip(&self.parts) {
            for (l, v) in labels.iter().zip(p) {
                if *v != 0.0 {
                    out.push_str(&format!("{k},{l},{v:e}\n"));
                }
            }
        }
        out
    }
}

/// `Ω(c)_j = Σ_k min(1, λ^{j−k}) c_k` over the labels `k_min..`.
pub fn calderon(k_min: i64, c: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if !(lambda > 1.0) {
        return Err(Error::Parameter(format!("λ = {lambda} must exceed 1")));
    }
    Ok(calderon_at(
        k_min,
        c,
        lambda,
        k_min,
        k_min + c.len() as i64 - 1,
    ))
}

/// Calderón transform evaluated on an arbitrary `j` window.
pub fn calderon_at(k_min: i64, c: &[f64], lambda: f64, j_min: i64, j_max: i64) -> Vec<f64> {
    (j_min..=j_max)
        .map(|j| {
            csum(c.iter().enumerate().map(|(i, &ck)| {
                let k = k_min + i as i64;
                if j >= k {
                    ck
                } else {
                    powi(lambda, j - k) * ck
                }
            }))
        })
        .collect()
}

/// `a_k = a` restricted to the block `e_k` of the `λ` partition.
pub fn fundamental_representation(
    c: &WeightedCouple,
    a: &[f64],
    lambda: f64,
) -> Result<Representation> {
    if !c.p().is_one() {
        return Err(Error::UnsupportedExponent(c.p().value()));
    }
    c.check(a)?;
    let part = partition(c, lambda)?;
    let Some((k_min, k_max)) = part.label_range() else {
        return Representation::zero(lambda, 0, 0, 0);
    };
    let mut parts = vec![vec![0.0; a.len()]; (k_max - k_min + 1) as usize];
    for (n, &k) in part.phi().iter().enumerate() {
        parts[(k - k_min) as usize][n] = a[n];
    }
    Representation::new(lambda, k_min, parts, a.to_vec())
}

/// Largest `J(λ^k, a_k) / K(λ^k, a)` over the parts (0/0 counts as 0).
pub fn fundamental_constant(c: &WeightedCouple, rep: &Representation) -> Result<f64> {
    let js = rep.j_values(c)?;
    let mut worst: f64 = 0.0;
    for (k, j) in rep.labels().zip(js) {
        let kv = k_exact(c, powi(rep.lambda(), k), rep.target())?;
        if j > 0.0 && kv == 0.0 {
            return Ok(f64::INFINITY);
        }
        worst = worst.max(ratio(j, kv));
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StrongForm {
    pub c_prime: f64,
    /// `K(λ^j, x) = 0` with nonzero `Ω_j` somewhere.
    pub infinite: bool,
    pub j_min: i64,
    pub j_max: i64,
}

/// Measured `C′ = max_j Ω({J(λ^k, a_k)})_j / K(λ^j, x)`, over the
/// representation's labels padded by two on each side.
pub fn strong_form_check(
    c: &WeightedCouple,
    rep: &Representation,
    x: &[f64],
) -> Result<StrongForm> {
    c.check(x)?;
    let js = rep.j_values(c)?;
    let (j_min, j_max) = (rep.k_min() - 2, rep.k_max() + 2);
    let omega = calderon_at(rep.k_min(), &js, rep.lambda(), j_min, j_max);
    let mut out = StrongForm {
        c_prime: 0.0,
        infinite: false,
        j_min,
        j_max,
    };
    for (j, om) in (j_min..=j_max).zip(omega) {
        let kv = k_exact(c, powi(rep.lambda(), j), x)?;
        if om > 0.0 && kv == 0.0 {
            out.infinite = true;
            out.c_prime = f64::INFINITY;
        } else {
            out.c_prime = out.c_prime.max(ratio(om, kv));
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GapMethod {
    Greedy,
    Lp,
}

impl std::str::FromStr for GapMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(GapMethod::Greedy),
            "lp" | "lp-exact" => Ok(GapMethod::Lp),
            _ => Err(Error::Parameter(format!("unknown gap method `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GapOptions {
    pub method: GapMethod,
    /// Use `K̃` instead of the exact K in the denominators.
    pub surrogate: bool,
    /// Largest LP (in variables) before falling back to greedy.
    pub lp_var_cap: usize,
}

pub const LP_VAR_CAP: usize = 600;

impl Default for GapOptions {
    fn default() -> Self {
        Self {
            method: GapMethod::Lp,
            surrogate: false,
            lp_var_cap: LP_VAR_CAP,
        }
    }
}

/// A feasible representation of `y` together with its J/K sum.
#[derive(Clone, Debug, PartialEq)]
pub struct GapCertificate {
    pub value: f64,
    pub infinite: bool,
    pub witness: Representation,
    /// Method actually used.
    pub method: GapMethod,
    /// LP requested but skipped because of the size cap.
    pub fell_back: bool,
    pub surrogate: bool,
    /// Truncated label range; outside it the J/K ratio is monotone in k.
    pub k_range: (i64, i64),
}

/// `[⌈log_λ min σ⌉ − 1, ⌈log_λ max σ⌉ + 1]` with `σ_n = z⁰_n / z¹_n`.
pub fn gap_k_range(target: &WeightedCouple, lambda: f64) -> (i64, i64) {
    let ks = target
        .w0()
        .iter()
        .zip(target.w1())
        .map(|(&a, &b)| block_index(a, b, lambda));
    let (lo, hi) = ks.fold((i64::MAX, i64::MIN), |(l, h), k| (l.min(k), h.max(k)));
    if lo > hi {
        (0, 0)
    } else {
        (lo - 1, hi + 1)
    }
}

/// `Σ_k J(λ^k, y_k) / K(λ^k, x)` on a representation of `y`.
pub fn gap_value(
    source: &WeightedCouple,
    x: &[f64],
    target: &WeightedCouple,
    rep: &Representation,
    surrogate: bool,
) -> Result<f64> {
    let js = rep.j_values(target)?;
    let mut terms = Vec::with_capacity(js.len());
    for (k, j) in rep.labels().zip(js) {
        let kv = k_denominator(source, powi(rep.lambda(), k), x, surrogate)?;
        if j > 0.0 && kv == 0.0 {
            return Ok(f64::INFINITY);
        }
        terms.push(ratio(j, kv));
    }
    Ok(csum(terms))
}

fn k_denominator(source: &WeightedCouple, t: f64, x: &[f64], surrogate: bool) -> Result<f64> {
    if surrogate {
        k_surrogate(source, t, x)
    } else {
        k_exact(source, t, x)
    }
}

/// Minimize `Σ_k J(λ^k, y_k)/K(λ^k, x)` over representations `y = Σ y_k`.
pub fn jk_gap(
    source: &WeightedCouple,
    x: &[f64],
    target: &WeightedCouple,
    y: &[f64],
    lambda: f64,
    opts: &GapOptions,
) -> Result<GapCertificate> {
    if !source.p().is_inf() {
        return Err(Error::UnsupportedExponent(source.p().value()));
    }
    if !target.p().is_one() {
        return Err(Error::UnsupportedExponent(target.p().value()));
    }
    if !(lambda > 1.0) {
        return Err(Error::Parameter(format!("λ = {lambda} must exceed 1")));
    }
    source.check(x)?;
    target.check(y)?;
    let (k_lo, k_hi) = gap_k_range(target, lambda);
    let n_k = (k_hi - k_lo + 1) as usize;
    let n = y.len();
    let mut cert = GapCertificate {
        value: 0.0,
        infinite: false,
        witness: Representation::zero(lambda, k_lo, k_hi, n)?,
        method: opts.method,
        fell_back: false,
        surrogate: opts.surrogate,
        k_range: (k_lo, k_hi),
    };
    if y.iter().all(|&v| v == 0.0) {
        return Ok(cert);
    }
    let kx: Vec<f64> = (k_lo..=k_hi)
        .map(|k| k_denominator(source, powi(lambda, k), x, opts.surrogate))
        .collect::<Result<_>>()?;
    if kx.contains(&0.0) {
        // x = 0 (K vanishes identically once it vanishes anywhere)
        cert.infinite = true;
        cert.value = f64::INFINITY;
        cert.witness = greedy_witness(target, y, lambda, k_lo, &vec![1.0; n_k])?;
        return Ok(cert);
    }
    let n_vars = 2 * n * n_k + n_k;
    let use_lp = opts.method == GapMethod::Lp && n_vars <= opts.lp_var_cap;
    if opts.method == GapMethod::Lp && !use_lp {
        cert.fell_back = true;
        cert.method = GapMethod::Greedy;
    }
    cert.witness = if use_lp {
        lp_witness(target, y, lambda, k_lo, &kx)?
    } else {
        greedy_witness(target, y, lambda, k_lo, &kx)?
    };
    cert.value = gap_value(source, x, target, &cert.witness, opts.surrogate)?;
    Ok(cert)
}

fn greedy_witness(
    target: &WeightedCouple,
    y: &[f64],
    lambda: f64,
    k_lo: i64,
    kx: &[f64],
) -> Result<Representation> {
    let mut parts = vec![vec![0.0; y.len()]; kx.len()];
    let (z0, z1) = (target.w0(), target.w1());
    for n in 0..y.len() {
        let best = (0..kx.len())
            .map(|i| {
                let t = powi(lambda, k_lo + i as i64);
                (i, z0[n].max(t * z1[n]) / kx[i])
            })
            .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
        parts[best.0][n] = y[n];
    }
    Representation::new(lambda, k_lo, parts, y.to_vec())
}

fn lp_witness(
    target: &WeightedCouple,
    y: &[f64],
    lambda: f64,
    k_lo: i64,
    kx: &[f64],
) -> Result<Representation> {
    let (n, n_k) = (y.len(), kx.len());
    let plus = |i: usize, m: usize| 2 * (i * n + m);
    let u = |i: usize| 2 * n * n_k + i;
    let mut obj = vec![0.0; 2 * n * n_k + n_k];
    for (i, &k) in kx.iter().enumerate() {
        obj[u(i)] = 1.0 / k;
    }
    let mut lp = LinearProgram::minimize(obj);
    for m in 0..n {
        let terms: Vec<(usize, f64)> = (0..n_k)
            .flat_map(|i| [(plus(i, m), 1.0), (plus(i, m) + 1, -1.0)])
            .collect();
        lp.constrain_sparse(&terms, Relation::Eq, y[m])?;
    }
    for i in 0..n_k {
        let t = powi(lambda, k_lo + i as i64);
        for side in Side::BOTH {
            let (w, s) = match side {
                Side::Zero => (target.w0(), 1.0),
                Side::One => (target.w1(), t),
            };
            let mut terms: Vec<(usize, f64)> = (0..n)
                .flat_map(|m| [(plus(i, m), s * w[m]), (plus(i, m) + 1, s * w[m])])
                .collect();
            terms.push((u(i), -1.0));
            lp.constrain_sparse(&terms, Relation::Le, 0.0)?;
        }
    }
    let sol = lp.solve()?;
    let mut parts: Vec<Vec<f64>> = (0..n_k)
        .map(|i| {
            (0..n)
                .map(|m| sol.x[plus(i, m)] - sol.x[plus(i, m) + 1])
                .collect()
        })
        .collect();
    // put the floating residual of the equality rows on the largest part
    for m in 0..n {
        let resid = y[m] - csum(parts.iter().map(|p| p[m]));
        if resid != 0.0 {
            let i = (0..n_k)
                .max_by(|&a, &b| parts[a][m].abs().total_cmp(&parts[b][m].abs()))
                .unwrap_or(0);
            parts[i][m] += resid;
        }
    }
    Representation::new(lambda, k_lo, parts, y.to_vec())
}

/// Outcome of the decidable ordering checks between `x` and `y`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderingReport {
    /// `max_k K(λ^k, y) / K(λ^k, x)` over the grid.
    pub k_constant: f64,
    pub k_ordering: bool,
    /// First grid point with `J(t, y) ≤ K(t, x)`.
    pub bergh_t: Option<f64>,
    pub bergh: bool,
    /// `Σ_k K(λ^k, y) / K(λ^k, x)`.
    pub cwikel_sum: f64,
    pub cwikel_finite: bool,
    pub k_min: i64,
    pub k_max: i64,
}

/// K-ordering, Bergh and Cwikel criteria on the λ-grid spanning both couples'
/// weight ratios (padded by one step).
pub fn ordering_checks(
    source: &WeightedCouple,
    x: &[f64],
    target: &WeightedCouple,
    y: &[f64],
    lambda: f64,
) -> Result<OrderingReport> {
    source.check(x)?;
    target.check(y)?;
    let (a, b) = gap_k_range(source, lambda);
    let (c, d) = gap_k_range(target, lambda);
    let (k_min, k_max) = (a.min(c), b.max(d));
    let mut rep = OrderingReport {
        k_constant: 0.0,
        k_ordering: true,
        bergh_t: None,
        bergh: false,
        cwikel_sum: 0.0,
        cwikel_finite: true,
        k_min,
        k_max,
    };
    let mut terms = Vec::new();
    for k in k_min..=k_max {
        let t = powi(lambda, k);
        let kx = k_exact(source, t, x)?;
        let ky = k_exact(target, t, y)?;
        let r = if ky > 0.0 && kx == 0.0 {
            f64::INFINITY
        } else {
            ratio(ky, kx)
        };
        rep.k_constant = rep.k_constant.max(r);
        terms.push(r);
        if rep.bergh_t.is_none() && j_functional(target, t, y)? <= kx {
            rep.bergh_t = Some(t);
        }
    }
    rep.k_ordering = rep.k_constant <= 1.0 + 1e-12;
    rep.bergh = rep.bergh_t.is_some();
    rep.cwikel_sum = csum(terms);
    rep.cwikel_finite = rep.cwikel_sum.is_finite();
    Ok(rep)
}
