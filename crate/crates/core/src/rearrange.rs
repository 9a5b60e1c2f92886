//! Step functions on `(0, ∞)`, decreasing rearrangement, and the
//! Marcinkiewicz `M(ψ)` and Lorentz `Λ(φ)` norms evaluated exactly on them.

use serde::Serialize;

use crate::error::{check_len, Error, Result};
use crate::numeric::{adaptive_simpson, csum, log_grid};
use crate::qcfun::{QcFunction, QcKind};

/// `f = v_i` on `(t_{i−1}, t_i]`, `t_0 = 0`, zero beyond `t_N`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepFunction {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_len(breaks.len(), values.len())?;
        let mut prev = 0.0;
        for &t in &breaks {
            if !(t > prev && t.is_finite()) {
                return Err(Error::Parameter(format!(
                    "breakpoints must increase strictly from 0, got {t} after {prev}"
                )));
            }
            prev = t;
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Parameter(
                "step values must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { breaks, values })
    }

    /// Pieces of the given widths laid out from 0.
    pub fn from_widths(widths: &[f64], values: Vec<f64>) -> Result<Self> {
        let mut t = 0.0;
        let breaks = widths
            .iter()
            .map(|w| {
                t += w;
                t
            })
            .collect();
        Self::new(breaks, values)
    }

    pub fn zero() -> Self {
        Self {
            breaks: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.pieces().map(|(a, b, _)| b - a).collect()
    }

    /// `(left, right, value)` per piece.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breaks.iter().enumerate().map(|(i, &b)| {
            (
                if i == 0 { 0.0 } else { self.breaks[i - 1] },
                b,
                self.values[i],
            )
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let i = self.breaks.partition_point(|&b| b < t);
        self.values.get(i).copied().unwrap_or(0.0)
    }

    /// Measure of `{f > s}`.
    pub fn level_measure(&self, s: f64) -> f64 {
        csum(self.pieces().filter(|p| p.2 > s).map(|(a, b, _)| b - a))
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0])
    }

    /// Pointwise sum on the merged breakpoints.
    pub fn add(&self, other: &StepFunction) -> StepFunction {
        let mut ts: Vec<f64> = self.breaks.iter().chain(&other.breaks).copied().collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        let values = ts.iter().map(|&t| self.eval(t) + other.eval(t)).collect();
        StepFunction { breaks: ts, values }
    }

    pub fn scale(&self, c: f64) -> StepFunction {
        StepFunction {
            breaks: self.breaks.clone(),
            values: self.values.iter().map(|v| v * c.abs()).collect(),
        }
    }

    /// Reads rows `t_right,value`; blank lines and a non-numeric header are skipped.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut breaks = Vec::new();
        let mut values = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed: Option<(f64, f64)> = match cols.as_slice() {
                [a, b] => a.parse().ok().zip(b.parse().ok()),
                _ => None,
            };
            match parsed {
                Some((t, v)) => {
                    breaks.push(t);
                    values.push(v);
                }
                None if i == 0 => continue,
                None => {
                    return Err(Error::Config(format!(
                        "line {}: expected `t_right,value`",
                        i + 1
                    )))
                }
            }
        }
        Self::new(breaks, values)
    }
}

/// The nonincreasing equimeasurable rearrangement (pieces sorted by value,
/// equal values kept as separate pieces).
pub fn rearrange(f: &StepFunction) -> StepFunction {
    let mut pieces: Vec<(f64, f64)> = f.pieces().map(|(a, b, v)| (v, b - a)).collect();
    pieces.sort_by(|x, y| y.0.total_cmp(&x.0));
    let widths: Vec<f64> = pieces.iter().map(|p| p.1).collect();
    let values = pieces.into_iter().map(|p| p.0).collect();
    StepFunction::from_widths(&widths, values).expect("rearranged widths stay positive")
}

/// A concave weight from the catalog, checked for positivity and concavity.
#[derive(Clone, Debug, PartialEq)]
pub struct ConcaveWeight {
    f: QcFunction,
}

impl ConcaveWeight {
    pub fn new(f: QcFunction) -> Result<Self> {
        let grid = log_grid(1e-6, 1e6, 241);
        f.check_quasi_concave(&grid)?;
        for w in grid.windows(3) {
            // midpoint test on each adjacent pair of grid points
            let (a, b) = (w[0], w[2]);
            let m = 0.5 * (a + b);
            let lhs = f.at(m);
            let rhs = 0.5 * (f.at(a) + f.at(b));
            if lhs < rhs * (1.0 - 1e-12) {
                return Err(Error::Admissibility(format!(
                    "weight is not concave near t = {m}"
                )));
            }
        }
        Ok(Self { f })
    }

    pub fn power(theta: f64) -> Result<Self> {
        Self::new(QcFunction::power(theta)?)
    }

    pub fn function(&self) -> &QcFunction {
        &self.f
    }

    pub fn at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            // right limit at the origin
            match self.f.kind() {
                QcKind::PowerLaw { theta } if *theta == 0.0 => 1.0,
                _ => 0.0,
            }
        } else {
            self.f.at(t)
        }
    }

    /// `∫_a^b φ(u) du/u`.
    fn log_integral(&self, a: f64, b: f64) -> Result<f64> {
        if let Some(theta) = self.f.power_exponent() {
            if theta == 0.0 {
                if a == 0.0 {
                    return Err(Error::Admissibility("∫₀ du/u diverges".into()));
                }
                return Ok((b / a).ln());
            }
            return Ok((b.powf(theta) - a.powf(theta)) / theta);
        }
        let lo = if a == 0.0 { b.ln() - LOG_SPAN } else { a.ln() };
        let g = |s: f64| self.f.at(s.exp());
        Ok(adaptive_simpson(&g, lo, b.ln(), QUAD_TOL * self.f.at(b)))
    }
}

const QUAD_TOL: f64 = 1e-11;
const LOG_SPAN: f64 = 90.0;

/// `C₁ = max_t (ψ(t)/t) ∫₀^t du/ψ(u)` over the grid.
pub fn check_psi(psi: &ConcaveWeight, grid: &[f64]) -> Result<f64> {
    let f = psi.function();
    let integral = |t: f64| -> Result<f64> {
        match f.kind() {
            QcKind::PowerLaw { theta } => {
                if *theta >= 1.0 {
                    Err(Error::Admissibility(
                        "∫₀ du/ψ(u) diverges logarithmically for ψ(t) = t".into(),
                    ))
                } else {
                    Ok(t.powf(1.0 - theta) / (1.0 - theta))
                }
            }
            QcKind::PowerLog { theta, .. } => {
                // ∫ e^{s}/ψ(e^{s}) ds in s = ln u
                let span = LOG_SPAN / (1.0 - theta);
                let g = |s: f64| s.exp() / f.at(s.exp());
                Ok(adaptive_simpson(
                    &g,
                    t.ln() - span,
                    t.ln(),
                    QUAD_TOL * t / f.at(t),
                ))
            }
            _ => Err(Error::Admissibility(
                "∫₀ du/ψ(u) diverges: ψ is linear near the origin".into(),
            )),
        }
    };
    let mut c: f64 = 0.0;
    for &t in grid {
        c = c.max(integral(t)? * f.at(t) / t);
    }
    Ok(c)
}

/// `C₂ = max_t ∫₀^t φ(u) du/u / φ(t)` over the grid.
pub fn check_phi(phi: &ConcaveWeight, grid: &[f64]) -> Result<f64> {
    let mut c: f64 = 0.0;
    for &t in grid {
        c = c.max(phi.log_integral(0.0, t)? / phi.at(t));
    }
    Ok(c)
}

/// `sup_t ψ(t) f*(t)`.
pub fn m_norm(psi: &ConcaveWeight, f: &StepFunction) -> f64 {
    let r = rearrange(f);
    r.pieces()
        .map(|(_, b, v)| psi.at(b) * v)
        .fold(0.0, f64::max)
}

/// `∫ f* dφ` as the exact Stieltjes sum `Σ f*_i (φ(t_i) − φ(t_{i−1}))`.
pub fn lambda_norm(phi: &ConcaveWeight, f: &StepFunction) -> f64 {
    stieltjes(&rearrange(f), |t| phi.at(t))
}

fn stieltjes(fstar: &StepFunction, g: impl Fn(f64) -> f64) -> f64 {
    csum(fstar.pieces().map(|(a, b, v)| {
        let ga = if a == 0.0 { 0.0 } else { g(a) };
        v * (g(b) - ga)
    }))
}

const AUDIT_SAMPLES: usize = 64;

/// Audit form `sup_t (ψ(t)/t) ∫₀^t f*`, sampled at every breakpoint and on a
/// log grid inside each piece; a lower estimate of the true supremum.
pub fn m_norm_avg(psi: &ConcaveWeight, f: &StepFunction) -> f64 {
    let r = rearrange(f);
    let mut best: f64 = 0.0;
    let mut acc = 0.0;
    for (a, b, v) in r.pieces() {
        let lo = if a == 0.0 { b * 1e-9 } else { a };
        for t in log_grid(lo, b, AUDIT_SAMPLES) {
            best = best.max(psi.at(t) / t * (acc + v * (t - a)));
        }
        acc += v * (b - a);
    }
    best
}

/// Audit form `∫ f*(t) φ(t) dt/t`.
pub fn lambda_norm_avg(phi: &ConcaveWeight, f: &StepFunction) -> Result<f64> {
    weighted_integral(phi, &rearrange(f))
}

/// `∫ |g(t)| φ(t)/t dt` on the pieces of `g` as given.
pub fn weighted_integral(phi: &ConcaveWeight, g: &StepFunction) -> Result<f64> {
    let terms: Result<Vec<f64>> = g
        .pieces()
        .filter(|p| p.2 != 0.0)
        .map(|(a, b, v)| Ok(v * phi.log_integral(a, b)?))
        .collect();
    Ok(csum(terms?))
}

/// `sup_u min(ψ₀(u), tψ₁(u)) f*(u)`.
pub fn k_marcinkiewicz(
    psi0: &ConcaveWeight,
    psi1: &ConcaveWeight,
    t: f64,
    f: &StepFunction,
) -> f64 {
    rearrange(f)
        .pieces()
        .map(|(_, b, v)| psi0.at(b).min(t * psi1.at(b)) * v)
        .fold(0.0, f64::max)
}

/// `∫ f* d[min(φ₀, tφ₁)]`. The Stieltjes sum over a step integrand only
/// needs the integrator at the breakpoints, so crossings of the two weights
/// need no extra nodes.
pub fn k_lorentz(phi0: &ConcaveWeight, phi1: &ConcaveWeight, t: f64, f: &StepFunction) -> f64 {
    stieltjes(&rearrange(f), |u| phi0.at(u).min(t * phi1.at(u)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmbeddingReport {
    /// `sup ψ g*`.
    pub m_norm: f64,
    /// `sup ψ |g|` on the unrearranged pieces.
    pub weighted_sup: f64,
    pub marcinkiewicz_ok: bool,
    /// `∫ |g| φ/t dt`.
    pub hl_lhs: f64,
    /// `∫ g* φ/t dt`.
    pub hl_rhs: f64,
    pub hardy_littlewood_ok: bool,
}

/// `‖g‖_{M(ψ)} ≤ sup ψ|g|` and `∫ |g| h ≤ ∫ g* h` for `h = φ(t)/t`.
pub fn embedding_checks(
    psi: &ConcaveWeight,
    phi: &ConcaveWeight,
    g: &StepFunction,
) -> Result<EmbeddingReport> {
    let m = m_norm(psi, g);
    let weighted_sup = g
        .pieces()
        .map(|(_, b, v)| psi.at(b) * v)
        .fold(0.0, f64::max);
    let hl_lhs = weighted_integral(phi, g)?;
    let hl_rhs = lambda_norm_avg(phi, g)?;
    let tol = 1e-12 * hl_rhs.max(1.0);
    Ok(EmbeddingReport {
        m_norm: m,
        weighted_sup,
        marcinkiewicz_ok: m <= weighted_sup * (1.0 + 1e-15),
        hl_lhs,
        hl_rhs,
        hardy_littlewood_ok: hl_lhs <= hl_rhs + tol,
    })
}
