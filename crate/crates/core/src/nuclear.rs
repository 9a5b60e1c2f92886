//! Nuclear decompositions `a ↦ Σ ⟨l_n, a⟩ b_n` of couple operators and the
//! two constructive directions between decompositions and J/K representations.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::couples::{dual_norm_side, norm_side, Side, WeightedCouple};
use crate::error::{check_len, Error, Result};
use crate::matrix::Matrix;
use crate::numeric::{csum, powi};
use crate::repr::{gap_value, jk_gap, GapMethod, GapOptions, Representation};
use crate::retract::block_index;

/// Rank-one terms `(l, b)`; the functional `l` acts by the standard pairing.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NuclearDecomposition {
    terms: Vec<(Vec<f64>, Vec<f64>)>,
}

impl NuclearDecomposition {
    /// Terms with `b = 0` are dropped.
    pub fn new(terms: Vec<(Vec<f64>, Vec<f64>)>) -> Result<Self> {
        let mut kept = Vec::with_capacity(terms.len());
        let dims = terms.first().map(|(l, b)| (l.len(), b.len()));
        for (l, b) in terms {
            if let Some((dl, db)) = dims {
                check_len(dl, l.len())?;
                check_len(db, b.len())?;
            }
            if l.iter().chain(&b).any(|v| !v.is_finite()) {
                return Err(Error::Domain("non-finite decomposition entry".into()));
            }
            if b.iter().any(|&v| v != 0.0) {
                kept.push((l, b));
            }
        }
        Ok(Self { terms: kept })
    }

    pub fn terms(&self) -> &[(Vec<f64>, Vec<f64>)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// The induced matrix `Σ b lᵀ` (rows over the target).
    pub fn operator(&self, source_dim: usize, target_dim: usize) -> Result<Matrix> {
        let mut m = Matrix::zeros(target_dim, source_dim);
        for (l, b) in &self.terms {
            check_len(source_dim, l.len())?;
            check_len(target_dim, b.len())?;
            for (j, bj) in b.iter().enumerate() {
                for (k, lk) in l.iter().enumerate() {
                    m[(j, k)] += bj * lk;
                }
            }
        }
        Ok(m)
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let dim = self.terms.first().map_or(0, |t| t.1.len());
        let mut acc = vec![Vec::with_capacity(self.terms.len()); dim];
        for (l, b) in &self.terms {
            check_len(l.len(), x.len())?;
            let c = pairing(l, x);
            for (a, bj) in acc.iter_mut().zip(b) {
                a.push(c * bj);
            }
        }
        Ok(acc.into_iter().map(csum).collect())
    }
}

fn pairing(l: &[f64], x: &[f64]) -> f64 {
    csum(l.iter().zip(x).map(|(a, b)| a * b))
}

/// Per-term side products `‖l‖_{X_i′} ‖b‖_{Y_i}`.
pub fn term_products(
    d: &NuclearDecomposition,
    source: &WeightedCouple,
    target: &WeightedCouple,
) -> Result<Vec<[f64; 2]>> {
    d.terms
        .iter()
        .map(|(l, b)| {
            Ok([
                dual_norm_side(source, Side::Zero, l)? * norm_side(target, Side::Zero, b)?,
                dual_norm_side(source, Side::One, l)? * norm_side(target, Side::One, b)?,
            ])
        })
        .collect()
}

/// `Σ_n max_i ‖l_n‖_{X_i′} ‖b_n‖_{Y_i}`.
pub fn nuclear_norm(
    d: &NuclearDecomposition,
    source: &WeightedCouple,
    target: &WeightedCouple,
) -> Result<f64> {
    Ok(csum(
        term_products(d, source, target)?
            .into_iter()
            .map(|[a, b]| a.max(b)),
    ))
}

/// `(Σ_n ‖l_n‖_{X₀′}‖b_n‖_{Y₀}, Σ_n ‖l_n‖_{X₁′}‖b_n‖_{Y₁})`.
pub fn side_sums(
    d: &NuclearDecomposition,
    source: &WeightedCouple,
    target: &WeightedCouple,
) -> Result<[f64; 2]> {
    let p = term_products(d, source, target)?;
    Ok([csum(p.iter().map(|v| v[0])), csum(p.iter().map(|v| v[1]))])
}

/// Result of turning a decomposition into a representation of `Tx`.
#[derive(Clone, Debug, PartialEq)]
pub struct DecompRepresentation {
    pub rep: Representation,
    /// `Σ_k J(λ^k, y_k) / K(λ^k, x)` with exact K.
    pub gap: f64,
    pub nu: f64,
    /// Certified `λ·ν`.
    pub bound: f64,
    /// Per term: `(J(λ^{−k}, l)·J(λ^k, b), λ·max_i ‖l‖_i‖b‖_i)`.
    pub term_checks: Vec<(f64, f64)>,
    /// Block label of each term.
    pub term_blocks: Vec<i64>,
}

/// Group the terms by `‖b‖₀ ≤ λ^k ‖b‖₁ < λ ‖b‖₀` and set
/// `y_k = Σ_{n∈e_k} ⟨l_n, x⟩ b_n`.
pub fn decomp_to_representation(
    d: &NuclearDecomposition,
    x: &[f64],
    lambda: f64,
    source: &WeightedCouple,
    target: &WeightedCouple,
) -> Result<DecompRepresentation> {
    source.check(x)?;
    if x.iter().all(|&v| v == 0.0) {
        return Err(Error::Domain("degenerate input: x = 0".into()));
    }
    if !(lambda > 1.0) {
        return Err(Error::Parameter(format!("λ = {lambda} must exceed 1")));
    }
    let nu = nuclear_norm(d, source, target)?;
    let mut blocks: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    let mut term_blocks = Vec::with_capacity(d.len());
    let mut term_checks = Vec::with_capacity(d.len());
    for (i, (l, b)) in d.terms.iter().enumerate() {
        let b0 = norm_side(target, Side::Zero, b)?;
        let b1 = norm_side(target, Side::One, b)?;
        let k = block_index(b0, b1, lambda);
        blocks.entry(k).or_default().push(i);
        term_blocks.push(k);
        let l0 = dual_norm_side(source, Side::Zero, l)?;
        let l1 = dual_norm_side(source, Side::One, l)?;
        let t = powi(lambda, k);
        let lhs = l0.max(l1 / t) * b0.max(t * b1);
        term_checks.push((lhs, lambda * (l0 * b0).max(l1 * b1)));
    }
    let n = target.len();
    let (k_min, k_max) = match (blocks.keys().next(), blocks.keys().next_back()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => (0, 0),
    };
    let mut parts = vec![vec![Vec::new(); n]; (k_max - k_min + 1) as usize];
    for (&k, idx) in &blocks {
        let slot = &mut parts[(k - k_min) as usize];
        for &i in idx {
            let (l, b) = &d.terms[i];
            let c = pairing(l, x);
            for (s, bj) in slot.iter_mut().zip(b) {
                s.push(c * bj);
            }
        }
    }
    let parts: Vec<Vec<f64>> = parts
        .into_iter()
        .map(|p| p.into_iter().map(csum).collect())
        .collect();
    let y = if d.is_empty() {
        vec![0.0; n]
    } else {
        d.apply(x)?
    };
    let rep = Representation::new(lambda, k_min, parts, y)?;
    let gap = gap_value(source, x, target, &rep, false)?;
    Ok(DecompRepresentation {
        rep,
        gap,
        nu,
        bound: lambda * nu,
        term_checks,
        term_blocks,
    })
}

/// One term per nonzero part: `l_k` is the point mass at
/// `n*(k) = argmax_n min(w⁰_n, λ^k w¹_n)|x_n|`, scaled so `⟨l_k, x⟩ = 1`.
pub fn representation_to_decomp(
    rep: &Representation,
    x: &[f64],
    source: &WeightedCouple,
) -> Result<NuclearDecomposition> {
    source.check(x)?;
    let (w0, w1) = (source.w0(), source.w1());
    let mut terms = Vec::new();
    for (k, y) in rep.labels().zip(rep.parts()) {
        if y.iter().all(|&v| v == 0.0) {
            continue;
        }
        let t = powi(rep.lambda(), k);
        let mut best = (0usize, 0.0);
        for (n, &xn) in x.iter().enumerate() {
            let v = w0[n].min(t * w1[n]) * xn.abs();
            if v > best.1 {
                best = (n, v);
            }
        }
        if best.1 == 0.0 {
            return Err(Error::Infeasible(format!(
                "surrogate K vanishes at k = {k} while y_k ≠ 0"
            )));
        }
        let mut l = vec![0.0; x.len()];
        l[best.0] = 1.0 / x[best.0];
        terms.push((l, y.clone()));
    }
    NuclearDecomposition::new(terms)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NuclearityReport {
    pub gap: f64,
    pub nu: f64,
    pub factor_gap_over_nu: f64,
    pub factor_nu_over_gap: f64,
    /// Gap of the representation rebuilt from the constructed decomposition.
    pub gap_roundtrip: f64,
    pub gap_le_lambda_nu: bool,
    pub nu_le_two_gap: bool,
    pub pass: bool,
}

pub const NUCLEARITY_REL_TOL: f64 = 1e-6;

/// Compare the LP J/K gap with the nuclear norm of the decomposition built
/// from its witness; asserts `gap ≤ λν` and `ν ≤ 2·gap` (relative 1e−6).
pub fn nuclearity_equivalence_test(
    source: &WeightedCouple,
    target: &WeightedCouple,
    x: &[f64],
    y: &[f64],
    lambda: f64,
) -> Result<NuclearityReport> {
    let opts = GapOptions {
        method: GapMethod::Lp,
        ..Default::default()
    };
    let cert = jk_gap(source, x, target, y, lambda, &opts)?;
    if cert.infinite {
        return Err(Error::Infeasible(
            "J/K gap is infinite (x = 0, y ≠ 0)".into(),
        ));
    }
    let d = representation_to_decomp(&cert.witness, x, source)?;
    let nu = nuclear_norm(&d, source, target)?;
    let gap = cert.value;
    let gap_roundtrip = if d.is_empty() {
        0.0
    } else {
        decomp_to_representation(&d, x, lambda, source, target)?.gap
    };
    let tol = 1.0 + NUCLEARITY_REL_TOL;
    let gap_le_lambda_nu = gap <= lambda * nu * tol;
    let nu_le_two_gap = nu <= 2.0 * gap * tol;
    Ok(NuclearityReport {
        gap,
        nu,
        factor_gap_over_nu: crate::numeric::ratio(gap, nu),
        factor_nu_over_gap: crate::numeric::ratio(nu, gap),
        gap_roundtrip,
        gap_le_lambda_nu,
        nu_le_two_gap,
        pass: gap_le_lambda_nu && nu_le_two_gap,
    })
}

/// Two terms with side products `(1, 0.01)` and `(0.01, 1)`: each side sum is
/// 1.01 while the nuclear norm is 2.
pub fn separately_nuclear_example() -> (NuclearDecomposition, WeightedCouple, WeightedCouple) {
    use crate::couples::Exponent;
    let source = WeightedCouple::from_weights(vec![1.0; 2], vec![1.0; 2], Exponent::INF)
        .expect("valid weights");
    let target = WeightedCouple::from_weights(vec![1.0, 0.01], vec![0.01, 1.0], Exponent::ONE)
        .expect("valid weights");
    let d = NuclearDecomposition::new(vec![
        (vec![1.0, 0.0], vec![1.0, 0.0]),
        (vec![0.0, 1.0], vec![0.0, 1.0]),
    ])
    .expect("valid terms");
    (d, source, target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::couples::Exponent;

    fn unit(p: Exponent) -> WeightedCouple {
        WeightedCouple::from_weights(vec![1.0], vec![1.0], p).unwrap()
    }

    #[test]
    fn nuclear_norm_examples() {
        let d = NuclearDecomposition::new(vec![(vec![1.0], vec![1.0])]).unwrap();
        assert_eq!(
            nuclear_norm(&d, &unit(Exponent::INF), &unit(Exponent::ONE)).unwrap(),
            1.0
        );
        let e = NuclearDecomposition::default();
        assert_eq!(
            nuclear_norm(&e, &unit(Exponent::INF), &unit(Exponent::ONE)).unwrap(),
            0.0
        );
        let s = WeightedCouple::from_weights(vec![2.0], vec![1.0], Exponent::INF).unwrap();
        let t = WeightedCouple::from_weights(vec![3.0], vec![1.0], Exponent::ONE).unwrap();
        assert_eq!(nuclear_norm(&d, &s, &t).unwrap(), 1.5);
    }

    #[test]
    fn zero_terms_dropped() {
        let d = NuclearDecomposition::new(vec![(vec![1.0], vec![0.0]), (vec![2.0], vec![1.0])])
            .unwrap();
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn decomp_to_rep_examples() {
        let (s, t) = (unit(Exponent::INF), unit(Exponent::ONE));
        let d = NuclearDecomposition::new(vec![(vec![1.0], vec![1.0])]).unwrap();
        let r = decomp_to_representation(&d, &[1.0], 2.0, &s, &t).unwrap();
        assert_eq!(r.rep.k_min(), 0);
        assert_eq!(r.rep.part(0).unwrap(), &[1.0]);
        assert!(r.gap <= 2.0 * r.nu);
        let r = decomp_to_representation(&NuclearDecomposition::default(), &[1.0], 2.0, &s, &t)
            .unwrap();
        assert_eq!(r.gap, 0.0);
        assert!(decomp_to_representation(&d, &[0.0], 2.0, &s, &t).is_err());

        // ‖b‖₀/‖b‖₁ = 1 and 4: blocks 0 and 2
        let t2 =
            WeightedCouple::from_weights(vec![1.0, 1.0], vec![1.0, 0.25], Exponent::ONE).unwrap();
        let d = NuclearDecomposition::new(vec![
            (vec![1.0], vec![1.0, 0.0]),
            (vec![1.0], vec![0.0, 1.0]),
        ])
        .unwrap();
        let r = decomp_to_representation(&d, &[1.0], 2.0, &s, &t2).unwrap();
        assert_eq!(r.term_blocks, vec![0, 2]);
        assert_eq!(r.rep.part(0).unwrap(), &[1.0, 0.0]);
        assert_eq!(r.rep.part(2).unwrap(), &[0.0, 1.0]);
        for (lhs, rhs) in r.term_checks {
            assert!(lhs <= rhs);
        }
    }

    #[test]
    fn rep_to_decomp_examples() {
        let s = unit(Exponent::INF);
        let t = unit(Exponent::ONE);
        let rep = Representation::new(2.0, 0, vec![vec![0.7]], vec![0.7]).unwrap();
        let d = representation_to_decomp(&rep, &[1.0], &s).unwrap();
        assert_eq!(d.len(), 1);
        // J(1, y) = 0.7
        assert_eq!(nuclear_norm(&d, &s, &t).unwrap(), 0.7);
        let z = Representation::zero(2.0, -1, 1, 1).unwrap();
        assert!(representation_to_decomp(&z, &[1.0], &s).unwrap().is_empty());
    }

    #[test]
    fn equivalence_examples() {
        let (s, t) = (unit(Exponent::INF), unit(Exponent::ONE));
        let r = nuclearity_equivalence_test(&s, &t, &[1.0], &[0.0], 2.0).unwrap();
        assert_eq!((r.gap, r.nu), (0.0, 0.0));
        let r = nuclearity_equivalence_test(&s, &t, &[1.0], &[1.0], 2.0).unwrap();
        assert!((r.gap - 1.0).abs() < 1e-12 && (r.nu - 1.0).abs() < 1e-12);
        assert!(r.pass);
    }

    #[test]
    fn separately_nuclear_gap() {
        let (d, s, t) = separately_nuclear_example();
        let nu = nuclear_norm(&d, &s, &t).unwrap();
        let [a, b] = side_sums(&d, &s, &t).unwrap();
        assert!(a <= nu && b <= nu);
        assert!(nu / a >= 1.9 && nu / b >= 1.9);
    }
}
