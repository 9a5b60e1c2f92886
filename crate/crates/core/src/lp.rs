//! Dense two-phase primal simplex with Bland's rule, for small linear
//! programs `min cᵀx` subject to row constraints and `x ≥ 0`.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    objective: Vec<f64>,
    rows: Vec<(Vec<f64>, Relation, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub x: Vec<f64>,
    pub value: f64,
    pub pivots: usize,
}

const EPS: f64 = 1e-11;
const MAX_PIVOTS: usize = 200_000;

impl LinearProgram {
    /// Minimize `objective · x` over `x ≥ 0`.
    pub fn minimize(objective: Vec<f64>) -> Self {
        Self {
            objective,
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn constrain(&mut self, coeffs: Vec<f64>, rel: Relation, rhs: f64) -> Result<()> {
        crate::error::check_len(self.num_vars(), coeffs.len())?;
        self.rows.push((coeffs, rel, rhs));
        Ok(())
    }

    /// Sparse form of [`constrain`](Self::constrain).
    pub fn constrain_sparse(
        &mut self,
        terms: &[(usize, f64)],
        rel: Relation,
        rhs: f64,
    ) -> Result<()> {
        let mut coeffs = vec![0.0; self.num_vars()];
        for &(j, a) in terms {
            if j >= coeffs.len() {
                return Err(Error::Lp(format!("variable {j} out of range")));
            }
            coeffs[j] += a;
        }
        self.constrain(coeffs, rel, rhs)
    }

    pub fn solve(&self) -> Result<Solution> {
        let n = self.num_vars();
        let m = self.rows.len();
        let n_slack = self.rows.iter().filter(|r| r.1 != Relation::Eq).count();
        // columns: originals | slacks | artificials | rhs
        let width = n + n_slack + m;
        let rhs_col = width;
        let mut t = Tableau {
            a: vec![vec![0.0; width + 1]; m],
            basis: vec![0; m],
            pivots: 0,
        };
        let mut s = n;
        for (i, (coeffs, rel, rhs)) in self.rows.iter().enumerate() {
            let row = &mut t.a[i];
            row[..n].copy_from_slice(coeffs);
            match rel {
                Relation::Le => {
                    row[s] = 1.0;
                    s += 1;
                }
                Relation::Ge => {
                    row[s] = -1.0;
                    s += 1;
                }
                Relation::Eq => {}
            }
            row[rhs_col] = *rhs;
            if *rhs < 0.0 {
                row.iter_mut().for_each(|v| *v = -*v);
            }
            let art = n + n_slack + i;
            row[art] = 1.0;
            t.basis[i] = art;
        }
        let first_art = n + n_slack;

        // phase 1: minimize the sum of artificials
        let mut cost1 = vec![0.0; width];
        cost1[first_art..].iter_mut().for_each(|c| *c = 1.0);
        t.optimize(&cost1, width)?;
        let infeas: f64 = t
            .basis
            .iter()
            .zip(&t.a)
            .filter(|(b, _)| **b >= first_art)
            .map(|(_, r)| r[rhs_col])
            .sum();
        let scale = 1.0 + self.rows.iter().map(|r| r.2.abs()).fold(0.0, f64::max);
        if infeas > 1e-9 * scale {
            return Err(Error::Lp(format!(
                "infeasible (phase-1 residual {infeas:e})"
            )));
        }
        // drive remaining artificials out of the basis; drop redundant rows
        let mut i = 0;
        while i < t.a.len() {
            if t.basis[i] >= first_art {
                match (0..first_art).find(|&j| t.a[i][j].abs() > EPS) {
                    Some(j) => t.pivot(i, j),
                    None => {
                        t.a.remove(i);
                        t.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }

        // phase 2 on original and slack columns only
        let mut cost2 = vec![0.0; width];
        cost2[..n].copy_from_slice(&self.objective);
        t.optimize(&cost2, first_art)?;
        let mut x = vec![0.0; n];
        for (r, &b) in t.basis.iter().enumerate() {
            if b < n {
                x[b] = t.a[r][rhs_col].max(0.0);
            }
        }
        let value = crate::numeric::csum(x.iter().zip(&self.objective).map(|(x, c)| x * c));
        Ok(Solution {
            x,
            value,
            pivots: t.pivots,
        })
    }
}

struct Tableau {
    a: Vec<Vec<f64>>,
    basis: Vec<usize>,
    pivots: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.a[r][c];
        self.a[r].iter_mut().for_each(|v| *v /= p);
        let prow = self.a[r].clone();
        for (i, row) in self.a.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&prow) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Minimize `cost` using only the first `allowed` columns as entering candidates.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> Result<()> {
        let rhs = cost.len();
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(Error::Lp("pivot limit exceeded".into()));
            }
            // reduced costs: c_j − c_Bᵀ B⁻¹ A_j; Bland picks the smallest improving index
            let entering = (0..allowed).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let mut d = cost[j];
                for (row, &b) in self.a.iter().zip(&self.basis) {
                    d -= cost[b] * row[j];
                }
                d < -EPS
            });
            let Some(c) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for (r, row) in self.a.iter().enumerate() {
                if row[c] > EPS {
                    let ratio = row[rhs] / row[c];
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lv)) => {
                            if ratio < lv - EPS
                                || (ratio <= lv + EPS && self.basis[r] < self.basis[lr])
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, lv))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Err(Error::Lp("unbounded objective".into()));
            };
            self.pivot(r, c);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_example() {
        // max 3x + 5y s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → 36 at (2, 6)
        let mut lp = LinearProgram::minimize(vec![-3.0, -5.0]);
        lp.constrain(vec![1.0, 0.0], Relation::Le, 4.0).unwrap();
        lp.constrain(vec![0.0, 2.0], Relation::Le, 12.0).unwrap();
        lp.constrain(vec![3.0, 2.0], Relation::Le, 18.0).unwrap();
        let s = lp.solve().unwrap();
        assert!((s.value + 36.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn equality_and_ge_rows() {
        // min x + 2y s.t. x + y = 3, x ≥ 1, y ≥ 1 → 4 at (2, 1)
        let mut lp = LinearProgram::minimize(vec![1.0, 2.0]);
        lp.constrain(vec![1.0, 1.0], Relation::Eq, 3.0).unwrap();
        lp.constrain(vec![1.0, 0.0], Relation::Ge, 1.0).unwrap();
        lp.constrain(vec![0.0, 1.0], Relation::Ge, 1.0).unwrap();
        assert!((lp.solve().unwrap().value - 4.0).abs() < 1e-9);
    }

    #[test]
    fn negative_rhs_and_redundant_rows() {
        let mut lp = LinearProgram::minimize(vec![1.0, 1.0]);
        lp.constrain(vec![-1.0, -1.0], Relation::Eq, -2.0).unwrap();
        lp.constrain(vec![2.0, 2.0], Relation::Eq, 4.0).unwrap();
        assert!((lp.solve().unwrap().value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::minimize(vec![1.0]);
        lp.constrain(vec![1.0], Relation::Le, 1.0).unwrap();
        lp.constrain(vec![1.0], Relation::Ge, 2.0).unwrap();
        assert!(matches!(lp.solve(), Err(Error::Lp(_))));
        let lp = LinearProgram::minimize(vec![-1.0]);
        assert!(matches!(lp.solve(), Err(Error::Lp(_))));
    }
}
