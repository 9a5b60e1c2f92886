//! Seeded random instances. Every trial owns a ChaCha stream selected by its
//! index, so results do not depend on the order trials are executed in.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::couples::{couple_opnorm_with, CoupleOperator, NormOptions, WeightedCouple};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    #[default]
    Uniform,
    Gaussian,
    /// A single unit entry at `(0, 0)`.
    Unit,
}

const MAX_ATTEMPTS: u64 = 64;

/// Generator for trial `trial`, redraw `attempt`.
pub fn trial_rng(seed: u64, trial: u64, attempt: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial + (attempt << 32));
    rng
}

pub fn draw(rng: &mut ChaCha8Rng, dist: Distribution) -> f64 {
    match dist {
        Distribution::Gaussian => StandardNormal.sample(rng),
        _ => rng.random_range(-1.0..=1.0),
    }
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize, dist: Distribution) -> Vec<f64> {
    (0..n).map(|_| draw(rng, dist)).collect()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, dist: Distribution) -> Matrix {
    if dist == Distribution::Unit {
        return Matrix::from_fn(rows, cols, |i, j| if i == 0 && j == 0 { 1.0 } else { 0.0 });
    }
    let data = random_vector(rng, rows * cols, dist);
    Matrix::from_fn(rows, cols, |i, j| data[i * cols + j])
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedOperator {
    pub operator: CoupleOperator,
    /// Number of all-zero draws that were rejected.
    pub redraws: u64,
}

/// Random matrix between the couples, scaled so that `couple_opnorm = 1`.
pub fn generate_operator(
    seed: u64,
    trial: u64,
    source: &WeightedCouple,
    target: &WeightedCouple,
    dist: Distribution,
    opts: &NormOptions,
) -> Result<GeneratedOperator> {
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = trial_rng(seed, trial, attempt);
        let m = random_matrix(&mut rng, target.len(), source.len(), dist);
        if m.is_zero() {
            continue;
        }
        let raw = CoupleOperator::new(m, source.clone(), target.clone())?;
        let norm = couple_opnorm_with(&raw, opts)?.value;
        let operator =
            CoupleOperator::new(raw.matrix.scale(1.0 / norm), source.clone(), target.clone())?;
        return Ok(GeneratedOperator {
            operator,
            redraws: attempt,
        });
    }
    Err(Error::Infeasible(format!(
        "{MAX_ATTEMPTS} consecutive all-zero draws"
    )))
}

/// Hex SHA-256 prefix of the bit patterns of the given inputs.
pub fn inputs_hash<'a, I: IntoIterator<Item = &'a [f64]>>(parts: I) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        for v in p {
            h.update(v.to_bits().to_le_bytes());
        }
    }
    h.finalize()
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn couple_hash_parts(c: &WeightedCouple) -> [Vec<f64>; 3] {
    [
        c.labels().iter().map(|&l| l as f64).collect(),
        c.w0().to_vec(),
        c.w1().to_vec(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::couples::Exponent;

    fn couples() -> (WeightedCouple, WeightedCouple) {
        (
            WeightedCouple::lambda_adic(2.0, -2, 2, Exponent::INF).unwrap(),
            WeightedCouple::lambda_adic(2.0, -2, 2, Exponent::ONE).unwrap(),
        )
    }

    #[test]
    fn normalized_to_unit_norm() {
        let (s, t) = couples();
        let opts = NormOptions::default();
        for dist in [
            Distribution::Uniform,
            Distribution::Gaussian,
            Distribution::Unit,
        ] {
            let g = generate_operator(3, 7, &s, &t, dist, &opts).unwrap();
            let n = couple_opnorm_with(&g.operator, &opts).unwrap().value;
            assert!((n - 1.0).abs() < 1e-12, "{dist:?}: {n}");
        }
        let g = generate_operator(3, 7, &s, &t, Distribution::Unit, &opts).unwrap();
        assert_eq!(
            g.operator
                .matrix
                .as_slice()
                .iter()
                .filter(|&&v| v != 0.0)
                .count(),
            1
        );
    }

    #[test]
    fn seeds_and_trials_differ() {
        let (s, t) = couples();
        let opts = NormOptions::default();
        let hash = |seed, trial| {
            let g = generate_operator(seed, trial, &s, &t, Distribution::Uniform, &opts).unwrap();
            inputs_hash([g.operator.matrix.as_slice()])
        };
        assert_eq!(hash(1, 0), hash(1, 0));
        assert_ne!(hash(1, 0), hash(2, 0));
        assert_ne!(hash(1, 0), hash(1, 1));
    }
}
