//! Batch experiments: configuration, seeded trial execution and reports.

pub mod generate;
pub mod report;
pub mod spec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::couples::{opnorm_inf_to_1_with, Exponent, NormOptions, DEFAULT_EXACT_CAP};
use crate::error::{Error, Result};
use crate::janson::{diagonal_sums, scaled_matrix, verify_ovchinnikov};
use crate::nuclear::nuclearity_equivalence_test;
use crate::numeric::{log_grid, ratio};
use crate::par::Execution;
use crate::qcfun::{sparse_tau, QcFunction};
use crate::rearrange::{embedding_checks, lambda_norm, m_norm, ConcaveWeight, StepFunction};
use crate::repr::{
    fundamental_constant, fundamental_representation, jk_gap, strong_form_check, GapMethod,
    GapOptions,
};
use crate::retract::{iota, iota_norms, partition, pi, pi_norms};

pub use generate::{generate_operator, inputs_hash, trial_rng, Distribution, GeneratedOperator};
pub use report::{Check, Record, Report, Summary};
pub use spec::{parse_couple, parse_vector_csv, CoupleSpec, ExponentSpec};

/// Absolute tolerance of every inequality check (quantities are normalized).
pub const TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    VerifyOvch,
    JkGap,
    NuclearCheck,
    SparseSeq,
    DiagSums,
    RearrangeNorms,
    Fundlemma,
    RetractCheck,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::VerifyOvch => "verify-ovch",
            Experiment::JkGap => "jk-gap",
            Experiment::NuclearCheck => "nuclear-check",
            Experiment::SparseSeq => "sparse-seq",
            Experiment::DiagSums => "diag-sums",
            Experiment::RearrangeNorms => "rearrange-norms",
            Experiment::Fundlemma => "fundlemma",
            Experiment::RetractCheck => "retract-check",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub trials: usize,
    #[serde(default)]
    pub source: Option<CoupleSpec>,
    #[serde(default)]
    pub target: Option<CoupleSpec>,
    #[serde(default)]
    pub rho: Option<QcFunction>,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Distribution of random vectors (and matrices, unless `matrix` says otherwise).
    #[serde(default)]
    pub distribution: Distribution,
    #[serde(default)]
    pub matrix: Option<MatrixSpec>,
    /// Largest matrix side for `diag-sums`.
    #[serde(default)]
    pub max_dim: Option<usize>,
    /// Exact-norm enumeration cap (overridden by `INTERPKIT_CAP`).
    #[serde(default)]
    pub exact_cap: Option<usize>,
    #[serde(default)]
    pub k_min: Option<i64>,
    #[serde(default)]
    pub k_max: Option<i64>,
    #[serde(default)]
    pub truncate: bool,
    /// Use `K̃` in the J/K gap denominators.
    #[serde(default)]
    pub surrogate: bool,
    /// Pieces per step function for `rearrange-norms`.
    #[serde(default)]
    pub pieces: Option<usize>,
    /// Report path; the CLI `--out` flag takes precedence.
    #[serde(default)]
    pub out: Option<String>,
}

/// Matrix generator. `dims = [rows, cols]` sizes random couples and must
/// match fixed ones.
#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    #[serde(default)]
    pub distribution: Option<Distribution>,
    #[serde(default)]
    pub dims: Option<[usize; 2]>,
}

fn default_lambda() -> f64 {
    2.0
}

pub const CAP_ENV: &str = "INTERPKIT_CAP";

impl RunConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            seed: 0,
            trials: 0,
            source: None,
            target: None,
            rho: None,
            lambda: default_lambda(),
            distribution: Distribution::default(),
            max_dim: None,
            exact_cap: None,
            k_min: None,
            k_max: None,
            truncate: false,
            surrogate: false,
            pieces: None,
            matrix: None,
            out: None,
        }
    }

    /// Parse and validate a JSON config.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("line {} column {}: {e}", e.line(), e.column())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 1.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!(
                "field `lambda`: {} must exceed 1",
                self.lambda
            )));
        }
        if self.exact_cap == Some(0) {
            return Err(Error::Config(
                "field `exact_cap`: must be at least 1".into(),
            ));
        }
        if self.max_dim == Some(0) || self.pieces == Some(0) {
            return Err(Error::Config(
                "fields `max_dim` and `pieces` must be at least 1".into(),
            ));
        }
        if let Some(MatrixSpec {
            dims: Some([r, c]), ..
        }) = self.matrix
        {
            if r == 0 || c == 0 {
                return Err(Error::Config(
                    "field `matrix.dims`: sides must be at least 1".into(),
                ));
            }
        }
        if let (Some(a), Some(b)) = (self.k_min, self.k_max) {
            if a > b {
                return Err(Error::Config(format!(
                    "fields `k_min` > `k_max` ({a} > {b})"
                )));
            }
        }
        Ok(())
    }

    /// Norm options; the environment variable takes precedence over the config.
    pub fn norm_options(&self, execution: Execution) -> Result<NormOptions> {
        let cap = match std::env::var(CAP_ENV) {
            Ok(v) => v
                .trim()
                .parse::<usize>()
                .ok()
                .filter(|&c| c >= 1)
                .ok_or_else(|| {
                    Error::Config(format!("{CAP_ENV} = `{v}` is not a positive integer"))
                })?,
            Err(_) => self.exact_cap.unwrap_or(DEFAULT_EXACT_CAP),
        };
        Ok(NormOptions {
            exact_cap: cap,
            execution,
        })
    }

    fn rho(&self) -> QcFunction {
        self.rho
            .clone()
            .unwrap_or_else(|| QcFunction::power(0.5).expect("θ = 1/2 is valid"))
    }

    fn matrix_distribution(&self) -> Distribution {
        self.matrix
            .as_ref()
            .and_then(|m| m.distribution)
            .unwrap_or(self.distribution)
    }

    /// Source and target for one trial, honoring `matrix.dims`.
    fn operator_couples(
        &self,
        rng: &mut rand_chacha::ChaCha8Rng,
    ) -> Result<(crate::WeightedCouple, crate::WeightedCouple)> {
        let dims = self.matrix.as_ref().and_then(|m| m.dims);
        let (s, t) = match dims {
            Some([r, c]) => (with_n(self.source_spec(), c), with_n(self.target_spec(), r)),
            None => (self.source_spec(), self.target_spec()),
        };
        let (s, t) = (s.build(rng)?, t.build(rng)?);
        if let Some([r, c]) = dims {
            if (t.len(), s.len()) != (r, c) {
                return Err(Error::Config(format!(
                    "field `matrix.dims`: [{r}, {c}] does not match the couples ({} × {})",
                    t.len(),
                    s.len()
                )));
            }
        }
        Ok((s, t))
    }

    fn source_spec(&self) -> CoupleSpec {
        self.source
            .clone()
            .unwrap_or_else(|| match self.experiment {
                Experiment::RetractCheck | Experiment::DiagSums => random_spec(8, Exponent::INF),
                _ => CoupleSpec::lambda_adic(self.lambda, -6, 6, Exponent::INF),
            })
    }

    fn target_spec(&self) -> CoupleSpec {
        self.target
            .clone()
            .unwrap_or_else(|| match self.experiment {
                Experiment::Fundlemma | Experiment::DiagSums => random_spec(8, Exponent::ONE),
                _ => CoupleSpec::lambda_adic(self.lambda, -6, 6, Exponent::ONE),
            })
    }
}

fn with_n(s: CoupleSpec, n: usize) -> CoupleSpec {
    match s {
        CoupleSpec::Random { random, p } => CoupleSpec::Random {
            random: spec::RandomCouple { n, ..random },
            p,
        },
        other => other,
    }
}

fn random_spec(n: usize, p: Exponent) -> CoupleSpec {
    CoupleSpec::Random {
        random: spec::RandomCouple { n, log_spread: 3.0 },
        p: ExponentSpec(p),
    }
}

/// Run with the default execution strategy.
pub fn run(config: &RunConfig) -> Result<Report> {
    run_with(config, Execution::default())
}

pub fn run_with(config: &RunConfig, execution: Execution) -> Result<Report> {
    config.validate()?;
    let opts = config.norm_options(execution)?;
    let mut notes = Vec::new();
    let mut checks = Vec::new();
    let (columns, outcomes): (Vec<&str>, Vec<Result<TrialOutcome>>) = match config.experiment {
        Experiment::VerifyOvch => (
            vec!["C_base", "C_rho", "ratio", "bound"],
            execution.map(config.trials, |i| verify_trial(config, &opts, i as u64)),
        ),
        Experiment::JkGap => (
            vec!["greedy", "lp", "ratio"],
            execution.map(config.trials, |i| gap_trial(config, i as u64)),
        ),
        Experiment::NuclearCheck => (
            vec!["gap", "nu", "gap_over_nu", "nu_over_gap", "gap_roundtrip"],
            execution.map(config.trials, |i| nuclear_trial(config, i as u64)),
        ),
        Experiment::SparseSeq => {
            let (rows, covering) = sparse_rows(config)?;
            checks.push(covering.0);
            notes.extend(covering.1);
            (vec!["k", "tau_k", "rho_tau_k", "excess"], rows)
        }
        Experiment::DiagSums => (
            vec!["rows", "cols", "opnorm", "max_diag"],
            execution.map(config.trials, |i| diag_trial(config, &opts, i as u64)),
        ),
        Experiment::RearrangeNorms => (
            vec![
                "m_norm",
                "lambda_norm",
                "m_perm",
                "lambda_perm",
                "hl_lhs",
                "hl_rhs",
            ],
            execution.map(config.trials, |i| rearrange_trial(config, i as u64)),
        ),
        Experiment::Fundlemma => (
            vec!["fund_constant", "c_prime"],
            execution.map(config.trials, |i| fund_trial(config, i as u64)),
        ),
        Experiment::RetractCheck => (
            vec!["roundtrip_err", "iota_norm", "pi_norm"],
            execution.map(config.trials, |i| retract_trial(config, i as u64)),
        ),
    };
    let mut records = Vec::with_capacity(outcomes.len());
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(t) => {
                notes.extend(t.notes.into_iter().map(|n| format!("trial {i}: {n}")));
                records.push(Record {
                    trial: i,
                    values: t.values,
                    pass: t.pass,
                    margin: t.margin,
                    inputs_hash: t.hash,
                });
            }
            Err(e) => {
                notes.push(format!("trial {i}: error: {e}"));
                records.push(Record {
                    trial: i,
                    values: vec![f64::NAN; columns.len()],
                    pass: false,
                    margin: f64::NAN,
                    inputs_hash: String::new(),
                });
            }
        }
    }
    Ok(Report::new(config, columns, records, checks, notes))
}

struct TrialOutcome {
    values: Vec<f64>,
    pass: bool,
    /// measured / bound
    margin: f64,
    hash: String,
    notes: Vec<String>,
}

fn verify_trial(cfg: &RunConfig, opts: &NormOptions, trial: u64) -> Result<TrialOutcome> {
    let mut rng = trial_rng(cfg.seed, trial, 0);
    let (source, target) = cfg.operator_couples(&mut rng)?;
    let g = generate_operator(
        cfg.seed,
        trial,
        &source,
        &target,
        cfg.matrix_distribution(),
        opts,
    )?;
    let rep = verify_ovchinnikov(&g.operator, &cfg.rho(), opts)?;
    let mut notes = Vec::new();
    if g.redraws > 0 {
        notes.push(format!("{} all-zero redraws", g.redraws));
    }
    if !rep.exact {
        notes.push("norms above the exact cap are upper bounds".into());
    }
    Ok(TrialOutcome {
        values: vec![rep.c_base, rep.c_rho, rep.ratio, rep.bound],
        pass: rep.pass,
        margin: ratio(rep.c_rho, rep.bound),
        hash: inputs_hash([g.operator.matrix.as_slice(), source.w1(), target.w1()]),
        notes,
    })
}

fn random_pair(
    cfg: &RunConfig,
    trial: u64,
) -> Result<(
    crate::WeightedCouple,
    Vec<f64>,
    crate::WeightedCouple,
    Vec<f64>,
)> {
    let mut rng = trial_rng(cfg.seed, trial, 0);
    let source = cfg.source_spec().build(&mut rng)?;
    let target = cfg.target_spec().build(&mut rng)?;
    let x = generate::random_vector(&mut rng, source.len(), cfg.distribution);
    let y = generate::random_vector(&mut rng, target.len(), cfg.distribution);
    Ok((source, x, target, y))
}

fn gap_trial(cfg: &RunConfig, trial: u64) -> Result<TrialOutcome> {
    let (source, x, target, y) = random_pair(cfg, trial)?;
    let mk = |method| GapOptions {
        method,
        surrogate: cfg.surrogate,
        ..Default::default()
    };
    let greedy = jk_gap(&source, &x, &target, &y, cfg.lambda, &mk(GapMethod::Greedy))?;
    let lp = jk_gap(&source, &x, &target, &y, cfg.lambda, &mk(GapMethod::Lp))?;
    let r = ratio(lp.value, greedy.value);
    let mut notes = vec![format!(
        "k-range truncated to [{}, {}]",
        lp.k_range.0, lp.k_range.1
    )];
    if lp.fell_back {
        notes.push("LP above size cap; greedy used".into());
    }
    Ok(TrialOutcome {
        values: vec![greedy.value, lp.value, r],
        pass: r <= 1.0 + TOLERANCE,
        margin: r,
        hash: inputs_hash([x.as_slice(), y.as_slice(), source.w1(), target.w1()]),
        notes,
    })
}

fn nuclear_trial(cfg: &RunConfig, trial: u64) -> Result<TrialOutcome> {
    let (source, x, target, y) = random_pair(cfg, trial)?;
    let r = nuclearity_equivalence_test(&source, &target, &x, &y, cfg.lambda)?;
    let rt = ratio(r.gap_roundtrip, 2.0 * cfg.lambda * r.gap);
    Ok(TrialOutcome {
        values: vec![
            r.gap,
            r.nu,
            r.factor_gap_over_nu,
            r.factor_nu_over_gap,
            r.gap_roundtrip,
        ],
        pass: r.pass && rt <= 1.0 + TOLERANCE,
        margin: (r.factor_gap_over_nu / cfg.lambda)
            .max(r.factor_nu_over_gap / 2.0)
            .max(rt),
        hash: inputs_hash([x.as_slice(), y.as_slice(), source.w1(), target.w1()]),
        notes: Vec::new(),
    })
}

type SparseRows = (Vec<Result<TrialOutcome>>, (Check, Vec<String>));

fn sparse_rows(cfg: &RunConfig) -> Result<SparseRows> {
    let rho = cfg.rho();
    let (k_min, k_max) = (cfg.k_min.unwrap_or(-10), cfg.k_max.unwrap_or(10));
    let seq = sparse_tau(&rho, k_min, k_max, cfg.truncate)?;
    let mut notes = Vec::new();
    if seq.truncated_low || seq.truncated_high {
        notes.push(format!(
            "sequence truncated (low: {}, high: {}); labels [{}, {}]",
            seq.truncated_low,
            seq.truncated_high,
            seq.k_min(),
            seq.k_max()
        ));
    }
    let tau = seq.tau();
    let rows = seq
        .rows()
        .into_iter()
        .enumerate()
        .map(|(i, (k, t, r))| {
            let excess = tau
                .iter()
                .enumerate()
                .map(|(j, &tj)| {
                    let d = (j as i64 - i as i64).unsigned_abs() as i32;
                    (tj / t).min(1.0) * r / rho.at(tj) - 2f64.powi(-d)
                })
                .fold(f64::NEG_INFINITY, f64::max);
            Ok(TrialOutcome {
                values: vec![k as f64, t, r],
                pass: excess <= 1e-12,
                margin: excess,
                hash: inputs_hash([[t].as_slice()]),
                notes: Vec::new(),
            })
            .map(|mut o: TrialOutcome| {
                o.values.push(excess);
                o
            })
        })
        .collect();
    let grid = log_grid(tau[0], tau[tau.len() - 1], 100);
    let cov = seq.covering_constant(&grid);
    let check = Check {
        name: "covering_constant".into(),
        value: cov,
        bound: seq.ratio_constant,
        pass: cov <= seq.ratio_constant + 1e-12,
    };
    Ok((rows, (check, notes)))
}

fn diag_trial(cfg: &RunConfig, opts: &NormOptions, trial: u64) -> Result<TrialOutcome> {
    let max_dim = cfg.max_dim.unwrap_or(12).min(opts.exact_cap);
    let mut rng = trial_rng(cfg.seed, trial, 0);
    let rows = rand::Rng::random_range(&mut rng, 1..=max_dim);
    let cols = rand::Rng::random_range(&mut rng, 1..=max_dim);
    let source = with_n(cfg.source_spec(), cols).build(&mut rng)?;
    let target = with_n(cfg.target_spec(), rows).build(&mut rng)?;
    let g = generate_operator(
        cfg.seed,
        trial,
        &source,
        &target,
        cfg.matrix_distribution(),
        opts,
    )?;
    let a = scaled_matrix(&g.operator);
    let ones = |n| vec![1.0; n];
    let norm = opnorm_inf_to_1_with(&a, &ones(a.cols()), &ones(a.rows()), opts)?;
    let a = a.scale(1.0 / norm.value);
    let sums = diagonal_sums(&a, target.labels(), source.labels())?;
    let max_diag = sums.values().copied().fold(0.0, f64::max);
    Ok(TrialOutcome {
        values: vec![a.rows() as f64, a.cols() as f64, 1.0, max_diag],
        pass: max_diag <= 1.0 + TOLERANCE,
        margin: max_diag,
        hash: inputs_hash([a.as_slice()]),
        notes: if norm.exact {
            Vec::new()
        } else {
            vec!["opnorm is an upper bound".into()]
        },
    })
}

fn rearrange_trial(cfg: &RunConfig, trial: u64) -> Result<TrialOutcome> {
    let weight = ConcaveWeight::new(cfg.rho())?;
    let mut rng = trial_rng(cfg.seed, trial, 0);
    let n = cfg.pieces.unwrap_or(6);
    // dyadic widths keep every breakpoint exact, so permuted copies share widths
    let width = rand::Rng::random_range(&mut rng, 1..=32) as f64 / 8.0;
    let values: Vec<f64> = (0..n)
        .map(|_| rand::Rng::random_range(&mut rng, 0.0..1.0))
        .collect();
    let f = StepFunction::from_widths(&vec![width; n], values.clone())?;
    let mut perm = values.clone();
    perm.shuffle(&mut rng);
    let g = StepFunction::from_widths(&vec![width; n], perm)?;
    let (m, l) = (m_norm(&weight, &f), lambda_norm(&weight, &f));
    let (mp, lp) = (m_norm(&weight, &g), lambda_norm(&weight, &g));
    let e = embedding_checks(&weight, &weight, &g)?;
    let invariant = m.to_bits() == mp.to_bits() && l.to_bits() == lp.to_bits();
    Ok(TrialOutcome {
        values: vec![m, l, mp, lp, e.hl_lhs, e.hl_rhs],
        pass: invariant && e.hardy_littlewood_ok && e.marcinkiewicz_ok,
        margin: ratio(e.hl_lhs, e.hl_rhs),
        hash: inputs_hash([values.as_slice(), &[width]]),
        notes: Vec::new(),
    })
}

fn fund_trial(cfg: &RunConfig, trial: u64) -> Result<TrialOutcome> {
    let mut rng = trial_rng(cfg.seed, trial, 0);
    let c = cfg.target_spec().build(&mut rng)?;
    let a = generate::random_vector(&mut rng, c.len(), cfg.distribution);
    let rep = fundamental_representation(&c, &a, cfg.lambda)?;
    let fc = fundamental_constant(&c, &rep)?;
    let sf = strong_form_check(&c, &rep, &a)?;
    let bound = cfg.lambda + TOLERANCE;
    Ok(TrialOutcome {
        values: vec![fc, sf.c_prime],
        pass: fc <= bound && sf.c_prime <= bound,
        margin: fc.max(sf.c_prime) / cfg.lambda,
        hash: inputs_hash([a.as_slice(), c.w0(), c.w1()]),
        notes: Vec::new(),
    })
}

fn retract_trial(cfg: &RunConfig, trial: u64) -> Result<TrialOutcome> {
    let mut rng = trial_rng(cfg.seed, trial, 0);
    let c = cfg.source_spec().build(&mut rng)?;
    let x = generate::random_vector(&mut rng, c.len(), cfg.distribution);
    let part = partition(&c, cfg.lambda)?;
    let io = iota(&c, &part, &x)?;
    let back = pi(&c, &part, &x, &io, &io.s)?;
    let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let err = back
        .iter()
        .zip(&x)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let rel = ratio(err, scale);
    let inorm = iota_norms(&c, &part, &io)?.into_iter().fold(0.0, f64::max);
    let pnorm = pi_norms(&c, &part, &x, &io)?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(TrialOutcome {
        values: vec![rel, inorm, pnorm],
        pass: rel <= 1e-12 && inorm <= 1.0 + TOLERANCE && pnorm <= cfg.lambda + TOLERANCE,
        margin: inorm.max(pnorm / cfg.lambda),
        hash: inputs_hash([x.as_slice(), c.w0(), c.w1()]),
        notes: Vec::new(),
    })
}
