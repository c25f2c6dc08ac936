//! Task dispatch: one problem file in, one report out.

use std::time::Instant;

use liprec_core::covering::{grid_spec, recover_with_cover, GridMode};
use liprec_core::lipschitz::{exact_constant, injectivity_tolerance, verify_lipschitz};
use liprec_core::operators::normalize;
use liprec_core::rip::{
    check_recoverability_condition, rip_delta, rip_to_omega, verify_sparse_lipschitz,
};
use liprec_core::svdrec::{fit_reduced, reduced_report};
use liprec_core::tol::{TOL_CERT, TOL_EVAL};
use liprec_core::{distance, Error, LabeledSet, MatrixOperator, MwetHypothesis, Operator};
use serde_json::json;

use crate::error::CliError;
use crate::format::{
    check_rows, Assertion, HypothesisJson, OperatorSpec, ProblemFile, RecoveryMapJson, Report,
    SignalSpec, Task,
};
use crate::generators::{affine_segment, sparse_signals};

pub const DEFAULT_NUM_PAIRS: usize = 10_000;
pub const DEFAULT_PROBES: usize = 1_000;

const DENSE_SAMPLE_NOTE: &str =
    "training representatives are drawn from the finite sample, not from the continuous signal set";

/// Runs `problem` and returns its report. Input errors (bad shapes, missing
/// parameters, caps exceeded) are `Err`; failed checks are assertions with
/// `passed: false` in an `Ok` report.
pub fn run_problem(problem: &ProblemFile) -> Result<Report, CliError> {
    let start = Instant::now();
    let seed = problem.params.seed.unwrap_or(0);
    let mut report = Report::new(problem.task.name(), seed);
    match problem.task {
        Task::Certify => certify(problem, &mut report)?,
        Task::Mwet => mwet(problem, seed, &mut report)?,
        Task::Theorem1 => cover_recovery(problem, &mut report)?,
        Task::Theorem3 => reduced_recovery(problem, seed, &mut report)?,
        Task::Rip => rip(problem, seed, &mut report)?,
        Task::Example3 => piecewise_fixture(&mut report)?,
    }
    report.metadata.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

pub fn build_operator(spec: &OperatorSpec) -> Result<Operator, CliError> {
    match spec {
        OperatorSpec::PiecewiseExample => Ok(Operator::PiecewiseExample),
        OperatorSpec::Matrix { rows, cols, data } => {
            check_rows(data, *rows, *cols, "operator")?;
            if *rows == 0 || *cols == 0 {
                return Err(CliError::problem(
                    "operator must have at least one row and column",
                ));
            }
            Ok(Operator::matrix(liprec_core::Matrix::from_rows(data)?)?)
        }
    }
}

pub fn build_signals(
    spec: &SignalSpec,
    op: &Operator,
    default_seed: u64,
) -> Result<Vec<Vec<f64>>, CliError> {
    let signals = match spec {
        SignalSpec::List { data } => data.clone(),
        SignalSpec::AffineSegment { start, end, count } => affine_segment(start, end, *count)?,
        SignalSpec::SparseRandom {
            sparsity,
            count,
            seed,
        } => sparse_signals(
            op.signal_dim(),
            *sparsity,
            *count,
            seed.unwrap_or(default_seed),
        )?,
    };
    if signals.is_empty() {
        return Err(CliError::problem("signal sample is empty"));
    }
    if let Some((i, x)) = signals
        .iter()
        .enumerate()
        .find(|(_, x)| x.len() != op.signal_dim())
    {
        return Err(CliError::problem(format!(
            "signal {i} has dimension {} but the operator expects {}",
            x.len(),
            op.signal_dim()
        )));
    }
    Ok(signals)
}

/// A count as a JSON integer, falling back to a float past `u64::MAX`.
fn count(v: u128) -> serde_json::Value {
    u64::try_from(v).map_or_else(|_| json!(v as f64), |n| json!(n))
}

fn operator(problem: &ProblemFile) -> Result<Operator, CliError> {
    let spec = problem.operator.as_ref().ok_or_else(|| {
        CliError::problem(format!("task {} needs an operator", problem.task.name()))
    })?;
    build_operator(spec)
}

fn matrix_operator(op: &Operator, task: Task) -> Result<MatrixOperator, CliError> {
    op.as_matrix()
        .cloned()
        .ok_or_else(|| CliError::problem(format!("task {} needs a matrix operator", task.name())))
}

fn signals(problem: &ProblemFile, op: &Operator) -> Result<Vec<Vec<f64>>, CliError> {
    let spec = problem
        .signals
        .as_ref()
        .ok_or_else(|| CliError::problem(format!("task {} needs signals", problem.task.name())))?;
    build_signals(spec, op, problem.params.seed.unwrap_or(0))
}

fn epsilon(problem: &ProblemFile) -> Result<f64, CliError> {
    problem
        .params
        .epsilon
        .filter(|e| *e > 0.0 && e.is_finite())
        .ok_or_else(|| {
            CliError::problem(format!(
                "task {} needs a positive params.epsilon",
                problem.task.name()
            ))
        })
}

/// Smallest pairwise observation distance between distinct signals.
fn min_observation_gap(set: &LabeledSet) -> f64 {
    let mut gap = f64::INFINITY;
    for i in 0..set.len() {
        for j in i + 1..set.len() {
            gap =
                gap.min(distance(set.observation(i), set.observation(j)).unwrap_or(f64::INFINITY));
        }
    }
    gap
}

/// Exact pairwise constant, or the colliding pair.
fn pairwise_constant(set: &LabeledSet) -> Result<Result<f64, (usize, usize)>, CliError> {
    match exact_constant(set) {
        Ok(c) => Ok(Ok(c.omega)),
        Err(Error::NotInjective { first, second }) => Ok(Err((first, second))),
        Err(e) => Err(e.into()),
    }
}

fn default_omega(problem: &ProblemFile, set: &LabeledSet) -> Result<f64, CliError> {
    if let Some(w) = problem.params.omega {
        return Ok(w);
    }
    match pairwise_constant(set)? {
        Ok(w) if w > 0.0 => Ok(w),
        Ok(_) => Err(CliError::problem(
            "sample has a zero pairwise constant; supply params.omega",
        )),
        Err((i, j)) => Err(Error::NotInjective {
            first: i,
            second: j,
        }
        .into()),
    }
}

fn certify(problem: &ProblemFile, report: &mut Report) -> Result<(), CliError> {
    let op = operator(problem)?;
    let set = LabeledSet::from_operator(&op, &signals(problem, &op)?)?;
    report.detail("sample_size", set.len());
    let tol_inj = injectivity_tolerance(&set);
    let gap = min_observation_gap(&set);
    match pairwise_constant(&set)? {
        Ok(omega) => {
            report.push(Assertion::flag("injective", true, gap, tol_inj));
            report.detail("omega", omega);
            if let Some(w) = problem.params.omega {
                let cert = verify_lipschitz(&set, w)?;
                report.push(Assertion::flag(
                    "lipschitz_at_omega",
                    cert.is_certified(),
                    cert.max_ratio,
                    w,
                ));
                report.detail("witness", cert.witness);
            }
        }
        Err(pair) => {
            report.push(Assertion::flag("injective", false, gap, tol_inj));
            report.detail("colliding_pair", pair);
        }
    }
    Ok(())
}

fn mwet(problem: &ProblemFile, seed: u64, report: &mut Report) -> Result<(), CliError> {
    let op = operator(problem)?;
    let set = LabeledSet::from_operator(&op, &signals(problem, &op)?)?;
    let num_pairs = problem.params.num_pairs.unwrap_or(DEFAULT_NUM_PAIRS);
    let h = MwetHypothesis::fit(set, problem.params.omega)?;
    report.push(Assertion::at_most(
        "training_interpolation",
        h.max_training_residual(),
        TOL_EVAL,
        0.0,
    ));
    if num_pairs > 0 {
        let ratio = h.lipschitz_audit(num_pairs, seed)?;
        report.push(Assertion::at_most(
            "global_lipschitz",
            ratio,
            h.omega_global(),
            TOL_CERT,
        ));
    }
    report.detail("omega1", h.omega1());
    report.detail("omega_global", h.omega_global());
    report.detail("num_pairs", num_pairs);
    report.detail("hypothesis", HypothesisJson::from(&h));
    Ok(())
}

fn cover_recovery(problem: &ProblemFile, report: &mut Report) -> Result<(), CliError> {
    let op = operator(problem)?;
    let xs = signals(problem, &op)?;
    let eps = epsilon(problem)?;
    let raw = LabeledSet::from_operator(&op, &xs)?;
    let omega = default_omega(problem, &raw)?;

    let (wrapped, scale) = normalize(&op, &xs)?;
    report.detail(
        "normalization",
        json!({ "shift": wrapped.shift(), "scale": scale }),
    );
    let set = LabeledSet::from_operator(&Operator::Normalized(Box::new(wrapped)), &xs)?;
    let omega_unit = omega * scale;
    report.detail("omega", omega);
    report.detail("normalized_omega", omega_unit);
    report
        .metadata
        .deviations
        .push(DENSE_SAMPLE_NOTE.to_string());

    let cert = verify_lipschitz(&set, omega_unit)?;
    report.push(Assertion::flag(
        "sample_lipschitz",
        cert.is_certified(),
        cert.max_ratio,
        omega_unit,
    ));
    if !cert.is_certified() {
        report.detail("witness", cert.witness);
        return Ok(());
    }
    let (_, _, r) = recover_with_cover(&set, omega_unit, eps)?;
    report.push(Assertion::at_most(
        "training_residual",
        r.max_training_residual,
        TOL_EVAL,
        0.0,
    ));
    report.push(Assertion::at_most(
        "max_recovery_error",
        r.max_recovery_error,
        eps,
        TOL_CERT,
    ));
    report.push(Assertion::at_most(
        "cover_size",
        r.cells_occupied as f64,
        r.cells_bound as f64,
        0.0,
    ));
    report.detail("t", r.t);
    report.detail("cells_occupied", r.cells_occupied);
    report.detail("cells_bound", count(r.cells_bound));
    report.detail("max_training_residual", r.max_training_residual);
    report.detail("max_recovery_error", r.max_recovery_error);
    report.detail("epsilon", eps);
    report.detail("sample_size", r.sample_size);
    report.detail("violations", r.violations);
    Ok(())
}

fn reduced_recovery(problem: &ProblemFile, seed: u64, report: &mut Report) -> Result<(), CliError> {
    let op = operator(problem)?;
    let a = matrix_operator(&op, problem.task)?;
    let xs = signals(problem, &op)?;
    let eps = epsilon(problem)?;
    let set = LabeledSet::from_operator(&op, &xs)?;
    let omega = default_omega(problem, &set)?;
    let probes = problem.params.num_pairs.unwrap_or(DEFAULT_PROBES);
    report.detail("omega", omega);

    let cert = verify_lipschitz(&set, omega)?;
    report.push(Assertion::flag(
        "sample_lipschitz",
        cert.is_certified(),
        cert.max_ratio,
        omega,
    ));
    if !cert.is_certified() {
        report.detail("witness", cert.witness);
        return Ok(());
    }
    let (map, cover) = fit_reduced(&set, &a, omega, eps)?;
    let r = reduced_report(&map, cover.as_ref(), &set, omega, eps, probes, seed)?;

    match &cover {
        Some(c) => {
            report
                .metadata
                .deviations
                .push(DENSE_SAMPLE_NOTE.to_string());
            report.push(Assertion::at_most(
                "training_residual",
                r.max_training_residual,
                TOL_EVAL,
                0.0,
            ));
            report.push(Assertion::at_most(
                "max_recovery_error",
                r.max_recovery_error,
                eps,
                TOL_CERT,
            ));
            report.push(Assertion::at_most(
                "cover_size",
                r.cells_occupied as f64,
                r.cells_bound as f64,
                0.0,
            ));
            let full = grid_spec(
                r.effective_rank + r.output_dim,
                r.effective_rank,
                c.spec().omega,
                eps,
                GridMode::Full,
            )?;
            report.push(Assertion::at_most(
                "reduced_grid_not_finer",
                r.t as f64,
                full.t as f64,
                0.0,
            ));
            report.detail("full_dimension_t", full.t);
        }
        None => {
            let worst = (0..set.len())
                .map(|i| {
                    let x = set.signal(i);
                    let err = distance(&map.recover_observation(set.observation(i))?, x)?;
                    Ok(err / (1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt()))
                })
                .collect::<Result<Vec<f64>, Error>>()?
                .into_iter()
                .fold(0.0, f64::max);
            report.push(Assertion::at_most(
                "exact_inversion_error",
                worst,
                1e-8,
                0.0,
            ));
        }
    }
    report.push(Assertion::at_most(
        "observation_consistency",
        r.max_consistency_residual,
        1e-8,
        0.0,
    ));
    report.detail("t", r.t);
    report.detail("cells_occupied", r.cells_occupied);
    report.detail("cells_bound", count(r.cells_bound));
    report.detail("max_training_residual", r.max_training_residual);
    report.detail("max_recovery_error", r.max_recovery_error);
    report.detail("epsilon", eps);
    report.detail("effective_rank", r.effective_rank);
    report.detail("rank_reduced", r.rank_reduced);
    report.detail("sample_size", r.sample_size);
    report.detail("violations", r.violations);
    report.detail("max_consistency_residual", r.max_consistency_residual);
    report.detail("max_decomposition_gap", r.max_decomposition_gap);
    report.detail("max_transfer_excess", r.max_transfer_excess);
    report.detail("probes", probes);
    report.detail("recovery_map", RecoveryMapJson::from(&map));
    Ok(())
}

fn rip(problem: &ProblemFile, seed: u64, report: &mut Report) -> Result<(), CliError> {
    let op = operator(problem)?;
    let a = matrix_operator(&op, problem.task)?;
    let s = problem
        .params
        .sparsity
        .ok_or_else(|| CliError::problem("task rip needs params.S"))?;
    let num_pairs = problem.params.num_pairs.unwrap_or(DEFAULT_NUM_PAIRS);
    let r = rip_delta(&a, s)?;
    report.detail("S", s);
    report.detail("delta", r.delta);
    report.detail("subsets_examined", count(r.subsets_examined));
    report.detail("extremal_subset", &r.extremal_subset);

    let mut derived_omega = None;
    if 2 * s <= a.obs_dim().min(a.signal_dim()) {
        match rip_delta(&a, 2 * s) {
            Ok(r2) => {
                report.detail("delta_2s", r2.delta);
                report.push(Assertion::at_most("monotonicity", r.delta, r2.delta, 0.0));
                if let Ok(w) = rip_to_omega(r2.delta) {
                    derived_omega = Some(w);
                    if num_pairs > 0 {
                        let check = verify_sparse_lipschitz(&a, s, num_pairs, seed)?;
                        report.push(Assertion::at_most(
                            "sparse_lipschitz",
                            check.max_ratio,
                            w,
                            TOL_CERT,
                        ));
                        report.detail("num_pairs", num_pairs);
                    }
                }
            }
            Err(e @ Error::TooLarge { .. }) => report.detail("delta_2s_skipped", e.to_string()),
            Err(e) => return Err(e.into()),
        }
    }
    if 3 * s <= a.signal_dim() {
        match check_recoverability_condition(&a, s) {
            Ok(c) => report.detail(
                "recoverability",
                json!({ "passed": c.passed, "delta_2s": c.delta_2s, "delta_3s": c.delta_3s }),
            ),
            Err(e @ Error::TooLarge { .. }) => {
                report.detail("recoverability_skipped", e.to_string())
            }
            Err(e) => return Err(e.into()),
        }
    }
    report.detail("derived_omega", derived_omega);
    Ok(())
}

/// `k / 100` for `k` in `lo..=hi`.
fn hundredths(lo: u32, hi: u32) -> impl Iterator<Item = Vec<f64>> {
    (lo..=hi).map(|k| vec![f64::from(k) / 100.0])
}

fn piecewise_set(xs: &[Vec<f64>]) -> Result<LabeledSet, CliError> {
    Ok(LabeledSet::from_operator(&Operator::PiecewiseExample, xs)?)
}

/// The piecewise operator fixture: identity on `[0, 1]`, flat on `[1, 2]`,
/// shifted identity on `[2, 3]`.
pub fn piecewise_fixture(report: &mut Report) -> Result<(), CliError> {
    let unit: Vec<_> = hundredths(0, 100).collect();
    let cert = verify_lipschitz(&piecewise_set(&unit)?, 1.0)?;
    report.push(Assertion::flag(
        "unit_interval_certified_at_1",
        cert.is_certified(),
        cert.max_ratio,
        1.0,
    ));

    let flat = piecewise_set(&[vec![1.0], vec![2.0]])?;
    let injective = pairwise_constant(&flat)?.is_ok();
    report.push(Assertion::flag(
        "pair_1_2_not_injective",
        !injective,
        min_observation_gap(&flat),
        injectivity_tolerance(&flat),
    ));

    let full: Vec<_> = hundredths(0, 300).collect();
    let full = piecewise_set(&full)?;
    let injective = pairwise_constant(&full)?.is_ok();
    report.push(Assertion::flag(
        "full_interval_not_lipschitz",
        !injective,
        min_observation_gap(&full),
        injectivity_tolerance(&full),
    ));

    let gappy: Vec<_> = hundredths(0, 50)
        .chain(std::iter::once(vec![1.5]))
        .chain(hundredths(250, 300))
        .collect();
    let gappy = piecewise_set(&gappy)?;
    let at_two = verify_lipschitz(&gappy, 2.0)?;
    report.push(Assertion::flag(
        "gappy_set_certified_at_2",
        at_two.is_certified(),
        at_two.max_ratio,
        2.0,
    ));
    let below = verify_lipschitz(&gappy, 1.99)?;
    report.push(Assertion::flag(
        "gappy_set_violated_at_1_99",
        !below.is_certified(),
        below.max_ratio,
        1.99,
    ));
    report.detail("gappy_constant", exact_constant(&gappy)?.omega);
    report.detail("gappy_witness", below.witness);
    Ok(())
}
