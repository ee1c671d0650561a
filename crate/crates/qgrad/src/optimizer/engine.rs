//! The run loop: drive an oracle with quantized steps until a stopping rule
//! fires or the iteration budget runs out, recording one trace row per
//! visited iterate.

use super::{
    measure_l_alpha, qgm_step, Domain, StepError, StepSchedule, StopReason, StoppingError,
    StoppingRule, TraceRow, RunTrace,
};
use crate::linalg::norm;
use crate::problems::ObjectiveOracle;
use crate::quantization::{QuantizationError, QuantizationSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("x0 has dimension {got}, oracle expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("quantizer dimension {set} does not match oracle dimension {oracle}")]
    QuantizerMismatch { set: usize, oracle: usize },
    #[error("x0 is not feasible for the run domain")]
    InfeasibleStart,
    #[error("Type-2 gap stopping requires an oracle with known f*")]
    GapNeedsFStar,
    #[error("L_alpha stopping is only defined on the nonnegative orthant")]
    LAlphaNeedsOrthant,
    #[error(transparent)]
    Stopping(#[from] StoppingError),
    #[error(transparent)]
    Schedule(#[from] super::ScheduleError),
    #[error(transparent)]
    Step(#[from] StepError),
    #[error(transparent)]
    Quantization(#[from] QuantizationError),
}

/// Everything one run needs. `l_alpha_param` is the α used for the recorded
/// L_α column (the default 1 matches the plots that track L₁).
pub struct RunSpec<'a> {
    pub oracle: &'a dyn ObjectiveOracle,
    pub quantizer: &'a QuantizationSet,
    pub schedule: StepSchedule,
    pub stopping: Option<StoppingRule>,
    pub max_iter: usize,
    pub x0: Vec<f64>,
    pub record_x: bool,
    pub l_alpha_param: f64,
}

impl<'a> RunSpec<'a> {
    pub fn new(
        oracle: &'a dyn ObjectiveOracle,
        quantizer: &'a QuantizationSet,
        schedule: StepSchedule,
        x0: Vec<f64>,
    ) -> Self {
        RunSpec {
            oracle,
            quantizer,
            schedule,
            stopping: None,
            max_iter: 10_000,
            x0,
            record_x: false,
            l_alpha_param: 1.0,
        }
    }

    pub fn stopping(mut self, rule: StoppingRule) -> Self {
        self.stopping = Some(rule);
        self
    }

    pub fn max_iter(mut self, iters: usize) -> Self {
        self.max_iter = iters;
        self
    }

    pub fn record_x(mut self, yes: bool) -> Self {
        self.record_x = yes;
        self
    }
}

/// Runs the quantized recursion. The stopping rule is evaluated before each
/// step, so `hit_iteration` matches the "there exists T with x(T) ∈ …"
/// reading and can be 0; the row at the hit (or at `max_iter`) is the last
/// one recorded.
pub fn run(spec: &RunSpec) -> Result<RunTrace, RunError> {
    let oracle = spec.oracle;
    let dims = oracle.dims();
    if spec.x0.len() != dims {
        return Err(RunError::DimensionMismatch { expected: dims, got: spec.x0.len() });
    }
    if spec.quantizer.dims() != dims {
        return Err(RunError::QuantizerMismatch { set: spec.quantizer.dims(), oracle: dims });
    }
    let domain = oracle.domain();
    if !domain.contains(&spec.x0, 1e-9) {
        return Err(RunError::InfeasibleStart);
    }
    let f_star = oracle.f_star();
    if let Some(rule) = &spec.stopping {
        rule.validate()?;
        match rule {
            StoppingRule::Gap { .. } if f_star.is_none() => return Err(RunError::GapNeedsFStar),
            StoppingRule::LAlpha { .. } if domain != Domain::NonnegativeOrthant => {
                return Err(RunError::LAlphaNeedsOrthant)
            }
            _ => {}
        }
    }
    let bits = spec.quantizer.bits_per_iteration()?;
    let record_l_alpha = domain == Domain::NonnegativeOrthant;
    if record_l_alpha && (spec.l_alpha_param <= 0.0 || spec.l_alpha_param.is_nan()) {
        return Err(RunError::Stopping(StoppingError::NonPositiveAlpha(spec.l_alpha_param)));
    }

    let mut x = spec.x0.clone();
    domain.project_in_place(&mut x); // absorb sub-tolerance negatives
    let mut rows = Vec::with_capacity((spec.max_iter + 1).min(1 << 20));
    let mut hit_iteration = None;
    let mut stop_reason = StopReason::MaxIterReached;

    for t in 0..=spec.max_iter {
        let f = oracle.eval(&x);
        let g = oracle.grad(&x);
        let grad_norm = norm(&g);
        let l_alpha = record_l_alpha
            .then(|| measure_l_alpha(&x, &g, spec.l_alpha_param).expect("alpha validated"));
        let gamma = spec.schedule.gamma(t);
        rows.push(TraceRow {
            t,
            x: spec.record_x.then(|| x.clone()),
            f,
            grad_norm,
            l_alpha,
            gamma,
            bits_cumulative: bits as u64 * t as u64,
        });

        let satisfied = match spec.stopping {
            Some(StoppingRule::GradNorm { epsilon }) => grad_norm <= epsilon,
            Some(StoppingRule::LAlpha { epsilon, alpha }) => {
                let value = if (alpha - spec.l_alpha_param).abs() < f64::EPSILON {
                    l_alpha.expect("orthant domain records l_alpha")
                } else {
                    measure_l_alpha(&x, &g, alpha).expect("alpha validated")
                };
                value <= epsilon
            }
            Some(StoppingRule::Gap { epsilon }) => {
                f - f_star.expect("checked above") <= epsilon
            }
            Some(StoppingRule::MaxIter { iters }) => t >= iters,
            None => false,
        };
        if satisfied {
            hit_iteration = Some(t);
            stop_reason = StopReason::RuleSatisfied;
            break;
        }
        if t == spec.max_iter {
            break;
        }
        x = qgm_step(&x, &g, spec.quantizer, gamma, &domain)?;
    }

    Ok(RunTrace {
        rows,
        hit_iteration,
        stop_reason,
        final_x: x,
        bits_per_iteration: bits,
    })
}

/// One member of a constant-step sweep.
pub struct SweepMember {
    pub gamma: f64,
    pub trace: RunTrace,
    pub floor: f64,
    pub final_f: f64,
    pub bits_total: u64,
}

/// Runs one constant-step trace per γ against a shared oracle.
///
/// With `continuation` set (the default behaviour of the sweep command) the
/// members execute in descending-γ order and each starts from the previous
/// member's final iterate, so every member's error floor is measured in its
/// own stationary regime: at small γ the iterate moves by at most γ per
/// iteration, which from a cold start cannot cross the price scale of a
/// large network inside one iteration budget. Results come back in the
/// caller's order.
pub fn sweep_constant(
    oracle: &dyn ObjectiveOracle,
    quantizer: &QuantizationSet,
    gammas: &[f64],
    x0: Vec<f64>,
    max_iter: usize,
    record_x: bool,
    continuation: bool,
) -> Result<Vec<SweepMember>, RunError> {
    let mut order: Vec<usize> = (0..gammas.len()).collect();
    if continuation {
        order.sort_by(|&a, &b| gammas[b].partial_cmp(&gammas[a]).expect("finite gammas"));
    }
    let mut members: Vec<Option<SweepMember>> = (0..gammas.len()).map(|_| None).collect();
    let mut start = x0;
    for &idx in &order {
        let schedule = StepSchedule::constant(gammas[idx])?;
        let spec = RunSpec {
            oracle,
            quantizer,
            schedule,
            stopping: None,
            max_iter,
            x0: start.clone(),
            record_x,
            l_alpha_param: 1.0,
        };
        let trace = run(&spec)?;
        if continuation {
            start = trace.final_x.clone();
        }
        members[idx] = Some(SweepMember {
            gamma: gammas[idx],
            floor: trace.floor_metric(),
            final_f: trace.final_f(),
            bits_total: trace.bits_total(),
            trace,
        });
    }
    Ok(members.into_iter().map(|m| m.expect("all members ran")).collect())
}
