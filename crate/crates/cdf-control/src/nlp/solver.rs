//! Augmented-Lagrangian outer loop with a projected L-BFGS inner loop.
//!
//! Inputs are kept admissible by blockwise projection onto the input set.
//! Successor-state membership and the optional terminal inequality enter
//! through first-order multiplier estimates with a growing penalty. The
//! returned point is never worse than a supplied feasible warm start: the
//! warm start seeds the incumbent and only strictly better feasible
//! iterates replace it.

use nalgebra::DVector;

use crate::core::NormOrder;
use crate::error::{Error, Result};
use crate::nlp::{check_feasible, ShootingProblem, SolveResult, SolveStatus, SolverOptions};

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
const PENALTY_CAP: f64 = 1e12;
/// Penalty is grown when the violation fails to shrink by this factor.
const VIOLATION_SHRINK: f64 = 0.25;

/// Smooth encoding of the successor-state membership constraints.
#[derive(Clone, Copy)]
enum StateEncoding {
    /// Infinity-norm ball: `x_j - r <= 0` and `-x_j - r <= 0` per component.
    Box { radius: f64, n: usize },
    /// 2-norm ball, squared for smoothness: `||x||^2 - r^2 <= 0`.
    Ball { radius: f64 },
}

impl StateEncoding {
    fn per_state(&self) -> usize {
        match self {
            StateEncoding::Box { n, .. } => 2 * n,
            StateEncoding::Ball { .. } => 1,
        }
    }

    fn write_values(&self, x: &DVector<f64>, out: &mut [f64]) {
        match self {
            StateEncoding::Box { radius, n } => {
                for j in 0..*n {
                    out[2 * j] = x[j] - radius;
                    out[2 * j + 1] = -x[j] - radius;
                }
            }
            StateEncoding::Ball { radius } => {
                out[0] = x.norm_squared() - radius * radius;
            }
        }
    }

    /// Multiplier-weighted constraint gradient at one state.
    fn weighted_gradient(&self, x: &DVector<f64>, lambda: &[f64], mu: f64) -> DVector<f64> {
        let mut g = DVector::zeros(x.len());
        match self {
            StateEncoding::Box { radius, n } => {
                for j in 0..*n {
                    let up = (lambda[2 * j] + mu * (x[j] - radius)).max(0.0);
                    let lo = (lambda[2 * j + 1] + mu * (-x[j] - radius)).max(0.0);
                    g[j] = up - lo;
                }
            }
            StateEncoding::Ball { radius } => {
                let m = (lambda[0] + mu * (x.norm_squared() - radius * radius)).max(0.0);
                if m > 0.0 {
                    g += x * (2.0 * m);
                }
            }
        }
        g
    }
}

struct AlContext<'a> {
    problem: &'a ShootingProblem,
    encoding: StateEncoding,
    lambda: DVector<f64>,
    mu: f64,
}

impl<'a> AlContext<'a> {
    fn new(problem: &'a ShootingProblem, opts: &SolverOptions) -> Result<Self> {
        let set = problem.model.state_set();
        let encoding = match set.norm_order() {
            NormOrder::Infinity => StateEncoding::Box { radius: set.radius(), n: set.dimension() },
            NormOrder::Two => StateEncoding::Ball { radius: set.radius() },
            NormOrder::One => {
                return Err(Error::Unsupported(
                    "1-norm state sets are not supported by the shooting solver".into(),
                ))
            }
        };
        let n_cons = problem.horizon * encoding.per_state()
            + usize::from(problem.terminal_ineq.is_some());
        let _ = opts;
        Ok(Self { problem, encoding, lambda: DVector::zeros(n_cons), mu: opts.penalty_init })
    }

    fn constraint_values(&self, trajectory: &[DVector<f64>]) -> DVector<f64> {
        let per = self.encoding.per_state();
        let mut c = DVector::zeros(self.lambda.len());
        for (t, x) in trajectory.iter().enumerate().skip(1) {
            let base = (t - 1) * per;
            self.encoding.write_values(x, &mut c.as_mut_slice()[base..base + per]);
        }
        if let Some(term) = &self.problem.terminal_ineq {
            let idx = self.lambda.len() - 1;
            c[idx] = term.function.eval(trajectory.last().unwrap()) - term.bound;
        }
        c
    }

    /// Augmented-Lagrangian penalty value for encoded constraint values.
    fn penalty_value(&self, c: &DVector<f64>) -> f64 {
        let mut acc = 0.0;
        for j in 0..c.len() {
            let shifted = (self.lambda[j] + self.mu * c[j]).max(0.0);
            acc += (shifted * shifted - self.lambda[j] * self.lambda[j]) / (2.0 * self.mu);
        }
        acc
    }

    /// Merit value at a trajectory, `None` when the rollout overflowed.
    fn merit(&self, trajectory: &[DVector<f64>]) -> Option<f64> {
        let obj = self.problem.objective.value(trajectory);
        if !obj.is_finite() {
            return None;
        }
        let v = obj + self.penalty_value(&self.constraint_values(trajectory));
        v.is_finite().then_some(v)
    }

    /// Extra state gradient (constraint terms) used in the reverse pass.
    fn extra_state_gradient(&self, x: &DVector<f64>, index: usize) -> Option<DVector<f64>> {
        if index == 0 {
            return None;
        }
        let per = self.encoding.per_state();
        let base = (index - 1) * per;
        let mut g = self
            .encoding
            .weighted_gradient(x, &self.lambda.as_slice()[base..base + per], self.mu);
        if index == self.problem.horizon {
            if let Some(term) = &self.problem.terminal_ineq {
                let idx = self.lambda.len() - 1;
                let m = (self.lambda[idx] + self.mu * (term.function.eval(x) - term.bound)).max(0.0);
                if m > 0.0 {
                    g += term.function.gradient(x) * m;
                }
            }
        }
        Some(g)
    }

    fn update_multipliers(&mut self, c: &DVector<f64>, cap: f64) {
        for j in 0..self.lambda.len() {
            self.lambda[j] = (self.lambda[j] + self.mu * c[j]).clamp(0.0, cap);
        }
    }
}

/// Reverse-mode accumulation of an objective (plus optional per-state extra
/// terms) through the rollout. `extra` returns the additional gradient with
/// respect to the state at the given trajectory index, or `None` for zero.
pub(crate) fn reverse_gradient<F>(
    problem: &ShootingProblem,
    trajectory: &[DVector<f64>],
    inputs: &[DVector<f64>],
    extra: F,
) -> Result<DVector<f64>>
where
    F: Fn(&DVector<f64>, usize) -> Option<DVector<f64>>,
{
    let horizon = problem.horizon;
    let m = problem.input_dim();
    let fd = crate::model::DEFAULT_FD_STEP;
    let mut grad = DVector::zeros(horizon * m);

    // p holds the total derivative of the objective w.r.t. x(t+1).
    let mut p = problem.objective.state_gradient(trajectory, horizon);
    if let Some(e) = extra(&trajectory[horizon], horizon) {
        p += e;
    }
    for t in (0..horizon).rev() {
        let (a, b) = problem.model.jacobians(&trajectory[t], &inputs[t], fd)?;
        grad.rows_mut(t * m, m).copy_from(&(b.transpose() * &p));
        if t > 0 {
            let mut next = problem.objective.state_gradient(trajectory, t);
            if let Some(e) = extra(&trajectory[t], t) {
                next += e;
            }
            p = next + a.transpose() * p;
        }
    }
    if grad.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericOverflow("objective gradient is non-finite".into()));
    }
    Ok(grad)
}

/// Projects each input block onto the input set.
fn project_blocks(problem: &ShootingProblem, z: &DVector<f64>) -> Result<DVector<f64>> {
    let m = problem.input_dim();
    let mut out = z.clone();
    for t in 0..problem.horizon {
        let block = z.rows(t * m, m).into_owned();
        let proj = problem.model.input_set().project(&block)?;
        out.rows_mut(t * m, m).copy_from(&proj);
    }
    Ok(out)
}

struct InnerOutcome {
    z: DVector<f64>,
    iterations: usize,
    stationary: bool,
}

/// Projected L-BFGS on the augmented Lagrangian. Stationarity is declared
/// relative to the first projected-gradient norm of this subproblem, which
/// keeps the test meaningful at any trajectory scale.
fn inner_solve(
    ctx: &AlContext<'_>,
    z_init: DVector<f64>,
    opts: &SolverOptions,
) -> Result<InnerOutcome> {
    let problem = ctx.problem;

    let eval = |z: &DVector<f64>| -> Result<Option<(f64, Vec<DVector<f64>>, Vec<DVector<f64>>)>> {
        let inputs = problem.split_inputs(z);
        match problem.trajectory(&inputs) {
            Ok(traj) => Ok(ctx.merit(&traj).map(|f| (f, traj, inputs))),
            Err(Error::NumericOverflow(_)) => Ok(None),
            Err(e) => Err(e),
        }
    };

    let mut z = project_blocks(problem, &z_init)?;
    let (mut f, traj0, inputs0) = match eval(&z)? {
        Some(v) => v,
        None => {
            return Err(Error::NumericOverflow(
                "merit function is non-finite at the inner starting point".into(),
            ))
        }
    };
    let mut g = reverse_gradient(problem, &traj0, &inputs0, |x, i| ctx.extra_state_gradient(x, i))?;

    let projected_gradient_norm = |z: &DVector<f64>, g: &DVector<f64>| -> Result<f64> {
        let moved = project_blocks(problem, &(z - g))?;
        Ok((z - moved).amax())
    };

    let pg0 = projected_gradient_norm(&z, &g)?;
    if pg0 == 0.0 {
        return Ok(InnerOutcome { z, iterations: 0, stationary: true });
    }
    let tol = opts.tol_stat * pg0;

    // L-BFGS memory.
    let mut pairs: Vec<(DVector<f64>, DVector<f64>)> = Vec::new();

    let mut iterations = 0usize;
    let mut stationary = false;

    while iterations < opts.max_inner {
        let pg = projected_gradient_norm(&z, &g)?;
        if pg <= tol || pg <= f64::MIN_POSITIVE {
            stationary = true;
            break;
        }

        let mut accepted: Option<(DVector<f64>, f64, Vec<DVector<f64>>, Vec<DVector<f64>>)> = None;
        // L-BFGS direction first, steepest descent as fallback.
        'directions: for attempt in 0..2 {
            let d = if attempt == 0 && !pairs.is_empty() {
                two_loop_direction(&pairs, &g)
            } else {
                -&g
            };
            let mut alpha = if pairs.is_empty() || attempt == 1 {
                (1.0 / g.amax().max(1.0)).min(1.0)
            } else {
                1.0
            };
            for _ in 0..MAX_BACKTRACKS {
                let z_trial = project_blocks(problem, &(&z + &d * alpha))?;
                let step = &z_trial - &z;
                let slope = g.dot(&step);
                if slope < 0.0 {
                    if let Some((f_trial, traj_t, inputs_t)) = eval(&z_trial)? {
                        if f_trial <= f + ARMIJO_C1 * slope && f_trial < f {
                            accepted = Some((z_trial, f_trial, traj_t, inputs_t));
                            break 'directions;
                        }
                    }
                }
                alpha *= 0.5;
            }
        }

        let Some((z_new, f_new, traj_new, inputs_new)) = accepted else {
            // No direction produced a strict decrease: no improvement.
            break;
        };

        let g_new = reverse_gradient(problem, &traj_new, &inputs_new, |x, i| {
            ctx.extra_state_gradient(x, i)
        })?;
        let s = &z_new - &z;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        if sy > 1e-10 * s.norm() * y.norm() {
            if pairs.len() == opts.lbfgs_memory {
                pairs.remove(0);
            }
            pairs.push((s, y));
        }

        z = z_new;
        f = f_new;
        g = g_new;
        iterations += 1;
    }

    Ok(InnerOutcome { z, iterations, stationary })
}

/// Standard two-loop recursion with the last-pair scaling of the implicit
/// initial Hessian.
fn two_loop_direction(pairs: &[(DVector<f64>, DVector<f64>)], g: &DVector<f64>) -> DVector<f64> {
    let mut q = g.clone();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y) in pairs.iter().rev() {
        let rho = 1.0 / s.dot(y);
        let a = rho * s.dot(&q);
        q -= y * a;
        alphas.push((a, rho));
    }
    let (s_last, y_last) = pairs.last().unwrap();
    let gamma = s_last.dot(y_last) / y_last.dot(y_last);
    q *= gamma;
    for ((s, y), (a, rho)) in pairs.iter().zip(alphas.into_iter().rev()) {
        let b = rho * y.dot(&q);
        q += s * (a - b);
    }
    -q
}

struct Incumbent {
    inputs: Vec<DVector<f64>>,
    objective: f64,
    violation: f64,
    is_warm: bool,
}

/// Solves the shooting problem. See the module docs for the contract; in
/// particular a feasible warm start is never returned worse.
pub fn solve(
    problem: &ShootingProblem,
    warm_start: Option<&[DVector<f64>]>,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    opts.validate()?;
    let m = problem.input_dim();

    let start_inputs: Vec<DVector<f64>> = match warm_start {
        Some(w) => {
            if w.len() != problem.horizon {
                return Err(Error::DimensionMismatch {
                    expected: problem.horizon,
                    got: w.len(),
                    what: "warm start length",
                });
            }
            for u in w {
                if u.len() != m {
                    return Err(Error::DimensionMismatch {
                        expected: m,
                        got: u.len(),
                        what: "warm start input",
                    });
                }
            }
            w.to_vec()
        }
        None => vec![DVector::zeros(m); problem.horizon],
    };

    let mut incumbent: Option<Incumbent> = None;
    let warm_supplied = warm_start.is_some();

    // The supplied warm start seeds the incumbent when it is feasible.
    let (_, start_viol) = check_feasible(problem, &start_inputs)?;
    let start_traj = problem.trajectory(&start_inputs)?;
    let start_obj = problem.objective.value(&start_traj);
    if !start_obj.is_finite() {
        return Err(Error::NumericOverflow("objective is non-finite at the starting point".into()));
    }
    if start_viol <= opts.tol_feas {
        incumbent = Some(Incumbent {
            inputs: start_inputs.clone(),
            objective: start_obj,
            violation: start_viol,
            is_warm: warm_supplied,
        });
    }

    let mut ctx = AlContext::new(problem, opts)?;
    let mut z = problem.stack_inputs(&start_inputs);
    let mut total_iterations = 0usize;
    let mut previous_violation = f64::INFINITY;
    let mut converged = false;
    let mut stalled_outers = 0usize;
    let mut last_violation = start_viol;

    for _ in 0..opts.max_outer {
        let outcome = inner_solve(&ctx, z, opts)?;
        total_iterations += outcome.iterations;
        z = outcome.z;

        let inputs = problem.split_inputs(&z);
        let trajectory = problem.trajectory(&inputs)?;
        let objective = problem.objective.value(&trajectory);
        if !objective.is_finite() {
            return Err(Error::NumericOverflow("objective is non-finite at an iterate".into()));
        }
        let (_, violation) = check_feasible(problem, &inputs)?;
        last_violation = violation;

        if violation <= opts.tol_feas {
            let better = match &incumbent {
                None => true,
                Some(inc) => objective < inc.objective,
            };
            if better {
                incumbent = Some(Incumbent { inputs: inputs.clone(), objective, violation, is_warm: false });
            }
        }

        if violation <= opts.tol_feas && outcome.stationary {
            converged = true;
            break;
        }

        if outcome.iterations == 0 {
            stalled_outers += 1;
            if stalled_outers >= 2 {
                break;
            }
        } else {
            stalled_outers = 0;
        }

        let c = ctx.constraint_values(&trajectory);
        ctx.update_multipliers(&c, opts.multiplier_max);
        if violation > opts.tol_feas && violation > VIOLATION_SHRINK * previous_violation {
            ctx.mu = (ctx.mu * opts.penalty_growth).min(PENALTY_CAP);
        }
        previous_violation = violation;
    }

    match incumbent {
        Some(inc) => {
            let status = if inc.is_warm {
                SolveStatus::WarmStartReturned
            } else if converged {
                SolveStatus::Optimal
            } else {
                SolveStatus::FeasibleImproved
            };
            let states = problem.trajectory(&inc.inputs)?.split_off(1);
            Ok(SolveResult {
                inputs: inc.inputs,
                states,
                objective_value: inc.objective,
                status,
                iterations: total_iterations,
                max_constraint_violation: inc.violation,
            })
        }
        None => {
            let inputs = problem.split_inputs(&z);
            let trajectory = problem.trajectory(&inputs)?;
            let objective = problem.objective.value(&trajectory);
            Ok(SolveResult {
                inputs,
                states: trajectory.into_iter().skip(1).collect(),
                objective_value: objective,
                status: SolveStatus::Infeasible,
                iterations: total_iterations,
                max_constraint_violation: last_violation,
            })
        }
    }
}
