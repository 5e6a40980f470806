//! Two-layer iterative solver for the sum-energy-efficiency association
//! problem.
//!
//! The binary association problem maximizes `sum_k R_k / alpha_{n(k)}`, a sum
//! of ratios. It is handled through its parametric form: auxiliary weights
//! `omega_nk` (per-link EE parameters) and multipliers `lambda_nk` satisfy, at
//! any optimum, the fixed-point system
//!
//! ```text
//!   lambda_nk = x_nk   / (alpha_n * (1 + L_n))
//!   omega_nk  = r_nk   / (alpha_n * (1 + L_n)),      L_n = sum_i x_ni
//! ```
//!
//! The solver alternates two layers:
//! - inner layer: each user picks the BS maximizing
//!   `omega_nk + mu_k * SINR_nk - alpha_n * sum_i lambda_ni * omega_ni`,
//!   with `mu` driven by projected subgradient steps on the SINR constraints
//!   and renormalized to sum 1 each pass;
//! - outer layer: a damped Newton step on the fixed-point residuals
//!
//!   ```text
//!     phi_nk = alpha_n * lambda_nk * (1 + L_n) - x_nk
//!     psi_nk = alpha_n * omega_nk  * (1 + L_n) - r_nk
//!   ```
//!
//!   scaled by `chi_n = 1 / (alpha_n * (1 + L_n))`, with the step exponent
//!   chosen by a backtracking condition that forces the squared residual sum
//!   to shrink by at least `(1 - epsilon * xi^m)` per iteration.
//!
//! Both residuals are affine in (lambda, omega) for fixed x, so the full step
//! lands exactly on the fixed point of the current association; the iteration
//! terminates once re-selection no longer moves the association. The `1 + L_n`
//! denominator (instead of `L_n`) keeps empty BSs well-defined during the
//! iteration; reported objectives always use the true `L_n` time-sharing.
//!
//! Simultaneous re-selection can enter limit cycles: a borderline user (or a
//! stampede onto an emptied BS) alternates between two associations whose
//! fixed points each favor the other. [`solve`] handles this with two
//! recovery layers, both deterministic: a damped outer step once an
//! association repeats, and a small portfolio of alternative seed
//! associations sharing the single `max_outer` budget. A run reports
//! `converged = true` only on the fixed-point certificate (residuals within
//! tolerance after a fresh selection); binary instances whose relaxed optimum
//! splits a user across two BSs have no such point and finish with
//! `converged = false` carrying the best association encountered.

use std::collections::VecDeque;

use ndarray::Array2;

use crate::baselines::{evaluate_objective, max_sinr_association, per_user_metrics, PerUserMetrics};
use crate::error::{Error, Result};
use crate::link::LinkTable;

/// Tunables of the two-layer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    /// Backtracking base in (0,1); the outer step is `xi^m`.
    pub xi: f64,
    /// Sufficient-decrease slack in (0,1).
    pub epsilon: f64,
    /// Max outer iterations.
    pub max_outer: usize,
    /// Max inner iterations per outer pass.
    pub max_inner: usize,
    /// Subgradient stepsize for the SINR multipliers.
    pub mu_step: f64,
    /// Outer stop: max |phi|, |psi| at the fixed-point check.
    pub residual_tol: f64,
    /// Inner stop: relative change of the selection objective.
    pub inner_tol: f64,
    /// Largest backtracking exponent tried before giving up.
    pub max_backtrack: u32,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            xi: 0.5,
            epsilon: 0.01,
            max_outer: 200,
            max_inner: 50,
            mu_step: 0.05,
            residual_tol: 1e-6,
            inner_tol: 1e-8,
            max_backtrack: 30,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.xi > 0.0 && self.xi < 1.0) {
            return Err(Error::InvalidConfig(format!("xi must lie in (0,1), got {}", self.xi)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidConfig(format!("epsilon must lie in (0,1), got {}", self.epsilon)));
        }
        if self.max_outer < 1 || self.max_inner < 1 {
            return Err(Error::InvalidConfig("iteration caps must be >= 1".into()));
        }
        if !(self.mu_step > 0.0) {
            return Err(Error::InvalidConfig(format!("mu_step must be > 0, got {}", self.mu_step)));
        }
        if !(self.residual_tol > 0.0 && self.inner_tol > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be > 0".into()));
        }
        Ok(())
    }
}

/// Binary assignment of each user to exactly one BS, with cached per-BS
/// loads. The one-BS-per-user constraint holds by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Association {
    num_bs: usize,
    choice: Vec<usize>,
    load: Vec<usize>,
}

impl Association {
    pub fn from_choices(num_bs: usize, choice: Vec<usize>) -> Result<Self> {
        let mut load = vec![0usize; num_bs];
        for (k, &n) in choice.iter().enumerate() {
            if n >= num_bs {
                return Err(Error::DimensionMismatch(format!(
                    "user {k} assigned to BS {n}, only {num_bs} BSs exist"
                )));
            }
            load[n] += 1;
        }
        Ok(Self { num_bs, choice, load })
    }

    pub fn num_bs(&self) -> usize {
        self.num_bs
    }

    pub fn num_users(&self) -> usize {
        self.choice.len()
    }

    /// Serving BS of user `k`.
    pub fn bs_of(&self, k: usize) -> usize {
        self.choice[k]
    }

    pub fn choices(&self) -> &[usize] {
        &self.choice
    }

    /// Number of users on BS `n`.
    pub fn load_of(&self, n: usize) -> usize {
        self.load[n]
    }

    pub fn loads(&self) -> &[usize] {
        &self.load
    }

    /// The x_nk entry as a float (1.0 if user `k` sits on BS `n`).
    pub fn indicator(&self, n: usize, k: usize) -> f64 {
        if self.choice[k] == n {
            1.0
        } else {
            0.0
        }
    }
}

/// Mutable state of one solve: association, multipliers and iteration
/// bookkeeping.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub assoc: Association,
    /// Fixed-point multipliers of the load-coupling constraint, N x K.
    pub lambda: Array2<f64>,
    /// Per-link EE weights, N x K.
    pub omega: Array2<f64>,
    /// SINR-constraint multipliers, length K, kept normalized to sum 1.
    pub mu: Vec<f64>,
    /// False for users whose threshold is unmeetable (constraint dropped).
    pub constrained: Vec<bool>,
    pub outer_iter: usize,
    pub inner_iters_total: usize,
    /// L2 norm of (phi, psi) at each outer fixed-point check.
    pub residual_history: Vec<f64>,
    /// Relaxed objective F(x, omega) at each outer check.
    pub objective_history: Vec<f64>,
}

/// Per-iteration record of the outer loop.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterTrace {
    pub outer_iter: usize,
    /// Inner passes used this outer iteration.
    pub inner_iters: usize,
    /// Selection objective G(x) after the inner loop.
    pub inner_objective: f64,
    /// Relaxed objective F(x, omega).
    pub outer_objective: f64,
    pub residual_norm: f64,
    /// Backtracking exponent; `None` on the terminal check (no step taken).
    pub m: Option<u32>,
    /// Squared residual sum after the tentative step.
    pub armijo_lhs: Option<f64>,
    /// `(1 - epsilon * xi^m)` times the pre-step squared residual sum.
    pub armijo_rhs: Option<f64>,
}

/// Outcome of one solve.
#[derive(Debug, Clone)]
pub struct AssociationResult {
    /// Best association found: the exact-objective climb applied to the best
    /// iterate on record. The certified fixed point itself stays available
    /// through [`solve_with_state`].
    pub assoc: Association,
    /// True objective: sum over users of (r / L) / alpha, bits/J.
    pub sum_ee: f64,
    /// Whether the iteration reached the fixed-point certificate (residuals
    /// within tolerance right after a fresh selection).
    pub converged: bool,
    pub outer_iters: usize,
    pub inner_iters_total: usize,
    /// Max |phi|, |psi| at the last fixed-point check.
    pub residual_max: f64,
    pub residual_history: Vec<f64>,
    pub objective_history: Vec<f64>,
    pub trace: Vec<OuterTrace>,
    pub per_user: Vec<PerUserMetrics>,
    /// Users whose SINR threshold no BS can meet; their constraint was
    /// dropped (mu pinned to zero) and the run flagged here.
    pub infeasible_users: Vec<usize>,
}

/// lambda at the fixed point of a given association: `x / (alpha * (1 + L))`.
pub fn lambda_at_fixed_point(assoc: &Association, link: &LinkTable) -> Array2<f64> {
    let (n, k) = (link.num_bs(), link.num_users());
    let mut lambda = Array2::<f64>::zeros((n, k));
    for user in 0..k {
        let bs = assoc.bs_of(user);
        lambda[[bs, user]] = 1.0 / (link.alpha[bs] * (1.0 + assoc.load_of(bs) as f64));
    }
    lambda
}

/// omega at the fixed point of a given association: `r / (alpha * (1 + L))`,
/// defined for every link (empty BSs get `r / alpha`).
pub fn omega_at_fixed_point(assoc: &Association, link: &LinkTable) -> Array2<f64> {
    let (n, k) = (link.num_bs(), link.num_users());
    let mut omega = Array2::<f64>::zeros((n, k));
    for bs in 0..n {
        let denom = link.alpha[bs] * (1.0 + assoc.load_of(bs) as f64);
        for user in 0..k {
            omega[[bs, user]] = link.rate[[bs, user]] / denom;
        }
    }
    omega
}

/// Seeds the iteration: max-SINR association, multipliers at its fixed point,
/// uniform SINR multipliers.
pub fn init_state(link: &LinkTable, _params: &SolverParams) -> SolverState {
    let assoc = max_sinr_association(link);
    let lambda = lambda_at_fixed_point(&assoc, link);
    let omega = omega_at_fixed_point(&assoc, link);
    let k = link.num_users();
    SolverState {
        assoc,
        lambda,
        omega,
        mu: vec![1.0 / k as f64; k],
        constrained: vec![true; k],
        outer_iter: 0,
        inner_iters_total: 0,
        residual_history: Vec::new(),
        objective_history: Vec::new(),
    }
}

/// Per-BS penalty `alpha_n * sum_i lambda_ni * omega_ni` entering every
/// user's utility.
fn bs_penalties(state: &SolverState, link: &LinkTable) -> Vec<f64> {
    (0..link.num_bs())
        .map(|n| {
            let dot: f64 =
                (0..link.num_users()).map(|k| state.lambda[[n, k]] * state.omega[[n, k]]).sum();
            link.alpha[n] * dot
        })
        .collect()
}

/// The utility user `k` sees at BS `n` during selection.
pub fn selection_utility(state: &SolverState, link: &LinkTable, n: usize, k: usize) -> f64 {
    let penalty = bs_penalties(state, link)[n];
    state.omega[[n, k]] + state.mu[k] * link.sinr[[n, k]] - penalty
}

/// Each user independently picks its utility-maximizing BS; ties go to the
/// lowest BS index.
pub fn inner_select(state: &SolverState, link: &LinkTable) -> Association {
    let penalties = bs_penalties(state, link);
    let (n_bs, n_users) = (link.num_bs(), link.num_users());
    let mut choice = Vec::with_capacity(n_users);
    for k in 0..n_users {
        let mut best = 0usize;
        let mut best_utility = f64::NEG_INFINITY;
        for n in 0..n_bs {
            let u = state.omega[[n, k]] + state.mu[k] * link.sinr[[n, k]] - penalties[n];
            if u > best_utility {
                best_utility = u;
                best = n;
            }
        }
        choice.push(best);
    }
    Association::from_choices(n_bs, choice).expect("argmax indices are always in range")
}

/// Projected subgradient step on the SINR multipliers followed by the sum-1
/// renormalization. An all-zero vector (every constraint slack) resets to
/// uniform first; users with dropped constraints stay pinned at zero.
pub fn update_mu(state: &mut SolverState, link: &LinkTable, params: &SolverParams) {
    let active = state.constrained.iter().filter(|&&c| c).count();
    if active == 0 {
        return;
    }
    for k in 0..link.num_users() {
        if !state.constrained[k] {
            continue;
        }
        let serving = state.assoc.bs_of(k);
        let slack = link.sinr[[serving, k]] - link.tau[k];
        state.mu[k] = (state.mu[k] - params.mu_step * slack).max(0.0);
    }
    let sum: f64 = state.mu.iter().sum();
    if sum == 0.0 {
        let uniform = 1.0 / active as f64;
        for k in 0..link.num_users() {
            if state.constrained[k] {
                state.mu[k] = uniform;
            }
        }
    } else {
        for v in &mut state.mu {
            *v /= sum;
        }
    }
}

/// Selection objective `G(x) = sum_k (omega_{n(k),k} - penalty_{n(k)})`.
pub fn inner_objective(state: &SolverState, link: &LinkTable) -> f64 {
    let penalties = bs_penalties(state, link);
    (0..link.num_users())
        .map(|k| {
            let n = state.assoc.bs_of(k);
            state.omega[[n, k]] - penalties[n]
        })
        .sum()
}

/// Relaxed objective `F(x, omega) = sum_k omega_{n(k),k}`.
pub fn outer_objective(state: &SolverState, link: &LinkTable) -> f64 {
    (0..link.num_users()).map(|k| state.omega[[state.assoc.bs_of(k), k]]).sum()
}

/// Runs selection and multiplier updates until G(x) stalls (relative change
/// within `inner_tol`, measured against the incoming association) or the
/// inner cap is hit. Returns the inner passes used.
pub fn inner_loop(state: &mut SolverState, link: &LinkTable, params: &SolverParams) -> usize {
    let mut prev_g = inner_objective(state, link);
    for pass in 1..=params.max_inner {
        state.assoc = inner_select(state, link);
        update_mu(state, link, params);
        state.inner_iters_total += 1;
        let g = inner_objective(state, link);
        if (g - prev_g).abs() <= params.inner_tol * g.abs() {
            return pass;
        }
        prev_g = g;
    }
    params.max_inner
}

/// Fixed-point residual of lambda at (n, k).
pub fn residual_lambda(state: &SolverState, link: &LinkTable, n: usize, k: usize) -> f64 {
    let load1 = 1.0 + state.assoc.load_of(n) as f64;
    link.alpha[n] * state.lambda[[n, k]] * load1 - state.assoc.indicator(n, k)
}

/// Fixed-point residual of omega at (n, k).
pub fn residual_omega(state: &SolverState, link: &LinkTable, n: usize, k: usize) -> f64 {
    let load1 = 1.0 + state.assoc.load_of(n) as f64;
    link.alpha[n] * state.omega[[n, k]] * load1 - link.rate[[n, k]]
}

/// Newton scaling `chi_n = 1 / (alpha_n * (1 + L_n))`; depends on the BS only.
pub fn newton_scale(state: &SolverState, link: &LinkTable, n: usize) -> f64 {
    1.0 / (link.alpha[n] * (1.0 + state.assoc.load_of(n) as f64))
}

/// Both residual matrices at the current state.
pub fn residual_matrices(state: &SolverState, link: &LinkTable) -> (Array2<f64>, Array2<f64>) {
    let (n_bs, n_users) = (link.num_bs(), link.num_users());
    let mut phi = Array2::<f64>::zeros((n_bs, n_users));
    let mut psi = Array2::<f64>::zeros((n_bs, n_users));
    for n in 0..n_bs {
        for k in 0..n_users {
            phi[[n, k]] = residual_lambda(state, link, n, k);
            psi[[n, k]] = residual_omega(state, link, n, k);
        }
    }
    (phi, psi)
}

fn squared_sum(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>() + b.iter().map(|v| v * v).sum::<f64>()
}

fn max_abs(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().chain(b.iter()).fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Result of the backtracking search: the exponent plus both sides of the
/// sufficient-decrease inequality it satisfied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchOutcome {
    pub m: u32,
    /// Squared residual sum at the tentatively stepped multipliers.
    pub post_sq_sum: f64,
    pub pre_sq_sum: f64,
    /// `(1 - epsilon * xi^m) * pre_sq_sum`.
    pub threshold: f64,
}

/// Finds the smallest `m` in `0..=max_backtrack` whose damped step shrinks
/// the squared residual sum by factor `(1 - epsilon * xi^m)`, evaluating the
/// residuals at the tentatively stepped multipliers. `None` if no exponent
/// qualifies.
pub fn line_search(state: &SolverState, link: &LinkTable, params: &SolverParams) -> Option<LineSearchOutcome> {
    let (phi, psi) = residual_matrices(state, link);
    let pre = squared_sum(&phi, &psi);
    let (n_bs, n_users) = (link.num_bs(), link.num_users());
    for m in 0..=params.max_backtrack {
        let step = params.xi.powi(m as i32);
        let mut post = 0.0;
        for n in 0..n_bs {
            let load1 = 1.0 + state.assoc.load_of(n) as f64;
            let scale = link.alpha[n] * load1;
            let chi = 1.0 / scale;
            for k in 0..n_users {
                let lambda_try = state.lambda[[n, k]] - step * chi * phi[[n, k]];
                let d = scale * lambda_try - state.assoc.indicator(n, k);
                post += d * d;
                let omega_try = state.omega[[n, k]] - step * chi * psi[[n, k]];
                let d = scale * omega_try - link.rate[[n, k]];
                post += d * d;
            }
        }
        let threshold = (1.0 - params.epsilon * step) * pre;
        if post <= threshold {
            return Some(LineSearchOutcome { m, post_sq_sum: post, pre_sq_sum: pre, threshold });
        }
    }
    None
}

/// Applies the damped Newton step `xi^m * chi_n` to both multiplier blocks;
/// omega is clamped at zero from below.
pub fn outer_update(state: &mut SolverState, m: u32, link: &LinkTable, params: &SolverParams) {
    let (phi, psi) = residual_matrices(state, link);
    let step = params.xi.powi(m as i32);
    for n in 0..link.num_bs() {
        let chi = newton_scale(state, link, n);
        for k in 0..link.num_users() {
            state.lambda[[n, k]] -= step * chi * phi[[n, k]];
            state.omega[[n, k]] = (state.omega[[n, k]] - step * chi * psi[[n, k]]).max(0.0);
        }
    }
}

/// Deterministic seed associations tried in order when a trajectory fails to
/// settle: the max-SINR seed first, then load-aware and rate-driven variants
/// that start the iteration in different basins.
fn seed_portfolio(link: &LinkTable) -> Vec<Association> {
    let n_bs = link.num_bs();
    let n_users = link.num_users();

    let mut load = vec![0usize; n_bs];
    let mut greedy = Vec::with_capacity(n_users);
    for k in 0..n_users {
        let mut best = 0usize;
        let mut best_score = f64::NEG_INFINITY;
        for n in 0..n_bs {
            let score = link.rate[[n, k]] / (link.alpha[n] * (1.0 + load[n] as f64));
            if score > best_score {
                best_score = score;
                best = n;
            }
        }
        greedy.push(best);
        load[best] += 1;
    }

    let second_best: Vec<usize> = (0..n_users)
        .map(|k| {
            let mut idx: Vec<usize> = (0..n_bs).collect();
            idx.sort_by(|&i, &j| {
                link.sinr[[j, k]].partial_cmp(&link.sinr[[i, k]]).expect("finite SINR")
            });
            idx[1.min(n_bs - 1)]
        })
        .collect();

    let mut seeds = vec![
        max_sinr_association(link),
        Association::from_choices(n_bs, greedy).expect("indices in range"),
        crate::baselines::max_rate_association(link),
        Association::from_choices(n_bs, second_best).expect("indices in range"),
    ];
    seeds.dedup();
    seeds
}

/// One trajectory of the outer iteration from a given seed association,
/// within an iteration budget. Revisiting an earlier association marks a
/// selection cycle; from then on the outer step is damped (exponent at least
/// `damp`) until the selection holds still, which lets the multipliers blend
/// between the competing fixed points instead of jumping onto each in turn.
struct StageOutcome {
    converged: bool,
    iters_used: usize,
}

#[allow(clippy::too_many_arguments)]
fn run_stage(
    state: &mut SolverState,
    link: &LinkTable,
    params: &SolverParams,
    budget: usize,
    t1_offset: usize,
    trace: &mut Vec<OuterTrace>,
    best: &mut (Association, f64),
    residual_max_final: &mut f64,
) -> Result<StageOutcome> {
    const CYCLE_HISTORY: usize = 24;
    const DAMP_CAP: u32 = 4;

    let mut history: VecDeque<Vec<usize>> = VecDeque::new();
    let mut damp = 0u32;
    let mut stable_run = 0usize;

    for step in 1..=budget {
        let t1 = t1_offset + step;
        state.outer_iter = t1;
        let inner_iters = inner_loop(state, link, params);

        let report = evaluate_objective(&state.assoc, link)?;
        if report.sum_ee > best.1 {
            *best = (state.assoc.clone(), report.sum_ee);
        }

        let (phi, psi) = residual_matrices(state, link);
        let residual_norm = squared_sum(&phi, &psi).sqrt();
        let residual_max = max_abs(&phi, &psi);
        let f_value = outer_objective(state, link);
        let g_value = inner_objective(state, link);
        state.residual_history.push(residual_norm);
        state.objective_history.push(f_value);
        *residual_max_final = residual_max;

        if residual_max <= params.residual_tol {
            trace.push(OuterTrace {
                outer_iter: t1,
                inner_iters,
                inner_objective: g_value,
                outer_objective: f_value,
                residual_norm,
                m: None,
                armijo_lhs: None,
                armijo_rhs: None,
            });
            return Ok(StageOutcome { converged: true, iters_used: step });
        }

        let choices = state.assoc.choices().to_vec();
        let stable = history.back() == Some(&choices);
        let revisit = !stable && history.iter().rev().skip(1).any(|h| *h == choices);
        if revisit {
            damp = (damp + 1).min(DAMP_CAP);
            stable_run = 0;
        } else if stable {
            stable_run += 1;
            if stable_run >= 2 {
                damp = 0;
            }
        }
        history.push_back(choices);
        if history.len() > CYCLE_HISTORY {
            history.pop_front();
        }

        match line_search(state, link, params) {
            Some(ls) => {
                let m_used = ls.m.max(damp);
                let (lhs, rhs) = if m_used == ls.m {
                    (ls.post_sq_sum, ls.threshold)
                } else {
                    // the decrease inequality holds for every exponent on
                    // these affine residuals; recompute both sides at the
                    // damped exponent actually applied
                    armijo_sides(state, link, params, m_used)
                };
                trace.push(OuterTrace {
                    outer_iter: t1,
                    inner_iters,
                    inner_objective: g_value,
                    outer_objective: f_value,
                    residual_norm,
                    m: Some(m_used),
                    armijo_lhs: Some(lhs),
                    armijo_rhs: Some(rhs),
                });
                outer_update(state, m_used, link, params);
            }
            None => {
                trace.push(OuterTrace {
                    outer_iter: t1,
                    inner_iters,
                    inner_objective: g_value,
                    outer_objective: f_value,
                    residual_norm,
                    m: None,
                    armijo_lhs: None,
                    armijo_rhs: None,
                });
                return Ok(StageOutcome { converged: false, iters_used: step });
            }
        }
    }
    Ok(StageOutcome { converged: false, iters_used: budget })
}

/// Hill-climb on the true time-shared objective: users take turns moving to
/// whichever BS raises the total sum EE the most, until no strict improvement
/// remains. Moves that would break the mover's SINR threshold are skipped
/// (`unconstrained` marks users whose threshold was dropped as unmeetable).
///
/// The iteration's selection rule prices the externality of joining a BS
/// through the relaxed `1 + L` load, which undervalues thinning a small cell;
/// this pass closes that gap on the exact objective. Each accepted move
/// strictly increases the total, so the climb terminates.
pub fn polish_association(
    assoc: &Association,
    link: &LinkTable,
    unconstrained: &[usize],
) -> Association {
    let n_bs = link.num_bs();
    let n_users = link.num_users();
    let mut choice = assoc.choices().to_vec();
    let mut load: Vec<f64> = assoc.loads().iter().map(|&l| l as f64).collect();
    // per-BS sum of its members' full rates; EE of BS n totals sum_n / (L_n * alpha_n)
    let mut rate_sum = vec![0.0f64; n_bs];
    for k in 0..n_users {
        rate_sum[choice[k]] += link.rate[[choice[k], k]];
    }
    let bs_value = |sum: f64, load: f64, n: usize| -> f64 {
        if load > 0.0 {
            sum / (load * link.alpha[n])
        } else {
            0.0
        }
    };

    let mut total: f64 = (0..n_bs).map(|n| bs_value(rate_sum[n], load[n], n)).sum();
    for _pass in 0..200 {
        let mut moved = false;
        for k in 0..n_users {
            let from = choice[k];
            let mut best_gain = 0.0;
            let mut best_to = from;
            let from_after = bs_value(rate_sum[from] - link.rate[[from, k]], load[from] - 1.0, from);
            let from_before = bs_value(rate_sum[from], load[from], from);
            for to in 0..n_bs {
                if to == from {
                    continue;
                }
                if link.sinr[[to, k]] < link.tau[k] && !unconstrained.contains(&k) {
                    continue;
                }
                let to_after = bs_value(rate_sum[to] + link.rate[[to, k]], load[to] + 1.0, to);
                let to_before = bs_value(rate_sum[to], load[to], to);
                let gain = (from_after - from_before) + (to_after - to_before);
                if gain > best_gain {
                    best_gain = gain;
                    best_to = to;
                }
            }
            if best_to != from && best_gain > 1e-12 * total.abs() {
                rate_sum[from] -= link.rate[[from, k]];
                load[from] -= 1.0;
                rate_sum[best_to] += link.rate[[best_to, k]];
                load[best_to] += 1.0;
                choice[k] = best_to;
                total += best_gain;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    Association::from_choices(n_bs, choice).expect("moves keep indices in range")
}

/// Both sides of the sufficient-decrease inequality at a given exponent.
fn armijo_sides(state: &SolverState, link: &LinkTable, params: &SolverParams, m: u32) -> (f64, f64) {
    let (phi, psi) = residual_matrices(state, link);
    let pre = squared_sum(&phi, &psi);
    let step = params.xi.powi(m as i32);
    let mut post = 0.0;
    for n in 0..link.num_bs() {
        let load1 = 1.0 + state.assoc.load_of(n) as f64;
        let scale = link.alpha[n] * load1;
        let chi = 1.0 / scale;
        for k in 0..link.num_users() {
            let d = scale * (state.lambda[[n, k]] - step * chi * phi[[n, k]]) - state.assoc.indicator(n, k);
            post += d * d;
            let d = scale * (state.omega[[n, k]] - step * chi * psi[[n, k]]) - link.rate[[n, k]];
            post += d * d;
        }
    }
    (post, (1.0 - params.epsilon * step) * pre)
}

/// Full solve: the two-layer iteration (with cycle damping and seed
/// restarts), followed by an exact-objective polish of the best association
/// on record. The returned objective is always the true time-sharing
/// objective of the returned association.
pub fn solve(link: &LinkTable, params: &SolverParams) -> Result<AssociationResult> {
    solve_with_state(link, params).map(|(result, _)| result)
}

/// `solve` variant that also hands back the terminal solver state, for
/// diagnostics and invariant checks. On converged runs the state holds the
/// certified fixed point (association, lambda, omega, mu); the result's
/// association additionally carries the exact-objective polish.
pub fn solve_with_state(link: &LinkTable, params: &SolverParams) -> Result<(AssociationResult, SolverState)> {
    params.validate()?;
    if link.num_bs() == 0 || link.num_users() == 0 {
        return Err(Error::DimensionMismatch("link table must cover >= 1 BS and >= 1 user".into()));
    }

    // Users no BS can serve at their threshold would pin mu at an unmeetable
    // constraint; drop their constraint and flag them in the result.
    let mut infeasible_users = Vec::new();
    for k in 0..link.num_users() {
        let best = (0..link.num_bs()).map(|n| link.sinr[[n, k]]).fold(f64::NEG_INFINITY, f64::max);
        if best < link.tau[k] {
            infeasible_users.push(k);
        }
    }

    let seeds = seed_portfolio(link);
    let num_stages = seeds.len();
    let mut remaining = params.max_outer;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut residual_max_final = f64::INFINITY;
    let mut state = init_state(link, params);
    let mut best = {
        let report = evaluate_objective(&state.assoc, link)?;
        (state.assoc.clone(), report.sum_ee)
    };
    let mut residual_history = Vec::new();
    let mut objective_history = Vec::new();
    let mut inner_iters_total = 0usize;
    let mut t1_total = 0usize;

    for (stage, seed_assoc) in seeds.into_iter().enumerate() {
        if remaining == 0 {
            break;
        }
        // the max-SINR trajectory gets the lion's share of the budget;
        // later seeds are cheap retries in other basins
        let budget = if stage == 0 && num_stages > 1 {
            remaining.min((params.max_outer * 3).div_ceil(5).max(1))
        } else {
            let stages_left = num_stages - stage;
            remaining.min(remaining.div_ceil(stages_left).max(1))
        };

        let mut stage_state = init_state(link, params);
        stage_state.lambda = lambda_at_fixed_point(&seed_assoc, link);
        stage_state.omega = omega_at_fixed_point(&seed_assoc, link);
        stage_state.assoc = seed_assoc;
        for &k in &infeasible_users {
            stage_state.constrained[k] = false;
            stage_state.mu[k] = 0.0;
        }
        if !infeasible_users.is_empty() {
            let sum: f64 = stage_state.mu.iter().sum();
            if sum > 0.0 {
                for v in &mut stage_state.mu {
                    *v /= sum;
                }
            }
        }

        let outcome = run_stage(
            &mut stage_state,
            link,
            params,
            budget,
            t1_total,
            &mut trace,
            &mut best,
            &mut residual_max_final,
        )?;
        remaining -= outcome.iters_used;
        t1_total += outcome.iters_used;
        inner_iters_total += stage_state.inner_iters_total;
        residual_history.append(&mut stage_state.residual_history);
        objective_history.append(&mut stage_state.objective_history);
        state = stage_state;
        if outcome.converged {
            converged = true;
            break;
        }
    }

    state.residual_history = residual_history.clone();
    state.objective_history = objective_history.clone();
    state.inner_iters_total = inner_iters_total;
    state.outer_iter = t1_total;

    // final exact-objective climb from the best association on record
    let polished = polish_association(&best.0, link, &infeasible_users);
    let polished_ee = evaluate_objective(&polished, link)?.sum_ee;
    if polished_ee > best.1 {
        best = (polished, polished_ee);
    }

    let final_assoc = best.0.clone();
    let report = evaluate_objective(&final_assoc, link)?;
    let per_user = per_user_metrics(&final_assoc, link);
    let result = AssociationResult {
        assoc: final_assoc,
        sum_ee: report.sum_ee,
        converged,
        outer_iters: t1_total,
        inner_iters_total,
        residual_max: residual_max_final,
        residual_history,
        objective_history,
        trace,
        per_user,
        infeasible_users,
    };
    Ok((result, state))
}
