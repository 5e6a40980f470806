//! Objective evaluation, reference association policies and the exhaustive
//! oracle that certifies solver quality on small instances.

use crate::error::{Error, Result};
use crate::link::LinkTable;
use crate::solver::Association;

/// Per-user view of an association: serving BS, its SINR, the time-shared
/// rate and the resulting energy efficiency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerUserMetrics {
    pub bs: usize,
    pub sinr: f64,
    /// `r / L` of the serving BS, bits/s.
    pub effective_rate: f64,
    /// `effective_rate / alpha`, bits/J.
    pub ee: f64,
}

/// Value and feasibility of one association under the true time-sharing
/// objective.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveReport {
    /// Sum over users of per-user EE, bits/J.
    pub sum_ee: f64,
    pub feasible: bool,
    pub per_user_ee: Vec<f64>,
    /// Users whose serving SINR misses their threshold.
    pub violations: Vec<usize>,
}

pub fn per_user_metrics(assoc: &Association, link: &LinkTable) -> Vec<PerUserMetrics> {
    (0..link.num_users())
        .map(|k| {
            let n = assoc.bs_of(k);
            let load = assoc.load_of(n) as f64;
            let effective_rate = link.rate[[n, k]] / load;
            PerUserMetrics {
                bs: n,
                sinr: link.sinr[[n, k]],
                effective_rate,
                ee: effective_rate / link.alpha[n],
            }
        })
        .collect()
}

/// Evaluates the true objective of an association: each user's rate is
/// time-shared across its BS's load and divided by that BS's power draw.
pub fn evaluate_objective(assoc: &Association, link: &LinkTable) -> Result<ObjectiveReport> {
    if assoc.num_bs() != link.num_bs() || assoc.num_users() != link.num_users() {
        return Err(Error::DimensionMismatch(format!(
            "association is {}x{}, link table is {}x{}",
            assoc.num_bs(),
            assoc.num_users(),
            link.num_bs(),
            link.num_users()
        )));
    }
    let metrics = per_user_metrics(assoc, link);
    let per_user_ee: Vec<f64> = metrics.iter().map(|m| m.ee).collect();
    let violations: Vec<usize> = (0..link.num_users())
        .filter(|&k| link.sinr[[assoc.bs_of(k), k]] < link.tau[k])
        .collect();
    Ok(ObjectiveReport {
        sum_ee: per_user_ee.iter().sum(),
        feasible: violations.is_empty(),
        per_user_ee,
        violations,
    })
}

/// Every user picks the BS with the highest SINR; ties go to the lowest
/// index.
pub fn max_sinr_association(link: &LinkTable) -> Association {
    argmax_association(link, &link.sinr)
}

/// Every user picks the BS with the highest achievable rate; ties go to the
/// lowest index.
pub fn max_rate_association(link: &LinkTable) -> Association {
    argmax_association(link, &link.rate)
}

fn argmax_association(link: &LinkTable, score: &ndarray::Array2<f64>) -> Association {
    let (n_bs, n_users) = (link.num_bs(), link.num_users());
    let mut choice = Vec::with_capacity(n_users);
    for k in 0..n_users {
        let mut best = 0usize;
        let mut best_score = f64::NEG_INFINITY;
        for n in 0..n_bs {
            if score[[n, k]] > best_score {
                best_score = score[[n, k]];
                best = n;
            }
        }
        choice.push(best);
    }
    Association::from_choices(n_bs, choice).expect("argmax indices are always in range")
}

/// Cap on the `N^K` assignments the oracle will enumerate.
pub const BRUTE_FORCE_LIMIT: u128 = 1_000_000;

/// Exhaustive search over all `N^K` assignments, in lexicographic order with
/// user 0 as the most significant digit; the first maximizer wins ties. With
/// `respect_constraints` only SINR-feasible assignments compete, and an
/// instance with none at all is reported as such.
pub fn brute_force_optimum(
    link: &LinkTable,
    respect_constraints: bool,
) -> Result<(Association, ObjectiveReport)> {
    let n_bs = link.num_bs();
    let n_users = link.num_users();
    if n_bs == 0 || n_users == 0 {
        return Err(Error::DimensionMismatch("need at least one BS and one user".into()));
    }
    let mut count: u128 = 1;
    for _ in 0..n_users {
        count = count.saturating_mul(n_bs as u128);
        if count > BRUTE_FORCE_LIMIT {
            return Err(Error::InstanceTooLarge(format!(
                "{n_bs}^{n_users} assignments exceed the {BRUTE_FORCE_LIMIT} cap"
            )));
        }
    }

    let mut best: Option<(Association, ObjectiveReport)> = None;
    let mut choice = vec![0usize; n_users];
    loop {
        let assoc = Association::from_choices(n_bs, choice.clone())?;
        let report = evaluate_objective(&assoc, link)?;
        if !respect_constraints || report.feasible {
            let better = match &best {
                None => true,
                Some((_, incumbent)) => report.sum_ee > incumbent.sum_ee,
            };
            if better {
                best = Some((assoc, report));
            }
        }
        // odometer increment, user K-1 fastest
        let mut pos = n_users;
        loop {
            if pos == 0 {
                return best.ok_or(Error::AllInfeasible);
            }
            pos -= 1;
            choice[pos] += 1;
            if choice[pos] < n_bs {
                break;
            }
            choice[pos] = 0;
        }
    }
}
