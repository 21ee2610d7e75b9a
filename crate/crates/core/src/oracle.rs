//! Exhaustive ground truth for small instances.
//!
//! Students are placed one at a time, depth first. A branch is cut as soon
//! as the students still to be placed cannot fill the remaining minima, and
//! a topic is never filled beyond its maximum, so every leaf is a feasible
//! assignment and each one is visited exactly once.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Instance, Outcome};

/// Default bound on the unpruned search space `m^n`.
pub const DEFAULT_GUARD: f64 = 1e8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error(
        "search space m^n = {m}^{n} ~ {estimate:.3e} exceeds the enumeration guard {limit:.0e}; \
         use the neighborhood search instead"
    )]
    GuardExceeded { n: usize, m: usize, estimate: f64, limit: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationSummary {
    pub visited: u64,
}

/// One point of the exact frontier and how many assignments reach it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrontierPoint {
    #[serde(flatten)]
    pub outcome: Outcome,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleResult {
    pub optimum_utility: i64,
    /// Distinct assignments reaching the optimum utility.
    pub optimal_count: u64,
    /// Nondominated outcomes, highest utility first.
    pub frontier: Vec<FrontierPoint>,
    /// Feasible assignments visited.
    pub enumerated: u64,
}

/// Calls `visit(topic_of, utility, group_count)` for every feasible
/// assignment.
pub fn enumerate(
    inst: &Instance,
    guard: f64,
    mut visit: impl FnMut(&[usize], i64, &[u32]),
) -> Result<EnumerationSummary, OracleError> {
    let estimate = (inst.m() as f64).powf(inst.n() as f64);
    if estimate > guard {
        return Err(OracleError::GuardExceeded { n: inst.n(), m: inst.m(), estimate, limit: guard });
    }
    let mut walk = Walk {
        inst,
        topic_of: vec![0; inst.n()],
        count: vec![0; inst.m()],
        group_count: vec![0; inst.num_groups()],
        deficit: inst.min_students().iter().map(|&a| u64::from(a)).sum(),
        visited: 0,
    };
    walk.place(0, 0, &mut visit);
    Ok(EnumerationSummary { visited: walk.visited })
}

struct Walk<'a> {
    inst: &'a Instance,
    topic_of: Vec<usize>,
    count: Vec<u32>,
    group_count: Vec<u32>,
    /// Sum over topics of places still needed to reach the minimum.
    deficit: u64,
    visited: u64,
}

impl Walk<'_> {
    fn place(&mut self, student: usize, utility: i64, visit: &mut impl FnMut(&[usize], i64, &[u32])) {
        let n = self.inst.n();
        if student == n {
            self.visited += 1;
            visit(&self.topic_of, utility, &self.group_count);
            return;
        }
        let remaining_after = (n - student - 1) as u64;
        for j in 0..self.inst.m() {
            if self.count[j] >= self.inst.max_students()[j] {
                continue;
            }
            let fills = self.count[j] < self.inst.min_students()[j];
            let deficit = self.deficit - u64::from(fills);
            if deficit > remaining_after {
                continue;
            }
            let g = self.inst.group_of(j);
            self.topic_of[student] = j;
            self.count[j] += 1;
            self.group_count[g] += 1;
            let saved = std::mem::replace(&mut self.deficit, deficit);
            self.place(student + 1, utility + i64::from(self.inst.weight(student, j)), visit);
            self.deficit = saved;
            self.count[j] -= 1;
            self.group_count[g] -= 1;
        }
    }
}

/// Exact optimum, its multiplicity and the exact Pareto frontier.
pub fn solve(inst: &Instance, guard: f64) -> Result<OracleResult, OracleError> {
    let mut outcomes: BTreeMap<Outcome, u64> = BTreeMap::new();
    let summary = enumerate(inst, guard, |_, utility, group_count| {
        let o = Outcome::new(utility, inst.imbalance_of_group_counts(group_count));
        *outcomes.entry(o).or_default() += 1;
    })?;
    let optimum_utility = outcomes.keys().map(|o| o.utility).max().unwrap_or_default();
    let optimal_count = outcomes
        .iter()
        .filter(|(o, _)| o.utility == optimum_utility)
        .map(|(_, c)| c)
        .sum();
    // utilities downward, lowest imbalance first within a utility level
    let mut ranked: Vec<(Outcome, u64)> = outcomes.into_iter().collect();
    ranked.sort_by(|(a, _), (b, _)| b.utility.cmp(&a.utility).then(a.imbalance.cmp(&b.imbalance)));
    let mut frontier: Vec<FrontierPoint> = Vec::new();
    for (outcome, count) in ranked {
        if frontier.last().is_none_or(|p| outcome.imbalance < p.outcome.imbalance) {
            frontier.push(FrontierPoint { outcome, count });
        }
    }
    Ok(OracleResult { optimum_utility, optimal_count, frontier, enumerated: summary.visited })
}

/// Exact optimum; the frontier is filled as well.
pub fn exact_optimum(inst: &Instance) -> Result<OracleResult, OracleError> {
    solve(inst, DEFAULT_GUARD)
}

/// Exact Pareto frontier; the optimum is filled as well.
pub fn exact_frontier(inst: &Instance) -> Result<OracleResult, OracleError> {
    solve(inst, DEFAULT_GUARD)
}
