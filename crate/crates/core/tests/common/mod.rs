//! Reference computations written straight from the problem definition,
//! sharing nothing with the library beyond the instance accessors.

#![allow(dead_code)]

use std::collections::BTreeMap;

use num_rational::Ratio;
use proptest::prelude::*;
use seminar_vns::Instance;

pub fn utility(inst: &Instance, topic_of: &[usize]) -> i64 {
    topic_of.iter().enumerate().map(|(i, &j)| i64::from(inst.weight(i, j))).sum()
}

pub fn counts(inst: &Instance, topic_of: &[usize]) -> Vec<u32> {
    let mut c = vec![0u32; inst.m()];
    for &j in topic_of {
        c[j] += 1;
    }
    c
}

pub fn feasible(inst: &Instance, topic_of: &[usize]) -> bool {
    topic_of.len() == inst.n()
        && topic_of.iter().all(|&j| j < inst.m())
        && counts(inst, topic_of)
            .iter()
            .enumerate()
            .all(|(j, &c)| inst.min_students()[j] <= c && c <= inst.max_students()[j])
}

/// max_k load_k - min_k load_k with load_k = students in group k over the
/// summed maxima of its topics.
pub fn imbalance(inst: &Instance, topic_of: &[usize]) -> Ratio<i64> {
    let c = counts(inst, topic_of);
    let loads: Vec<Ratio<i64>> = inst
        .groups()
        .iter()
        .map(|g| {
            let students: u32 = g.iter().map(|&j| c[j]).sum();
            let cap: u32 = g.iter().map(|&j| inst.max_students()[j]).sum();
            Ratio::new(i64::from(students), i64::from(cap))
        })
        .collect();
    let max = *loads.iter().max().unwrap();
    let min = *loads.iter().min().unwrap();
    max - min
}

pub struct Brute {
    pub optimum: i64,
    pub optimal: Vec<Vec<usize>>,
    /// Every feasible outcome with its number of assignments.
    pub outcomes: BTreeMap<(i64, Ratio<i64>), u64>,
    pub feasible: u64,
}

impl Brute {
    /// Nondominated (utility, imbalance) pairs, utility descending, with counts.
    pub fn frontier(&self) -> Vec<((i64, Ratio<i64>), u64)> {
        let mut out: Vec<((i64, Ratio<i64>), u64)> = Vec::new();
        for (&(u, b), &c) in &self.outcomes {
            let dominated = self
                .outcomes
                .keys()
                .any(|&(u2, b2)| u2 >= u && b2 <= b && (u2 > u || b2 < b));
            if !dominated {
                out.push(((u, b), c));
            }
        }
        out.sort_by(|a, b| b.0 .0.cmp(&a.0 .0));
        out
    }
}

/// Visits all m^n vectors.
pub fn brute_force(inst: &Instance) -> Brute {
    let (n, m) = (inst.n(), inst.m());
    let total = (m as u64).pow(n as u32);
    let mut res = Brute { optimum: i64::MIN, optimal: Vec::new(), outcomes: BTreeMap::new(), feasible: 0 };
    let mut topic_of = vec![0usize; n];
    for code in 0..total {
        let mut x = code;
        for t in topic_of.iter_mut() {
            *t = (x % m as u64) as usize;
            x /= m as u64;
        }
        if !feasible(inst, &topic_of) {
            continue;
        }
        res.feasible += 1;
        let u = utility(inst, &topic_of);
        *res.outcomes.entry((u, imbalance(inst, &topic_of))).or_default() += 1;
        if u > res.optimum {
            res.optimum = u;
            res.optimal.clear();
        }
        if u == res.optimum {
            res.optimal.push(topic_of.clone());
        }
    }
    res
}

/// Number of feasible assignments by summing multinomials over count vectors.
pub fn multinomial_count(inst: &Instance) -> u64 {
    fn go(inst: &Instance, j: usize, left: u32, acc: f64) -> f64 {
        if j == inst.m() {
            return if left == 0 { acc } else { 0.0 };
        }
        let mut s = 0.0;
        for c in inst.min_students()[j]..=inst.max_students()[j].min(left) {
            s += go(inst, j + 1, left - c, acc / factorial(c));
        }
        s
    }
    (go(inst, 0, inst.n() as u32, factorial(inst.n() as u32))).round() as u64
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// Small instances with arbitrary feasible capacities and groups.
pub fn small_instance() -> impl Strategy<Value = Instance> {
    (1usize..=7, 1usize..=3, 1u32..=6).prop_flat_map(|(n, m, w_max)| {
        let rows = proptest::collection::vec(proptest::collection::vec(0u32..=w_max, m), n);
        let bounds = proptest::collection::vec((0u32..=3, 0u32..=3), m);
        let group_of = proptest::collection::vec(0usize..m, m);
        (Just(n), Just(m), Just(w_max), rows, bounds, group_of)
    })
    .prop_filter_map("infeasible capacities", |(n, m, w_max, rows, bounds, group_of)| {
        let rows: Vec<Vec<u32>> = rows
            .into_iter()
            .map(|mut r| {
                // force the row sum to w_max
                let s: u32 = r.iter().sum();
                if s > w_max {
                    r.iter_mut().for_each(|x| *x = 0);
                    r[0] = w_max;
                } else {
                    r[m - 1] += w_max - s;
                }
                r
            })
            .collect();
        let min: Vec<u32> = bounds.iter().map(|&(a, _)| a.min(n as u32)).collect();
        let max: Vec<u32> = bounds.iter().zip(&min).map(|(&(_, d), &a)| a + d).collect();
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (j, &g) in group_of.iter().enumerate() {
            groups[g].push(j);
        }
        groups.retain(|g| !g.is_empty());
        Instance::builder(rows, w_max).capacities(min, max).groups(groups).build().ok()
    })
}
