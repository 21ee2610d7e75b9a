//! Problem data, feasibility, the two objectives and move evaluation.
//!
//! Students and topics are addressed by zero-based indices everywhere in the
//! API. Files and error messages use one-based numbers, matching how seminar
//! organizers count.
//!
//! An [`Assignment`] is the dense form of the 0/1 decision matrix: each
//! student holds exactly one topic, so only the per-topic bounds can be
//! violated. Besides `topic_of` it keeps the members of every topic, the
//! per-group head counts and the realized utility, all updated in constant
//! time per relocated student.

use std::borrow::Cow;
use std::fmt;
use std::hash::{Hash, Hasher};

use num_rational::Ratio;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

use crate::neighborhoods::Move;

/// Exact workload spread between staff members.
pub type Imbalance = Ratio<i64>;

/// Errors raised while building an instance or an assignment.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("instance needs at least one student and one topic (got n = {n}, m = {m})")]
    Empty { n: usize, m: usize },
    #[error("w_max must be positive")]
    ZeroWeightTotal,
    #[error("weights row of student {} has {len} entries, expected {expected}", .student + 1)]
    RaggedRow { student: usize, len: usize, expected: usize },
    #[error(
        "weights of student {} ({label}) sum to {sum}, but every row must sum to w_max = {w_max}",
        .student + 1
    )]
    RowSum { student: usize, label: String, sum: u64, w_max: u32 },
    #[error("capacity vectors must have one entry per topic (m = {m}, got {min_len} minima and {max_len} maxima)")]
    CapacityLength { m: usize, min_len: usize, max_len: usize },
    #[error("topic {}: minimum {min} exceeds maximum {max}", .topic + 1)]
    CapacityOrder { topic: usize, min: u32, max: u32 },
    #[error("no feasible assignment: need sum(a) = {min_total} <= n = {n} <= sum(b) = {max_total}")]
    InfeasibleTotals { min_total: u64, n: usize, max_total: u64 },
    #[error("staff group {} is empty", .group + 1)]
    EmptyGroup { group: usize },
    #[error("staff group {} refers to topic {}, but there are only {m} topics", .group + 1, .topic + 1)]
    GroupTopicOutOfRange { group: usize, topic: usize, m: usize },
    #[error("topic {} belongs to more than one staff group", .topic + 1)]
    TopicInSeveralGroups { topic: usize },
    #[error("topic {} is not covered by any staff group", .topic + 1)]
    TopicWithoutGroup { topic: usize },
    #[error("staff group {} offers no places (sum of b_j is 0)", .group + 1)]
    GroupWithoutCapacity { group: usize },
    #[error("{what} labels: expected {expected}, got {got}")]
    LabelCount { what: &'static str, expected: usize, got: usize },
    #[error("assignment lists {got} students, instance has {expected}")]
    AssignmentLength { expected: usize, got: usize },
    #[error("student {} is assigned to topic {}, but there are only {m} topics", .student + 1, .topic + 1)]
    AssignmentTopic { student: usize, topic: usize, m: usize },
    #[error("assignment is infeasible: topic {} holds {count} students, bounds are [{min}, {max}]", .topic + 1)]
    Infeasible { topic: usize, count: u32, min: u32, max: u32 },
}

/// Errors raised when a move does not fit the assignment it is applied to.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MoveError {
    #[error("student {} is out of range", .student + 1)]
    StudentOutOfRange { student: usize },
    #[error("topic {} is out of range", .topic + 1)]
    TopicOutOfRange { topic: usize },
    #[error(
        "student {} is expected on topic {} but holds topic {}",
        .student + 1, .expected + 1, .actual + 1
    )]
    Inconsistent { student: usize, expected: usize, actual: usize },
}

/// Optional display names. Empty vectors fall back to `s1`, `t1`, `B1`, ...
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Labels {
    pub students: Vec<String>,
    pub topics: Vec<String>,
    pub staff: Vec<String>,
}

/// `a_j = floor(n / m)` and `b_j = ceil(n / m)` for every topic.
pub fn default_capacities(n: usize, m: usize) -> (Vec<u32>, Vec<u32>) {
    if m == 0 {
        return (Vec::new(), Vec::new());
    }
    let lo = (n / m) as u32;
    let hi = n.div_ceil(m) as u32;
    (vec![lo; m], vec![hi; m])
}

/// Immutable problem data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    n: usize,
    m: usize,
    w_max: u32,
    weights: Vec<u32>,
    min_students: Vec<u32>,
    max_students: Vec<u32>,
    groups: Vec<Vec<usize>>,
    group_of: Vec<usize>,
    group_capacity: Vec<u32>,
    labels: Labels,
}

/// Collects instance data and validates it in [`InstanceBuilder::build`].
#[derive(Debug, Clone)]
pub struct InstanceBuilder {
    weights: Vec<Vec<u32>>,
    w_max: u32,
    capacities: Option<(Vec<u32>, Vec<u32>)>,
    groups: Option<Vec<Vec<usize>>>,
    labels: Labels,
    normalize: bool,
}

impl InstanceBuilder {
    /// Per-topic bounds. Without this, [`default_capacities`] apply.
    pub fn capacities(mut self, min: Vec<u32>, max: Vec<u32>) -> Self {
        self.capacities = Some((min, max));
        self
    }

    /// Partition of the topics into staff groups. Without this, one group
    /// holds every topic and the imbalance is always zero.
    pub fn groups(mut self, groups: Vec<Vec<usize>>) -> Self {
        self.groups = Some(groups);
        self
    }

    pub fn labels(mut self, labels: Labels) -> Self {
        self.labels = labels;
        self
    }

    /// Rescale rows that do not sum to `w_max` instead of rejecting them.
    pub fn normalize(mut self, normalize: bool) -> Self {
        self.normalize = normalize;
        self
    }

    pub fn build(self) -> Result<Instance, ModelError> {
        let n = self.weights.len();
        let m = self.weights.first().map_or(0, Vec::len);
        if n == 0 || m == 0 {
            return Err(ModelError::Empty { n, m });
        }
        if self.w_max == 0 {
            return Err(ModelError::ZeroWeightTotal);
        }
        check_labels("student", n, &self.labels.students)?;
        check_labels("topic", m, &self.labels.topics)?;

        let mut weights = Vec::with_capacity(n * m);
        for (i, row) in self.weights.iter().enumerate() {
            if row.len() != m {
                return Err(ModelError::RaggedRow { student: i, len: row.len(), expected: m });
            }
            let sum: u64 = row.iter().map(|&w| u64::from(w)).sum();
            if sum == u64::from(self.w_max) {
                weights.extend_from_slice(row);
            } else if self.normalize && sum > 0 {
                weights.extend(normalize_row(row, self.w_max));
            } else {
                let label = self
                    .labels
                    .students
                    .get(i)
                    .cloned()
                    .unwrap_or_else(|| format!("s{}", i + 1));
                return Err(ModelError::RowSum { student: i, label, sum, w_max: self.w_max });
            }
        }

        let (min_students, max_students) =
            self.capacities.unwrap_or_else(|| default_capacities(n, m));
        if min_students.len() != m || max_students.len() != m {
            return Err(ModelError::CapacityLength {
                m,
                min_len: min_students.len(),
                max_len: max_students.len(),
            });
        }
        for (j, (&lo, &hi)) in min_students.iter().zip(&max_students).enumerate() {
            if lo > hi {
                return Err(ModelError::CapacityOrder { topic: j, min: lo, max: hi });
            }
        }
        let min_total: u64 = min_students.iter().map(|&a| u64::from(a)).sum();
        let max_total: u64 = max_students.iter().map(|&b| u64::from(b)).sum();
        if min_total > n as u64 || (n as u64) > max_total {
            return Err(ModelError::InfeasibleTotals { min_total, n, max_total });
        }

        let groups = self.groups.unwrap_or_else(|| vec![(0..m).collect()]);
        let mut group_of = vec![usize::MAX; m];
        for (k, group) in groups.iter().enumerate() {
            if group.is_empty() {
                return Err(ModelError::EmptyGroup { group: k });
            }
            for &j in group {
                if j >= m {
                    return Err(ModelError::GroupTopicOutOfRange { group: k, topic: j, m });
                }
                if group_of[j] != usize::MAX {
                    return Err(ModelError::TopicInSeveralGroups { topic: j });
                }
                group_of[j] = k;
            }
        }
        if let Some(j) = group_of.iter().position(|&k| k == usize::MAX) {
            return Err(ModelError::TopicWithoutGroup { topic: j });
        }
        check_labels("staff", groups.len(), &self.labels.staff)?;
        let group_capacity: Vec<u32> = groups
            .iter()
            .map(|g| g.iter().map(|&j| max_students[j]).sum())
            .collect();
        if let Some(k) = group_capacity.iter().position(|&c| c == 0) {
            return Err(ModelError::GroupWithoutCapacity { group: k });
        }

        Ok(Instance {
            n,
            m,
            w_max: self.w_max,
            weights,
            min_students,
            max_students,
            groups,
            group_of,
            group_capacity,
            labels: self.labels,
        })
    }
}

fn check_labels(what: &'static str, expected: usize, labels: &[String]) -> Result<(), ModelError> {
    if labels.is_empty() || labels.len() == expected {
        Ok(())
    } else {
        Err(ModelError::LabelCount { what, expected, got: labels.len() })
    }
}

/// Largest-remainder rescaling of a row to the given total; ties go to the
/// lower topic index.
fn normalize_row(row: &[u32], total: u32) -> Vec<u32> {
    let sum: u64 = row.iter().map(|&w| u64::from(w)).sum();
    let total = u64::from(total);
    let mut out: Vec<u32> = Vec::with_capacity(row.len());
    let mut remainders: Vec<(u64, usize)> = Vec::with_capacity(row.len());
    let mut assigned = 0u64;
    for (j, &w) in row.iter().enumerate() {
        let scaled = u64::from(w) * total;
        out.push((scaled / sum) as u32);
        assigned += scaled / sum;
        remainders.push((scaled % sum, j));
    }
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, j) in remainders.iter().take((total - assigned) as usize) {
        out[j] += 1;
    }
    out
}

impl Instance {
    pub fn builder(weights: Vec<Vec<u32>>, w_max: u32) -> InstanceBuilder {
        InstanceBuilder {
            weights,
            w_max,
            capacities: None,
            groups: None,
            labels: Labels::default(),
            normalize: false,
        }
    }

    /// Number of students.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of topics.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn w_max(&self) -> u32 {
        self.w_max
    }

    #[inline]
    pub fn weight(&self, student: usize, topic: usize) -> u32 {
        self.weights[student * self.m + topic]
    }

    pub fn row(&self, student: usize) -> &[u32] {
        &self.weights[student * self.m..(student + 1) * self.m]
    }

    pub fn weight_rows(&self) -> Vec<Vec<u32>> {
        self.weights.chunks(self.m).map(<[u32]>::to_vec).collect()
    }

    /// `a_j` for every topic.
    pub fn min_students(&self) -> &[u32] {
        &self.min_students
    }

    /// `b_j` for every topic.
    pub fn max_students(&self) -> &[u32] {
        &self.max_students
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    #[inline]
    pub fn group_of(&self, topic: usize) -> usize {
        self.group_of[topic]
    }

    /// Total places offered by a staff group, `sum of b_j over the group`.
    pub fn group_capacity(&self, group: usize) -> u32 {
        self.group_capacity[group]
    }

    pub fn labels(&self) -> &Labels {
        &self.labels
    }

    pub fn student_label(&self, student: usize) -> Cow<'_, str> {
        label_or(&self.labels.students, student, 's')
    }

    pub fn topic_label(&self, topic: usize) -> Cow<'_, str> {
        label_or(&self.labels.topics, topic, 't')
    }

    pub fn staff_label(&self, group: usize) -> Cow<'_, str> {
        label_or(&self.labels.staff, group, 'B')
    }

    /// Whether the capacities equal [`default_capacities`] for this size.
    pub fn has_default_capacities(&self) -> bool {
        let (a, b) = default_capacities(self.n, self.m);
        a == self.min_students && b == self.max_students
    }

    /// Returns a copy with the capacity bounds replaced; the other data is
    /// revalidated.
    pub fn with_capacities(&self, min: Vec<u32>, max: Vec<u32>) -> Result<Instance, ModelError> {
        Instance::builder(self.weight_rows(), self.w_max)
            .capacities(min, max)
            .groups(self.groups.clone())
            .labels(self.labels.clone())
            .build()
    }

    /// Imbalance of a per-group head-count vector.
    pub fn imbalance_of_group_counts(&self, group_count: &[u32]) -> Imbalance {
        spread(group_count.len(), |k| (u64::from(group_count[k]), u64::from(self.group_capacity[k])))
    }
}

fn label_or(labels: &[String], idx: usize, prefix: char) -> Cow<'_, str> {
    match labels.get(idx) {
        Some(l) => Cow::Borrowed(l.as_str()),
        None => Cow::Owned(format!("{prefix}{}", idx + 1)),
    }
}

/// `max_k load_k - min_k load_k` with `load_k = students_k / places_k`.
/// Loads are compared by cross multiplication, one reduction at the end.
#[inline]
fn spread(groups: usize, load: impl Fn(usize) -> (u64, u64)) -> Imbalance {
    let (mut hi, mut lo) = (load(0), load(0));
    for k in 1..groups {
        let (s, c) = load(k);
        if s * hi.1 > hi.0 * c {
            hi = (s, c);
        }
        if s * lo.1 < lo.0 * c {
            lo = (s, c);
        }
    }
    let numer = (hi.0 * lo.1 - lo.0 * hi.1) as i64;
    if numer == 0 {
        return Imbalance::zero();
    }
    Imbalance::new(numer, (hi.1 * lo.1) as i64)
}

/// A complete assignment of students to topics.
///
/// Equality and hashing only consider `topic_of`: two assignments are the
/// same alternative iff every student holds the same topic.
#[derive(Debug, Clone)]
pub struct Assignment {
    topic_of: Vec<usize>,
    members: Vec<Vec<usize>>,
    slot: Vec<usize>,
    group_count: Vec<u32>,
    utility: i64,
}

impl PartialEq for Assignment {
    fn eq(&self, other: &Self) -> bool {
        self.topic_of == other.topic_of
    }
}

impl Eq for Assignment {}

impl Hash for Assignment {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.topic_of.hash(state);
    }
}

impl Assignment {
    /// Builds an assignment from zero-based topics. Only structural validity
    /// is checked; use [`is_feasible`] for the capacity bounds.
    pub fn new(inst: &Instance, topic_of: Vec<usize>) -> Result<Self, ModelError> {
        if topic_of.len() != inst.n {
            return Err(ModelError::AssignmentLength { expected: inst.n, got: topic_of.len() });
        }
        let mut members = vec![Vec::new(); inst.m];
        let mut slot = vec![0; inst.n];
        let mut group_count = vec![0; inst.num_groups()];
        let mut utility = 0i64;
        for (i, &j) in topic_of.iter().enumerate() {
            if j >= inst.m {
                return Err(ModelError::AssignmentTopic { student: i, topic: j, m: inst.m });
            }
            slot[i] = members[j].len();
            members[j].push(i);
            group_count[inst.group_of[j]] += 1;
            utility += i64::from(inst.weight(i, j));
        }
        Ok(Assignment { topic_of, members, slot, group_count, utility })
    }

    pub fn n(&self) -> usize {
        self.topic_of.len()
    }

    pub fn topic_of(&self) -> &[usize] {
        &self.topic_of
    }

    #[inline]
    pub fn topic(&self, student: usize) -> usize {
        self.topic_of[student]
    }

    /// Number of students holding a topic.
    #[inline]
    pub fn count(&self, topic: usize) -> u32 {
        self.members[topic].len() as u32
    }

    pub fn counts(&self) -> Vec<u32> {
        self.members.iter().map(|m| m.len() as u32).collect()
    }

    /// Students holding a topic, in no particular order.
    #[inline]
    pub fn members(&self, topic: usize) -> &[usize] {
        &self.members[topic]
    }

    pub fn group_counts(&self) -> &[u32] {
        &self.group_count
    }

    /// Cached total utility.
    #[inline]
    pub fn utility(&self) -> i64 {
        self.utility
    }

    /// Topics as one-based numbers, the form used in files.
    pub fn one_based(&self) -> Vec<usize> {
        self.topic_of.iter().map(|&j| j + 1).collect()
    }

    /// Moves one student without any checks.
    #[inline]
    pub(crate) fn relocate(&mut self, inst: &Instance, student: usize, to: usize) {
        let from = self.topic_of[student];
        let pos = self.slot[student];
        let src = &mut self.members[from];
        src.swap_remove(pos);
        if let Some(&moved) = src.get(pos) {
            self.slot[moved] = pos;
        }
        self.slot[student] = self.members[to].len();
        self.members[to].push(student);
        self.topic_of[student] = to;
        self.group_count[inst.group_of[from]] -= 1;
        self.group_count[inst.group_of[to]] += 1;
        self.utility += i64::from(inst.weight(student, to)) - i64::from(inst.weight(student, from));
    }
}

/// Both objective values of an assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Outcome {
    pub utility: i64,
    #[serde(with = "crate::ratio")]
    pub imbalance: Imbalance,
}

impl Outcome {
    pub fn new(utility: i64, imbalance: Imbalance) -> Self {
        Outcome { utility, imbalance }
    }

    /// Utility at least as high and imbalance at least as low, one strictly.
    pub fn dominates(&self, other: &Outcome) -> bool {
        self.utility >= other.utility
            && self.imbalance <= other.imbalance
            && (self.utility > other.utility || self.imbalance < other.imbalance)
    }

    pub fn imbalance_f64(&self) -> f64 {
        crate::ratio::to_f64(&self.imbalance)
    }

    pub fn imbalance_text(&self) -> String {
        crate::ratio::to_text(&self.imbalance)
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.utility, self.imbalance_text())
    }
}

/// Total utility, recomputed from scratch.
pub fn utility(inst: &Instance, asg: &Assignment) -> i64 {
    asg.topic_of
        .iter()
        .enumerate()
        .map(|(i, &j)| i64::from(inst.weight(i, j)))
        .sum()
}

/// Workload spread between the most and least loaded staff member,
/// recomputed from the topic counts.
pub fn imbalance(inst: &Instance, asg: &Assignment) -> Imbalance {
    let mut per_group = vec![0u32; inst.num_groups()];
    for (j, members) in asg.members.iter().enumerate() {
        per_group[inst.group_of[j]] += members.len() as u32;
    }
    inst.imbalance_of_group_counts(&per_group)
}

/// Every topic count lies within its bounds.
pub fn is_feasible(inst: &Instance, asg: &Assignment) -> bool {
    first_violation(inst, asg).is_none()
}

fn first_violation(inst: &Instance, asg: &Assignment) -> Option<ModelError> {
    (0..inst.m).find_map(|j| {
        let count = asg.count(j);
        let (min, max) = (inst.min_students[j], inst.max_students[j]);
        (count < min || count > max).then_some(ModelError::Infeasible { topic: j, count, min, max })
    })
}

/// Both objectives of a feasible assignment.
pub fn outcome(inst: &Instance, asg: &Assignment) -> Result<Outcome, ModelError> {
    if let Some(err) = first_violation(inst, asg) {
        return Err(err);
    }
    Ok(Outcome::new(utility(inst, asg), imbalance(inst, asg)))
}

/// Outcome from the cached utility and group counts, no feasibility check.
pub(crate) fn cached_outcome(inst: &Instance, asg: &Assignment) -> Outcome {
    Outcome::new(asg.utility, inst.imbalance_of_group_counts(&asg.group_count))
}

/// Replays the relocations on an overlay and checks each one starts where
/// the student currently is.
pub(crate) fn check_move(inst: &Instance, asg: &Assignment, mv: &Move) -> Result<(), MoveError> {
    let mut overlay: SmallVec<[(usize, usize); 4]> = SmallVec::new();
    for r in &mv.relocations {
        if r.student >= inst.n {
            return Err(MoveError::StudentOutOfRange { student: r.student });
        }
        for topic in [r.from, r.to] {
            if topic >= inst.m {
                return Err(MoveError::TopicOutOfRange { topic });
            }
        }
        let current = overlay
            .iter()
            .rev()
            .find(|(s, _)| *s == r.student)
            .map_or(asg.topic_of[r.student], |&(_, t)| t);
        if current != r.from {
            return Err(MoveError::Inconsistent { student: r.student, expected: r.from, actual: current });
        }
        overlay.push((r.student, r.to));
    }
    Ok(())
}

/// Utility change of a move; touches only the relocated students.
pub fn utility_delta(inst: &Instance, asg: &Assignment, mv: &Move) -> Result<i64, MoveError> {
    check_move(inst, asg, mv)?;
    Ok(utility_delta_unchecked(inst, mv))
}

#[inline]
pub(crate) fn utility_delta_unchecked(inst: &Instance, mv: &Move) -> i64 {
    mv.relocations
        .iter()
        .map(|r| i64::from(inst.weight(r.student, r.to)) - i64::from(inst.weight(r.student, r.from)))
        .sum()
}

/// Imbalance change of a move; costs O(K) in the number of staff groups.
pub fn imbalance_delta(inst: &Instance, asg: &Assignment, mv: &Move) -> Result<Imbalance, MoveError> {
    check_move(inst, asg, mv)?;
    let before = inst.imbalance_of_group_counts(&asg.group_count);
    Ok(imbalance_after_unchecked(inst, asg, mv) - before)
}

/// Imbalance of the assignment the move leads to.
#[inline]
pub(crate) fn imbalance_after_unchecked(inst: &Instance, asg: &Assignment, mv: &Move) -> Imbalance {
    let mut shift: SmallVec<[(usize, i64); 6]> = SmallVec::new();
    for r in &mv.relocations {
        let (gf, gt) = (inst.group_of[r.from], inst.group_of[r.to]);
        if gf == gt {
            continue;
        }
        for (g, d) in [(gf, -1), (gt, 1)] {
            match shift.iter_mut().find(|(k, _)| *k == g) {
                Some(e) => e.1 += d,
                None => shift.push((g, d)),
            }
        }
    }
    if shift.iter().all(|&(_, d)| d == 0) {
        return inst.imbalance_of_group_counts(&asg.group_count);
    }
    spread(inst.num_groups(), |k| {
        let d = shift.iter().find(|(g, _)| *g == k).map_or(0, |&(_, d)| d);
        ((i64::from(asg.group_count[k]) + d) as u64, u64::from(inst.group_capacity[k]))
    })
}
