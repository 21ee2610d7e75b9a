//! Reduced variable neighborhood search with a solution archive.
//!
//! The loop keeps a set of solutions rather than a single incumbent. Each
//! evaluation picks a stored solution uniformly at random, picks one of the
//! allowed neighborhoods uniformly at random, draws one neighbor and offers
//! it to the archive. There is no descent phase and no restart.
//!
//! Two archives are available:
//!
//! - [`EqualQualityArchive`] holds every distinct solution found with the
//!   best utility so far. A strictly better candidate resets it, an equal one
//!   joins it, a worse one is dropped.
//! - [`ParetoArchive`] holds the nondominated outcome points for utility
//!   (maximized) and imbalance (minimized), each with its distinct solutions.
//!
//! Rejected candidates are never materialized: their objective values come
//! from the move deltas and duplicates are detected through an incremental
//! Zobrist fingerprint, so the work for most evaluations does not depend on
//! the number of students.

use std::collections::{BTreeMap, HashMap};
use std::ops::ControlFlow;
use std::time::Instant;

use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

use crate::model::{
    cached_outcome, imbalance_after_unchecked, is_feasible, outcome, utility_delta_unchecked,
    Assignment, Imbalance, Instance, ModelError, Outcome,
};
use crate::neighborhoods::{apply_unchecked, propose, Exclusion, Move, NeighborhoodKind};

/// Evaluations between two progress callbacks.
pub const PROGRESS_INTERVAL: u64 = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    SingleObjective,
    BiObjective,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub mode: Mode,
    /// Requested neighborhoods; `None` means every applicable one.
    pub neighborhoods: Option<Vec<NeighborhoodKind>>,
    pub max_evaluations: u64,
    pub seed: u64,
    /// Most distinct solutions kept per outcome point.
    pub archive_cap: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            mode: Mode::SingleObjective,
            neighborhoods: None,
            max_evaluations: 100_000,
            seed: 0,
            archive_cap: 1_000,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        if self.max_evaluations == 0 {
            return Err(SearchError::InvalidConfig("max_evaluations must be at least 1".into()));
        }
        if self.archive_cap == 0 {
            return Err(SearchError::InvalidConfig("archive_cap must be at least 1".into()));
        }
        if matches!(&self.neighborhoods, Some(k) if k.is_empty()) {
            return Err(SearchError::InvalidConfig("neighborhood set is empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
    #[error("no applicable neighborhood: {}", describe(.0))]
    NoApplicableNeighborhood(Vec<Exclusion>),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("search cancelled after {evaluations} evaluations")]
    Cancelled { evaluations: u64 },
}

fn describe(exclusions: &[Exclusion]) -> String {
    exclusions
        .iter()
        .map(|e| format!("{} excluded ({})", e.kind, e.reason))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Random initial feasible assignment: students are shuffled, dealt to the
/// topics until every minimum is met, and the rest go to uniformly chosen
/// topics that still have room.
pub fn initial_solution<R: Rng + ?Sized>(inst: &Instance, rng: &mut R) -> Result<Assignment, ModelError> {
    let (a, b) = (inst.min_students(), inst.max_students());
    let min_total: u64 = a.iter().map(|&x| u64::from(x)).sum();
    let max_total: u64 = b.iter().map(|&x| u64::from(x)).sum();
    let n = inst.n();
    if min_total > n as u64 || n as u64 > max_total {
        return Err(ModelError::InfeasibleTotals { min_total, n, max_total });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut topic_of = vec![0; n];
    let mut count = vec![0u32; inst.m()];
    let mut next = order.into_iter();
    for (j, &need) in a.iter().enumerate() {
        for i in next.by_ref().take(need as usize) {
            topic_of[i] = j;
            count[j] += 1;
        }
    }
    let mut open: Vec<usize> = (0..inst.m()).filter(|&j| count[j] < b[j]).collect();
    for i in next {
        let pos = rng.random_range(0..open.len());
        let j = open[pos];
        topic_of[i] = j;
        count[j] += 1;
        if count[j] == b[j] {
            open.remove(pos);
        }
    }
    Assignment::new(inst, topic_of)
}

/// Zobrist keys, one random word per (student, topic) pair.
#[derive(Debug, Clone)]
struct Fingerprint {
    m: usize,
    keys: Vec<u64>,
}

impl Fingerprint {
    fn new(inst: &Instance) -> Self {
        let mut state = 0x5eed_0f_a55_1e_u64;
        let keys = (0..inst.n() * inst.m()).map(|_| splitmix64(&mut state)).collect();
        Fingerprint { m: inst.m(), keys }
    }

    fn of(&self, asg: &Assignment) -> u64 {
        asg.topic_of()
            .iter()
            .enumerate()
            .fold(0, |h, (i, &j)| h ^ self.keys[i * self.m + j])
    }

    #[inline]
    fn after(&self, hash: u64, mv: &Move) -> u64 {
        mv.relocations.iter().fold(hash, |h, r| {
            h ^ self.keys[r.student * self.m + r.from] ^ self.keys[r.student * self.m + r.to]
        })
    }
}

pub(crate) fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
struct Stored {
    asg: Assignment,
    hash: u64,
    outcome: Outcome,
}

/// Distinct solutions with a cap; lookup by fingerprint, then exact compare.
#[derive(Debug, Clone, Default)]
struct SolutionSet {
    entries: Vec<Stored>,
    by_hash: HashMap<u64, SmallVec<[u32; 1]>>,
    cap_hit: bool,
}

impl SolutionSet {
    fn contains(&self, hash: u64, same: impl Fn(&Assignment) -> bool) -> bool {
        self.by_hash
            .get(&hash)
            .is_some_and(|idx| idx.iter().any(|&q| same(&self.entries[q as usize].asg)))
    }

    fn push(&mut self, stored: Stored) {
        self.by_hash.entry(stored.hash).or_default().push(self.entries.len() as u32);
        self.entries.push(stored);
    }

    fn len(&self) -> usize {
        self.entries.len()
    }
}

/// Whether `stored` equals `base` after applying `mv`.
fn equals_after(stored: &Assignment, base: &Assignment, mv: &Move) -> bool {
    let finals = mv.final_topics();
    if finals.iter().any(|&(s, t)| stored.topic(s) != t) {
        return false;
    }
    stored
        .topic_of()
        .iter()
        .zip(base.topic_of())
        .enumerate()
        .all(|(s, (x, y))| x == y || finals.iter().any(|&(f, _)| f == s))
}

/// What an archive did with an offered candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Update {
    /// Strictly better utility; the archive was reset to the candidate.
    Improved,
    /// Equal quality, new distinct solution stored.
    Inserted,
    /// New nondominated outcome point (bi-objective).
    NewPoint,
    /// Already stored.
    Duplicate,
    /// Equal quality and distinct, but the per-point cap is reached.
    CapReached,
    /// Worse, or dominated.
    Rejected,
}

impl Update {
    pub fn changed(self) -> bool {
        matches!(self, Update::Improved | Update::Inserted | Update::NewPoint)
    }
}

/// Every distinct solution with the best utility seen so far.
#[derive(Debug, Clone)]
pub struct EqualQualityArchive {
    best_utility: Option<i64>,
    set: SolutionSet,
    cap: usize,
    fingerprint: Fingerprint,
}

impl EqualQualityArchive {
    pub fn new(inst: &Instance, cap: usize) -> Self {
        EqualQualityArchive {
            best_utility: None,
            set: SolutionSet::default(),
            cap: cap.max(1),
            fingerprint: Fingerprint::new(inst),
        }
    }

    pub fn best_utility(&self) -> Option<i64> {
        self.best_utility
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.len() == 0
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    /// A distinct equal-quality solution was turned away by the cap.
    pub fn cap_hit(&self) -> bool {
        self.set.cap_hit
    }

    pub fn solutions(&self) -> impl Iterator<Item = &Assignment> {
        self.set.entries.iter().map(|s| &s.asg)
    }

    /// Offers a feasible candidate.
    pub fn update(&mut self, inst: &Instance, candidate: Assignment) -> Update {
        debug_assert!(is_feasible(inst, &candidate));
        let hash = self.fingerprint.of(&candidate);
        let utility = candidate.utility();
        match self.best_utility {
            Some(best) if utility < best => Update::Rejected,
            Some(best) if utility == best => {
                if self.set.contains(hash, |s| *s == candidate) {
                    Update::Duplicate
                } else {
                    self.insert(inst, candidate, hash)
                }
            }
            _ => self.reset(inst, candidate, hash),
        }
    }

    fn reset(&mut self, inst: &Instance, asg: Assignment, hash: u64) -> Update {
        self.best_utility = Some(asg.utility());
        self.set = SolutionSet::default();
        self.set.push(Stored { outcome: cached_outcome(inst, &asg), asg, hash });
        Update::Improved
    }

    fn insert(&mut self, inst: &Instance, asg: Assignment, hash: u64) -> Update {
        if self.set.len() >= self.cap {
            self.set.cap_hit = true;
            return Update::CapReached;
        }
        self.set.push(Stored { outcome: cached_outcome(inst, &asg), asg, hash });
        Update::Inserted
    }

    fn offer_move(&mut self, inst: &Instance, base: usize, mv: &Move) -> Update {
        let base_entry = &self.set.entries[base];
        let utility = base_entry.asg.utility() + utility_delta_unchecked(inst, mv);
        let best = self.best_utility.expect("search archive is never empty");
        if utility < best {
            return Update::Rejected;
        }
        let hash = self.fingerprint.after(base_entry.hash, mv);
        if utility == best {
            let base_asg = &base_entry.asg;
            if self.set.contains(hash, |s| equals_after(s, base_asg, mv)) {
                return Update::Duplicate;
            }
            if self.set.len() >= self.cap {
                self.set.cap_hit = true;
                return Update::CapReached;
            }
        }
        let mut next = base_entry.asg.clone();
        apply_unchecked(inst, &mut next, mv);
        if utility > best {
            self.reset(inst, next, hash)
        } else {
            self.insert(inst, next, hash)
        }
    }
}

/// One nondominated outcome with the solutions that reach it.
#[derive(Debug, Clone)]
struct ParetoPoint {
    outcome: Outcome,
    set: SolutionSet,
}

/// Nondominated outcome points for (max utility, min imbalance).
#[derive(Debug, Clone)]
pub struct ParetoArchive {
    /// Sorted by utility, highest first; imbalance then decreases too.
    points: Vec<ParetoPoint>,
    cap: usize,
    total: usize,
    fingerprint: Fingerprint,
}

impl ParetoArchive {
    pub fn new(inst: &Instance, cap: usize) -> Self {
        ParetoArchive {
            points: Vec::new(),
            cap: cap.max(1),
            total: 0,
            fingerprint: Fingerprint::new(inst),
        }
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    /// Outcome points, highest utility first.
    pub fn points(&self) -> Vec<Outcome> {
        self.points.iter().map(|p| p.outcome).collect()
    }

    /// Solutions stored for one outcome point.
    pub fn solutions_at<'a>(&'a self, outcome: &'a Outcome) -> impl Iterator<Item = &'a Assignment> + 'a {
        self.points
            .iter()
            .filter(move |p| p.outcome == *outcome)
            .flat_map(|p| p.set.entries.iter().map(|s| &s.asg))
    }

    /// Area dominated by the front inside `[0, u] x [i, 1]`, i.e. relative
    /// to the reference point utility 0, imbalance 1.
    pub fn hypervolume(&self) -> Imbalance {
        let mut area = Imbalance::zero();
        let mut prev = 0i64;
        for p in self.points.iter().rev() {
            let width = (p.outcome.utility - prev).max(0);
            area += Imbalance::from_integer(width) * (Imbalance::one() - p.outcome.imbalance);
            prev = prev.max(p.outcome.utility);
        }
        area
    }

    /// Offers a feasible candidate.
    pub fn update(&mut self, inst: &Instance, candidate: Assignment) -> Update {
        debug_assert!(is_feasible(inst, &candidate));
        let out = cached_outcome(inst, &candidate);
        let hash = self.fingerprint.of(&candidate);
        match self.locate(&out) {
            Err(()) => Update::Rejected,
            Ok(Some(p)) => {
                let set = &self.points[p].set;
                if set.contains(hash, |s| *s == candidate) {
                    Update::Duplicate
                } else {
                    self.join(p, Stored { asg: candidate, hash, outcome: out })
                }
            }
            Ok(None) => self.add_point(Stored { asg: candidate, hash, outcome: out }),
        }
    }

    /// `Err` if dominated, `Ok(Some(p))` for an existing equal point,
    /// `Ok(None)` for a new nondominated outcome.
    fn locate(&self, out: &Outcome) -> Result<Option<usize>, ()> {
        let mut equal = None;
        for (p, point) in self.points.iter().enumerate() {
            if point.outcome == *out {
                equal = Some(p);
            } else if point.outcome.dominates(out) {
                return Err(());
            }
        }
        Ok(equal)
    }

    fn join(&mut self, p: usize, stored: Stored) -> Update {
        let set = &mut self.points[p].set;
        if set.len() >= self.cap {
            set.cap_hit = true;
            return Update::CapReached;
        }
        set.push(stored);
        self.total += 1;
        Update::Inserted
    }

    fn add_point(&mut self, stored: Stored) -> Update {
        let out = stored.outcome;
        self.points.retain(|p| !out.dominates(&p.outcome));
        let mut set = SolutionSet::default();
        set.push(stored);
        let pos = self.points.partition_point(|p| p.outcome.utility > out.utility);
        self.points.insert(pos, ParetoPoint { outcome: out, set });
        self.total = self.points.iter().map(|p| p.set.len()).sum();
        Update::NewPoint
    }

    fn locate_entry(&self, mut idx: usize) -> (usize, usize) {
        for (p, point) in self.points.iter().enumerate() {
            if idx < point.set.len() {
                return (p, idx);
            }
            idx -= point.set.len();
        }
        unreachable!("entry index beyond archive size")
    }

    fn offer_move(&mut self, inst: &Instance, base: usize, mv: &Move) -> Update {
        let (bp, bi) = self.locate_entry(base);
        let base_entry = &self.points[bp].set.entries[bi];
        let out = Outcome::new(
            base_entry.asg.utility() + utility_delta_unchecked(inst, mv),
            imbalance_after_unchecked(inst, &base_entry.asg, mv),
        );
        let hash = self.fingerprint.after(base_entry.hash, mv);
        let target = match self.locate(&out) {
            Err(()) => return Update::Rejected,
            Ok(t) => t,
        };
        if let Some(p) = target {
            let set = &self.points[p].set;
            if set.contains(hash, |s| equals_after(s, &base_entry.asg, mv)) {
                return Update::Duplicate;
            }
            if set.len() >= self.cap {
                self.points[p].set.cap_hit = true;
                return Update::CapReached;
            }
        }
        let mut next = base_entry.asg.clone();
        apply_unchecked(inst, &mut next, mv);
        let stored = Stored { asg: next, hash, outcome: out };
        match target {
            Some(p) => self.join(p, stored),
            None => self.add_point(stored),
        }
    }
}

/// Either archive, as produced by a search run.
#[derive(Debug, Clone)]
pub enum Archive {
    EqualQuality(EqualQualityArchive),
    Pareto(ParetoArchive),
}

/// Number of stored alternatives for one outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlternativeCount {
    #[serde(flatten)]
    pub outcome: Outcome,
    pub count: usize,
    /// Some distinct alternative with this outcome was not stored.
    pub cap_hit: bool,
}

impl Archive {
    pub fn new(inst: &Instance, mode: Mode, cap: usize) -> Self {
        match mode {
            Mode::SingleObjective => Archive::EqualQuality(EqualQualityArchive::new(inst, cap)),
            Mode::BiObjective => Archive::Pareto(ParetoArchive::new(inst, cap)),
        }
    }

    pub fn mode(&self) -> Mode {
        match self {
            Archive::EqualQuality(_) => Mode::SingleObjective,
            Archive::Pareto(_) => Mode::BiObjective,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Archive::EqualQuality(a) => a.len(),
            Archive::Pareto(a) => a.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cap(&self) -> usize {
        match self {
            Archive::EqualQuality(a) => a.cap,
            Archive::Pareto(a) => a.cap,
        }
    }

    pub fn update(&mut self, inst: &Instance, candidate: Assignment) -> Update {
        match self {
            Archive::EqualQuality(a) => a.update(inst, candidate),
            Archive::Pareto(a) => a.update(inst, candidate),
        }
    }

    fn entries(&self) -> Box<dyn Iterator<Item = &Stored> + '_> {
        match self {
            Archive::EqualQuality(a) => Box::new(a.set.entries.iter()),
            Archive::Pareto(a) => Box::new(a.points.iter().flat_map(|p| p.set.entries.iter())),
        }
    }

    fn entry(&self, idx: usize) -> &Stored {
        match self {
            Archive::EqualQuality(a) => &a.set.entries[idx],
            Archive::Pareto(a) => {
                let (p, i) = a.locate_entry(idx);
                &a.points[p].set.entries[i]
            }
        }
    }

    /// Stored alternatives with their outcomes. Single-objective archives list
    /// solutions in insertion order; Pareto archives go point by point, highest
    /// utility first.
    pub fn alternatives(&self) -> impl Iterator<Item = (Outcome, &Assignment)> {
        self.entries().map(|s| (s.outcome, &s.asg))
    }

    pub fn get(&self, idx: usize) -> Option<(Outcome, &Assignment)> {
        (idx < self.len()).then(|| {
            let s = self.entry(idx);
            (s.outcome, &s.asg)
        })
    }

    /// Uniformly chosen stored solution.
    pub fn select<R: Rng + ?Sized>(&self, rng: &mut R) -> &Assignment {
        &self.entry(rng.random_range(0..self.len())).asg
    }

    /// Highest utility among stored solutions.
    pub fn best_utility(&self) -> Option<i64> {
        match self {
            Archive::EqualQuality(a) => a.best_utility,
            Archive::Pareto(a) => a.points.first().map(|p| p.outcome.utility),
        }
    }

    /// Alternatives per outcome. Pareto archives report each point;
    /// single-objective archives group the best solutions by imbalance.
    pub fn count_alternatives(&self) -> Vec<AlternativeCount> {
        match self {
            Archive::Pareto(a) => a
                .points
                .iter()
                .map(|p| AlternativeCount { outcome: p.outcome, count: p.set.len(), cap_hit: p.set.cap_hit })
                .collect(),
            Archive::EqualQuality(a) => {
                let mut groups: BTreeMap<Outcome, usize> = BTreeMap::new();
                for s in &a.set.entries {
                    *groups.entry(s.outcome).or_default() += 1;
                }
                groups
                    .into_iter()
                    .map(|(outcome, count)| AlternativeCount { outcome, count, cap_hit: a.set.cap_hit })
                    .collect()
            }
        }
    }

    /// Outcome points of a Pareto archive, or the distinct outcomes of an
    /// equal-quality archive.
    pub fn outcomes(&self) -> Vec<Outcome> {
        self.count_alternatives().into_iter().map(|c| c.outcome).collect()
    }

    pub fn cap_hit(&self) -> bool {
        match self {
            Archive::EqualQuality(a) => a.set.cap_hit,
            Archive::Pareto(a) => a.points.iter().any(|p| p.set.cap_hit),
        }
    }

    /// Verifies every archive invariant against a full recomputation.
    pub fn check(&self, inst: &Instance) -> Result<(), String> {
        let mut seen = std::collections::HashSet::new();
        for s in self.entries() {
            let full = outcome(inst, &s.asg).map_err(|e| e.to_string())?;
            if full != s.outcome || full.utility != s.asg.utility() {
                return Err(format!("cached outcome {} differs from recomputed {}", s.outcome, full));
            }
            if !seen.insert(s.asg.topic_of().to_vec()) {
                return Err(format!("duplicate solution {:?}", s.asg.one_based()));
            }
        }
        match self {
            Archive::EqualQuality(a) => {
                if a.len() > a.cap {
                    return Err("archive exceeds its cap".into());
                }
                if let Some(bad) = a.set.entries.iter().find(|s| Some(s.outcome.utility) != a.best_utility) {
                    return Err(format!("stored utility {} differs from best", bad.outcome.utility));
                }
            }
            Archive::Pareto(a) => {
                for (p, x) in a.points.iter().enumerate() {
                    if x.set.len() > a.cap || x.set.len() == 0 {
                        return Err(format!("point {} holds {} solutions", x.outcome, x.set.len()));
                    }
                    if x.set.entries.iter().any(|s| s.outcome != x.outcome) {
                        return Err(format!("point {} stores a solution with another outcome", x.outcome));
                    }
                    for y in &a.points[p + 1..] {
                        if x.outcome.dominates(&y.outcome) || y.outcome.dominates(&x.outcome) || x.outcome == y.outcome {
                            return Err(format!("points {} and {} are not mutually nondominated", x.outcome, y.outcome));
                        }
                    }
                }
                if a.total != a.points.iter().map(|p| p.set.len()).sum::<usize>() {
                    return Err("solution total out of sync".into());
                }
            }
        }
        Ok(())
    }

    fn offer_move(&mut self, inst: &Instance, base: usize, mv: &Move) -> Update {
        match self {
            Archive::EqualQuality(a) => a.offer_move(inst, base, mv),
            Archive::Pareto(a) => a.offer_move(inst, base, mv),
        }
    }

    /// Rebuilds an archive from stored solutions, e.g. after loading a file.
    /// Every solution is revalidated and offered in the given order.
    pub fn restore(
        inst: &Instance,
        mode: Mode,
        cap: usize,
        solutions: impl IntoIterator<Item = Vec<usize>>,
    ) -> Result<Archive, ModelError> {
        let mut archive = Archive::new(inst, mode, cap);
        for topic_of in solutions {
            let asg = Assignment::new(inst, topic_of)?;
            outcome(inst, &asg)?;
            archive.update(inst, asg);
        }
        Ok(archive)
    }

    pub(crate) fn set_cap_flags(&mut self, flags: &[(Outcome, bool)]) {
        match self {
            Archive::EqualQuality(a) => a.set.cap_hit |= flags.iter().any(|f| f.1),
            Archive::Pareto(a) => {
                for p in &mut a.points {
                    p.set.cap_hit |= flags.iter().any(|(o, hit)| *hit && *o == p.outcome);
                }
            }
        }
    }
}

/// Proposal statistics for one neighborhood.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindStats {
    pub kind: NeighborhoodKind,
    pub proposals: u64,
    pub no_move: u64,
    pub accepted: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub n: usize,
    pub m: usize,
    pub w_max: u32,
    pub groups: usize,
}

/// Record of one seeded search run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format_version: u32,
    pub instance: InstanceSummary,
    pub seed: u64,
    pub mode: Mode,
    pub max_evaluations: u64,
    pub archive_cap: usize,
    pub neighborhoods: Vec<NeighborhoodKind>,
    pub exclusions: Vec<Exclusion>,
    /// Proposals consumed, including those that found no move.
    pub evaluations: u64,
    pub no_move: u64,
    /// Candidates that changed the archive.
    pub accepted: u64,
    /// Candidates that raised the best utility or opened a new point.
    pub improvements: u64,
    pub per_kind: Vec<KindStats>,
    pub initial: Outcome,
    pub best_utility: i64,
    pub archive_size: usize,
    pub cap_hit: bool,
    pub alternatives: Vec<AlternativeCount>,
    pub wall_time_ms: Option<f64>,
    pub timestamp_unix: Option<u64>,
}

/// Result of one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Offered(NeighborhoodKind, Update),
    NoMove(NeighborhoodKind),
}

/// A running search that can be advanced one evaluation at a time.
pub struct Vns<'a> {
    inst: &'a Instance,
    config: SearchConfig,
    kinds: Vec<NeighborhoodKind>,
    exclusions: Vec<Exclusion>,
    rng: ChaCha8Rng,
    archive: Archive,
    initial: Outcome,
    evaluations: u64,
    no_move: u64,
    accepted: u64,
    improvements: u64,
    per_kind: Vec<KindStats>,
    started: Instant,
}

impl<'a> Vns<'a> {
    pub fn new(inst: &'a Instance, config: &SearchConfig) -> Result<Self, SearchError> {
        config.validate()?;
        let requested = config
            .neighborhoods
            .clone()
            .unwrap_or_else(|| NeighborhoodKind::ALL.to_vec());
        let mut kinds = Vec::new();
        let mut exclusions = Vec::new();
        for kind in NeighborhoodKind::ALL.into_iter().filter(|k| requested.contains(k)) {
            match crate::neighborhoods::exclusion_reason(inst, kind) {
                Some(reason) => exclusions.push(Exclusion { kind, reason }),
                None => kinds.push(kind),
            }
        }
        if kinds.is_empty() {
            return Err(SearchError::NoApplicableNeighborhood(exclusions));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let start = initial_solution(inst, &mut rng)?;
        let initial = cached_outcome(inst, &start);
        let mut archive = Archive::new(inst, config.mode, config.archive_cap);
        archive.update(inst, start);
        let per_kind = kinds
            .iter()
            .map(|&kind| KindStats { kind, proposals: 0, no_move: 0, accepted: 0 })
            .collect();
        Ok(Vns {
            inst,
            config: config.clone(),
            kinds,
            exclusions,
            rng,
            archive,
            initial,
            evaluations: 0,
            no_move: 0,
            accepted: 0,
            improvements: 0,
            per_kind,
            started: Instant::now(),
        })
    }

    pub fn neighborhoods(&self) -> &[NeighborhoodKind] {
        &self.kinds
    }

    pub fn archive(&self) -> &Archive {
        &self.archive
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn is_done(&self) -> bool {
        self.evaluations >= self.config.max_evaluations
    }

    /// One evaluation: pick a stored solution and a neighborhood, draw a
    /// neighbor and offer it to the archive.
    pub fn step(&mut self) -> Step {
        self.evaluations += 1;
        let base = self.rng.random_range(0..self.archive.len());
        let q = self.rng.random_range(0..self.kinds.len());
        let kind = self.kinds[q];
        self.per_kind[q].proposals += 1;
        let mv = match propose(kind, self.inst, &self.archive.entry(base).asg, &mut self.rng) {
            Ok(mv) => mv,
            Err(_) => {
                self.no_move += 1;
                self.per_kind[q].no_move += 1;
                return Step::NoMove(kind);
            }
        };
        let update = self.archive.offer_move(self.inst, base, &mv);
        if update.changed() {
            self.accepted += 1;
            self.per_kind[q].accepted += 1;
        }
        if matches!(update, Update::Improved | Update::NewPoint) {
            self.improvements += 1;
        }
        Step::Offered(kind, update)
    }

    pub fn finish(self) -> (Archive, RunReport) {
        let wall = self.started.elapsed().as_secs_f64() * 1e3;
        let report = RunReport {
            format_version: crate::formats::FORMAT_VERSION,
            instance: InstanceSummary {
                n: self.inst.n(),
                m: self.inst.m(),
                w_max: self.inst.w_max(),
                groups: self.inst.num_groups(),
            },
            seed: self.config.seed,
            mode: self.config.mode,
            max_evaluations: self.config.max_evaluations,
            archive_cap: self.config.archive_cap,
            neighborhoods: self.kinds,
            exclusions: self.exclusions,
            evaluations: self.evaluations,
            no_move: self.no_move,
            accepted: self.accepted,
            improvements: self.improvements,
            per_kind: self.per_kind,
            initial: self.initial,
            best_utility: self.archive.best_utility().unwrap_or_default(),
            archive_size: self.archive.len(),
            cap_hit: self.archive.cap_hit(),
            alternatives: self.archive.count_alternatives(),
            wall_time_ms: Some(wall),
            timestamp_unix: None,
        };
        (self.archive, report)
    }
}

/// Runs the full evaluation budget.
pub fn run_vns(inst: &Instance, config: &SearchConfig) -> Result<(Archive, RunReport), SearchError> {
    run_vns_with_progress(inst, config, |_| ControlFlow::Continue(()))
}

/// Like [`run_vns`], calling `progress` with the evaluations done every
/// [`PROGRESS_INTERVAL`] evaluations and once at the end. Breaking cancels
/// the run.
pub fn run_vns_with_progress(
    inst: &Instance,
    config: &SearchConfig,
    mut progress: impl FnMut(u64) -> ControlFlow<()>,
) -> Result<(Archive, RunReport), SearchError> {
    let mut vns = Vns::new(inst, config)?;
    while !vns.is_done() {
        vns.step();
        if vns.evaluations % PROGRESS_INTERVAL == 0 && progress(vns.evaluations).is_break() {
            return Err(SearchError::Cancelled { evaluations: vns.evaluations });
        }
    }
    if vns.evaluations % PROGRESS_INTERVAL != 0 && progress(vns.evaluations).is_break() {
        return Err(SearchError::Cancelled { evaluations: vns.evaluations });
    }
    Ok(vns.finish())
}
