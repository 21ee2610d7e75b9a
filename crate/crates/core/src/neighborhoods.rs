//! The four move types and their random proposal.
//!
//! Every proposal draws its choices uniformly among the currently valid
//! ones (students, donor and receiver topics, swap partners), so a proposal
//! only fails when no valid move exists at all.
//!
//! A [`Move`] is a short list of relocations applied in order. For
//! shift+swap2 the swap is drawn on the assignment *after* the shift, so the
//! shifted student may take part in the swap and appear twice.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

use crate::model::{check_move, Assignment, Instance, MoveError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NeighborhoodKind {
    #[serde(rename = "swap2")]
    Swap2,
    #[serde(rename = "swap3")]
    Swap3,
    #[serde(rename = "shift")]
    Shift,
    #[serde(rename = "shift+swap2")]
    ShiftSwap2,
}

impl NeighborhoodKind {
    pub const ALL: [NeighborhoodKind; 4] = [
        NeighborhoodKind::Swap2,
        NeighborhoodKind::Swap3,
        NeighborhoodKind::Shift,
        NeighborhoodKind::ShiftSwap2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NeighborhoodKind::Swap2 => "swap2",
            NeighborhoodKind::Swap3 => "swap3",
            NeighborhoodKind::Shift => "shift",
            NeighborhoodKind::ShiftSwap2 => "shift+swap2",
        }
    }

    /// Number of relocations in a move of this kind.
    pub fn relocation_count(self) -> usize {
        match self {
            NeighborhoodKind::Shift => 1,
            NeighborhoodKind::Swap2 => 2,
            NeighborhoodKind::Swap3 | NeighborhoodKind::ShiftSwap2 => 3,
        }
    }
}

impl fmt::Display for NeighborhoodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown neighborhood `{0}` (expected swap2, swap3, shift or shift+swap2)")]
pub struct UnknownNeighborhood(pub String);

impl FromStr for NeighborhoodKind {
    type Err = UnknownNeighborhood;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "swap2" => Ok(NeighborhoodKind::Swap2),
            "swap3" => Ok(NeighborhoodKind::Swap3),
            "shift" => Ok(NeighborhoodKind::Shift),
            "shift+swap2" | "shift-swap2" | "shiftswap2" => Ok(NeighborhoodKind::ShiftSwap2),
            other => Err(UnknownNeighborhood(other.to_string())),
        }
    }
}

/// One student changing topic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Relocation {
    pub student: usize,
    pub from: usize,
    pub to: usize,
}

impl Relocation {
    pub fn new(student: usize, from: usize, to: usize) -> Self {
        Relocation { student, from, to }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Move {
    pub kind: NeighborhoodKind,
    pub relocations: SmallVec<[Relocation; 3]>,
}

impl Move {
    pub fn new(kind: NeighborhoodKind, relocations: impl IntoIterator<Item = Relocation>) -> Self {
        Move { kind, relocations: relocations.into_iter().collect() }
    }

    /// The move that undoes this one.
    pub fn inverse(&self) -> Move {
        Move {
            kind: self.kind,
            relocations: self
                .relocations
                .iter()
                .rev()
                .map(|r| Relocation::new(r.student, r.to, r.from))
                .collect(),
        }
    }

    /// Final topic of every student the move touches.
    pub fn final_topics(&self) -> SmallVec<[(usize, usize); 3]> {
        let mut out: SmallVec<[(usize, usize); 3]> = SmallVec::new();
        for r in &self.relocations {
            match out.iter_mut().find(|(s, _)| *s == r.student) {
                Some(e) => e.1 = r.to,
                None => out.push((r.student, r.to)),
            }
        }
        out
    }
}

/// No move of the requested kind exists from the current assignment.
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("no {kind} move available")]
pub struct NoMoveAvailable {
    pub kind: NeighborhoodKind,
}

/// Draws a random move of the given kind.
pub fn propose<R: Rng + ?Sized>(
    kind: NeighborhoodKind,
    inst: &Instance,
    asg: &Assignment,
    rng: &mut R,
) -> Result<Move, NoMoveAvailable> {
    match kind {
        NeighborhoodKind::Swap2 => propose_swap2(inst, asg, rng),
        NeighborhoodKind::Swap3 => propose_swap3(inst, asg, rng),
        NeighborhoodKind::Shift => propose_shift(inst, asg, rng),
        NeighborhoodKind::ShiftSwap2 => propose_shift_swap2(inst, asg, rng),
    }
}

/// Exchanges the topics of two students holding different topics.
pub fn propose_swap2<R: Rng + ?Sized>(
    inst: &Instance,
    asg: &Assignment,
    rng: &mut R,
) -> Result<Move, NoMoveAvailable> {
    let none = NoMoveAvailable { kind: NeighborhoodKind::Swap2 };
    let n = inst.n();
    if n < 2 {
        return Err(none);
    }
    let i = rng.random_range(0..n);
    let j = asg.topic(i);
    let k = pick_outside(inst, rng, n, |t| asg.count(t) as usize, &[j], |t, r| asg.members(t)[r])
        .ok_or(none)?;
    let l = asg.topic(k);
    Ok(Move::new(
        NeighborhoodKind::Swap2,
        [Relocation::new(i, j, l), Relocation::new(k, l, j)],
    ))
}

/// Rotates three students on pairwise distinct topics: `i: j -> l`,
/// `k: l -> p`, `o: p -> j`.
pub fn propose_swap3<R: Rng + ?Sized>(
    inst: &Instance,
    asg: &Assignment,
    rng: &mut R,
) -> Result<Move, NoMoveAvailable> {
    let none = NoMoveAvailable { kind: NeighborhoodKind::Swap3 };
    let occupied = (0..inst.m()).filter(|&t| asg.count(t) > 0).count();
    if occupied < 3 {
        return Err(none);
    }
    let n = inst.n();
    let count = |t: usize| asg.count(t) as usize;
    let member = |t: usize, r: usize| asg.members(t)[r];
    let i = rng.random_range(0..n);
    let j = asg.topic(i);
    let k = pick_outside(inst, rng, n, count, &[j], member).ok_or(none)?;
    let l = asg.topic(k);
    let o = pick_outside(inst, rng, n, count, &[j, l], member).ok_or(none)?;
    let p = asg.topic(o);
    Ok(Move::new(
        NeighborhoodKind::Swap3,
        [Relocation::new(i, j, l), Relocation::new(k, l, p), Relocation::new(o, p, j)],
    ))
}

/// Moves one student from a topic above its minimum to another topic below
/// its maximum.
pub fn propose_shift<R: Rng + ?Sized>(
    inst: &Instance,
    asg: &Assignment,
    rng: &mut R,
) -> Result<Move, NoMoveAvailable> {
    draw_shift(inst, asg, rng)
        .map(|r| Move::new(NeighborhoodKind::Shift, [r]))
        .ok_or(NoMoveAvailable { kind: NeighborhoodKind::Shift })
}

/// A shift followed by an independently drawn swap2 on the shifted
/// assignment.
pub fn propose_shift_swap2<R: Rng + ?Sized>(
    inst: &Instance,
    asg: &Assignment,
    rng: &mut R,
) -> Result<Move, NoMoveAvailable> {
    let none = NoMoveAvailable { kind: NeighborhoodKind::ShiftSwap2 };
    let shift = draw_shift(inst, asg, rng).ok_or(none)?;
    let n = inst.n();
    if n < 2 {
        return Err(none);
    }
    let Relocation { student: s, from: donor, to: receiver } = shift;

    // topic view after the shift
    let count = |t: usize| {
        let c = asg.count(t) as usize;
        if t == donor {
            c - 1
        } else if t == receiver {
            c + 1
        } else {
            c
        }
    };
    let member = |t: usize, r: usize| {
        if t == donor {
            let members = asg.members(donor);
            let skip = members.iter().position(|&x| x == s).unwrap_or(usize::MAX);
            members[if r >= skip { r + 1 } else { r }]
        } else if t == receiver && r == asg.members(receiver).len() {
            s
        } else {
            asg.members(t)[r]
        }
    };
    let topic_after = |x: usize| if x == s { receiver } else { asg.topic(x) };

    let x = rng.random_range(0..n);
    let tx = topic_after(x);
    let y = pick_outside(inst, rng, n, count, &[tx], member).ok_or(none)?;
    let ty = topic_after(y);
    Ok(Move::new(
        NeighborhoodKind::ShiftSwap2,
        [shift, Relocation::new(x, tx, ty), Relocation::new(y, ty, tx)],
    ))
}

fn draw_shift<R: Rng + ?Sized>(inst: &Instance, asg: &Assignment, rng: &mut R) -> Option<Relocation> {
    let (a, b) = (inst.min_students(), inst.max_students());
    let m = inst.m();
    let mut donors: SmallVec<[usize; 32]> = SmallVec::new();
    let mut receivers: SmallVec<[usize; 32]> = SmallVec::new();
    for t in 0..m {
        let c = asg.count(t);
        if c > a[t] {
            donors.push(t);
        }
        if c < b[t] {
            receivers.push(t);
        }
    }
    // a donor needs some receiver other than itself
    if receivers.len() == 1 {
        donors.retain(|d| *d != receivers[0]);
    }
    if donors.is_empty() || receivers.is_empty() {
        return None;
    }
    let j = donors[rng.random_range(0..donors.len())];
    let members = asg.members(j);
    let i = members[rng.random_range(0..members.len())];
    let valid = receivers.len() - usize::from(receivers.contains(&j));
    let r = rng.random_range(0..valid);
    let l = *receivers.iter().filter(|&&t| t != j).nth(r)?;
    Some(Relocation::new(i, j, l))
}

/// Draws a student uniformly among those whose topic is not excluded.
fn pick_outside<R: Rng + ?Sized>(
    inst: &Instance,
    rng: &mut R,
    n: usize,
    count: impl Fn(usize) -> usize,
    excluded: &[usize],
    member: impl Fn(usize, usize) -> usize,
) -> Option<usize> {
    let inside: usize = excluded.iter().map(|&t| count(t)).sum();
    let pool = n - inside;
    if pool == 0 {
        return None;
    }
    let mut r = rng.random_range(0..pool);
    for t in 0..inst.m() {
        if excluded.contains(&t) {
            continue;
        }
        let c = count(t);
        if r < c {
            return Some(member(t, r));
        }
        r -= c;
    }
    None
}

/// Applies a move in place, keeping every cached quantity current.
pub fn apply(inst: &Instance, asg: &mut Assignment, mv: &Move) -> Result<(), MoveError> {
    check_move(inst, asg, mv)?;
    apply_unchecked(inst, asg, mv);
    Ok(())
}

#[inline]
pub(crate) fn apply_unchecked(inst: &Instance, asg: &mut Assignment, mv: &Move) {
    for r in &mv.relocations {
        asg.relocate(inst, r.student, r.to);
    }
}

/// Checks the defining side conditions of the move's kind against the
/// assignment it was drawn from, including bounds of the final counts.
pub fn validate_move(inst: &Instance, asg: &Assignment, mv: &Move) -> Result<(), String> {
    check_move(inst, asg, mv).map_err(|e| e.to_string())?;
    let rel = &mv.relocations;
    if rel.len() != mv.kind.relocation_count() {
        return Err(format!("{} move with {} relocations", mv.kind, rel.len()));
    }
    let (a, b) = (inst.min_students(), inst.max_students());
    let is_swap2 = |r0: &Relocation, r1: &Relocation| {
        r0.student != r1.student && r0.from != r0.to && r0.from == r1.to && r0.to == r1.from
    };
    match mv.kind {
        NeighborhoodKind::Swap2 => {
            if !is_swap2(&rel[0], &rel[1]) {
                return Err("swap2 must exchange two students on different topics".into());
            }
        }
        NeighborhoodKind::Swap3 => {
            let (x, y, z) = (&rel[0], &rel[1], &rel[2]);
            let distinct_students =
                x.student != y.student && y.student != z.student && x.student != z.student;
            let distinct_topics = x.from != y.from && y.from != z.from && z.from != x.from;
            if !distinct_students || !distinct_topics || x.to != y.from || y.to != z.from || z.to != x.from {
                return Err("swap3 must rotate three students on pairwise distinct topics".into());
            }
        }
        NeighborhoodKind::Shift | NeighborhoodKind::ShiftSwap2 => {
            let s = &rel[0];
            let (j, l) = (s.from, s.to);
            if j == l {
                return Err("shift must change the topic".into());
            }
            if asg.count(j) <= a[j] {
                return Err(format!("shift donor topic {} is at its minimum", j + 1));
            }
            if asg.count(l) >= b[l] {
                return Err(format!("shift receiver topic {} is at its maximum", l + 1));
            }
            if mv.kind == NeighborhoodKind::ShiftSwap2 && !is_swap2(&rel[1], &rel[2]) {
                return Err("shift+swap2 must end with a swap2".into());
            }
        }
    }
    let mut after = asg.clone();
    apply_unchecked(inst, &mut after, mv);
    if !crate::model::is_feasible(inst, &after) {
        return Err("move leaves the capacity bounds".into());
    }
    if matches!(mv.kind, NeighborhoodKind::Swap2 | NeighborhoodKind::Swap3) && after.counts() != asg.counts() {
        return Err("swap changed topic counts".into());
    }
    Ok(())
}

/// A kind that can never produce a move on an instance, with the reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub kind: NeighborhoodKind,
    pub reason: String,
}

/// Kinds that can produce a move from at least one feasible assignment.
pub fn applicable_kinds(inst: &Instance) -> Vec<NeighborhoodKind> {
    NeighborhoodKind::ALL
        .into_iter()
        .filter(|&k| exclusion_reason(inst, k).is_none())
        .collect()
}

/// Kinds that are structurally impossible on an instance.
pub fn exclusions(inst: &Instance) -> Vec<Exclusion> {
    NeighborhoodKind::ALL
        .into_iter()
        .filter_map(|kind| exclusion_reason(inst, kind).map(|reason| Exclusion { kind, reason }))
        .collect()
}

pub fn exclusion_reason(inst: &Instance, kind: NeighborhoodKind) -> Option<String> {
    let (a, b) = (inst.min_students(), inst.max_students());
    let n = inst.n() as u64;
    let min_total: u64 = a.iter().map(|&x| u64::from(x)).sum();
    let max_total: u64 = b.iter().map(|&x| u64::from(x)).sum();
    // most topics a feasible assignment can occupy
    let forced = a.iter().filter(|&&x| x > 0).count() as u64;
    let optional = a.iter().zip(b).filter(|(&x, &y)| x == 0 && y > 0).count() as u64;
    let max_occupied = forced + optional.min(n - min_total);

    let shift_reason = || {
        if a == b {
            Some("a_j = b_j for all j".to_string())
        } else if n == min_total {
            Some("n equals the sum of minima, no topic can give a student away".to_string())
        } else if n == max_total {
            Some("n equals the sum of maxima, no topic can take a student".to_string())
        } else if a.iter().zip(b).filter(|(x, y)| x < y).count() < 2 {
            Some("only one topic has a_j < b_j".to_string())
        } else {
            None
        }
    };
    let swap_reason = |topics: u64| {
        (max_occupied < topics)
            .then(|| format!("at most {max_occupied} topic(s) can be occupied, {topics} needed"))
    };
    match kind {
        NeighborhoodKind::Swap2 => swap_reason(2),
        NeighborhoodKind::Swap3 => swap_reason(3),
        NeighborhoodKind::Shift => shift_reason(),
        NeighborhoodKind::ShiftSwap2 => shift_reason().or_else(|| swap_reason(2)),
    }
}
