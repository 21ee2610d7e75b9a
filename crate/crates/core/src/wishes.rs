//! Team wishes: students who want to share a topic.

use serde::Serialize;
use thiserror::Error;

use crate::model::{Assignment, Instance, Outcome};
use crate::search::Archive;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WishError {
    #[error("a team wish needs at least two distinct students, got {0:?}")]
    TooSmall(Vec<usize>),
    #[error("student {student} does not exist (n = {n})")]
    UnknownStudent { student: usize, n: usize },
}

/// Zero-based students that should end up on the same topic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TeamWish {
    students: Vec<usize>,
}

impl TeamWish {
    pub fn new(inst: &Instance, mut students: Vec<usize>) -> Result<Self, WishError> {
        if let Some(&student) = students.iter().find(|&&i| i >= inst.n()) {
            return Err(WishError::UnknownStudent { student: student + 1, n: inst.n() });
        }
        students.sort_unstable();
        students.dedup();
        if students.len() < 2 {
            return Err(WishError::TooSmall(students.iter().map(|i| i + 1).collect()));
        }
        Ok(TeamWish { students })
    }

    /// Builds a wish from one-based student numbers.
    pub fn from_one_based(inst: &Instance, students: &[usize]) -> Result<Self, WishError> {
        let zero = students
            .iter()
            .map(|&i| i.checked_sub(1).ok_or(WishError::UnknownStudent { student: 0, n: inst.n() }))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(inst, zero)
    }

    pub fn students(&self) -> &[usize] {
        &self.students
    }

    pub fn is_met(&self, asg: &Assignment) -> bool {
        let j = asg.topic(self.students[0]);
        self.students.iter().all(|&i| asg.topic(i) == j)
    }
}

/// A stored alternative that satisfies every wish.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Match {
    /// Position in [`Archive::alternatives`].
    pub index: usize,
    #[serde(flatten)]
    pub outcome: Outcome,
    /// One-based topic per student.
    pub topic_of: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterResult {
    pub matches: Vec<Match>,
    /// Per wish: whether some stored alternative meets it on its own.
    pub satisfiable: Vec<bool>,
}

/// Stored alternatives meeting all `wishes`.
pub fn filter(archive: &Archive, wishes: &[TeamWish]) -> FilterResult {
    let mut satisfiable = vec![false; wishes.len()];
    let mut matches = Vec::new();
    for (index, (outcome, asg)) in archive.alternatives().enumerate() {
        let mut all = true;
        for (w, wish) in wishes.iter().enumerate() {
            let met = wish.is_met(asg);
            satisfiable[w] |= met;
            all &= met;
        }
        if all {
            matches.push(Match { index, outcome, topic_of: asg.one_based() });
        }
    }
    FilterResult { matches, satisfiable }
}
