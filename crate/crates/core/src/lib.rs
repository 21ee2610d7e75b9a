//! Capacitated assignment of students to seminar topics.
//!
//! Every student ranks the offered topics by spreading a fixed budget of
//! preference points (`w_max`) over them. Each topic accepts between
//! `a_j` and `b_j` students, and topics are grouped by the member of staff
//! supervising them. The crate maximizes total realized preference with a
//! reduced variable neighborhood search that keeps *every* best solution it
//! finds, and optionally trades utility against the spread of staff
//! workload with a Pareto archive.
//!
//! The main entry points:
//!
//! - [`model`]: instances, assignments, both objectives and constant-time
//!   move evaluation.
//! - [`neighborhoods`]: the swap2, swap3, shift and shift+swap2 moves.
//! - [`search`]: the archive-based search loop and its two archives.
//! - [`oracle`]: exhaustive enumeration for small instances.
//! - [`instgen`]: synthetic instances and size families.
//! - [`formats`]: instance, archive, solution and report files.
//! - [`bench`]: seeded, parallel benchmark tables.
//! - [`wishes`]: filtering stored alternatives by team wishes.
//!
//! ```
//! use seminar_vns::model::Instance;
//! use seminar_vns::search::{run_vns, SearchConfig};
//!
//! let inst = Instance::builder(
//!     vec![vec![10, 0], vec![10, 0], vec![0, 10], vec![0, 10]],
//!     10,
//! )
//! .build()
//! .unwrap();
//! let config = SearchConfig { max_evaluations: 2_000, ..SearchConfig::default() };
//! let (archive, report) = run_vns(&inst, &config).unwrap();
//! assert_eq!(report.best_utility, 40);
//! assert_eq!(archive.len(), 1);
//! ```

pub mod bench;
pub mod formats;
pub mod instgen;
pub mod model;
pub mod neighborhoods;
pub mod oracle;
pub mod search;
pub mod wishes;

mod ratio;

pub use model::{Assignment, Instance, Outcome};
pub use neighborhoods::{Move, NeighborhoodKind};
pub use search::{run_vns, Archive, Mode, RunReport, SearchConfig};
