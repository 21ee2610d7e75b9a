//! Repeated seeded runs over an instance family, one column per method.

use std::fmt;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instgen::{derive_family, GenerateError};
use crate::model::Instance;
use crate::neighborhoods::{exclusion_reason, NeighborhoodKind};
use crate::search::{run_vns, Mode, SearchConfig, SearchError};

/// A column of the benchmark table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// The search restricted to one neighborhood.
    Single(NeighborhoodKind),
    /// All applicable neighborhoods.
    Vns,
}

impl Method {
    /// The four single-neighborhood columns followed by VNS.
    pub const ALL: [Method; 5] = [
        Method::Single(NeighborhoodKind::Swap2),
        Method::Single(NeighborhoodKind::Swap3),
        Method::Single(NeighborhoodKind::Shift),
        Method::Single(NeighborhoodKind::ShiftSwap2),
        Method::Vns,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Single(kind) => kind.name(),
            Method::Vns => "VNS",
        }
    }

    fn index(self) -> u64 {
        Method::ALL.iter().position(|&m| m == self).unwrap() as u64
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    /// Student counts of the derived instances.
    pub targets: Vec<usize>,
    pub runs: usize,
    pub evaluations: u64,
    pub base_seed: u64,
    /// Parallel runs; 0 uses all cores.
    pub workers: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig { targets: (30..=45).collect(), runs: 25, evaluations: 100_000, base_seed: 0, workers: 0 }
    }
}

#[derive(Debug, Error)]
pub enum BenchmarkError {
    #[error("invalid benchmark configuration: {0}")]
    Config(String),
    #[error("instance n{target}: {source}")]
    Family { target: usize, source: GenerateError },
    #[error("instance n{target}, {method}: {source}")]
    Search { target: usize, method: Method, source: SearchError },
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Results of one method on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub method: Method,
    /// Best utility per run; empty when the method is inapplicable.
    pub utilities: Vec<i64>,
    /// Mean wall time per run in milliseconds.
    pub mean_ms: f64,
}

impl Cell {
    pub fn applicable(&self) -> bool {
        !self.utilities.is_empty()
    }

    pub fn mean(&self) -> Option<f64> {
        self.applicable()
            .then(|| self.utilities.iter().sum::<i64>() as f64 / self.utilities.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub n: usize,
    /// Cells in [`Method::ALL`] order.
    pub cells: Vec<Cell>,
}

impl Row {
    pub fn cell(&self, method: Method) -> &Cell {
        &self.cells[method.index() as usize]
    }

    /// VNS mean minus the method's mean.
    pub fn difference_to_vns(&self, method: Method) -> Option<f64> {
        Some(self.cell(Method::Vns).mean()? - self.cell(method).mean()?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkTable {
    pub config: BenchmarkConfig,
    pub rows: Vec<Row>,
}

impl BenchmarkTable {
    /// Tab-separated table: one row per instance, mean best utility per
    /// method, "n/a" where the method's neighborhood cannot move.
    pub fn to_tsv(&self) -> String {
        let header: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
        let mut out = format!("instance\t{}\n", header.join("\t"));
        for row in &self.rows {
            let cells: Vec<String> = Method::ALL.iter().map(|&m| fmt_mean(row.cell(m).mean())).collect();
            out.push_str(&format!("n{}\t{}\n", row.n, cells.join("\t")));
        }
        out
    }

    /// VNS mean minus each single-neighborhood mean, same layout as
    /// [`to_tsv`](Self::to_tsv) without the VNS column.
    pub fn differences_tsv(&self) -> String {
        let singles = &Method::ALL[..4];
        let header: Vec<&str> = singles.iter().map(|m| m.name()).collect();
        let mut out = format!("instance\t{}\n", header.join("\t"));
        for row in &self.rows {
            let cells: Vec<String> = singles.iter().map(|&m| fmt_mean(row.difference_to_vns(m))).collect();
            out.push_str(&format!("n{}\t{}\n", row.n, cells.join("\t")));
        }
        out
    }
}

fn fmt_mean(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}"))
}

fn mix(target: usize, method: u64, run: usize) -> u64 {
    let mut s = (target as u64) << 40 ^ method << 32 ^ run as u64;
    crate::search::splitmix64(&mut s)
}

/// Seed of run `run` of `method` on the instance with `target` students.
pub fn run_seed(base_seed: u64, target: usize, method: Method, run: usize) -> u64 {
    base_seed.wrapping_add(mix(target, method.index(), run))
}

/// Seed used to derive the instance with `target` students.
pub fn family_seed(base_seed: u64, target: usize) -> u64 {
    base_seed.wrapping_add(mix(target, u64::from(u32::MAX), 0))
}

/// Runs every applicable (instance, method) cell `runs` times. Output does
/// not depend on the number of workers.
pub fn run_benchmark(base: &Instance, cfg: &BenchmarkConfig) -> Result<BenchmarkTable, BenchmarkError> {
    if cfg.targets.is_empty() || cfg.runs == 0 || cfg.evaluations == 0 {
        return Err(BenchmarkError::Config("targets, runs and evaluations must be nonempty/positive".into()));
    }
    let instances = cfg
        .targets
        .iter()
        .map(|&t| derive_family(base, t, family_seed(cfg.base_seed, t)).map_err(|source| BenchmarkError::Family { target: t, source }))
        .collect::<Result<Vec<_>, _>>()?;

    let mut jobs = Vec::new();
    for (row, inst) in instances.iter().enumerate() {
        for method in Method::ALL {
            if applicable(inst, method) {
                jobs.extend((0..cfg.runs).map(|r| (row, method, r)));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| BenchmarkError::Pool(e.to_string()))?;
    let results: Vec<(i64, f64)> = pool.install(|| {
        jobs.par_iter()
            .map(|&(row, method, r)| {
                let target = cfg.targets[row];
                let config = SearchConfig {
                    mode: Mode::SingleObjective,
                    neighborhoods: match method {
                        Method::Single(kind) => Some(vec![kind]),
                        Method::Vns => None,
                    },
                    max_evaluations: cfg.evaluations,
                    seed: run_seed(cfg.base_seed, target, method, r),
                    ..SearchConfig::default()
                };
                let start = Instant::now();
                let (_, report) = run_vns(&instances[row], &config)
                    .map_err(|source| BenchmarkError::Search { target, method, source })?;
                Ok((report.best_utility, start.elapsed().as_secs_f64() * 1e3))
            })
            .collect::<Result<Vec<_>, BenchmarkError>>()
    })?;

    let mut rows: Vec<Row> = cfg
        .targets
        .iter()
        .map(|&n| Row {
            n,
            cells: Method::ALL.iter().map(|&method| Cell { method, utilities: Vec::new(), mean_ms: 0.0 }).collect(),
        })
        .collect();
    for (&(row, method, _), &(utility, ms)) in jobs.iter().zip(&results) {
        let cell = &mut rows[row].cells[method.index() as usize];
        cell.utilities.push(utility);
        cell.mean_ms += ms;
    }
    for cell in rows.iter_mut().flat_map(|r| r.cells.iter_mut()) {
        if cell.applicable() {
            cell.mean_ms /= cell.utilities.len() as f64;
        }
    }
    Ok(BenchmarkTable { config: cfg.clone(), rows })
}

fn applicable(inst: &Instance, method: Method) -> bool {
    match method {
        Method::Single(kind) => exclusion_reason(inst, kind).is_none(),
        Method::Vns => NeighborhoodKind::ALL.iter().any(|&k| exclusion_reason(inst, k).is_none()),
    }
}
