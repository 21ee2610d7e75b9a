//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs the full-size workloads, so build with optimizations (the
//! workspace test profile does).

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seminar_vns::bench::{run_benchmark, BenchmarkConfig, Method};
use seminar_vns::formats::archive_to_string;
use seminar_vns::instgen::{random_instance, GeneratorConfig};
use seminar_vns::model::{imbalance_delta, utility_delta};
use seminar_vns::neighborhoods::{apply, propose};
use seminar_vns::oracle::{enumerate, DEFAULT_GUARD};
use seminar_vns::search::{Step, Vns};
use seminar_vns::{run_vns, Archive, Instance, Mode, NeighborhoodKind, Outcome, SearchConfig};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

/// The 20 small instances shared by the two oracle criteria: n in 5..=8,
/// m in {2, 3}, w_max = 20, two staff groups.
fn small_instances() -> Vec<Instance> {
    (0..20)
        .map(|q| {
            let n = 5 + q % 4;
            let m = 2 + (q / 4) % 2;
            let cfg = GeneratorConfig { favored: (1, m), ..GeneratorConfig::new(n, m, 20, 2, 1000 + q as u64) };
            seminar_vns::instgen::generate(&cfg).unwrap()
        })
        .collect()
}

fn config(mode: Mode, seed: u64) -> SearchConfig {
    SearchConfig { mode, seed, max_evaluations: 100_000, ..SearchConfig::default() }
}

fn oracle_optimality() -> Verdict {
    let mut worst_rate = 1.0f64;
    let mut slowest = Duration::ZERO;
    let mut notes = Vec::new();
    for (q, inst) in small_instances().iter().enumerate() {
        let truth = common::brute_force(inst);
        let start = Instant::now();
        let hits = (0..25u64)
            .filter(|&s| run_vns(inst, &config(Mode::SingleObjective, s)).unwrap().1.best_utility == truth.optimum)
            .count();
        slowest = slowest.max(start.elapsed());
        let rate = hits as f64 / 25.0;
        worst_rate = worst_rate.min(rate);
        if hits < 25 {
            notes.push(format!("#{q}: {hits}/25"));
        }
    }
    verdict(
        worst_rate >= 0.95 && slowest < Duration::from_secs(5),
        format!(
            "worst instance {:.0}% optimal, slowest instance {:.2?} for 25 runs{}",
            worst_rate * 100.0,
            slowest,
            if notes.is_empty() { String::new() } else { format!(" ({})", notes.join(", ")) }
        ),
    )
}

fn archive_points(archive: &Archive) -> Vec<(Outcome, usize, bool)> {
    archive.count_alternatives().into_iter().map(|c| (c.outcome, c.count, c.cap_hit)).collect()
}

fn oracle_frontier() -> Verdict {
    let (mut runs, mut exact, mut count_checks, mut count_errors) = (0, 0, 0, 0);
    for inst in small_instances() {
        let truth: Vec<(Outcome, u64)> = common::brute_force(&inst)
            .frontier()
            .into_iter()
            .map(|((u, b), c)| (Outcome::new(u, b), c))
            .collect();
        for s in 0..25u64 {
            runs += 1;
            let (archive, _) = run_vns(&inst, &config(Mode::BiObjective, s)).unwrap();
            let got = archive_points(&archive);
            let same_points =
                got.len() == truth.len() && got.iter().zip(&truth).all(|(g, t)| g.0 == t.0);
            if !same_points {
                continue;
            }
            exact += 1;
            for (g, t) in got.iter().zip(&truth) {
                if !g.2 {
                    count_checks += 1;
                    if g.1 as u64 != t.1 {
                        count_errors += 1;
                    }
                }
            }
        }
    }
    let rate = exact as f64 / runs as f64;
    verdict(
        rate >= 0.95 && count_errors == 0,
        format!(
            "{exact}/{runs} runs ({:.1}%) found the exact frontier; {count_errors} of {count_checks} uncapped point counts differ",
            rate * 100.0
        ),
    )
}

fn delta_exactness() -> Verdict {
    let inst = random_instance(34, 15, 100, 4, 34).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut asg = seminar_vns::search::initial_solution(&inst, &mut rng).unwrap();
    let mut checked = 0u64;
    let mut errors = 0u64;
    for kind in NeighborhoodKind::ALL {
        let mut done = 0;
        while done < 100_000 {
            let Ok(mv) = propose(kind, &inst, &asg, &mut rng) else { continue };
            done += 1;
            let du = utility_delta(&inst, &asg, &mv).unwrap();
            let db = imbalance_delta(&inst, &asg, &mv).unwrap();
            let before_u = common::utility(&inst, asg.topic_of());
            let before_b = common::imbalance(&inst, asg.topic_of());
            let mut next = asg.clone();
            apply(&inst, &mut next, &mv).unwrap();
            let after_u = common::utility(&inst, next.topic_of());
            let after_b = common::imbalance(&inst, next.topic_of());
            checked += 1;
            if du != after_u - before_u || db != after_b - before_b || !common::feasible(&inst, next.topic_of()) {
                errors += 1;
            }
            if rng.random_bool(0.5) {
                asg = next;
            }
        }
    }
    verdict(errors == 0, format!("{checked} moves over four kinds, {errors} mismatches against full recomputation"))
}

fn benchmark_table() -> Verdict {
    let base = random_instance(34, 15, 100, 4, 1).unwrap();
    let sizes: Vec<usize> = base.groups().iter().map(Vec::len).collect();
    let cfg = BenchmarkConfig { targets: (30..=45).collect(), runs: 25, evaluations: 100_000, base_seed: 1, workers: 8 };
    let start = Instant::now();
    let table = run_benchmark(&base, &cfg).unwrap();
    let elapsed = start.elapsed();
    let tsv = table.to_tsv();

    let shift_cols = [Method::Single(NeighborhoodKind::Shift), Method::Single(NeighborhoodKind::ShiftSwap2)];
    let mut pattern_ok = sizes == [3, 3, 3, 6];
    for (row, line) in table.rows.iter().zip(tsv.lines().skip(1)) {
        let na_expected = row.n % 15 == 0;
        let na_cells = line.matches("n/a").count();
        pattern_ok &= na_cells == if na_expected { 2 } else { 0 };
        pattern_ok &= shift_cols.iter().all(|&m| row.cell(m).applicable() != na_expected);
    }
    let vns_wins = table
        .rows
        .iter()
        .filter(|row| {
            let vns = row.cell(Method::Vns).mean().unwrap();
            Method::ALL[..4].iter().all(|&m| row.cell(m).mean().is_none_or(|x| vns >= x))
        })
        .count();
    let pass = pattern_ok && vns_wins >= 14 && table.rows.len() == 16 && elapsed < Duration::from_secs(30 * 60);
    verdict(
        pass,
        format!(
            "16 rows, n/a pattern {}, VNS >= every single neighborhood on {vns_wins}/16 rows, {:.1?} with 8 workers\n{}",
            if pattern_ok { "as expected" } else { "WRONG" },
            elapsed,
            tsv.trim_end().lines().map(|l| format!("      {l}")).collect::<Vec<_>>().join("\n")
        ),
    )
}

fn timed_run(inst: &Instance) -> Duration {
    (0..3)
        .map(|s| {
            let start = Instant::now();
            run_vns(inst, &config(Mode::SingleObjective, s)).unwrap();
            start.elapsed()
        })
        .min()
        .unwrap()
}

fn throughput() -> Verdict {
    let base = random_instance(34, 15, 100, 4, 7).unwrap();
    let times: Vec<(usize, Duration)> = (30..=45)
        .map(|n| (n, timed_run(&seminar_vns::instgen::derive_family(&base, n, n as u64).unwrap())))
        .collect();
    let n45 = times.last().unwrap().1;
    let max = times.iter().map(|t| t.1).max().unwrap();
    let min = times.iter().map(|t| t.1).min().unwrap();
    let ratio = max.as_secs_f64() / min.as_secs_f64();
    verdict(
        n45 < Duration::from_secs(3) && ratio < 2.0,
        format!("n45 100k evaluations in {n45:.2?}; max/min over n30..n45 = {ratio:.2} ({min:.2?} .. {max:.2?})"),
    )
}

fn archive_semantics() -> Verdict {
    let mut instances = small_instances();
    instances.truncate(6);
    instances.push(random_instance(34, 15, 100, 4, 5).unwrap());
    instances.push(random_instance(37, 15, 100, 4, 6).unwrap());
    let mut steps = 0u64;
    let mut problems = Vec::new();
    for (q, inst) in instances.iter().enumerate() {
        for mode in [Mode::SingleObjective, Mode::BiObjective] {
            let cfg = SearchConfig { max_evaluations: 20_000, archive_cap: 50, ..config(mode, q as u64) };
            let mut vns = Vns::new(inst, &cfg).unwrap();
            let mut best = vns.archive().best_utility().unwrap();
            while !vns.is_done() {
                let step = vns.step();
                steps += 1;
                let now = vns.archive().best_utility().unwrap();
                if now < best {
                    problems.push(format!("#{q} {mode:?}: best utility fell from {best} to {now}"));
                }
                best = now;
                // full invariant check after every archive change, cheap checks otherwise
                if matches!(step, Step::Offered(_, u) if u.changed()) || steps % 97 == 0 {
                    if let Err(e) = vns.archive().check(inst) {
                        problems.push(format!("#{q} {mode:?}: {e}"));
                    }
                    for (_, a) in vns.archive().alternatives() {
                        if !common::feasible(inst, a.topic_of()) {
                            problems.push(format!("#{q} {mode:?}: infeasible stored solution"));
                        }
                    }
                }
            }
            let (a1, _) = vns.finish();
            let (a2, _) = run_vns(inst, &cfg).unwrap();
            if archive_to_string(&a1, inst) != archive_to_string(&a2, inst) {
                problems.push(format!("#{q} {mode:?}: identical seeds gave different archives"));
            }
        }
    }
    problems.dedup();
    verdict(
        problems.is_empty(),
        if problems.is_empty() {
            format!("{steps} steps over {} instances and both modes, all invariants held", instances.len())
        } else {
            problems.into_iter().take(5).collect::<Vec<_>>().join("; ")
        },
    )
}

fn enumeration_counts() -> Verdict {
    let t1 = Instance::builder(vec![vec![10, 0], vec![10, 0], vec![0, 10], vec![0, 10]], 10)
        .groups(vec![vec![0], vec![1]])
        .build()
        .unwrap();
    let t2 = Instance::builder(vec![vec![9, 1], vec![9, 1], vec![9, 1], vec![1, 9], vec![1, 9]], 10)
        .capacities(vec![2, 2], vec![3, 3])
        .groups(vec![vec![0], vec![1]])
        .build()
        .unwrap();
    let visits = |inst: &Instance| enumerate(inst, DEFAULT_GUARD, |_, _, _| {}).unwrap().visited;
    let (v1, v2) = (visits(&t1), visits(&t2));
    let closed = (common::multinomial_count(&t1), common::multinomial_count(&t2));
    let others_ok = small_instances()
        .iter()
        .all(|inst| visits(inst) == common::multinomial_count(inst) && visits(inst) == common::brute_force(inst).feasible);
    verdict(
        (v1, v2) == (6, 20) && closed == (6, 20) && others_ok,
        format!("T1 {v1} (closed form {}), T2 {v2} (closed form {}); 20 random instances agree: {others_ok}", closed.0, closed.1),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 7] = [
        ("oracle optimality", oracle_optimality),
        ("oracle frontier", oracle_frontier),
        ("delta-evaluation exactness", delta_exactness),
        ("benchmark table structure", benchmark_table),
        ("throughput", throughput),
        ("archive semantics", archive_semantics),
        ("enumeration counts", enumeration_counts),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let v = check();
        failed += usize::from(!v.pass);
        println!(
            "{} [PRIMARY] {name}: {} ({:.1?})",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            start.elapsed()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
