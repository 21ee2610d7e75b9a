// Exhaustive enumeration of a small instance: the exact optimum, how many
// assignments reach it, and the exact frontier, next to a search run.
//
//     cargo run --release --example exact_oracle

use seminar_vns::instgen::random_instance;
use seminar_vns::oracle::exact_frontier;
use seminar_vns::search::{run_vns, Mode, SearchConfig};

fn main() {
    let inst = random_instance(8, 3, 20, 2, 42).expect("valid parameters");
    let exact = exact_frontier(&inst).expect("small enough to enumerate");
    println!(
        "{} feasible assignments, optimum {} reached by {}",
        exact.enumerated, exact.optimum_utility, exact.optimal_count
    );
    println!("exact frontier:");
    for p in &exact.frontier {
        println!("  {}  x{}", p.outcome, p.count);
    }

    let config = SearchConfig { mode: Mode::BiObjective, max_evaluations: 100_000, ..SearchConfig::default() };
    let (archive, _) = run_vns(&inst, &config).expect("search runs");
    println!("search frontier:");
    for c in archive.count_alternatives() {
        println!("  {}  x{}{}", c.outcome, c.count, if c.cap_hit { " (cap reached)" } else { "" });
    }

    let big = random_instance(34, 15, 100, 4, 1).expect("valid parameters");
    match exact_frontier(&big) {
        Ok(_) => println!("enumerated n = 34"),
        Err(e) => println!("n = 34: {e}"),
    }
}
