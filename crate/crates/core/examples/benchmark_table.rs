// Compare each neighborhood on its own against the combined search over an
// instance family. Uses a reduced budget; the full protocol is
// `BenchmarkConfig::default()` (targets 30..45, 25 runs of 100,000).
//
//     cargo run --release --example benchmark_table

use seminar_vns::bench::{run_benchmark, BenchmarkConfig};
use seminar_vns::instgen::random_instance;

fn main() {
    let base = random_instance(34, 15, 100, 4, 1).expect("valid parameters");
    let config = BenchmarkConfig {
        targets: vec![30, 31, 34, 38, 45],
        runs: 5,
        evaluations: 20_000,
        base_seed: 1,
        workers: 0,
    };
    let table = run_benchmark(&base, &config).expect("benchmark runs");
    println!("mean best utility:");
    print!("{}", table.to_tsv());
    println!("\nVNS minus single neighborhood:");
    print!("{}", table.differences_tsv());
}
