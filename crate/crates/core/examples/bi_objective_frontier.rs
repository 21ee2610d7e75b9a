// Trade utility against the spread of supervision load between staff
// members and print the frontier as plot-ready columns.
//
//     cargo run --release --example bi_objective_frontier

use seminar_vns::formats::frontier_table;
use seminar_vns::instgen::random_instance;
use seminar_vns::search::{run_vns, Archive, Mode, SearchConfig};

fn main() {
    // 34 students, 15 topics, four lecturers supervising 3, 3, 3 and 6 topics
    let inst = random_instance(34, 15, 100, 4, 1).expect("valid parameters");
    let config = SearchConfig { mode: Mode::BiObjective, seed: 3, ..SearchConfig::default() };
    let (archive, report) = run_vns(&inst, &config).expect("search runs");

    print!("{}", frontier_table(&report.alternatives));
    println!("{} points, {} stored alternatives", report.alternatives.len(), archive.len());
    if let Archive::Pareto(front) = &archive {
        println!("dominated area w.r.t. (0, 1): {}", front.hypervolume());
    }
}
