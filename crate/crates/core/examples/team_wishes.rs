// Honor team wishes only among alternatives that are already optimal.
//
//     cargo run --example team_wishes

use seminar_vns::search::{run_vns, SearchConfig};
use seminar_vns::wishes::{filter, TeamWish};
use seminar_vns::Instance;

fn main() {
    // students 1-4 like topic 1 and 2 equally; 5 and 6 want topic 3
    let weights = vec![vec![5, 5, 0], vec![5, 5, 0], vec![5, 5, 0], vec![5, 5, 0], vec![0, 0, 10], vec![0, 0, 10]];
    let inst = Instance::builder(weights, 10).build().expect("valid instance");
    let (archive, report) = run_vns(&inst, &SearchConfig { max_evaluations: 10_000, ..SearchConfig::default() })
        .expect("search runs");
    println!("{} optimal alternatives with utility {}", archive.len(), report.best_utility);

    for team in [vec![1, 2], vec![1, 5], vec![1, 2, 3]] {
        let wish = TeamWish::from_one_based(&inst, &team).expect("valid students");
        let result = filter(&archive, &[wish]);
        let hits: Vec<String> = result.matches.iter().map(|m| format!("{:?}", m.topic_of)).collect();
        println!(
            "team {team:?}: {} matching, satisfiable {}  {}",
            result.matches.len(),
            result.satisfiable[0],
            hits.join(" ")
        );
    }
}
