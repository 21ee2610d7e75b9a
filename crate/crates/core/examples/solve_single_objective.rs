// Maximize total utility and list every best assignment the search kept.
//
//     cargo run --example solve_single_objective

use seminar_vns::model::Labels;
use seminar_vns::search::{run_vns, SearchConfig};
use seminar_vns::Instance;

fn main() {
    // six students spread 10 points over three topics; two lecturers
    let weights = vec![
        vec![6, 4, 0],
        vec![6, 0, 4],
        vec![0, 5, 5],
        vec![5, 5, 0],
        vec![0, 0, 10],
        vec![4, 3, 3],
    ];
    let inst = Instance::builder(weights, 10)
        .groups(vec![vec![0, 1], vec![2]])
        .labels(Labels {
            students: ["Ada", "Ben", "Cleo", "Dan", "Eve", "Finn"].map(String::from).to_vec(),
            topics: ["Matching markets", "Vehicle routing", "Timetabling"].map(String::from).to_vec(),
            staff: ["Prof. Lange", "Dr. Yilmaz"].map(String::from).to_vec(),
        })
        .build()
        .expect("valid instance");

    let config = SearchConfig { max_evaluations: 20_000, seed: 7, ..SearchConfig::default() };
    let (archive, report) = run_vns(&inst, &config).expect("search runs");

    println!(
        "best utility {} after {} evaluations, {} optimal alternatives kept",
        report.best_utility,
        report.evaluations,
        archive.len()
    );
    for (k, (outcome, asg)) in archive.alternatives().enumerate() {
        println!("alternative {} (imbalance {}):", k + 1, outcome.imbalance_text());
        for i in 0..inst.n() {
            let j = asg.topic(i);
            println!(
                "  {:<5} -> {:<17} {} pts  ({})",
                inst.student_label(i),
                inst.topic_label(j),
                inst.weight(i, j),
                inst.staff_label(inst.group_of(j))
            );
        }
    }
}
