// Follow a run's progress and stop it early, or drive the search one
// evaluation at a time.
//
//     cargo run --example progress_and_cancel

use std::ops::ControlFlow;

use seminar_vns::instgen::random_instance;
use seminar_vns::search::{run_vns_with_progress, SearchConfig, SearchError, Step, Update, Vns};

fn main() {
    let inst = random_instance(40, 15, 100, 4, 2).expect("valid parameters");
    let config = SearchConfig { max_evaluations: 50_000, ..SearchConfig::default() };

    let result = run_vns_with_progress(&inst, &config, |done| {
        println!("{done} evaluations");
        if done >= 5_000 {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });
    if let Err(SearchError::Cancelled { evaluations }) = result {
        println!("stopped after {evaluations}");
    }

    let mut vns = Vns::new(&inst, &config).expect("valid config");
    while !vns.is_done() {
        if let Step::Offered(kind, Update::Improved) = vns.step() {
            let best = vns.archive().best_utility().unwrap_or_default();
            if vns.evaluations() < 50 {
                println!("eval {:>5}: {kind} raised the best utility to {best}", vns.evaluations());
            }
        }
    }
    let (_, report) = vns.finish();
    println!("final best {} ({} improvements)", report.best_utility, report.improvements);
}
