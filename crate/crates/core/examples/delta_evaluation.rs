// Evaluate moves in constant time and check the result against a full
// recomputation.
//
//     cargo run --example delta_evaluation

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use seminar_vns::instgen::random_instance;
use seminar_vns::model::{imbalance, imbalance_delta, utility, utility_delta};
use seminar_vns::neighborhoods::{apply, propose};
use seminar_vns::search::initial_solution;
use seminar_vns::NeighborhoodKind;

fn main() {
    let inst = random_instance(34, 15, 100, 4, 1).expect("valid parameters");
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut asg = initial_solution(&inst, &mut rng).expect("feasible");
    for kind in NeighborhoodKind::ALL {
        let mv = propose(kind, &inst, &asg, &mut rng).expect("n = 34 admits every move");
        let du = utility_delta(&inst, &asg, &mv).expect("valid move");
        let db = imbalance_delta(&inst, &asg, &mv).expect("valid move");
        let (u0, b0) = (utility(&inst, &asg), imbalance(&inst, &asg));
        apply(&inst, &mut asg, &mv).expect("valid move");
        let (u1, b1) = (utility(&inst, &asg), imbalance(&inst, &asg));
        let moves: Vec<String> = mv
            .relocations
            .iter()
            .map(|r| format!("s{}: t{}->t{}", r.student + 1, r.from + 1, r.to + 1))
            .collect();
        println!("{kind:<12} {:<40} utility {du:+} (recomputed {:+}), imbalance {db} (recomputed {})", moves.join(", "), u1 - u0, b1 - b0);
    }
}
