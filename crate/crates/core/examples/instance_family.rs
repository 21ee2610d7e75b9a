// Derive instances of 30 to 45 students from one base by dropping students
// or duplicating their preference rows, and show which moves stay usable.
//
//     cargo run --example instance_family

use seminar_vns::instgen::{derive_family, random_instance};
use seminar_vns::neighborhoods::exclusions;

fn main() {
    let base = random_instance(34, 15, 100, 4, 1).expect("valid parameters");
    for n in 30..=45 {
        let inst = derive_family(&base, n, n as u64).expect("valid target");
        let excluded: Vec<String> = exclusions(&inst).iter().map(|e| format!("{} ({})", e.kind, e.reason)).collect();
        println!(
            "n{n}: minima {:?}.., maxima {:?}..  {}",
            &inst.min_students()[..3],
            &inst.max_students()[..3],
            if excluded.is_empty() { "all moves usable".to_string() } else { excluded.join(", ") }
        );
    }
}
