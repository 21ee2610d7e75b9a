// Read a spreadsheet export, store it as an instance file, solve it and
// write the chosen assignment with and without names.
//
//     cargo run --example matrix_import

use seminar_vns::formats::{import_matrix, instance_to_string, solution_to_string, MatrixOptions};
use seminar_vns::search::{run_vns, SearchConfig};

const EXPORT: &str = "\
# applications, 12 points per student
name;     Auctions; Scheduling; Networks; Forecasting
Ada;      6;        6;          0;        0
Ben;      12;       0;          0;        0
Cleo;     0;        4;          4;        4
Dan;      0;        0;          12;       0
Eve;      3;        3;          3;        3
Finn;     0;        6;          0;        6
Gita;     10;       0;          2;        0
Hugo;     0;        0;          0;        12
";

fn main() {
    let options = MatrixOptions { groups: Some(vec![vec![0, 1], vec![2, 3]]), ..MatrixOptions::default() };
    let inst = import_matrix(EXPORT, &options).expect("well-formed export");
    print!("{}", instance_to_string(&inst));

    let (archive, report) = run_vns(&inst, &SearchConfig { max_evaluations: 20_000, ..SearchConfig::default() })
        .expect("search runs");
    println!("\nbest utility {}, {} alternatives", report.best_utility, archive.len());
    let (_, chosen) = archive.get(0).expect("nonempty archive");
    print!("{}", solution_to_string(&inst, chosen, true).expect("feasible"));

    let bad = EXPORT.replace("Hugo;     0;        0;          0;        12", "Hugo;     0;        0;          0;        11");
    if let Err(e) = import_matrix(&bad, &options) {
        println!("\nrejected: {e}");
    }
}
