// Runs the examples so they cannot rot.

macro_rules! example {
    ($name:ident) => {
        mod $name {
            include!(concat!("../examples/", stringify!($name), ".rs"));

            pub(super) fn run() {
                main()
            }
        }

        #[test]
        fn $name() {
            $name::run();
        }
    };
}

example!(solve_single_objective);
example!(bi_objective_frontier);
example!(exact_oracle);
example!(instance_family);
example!(benchmark_table);
example!(delta_evaluation);
example!(team_wishes);
example!(matrix_import);
example!(progress_and_cancel);
