//! The corridor case study: discover the core tests, print their outcome
//! vectors, and show how projecting the rewards into test coordinates
//! merges states the reward function needed to keep apart.
//!
//! ```bash
//! cargo run -p rpsr-kit --example psr_case_study
//! ```

use rpsr_kit::numerics::DEFAULT_TOLERANCE;
use rpsr_kit::parse_pomdp;
use rpsr_kit::psr::{build_psr, discover_core_tests, CoreSearchOptions, DEFAULT_ACCURACY_EPSILON};

fn main() {
    let path = format!("{}/fixtures/loadunload.pomdp", env!("CARGO_MANIFEST_DIR"));
    let model = parse_pomdp(&std::fs::read_to_string(path).unwrap()).unwrap();

    let core = discover_core_tests(&model, &CoreSearchOptions::canonical());
    let psr = build_psr(&model, core, DEFAULT_TOLERANCE, DEFAULT_ACCURACY_EPSILON).unwrap();

    println!("rank {} out of {} states\n", psr.rank(), model.num_states());
    println!("{:<32} outcome", "core test");
    for (i, q) in psr.core_tests().iter().enumerate() {
        let row: Vec<String> = psr
            .outcomes()
            .column(i)
            .iter()
            .map(|v| format!("{v:.0}"))
            .collect();
        println!("{:<32} ({})", q.render(&model), row.join(" "));
    }

    println!("\nreward matrix (state: both actions):");
    print_rewards(model.reward());
    println!("\nprojected into test coordinates and back:");
    print_rewards(&psr.accuracy().r_tilde);

    let acc = psr.accuracy();
    println!("\naccurate: {}", acc.accurate);
    println!("d_inf = {:.3}, rel_d_inf = {:.3}", acc.d_inf, acc.rel_d_inf);
    println!(
        "\nstates 0/1 and 8/9 have identical rows in the outcome matrix, so the \
         \nprojection averages their rewards: a fresh pickup and a stale arrival \
         \nbecome indistinguishable, and parking at a dock looks as good as the \
         \nround trip."
    );
}

fn print_rewards(r: &nalgebra::DMatrix<f64>) {
    for a in 0..r.ncols() {
        let row: Vec<String> = r.column(a).iter().map(|v| format!("{v:.1}")).collect();
        println!("  action {a}: {}", row.join(" "));
    }
}
