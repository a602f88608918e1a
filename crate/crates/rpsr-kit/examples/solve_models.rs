//! Solve the corridor domain three ways -- over beliefs, predictive states,
//! and reward-predictive states -- and compare the greedy policies.
//!
//! ```bash
//! cargo run --release -p rpsr-kit --example solve_models
//! ```

use rpsr_kit::parse_pomdp;
use rpsr_kit::psr::PsrModel;
use rpsr_kit::rpsr::RpsrModel;
use rpsr_kit::value_iteration::{SolveOptions, ViModel};

fn main() {
    let path = format!("{}/fixtures/loadunload.pomdp", env!("CARGO_MANIFEST_DIR"));
    let model = parse_pomdp(&std::fs::read_to_string(path).unwrap()).unwrap();
    let psr = PsrModel::from_pomdp(&model);
    let rpsr = RpsrModel::from_pomdp(&model);
    let options = SolveOptions::default();

    let pomdp_vf = ViModel::from_pomdp(&model).solve(&options);
    let psr_vf = ViModel::from_psr(&psr, model.discount()).solve(&options);
    let rpsr_vf = ViModel::from_rpsr(&rpsr, model.discount()).solve(&options);

    for vf in [&pomdp_vf, &psr_vf, &rpsr_vf] {
        println!(
            "{:<18} horizon={:<4} vectors={:<3} residual={:.2e} converged={}",
            vf.space.to_string(),
            vf.horizon,
            vf.vectors.len(),
            vf.residual,
            vf.converged
        );
    }

    let b0 = model.start();
    println!("\nvalue of the uniform start:");
    println!("  belief space:            {:.4}", pomdp_vf.value(b0));
    println!(
        "  predictive space:        {:.4}",
        psr_vf.value(&psr.predictive_state(b0))
    );
    println!(
        "  reward-predictive space: {:.4}",
        rpsr_vf.value(&rpsr.reward_predictive_state(b0))
    );

    // sample beliefs and count greedy agreements
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let mut agree_rpsr = 0;
    let mut agree_psr = 0;
    let total = 500;
    for _ in 0..total {
        let mut b = nalgebra::DVector::from_fn(model.num_states(), |_, _| {
            -(1.0f64 - rng.gen::<f64>()).ln()
        });
        b /= b.sum();
        let a0 = pomdp_vf.greedy_action(&b);
        if rpsr_vf.greedy_action(&rpsr.reward_predictive_state(&b)) == a0 {
            agree_rpsr += 1;
        }
        if psr_vf.greedy_action(&psr.predictive_state(&b)) == a0 {
            agree_psr += 1;
        }
    }
    println!("\ngreedy agreement with the belief-space policy over {total} beliefs:");
    println!("  reward-predictive: {agree_rpsr}/{total}");
    println!("  plain predictive:  {agree_psr}/{total} (its projected rewards changed the task)");
}
