//! Reward-predictive states carry rewards exactly where plain predictive
//! states cannot: compare both representations' reward read-outs against
//! the ground truth on every unit belief.
//!
//! ```bash
//! cargo run -p rpsr-kit --example rpsr_exact_rewards
//! ```

use nalgebra::DVector;
use rpsr_kit::parse_pomdp;
use rpsr_kit::psr::PsrModel;
use rpsr_kit::rpsr::RpsrModel;

fn main() {
    let path = format!("{}/fixtures/loadunload.pomdp", env!("CARGO_MANIFEST_DIR"));
    let model = parse_pomdp(&std::fs::read_to_string(path).unwrap()).unwrap();

    let psr = PsrModel::from_pomdp(&model);
    let rpsr = RpsrModel::from_pomdp(&model);
    println!(
        "test rank {} vs intent rank {} (of {} states)",
        psr.rank(),
        rpsr.rank(),
        model.num_states()
    );
    println!("\nsample core intents:");
    for intent in rpsr.core_intents().iter().take(6) {
        println!("  {}", intent.render(&model));
    }

    println!("\nper-state reward read-outs (action 0):");
    println!("{:>6} {:>8} {:>10} {:>10}", "state", "true", "psr", "rpsr");
    let mut worst_psr: f64 = 0.0;
    let mut worst_rpsr: f64 = 0.0;
    for s in 0..model.num_states() {
        let mut b = DVector::zeros(model.num_states());
        b[s] = 1.0;
        let truth = model.reward()[(s, 0)];
        let via_psr = psr.reward(&psr.predictive_state(&b), 0);
        let via_rpsr = rpsr.reward(&rpsr.reward_predictive_state(&b), 0);
        worst_psr = worst_psr.max((via_psr - truth).abs());
        worst_rpsr = worst_rpsr.max((via_rpsr - truth).abs());
        println!("{s:>6} {truth:>8.2} {via_psr:>10.2} {via_rpsr:>10.2}");
    }
    println!("\nworst error: psr {worst_psr:.3}, rpsr {worst_rpsr:.2e}");

    // the exactness survives state updates
    let mut belief = model.start().clone();
    let mut r = rpsr.reward_predictive_state(&belief);
    for &(a, o) in &[(0usize, 1usize), (0, 1), (0, 1), (0, 2)] {
        belief = model.belief_update(&belief, a, o).unwrap().0;
        r = rpsr.state_update(&r, a, o).unwrap().0;
    }
    let drift = (rpsr.reward(&r, 0) - model.history_reward(&belief, 0)).abs();
    println!("reward drift after a four-step update chain: {drift:.2e}");
}
