//! A single-observation domain collapses every test probability to one, so
//! the predictive state is a stationary scalar and cannot carry any reward
//! signal at all -- while the reward-predictive form still reconstructs the
//! rewards exactly.
//!
//! ```bash
//! cargo run -p rpsr-kit --example degenerate_psr
//! ```

use rpsr_kit::psr::PsrModel;
use rpsr_kit::rpsr::RpsrModel;
use rpsr_kit::Pomdp;

fn main() {
    let model = Pomdp::degenerate(4, 3, 7);
    println!(
        "random model: {} states, {} actions, {} observation",
        model.num_states(),
        model.num_actions(),
        model.num_observations()
    );

    let psr = PsrModel::from_pomdp(&model);
    println!("\npredictive rank: {}", psr.rank());
    let mut p = psr.predictive_state(model.start());
    print!("predictive state after updates:");
    for a in 0..model.num_actions() {
        let (next, pr) = psr.state_update(&p, a, 0).unwrap();
        print!(" {:.3} (p={pr:.1})", next[0]);
        p = next;
    }
    println!(" -- frozen at 1 forever");

    let acc = psr.accuracy();
    println!(
        "reward reconstruction error d_inf = {:.4} (accurate: {})",
        acc.d_inf, acc.accurate
    );

    let rpsr = RpsrModel::from_pomdp(&model);
    println!("\nreward-predictive rank: {}", rpsr.rank());
    println!(
        "reward reconstruction error: {:.2e}",
        rpsr.reconstruction_error(model.reward())
    );
    println!(
        "the intent outcomes span the reward structure that the bare test\noutcomes collapsed away"
    );
}
