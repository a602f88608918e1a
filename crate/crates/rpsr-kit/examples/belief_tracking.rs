//! Track a belief through interactions and query test probabilities and
//! expected rewards along the way.
//!
//! ```bash
//! cargo run -p rpsr-kit --example belief_tracking
//! ```

use rpsr_kit::parse_pomdp;
use rpsr_kit::pomdp::InteractionSeq;

fn main() {
    let path = format!("{}/fixtures/loadunload.pomdp", env!("CARGO_MANIFEST_DIR"));
    let model = parse_pomdp(&std::fs::read_to_string(path).unwrap()).unwrap();
    let right = 0;
    let left = 1;
    let travel = 1;

    let mut belief = model.start().clone();
    println!("start belief: {}", fmt(&belief));
    println!(
        "expected reward, either move: {:.3}",
        model.history_reward(&belief, right)
    );

    // what are the odds of seeing "loading" right after moving left?
    let probe = InteractionSeq::from_pairs(&[(left, 0)]);
    println!(
        "P(loading | move left) from the start: {:.3}",
        model.test_probability(&belief, &probe)
    );

    // walk right along the corridor and watch the belief sharpen
    for step in 0..4 {
        match model.belief_update(&belief, right, travel) {
            Ok((next, pr)) => {
                belief = next;
                println!(
                    "step {step}: moved right, saw travel (p={pr:.3}) -> {}",
                    fmt(&belief)
                );
            }
            Err(_) => {
                println!("step {step}: travel became impossible, stopping");
                break;
            }
        }
    }

    // a two-step test from the current belief
    let q = InteractionSeq::from_pairs(&[(right, 2), (left, 1)]);
    println!(
        "P(unloading then travel | right, left) now: {:.3}",
        model.test_probability(&belief, &q)
    );
}

fn fmt(b: &nalgebra::DVector<f64>) -> String {
    b.iter()
        .map(|v| format!("{v:.2}"))
        .collect::<Vec<_>>()
        .join(" ")
}
