//! Parse a `.pomdp` file, inspect the model, and round-trip it through the
//! serializer.
//!
//! ```bash
//! cargo run -p rpsr-kit --example parse_model
//! ```

use rpsr_kit::{parse_pomdp, serialize_pomdp};

fn main() {
    let path = format!("{}/fixtures/loadunload.pomdp", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).expect("fixture exists");
    let model = parse_pomdp(&text).expect("fixture parses");

    println!("loaded {path}");
    println!(
        "states={} actions={} observations={} discount={}",
        model.num_states(),
        model.num_actions(),
        model.num_observations(),
        model.discount()
    );
    println!("actions: {}", model.action_names().join(", "));
    println!("observations: {}", model.observation_names().join(", "));
    println!(
        "start distribution: {}",
        model
            .start()
            .iter()
            .map(|v| format!("{v:.2}"))
            .collect::<Vec<_>>()
            .join(" ")
    );

    // serialize . parse is the identity on every tensor
    let back = parse_pomdp(&serialize_pomdp(&model)).expect("round-trip parses");
    let drift = (0..model.num_actions())
        .map(|a| (model.transition(a) - back.transition(a)).abs().max())
        .fold(0.0, f64::max);
    println!("round-trip transition drift: {drift:e}");
}
