//! Shared helpers for the integration and acceptance suites: fixture
//! loading, an independently hand-built twin of the corridor fixture, and
//! brute-force rank oracles.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rpsr_kit::pomdp::{InteractionSeq, Pomdp};
use rpsr_kit::rpsr::{intent_outcome, Intent};
use std::path::PathBuf;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn load_fixture(name: &str) -> Pomdp {
    let text = std::fs::read_to_string(fixture_path(name)).expect("fixture exists");
    rpsr_kit::parse_pomdp(&text).expect("fixture parses")
}

/// The corridor domain built directly from its dynamics, independently of
/// the parser: five positions, a fresh-event flag, deterministic moves.
/// State s = 2*pos + f; action 0 moves right, action 1 moves left;
/// observations are loading(0) / travel(1) / unloading(2) read off the
/// destination cell; states 1 and 8 pay 1.
pub fn load_unload_by_hand() -> Pomdp {
    let num_states = 10;
    // carrying status while in a state: always carrying at the loading dock,
    // never at the unloading dock, the flag in between
    let carry = |pos: i32, f: i32| -> i32 {
        if pos == 0 {
            1
        } else if pos == 4 {
            0
        } else {
            f
        }
    };
    let step = |s: usize, dir: i32| -> usize {
        let pos = (s / 2) as i32;
        let f = (s % 2) as i32;
        let next_pos = (pos + dir).clamp(0, 4);
        let c = carry(pos, f);
        let next_f = if next_pos == 0 {
            i32::from(c == 0) // fresh pickup only when arriving empty
        } else if next_pos == 4 {
            i32::from(c != 1) // fresh dropoff leaves the flag at zero
        } else {
            c
        };
        (2 * next_pos + next_f) as usize
    };
    let obs_of = |s: usize| -> usize {
        match s / 2 {
            0 => 0,
            4 => 2,
            _ => 1,
        }
    };

    let mut transition = vec![DMatrix::zeros(num_states, num_states); 2];
    for s in 0..num_states {
        transition[0][(s, step(s, 1))] = 1.0; // right
        transition[1][(s, step(s, -1))] = 1.0; // left
    }
    let mut obs = DMatrix::zeros(num_states, 3);
    for s in 0..num_states {
        obs[(s, obs_of(s))] = 1.0;
    }
    let mut reward = DMatrix::zeros(num_states, 2);
    for a in 0..2 {
        reward[(1, a)] = 1.0;
        reward[(8, a)] = 1.0;
    }
    Pomdp::new(
        transition,
        vec![obs.clone(), obs],
        reward,
        0.95,
        DVector::from_element(num_states, 0.1),
    )
    .unwrap()
    .with_names(
        (0..10).map(|i| i.to_string()).collect(),
        vec!["right".into(), "left".into()],
        vec!["loading".into(), "travel".into(), "unloading".into()],
    )
}

/// Rank of the span of all test outcomes up to the given length, by
/// stacking every outcome and counting singular values. Independent of the
/// incremental search path.
pub fn brute_force_test_rank(m: &Pomdp, max_len: usize, tol: f64) -> usize {
    let mut columns: Vec<DVector<f64>> = vec![DVector::from_element(m.num_states(), 1.0)];
    let mut level: Vec<InteractionSeq> = vec![InteractionSeq::empty()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for q in &level {
            for a in 0..m.num_actions() {
                for o in 0..m.num_observations() {
                    let extended = q.prepended(rpsr_kit::Interaction::new(a, o));
                    columns.push(rpsr_kit::psr::outcome(m, &extended));
                    next.push(extended);
                }
            }
        }
        level = next;
    }
    matrix_rank(&columns, tol)
}

/// Rank of the span of all intent outcomes with tests up to the given
/// length.
pub fn brute_force_intent_rank(m: &Pomdp, max_len: usize, tol: f64) -> usize {
    let mut columns: Vec<DVector<f64>> = Vec::new();
    let mut level: Vec<InteractionSeq> = vec![InteractionSeq::empty()];
    for len in 0..=max_len {
        if len > 0 {
            let mut next = Vec::new();
            for q in &level {
                for a in 0..m.num_actions() {
                    for o in 0..m.num_observations() {
                        next.push(q.prepended(rpsr_kit::Interaction::new(a, o)));
                    }
                }
            }
            level = next;
        }
        for q in &level {
            for z in 0..=m.num_actions() {
                columns.push(intent_outcome(m, &Intent::new(q.clone(), z)));
            }
        }
    }
    matrix_rank(&columns, tol)
}

pub fn matrix_rank(columns: &[DVector<f64>], tol: f64) -> usize {
    let m = DMatrix::from_columns(columns);
    let svd = m.svd(false, false);
    let max = svd.singular_values.max();
    if max <= 0.0 {
        return 0;
    }
    svd.singular_values
        .iter()
        .filter(|&&s| s > tol * max)
        .count()
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

/// Deterministic belief sampler for agreement checks.
pub fn random_beliefs(dim: usize, count: usize, seed: u64) -> Vec<DVector<f64>> {
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut b = DVector::from_fn(dim, |_, _| -(1.0 - rng.gen::<f64>()).ln());
            let total = b.sum();
            b /= total;
            b
        })
        .collect()
}
