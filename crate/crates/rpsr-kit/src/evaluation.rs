//! Monte-Carlo policy evaluation: run policies against the environment and
//! score each trajectory under the POMDP, predictive, and reward-predictive
//! reward semantics.
//!
//! Scoring is expectation-based: each scorer replays the action-observation
//! sequence through its own state tracker and accumulates the discounted
//! expected reward its model assigns at every step. The representations only
//! define expected rewards given history, so this is the one semantics all
//! three scorers share; the POMDP scorer uses its belief the same way to
//! match. Policies see actions and observations only, never the latent
//! state or any reward signal.

use crate::pomdp::{Pomdp, ZeroProbabilityInteraction};
use crate::psr::PsrModel;
use crate::rpsr::RpsrModel;
use crate::value_iteration::ValueFunction;
use nalgebra::DVector;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// One environment step as recorded in a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStep {
    pub action: usize,
    pub observation: usize,
    /// Latent state after the transition (diagnostics only; scorers never
    /// read it).
    pub next_state: usize,
    /// Sampled-state reward R(s, a) at the moment the action was taken.
    pub reward: f64,
}

/// A simulated episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub start_state: usize,
    pub steps: Vec<TraceStep>,
}

/// Which policy produced a column of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyTag {
    Random,
    PomdpVi,
    PsrVi,
    RpsrVi,
}

impl PolicyTag {
    pub const ALL: [PolicyTag; 4] = [
        PolicyTag::Random,
        PolicyTag::PomdpVi,
        PolicyTag::PsrVi,
        PolicyTag::RpsrVi,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            PolicyTag::Random => "random",
            PolicyTag::PomdpVi => "pomdp-vi",
            PolicyTag::PsrVi => "psr-vi",
            PolicyTag::RpsrVi => "rpsr-vi",
        }
    }
}

/// Which reward model scored a row of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScorerTag {
    Pomdp,
    Psr,
    Rpsr,
}

impl ScorerTag {
    pub const ALL: [ScorerTag; 3] = [ScorerTag::Pomdp, ScorerTag::Psr, ScorerTag::Rpsr];

    pub fn label(&self) -> &'static str {
        match self {
            ScorerTag::Pomdp => "pomdp",
            ScorerTag::Psr => "psr",
            ScorerTag::Rpsr => "rpsr",
        }
    }
}

/// A state tracker: the belief or one of its representation lifts, advanced
/// by observed interactions.
enum Tracker<'a> {
    Belief {
        model: &'a Pomdp,
        state: DVector<f64>,
    },
    Psr {
        model: &'a PsrModel,
        state: DVector<f64>,
    },
    Rpsr {
        model: &'a RpsrModel,
        state: DVector<f64>,
    },
}

impl<'a> Tracker<'a> {
    fn belief(model: &'a Pomdp) -> Self {
        Tracker::Belief {
            model,
            state: model.start().clone(),
        }
    }

    fn psr(model: &'a PsrModel) -> Self {
        Tracker::Psr {
            model,
            state: model.start_state().clone(),
        }
    }

    fn rpsr(model: &'a RpsrModel) -> Self {
        Tracker::Rpsr {
            model,
            state: model.start_state().clone(),
        }
    }

    fn state(&self) -> &DVector<f64> {
        match self {
            Tracker::Belief { state, .. }
            | Tracker::Psr { state, .. }
            | Tracker::Rpsr { state, .. } => state,
        }
    }

    fn expected_reward(&self, action: usize) -> f64 {
        match self {
            Tracker::Belief { model, state } => model.history_reward(state, action),
            Tracker::Psr { model, state } => model.reward(state, action),
            Tracker::Rpsr { model, state } => model.reward(state, action),
        }
    }

    fn update(
        &mut self,
        action: usize,
        observation: usize,
    ) -> Result<(), ZeroProbabilityInteraction> {
        match self {
            Tracker::Belief { model, state } => {
                let (next, _) = model.belief_update(state, action, observation)?;
                *state = next;
            }
            Tracker::Psr { model, state } => {
                let (next, _) = model.state_update(state, action, observation)?;
                *state = next;
            }
            Tracker::Rpsr { model, state } => {
                let (next, _) = model.state_update(state, action, observation)?;
                *state = next;
            }
        }
        Ok(())
    }
}

/// A policy the simulator can run: uniform-random, or greedy over a value
/// function with the matching state tracker.
#[derive(Clone, Copy)]
pub enum PolicySpec<'a> {
    Random,
    PomdpGreedy {
        vf: &'a ValueFunction,
        model: &'a Pomdp,
    },
    PsrGreedy {
        vf: &'a ValueFunction,
        model: &'a PsrModel,
    },
    RpsrGreedy {
        vf: &'a ValueFunction,
        model: &'a RpsrModel,
    },
}

enum PolicyState<'a> {
    Random {
        num_actions: usize,
    },
    Greedy {
        vf: &'a ValueFunction,
        tracker: Tracker<'a>,
    },
}

impl<'a> PolicySpec<'a> {
    fn start(&self, m: &'a Pomdp) -> PolicyState<'a> {
        match self {
            PolicySpec::Random => PolicyState::Random {
                num_actions: m.num_actions(),
            },
            PolicySpec::PomdpGreedy { vf, model } => PolicyState::Greedy {
                vf,
                tracker: Tracker::belief(model),
            },
            PolicySpec::PsrGreedy { vf, model } => PolicyState::Greedy {
                vf,
                tracker: Tracker::psr(model),
            },
            PolicySpec::RpsrGreedy { vf, model } => PolicyState::Greedy {
                vf,
                tracker: Tracker::rpsr(model),
            },
        }
    }
}

impl PolicyState<'_> {
    fn choose(&self, rng: &mut ChaCha8Rng) -> usize {
        match self {
            PolicyState::Random { num_actions } => rng.gen_range(0..*num_actions),
            PolicyState::Greedy { vf, tracker } => vf.greedy_action(tracker.state()),
        }
    }

    fn observe(&mut self, action: usize, observation: usize) {
        if let PolicyState::Greedy { tracker, .. } = self {
            tracker
                .update(action, observation)
                .expect("observed interaction has positive probability in the generating model");
        }
    }
}

fn sample_index(rng: &mut ChaCha8Rng, weights: impl Iterator<Item = f64>) -> usize {
    let draw: f64 = rng.gen();
    let mut cumulative = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        cumulative += w;
        last = i;
        if draw < cumulative {
            return i;
        }
    }
    last
}

/// Runs one episode. The environment consumes stream `2 * episode` of the
/// seed and the policy stream `2 * episode + 1`, so every policy faces the
/// same start-state and transition draws for a given episode index.
fn run_episode(
    m: &Pomdp,
    policy: &PolicySpec<'_>,
    steps: usize,
    seed: u64,
    episode: u64,
) -> EpisodeTrace {
    let mut env_rng = ChaCha8Rng::seed_from_u64(seed);
    env_rng.set_stream(2 * episode);
    let mut policy_rng = ChaCha8Rng::seed_from_u64(seed);
    policy_rng.set_stream(2 * episode + 1);

    let mut state = sample_index(&mut env_rng, m.start().iter().copied());
    let start_state = state;
    let mut policy_state = policy.start(m);
    let mut trace = Vec::with_capacity(steps);
    for _ in 0..steps {
        let action = policy_state.choose(&mut policy_rng);
        let reward = m.reward()[(state, action)];
        let next_state = sample_index(
            &mut env_rng,
            m.transition(action).row(state).iter().copied(),
        );
        let observation = sample_index(
            &mut env_rng,
            m.observation(action).row(next_state).iter().copied(),
        );
        policy_state.observe(action, observation);
        trace.push(TraceStep {
            action,
            observation,
            next_state,
            reward,
        });
        state = next_state;
    }
    EpisodeTrace {
        start_state,
        steps: trace,
    }
}

/// Simulates a batch of episodes. Deterministic for a given seed regardless
/// of thread count: per-episode generators are derived by a counter-based
/// stream split and results land in episode order.
pub fn simulate(
    m: &Pomdp,
    policy: &PolicySpec<'_>,
    episodes: usize,
    steps: usize,
    seed: u64,
) -> Vec<EpisodeTrace> {
    (0..episodes)
        .into_par_iter()
        .map(|e| run_episode(m, policy, steps, seed, e as u64))
        .collect()
}

/// A scorer: one of the three reward models.
#[derive(Clone, Copy)]
pub enum Scorer<'a> {
    Pomdp(&'a Pomdp),
    Psr(&'a PsrModel),
    Rpsr(&'a RpsrModel),
}

/// Replays a trace through the scorer's state tracker, accumulating the
/// discounted expected reward at each step.
pub fn score_trace(trace: &EpisodeTrace, scorer: &Scorer<'_>, discount: f64) -> f64 {
    let mut tracker = match scorer {
        Scorer::Pomdp(m) => Tracker::belief(m),
        Scorer::Psr(m) => Tracker::psr(m),
        Scorer::Rpsr(m) => Tracker::rpsr(m),
    };
    let mut total = 0.0;
    let mut weight = 1.0;
    for step in &trace.steps {
        total += weight * tracker.expected_reward(step.action);
        tracker
            .update(step.action, step.observation)
            .expect("trace was generated by the same model");
        weight *= discount;
    }
    total
}

/// Mean and standard deviation of per-episode returns for one
/// (scorer, policy) cell. The standard deviation uses the sample (n - 1)
/// convention.
#[derive(Debug, Clone, Serialize)]
pub struct ReturnEstimate {
    pub scorer: ScorerTag,
    pub policy: PolicyTag,
    pub mean: f64,
    pub std: f64,
    pub episodes: usize,
}

fn estimate(scorer: ScorerTag, policy: PolicyTag, returns: &[f64]) -> ReturnEstimate {
    let n = returns.len();
    assert!(n > 0);
    // numerically stable one-pass accumulation
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (i, &x) in returns.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (i as f64 + 1.0);
        m2 += delta * (x - mean);
    }
    let std = if n > 1 {
        (m2 / (n as f64 - 1.0)).sqrt()
    } else {
        0.0
    };
    ReturnEstimate {
        scorer,
        policy,
        mean,
        std,
        episodes: n,
    }
}

/// Everything cross-evaluation needs: the environment plus the two
/// representations and the three solved value functions.
#[derive(Clone, Copy)]
pub struct ModelSet<'a> {
    pub pomdp: &'a Pomdp,
    pub psr: &'a PsrModel,
    pub rpsr: &'a RpsrModel,
    pub pomdp_vf: &'a ValueFunction,
    pub psr_vf: &'a ValueFunction,
    pub rpsr_vf: &'a ValueFunction,
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub episodes: usize,
    pub steps: usize,
    pub seed: u64,
    /// Discount applied while scoring; use 1.0 for undiscounted returns.
    pub discount: f64,
}

impl EvalOptions {
    pub fn new(episodes: usize, steps: usize, seed: u64, discount: f64) -> Self {
        EvalOptions {
            episodes,
            steps,
            seed,
            discount,
        }
    }
}

/// The scorer-by-policy grid of return estimates.
#[derive(Debug, Clone, Serialize)]
pub struct EvaluationGrid {
    pub episodes: usize,
    pub steps: usize,
    pub seed: u64,
    pub discount: f64,
    /// `cells[scorer][policy]` following the order of the tag constants.
    pub cells: Vec<Vec<ReturnEstimate>>,
}

impl EvaluationGrid {
    pub fn cell(&self, scorer: ScorerTag, policy: PolicyTag) -> &ReturnEstimate {
        let r = ScorerTag::ALL.iter().position(|s| *s == scorer).unwrap();
        let c = PolicyTag::ALL.iter().position(|p| *p == policy).unwrap();
        &self.cells[r][c]
    }

    /// The best-mean policy for each scorer row.
    pub fn best_policies(&self) -> Vec<(ScorerTag, PolicyTag)> {
        self.cells
            .iter()
            .zip(ScorerTag::ALL)
            .map(|(row, scorer)| {
                let best = row
                    .iter()
                    .max_by(|a, b| a.mean.partial_cmp(&b.mean).unwrap())
                    .expect("row is non-empty");
                (scorer, best.policy)
            })
            .collect()
    }
}

/// Runs every policy for the configured number of episodes and scores every
/// trace under all three reward models.
pub fn cross_evaluate(models: &ModelSet<'_>, options: &EvalOptions) -> EvaluationGrid {
    let policies: Vec<(PolicyTag, PolicySpec<'_>)> = vec![
        (PolicyTag::Random, PolicySpec::Random),
        (
            PolicyTag::PomdpVi,
            PolicySpec::PomdpGreedy {
                vf: models.pomdp_vf,
                model: models.pomdp,
            },
        ),
        (
            PolicyTag::PsrVi,
            PolicySpec::PsrGreedy {
                vf: models.psr_vf,
                model: models.psr,
            },
        ),
        (
            PolicyTag::RpsrVi,
            PolicySpec::RpsrGreedy {
                vf: models.rpsr_vf,
                model: models.rpsr,
            },
        ),
    ];
    let scorers: Vec<(ScorerTag, Scorer<'_>)> = vec![
        (ScorerTag::Pomdp, Scorer::Pomdp(models.pomdp)),
        (ScorerTag::Psr, Scorer::Psr(models.psr)),
        (ScorerTag::Rpsr, Scorer::Rpsr(models.rpsr)),
    ];

    let mut cells: Vec<Vec<ReturnEstimate>> = vec![Vec::new(); scorers.len()];
    for (policy_tag, policy) in &policies {
        let traces = simulate(
            models.pomdp,
            policy,
            options.episodes,
            options.steps,
            options.seed,
        );
        for (row, (scorer_tag, scorer)) in scorers.iter().enumerate() {
            let returns: Vec<f64> = traces
                .par_iter()
                .map(|t| score_trace(t, scorer, options.discount))
                .collect();
            cells[row].push(estimate(*scorer_tag, *policy_tag, &returns));
        }
    }
    EvaluationGrid {
        episodes: options.episodes,
        steps: options.steps,
        seed: options.seed,
        discount: options.discount,
        cells,
    }
}
