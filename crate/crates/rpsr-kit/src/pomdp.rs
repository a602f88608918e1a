//! Finite POMDP model: generative matrices, belief propagation, test
//! probabilities, and history rewards.
//!
//! The [`Pomdp`] type is the ground-truth oracle that every other module in
//! this crate is checked against. Values are immutable after construction and
//! all operations are pure, so models can be shared freely across threads.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Tolerance used when validating stochastic rows and start distributions.
/// Rows within this tolerance of summing to one are accepted and then
/// renormalized exactly, which keeps long matrix products from drifting.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Errors raised while constructing a [`Pomdp`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("transition row ({action}, {row}) sums to {sum}, expected 1")]
    TransitionRowSum { action: usize, row: usize, sum: f64 },
    #[error("observation row ({action}, {row}) sums to {sum}, expected 1")]
    ObservationRowSum { action: usize, row: usize, sum: f64 },
    #[error("start distribution sums to {0}, expected 1")]
    StartSum(f64),
    #[error("probability entry {value} in {table} is outside [0, 1]")]
    BadProbability { table: &'static str, value: f64 },
    #[error("discount {0} is outside [0, 1]")]
    BadDiscount(f64),
    #[error("{what} has shape {got}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        got: String,
        expected: String,
    },
}

/// Signalled when a belief or predictive-state update conditions on an
/// action-observation pair of (numerically) zero probability. The caller
/// decides how to proceed; updates never mask it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("zero-probability interaction")]
pub struct ZeroProbabilityInteraction;

/// A single action-observation exchange between agent and environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interaction {
    pub action: usize,
    pub observation: usize,
}

impl Interaction {
    pub fn new(action: usize, observation: usize) -> Self {
        Interaction {
            action,
            observation,
        }
    }
}

/// An ordered action-observation sequence.
///
/// The same type serves as a history (the observed past) and as a test (a
/// hypothetical future); the two are structurally identical and only differ
/// in how they are used. The empty sequence is both the empty history and
/// the empty test.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct InteractionSeq(Vec<Interaction>);

impl InteractionSeq {
    pub fn empty() -> Self {
        InteractionSeq(Vec::new())
    }

    pub fn new(steps: Vec<Interaction>) -> Self {
        InteractionSeq(steps)
    }

    pub fn from_pairs(pairs: &[(usize, usize)]) -> Self {
        InteractionSeq(pairs.iter().map(|&(a, o)| Interaction::new(a, o)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn steps(&self) -> &[Interaction] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Interaction> {
        self.0.iter()
    }

    /// Returns `ao . self`, the sequence executed one interaction earlier.
    pub fn prepended(&self, step: Interaction) -> Self {
        let mut steps = Vec::with_capacity(self.0.len() + 1);
        steps.push(step);
        steps.extend_from_slice(&self.0);
        InteractionSeq(steps)
    }

    /// Returns `self . ao`.
    pub fn appended(&self, step: Interaction) -> Self {
        let mut steps = self.0.clone();
        steps.push(step);
        InteractionSeq(steps)
    }

    /// Concatenation `self . other` (history followed by test, or h1 h2).
    pub fn concat(&self, other: &InteractionSeq) -> Self {
        let mut steps = self.0.clone();
        steps.extend_from_slice(&other.0);
        InteractionSeq(steps)
    }

    /// Action indices of the sequence, in order.
    pub fn actions(&self) -> Vec<usize> {
        self.0.iter().map(|i| i.action).collect()
    }

    /// Observation indices of the sequence, in order.
    pub fn observations(&self) -> Vec<usize> {
        self.0.iter().map(|i| i.observation).collect()
    }

    /// Renders the sequence with the model's action/observation names,
    /// e.g. `"right travel, left loading"`.
    pub fn render(&self, model: &Pomdp) -> String {
        if self.is_empty() {
            return "(empty)".to_string();
        }
        self.0
            .iter()
            .map(|i| {
                format!(
                    "{} {}",
                    model.action_names()[i.action],
                    model.observation_names()[i.observation]
                )
            })
            .collect::<Vec<_>>()
            .join(", ")
    }
}

impl FromIterator<Interaction> for InteractionSeq {
    fn from_iter<T: IntoIterator<Item = Interaction>>(iter: T) -> Self {
        InteractionSeq(iter.into_iter().collect())
    }
}

/// A finite POMDP with dense transition, observation and reward tensors.
///
/// * `transition[a]` is |S|x|S| with entry `(s, s')` = Pr(s' | s, a).
/// * `observation[a]` is |S|x|O| with entry `(s', o)` = Pr(o | a, s').
/// * `reward` is |S|x|A| with entry `(s, a)` = R(s, a).
///
/// Stochastic rows are validated to [`ROW_SUM_TOLERANCE`] on construction
/// and then renormalized exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Pomdp {
    num_states: usize,
    num_actions: usize,
    num_observations: usize,
    transition: Vec<DMatrix<f64>>,
    observation: Vec<DMatrix<f64>>,
    reward: DMatrix<f64>,
    discount: f64,
    start: DVector<f64>,
    state_names: Vec<String>,
    action_names: Vec<String>,
    observation_names: Vec<String>,
}

fn validate_and_normalize_row(
    row: &mut [f64],
    table: &'static str,
    sum_err: impl Fn(f64) -> ModelError,
) -> Result<(), ModelError> {
    for &v in row.iter() {
        if !(-0.0..=1.0 + ROW_SUM_TOLERANCE).contains(&v) || v.is_nan() {
            return Err(ModelError::BadProbability { table, value: v });
        }
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
        return Err(sum_err(sum));
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
    Ok(())
}

impl Pomdp {
    /// Builds a model from raw tensors, validating every invariant.
    pub fn new(
        transition: Vec<DMatrix<f64>>,
        observation: Vec<DMatrix<f64>>,
        reward: DMatrix<f64>,
        discount: f64,
        start: DVector<f64>,
    ) -> Result<Self, ModelError> {
        let num_actions = transition.len();
        assert!(num_actions > 0, "at least one action required");
        let num_states = transition[0].nrows();
        assert!(num_states > 0, "at least one state required");
        assert_eq!(
            observation.len(),
            num_actions,
            "observation tensor action count"
        );
        let num_observations = observation[0].ncols();
        assert!(num_observations > 0, "at least one observation required");

        if !(0.0..=1.0).contains(&discount) || discount.is_nan() {
            return Err(ModelError::BadDiscount(discount));
        }
        for (a, t) in transition.iter().enumerate() {
            if t.nrows() != num_states || t.ncols() != num_states {
                return Err(ModelError::DimensionMismatch {
                    what: "transition matrix",
                    got: format!("{}x{} (action {a})", t.nrows(), t.ncols()),
                    expected: format!("{num_states}x{num_states}"),
                });
            }
        }
        for (a, w) in observation.iter().enumerate() {
            if w.nrows() != num_states || w.ncols() != num_observations {
                return Err(ModelError::DimensionMismatch {
                    what: "observation matrix",
                    got: format!("{}x{} (action {a})", w.nrows(), w.ncols()),
                    expected: format!("{num_states}x{num_observations}"),
                });
            }
        }
        if reward.nrows() != num_states || reward.ncols() != num_actions {
            return Err(ModelError::DimensionMismatch {
                what: "reward matrix",
                got: format!("{}x{}", reward.nrows(), reward.ncols()),
                expected: format!("{num_states}x{num_actions}"),
            });
        }
        if start.len() != num_states {
            return Err(ModelError::DimensionMismatch {
                what: "start distribution",
                got: format!("{}", start.len()),
                expected: format!("{num_states}"),
            });
        }

        let mut transition = transition;
        let mut observation = observation;
        let mut start = start;
        for (a, t) in transition.iter_mut().enumerate() {
            for s in 0..num_states {
                let mut row: Vec<f64> = t.row(s).iter().copied().collect();
                validate_and_normalize_row(&mut row, "transition", |sum| {
                    ModelError::TransitionRowSum {
                        action: a,
                        row: s,
                        sum,
                    }
                })?;
                t.row_mut(s).copy_from_slice(&row);
            }
        }
        for (a, w) in observation.iter_mut().enumerate() {
            for s in 0..num_states {
                let mut row: Vec<f64> = w.row(s).iter().copied().collect();
                validate_and_normalize_row(&mut row, "observation", |sum| {
                    ModelError::ObservationRowSum {
                        action: a,
                        row: s,
                        sum,
                    }
                })?;
                w.row_mut(s).copy_from_slice(&row);
            }
        }
        {
            let mut row: Vec<f64> = start.iter().copied().collect();
            validate_and_normalize_row(&mut row, "start", ModelError::StartSum)?;
            start.copy_from_slice(&row);
        }

        Ok(Pomdp {
            num_states,
            num_actions,
            num_observations,
            transition,
            observation,
            reward,
            discount,
            start,
            state_names: (0..num_states).map(|i| i.to_string()).collect(),
            action_names: (0..num_actions).map(|i| i.to_string()).collect(),
            observation_names: (0..num_observations).map(|i| i.to_string()).collect(),
        })
    }

    /// Replaces the default numeric names.
    pub fn with_names(
        mut self,
        states: Vec<String>,
        actions: Vec<String>,
        observations: Vec<String>,
    ) -> Self {
        assert_eq!(states.len(), self.num_states);
        assert_eq!(actions.len(), self.num_actions);
        assert_eq!(observations.len(), self.num_observations);
        self.state_names = states;
        self.action_names = actions;
        self.observation_names = observations;
        self
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_observations(&self) -> usize {
        self.num_observations
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn start(&self) -> &DVector<f64> {
        &self.start
    }

    pub fn reward(&self) -> &DMatrix<f64> {
        &self.reward
    }

    /// Reward column for one action.
    pub fn reward_column(&self, action: usize) -> DVector<f64> {
        assert!(action < self.num_actions, "action {action} out of range");
        self.reward.column(action).into_owned()
    }

    pub fn transition(&self, action: usize) -> &DMatrix<f64> {
        &self.transition[action]
    }

    pub fn observation(&self, action: usize) -> &DMatrix<f64> {
        &self.observation[action]
    }

    pub fn state_names(&self) -> &[String] {
        &self.state_names
    }

    pub fn action_names(&self) -> &[String] {
        &self.action_names
    }

    pub fn observation_names(&self) -> &[String] {
        &self.observation_names
    }

    /// The generative matrix of one interaction:
    /// `G[i][j] = Pr(s'=i, o | s=j, a)`. Summed over (i, o) each column is 1.
    pub fn generative_matrix(&self, action: usize, observation: usize) -> DMatrix<f64> {
        assert!(action < self.num_actions, "action {action} out of range");
        assert!(
            observation < self.num_observations,
            "observation {observation} out of range"
        );
        let t = &self.transition[action];
        let w = &self.observation[action];
        let n = self.num_states;
        DMatrix::from_fn(n, n, |i, j| w[(i, observation)] * t[(j, i)])
    }

    /// The generative matrix of a whole sequence: the per-interaction
    /// matrices composed in execution order. The empty sequence gives the
    /// identity.
    pub fn generative_matrix_seq(&self, seq: &InteractionSeq) -> DMatrix<f64> {
        let mut g = DMatrix::identity(self.num_states, self.num_states);
        for step in seq.iter() {
            g = self.generative_matrix(step.action, step.observation) * g;
        }
        g
    }

    /// One belief-propagation step. Returns the posterior belief and the
    /// probability of the interaction. A zero-probability observation is
    /// surfaced, not masked.
    pub fn belief_update(
        &self,
        belief: &DVector<f64>,
        action: usize,
        observation: usize,
    ) -> Result<(DVector<f64>, f64), ZeroProbabilityInteraction> {
        let g = self.generative_matrix(action, observation);
        let unnormalized = g * belief;
        let pr = unnormalized.sum();
        if pr <= 1e-12 {
            return Err(ZeroProbabilityInteraction);
        }
        Ok((unnormalized / pr, pr))
    }

    /// Probability of observing a test's observation sequence when its
    /// action sequence is executed from belief `b`. The empty test has
    /// probability 1.
    pub fn test_probability(&self, belief: &DVector<f64>, seq: &InteractionSeq) -> f64 {
        let mut v = belief.clone();
        for step in seq.iter() {
            v = self.generative_matrix(step.action, step.observation) * v;
        }
        v.sum()
    }

    /// Expected immediate reward of taking `action` under belief `b`.
    pub fn history_reward(&self, belief: &DVector<f64>, action: usize) -> f64 {
        assert!(action < self.num_actions, "action {action} out of range");
        belief.dot(&self.reward.column(action).into_owned())
    }

    /// A random dense model, reproducible from the seed. Transition and
    /// observation rows are sampled from a flat Dirichlet; rewards are
    /// uniform in [0, 1).
    pub fn random(
        num_states: usize,
        num_actions: usize,
        num_observations: usize,
        seed: u64,
    ) -> Pomdp {
        assert!(num_states >= 1 && num_actions >= 1 && num_observations >= 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let transition = (0..num_actions)
            .map(|_| random_stochastic(&mut rng, num_states, num_states))
            .collect::<Vec<_>>();
        let observation = (0..num_actions)
            .map(|_| random_stochastic(&mut rng, num_states, num_observations))
            .collect::<Vec<_>>();
        let reward = DMatrix::from_fn(num_states, num_actions, |_, _| rng.gen::<f64>());
        let start = DVector::from_vec(dirichlet_row(&mut rng, num_states));
        Pomdp::new(transition, observation, reward, 0.9, start)
            .expect("random model satisfies invariants by construction")
    }

    /// A random model with a singleton observation space. Every test has
    /// probability one from every state, which collapses the predictive
    /// representation to a single stationary dimension while the rewards
    /// still vary across states.
    pub fn degenerate(num_states: usize, num_actions: usize, seed: u64) -> Pomdp {
        assert!(
            num_states >= 2,
            "degenerate fixture needs at least 2 states"
        );
        assert!(
            num_actions >= 2,
            "degenerate fixture needs at least 2 actions"
        );
        Pomdp::random(num_states, num_actions, 1, seed)
    }
}

fn dirichlet_row(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut row: Vec<f64> = (0..len).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let sum: f64 = row.iter().sum();
    for v in &mut row {
        *v /= sum;
    }
    row
}

fn random_stochastic(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    for r in 0..rows {
        let row = dirichlet_row(rng, cols);
        m.row_mut(r).copy_from_slice(&row);
    }
    m
}
