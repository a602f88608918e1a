//! Reward-predictive state representations: an extended action space with a
//! reserved token action unifies observation and reward emission, so the
//! representation carries expected rewards of hypothetical futures
//! ("intents") instead of bare test probabilities. Unlike the plain
//! predictive representation, this one reproduces the reward structure of
//! any finite POMDP exactly.

use crate::numerics::{pseudoinverse, Basis, DEFAULT_TOLERANCE};
use crate::pomdp::{Interaction, InteractionSeq, Pomdp, ZeroProbabilityInteraction};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

/// Spelled-out name of the token action in reports.
pub const TOKEN_ACTION_NAME: &str = "zeta";

/// A test followed by one extended action. The extended action is either a
/// real action index, or the reserved token index `num_actions` whose reward
/// is one in every state. The token can never appear inside the test portion
/// and is rejected by every simulation and policy interface.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Intent {
    pub test: InteractionSeq,
    /// Extended action: `0..num_actions` are real actions, `num_actions` is
    /// the token.
    pub final_action: usize,
}

impl Intent {
    pub fn new(test: InteractionSeq, final_action: usize) -> Self {
        Intent { test, final_action }
    }

    /// An intent with an empty test.
    pub fn immediate(final_action: usize) -> Self {
        Intent {
            test: InteractionSeq::empty(),
            final_action,
        }
    }

    pub fn targets_token(&self, num_actions: usize) -> bool {
        self.final_action == num_actions
    }

    pub fn prepended(&self, step: Interaction) -> Self {
        Intent {
            test: self.test.prepended(step),
            final_action: self.final_action,
        }
    }

    /// Renders the intent with model names, the token spelled "zeta".
    pub fn render(&self, m: &Pomdp) -> String {
        let tail = if self.targets_token(m.num_actions()) {
            TOKEN_ACTION_NAME.to_string()
        } else {
            m.action_names()[self.final_action].clone()
        };
        if self.test.is_empty() {
            tail
        } else {
            format!("{}; {}", self.test.render(m), tail)
        }
    }
}

/// Reward column of an extended action: the model's column for a real
/// action, all-ones for the token.
fn extended_reward_column(m: &Pomdp, z: usize) -> DVector<f64> {
    if z == m.num_actions() {
        DVector::from_element(m.num_states(), 1.0)
    } else {
        m.reward_column(z)
    }
}

/// The outcome vector of an intent: per-state expected reward of executing
/// the test and then paying the extended action's reward. Defined
/// recursively like test outcomes, seeded with the reward column instead of
/// all-ones.
pub fn intent_outcome(m: &Pomdp, intent: &Intent) -> DVector<f64> {
    assert!(
        intent.final_action <= m.num_actions(),
        "extended action out of range"
    );
    let mut u = extended_reward_column(m, intent.final_action);
    for step in intent.test.steps().iter().rev() {
        u = m
            .generative_matrix(step.action, step.observation)
            .transpose()
            * u;
    }
    u
}

/// Expected reward of an intent from a belief: the test probability times
/// the expected reward of the final action after the test succeeds.
pub fn intent_reward(m: &Pomdp, belief: &DVector<f64>, intent: &Intent) -> f64 {
    belief.dot(&intent_outcome(m, intent))
}

fn extended_actions(m: &Pomdp) -> std::ops::RangeInclusive<usize> {
    // real actions in declaration order, the token last
    0..=m.num_actions()
}

/// Depth-first search for a maximal linearly independent intent set: at each
/// node `q`, each extended action's outcome is tested against the
/// accumulated basis, and every acceptance recurses into all one-interaction
/// extensions of `q`.
pub fn discover_core_intents_dfs(m: &Pomdp, tolerance: f64) -> Vec<Intent> {
    let mut basis = Basis::new(m.num_states(), tolerance);
    let mut core: Vec<Intent> = Vec::new();
    // outcomes of (q, z) for every extended action z at the current node
    let root: Vec<DVector<f64>> = extended_actions(m)
        .map(|z| extended_reward_column(m, z))
        .collect();
    dfs_node(m, &InteractionSeq::empty(), &root, &mut basis, &mut core);
    core
}

fn dfs_node(
    m: &Pomdp,
    q: &InteractionSeq,
    outcomes: &[DVector<f64>],
    basis: &mut Basis,
    core: &mut Vec<Intent>,
) {
    for z in extended_actions(m) {
        if basis.try_extend(outcomes[z].clone()) {
            core.push(Intent::new(q.clone(), z));
            for a in 0..m.num_actions() {
                for o in 0..m.num_observations() {
                    let g_t = m.generative_matrix(a, o).transpose();
                    let child: Vec<DVector<f64>> = outcomes.iter().map(|u| &g_t * u).collect();
                    let child_q = q.prepended(Interaction::new(a, o));
                    dfs_node(m, &child_q, &child, basis, core);
                }
            }
        }
    }
}

/// Breadth-first variant: seed with the test-less intents, then repeatedly
/// extend every accepted intent by one leading interaction until a fixpoint.
/// Finds shorter core intents than the depth-first search and is the
/// preferred default.
pub fn discover_core_intents_bfs(m: &Pomdp, tolerance: f64) -> Vec<Intent> {
    let mut basis = Basis::new(m.num_states(), tolerance);
    let mut core: Vec<Intent> = Vec::new();
    let mut outcomes: Vec<DVector<f64>> = Vec::new();

    for z in extended_actions(m) {
        let u = extended_reward_column(m, z);
        if basis.try_extend(u.clone()) {
            core.push(Intent::immediate(z));
            outcomes.push(u);
        }
    }

    loop {
        let snapshot = core.len();
        for a in 0..m.num_actions() {
            for o in 0..m.num_observations() {
                let g_t = m.generative_matrix(a, o).transpose();
                for i in 0..snapshot {
                    let u = &g_t * &outcomes[i];
                    if basis.try_extend(u.clone()) {
                        core.push(core[i].prepended(Interaction::new(a, o)));
                        outcomes.push(u);
                    }
                }
            }
        }
        if core.len() == snapshot {
            break;
        }
    }
    core
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RpsrBuildError {
    #[error("core intents are linearly dependent at the given tolerance")]
    DependentCoreIntents,
}

/// A reward-predictive state representation.
#[derive(Debug, Clone)]
pub struct RpsrModel {
    core_intents: Vec<Intent>,
    outcomes: DMatrix<f64>,
    outcomes_pinv: DMatrix<f64>,
    updates: Vec<Vec<DMatrix<f64>>>,
    observation_params: Vec<Vec<DVector<f64>>>,
    rewards: DMatrix<f64>,
    start: DVector<f64>,
    num_actions: usize,
    num_observations: usize,
}

/// Builds the R-PSR over a given independent core intent set.
pub fn build_rpsr(
    m: &Pomdp,
    core_intents: Vec<Intent>,
    tolerance: f64,
) -> Result<RpsrModel, RpsrBuildError> {
    let mut check = Basis::new(m.num_states(), tolerance);
    let columns: Vec<DVector<f64>> = core_intents.iter().map(|i| intent_outcome(m, i)).collect();
    for u in &columns {
        if !check.try_extend(u.clone()) {
            return Err(RpsrBuildError::DependentCoreIntents);
        }
    }
    let outcomes = DMatrix::from_columns(&columns);
    let outcomes_pinv = pseudoinverse(&outcomes, tolerance);
    let ones = DVector::from_element(m.num_states(), 1.0);

    let mut updates = Vec::with_capacity(m.num_actions());
    let mut observation_params = Vec::with_capacity(m.num_actions());
    for a in 0..m.num_actions() {
        let mut row_updates = Vec::with_capacity(m.num_observations());
        let mut row_params = Vec::with_capacity(m.num_observations());
        for o in 0..m.num_observations() {
            let g_t = m.generative_matrix(a, o).transpose();
            row_updates.push(&outcomes_pinv * (&g_t * &outcomes));
            // parameter of the intent "ao then token": the interaction's
            // probability in reward-predictive coordinates
            row_params.push(&outcomes_pinv * (&g_t * &ones));
        }
        updates.push(row_updates);
        observation_params.push(row_params);
    }

    // columns are the parameters of the test-less intents, one per action
    let rewards = &outcomes_pinv * m.reward();
    let start = outcomes.transpose() * m.start();

    Ok(RpsrModel {
        core_intents,
        outcomes,
        outcomes_pinv,
        updates,
        observation_params,
        rewards,
        start,
        num_actions: m.num_actions(),
        num_observations: m.num_observations(),
    })
}

impl RpsrModel {
    /// Breadth-first discovery plus construction with default settings.
    pub fn from_pomdp(m: &Pomdp) -> Self {
        let core = discover_core_intents_bfs(m, DEFAULT_TOLERANCE);
        build_rpsr(m, core, DEFAULT_TOLERANCE)
            .expect("a freshly discovered core intent set is independent")
    }

    pub fn rank(&self) -> usize {
        self.core_intents.len()
    }

    pub fn core_intents(&self) -> &[Intent] {
        &self.core_intents
    }

    pub fn outcomes(&self) -> &DMatrix<f64> {
        &self.outcomes
    }

    pub fn outcomes_pinv(&self) -> &DMatrix<f64> {
        &self.outcomes_pinv
    }

    pub fn update_matrix(&self, action: usize, observation: usize) -> &DMatrix<f64> {
        &self.updates[action][observation]
    }

    /// Parameter of the "interaction then token" intent.
    pub fn interaction_param(&self, action: usize, observation: usize) -> &DVector<f64> {
        &self.observation_params[action][observation]
    }

    /// Reward matrix in core-intent coordinates (rank x actions).
    pub fn rewards(&self) -> &DMatrix<f64> {
        &self.rewards
    }

    /// Reward-predictive state of the start distribution.
    pub fn start_state(&self) -> &DVector<f64> {
        &self.start
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_observations(&self) -> usize {
        self.num_observations
    }

    /// Lifts a belief to its reward-predictive state: one intent reward per
    /// core intent.
    pub fn reward_predictive_state(&self, belief: &DVector<f64>) -> DVector<f64> {
        self.outcomes.transpose() * belief
    }

    pub fn observation_probability(
        &self,
        r: &DVector<f64>,
        action: usize,
        observation: usize,
    ) -> f64 {
        self.observation_params[action][observation].dot(r)
    }

    /// Advances a reward-predictive state through one interaction.
    pub fn state_update(
        &self,
        r: &DVector<f64>,
        action: usize,
        observation: usize,
    ) -> Result<(DVector<f64>, f64), ZeroProbabilityInteraction> {
        let pr = self.observation_probability(r, action, observation);
        if pr <= 1e-12 {
            return Err(ZeroProbabilityInteraction);
        }
        let next = self.updates[action][observation].tr_mul(r) / pr;
        Ok((next, pr))
    }

    /// Expected immediate reward of a real action. The token action is not
    /// executable and is rejected.
    pub fn reward(&self, r: &DVector<f64>, action: usize) -> f64 {
        assert!(
            action < self.num_actions,
            "token or out-of-range action is not executable"
        );
        r.dot(&self.rewards.column(action).into_owned())
    }

    /// Largest deviation between the model's own rewards (mapped back to
    /// state coordinates) and a reference reward matrix. Zero up to floating
    /// point for the model this representation was built from.
    pub fn reconstruction_error(&self, reference: &DMatrix<f64>) -> f64 {
        ((&self.outcomes * &self.rewards) - reference).abs().max()
    }

    /// Serializable analysis report.
    pub fn report(&self, m: &Pomdp) -> RpsrReport {
        RpsrReport {
            rank: self.rank(),
            core_intents: self
                .core_intents
                .iter()
                .map(|intent| {
                    let test = intent
                        .test
                        .steps()
                        .iter()
                        .map(|i| {
                            (
                                m.action_names()[i.action].clone(),
                                m.observation_names()[i.observation].clone(),
                            )
                        })
                        .collect();
                    let final_action = if intent.targets_token(m.num_actions()) {
                        TOKEN_ACTION_NAME.to_string()
                    } else {
                        m.action_names()[intent.final_action].clone()
                    };
                    IntentReport { test, final_action }
                })
                .collect(),
            r_rpsr: crate::psr::matrix_rows(&self.rewards),
            reconstruction_error: self.reconstruction_error(m.reward()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IntentReport {
    pub test: Vec<(String, String)>,
    #[serde(rename = "final")]
    pub final_action: String,
}

/// JSON form of the R-PSR analysis; matrices are row-major.
#[derive(Debug, Clone, Serialize)]
pub struct RpsrReport {
    pub rank: usize,
    pub core_intents: Vec<IntentReport>,
    pub r_rpsr: Vec<Vec<f64>>,
    pub reconstruction_error: f64,
}
