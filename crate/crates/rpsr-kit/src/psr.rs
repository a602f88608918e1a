//! Predictive state representations built from a POMDP: outcome vectors,
//! breadth-first core-test discovery, model parameters and dynamics, and the
//! reward-accuracy analysis.

use crate::numerics::{pseudoinverse, Basis, DEFAULT_TOLERANCE};
use crate::pomdp::{Interaction, InteractionSeq, Pomdp, ZeroProbabilityInteraction};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

/// Reconstruction error above which a representation is declared unable to
/// carry the model's rewards. Separates numerical noise from genuine
/// inaccuracy: the smallest genuine error observed on the bundled corpus is
/// 0.5.
pub const DEFAULT_ACCURACY_EPSILON: f64 = 1e-6;

/// Controls for the core-test search.
#[derive(Debug, Clone)]
pub struct CoreSearchOptions {
    /// Linear-independence tolerance.
    pub tolerance: f64,
    /// Offer the empty test (all-ones outcome) to the basis before the
    /// length-one round. It is part of the test space, so the default search
    /// considers it.
    pub include_empty: bool,
    /// Present the discovered set in canonical order: sorted by length, then
    /// observation indices, then action indices. Implies `include_empty =
    /// false` so the canonical sets stay comparable across tools.
    pub canonical: bool,
}

impl Default for CoreSearchOptions {
    fn default() -> Self {
        CoreSearchOptions {
            tolerance: DEFAULT_TOLERANCE,
            include_empty: true,
            canonical: false,
        }
    }
}

impl CoreSearchOptions {
    pub fn canonical() -> Self {
        CoreSearchOptions {
            tolerance: DEFAULT_TOLERANCE,
            include_empty: false,
            canonical: true,
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }
}

/// The outcome vector of a test: per-state probabilities of observing the
/// test's observations when its actions are executed. Defined recursively:
/// the empty test maps to all-ones, and prepending an interaction applies
/// the transposed generative matrix.
pub fn outcome(m: &Pomdp, seq: &InteractionSeq) -> DVector<f64> {
    let mut u = DVector::from_element(m.num_states(), 1.0);
    for step in seq.steps().iter().rev() {
        u = m
            .generative_matrix(step.action, step.observation)
            .transpose()
            * u;
    }
    u
}

/// Sorts tests by (length, observation indices, action indices); used for
/// the canonical presentation of a discovered core set.
fn canonical_sort(tests: &mut [InteractionSeq]) {
    tests.sort_by(|x, y| {
        (x.len(), x.observations(), x.actions()).cmp(&(y.len(), y.observations(), y.actions()))
    });
}

/// Breadth-first search for a maximal linearly independent test set.
///
/// Each round extends every surviving test `q` to `aoq` for all
/// interactions in index order, keeping an extension iff its outcome is
/// independent of everything accepted so far; the search stops when a round
/// adds nothing. The result spans the outcome of every test.
pub fn discover_core_tests(m: &Pomdp, options: &CoreSearchOptions) -> Vec<InteractionSeq> {
    let mut basis = Basis::new(m.num_states(), options.tolerance);
    let mut core: Vec<InteractionSeq> = Vec::new();

    if options.include_empty && !options.canonical {
        let empty = InteractionSeq::empty();
        if basis.try_extend(outcome(m, &empty)) {
            core.push(empty);
        }
    }

    // frontier carries outcomes so each extension costs one matvec
    let mut frontier: Vec<(InteractionSeq, DVector<f64>)> = Vec::new();
    for a in 0..m.num_actions() {
        for o in 0..m.num_observations() {
            let q = InteractionSeq::from_pairs(&[(a, o)]);
            let u = outcome(m, &q);
            if basis.try_extend(u.clone()) {
                core.push(q.clone());
                frontier.push((q, u));
            }
        }
    }

    while !frontier.is_empty() {
        let mut next_frontier = Vec::new();
        for (q, u) in &frontier {
            for a in 0..m.num_actions() {
                for o in 0..m.num_observations() {
                    let extended_u = m.generative_matrix(a, o).transpose() * u;
                    if basis.try_extend(extended_u.clone()) {
                        let extended = q.prepended(Interaction::new(a, o));
                        core.push(extended.clone());
                        next_frontier.push((extended, extended_u));
                    }
                }
            }
        }
        frontier = next_frontier;
    }

    if options.canonical {
        canonical_sort(&mut core);
    }
    core
}

/// Whether the reward matrix can be represented in the core-test
/// coordinates, and how far off the best linear approximation is.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyReport {
    pub accurate: bool,
    /// Largest absolute entry of the reward reconstruction error.
    pub d_inf: f64,
    /// `d_inf` normalized by the largest absolute reward entry; zero for an
    /// all-zero reward matrix.
    pub rel_d_inf: f64,
    /// The rewards as the representation actually carries them, mapped back
    /// to state coordinates.
    pub r_tilde: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PsrBuildError {
    #[error("core tests are linearly dependent at the given tolerance")]
    DependentCoreTests,
}

/// A predictive state representation: core tests, their outcome matrix, the
/// per-interaction dynamics, the projected reward matrix, and the accuracy
/// verdict.
#[derive(Debug, Clone)]
pub struct PsrModel {
    core_tests: Vec<InteractionSeq>,
    outcomes: DMatrix<f64>,
    outcomes_pinv: DMatrix<f64>,
    updates: Vec<Vec<DMatrix<f64>>>,
    interaction_params: Vec<Vec<DVector<f64>>>,
    rewards: DMatrix<f64>,
    accuracy: AccuracyReport,
    start: DVector<f64>,
    num_actions: usize,
    num_observations: usize,
}

/// Builds the PSR over a given independent core set.
pub fn build_psr(
    m: &Pomdp,
    core_tests: Vec<InteractionSeq>,
    tolerance: f64,
    accuracy_epsilon: f64,
) -> Result<PsrModel, PsrBuildError> {
    let mut check = Basis::new(m.num_states(), tolerance);
    let columns: Vec<DVector<f64>> = core_tests.iter().map(|q| outcome(m, q)).collect();
    for u in &columns {
        if !check.try_extend(u.clone()) {
            return Err(PsrBuildError::DependentCoreTests);
        }
    }
    let outcomes = DMatrix::from_columns(&columns);
    let outcomes_pinv = pseudoinverse(&outcomes, tolerance);

    let mut updates = Vec::with_capacity(m.num_actions());
    let mut interaction_params = Vec::with_capacity(m.num_actions());
    for a in 0..m.num_actions() {
        let mut row_updates = Vec::with_capacity(m.num_observations());
        let mut row_params = Vec::with_capacity(m.num_observations());
        for o in 0..m.num_observations() {
            let g_t = m.generative_matrix(a, o).transpose();
            // columns are the parameters of the extended core tests aoq_i
            let extended = &g_t * &outcomes;
            row_updates.push(&outcomes_pinv * extended);
            let u_ao = g_t * DVector::from_element(m.num_states(), 1.0);
            row_params.push(&outcomes_pinv * u_ao);
        }
        updates.push(row_updates);
        interaction_params.push(row_params);
    }

    let rewards = &outcomes_pinv * m.reward();
    let r_tilde = &outcomes * &rewards;
    let d_inf = (m.reward() - &r_tilde).abs().max();
    let scale = m.reward().abs().max();
    let rel_d_inf = if scale > 0.0 { d_inf / scale } else { 0.0 };
    let accuracy = AccuracyReport {
        accurate: d_inf <= accuracy_epsilon,
        d_inf,
        rel_d_inf,
        r_tilde,
    };
    let start = outcomes.transpose() * m.start();

    Ok(PsrModel {
        core_tests,
        outcomes,
        outcomes_pinv,
        updates,
        interaction_params,
        rewards,
        accuracy,
        start,
        num_actions: m.num_actions(),
        num_observations: m.num_observations(),
    })
}

impl PsrModel {
    /// Discovery plus construction with default settings.
    pub fn from_pomdp(m: &Pomdp) -> Self {
        let core = discover_core_tests(m, &CoreSearchOptions::default());
        build_psr(m, core, DEFAULT_TOLERANCE, DEFAULT_ACCURACY_EPSILON)
            .expect("a freshly discovered core set is independent")
    }

    pub fn rank(&self) -> usize {
        self.core_tests.len()
    }

    pub fn core_tests(&self) -> &[InteractionSeq] {
        &self.core_tests
    }

    /// The outcome matrix; column `i` is the outcome of core test `i`.
    pub fn outcomes(&self) -> &DMatrix<f64> {
        &self.outcomes
    }

    pub fn outcomes_pinv(&self) -> &DMatrix<f64> {
        &self.outcomes_pinv
    }

    /// State-update matrix for one interaction.
    pub fn update_matrix(&self, action: usize, observation: usize) -> &DMatrix<f64> {
        &self.updates[action][observation]
    }

    /// Parameter vector of a single interaction; its dot product with a
    /// predictive state is the interaction's probability.
    pub fn interaction_param(&self, action: usize, observation: usize) -> &DVector<f64> {
        &self.interaction_params[action][observation]
    }

    /// Reward matrix in core-test coordinates (rank x actions).
    pub fn rewards(&self) -> &DMatrix<f64> {
        &self.rewards
    }

    pub fn accuracy(&self) -> &AccuracyReport {
        &self.accuracy
    }

    /// Predictive state of the start distribution.
    pub fn start_state(&self) -> &DVector<f64> {
        &self.start
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_observations(&self) -> usize {
        self.num_observations
    }

    /// Lifts a belief to its predictive state: one test probability per
    /// core test.
    pub fn predictive_state(&self, belief: &DVector<f64>) -> DVector<f64> {
        self.outcomes.transpose() * belief
    }

    /// Probability of observing `o` after taking `a` from predictive state
    /// `p`.
    pub fn observation_probability(
        &self,
        p: &DVector<f64>,
        action: usize,
        observation: usize,
    ) -> f64 {
        self.interaction_params[action][observation].dot(p)
    }

    /// Advances a predictive state through one interaction, returning the
    /// new state and the interaction probability.
    pub fn state_update(
        &self,
        p: &DVector<f64>,
        action: usize,
        observation: usize,
    ) -> Result<(DVector<f64>, f64), ZeroProbabilityInteraction> {
        let pr = self.observation_probability(p, action, observation);
        if pr <= 1e-12 {
            return Err(ZeroProbabilityInteraction);
        }
        let next = self.updates[action][observation].tr_mul(p) / pr;
        Ok((next, pr))
    }

    /// Expected immediate reward in predictive coordinates.
    pub fn reward(&self, p: &DVector<f64>, action: usize) -> f64 {
        p.dot(&self.rewards.column(action).into_owned())
    }

    /// Serializable analysis report.
    pub fn report(&self, m: &Pomdp) -> PsrReport {
        PsrReport {
            rank: self.rank(),
            core_tests: self
                .core_tests
                .iter()
                .map(|q| {
                    q.steps()
                        .iter()
                        .map(|i| {
                            (
                                m.action_names()[i.action].clone(),
                                m.observation_names()[i.observation].clone(),
                            )
                        })
                        .collect()
                })
                .collect(),
            accurate: self.accuracy.accurate,
            d_inf: self.accuracy.d_inf,
            rel_d_inf: self.accuracy.rel_d_inf,
            r_psr: matrix_rows(&self.rewards),
            r_tilde: matrix_rows(&self.accuracy.r_tilde),
        }
    }
}

pub(crate) fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|r| m.row(r).iter().copied().collect())
        .collect()
}

/// JSON form of the accuracy analysis; matrices are row-major.
#[derive(Debug, Clone, Serialize)]
pub struct PsrReport {
    pub rank: usize,
    pub core_tests: Vec<Vec<(String, String)>>,
    pub accurate: bool,
    pub d_inf: f64,
    pub rel_d_inf: f64,
    pub r_psr: Vec<Vec<f64>>,
    pub r_tilde: Vec<Vec<f64>>,
}
