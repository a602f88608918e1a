//! Exact alpha-vector value iteration for POMDPs and for the predictive and
//! reward-predictive representations, with witness-based dominance pruning
//! and greedy policy extraction.
//!
//! All three model kinds share one backup: an action's reward column plus
//! the discounted sum of per-observation propagations of the previous
//! vector set. The POMDP propagates through transposed generative matrices;
//! the representations propagate through their update matrices. Pruning is
//! always posed over the belief simplex: representation vectors are lifted
//! through the outcome matrix first, which is exact because every reachable
//! representation state is the lift of some belief.

use crate::pomdp::Pomdp;
use crate::psr::PsrModel;
use crate::rpsr::RpsrModel;
use crate::simplex::{self, LpStatus};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Default Bellman stopping tolerance.
pub const DEFAULT_BELLMAN_EPSILON: f64 = 1e-6;
/// Default witness-program tolerance: a vector survives pruning only if it
/// beats the rest somewhere by more than this margin.
pub const DEFAULT_LP_TOLERANCE: f64 = 1e-9;
/// Default iteration cap for [`ViModel::solve`].
pub const DEFAULT_MAX_ITERATIONS: usize = 10_000;
/// Interior probe points used (besides the simplex vertices) to measure the
/// sup-norm change between successive value functions.
const INTERIOR_PROBES: usize = 256;

/// Which state space a value function is expressed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateSpace {
    Belief,
    Predictive,
    RewardPredictive,
}

impl std::fmt::Display for StateSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StateSpace::Belief => write!(f, "belief"),
            StateSpace::Predictive => write!(f, "predictive"),
            StateSpace::RewardPredictive => write!(f, "reward-predictive"),
        }
    }
}

/// One linear piece of a value function, tagged with the root action of the
/// policy that induces it.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaVector {
    pub action: usize,
    pub values: DVector<f64>,
}

impl AlphaVector {
    pub fn new(action: usize, values: DVector<f64>) -> Self {
        AlphaVector { action, values }
    }
}

/// A pruned set of alpha vectors plus solver bookkeeping.
#[derive(Debug, Clone)]
pub struct ValueFunction {
    pub space: StateSpace,
    pub vectors: Vec<AlphaVector>,
    /// Number of backups the set represents (the reward-only set counts as
    /// horizon one).
    pub horizon: usize,
    /// Last sup-norm change measured over the probe points.
    pub residual: f64,
    pub converged: bool,
}

impl ValueFunction {
    /// Max over alpha vectors at `x`.
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        self.vectors
            .iter()
            .map(|a| a.values.dot(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Action tag of the maximizing vector; exact ties break to the lowest
    /// action index.
    pub fn greedy_action(&self, x: &DVector<f64>) -> usize {
        let mut best_value = f64::NEG_INFINITY;
        let mut best_action = usize::MAX;
        for alpha in &self.vectors {
            let v = alpha.values.dot(x);
            if v > best_value || (v == best_value && alpha.action < best_action) {
                best_value = v;
                best_action = alpha.action;
            }
        }
        best_action
    }

    /// Best value achievable at `x` restricted to vectors with a given root
    /// action; `None` when no vector carries the action.
    pub fn action_value(&self, x: &DVector<f64>, action: usize) -> Option<f64> {
        self.vectors
            .iter()
            .filter(|a| a.action == action)
            .map(|a| a.values.dot(x))
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
    }

    pub fn report(&self) -> ValueFunctionReport {
        ValueFunctionReport {
            space: self.space,
            horizon: self.horizon,
            residual: self.residual,
            converged: self.converged,
            vectors: self
                .vectors
                .iter()
                .map(|a| AlphaVectorReport {
                    action: a.action,
                    values: a.values.iter().copied().collect(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AlphaVectorReport {
    pub action: usize,
    pub values: Vec<f64>,
}

/// JSON form of a value function.
#[derive(Debug, Clone, Serialize)]
pub struct ValueFunctionReport {
    pub space: StateSpace,
    pub horizon: usize,
    pub residual: f64,
    pub converged: bool,
    pub vectors: Vec<AlphaVectorReport>,
}

/// The parameters value iteration runs on, shared by all three model kinds:
/// reward columns, per-interaction propagators, and the lift that maps the
/// model's state polytope back over the belief simplex.
#[derive(Debug, Clone)]
pub struct ViModel {
    space: StateSpace,
    discount: f64,
    /// dim x actions; column `a` is the reward vector of action `a`.
    rewards: DMatrix<f64>,
    /// `[action][observation]`, each dim x dim, applied to successor alpha
    /// vectors during a backup.
    propagators: Vec<Vec<DMatrix<f64>>>,
    /// states x dim; alpha vectors are lifted through this before pruning
    /// and convergence probing.
    lift: DMatrix<f64>,
}

impl ViModel {
    pub fn from_pomdp(m: &Pomdp) -> Self {
        let propagators = (0..m.num_actions())
            .map(|a| {
                (0..m.num_observations())
                    .map(|o| m.generative_matrix(a, o).transpose())
                    .collect()
            })
            .collect();
        ViModel {
            space: StateSpace::Belief,
            discount: m.discount(),
            rewards: m.reward().clone(),
            propagators,
            lift: DMatrix::identity(m.num_states(), m.num_states()),
        }
    }

    pub fn from_psr(psr: &PsrModel, discount: f64) -> Self {
        let propagators = (0..psr.num_actions())
            .map(|a| {
                (0..psr.num_observations())
                    .map(|o| psr.update_matrix(a, o).clone())
                    .collect()
            })
            .collect();
        ViModel {
            space: StateSpace::Predictive,
            discount,
            rewards: psr.rewards().clone(),
            propagators,
            lift: psr.outcomes().clone(),
        }
    }

    pub fn from_rpsr(rpsr: &RpsrModel, discount: f64) -> Self {
        let propagators = (0..rpsr.num_actions())
            .map(|a| {
                (0..rpsr.num_observations())
                    .map(|o| rpsr.update_matrix(a, o).clone())
                    .collect()
            })
            .collect();
        ViModel {
            space: StateSpace::RewardPredictive,
            discount,
            rewards: rpsr.rewards().clone(),
            propagators,
            lift: rpsr.outcomes().clone(),
        }
    }

    pub fn space(&self) -> StateSpace {
        self.space
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn num_actions(&self) -> usize {
        self.rewards.ncols()
    }

    pub fn num_observations(&self) -> usize {
        self.propagators[0].len()
    }

    pub fn dim(&self) -> usize {
        self.rewards.nrows()
    }

    pub fn lift(&self) -> &DMatrix<f64> {
        &self.lift
    }

    pub fn reward_vector(&self, action: usize) -> DVector<f64> {
        self.rewards.column(action).into_owned()
    }

    pub fn propagator(&self, action: usize, observation: usize) -> &DMatrix<f64> {
        &self.propagators[action][observation]
    }

    /// The horizon-one set: one reward vector per action.
    pub fn base_vectors(&self) -> Vec<AlphaVector> {
        (0..self.num_actions())
            .map(|a| AlphaVector::new(a, self.reward_vector(a)))
            .collect()
    }

    /// One exact backup. Per action the cross-sum over observation choices
    /// is built incrementally with intermediate pruning; the union over
    /// actions is pruned again.
    pub fn backup(&self, current: &[AlphaVector], lp_tolerance: f64) -> Vec<AlphaVector> {
        assert!(!current.is_empty(), "backup needs a non-empty vector set");
        let mut union: Vec<AlphaVector> = Vec::new();
        for a in 0..self.num_actions() {
            let mut acc = vec![AlphaVector::new(a, self.reward_vector(a))];
            if self.discount > 0.0 {
                for o in 0..self.num_observations() {
                    let propagated: Vec<DVector<f64>> = current
                        .iter()
                        .map(|alpha| self.discount * (self.propagator(a, o) * &alpha.values))
                        .collect();
                    let mut crossed = Vec::with_capacity(acc.len() * propagated.len());
                    for base in &acc {
                        for add in &propagated {
                            crossed.push(AlphaVector::new(a, &base.values + add));
                        }
                    }
                    acc = prune(crossed, &self.lift, lp_tolerance);
                }
            }
            union.extend(acc);
        }
        prune(union, &self.lift, lp_tolerance)
    }

    /// Deterministic probe points: the simplex vertices plus a fixed
    /// low-discrepancy set of interior beliefs, all lifted into the model's
    /// space.
    fn probe_points(&self) -> Vec<DVector<f64>> {
        let n = self.lift.nrows();
        let mut points: Vec<DVector<f64>> = Vec::with_capacity(n + INTERIOR_PROBES);
        for s in 0..n {
            points.push(self.lift.row(s).transpose());
        }
        for b in interior_beliefs(n, INTERIOR_PROBES) {
            points.push(self.lift.transpose() * b);
        }
        points
    }

    /// Runs backups until the sup-norm change over the probe points drops
    /// below `eps * (1 - gamma) / (2 gamma)` or the iteration cap is hit.
    /// Non-convergence is reported through the returned flags, not an error.
    pub fn solve(&self, options: &SolveOptions) -> ValueFunction {
        let probes = self.probe_points();
        let threshold = if self.discount > 0.0 {
            options.bellman_epsilon * (1.0 - self.discount) / (2.0 * self.discount)
        } else {
            f64::INFINITY
        };

        let mut vectors = prune(self.base_vectors(), &self.lift, options.lp_tolerance);
        let mut horizon = 1usize;
        let mut values: Vec<f64> = probes.iter().map(|x| max_value(&vectors, x)).collect();
        let mut residual = f64::INFINITY;

        while horizon < options.max_iterations {
            let next = self.backup(&vectors, options.lp_tolerance);
            horizon += 1;
            let next_values: Vec<f64> = probes.iter().map(|x| max_value(&next, x)).collect();
            residual = values
                .iter()
                .zip(&next_values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            vectors = next;
            values = next_values;
            if residual <= threshold {
                return ValueFunction {
                    space: self.space,
                    vectors,
                    horizon,
                    residual,
                    converged: true,
                };
            }
        }
        let converged = residual <= threshold;
        ValueFunction {
            space: self.space,
            vectors,
            horizon,
            residual,
            converged,
        }
    }
}

/// Stopping parameters for [`ViModel::solve`].
#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub bellman_epsilon: f64,
    pub lp_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            bellman_epsilon: DEFAULT_BELLMAN_EPSILON,
            lp_tolerance: DEFAULT_LP_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

fn max_value(vectors: &[AlphaVector], x: &DVector<f64>) -> f64 {
    vectors
        .iter()
        .map(|a| a.values.dot(x))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Keeps exactly the vectors that strictly attain the maximum somewhere on
/// the polytope `{ lift^T b : b in simplex }`.
///
/// Stage one removes exact duplicates and pointwise-dominated vectors
/// (comparing lifted values, which is sound on the whole polytope). Stage
/// two runs exact witness programs over the belief simplex: a vector is kept
/// iff some belief prefers it to everything kept so far by more than the
/// tolerance, and the vector moved into the kept set is the one maximal at
/// that witness. Input order is fixed by sorting first, so the result does
/// not depend on how the caller assembled the set.
pub fn prune(
    vectors: Vec<AlphaVector>,
    lift: &DMatrix<f64>,
    lp_tolerance: f64,
) -> Vec<AlphaVector> {
    if vectors.len() <= 1 {
        return vectors;
    }
    let mut items: Vec<(AlphaVector, DVector<f64>)> = vectors
        .into_iter()
        .map(|a| {
            let lifted = lift * &a.values;
            (a, lifted)
        })
        .collect();

    items.sort_by(|x, y| {
        let vx = x.1.as_slice();
        let vy = y.1.as_slice();
        vx.partial_cmp(vy)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.0.action.cmp(&y.0.action))
    });

    // exact duplicate and pointwise-domination removal; ties keep the
    // lowest action tag, which the sort put first
    let mut filtered: Vec<(AlphaVector, DVector<f64>)> = Vec::with_capacity(items.len());
    'outer: for (i, item) in items.iter().enumerate() {
        for (j, other) in items.iter().enumerate() {
            if i == j {
                continue;
            }
            let dominated = other.1.iter().zip(item.1.iter()).all(|(o, s)| o >= s);
            if dominated {
                let equal = other.1 == item.1;
                if !equal || j < i {
                    continue 'outer;
                }
            }
        }
        filtered.push(item.clone());
    }

    let mut kept: Vec<(AlphaVector, DVector<f64>)> = Vec::with_capacity(filtered.len());
    let mut pending = filtered;
    while let Some(candidate) = pending.first() {
        let witness = find_witness(&candidate.1, &kept, lp_tolerance);
        match witness {
            Some(b) => {
                // move the vector that wins at the witness point
                let mut best = 0usize;
                let mut best_value = f64::NEG_INFINITY;
                for (idx, item) in pending.iter().enumerate() {
                    let v = item.1.dot(&b);
                    if v > best_value {
                        best_value = v;
                        best = idx;
                    }
                }
                kept.push(pending.remove(best));
            }
            None => {
                pending.remove(0);
            }
        }
    }
    kept.sort_by(|x, y| {
        x.0.action.cmp(&y.0.action).then(
            x.1.as_slice()
                .partial_cmp(y.1.as_slice())
                .unwrap_or(std::cmp::Ordering::Equal),
        )
    });
    kept.into_iter().map(|(a, _)| a).collect()
}

/// A belief where `candidate` beats every kept vector by more than the
/// tolerance, if one exists. With nothing kept yet any belief works.
///
/// The margin variable is shifted by a bound on its magnitude so every
/// variable stays non-negative; a free-variable split would hand the
/// simplex a pair of mirrored columns that misbehave on the degenerate
/// vertices these programs live on.
fn find_witness(
    candidate: &DVector<f64>,
    kept: &[(AlphaVector, DVector<f64>)],
    lp_tolerance: f64,
) -> Option<DVector<f64>> {
    let n = candidate.len();
    if kept.is_empty() {
        return Some(DVector::from_element(n, 1.0 / n as f64));
    }
    let k = kept.len();
    let mut shift = 1.0f64;
    for (_, other) in kept {
        for j in 0..n {
            shift = shift.max((candidate[j] - other[j]).abs() + 1.0);
        }
    }
    // vars: b (n), shifted margin, slacks (k); rows:
    //   sum(b) = 1
    //   -d_i . b + margin + s_i = shift      (margin = shift + true margin)
    let nvars = n + 1 + k;
    let mut rows = Vec::with_capacity(k + 1);
    let mut simplex_row = vec![0.0; nvars];
    simplex_row[..n].fill(1.0);
    rows.push(simplex_row);
    for (i, (_, other)) in kept.iter().enumerate() {
        let mut row = vec![0.0; nvars];
        for j in 0..n {
            row[j] = other[j] - candidate[j];
        }
        row[n] = 1.0;
        row[n + 1 + i] = 1.0;
        rows.push(row);
    }
    let mut c = vec![0.0; nvars];
    c[n] = 1.0;
    let mut rhs = vec![shift; k + 1];
    rhs[0] = 1.0;

    let sol = simplex::maximize(&c, &rows, &rhs);
    debug_assert!(
        sol.status == LpStatus::Optimal,
        "witness program is always feasible"
    );
    if sol.status != LpStatus::Optimal || sol.objective - shift <= lp_tolerance {
        return None;
    }
    let mut b = DVector::from_fn(n, |i, _| sol.x[i].max(0.0));
    let total = b.sum();
    if total > 0.0 {
        b /= total;
    }
    Some(b)
}

/// Fixed low-discrepancy interior beliefs, reproducible across runs: a
/// Kronecker sequence mapped onto the simplex through exponential spacings.
fn interior_beliefs(dim: usize, count: usize) -> Vec<DVector<f64>> {
    // generalized golden ratio: unique positive root of x^(d+1) = x + 1
    let mut phi = 1.5f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (dim as f64 + 1.0));
    }
    let alphas: Vec<f64> = (1..=dim).map(|j| phi.powi(-(j as i32)).fract()).collect();
    (0..count)
        .map(|i| {
            let mut b = DVector::from_fn(dim, |j, _| {
                let u = (0.5 + (i as f64 + 1.0) * alphas[j])
                    .fract()
                    .clamp(1e-12, 1.0 - 1e-12);
                -u.ln()
            });
            let total = b.sum();
            b /= total;
            b
        })
        .collect()
}
