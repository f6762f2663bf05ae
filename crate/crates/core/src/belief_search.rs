//! Discrete Bayes-filter search over `N` cells.
//!
//! A single hidden object sits in one of `N` cells. Each step interrogates one
//! cell and receives a binary observation drawn from a Bernoulli
//! detection/false-alarm model. The posterior over cells is updated with
//!
//! ```text
//! p_n(x) = P(y_n | a_n, x* = x) p_{n-1}(x) / Σ_x' P(y_n | a_n, x* = x') p_{n-1}(x')
//! ```
//!
//! and the quality of the search is measured by the Shannon entropy of the
//! posterior, in bits. Control policies pick the next cell to minimise the
//! expected entropy, either greedily (one step ahead) or by exhaustive
//! finite-horizon tree search.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::scalar::Real;

/// Upper bound on the number of tree nodes visited by [`brute_force_policy`].
pub const MAX_TREE_NODES: u64 = 1_000_000;

/// Default posterior mass at which [`simulate_search`] declares success.
pub const DEFAULT_STOP_THRESHOLD: f64 = 0.99;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("belief must cover at least one cell")]
    EmptyBelief,
    #[error("belief entry {index} is invalid ({value})")]
    InvalidProbability { index: usize, value: f64 },
    #[error("belief sums to {sum}, expected 1")]
    NotNormalized { sum: f64 },
    #[error("{field} = {value} is outside [0, 1]")]
    ProbabilityOutOfRange { field: &'static str, value: f64 },
    #[error("cell {cell} is out of range for {n_cells} cells")]
    CellOutOfRange { cell: usize, n_cells: usize },
    #[error("observation contradicts the belief: evidence P(y) is zero")]
    Contradiction,
    #[error("search tree needs {nodes} nodes, budget is {budget}")]
    TreeTooLarge { nodes: u64, budget: u64 },
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, SearchError>;

/// Posterior probability vector over the search cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief<T> {
    probs: Vec<T>,
}

impl<T: Real> Belief<T> {
    /// Validates `probs` as a probability vector (sum within 1e-12 of one).
    pub fn new(probs: Vec<T>) -> Result<Self> {
        if probs.is_empty() {
            return Err(SearchError::EmptyBelief);
        }
        for (index, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < T::zero() {
                return Err(SearchError::InvalidProbability {
                    index,
                    value: p.as_f64(),
                });
            }
        }
        let sum: T = probs.iter().copied().sum();
        if (sum - T::one()).abs() > T::tol(1e-12) {
            return Err(SearchError::NotNormalized { sum: sum.as_f64() });
        }
        Ok(Self { probs })
    }

    /// Normalizes arbitrary non-negative weights into a belief.
    pub fn from_weights(weights: Vec<T>) -> Result<Self> {
        if weights.is_empty() {
            return Err(SearchError::EmptyBelief);
        }
        for (index, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < T::zero() {
                return Err(SearchError::InvalidProbability {
                    index,
                    value: w.as_f64(),
                });
            }
        }
        let total: T = weights.iter().copied().sum();
        if total <= T::zero() {
            return Err(SearchError::Contradiction);
        }
        Ok(Self {
            probs: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn uniform(n_cells: usize) -> Result<Self> {
        if n_cells == 0 {
            return Err(SearchError::EmptyBelief);
        }
        let p = T::one() / T::from_count(n_cells);
        Ok(Self {
            probs: vec![p; n_cells],
        })
    }

    pub fn delta(n_cells: usize, cell: usize) -> Result<Self> {
        if n_cells == 0 {
            return Err(SearchError::EmptyBelief);
        }
        if cell >= n_cells {
            return Err(SearchError::CellOutOfRange { cell, n_cells });
        }
        let mut probs = vec![T::zero(); n_cells];
        probs[cell] = T::one();
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn n_cells(&self) -> usize {
        self.probs.len()
    }

    pub fn max_prob(&self) -> T {
        self.probs.iter().copied().fold(T::zero(), T::max)
    }

    /// Index of the most probable cell, lowest index on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    fn check_action(&self, action: SearchAction) -> Result<()> {
        if action.cell >= self.probs.len() {
            return Err(SearchError::CellOutOfRange {
                cell: action.cell,
                n_cells: self.probs.len(),
            });
        }
        Ok(())
    }
}

/// Bernoulli detection model: `P(y = 1)` is `p_detect` on the object's cell
/// and `p_false` anywhere else.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementModel<T> {
    p_detect: T,
    p_false: T,
}

impl<T: Real> MeasurementModel<T> {
    pub fn new(p_detect: T, p_false: T) -> Result<Self> {
        for (field, value) in [("p_detect", p_detect), ("p_false", p_false)] {
            if !(value >= T::zero() && value <= T::one()) {
                return Err(SearchError::ProbabilityOutOfRange {
                    field,
                    value: value.as_f64(),
                });
            }
        }
        Ok(Self { p_detect, p_false })
    }

    /// `p_detect = 1`, `p_false = 0`.
    pub fn perfect() -> Self {
        Self {
            p_detect: T::one(),
            p_false: T::zero(),
        }
    }

    pub fn p_detect(&self) -> T {
        self.p_detect
    }

    pub fn p_false(&self) -> T {
        self.p_false
    }

    /// True when observations carry information about the object's cell.
    pub fn is_informative(&self) -> bool {
        self.p_detect != self.p_false
    }

    /// `P(y | inspected cell, object in cell x)`.
    pub fn likelihood(&self, obs: Observation, inspected: usize, object_cell: usize) -> T {
        let p_one = if inspected == object_cell {
            self.p_detect
        } else {
            self.p_false
        };
        match obs {
            Observation::Detected => p_one,
            Observation::Absent => T::one() - p_one,
        }
    }
}

/// Index of the cell interrogated at one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SearchAction {
    pub cell: usize,
}

impl SearchAction {
    pub fn new(cell: usize) -> Self {
        Self { cell }
    }
}

/// Binary measurement outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Observation {
    Absent,
    Detected,
}

impl Observation {
    pub const BOTH: [Observation; 2] = [Observation::Absent, Observation::Detected];

    pub fn bit(self) -> u8 {
        match self {
            Observation::Absent => 0,
            Observation::Detected => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Option<Self> {
        match bit {
            0 => Some(Observation::Absent),
            1 => Some(Observation::Detected),
            _ => None,
        }
    }
}

/// History of one simulated search. `beliefs[i]` is the posterior after
/// `actions[i]` produced `observations[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord<T> {
    pub actions: Vec<SearchAction>,
    pub observations: Vec<Observation>,
    pub beliefs: Vec<Belief<T>>,
    pub entropies: Vec<T>,
}

impl<T> TrajectoryRecord<T> {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Unnormalized posterior weights and their sum `P(y | action)`.
fn joint_weights<T: Real>(
    belief: &Belief<T>,
    action: SearchAction,
    obs: Observation,
    model: &MeasurementModel<T>,
) -> (Vec<T>, T) {
    let weights: Vec<T> = belief
        .probs
        .iter()
        .enumerate()
        .map(|(x, &p)| model.likelihood(obs, action.cell, x) * p)
        .collect();
    let evidence = weights.iter().copied().sum();
    (weights, evidence)
}

/// One Bayes-filter step: posterior ∝ likelihood × prior.
pub fn bayes_update<T: Real>(
    belief: &Belief<T>,
    action: SearchAction,
    obs: Observation,
    model: &MeasurementModel<T>,
) -> Result<Belief<T>> {
    belief.check_action(action)?;
    let (weights, evidence) = joint_weights(belief, action, obs, model);
    if evidence <= T::zero() {
        return Err(SearchError::Contradiction);
    }
    Ok(Belief {
        probs: weights.into_iter().map(|w| w / evidence).collect(),
    })
}

/// Probability of each outcome before the measurement is taken.
pub fn observation_probability<T: Real>(
    belief: &Belief<T>,
    action: SearchAction,
    obs: Observation,
    model: &MeasurementModel<T>,
) -> T {
    let p_here = belief.probs[action.cell];
    let p_one = model.p_detect * p_here + model.p_false * (T::one() - p_here);
    match obs {
        Observation::Detected => p_one,
        Observation::Absent => T::one() - p_one,
    }
}

/// Shannon entropy in bits, with `0 log 0 = 0`.
pub fn shannon_entropy<T: Real>(belief: &Belief<T>) -> T {
    let h = belief
        .probs
        .iter()
        .filter(|&&p| p > T::zero())
        .map(|&p| -p * p.log2())
        .sum::<T>();
    // rounding can push a delta distribution a hair below zero
    h.max(T::zero())
}

/// Expected entropy of the posterior after inspecting `action`.
pub fn expected_posterior_entropy<T: Real>(
    belief: &Belief<T>,
    action: SearchAction,
    model: &MeasurementModel<T>,
) -> Result<T> {
    belief.check_action(action)?;
    let mut total = T::zero();
    for obs in Observation::BOTH {
        let (weights, evidence) = joint_weights(belief, action, obs, model);
        if evidence <= T::zero() {
            continue;
        }
        let posterior = Belief {
            probs: weights.into_iter().map(|w| w / evidence).collect(),
        };
        total += evidence * shannon_entropy(&posterior);
    }
    Ok(total)
}

/// Cell minimising the one-step expected posterior entropy, lowest index on ties.
pub fn greedy_entropy_policy<T: Real>(belief: &Belief<T>, model: &MeasurementModel<T>) -> SearchAction {
    let mut best = SearchAction::new(0);
    let mut best_value = T::infinity();
    for cell in 0..belief.n_cells() {
        let action = SearchAction::new(cell);
        let value = expected_posterior_entropy(belief, action, model).expect("cell in range");
        if value < best_value {
            best_value = value;
            best = action;
        }
    }
    best
}

/// Number of nodes in the full action/observation tree of depth `horizon`.
pub fn tree_size(n_cells: usize, horizon: usize) -> u64 {
    let branching = (n_cells as u64).saturating_mul(2);
    let mut level = 1u64;
    let mut total = 0u64;
    for _ in 0..horizon {
        level = level.saturating_mul(branching);
        total = total.saturating_add(level);
    }
    total
}

/// Exhaustive finite-horizon minimisation of expected terminal entropy.
///
/// Returns the first action of an optimal policy tree and its value. At
/// horizon 0 the value is the current entropy and the action is cell 0.
pub fn brute_force_policy<T: Real>(
    belief: &Belief<T>,
    model: &MeasurementModel<T>,
    horizon: usize,
) -> Result<(SearchAction, T)> {
    let nodes = tree_size(belief.n_cells(), horizon);
    if nodes > MAX_TREE_NODES {
        return Err(SearchError::TreeTooLarge {
            nodes,
            budget: MAX_TREE_NODES,
        });
    }
    Ok(optimal_value(belief, model, horizon))
}

fn optimal_value<T: Real>(
    belief: &Belief<T>,
    model: &MeasurementModel<T>,
    horizon: usize,
) -> (SearchAction, T) {
    if horizon == 0 {
        return (SearchAction::new(0), shannon_entropy(belief));
    }
    let mut best = SearchAction::new(0);
    let mut best_value = T::infinity();
    for cell in 0..belief.n_cells() {
        let action = SearchAction::new(cell);
        let value = if horizon == 1 {
            expected_posterior_entropy(belief, action, model).expect("cell in range")
        } else {
            let mut acc = T::zero();
            for obs in Observation::BOTH {
                let (weights, evidence) = joint_weights(belief, action, obs, model);
                if evidence <= T::zero() {
                    continue;
                }
                let posterior = Belief {
                    probs: weights.into_iter().map(|w| w / evidence).collect(),
                };
                acc += evidence * optimal_value(&posterior, model, horizon - 1).1;
            }
            acc
        };
        if value < best_value {
            best_value = value;
            best = action;
        }
    }
    (best, best_value)
}

/// Expected terminal entropy when `policy` is followed for `horizon` steps,
/// averaging exactly over every observation sequence.
pub fn policy_expected_entropy<T: Real>(
    belief: &Belief<T>,
    model: &MeasurementModel<T>,
    policy: &Policy,
    horizon: usize,
) -> Result<T> {
    if horizon == 0 {
        return Ok(shannon_entropy(belief));
    }
    let action = policy.choose(belief, model)?;
    let mut acc = T::zero();
    for obs in Observation::BOTH {
        let (weights, evidence) = joint_weights(belief, action, obs, model);
        if evidence <= T::zero() {
            continue;
        }
        let posterior = Belief {
            probs: weights.into_iter().map(|w| w / evidence).collect(),
        };
        acc += evidence * policy_expected_entropy(&posterior, model, policy, horizon - 1)?;
    }
    Ok(acc)
}

/// Rule for picking the next cell to inspect.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    /// One-step expected-entropy minimisation.
    Greedy,
    /// Receding-horizon exhaustive search.
    BruteForce { horizon: usize },
    /// Inspect the currently most probable cell.
    MostLikely,
}

impl Policy {
    pub fn choose<T: Real>(&self, belief: &Belief<T>, model: &MeasurementModel<T>) -> Result<SearchAction> {
        match *self {
            Policy::Greedy => Ok(greedy_entropy_policy(belief, model)),
            Policy::BruteForce { horizon } => {
                brute_force_policy(belief, model, horizon.max(1)).map(|(a, _)| a)
            }
            Policy::MostLikely => Ok(SearchAction::new(belief.argmax())),
        }
    }
}

/// Settings for [`simulate_search`].
#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig<T> {
    pub n_cells: usize,
    pub true_cell: usize,
    pub model: MeasurementModel<T>,
    pub policy: Policy,
    pub max_steps: usize,
    pub seed: u64,
    pub stop_threshold: T,
    /// Uniform when `None`.
    pub prior: Option<Belief<T>>,
}

impl<T: Real> SearchConfig<T> {
    pub fn new(
        n_cells: usize,
        true_cell: usize,
        model: MeasurementModel<T>,
        policy: Policy,
        max_steps: usize,
        seed: u64,
    ) -> Self {
        Self {
            n_cells,
            true_cell,
            model,
            policy,
            max_steps,
            seed,
            stop_threshold: T::lit(DEFAULT_STOP_THRESHOLD),
            prior: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_cells == 0 {
            return Err(SearchError::EmptyBelief);
        }
        if self.true_cell >= self.n_cells {
            return Err(SearchError::CellOutOfRange {
                cell: self.true_cell,
                n_cells: self.n_cells,
            });
        }
        if !(self.stop_threshold > T::zero() && self.stop_threshold <= T::one()) {
            return Err(SearchError::InvalidConfig(format!(
                "stop_threshold {} must lie in (0, 1]",
                self.stop_threshold
            )));
        }
        if let Some(prior) = &self.prior {
            if prior.n_cells() != self.n_cells {
                return Err(SearchError::InvalidConfig(format!(
                    "prior has {} cells, expected {}",
                    prior.n_cells(),
                    self.n_cells
                )));
            }
        }
        if let Policy::BruteForce { horizon } = self.policy {
            let nodes = tree_size(self.n_cells, horizon.max(1));
            if nodes > MAX_TREE_NODES {
                return Err(SearchError::TreeTooLarge {
                    nodes,
                    budget: MAX_TREE_NODES,
                });
            }
        }
        Ok(())
    }
}

/// Runs a seeded search against an object hidden in `config.true_cell`.
pub fn simulate_search<T: Real>(config: &SearchConfig<T>) -> Result<TrajectoryRecord<T>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut belief = match &config.prior {
        Some(prior) => prior.clone(),
        None => Belief::uniform(config.n_cells)?,
    };
    let mut record = TrajectoryRecord {
        actions: Vec::new(),
        observations: Vec::new(),
        beliefs: Vec::new(),
        entropies: Vec::new(),
    };
    for _ in 0..config.max_steps {
        if belief.max_prob() >= config.stop_threshold {
            break;
        }
        let action = config.policy.choose(&belief, &config.model)?;
        let p_one = config
            .model
            .likelihood(Observation::Detected, action.cell, config.true_cell)
            .as_f64();
        let u: f64 = rng.random();
        let obs = if u < p_one {
            Observation::Detected
        } else {
            Observation::Absent
        };
        belief = bayes_update(&belief, action, obs, &config.model)?;
        record.actions.push(action);
        record.observations.push(obs);
        record.entropies.push(shannon_entropy(&belief));
        record.beliefs.push(belief.clone());
    }
    Ok(record)
}
