use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Membership test on the state space.
pub type StatePredicate = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;
/// Real-valued function of the state.
pub type ScalarField = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
/// Vector-valued function of the state (a flow direction or a jump successor).
pub type StateMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error("system needs at least one flow or jump selection")]
    NoSelections,
    #[error("state dimension must be positive")]
    ZeroDimension,
}

/// A set given by a predicate, optionally paired with a margin `g` such that
/// `g(x) <= 0` exactly when the predicate holds.
#[derive(Clone)]
pub struct StateSet {
    pub contains: StatePredicate,
    pub margin: Option<ScalarField>,
}

impl StateSet {
    pub fn new(contains: StatePredicate) -> Self {
        Self {
            contains,
            margin: None,
        }
    }

    pub fn with_margin(contains: StatePredicate, margin: ScalarField) -> Self {
        Self {
            contains,
            margin: Some(margin),
        }
    }

    pub fn everything() -> Self {
        Self::new(Arc::new(|_| true))
    }

    pub fn empty() -> Self {
        Self::new(Arc::new(|_| false))
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        (self.contains)(x)
    }

    /// Membership relaxed by `tol` through the margin function when there is one.
    pub fn contains_within(&self, x: &[f64], tol: f64) -> bool {
        if (self.contains)(x) {
            return true;
        }
        match &self.margin {
            Some(g) => {
                let m = g(x);
                m.is_finite() && m <= tol
            }
            None => false,
        }
    }
}

impl fmt::Debug for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StateSet")
            .field("margin", &self.margin.is_some())
            .finish()
    }
}

/// Hybrid system `H = (C, F, D, G)` on a state space `X`, with the set-valued
/// maps given as finite lists of single-valued selections.
#[derive(Clone)]
pub struct HybridSystem {
    pub name: String,
    pub dim: usize,
    pub flow_set: StateSet,
    pub jump_set: StateSet,
    pub state_space: StateSet,
    pub flow_selections: Vec<StateMap>,
    pub jump_selections: Vec<StateMap>,
}

impl HybridSystem {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        flow_set: StateSet,
        jump_set: StateSet,
        flow_selections: Vec<StateMap>,
        jump_selections: Vec<StateMap>,
    ) -> Result<Self, SystemError> {
        if dim == 0 {
            return Err(SystemError::ZeroDimension);
        }
        if flow_selections.is_empty() && jump_selections.is_empty() {
            return Err(SystemError::NoSelections);
        }
        Ok(Self {
            name: name.into(),
            dim,
            flow_set,
            jump_set,
            state_space: StateSet::everything(),
            flow_selections,
            jump_selections,
        })
    }

    pub fn with_state_space(mut self, state_space: StateSet) -> Self {
        self.state_space = state_space;
        self
    }

    pub fn in_flow_set(&self, x: &[f64]) -> bool {
        self.flow_set.contains(x)
    }

    pub fn in_jump_set(&self, x: &[f64]) -> bool {
        self.jump_set.contains(x)
    }

    pub fn flow_directions(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.flow_selections.iter().map(|f| f(x)).collect()
    }

    pub fn jump_successors(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.jump_selections.iter().map(|g| g(x)).collect()
    }
}

impl fmt::Debug for HybridSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HybridSystem")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("flow_selections", &self.flow_selections.len())
            .field("jump_selections", &self.jump_selections.len())
            .finish()
    }
}

/// Named atomic propositions over the state.
#[derive(Clone, Default)]
pub struct PropositionSet {
    props: BTreeMap<String, StateSet>,
}

impl PropositionSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds or replaces a proposition.
    pub fn insert(&mut self, name: impl Into<String>, set: StateSet) {
        self.props.insert(name.into(), set);
    }

    pub fn with(mut self, name: impl Into<String>, set: StateSet) -> Self {
        self.insert(name, set);
        self
    }

    pub fn get(&self, name: &str) -> Option<&StateSet> {
        self.props.get(name)
    }

    pub fn contains_name(&self, name: &str) -> bool {
        self.props.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.props.keys().map(String::as_str)
    }

    pub fn holds(&self, name: &str, x: &[f64]) -> Option<bool> {
        self.props.get(name).map(|s| s.contains(x))
    }

    /// Copy of this set in which every proposition with a margin function is
    /// replaced by the relaxed test `g(x) <= tol`.
    pub fn with_tolerance(&self, tol: f64) -> PropositionSet {
        let props = self
            .props
            .iter()
            .map(|(name, set)| {
                let relaxed = match &set.margin {
                    Some(g) => {
                        let g = g.clone();
                        StateSet::with_margin(
                            Arc::new(move |x: &[f64]| {
                                let m = g(x);
                                m.is_finite() && m <= tol
                            }),
                            set.margin.clone().unwrap(),
                        )
                    }
                    None => set.clone(),
                };
                (name.clone(), relaxed)
            })
            .collect();
        PropositionSet { props }
    }
}

impl fmt::Debug for PropositionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.props.keys()).finish()
    }
}
