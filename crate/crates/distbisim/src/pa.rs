//! Finite probabilistic automata, rational distributions over their states,
//! the lifted distribution-level step, and (parametric) transition matrices.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactlin::{format_rat, parse_rat, LinAlgError, Matrix, Rat};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PaError {
    #[error("unknown state {0:?}")]
    UnknownState(String),
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("duplicate state name {0:?}")]
    DuplicateState(String),
    #[error("duplicate label name {0:?}")]
    DuplicateLabel(String),
    #[error("invalid distribution: {0}")]
    InvalidDist(String),
    #[error("state {state:?} has {count} transitions under label {label:?}, expected at most one")]
    Nondeterministic {
        state: String,
        label: String,
        count: usize,
    },
    #[error("no transition from the distribution under the given label set")]
    NoTransition,
    #[error("malformed choice assignment for state {0:?}: {1}")]
    BadChoice(String, String),
    #[error(transparent)]
    LinAlg(#[from] LinAlgError),
    #[error("model file error: {0}")]
    Model(String),
}

/// A probability distribution over the states of a fixed automaton, stored
/// densely in state declaration order. Entries are nonnegative and sum to
/// exactly one.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Dist(Vec<Rat>);

impl Dist {
    pub fn new(entries: Vec<Rat>) -> Result<Self, PaError> {
        if entries.iter().any(|p| p < &Rat::zero()) {
            return Err(PaError::InvalidDist("negative entry".into()));
        }
        let total: Rat = entries.iter().sum();
        if !total.is_one() {
            return Err(PaError::InvalidDist(format!(
                "entries sum to {}, expected 1",
                format_rat(&total)
            )));
        }
        Ok(Dist(entries))
    }

    pub fn dirac(n: usize, at: usize) -> Self {
        let mut v = vec![Rat::zero(); n];
        v[at] = Rat::one();
        Dist(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> &Rat {
        &self.0[i]
    }

    pub fn as_slice(&self) -> &[Rat] {
        &self.0
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.is_zero())
            .map(|(i, _)| i)
    }

    /// Total mass on a set of state indices.
    pub fn mass_on(&self, set: &BTreeSet<usize>) -> Rat {
        set.iter().map(|&i| self.0[i].clone()).sum()
    }
}

/// A nonempty set of labels, as indices into the automaton's label list.
pub type LabelSet = BTreeSet<usize>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub from: usize,
    pub label: usize,
    pub dist: Dist,
}

/// Finite probabilistic automaton. States and labels are indexed by
/// declaration order; all vectors and matrices use that order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pa {
    states: Vec<String>,
    labels: Vec<String>,
    transitions: Vec<Transition>,
}

impl Pa {
    /// Duplicate (source, label, distribution) triples are collapsed.
    pub fn new(
        states: Vec<String>,
        labels: Vec<String>,
        transitions: Vec<Transition>,
    ) -> Result<Self, PaError> {
        let mut seen = BTreeSet::new();
        for s in &states {
            if !seen.insert(s.clone()) {
                return Err(PaError::DuplicateState(s.clone()));
            }
        }
        let mut seen = BTreeSet::new();
        for l in &labels {
            if !seen.insert(l.clone()) {
                return Err(PaError::DuplicateLabel(l.clone()));
            }
        }
        let mut deduped: Vec<Transition> = Vec::new();
        for t in transitions {
            if t.from >= states.len() {
                return Err(PaError::UnknownState(format!("#{}", t.from)));
            }
            if t.label >= labels.len() {
                return Err(PaError::UnknownLabel(format!("#{}", t.label)));
            }
            if t.dist.len() != states.len() {
                return Err(PaError::InvalidDist(format!(
                    "distribution over {} states in an automaton with {}",
                    t.dist.len(),
                    states.len()
                )));
            }
            if !deduped.contains(&t) {
                deduped.push(t);
            }
        }
        Ok(Pa {
            states,
            labels,
            transitions: deduped,
        })
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn state_index(&self, name: &str) -> Result<usize, PaError> {
        self.states
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| PaError::UnknownState(name.to_string()))
    }

    pub fn label_index(&self, name: &str) -> Result<usize, PaError> {
        self.labels
            .iter()
            .position(|l| l == name)
            .ok_or_else(|| PaError::UnknownLabel(name.to_string()))
    }

    pub fn label_set(&self, names: &[&str]) -> Result<LabelSet, PaError> {
        names.iter().map(|n| self.label_index(n)).collect()
    }

    /// Labels with at least one outgoing transition from `state`.
    pub fn enabled_labels(&self, state: usize) -> LabelSet {
        self.transitions
            .iter()
            .filter(|t| t.from == state)
            .map(|t| t.label)
            .collect()
    }

    /// The states with at least one outgoing transition labelled in `set`.
    pub fn enabled_states(&self, set: &LabelSet) -> Result<BTreeSet<usize>, PaError> {
        for &l in set {
            if l >= self.labels.len() {
                return Err(PaError::UnknownLabel(format!("#{l}")));
            }
        }
        Ok(self
            .transitions
            .iter()
            .filter(|t| set.contains(&t.label))
            .map(|t| t.from)
            .collect())
    }

    /// The lifted distribution step: mass outside the enabled states is
    /// dropped and the remainder renormalized, each enabled state moving by
    /// the convex combination `choice` picks among its transitions.
    pub fn lift_step(
        &self,
        mu: &Dist,
        set: &LabelSet,
        choice: &ChoiceAssignment,
    ) -> Result<Dist, PaError> {
        let enabled = self.enabled_states(set)?;
        let mass = mu.mass_on(&enabled);
        if mass.is_zero() {
            return Err(PaError::NoTransition);
        }
        let mut out = vec![Rat::zero(); self.states.len()];
        for s in mu.support() {
            if !enabled.contains(&s) {
                continue;
            }
            let options = self.choices(s, set);
            let weights = choice.weights_for(self, s, options.len())?;
            for (w, d) in weights.iter().zip(&options) {
                if w.is_zero() {
                    continue;
                }
                let scale = mu.get(s) * w / &mass;
                for (o, p) in out.iter_mut().zip(d.as_slice()) {
                    *o += &scale * p;
                }
            }
        }
        Dist::new(out)
    }

    /// All pure successor distributions of `state` under labels in `set`,
    /// in transition declaration order.
    pub fn choices(&self, state: usize, set: &LabelSet) -> Vec<Dist> {
        let mut out: Vec<Dist> = Vec::new();
        for t in &self.transitions {
            if t.from == state && set.contains(&t.label) && !out.contains(&t.dist) {
                out.push(t.dist.clone());
            }
        }
        out
    }

    /// The transition matrix of a single label in an automaton that is
    /// action-deterministic for it: row i holds the unique successor
    /// distribution of state i, or zeros if the label is not enabled.
    pub fn trans_matrix_det(&self, label: usize) -> Result<Matrix, PaError> {
        let n = self.states.len();
        let mut m = Matrix::zero(n, n);
        for s in 0..n {
            let mut rows: Vec<&Dist> = Vec::new();
            for t in &self.transitions {
                if t.from == s && t.label == label {
                    rows.push(&t.dist);
                }
            }
            if rows.len() > 1 {
                return Err(PaError::Nondeterministic {
                    state: self.states[s].clone(),
                    label: self.labels[label].clone(),
                    count: rows.len(),
                });
            }
            if let Some(d) = rows.first() {
                for (j, p) in d.as_slice().iter().enumerate() {
                    m.set(s, j, p.clone());
                }
            }
        }
        Ok(m)
    }

    pub fn is_action_deterministic(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.transitions.iter().all(|t| seen.insert((t.from, t.label)))
    }

    /// Collects, per state, the pure successor distributions available under
    /// the label set. States without one carry an empty list.
    pub fn param_trans_matrix(&self, set: &LabelSet) -> ParamTransMatrix {
        ParamTransMatrix {
            label_set: set.clone(),
            choices: (0..self.states.len())
                .map(|s| self.choices(s, set))
                .collect(),
        }
    }

    /// All nonempty label subsets that have at least one enabled state,
    /// ordered by size then lexicographically.
    pub fn label_subsets(&self) -> Vec<LabelSet> {
        let n = self.labels.len();
        let mut subsets: Vec<LabelSet> = Vec::new();
        for mask in 1u64..(1u64 << n) {
            let set: LabelSet = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            subsets.push(set);
        }
        subsets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        subsets
            .into_iter()
            .filter(|s| {
                self.enabled_states(s)
                    .map(|e| !e.is_empty())
                    .unwrap_or(false)
            })
            .collect()
    }
}

/// Per-state rational weights over the available choices; weights are
/// nonnegative and sum to one for every assigned state.
#[derive(Debug, Clone, Default)]
pub struct ChoiceAssignment {
    weights: BTreeMap<usize, Vec<Rat>>,
}

impl ChoiceAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, state: usize, weights: Vec<Rat>) {
        self.weights.insert(state, weights);
    }

    /// Picks the j-th pure choice for `state`.
    pub fn set_pure(&mut self, state: usize, index: usize, n_choices: usize) {
        let mut w = vec![Rat::zero(); n_choices];
        w[index] = Rat::one();
        self.weights.insert(state, w);
    }

    fn weights_for(&self, pa: &Pa, state: usize, n_choices: usize) -> Result<Vec<Rat>, PaError> {
        let name = || pa.states()[state].clone();
        match self.weights.get(&state) {
            None if n_choices == 1 => Ok(vec![Rat::one()]),
            None => Err(PaError::BadChoice(name(), "no weights given".into())),
            Some(w) => {
                if w.len() != n_choices {
                    return Err(PaError::BadChoice(
                        name(),
                        format!("{} weights for {} choices", w.len(), n_choices),
                    ));
                }
                if w.iter().any(|x| x < &Rat::zero()) {
                    return Err(PaError::BadChoice(name(), "negative weight".into()));
                }
                if !w.iter().sum::<Rat>().is_one() {
                    return Err(PaError::BadChoice(name(), "weights do not sum to 1".into()));
                }
                Ok(w.clone())
            }
        }
    }
}

/// The scheduler-parametric transition matrix of one label set: per state
/// the generators of its choice polytope.
#[derive(Debug, Clone)]
pub struct ParamTransMatrix {
    label_set: LabelSet,
    choices: Vec<Vec<Dist>>,
}

impl ParamTransMatrix {
    pub fn label_set(&self) -> &LabelSet {
        &self.label_set
    }

    pub fn choices(&self) -> &[Vec<Dist>] {
        &self.choices
    }

    pub fn n_states(&self) -> usize {
        self.choices.len()
    }

    /// States with at least one choice.
    pub fn enabled(&self) -> impl Iterator<Item = usize> + '_ {
        self.choices
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_empty())
            .map(|(i, _)| i)
    }

    /// Drops all choices of states whose full enabled-label set differs
    /// from the given one.
    pub fn zero_rows_except(&mut self, pa: &Pa, exact: &LabelSet) {
        for (s, c) in self.choices.iter_mut().enumerate() {
            if &pa.enabled_labels(s) != exact {
                c.clear();
            }
        }
    }

    /// The concrete transition matrix under a full weight assignment.
    /// Rows of states without choices are zero.
    pub fn instantiate(&self, pa: &Pa, w: &ChoiceAssignment) -> Result<Matrix, PaError> {
        let n = self.choices.len();
        let mut m = Matrix::zero(n, n);
        for (s, options) in self.choices.iter().enumerate() {
            if options.is_empty() {
                continue;
            }
            let weights = w.weights_for(pa, s, options.len())?;
            for (wj, d) in weights.iter().zip(options) {
                if wj.is_zero() {
                    continue;
                }
                for (j, p) in d.as_slice().iter().enumerate() {
                    let v = m.get(s, j) + wj * p;
                    m.set(s, j, v);
                }
            }
        }
        Ok(m)
    }
}

/// Disjoint union of two automata over a shared label alphabet; state names
/// are prefixed to keep them apart. Returns the union and the index maps of
/// both halves.
pub fn disjoint_union(a: &Pa, b: &Pa) -> Result<(Pa, Vec<usize>, Vec<usize>), PaError> {
    let mut labels = a.labels.clone();
    for l in &b.labels {
        if !labels.contains(l) {
            labels.push(l.clone());
        }
    }
    let mut states: Vec<String> = a.states.iter().map(|s| format!("L.{s}")).collect();
    states.extend(b.states.iter().map(|s| format!("R.{s}")));
    let map_a: Vec<usize> = (0..a.states.len()).collect();
    let map_b: Vec<usize> = (0..b.states.len()).map(|i| i + a.states.len()).collect();
    let n = states.len();
    let mut transitions = Vec::new();
    for t in &a.transitions {
        let mut d = vec![Rat::zero(); n];
        for (i, p) in t.dist.as_slice().iter().enumerate() {
            d[map_a[i]] = p.clone();
        }
        transitions.push(Transition {
            from: map_a[t.from],
            label: t.label,
            dist: Dist::new(d)?,
        });
    }
    for t in &b.transitions {
        let mut d = vec![Rat::zero(); n];
        for (i, p) in t.dist.as_slice().iter().enumerate() {
            d[map_b[i]] = p.clone();
        }
        let label = labels
            .iter()
            .position(|l| l == &b.labels[t.label])
            .expect("label inserted above");
        transitions.push(Transition {
            from: map_b[t.from],
            label,
            dist: Dist::new(d)?,
        });
    }
    Ok((Pa::new(states, labels, transitions)?, map_a, map_b))
}

// ---------------------------------------------------------------------------
// JSON model format

#[derive(Debug, Serialize, Deserialize)]
pub struct PaFile {
    pub states: Vec<String>,
    pub labels: Vec<String>,
    pub transitions: Vec<TransitionFile>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TransitionFile {
    pub from: String,
    pub label: String,
    pub dist: BTreeMap<String, String>,
}

impl Pa {
    pub fn from_json(text: &str) -> Result<Self, PaError> {
        let file: PaFile =
            serde_json::from_str(text).map_err(|e| PaError::Model(e.to_string()))?;
        let states = file.states;
        let labels = file.labels;
        let mut transitions = Vec::new();
        let find_state = |name: &str| {
            states
                .iter()
                .position(|s| s == name)
                .ok_or_else(|| PaError::UnknownState(name.to_string()))
        };
        for (k, t) in file.transitions.iter().enumerate() {
            let from = find_state(&t.from)
                .map_err(|e| PaError::Model(format!("transitions[{k}].from: {e}")))?;
            let label = labels
                .iter()
                .position(|l| l == &t.label)
                .ok_or_else(|| PaError::Model(format!("transitions[{k}].label: unknown label {:?}", t.label)))?;
            let dist = parse_dist_map(&t.dist, &states)
                .map_err(|e| PaError::Model(format!("transitions[{k}].dist: {e}")))?;
            transitions.push(Transition { from, label, dist });
        }
        Pa::new(states, labels, transitions)
    }

    pub fn to_json(&self) -> String {
        let file = PaFile {
            states: self.states.clone(),
            labels: self.labels.clone(),
            transitions: self
                .transitions
                .iter()
                .map(|t| TransitionFile {
                    from: self.states[t.from].clone(),
                    label: self.labels[t.label].clone(),
                    dist: dist_to_map(&t.dist, &self.states),
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("serializable");
        s.push('\n');
        s
    }
}

/// Parses a `{ state: "p/q", ... }` map into a dense distribution; omitted
/// states carry zero mass.
pub fn parse_dist_map(
    map: &BTreeMap<String, String>,
    states: &[String],
) -> Result<Dist, PaError> {
    let mut v = vec![Rat::zero(); states.len()];
    for (name, lit) in map {
        let i = states
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| PaError::UnknownState(name.clone()))?;
        v[i] = parse_rat(lit)?;
    }
    Dist::new(v)
}

pub fn dist_to_map(d: &Dist, states: &[String]) -> BTreeMap<String, String> {
    d.support()
        .map(|i| (states[i].clone(), format_rat(d.get(i))))
        .collect()
}

/// Parses the inline distribution syntax used on the command line. It
/// mirrors the JSON object form but tolerates bare state names:
/// `{t':1/2, t'':1/2}`.
pub fn parse_dist_inline(text: &str, states: &[String]) -> Result<Dist, PaError> {
    let t = text.trim();
    let inner = t
        .strip_prefix('{')
        .and_then(|x| x.strip_suffix('}'))
        .ok_or_else(|| PaError::Model(format!("distribution {t:?} must be wrapped in {{..}}")))?;
    let mut map = BTreeMap::new();
    for part in inner.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (name, value) = part
            .rsplit_once(':')
            .ok_or_else(|| PaError::Model(format!("bad distribution entry {part:?}")))?;
        let name = name.trim().trim_matches('"').to_string();
        map.insert(name, value.trim().trim_matches('"').to_string());
    }
    parse_dist_map(&map, states)
}
