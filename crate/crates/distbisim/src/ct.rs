//! Continuous-time models: CTMCs, stochastic automata over exponential
//! clocks, their interleaving parallel compositions, and the embedding of
//! CTMCs into stochastic automata.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactlin::{format_rat, parse_rat, LinAlgError, Rat};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CtError {
    #[error("unknown state {0:?}")]
    UnknownState(String),
    #[error("unknown location {0:?}")]
    UnknownLocation(String),
    #[error("unknown clock {0:?}")]
    UnknownClock(String),
    #[error("unknown action {0:?}")]
    UnknownAction(String),
    #[error("rate matrix must be {n}x{n}, row {row} has {got} entries")]
    BadRateRow { n: usize, row: usize, got: usize },
    #[error("negative rate at ({0}, {1})")]
    NegativeRate(String, String),
    #[error("nonzero diagonal rate at {0}")]
    DiagonalRate(String),
    #[error("clock {0:?} must have a positive rate")]
    NonPositiveClockRate(String),
    #[error(transparent)]
    LinAlg(#[from] LinAlgError),
    #[error("model file error: {0}")]
    Model(String),
}

/// A continuous-time Markov chain given by its rate matrix. A zero entry
/// means no transition; the diagonal is identically zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ctmc {
    states: Vec<String>,
    initial: usize,
    rates: Vec<Vec<Rat>>,
}

impl Ctmc {
    pub fn new(states: Vec<String>, initial: usize, rates: Vec<Vec<Rat>>) -> Result<Self, CtError> {
        let n = states.len();
        if initial >= n {
            return Err(CtError::UnknownState(format!("#{initial}")));
        }
        if rates.len() != n {
            return Err(CtError::BadRateRow {
                n,
                row: rates.len(),
                got: 0,
            });
        }
        for (i, row) in rates.iter().enumerate() {
            if row.len() != n {
                return Err(CtError::BadRateRow {
                    n,
                    row: i,
                    got: row.len(),
                });
            }
            for (j, r) in row.iter().enumerate() {
                if r < &Rat::zero() {
                    return Err(CtError::NegativeRate(states[i].clone(), states[j].clone()));
                }
                if i == j && !r.is_zero() {
                    return Err(CtError::DiagonalRate(states[i].clone()));
                }
            }
        }
        Ok(Ctmc {
            states,
            initial,
            rates,
        })
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn rate(&self, from: usize, to: usize) -> &Rat {
        &self.rates[from][to]
    }

    pub fn exit_rate(&self, s: usize) -> Rat {
        self.rates[s].iter().sum()
    }

    pub fn state_index(&self, name: &str) -> Result<usize, CtError> {
        self.states
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| CtError::UnknownState(name.to_string()))
    }
}

/// Full interleaving parallel composition over the product state space:
/// the Kronecker sum of the two rate matrices.
pub fn ctmc_parallel(c1: &Ctmc, c2: &Ctmc) -> Ctmc {
    let n1 = c1.states.len();
    let n2 = c2.states.len();
    let mut states = Vec::with_capacity(n1 * n2);
    for s1 in &c1.states {
        for s2 in &c2.states {
            states.push(format!("{s1}|{s2}"));
        }
    }
    let idx = |i: usize, j: usize| i * n2 + j;
    let mut rates = vec![vec![Rat::zero(); n1 * n2]; n1 * n2];
    for i in 0..n1 {
        for j in 0..n2 {
            for i2 in 0..n1 {
                if !c1.rates[i][i2].is_zero() {
                    rates[idx(i, j)][idx(i2, j)] = c1.rates[i][i2].clone();
                }
            }
            for j2 in 0..n2 {
                if !c2.rates[j][j2].is_zero() {
                    rates[idx(i, j)][idx(i, j2)] = c2.rates[j][j2].clone();
                }
            }
        }
    }
    Ctmc::new(states, idx(c1.initial, c2.initial), rates).expect("product of valid chains is valid")
}

/// A stochastic automaton whose clocks all carry exponential distributions.
/// An edge fires once every clock in its trigger set has run to or below
/// zero; entering a location resamples exactly the clocks in its kappa set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sa {
    locations: Vec<String>,
    clocks: BTreeMap<String, Rat>,
    actions: Vec<String>,
    edges: Vec<SaEdge>,
    kappa: Vec<BTreeSet<String>>,
    initial: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SaEdge {
    pub from: usize,
    pub action: usize,
    pub trigger: BTreeSet<String>,
    pub to: usize,
}

impl Sa {
    pub fn new(
        locations: Vec<String>,
        clocks: BTreeMap<String, Rat>,
        actions: Vec<String>,
        edges: Vec<SaEdge>,
        kappa: Vec<BTreeSet<String>>,
        initial: usize,
    ) -> Result<Self, CtError> {
        let n = locations.len();
        if initial >= n {
            return Err(CtError::UnknownLocation(format!("#{initial}")));
        }
        if kappa.len() != n {
            return Err(CtError::Model(format!(
                "kappa defined for {} locations, automaton has {}",
                kappa.len(),
                n
            )));
        }
        for (name, rate) in &clocks {
            if rate <= &Rat::zero() {
                return Err(CtError::NonPositiveClockRate(name.clone()));
            }
        }
        for set in &kappa {
            for c in set {
                if !clocks.contains_key(c) {
                    return Err(CtError::UnknownClock(c.clone()));
                }
            }
        }
        for e in &edges {
            if e.from >= n {
                return Err(CtError::UnknownLocation(format!("#{}", e.from)));
            }
            if e.to >= n {
                return Err(CtError::UnknownLocation(format!("#{}", e.to)));
            }
            if e.action >= actions.len() {
                return Err(CtError::UnknownAction(format!("#{}", e.action)));
            }
            for c in &e.trigger {
                if !clocks.contains_key(c) {
                    return Err(CtError::UnknownClock(c.clone()));
                }
            }
        }
        Ok(Sa {
            locations,
            clocks,
            actions,
            edges,
            kappa,
            initial,
        })
    }

    pub fn locations(&self) -> &[String] {
        &self.locations
    }

    pub fn clocks(&self) -> &BTreeMap<String, Rat> {
        &self.clocks
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn edges(&self) -> &[SaEdge] {
        &self.edges
    }

    pub fn kappa(&self, location: usize) -> &BTreeSet<String> {
        &self.kappa[location]
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn clock_rate(&self, name: &str) -> Result<&Rat, CtError> {
        self.clocks
            .get(name)
            .ok_or_else(|| CtError::UnknownClock(name.to_string()))
    }

    pub fn location_index(&self, name: &str) -> Result<usize, CtError> {
        self.locations
            .iter()
            .position(|l| l == name)
            .ok_or_else(|| CtError::UnknownLocation(name.to_string()))
    }

    pub fn edges_from(&self, location: usize) -> impl Iterator<Item = &SaEdge> {
        self.edges.iter().filter(move |e| e.from == location)
    }
}

/// Embeds a CTMC as a stochastic automaton with one clock per positive-rate
/// state pair; every edge is labelled with the single action `L`.
pub fn ctmc_to_sa(c: &Ctmc) -> Sa {
    let n = c.states.len();
    let mut clocks = BTreeMap::new();
    let mut edges = Vec::new();
    let mut kappa = vec![BTreeSet::new(); n];
    for i in 0..n {
        for j in 0..n {
            let rate = c.rate(i, j);
            if rate.is_zero() {
                continue;
            }
            let name = format!("{}->{}", c.states[i], c.states[j]);
            clocks.insert(name.clone(), rate.clone());
            kappa[i].insert(name.clone());
            edges.push(SaEdge {
                from: i,
                action: 0,
                trigger: BTreeSet::from([name]),
                to: j,
            });
        }
    }
    Sa::new(
        c.states.to_vec(),
        clocks,
        vec!["L".to_string()],
        edges,
        kappa,
        c.initial,
    )
    .expect("embedding of a valid chain is valid")
}

/// Full interleaving parallel composition of two stochastic automata. The
/// third location component records which side moved last and thereby which
/// kappa set is resampled on entry. Clock names are prefixed apart.
pub fn sa_parallel(s1: &Sa, s2: &Sa) -> Sa {
    let p1 = |c: &String| format!("1.{c}");
    let p2 = |c: &String| format!("2.{c}");
    let mut clocks = BTreeMap::new();
    for (c, r) in &s1.clocks {
        clocks.insert(p1(c), r.clone());
    }
    for (c, r) in &s2.clocks {
        clocks.insert(p2(c), r.clone());
    }
    let mut actions = s1.actions.clone();
    for a in &s2.actions {
        if !actions.contains(a) {
            actions.push(a.clone());
        }
    }
    let n1 = s1.locations.len();
    let n2 = s2.locations.len();
    let idx = |i: usize, j: usize, b: usize| (i * n2 + j) * 3 + b;
    let mut locations = Vec::with_capacity(n1 * n2 * 3);
    let mut kappa = Vec::with_capacity(n1 * n2 * 3);
    for i in 0..n1 {
        for j in 0..n2 {
            for b in 0..3 {
                locations.push(format!("{}|{}|{b}", s1.locations[i], s2.locations[j]));
                let set: BTreeSet<String> = match b {
                    0 => s1.kappa[i]
                        .iter()
                        .map(&p1)
                        .chain(s2.kappa[j].iter().map(&p2))
                        .collect(),
                    1 => s1.kappa[i].iter().map(&p1).collect(),
                    _ => s2.kappa[j].iter().map(&p2).collect(),
                };
                kappa.push(set);
            }
        }
    }
    let mut edges = Vec::new();
    for e in &s1.edges {
        let action = actions
            .iter()
            .position(|a| a == &s1.actions[e.action])
            .expect("action present");
        for j in 0..n2 {
            for b in 0..3 {
                edges.push(SaEdge {
                    from: idx(e.from, j, b),
                    action,
                    trigger: e.trigger.iter().map(&p1).collect(),
                    to: idx(e.to, j, 1),
                });
            }
        }
    }
    for e in &s2.edges {
        let action = actions
            .iter()
            .position(|a| a == &s2.actions[e.action])
            .expect("action present");
        for i in 0..n1 {
            for b in 0..3 {
                edges.push(SaEdge {
                    from: idx(i, e.from, b),
                    action,
                    trigger: e.trigger.iter().map(&p2).collect(),
                    to: idx(i, e.to, 2),
                });
            }
        }
    }
    Sa::new(
        locations,
        clocks,
        actions,
        edges,
        kappa,
        idx(s1.initial, s2.initial, 0),
    )
    .expect("composition of valid automata is valid")
}

/// Disjoint union with systematic prefixing of locations and clocks;
/// actions are shared. Returns the union and the location index maps of
/// both halves.
pub fn sa_disjoint_union(a: &Sa, b: &Sa) -> (Sa, Vec<usize>, Vec<usize>) {
    let mut locations: Vec<String> = a.locations.iter().map(|l| format!("L.{l}")).collect();
    locations.extend(b.locations.iter().map(|l| format!("R.{l}")));
    let map_a: Vec<usize> = (0..a.locations.len()).collect();
    let map_b: Vec<usize> = (0..b.locations.len())
        .map(|i| i + a.locations.len())
        .collect();
    let pa = |c: &String| format!("L.{c}");
    let pb = |c: &String| format!("R.{c}");
    let mut clocks = BTreeMap::new();
    for (c, r) in &a.clocks {
        clocks.insert(pa(c), r.clone());
    }
    for (c, r) in &b.clocks {
        clocks.insert(pb(c), r.clone());
    }
    let mut actions = a.actions.clone();
    for act in &b.actions {
        if !actions.contains(act) {
            actions.push(act.clone());
        }
    }
    let mut kappa: Vec<BTreeSet<String>> = a
        .kappa
        .iter()
        .map(|set| set.iter().map(&pa).collect())
        .collect();
    kappa.extend(
        b.kappa
            .iter()
            .map(|set| set.iter().map(&pb).collect::<BTreeSet<_>>()),
    );
    let mut edges: Vec<SaEdge> = a
        .edges
        .iter()
        .map(|e| SaEdge {
            from: map_a[e.from],
            action: e.action,
            trigger: e.trigger.iter().map(&pa).collect(),
            to: map_a[e.to],
        })
        .collect();
    for e in &b.edges {
        let action = actions
            .iter()
            .position(|x| x == &b.actions[e.action])
            .expect("action present");
        edges.push(SaEdge {
            from: map_b[e.from],
            action,
            trigger: e.trigger.iter().map(&pb).collect(),
            to: map_b[e.to],
        });
    }
    let sa = Sa::new(locations, clocks, actions, edges, kappa, map_a[a.initial])
        .expect("union of valid automata is valid");
    (sa, map_a, map_b)
}

// ---------------------------------------------------------------------------
// JSON model formats

#[derive(Debug, Serialize, Deserialize)]
pub struct CtmcFile {
    pub states: Vec<String>,
    pub initial: String,
    pub rates: Vec<Vec<String>>,
}

impl Ctmc {
    pub fn from_json(text: &str) -> Result<Self, CtError> {
        let file: CtmcFile =
            serde_json::from_str(text).map_err(|e| CtError::Model(e.to_string()))?;
        let initial = file
            .states
            .iter()
            .position(|s| s == &file.initial)
            .ok_or_else(|| CtError::Model(format!("initial: unknown state {:?}", file.initial)))?;
        let mut rates = Vec::with_capacity(file.rates.len());
        for (i, row) in file.rates.iter().enumerate() {
            let mut out = Vec::with_capacity(row.len());
            for (j, lit) in row.iter().enumerate() {
                out.push(
                    parse_rat(lit).map_err(|e| CtError::Model(format!("rates[{i}][{j}]: {e}")))?,
                );
            }
            rates.push(out);
        }
        Ctmc::new(file.states, initial, rates)
    }

    pub fn to_json(&self) -> String {
        let file = CtmcFile {
            states: self.states.clone(),
            initial: self.states[self.initial].clone(),
            rates: self
                .rates
                .iter()
                .map(|row| row.iter().map(format_rat).collect())
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("serializable");
        s.push('\n');
        s
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SaFile {
    pub locations: Vec<String>,
    pub initial: String,
    pub clocks: BTreeMap<String, ClockFile>,
    pub actions: Vec<String>,
    pub edges: Vec<SaEdgeFile>,
    pub kappa: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ClockFile {
    pub dist: String,
    pub rate: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SaEdgeFile {
    pub from: String,
    pub action: String,
    pub trigger: Vec<String>,
    pub to: String,
}

impl Sa {
    pub fn from_json(text: &str) -> Result<Self, CtError> {
        let file: SaFile = serde_json::from_str(text).map_err(|e| CtError::Model(e.to_string()))?;
        let loc_index = |name: &str| {
            file.locations
                .iter()
                .position(|l| l == name)
                .ok_or_else(|| CtError::Model(format!("unknown location {name:?}")))
        };
        let initial = loc_index(&file.initial)?;
        let mut clocks = BTreeMap::new();
        for (name, c) in &file.clocks {
            if c.dist != "exp" {
                return Err(CtError::Model(format!(
                    "clock {name:?}: only exponential distributions are supported, got {:?}",
                    c.dist
                )));
            }
            let rate =
                parse_rat(&c.rate).map_err(|e| CtError::Model(format!("clock {name:?}: {e}")))?;
            clocks.insert(name.clone(), rate);
        }
        let mut edges = Vec::new();
        for (k, e) in file.edges.iter().enumerate() {
            let from = loc_index(&e.from)
                .map_err(|err| CtError::Model(format!("edges[{k}].from: {err}")))?;
            let to =
                loc_index(&e.to).map_err(|err| CtError::Model(format!("edges[{k}].to: {err}")))?;
            let action = file
                .actions
                .iter()
                .position(|a| a == &e.action)
                .ok_or_else(|| {
                    CtError::Model(format!("edges[{k}].action: unknown action {:?}", e.action))
                })?;
            edges.push(SaEdge {
                from,
                action,
                trigger: e.trigger.iter().cloned().collect(),
                to,
            });
        }
        let mut kappa = vec![BTreeSet::new(); file.locations.len()];
        for (loc, set) in &file.kappa {
            let i = loc_index(loc).map_err(|err| CtError::Model(format!("kappa: {err}")))?;
            kappa[i] = set.iter().cloned().collect();
        }
        Sa::new(file.locations, clocks, file.actions, edges, kappa, initial)
    }

    pub fn to_json(&self) -> String {
        let file = SaFile {
            locations: self.locations.clone(),
            initial: self.locations[self.initial].clone(),
            clocks: self
                .clocks
                .iter()
                .map(|(name, rate)| {
                    (
                        name.clone(),
                        ClockFile {
                            dist: "exp".to_string(),
                            rate: format_rat(rate),
                        },
                    )
                })
                .collect(),
            actions: self.actions.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| SaEdgeFile {
                    from: self.locations[e.from].clone(),
                    action: self.actions[e.action].clone(),
                    trigger: e.trigger.iter().cloned().collect(),
                    to: self.locations[e.to].clone(),
                })
                .collect(),
            kappa: self
                .locations
                .iter()
                .enumerate()
                .map(|(i, l)| (l.clone(), self.kappa[i].iter().cloned().collect()))
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("serializable");
        s.push('\n');
        s
    }
}
