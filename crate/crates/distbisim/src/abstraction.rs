//! Finite symbolic abstraction of deterministic exponential stochastic
//! automata.
//!
//! Memorylessness makes a pair (location, set of still-positive clocks) a
//! lossless abstraction state: every still-positive exponential clock is
//! distributed exactly like a fresh sample. Transitions between symbolic
//! states follow the clock race. The first clock to expire is `c` with
//! probability `rate(c) / total`; if that completes the trigger set of
//! exactly one edge the edge fires, if of none the expiration is silent and
//! the race continues on the survivors. Edges whose trigger set is already
//! expired on entry fire immediately at time zero.
//!
//! Alongside the successor distributions, the exploration computes for each
//! action the exact sub-density of the time of the first transition: a
//! mixture over silent-expiration paths of convolutions of the stage
//! exponentials, carried in the expolynomial algebra.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::ct::{CtError, Sa};
use crate::exactlin::{format_rat, LinAlgError, Rat};
use crate::expoly::{Expolynomial, TermFile};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AbstractionError {
    #[error("determinism violation at {state}: edges {edges:?} become enabled simultaneously")]
    DeterminismViolation { state: String, edges: Vec<String> },
    #[error("zero-delay cycle through {0:?}")]
    ZenoLoop(Vec<String>),
    #[error("unknown location {0:?}")]
    UnknownLocation(String),
    #[error(transparent)]
    Ct(#[from] CtError),
    #[error(transparent)]
    LinAlg(#[from] LinAlgError),
}

/// A location plus the set of clocks that are still positive (and hence,
/// by memorylessness, exponentially distributed at their declared rates);
/// every other clock has expired.
///
/// The set is kept canonical: clocks whose current value can never be
/// observed are dropped, see [`ClockRelevance`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SymState {
    pub location: usize,
    pub active: BTreeSet<String>,
}

impl SymState {
    pub fn name(&self, sa: &Sa) -> String {
        let clocks: Vec<&str> = self.active.iter().map(String::as_str).collect();
        format!("{}@{{{}}}", sa.locations()[self.location], clocks.join(","))
    }
}

/// Which clocks can still influence behavior from each location: a clock
/// matters iff it triggers an edge of the location itself, or stays
/// unresampled along some edge into a location where it matters. Everything
/// else only ever expires silently and is dropped from symbolic states;
/// the collapse is exact because first-transition timing is a function of
/// the trigger clocks alone.
#[derive(Debug, Clone)]
pub struct ClockRelevance {
    per_location: Vec<BTreeSet<String>>,
}

impl ClockRelevance {
    pub fn of(sa: &Sa) -> Self {
        let n = sa.locations().len();
        let mut per_location: Vec<BTreeSet<String>> = vec![BTreeSet::new(); n];
        for q in 0..n {
            for e in sa.edges_from(q) {
                per_location[q].extend(e.trigger.iter().cloned());
            }
        }
        loop {
            let mut changed = false;
            for e in sa.edges() {
                let inherited: Vec<String> = per_location[e.to]
                    .difference(sa.kappa(e.to))
                    .cloned()
                    .collect();
                for c in inherited {
                    changed |= per_location[e.from].insert(c);
                }
            }
            if !changed {
                break;
            }
        }
        ClockRelevance { per_location }
    }

    pub fn at(&self, location: usize) -> &BTreeSet<String> {
        &self.per_location[location]
    }

    fn state(&self, location: usize, active: &BTreeSet<String>) -> SymState {
        SymState {
            location,
            active: active
                .intersection(&self.per_location[location])
                .cloned()
                .collect(),
        }
    }
}

/// Entering a location activates exactly its resample set; all other
/// clocks start expired at value zero.
pub fn initial_symstate(sa: &Sa, location: usize) -> Result<SymState, AbstractionError> {
    if location >= sa.locations().len() {
        return Err(AbstractionError::UnknownLocation(format!("#{location}")));
    }
    Ok(ClockRelevance::of(sa).state(location, sa.kappa(location)))
}

/// Behavior of one symbolic state under one action: total probability that
/// the first transition carries this action, the successor distribution
/// conditioned on that, and the exact timing sub-measure (zero-time atom
/// plus density).
#[derive(Debug, Clone)]
pub struct ActionBehavior {
    pub mass: Rat,
    pub successors: Vec<(SymState, Rat)>,
    pub atom: Rat,
    pub density: Expolynomial,
}

#[derive(Debug, Clone)]
pub struct Exploration {
    pub actions: BTreeMap<usize, ActionBehavior>,
    pub halt: Rat,
}

/// Timing data per action, detached from the successor structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionTiming {
    pub atom: Rat,
    pub density: Expolynomial,
    pub mass: Rat,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimingProfile {
    pub per_action: BTreeMap<usize, ActionTiming>,
    pub halt: Rat,
}

fn edge_desc(sa: &Sa, e: &crate::ct::SaEdge) -> String {
    let trigger: Vec<&str> = e.trigger.iter().map(String::as_str).collect();
    format!(
        "{} -{}:{{{}}}-> {}",
        sa.locations()[e.from],
        sa.actions()[e.action],
        trigger.join(","),
        sa.locations()[e.to]
    )
}

/// Runs the race semantics from one symbolic state.
pub fn explore(sa: &Sa, s: &SymState) -> Result<Exploration, AbstractionError> {
    explore_inner(sa, &ClockRelevance::of(sa), s)
}

fn explore_inner(
    sa: &Sa,
    rel: &ClockRelevance,
    s: &SymState,
) -> Result<Exploration, AbstractionError> {
    let s = &rel.state(s.location, &s.active);
    let edges: Vec<&crate::ct::SaEdge> = sa.edges_from(s.location).collect();
    let violation = |enabled: &[&crate::ct::SaEdge]| AbstractionError::DeterminismViolation {
        state: s.name(sa),
        edges: enabled.iter().map(|e| edge_desc(sa, e)).collect(),
    };

    // edges whose whole trigger set is already expired fire at time zero
    let entry_enabled: Vec<&crate::ct::SaEdge> = edges
        .iter()
        .filter(|e| e.trigger.is_disjoint(&s.active))
        .copied()
        .collect();
    if entry_enabled.len() >= 2 {
        return Err(violation(&entry_enabled));
    }
    if let Some(e) = entry_enabled.first() {
        let mut active = s.active.clone();
        active.extend(sa.kappa(e.to).iter().cloned());
        let succ = rel.state(e.to, &active);
        let mut actions = BTreeMap::new();
        actions.insert(
            e.action,
            ActionBehavior {
                mass: Rat::one(),
                successors: vec![(succ, Rat::one())],
                atom: Rat::one(),
                density: Expolynomial::zero(),
            },
        );
        return Ok(Exploration {
            actions,
            halt: Rat::zero(),
        });
    }

    // One race outcome from a given active set: the firing edge's action
    // and successor, its probability, and the sub-density of the firing
    // time measured from the moment that active set was reached.
    struct RaceOutcome {
        action: usize,
        succ: SymState,
        weight: Rat,
        density: Expolynomial,
    }
    struct RaceResult {
        outcomes: Vec<RaceOutcome>,
        halt: Rat,
    }

    fn add_outcome(
        outcomes: &mut Vec<RaceOutcome>,
        action: usize,
        succ: SymState,
        weight: Rat,
        density: Expolynomial,
    ) {
        match outcomes
            .iter_mut()
            .find(|o| o.action == action && o.succ == succ)
        {
            Some(o) => {
                o.weight += &weight;
                o.density = o.density.add(&density);
            }
            None => outcomes.push(RaceOutcome {
                action,
                succ,
                weight,
                density,
            }),
        }
    }

    // The race below an active set does not depend on how the set was
    // reached (memorylessness), so results are memoized per set. A silent
    // expiration composes by convolving the child's densities with the
    // stage exponential of the current total rate.
    #[allow(clippy::too_many_arguments)]
    fn race(
        sa: &Sa,
        rel: &ClockRelevance,
        s: &SymState,
        edges: &[&crate::ct::SaEdge],
        active: &BTreeSet<String>,
        memo: &mut BTreeMap<BTreeSet<String>, usize>,
        store: &mut Vec<RaceResult>,
    ) -> Result<usize, AbstractionError> {
        if let Some(&i) = memo.get(active) {
            return Ok(i);
        }
        let mut outcomes: Vec<RaceOutcome> = Vec::new();
        let mut halt = Rat::zero();
        if active.is_empty() {
            halt = Rat::one();
        } else {
            let total: Rat = active
                .iter()
                .map(|c| sa.clock_rate(c).expect("validated clock").clone())
                .sum();
            let stage = Expolynomial::exponential(total.clone());
            for c in active {
                let w = sa.clock_rate(c).expect("validated clock") / &total;
                let mut rest = active.clone();
                rest.remove(c);
                let enabled: Vec<&crate::ct::SaEdge> = edges
                    .iter()
                    .filter(|e| e.trigger.is_disjoint(&rest))
                    .copied()
                    .collect();
                match enabled.len() {
                    0 => {
                        let child = race(sa, rel, s, edges, &rest, memo, store)?;
                        let child_halt = store[child].halt.clone();
                        let composed: Vec<(usize, SymState, Rat, Expolynomial)> = store[child]
                            .outcomes
                            .iter()
                            .map(|o| {
                                (
                                    o.action,
                                    o.succ.clone(),
                                    o.weight.clone(),
                                    o.density.convolve_exp(&total),
                                )
                            })
                            .collect();
                        for (action, succ, weight, density) in composed {
                            add_outcome(&mut outcomes, action, succ, &w * weight, density.scale(&w));
                        }
                        halt += &w * child_halt;
                    }
                    1 => {
                        let e = enabled[0];
                        let mut next_active = rest.clone();
                        next_active.extend(sa.kappa(e.to).iter().cloned());
                        let succ = rel.state(e.to, &next_active);
                        add_outcome(&mut outcomes, e.action, succ, w.clone(), stage.scale(&w));
                    }
                    _ => {
                        return Err(AbstractionError::DeterminismViolation {
                            state: s.name(sa),
                            edges: enabled.iter().map(|e| edge_desc(sa, e)).collect(),
                        })
                    }
                }
            }
        }
        store.push(RaceResult { outcomes, halt });
        memo.insert(active.clone(), store.len() - 1);
        Ok(store.len() - 1)
    }

    let mut memo = BTreeMap::new();
    let mut store = Vec::new();
    let root = race(sa, rel, s, &edges, &s.active, &mut memo, &mut store)?;
    let result = store.swap_remove(root);

    let mut actions: BTreeMap<usize, ActionBehavior> = BTreeMap::new();
    for o in result.outcomes {
        let beh = actions.entry(o.action).or_insert_with(|| ActionBehavior {
            mass: Rat::zero(),
            successors: Vec::new(),
            atom: Rat::zero(),
            density: Expolynomial::zero(),
        });
        beh.mass += &o.weight;
        beh.density = beh.density.add(&o.density);
        match beh.successors.iter_mut().find(|(t, _)| t == &o.succ) {
            Some((_, p)) => *p += &o.weight,
            None => beh.successors.push((o.succ, o.weight)),
        }
    }
    // successor distributions are conditional on the action
    for beh in actions.values_mut() {
        for (_, p) in beh.successors.iter_mut() {
            *p /= &beh.mass;
        }
        beh.successors.sort_by(|(a, _), (b, _)| a.cmp(b));
    }
    Ok(Exploration {
        actions,
        halt: result.halt,
    })
}

/// Per action, the probability that it is the first to fire and the
/// successor distribution over symbolic states conditioned on it.
pub fn successor(
    sa: &Sa,
    s: &SymState,
) -> Result<BTreeMap<usize, (Rat, Vec<(SymState, Rat)>)>, AbstractionError> {
    let ex = explore(sa, s)?;
    Ok(ex
        .actions
        .into_iter()
        .map(|(a, b)| (a, (b.mass, b.successors)))
        .collect())
}

/// The exact first-transition timing sub-measures of one symbolic state.
pub fn timing_profile(sa: &Sa, s: &SymState) -> Result<TimingProfile, AbstractionError> {
    let ex = explore(sa, s)?;
    Ok(TimingProfile {
        per_action: ex
            .actions
            .into_iter()
            .map(|(a, b)| {
                (
                    a,
                    ActionTiming {
                        atom: b.atom,
                        density: b.density,
                        mass: b.mass,
                    },
                )
            })
            .collect(),
        halt: ex.halt,
    })
}

#[derive(Debug, Clone)]
pub struct DeterminismReport {
    pub violations: Vec<AbstractionError>,
}

impl DeterminismReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Explores the symbolic states reachable from every location's initial
/// state and collects all simultaneous-enabling violations.
pub fn validate_deterministic(sa: &Sa) -> DeterminismReport {
    let rel = ClockRelevance::of(sa);
    let mut violations = Vec::new();
    let mut seen: BTreeSet<SymState> = BTreeSet::new();
    let mut queue: VecDeque<SymState> = VecDeque::new();
    for q in 0..sa.locations().len() {
        let init = rel.state(q, sa.kappa(q));
        if seen.insert(init.clone()) {
            queue.push_back(init);
        }
    }
    while let Some(s) = queue.pop_front() {
        match explore_inner(sa, &rel, &s) {
            Ok(ex) => {
                for beh in ex.actions.values() {
                    for (succ, _) in &beh.successors {
                        if seen.insert(succ.clone()) {
                            queue.push_back(succ.clone());
                        }
                    }
                }
            }
            Err(e @ AbstractionError::DeterminismViolation { .. }) => violations.push(e),
            Err(_) => {}
        }
    }
    DeterminismReport { violations }
}

/// The finite deterministic automaton produced by the abstraction: symbolic
/// states, per-action successor distributions and timing profiles, and the
/// halting mass.
#[derive(Debug, Clone)]
pub struct FinitePa {
    states: Vec<SymState>,
    names: Vec<String>,
    actions: Vec<String>,
    behaviors: Vec<BTreeMap<usize, IndexedBehavior>>,
    halts: Vec<Rat>,
    initials: Vec<usize>,
}

/// Behavior with successors resolved to state indices.
#[derive(Debug, Clone)]
pub struct IndexedBehavior {
    pub mass: Rat,
    pub successors: Vec<(usize, Rat)>,
    pub atom: Rat,
    pub density: Expolynomial,
}

impl FinitePa {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[SymState] {
        &self.states
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn initials(&self) -> &[usize] {
        &self.initials
    }

    pub fn behavior(&self, state: usize) -> &BTreeMap<usize, IndexedBehavior> {
        &self.behaviors[state]
    }

    pub fn halt(&self, state: usize) -> &Rat {
        &self.halts[state]
    }

    pub fn state_index(&self, s: &SymState) -> Option<usize> {
        self.states.iter().position(|t| t == s)
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct BehaviorDump {
            prob: String,
            successors: BTreeMap<String, String>,
            atom: String,
            density: Vec<TermFile>,
        }
        #[derive(Serialize)]
        struct Dump<'a> {
            states: &'a [String],
            initials: Vec<String>,
            actions: &'a [String],
            behavior: BTreeMap<String, BTreeMap<String, BehaviorDump>>,
            halt: BTreeMap<String, String>,
        }
        let behavior = self
            .names
            .iter()
            .enumerate()
            .map(|(i, name)| {
                let per_action = self.behaviors[i]
                    .iter()
                    .map(|(a, b)| {
                        (
                            self.actions[*a].clone(),
                            BehaviorDump {
                                prob: format_rat(&b.mass),
                                successors: b
                                    .successors
                                    .iter()
                                    .map(|(j, p)| (self.names[*j].clone(), format_rat(p)))
                                    .collect(),
                                atom: format_rat(&b.atom),
                                density: b.density.to_file(),
                            },
                        )
                    })
                    .collect();
                (name.clone(), per_action)
            })
            .collect();
        let dump = Dump {
            states: &self.names,
            initials: self.initials.iter().map(|&i| self.names[i].clone()).collect(),
            actions: &self.actions,
            behavior,
            halt: self
                .names
                .iter()
                .enumerate()
                .map(|(i, n)| (n.clone(), format_rat(&self.halts[i])))
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&dump).expect("serializable");
        s.push('\n');
        s
    }
}

/// Closes the given initial locations under the race successor relation.
/// Checks the state bound, probability conservation, and absence of
/// zero-delay cycles.
pub fn abstract_sa(sa: &Sa, initials: &[usize]) -> Result<FinitePa, AbstractionError> {
    let rel = ClockRelevance::of(sa);
    let mut states: Vec<SymState> = Vec::new();
    let mut index: BTreeMap<SymState, usize> = BTreeMap::new();
    let mut queue: VecDeque<usize> = VecDeque::new();
    let mut initial_indices = Vec::new();
    for &q in initials {
        if q >= sa.locations().len() {
            return Err(AbstractionError::UnknownLocation(format!("#{q}")));
        }
        let init = rel.state(q, sa.kappa(q));
        let i = match index.get(&init) {
            Some(&i) => i,
            None => {
                let i = states.len();
                index.insert(init.clone(), i);
                states.push(init);
                queue.push_back(i);
                i
            }
        };
        initial_indices.push(i);
    }

    let mut raw: Vec<Exploration> = Vec::new();
    while let Some(i) = queue.pop_front() {
        let ex = explore_inner(sa, &rel, &states[i].clone())?;
        for beh in ex.actions.values() {
            for (succ, _) in &beh.successors {
                if !index.contains_key(succ) {
                    let j = states.len();
                    index.insert(succ.clone(), j);
                    states.push(succ.clone());
                    queue.push_back(j);
                }
            }
        }
        raw.push(ex);
    }

    // reachable-state bound: locations times subsets of clocks
    let bound = (sa.locations().len() as u128)
        .saturating_mul(1u128.checked_shl(sa.clocks().len() as u32).unwrap_or(u128::MAX));
    assert!(
        (states.len() as u128) <= bound,
        "abstraction produced {} states, above the bound {}",
        states.len(),
        bound
    );

    let mut behaviors: Vec<BTreeMap<usize, IndexedBehavior>> = Vec::with_capacity(states.len());
    let mut halts = Vec::with_capacity(states.len());
    for (i, ex) in raw.iter().enumerate() {
        let mut per_action = BTreeMap::new();
        let mut mass_total = ex.halt.clone();
        for (&a, b) in &ex.actions {
            mass_total += &b.mass;
            let conserved = &b.atom + b.density.integral();
            assert!(
                conserved == b.mass,
                "timing mass of {} under {} is {}, behavior mass {}",
                states[i].name(sa),
                sa.actions()[a],
                format_rat(&conserved),
                format_rat(&b.mass)
            );
            per_action.insert(
                a,
                IndexedBehavior {
                    mass: b.mass.clone(),
                    successors: b
                        .successors
                        .iter()
                        .map(|(s, p)| (index[s], p.clone()))
                        .collect(),
                    atom: b.atom.clone(),
                    density: b.density.clone(),
                },
            );
        }
        assert!(
            mass_total.is_one(),
            "action and halt masses of {} sum to {}",
            states[i].name(sa),
            format_rat(&mass_total)
        );
        behaviors.push(per_action);
        halts.push(ex.halt.clone());
    }

    // a chain of zero-time transitions must not cycle
    let immediate: BTreeMap<usize, usize> = behaviors
        .iter()
        .enumerate()
        .filter_map(|(i, per_action)| {
            per_action
                .values()
                .find(|b| b.atom.is_one())
                .map(|b| (i, b.successors[0].0))
        })
        .collect();
    for &start in immediate.keys() {
        let mut seen = BTreeSet::from([start]);
        let mut cur = start;
        while let Some(&next) = immediate.get(&cur) {
            if !seen.insert(next) {
                let cycle = seen.iter().map(|&i| states[i].name(sa)).collect();
                return Err(AbstractionError::ZenoLoop(cycle));
            }
            cur = next;
        }
    }

    let names = states.iter().map(|s| s.name(sa)).collect();
    Ok(FinitePa {
        states,
        names,
        actions: sa.actions().to_vec(),
        behaviors,
        halts,
        initials: initial_indices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ct::{ctmc_to_sa, Ctmc, SaEdge};
    use crate::exactlin::rat;

    /// The three-location worked example: a two-clock race location q that
    /// either self-loops or moves on to u, and two single-rate ringers u, v.
    pub fn example9() -> Sa {
        let locations = vec!["q".to_string(), "u".to_string(), "v".to_string()];
        let clocks = BTreeMap::from([
            ("x".to_string(), rat(1, 2)),
            ("y".to_string(), rat(1, 2)),
            ("z".to_string(), rat(1, 1)),
        ]);
        let actions = vec!["a".to_string()];
        let trig = |c: &str| BTreeSet::from([c.to_string()]);
        let edges = vec![
            SaEdge { from: 0, action: 0, trigger: trig("x"), to: 0 },
            SaEdge { from: 0, action: 0, trigger: trig("y"), to: 1 },
            SaEdge { from: 1, action: 0, trigger: trig("z"), to: 1 },
            SaEdge { from: 2, action: 0, trigger: trig("z"), to: 2 },
        ];
        let kappa = vec![
            BTreeSet::from(["x".to_string(), "y".to_string()]),
            BTreeSet::from(["x".to_string(), "z".to_string()]),
            BTreeSet::from(["x".to_string(), "z".to_string()]),
        ];
        Sa::new(locations, clocks, actions, edges, kappa, 0).unwrap()
    }

    #[test]
    fn initial_symstates() {
        let sa = example9();
        let q = initial_symstate(&sa, 0).unwrap();
        assert_eq!(q.active, BTreeSet::from(["x".to_string(), "y".to_string()]));
        // the x clock is irrelevant from u onwards and is dropped
        let u = initial_symstate(&sa, 1).unwrap();
        assert_eq!(u.active, BTreeSet::from(["z".to_string()]));
        assert!(initial_symstate(&sa, 9).is_err());
    }

    #[test]
    fn q_race_splits_half_half() {
        let sa = example9();
        let q = initial_symstate(&sa, 0).unwrap();
        let succ = successor(&sa, &q).unwrap();
        assert_eq!(succ.len(), 1);
        let (mass, dist) = &succ[&0];
        assert_eq!(mass, &rat(1, 1));
        let u = initial_symstate(&sa, 1).unwrap();
        assert_eq!(dist.len(), 2);
        for (s, p) in dist {
            assert_eq!(p, &rat(1, 2));
            assert!(s == &q || s == &u);
        }
    }

    #[test]
    fn u_self_loop_is_dirac() {
        let sa = example9();
        let u = initial_symstate(&sa, 1).unwrap();
        let succ = successor(&sa, &u).unwrap();
        let (mass, dist) = &succ[&0];
        assert_eq!(mass, &rat(1, 1));
        assert_eq!(dist, &vec![(u.clone(), rat(1, 1))]);
    }

    #[test]
    fn timing_densities_are_unit_exponentials() {
        // the race at q fires on every expiration at total rate 1; at u the
        // firing time is the rate-1 clock regardless of the silent survivor
        let sa = example9();
        let unit = Expolynomial::exponential(rat(1, 1));
        for loc in 0..3 {
            let s = initial_symstate(&sa, loc).unwrap();
            let t = timing_profile(&sa, &s).unwrap();
            assert!(t.halt.is_zero());
            let at = &t.per_action[&0];
            assert_eq!(at.mass, rat(1, 1));
            assert!(at.atom.is_zero());
            assert_eq!(at.density, unit, "location {loc}");
        }
    }

    #[test]
    fn abstraction_has_three_states() {
        let sa = example9();
        let fpa = abstract_sa(&sa, &[0, 1, 2]).unwrap();
        assert_eq!(fpa.len(), 3);
        assert!(fpa.names().contains(&"q@{x,y}".to_string()));
        assert!(fpa.names().contains(&"u@{z}".to_string()));
        assert!(fpa.names().contains(&"v@{z}".to_string()));
    }

    #[test]
    fn example9_is_deterministic() {
        assert!(validate_deterministic(&example9()).ok());
    }

    #[test]
    fn shared_trigger_is_flagged() {
        let locations = vec!["q".to_string(), "r".to_string()];
        let clocks = BTreeMap::from([("x".to_string(), rat(1, 1))]);
        let trig = BTreeSet::from(["x".to_string()]);
        let edges = vec![
            SaEdge { from: 0, action: 0, trigger: trig.clone(), to: 0 },
            SaEdge { from: 0, action: 0, trigger: trig, to: 1 },
        ];
        let kappa = vec![BTreeSet::from(["x".to_string()]), BTreeSet::new()];
        let sa = Sa::new(locations, clocks, vec!["a".to_string()], edges, kappa, 0).unwrap();
        let report = validate_deterministic(&sa);
        assert!(!report.ok());
        assert!(matches!(
            report.violations[0],
            AbstractionError::DeterminismViolation { .. }
        ));
    }

    #[test]
    fn halting_state_has_empty_map() {
        let locations = vec!["q".to_string()];
        let sa = Sa::new(
            locations,
            BTreeMap::new(),
            vec!["a".to_string()],
            Vec::new(),
            vec![BTreeSet::new()],
            0,
        )
        .unwrap();
        let s = initial_symstate(&sa, 0).unwrap();
        let succ = successor(&sa, &s).unwrap();
        assert!(succ.is_empty());
        let t = timing_profile(&sa, &s).unwrap();
        assert_eq!(t.halt, rat(1, 1));
    }

    #[test]
    fn embedded_chain_has_two_states() {
        let c = Ctmc::new(
            vec!["A".into(), "B".into()],
            0,
            vec![vec![rat(0, 1), rat(2, 1)], vec![rat(0, 1), rat(0, 1)]],
        )
        .unwrap();
        let sa = ctmc_to_sa(&c);
        let fpa = abstract_sa(&sa, &[0]).unwrap();
        assert_eq!(fpa.len(), 2);
        // second state halts
        let absorbed = fpa.names().iter().position(|n| n.starts_with("B@")).unwrap();
        assert_eq!(fpa.halt(absorbed), &rat(1, 1));
    }

    #[test]
    fn zeno_cycle_is_rejected() {
        // two locations flipping on an expired clock in zero time
        let locations = vec!["q".to_string(), "r".to_string()];
        let clocks = BTreeMap::from([("x".to_string(), rat(1, 1))]);
        let trig = BTreeSet::from(["x".to_string()]);
        let edges = vec![
            SaEdge { from: 0, action: 0, trigger: trig.clone(), to: 1 },
            SaEdge { from: 1, action: 0, trigger: trig, to: 0 },
        ];
        let kappa = vec![BTreeSet::new(), BTreeSet::new()];
        let sa = Sa::new(locations, clocks, vec!["a".to_string()], edges, kappa, 0).unwrap();
        match abstract_sa(&sa, &[0]) {
            Err(AbstractionError::ZenoLoop(_)) => {}
            other => panic!("expected a zero-delay cycle error, got {other:?}"),
        }
    }

    #[test]
    fn hypoexponential_two_stage_trigger() {
        // an edge that needs both clocks of distinct rates produces the
        // two-term convolution; the closed form is cross-checked against
        // quadrature in the expolynomial tests
        let locations = vec!["q".to_string(), "r".to_string()];
        let clocks = BTreeMap::from([
            ("x".to_string(), rat(1, 1)),
            ("y".to_string(), rat(2, 1)),
        ]);
        let edges = vec![SaEdge {
            from: 0,
            action: 0,
            trigger: BTreeSet::from(["x".to_string(), "y".to_string()]),
            to: 1,
        }];
        let kappa = vec![
            BTreeSet::from(["x".to_string(), "y".to_string()]),
            BTreeSet::new(),
        ];
        let sa = Sa::new(locations, clocks, vec!["a".to_string()], edges, kappa, 0).unwrap();
        let s = initial_symstate(&sa, 0).unwrap();
        let t = timing_profile(&sa, &s).unwrap();
        let at = &t.per_action[&0];
        assert_eq!(at.mass, rat(1, 1));
        // max(Exp(1), Exp(2)): both race orders convolve stage rate 3 with
        // the survivor rate
        let first = Expolynomial::exponential(rat(3, 1));
        let expected = first
            .convolve_exp(&rat(2, 1))
            .scale(&rat(1, 3))
            .add(&first.convolve_exp(&rat(1, 1)).scale(&rat(2, 3)));
        assert_eq!(at.density, expected);
        assert_eq!(at.density.integral(), rat(1, 1));
    }
}
