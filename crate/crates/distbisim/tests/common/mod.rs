//! Shared helpers for the integration suites: model loading and seeded
//! random model generators.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use rand::Rng;

use distbisim::bisim::BisimMatrix;
use distbisim::ct::{Ctmc, Sa, SaEdge};
use distbisim::exactlin::{rat, Rat};
use distbisim::pa::{Dist, Pa, Transition};

pub fn data(name: &str) -> String {
    let path = format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("reading {path}: {e}"))
}

pub fn load_pa(name: &str) -> Pa {
    Pa::from_json(&data(name)).expect("valid model file")
}

pub fn load_ctmc(name: &str) -> Ctmc {
    Ctmc::from_json(&data(name)).expect("valid model file")
}

pub fn load_sa(name: &str) -> Sa {
    Sa::from_json(&data(name)).expect("valid model file")
}

pub fn dist(n: usize, entries: &[(usize, Rat)]) -> Dist {
    let mut v = vec![Rat::zero(); n];
    for (i, p) in entries {
        v[*i] = p.clone();
    }
    Dist::new(v).expect("valid distribution")
}

/// Random distribution over up to `max_support` of `n` states, with small
/// integer weights normalized exactly.
pub fn random_dist<R: Rng>(rng: &mut R, n: usize, max_support: usize) -> Dist {
    let k = rng.gen_range(1..=max_support.min(n));
    let mut support: Vec<usize> = (0..n).collect();
    for i in (1..support.len()).rev() {
        support.swap(i, rng.gen_range(0..=i));
    }
    support.truncate(k);
    let weights: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=6)).collect();
    let total: i64 = weights.iter().sum();
    let mut v = vec![Rat::zero(); n];
    for (s, w) in support.into_iter().zip(weights) {
        v[s] = rat(w, total);
    }
    Dist::new(v).expect("normalized")
}

/// Random automaton with up to 5 states, 3 labels, and 2 choices per state
/// and label.
pub fn random_pa<R: Rng>(rng: &mut R) -> Pa {
    let n = rng.gen_range(2..=5);
    let m = rng.gen_range(1..=3);
    let states: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let labels: Vec<String> = (0..m).map(|i| format!("l{i}")).collect();
    let mut transitions = Vec::new();
    for s in 0..n {
        for l in 0..m {
            if rng.gen_bool(0.5) {
                for _ in 0..rng.gen_range(1..=2) {
                    transitions.push(Transition {
                        from: s,
                        label: l,
                        dist: random_dist(rng, n, 3),
                    });
                }
            }
        }
    }
    Pa::new(states, labels, transitions).expect("generated automaton is valid")
}

/// Random automaton with at most one transition per state and label.
pub fn random_action_det_pa<R: Rng>(rng: &mut R) -> Pa {
    let n = rng.gen_range(2..=5);
    let m = rng.gen_range(1..=3);
    let states: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let labels: Vec<String> = (0..m).map(|i| format!("l{i}")).collect();
    let mut transitions = Vec::new();
    for s in 0..n {
        for l in 0..m {
            if rng.gen_bool(0.6) {
                transitions.push(Transition {
                    from: s,
                    label: l,
                    dist: random_dist(rng, n, 3),
                });
            }
        }
    }
    Pa::new(states, labels, transitions).expect("generated automaton is valid")
}

/// Random chain with up to `max_states` states and integer rates 1..=4.
pub fn random_ctmc<R: Rng>(rng: &mut R, max_states: usize) -> Ctmc {
    let n = rng.gen_range(1..=max_states);
    let states: Vec<String> = (0..n).map(|i| format!("c{i}")).collect();
    let mut rates = vec![vec![Rat::zero(); n]; n];
    for (i, row) in rates.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            if i != j && rng.gen_bool(0.5) {
                *cell = rat(rng.gen_range(1..=4), 1);
            }
        }
    }
    Ctmc::new(states, 0, rates).expect("generated chain is valid")
}

/// Random deterministic exponential automaton with no zero-delay edges:
/// per location the edges trigger on distinct single clocks, all of which
/// the location resamples on entry.
pub fn random_det_sa<R: Rng>(rng: &mut R) -> Sa {
    let n_loc = rng.gen_range(2..=3);
    let n_clocks = rng.gen_range(2..=4);
    let n_actions = rng.gen_range(1..=2);
    let locations: Vec<String> = (0..n_loc).map(|i| format!("q{i}")).collect();
    let clock_names: Vec<String> = (0..n_clocks).map(|i| format!("c{i}")).collect();
    let rate_pool = [rat(1, 2), rat(1, 1), rat(2, 1), rat(3, 1)];
    let clocks: BTreeMap<String, Rat> = clock_names
        .iter()
        .map(|c| (c.clone(), rate_pool[rng.gen_range(0..rate_pool.len())].clone()))
        .collect();
    let actions: Vec<String> = ["a", "b"][..n_actions]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut edges = Vec::new();
    let mut kappa: Vec<BTreeSet<String>> = vec![BTreeSet::new(); n_loc];
    for q in 0..n_loc {
        let mut available = clock_names.clone();
        let n_edges = rng.gen_range(1..=2.min(available.len()));
        for _ in 0..n_edges {
            let c = available.remove(rng.gen_range(0..available.len()));
            kappa[q].insert(c.clone());
            edges.push(SaEdge {
                from: q,
                action: rng.gen_range(0..n_actions),
                trigger: BTreeSet::from([c]),
                to: rng.gen_range(0..n_loc),
            });
        }
        // occasionally resample a clock that only ever expires silently
        if rng.gen_bool(0.3) && !available.is_empty() {
            kappa[q].insert(available[rng.gen_range(0..available.len())].clone());
        }
    }
    Sa::new(locations, clocks, actions, edges, kappa, 0).expect("generated automaton is valid")
}

/// A distribution equivalent to `mu` modulo the matrix: `mu` plus a random
/// annihilator perturbation, scaled into the simplex.
pub fn random_equivalent<R: Rng>(rng: &mut R, e: &BisimMatrix, mu: &Dist) -> Dist {
    let nulls = e.basis().annihilator_basis();
    if nulls.is_empty() {
        return mu.clone();
    }
    let mut rho = vec![Rat::zero(); mu.len()];
    for v in &nulls {
        let c = rat(rng.gen_range(-2..=2), 3);
        for (r, x) in rho.iter_mut().zip(v) {
            *r += &c * x;
        }
    }
    for scale_den in [4i64, 16, 64, 256] {
        let scale = rat(1, scale_den);
        let candidate: Vec<Rat> = mu
            .as_slice()
            .iter()
            .zip(&rho)
            .map(|(p, r)| p + &scale * r)
            .collect();
        if candidate.iter().all(|p| p >= &Rat::zero()) {
            return Dist::new(candidate).expect("mass preserved by annihilators");
        }
    }
    mu.clone()
}
