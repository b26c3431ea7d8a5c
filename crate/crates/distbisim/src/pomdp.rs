//! Belief equivalence for partially observable MDPs, by translation to an
//! observation-labelled probabilistic automaton: a state moves under the
//! label of its own observation block, one transition per distinct action
//! successor distribution.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bisim::{minimal_bisim_matrix, BisimError, BisimMatrix, BisimOptions};
use crate::pa::{parse_dist_map, Dist, Pa, PaError, Transition};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PomdpError {
    #[error("observations do not partition the state space: {0}")]
    BadPartition(String),
    #[error("unknown state {0:?}")]
    UnknownState(String),
    #[error("unknown action {0:?}")]
    UnknownAction(String),
    #[error(transparent)]
    Pa(#[from] PaError),
    #[error(transparent)]
    Bisim(#[from] BisimError),
    #[error("model file error: {0}")]
    Model(String),
}

/// A POMDP with observations given as a partition of the state space. The
/// transition function is total on the declared (state, action) pairs.
#[derive(Debug, Clone)]
pub struct Pomdp {
    states: Vec<String>,
    actions: Vec<String>,
    /// observation index per state
    observation_of: Vec<usize>,
    observation_names: Vec<String>,
    delta: Vec<(usize, usize, Dist)>,
}

impl Pomdp {
    pub fn new(
        states: Vec<String>,
        actions: Vec<String>,
        observations: Vec<Vec<usize>>,
        delta: Vec<(usize, usize, Dist)>,
    ) -> Result<Self, PomdpError> {
        let n = states.len();
        let mut observation_of = vec![usize::MAX; n];
        for (o, block) in observations.iter().enumerate() {
            for &s in block {
                if s >= n {
                    return Err(PomdpError::UnknownState(format!("#{s}")));
                }
                if observation_of[s] != usize::MAX {
                    return Err(PomdpError::BadPartition(format!(
                        "state {:?} appears in two blocks",
                        states[s]
                    )));
                }
                observation_of[s] = o;
            }
        }
        if let Some(s) = observation_of.iter().position(|&o| o == usize::MAX) {
            return Err(PomdpError::BadPartition(format!(
                "state {:?} is not covered",
                states[s]
            )));
        }
        for (s, a, d) in &delta {
            if *s >= n {
                return Err(PomdpError::UnknownState(format!("#{s}")));
            }
            if *a >= actions.len() {
                return Err(PomdpError::UnknownAction(format!("#{a}")));
            }
            if d.len() != n {
                return Err(PomdpError::Model(format!(
                    "distribution over {} states, automaton has {n}",
                    d.len()
                )));
            }
        }
        let observation_names = (0..observations.len()).map(|o| format!("o{o}")).collect();
        Ok(Pomdp {
            states,
            actions,
            observation_of,
            observation_names,
            delta,
        })
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn state_index(&self, name: &str) -> Result<usize, PomdpError> {
        self.states
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| PomdpError::UnknownState(name.to_string()))
    }

    pub fn observations(&self) -> &[String] {
        &self.observation_names
    }
}

/// The observation-labelled automaton: each state gets, under its own
/// observation label, one transition per distinct action successor
/// distribution. Labels are the observation identifiers.
pub fn pomdp_to_pa(m: &Pomdp) -> Result<Pa, PomdpError> {
    let transitions = m
        .delta
        .iter()
        .map(|(s, _, d)| Transition {
            from: *s,
            label: m.observation_of[*s],
            dist: d.clone(),
        })
        .collect();
    // duplicate (state, label, dist) triples collapse inside the automaton
    Ok(Pa::new(
        m.states.clone(),
        m.observation_names.clone(),
        transitions,
    )?)
}

/// Belief equivalence: the matrix fixpoint over the observation-labelled
/// automaton, queried on the two beliefs.
pub fn belief_equiv(m: &Pomdp, b1: &Dist, b2: &Dist) -> Result<(bool, BisimMatrix), PomdpError> {
    let pa = pomdp_to_pa(m)?;
    let e = minimal_bisim_matrix(&pa, &BisimOptions::default())?;
    let res = e.equivalent(b1, b2)?;
    Ok((res.equivalent, e))
}

// ---------------------------------------------------------------------------
// JSON model format

#[derive(Debug, Serialize, Deserialize)]
pub struct PomdpFile {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub observations: Vec<Vec<String>>,
    pub delta: Vec<DeltaFile>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DeltaFile {
    pub state: String,
    pub action: String,
    pub dist: BTreeMap<String, String>,
}

impl Pomdp {
    pub fn from_json(text: &str) -> Result<Self, PomdpError> {
        let file: PomdpFile =
            serde_json::from_str(text).map_err(|e| PomdpError::Model(e.to_string()))?;
        let state_index = |name: &str| {
            file.states
                .iter()
                .position(|s| s == name)
                .ok_or_else(|| PomdpError::UnknownState(name.to_string()))
        };
        let observations = file
            .observations
            .iter()
            .map(|block| block.iter().map(|s| state_index(s)).collect())
            .collect::<Result<Vec<Vec<usize>>, _>>()?;
        let mut delta = Vec::new();
        for (k, d) in file.delta.iter().enumerate() {
            let s = state_index(&d.state)
                .map_err(|e| PomdpError::Model(format!("delta[{k}].state: {e}")))?;
            let a = file
                .actions
                .iter()
                .position(|x| x == &d.action)
                .ok_or_else(|| {
                    PomdpError::Model(format!("delta[{k}].action: unknown action {:?}", d.action))
                })?;
            let dist = parse_dist_map(&d.dist, &file.states)
                .map_err(|e| PomdpError::Model(format!("delta[{k}].dist: {e}")))?;
            delta.push((s, a, dist));
        }
        Pomdp::new(file.states, file.actions, observations, delta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactlin::rat;
    use crate::exactlin::Rat;

    fn dist(n: usize, entries: &[(usize, Rat)]) -> Dist {
        let mut v = vec![Rat::zero(); n];
        for (i, p) in entries {
            v[*i] = p.clone();
        }
        Dist::new(v).unwrap()
    }

    use num_traits::Zero;

    #[test]
    fn swap_under_one_observation() {
        let m = Pomdp::new(
            vec!["s0".into(), "s1".into()],
            vec!["go".into()],
            vec![vec![0, 1]],
            vec![
                (0, 0, Dist::dirac(2, 1)),
                (1, 0, Dist::dirac(2, 0)),
            ],
        )
        .unwrap();
        let pa = pomdp_to_pa(&m).unwrap();
        assert_eq!(pa.labels(), &["o0".to_string()]);
        assert_eq!(pa.transitions().len(), 2);
    }

    #[test]
    fn fully_observable_states_get_distinct_labels() {
        let m = Pomdp::new(
            vec!["s0".into(), "s1".into()],
            vec!["go".into()],
            vec![vec![0], vec![1]],
            vec![
                (0, 0, Dist::dirac(2, 1)),
                (1, 0, Dist::dirac(2, 1)),
            ],
        )
        .unwrap();
        let pa = pomdp_to_pa(&m).unwrap();
        assert_eq!(pa.labels().len(), 2);
        // behaviourally identical states under distinct observations stay
        // distinguishable through the label mass clause
        let (eq, _) = belief_equiv(&m, &Dist::dirac(2, 0), &Dist::dirac(2, 1)).unwrap();
        assert!(!eq);
    }

    #[test]
    fn actions_sharing_delta_collapse() {
        let m = Pomdp::new(
            vec!["s0".into(), "s1".into(), "s2".into()],
            vec!["a".into(), "b".into()],
            vec![vec![0, 1, 2]],
            vec![
                (0, 0, Dist::dirac(3, 1)),
                (0, 1, Dist::dirac(3, 1)),
                (0, 1, Dist::dirac(3, 2)),
            ],
        )
        .unwrap();
        let pa = pomdp_to_pa(&m).unwrap();
        // two of the three rows coincide
        assert_eq!(pa.transitions().len(), 2);
    }

    #[test]
    fn beliefs_mixing_identical_rows_are_equivalent() {
        // two states inside one block with identical successor rows
        let m = Pomdp::new(
            vec!["s0".into(), "s1".into(), "t".into()],
            vec!["a".into()],
            vec![vec![0, 1], vec![2]],
            vec![
                (0, 0, Dist::dirac(3, 2)),
                (1, 0, Dist::dirac(3, 2)),
                (2, 0, Dist::dirac(3, 2)),
            ],
        )
        .unwrap();
        let b1 = dist(3, &[(0, rat(1, 3)), (1, rat(2, 3))]);
        let b2 = dist(3, &[(0, rat(3, 4)), (1, rat(1, 4))]);
        let (eq, _) = belief_equiv(&m, &b1, &b2).unwrap();
        assert!(eq);
    }

    #[test]
    fn partition_must_cover_and_be_disjoint() {
        assert!(matches!(
            Pomdp::new(
                vec!["s0".into(), "s1".into()],
                vec![],
                vec![vec![0]],
                vec![],
            ),
            Err(PomdpError::BadPartition(_))
        ));
        assert!(matches!(
            Pomdp::new(
                vec!["s0".into()],
                vec![],
                vec![vec![0], vec![0]],
                vec![],
            ),
            Err(PomdpError::BadPartition(_))
        ));
    }

    #[test]
    fn label_count_matches_observation_count() {
        let m = Pomdp::new(
            vec!["s0".into(), "s1".into(), "s2".into()],
            vec!["a".into()],
            vec![vec![0, 1], vec![2]],
            vec![(0, 0, Dist::dirac(3, 2))],
        )
        .unwrap();
        let pa = pomdp_to_pa(&m).unwrap();
        assert_eq!(pa.labels().len(), 2);
        // each state is enabled for exactly its own observation label
        for s in 0..3 {
            if pa.transitions().iter().any(|t| t.from == s) {
                let labels = pa.enabled_labels(s);
                assert_eq!(labels.len(), 1);
            }
        }
    }

    #[test]
    fn json_loading() {
        let text = r#"{
            "states": ["s0", "s1"],
            "actions": ["a"],
            "observations": [["s0", "s1"]],
            "delta": [
                { "state": "s0", "action": "a", "dist": { "s1": "1" } },
                { "state": "s1", "action": "a", "dist": { "s0": "1/2", "s1": "1/2" } }
            ]
        }"#;
        let m = Pomdp::from_json(text).unwrap();
        assert_eq!(m.states().len(), 2);
        let pa = pomdp_to_pa(&m).unwrap();
        assert_eq!(pa.transitions().len(), 2);
    }
}
