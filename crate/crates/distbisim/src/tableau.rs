//! Tableau proof search for bisimilarity over the finite abstraction.
//!
//! A node carries a pair of discrete distributions over abstraction states,
//! understood as the difference vector left - right. A node closes when its
//! vector is linearly dependent on the vectors of previously expanded nodes
//! (repeats are the special case of exact recurrence); otherwise its timing
//! must be compatible, and the unique per-action successors become its
//! children. An incompatible node is refuted by a failure leaf. Since every
//! expansion adds an independent vector, at most dimension-many expansions
//! happen and the search always terminates.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::abstraction::{abstract_sa, AbstractionError, FinitePa};
use crate::bisim::BisimError;
use crate::ct::{ctmc_parallel, ctmc_to_sa, sa_disjoint_union, sa_parallel, Ctmc, CtError, Sa};
use crate::exactlin::{format_rat, solve_linear_combination, ColumnBasis, LinAlgError, Rat};
use crate::expoly::{Expolynomial, TermFile};
use crate::pa::{Dist, Pa, PaError, Transition};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TableauError {
    #[error(transparent)]
    Abstraction(#[from] AbstractionError),
    #[error(transparent)]
    Ct(#[from] CtError),
    #[error(transparent)]
    LinAlg(#[from] LinAlgError),
    #[error("distribution has {got} entries, abstraction has {expected} states")]
    BadDistribution { expected: usize, got: usize },
    #[error("step expansion requested on a node with incompatible timing")]
    IncompatibleStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleTag {
    /// Inner node expanded by the step rule; children follow. A node whose
    /// timing check failed also carries this tag, with a single failure
    /// child.
    Step,
    /// Closed: the difference vector repeats an ancestor pair exactly
    /// (or the two sides are equal).
    Repeat,
    /// Closed: the difference vector is linearly dependent on the
    /// retained expanded nodes.
    Lin,
    /// Refuted: timing mismatch.
    Failure,
    /// Queued but never processed; only present in refuted tableaux.
    Open,
}

#[derive(Debug, Clone)]
pub struct TableauNode {
    pub left: Vec<Rat>,
    pub right: Vec<Rat>,
    pub parent: Option<usize>,
    /// Action on the edge from the parent.
    pub action: Option<usize>,
    pub depth: usize,
    pub rule: RuleTag,
    /// For closed nodes: coefficients over the retained node vectors, in
    /// retention order.
    pub lin_coefficients: Option<Vec<Rat>>,
    /// How many retained vectors existed when this node was processed.
    pub retained_before: usize,
}

impl TableauNode {
    pub fn difference(&self) -> Vec<Rat> {
        self.left
            .iter()
            .zip(&self.right)
            .map(|(a, b)| a - b)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Tableau {
    pub nodes: Vec<TableauNode>,
}

impl Tableau {
    /// Indices of the expanded (retained) nodes in retention order.
    pub fn retained(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.rule == RuleTag::Step)
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct TimingMismatch {
    pub action: usize,
    pub left_mass: Rat,
    pub right_mass: Rat,
    pub left_atom: Rat,
    pub right_atom: Rat,
    pub left_density: Expolynomial,
    pub right_density: Expolynomial,
}

#[derive(Debug, Clone)]
pub enum Verdict {
    Bisimilar(Tableau),
    NotBisimilar {
        tableau: Tableau,
        /// Root-to-failure node indices.
        failure_path: Vec<usize>,
        mismatch: TimingMismatch,
    },
}

impl Verdict {
    pub fn bisimilar(&self) -> bool {
        matches!(self, Verdict::Bisimilar(_))
    }

    pub fn tableau(&self) -> &Tableau {
        match self {
            Verdict::Bisimilar(t) => t,
            Verdict::NotBisimilar { tableau, .. } => tableau,
        }
    }

    /// The one-line verdict for standard output.
    pub fn line(&self, fpa: &FinitePa) -> String {
        match self {
            Verdict::Bisimilar(_) => "BISIMILAR".to_string(),
            Verdict::NotBisimilar {
                mismatch,
                failure_path,
                ..
            } => format!(
                "NOT-BISIMILAR: {} timing mismatch at depth {}",
                fpa.actions()[mismatch.action],
                failure_path.len().saturating_sub(2)
            ),
        }
    }
}

/// Per-action mixture of timing data under a distribution over states.
fn mixture(fpa: &FinitePa, dist: &[Rat], action: usize) -> (Rat, Rat, Expolynomial) {
    let mut mass = Rat::zero();
    let mut atom = Rat::zero();
    let mut density = Expolynomial::zero();
    for (s, p) in dist.iter().enumerate() {
        if p.is_zero() {
            continue;
        }
        if let Some(b) = fpa.behavior(s).get(&action) {
            mass += p * &b.mass;
            atom += p * &b.atom;
            density = density.add(&b.density.scale(p));
        }
    }
    (mass, atom, density)
}

#[derive(Debug, Clone)]
pub struct ActionTimingCheck {
    pub action: usize,
    pub left_mass: Rat,
    pub right_mass: Rat,
    pub left_atom: Rat,
    pub right_atom: Rat,
    pub left_density: Expolynomial,
    pub right_density: Expolynomial,
    pub ok: bool,
}

#[derive(Debug, Clone)]
pub struct TimingReport {
    pub compatible: bool,
    pub per_action: Vec<ActionTimingCheck>,
}

/// Two distributions have compatible timing if for every action the moving
/// mass agrees and the mixed first-transition time measures (atom and
/// density) agree exactly. Exactness is sound because distinct canonical
/// expolynomials represent distinct functions.
pub fn compatible_timing(fpa: &FinitePa, mu: &[Rat], nu: &[Rat]) -> TimingReport {
    let mut per_action = Vec::new();
    let mut compatible = true;
    for action in 0..fpa.actions().len() {
        let (lm, la, ld) = mixture(fpa, mu, action);
        let (rm, ra, rd) = mixture(fpa, nu, action);
        let ok = lm == rm && la == ra && ld == rd;
        compatible &= ok;
        per_action.push(ActionTimingCheck {
            action,
            left_mass: lm,
            right_mass: rm,
            left_atom: la,
            right_atom: ra,
            left_density: ld,
            right_density: rd,
            ok,
        });
    }
    TimingReport {
        compatible,
        per_action,
    }
}

/// The unique per-action children of a timing-compatible node: restrict to
/// the states that move under the action, push through their successor
/// distributions, and renormalize.
pub fn step_children(
    fpa: &FinitePa,
    mu: &[Rat],
    nu: &[Rat],
) -> Result<Vec<(usize, Vec<Rat>, Vec<Rat>)>, TableauError> {
    let report = compatible_timing(fpa, mu, nu);
    if !report.compatible {
        return Err(TableauError::IncompatibleStep);
    }
    let mut out = Vec::new();
    for check in &report.per_action {
        if check.left_mass.is_zero() {
            continue;
        }
        let push = |dist: &[Rat], mass: &Rat| {
            let mut next = vec![Rat::zero(); fpa.len()];
            for (s, p) in dist.iter().enumerate() {
                if p.is_zero() {
                    continue;
                }
                if let Some(b) = fpa.behavior(s).get(&check.action) {
                    let w = p * &b.mass / mass;
                    for (t, q) in &b.successors {
                        next[*t] += &w * q;
                    }
                }
            }
            next
        };
        out.push((
            check.action,
            push(mu, &check.left_mass),
            push(nu, &check.right_mass),
        ));
    }
    Ok(out)
}

/// True iff the node's difference vector lies in the span of the retained
/// vectors.
pub fn lin_closes(retained: &ColumnBasis, difference: &[Rat]) -> Result<bool, LinAlgError> {
    if retained.rank() == 0 {
        return Ok(difference.iter().all(Rat::is_zero));
    }
    retained.in_span(difference)
}

fn check_dist(fpa: &FinitePa, d: &[Rat]) -> Result<(), TableauError> {
    if d.len() != fpa.len() {
        return Err(TableauError::BadDistribution {
            expected: fpa.len(),
            got: d.len(),
        });
    }
    Ok(())
}

/// Decides bisimilarity of two distributions over the abstraction states.
/// Worklist search, breadth-first with children ordered by action: close by
/// repetition or linear dependence, refute on a timing mismatch, expand
/// otherwise.
pub fn decide(fpa: &FinitePa, mu0: &[Rat], nu0: &[Rat]) -> Result<Verdict, TableauError> {
    check_dist(fpa, mu0)?;
    check_dist(fpa, nu0)?;
    let mut nodes = vec![TableauNode {
        left: mu0.to_vec(),
        right: nu0.to_vec(),
        parent: None,
        action: None,
        depth: 0,
        rule: RuleTag::Open,
        lin_coefficients: None,
        retained_before: 0,
    }];
    let mut retained_basis = ColumnBasis::empty(fpa.len());
    let mut retained_vecs: Vec<Vec<Rat>> = Vec::new();
    let mut queue = std::collections::VecDeque::from([0usize]);

    while let Some(i) = queue.pop_front() {
        let diff = nodes[i].difference();
        nodes[i].retained_before = retained_vecs.len();
        if lin_closes(&retained_basis, &diff)? {
            let coeffs = solve_linear_combination(&retained_vecs, &diff)?;
            let repeats = diff.iter().all(Rat::is_zero)
                || ancestors(&nodes, i).any(|a| {
                    nodes[a].left == nodes[i].left && nodes[a].right == nodes[i].right
                });
            nodes[i].rule = if repeats { RuleTag::Repeat } else { RuleTag::Lin };
            nodes[i].lin_coefficients = coeffs;
            continue;
        }
        let report = compatible_timing(fpa, &nodes[i].left, &nodes[i].right);
        if let Some(bad) = report.per_action.iter().find(|c| !c.ok) {
            nodes[i].rule = RuleTag::Step;
            let failure = TableauNode {
                left: nodes[i].left.clone(),
                right: nodes[i].right.clone(),
                parent: Some(i),
                action: Some(bad.action),
                depth: nodes[i].depth + 1,
                rule: RuleTag::Failure,
                lin_coefficients: None,
                retained_before: retained_vecs.len(),
            };
            nodes.push(failure);
            let failure_idx = nodes.len() - 1;
            let mut path: Vec<usize> = std::iter::once(failure_idx)
                .chain(ancestors(&nodes, failure_idx))
                .collect();
            path.reverse();
            return Ok(Verdict::NotBisimilar {
                tableau: Tableau { nodes },
                failure_path: path,
                mismatch: TimingMismatch {
                    action: bad.action,
                    left_mass: bad.left_mass.clone(),
                    right_mass: bad.right_mass.clone(),
                    left_atom: bad.left_atom.clone(),
                    right_atom: bad.right_atom.clone(),
                    left_density: bad.left_density.clone(),
                    right_density: bad.right_density.clone(),
                },
            });
        }
        nodes[i].rule = RuleTag::Step;
        retained_basis.insert(&diff)?;
        retained_vecs.push(diff);
        for (action, left, right) in step_children(fpa, &nodes[i].left, &nodes[i].right)? {
            nodes.push(TableauNode {
                left,
                right,
                parent: Some(i),
                action: Some(action),
                depth: nodes[i].depth + 1,
                rule: RuleTag::Open,
                lin_coefficients: None,
                retained_before: 0,
            });
            queue.push_back(nodes.len() - 1);
        }
    }
    Ok(Verdict::Bisimilar(Tableau { nodes }))
}

fn ancestors(nodes: &[TableauNode], from: usize) -> impl Iterator<Item = usize> + '_ {
    std::iter::successors(nodes[from].parent, move |&i| nodes[i].parent)
}

/// Re-derives every rule application of a finished tableau: expanded nodes
/// must be timing-compatible with exactly the recorded children, closures
/// must reproduce their dependence coefficients, and a successful tableau
/// must not contain a failure node.
pub fn verify_tableau(fpa: &FinitePa, tableau: &Tableau, expect_success: bool) -> bool {
    let mut retained: Vec<Vec<Rat>> = Vec::new();
    for (i, node) in tableau.nodes.iter().enumerate() {
        let diff = node.difference();
        match node.rule {
            RuleTag::Step => {
                if node.retained_before != retained.len() {
                    return false;
                }
                let refuted = tableau
                    .nodes
                    .iter()
                    .any(|n| n.parent == Some(i) && n.rule == RuleTag::Failure);
                if refuted {
                    // the step rule on incompatible timing yields exactly
                    // the failure child
                    if compatible_timing(fpa, &node.left, &node.right).compatible {
                        return false;
                    }
                    continue;
                }
                let Ok(children) = step_children(fpa, &node.left, &node.right) else {
                    return false;
                };
                let recorded: Vec<&TableauNode> = tableau
                    .nodes
                    .iter()
                    .filter(|n| n.parent == Some(i))
                    .collect();
                if recorded.len() != children.len() {
                    return false;
                }
                for (rec, (action, left, right)) in recorded.iter().zip(&children) {
                    if rec.action != Some(*action) || &rec.left != left || &rec.right != right {
                        return false;
                    }
                }
                retained.push(diff);
            }
            RuleTag::Open => {
                if expect_success {
                    return false;
                }
            }
            RuleTag::Repeat | RuleTag::Lin => {
                let Some(coeffs) = &node.lin_coefficients else {
                    return false;
                };
                let active = &retained[..node.retained_before.min(retained.len())];
                if coeffs.len() != active.len() {
                    return false;
                }
                let mut rec = vec![Rat::zero(); diff.len()];
                for (c, v) in coeffs.iter().zip(active) {
                    for (r, x) in rec.iter_mut().zip(v) {
                        *r += c * x;
                    }
                }
                if rec != diff {
                    return false;
                }
            }
            RuleTag::Failure => {
                if expect_success {
                    return false;
                }
                if compatible_timing(fpa, &node.left, &node.right).compatible {
                    return false;
                }
            }
        }
    }
    true
}

/// Decides bisimilarity of two locations of one deterministic exponential
/// automaton: abstract from both initial states and run the tableau on the
/// two Dirac distributions.
pub fn check_locations(sa: &Sa, q1: usize, q2: usize) -> Result<(FinitePa, Verdict), TableauError> {
    let fpa = abstract_sa(sa, &[q1, q2])?;
    let mut mu = vec![Rat::zero(); fpa.len()];
    mu[fpa.initials()[0]] = Rat::one();
    let mut nu = vec![Rat::zero(); fpa.len()];
    nu[fpa.initials()[1]] = Rat::one();
    let verdict = decide(&fpa, &mu, &nu)?;
    Ok((fpa, verdict))
}

/// Composition-vs-embedding coherence check for a pair of chains: compose
/// the embedded automata in parallel on one side, embed the composed chain
/// on the other, and decide bisimilarity of the two initial locations
/// inside the disjoint union. Returns the union automaton alongside the
/// abstraction and the verdict.
pub fn check_commute(c1: &Ctmc, c2: &Ctmc) -> Result<(Sa, FinitePa, Verdict), TableauError> {
    let left = sa_parallel(&ctmc_to_sa(c1), &ctmc_to_sa(c2));
    let right = ctmc_to_sa(&ctmc_parallel(c1, c2));
    let (union, map_l, map_r) = sa_disjoint_union(&left, &right);
    let fpa = abstract_sa(&union, &[map_l[left.initial()], map_r[right.initial()]])?;
    let mut mu = vec![Rat::zero(); fpa.len()];
    mu[fpa.initials()[0]] = Rat::one();
    let mut nu = vec![Rat::zero(); fpa.len()];
    nu[fpa.initials()[1]] = Rat::one();
    let verdict = decide(&fpa, &mu, &nu)?;
    Ok((union, fpa, verdict))
}

impl FinitePa {
    /// Forgets timing: the abstraction as a plain probabilistic automaton,
    /// one transition per state and positive-mass action.
    pub fn to_pa(&self) -> Result<Pa, BisimError> {
        let mut transitions = Vec::new();
        for s in 0..self.len() {
            for (&a, b) in self.behavior(s) {
                if b.mass.is_zero() {
                    continue;
                }
                let mut d = vec![Rat::zero(); self.len()];
                for (t, p) in &b.successors {
                    d[*t] = p.clone();
                }
                transitions.push(Transition {
                    from: s,
                    label: a,
                    dist: Dist::new(d).map_err(PaError::from)?,
                });
            }
        }
        Ok(Pa::new(
            self.names().to_vec(),
            self.actions().to_vec(),
            transitions,
        )
        .map_err(BisimError::Pa)?)
    }
}

// ---------------------------------------------------------------------------
// JSON dump

pub fn tableau_to_json(fpa: &FinitePa, verdict: &Verdict) -> String {
    #[derive(Serialize)]
    struct NodeDump {
        id: usize,
        parent: Option<usize>,
        action: Option<String>,
        rule: RuleTag,
        left: BTreeMap<String, String>,
        right: BTreeMap<String, String>,
        #[serde(skip_serializing_if = "Option::is_none")]
        lin_coefficients: Option<Vec<String>>,
    }
    #[derive(Serialize)]
    struct MismatchDump {
        action: String,
        left_mass: String,
        right_mass: String,
        left_atom: String,
        right_atom: String,
        left_density: Vec<TermFile>,
        right_density: Vec<TermFile>,
    }
    #[derive(Serialize)]
    struct Dump<'a> {
        states: &'a [String],
        verdict: &'static str,
        nodes: Vec<NodeDump>,
        #[serde(skip_serializing_if = "Option::is_none")]
        failure_path: Option<&'a [usize]>,
        #[serde(skip_serializing_if = "Option::is_none")]
        mismatch: Option<MismatchDump>,
    }
    let dist_map = |d: &[Rat]| {
        d.iter()
            .enumerate()
            .filter(|(_, p)| !p.is_zero())
            .map(|(s, p)| (fpa.names()[s].clone(), format_rat(p)))
            .collect::<BTreeMap<_, _>>()
    };
    let nodes = verdict
        .tableau()
        .nodes
        .iter()
        .enumerate()
        .map(|(id, n)| NodeDump {
            id,
            parent: n.parent,
            action: n.action.map(|a| fpa.actions()[a].clone()),
            rule: n.rule,
            left: dist_map(&n.left),
            right: dist_map(&n.right),
            lin_coefficients: n
                .lin_coefficients
                .as_ref()
                .map(|cs| cs.iter().map(format_rat).collect()),
        })
        .collect();
    let dump = match verdict {
        Verdict::Bisimilar(_) => Dump {
            states: fpa.names(),
            verdict: "BISIMILAR",
            nodes,
            failure_path: None,
            mismatch: None,
        },
        Verdict::NotBisimilar {
            failure_path,
            mismatch,
            ..
        } => Dump {
            states: fpa.names(),
            verdict: "NOT-BISIMILAR",
            nodes,
            failure_path: Some(failure_path),
            mismatch: Some(MismatchDump {
                action: fpa.actions()[mismatch.action].clone(),
                left_mass: format_rat(&mismatch.left_mass),
                right_mass: format_rat(&mismatch.right_mass),
                left_atom: format_rat(&mismatch.left_atom),
                right_atom: format_rat(&mismatch.right_atom),
                left_density: mismatch.left_density.to_file(),
                right_density: mismatch.right_density.to_file(),
            }),
        },
    };
    let mut s = serde_json::to_string_pretty(&dump).expect("serializable");
    s.push('\n');
    s
}
