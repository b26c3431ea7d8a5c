//! The bisimulation-matrix engine.
//!
//! Distribution equivalence on a finite probabilistic automaton is captured
//! by a matrix E: two distributions are equivalent iff their difference
//! annihilates every column. The minimal such matrix is computed as a least
//! fixpoint: seed with the all-ones column, then repeatedly multiply by the
//! extremal instantiations of the parametric transition matrices and adjoin
//! any column that falls outside the current span.
//!
//! Extremal instantiations are found geometrically: per state, each pure
//! transition projects through E to a generator row; a tuple of pure choices
//! is kept iff the sum of its rows is a vertex of the polytope spanned by
//! all tuple sums.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactlin::{
    format_rat, hull_vertices, is_vertex, ColumnBasis, LinAlgError, Matrix, Rat,
};
use crate::pa::{ChoiceAssignment, Dist, LabelSet, Pa, PaError, ParamTransMatrix, Transition};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BisimError {
    #[error("choice explosion: {product} pure tuples exceed the cap of {cap}")]
    ChoiceExplosion { product: u128, cap: u64 },
    #[error(transparent)]
    Pa(#[from] PaError),
    #[error(transparent)]
    LinAlg(#[from] LinAlgError),
}

/// Which relation the fixpoint computes.
///
/// `Full` quantifies over all label subsets. `Singleton` is the related
/// notion that first makes the automaton input-enabled by redirecting
/// missing transitions into a fresh absorbing sink, then considers only
/// singleton label sets. `ExactLabel` is the variant that instead completes
/// missing transitions with self-loops and schedules one label set per
/// distinct enabled-label signature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Full,
    Singleton,
    ExactLabel,
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Variant::Full => write!(f, "full"),
            Variant::Singleton => write!(f, "singleton"),
            Variant::ExactLabel => write!(f, "exact-label"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BisimOptions {
    pub variant: Variant,
    pub max_choices: u64,
    pub jobs: usize,
}

impl Default for BisimOptions {
    fn default() -> Self {
        BisimOptions {
            variant: Variant::Full,
            max_choices: 1_000_000,
            jobs: 1,
        }
    }
}

/// Provenance of one adjoined basis column: the label set and the pure
/// choice per state that produced it. The seed column has both empty.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub labelset: Vec<String>,
    pub choice: BTreeMap<String, usize>,
}

/// The bisimulation matrix: a canonical column basis over the (possibly
/// completed) automaton's states together with the log of how each adjoined
/// column arose.
#[derive(Debug, Clone)]
pub struct BisimMatrix {
    states: Vec<String>,
    basis: ColumnBasis,
    provenance: Vec<Provenance>,
    variant: Variant,
}

impl BisimMatrix {
    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn basis(&self) -> &ColumnBasis {
        &self.basis
    }

    pub fn rank(&self) -> usize {
        self.basis.rank()
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    pub fn as_matrix(&self) -> Result<Matrix, LinAlgError> {
        self.basis.as_matrix()
    }

    /// Pads a distribution over a prefix of the states (the original
    /// automaton, before any variant completion) up to the basis dimension.
    fn pad(&self, d: &Dist) -> Result<Vec<Rat>, BisimError> {
        let n = self.basis.rows();
        if d.len() > n {
            return Err(LinAlgError::DimensionMismatch {
                expected: n,
                got: d.len(),
            }
            .into());
        }
        let mut v = d.as_slice().to_vec();
        v.resize(n, Rat::zero());
        Ok(v)
    }

    /// Decides `(mu - nu) E = 0`; on failure reports the first violated
    /// column and the nonzero dot product as a witness.
    pub fn equivalent(&self, mu: &Dist, nu: &Dist) -> Result<EquivResult, BisimError> {
        let mu = self.pad(mu)?;
        let nu = self.pad(nu)?;
        let diff: Vec<Rat> = mu.iter().zip(&nu).map(|(a, b)| a - b).collect();
        for (j, col) in self.basis.columns().iter().enumerate() {
            let dot = crate::exactlin::dot(&diff, col);
            if !dot.is_zero() {
                return Ok(EquivResult {
                    equivalent: false,
                    witness: Some(Witness {
                        column_index: j,
                        column: col.clone(),
                        dot,
                    }),
                });
            }
        }
        Ok(EquivResult {
            equivalent: true,
            witness: None,
        })
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Dump<'a> {
            states: &'a [String],
            columns: Vec<Vec<String>>,
            provenance: &'a [Provenance],
        }
        let dump = Dump {
            states: &self.states,
            columns: self
                .basis
                .columns()
                .iter()
                .map(|c| c.iter().map(format_rat).collect())
                .collect(),
            provenance: &self.provenance,
        };
        let mut s = serde_json::to_string_pretty(&dump).expect("serializable");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivResult {
    pub equivalent: bool,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub column_index: usize,
    pub column: Vec<Rat>,
    pub dot: Rat,
}

/// One extremal pure choice: per enabled state the index of the chosen
/// transition and its realized generator row under the current matrix.
#[derive(Debug, Clone)]
pub struct ExtremalChoice {
    label_set: LabelSet,
    choice: BTreeMap<usize, usize>,
    rows: BTreeMap<usize, Vec<Rat>>,
}

impl ExtremalChoice {
    pub fn label_set(&self) -> &LabelSet {
        &self.label_set
    }

    pub fn choice(&self) -> &BTreeMap<usize, usize> {
        &self.choice
    }

    pub fn rows(&self) -> &BTreeMap<usize, Vec<Rat>> {
        &self.rows
    }

    pub fn assignment(&self, ptm: &ParamTransMatrix) -> ChoiceAssignment {
        let mut w = ChoiceAssignment::new();
        for (&s, &j) in &self.choice {
            w.set_pure(s, j, ptm.choices()[s].len());
        }
        w
    }

    /// Columns of `P^{W(c)} . E`, assembled from the realized rows; rows of
    /// states without a choice are zero.
    fn candidate_columns(&self, n_states: usize, e_cols: usize) -> Vec<Vec<Rat>> {
        (0..e_cols)
            .map(|k| {
                (0..n_states)
                    .map(|i| {
                        self.rows
                            .get(&i)
                            .map(|r| r[k].clone())
                            .unwrap_or_else(Rat::zero)
                    })
                    .collect()
            })
            .collect()
    }

    fn provenance(&self, pa: &Pa) -> Provenance {
        Provenance {
            labelset: self
                .label_set
                .iter()
                .map(|&l| pa.labels()[l].clone())
                .collect(),
            choice: self
                .choice
                .iter()
                .map(|(&s, &j)| (pa.states()[s].clone(), j))
                .collect(),
        }
    }
}

/// Enumerates the extremal pure choice tuples of a parametric transition
/// matrix with respect to the matrix `E`: per enabled state the generator
/// rows are the E-projections of its pure successor distributions, and a
/// tuple survives iff its row sum is a vertex of the cloud of all tuple
/// sums. Errors out when the tuple product exceeds `cap`.
pub fn extremal_choices(
    ptm: &ParamTransMatrix,
    e: &BisimMatrix,
    cap: u64,
) -> Result<Vec<ExtremalChoice>, BisimError> {
    extremal_choices_inner(ptm, &e.as_matrix()?, cap)
}

fn extremal_choices_inner(
    ptm: &ParamTransMatrix,
    e_mat: &Matrix,
    cap: u64,
) -> Result<Vec<ExtremalChoice>, BisimError> {
    let enabled: Vec<usize> = ptm.enabled().collect();
    if enabled.is_empty() {
        return Ok(Vec::new());
    }
    // distinct generator rows per state, keeping the first transition index
    // realizing each row
    let mut gens: Vec<Vec<(Vec<Rat>, usize)>> = Vec::with_capacity(enabled.len());
    for &s in &enabled {
        let mut rows: Vec<(Vec<Rat>, usize)> = Vec::new();
        for (j, d) in ptm.choices()[s].iter().enumerate() {
            let row = e_mat.vec_mul(d.as_slice())?;
            if !rows.iter().any(|(r, _)| r == &row) {
                rows.push((row, j));
            }
        }
        gens.push(rows);
    }
    let mut product: u128 = 1;
    for g in &gens {
        product = product.saturating_mul(g.len() as u128);
        if product > cap as u128 {
            return Err(BisimError::ChoiceExplosion { product, cap });
        }
    }
    // all tuple sums
    let e_cols = e_mat.cols();
    let mut tuples: Vec<(Vec<usize>, Vec<Rat>)> = Vec::with_capacity(product as usize);
    let mut idx = vec![0usize; gens.len()];
    loop {
        let mut sum = vec![Rat::zero(); e_cols];
        for (slot, &i) in idx.iter().enumerate() {
            for (acc, x) in sum.iter_mut().zip(&gens[slot][i].0) {
                *acc += x;
            }
        }
        tuples.push((idx.clone(), sum));
        // odometer
        let mut k = gens.len();
        loop {
            if k == 0 {
                break;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < gens[k].len() {
                break;
            }
            idx[k] = 0;
            if k == 0 {
                break;
            }
        }
        if idx.iter().all(|&i| i == 0) {
            break;
        }
    }
    let cloud: Vec<Vec<Rat>> = {
        let mut c: Vec<Vec<Rat>> = Vec::new();
        for (_, s) in &tuples {
            if !c.contains(s) {
                c.push(s.clone());
            }
        }
        c
    };
    let mut vertex_memo: BTreeMap<Vec<Rat>, bool> = BTreeMap::new();
    let mut out = Vec::new();
    for (idx, sum) in &tuples {
        let is_v = match vertex_memo.get(sum) {
            Some(&b) => b,
            None => {
                let b = is_vertex(sum, &cloud)?;
                vertex_memo.insert(sum.clone(), b);
                b
            }
        };
        if !is_v {
            continue;
        }
        let mut choice = BTreeMap::new();
        let mut rows = BTreeMap::new();
        for (slot, &i) in idx.iter().enumerate() {
            let s = enabled[slot];
            choice.insert(s, gens[slot][i].1);
            rows.insert(s, gens[slot][i].0.clone());
        }
        out.push(ExtremalChoice {
            label_set: ptm.label_set().clone(),
            choice,
            rows,
        });
    }
    Ok(out)
}

/// `rho E = 0` implies `rho P E = 0`, checked as column-space containment
/// of `P E` in `E`.
pub fn is_stable(e: &BisimMatrix, p: &Matrix) -> Result<bool, BisimError> {
    let pe = p.mul(&e.as_matrix()?)?;
    for col in pe.columns() {
        if !e.basis.in_span(&col)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Input-enables an automaton by redirecting every missing (state, label)
/// pair into a fresh absorbing sink.
pub fn sink_complete(pa: &Pa) -> Pa {
    let mut sink_name = String::from("sink");
    while pa.states().contains(&sink_name) {
        sink_name.push('\'');
    }
    let mut states = pa.states().to_vec();
    states.push(sink_name);
    let n = states.len();
    let sink = n - 1;
    let mut transitions: Vec<Transition> = pa
        .transitions()
        .iter()
        .map(|t| {
            let mut d = t.dist.as_slice().to_vec();
            d.resize(n, Rat::zero());
            Transition {
                from: t.from,
                label: t.label,
                dist: Dist::new(d).expect("padded distribution"),
            }
        })
        .collect();
    for s in 0..n {
        for l in 0..pa.labels().len() {
            let present = s < sink && pa.enabled_labels(s).contains(&l);
            if !present {
                transitions.push(Transition {
                    from: s,
                    label: l,
                    dist: Dist::dirac(n, sink),
                });
            }
        }
    }
    Pa::new(states, pa.labels().to_vec(), transitions).expect("completion keeps the automaton valid")
}

/// Input-enables an automaton by adding a self-loop for every missing
/// (state, label) pair.
pub fn self_loop_complete(pa: &Pa) -> Pa {
    let n = pa.states().len();
    let mut transitions = pa.transitions().to_vec();
    for s in 0..n {
        let enabled = pa.enabled_labels(s);
        for l in 0..pa.labels().len() {
            if !enabled.contains(&l) {
                transitions.push(Transition {
                    from: s,
                    label: l,
                    dist: Dist::dirac(n, s),
                });
            }
        }
    }
    Pa::new(pa.states().to_vec(), pa.labels().to_vec(), transitions)
        .expect("completion keeps the automaton valid")
}

/// The automaton actually iterated on and the label-set schedule of the
/// variant. `Full` iterates all nonempty subsets with enabled states in
/// size-then-lexicographic order; the other two variants first input-enable
/// the automaton and then iterate singletons, respectively one set per
/// distinct enabled-label signature.
pub fn apply_variant(pa: &Pa, variant: Variant) -> (Pa, Vec<LabelSet>) {
    match variant {
        Variant::Full => (pa.clone(), pa.label_subsets()),
        Variant::Singleton => {
            let completed = sink_complete(pa);
            let schedule = (0..completed.labels().len())
                .map(|l| LabelSet::from([l]))
                .collect();
            (completed, schedule)
        }
        Variant::ExactLabel => {
            let completed = self_loop_complete(pa);
            let mut sets: Vec<LabelSet> = Vec::new();
            for s in 0..completed.states().len() {
                let e = completed.enabled_labels(s);
                if !e.is_empty() && !sets.contains(&e) {
                    sets.push(e);
                }
            }
            sets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
            (completed, sets)
        }
    }
}

fn schedule_ptms(prepared: &Pa, variant: Variant, schedule: &[LabelSet]) -> Vec<ParamTransMatrix> {
    schedule
        .iter()
        .map(|set| {
            let mut ptm = prepared.param_trans_matrix(set);
            if variant == Variant::ExactLabel {
                ptm.zero_rows_except(prepared, set);
            }
            ptm
        })
        .collect()
}

/// Computes the minimal bisimulation matrix of the automaton under the
/// requested variant. The result is canonical (reduced column echelon form)
/// and independent of iteration order.
pub fn minimal_bisim_matrix(pa: &Pa, opts: &BisimOptions) -> Result<BisimMatrix, BisimError> {
    let (prepared, schedule) = apply_variant(pa, opts.variant);
    let ptms = schedule_ptms(&prepared, opts.variant, &schedule);
    let n = prepared.states().len();
    let mut basis = ColumnBasis::empty(n);
    basis.insert(&vec![Rat::one(); n])?;
    let mut provenance = vec![Provenance {
        labelset: Vec::new(),
        choice: BTreeMap::new(),
    }];

    loop {
        let mut changed = false;
        if opts.jobs > 1 {
            // evaluate all label sets against a snapshot of the basis, then
            // fold the candidates back in schedule order so the outcome is
            // schedule-independent
            let snapshot = basis.clone();
            let snapshot_cols = snapshot.rank();
            let results = parallel_candidates(&ptms, &snapshot, opts)?;
            for (_, choices) in results {
                for ch in choices {
                    for col in ch.candidate_columns(n, snapshot_cols) {
                        if basis.insert(&col)? {
                            changed = true;
                            provenance.push(ch.provenance(&prepared));
                        }
                    }
                }
            }
        } else {
            for ptm in &ptms {
                let e_mat = match basis.as_matrix() {
                    Ok(m) => m,
                    Err(_) => continue,
                };
                let choices = extremal_choices_inner(ptm, &e_mat, opts.max_choices)?;
                for ch in &choices {
                    for col in ch.candidate_columns(n, e_mat.cols()) {
                        if basis.insert(&col)? {
                            changed = true;
                            provenance.push(ch.provenance(&prepared));
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }

    Ok(BisimMatrix {
        states: prepared.states().to_vec(),
        basis,
        provenance,
        variant: opts.variant,
    })
}

type CandidateSet = Vec<(usize, Vec<ExtremalChoice>)>;

fn parallel_candidates(
    ptms: &[ParamTransMatrix],
    snapshot: &ColumnBasis,
    opts: &BisimOptions,
) -> Result<CandidateSet, BisimError> {
    let e_mat = snapshot.as_matrix()?;
    let jobs = opts.jobs.max(1).min(ptms.len().max(1));
    let chunk = ptms.len().div_ceil(jobs);
    let mut results: Vec<Result<CandidateSet, BisimError>> = Vec::new();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (c, batch) in ptms.chunks(chunk).enumerate() {
            let e_ref = &e_mat;
            let cap = opts.max_choices;
            handles.push(scope.spawn(move || {
                let mut out = Vec::new();
                for (k, ptm) in batch.iter().enumerate() {
                    out.push((c * chunk + k, extremal_choices_inner(ptm, e_ref, cap)?));
                }
                Ok(out)
            }));
        }
        for h in handles {
            results.push(h.join().expect("worker thread panicked"));
        }
    });
    let mut flat = Vec::new();
    for r in results {
        flat.extend(r?);
    }
    flat.sort_by_key(|(i, _)| *i);
    Ok(flat)
}

/// The closure of the all-ones column under left multiplication by each
/// single-label transition matrix. Only valid on action-deterministic
/// automata; reaches its fixpoint within |S| sweeps.
pub fn deterministic_bisim_matrix(pa: &Pa) -> Result<BisimMatrix, BisimError> {
    let n = pa.states().len();
    let matrices: Vec<(usize, Matrix)> = (0..pa.labels().len())
        .map(|l| Ok((l, pa.trans_matrix_det(l)?)))
        .collect::<Result<_, PaError>>()?;
    let mut basis = ColumnBasis::empty(n);
    basis.insert(&vec![Rat::one(); n])?;
    let mut provenance = vec![Provenance {
        labelset: Vec::new(),
        choice: BTreeMap::new(),
    }];
    let mut frontier: Vec<Vec<Rat>> = vec![vec![Rat::one(); n]];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for (l, m) in &matrices {
            for v in &frontier {
                let w = m.mul_vec(v)?;
                if basis.insert(&w)? {
                    provenance.push(Provenance {
                        labelset: vec![pa.labels()[*l].clone()],
                        choice: BTreeMap::new(),
                    });
                    next.push(w);
                }
            }
        }
        frontier = next;
    }
    Ok(BisimMatrix {
        states: pa.states().to_vec(),
        basis,
        provenance,
        variant: Variant::Full,
    })
}

/// Per-label-set report of the two defining clauses of the distribution
/// bisimulation: equal enabled mass, and equality of the polytopes of
/// reachable successor images, compared by their vertex sets.
#[derive(Debug, Clone)]
pub struct Def3Report {
    pub labelset: Vec<String>,
    pub mass_left: Rat,
    pub mass_right: Rat,
    pub clause1_ok: bool,
    pub clause2: Option<Clause2Report>,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct Clause2Report {
    pub left_vertices: Vec<Vec<Rat>>,
    pub right_vertices: Vec<Vec<Rat>>,
    pub equal: bool,
}

/// Checks both clauses for one label set. Clause 2 compares the vertex sets
/// of the sum polytopes generated by the support of each distribution;
/// equal masses make the normalizing factors cancel.
pub fn check_def3(
    pa: &Pa,
    e: &BisimMatrix,
    mu: &Dist,
    nu: &Dist,
    set: &LabelSet,
    cap: u64,
) -> Result<Def3Report, BisimError> {
    let enabled = pa.enabled_states(set)?;
    let mass_left = mu.mass_on(&enabled);
    let mass_right = nu.mass_on(&enabled);
    let clause1_ok = mass_left == mass_right;
    let labelset = set.iter().map(|&l| pa.labels()[l].clone()).collect();
    if !clause1_ok || mass_left.is_zero() {
        // with zero mass on both sides there is no lifted step to match
        return Ok(Def3Report {
            labelset,
            mass_left,
            mass_right,
            clause1_ok,
            clause2: None,
            pass: clause1_ok,
        });
    }
    let e_mat = e.as_matrix()?;
    let left = weighted_sum_cloud(pa, &e_mat, mu, set, &enabled, cap)?;
    let right = weighted_sum_cloud(pa, &e_mat, nu, set, &enabled, cap)?;
    let mut left_vertices = hull_vertices(&left)?;
    let mut right_vertices = hull_vertices(&right)?;
    left_vertices.sort();
    right_vertices.sort();
    let equal = left_vertices == right_vertices;
    Ok(Def3Report {
        labelset,
        mass_left,
        mass_right,
        clause1_ok,
        clause2: Some(Clause2Report {
            left_vertices,
            right_vertices,
            equal,
        }),
        pass: clause1_ok && equal,
    })
}

/// The cloud of mass-weighted pure tuple sums over the enabled support of
/// `mu`, projected through `E`.
fn weighted_sum_cloud(
    pa: &Pa,
    e_mat: &Matrix,
    mu: &Dist,
    set: &LabelSet,
    enabled: &BTreeSet<usize>,
    cap: u64,
) -> Result<Vec<Vec<Rat>>, BisimError> {
    let states: Vec<usize> = mu.support().filter(|s| enabled.contains(s)).collect();
    let mut gens: Vec<Vec<Vec<Rat>>> = Vec::with_capacity(states.len());
    for &s in &states {
        let mut rows: Vec<Vec<Rat>> = Vec::new();
        for d in pa.choices(s, set) {
            let mut row = e_mat.vec_mul(d.as_slice())?;
            for x in row.iter_mut() {
                *x *= mu.get(s);
            }
            if !rows.contains(&row) {
                rows.push(row);
            }
        }
        gens.push(rows);
    }
    let mut product: u128 = 1;
    for g in &gens {
        product = product.saturating_mul(g.len() as u128);
        if product > cap as u128 {
            return Err(BisimError::ChoiceExplosion { product, cap });
        }
    }
    let e_cols = e_mat.cols();
    let mut cloud: Vec<Vec<Rat>> = Vec::new();
    let mut idx = vec![0usize; gens.len()];
    loop {
        let mut sum = vec![Rat::zero(); e_cols];
        for (slot, &i) in idx.iter().enumerate() {
            for (acc, x) in sum.iter_mut().zip(&gens[slot][i]) {
                *acc += x;
            }
        }
        if !cloud.contains(&sum) {
            cloud.push(sum);
        }
        let mut k = gens.len();
        loop {
            if k == 0 {
                break;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < gens[k].len() {
                break;
            }
            idx[k] = 0;
            if k == 0 {
                break;
            }
        }
        if idx.iter().all(|&i| i == 0) {
            break;
        }
    }
    Ok(cloud)
}
