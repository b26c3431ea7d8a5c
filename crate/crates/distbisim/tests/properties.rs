//! Property suites for the algebraic invariants: exactness and scaling
//! stability of the geometry primitives, conservation and linearity of the
//! lifted step, canonicality of the fixpoint, and conservation of the
//! abstraction.

mod common;

use std::collections::BTreeSet;

use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use distbisim::abstraction::{abstract_sa, initial_symstate, timing_profile, validate_deterministic};
use distbisim::bisim::{deterministic_bisim_matrix, minimal_bisim_matrix, BisimOptions};
use distbisim::exactlin::{is_vertex, rat, reduce, solve_linear_combination, Rat};
use distbisim::pa::{ChoiceAssignment, Dist, LabelSet, Pa, Transition};
use distbisim::pomdp::{belief_equiv, pomdp_to_pa, Pomdp};
use distbisim::tableau::decide;

use common::*;

// ---------------------------------------------------------------------------
// independent oracles

/// Row-reduction rank, independent of the column-echelon basis code.
fn rank_by_rows(vectors: &[Vec<Rat>]) -> usize {
    let mut rows: Vec<Vec<Rat>> = vectors.to_vec();
    let dim = rows.first().map(|r| r.len()).unwrap_or(0);
    let mut rank = 0;
    for col in 0..dim {
        let Some(pivot) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, pivot);
        let inv = rows[rank][col].clone();
        for v in rows[rank].iter_mut() {
            *v /= &inv;
        }
        for r in 0..rows.len() {
            if r != rank && !rows[r][col].is_zero() {
                let f = rows[r][col].clone();
                for c in 0..dim {
                    let d = &f * &rows[rank][c];
                    rows[r][c] -= d;
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

/// Carathéodory-style brute force: a point fails to be a vertex iff some
/// affinely independent subset of at most dim+1 other points contains it
/// in its hull; such subsets have unique combination coefficients, found
/// by an exact linear solve.
fn is_vertex_bruteforce(p: &[Rat], cloud: &[Vec<Rat>]) -> bool {
    let others: Vec<&Vec<Rat>> = cloud.iter().filter(|q| q.as_slice() != p).collect();
    let dim = p.len();
    let max_k = dim + 1;
    let mut target = p.to_vec();
    target.push(Rat::one());
    for mask in 1u32..(1 << others.len()) {
        if (mask.count_ones() as usize) > max_k {
            continue;
        }
        let cols: Vec<Vec<Rat>> = (0..others.len())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| {
                let mut v = others[i].clone();
                v.push(Rat::one());
                v
            })
            .collect();
        if let Some(lambda) = solve_linear_combination(&cols, &target).unwrap() {
            let mut acc = vec![Rat::zero(); dim + 1];
            for (l, c) in lambda.iter().zip(&cols) {
                for (a, x) in acc.iter_mut().zip(c) {
                    *a += l * x;
                }
            }
            if acc == target && lambda.iter().all(|l| l >= &Rat::zero()) {
                return false;
            }
        }
    }
    true
}

fn small_rat() -> impl Strategy<Value = Rat> {
    (-4i64..=4, 1i64..=4).prop_map(|(n, d)| rat(n, d))
}

fn small_vectors(dim: usize, count: usize) -> impl Strategy<Value = Vec<Vec<Rat>>> {
    proptest::collection::vec(proptest::collection::vec(small_rat(), dim), 1..=count)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn reduce_is_idempotent(vs in small_vectors(4, 6)) {
        let b1 = reduce(&vs).unwrap();
        if b1.rank() > 0 {
            let b2 = reduce(b1.columns()).unwrap();
            prop_assert_eq!(b1, b2);
        }
    }

    #[test]
    fn span_membership_matches_rank_growth(vs in small_vectors(4, 5), v in proptest::collection::vec(small_rat(), 4)) {
        let basis = reduce(&vs).unwrap();
        let r_before = rank_by_rows(&vs);
        let mut extended = vs.clone();
        extended.push(v.clone());
        let r_after = rank_by_rows(&extended);
        prop_assert_eq!(basis.in_span(&v).unwrap(), r_before == r_after);
        prop_assert_eq!(basis.rank(), r_before);
    }

    #[test]
    fn vertex_test_matches_bruteforce(cloud in small_vectors(3, 6)) {
        for p in &cloud {
            let lp = is_vertex(p, &cloud).unwrap();
            let brute = is_vertex_bruteforce(p, &cloud);
            prop_assert_eq!(lp, brute, "point {:?} in {:?}", p, cloud);
        }
    }

    #[test]
    fn integer_scaling_never_changes_geometry(cloud in small_vectors(3, 5), scale in 1i64..=5) {
        let scaled: Vec<Vec<Rat>> = cloud
            .iter()
            .map(|v| v.iter().map(|x| x * rat(scale, 1)).collect())
            .collect();
        for (p, q) in cloud.iter().zip(&scaled) {
            prop_assert_eq!(
                is_vertex(p, &cloud).unwrap(),
                is_vertex(q, &scaled).unwrap()
            );
        }
        let b = reduce(&cloud).unwrap();
        let bs = reduce(&scaled).unwrap();
        prop_assert_eq!(b.rank(), bs.rank());
        for (v, w) in cloud.iter().zip(&scaled) {
            prop_assert_eq!(b.in_span(v).unwrap(), bs.in_span(w).unwrap());
        }
    }
}

// ---------------------------------------------------------------------------
// lifted step

#[test]
fn lift_step_conserves_mass_and_matches_det_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let pa = random_action_det_pa(&mut rng);
        let n = pa.states().len();
        let mu = random_dist(&mut rng, n, 3);
        for l in 0..pa.labels().len() {
            let set: LabelSet = [l].into();
            let enabled = pa.enabled_states(&set).unwrap();
            if mu.mass_on(&enabled).is_zero() {
                continue;
            }
            let nu = pa.lift_step(&mu, &set, &ChoiceAssignment::new()).unwrap();
            let total: Rat = nu.as_slice().iter().sum();
            assert!(total.is_one());
            // Dirac lifts reproduce the matrix rows
            let p = pa.trans_matrix_det(l).unwrap();
            for s in enabled {
                let dirac = Dist::dirac(n, s);
                let lifted = pa.lift_step(&dirac, &set, &ChoiceAssignment::new()).unwrap();
                assert_eq!(lifted.as_slice(), p.row(s));
            }
        }
    }
}

#[test]
fn lift_step_is_linear_on_enabled_support() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut checked = 0;
    while checked < 60 {
        let pa = random_pa(&mut rng);
        let n = pa.states().len();
        let set: LabelSet = [0].into();
        let enabled = pa.enabled_states(&set).unwrap();
        if enabled.is_empty() {
            continue;
        }
        let enabled_vec: Vec<usize> = enabled.iter().copied().collect();
        let pick = |rng: &mut ChaCha8Rng| {
            let s = enabled_vec[rng.gen_range(0..enabled_vec.len())];
            Dist::dirac(n, s)
        };
        let mu1 = pick(&mut rng);
        let mu2 = pick(&mut rng);
        // fix one pure choice per state so both lifts use the same scheduler
        let mut choice = ChoiceAssignment::new();
        for &s in &enabled_vec {
            let k = pa.choices(s, &set).len();
            choice.set_pure(s, rng.gen_range(0..k), k);
        }
        let p = rat(rng.gen_range(0..=4), 4);
        let blend: Vec<Rat> = mu1
            .as_slice()
            .iter()
            .zip(mu2.as_slice())
            .map(|(a, b)| &p * a + (Rat::one() - &p) * b)
            .collect();
        let blend = Dist::new(blend).unwrap();
        let lifted_blend = pa.lift_step(&blend, &set, &choice).unwrap();
        let l1 = pa.lift_step(&mu1, &set, &choice).unwrap();
        let l2 = pa.lift_step(&mu2, &set, &choice).unwrap();
        let expected: Vec<Rat> = l1
            .as_slice()
            .iter()
            .zip(l2.as_slice())
            .map(|(a, b)| &p * a + (Rat::one() - &p) * b)
            .collect();
        assert_eq!(lifted_blend.as_slice(), &expected[..]);
        checked += 1;
    }
}

#[test]
fn instantiation_rows_sum_to_enabled_indicator() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let pa = random_pa(&mut rng);
        let m = pa.labels().len();
        let mask = rng.gen_range(1..(1u32 << m));
        let set: LabelSet = (0..m).filter(|i| mask >> i & 1 == 1).collect();
        let ptm = pa.param_trans_matrix(&set);
        let mut w = ChoiceAssignment::new();
        for s in ptm.enabled() {
            let k = ptm.choices()[s].len();
            // random rational weights summing to one
            let cuts: Vec<i64> = (0..k).map(|_| rng.gen_range(0..=3)).collect();
            let total: i64 = cuts.iter().sum::<i64>().max(1);
            let mut weights: Vec<Rat> = cuts.iter().map(|&c| rat(c, total)).collect();
            let leftover = Rat::one() - weights.iter().sum::<Rat>();
            weights[0] += leftover;
            w.set(s, weights);
        }
        let p = ptm.instantiate(&pa, &w).unwrap();
        let enabled = pa.enabled_states(&set).unwrap();
        for s in 0..pa.states().len() {
            let row_sum: Rat = p.row(s).iter().sum();
            if enabled.contains(&s) {
                assert!(row_sum.is_one());
            } else {
                assert!(row_sum.is_zero());
            }
        }
    }
}

// ---------------------------------------------------------------------------
// fixpoint canonicality

#[test]
fn relabelling_does_not_change_the_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..25 {
        let pa = random_pa(&mut rng);
        let m = pa.labels().len();
        // reverse the label declaration order; states stay fixed, so the
        // canonical matrix must be identical
        let perm: Vec<usize> = (0..m).rev().collect();
        let labels: Vec<String> = perm.iter().map(|&l| pa.labels()[l].clone()).collect();
        let transitions: Vec<Transition> = pa
            .transitions()
            .iter()
            .map(|t| Transition {
                from: t.from,
                label: perm.iter().position(|&l| l == t.label).unwrap(),
                dist: t.dist.clone(),
            })
            .collect();
        let relabelled = Pa::new(pa.states().to_vec(), labels, transitions).unwrap();
        let e1 = minimal_bisim_matrix(&pa, &BisimOptions::default()).unwrap();
        let e2 = minimal_bisim_matrix(&relabelled, &BisimOptions::default()).unwrap();
        assert_eq!(e1.basis(), e2.basis());
    }
}

#[test]
fn equivalence_is_linear() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..40 {
        let pa = random_pa(&mut rng);
        let n = pa.states().len();
        let e = minimal_bisim_matrix(&pa, &BisimOptions::default()).unwrap();
        let mu1 = random_dist(&mut rng, n, 3);
        let nu1 = random_equivalent(&mut rng, &e, &mu1);
        let mu2 = random_dist(&mut rng, n, 3);
        let nu2 = random_equivalent(&mut rng, &e, &mu2);
        let p = rat(rng.gen_range(0..=4), 4);
        let mix = |a: &Dist, b: &Dist| {
            Dist::new(
                a.as_slice()
                    .iter()
                    .zip(b.as_slice())
                    .map(|(x, y)| &p * x + (Rat::one() - &p) * y)
                    .collect(),
            )
            .unwrap()
        };
        let res = e.equivalent(&mix(&mu1, &mu2), &mix(&nu1, &nu2)).unwrap();
        assert!(res.equivalent);
    }
}

#[test]
fn deterministic_fixpoint_within_state_count_sweeps() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..40 {
        let pa = random_action_det_pa(&mut rng);
        let n = pa.states().len();
        // replay the closure sweep by sweep through the public operations
        let matrices: Vec<_> = (0..pa.labels().len())
            .map(|l| pa.trans_matrix_det(l).unwrap())
            .collect();
        let mut basis = reduce(&[vec![Rat::one(); n]]).unwrap();
        for _sweep in 0..n {
            let mut grew = false;
            let cols = basis.columns().to_vec();
            for m in &matrices {
                for v in &cols {
                    grew |= basis.insert(&m.mul_vec(v).unwrap()).unwrap();
                }
            }
            if !grew {
                break;
            }
        }
        // after |S| sweeps the closure must be complete
        let reference = deterministic_bisim_matrix(&pa).unwrap();
        assert_eq!(&basis, reference.basis());
    }
}

#[test]
fn rational_representation_does_not_matter() {
    // the same model written with unreduced fractions loads identically
    let a = Pa::from_json(&data("ex5.json")).unwrap();
    let b = Pa::from_json(&data("ex5.json").replace("1/2", "3/6")).unwrap();
    assert_eq!(a, b);
    let e1 = minimal_bisim_matrix(&a, &BisimOptions::default()).unwrap();
    let e2 = minimal_bisim_matrix(&b, &BisimOptions::default()).unwrap();
    assert_eq!(e1.basis(), e2.basis());
}

// ---------------------------------------------------------------------------
// abstraction and tableau

#[test]
fn abstraction_conserves_probability_and_timing_mass() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..60 {
        let sa = random_det_sa(&mut rng);
        assert!(validate_deterministic(&sa).ok());
        for q in 0..sa.locations().len() {
            let s = initial_symstate(&sa, q).unwrap();
            let profile = timing_profile(&sa, &s).unwrap();
            let mut total = profile.halt.clone();
            for t in profile.per_action.values() {
                assert_eq!(&t.atom + t.density.integral(), t.mass);
                total += &t.mass;
            }
            assert!(total.is_one());
        }
    }
}

#[test]
fn tableau_retained_nodes_stay_within_dimension() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    for _ in 0..30 {
        let a = random_det_sa(&mut rng);
        let b = random_det_sa(&mut rng);
        let (union, _, mb) = distbisim::ct::sa_disjoint_union(&a, &b);
        let fpa = abstract_sa(&union, &[0, mb[0]]).unwrap();
        let n = fpa.len();
        let mut mu = vec![Rat::zero(); n];
        mu[fpa.initials()[0]] = Rat::one();
        let mut nu = vec![Rat::zero(); n];
        nu[fpa.initials()[1]] = Rat::one();
        let verdict = decide(&fpa, &mu, &nu).unwrap();
        let expanded = verdict
            .tableau()
            .nodes
            .iter()
            .filter(|x| x.rule == distbisim::tableau::RuleTag::Step)
            .count();
        assert!(expanded <= n);
    }
}

// ---------------------------------------------------------------------------
// beliefs

#[test]
fn belief_equivalence_is_an_equivalence_relation() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let m = Pomdp::from_json(&data("pomdp-grid.json")).unwrap();
    let pa = pomdp_to_pa(&m).unwrap();
    assert_eq!(pa.labels().len(), m.observations().len());
    let n = pa.states().len();
    let e = minimal_bisim_matrix(&pa, &BisimOptions::default()).unwrap();
    for _ in 0..30 {
        let b1 = random_dist(&mut rng, n, n);
        let b2 = random_equivalent(&mut rng, &e, &b1);
        let b3 = random_equivalent(&mut rng, &e, &b2);
        let (r12, _) = belief_equiv(&m, &b1, &b2).unwrap();
        let (r21, _) = belief_equiv(&m, &b2, &b1).unwrap();
        let (r23, _) = belief_equiv(&m, &b2, &b3).unwrap();
        let (r13, _) = belief_equiv(&m, &b1, &b3).unwrap();
        let (r11, _) = belief_equiv(&m, &b1, &b1).unwrap();
        assert!(r11);
        assert_eq!(r12, r21);
        if r12 && r23 {
            assert!(r13);
        }
    }
}

#[test]
fn pomdp_states_enable_exactly_their_observation() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for _ in 0..20 {
        // random partitions over a random automaton skeleton
        let n = rng.gen_range(2..=5);
        let states: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
        let blocks = rng.gen_range(1..=n);
        let mut observations: Vec<Vec<usize>> = vec![Vec::new(); blocks];
        for s in 0..n {
            observations[rng.gen_range(0..blocks)].push(s);
        }
        observations.retain(|b| !b.is_empty());
        let mut delta = Vec::new();
        for s in 0..n {
            if rng.gen_bool(0.8) {
                delta.push((s, 0, random_dist(&mut rng, n, 3)));
            }
        }
        let m = Pomdp::new(states, vec!["act".into()], observations.clone(), delta).unwrap();
        let pa = pomdp_to_pa(&m).unwrap();
        for (o, block) in observations.iter().enumerate() {
            for &s in block {
                let enabled = pa.enabled_labels(s);
                assert!(enabled.len() <= 1);
                if let Some(&l) = enabled.iter().next() {
                    assert_eq!(pa.labels()[l], format!("o{o}"));
                }
            }
        }
    }
}

#[test]
fn sink_and_self_loop_completions_are_input_enabled() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let pa = random_pa(&mut rng);
        for completed in [
            distbisim::bisim::sink_complete(&pa),
            distbisim::bisim::self_loop_complete(&pa),
        ] {
            let all: BTreeSet<usize> = (0..completed.labels().len()).collect();
            for s in 0..completed.states().len() {
                assert_eq!(completed.enabled_labels(s), all);
            }
        }
    }
}
