use polylyap::gadget::{
    check_gadget_conditions, decode_assignment, encode_naesat3, explicit_candidate, Literal, Nae3Instance,
};
use polylyap::verifier::sampled_check;
use polylyap::Candidate;
use proptest::prelude::*;

fn lit(var: usize, negated: bool) -> Literal {
    if negated {
        Literal::neg(var)
    } else {
        Literal::pos(var)
    }
}

/// Instances with `n ≤ max_n` propositions and up to `max_l` clauses.
fn instance(max_n: usize, max_l: usize) -> impl Strategy<Value = Nae3Instance> {
    (1..=max_n).prop_flat_map(move |n| {
        let clause = (
            Just(n),
            prop::sample::subsequence((0..n).collect::<Vec<_>>(), 3.min(n)),
            any::<[bool; 3]>(),
        );
        let clauses = if n >= 3 {
            prop::collection::vec(clause, 0..=max_l).boxed()
        } else {
            Just(Vec::new()).boxed()
        };
        clauses.prop_map(move |cs| {
            let clauses = cs
                .into_iter()
                .map(|(_, vars, neg)| [lit(vars[0], neg[0]), lit(vars[1], neg[1]), lit(vars[2], neg[2])])
                .collect();
            Nae3Instance::new(n, clauses).unwrap()
        })
    })
}

fn assignments(n: usize) -> impl Iterator<Item = Vec<bool>> {
    (0..1u32 << n).map(move |bits| (0..n).map(|k| bits >> k & 1 == 1).collect())
}

/// Not-all-equal satisfaction, evaluated from the literals directly.
fn nae(inst: &Nae3Instance, a: &[bool]) -> bool {
    inst.clauses().iter().all(|c| {
        let vals: Vec<bool> = c.iter().map(|l| a[l.var] != l.negated).collect();
        vals.contains(&true) && vals.contains(&false)
    })
}

/// Unit states on every gadget line: `±x̄_k`, and `±x̂` when there are clauses.
fn gadget_states(inst: &Nae3Instance) -> Vec<Vec<f64>> {
    let n = inst.num_vars();
    let d = n + 2;
    let lines = if inst.clauses().is_empty() { n } else { n + 1 };
    (0..lines)
        .flat_map(|k| {
            [1.0, -1.0].map(|s| {
                let mut x = vec![0.0; d];
                x[k] = s;
                x
            })
        })
        .collect()
}

/// Dyadic coefficients keep every gadget sum exact.
fn dyadic() -> impl Strategy<Value = f64> {
    prop::sample::select(vec![-1.0, -0.75, -0.5, -0.25, 0.25, 0.5, 0.75, 1.0])
}

fn two_pieces(d: usize) -> impl Strategy<Value = Candidate> {
    (prop::collection::vec(dyadic(), d), prop::collection::vec(dyadic(), d))
        .prop_map(|(f, g)| Candidate::new(vec![f, g]).unwrap())
}

proptest! {
    #[test]
    fn decoding_inverts_the_witness(inst in instance(4, 4), bits in any::<u8>()) {
        let n = inst.num_vars();
        let a: Vec<bool> = (0..n).map(|k| bits >> k & 1 == 1).collect();
        let c = explicit_candidate(&inst, &a).unwrap();
        prop_assert_eq!(decode_assignment(&c, n).unwrap(), a);
    }

    #[test]
    fn closed_form_matches_pointwise_check(
        (inst, c) in instance(3, 3).prop_flat_map(|inst| {
            let d = inst.num_vars() + 2;
            (Just(inst), two_pieces(d))
        })
    ) {
        let gs = encode_naesat3(&inst).unwrap();
        let closed = check_gadget_conditions(&c, &gs).unwrap().is_valid();
        let sampled = sampled_check(&c, &gs.system, gadget_states(&inst), 0.0, 0.0).unwrap();
        prop_assert_eq!(closed, sampled.is_none(), "{:?}", sampled);
    }

    #[test]
    fn witness_is_valid_exactly_on_nae_assignments(inst in instance(3, 3)) {
        let gs = encode_naesat3(&inst).unwrap();
        let n = inst.num_vars();
        for a in assignments(n) {
            let c = explicit_candidate(&inst, &a).unwrap();
            prop_assert_eq!(check_gadget_conditions(&c, &gs).unwrap().is_valid(), nae(&inst, &a), "{:?}", a);
        }
        let satisfiable = assignments(n).any(|a| nae(&inst, &a));
        let witnessed = assignments(n)
            .any(|a| check_gadget_conditions(&explicit_candidate(&inst, &a).unwrap(), &gs).unwrap().is_valid());
        prop_assert_eq!(satisfiable, witnessed);
    }
}

#[test]
fn single_clause_has_six_witnesses() {
    let inst = Nae3Instance::new(3, vec![[Literal::pos(0), Literal::pos(1), Literal::pos(2)]]).unwrap();
    let gs = encode_naesat3(&inst).unwrap();
    let valid: Vec<Vec<bool>> = assignments(3)
        .filter(|a| {
            check_gadget_conditions(&explicit_candidate(&inst, a).unwrap(), &gs)
                .unwrap()
                .is_valid()
        })
        .collect();
    assert_eq!(valid.len(), 6);
    assert!(!valid.contains(&vec![true; 3]) && !valid.contains(&vec![false; 3]));
}

#[test]
fn domains_pin_the_inactive_coordinates() {
    let inst = Nae3Instance::new(4, vec![[Literal::pos(0), Literal::neg(2), Literal::pos(3)]]).unwrap();
    let gs = encode_naesat3(&inst).unwrap();
    let d = gs.index.dim;
    let pinned = |q: usize| -> Vec<usize> {
        let rows = gs.system.mode(q).domain();
        (0..d)
            .filter(|&k| {
                let has = |s: f64| {
                    rows.iter()
                        .any(|g| (0..d).all(|c| g[c] == if c == k { s } else { 0.0 }))
                };
                has(1.0) && has(-1.0)
            })
            .collect()
    };
    for (k, halves) in gs.index.variable_modes.iter().enumerate() {
        for &q in halves {
            let want: Vec<usize> = (0..d).filter(|&c| c != k).collect();
            assert_eq!(pinned(q), want);
        }
    }
    for halves in &gs.index.clause_modes {
        for &q in halves {
            let mut want: Vec<usize> = gs.index.bar.clone();
            want.push(gs.index.tilde);
            assert_eq!(pinned(q), want);
        }
    }
}
