use std::collections::{BTreeSet, HashMap};

use proptest::prelude::*;
use qubo_forge::encoding::{encode, encode_continuous, EncodingPlan};
use qubo_forge::expression::{parse_expression, AnyVar, Monomial, Polynomial};
use qubo_forge::problem::{ContinuousEncoding, Direction, Problem, VariableDecl, VariableKind};

const VARS: [&str; 6] = ["x", "y", "z", "w1", "w2", "q_0"];

/// Polynomials with quarter-integer coefficients and powers up to 3, so
/// every coefficient prints exactly with 12 significant digits.
fn poly() -> impl Strategy<Value = Polynomial> {
    let monomial = prop::collection::vec(0..VARS.len(), 0..4);
    prop::collection::vec((monomial, -40i32..40), 0..8).prop_map(|terms| {
        Polynomial::from_terms(
            terms.into_iter().map(|(vars, c)| (Monomial::from_vars(vars.into_iter().map(|k| VARS[k])), f64::from(c) / 4.0)),
        )
    })
}

fn assignment() -> impl Strategy<Value = HashMap<String, f64>> {
    prop::collection::vec(-3.0f64..3.0, VARS.len())
        .prop_map(|vals| VARS.iter().map(|v| v.to_string()).zip(vals).collect())
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #[test]
    fn canonical_print_parses_back(p in poly()) {
        prop_assert_eq!(parse_expression(&p.to_string(), &AnyVar).unwrap(), p.clone());
        prop_assert_eq!(parse_expression(&p.to_exact_string(), &AnyVar).unwrap(), p);
    }

    #[test]
    fn multiplication_is_a_homomorphism(p in poly(), q in poly(), a in assignment()) {
        let lhs = (&p * &q).evaluate(&a).unwrap();
        let rhs = p.evaluate(&a).unwrap() * q.evaluate(&a).unwrap();
        prop_assert!(close(lhs, rhs), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn substitution_matches_binding(p in poly(), a in assignment(), k in 0..VARS.len()) {
        let var = VARS[k];
        let bound = p.substitute(var, &Polynomial::constant(a[var]));
        prop_assert!(bound.variables().iter().all(|v| *v != var));
        prop_assert!(close(bound.evaluate(&a).unwrap(), p.evaluate(&a).unwrap()));
    }

    #[test]
    fn idempotence_keeps_binary_values(p in poly()) {
        let binaries: BTreeSet<String> = VARS.iter().map(|v| v.to_string()).collect();
        let reduced = p.reduce_binary_idempotence(&binaries);
        prop_assert!(reduced.terms().all(|(m, _)| m.vars().windows(2).all(|w| w[0] != w[1])));
        for mask in 0u32..(1 << VARS.len()) {
            let a: HashMap<String, f64> =
                VARS.iter().enumerate().map(|(k, v)| (v.to_string(), f64::from((mask >> k) & 1))).collect();
            prop_assert!(close(reduced.evaluate(&a).unwrap(), p.evaluate(&a).unwrap()));
        }
    }

    #[test]
    fn declared_set_decides_validity(declared in prop::collection::btree_set(0..VARS.len(), 0..=VARS.len()), p in poly()) {
        let mut problem = Problem::new();
        for &k in &declared {
            problem.add_binary(VARS[k]).unwrap();
        }
        let used: BTreeSet<usize> =
            p.variables().iter().map(|v| VARS.iter().position(|w| w == v).unwrap()).collect();
        let ok = problem.add_objective(&p.to_exact_string(), Direction::Minimize, 1.0).is_ok();
        prop_assert_eq!(ok, used.is_subset(&declared));
        prop_assert_eq!(problem.validate().is_ok(), ok);
    }

    #[test]
    fn arrays_flatten_to_scalars(m in 1usize..12) {
        let mut arrays = Problem::new();
        let names = arrays.add_binary_array("v", &[m]).unwrap();
        let mut scalars = Problem::new();
        for k in 0..m {
            scalars.add_binary(&format!("v_{k}")).unwrap();
        }
        let flat: Vec<String> = scalars.variables().iter().map(|v| v.name.clone()).collect();
        prop_assert_eq!(names, flat);
        prop_assert_eq!(arrays, scalars);
    }
}

fn grid_methods() -> impl Strategy<Value = ContinuousEncoding> {
    prop_oneof![
        Just(ContinuousEncoding::Dictionary),
        Just(ContinuousEncoding::Logarithmic { base: 2.0 }),
        Just(ContinuousEncoding::Unitary),
        Just(ContinuousEncoding::ArithmeticProgression),
        Just(ContinuousEncoding::DomainWall),
        (1u32..4).prop_map(|k| ContinuousEncoding::BoundedCoefficient { bound: f64::from(k) }),
    ]
}

/// Every decoded value reachable by some bit pattern, with its validity.
fn reachable(plan: &EncodingPlan) -> Vec<(f64, bool)> {
    let n = plan.binaries.len();
    (0u32..(1 << n))
        .map(|mask| {
            let d = plan
                .decode(|name| plan.binaries.iter().position(|(b, _)| b == name).map(|k| ((mask >> k) & 1) as u8))
                .unwrap();
            (d.value, d.valid)
        })
        .collect()
}

proptest! {
    #[test]
    fn continuous_encodings_cover_the_grid(
        lo_quarters in -12i32..12,
        steps in 1u32..9,
        precision in prop_oneof![Just(0.25), Just(0.5), Just(1.0)],
        method in grid_methods(),
    ) {
        let lo = f64::from(lo_quarters) / 4.0;
        let hi = lo + f64::from(steps) * precision;
        let plan = encode_continuous("c", lo, hi, precision, &method).unwrap();
        prop_assume!(plan.binaries.len() <= 12);
        let values = reachable(&plan);
        for k in 0..=steps {
            let target = lo + f64::from(k) * precision;
            prop_assert!(values.iter().any(|(v, ok)| *ok && (v - target).abs() < 1e-9), "{target} unreachable");
        }
        prop_assert!(values.iter().filter(|(_, ok)| *ok).all(|(v, _)| *v >= lo - 1e-9 && *v <= hi + 1e-9));
        if matches!(method, ContinuousEncoding::Logarithmic { .. } | ContinuousEncoding::Unitary | ContinuousEncoding::ArithmeticProgression) {
            prop_assert!((plan.weights().iter().sum::<f64>() - (hi - lo)).abs() < 1e-9);
        }
    }

    #[test]
    fn one_hot_has_one_pattern_per_level(levels in prop::collection::btree_set(-20i32..20, 1..7)) {
        let levels: Vec<f64> = levels.into_iter().map(f64::from).collect();
        let plan = encode(&VariableDecl { name: "d".into(), kind: VariableKind::Discrete { levels: levels.clone() } }).unwrap();
        let valid: Vec<f64> = reachable(&plan).into_iter().filter(|(_, ok)| *ok).map(|(v, _)| v).collect();
        prop_assert_eq!(valid.len(), levels.len());
        for l in &levels {
            prop_assert_eq!(valid.iter().filter(|v| *v == l).count(), 1);
        }
    }

    #[test]
    fn substituted_encoding_matches_decoded_value(
        steps in 1u32..9,
        method in grid_methods(),
        coeffs in prop::collection::vec(-4i32..5, 3),
        mask in any::<u32>(),
    ) {
        let plan = encode_continuous("c", -1.0, -1.0 + f64::from(steps) * 0.5, 0.5, &method).unwrap();
        let c = Polynomial::var("c");
        let p = &(&c.pow(2).scale(f64::from(coeffs[0])) + &c.scale(f64::from(coeffs[1]))) + &Polynomial::constant(f64::from(coeffs[2]));
        let substituted = p.substitute("c", &plan.affine());
        let bits: HashMap<String, f64> =
            plan.binaries.iter().enumerate().map(|(k, (b, _))| (b.clone(), f64::from((mask >> (k % 32)) & 1))).collect();
        let decoded = plan.decode(|name| bits.get(name).map(|&b| b as u8)).unwrap().value;
        let direct = p.evaluate(&HashMap::from([("c".to_string(), decoded)])).unwrap();
        prop_assert!(close(substituted.evaluate(&bits).unwrap(), direct));
    }
}
