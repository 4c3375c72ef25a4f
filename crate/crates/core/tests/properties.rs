use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::One;
use proptest::prelude::*;

use garrival::contraction::{
    default_eps, default_lambda, exact_fixed_point, fixed_point_iterate, h0, h1, one_step_update,
    projected_update, DiscountedUpdate, MassVector,
};
use garrival::generate::{generate, Family, GenSpec};
use garrival::solver::solve_recursive_with;
use garrival::{
    run_profile, solve_fvs, solve_recursive, solve_separator, verify_switching_flow, Instance, SolveOptions,
};

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn ratio() -> impl Strategy<Value = BigRational> {
    (0i64..60, 1i64..9).prop_map(|(p, q)| BigRational::new(p.into(), q.into()))
}

/// Small generated instances with at most four non-terminals.
fn instance() -> impl Strategy<Value = Instance> {
    (2usize..=7, 0usize..4, 1u64..=6, any::<u64>())
        .prop_flat_map(|(n, f, tokens, seed)| {
            let min_terminals = n.saturating_sub(4).max(1);
            (min_terminals..=n).prop_map(move |terminals| GenSpec {
                n,
                terminals,
                tokens,
                family: Family::ALL[f],
                seed,
            })
        })
        .prop_map(|spec| generate(&spec).expect("valid spec"))
}

fn masses(domain: Vec<usize>) -> impl Strategy<Value = MassVector> {
    let len = domain.len();
    proptest::collection::vec(ratio(), len).prop_map(move |values| MassVector::new(domain.clone(), values).unwrap())
}

fn with_pair(domain_of: fn(&Instance) -> Vec<usize>) -> impl Strategy<Value = (Instance, MassVector, MassVector)> {
    instance().prop_flat_map(move |inst| {
        let domain = domain_of(&inst);
        (Just(inst), masses(domain.clone()), masses(domain))
    })
}

fn all_vertices(inst: &Instance) -> Vec<usize> {
    (0..inst.n()).collect()
}

fn free_vertices(inst: &Instance) -> Vec<usize> {
    inst.non_terminals().collect()
}

/// Pointwise maximum, for building ordered pairs.
fn join(a: &MassVector, b: &MassVector) -> MassVector {
    let values = a.values().iter().zip(b.values()).map(|(x, y)| x.max(y).clone()).collect();
    MassVector::new(a.domain().to_vec(), values).unwrap()
}

/// Vertex `v` becomes `n-1-v`; names travel with their vertices.
fn reversed(inst: &Instance) -> Instance {
    let n = inst.n();
    let flip = |v: usize| n - 1 - v;
    let names = (0..n).rev().map(|v| inst.name(v).to_string()).collect();
    let s0 = (0..n).rev().map(|v| flip(inst.s0()[v])).collect();
    let s1 = (0..n).rev().map(|v| flip(inst.s1()[v])).collect();
    let terminals: Vec<usize> = inst.terminals().map(flip).collect();
    let tokens = (0..n).rev().map(|v| inst.tokens(v).clone()).collect();
    Instance::from_parts(names, s0, s1, &terminals, tokens).unwrap()
}

fn named_arrivals(inst: &Instance, arrivals: &garrival::ArrivalVector) -> Vec<(String, BigUint)> {
    let mut out: Vec<_> = arrivals.iter().map(|(v, c)| (inst.name(v).to_string(), c.clone())).collect();
    out.sort();
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn h_splits_mass(x in ratio()) {
        let (a, b) = (h0(&x).unwrap(), h1(&x).unwrap());
        prop_assert_eq!(&a + &b, x.clone());
        prop_assert!(b <= a && a <= &b + rat(1));
        let y = &x + BigRational::new(BigInt::one(), BigInt::from(3));
        prop_assert!(h0(&y).unwrap() >= a && h1(&y).unwrap() >= b);
    }

    #[test]
    fn solver_flows_certify_simulation(inst in instance()) {
        let expected = run_profile(&inst).unwrap().arrivals;
        for solution in [solve_recursive(&inst), solve_separator(&inst), solve_fvs(&inst)] {
            let solution = solution.unwrap();
            let report = verify_switching_flow(&inst, &solution.flow).unwrap();
            prop_assert!(report.valid && report.bound_ok, "{}", report);
            prop_assert_eq!(&solution.arrivals, &expected);
        }
    }

    #[test]
    fn intermediate_verification_changes_nothing(inst in instance()) {
        let plain = solve_recursive(&inst).unwrap();
        let checked = solve_recursive_with(&inst, &SolveOptions { verify_intermediate: true, ..SolveOptions::default() }).unwrap();
        prop_assert_eq!(plain.flow, checked.flow);
    }

    #[test]
    fn relabelling_keeps_arrivals(inst in instance()) {
        let flipped = reversed(&inst);
        let a = run_profile(&inst).unwrap().arrivals;
        let b = solve_separator(&flipped).unwrap().arrivals;
        prop_assert_eq!(named_arrivals(&inst, &a), named_arrivals(&flipped, &b));
    }

    #[test]
    fn more_tokens_never_lower_arrivals(inst in instance(), extra in 1u32..4, pick in any::<prop::sample::Index>()) {
        let terminals: Vec<usize> = inst.terminals().collect();
        let t = terminals[pick.index(terminals.len())];
        let mut tokens = inst.token_vector().to_vec();
        tokens[t] += extra;
        let bigger = inst.with_tokens(tokens).unwrap();
        let before = run_profile(&inst).unwrap().arrivals;
        let after = run_profile(&bigger).unwrap().arrivals;
        prop_assert!(before.le(&after));
    }

    #[test]
    fn f_is_monotone_and_non_expansive((inst, x, y) in with_pair(all_vertices)) {
        let (fx, fy) = (one_step_update(&inst, &x).unwrap(), one_step_update(&inst, &y).unwrap());
        prop_assert!(fx.l1_distance(&fy).unwrap() <= x.l1_distance(&y).unwrap());
        let top = join(&x, &y);
        prop_assert!(fx.le(&one_step_update(&inst, &top).unwrap()));
    }

    #[test]
    fn g_maps_are_monotone_and_non_expansive((inst, x, y) in with_pair(free_vertices)) {
        let (gx, gy) = (projected_update(&inst, &x).unwrap(), projected_update(&inst, &y).unwrap());
        let d = x.l1_distance(&y).unwrap();
        prop_assert!(gx.l1_distance(&gy).unwrap() <= d);
        let top = join(&x, &y);
        prop_assert!(gx.le(&projected_update(&inst, &top).unwrap()));

        let lambda = default_lambda(&inst, &BigRational::new(BigInt::one(), BigInt::from(4))).unwrap();
        let u = DiscountedUpdate::new(&inst, lambda.clone()).unwrap();
        let (ux, uy) = (u.apply(&x).unwrap(), u.apply(&y).unwrap());
        prop_assert!(ux.l1_distance(&uy).unwrap() <= &lambda * &d);
        prop_assert!(ux.le(&u.apply(&top).unwrap()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn discounted_fixed_point_sits_below_every_flow(inst in instance()) {
        let lambda = default_lambda(&inst, &BigRational::new(BigInt::one(), BigInt::from(4))).unwrap();
        let u = DiscountedUpdate::new(&inst, lambda).unwrap();
        let star = exact_fixed_point(&u).unwrap();
        let flow = solve_separator(&inst).unwrap().flow;
        for (v, xv) in star.iter() {
            let out = BigRational::from_integer(BigInt::from(flow.out_flow(v)));
            prop_assert!(xv <= &out, "vertex {}: {} > {}", v, xv, out);
        }
    }

    #[test]
    fn iterates_from_both_ends_meet(inst in instance()) {
        let lambda = default_lambda(&inst, &BigRational::new(BigInt::one(), BigInt::from(4))).unwrap();
        let u = DiscountedUpdate::new(&inst, lambda.clone()).unwrap();
        let eps = default_eps(&lambda);
        let m = BigRational::from_integer(BigInt::from(inst.total_tokens() << inst.n()));
        let lo = fixed_point_iterate(&u, &MassVector::zeros(u.domain()), &eps).unwrap();
        let hi = fixed_point_iterate(&u, &MassVector::constant(u.domain(), m).unwrap(), &eps).unwrap();
        let limit = rat(2) * &eps / (rat(1) - &lambda);
        prop_assert!(lo.x.l1_distance(&hi.x).unwrap() <= limit);
        prop_assert!(lo.residual <= eps && hi.residual <= eps);
    }
}
