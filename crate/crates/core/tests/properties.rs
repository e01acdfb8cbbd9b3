use proptest::prelude::*;

use boolrg::counting::{log2_num_polynomials, log2_subsets_up_to, ExtFloat};
use boolrg::detector::{anf_truncation, exhaustive_nearest_polynomial, BoundParams};
use boolrg::families::{self, RemainderMachine};
use boolrg::flow::{analytic_density, density_recursion_step, empirical_flow, FlowTrace};
use boolrg::rg::{decimate, decimate_seq, DecimationOrder};
use boolrg::truth_table::{anf_to_table, table_to_anf};
use boolrg::{Anf, Monomial, SymmetricFunction, TruthTable};

fn table(max_arity: usize) -> impl Strategy<Value = TruthTable> {
    (0..=max_arity).prop_flat_map(|n| {
        proptest::collection::vec(any::<bool>(), 1 << n).prop_map(move |bits| TruthTable::from_bits(n, &bits).unwrap())
    })
}

fn table_pair(max_arity: usize) -> impl Strategy<Value = (TruthTable, TruthTable)> {
    (1..=max_arity).prop_flat_map(|n| {
        let bits = proptest::collection::vec(any::<bool>(), 1 << n);
        (bits.clone(), bits).prop_map(move |(a, b)| {
            (TruthTable::from_bits(n, &a).unwrap(), TruthTable::from_bits(n, &b).unwrap())
        })
    })
}

/// Decimation straight from the definition, with the remaining inputs
/// renumbered in their original order.
fn decimate_oracle(t: &TruthTable, label: usize) -> TruthTable {
    let n = t.arity();
    let bit = label - 1;
    TruthTable::from_fn(n - 1, |k| {
        let low = k & ((1 << bit) - 1);
        let high = (k >> bit) << (bit + 1);
        t.get(high | low) ^ t.get(high | low | (1 << bit))
    })
    .unwrap()
}

/// Coefficient of every monomial by the subset-sum definition.
fn anf_oracle(t: &TruthTable) -> Vec<bool> {
    (0..t.len())
        .map(|m| (0..t.len()).filter(|&x| x & !m == 0).fold(false, |acc, x| acc ^ t.get(x)))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn mobius_is_an_involution(t in table(12)) {
        let anf = table_to_anf(&t);
        prop_assert_eq!(anf_to_table(&anf), t.clone());
        let back = table_to_anf(anf.coefficients());
        prop_assert_eq!(back.coefficients(), &t);
    }

    #[test]
    fn mobius_matches_subset_sums(t in table(7)) {
        let anf = table_to_anf(&t);
        let expected = anf_oracle(&t);
        for (m, &c) in expected.iter().enumerate() {
            prop_assert_eq!(anf.contains(Monomial(m as u32)), c);
        }
    }

    #[test]
    fn decimation_matches_definition(t in table(10), pick in any::<prop::sample::Index>()) {
        prop_assume!(t.arity() > 0);
        let label = pick.index(t.arity()) + 1;
        prop_assert_eq!(decimate(&t, label).unwrap(), decimate_oracle(&t, label));
    }

    #[test]
    fn decimation_is_linear((f, g) in table_pair(10), pick in any::<prop::sample::Index>()) {
        let label = pick.index(f.arity()) + 1;
        let lhs = decimate(&f.xor(&g).unwrap(), label).unwrap();
        let rhs = decimate(&f, label).unwrap().xor(&decimate(&g, label).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn expansion_around_one_input(t in table(9), pick in any::<prop::sample::Index>()) {
        // f(x) = f(x_i = 0) ^ x_i * D_i f
        prop_assume!(t.arity() > 0);
        let bit = pick.index(t.arity());
        let d = decimate(&t, bit + 1).unwrap();
        for k in 0..t.len() {
            let rest = (k & ((1 << bit) - 1)) | ((k >> (bit + 1)) << bit);
            let low = k & !(1 << bit);
            let xi = k >> bit & 1 == 1;
            prop_assert_eq!(t.get(k), t.get(low) ^ (xi && d.get(rest)));
        }
    }

    #[test]
    fn decimation_lowers_degree(t in table(10), pick in any::<prop::sample::Index>()) {
        prop_assume!(t.arity() > 0);
        let deg = table_to_anf(&t).degree();
        let d = decimate(&t, pick.index(t.arity()) + 1).unwrap();
        if deg == 0 {
            prop_assert!(d.is_zero());
        } else {
            prop_assert!(table_to_anf(&d).degree() < deg);
        }
    }

    #[test]
    fn decimation_order_is_irrelevant(t in table(9), seed in any::<u64>()) {
        prop_assume!(t.arity() >= 2);
        let mut rng = families::rng_from_seed(seed);
        let len = 2.min(t.arity()).max(t.arity() / 2);
        let a = DecimationOrder::random(t.arity(), len, &mut rng);
        let mut shuffled = a.vars().to_vec();
        shuffled.reverse();
        prop_assert_eq!(
            decimate_seq(&t, &a).unwrap(),
            decimate_seq(&t, &DecimationOrder::new(shuffled)).unwrap()
        );
    }

    #[test]
    fn degree_plus_one_decimations_annihilate(n in 1usize..=10, xi in 0usize..=4, seed in any::<u64>()) {
        let xi = xi.min(n);
        let p = families::random_polynomial(n, xi, 0.5, seed).unwrap();
        let deg = p.degree();
        let t = p.to_table();
        if deg < n {
            let mut rng = families::rng_from_seed(seed ^ 1);
            let order = DecimationOrder::random(n, deg + 1, &mut rng);
            prop_assert!(decimate_seq(&t, &order).unwrap().is_zero());
        }
    }

    #[test]
    fn symmetric_decimation_commutes_with_expansion(values in proptest::collection::vec(any::<bool>(), 2..=13), pick in any::<prop::sample::Index>()) {
        let f = SymmetricFunction::new(values).unwrap();
        let t = f.expand().unwrap();
        let label = pick.index(f.arity()) + 1;
        prop_assert_eq!(f.decimate().unwrap().expand().unwrap(), decimate(&t, label).unwrap());
        prop_assert_eq!(SymmetricFunction::project(&t), Some(f));
    }

    #[test]
    fn symmetric_density_is_exact_count(values in proptest::collection::vec(any::<bool>(), 1..=15)) {
        let f = SymmetricFunction::new(values).unwrap();
        prop_assert_eq!(f.density(), f.expand().unwrap().density().to_f64());
    }

    #[test]
    fn bfrg_round_trip(t in table(12)) {
        let bytes = t.to_bfrg_bytes();
        prop_assert_eq!(TruthTable::from_bfrg_bytes(&bytes).unwrap(), t);
    }

    #[test]
    fn flow_csv_round_trip(t in table(10), p0 in proptest::option::of(0.0f64..=1.0)) {
        let trace = empirical_flow(&t, &DecimationOrder::identity(t.arity())).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf, p0).unwrap();
        prop_assert_eq!(FlowTrace::read_csv(&buf[..]).unwrap(), trace);
    }

    #[test]
    fn closed_form_matches_recursion(p0 in 0.0f64..=1.0, ell in 0usize..=12) {
        let mut p = p0;
        for _ in 0..ell {
            p = density_recursion_step(p);
        }
        prop_assert!((analytic_density(p0, ell).unwrap() - p).abs() <= 1e-12);
    }

    #[test]
    fn remainder_machine_stays_one_hot(p in prop::sample::select(vec![3u32, 5, 7, 11]), steps in 0usize..=9) {
        let mut m = RemainderMachine::new(p).unwrap();
        for _ in 0..steps {
            m.step().unwrap();
        }
        prop_assert!(m.is_one_hot());
        let t = families::mod_p(steps, p).unwrap();
        prop_assert_eq!(&m.registers()[0], &t);
    }

    #[test]
    fn exhaustive_beats_truncation(t in table(5), xi in 0usize..=2) {
        prop_assume!(xi <= t.arity());
        let e = exhaustive_nearest_polynomial(&t, xi, BoundParams::default()).unwrap();
        let tr = anf_truncation(&t, xi, BoundParams::default()).unwrap();
        prop_assert!(e.remainder_density() <= tr.remainder_density());
        let w = e.witness_anf().unwrap();
        prop_assert!(w.degree() <= xi);
        prop_assert_eq!(w.to_table().hamming_distance(&t).unwrap(), e.remainder_num);
    }

    #[test]
    fn anf_xor_is_table_xor(
        (f, g) in table_pair(8),
    ) {
        let a: Anf = table_to_anf(&f).xor(&table_to_anf(&g)).unwrap();
        prop_assert_eq!(a.to_table(), f.xor(&g).unwrap());
    }

    #[test]
    fn polynomial_count_monotone(n in 0usize..=60) {
        let mut prev = None;
        for xi in 0..=n {
            let c = log2_num_polynomials(n, xi).unwrap().exact;
            if let Some(p) = prev {
                prop_assert!(c >= p);
            }
            prev = Some(c);
        }
    }

    #[test]
    fn perturbation_count_monotone(n in 2usize..=200, a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        // budgets 2^(n f), monotone in f
        let phi = |f: f64| {
            let e = n as f64 * f;
            ExtFloat::new(e.fract().exp2(), e.floor() as i64)
        };
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let x = log2_subsets_up_to(n, phi(lo)).unwrap().value();
        let y = log2_subsets_up_to(n, phi(hi)).unwrap().value();
        prop_assert!(x <= y);
    }
}
