//! Decomposing a table as a degree-`xi` polynomial XOR a sparse remainder.
//!
//! Searching every function within the remainder ball is superexponential,
//! so three explicitly labeled surrogates are provided: an exhaustive
//! nearest-polynomial search under a hard candidate cap, ANF truncation, and
//! a derivative sieve that only screens. Every report names its method.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::monomials_up_to;
use crate::rg::{decimate_seq, DecimationOrder, OrderSampling};
use crate::symmetric::SymmetricFunction;
use crate::truth_table::{table_to_anf, Anf, Density, Monomial, TruthTable};

/// Largest number of candidate monomials the exhaustive search accepts
/// (`2^24` candidate polynomials).
pub const EXHAUSTIVE_MAX_MONOMIALS: usize = 24;

/// Largest arity for [`degree_density_profile`].
pub const PROFILE_MAX_ARITY: usize = 16;

/// Largest arity for [`product_remainder_experiment`].
pub const PRODUCT_MAX_ARITY: usize = 14;

/// Constants of the remainder bound `C * 2^(-alpha * xi / log2(n))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    #[serde(rename = "C")]
    pub c: f64,
    pub alpha: f64,
}

impl Default for BoundParams {
    fn default() -> Self {
        BoundParams { c: 1.0, alpha: 1.0 }
    }
}

impl BoundParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.alpha > 0.0 && self.c.is_finite() && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "bound constants must be positive, got C={} alpha={}",
                self.c, self.alpha
            )));
        }
        Ok(())
    }

    /// Remainder-density bound for arity `n` and degree `xi`; `log2(n)` is
    /// floored at 1 so that arities 0 and 1 stay finite.
    pub fn bound(&self, n: usize, xi: usize) -> f64 {
        let log_n = (n.max(2) as f64).log2();
        self.c * 2f64.powf(-self.alpha * xi as f64 / log_n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    Exhaustive,
    AnfTruncation,
    DerivativeSieve,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SieveDetails {
    /// Largest density after `xi + 1` decimations over the sampled orders.
    pub max_density_num: u64,
    pub max_density_den: u64,
    pub orders_checked: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub xi: usize,
    pub method: Method,
    pub arity: usize,
    /// Witness polynomial as ascending variable lists (`[]` is the constant 1).
    pub witness_monomials: Option<Vec<Vec<usize>>>,
    pub remainder_num: u64,
    pub remainder_den: u64,
    #[serde(rename = "C")]
    pub c: f64,
    pub alpha: f64,
    pub meets_bound: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sieve: Option<SieveDetails>,
}

impl DecompositionReport {
    fn new(t: &TruthTable, xi: usize, method: Method, witness: Option<&Anf>, remainder: Density, params: BoundParams) -> Self {
        let meets_bound = remainder.to_f64() <= params.bound(t.arity(), xi);
        DecompositionReport {
            xi,
            method,
            arity: t.arity(),
            witness_monomials: witness.map(|a| a.monomials().iter().map(|m| m.vars()).collect()),
            remainder_num: remainder.numerator(),
            remainder_den: remainder.denominator(),
            c: params.c,
            alpha: params.alpha,
            meets_bound,
            sieve: None,
        }
    }

    pub fn remainder_density(&self) -> Density {
        Density::new(self.remainder_num, self.remainder_den.trailing_zeros() as usize)
    }

    pub fn bound(&self) -> f64 {
        BoundParams {
            c: self.c,
            alpha: self.alpha,
        }
        .bound(self.arity, self.xi)
    }

    pub fn witness_anf(&self) -> Option<Anf> {
        self.witness_monomials.as_ref().map(|ms| {
            Anf::from_monomials(self.arity, ms.iter().map(|v| Monomial::from_vars(v)))
                .expect("witness monomials fit the arity")
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Number of monomials of degree at most `xi` in `n` variables.
pub fn candidate_monomials(n: usize, xi: usize) -> usize {
    monomials_up_to(n, xi.min(n)).len()
}

/// Orders two candidate coefficient masks (bit `i` = `monomials[i]`, with the
/// monomials sorted) by the lexicographic order of their monomial lists.
fn cmp_candidates(a: u32, b: u32) -> Ordering {
    let d = a ^ b;
    if d == 0 {
        return Ordering::Equal;
    }
    let j = d.trailing_zeros();
    // the set lacking monomial j is larger unless it stops there (a prefix)
    let (without_j, a_has_j) = if a >> j & 1 == 1 { (b, true) } else { (a, false) };
    let has_j_first = if without_j >> (j + 1) != 0 {
        Ordering::Less
    } else {
        Ordering::Greater
    };
    if a_has_j {
        has_j_first
    } else {
        has_j_first.reverse()
    }
}

/// The degree-`<= xi` polynomial nearest to `t` in Hamming distance, found by
/// enumerating every candidate (ties go to the lexicographically smallest
/// monomial set).
pub fn exhaustive_nearest_polynomial(t: &TruthTable, xi: usize, params: BoundParams) -> Result<DecompositionReport> {
    params.validate()?;
    let n = t.arity();
    if xi > n {
        return Err(Error::InvalidParameter(format!("degree bound {xi} exceeds arity {n}")));
    }
    let monomials = monomials_up_to(n, xi);
    let k = monomials.len();
    if k > EXHAUSTIVE_MAX_MONOMIALS {
        return Err(Error::Capacity {
            monomials: k,
            cap: EXHAUSTIVE_MAX_MONOMIALS,
        });
    }
    let basis: Vec<TruthTable> = monomials
        .iter()
        .map(|&m| Anf::from_monomials(n, [m]).map(|a| a.to_table()))
        .collect::<Result<_>>()?;

    let total: u64 = 1 << k;
    let chunk: u64 = (total / 256).max(1 << 10).min(total);
    let chunks: Vec<(u64, u64)> = (0..total)
        .step_by(chunk as usize)
        .map(|lo| (lo, (lo + chunk).min(total)))
        .collect();

    let best = chunks
        .par_iter()
        .map(|&(lo, hi)| {
            let gray = |i: u64| (i ^ (i >> 1)) as u32;
            let mut code = gray(lo);
            let mut cur = TruthTable::zero(n).expect("arity already validated");
            for (i, b) in basis.iter().enumerate() {
                if code >> i & 1 == 1 {
                    cur = cur.xor(b).expect("same arity");
                }
            }
            let mut best = (u64::MAX, 0u32);
            for i in lo..hi {
                let dist = cur.hamming_distance(t).expect("same arity");
                if dist < best.0 || (dist == best.0 && cmp_candidates(code, best.1) == Ordering::Less) {
                    best = (dist, code);
                }
                if i + 1 < hi {
                    let bit = (i + 1).trailing_zeros() as usize;
                    code ^= 1 << bit;
                    cur = cur.xor(&basis[bit]).expect("same arity");
                }
            }
            best
        })
        .reduce(
            || (u64::MAX, 0u32),
            |a, b| match a.0.cmp(&b.0) {
                Ordering::Less => a,
                Ordering::Greater => b,
                Ordering::Equal => {
                    if cmp_candidates(a.1, b.1) == Ordering::Greater {
                        b
                    } else {
                        a
                    }
                }
            },
        );

    let witness = Anf::from_monomials(
        n,
        monomials
            .iter()
            .enumerate()
            .filter(|(i, _)| best.1 >> i & 1 == 1)
            .map(|(_, &m)| m),
    )?;
    let remainder = Density::new(best.0, n);
    Ok(DecompositionReport::new(t, xi, Method::Exhaustive, Some(&witness), remainder, params))
}

/// Keeps the ANF terms of degree at most `xi`. Cheap, but the remainder is
/// not the smallest possible.
pub fn anf_truncation(t: &TruthTable, xi: usize, params: BoundParams) -> Result<DecompositionReport> {
    params.validate()?;
    let anf = table_to_anf(t);
    let witness = anf.truncate(xi);
    let remainder = t.xor(&witness.to_table())?.density();
    Ok(DecompositionReport::new(t, xi, Method::AnfTruncation, Some(&witness), remainder, params))
}

/// Exhaustive search when the candidate count fits the cap, truncation
/// otherwise.
pub fn nearest_polynomial_auto(t: &TruthTable, xi: usize, params: BoundParams) -> Result<DecompositionReport> {
    if candidate_monomials(t.arity(), xi) <= EXHAUSTIVE_MAX_MONOMIALS {
        exhaustive_nearest_polynomial(t, xi, params)
    } else {
        anf_truncation(t, xi, params)
    }
}

/// Screens for a sparse remainder: after `xi + 1` decimations the polynomial
/// part is gone, and a remainder of density `rho` leaves at most
/// `2^(xi+1) rho`. Reports `max density / 2^(xi+1)` as the inferred
/// remainder; no witness.
pub fn derivative_sieve(
    t: &TruthTable,
    xi: usize,
    orders: &[DecimationOrder],
    params: BoundParams,
) -> Result<DecompositionReport> {
    params.validate()?;
    let n = t.arity();
    let depth = xi + 1;
    if depth > n {
        return Err(Error::InvalidParameter(format!("xi + 1 = {depth} exceeds arity {n}")));
    }
    if orders.is_empty() {
        return Err(Error::InvalidParameter("no decimation orders supplied".into()));
    }
    for o in orders {
        o.validate(n)?;
        if o.len() < depth {
            return Err(Error::InvalidParameter(format!(
                "order of length {} is shorter than xi + 1 = {depth}",
                o.len()
            )));
        }
    }
    let max_ones = orders
        .par_iter()
        .map(|o| decimate_seq(t, &o.prefix(depth)).map(|g| g.count_ones()))
        .try_reduce(|| 0, |a, b| Ok(a.max(b)))?;
    // (max_ones / 2^(n - depth)) / 2^depth
    let inferred = Density::new(max_ones, n);
    let mut report = DecompositionReport::new(t, xi, Method::DerivativeSieve, None, inferred, params);
    report.sieve = Some(SieveDetails {
        max_density_num: max_ones,
        max_density_den: 1 << (n - depth),
        orders_checked: orders.len(),
    });
    Ok(report)
}

pub fn derivative_sieve_sampled(
    t: &TruthTable,
    xi: usize,
    sampling: &OrderSampling,
    params: BoundParams,
) -> Result<DecompositionReport> {
    if xi + 1 > t.arity() {
        return Err(Error::InvalidParameter(format!(
            "xi + 1 = {} exceeds arity {}",
            xi + 1,
            t.arity()
        )));
    }
    let (orders, _) = sampling.orders(t.arity(), xi + 1);
    derivative_sieve(t, xi, &orders, params)
}

/// `rho[eta]` = density of the function formed by the degree-exactly-`eta`
/// ANF terms, for `eta = 0..=n`.
pub fn degree_density_profile(t: &TruthTable) -> Result<Vec<Density>> {
    if t.arity() > PROFILE_MAX_ARITY {
        return Err(Error::ArityTooLarge(t.arity()));
    }
    let anf = table_to_anf(t);
    Ok((0..=t.arity())
        .map(|eta| anf.homogeneous_part(eta).to_table().density())
        .collect())
}

/// Remainder densities for `a`, `b` and `a * b`, with the cross terms of
/// `(P_A + R_A)(P_B + R_B)` and the primitive-term count of `P_A P_B`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductRemainder {
    pub xi: usize,
    pub remainder_a: Density,
    pub remainder_b: Density,
    pub remainder_product: Density,
    /// `P_A * R_B`.
    pub cross_pa_rb: Density,
    /// `R_A * P_B`.
    pub cross_ra_pb: Density,
    /// `R_A * R_B`.
    pub cross_ra_rb: Density,
    pub cross_terms_bounded: bool,
    pub terms_a: usize,
    pub terms_b: usize,
    /// ANF terms of `P_A * P_B`; never more than `terms_a * terms_b`.
    pub terms_poly_product: usize,
    /// Density of the terms of `P_A * P_B` above degree `xi`.
    pub poly_product_high_density: Density,
    /// `T_A T_B 2^-xi`.
    pub primitive_term_bound: f64,
}

pub fn product_remainder_experiment(a: &TruthTable, b: &TruthTable, xi: usize) -> Result<ProductRemainder> {
    if a.arity() != b.arity() {
        return Err(Error::ArityMismatch {
            expected: a.arity(),
            got: b.arity(),
        });
    }
    if a.arity() > PRODUCT_MAX_ARITY {
        return Err(Error::ArityTooLarge(a.arity()));
    }
    let split = |t: &TruthTable| -> Result<(Anf, TruthTable, TruthTable)> {
        let p = table_to_anf(t).truncate(xi);
        let pt = p.to_table();
        let r = t.xor(&pt)?;
        Ok((p, pt, r))
    };
    let (pa, pa_t, ra) = split(a)?;
    let (pb, pb_t, rb) = split(b)?;
    let (_, _, rd) = split(&a.and(b)?)?;

    let cross_pa_rb = pa_t.and(&rb)?.density();
    let cross_ra_pb = ra.and(&pb_t)?.density();
    let cross_ra_rb = ra.and(&rb)?.density();
    let (remainder_a, remainder_b) = (ra.density(), rb.density());
    let cross_terms_bounded = cross_pa_rb <= remainder_b
        && cross_ra_pb <= remainder_a
        && cross_ra_rb <= remainder_a.min(remainder_b);

    let poly_product = table_to_anf(&pa_t.and(&pb_t)?);
    let high = poly_product.filter_degree(|d| d > xi);
    let (terms_a, terms_b) = (pa.num_terms(), pb.num_terms());
    Ok(ProductRemainder {
        xi,
        remainder_a,
        remainder_b,
        remainder_product: rd.density(),
        cross_pa_rb,
        cross_ra_pb,
        cross_ra_rb,
        cross_terms_bounded,
        terms_a,
        terms_b,
        terms_poly_product: poly_product.num_terms(),
        poly_product_high_density: high.to_table().density(),
        primitive_term_bound: (terms_a * terms_b) as f64 * 2f64.powi(-(xi as i32)),
    })
}

/// Nearest symmetric function by majority vote inside each input-sum class
/// (ties resolve to zero) and its distance. A heuristic for the composite
/// variable case, not a phase test.
pub fn symmetric_projection(t: &TruthTable) -> (SymmetricFunction, Density) {
    let n = t.arity();
    let mut ones = vec![0u64; n + 1];
    let mut sizes = vec![0u64; n + 1];
    for k in 0..t.len() {
        let s = k.count_ones() as usize;
        sizes[s] += 1;
        ones[s] += u64::from(t.get(k));
    }
    let f = SymmetricFunction::from_fn(n, |s| 2 * ones[s] > sizes[s]);
    let dist: u64 = (0..=n)
        .map(|s| if f.value(s) { sizes[s] - ones[s] } else { ones[s] })
        .sum();
    (f, Density::new(dist, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families;

    fn brute_nearest(t: &TruthTable, xi: usize) -> (u64, Vec<Monomial>) {
        let monos = monomials_up_to(t.arity(), xi);
        let mut best: Option<(u64, Vec<Monomial>)> = None;
        for c in 0u32..1 << monos.len() {
            let set: Vec<Monomial> = (0..monos.len()).filter(|i| c >> i & 1 == 1).map(|i| monos[i]).collect();
            let table = Anf::from_monomials(t.arity(), set.iter().copied()).unwrap().to_table();
            let d = table.hamming_distance(t).unwrap();
            let better = match &best {
                None => true,
                Some((bd, bs)) => d < *bd || (d == *bd && crate::truth_table::cmp_monomial_sets(&set, bs) == Ordering::Less),
            };
            if better {
                best = Some((d, set));
            }
        }
        best.unwrap()
    }

    #[test]
    fn exhaustive_matches_brute_force() {
        for seed in 0..20 {
            let t = families::random_table(4, 0.5, seed).unwrap();
            let r = exhaustive_nearest_polynomial(&t, 1, BoundParams::default()).unwrap();
            let (d, set) = brute_nearest(&t, 1);
            assert_eq!(r.remainder_num, d);
            assert_eq!(r.witness_anf().unwrap().monomials(), set, "seed {seed}");
        }
        let t = families::random_table(3, 0.5, 99).unwrap();
        let r = exhaustive_nearest_polynomial(&t, 2, BoundParams::default()).unwrap();
        let (d, set) = brute_nearest(&t, 2);
        assert_eq!((r.remainder_num, r.witness_anf().unwrap().monomials()), (d, set));
    }

    #[test]
    fn candidate_order_matches_set_order() {
        let monos = monomials_up_to(4, 2);
        let set = |c: u32| -> Vec<Monomial> { (0..monos.len()).filter(|i| c >> i & 1 == 1).map(|i| monos[i]).collect() };
        for a in 0u32..512 {
            for b in (0u32..512).step_by(7) {
                assert_eq!(
                    cmp_candidates(a, b),
                    crate::truth_table::cmp_monomial_sets(&set(a), &set(b)),
                    "{a} {b}"
                );
            }
        }
    }

    #[test]
    fn exhaustive_recovers_exact_member() {
        let p = families::random_polynomial(6, 2, 0.5, 8).unwrap();
        let r = exhaustive_nearest_polynomial(&p.to_table(), 2, BoundParams::default()).unwrap();
        assert_eq!(r.witness_anf().unwrap(), p);
        assert_eq!(r.remainder_num, 0);
        assert!(r.meets_bound);
    }

    #[test]
    fn exhaustive_single_flip() {
        let p = Anf::from_monomials(4, [Monomial::from_vars(&[1]), Monomial::from_vars(&[3])]).unwrap();
        let mut t = p.to_table();
        t.flip(6);
        let r = exhaustive_nearest_polynomial(&t, 1, BoundParams::default()).unwrap();
        assert_eq!(r.witness_anf().unwrap(), p);
        assert_eq!((r.remainder_num, r.remainder_den), (1, 16));
    }

    #[test]
    fn exhaustive_capacity_error() {
        let t = TruthTable::zero(20).unwrap();
        match exhaustive_nearest_polynomial(&t, 3, BoundParams::default()) {
            Err(Error::Capacity { monomials, .. }) => assert_eq!(monomials, 1 + 20 + 190 + 1140),
            other => panic!("expected capacity error, got {other:?}"),
        }
    }

    #[test]
    fn truncation_examples() {
        let p = families::random_polynomial(8, 3, 0.4, 1).unwrap();
        assert_eq!(anf_truncation(&p.to_table(), 3, BoundParams::default()).unwrap().remainder_num, 0);
        let par = families::parity(6).unwrap();
        let r = anf_truncation(&par, 5, BoundParams::default()).unwrap();
        assert_eq!(r.remainder_density(), Density::new(0, 0));
        // the only top monomial of parity_n is absent; check the stated
        // density instead on a function with a top monomial
        let top = TruthTable::from_fn(6, |k| k.count_ones() % 2 == 1 || k == 63).unwrap();
        let r = anf_truncation(&top, 5, BoundParams::default()).unwrap();
        assert_eq!(r.remainder_density(), Density::new(1, 6));
    }

    #[test]
    fn exhaustive_never_worse_than_truncation() {
        for seed in 0..30 {
            let t = families::random_table(5, 0.5, seed).unwrap();
            for xi in 0..=2 {
                let e = exhaustive_nearest_polynomial(&t, xi, BoundParams::default()).unwrap();
                let tr = anf_truncation(&t, xi, BoundParams::default()).unwrap();
                assert!(e.remainder_density() <= tr.remainder_density());
            }
        }
    }

    #[test]
    fn sieve_on_polynomial_is_zero() {
        let p = families::random_polynomial(10, 2, 0.5, 4).unwrap();
        let r = derivative_sieve_sampled(&p.to_table(), 2, &OrderSampling::default(), BoundParams::default()).unwrap();
        assert_eq!(r.remainder_num, 0);
        assert!(r.witness_monomials.is_none());
        assert!(derivative_sieve_sampled(&p.to_table(), 10, &OrderSampling::default(), BoundParams::default()).is_err());
    }

    #[test]
    fn profile_examples() {
        let m = Anf::from_monomials(8, [Monomial::from_vars(&[2, 4, 5])]).unwrap().to_table();
        let prof = degree_density_profile(&m).unwrap();
        for (eta, d) in prof.iter().enumerate() {
            let expected = if eta == 3 { Density::new(1, 3) } else { Density::new(0, 0) };
            assert_eq!(*d, expected, "eta {eta}");
        }
        let prof = degree_density_profile(&families::parity(7).unwrap()).unwrap();
        assert_eq!(prof[1], Density::new(1, 1));
        assert!(prof.iter().enumerate().all(|(e, d)| e == 1 || d.is_zero()));
        assert!(degree_density_profile(&TruthTable::zero(17).unwrap()).is_err());
    }

    #[test]
    fn product_experiment_identities() {
        let p = families::random_polynomial(8, 2, 0.5, 2).unwrap().to_table();
        let r = product_remainder_experiment(&p, &p, 4).unwrap();
        assert!(r.remainder_a.is_zero() && r.remainder_b.is_zero() && r.remainder_product.is_zero());
        assert!(r.cross_terms_bounded);

        let b = families::random_table(8, 0.5, 3).unwrap();
        let one = TruthTable::constant(8, true).unwrap();
        let r = product_remainder_experiment(&one, &b, 3).unwrap();
        assert_eq!(r.remainder_product, r.remainder_b);
        assert!(r.remainder_a.is_zero());
        assert!(r.terms_poly_product <= r.terms_a * r.terms_b);

        assert!(product_remainder_experiment(&one, &TruthTable::zero(7).unwrap(), 2).is_err());
        assert!(product_remainder_experiment(&TruthTable::zero(15).unwrap(), &TruthTable::zero(15).unwrap(), 2).is_err());
    }

    #[test]
    fn symmetric_projection_of_symmetric_is_exact() {
        let t = families::majority(9).unwrap();
        let (f, d) = symmetric_projection(&t);
        assert!(d.is_zero());
        assert_eq!(f.expand().unwrap(), t);
        let mut noisy = t.clone();
        noisy.flip(5);
        assert_eq!(symmetric_projection(&noisy).1, Density::new(1, 9));
    }

    #[test]
    fn report_json_fields() {
        let t = families::random_table(4, 0.5, 1).unwrap();
        let r = exhaustive_nearest_polynomial(&t, 1, BoundParams::default()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        for key in ["xi", "method", "witness_monomials", "remainder_num", "remainder_den", "C", "alpha", "meets_bound"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["method"], "EXHAUSTIVE");
        assert_eq!(DecompositionReport::from_json(&r.to_json().unwrap()).unwrap(), r);
    }

    #[test]
    fn bound_values() {
        let b = BoundParams::default();
        assert!((b.bound(16, 4) - 0.5).abs() < 1e-15);
        assert!((b.bound(12, 3) - 2f64.powf(-3.0 / 12f64.log2())).abs() < 1e-15);
        assert!(BoundParams { c: 0.0, alpha: 1.0 }.validate().is_err());
    }
}
