//! Functions of the arithmetic input sum, stored as a value vector `v[0..=n]`.
//!
//! Decimating any input of such a function gives another symmetric function,
//! `v'[s] = v[s] ^ v[s + 1]`, so flows can be followed at arities far beyond
//! what an exhaustive table allows.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{is_odd_prime, MajorityRule};
use crate::flow::{Decimated, DensityValue, FlowStep, FlowTrace};
use crate::numeric::{binomial_row, half_binomial_pmf, ratio_pow2_to_f64, CompensatedSum};
use crate::truth_table::{TruthTable, N_MAX};

/// Arities up to this use exact big-integer densities.
pub const EXACT_DENSITY_MAX_ARITY: usize = 4096;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymmetricFunction {
    values: Vec<bool>,
}

impl SymmetricFunction {
    /// `values[s]` is the output when exactly `s` inputs are one; the arity is
    /// `values.len() - 1`.
    pub fn new(values: Vec<bool>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("value vector must have length n + 1".into()));
        }
        Ok(SymmetricFunction { values })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize) -> bool) -> Self {
        SymmetricFunction {
            values: (0..=n).map(f).collect(),
        }
    }

    pub fn constant(n: usize, value: bool) -> Self {
        Self::from_fn(n, |_| value)
    }

    pub fn parity(n: usize) -> Self {
        Self::from_fn(n, |s| s % 2 == 1)
    }

    pub fn majority(n: usize, rule: MajorityRule) -> Self {
        Self::from_fn(n, |s| rule.holds(s, n))
    }

    pub fn mod_p(n: usize, p: u32) -> Result<Self> {
        if !is_odd_prime(p) {
            return Err(Error::NotOddPrime(p));
        }
        Ok(Self::from_fn(n, |s| s % p as usize == 0))
    }

    pub fn arity(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn value(&self, s: usize) -> bool {
        self.values[s]
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&b| !b)
    }

    /// The full table; arity must be at most [`N_MAX`].
    pub fn expand(&self) -> Result<TruthTable> {
        if self.arity() > N_MAX {
            return Err(Error::ArityTooLarge(self.arity()));
        }
        TruthTable::from_fn(self.arity(), |k| self.values[k.count_ones() as usize])
    }

    /// The value vector of `t` if `t` depends only on the input sum.
    pub fn project(t: &TruthTable) -> Option<Self> {
        let mut values: Vec<Option<bool>> = vec![None; t.arity() + 1];
        for k in 0..t.len() {
            let slot = &mut values[k.count_ones() as usize];
            match slot {
                None => *slot = Some(t.get(k)),
                Some(b) if *b != t.get(k) => return None,
                _ => {}
            }
        }
        Some(SymmetricFunction {
            values: values.into_iter().map(|v| v.expect("every sum occurs")).collect(),
        })
    }

    /// Decimation of one input.
    pub fn decimate(&self) -> Result<Self> {
        if self.arity() == 0 {
            return Err(Error::NoVariables);
        }
        Ok(SymmetricFunction {
            values: self.values.windows(2).map(|w| w[0] ^ w[1]).collect(),
        })
    }

    /// `Σ_{s: v[s]=1} C(n, s)` exactly.
    pub fn count_ones_exact(&self) -> BigUint {
        let row = binomial_row(self.arity() as u64);
        row.into_iter()
            .zip(&self.values)
            .filter(|(_, &v)| v)
            .fold(BigUint::zero(), |acc, (c, _)| acc + c)
    }

    /// Fraction of the `2^n` inputs on which the function is one.
    ///
    /// Exact big-integer arithmetic up to [`EXACT_DENSITY_MAX_ARITY`],
    /// compensated floating-point sums of binomial probabilities above it.
    pub fn density(&self) -> f64 {
        if self.arity() <= EXACT_DENSITY_MAX_ARITY {
            self.density_exact()
        } else {
            self.density_approx()
        }
    }

    pub fn density_exact(&self) -> f64 {
        ratio_pow2_to_f64(&self.count_ones_exact(), self.arity() as u64)
    }

    pub fn density_approx(&self) -> f64 {
        let n = self.arity() as u64;
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v)
            .map(|(s, _)| half_binomial_pmf(n, s as u64))
            .collect::<CompensatedSum>()
            .value()
    }

    /// The values restricted to one period `p` when `v` is `p`-periodic in `s`.
    pub fn residue_pattern(&self, p: usize) -> Option<Vec<bool>> {
        if p == 0 {
            return None;
        }
        let periodic = self
            .values
            .iter()
            .zip(self.values.iter().skip(p))
            .all(|(a, b)| a == b);
        periodic.then(|| self.values.iter().take(p).copied().collect())
    }

    /// Densities after each of `steps` decimations, with residue-class
    /// patterns and cycle detection when `modulus` is given.
    pub fn flow(&self, steps: usize, modulus: Option<usize>) -> Result<SymmetricFlow> {
        if steps > self.arity() {
            return Err(Error::InvalidParameter(format!(
                "{steps} steps exceed arity {}",
                self.arity()
            )));
        }
        let n = self.arity();
        let mut cur = self.clone();
        let mut trace_steps = Vec::with_capacity(steps + 1);
        let mut patterns = Vec::new();
        let mut seen: HashMap<Vec<bool>, usize> = HashMap::new();
        let mut cycle = None;
        for step in 0..=steps {
            if step > 0 {
                cur = cur.decimate()?;
            }
            trace_steps.push(FlowStep {
                step,
                remaining_arity: n - step,
                decimated: if step == 0 {
                    Decimated::Start
                } else {
                    Decimated::Symmetric
                },
                density: DensityValue::Real(cur.density()),
            });
            if let Some(p) = modulus {
                let pattern = cur.residue_pattern(p);
                if let (Some(pat), None) = (&pattern, &cycle) {
                    if let Some(&first) = seen.get(pat) {
                        cycle = Some(Cycle {
                            start: first,
                            period: step - first,
                        });
                    } else {
                        seen.insert(pat.clone(), step);
                    }
                }
                patterns.push(pattern);
            }
        }
        Ok(SymmetricFlow {
            trace: FlowTrace {
                start_arity: n,
                steps: trace_steps,
            },
            patterns,
            cycle,
        })
    }
}

/// A repeating run of residue patterns: the pattern at `start` recurs at
/// `start + period`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cycle {
    pub start: usize,
    pub period: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetricFlow {
    pub trace: FlowTrace,
    /// Residue pattern per step, `None` where the values are not periodic.
    pub patterns: Vec<Option<Vec<bool>>>,
    pub cycle: Option<Cycle>,
}

impl SymmetricFlow {
    /// Densities at the steps of the first full cycle.
    pub fn cycle_densities(&self) -> Option<Vec<f64>> {
        self.cycle.map(|c| {
            self.trace.steps[c.start..c.start + c.period]
                .iter()
                .map(|s| s.density.to_f64())
                .collect()
        })
    }
}

/// Free-function forms of the symmetric engine.
pub fn sym_decimate(f: &SymmetricFunction) -> Result<SymmetricFunction> {
    f.decimate()
}

pub fn sym_density(f: &SymmetricFunction) -> f64 {
    f.density()
}

pub fn sym_flow(f: &SymmetricFunction, steps: usize, modulus: Option<usize>) -> Result<SymmetricFlow> {
    f.flow(steps, modulus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rg::{decimate, decimate_seq, DecimationOrder};

    #[test]
    fn mod3_first_derivative_pattern() {
        let f = SymmetricFunction::mod_p(30, 3).unwrap();
        let g = f.decimate().unwrap();
        for s in 0..=29 {
            assert_eq!(g.value(s), s % 3 == 0 || s % 3 == 2, "s={s}");
        }
    }

    #[test]
    fn constant_decimates_to_zero() {
        assert!(SymmetricFunction::constant(9, true).decimate().unwrap().is_zero());
        assert!(matches!(
            SymmetricFunction::constant(0, true).decimate(),
            Err(Error::NoVariables)
        ));
    }

    #[test]
    fn strict_majority_n8_first_step() {
        let f = SymmetricFunction::majority(8, MajorityRule::Strict);
        let g = f.decimate().unwrap();
        let expected: Vec<bool> = (0..=7).map(|s| s == 4).collect();
        assert_eq!(g.values(), &expected[..]);
        // cross-check against the full table
        let t = f.expand().unwrap();
        assert_eq!(decimate(&t, 3).unwrap(), g.expand().unwrap());
    }

    #[test]
    fn density_examples() {
        assert_eq!(SymmetricFunction::constant(50, true).density(), 1.0);
        let mid = SymmetricFunction::from_fn(100, |s| s == 50);
        assert!((mid.density() - 0.079_589_237_387_178_7).abs() < 1e-15);
        let d = SymmetricFunction::mod_p(999, 3).unwrap().decimate().unwrap().density();
        assert!((d - 2.0 / 3.0).abs() < 0.01);
    }

    #[test]
    fn exact_and_log_domain_agree_at_cutoff() {
        for f in [
            SymmetricFunction::mod_p(EXACT_DENSITY_MAX_ARITY, 3).unwrap(),
            SymmetricFunction::majority(EXACT_DENSITY_MAX_ARITY, MajorityRule::Strict),
            SymmetricFunction::from_fn(EXACT_DENSITY_MAX_ARITY, |s| s % 7 == 2 || s < 1990),
        ] {
            assert!((f.density_exact() - f.density_approx()).abs() < 1e-12);
        }
    }

    #[test]
    fn large_arity_density() {
        let f = SymmetricFunction::majority(20_000, MajorityRule::Strict);
        // P(sum > n/2) = (1 - C(n, n/2)/2^n) / 2
        let expected = 0.5 * (1.0 - half_binomial_pmf(20_000, 10_000));
        assert!((f.density() - expected).abs() < 1e-12);
    }

    #[test]
    fn flow_parity_and_errors() {
        let flow = SymmetricFunction::parity(40).flow(3, None).unwrap();
        assert_eq!(flow.trace.densities(), vec![0.5, 1.0, 0.0, 0.0]);
        assert!(SymmetricFunction::parity(4).flow(5, None).is_err());
    }

    #[test]
    fn mod3_cycle() {
        let flow = SymmetricFunction::mod_p(1000, 3).unwrap().flow(30, Some(3)).unwrap();
        let cycle = flow.cycle.unwrap();
        assert_eq!(cycle.period, 3);
        assert!(flow.cycle_densities().unwrap().iter().all(|d| (d - 0.5).abs() > 0.05));
    }

    #[test]
    fn project_and_full_decimation() {
        let f = SymmetricFunction::from_fn(7, |s| s == 2 || s == 5);
        let t = f.expand().unwrap();
        assert_eq!(SymmetricFunction::project(&t), Some(f.clone()));
        assert_eq!(SymmetricFunction::project(&TruthTable::from_fn(3, |k| k == 1).unwrap()), None);
        let mut g = f.clone();
        for _ in 0..7 {
            g = g.decimate().unwrap();
        }
        let full = decimate_seq(&t, &DecimationOrder::identity(7)).unwrap();
        assert_eq!(full.get(0), g.value(0));
    }
}
