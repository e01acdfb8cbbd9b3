//! Generators for the function families used in the experiments.
//!
//! Every random generator draws from `ChaCha8Rng::seed_from_u64(seed)`, so a
//! given seed reproduces the same table on every platform.

use rand::distributions::{Bernoulli, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::truth_table::{Anf, Monomial, TruthTable};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    Ok(())
}

/// Each of the `2^n` outputs is independently one with probability `p0`.
pub fn random_table(n: usize, p0: f64, seed: u64) -> Result<TruthTable> {
    random_table_with(n, p0, &mut rng_from_seed(seed))
}

pub fn random_table_with<R: Rng>(n: usize, p0: f64, rng: &mut R) -> Result<TruthTable> {
    check_probability(p0)?;
    if p0 == 0.0 || p0 == 1.0 {
        return TruthTable::constant(n, p0 == 1.0);
    }
    let rows = 1usize << n;
    let nwords = rows.div_ceil(64);
    // Bernoulli words from the binary digits of p0 = 0.b1 b2 ... b64:
    // folding uniform words in with OR for a one digit and AND for a zero,
    // least significant digit first, sets each bit with probability p0
    // (quantised to 2^-64).
    let digits = (p0 * 2f64.powi(64)) as u64;
    let words: Vec<u64> = (0..nwords)
        .map(|_| {
            if digits == 0 {
                return 0;
            }
            (digits.trailing_zeros()..64).fold(0u64, |w, j| {
                let r = rng.gen::<u64>();
                if digits >> j & 1 == 1 {
                    r | w
                } else {
                    r & w
                }
            })
        })
        .collect();
    Ok(TruthTable::from_words_unchecked(n, words))
}

/// `x1 ^ x2 ^ ... ^ xn`.
pub fn parity(n: usize) -> Result<TruthTable> {
    TruthTable::from_fn(n, |k| k.count_ones() % 2 == 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MajorityRule {
    /// One when strictly more than half the inputs are one.
    Strict,
    /// One when at least half the inputs are one.
    AtLeastHalf,
}

impl MajorityRule {
    pub fn holds(self, ones: usize, n: usize) -> bool {
        match self {
            MajorityRule::Strict => 2 * ones > n,
            MajorityRule::AtLeastHalf => 2 * ones >= n,
        }
    }
}

/// Strict majority.
pub fn majority(n: usize) -> Result<TruthTable> {
    majority_with(n, MajorityRule::Strict)
}

pub fn majority_with(n: usize, rule: MajorityRule) -> Result<TruthTable> {
    TruthTable::from_fn(n, |k| rule.holds(k.count_ones() as usize, n))
}

pub fn is_odd_prime(p: u32) -> bool {
    p >= 3 && p % 2 == 1 && (3..).step_by(2).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

/// Running-remainder registers for divisibility of the input sum by `p`.
///
/// After `step`s over `x1..xi`, register `r` is a table of arity `i` that is
/// one exactly on the inputs whose sum is `r` mod `p`. Each step applies
/// `rem_r[i+1] = rem_r[i]*(1 - x_{i+1}) ^ rem_{r-1}[i]*x_{i+1}` to whole
/// tables: the half with `x_{i+1} = 0` copies `rem_r`, the other half copies
/// `rem_{r-1}`.
#[derive(Clone, Debug)]
pub struct RemainderMachine {
    p: u32,
    registers: Vec<TruthTable>,
}

impl RemainderMachine {
    pub fn new(p: u32) -> Result<Self> {
        if !is_odd_prime(p) {
            return Err(Error::NotOddPrime(p));
        }
        let mut registers = vec![TruthTable::zero(0)?; p as usize];
        registers[0] = TruthTable::constant(0, true)?;
        Ok(RemainderMachine { p, registers })
    }

    pub fn inputs_consumed(&self) -> usize {
        self.registers[0].arity()
    }

    pub fn registers(&self) -> &[TruthTable] {
        &self.registers
    }

    /// Feeds one more input variable.
    pub fn step(&mut self) -> Result<()> {
        let p = self.p as usize;
        let i = self.inputs_consumed();
        let next: Vec<TruthTable> = (0..p)
            .map(|r| {
                let stay = &self.registers[r];
                let carry = &self.registers[(r + p - 1) % p];
                append_variable(stay, carry, i)
            })
            .collect::<Result<_>>()?;
        self.registers = next;
        Ok(())
    }

    /// True when every input lies in exactly one register.
    pub fn is_one_hot(&self) -> bool {
        let rows = self.registers[0].len();
        (0..rows).all(|k| self.registers.iter().filter(|r| r.get(k)).count() == 1)
    }
}

/// Table of arity `i + 1` equal to `low` where `x_{i+1} = 0` and `high` where
/// `x_{i+1} = 1`.
fn append_variable(low: &TruthTable, high: &TruthTable, i: usize) -> Result<TruthTable> {
    let n = i + 1;
    if n <= 6 {
        let half = 1usize << i;
        let w = low.words()[0] | (high.words()[0] << half);
        TruthTable::from_words(n, vec![w])
    } else {
        let mut words = low.words().to_vec();
        words.extend_from_slice(high.words());
        TruthTable::from_words(n, words)
    }
}

/// One when the number of ones among the inputs is divisible by the odd prime `p`,
/// computed by running the remainder machine over all inputs.
pub fn mod_p(n: usize, p: u32) -> Result<TruthTable> {
    let mut machine = RemainderMachine::new(p)?;
    if n > crate::truth_table::N_MAX {
        return Err(Error::ArityTooLarge(n));
    }
    for _ in 0..n {
        machine.step()?;
    }
    Ok(machine.registers[0].clone())
}

/// Includes each monomial of degree at most `xi` independently with
/// probability `term_density`, visiting monomial masks in ascending order.
pub fn random_polynomial(n: usize, xi: usize, term_density: f64, seed: u64) -> Result<Anf> {
    random_polynomial_with(n, xi, term_density, &mut rng_from_seed(seed))
}

pub fn random_polynomial_with<R: Rng>(n: usize, xi: usize, term_density: f64, rng: &mut R) -> Result<Anf> {
    check_probability(term_density)?;
    if xi > n {
        return Err(Error::InvalidParameter(format!("degree bound {xi} exceeds arity {n}")));
    }
    let mut coeffs = TruthTable::zero(n)?;
    let coin = Bernoulli::new(term_density).map_err(|_| Error::InvalidProbability(term_density))?;
    for m in 0..coeffs.len() {
        if (m.count_ones() as usize) <= xi && coin.sample(rng) {
            coeffs.set(m, true);
        }
    }
    Ok(Anf::from_coefficients(coeffs))
}

/// Redraws until the polynomial has degree exactly `xi`, continuing the
/// same random stream.
pub fn random_polynomial_exact_degree(n: usize, xi: usize, term_density: f64, seed: u64) -> Result<Anf> {
    if term_density == 0.0 && xi > 0 {
        return Err(Error::InvalidParameter("zero term density cannot reach a positive degree".into()));
    }
    let mut rng = rng_from_seed(seed);
    loop {
        let a = random_polynomial_with(n, xi, term_density, &mut rng)?;
        if a.degree() == xi && (xi > 0 || !a.is_zero()) {
            return Ok(a);
        }
    }
}

/// A low-degree polynomial XOR a sparse noise table.
#[derive(Clone, Debug)]
pub struct Plant {
    pub table: TruthTable,
    pub polynomial: Anf,
    pub noise: TruthTable,
}

impl Plant {
    pub fn noise_density(&self) -> crate::truth_table::Density {
        self.noise.density()
    }
}

/// Draws `P = random_polynomial(n, xi, 1/2)` and then a Bernoulli mask with
/// rate `noise_fraction`, both from one seeded stream.
pub fn planted_near_polynomial(n: usize, xi: usize, noise_fraction: f64, seed: u64) -> Result<Plant> {
    check_probability(noise_fraction)?;
    let mut rng = rng_from_seed(seed);
    let polynomial = random_polynomial_with(n, xi, 0.5, &mut rng)?;
    let noise = random_table_with(n, noise_fraction, &mut rng)?;
    let table = polynomial.to_table().xor(&noise)?;
    Ok(Plant {
        table,
        polynomial,
        noise,
    })
}

/// Like [`planted_near_polynomial`] but flips exactly `flips` distinct outputs.
pub fn planted_with_flips(n: usize, xi: usize, flips: usize, seed: u64) -> Result<Plant> {
    let mut rng = rng_from_seed(seed);
    let polynomial = random_polynomial_with(n, xi, 0.5, &mut rng)?;
    let mut noise = TruthTable::zero(n)?;
    if flips > noise.len() {
        return Err(Error::InvalidParameter(format!("{flips} flips exceed {} outputs", noise.len())));
    }
    for k in rand::seq::index::sample(&mut rng, noise.len(), flips) {
        noise.set(k, true);
    }
    let table = polynomial.to_table().xor(&noise)?;
    Ok(Plant {
        table,
        polynomial,
        noise,
    })
}

/// Every monomial over `n` variables of degree at most `xi`, in monomial order.
pub fn monomials_up_to(n: usize, xi: usize) -> Vec<Monomial> {
    let mut out: Vec<Monomial> = (0u32..1 << n)
        .filter(|m| m.count_ones() as usize <= xi)
        .map(Monomial)
        .collect();
    out.sort();
    out
}
