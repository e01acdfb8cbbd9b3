//! Exhaustive bit-packed truth tables and their algebraic normal form.
//!
//! Bit `k` of a table of arity `n` is the output on the assignment whose
//! `j`-th input (1-based) is bit `j - 1` of `k`, so `x1` is the least
//! significant index digit. The same coefficient layout is used for the ANF:
//! bit `m` of the coefficient vector is the coefficient of the monomial whose
//! variable set is the set bits of `m`.

use std::cmp::Ordering;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest arity stored as an exhaustive table (2^24 bits, 2 MiB of words).
pub const N_MAX: usize = 24;

const WORD_BITS: usize = 64;

/// `C[k]` has runs of `2^k` ones alternating with `2^k` zeros, starting at bit 0.
pub(crate) const LOW_HALF: [u64; 6] = [
    0x5555_5555_5555_5555,
    0x3333_3333_3333_3333,
    0x0F0F_0F0F_0F0F_0F0F,
    0x00FF_00FF_00FF_00FF,
    0x0000_FFFF_0000_FFFF,
    0x0000_0000_FFFF_FFFF,
];

fn word_count(arity: usize) -> usize {
    if arity <= 6 {
        1
    } else {
        1 << (arity - 6)
    }
}

fn tail_mask(arity: usize) -> u64 {
    if arity >= 6 {
        u64::MAX
    } else {
        (1u64 << (1 << arity)) - 1
    }
}

/// Exact fraction `ones / 2^arity` of inputs on which a table outputs one.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Density {
    pub ones: u64,
    pub arity: usize,
}

impl Density {
    pub fn new(ones: u64, arity: usize) -> Self {
        debug_assert!(arity < 64 && ones <= 1u64 << arity);
        Density { ones, arity }
    }

    pub fn numerator(&self) -> u64 {
        self.ones
    }

    pub fn denominator(&self) -> u64 {
        1u64 << self.arity
    }

    pub fn is_zero(&self) -> bool {
        self.ones == 0
    }

    pub fn to_f64(&self) -> f64 {
        self.ones as f64 / self.denominator() as f64
    }
}

impl PartialEq for Density {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Density {}

impl PartialOrd for Density {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Density {
    fn cmp(&self, other: &Self) -> Ordering {
        let lhs = (self.ones as u128) << other.arity;
        let rhs = (other.ones as u128) << self.arity;
        lhs.cmp(&rhs)
    }
}

impl fmt::Display for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.ones, self.denominator())
    }
}

/// A Boolean function of `arity` inputs stored as `2^arity` packed bits.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TruthTable {
    arity: usize,
    words: Vec<u64>,
}

impl TruthTable {
    pub fn zero(arity: usize) -> Result<Self> {
        if arity > N_MAX {
            return Err(Error::ArityTooLarge(arity));
        }
        Ok(TruthTable {
            arity,
            words: vec![0; word_count(arity)],
        })
    }

    pub fn constant(arity: usize, value: bool) -> Result<Self> {
        let mut t = Self::zero(arity)?;
        if value {
            t.words.iter_mut().for_each(|w| *w = u64::MAX);
            t.clear_padding();
        }
        Ok(t)
    }

    /// Builds a table by evaluating `f` on every input index.
    pub fn from_fn<F: Fn(usize) -> bool>(arity: usize, f: F) -> Result<Self> {
        let mut t = Self::zero(arity)?;
        for k in 0..t.len() {
            if f(k) {
                t.words[k / WORD_BITS] |= 1 << (k % WORD_BITS);
            }
        }
        Ok(t)
    }

    pub fn from_bits(arity: usize, bits: &[bool]) -> Result<Self> {
        if bits.len() != 1 << arity.min(63) || arity > N_MAX {
            return Err(Error::ArityMismatch {
                expected: 1usize.checked_shl(arity as u32).unwrap_or(0),
                got: bits.len(),
            });
        }
        Self::from_fn(arity, |k| bits[k])
    }

    /// Wraps raw words; storage beyond `2^arity` bits must be zero.
    pub fn from_words(arity: usize, words: Vec<u64>) -> Result<Self> {
        if arity > N_MAX {
            return Err(Error::ArityTooLarge(arity));
        }
        if words.len() != word_count(arity) {
            return Err(Error::ArityMismatch {
                expected: word_count(arity),
                got: words.len(),
            });
        }
        if words[0] & !tail_mask(arity) != 0 {
            return Err(Error::Format("nonzero bits beyond 2^arity".into()));
        }
        Ok(TruthTable { arity, words })
    }

    pub(crate) fn from_words_unchecked(arity: usize, mut words: Vec<u64>) -> Self {
        debug_assert_eq!(words.len(), word_count(arity));
        words[0] &= tail_mask(arity);
        TruthTable { arity, words }
    }

    fn clear_padding(&mut self) {
        self.words[0] &= tail_mask(self.arity);
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Number of rows, `2^arity`.
    pub fn len(&self) -> usize {
        1 << self.arity
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Output bit at a raw input index.
    pub fn get(&self, index: usize) -> bool {
        debug_assert!(index < self.len());
        (self.words[index / WORD_BITS] >> (index % WORD_BITS)) & 1 == 1
    }

    pub fn set(&mut self, index: usize, value: bool) {
        assert!(index < self.len(), "index {index} out of range");
        let bit = 1u64 << (index % WORD_BITS);
        if value {
            self.words[index / WORD_BITS] |= bit;
        } else {
            self.words[index / WORD_BITS] &= !bit;
        }
    }

    pub fn flip(&mut self, index: usize) {
        assert!(index < self.len(), "index {index} out of range");
        self.words[index / WORD_BITS] ^= 1u64 << (index % WORD_BITS);
    }

    /// Evaluates the function on an assignment `x[0] = x1, x[1] = x2, ...`.
    pub fn evaluate(&self, x: &[bool]) -> Result<bool> {
        if x.len() != self.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                got: x.len(),
            });
        }
        let index = x
            .iter()
            .enumerate()
            .fold(0usize, |acc, (j, &b)| acc | (usize::from(b) << j));
        Ok(self.get(index))
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    pub fn density(&self) -> Density {
        Density::new(self.count_ones(), self.arity)
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// `Some(value)` when the table is constant.
    pub fn as_constant(&self) -> Option<bool> {
        let ones = self.count_ones();
        if ones == 0 {
            Some(false)
        } else if ones == self.len() as u64 {
            Some(true)
        } else {
            None
        }
    }

    /// Indices of the rows that output one, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(wi * WORD_BITS + b)
            })
        })
    }

    fn check_same_arity(&self, other: &TruthTable) -> Result<()> {
        if self.arity != other.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                got: other.arity,
            });
        }
        Ok(())
    }

    pub fn xor(&self, other: &TruthTable) -> Result<TruthTable> {
        self.check_same_arity(other)?;
        Ok(self.zip_words(other, |a, b| a ^ b))
    }

    pub fn and(&self, other: &TruthTable) -> Result<TruthTable> {
        self.check_same_arity(other)?;
        Ok(self.zip_words(other, |a, b| a & b))
    }

    pub fn or(&self, other: &TruthTable) -> Result<TruthTable> {
        self.check_same_arity(other)?;
        Ok(self.zip_words(other, |a, b| a | b))
    }

    pub fn complement(&self) -> TruthTable {
        let mut t = TruthTable {
            arity: self.arity,
            words: self.words.iter().map(|w| !w).collect(),
        };
        t.clear_padding();
        t
    }

    /// Number of rows where the two tables differ.
    pub fn hamming_distance(&self, other: &TruthTable) -> Result<u64> {
        self.check_same_arity(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| u64::from((a ^ b).count_ones()))
            .sum())
    }

    fn zip_words(&self, other: &TruthTable, op: impl Fn(u64, u64) -> u64) -> TruthTable {
        TruthTable {
            arity: self.arity,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        }
    }

    pub fn to_anf(&self) -> Anf {
        table_to_anf(self)
    }

    /// Serializes in the BFRG v1 format.
    pub fn write_bfrg<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "BFRG 1 n={}", self.arity)?;
        w.write_all(&self.payload_bytes())?;
        Ok(())
    }

    pub fn read_bfrg<R: Read>(mut r: R) -> Result<TruthTable> {
        let mut data = Vec::new();
        r.read_to_end(&mut data)?;
        Self::from_bfrg_bytes(&data)
    }

    pub fn to_bfrg_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_bfrg(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn from_bfrg_bytes(data: &[u8]) -> Result<TruthTable> {
        let newline = data
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Format("missing header line".into()))?;
        let header = std::str::from_utf8(&data[..newline])
            .map_err(|_| Error::Format("header is not ASCII".into()))?;
        let mut fields = header.split(' ');
        if fields.next() != Some("BFRG") {
            return Err(Error::Format("bad magic, expected BFRG".into()));
        }
        match fields.next() {
            Some("1") => {}
            Some(v) => return Err(Error::Format(format!("unsupported version {v}"))),
            None => return Err(Error::Format("missing version".into())),
        }
        let arity: usize = fields
            .next()
            .and_then(|f| f.strip_prefix("n="))
            .ok_or_else(|| Error::Format("missing n=<arity> field".into()))?
            .parse()
            .map_err(|_| Error::Format("arity is not a number".into()))?;
        if fields.next().is_some() {
            return Err(Error::Format("unexpected trailing header fields".into()));
        }
        if arity > N_MAX {
            return Err(Error::ArityTooLarge(arity));
        }
        let payload = &data[newline + 1..];
        let expected = (1usize << arity).div_ceil(8);
        if payload.len() < expected {
            return Err(Error::Truncated {
                expected,
                found: payload.len(),
            });
        }
        if payload.len() > expected {
            return Err(Error::Format(format!(
                "{} trailing bytes after payload",
                payload.len() - expected
            )));
        }
        let mut words = vec![0u64; word_count(arity)];
        for (i, &byte) in payload.iter().enumerate() {
            words[i / 8] |= u64::from(byte) << (8 * (i % 8));
        }
        Self::from_words(arity, words)
    }

    fn payload_bytes(&self) -> Vec<u8> {
        let nbytes = self.len().div_ceil(8);
        (0..nbytes)
            .map(|i| (self.words[i / 8] >> (8 * (i % 8))) as u8)
            .collect()
    }
}

impl fmt::Debug for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TruthTable(n={}, ", self.arity)?;
        if self.arity <= 6 {
            for k in 0..self.len() {
                write!(f, "{}", u8::from(self.get(k)))?;
            }
        } else {
            write!(f, "density={}", self.density())?;
        }
        write!(f, ")")
    }
}

pub fn read_table<P: AsRef<Path>>(path: P) -> Result<TruthTable> {
    let data = std::fs::read(path)?;
    TruthTable::from_bfrg_bytes(&data)
}

pub fn write_table<P: AsRef<Path>>(t: &TruthTable, path: P) -> Result<()> {
    std::fs::write(path, t.to_bfrg_bytes())?;
    Ok(())
}

/// In-place mod-2 zeta/Möbius transform over the subset lattice; it is its
/// own inverse.
fn mobius_in_place(arity: usize, words: &mut [u64]) {
    for v in 0..arity.min(6) {
        let shift = 1 << v;
        for w in words.iter_mut() {
            *w ^= (*w & LOW_HALF[v]) << shift;
        }
    }
    for v in 6..arity {
        let stride = 1 << (v - 6);
        for block in words.chunks_mut(2 * stride) {
            let (lo, hi) = block.split_at_mut(stride);
            for (h, l) in hi.iter_mut().zip(lo.iter()) {
                *h ^= *l;
            }
        }
    }
}

pub fn table_to_anf(t: &TruthTable) -> Anf {
    let mut words = t.words.clone();
    mobius_in_place(t.arity, &mut words);
    Anf {
        coeffs: TruthTable::from_words_unchecked(t.arity, words),
    }
}

pub fn anf_to_table(a: &Anf) -> TruthTable {
    let mut words = a.coeffs.words.clone();
    mobius_in_place(a.coeffs.arity, &mut words);
    TruthTable::from_words_unchecked(a.coeffs.arity, words)
}

/// A product of distinct variables, stored as a bit mask (`x1` is bit 0).
/// The empty mask is the constant-one monomial.
///
/// Monomials order lexicographically on their ascending variable lists, with a
/// proper prefix sorting first: `1 < x1 < x1x2 < x1x2x3 < x1x3 < x2`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct Monomial(pub u32);

impl Monomial {
    pub const ONE: Monomial = Monomial(0);

    /// Builds a monomial from 1-based variable labels.
    pub fn from_vars(vars: &[usize]) -> Monomial {
        Monomial(vars.iter().fold(0u32, |m, &v| m | 1 << (v - 1)))
    }

    /// Ascending 1-based labels.
    pub fn vars(&self) -> Vec<usize> {
        (0..32)
            .filter(|b| self.0 >> b & 1 == 1)
            .map(|b| b + 1)
            .collect()
    }

    pub fn degree(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn mask(&self) -> u32 {
        self.0
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        let (mut a, mut b) = (self.0, other.0);
        loop {
            match (a, b) {
                (0, 0) => return Ordering::Equal,
                (0, _) => return Ordering::Less,
                (_, 0) => return Ordering::Greater,
                _ => {}
            }
            let (la, lb) = (a.trailing_zeros(), b.trailing_zeros());
            if la != lb {
                return la.cmp(&lb);
            }
            a &= a - 1;
            b &= b - 1;
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == 0 {
            return write!(f, "1");
        }
        for v in self.vars() {
            write!(f, "x{v}")?;
        }
        Ok(())
    }
}

/// Compares two monomial sets lexicographically over their sorted monomial
/// lists; a proper prefix sorts first.
pub fn cmp_monomial_sets(a: &[Monomial], b: &[Monomial]) -> Ordering {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort();
    b.sort();
    a.cmp(&b)
}

/// Algebraic normal form: a mod-2 sum of monomials over `arity` variables.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Anf {
    coeffs: TruthTable,
}

impl Anf {
    pub fn zero(arity: usize) -> Result<Anf> {
        Ok(Anf {
            coeffs: TruthTable::zero(arity)?,
        })
    }

    pub fn from_monomials<I: IntoIterator<Item = Monomial>>(arity: usize, terms: I) -> Result<Anf> {
        let mut coeffs = TruthTable::zero(arity)?;
        for m in terms {
            if (m.0 as usize) >= coeffs.len() {
                let label = 32 - m.0.leading_zeros() as usize;
                return Err(Error::LabelOutOfRange { label, arity });
            }
            coeffs.flip(m.0 as usize);
        }
        Ok(Anf { coeffs })
    }

    /// Wraps a coefficient vector (bit `m` = coefficient of monomial `m`).
    pub fn from_coefficients(coeffs: TruthTable) -> Anf {
        Anf { coeffs }
    }

    pub fn coefficients(&self) -> &TruthTable {
        &self.coeffs
    }

    pub fn arity(&self) -> usize {
        self.coeffs.arity
    }

    pub fn contains(&self, m: Monomial) -> bool {
        (m.0 as usize) < self.coeffs.len() && self.coeffs.get(m.0 as usize)
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.count_ones() as usize
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_zero()
    }

    /// Terms in monomial order.
    pub fn monomials(&self) -> Vec<Monomial> {
        let mut terms: Vec<Monomial> = self.coeffs.ones().map(|k| Monomial(k as u32)).collect();
        terms.sort();
        terms
    }

    /// Largest term cardinality; 0 for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.coeffs
            .ones()
            .map(|k| k.count_ones() as usize)
            .max()
            .unwrap_or(0)
    }

    /// Keeps the terms whose cardinality satisfies `keep`.
    pub fn filter_degree(&self, keep: impl Fn(usize) -> bool) -> Anf {
        let mut coeffs = self.coeffs.clone();
        for k in self.coeffs.ones() {
            if !keep(k.count_ones() as usize) {
                coeffs.flip(k);
            }
        }
        Anf { coeffs }
    }

    pub fn truncate(&self, xi: usize) -> Anf {
        self.filter_degree(|d| d <= xi)
    }

    pub fn homogeneous_part(&self, eta: usize) -> Anf {
        self.filter_degree(|d| d == eta)
    }

    pub fn xor(&self, other: &Anf) -> Result<Anf> {
        Ok(Anf {
            coeffs: self.coeffs.xor(&other.coeffs)?,
        })
    }

    pub fn to_table(&self) -> TruthTable {
        anf_to_table(self)
    }
}

impl fmt::Display for Anf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = self.monomials();
        if terms.is_empty() {
            return write!(f, "0");
        }
        for (i, m) in terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{m}")?;
        }
        Ok(())
    }
}
