//! The decimation step: replace `f` by its XOR-derivative with respect to one
//! input, `g(x') = f(x', x_i = 0) ^ f(x', x_i = 1)`.
//!
//! Labels are 1-based. [`decimate`] takes a label of the table it is given and
//! compacts the remaining variables (label `j > i` becomes `j - 1`).
//! [`DecimationOrder`] always holds labels of the *original* table and
//! [`decimate_seq`] translates them as it folds.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::truth_table::{TruthTable, LOW_HALF};

/// Drops index bit `v` from every kept position of a word, packing the
/// `32` positions with bit `v` clear into the low half.
fn compress_word(mut x: u64, v: usize) -> u64 {
    x &= LOW_HALF[v];
    for k in v + 1..6 {
        x = (x | (x >> (1 << (k - 1)))) & LOW_HALF[k];
    }
    x
}

/// XOR-derivative with respect to the variable at `label` (1-based) of `t`.
pub fn decimate(t: &TruthTable, label: usize) -> Result<TruthTable> {
    let n = t.arity();
    if n == 0 {
        return Err(Error::NoVariables);
    }
    if label == 0 || label > n {
        return Err(Error::LabelOutOfRange { label, arity: n });
    }
    let v = label - 1;
    let words = t.words();
    let out = if v >= 6 {
        let stride = 1 << (v - 6);
        let mut out = Vec::with_capacity(words.len() / 2);
        for block in words.chunks(2 * stride) {
            let (lo, hi) = block.split_at(stride);
            out.extend(lo.iter().zip(hi).map(|(a, b)| a ^ b));
        }
        out
    } else {
        let diffs = words
            .iter()
            .map(|&w| compress_word(w ^ (w >> (1 << v)), v));
        if n <= 6 {
            diffs.collect()
        } else {
            let halves: Vec<u64> = diffs.collect();
            halves
                .chunks(2)
                .map(|pair| pair[0] | (pair[1] << 32))
                .collect()
        }
    };
    Ok(TruthTable::from_words_unchecked(n - 1, out))
}

/// A sequence of distinct original-variable labels.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DecimationOrder {
    vars: Vec<usize>,
}

impl DecimationOrder {
    pub fn new(vars: Vec<usize>) -> Self {
        DecimationOrder { vars }
    }

    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn prefix(&self, len: usize) -> DecimationOrder {
        DecimationOrder::new(self.vars[..len.min(self.vars.len())].to_vec())
    }

    /// `1, 2, ..., len`.
    pub fn identity(len: usize) -> Self {
        DecimationOrder::new((1..=len).collect())
    }

    pub fn validate(&self, arity: usize) -> Result<()> {
        if self.vars.len() > arity {
            return Err(Error::InvalidParameter(format!(
                "order of length {} exceeds arity {arity}",
                self.vars.len()
            )));
        }
        let mut seen = vec![false; arity + 1];
        for &v in &self.vars {
            if v == 0 || v > arity {
                return Err(Error::LabelOutOfRange { label: v, arity });
            }
            if seen[v] {
                return Err(Error::DuplicateLabel(v));
            }
            seen[v] = true;
        }
        Ok(())
    }

    /// Labels relative to the table each step is applied to.
    pub fn compacted_labels(&self) -> Vec<usize> {
        self.vars
            .iter()
            .enumerate()
            .map(|(i, &v)| v - self.vars[..i].iter().filter(|&&u| u < v).count())
            .collect()
    }

    /// A uniformly random arrangement of `len` distinct labels out of `1..=arity`.
    pub fn random(arity: usize, len: usize, rng: &mut impl rand::Rng) -> Self {
        let mut all: Vec<usize> = (1..=arity).collect();
        all.shuffle(rng);
        all.truncate(len);
        DecimationOrder::new(all)
    }

    /// Every arrangement of `len` distinct labels from `1..=arity`, in
    /// lexicographic order.
    pub fn all(arity: usize, len: usize) -> Vec<DecimationOrder> {
        fn rec(arity: usize, len: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<DecimationOrder>) {
            if cur.len() == len {
                out.push(DecimationOrder::new(cur.clone()));
                return;
            }
            for v in 1..=arity {
                if !used[v] {
                    used[v] = true;
                    cur.push(v);
                    rec(arity, len, cur, used, out);
                    cur.pop();
                    used[v] = false;
                }
            }
        }
        let mut out = Vec::new();
        rec(arity, len.min(arity), &mut Vec::new(), &mut vec![false; arity + 1], &mut out);
        out
    }
}

/// Decimates the variables of `order` in turn; the result is the mod-2 sum
/// of `t` over all settings of those variables.
pub fn decimate_seq(t: &TruthTable, order: &DecimationOrder) -> Result<TruthTable> {
    order.validate(t.arity())?;
    let mut cur = t.clone();
    for label in order.compacted_labels() {
        cur = decimate(&cur, label)?;
    }
    Ok(cur)
}

/// The tables after 0, 1, ..., `order.len()` decimations.
pub fn decimation_path(t: &TruthTable, order: &DecimationOrder) -> Result<Vec<TruthTable>> {
    order.validate(t.arity())?;
    let mut path = Vec::with_capacity(order.len() + 1);
    path.push(t.clone());
    for label in order.compacted_labels() {
        let next = decimate(path.last().expect("path is nonempty"), label)?;
        path.push(next);
    }
    Ok(path)
}

/// How decimation orders are chosen when every order is too many.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderSampling {
    /// Enumerate every order when the arity is at most this.
    pub exhaustive_max_arity: usize,
    /// Number of random orders otherwise.
    pub samples: usize,
    pub seed: u64,
}

impl Default for OrderSampling {
    fn default() -> Self {
        OrderSampling {
            exhaustive_max_arity: 8,
            samples: 64,
            seed: 0x5eed,
        }
    }
}

impl OrderSampling {
    /// Orders of length `len` over `arity` variables, plus whether they are
    /// every possible order.
    pub fn orders(&self, arity: usize, len: usize) -> (Vec<DecimationOrder>, bool) {
        if arity <= self.exhaustive_max_arity {
            (DecimationOrder::all(arity, len), true)
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            let orders = (0..self.samples)
                .map(|_| DecimationOrder::random(arity, len, &mut rng))
                .collect();
            (orders, false)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annihilation {
    /// Smallest `m` whose every sampled length-`m` prefix is all-zero.
    pub depth: Option<usize>,
    pub cap: usize,
    pub orders_checked: usize,
    pub exhaustive: bool,
}

/// Smallest `m <= cap` such that decimating every sampled order's first `m`
/// variables gives the zero function, or `None`.
pub fn annihilation_depth(t: &TruthTable, orders: &[DecimationOrder], cap: usize) -> Result<Option<usize>> {
    if orders.is_empty() {
        return Err(Error::InvalidParameter("no decimation orders supplied".into()));
    }
    if cap > t.arity() {
        return Err(Error::InvalidParameter(format!(
            "cap {cap} exceeds arity {}",
            t.arity()
        )));
    }
    for o in orders {
        o.validate(t.arity())?;
        if o.len() < cap {
            return Err(Error::InvalidParameter(format!(
                "order of length {} is shorter than the cap {cap}",
                o.len()
            )));
        }
    }
    let first_zero: Vec<Option<usize>> = orders
        .par_iter()
        .map(|o| first_zero_step(t, o, cap))
        .collect::<Result<_>>()?;
    Ok(first_zero
        .into_iter()
        .try_fold(0usize, |acc, z| z.map(|z| acc.max(z))))
}

/// Annihilation depth with orders drawn by `sampling`.
pub fn annihilation_depth_sampled(t: &TruthTable, cap: usize, sampling: &OrderSampling) -> Result<Annihilation> {
    if cap > t.arity() {
        return Err(Error::InvalidParameter(format!(
            "cap {cap} exceeds arity {}",
            t.arity()
        )));
    }
    if t.is_zero() {
        return Ok(Annihilation {
            depth: Some(0),
            cap,
            orders_checked: 0,
            exhaustive: true,
        });
    }
    if cap == 0 {
        return Ok(Annihilation {
            depth: None,
            cap,
            orders_checked: 0,
            exhaustive: true,
        });
    }
    let (orders, exhaustive) = sampling.orders(t.arity(), cap);
    let depth = annihilation_depth(t, &orders, cap)?;
    Ok(Annihilation {
        depth,
        cap,
        orders_checked: orders.len(),
        exhaustive,
    })
}

fn first_zero_step(t: &TruthTable, order: &DecimationOrder, cap: usize) -> Result<Option<usize>> {
    if t.is_zero() {
        return Ok(Some(0));
    }
    let mut cur = t.clone();
    for (m, label) in order.compacted_labels().into_iter().take(cap).enumerate() {
        cur = decimate(&cur, label)?;
        if cur.is_zero() {
            return Ok(Some(m + 1));
        }
    }
    Ok(None)
}

/// Checks that decimating the set `vars` gives the same table in every
/// order. When `|vars|!` exceeds `max_orderings`, that many random
/// orderings are compared instead.
pub fn order_independence_check(
    t: &TruthTable,
    vars: &[usize],
    max_orderings: usize,
    seed: u64,
) -> Result<bool> {
    let base = DecimationOrder::new(vars.to_vec());
    base.validate(t.arity())?;
    if vars.len() <= 1 {
        return Ok(true);
    }
    let reference = decimate_seq(t, &base)?;
    let factorial = (1..=vars.len()).try_fold(1usize, |acc, k| acc.checked_mul(k));
    let orderings: Vec<DecimationOrder> = match factorial {
        Some(f) if f <= max_orderings => permutations(vars),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..max_orderings)
                .map(|_| {
                    let mut v = vars.to_vec();
                    v.shuffle(&mut rng);
                    DecimationOrder::new(v)
                })
                .collect()
        }
    };
    orderings
        .par_iter()
        .map(|o| decimate_seq(t, o).map(|r| r == reference))
        .try_reduce(|| true, |a, b| Ok(a && b))
}

fn permutations(vars: &[usize]) -> Vec<DecimationOrder> {
    let k = vars.len();
    DecimationOrder::all(k, k)
        .into_iter()
        .map(|p| DecimationOrder::new(p.vars().iter().map(|&i| vars[i - 1]).collect()))
        .collect()
}
