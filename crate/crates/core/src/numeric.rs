//! Binomial arithmetic: exact big-integer coefficients and accurate
//! floating-point binomial probabilities for large arguments.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `C(n, k)` exactly.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut c = BigUint::one();
    for i in 0..k {
        c *= n - i;
        c /= i + 1;
    }
    c
}

/// Row `n` of Pascal's triangle.
pub fn binomial_row(n: u64) -> Vec<BigUint> {
    let mut row = Vec::with_capacity(n as usize + 1);
    let mut c = BigUint::one();
    row.push(c.clone());
    for s in 0..n {
        c *= n - s;
        c /= s + 1;
        row.push(c.clone());
    }
    row
}

/// `num / 2^shift` as the nearest-ish `f64`, without overflowing when either
/// side exceeds the `f64` range.
pub fn ratio_pow2_to_f64(num: &BigUint, shift: u64) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let bits = num.bits();
    let drop = bits.saturating_sub(64);
    let top = (num >> drop).to_u64().expect("at most 64 bits remain") as f64;
    let exp = drop as i64 - shift as i64;
    // split the scaling so a subnormal result is not flushed early
    top * pow2(exp / 2) * pow2(exp - exp / 2)
}

/// `2^e` for any integer `e`, flushing to zero or infinity outside the range.
pub fn pow2(e: i64) -> f64 {
    if e > 1023 {
        f64::INFINITY
    } else if e < -1074 {
        0.0
    } else if e < -1022 {
        2f64.powi(-1022) * 2f64.powi((e + 1022) as i32)
    } else {
        2f64.powi(e as i32)
    }
}

/// `ln Γ(n + 1) - (n + 1/2) ln n + n - ln √(2π)`, the Stirling remainder.
pub fn stirling_error(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 && n.fract() == 0.0 {
        let ln_fact: f64 = (2..=n as u64).map(|i| (i as f64).ln()).sum();
        return ln_fact - (n + 0.5) * n.ln() + n - 0.5 * LN_2PI;
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// `ln n!` for integral `n >= 0`.
pub fn ln_factorial(n: f64) -> f64 {
    if n < 2.0 {
        return 0.0;
    }
    stirling_error(n) + (n + 0.5) * n.ln() - n + 0.5 * LN_2PI
}

/// Deviance term `x ln(x/np) + np - x`, accurate when `x ≈ np`.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / np).ln() + np - x
    }
}

/// `C(n, s) / 2^n` in floating point, accurate to a few ulps even for very
/// large `n` (saddle-point expansion with Stirling remainders).
pub fn half_binomial_pmf(n: u64, s: u64) -> f64 {
    if s > n {
        return 0.0;
    }
    let nf = n as f64;
    if s == 0 || s == n {
        return pow2(-(n as i64));
    }
    let x = s as f64;
    let half = 0.5 * nf;
    let lc = stirling_error(nf) - stirling_error(x) - stirling_error(nf - x) - bd0(x, half) - bd0(nf - x, half);
    let lf = LN_2PI + x.ln() + (-x / nf).ln_1p();
    (lc - 0.5 * lf).exp()
}

/// Neumaier-compensated summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}
