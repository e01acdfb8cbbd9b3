//! Log-domain counts of functions, low-degree polynomials and sparse
//! perturbations.
//!
//! The quantities are base-2 logarithms of counts such as `2^(2^n)`; at
//! `n = 1024` even the logarithm overflows `f64`, so results are
//! [`ExtFloat`]s carrying a separate binary exponent.

use std::cmp::Ordering;
use std::fmt;
use std::io::Write;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{binomial_row, pow2, stirling_error};

/// Largest `Ω = 2^n` summed exactly with big integers.
pub const EXACT_SUBSET_MAX_OMEGA: u64 = 4096;

/// `mantissa * 2^exp`, normalised so that `1 <= |mantissa| < 2` (or zero).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtFloat {
    mantissa: f64,
    exp: i64,
}

impl ExtFloat {
    pub const ZERO: ExtFloat = ExtFloat { mantissa: 0.0, exp: 0 };

    pub fn new(mantissa: f64, exp: i64) -> Self {
        assert!(mantissa.is_finite(), "ExtFloat mantissa must be finite");
        if mantissa == 0.0 {
            return Self::ZERO;
        }
        let e = mantissa.abs().log2().floor() as i64;
        let mut m = mantissa * pow2(-e);
        let mut exp = exp + e;
        // log2().floor() can be off by one at the boundaries
        if m.abs() >= 2.0 {
            m /= 2.0;
            exp += 1;
        } else if m.abs() < 1.0 {
            m *= 2.0;
            exp -= 1;
        }
        ExtFloat { mantissa: m, exp }
    }

    pub fn from_f64(x: f64) -> Self {
        Self::new(x, 0)
    }

    /// `2^e`.
    pub fn pow2(e: i64) -> Self {
        ExtFloat { mantissa: 1.0, exp: e }
    }

    pub fn from_biguint(x: &BigUint) -> Self {
        if x.is_zero() {
            return Self::ZERO;
        }
        let drop = x.bits().saturating_sub(64);
        let top = (x >> drop).to_u64().expect("at most 64 bits remain") as f64;
        Self::new(top, drop as i64)
    }

    pub fn mantissa(&self) -> f64 {
        self.mantissa
    }

    pub fn exp(&self) -> i64 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == 0.0
    }

    pub fn is_negative(&self) -> bool {
        self.mantissa < 0.0
    }

    /// Nearest `f64`, infinite when out of range.
    pub fn to_f64(&self) -> f64 {
        if self.exp > 1023 {
            self.mantissa.signum() * f64::INFINITY
        } else {
            self.mantissa * pow2(self.exp)
        }
    }

    /// `log2 |x|`.
    pub fn log2_abs(&self) -> f64 {
        self.mantissa.abs().log2() + self.exp as f64
    }
}

impl Add for ExtFloat {
    type Output = ExtFloat;
    fn add(self, rhs: ExtFloat) -> ExtFloat {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let (hi, lo) = if self.exp >= rhs.exp { (self, rhs) } else { (rhs, self) };
        let shift = hi.exp - lo.exp;
        if shift > 1100 {
            return hi;
        }
        ExtFloat::new(hi.mantissa + lo.mantissa * pow2(-shift), hi.exp)
    }
}

impl Neg for ExtFloat {
    type Output = ExtFloat;
    fn neg(self) -> ExtFloat {
        ExtFloat {
            mantissa: -self.mantissa,
            exp: self.exp,
        }
    }
}

impl Sub for ExtFloat {
    type Output = ExtFloat;
    fn sub(self, rhs: ExtFloat) -> ExtFloat {
        self + (-rhs)
    }
}

impl Mul for ExtFloat {
    type Output = ExtFloat;
    fn mul(self, rhs: ExtFloat) -> ExtFloat {
        ExtFloat::new(self.mantissa * rhs.mantissa, self.exp + rhs.exp)
    }
}

impl PartialOrd for ExtFloat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        let d = *self - *other;
        0.0.partial_cmp(&-d.mantissa)
    }
}

impl fmt::Display for ExtFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp.abs() < 50 {
            return write!(f, "{}", self.to_f64());
        }
        if self.exp.abs() < 1000 {
            return write!(f, "{:e}", self.to_f64());
        }
        let log10 = self.mantissa.abs().log10() + self.exp as f64 * std::f64::consts::LOG10_2;
        let e10 = log10.floor();
        let sign = if self.is_negative() { "-" } else { "" };
        write!(f, "{sign}{:.15}e{}", 10f64.powf(log10 - e10), e10 as i64)
    }
}

/// `log2` of the number of Boolean functions of `n` inputs, i.e. `2^n`.
pub fn log2_num_functions(n: usize) -> ExtFloat {
    ExtFloat::pow2(n as i64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialCount {
    /// `Σ_{j <= xi} C(n, j)`, the log2 of the number of polynomials.
    pub exact: BigUint,
    /// `e (n / xi)^xi`; `None` at `xi = 0`.
    pub asymptotic: Option<f64>,
}

impl PolynomialCount {
    pub fn log2(&self) -> ExtFloat {
        ExtFloat::from_biguint(&self.exact)
    }

    /// `|exact - asymptotic| / exact`.
    pub fn relative_gap(&self) -> Option<f64> {
        let exact = ExtFloat::from_biguint(&self.exact);
        self.asymptotic.map(|a| {
            let gap = exact - ExtFloat::from_f64(a);
            (gap.log2_abs() - exact.log2_abs()).exp2()
        })
    }
}

pub fn log2_num_polynomials(n: usize, xi: usize) -> Result<PolynomialCount> {
    if xi > n {
        return Err(Error::InvalidParameter(format!("degree bound {xi} exceeds arity {n}")));
    }
    let exact = binomial_row(n as u64)
        .into_iter()
        .take(xi + 1)
        .fold(BigUint::zero(), |acc, c| acc + c);
    let asymptotic = (xi > 0).then(|| std::f64::consts::E * (n as f64 / xi as f64).powi(xi as i32));
    Ok(PolynomialCount { exact, asymptotic })
}

/// `Φ = C 2^(n - alpha xi / log2 n)`, rounded down while it is small enough
/// to be an exact integer.
pub fn perturbation_budget(n: usize, xi: usize, c: f64, alpha: f64) -> Result<ExtFloat> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("arity {n} below 2")));
    }
    if !(c > 0.0 && alpha >= 0.0 && c.is_finite() && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("invalid bound constants C={c} alpha={alpha}")));
    }
    let shift = -alpha * xi as f64 / (n as f64).log2();
    let int_part = shift.floor();
    let phi = ExtFloat::new(c * (shift - int_part).exp2(), n as i64 + int_part as i64);
    let phi = if phi.exp < 53 {
        ExtFloat::from_f64(phi.to_f64().floor())
    } else {
        phi
    };
    if phi > ExtFloat::pow2(n as i64) {
        return Err(Error::InvalidParameter(format!(
            "perturbation budget exceeds 2^{n} (C={c}, alpha={alpha}, xi={xi})"
        )));
    }
    Ok(phi)
}

/// `log2 C(Ω, s)` for `Ω = 2^n` and `1 <= s <= Ω - 1`, via the entropy form
/// of Stirling's formula with explicit remainders.
pub fn log2_binomial_pow2(n: usize, s: ExtFloat) -> ExtFloat {
    let omega = ExtFloat::pow2(n as i64);
    let q = (s * ExtFloat::pow2(-(n as i64))).to_f64();
    if q <= 0.0 {
        return ExtFloat::ZERO;
    }
    // Ω H(q) in bits, H the binary entropy
    let h = -q * q.log2() - (1.0 - q) * (-q).ln_1p() / std::f64::consts::LN_2;
    let main = omega * ExtFloat::from_f64(h);
    let s_f = s.to_f64();
    let omega_f = omega.to_f64();
    let rest = omega - s;
    let rest_f = rest.to_f64();
    let corr = stirling_error(omega_f) - stirling_error(s_f) - stirling_error(rest_f);
    let spread = (2.0 * std::f64::consts::PI * q * (1.0 - q)).log2() + n as f64;
    let tail = -0.5 * spread + corr / std::f64::consts::LN_2;
    main + ExtFloat::from_f64(if tail.is_finite() { tail } else { -0.5 * spread })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationCount {
    pub phi: ExtFloat,
    /// `log2 Σ_{1 <= s <= Φ} C(Ω, s)` when `Ω` is small enough to sum.
    pub exact: Option<f64>,
    /// `log2 C(Ω, min(Φ, Ω/2)) + log2 Φ`, capped at `Ω`.
    pub bound: ExtFloat,
    /// `Φ log2(e Ω / Φ)`.
    pub asymptotic: ExtFloat,
}

impl PerturbationCount {
    /// The exact value when available, otherwise the upper bound.
    pub fn value(&self) -> ExtFloat {
        self.exact.map(ExtFloat::from_f64).unwrap_or(self.bound)
    }
}

/// Counts the sets of at most `Φ` flipped inputs out of `Ω = 2^n`. Budgets
/// below one leave only the empty perturbation, whose log-count is zero.
pub fn log2_subsets_up_to(n: usize, phi: ExtFloat) -> Result<PerturbationCount> {
    let omega = ExtFloat::pow2(n as i64);
    if phi > omega {
        return Err(Error::InvalidParameter(format!("budget exceeds 2^{n}")));
    }
    if phi < ExtFloat::from_f64(1.0) {
        return Ok(PerturbationCount {
            phi,
            exact: Some(0.0),
            bound: ExtFloat::ZERO,
            asymptotic: ExtFloat::ZERO,
        });
    }
    let half = ExtFloat::pow2(n as i64 - 1);
    let s_star = if phi > half { half } else { phi };
    let top = if s_star == omega {
        ExtFloat::ZERO
    } else {
        log2_binomial_pow2(n, s_star)
    };
    let bound = top + ExtFloat::from_f64(phi.log2_abs());
    let bound = if bound > omega { omega } else { bound };
    let ratio_bits = n as f64 - phi.log2_abs() + std::f64::consts::LOG2_E;
    let asymptotic = phi * ExtFloat::from_f64(ratio_bits);

    let exact = (n < 64 && (1u64 << n) <= EXACT_SUBSET_MAX_OMEGA).then(|| {
        let row = binomial_row(1u64 << n);
        let phi = phi.to_f64() as usize;
        let sum = row[1..=phi].iter().fold(BigUint::zero(), |acc, c| acc + c);
        ExtFloat::from_biguint(&sum).log2_abs()
    });
    Ok(PerturbationCount {
        phi,
        exact,
        bound,
        asymptotic,
    })
}

pub fn log2_perturbation_count(n: usize, xi: usize, c: f64, alpha: f64) -> Result<PerturbationCount> {
    log2_subsets_up_to(n, perturbation_budget(n, xi, c, alpha)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginRow {
    pub n: usize,
    pub xi: usize,
    #[serde(rename = "C")]
    pub c: f64,
    pub alpha: f64,
    #[serde(rename = "log2F")]
    pub log2_f: ExtFloat,
    #[serde(rename = "log2M")]
    pub log2_m: ExtFloat,
    pub margin: ExtFloat,
}

/// `log2 F + log2 M - 2^n`; negative means the perturbed low-degree
/// polynomials cannot cover all functions.
pub fn separation_margin(n: usize, xi: usize, c: f64, alpha: f64) -> Result<ExtFloat> {
    Ok(margin_row(n, xi, c, alpha)?.margin)
}

pub fn margin_row(n: usize, xi: usize, c: f64, alpha: f64) -> Result<MarginRow> {
    let log2_m = log2_num_polynomials(n, xi)?.log2();
    let log2_f = log2_perturbation_count(n, xi, c, alpha)?.value();
    Ok(MarginRow {
        n,
        xi,
        c,
        alpha,
        log2_f,
        log2_m,
        margin: log2_f + log2_m - log2_num_functions(n),
    })
}

pub fn margin_sweep(points: &[(usize, usize)], c: f64, alpha: f64) -> Result<Vec<MarginRow>> {
    points
        .par_iter()
        .map(|&(n, xi)| margin_row(n, xi, c, alpha))
        .collect()
}

pub fn write_sweep_csv<W: Write>(rows: &[MarginRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["n", "xi", "C", "alpha", "log2F", "log2M", "margin"])?;
    for r in rows {
        out.write_record([
            r.n.to_string(),
            r.xi.to_string(),
            r.c.to_string(),
            r.alpha.to_string(),
            r.log2_f.to_string(),
            r.log2_m.to_string(),
            r.margin.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NaiveAdjustment {
    /// `N - M + 1 + M log2(N/M)`.
    pub exponent: f64,
    pub exceeds: bool,
}

pub fn naive_adjustment_estimate(n: usize, m: usize) -> Result<NaiveAdjustment> {
    if m == 0 || m > n {
        return Err(Error::InvalidParameter(format!("need 1 <= m <= n, got m={m} n={n}")));
    }
    let (nf, mf) = (n as f64, m as f64);
    let exponent = nf - mf + 1.0 + mf * (nf / mf).log2();
    Ok(NaiveAdjustment {
        exponent,
        exceeds: exponent > nf,
    })
}
