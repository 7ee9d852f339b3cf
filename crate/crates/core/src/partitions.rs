//! The coefficient streams p(n), c_t(n), and cphi_h(n) mod M.
//!
//! Each stream has a fast generating-function path plus an independent
//! brute-force oracle at small scale: a coin-counting dynamic program for
//! p(n) and hook-length enumeration for t-cores. Streams are indexed by the
//! combinatorial n; the 24n-1 style exponent shifts stay inside
//! modular-form-facing code.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::numtheory::MAX_MODULUS;
use crate::qseries::{
    eta_expand, euler_product, lattice_theta, EtaQuotient, GramForm, QSeries, QSeriesError,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StreamError {
    /// t-core streams need t >= 2.
    BadTCore(u32),
    /// Frobenius streams need h >= 1.
    BadColors(u32),
    Series(QSeriesError),
}

impl fmt::Display for StreamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StreamError::BadTCore(t) => write!(f, "t-core parameter {t} must be >= 2"),
            StreamError::BadColors(h) => write!(f, "color count {h} must be >= 1"),
            StreamError::Series(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for StreamError {}

impl From<QSeriesError> for StreamError {
    fn from(e: QSeriesError) -> Self {
        StreamError::Series(e)
    }
}

/// Which coefficient stream an experiment runs over.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SequenceVariant {
    /// p(n), the unrestricted partition numbers.
    Partition,
    /// c_t(n), the t-core partition numbers.
    TCore(u32),
    /// cphi_h(n), generalized Frobenius partitions with h colors.
    Frobenius(u32),
    /// Coefficients of an eta quotient, read along its exponent lattice.
    EtaQuotient(EtaQuotient),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceSpec {
    pub variant: SequenceVariant,
    pub modulus: u64,
}

fn check_modulus(m: u64) {
    assert!(
        m >= 1 && m <= MAX_MODULUS,
        "modulus {m} outside [1, 2^31]"
    );
}

/// p(0..=x) mod M by the pentagonal-number recurrence, O(x^{3/2}) additions.
pub fn partition_mod(x: usize, modulus: u64) -> Vec<u64> {
    check_modulus(modulus);
    let m = modulus;
    let mut p = vec![0u64; x + 1];
    p[0] = 1 % m;
    for n in 1..=x {
        let mut acc = 0u64;
        let mut j = 1usize;
        loop {
            let g1 = j * (3 * j - 1) / 2;
            if g1 > n {
                break;
            }
            let add = j & 1 == 1;
            let v1 = p[n - g1];
            acc += if add { v1 } else { m - v1 };
            if acc >= m {
                acc -= m;
            }
            let g2 = g1 + j;
            if g2 <= n {
                let v2 = p[n - g2];
                acc += if add { v2 } else { m - v2 };
                if acc >= m {
                    acc -= m;
                }
            }
            j += 1;
        }
        p[n] = acc;
    }
    p
}

/// Independent oracle for `partition_mod`: the classic coin-counting dynamic
/// program over part sizes, O(x^2).
pub fn partition_oracle_mod(x: usize, modulus: u64) -> Vec<u64> {
    check_modulus(modulus);
    let mut dp = vec![0u64; x + 1];
    dp[0] = 1 % modulus;
    for part in 1..=x {
        for j in part..=x {
            dp[j] = (dp[j] + dp[j - part]) % modulus;
        }
    }
    dp
}

/// c_t(0..=x) mod M from the eta-quotient generating function
/// prod (1-q^{tn})^t / (1-q^n).
pub fn tcore_mod(t: u32, x: usize, modulus: u64) -> Vec<u64> {
    assert!(t >= 2, "t-core parameter must be >= 2");
    check_modulus(modulus);
    let eq = EtaQuotient::tcore_raw(t);
    let series = eta_expand(&eq, x, modulus).expect("valid eta quotient");
    let offset = eq.offset_num();
    (0..=x as i64)
        .map(|n| {
            series
                .coeff_at(offset + 24 * n)
                .expect("within expansion window")
        })
        .collect()
}

/// Exact c_t(n) by enumerating the partitions of n and testing every hook
/// length for divisibility by t. Enumeration scale only (n <= ~14).
pub fn tcore_oracle(t: u32, n: usize) -> u64 {
    assert!(t >= 2);
    let mut count = 0u64;
    let mut parts: Vec<usize> = Vec::new();
    enumerate_partitions(n, n, &mut parts, &mut |lambda| {
        if is_tcore(lambda, t as usize) {
            count += 1;
        }
    });
    count
}

fn enumerate_partitions<F: FnMut(&[usize])>(
    remaining: usize,
    max_part: usize,
    parts: &mut Vec<usize>,
    visit: &mut F,
) {
    if remaining == 0 {
        visit(parts);
        return;
    }
    let cap = remaining.min(max_part);
    for next in (1..=cap).rev() {
        parts.push(next);
        enumerate_partitions(remaining - next, next, parts, visit);
        parts.pop();
    }
}

fn is_tcore(lambda: &[usize], t: usize) -> bool {
    if lambda.is_empty() {
        return true;
    }
    // Conjugate partition gives column lengths.
    let cols = lambda[0];
    let mut conj = vec![0usize; cols];
    for &row in lambda {
        for c in conj.iter_mut().take(row) {
            *c += 1;
        }
    }
    for (i, &row) in lambda.iter().enumerate() {
        for j in 0..row {
            // 1-indexed hook length: lambda_i + conj_j - i - j - 1.
            let hook = row + conj[j] - i - j - 1;
            if hook % t == 0 {
                return false;
            }
        }
    }
    true
}

/// cphi_h(0..=x) mod M: the h-th power of the partition generating function
/// times the (h-1)-dimensional lattice theta series.
pub fn frobenius_mod(h: u32, x: usize, modulus: u64) -> Vec<u64> {
    assert!(h >= 1, "color count must be >= 1");
    check_modulus(modulus);
    let series = frobenius_series(h, x, modulus).expect("valid generating data");
    (0..=x as i64)
        .map(|n| series.coeff_q(n).expect("within expansion window"))
        .collect()
}

/// The full q-series of CPhi_h, shared with modular-form-facing callers.
pub fn frobenius_series(h: u32, x: usize, modulus: u64) -> Result<QSeries, QSeriesError> {
    if modulus == 1 {
        return QSeries::zero(1, 24 * (x as i64 + 1));
    }
    let parts = euler_product(x, modulus)?.invert()?.pow(h as u64)?;
    let theta = lattice_theta(&GramForm::frobenius(h), x, modulus)?;
    parts.mul(&theta)
}

/// The coefficient stream named by `spec`, indexed by the combinatorial n.
///
/// For a raw eta quotient the values are read along its exponent lattice
/// starting at the nominal leading exponent, so 1/eta(24z) yields p(n) at
/// position n regardless of the 24n-1 exponent shift.
pub fn stream(spec: &SequenceSpec, x: usize) -> Result<Vec<u64>, StreamError> {
    if spec.modulus == 0 || spec.modulus > MAX_MODULUS {
        return Err(StreamError::Series(QSeriesError::BadModulus(spec.modulus)));
    }
    match &spec.variant {
        SequenceVariant::Partition => Ok(partition_mod(x, spec.modulus)),
        SequenceVariant::TCore(t) => {
            if *t < 2 {
                return Err(StreamError::BadTCore(*t));
            }
            Ok(tcore_mod(*t, x, spec.modulus))
        }
        SequenceVariant::Frobenius(h) => {
            if *h < 1 {
                return Err(StreamError::BadColors(*h));
            }
            Ok(frobenius_mod(*h, x, spec.modulus))
        }
        SequenceVariant::EtaQuotient(eq) => {
            let offset = eq.offset_num();
            let step = eq
                .terms()
                .iter()
                .fold(0u64, |g, &(d, _)| crate::numtheory::gcd_u64(g, 24 * d))
                .max(24) as i64;
            // The expansion window is measured in q-steps; scale it so the
            // whole lattice range [offset, offset + x * step] is covered.
            let trunc = (step as usize / 24) * (x + 1);
            let series = eta_expand(eq, trunc, spec.modulus)?;
            Ok((0..=x as i64)
                .map(|i| {
                    series
                        .coeff_at(offset + i * step)
                        .expect("within expansion window")
                })
                .collect())
        }
    }
}
