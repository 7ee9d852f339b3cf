//! Exact 64-bit integer number theory: deterministic primality, factorization,
//! Kronecker symbols, squarefree splits, prime sieves in progressions, and
//! almost-prime counting.
//!
//! All routines are pure functions on value inputs and are deterministic;
//! Miller-Rabin uses a fixed witness set valid for the full 64-bit range, and
//! the Pollard rho fallback walks a fixed schedule of polynomial increments.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

/// Largest modulus accepted by the series layer; residue products must fit
/// in 64-bit intermediates.
pub const MAX_MODULUS: u64 = 1 << 31;

/// Trial-division cutoff before `factorize` falls back to Pollard rho.
const TRIAL_LIMIT: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NumTheoryError {
    /// `primes_in_progression` requires gcd(a, q) = 1.
    NotCoprime { a: i64, q: u64 },
    /// Modulus outside the supported range [1, 2^31].
    BadModulus(u64),
}

impl fmt::Display for NumTheoryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumTheoryError::NotCoprime { a, q } => {
                write!(f, "progression class {a} mod {q} is not coprime")
            }
            NumTheoryError::BadModulus(m) => write!(f, "modulus {m} outside [1, 2^31]"),
        }
    }
}

impl core::error::Error for NumTheoryError {}

pub const fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub const fn gcd_i64(a: i64, b: i64) -> u64 {
    gcd_u64(a.unsigned_abs(), b.unsigned_abs())
}

/// (a * b) mod m without overflow for the full 64-bit range.
pub const fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub const fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp != 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Modular inverse by the extended Euclidean algorithm; `None` when
/// gcd(a, m) > 1.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    if m == 0 {
        return None;
    }
    if m == 1 {
        return Some(0);
    }
    let (mut old_r, mut r) = (a as i128 % m as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(m as i128) as u64)
}

/// Deterministic Miller-Rabin primality test, valid for all n < 2^64.
///
/// The witness set 2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37 is known to be
/// deterministic for the full 64-bit range, so no randomness is involved.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Pollard rho with Brent's cycle detection. Caller guarantees n is odd,
/// composite, and has no factor below the trial-division cutoff.
fn pollard_rho(n: u64) -> u64 {
    // The increment schedule is fixed, so the walk is reproducible.
    for c in 1..64u64 {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut x, mut y, mut d) = (2u64, 2u64, 1u64);
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = gcd_u64(x.abs_diff(y), n);
        }
        if d != n {
            return d;
        }
    }
    unreachable!("pollard rho exhausted its increment schedule")
}

/// Prime factorization with positive exponents, sorted ascending.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factorization {
    factors: Vec<(u64, u32)>,
}

impl Factorization {
    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    /// Multiplies the factorization back out.
    pub fn value(&self) -> u64 {
        self.factors
            .iter()
            .fold(1u64, |acc, &(p, e)| acc * p.pow(e))
    }

    /// Number of distinct prime divisors.
    pub fn omega(&self) -> u32 {
        self.factors.len() as u32
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }

    pub fn exponent_of(&self, p: u64) -> u32 {
        self.factors
            .iter()
            .find(|&&(q, _)| q == p)
            .map_or(0, |&(_, e)| e)
    }
}

/// Exact factorization of n >= 1; n = 1 yields the empty product.
///
/// Trial division up to 10^6, then deterministic Pollard rho on whatever
/// cofactor remains.
pub fn factorize(n: u64) -> Factorization {
    assert!(n >= 1, "factorize requires n >= 1");
    let mut factors: Vec<(u64, u32)> = Vec::new();
    let mut rest = n;
    let push = |p: u64, e: u32, factors: &mut Vec<(u64, u32)>| {
        if let Some(last) = factors.iter_mut().find(|f| f.0 == p) {
            last.1 += e;
        } else {
            factors.push((p, e));
        }
    };

    for p in [2u64, 3, 5] {
        let mut e = 0;
        while rest % p == 0 {
            rest /= p;
            e += 1;
        }
        if e > 0 {
            push(p, e, &mut factors);
        }
    }
    // 6k +/- 1 wheel up to the trial limit.
    let mut d = 7u64;
    let mut inc = 4u64;
    while d <= TRIAL_LIMIT && d * d <= rest {
        let mut e = 0;
        while rest % d == 0 {
            rest /= d;
            e += 1;
        }
        if e > 0 {
            push(d, e, &mut factors);
        }
        d += inc;
        inc = 6 - inc;
    }
    if rest > 1 {
        if d * d > rest || is_prime(rest) {
            push(rest, 1, &mut factors);
        } else {
            let mut stack = vec![rest];
            while let Some(m) = stack.pop() {
                if is_prime(m) {
                    push(m, 1, &mut factors);
                    continue;
                }
                let d = pollard_rho(m);
                stack.push(d);
                stack.push(m / d);
            }
        }
    }
    factors.sort_unstable_by_key(|&(p, _)| p);
    Factorization { factors }
}

/// Number of distinct prime divisors of n >= 1.
pub fn omega(n: u64) -> u32 {
    factorize(n).omega()
}

/// Kronecker symbol (a | n), fully extended to all integer pairs.
///
/// Agrees with the Legendre symbol for odd prime n and is completely
/// multiplicative in both arguments.
pub fn kronecker(a: i64, n: i64) -> i32 {
    if n == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    let mut acc = 1i32;
    let mut n_abs = n.unsigned_abs();
    if n < 0 && a < 0 {
        acc = -acc;
    }
    if a & 1 == 0 && n_abs & 1 == 0 {
        return 0;
    }
    let twos = n_abs.trailing_zeros();
    n_abs >>= twos;
    if twos & 1 == 1 {
        // (a | 2) depends on a mod 8.
        match (a & 7) as u8 {
            3 | 5 => acc = -acc,
            _ => {}
        }
    }
    // Jacobi symbol (a | n_abs) with n_abs odd positive.
    let mut a = a.rem_euclid(n_abs as i64) as u64;
    let mut n = n_abs;
    loop {
        if a == 0 {
            return if n == 1 { acc } else { 0 };
        }
        let z = a.trailing_zeros();
        a >>= z;
        if z & 1 == 1 && matches!(n & 7, 3 | 5) {
            acc = -acc;
        }
        if a & 3 == 3 && n & 3 == 3 {
            acc = -acc;
        }
        core::mem::swap(&mut a, &mut n);
        a %= n;
    }
}

/// n = squarefree * root^2 with the squarefree part free of square factors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SquarefreeSplit {
    pub squarefree: u64,
    pub root: u64,
}

pub fn squarefree_split(n: u64) -> SquarefreeSplit {
    let f = factorize(n);
    let mut squarefree = 1u64;
    let mut root = 1u64;
    for &(p, e) in f.factors() {
        if e & 1 == 1 {
            squarefree *= p;
        }
        root *= p.pow(e / 2);
    }
    SquarefreeSplit { squarefree, root }
}

/// Sieve of Eratosthenes; primes up to and including `limit`, ascending.
pub fn sieve_primes(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for p in 2..=n {
        if !composite[p] {
            primes.push(p as u64);
            let mut m = p * p;
            while m <= n {
                composite[m] = true;
                m += p;
            }
        }
    }
    primes
}

/// The primes p <= limit with p = a (mod q), ascending. Rejects classes with
/// gcd(a, q) > 1, which contain at most one prime and defeat the searches
/// built on top of this stream.
pub fn primes_in_progression(a: i64, q: u64, limit: u64) -> Result<Vec<u64>, NumTheoryError> {
    assert!(q >= 1, "progression modulus must be positive");
    if gcd_i64(a, q as i64) != 1 {
        return Err(NumTheoryError::NotCoprime { a, q });
    }
    let target = a.rem_euclid(q as i64) as u64;
    Ok(sieve_primes(limit)
        .into_iter()
        .filter(|p| p % q == target)
        .collect())
}

/// Count of squarefree products of `m` distinct primes <= `x`, all prime
/// factors drawn from the set selected by `pred`.
pub fn count_pi_m<F: Fn(u64) -> bool>(m: u32, x: u64, pred: F) -> u64 {
    assert!(m >= 1, "count_pi_m requires m >= 1");
    if x < 2 {
        return 0;
    }
    let primes = sieve_primes(x);
    // Prefix counts of selected primes make the innermost level O(log).
    let selected: Vec<bool> = primes.iter().map(|&p| pred(p)).collect();
    let mut prefix = vec![0u64; primes.len() + 1];
    for (i, &sel) in selected.iter().enumerate() {
        prefix[i + 1] = prefix[i] + u64::from(sel);
    }

    fn rec(
        primes: &[u64],
        selected: &[bool],
        prefix: &[u64],
        start: usize,
        m_left: u32,
        bound: u64,
    ) -> u64 {
        if m_left == 1 {
            // Index of the last prime <= bound.
            let hi = primes.partition_point(|&p| p <= bound);
            return prefix[hi].saturating_sub(prefix[start]);
        }
        let mut total = 0u64;
        for i in start..primes.len() {
            let p = primes[i];
            // p is the smallest chosen prime, so p^m_left must stay <= bound.
            match p.checked_pow(m_left) {
                Some(pm) if pm <= bound => {}
                _ => break,
            }
            if selected[i] {
                total += rec(primes, selected, prefix, i + 1, m_left - 1, bound / p);
            }
        }
        total
    }

    rec(&primes, &selected, &prefix, 0, m, x)
}

/// Euler's totient via the factorization.
pub fn euler_phi(n: u64) -> u64 {
    factorize(n)
        .factors()
        .iter()
        .fold(n, |acc, &(p, _)| acc / p * (p - 1))
}

/// Per-integer tables of omega(n) and squarefree-ness for n in [0, limit],
/// built by a single sieve pass. Entry 0 is a filler.
pub fn omega_squarefree_tables(limit: u64) -> (Vec<u8>, Vec<bool>) {
    let n = limit as usize;
    let mut omega = vec![0u8; n + 1];
    let mut squarefree = vec![true; n + 1];
    for p in 2..=n {
        if omega[p] == 0 {
            let mut m = p;
            while m <= n {
                omega[m] += 1;
                m += p;
            }
            if let Some(p2) = p.checked_mul(p) {
                let mut m = p2;
                while m <= n {
                    squarefree[m] = false;
                    m += p2;
                }
            }
        }
    }
    (omega, squarefree)
}

/// A census modulus together with its factorization into prime powers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Modulus {
    value: u64,
    factors: Factorization,
}

impl Modulus {
    /// Accepts 1 <= value <= 2^31 so residue products fit in u64.
    pub fn new(value: u64) -> Result<Self, NumTheoryError> {
        if value == 0 || value > MAX_MODULUS {
            return Err(NumTheoryError::BadModulus(value));
        }
        Ok(Modulus {
            value,
            factors: factorize(value),
        })
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn is_odd(&self) -> bool {
        self.value & 1 == 1
    }

    /// The prime-power pairs (l, e) with l^e exactly dividing the modulus.
    pub fn prime_powers(&self) -> &[(u64, u32)] {
        self.factors.factors()
    }
}
