//! Hecke operators on truncated expansions mod M, the Shimura lift, and the
//! twist constructions of cusp forms congruent to character slices.
//!
//! Weights are carried as twice their value so integral weight k and
//! half-integral weight k + 1/2 share one context type. The nebentypus is a
//! real character n -> (D | n), evaluated as zero whenever gcd(n, N) > 1,
//! and chi(p^2) is computed as chi(p)^2.
//!
//! Eigen checks at finite truncation are necessarily one-sided: a report of
//! `Consistent` means no violation below the stated index, not a proof.

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::numtheory::{gcd_i64, is_prime, kronecker, pow_mod, squarefree_split};
use crate::qseries::{eta_expand, twist, EtaQuotient, QSeries, QSeriesError, TwistKind};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HeckeError {
    Series(QSeriesError),
    /// Weight k must be >= 1: p^{k-1} at k = 0 has no meaning mod M.
    BadWeight,
    /// Half-integral weight requires 4 | N.
    BadLevel(u64),
    /// The named integer is not a usable prime here.
    BadPrime(u64),
    /// Integral-weight operators are only applied away from the level.
    PrimeDividesLevel { p: u64, level: u64 },
    /// Operators act on expansions with non-negative valuation.
    NegativeValuation,
    /// Mixed up integral and half-integral entry points.
    WrongParity,
    /// Truncation too short to produce the requested coefficients.
    InsufficientReach { needed: i64, have: i64 },
    /// Shimura lifts are indexed by squarefree t.
    NotSquarefree(u64),
    /// Comparison modulus must divide the ambient coefficient modulus.
    ModulusNotDivisible { check: u64, ambient: u64 },
    /// The exponent parameter is out of the supported range.
    BadExponent,
    /// The unit-congruent form power failed its congruence self-check.
    CongruenceSelfCheck { ell: u64, e: u32 },
    /// Twist constructions need odd coefficient moduli so 2 is a unit.
    EvenModulus(u64),
}

impl fmt::Display for HeckeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HeckeError::Series(e) => write!(f, "{e}"),
            HeckeError::BadWeight => write!(f, "weight index k must be >= 1"),
            HeckeError::BadLevel(n) => write!(f, "level {n} invalid (half-integral needs 4 | N)"),
            HeckeError::BadPrime(p) => write!(f, "{p} is not a usable prime here"),
            HeckeError::PrimeDividesLevel { p, level } => {
                write!(f, "prime {p} divides the level {level}")
            }
            HeckeError::NegativeValuation => write!(f, "series has negative valuation"),
            HeckeError::WrongParity => write!(f, "weight parity does not match the operator"),
            HeckeError::InsufficientReach { needed, have } => {
                write!(f, "insufficient reach: need {needed}/24, have {have}/24")
            }
            HeckeError::NotSquarefree(t) => write!(f, "t = {t} is not squarefree"),
            HeckeError::ModulusNotDivisible { check, ambient } => {
                write!(f, "check modulus {check} does not divide {ambient}")
            }
            HeckeError::BadExponent => write!(f, "exponent parameter out of range"),
            HeckeError::CongruenceSelfCheck { ell, e } => {
                write!(f, "unit form power not congruent to 1 mod {ell}^{e}")
            }
            HeckeError::EvenModulus(m) => write!(f, "modulus {m} must be odd"),
        }
    }
}

impl core::error::Error for HeckeError {}

impl From<QSeriesError> for HeckeError {
    fn from(e: QSeriesError) -> Self {
        HeckeError::Series(e)
    }
}

/// Weight, level, and real nebentypus for operator bookkeeping.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeckeContext {
    weight_num: i64,
    level: u64,
    char_disc: i64,
}

impl HeckeContext {
    /// Any weight carried as twice its value; odd weight_num (half-integral)
    /// requires 4 | N. Operators themselves insist on k >= 1, so weakly
    /// holomorphic weights like -1/2 are representable for bookkeeping.
    pub fn from_weight_num(weight_num: i64, level: u64, char_disc: i64) -> Result<Self, HeckeError> {
        if level == 0 || (weight_num % 2 != 0 && level % 4 != 0) {
            return Err(HeckeError::BadLevel(level));
        }
        Ok(HeckeContext {
            weight_num,
            level,
            char_disc,
        })
    }

    /// Integral weight k >= 1 with nebentypus (D | .).
    pub fn integral(k: u32, level: u64, char_disc: i64) -> Result<Self, HeckeError> {
        if k == 0 {
            return Err(HeckeError::BadWeight);
        }
        HeckeContext::from_weight_num(2 * k as i64, level, char_disc)
    }

    /// Half-integral weight k + 1/2 with k >= 1; requires 4 | N.
    pub fn half_integral(k: u32, level: u64, char_disc: i64) -> Result<Self, HeckeError> {
        if k == 0 {
            return Err(HeckeError::BadWeight);
        }
        HeckeContext::from_weight_num(2 * k as i64 + 1, level, char_disc)
    }

    pub fn is_half_integral(&self) -> bool {
        self.weight_num & 1 == 1
    }

    /// The integer k with weight k (integral) or k + 1/2 (half-integral).
    /// Negative for weakly holomorphic weights below 1/2.
    pub fn k(&self) -> i64 {
        self.weight_num.div_euclid(2)
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn char_disc(&self) -> i64 {
        self.char_disc
    }

    /// chi(n) in {-1, 0, 1}: zero on gcd(n, N) > 1, else the Kronecker
    /// symbol (D | n).
    pub fn chi(&self, n: i64) -> i32 {
        if gcd_i64(n, self.level as i64) != 1 {
            return 0;
        }
        kronecker(self.char_disc, n)
    }

    fn chi_residue(&self, n: i64, m: u64) -> u64 {
        sign_residue(self.chi(n), m)
    }

    /// Context of the Shimura image: weight 2k on level N/2 with the
    /// squared character (D | n)^2 = (D^2 | n), which still vanishes on
    /// gcd(D, n) > 1.
    pub fn shimura_image(&self) -> Result<Self, HeckeError> {
        if !self.is_half_integral() {
            return Err(HeckeError::WrongParity);
        }
        HeckeContext::from_weight_num(
            2 * (self.weight_num - 1),
            self.level / 2,
            self.char_disc * self.char_disc,
        )
    }

    /// Context after multiplying by the ell-power of the unit-congruent
    /// form: weight grows by its weight times ell^beta, level by ell^2.
    pub fn after_unit_form_power(&self, ell: u64, beta: u32) -> Result<Self, HeckeError> {
        let eq = EtaQuotient::unit_congruent_form(ell).map_err(HeckeError::Series)?;
        let power = (ell as i64)
            .checked_pow(beta)
            .ok_or(HeckeError::BadExponent)?;
        let added = eq
            .weight_times_two()
            .checked_mul(power)
            .ok_or(HeckeError::BadExponent)?;
        Ok(HeckeContext {
            weight_num: self.weight_num + added,
            level: self.level * ell * ell,
            char_disc: self.char_disc,
        })
    }
}

fn sign_residue(sign: i32, m: u64) -> u64 {
    match sign {
        0 => 0,
        1 => 1 % m,
        _ => (m - 1) % m,
    }
}

/// Output length bookkeeping shared by both operators: the number of valid
/// output coefficients when each one consumes input up to exponent scale*n.
fn output_count(f: &QSeries, scale: i64) -> i64 {
    let reach = f.reach_num();
    if reach <= 0 {
        return 0;
    }
    (reach + 24 * scale - 1).div_euclid(24 * scale)
}

fn require_operand(f: &QSeries, ctx: &HeckeContext, half: bool) -> Result<(), HeckeError> {
    if ctx.is_half_integral() != half {
        return Err(HeckeError::WrongParity);
    }
    if !f.has_integer_exponents() {
        return Err(HeckeError::Series(QSeriesError::NonIntegerExponents));
    }
    if !f.is_zero() && f.offset_num() < 0 {
        return Err(HeckeError::NegativeValuation);
    }
    Ok(())
}

/// T_p on integral weight k: coefficient rule a(pn) + chi(p) p^{k-1} a(n/p),
/// with a(n/p) read as zero when p does not divide n.
pub fn hecke_integral(f: &QSeries, ctx: &HeckeContext, p: u64) -> Result<QSeries, HeckeError> {
    require_operand(f, ctx, false)?;
    if ctx.k() < 1 {
        return Err(HeckeError::BadWeight);
    }
    if !is_prime(p) {
        return Err(HeckeError::BadPrime(p));
    }
    if ctx.level() % p == 0 {
        return Err(HeckeError::PrimeDividesLevel {
            p,
            level: ctx.level(),
        });
    }
    let m = f.modulus();
    if f.is_zero() {
        return Ok(QSeries::zero(m, 24 * output_count(f, p as i64))?);
    }
    let count = output_count(f, p as i64);
    if count <= 0 {
        return Err(HeckeError::InsufficientReach {
            needed: 24 * p as i64,
            have: f.reach_num(),
        });
    }
    let chi_p = ctx.chi_residue(p as i64, m);
    let p_pow = pow_mod(p, ctx.k() as u64 - 1, m);
    let scale = chi_p * p_pow % m;
    debug_assert!(ctx.k() >= 1);
    let mut out = Vec::with_capacity(count as usize);
    for n in 0..count {
        let mut b = f.coeff_q(p as i64 * n).expect("within reach");
        if n % p as i64 == 0 {
            let a_down = f.coeff_q(n / p as i64).expect("within reach");
            b = (b + scale * a_down) % m;
        }
        out.push(b);
    }
    Ok(QSeries::from_parts(m, 0, 24, out)?)
}

/// T_{p^2} on half-integral weight k + 1/2 for odd p:
/// a(p^2 n) + chi(p) ((-1)^k n | p) p^{k-1} a(n) + chi(p)^2 p^{2k-1} a(n/p^2).
pub fn hecke_half(f: &QSeries, ctx: &HeckeContext, p: u64) -> Result<QSeries, HeckeError> {
    require_operand(f, ctx, true)?;
    if ctx.k() < 1 {
        // Weight 1/2 would need p^{-1}; rejected explicitly.
        return Err(HeckeError::BadWeight);
    }
    if p < 3 || p % 2 == 0 || !is_prime(p) {
        return Err(HeckeError::BadPrime(p));
    }
    let m = f.modulus();
    let p2 = (p * p) as i64;
    if f.is_zero() {
        return Ok(QSeries::zero(m, 24 * output_count(f, p2))?);
    }
    let count = output_count(f, p2);
    if count <= 0 {
        return Err(HeckeError::InsufficientReach {
            needed: 24 * p2,
            have: f.reach_num(),
        });
    }
    let k = ctx.k();
    let chi_p = ctx.chi_residue(p as i64, m);
    let chi_p2 = chi_p * chi_p % m;
    let p_k1 = pow_mod(p, k as u64 - 1, m);
    let p_2k1 = pow_mod(p, 2 * k as u64 - 1, m);
    let mid_base = chi_p * p_k1 % m;
    let last = chi_p2 * p_2k1 % m;
    let mut out = Vec::with_capacity(count as usize);
    for n in 0..count {
        let mut b = f.coeff_q(p2 * n).expect("within reach");
        let eps_n = if k & 1 == 1 { -n } else { n };
        let kron = sign_residue(kronecker(eps_n, p as i64), m);
        let a_n = f.coeff_q(n).expect("within reach");
        b = (b + mid_base * kron % m * a_n) % m;
        if n % p2 == 0 {
            let a_down = f.coeff_q(n / p2).expect("within reach");
            b = (b + last * a_down) % m;
        }
        out.push(b);
    }
    Ok(QSeries::from_parts(m, 0, 24, out)?)
}

/// Shimura lift at squarefree t, unrolled as the Dirichlet product
/// A_t(n) = sum_{d | n} chi(d) ((-1)^k t | d) d^{k-1} a(t (n/d)^2).
pub fn shimura_lift(f: &QSeries, ctx: &HeckeContext, t: u64) -> Result<QSeries, HeckeError> {
    require_operand(f, ctx, true)?;
    if t == 0 || squarefree_split(t).root != 1 {
        return Err(HeckeError::NotSquarefree(t));
    }
    let m = f.modulus();
    if f.is_zero() {
        return Ok(QSeries::zero(m, 24)?);
    }
    // a(x) is known for x < known_q; need t n^2 < known_q.
    let known_q = (f.reach_num() + 23).div_euclid(24);
    let mut n_out = 0i64;
    while t as i64 * (n_out + 1) * (n_out + 1) < known_q {
        n_out += 1;
    }
    if n_out == 0 {
        return Err(HeckeError::InsufficientReach {
            needed: 24 * t as i64,
            have: f.reach_num(),
        });
    }
    let k = ctx.k();
    let eps_t = if k & 1 == 1 { -(t as i64) } else { t as i64 };
    let mut out = Vec::with_capacity(n_out as usize);
    for n in 1..=n_out {
        let mut acc = 0u64;
        for d in 1..=n {
            if n % d != 0 {
                continue;
            }
            let chi_d = ctx.chi_residue(d, m);
            if chi_d == 0 {
                continue;
            }
            let kron_d = sign_residue(kronecker(eps_t, d), m);
            if kron_d == 0 {
                continue;
            }
            let d_pow = pow_mod(d as u64, k as u64 - 1, m);
            let q = n / d;
            let a = f.coeff_q(t as i64 * q * q).expect("within reach");
            acc = (acc + chi_d * kron_d % m * d_pow % m * a) % m;
        }
        out.push(acc);
    }
    Ok(QSeries::from_parts(m, 24, 24, out)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HeckeVerdict {
    Consistent,
    Violated,
}

/// Outcome of an eigen-congruence check at finite truncation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeckeReport {
    pub p: u64,
    pub lambda: u64,
    pub modulus: u64,
    pub checked_to: i64,
    pub verdict: HeckeVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violation_index: Option<i64>,
}

/// Checks f|T = lambda f (mod check_modulus) coefficient-wise through
/// q^n_check, dispatching on the context's weight parity. A `Consistent`
/// verdict is a necessary condition at finite truncation, never a proof.
pub fn eigencongruence_check(
    f: &QSeries,
    ctx: &HeckeContext,
    p: u64,
    lambda: u64,
    check_modulus: u64,
    n_check: i64,
) -> Result<HeckeReport, HeckeError> {
    if check_modulus < 2 || f.modulus() % check_modulus != 0 {
        return Err(HeckeError::ModulusNotDivisible {
            check: check_modulus,
            ambient: f.modulus(),
        });
    }
    let g = if ctx.is_half_integral() {
        hecke_half(f, ctx, p)?
    } else {
        hecke_integral(f, ctx, p)?
    };
    if !f.is_zero() && g.reach_num() < 24 * (n_check + 1) {
        return Err(HeckeError::InsufficientReach {
            needed: 24 * (n_check + 1),
            have: g.reach_num(),
        });
    }
    let cm = check_modulus;
    let mut verdict = HeckeVerdict::Consistent;
    let mut violation_index = None;
    for n in 0..=n_check {
        let lhs = g.coeff_q(n).unwrap_or(0) % cm;
        let rhs = lambda % cm * (f.coeff_q(n).unwrap_or(0) % cm) % cm;
        if lhs != rhs {
            verdict = HeckeVerdict::Violated;
            violation_index = Some(n);
            break;
        }
    }
    Ok(HeckeReport {
        p,
        lambda,
        modulus: cm,
        checked_to: n_check,
        verdict,
        violation_index,
    })
}

/// Expansion of the unit-congruent form raised to ell^beta_exp, checked to
/// be congruent to 1 mod ell^e over its whole window before use.
fn unit_form_power(
    ell: u64,
    e: u32,
    beta_exp: u32,
    window_q: usize,
    modulus: u64,
) -> Result<QSeries, HeckeError> {
    let ell_pow_e = ell.checked_pow(e).ok_or(HeckeError::BadExponent)?;
    if modulus % ell_pow_e != 0 {
        return Err(HeckeError::ModulusNotDivisible {
            check: ell_pow_e,
            ambient: modulus,
        });
    }
    let eq = EtaQuotient::unit_congruent_form(ell)?;
    let base = eta_expand(&eq, window_q, modulus)?;
    let exponent = ell.checked_pow(beta_exp).ok_or(HeckeError::BadExponent)?;
    let power = base.pow(exponent)?;
    // Empirical congruence check at the working truncation.
    let ok = power.offset_num() == 0
        && power
            .coeffs()
            .iter()
            .enumerate()
            .all(|(i, &c)| c % ell_pow_e == u64::from(i == 0) % ell_pow_e);
    if !ok {
        return Err(HeckeError::CongruenceSelfCheck { ell, e });
    }
    Ok(power)
}

/// (f tensor chi_ell^triv) times the ell^{e-1} power of the unit-congruent
/// form. The result is congruent mod ell^e to the sum of a(n) q^n over
/// indices prime to ell, and that congruence is testable coefficient-wise.
pub fn build_f_ell_holomorphic(
    f: &QSeries,
    level: u64,
    ell: u64,
    e: u32,
) -> Result<QSeries, HeckeError> {
    if ell < 3 || ell % 2 == 0 || !is_prime(ell) {
        return Err(HeckeError::BadPrime(ell));
    }
    if level % ell == 0 {
        return Err(HeckeError::PrimeDividesLevel { p: ell, level });
    }
    if e == 0 || e > 16 {
        return Err(HeckeError::BadExponent);
    }
    let sliced = twist(f, TwistKind::Trivial, ell)?;
    let window_q = (f.window() / 24).max(1) as usize;
    let power = unit_form_power(ell, e, e - 1, window_q, f.modulus())?;
    Ok(sliced.mul(&power)?)
}

/// Treneer's combination: half the difference of the trivial and Kronecker
/// twists (signed by (r1 | ell)) times the ell^beta power of the
/// unit-congruent form. Congruent mod ell^e to the slice of a(n) q^n over
/// indices with (r1 n | ell) = -1.
pub fn build_f_ell_treneer(
    f: &QSeries,
    level: u64,
    ell: u64,
    e: u32,
    r1: i64,
    beta: Option<u32>,
) -> Result<QSeries, HeckeError> {
    if ell < 3 || ell % 2 == 0 || !is_prime(ell) {
        return Err(HeckeError::BadPrime(ell));
    }
    if level % ell == 0 {
        return Err(HeckeError::PrimeDividesLevel { p: ell, level });
    }
    if r1 == 0 || squarefree_split(r1.unsigned_abs()).root != 1 {
        return Err(HeckeError::NotSquarefree(r1.unsigned_abs()));
    }
    if r1.unsigned_abs() % ell == 0 {
        return Err(HeckeError::PrimeDividesLevel {
            p: ell,
            level: r1.unsigned_abs(),
        });
    }
    if e == 0 || e > 16 {
        return Err(HeckeError::BadExponent);
    }
    let beta_exp = beta.unwrap_or(e - 1);
    if beta_exp < e - 1 {
        return Err(HeckeError::BadExponent);
    }
    let m = f.modulus();
    if m % 2 == 0 {
        return Err(HeckeError::EvenModulus(m));
    }
    let half = crate::numtheory::inv_mod(2, m).expect("odd modulus");
    let triv = twist(f, TwistKind::Trivial, ell)?;
    let kron = twist(f, TwistKind::Kronecker, ell)?;
    let combo = if kronecker(r1, ell as i64) == 1 {
        triv.sub(&kron)?
    } else {
        triv.add(&kron)?
    }
    .scale(half);
    let window_q = (f.window() / 24).max(1) as usize;
    let power = unit_form_power(ell, e, beta_exp, window_q, m)?;
    Ok(combo.mul(&power)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numtheory::inv_mod;
    use crate::qseries::euler_product;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn series_from(coeffs: Vec<u64>, m: u64) -> QSeries {
        QSeries::from_parts(m, 0, 24, coeffs).unwrap()
    }

    #[test]
    fn context_validation() {
        assert!(HeckeContext::integral(0, 1, 1).is_err());
        assert!(HeckeContext::half_integral(1, 6, 1).is_err());
        let ctx = HeckeContext::half_integral(2, 576, 12).unwrap();
        assert!(ctx.is_half_integral());
        assert_eq!(ctx.k(), 2);
        let sh = ctx.shimura_image().unwrap();
        assert!(!sh.is_half_integral());
        assert_eq!(sh.k(), 4);
        assert_eq!(sh.level(), 288);
    }

    #[test]
    fn chi_convention() {
        let ctx = HeckeContext::integral(2, 12, 1).unwrap();
        assert_eq!(ctx.chi(5), 1);
        assert_eq!(ctx.chi(3), 0); // gcd(3, 12) > 1
        assert_eq!(ctx.chi(4), 0);
        let ctx = HeckeContext::half_integral(1, 576, 12).unwrap();
        assert_eq!(ctx.chi(5), kronecker(12, 5));
        assert_eq!(ctx.chi(7), kronecker(12, 7));
    }

    #[test]
    fn hecke_integral_synthetic_example() {
        // a(n) = n, k = 1, trivial chi, p = 3: output at 1 is a(3) = 3.
        let m = 1009u64;
        let f = series_from((0..40).collect(), m);
        let ctx = HeckeContext::integral(1, 4, 1).unwrap();
        let g = hecke_integral(&f, &ctx, 3).unwrap();
        assert_eq!(g.coeff_q(1), Some(3));
        // At n = 3: a(9) + 3^0 a(1) = 10.
        assert_eq!(g.coeff_q(3), Some(10));
    }

    #[test]
    fn hecke_integral_zero_and_errors() {
        let m = 13u64;
        let ctx = HeckeContext::integral(2, 4, 1).unwrap();
        let z = QSeries::zero(m, 240).unwrap();
        assert!(hecke_integral(&z, &ctx, 3).unwrap().is_zero());
        let f = series_from(vec![1, 2, 3], m);
        assert!(matches!(
            hecke_integral(&f, &ctx, 2),
            Err(HeckeError::PrimeDividesLevel { .. })
        ));
        assert!(matches!(
            hecke_integral(&f, &ctx, 15),
            Err(HeckeError::BadPrime(15))
        ));
    }

    #[test]
    fn delta_is_an_eigenform_for_t2() {
        // Delta = eta(z)^24, weight 12, level 1: T_2 eigenvalue tau(2) = -24.
        let m = 7u64;
        let delta = eta_expand(&EtaQuotient::delta(), 101, m).unwrap();
        let ctx = HeckeContext::integral(12, 1, 1).unwrap();
        let report =
            eigencongruence_check(&delta, &ctx, 2, (m as i64 - 24).rem_euclid(m as i64) as u64, m, 50)
                .unwrap();
        assert_eq!(report.verdict, HeckeVerdict::Consistent, "{report:?}");
        // A wrong eigenvalue is caught at the first index where tau differs.
        let bad = eigencongruence_check(&delta, &ctx, 2, 1, m, 50).unwrap();
        assert_eq!(bad.verdict, HeckeVerdict::Violated);
        assert!(bad.violation_index.is_some());
    }

    #[test]
    fn hecke_half_synthetic_example() {
        // a(n) = n, k = 1, trivial chi, p = 3: output at 1 is
        // a(9) + (-1 | 3) a(1) = 9 - 1 = 8.
        let m = 10007u64;
        let f = series_from((0..200).collect(), m);
        let ctx = HeckeContext::half_integral(1, 4, 1).unwrap();
        let g = hecke_half(&f, &ctx, 3).unwrap();
        assert_eq!(g.coeff_q(1), Some(8));
        // Where the middle Kronecker factor vanishes and p^2 does not divide
        // n, only a(p^2 n) survives.
        assert_eq!(g.coeff_q(3), Some(27));
        assert!(matches!(
            hecke_half(&f, &ctx, 2),
            Err(HeckeError::BadPrime(2))
        ));
        let z = QSeries::zero(m, 24 * 100).unwrap();
        assert!(hecke_half(&z, &ctx, 3).unwrap().is_zero());
    }

    #[test]
    fn hecke_operators_match_naive_rederivation() {
        let m = 3 * 5 * 7 * 11 * 13u64;
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let len = 1800usize;
        let coeffs: Vec<u64> = (0..len).map(|_| rng.random_range(0..m)).collect();
        let f = series_from(coeffs.clone(), m);
        for p in [3u64, 5, 7] {
            let ctx = HeckeContext::integral(3, 4, -4).unwrap();
            let g = hecke_integral(&f, &ctx, p).unwrap();
            let k = 3u32;
            for n in 0..(len as i64 / p as i64).min(200) {
                let a = |x: i64| -> u64 {
                    if x >= 0 && (x as usize) < len {
                        coeffs[x as usize]
                    } else {
                        0
                    }
                };
                let mut expect = a(p as i64 * n);
                if n % p as i64 == 0 {
                    let chi = sign_residue(kronecker(-4, p as i64), m);
                    expect =
                        (expect + chi * pow_mod(p, k as u64 - 1, m) % m * a(n / p as i64)) % m;
                }
                assert_eq!(g.coeff_q(n), Some(expect), "integral p = {p}, n = {n}");
            }

            let ctx = HeckeContext::half_integral(2, 4, -4).unwrap();
            let g = hecke_half(&f, &ctx, p).unwrap();
            let k = 2u32;
            let p2 = (p * p) as i64;
            for n in 0..(len as i64 / p2).min(200) {
                let a = |x: i64| -> u64 {
                    if x >= 0 && (x as usize) < len {
                        coeffs[x as usize]
                    } else {
                        0
                    }
                };
                let chi = sign_residue(kronecker(-4, p as i64), m);
                let mut expect = a(p2 * n);
                let eps_n = if k & 1 == 1 { -n } else { n };
                expect = (expect
                    + chi * sign_residue(kronecker(eps_n, p as i64), m) % m
                        * pow_mod(p, k as u64 - 1, m)
                        % m
                        * a(n))
                    % m;
                if n % p2 == 0 {
                    expect = (expect + chi * chi % m * pow_mod(p, 2 * k as u64 - 1, m) % m
                        * a(n / p2))
                        % m;
                }
                assert_eq!(g.coeff_q(n), Some(expect), "half p = {p}, n = {n}");
            }
        }
    }

    #[test]
    fn hecke_operators_are_linear() {
        let m = 10007u64;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let ctx_i = HeckeContext::integral(2, 4, 1).unwrap();
        let ctx_h = HeckeContext::half_integral(2, 4, 1).unwrap();
        for _ in 0..10 {
            let f = series_from((0..500).map(|_| rng.random_range(0..m)).collect(), m);
            let g = series_from((0..500).map(|_| rng.random_range(0..m)).collect(), m);
            let a = rng.random_range(0..m);
            let b = rng.random_range(0..m);
            let combo = f.scale(a).add(&g.scale(b)).unwrap();
            for p in [3u64, 5] {
                let lhs = hecke_integral(&combo, &ctx_i, p).unwrap();
                let rhs = hecke_integral(&f, &ctx_i, p)
                    .unwrap()
                    .scale(a)
                    .add(&hecke_integral(&g, &ctx_i, p).unwrap().scale(b))
                    .unwrap();
                let upto = lhs.reach_num().min(rhs.reach_num()) / 24;
                for n in 0..upto {
                    assert_eq!(lhs.coeff_q(n), rhs.coeff_q(n), "integral linearity");
                }
                let lhs = hecke_half(&combo, &ctx_h, p).unwrap();
                let rhs = hecke_half(&f, &ctx_h, p)
                    .unwrap()
                    .scale(a)
                    .add(&hecke_half(&g, &ctx_h, p).unwrap().scale(b))
                    .unwrap();
                let upto = lhs.reach_num().min(rhs.reach_num()) / 24;
                for n in 0..upto {
                    assert_eq!(lhs.coeff_q(n), rhs.coeff_q(n), "half linearity");
                }
            }
        }
    }

    #[test]
    fn shimura_lift_first_coefficient() {
        let m = 10007u64;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let coeffs: Vec<u64> = (0..700).map(|_| rng.random_range(0..m)).collect();
        let f = series_from(coeffs.clone(), m);
        let ctx = HeckeContext::half_integral(2, 4, 1).unwrap();
        for t in [1u64, 2, 3, 5] {
            let lift = shimura_lift(&f, &ctx, t).unwrap();
            assert_eq!(lift.coeff_q(1), Some(coeffs[t as usize]), "A_t(1) = a(t)");
            // A_t(p) for prime p = 3: a(9t) + chi(3) ((-1)^k t | 3) 3^{k-1} a(t).
            let k = 2u32;
            let chi3 = ctx.chi_residue(3, m);
            let kron3 = sign_residue(kronecker(t as i64, 3), m);
            let expect = (coeffs[9 * t as usize]
                + chi3 * kron3 % m * pow_mod(3, k as u64 - 1, m) % m * coeffs[t as usize])
                % m;
            assert_eq!(lift.coeff_q(3), Some(expect), "A_t(3), t = {t}");
        }
        assert!(matches!(
            shimura_lift(&f, &ctx, 4),
            Err(HeckeError::NotSquarefree(4))
        ));
        let z = QSeries::zero(m, 240).unwrap();
        assert!(shimura_lift(&z, &ctx, 1).unwrap().is_zero());
    }

    #[test]
    fn shimura_commutes_with_hecke() {
        let mut rng = ChaCha8Rng::seed_from_u64(31337);
        for case in 0..20 {
            let m = [5u64, 91, 1155, 9973][case % 4];
            let t = [1u64, 2, 3, 5][case % 4];
            let p = [3u64, 5, 7][case % 3];
            let n_out = 12i64;
            let len = (p * p) as usize * (t as usize * (n_out as usize + 1).pow(2) + 1);
            let k = 2 + (case % 3) as u32;
            let disc = [1i64, -4, 12][case % 3];
            let ctx = HeckeContext::half_integral(k, 4, disc).unwrap();
            let f = series_from((0..len).map(|_| rng.random_range(0..m)).collect(), m);
            let lhs = shimura_lift(&hecke_half(&f, &ctx, p).unwrap(), &ctx, t).unwrap();
            let sh = shimura_lift(&f, &ctx, t).unwrap();
            let rhs = hecke_integral(&sh, &ctx.shimura_image().unwrap(), p).unwrap();
            for n in 1..=n_out {
                assert_eq!(
                    lhs.coeff_q(n),
                    rhs.coeff_q(n),
                    "case {case}: m={m} t={t} p={p} n={n}"
                );
            }
        }
    }

    #[test]
    fn eigencongruence_reports_minimal_violation() {
        let m = 25u64;
        let ctx = HeckeContext::half_integral(2, 4, 1).unwrap();
        // A stream that is eigen except at one planted index.
        let p = 3u64;
        let len = 400usize;
        let mut coeffs = vec![0u64; len];
        // All zero is eigen for any lambda; plant a single defect.
        coeffs[9 * 7] = 1;
        let f = series_from(coeffs, m);
        let report = eigencongruence_check(&f, &ctx, p, 2, 25, 30).unwrap();
        assert_eq!(report.verdict, HeckeVerdict::Violated);
        assert_eq!(report.violation_index, Some(7));
        // The zero stream is consistent for any lambda.
        let z = QSeries::zero(m, 24 * 400).unwrap();
        let report = eigencongruence_check(&z, &ctx, p, 2, 25, 30).unwrap();
        assert_eq!(report.verdict, HeckeVerdict::Consistent);
    }

    #[test]
    fn consistent_eigen_implies_first_recurrence_step() {
        // Arrange chi(p) = 1, p = 1 mod 4 and mod ell, (n0 | p) = -1; then
        // consistency with lambda = 2 forces a(n0 p^2) = 3 a(n0) mod ell.
        let ell = 5u64;
        let p = 41u64; // 41 = 1 mod 40
        let n0 = 3i64; // (3 | 41) = -1
        assert_eq!(kronecker(n0, p as i64), -1);
        let ctx = HeckeContext::half_integral(2, 4, 1).unwrap();
        let len = (p * p) as usize * 4 + 1;
        let f = crate::newman::synthetic_eigen_stream(ell, &ctx, p, 2, len, 0xfeed, &[(n0 as u64, 1)])
            .unwrap();
        let report = eigencongruence_check(&f, &ctx, p, 2, ell, 3).unwrap();
        assert_eq!(report.verdict, HeckeVerdict::Consistent);
        let a_n0 = f.coeff_q(n0).unwrap();
        let a_up = f.coeff_q(n0 * (p * p) as i64).unwrap();
        assert_eq!(a_up % ell, 3 * a_n0 % ell);
    }

    #[test]
    fn f_ell_holomorphic_congruence() {
        // Delta mod ell^e: the construction keeps exactly the coefficients
        // with ell not dividing n, mod ell^e.
        for (ell, e) in [(3u64, 1u32), (5, 1), (5, 2), (7, 1)] {
            let me = ell.pow(e);
            let delta = eta_expand(&EtaQuotient::delta(), 120, me).unwrap();
            let built = build_f_ell_holomorphic(&delta, 1, ell, e).unwrap();
            for n in 0..=100i64 {
                let expected = if n % ell as i64 == 0 {
                    0
                } else {
                    delta.coeff_q(n).unwrap()
                };
                assert_eq!(
                    built.coeff_q(n).map(|c| c % me),
                    Some(expected),
                    "ell = {ell}, e = {e}, n = {n}"
                );
            }
        }
        let delta = eta_expand(&EtaQuotient::delta(), 50, 25).unwrap();
        assert!(build_f_ell_holomorphic(&delta, 10, 5, 1).is_err());
        assert!(build_f_ell_holomorphic(&delta, 1, 4, 1).is_err());
    }

    #[test]
    fn f_ell_treneer_congruence_on_partition_stream() {
        // 1/eta(24z) with r1 = -1: survivors satisfy (-n | ell) = -1,
        // including the killed pole coefficient at n = -1.
        let (ell, e) = (5u64, 2u32);
        let me = ell.pow(e);
        let f = eta_expand(&EtaQuotient::partition_stream(), 40, me).unwrap();
        let built = build_f_ell_treneer(&f, 576, ell, e, -1, None).unwrap();
        assert!(built.offset_num() >= 0, "pole must be sliced away");
        let upto = built.reach_num().min(f.reach_num());
        for e_num in (-24..upto).step_by(24) {
            let n = e_num / 24;
            let keep = kronecker(-n, ell as i64) == -1;
            let expected = if keep {
                f.coeff_at(e_num).unwrap() % me
            } else {
                0
            };
            assert_eq!(
                built.coeff_at(e_num).map(|c| c % me),
                Some(expected),
                "n = {n}"
            );
        }
        // Indices with (r1 n | ell) = +1 vanish mod ell^e by construction.
        assert!(matches!(
            build_f_ell_treneer(&f, 576, 5, 1, 5, None),
            Err(HeckeError::PrimeDividesLevel { .. })
        ));
        assert!(matches!(
            build_f_ell_treneer(&f, 576, 5, 1, 12, None),
            Err(HeckeError::NotSquarefree(12))
        ));
    }

    #[test]
    fn treneer_reduction_mod_ell_drops_the_unit_factor() {
        let ell = 7u64;
        let f = eta_expand(&EtaQuotient::partition_stream(), 30, ell).unwrap();
        let built = build_f_ell_treneer(&f, 576, ell, 1, -1, None).unwrap();
        // Mod ell the unit form power is 1, so the result equals the bare
        // twist combination.
        let triv = twist(&f, TwistKind::Trivial, ell).unwrap();
        let kr = twist(&f, TwistKind::Kronecker, ell).unwrap();
        let half = inv_mod(2, ell).unwrap();
        let combo = triv.add(&kr).unwrap().scale(half); // (-1 | 7) = -1
        let upto = built.reach_num().min(combo.reach_num());
        for e_num in (-24..upto).step_by(24) {
            assert_eq!(built.coeff_at(e_num), combo.coeff_at(e_num));
        }
    }
}
