//! Cusp-expansion bookkeeping for eta quotients: leading exponents at cusps
//! by denominator class, pole-class summaries in Q^x / squares, the valence
//! sanity check, and the quadratic Gauss-sum vanishing criterion for the
//! two-color theta factor.
//!
//! Orders follow the standard eta-quotient cusp formula: at a cusp with
//! denominator c, eta(delta z) leads with exponent gcd(c, delta)^2 /
//! (24 delta) in q = e^{2 pi i z}, and the local-variable order rescales
//! that by the cusp width N / gcd(c^2, N). Two pinned instances serve as
//! ground truth for the normalization: eta(z)^24 leads with exponent 1 at
//! the sole level-1 cusp, and eta(24z)^24 on level 576 leads with
//! gcd(c, 24)^2 / 24.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::numtheory::{euler_phi, factorize, gcd_u64, inv_mod, squarefree_split};
use crate::qseries::EtaQuotient;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CuspError {
    /// Cusp denominators must be positive divisors of the level.
    BadDenominator { c: u64, level: u64 },
    /// Cusps a/c need gcd(a, c) = 1.
    NotReduced { a: i64, c: u64 },
    /// The Gauss sum formula needs c >= 1; the cusp at infinity is the
    /// identity expansion, not a sum.
    CuspAtInfinity,
    /// Not a valid SL2(Z) matrix.
    BadMatrix,
}

impl fmt::Display for CuspError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CuspError::BadDenominator { c, level } => {
                write!(f, "denominator {c} does not divide level {level}")
            }
            CuspError::NotReduced { a, c } => write!(f, "cusp {a}/{c} is not reduced"),
            CuspError::CuspAtInfinity => {
                write!(f, "c = 0 is the cusp at infinity; use the series offset")
            }
            CuspError::BadMatrix => write!(f, "matrix is not in SL2(Z)"),
        }
    }
}

impl core::error::Error for CuspError {}

/// Width of the cusp class with denominator c on Gamma_0(N).
pub fn cusp_width(level: u64, c: u64) -> u64 {
    level / gcd_u64(c * c, level)
}

/// Number of inequivalent cusps with denominator c on Gamma_0(N).
pub fn cusp_count(level: u64, c: u64) -> u64 {
    euler_phi(gcd_u64(c, level / c))
}

/// Leading exponent of the quotient's expansion at denominator class c,
/// measured in q = e^{2 pi i z}: sum of r gcd(c, delta)^2 / (24 delta).
pub fn leading_exponent(eq: &EtaQuotient, c: u64) -> Ratio<i64> {
    let mut total = Ratio::new(0, 1);
    for &(delta, r) in eq.terms() {
        let g = gcd_u64(c, delta) as i64;
        total += Ratio::new(r * g * g, 24 * delta as i64);
    }
    total
}

/// Order of vanishing at the cusp a/c in the local variable q^{1/width}:
/// the leading q-exponent times the cusp width. Exact rational.
pub fn eta_cusp_order(eq: &EtaQuotient, a: i64, c: u64) -> Result<Ratio<i64>, CuspError> {
    let level = eq.level();
    if c == 0 || level % c != 0 {
        return Err(CuspError::BadDenominator { c, level });
    }
    if crate::numtheory::gcd_i64(a, c as i64) != 1 {
        return Err(CuspError::NotReduced { a, c });
    }
    Ok(leading_exponent(eq, c) * Ratio::new(cusp_width(level, c) as i64, 1))
}

/// Expansion metadata at one denominator class: width, leading exponent,
/// and the period divisor w with expansion exponents in (1/w) Z.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CuspExpansionMeta {
    pub c: u64,
    pub width: u64,
    pub leading_exponent: Ratio<i64>,
    pub period: u64,
}

fn ratio_gcd(a: Ratio<i64>, b: Ratio<i64>) -> Ratio<i64> {
    // gcd(p/q, r/s) = gcd(p s, r q) / (q s), on non-negative inputs.
    let num = gcd_u64(
        (a.numer() * b.denom()).unsigned_abs(),
        (b.numer() * a.denom()).unsigned_abs(),
    );
    Ratio::new(num as i64, a.denom() * b.denom())
}

/// Metadata for the expansion at denominator class c | N.
pub fn cusp_meta(eq: &EtaQuotient, c: u64) -> Result<CuspExpansionMeta, CuspError> {
    let level = eq.level();
    if c == 0 || level % c != 0 {
        return Err(CuspError::BadDenominator { c, level });
    }
    let lead = leading_exponent(eq, c);
    // Exponent lattice: each factor steps by gcd(c, delta)^2 / delta.
    let mut step: Option<Ratio<i64>> = None;
    for &(delta, _) in eq.terms() {
        let g = gcd_u64(c, delta) as i64;
        let s = Ratio::new(g * g, delta as i64);
        step = Some(match step {
            None => s,
            Some(t) => ratio_gcd(t, s),
        });
    }
    let period = match step {
        None => 1,
        Some(s) => num_integer::lcm(*lead.denom(), *s.denom()) as u64,
    };
    Ok(CuspExpansionMeta {
        c,
        width: cusp_width(level, c),
        leading_exponent: lead,
        period,
    })
}

fn divisors(n: u64) -> Vec<u64> {
    let mut divs = vec![1u64];
    for &(p, e) in factorize(n).factors() {
        let snapshot = divs.clone();
        let mut pk = 1u64;
        for _ in 0..e {
            pk *= p;
            divs.extend(snapshot.iter().map(|d| d * pk));
        }
    }
    divs.sort_unstable();
    divs
}

/// Squarefree-class representative of a nonzero rational, sign kept:
/// the class of num/den in Q^x modulo squares is the class of num * den.
pub fn squarefree_class(x: Ratio<i64>) -> i64 {
    debug_assert!(*x.numer() != 0);
    let magnitude = x.numer().unsigned_abs() * x.denom().unsigned_abs();
    let rep = squarefree_split(magnitude).squarefree as i64;
    if *x.numer() < 0 {
        -rep
    } else {
        rep
    }
}

/// Pole classes of an eta quotient: negative leading exponents over all
/// denominator classes c | N, reduced into Q^x modulo squares.
///
/// Sampling by denominator class is exact for eta quotients, whose leading
/// exponents depend only on c.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OmegaSummary {
    pub level: u64,
    pub poles: Vec<CuspExpansionMeta>,
    pub representatives: Vec<i64>,
    pub s: usize,
}

pub fn omega_set(eq: &EtaQuotient) -> OmegaSummary {
    let level = eq.level();
    let mut poles = Vec::new();
    let mut reps: Vec<i64> = Vec::new();
    for c in divisors(level) {
        let meta = cusp_meta(eq, c).expect("divisor of the level");
        if meta.leading_exponent < Ratio::new(0, 1) {
            reps.push(squarefree_class(meta.leading_exponent));
            poles.push(meta);
        }
    }
    reps.sort_unstable();
    reps.dedup();
    let s = reps.len();
    OmegaSummary {
        level,
        poles,
        representatives: reps,
        s,
    }
}

/// Valence bookkeeping: for a holomorphic eta quotient of weight k on
/// Gamma_0(N), the cusp orders (in local variables, counted over all
/// inequivalent cusps) total k * index / 12.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValenceCheck {
    pub index: u64,
    pub total_order: Ratio<i64>,
    pub expected: Ratio<i64>,
    pub ok: bool,
}

/// Index of Gamma_0(N) in SL2(Z): N times the product of (1 + 1/p).
pub fn gamma0_index(level: u64) -> u64 {
    factorize(level)
        .factors()
        .iter()
        .fold(level, |acc, &(p, _)| acc / p * (p + 1))
}

pub fn valence_check(eq: &EtaQuotient) -> ValenceCheck {
    let level = eq.level();
    let index = gamma0_index(level);
    let mut total = Ratio::new(0, 1);
    for c in divisors(level) {
        let meta = cusp_meta(eq, c).expect("divisor of the level");
        let local_order = meta.leading_exponent * Ratio::new(meta.width as i64, 1);
        total += local_order * Ratio::new(cusp_count(level, c) as i64, 1);
    }
    let expected = Ratio::new(eq.weight_times_two() * index as i64, 24);
    ValenceCheck {
        index,
        total_order: total,
        expected,
        ok: total == expected,
    }
}

/// Pole-class data for the h-colored Frobenius stream q^{-h} CPhi_h(q^24).
///
/// The general bound says every pole exponent is -j/(576h) with j <= 576h^2.
/// For h = 2 and h = 3 the sharper pole families are known in closed form
/// (exponents -gcd(c,24)^2 / D for the listed D), and their squarefree
/// classes collapse to a single representative. The h = 3 families are
/// carried as given data, not re-derived.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrobeniusOmega {
    pub h: u32,
    /// j ranges over positive integers up to this in the -j/(576h) bound.
    pub exponent_bound: u64,
    pub refined_family_denominators: Option<Vec<u64>>,
    pub refined_representatives: Option<Vec<i64>>,
}

pub fn frobenius_omega_bound(h: u32) -> FrobeniusOmega {
    assert!(h >= 2, "the bound applies to h >= 2");
    let families: Option<Vec<u64>> = match h {
        2 => Some(vec![288]),
        3 => Some(vec![192, 1728]),
        _ => None,
    };
    let refined_representatives = families.as_ref().map(|ds| {
        let mut reps: Vec<i64> = ds
            .iter()
            .map(|&d| squarefree_class(Ratio::new(-1, d as i64)))
            .collect();
        reps.sort_unstable();
        reps.dedup();
        reps
    });
    FrobeniusOmega {
        h,
        exponent_bound: 576 * h as u64 * h as u64,
        refined_family_denominators: families,
        refined_representatives,
    }
}

/// A matrix in SL2(Z).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sl2 {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl Sl2 {
    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self, CuspError> {
        if a * d - b * c != 1 {
            return Err(CuspError::BadMatrix);
        }
        Ok(Sl2 { a, b, c, d })
    }
}

/// e(num/den) = exp(2 pi i num/den), with the fraction reduced mod 1 in
/// exact integer arithmetic first.
fn root_of_unity(num: i128, den: i128) -> Complex64 {
    let t = num.rem_euclid(den) as f64 / den as f64;
    let angle = 2.0 * core::f64::consts::PI * t;
    Complex64::new(libm::cos(angle), libm::sin(angle))
}

/// Evaluation of the two-color theta Gauss factor at a matrix with lower
/// left entry c >= 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussEval {
    pub re: f64,
    pub im: f64,
    /// Exact criterion from the final geometric factor: the sum over u of
    /// e(wu / (c,24)) vanishes iff (c,24) does not divide w.
    pub exact_vanishes: bool,
}

impl GaussEval {
    pub fn magnitude(&self) -> f64 {
        libm::sqrt(self.re * self.re + self.im * self.im)
    }
}

/// The factored Gauss sum e(d w^2 / 96c) * sum_v e((24 a v^2 + w v)/c) *
/// sum_u e(w u / (c,24)), evaluated in double precision alongside the exact
/// vanishing flag of the u-factor.
pub fn gauss_phi_h2(rho: &Sl2, w: i64) -> Result<GaussEval, CuspError> {
    if rho.c < 1 {
        return Err(CuspError::CuspAtInfinity);
    }
    let c = rho.c;
    let g = gcd_u64(c as u64, 24) as i64;
    let exact_vanishes = w.rem_euclid(g) != 0;
    let prefactor = root_of_unity((rho.d as i128) * (w as i128) * (w as i128), 96 * c as i128);
    let mut v_sum = Complex64::new(0.0, 0.0);
    for v in 0..c / g {
        v_sum += root_of_unity((24 * rho.a as i128 * (v as i128) * (v as i128)) + (w as i128) * v as i128, c as i128);
    }
    let mut u_sum = Complex64::new(0.0, 0.0);
    for u in 0..g {
        u_sum += root_of_unity((w as i128) * u as i128, g as i128);
    }
    let value = prefactor * v_sum * u_sum;
    Ok(GaussEval {
        re: value.re,
        im: value.im,
        exact_vanishes,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GaussSweepCase {
    pub c: i64,
    pub a: i64,
    pub w: i64,
}

/// Outcome of a (c, w) sweep of the Gauss factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussSweepReport {
    pub cases: u64,
    /// Numerically nonzero values at (c,24) not dividing w; the vanishing
    /// criterion says this stays empty.
    pub counterexamples: Vec<GaussSweepCase>,
    /// Values below the numeric threshold although the u-factor does not
    /// vanish: the quadratic v-factor is genuinely zero there (for example
    /// c = 48, w = 0), so these are informational, not defects.
    pub vanishing_without_flag: u64,
    pub numeric_threshold: f64,
}

/// Sweeps c in [1, c_max], |w| <= w_max, and `matrices_per_c` deterministic
/// SL2 matrices per c (smallest a coprime to c, d its inverse mod c).
pub fn gauss_sweep(c_max: i64, w_max: i64, matrices_per_c: usize) -> GaussSweepReport {
    let threshold = 1e-6;
    let mut cases = 0u64;
    let mut counterexamples = Vec::new();
    let mut vanishing_without_flag = 0u64;
    for c in 1..=c_max {
        let mut mats = Vec::with_capacity(matrices_per_c);
        let mut a = 1i64;
        while mats.len() < matrices_per_c {
            if gcd_u64(a as u64, c as u64) == 1 {
                let d = inv_mod(a as u64 % c as u64, c as u64).expect("coprime") as i64;
                let b = (a * d - 1) / c;
                mats.push(Sl2::new(a, b, c, d).expect("determinant one"));
            }
            a += 1;
        }
        for rho in &mats {
            for w in -w_max..=w_max {
                cases += 1;
                let eval = gauss_phi_h2(rho, w).expect("c >= 1");
                let numeric_nonzero = eval.magnitude() >= threshold;
                if eval.exact_vanishes && numeric_nonzero {
                    counterexamples.push(GaussSweepCase { c, a: rho.a, w });
                } else if !eval.exact_vanishes && !numeric_nonzero {
                    vanishing_without_flag += 1;
                }
            }
        }
    }
    GaussSweepReport {
        cases,
        counterexamples,
        vanishing_without_flag,
        numeric_threshold: threshold,
    }
}
