//! Characterized subgroups `C_B = {x ∈ 𝕋 : x^{n_k} → 1}` of the circle.
//!
//! Points are written by their angle fraction in `[0, 1)`, and
//! `x^{n_k} → 1` is read as `‖n_k·x‖ → 0` where `‖·‖` is the distance to the
//! nearest integer. For a rational point `p/q` this forces `q | n_k`
//! eventually, which is decided exactly from the residue dynamics of `n_k`
//! modulo `q`.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::measure::{ratio_to_f64, EstimateReport};
use crate::sampling::{count_hits, sample_bits, Parallelism};
use crate::sequence::{Family, SequenceError};

/// Bits beyond `log2(n_K)` required before a probe trusts an inexact point.
pub const GUARD_BITS: u64 = 32;

/// Cap on residue-cycle search steps.
pub const DEFAULT_CYCLE_LIMIT: u64 = 1 << 28;

/// Prefix length checked when a recurrence cannot be certified increasing.
const RECURRENCE_CHECK_TERMS: u64 = 256;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CircleError {
    #[error("unsupported family: {0}")]
    UnsupportedFamily(String),
    #[error("precision of {available} bits is insufficient; {required} bits required")]
    PrecisionExceeded { required: u64, available: u64 },
    #[error("invalid point: {0}")]
    InvalidPoint(String),
    #[error("invalid sequence: {0}")]
    InvalidSequence(String),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error("no residue cycle found within {0} steps")]
    CycleSearchLimit(u64),
    #[error("tolerance must satisfy 0 < eps < 1/2")]
    InvalidTolerance,
}

/// How strict increase of `B` was established.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    /// Proved for every index (for `k!` from index 1 on).
    Certified,
    /// Checked only over the first `terms` terms.
    CheckedPrefix { terms: u64 },
}

/// A strictly increasing sequence `B = (n_k)` of positive integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceGen {
    kind: GenKind,
    monotonicity: Monotonicity,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum GenKind {
    Family(Family),
    Explicit(Vec<BigUint>),
}

impl SequenceGen {
    pub fn from_family(family: Family) -> Result<Self, CircleError> {
        family.validate()?;
        if family.term(0) <= BigInt::zero() {
            return Err(CircleError::InvalidSequence("first term must be positive".into()));
        }
        let monotonicity = match (&family, family.certify_increasing()) {
            (_, Ok(())) => Monotonicity::Certified,
            // 0! = 1! is a single repeat that does not affect the tail
            (Family::Factorial { offset: 0 }, _) => Monotonicity::Certified,
            (Family::Recurrence { .. }, Err(SequenceError::CannotCertify(_))) => {
                family.check_increasing_prefix(RECURRENCE_CHECK_TERMS)?;
                Monotonicity::CheckedPrefix { terms: RECURRENCE_CHECK_TERMS }
            }
            (_, Err(e)) => return Err(e.into()),
        };
        Ok(SequenceGen {
            kind: GenKind::Family(family),
            monotonicity,
        })
    }

    pub fn explicit(terms: Vec<BigUint>) -> Result<Self, CircleError> {
        if terms.first().is_some_and(Zero::is_zero) {
            return Err(CircleError::InvalidSequence("terms must be positive".into()));
        }
        if let Some(i) = terms.windows(2).position(|w| w[0] >= w[1]) {
            return Err(SequenceError::NotIncreasing { index: i as u64 + 1 }.into());
        }
        Ok(SequenceGen {
            monotonicity: Monotonicity::CheckedPrefix { terms: terms.len() as u64 },
            kind: GenKind::Explicit(terms),
        })
    }

    pub fn family(&self) -> Option<&Family> {
        match &self.kind {
            GenKind::Family(f) => Some(f),
            GenKind::Explicit(_) => None,
        }
    }

    pub fn explicit_terms(&self) -> Option<&[BigUint]> {
        match &self.kind {
            GenKind::Explicit(t) => Some(t),
            GenKind::Family(_) => None,
        }
    }

    pub fn monotonicity(&self) -> Monotonicity {
        self.monotonicity
    }

    /// The first `count` terms (fewer for a short explicit list).
    pub fn terms(&self, count: u64) -> Vec<BigUint> {
        match &self.kind {
            GenKind::Family(f) => f
                .terms()
                .take(count as usize)
                .map(|t| t.to_biguint().expect("validated non-negative"))
                .collect(),
            GenKind::Explicit(t) => t.iter().take(count as usize).cloned().collect(),
        }
    }
}

/// The torsion point `e^{2πi p/q}`, stored reduced with `0 <= p < q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RationalPoint {
    p: u64,
    q: u64,
}

impl RationalPoint {
    pub fn new(p: u64, q: u64) -> Result<Self, CircleError> {
        if q == 0 {
            return Err(CircleError::InvalidPoint("denominator must be >= 1".into()));
        }
        let p = p % q;
        let g = p.gcd(&q);
        Ok(RationalPoint { p: p / g, q: q / g })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn q(&self) -> u64 {
        self.q
    }
}

impl FromStr for RationalPoint {
    type Err = CircleError;

    fn from_str(s: &str) -> Result<Self, CircleError> {
        let (p, q) = s
            .trim()
            .split_once('/')
            .ok_or_else(|| CircleError::InvalidPoint(format!("expected p/q, got {s:?}")))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<u64>()
                .map_err(|e| CircleError::InvalidPoint(format!("{t:?}: {e}")))
        };
        RationalPoint::new(parse(p)?, parse(q)?)
    }
}

impl fmt::Display for RationalPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MembershipVerdict {
    /// `q | n_k` for every `k >= index`, and `index` is least with this property.
    Member { index: u64 },
    /// The residues `n_k·p mod q` enter a cycle containing a non-zero value.
    NonMember {
        cycle_start: u64,
        cycle_len: u64,
        residues: Vec<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Membership {
    pub verdict: MembershipVerdict,
    pub monotonicity: Monotonicity,
}

/// Finite-state dynamics of `n_k mod q`.
enum Machine {
    Geometric { ratio: u64 },
    /// state `[i, i! mod q]`; collapses to `[MAX, 0]` once the product vanishes
    Factorial,
    /// state `[k mod q]`
    Polynomial { coeffs: Vec<u64> },
    /// state `[n_k, …, n_{k+d-1}] mod q`
    Recurrence { coeffs: Vec<u64> },
}

struct Dynamics {
    machine: Machine,
    q: u64,
    start: Vec<u64>,
}

fn mod_i64(a: i64, q: u64) -> u64 {
    (i128::from(a).rem_euclid(i128::from(q))) as u64
}

fn mulmod(a: u64, b: u64, q: u64) -> u64 {
    ((u128::from(a) * u128::from(b)) % u128::from(q)) as u64
}

impl Dynamics {
    fn new(family: &Family, q: u64) -> Self {
        match family {
            Family::Geometric { scale, ratio } => Dynamics {
                machine: Machine::Geometric { ratio: ratio % q },
                q,
                start: vec![scale % q],
            },
            Family::Factorial { offset } => {
                let start = if *offset >= q {
                    vec![u64::MAX, 0]
                } else {
                    let prod = (2..=*offset).fold(1 % q, |acc, i| mulmod(acc, i, q));
                    if prod == 0 {
                        vec![u64::MAX, 0]
                    } else {
                        vec![*offset, prod]
                    }
                };
                Dynamics { machine: Machine::Factorial, q, start }
            }
            Family::Polynomial { coeffs } => Dynamics {
                machine: Machine::Polynomial {
                    coeffs: coeffs.iter().map(|c| mod_i64(*c, q)).collect(),
                },
                q,
                start: vec![0],
            },
            Family::Recurrence { coeffs, initial } => Dynamics {
                machine: Machine::Recurrence {
                    coeffs: coeffs.iter().map(|c| mod_i64(*c, q)).collect(),
                },
                q,
                start: initial.iter().map(|c| mod_i64(*c, q)).collect(),
            },
        }
    }

    fn step(&self, s: &[u64]) -> Vec<u64> {
        let q = self.q;
        match &self.machine {
            Machine::Geometric { ratio } => vec![mulmod(s[0], *ratio, q)],
            Machine::Factorial => {
                if s[1] == 0 {
                    return vec![u64::MAX, 0];
                }
                let i = s[0] + 1;
                let prod = mulmod(s[1], i % q, q);
                if prod == 0 {
                    vec![u64::MAX, 0]
                } else {
                    vec![i, prod]
                }
            }
            Machine::Polynomial { .. } => vec![(s[0] + 1) % q],
            Machine::Recurrence { coeffs } => {
                let d = coeffs.len();
                let fresh = coeffs
                    .iter()
                    .enumerate()
                    .fold(0u64, |acc, (i, a)| (acc + mulmod(*a, s[d - 1 - i], q)) % q);
                let mut next = s[1..].to_vec();
                next.push(fresh);
                next
            }
        }
    }

    /// `n_k mod q` in this state.
    fn residue(&self, s: &[u64]) -> u64 {
        match &self.machine {
            Machine::Geometric { .. } => s[0],
            Machine::Factorial => s[1],
            Machine::Polynomial { coeffs } => coeffs
                .iter()
                .rev()
                .fold(0u64, |acc, c| (mulmod(acc, s[0], self.q) + c) % self.q),
            Machine::Recurrence { .. } => s[0],
        }
    }

    /// Brent's cycle detection: `(mu, lambda)` with `x_{mu+lambda} = x_mu`, `mu` least.
    fn find_cycle(&self, limit: u64) -> Result<(u64, u64), CircleError> {
        let mut steps = 0u64;
        let mut tick = || {
            steps += 1;
            if steps > limit {
                Err(CircleError::CycleSearchLimit(limit))
            } else {
                Ok(())
            }
        };
        let (mut power, mut lam) = (1u64, 1u64);
        let mut tortoise = self.start.clone();
        let mut hare = self.step(&self.start);
        while tortoise != hare {
            tick()?;
            if power == lam {
                tortoise = hare.clone();
                power *= 2;
                lam = 0;
            }
            hare = self.step(&hare);
            lam += 1;
        }
        let mut tortoise = self.start.clone();
        let mut hare = self.start.clone();
        for _ in 0..lam {
            hare = self.step(&hare);
        }
        let mut mu = 0u64;
        while tortoise != hare {
            tick()?;
            tortoise = self.step(&tortoise);
            hare = self.step(&hare);
            mu += 1;
        }
        Ok((mu, lam))
    }
}

/// Decides `x ∈ C_B` for a torsion point `x`.
pub fn rational_membership(x: RationalPoint, b: &SequenceGen) -> Result<Membership, CircleError> {
    rational_membership_with_limit(x, b, DEFAULT_CYCLE_LIMIT)
}

pub fn rational_membership_with_limit(
    x: RationalPoint,
    b: &SequenceGen,
    limit: u64,
) -> Result<Membership, CircleError> {
    let family = b.family().ok_or_else(|| {
        CircleError::UnsupportedFamily("a finite explicit list has no tail to decide".into())
    })?;
    let dynamics = Dynamics::new(family, x.q);
    let (mu, lam) = dynamics.find_cycle(limit)?;
    let mut residues = Vec::with_capacity((mu + lam) as usize);
    let mut state = dynamics.start.clone();
    for _ in 0..mu + lam {
        residues.push(mulmod(dynamics.residue(&state), x.p, x.q));
        state = dynamics.step(&state);
    }
    let cycle = &residues[mu as usize..];
    let verdict = if cycle.iter().all(|r| *r == 0) {
        MembershipVerdict::Member {
            index: residues.iter().rposition(|r| *r != 0).map_or(0, |i| i as u64 + 1),
        }
    } else {
        MembershipVerdict::NonMember {
            cycle_start: mu,
            cycle_len: lam,
            residues: cycle.to_vec(),
        }
    };
    Ok(Membership {
        verdict,
        monotonicity: b.monotonicity(),
    })
}

/// `n_k·p mod q` for `k < horizon`, computed from the terms themselves.
pub fn exact_residues(x: RationalPoint, b: &SequenceGen, horizon: u64) -> Vec<u64> {
    let q = BigUint::from(x.q);
    b.terms(horizon)
        .into_iter()
        .map(|n| ((n * x.p) % &q).to_u64().expect("residue below q"))
        .collect()
}

/// A real in `[0, 1)` held as `mantissa / 2^bits`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DyadicReal {
    mantissa: BigUint,
    bits: u64,
    /// Whether the mantissa is the point itself rather than a rounding.
    exact: bool,
}

impl DyadicReal {
    pub fn zero(bits: u64) -> Self {
        DyadicReal { mantissa: BigUint::zero(), bits, exact: true }
    }

    /// Nearest dyadic approximation of `(p/q) mod 1`.
    pub fn from_ratio(p: &BigUint, q: &BigUint, bits: u64) -> Result<Self, CircleError> {
        if q.is_zero() {
            return Err(CircleError::InvalidPoint("denominator must be >= 1".into()));
        }
        let scaled = (p % q) << bits;
        let (quot, rem) = scaled.div_rem(q);
        let round_up = &rem << 1u32 >= *q;
        let modulus = BigUint::one() << bits;
        let mantissa = if round_up { quot + 1u32 } else { quot } % &modulus;
        Ok(DyadicReal { mantissa, bits, exact: rem.is_zero() })
    }

    /// `Σ 2^{-j}` over the given positions `j >= 1`, truncated at `bits`.
    pub fn from_binary_ones<I: IntoIterator<Item = u64>>(bits: u64, positions: I) -> Self {
        let mut mantissa = BigUint::zero();
        let mut exact = true;
        for j in positions {
            if j == 0 {
                continue;
            }
            if j > bits {
                exact = false;
                continue;
            }
            mantissa.set_bit(bits - j, true);
        }
        DyadicReal { mantissa, bits, exact }
    }

    /// Parses `p/q` or a decimal fraction such as `0.3125`.
    pub fn parse(s: &str, bits: u64) -> Result<Self, CircleError> {
        let s = s.trim();
        let bad = || CircleError::InvalidPoint(format!("cannot parse {s:?} as p/q or a decimal"));
        if let Some((p, q)) = s.split_once('/') {
            let p: BigUint = p.trim().parse().map_err(|_| bad())?;
            let q: BigUint = q.trim().parse().map_err(|_| bad())?;
            return Self::from_ratio(&p, &q, bits);
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if int.is_empty() && frac.is_empty() {
            return Err(bad());
        }
        if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let digits: BigUint = format!("{int}{frac}").parse().map_err(|_| bad())?;
        let q = num_traits::pow(BigUint::from(10u32), frac.len());
        Self::from_ratio(&digits, &q, bits)
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    /// `‖n·x‖` as `numerator / 2^bits`.
    fn distance_numer(&self, n: &BigUint) -> BigUint {
        let modulus = BigUint::one() << self.bits;
        let t = (n * &self.mantissa) % &modulus;
        let other = &modulus - &t;
        if t <= other {
            t
        } else {
            other
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeVerdict {
    AppearsMember,
    AppearsNonMember,
}

/// Horizon-bounded observation of `‖n_k·x‖`; never a membership proof.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub horizon: u64,
    pub precision: u64,
    pub distances: Vec<f64>,
    /// `‖n_k·x‖ < eps`, decided exactly on the dyadic value.
    pub below_tolerance: Vec<bool>,
    pub max_distance: f64,
    pub tail_start: u64,
    pub tail_max: f64,
    pub verdict: ProbeVerdict,
}

fn bit_length(n: &BigUint) -> u64 {
    n.bits()
}

fn required_bits(terms: &[BigUint]) -> u64 {
    terms.last().map_or(0, bit_length) + GUARD_BITS
}

fn dyadic_to_f64(numer: &BigUint, bits: u64) -> f64 {
    ratio_to_f64(&BigRational::new(BigInt::from(numer.clone()), BigInt::from(BigUint::one() << bits)))
        .unwrap_or(0.0)
}

/// Probes `‖n_k·x‖` for `k < horizon`. The last quarter of the range is the
/// tail: `AppearsMember` when every tail distance is below `eps`.
///
/// An inexact `x` is refused unless its precision exceeds
/// `log2(n_{K-1}) + GUARD_BITS`, since rounding error is multiplied by `n_k`.
pub fn float_membership(
    x: &DyadicReal,
    b: &SequenceGen,
    horizon: u64,
    eps: Ratio<u64>,
) -> Result<ProbeReport, CircleError> {
    let terms = b.terms(horizon);
    let required = required_bits(&terms);
    if !x.exact && required > x.bits {
        return Err(CircleError::PrecisionExceeded { required, available: x.bits });
    }
    let scale = BigUint::one() << x.bits;
    let eps_num = BigUint::from(*eps.numer()) * &scale;
    let eps_den = BigUint::from(*eps.denom());
    let mut distances = Vec::with_capacity(terms.len());
    let mut below = Vec::with_capacity(terms.len());
    for n in &terms {
        let d = x.distance_numer(n);
        below.push(&d * &eps_den < eps_num);
        distances.push(dyadic_to_f64(&d, x.bits));
    }
    let k = terms.len() as u64;
    let tail_start = k - k.div_ceil(4);
    let tail = tail_start as usize..;
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let verdict = if below[tail.clone()].iter().all(|b| *b) {
        ProbeVerdict::AppearsMember
    } else {
        ProbeVerdict::AppearsNonMember
    };
    Ok(ProbeReport {
        horizon: k,
        precision: x.bits,
        max_distance: max(&distances),
        tail_max: max(&distances[tail]),
        distances,
        below_tolerance: below,
        tail_start,
        verdict,
    })
}

/// Whether a probe agrees with exact residues index by index, and with the
/// exact verdict wherever the horizon is long enough to show it.
pub fn probe_agrees(report: &ProbeReport, exact: &Membership, residues: &[u64]) -> bool {
    if residues.len() != report.below_tolerance.len() {
        return false;
    }
    let pointwise = residues
        .iter()
        .zip(&report.below_tolerance)
        .all(|(r, below)| (*r == 0) == *below);
    let verdict = match &exact.verdict {
        MembershipVerdict::Member { index } if *index <= report.tail_start => {
            report.verdict == ProbeVerdict::AppearsMember
        }
        MembershipVerdict::NonMember { cycle_start, cycle_len, .. }
            if *cycle_start <= report.tail_start && report.horizon - report.tail_start >= *cycle_len =>
        {
            report.verdict == ProbeVerdict::AppearsNonMember
        }
        _ => true,
    };
    pointwise && verdict
}

/// Monte Carlo estimate of the measure of `{x : ‖n_k·x‖ <= eps for k < horizon}`.
///
/// Each sample is a uniform `precision`-bit dyadic; sample `i` is the same
/// point for every `horizon` and `eps`, so estimates are nested exactly.
pub fn measure_probe(
    b: &SequenceGen,
    eps: Ratio<u64>,
    horizon: u64,
    samples: u64,
    seed: u64,
    precision: u64,
    parallelism: Parallelism,
) -> Result<EstimateReport, CircleError> {
    if eps <= Ratio::from_integer(0) || eps * 2 >= Ratio::from_integer(1) {
        return Err(CircleError::InvalidTolerance);
    }
    if samples == 0 {
        return Err(CircleError::InvalidSequence("sample count must be at least 1".into()));
    }
    let terms = b.terms(horizon);
    let required = required_bits(&terms);
    if required > precision {
        return Err(CircleError::PrecisionExceeded { required, available: precision });
    }
    let eps_num = BigUint::from(*eps.numer()) << precision;
    let eps_den = BigUint::from(*eps.denom());
    let hits = count_hits(samples, parallelism, |i| {
        let words = sample_bits(seed, i, precision as usize);
        let x = DyadicReal {
            mantissa: BigUint::from_slice(
                &words.iter().flat_map(|w| [*w as u32, (*w >> 32) as u32]).collect::<Vec<_>>(),
            ),
            bits: precision,
            exact: true,
        };
        terms.iter().all(|n| x.distance_numer(n) * &eps_den <= eps_num)
    });
    let exact = match terms.len() {
        0 => Some(BigRational::one()),
        1 => Some(BigRational::new(
            BigInt::from(2 * *eps.numer()),
            BigInt::from(*eps.denom()),
        )),
        _ => None,
    };
    Ok(EstimateReport::new(hits, samples, seed, exact))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn geo(scale: u64, ratio: u64) -> SequenceGen {
        SequenceGen::from_family(Family::Geometric { scale, ratio }).unwrap()
    }

    fn fact(offset: u64) -> SequenceGen {
        SequenceGen::from_family(Family::Factorial { offset }).unwrap()
    }

    fn pt(p: u64, q: u64) -> RationalPoint {
        RationalPoint::new(p, q).unwrap()
    }

    /// Scans the residues directly: member iff they vanish on the last
    /// `window` of `scan` terms; index = one past the last non-zero.
    fn brute_member(x: RationalPoint, b: &SequenceGen, scan: u64) -> Option<u64> {
        let r = exact_residues(x, b, scan);
        let last_nonzero = r.iter().rposition(|v| *v != 0);
        match last_nonzero {
            Some(i) if i as u64 >= scan / 2 => None,
            Some(i) => Some(i as u64 + 1),
            None => Some(0),
        }
    }

    #[test]
    fn one_third_is_not_in_powers_of_two() {
        let m = rational_membership(pt(1, 3), &geo(1, 2)).unwrap();
        match m.verdict {
            MembershipVerdict::NonMember { cycle_start, cycle_len, residues } => {
                assert_eq!((cycle_start, cycle_len), (0, 2));
                assert_eq!(residues, vec![1, 2]);
            }
            v => panic!("unexpected {v:?}"),
        }
        assert_eq!(m.monotonicity, Monotonicity::Certified);
    }

    #[test]
    fn five_eighths_is_in_powers_of_two() {
        let m = rational_membership(pt(5, 8), &geo(1, 2)).unwrap();
        assert_eq!(m.verdict, MembershipVerdict::Member { index: 3 });
    }

    #[test]
    fn factorial_members() {
        for q in [2u64, 3, 5, 7, 97] {
            let m = rational_membership(pt(1, q), &fact(0)).unwrap();
            assert_eq!(m.verdict, MembershipVerdict::Member { index: q });
        }
        // 3! is already divisible by 6
        assert_eq!(
            rational_membership(pt(1, 6), &fact(0)).unwrap().verdict,
            MembershipVerdict::Member { index: 3 }
        );
        assert_eq!(
            rational_membership(pt(0, 1), &fact(0)).unwrap().verdict,
            MembershipVerdict::Member { index: 0 }
        );
        assert_eq!(
            rational_membership(pt(1, 4), &fact(10)).unwrap().verdict,
            MembershipVerdict::Member { index: 0 }
        );
    }

    #[test]
    fn polynomial_and_recurrence_dynamics() {
        let squares = SequenceGen::from_family(Family::Polynomial { coeffs: vec![1, 0, 1] }).unwrap();
        match rational_membership(pt(1, 5), &squares).unwrap().verdict {
            MembershipVerdict::NonMember { cycle_start, cycle_len, .. } => {
                assert_eq!(cycle_start, 0);
                assert_eq!(cycle_len, 5);
            }
            v => panic!("unexpected {v:?}"),
        }
        let fib = SequenceGen::from_family(Family::Recurrence { coeffs: vec![1, 1], initial: vec![1, 2] }).unwrap();
        match rational_membership(pt(1, 10), &fib).unwrap().verdict {
            // Pisano period of 10 is 60
            MembershipVerdict::NonMember { cycle_len, .. } => assert_eq!(cycle_len, 60),
            v => panic!("unexpected {v:?}"),
        }
        // n_{k+1} = 2 n_k, n_0 = 3: 3·2^k is eventually divisible by 8
        let doubling = SequenceGen::from_family(Family::Recurrence { coeffs: vec![2], initial: vec![3] }).unwrap();
        assert_eq!(
            rational_membership(pt(3, 8), &doubling).unwrap().verdict,
            MembershipVerdict::Member { index: 3 }
        );
    }

    #[test]
    fn uncertified_recurrence_is_flagged() {
        let arith = SequenceGen::from_family(Family::Recurrence { coeffs: vec![2, -1], initial: vec![1, 3] }).unwrap();
        assert_eq!(arith.monotonicity(), Monotonicity::CheckedPrefix { terms: 256 });
        let bad = SequenceGen::from_family(Family::Recurrence { coeffs: vec![-1, 0], initial: vec![1, 3] });
        assert!(bad.is_err());
    }

    #[test]
    fn explicit_lists_are_unsupported() {
        let b = SequenceGen::explicit(vec![1u32.into(), 2u32.into(), 6u32.into()]).unwrap();
        assert!(matches!(rational_membership(pt(1, 3), &b), Err(CircleError::UnsupportedFamily(_))));
        assert!(SequenceGen::explicit(vec![2u32.into(), 2u32.into()]).is_err());
    }

    #[test]
    fn cycle_limit_is_reported() {
        let fib = SequenceGen::from_family(Family::Recurrence { coeffs: vec![1, 1], initial: vec![1, 2] }).unwrap();
        assert_eq!(
            rational_membership_with_limit(pt(1, 1009), &fib, 10),
            Err(CircleError::CycleSearchLimit(10))
        );
    }

    #[test]
    fn cycle_certificate_resimulates() {
        let fib = SequenceGen::from_family(Family::Recurrence { coeffs: vec![1, 1], initial: vec![1, 2] }).unwrap();
        for q in [3u64, 7, 12, 25] {
            if let MembershipVerdict::NonMember { cycle_start, cycle_len, residues } =
                rational_membership(pt(1, q), &fib).unwrap().verdict
            {
                let direct = exact_residues(pt(1, q), &fib, cycle_start + 3 * cycle_len);
                for k in cycle_start..cycle_start + 2 * cycle_len {
                    assert_eq!(direct[k as usize], residues[((k - cycle_start) % cycle_len) as usize]);
                    assert_eq!(direct[k as usize], direct[(k + cycle_len) as usize]);
                }
            }
        }
    }

    #[test]
    fn probe_examples() {
        let r = float_membership(&DyadicReal::zero(64), &fact(0), 100, Ratio::new(1, 1000)).unwrap();
        assert_eq!(r.verdict, ProbeVerdict::AppearsMember);
        assert!(r.distances.iter().all(|d| *d == 0.0));

        let third = DyadicReal::parse("1/3", 256).unwrap();
        assert!(!third.is_exact());
        let r = float_membership(&third, &geo(1, 2), 100, Ratio::new(1, 1000)).unwrap();
        assert_eq!(r.verdict, ProbeVerdict::AppearsNonMember);
        assert!(r.distances.iter().all(|d| (d - 1.0 / 3.0).abs() < 1e-12));

        // Σ 2^{-j!}: ‖2^k x‖ is tiny right after k reaches a factorial
        let positions: Vec<u64> = (1..=5).map(|j| (1..=j).product()).collect();
        let liouville = DyadicReal::from_binary_ones(256, positions);
        let r = float_membership(&liouville, &geo(1, 2), 40, Ratio::new(1, 1000)).unwrap();
        assert!(r.distances[24] < r.distances[23]);
        assert!(r.distances[24] < 1e-4);
        assert!(r.distances[6] < 1e-4);
    }

    #[test]
    fn probe_refuses_insufficient_precision() {
        let third = DyadicReal::parse("1/3", 256).unwrap();
        match float_membership(&third, &fact(0), 100, Ratio::new(1, 1000)) {
            Err(CircleError::PrecisionExceeded { required, available }) => {
                assert_eq!(available, 256);
                assert!(required > 500);
            }
            other => panic!("expected refusal, got {other:?}"),
        }
        let sufficient = DyadicReal::parse("1/3", 1024).unwrap();
        assert!(float_membership(&sufficient, &fact(0), 100, Ratio::new(1, 1000)).is_ok());
    }

    #[test]
    fn dyadic_parsing() {
        let x = DyadicReal::parse("0.3125", 8).unwrap();
        assert!(x.is_exact());
        assert_eq!(x.mantissa, BigUint::from(80u32));
        assert_eq!(DyadicReal::parse("5/8", 3).unwrap().mantissa, BigUint::from(5u32));
        assert_eq!(DyadicReal::parse("13/8", 3).unwrap().mantissa, BigUint::from(5u32));
        assert!(DyadicReal::parse("abc", 8).is_err());
        assert!(DyadicReal::parse("1/0", 8).is_err());
        assert_eq!("6/8".parse::<RationalPoint>().unwrap(), pt(3, 4));
    }

    #[test]
    fn measure_probe_single_constraint() {
        let eps = Ratio::new(1, 8);
        let none = measure_probe(&geo(1, 2), eps, 0, 1000, 3, 128, Parallelism::Serial).unwrap();
        assert_eq!(none.hits, 1000);
        let one = measure_probe(&geo(1, 2), eps, 1, 20_000, 3, 128, Parallelism::Parallel).unwrap();
        assert_eq!(one.exact_f64(), Some(0.25));
        assert_eq!(one.within_sigmas(3.0), Some(true));
        assert!(measure_probe(&geo(1, 2), Ratio::new(1, 2), 1, 10, 3, 128, Parallelism::Serial).is_err());
    }

    #[test]
    fn measure_probe_is_nested() {
        let b = geo(1, 2);
        let eps = Ratio::new(1, 8);
        let hits: Vec<u64> = [1u64, 2, 4, 8]
            .iter()
            .map(|&k| measure_probe(&b, eps, k, 5000, 11, 128, Parallelism::Parallel).unwrap().hits)
            .collect();
        assert!(hits.windows(2).all(|w| w[0] >= w[1]));
        let wider = measure_probe(&b, Ratio::new(1, 4), 4, 5000, 11, 128, Parallelism::Parallel).unwrap();
        assert!(wider.hits >= hits[2]);
    }

    proptest! {
        #[test]
        fn factorial_index_at_most_q(p in 0u64..10_000, q in 1u64..10_000) {
            let x = pt(p, q);
            match rational_membership(x, &fact(0)).unwrap().verdict {
                MembershipVerdict::Member { index } => prop_assert!(index <= x.q()),
                v => prop_assert!(false, "unexpected {:?}", v),
            }
        }

        #[test]
        fn geometric_matches_brute_force(c in 1u64..20, r in 2u64..12, p in 0u64..200, q in 1u64..200) {
            let x = pt(p, q);
            let b = geo(c, r);
            let exact = rational_membership(x, &b).unwrap();
            let brute = brute_member(x, &b, 400);
            match exact.verdict {
                MembershipVerdict::Member { index } => prop_assert_eq!(brute, Some(index)),
                MembershipVerdict::NonMember { .. } => prop_assert_eq!(brute, None),
            }
        }

        #[test]
        fn probe_agrees_with_exact(p in 0u64..64, q in 1u64..64, r in 2u64..4) {
            let x = pt(p, q);
            let b = geo(1, r);
            let exact = rational_membership(x, &b).unwrap();
            let real = DyadicReal::parse(&x.to_string(), 256).unwrap();
            let report = float_membership(&real, &b, 60, Ratio::new(1, 1000)).unwrap();
            prop_assert!(probe_agrees(&report, &exact, &exact_residues(x, &b, 60)));
        }
    }
}
