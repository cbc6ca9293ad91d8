//! Elements of `Z(2)^ω` given by their supports, and the continuous
//! characters acting on them as finite-coordinate parity products.

use std::fmt;
use std::ops::Mul;

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::ToPrimitive;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::sequence::{Family, SequenceError};

/// A coordinate of `ω`.
pub type Coord = u64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SupportError {
    #[error("explicit support must be strictly increasing (position {position})")]
    NotIncreasing { position: usize },
    #[error("periodic pattern must be non-empty")]
    EmptyPattern,
    #[error(transparent)]
    Sequence(#[from] SequenceError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("character coordinates must be strictly increasing (position {position})")]
pub struct CharacterError {
    pub position: usize,
}

/// A value of a character: `+1` or `-1` in `Z(2) ⊂ 𝕋`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn from_parity(odd: bool) -> Self {
        if odd {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn is_minus(self) -> bool {
        self == Sign::Minus
    }
}

impl Mul for Sign {
    type Output = Sign;

    fn mul(self, rhs: Sign) -> Sign {
        Sign::from_parity(self != rhs)
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+1",
            Sign::Minus => "-1",
        })
    }
}

impl Serialize for Sign {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_i8(self.as_i8())
    }
}

/// A continuous character of `Z(2)^ω`, stored as its finite coordinate set.
///
/// `chi(x) = (-1)^{|chi ∩ supp(x)|}`; the empty set is the identity.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Character(Vec<Coord>);

impl Character {
    pub fn identity() -> Self {
        Character(Vec::new())
    }

    /// Builds a character from a strictly increasing coordinate list.
    pub fn new(coords: Vec<Coord>) -> Result<Self, CharacterError> {
        if let Some(pos) = coords.windows(2).position(|w| w[0] >= w[1]) {
            return Err(CharacterError { position: pos + 1 });
        }
        Ok(Character(coords))
    }

    /// Builds a character from any coordinates, sorting and deduplicating.
    pub fn from_coords<I: IntoIterator<Item = Coord>>(coords: I) -> Self {
        let mut v: Vec<Coord> = coords.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Character(v)
    }

    pub fn coords(&self) -> &[Coord] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, c: Coord) -> bool {
        self.0.binary_search(&c).is_ok()
    }

    pub fn max(&self) -> Option<Coord> {
        self.0.last().copied()
    }

    pub fn min(&self) -> Option<Coord> {
        self.0.first().copied()
    }

    /// Pointwise product of characters, i.e. symmetric difference of supports.
    pub fn mul(&self, other: &Character) -> Character {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Character(out)
    }

    pub fn evaluate(&self, x: &SupportSpec) -> Sign {
        evaluate(self, x)
    }
}

impl Mul for &Character {
    type Output = Character;

    fn mul(self, rhs: &Character) -> Character {
        Character::mul(self, rhs)
    }
}

impl fmt::Display for Character {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("∅");
        }
        f.write_str("{")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str("}")
    }
}

/// Decidable description of `supp(x)` for an element `x ∈ Z(2)^ω`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportSpec {
    repr: Repr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Repr {
    Explicit(Vec<Coord>),
    Enumerated(Enumerated),
    Periodic(Periodic),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Enumerated {
    family: Family,
    elements: Elements,
}

/// Every element that fits in a coordinate, or a polynomial searched lazily.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Elements {
    Materialized(Vec<Coord>),
    Polynomial(Vec<i64>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Periodic {
    prefix: Vec<bool>,
    pattern: Vec<bool>,
    prefix_ones: u64,
    pattern_ones: u64,
}

/// Which of the three representations a support uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SupportKind {
    Explicit,
    Enumerated,
    Periodic,
}

impl SupportSpec {
    pub fn empty() -> Self {
        SupportSpec {
            repr: Repr::Explicit(Vec::new()),
        }
    }

    pub fn explicit(elements: Vec<Coord>) -> Result<Self, SupportError> {
        if let Some(pos) = elements.windows(2).position(|w| w[0] >= w[1]) {
            return Err(SupportError::NotIncreasing { position: pos + 1 });
        }
        Ok(SupportSpec {
            repr: Repr::Explicit(elements),
        })
    }

    /// Explicit support from arbitrary coordinates (sorted, deduplicated).
    pub fn from_coords<I: IntoIterator<Item = Coord>>(coords: I) -> Self {
        let mut v: Vec<Coord> = coords.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        SupportSpec {
            repr: Repr::Explicit(v),
        }
    }

    /// Support enumerated by a generator family. The family must be provably
    /// strictly increasing and non-negative; `(j)!` with offset 0 is read as
    /// the set `{1, 2, 6, …}`.
    pub fn enumerated(family: Family) -> Result<Self, SupportError> {
        let effective = match &family {
            Family::Factorial { offset: 0 } => Family::Factorial { offset: 1 },
            f => f.clone(),
        };
        effective.certify_increasing()?;
        let elements = match &effective {
            Family::Polynomial { coeffs } => Elements::Polynomial(coeffs.clone()),
            f => Elements::Materialized(
                f.terms()
                    .map_while(|t| t.to_u64())
                    .collect(),
            ),
        };
        Ok(SupportSpec {
            repr: Repr::Enumerated(Enumerated { family, elements }),
        })
    }

    pub fn periodic(prefix: Vec<bool>, pattern: Vec<bool>) -> Result<Self, SupportError> {
        if pattern.is_empty() {
            return Err(SupportError::EmptyPattern);
        }
        let prefix_ones = prefix.iter().filter(|b| **b).count() as u64;
        let pattern_ones = pattern.iter().filter(|b| **b).count() as u64;
        Ok(SupportSpec {
            repr: Repr::Periodic(Periodic {
                prefix,
                pattern,
                prefix_ones,
                pattern_ones,
            }),
        })
    }

    pub fn kind(&self) -> SupportKind {
        match self.repr {
            Repr::Explicit(_) => SupportKind::Explicit,
            Repr::Enumerated(_) => SupportKind::Enumerated,
            Repr::Periodic(_) => SupportKind::Periodic,
        }
    }

    /// The element list when the support is explicit.
    pub fn as_explicit(&self) -> Option<&[Coord]> {
        match &self.repr {
            Repr::Explicit(v) => Some(v),
            _ => None,
        }
    }

    pub fn family(&self) -> Option<&Family> {
        match &self.repr {
            Repr::Enumerated(e) => Some(&e.family),
            _ => None,
        }
    }

    /// `(prefix, pattern)` for periodic supports.
    pub fn periodic_parts(&self) -> Option<(&[bool], &[bool])> {
        match &self.repr {
            Repr::Periodic(p) => Some((&p.prefix, &p.pattern)),
            _ => None,
        }
    }

    pub fn contains(&self, n: Coord) -> bool {
        membership(self, n)
    }

    /// Support elements `>= start` in increasing order.
    pub fn iter_from(&self, start: Coord) -> Box<dyn Iterator<Item = Coord> + '_> {
        match &self.repr {
            Repr::Explicit(v) => {
                let i = v.partition_point(|e| *e < start);
                Box::new(v[i..].iter().copied())
            }
            Repr::Enumerated(e) => match &e.elements {
                Elements::Materialized(v) => {
                    let i = v.partition_point(|x| *x < start);
                    Box::new(v[i..].iter().copied())
                }
                Elements::Polynomial(coeffs) => {
                    let j0 = poly_count_below(coeffs, start);
                    Box::new(
                        (j0..=u64::MAX)
                            .map(move |j| crate::sequence::eval_poly(coeffs, &BigInt::from(j)))
                            .map_while(|v| v.to_u64()),
                    )
                }
            },
            Repr::Periodic(p) => Box::new(
                PeriodicIter { spec: p, next: start }
            ),
        }
    }

    /// Symmetric difference of two explicit supports (the group law).
    pub fn product(&self, other: &SupportSpec) -> Option<SupportSpec> {
        let (a, b) = (self.as_explicit()?, other.as_explicit()?);
        let c = Character::from_coords(a.iter().copied()).mul(&Character::from_coords(b.iter().copied()));
        Some(SupportSpec {
            repr: Repr::Explicit(c.0),
        })
    }
}

struct PeriodicIter<'a> {
    spec: &'a Periodic,
    next: Coord,
}

impl Iterator for PeriodicIter<'_> {
    type Item = Coord;

    fn next(&mut self) -> Option<Coord> {
        let p = self.spec;
        let l = p.prefix.len() as u64;
        loop {
            let n = self.next;
            if n >= l && p.pattern_ones == 0 {
                return None;
            }
            let bit = periodic_bit(p, n);
            if n == u64::MAX {
                self.next = n;
                return if bit { Some(n) } else { None };
            }
            self.next = n + 1;
            if bit {
                return Some(n);
            }
        }
    }
}

fn periodic_bit(p: &Periodic, n: Coord) -> bool {
    let l = p.prefix.len() as u64;
    if n < l {
        p.prefix[n as usize]
    } else {
        p.pattern[((n - l) % p.pattern.len() as u64) as usize]
    }
}

/// Number of polynomial terms below `k`. Since the polynomial is strictly
/// increasing from a non-negative start, `P(j) >= j` and the answer is `<= k`.
fn poly_count_below(coeffs: &[i64], k: Coord) -> u64 {
    let bound = BigInt::from(k);
    let (mut lo, mut hi) = (0u64, k);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if crate::sequence::eval_poly(coeffs, &BigInt::from(mid)) < bound {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `n ∈ supp(x)`.
pub fn membership(x: &SupportSpec, n: Coord) -> bool {
    match &x.repr {
        Repr::Explicit(v) => v.binary_search(&n).is_ok(),
        Repr::Enumerated(e) => match &e.elements {
            Elements::Materialized(v) => v.binary_search(&n).is_ok(),
            Elements::Polynomial(coeffs) => {
                let j = poly_count_below(coeffs, n);
                crate::sequence::eval_poly(coeffs, &BigInt::from(j)) == BigInt::from(n)
            }
        },
        Repr::Periodic(p) => periodic_bit(p, n),
    }
}

/// `(-1)^{|chi ∩ supp(x)|}`.
pub fn evaluate(chi: &Character, x: &SupportSpec) -> Sign {
    let hits = chi.coords().iter().filter(|c| membership(x, **c)).count();
    Sign::from_parity(hits % 2 == 1)
}

/// Symmetric difference `a Δ b`.
pub fn char_mul(a: &Character, b: &Character) -> Character {
    a.mul(b)
}

/// Whether `chi` lies in the basic neighbourhood `O(x_1, …, x_n)` of the
/// identity. Since `-1` is outside the arc `V_1`, this means `chi(x_k) = +1`.
pub fn in_basic_nbhd(chi: &Character, points: &[SupportSpec]) -> bool {
    points.iter().all(|x| evaluate(chi, x) == Sign::Plus)
}

/// `|supp(x) ∩ {0, …, k-1}|`.
pub fn count_below(x: &SupportSpec, k: Coord) -> u64 {
    match &x.repr {
        Repr::Explicit(v) => v.partition_point(|e| *e < k) as u64,
        Repr::Enumerated(e) => match &e.elements {
            Elements::Materialized(v) => v.partition_point(|e| *e < k) as u64,
            Elements::Polynomial(coeffs) => poly_count_below(coeffs, k),
        },
        Repr::Periodic(p) => {
            let l = p.prefix.len() as u64;
            if k <= l {
                return p.prefix[..k as usize].iter().filter(|b| **b).count() as u64;
            }
            let period = p.pattern.len() as u64;
            let rest = k - l;
            let full = rest / period;
            let partial = p.pattern[..(rest % period) as usize]
                .iter()
                .filter(|b| **b)
                .count() as u64;
            p.prefix_ones + full * p.pattern_ones + partial
        }
    }
}

/// Exact densities `count_below(x, k) / k` at each checkpoint (`k >= 1`).
pub fn density_profile(x: &SupportSpec, checkpoints: &[Coord]) -> Vec<Ratio<u64>> {
    checkpoints
        .iter()
        .map(|&k| {
            assert!(k >= 1, "density checkpoints must be >= 1");
            Ratio::new(count_below(x, k), k)
        })
        .collect()
}

/// Classification of a support's asymptotic density.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Thinness {
    /// Thin by construction of the support.
    CertifiedThin { reason: &'static str },
    /// Density bounded below; the limit density is exact.
    NotThin { limit_density: Ratio<u64> },
    /// No asymptotic claim: the exact profile at doubling checkpoints.
    Empirical { profile: Vec<(Coord, Ratio<u64>)> },
}

impl Thinness {
    pub fn is_certified_thin(&self) -> bool {
        matches!(self, Thinness::CertifiedThin { .. })
    }
}

/// Doubling checkpoints `1, 2, 4, …` up to `horizon`, with `horizon` itself last.
pub fn doubling_checkpoints(horizon: Coord) -> Vec<Coord> {
    let mut out = Vec::new();
    let mut k = 1u64;
    while k <= horizon {
        out.push(k);
        match k.checked_mul(2) {
            Some(next) => k = next,
            None => break,
        }
    }
    if out.last() != Some(&horizon) && horizon >= 1 {
        out.push(horizon);
    }
    out
}

pub fn thinness_report(x: &SupportSpec, horizon: Coord) -> Thinness {
    match &x.repr {
        Repr::Explicit(_) => Thinness::CertifiedThin { reason: "finite support" },
        Repr::Periodic(p) if p.pattern_ones == 0 => Thinness::CertifiedThin { reason: "finite support" },
        Repr::Periodic(p) => Thinness::NotThin {
            limit_density: Ratio::new(p.pattern_ones, p.pattern.len() as u64),
        },
        Repr::Enumerated(e) => match &e.family {
            Family::Geometric { .. } => Thinness::CertifiedThin { reason: "geometric growth" },
            Family::Factorial { .. } => Thinness::CertifiedThin { reason: "factorial growth" },
            f @ Family::Polynomial { .. } if f.degree().unwrap_or(0) >= 2 => {
                Thinness::CertifiedThin { reason: "polynomial of degree >= 2" }
            }
            _ => {
                let checkpoints = doubling_checkpoints(horizon.max(1));
                let profile = density_profile(x, &checkpoints);
                Thinness::Empirical {
                    profile: checkpoints.into_iter().zip(profile).collect(),
                }
            }
        },
    }
}
