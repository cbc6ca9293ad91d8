//! Refuting convergence of a sequence of distinct characters to the
//! identity: select a pivoted subsequence, then build a thin-support element
//! on which every selected character takes the value `-1`.

use std::collections::{BTreeMap, HashMap, HashSet};

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::One;
use thiserror::Error;

use crate::gf2::{count_below, evaluate, Character, Coord, Sign, SupportSpec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WitnessError {
    #[error("input character {index} duplicates character {first}")]
    DuplicateInput { index: usize, first: usize },
    #[error("input character {index} is the identity")]
    IdentityInput { index: usize },
    #[error("growth factor {0} is below 2")]
    GrowthFactorTooSmall(Ratio<u64>),
    #[error("coordinate {coordinate} would be assigned twice at stage {stage}")]
    InternalContradiction { stage: usize, coordinate: Coord },
}

/// Ratio `>= 2` between consecutive pivots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GrowthFactor(Ratio<u64>);

impl GrowthFactor {
    pub fn new(r: Ratio<u64>) -> Result<Self, WitnessError> {
        if r < Ratio::from_integer(2) {
            return Err(WitnessError::GrowthFactorTooSmall(r));
        }
        Ok(GrowthFactor(r))
    }

    pub fn ratio(&self) -> Ratio<u64> {
        self.0
    }

    /// `candidate >= factor · max(previous, 1)`.
    pub fn admits(&self, previous: Coord, candidate: Coord) -> bool {
        let lhs = u128::from(candidate) * u128::from(*self.0.denom());
        let rhs = u128::from(*self.0.numer()) * u128::from(previous.max(1));
        lhs >= rhs
    }

    /// Largest `e` with `factor^e <= h`, for `h >= 1`.
    pub fn floor_log(&self, h: u64) -> u32 {
        let (num, den) = (BigUint::from(*self.0.numer()), BigUint::from(*self.0.denom()));
        let h = BigUint::from(h);
        let (mut pn, mut pd) = (BigUint::one(), BigUint::one());
        let mut e = 0;
        loop {
            pn *= &num;
            pd *= &den;
            if pn > &h * &pd {
                return e;
            }
            e += 1;
        }
    }
}

impl Default for GrowthFactor {
    fn default() -> Self {
        GrowthFactor(Ratio::from_integer(2))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionResult {
    /// `(index in the input stream, character)` in acceptance order.
    pub selected: Vec<(usize, Character)>,
    /// `k_n`: the largest coordinate of `A_n` not covered by earlier selections.
    pub pivots: Vec<Coord>,
    pub skipped: u64,
    pub growth_factor: GrowthFactor,
}

impl SelectionResult {
    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    pub fn pivot_set(&self) -> SupportSpec {
        SupportSpec::from_coords(self.pivots.iter().copied())
    }
}

/// Outcome of the selection scan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selection {
    Complete(SelectionResult),
    /// The input ended after only `partial.len()` acceptances.
    Exhausted(SelectionResult),
}

impl Selection {
    pub fn result(&self) -> &SelectionResult {
        match self {
            Selection::Complete(r) | Selection::Exhausted(r) => r,
        }
    }

    pub fn into_result(self) -> SelectionResult {
        match self {
            Selection::Complete(r) | Selection::Exhausted(r) => r,
        }
    }

    pub fn is_exhausted(&self) -> bool {
        matches!(self, Selection::Exhausted(_))
    }
}

/// Greedy scan: a candidate `A` is accepted when `A` is not covered by the
/// union of accepted sets and the largest uncovered coordinate clears the
/// growth gate against the previous pivot. The first acceptance is free.
///
/// Stops after `target_count` acceptances; the rest of the stream is not read.
pub fn select_subsequence<I>(
    chars: I,
    target_count: usize,
    growth_factor: GrowthFactor,
) -> Result<Selection, WitnessError>
where
    I: IntoIterator<Item = Character>,
{
    let mut seen: HashMap<Character, usize> = HashMap::new();
    let mut covered: HashSet<Coord> = HashSet::new();
    let mut result = SelectionResult {
        selected: Vec::new(),
        pivots: Vec::new(),
        skipped: 0,
        growth_factor,
    };
    if target_count == 0 {
        return Ok(Selection::Complete(result));
    }
    for (index, chi) in chars.into_iter().enumerate() {
        if chi.is_identity() {
            return Err(WitnessError::IdentityInput { index });
        }
        if let Some(&first) = seen.get(&chi) {
            return Err(WitnessError::DuplicateInput { index, first });
        }
        seen.insert(chi.clone(), index);

        let pivot = chi.coords().iter().rev().find(|c| !covered.contains(c)).copied();
        let accept = match (pivot, result.pivots.last()) {
            (None, _) => false,
            (Some(_), None) => true,
            (Some(k), Some(&prev)) => growth_factor.admits(prev, k),
        };
        if !accept {
            result.skipped += 1;
            continue;
        }
        covered.extend(chi.coords().iter().copied());
        result.pivots.push(pivot.expect("accepted candidates have a pivot"));
        result.selected.push((index, chi));
        if result.selected.len() == target_count {
            return Ok(Selection::Complete(result));
        }
    }
    Ok(Selection::Exhausted(result))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Guarantee {
    /// Position in the input stream.
    pub index: usize,
    pub character: Character,
    pub sign: Sign,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessElement {
    /// `supp(x*)`, always a subset of the pivot set.
    pub support: SupportSpec,
    pub guarantees: Vec<Guarantee>,
}

/// Assigns bits stage by stage. At stage `n` every coordinate of `A_n`
/// except the pivot is either fixed by an earlier stage or fixed now to `+1`;
/// the pivot is then set to `-1` exactly when the other `-1` bits of `A_n`
/// are even in number, which makes `A_n(x*) = -1`.
pub fn build_witness(selection: &SelectionResult) -> Result<WitnessElement, WitnessError> {
    let mut bits: BTreeMap<Coord, Sign> = BTreeMap::new();
    for (stage, ((_, chi), &pivot)) in selection.selected.iter().zip(&selection.pivots).enumerate() {
        if bits.contains_key(&pivot) {
            return Err(WitnessError::InternalContradiction { stage, coordinate: pivot });
        }
        let mut odd = false;
        for &c in chi.coords() {
            if c == pivot {
                continue;
            }
            let bit = *bits.entry(c).or_insert(Sign::Plus);
            odd ^= bit.is_minus();
        }
        bits.insert(pivot, Sign::from_parity(!odd));
    }
    let support = SupportSpec::from_coords(
        bits.iter().filter(|(_, s)| s.is_minus()).map(|(c, _)| *c),
    );
    let mut guarantees = Vec::with_capacity(selection.len());
    for (stage, (index, chi)) in selection.selected.iter().enumerate() {
        let sign = evaluate(chi, &support);
        if sign != Sign::Minus {
            return Err(WitnessError::InternalContradiction {
                stage,
                coordinate: selection.pivots[stage],
            });
        }
        guarantees.push(Guarantee {
            index: *index,
            character: chi.clone(),
            sign,
        });
    }
    Ok(WitnessElement { support, guarantees })
}

/// `count_below(K, H)` against `⌊log_g H⌋ + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DensityBound {
    pub horizon: u64,
    pub count: u64,
    pub bound: u64,
}

impl DensityBound {
    pub fn holds(&self) -> bool {
        self.count <= self.bound
    }

    pub fn density(&self) -> Ratio<u64> {
        Ratio::new(self.count, self.horizon)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Refutation {
    pub selection: SelectionResult,
    pub witness: WitnessElement,
    pub density: DensityBound,
    /// False when the input ran out before `max_select` acceptances.
    pub complete: bool,
}

impl Refutation {
    pub fn note(&self) -> Option<&'static str> {
        (!self.complete).then_some(
            "input exhausted: a finite set of characters cannot form a non-trivial convergent sequence",
        )
    }
}

/// Select, build, and certify the pivot-set density at `horizon >= 1`.
pub fn refute_convergence<I>(
    chars: I,
    max_select: usize,
    growth_factor: GrowthFactor,
    horizon: u64,
) -> Result<Refutation, WitnessError>
where
    I: IntoIterator<Item = Character>,
{
    let selection = select_subsequence(chars, max_select, growth_factor)?;
    let complete = !selection.is_exhausted();
    let selection = selection.into_result();
    let witness = build_witness(&selection)?;
    let horizon = horizon.max(1);
    let density = DensityBound {
        horizon,
        count: count_below(&selection.pivot_set(), horizon),
        bound: u64::from(growth_factor.floor_log(horizon)) + 1,
    };
    Ok(Refutation {
        selection,
        witness,
        density,
        complete,
    })
}
