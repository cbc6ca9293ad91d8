//! Annihilators, diagonal products and separation, computed exactly inside a
//! finite coordinate window.
//!
//! A character supported in `{0, …, W-1}` meets `supp(x)` only inside the
//! window, so restricting elements to the window loses nothing on the
//! character side. On the element side, coordinates `>= W` are unconstrained
//! and any window solution extends with an arbitrary tail.

use std::collections::HashSet;

use thiserror::Error;

use crate::gf2::{evaluate, Character, Coord, Sign, SupportSpec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnnihilatorError {
    #[error("window width must be at least 1")]
    EmptyWindow,
    #[error("character {index} ({character}) is not supported in the window of width {width}")]
    CharOutsideWindow {
        index: usize,
        character: Character,
        width: usize,
    },
}

/// The coordinate range `{0, …, width-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    width: usize,
}

impl Window {
    pub fn new(width: usize) -> Result<Self, AnnihilatorError> {
        if width == 0 {
            return Err(AnnihilatorError::EmptyWindow);
        }
        Ok(Window { width })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn contains(&self, chi: &Character) -> bool {
        chi.max().is_none_or(|m| m < self.width as Coord)
    }
}

/// A packed GF(2) vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitRow {
    words: Vec<u64>,
    width: usize,
}

impl BitRow {
    pub fn zeros(width: usize) -> Self {
        BitRow {
            words: vec![0; width.div_ceil(64)],
            width,
        }
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(width: usize, indices: I) -> Self {
        let mut row = BitRow::zeros(width);
        for i in indices {
            row.set(i);
        }
        row
    }

    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize) {
        debug_assert!(i < self.width);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn xor_assign(&mut self, other: &BitRow) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + b)
            })
        })
    }

    fn to_character(&self) -> Character {
        Character::from_coords(self.ones().map(|i| i as Coord))
    }
}

/// Reduced row echelon form with the lowest available column pivoted first.
struct Echelon {
    rows: Vec<BitRow>,
    pivots: Vec<usize>,
}

fn echelon(mut rows: Vec<BitRow>, width: usize) -> Echelon {
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..width {
        let Some(found) = (r..rows.len()).find(|&i| rows[i].get(col)) else {
            continue;
        };
        rows.swap(r, found);
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && row.get(col) {
                row.xor_assign(&pivot_row);
            }
        }
        pivots.push(col);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    rows.truncate(r);
    Echelon { rows, pivots }
}

/// Rank of a set of vectors of the given width.
pub fn gf2_rank(rows: &[BitRow], width: usize) -> usize {
    echelon(rows.to_vec(), width).pivots.len()
}

/// Basis of `{v : <row, v> = 0 for every row}`, one vector per free column in
/// increasing column order.
pub fn kernel_basis(rows: &[BitRow], width: usize) -> Vec<BitRow> {
    let ech = echelon(rows.to_vec(), width);
    let mut is_pivot = vec![false; width];
    for &p in &ech.pivots {
        is_pivot[p] = true;
    }
    (0..width)
        .filter(|&f| !is_pivot[f])
        .map(|f| {
            let mut v = BitRow::zeros(width);
            v.set(f);
            for (row, &p) in ech.rows.iter().zip(&ech.pivots) {
                if row.get(f) {
                    v.set(p);
                }
            }
            v
        })
        .collect()
}

fn window_row(x: &SupportSpec, window: Window) -> BitRow {
    BitRow::from_indices(
        window.width,
        x.iter_from(0)
            .take_while(|&e| e < window.width as Coord)
            .map(|e| e as usize),
    )
}

fn char_row(chi: &Character, window: Window) -> BitRow {
    BitRow::from_indices(window.width, chi.coords().iter().map(|&c| c as usize))
}

/// Independent generators of a subgroup of window characters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharBasis {
    pub window: Window,
    pub basis: Vec<Character>,
}

impl CharBasis {
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// Every element of the generated subgroup (`2^rank` of them).
    pub fn span(&self) -> Vec<Character> {
        span(&self.basis)
    }
}

/// All GF(2) combinations of the given characters.
pub fn span(basis: &[Character]) -> Vec<Character> {
    assert!(basis.len() < 32, "span of rank {} is too large to list", basis.len());
    let mut out = vec![Character::identity()];
    for b in basis {
        let more: Vec<Character> = out.iter().map(|c| c.mul(b)).collect();
        out.extend(more);
    }
    out
}

/// Window characters trivial on every generator: `|A ∩ supp(x)|` even.
pub fn annihilator_of_elements(generators: &[SupportSpec], window: Window) -> CharBasis {
    let rows: Vec<BitRow> = generators.iter().map(|x| window_row(x, window)).collect();
    CharBasis {
        window,
        basis: kernel_basis(&rows, window.width)
            .iter()
            .map(BitRow::to_character)
            .collect(),
    }
}

/// Window solutions `b ∈ {0,1}^W` with even parity on every character.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElementSolutions {
    pub window: Window,
    /// Supports of basis solutions; coordinates `>= W` are left free.
    pub basis: Vec<SupportSpec>,
}

impl ElementSolutions {
    pub fn rank(&self) -> usize {
        self.basis.len()
    }
}

pub fn annihilator_of_characters(
    chars: &[Character],
    window: Window,
) -> Result<ElementSolutions, AnnihilatorError> {
    if let Some(index) = chars.iter().position(|c| !window.contains(c)) {
        return Err(AnnihilatorError::CharOutsideWindow {
            index,
            character: chars[index].clone(),
            width: window.width,
        });
    }
    let rows: Vec<BitRow> = chars.iter().map(|c| char_row(c, window)).collect();
    Ok(ElementSolutions {
        window,
        basis: kernel_basis(&rows, window.width)
            .iter()
            .map(|v| SupportSpec::from_coords(v.ones().map(|i| i as Coord)))
            .collect(),
    })
}

/// Rank of window characters viewed as GF(2) vectors.
pub fn character_rank(chars: &[Character], window: Window) -> Result<usize, AnnihilatorError> {
    if let Some(index) = chars.iter().position(|c| !window.contains(c)) {
        return Err(AnnihilatorError::CharOutsideWindow {
            index,
            character: chars[index].clone(),
            width: window.width,
        });
    }
    let rows: Vec<BitRow> = chars.iter().map(|c| char_row(c, window)).collect();
    Ok(gf2_rank(&rows, window.width))
}

/// A sequence `A_0, A_1, …` of characters, possibly infinite.
pub trait CharacterSequence {
    fn character(&self, n: u64) -> Option<Character>;

    /// An index from which every character has `min(A_n) >= bound`, when the
    /// family guarantees `min(A_n) → ∞`.
    fn escape_index(&self, _bound: Coord) -> Option<u64> {
        None
    }
}

/// `A_n = {n}`.
#[derive(Debug, Clone, Copy, Default)]
pub struct CoordinateCharacters;

impl CharacterSequence for CoordinateCharacters {
    fn character(&self, n: u64) -> Option<Character> {
        Some(Character::from_coords([n]))
    }

    fn escape_index(&self, bound: Coord) -> Option<u64> {
        Some(bound)
    }
}

/// `A_n = {n, n+1, …, n+width-1}`.
#[derive(Debug, Clone, Copy)]
pub struct BlockCharacters {
    pub width: u64,
}

impl CharacterSequence for BlockCharacters {
    fn character(&self, n: u64) -> Option<Character> {
        Some(Character::from_coords(n..n.saturating_add(self.width.max(1))))
    }

    fn escape_index(&self, bound: Coord) -> Option<u64> {
        Some(bound)
    }
}

impl CharacterSequence for [Character] {
    fn character(&self, n: u64) -> Option<Character> {
        self.get(usize::try_from(n).ok()?).cloned()
    }
}

impl CharacterSequence for Vec<Character> {
    fn character(&self, n: u64) -> Option<Character> {
        self.as_slice().character(n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilizationEvidence {
    /// Every `n >= horizon` has `A_n(x) = +1`, proved by `min(A_n) → ∞`.
    Exact { horizon: u64 },
    /// Only the first `probed` characters were evaluated.
    Empirical { probed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stabilization {
    /// One past the last index with value `-1`, or 0.
    pub index: u64,
    pub evidence: StabilizationEvidence,
}

impl Stabilization {
    pub fn is_exact(&self) -> bool {
        matches!(self.evidence, StabilizationEvidence::Exact { .. })
    }
}

/// Evaluates `A_0(x), …, A_{budget-1}(x)` and reports where the `-1` values stop.
///
/// The verdict is exact when `x` has explicit finite support and the sequence
/// escapes past `max(supp x)` within the budget.
pub fn stabilization_index<S: CharacterSequence + ?Sized>(
    chars: &S,
    x: &SupportSpec,
    budget: u64,
) -> Stabilization {
    let budget = budget.max(1);
    let mut last_minus: Option<u64> = None;
    let mut probed = 0;
    for n in 0..budget {
        let Some(chi) = chars.character(n) else { break };
        if evaluate(&chi, x) == Sign::Minus {
            last_minus = Some(n);
        }
        probed = n + 1;
    }
    let index = last_minus.map_or(0, |n| n + 1);
    let horizon = x.as_explicit().and_then(|s| match s.last() {
        None => Some(0),
        Some(&m) => m.checked_add(1).and_then(|b| chars.escape_index(b)),
    });
    let evidence = match horizon {
        Some(h) if h <= probed => StabilizationEvidence::Exact { horizon: h },
        _ => StabilizationEvidence::Empirical { probed },
    };
    Stabilization { index, evidence }
}

/// The vector `(A_0(x), A_1(x), …)` with its stabilization point.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DiagonalImage {
    pub signs: Vec<Sign>,
    /// One past the last `-1` within the probed characters.
    pub stabilization: usize,
}

pub fn diagonal_image(chars: &[Character], x: &SupportSpec) -> DiagonalImage {
    let signs: Vec<Sign> = chars.iter().map(|c| evaluate(c, x)).collect();
    let stabilization = signs.iter().rposition(|s| s.is_minus()).map_or(0, |i| i + 1);
    DiagonalImage { signs, stabilization }
}

/// Number of distinct diagonal images over the sample.
pub fn quotient_image_count(chars: &[Character], sample: &[SupportSpec]) -> usize {
    sample
        .iter()
        .map(|x| diagonal_image(chars, x).signs)
        .collect::<HashSet<_>>()
        .len()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Separation {
    SeparatedBy { index: usize, character: Character },
    NotSeparated,
}

/// First character distinguishing each pair.
pub fn separating_check(chars: &[Character], pairs: &[(SupportSpec, SupportSpec)]) -> Vec<Separation> {
    pairs
        .iter()
        .map(|(x, y)| {
            chars
                .iter()
                .position(|c| evaluate(c, x) != evaluate(c, y))
                .map_or(Separation::NotSeparated, |index| Separation::SeparatedBy {
                    index,
                    character: chars[index].clone(),
                })
        })
        .collect()
}
