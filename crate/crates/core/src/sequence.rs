//! Integer sequence families shared by enumerated supports and by the
//! sequences `B = (n_k)` defining characterized subgroups of the circle.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest search range used when proving a polynomial increasing.
const POLY_CERT_LIMIT: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SequenceError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("sequence is not strictly increasing at index {index}")]
    NotIncreasing { index: u64 },
    #[error("sequence takes a negative value at index {index}")]
    Negative { index: u64 },
    #[error("cannot certify monotonicity: {0}")]
    CannotCertify(String),
}

/// A named generator family with integer parameters.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "lowercase")]
pub enum Family {
    /// `scale * ratio^j`.
    Geometric { scale: u64, ratio: u64 },
    /// `coeffs[0] + coeffs[1]·j + coeffs[2]·j² + …`.
    Polynomial { coeffs: Vec<i64> },
    /// `(j + offset)!`.
    Factorial { offset: u64 },
    /// `s_{j+d} = coeffs[0]·s_{j+d-1} + … + coeffs[d-1]·s_j`, seeded by `initial = [s_0, …, s_{d-1}]`.
    Recurrence { coeffs: Vec<i64>, initial: Vec<i64> },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Geometric { .. } => "geometric",
            Family::Polynomial { .. } => "polynomial",
            Family::Factorial { .. } => "factorial",
            Family::Recurrence { .. } => "recurrence",
        }
    }

    /// Checks parameter ranges that do not depend on monotonicity.
    pub fn validate(&self) -> Result<(), SequenceError> {
        match self {
            Family::Geometric { scale, ratio } => {
                if *scale < 1 {
                    return Err(SequenceError::InvalidParameter("geometric scale must be >= 1".into()));
                }
                if *ratio < 2 {
                    return Err(SequenceError::InvalidParameter("geometric ratio must be >= 2".into()));
                }
            }
            Family::Polynomial { coeffs } => {
                if self.degree().unwrap_or(0) < 1 {
                    return Err(SequenceError::InvalidParameter(format!(
                        "polynomial {coeffs:?} must have degree >= 1"
                    )));
                }
            }
            Family::Factorial { .. } => {}
            Family::Recurrence { coeffs, initial } => {
                if coeffs.is_empty() {
                    return Err(SequenceError::InvalidParameter("recurrence needs at least one coefficient".into()));
                }
                if coeffs.len() != initial.len() {
                    return Err(SequenceError::InvalidParameter(format!(
                        "recurrence of order {} needs {} initial terms, got {}",
                        coeffs.len(),
                        coeffs.len(),
                        initial.len()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Degree of a polynomial family after trimming zero leading coefficients.
    pub fn degree(&self) -> Option<usize> {
        match self {
            Family::Polynomial { coeffs } => {
                Some(coeffs.iter().rposition(|c| *c != 0).unwrap_or(0))
            }
            _ => None,
        }
    }

    /// Infinite iterator over the terms `s_0, s_1, …`.
    pub fn terms(&self) -> Terms {
        let state = match self {
            Family::Geometric { scale, ratio } => TermState::Geometric {
                next: BigInt::from(*scale),
                ratio: BigInt::from(*ratio),
            },
            Family::Polynomial { coeffs } => TermState::Polynomial {
                coeffs: coeffs.iter().map(|c| BigInt::from(*c)).collect(),
                j: 0,
            },
            Family::Factorial { offset } => TermState::Factorial {
                next: factorial(*offset),
                n: *offset,
            },
            Family::Recurrence { coeffs, initial } => TermState::Recurrence {
                coeffs: coeffs.iter().map(|c| BigInt::from(*c)).collect(),
                window: initial.iter().map(|c| BigInt::from(*c)).collect(),
            },
        };
        Terms { state }
    }

    /// The `j`-th term. Linear in `j` for recurrences.
    pub fn term(&self, j: u64) -> BigInt {
        match self {
            Family::Geometric { scale, ratio } => {
                BigInt::from(*scale) * num_traits::pow(BigInt::from(*ratio), j as usize)
            }
            Family::Polynomial { coeffs } => eval_poly(coeffs, &BigInt::from(j)),
            Family::Factorial { offset } => factorial(j + offset),
            Family::Recurrence { .. } => self.terms().nth(j as usize).expect("infinite iterator"),
        }
    }

    /// Proves that the sequence is non-negative and strictly increasing for
    /// every index, not just a probed prefix.
    pub fn certify_increasing(&self) -> Result<(), SequenceError> {
        self.validate()?;
        match self {
            Family::Geometric { .. } => Ok(()),
            Family::Factorial { offset } => {
                if *offset == 0 {
                    Err(SequenceError::NotIncreasing { index: 1 })
                } else {
                    Ok(())
                }
            }
            Family::Polynomial { coeffs } => certify_polynomial(coeffs),
            Family::Recurrence { coeffs, initial } => certify_recurrence(coeffs, initial),
        }
    }

    /// Checks strict increase and non-negativity over the first `count` terms.
    pub fn check_increasing_prefix(&self, count: u64) -> Result<(), SequenceError> {
        let mut prev: Option<BigInt> = None;
        for (j, t) in self.terms().take(count as usize).enumerate() {
            if t.is_negative() {
                return Err(SequenceError::Negative { index: j as u64 });
            }
            if let Some(p) = &prev {
                if &t <= p {
                    return Err(SequenceError::NotIncreasing { index: j as u64 });
                }
            }
            prev = Some(t);
        }
        Ok(())
    }
}

pub struct Terms {
    state: TermState,
}

enum TermState {
    Geometric { next: BigInt, ratio: BigInt },
    Polynomial { coeffs: Vec<BigInt>, j: u64 },
    Factorial { next: BigInt, n: u64 },
    Recurrence { coeffs: Vec<BigInt>, window: std::collections::VecDeque<BigInt> },
}

impl Iterator for Terms {
    type Item = BigInt;

    fn next(&mut self) -> Option<BigInt> {
        match &mut self.state {
            TermState::Geometric { next, ratio } => {
                let out = next.clone();
                *next = &*next * &*ratio;
                Some(out)
            }
            TermState::Polynomial { coeffs, j } => {
                let out = eval_poly_big(coeffs, &BigInt::from(*j));
                *j += 1;
                Some(out)
            }
            TermState::Factorial { next, n } => {
                let out = next.clone();
                *n += 1;
                *next = &*next * BigInt::from(*n);
                Some(out)
            }
            TermState::Recurrence { coeffs, window } => {
                let d = coeffs.len();
                let fresh: BigInt = coeffs
                    .iter()
                    .enumerate()
                    .map(|(i, a)| a * &window[d - 1 - i])
                    .sum();
                window.push_back(fresh);
                window.pop_front()
            }
        }
    }
}

pub(crate) fn factorial(n: u64) -> BigInt {
    (2..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

pub(crate) fn eval_poly(coeffs: &[i64], x: &BigInt) -> BigInt {
    coeffs
        .iter()
        .rev()
        .fold(BigInt::zero(), |acc, c| acc * x + BigInt::from(*c))
}

fn eval_poly_big(coeffs: &[BigInt], x: &BigInt) -> BigInt {
    coeffs.iter().rev().fold(BigInt::zero(), |acc, c| acc * x + c)
}

/// Coefficients of `P(j+1) - P(j)`, ascending.
fn forward_difference(coeffs: &[i64]) -> Vec<BigInt> {
    let n = coeffs.len();
    let mut shifted = vec![BigInt::zero(); n];
    // (j+1)^i = Σ_t C(i,t) j^t
    for (i, c) in coeffs.iter().enumerate() {
        let mut binom = BigInt::one();
        for (t, slot) in shifted.iter_mut().enumerate().take(i + 1) {
            *slot += BigInt::from(*c) * &binom;
            binom = binom * BigInt::from(i - t) / BigInt::from(t + 1);
        }
    }
    let mut diff: Vec<BigInt> = shifted
        .into_iter()
        .zip(coeffs)
        .map(|(s, c)| s - BigInt::from(*c))
        .collect();
    while diff.len() > 1 && diff.last().is_some_and(Zero::is_zero) {
        diff.pop();
    }
    diff
}

fn certify_polynomial(coeffs: &[i64]) -> Result<(), SequenceError> {
    if coeffs[0] < 0 {
        return Err(SequenceError::Negative { index: 0 });
    }
    let diff = forward_difference(coeffs);
    let lead = diff.last().cloned().unwrap_or_default();
    if !lead.is_positive() {
        return Err(SequenceError::CannotCertify(
            "polynomial is eventually decreasing".into(),
        ));
    }
    // For j >= 1 and j > Σ|d_i| / d_n the leading term dominates.
    let rest: BigInt = diff[..diff.len() - 1].iter().map(|d| d.abs()).sum();
    let bound = (&rest / &lead) + BigInt::one();
    let bound = bound.to_u64().filter(|b| *b <= POLY_CERT_LIMIT).ok_or_else(|| {
        SequenceError::CannotCertify(format!("dominance bound {bound} exceeds search limit"))
    })?;
    for j in 0..=bound {
        if !eval_poly_big(&diff, &BigInt::from(j)).is_positive() {
            return Err(SequenceError::NotIncreasing { index: j + 1 });
        }
    }
    Ok(())
}

/// With non-negative coefficients the differences `s_{j+1} - s_j` obey the
/// same recurrence, so positivity of the first `d` differences propagates.
fn certify_recurrence(coeffs: &[i64], initial: &[i64]) -> Result<(), SequenceError> {
    if coeffs.iter().any(|a| *a < 0) {
        return Err(SequenceError::CannotCertify(
            "recurrence has negative coefficients".into(),
        ));
    }
    if coeffs.iter().all(|a| *a == 0) {
        return Err(SequenceError::CannotCertify("recurrence is identically zero".into()));
    }
    let family = Family::Recurrence {
        coeffs: coeffs.to_vec(),
        initial: initial.to_vec(),
    };
    family.check_increasing_prefix(initial.len() as u64 + 1)
}
