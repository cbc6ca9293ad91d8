//! Horizon-bounded shadows of the sets
//! `O_{m,N} = {x : ∃ k ≥ m, |supp(x) ∩ k| / k ≥ 1/N}` and their complements
//! `F_{m,N}`, with Monte Carlo Haar estimates checked against exact binomial
//! tails. Haar measure on `Z(2)^ω` is the product of fair bits.

use num_bigint::{BigInt, BigUint};
use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::gf2::{count_below, thinness_report, Coord, SupportSpec, Thinness};
use crate::sampling::{count_hits, sample_bits, Parallelism};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MeasureError {
    #[error("N must be at least 2 (got {0})")]
    DensityTooLow(u64),
    #[error("m must be at least 1")]
    ZeroM,
    #[error("horizon {horizon} must be at least m = {m}")]
    HorizonBelowM { m: u64, horizon: u64 },
    #[error("threshold t = {t} must lie in 0..={max}")]
    ThresholdOutOfRange { t: u64, max: u64 },
    #[error("sample count must be at least 1")]
    NoSamples,
}

/// Parameters `(m, N)` of `O_{m,N}` with the horizon `H` at which the
/// existential over `k >= m` is truncated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OmnParams {
    m: u64,
    n: u64,
    horizon: u64,
}

impl OmnParams {
    pub fn new(m: u64, n: u64, horizon: u64) -> Result<Self, MeasureError> {
        if n < 2 {
            return Err(MeasureError::DensityTooLow(n));
        }
        if m < 1 {
            return Err(MeasureError::ZeroM);
        }
        if horizon < m {
            return Err(MeasureError::HorizonBelowM { m, horizon });
        }
        Ok(OmnParams { m, n, horizon })
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    fn with_horizon(self, horizon: u64) -> Self {
        OmnParams { horizon, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OVerdict {
    /// Least `k` in `[m, H]` with `count_below(x, k) · N >= k`.
    Witness(u64),
    /// No witness up to the horizon; nothing is claimed beyond it.
    NotFoundUpTo(u64),
}

impl OVerdict {
    pub fn is_witness(&self) -> bool {
        matches!(self, OVerdict::Witness(_))
    }
}

/// Membership in `O_{m,N}` truncated at the horizon.
///
/// Between consecutive support elements the count is constant while `k`
/// grows, so only the left end of each run needs testing.
pub fn in_o(x: &SupportSpec, params: OmnParams) -> OVerdict {
    let n = u128::from(params.n);
    let mut k = params.m;
    let mut count = count_below(x, k);
    let mut elements = x.iter_from(k);
    loop {
        if k > params.horizon {
            return OVerdict::NotFoundUpTo(params.horizon);
        }
        if u128::from(count) * n >= u128::from(k) {
            return OVerdict::Witness(k);
        }
        match elements.next() {
            Some(e) if e < params.horizon => {
                k = e + 1;
                count += 1;
            }
            _ => return OVerdict::NotFoundUpTo(params.horizon),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseExtension {
    /// Agrees with the prefix, then ones on `{L, …, k-1}`.
    pub support: SupportSpec,
    pub k: u64,
    pub verdict: OVerdict,
}

/// Extends a finite prefix by one-bits until the density reaches `1/N` at
/// some `k >= max(m, L)`. The result lies in `O_{m,N}`, which is the
/// constructive content of denseness.
pub fn dense_extension(prefix: &[bool], params: OmnParams) -> DenseExtension {
    let len = prefix.len() as u64;
    let ones = prefix.iter().filter(|b| **b).count() as u64;
    let n = params.n;
    // (ones + k - L)·N >= k  ⇔  k·(N-1) >= N·(L - ones)
    let needed = (n * (len - ones)).div_ceil(n - 1);
    let k = params.m.max(len).max(needed).max(1);
    let support = SupportSpec::from_coords(
        prefix
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(|(i, _)| i as Coord)
            .chain(len..k),
    );
    let verdict = in_o(&support, params.with_horizon(params.horizon.max(k)));
    DenseExtension { support, k, verdict }
}

/// `Σ_{j >= t} C(k, j) / 2^k`, for `0 <= t <= k + 1`.
pub fn binomial_tail_exact(k: u64, t: u64) -> Result<BigRational, MeasureError> {
    if t > k + 1 {
        return Err(MeasureError::ThresholdOutOfRange { t, max: k + 1 });
    }
    let mut binom = BigUint::one();
    let mut tail = BigUint::zero();
    for j in 0..=k {
        if j >= t {
            tail += &binom;
        }
        binom = binom * BigUint::from(k - j) / BigUint::from(j + 1);
    }
    Ok(BigRational::new(BigInt::from(tail), BigInt::from(BigUint::one() << k)))
}

/// Events on uniformly random bit sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HaarEvent {
    /// `O_{m,N}` truncated at `H`, or its complement `F_{m,N}`.
    Omn { params: OmnParams, complement: bool },
    /// `count_below(x, k) >= t`, or its complement.
    Threshold { k: u64, t: u64, complement: bool },
}

impl HaarEvent {
    pub fn threshold(k: u64, t: u64, complement: bool) -> Result<Self, MeasureError> {
        if t > k + 1 {
            return Err(MeasureError::ThresholdOutOfRange { t, max: k + 1 });
        }
        Ok(HaarEvent::Threshold { k, t, complement })
    }

    fn horizon(&self) -> u64 {
        match self {
            HaarEvent::Omn { params, .. } => params.horizon,
            HaarEvent::Threshold { k, .. } => *k,
        }
    }

    /// Exact probability when the event depends on a single horizon.
    pub fn exact(&self) -> Option<BigRational> {
        let (k, t, complement) = match *self {
            HaarEvent::Omn { params, complement } if params.m == params.horizon => {
                (params.horizon, params.horizon.div_ceil(params.n), complement)
            }
            HaarEvent::Omn { .. } => return None,
            HaarEvent::Threshold { k, t, complement } => (k, t, complement),
        };
        let p = binomial_tail_exact(k, t).expect("threshold validated");
        Some(if complement { BigRational::one() - p } else { p })
    }

    /// Whether the bit prefix (length >= horizon) lies in the event.
    pub fn contains(&self, words: &[u64]) -> bool {
        let bit = |i: u64| words[(i / 64) as usize] >> (i % 64) & 1 == 1;
        match *self {
            HaarEvent::Omn { params, complement } => {
                let mut count = 0u64;
                let mut hit = false;
                for k in 1..=params.horizon {
                    count += u64::from(bit(k - 1));
                    if k >= params.m && u128::from(count) * u128::from(params.n) >= u128::from(k) {
                        hit = true;
                        break;
                    }
                }
                hit != complement
            }
            HaarEvent::Threshold { k, t, complement } => {
                let count: u64 = (0..k).map(|i| u64::from(bit(i))).sum();
                (count >= t) != complement
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub hits: u64,
    pub samples: u64,
    pub seed: u64,
    /// Normal-approximation standard error of the estimate.
    pub std_error: f64,
    pub exact: Option<BigRational>,
}

impl EstimateReport {
    pub(crate) fn new(hits: u64, samples: u64, seed: u64, exact: Option<BigRational>) -> Self {
        let p = hits as f64 / samples as f64;
        EstimateReport {
            hits,
            samples,
            seed,
            std_error: (p * (1.0 - p) / samples as f64).sqrt(),
            exact,
        }
    }

    pub fn estimate(&self) -> Ratio<u64> {
        Ratio::new(self.hits, self.samples)
    }

    pub fn estimate_f64(&self) -> f64 {
        self.hits as f64 / self.samples as f64
    }

    pub fn exact_f64(&self) -> Option<f64> {
        self.exact.as_ref().and_then(ratio_to_f64)
    }

    /// `|estimate - exact| <= sigmas · std_error`, when the exact value is known.
    pub fn within_sigmas(&self, sigmas: f64) -> Option<bool> {
        self.exact_f64()
            .map(|e| (self.estimate_f64() - e).abs() <= sigmas * self.std_error)
    }
}

pub(crate) fn ratio_to_f64(r: &BigRational) -> Option<f64> {
    Some(r.numer().to_f64()? / r.denom().to_f64()?)
}

/// Fraction of `samples` uniform bit prefixes of length `H` lying in `event`.
pub fn haar_estimate(
    event: HaarEvent,
    samples: u64,
    seed: u64,
    parallelism: Parallelism,
) -> Result<EstimateReport, MeasureError> {
    if samples == 0 {
        return Err(MeasureError::NoSamples);
    }
    let len = event.horizon() as usize;
    let hits = count_hits(samples, parallelism, |i| {
        event.contains(&sample_bits(seed, i, len.max(1)))
    });
    Ok(EstimateReport::new(hits, samples, seed, event.exact()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoverAssignment {
    /// No witness for `O_{m,N}` up to `H`: the sample sits in `F_{m,N}` so far.
    Assigned { grid_index: usize, params: OmnParams },
    /// Every grid entry found a witness; nothing is claimed.
    Insufficient,
    /// The sample is not certified thin, so it was not tested.
    NotCertifiedThin(Thinness),
}

/// Places each certified-thin sample in some `F_{m,N}` from the grid.
pub fn cover_check(samples: &[SupportSpec], grid: &[OmnParams]) -> Vec<CoverAssignment> {
    let horizon = grid.iter().map(|p| p.horizon).max().unwrap_or(1);
    samples
        .iter()
        .map(|x| {
            let verdict = thinness_report(x, horizon);
            if !verdict.is_certified_thin() {
                return CoverAssignment::NotCertifiedThin(verdict);
            }
            grid.iter()
                .position(|p| !in_o(x, *p).is_witness())
                .map_or(CoverAssignment::Insufficient, |grid_index| CoverAssignment::Assigned {
                    grid_index,
                    params: grid[grid_index],
                })
        })
        .collect()
}
