//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::collections::{BTreeSet, HashSet};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dualprobe::annihilators::{
    annihilator_of_elements, stabilization_index, CoordinateCharacters, StabilizationEvidence, Window,
};
use dualprobe::circle::{
    exact_residues, float_membership, probe_agrees, rational_membership, CircleError, DyadicReal,
    MembershipVerdict, RationalPoint, SequenceGen,
};
use dualprobe::gf2::{count_below, evaluate};
use dualprobe::measure::{dense_extension, haar_estimate, in_o, HaarEvent, OVerdict, OmnParams};
use dualprobe::sampling::Parallelism;
use dualprobe::witness::{refute_convergence, GrowthFactor, Refutation};
use dualprobe::{Character, Family, Sign, SupportSpec};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// 200 distinct characters with log-uniform coordinates below 10^6.
fn random_family(seed: u64) -> Vec<Character> {
    let mut r = rng(seed);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    while out.len() < 200 {
        let size = r.gen_range(1..=4);
        let coords: BTreeSet<u64> = (0..size)
            .map(|_| {
                let exp: f64 = r.gen_range(0.0..(1e6f64).log2());
                (exp.exp2() as u64).min(999_999)
            })
            .collect();
        let chi = Character::from_coords(coords);
        if seen.insert(chi.clone()) {
            out.push(chi);
        }
    }
    out
}

fn parity(chi: &Character, support: &HashSet<u64>) -> Sign {
    Sign::from_parity(chi.coords().iter().filter(|c| support.contains(c)).count() % 2 == 1)
}

fn refutations() -> Vec<(Refutation, Duration)> {
    (0..100)
        .map(|f| {
            let chars = random_family(1000 + f);
            let start = Instant::now();
            let r = refute_convergence(chars, 30, GrowthFactor::default(), 1 << 20).expect("valid family");
            (r, start.elapsed())
        })
        .collect()
}

fn criterion_1(runs: &[(Refutation, Duration)]) -> Verdict {
    let mut sign_failures = 0;
    let mut subset_failures = 0;
    let mut ratio_failures = 0;
    let mut short = 0;
    let mut max_selected = 0;
    let mut slowest = Duration::ZERO;
    for (r, elapsed) in runs {
        slowest = slowest.max(*elapsed);
        let sel = &r.selection;
        max_selected = max_selected.max(sel.len());
        if sel.len() < 30 {
            short += 1;
        }
        let support = r.witness.support.as_explicit().expect("explicit witness");
        let support_set: HashSet<u64> = support.iter().copied().collect();
        for (_, chi) in &sel.selected {
            if evaluate(chi, &r.witness.support) != Sign::Minus || parity(chi, &support_set) != Sign::Minus {
                sign_failures += 1;
            }
        }
        let pivots: HashSet<u64> = sel.pivots.iter().copied().collect();
        if !support.iter().all(|c| pivots.contains(c)) {
            subset_failures += 1;
        }
        if sel.pivots.windows(2).any(|w| u128::from(w[1]) < 2 * u128::from(w[0].max(1))) {
            ratio_failures += 1;
        }
    }
    let sound = sign_failures == 0 && subset_failures == 0 && ratio_failures == 0;
    let fast = slowest < Duration::from_secs(1);
    verdict(
        sound && fast && short == 0,
        format!(
            "families with 30 selections: {}/100 (max {max_selected}); sign mismatches {sign_failures}, \
             support outside pivots {subset_failures}, ratio violations {ratio_failures}, slowest {slowest:?}",
            100 - short
        ),
    )
}

fn criterion_2(runs: &[(Refutation, Duration)]) -> Verdict {
    let worst = runs
        .iter()
        .map(|(r, _)| count_below(&r.selection.pivot_set(), 1 << 20))
        .max()
        .unwrap_or(0);
    let bounds_hold = runs.iter().all(|(r, _)| r.density.holds() && r.density.bound == 21);
    verdict(worst <= 21 && bounds_hold, format!("max pivots below 2^20: {worst} (bound 21)"))
}

fn brute_force_annihilator(gens: &[SupportSpec], width: usize) -> BTreeSet<Character> {
    (0u32..1 << width)
        .map(|mask| Character::from_coords((0..width as u64).filter(|i| mask >> i & 1 == 1)))
        .filter(|chi| gens.iter().all(|x| evaluate(chi, x) == Sign::Plus))
        .collect()
}

fn generated_subgroup(basis: &[Character]) -> BTreeSet<Character> {
    let mut group = BTreeSet::from([Character::identity()]);
    for b in basis {
        let shifted: Vec<Character> = group.iter().map(|c| c.mul(b)).collect();
        group.extend(shifted);
    }
    group
}

fn criterion_3() -> Verdict {
    let start = Instant::now();
    let mut failures = Vec::new();
    for inst in 0..50u64 {
        let mut r = rng(3000 + inst);
        let width = r.gen_range(1..=12);
        let gens: Vec<SupportSpec> = (0..r.gen_range(0..=6))
            .map(|_| match r.gen_range(0..3) {
                0 => SupportSpec::from_coords((0..width as u64 + 4).filter(|_| r.gen_bool(0.4))),
                1 => SupportSpec::periodic(
                    (0..r.gen_range(0..4)).map(|_| r.gen_bool(0.5)).collect(),
                    (0..r.gen_range(1..5)).map(|_| r.gen_bool(0.5)).collect(),
                )
                .expect("non-empty pattern"),
                _ => SupportSpec::enumerated(Family::Geometric { scale: r.gen_range(1..4), ratio: 2 })
                    .expect("geometric"),
            })
            .collect();
        let basis = annihilator_of_elements(&gens, Window::new(width).expect("width >= 1"));
        let generated = generated_subgroup(&basis.basis);
        let brute = brute_force_annihilator(&gens, width);
        if generated != brute || brute.len() != 1 << basis.rank() {
            failures.push(inst);
        }
    }
    let elapsed = start.elapsed();
    verdict(
        failures.is_empty() && elapsed < Duration::from_secs(1),
        format!("50 instances, mismatches {failures:?}, total {elapsed:?}"),
    )
}

fn random_support(r: &mut ChaCha8Rng) -> SupportSpec {
    match r.gen_range(0..3) {
        0 => SupportSpec::from_coords((0..r.gen_range(0..12)).map(|_| r.gen_range(0..200u64))),
        1 => SupportSpec::periodic(
            (0..r.gen_range(0..8)).map(|_| r.gen_bool(0.5)).collect(),
            (0..r.gen_range(1..6)).map(|_| r.gen_bool(0.5)).collect(),
        )
        .expect("non-empty pattern"),
        _ => SupportSpec::enumerated(Family::Polynomial { coeffs: vec![r.gen_range(0..5), 0, 1] })
            .expect("increasing polynomial"),
    }
}

fn random_character(r: &mut ChaCha8Rng) -> Character {
    Character::from_coords((0..r.gen_range(0..10)).map(|_| r.gen_range(0..200u64)))
}

fn criterion_4() -> Verdict {
    let mut r = rng(4000);
    let mut law = 0;
    for _ in 0..10_000 {
        let (a, b, x) = (random_character(&mut r), random_character(&mut r), random_support(&mut r));
        if evaluate(&a.mul(&b), &x) != evaluate(&a, &x) * evaluate(&b, &x) {
            law += 1;
        }
    }
    let mut square = 0;
    for _ in 0..10_000 {
        let a = random_character(&mut r);
        if !a.mul(&a).is_identity() {
            square += 1;
        }
    }
    verdict(
        law == 0 && square == 0,
        format!("homomorphism failures {law}/10000, AΔA ≠ ∅ {square}/10000"),
    )
}

fn criterion_5() -> Verdict {
    let start = Instant::now();
    let params = OmnParams::new(16, 4, 16).expect("valid params");
    let report = haar_estimate(HaarEvent::Omn { params, complement: true }, 100_000, 5, Parallelism::Parallel)
        .expect("samples > 0");
    let elapsed = start.elapsed();
    let expected = BigRational::new(BigInt::from(697), BigInt::from(65536));
    let exact_ok = report.exact.as_ref() == Some(&expected);
    let within = report.within_sigmas(3.0) == Some(true);
    verdict(
        exact_ok && within && elapsed < Duration::from_secs(5),
        format!(
            "estimate {:.6} vs exact {} ≈ {:.6}, std error {:.6}, {elapsed:?}",
            report.estimate_f64(),
            expected,
            697.0 / 65536.0,
            report.std_error
        ),
    )
}

fn criterion_6() -> Verdict {
    let mut r = rng(6000);
    let mut failures = 0;
    let mut checked = 0;
    for _ in 0..100 {
        let len = r.gen_range(0..=64);
        let prefix: Vec<bool> = (0..len).map(|_| r.gen_bool(0.5)).collect();
        for m in [1, 4, 16] {
            for n in [2, 3, 4] {
                checked += 1;
                let ext = dense_extension(&prefix, OmnParams::new(m, n, m).expect("valid params"));
                let agrees = ext.support.iter_from(0).take_while(|c| *c < len).eq(
                    (0..len).filter(|i| prefix[*i as usize]),
                );
                let params = OmnParams::new(m, n, ext.k.max(m)).expect("valid params");
                let witnessed = match in_o(&ext.support, params) {
                    OVerdict::Witness(k) => k >= m && count_below(&ext.support, k) * n >= k,
                    OVerdict::NotFoundUpTo(_) => false,
                };
                if !(agrees && witnessed && ext.verdict.is_witness()) {
                    failures += 1;
                }
            }
        }
    }
    verdict(failures == 0, format!("{checked} extensions, {failures} not in O_(m,N)"))
}

fn criterion_7() -> Verdict {
    let mut r = rng(7000);
    let mut failures = 0;
    for _ in 0..100 {
        let x = SupportSpec::from_coords((0..r.gen_range(1..20)).map(|_| r.gen_range(0..4000u64)));
        let expected = x.as_explicit().and_then(|s| s.last()).map_or(0, |m| m + 1);
        let s = stabilization_index(&CoordinateCharacters, &x, 4096);
        if s.index != expected || s.evidence != (StabilizationEvidence::Exact { horizon: expected }) {
            failures += 1;
        }
    }
    verdict(failures == 0, format!("100 supports, {failures} not exactly stabilized at max+1"))
}

fn is_rotation(a: &[u64], b: &[u64]) -> bool {
    a.len() == b.len() && (0..a.len().max(1)).any(|s| a.iter().cycle().skip(s).take(a.len()).eq(b.iter()))
}

/// Least `k >= 1` with `q | k!`.
fn kempner(q: u64) -> u64 {
    let mut f = 1u64 % q;
    let mut k = 1;
    while f != 0 {
        k += 1;
        f = f * k % q;
    }
    k
}

fn criterion_8() -> Verdict {
    let geometric = SequenceGen::from_family(Family::Geometric { scale: 1, ratio: 2 }).expect("valid");
    let factorial = SequenceGen::from_family(Family::Factorial { offset: 1 }).expect("valid");
    let third = RationalPoint::new(1, 3).expect("valid");
    let five_eighths = RationalPoint::new(5, 8).expect("valid");

    let m_third = rational_membership(third, &geometric).expect("decidable");
    let third_ok = match &m_third.verdict {
        MembershipVerdict::NonMember { cycle_start, residues, .. } => {
            is_rotation(&residues[*cycle_start as usize..], &[2, 1])
        }
        _ => false,
    };
    let m_five = rational_membership(five_eighths, &geometric).expect("decidable");
    let five_ok = m_five.verdict == MembershipVerdict::Member { index: 3 };

    let mut r = rng(8000);
    let mut points = Vec::new();
    while points.len() < 100 {
        let q = r.gen_range(2..=10_000u64);
        let p = r.gen_range(1..q);
        if p.gcd(&q) == 1 {
            points.push(RationalPoint::new(p, q).expect("reduced"));
        }
    }
    // n_k = (k+1)!, so q | n_k exactly from k = kempner(q) - 1.
    let mut factorial_failures = 0;
    let mut verdicts = Vec::new();
    for x in &points {
        let m = rational_membership(*x, &factorial).expect("decidable");
        match m.verdict {
            MembershipVerdict::Member { index } if index <= x.q() && index == kempner(x.q()) - 1 => {}
            _ => factorial_failures += 1,
        }
        verdicts.push((*x, m));
    }

    let mut probe_agree = 0;
    let mut probe_refused = 0;
    let mut probe_total = 0;
    let mut at_sufficient = 0;
    let cases = [(third, &geometric, &m_third), (five_eighths, &geometric, &m_five)]
        .into_iter()
        .chain(verdicts.iter().map(|(x, m)| (*x, &factorial, m)));
    for (x, b, m) in cases {
        probe_total += 1;
        // Below 1/q, so a tail distance under eps means residue zero.
        let eps = Ratio::new(1, 2 * x.q());
        let residues = exact_residues(x, b, 100);
        let point = |bits| DyadicReal::parse(&x.to_string(), bits).expect("valid point");
        match float_membership(&point(256), b, 100, eps) {
            Ok(report) if probe_agrees(&report, m, &residues) => probe_agree += 1,
            Ok(_) => {}
            Err(CircleError::PrecisionExceeded { .. }) => probe_refused += 1,
            Err(e) => panic!("unexpected probe error: {e}"),
        }
        if float_membership(&point(1024), b, 100, eps).is_ok_and(|report| probe_agrees(&report, m, &residues)) {
            at_sufficient += 1;
        }
    }

    verdict(
        third_ok && five_ok && factorial_failures == 0 && probe_agree == probe_total,
        format!(
            "1/3 cycle ok {third_ok}, 5/8 index 3 ok {five_ok}, factorial index failures {factorial_failures}/100; \
             256-bit probes agreeing {probe_agree}/{probe_total} (refused for insufficient precision {probe_refused}); \
             1024-bit probes agreeing {at_sufficient}/{probe_total}"
        ),
    )
}

fn cli(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_dualprobe"))
        .args(args)
        .env_remove("DUALPROBE_SEED")
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn criterion_9() -> Verdict {
    let runs: [&[&str]; 2] = [
        &["--json", "--no-meta", "measure", "--m", "16", "--N", "4", "--horizon", "16", "--complement", "--samples", "50000", "--seed", "9"],
        &[
            "--json", "--no-meta", "charsub", "measure", "--seq", r#"{"family":"geometric","params":{"scale":1,"ratio":2}}"#,
            "--epsilon", "1/8", "--horizon", "6", "--samples", "20000", "--seed", "9",
        ],
    ];
    let mut identical = 0;
    for args in runs {
        let parallel = cli(args);
        let again = cli(args);
        let serial = cli(&[args, &["--serial"]].concat());
        if parallel == again && parallel == serial {
            identical += 1;
        }
    }
    verdict(identical == runs.len(), format!("{identical}/{} sampling commands byte-identical across parallel, repeat and serial runs", runs.len()))
}

fn main() -> ExitCode {
    let runs = refutations();
    let criteria: Vec<(&str, Verdict)> = vec![
        ("1 witness soundness", criterion_1(&runs)),
        ("2 thinness certificate", criterion_2(&runs)),
        ("3 annihilator oracle equivalence", criterion_3()),
        ("4 homomorphism laws", criterion_4()),
        ("5 measure crosscheck", criterion_5()),
        ("6 constructive denseness", criterion_6()),
        ("7 stabilization exactness", criterion_7()),
        ("8 circle membership", criterion_8()),
        ("9 determinism", criterion_9()),
    ];
    let mut failed = 0;
    for (name, v) in &criteria {
        println!("{} criterion {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("{}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
