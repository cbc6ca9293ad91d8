use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use num_rational::Ratio;
use serde_json::{json, Map, Value};

use dualprobe::annihilators::{
    annihilator_of_characters, annihilator_of_elements, diagonal_image, quotient_image_count,
    separating_check, stabilization_index, CoordinateCharacters, Separation, StabilizationEvidence,
    Window,
};
use dualprobe::circle::{
    exact_residues, float_membership, measure_probe, rational_membership, DyadicReal, Membership,
    MembershipVerdict, Monotonicity, ProbeVerdict, RationalPoint, SequenceGen,
};
use dualprobe::format::{
    json_big, json_coords, json_uint, parse_characters, parse_sequence, parse_support_pairs,
    parse_supports, support_to_json,
};
use dualprobe::gf2::{thinness_report, Thinness};
use dualprobe::measure::{
    cover_check, dense_extension, haar_estimate, CoverAssignment, EstimateReport, HaarEvent,
    MeasureError, OVerdict, OmnParams,
};
use dualprobe::sampling::Parallelism;
use dualprobe::witness::{refute_convergence, GrowthFactor, WitnessError};
use dualprobe::{Character, Sign};

pub const SCHEMA: &str = "dualprobe/v1";

#[derive(Debug, Parser)]
#[command(name = "dualprobe", version, about = "Exact computations on duals of subgroups of Z(2)^ω and the circle")]
pub struct RunConfig {
    #[command(flatten)]
    pub output: OutputOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct OutputOpts {
    /// Emit a JSON report instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Exit with status 3 when a verdict is horizon-bounded or inconclusive.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Omit the version and timestamp block from JSON output.
    #[arg(long, global = true)]
    pub no_meta: bool,
    /// Run Monte Carlo sampling on one thread.
    #[arg(long, global = true)]
    pub serial: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select a pivoted subsequence and build an element on which it stays at -1.
    Witness {
        file: PathBuf,
        #[arg(long, default_value_t = 20)]
        max_select: usize,
        /// Ratio between consecutive pivots, as an integer or p/q (at least 2).
        #[arg(long, default_value = "2")]
        growth_factor: String,
        /// Horizon for the pivot-count bound.
        #[arg(long, default_value_t = 1 << 20)]
        horizon: u64,
        /// Candidate limit character; the sequence is multiplied by it first.
        #[arg(long)]
        limit: Option<String>,
    },
    /// Characters on the window vanishing on every generator.
    AnnihilateElements {
        file: PathBuf,
        #[arg(long)]
        window: usize,
    },
    /// Window-supported elements on which every character is +1.
    AnnihilateChars {
        file: PathBuf,
        #[arg(long)]
        window: usize,
    },
    /// Sign vectors of elements under a character sequence.
    Diagonal {
        /// Element file (JSON supports).
        elements: PathBuf,
        /// Character file; without it, coordinate characters A_n = {n} are used.
        #[arg(long)]
        chars: Option<PathBuf>,
        /// Number of coordinate characters probed.
        #[arg(long, default_value_t = 256)]
        budget: u64,
    },
    /// First character separating each pair of elements.
    Separate {
        /// Pair file (JSON array of two-element arrays).
        pairs: PathBuf,
        #[arg(long)]
        chars: PathBuf,
    },
    /// Monte Carlo Haar measure of O_{m,N} truncated at the horizon.
    Measure {
        #[arg(long)]
        m: u64,
        #[arg(long = "N")]
        n: u64,
        #[arg(long)]
        horizon: u64,
        /// Measure the complement F_{m,N}.
        #[arg(long)]
        complement: bool,
        #[arg(long)]
        samples: u64,
        #[arg(long, env = "DUALPROBE_SEED")]
        seed: Option<u64>,
    },
    /// Place thin samples in some F_{m,N} of a grid.
    Cover {
        file: PathBuf,
        /// Grid entries m:N:H, comma separated or repeated.
        #[arg(long, required = true, value_delimiter = ',')]
        grid: Vec<String>,
    },
    /// Extend a finite prefix into O_{m,N}.
    DenseExt {
        /// Prefix bits, e.g. 0110.
        #[arg(long)]
        prefix: String,
        #[arg(long)]
        m: u64,
        #[arg(long = "N")]
        n: u64,
        #[arg(long)]
        horizon: Option<u64>,
    },
    /// Thinness certificate or exact density profile.
    Thinness {
        file: PathBuf,
        #[arg(long, default_value_t = 1 << 20)]
        horizon: u64,
    },
    /// Characterized subgroups of the circle.
    Charsub {
        #[command(subcommand)]
        command: CharsubCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum CharsubCommand {
    /// Exact membership of a rational point.
    Member {
        /// Point as p/q.
        #[arg(long)]
        x: String,
        /// Sequence object, inline JSON or a file path.
        #[arg(long)]
        seq: String,
    },
    /// Fixed-precision probe of the distances ‖n_k·x‖.
    Probe {
        /// Point as p/q or a decimal in [0, 1).
        #[arg(long)]
        x: String,
        #[arg(long)]
        seq: String,
        #[arg(long, default_value_t = 100)]
        horizon: u64,
        /// Tail tolerance, as p/q.
        #[arg(long, default_value = "1/1000")]
        tolerance: String,
        #[arg(long, default_value_t = 256)]
        precision: u64,
    },
    /// Monte Carlo measure of {x : ‖n_k·x‖ <= eps for k < horizon}.
    Measure {
        #[arg(long)]
        seq: String,
        #[arg(long)]
        epsilon: String,
        #[arg(long)]
        horizon: u64,
        #[arg(long)]
        samples: u64,
        #[arg(long, env = "DUALPROBE_SEED")]
        seed: Option<u64>,
        #[arg(long, default_value_t = 256)]
        precision: u64,
    },
}

/// A failure the run could not recover from. Input errors exit with 2.
#[derive(Debug, thiserror::Error)]
#[error("internal error: {0}")]
pub struct InternalError(String);

#[derive(Debug)]
pub struct Outcome {
    pub text: String,
    pub inconclusive: bool,
}

/// A command's result, rendered either way.
struct Report {
    command: &'static str,
    body: Map<String, Value>,
    human: String,
    inconclusive: bool,
}

pub fn run(config: &RunConfig) -> Result<Outcome> {
    let parallelism = if config.output.serial { Parallelism::Serial } else { Parallelism::Parallel };
    let report = match &config.command {
        Command::Witness { file, max_select, growth_factor, horizon, limit } => {
            witness(file, *max_select, growth_factor, *horizon, limit.as_deref())?
        }
        Command::AnnihilateElements { file, window } => annihilate_elements(file, *window)?,
        Command::AnnihilateChars { file, window } => annihilate_chars(file, *window)?,
        Command::Diagonal { elements, chars, budget } => diagonal(elements, chars.as_deref(), *budget)?,
        Command::Separate { pairs, chars } => separate(pairs, chars)?,
        Command::Measure { m, n, horizon, complement, samples, seed } => {
            measure(*m, *n, *horizon, *complement, *samples, require_seed(*seed)?, parallelism)?
        }
        Command::Cover { file, grid } => cover(file, grid)?,
        Command::DenseExt { prefix, m, n, horizon } => dense_ext(prefix, *m, *n, *horizon)?,
        Command::Thinness { file, horizon } => thinness(file, *horizon)?,
        Command::Charsub { command } => match command {
            CharsubCommand::Member { x, seq } => charsub_member(x, seq)?,
            CharsubCommand::Probe { x, seq, horizon, tolerance, precision } => {
                charsub_probe(x, seq, *horizon, tolerance, *precision)?
            }
            CharsubCommand::Measure { seq, epsilon, horizon, samples, seed, precision } => charsub_measure(
                seq,
                epsilon,
                *horizon,
                *samples,
                require_seed(*seed)?,
                *precision,
                parallelism,
            )?,
        },
    };
    let text = if config.output.json {
        let mut out = Map::new();
        out.insert("schema".into(), json!(SCHEMA));
        out.insert("command".into(), json!(report.command));
        out.insert("inconclusive".into(), json!(report.inconclusive));
        if !config.output.no_meta {
            out.insert(
                "meta".into(),
                json!({
                    "version": env!("CARGO_PKG_VERSION"),
                    "generated_at": chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                }),
            );
        }
        out.extend(report.body);
        let mut s = serde_json::to_string_pretty(&Value::Object(out))?;
        s.push('\n');
        s
    } else {
        report.human
    };
    Ok(Outcome { text, inconclusive: report.inconclusive })
}

fn require_seed(seed: Option<u64>) -> Result<u64> {
    seed.ok_or_else(|| anyhow!("--seed is required for sampling (or set DUALPROBE_SEED)"))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn flag<E: std::fmt::Display>(flag: &str) -> impl FnOnce(E) -> anyhow::Error + '_ {
    move |e| anyhow!("{flag}: {e}")
}

fn omn_params(m: u64, n: u64, horizon: u64) -> Result<OmnParams> {
    OmnParams::new(m, n, horizon).map_err(|e| {
        let name = match e {
            MeasureError::DensityTooLow(_) => "--N",
            MeasureError::ZeroM => "--m",
            _ => "--horizon",
        };
        anyhow!("{name}: {e}")
    })
}

fn parse_ratio(s: &str, name: &str) -> Result<Ratio<u64>> {
    let s = s.trim();
    let parsed = match s.split_once('/') {
        Some((p, q)) => p.trim().parse::<u64>().ok().zip(q.trim().parse::<u64>().ok()),
        None => s.parse::<u64>().ok().map(|p| (p, 1)),
    };
    match parsed {
        Some((_, 0)) | None => bail!("{name}: cannot parse {s:?} as an integer or p/q"),
        Some((p, q)) => Ok(Ratio::new(p, q)),
    }
}

fn sequence_arg(arg: &str) -> Result<SequenceGen> {
    let (text, source) = if arg.trim_start().starts_with('{') {
        (arg.to_string(), "--seq".to_string())
    } else {
        (read(Path::new(arg))?, arg.to_string())
    };
    Ok(parse_sequence(&text, &source)?)
}

fn characters(path: &Path) -> Result<Vec<Character>> {
    Ok(parse_characters(&read(path)?, &path.display().to_string())?)
}

fn sign_list(signs: &[Sign]) -> Value {
    Value::Array(signs.iter().map(|s| json!(s.as_i8())).collect())
}

fn sign_string(signs: &[Sign]) -> String {
    signs.iter().map(|s| if s.is_minus() { '-' } else { '+' }).collect()
}

fn witness(
    file: &Path,
    max_select: usize,
    growth_factor: &str,
    horizon: u64,
    limit: Option<&str>,
) -> Result<Report> {
    let source = file.display().to_string();
    let chars = characters(file)?;
    if chars.is_empty() {
        bail!("{source}: no characters");
    }
    let g = GrowthFactor::new(parse_ratio(growth_factor, "--growth-factor")?).map_err(flag("--growth-factor"))?;
    if horizon == 0 {
        bail!("--horizon: must be at least 1");
    }
    // Stream positions are file lines, 0-based.
    let (lines, stream): (Vec<usize>, Vec<Character>) = match limit {
        Some(text) => {
            let l = parse_characters(text, "--limit")?;
            let l = match l.as_slice() {
                [one] => one.clone(),
                _ => bail!("--limit: expected one character"),
            };
            chars
                .iter()
                .map(|c| c.mul(&l))
                .enumerate()
                .filter(|(_, c)| !c.is_identity())
                .unzip()
        }
        None => chars.into_iter().enumerate().unzip(),
    };
    let refutation = refute_convergence(stream, max_select, g, horizon).map_err(|e| match e {
        WitnessError::DuplicateInput { index, first } => {
            anyhow!("{source}:{}: duplicate of line {}", lines[index] + 1, lines[first] + 1)
        }
        WitnessError::IdentityInput { index } => anyhow!(
            "{source}:{}: the identity character cannot occur in a sequence tested against the identity",
            lines[index] + 1
        ),
        other => InternalError(other.to_string()).into(),
    })?;
    let sel = &refutation.selection;
    let support = refutation.witness.support.as_explicit().expect("witness support is explicit");
    let d = refutation.density;

    let rows: Vec<Value> = refutation
        .witness
        .guarantees
        .iter()
        .zip(&sel.pivots)
        .map(|(gr, pivot)| {
            json!({
                "index": lines[gr.index],
                "character": json_coords(gr.character.coords()),
                "pivot": json_uint(*pivot),
                "sign": gr.sign.as_i8(),
            })
        })
        .collect();
    let mut body = Map::new();
    body.insert(
        "params".into(),
        json!({
            "max_select": max_select,
            "growth_factor": g.ratio().to_string(),
            "horizon": json_uint(horizon),
            "limit": limit.map(str::trim),
        }),
    );
    body.insert("selected_indices".into(), json!(sel.selected.iter().map(|(i, _)| lines[*i]).collect::<Vec<_>>()));
    body.insert("pivots".into(), json_coords(&sel.pivots));
    body.insert("skipped".into(), json_uint(sel.skipped));
    body.insert("complete".into(), json!(refutation.complete));
    body.insert("note".into(), json!(refutation.note()));
    body.insert("witness_support".into(), json_coords(support));
    body.insert("guarantees".into(), Value::Array(rows));
    body.insert(
        "density".into(),
        json!({
            "horizon": json_uint(d.horizon),
            "count": json_uint(d.count),
            "bound": json_uint(d.bound),
            "holds": d.holds(),
        }),
    );

    let mut human = String::new();
    writeln!(human, "selected {} of the input (skipped {}), growth factor {}", sel.len(), sel.skipped, g.ratio())?;
    writeln!(human, "witness support: {}", Character::from_coords(support.iter().copied()))?;
    writeln!(human, "{:>6}  {:>12}  {:>4}  character", "index", "pivot", "sign")?;
    for (gr, pivot) in refutation.witness.guarantees.iter().zip(&sel.pivots) {
        writeln!(human, "{:>6}  {:>12}  {:>4}  {}", lines[gr.index], pivot, gr.sign.as_i8(), gr.character)?;
    }
    writeln!(
        human,
        "pivots below {}: {} (bound {}, {})",
        d.horizon,
        d.count,
        d.bound,
        if d.holds() { "holds" } else { "VIOLATED" }
    )?;
    if let Some(note) = refutation.note() {
        writeln!(human, "note: {note}")?;
    }
    Ok(Report { command: "witness", body, human, inconclusive: !refutation.complete })
}

fn window(width: usize) -> Result<Window> {
    Window::new(width).map_err(flag("--window"))
}

fn annihilate_elements(file: &Path, width: usize) -> Result<Report> {
    let w = window(width)?;
    let gens = parse_supports(&read(file)?, &file.display().to_string())?;
    let basis = annihilator_of_elements(&gens, w);
    let mut body = Map::new();
    body.insert("window".into(), json!(width));
    body.insert("generators".into(), json!(gens.len()));
    body.insert("rank".into(), json!(basis.rank()));
    body.insert("basis".into(), Value::Array(basis.basis.iter().map(|c| json_coords(c.coords())).collect()));
    let mut human = format!("annihilator on window {width}: rank {}, {} characters\n", basis.rank(), 1u128 << basis.rank().min(127));
    for c in &basis.basis {
        writeln!(human, "  {c}")?;
    }
    Ok(Report { command: "annihilate-elements", body, human, inconclusive: false })
}

fn annihilate_chars(file: &Path, width: usize) -> Result<Report> {
    let w = window(width)?;
    let chars = characters(file)?;
    let sols = annihilator_of_characters(&chars, w).map_err(flag("--window"))?;
    let rows: Vec<Value> = sols
        .basis
        .iter()
        .map(|x| json_coords(x.as_explicit().expect("window elements are explicit")))
        .collect();
    let mut body = Map::new();
    body.insert("window".into(), json!(width));
    body.insert("characters".into(), json!(chars.len()));
    body.insert("rank".into(), json!(sols.rank()));
    body.insert("basis".into(), Value::Array(rows));
    let mut human = format!("common kernel on window {width}: rank {}\n", sols.rank());
    for x in &sols.basis {
        let s = x.as_explicit().expect("window elements are explicit");
        writeln!(human, "  {}", Character::from_coords(s.iter().copied()))?;
    }
    Ok(Report { command: "annihilate-chars", body, human, inconclusive: false })
}

fn diagonal(elements: &Path, chars: Option<&Path>, budget: u64) -> Result<Report> {
    let xs = parse_supports(&read(elements)?, &elements.display().to_string())?;
    let mut body = Map::new();
    let mut human = String::new();
    let mut inconclusive = false;
    match chars {
        Some(path) => {
            let chars = characters(path)?;
            let rows: Vec<Value> = xs
                .iter()
                .map(|x| {
                    let img = diagonal_image(&chars, x);
                    let _ = writeln!(human, "{}  stabilizes after {}", sign_string(&img.signs), img.stabilization);
                    json!({"signs": sign_list(&img.signs), "stabilization": img.stabilization})
                })
                .collect();
            let distinct = quotient_image_count(&chars, &xs);
            writeln!(human, "distinct images: {distinct} of {}", xs.len())?;
            body.insert("characters".into(), json!("file"));
            body.insert("images".into(), Value::Array(rows));
            body.insert("distinct_images".into(), json!(distinct));
        }
        None => {
            if budget == 0 {
                bail!("--budget: must be at least 1");
            }
            let rows: Vec<Value> = xs
                .iter()
                .map(|x| {
                    let s = stabilization_index(&CoordinateCharacters, x, budget);
                    let evidence = match s.evidence {
                        StabilizationEvidence::Exact { horizon } => {
                            json!({"kind": "exact", "horizon": json_uint(horizon)})
                        }
                        StabilizationEvidence::Empirical { probed } => {
                            inconclusive = true;
                            json!({"kind": "empirical", "probed": json_uint(probed)})
                        }
                    };
                    let _ = writeln!(
                        human,
                        "stabilizes at {} ({})",
                        s.index,
                        if s.is_exact() { "exact" } else { "empirical, within the budget" }
                    );
                    json!({"stabilization": json_uint(s.index), "evidence": evidence})
                })
                .collect();
            body.insert("characters".into(), json!("coordinate"));
            body.insert("budget".into(), json_uint(budget));
            body.insert("images".into(), Value::Array(rows));
        }
    }
    Ok(Report { command: "diagonal", body, human, inconclusive })
}

fn separate(pairs: &Path, chars: &Path) -> Result<Report> {
    let pairs = parse_support_pairs(&read(pairs)?, &pairs.display().to_string())?;
    let chars = characters(chars)?;
    let results = separating_check(&chars, &pairs);
    let mut human = String::new();
    let mut inconclusive = false;
    let rows: Vec<Value> = results
        .iter()
        .enumerate()
        .map(|(i, r)| match r {
            Separation::SeparatedBy { index, character } => {
                let _ = writeln!(human, "pair {i}: separated by character {index} = {character}");
                json!({"separated": true, "index": index, "character": json_coords(character.coords())})
            }
            Separation::NotSeparated => {
                inconclusive = true;
                let _ = writeln!(human, "pair {i}: not separated by the given characters");
                json!({"separated": false})
            }
        })
        .collect();
    let mut body = Map::new();
    body.insert("results".into(), Value::Array(rows));
    Ok(Report { command: "separate", body, human, inconclusive })
}

fn estimate_json(r: &EstimateReport) -> Map<String, Value> {
    let mut body = Map::new();
    body.insert("samples".into(), json_uint(r.samples));
    body.insert("seed".into(), json_uint(r.seed));
    body.insert("hits".into(), json_uint(r.hits));
    body.insert("estimate".into(), json!(r.estimate_f64()));
    body.insert("std_error".into(), json!(r.std_error));
    body.insert("exact".into(), json!(r.exact.as_ref().map(ToString::to_string)));
    body.insert("within_3_sigma".into(), json!(r.within_sigmas(3.0)));
    body
}

fn estimate_text(r: &EstimateReport) -> String {
    let mut s = format!(
        "estimate {:.6} ± {:.6} ({} of {} samples, seed {})\n",
        r.estimate_f64(),
        r.std_error,
        r.hits,
        r.samples,
        r.seed
    );
    if let (Some(exact), Some(within)) = (&r.exact, r.within_sigmas(3.0)) {
        let _ = writeln!(s, "exact {exact}, within 3 standard errors: {within}");
    }
    s
}

fn measure(
    m: u64,
    n: u64,
    horizon: u64,
    complement: bool,
    samples: u64,
    seed: u64,
    parallelism: Parallelism,
) -> Result<Report> {
    let params = omn_params(m, n, horizon)?;
    let r = haar_estimate(HaarEvent::Omn { params, complement }, samples, seed, parallelism).map_err(flag("--samples"))?;
    let mut body = estimate_json(&r);
    body.insert(
        "event".into(),
        json!({"m": json_uint(m), "N": json_uint(n), "horizon": json_uint(horizon), "complement": complement}),
    );
    let human = format!(
        "{} with m = {m}, N = {n}, horizon {horizon}\n{}",
        if complement { "F" } else { "O" },
        estimate_text(&r)
    );
    Ok(Report { command: "measure", body, human, inconclusive: false })
}

fn parse_grid(entries: &[String]) -> Result<Vec<OmnParams>> {
    entries
        .iter()
        .map(|e| {
            let parts: Vec<&str> = e.trim().split(':').collect();
            let nums: Option<Vec<u64>> = parts.iter().map(|p| p.parse().ok()).collect();
            match nums.as_deref() {
                Some([m, n, h]) => omn_params(*m, *n, *h).map_err(|err| anyhow!("--grid {e:?}: {err}")),
                _ => bail!("--grid: expected m:N:H, got {e:?}"),
            }
        })
        .collect()
}

fn thinness_json(t: &Thinness) -> Value {
    match t {
        Thinness::CertifiedThin { reason } => json!({"kind": "certified_thin", "reason": reason}),
        Thinness::NotThin { limit_density } => {
            json!({"kind": "not_thin", "limit_density": limit_density.to_string()})
        }
        Thinness::Empirical { profile } => json!({
            "kind": "empirical",
            "profile": profile
                .iter()
                .map(|(k, d)| json!({"k": json_uint(*k), "density": d.to_string()}))
                .collect::<Vec<_>>(),
        }),
    }
}

fn thinness_text(t: &Thinness) -> String {
    match t {
        Thinness::CertifiedThin { reason } => format!("certified thin ({reason})"),
        Thinness::NotThin { limit_density } => format!("not thin (limit density {limit_density})"),
        Thinness::Empirical { profile } => {
            let cells: Vec<String> = profile.iter().map(|(k, d)| format!("{k}:{d}")).collect();
            format!("no certificate; density profile {}", cells.join(" "))
        }
    }
}

fn cover(file: &Path, grid: &[String]) -> Result<Report> {
    let grid = parse_grid(grid)?;
    let samples = parse_supports(&read(file)?, &file.display().to_string())?;
    let mut human = String::new();
    let mut inconclusive = false;
    let rows: Vec<Value> = cover_check(&samples, &grid)
        .iter()
        .enumerate()
        .map(|(i, a)| match a {
            CoverAssignment::Assigned { grid_index, params } => {
                let _ = writeln!(
                    human,
                    "sample {i}: in F with m = {}, N = {} up to {}",
                    params.m(),
                    params.n(),
                    params.horizon()
                );
                json!({"status": "assigned", "grid_index": grid_index})
            }
            CoverAssignment::Insufficient => {
                inconclusive = true;
                let _ = writeln!(human, "sample {i}: every grid entry has a witness");
                json!({"status": "insufficient"})
            }
            CoverAssignment::NotCertifiedThin(t) => {
                inconclusive = true;
                let _ = writeln!(human, "sample {i}: not tested, {}", thinness_text(t));
                json!({"status": "not_certified_thin", "thinness": thinness_json(t)})
            }
        })
        .collect();
    let mut body = Map::new();
    body.insert(
        "grid".into(),
        Value::Array(
            grid.iter()
                .map(|p| json!({"m": json_uint(p.m()), "N": json_uint(p.n()), "horizon": json_uint(p.horizon())}))
                .collect(),
        ),
    );
    body.insert("assignments".into(), Value::Array(rows));
    Ok(Report { command: "cover", body, human, inconclusive })
}

fn verdict_json(v: OVerdict) -> Value {
    match v {
        OVerdict::Witness(k) => json!({"kind": "witness", "k": json_uint(k)}),
        OVerdict::NotFoundUpTo(h) => json!({"kind": "not_found", "horizon": json_uint(h)}),
    }
}

fn dense_ext(prefix: &str, m: u64, n: u64, horizon: Option<u64>) -> Result<Report> {
    let bits = prefix
        .chars()
        .enumerate()
        .map(|(i, c)| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => bail!("--prefix: position {i}: {other:?} is not a bit"),
        })
        .collect::<Result<Vec<bool>>>()?;
    let params = omn_params(m, n, horizon.unwrap_or(m))?;
    let ext = dense_extension(&bits, params);
    let support = ext.support.as_explicit().expect("extension is explicit");
    let mut body = Map::new();
    body.insert("prefix".into(), json!(prefix));
    body.insert("k".into(), json_uint(ext.k));
    body.insert("support".into(), json_coords(support));
    body.insert("verdict".into(), verdict_json(ext.verdict));
    let human = format!(
        "extended to k = {}: support {}\n{}\n",
        ext.k,
        Character::from_coords(support.iter().copied()),
        match ext.verdict {
            OVerdict::Witness(k) => format!("in O with witness k = {k}"),
            OVerdict::NotFoundUpTo(h) => format!("no witness up to {h}"),
        }
    );
    Ok(Report { command: "dense-ext", body, human, inconclusive: !ext.verdict.is_witness() })
}

fn thinness(file: &Path, horizon: u64) -> Result<Report> {
    if horizon == 0 {
        bail!("--horizon: must be at least 1");
    }
    let xs = parse_supports(&read(file)?, &file.display().to_string())?;
    let mut human = String::new();
    let mut inconclusive = false;
    let rows: Vec<Value> = xs
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let t = thinness_report(x, horizon);
            inconclusive |= matches!(t, Thinness::Empirical { .. });
            let _ = writeln!(human, "support {i}: {}", thinness_text(&t));
            let mut v = thinness_json(&t);
            v["support"] = support_to_json(x);
            v
        })
        .collect();
    let mut body = Map::new();
    body.insert("horizon".into(), json_uint(horizon));
    body.insert("reports".into(), Value::Array(rows));
    Ok(Report { command: "thinness", body, human, inconclusive })
}

fn sequence_json(b: &SequenceGen) -> Value {
    let monotonicity = match b.monotonicity() {
        Monotonicity::Certified => json!({"kind": "certified"}),
        Monotonicity::CheckedPrefix { terms } => json!({"kind": "checked_prefix", "terms": json_uint(terms)}),
    };
    let family = match b.family() {
        Some(f) => serde_json::to_value(f).expect("family serializes"),
        None => json!({
            "family": "explicit",
            "params": {"terms": b.explicit_terms().unwrap_or_default().iter().map(json_big).collect::<Vec<_>>()},
        }),
    };
    json!({"sequence": family, "monotonicity": monotonicity})
}

fn membership_json(m: &Membership) -> Value {
    match &m.verdict {
        MembershipVerdict::Member { index } => json!({"member": true, "index": json_uint(*index)}),
        MembershipVerdict::NonMember { cycle_start, cycle_len, residues } => json!({
            "member": false,
            "cycle_start": json_uint(*cycle_start),
            "cycle_len": json_uint(*cycle_len),
            "residues": json_coords(residues),
        }),
    }
}

fn charsub_member(x: &str, seq: &str) -> Result<Report> {
    let point: RationalPoint = x.parse().map_err(flag("--x"))?;
    let b = sequence_arg(seq)?;
    let m = rational_membership(point, &b).map_err(flag("--seq"))?;
    let mut body = Map::new();
    body.insert("x".into(), json!(point.to_string()));
    body.extend(obj(sequence_json(&b)));
    body.insert("verdict".into(), membership_json(&m));
    let mut human = match &m.verdict {
        MembershipVerdict::Member { index } => format!("{point} is a member: q divides n_k for every k >= {index}\n"),
        MembershipVerdict::NonMember { cycle_start, cycle_len, residues } => {
            let cycle: Vec<String> = residues[*cycle_start as usize..].iter().map(u64::to_string).collect();
            format!(
                "{point} is not a member: n_k·p mod q cycles ({}) from k = {cycle_start}, length {cycle_len}\n",
                cycle.join(", ")
            )
        }
    };
    let unproved = matches!(m.monotonicity, Monotonicity::CheckedPrefix { .. });
    if let Monotonicity::CheckedPrefix { terms } = m.monotonicity {
        writeln!(human, "warning: increase of the sequence checked only over {terms} terms")?;
    }
    Ok(Report { command: "charsub member", body, human, inconclusive: unproved })
}

fn obj(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => Map::new(),
    }
}

fn charsub_probe(x: &str, seq: &str, horizon: u64, tolerance: &str, precision: u64) -> Result<Report> {
    let eps = parse_ratio(tolerance, "--tolerance")?;
    let b = sequence_arg(seq)?;
    let point = DyadicReal::parse(x, precision).map_err(flag("--x"))?;
    let r = float_membership(&point, &b, horizon, eps).map_err(flag("--precision"))?;
    let verdict = match r.verdict {
        ProbeVerdict::AppearsMember => "appears_member",
        ProbeVerdict::AppearsNonMember => "appears_non_member",
    };
    let mut body = Map::new();
    body.insert("x".into(), json!(x.trim()));
    body.extend(obj(sequence_json(&b)));
    body.insert("precision".into(), json_uint(r.precision));
    body.insert("horizon".into(), json_uint(r.horizon));
    body.insert("tolerance".into(), json!(eps.to_string()));
    body.insert("distances".into(), json!(r.distances));
    body.insert("tail_start".into(), json_uint(r.tail_start));
    body.insert("tail_max".into(), json!(r.tail_max));
    body.insert("max_distance".into(), json!(r.max_distance));
    body.insert("verdict".into(), json!(verdict));
    let mut rational = None;
    if let Ok(p) = x.parse::<RationalPoint>() {
        if let Ok(m) = rational_membership(p, &b) {
            let agrees = dualprobe::circle::probe_agrees(&r, &m, &exact_residues(p, &b, r.horizon));
            body.insert("agrees_with_exact".into(), json!(agrees));
            rational = Some(agrees);
        }
    }
    let mut human = format!(
        "{verdict} over k < {} at {} bits: tail (k >= {}) max distance {:.3e}, tolerance {eps}\n",
        r.horizon, r.precision, r.tail_start, r.tail_max
    );
    if let Some(agrees) = rational {
        writeln!(human, "agrees with the exact residues: {agrees}")?;
    }
    Ok(Report { command: "charsub probe", body, human, inconclusive: true })
}

fn charsub_measure(
    seq: &str,
    epsilon: &str,
    horizon: u64,
    samples: u64,
    seed: u64,
    precision: u64,
    parallelism: Parallelism,
) -> Result<Report> {
    let eps = parse_ratio(epsilon, "--epsilon")?;
    let b = sequence_arg(seq)?;
    let r = measure_probe(&b, eps, horizon, samples, seed, precision, parallelism).map_err(|e| match e {
        dualprobe::circle::CircleError::InvalidTolerance => anyhow!("--epsilon: {e}"),
        dualprobe::circle::CircleError::PrecisionExceeded { .. } => anyhow!("--precision: {e}"),
        other => anyhow!("--samples: {other}"),
    })?;
    let mut body = estimate_json(&r);
    body.extend(obj(sequence_json(&b)));
    body.insert("epsilon".into(), json!(eps.to_string()));
    body.insert("horizon".into(), json_uint(horizon));
    body.insert("precision".into(), json_uint(precision));
    let human = format!("measure of ‖n_k·x‖ <= {eps} for k < {horizon}\n{}", estimate_text(&r));
    Ok(Report { command: "charsub measure", body, human, inconclusive: false })
}
