//! Command-line front-end.
//!
//! Every command reads a JSON config, runs one operation, and writes a JSON
//! envelope `{format, command, seed, samples, work_cap, config, result}`.
//! Exit codes: 0 success, 1 I/O, 2 validation, 3 resource cap, 4 search
//! failure.
//!
//! Bit vectors are written as hex strings: digit `j` holds bits
//! `4j..4j+3`, least significant bit first, so the most significant digit
//! comes last. Sample batches are a JSON header line followed by one hex
//! string per line.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bfext::{
    analyze_exact, compare_zeroed, default_code, derive_params, extract_batch, fixedness_probability,
    worst_case_adversary, BfextParams, ExtractionTrace, ZeroedComparison, DEFAULT_BETA,
};
use crate::codes::{build_good_code, preset_code, LinearCode, DEFAULT_SEARCH_ATTEMPTS};
use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::gf2::BitVector;
use crate::limits::{pow2, Limits};
use crate::resilient::{
    bias_under, influence_exact, influence_max_exact, influence_mc, BiasReport, ResilientFunction,
};
use crate::sources::{sample_batch, AdversaryStrategy, GoodBitDistribution, NobfSourceSpec};
use crate::stats::{linear_test_bias, vazirani_check, BiasSpectrum, Estimate, VaziraniReport};

/// Envelope format tag.
pub const FORMAT: &str = "nobf/1";

/// Header format tag of sample batch files.
pub const BATCH_FORMAT: &str = "nobf-samples/1";

/// Monte-Carlo sample count when a command needs samples and none are given.
pub const DEFAULT_SAMPLES: u64 = 100_000;

#[derive(Debug, Parser)]
#[command(name = "nobf", version, about = "Extractors for non-oblivious bit-fixing sources")]
pub struct Cli {
    /// JSON config for the command.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed for all randomness.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Enumeration cap as a power of two, overriding NOBF_WORK_CAP.
    #[arg(long = "max-enum", global = true, value_name = "BITS")]
    pub max_enum: Option<usize>,
    /// Monte-Carlo sample count or batch size.
    #[arg(long, global = true)]
    pub samples: Option<u64>,
    /// Worker threads; does not affect results.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a source spec, optionally writing a sample batch.
    GenSource {
        /// Sample batch output, required with --samples.
        #[arg(long)]
        batch: Option<PathBuf>,
    },
    /// Run the extractor over explicit inputs, a batch file, or fresh samples.
    Extract,
    /// Run one analysis.
    Analyze {
        #[arg(value_enum)]
        what: Analysis,
    },
    /// Load a preset code or search for one.
    BuildCode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Analysis {
    Bias,
    Influence,
    Spectrum,
    Vazirani,
    Fixedness,
    CompareZeroed,
}

impl Analysis {
    fn name(self) -> &'static str {
        match self {
            Analysis::Bias => "analyze bias",
            Analysis::Influence => "analyze influence",
            Analysis::Spectrum => "analyze spectrum",
            Analysis::Vazirani => "analyze vazirani",
            Analysis::Fixedness => "analyze fixedness",
            Analysis::CompareZeroed => "analyze compare-zeroed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub format: String,
    pub command: String,
    pub seed: u64,
    pub samples: Option<u64>,
    pub work_cap: u128,
    pub config: Value,
    pub result: T,
}

/// Extractor parameters as written in configs. A serialized explicit-mode
/// [`BfextParams`] is accepted as is.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum ParamsConfig {
    Explicit {
        n: usize,
        ell: usize,
        block_len: usize,
        code: CodeRef,
        f: ResilientFunction,
    },
    Paper {
        n: usize,
        delta: f64,
        t: usize,
        #[serde(default)]
        beta: Option<f64>,
        /// Defaults to majority over the block.
        #[serde(default)]
        f: Option<ResilientFunction>,
        /// Seed for the code search when more than one output bit is derived.
        #[serde(default)]
        code_seed: u64,
    },
}

/// A preset name or a full code file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CodeRef {
    Preset(String),
    Code(LinearCode),
}

impl CodeRef {
    fn resolve(&self) -> Result<LinearCode> {
        match self {
            CodeRef::Preset(name) => preset_code(name),
            CodeRef::Code(c) => Ok(c.clone()),
        }
    }
}

impl ParamsConfig {
    pub fn resolve(&self) -> Result<BfextParams> {
        match self {
            ParamsConfig::Explicit {
                n,
                ell,
                block_len,
                code,
                f,
            } => BfextParams::explicit(*n, *ell, *block_len, code.resolve()?, f.clone()),
            ParamsConfig::Paper {
                n,
                delta,
                t,
                beta,
                f,
                code_seed,
            } => derive_params(
                *n,
                *delta,
                *t,
                beta.unwrap_or(DEFAULT_BETA),
                |m, ell| default_code(m, ell, *code_seed),
                |len| match f {
                    Some(f) => Ok(f.clone()),
                    None => ResilientFunction::majority(len),
                },
            ),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenSourceConfig {
    source: NobfSourceSpec,
    /// Needed to resolve a brute-force-worst adversary.
    #[serde(default)]
    params: Option<ParamsConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExtractConfig {
    params: ParamsConfig,
    #[serde(default)]
    inputs: Option<Vec<String>>,
    #[serde(default)]
    batch: Option<PathBuf>,
    #[serde(default)]
    source: Option<NobfSourceSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractReport {
    pub params: BfextParams,
    pub traces: Vec<ExtractionTrace>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BiasConfig {
    f: ResilientFunction,
    /// Uniform when absent.
    #[serde(default)]
    input: Option<Distribution>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InfluenceConfig {
    f: ResilientFunction,
    #[serde(default)]
    coalition: Option<Vec<usize>>,
    /// Maximize over all coalitions of this size instead.
    #[serde(default)]
    coalition_size: Option<usize>,
    /// Law of the variables outside the coalition; uniform when absent.
    #[serde(default)]
    fixing: Option<GoodBitDistribution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceReport {
    pub coalition: Vec<usize>,
    pub influence: Estimate,
    /// Whether `coalition` was found by maximizing over its size.
    pub maximized: bool,
}

/// An exact table, or the extractor's output law on an enumerable source.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableConfig {
    #[serde(default)]
    distribution: Option<Distribution>,
    #[serde(default)]
    source: Option<NobfSourceSpec>,
    #[serde(default)]
    params: Option<ParamsConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExtractorConfig {
    source: NobfSourceSpec,
    params: ParamsConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BuildCodeConfig {
    #[serde(default)]
    preset: Option<String>,
    #[serde(default)]
    m: Option<usize>,
    #[serde(default)]
    r: Option<usize>,
    #[serde(default)]
    target_d: Option<usize>,
    #[serde(default)]
    attempts: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchHeader {
    pub format: String,
    pub n: usize,
    pub seed: u64,
    pub count: usize,
}

struct Run<'a> {
    cli: &'a Cli,
    limits: Limits,
    raw: Value,
}

impl Run<'_> {
    fn config<T: DeserializeOwned>(&self) -> Result<T> {
        Ok(T::deserialize(&self.raw)?)
    }

    fn envelope<T: Serialize>(&self, command: &str, result: T) -> Result<String> {
        let env = Envelope {
            format: FORMAT.into(),
            command: command.into(),
            seed: self.cli.seed,
            samples: self.cli.samples,
            work_cap: self.limits.work,
            config: self.raw.clone(),
            result,
        };
        let mut text = serde_json::to_string_pretty(&env)?;
        text.push('\n');
        Ok(text)
    }
}

/// Work cap from `--max-enum`, else `NOBF_WORK_CAP`, else the default.
pub fn limits_for(max_enum: Option<usize>) -> Limits {
    match max_enum {
        Some(bits) => Limits::new(pow2(bits)),
        None => Limits::from_env(),
    }
}

/// Runs a parsed command line and returns the text it writes.
pub fn run(cli: &Cli) -> Result<String> {
    match cli.workers {
        Some(0) => Err(Error::invalid("--workers must be positive")),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::invalid(format!("cannot start {w} workers: {e}")))?
            .install(|| dispatch(cli)),
        None => dispatch(cli),
    }
}

fn read_config(path: Option<&Path>) -> Result<Value> {
    let path = path.ok_or_else(|| Error::invalid("--config is required"))?;
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn dispatch(cli: &Cli) -> Result<String> {
    let run = Run {
        cli,
        limits: limits_for(cli.max_enum),
        raw: read_config(cli.config.as_deref())?,
    };
    match &cli.command {
        Command::GenSource { batch } => gen_source(&run, batch.as_deref()),
        Command::Extract => cmd_extract(&run),
        Command::Analyze { what } => analyze(&run, *what),
        Command::BuildCode => build_code(&run),
    }
}

fn gen_source(run: &Run, batch: Option<&Path>) -> Result<String> {
    let cfg: GenSourceConfig = run.config()?;
    let mut spec = cfg.source;
    spec.validate()?;
    if spec.adversary == AdversaryStrategy::BruteForceWorst {
        if let Some(params) = &cfg.params {
            let params = params.resolve()?;
            spec.adversary = worst_case_adversary(&spec, &params, &run.limits)?;
        }
    }
    let count = run.cli.samples.unwrap_or(0);
    if count > 0 {
        let path = batch.ok_or_else(|| Error::invalid("--samples needs --batch PATH for the sample file"))?;
        let samples = sample_batch(&spec, run.cli.seed, count as usize)?;
        fs::write(path, write_batch(spec.n, run.cli.seed, &samples)?)?;
    }
    run.envelope("gen-source", spec)
}

/// Batch file text: header line, then one hex string per sample.
pub fn write_batch(n: usize, seed: u64, samples: &[BitVector]) -> Result<String> {
    let header = BatchHeader {
        format: BATCH_FORMAT.into(),
        n,
        seed,
        count: samples.len(),
    };
    let mut text = serde_json::to_string(&header)?;
    text.push('\n');
    for s in samples {
        text.push_str(&s.to_hex());
        text.push('\n');
    }
    Ok(text)
}

pub fn read_batch(text: &str) -> Result<(BatchHeader, Vec<BitVector>)> {
    let mut lines = text.lines();
    let header: BatchHeader =
        serde_json::from_str(lines.next().ok_or_else(|| Error::Parse("empty batch file".into()))?)?;
    if header.format != BATCH_FORMAT {
        return Err(Error::Parse(format!("unknown batch format {:?}", header.format)));
    }
    let samples = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| BitVector::from_hex(l.trim(), header.n))
        .collect::<Result<Vec<_>>>()?;
    if samples.len() != header.count {
        return Err(Error::Parse(format!(
            "batch header promises {} samples, file has {}",
            header.count,
            samples.len()
        )));
    }
    Ok((header, samples))
}

fn cmd_extract(run: &Run) -> Result<String> {
    let cfg: ExtractConfig = run.config()?;
    let params = cfg.params.resolve()?;
    let given = cfg.inputs.is_some() as u8 + cfg.batch.is_some() as u8 + cfg.source.is_some() as u8;
    if given != 1 {
        return Err(Error::invalid("give exactly one of inputs, batch, or source"));
    }
    let xs = if let Some(inputs) = &cfg.inputs {
        inputs
            .iter()
            .map(|h| BitVector::from_hex(h, params.n))
            .collect::<Result<Vec<_>>>()?
    } else if let Some(path) = &cfg.batch {
        // relative to the config file
        let base = run.cli.config.as_deref().and_then(Path::parent).unwrap_or(Path::new(""));
        read_batch(&fs::read_to_string(base.join(path))?)?.1
    } else {
        let mut spec = cfg.source.expect("checked above");
        spec.validate()?;
        if spec.adversary == AdversaryStrategy::BruteForceWorst {
            spec.adversary = worst_case_adversary(&spec, &params, &run.limits)?;
        }
        sample_batch(&spec, run.cli.seed, run.cli.samples.unwrap_or(1) as usize)?
    };
    let traces = extract_batch(&xs, &params)?;
    run.envelope("extract", ExtractReport { params, traces })
}

fn analyze(run: &Run, what: Analysis) -> Result<String> {
    let name = what.name();
    match what {
        Analysis::Bias => {
            let cfg: BiasConfig = run.config()?;
            let input = match cfg.input {
                Some(d) => d,
                None => {
                    run.limits.check("uniform input table", pow2(cfg.f.arity()), "raise --max-enum")?;
                    Distribution::uniform(cfg.f.arity())?
                }
            };
            let report: BiasReport = bias_under(&cfg.f, &input)?;
            run.envelope(name, report)
        }
        Analysis::Influence => {
            let cfg: InfluenceConfig = run.config()?;
            let size = match (&cfg.coalition, cfg.coalition_size) {
                (Some(c), None) => c.len(),
                (None, Some(q)) => q,
                _ => return Err(Error::invalid("give exactly one of coalition and coalition_size")),
            };
            let outside = cfg.f.arity().checked_sub(size).ok_or_else(|| {
                Error::invalid(format!("coalition size {size} exceeds arity {}", cfg.f.arity()))
            })?;
            let fixing = cfg.fixing.unwrap_or_else(|| GoodBitDistribution::uniform(outside));
            let report = match cfg.coalition {
                Some(coalition) => {
                    let influence = match run.cli.samples {
                        Some(s) => influence_mc(&cfg.f, &coalition, &fixing, s, run.cli.seed)?,
                        None => Estimate::exact(influence_exact(&cfg.f, &coalition, &fixing, &run.limits)?),
                    };
                    InfluenceReport {
                        coalition,
                        influence,
                        maximized: false,
                    }
                }
                None => {
                    let best = influence_max_exact(&cfg.f, size, &fixing, &run.limits)?;
                    InfluenceReport {
                        coalition: best.witness,
                        influence: Estimate::exact(best.value),
                        maximized: true,
                    }
                }
            };
            run.envelope(name, report)
        }
        Analysis::Spectrum | Analysis::Vazirani => {
            let cfg: TableConfig = run.config()?;
            let table = match (cfg.distribution, cfg.source, cfg.params) {
                (Some(d), None, None) => d,
                (None, Some(source), Some(params)) => analyze_exact(&source, &params.resolve()?, &run.limits)?.z,
                _ => return Err(Error::invalid("give either distribution, or source and params")),
            };
            if what == Analysis::Spectrum {
                let spectrum: BiasSpectrum = linear_test_bias(&table)?;
                run.envelope(name, spectrum)
            } else {
                let report: VaziraniReport = vazirani_check(&table)?;
                run.envelope(name, report)
            }
        }
        Analysis::Fixedness => {
            let cfg: ExtractorConfig = run.config()?;
            let params = cfg.params.resolve()?;
            let samples = run.cli.samples.unwrap_or(DEFAULT_SAMPLES);
            let est = fixedness_probability(&cfg.source, &params, run.cli.seed, samples, &run.limits)?;
            run.envelope(name, est)
        }
        Analysis::CompareZeroed => {
            let cfg: ExtractorConfig = run.config()?;
            let params = cfg.params.resolve()?;
            let samples = run.cli.samples.unwrap_or(DEFAULT_SAMPLES);
            let report: ZeroedComparison = compare_zeroed(&cfg.source, &params, run.cli.seed, samples, &run.limits)?;
            run.envelope(name, report)
        }
    }
}

fn build_code(run: &Run) -> Result<String> {
    let cfg: BuildCodeConfig = run.config()?;
    let code = match (cfg.preset, cfg.m, cfg.r, cfg.target_d) {
        (Some(name), None, None, None) => preset_code(&name)?,
        (None, Some(m), Some(r), Some(d)) => build_good_code(
            m,
            r,
            d,
            run.cli.seed,
            cfg.attempts.unwrap_or(DEFAULT_SEARCH_ATTEMPTS),
        )?,
        _ => return Err(Error::invalid("give either preset, or m, r and target_d")),
    };
    run.envelope("build-code", code)
}

/// Parses an envelope and writes it back with its typed result; used to
/// check that reports round-trip byte for byte.
pub fn reserialize(text: &str) -> Result<String> {
    fn again<T: Serialize + DeserializeOwned>(text: &str) -> Result<String> {
        let env: Envelope<T> = serde_json::from_str(text)?;
        let mut out = serde_json::to_string_pretty(&env)?;
        out.push('\n');
        Ok(out)
    }
    #[derive(Deserialize)]
    struct Head {
        format: String,
        command: String,
    }
    let head: Head = serde_json::from_str(text)?;
    if head.format != FORMAT {
        return Err(Error::Parse(format!("unknown envelope format {:?}", head.format)));
    }
    match head.command.as_str() {
        "gen-source" => again::<NobfSourceSpec>(text),
        "extract" => again::<ExtractReport>(text),
        "build-code" => again::<LinearCode>(text),
        "analyze bias" => again::<BiasReport>(text),
        "analyze influence" => again::<InfluenceReport>(text),
        "analyze spectrum" => again::<BiasSpectrum>(text),
        "analyze vazirani" => again::<VaziraniReport>(text),
        "analyze fixedness" => again::<Estimate>(text),
        "analyze compare-zeroed" => again::<ZeroedComparison>(text),
        other => Err(Error::Parse(format!("unknown command {other:?}"))),
    }
}

/// Entry point for the binary: runs the command, writes the output, and
/// returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let outcome = run(&cli).and_then(|text| match &cli.out {
        Some(path) => fs::write(path, text).map_err(Error::from),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(Error::from),
    });
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("nobf: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli_for(args: &[&str], config: &str) -> (tempfile::TempDir, Cli) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        fs::write(&path, config).unwrap();
        let mut full = vec!["nobf", "--config", path.to_str().unwrap()];
        full.extend_from_slice(args);
        (dir, Cli::try_parse_from(full).unwrap())
    }

    fn result(text: &str) -> Value {
        serde_json::from_str::<Value>(text).unwrap()["result"].clone()
    }

    const SPEC12: &str = r#"{"n": 12, "Q": [], "good_dist": {"kind": "uniform", "n_good": 12},
        "adversary": {"kind": "constant", "bits": {"len": 0, "hex": ""}}, "t": 2, "gamma": 0.0}"#;

    #[test]
    fn gen_source_accepts_and_rejects() {
        let (_d, cli) = cli_for(&["gen-source"], &format!(r#"{{"source": {SPEC12}}}"#));
        let out = run(&cli).unwrap();
        assert_eq!(result(&out)["n"], 12);
        assert_eq!(reserialize(&out).unwrap(), out);

        let bad = SPEC12.replace(r#""t": 2"#, r#""t": 13"#);
        let (_d, cli) = cli_for(&["gen-source"], &format!(r#"{{"source": {bad}}}"#));
        assert_eq!(run(&cli).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn batch_round_trip() {
        let samples: Vec<BitVector> = (0..5u64).map(|i| BitVector::from_word(i * 77, 12)).collect();
        let text = write_batch(12, 9, &samples).unwrap();
        let (h, back) = read_batch(&text).unwrap();
        assert_eq!((h.n, h.seed, h.count), (12, 9, 5));
        assert_eq!(back, samples);
        assert!(read_batch(&text.replace("\"count\":5", "\"count\":6")).is_err());
    }

    #[test]
    fn extract_hand_example() {
        let cfg = r#"{"params": {"mode": "explicit", "n": 12, "ell": 4, "block_len": 3,
            "code": "identity-2", "f": {"kind": "majority", "arity": 3}},
            "inputs": ["3c5"]}"#;
        // bits 110 000 111 010, four per hex digit, lowest first: 0x3, 0xc, 0x5
        let (_d, cli) = cli_for(&["extract"], cfg);
        let out = run(&cli).unwrap();
        let trace = &result(&out)["traces"][0];
        assert_eq!(trace["z"]["hex"], "1");
        assert_eq!(trace["y"]["hex"], "5");
        assert_eq!(reserialize(&out).unwrap(), out);
    }

    #[test]
    fn extract_arity_mismatch_is_validation() {
        let cfg = r#"{"params": {"mode": "explicit", "n": 12, "ell": 4, "block_len": 3,
            "code": "identity-2", "f": {"kind": "majority", "arity": 5}}, "inputs": []}"#;
        let (_d, cli) = cli_for(&["extract"], cfg);
        assert_eq!(run(&cli).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn analyses() {
        let (_d, cli) = cli_for(
            &["analyze", "influence"],
            r#"{"f": {"kind": "majority", "arity": 3}, "coalition": [0]}"#,
        );
        assert_eq!(result(&run(&cli).unwrap())["influence"]["value"], 0.5);

        let (_d, cli) = cli_for(
            &["analyze", "spectrum"],
            r#"{"distribution": {"kind": "exact-table", "m": 2, "probs": [0.5, 0.0, 0.0, 0.5]}}"#,
        );
        let out = run(&cli).unwrap();
        assert_eq!(result(&out)["max_bias"], 1.0);
        assert_eq!(reserialize(&out).unwrap(), out);

        let (_d, cli) = cli_for(
            &["analyze", "vazirani"],
            r#"{"distribution": {"kind": "exact-table", "m": 1, "probs": [0.25, 0.75]}}"#,
        );
        assert_eq!(result(&run(&cli).unwrap())["holds"], true);
    }

    #[test]
    fn build_code_codes() {
        let (_d, cli) = cli_for(&["build-code"], r#"{"preset": "hamming-7-4"}"#);
        assert_eq!(result(&run(&cli).unwrap())["verified_d"], 3);
        let (_d, cli) = cli_for(&["build-code"], r#"{"m": 4, "r": 7, "target_d": 4, "attempts": 50}"#);
        assert_eq!(run(&cli).unwrap_err().exit_code(), 4);
    }

    #[test]
    fn cap_is_exit_three() {
        let (_d, cli) = cli_for(
            &["--max-enum", "2", "analyze", "bias"],
            r#"{"f": {"kind": "majority", "arity": 5}}"#,
        );
        assert_eq!(run(&cli).unwrap_err().exit_code(), 3);
    }
}
