//! The block extractor: split the source into `ell` blocks, extract one bit
//! per block with a resilient function, and compress the first `r` bits
//! through the generator matrix of an `[r, m, d]` code.
//!
//! Besides [`extract`], this module measures the two quantities the
//! correctness argument rests on: the probability that every block's bit is
//! already fixed by the good coordinates, and the distance between the
//! output under the real adversary and under an adversary that writes
//! zeros. Whenever every block is fixed the two outputs coincide, so the
//! distance never exceeds the probability that some block is not fixed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codes::{preset_code, build_good_code, LinearCode};
use crate::distribution::Distribution;
use crate::error::{check_dim, Error, Result};
use crate::gf2::{low_mask, parity, BitVector};
use crate::limits::{pow2, Limits};
use crate::resilient::{ResilientFunction, MAX_COALITION, MC_CONFIDENCE};
use crate::rng::{counter_rng, stream};
use crate::sources::{AdversaryStrategy, NobfSourceSpec, MAX_ENUM_BITS};
use crate::stats::{table_distance, table_distance_to_uniform, tv_deviation_bound, Estimate, EXACT_TOLERANCE};

/// Default for the constant in `m = min(n^(0.9 alpha), beta * t^(1/21))`.
pub const DEFAULT_BETA: f64 = 1.0;

/// Widest output whose distribution is tabulated.
pub const MAX_OUTPUT_BITS: usize = 16;

/// Output width up to which the worst adversary is found exactly.
pub const MAX_EXACT_ADVERSARY_OUTPUT_BITS: usize = 4;

/// Largest bad-coordinate count the adversary search scans exhaustively.
pub const MAX_ADVERSARY_BAD_BITS: usize = 16;

/// Improvement rounds of the local adversary search.
pub const ADVERSARY_SEARCH_ROUNDS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamMode {
    /// Shape derived from `(n, delta, t, beta)`.
    Paper,
    /// Caller-chosen shape, validated only.
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsRepr", into = "ParamsRepr")]
pub struct BfextParams {
    pub n: usize,
    pub ell: usize,
    pub block_len: usize,
    pub code: LinearCode,
    pub f: ResilientFunction,
    pub mode: ParamMode,
    /// Present in paper mode.
    pub paper: Option<PaperShape>,
}

#[derive(Serialize, Deserialize)]
struct ParamsRepr {
    n: usize,
    ell: usize,
    block_len: usize,
    code: LinearCode,
    f: ResilientFunction,
    mode: ParamMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    paper: Option<PaperShape>,
}

impl TryFrom<ParamsRepr> for BfextParams {
    type Error = Error;

    fn try_from(r: ParamsRepr) -> Result<Self> {
        let p = BfextParams {
            n: r.n,
            ell: r.ell,
            block_len: r.block_len,
            code: r.code,
            f: r.f,
            mode: r.mode,
            paper: r.paper,
        };
        p.validate()?;
        Ok(p)
    }
}

impl From<BfextParams> for ParamsRepr {
    fn from(p: BfextParams) -> Self {
        ParamsRepr {
            n: p.n,
            ell: p.ell,
            block_len: p.block_len,
            code: p.code,
            f: p.f,
            mode: p.mode,
            paper: p.paper,
        }
    }
}

/// Block and output sizes computed from `(n, delta, t, beta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperShape {
    pub n: usize,
    pub delta: f64,
    pub t: usize,
    pub beta: f64,
    /// `delta / 4`.
    pub alpha: f64,
    /// `floor(n^alpha)`.
    pub ell: usize,
    /// `floor(n / ell)`.
    pub block_len: usize,
    /// `max(1, floor(min(n^(0.9 alpha), beta * t^(1/21))))`.
    pub m: usize,
}

/// `floor(x)`, absorbing rounding error just below an integer.
fn floor_tolerant(x: f64) -> usize {
    (x * (1.0 + 1e-12)).floor() as usize
}

pub fn paper_shape(n: usize, delta: f64, t: usize, beta: f64) -> Result<PaperShape> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta {delta} must lie in (0, 1)")));
    }
    if t == 0 {
        return Err(Error::invalid("t must be at least 1"));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::invalid(format!("beta {beta} must be positive")));
    }
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    let alpha = delta / 4.0;
    let nf = n as f64;
    let ell = floor_tolerant(nf.powf(alpha));
    if ell < 1 {
        return Err(Error::invalid(format!("n={n} gives no blocks")));
    }
    let block_len = n / ell;
    let m_real = nf.powf(0.9 * alpha).min(beta * (t as f64).powf(1.0 / 21.0));
    let m = floor_tolerant(m_real).max(1);
    Ok(PaperShape {
        n,
        delta,
        t,
        beta,
        alpha,
        ell,
        block_len,
        m,
    })
}

/// Paper-mode parameters. `code_builder` receives `(m, ell)` and must
/// return a code with `m` rows and at most `ell` columns; `f_builder`
/// receives the block length.
pub fn derive_params(
    n: usize,
    delta: f64,
    t: usize,
    beta: f64,
    code_builder: impl FnOnce(usize, usize) -> Result<LinearCode>,
    f_builder: impl FnOnce(usize) -> Result<ResilientFunction>,
) -> Result<BfextParams> {
    let shape = paper_shape(n, delta, t, beta)?;
    let code = code_builder(shape.m, shape.ell)?;
    check_dim("code message length", shape.m, code.m())?;
    let f = f_builder(shape.block_len)?;
    let params = BfextParams {
        n,
        ell: shape.ell,
        block_len: shape.block_len,
        code,
        f,
        mode: ParamMode::Paper,
        paper: Some(shape),
    };
    params.validate()?;
    Ok(params)
}

/// Repetition code of length `ell` for `m = 1`; otherwise the longest
/// distance found by [`build_good_code`] with `r = ell`.
pub fn default_code(m: usize, ell: usize, seed: u64) -> Result<LinearCode> {
    if m > ell {
        return Err(Error::invalid(format!(
            "{m} output bits need at least {m} blocks, only {ell} available"
        )));
    }
    if m == 1 {
        return preset_code(&format!("repetition-{ell}"));
    }
    for target in (1..=ell - m + 1).rev() {
        match build_good_code(m, ell, target, seed, 64) {
            Ok(code) => return Ok(code),
            Err(Error::SearchFailed { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    unreachable!("distance 1 is always reachable")
}

impl BfextParams {
    pub fn explicit(
        n: usize,
        ell: usize,
        block_len: usize,
        code: LinearCode,
        f: ResilientFunction,
    ) -> Result<Self> {
        let p = BfextParams {
            n,
            ell,
            block_len,
            code,
            f,
            mode: ParamMode::Explicit,
            paper: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ell == 0 || self.block_len == 0 {
            return Err(Error::invalid("need at least one block of positive length"));
        }
        if self.ell * self.block_len > self.n {
            return Err(Error::invalid(format!(
                "{} blocks of {} bits exceed n={}",
                self.ell, self.block_len, self.n
            )));
        }
        if self.code.r() > self.ell {
            return Err(Error::invalid(format!(
                "code length r={} exceeds the {} blocks",
                self.code.r(),
                self.ell
            )));
        }
        if self.code.verified_d() == 0 {
            return Err(Error::invalid("code distance has not been verified"));
        }
        check_dim("function arity vs block length", self.block_len, self.f.arity())?;
        match (self.mode, &self.paper) {
            (ParamMode::Explicit, _) => Ok(()),
            (ParamMode::Paper, None) => Err(Error::invalid("paper mode needs its derivation")),
            (ParamMode::Paper, Some(shape)) => {
                let expect = paper_shape(shape.n, shape.delta, shape.t, shape.beta)?;
                if &expect != shape
                    || shape.n != self.n
                    || shape.ell != self.ell
                    || shape.block_len != self.block_len
                    || shape.m != self.code.m()
                {
                    return Err(Error::invalid("paper-mode parameters disagree with their derivation"));
                }
                Ok(())
            }
        }
    }

    pub fn m(&self) -> usize {
        self.code.m()
    }

    pub fn r(&self) -> usize {
        self.code.r()
    }

    /// Bad coordinates of each block, as positions local to the block.
    fn bad_by_block(&self, bad: &[usize]) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.ell];
        for &c in bad {
            let block = c / self.block_len;
            if block < self.ell {
                out[block].push(c % self.block_len);
            }
        }
        out
    }
}

/// Range conditions on the number of bad bits and on `t`, reported
/// side by side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub q: usize,
    /// `n^(1 - delta)`.
    pub global_bound: f64,
    pub global_ok: bool,
    /// `block_len^(1 - 3 delta / 4)`.
    pub per_block_bound: f64,
    pub per_block_ok: bool,
    /// `c * log2(n)^21`.
    pub t_bound: f64,
    pub t_ok: bool,
}

pub fn check_conditions(params: &BfextParams, q: usize, t: usize, delta: f64, c: f64) -> ConditionReport {
    let n = params.n as f64;
    let global_bound = n.powf(1.0 - delta);
    let per_block_bound = (params.block_len as f64).powf(1.0 - 0.75 * delta);
    let t_bound = c * n.log2().powi(21);
    ConditionReport {
        q,
        global_bound,
        global_ok: q as f64 <= global_bound,
        per_block_bound,
        per_block_ok: (q as f64) < per_block_bound,
        t_bound,
        t_ok: t as f64 >= t_bound,
    }
}

/// Blocks `[i * block_len, (i + 1) * block_len)` for `i < ell`; trailing
/// coordinates are dropped.
pub fn partition(x: &BitVector, ell: usize, block_len: usize) -> Result<Vec<BitVector>> {
    if ell * block_len > x.len() {
        return Err(Error::invalid(format!(
            "{ell} blocks of {block_len} bits exceed the {}-bit input",
            x.len()
        )));
    }
    (0..ell).map(|i| x.slice(i * block_len, block_len)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionTrace {
    pub blocks: Vec<BitVector>,
    /// One bit per block.
    pub y: BitVector,
    /// The first `r` bits of `y`.
    pub y_used: BitVector,
    pub z: BitVector,
}

pub fn extract(x: &BitVector, params: &BfextParams) -> Result<ExtractionTrace> {
    check_dim("source length", params.n, x.len())?;
    let blocks = partition(x, params.ell, params.block_len)?;
    let mut y = BitVector::zeros(params.ell);
    for (i, block) in blocks.iter().enumerate() {
        y.set(i, params.f.eval(block)?);
    }
    let y_used = y.slice(0, params.r())?;
    let z = params.code.generator().matvec(&y_used)?;
    Ok(ExtractionTrace {
        blocks,
        y,
        y_used,
        z,
    })
}

/// [`extract`] over many inputs, in input order.
pub fn extract_batch(xs: &[BitVector], params: &BfextParams) -> Result<Vec<ExtractionTrace>> {
    xs.par_iter().map(|x| extract(x, params)).collect()
}

/// Word-packed extractor for sources of at most 64 bits.
struct WordExtractor<'a> {
    params: &'a BfextParams,
    block_mask: u64,
    rows: Vec<u64>,
    used_mask: u64,
}

impl<'a> WordExtractor<'a> {
    fn new(params: &'a BfextParams) -> Result<Self> {
        if params.n > 64 {
            return Err(Error::invalid("word-packed extraction needs n <= 64"));
        }
        Ok(WordExtractor {
            params,
            block_mask: low_mask(params.block_len),
            rows: params.code.generator().row_words().expect("r <= ell <= 64"),
            used_mask: low_mask(params.r()),
        })
    }

    #[inline]
    fn block(&self, x: u64, i: usize) -> u64 {
        (x >> (i * self.params.block_len)) & self.block_mask
    }

    #[inline]
    fn y(&self, x: u64) -> u64 {
        (0..self.params.ell).fold(0, |y, i| y | ((self.params.f.eval_word(self.block(x, i)) as u64) << i))
    }

    #[inline]
    fn z(&self, y: u64) -> u64 {
        let used = y & self.used_mask;
        self.rows
            .iter()
            .enumerate()
            .fold(0, |z, (i, &row)| z | ((parity(row & used) as u64) << i))
    }
}

/// Exact joint measurements of a source pushed through the extractor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactAnalysis {
    /// Probability that every block's bit is fixed by the good bits.
    pub fixed_probability: f64,
    /// Output law under the source's adversary.
    pub z: Distribution,
    /// Output law with the bad bits zeroed.
    pub z_zeroed: Distribution,
    /// `Pr[Y_i = 1]` for every block under the source's adversary.
    pub y_means: Vec<f64>,
}

impl ExactAnalysis {
    /// Distance between the output under the adversary and under zeros.
    pub fn distance_to_zeroed(&self) -> f64 {
        table_distance(self.z.probs().expect("exact"), self.z_zeroed.probs().expect("exact"))
    }

    pub fn distance_to_uniform(&self) -> f64 {
        table_distance_to_uniform(self.z.probs().expect("exact"))
    }

    /// `SD(Z, Z') <= Pr[some block not fixed]`.
    pub fn coupling_holds(&self) -> bool {
        self.distance_to_zeroed() <= 1.0 - self.fixed_probability + EXACT_TOLERANCE
    }
}

fn check_compatible(spec: &NobfSourceSpec, params: &BfextParams) -> Result<()> {
    spec.validate()?;
    params.validate()?;
    check_dim("source length", params.n, spec.n)?;
    if params.m() > MAX_OUTPUT_BITS {
        return Err(Error::invalid(format!(
            "output distributions are tabulated up to m={MAX_OUTPUT_BITS}, got {}",
            params.m()
        )));
    }
    Ok(())
}

fn check_block_coalitions(bad_by_block: &[Vec<usize>]) -> Result<()> {
    if let Some(worst) = bad_by_block.iter().map(Vec::len).max() {
        if worst > MAX_COALITION {
            return Err(Error::CapExceeded {
                what: "per-block undetermination scan",
                needed: pow2(worst),
                cap: pow2(MAX_COALITION),
                hint: "at most 20 bad bits per block",
            });
        }
    }
    Ok(())
}

fn exact_feasible(spec: &NobfSourceSpec, limits: &Limits) -> bool {
    spec.n <= MAX_ENUM_BITS && spec.good_dist.seed_space_size() <= limits.work.min(pow2(MAX_ENUM_BITS))
}

/// Output and fixedness measured exactly over the good-bit support.
/// A `brute-force-worst` adversary is resolved first.
pub fn analyze_exact(spec: &NobfSourceSpec, params: &BfextParams, limits: &Limits) -> Result<ExactAnalysis> {
    check_compatible(spec, params)?;
    if !exact_feasible(spec, limits) {
        return Err(Error::CapExceeded {
            what: "exact extractor analysis",
            needed: spec.good_dist.seed_space_size(),
            cap: limits.work.min(pow2(MAX_ENUM_BITS)),
            hint: "exact analysis needs n <= 24 and an enumerable good-bit seed space",
        });
    }
    let resolved;
    let spec = if spec.adversary == AdversaryStrategy::BruteForceWorst {
        resolved = NobfSourceSpec {
            adversary: worst_case_adversary(spec, params, limits)?,
            ..spec.clone()
        };
        &resolved
    } else {
        spec
    };
    let bad_by_block = params.bad_by_block(&spec.bad);
    check_block_coalitions(&bad_by_block)?;

    let support = spec.good_dist.support(limits.work.min(pow2(MAX_ENUM_BITS)))?;
    let layout = spec.layout();
    let (n_good, q) = (layout.good.len(), layout.bad.len());
    let wx = WordExtractor::new(params)?;
    let m = params.m();
    let ell = params.ell;
    let chunk = 4096usize.max(4 << m);

    struct Acc {
        fixed: f64,
        z: Vec<f64>,
        z0: Vec<f64>,
        y: Vec<f64>,
    }
    let parts = support
        .par_chunks(chunk)
        .map(|items| -> Result<Acc> {
            let mut acc = Acc {
                fixed: 0.0,
                z: vec![0.0; 1 << m],
                z0: vec![0.0; 1 << m],
                y: vec![0.0; ell],
            };
            for &(g, p) in items {
                let x0 = layout.assemble(g, 0);
                let all_fixed = bad_by_block.iter().enumerate().all(|(i, local)| {
                    local.is_empty() || !params.f.undetermined_word(wx.block(x0, i), local)
                });
                if all_fixed {
                    acc.fixed += p;
                }
                acc.z0[wx.z(wx.y(x0)) as usize] += p;
                let b = spec.adversary.respond_word(g, n_good, q)?;
                let y = wx.y(layout.assemble(g, b));
                acc.z[wx.z(y) as usize] += p;
                for (i, s) in acc.y.iter_mut().enumerate() {
                    if (y >> i) & 1 == 1 {
                        *s += p;
                    }
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut total = Acc {
        fixed: 0.0,
        z: vec![0.0; 1 << m],
        z0: vec![0.0; 1 << m],
        y: vec![0.0; ell],
    };
    for part in parts {
        total.fixed += part.fixed;
        for (a, b) in total.z.iter_mut().zip(&part.z) {
            *a += b;
        }
        for (a, b) in total.z0.iter_mut().zip(&part.z0) {
            *a += b;
        }
        for (a, b) in total.y.iter_mut().zip(&part.y) {
            *a += b;
        }
    }
    Ok(ExactAnalysis {
        fixed_probability: total.fixed,
        z: Distribution::exact(m, total.z)?,
        z_zeroed: Distribution::exact(m, total.z0)?,
        y_means: total.y,
    })
}

fn all_blocks_fixed(params: &BfextParams, x0: &BitVector, bad_by_block: &[Vec<usize>]) -> Result<bool> {
    for (i, local) in bad_by_block.iter().enumerate() {
        if local.is_empty() {
            continue;
        }
        let block = x0.slice(i * params.block_len, params.block_len)?;
        if let Some(w) = block.to_word() {
            if params.f.undetermined_word(w, local) {
                return Ok(false);
            }
            continue;
        }
        let mut seen = [false; 2];
        let mut b = block.clone();
        for c in 0..1u64 << local.len() {
            for (j, &p) in local.iter().enumerate() {
                b.set(p, (c >> j) & 1 == 1);
            }
            seen[params.f.eval(&b)? as usize] = true;
            if seen[0] && seen[1] {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Probability that every block's bit is fixed by the good coordinates.
/// Exact when the source can be enumerated, otherwise estimated from
/// `samples` draws with a Clopper-Pearson interval.
pub fn fixedness_probability(
    spec: &NobfSourceSpec,
    params: &BfextParams,
    seed: u64,
    samples: u64,
    limits: &Limits,
) -> Result<Estimate> {
    spec.validate()?;
    params.validate()?;
    check_dim("source length", params.n, spec.n)?;
    let bad_by_block = params.bad_by_block(&spec.bad);
    check_block_coalitions(&bad_by_block)?;
    if spec.q() == 0 {
        return Ok(Estimate::exact(1.0));
    }
    if exact_feasible(spec, limits) && params.m() <= MAX_OUTPUT_BITS {
        let fixedness_only = NobfSourceSpec {
            adversary: AdversaryStrategy::zeros(spec.q()),
            ..spec.clone()
        };
        return Ok(Estimate::exact(analyze_exact(&fixedness_only, params, limits)?.fixed_probability));
    }
    if samples == 0 {
        return Err(Error::invalid("source too large for exact analysis and no samples requested"));
    }
    let zero_bad = BitVector::zeros(spec.q());
    let hits: u64 = (0..samples)
        .into_par_iter()
        .map(|i| -> Result<u64> {
            let mut rng = counter_rng(seed, stream::FIXEDNESS, i);
            let good = spec.good_dist.sample(&mut rng);
            let x0 = spec.assemble(&good, &zero_bad)?;
            Ok(all_blocks_fixed(params, &x0, &bad_by_block)? as u64)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    Ok(Estimate::from_counts(hits, samples, MC_CONFIDENCE))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroedComparison {
    /// `SD(Z, Z')`.
    pub distance: Estimate,
    pub fixedness: Estimate,
    /// `SD(Z, Z') <= 1 - fixedness`; for estimates, checked on the
    /// interval endpoints that favour the bound.
    pub coupling_holds: bool,
}

/// Distance between the output under the source's adversary and under the
/// zeroed source.
pub fn compare_zeroed(
    spec: &NobfSourceSpec,
    params: &BfextParams,
    seed: u64,
    samples: u64,
    limits: &Limits,
) -> Result<ZeroedComparison> {
    check_compatible(spec, params)?;
    if exact_feasible(spec, limits) {
        let a = analyze_exact(spec, params, limits)?;
        return Ok(ZeroedComparison {
            distance: Estimate::exact(a.distance_to_zeroed()),
            fixedness: Estimate::exact(a.fixed_probability),
            coupling_holds: a.coupling_holds(),
        });
    }
    if samples == 0 {
        return Err(Error::invalid("source too large for exact analysis and no samples requested"));
    }
    if spec.adversary == AdversaryStrategy::BruteForceWorst {
        return Err(Error::invalid(
            "brute-force-worst adversaries can only be resolved on enumerable sources",
        ));
    }
    let m = params.m();
    let q = spec.q();
    let zero_bad = BitVector::zeros(q);
    let pairs = (0..samples)
        .into_par_iter()
        .map(|i| -> Result<(u64, u64)> {
            let mut rng = counter_rng(seed, stream::COMPARE_ZEROED, i);
            let good = spec.good_dist.sample(&mut rng);
            let bad = spec.adversary.respond(&good, q)?;
            let z = extract(&spec.assemble(&good, &bad)?, params)?.z;
            let z0 = extract(&spec.assemble(&good, &zero_bad)?, params)?.z;
            Ok((z.to_word().expect("m <= 16"), z0.to_word().expect("m <= 16")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut tz = vec![0.0; 1 << m];
    let mut tz0 = vec![0.0; 1 << m];
    let w = 1.0 / samples as f64;
    for &(z, z0) in &pairs {
        tz[z as usize] += w;
        tz0[z0 as usize] += w;
    }
    let est = table_distance(&tz, &tz0);
    // each plug-in table is within dev of its law with prob 1 - (1 - c)/2
    let dev = tv_deviation_bound(1 << m, samples as usize, 1.0 - (1.0 - MC_CONFIDENCE) / 2.0);
    let distance = Estimate {
        value: est,
        lower: (est - 2.0 * dev).max(0.0),
        upper: (est + 2.0 * dev).min(1.0),
        exact: false,
        samples,
    };
    let fixedness = fixedness_probability(spec, params, seed, samples, limits)?;
    let coupling_holds = distance.lower <= 1.0 - fixedness.lower + EXACT_TOLERANCE;
    Ok(ZeroedComparison {
        distance,
        fixedness,
        coupling_holds,
    })
}

/// The adversary, as an explicit table over good patterns, that maximizes
/// `SD(Z, U_m)` for these parameters.
///
/// For `m <= 4` the optimum is exact: the distance equals
/// `max_T Pr[Z in T] - |T| / 2^m`, and for a fixed test set `T` the best
/// response to each good pattern is any bad assignment that lands the
/// output in `T`, so all `2^(2^m)` test sets are scored with one subset-sum
/// transform. Wider outputs fall back to steepest-ascent local search over
/// the response table for at most [`ADVERSARY_SEARCH_ROUNDS`] moves.
pub fn worst_case_adversary(
    spec: &NobfSourceSpec,
    params: &BfextParams,
    limits: &Limits,
) -> Result<AdversaryStrategy> {
    check_compatible(spec, params)?;
    let q = spec.q();
    if q > MAX_ADVERSARY_BAD_BITS {
        return Err(Error::CapExceeded {
            what: "adversary search",
            needed: pow2(q),
            cap: pow2(MAX_ADVERSARY_BAD_BITS),
            hint: "worst-case search handles at most 16 bad bits",
        });
    }
    let n_good = spec.n - q;
    if n_good > MAX_ENUM_BITS || !exact_feasible(spec, limits) {
        return Err(Error::CapExceeded {
            what: "adversary search",
            needed: spec.good_dist.seed_space_size(),
            cap: limits.work.min(pow2(MAX_ENUM_BITS)),
            hint: "worst-case search needs an enumerable source",
        });
    }
    let support = spec.good_dist.support(limits.work.min(pow2(MAX_ENUM_BITS)))?;
    limits.check(
        "adversary search",
        (support.len() as u128).saturating_mul(pow2(q)),
        "shrink the source or the bad set",
    )?;
    let layout = spec.layout();
    let wx = WordExtractor::new(params)?;
    let m = params.m();
    let outputs = |g: u64| -> Vec<u64> { (0..1u64 << q).map(|b| wx.z(wx.y(layout.assemble(g, b)))).collect() };

    let mut table = vec![0u64; 1 << n_good];
    if m <= MAX_EXACT_ADVERSARY_OUTPUT_BITS {
        let outcomes = 1usize << m;
        let sets = 1usize << outcomes;
        // weight of each attainable-output set
        let reach: Vec<(u64, u64, f64)> = support
            .par_iter()
            .map(|&(g, p)| {
                let mask = outputs(g).iter().fold(0u64, |acc, &z| acc | (1 << z));
                (g, mask, p)
            })
            .collect();
        let mut inside = vec![0.0; sets];
        for &(_, mask, p) in &reach {
            inside[mask as usize] += p;
        }
        // inside[S] = mass of patterns whose reachable set lies within S
        for bit in 0..outcomes {
            for s in 0..sets {
                if s & (1 << bit) != 0 {
                    inside[s] += inside[s ^ (1 << bit)];
                }
            }
        }
        let total = inside[sets - 1];
        let full = sets - 1;
        let (best_t, _) = (0..sets).fold((0usize, f64::NEG_INFINITY), |best, t| {
            let value = total - inside[full ^ t] - t.count_ones() as f64 / outcomes as f64;
            if value > best.1 + EXACT_TOLERANCE {
                (t, value)
            } else {
                best
            }
        });
        for &(g, _, _) in &reach {
            let outs = outputs(g);
            table[g as usize] = outs
                .iter()
                .position(|&z| (best_t >> z) & 1 == 1)
                .unwrap_or(0) as u64;
        }
    } else {
        let outs: Vec<Vec<u64>> = support.par_iter().map(|&(g, _)| outputs(g)).collect();
        let target = 1.0 / (1u64 << m) as f64;
        let mut choice = vec![0usize; support.len()];
        let mut probs = vec![0.0; 1 << m];
        for (k, &(_, p)) in support.iter().enumerate() {
            probs[outs[k][0] as usize] += p;
        }
        let gain = |probs: &[f64], from: u64, to: u64, p: f64| -> f64 {
            if from == to {
                return 0.0;
            }
            let (a, b) = (probs[from as usize], probs[to as usize]);
            0.5 * ((a - p - target).abs() - (a - target).abs() + (b + p - target).abs() - (b - target).abs())
        };
        for _ in 0..ADVERSARY_SEARCH_ROUNDS {
            let best = (0..support.len())
                .into_par_iter()
                .map(|k| {
                    let p = support[k].1;
                    let from = outs[k][choice[k]];
                    outs[k]
                        .iter()
                        .enumerate()
                        .map(|(b, &to)| (gain(&probs, from, to, p), k, b))
                        .fold((0.0, usize::MAX, 0), |acc, c| if c.0 > acc.0 { c } else { acc })
                })
                .reduce(
                    || (0.0, usize::MAX, 0),
                    |a, b| {
                        if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                            b
                        } else {
                            a
                        }
                    },
                );
            if best.0 <= EXACT_TOLERANCE {
                break;
            }
            let (k, b) = (best.1, best.2);
            let p = support[k].1;
            probs[outs[k][choice[k]] as usize] -= p;
            probs[outs[k][b] as usize] += p;
            choice[k] = b;
        }
        for (k, &(g, _)) in support.iter().enumerate() {
            table[g as usize] = choice[k] as u64;
        }
    }
    Ok(AdversaryStrategy::ExplicitFunctionTable { table })
}

/// Samples the source and runs each draw through the extractor.
pub fn sample_and_extract(
    spec: &NobfSourceSpec,
    params: &BfextParams,
    seed: u64,
    count: usize,
) -> Result<Vec<(BitVector, ExtractionTrace)>> {
    check_dim("source length", params.n, spec.n)?;
    let xs = crate::sources::sample_batch(spec, seed, count)?;
    let traces = extract_batch(&xs, params)?;
    Ok(xs.into_iter().zip(traces).collect())
}
