//! Non-oblivious bit-fixing sources.
//!
//! A source on `n` bits has a set `Q` of bad coordinates. The remaining
//! good coordinates are drawn from a [`GoodBitDistribution`]; the bad ones
//! are then written by an [`AdversaryStrategy`] that sees the realized good
//! bits. Good bit `j` lands on the `j`-th smallest good coordinate and bad
//! bit `j` on `Q[j]`. Coordinates are 0-based throughout.

use itertools::Itertools;
use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::Distribution;
use crate::error::{check_dim, Error, Result};
use crate::field::{Gf2k, MAX_FIELD_BITS};
use crate::gf2::{low_mask, parity, scatter, BitVector};
use crate::limits::{pow2, Limits};
use crate::rng::{counter_rng, stream};
use crate::stats;

pub use crate::distribution::MAX_TABLE_BITS;

/// Largest source or seed space handled by exact enumeration.
pub const MAX_ENUM_BITS: usize = 24;

/// Joint law of the good bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GoodBitDistribution {
    Uniform {
        n_good: usize,
    },
    /// Bit `i` is the low bit of `p(i)`, `p` a uniformly random polynomial
    /// of degree below `t` over GF(2^field_bits).
    ExactTwise {
        n_good: usize,
        t: usize,
        field_bits: usize,
    },
    /// Bit `i` is `<x^i, y>` for uniform field elements `x`, `y`; every
    /// nonempty parity has bias at most `(n_good - 1) / 2^field_bits`.
    EpsBiased {
        n_good: usize,
        epsilon: f64,
        field_bits: usize,
    },
    ExplicitTable {
        n_good: usize,
        probs: Vec<f64>,
    },
}

impl GoodBitDistribution {
    pub fn uniform(n_good: usize) -> Self {
        GoodBitDistribution::Uniform { n_good }
    }

    pub fn exact_twise(n_good: usize, t: usize) -> Result<Self> {
        if t == 0 {
            return Err(Error::invalid("t-wise independence needs t >= 1"));
        }
        let field = Gf2k::with_at_least(n_good as u64)?;
        let d = GoodBitDistribution::ExactTwise {
            n_good,
            t,
            field_bits: field.bits(),
        };
        d.validate()?;
        Ok(d)
    }

    pub fn eps_biased(n_good: usize, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::invalid(format!("epsilon {epsilon} must lie in (0, 1]")));
        }
        let need = (n_good.saturating_sub(1) as f64 / epsilon).log2().ceil().max(1.0) as usize;
        if need > MAX_FIELD_BITS {
            return Err(Error::invalid(format!(
                "epsilon {epsilon} with {n_good} bits needs GF(2^{need}); at most 2^{MAX_FIELD_BITS} is supported, raise epsilon"
            )));
        }
        Ok(GoodBitDistribution::EpsBiased {
            n_good,
            epsilon,
            field_bits: need,
        })
    }

    pub fn explicit_table(n_good: usize, probs: Vec<f64>) -> Result<Self> {
        let d = GoodBitDistribution::ExplicitTable { n_good, probs };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GoodBitDistribution::Uniform { .. } => Ok(()),
            GoodBitDistribution::ExactTwise {
                n_good,
                t,
                field_bits,
            } => {
                if *t == 0 {
                    return Err(Error::invalid("t-wise independence needs t >= 1"));
                }
                let field = Gf2k::new(*field_bits)?;
                if (field.order() as u128) < *n_good as u128 {
                    return Err(Error::invalid(format!(
                        "GF(2^{field_bits}) has fewer than {n_good} evaluation points"
                    )));
                }
                Ok(())
            }
            GoodBitDistribution::EpsBiased {
                n_good,
                epsilon,
                field_bits,
            } => {
                Gf2k::new(*field_bits)?;
                let bias = n_good.saturating_sub(1) as f64 / (1u64 << field_bits) as f64;
                if !(*epsilon > 0.0 && *epsilon <= 1.0) || bias > *epsilon {
                    return Err(Error::invalid(format!(
                        "GF(2^{field_bits}) only guarantees bias {bias} for {n_good} bits, epsilon is {epsilon}"
                    )));
                }
                Ok(())
            }
            GoodBitDistribution::ExplicitTable { n_good, probs } => {
                Distribution::exact(*n_good, probs.clone()).map(|_| ())
            }
        }
    }

    pub fn n_good(&self) -> usize {
        match self {
            GoodBitDistribution::Uniform { n_good }
            | GoodBitDistribution::ExactTwise { n_good, .. }
            | GoodBitDistribution::EpsBiased { n_good, .. }
            | GoodBitDistribution::ExplicitTable { n_good, .. } => *n_good,
        }
    }

    /// Seed length in bits for the seeded kinds; `None` for tables.
    pub fn seed_bits(&self) -> Option<usize> {
        match self {
            GoodBitDistribution::Uniform { n_good } => Some(*n_good),
            GoodBitDistribution::ExactTwise { t, field_bits, .. } => Some(t * field_bits),
            GoodBitDistribution::EpsBiased { field_bits, .. } => Some(2 * field_bits),
            GoodBitDistribution::ExplicitTable { .. } => None,
        }
    }

    /// Number of equally weighted seeds, or table entries for a table.
    pub fn seed_space_size(&self) -> u128 {
        match self {
            GoodBitDistribution::ExplicitTable { probs, .. } => probs.len() as u128,
            other => pow2(other.seed_bits().expect("seeded kind")),
        }
    }

    /// Deterministic seed-to-bits map of the seeded kinds.
    pub fn from_seed(&self, seed: u64) -> Result<BitVector> {
        let bits = self
            .seed_bits()
            .ok_or_else(|| Error::invalid("explicit tables are sampled, not seeded"))?;
        if bits > 64 {
            return Err(Error::invalid(format!(
                "seed space of 2^{bits} does not fit a 64-bit seed; lower t or n"
            )));
        }
        if bits < 64 && seed >> bits != 0 {
            return Err(Error::invalid(format!("seed {seed} outside seed space 2^{bits}")));
        }
        Ok(self.expand_seed(seed))
    }

    fn expand_seed(&self, seed: u64) -> BitVector {
        let n = self.n_good();
        let mut out = BitVector::zeros(n);
        match self {
            GoodBitDistribution::Uniform { .. } => {
                for i in 0..n {
                    out.set(i, (seed >> i) & 1 == 1);
                }
            }
            GoodBitDistribution::ExactTwise { t, field_bits, .. } => {
                let mask = low_mask(*field_bits);
                let coeffs: Vec<u64> = (0..*t).map(|j| (seed >> (j * field_bits)) & mask).collect();
                self.fill_twise(&coeffs, &mut out);
            }
            GoodBitDistribution::EpsBiased { field_bits, .. } => {
                let mask = low_mask(*field_bits);
                self.fill_eps(seed & mask, (seed >> field_bits) & mask, &mut out);
            }
            GoodBitDistribution::ExplicitTable { .. } => unreachable!("tables have no seed"),
        }
        out
    }

    fn fill_twise(&self, coeffs: &[u64], out: &mut BitVector) {
        let GoodBitDistribution::ExactTwise { field_bits, .. } = self else {
            unreachable!()
        };
        let field = Gf2k::new(*field_bits).expect("validated field");
        for i in 0..out.len() {
            out.set(i, field.eval_poly(coeffs, i as u64) & 1 == 1);
        }
    }

    fn fill_eps(&self, x: u64, y: u64, out: &mut BitVector) {
        let GoodBitDistribution::EpsBiased { field_bits, .. } = self else {
            unreachable!()
        };
        let field = Gf2k::new(*field_bits).expect("validated field");
        let mut power = 1u64;
        for i in 0..out.len() {
            out.set(i, parity(power & y));
            power = field.mul(power, x);
        }
    }

    /// One draw using `rng`.
    pub fn sample<R: RngCore>(&self, rng: &mut R) -> BitVector {
        let n = self.n_good();
        match self {
            GoodBitDistribution::Uniform { .. } => {
                let mut out = BitVector::zeros(n);
                for i in 0..n {
                    out.set(i, rng.gen::<bool>());
                }
                out
            }
            GoodBitDistribution::ExactTwise { t, field_bits, .. } => {
                let mask = low_mask(*field_bits);
                let coeffs: Vec<u64> = (0..*t).map(|_| rng.next_u64() & mask).collect();
                let mut out = BitVector::zeros(n);
                self.fill_twise(&coeffs, &mut out);
                out
            }
            GoodBitDistribution::EpsBiased { field_bits, .. } => {
                let mask = low_mask(*field_bits);
                let (x, y) = (rng.next_u64() & mask, rng.next_u64() & mask);
                let mut out = BitVector::zeros(n);
                self.fill_eps(x, y, &mut out);
                out
            }
            GoodBitDistribution::ExplicitTable { probs, .. } => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut pick = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
                for (x, &p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc && p > 0.0 {
                        pick = x;
                        break;
                    }
                }
                BitVector::from_word(pick as u64, n)
            }
        }
    }

    /// Exact support as `(pattern, probability)` pairs sorted by pattern,
    /// with zero-probability patterns dropped. `cap` bounds the number of
    /// seeds or table entries visited.
    pub fn support(&self, cap: u128) -> Result<Vec<(u64, f64)>> {
        let n = self.n_good();
        if n > 64 {
            return Err(Error::invalid(format!("cannot enumerate {n} good bits")));
        }
        let size = self.seed_space_size();
        if size > cap {
            return Err(Error::CapExceeded {
                what: "good-bit enumeration",
                needed: size,
                cap,
                hint: "shrink the good-bit seed space or raise the work cap",
            });
        }
        match self {
            GoodBitDistribution::Uniform { .. } => {
                let w = 1.0 / size as f64;
                Ok((0..size as u64).map(|x| (x, w)).collect())
            }
            GoodBitDistribution::ExplicitTable { probs, .. } => Ok(probs
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(x, &p)| (x as u64, p))
                .collect()),
            _ => {
                let w = 1.0 / size as f64;
                let mut items: Vec<u64> = (0..size as u64)
                    .into_par_iter()
                    .map(|s| self.expand_seed(s).to_word().expect("at most 64 good bits"))
                    .collect();
                items.par_sort_unstable();
                Ok(items
                    .into_iter()
                    .dedup_with_count()
                    .map(|(count, x)| (x, count as f64 * w))
                    .collect())
            }
        }
    }

    /// The good-bit law as an exact table.
    pub fn to_distribution(&self, limits: &Limits) -> Result<Distribution> {
        let n = self.n_good();
        if n > MAX_ENUM_BITS {
            return Err(Error::CapExceeded {
                what: "exact table",
                needed: pow2(n),
                cap: pow2(MAX_ENUM_BITS),
                hint: "exact tables hold at most 24 bits",
            });
        }
        let cap = limits.work.min(pow2(MAX_ENUM_BITS));
        Distribution::from_weighted(n, self.support(cap)?)
    }
}

/// t-wise independent bits from the polynomial construction; `seed` ranges
/// over `[0, 2^(t * field_bits))`.
pub fn twise_sample(n: usize, t: usize, seed: u64) -> Result<BitVector> {
    let d = GoodBitDistribution::exact_twise(n, t)?;
    let bits = d.seed_bits().expect("seeded");
    if bits > 64 {
        let field_bits = bits / t;
        return Err(Error::invalid(format!(
            "t={t} over GF(2^{field_bits}) needs a {bits}-bit seed; with n={n} at most t={} fits a 64-bit seed",
            64 / field_bits
        )));
    }
    d.from_seed(seed)
}

/// Small-bias bits from the powering construction; `seed` packs the two
/// field elements.
pub fn epsbiased_sample(n: usize, epsilon: f64, seed: u64) -> Result<BitVector> {
    GoodBitDistribution::eps_biased(n, epsilon)?.from_seed(seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwiseReport {
    pub holds: bool,
    pub t: usize,
    /// Subset whose marginal is farthest from uniform (first in
    /// lexicographic order on ties).
    pub worst_subset: Vec<usize>,
    pub worst_distance: f64,
}

/// Checks that every `t`-subset marginal is exactly uniform.
pub fn verify_twise(dist: &GoodBitDistribution, t: usize, limits: &Limits) -> Result<TwiseReport> {
    let n = dist.n_good();
    if t == 0 || t > n {
        return Err(Error::invalid(format!("need 1 <= t <= n, got t={t}, n={n}")));
    }
    let subsets = binomial(n, t);
    let work = dist.seed_space_size().saturating_mul(subsets);
    limits.check(
        "t-wise verification",
        work,
        "shrink n or t, or raise the work cap",
    )?;
    let support = dist.support(limits.work)?;
    let target = 1.0 / (1u64 << t) as f64;
    let reports: Vec<(f64, Vec<usize>)> = (0..n)
        .combinations(t)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|subset| {
            let mut marginal = vec![0.0; 1 << t];
            for &(x, p) in &support {
                marginal[crate::gf2::gather(x, &subset) as usize] += p;
            }
            let sd = 0.5 * marginal.iter().map(|p| (p - target).abs()).sum::<f64>();
            (sd, subset)
        })
        .collect();
    let (worst_distance, worst_subset) = reports
        .into_iter()
        .fold((f64::NEG_INFINITY, Vec::new()), |best, cur| {
            if cur.0 > best.0 {
                cur
            } else {
                best
            }
        });
    Ok(TwiseReport {
        holds: worst_distance <= stats::EXACT_TOLERANCE,
        t,
        worst_subset,
        worst_distance,
    })
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc.saturating_mul((n - i) as u128) / (i as u128 + 1))
}

/// How the bad bits respond to the good bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AdversaryStrategy {
    Constant {
        bits: BitVector,
    },
    /// Every bad bit equals the parity of all good bits.
    ParityOfGood,
    /// Every bad bit is 1 iff strictly more than half the good bits are 1.
    MajorityOfGood,
    /// `table[g]` holds the bad bits (bit `j` for `Q[j]`) for the good
    /// pattern `g`.
    ExplicitFunctionTable {
        table: Vec<u64>,
    },
    /// Placeholder resolved against a fixed extractor by
    /// [`crate::bfext::worst_case_adversary`] before use.
    BruteForceWorst,
}

impl AdversaryStrategy {
    pub fn zeros(q: usize) -> Self {
        AdversaryStrategy::Constant {
            bits: BitVector::zeros(q),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            AdversaryStrategy::Constant { bits } if bits.is_empty() => "constant".into(),
            AdversaryStrategy::Constant { bits } => format!("constant {bits}"),
            AdversaryStrategy::ParityOfGood => "parity of the good bits".into(),
            AdversaryStrategy::MajorityOfGood => "majority of the good bits".into(),
            AdversaryStrategy::ExplicitFunctionTable { table } => {
                format!("explicit table with {} entries", table.len())
            }
            AdversaryStrategy::BruteForceWorst => "worst case against a fixed extractor".into(),
        }
    }

    /// Bad bits for a good pattern given as a word.
    pub fn respond_word(&self, good: u64, n_good: usize, q: usize) -> Result<u64> {
        let fill = |bit: bool| if bit { low_mask(q) } else { 0 };
        match self {
            AdversaryStrategy::Constant { bits } => {
                bits.to_word().ok_or_else(|| Error::invalid("constant pattern wider than 64 bits"))
            }
            AdversaryStrategy::ParityOfGood => Ok(fill(parity(good))),
            AdversaryStrategy::MajorityOfGood => {
                Ok(fill(2 * good.count_ones() as usize > n_good))
            }
            AdversaryStrategy::ExplicitFunctionTable { table } => {
                table.get(good as usize).copied().ok_or_else(|| {
                    Error::invalid(format!("adversary table has no entry for good pattern {good}"))
                })
            }
            AdversaryStrategy::BruteForceWorst => Err(unresolved()),
        }
    }

    /// Bad bits for an arbitrary-width good vector.
    pub fn respond(&self, good: &BitVector, q: usize) -> Result<BitVector> {
        let fill = |bit: bool| {
            let mut v = BitVector::zeros(q);
            if bit {
                for j in 0..q {
                    v.set(j, true);
                }
            }
            v
        };
        match self {
            AdversaryStrategy::Constant { bits } => Ok(bits.clone()),
            AdversaryStrategy::ParityOfGood => Ok(fill(good.weight() % 2 == 1)),
            AdversaryStrategy::MajorityOfGood => Ok(fill(2 * good.weight() > good.len())),
            AdversaryStrategy::ExplicitFunctionTable { .. } => {
                let g = good
                    .to_word()
                    .ok_or_else(|| Error::invalid("explicit adversary tables take at most 64 good bits"))?;
                Ok(BitVector::from_word(self.respond_word(g, good.len(), q)?, q))
            }
            AdversaryStrategy::BruteForceWorst => Err(unresolved()),
        }
    }
}

fn unresolved() -> Error {
    Error::invalid(
        "brute-force-worst adversary must be resolved against extractor parameters before sampling",
    )
}

/// A `(q, t, gamma)` non-oblivious bit-fixing source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NobfSourceSpec {
    pub n: usize,
    /// Bad coordinates, sorted and 0-based.
    #[serde(rename = "Q")]
    pub bad: Vec<usize>,
    pub good_dist: GoodBitDistribution,
    pub adversary: AdversaryStrategy,
    pub t: usize,
    pub gamma: f64,
}

impl NobfSourceSpec {
    pub fn new(
        n: usize,
        bad: Vec<usize>,
        good_dist: GoodBitDistribution,
        adversary: AdversaryStrategy,
        t: usize,
        gamma: f64,
    ) -> Result<Self> {
        let spec = NobfSourceSpec {
            n,
            bad,
            good_dist,
            adversary,
            t,
            gamma,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bad.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("Q must be strictly increasing"));
        }
        if let Some(&i) = self.bad.iter().find(|&&i| i >= self.n) {
            return Err(Error::invalid(format!("bad coordinate {i} out of range for n={}", self.n)));
        }
        let n_good = self.n - self.bad.len();
        check_dim("good-bit distribution width", n_good, self.good_dist.n_good())?;
        self.good_dist.validate()?;
        if self.t > n_good {
            return Err(Error::invalid(format!(
                "t={} exceeds the {n_good} good coordinates (n - q)",
                self.t
            )));
        }
        if let GoodBitDistribution::ExactTwise { t, .. } = self.good_dist {
            if t < self.t {
                return Err(Error::invalid(format!(
                    "good bits are only {t}-wise independent, spec claims t={}",
                    self.t
                )));
            }
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::invalid(format!("gamma {} must be >= 0", self.gamma)));
        }
        let q = self.q();
        match &self.adversary {
            AdversaryStrategy::Constant { bits } => check_dim("constant adversary pattern", q, bits.len())?,
            AdversaryStrategy::ExplicitFunctionTable { table } => {
                if q > 64 {
                    return Err(Error::invalid("explicit adversary tables support at most 64 bad bits"));
                }
                if let Some(v) = table.iter().find(|v| **v & !low_mask(q) != 0) {
                    return Err(Error::invalid(format!("adversary table entry {v} wider than q={q}")));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn q(&self) -> usize {
        self.bad.len()
    }

    /// Good coordinates in increasing order.
    pub fn good_coords(&self) -> Vec<usize> {
        let mut is_bad = vec![false; self.n];
        for &i in &self.bad {
            is_bad[i] = true;
        }
        (0..self.n).filter(|&i| !is_bad[i]).collect()
    }

    pub fn layout(&self) -> SourceLayout {
        SourceLayout {
            n: self.n,
            good: self.good_coords(),
            bad: self.bad.clone(),
        }
    }

    /// Full source vector from its good part and the adversary's answer.
    pub fn assemble(&self, good: &BitVector, bad: &BitVector) -> Result<BitVector> {
        let layout = self.layout();
        check_dim("good bits", layout.good.len(), good.len())?;
        check_dim("bad bits", layout.bad.len(), bad.len())?;
        let mut x = BitVector::zeros(self.n);
        for (j, &c) in layout.good.iter().enumerate() {
            x.set(c, good.get(j));
        }
        for (j, &c) in layout.bad.iter().enumerate() {
            x.set(c, bad.get(j));
        }
        Ok(x)
    }
}

/// Coordinate bookkeeping for word-packed sources (`n <= 64`).
#[derive(Debug, Clone)]
pub struct SourceLayout {
    pub n: usize,
    pub good: Vec<usize>,
    pub bad: Vec<usize>,
}

impl SourceLayout {
    #[inline]
    pub fn assemble(&self, good: u64, bad: u64) -> u64 {
        scatter(good, &self.good) | scatter(bad, &self.bad)
    }
}

/// One draw of the source addressed by `(seed, counter)`.
pub fn sample_nobf_at(spec: &NobfSourceSpec, seed: u64, counter: u64) -> Result<BitVector> {
    let mut rng = counter_rng(seed, stream::SOURCE_SAMPLES, counter);
    let good = spec.good_dist.sample(&mut rng);
    let bad = spec.adversary.respond(&good, spec.q())?;
    spec.assemble(&good, &bad)
}

pub fn sample_nobf(spec: &NobfSourceSpec, seed: u64) -> Result<BitVector> {
    sample_nobf_at(spec, seed, 0)
}

/// `count` draws at counters `0..count`; identical for any worker count.
pub fn sample_batch(spec: &NobfSourceSpec, seed: u64, count: usize) -> Result<Vec<BitVector>> {
    spec.validate()?;
    (0..count as u64)
        .into_par_iter()
        .map(|i| sample_nobf_at(spec, seed, i))
        .collect()
}

/// Exact law of the full `n`-bit source.
pub fn enumerate_nobf(spec: &NobfSourceSpec, limits: &Limits) -> Result<Distribution> {
    spec.validate()?;
    if spec.n > MAX_ENUM_BITS {
        return Err(Error::CapExceeded {
            what: "source enumeration",
            needed: pow2(spec.n),
            cap: pow2(MAX_ENUM_BITS),
            hint: "exact enumeration handles n <= 24",
        });
    }
    let cap = limits.work.min(pow2(MAX_ENUM_BITS));
    let support = spec.good_dist.support(cap)?;
    let layout = spec.layout();
    let (n_good, q) = (layout.good.len(), layout.bad.len());
    let items = support
        .into_iter()
        .map(|(g, p)| {
            let b = spec.adversary.respond_word(g, n_good, q)?;
            Ok((layout.assemble(g, b), p))
        })
        .collect::<Result<Vec<_>>>()?;
    Distribution::from_weighted(spec.n, items)
}

/// The same source with every bad bit fixed to 0.
pub fn zeroed_counterpart(spec: &NobfSourceSpec) -> NobfSourceSpec {
    NobfSourceSpec {
        adversary: AdversaryStrategy::zeros(spec.q()),
        ..spec.clone()
    }
}
