//! One-bit extractors for a single block: monotone boolean functions whose
//! bias and coalition influence can be measured.
//!
//! The surrogates here (majority, tribes, recursive majority of 3) have
//! classical closed-form bias and influence; any other construction can be
//! plugged in as an explicit truth table.

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::Distribution;
use crate::error::{check_dim, Error, Result};
use crate::gf2::{low_mask, scatter, BitVector};
use crate::limits::{pow2, Limits};
use crate::rng::{counter_rng, stream};
use crate::sources::{binomial, GoodBitDistribution};
use crate::stats::{clopper_pearson, Estimate};

/// Largest arity stored as a truth table.
pub const MAX_TABLE_ARITY: usize = 20;

/// Largest coalition scanned for undetermination.
pub const MAX_COALITION: usize = 20;

/// Coalition count limit for [`influence_max_exact`].
pub const MAX_COALITIONS: u128 = 1_000_000;

/// Confidence level of Monte-Carlo intervals.
pub const MC_CONFIDENCE: f64 = 0.99;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "FunctionKind", into = "FunctionKind")]
pub struct ResilientFunction {
    kind: FunctionKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FunctionKind {
    Majority { arity: usize },
    /// OR of `count` disjoint ANDs of `width` consecutive inputs.
    Tribes { width: usize, count: usize },
    #[serde(rename = "recursive-majority-3")]
    RecursiveMajority3 { depth: usize },
    /// `table` bit `x` is `f(x)`.
    ExplicitTable { arity: usize, table: BitVector },
}

impl TryFrom<FunctionKind> for ResilientFunction {
    type Error = Error;

    fn try_from(kind: FunctionKind) -> Result<Self> {
        match &kind {
            FunctionKind::Majority { arity } => {
                if arity % 2 == 0 {
                    return Err(Error::invalid(format!(
                        "majority needs an odd arity, got {arity}"
                    )));
                }
            }
            FunctionKind::Tribes { width, count } => {
                if *width == 0 || *count == 0 {
                    return Err(Error::invalid("tribes needs positive width and count"));
                }
            }
            FunctionKind::RecursiveMajority3 { depth } => {
                if *depth == 0 || *depth > 39 {
                    return Err(Error::invalid(format!(
                        "recursive majority depth {depth} outside 1..=39"
                    )));
                }
            }
            FunctionKind::ExplicitTable { arity, table } => {
                if *arity > MAX_TABLE_ARITY {
                    return Err(Error::invalid(format!(
                        "truth tables are limited to arity {MAX_TABLE_ARITY}"
                    )));
                }
                check_dim("truth table", 1 << arity, table.len())?;
            }
        }
        Ok(ResilientFunction { kind })
    }
}

impl From<ResilientFunction> for FunctionKind {
    fn from(f: ResilientFunction) -> Self {
        f.kind
    }
}

impl ResilientFunction {
    pub fn majority(arity: usize) -> Result<Self> {
        FunctionKind::Majority { arity }.try_into()
    }

    pub fn tribes(width: usize, count: usize) -> Result<Self> {
        FunctionKind::Tribes { width, count }.try_into()
    }

    pub fn recursive_majority3(depth: usize) -> Result<Self> {
        FunctionKind::RecursiveMajority3 { depth }.try_into()
    }

    pub fn explicit_table(arity: usize, table: BitVector) -> Result<Self> {
        FunctionKind::ExplicitTable { arity, table }.try_into()
    }

    pub fn constant(arity: usize, value: bool) -> Result<Self> {
        if arity > MAX_TABLE_ARITY {
            return Err(Error::invalid(format!(
                "truth tables are limited to arity {MAX_TABLE_ARITY}"
            )));
        }
        let mut table = BitVector::zeros(1 << arity);
        if value {
            for x in 0..1 << arity {
                table.set(x, true);
            }
        }
        ResilientFunction::explicit_table(arity, table)
    }

    /// Tabulates `f` on all `2^arity` inputs.
    pub fn from_fn(arity: usize, f: impl Fn(u64) -> bool) -> Result<Self> {
        if arity > MAX_TABLE_ARITY {
            return Err(Error::invalid(format!(
                "truth tables are limited to arity {MAX_TABLE_ARITY}"
            )));
        }
        let mut table = BitVector::zeros(1 << arity);
        for x in 0..1u64 << arity {
            table.set(x as usize, f(x));
        }
        ResilientFunction::explicit_table(arity, table)
    }

    pub fn kind(&self) -> &FunctionKind {
        &self.kind
    }

    pub fn arity(&self) -> usize {
        match &self.kind {
            FunctionKind::Majority { arity } | FunctionKind::ExplicitTable { arity, .. } => *arity,
            FunctionKind::Tribes { width, count } => width * count,
            FunctionKind::RecursiveMajority3 { depth } => 3usize.pow(*depth as u32),
        }
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            FunctionKind::Majority { arity } => format!("majority-{arity}"),
            FunctionKind::Tribes { width, count } => format!("tribes({width},{count})"),
            FunctionKind::RecursiveMajority3 { depth } => format!("recursive-majority-3 depth {depth}"),
            FunctionKind::ExplicitTable { arity, .. } => format!("explicit table, arity {arity}"),
        }
    }

    pub fn eval(&self, x: &BitVector) -> Result<bool> {
        check_dim("function input", self.arity(), x.len())?;
        if let Some(w) = x.to_word() {
            return Ok(self.eval_word(w));
        }
        Ok(match &self.kind {
            FunctionKind::Majority { arity } => 2 * x.weight() > *arity,
            FunctionKind::Tribes { width, count } => {
                (0..*count).any(|j| (0..*width).all(|i| x.get(j * width + i)))
            }
            FunctionKind::RecursiveMajority3 { .. } => {
                let mut level: Vec<bool> = x.iter().collect();
                while level.len() > 1 {
                    level = level
                        .chunks(3)
                        .map(|c| (c[0] as u8 + c[1] as u8 + c[2] as u8) >= 2)
                        .collect();
                }
                level[0]
            }
            FunctionKind::ExplicitTable { .. } => unreachable!("tables have arity <= 20"),
        })
    }

    /// `f` on the low `arity` bits of `x`; the arity must be at most 64.
    #[inline]
    pub fn eval_word(&self, x: u64) -> bool {
        match &self.kind {
            FunctionKind::Majority { arity } => 2 * x.count_ones() as usize > *arity,
            FunctionKind::Tribes { width, count } => {
                let mask = low_mask(*width);
                (0..*count).any(|j| (x >> (j * width)) & mask == mask)
            }
            FunctionKind::RecursiveMajority3 { depth } => {
                let mut v = x;
                let mut len = 3usize.pow(*depth as u32);
                while len > 1 {
                    let mut next = 0u64;
                    for j in 0..len / 3 {
                        let c = (v >> (3 * j)) & 0b111;
                        if c.count_ones() >= 2 {
                            next |= 1 << j;
                        }
                    }
                    v = next;
                    len /= 3;
                }
                v & 1 == 1
            }
            FunctionKind::ExplicitTable { table, .. } => table.get(x as usize),
        }
    }

    pub fn truth_table(&self) -> Result<BitVector> {
        let arity = self.arity();
        if arity > MAX_TABLE_ARITY {
            return Err(Error::invalid(format!(
                "truth tables are limited to arity {MAX_TABLE_ARITY}"
            )));
        }
        let mut table = BitVector::zeros(1 << arity);
        for x in 0..1u64 << arity {
            table.set(x as usize, self.eval_word(x));
        }
        Ok(table)
    }

    /// Exhaustive check that raising any input never lowers the output.
    pub fn is_monotone(&self) -> Result<bool> {
        let arity = self.arity();
        if arity > MAX_TABLE_ARITY {
            return Err(Error::invalid(format!(
                "monotonicity is checked exhaustively up to arity {MAX_TABLE_ARITY}"
            )));
        }
        Ok((0..1u64 << arity).into_par_iter().all(|x| {
            !self.eval_word(x)
                || (0..arity).all(|i| (x >> i) & 1 == 1 || self.eval_word(x | (1 << i)))
        }))
    }

    /// Whether both outputs occur as the coalition bits (at `positions`)
    /// range over all values, the rest of `x` held fixed.
    #[inline]
    pub(crate) fn undetermined_word(&self, x: u64, positions: &[usize]) -> bool {
        let base = x & !scatter(low_mask(positions.len()), positions);
        let first = self.eval_word(base);
        (1..1u64 << positions.len()).any(|c| self.eval_word(base | scatter(c, positions)) != first)
    }

    fn undetermined(&self, x: &BitVector, positions: &[usize]) -> bool {
        if let Some(w) = x.to_word() {
            return self.undetermined_word(w, positions);
        }
        let mut y = x.clone();
        let eval_at = |y: &mut BitVector, c: u64| {
            for (j, &p) in positions.iter().enumerate() {
                y.set(p, (c >> j) & 1 == 1);
            }
            self.eval(y).expect("arity checked")
        };
        let first = eval_at(&mut y, 0);
        (1..1u64 << positions.len()).any(|c| eval_at(&mut y, c) != first)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    /// `|E[f] - 1/2|`.
    pub bias: f64,
    /// `E[f]`.
    pub mean: f64,
    pub exact: bool,
    /// Interval on `bias` at [`MC_CONFIDENCE`], for empirical input.
    pub interval: Option<[f64; 2]>,
}

/// `|E_D[f] - 1/2|`.
pub fn bias_under(f: &ResilientFunction, d: &Distribution) -> Result<BiasReport> {
    check_dim("distribution width", f.arity(), d.m())?;
    if let Some(probs) = d.probs() {
        let mean: f64 = probs
            .iter()
            .enumerate()
            .filter(|(x, &p)| p > 0.0 && f.eval_word(*x as u64))
            .map(|(_, &p)| p)
            .sum();
        return Ok(BiasReport {
            bias: (mean - 0.5).abs(),
            mean,
            exact: true,
            interval: None,
        });
    }
    let samples = d.samples().expect("empirical");
    if samples.is_empty() {
        return Err(Error::invalid("empirical distribution has no samples"));
    }
    let ones = samples
        .iter()
        .map(|s| f.eval(s))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|&b| b)
        .count() as u64;
    let n = samples.len() as u64;
    let (lo, hi) = clopper_pearson(ones, n, MC_CONFIDENCE);
    let (blo, bhi) = if lo <= 0.5 && 0.5 <= hi {
        (0.0, (lo - 0.5).abs().max((hi - 0.5).abs()))
    } else {
        let (a, b) = ((lo - 0.5).abs(), (hi - 0.5).abs());
        (a.min(b), a.max(b))
    };
    let mean = ones as f64 / n as f64;
    Ok(BiasReport {
        bias: (mean - 0.5).abs(),
        mean,
        exact: false,
        interval: Some([blo, bhi]),
    })
}

fn check_coalition(f: &ResilientFunction, coalition: &[usize], dist: &GoodBitDistribution) -> Result<Vec<usize>> {
    let arity = f.arity();
    if coalition.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("coalition indices must be strictly increasing"));
    }
    if let Some(&i) = coalition.iter().find(|&&i| i >= arity) {
        return Err(Error::invalid(format!("coalition index {i} out of range for arity {arity}")));
    }
    if coalition.len() > MAX_COALITION {
        return Err(Error::CapExceeded {
            what: "coalition scan",
            needed: pow2(coalition.len()),
            cap: pow2(MAX_COALITION),
            hint: "coalitions are limited to 20 variables",
        });
    }
    check_dim("fixing distribution width", arity - coalition.len(), dist.n_good())?;
    let mut in_coalition = vec![false; arity];
    for &i in coalition {
        in_coalition[i] = true;
    }
    Ok((0..arity).filter(|&i| !in_coalition[i]).collect())
}

/// Probability, over fixings of the variables outside `coalition` drawn
/// from `dist`, that `f` is still undetermined.
pub fn influence_exact(
    f: &ResilientFunction,
    coalition: &[usize],
    dist: &GoodBitDistribution,
    limits: &Limits,
) -> Result<f64> {
    let outside = check_coalition(f, coalition, dist)?;
    if f.arity() > 64 {
        return Err(Error::invalid("exact influence handles arity <= 64"));
    }
    if coalition.is_empty() {
        return Ok(0.0);
    }
    limits.check(
        "exact influence",
        dist.seed_space_size().saturating_mul(pow2(coalition.len())),
        "use influence_mc or raise the work cap",
    )?;
    let support = dist.support(limits.work)?;
    Ok(chunked_sum(&support, |&(g, p)| {
        if f.undetermined_word(scatter(g, &outside), coalition) {
            p
        } else {
            0.0
        }
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceMax {
    pub value: f64,
    /// First maximizing coalition in lexicographic order.
    pub witness: Vec<usize>,
}

/// Largest influence over all coalitions of size `q`, variables outside the
/// coalition fixed from `dist` (which has `arity - q` bits).
pub fn influence_max_exact(
    f: &ResilientFunction,
    q: usize,
    dist: &GoodBitDistribution,
    limits: &Limits,
) -> Result<InfluenceMax> {
    let arity = f.arity();
    if q > arity {
        return Err(Error::invalid(format!("coalition size {q} exceeds arity {arity}")));
    }
    let count = binomial(arity, q);
    if count > MAX_COALITIONS {
        return Err(Error::CapExceeded {
            what: "coalition enumeration",
            needed: count,
            cap: MAX_COALITIONS,
            hint: "use influence_mc on chosen coalitions",
        });
    }
    if q == 0 {
        return Ok(InfluenceMax {
            value: 0.0,
            witness: Vec::new(),
        });
    }
    limits.check(
        "exact influence",
        count
            .saturating_mul(dist.seed_space_size())
            .saturating_mul(pow2(q)),
        "use influence_mc or raise the work cap",
    )?;
    let mut best = InfluenceMax {
        value: f64::NEG_INFINITY,
        witness: Vec::new(),
    };
    for coalition in (0..arity).combinations(q) {
        let v = influence_exact(f, &coalition, dist, limits)?;
        if v > best.value {
            best = InfluenceMax {
                value: v,
                witness: coalition,
            };
        }
    }
    Ok(best)
}

/// Monte-Carlo influence with a Clopper-Pearson interval at
/// [`MC_CONFIDENCE`]. Sample `i` uses counter `i` of the influence stream.
pub fn influence_mc(
    f: &ResilientFunction,
    coalition: &[usize],
    dist: &GoodBitDistribution,
    samples: u64,
    seed: u64,
) -> Result<Estimate> {
    let outside = check_coalition(f, coalition, dist)?;
    if coalition.is_empty() {
        return Ok(Estimate {
            value: 0.0,
            lower: 0.0,
            upper: 0.0,
            exact: false,
            samples,
        });
    }
    if samples == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    let arity = f.arity();
    let hits: u64 = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = counter_rng(seed, stream::INFLUENCE, i);
            let g = dist.sample(&mut rng);
            let mut x = BitVector::zeros(arity);
            for (j, &p) in outside.iter().enumerate() {
                x.set(p, g.get(j));
            }
            f.undetermined(&x, coalition) as u64
        })
        .sum();
    Ok(Estimate::from_counts(hits, samples, MC_CONFIDENCE))
}

const CHUNK: usize = 4096;

/// Sum over `items` in fixed-size chunks; the result does not depend on
/// how many threads run it.
pub(crate) fn chunked_sum<T: Sync>(items: &[T], f: impl Fn(&T) -> f64 + Sync) -> f64 {
    items
        .par_chunks(CHUNK)
        .map(|c| c.iter().map(&f).sum::<f64>())
        .collect::<Vec<_>>()
        .into_iter()
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bv(s: &str) -> BitVector {
        BitVector::parse_bits(s).unwrap()
    }

    fn maj3() -> ResilientFunction {
        ResilientFunction::majority(3).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert!(maj3().eval(&bv("110")).unwrap());
        assert!(!maj3().eval(&bv("100")).unwrap());
        let tribes = ResilientFunction::tribes(2, 2).unwrap();
        assert!(tribes.eval(&bv("1100")).unwrap());
        assert!(tribes.eval(&bv("0011")).unwrap());
        assert!(!tribes.eval(&bv("1010")).unwrap());
        let rec = ResilientFunction::recursive_majority3(1).unwrap();
        assert_eq!(rec.truth_table().unwrap(), maj3().truth_table().unwrap());
        assert!(maj3().eval(&bv("11")).is_err());
    }

    #[test]
    fn constructors_reject_bad_shapes() {
        assert!(ResilientFunction::majority(4).is_err());
        assert!(ResilientFunction::tribes(0, 3).is_err());
        assert!(ResilientFunction::recursive_majority3(0).is_err());
        assert!(ResilientFunction::explicit_table(2, BitVector::zeros(3)).is_err());
        let json = r#"{"kind":"majority","arity":6}"#;
        assert!(serde_json::from_str::<ResilientFunction>(json).is_err());
    }

    #[test]
    fn wide_inputs_match_word_path() {
        let f = ResilientFunction::recursive_majority3(4).unwrap(); // arity 81
        let mut x = BitVector::zeros(81);
        for i in (0..81).filter(|i| i % 4 != 1) {
            x.set(i, true);
        }
        // every triple holds at least two ones at the first level
        assert!(f.eval(&x).unwrap());
        let maj = ResilientFunction::majority(101).unwrap();
        let mut y = BitVector::zeros(101);
        for i in 0..51 {
            y.set(i, true);
        }
        assert!(maj.eval(&y).unwrap());
        y.set(0, false);
        assert!(!maj.eval(&y).unwrap());
    }

    #[test]
    fn recursive_majority_depth2_matches_definition() {
        let f = ResilientFunction::recursive_majority3(2).unwrap();
        let m3 = |a: bool, b: bool, c: bool| (a as u8 + b as u8 + c as u8) >= 2;
        for x in 0u64..512 {
            let b = |i: usize| (x >> i) & 1 == 1;
            let expect = m3(m3(b(0), b(1), b(2)), m3(b(3), b(4), b(5)), m3(b(6), b(7), b(8)));
            assert_eq!(f.eval_word(x), expect, "x={x:09b}");
        }
    }

    #[test]
    fn bias_examples() {
        let u3 = Distribution::uniform(3).unwrap();
        assert_eq!(bias_under(&maj3(), &u3).unwrap().bias, 0.0);
        let zero = ResilientFunction::constant(3, false).unwrap();
        assert_eq!(bias_under(&zero, &u3).unwrap().bias, 0.5);
        let skewed = Distribution::exact(3, vec![0.3, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1]).unwrap();
        assert_eq!(bias_under(&zero, &skewed).unwrap().bias, 0.5);
        // oracle: count inputs with a full tribe, Pr = 1 - (3/4)^2 = 7/16
        let tribes = ResilientFunction::tribes(2, 2).unwrap();
        let ones = (0u64..16).filter(|x| x & 0b11 == 0b11 || x & 0b1100 == 0b1100).count();
        assert_eq!(ones, 7);
        let b = bias_under(&tribes, &Distribution::uniform(4).unwrap()).unwrap();
        assert_eq!(b.bias, 1.0 / 16.0);
        assert!(bias_under(&tribes, &u3).is_err());
    }

    #[test]
    fn empirical_bias_has_interval() {
        let samples: Vec<BitVector> = (0..2000u64).map(|i| BitVector::from_word(i % 8, 3)).collect();
        let d = Distribution::empirical(3, 0, samples).unwrap();
        let r = bias_under(&maj3(), &d).unwrap();
        assert!(!r.exact);
        let [lo, hi] = r.interval.unwrap();
        assert!(lo <= r.bias && r.bias <= hi);
        assert_eq!(lo, 0.0);
    }

    #[test]
    fn influence_examples() {
        let limits = Limits::default();
        // oracle: x1 is pivotal iff x2 != x3, two of the four fixings
        let pivotal = (0..4u64).filter(|g| (g & 1) != (g >> 1)).count();
        assert_eq!(pivotal, 2);
        let v = influence_exact(&maj3(), &[0], &GoodBitDistribution::uniform(2), &limits).unwrap();
        assert_eq!(v, 0.5);
        let all = influence_exact(&maj3(), &[0, 1, 2], &GoodBitDistribution::uniform(0), &limits).unwrap();
        assert_eq!(all, 1.0);
        let none = influence_exact(&maj3(), &[], &GoodBitDistribution::uniform(3), &limits).unwrap();
        assert_eq!(none, 0.0);
        assert!(influence_exact(&maj3(), &[0], &GoodBitDistribution::uniform(3), &limits).is_err());
        assert!(influence_exact(&maj3(), &[1, 0], &GoodBitDistribution::uniform(1), &limits).is_err());
    }

    #[test]
    fn influence_max_examples() {
        let limits = Limits::default();
        let one = influence_max_exact(&maj3(), 1, &GoodBitDistribution::uniform(2), &limits).unwrap();
        assert_eq!(one.value, 0.5);
        assert_eq!(one.witness, vec![0]);
        // oracle: with two of three variables free, the remaining bit never
        // decides the majority alone
        let swing = (0..2u64)
            .all(|b| (0..4u64).map(|c| maj3().eval_word(b | (c << 1))).unique().count() == 2);
        assert!(swing);
        let two = influence_max_exact(&maj3(), 2, &GoodBitDistribution::uniform(1), &limits).unwrap();
        assert_eq!(two.value, 1.0);
        let zero = influence_max_exact(&maj3(), 0, &GoodBitDistribution::uniform(3), &limits).unwrap();
        assert_eq!((zero.value, zero.witness.len()), (0.0, 0));
    }

    #[test]
    fn influence_mc_examples() {
        let d2 = GoodBitDistribution::uniform(2);
        let est = influence_mc(&maj3(), &[0], &d2, 100_000, 11).unwrap();
        assert!(est.contains(0.5), "{est:?}");
        let empty = influence_mc(&maj3(), &[], &GoodBitDistribution::uniform(3), 10, 1).unwrap();
        assert_eq!((empty.value, empty.lower, empty.upper), (0.0, 0.0, 0.0));
        let constant = ResilientFunction::constant(3, true).unwrap();
        let c = influence_mc(&constant, &[0, 2], &GoodBitDistribution::uniform(1), 1000, 5).unwrap();
        assert_eq!(c.value, 0.0);
        let wide = ResilientFunction::majority(23).unwrap();
        let big: Vec<usize> = (0..21).collect();
        assert!(matches!(
            influence_mc(&wide, &big, &GoodBitDistribution::uniform(2), 10, 1),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn influence_is_monotone_in_coalition() {
        let limits = Limits::default();
        let fs = [
            ResilientFunction::majority(3).unwrap(),
            ResilientFunction::majority(5).unwrap(),
            ResilientFunction::tribes(2, 2).unwrap(),
            ResilientFunction::tribes(3, 3).unwrap(),
            ResilientFunction::recursive_majority3(2).unwrap(),
        ];
        for f in &fs {
            let n = f.arity();
            let infl: Vec<f64> = (0..1u64 << n)
                .map(|mask| {
                    let q: Vec<usize> = (0..n).filter(|i| (mask >> i) & 1 == 1).collect();
                    influence_exact(f, &q, &GoodBitDistribution::uniform(n - q.len()), &limits).unwrap()
                })
                .collect();
            for mask in 0..1usize << n {
                for i in 0..n {
                    let sup = mask | (1 << i);
                    assert!(infl[mask] <= infl[sup] + 1e-15, "{} {mask:b} -> {sup:b}", f.describe());
                }
            }
        }
    }

    #[test]
    fn surrogates_are_monotone() {
        for f in [
            ResilientFunction::majority(15).unwrap(),
            ResilientFunction::tribes(4, 4).unwrap(),
            ResilientFunction::tribes(3, 5).unwrap(),
            ResilientFunction::recursive_majority3(2).unwrap(),
        ] {
            assert!(f.is_monotone().unwrap(), "{}", f.describe());
        }
        let xor = ResilientFunction::from_fn(2, |x| x.count_ones() == 1).unwrap();
        assert!(!xor.is_monotone().unwrap());
    }

    #[test]
    fn bias_two_routes_agree() {
        for f in [
            ResilientFunction::majority(9).unwrap(),
            ResilientFunction::tribes(3, 4).unwrap(),
            ResilientFunction::recursive_majority3(2).unwrap(),
        ] {
            let n = f.arity();
            let direct = (0..1u64 << n).filter(|&x| f.eval_word(x)).count() as f64 / (1u64 << n) as f64;
            let table = bias_under(&f, &Distribution::uniform(n).unwrap()).unwrap();
            assert!(((direct - 0.5).abs() - table.bias).abs() < 1e-12);
        }
    }

    #[test]
    fn json_descriptor_round_trip() {
        for f in [
            ResilientFunction::majority(5).unwrap(),
            ResilientFunction::tribes(2, 3).unwrap(),
            ResilientFunction::recursive_majority3(2).unwrap(),
            ResilientFunction::constant(3, true).unwrap(),
        ] {
            let json = serde_json::to_string(&f).unwrap();
            assert_eq!(serde_json::from_str::<ResilientFunction>(&json).unwrap(), f);
        }
        let tribes: ResilientFunction =
            serde_json::from_str(r#"{"kind":"tribes","width":2,"count":2}"#).unwrap();
        assert_eq!(tribes.arity(), 4);
    }
}
