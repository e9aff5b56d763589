//! Binary linear `[r, m, d]` codes held as `m x r` generator matrices with
//! an exhaustively verified minimum distance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::gf2::{BitMatrix, BitVector};
use crate::rng::{counter_rng, stream};
use rand::Rng;

/// Largest message length whose codewords are enumerated.
pub const MAX_ENUM_MESSAGE_BITS: usize = 24;

/// Largest message length accepted by [`build_good_code`].
pub const MAX_SEARCH_MESSAGE_BITS: usize = 20;

/// Attempt budget of [`build_good_code`] when none is given.
pub const DEFAULT_SEARCH_ATTEMPTS: usize = 2000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CodeFile", into = "CodeFile")]
pub struct LinearCode {
    generator: BitMatrix,
    verified_d: usize,
    seed: Option<u64>,
    construction: String,
}

/// Which way [`LinearCode::encode`] multiplies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// Length-`m` message to length-`r` codeword, `v G`.
    Message,
    /// Length-`r` vector to length-`m` output, `G y`.
    Compress,
}

impl LinearCode {
    /// Wraps a full-rank generator. The distance starts unverified.
    pub fn new(generator: BitMatrix, construction: impl Into<String>) -> Result<Self> {
        if generator.rows() == 0 {
            return Err(Error::invalid("a code needs at least one generator row"));
        }
        let rank = generator.rank();
        if rank != generator.rows() {
            return Err(Error::invalid(format!(
                "generator has rank {rank} but {} rows",
                generator.rows()
            )));
        }
        Ok(LinearCode {
            generator,
            verified_d: 0,
            seed: None,
            construction: construction.into(),
        })
    }

    /// Computes and records the minimum distance.
    pub fn verified(mut self) -> Result<Self> {
        self.verified_d = min_distance_exact(&self)?;
        Ok(self)
    }

    pub fn m(&self) -> usize {
        self.generator.rows()
    }

    pub fn r(&self) -> usize {
        self.generator.cols()
    }

    pub fn generator(&self) -> &BitMatrix {
        &self.generator
    }

    /// Verified minimum distance, 0 if never verified.
    pub fn verified_d(&self) -> usize {
        self.verified_d
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn construction(&self) -> &str {
        &self.construction
    }

    pub fn encode(&self, v: &BitVector, direction: Direction) -> Result<BitVector> {
        match direction {
            Direction::Message => {
                check_dim("message length", self.m(), v.len())?;
                self.generator.vecmat(v)
            }
            Direction::Compress => {
                check_dim("compression input length", self.r(), v.len())?;
                self.generator.matvec(v)
            }
        }
    }

    /// Number of codewords of each weight `0..=r`.
    pub fn weight_distribution(&self) -> Result<Vec<u64>> {
        let m = self.m();
        check_message_bits(m)?;
        let r = self.r();
        let rows: Vec<Vec<u64>> = self
            .generator
            .row_vectors()
            .iter()
            .map(|v| v.words().to_vec())
            .collect();
        let parts: Vec<Vec<u64>> = gray_chunks(m)
            .into_par_iter()
            .map(|(prefix, low)| {
                let mut hist = vec![0u64; r + 1];
                gray_walk(&rows, m, prefix, low, |w| {
                    hist[w] += 1;
                    true
                });
                hist
            })
            .collect();
        // the walk skips the zero message
        let mut hist = vec![0u64; r + 1];
        hist[0] = 1;
        for part in parts {
            for (h, p) in hist.iter_mut().zip(part) {
                *h += p;
            }
        }
        Ok(hist)
    }

    /// Generator of the dual code, i.e. a parity-check matrix.
    pub fn parity_check(&self) -> BitMatrix {
        self.generator.null_space()
    }
}

fn check_message_bits(m: usize) -> Result<()> {
    if m > MAX_ENUM_MESSAGE_BITS {
        return Err(Error::CapExceeded {
            what: "codeword enumeration",
            needed: 1u128 << m,
            cap: 1u128 << MAX_ENUM_MESSAGE_BITS,
            hint: "distance verification handles m <= 24",
        });
    }
    Ok(())
}

/// Splits `0..2^m` into `(prefix, low_bits)` chunks: messages whose top
/// `m - low_bits` bits equal `prefix`.
fn gray_chunks(m: usize) -> Vec<(u64, usize)> {
    let top = m.min(6);
    let low = m - top;
    (0..1u64 << top).map(|p| (p, low)).collect()
}

/// Visits the weights of every codeword in one chunk, skipping the zero
/// message. Stops early when `visit` returns false.
fn gray_walk(rows: &[Vec<u64>], m: usize, prefix: u64, low: usize, mut visit: impl FnMut(usize) -> bool) {
    let words = rows[0].len();
    let mut cw = vec![0u64; words];
    for (i, row) in rows.iter().enumerate().take(m).skip(low) {
        if (prefix >> (i - low)) & 1 == 1 {
            for (a, b) in cw.iter_mut().zip(row) {
                *a ^= b;
            }
        }
    }
    let weight = |cw: &[u64]| cw.iter().map(|w| w.count_ones() as usize).sum::<usize>();
    if prefix != 0 && !visit(weight(&cw)) {
        return;
    }
    for step in 1u64..1 << low {
        let flip = step.trailing_zeros() as usize;
        for (a, b) in cw.iter_mut().zip(&rows[flip]) {
            *a ^= b;
        }
        if !visit(weight(&cw)) {
            return;
        }
    }
}

/// Minimum weight over nonzero codewords, or `None` once some codeword of
/// weight at most `floor` turns up.
fn min_weight_above(code: &LinearCode, floor: usize) -> Option<usize> {
    let m = code.m();
    let rows: Vec<Vec<u64>> = code
        .generator
        .row_vectors()
        .iter()
        .map(|v| v.words().to_vec())
        .collect();
    let mins: Vec<Option<usize>> = gray_chunks(m)
        .into_par_iter()
        .map(|(prefix, low)| {
            let mut best = usize::MAX;
            gray_walk(&rows, m, prefix, low, |w| {
                best = best.min(w);
                best > floor
            });
            (best > floor).then_some(best)
        })
        .collect();
    mins.into_iter().try_fold(usize::MAX, |acc, v| v.map(|v| acc.min(v)))
}

/// Exhaustive minimum distance over the `2^m - 1` nonzero messages.
pub fn min_distance_exact(code: &LinearCode) -> Result<usize> {
    check_message_bits(code.m())?;
    Ok(min_weight_above(code, 0).expect("full-rank generator has no nonzero codeword of weight 0"))
}

/// Random systematic codes `[I | P]`, checked exhaustively, until one has
/// distance at least `target_d`. Attempt `k` draws `P` from counter `k` of
/// the code-search stream under `seed`.
pub fn build_good_code(
    m: usize,
    r: usize,
    target_d: usize,
    seed: u64,
    attempts: usize,
) -> Result<LinearCode> {
    if m == 0 || m > MAX_SEARCH_MESSAGE_BITS {
        return Err(Error::invalid(format!(
            "message length {m} outside 1..={MAX_SEARCH_MESSAGE_BITS}"
        )));
    }
    if r < m {
        return Err(Error::invalid(format!("codeword length {r} shorter than message length {m}")));
    }
    if target_d == 0 || target_d > r - m + 1 {
        return Err(Error::invalid(format!(
            "target distance {target_d} outside 1..={} (Singleton bound for [{r},{m}])",
            r - m + 1
        )));
    }
    let mut best = 0;
    for attempt in 0..attempts {
        let mut rng = counter_rng(seed, stream::CODE_SEARCH, attempt as u64);
        let mut g = BitMatrix::zeros(m, r);
        for i in 0..m {
            g.set(i, i, true);
            for j in m..r {
                g.set(i, j, rng.gen::<bool>());
            }
        }
        let mut code = LinearCode::new(g, format!("random-systematic attempt {attempt}"))?;
        if let Some(d) = min_weight_above(&code, best) {
            best = d;
            if d >= target_d {
                code.verified_d = d;
                code.seed = Some(seed);
                return Ok(code);
            }
        }
    }
    Err(Error::SearchFailed {
        attempts,
        target: target_d,
        best,
    })
}

/// Named codes: `identity-k`, `repetition-r`, `hamming-7-4`, `simplex-k`
/// (also spelled `simplex-kK`). The distance is re-verified against its
/// closed form.
pub fn preset_code(name: &str) -> Result<LinearCode> {
    let unknown = || Error::invalid(format!("unknown preset code {name:?}"));
    let param = |prefix: &str| -> Result<Option<usize>> {
        match name.strip_prefix(prefix) {
            None => Ok(None),
            Some(rest) => rest
                .trim_start_matches('k')
                .parse::<usize>()
                .map(Some)
                .map_err(|_| unknown()),
        }
    };
    let (generator, expected_d) = if name == "hamming-7-4" {
        let g = BitMatrix::parse_rows(&["1000110", "0100101", "0010011", "0001111"])?;
        (g, 3)
    } else if let Some(k) = param("identity-")? {
        (BitMatrix::identity(k), 1)
    } else if let Some(r) = param("repetition-")? {
        let mut g = BitMatrix::zeros(1, r);
        for j in 0..r {
            g.set(0, j, true);
        }
        (g, r)
    } else if let Some(k) = param("simplex-")? {
        if k == 0 || k > 16 {
            return Err(Error::invalid(format!("simplex dimension {k} outside 1..=16")));
        }
        let r = (1 << k) - 1;
        let mut g = BitMatrix::zeros(k, r);
        for col in 1..=r {
            for i in 0..k {
                g.set(i, col - 1, (col >> i) & 1 == 1);
            }
        }
        (g, 1 << (k - 1))
    } else {
        return Err(unknown());
    };
    let code = LinearCode::new(generator, name)?.verified()?;
    if code.verified_d != expected_d {
        return Err(Error::invalid(format!(
            "preset {name} verified at distance {}, expected {expected_d}",
            code.verified_d
        )));
    }
    Ok(code)
}

#[derive(Serialize, Deserialize)]
struct CodeFile {
    m: usize,
    r: usize,
    rows: Vec<String>,
    verified_d: usize,
    seed: Option<u64>,
    construction: String,
}

impl TryFrom<CodeFile> for LinearCode {
    type Error = Error;

    fn try_from(f: CodeFile) -> Result<Self> {
        check_dim("code row count", f.m, f.rows.len())?;
        let rows = f
            .rows
            .iter()
            .map(|h| BitVector::from_hex(h, f.r))
            .collect::<Result<Vec<_>>>()?;
        let mut code = LinearCode::new(BitMatrix::from_rows(rows, f.r)?, f.construction)?;
        code.seed = f.seed;
        if f.verified_d > 0 {
            let d = min_distance_exact(&code)?;
            if d != f.verified_d {
                return Err(Error::invalid(format!(
                    "code file claims distance {} but the generator has distance {d}",
                    f.verified_d
                )));
            }
            code.verified_d = d;
        }
        Ok(code)
    }
}

impl From<LinearCode> for CodeFile {
    fn from(c: LinearCode) -> Self {
        CodeFile {
            m: c.m(),
            r: c.r(),
            rows: c.generator.row_vectors().iter().map(BitVector::to_hex).collect(),
            verified_d: c.verified_d,
            seed: c.seed,
            construction: c.construction,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bv(s: &str) -> BitVector {
        BitVector::parse_bits(s).unwrap()
    }

    /// Minimum distance by direct enumeration of messages, independent of
    /// the Gray-code walk.
    fn brute_distance(code: &LinearCode) -> usize {
        (1u64..1 << code.m())
            .map(|v| {
                code.encode(&BitVector::from_word(v, code.m()), Direction::Message)
                    .unwrap()
                    .weight()
            })
            .min()
            .unwrap()
    }

    #[test]
    fn encode_examples() {
        let rep = preset_code("repetition-5").unwrap();
        assert_eq!(rep.encode(&bv("1"), Direction::Message).unwrap(), bv("11111"));
        let id = preset_code("identity-4").unwrap();
        assert_eq!(id.encode(&bv("1011"), Direction::Message).unwrap(), bv("1011"));
        let parity = LinearCode::new(BitMatrix::parse_rows(&["111"]).unwrap(), "parity").unwrap();
        assert_eq!(parity.encode(&bv("110"), Direction::Compress).unwrap(), bv("0"));
        assert!(parity.encode(&bv("11"), Direction::Compress).is_err());
        assert!(parity.encode(&bv("11"), Direction::Message).is_err());
    }

    #[test]
    fn distance_examples() {
        assert_eq!(min_distance_exact(&preset_code("identity-3").unwrap()).unwrap(), 1);
        assert_eq!(min_distance_exact(&preset_code("repetition-5").unwrap()).unwrap(), 5);
        let hamming = preset_code("hamming-7-4").unwrap();
        assert_eq!(brute_distance(&hamming), 3);
        assert_eq!(hamming.verified_d(), 3);
    }

    #[test]
    fn simplex_is_constant_weight() {
        let s = preset_code("simplex-3").unwrap();
        assert_eq!((s.m(), s.r(), s.verified_d()), (3, 7, 4));
        let hist = s.weight_distribution().unwrap();
        assert_eq!(hist, vec![1, 0, 0, 0, 7, 0, 0, 0]);
        assert_eq!(preset_code("simplex-k3").unwrap().generator(), s.generator());
    }

    #[test]
    fn unknown_presets() {
        assert!(preset_code("golay-24").is_err());
        assert!(preset_code("identity-x").is_err());
        assert!(preset_code("identity-0").is_err());
    }

    #[test]
    fn rank_deficient_generator_rejected() {
        let g = BitMatrix::parse_rows(&["110", "110"]).unwrap();
        assert!(LinearCode::new(g, "dup").is_err());
    }

    #[test]
    fn gray_walk_matches_brute_force() {
        for seed in 0..20 {
            let code = build_good_code(9, 23, 1, seed, 1).unwrap();
            assert_eq!(code.verified_d(), brute_distance(&code), "seed {seed}");
            let hist = code.weight_distribution().unwrap();
            assert_eq!(hist.iter().sum::<u64>(), 1 << 9);
            assert_eq!(hist[0], 1);
        }
    }

    #[test]
    fn build_examples() {
        let rep = build_good_code(1, 5, 5, 0, DEFAULT_SEARCH_ATTEMPTS).unwrap();
        assert_eq!(rep.generator().row(0), &bv("11111"));
        assert_eq!(rep.verified_d(), 5);

        let ham = build_good_code(4, 7, 3, 1, DEFAULT_SEARCH_ATTEMPTS).unwrap();
        assert!(min_distance_exact(&ham).unwrap() >= 3);
        assert_eq!(build_good_code(4, 7, 3, 1, DEFAULT_SEARCH_ATTEMPTS).unwrap(), ham);

        match build_good_code(4, 7, 4, 1, 300) {
            Err(Error::SearchFailed { best, target: 4, attempts: 300 }) => assert_eq!(best, 3),
            other => panic!("expected search failure, got {other:?}"),
        }
        assert!(build_good_code(4, 7, 5, 1, 10).is_err());
        assert!(build_good_code(5, 4, 1, 1, 10).is_err());
        assert!(build_good_code(21, 30, 1, 1, 10).is_err());
    }

    #[test]
    fn row_combinations_respect_distance() {
        for name in ["identity-3", "repetition-5", "hamming-7-4", "simplex-3", "simplex-4"] {
            let code = preset_code(name).unwrap();
            let g = code.generator();
            for mask in 1u64..1 << code.m() {
                let subset: Vec<usize> = (0..code.m()).filter(|i| (mask >> i) & 1 == 1).collect();
                let w = g.row_combination(&subset).unwrap().weight();
                assert!((code.verified_d()..=code.r()).contains(&w), "{name} {mask:b}");
            }
        }
    }

    /// MacWilliams identity: the dual weight distribution determines this
    /// code's, giving an independent route to the minimum distance.
    fn macwilliams(dual_hist: &[u64], r: usize, dual_dim: usize) -> Vec<f64> {
        let kraw = |k: usize, i: usize| -> f64 {
            (0..=k)
                .map(|j| {
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    sign * choose(i, j) * choose(r - i, k - j)
                })
                .sum()
        };
        (0..=r)
            .map(|k| {
                (0..=r).map(|i| dual_hist[i] as f64 * kraw(k, i)).sum::<f64>() / (1u64 << dual_dim) as f64
            })
            .collect()
    }

    fn choose(n: usize, k: usize) -> f64 {
        if k > n {
            return 0.0;
        }
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    #[test]
    fn dual_view_agrees_with_direct_distance() {
        for name in ["hamming-7-4", "simplex-3", "simplex-4", "repetition-5"] {
            let code = preset_code(name).unwrap();
            let h = code.parity_check();
            assert_eq!(h.rows(), code.r() - code.m());
            let dual = LinearCode::new(h.clone(), "dual").unwrap();
            let dual_hist = dual.weight_distribution().unwrap();
            let hist = macwilliams(&dual_hist, code.r(), h.rows());
            let d = (1..=code.r()).find(|&w| hist[w].round() as u64 > 0).unwrap();
            assert_eq!(d, code.verified_d(), "{name}");
            let direct = code.weight_distribution().unwrap();
            for (a, b) in hist.iter().zip(&direct) {
                assert!((a - *b as f64).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn code_file_round_trip_and_validation() {
        let code = build_good_code(4, 7, 3, 9, DEFAULT_SEARCH_ATTEMPTS).unwrap();
        let json = serde_json::to_string(&code).unwrap();
        let back: LinearCode = serde_json::from_str(&json).unwrap();
        assert_eq!(back, code);
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
        let forged = json.replace(&format!("\"verified_d\":{}", code.verified_d()), "\"verified_d\":4");
        assert!(serde_json::from_str::<LinearCode>(&forged).is_err());
    }
}
