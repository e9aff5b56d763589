//! Distances, linear-test bias spectra and confidence intervals.
//!
//! Bias follows the `|Pr[0] - Pr[1]|` convention, which is twice a bit's
//! distance to uniform. Use [`bias_to_distance`] and [`distance_to_bias`]
//! for conversions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::inv_beta_reg;

use crate::distribution::Distribution;
use crate::error::{check_dim, Error, Result};

/// Slack used when comparing exactly computed floating-point quantities.
pub const EXACT_TOLERANCE: f64 = 1e-12;

/// Widest table accepted by [`linear_test_bias`] and [`vazirani_check`].
pub const MAX_SPECTRUM_BITS: usize = 20;

/// Widest table accepted by [`sd_to_uniform_empirical`].
pub const MAX_EMPIRICAL_BITS: usize = 16;

/// Samples required per outcome by [`sd_to_uniform_empirical`].
pub const SAMPLES_PER_OUTCOME: usize = 100;

#[inline]
pub fn bias_to_distance(bias: f64) -> f64 {
    bias / 2.0
}

#[inline]
pub fn distance_to_bias(distance: f64) -> f64 {
    2.0 * distance
}

/// Half the L1 distance between two probability tables of equal length.
pub fn table_distance(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Distance of a table from the uniform table of the same length.
pub fn table_distance_to_uniform(p: &[f64]) -> f64 {
    let u = 1.0 / p.len() as f64;
    0.5 * p.iter().map(|a| (a - u).abs()).sum::<f64>()
}

/// Statistical distance. Empirical inputs are replaced by their plug-in
/// tables, and the flag in the result is `true` in that case.
pub fn statistical_distance(p: &Distribution, q: &Distribution) -> Result<(f64, bool)> {
    check_dim("distribution width", p.m(), q.m())?;
    let (tp, ep) = p.to_table()?;
    let (tq, eq) = q.to_table()?;
    Ok((table_distance(&tp, &tq), ep || eq))
}

/// Walsh-Hadamard transform in place: afterwards `table[s]` is
/// `sum_x table[x] * (-1)^{popcount(s & x)}`.
pub fn walsh_hadamard(table: &mut [f64]) {
    let n = table.len();
    assert!(n.is_power_of_two(), "transform length must be a power of two");
    let mut h = 1;
    while h < n {
        table.par_chunks_mut(2 * h).for_each(|block| {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        });
        h *= 2;
    }
}

/// Bias of every nonempty parity of a distribution on `m` bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpectrumRepr", into = "SpectrumRepr")]
pub struct BiasSpectrum {
    m: usize,
    /// Indexed by subset bitmask; entry 0 (the empty test) is unused.
    biases: Vec<f64>,
    max_bias: f64,
    /// Bitmask of the first subset attaining `max_bias`.
    argmax: u64,
}

impl BiasSpectrum {
    fn from_biases(m: usize, biases: Vec<f64>) -> Self {
        let (argmax, max_bias) = biases
            .iter()
            .enumerate()
            .skip(1)
            .fold((0usize, 0.0f64), |best, (s, &b)| if b > best.1 { (s, b) } else { best });
        BiasSpectrum {
            m,
            biases,
            max_bias,
            argmax: argmax as u64,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Bias of the parity over the subset encoded by `mask` (nonzero).
    pub fn bias(&self, mask: u64) -> f64 {
        assert!(mask != 0, "the empty test has no bias");
        self.biases[mask as usize]
    }

    pub fn max_bias(&self) -> f64 {
        self.max_bias
    }

    pub fn argmax(&self) -> u64 {
        self.argmax
    }

    /// `(mask, bias)` for every nonempty subset.
    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.biases.iter().enumerate().skip(1).map(|(s, &b)| (s as u64, b))
    }

    /// `sqrt(sum_S bias(S)^2)`.
    pub fn l2_norm(&self) -> f64 {
        self.biases.iter().skip(1).map(|b| b * b).sum::<f64>().sqrt()
    }
}

#[derive(Serialize, Deserialize)]
struct SpectrumEntry {
    subset: u64,
    bias: f64,
}

#[derive(Serialize, Deserialize)]
struct SpectrumRepr {
    m: usize,
    max_bias: f64,
    argmax: u64,
    biases: Vec<SpectrumEntry>,
}

impl TryFrom<SpectrumRepr> for BiasSpectrum {
    type Error = Error;

    fn try_from(r: SpectrumRepr) -> Result<Self> {
        if r.m > MAX_SPECTRUM_BITS {
            return Err(Error::invalid(format!("spectrum width {} too large", r.m)));
        }
        check_dim("spectrum entries", (1 << r.m) - 1, r.biases.len())?;
        let mut biases = vec![0.0; 1 << r.m];
        for (i, e) in r.biases.iter().enumerate() {
            if e.subset != i as u64 + 1 {
                return Err(Error::Parse(format!("spectrum entry {i} has subset {}", e.subset)));
            }
            biases[e.subset as usize] = e.bias;
        }
        let s = BiasSpectrum::from_biases(r.m, biases);
        if s.max_bias != r.max_bias || s.argmax != r.argmax {
            return Err(Error::Parse("spectrum max_bias disagrees with its entries".into()));
        }
        Ok(s)
    }
}

impl From<BiasSpectrum> for SpectrumRepr {
    fn from(s: BiasSpectrum) -> Self {
        SpectrumRepr {
            m: s.m,
            max_bias: s.max_bias,
            argmax: s.argmax,
            biases: s.iter().map(|(subset, bias)| SpectrumEntry { subset, bias }).collect(),
        }
    }
}

/// Exhaustive linear-test spectrum via one Walsh-Hadamard pass.
pub fn linear_test_bias(d: &Distribution) -> Result<BiasSpectrum> {
    if d.m() > MAX_SPECTRUM_BITS {
        return Err(Error::invalid(format!(
            "spectrum limited to {MAX_SPECTRUM_BITS} bits, got {}",
            d.m()
        )));
    }
    let (mut table, _) = d.to_table()?;
    walsh_hadamard(&mut table);
    for b in table.iter_mut() {
        *b = b.abs();
    }
    Ok(BiasSpectrum::from_biases(d.m(), table))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VaziraniReport {
    pub m: usize,
    pub max_bias: f64,
    pub distance_to_uniform: f64,
    /// `max_bias * 2^(m/2)`.
    pub bound: f64,
    pub holds: bool,
}

/// Checks that the distance to uniform is at most `max_bias * 2^(m/2)`.
pub fn vazirani_check(d: &Distribution) -> Result<VaziraniReport> {
    let probs = d
        .probs()
        .ok_or_else(|| Error::invalid("vazirani check needs an exact table"))?;
    let spectrum = linear_test_bias(d)?;
    let sd = table_distance_to_uniform(probs);
    let bound = spectrum.max_bias() * 2f64.powf(d.m() as f64 / 2.0);
    Ok(VaziraniReport {
        m: d.m(),
        max_bias: spectrum.max_bias(),
        distance_to_uniform: sd,
        bound,
        holds: sd <= bound + EXACT_TOLERANCE,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XorReport {
    /// Distance to uniform of the XOR of the independent bits.
    pub distance: f64,
    /// `eps^t`, reported only when all inputs share one distance `eps`.
    pub literal_bound: Option<f64>,
    pub literal_bound_holds: Option<bool>,
}

/// Exact distance to uniform of the XOR of independent bits whose distances
/// to uniform are `distances`: `(1/2) * prod(2 * eps_i)`.
pub fn xor_bias_product(distances: &[f64]) -> Result<XorReport> {
    if distances.is_empty() {
        return Err(Error::invalid("need at least one bit"));
    }
    if let Some(e) = distances.iter().find(|e| !(0.0..=0.5).contains(*e)) {
        return Err(Error::invalid(format!("distance {e} outside [0, 1/2]")));
    }
    let distance = bias_to_distance(distances.iter().map(|&e| distance_to_bias(e)).product());
    let first = distances[0];
    let (literal_bound, literal_bound_holds) = if distances.iter().all(|&e| e == first) {
        let bound = first.powi(distances.len() as i32);
        (Some(bound), Some(distance <= bound + EXACT_TOLERANCE))
    } else {
        (None, None)
    };
    Ok(XorReport {
        distance,
        literal_bound,
        literal_bound_holds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSd {
    pub estimate: f64,
    /// Deviation `d` such that, with probability at least `confidence`, the
    /// true distance lies within `estimate +- d`.
    pub deviation_bound: f64,
    pub lower: f64,
    pub upper: f64,
    pub confidence: f64,
    pub samples: usize,
}

/// Uniform L1 deviation of an empirical table over `k` outcomes from `n`
/// samples, halved to a total-variation radius:
/// `P(||p_hat - p||_1 >= r) <= 2^k exp(-n r^2 / 2)`.
pub fn tv_deviation_bound(outcomes: usize, samples: usize, confidence: f64) -> f64 {
    let delta = 1.0 - confidence;
    let l1 = (2.0 * (outcomes as f64 * std::f64::consts::LN_2 + (1.0 / delta).ln()) / samples as f64)
        .sqrt();
    0.5 * l1
}

/// Plug-in distance to uniform of `samples` (each an `m`-bit word).
pub fn sd_to_uniform_empirical(samples: &[u64], m: usize, confidence: f64) -> Result<EmpiricalSd> {
    if m > MAX_EMPIRICAL_BITS {
        return Err(Error::invalid(format!(
            "empirical distance limited to {MAX_EMPIRICAL_BITS} bits, got {m}"
        )));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::invalid(format!("confidence {confidence} must lie in (0, 1)")));
    }
    let needed = SAMPLES_PER_OUTCOME << m;
    if samples.len() < needed {
        return Err(Error::invalid(format!(
            "{} samples is too few for {m} bits; need at least {needed}",
            samples.len()
        )));
    }
    let mut counts = vec![0u64; 1 << m];
    for &s in samples {
        if s >> m != 0 {
            return Err(Error::invalid(format!("sample {s} wider than {m} bits")));
        }
        counts[s as usize] += 1;
    }
    let n = samples.len() as f64;
    let table: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    let estimate = table_distance_to_uniform(&table);
    let dev = tv_deviation_bound(1 << m, samples.len(), confidence);
    Ok(EmpiricalSd {
        estimate,
        deviation_bound: dev,
        lower: (estimate - dev).max(0.0),
        upper: (estimate + dev).min(1.0),
        confidence,
        samples: samples.len(),
    })
}

/// Two-sided Clopper-Pearson interval for `successes` out of `trials`.
pub fn clopper_pearson(successes: u64, trials: u64, confidence: f64) -> (f64, f64) {
    assert!(successes <= trials && trials > 0);
    let alpha = 1.0 - confidence;
    let (k, n) = (successes as f64, trials as f64);
    let lower = if successes == 0 {
        0.0
    } else {
        inv_beta_reg(k, n - k + 1.0, alpha / 2.0)
    };
    let upper = if successes == trials {
        1.0
    } else {
        inv_beta_reg(k + 1.0, n - k, 1.0 - alpha / 2.0)
    };
    (lower, upper)
}

/// A probability that is either computed exactly or estimated with an
/// interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub exact: bool,
    /// Sample count for estimates, 0 for exact values.
    pub samples: u64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate {
            value,
            lower: value,
            upper: value,
            exact: true,
            samples: 0,
        }
    }

    pub fn from_counts(successes: u64, trials: u64, confidence: f64) -> Self {
        let (lower, upper) = clopper_pearson(successes, trials, confidence);
        Estimate {
            value: successes as f64 / trials as f64,
            lower,
            upper,
            exact: false,
            samples: trials,
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower - EXACT_TOLERANCE <= v && v <= self.upper + EXACT_TOLERANCE
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bit(p1: f64) -> Distribution {
        Distribution::exact(1, vec![1.0 - p1, p1]).unwrap()
    }

    #[test]
    fn distance_examples() {
        let u1 = Distribution::uniform(1).unwrap();
        assert_eq!(statistical_distance(&u1, &u1).unwrap(), (0.0, false));
        let point = Distribution::point_mass(1, 0).unwrap();
        assert_eq!(statistical_distance(&point, &u1).unwrap().0, 0.5);
        let d = statistical_distance(&bit(0.4), &u1).unwrap().0;
        assert!((d - 0.1).abs() < 1e-15);
        assert!(statistical_distance(&u1, &Distribution::uniform(2).unwrap()).is_err());
    }

    #[test]
    fn spectrum_examples() {
        let u = linear_test_bias(&Distribution::uniform(4).unwrap()).unwrap();
        assert!(u.iter().all(|(_, b)| b == 0.0));
        assert_eq!(u.max_bias(), 0.0);

        // second bit copies the first
        let copy = Distribution::uniform_over(2, &[0b00, 0b11]).unwrap();
        let s = linear_test_bias(&copy).unwrap();
        assert_eq!((s.bias(0b01), s.bias(0b10), s.bias(0b11)), (0.0, 0.0, 1.0));
        assert_eq!(s.argmax(), 0b11);
    }

    #[test]
    fn spectrum_matches_direct_parities() {
        // oracle: evaluate every parity directly on the table
        let probs = [0.05, 0.1, 0.2, 0.05, 0.15, 0.15, 0.25, 0.05];
        let d = Distribution::exact(3, probs.to_vec()).unwrap();
        let s = linear_test_bias(&d).unwrap();
        for mask in 1u64..8 {
            let direct: f64 = (0..8u64)
                .map(|x| if (x & mask).count_ones() % 2 == 0 { probs[x as usize] } else { -probs[x as usize] })
                .sum();
            assert!((s.bias(mask) - direct.abs()).abs() < 1e-15);
        }
    }

    #[test]
    fn vazirani_examples() {
        let u = vazirani_check(&Distribution::uniform(3).unwrap()).unwrap();
        assert!(u.holds && u.distance_to_uniform == 0.0 && u.bound == 0.0);
        let copy = vazirani_check(&Distribution::uniform_over(2, &[0b00, 0b11]).unwrap()).unwrap();
        assert_eq!((copy.distance_to_uniform, copy.bound, copy.holds), (0.5, 2.0, true));
        let even = vazirani_check(&Distribution::uniform_over(2, &[0b00, 0b11]).unwrap()).unwrap();
        assert!(even.holds);
    }

    #[test]
    fn xor_examples() {
        assert_eq!(xor_bias_product(&[0.5, 0.5]).unwrap().distance, 0.5);
        assert_eq!(xor_bias_product(&[0.0, 0.3]).unwrap().distance, 0.0);
        // oracle: two independent bits with Pr[1] = 0.4 give Pr[xor = 1] = 0.48
        let p_one = 2.0 * 0.4 * 0.6;
        let direct = (p_one - 0.5f64).abs();
        let r = xor_bias_product(&[0.1, 0.1]).unwrap();
        assert!((r.distance - 0.02).abs() < 1e-15);
        assert!((r.distance - direct).abs() < 1e-15);
        // eps^t = 0.01 < 0.02: the one-bit literal form does not hold
        assert_eq!(r.literal_bound_holds, Some(false));
        assert!(xor_bias_product(&[0.6]).is_err());
        assert!(xor_bias_product(&[]).is_err());
        assert_eq!(xor_bias_product(&[0.1, 0.2]).unwrap().literal_bound, None);
    }

    #[test]
    fn empirical_examples() {
        let zeros = vec![0u64; 200];
        let r = sd_to_uniform_empirical(&zeros, 1, 0.99).unwrap();
        assert_eq!(r.estimate, 0.5);
        let err = sd_to_uniform_empirical(&zeros[..150], 1, 0.99).unwrap_err();
        assert!(err.to_string().contains("need at least 200"));
    }

    #[test]
    fn clopper_pearson_known_values() {
        // 0 of 10 at 95%: upper = 1 - 0.025^(1/10)
        let (lo, hi) = clopper_pearson(0, 10, 0.95);
        assert_eq!(lo, 0.0);
        assert!((hi - (1.0 - 0.025f64.powf(0.1))).abs() < 1e-9);
        let (lo, hi) = clopper_pearson(5, 10, 0.95);
        assert!((lo - 0.187_086_3).abs() < 1e-6, "{lo}");
        assert!((hi - 0.812_913_7).abs() < 1e-6, "{hi}");
    }

    fn arb_table(max_m: usize) -> impl Strategy<Value = Distribution> {
        (1..=max_m).prop_flat_map(|m| {
            proptest::collection::vec(0.0f64..1.0, 1 << m).prop_filter_map("zero mass", move |w| {
                let total: f64 = w.iter().sum();
                (total > 0.0).then(|| {
                    Distribution::exact(m, w.iter().map(|x| x / total).collect()).unwrap()
                })
            })
        })
    }

    proptest! {
        #[test]
        fn distance_is_a_metric(seed in any::<u64>(), m in 1usize..6) {
            let mk = |s: u64| {
                let mut x = s;
                let w: Vec<f64> = (0..1 << m).map(|_| {
                    x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    (x >> 11) as f64
                }).collect();
                let t: f64 = w.iter().sum();
                Distribution::exact(m, w.iter().map(|v| v / t).collect()).unwrap()
            };
            let (a, b, c) = (mk(seed), mk(seed ^ 0xabc), mk(seed.rotate_left(17)));
            let ab = statistical_distance(&a, &b).unwrap().0;
            let ba = statistical_distance(&b, &a).unwrap().0;
            let bc = statistical_distance(&b, &c).unwrap().0;
            let ac = statistical_distance(&a, &c).unwrap().0;
            prop_assert_eq!(ab, ba);
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert!(ac <= ab + bc + 1e-12);
        }

        #[test]
        fn parseval_bound(d in arb_table(10)) {
            let s = linear_test_bias(&d).unwrap();
            let sd = table_distance_to_uniform(d.probs().unwrap());
            prop_assert!(sd <= 0.5 * s.l2_norm() + 1e-12);
        }

        #[test]
        fn product_spectrum_factorizes(p in proptest::collection::vec(0.0f64..=1.0, 1..7)) {
            let m = p.len();
            let probs: Vec<f64> = (0..1u64 << m)
                .map(|x| (0..m).map(|i| if (x >> i) & 1 == 1 { p[i] } else { 1.0 - p[i] }).product())
                .collect();
            let total: f64 = probs.iter().sum();
            let d = Distribution::exact(m, probs.iter().map(|v| v / total).collect()).unwrap();
            let s = linear_test_bias(&d).unwrap();
            for (mask, b) in s.iter() {
                let prod: f64 = (0..m).filter(|i| (mask >> i) & 1 == 1).map(|i| s.bias(1 << i)).product();
                prop_assert!((b - prod).abs() < 1e-12);
            }
        }

        #[test]
        fn spectrum_json_round_trip(d in arb_table(4)) {
            let s = linear_test_bias(&d).unwrap();
            let json = serde_json::to_string(&s).unwrap();
            let back: BiasSpectrum = serde_json::from_str(&json).unwrap();
            prop_assert_eq!(serde_json::to_string(&back).unwrap(), json);
        }
    }
}
