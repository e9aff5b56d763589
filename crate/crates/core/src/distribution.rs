//! Distributions over `{0,1}^m`: exact probability tables for small `m`, or
//! a batch of samples with the seed that produced it.
//!
//! Table index `x` is the outcome whose bit `i` is `(x >> i) & 1`.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::gf2::{gather, BitVector};

/// Largest width held as an exact table.
pub const MAX_TABLE_BITS: usize = 24;

/// Tolerance on the total mass of an exact table.
pub const MASS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionRepr", into = "DistributionRepr")]
pub struct Distribution {
    m: usize,
    kind: Kind,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Exact(Vec<f64>),
    Empirical { seed: u64, samples: Vec<BitVector> },
}

impl Distribution {
    pub fn exact(m: usize, probs: Vec<f64>) -> Result<Self> {
        if m > MAX_TABLE_BITS {
            return Err(Error::invalid(format!(
                "exact tables are limited to {MAX_TABLE_BITS} bits, got {m}"
            )));
        }
        check_dim("probability table", 1 << m, probs.len())?;
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::invalid(format!("probability {p} is not a nonnegative number")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::invalid(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Distribution {
            m,
            kind: Kind::Exact(probs),
        })
    }

    pub fn uniform(m: usize) -> Result<Self> {
        if m > MAX_TABLE_BITS {
            return Err(Error::invalid(format!(
                "exact tables are limited to {MAX_TABLE_BITS} bits, got {m}"
            )));
        }
        let size = 1usize << m;
        Distribution::exact(m, vec![1.0 / size as f64; size])
    }

    pub fn point_mass(m: usize, outcome: u64) -> Result<Self> {
        if m > MAX_TABLE_BITS || outcome >> m != 0 {
            return Err(Error::invalid(format!("outcome {outcome} does not fit in {m} bits")));
        }
        let mut probs = vec![0.0; 1 << m];
        probs[outcome as usize] = 1.0;
        Distribution::exact(m, probs)
    }

    /// Uniform distribution over the listed outcomes (repeats count twice).
    pub fn uniform_over(m: usize, outcomes: &[u64]) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::invalid("empty support"));
        }
        if m > MAX_TABLE_BITS {
            return Err(Error::invalid(format!(
                "exact tables are limited to {MAX_TABLE_BITS} bits, got {m}"
            )));
        }
        let mut probs = vec![0.0; 1 << m];
        let w = 1.0 / outcomes.len() as f64;
        for &o in outcomes {
            if o >> m != 0 {
                return Err(Error::invalid(format!("outcome {o} does not fit in {m} bits")));
            }
            probs[o as usize] += w;
        }
        Distribution::exact(m, probs)
    }

    /// Table built from `(outcome, weight)` pairs; weights must sum to 1.
    pub fn from_weighted(m: usize, items: impl IntoIterator<Item = (u64, f64)>) -> Result<Self> {
        if m > MAX_TABLE_BITS {
            return Err(Error::invalid(format!(
                "exact tables are limited to {MAX_TABLE_BITS} bits, got {m}"
            )));
        }
        let mut probs = vec![0.0; 1 << m];
        for (o, w) in items {
            probs[o as usize] += w;
        }
        Distribution::exact(m, probs)
    }

    pub fn empirical(m: usize, seed: u64, samples: Vec<BitVector>) -> Result<Self> {
        for s in &samples {
            check_dim("sample width", m, s.len())?;
        }
        Ok(Distribution {
            m,
            kind: Kind::Empirical { seed, samples },
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.kind, Kind::Exact(_))
    }

    /// The exact table, if this is one.
    pub fn probs(&self) -> Option<&[f64]> {
        match &self.kind {
            Kind::Exact(p) => Some(p),
            Kind::Empirical { .. } => None,
        }
    }

    pub fn samples(&self) -> Option<&[BitVector]> {
        match &self.kind {
            Kind::Exact(_) => None,
            Kind::Empirical { samples, .. } => Some(samples),
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match &self.kind {
            Kind::Exact(_) => None,
            Kind::Empirical { seed, .. } => Some(*seed),
        }
    }

    /// Probability table; for empirical input this is the plug-in table of
    /// sample frequencies, and the flag is `true` to mark it an estimate.
    pub fn to_table(&self) -> Result<(Vec<f64>, bool)> {
        match &self.kind {
            Kind::Exact(p) => Ok((p.clone(), false)),
            Kind::Empirical { samples, .. } => {
                if self.m > MAX_TABLE_BITS {
                    return Err(Error::invalid(format!(
                        "cannot tabulate {}-bit samples, limit is {MAX_TABLE_BITS}",
                        self.m
                    )));
                }
                if samples.is_empty() {
                    return Err(Error::invalid("empirical distribution has no samples"));
                }
                let mut counts = vec![0u64; 1 << self.m];
                for s in samples {
                    counts[s.to_word().expect("width checked") as usize] += 1;
                }
                let n = samples.len() as f64;
                Ok((counts.into_iter().map(|c| c as f64 / n).collect(), true))
            }
        }
    }

    /// Exact marginal on `coords` (in the listed order).
    pub fn marginal(&self, coords: &[usize]) -> Result<Distribution> {
        let probs = self
            .probs()
            .ok_or_else(|| Error::invalid("marginal needs an exact table"))?;
        if let Some(&c) = coords.iter().find(|&&c| c >= self.m) {
            return Err(Error::invalid(format!("coordinate {c} out of range for width {}", self.m)));
        }
        let mut out = vec![0.0; 1 << coords.len()];
        for (x, &p) in probs.iter().enumerate() {
            if p != 0.0 {
                out[gather(x as u64, coords) as usize] += p;
            }
        }
        Distribution::exact(coords.len(), out)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum DistributionRepr {
    ExactTable {
        m: usize,
        probs: Vec<f64>,
    },
    Empirical {
        m: usize,
        seed: u64,
        count: usize,
        samples: Vec<String>,
    },
}

impl TryFrom<DistributionRepr> for Distribution {
    type Error = Error;

    fn try_from(r: DistributionRepr) -> Result<Self> {
        match r {
            DistributionRepr::ExactTable { m, probs } => Distribution::exact(m, probs),
            DistributionRepr::Empirical {
                m,
                seed,
                count,
                samples,
            } => {
                check_dim("empirical sample count", count, samples.len())?;
                let samples = samples
                    .iter()
                    .map(|h| BitVector::from_hex(h, m))
                    .collect::<Result<Vec<_>>>()?;
                Distribution::empirical(m, seed, samples)
            }
        }
    }
}

impl From<Distribution> for DistributionRepr {
    fn from(d: Distribution) -> Self {
        match d.kind {
            Kind::Exact(probs) => DistributionRepr::ExactTable { m: d.m, probs },
            Kind::Empirical { seed, samples } => DistributionRepr::Empirical {
                m: d.m,
                seed,
                count: samples.len(),
                samples: samples.iter().map(BitVector::to_hex).collect(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_tables() {
        assert!(Distribution::exact(1, vec![0.5, 0.6]).is_err());
        assert!(Distribution::exact(1, vec![1.5, -0.5]).is_err());
        assert!(Distribution::exact(2, vec![0.5, 0.5]).is_err());
        assert!(Distribution::exact(1, vec![0.25, 0.75]).is_ok());
    }

    #[test]
    fn marginal_of_even_parity() {
        let d = Distribution::uniform_over(3, &[0b000, 0b110, 0b101, 0b011]).unwrap();
        let pair = d.marginal(&[0, 2]).unwrap();
        assert_eq!(pair.probs().unwrap(), &[0.25; 4]);
        let full = d.marginal(&[0, 1, 2]).unwrap();
        assert_eq!(full, d);
    }

    #[test]
    fn empirical_plug_in_table() {
        let samples = ["0", "1", "1", "1"]
            .iter()
            .map(|s| BitVector::parse_bits(s).unwrap())
            .collect();
        let d = Distribution::empirical(1, 9, samples).unwrap();
        let (table, estimate) = d.to_table().unwrap();
        assert!(estimate);
        assert_eq!(table, vec![0.25, 0.75]);
        let json = serde_json::to_string(&d).unwrap();
        let back: Distribution = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d);
    }
}
