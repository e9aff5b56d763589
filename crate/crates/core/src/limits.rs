//! Enumeration work caps.

use crate::error::{Error, Result};

/// Default enumeration budget, in work units.
pub const DEFAULT_WORK_CAP: u128 = 1 << 28;

/// Environment variable overriding [`DEFAULT_WORK_CAP`].
pub const WORK_CAP_ENV: &str = "NOBF_WORK_CAP";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub work: u128,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            work: DEFAULT_WORK_CAP,
        }
    }
}

impl Limits {
    pub fn new(work: u128) -> Self {
        Limits { work }
    }

    /// Default caps, with `NOBF_WORK_CAP` applied when it parses as an integer.
    pub fn from_env() -> Self {
        std::env::var(WORK_CAP_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<u128>().ok())
            .map(Limits::new)
            .unwrap_or_default()
    }

    pub(crate) fn check(&self, what: &'static str, needed: u128, hint: &'static str) -> Result<()> {
        if needed > self.work {
            Err(Error::CapExceeded {
                what,
                needed,
                cap: self.work,
                hint,
            })
        } else {
            Ok(())
        }
    }
}

/// `2^bits` saturating into `u128`.
pub(crate) fn pow2(bits: usize) -> u128 {
    if bits >= 128 {
        u128::MAX
    } else {
        1u128 << bits
    }
}
