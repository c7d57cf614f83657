//! Single-letter age-of-information formulas.
//!
//! Ages are in slots with the constant offsets of the sawtooth dropped, so a
//! stationary policy with interval law `V` has peak age `E[V]` and average age
//! `E[V^2] / (2 E[V])`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::prob::{InterUpdatePmf, Probability};

/// Relative tolerance used to decide whether `1/q` is an integer period.
pub const INTEGER_PERIOD_RTOL: f64 = 1e-12;

/// An upper budget that may be absent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Finite(f64),
    Unbounded,
}

impl Bound {
    pub fn is_finite(self) -> bool {
        matches!(self, Bound::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Bound::Finite(x) => Some(x),
            Bound::Unbounded => None,
        }
    }

    /// `+inf` for an unbounded budget.
    pub fn as_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    pub fn allows(self, x: f64) -> bool {
        match self {
            Bound::Finite(b) => x <= b,
            Bound::Unbounded => true,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Finite(x) => write!(f, "{x}"),
            Bound::Unbounded => f.write_str("inf"),
        }
    }
}

impl FromStr for Bound {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if ["inf", "+inf", "infinity", "unbounded"]
            .iter()
            .any(|w| t.eq_ignore_ascii_case(w))
        {
            return Ok(Bound::Unbounded);
        }
        match t.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(Bound::Finite(x)),
            _ => Err(Error::Parse(t.to_string())),
        }
    }
}

impl Serialize for Bound {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Bound::Finite(x) => s.serialize_f64(*x),
            Bound::Unbounded => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Bound {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(Bound::Finite(x)),
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Peak-age and average-age budgets `(c_p, c_a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgeConstraints {
    pub c_p: Bound,
    pub c_a: Bound,
}

impl AgeConstraints {
    pub fn new(c_p: Bound, c_a: Bound) -> Result<Self> {
        if let Bound::Finite(x) = c_p {
            if !(x >= 1.0) {
                return Err(Error::Domain {
                    name: "c_p",
                    value: x,
                    expected: "[1, inf]",
                });
            }
        }
        if let Bound::Finite(x) = c_a {
            if !(x >= 0.5) {
                return Err(Error::Domain {
                    name: "c_a",
                    value: x,
                    expected: "[1/2, inf]",
                });
            }
        }
        Ok(Self { c_p, c_a })
    }

    pub fn unconstrained() -> Self {
        Self {
            c_p: Bound::Unbounded,
            c_a: Bound::Unbounded,
        }
    }

    /// Whether a policy with these ages meets both budgets.
    pub fn admits(&self, peak: f64, avg: f64) -> bool {
        self.c_p.allows(peak) && self.c_a.allows(avg)
    }
}

/// Minimum achievable ages for a battery regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinAgeReport {
    pub peak_min: f64,
    pub avg_min: f64,
    /// Probability of the shorter period in the age-optimal policy; only
    /// present for the infinite battery.
    pub g_f: Option<f64>,
}

/// Peak age `E[V]`.
pub fn peak_age(pmf: &InterUpdatePmf) -> f64 {
    pmf.mean()
}

/// Average age `E[V^2] / (2 E[V])`.
pub fn avg_age(pmf: &InterUpdatePmf) -> f64 {
    let (m1, m2) = pmf.moments();
    m2 / (2.0 * m1)
}

fn positive_q(q: Probability) -> Result<f64> {
    let q = q.get();
    if q > 0.0 {
        Ok(q)
    } else {
        Err(Error::Domain {
            name: "q",
            value: q,
            expected: "(0, 1]",
        })
    }
}

/// Splits `1/q` into the shorter period and its probability `g_f` so that the
/// two-point law on `{period, period + 1}` has mean `1/q`.
pub(crate) fn periodic_split(q: f64) -> (usize, f64) {
    let inv = 1.0 / q;
    let nearest = inv.round();
    if (inv - nearest).abs() <= INTEGER_PERIOD_RTOL * inv {
        (nearest as usize, 1.0)
    } else {
        let low = inv.floor();
        (low as usize, low + 1.0 - inv)
    }
}

/// Minimum ages with an infinite battery.
pub fn min_ages_infinite(q: Probability) -> Result<MinAgeReport> {
    let q = positive_q(q)?;
    let (_, g_f) = periodic_split(q);
    let avg_min = if g_f == 1.0 {
        1.0 / (2.0 * q)
    } else {
        1.0 / (2.0 * q) + q * g_f * (1.0 - g_f) / 2.0
    };
    Ok(MinAgeReport {
        peak_min: 1.0 / q,
        avg_min,
        g_f: Some(g_f),
    })
}

/// Minimum ages with no battery, reached by transmitting at every arrival.
pub fn min_ages_zero(q: Probability) -> Result<MinAgeReport> {
    let q = positive_q(q)?;
    Ok(MinAgeReport {
        peak_min: 1.0 / q,
        avg_min: (2.0 - q) / (2.0 * q),
        g_f: None,
    })
}
