//! Probability and entropy primitives.
//!
//! Everything here works in bits. Inter-update intervals live on the positive
//! integers and are stored truncated at a finite support `1..=v_max`; the
//! probability dropped by truncation is kept in [`InterUpdatePmf::tail_mass`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Masses must sum to one within this tolerance.
pub const NORMALIZATION_TOL: f64 = 1e-12;
/// Deviations below this are renormalized away; larger ones are rejected.
pub const RENORMALIZE_TOL: f64 = 1e-9;
/// Target tail mass when a support bound is chosen automatically.
pub const TAIL_THRESHOLD: f64 = 1e-10;
/// Largest support the toolkit will materialize.
pub const MAX_SUPPORT: usize = 1_000_000;

/// A real number in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::Domain {
                name: "probability",
                value,
                expected: "[0, 1]",
            })
        }
    }

    /// Like [`Probability::new`] but reports `name` in the error.
    pub fn named(name: &'static str, value: f64) -> Result<Self> {
        Self::new(value).map_err(|_| Error::Domain {
            name,
            value,
            expected: "[0, 1]",
        })
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    pub fn complement(self) -> Self {
        Self(1.0 - self.0)
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

/// `-x log2 x`, with the convention `0 log 0 = 0`.
#[inline]
pub(crate) fn xlog2x_neg(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.log2()
    }
}

/// Binary entropy of a raw float, clamped into `[0, 1]`.
#[inline]
pub(crate) fn hb(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    xlog2x_neg(x) + xlog2x_neg(1.0 - x)
}

/// Binary entropy `H_b(x)` in bits.
pub fn binary_entropy(x: Probability) -> f64 {
    hb(x.get())
}

/// Distribution of the interval between consecutive updates, supported on
/// `1..=support_max()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PmfRepr", into = "PmfRepr")]
pub struct InterUpdatePmf {
    mass: Vec<f64>,
    tail_mass: f64,
}

#[derive(Serialize, Deserialize)]
struct PmfRepr {
    mass: Vec<f64>,
    #[serde(default)]
    tail_mass: f64,
}

impl TryFrom<PmfRepr> for InterUpdatePmf {
    type Error = Error;

    fn try_from(repr: PmfRepr) -> Result<Self> {
        let mut pmf = Self::from_masses(repr.mass)?;
        pmf.tail_mass = repr.tail_mass;
        Ok(pmf)
    }
}

impl From<InterUpdatePmf> for PmfRepr {
    fn from(pmf: InterUpdatePmf) -> Self {
        PmfRepr {
            mass: pmf.mass,
            tail_mass: pmf.tail_mass,
        }
    }
}

impl InterUpdatePmf {
    /// Builds a pmf from `mass[v - 1] = P[V = v]`.
    ///
    /// Masses summing to one within [`RENORMALIZE_TOL`] are renormalized;
    /// anything further off is rejected.
    pub fn from_masses(mut mass: Vec<f64>) -> Result<Self> {
        if mass.is_empty() {
            return Err(Error::InvalidPmf("empty support".into()));
        }
        if let Some((i, m)) = mass.iter().enumerate().find(|(_, m)| !m.is_finite() || **m < 0.0) {
            return Err(Error::InvalidPmf(format!("mass[{}] = {m}", i + 1)));
        }
        let total: f64 = mass.iter().sum();
        let dev = (total - 1.0).abs();
        if dev > RENORMALIZE_TOL {
            return Err(Error::InvalidPmf(format!("masses sum to {total}")));
        }
        if dev > 0.0 {
            mass.iter_mut().for_each(|m| *m /= total);
        }
        // Trailing zeros carry no information; keep the support tight.
        while mass.len() > 1 && mass[mass.len() - 1] == 0.0 {
            mass.pop();
        }
        Ok(Self { mass, tail_mass: 0.0 })
    }

    /// Normalizes `weights` and records `tail` as the mass lost to truncation.
    pub(crate) fn from_truncated(weights: Vec<f64>, tail: f64) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidPmf("no mass inside the support".into()));
        }
        let mass = weights.into_iter().map(|w| w / total).collect();
        let mut pmf = Self::from_masses(mass)?;
        pmf.tail_mass = tail;
        Ok(pmf)
    }

    pub fn point_mass(v: usize) -> Result<Self> {
        if v == 0 {
            return Err(Error::InvalidPmf("intervals are positive".into()));
        }
        let mut mass = vec![0.0; v];
        mass[v - 1] = 1.0;
        Self::from_masses(mass)
    }

    /// Mass `p_low` at `v` and `1 - p_low` at `v + 1`.
    pub fn two_point(v: usize, p_low: Probability) -> Result<Self> {
        if v == 0 {
            return Err(Error::InvalidPmf("intervals are positive".into()));
        }
        let mut mass = vec![0.0; v + 1];
        mass[v - 1] = p_low.get();
        mass[v] = 1.0 - p_low.get();
        Self::from_masses(mass)
    }

    /// Uniform over the given support points.
    pub fn uniform(support: &[usize]) -> Result<Self> {
        let v_max = support.iter().copied().max().unwrap_or(0);
        if v_max == 0 || support.contains(&0) {
            return Err(Error::InvalidPmf("intervals are positive".into()));
        }
        let mut mass = vec![0.0; v_max];
        for &v in support {
            mass[v - 1] += 1.0 / support.len() as f64;
        }
        Self::from_masses(mass)
    }

    /// Shifted geometric law `g (1-g)^(v - omega)` for `v >= omega`, truncated
    /// at `v_max`. Fails when the truncated tail exceeds `max_tail`.
    pub fn shifted_geometric(omega: usize, g: Probability, v_max: usize, max_tail: f64) -> Result<Self> {
        let g = g.get();
        if omega == 0 {
            return Err(Error::InvalidPmf("omega must be at least 1".into()));
        }
        if g <= 0.0 {
            return Err(Error::Domain {
                name: "g",
                value: g,
                expected: "(0, 1]",
            });
        }
        if v_max < omega {
            return Err(Error::Truncation {
                v_max,
                tail: 1.0,
                threshold: max_tail,
            });
        }
        let tail = (1.0 - g).powi((v_max - omega + 1) as i32);
        if tail > max_tail {
            return Err(Error::Truncation {
                v_max,
                tail,
                threshold: max_tail,
            });
        }
        let mut weights = vec![0.0; v_max];
        let mut w = g;
        for slot in weights.iter_mut().skip(omega - 1) {
            *slot = w;
            w *= 1.0 - g;
        }
        Self::from_truncated(weights, tail)
    }

    /// Geometric law `g (1-g)^(v-1)` truncated at `v_max`.
    pub fn geometric_truncated(g: Probability, v_max: usize) -> Result<Self> {
        Self::shifted_geometric(1, g, v_max, RENORMALIZE_TOL)
    }

    /// Geometric law with the support chosen so that the tail is below
    /// [`TAIL_THRESHOLD`].
    pub fn geometric(g: Probability) -> Result<Self> {
        let v_max = geometric_support(g.get(), 1, TAIL_THRESHOLD)?;
        Self::shifted_geometric(1, g, v_max, TAIL_THRESHOLD)
    }

    #[inline]
    pub fn support_max(&self) -> usize {
        self.mass.len()
    }

    /// Masses for `v = 1..=support_max()`.
    #[inline]
    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    /// `P[V = v]`, zero outside the support.
    pub fn mass(&self, v: usize) -> f64 {
        if v == 0 {
            0.0
        } else {
            self.mass.get(v - 1).copied().unwrap_or(0.0)
        }
    }

    /// Probability dropped when the law was truncated to its support.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn entropy(&self) -> f64 {
        self.mass.iter().map(|&m| xlog2x_neg(m)).sum()
    }

    /// `(E[V], E[V^2])`.
    pub fn moments(&self) -> (f64, f64) {
        self.mass.iter().enumerate().fold((0.0, 0.0), |(m1, m2), (i, &m)| {
            let v = (i + 1) as f64;
            (m1 + v * m, m2 + v * v * m)
        })
    }

    pub fn mean(&self) -> f64 {
        self.moments().0
    }

    /// Total variation distance, over the union of supports.
    pub fn total_variation(&self, other: &Self) -> f64 {
        let n = self.support_max().max(other.support_max());
        0.5 * (1..=n).map(|v| (self.mass(v) - other.mass(v)).abs()).sum::<f64>()
    }

    /// Cumulative distribution over the support, ending at exactly 1.
    pub fn cdf(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = self
            .mass
            .iter()
            .map(|m| {
                acc += m;
                acc
            })
            .collect();
        if let Some(last) = cdf.last_mut() {
            *last = 1.0;
        }
        cdf
    }
}

/// Smallest `v_max` for which a geometric law started at `omega` leaves less
/// than `max_tail` beyond the support.
pub(crate) fn geometric_support(g: f64, omega: usize, max_tail: f64) -> Result<usize> {
    if !(g > 0.0 && g <= 1.0) {
        return Err(Error::Domain {
            name: "g",
            value: g,
            expected: "(0, 1]",
        });
    }
    if g == 1.0 {
        return Ok(omega);
    }
    let len = (max_tail.ln() / (1.0 - g).ln()).ceil().max(1.0);
    let v_max = omega as f64 - 1.0 + len;
    if v_max > MAX_SUPPORT as f64 {
        return Err(Error::Truncation {
            v_max: MAX_SUPPORT,
            tail: (1.0 - g).powf(MAX_SUPPORT as f64 - omega as f64 + 1.0),
            threshold: max_tail,
        });
    }
    Ok(v_max as usize)
}

/// Entropy of an inter-update pmf, in bits.
pub fn pmf_entropy(pmf: &InterUpdatePmf) -> f64 {
    pmf.entropy()
}

/// `(E[V], E[V^2])` of an inter-update pmf.
pub fn pmf_moments(pmf: &InterUpdatePmf) -> (f64, f64) {
    pmf.moments()
}
