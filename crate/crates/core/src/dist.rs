//! Workload distribution families and their stationary residual-life
//! companions.
//!
//! Every family is normalized at construction so its mean equals a prescribed
//! target (the network model requires unit means, with heterogeneity expressed
//! through the rate model instead). Each distribution exposes an analytic CDF
//! and an inverse-CDF sampler that consumes exactly one uniform variate per
//! draw, so simulation runs are reproducible from the seed alone.
//!
//! For a distribution with CDF `F` and mean `m`, the residual-life companion
//! has CDF `G(x) = (1/m) ∫₀ˣ (1 − F(y)) dy`: the law of the remaining work of
//! an individual inspected at a stationary time point. It is what long-run
//! residual profiles must look like when occupancy is insensitive to the
//! workload family, so [`Equilibrium`] is the reference law for the
//! statistical checks in [`crate::harness`].

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest admissible Erlang shape. Keeps the iterative CDF evaluation free
/// of intermediate overflow for all arguments in the distribution's bulk.
pub const MAX_ERLANG_SHAPE: u32 = 170;

#[derive(Debug, Error, PartialEq)]
pub enum DistError {
    #[error("target mean must be positive and finite, got {0}")]
    BadMean(f64),
    #[error("{0}")]
    BadParameter(String),
    #[error("distribution places a probability atom at zero")]
    AtomAtZero,
    #[error("Pareto shape must exceed 1 for a finite mean, got {0}")]
    InfiniteMean(f64),
    #[error("mixture weights must sum to 1, got {0}")]
    BadWeights(f64),
    #[error("second moment is infinite")]
    InfiniteSecondMoment,
}

/// Parametric workload families. Parameters are in natural units; the mean is
/// fixed separately when building a [`Workload`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    Exponential { rate: f64 },
    Deterministic { value: f64 },
    Erlang { shape: u32, rate: f64 },
    HyperExponential { weights: Vec<f64>, rates: Vec<f64> },
    Uniform { lo: f64, hi: f64 },
    Pareto { shape: f64, scale: f64 },
}

impl Family {
    /// Mean implied by the raw parameters.
    fn mean(&self) -> f64 {
        match self {
            Family::Exponential { rate } => 1.0 / rate,
            Family::Deterministic { value } => *value,
            Family::Erlang { shape, rate } => f64::from(*shape) / rate,
            Family::HyperExponential { weights, rates } => {
                weights.iter().zip(rates).map(|(w, r)| w / r).sum()
            }
            Family::Uniform { lo, hi } => 0.5 * (lo + hi),
            Family::Pareto { shape, scale } => shape * scale / (shape - 1.0),
        }
    }

    /// Second moment implied by the raw parameters (`+inf` when it diverges).
    fn second_moment(&self) -> f64 {
        match self {
            Family::Exponential { rate } => 2.0 / (rate * rate),
            Family::Deterministic { value } => value * value,
            Family::Erlang { shape, rate } => {
                let k = f64::from(*shape);
                k * (k + 1.0) / (rate * rate)
            }
            Family::HyperExponential { weights, rates } => {
                weights.iter().zip(rates).map(|(w, r)| 2.0 * w / (r * r)).sum()
            }
            Family::Uniform { lo, hi } => (lo * lo + lo * hi + hi * hi) / 3.0,
            Family::Pareto { shape, scale } => {
                if *shape > 2.0 {
                    shape * scale * scale / (shape - 2.0)
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Scale the random variable by `c > 0` (multiplies the mean by `c`).
    fn scaled(&self, c: f64) -> Family {
        match self {
            Family::Exponential { rate } => Family::Exponential { rate: rate / c },
            Family::Deterministic { value } => Family::Deterministic { value: value * c },
            Family::Erlang { shape, rate } => Family::Erlang { shape: *shape, rate: rate / c },
            Family::HyperExponential { weights, rates } => Family::HyperExponential {
                weights: weights.clone(),
                rates: rates.iter().map(|r| r / c).collect(),
            },
            Family::Uniform { lo, hi } => Family::Uniform { lo: lo * c, hi: hi * c },
            Family::Pareto { shape, scale } => {
                Family::Pareto { shape: *shape, scale: scale * c }
            }
        }
    }

    fn validate(&self) -> Result<(), DistError> {
        let positive = |x: f64, what: &str| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(DistError::BadParameter(format!("{what} must be positive and finite, got {x}")))
            }
        };
        match self {
            Family::Exponential { rate } => positive(*rate, "exponential rate"),
            Family::Deterministic { value } => {
                if *value == 0.0 {
                    return Err(DistError::AtomAtZero);
                }
                positive(*value, "deterministic value")
            }
            Family::Erlang { shape, rate } => {
                if *shape == 0 || *shape > MAX_ERLANG_SHAPE {
                    return Err(DistError::BadParameter(format!(
                        "Erlang shape must lie in 1..={MAX_ERLANG_SHAPE}, got {shape}"
                    )));
                }
                positive(*rate, "Erlang rate")
            }
            Family::HyperExponential { weights, rates } => {
                if weights.is_empty() || weights.len() != rates.len() {
                    return Err(DistError::BadParameter(format!(
                        "hyper-exponential needs matching non-empty weights and rates, got {} and {}",
                        weights.len(),
                        rates.len()
                    )));
                }
                for w in weights {
                    positive(*w, "mixture weight")?;
                }
                for r in rates {
                    positive(*r, "mixture rate")?;
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(DistError::BadWeights(total));
                }
                Ok(())
            }
            Family::Uniform { lo, hi } => {
                if !lo.is_finite() || !hi.is_finite() || *lo < 0.0 || hi <= lo {
                    return Err(DistError::BadParameter(format!(
                        "uniform support needs 0 <= lo < hi, got [{lo}, {hi}]"
                    )));
                }
                Ok(())
            }
            Family::Pareto { shape, scale } => {
                positive(*scale, "Pareto scale")?;
                if !shape.is_finite() || *shape <= 1.0 {
                    return Err(DistError::InfiniteMean(*shape));
                }
                Ok(())
            }
        }
    }
}

/// A workload distribution with its mean pinned to a prescribed value.
///
/// Construction validates the parameters (strictly positive support, no atom
/// at zero, finite mean) and rescales them so the mean equals `target_mean`
/// exactly; a second moment of `+inf` (Pareto shape in (1, 2]) is permitted
/// but reported by [`Workload::has_finite_second_moment`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Workload {
    family: Family,
    mean: f64,
    second_moment: f64,
}

impl Workload {
    pub fn new(family: Family, target_mean: f64) -> Result<Workload, DistError> {
        if !target_mean.is_finite() || target_mean <= 0.0 {
            return Err(DistError::BadMean(target_mean));
        }
        family.validate()?;
        let family = family.scaled(target_mean / family.mean());
        let second_moment = family.second_moment();
        Ok(Workload { family, mean: target_mean, second_moment })
    }

    /// Unit-mean constructor; the normalization used throughout the network
    /// model.
    pub fn unit(family: Family) -> Result<Workload, DistError> {
        Workload::new(family, 1.0)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn second_moment(&self) -> f64 {
        self.second_moment
    }

    pub fn has_finite_second_moment(&self) -> bool {
        self.second_moment.is_finite()
    }

    /// Squared coefficient of variation, `Var/mean²` (`+inf` when the second
    /// moment diverges).
    pub fn scv(&self) -> f64 {
        self.second_moment / (self.mean * self.mean) - 1.0
    }

    /// Distribution function `P(W <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match &self.family {
            Family::Exponential { rate } => -(-rate * x).exp_m1(),
            Family::Deterministic { value } => {
                if x >= *value {
                    1.0
                } else {
                    0.0
                }
            }
            Family::Erlang { shape, rate } => erlang_cdf(*shape, *rate, x),
            Family::HyperExponential { weights, rates } => weights
                .iter()
                .zip(rates)
                .map(|(w, r)| w * -(-r * x).exp_m1())
                .sum(),
            Family::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Family::Pareto { shape, scale } => {
                if x < *scale {
                    0.0
                } else {
                    1.0 - (scale / x).powf(*shape)
                }
            }
        }
    }

    /// Quantile function; the generalized inverse of [`Workload::cdf`].
    /// Requires `u` in `[0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        debug_assert!((0.0..1.0).contains(&u), "quantile argument {u} outside [0, 1)");
        match &self.family {
            Family::Exponential { rate } => -(-u).ln_1p() / rate,
            Family::Deterministic { value } => *value,
            Family::Uniform { lo, hi } => lo + u * (hi - lo),
            Family::Pareto { shape, scale } => scale * (1.0 - u).powf(-1.0 / shape),
            // No closed form: invert the CDF numerically.
            _ => invert_cdf(|x| self.cdf(x), u, self.mean),
        }
    }

    /// Draw one variate by inverse transform, consuming exactly one uniform.
    /// The result is strictly positive.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(positive_uniform(rng))
    }

    /// Residual-life companion distribution. Fails if the second moment (and
    /// hence the companion's mean) is infinite.
    pub fn equilibrium(&self) -> Result<Equilibrium, DistError> {
        if !self.has_finite_second_moment() {
            return Err(DistError::InfiniteSecondMoment);
        }
        Ok(Equilibrium { base: self.clone() })
    }
}

/// Stationary residual-life distribution of a [`Workload`]:
/// `G(x) = (1/m) ∫₀ˣ (1 − F(y)) dy` where `F` is the workload CDF and `m` its
/// mean. Its own mean is `E[W²] / (2m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    base: Workload,
}

impl Equilibrium {
    pub fn base(&self) -> &Workload {
        &self.base
    }

    pub fn mean(&self) -> f64 {
        self.base.second_moment / (2.0 * self.base.mean)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let m = self.base.mean;
        let g = match &self.base.family {
            Family::Exponential { rate } => -(-rate * x).exp_m1() / rate,
            Family::Deterministic { value } => x.min(*value),
            Family::Erlang { shape, rate } => erlang_integrated_tail(*shape, *rate, x),
            Family::HyperExponential { weights, rates } => weights
                .iter()
                .zip(rates)
                .map(|(w, r)| w / r * -(-r * x).exp_m1())
                .sum(),
            Family::Uniform { lo, hi } => {
                if x <= *lo {
                    x
                } else if x < *hi {
                    let span = hi - lo;
                    lo + (span * span - (hi - x) * (hi - x)) / (2.0 * span)
                } else {
                    m
                }
            }
            Family::Pareto { shape, scale } => {
                if x <= *scale {
                    x
                } else {
                    scale + scale / (shape - 1.0) * (1.0 - (scale / x).powf(shape - 1.0))
                }
            }
        };
        (g / m).min(1.0)
    }

    /// Quantile of the residual-life law; requires `u` in `[0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        debug_assert!((0.0..1.0).contains(&u), "quantile argument {u} outside [0, 1)");
        let m = self.base.mean;
        let target = u * m;
        match &self.base.family {
            Family::Exponential { rate } => -(-u).ln_1p() / rate,
            Family::Deterministic { .. } => target,
            Family::Uniform { lo, hi } => {
                if target <= *lo {
                    target
                } else {
                    let span = hi - lo;
                    hi - (span * span - 2.0 * span * (target - lo)).max(0.0).sqrt()
                }
            }
            Family::Pareto { shape, scale } => {
                if target <= *scale {
                    target
                } else {
                    let tail = 1.0 - (target - scale) * (shape - 1.0) / scale;
                    scale * tail.powf(-1.0 / (shape - 1.0))
                }
            }
            _ => invert_cdf(|x| self.cdf(x), u, self.mean().max(self.base.mean)),
        }
    }

    /// Draw one residual workload, consuming exactly one uniform.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(positive_uniform(rng))
    }
}

/// Uniform draw restricted to `(0, 1)`, so inverse-transform samples stay
/// strictly positive.
pub(crate) fn positive_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// `P(Erlang(shape, rate) <= x)` via the iterative Poisson-sum form.
fn erlang_cdf(shape: u32, rate: f64, x: f64) -> f64 {
    let z = rate * x;
    let mut term = (-z).exp(); // e^{-z} z^j / j!, starting at j = 0
    let mut tail = term;
    for j in 1..shape {
        term *= z / f64::from(j);
        tail += term;
    }
    (1.0 - tail).max(0.0)
}

/// `∫₀ˣ (1 − F(y)) dy` for the Erlang CDF `F`; the unnormalized residual-life
/// CDF.
fn erlang_integrated_tail(shape: u32, rate: f64, x: f64) -> f64 {
    let k = f64::from(shape);
    let z = rate * x;
    let mut term = (-z).exp();
    let mut weighted = k * term; // Σ (k - j) e^{-z} z^j / j!
    for j in 1..shape {
        term *= z / f64::from(j);
        weighted += (k - f64::from(j)) * term;
    }
    ((k - weighted) / rate).max(0.0)
}

/// Invert a continuous monotone CDF by bracketed bisection. `scale` seeds the
/// upper bracket; the loop stops once the bracket collapses to adjacent
/// floats, so the result is exact to machine precision of the CDF.
fn invert_cdf(cdf: impl Fn(f64) -> f64, u: f64, scale: f64) -> f64 {
    let mut lo = 0.0_f64;
    let mut hi = scale.max(f64::MIN_POSITIVE);
    let mut doublings = 0;
    while cdf(hi) < u {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        assert!(doublings < 2100, "CDF never reaches {u}; not a distribution?");
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cdf(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
