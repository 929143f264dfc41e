//! Probability and information-theory primitives.
//!
//! Everything in this module is a pure function over immutable inputs, so all
//! of it is safe to call from any number of threads. Distributions are plain
//! `f64` vectors wrapped in the [`Categorical`] and [`DirichletVector`]
//! newtypes, which enforce their invariants at construction time.
//!
//! Conventions used throughout:
//! - natural logarithms everywhere (all divergences and entropies are in nats);
//! - `0 * ln 0 = 0`;
//! - [`kl_categorical`] returns `+inf` (rather than an error) when the first
//!   argument has mass where the second has none, so that divergences against
//!   sparse references stay comparable.

use crate::error::{Error, Result};

/// Absolute tolerance for sum-to-one checks.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Floor applied to arguments of `ln` when scoring likelihoods, so one-hot
/// columns cannot produce `-inf` free energies.
pub const LN_FLOOR: f64 = 1e-16;

/// `ln(x)` with the crate-wide floor.
#[inline]
pub fn ln_clamped(x: f64) -> f64 {
    x.max(LN_FLOOR).ln()
}

/// A normalized probability distribution over a finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct Categorical {
    probs: Vec<f64>,
}

impl Categorical {
    /// Wraps a probability vector, checking non-negativity and normalization.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptyInput { op: "Categorical" });
        }
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidValue {
                    op: "Categorical",
                    index: i,
                    value: p,
                });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::NotNormalized { sum });
        }
        Ok(Self { probs })
    }

    pub fn uniform(k: usize) -> Self {
        assert!(k > 0, "uniform distribution needs at least one outcome");
        Self {
            probs: vec![1.0 / k as f64; k],
        }
    }

    pub fn one_hot(k: usize, index: usize) -> Self {
        assert!(index < k, "one-hot index out of range");
        let mut probs = vec![0.0; k];
        probs[index] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }

    /// Index of the largest entry (lowest index wins ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }
}

/// Strictly positive Dirichlet concentration parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletVector {
    alpha: Vec<f64>,
}

impl DirichletVector {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::EmptyInput {
                op: "DirichletVector",
            });
        }
        for (i, &a) in alpha.iter().enumerate() {
            if !a.is_finite() || a <= 0.0 {
                return Err(Error::NonPositiveConcentration {
                    op: "DirichletVector",
                    index: i,
                    value: a,
                });
            }
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.alpha.iter().sum()
    }
}

/// Inputs summing to one within this bound are already normalized and are
/// returned unchanged; a single division leaves a residue well below it, so
/// `normalize` is exactly idempotent.
const NORMALIZED_ALREADY: f64 = 1e-11;

/// Rescales a non-negative vector to sum to one.
pub fn normalize(values: &[f64]) -> Result<Categorical> {
    if values.is_empty() {
        return Err(Error::EmptyInput { op: "normalize" });
    }
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidValue {
                op: "normalize",
                index: i,
                value: v,
            });
        }
    }
    let sum: f64 = values.iter().sum();
    if sum <= 0.0 {
        return Err(Error::InvalidValue {
            op: "normalize",
            index: 0,
            value: sum,
        });
    }
    if (sum - 1.0).abs() <= NORMALIZED_ALREADY {
        return Categorical::new(values.to_vec());
    }
    Categorical::new(values.iter().map(|&v| v / sum).collect())
}

/// `softmax(v, precision)` with entries proportional to `exp(precision * v_i)`.
///
/// Stable under max-subtraction; `precision = 0` yields the uniform
/// distribution. Entries of `-inf` are allowed and map to zero mass.
pub fn softmax(values: &[f64], precision: f64) -> Result<Categorical> {
    if values.is_empty() {
        return Err(Error::EmptyInput { op: "softmax" });
    }
    if !precision.is_finite() || precision < 0.0 {
        return Err(Error::InvalidValue {
            op: "softmax",
            index: 0,
            value: precision,
        });
    }
    for (i, &v) in values.iter().enumerate() {
        if v.is_nan() || v == f64::INFINITY {
            return Err(Error::InvalidValue {
                op: "softmax",
                index: i,
                value: v,
            });
        }
    }
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::InvalidValue {
            op: "softmax",
            index: 0,
            value: f64::NEG_INFINITY,
        });
    }
    let weights: Vec<f64> = values
        .iter()
        .map(|&v| {
            let shifted = precision * (v - max);
            if shifted == f64::NEG_INFINITY || shifted.is_nan() {
                // precision * (-inf) with precision = 0 gives NaN; treat as
                // the zero-precision (uniform) contribution.
                if precision == 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                shifted.exp()
            }
        })
        .collect();
    normalize(&weights)
}

/// Kullback-Leibler divergence `D_KL[p || q]` in nats.
///
/// Returns `+inf` when `p` has mass on an outcome where `q` has none; this is
/// a documented convention rather than an error so that divergences against
/// sparse reference distributions remain comparable.
pub fn kl_categorical(p: &Categorical, q: &Categorical) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            op: "kl_categorical",
            left: p.len(),
            right: q.len(),
        });
    }
    let mut acc = 0.0;
    for (&pi, &qi) in p.probs().iter().zip(q.probs()) {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Ok(f64::INFINITY);
        }
        acc += pi * (pi / qi).ln();
    }
    // Accumulated rounding can leave a tiny negative residue for p == q.
    Ok(acc.max(0.0))
}

/// Shannon entropy in nats, with the `0 ln 0 = 0` convention.
pub fn entropy(p: &Categorical) -> f64 {
    let mut acc = 0.0;
    for &pi in p.probs() {
        if pi > 0.0 {
            acc -= pi * pi.ln();
        }
    }
    acc.max(0.0)
}

/// Closed-form KL divergence between two Dirichlet distributions.
pub fn kl_dirichlet(post: &DirichletVector, prior: &DirichletVector) -> Result<f64> {
    if post.len() != prior.len() {
        return Err(Error::LengthMismatch {
            op: "kl_dirichlet",
            left: post.len(),
            right: prior.len(),
        });
    }
    let a0 = post.total();
    let b0 = prior.total();
    let mut acc = ln_gamma(a0) - ln_gamma(b0);
    let psi_a0 = digamma(a0);
    for (&a, &b) in post.alpha().iter().zip(prior.alpha()) {
        acc -= ln_gamma(a);
        acc += ln_gamma(b);
        acc += (a - b) * (digamma(a) - psi_a0);
    }
    Ok(acc.max(0.0))
}

/// Expected log-likelihood of a Dirichlet-distributed categorical column:
/// `E[ln theta_i] = psi(alpha_i) - psi(sum_k alpha_k)`.
pub fn expected_log_likelihood(alpha: &[f64]) -> Result<Vec<f64>> {
    if alpha.is_empty() {
        return Err(Error::EmptyInput {
            op: "expected_log_likelihood",
        });
    }
    for (i, &a) in alpha.iter().enumerate() {
        if !a.is_finite() || a <= 0.0 {
            return Err(Error::NonPositiveConcentration {
                op: "expected_log_likelihood",
                index: i,
                value: a,
            });
        }
    }
    let psi_total = digamma(alpha.iter().sum());
    Ok(alpha.iter().map(|&a| digamma(a) - psi_total).collect())
}

/// Digamma function, accurate to about 1e-13 for arguments >= 1e-3.
///
/// Uses the upward recurrence `psi(x) = psi(x+1) - 1/x` to push the argument
/// above 10, then the asymptotic Bernoulli series.
pub fn digamma(x: f64) -> f64 {
    debug_assert!(x > 0.0, "digamma requires a positive argument");
    let mut shift = 0.0;
    let mut x = x;
    while x < 10.0 {
        shift -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0)))));
    shift + x.ln() - 0.5 * inv - series
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function (Lanczos approximation, reflection for
/// arguments below 1/2). Accurate to about 1e-12 over the range used here.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0, "ln_gamma requires a positive argument");
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x)
    } else {
        let z = x - 1.0;
        let mut acc = LANCZOS_COEFFS[0];
        for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
            acc += c / (z + i as f64);
        }
        let t = z + LANCZOS_G + 0.5;
        0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
    }
}
