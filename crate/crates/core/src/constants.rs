//! Problem constants and the default tuning that ties them together.
//!
//! Defaults, given the order `d`, noise variance `sigma2` and amplitude
//! bounds `B_X`, `B_N`:
//!
//! | constant | default |
//! |----------|---------|
//! | block length `k` | `2d` |
//! | step constant `H` | `d * sigma2` |
//! | radius `R` | `sqrt(d) * B_X^2 / sigma2` |
//! | exp-concavity `alpha` | `d * sigma2 / G(2d, R)^2` |
//!
//! `G(k, R)` is the explicit gradient bound of [`gradient_bound`].

use crate::error::{FilterError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConstants {
    d: usize,
    k: usize,
    sigma2: f64,
    bound_x: f64,
    bound_n: f64,
    radius: f64,
    step_constant: f64,
    alpha: f64,
}

impl ProblemConstants {
    /// Starts a builder; every constant not set explicitly receives its default.
    pub fn builder(d: usize, sigma2: f64, bound_x: f64, bound_n: f64) -> ConstantsBuilder {
        ConstantsBuilder {
            d,
            sigma2,
            bound_x,
            bound_n,
            k: None,
            radius: None,
            step_constant: None,
            alpha: None,
        }
    }

    /// All defaults.
    pub fn with_defaults(d: usize, sigma2: f64, bound_x: f64, bound_n: f64) -> Result<Self> {
        Self::builder(d, sigma2, bound_x, bound_n).build()
    }

    pub fn d(&self) -> usize {
        self.d
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }
    pub fn bound_x(&self) -> f64 {
        self.bound_x
    }
    pub fn bound_n(&self) -> f64 {
        self.bound_n
    }
    /// Bound on every observation: `B_X + B_N`.
    pub fn observation_bound(&self) -> f64 {
        self.bound_x + self.bound_n
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }
    pub fn step_constant(&self) -> f64 {
        self.step_constant
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `c = (sigma2, 0, ..., 0)`, the surrogate loss's linear correction.
    pub fn spike(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.d];
        c[0] = self.sigma2;
        c
    }

    /// Number of trailing windows in a block whose entries all lie inside it.
    pub fn regularizer_windows(&self) -> usize {
        self.k - self.d + 1
    }

    /// Strong-convexity modulus of the block loss, `2(k - d + 1) sigma2`.
    pub fn strong_convexity(&self) -> f64 {
        2.0 * self.regularizer_windows() as f64 * self.sigma2
    }

    /// `G(k, R)` at the configured block length and radius.
    pub fn gradient_bound(&self) -> f64 {
        gradient_bound(self.d, self.k, self.radius, self.bound_x, self.bound_n, self.sigma2)
    }

    /// Largest exp-concavity parameter the block loss provably admits:
    /// strong-convexity modulus over the squared gradient bound.
    pub fn max_alpha(&self) -> f64 {
        let g = self.gradient_bound();
        self.strong_convexity() / (g * g)
    }
}

/// Explicit upper bound on `||grad L^k(w)||` over filters and anchors in the
/// `radius`-ball and observations bounded by `bound_x + bound_n`:
///
/// `2k [sqrt(d) B^2 (1 + sqrt(d) R) + sigma2] + 4R (k - d + 1) [sigma2 + d B^2]`
///
/// with `B = bound_x + bound_n`. The first term bounds the `k` surrogate
/// gradients, the second the regularizer gradient (`||w - anchor|| <= 2R`).
pub fn gradient_bound(d: usize, k: usize, radius: f64, bound_x: f64, bound_n: f64, sigma2: f64) -> f64 {
    let b2 = (bound_x + bound_n).powi(2);
    let sd = (d as f64).sqrt();
    let kf = k as f64;
    let reg = (k + 1).saturating_sub(d) as f64;
    2.0 * kf * (sd * b2 * (1.0 + sd * radius) + sigma2) + 4.0 * radius * reg * (sigma2 + d as f64 * b2)
}

#[derive(Debug, Clone)]
pub struct ConstantsBuilder {
    d: usize,
    sigma2: f64,
    bound_x: f64,
    bound_n: f64,
    k: Option<usize>,
    radius: Option<f64>,
    step_constant: Option<f64>,
    alpha: Option<f64>,
}

impl ConstantsBuilder {
    pub fn k(mut self, k: usize) -> Self {
        self.k = Some(k);
        self
    }
    pub fn radius(mut self, r: f64) -> Self {
        self.radius = Some(r);
        self
    }
    pub fn step_constant(mut self, h: f64) -> Self {
        self.step_constant = Some(h);
        self
    }
    pub fn alpha(mut self, alpha: f64) -> Self {
        self.alpha = Some(alpha);
        self
    }

    pub fn k_opt(mut self, k: Option<usize>) -> Self {
        self.k = k.or(self.k);
        self
    }
    pub fn radius_opt(mut self, r: Option<f64>) -> Self {
        self.radius = r.or(self.radius);
        self
    }
    pub fn step_constant_opt(mut self, h: Option<f64>) -> Self {
        self.step_constant = h.or(self.step_constant);
        self
    }
    pub fn alpha_opt(mut self, a: Option<f64>) -> Self {
        self.alpha = a.or(self.alpha);
        self
    }

    /// Validates and fills in defaults.
    ///
    /// `sigma2 = 0` is accepted only when `R`, `H` and `alpha` are all given
    /// explicitly, since each default divides by or scales with `sigma2`.
    pub fn build(self) -> Result<ProblemConstants> {
        let Self {
            d,
            sigma2,
            bound_x,
            bound_n,
            ..
        } = self;
        if d == 0 {
            return Err(invalid("d", "filter order must be at least 1"));
        }
        let k = self.k.unwrap_or(2 * d);
        if k < d {
            return Err(invalid("k", format!("block length {k} is shorter than d = {d}")));
        }
        positive("bound_x", bound_x)?;
        if !(bound_n.is_finite() && bound_n >= 0.0) {
            return Err(invalid(
                "bound_n",
                format!("{bound_n} is not a finite nonnegative value"),
            ));
        }
        if !(sigma2.is_finite() && sigma2 >= 0.0) {
            return Err(invalid("sigma2", format!("{sigma2} is not a finite nonnegative value")));
        }
        if sigma2 == 0.0 && (self.radius.is_none() || self.step_constant.is_none() || self.alpha.is_none()) {
            return Err(invalid(
                "sigma2",
                "zero noise variance requires explicit R, H and alpha",
            ));
        }

        let radius = match self.radius {
            Some(r) => r,
            None => (d as f64).sqrt() * bound_x * bound_x / sigma2,
        };
        positive("R", radius)?;
        let step_constant = self.step_constant.unwrap_or(d as f64 * sigma2);
        positive("H", step_constant)?;
        let alpha = match self.alpha {
            Some(a) => a,
            None => {
                let g = gradient_bound(d, 2 * d, radius, bound_x, bound_n, sigma2);
                d as f64 * sigma2 / (g * g)
            }
        };
        positive("alpha", alpha)?;

        Ok(ProblemConstants {
            d,
            k,
            sigma2,
            bound_x,
            bound_n,
            radius,
            step_constant,
            alpha,
        })
    }
}

fn invalid(name: &'static str, reason: impl Into<String>) -> FilterError {
    FilterError::InvalidConstant {
        name,
        reason: reason.into(),
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("{v} is not a finite positive value")))
    }
}
