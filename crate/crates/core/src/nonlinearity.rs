//! Built-in reaction terms `g(x, t)` with their primitives `G(x, t) = ∫_0^t g`
//! and the growth constants each one certifies.
//!
//! Three metadata families are housed:
//! * [`ArGrowth`]: `|g| ≤ a₁ + a₂|t|^(q-1)`, `0 < μG ≤ g t` for `|t| > R`,
//!   `G ≥ a₃|t|^μ̃ − a₄(x)`, and `G ≥ 0` when `R > 0`;
//! * [`SuperlinearGrowth`]: `|f| ≤ a(x) + c|t|^(r-1)` and
//!   `σ(x,t₁) ≤ ϑσ(x,t₂) + β*(x)` on ordered same-sign pairs,
//!   with `σ = f t − pF`;
//! * [`LinearGrowth`]: `|g| ≤ a(x) + b|t|^(p-1)` and the asymptotic slope
//!   `ᾱ(x) = limsup g / (|t|^(p-2)t)`.

use serde::{Deserialize, Serialize};

use crate::energy::pow_diff;
use crate::error::{Error, Result};

/// `f₀(x) = c0 + amp·cos(freq·x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Forcing {
    pub c0: f64,
    pub amp: f64,
    pub freq: f64,
}

impl Forcing {
    pub fn eval(&self, x: f64) -> f64 {
        self.c0 + self.amp * (self.freq * x).cos()
    }

    pub fn is_zero(&self) -> bool {
        self.c0 == 0.0 && self.amp == 0.0
    }
}

/// x-dependent constant appearing in a growth bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Coefficient {
    Const(f64),
    AbsForcing(Forcing),
}

impl Coefficient {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Coefficient::Const(c) => *c,
            Coefficient::AbsForcing(f) => f.eval(x).abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArGrowth {
    pub a1: f64,
    pub a2: f64,
    pub q: f64,
    pub mu: f64,
    pub r_ar: f64,
    pub mu_tilde: f64,
    pub a3: f64,
    pub a4: Coefficient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuperlinearGrowth {
    pub a: Coefficient,
    pub c: f64,
    pub r: f64,
    pub theta: f64,
    pub beta_star: Coefficient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearGrowth {
    pub a: Coefficient,
    pub b: f64,
    pub alpha_bar: Coefficient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Source {
    Zero,
    /// `κ|t|^(q-2)t`
    PurePower { kappa: f64, q: f64 },
    /// `c|t|^(r-2)t + d|t|^(ρ-2)t`
    PerturbedPower { c: f64, r: f64, d: f64, rho: f64 },
    /// `-γ|t|^(p-2)t + f₀(x)`
    AffineDecay { gamma: f64, forcing: Forcing },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    pub source: Source,
    /// Exponent of the operator the metadata was certified against.
    pub p: f64,
    pub ar: Option<ArGrowth>,
    pub superlinear: Option<SuperlinearGrowth>,
    pub linear: Option<LinearGrowth>,
}

/// `sign(t)|t|^e`.
#[inline]
fn signed_pow(t: f64, e: f64) -> f64 {
    if e == 1.0 {
        t
    } else {
        t.abs().powf(e).copysign(t)
    }
}

impl Nonlinearity {
    pub fn zero(p: f64) -> Self {
        Nonlinearity {
            source: Source::Zero,
            p,
            ar: None,
            superlinear: None,
            linear: Some(LinearGrowth {
                a: Coefficient::Const(0.0),
                b: 0.0,
                alpha_bar: Coefficient::Const(0.0),
            }),
        }
    }

    pub fn pure_power(kappa: f64, q: f64, p: f64) -> Result<Self> {
        if !(kappa >= 0.0) || !(q > 1.0) {
            return Err(Error::param("nonlinearity", "pure_power needs kappa >= 0, q > 1"));
        }
        Ok(Nonlinearity {
            source: Source::PurePower { kappa, q },
            p,
            ar: Some(ArGrowth {
                a1: 0.0,
                a2: kappa,
                q,
                mu: q,
                r_ar: 0.0,
                mu_tilde: q,
                a3: kappa / q,
                a4: Coefficient::Const(0.0),
            }),
            superlinear: Some(SuperlinearGrowth {
                a: Coefficient::Const(0.0),
                c: kappa,
                r: q,
                theta: 1.0,
                beta_star: Coefficient::Const(0.0),
            }),
            linear: None,
        })
    }

    /// `c|t|^(r-2)t + d|t|^(ρ-2)t` with `p < ρ < r`, `c > 0`.
    ///
    /// σ = A|t|^r + D|t|^ρ with `A = c(1 - p/r)`, `D = d(1 - p/ρ)`. For `d ≥ 0`
    /// σ is nondecreasing in `|t|`; for `d < 0` it dips to a minimum σ_min < 0
    /// and the ordered-pair bound holds with ϑ = 1, β* = −σ_min.
    pub fn perturbed_power(c: f64, r: f64, d: f64, rho: f64, p: f64) -> Result<Self> {
        if !(c > 0.0) || !(rho > p) || !(r > rho) || !d.is_finite() {
            return Err(Error::param(
                "nonlinearity",
                "perturbed_power needs c > 0 and p < rho < r",
            ));
        }
        let a_coef = c * (1.0 - p / r);
        let d_coef = d * (1.0 - p / rho);
        let beta = if d_coef >= 0.0 {
            0.0
        } else {
            let t_star = (rho * (-d_coef) / (r * a_coef)).powf(1.0 / (r - rho));
            let sigma_min = a_coef * t_star.powf(r) + d_coef * t_star.powf(rho);
            -sigma_min
        };
        Ok(Nonlinearity {
            source: Source::PerturbedPower { c, r, d, rho },
            p,
            ar: None,
            superlinear: Some(SuperlinearGrowth {
                a: Coefficient::Const(d.abs()),
                c: c + d.abs(),
                r,
                theta: 1.0,
                beta_star: Coefficient::Const(beta),
            }),
            linear: None,
        })
    }

    pub fn affine_decay(gamma: f64, forcing: Forcing, p: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::param("nonlinearity", "affine_decay needs gamma > 0"));
        }
        Ok(Nonlinearity {
            source: Source::AffineDecay { gamma, forcing },
            p,
            ar: None,
            superlinear: None,
            linear: Some(LinearGrowth {
                a: Coefficient::AbsForcing(forcing),
                b: gamma,
                alpha_bar: Coefficient::Const(-gamma),
            }),
        })
    }

    pub fn g(&self, x: f64, t: f64) -> f64 {
        match self.source {
            Source::Zero => 0.0,
            Source::PurePower { kappa, q } => kappa * signed_pow(t, q - 1.0),
            Source::PerturbedPower { c, r, d, rho } => {
                c * signed_pow(t, r - 1.0) + d * signed_pow(t, rho - 1.0)
            }
            Source::AffineDecay { gamma, forcing } => {
                -gamma * signed_pow(t, self.p - 1.0) + forcing.eval(x)
            }
        }
    }

    /// Primitive `G(x, t)` with `G(x, 0) = 0`.
    pub fn primitive(&self, x: f64, t: f64) -> f64 {
        let a = t.abs();
        match self.source {
            Source::Zero => 0.0,
            Source::PurePower { kappa, q } => kappa * a.powf(q) / q,
            Source::PerturbedPower { c, r, d, rho } => c * a.powf(r) / r + d * a.powf(rho) / rho,
            Source::AffineDecay { gamma, forcing } => {
                -gamma * a.powf(self.p) / self.p + forcing.eval(x) * t
            }
        }
    }

    /// `G(x, t1) − G(x, t0)`, accurate when `t0` and `t1` are close.
    pub fn primitive_diff(&self, x: f64, t0: f64, t1: f64) -> f64 {
        match self.source {
            Source::Zero => 0.0,
            Source::PurePower { kappa, q } => kappa / q * pow_diff(t0, t1, q),
            Source::PerturbedPower { c, r, d, rho } => {
                c / r * pow_diff(t0, t1, r) + d / rho * pow_diff(t0, t1, rho)
            }
            Source::AffineDecay { gamma, forcing } => {
                -gamma / self.p * pow_diff(t0, t1, self.p) + forcing.eval(x) * (t1 - t0)
            }
        }
    }

    /// `∂g/∂t`, used by the Newton polish of critical points.
    pub fn dg(&self, _x: f64, t: f64) -> f64 {
        let a = t.abs();
        let pw = |e: f64| if e == 0.0 { 1.0 } else { a.powf(e) };
        match self.source {
            Source::Zero => 0.0,
            Source::PurePower { kappa, q } => kappa * (q - 1.0) * pw(q - 2.0),
            Source::PerturbedPower { c, r, d, rho } => {
                c * (r - 1.0) * pw(r - 2.0) + d * (rho - 1.0) * pw(rho - 2.0)
            }
            Source::AffineDecay { gamma, .. } => -gamma * (self.p - 1.0) * pw(self.p - 2.0),
        }
    }

    /// True when `g(x, -t) = -g(x, t)` for all x.
    pub fn is_odd(&self) -> bool {
        match self.source {
            Source::AffineDecay { forcing, .. } => forcing.is_zero(),
            _ => true,
        }
    }

    /// `σ(x, t) = g(x,t)t − pG(x,t)`.
    pub fn sigma(&self, x: f64, t: f64) -> f64 {
        self.g(x, t) * t - self.p * self.primitive(x, t)
    }

    pub fn name(&self) -> &'static str {
        match self.source {
            Source::Zero => "zero",
            Source::PurePower { .. } => "pure_power",
            Source::PerturbedPower { .. } => "perturbed_power",
            Source::AffineDecay { .. } => "affine_decay",
        }
    }
}
