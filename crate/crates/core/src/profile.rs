//! Named analytic profiles in `x2`, used for the shear background `gamma`
//! of the channel problem and for the shear field `V` of the scalar problem.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    /// `c`
    Const(f64),
    /// `c0 + slope * (x + 1)`
    Linear { c0: f64, slope: f64 },
    /// `eps * cos x`
    Cos { eps: f64 },
    /// `mean + amp * sin(freq * x)`
    Sine { mean: f64, amp: f64, freq: f64 },
    /// `sign(x) |x|^alpha`
    Power { alpha: f64 },
}

impl Profile {
    pub fn value(&self, x: f64) -> f64 {
        self.derivative(x, 0)
    }

    /// `n`-th derivative. For `Power` with non-integer `alpha` the result is
    /// infinite where it does not exist.
    pub fn derivative(&self, x: f64, n: u32) -> f64 {
        match *self {
            Profile::Const(c) => {
                if n == 0 {
                    c
                } else {
                    0.0
                }
            }
            Profile::Linear { c0, slope } => match n {
                0 => c0 + slope * (x + 1.0),
                1 => slope,
                _ => 0.0,
            },
            Profile::Cos { eps } => eps * libm::cos(x + n as f64 * FRAC_PI_2),
            Profile::Sine { mean, amp, freq } => {
                let d = amp * libm::pow(freq, n as f64) * libm::sin(freq * x + n as f64 * FRAC_PI_2);
                if n == 0 {
                    mean + d
                } else {
                    d
                }
            }
            Profile::Power { alpha } => power_derivative(alpha, x, n),
        }
    }

    /// `int_0^x V(y) dy`.
    pub fn antiderivative(&self, x: f64) -> f64 {
        match *self {
            Profile::Const(c) => c * x,
            Profile::Linear { c0, slope } => c0 * x + slope * (0.5 * x * x + x),
            Profile::Cos { eps } => eps * libm::sin(x),
            Profile::Sine { mean, amp, freq } => {
                mean * x + amp * (1.0 - libm::cos(freq * x)) / freq
            }
            Profile::Power { alpha } => libm::pow(x.abs(), alpha + 1.0) / (alpha + 1.0),
        }
    }
}

fn power_derivative(alpha: f64, x: f64, n: u32) -> f64 {
    // d^n/dx^n sign(x)|x|^a = a(a-1)...(a-n+1) sign(x)^(n+1) |x|^(a-n)
    let mut coef = 1.0;
    for i in 0..n {
        coef *= alpha - i as f64;
    }
    if coef == 0.0 {
        return 0.0;
    }
    let e = alpha - n as f64;
    let mag = if x == 0.0 {
        if e > 0.0 {
            0.0
        } else if e == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        libm::pow(x.abs(), e)
    };
    let sign = if x < 0.0 && n % 2 == 0 { -1.0 } else { 1.0 };
    // At x = 0 with an even exponent the sign factor is irrelevant.
    sign * coef * mag
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Profile::Const(c) => write!(f, "const({c})"),
            Profile::Linear { c0, slope } => write!(f, "linear({c0}, {slope})"),
            Profile::Cos { eps } => write!(f, "cos({eps})"),
            Profile::Sine { mean, amp, freq } => write!(f, "sine({mean}, {amp}, {freq})"),
            Profile::Power { alpha } => write!(f, "power({alpha})"),
        }
    }
}

impl FromStr for Profile {
    type Err = Error;

    /// Parses `const(c)`, `linear(c0, slope)`, `cos(eps)`,
    /// `sine(mean, amp, freq)` and `power(alpha)`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| Error::InvalidParameter(format!("profile `{s}`: {msg}"));
        let s_trim = s.trim();
        let open = s_trim.find('(').ok_or_else(|| bad("expected name(args)".into()))?;
        if !s_trim.ends_with(')') {
            return Err(bad("missing `)`".into()));
        }
        let name = s_trim[..open].trim();
        let inner = &s_trim[open + 1..s_trim.len() - 1];
        let args: Vec<f64> = if inner.trim().is_empty() {
            Vec::new()
        } else {
            inner
                .split(',')
                .map(|a| a.trim().parse::<f64>().map_err(|e| bad(format!("`{}`: {e}", a.trim()))))
                .collect::<Result<_>>()?
        };
        if let Some(v) = args.iter().find(|v| !v.is_finite()) {
            return Err(bad(format!("non-finite argument {v}")));
        }
        let want = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(bad(format!("expected {n} arguments, got {}", args.len())))
            }
        };
        match name {
            "const" => want(1).map(|_| Profile::Const(args[0])),
            "linear" => want(2).map(|_| Profile::Linear { c0: args[0], slope: args[1] }),
            "cos" => want(1).map(|_| Profile::Cos { eps: args[0] }),
            "sine" => want(3).map(|_| Profile::Sine { mean: args[0], amp: args[1], freq: args[2] }),
            "power" => {
                want(1)?;
                if args[0] < 0.0 {
                    return Err(bad("alpha must be nonnegative".into()));
                }
                Ok(Profile::Power { alpha: args[0] })
            }
            other => Err(bad(format!("unknown family `{other}`"))),
        }
    }
}

/// A profile sampled on the `x2` nodes of a grid, with its first two
/// derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct ShearProfile {
    profile: Profile,
    grid: Grid,
    gamma: Vec<f64>,
    dgamma: Vec<f64>,
    ddgamma: Vec<f64>,
}

impl ShearProfile {
    pub fn new(profile: Profile, grid: Grid) -> Result<Self> {
        let sample = |n: u32| -> Result<Vec<f64>> {
            let v: Vec<f64> = (0..grid.n2()).map(|j| profile.derivative(grid.x2(j), n)).collect();
            match v.iter().position(|x| !x.is_finite()) {
                Some(index) => Err(Error::NonFinite { index }),
                None => Ok(v),
            }
        };
        Ok(ShearProfile { profile, grid, gamma: sample(0)?, dgamma: sample(1)?, ddgamma: sample(2)? })
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn dgamma(&self) -> &[f64] {
        &self.dgamma
    }

    pub fn ddgamma(&self) -> &[f64] {
        &self.ddgamma
    }

    /// `min |gamma|` over the nodes.
    pub fn c0(&self) -> f64 {
        self.gamma.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.gamma.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_constant(&self) -> bool {
        self.dgamma.iter().all(|&d| d == 0.0)
    }

    /// Discrete `W^{j,inf}` norm of `gamma`: `max_{i <= j} max_nodes |gamma^(i)|`.
    pub fn wk_inf(&self, j: u32) -> f64 {
        self.winf_from(0, j)
    }

    /// Discrete `W^{j,inf}` norm of `gamma'`.
    pub fn wk_inf_prime(&self, j: u32) -> f64 {
        self.winf_from(1, j + 1)
    }

    fn winf_from(&self, lo: u32, hi: u32) -> f64 {
        let mut m: f64 = 0.0;
        for n in lo..=hi {
            for j in 0..self.grid.n2() {
                m = m.max(self.profile.derivative(self.grid.x2(j), n).abs());
            }
        }
        m
    }
}
