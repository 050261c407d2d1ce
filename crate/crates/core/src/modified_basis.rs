//! The order-II modified basis
//! `p^{M,2}_{n,k} = g(x,n) p_{n-2,k} + h(x,n) p_{n-2,k-1} + g(1-x,n) p_{n-2,k-2}`,
//! its tail sums `J_{n,k}` and the Bézier weights `Q^{(μ)}_{n,k} = J_{n,k}^μ - J_{n,k+1}^μ`.
//!
//! The modified basis is signed (`g` is negative near `x = 1` for the default
//! sequences), so tail sums can leave `[0, 1]`. Non-integer powers of negative
//! tail sums use `sign(J)|J|^μ` and raise a diagnostic flag.

use std::fmt;

use num_traits::{ToPrimitive, Zero};

use crate::basis::{bernstein_row_unchecked, clamp_unit};
use crate::error::{Error, Result};
use crate::exactness::{int, ratio, Rational};

/// Sequence `n ↦ slope·n + intercept` with exact rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AffineSeq {
    pub slope: Rational,
    pub intercept: Rational,
}

impl AffineSeq {
    pub fn new(slope: Rational, intercept: Rational) -> Self {
        Self { slope, intercept }
    }

    pub fn constant(c: Rational) -> Self {
        Self::new(Rational::zero(), c)
    }

    pub fn at(&self, n: usize) -> Rational {
        &self.slope * int(n as i64) + &self.intercept
    }

    pub fn at_f64(&self, n: usize) -> f64 {
        self.at(n).to_f64().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for AffineSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})n + ({})", self.slope, self.intercept)
    }
}

/// Coefficient sequences of `g(x,n) = g2 x² + g1 x + g0` and `h(x,n) = h0 x(1-x)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ModWeightConfig {
    pub name: String,
    pub g0: AffineSeq,
    pub g1: AffineSeq,
    pub g2: AffineSeq,
    pub h0: AffineSeq,
}

impl ModWeightConfig {
    /// `g0 = 3/2`, `g1 = -n`, `g2 = n - 2`, `h0 = 2(n - 2)`.
    pub fn order_two() -> Self {
        Self {
            name: "default".into(),
            g0: AffineSeq::constant(ratio(3, 2)),
            g1: AffineSeq::new(int(-1), int(0)),
            g2: AffineSeq::new(int(1), int(-2)),
            h0: AffineSeq::new(int(2), int(-4)),
        }
    }

    /// `g2 = g0 = 1`, `g1 = -2`, `h0 = 2`: the modified basis collapses to
    /// the degree-n Bernstein basis.
    pub fn bernstein_reduction() -> Self {
        Self {
            name: "bernstein-reduction".into(),
            g0: AffineSeq::constant(int(1)),
            g1: AffineSeq::constant(int(-2)),
            g2: AffineSeq::constant(int(1)),
            h0: AffineSeq::constant(int(2)),
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "default" | "order-two" => Ok(Self::order_two()),
            "bernstein-reduction" => Ok(Self::bernstein_reduction()),
            other => Err(Error::Parse(format!(
                "unknown weight configuration `{other}` (expected `default` or `bernstein-reduction`)"
            ))),
        }
    }

    /// `2 g2(n) - h0(n) == 0`, checked exactly.
    pub fn h_constraint_holds(&self, n: usize) -> bool {
        (int(2) * self.g2.at(n) - self.h0.at(n)).is_zero()
    }

    pub fn coeffs(&self, n: usize) -> WeightCoeffs {
        WeightCoeffs {
            g0: self.g0.at_f64(n),
            g1: self.g1.at_f64(n),
            g2: self.g2.at_f64(n),
            h0: self.h0.at_f64(n),
        }
    }
}

impl Default for ModWeightConfig {
    fn default() -> Self {
        Self::order_two()
    }
}

/// Floating-point image of a configuration at fixed `n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightCoeffs {
    pub g0: f64,
    pub g1: f64,
    pub g2: f64,
    pub h0: f64,
}

impl WeightCoeffs {
    pub fn g(&self, x: f64) -> f64 {
        (self.g2 * x + self.g1) * x + self.g0
    }

    pub fn h(&self, x: f64) -> f64 {
        self.h0 * x * (1.0 - x)
    }
}

/// Bézier exponent `μ >= 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BezierParams {
    mu: f64,
}

impl BezierParams {
    pub fn new(mu: f64) -> Result<Self> {
        if !mu.is_finite() || mu < 1.0 {
            return Err(Error::InvalidMu(mu));
        }
        Ok(Self { mu })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn is_integer(&self) -> bool {
        self.mu.fract() == 0.0 && self.mu <= i32::MAX as f64
    }
}

pub fn g_eval(cfg: &ModWeightConfig, n: usize, x: f64) -> f64 {
    cfg.coeffs(n).g(x)
}

pub fn h_eval(cfg: &ModWeightConfig, n: usize, x: f64) -> f64 {
    cfg.coeffs(n).h(x)
}

fn check_degree(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::InvalidDegree { n, min: 3 });
    }
    Ok(())
}

/// Row `p^{M,2}_{n,0}(x), …, p^{M,2}_{n,n}(x)`.
pub fn modified_basis_all(cfg: &ModWeightConfig, n: usize, x: f64) -> Result<Vec<f64>> {
    check_degree(n)?;
    let x = clamp_unit(x)?;
    Ok(modified_row(&cfg.coeffs(n), n, x))
}

pub(crate) fn modified_row(w: &WeightCoeffs, n: usize, x: f64) -> Vec<f64> {
    let low = bernstein_row_unchecked(n - 2, x);
    let (gl, hm, gr) = (w.g(x), w.h(x), w.g(1.0 - x));
    let mut row = vec![0.0; n + 1];
    for (j, &b) in low.iter().enumerate() {
        row[j] += gl * b;
        row[j + 1] += hm * b;
        row[j + 2] += gr * b;
    }
    row
}

/// `J_{n,0}(x), …, J_{n,n+1}(x)` by backward cumulative summation; `J_{n,n+1} = 0`.
/// `J_{n,0}` is not renormalized.
pub fn tail_sums(cfg: &ModWeightConfig, n: usize, x: f64) -> Result<Vec<f64>> {
    let row = modified_basis_all(cfg, n, x)?;
    Ok(tails_of(&row))
}

pub(crate) fn tails_of(row: &[f64]) -> Vec<f64> {
    let mut j = vec![0.0; row.len() + 1];
    for k in (0..row.len()).rev() {
        j[k] = j[k + 1] + row[k];
    }
    j
}

/// Tolerance used when deciding that a tail sum left `[0, 1]`.
pub const TAIL_RANGE_EPS: f64 = 1e-12;

pub fn tails_leave_unit_interval(j: &[f64]) -> bool {
    j.iter()
        .any(|&v| !(-TAIL_RANGE_EPS..=1.0 + TAIL_RANGE_EPS).contains(&v))
}

/// `sign(v)|v|^μ`; integer exponents use exact repeated products.
pub fn signed_pow(v: f64, mu: BezierParams) -> f64 {
    if mu.is_integer() {
        v.powi(mu.mu() as i32)
    } else {
        v.signum() * v.abs().powf(mu.mu())
    }
}

/// Bézier weights at one point with diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct BezierWeights {
    pub values: Vec<f64>,
    /// A non-integer power was applied to a negative tail sum.
    pub negative_base: bool,
    /// Some tail sum lies outside `[0, 1]`.
    pub tails_out_of_unit: bool,
}

pub fn bezier_weights(cfg: &ModWeightConfig, n: usize, mu: f64, x: f64) -> Result<BezierWeights> {
    let mu = BezierParams::new(mu)?;
    let row = modified_basis_all(cfg, n, x)?;
    Ok(weights_from_row(&row, mu))
}

pub(crate) fn weights_from_row(row: &[f64], mu: BezierParams) -> BezierWeights {
    let j = tails_of(row);
    let negative_base = !mu.is_integer() && j.iter().any(|&v| v < 0.0);
    let powered: Vec<f64> = j.iter().map(|&v| signed_pow(v, mu)).collect();
    let values = powered.windows(2).map(|w| w[0] - w[1]).collect();
    BezierWeights {
        values,
        negative_base,
        tails_out_of_unit: tails_leave_unit_interval(&j),
    }
}

/// Fraction of the uniform grid (`points` including endpoints) at which some
/// tail sum lies outside `[0, 1]`.
pub fn tail_excursion_fraction(cfg: &ModWeightConfig, n: usize, points: usize) -> Result<f64> {
    if points < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: points,
        });
    }
    let mut hits = 0usize;
    for i in 0..points {
        let x = i as f64 / (points - 1) as f64;
        if tails_leave_unit_interval(&tail_sums(cfg, n, x)?) {
            hits += 1;
        }
    }
    Ok(hits as f64 / points as f64)
}
