//! Bernstein basis polynomials `p_{n,k}(x) = C(n,k) x^k (1-x)^(n-k)` and
//! their integrals.
//!
//! Out-of-range indices (`k < 0` or `k > n`) denote the zero polynomial.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::exactness::{ratio, Rational};

/// Points this far outside `[0, 1]` are clamped; anything further is a domain error.
pub const DOMAIN_EPS: f64 = 1e-12;

/// Largest degree evaluated by direct binomial products.
const DIRECT_MAX_DEGREE: usize = 60;

/// Validated point of `[0, 1]`.
pub fn clamp_unit(x: f64) -> Result<f64> {
    if x.is_nan() || !(-DOMAIN_EPS..=1.0 + DOMAIN_EPS).contains(&x) {
        return Err(Error::Domain { x });
    }
    Ok(x.clamp(0.0, 1.0))
}

/// `(n, k)` pair naming one basis polynomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BasisIndex {
    pub n: usize,
    pub k: i64,
}

impl BasisIndex {
    pub fn new(n: usize, k: i64) -> Self {
        Self { n, k }
    }

    pub fn in_range(&self) -> bool {
        self.k >= 0 && self.k as usize <= self.n
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        bernstein_eval(self.n, self.k, x)
    }
}

pub fn ln_binomial(n: usize, k: usize) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

fn binomial_f64(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Single basis value. Degrees above 60 go through log-gamma to avoid
/// overflow in the binomial coefficient.
pub fn bernstein_eval(n: usize, k: i64, x: f64) -> Result<f64> {
    let x = clamp_unit(x)?;
    if k < 0 || k as usize > n {
        return Ok(0.0);
    }
    let k = k as usize;
    if n <= DIRECT_MAX_DEGREE {
        return Ok(binomial_f64(n, k) * x.powi(k as i32) * (1.0 - x).powi((n - k) as i32));
    }
    Ok(ln_bernstein(n, k, x, ln_binomial(n, k)))
}

fn ln_bernstein(n: usize, k: usize, x: f64, ln_c: f64) -> f64 {
    if x == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if x == 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    (ln_c + k as f64 * x.ln() + (n - k) as f64 * (-x).ln_1p()).exp()
}

/// Full row `p_{n,0}(x), …, p_{n,n}(x)` by the two-term recurrence
/// `p_{n,k} = (1-x) p_{n-1,k} + x p_{n-1,k-1}`. O(n²), nonnegative, stable
/// near the endpoints.
pub fn bernstein_all(n: usize, x: f64) -> Result<Vec<f64>> {
    let x = clamp_unit(x)?;
    Ok(bernstein_row_unchecked(n, x))
}

pub(crate) fn bernstein_row_unchecked(n: usize, x: f64) -> Vec<f64> {
    let y = 1.0 - x;
    let mut row = vec![0.0; n + 1];
    row[0] = 1.0;
    for m in 1..=n {
        for k in (1..=m).rev() {
            row[k] = y * row[k] + x * row[k - 1];
        }
        row[0] *= y;
    }
    row
}

/// Log-binomial table for fast O(n) row evaluation at many nodes.
#[derive(Clone, Debug)]
pub(crate) struct LnBinomialRow {
    ln_c: Vec<f64>,
}

impl LnBinomialRow {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            ln_c: (0..=n).map(|k| ln_binomial(n, k)).collect(),
        }
    }

    pub(crate) fn degree(&self) -> usize {
        self.ln_c.len() - 1
    }

    /// Writes the row at `x` into `out` (length n+1) in O(n).
    pub(crate) fn fill(&self, x: f64, out: &mut [f64]) {
        let n = self.degree();
        if x <= 0.0 || x >= 1.0 {
            out.iter_mut().for_each(|v| *v = 0.0);
            out[if x <= 0.0 { 0 } else { n }] = 1.0;
            return;
        }
        let lx = x.ln();
        let ly = (-x).ln_1p();
        for (k, v) in out.iter_mut().enumerate() {
            *v = (self.ln_c[k] + k as f64 * lx + (n - k) as f64 * ly).exp();
        }
    }
}

/// `∫_0^1 p_{n,k}(u) du = 1/(n+1)`; zero for out-of-range `k`.
pub fn bernstein_integral_01(n: usize, k: i64) -> Rational {
    if k < 0 || k as usize > n {
        return ratio(0, 1);
    }
    ratio(1, n as i64 + 1)
}

/// `∫_0^y p_{n,k}(t) dt` for every `k`.
///
/// The antiderivative of `p_{n,k}` in the degree-(n+1) Bernstein basis is
/// `(1/(n+1)) Σ_{j>k} p_{n+1,j}`, so the row is a scaled suffix sum of
/// `bernstein_all(n+1, y)`. Every entry is nondecreasing in `y`.
pub fn bernstein_partial_integrals(n: usize, y: f64) -> Result<Vec<f64>> {
    let y = clamp_unit(y)?;
    Ok(partial_integrals_unchecked(n, y))
}

pub(crate) fn partial_integrals_unchecked(n: usize, y: f64) -> Vec<f64> {
    let up = bernstein_row_unchecked(n + 1, y);
    let scale = 1.0 / (n + 1) as f64;
    let mut out = vec![0.0; n + 1];
    let mut tail = 0.0;
    for k in (0..=n).rev() {
        tail += up[k + 1];
        out[k] = tail * scale;
    }
    out
}

pub fn bernstein_partial_integral(n: usize, k: i64, y: f64) -> Result<f64> {
    if k < 0 || k as usize > n {
        clamp_unit(y)?;
        return Ok(0.0);
    }
    Ok(bernstein_partial_integrals(n, y)?[k as usize])
}
