//! Durrmeyer-type operators: the classical `D_n`, the order-II
//! `D^{M,2}_n`, its Bézier variant `D^{M,2}_{n,μ}`, the kernel `W_{n,μ}` and
//! the cumulative kernel `κ_{n,μ}`.
//!
//! All three operators share the coefficient vector
//! `c_k = (n+1) ∫_0^1 p_{n,k}(u) f(u) du`; they differ only in the weights
//! applied at `x`.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use crate::basis::{
    bernstein_row_unchecked, clamp_unit, partial_integrals_unchecked, LnBinomialRow,
};
use crate::error::{Error, Result};
use crate::exactness::{binomial, int, Rational};
use crate::functions::{FunctionModel, PiecewisePoly};
use crate::modified_basis::{
    modified_row, weights_from_row, BezierParams, ModWeightConfig, WeightCoeffs,
};
use crate::quadrature::{graded_panels, GaussLegendre};

/// `(n, μ, config)` for `D^{M,2}_{n,μ}`.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorParams {
    pub n: usize,
    pub mu: BezierParams,
    pub config: ModWeightConfig,
}

impl OperatorParams {
    pub fn new(n: usize, mu: f64, config: ModWeightConfig) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidDegree { n, min: 3 });
        }
        Ok(Self {
            n,
            mu: BezierParams::new(mu)?,
            config,
        })
    }

    /// Default weight sequences.
    pub fn with_mu(n: usize, mu: f64) -> Result<Self> {
        Self::new(n, mu, ModWeightConfig::order_two())
    }

    pub fn mu(&self) -> f64 {
        self.mu.mu()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoefficientMethod {
    ExactRational,
    Quadrature,
}

/// `c_k = (n+1) ∫_0^1 p_{n,k}(u) f(u) du`, `k = 0..=n`.
#[derive(Clone, Debug)]
pub struct DurrmeyerCoefficients {
    pub n: usize,
    pub values: Vec<f64>,
    pub exact: Option<Vec<Rational>>,
    pub method: CoefficientMethod,
    pub quadrature_error_estimate: f64,
}

/// Target for the level-to-level quadrature difference.
pub const QUADRATURE_TOL: f64 = 1e-12;
const MAX_REFINEMENT: u32 = 6;
const GRADING_LEVELS: usize = 48;
/// Degree assumed for evaluator-only functions when sizing Gauss rules.
const EVALUATOR_DEGREE_HINT: usize = 8;

pub fn durrmeyer_coefficients(f: &FunctionModel, n: usize) -> Result<DurrmeyerCoefficients> {
    match f.structure() {
        Some(pp) => Ok(exact_coefficients(pp, n)),
        None => quadrature_coefficients(f, n),
    }
}

/// Exact coefficients for piecewise-polynomial `f`.
///
/// Uses `u^m p_{n,k} = C(n,k)/C(n+m,k+m) p_{n+m,k+m}` and
/// `∫_0^y p_{N,K} = (1/(N+1)) Σ_{j>K} p_{N+1,j}(y)`. At `y = p/q` every
/// `p_{N+1,j}(y)` has denominator `q^{N+1}`, so the suffix sums are integer sums.
pub fn exact_coefficients(pp: &PiecewisePoly, n: usize) -> DurrmeyerCoefficients {
    let mut acc = vec![Rational::zero(); n + 1];
    let max_m = pp.max_degree();
    let binom_n: Vec<BigInt> = binomial_row(n as u64);
    for m in 0..=max_m {
        let big_n = n + m;
        let binom_big: Vec<BigInt> = binomial_row(big_n as u64);
        // tails[y][K] for every breakpoint y
        let tails: Vec<(Vec<BigInt>, BigInt)> = pp
            .breakpoints()
            .iter()
            .map(|y| scaled_tails(big_n + 1, y))
            .collect();
        for (i, piece) in pp.pieces().iter().enumerate() {
            let c = piece.coeff(m);
            if c.is_zero() {
                continue;
            }
            let (hi_tail, hi_den) = &tails[i + 1];
            let (lo_tail, lo_den) = &tails[i];
            for (k, slot) in acc.iter_mut().enumerate() {
                // (n+1) C(n,k) / (C(n+m,k+m) (n+m+1))
                let factor = Rational::new(
                    BigInt::from(n + 1) * &binom_n[k],
                    &binom_big[k + m] * BigInt::from(big_n + 1),
                );
                let diff = Rational::new(hi_tail[k + m].clone(), hi_den.clone())
                    - Rational::new(lo_tail[k + m].clone(), lo_den.clone());
                *slot += &c * factor * diff;
            }
        }
    }
    let values = acc.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect();
    DurrmeyerCoefficients {
        n,
        values,
        exact: Some(acc),
        method: CoefficientMethod::ExactRational,
        quadrature_error_estimate: 0.0,
    }
}

fn binomial_row(n: u64) -> Vec<BigInt> {
    let mut row = Vec::with_capacity(n as usize + 1);
    let mut c = BigInt::from(1);
    row.push(c.clone());
    for k in 0..n {
        c = c * BigInt::from(n - k) / BigInt::from(k + 1);
        row.push(c.clone());
    }
    row
}

/// For `y = p/q`: integers `T_K = Σ_{j>K} C(M,j) p^j (q-p)^(M-j)` for
/// `K = 0..M-1` and the denominator `q^M`.
fn scaled_tails(big_m: usize, y: &Rational) -> (Vec<BigInt>, BigInt) {
    let p = y.numer().clone();
    let q = y.denom().clone();
    let r = &q - &p;
    let binom = binomial_row(big_m as u64);
    let mut p_pow = vec![BigInt::from(1); big_m + 1];
    let mut r_pow = vec![BigInt::from(1); big_m + 1];
    for j in 1..=big_m {
        p_pow[j] = &p_pow[j - 1] * &p;
        r_pow[j] = &r_pow[j - 1] * &r;
    }
    let mut tails = vec![BigInt::zero(); big_m];
    let mut running = BigInt::zero();
    for kk in (0..big_m).rev() {
        let j = kk + 1;
        running += &binom[j] * &p_pow[j] * &r_pow[big_m - j];
        tails[kk] = running.clone();
    }
    let den = q.pow(big_m as u32);
    (tails, den)
}

/// Composite Gauss–Legendre coefficients, aligned with the structure's
/// breakpoints when present and graded toward both endpoints otherwise.
pub fn quadrature_coefficients(f: &FunctionModel, n: usize) -> Result<DurrmeyerCoefficients> {
    let (knots, degree, graded) = match f.structure() {
        Some(pp) => (pp.knots().to_vec(), pp.max_degree(), false),
        None => (vec![0.0, 1.0], EVALUATOR_DEGREE_HINT, true),
    };
    let nodes = (n + degree).div_ceil(2) + 3;
    let rule = GaussLegendre::cached(nodes);
    let table = LnBinomialRow::new(n);
    let mut previous: Option<Vec<f64>> = None;
    let mut estimate = f64::INFINITY;
    for level in 0..=MAX_REFINEMENT {
        let current = composite_pass(f, &table, &rule, &knots, 1 << level, graded);
        if let Some(prev) = &previous {
            estimate = prev
                .iter()
                .zip(&current)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if estimate < QUADRATURE_TOL {
                return Ok(DurrmeyerCoefficients {
                    n,
                    values: current,
                    exact: None,
                    method: CoefficientMethod::Quadrature,
                    quadrature_error_estimate: estimate,
                });
            }
        }
        previous = Some(current);
    }
    Err(Error::QuadratureNonconvergence {
        estimate,
        requested: QUADRATURE_TOL,
    })
}

fn composite_pass(
    f: &FunctionModel,
    table: &LnBinomialRow,
    rule: &GaussLegendre,
    knots: &[f64],
    uniform: usize,
    graded: bool,
) -> Vec<f64> {
    let n = table.degree();
    let mut out = vec![0.0; n + 1];
    let mut row = vec![0.0; n + 1];
    let levels = if graded { GRADING_LEVELS } else { 0 };
    for w in knots.windows(2) {
        let left = graded && w[0] == 0.0;
        let right = graded && w[1] == 1.0;
        for (a, b) in graded_panels(w[0], w[1], uniform, left, right, levels) {
            for (u, wt) in rule.on(a, b) {
                let fu = f.eval(u);
                if fu == 0.0 {
                    continue;
                }
                table.fill(u, &mut row);
                let s = wt * fu;
                for (o, r) in out.iter_mut().zip(&row) {
                    *o += s * r;
                }
            }
        }
    }
    let scale = (n + 1) as f64;
    out.iter_mut().for_each(|v| *v *= scale);
    out
}

/// Read-shared cache of coefficient vectors keyed by `(function name, n)`.
/// Population is idempotent: concurrent misses compute the same value.
#[derive(Default)]
pub struct CoefficientCache {
    map: RwLock<HashMap<(String, usize), Arc<DurrmeyerCoefficients>>>,
}

impl CoefficientCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, f: &FunctionModel, n: usize) -> Result<Arc<DurrmeyerCoefficients>> {
        let key = (f.name().to_string(), n);
        if let Some(hit) = self.map.read().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return Ok(hit.clone());
        }
        let computed = Arc::new(durrmeyer_coefficients(f, n)?);
        let mut guard = self.map.write().unwrap_or_else(|e| e.into_inner());
        Ok(guard.entry(key).or_insert(computed).clone())
    }
}

/// Sum in a fixed binary-tree order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        len if len <= 8 => v.iter().sum(),
        len => {
            let (a, b) = v.split_at(len / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

fn weighted_sum(weights: &[f64], coeffs: &[f64]) -> f64 {
    let products: Vec<f64> = weights.iter().zip(coeffs).map(|(w, c)| w * c).collect();
    pairwise_sum(&products)
}

/// Value of `D^{M,2}_{n,μ}(f; x)` with diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    /// A non-integer power met a negative tail sum.
    pub negative_base: bool,
    /// Some tail sum `J_{n,k}(x)` lies outside `[0, 1]`.
    pub tails_out_of_unit: bool,
}

/// `f` bound to operator parameters with its coefficients precomputed.
#[derive(Clone, Debug)]
pub struct BezierDurrmeyer {
    params: OperatorParams,
    weights: WeightCoeffs,
    coeffs: Arc<DurrmeyerCoefficients>,
}

impl BezierDurrmeyer {
    pub fn new(f: &FunctionModel, params: &OperatorParams) -> Result<Self> {
        Ok(Self::from_coefficients(
            params,
            Arc::new(durrmeyer_coefficients(f, params.n)?),
        ))
    }

    pub fn with_cache(
        f: &FunctionModel,
        params: &OperatorParams,
        cache: &CoefficientCache,
    ) -> Result<Self> {
        Ok(Self::from_coefficients(params, cache.get(f, params.n)?))
    }

    pub fn from_coefficients(params: &OperatorParams, coeffs: Arc<DurrmeyerCoefficients>) -> Self {
        assert_eq!(
            coeffs.n, params.n,
            "coefficient degree must match operator degree"
        );
        Self {
            weights: params.config.coeffs(params.n),
            params: params.clone(),
            coeffs,
        }
    }

    pub fn params(&self) -> &OperatorParams {
        &self.params
    }

    pub fn coefficients(&self) -> &DurrmeyerCoefficients {
        &self.coeffs
    }

    /// `D^{M,2}_{n,μ}(f; x)`.
    pub fn eval(&self, x: f64) -> Result<Evaluation> {
        let x = clamp_unit(x)?;
        let row = modified_row(&self.weights, self.params.n, x);
        let q = weights_from_row(&row, self.params.mu);
        Ok(Evaluation {
            value: weighted_sum(&q.values, &self.coeffs.values),
            negative_base: q.negative_base,
            tails_out_of_unit: q.tails_out_of_unit,
        })
    }

    /// `D^{M,2}_n(f; x)` (no Bézier powers).
    pub fn eval_order_two(&self, x: f64) -> Result<f64> {
        let x = clamp_unit(x)?;
        let row = modified_row(&self.weights, self.params.n, x);
        Ok(weighted_sum(&row, &self.coeffs.values))
    }

    /// `D_n(f; x)` with the same coefficients.
    pub fn eval_classical(&self, x: f64) -> Result<f64> {
        let x = clamp_unit(x)?;
        Ok(weighted_sum(
            &bernstein_row_unchecked(self.params.n, x),
            &self.coeffs.values,
        ))
    }
}

/// `D_n(f; x) = Σ_k p_{n,k}(x) c_k`.
pub fn apply_classical(f: &FunctionModel, n: usize, x: f64) -> Result<f64> {
    let x = clamp_unit(x)?;
    let c = durrmeyer_coefficients(f, n)?;
    Ok(weighted_sum(&bernstein_row_unchecked(n, x), &c.values))
}

pub fn apply_dm2(f: &FunctionModel, params: &OperatorParams, x: f64) -> Result<f64> {
    BezierDurrmeyer::new(f, params)?.eval_order_two(x)
}

pub fn apply_dm2_bezier(f: &FunctionModel, params: &OperatorParams, x: f64) -> Result<Evaluation> {
    BezierDurrmeyer::new(f, params)?.eval(x)
}

fn bezier_weights_at(params: &OperatorParams, x: f64) -> Result<Vec<f64>> {
    let x = clamp_unit(x)?;
    let row = modified_row(&params.config.coeffs(params.n), params.n, x);
    Ok(weights_from_row(&row, params.mu).values)
}

/// `W_{n,μ}(x, u) = (n+1) Σ_k Q^{(μ)}_{n,k}(x) p_{n,k}(u)`.
pub fn kernel_w(params: &OperatorParams, x: f64, u: f64) -> Result<f64> {
    let q = bezier_weights_at(params, x)?;
    let u = clamp_unit(u)?;
    let p = bernstein_row_unchecked(params.n, u);
    Ok((params.n + 1) as f64 * weighted_sum(&q, &p))
}

/// `κ_{n,μ}(x, y) = ∫_0^y W_{n,μ}(x, t) dt`, exact in `t`.
pub fn kappa(params: &OperatorParams, x: f64, y: f64) -> Result<f64> {
    let q = bezier_weights_at(params, x)?;
    let y = clamp_unit(y)?;
    let integrals = partial_integrals_unchecked(params.n, y);
    Ok((params.n + 1) as f64 * weighted_sum(&q, &integrals))
}

/// `D^{M,2}_{n,μ}((u-x)^order; x)` in closed form per basis index:
/// `(n+1) ∫_0^1 u^m p_{n,k} = Π_{i=1..m} (k+i)/(n+1+i)`.
pub fn central_moment(params: &OperatorParams, x: f64, order: usize) -> Result<f64> {
    let q = bezier_weights_at(params, x)?;
    let n = params.n;
    let per_k: Vec<f64> = (0..=n)
        .map(|k| {
            (0..=order)
                .map(|m| {
                    let moment: f64 = (1..=m)
                        .map(|i| (k + i) as f64 / (n + 1 + i) as f64)
                        .product();
                    let c = binomial(order as u64, m as u64)
                        .to_f64()
                        .unwrap_or(f64::NAN);
                    c * moment * (-x).powi((order - m) as i32)
                })
                .sum()
        })
        .collect();
    Ok(weighted_sum(&q, &per_k))
}

/// `D^{M,2}_{n,μ}(|u - x|; x)`, integrating `|u - x|` exactly against each
/// basis polynomial (split at `u = x`).
pub fn first_absolute_moment(params: &OperatorParams, x: f64) -> Result<f64> {
    let q = bezier_weights_at(params, x)?;
    let x = clamp_unit(x)?;
    let n = params.n;
    let nf = n as f64;
    let below = partial_integrals_unchecked(n, x);
    let below_up = partial_integrals_unchecked(n + 1, x);
    let per_k: Vec<f64> = (0..=n)
        .map(|k| {
            let kf = k as f64;
            // ∫_0^x u p_{n,k} = (k+1)/(n+1) ∫_0^x p_{n+1,k+1}
            let first_below = (kf + 1.0) / (nf + 1.0) * below_up[k + 1];
            let signed_full = (kf + 1.0) / ((nf + 1.0) * (nf + 2.0)) - x / (nf + 1.0);
            (nf + 1.0) * (signed_full - 2.0 * (first_below - x * below[k]))
        })
        .collect();
    Ok(weighted_sum(&q, &per_k))
}

/// Exact coefficient of `e_m` for cross-checks: `Π_{i=1..m} (k+i)/(n+1+i)`.
pub fn monomial_coefficient(n: usize, k: usize, m: usize) -> Rational {
    (1..=m).fold(int(1), |acc, i| {
        acc * Rational::new(BigInt::from(k + i), BigInt::from(n + 1 + i))
    })
}
