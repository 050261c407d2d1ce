//! Error measurement, the Ditzian–Totik modulus, right-hand sides of the
//! approximation theorems and log-log rate fitting.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functions::{one_sided_derivatives, tv_fx, FunctionModel};
use crate::operator::{kappa, BezierDurrmeyer, CoefficientCache, OperatorParams};

pub const DEFAULT_GRID: usize = 201;
pub const DEFAULT_H_SAMPLES: usize = 129;
pub const DEFAULT_X_SAMPLES: usize = 2001;
/// Smallest admissible sample count for [`dt_modulus`].
pub const MIN_SAMPLES: usize = 16;
/// Ratio between the largest and smallest step probed by [`dt_modulus`].
const H_SPAN: f64 = 1000.0;
/// Constant used for the tail estimates of the cumulative kernel.
pub const TAIL_CONSTANT: f64 = 2.5;

/// `points` equally spaced values covering `[0, 1]`, endpoints included.
pub fn uniform_grid(points: usize) -> Vec<f64> {
    let last = (points - 1) as f64;
    (0..points).map(|i| i as f64 / last).collect()
}

/// One measured-versus-bound comparison.
#[derive(Clone, Debug)]
pub struct BoundReport {
    pub function: String,
    pub params: OperatorParams,
    /// `None` for sup-norm rows.
    pub x: Option<f64>,
    pub variant: String,
    pub lhs: f64,
    pub rhs: f64,
    pub flags: Vec<String>,
}

impl BoundReport {
    pub fn new(
        function: &str,
        params: &OperatorParams,
        x: Option<f64>,
        variant: &str,
        lhs: f64,
        rhs: f64,
    ) -> Self {
        Self {
            function: function.to_string(),
            params: params.clone(),
            x,
            variant: variant.to_string(),
            lhs,
            rhs,
            flags: Vec::new(),
        }
    }

    /// `rhs - lhs`; negative values are kept as findings.
    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }

    pub fn holds(&self) -> bool {
        self.slack() >= 0.0
    }
}

/// Fixed-width scientific format with 17 significant digits.
pub fn fmt_real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

pub fn write_bound_reports<W: Write>(w: W, reports: &[BoundReport]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "function", "n", "mu", "x", "variant", "lhs", "rhs", "slack", "flags",
    ])?;
    for r in reports {
        out.write_record([
            r.function.clone(),
            r.params.n.to_string(),
            fmt_real(r.params.mu()),
            r.x.map(fmt_real).unwrap_or_else(|| "SUP".to_string()),
            r.variant.clone(),
            fmt_real(r.lhs),
            fmt_real(r.rhs),
            fmt_real(r.slack()),
            r.flags.join(";"),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Grid sup of `|D^{M,2}_{n,μ}(f; x) - f(x)|`.
pub fn sup_error(f: &FunctionModel, params: &OperatorParams, grid_size: usize) -> Result<f64> {
    let op = BezierDurrmeyer::new(f, params)?;
    sup_error_of(&op, f, grid_size)
}

pub fn sup_error_of(op: &BezierDurrmeyer, f: &FunctionModel, grid_size: usize) -> Result<f64> {
    if grid_size < 3 {
        return Err(Error::InvalidParameter(format!(
            "grid size must be at least 3, got {grid_size}"
        )));
    }
    let mut worst: f64 = 0.0;
    for x in uniform_grid(grid_size) {
        worst = worst.max((op.eval(x)?.value - f.eval(x)).abs());
    }
    Ok(worst)
}

/// `φ(x) = √(x(1-x))`.
pub fn phi(x: f64) -> f64 {
    (x * (1.0 - x)).max(0.0).sqrt()
}

/// Estimate of `ω_φ(f, t) = sup_{0<h≤t} sup_x |f(x + hφ(x)/2) - f(x - hφ(x)/2)|`.
///
/// `h` runs over `h_samples` log-spaced values in `[t/1000, t]`, `x` over a
/// uniform grid; pairs leaving `[0, 1]` are skipped. Counts below
/// [`MIN_SAMPLES`] are raised to it.
pub fn dt_modulus(f: &FunctionModel, t: f64, h_samples: usize, x_samples: usize) -> f64 {
    let hs = h_samples.max(MIN_SAMPLES);
    let xs = uniform_grid(x_samples.max(MIN_SAMPLES));
    let values: Vec<f64> = xs.iter().map(|&x| phi(x)).collect();
    let mut best: f64 = 0.0;
    for j in 0..hs {
        let h = t * H_SPAN.powf(-(j as f64) / (hs - 1) as f64);
        for (&x, &p) in xs.iter().zip(&values) {
            let d = 0.5 * h * p;
            let (lo, hi) = (x - d, x + d);
            if lo < 0.0 || hi > 1.0 {
                continue;
            }
            best = best.max((f.eval(hi) - f.eval(lo)).abs());
        }
    }
    best
}

/// Per-`n` row of the direct-theorem study.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectConstant {
    pub n: usize,
    pub sup_error: f64,
    pub modulus: f64,
    /// `sup_error / ω_φ(f, (n+2)^{-1/2})`; infinite when the modulus vanishes
    /// but the error does not.
    pub empirical_c: f64,
}

pub fn direct_bound_constant(
    f: &FunctionModel,
    mu: f64,
    n_list: &[usize],
) -> Result<Vec<DirectConstant>> {
    let cache = CoefficientCache::new();
    n_list
        .par_iter()
        .map(|&n| {
            let params = OperatorParams::with_mu(n, mu)?;
            let op = BezierDurrmeyer::with_cache(f, &params, &cache)?;
            let err = sup_error_of(&op, f, DEFAULT_GRID)?;
            let modulus = dt_modulus(
                f,
                1.0 / ((n + 2) as f64).sqrt(),
                DEFAULT_H_SAMPLES,
                DEFAULT_X_SAMPLES,
            );
            let empirical_c = if modulus > 0.0 {
                err / modulus
            } else if err > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            Ok(DirectConstant {
                n,
                sup_error: err,
                modulus,
                empirical_c,
            })
        })
        .collect()
}

/// Ratio of the largest to the smallest finite positive entry.
pub fn spread(values: &[f64]) -> f64 {
    let pos: Vec<f64> = values.iter().copied().filter(|v| *v > 0.0).collect();
    if pos.len() != values.len() || pos.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    let max = pos.iter().copied().fold(f64::MIN, f64::max);
    let min = pos.iter().copied().fold(f64::MAX, f64::min);
    max / min
}

/// Parameters of the class `|f(t) - f(x)| ≤ M |t-x|^ζ / (t + α₁x² + α₂x)^{ζ/2}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LipParams {
    pub zeta: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub m_constant: f64,
}

impl LipParams {
    pub fn new(zeta: f64, alpha1: f64, alpha2: f64, m_constant: f64) -> Result<Self> {
        if !(zeta > 0.0 && zeta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "zeta must lie in (0, 1], got {zeta}"
            )));
        }
        if alpha1.is_nan() || alpha1 < 0.0 || alpha2.is_nan() || alpha2 <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "need alpha1 >= 0 and alpha2 > 0, got {alpha1}, {alpha2}"
            )));
        }
        if !(m_constant > 0.0 && m_constant.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "class constant must be positive, got {m_constant}"
            )));
        }
        Ok(Self {
            zeta,
            alpha1,
            alpha2,
            m_constant,
        })
    }

    /// Uses [`estimate_class_constant`] on a `points × points` grid.
    pub fn calibrated(
        f: &FunctionModel,
        zeta: f64,
        alpha1: f64,
        alpha2: f64,
        points: usize,
    ) -> Result<Self> {
        let m = estimate_class_constant(f, zeta, alpha1, alpha2, points);
        Self::new(zeta, alpha1, alpha2, m)
    }
}

/// Grid sup of `|f(t) - f(x)| (t + α₁x² + α₂x)^{ζ/2} / |t - x|^ζ` over
/// `t ≠ x`, `x > 0`.
pub fn estimate_class_constant(
    f: &FunctionModel,
    zeta: f64,
    alpha1: f64,
    alpha2: f64,
    points: usize,
) -> f64 {
    let grid = uniform_grid(points.max(3));
    let values: Vec<f64> = grid.iter().map(|&v| f.eval(v)).collect();
    grid.par_iter()
        .zip(values.par_iter())
        .skip(1)
        .map(|(&x, &fx)| {
            let mut best: f64 = 0.0;
            for (&t, &ft) in grid.iter().zip(&values) {
                if t == x {
                    continue;
                }
                let w = (t + alpha1 * x * x + alpha2 * x).powf(zeta / 2.0);
                best = best.max((ft - fx).abs() * w / (t - x).abs().powf(zeta));
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

/// `M (μφ²(x) / ((n+2)(α₁x² + α₂x)))^{ζ/2}` against `|D^{M,2}_{n,μ}(f; x) - f(x)|`.
pub fn lip_bound(
    f: &FunctionModel,
    lip: &LipParams,
    params: &OperatorParams,
    x: f64,
) -> Result<BoundReport> {
    if !(x > 0.0 && x <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "x must lie in (0, 1], got {x}"
        )));
    }
    let eval = BezierDurrmeyer::new(f, params)?.eval(x)?;
    let lhs = (eval.value - f.eval(x)).abs();
    let n = params.n as f64;
    let base = params.mu() * phi(x).powi(2) / ((n + 2.0) * (lip.alpha1 * x * x + lip.alpha2 * x));
    let rhs = lip.m_constant * base.powf(lip.zeta / 2.0);
    let mut report = BoundReport::new(f.name(), params, Some(x), "lip", lhs, rhs);
    if eval.negative_base {
        report.flags.push("negative_base".into());
    }
    if !report.holds() {
        report.flags.push("violation".into());
    }
    Ok(report)
}

/// Reading of the first term of the bounded-variation estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BvVariant {
    /// First term scaled by `μφ²(x)/(n+2)`.
    Statement,
    /// First term scaled by `φ(x)/√(n+2)`.
    Proof,
}

impl BvVariant {
    pub fn name(self) -> &'static str {
        match self {
            Self::Statement => "statement",
            Self::Proof => "proof",
        }
    }
}

impl fmt::Display for BvVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The five groups of the bounded-variation right-hand side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BvTerms {
    pub jump: f64,
    pub left_sum: f64,
    pub left_tail: f64,
    pub right_sum: f64,
    pub right_tail: f64,
}

impl BvTerms {
    pub fn total(&self) -> f64 {
        self.jump + self.left_sum + self.left_tail + self.right_sum + self.right_tail
    }
}

pub fn bv_terms(
    model: &FunctionModel,
    params: &OperatorParams,
    x: f64,
    variant: BvVariant,
) -> Result<BvTerms> {
    model.require_structure()?;
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "x must lie in (0, 1), got {x}"
        )));
    }
    let n = params.n;
    let nf = n as f64;
    let mu = params.mu();
    let phi2 = x * (1.0 - x);
    let (left, right) = one_sided_derivatives(model, x)?;
    let bracket = (right + mu * left).abs() / (mu + 1.0) + (right - left).abs();
    let jump = match variant {
        BvVariant::Statement => bracket * mu * phi2 / (nf + 2.0),
        BvVariant::Proof => bracket * phi2.sqrt() / (nf + 2.0).sqrt(),
    };
    let s = (n as f64).sqrt().floor() as usize;
    let mut left_acc = 0.0;
    let mut right_acc = 0.0;
    for k in 1..=s {
        let kf = k as f64;
        left_acc += tv_fx(model, x, x - x / kf, x)?;
        right_acc += tv_fx(model, x, x, x + (1.0 - x) / kf)?;
    }
    let scale = mu / (nf + 2.0);
    let root = nf.sqrt();
    Ok(BvTerms {
        jump,
        left_sum: scale * phi2 / (x * x) * left_acc,
        left_tail: x / root * tv_fx(model, x, x - x / root, x)?,
        right_sum: scale * phi2 / (1.0 - x) * right_acc,
        right_tail: (1.0 - x) / root * tv_fx(model, x, x, x + (1.0 - x) / root)?,
    })
}

/// Bounded-variation estimate at `x` against the measured pointwise error.
pub fn bv_rhs(
    model: &FunctionModel,
    params: &OperatorParams,
    x: f64,
    variant: BvVariant,
) -> Result<BoundReport> {
    let rhs = bv_terms(model, params, x, variant)?.total();
    let eval = BezierDurrmeyer::new(model, params)?.eval(x)?;
    let lhs = (eval.value - model.eval(x)).abs();
    let mut report = BoundReport::new(model.name(), params, Some(x), variant.name(), lhs, rhs);
    if eval.negative_base {
        report.flags.push("negative_base".into());
    }
    if !report.holds() {
        report.flags.push("violation".into());
    }
    Ok(report)
}

/// Tail estimate of the cumulative kernel at `y ≠ x`: returns the measured
/// tail (`κ(x,y)` for `y < x`, `1 - κ(x,y)` for `y > x`) and
/// `Cμx(1-x)/(n(x-y)²)`. `None` when `y == x`.
pub fn kappa_tail(params: &OperatorParams, x: f64, y: f64, c: f64) -> Result<Option<(f64, f64)>> {
    if y == x {
        return Ok(None);
    }
    let k = kappa(params, x, y)?;
    let bound = c * params.mu() * x * (1.0 - x) / (params.n as f64 * (x - y).powi(2));
    let measured = if y < x { k } else { 1.0 - k };
    Ok(Some((measured, bound)))
}

/// Least-squares line through `(ln n, ln error)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn fit_rate(pairs: &[(usize, f64)]) -> Result<RateFit> {
    let kept: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|&&(n, e)| {
            let ok = e > 0.0 && e.is_finite();
            if !ok {
                log::warn!("dropping n={n} with error {e} from the rate fit");
            }
            ok
        })
        .map(|&(n, e)| ((n as f64).ln(), e.ln()))
        .collect();
    if kept.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: kept.len(),
        });
    }
    let m = kept.len() as f64;
    let mx = kept.iter().map(|p| p.0).sum::<f64>() / m;
    let my = kept.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = kept.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = kept.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = kept.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter(
            "rate fit needs at least two distinct n".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Ok(RateFit {
        slope,
        intercept,
        r2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactness::{int, ratio};
    use crate::functions::{abs_half, builtin_corpus, sqrt, two_kink};
    use proptest::prelude::*;

    #[test]
    fn sup_error_examples() {
        let params = OperatorParams::with_mu(10, 1.0).unwrap();
        assert!(sup_error(&FunctionModel::monomial(1), &params, DEFAULT_GRID).unwrap() <= 1e-11);
        let e2 = sup_error(&FunctionModel::monomial(2), &params, DEFAULT_GRID).unwrap();
        assert!((e2 - 3.0 / 156.0).abs() < 1e-12);
        for mu in [1.0, 2.0, 3.5] {
            let params = OperatorParams::with_mu(17, mu).unwrap();
            assert!(
                sup_error(&FunctionModel::constant(int(5)), &params, DEFAULT_GRID).unwrap()
                    <= 1e-12
            );
        }
        assert!(sup_error(&FunctionModel::monomial(1), &params, 2).is_err());
    }

    #[test]
    fn e2_error_is_exact_second_moment() {
        for n in [10, 50, 100] {
            let params = OperatorParams::with_mu(n, 1.0).unwrap();
            let e = sup_error(&FunctionModel::monomial(2), &params, DEFAULT_GRID).unwrap();
            let expected = 3.0 / ((n + 2) * (n + 3)) as f64;
            assert!((e - expected).abs() < 1e-10, "n={n}");
        }
    }

    #[test]
    fn modulus_examples() {
        assert_eq!(
            dt_modulus(&FunctionModel::constant(ratio(3, 2)), 0.3, 64, 201),
            0.0
        );
        for t in [0.05, 0.2, 1.0] {
            let w = dt_modulus(
                &FunctionModel::monomial(1),
                t,
                DEFAULT_H_SAMPLES,
                DEFAULT_X_SAMPLES,
            );
            assert!((w - t / 2.0).abs() < 1e-3, "t={t}");
        }
    }

    #[test]
    fn modulus_of_abs_half_matches_closed_form() {
        // |f(x+d) - f(x-d)| ≤ 2d with d = hφ/2 ≤ h/4, attained at x = 1/2
        let t = 0.1;
        let w = dt_modulus(&abs_half(), t, DEFAULT_H_SAMPLES, DEFAULT_X_SAMPLES);
        assert!((w - t / 2.0).abs() < 1e-3);
    }

    #[test]
    fn modulus_is_monotone_in_t() {
        for f in builtin_corpus() {
            let ts = [0.01, 0.03, 0.1, 0.3, 1.0];
            let ws: Vec<f64> = ts.iter().map(|&t| dt_modulus(&f, t, 64, 401)).collect();
            for w in ws.windows(2) {
                assert!(w[0] <= w[1] + 1e-12, "{}", f.name());
            }
        }
    }

    #[test]
    fn modulus_is_subadditive() {
        let (f, g) = (abs_half(), two_kink());
        let h = FunctionModel::linear_combination(1.0, &f, 1.0, &g);
        for t in [0.05, 0.5] {
            let lhs = dt_modulus(&h, t, 64, 401);
            let rhs = dt_modulus(&f, t, 64, 401) + dt_modulus(&g, t, 64, 401);
            assert!(lhs <= rhs + 1e-9);
        }
    }

    #[test]
    fn direct_constants() {
        let rows = direct_bound_constant(&FunctionModel::monomial(1), 1.0, &[8, 16]).unwrap();
        assert!(rows.iter().all(|r| r.empirical_c < 1e-9));
        let rows = direct_bound_constant(&FunctionModel::monomial(2), 1.0, &[16, 64, 256]).unwrap();
        assert_eq!(
            rows.iter().map(|r| r.n).collect::<Vec<_>>(),
            vec![16, 64, 256]
        );
        assert!(rows.windows(2).all(|w| w[1].empirical_c < w[0].empirical_c));
        let rows = direct_bound_constant(&abs_half(), 1.0, &[16, 32, 64]).unwrap();
        let cs: Vec<f64> = rows.iter().map(|r| r.empirical_c).collect();
        assert!(spread(&cs) < 10.0);
    }

    #[test]
    fn spread_handles_degenerate_sequences() {
        assert_eq!(spread(&[1.0, 4.0, 2.0]), 4.0);
        assert_eq!(spread(&[1.0, 0.0]), f64::INFINITY);
        assert_eq!(spread(&[1.0, f64::INFINITY]), f64::INFINITY);
    }

    #[test]
    fn lip_examples() {
        let lip = LipParams::new(1.0, 0.0, 1.0, 1.0).unwrap();
        let params = OperatorParams::with_mu(30, 1.0).unwrap();
        let r = lip_bound(&FunctionModel::monomial(1), &lip, &params, 0.4).unwrap();
        assert!(r.lhs < 1e-12 && r.holds());

        let f = sqrt();
        let m = estimate_class_constant(&f, 0.5, 0.0, 1.0, 401);
        assert!((m - 1.0).abs() < 1e-9, "{m}");
        let lip = LipParams::new(0.5, 0.0, 1.0, m).unwrap();
        let params = OperatorParams::with_mu(100, 1.0).unwrap();
        let r = lip_bound(&f, &lip, &params, 0.25).unwrap();
        assert!(r.holds(), "{r:?}");
        assert!(LipParams::new(0.0, 0.0, 1.0, 1.0).is_err());
        assert!(LipParams::new(0.5, 0.0, 0.0, 1.0).is_err());
        assert!(lip_bound(&f, &lip, &params, 0.0).is_err());
    }

    #[test]
    fn lip_rhs_scales_with_n() {
        let lip = LipParams::new(0.5, 0.3, 1.0, 1.0).unwrap();
        let f = FunctionModel::monomial(1);
        for n in [1000, 4000] {
            let a = lip_bound(&f, &lip, &OperatorParams::with_mu(n, 1.5).unwrap(), 0.3)
                .unwrap()
                .rhs;
            let b = lip_bound(&f, &lip, &OperatorParams::with_mu(4 * n, 1.5).unwrap(), 0.3)
                .unwrap()
                .rhs;
            assert!((a / b / 2f64.powf(0.5) - 1.0).abs() < 0.02);
        }
    }

    #[test]
    fn bv_hand_value() {
        let params = OperatorParams::with_mu(100, 1.0).unwrap();
        let t = bv_terms(&abs_half(), &params, 0.5, BvVariant::Proof).unwrap();
        assert_eq!(
            (t.left_sum, t.left_tail, t.right_sum, t.right_tail),
            (0.0, 0.0, 0.0, 0.0)
        );
        assert!((t.total() - 2.0 * 0.5 / 102f64.sqrt()).abs() < 1e-12);
        let s = bv_terms(&abs_half(), &params, 0.5, BvVariant::Statement).unwrap();
        assert!((s.total() - 2.0 * 0.25 / 102.0).abs() < 1e-12);
        let r = bv_rhs(&abs_half(), &params, 0.5, BvVariant::Proof).unwrap();
        assert!(r.holds());
        assert!(bv_rhs(&sqrt(), &params, 0.5, BvVariant::Proof).is_err());
    }

    #[test]
    fn bv_terms_for_quadratic() {
        // (f')_x on [x - x/k, x] has variation 2x/k for f = t²
        let params = OperatorParams::with_mu(49, 2.0).unwrap();
        let x = 0.5;
        let t = bv_terms(&FunctionModel::monomial(2), &params, x, BvVariant::Proof).unwrap();
        let harmonic: f64 = (1..=7).map(|k| 1.0 / k as f64).sum();
        let expected_left = 2.0 / 51.0 * 0.25 / 0.25 * 2.0 * x * harmonic;
        assert!((t.left_sum - expected_left).abs() < 1e-12);
        assert!((t.left_tail - x / 7.0 * 2.0 * x / 7.0).abs() < 1e-12);
        // f'(x+) = f'(x-) = 1, so only the averaged term survives
        assert!((t.jump - 0.5 / 51f64.sqrt()).abs() < 1e-15);
        assert!(t.total() > 0.0 && t.total().is_finite());
    }

    #[test]
    fn bv_rhs_decreases_along_squares() {
        for f in builtin_corpus()
            .into_iter()
            .filter(|f| f.structure().is_some())
        {
            for x in [0.3, 0.5, 0.8] {
                for variant in [BvVariant::Statement, BvVariant::Proof] {
                    let vals: Vec<f64> = (2..=20)
                        .map(|m| {
                            bv_terms(
                                &f,
                                &OperatorParams::with_mu(m * m, 2.0).unwrap(),
                                x,
                                variant,
                            )
                            .unwrap()
                            .total()
                        })
                        .collect();
                    assert!(vals.iter().all(|v| *v >= 0.0));
                    for w in vals.windows(2) {
                        assert!(w[1] <= w[0] + 1e-15, "{} x={x} {variant}", f.name());
                    }
                }
            }
        }
    }

    #[test]
    fn kappa_tail_examples() {
        let params = OperatorParams::with_mu(100, 2.0).unwrap();
        for y in [0.0, 0.1, 0.25, 0.4] {
            let (m, b) = kappa_tail(&params, 0.5, y, TAIL_CONSTANT).unwrap().unwrap();
            assert!(m <= b, "y={y}");
        }
        assert!(kappa_tail(&params, 0.5, 0.5, TAIL_CONSTANT)
            .unwrap()
            .is_none());
    }

    #[test]
    fn fit_rate_examples() {
        let exact: Vec<(usize, f64)> = [16usize, 32, 64, 128]
            .iter()
            .map(|&n| (n, (n as f64).powi(-2)))
            .collect();
        let fit = fit_rate(&exact).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-9);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        let mut noisy = exact.clone();
        noisy.push((256, 0.0));
        assert!((fit_rate(&noisy).unwrap().slope + 2.0).abs() < 1e-9);
        assert!(matches!(
            fit_rate(&exact[..2]),
            Err(Error::TooFewPoints { needed: 3, got: 2 })
        ));
        let zeros = [(8, 0.0), (16, -1.0), (32, 1e-3), (64, 1e-4)];
        assert!(matches!(fit_rate(&zeros), Err(Error::TooFewPoints { .. })));
    }

    #[test]
    fn e2_rate_matches_exact_errors() {
        let ns = [16usize, 32, 64, 128, 256];
        let measured: Vec<(usize, f64)> = ns
            .iter()
            .map(|&n| {
                (
                    n,
                    sup_error(
                        &FunctionModel::monomial(2),
                        &OperatorParams::with_mu(n, 1.0).unwrap(),
                        DEFAULT_GRID,
                    )
                    .unwrap(),
                )
            })
            .collect();
        let exact: Vec<(usize, f64)> = ns
            .iter()
            .map(|&n| (n, 3.0 / ((n + 2) * (n + 3)) as f64))
            .collect();
        let a = fit_rate(&measured).unwrap();
        let b = fit_rate(&exact).unwrap();
        assert!((a.slope - b.slope).abs() < 1e-8);
        // the (n+2)(n+3) offset keeps the fitted slope short of -2 at these n
        assert!((a.slope + 1.9059411).abs() < 1e-6, "{}", a.slope);
    }

    #[test]
    fn csv_layout() {
        let params = OperatorParams::with_mu(10, 1.0).unwrap();
        let mut r = BoundReport::new("abs-half", &params, None, "direct", 0.5, 0.25);
        r.flags.push("violation".into());
        let mut buf = Vec::new();
        write_bound_reports(&mut buf, &[r]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "function,n,mu,x,variant,lhs,rhs,slack,flags"
        );
        assert_eq!(
            lines.next().unwrap(),
            "abs-half,10,1.0000000000000000e0,SUP,direct,5.0000000000000000e-1,2.5000000000000000e-1,-2.5000000000000000e-1,violation"
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn modulus_is_nonnegative_and_scales(c in -3.0f64..3.0, t in 0.01f64..1.0) {
            let f = abs_half();
            let w = dt_modulus(&f, t, 32, 201);
            let scaled = FunctionModel::linear_combination(c, &f, 0.0, &f);
            prop_assert!(w >= 0.0);
            prop_assert!((dt_modulus(&scaled, t, 32, 201) - c.abs() * w).abs() < 1e-12);
        }

        #[test]
        fn bv_terms_are_nonnegative(x in 0.05f64..0.95, m in 2usize..15, mu in 1.0f64..4.0) {
            let params = OperatorParams::with_mu(m * m, mu).unwrap();
            for f in [abs_half(), two_kink()] {
                for v in [BvVariant::Statement, BvVariant::Proof] {
                    let t = bv_terms(&f, &params, x, v).unwrap();
                    prop_assert!(t.jump >= 0.0 && t.left_sum >= 0.0 && t.right_sum >= 0.0);
                    prop_assert!(t.left_tail >= 0.0 && t.right_tail >= 0.0);
                }
            }
        }
    }
}
