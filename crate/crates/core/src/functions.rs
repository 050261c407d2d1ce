//! Test functions: piecewise-polynomial models with exact structure, one-sided
//! derivatives and total-variation oracles for the derivative, plus
//! evaluator-only power functions.
//!
//! Piecewise models are right-continuous: piece `i` covers
//! `[b_i, b_{i+1})` and the last piece also owns `x = 1`. The pointwise
//! derivative at a breakpoint is the right limit (the left limit at `x = 1`).

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::exactness::{int, ratio, Rational, RationalPolynomial};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SmoothnessTag {
    Smooth,
    Lipschitz,
    BvDerivative,
    BoundedOnly,
}

impl fmt::Display for SmoothnessTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Smooth => "smooth",
            Self::Lipschitz => "lipschitz",
            Self::BvDerivative => "bv-derivative",
            Self::BoundedOnly => "bounded-only",
        })
    }
}

/// Which one-sided limit to take at a point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Piecewise polynomial on `[0, 1]` with exact rational breakpoints and pieces.
#[derive(Clone, Debug)]
pub struct PiecewisePoly {
    breakpoints: Vec<Rational>,
    pieces: Vec<RationalPolynomial>,
    knots: Vec<f64>,
    values: Vec<Vec<f64>>,
    slopes: Vec<Vec<f64>>,
    curvatures: Vec<Vec<f64>>,
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

fn derivative_coeffs(c: &[f64]) -> Vec<f64> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(i, &a)| i as f64 * a)
        .collect()
}

impl PiecewisePoly {
    /// `breakpoints` must start at 0, end at 1 and increase strictly, with one
    /// piece per interval. Continuity is not required.
    pub fn new(breakpoints: Vec<Rational>, pieces: Vec<RationalPolynomial>) -> Result<Self> {
        if breakpoints.len() < 2 || pieces.len() + 1 != breakpoints.len() {
            return Err(Error::InvalidParameter(format!(
                "{} breakpoints cannot delimit {} pieces",
                breakpoints.len(),
                pieces.len()
            )));
        }
        if !breakpoints[0].is_zero() || !breakpoints[breakpoints.len() - 1].is_one() {
            return Err(Error::InvalidParameter(
                "breakpoints must start at 0 and end at 1".into(),
            ));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        let knots = breakpoints
            .iter()
            .map(|b| b.to_f64().unwrap_or(f64::NAN))
            .collect();
        let values: Vec<Vec<f64>> = pieces
            .iter()
            .map(RationalPolynomial::to_f64_coeffs)
            .collect();
        let slopes: Vec<Vec<f64>> = pieces
            .iter()
            .map(|p| p.derivative().to_f64_coeffs())
            .collect();
        let curvatures = slopes.iter().map(|s| derivative_coeffs(s)).collect();
        Ok(Self {
            breakpoints,
            pieces,
            knots,
            values,
            slopes,
            curvatures,
        })
    }

    pub fn single(p: RationalPolynomial) -> Self {
        Self::new(vec![int(0), int(1)], vec![p]).expect("single piece on [0,1] is valid")
    }

    pub fn breakpoints(&self) -> &[Rational] {
        &self.breakpoints
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn pieces(&self) -> &[RationalPolynomial] {
        &self.pieces
    }

    pub fn max_degree(&self) -> usize {
        self.pieces
            .iter()
            .filter_map(RationalPolynomial::degree)
            .max()
            .unwrap_or(0)
    }

    /// Piece whose interval contains `x` from the given side.
    fn piece_at(&self, x: f64, side: Side) -> usize {
        let last = self.pieces.len() - 1;
        let inner = &self.knots[1..self.knots.len() - 1];
        let idx = match side {
            Side::Right => inner.iter().take_while(|&&b| b <= x).count(),
            Side::Left => inner.iter().take_while(|&&b| b < x).count(),
        };
        idx.min(last)
    }

    pub fn eval(&self, x: f64) -> f64 {
        horner(&self.values[self.piece_at(x, Side::Right)], x)
    }

    /// Exact value with the same right-continuous convention.
    pub fn eval_exact(&self, x: &Rational) -> Rational {
        let inner = &self.breakpoints[1..self.breakpoints.len() - 1];
        let idx = inner.iter().take_while(|b| *b <= x).count();
        self.pieces[idx].eval(x)
    }

    pub fn derivative(&self, x: f64, side: Side) -> f64 {
        horner(&self.slopes[self.piece_at(x, side)], x)
    }

    /// Pointwise derivative: right limit, left limit at `x = 1`.
    pub fn derivative_pointwise(&self, x: f64) -> f64 {
        self.derivative(x, pointwise_side(x))
    }

    fn is_interior_knot(&self, x: f64) -> bool {
        self.knots[1..self.knots.len() - 1].contains(&x)
    }

    fn derivative_jump(&self, x: f64) -> f64 {
        (self.derivative(x, Side::Right) - self.derivative(x, Side::Left)).abs()
    }

    /// Variation of `f'` over `[lo, hi]` inside piece `i`, segmenting at the
    /// real roots of `f''`.
    fn piece_variation(&self, i: usize, lo: f64, hi: f64) -> f64 {
        let slope = &self.slopes[i];
        let mut cuts = vec![lo];
        cuts.extend(real_roots_in(&self.curvatures[i], lo, hi));
        cuts.push(hi);
        cuts.windows(2)
            .map(|w| (horner(slope, w[1]) - horner(slope, w[0])).abs())
            .sum()
    }

    /// Variation of `f'` on `[a, b]` where the endpoint values are the
    /// `a_side`/`b_side` limits.
    pub fn derivative_variation(&self, a: f64, b: f64, a_side: Side, b_side: Side) -> f64 {
        if a >= b {
            return 0.0;
        }
        let mut total = 0.0;
        for i in 0..self.pieces.len() {
            let lo = a.max(self.knots[i]);
            let hi = b.min(self.knots[i + 1]);
            if lo < hi {
                total += self.piece_variation(i, lo, hi);
            }
        }
        for &k in &self.knots[1..self.knots.len() - 1] {
            if k > a && k < b {
                total += self.derivative_jump(k);
            }
        }
        if b_side == Side::Right && self.is_interior_knot(b) {
            total += self.derivative_jump(b);
        }
        if a_side == Side::Left && self.is_interior_knot(a) {
            total += self.derivative_jump(a);
        }
        total
    }

    /// `α·self + β·other` over the merged breakpoints.
    pub fn combine(&self, alpha: &Rational, other: &Self, beta: &Rational) -> Self {
        let mut bps: Vec<Rational> = self
            .breakpoints
            .iter()
            .chain(&other.breakpoints)
            .cloned()
            .collect();
        bps.sort();
        bps.dedup();
        let locate = |pp: &Self, mid: &Rational| {
            let inner = &pp.breakpoints[1..pp.breakpoints.len() - 1];
            inner.iter().take_while(|b| *b <= mid).count()
        };
        let pieces = bps
            .windows(2)
            .map(|w| {
                let mid = (&w[0] + &w[1]) / int(2);
                let a = self.pieces[locate(self, &mid)].scale(alpha);
                let b = other.pieces[locate(other, &mid)].scale(beta);
                &a + &b
            })
            .collect();
        Self::new(bps, pieces).expect("merged breakpoints stay valid")
    }

    fn infer_tag(&self) -> SmoothnessTag {
        let mut tag = SmoothnessTag::Smooth;
        for (i, b) in self.breakpoints[1..self.breakpoints.len() - 1]
            .iter()
            .enumerate()
        {
            let left = &self.pieces[i];
            let right = &self.pieces[i + 1];
            if left.eval(b) != right.eval(b) {
                return SmoothnessTag::BoundedOnly;
            }
            if left.derivative().eval(b) != right.derivative().eval(b) {
                tag = SmoothnessTag::BvDerivative;
            }
        }
        tag
    }
}

fn pointwise_side(x: f64) -> Side {
    if x >= 1.0 {
        Side::Left
    } else {
        Side::Right
    }
}

/// Real roots of the polynomial `c` (ascending, f64) strictly inside `(lo, hi)`.
/// Roots of the derivative split the interval into monotone runs, each of
/// which holds at most one root.
pub(crate) fn real_roots_in(c: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let mut c = c.to_vec();
    while c.last() == Some(&0.0) {
        c.pop();
    }
    if c.len() <= 1 {
        return Vec::new();
    }
    if c.len() == 2 {
        let r = -c[0] / c[1];
        return if r > lo && r < hi {
            vec![r]
        } else {
            Vec::new()
        };
    }
    let crit = real_roots_in(&derivative_coeffs(&c), lo, hi);
    let mut marks = vec![lo];
    marks.extend(&crit);
    marks.push(hi);
    let mut roots = Vec::new();
    for w in marks.windows(2) {
        let (mut a, mut b) = (w[0], w[1]);
        let (fa, fb) = (horner(&c, a), horner(&c, b));
        if fa == 0.0 && a > lo {
            roots.push(a);
            continue;
        }
        if fa * fb >= 0.0 {
            continue;
        }
        let mut sa = fa.signum();
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            let fm = horner(&c, m);
            if fm == 0.0 {
                a = m;
                b = m;
                break;
            }
            if fm.signum() == sa {
                a = m;
                sa = fm.signum();
            } else {
                b = m;
            }
        }
        roots.push(0.5 * (a + b));
    }
    roots.dedup();
    roots
}

type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Evaluable function on `[0, 1]` with optional exact piecewise structure.
#[derive(Clone)]
pub struct FunctionModel {
    name: String,
    tag: SmoothnessTag,
    evaluator: Evaluator,
    structure: Option<Arc<PiecewisePoly>>,
}

impl fmt::Debug for FunctionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionModel")
            .field("name", &self.name)
            .field("tag", &self.tag)
            .field("structured", &self.structure.is_some())
            .finish()
    }
}

impl FunctionModel {
    pub fn piecewise(name: impl Into<String>, tag: SmoothnessTag, pp: PiecewisePoly) -> Self {
        let pp = Arc::new(pp);
        let eval_pp = pp.clone();
        Self {
            name: name.into(),
            tag,
            evaluator: Arc::new(move |x| eval_pp.eval(x)),
            structure: Some(pp),
        }
    }

    pub fn evaluator_only(
        name: impl Into<String>,
        tag: SmoothnessTag,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            tag,
            evaluator: Arc::new(f),
            structure: None,
        }
    }

    /// `x^m` as a single-piece model.
    pub fn monomial(m: usize) -> Self {
        let pp = PiecewisePoly::single(RationalPolynomial::monomial(Rational::one(), m));
        Self::piecewise(format!("e{m}"), SmoothnessTag::Smooth, pp)
    }

    pub fn constant(c: Rational) -> Self {
        let name = format!("const@{c}");
        Self::piecewise(
            name,
            SmoothnessTag::Smooth,
            PiecewisePoly::single(RationalPolynomial::constant(c)),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn tag(&self) -> SmoothnessTag {
        self.tag
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.evaluator)(x)
    }

    pub fn structure(&self) -> Option<&PiecewisePoly> {
        self.structure.as_deref()
    }

    pub fn require_structure(&self) -> Result<&PiecewisePoly> {
        self.structure()
            .ok_or_else(|| Error::MissingStructure(self.name.clone()))
    }

    /// Max of `|f|` over a uniform grid including the endpoints.
    pub fn grid_sup_norm(&self, points: usize) -> f64 {
        (0..points)
            .map(|i| self.eval(i as f64 / (points - 1).max(1) as f64).abs())
            .fold(0.0, f64::max)
    }

    /// `α f + β g`; structured when both inputs are.
    pub fn linear_combination(alpha: f64, f: &Self, beta: f64, g: &Self) -> Self {
        let name = format!("{alpha}*{}+{beta}*{}", f.name, g.name);
        if let (Some(a), Some(b), Some(ar), Some(br)) = (
            f.structure(),
            g.structure(),
            Rational::from_float(alpha),
            Rational::from_float(beta),
        ) {
            let pp = a.combine(&ar, b, &br);
            let tag = pp.infer_tag();
            return Self::piecewise(name, tag, pp);
        }
        let (f, g) = (f.clone(), g.clone());
        Self::evaluator_only(name, SmoothnessTag::BoundedOnly, move |x| {
            alpha * f.eval(x) + beta * g.eval(x)
        })
    }
}

/// `(f'(x-), f'(x+))` from the adjacent pieces.
pub fn one_sided_derivatives(model: &FunctionModel, x: f64) -> Result<(f64, f64)> {
    let pp = model.require_structure()?;
    Ok((pp.derivative(x, Side::Left), pp.derivative(x, Side::Right)))
}

fn check_interval(a: f64, b: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || a > b {
        return Err(Error::InvalidRange(format!(
            "[{a}, {b}] is not a subinterval of [0, 1]"
        )));
    }
    Ok(())
}

/// Total variation of `f'` on `[a, b]`.
pub fn tv_derivative(model: &FunctionModel, a: f64, b: f64) -> Result<f64> {
    let pp = model.require_structure()?;
    check_interval(a, b)?;
    Ok(pp.derivative_variation(a, b, pointwise_side(a), pointwise_side(b)))
}

/// `(f')_x(t)`: `f'(t) - f'(x-)` for `t < x`, `0` at `x`, `f'(t) - f'(x+)` for `t > x`.
pub fn recentered_derivative(pp: &PiecewisePoly, x: f64, t: f64) -> f64 {
    if t < x {
        pp.derivative_pointwise(t) - pp.derivative(x, Side::Left)
    } else if t > x {
        pp.derivative_pointwise(t) - pp.derivative(x, Side::Right)
    } else {
        0.0
    }
}

/// Total variation of `(f')_x` on `[a, b]`.
///
/// `(f')_x` tends to 0 from both sides of `x` and equals 0 there, so the
/// variation splits into the variation of `f'` on `[a, x)` (left limit at
/// `x`) and on `(x, b]` (right limit at `x`).
pub fn tv_fx(model: &FunctionModel, x: f64, a: f64, b: f64) -> Result<f64> {
    let pp = model.require_structure()?;
    check_interval(a, b)?;
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "x = {x} must lie in (0, 1)"
        )));
    }
    let left = if a < x {
        pp.derivative_variation(
            a,
            b.min(x),
            pointwise_side(a),
            if b < x { pointwise_side(b) } else { Side::Left },
        )
    } else {
        0.0
    };
    let right = if b > x {
        pp.derivative_variation(
            a.max(x),
            b,
            if a > x {
                pointwise_side(a)
            } else {
                Side::Right
            },
            pointwise_side(b),
        )
    } else {
        0.0
    };
    Ok(left + right)
}

fn piecewise_from(bps: &[Rational], pieces: Vec<RationalPolynomial>) -> PiecewisePoly {
    PiecewisePoly::new(bps.to_vec(), pieces).expect("builtin piecewise definitions are valid")
}

/// `|x - 1/2|`.
pub fn abs_half() -> FunctionModel {
    let pp = piecewise_from(
        &[int(0), ratio(1, 2), int(1)],
        vec![
            RationalPolynomial::from_coeffs(vec![ratio(1, 2), int(-1)]),
            RationalPolynomial::from_coeffs(vec![ratio(-1, 2), int(1)]),
        ],
    );
    FunctionModel::piecewise("abs-half", SmoothnessTag::BvDerivative, pp)
}

/// Hat with value 1 at `peak` and 0 at both endpoints.
pub fn hat(peak: Rational, label: &str) -> Result<FunctionModel> {
    if !peak.is_positive() || peak >= int(1) {
        return Err(Error::InvalidParameter(format!(
            "hat peak {peak} must lie in (0, 1)"
        )));
    }
    let left = RationalPolynomial::from_coeffs(vec![int(0), Rational::one() / &peak]);
    let s = Rational::one() / (int(1) - &peak);
    let right = RationalPolynomial::from_coeffs(vec![s.clone(), -s]);
    let pp = piecewise_from(&[int(0), peak, int(1)], vec![left, right]);
    Ok(FunctionModel::piecewise(
        format!("hat@{label}"),
        SmoothnessTag::BvDerivative,
        pp,
    ))
}

/// Continuous piecewise quadratic with derivative kinks at 1/3 and 2/3:
/// `x²`, then `1/9 + (x-1/3) - 2(x-1/3)²`, then `2/9 + (x-2/3)/2 + (x-2/3)²`.
pub fn two_kink() -> FunctionModel {
    let shift = |c: Rational| RationalPolynomial::from_coeffs(vec![-c, int(1)]);
    let s1 = shift(ratio(1, 3));
    let s2 = shift(ratio(2, 3));
    let p1 = RationalPolynomial::monomial(int(1), 2);
    let p2 = &(&RationalPolynomial::constant(ratio(1, 9)) + &s1) + &s1.pow(2).scale(&int(-2));
    let p3 = &(&RationalPolynomial::constant(ratio(2, 9)) + &s2.scale(&ratio(1, 2))) + &s2.pow(2);
    let pp = piecewise_from(
        &[int(0), ratio(1, 3), ratio(2, 3), int(1)],
        vec![p1, p2, p3],
    );
    FunctionModel::piecewise("two-kink", SmoothnessTag::BvDerivative, pp)
}

/// `(x - c)_+`: derivative steps from 0 to 1 at `c`.
pub fn step_derivative(c: Rational, label: &str) -> Result<FunctionModel> {
    if !c.is_positive() || c >= int(1) {
        return Err(Error::InvalidParameter(format!(
            "jump location {c} must lie in (0, 1)"
        )));
    }
    let right = RationalPolynomial::from_coeffs(vec![-c.clone(), int(1)]);
    let pp = piecewise_from(
        &[int(0), c, int(1)],
        vec![RationalPolynomial::zero(), right],
    );
    Ok(FunctionModel::piecewise(
        format!("step-deriv@{label}"),
        SmoothnessTag::BvDerivative,
        pp,
    ))
}

/// `t^ζ` without structure.
pub fn power(zeta: f64, label: &str) -> Result<FunctionModel> {
    if !(zeta > 0.0 && zeta <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "power exponent {zeta} must lie in (0, 1]"
        )));
    }
    Ok(FunctionModel::evaluator_only(
        format!("power@{label}"),
        SmoothnessTag::Lipschitz,
        move |t| t.max(0.0).powf(zeta),
    ))
}

pub fn sqrt() -> FunctionModel {
    FunctionModel::evaluator_only("sqrt", SmoothnessTag::Lipschitz, |t| t.max(0.0).sqrt())
}

/// The standard corpus used by the tests, the acceptance suite and the CLI.
pub fn builtin_corpus() -> Vec<FunctionModel> {
    let mut out: Vec<FunctionModel> = (0..=4).map(FunctionModel::monomial).collect();
    out.push(abs_half());
    out.push(hat(ratio(2, 5), "0.4").expect("valid peak"));
    out.push(two_kink());
    out.push(sqrt());
    out.push(power(1.0, "1").expect("valid exponent"));
    out.push(step_derivative(ratio(1, 3), "1/3").expect("valid jump"));
    out
}

/// Exact rational from `7`, `-3/4` or `0.125`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("`{s}` is not a rational number"));
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(Error::Parse(format!("`{s}` has a zero denominator")));
        }
        return Ok(Rational::new(num, den));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = whole.starts_with('-');
        let whole_digits = whole.trim_start_matches(['-', '+']);
        if !whole_digits.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let digits = format!("{whole_digits}{frac}");
        let num: BigInt = if digits.is_empty() {
            BigInt::zero()
        } else {
            digits.parse().map_err(|_| bad())?
        };
        let den = BigInt::from(10u32).pow(frac.len() as u32);
        let v = Rational::new(num, den);
        return Ok(if negative { -v } else { v });
    }
    let v: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(v))
}

/// Parses `3/2*x^2 - x + 1/2` style polynomials (see the CLI docs for the grammar).
pub fn parse_polynomial(s: &str) -> Result<RationalPolynomial> {
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let body = compact.strip_prefix("p(x)=").unwrap_or(&compact);
    if body.is_empty() {
        return Err(Error::Parse("empty polynomial".into()));
    }
    let mut terms = Vec::new();
    let mut start = 0;
    let bytes = body.as_bytes();
    for i in 1..bytes.len() {
        if (bytes[i] == b'+' || bytes[i] == b'-') && bytes[i - 1] != b'^' {
            terms.push(&body[start..i]);
            start = i;
        }
    }
    terms.push(&body[start..]);
    let mut out = RationalPolynomial::zero();
    for term in terms {
        out = &out + &parse_term(term)?;
    }
    Ok(out)
}

fn parse_term(term: &str) -> Result<RationalPolynomial> {
    let bad = || Error::Parse(format!("cannot parse polynomial term `{term}`"));
    let (sign, rest) = match term.as_bytes().first() {
        Some(b'-') => (int(-1), &term[1..]),
        Some(b'+') => (int(1), &term[1..]),
        _ => (int(1), term),
    };
    if rest.is_empty() {
        return Err(bad());
    }
    let (coeff_part, power_part) = match rest.find('x') {
        None => (rest, None),
        Some(pos) => (&rest[..pos], Some(&rest[pos + 1..])),
    };
    let coeff_part = coeff_part.strip_suffix('*').unwrap_or(coeff_part);
    let coeff = if coeff_part.is_empty() {
        if power_part.is_none() {
            return Err(bad());
        }
        int(1)
    } else {
        parse_rational(coeff_part).map_err(|_| bad())?
    };
    let degree = match power_part {
        None => 0,
        Some("") => 1,
        Some(p) => p
            .strip_prefix('^')
            .and_then(|d| d.parse::<usize>().ok())
            .ok_or_else(bad)?,
    };
    Ok(RationalPolynomial::monomial(sign * coeff, degree))
}

/// Parses `piecewise: 0, p(x)=..., 1/2, p(x)=..., 1`.
pub fn parse_piecewise(spec: &str) -> Result<FunctionModel> {
    let body = spec
        .trim()
        .strip_prefix("piecewise:")
        .ok_or_else(|| Error::Parse("piecewise spec must start with `piecewise:`".into()))?;
    let tokens: Vec<&str> = body.split(',').map(str::trim).collect();
    if tokens.len() < 3 || tokens.len().is_multiple_of(2) {
        return Err(Error::Parse("expected `b0, p(x)=..., b1, ..., 1`".into()));
    }
    let mut bps = Vec::new();
    let mut pieces = Vec::new();
    for (i, tok) in tokens.iter().enumerate() {
        if i % 2 == 0 {
            bps.push(parse_rational(tok)?);
        } else {
            if !tok.replace(' ', "").starts_with("p(x)=") {
                return Err(Error::Parse(format!(
                    "piece `{tok}` must be written `p(x)=...`"
                )));
            }
            pieces.push(parse_polynomial(tok)?);
        }
    }
    let pp = PiecewisePoly::new(bps, pieces)?;
    let tag = pp.infer_tag();
    Ok(FunctionModel::piecewise(spec.trim(), tag, pp))
}

/// Resolves a builtin name or inline `piecewise:` spec.
pub fn parse_function_spec(spec: &str) -> Result<FunctionModel> {
    let spec = spec.trim();
    if spec.starts_with("piecewise:") {
        return parse_piecewise(spec);
    }
    if let Some(m) = spec.strip_prefix('e').and_then(|d| d.parse::<usize>().ok()) {
        if m <= 16 {
            return Ok(FunctionModel::monomial(m));
        }
    }
    match spec {
        "abs-half" => return Ok(abs_half()),
        "two-kink" => return Ok(two_kink()),
        "sqrt" => return Ok(sqrt()),
        _ => {}
    }
    if let Some(arg) = spec.strip_prefix("hat@") {
        return hat(parse_rational(arg)?, arg);
    }
    if let Some(arg) = spec.strip_prefix("step-deriv@") {
        return step_derivative(parse_rational(arg)?, arg);
    }
    if let Some(arg) = spec.strip_prefix("power@") {
        let zeta = parse_rational(arg)?.to_f64().unwrap_or(f64::NAN);
        return power(zeta, arg);
    }
    if let Some(arg) = spec.strip_prefix("const@") {
        return Ok(FunctionModel::constant(parse_rational(arg)?));
    }
    Err(Error::Parse(format!(
        "unknown function `{spec}` (builtins: e0..e4, abs-half, hat@<r>, two-kink, step-deriv@<r>, sqrt, power@<r>, const@<r>, or piecewise:...)"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force variation of `(f')_x` over a uniform partition refined by
    /// the breakpoints and `x`.
    fn brute_tv_fx(pp: &PiecewisePoly, x: f64, a: f64, b: f64, points: usize) -> f64 {
        let mut ts: Vec<f64> = (0..=points)
            .map(|i| a + (b - a) * i as f64 / points as f64)
            .collect();
        // left limits at knots, to within 1e-13
        ts.extend(
            pp.knots()
                .iter()
                .copied()
                .filter(|&k| k > a && k < b)
                .flat_map(|k| [k - 1e-13, k]),
        );
        if x > a && x < b {
            ts.push(x);
        }
        ts.sort_by(|p, q| p.partial_cmp(q).unwrap());
        ts.windows(2)
            .map(|w| {
                (recentered_derivative(pp, x, w[1]) - recentered_derivative(pp, x, w[0])).abs()
            })
            .sum()
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(
            one_sided_derivatives(&abs_half(), 0.5).unwrap(),
            (-1.0, 1.0)
        );
        let (l, r) = one_sided_derivatives(&FunctionModel::monomial(2), 0.3).unwrap();
        assert!((l - 0.6).abs() < 1e-15 && (r - 0.6).abs() < 1e-15);
        let (l, r) = one_sided_derivatives(&hat(ratio(2, 5), "0.4").unwrap(), 0.4).unwrap();
        assert!((l - 2.5).abs() < 1e-14 && (r + 1.0 / 0.6).abs() < 1e-14);
        assert!(matches!(
            one_sided_derivatives(&sqrt(), 0.5),
            Err(Error::MissingStructure(_))
        ));
    }

    #[test]
    fn tv_derivative_examples() {
        assert!(
            (tv_derivative(&FunctionModel::monomial(2), 0.0, 1.0).unwrap() - 2.0).abs() < 1e-14
        );
        assert!((tv_derivative(&abs_half(), 0.0, 1.0).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(tv_derivative(&abs_half(), 0.0, 0.4).unwrap(), 0.0);
        assert!(tv_derivative(&abs_half(), 0.6, 0.4).is_err());
        assert!(tv_derivative(&sqrt(), 0.0, 1.0).is_err());
    }

    #[test]
    fn tv_derivative_counts_interior_extrema() {
        // f = x^3 - x^2/2 on one piece: f' = 3x² - x, turning point at 1/6
        let p = RationalPolynomial::from_coeffs(vec![int(0), int(0), ratio(-1, 2), int(1)]);
        let model =
            FunctionModel::piecewise("cubic", SmoothnessTag::Smooth, PiecewisePoly::single(p));
        let fp = |t: f64| 3.0 * t * t - t;
        let expected = (fp(1.0 / 6.0) - fp(0.0)).abs() + (fp(1.0) - fp(1.0 / 6.0)).abs();
        assert!((tv_derivative(&model, 0.0, 1.0).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn tv_fx_examples() {
        assert_eq!(tv_fx(&abs_half(), 0.5, 0.3, 0.5).unwrap(), 0.0);
        let v = tv_fx(&FunctionModel::monomial(2), 0.5, 0.25, 0.5).unwrap();
        assert!((v - 0.5).abs() < 1e-14);
        let pp = FunctionModel::monomial(2);
        let brute = brute_tv_fx(pp.structure().unwrap(), 0.5, 0.25, 0.5, 10_000);
        assert!((brute - v).abs() < 1e-6);
        for model in builtin_corpus() {
            if model.structure().is_some() {
                assert_eq!(tv_fx(&model, 0.4, 0.2, 0.2).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn tv_fx_matches_brute_force_partitions() {
        for model in builtin_corpus()
            .into_iter()
            .filter(|m| m.structure().is_some())
        {
            let pp = model.structure().unwrap();
            for x in [0.3, 0.5, 0.7] {
                for (a, b) in [
                    (0.0, 1.0),
                    (0.0, x),
                    (x, 1.0),
                    (0.1, 0.9),
                    (x - 0.25, x + 0.2),
                ] {
                    let exact = tv_fx(&model, x, a, b).unwrap();
                    let brute = brute_tv_fx(pp, x, a, b, 100_000);
                    assert!(
                        (exact - brute).abs() <= 1e-5,
                        "{} x={x} [{a},{b}]: {exact} vs {brute}",
                        model.name()
                    );
                }
            }
        }
    }

    #[test]
    fn tv_is_additive_at_breakpoints() {
        for model in builtin_corpus()
            .into_iter()
            .filter(|m| m.structure().is_some())
        {
            let pp = model.structure().unwrap();
            for &b in pp.knots() {
                let whole = tv_derivative(&model, 0.0, 1.0).unwrap();
                let split =
                    tv_derivative(&model, 0.0, b).unwrap() + tv_derivative(&model, b, 1.0).unwrap();
                assert!((whole - split).abs() <= 1e-12, "{} at {b}", model.name());
            }
        }
    }

    #[test]
    fn tv_fx_monotone_in_interval() {
        for model in builtin_corpus()
            .into_iter()
            .filter(|m| m.structure().is_some())
        {
            for x in [0.3, 0.5, 0.7] {
                let inner = tv_fx(&model, x, x - 0.1, x + 0.1).unwrap();
                let outer = tv_fx(&model, x, x - 0.2, x + 0.25).unwrap();
                assert!(outer >= inner - 1e-12);
            }
        }
    }

    #[test]
    fn corpus_contents() {
        let corpus = builtin_corpus();
        let e2 = corpus.iter().find(|m| m.name() == "e2").unwrap();
        assert!(e2.structure().is_some());
        assert_eq!(e2.tag(), SmoothnessTag::Smooth);
        let abs = corpus.iter().find(|m| m.name() == "abs-half").unwrap();
        assert_eq!(abs.tag(), SmoothnessTag::BvDerivative);
        for name in [
            "e0",
            "e1",
            "e3",
            "e4",
            "hat@0.4",
            "two-kink",
            "sqrt",
            "power@1",
            "step-deriv@1/3",
        ] {
            assert!(corpus.iter().any(|m| m.name() == name), "{name}");
        }
        assert_eq!(
            two_kink().structure().unwrap().infer_tag(),
            SmoothnessTag::BvDerivative
        );
    }

    #[test]
    fn evaluators_agree_with_exact_structure() {
        for model in builtin_corpus() {
            let Some(pp) = model.structure() else {
                continue;
            };
            for i in 0..=1000 {
                let xr = ratio(i, 1000);
                let exact = pp.eval_exact(&xr).to_f64().unwrap();
                assert!(
                    (model.eval(i as f64 / 1000.0) - exact).abs() <= 1e-14,
                    "{} at {i}",
                    model.name()
                );
            }
        }
    }

    #[test]
    fn parses_rationals() {
        assert_eq!(parse_rational("7").unwrap(), int(7));
        assert_eq!(parse_rational("-3/4").unwrap(), ratio(-3, 4));
        assert_eq!(parse_rational("0.4").unwrap(), ratio(2, 5));
        assert_eq!(parse_rational("-.5").unwrap(), ratio(-1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn parses_polynomials() {
        let p = parse_polynomial("p(x)=3/2*x^2 - x + 1/2").unwrap();
        assert_eq!(
            p,
            RationalPolynomial::from_coeffs(vec![ratio(1, 2), int(-1), ratio(3, 2)])
        );
        assert_eq!(parse_polynomial(&p.to_string()).unwrap(), p);
        assert_eq!(
            parse_polynomial("-x").unwrap(),
            RationalPolynomial::from_i64(&[0, -1])
        );
        assert_eq!(
            parse_polynomial("0.25x^3").unwrap(),
            RationalPolynomial::monomial(ratio(1, 4), 3)
        );
        assert!(parse_polynomial("x^").is_err());
        assert!(parse_polynomial("").is_err());
    }

    #[test]
    fn parses_piecewise_specs() {
        let m = parse_function_spec("piecewise: 0, p(x)=1/2 - x, 1/2, p(x)=x - 1/2, 1").unwrap();
        let abs = abs_half();
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            assert!((m.eval(x) - abs.eval(x)).abs() < 1e-15);
        }
        assert_eq!(m.tag(), SmoothnessTag::BvDerivative);
        assert!(parse_function_spec("piecewise: 0, p(x)=x, 1/2").is_err());
        assert!(parse_function_spec("piecewise: 0, p(x)=x, 1/2, p(x)=1, 1/4, p(x)=x, 1").is_err());
        let jumpy = parse_function_spec("piecewise: 0, p(x)=0, 1/2, p(x)=1, 1").unwrap();
        assert_eq!(jumpy.tag(), SmoothnessTag::BoundedOnly);
    }

    #[test]
    fn parses_builtin_names() {
        for name in [
            "e0",
            "e4",
            "abs-half",
            "hat@0.4",
            "two-kink",
            "step-deriv@1/3",
            "sqrt",
            "power@1/2",
            "const@5",
        ] {
            parse_function_spec(name).unwrap();
        }
        assert!(parse_function_spec("hat@1.5").is_err());
        assert!(parse_function_spec("nope").is_err());
        let c = parse_function_spec("const@5").unwrap();
        assert_eq!(c.eval(0.3), 5.0);
    }

    #[test]
    fn linear_combination_keeps_structure() {
        let f = abs_half();
        let g = two_kink();
        let h = FunctionModel::linear_combination(2.0, &f, -0.5, &g);
        assert!(h.structure().is_some());
        for i in 0..=50 {
            let x = i as f64 / 50.0;
            assert!((h.eval(x) - (2.0 * f.eval(x) - 0.5 * g.eval(x))).abs() < 1e-14);
        }
        assert_eq!(h.structure().unwrap().knots().len(), 5);
    }

    #[test]
    fn root_finder() {
        // (x - 0.2)(x - 0.5)(x - 0.9)
        let c = [-0.09, 0.73, -1.6, 1.0];
        let r = real_roots_in(&c, 0.0, 1.0);
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([0.2, 0.5, 0.9]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(real_roots_in(&[1.0, 0.0, 1.0], 0.0, 1.0).is_empty());
    }
}
