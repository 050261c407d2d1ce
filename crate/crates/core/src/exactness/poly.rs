//! Dense univariate polynomials with arbitrary-precision rational coefficients.
//!
//! Coefficients are stored in ascending degree order. The representation is
//! canonical: the zero polynomial has no coefficients and every other
//! polynomial has a nonzero leading coefficient.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct RationalPolynomial {
    coeffs: Vec<Rational>,
}

impl RationalPolynomial {
    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(Zero::is_zero) {
            self.coeffs.pop();
        }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Self::from_coeffs(vec![c])
    }

    /// The indeterminate `x`.
    pub fn x() -> Self {
        Self::from_coeffs(vec![Rational::zero(), Rational::one()])
    }

    /// `c * x^deg`.
    pub fn monomial(c: Rational, deg: usize) -> Self {
        let mut coeffs = vec![Rational::zero(); deg + 1];
        coeffs[deg] = c;
        Self::from_coeffs(coeffs)
    }

    /// Builds a polynomial from ascending coefficients, trimming trailing zeros.
    pub fn from_coeffs(coeffs: Vec<Rational>) -> Self {
        let mut p = Self { coeffs };
        p.trim();
        p
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Self::from_coeffs(
            coeffs
                .iter()
                .map(|&c| Rational::from_integer(BigInt::from(c)))
                .collect(),
        )
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    /// Coefficient of `x^i`, zero beyond the degree.
    pub fn coeff(&self, i: usize) -> Rational {
        self.coeffs.get(i).cloned().unwrap_or_else(Rational::zero)
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self::from_coeffs(self.coeffs.iter().map(|a| a * c).collect())
    }

    /// Exact evaluation by Horner's rule.
    pub fn eval(&self, x: &Rational) -> Rational {
        self.coeffs
            .iter()
            .rev()
            .fold(Rational::zero(), |acc, c| acc * x + c)
    }

    /// Floating-point evaluation using `f64` images of the coefficients.
    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + c.to_f64().unwrap_or(f64::NAN))
    }

    /// Coefficients rounded to `f64`, ascending.
    pub fn to_f64_coeffs(&self) -> Vec<f64> {
        self.coeffs
            .iter()
            .map(|c| c.to_f64().unwrap_or(f64::NAN))
            .collect()
    }

    pub fn derivative(&self) -> Self {
        Self::from_coeffs(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * Rational::from_integer(BigInt::from(i)))
                .collect(),
        )
    }

    /// Antiderivative vanishing at zero.
    pub fn antiderivative(&self) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(Rational::zero());
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs.push(c / Rational::from_integer(BigInt::from(i + 1)));
        }
        Self::from_coeffs(coeffs)
    }

    /// Exact `∫_a^b p`.
    pub fn definite_integral(&self, a: &Rational, b: &Rational) -> Rational {
        let anti = self.antiderivative();
        anti.eval(b) - anti.eval(a)
    }

    /// `p(1 - x)`.
    pub fn reflect(&self) -> Self {
        let one_minus_x = Self::from_i64(&[1, -1]);
        self.compose(&one_minus_x)
    }

    /// `p(q(x))`.
    pub fn compose(&self, q: &Self) -> Self {
        self.coeffs.iter().rev().fold(Self::zero(), |acc, c| {
            &(&acc * q) + &Self::constant(c.clone())
        })
    }

    pub fn pow(&self, e: usize) -> Self {
        let mut out = Self::one();
        for _ in 0..e {
            out = &out * self;
        }
        out
    }
}

impl fmt::Display for RationalPolynomial {
    /// Renders as `3/2*x^2 - x + 1/2`, highest degree first; the output is
    /// accepted by the CLI polynomial parser.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            first = false;
            let unit = mag.is_one();
            match i {
                0 => write!(f, "{mag}")?,
                1 if unit => write!(f, "x")?,
                1 => write!(f, "{mag}*x")?,
                _ if unit => write!(f, "x^{i}")?,
                _ => write!(f, "{mag}*x^{i}")?,
            }
        }
        Ok(())
    }
}

impl Add for &RationalPolynomial {
    type Output = RationalPolynomial;

    fn add(self, rhs: Self) -> RationalPolynomial {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        RationalPolynomial::from_coeffs((0..len).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl Sub for &RationalPolynomial {
    type Output = RationalPolynomial;

    fn sub(self, rhs: Self) -> RationalPolynomial {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        RationalPolynomial::from_coeffs((0..len).map(|i| self.coeff(i) - rhs.coeff(i)).collect())
    }
}

impl Mul for &RationalPolynomial {
    type Output = RationalPolynomial;

    fn mul(self, rhs: Self) -> RationalPolynomial {
        if self.is_zero() || rhs.is_zero() {
            return RationalPolynomial::zero();
        }
        let mut out = vec![Rational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        RationalPolynomial::from_coeffs(out)
    }
}

impl Neg for &RationalPolynomial {
    type Output = RationalPolynomial;

    fn neg(self) -> RationalPolynomial {
        RationalPolynomial::from_coeffs(self.coeffs.iter().map(|c| -c).collect())
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr for RationalPolynomial {
            type Output = RationalPolynomial;
            fn $method(self, rhs: Self) -> RationalPolynomial {
                (&self).$method(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// Arithmetic selector for [`poly_arith`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolyOp {
    Add,
    Sub,
    Mul,
}

pub fn poly_arith(
    a: &RationalPolynomial,
    b: &RationalPolynomial,
    op: PolyOp,
) -> RationalPolynomial {
    match op {
        PolyOp::Add => a + b,
        PolyOp::Sub => a - b,
        PolyOp::Mul => a * b,
    }
}

pub fn poly_definite_integral(p: &RationalPolynomial, a: &Rational, b: &Rational) -> Rational {
    p.definite_integral(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactness::ratio;
    use proptest::prelude::*;

    #[test]
    fn phi_squared_expansion() {
        let x = RationalPolynomial::x();
        let one_minus_x = RationalPolynomial::from_i64(&[1, -1]);
        assert_eq!(
            poly_arith(&x, &one_minus_x, PolyOp::Mul),
            RationalPolynomial::from_i64(&[0, 1, -1])
        );
    }

    #[test]
    fn additive_inverse_is_zero() {
        let p = RationalPolynomial::from_coeffs(vec![ratio(3, 2), ratio(-7, 5), ratio(1, 9)]);
        let sum = poly_arith(&p, &-&p, PolyOp::Add);
        assert!(sum.is_zero());
        assert_eq!(sum.degree(), None);
    }

    #[test]
    fn difference_of_squares() {
        let a = RationalPolynomial::from_i64(&[1, 1]);
        let b = RationalPolynomial::from_i64(&[1, -1]);
        assert_eq!(&a * &b, RationalPolynomial::from_i64(&[1, 0, -1]));
    }

    #[test]
    fn definite_integrals() {
        let zero = Rational::zero();
        let one = Rational::one();
        assert_eq!(
            RationalPolynomial::one().definite_integral(&zero, &one),
            one
        );
        // u * p_{4,1}(u) = 4u^2(1-u)^3, Beta integral 4 * 2! 3! / 6! = 1/15
        let p41 =
            RationalPolynomial::from_i64(&[0, 4]) * RationalPolynomial::from_i64(&[1, -1]).pow(3);
        let integrand = &RationalPolynomial::x() * &p41;
        assert_eq!(
            poly_definite_integral(&integrand, &zero, &one),
            ratio(1, 15)
        );
    }

    #[test]
    fn display_round_trips_through_text() {
        let p = RationalPolynomial::from_coeffs(vec![ratio(1, 2), ratio(-1, 1), ratio(3, 2)]);
        assert_eq!(p.to_string(), "3/2*x^2 - x + 1/2");
        assert_eq!(RationalPolynomial::zero().to_string(), "0");
    }

    #[test]
    fn reflect_swaps_endpoints() {
        let p = RationalPolynomial::from_i64(&[2, 3, 5]);
        let r = p.reflect();
        assert_eq!(r.eval(&Rational::zero()), p.eval(&Rational::one()));
        assert_eq!(r.eval(&Rational::one()), p.eval(&Rational::zero()));
    }

    fn small_poly() -> impl Strategy<Value = RationalPolynomial> {
        prop::collection::vec((-20i64..20, 1i64..7), 0..6).prop_map(|v| {
            RationalPolynomial::from_coeffs(v.into_iter().map(|(a, b)| ratio(a, b)).collect())
        })
    }

    proptest! {
        #[test]
        fn ring_laws_hold_pointwise(a in small_poly(), b in small_poly(), num in -9i64..9, den in 1i64..9) {
            let x = ratio(num, den);
            prop_assert_eq!((&a * &b).eval(&x), a.eval(&x) * b.eval(&x));
            prop_assert_eq!((&a + &b).eval(&x), a.eval(&x) + b.eval(&x));
            prop_assert_eq!(&(&a - &b) + &b, a.clone());
            prop_assert_eq!(a.antiderivative().derivative(), a);
        }
    }
}
