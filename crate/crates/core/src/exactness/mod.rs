//! Exact rational machinery: polynomial arithmetic, exact basis polynomials and
//! Beta integrals, and symbolic verification of the order-II operator's
//! reproduction and moment identities as polynomial identities in `x`.
//!
//! Nothing in this module rounds. Floating-point values only appear when a
//! caller explicitly asks for an `f64` image.

mod poly;

use std::fmt::Write as _;
use std::ops::RangeInclusive;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

pub use poly::{poly_arith, poly_definite_integral, PolyOp, RationalPolynomial};

use crate::error::{Error, Result};
use crate::modified_basis::ModWeightConfig;

pub type Rational = BigRational;

/// `num / den` as an exact rational.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// Exact Bernstein polynomial `C(n,k) x^k (1-x)^(n-k)`; zero when `k` is out of range.
pub fn bernstein_poly(n: usize, k: i64) -> RationalPolynomial {
    if k < 0 || k as usize > n {
        return RationalPolynomial::zero();
    }
    let k = k as usize;
    let c = Rational::from_integer(binomial(n as u64, k as u64));
    let xk = RationalPolynomial::monomial(c, k);
    &xk * &RationalPolynomial::from_i64(&[1, -1]).pow(n - k)
}

/// `∫_0^1 u^m p_{n,k}(u) du = C(n,k) (k+m)! (n-k)! / (n+m+1)!`.
pub fn beta_moment(n: usize, k: usize, m: usize) -> Rational {
    let (n, k, m) = (n as u64, k as u64, m as u64);
    let num = binomial(n, k) * factorial(k + m) * factorial(n - k);
    Rational::new(num, factorial(n + m + 1))
}

/// Converts a combination `Σ_k b_k p_{N,k}(x)` to power form.
pub fn bernstein_combination(degree: usize, b: &[Rational]) -> RationalPolynomial {
    let mut coeffs = vec![Rational::zero(); degree + 1];
    for (k, bk) in b.iter().enumerate().take(degree + 1) {
        if bk.is_zero() {
            continue;
        }
        let lead = bk * Rational::from_integer(binomial(degree as u64, k as u64));
        // x^k (1-x)^(N-k) = Σ_i C(N-k, i) (-1)^i x^(k+i)
        for i in 0..=(degree - k) {
            let mut term = &lead * Rational::from_integer(binomial((degree - k) as u64, i as u64));
            if i % 2 == 1 {
                term = -term;
            }
            coeffs[k + i] += term;
        }
    }
    RationalPolynomial::from_coeffs(coeffs)
}

/// Exact weight polynomial `g(x, n)`.
pub fn g_poly(cfg: &ModWeightConfig, n: usize) -> RationalPolynomial {
    RationalPolynomial::from_coeffs(vec![cfg.g0.at(n), cfg.g1.at(n), cfg.g2.at(n)])
}

/// Exact weight polynomial `h(x, n) = h0(n) x (1-x)`.
pub fn h_poly(cfg: &ModWeightConfig, n: usize) -> RationalPolynomial {
    RationalPolynomial::from_i64(&[0, 1, -1]).scale(&cfg.h0.at(n))
}

/// Exact modified basis polynomial `p^{M,2}_{n,k}`.
pub fn modified_basis_poly(cfg: &ModWeightConfig, n: usize, k: i64) -> RationalPolynomial {
    let g = g_poly(cfg, n);
    let low = n - 2;
    let a = &g * &bernstein_poly(low, k);
    let b = &h_poly(cfg, n) * &bernstein_poly(low, k - 1);
    let c = &g.reflect() * &bernstein_poly(low, k - 2);
    &(&a + &b) + &c
}

fn check_degree(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::InvalidDegree { n, min: 3 });
    }
    Ok(())
}

/// `D^{M,2}_n(e_m; x)` as an exact polynomial in `x`.
pub fn dm2_image_poly(m: usize, n: usize, cfg: &ModWeightConfig) -> Result<RationalPolynomial> {
    check_degree(n)?;
    let scale = int(n as i64 + 1);
    let coeffs: Vec<Rational> = (0..=n).map(|k| &scale * beta_moment(n, k, m)).collect();
    let low = n - 2;
    // The three shifted Bernstein combinations of Σ_k c_k p^{M,2}_{n,k}.
    let a = bernstein_combination(low, &coeffs[0..=low]);
    let b = bernstein_combination(low, &coeffs[1..=low + 1]);
    let c = bernstein_combination(low, &coeffs[2..=low + 2]);
    let g = g_poly(cfg, n);
    let out = &(&(&g * &a) + &(&h_poly(cfg, n) * &b)) + &(&g.reflect() * &c);
    Ok(out)
}

/// `D^{M,2}_n((u-x)^order; x)` by binomial expansion over [`dm2_image_poly`].
pub fn central_moment_poly(
    order: usize,
    n: usize,
    cfg: &ModWeightConfig,
) -> Result<RationalPolynomial> {
    check_degree(n)?;
    let mut out = RationalPolynomial::zero();
    let minus_x = RationalPolynomial::from_i64(&[0, -1]);
    for j in 0..=order {
        let c = Rational::from_integer(binomial(order as u64, j as u64));
        let term = &minus_x.pow(order - j) * &dm2_image_poly(j, n, cfg)?;
        out = &out + &term.scale(&c);
    }
    Ok(out)
}

/// The closed form `(20x(1-x) - 3) / ((n+2)(n+3))` claimed for the second
/// central moment under the default sequences.
pub fn claimed_second_moment(n: usize) -> RationalPolynomial {
    let den = int(((n + 2) * (n + 3)) as i64);
    RationalPolynomial::from_i64(&[-3, 20, -20]).scale(&(Rational::one() / den))
}

/// Outcome of one polynomial identity check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub holds: bool,
    pub computed: RationalPolynomial,
    pub expected: RationalPolynomial,
}

impl IdentityCheck {
    fn new(name: &'static str, computed: RationalPolynomial, expected: RationalPolynomial) -> Self {
        Self {
            name,
            holds: computed == expected,
            computed,
            expected,
        }
    }

    /// `computed - expected`; zero when the identity holds.
    pub fn discrepancy(&self) -> RationalPolynomial {
        &self.computed - &self.expected
    }
}

/// All checks for one degree `n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationRow {
    pub n: usize,
    pub checks: Vec<IdentityCheck>,
    /// Smallest `C` with `M2(x) <= C x(1-x)/(n+2)` on the grid `i/1000`;
    /// `None` when no finite constant exists (positive moment at an endpoint).
    pub moment_certificate: Option<Rational>,
}

impl VerificationRow {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationReport {
    pub config_name: String,
    pub rows: Vec<VerificationRow>,
}

pub const CERTIFICATE_GRID: i64 = 1000;

/// Grid-maximal `C` for the bound `m2(x) <= C φ²(x) / (n+2)`.
pub fn moment_certificate(m2: &RationalPolynomial, n: usize) -> Option<Rational> {
    let zero = Rational::zero();
    if m2.eval(&zero).is_positive() || m2.eval(&Rational::one()).is_positive() {
        return None;
    }
    let n2 = int(n as i64 + 2);
    let mut best = zero;
    for i in 1..CERTIFICATE_GRID {
        let x = ratio(i, CERTIFICATE_GRID);
        let phi2 = &x * (Rational::one() - &x);
        let c = m2.eval(&x) * &n2 / phi2;
        if c > best {
            best = c;
        }
    }
    Some(best)
}

fn verify_one(n: usize, cfg: &ModWeightConfig) -> Result<VerificationRow> {
    let e0 = dm2_image_poly(0, n, cfg)?;
    let m1 = central_moment_poly(1, n, cfg)?;
    let m2 = central_moment_poly(2, n, cfg)?;
    let checks = vec![
        IdentityCheck::new("e0", e0, RationalPolynomial::one()),
        IdentityCheck::new("e1", dm2_image_poly(1, n, cfg)?, RationalPolynomial::x()),
        IdentityCheck::new("m1", m1, RationalPolynomial::zero()),
        IdentityCheck::new("m2", m2.clone(), claimed_second_moment(n)),
    ];
    Ok(VerificationRow {
        n,
        checks,
        moment_certificate: moment_certificate(&m2, n),
    })
}

/// Verifies, for every `n` in `n_range`, the reproduction identities for
/// `e_0` and `e_1`, the vanishing first central moment and the closed-form
/// second central moment, and certifies the second-moment bound constant.
///
/// Mismatches are report content; the only error is an out-of-range `n`.
pub fn verify_moment_identities(
    n_range: RangeInclusive<usize>,
    cfg: &ModWeightConfig,
) -> Result<VerificationReport> {
    let (lo, hi) = (*n_range.start(), *n_range.end());
    if lo < 3 || hi > 60 || lo > hi {
        return Err(Error::InvalidRange(format!(
            "n range {lo}..{hi} must satisfy 3 <= from <= to <= 60"
        )));
    }
    let rows = n_range
        .into_par_iter()
        .map(|n| verify_one(n, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(VerificationReport {
        config_name: cfg.name.clone(),
        rows,
    })
}

impl VerificationReport {
    pub fn all_hold(&self) -> bool {
        self.rows.iter().all(VerificationRow::all_hold)
    }

    /// One line per identity per degree.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# config: {}", self.config_name);
        for row in &self.rows {
            for check in &row.checks {
                let status = if check.holds { "PASS" } else { "FAIL" };
                let _ = write!(out, "n={} {} {}", row.n, check.name, status);
                if !check.holds {
                    let _ = write!(
                        out,
                        " computed=[{}] discrepancy=[{}]",
                        check.computed,
                        check.discrepancy()
                    );
                }
                out.push('\n');
            }
            match &row.moment_certificate {
                Some(c) => {
                    let _ = writeln!(out, "n={} moment-certificate C={}", row.n, c);
                }
                None => {
                    let _ = writeln!(out, "n={} moment-certificate none", row.n);
                }
            }
        }
        out
    }

    /// One CSV row per degree: `n, identity, status, discrepancy,
    /// certificate_num, certificate_den`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record([
            "n",
            "identity",
            "status",
            "discrepancy",
            "certificate_num",
            "certificate_den",
        ])?;
        for row in &self.rows {
            let names: Vec<&str> = row.checks.iter().map(|c| c.name).collect();
            let failures: Vec<String> = row
                .checks
                .iter()
                .filter(|c| !c.holds)
                .map(|c| format!("{}: {}", c.name, c.discrepancy()))
                .collect();
            let (num, den) = match &row.moment_certificate {
                Some(c) => (c.numer().to_string(), c.denom().to_string()),
                None => (String::new(), String::new()),
            };
            wtr.write_record([
                row.n.to_string(),
                names.join("|"),
                if row.all_hold() {
                    "pass".into()
                } else {
                    "fail".into()
                },
                failures.join("; "),
                num,
                den,
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_cfg() -> ModWeightConfig {
        ModWeightConfig::order_two()
    }

    #[test]
    fn beta_moment_matches_integration() {
        let zero = Rational::zero();
        let one = Rational::one();
        for n in 0..8 {
            for k in 0..=n {
                for m in 0..3 {
                    let p = &RationalPolynomial::x().pow(m) * &bernstein_poly(n, k as i64);
                    assert_eq!(beta_moment(n, k, m), p.definite_integral(&zero, &one));
                }
            }
        }
        assert_eq!(beta_moment(4, 2, 0), ratio(1, 5));
        assert_eq!(beta_moment(7, 0, 0), ratio(1, 8));
    }

    #[test]
    fn bernstein_combination_matches_direct_sum() {
        let b: Vec<Rational> = vec![
            ratio(1, 3),
            ratio(-2, 1),
            ratio(5, 7),
            ratio(0, 1),
            ratio(9, 4),
        ];
        let direct = b
            .iter()
            .enumerate()
            .fold(RationalPolynomial::zero(), |acc, (k, c)| {
                &acc + &bernstein_poly(4, k as i64).scale(c)
            });
        assert_eq!(bernstein_combination(4, &b), direct);
    }

    #[test]
    fn default_weights_sum_to_one() {
        let cfg = default_cfg();
        for n in 3..30 {
            let g = g_poly(&cfg, n);
            let sum = &(&g + &h_poly(&cfg, n)) + &g.reflect();
            assert_eq!(sum, RationalPolynomial::one(), "n={n}");
        }
    }

    #[test]
    fn modified_rows_sum_to_one_exactly() {
        let cfg = default_cfg();
        for n in 3..=15 {
            let sum = (0..=n as i64).fold(RationalPolynomial::zero(), |acc, k| {
                &acc + &modified_basis_poly(&cfg, n, k)
            });
            assert_eq!(sum, RationalPolynomial::one());
        }
    }

    #[test]
    fn reproduces_constants_and_identity() {
        let cfg = default_cfg();
        assert_eq!(
            dm2_image_poly(0, 5, &cfg).unwrap(),
            RationalPolynomial::one()
        );
        assert_eq!(dm2_image_poly(1, 5, &cfg).unwrap(), RationalPolynomial::x());
    }

    #[test]
    fn e2_image_at_n10() {
        let cfg = default_cfg();
        let expected = &RationalPolynomial::x().pow(2) + &claimed_second_moment(10);
        assert_eq!(dm2_image_poly(2, 10, &cfg).unwrap(), expected);
    }

    #[test]
    fn central_moments() {
        let cfg = default_cfg();
        for n in 3..=15 {
            assert!(central_moment_poly(1, n, &cfg).unwrap().is_zero());
            assert_eq!(
                central_moment_poly(2, n, &cfg).unwrap(),
                claimed_second_moment(n)
            );
        }
        let m2 = central_moment_poly(2, 10, &cfg).unwrap();
        assert_eq!(m2.eval(&ratio(1, 2)), ratio(1, 78));
    }

    #[test]
    fn rejects_small_degree() {
        assert!(matches!(
            dm2_image_poly(0, 2, &default_cfg()),
            Err(Error::InvalidDegree { n: 2, .. })
        ));
        assert!(verify_moment_identities(2..=5, &default_cfg()).is_err());
        assert!(verify_moment_identities(3..=61, &default_cfg()).is_err());
    }

    #[test]
    fn verification_passes_for_default_sequences() {
        let report = verify_moment_identities(3..=15, &default_cfg()).unwrap();
        assert_eq!(report.rows.len(), 13);
        assert!(report.all_hold());
        let mut csv = Vec::new();
        report.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 14);
    }

    #[test]
    fn moment_certificate_for_n10() {
        // max over the grid of (20φ² - 3)·12 / (156 φ²) is attained at x = 1/2.
        let m2 = claimed_second_moment(10);
        assert_eq!(moment_certificate(&m2, 10), Some(ratio(8, 13)));
    }

    #[test]
    fn bernstein_reduction_reports_computed_truth() {
        let report =
            verify_moment_identities(10..=10, &ModWeightConfig::bernstein_reduction()).unwrap();
        let row = &report.rows[0];
        assert!(row.checks[0].holds, "e0 reproduction");
        // classical Durrmeyer: D_n(e_1; x) = (n x + 1)/(n + 2)
        let classical = RationalPolynomial::from_coeffs(vec![ratio(1, 12), ratio(10, 12)]);
        assert_eq!(row.checks[1].computed, classical);
        assert!(!row.checks[1].holds);
        assert!(report.to_text().contains("n=10 e1 FAIL"));
    }

    #[test]
    fn reports_are_deterministic() {
        let a = verify_moment_identities(3..=8, &default_cfg()).unwrap();
        let b = verify_moment_identities(3..=8, &default_cfg()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_text(), b.to_text());
    }
}
