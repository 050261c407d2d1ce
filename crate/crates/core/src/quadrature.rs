//! Gauss–Legendre rules and composite/adaptive integration helpers.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

/// Nodes and weights on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// `m`-point rule, exact for polynomials of degree `2m - 1`.
    pub fn new(m: usize) -> Self {
        assert!(m >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; m];
        let mut weights = vec![0.0; m];
        for i in 0..m.div_ceil(2) {
            let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(m, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(m, z);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[m - 1 - i] = z;
            weights[i] = w;
            weights[m - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Shared cached rule.
    pub fn cached(m: usize) -> Arc<Self> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        guard
            .entry(m)
            .or_insert_with(|| Arc::new(Self::new(m)))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Mapped nodes and weights on `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&t, &w)| (mid + half * t, half * w))
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> f64 {
        self.on(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// `(P_m(z), P_m'(z))` via the three-term recurrence.
fn legendre(m: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if m == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=m {
        let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Panels covering `[a, b]`: `uniform` equal subpanels, plus geometric
/// grading of `levels` panels (ratio 1/2) toward each flagged endpoint.
pub fn graded_panels(
    a: f64,
    b: f64,
    uniform: usize,
    grade_left: bool,
    grade_right: bool,
    levels: usize,
) -> Vec<(f64, f64)> {
    let uniform = uniform.max(1);
    let width = (b - a) / uniform as f64;
    let mut out = Vec::new();
    for i in 0..uniform {
        let lo = a + i as f64 * width;
        let hi = if i + 1 == uniform {
            b
        } else {
            a + (i + 1) as f64 * width
        };
        let first = i == 0 && grade_left;
        let last = i + 1 == uniform && grade_right;
        match (first, last) {
            (false, false) => out.push((lo, hi)),
            (true, false) => out.extend(grade_toward_left(lo, hi, levels)),
            (false, true) => out.extend(grade_toward_right(lo, hi, levels)),
            (true, true) => {
                let mid = 0.5 * (lo + hi);
                out.extend(grade_toward_left(lo, mid, levels));
                out.extend(grade_toward_right(mid, hi, levels));
            }
        }
    }
    out
}

fn grade_toward_left(lo: f64, hi: f64, levels: usize) -> Vec<(f64, f64)> {
    let mut cuts: Vec<f64> = (0..=levels)
        .map(|j| lo + (hi - lo) * 0.5f64.powi(j as i32))
        .collect();
    cuts.push(lo);
    cuts.reverse();
    cuts.windows(2).map(|w| (w[0], w[1])).collect()
}

fn grade_toward_right(lo: f64, hi: f64, levels: usize) -> Vec<(f64, f64)> {
    let mut cuts: Vec<f64> = (0..=levels)
        .map(|j| hi - (hi - lo) * 0.5f64.powi(j as i32))
        .collect();
    cuts.push(hi);
    cuts.windows(2).map(|w| (w[0], w[1])).collect()
}

/// Adaptive Simpson quadrature; a reference integrator for smooth scalar integrands.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}
