//! Distribution of the studentized range by numerical integration.
//!
//! For `k` standard normals the range `R` has
//! `P(R < w) = k ∫ φ(z) [Φ(z) - Φ(z - w)]^(k-1) dz`, and the studentized
//! range `Q = R / s` with `s ~ sqrt(χ²_ν / ν)` has
//! `P(Q < q) = ∫ f_ν(s) P(R < q s) ds`. Both integrals use adaptive Simpson
//! quadrature over a fixed partition of a truncated domain.

use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

/// Absolute tolerance requested from the outer integral.
pub const TOLERANCE: f64 = 1e-9;

const Z_LIMIT: f64 = 8.5;
const PIECES: usize = 16;

fn phi(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn big_phi(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson integral of `f` over `[a, b]`, split into equal pieces
/// first so narrow peaks are not stepped over.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let h = (b - a) / PIECES as f64;
    (0..PIECES)
        .map(|i| {
            let (lo, hi) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let (flo, fmid, fhi) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
            simpson(&f, lo, hi, flo, fmid, fhi, whole, tol / PIECES as f64, 40)
        })
        .sum()
}

/// `P(R < w)` for the range of `k` standard normals.
pub fn range_cdf(w: f64, k: usize) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    let k1 = (k - 1) as i32;
    let inner = |z: f64| phi(z) * (big_phi(z) - big_phi(z - w)).max(0.0).powi(k1);
    (k as f64 * integrate(inner, -Z_LIMIT, Z_LIMIT + w.min(Z_LIMIT), TOLERANCE * 1e-2)).clamp(0.0, 1.0)
}

/// `P(Q < q)` for the studentized range of `k` means with `df` degrees of
/// freedom. `df = ∞` gives the range of standard normals.
pub fn ptukey(q: f64, k: usize, df: f64) -> f64 {
    assert!(k >= 2, "the range needs at least two groups");
    assert!(df > 0.0, "degrees of freedom must be positive");
    if q <= 0.0 {
        return 0.0;
    }
    if df.is_infinite() {
        return range_cdf(q, k);
    }
    // density of s = sqrt(χ²_ν / ν), in logs to survive large ν
    let log_norm = 0.5 * df * df.ln() - ln_gamma(0.5 * df) - (0.5 * df - 1.0) * std::f64::consts::LN_2;
    let density = |s: f64| {
        if s <= 0.0 {
            return 0.0;
        }
        (log_norm + (df - 1.0) * s.ln() - 0.5 * df * s * s).exp()
    };
    let spread = 12.0 / (2.0 * df).sqrt();
    let (lo, hi) = ((1.0 - spread).max(0.0), 1.0 + spread);
    integrate(|s| density(s) * range_cdf(q * s, k), lo, hi, TOLERANCE).clamp(0.0, 1.0)
}

/// Upper tail `P(Q ≥ q)`.
pub fn ptukey_upper(q: f64, k: usize, df: f64) -> f64 {
    (1.0 - ptukey(q, k, df)).clamp(0.0, 1.0)
}
