//! Closed-form bounds on the geodesic β-distance.
//!
//! Two families of results are implemented:
//!
//! * Lipschitz constants between the β-distances:
//!   min{1, √(β₁/β₂)}·d_{β₂} ≤ d_{β₁} ≤ max{1, √(β₁/β₂)}·d_{β₂}.
//! * Envelopes in terms of the Frobenius distance δ = ‖U − Ũ‖_F ∈ [0, 2√p]:
//!
//!   ```text
//!   m̂_β(δ) = min{1,√β} · 2√p · arcsin(δ / (2√p))            (lower)
//!   M̂_β(δ) = max{1,√β} · ( 2·arcsin(δ/2)  if δ ≤ 2
//!                          (π/2)·δ        otherwise )        (upper)
//!   ```
//!
//! together with the upper bound w_β on the exact lower envelope m_β for odd
//! p and β ∈ [1/2, 1], the attainment classification, the Euclidean diameter
//! π√p, and the (m, M) search shell consumed by the shooting logarithm.
//!
//! The upper envelope is proven for n ≥ 2p; callers working below that range
//! get a numerically identical value with advisory status (see
//! [`upper_bound_proven`]).

use crate::error::{Result, StiefelError};

/// Best Lipschitz constants lo·d_{β₂} ≤ d_{β₁} ≤ hi·d_{β₂}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LipschitzPair {
    pub lo: f64,
    pub hi: f64,
}

/// Whether the arcsin lower envelope equals the exact envelope m_β.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Attainment {
    LowerAttained,
    LowerConjecturedUnattained,
}

impl Attainment {
    pub fn as_str(&self) -> &'static str {
        match self {
            Attainment::LowerAttained => "attained",
            Attainment::LowerConjecturedUnattained => "conjectured_unattained",
        }
    }
}

/// Envelope evaluation at one Frobenius distance.
#[derive(Clone, Debug)]
pub struct BoundsReport {
    pub delta: f64,
    pub lower: f64,
    pub upper: f64,
    /// w_β(δ): upper bound on the exact lower envelope, defined only for odd
    /// p with β ∈ [1/2, 1].
    pub w_upper_on_lower: Option<f64>,
    pub attainment: Attainment,
}

fn check_beta(beta: f64) -> Result<f64> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(StiefelError::invalid(format!(
            "metric parameter must be positive, got {beta}"
        )));
    }
    Ok(beta)
}

fn check_delta(p: usize, delta: f64) -> Result<f64> {
    let cap = 2.0 * (p as f64).sqrt();
    if !delta.is_finite() || delta < -1e-10 || delta > cap + 1e-10 {
        return Err(StiefelError::invalid(format!(
            "Frobenius distance {delta} outside [0, {cap}]"
        )));
    }
    Ok(delta.clamp(0.0, cap))
}

/// arcsin with the argument clamped into [−1, 1]; values within 1e-12 of the
/// ends snap exactly, absorbing floating-point overshoot near δ = 2√p.
pub fn arcsin_clamped(x: f64) -> f64 {
    if x >= 1.0 - 1e-12 {
        if x > 1.0 + 1e-10 {
            return f64::NAN;
        }
        return std::f64::consts::FRAC_PI_2;
    }
    if x <= -1.0 + 1e-12 {
        if x < -1.0 - 1e-10 {
            return f64::NAN;
        }
        return -std::f64::consts::FRAC_PI_2;
    }
    x.asin()
}

/// Constants (lo, hi) with lo·d_{β₂} ≤ d_{β₁} ≤ hi·d_{β₂}.
pub fn lipschitz(beta1: f64, beta2: f64) -> Result<LipschitzPair> {
    check_beta(beta1)?;
    check_beta(beta2)?;
    let ratio = (beta1 / beta2).sqrt();
    Ok(LipschitzPair {
        lo: ratio.min(1.0),
        hi: ratio.max(1.0),
    })
}

/// m̂_β(δ) = min{1,√β} · 2√p · arcsin(δ/(2√p)).
pub fn lower_envelope(beta: f64, p: usize, delta: f64) -> Result<f64> {
    check_beta(beta)?;
    let delta = check_delta(p, delta)?;
    let sp = (p as f64).sqrt();
    Ok(beta.sqrt().min(1.0) * 2.0 * sp * arcsin_clamped(delta / (2.0 * sp)))
}

/// M̂_β(δ) = max{1,√β} · (2·arcsin(δ/2) for δ ≤ 2, else (π/2)·δ).
///
/// Proven for n ≥ 2p; the caller is responsible for interpreting the value
/// as advisory below that range.
pub fn upper_envelope(beta: f64, p: usize, delta: f64) -> Result<f64> {
    check_beta(beta)?;
    let delta = check_delta(p, delta)?;
    let base = if delta <= 2.0 {
        2.0 * arcsin_clamped(delta / 2.0)
    } else {
        std::f64::consts::FRAC_PI_2 * delta
    };
    Ok(beta.sqrt().max(1.0) * base)
}

/// True when the upper envelope carries its proof hypothesis n ≥ 2p.
pub fn upper_bound_proven(n: usize, p: usize) -> bool {
    n >= 2 * p
}

/// w_β(δ) ≥ m_β(δ) for odd p, β ∈ [1/2, 1]:
///
/// ```text
/// w_β(δ) = 2√β · min{ √(p−1)·arcsin(δ/(2√(p−1))),  √(p+1)·arcsin(δ/(2√p)) }
/// ```
///
/// where the first branch only applies when p ≥ 3 and δ ≤ 2√(p−1).
pub fn w_upper_on_lower(beta: f64, p: usize, delta: f64) -> Result<f64> {
    check_beta(beta)?;
    if p.is_multiple_of(2) {
        return Err(StiefelError::not_applicable(
            "w bound is stated for odd frame sizes only",
        ));
    }
    if !(0.5..=1.0).contains(&beta) {
        return Err(StiefelError::not_applicable(
            "w bound is stated for beta in [1/2, 1] only",
        ));
    }
    let delta = check_delta(p, delta)?;
    let sp = (p as f64).sqrt();
    let second = ((p + 1) as f64).sqrt() * arcsin_clamped(delta / (2.0 * sp));
    let mut best = second;
    if p >= 3 {
        let sp1 = ((p - 1) as f64).sqrt();
        if delta <= 2.0 * sp1 {
            let first = sp1 * arcsin_clamped(delta / (2.0 * sp1));
            best = best.min(first);
        }
    }
    Ok(2.0 * beta.sqrt() * best)
}

/// Decision tree for whether m̂_β equals the exact lower envelope:
/// attained when (β < 1 and p even), or β = 1, or (β > 1 and n ≥ 2p);
/// conjectured unattained otherwise.
pub fn lower_attained(beta: f64, n: usize, p: usize) -> Attainment {
    let attained = if (beta - 1.0).abs() < 1e-15 {
        true
    } else if beta < 1.0 {
        p.is_multiple_of(2)
    } else {
        n >= 2 * p
    };
    if attained {
        Attainment::LowerAttained
    } else {
        Attainment::LowerConjecturedUnattained
    }
}

/// Diameter of St(n,p) under the Euclidean metric (n ≥ 2p): π√p.
pub fn diameter_euclidean(p: usize) -> f64 {
    std::f64::consts::PI * (p as f64).sqrt()
}

/// The (m, M) shell of admissible initial-velocity norms for the logarithm.
pub fn search_shell(beta: f64, p: usize, delta: f64) -> Result<(f64, f64)> {
    Ok((
        lower_envelope(beta, p, delta)?,
        upper_envelope(beta, p, delta)?,
    ))
}

/// Aggregated envelope evaluation for the CLI/report path.
pub fn bounds_report(beta: f64, n: usize, p: usize, delta: f64) -> Result<BoundsReport> {
    let lower = lower_envelope(beta, p, delta)?;
    let upper = upper_envelope(beta, p, delta)?;
    let w = if p % 2 == 1 && (0.5..=1.0).contains(&beta) {
        Some(w_upper_on_lower(beta, p, delta)?)
    } else {
        None
    };
    Ok(BoundsReport {
        delta,
        lower,
        upper,
        w_upper_on_lower: w,
        attainment: lower_attained(beta, n, p),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn lipschitz_examples() {
        // canonical vs Euclidean: sqrt(2)/2 d_E <= d_c <= d_E
        let pair = lipschitz(0.5, 1.0).unwrap();
        assert_abs_diff_eq!(pair.lo, 2f64.sqrt() / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(pair.hi, 1.0, epsilon = 1e-15);

        let same = lipschitz(0.7, 0.7).unwrap();
        assert_eq!((same.lo, same.hi), (1.0, 1.0));

        let wide = lipschitz(2.0, 0.5).unwrap();
        assert_abs_diff_eq!(wide.lo, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(wide.hi, 2.0, epsilon = 1e-15);

        assert!(lipschitz(-1.0, 1.0).is_err());
    }

    #[test]
    fn lipschitz_duality() {
        for b1 in [0.25, 0.5, 1.0, 1.5, 3.0] {
            for b2 in [0.25, 0.5, 1.0, 1.5, 3.0] {
                let fwd = lipschitz(b1, b2).unwrap();
                let bwd = lipschitz(b2, b1).unwrap();
                assert_abs_diff_eq!(fwd.lo * bwd.hi, 1.0, epsilon = 1e-12);
                assert!(fwd.lo <= fwd.hi);
            }
        }
    }

    #[test]
    fn lower_envelope_examples() {
        for p in [1usize, 2, 4, 9] {
            let sp = (p as f64).sqrt();
            assert_abs_diff_eq!(
                lower_envelope(1.0, p, 2.0 * sp).unwrap(),
                PI * sp,
                epsilon = 1e-12
            );
            assert_eq!(lower_envelope(1.0, p, 0.0).unwrap(), 0.0);
        }
        // beta = 1/2, p = 1, delta = 2: arcsin(1) = pi/2
        assert_abs_diff_eq!(
            lower_envelope(0.5, 1, 2.0).unwrap(),
            PI * 2f64.sqrt() / 2.0,
            epsilon = 1e-12
        );
        assert!(lower_envelope(1.0, 1, 3.0).is_err());
    }

    #[test]
    fn upper_envelope_examples() {
        // both pieces agree at delta = 2
        assert_abs_diff_eq!(upper_envelope(1.0, 4, 2.0).unwrap(), PI, epsilon = 1e-12);
        // delta = 2 sqrt(k) hits pi sqrt(k) on the linear piece
        for k in [1usize, 2, 3, 4] {
            let d = 2.0 * (k as f64).sqrt();
            assert_abs_diff_eq!(
                upper_envelope(1.0, 4, d).unwrap(),
                PI * (k as f64).sqrt(),
                epsilon = 1e-12
            );
        }
        // prefactor is max{1, sqrt(beta)}
        assert_abs_diff_eq!(
            upper_envelope(0.25, 2, 1.0).unwrap(),
            2.0 * (0.5f64).asin(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            upper_envelope(0.25, 2, 1.0).unwrap(),
            PI / 3.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            upper_envelope(4.0, 2, 1.0).unwrap(),
            2.0 * PI / 3.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn w_bound_examples() {
        // p = 3, delta = 2, beta = 1: both branches evaluated
        let got = w_upper_on_lower(1.0, 3, 2.0).unwrap();
        let b1 = 2f64.sqrt() * (1.0 / 2f64.sqrt()).asin();
        let b2 = 2.0 * (1.0 / 3f64.sqrt()).asin();
        assert_abs_diff_eq!(got, 2.0 * b1.min(b2), epsilon = 1e-12);
        assert_abs_diff_eq!(got, 2.221_441_469_079_183, epsilon = 1e-9);

        assert_eq!(w_upper_on_lower(1.0, 3, 0.0).unwrap(), 0.0);

        // p = 1: only the second branch exists
        let got1 = w_upper_on_lower(0.5, 1, 1.0).unwrap();
        let want = 2.0 * 0.5f64.sqrt() * 2f64.sqrt() * 0.5f64.asin();
        assert_abs_diff_eq!(got1, want, epsilon = 1e-12);
        assert_abs_diff_eq!(got1, PI / 3.0, epsilon = 1e-12);

        assert!(w_upper_on_lower(1.0, 2, 1.0).is_err());
        assert!(w_upper_on_lower(0.3, 3, 1.0).is_err());
        assert!(w_upper_on_lower(1.2, 3, 1.0).is_err());
    }

    #[test]
    fn attainment_tree() {
        use Attainment::*;
        assert_eq!(lower_attained(0.5, 6, 5), LowerConjecturedUnattained);
        assert_eq!(lower_attained(1.0, 6, 5), LowerAttained);
        assert_eq!(lower_attained(1.0, 3, 2), LowerAttained);
        assert_eq!(lower_attained(2.0, 3, 2), LowerConjecturedUnattained);
        assert_eq!(lower_attained(2.0, 4, 2), LowerAttained);
        assert_eq!(lower_attained(0.5, 8, 4), LowerAttained);
        assert_eq!(lower_attained(0.25, 9, 3), LowerConjecturedUnattained);
    }

    #[test]
    fn diameter_values() {
        assert_abs_diff_eq!(diameter_euclidean(1), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(diameter_euclidean(4), 2.0 * PI, epsilon = 1e-15);
        assert_abs_diff_eq!(diameter_euclidean(9), 3.0 * PI, epsilon = 1e-15);
    }

    #[test]
    fn shell_examples() {
        assert_eq!(search_shell(1.0, 2, 0.0).unwrap(), (0.0, 0.0));
        let (m, big_m) = search_shell(1.0, 2, 2.0).unwrap();
        assert_abs_diff_eq!(m, 2.0 * 2f64.sqrt() * (PI / 4.0), epsilon = 1e-12);
        assert_abs_diff_eq!(big_m, PI, epsilon = 1e-12);
        // p = 1, delta = 2: shell collapses to the sphere antipode distance
        let (m1, m2) = search_shell(1.0, 1, 2.0).unwrap();
        assert_abs_diff_eq!(m1, PI, epsilon = 1e-12);
        assert_abs_diff_eq!(m2, PI, epsilon = 1e-12);
    }

    #[test]
    fn envelope_grid_properties() {
        // ordering, continuity, convexity and the chord tangency of the
        // lower envelope on a fine grid
        for beta in [0.25f64, 0.5, 1.0, 2.0] {
            for p in [1usize, 2, 3, 5] {
                let cap = 2.0 * (p as f64).sqrt();
                let k = 1000;
                let slope_cap = PI * beta.sqrt().max(1.0);
                let chord = beta.sqrt().min(1.0);
                let mut prev: Option<(f64, f64, f64)> = None;
                let mut prev_slope = f64::NEG_INFINITY;
                for i in 0..=k {
                    let d = cap * i as f64 / k as f64;
                    let lo = lower_envelope(beta, p, d).unwrap();
                    let hi = upper_envelope(beta, p, d).unwrap();
                    assert!(lo >= -1e-12 && lo <= hi + 1e-9, "order fails at {d}");
                    assert!(lo + 1e-12 >= chord * d, "chord fails at {d}");
                    if p % 2 == 1 && (0.5..=1.0).contains(&beta) {
                        let w = w_upper_on_lower(beta, p, d).unwrap();
                        assert!(w + 1e-9 >= lo, "w >= m-hat fails at {d}");
                    }
                    if let Some((dp, lop, hip)) = prev {
                        let step = d - dp;
                        // arcsin has a vertical tangent at its right end, so
                        // the pi-slope Lipschitz bound only holds while the
                        // argument stays below ~0.94; past that continuity
                        // degrades to a Hoelder-1/2 modulus.
                        let interior = d / cap <= 0.94 && d <= 2.0 * 0.94;
                        let modulus = if interior {
                            slope_cap * step
                        } else {
                            slope_cap * step
                                + 2.5 * beta.sqrt().max(1.0) * (step * (p as f64).sqrt()).sqrt()
                        };
                        assert!((lo - lop).abs() <= modulus + 1e-9, "lower jump at {d}");
                        assert!((hi - hip).abs() <= modulus + 1e-9, "upper jump at {d}");
                        let slope = (lo - lop) / step;
                        assert!(slope + 1e-7 >= prev_slope, "convexity fails at {d}");
                        prev_slope = slope;
                    }
                    prev = Some((d, lo, hi));
                }
                // tangency at zero: initial slope equals min{1, sqrt(beta)}
                let eps = 1e-9;
                let s0 = lower_envelope(beta, p, eps).unwrap() / eps;
                assert!((s0 - chord).abs() < 1e-6);
            }
        }
    }
}
