//! Self-check suites behind `stiefel verify`: each named check replays one
//! module invariant at reduced sample counts and reports pass/fail with its
//! wall-clock time. The full-depth versions live in the test suite; this
//! runner exists so a deployed binary can vouch for itself.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::DMatrix;

use crate::bounds;
use crate::curves;
use crate::logmap::{self, LogOptions};
use crate::manifold::{self, orthonormality_error, BetaMetric, StiefelPoint};
use crate::numerics::{self, RandomSource};

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

fn run_check(name: &'static str, body: impl FnOnce() -> Result<String, String>) -> CheckResult {
    let start = Instant::now();
    let (passed, detail) = match body() {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    CheckResult {
        name,
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Runs every suite; deterministic, finishes well under a minute.
pub fn run_all(seed: u64) -> Vec<CheckResult> {
    vec![
        check_expm(seed),
        check_projection(seed),
        check_psd_sqrt(seed),
        check_exp_reduced_vs_full(seed),
        check_metric_monotonicity(seed),
        check_envelopes(),
        check_curves_on_manifold(seed),
        check_curve_lengths(seed),
        check_branch_inequality(seed),
        check_cap_membership(seed),
        check_flip_cap_surrogate(seed),
        check_log_roundtrip(seed),
        check_log_soundness(seed),
    ]
}

fn check_expm(seed: u64) -> CheckResult {
    run_check("expm inverse/orthogonality", move || {
        let mut rng = RandomSource::new(seed ^ 0x01);
        let mut worst: f64 = 0.0;
        for n in [2usize, 3, 5, 8] {
            for _ in 0..5 {
                let g = rng.gaussian_matrix(n, n);
                let mut s = numerics::skew_part(&g);
                let nrm = s.norm();
                if nrm > 10.0 {
                    s *= 10.0 / nrm;
                }
                let e = numerics::expm(&s).map_err(|e| e.to_string())?;
                let inv = numerics::expm(&(-&s)).map_err(|e| e.to_string())?;
                worst = worst
                    .max((&e * inv - DMatrix::identity(n, n)).norm())
                    .max((e.transpose() * &e - DMatrix::identity(n, n)).norm());
            }
        }
        if worst <= 1e-10 {
            Ok(format!("worst residual {worst:.2e}"))
        } else {
            Err(format!("residual {worst:.2e} exceeds 1e-10"))
        }
    })
}

fn check_projection(seed: u64) -> CheckResult {
    run_check("tangent projection identity/idempotence", move || {
        let mut rng = RandomSource::new(seed ^ 0x02);
        let mut worst: f64 = 0.0;
        for (n, p) in [(5usize, 2usize), (7, 3), (6, 5)] {
            for _ in 0..10 {
                let u =
                    numerics::random_stiefel_matrix(n, p, &mut rng).map_err(|e| e.to_string())?;
                let z = rng.gaussian_matrix(n, p);
                let d = numerics::project_tangent(&u, &z);
                worst = worst
                    .max((u.transpose() * &d + d.transpose() * &u).norm())
                    .max((numerics::project_tangent(&u, &d) - &d).norm());
            }
        }
        if worst <= 1e-12 {
            Ok(format!("worst residual {worst:.2e}"))
        } else {
            Err(format!("residual {worst:.2e} exceeds 1e-12"))
        }
    })
}

fn check_psd_sqrt(seed: u64) -> CheckResult {
    run_check("psd sqrt squares back", move || {
        let mut rng = RandomSource::new(seed ^ 0x03);
        let mut worst: f64 = 0.0;
        for n in [2usize, 4, 6] {
            for _ in 0..10 {
                let g = rng.gaussian_matrix(n, n);
                let p = g.transpose() * &g;
                let s = numerics::psd_sqrt(&p).map_err(|e| e.to_string())?;
                worst = worst.max((&s * &s - p).norm());
            }
        }
        if worst <= 1e-10 {
            Ok(format!("worst residual {worst:.2e}"))
        } else {
            Err(format!("residual {worst:.2e} exceeds 1e-10"))
        }
    })
}

fn check_exp_reduced_vs_full(seed: u64) -> CheckResult {
    run_check("reduced exp matches full-block oracle", move || {
        let mut rng = RandomSource::new(seed ^ 0x04);
        let mut worst: f64 = 0.0;
        for beta in [0.5, 1.0, 2.0] {
            let m = BetaMetric::new(beta).map_err(|e| e.to_string())?;
            for (n, p) in [(5usize, 2usize), (9, 3), (6, 5), (12, 4)] {
                let u = StiefelPoint::random(n, p, &mut rng).map_err(|e| e.to_string())?;
                let z = rng.gaussian_matrix(n, p);
                let t = manifold::project_tangent(&u, &z).map_err(|e| e.to_string())?;
                let red = manifold::exp(&m, &t).map_err(|e| e.to_string())?;
                let full = manifold::exp_full(&m, &t).map_err(|e| e.to_string())?;
                worst = worst
                    .max((red.matrix() - full.matrix()).norm())
                    .max(orthonormality_error(red.matrix()));
            }
        }
        if worst <= 1e-10 {
            Ok(format!("worst deviation {worst:.2e}"))
        } else {
            Err(format!("deviation {worst:.2e} exceeds 1e-10"))
        }
    })
}

fn check_metric_monotonicity(seed: u64) -> CheckResult {
    run_check("beta-norm monotone in beta", move || {
        let mut rng = RandomSource::new(seed ^ 0x05);
        let u = StiefelPoint::random(6, 3, &mut rng).map_err(|e| e.to_string())?;
        let betas = [0.1f64, 0.4, 1.0, 1.7, 3.0];
        for _ in 0..20 {
            let z = rng.gaussian_matrix(6, 3);
            let t = manifold::project_tangent(&u, &z).map_err(|e| e.to_string())?;
            let mut prev = 0.0;
            for (i, b) in betas.iter().enumerate() {
                let m = BetaMetric::new(*b).map_err(|e| e.to_string())?;
                let nn = manifold::norm(&m, &t);
                if nn + 1e-12 < prev {
                    return Err(format!("norm decreased between betas at index {i}"));
                }
                if i > 0 {
                    let factor = (betas[i] / betas[i - 1]).sqrt();
                    if nn > factor * prev + 1e-12 {
                        return Err("Lipschitz factor violated".to_string());
                    }
                }
                prev = nn;
            }
        }
        Ok("monotone with the sqrt(beta ratio) factor".to_string())
    })
}

fn check_envelopes() -> CheckResult {
    run_check("envelope ordering and duality", move || {
        for beta in [0.25f64, 0.5, 1.0, 2.0] {
            for p in [1usize, 2, 3, 5] {
                let cap = 2.0 * (p as f64).sqrt();
                for i in 0..=400 {
                    let d = cap * i as f64 / 400.0;
                    let lo = bounds::lower_envelope(beta, p, d).map_err(|e| e.to_string())?;
                    let hi = bounds::upper_envelope(beta, p, d).map_err(|e| e.to_string())?;
                    if !(lo >= -1e-12 && lo <= hi + 1e-9) {
                        return Err(format!("ordering fails at beta={beta} p={p} d={d}"));
                    }
                    if lo + 1e-12 < beta.sqrt().min(1.0) * d {
                        return Err(format!("chord fails at beta={beta} p={p} d={d}"));
                    }
                    if p % 2 == 1 && (0.5..=1.0).contains(&beta) {
                        let w = bounds::w_upper_on_lower(beta, p, d).map_err(|e| e.to_string())?;
                        if w + 1e-9 < lo {
                            return Err(format!("w below m-hat at beta={beta} p={p} d={d}"));
                        }
                    }
                }
                let pair = bounds::lipschitz(beta, 1.0).map_err(|e| e.to_string())?;
                let dual = bounds::lipschitz(1.0, beta).map_err(|e| e.to_string())?;
                if (pair.lo * dual.hi - 1.0).abs() > 1e-12 {
                    return Err("lipschitz duality broken".to_string());
                }
            }
        }
        Ok("ordering, chord, w-dominance, duality hold".to_string())
    })
}

fn check_curves_on_manifold(seed: u64) -> CheckResult {
    run_check("curve families stay on the manifold", move || {
        let mut rng = RandomSource::new(seed ^ 0x06);
        let mut worst: f64 = 0.0;
        let mut probe = |curve: &curves::Curve| -> Result<(), String> {
            for i in 0..=100 {
                let t = i as f64 / 100.0;
                let m = curve.eval_matrix(t).map_err(|e| e.to_string())?;
                worst = worst.max(orthonormality_error(&m));
            }
            Ok(())
        };
        let u = StiefelPoint::random(8, 4, &mut rng).map_err(|e| e.to_string())?;
        for k in 1..=4usize {
            probe(&curves::gamma_k(&u, k).map_err(|e| e.to_string())?)?;
        }
        let q = numerics::random_stiefel_matrix(4, 4, &mut rng).map_err(|e| e.to_string())?;
        probe(&curves::planar_rotation_curve(&u, &q, 2.1).map_err(|e| e.to_string())?)?;
        let comp = numerics::orthonormal_completion(u.matrix());
        let u_hat =
            StiefelPoint::new(comp.columns(0, 4).clone_owned()).map_err(|e| e.to_string())?;
        let q2 = numerics::random_stiefel_matrix(8, 8, &mut rng).map_err(|e| e.to_string())?;
        probe(&curves::k_theta_curve(&u, &u_hat, &q2, 1.9).map_err(|e| e.to_string())?)?;
        let v = StiefelPoint::random(8, 4, &mut rng).map_err(|e| e.to_string())?;
        probe(&curves::great_circle_curve(&u, &v).map_err(|e| e.to_string())?)?;
        if worst <= 1e-10 {
            Ok(format!("worst manifold residual {worst:.2e}"))
        } else {
            Err(format!("manifold residual {worst:.2e} exceeds 1e-10"))
        }
    })
}

fn check_curve_lengths(seed: u64) -> CheckResult {
    run_check("quadrature matches closed-form lengths", move || {
        let mut rng = RandomSource::new(seed ^ 0x07);
        let e = BetaMetric::euclidean();
        let u = StiefelPoint::random(8, 4, &mut rng).map_err(|e| e.to_string())?;
        let mut worst: f64 = 0.0;
        for k in 1..=4usize {
            let g = curves::gamma_k(&u, k).map_err(|e| e.to_string())?;
            let len = curves::curve_length(&g, &e, 64).map_err(|e| e.to_string())?;
            worst = worst.max((len - PI * (k as f64).sqrt()).abs());
        }
        let v = StiefelPoint::random(8, 4, &mut rng).map_err(|e| e.to_string())?;
        let gc = curves::great_circle_curve(&u, &v).map_err(|e| e.to_string())?;
        let d = manifold::frobenius_distance(&u, &v)
            .map_err(|e| e.to_string())?
            .value();
        let len = curves::curve_length(&gc, &e, 64).map_err(|e| e.to_string())?;
        worst = worst.max((len - PI / 2.0 * d).abs());
        if worst <= 1e-8 {
            Ok(format!("worst length error {worst:.2e}"))
        } else {
            Err(format!("length error {worst:.2e} exceeds 1e-8"))
        }
    })
}

fn check_branch_inequality(seed: u64) -> CheckResult {
    run_check("shorter branch exists above beta = 1", move || {
        let mut rng = RandomSource::new(seed ^ 0x08);
        let u = StiefelPoint::random(3, 2, &mut rng).map_err(|e| e.to_string())?;
        for i in 1..=12 {
            let beta = 1.0 + 0.25 * i as f64;
            let m = BetaMetric::new(beta).map_err(|e| e.to_string())?;
            let (g1, g2) = curves::branch_pair(&u, beta).map_err(|e| e.to_string())?;
            let l1 = curves::curve_length(&g1, &m, 64).map_err(|e| e.to_string())?;
            let l2 = curves::curve_length(&g2, &m, 64).map_err(|e| e.to_string())?;
            let (w1, w2) = curves::branch_lengths(beta).map_err(|e| e.to_string())?;
            if (l1 - w1).abs() > 1e-8 || (l2 - w2).abs() > 1e-8 {
                return Err(format!("closed forms drift at beta={beta}"));
            }
            if l2 >= l1 {
                return Err(format!("no strict inequality at beta={beta}"));
            }
            let e1 = (g1.end().map_err(|e| e.to_string())?.matrix() + u.matrix()).norm();
            let e2 = (g2.end().map_err(|e| e.to_string())?.matrix() + u.matrix()).norm();
            if e1 > 1e-10 || e2 > 1e-10 {
                return Err(format!("branch endpoints miss -U at beta={beta}"));
            }
        }
        Ok("strict l2 < l1 on the beta grid".to_string())
    })
}

fn check_cap_membership(seed: u64) -> CheckResult {
    run_check("great circle rides the cap sphere", move || {
        let mut rng = RandomSource::new(seed ^ 0x09);
        let mut worst: f64 = 0.0;
        for _ in 0..5 {
            let u = StiefelPoint::random(9, 3, &mut rng).map_err(|e| e.to_string())?;
            let v = StiefelPoint::random(9, 3, &mut rng).map_err(|e| e.to_string())?;
            let cap = curves::solve_cap_system(&u, &v).map_err(|e| e.to_string())?;
            let gc = curves::great_circle_curve(&u, &v).map_err(|e| e.to_string())?;
            for i in 0..=100 {
                let t = i as f64 / 100.0;
                let g = gc.eval_matrix(t).map_err(|e| e.to_string())?;
                worst = worst.max(((&g - &cap.c).norm_squared() - cap.radius * cap.radius).abs());
            }
        }
        if worst <= 1e-10 {
            Ok(format!("worst sphere residual {worst:.2e}"))
        } else {
            Err(format!("sphere residual {worst:.2e} exceeds 1e-10"))
        }
    })
}

fn check_flip_cap_surrogate(seed: u64) -> CheckResult {
    run_check("flip midpoints leave the open cap empty", move || {
        let mut rng = RandomSource::new(seed ^ 0x0a);
        let u = StiefelPoint::random(8, 4, &mut rng).map_err(|e| e.to_string())?;
        for k in 1..=3usize {
            let h = curves::flip(&u, k).map_err(|e| e.to_string())?;
            let c = (u.matrix() + h.matrix()) * 0.5;
            let bound = (4 - k) as f64;
            for _ in 0..3334 {
                let x = StiefelPoint::random(8, 4, &mut rng).map_err(|e| e.to_string())?;
                let inner = x.matrix().dot(&c);
                if inner > bound + 1e-9 {
                    return Err(format!("cap surrogate violated at k={k}: {inner}"));
                }
            }
        }
        Ok("<X, C> <= p - k on 10002 random frames".to_string())
    })
}

fn check_log_roundtrip(seed: u64) -> CheckResult {
    run_check("log recovers constructed tangents", move || {
        let mut rng = RandomSource::new(seed ^ 0x0b);
        let opts = LogOptions::default();
        let mut worst: f64 = 0.0;
        for beta in [0.5, 1.0, 2.0] {
            let metric = BetaMetric::new(beta).map_err(|e| e.to_string())?;
            for _ in 0..10 {
                let u = StiefelPoint::random(5, 3, &mut rng).map_err(|e| e.to_string())?;
                let z = rng.gaussian_matrix(5, 3);
                let mut t = manifold::project_tangent(&u, &z).map_err(|e| e.to_string())?;
                let scale = 0.5 * beta.sqrt().min(1.0) * PI * rng.uniform(0.05, 1.0);
                t = t.scaled(scale / manifold::norm(&metric, &t));
                let target = manifold::exp(&metric, &t).map_err(|e| e.to_string())?;
                let res =
                    logmap::log_shooting(&metric, &u, &target, &opts).map_err(|e| e.to_string())?;
                if !res.certificate.converged() {
                    return Err(format!("roundtrip failed to converge at beta={beta}"));
                }
                worst = worst.max((res.length - scale).abs());
            }
        }
        if worst <= 1e-8 {
            Ok(format!("worst length error {worst:.2e}"))
        } else {
            Err(format!("length error {worst:.2e} exceeds 1e-8"))
        }
    })
}

fn check_log_soundness(seed: u64) -> CheckResult {
    run_check("converged logs respect the lower envelope", move || {
        let mut rng = RandomSource::new(seed ^ 0x0c);
        let opts = LogOptions::default();
        let mut converged = 0;
        for beta in [0.5, 1.0, 2.0] {
            let metric = BetaMetric::new(beta).map_err(|e| e.to_string())?;
            for _ in 0..8 {
                let u = StiefelPoint::random(5, 3, &mut rng).map_err(|e| e.to_string())?;
                let v = StiefelPoint::random(5, 3, &mut rng).map_err(|e| e.to_string())?;
                let res =
                    logmap::log_shooting(&metric, &u, &v, &opts).map_err(|e| e.to_string())?;
                if !res.certificate.converged() {
                    continue;
                }
                converged += 1;
                let d = manifold::frobenius_distance(&u, &v)
                    .map_err(|e| e.to_string())?
                    .value();
                let lower = bounds::lower_envelope(beta, 3, d).map_err(|e| e.to_string())?;
                if res.length < lower - 1e-8 {
                    return Err(format!(
                        "length {} below envelope {lower} at beta={beta}",
                        res.length
                    ));
                }
            }
        }
        if converged >= 20 {
            Ok(format!("{converged}/24 Haar pairs converged, all sound"))
        } else {
            Err(format!("only {converged}/24 Haar pairs converged"))
        }
    })
}
