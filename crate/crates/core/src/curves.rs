//! The explicit curve families: planar block rotations, the K(θ) family,
//! the flip geodesics γ_k, the spherical-cap great circle γ_S, the two
//! competing branches on St(3,2), and general exponential rays. Each family
//! evaluates in closed form with an exact velocity, so quadrature lengths can
//! be cross-checked against the known constants.
//!
//! All curves are parametrized over t ∈ [0, 1] regardless of their native
//! parameter range; speeds are scaled accordingly.

use nalgebra::DMatrix;

use crate::bounds::arcsin_clamped;
use crate::error::{Result, StiefelError};
use crate::manifold::{
    self, beta_norm_raw, orthonormality_error, BetaMetric, StiefelPoint, TangentVector,
};
use crate::numerics::{expm, gauss_legendre_unit, orthonormal_completion, psd_sqrt};

use std::f64::consts::PI;

/// The constants behind the odd-column-count flip geodesics: a 3×3 skew
/// block and a 1×3 row, both scaled by π√3/3, whose combined exponential
/// reaches −U in unit time under the Euclidean metric.
#[derive(Clone, Debug)]
pub struct SpecialTangentConstants {
    pub a_breve: DMatrix<f64>,
    pub b_breve: DMatrix<f64>,
}

impl SpecialTangentConstants {
    pub fn new() -> Self {
        let c = PI * 3f64.sqrt() / 3.0;
        SpecialTangentConstants {
            a_breve: DMatrix::from_row_slice(3, 3, &[0.0, c, -c, -c, 0.0, c, c, -c, 0.0]),
            b_breve: DMatrix::from_row_slice(1, 3, &[c, c, c]),
        }
    }

    /// The 4×4 block [[2Ă, −B̆ᵀ], [B̆, 0]].
    pub fn block(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(4, 4);
        m.view_mut((0, 0), (3, 3)).copy_from(&(&self.a_breve * 2.0));
        m.view_mut((0, 3), (3, 1))
            .copy_from(&(-self.b_breve.transpose()));
        m.view_mut((3, 0), (1, 3)).copy_from(&self.b_breve);
        m
    }
}

impl Default for SpecialTangentConstants {
    fn default() -> Self {
        Self::new()
    }
}

/// Block-diagonal rotation G_p(θ) ∈ SO(p) made of 2×2 blocks
/// [[cos, sin], [−sin, cos]]; p must be even.
pub fn block_rotation(p: usize, theta: f64) -> Result<DMatrix<f64>> {
    if p == 0 || !p.is_multiple_of(2) {
        return Err(StiefelError::invalid(format!(
            "block rotation needs a positive even size, got {p}"
        )));
    }
    let (c, s) = (theta.cos(), theta.sin());
    let mut g = DMatrix::zeros(p, p);
    for b in (0..p).step_by(2) {
        g[(b, b)] = c;
        g[(b, b + 1)] = s;
        g[(b + 1, b)] = -s;
        g[(b + 1, b + 1)] = c;
    }
    Ok(g)
}

/// Skew generator A_p(θ) of the block rotation: 2×2 blocks [[0, θ], [−θ, 0]];
/// satisfies expm(A_p(θ)) = G_p(θ).
pub fn skew_generator(p: usize, theta: f64) -> Result<DMatrix<f64>> {
    if p == 0 || !p.is_multiple_of(2) {
        return Err(StiefelError::invalid(format!(
            "skew generator needs a positive even size, got {p}"
        )));
    }
    let mut a = DMatrix::zeros(p, p);
    for b in (0..p).step_by(2) {
        a[(b, b + 1)] = theta;
        a[(b + 1, b)] = -theta;
    }
    Ok(a)
}

/// The 2p×2p rotation K(θ) = exp([[0, θI], [−θI, 0]]).
fn k_rotation(p: usize, theta: f64) -> DMatrix<f64> {
    let (c, s) = (theta.cos(), theta.sin());
    let mut k = DMatrix::zeros(2 * p, 2 * p);
    for i in 0..p {
        k[(i, i)] = c;
        k[(i, p + i)] = s;
        k[(p + i, i)] = -s;
        k[(p + i, p + i)] = c;
    }
    k
}

/// Flips the first k columns of U: h_k(U) = U·diag(−I_k, I_{p−k}).
/// The Frobenius distance to U is exactly 2√k.
pub fn flip(u: &StiefelPoint, k: usize) -> Result<StiefelPoint> {
    let p = u.p();
    if k == 0 || k > p {
        return Err(StiefelError::invalid(format!(
            "flip count must lie in 1..={p}, got {k}"
        )));
    }
    let mut m = u.matrix().clone();
    for j in 0..k {
        m.column_mut(j).neg_mut();
    }
    StiefelPoint::new(m)
}

/// Closed-form distance law along γ_k: geodesic distance tπ√k paired with
/// Frobenius distance 2√k·sin(tπ/2); the two satisfy
/// d = 2√k·arcsin(δ/(2√k)) identically.
pub fn gamma_k_distance_law(k: usize, t: f64) -> (f64, f64) {
    let sk = (k as f64).sqrt();
    (t * PI * sk, 2.0 * sk * (t * PI / 2.0).sin())
}

/// Midpoint, oriented half-chord, radius and cap solution for the
/// matrix-sphere through U and Ũ. The stored half-chord keeps the
/// R = (Ũ−U)/2 orientation; the great-circle curve negates it so the path
/// runs from U to Ũ. All blocks live in the padded space of
/// [`solve_cap_system`].
#[derive(Clone, Debug)]
pub struct CapGeometry {
    /// C = (U + Ũ)/2.
    pub c: DMatrix<f64>,
    /// R = (Ũ − U)/2.
    pub r_mat: DMatrix<f64>,
    /// r = ‖Ũ − U‖_F / 2.
    pub radius: f64,
    /// Solution of the cap system: S = Û·(RᵀR)^{1/2}.
    pub s: DMatrix<f64>,
}

/// Solves the cap system
///
/// ```text
/// UᵀX + XᵀU = 0,   ŨᵀX + XᵀŨ = 0,   XᵀX = RᵀR
/// ```
///
/// after padding both points with max(0, 3p − n) zero rows so a frame Û with
/// ÛᵀU = ÛᵀŨ = 0 exists. The returned geometry is expressed in the padded
/// space.
pub fn solve_cap_system(u: &StiefelPoint, v: &StiefelPoint) -> Result<CapGeometry> {
    if !u.same_shape(v) {
        return Err(StiefelError::invalid("cap system needs matching shapes"));
    }
    let p = u.p();
    let pad = (3 * p).saturating_sub(u.n());
    let up = u.pad_rows(pad);
    let vp = v.pad_rows(pad);
    let n = up.n();

    if n < 3 * p {
        return Err(StiefelError::invalid(
            "cap system needs n >= 3p after padding",
        ));
    }
    let c = (up.matrix() + vp.matrix()) * 0.5;
    let r_mat = (vp.matrix() - up.matrix()) * 0.5;
    let radius = r_mat.norm();

    // Householder QR of [U Ũ]: trailing completion columns are orthogonal to
    // the whole column span even when the pair is rank deficient.
    let mut pair = DMatrix::zeros(n, 2 * p);
    pair.view_mut((0, 0), (n, p)).copy_from(up.matrix());
    pair.view_mut((0, p), (n, p)).copy_from(vp.matrix());
    let (q_full, _) = crate::numerics::householder_qr_full(&pair);
    let u_hat = q_full.columns(2 * p, p).clone_owned();

    let y = psd_sqrt(&(r_mat.transpose() * &r_mat))?;
    let s = &u_hat * y;
    Ok(CapGeometry {
        c,
        r_mat,
        radius,
        s,
    })
}

/// Tags identifying which closed-form family a [`Curve`] belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurveFamily {
    PlanarRotation,
    KTheta,
    GammaK,
    GreatCircle,
    Branch1,
    Branch2,
    ExpRay,
}

impl CurveFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            CurveFamily::PlanarRotation => "planar_rotation",
            CurveFamily::KTheta => "k_theta",
            CurveFamily::GammaK => "gamma_k",
            CurveFamily::GreatCircle => "great_circle",
            CurveFamily::Branch1 => "branch1",
            CurveFamily::Branch2 => "branch2",
            CurveFamily::ExpRay => "exp_ray",
        }
    }
}

#[derive(Clone, Debug)]
enum CurveData {
    /// t ↦ U·Q·G_p(θt)·Qᵀ
    PlanarRotation {
        u: DMatrix<f64>,
        q: DMatrix<f64>,
        theta: f64,
    },
    /// t ↦ [U Û]·Q·K(θt)·Qᵀ·I_{2p×p}
    KTheta {
        frame: DMatrix<f64>,
        q: DMatrix<f64>,
        theta: f64,
        p: usize,
    },
    /// The minimal geodesic from U to h_k(U).
    GammaK {
        u: DMatrix<f64>,
        k: usize,
        u_perp: DMatrix<f64>,
        consts: SpecialTangentConstants,
    },
    /// t ↦ C + cos(πt)·Rc + sin(πt)·S with Rc = (U−Ũ)/2
    GreatCircle {
        c: DMatrix<f64>,
        rc: DMatrix<f64>,
        s: DMatrix<f64>,
    },
    /// t ↦ Exp_{β,U}(tΔ) through the cached (A, Q, B) blocks
    ExpRay {
        u: DMatrix<f64>,
        a: DMatrix<f64>,
        q_frame: DMatrix<f64>,
        b: DMatrix<f64>,
        beta: f64,
    },
}

/// A closed-form path t ∈ \[0,1\] → St(n,p) with exact velocity.
#[derive(Clone, Debug)]
pub struct Curve {
    family: CurveFamily,
    start: DMatrix<f64>,
    end: DMatrix<f64>,
    data: CurveData,
}

impl Curve {
    pub fn family(&self) -> CurveFamily {
        self.family
    }

    pub fn start(&self) -> Result<StiefelPoint> {
        StiefelPoint::new(self.start.clone())
    }

    pub fn end(&self) -> Result<StiefelPoint> {
        StiefelPoint::new(self.end.clone())
    }

    pub fn eval(&self, t: f64) -> Result<StiefelPoint> {
        StiefelPoint::new(self.eval_matrix(t)?)
    }

    /// Raw evaluation, used by the quadrature and grid checks.
    pub fn eval_matrix(&self, t: f64) -> Result<DMatrix<f64>> {
        match &self.data {
            CurveData::PlanarRotation { u, q, theta } => {
                let g = block_rotation(q.nrows(), theta * t)?;
                Ok(u * q * g * q.transpose())
            }
            CurveData::KTheta { frame, q, theta, p } => {
                let k = k_rotation(*p, theta * t);
                let rotated = frame * q * k * q.transpose();
                Ok(rotated.columns(0, *p).clone_owned())
            }
            CurveData::GammaK {
                u,
                k,
                u_perp,
                consts,
            } => gamma_k_eval(u, *k, u_perp, consts, t, false),
            CurveData::GreatCircle { c, rc, s } => Ok(c + rc * (PI * t).cos() + s * (PI * t).sin()),
            CurveData::ExpRay {
                u,
                a,
                q_frame,
                b,
                beta,
            } => manifold::exp_raw(&BetaMetric::new(*beta)?, u, &(a * t), q_frame, &(b * t)),
        }
    }

    /// Exact velocity γ̇(t) as an ambient n×p matrix.
    pub fn velocity(&self, t: f64) -> Result<DMatrix<f64>> {
        match &self.data {
            CurveData::PlanarRotation { u, q, theta } => {
                let p = q.nrows();
                let g = block_rotation(p, theta * t)?;
                let a = skew_generator(p, *theta)?;
                Ok(u * q * g * a * q.transpose())
            }
            CurveData::KTheta { frame, q, theta, p } => {
                let k = k_rotation(*p, theta * t);
                let mut omega = DMatrix::zeros(2 * p, 2 * p);
                for i in 0..*p {
                    omega[(i, p + i)] = *theta;
                    omega[(p + i, i)] = -*theta;
                }
                let v = frame * q * k * omega * q.transpose();
                Ok(v.columns(0, *p).clone_owned())
            }
            CurveData::GammaK {
                u,
                k,
                u_perp,
                consts,
            } => gamma_k_eval(u, *k, u_perp, consts, t, true),
            CurveData::GreatCircle { c: _, rc, s } => {
                Ok((s * (PI * t).cos() - rc * (PI * t).sin()) * PI)
            }
            CurveData::ExpRay {
                u,
                a,
                q_frame,
                b,
                beta,
            } => {
                let p = u.ncols();
                let qd = q_frame.ncols();
                let mut s_blk = DMatrix::zeros(p + qd, p + qd);
                s_blk
                    .view_mut((0, 0), (p, p))
                    .copy_from(&(a * (2.0 * beta)));
                if qd > 0 {
                    s_blk.view_mut((0, p), (p, qd)).copy_from(&(-b.transpose()));
                    s_blk.view_mut((p, 0), (qd, p)).copy_from(b);
                }
                let e = expm(&(&s_blk * t))?;
                let ra = expm(&(a * ((1.0 - 2.0 * beta) * t)))?;
                // d/dt [exp(tS) I exp((1-2b)tA)] = exp(tS)(S I + I (1-2b)A) exp((1-2b)tA)
                let mut inner = s_blk.columns(0, p).clone_owned();
                inner
                    .view_mut((0, 0), (p, p))
                    .add_assign_scaled(a, 1.0 - 2.0 * beta);
                let reduced = e * inner * ra;
                let top = reduced.rows(0, p).clone_owned();
                let out = if qd > 0 {
                    u * top + q_frame * reduced.rows(p, qd)
                } else {
                    u * top
                };
                Ok(out)
            }
        }
    }
}

trait AddAssignScaled {
    fn add_assign_scaled(&mut self, other: &DMatrix<f64>, factor: f64);
}

impl AddAssignScaled for nalgebra::DMatrixViewMut<'_, f64> {
    fn add_assign_scaled(&mut self, other: &DMatrix<f64>, factor: f64) {
        for (dst, src) in self.iter_mut().zip(other.iter()) {
            *dst += factor * src;
        }
    }
}

fn gamma_k_eval(
    u: &DMatrix<f64>,
    k: usize,
    u_perp: &DMatrix<f64>,
    consts: &SpecialTangentConstants,
    t: f64,
    velocity: bool,
) -> Result<DMatrix<f64>> {
    let (n, p) = u.shape();
    let mut out = DMatrix::zeros(n, p);
    if k.is_multiple_of(2) {
        let g = block_rotation(k, t * PI)?;
        let head = if velocity {
            u.columns(0, k) * g * skew_generator(k, PI)?
        } else {
            u.columns(0, k) * g
        };
        out.view_mut((0, 0), (n, k)).copy_from(&head);
        if !velocity {
            out.view_mut((0, k), (n, p - k))
                .copy_from(&u.columns(k, p - k));
        }
    } else if k == 1 {
        let (c, s) = ((t * PI).cos(), (t * PI).sin());
        let col = if velocity {
            (u_perp * c - u.columns(0, 1) * s) * PI
        } else {
            u.columns(0, 1) * c + u_perp * s
        };
        out.view_mut((0, 0), (n, 1)).copy_from(&col);
        if !velocity {
            out.view_mut((0, 1), (n, p - 1))
                .copy_from(&u.columns(1, p - 1));
        }
    } else {
        // k odd, k >= 3: block rotation on the first k-3 columns plus the
        // special 4-frame construction on columns k-2..k.
        let head = k - 3;
        if head > 0 {
            let g = block_rotation(head, t * PI)?;
            let rotated = if velocity {
                u.columns(0, head) * g * skew_generator(head, PI)?
            } else {
                u.columns(0, head) * g
            };
            out.view_mut((0, 0), (n, head)).copy_from(&rotated);
        }
        let mut frame = DMatrix::zeros(n, 4);
        frame
            .view_mut((0, 0), (n, 3))
            .copy_from(&u.columns(head, 3));
        frame.view_mut((0, 3), (n, 1)).copy_from(u_perp);
        let m = consts.block();
        let e = expm(&(&m * t))?;
        let ra = expm(&(&consts.a_breve * (-t)))?;
        let mid = if velocity {
            // exp(tM)(M I_{4x3} - I_{4x3} A) exp(-At)
            let mut inner = m.columns(0, 3).clone_owned();
            inner
                .view_mut((0, 0), (3, 3))
                .add_assign_scaled(&consts.a_breve, -1.0);
            frame * e * inner * ra
        } else {
            frame * e.columns(0, 3) * ra
        };
        out.view_mut((0, head), (n, 3)).copy_from(&mid);
        if !velocity {
            out.view_mut((0, k), (n, p - k))
                .copy_from(&u.columns(k, p - k));
        }
    }
    Ok(out)
}

/// Rotates in the span of U itself: t ↦ U·Q·G_p(θt)·Qᵀ. Constant β-speed
/// √(βp)·|θ|, endpoint Frobenius distance 2√p·|sin(θ/2)|.
pub fn planar_rotation_curve(u: &StiefelPoint, q: &DMatrix<f64>, theta: f64) -> Result<Curve> {
    let p = u.p();
    if !p.is_multiple_of(2) {
        return Err(StiefelError::invalid(
            "planar rotation curve needs an even frame size",
        ));
    }
    if q.shape() != (p, p) || orthonormality_error(q) > 1e-8 {
        return Err(StiefelError::invalid("Q must be a p×p orthogonal matrix"));
    }
    let end = u.matrix() * q * block_rotation(p, theta)? * q.transpose();
    Ok(Curve {
        family: CurveFamily::PlanarRotation,
        start: u.matrix().clone(),
        end,
        data: CurveData::PlanarRotation {
            u: u.matrix().clone(),
            q: q.clone(),
            theta,
        },
    })
}

/// The metric-independent family t ↦ [U Û]·Q·K(θt)·Qᵀ·I_{2p×p}; needs a
/// frame Û with ÛᵀU = 0, hence n ≥ 2p. Constant speed √p·|θ| for every β.
pub fn k_theta_curve(
    u: &StiefelPoint,
    u_hat: &StiefelPoint,
    q: &DMatrix<f64>,
    theta: f64,
) -> Result<Curve> {
    let (n, p) = (u.n(), u.p());
    if n < 2 * p {
        return Err(StiefelError::invalid("the K(θ) family needs n >= 2p"));
    }
    if !u.same_shape(u_hat) {
        return Err(StiefelError::invalid("U and Û must share shape"));
    }
    if (u_hat.matrix().transpose() * u.matrix()).norm() > 1e-8 {
        return Err(StiefelError::invalid("Û must satisfy ÛᵀU = 0"));
    }
    if q.shape() != (2 * p, 2 * p) || orthonormality_error(q) > 1e-8 {
        return Err(StiefelError::invalid("Q must be a 2p×2p orthogonal matrix"));
    }
    let mut frame = DMatrix::zeros(n, 2 * p);
    frame.view_mut((0, 0), (n, p)).copy_from(u.matrix());
    frame.view_mut((0, p), (n, p)).copy_from(u_hat.matrix());
    let end_full = &frame * q * k_rotation(p, theta) * q.transpose();
    Ok(Curve {
        family: CurveFamily::KTheta,
        start: u.matrix().clone(),
        end: end_full.columns(0, p).clone_owned(),
        data: CurveData::KTheta {
            frame,
            q: q.clone(),
            theta,
            p,
        },
    })
}

/// Minimal Euclidean geodesic γ_k from U to h_k(U) of length π√k. Odd k
/// consumes one orthonormal completion direction (the first column of the
/// completion of U), so odd k requires n > p.
pub fn gamma_k(u: &StiefelPoint, k: usize) -> Result<Curve> {
    let (n, p) = (u.n(), u.p());
    if k == 0 || k > p {
        return Err(StiefelError::invalid(format!(
            "gamma_k needs 1 <= k <= {p}, got {k}"
        )));
    }
    let u_perp = if k % 2 == 1 {
        if n == p {
            return Err(StiefelError::invalid(
                "odd flip geodesics need a completion direction (n > p)",
            ));
        }
        orthonormal_completion(u.matrix())
            .columns(0, 1)
            .clone_owned()
    } else {
        DMatrix::zeros(n, 0)
    };
    let end = flip(u, k)?.into_matrix();
    Ok(Curve {
        family: CurveFamily::GammaK,
        start: u.matrix().clone(),
        end,
        data: CurveData::GammaK {
            u: u.matrix().clone(),
            k,
            u_perp,
            consts: SpecialTangentConstants::new(),
        },
    })
}

/// Great circle on the matrix-sphere through U and Ũ: constant Euclidean
/// speed, length (π/2)·‖Ũ−U‖_F. The curve lives in the padded space when
/// n < 3p (see [`solve_cap_system`]); its length and manifold membership are
/// unaffected.
pub fn great_circle_curve(u: &StiefelPoint, v: &StiefelPoint) -> Result<Curve> {
    let d = manifold::frobenius_distance(u, v)?.value();
    if d <= 1e-14 {
        return Err(StiefelError::invalid(
            "great circle needs two distinct endpoints",
        ));
    }
    let cap = solve_cap_system(u, v)?;
    let rc = -&cap.r_mat; // (U - Ũ)/2, so the curve starts at U
    let start = &cap.c + &rc;
    let end = &cap.c - &rc;
    Ok(Curve {
        family: CurveFamily::GreatCircle,
        start,
        end,
        data: CurveData::GreatCircle {
            c: cap.c,
            rc,
            s: cap.s,
        },
    })
}

/// Geodesic ray t ↦ Exp_{β,U}(tΔ) as a curve object.
pub fn exp_ray(metric: &BetaMetric, tangent: &TangentVector) -> Result<Curve> {
    let u = tangent.base().matrix().clone();
    let a = tangent.vertical_block().clone();
    let q_frame = tangent.horizontal_frame().clone();
    let b = tangent.horizontal_block().clone();
    let end = manifold::exp_raw(metric, &u, &a, &q_frame, &b)?;
    Ok(Curve {
        family: CurveFamily::ExpRay,
        start: u.clone(),
        end,
        data: CurveData::ExpRay {
            u,
            a,
            q_frame,
            b,
            beta: metric.beta(),
        },
    })
}

/// The special tangent Δ = U·Ă + u_perp·B̆ at a frame with p = 3 whose
/// Euclidean exponential lands on −U; its norm is π√3.
pub fn antipode_tangent(u: &StiefelPoint, u_perp: &DMatrix<f64>) -> Result<TangentVector> {
    let (n, p) = (u.n(), u.p());
    if p != 3 {
        return Err(StiefelError::invalid(
            "the constant flip tangent is defined for p = 3",
        ));
    }
    if n < 4 {
        return Err(StiefelError::invalid("need n >= 4 for the extra direction"));
    }
    if u_perp.shape() != (n, 1)
        || (u_perp.transpose() * u.matrix()).norm() > 1e-8
        || (u_perp.norm() - 1.0).abs() > 1e-8
    {
        return Err(StiefelError::invalid(
            "u_perp must be a unit column orthogonal to U",
        ));
    }
    let consts = SpecialTangentConstants::new();
    let delta = u.matrix() * &consts.a_breve + u_perp * &consts.b_breve;
    manifold::decompose(u, &delta)
}

/// The two competing geodesic branches from U to −U on St(3,2) for β > 1:
/// γ1 rotates inside span(U) with length π√(2β); γ2 mixes in the normal
/// direction and is strictly shorter.
pub fn branch_pair(u: &StiefelPoint, beta: f64) -> Result<(Curve, Curve)> {
    if (u.n(), u.p()) != (3, 2) {
        return Err(StiefelError::invalid("the branch pair lives on St(3,2)"));
    }
    if beta.is_nan() || beta <= 1.0 {
        return Err(StiefelError::not_applicable(
            "the shorter branch only exists for beta > 1",
        ));
    }
    let metric = BetaMetric::new(beta)?;

    // gamma1 = planar rotation by pi, tagged as its own family
    let q = DMatrix::identity(2, 2);
    let mut g1 = planar_rotation_curve(u, &q, PI)?;
    g1.family = CurveFamily::Branch1;

    // gamma2: A = [[0, pi/(1-2b)], [-pi/(1-2b), 0]], ||B|| chosen so the
    // 3x3 block exponential closes up (eigenvalues 0, ±2πi).
    let th = PI / (1.0 - 2.0 * beta);
    let a = DMatrix::from_row_slice(2, 2, &[0.0, th, -th, 0.0]);
    let bnorm = 2.0 * PI * (1.0 - beta * beta / (1.0 - 2.0 * beta).powi(2)).sqrt();
    let b = DMatrix::from_row_slice(1, 2, &[bnorm, 0.0]);
    let u_perp = orthonormal_completion(u.matrix());
    let delta = u.matrix() * &a + &u_perp * &b;
    let tangent = manifold::decompose(u, &delta)?;
    let mut g2 = exp_ray(&metric, &tangent)?;
    g2.family = CurveFamily::Branch2;
    Ok((g1, g2))
}

/// Closed-form β-lengths (l(γ1), l(γ2)) of the two branches.
pub fn branch_lengths(beta: f64) -> Result<(f64, f64)> {
    if beta.is_nan() || beta <= 1.0 {
        return Err(StiefelError::not_applicable(
            "the shorter branch only exists for beta > 1",
        ));
    }
    let l1 = PI * (2.0 * beta).sqrt();
    let w = (1.0 - 2.0 * beta).powi(2);
    let l2 = PI * (2.0 * beta / w + 4.0 * (1.0 - beta * beta / w)).sqrt();
    Ok((l1, l2))
}

/// Composite Gauss-Legendre β-length of a curve; the norm is evaluated at
/// the moving base point. At 64 nodes the constant-speed families agree with
/// their closed forms to well below 1e-8.
pub fn curve_length(curve: &Curve, metric: &BetaMetric, n_quad: usize) -> Result<f64> {
    if n_quad < 32 {
        return Err(StiefelError::invalid("use at least 32 quadrature nodes"));
    }
    let (nodes, weights) = gauss_legendre_unit(n_quad);
    let mut total = 0.0;
    for (t, w) in nodes.iter().zip(weights.iter()) {
        let base = curve.eval_matrix(*t)?;
        let vel = curve.velocity(*t)?;
        total += w * beta_norm_raw(metric, &base, &vel);
    }
    Ok(total)
}

/// β-length of the first p−1 columns of the geodesic t ↦ Exp_{β,U}(tΔ),
/// together with ‖Δ‖_β. For β ≥ 1/2 the projected length never exceeds the
/// tangent norm (column-deletion inequality).
pub fn projected_curve_length(
    metric: &BetaMetric,
    tangent: &TangentVector,
    n_quad: usize,
) -> Result<(f64, f64)> {
    let p = tangent.base().p();
    if p < 2 {
        return Err(StiefelError::invalid(
            "column deletion needs at least two columns",
        ));
    }
    if metric.beta() < 0.5 {
        return Err(StiefelError::not_applicable(
            "the column-deletion inequality is stated for beta >= 1/2",
        ));
    }
    if n_quad < 32 {
        return Err(StiefelError::invalid("use at least 32 quadrature nodes"));
    }
    let ray = exp_ray(metric, tangent)?;
    let (nodes, weights) = gauss_legendre_unit(n_quad);
    let mut total = 0.0;
    for (t, w) in nodes.iter().zip(weights.iter()) {
        let base = ray.eval_matrix(*t)?.columns(0, p - 1).clone_owned();
        let vel = ray.velocity(*t)?.columns(0, p - 1).clone_owned();
        total += w * beta_norm_raw(metric, &base, &vel);
    }
    Ok((total, manifold::norm(metric, tangent)))
}

/// Initial growth rate of the β-distance against the Frobenius distance
/// along the ray of a unit-β-norm tangent: finds t with
/// ‖U − Exp(tΔ)‖_F = δ by bisection and returns t/δ. Within this scale the
/// ray is minimal, so t equals the geodesic distance.
pub fn slope_ratio(metric: &BetaMetric, tangent: &TangentVector, delta_small: f64) -> Result<f64> {
    if !(delta_small > 0.0 && delta_small <= 1e-3) {
        return Err(StiefelError::invalid("delta_small must lie in (0, 1e-3]"));
    }
    let nrm = manifold::norm(metric, tangent);
    if (nrm - 1.0).abs() > 1e-8 {
        return Err(StiefelError::invalid(format!(
            "tangent must have unit beta-norm, got {nrm}"
        )));
    }
    let ray = exp_ray(metric, tangent)?;
    let u = tangent.base().matrix();
    let gap = |t: f64| -> Result<f64> { Ok((ray.eval_matrix(t)? - u).norm() - delta_small) };
    let mut lo = 0.0;
    let mut hi = 10.0 * delta_small;
    let g_hi = gap(hi)?;
    if !g_hi.is_finite() || g_hi <= 0.0 {
        return Err(StiefelError::numerical(
            "bisection bracket [0, 10 delta] does not straddle the target gap",
        ));
    }
    // the Frobenius gap grows monotonically at this scale
    while hi - lo > 1e-7 * delta_small {
        let mid = 0.5 * (lo + hi);
        if gap(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi) / delta_small)
}

/// Convenience wrapper constructing the arcsin relation residual of the
/// distance law for a measured Frobenius distance.
pub fn distance_law_residual(k: usize, t: f64, measured_delta: f64) -> f64 {
    let sk = (k as f64).sqrt();
    let geo = t * PI * sk;
    (geo - 2.0 * sk * arcsin_clamped(measured_delta / (2.0 * sk))).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{frobenius_distance, norm};
    use crate::numerics::RandomSource;
    use approx::assert_abs_diff_eq;

    fn grid_manifold_residual(curve: &Curve) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            let m = curve.eval_matrix(t).unwrap();
            worst = worst.max(orthonormality_error(&m));
        }
        worst
    }

    #[test]
    fn special_constants_norms() {
        let c = SpecialTangentConstants::new();
        assert_abs_diff_eq!(c.a_breve.norm_squared(), 2.0 * PI * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(c.b_breve.norm_squared(), PI * PI, epsilon = 1e-12);
        assert!((&c.a_breve + c.a_breve.transpose()).norm() < 1e-15);
    }

    #[test]
    fn block_rotation_identities() {
        assert!(block_rotation(3, 0.1).is_err());
        let g0 = block_rotation(4, 0.0).unwrap();
        assert!((g0 - DMatrix::identity(4, 4)).norm() < 1e-15);
        let gpi = block_rotation(2, PI).unwrap();
        assert!((gpi + DMatrix::identity(2, 2)).norm() < 1e-12);
        for p in [2usize, 4, 6] {
            for theta in [0.3, 1.2, 2.9] {
                let g = block_rotation(p, theta).unwrap();
                let a = skew_generator(p, theta).unwrap();
                assert!((&g - expm(&a).unwrap()).norm() < 1e-12);
                let want = 4.0 * p as f64 * (theta / 2.0_f64).sin().powi(2);
                assert_abs_diff_eq!(
                    (DMatrix::identity(p, p) - &g).norm_squared(),
                    want,
                    epsilon = 1e-10
                );
            }
        }
    }

    #[test]
    fn planar_rotation_speed_and_endpoint() {
        let mut rng = RandomSource::new(21);
        let u = StiefelPoint::random(5, 2, &mut rng).unwrap();
        let q = crate::numerics::random_stiefel_matrix(2, 2, &mut rng).unwrap();

        // theta = 0 -> constant curve of zero length
        let c0 = planar_rotation_curve(&u, &q, 0.0).unwrap();
        assert_abs_diff_eq!(
            curve_length(&c0, &BetaMetric::euclidean(), 64).unwrap(),
            0.0,
            epsilon = 1e-14
        );

        // beta=1/2, p=2, theta=pi/2: length pi/2, endpoint distance 2
        let m = BetaMetric::canonical();
        let c = planar_rotation_curve(&u, &q, PI / 2.0).unwrap();
        assert_abs_diff_eq!(curve_length(&c, &m, 64).unwrap(), PI / 2.0, epsilon = 1e-10);
        let end = c.end().unwrap();
        assert_abs_diff_eq!(
            frobenius_distance(&u, &end).unwrap().value(),
            2.0,
            epsilon = 1e-10
        );

        // full rotation by pi hits delta = 2 sqrt(p), length pi sqrt(beta p)
        for beta in [0.25, 0.5, 1.0] {
            let mb = BetaMetric::new(beta).unwrap();
            let cpi = planar_rotation_curve(&u, &q, PI).unwrap();
            assert_abs_diff_eq!(
                curve_length(&cpi, &mb, 64).unwrap(),
                PI * (beta * 2.0).sqrt(),
                epsilon = 1e-9
            );
        }
        assert!(grid_manifold_residual(&c) < 1e-10);

        // odd p rejected
        let u3 = StiefelPoint::random(5, 3, &mut rng).unwrap();
        assert!(planar_rotation_curve(&u3, &DMatrix::identity(3, 3), 1.0).is_err());
    }

    #[test]
    fn k_theta_endpoint_and_speed() {
        let mut rng = RandomSource::new(22);
        let u = StiefelPoint::random(6, 2, &mut rng).unwrap();
        let comp = orthonormal_completion(u.matrix());
        let u_hat = StiefelPoint::new(comp.columns(0, 2).clone_owned()).unwrap();
        let q = DMatrix::identity(4, 4);

        let c = k_theta_curve(&u, &u_hat, &q, PI).unwrap();
        // theta = pi with Q = I ends at -U
        assert!((c.end().unwrap().matrix() + u.matrix()).norm() < 1e-12);
        assert!(grid_manifold_residual(&c) < 1e-10);

        // speed sqrt(p)|theta| independent of beta
        for beta in [0.5, 1.0, 3.0] {
            let m = BetaMetric::new(beta).unwrap();
            assert_abs_diff_eq!(
                curve_length(&c, &m, 64).unwrap(),
                PI * 2f64.sqrt(),
                epsilon = 1e-9
            );
        }

        // theta=0 constant
        let c0 = k_theta_curve(&u, &u_hat, &q, 0.0).unwrap();
        assert!((c0.end().unwrap().matrix() - u.matrix()).norm() < 1e-13);

        // random Q keeps the endpoint distance law delta = 2 sqrt(p)|sin(theta/2)|
        let qr = crate::numerics::random_stiefel_matrix(4, 4, &mut rng).unwrap();
        for theta in [0.4, 1.3, 2.8] {
            let ct = k_theta_curve(&u, &u_hat, &qr, theta).unwrap();
            let d = frobenius_distance(&u, &ct.end().unwrap()).unwrap().value();
            assert_abs_diff_eq!(
                d,
                2.0 * 2f64.sqrt() * (theta / 2.0_f64).sin().abs(),
                epsilon = 1e-10
            );
        }

        // n < 2p rejected
        let small = StiefelPoint::random(3, 2, &mut rng).unwrap();
        let fake = StiefelPoint::random(3, 2, &mut rng).unwrap();
        assert!(k_theta_curve(&small, &fake, &q, 1.0).is_err());
    }

    #[test]
    fn flip_properties() {
        let mut rng = RandomSource::new(23);
        let u = StiefelPoint::random(7, 4, &mut rng).unwrap();
        for k in 1..=4usize {
            let h = flip(&u, k).unwrap();
            let d = frobenius_distance(&u, &h).unwrap().value();
            assert_abs_diff_eq!(d, 2.0 * (k as f64).sqrt(), epsilon = 1e-12);
            let back = flip(&h, k).unwrap();
            assert!((back.matrix() - u.matrix()).norm() < 1e-14);
        }
        let full = flip(&u, 4).unwrap();
        assert!((full.matrix() + u.matrix()).norm() < 1e-14);
        assert!(flip(&u, 0).is_err());
        assert!(flip(&u, 5).is_err());
    }

    #[test]
    fn gamma_k_endpoints_lengths_and_law() {
        let mut rng = RandomSource::new(24);
        let u = StiefelPoint::random(8, 4, &mut rng).unwrap();
        let e = BetaMetric::euclidean();
        for k in 1..=4usize {
            let g = gamma_k(&u, k).unwrap();
            let want_end = flip(&u, k).unwrap();
            assert!(
                (g.end().unwrap().matrix() - want_end.matrix()).norm() < 1e-10,
                "endpoint fails for k={k}"
            );
            assert!((g.eval_matrix(0.0).unwrap() - u.matrix()).norm() < 1e-12);
            assert!(grid_manifold_residual(&g) < 1e-10);
            let len = curve_length(&g, &e, 64).unwrap();
            assert_abs_diff_eq!(len, PI * (k as f64).sqrt(), epsilon = 1e-8);

            // arcsin distance law on the grid
            for i in 0..=100 {
                let t = i as f64 / 100.0;
                let pt = g.eval_matrix(t).unwrap();
                let d = (pt - u.matrix()).norm();
                let (geo, frob) = gamma_k_distance_law(k, t);
                assert_abs_diff_eq!(d, frob, epsilon = 1e-9);
                assert!(
                    distance_law_residual(k, t, d) < 1e-8,
                    "law residual k={k} t={t}"
                );
                let _ = geo;
            }
        }
        // odd k on a square frame has no completion direction
        let sq = StiefelPoint::random(4, 4, &mut rng).unwrap();
        assert!(gamma_k(&sq, 1).is_err());
        assert!(gamma_k(&sq, 2).is_ok());
    }

    #[test]
    fn cap_system_residuals() {
        let mut rng = RandomSource::new(25);
        for _ in 0..20 {
            let u = StiefelPoint::random(9, 3, &mut rng).unwrap();
            let v = StiefelPoint::random(9, 3, &mut rng).unwrap();
            let cap = solve_cap_system(&u, &v).unwrap();
            let (us, vs) = (u.matrix(), v.matrix());
            let s = &cap.s;
            assert!((us.transpose() * s + s.transpose() * us).norm() < 1e-10);
            assert!((vs.transpose() * s + s.transpose() * vs).norm() < 1e-10);
            assert!((s.transpose() * s - cap.r_mat.transpose() * &cap.r_mat).norm() < 1e-10);
            assert!(cap.c.dot(&cap.r_mat).abs() < 1e-10);
            // spectral comparison of S'S and R'R
            let es = (s.transpose() * s).symmetric_eigen().eigenvalues;
            let er = (cap.r_mat.transpose() * &cap.r_mat)
                .symmetric_eigen()
                .eigenvalues;
            let mut es: Vec<f64> = es.iter().copied().collect();
            let mut er: Vec<f64> = er.iter().copied().collect();
            es.sort_by(f64::total_cmp);
            er.sort_by(f64::total_cmp);
            for (a, b) in es.iter().zip(er.iter()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
        // identical endpoints give the zero cap
        let u = StiefelPoint::random(9, 3, &mut rng).unwrap();
        let cap = solve_cap_system(&u, &u).unwrap();
        assert!(cap.r_mat.norm() < 1e-15);
        assert!(cap.s.norm() < 1e-15);
    }

    #[test]
    fn great_circle_properties() {
        let mut rng = RandomSource::new(26);
        let e = BetaMetric::euclidean();
        for _ in 0..10 {
            let u = StiefelPoint::random(9, 3, &mut rng).unwrap();
            let v = StiefelPoint::random(9, 3, &mut rng).unwrap();
            let c = great_circle_curve(&u, &v).unwrap();
            assert!((c.eval_matrix(0.0).unwrap() - u.matrix()).norm() < 1e-12);
            assert!((c.eval_matrix(1.0).unwrap() - v.matrix()).norm() < 1e-12);
            assert!(grid_manifold_residual(&c) < 1e-10);
            let d = frobenius_distance(&u, &v).unwrap().value();
            assert_abs_diff_eq!(
                curve_length(&c, &e, 64).unwrap(),
                PI / 2.0 * d,
                epsilon = 1e-8
            );
            // the curve stays on the cap sphere
            let cap = solve_cap_system(&u, &v).unwrap();
            for i in 0..=100 {
                let t = i as f64 / 100.0;
                let g = c.eval_matrix(t).unwrap();
                let dev = (&g - &cap.c).norm_squared() - cap.radius * cap.radius;
                assert!(dev.abs() < 1e-10);
            }
        }

        // antipodal pair: C = 0, great circle of radius sqrt(p)
        let u = StiefelPoint::random(9, 3, &mut rng).unwrap();
        let anti = u.negated();
        let c = great_circle_curve(&u, &anti).unwrap();
        let cap = solve_cap_system(&u, &anti).unwrap();
        assert!(cap.c.norm() < 1e-14);
        assert_abs_diff_eq!(cap.radius, 3f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(
            curve_length(&c, &e, 64).unwrap(),
            PI * 3f64.sqrt(),
            epsilon = 1e-8
        );
        assert!(great_circle_curve(&u, &u).is_err());

        // padding path: n < 3p still works, the curve lives in the padded
        // space and keeps the (pi/2) delta length
        let a = StiefelPoint::random(5, 3, &mut rng).unwrap();
        let b = StiefelPoint::random(5, 3, &mut rng).unwrap();
        let cp = great_circle_curve(&a, &b).unwrap();
        assert_eq!(cp.eval_matrix(0.0).unwrap().nrows(), 9);
        let d = frobenius_distance(&a, &b).unwrap().value();
        assert_abs_diff_eq!(
            curve_length(&cp, &e, 64).unwrap(),
            PI / 2.0 * d,
            epsilon = 1e-8
        );
        assert!((cp.eval_matrix(0.0).unwrap().rows(0, 5) - a.matrix()).norm() < 1e-12);
        assert!(grid_manifold_residual(&cp) < 1e-10);
    }

    #[test]
    fn antipode_tangent_reaches_antipode() {
        let mut rng = RandomSource::new(27);
        let u = StiefelPoint::random(6, 3, &mut rng).unwrap();
        let u_perp = orthonormal_completion(u.matrix())
            .columns(0, 1)
            .clone_owned();
        let t = antipode_tangent(&u, &u_perp).unwrap();
        let e = BetaMetric::euclidean();
        assert_abs_diff_eq!(norm(&e, &t), PI * 3f64.sqrt(), epsilon = 1e-10);
        assert_abs_diff_eq!(t.ambient().norm_squared(), 3.0 * PI * PI, epsilon = 1e-9);
        let c = SpecialTangentConstants::new();
        assert!((u.matrix().transpose() * t.ambient() - &c.a_breve).norm() < 1e-10);
        let out = manifold::exp(&e, &t).unwrap();
        assert!((out.matrix() + u.matrix()).norm() < 1e-10);

        let wrong = StiefelPoint::random(6, 2, &mut rng).unwrap();
        let wp = orthonormal_completion(wrong.matrix())
            .columns(0, 1)
            .clone_owned();
        assert!(antipode_tangent(&wrong, &wp).is_err());
    }

    #[test]
    fn branch_pair_lengths_and_endpoints() {
        let mut rng = RandomSource::new(28);
        let u = StiefelPoint::random(3, 2, &mut rng).unwrap();
        let (g1, g2) = branch_pair(&u, 2.0).unwrap();
        let m = BetaMetric::new(2.0).unwrap();
        let (l1, l2) = branch_lengths(2.0).unwrap();
        assert_abs_diff_eq!(l1, 2.0 * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(l2, PI * (8.0f64 / 3.0).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(curve_length(&g1, &m, 64).unwrap(), l1, epsilon = 1e-8);
        assert_abs_diff_eq!(curve_length(&g2, &m, 64).unwrap(), l2, epsilon = 1e-8);
        assert!((g1.end().unwrap().matrix() + u.matrix()).norm() < 1e-10);
        assert!((g2.end().unwrap().matrix() + u.matrix()).norm() < 1e-10);
        assert!(grid_manifold_residual(&g1) < 1e-10);
        assert!(grid_manifold_residual(&g2) < 1e-10);

        // strict inequality over a beta grid, converging as beta -> 1+
        for i in 1..=12 {
            let beta = 1.0 + 0.25 * i as f64;
            let (a, b) = branch_lengths(beta).unwrap();
            assert!(b < a, "l2 < l1 fails at beta={beta}");
        }
        let (a, b) = branch_lengths(1.0001).unwrap();
        assert!((a - b).abs() < 1e-3);
        assert!(branch_pair(&u, 1.0).is_err());
        assert!(branch_lengths(0.5).is_err());
    }

    #[test]
    fn exp_ray_matches_exp_and_has_consistent_velocity() {
        let mut rng = RandomSource::new(29);
        for beta in [0.5, 1.0, 2.0] {
            let m = BetaMetric::new(beta).unwrap();
            let u = StiefelPoint::random(7, 3, &mut rng).unwrap();
            let z = rng.gaussian_matrix(7, 3);
            let t = manifold::project_tangent(&u, &z).unwrap();
            let ray = exp_ray(&m, &t).unwrap();
            // endpoint agrees with exp
            let direct = manifold::exp(&m, &t).unwrap();
            assert!((ray.eval_matrix(1.0).unwrap() - direct.matrix()).norm() < 1e-12);
            // velocity at 0 is the tangent itself
            assert!((ray.velocity(0.0).unwrap() - t.ambient()).norm() < 1e-10);
            // velocity matches finite differences mid-curve
            let h = 1e-6;
            let fd =
                (ray.eval_matrix(0.5 + h).unwrap() - ray.eval_matrix(0.5 - h).unwrap()) / (2.0 * h);
            assert!((ray.velocity(0.5).unwrap() - fd).norm() < 1e-6);
            // quadrature length equals the tangent norm (geodesics have
            // constant speed)
            assert_abs_diff_eq!(
                curve_length(&ray, &m, 64).unwrap(),
                norm(&m, &t),
                epsilon = 1e-8
            );
        }
    }

    #[test]
    fn projected_length_inequality() {
        let mut rng = RandomSource::new(30);
        let mut worst: f64 = f64::NEG_INFINITY;
        for beta in [0.5, 0.75, 1.0] {
            let m = BetaMetric::new(beta).unwrap();
            for _ in 0..15 {
                let u = StiefelPoint::random(5, 3, &mut rng).unwrap();
                let z = rng.gaussian_matrix(5, 3);
                let mut t = manifold::project_tangent(&u, &z).unwrap();
                let n0 = norm(&m, &t);
                t = t.scaled(rng.uniform(0.2, 2.0) / n0);
                let (proj, full) = projected_curve_length(&m, &t, 64).unwrap();
                assert!(proj <= full + 1e-8, "inequality fails: {proj} > {full}");
                worst = worst.max(proj - full);
            }
        }
        assert!(worst <= 1e-8);

        // zero tangent projects to zero length
        let u = StiefelPoint::random(5, 3, &mut rng).unwrap();
        let z = TangentVector::zero(&u);
        let m = BetaMetric::canonical();
        let (proj, full) = projected_curve_length(&m, &z, 64).unwrap();
        assert_eq!((proj, full), (0.0, 0.0));

        // horizontal-only tangent: the projected speed is constant and the
        // length reduces to ||B|| with the last column dropped
        for beta in [0.5, 0.8, 1.0] {
            let mb = BetaMetric::new(beta).unwrap();
            let g = rng.gaussian_matrix(5, 3);
            let horiz = &g - u.matrix() * (u.matrix().transpose() * &g);
            let tb = manifold::decompose(&u, &horiz).unwrap();
            let (proj, full) = projected_curve_length(&mb, &tb, 64).unwrap();
            let b_trunc = tb.horizontal_block().columns(0, 2).norm();
            assert_abs_diff_eq!(proj, b_trunc, epsilon = 1e-8);
            assert!(proj <= full + 1e-12);
        }

        // beta < 1/2 not claimed
        let bad = BetaMetric::new(0.3).unwrap();
        let t = manifold::project_tangent(&u, &rng.gaussian_matrix(5, 3)).unwrap();
        assert!(matches!(
            projected_curve_length(&bad, &t, 64),
            Err(StiefelError::NotApplicable(_))
        ));
    }

    #[test]
    fn slope_ratio_pure_tangents() {
        let mut rng = RandomSource::new(31);
        let u = StiefelPoint::random(4, 2, &mut rng).unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        for beta in [0.25, 1.0, 1.5] {
            let m = BetaMetric::new(beta).unwrap();
            // pure vertical: ratio -> sqrt(beta)
            let tv = manifold::decompose(&u, &(u.matrix() * &a)).unwrap();
            let tv = tv.scaled(1.0 / norm(&m, &tv));
            let r = slope_ratio(&m, &tv, 1e-6).unwrap();
            assert_abs_diff_eq!(r, beta.sqrt(), epsilon = 1e-6);

            // pure horizontal: ratio -> 1 for every beta
            let z = rng.gaussian_matrix(4, 2);
            let horiz = &z - u.matrix() * (u.matrix().transpose() * &z);
            let th = manifold::decompose(&u, &horiz).unwrap();
            let th = th.scaled(1.0 / norm(&m, &th));
            let rh = slope_ratio(&m, &th, 1e-6).unwrap();
            assert_abs_diff_eq!(rh, 1.0, epsilon = 1e-6);
        }
        // non-unit tangent rejected
        let m = BetaMetric::euclidean();
        let t2 = manifold::decompose(&u, &(u.matrix() * &a)).unwrap();
        assert!(slope_ratio(&m, &t2.scaled(3.0 / norm(&m, &t2)), 1e-6).is_err());
        let tu = t2.scaled(1.0 / norm(&m, &t2));
        assert!(slope_ratio(&m, &tu, 1e-2).is_err());
    }
}
