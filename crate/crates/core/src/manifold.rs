//! The Stiefel manifold St(n,p) = { U ∈ ℝⁿˣᵖ | UᵀU = I_p } together with the
//! one-parameter β-metric family
//!
//! ```text
//! ⟨Δ, Δ̃⟩_β = Tr(Δᵀ(I − (1−β)UUᵀ)Δ̃) = β·Tr(AᵀÃ) + Tr(BᵀB̃),   β > 0,
//! ```
//!
//! where Δ = UA + QB splits a tangent vector into its vertical (skew A = UᵀΔ)
//! and horizontal (QB = (I−UUᵀ)Δ) parts. β = 1 is the Euclidean metric,
//! β = 1/2 the canonical one.
//!
//! The Riemannian exponential is evaluated in the reduced form
//!
//! ```text
//! Exp_{β,U}(Δ) = [U Q] · exp([[2βA, −Bᵀ], [B, 0]]) · I_{(p+q)×p} · exp((1−2β)A)
//! ```
//!
//! with q = min(p, n−p), which keeps the inner exponential at size p+q
//! instead of n. The full n×n form is retained as a test oracle in
//! [`exp_full`].

use nalgebra::DMatrix;

use crate::error::{Result, StiefelError};
use crate::numerics::{self, expm, orthonormal_completion, skew_part, RandomSource};

/// Orthonormality tolerance accepted verbatim on user-supplied matrices.
pub const POINT_TOL_ACCEPT: f64 = 1e-8;
/// Between [`POINT_TOL_ACCEPT`] and this bound, inputs are re-orthonormalized
/// by thin QR; beyond it they are rejected.
pub const POINT_TOL_REPAIR: f64 = 1e-4;
/// Same two-stage policy for tangency of user-supplied tangent directions.
pub const TANGENT_TOL_ACCEPT: f64 = 1e-8;
pub const TANGENT_TOL_REPAIR: f64 = 1e-4;

/// A point of St(n,p): an n×p matrix with orthonormal columns.
#[derive(Clone, Debug, PartialEq)]
pub struct StiefelPoint {
    matrix: DMatrix<f64>,
}

impl StiefelPoint {
    /// Wraps a user-supplied matrix. Orthonormality drift up to 1e-8 is
    /// accepted as-is, drift up to 1e-4 is repaired by thin QR, anything
    /// worse is rejected.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let (n, p) = matrix.shape();
        if p == 0 || n < p {
            return Err(StiefelError::invalid(format!(
                "a Stiefel point needs n >= p >= 1, got {n}x{p}"
            )));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(StiefelError::invalid("point has non-finite entries"));
        }
        let err = orthonormality_error(&matrix);
        if err <= POINT_TOL_ACCEPT {
            return Ok(StiefelPoint { matrix });
        }
        if err <= POINT_TOL_REPAIR {
            let (q, r) = numerics::householder_qr_full(&matrix);
            let mut repaired = q.columns(0, p).clone_owned();
            for j in 0..p {
                if r[(j, j)] < 0.0 {
                    repaired.column_mut(j).neg_mut();
                }
            }
            return Ok(StiefelPoint { matrix: repaired });
        }
        Err(StiefelError::invalid(format!(
            "matrix is not orthonormal: ||U'U - I|| = {err:.3e}"
        )))
    }

    /// Identity frame I_{n×p}.
    pub fn identity_frame(n: usize, p: usize) -> Result<Self> {
        if p == 0 || n < p {
            return Err(StiefelError::invalid(format!(
                "identity frame needs n >= p >= 1, got {n}x{p}"
            )));
        }
        Ok(StiefelPoint {
            matrix: DMatrix::identity(n, p),
        })
    }

    /// Haar-random frame, deterministic per seed state.
    pub fn random(n: usize, p: usize, rng: &mut RandomSource) -> Result<Self> {
        Ok(StiefelPoint {
            matrix: numerics::random_stiefel_matrix(n, p, rng)?,
        })
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn p(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    /// The point −U (antipode on the ambient sphere of radius √p).
    pub fn negated(&self) -> StiefelPoint {
        StiefelPoint {
            matrix: -self.matrix.clone(),
        }
    }

    /// Appends N zero rows, embedding St(n,p) into St(n+N,p). Geodesic
    /// distances are unchanged by this embedding when n ≥ 2p.
    pub fn pad_rows(&self, extra: usize) -> StiefelPoint {
        if extra == 0 {
            return self.clone();
        }
        let (n, p) = self.matrix.shape();
        let mut m = DMatrix::zeros(n + extra, p);
        m.view_mut((0, 0), (n, p)).copy_from(&self.matrix);
        StiefelPoint { matrix: m }
    }

    pub fn same_shape(&self, other: &StiefelPoint) -> bool {
        self.matrix.shape() == other.matrix.shape()
    }

    pub(crate) fn same_base(&self, other: &StiefelPoint) -> bool {
        self.same_shape(other) && (&self.matrix - &other.matrix).norm() <= 1e-12
    }
}

pub fn orthonormality_error(m: &DMatrix<f64>) -> f64 {
    let p = m.ncols();
    (m.transpose() * m - DMatrix::identity(p, p)).norm()
}

/// The metric parameter. β = 1 is Euclidean, β = 1/2 canonical.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaMetric {
    beta: f64,
}

impl BetaMetric {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(StiefelError::invalid(format!(
                "metric parameter must be positive and finite, got {beta}"
            )));
        }
        Ok(BetaMetric { beta })
    }

    pub fn euclidean() -> Self {
        BetaMetric { beta: 1.0 }
    }

    pub fn canonical() -> Self {
        BetaMetric { beta: 0.5 }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Frobenius distance between two frames, clamped into its exact range
/// [0, 2√p]; overshoots beyond 1e-10 indicate invalid points and are
/// rejected.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrobDistance {
    delta: f64,
    p: usize,
}

impl FrobDistance {
    pub fn new(delta: f64, p: usize) -> Result<Self> {
        let cap = 2.0 * (p as f64).sqrt();
        if !delta.is_finite() || delta < -1e-10 || delta > cap + 1e-10 {
            return Err(StiefelError::invalid(format!(
                "Frobenius distance {delta} outside [0, {cap}]"
            )));
        }
        Ok(FrobDistance {
            delta: delta.clamp(0.0, cap),
            p,
        })
    }

    pub fn value(&self) -> f64 {
        self.delta
    }

    /// The largest possible value 2√p on this manifold.
    pub fn max_value(&self) -> f64 {
        2.0 * (self.p as f64).sqrt()
    }
}

/// Tangent vector at a base point, stored in ambient form together with its
/// cached reduced decomposition Δ = U·A + Q·B, where A = UᵀΔ is skew, Q has
/// q = min(p, n−p) orthonormal columns with QᵀU = 0, and QB = (I−UUᵀ)Δ.
#[derive(Clone, Debug)]
pub struct TangentVector {
    base: StiefelPoint,
    delta: DMatrix<f64>,
    a: DMatrix<f64>,
    q_frame: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl TangentVector {
    pub fn base(&self) -> &StiefelPoint {
        &self.base
    }

    pub fn ambient(&self) -> &DMatrix<f64> {
        &self.delta
    }

    /// The skew block A = UᵀΔ.
    pub fn vertical_block(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// The frame Q of the horizontal part.
    pub fn horizontal_frame(&self) -> &DMatrix<f64> {
        &self.q_frame
    }

    /// The coefficient block B with QB = (I−UUᵀ)Δ.
    pub fn horizontal_block(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn zero(base: &StiefelPoint) -> TangentVector {
        let (n, p) = base.matrix.shape();
        let q = p.min(n - p);
        TangentVector {
            base: base.clone(),
            delta: DMatrix::zeros(n, p),
            a: DMatrix::zeros(p, p),
            q_frame: DMatrix::zeros(n, q),
            b: DMatrix::zeros(q, p),
        }
    }

    pub fn scaled(&self, factor: f64) -> TangentVector {
        TangentVector {
            base: self.base.clone(),
            delta: &self.delta * factor,
            a: &self.a * factor,
            q_frame: self.q_frame.clone(),
            b: &self.b * factor,
        }
    }
}

/// Splits an ambient direction Z at U into the cached (A, Q, B) form.
///
/// Tangency ‖UᵀZ + ZᵀU‖_F up to 1e-8 is accepted, up to 1e-4 the direction is
/// re-projected onto the tangent space, beyond that it is rejected. Q always
/// has exactly q = min(p, n−p) columns; when (I−UUᵀ)Z is rank deficient the
/// trailing rows of B are zero and Q is padded with completion columns, which
/// leaves the exponential unchanged.
pub fn decompose(base: &StiefelPoint, z: &DMatrix<f64>) -> Result<TangentVector> {
    let (n, p) = base.matrix.shape();
    if z.shape() != (n, p) {
        return Err(StiefelError::invalid(format!(
            "direction shape {:?} does not match point shape {:?}",
            z.shape(),
            (n, p)
        )));
    }
    let u = &base.matrix;
    let utz = u.transpose() * z;
    let tangency = (&utz + utz.transpose()).norm();
    let delta = if tangency <= TANGENT_TOL_ACCEPT {
        z.clone()
    } else if tangency <= TANGENT_TOL_REPAIR {
        numerics::project_tangent(u, z)
    } else {
        return Err(StiefelError::invalid(format!(
            "direction is not tangent: ||U'Z + Z'U|| = {tangency:.3e}"
        )));
    };

    let a = skew_part(&(u.transpose() * &delta));
    let horizontal = &delta - u * (u.transpose() * &delta);
    let q_dim = p.min(n - p);

    let (q_frame, b) = if n - p <= p {
        // the completion itself is small enough to serve as the frame
        let q = orthonormal_completion(u);
        let b = q.transpose() * &delta;
        (q, b)
    } else {
        thin_pivoted_frame(u, &horizontal, q_dim)
    };

    Ok(TangentVector {
        base: base.clone(),
        delta,
        a,
        q_frame,
        b,
    })
}

/// Rank-revealing thin factorization QB = K with QᵀU = 0, used when
/// n − p > p. Trailing zero rows of B correspond to completion padding of Q.
fn thin_pivoted_frame(
    u: &DMatrix<f64>,
    k: &DMatrix<f64>,
    q_dim: usize,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let (n, p) = k.shape();
    debug_assert_eq!(q_dim, p);
    let qr = k.clone().col_piv_qr();
    let q_thin = qr.q();
    let r = qr.r();
    let perm = qr.p();

    let diag_scale = r[(0, 0)].abs().max(1e-300);
    let mut rank = 0;
    for i in 0..p.min(r.nrows()) {
        if r[(i, i)].abs() > 1e-12 * diag_scale && r[(i, i)].abs() > 1e-14 {
            rank = i + 1;
        } else {
            break;
        }
    }

    // K P = Q R  =>  K = Q (R P^{-1})
    let mut b = DMatrix::zeros(q_dim, p);
    b.view_mut((0, 0), (r.nrows().min(q_dim), p))
        .copy_from(&r.view((0, 0), (r.nrows().min(q_dim), p)));
    perm.inv_permute_columns(&mut b);
    for i in rank..q_dim {
        b.row_mut(i).fill(0.0);
    }

    let mut q_frame = DMatrix::zeros(n, q_dim);
    q_frame
        .view_mut((0, 0), (n, rank))
        .copy_from(&q_thin.view((0, 0), (n, rank)));
    if rank < q_dim {
        // pad with directions orthogonal to both U and the used columns
        let mut span = DMatrix::zeros(n, p + rank);
        span.view_mut((0, 0), (n, p)).copy_from(u);
        span.view_mut((0, p), (n, rank))
            .copy_from(&q_thin.view((0, 0), (n, rank)));
        let completion = orthonormal_completion(&span);
        q_frame
            .view_mut((0, rank), (n, q_dim - rank))
            .copy_from(&completion.view((0, 0), (n, q_dim - rank)));
    }
    (q_frame, b)
}

/// Tangent projection returning a cached tangent vector:
/// Δ = U·skew(UᵀZ) + (I − UUᵀ)Z.
pub fn project_tangent(base: &StiefelPoint, z: &DMatrix<f64>) -> Result<TangentVector> {
    let (n, p) = base.matrix.shape();
    if z.shape() != (n, p) {
        return Err(StiefelError::invalid(format!(
            "direction shape {:?} does not match point shape {:?}",
            z.shape(),
            (n, p)
        )));
    }
    decompose(base, &numerics::project_tangent(&base.matrix, z))
}

/// β-inner product of two tangent vectors at the same base point.
pub fn inner(metric: &BetaMetric, t1: &TangentVector, t2: &TangentVector) -> Result<f64> {
    if !t1.base.same_base(&t2.base) {
        return Err(StiefelError::invalid(
            "inner product needs tangents at the same base point",
        ));
    }
    Ok(beta_inner_raw(
        metric,
        &t1.base.matrix,
        &t1.delta,
        &t2.delta,
    ))
}

/// β-norm of a tangent vector.
pub fn norm(metric: &BetaMetric, t: &TangentVector) -> f64 {
    beta_norm_raw(metric, &t.base.matrix, &t.delta)
}

/// ⟨Z1, Z2⟩_β at base U for raw ambient matrices.
pub fn beta_inner_raw(
    metric: &BetaMetric,
    u: &DMatrix<f64>,
    z1: &DMatrix<f64>,
    z2: &DMatrix<f64>,
) -> f64 {
    let plain = z1.dot(z2);
    let a1 = u.transpose() * z1;
    let a2 = u.transpose() * z2;
    plain - (1.0 - metric.beta()) * a1.dot(&a2)
}

pub fn beta_norm_raw(metric: &BetaMetric, u: &DMatrix<f64>, z: &DMatrix<f64>) -> f64 {
    beta_inner_raw(metric, u, z, z).max(0.0).sqrt()
}

/// Riemannian exponential in the reduced q = min(p, n−p) form.
pub fn exp(metric: &BetaMetric, tangent: &TangentVector) -> Result<StiefelPoint> {
    let u = &tangent.base.matrix;
    let (_, p) = u.shape();
    let raw = exp_raw(metric, u, &tangent.a, &tangent.q_frame, &tangent.b)?;
    debug_assert!(orthonormality_error(&raw) < 1e-8, "exp left the manifold");
    let _ = p;
    StiefelPoint::new(raw)
}

/// Exponential from the cached blocks; also used internally by the shooting
/// logarithm which iterates on raw blocks.
pub(crate) fn exp_raw(
    metric: &BetaMetric,
    u: &DMatrix<f64>,
    a: &DMatrix<f64>,
    q_frame: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let p = u.ncols();
    let q = q_frame.ncols();
    let beta = metric.beta();
    let mut s = DMatrix::zeros(p + q, p + q);
    s.view_mut((0, 0), (p, p)).copy_from(&(a * (2.0 * beta)));
    if q > 0 {
        s.view_mut((0, p), (p, q)).copy_from(&(-b.transpose()));
        s.view_mut((p, 0), (q, p)).copy_from(b);
    }
    let e = expm(&s)?;
    let ra = expm(&(a * (1.0 - 2.0 * beta)))?;
    let e_top = e.view((0, 0), (p, p));
    let out = if q > 0 {
        let e_bot = e.view((p, 0), (q, p));
        (u * e_top + q_frame * e_bot) * ra
    } else {
        u * e_top * ra
    };
    Ok(out)
}

/// Full n×n-block exponential using the complete orthonormal completion;
/// slower than [`exp`] and kept as an independent oracle for tests.
pub fn exp_full(metric: &BetaMetric, tangent: &TangentVector) -> Result<StiefelPoint> {
    let u = &tangent.base.matrix;
    let (n, p) = u.shape();
    let beta = metric.beta();
    let u_perp = orthonormal_completion(u);
    let b_full = u_perp.transpose() * &tangent.delta;
    let mut s = DMatrix::zeros(n, n);
    s.view_mut((0, 0), (p, p))
        .copy_from(&(&tangent.a * (2.0 * beta)));
    if n > p {
        s.view_mut((0, p), (p, n - p))
            .copy_from(&(-b_full.transpose()));
        s.view_mut((p, 0), (n - p, p)).copy_from(&b_full);
    }
    let e = expm(&s)?;
    let ra = expm(&(&tangent.a * (1.0 - 2.0 * beta)))?;
    let frame = if n > p {
        let mut f = DMatrix::zeros(n, n);
        f.view_mut((0, 0), (n, p)).copy_from(u);
        f.view_mut((0, p), (n, n - p)).copy_from(&u_perp);
        f
    } else {
        u.clone()
    };
    let out = frame * e.view((0, 0), (n, p)) * ra;
    StiefelPoint::new(out)
}

/// d_F(U, Ũ) = ‖U − Ũ‖_F, clamped into [0, 2√p].
pub fn frobenius_distance(u: &StiefelPoint, v: &StiefelPoint) -> Result<FrobDistance> {
    if !u.same_shape(v) {
        return Err(StiefelError::invalid(format!(
            "distance needs matching shapes, got {:?} and {:?}",
            u.matrix.shape(),
            v.matrix.shape()
        )));
    }
    FrobDistance::new((&u.matrix - &v.matrix).norm(), u.p())
}
