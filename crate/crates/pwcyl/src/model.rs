//! Parameter records for the three forms a two-piece system passes through
//! (raw affine, quasinormal, canonical), tangency-line analysis, and the
//! changes of variables connecting the forms.
//!
//! Conventions: the switching plane is `z = 0`; the upper piece acts on
//! `z > 0`, the lower piece on `z < 0`.

use serde::Serialize;
use thiserror::Error;

use crate::tol;

pub type Mat3 = [[f64; 3]; 3];
pub type Vec3 = [f64; 3];

/// Which side of the switching plane a piece acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Upper,
    Lower,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::Upper => write!(f, "upper"),
            Side::Lower => write!(f, "lower"),
        }
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("non-finite entry in system data")]
    NonFinite,
    #[error("{side} piece has an empty tangency line (third-row x,y coefficients both zero)")]
    EmptyTangencyLine { side: Side },
    #[error("tangency lines of the two pieces differ; the common-fold reduction does not apply")]
    TangencyLinesDiffer,
    #[error("pieces cross the plane in opposite senses somewhere (crossing product changes sign); sewing analysis does not apply")]
    SewingSignViolation,
    #[error("{side} piece: tangency line carries a cusp or singular point (x-coefficient of the normal acceleration is nonzero); the fold-line analysis does not apply")]
    CuspOnLine { side: Side },
    #[error("{side} piece: tangency line invariant, not a fold")]
    InvariantTangencyLine { side: Side },
    #[error("{side} piece: fold is visible; the analysis requires an invisible fold")]
    VisibleFold { side: Side },
    #[error("{side} piece: center piece (zero planar trace); use the standard canonical path")]
    CenterPiece { side: Side },
    #[error("focus constraint violated: {what}")]
    FocusConstraint { what: String },
    #[error("change of variables left residual {residual:e} in the target form; input is outside the admissible family")]
    CanonicalizationResidual { residual: f64 },
}

// ---------------------------------------------------------------------------
// small dense 3x3 helpers
// ---------------------------------------------------------------------------

pub fn mat_vec(m: &Mat3, v: &Vec3) -> Vec3 {
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2];
    }
    out
}

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

pub fn mat_inv(m: &Mat3) -> Option<Mat3> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let inv_det = 1.0 / det;
    let mut adj = [[0.0; 3]; 3];
    adj[0][0] = m[1][1] * m[2][2] - m[1][2] * m[2][1];
    adj[0][1] = m[0][2] * m[2][1] - m[0][1] * m[2][2];
    adj[0][2] = m[0][1] * m[1][2] - m[0][2] * m[1][1];
    adj[1][0] = m[1][2] * m[2][0] - m[1][0] * m[2][2];
    adj[1][1] = m[0][0] * m[2][2] - m[0][2] * m[2][0];
    adj[1][2] = m[0][2] * m[1][0] - m[0][0] * m[1][2];
    adj[2][0] = m[1][0] * m[2][1] - m[1][1] * m[2][0];
    adj[2][1] = m[0][1] * m[2][0] - m[0][0] * m[2][1];
    adj[2][2] = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = adj[i][j] * inv_det;
        }
    }
    Some(out)
}

// ---------------------------------------------------------------------------
// raw form
// ---------------------------------------------------------------------------

/// One linear-affine vector field `x' = A x + b` acting on a half-space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffinePiece {
    pub a: Mat3,
    pub b: Vec3,
}

impl AffinePiece {
    pub fn new(a: Mat3, b: Vec3) -> Result<Self, ModelError> {
        let piece = AffinePiece { a, b };
        if !piece.is_finite() {
            return Err(ModelError::NonFinite);
        }
        Ok(piece)
    }

    pub fn is_finite(&self) -> bool {
        self.a.iter().flatten().all(|v| v.is_finite()) && self.b.iter().all(|v| v.is_finite())
    }

    /// Right-hand side at a point.
    pub fn eval(&self, p: &Vec3) -> Vec3 {
        let mut out = mat_vec(&self.a, p);
        for i in 0..3 {
            out[i] += self.b[i];
        }
        out
    }

    /// Largest coefficient magnitude; scales residual tolerances.
    pub fn magnitude(&self) -> f64 {
        self.a
            .iter()
            .flatten()
            .chain(self.b.iter())
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// The piece expressed in coordinates `u = L x + t`, with the field
    /// additionally multiplied by `field_factor` (a positive time rescale).
    pub fn changed(&self, linear: &Mat3, offset: &Vec3, field_factor: f64) -> Option<AffinePiece> {
        let l_inv = mat_inv(linear)?;
        let a_new = mat_mul(&mat_mul(linear, &self.a), &l_inv);
        // b_new = L b - A_new t
        let lb = mat_vec(linear, &self.b);
        let at = mat_vec(&a_new, offset);
        let mut b_new = [0.0; 3];
        for i in 0..3 {
            b_new[i] = lb[i] - at[i];
        }
        let mut a_s = a_new;
        for row in a_s.iter_mut() {
            for v in row.iter_mut() {
                *v *= field_factor;
            }
        }
        let mut b_s = b_new;
        for v in b_s.iter_mut() {
            *v *= field_factor;
        }
        Some(AffinePiece { a: a_s, b: b_s })
    }
}

/// Two affine pieces glued along `z = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiecewiseSystem {
    pub upper: AffinePiece,
    pub lower: AffinePiece,
}

impl PiecewiseSystem {
    pub fn new(upper: AffinePiece, lower: AffinePiece) -> Result<Self, ModelError> {
        if !upper.is_finite() || !lower.is_finite() {
            return Err(ModelError::NonFinite);
        }
        Ok(PiecewiseSystem { upper, lower })
    }

    pub fn piece(&self, side: Side) -> &AffinePiece {
        match side {
            Side::Upper => &self.upper,
            Side::Lower => &self.lower,
        }
    }
}

// ---------------------------------------------------------------------------
// tangency lines
// ---------------------------------------------------------------------------

/// A straight line in the switching plane, as the zero set of
/// `nx*x + ny*y + c` restricted to `z = 0`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SigmaLine {
    pub nx: f64,
    pub ny: f64,
    pub c: f64,
}

impl SigmaLine {
    /// A point on the line (in `z = 0`).
    pub fn point(&self) -> [f64; 2] {
        let n2 = self.nx * self.nx + self.ny * self.ny;
        [-self.c * self.nx / n2, -self.c * self.ny / n2]
    }

    /// Direction of the line.
    pub fn direction(&self) -> [f64; 2] {
        [-self.ny, self.nx]
    }

    /// Same zero set, up to a nonzero factor.
    pub fn coincides_with(&self, other: &SigmaLine) -> bool {
        let scale = self
            .nx
            .abs()
            .max(self.ny.abs())
            .max(self.c.abs())
            .max(other.nx.abs())
            .max(other.ny.abs())
            .max(other.c.abs());
        let eps = tol::COEFF_EPS * scale.max(1.0) * scale.max(1.0);
        (self.nx * other.ny - self.ny * other.nx).abs() <= eps
            && (self.nx * other.c - self.c * other.nx).abs() <= eps
            && (self.ny * other.c - self.c * other.ny).abs() <= eps
    }

    /// Factor `k` with `other ~ k * self` on the common support.
    pub fn proportionality(&self, other: &SigmaLine) -> f64 {
        if self.nx.abs() >= self.ny.abs() {
            other.nx / self.nx
        } else {
            other.ny / self.ny
        }
    }
}

/// The two tangency lines and whether they coincide as point sets.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TangencyLines {
    pub upper: SigmaLine,
    pub lower: SigmaLine,
    pub coincident: bool,
}

/// Zero sets of the normal velocity of each piece restricted to `z = 0`.
pub fn tangency_lines(sys: &PiecewiseSystem) -> Result<TangencyLines, ModelError> {
    let line_of = |piece: &AffinePiece, side: Side| -> Result<SigmaLine, ModelError> {
        let (nx, ny, c) = (piece.a[2][0], piece.a[2][1], piece.b[2]);
        if nx == 0.0 && ny == 0.0 {
            return Err(ModelError::EmptyTangencyLine { side });
        }
        Ok(SigmaLine { nx, ny, c })
    };
    let upper = line_of(&sys.upper, Side::Upper)?;
    let lower = line_of(&sys.lower, Side::Lower)?;
    let coincident = upper.coincides_with(&lower);
    Ok(TangencyLines {
        upper,
        lower,
        coincident,
    })
}

// ---------------------------------------------------------------------------
// quasinormal form: third row pinned to (0, 1, a33), b3 = 0
// ---------------------------------------------------------------------------

/// One piece with the plane-normal velocity normalized to `z' = y + a33 z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuasinormalPiece {
    pub a11: f64,
    pub a12: f64,
    pub a13: f64,
    pub a21: f64,
    pub a22: f64,
    pub a23: f64,
    pub a33: f64,
    pub b1: f64,
    pub b2: f64,
}

impl QuasinormalPiece {
    pub fn to_affine(&self) -> AffinePiece {
        AffinePiece {
            a: [
                [self.a11, self.a12, self.a13],
                [self.a21, self.a22, self.a23],
                [0.0, 1.0, self.a33],
            ],
            b: [self.b1, self.b2, 0.0],
        }
    }

    /// The same piece with time multiplied by `k > 0` (all coefficients scale).
    pub fn time_rescaled(&self, k: f64) -> QuasinormalPiece {
        QuasinormalPiece {
            a11: k * self.a11,
            a12: k * self.a12,
            a13: k * self.a13,
            a21: k * self.a21,
            a22: k * self.a22,
            a23: k * self.a23,
            a33: k * self.a33,
            b1: k * self.b1,
            b2: k * self.b2,
        }
    }

    fn magnitude(&self) -> f64 {
        [
            self.a11, self.a12, self.a13, self.a21, self.a22, self.a23, self.a33, self.b1,
            self.b2,
        ]
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuasinormalParams {
    pub upper: QuasinormalPiece,
    pub lower: QuasinormalPiece,
}

impl QuasinormalParams {
    pub fn piece(&self, side: Side) -> &QuasinormalPiece {
        match side {
            Side::Upper => &self.upper,
            Side::Lower => &self.lower,
        }
    }

    pub fn to_piecewise(&self) -> PiecewiseSystem {
        PiecewiseSystem {
            upper: self.upper.to_affine(),
            lower: self.lower.to_affine(),
        }
    }
}

// ---------------------------------------------------------------------------
// tangency classification on the quasinormal form
// ---------------------------------------------------------------------------

/// What the common tangency line `{y = 0, z = 0}` looks like for one piece.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TangencyKind {
    /// Every point of the line is a visible fold.
    VisibleFoldLine,
    /// Every point of the line is an invisible fold.
    InvisibleFoldLine,
    /// The line is invariant under the piece's flow.
    InvariantLine,
    /// Fold everywhere except a single cusp point at `x`.
    CuspAt { x: f64 },
    /// Fold everywhere except a single singular point at `x`.
    SingularAt { x: f64 },
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TangencyReport {
    pub side: Side,
    pub line: SigmaLine,
    pub kind: TangencyKind,
}

/// Classifies the tangency line of one quasinormal piece.
///
/// The normal acceleration along the line is `a21 x + b2`; its sign decides
/// fold visibility. Visibility is stated for the flow on the piece's own
/// side, so the sign convention flips between the upper and lower piece.
pub fn classify_tangency(q: &QuasinormalParams, side: Side) -> TangencyReport {
    let p = q.piece(side);
    let line = SigmaLine {
        nx: 0.0,
        ny: 1.0,
        c: 0.0,
    };
    let kind = if p.a21 == 0.0 {
        if p.b2 == 0.0 {
            TangencyKind::InvariantLine
        } else {
            let visible = match side {
                Side::Upper => p.b2 > 0.0,
                Side::Lower => p.b2 < 0.0,
            };
            if visible {
                TangencyKind::VisibleFoldLine
            } else {
                TangencyKind::InvisibleFoldLine
            }
        }
    } else {
        let x = -p.b2 / p.a21;
        if p.a21 * p.b1 - p.a11 * p.b2 != 0.0 {
            TangencyKind::CuspAt { x }
        } else {
            TangencyKind::SingularAt { x }
        }
    };
    TangencyReport { side, line, kind }
}

// ---------------------------------------------------------------------------
// canonical form
// ---------------------------------------------------------------------------

/// The nine scalars of the invisible-fold canonical form:
/// upper `(a+ x + b+ z, c+ y + d+ z - 1, y)`,
/// lower `(a- x + b- z + m, c- y + d- z + 1, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CanonicalParams {
    pub a_plus: f64,
    pub b_plus: f64,
    pub c_plus: f64,
    pub d_plus: f64,
    pub a_minus: f64,
    pub b_minus: f64,
    pub c_minus: f64,
    pub d_minus: f64,
    pub m: f64,
}

impl CanonicalParams {
    pub fn is_finite(&self) -> bool {
        [
            self.a_plus,
            self.b_plus,
            self.c_plus,
            self.d_plus,
            self.a_minus,
            self.b_minus,
            self.c_minus,
            self.d_minus,
            self.m,
        ]
        .iter()
        .all(|v| v.is_finite())
    }

    pub fn upper_piece(&self) -> AffinePiece {
        AffinePiece {
            a: [
                [self.a_plus, 0.0, self.b_plus],
                [0.0, self.c_plus, self.d_plus],
                [0.0, 1.0, 0.0],
            ],
            b: [0.0, -1.0, 0.0],
        }
    }

    pub fn lower_piece(&self) -> AffinePiece {
        AffinePiece {
            a: [
                [self.a_minus, 0.0, self.b_minus],
                [0.0, self.c_minus, self.d_minus],
                [0.0, 1.0, 0.0],
            ],
            b: [self.m, 1.0, 0.0],
        }
    }

    pub fn to_piecewise(&self) -> PiecewiseSystem {
        PiecewiseSystem {
            upper: self.upper_piece(),
            lower: self.lower_piece(),
        }
    }

    pub fn to_quasinormal(&self) -> QuasinormalParams {
        QuasinormalParams {
            upper: QuasinormalPiece {
                a11: self.a_plus,
                a12: 0.0,
                a13: self.b_plus,
                a21: 0.0,
                a22: self.c_plus,
                a23: self.d_plus,
                a33: 0.0,
                b1: 0.0,
                b2: -1.0,
            },
            lower: QuasinormalPiece {
                a11: self.a_minus,
                a12: 0.0,
                a13: self.b_minus,
                a21: 0.0,
                a22: self.c_minus,
                a23: self.d_minus,
                a33: 0.0,
                b1: self.m,
                b2: 1.0,
            },
        }
    }
}

/// Parameters of the focus–focus canonical form:
/// upper `(a+ x + b+ z, D2 z + a2, -y + T2 z)`,
/// lower `(a- x + b- z + m, D1 z + a1, -y + T1 z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FocusCanonicalParams {
    pub a_plus: f64,
    pub b_plus: f64,
    pub a_minus: f64,
    pub b_minus: f64,
    pub m: f64,
    pub d1: f64,
    pub d2: f64,
    pub t1: f64,
    pub t2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl FocusCanonicalParams {
    /// Checks the admissibility constraints: `a2 > 0`, `a1 < 0`,
    /// `Ti^2 - 4 Di < 0` and `Ti != 0` for both pieces.
    pub fn validate(&self) -> Result<(), ModelError> {
        if !self.is_finite() {
            return Err(ModelError::NonFinite);
        }
        if self.a2 <= 0.0 {
            return Err(ModelError::FocusConstraint {
                what: format!("a2 must be positive, got {}", self.a2),
            });
        }
        if self.a1 >= 0.0 {
            return Err(ModelError::FocusConstraint {
                what: format!("a1 must be negative, got {}", self.a1),
            });
        }
        for (side, t, d) in [
            (Side::Upper, self.t2, self.d2),
            (Side::Lower, self.t1, self.d1),
        ] {
            if t == 0.0 {
                return Err(ModelError::CenterPiece { side });
            }
            if t * t - 4.0 * d >= 0.0 {
                return Err(ModelError::FocusConstraint {
                    what: format!(
                        "{side} piece must have complex planar spectrum: T^2 - 4D = {} >= 0",
                        t * t - 4.0 * d
                    ),
                });
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        [
            self.a_plus,
            self.b_plus,
            self.a_minus,
            self.b_minus,
            self.m,
            self.d1,
            self.d2,
            self.t1,
            self.t2,
            self.a1,
            self.a2,
        ]
        .iter()
        .all(|v| v.is_finite())
    }

    pub fn upper_piece(&self) -> AffinePiece {
        AffinePiece {
            a: [
                [self.a_plus, 0.0, self.b_plus],
                [0.0, 0.0, self.d2],
                [0.0, -1.0, self.t2],
            ],
            b: [0.0, self.a2, 0.0],
        }
    }

    pub fn lower_piece(&self) -> AffinePiece {
        AffinePiece {
            a: [
                [self.a_minus, 0.0, self.b_minus],
                [0.0, 0.0, self.d1],
                [0.0, -1.0, self.t1],
            ],
            b: [self.m, self.a1, 0.0],
        }
    }

    pub fn to_piecewise(&self) -> PiecewiseSystem {
        PiecewiseSystem {
            upper: self.upper_piece(),
            lower: self.lower_piece(),
        }
    }

    pub fn to_quasinormal(&self) -> QuasinormalParams {
        QuasinormalParams {
            upper: QuasinormalPiece {
                a11: self.a_plus,
                a12: 0.0,
                a13: self.b_plus,
                a21: 0.0,
                a22: 0.0,
                a23: -self.d2,
                a33: self.t2,
                b1: 0.0,
                b2: -self.a2,
            },
            lower: QuasinormalPiece {
                a11: self.a_minus,
                a12: 0.0,
                a13: self.b_minus,
                a21: 0.0,
                a22: 0.0,
                a23: -self.d1,
                a33: self.t1,
                b1: self.m,
                b2: -self.a1,
            },
        }
    }
}

// ---------------------------------------------------------------------------
// changes of variables
// ---------------------------------------------------------------------------

/// An affine coordinate change `u = L x + t`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AffineChange {
    pub linear: Mat3,
    pub offset: Vec3,
}

impl AffineChange {
    pub fn apply(&self, p: &Vec3) -> Vec3 {
        let mut out = mat_vec(&self.linear, p);
        for i in 0..3 {
            out[i] += self.offset[i];
        }
        out
    }
}

/// Result of the twin change of variables onto the canonical form.
#[derive(Debug, Clone)]
pub struct Canonicalization {
    pub params: CanonicalParams,
    /// Coordinate change applied on the upper half-space.
    pub upper_change: AffineChange,
    /// Coordinate change applied on the lower half-space.
    pub lower_change: AffineChange,
    /// Time rescale of each piece: `tau_canonical = factor * tau_original`.
    pub upper_time_factor: f64,
    pub lower_time_factor: f64,
}

fn check_fold_preconditions(q: &QuasinormalParams) -> Result<(), ModelError> {
    for side in [Side::Upper, Side::Lower] {
        let p = q.piece(side);
        let scale = p.magnitude().max(1.0);
        if p.a21.abs() > tol::COEFF_EPS * scale {
            return Err(ModelError::CuspOnLine { side });
        }
        if p.b2.abs() <= tol::COEFF_EPS * scale {
            return Err(ModelError::InvariantTangencyLine { side });
        }
        let invisible = match side {
            Side::Upper => p.b2 < 0.0,
            Side::Lower => p.b2 > 0.0,
        };
        if !invisible {
            return Err(ModelError::VisibleFold { side });
        }
    }
    Ok(())
}

/// The twin change of variables taking an admissible quasinormal system
/// (double invisible fold line) to the canonical form.
///
/// Upper piece: `(x,y,z) -> (x - (b1/b2) y - K z, y + a33 z, -b2 z)` with
/// `K = (b1 a11 - b1 a22 + a12 b2)/b2`, time multiplied by `-1/b2`.
/// Lower piece: same `x`-shear built from the upper constants, `z` scaled by
/// its own `b2`, time multiplied by `1/b2`. The transformed fields are
/// reconstructed and checked coefficient-wise against the target shape.
pub fn canonicalize(q: &QuasinormalParams) -> Result<Canonicalization, ModelError> {
    check_fold_preconditions(q)?;
    let up = q.upper;
    let lo = q.lower;

    let k_up = (up.b1 * up.a11 - up.b1 * up.a22 + up.a12 * up.b2) / up.b2;
    let upper_change = AffineChange {
        linear: [
            [1.0, -up.b1 / up.b2, -k_up],
            [0.0, 1.0, up.a33],
            [0.0, 0.0, -up.b2],
        ],
        offset: [0.0; 3],
    };
    let k_lo = (up.b2 * lo.a12 - up.b1 * lo.a22 + up.b1 * lo.a11) / up.b2;
    let lower_change = AffineChange {
        linear: [
            [1.0, -up.b1 / up.b2, -k_lo],
            [0.0, 1.0, lo.a33],
            [0.0, 0.0, lo.b2],
        ],
        offset: [0.0; 3],
    };
    let upper_factor = -1.0 / up.b2;
    let lower_factor = 1.0 / lo.b2;

    let new_up = up
        .to_affine()
        .changed(&upper_change.linear, &upper_change.offset, upper_factor)
        .ok_or(ModelError::NonFinite)?;
    let new_lo = lo
        .to_affine()
        .changed(&lower_change.linear, &lower_change.offset, lower_factor)
        .ok_or(ModelError::NonFinite)?;

    // target shape: A = [[a,0,b],[0,c,d],[0,1,0]], b = (0, -/+1, 0) (+m lower)
    let scale = new_up.magnitude().max(new_lo.magnitude()).max(1.0);
    let eps = tol::COEFF_EPS * scale;
    let mut residual = 0.0_f64;
    let mut check = |v: f64, target: f64| {
        residual = residual.max((v - target).abs());
    };
    for piece in [&new_up, &new_lo] {
        check(piece.a[0][1], 0.0);
        check(piece.a[1][0], 0.0);
        check(piece.a[2][0], 0.0);
        check(piece.a[2][1], 1.0);
        check(piece.a[2][2], 0.0);
        check(piece.b[2], 0.0);
    }
    check(new_up.b[0], 0.0);
    check(new_up.b[1], -1.0);
    check(new_lo.b[1], 1.0);
    if residual > eps {
        return Err(ModelError::CanonicalizationResidual { residual });
    }

    let params = CanonicalParams {
        a_plus: new_up.a[0][0],
        b_plus: new_up.a[0][2],
        c_plus: new_up.a[1][1],
        d_plus: new_up.a[1][2],
        a_minus: new_lo.a[0][0],
        b_minus: new_lo.a[0][2],
        c_minus: new_lo.a[1][1],
        d_minus: new_lo.a[1][2],
        m: new_lo.b[0],
    };
    Ok(Canonicalization {
        params,
        upper_change,
        lower_change,
        upper_time_factor: -up.b2,
        lower_time_factor: lo.b2,
    })
}

/// Result of the change of variables onto the focus–focus form.
#[derive(Debug, Clone)]
pub struct FocusCanonicalization {
    pub params: FocusCanonicalParams,
    pub upper_change: AffineChange,
    pub lower_change: AffineChange,
}

/// Takes an admissible quasinormal system whose planar parts rotate (both
/// pieces of focus type) to the focus–focus form.
///
/// The plane-normal coordinate is first reflected (`y -> -y`) so that
/// `z' = -y + ...`; the twin shear then removes the constants and couplings
/// without any time rescale. Constraint set validated on output.
pub fn canonicalize_focus(q: &QuasinormalParams) -> Result<FocusCanonicalization, ModelError> {
    check_fold_preconditions(q)?;

    // reflect y -> -y on both pieces
    let reflect = |p: &QuasinormalPiece| QuasinormalPiece {
        a11: p.a11,
        a12: -p.a12,
        a13: p.a13,
        a21: -p.a21,
        a22: p.a22,
        a23: -p.a23,
        a33: p.a33,
        b1: p.b1,
        b2: -p.b2,
    };
    let up = reflect(&q.upper);
    let lo = reflect(&q.lower);
    let refl = [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]];

    // reflected pieces have third row (0, -1, a33) and b2+ > 0, b2- < 0
    let k_up = (up.b1 * up.a11 - up.b1 * up.a22 + up.a12 * up.b2) / up.b2;
    let shear_up = [
        [1.0, -up.b1 / up.b2, k_up],
        [0.0, 1.0, up.a22],
        [0.0, 0.0, 1.0],
    ];
    let k_lo = (up.b2 * lo.a12 - up.b1 * lo.a22 + up.b1 * lo.a11) / up.b2;
    let shear_lo = [
        [1.0, -up.b1 / up.b2, k_lo],
        [0.0, 1.0, lo.a22],
        [0.0, 0.0, 1.0],
    ];
    let upper_change = AffineChange {
        linear: mat_mul(&shear_up, &refl),
        offset: [0.0; 3],
    };
    let lower_change = AffineChange {
        linear: mat_mul(&shear_lo, &refl),
        offset: [0.0; 3],
    };

    let raw_up = AffinePiece {
        a: [
            [up.a11, up.a12, up.a13],
            [up.a21, up.a22, up.a23],
            [0.0, -1.0, up.a33],
        ],
        b: [up.b1, up.b2, 0.0],
    };
    let raw_lo = AffinePiece {
        a: [
            [lo.a11, lo.a12, lo.a13],
            [lo.a21, lo.a22, lo.a23],
            [0.0, -1.0, lo.a33],
        ],
        b: [lo.b1, lo.b2, 0.0],
    };
    let new_up = raw_up
        .changed(&shear_up, &[0.0; 3], 1.0)
        .ok_or(ModelError::NonFinite)?;
    let new_lo = raw_lo
        .changed(&shear_lo, &[0.0; 3], 1.0)
        .ok_or(ModelError::NonFinite)?;

    // target shape: A = [[a,0,b],[0,0,D],[0,-1,T]], b = (0 or m, a_i, 0)
    let scale = new_up.magnitude().max(new_lo.magnitude()).max(1.0);
    let eps = tol::COEFF_EPS * scale;
    let mut residual = 0.0_f64;
    let mut check = |v: f64, target: f64| {
        residual = residual.max((v - target).abs());
    };
    for piece in [&new_up, &new_lo] {
        check(piece.a[0][1], 0.0);
        check(piece.a[1][0], 0.0);
        check(piece.a[1][1], 0.0);
        check(piece.a[2][0], 0.0);
        check(piece.a[2][1], -1.0);
        check(piece.b[2], 0.0);
    }
    check(new_up.b[0], 0.0);
    if residual > eps {
        return Err(ModelError::CanonicalizationResidual { residual });
    }

    let params = FocusCanonicalParams {
        a_plus: new_up.a[0][0],
        b_plus: new_up.a[0][2],
        a_minus: new_lo.a[0][0],
        b_minus: new_lo.a[0][2],
        m: new_lo.b[0],
        d2: new_up.a[1][2],
        t2: new_up.a[2][2],
        a2: new_up.b[1],
        d1: new_lo.a[1][2],
        t1: new_lo.a[2][2],
        a1: new_lo.b[1],
    };
    params.validate()?;
    Ok(FocusCanonicalization {
        params,
        upper_change,
        lower_change,
    })
}

// ---------------------------------------------------------------------------
// raw -> quasinormal reduction
// ---------------------------------------------------------------------------

/// Result of moving the common tangency line onto `{y = 0, z = 0}`.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub q: QuasinormalParams,
    pub change: AffineChange,
    /// The lower piece's time is multiplied by this (positive) factor.
    pub lower_time_factor: f64,
}

/// Validates the common-tangency hypotheses on a raw system and rotates /
/// translates within the switching plane so the shared tangency line becomes
/// `{y = 0, z = 0}`, rescaling the lower piece's time so both pieces reach
/// the exact quasinormal shape.
pub fn reduce_to_quasinormal(sys: &PiecewiseSystem) -> Result<Reduction, ModelError> {
    let lines = tangency_lines(sys)?;
    if !lines.coincident {
        return Err(ModelError::TangencyLinesDiffer);
    }
    let k = lines.upper.proportionality(&lines.lower);
    if !(k.is_finite() && k > 0.0) {
        // opposite normal velocities on the two sides of the line
        return Err(ModelError::SewingSignViolation);
    }

    // new coordinates: y_hat = nx*x + ny*y + c (the upper crossing function),
    // x_hat = the orthogonal direction, z unchanged
    let l = lines.upper;
    let linear = [[-l.ny, l.nx, 0.0], [l.nx, l.ny, 0.0], [0.0, 0.0, 1.0]];
    let offset = [0.0, l.c, 0.0];
    let change = AffineChange { linear, offset };

    let new_upper = sys
        .upper
        .changed(&linear, &offset, 1.0)
        .ok_or(ModelError::NonFinite)?;
    let new_lower = sys
        .lower
        .changed(&linear, &offset, 1.0 / k)
        .ok_or(ModelError::NonFinite)?;

    let scale = new_upper.magnitude().max(new_lower.magnitude()).max(1.0);
    let eps = tol::COEFF_EPS * scale;
    let mut residual = 0.0_f64;
    for piece in [&new_upper, &new_lower] {
        residual = residual.max(piece.a[2][0].abs());
        residual = residual.max((piece.a[2][1] - 1.0).abs());
        residual = residual.max(piece.b[2].abs());
    }
    if residual > eps {
        return Err(ModelError::CanonicalizationResidual { residual });
    }

    let to_quasi = |p: &AffinePiece| QuasinormalPiece {
        a11: p.a[0][0],
        a12: p.a[0][1],
        a13: p.a[0][2],
        a21: p.a[1][0],
        a22: p.a[1][1],
        a23: p.a[1][2],
        a33: p.a[2][2],
        b1: p.b[0],
        b2: p.b[1],
    };
    Ok(Reduction {
        q: QuasinormalParams {
            upper: to_quasi(&new_upper),
            lower: to_quasi(&new_lower),
        },
        change,
        lower_time_factor: 1.0 / k,
    })
}
