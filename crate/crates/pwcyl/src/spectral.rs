//! Per-piece spectral classification, the dimensionless return-map exponents
//! `alpha`/`beta`, the pair invariants `kappa`/`lambda`, and the global
//! structure classifier built on them.
//!
//! The planar part of a canonical piece is `y' = c y + d z -/+ 1`, `z' = y`;
//! its nontrivial eigenvalues are `(c +/- sqrt(c^2 + 4d))/2`, and the piece's
//! type is decided by the signs of `d`, `c` and the discriminant.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::model::CanonicalParams;
use crate::numeric;
use crate::tol;

/// The seven spectral types of one piece.
///
/// `Sa` saddle (real eigenvalues of opposite sign), `No` node (real, same
/// sign), `Nd` degenerate node (repeated nonzero), `Fo` focus (complex,
/// nonzero real part), `Ce` center (purely imaginary), `D1` one zero
/// eigenvalue, `D2` double zero eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SpectralType {
    Sa,
    No,
    Nd,
    Fo,
    Ce,
    D1,
    D2,
}

impl std::fmt::Display for SpectralType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}", self)
    }
}

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("clause divisor vanishes for {clause}; fall back to numeric-only analysis")]
    ClauseDivisorZero { clause: &'static str },
    #[error("pair (Fo, Fo): use the focus-focus path")]
    FocusFocusPath,
    #[error("pair ({0}, {1}): invariant-table entry is unparseable as printed; treated as unclassified")]
    UnparseableTableRow(SpectralType, SpectralType),
    #[error("pair ({0}, {1}) has no invariant-table entry")]
    UnknownPair(SpectralType, SpectralType),
    #[error("kappa = 0 is degenerate for the tangency root test; use the kappa*lambda sign path")]
    DegenerateKappa,
}

/// Eigen-data of one canonical piece.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpectralData {
    pub kind: SpectralType,
    /// The decoupled `x` eigenvalue (`= a`).
    pub lambda1: f64,
    pub lambda2: Complex64,
    pub lambda3: Complex64,
    /// Discriminant root: `sqrt(c^2+4d)` for real spectra,
    /// `sqrt(-(c^2+4d))` for rotating ones.
    pub s: f64,
}

/// Classifies one piece from its `(a, c, d)` with the default zero tolerance.
pub fn classify_piece(a: f64, c: f64, d: f64) -> SpectralData {
    classify_piece_eps(a, c, d, tol::DISC_EPS)
}

/// Classifies one piece with an explicit zero tolerance on `c`, `d` and the
/// discriminant `c^2 + 4d`.
pub fn classify_piece_eps(a: f64, c: f64, d: f64, eps: f64) -> SpectralData {
    let disc = c * c + 4.0 * d;
    let c_zero = c.abs() <= eps;
    let d_zero = d.abs() <= eps;
    let disc_zero = disc.abs() <= eps;

    let kind = if c_zero && d_zero {
        SpectralType::D2
    } else if d_zero {
        SpectralType::D1
    } else if disc_zero {
        SpectralType::Nd
    } else if disc > 0.0 {
        if d > 0.0 {
            SpectralType::Sa
        } else {
            SpectralType::No
        }
    } else if c_zero {
        SpectralType::Ce
    } else {
        SpectralType::Fo
    };

    let (lambda2, lambda3, s) = match kind {
        SpectralType::D2 => (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), 0.0),
        SpectralType::D1 => (
            Complex64::new(c, 0.0),
            Complex64::new(0.0, 0.0),
            c.abs(),
        ),
        SpectralType::Nd => (
            Complex64::new(0.5 * c, 0.0),
            Complex64::new(0.5 * c, 0.0),
            0.0,
        ),
        SpectralType::Sa | SpectralType::No => {
            let s = disc.sqrt();
            (
                Complex64::new(0.5 * (c + s), 0.0),
                Complex64::new(0.5 * (c - s), 0.0),
                s,
            )
        }
        SpectralType::Fo | SpectralType::Ce => {
            let s = (-disc).sqrt();
            (
                Complex64::new(0.5 * c, 0.5 * s),
                Complex64::new(0.5 * c, -0.5 * s),
                s,
            )
        }
    };
    SpectralData {
        kind,
        lambda1: a,
        lambda2,
        lambda3,
        s,
    }
}

/// Which formula produced an exponent (named by its algebraic content).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExponentRule {
    /// `(s - c)/(s + c)` — saddle ratio of the decaying to growing rate.
    SaddleRatio,
    /// `(c - s)/(s + c)` — node ratio of the slow to fast rate.
    NodeRatio,
    /// `c/2` — repeated planar rate.
    RepeatedRate,
    /// `s/(2c)` — rotation-to-contraction pitch of a focus.
    FocusPitch,
    /// `sqrt(-d)` — angular frequency of a center.
    CenterFrequency,
    /// `1/c` — reciprocal of the single nonzero planar rate.
    ShearReciprocal,
    /// `1/a` — reciprocal of the x-drift rate.
    DriftReciprocal,
}

impl std::fmt::Display for ExponentRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ExponentRule::SaddleRatio => "(s - c)/(s + c)",
            ExponentRule::NodeRatio => "(c - s)/(s + c)",
            ExponentRule::RepeatedRate => "c/2",
            ExponentRule::FocusPitch => "s/(2c)",
            ExponentRule::CenterFrequency => "sqrt(-d)",
            ExponentRule::ShearReciprocal => "1/c",
            ExponentRule::DriftReciprocal => "1/a",
        };
        f.write_str(s)
    }
}

/// An exponent value plus the rule that defined it.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Exponent {
    pub value: f64,
    pub rule: ExponentRule,
}

/// The exponent `alpha` of the upper piece's return-map parametrization.
pub fn alpha_of(sd: &SpectralData, a: f64, c: f64, _d: f64) -> Result<Exponent, SpectralError> {
    let s = sd.s;
    let (value, rule) = match sd.kind {
        SpectralType::Sa => {
            if s + c == 0.0 {
                return Err(SpectralError::ClauseDivisorZero {
                    clause: "saddle exponent (s - c)/(s + c)",
                });
            }
            ((s - c) / (s + c), ExponentRule::SaddleRatio)
        }
        SpectralType::No => {
            if s + c == 0.0 {
                return Err(SpectralError::ClauseDivisorZero {
                    clause: "node exponent (c - s)/(s + c)",
                });
            }
            ((c - s) / (s + c), ExponentRule::NodeRatio)
        }
        SpectralType::Nd => (0.5 * c, ExponentRule::RepeatedRate),
        SpectralType::Fo => {
            if c == 0.0 {
                return Err(SpectralError::ClauseDivisorZero {
                    clause: "focus exponent s/(2c)",
                });
            }
            (s / (2.0 * c), ExponentRule::FocusPitch)
        }
        SpectralType::Ce => ((-_d).sqrt(), ExponentRule::CenterFrequency),
        SpectralType::D1 => {
            if c == 0.0 {
                return Err(SpectralError::ClauseDivisorZero {
                    clause: "shear exponent 1/c",
                });
            }
            (1.0 / c, ExponentRule::ShearReciprocal)
        }
        SpectralType::D2 => {
            if a == 0.0 {
                return Err(SpectralError::ClauseDivisorZero {
                    clause: "drift exponent 1/a",
                });
            }
            (1.0 / a, ExponentRule::DriftReciprocal)
        }
    };
    Ok(Exponent { value, rule })
}

/// The exponent `beta` of the lower piece's return-map parametrization.
///
/// Identical to [`alpha_of`] except that saddles and nodes share one clause:
/// both use `(S - c)/(S + c)` (the lower parametrization decays in both
/// variables, so the node does not flip the ratio).
pub fn beta_of(sd: &SpectralData, a: f64, c: f64, d: f64) -> Result<Exponent, SpectralError> {
    match sd.kind {
        SpectralType::No => {
            let s = sd.s;
            if s + c == 0.0 {
                return Err(SpectralError::ClauseDivisorZero {
                    clause: "saddle/node exponent (S - c)/(S + c)",
                });
            }
            Ok(Exponent {
                value: (s - c) / (s + c),
                rule: ExponentRule::SaddleRatio,
            })
        }
        _ => alpha_of(sd, a, c, d),
    }
}

/// Evaluates the invariant-table entry for a pair, given the exponents of the
/// two pieces and the planar traces `c+`, `c-`.
///
/// The entry must be one of the printed rows; pairs only covered through the
/// piece swap are handled by [`pair_invariants`], not here. The `(No, Ce)`
/// entry is unparseable as printed and is reported as such rather than
/// repaired.
pub fn kappa_lambda(
    pair: (SpectralType, SpectralType),
    alpha: f64,
    beta: f64,
    c_plus: f64,
    c_minus: f64,
) -> Result<(f64, f64), SpectralError> {
    use SpectralType::*;
    let (al, be, cp, cm) = (alpha, beta, c_plus, c_minus);
    let (kappa, lambda) = match pair {
        (Fo, Fo) => return Err(SpectralError::FocusFocusPath),
        (Sa, Sa) => (
            al * al
                * (al * cm + be * cp - cp - cm)
                * (al * be * cm - be * cp - be * cm + cp),
            (al * be * cp - al * cp - al * cm + cm)
                * (al * be * cp + al * be * cm - al * cp - be * cm),
        ),
        (Sa, No) => (
            -(be * cp - cp + (-1.0 + al) * cm) * ((cp + (-al + 1.0) * cm) * be - cp) * al * al,
            (((cp + cm) * be - cp) * al - be * cm) * ((be * cp - cp - cm) * al + cm),
        ),
        (Sa, Nd) => (
            al * al * ((-al + 1.0) * be + cp) * ((-al + 1.0) * be + cp),
            -((be + cp) * al - be) * ((be + cp) * al - be),
        ),
        (Sa, Fo) => (
            4.0 * al
                * al
                * ((be * be + 0.25) * (al - 1.0) * (al - 1.0) * cm * cm
                    - cp * (al - 1.0) * cm
                    + cp * cp),
            -(4.0 * (be * be + 0.25)) * (al - 1.0) * (al - 1.0) * cm * cm
                - 4.0 * cp * al * (al - 1.0) * cm
                - 4.0 * cp * cp * al * al,
        ),
        (Sa, Ce) => (
            ((al - 1.0) * (al - 1.0) * be * be + cp * cp) * al * al,
            -(al - 1.0) * (al - 1.0) * be * be - cp * cp * al * al,
        ),
        (Sa, D1) => (
            -al * ((-al + 1.0) * cm + cp),
            (cp + cm) * al - cm,
        ),
        (No, No) => (
            -(be * cp - cp + (-al - 1.0) * cm) * ((cp + (1.0 + al) * cm) * be - cp) * al * al,
            ((be * cp - cp - cm) * al - cm) * (((cp + cm) * be - cp) * al + be * cm),
        ),
        (No, Nd) => (
            ((1.0 + al) * be + cp) * ((1.0 + al) * be + cp) * al * al,
            -((be + cp) * al + be) * ((be + cp) * al + be),
        ),
        (No, Fo) => (
            4.0 * ((1.0 + al) * (1.0 + al) * (be * be + 0.25) * cm * cm
                + cp * (1.0 + al) * cm
                + cp * cp)
                * al
                * al,
            -4.0 * (1.0 + al) * (1.0 + al) * (be * be + 0.25) * cm * cm
                - 4.0 * cp * al * (1.0 + al) * cm
                - 4.0 * cp * cp * al * al,
        ),
        (No, Ce) => return Err(SpectralError::UnparseableTableRow(No, Ce)),
        (No, D1) => (
            al * ((1.0 + al) * cm + cp),
            (-cp - cm) * al - cm,
        ),
        (Nd, Nd) => (-(al + be), 2.0 * be),
        (Nd, Fo) => (
            -(4.0 * be * be * cm * cm + 4.0 * al * al + 4.0 * al * cm + cm * cm),
            (8.0 * be * be + 2.0) * cm * cm + 4.0 * al * cm,
        ),
        (Nd, D1) => (-(al * be + 1.0), 1.0),
        (D1, Fo) => (
            4.0 * (1.0 + cm * al) + cm * cm * al * al * (4.0 * be * be + 1.0),
            -cm * cm * al * al * (4.0 * be * be + 1.0),
        ),
        (D1, D1) => (al + be, al + be),
        // constant rows
        (Sa, D2) | (Ce, Nd) | (Ce, Fo) | (Ce, D1) | (D2, Fo) => (1.0, -1.0),
        (No, D2) | (Nd, D2) | (D1, D2) => (1.0, 1.0),
        (Ce, Ce) | (D2, Ce) | (D2, D2) => (0.0, 0.0),
        other => return Err(SpectralError::UnknownPair(other.0, other.1)),
    };
    Ok((kappa, lambda))
}

fn has_table_row(pair: (SpectralType, SpectralType)) -> bool {
    use SpectralType::*;
    matches!(
        pair,
        (Sa, Sa)
            | (Sa, No)
            | (Sa, Nd)
            | (Sa, Fo)
            | (Sa, Ce)
            | (Sa, D1)
            | (Sa, D2)
            | (No, No)
            | (No, Nd)
            | (No, Fo)
            | (No, Ce)
            | (No, D1)
            | (No, D2)
            | (Nd, Nd)
            | (Nd, Fo)
            | (Nd, D1)
            | (Nd, D2)
            | (Ce, Nd)
            | (Ce, Fo)
            | (Ce, Ce)
            | (Ce, D1)
            | (D1, Fo)
            | (D1, D1)
            | (D1, D2)
            | (D2, Fo)
            | (D2, Ce)
            | (D2, D2)
    )
}

/// The constant table entries (independent of exponents and traces).
pub fn constant_row(pair: (SpectralType, SpectralType)) -> Option<(f64, f64)> {
    use SpectralType::*;
    match pair {
        (Sa, D2) | (Ce, Nd) | (Ce, Fo) | (Ce, D1) | (D2, Fo) => Some((1.0, -1.0)),
        (No, D2) | (Nd, D2) | (D1, D2) => Some((1.0, 1.0)),
        (Ce, Ce) | (D2, Ce) | (D2, D2) => Some((0.0, 0.0)),
        _ => None,
    }
}

/// Pair-level data feeding the structure classifier.
#[derive(Debug, Clone, Serialize)]
pub struct PairInvariants {
    /// Types in the system's own orientation (upper, lower).
    pub pair: (SpectralType, SpectralType),
    /// Row of the invariant table actually used.
    pub table_pair: (SpectralType, SpectralType),
    /// True when the table row is for the swapped orientation; the swap is
    /// realized by the reflection `(x, y, z) -> (x, -y, -z)`, which exchanges
    /// the pieces and preserves the cylinder set.
    pub swapped: bool,
    /// Exponent of the table-orientation upper piece. May be non-finite for
    /// constant rows when the defining clause divides by zero; the structure
    /// classifier then refuses the branch that needs it.
    pub alpha: f64,
    pub beta: f64,
    pub alpha_source: Option<ExponentRule>,
    pub beta_source: Option<ExponentRule>,
    pub kappa: f64,
    pub lambda: f64,
    pub upper: SpectralData,
    pub lower: SpectralData,
}

/// Classifies both pieces and evaluates the invariant-table row, swapping the
/// pieces when only the mirrored row exists.
pub fn pair_invariants(cp: &CanonicalParams, eps: f64) -> Result<PairInvariants, SpectralError> {
    let upper = classify_piece_eps(cp.a_plus, cp.c_plus, cp.d_plus, eps);
    let lower = classify_piece_eps(cp.a_minus, cp.c_minus, cp.d_minus, eps);
    let pair = (upper.kind, lower.kind);
    if pair == (SpectralType::Fo, SpectralType::Fo) {
        return Err(SpectralError::FocusFocusPath);
    }
    let (table_pair, swapped) = if has_table_row(pair) {
        (pair, false)
    } else if has_table_row((pair.1, pair.0)) {
        ((pair.1, pair.0), true)
    } else {
        return Err(SpectralError::UnknownPair(pair.0, pair.1));
    };

    // Exponents in the table row's own orientation: its "upper" piece gets
    // the alpha rule, its "lower" piece the beta rule.
    let (alpha_res, beta_res, c_up, c_lo) = if !swapped {
        (
            alpha_of(&upper, cp.a_plus, cp.c_plus, cp.d_plus),
            beta_of(&lower, cp.a_minus, cp.c_minus, cp.d_minus),
            cp.c_plus,
            cp.c_minus,
        )
    } else {
        (
            alpha_of(&lower, cp.a_minus, cp.c_minus, cp.d_minus),
            beta_of(&upper, cp.a_plus, cp.c_plus, cp.d_plus),
            cp.c_minus,
            cp.c_plus,
        )
    };
    let constant = constant_row(table_pair);
    // constant rows don't consume the exponents, so a divisor failure there
    // is not fatal; expression rows need both.
    let (alpha, alpha_source, beta, beta_source) = match (&alpha_res, &beta_res, constant) {
        (Ok(a), Ok(b), _) => (a.value, Some(a.rule), b.value, Some(b.rule)),
        (_, _, Some(_)) => (
            alpha_res.as_ref().map(|e| e.value).unwrap_or(f64::NAN),
            alpha_res.as_ref().ok().map(|e| e.rule),
            beta_res.as_ref().map(|e| e.value).unwrap_or(f64::NAN),
            beta_res.as_ref().ok().map(|e| e.rule),
        ),
        (Err(_), _, None) => return Err(alpha_res.unwrap_err()),
        (_, Err(_), None) => return Err(beta_res.unwrap_err()),
    };
    let (kappa, lambda) = match constant {
        Some(kl) => kl,
        None => kappa_lambda(table_pair, alpha, beta, c_up, c_lo)?,
    };
    Ok(PairInvariants {
        pair,
        table_pair,
        swapped,
        alpha,
        beta,
        alpha_source,
        beta_source,
        kappa,
        lambda,
        upper,
        lower,
    })
}

/// Global structure of the sewing dynamics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum StructureClass {
    /// No invariant cylinder, hence no periodic orbits.
    Scroll,
    /// At most one invariant cylinder.
    UniqueCylinder,
    /// A continuum of invariant cylinders.
    InfinitelyManyCylinders,
    /// Both pieces rotate; handled by the dedicated path ("at most one
    /// invariant cylinder").
    FocusFocus,
    Unclassified(String),
}

impl StructureClass {
    pub fn label(&self) -> &'static str {
        match self {
            StructureClass::Scroll => "scroll",
            StructureClass::UniqueCylinder => "unique-cylinder",
            StructureClass::InfinitelyManyCylinders => "infinitely-many-cylinders",
            StructureClass::FocusFocus => "focus-focus",
            StructureClass::Unclassified(_) => "unclassified",
        }
    }
}

/// A classification outcome plus the rule that produced it.
#[derive(Debug, Clone, Serialize)]
pub struct StructureDecision {
    pub class: StructureClass,
    /// Human-readable statement of the sign condition that fired and whether
    /// the pair is covered by the corresponding statement list.
    pub rule: String,
}

fn in_scroll_list(p: (SpectralType, SpectralType)) -> bool {
    use SpectralType::*;
    let one = |p: (SpectralType, SpectralType)| {
        matches!(
            p,
            (Sa, Sa | No | Nd | Fo | Ce | D1)
                | (No, No | Nd | Fo | Ce | D1 | D2)
                | (Nd, Nd | Fo | D1 | D2)
                | (Fo, D1)
                | (D1, D1 | D2)
        )
    };
    one(p) || one((p.1, p.0))
}

fn in_unique_list(p: (SpectralType, SpectralType)) -> bool {
    use SpectralType::*;
    let one = |p: (SpectralType, SpectralType)| {
        matches!(
            p,
            (Sa, Sa | No | Nd | Fo | Ce | D1 | D2)
                | (No, No | Nd | Fo | Ce | D1)
                | (Nd, Nd | Fo | Ce | D1)
                | (Fo, Fo | Ce | D1 | D2)
                | (Ce, D1)
        )
    };
    one(p) || one((p.1, p.0))
}

fn in_continuum_list(p: (SpectralType, SpectralType)) -> bool {
    use SpectralType::*;
    let one = |p: (SpectralType, SpectralType)| {
        matches!(
            p,
            (Sa, Sa | No | Nd | Fo | Ce | D1)
                | (No, No | Nd | Fo | Ce | D1)
                | (Nd, Nd | Fo | D1)
                | (Ce, Ce | D2)
                | (D1, D1)
                | (D2, D2)
        )
    };
    one(p) || one((p.1, p.0))
}

/// Applies the sign conditions on `(kappa, lambda)` (and the root criterion
/// `1 + alpha^2 lambda / kappa` when their product is negative).
pub fn structure_of(inv: &PairInvariants) -> StructureClass {
    structure_decision(inv).class
}

/// Like [`structure_of`] but also reports which rule fired.
pub fn structure_decision(inv: &PairInvariants) -> StructureDecision {
    let (k, l) = (inv.kappa, inv.lambda);
    let pair = inv.pair;
    let covered =
        in_scroll_list(pair) || in_unique_list(pair) || in_continuum_list(pair);
    if !covered {
        return StructureDecision {
            class: StructureClass::Unclassified(format!(
                "pair ({}, {}) is not covered by any statement list",
                pair.0, pair.1
            )),
            rule: "none".into(),
        };
    }
    let zero = tol::KAPPA_LAMBDA_ZERO;
    if k.abs() <= zero && l.abs() <= zero {
        let listed = in_continuum_list(pair);
        return StructureDecision {
            class: StructureClass::InfinitelyManyCylinders,
            rule: format!(
                "kappa = lambda = 0{}",
                if listed { "" } else { " (pair not in the continuum list)" }
            ),
        };
    }
    if k * l >= 0.0 {
        let listed = in_scroll_list(pair);
        return StructureDecision {
            class: StructureClass::Scroll,
            rule: format!(
                "kappa*lambda >= 0 with kappa^2 + lambda^2 != 0{}",
                if listed { "" } else { " (pair not in the scroll list)" }
            ),
        };
    }
    // kappa*lambda < 0: the tangency-root criterion decides
    if !inv.alpha.is_finite() {
        return StructureDecision {
            class: StructureClass::Unclassified(
                "the root criterion needs the leading exponent, whose defining clause divides by zero"
                    .into(),
            ),
            rule: "kappa*lambda < 0, exponent unavailable".into(),
        };
    }
    let g = 1.0 + inv.alpha * inv.alpha * l / k;
    if g > 0.0 {
        let listed = in_unique_list(pair);
        StructureDecision {
            class: StructureClass::UniqueCylinder,
            rule: format!(
                "kappa*lambda < 0 and 1 + alpha^2 lambda/kappa = {g:.6} > 0{}",
                if listed { "" } else { " (pair not in the unique list)" }
            ),
        }
    } else {
        let listed = in_scroll_list(pair);
        StructureDecision {
            class: StructureClass::Scroll,
            rule: format!(
                "kappa*lambda < 0 and 1 + alpha^2 lambda/kappa = {g:.6} <= 0{}",
                if listed { "" } else { " (pair not in the scroll list)" }
            ),
        }
    }
}

/// Full pair analysis that never fails: table problems and the focus–focus
/// pair are folded into the structure class.
#[derive(Debug, Clone, Serialize)]
pub struct PairSummary {
    pub upper: SpectralData,
    pub lower: SpectralData,
    pub invariants: Option<PairInvariants>,
    pub structure: StructureClass,
    pub rule: String,
}

pub fn analyze_pair(cp: &CanonicalParams, eps: f64) -> PairSummary {
    let upper = classify_piece_eps(cp.a_plus, cp.c_plus, cp.d_plus, eps);
    let lower = classify_piece_eps(cp.a_minus, cp.c_minus, cp.d_minus, eps);
    match pair_invariants(cp, eps) {
        Ok(inv) => {
            let decision = structure_decision(&inv);
            PairSummary {
                upper,
                lower,
                invariants: Some(inv),
                structure: decision.class,
                rule: decision.rule,
            }
        }
        Err(SpectralError::FocusFocusPath) => PairSummary {
            upper,
            lower,
            invariants: None,
            structure: StructureClass::FocusFocus,
            rule: "both pieces rotate with nonzero contraction; at most one invariant cylinder"
                .into(),
        },
        Err(e) => PairSummary {
            upper,
            lower,
            invariants: None,
            structure: StructureClass::Unclassified(e.to_string()),
            rule: "none".into(),
        },
    }
}

/// The tangency diagnostic `f2(v, w) = kappa w (v-1)^2 + lambda v (w-1)^2`
/// on the open unit square.
pub fn f2_diagnostic(v: f64, w: f64, kappa: f64, lambda: f64) -> f64 {
    kappa * w * (v - 1.0) * (v - 1.0) + lambda * v * (w - 1.0) * (w - 1.0)
}

/// Outcome of the scalar tangency-root test.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TangencyRoot {
    /// Whether `lambda v (v^alpha - 1)^2 / (kappa v^alpha (v-1)^2) + 1 = 0`
    /// admits a root on `(0, 1)` — equivalent to `1 + alpha^2 lambda/kappa > 0`.
    pub admits_root: bool,
    /// `1 + alpha^2 lambda / kappa`, the limit of the left side at `v -> 1`.
    pub limit_at_one: f64,
    /// A bisected root when an interior sign change exists.
    pub root: Option<f64>,
    /// Root-equation value at the located root.
    pub residual: Option<f64>,
}

/// Decides whether the scalar tangency equation has a zero in `(0, 1)` and
/// locates one by bisection when an interior sign change is present.
pub fn tangency_root_test(
    kappa: f64,
    lambda: f64,
    alpha: f64,
) -> Result<TangencyRoot, SpectralError> {
    if kappa == 0.0 {
        return Err(SpectralError::DegenerateKappa);
    }
    let limit = 1.0 + alpha * alpha * lambda / kappa;
    let g = |v: f64| lambda * v * (v.powf(alpha) - 1.0).powi(2)
        / (kappa * v.powf(alpha) * (v - 1.0).powi(2))
        + 1.0;
    let mut root = None;
    let mut residual = None;
    let lo = 1e-9;
    let hi = 1.0 - 1e-9;
    let n = 512;
    let mut prev_v = lo;
    let mut prev_g = g(lo);
    for i in 1..=n {
        let v = lo + (hi - lo) * i as f64 / n as f64;
        let gv = g(v);
        if prev_g.is_finite() && gv.is_finite() && prev_g.signum() != gv.signum() {
            if let Some(r) = numeric::brent(g, prev_v, v, 1e-14, 1e-13) {
                root = Some(r.x);
                residual = Some(r.f);
            }
            break;
        }
        prev_v = v;
        prev_g = gv;
    }
    Ok(TangencyRoot {
        admits_root: limit > 0.0,
        limit_at_one: limit,
        root,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_1() -> CanonicalParams {
        CanonicalParams {
            a_plus: 0.05,
            b_plus: 0.0,
            c_plus: -0.4375,
            d_plus: 0.625,
            a_minus: 1.0,
            b_minus: 1.0,
            c_minus: 0.5,
            d_minus: 0.1875,
            m: 1.0,
        }
    }

    #[test]
    fn classify_example_pieces() {
        // d > 0 forces opposite-sign eigenvalues
        assert_eq!(classify_piece(0.05, -0.4375, 0.625).kind, SpectralType::Sa);
        assert_eq!(classify_piece(-1.0, 0.0, -1.0).kind, SpectralType::Ce);
        assert_eq!(classify_piece(1.0, 0.0, 0.0).kind, SpectralType::D2);
        assert_eq!(classify_piece(0.3, 2.0, -0.5).kind, SpectralType::No);
        assert_eq!(classify_piece(0.3, 2.0, -1.0).kind, SpectralType::Nd);
        assert_eq!(classify_piece(0.3, 2.0, -3.0).kind, SpectralType::Fo);
        assert_eq!(classify_piece(0.3, 2.0, 0.0).kind, SpectralType::D1);
    }

    #[test]
    fn classification_ignores_x_rate() {
        for a in [-3.0, 0.0, 0.4, 11.0] {
            assert_eq!(classify_piece(a, -0.4375, 0.625).kind, SpectralType::Sa);
            assert_eq!(classify_piece(a, 0.0, -2.0).kind, SpectralType::Ce);
        }
    }

    #[test]
    fn vieta_consistency() {
        for &(c, d) in &[
            (-0.4375, 0.625),
            (0.5, 0.1875),
            (2.0, -0.5),
            (1.0, -3.0),
            (0.0, -2.0),
            (1.5, 0.0),
            (0.0, 0.0),
        ] {
            let sd = classify_piece(0.1, c, d);
            let sum = sd.lambda2 + sd.lambda3;
            let prod = sd.lambda2 * sd.lambda3;
            assert!((sum.re - c).abs() < 1e-12 && sum.im.abs() < 1e-12, "({c},{d})");
            assert!(
                (prod.re + d).abs() < 1e-12 && prod.im.abs() < 1e-12,
                "({c},{d})"
            );
        }
    }

    #[test]
    fn alpha_beta_of_example_1() {
        let up = classify_piece(0.05, -0.4375, 0.625);
        let al = alpha_of(&up, 0.05, -0.4375, 0.625).unwrap();
        // s = sqrt(689)/16
        let s = 689.0_f64.sqrt() / 16.0;
        assert!((up.s - s).abs() < 1e-14);
        assert!((al.value - (s + 0.4375) / (s - 0.4375)).abs() < 1e-12);
        assert!((al.value - 1.72732).abs() < 1e-4);

        let lo = classify_piece(1.0, 0.5, 0.1875);
        let be = beta_of(&lo, 1.0, 0.5, 0.1875).unwrap();
        assert_eq!(be.value, 1.0 / 3.0); // S = 1 exactly
    }

    #[test]
    fn center_alpha_is_frequency() {
        let sd = classify_piece(-1.0, 0.0, -1.0);
        let al = alpha_of(&sd, -1.0, 0.0, -1.0).unwrap();
        assert_eq!(al.value, 1.0);
        assert_eq!(al.rule, ExponentRule::CenterFrequency);
    }

    #[test]
    fn drift_alpha_requires_nonzero_a() {
        let sd = classify_piece(0.0, 0.0, 0.0);
        assert!(matches!(
            alpha_of(&sd, 0.0, 0.0, 0.0),
            Err(SpectralError::ClauseDivisorZero { .. })
        ));
    }

    #[test]
    fn constant_rows() {
        use SpectralType::*;
        assert_eq!(kappa_lambda((Ce, Ce), 1.0, 1.0, 0.0, 0.0).unwrap(), (0.0, 0.0));
        assert_eq!(kappa_lambda((Sa, D2), 2.0, 0.5, -1.0, 0.0).unwrap(), (1.0, -1.0));
        assert_eq!(kappa_lambda((No, D2), 2.0, 0.5, -1.0, 0.0).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn example_1_invariants() {
        let inv = pair_invariants(&example_1(), tol::DISC_EPS).unwrap();
        assert_eq!(inv.pair, (SpectralType::Sa, SpectralType::Sa));
        assert!(!inv.swapped);
        assert!((inv.kappa + 0.33328).abs() < 1e-3, "kappa = {}", inv.kappa);
        assert!((inv.lambda - 0.08759).abs() < 1e-3, "lambda = {}", inv.lambda);
        let d = structure_decision(&inv);
        assert_eq!(d.class, StructureClass::UniqueCylinder);
        let g = 1.0 + inv.alpha * inv.alpha * inv.lambda / inv.kappa;
        assert!((g - 0.2159).abs() < 1e-2, "g = {g}");
    }

    #[test]
    fn example_2_is_continuum() {
        let cp = CanonicalParams {
            a_plus: -1.0,
            b_plus: 1.0,
            c_plus: 0.0,
            d_plus: -1.0,
            a_minus: -2.0,
            b_minus: -1.0,
            c_minus: 0.0,
            d_minus: -2.0,
            m: 0.0,
        };
        let inv = pair_invariants(&cp, tol::DISC_EPS).unwrap();
        assert_eq!(inv.pair, (SpectralType::Ce, SpectralType::Ce));
        assert_eq!(inv.kappa, 0.0);
        assert_eq!(inv.lambda, 0.0);
        assert_eq!(
            structure_of(&inv),
            StructureClass::InfinitelyManyCylinders
        );
    }

    #[test]
    fn scroll_for_positive_product() {
        // (No, D2) with any exponents: kappa = lambda = 1
        let cp = CanonicalParams {
            a_plus: 0.3,
            b_plus: 0.0,
            c_plus: -2.0,
            d_plus: -0.5,
            a_minus: 0.4,
            b_minus: 0.0,
            c_minus: 0.0,
            d_minus: 0.0,
            m: 0.0,
        };
        let inv = pair_invariants(&cp, tol::DISC_EPS).unwrap();
        assert_eq!(inv.pair, (SpectralType::No, SpectralType::D2));
        assert_eq!(structure_of(&inv), StructureClass::Scroll);
    }

    #[test]
    fn swapped_pair_uses_mirrored_row() {
        // (No, Sa) has no printed row; the mirrored (Sa, No) row must be used
        // with the pieces exchanged.
        let cp = CanonicalParams {
            a_plus: 0.3,
            b_plus: 0.0,
            c_plus: -2.0,
            d_plus: -0.5,
            a_minus: 0.4,
            b_minus: 0.0,
            c_minus: -0.4375,
            d_minus: 0.625,
            m: 0.0,
        };
        let inv = pair_invariants(&cp, tol::DISC_EPS).unwrap();
        assert_eq!(inv.pair, (SpectralType::No, SpectralType::Sa));
        assert_eq!(inv.table_pair, (SpectralType::Sa, SpectralType::No));
        assert!(inv.swapped);
        // the table-upper exponent is the saddle ratio of the lower piece
        assert_eq!(inv.alpha_source, Some(ExponentRule::SaddleRatio));
    }

    #[test]
    fn unparseable_row_reported() {
        let cp = CanonicalParams {
            a_plus: 0.3,
            b_plus: 0.0,
            c_plus: -2.0,
            d_plus: -0.5,
            a_minus: 0.4,
            b_minus: 0.0,
            c_minus: 0.0,
            d_minus: -1.0,
            m: 0.0,
        };
        // (No, Ce)
        assert!(matches!(
            pair_invariants(&cp, tol::DISC_EPS),
            Err(SpectralError::UnparseableTableRow(_, _))
        ));
        let summary = analyze_pair(&cp, tol::DISC_EPS);
        assert!(matches!(summary.structure, StructureClass::Unclassified(_)));
    }

    #[test]
    fn focus_focus_routed() {
        let cp = CanonicalParams {
            a_plus: 0.3,
            b_plus: 0.0,
            c_plus: 1.0,
            d_plus: -3.0,
            a_minus: 0.4,
            b_minus: 0.0,
            c_minus: -1.0,
            d_minus: -2.0,
            m: 0.0,
        };
        let summary = analyze_pair(&cp, tol::DISC_EPS);
        assert_eq!(summary.structure, StructureClass::FocusFocus);
    }

    #[test]
    fn constant_rows_survive_undefined_exponents() {
        // (D2, D2) with zero drift rates: the zero row never needs alpha
        let cp = CanonicalParams {
            a_plus: 0.0,
            b_plus: 0.3,
            c_plus: 0.0,
            d_plus: 0.0,
            a_minus: 0.0,
            b_minus: -0.2,
            c_minus: 0.0,
            d_minus: 0.0,
            m: 0.1,
        };
        let inv = pair_invariants(&cp, tol::DISC_EPS).unwrap();
        assert_eq!(inv.kappa, 0.0);
        assert_eq!(inv.lambda, 0.0);
        assert_eq!(structure_of(&inv), StructureClass::InfinitelyManyCylinders);
    }

    #[test]
    fn f2_single_sign_without_lambda() {
        for v in [0.1, 0.4, 0.9] {
            for w in [0.2, 0.5, 0.8] {
                assert!(f2_diagnostic(v, w, 2.0, 0.0) > 0.0);
            }
        }
    }

    #[test]
    fn tangency_root_test_examples() {
        // alpha = 2: limit 1 - 4 = -3 <= 0, no root claimed
        let t = tangency_root_test(1.0, -1.0, 2.0).unwrap();
        assert!(!t.admits_root);
        assert!((t.limit_at_one + 3.0).abs() < 1e-12);

        // alpha = 0.5: limit 0.75 > 0, criterion admits a root
        let t = tangency_root_test(1.0, -1.0, 0.5).unwrap();
        assert!(t.admits_root);
        assert!((t.limit_at_one - 0.75).abs() < 1e-12);

        assert!(matches!(
            tangency_root_test(0.0, -1.0, 0.5),
            Err(SpectralError::DegenerateKappa)
        ));
    }

    #[test]
    fn kappa_lambda_sign_class_invariant_under_swap() {
        // The reflection (x,y,z) -> (x,-y,-z) exchanges the pieces and
        // preserves the dynamics. The sign of kappa*lambda is preserved by
        // the table (kappa'*lambda' = (alpha'/alpha)^2-scaled product of the
        // same four factors); the root criterion itself is orientation
        // sensitive on the kappa*lambda < 0 branch and is arbitrated by the
        // numeric audit instead.
        let cp = example_1();
        let swapped = CanonicalParams {
            a_plus: cp.a_minus,
            b_plus: -cp.b_minus,
            c_plus: cp.c_minus,
            d_plus: cp.d_minus,
            a_minus: cp.a_plus,
            b_minus: -cp.b_plus,
            c_minus: cp.c_plus,
            d_minus: cp.d_plus,
            m: 0.0,
        };
        let a = pair_invariants(&cp, tol::DISC_EPS).unwrap();
        let b = pair_invariants(&swapped, tol::DISC_EPS).unwrap();
        assert_eq!(
            (a.kappa * a.lambda).signum(),
            (b.kappa * b.lambda).signum()
        );
    }
}
