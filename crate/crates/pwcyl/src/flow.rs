//! Closed-form flows of the canonical pieces, first-return (half) maps on the
//! switching plane, and the affine maps induced on the `x` coordinate.
//!
//! The planar `(y, z)` subsystem of a canonical piece decouples from `x`:
//! `y' = c y + d z + e`, `z' = y` with `e = -1` (upper) or `+1` (lower).
//! Writing `z'' = c z' + d z + e`, each spectral branch gets its own closed
//! form; `x(t) = e^{at} x0 + b I(t) + M t phi1(at)` with the convolution
//! integral `I(t) = int_0^t e^{a(t-s)} z(s) ds` evaluated through the `phi`
//! family, so resonant parameter values are removable instead of being
//! evaluated by near-singular generic formulas.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::model::{CanonicalParams, FocusCanonicalParams, Side, Vec3};
use crate::numeric::{brent, phi1, phi1_c, phi1_div_diff, phi2, phi3, sinc};
use crate::spectral::{classify_piece_eps, SpectralType};
use crate::tol;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("parametrization divisor vanishes: {what}")]
    ClauseDivisor { what: &'static str },
    #[error("parameter outside the clause's valid range: {what}")]
    OutOfRange { what: String },
    #[error("the curve parametrization applies to the plane-transversal canonical form only")]
    UnsupportedConvention,
}

/// Controls of the return-time search.
#[derive(Debug, Clone, Copy)]
pub struct SearchConfig {
    /// Absolute cap on the return time; overrides the factor when set.
    pub t_max: Option<f64>,
    /// Cap as a multiple of the piece's characteristic time.
    pub t_max_factor: f64,
    /// Relative `|z|` refinement target at the crossing.
    pub z_tol: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            t_max: None,
            t_max_factor: tol::T_MAX_FACTOR,
            z_tol: tol::HALF_MAP_Z_TOL,
        }
    }
}

/// One half-excursion: smallest `tau > 0` with `z(tau) = 0`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HalfReturn {
    pub tau: f64,
    pub y_exit: f64,
    /// `false` when the orbit never comes back (scroll regimes) or the entry
    /// value has the wrong sign for this piece.
    pub defined: bool,
}

impl HalfReturn {
    fn undefined() -> Self {
        HalfReturn {
            tau: f64::NAN,
            y_exit: f64::NAN,
            defined: false,
        }
    }
}

/// The affine action on `x` over one half-excursion: `x -> scale x + offset`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AffineXMap {
    pub scale: f64,
    pub offset: f64,
}

impl AffineXMap {
    pub fn apply(&self, x: f64) -> f64 {
        self.scale * x + self.offset
    }

    /// The inverse-direction map (exchanges entry and exit).
    pub fn backward(&self) -> AffineXMap {
        AffineXMap {
            scale: 1.0 / self.scale,
            offset: -self.offset / self.scale,
        }
    }

    /// `self` applied after `first`.
    pub fn compose_after(&self, first: &AffineXMap) -> AffineXMap {
        AffineXMap {
            scale: self.scale * first.scale,
            offset: self.scale * first.offset + self.offset,
        }
    }
}

// ---------------------------------------------------------------------------
// planar kernel
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
enum PlanarKind {
    /// Distinct real rates, `d != 0`.
    RealSplit { l2: f64, l3: f64 },
    /// Repeated nonzero rate `l = c/2`.
    Repeated { l: f64 },
    /// Complex pair `sigma +/- i omega`.
    Spiral { sigma: f64, omega: f64 },
    /// `d = 0`, `c != 0`: rates `{c, 0}`.
    Shear,
    /// `c = d = 0`.
    Drift,
}

#[derive(Debug, Clone, Copy)]
struct Planar {
    c: f64,
    d: f64,
    e: f64,
    kind: PlanarKind,
}

#[derive(Debug, Clone, Copy)]
enum Limit {
    NegInf,
    PosInf,
    Finite(f64),
}

fn inf_of_sign(v: f64) -> Limit {
    if v > 0.0 {
        Limit::PosInf
    } else {
        Limit::NegInf
    }
}

impl Planar {
    fn from_type(kind: SpectralType, c: f64, d: f64, e: f64) -> Planar {
        let disc = c * c + 4.0 * d;
        let pk = match kind {
            SpectralType::Sa | SpectralType::No => {
                let s = disc.max(0.0).sqrt();
                PlanarKind::RealSplit {
                    l2: 0.5 * (c + s),
                    l3: 0.5 * (c - s),
                }
            }
            SpectralType::Nd => PlanarKind::Repeated { l: 0.5 * c },
            SpectralType::Fo | SpectralType::Ce => PlanarKind::Spiral {
                sigma: 0.5 * c,
                omega: 0.5 * (-disc).max(0.0).sqrt(),
            },
            SpectralType::D1 => PlanarKind::Shear,
            SpectralType::D2 => PlanarKind::Drift,
        };
        Planar { c, d, e, kind: pk }
    }

    fn zp(&self) -> f64 {
        -self.e / self.d
    }

    /// Fundamental solutions of `u'' = c u' + d u` with `C(0)=1, C'(0)=0`
    /// and `S(0)=0, S'(0)=1`, in cancellation-free forms.
    fn cs(&self, t: f64) -> (f64, f64) {
        match self.kind {
            PlanarKind::RealSplit { l2, l3 } => {
                let gap = l2 - l3;
                let e3 = (l3 * t).exp();
                let p = t * phi1(gap * t);
                (e3 * (1.0 - l3 * p), e3 * p)
            }
            PlanarKind::Repeated { l } => {
                let el = (l * t).exp();
                ((1.0 - l * t) * el, t * el)
            }
            PlanarKind::Spiral { sigma, omega } => {
                let es = (sigma * t).exp();
                let sc = t * sinc(omega * t);
                (es * ((omega * t).cos() - sigma * sc), es * sc)
            }
            PlanarKind::Shear | PlanarKind::Drift => unreachable!("cs undefined for d = 0"),
        }
    }

    /// State `(w, z)` at time `t` from `(w0, z0)`, where `w = z'`.
    fn state(&self, t: f64, w0: f64, z0: f64) -> (f64, f64) {
        match self.kind {
            PlanarKind::RealSplit { .. }
            | PlanarKind::Repeated { .. }
            | PlanarKind::Spiral { .. } => {
                let zp = self.zp();
                let (cc, ss) = self.cs(t);
                let z = (z0 - zp) * cc + w0 * ss + zp;
                let w = (z0 - zp) * self.d * ss + w0 * (cc + self.c * ss);
                (w, z)
            }
            PlanarKind::Shear => {
                let (c, e) = (self.c, self.e);
                let p = w0 + e / c;
                let w = p * (c * t).exp() - e / c;
                let z = z0 + p * t * phi1(c * t) - e * t / c;
                (w, z)
            }
            PlanarKind::Drift => {
                let w = w0 + self.e * t;
                let z = z0 + w0 * t + 0.5 * self.e * t * t;
                (w, z)
            }
        }
    }

    /// `int_0^t e^{a(t-s)} z(s) ds` for the trajectory from `(w0, z0)`.
    fn x_integral(&self, a: f64, t: f64, w0: f64, z0: f64) -> f64 {
        let eat = (a * t).exp();
        match self.kind {
            PlanarKind::RealSplit { l2, l3 } => {
                let zp = self.zp();
                let dz = z0 - zp;
                let (x2, x3) = ((l2 - a) * t, (l3 - a) * t);
                zp * t * phi1(a * t)
                    + eat * t * ((w0 - dz * l3) * t * phi1_div_diff(x2, x3) + dz * phi1(x3))
            }
            PlanarKind::Repeated { l } => {
                let zp = self.zp();
                let dz = z0 - zp;
                let x = (l - a) * t;
                zp * t * phi1(a * t) + eat * (dz * t * phi1(x) + (w0 - l * dz) * t * t * phi2(x))
            }
            PlanarKind::Spiral { sigma, omega } => {
                let zp = self.zp();
                let p = z0 - zp;
                let q = (w0 - sigma * p) / omega;
                let j = Complex64::new(eat * t, 0.0)
                    * phi1_c(Complex64::new((sigma - a) * t, omega * t));
                zp * t * phi1(a * t) + p * j.re + q * j.im
            }
            PlanarKind::Shear => {
                let (c, e) = (self.c, self.e);
                let p = w0 + e / c;
                let k0 = z0 - p / c;
                k0 * t * phi1(a * t)
                    + (p / c) * eat * t * phi1((c - a) * t)
                    + (-e / c) * eat * t * t * phi2(-a * t)
            }
            PlanarKind::Drift => {
                z0 * t * phi1(a * t)
                    + w0 * eat * t * t * phi2(-a * t)
                    + 0.5 * self.e * eat * t * t * t * phi3(-a * t)
            }
        }
    }

    fn rate(&self) -> f64 {
        match self.kind {
            PlanarKind::RealSplit { l2, l3 } => l2.abs().max(l3.abs()),
            PlanarKind::Repeated { l } => l.abs(),
            PlanarKind::Spiral { sigma, omega } => sigma.abs().max(omega),
            PlanarKind::Shear => self.c.abs(),
            PlanarKind::Drift => 0.0,
        }
    }

    fn t_cap(&self, cfg: &SearchConfig) -> f64 {
        if let Some(t) = cfg.t_max {
            return t;
        }
        let r = self.rate();
        let char_time = if r > 0.0 { 1.0 / r } else { 1.0 };
        cfg.t_max_factor * char_time
    }

    /// First positive zero of `w(t)` from `(w0 > 0, z0 = 0)`, if any.
    /// `w` is (at most) a two-term real exponential and crosses at most once.
    fn w_root(&self, w0: f64) -> Option<f64> {
        let e = self.e;
        match self.kind {
            PlanarKind::RealSplit { l2, l3 } => {
                let gap = l2 - l3;
                let (b2, b3) = (e + w0 * l2, e + w0 * l3);
                if b2 == 0.0 {
                    return None;
                }
                let r = b3 / b2;
                if r <= 1.0 {
                    return None;
                }
                Some(r.ln() / gap)
            }
            PlanarKind::Repeated { l } => {
                let q = e + w0 * l;
                if q < 0.0 {
                    Some(-w0 / q)
                } else {
                    None
                }
            }
            PlanarKind::Shear => {
                let c = self.c;
                let p = w0 + e / c;
                if p == 0.0 {
                    return None;
                }
                let r = e / (c * p);
                if r <= 0.0 {
                    return None;
                }
                let t = r.ln() / c;
                if t > 0.0 {
                    Some(t)
                } else {
                    None
                }
            }
            PlanarKind::Drift => {
                if e < 0.0 {
                    Some(-w0 / e)
                } else {
                    None
                }
            }
            PlanarKind::Spiral { .. } => unreachable!("spiral handled by scanning"),
        }
    }

    /// Limit of `z(t)` as `t -> inf` from `(w0, z0 = 0)`, non-oscillating
    /// branches only.
    fn z_limit(&self, w0: f64) -> Limit {
        match self.kind {
            PlanarKind::RealSplit { l2, l3 } => {
                let zp = self.zp();
                let gap = l2 - l3;
                let a2 = (w0 + zp * l3) / gap;
                let a3 = (-zp * l2 - w0) / gap;
                if l2 > 0.0 {
                    if a2 != 0.0 {
                        return inf_of_sign(a2);
                    }
                    if l3 > 0.0 && a3 != 0.0 {
                        return inf_of_sign(a3);
                    }
                }
                Limit::Finite(zp)
            }
            PlanarKind::Repeated { l } => {
                let zp = self.zp();
                if l > 0.0 {
                    let q = w0 + l * zp;
                    if q != 0.0 {
                        return inf_of_sign(q);
                    }
                    if zp != 0.0 {
                        return inf_of_sign(-zp);
                    }
                }
                Limit::Finite(zp)
            }
            PlanarKind::Shear => {
                let (c, e) = (self.c, self.e);
                let p = w0 + e / c;
                let (k0, k1, k2) = (-p / c, p / c, -e / c);
                if c > 0.0 && k1 != 0.0 {
                    return inf_of_sign(k1);
                }
                if k2 != 0.0 {
                    return inf_of_sign(k2);
                }
                Limit::Finite(k0)
            }
            PlanarKind::Drift => {
                if self.e != 0.0 {
                    inf_of_sign(self.e)
                } else {
                    Limit::PosInf
                }
            }
            PlanarKind::Spiral { .. } => unreachable!(),
        }
    }

    /// Smallest `tau > 0` with `z(tau) = 0` starting from `z = 0`,
    /// `z' = w0 != 0`.
    fn first_return(&self, w0: f64, cfg: &SearchConfig) -> Option<f64> {
        if w0 == 0.0 || !w0.is_finite() {
            return None;
        }
        if w0 < 0.0 {
            // mirror z -> -z: same zero set, same times
            let mirrored = Planar {
                c: self.c,
                d: self.d,
                e: -self.e,
                kind: self.kind,
            };
            return mirrored.first_return(-w0, cfg);
        }
        let t_cap = self.t_cap(cfg);
        let z_tol = cfg.z_tol * (1.0 + w0.abs());
        let zf = |t: f64| self.state(t, w0, 0.0).1;

        match self.kind {
            PlanarKind::Drift => {
                if self.e < 0.0 {
                    let tau = -2.0 * w0 / self.e;
                    (tau <= t_cap).then_some(tau)
                } else {
                    None
                }
            }
            PlanarKind::Spiral { omega, .. } => {
                let h = std::f64::consts::FRAC_PI_8 / omega.max(1e-300);
                let mut prev_t = 0.0;
                let mut t = h;
                while t <= t_cap + h {
                    if zf(t) <= 0.0 {
                        return refine_down(&zf, prev_t, t, z_tol);
                    }
                    prev_t = t;
                    t += h;
                }
                None
            }
            _ => {
                let t_star = self.w_root(w0)?;
                match self.z_limit(w0) {
                    Limit::Finite(v) if v >= 0.0 => return None,
                    Limit::PosInf => return None,
                    _ => {}
                }
                // z rises on (0, t*), then decreases monotonically; double
                // out from t* until the sign flips.
                if !(zf(t_star) > 0.0) {
                    // excursion too short to separate from the start
                    return refine_down(&zf, 0.0, t_star.max(f64::MIN_POSITIVE), z_tol);
                }
                let mut lo = t_star;
                let mut h = (t_star * 0.5).max(1e-6 / self.rate().max(1e-6));
                loop {
                    let hi = lo + h;
                    if hi > t_cap {
                        return None;
                    }
                    if zf(hi) <= 0.0 {
                        return refine_down(&zf, lo, hi, z_tol);
                    }
                    lo = hi;
                    h *= 2.0;
                }
            }
        }
    }
}

/// Polishes the first sign change of `z` in `(lo, hi]`, where `z > 0` just
/// after `lo` (`lo` may be the excursion start with `z(lo) = 0`).
fn refine_down<F: Fn(f64) -> f64>(zf: &F, lo: f64, hi: f64, z_tol: f64) -> Option<f64> {
    let mut a = lo;
    if !(zf(a) > 0.0) {
        let mut step = (hi - lo) * 0.5;
        let mut found = false;
        for _ in 0..200 {
            let cand = lo + step;
            if zf(cand) > 0.0 {
                a = cand;
                found = true;
                break;
            }
            step *= 0.5;
        }
        if !found {
            return None;
        }
    }
    brent(zf, a, hi, 1e-15 * hi.abs().max(1.0), z_tol).map(|r| r.x)
}

// ---------------------------------------------------------------------------
// piece-level flows
// ---------------------------------------------------------------------------

/// Relation between the physical `y` and the planar derivative `w = z'`.
#[derive(Debug, Clone, Copy)]
enum Convention {
    /// Transversal canonical form: `z' = y`.
    Direct,
    /// Focus form: `z' = -y + T z`.
    Rotated { t_coef: f64 },
}

/// Closed-form flow of one piece together with its metadata.
#[derive(Debug, Clone, Copy)]
pub struct PieceFlow {
    pub side: Side,
    pub kind: SpectralType,
    pub a: f64,
    pub b: f64,
    /// Constant drive in the `x` equation (0 upper, `m` lower).
    pub m: f64,
    planar: Planar,
    convention: Convention,
}

impl PieceFlow {
    pub fn canonical_upper(cp: &CanonicalParams, eps: f64) -> PieceFlow {
        let kind = classify_piece_eps(cp.a_plus, cp.c_plus, cp.d_plus, eps).kind;
        PieceFlow {
            side: Side::Upper,
            kind,
            a: cp.a_plus,
            b: cp.b_plus,
            m: 0.0,
            planar: Planar::from_type(kind, cp.c_plus, cp.d_plus, -1.0),
            convention: Convention::Direct,
        }
    }

    pub fn canonical_lower(cp: &CanonicalParams, eps: f64) -> PieceFlow {
        let kind = classify_piece_eps(cp.a_minus, cp.c_minus, cp.d_minus, eps).kind;
        PieceFlow {
            side: Side::Lower,
            kind,
            a: cp.a_minus,
            b: cp.b_minus,
            m: cp.m,
            planar: Planar::from_type(kind, cp.c_minus, cp.d_minus, 1.0),
            convention: Convention::Direct,
        }
    }

    /// Upper focus piece: planar part `y' = D2 z + a2`, `z' = -y + T2 z`,
    /// i.e. `z'' = T2 z' - D2 z - a2`.
    pub fn focus_upper(fp: &FocusCanonicalParams) -> PieceFlow {
        PieceFlow {
            side: Side::Upper,
            kind: SpectralType::Fo,
            a: fp.a_plus,
            b: fp.b_plus,
            m: 0.0,
            planar: Planar::from_type(SpectralType::Fo, fp.t2, -fp.d2, -fp.a2),
            convention: Convention::Rotated { t_coef: fp.t2 },
        }
    }

    pub fn focus_lower(fp: &FocusCanonicalParams) -> PieceFlow {
        PieceFlow {
            side: Side::Lower,
            kind: SpectralType::Fo,
            a: fp.a_minus,
            b: fp.b_minus,
            m: fp.m,
            planar: Planar::from_type(SpectralType::Fo, fp.t1, -fp.d1, -fp.a1),
            convention: Convention::Rotated { t_coef: fp.t1 },
        }
    }

    fn w_of(&self, y: f64, z: f64) -> f64 {
        match self.convention {
            Convention::Direct => y,
            Convention::Rotated { t_coef } => -y + t_coef * z,
        }
    }

    fn y_of(&self, w: f64, z: f64) -> f64 {
        match self.convention {
            Convention::Direct => w,
            Convention::Rotated { t_coef } => t_coef * z - w,
        }
    }

    /// Exact flow of the piece for any time `t` and point `p = (x, y, z)`.
    pub fn flow(&self, t: f64, p: &Vec3) -> Vec3 {
        let (x0, y0, z0) = (p[0], p[1], p[2]);
        let w0 = self.w_of(y0, z0);
        let (w, z) = self.planar.state(t, w0, z0);
        let x = (self.a * t).exp() * x0
            + self.b * self.planar.x_integral(self.a, t, w0, z0)
            + self.m * t * phi1(self.a * t);
        [x, self.y_of(w, z), z]
    }

    /// Sign of the `y` entry values that launch an excursion into this
    /// piece's half-space.
    pub fn entry_sign(&self) -> f64 {
        match (self.side, self.convention) {
            (Side::Upper, Convention::Direct) => 1.0,
            (Side::Lower, Convention::Direct) => -1.0,
            (Side::Upper, Convention::Rotated { .. }) => -1.0,
            (Side::Lower, Convention::Rotated { .. }) => 1.0,
        }
    }

    /// Half-return map: from `(., y_entry, 0)` to the next plane crossing.
    pub fn half_map(&self, y_entry: f64, cfg: &SearchConfig) -> HalfReturn {
        let w0 = self.w_of(y_entry, 0.0);
        let inward = match self.side {
            Side::Upper => w0 > 0.0,
            Side::Lower => w0 < 0.0,
        };
        if !inward || !y_entry.is_finite() {
            return HalfReturn::undefined();
        }
        match self.planar.first_return(w0, cfg) {
            Some(tau) => {
                let (w, z) = self.planar.state(tau, w0, 0.0);
                HalfReturn {
                    tau,
                    y_exit: self.y_of(w, z),
                    defined: true,
                }
            }
            None => HalfReturn::undefined(),
        }
    }

    /// The forward affine `x` map over a completed half-excursion.
    pub fn x_affine(&self, y_entry: f64, half: &HalfReturn) -> AffineXMap {
        assert!(half.defined, "x map requires a defined half return");
        let tau = half.tau;
        let w0 = self.w_of(y_entry, 0.0);
        AffineXMap {
            scale: (self.a * tau).exp(),
            offset: self.b * self.planar.x_integral(self.a, tau, w0, 0.0)
                + self.m * tau * phi1(self.a * tau),
        }
    }
}

// ---------------------------------------------------------------------------
// curve parametrizations of the half maps
// ---------------------------------------------------------------------------

/// A point of the curve coordinates used by the per-type parametrization.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct VWPoint {
    pub v: f64,
    pub w: f64,
}

/// Half-map data produced by the algebraic (curve inversion) route.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ParamReturn {
    pub y_entry: f64,
    pub y_exit: f64,
    pub tau: f64,
    pub vw: VWPoint,
}

/// The curve relation tying `w` to `v` for a given type: `w = v^alpha`
/// (saddle/node), `w = ln v` (repeated/shear), `w = v^2` (drift),
/// `w = tan(alpha ln v)` (focus); centers satisfy `v^2 + w^2 = 1` and are
/// parametrized by angle instead.
pub fn curve_w_of_v(kind: SpectralType, v: f64, alpha: f64) -> f64 {
    match kind {
        SpectralType::Sa | SpectralType::No => v.powf(alpha),
        SpectralType::Nd | SpectralType::D1 => v.ln(),
        SpectralType::D2 => v * v,
        SpectralType::Fo => (alpha * v.ln()).tan(),
        SpectralType::Ce => (1.0 - v * v).sqrt(),
    }
}

impl PieceFlow {
    /// Inverts the type's boundary-value relations: from the curve coordinate
    /// `v` (an angle in `(0, pi)` for centers) to `(y_entry, y_exit, tau)`.
    /// Plane-transversal canonical pieces only.
    pub fn parametrized_halfmap(&self, param: f64) -> Result<ParamReturn, FlowError> {
        if !matches!(self.convention, Convention::Direct) {
            return Err(FlowError::UnsupportedConvention);
        }
        let (c, d, e) = (self.planar.c, self.planar.d, self.planar.e);
        match (self.side, self.kind) {
            (Side::Upper, SpectralType::Sa) => {
                let s = split_gap(c, d);
                let v = param;
                if v <= 0.0 {
                    return Err(FlowError::OutOfRange {
                        what: "v must be positive".into(),
                    });
                }
                let tau = -2.0 * v.ln() / (c + s);
                require_tau(tau, "v must lie in (0, 1) for the saddle clause")?;
                let alpha = (s - c) / (s + c);
                let w = v.powf(alpha);
                let (y0, y1) = if c != 0.0 {
                    saddle_printed_y(v, w, alpha, c)
                } else {
                    saddle_linear_solve(c, s, v, w)
                };
                Ok(ParamReturn {
                    y_entry: y0,
                    y_exit: y1,
                    tau,
                    vw: VWPoint { v, w },
                })
            }
            (Side::Upper, SpectralType::No) => {
                let s = split_gap(c, d);
                if c + s == 0.0 {
                    return Err(FlowError::ClauseDivisor { what: "c + s" });
                }
                let v = param;
                if v <= 0.0 {
                    return Err(FlowError::OutOfRange {
                        what: "v must be positive".into(),
                    });
                }
                let tau = 2.0 * v.ln() / (c + s);
                require_tau(tau, "ln(v)/(c + s) must be positive for the node clause")?;
                let alpha = (c - s) / (c + s);
                let w = v.powf(alpha);
                let (y0, y1) = node_linear_solve(c, s, v, w);
                Ok(ParamReturn {
                    y_entry: y0,
                    y_exit: y1,
                    tau,
                    vw: VWPoint { v, w },
                })
            }
            (Side::Lower, SpectralType::Sa | SpectralType::No) => {
                // merged lower clause: both substitutions decay
                let s = split_gap(c, d);
                if c + s == 0.0 {
                    return Err(FlowError::ClauseDivisor { what: "c + S" });
                }
                let v = param;
                if v <= 0.0 {
                    return Err(FlowError::OutOfRange {
                        what: "V must be positive".into(),
                    });
                }
                let tau = -2.0 * v.ln() / (c + s);
                require_tau(tau, "-ln(V)/(c + S) must be positive for the lower clause")?;
                let beta = (s - c) / (s + c);
                let w = v.powf(beta);
                let (p, mm) = (s + c, s - c);
                // (S-c) y0~ - 2 = W ((S-c) y1~ - 2);
                // (S+c) y1~ + 2 = V ((S+c) y0~ + 2)
                let y_exit = 2.0 * (w * (mm * v - mm - p) + p) / (p * mm * (1.0 - v * w));
                let y_entry = (v * (p * y_exit + 2.0) - 2.0) / p;
                Ok(ParamReturn {
                    y_entry,
                    y_exit,
                    tau,
                    vw: VWPoint { v, w },
                })
            }
            (_, SpectralType::Nd) => {
                if c == 0.0 {
                    return Err(FlowError::ClauseDivisor { what: "c" });
                }
                let v = param;
                if v <= 0.0 {
                    return Err(FlowError::OutOfRange {
                        what: "v must be positive".into(),
                    });
                }
                let w = v.ln();
                let tau = 2.0 * w / c;
                require_tau(tau, "ln(v)/c must be positive for the repeated clause")?;
                let ss = (2.0 * w / c) * v; // tau e^{l tau}, l = c/2
                let cc = (1.0 - w) * v;
                self.from_cs(v, w, cc, ss, tau)
            }
            (_, SpectralType::Fo) => {
                if c == 0.0 {
                    return Err(FlowError::ClauseDivisor { what: "c" });
                }
                let v = param;
                if v <= 0.0 {
                    return Err(FlowError::OutOfRange {
                        what: "v must be positive".into(),
                    });
                }
                let tau = v.ln() / c;
                require_tau(tau, "ln(v)/c must be positive for the focus clause")?;
                let (sigma, omega) = (0.5 * c, 0.5 * (-(c * c + 4.0 * d)).sqrt());
                let theta = omega * tau;
                if theta >= std::f64::consts::FRAC_PI_2 {
                    return Err(FlowError::OutOfRange {
                        what: format!(
                            "rotation angle {theta:.3} leaves the principal branch of w = tan"
                        ),
                    });
                }
                let w = theta.tan();
                let den = (1.0 + w * w).sqrt();
                let (sin_t, cos_t) = (w / den, 1.0 / den);
                let es = (sigma * tau).exp(); // = sqrt(v)
                let ss = es * sin_t / omega;
                let cc = es * (cos_t - (sigma / omega) * sin_t);
                self.from_cs(v, w, cc, ss, tau)
            }
            (_, SpectralType::Ce) => {
                let theta = param;
                if !(theta > 0.0 && theta < std::f64::consts::PI) {
                    return Err(FlowError::OutOfRange {
                        what: "center clause takes an angle in (0, pi)".into(),
                    });
                }
                let omega = (-d).sqrt();
                let tau = theta / omega;
                let (v, w) = (theta.cos(), theta.sin());
                self.from_cs(v, w, v, w / omega, tau)
            }
            (_, SpectralType::D1) => {
                if c == 0.0 {
                    return Err(FlowError::ClauseDivisor { what: "c" });
                }
                let v = param;
                if v <= 0.0 {
                    return Err(FlowError::OutOfRange {
                        what: "v must be positive".into(),
                    });
                }
                let w = v.ln();
                let tau = w / c;
                require_tau(tau, "ln(v)/c must be positive for the shear clause")?;
                let y0 = (e / c) * (w / (v - 1.0) - 1.0);
                let y1 = (y0 + e / c) * v - e / c;
                Ok(ParamReturn {
                    y_entry: y0,
                    y_exit: y1,
                    tau,
                    vw: VWPoint { v, w },
                })
            }
            (_, SpectralType::D2) => {
                let v = param;
                require_tau(v, "the drift clause takes v = tau > 0")?;
                Ok(ParamReturn {
                    y_entry: -e * v / 2.0,
                    y_exit: e * v / 2.0,
                    tau: v,
                    vw: VWPoint { v, w: v * v },
                })
            }
        }
    }

    /// Universal inversion once `(C, S)` at the return time are expressed in
    /// the curve coordinates: `z(tau) = 0` is linear in the entry value.
    fn from_cs(
        &self,
        v: f64,
        w: f64,
        cc: f64,
        ss: f64,
        tau: f64,
    ) -> Result<ParamReturn, FlowError> {
        let (c, d, e) = (self.planar.c, self.planar.d, self.planar.e);
        if ss == 0.0 {
            return Err(FlowError::ClauseDivisor { what: "S(tau)" });
        }
        if d == 0.0 {
            return Err(FlowError::ClauseDivisor { what: "d" });
        }
        let zp = -e / d;
        let y_entry = -zp * (1.0 - cc) / ss;
        let y_exit = e * ss + y_entry * (cc + c * ss);
        Ok(ParamReturn {
            y_entry,
            y_exit,
            tau,
            vw: VWPoint { v, w },
        })
    }
}

fn split_gap(c: f64, d: f64) -> f64 {
    (c * c + 4.0 * d).max(0.0).sqrt()
}

fn require_tau(tau: f64, what: &str) -> Result<(), FlowError> {
    if tau.is_finite() && tau > 0.0 {
        Ok(())
    } else {
        Err(FlowError::OutOfRange { what: what.into() })
    }
}

/// The printed closed-form inversion of the upper saddle clause.
fn saddle_printed_y(v: f64, w: f64, alpha: f64, c: f64) -> (f64, f64) {
    let den = c * (v * w - 1.0) * alpha;
    let y0 = -(alpha - 1.0) * (alpha * v - v * w - alpha + v) / den;
    let y1 = -(alpha - 1.0) * (alpha * v * w - alpha * w - w + 1.0) / den;
    (y0, y1)
}

/// Linear 2x2 inversion of the saddle relations
/// `(c+s) y0 - 2 = v ((c+s) y1 - 2)`, `(c-s) y1 - 2 = w ((c-s) y0 - 2)`.
fn saddle_linear_solve(c: f64, s: f64, v: f64, w: f64) -> (f64, f64) {
    let (p, m) = (c + s, c - s);
    let det = p * m * (1.0 - v * w);
    let y0 = (2.0 * m * (1.0 - v) + 2.0 * p * v * (1.0 - w)) / det;
    let y1 = (w * (m * y0 - 2.0) + 2.0) / m;
    (y0, y1)
}

/// Linear 2x2 inversion of the node relations
/// `(c+s) y1 - 2 = v ((c+s) y0 - 2)`, `(c-s) y1 - 2 = w ((c-s) y0 - 2)`.
fn node_linear_solve(c: f64, s: f64, v: f64, w: f64) -> (f64, f64) {
    let (p, m) = (c + s, c - s);
    let det = p * m * (v - w);
    let y0 = 2.0 * (m * (v - 1.0) + p * (1.0 - w)) / det;
    let y1 = (v * (p * y0 - 2.0) + 2.0) / p;
    (y0, y1)
}

// ---------------------------------------------------------------------------
// free-function surface for canonical systems
// ---------------------------------------------------------------------------

/// Flow of the canonical upper piece.
pub fn flow_upper(cp: &CanonicalParams, t: f64, p: &Vec3) -> Vec3 {
    PieceFlow::canonical_upper(cp, tol::DISC_EPS).flow(t, p)
}

/// Flow of the canonical lower piece.
pub fn flow_lower(cp: &CanonicalParams, t: f64, p: &Vec3) -> Vec3 {
    PieceFlow::canonical_lower(cp, tol::DISC_EPS).flow(t, p)
}

/// Upper half map `y0 > 0 -> (tau, y1 <= 0)`.
pub fn half_map_upper(cp: &CanonicalParams, y0: f64) -> HalfReturn {
    PieceFlow::canonical_upper(cp, tol::DISC_EPS).half_map(y0, &SearchConfig::default())
}

/// Lower half map `y1 < 0 -> (tau, y >= 0)` (forward time).
pub fn half_map_lower(cp: &CanonicalParams, y1: f64) -> HalfReturn {
    PieceFlow::canonical_lower(cp, tol::DISC_EPS).half_map(y1, &SearchConfig::default())
}

/// Forward affine `x` map of the upper excursion: `x1 = rho x0 + B`.
pub fn x_affine_upper(cp: &CanonicalParams, y0: f64, half: &HalfReturn) -> AffineXMap {
    PieceFlow::canonical_upper(cp, tol::DISC_EPS).x_affine(y0, half)
}

/// Lower excursion `x` map in the return-composition orientation,
/// `x_entry = (1/xi) x_exit + C` (the backward form of the forward flow).
pub fn x_affine_lower(cp: &CanonicalParams, y1: f64, half: &HalfReturn) -> AffineXMap {
    PieceFlow::canonical_lower(cp, tol::DISC_EPS)
        .x_affine(y1, half)
        .backward()
}
