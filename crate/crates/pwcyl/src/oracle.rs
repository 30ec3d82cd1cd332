//! Independent validation integrator: adaptive Dormand–Prince 5(4) with
//! dense output and `z = 0` event localization.
//!
//! This module never consults the closed forms in [`crate::flow`]; it only
//! evaluates the raw right-hand sides from [`crate::model`]. It backs every
//! derived number in the test suites and the orbit-export command.

use serde::Serialize;
use thiserror::Error;

use crate::model::{AffinePiece, PiecewiseSystem, Side, Vec3};
use crate::tol;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("step budget exhausted at t = {t}")]
    StepBudget { t: f64 },
    #[error("initial point sits on the switching plane at a tangency (|normal velocity| < {guard:e})")]
    StartAtTangency { guard: f64 },
    #[error("initial point on the plane is not a sewing point (the pieces disagree on the crossing direction)")]
    StartNotSewing,
}

/// Integrator controls.
#[derive(Debug, Clone, Copy)]
pub struct OracleConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Hard cap on one step (also bounds the event-scan resolution).
    pub h_max: f64,
    pub max_steps: usize,
    /// Tangency guard on the normal velocity at a crossing.
    pub fold_guard: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            rtol: tol::ORACLE_RTOL,
            atol: tol::ORACLE_ATOL,
            h_max: 0.25,
            max_steps: 5_000_000,
            fold_guard: tol::FOLD_GUARD,
        }
    }
}

/// One recorded sample of an orbit.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TracePoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub side: Side,
    pub crossing: bool,
}

/// One `z = 0` crossing event.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Crossing {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub from: Side,
    pub to: Side,
}

/// Why an integration stopped.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Termination {
    TimeEnd,
    /// Reached the switching plane inside the fold guard.
    TangencyHit,
    /// Reached the plane where the pieces disagree on the crossing
    /// direction; the sewing dynamics is not defined there.
    NotSewing,
}

/// Time-stamped orbit samples plus the crossing events.
#[derive(Debug, Clone, Serialize)]
pub struct OrbitTrace {
    pub points: Vec<TracePoint>,
    pub crossings: Vec<Crossing>,
    pub termination: Termination,
}

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4) with the classic quartic interpolant
// ---------------------------------------------------------------------------

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn axpy(out: &mut Vec3, a: f64, x: &Vec3) {
    for i in 0..3 {
        out[i] += a * x[i];
    }
}

/// One accepted step with its dense-output coefficients.
struct DenseStep {
    t0: f64,
    h: f64,
    r1: Vec3,
    r2: Vec3,
    r3: Vec3,
    r4: Vec3,
    r5: Vec3,
}

impl DenseStep {
    fn eval(&self, t: f64) -> Vec3 {
        let theta = (t - self.t0) / self.h;
        let th1 = 1.0 - theta;
        let mut out = [0.0; 3];
        for i in 0..3 {
            out[i] = self.r1[i]
                + theta
                    * (self.r2[i] + th1 * (self.r3[i] + theta * (self.r4[i] + th1 * self.r5[i])));
        }
        out
    }
}

enum StepOutcome {
    Accepted {
        y_new: Vec3,
        dense: DenseStep,
        h_next: f64,
    },
    Rejected {
        h_next: f64,
    },
}

fn rk_step(
    piece: &AffinePiece,
    cfg: &OracleConfig,
    t: f64,
    y: &Vec3,
    k1: &Vec3,
    h: f64,
) -> Result<StepOutcome, OracleError> {
    let f = |p: &Vec3| piece.eval(p);
    let mut yt = *y;
    axpy(&mut yt, h * A21, k1);
    let k2 = f(&yt);
    yt = *y;
    axpy(&mut yt, h * A31, k1);
    axpy(&mut yt, h * A32, &k2);
    let k3 = f(&yt);
    yt = *y;
    axpy(&mut yt, h * A41, k1);
    axpy(&mut yt, h * A42, &k2);
    axpy(&mut yt, h * A43, &k3);
    let k4 = f(&yt);
    yt = *y;
    axpy(&mut yt, h * A51, k1);
    axpy(&mut yt, h * A52, &k2);
    axpy(&mut yt, h * A53, &k3);
    axpy(&mut yt, h * A54, &k4);
    let k5 = f(&yt);
    yt = *y;
    axpy(&mut yt, h * A61, k1);
    axpy(&mut yt, h * A62, &k2);
    axpy(&mut yt, h * A63, &k3);
    axpy(&mut yt, h * A64, &k4);
    axpy(&mut yt, h * A65, &k5);
    let k6 = f(&yt);
    let mut y_new = *y;
    axpy(&mut y_new, h * A71, k1);
    axpy(&mut y_new, h * A73, &k3);
    axpy(&mut y_new, h * A74, &k4);
    axpy(&mut y_new, h * A75, &k5);
    axpy(&mut y_new, h * A76, &k6);
    let k7 = f(&y_new);

    if !y_new.iter().all(|v| v.is_finite()) {
        return Err(OracleError::NonFinite { t });
    }

    let mut err = 0.0_f64;
    for i in 0..3 {
        let e =
            h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sc = cfg.atol + cfg.rtol * y[i].abs().max(y_new[i].abs());
        err += (e / sc) * (e / sc);
    }
    err = (err / 3.0).sqrt();

    let factor = if err == 0.0 {
        5.0
    } else {
        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
    };
    let h_next = (h * factor).min(cfg.h_max);

    if err <= 1.0 {
        let mut r1 = [0.0; 3];
        let mut r2 = [0.0; 3];
        let mut r3 = [0.0; 3];
        let mut r4 = [0.0; 3];
        let mut r5 = [0.0; 3];
        for i in 0..3 {
            let ydiff = y_new[i] - y[i];
            let bspl = h * k1[i] - ydiff;
            r1[i] = y[i];
            r2[i] = ydiff;
            r3[i] = bspl;
            r4[i] = ydiff - h * k7[i] - bspl;
            r5[i] = h
                * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        Ok(StepOutcome::Accepted {
            y_new,
            dense: DenseStep {
                t0: t,
                h,
                r1,
                r2,
                r3,
                r4,
                r5,
            },
            h_next,
        })
    } else {
        Ok(StepOutcome::Rejected { h_next })
    }
}

/// Event scan over one accepted step.
///
/// `z * sign` is positive on the active side. A crossing only fires once the
/// orbit has been seen clearly on its own side (`armed`) and the interpolant
/// goes clearly past zero; both thresholds sit a decade above the
/// localization target, so interpolation noise right after a previous event
/// cannot trigger a false crossing.
fn scan_event(
    dense: &DenseStep,
    sign: f64,
    target: f64,
    armed_in: bool,
) -> (Option<f64>, bool) {
    let floor = 10.0 * target;
    let n = 16;
    let mut armed = armed_in;
    let mut lo = dense.t0;
    for i in 0..=n {
        let t = dense.t0 + dense.h * i as f64 / n as f64;
        let zs = dense.eval(t)[2] * sign;
        if zs >= floor {
            armed = true;
            lo = t;
            continue;
        }
        if armed && zs <= -floor {
            // bisect (lo, t): early-out when within the localization target
            let mut a = lo;
            let mut b = t;
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                let zm = dense.eval(mid)[2] * sign;
                if zm.abs() <= target {
                    return (Some(mid), armed);
                }
                if zm > 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
                if (b - a).abs() <= f64::EPSILON * b.abs().max(1.0) {
                    break;
                }
            }
            return (Some(0.5 * (a + b)), armed);
        }
    }
    (None, armed)
}

// ---------------------------------------------------------------------------
// single-piece integration (numeric half maps)
// ---------------------------------------------------------------------------

/// Result of a numeric half-map run.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NumericHalfReturn {
    pub tau: f64,
    pub y_exit: f64,
    pub x_exit: f64,
    pub defined: bool,
}

impl NumericHalfReturn {
    fn undefined() -> Self {
        NumericHalfReturn {
            tau: f64::NAN,
            y_exit: f64::NAN,
            x_exit: f64::NAN,
            defined: false,
        }
    }
}

/// Integrates one piece from `(x0, y_entry, 0)` until `z` returns to zero;
/// purely numerical, independent of the closed forms.
pub fn numeric_half_map_piece(
    piece: &AffinePiece,
    x0: f64,
    y_entry: f64,
    t_max: f64,
    cfg: &OracleConfig,
) -> Result<NumericHalfReturn, OracleError> {
    let mut t = 0.0;
    let mut y = [x0, y_entry, 0.0];
    let mut k1 = piece.eval(&y);
    if k1[2] == 0.0 || !k1[2].is_finite() {
        return Ok(NumericHalfReturn::undefined());
    }
    let sign = k1[2].signum();
    let mut h = (1e-3 * (1.0 + y_entry.abs())).min(cfg.h_max).min(0.1 * t_max);
    let target = tol::ORACLE_EVENT_Z_TOL * (1.0 + y_entry.abs());
    let mut armed = false;

    for _ in 0..cfg.max_steps {
        if t >= t_max {
            return Ok(NumericHalfReturn::undefined());
        }
        h = h.min(t_max - t).max(f64::MIN_POSITIVE);
        match rk_step(piece, cfg, t, &y, &k1, h)? {
            StepOutcome::Accepted { y_new, dense, h_next } => {
                let (event, armed_out) = scan_event(&dense, sign, target, armed);
                armed = armed_out;
                if let Some(t_ev) = event {
                    let st = dense.eval(t_ev);
                    return Ok(NumericHalfReturn {
                        tau: t_ev,
                        y_exit: st[1],
                        x_exit: st[0],
                        defined: true,
                    });
                }
                t += h;
                y = y_new;
                k1 = piece.eval(&y);
                h = h_next;
            }
            StepOutcome::Rejected { h_next } => {
                if h_next < 1e-14 * (1.0 + t) {
                    return Err(OracleError::StepUnderflow { t });
                }
                h = h_next;
            }
        }
    }
    Err(OracleError::StepBudget { t })
}

/// The full numeric return map on the plane: upper excursion from
/// `(x, y0, 0)`, then the lower excursion, back to the `y > 0` side.
/// Returns `(x_return, y_return)`.
pub fn numeric_return_map(
    upper: &AffinePiece,
    lower: &AffinePiece,
    x: f64,
    y0: f64,
    t_max: f64,
    cfg: &OracleConfig,
) -> Result<Option<(f64, f64)>, OracleError> {
    let first = numeric_half_map_piece(upper, x, y0, t_max, cfg)?;
    if !first.defined {
        return Ok(None);
    }
    let second = numeric_half_map_piece(lower, first.x_exit, first.y_exit, t_max, cfg)?;
    if !second.defined {
        return Ok(None);
    }
    Ok(Some((second.x_exit, second.y_exit)))
}

/// Central-difference slope of the full `x` return map around `x0` on the
/// cylinder `y = y0` (the cycle multiplier).
pub fn numeric_multiplier(
    upper: &AffinePiece,
    lower: &AffinePiece,
    x0: f64,
    y0: f64,
    t_max: f64,
    cfg: &OracleConfig,
) -> Result<Option<f64>, OracleError> {
    let delta = tol::MULTIPLIER_FD_STEP * (1.0 + x0.abs());
    let plus = numeric_return_map(upper, lower, x0 + delta, y0, t_max, cfg)?;
    let minus = numeric_return_map(upper, lower, x0 - delta, y0, t_max, cfg)?;
    Ok(match (plus, minus) {
        (Some((xp, _)), Some((xm, _))) => Some((xp - xm) / (2.0 * delta)),
        _ => None,
    })
}

// ---------------------------------------------------------------------------
// piecewise integration with sewing
// ---------------------------------------------------------------------------

fn start_side(sys: &PiecewiseSystem, p0: &Vec3, guard: f64) -> Result<Side, OracleError> {
    if p0[2] > 0.0 {
        return Ok(Side::Upper);
    }
    if p0[2] < 0.0 {
        return Ok(Side::Lower);
    }
    let wu = sys.upper.eval(p0)[2];
    let wl = sys.lower.eval(p0)[2];
    if wu.abs() < guard || wl.abs() < guard {
        return Err(OracleError::StartAtTangency { guard });
    }
    if wu * wl <= 0.0 {
        return Err(OracleError::StartNotSewing);
    }
    Ok(if wu > 0.0 { Side::Upper } else { Side::Lower })
}

/// Integrates the sewing dynamics of a two-piece system from `p0` for time
/// `t_end >= 0`, switching pieces at `z = 0` crossings where the sewing
/// condition holds and stopping with a flag at tangency (or non-sewing)
/// hits.
pub fn integrate(
    sys: &PiecewiseSystem,
    p0: &Vec3,
    t_end: f64,
    cfg: &OracleConfig,
) -> Result<OrbitTrace, OracleError> {
    let mut points = Vec::new();
    let mut crossings = Vec::new();
    let mut side = start_side(sys, p0, cfg.fold_guard)?;
    let mut t = 0.0;
    let mut y = *p0;
    points.push(TracePoint {
        t,
        x: y[0],
        y: y[1],
        z: y[2],
        side,
        crossing: false,
    });
    if t_end <= 0.0 {
        return Ok(OrbitTrace {
            points,
            crossings,
            termination: Termination::TimeEnd,
        });
    }

    let target = tol::ORACLE_EVENT_Z_TOL * (1.0 + p0[1].abs().max(p0[2].abs()));
    let mut h = 1e-6_f64;
    let mut armed = false;
    let mut steps = 0usize;

    loop {
        steps += 1;
        if steps > cfg.max_steps {
            return Err(OracleError::StepBudget { t });
        }
        let piece = sys.piece(side);
        let k1 = piece.eval(&y);
        h = h.min(t_end - t).max(f64::MIN_POSITIVE);
        match rk_step(piece, cfg, t, &y, &k1, h)? {
            StepOutcome::Accepted { y_new, dense, h_next } => {
                let sign = match side {
                    Side::Upper => 1.0,
                    Side::Lower => -1.0,
                };
                let (event, armed_out) = scan_event(&dense, sign, target, armed);
                armed = armed_out;
                if let Some(t_ev) = event {
                    let mut st = dense.eval(t_ev);
                    st[2] = 0.0; // re-anchor exactly on the plane
                    let w_from = sys.piece(side).eval(&st)[2];
                    let other = match side {
                        Side::Upper => Side::Lower,
                        Side::Lower => Side::Upper,
                    };
                    let w_to = sys.piece(other).eval(&st)[2];
                    if w_from.abs() < cfg.fold_guard || w_to.abs() < cfg.fold_guard {
                        points.push(TracePoint {
                            t: t_ev,
                            x: st[0],
                            y: st[1],
                            z: 0.0,
                            side,
                            crossing: true,
                        });
                        return Ok(OrbitTrace {
                            points,
                            crossings,
                            termination: Termination::TangencyHit,
                        });
                    }
                    if w_from * w_to <= 0.0 {
                        points.push(TracePoint {
                            t: t_ev,
                            x: st[0],
                            y: st[1],
                            z: 0.0,
                            side,
                            crossing: true,
                        });
                        return Ok(OrbitTrace {
                            points,
                            crossings,
                            termination: Termination::NotSewing,
                        });
                    }
                    // crossing samples carry the side being entered
                    points.push(TracePoint {
                        t: t_ev,
                        x: st[0],
                        y: st[1],
                        z: 0.0,
                        side: other,
                        crossing: true,
                    });
                    crossings.push(Crossing {
                        t: t_ev,
                        x: st[0],
                        y: st[1],
                        from: side,
                        to: other,
                    });
                    side = other;
                    t = t_ev;
                    y = st;
                    armed = false;
                    h = (h_next * 0.1).max(1e-9);
                    if t >= t_end {
                        return Ok(OrbitTrace {
                            points,
                            crossings,
                            termination: Termination::TimeEnd,
                        });
                    }
                    continue;
                }
                t += h;
                y = y_new;
                points.push(TracePoint {
                    t,
                    x: y[0],
                    y: y[1],
                    z: y[2],
                    side,
                    crossing: false,
                });
                if t >= t_end {
                    return Ok(OrbitTrace {
                        points,
                        crossings,
                        termination: Termination::TimeEnd,
                    });
                }
                h = h_next;
            }
            StepOutcome::Rejected { h_next } => {
                if h_next < 1e-14 * (1.0 + t) {
                    return Err(OracleError::StepUnderflow { t });
                }
                h = h_next;
            }
        }
    }
}
