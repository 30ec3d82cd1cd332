//! Shared numeric kernels: the entire-function family behind the closed-form
//! convolution integrals, a safeguarded Brent root finder, and grid builders.

use num_complex::Complex64;

/// `phi1(x) = (e^x - 1)/x`, continued by 1 at `x = 0`.
///
/// Computed through `expm1`, which is accurate for small arguments, so no
/// series fallback is needed.
pub fn phi1(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.exp_m1() / x
    }
}

/// `phi2(x) = (e^x (x - 1) + 1)/x^2`, continued by 1/2 at `x = 0`.
///
/// Equals the derivative of [`phi1`]; shows up when a forcing term resonates
/// with an eigenvalue. Series expansion below 0.5 avoids the cancellation in
/// the closed form.
pub fn phi2(x: f64) -> f64 {
    if x.abs() <= 0.5 {
        // sum_j x^j (j+1)/(j+2)!
        let mut term = 0.5; // j = 0
        let mut sum = term;
        for j in 1..=16 {
            // ratio of consecutive coefficients: (j+1)/(j*(j+2))
            term *= x * (j + 1) as f64 / ((j * (j + 2)) as f64);
            sum += term;
        }
        sum
    } else {
        (x * x.exp() - x.exp_m1()) / (x * x)
    }
}

/// `phi3(x) = (e^x (x^2 - 2x + 2) - 2)/x^3`, continued by 1/3 at `x = 0`.
pub fn phi3(x: f64) -> f64 {
    if x.abs() <= 0.5 {
        // sum_j x^j (1/(j+1)! - 2/(j+2)! + 2/(j+3)!)
        let mut fac1 = 1.0; // (j+1)!
        let mut sum = 0.0;
        let mut xpow = 1.0;
        for j in 0..=16 {
            fac1 *= (j + 1) as f64;
            let fac2 = fac1 * (j + 2) as f64;
            let fac3 = fac2 * (j + 3) as f64;
            sum += xpow * (1.0 / fac1 - 2.0 / fac2 + 2.0 / fac3);
            xpow *= x;
        }
        sum
    } else {
        let x2 = x * x;
        (x.exp() * (x2 - 2.0 * x + 2.0) - 2.0) / (x2 * x)
    }
}

/// Complex `phi1`: `(e^z - 1)/z` with a series branch near the origin.
pub fn phi1_c(z: Complex64) -> Complex64 {
    if z.norm_sqr() <= 0.25 {
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for j in 2..=18 {
            term = term * z / Complex64::new(j as f64, 0.0);
            sum += term;
        }
        sum
    } else {
        (z.exp() - 1.0) / z
    }
}

/// Divided difference of [`phi1`]: `(phi1(a) - phi1(b))/(a - b)`, continued
/// by `phi2` on the diagonal. Stable for nearly coincident arguments.
pub fn phi1_div_diff(a: f64, b: f64) -> f64 {
    if (a - b).abs() <= 1e-5 {
        phi2(0.5 * (a + b))
    } else {
        (phi1(a) - phi1(b)) / (a - b)
    }
}

/// `sinc(x) = sin(x)/x`, continued by 1 at `x = 0`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Outcome of a bracketed root search.
#[derive(Debug, Clone, Copy)]
pub struct BracketRoot {
    pub x: f64,
    pub f: f64,
}

/// Brent's method on `[a, b]` with `f(a)`, `f(b)` of opposite sign.
///
/// Converges when either `|f| <= f_tol` or the bracket shrinks below
/// `x_tol * (1 + |x|)`. Returns `None` if the bracket is invalid or `f`
/// produces a non-finite value.
pub fn brent<F>(mut f: F, a: f64, b: f64, x_tol: f64, f_tol: f64) -> Option<BracketRoot>
where
    F: FnMut(f64) -> f64,
{
    let (mut xa, mut xb) = (a, b);
    let (mut fa, mut fb) = (f(xa), f(xb));
    if !fa.is_finite() || !fb.is_finite() {
        return None;
    }
    if fa == 0.0 {
        return Some(BracketRoot { x: xa, f: fa });
    }
    if fb == 0.0 {
        return Some(BracketRoot { x: xb, f: fb });
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    let (mut xc, mut fc) = (xa, fa);
    let mut d = xb - xa;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            xc = xa;
            fc = fa;
            d = xb - xa;
            e = d;
        }
        if fc.abs() < fb.abs() {
            xa = xb;
            xb = xc;
            xc = xa;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * xb.abs() + 0.5 * x_tol;
        let xm = 0.5 * (xc - xb);
        if xm.abs() <= tol1 || fb.abs() <= f_tol {
            return Some(BracketRoot { x: xb, f: fb });
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // inverse quadratic / secant step
            let s = fb / fa;
            let (mut p, mut q);
            if xa == xc {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (xb - xa) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * xm * q - (tol1 * q).abs()).min(e.abs() * q.abs()) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        xa = xb;
        fa = fb;
        if d.abs() > tol1 {
            xb += d;
        } else {
            xb += tol1.copysign(xm);
        }
        fb = f(xb);
        if !fb.is_finite() {
            return None;
        }
    }
    Some(BracketRoot { x: xb, f: fb })
}

/// `n` logarithmically spaced points on `[lo, hi]`, `0 < lo < hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// `n` linearly spaced points on `[lo, hi]`.
pub fn lin_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}
