//! Closed-form reference values: the qudit ellipse, Bessel-zero constants,
//! the radial reduction for hard position cutoffs, dilation scaling laws,
//! the mean-field spin curve, and the number/angle relation.
//!
//! Everything here is backed by an elementary numerical method written out
//! in full (power series, three-term recurrences, bisection, staggered
//! finite volumes), so the rest of the workspace can cross-check its
//! variational solvers against these values without pulling in a
//! special-function dependency.

use crate::error::{Error, Result};
use crate::metrics::Exponent;

/// `1 - 1/n`, the common radius of the qudit uncertainty region.
pub fn qudit_radius(n: u32) -> Result<f64> {
    if n < 2 {
        return Err(Error::Invalid(format!("dimension {n} below 2")));
    }
    Ok(1.0 - 1.0 / n as f64)
}

/// Ellipse form for the qudit trade-off with discrete metrics:
/// `(dp-D)^2 + (dq-D)^2 + (2-4/n) dp dq - D^2` with `D = 1 - 1/n`.
/// Boundary pairs sit at zero, achievable pairs at or below.
pub fn qudit_boundary_residual(n: u32, dp: f64, dq: f64) -> Result<f64> {
    let delta = qudit_radius(n)?;
    for v in [dp, dq] {
        if !(0.0..=delta + 1e-12).contains(&v) {
            return Err(Error::OutOfRange);
        }
    }
    let cross = 2.0 - 4.0 / n as f64;
    Ok((dp - delta).powi(2) + (dq - delta).powi(2) + cross * dp * dq - delta * delta)
}

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for positive argument.
fn lgamma(x: f64) -> f64 {
    assert!(x > 0.0, "lgamma needs a positive argument, got {x}");
    if x < 0.5 {
        // reflection keeps the Lanczos sum in its accurate range
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - lgamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut sum = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        sum += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + sum.ln()
}

/// Ascending power series; accurate while the largest term stays within a
/// few orders of magnitude of the result.
fn bessel_j_series(nu: f64, x: f64) -> f64 {
    let half = 0.5 * x;
    let log_pref = nu * half.ln() - lgamma(nu + 1.0);
    let mut term = log_pref.exp();
    let mut sum = term;
    let q = half * half;
    for k in 1..200 {
        term *= -q / (k as f64 * (nu + k as f64));
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// Downward three-term recurrence normalized by the Neumann column sum
/// `(x/2)^m / Gamma(m+1) = sum_k (m+2k) Gamma(m+k) / (k! Gamma(m+1)) J_{m+2k}`,
/// where `m` is the fractional part of the order.  Stable for large orders
/// where the series cancels catastrophically.
fn bessel_j_miller(nu: f64, x: f64) -> f64 {
    let mu = nu - nu.floor();
    let steps = (nu - mu).round() as usize;
    let top = {
        let base = nu.max(x);
        steps + (x as usize) + 20 + (15.0 * base.sqrt()) as usize
    };
    let mut fp = 0.0f64; // order mu + m + 1
    let mut fc = 1e-300f64; // order mu + m
    let mut target = 0.0f64;
    let mut norm = 0.0f64;
    for m in (0..=top).rev() {
        let prev = 2.0 * (mu + m as f64 + 1.0) / x * fc - fp;
        fp = fc;
        fc = prev;
        // fc now holds order mu + m
        if m == steps {
            target = fc;
        }
        if m % 2 == 0 {
            let k = (m / 2) as f64;
            // limit of (mu+2k) Gamma(mu+k) / (k! Gamma(mu+1)) at k = 0 is 1
            let coeff = if m == 0 {
                1.0
            } else {
                (mu + 2.0 * k) * (lgamma(mu + k) - lgamma(k + 1.0) - lgamma(mu + 1.0)).exp()
            };
            norm += coeff * fc;
        }
        if fc.abs() > 1e250 {
            fp /= 1e250;
            fc /= 1e250;
            target /= 1e250;
            norm /= 1e250;
        }
    }
    let scale = (mu * (0.5 * x).ln() - lgamma(mu + 1.0)).exp();
    target * scale / norm
}

/// Bessel function of the first kind, real order at least -1/2.
pub fn bessel_j(nu: f64, x: f64) -> f64 {
    assert!(nu >= -0.5 && x > 0.0);
    let c = (2.0 / (std::f64::consts::PI * x)).sqrt();
    if nu == -0.5 {
        return c * x.cos();
    }
    if nu == 0.5 {
        return c * x.sin();
    }
    // the alternating series cancels once x*x/4 outruns the order
    if x * x / 4.0 <= nu + 4.0 || x <= 14.0 {
        bessel_j_series(nu, x)
    } else {
        bessel_j_miller(nu, x)
    }
}

/// First positive zero of `J_nu`, by scanning for a sign change from the
/// origin and bisecting the bracket.
pub fn bessel_first_zero(nu: f64) -> Result<f64> {
    if nu < -0.5 {
        return Err(Error::Invalid(format!("order {nu} below -1/2")));
    }
    if nu == -0.5 {
        return Ok(std::f64::consts::PI / 2.0);
    }
    let step = 0.25f64;
    let mut a = 0.05f64.max(0.2 * nu);
    let mut fa = bessel_j(nu, a);
    let limit = nu + 3.0 * nu.max(1.0).powf(1.0 / 3.0) + 12.0;
    let mut b = a;
    loop {
        b += step;
        if b > limit {
            return Err(Error::NoConvergence {
                iterations: 0,
                residual: fa,
            });
        }
        let fb = bessel_j(nu, b);
        if fa > 0.0 && fb <= 0.0 {
            break;
        }
        a = b;
        fa = fb;
    }
    let mut lo = a;
    let mut hi = b;
    for _ in 0..120 {
        let mid = 0.5 * (lo + hi);
        if bessel_j(nu, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Sharp constant for a hard position cutoff against a quadratic momentum
/// moment in `n` dimensions: the first zero of `J_{n/2-1}`.
pub fn c_inf2(n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::Invalid("dimension 0".into()));
    }
    bessel_first_zero(n as f64 / 2.0 - 1.0)
}

/// Sharp constant for quadratic moments on both sides in `n` dimensions.
pub fn c_22(n: u32) -> f64 {
    n as f64 / 2.0
}

/// Smallest eigenvalue of the radial reduction
/// `-v'' - (n-1)/r v' + (lambda/r^2) v = E v` on `(0, 1)` with a Dirichlet
/// wall at 1, discretized by staggered finite volumes (cells centered at
/// `(i+1/2)h`, zero flux through the origin.  The value is Richardson
/// extrapolated from `grid/2` and `grid`; disagreement beyond 1e-3 of the
/// two resolutions reports a coarse grid.
pub fn radial_ground_energy(n: u32, lambda: f64, grid: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Invalid("dimension 0".into()));
    }
    if grid < 16 || !grid.is_multiple_of(2) {
        return Err(Error::GridTooCoarse(format!(
            "grid {grid} must be even and at least 16"
        )));
    }
    let solve = |cells: usize| -> f64 {
        let h = 1.0 / cells as f64;
        let pow = (n - 1) as i32;
        let face = |r: f64| r.powi(pow);
        let mut diag = vec![0.0; cells];
        let mut off = vec![0.0; cells - 1];
        for i in 0..cells {
            let r = (i as f64 + 0.5) * h;
            let vol = face(r);
            let f_left = if i == 0 { 0.0 } else { face(i as f64 * h) };
            let mut f_right = face((i + 1) as f64 * h);
            if i + 1 == cells {
                // ghost cell mirrors with opposite sign: value 0 at the wall
                f_right *= 2.0;
            }
            diag[i] = (f_left + f_right) / (h * h * vol) + lambda / (r * r);
            if i + 1 < cells {
                let w = face((i + 1) as f64 * h);
                off[i] = -w / (h * h * (vol * face(r + h)).sqrt());
            }
        }
        crate::linalg::tridiag_smallest_eigenvalue(&diag, &off)
    };
    let coarse = solve(grid / 2);
    let fine = solve(grid);
    if (fine - coarse).abs() > 1e-3 * fine.abs().max(1.0) {
        return Err(Error::GridTooCoarse(format!(
            "eigenvalue moved {:.3e} between {} and {} cells",
            (fine - coarse).abs(),
            grid / 2,
            grid
        )));
    }
    Ok(fine + (fine - coarse) / 3.0)
}

fn finite_pair(alpha: Exponent, beta: Exponent) -> Result<(f64, f64)> {
    match (alpha, beta) {
        (Exponent::Finite(a), Exponent::Finite(b)) => Ok((a, b)),
        _ => Err(Error::Unsupported(
            "scaling relations need finite exponents".into(),
        )),
    }
}

/// Dilation law for the ground energy of `a d(Q)^alpha + b d(P)^beta`:
/// `E(a, b) = a^(beta/(alpha+beta)) b^(alpha/(alpha+beta)) E(1, 1)`.
pub fn scaling_prefactor(alpha: Exponent, beta: Exponent, a: f64, b: f64) -> Result<f64> {
    let (al, be) = finite_pair(alpha, beta)?;
    Ok(a.powf(be / (al + be)) * b.powf(al / (al + be)))
}

/// The constant `(alpha+beta) alpha^(-alpha/(alpha+beta)) beta^(-beta/(alpha+beta))`
/// linking the balanced ground energy to the product constant.
pub fn scaling_constant(alpha: Exponent, beta: Exponent) -> Result<f64> {
    let (al, be) = finite_pair(alpha, beta)?;
    let s = al + be;
    Ok(s * al.powf(-al / s) * be.powf(-be / s))
}

/// Invert the balanced ground energy into the sharp product constant:
/// `c = (E / K)^((alpha+beta)/(alpha beta))`.
pub fn c_from_energy(e: f64, alpha: Exponent, beta: Exponent) -> Result<f64> {
    let (al, be) = finite_pair(alpha, beta)?;
    let k = scaling_constant(alpha, beta)?;
    Ok((e / k).powf((al + be) / (al * be)))
}

/// Boundary curve of the asymptotic per-site region for metric spin chains:
/// `t` in `[0, pi/2]` maps to `(((1+cos t)/2)^alpha, ((1+sin t)/2)^beta)`.
pub fn meanfield_curve(alpha: f64, beta: f64, t: f64) -> (f64, f64) {
    (
        (0.5 * (1.0 + t.cos())).powf(alpha),
        (0.5 * (1.0 + t.sin())).powf(beta),
    )
}

/// `min_v (v^(alpha/2) + (4v)^(-beta/2))`, the large-`n` rate constant:
/// closed form `(alpha+beta) 2^(-alpha beta/(alpha+beta))
/// alpha^(-alpha/(alpha+beta)) beta^(-beta/(alpha+beta))`.
pub fn meanfield_limit_constant(alpha: f64, beta: f64) -> f64 {
    let s = alpha + beta;
    s * 2f64.powf(-alpha * beta / s) * alpha.powf(-alpha / s) * beta.powf(-beta / s)
}

/// Printed number/angle trade-off form `dq^2 + dp^2 (4 - dp^2) - 1` for the
/// discrete metric on the integers and the chordal metric on the circle.
pub fn number_angle_residual(dq: f64, dp: f64) -> Result<f64> {
    if !(0.0..=1.0 + 1e-12).contains(&dq) || !(0.0..=2.0 + 1e-12).contains(&dp) {
        return Err(Error::OutOfRange);
    }
    Ok(dq * dq + dp * dp * (4.0 - dp * dp) - 1.0)
}

/// One tabulated sharp constant.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantEntry {
    pub alpha: Exponent,
    pub beta: Exponent,
    pub n: u32,
    pub value: f64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConstantTable {
    pub entries: Vec<ConstantEntry>,
}

/// The closed-form rows for the requested dimensions: quadratic/quadratic
/// and cutoff/quadratic.
pub fn constant_table(dims: &[u32]) -> Result<ConstantTable> {
    let mut entries = Vec::new();
    for &n in dims {
        if n == 0 {
            return Err(Error::Invalid("dimension 0".into()));
        }
        entries.push(ConstantEntry {
            alpha: Exponent::finite(2.0)?,
            beta: Exponent::finite(2.0)?,
            n,
            value: c_22(n),
            note: "half the dimension".into(),
        });
        entries.push(ConstantEntry {
            alpha: Exponent::Infinity,
            beta: Exponent::finite(2.0)?,
            n,
            value: c_inf2(n)?,
            note: format!("first zero of J_{}", n as f64 / 2.0 - 1.0),
        });
    }
    for e in &entries {
        if e.value.is_nan() || e.value <= 0.0 {
            return Err(Error::Invalid(format!(
                "nonpositive constant for n = {}",
                e.n
            )));
        }
    }
    Ok(ConstantTable { entries })
}
