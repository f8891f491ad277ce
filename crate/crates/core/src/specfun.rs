//! Bessel functions of order 0 and 1, the 2D Helmholtz Green's function and
//! its normal derivative.
//!
//! Orders 0 and 1 are evaluated together: the ascending series below
//! [`SERIES_LIMIT`] and the Hankel asymptotic expansion above it. The two
//! branches agree to ~1e-11 at the switch point, so finite differences taken
//! across it stay well behaved.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SERIES_LIMIT: f64 = 12.0;
const MAX_TERMS: usize = 80;

/// A point in the (x, z) plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub z: f64,
}

impl Point {
    pub fn new(x: f64, z: f64) -> Self {
        Self { x, z }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.z - other.z)
    }
}

/// Green's function value together with its dimensionless argument `k·d`.
#[derive(Debug, Clone, Copy)]
pub struct KernelEval {
    pub value: Complex64,
    pub argument: f64,
}

/// `[J0, Y0, J1, Y1]` at `x > 0`. No domain check.
pub fn bessel01(x: f64) -> [f64; 4] {
    if x <= SERIES_LIMIT {
        ascending_series(x)
    } else {
        let (j0, y0) = hankel_asymptotic(x, 0.0);
        let (j1, y1) = hankel_asymptotic(x, 1.0);
        [j0, y0, j1, y1]
    }
}

fn ascending_series(x: f64) -> [f64; 4] {
    let q = 0.25 * x * x;
    let log_term = (0.5 * x).ln() + EULER_GAMMA;

    // t_m = (-q)^m / (m!)^2,  u_m = (-q)^m / (m! (m+1)!)
    let mut t = 1.0;
    let mut u = 1.0;
    let mut j0 = 1.0;
    let mut j1_sum = 1.0;
    let mut y0_sum = 0.0;
    let mut y1_sum = 1.0; // (H_0 + H_1) u_0
    let mut harmonic = 0.0;
    for m in 1..MAX_TERMS {
        let mf = m as f64;
        t *= -q / (mf * mf);
        u *= -q / (mf * (mf + 1.0));
        harmonic += 1.0 / mf;
        let h_next = harmonic + 1.0 / (mf + 1.0);
        j0 += t;
        j1_sum += u;
        y0_sum += harmonic * t;
        y1_sum += (harmonic + h_next) * u;
        if mf > q && t.abs() < 1e-18 && u.abs() < 1e-18 {
            break;
        }
    }
    let j1 = 0.5 * x * j1_sum;
    let y0 = 2.0 / PI * (log_term * j0 - y0_sum);
    let y1 = -2.0 / (PI * x) + 2.0 / PI * log_term * j1 - 0.5 * x * y1_sum / PI;
    [j0, y0, j1, y1]
}

/// Hankel's expansion for order `nu`; returns `(J_nu, Y_nu)`.
fn hankel_asymptotic(x: f64, nu: f64) -> (f64, f64) {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut b = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..MAX_TERMS {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        b *= (mu - odd * odd) / (8.0 * kf * x);
        let mag = b.abs();
        if mag > last || mag < 1e-17 {
            break;
        }
        last = mag;
        // P = b0 - b2 + b4 - ..., Q = b1 - b3 + b5 - ...
        match k % 4 {
            0 => p += b,
            1 => q += b,
            2 => p -= b,
            _ => q -= b,
        }
    }
    let chi = x - nu * FRAC_PI_2 - FRAC_PI_4;
    let amp = (2.0 / (PI * x)).sqrt();
    let (s, c) = chi.sin_cos();
    (amp * (p * c - q * s), amp * (p * s + q * c))
}

pub fn bessel_j0y0(x: f64) -> Result<(f64, f64)> {
    if !(x > 0.0) {
        return Err(Error::Domain {
            function: "Y0",
            x,
        });
    }
    let [j0, y0, _, _] = bessel01(x);
    Ok((j0, y0))
}

pub fn bessel_j1y1(x: f64) -> Result<(f64, f64)> {
    if !(x > 0.0) {
        return Err(Error::Domain {
            function: "Y1",
            x,
        });
    }
    let [_, _, j1, y1] = bessel01(x);
    Ok((j1, y1))
}

pub fn hankel0(x: f64) -> Result<Complex64> {
    let (j, y) = bessel_j0y0(x)?;
    Ok(Complex64::new(j, y))
}

pub fn hankel1(x: f64) -> Result<Complex64> {
    let (j, y) = bessel_j1y1(x)?;
    Ok(Complex64::new(j, y))
}

pub fn green_kernel(k: f64, p: Point, q: Point) -> Result<KernelEval> {
    let d = p.distance(&q);
    if d == 0.0 {
        return Err(Error::Singularity);
    }
    let argument = k * d;
    let value = Complex64::new(0.0, 0.25) * hankel0(argument)?;
    Ok(KernelEval { value, argument })
}

/// `G(p; q) = (i/4) H0(k |p - q|)`.
pub fn green(k: f64, p: Point, q: Point) -> Result<Complex64> {
    green_kernel(k, p, q).map(|e| e.value)
}

/// `n' · ∇_q G(p; q)` with `n' = (-h', 1) / sqrt(1 + h'^2)` the upward unit
/// normal of the surface at `q`.
///
/// Equals `-(ik/4) H1(k d) n'·(q - p) / d`; for `p` a height `d` directly
/// above `q` on a flat surface this is `+(ik/4) H1(k d)`.
pub fn green_normal_derivative(k: f64, p: Point, q: Point, slope: f64) -> Result<Complex64> {
    let d = p.distance(&q);
    if d == 0.0 {
        return Err(Error::Singularity);
    }
    let norm = (1.0 + slope * slope).sqrt();
    let n_dot = (-slope * (q.x - p.x) + (q.z - p.z)) / norm;
    let h1 = hankel1(k * d)?;
    Ok(Complex64::new(0.0, -0.25 * k) * h1 * (n_dot / d))
}

#[cfg(test)]
mod tests {
    use super::*;

    // (x, J0, Y0, J1, Y1) from a 30-digit reference evaluation.
    #[allow(clippy::excessive_precision)]
    const REFERENCE: [(f64, f64, f64, f64, f64); 13] = [
        (0.05, 0.99937509764946858081, -1.9793110008172096366, 0.024992188313759700519, -12.789855171174969704),
        (0.5, 0.93846980724081290423, -0.44451873350670655715, 0.24226845767487388638, -1.4714723926702430692),
        (1.0, 0.76519768655796655145, 0.088256964215676957983, 0.44005058574493351596, -0.78121282130028871655),
        (2.5, -0.048383776468197996327, 0.49807035961523188783, 0.49709410246427403801, 0.14591813796678579888),
        (5.0, -0.17759677131433830435, -0.30851762524903378007, -0.32757913759146522204, 0.1478631433912268448),
        (7.9, 0.19436184484127823969, 0.20652094814437576859, 0.21917939992175120327, -0.18172107728057312765),
        (8.0, 0.17165080713755390609, 0.22352148938756622053, 0.23463634685391462438, -0.15806046173124749426),
        (8.1, 0.1475174540443776703, 0.23809132870223480863, 0.24760776698159287663, -0.13314879595249592615),
        (12.5, 0.14688405470042110231, -0.17121430684466928735, -0.16548380461475971846, -0.15383825653750118008),
        (20.0, 0.16702466434058315473, 0.062640596809383831162, 0.066833124175850045579, -0.16551161436252129586),
        (100.0, 0.019985850304223122424, -0.077244313365083152254, -0.077145352014112158033, -0.020372312002759793305),
        (500.0, -0.034100556880731998265, 0.0105067087398313741, 0.010472613470372292844, 0.034111080629137135895),
        (1000.0, 0.024786686152420174561, 0.0047159179776228133998, 0.0047283119070895239176, -0.024784331292351778915),
    ];

    #[test]
    fn matches_reference_values() {
        for &(x, j0, y0, j1, y1) in REFERENCE.iter() {
            let got = bessel01(x);
            for (g, want) in got.iter().zip([j0, y0, j1, y1]) {
                assert!((g - want).abs() < 1e-10, "x={x}: {g} vs {want}");
            }
        }
    }

    #[test]
    fn small_argument_limits() {
        let (j0, y0) = bessel_j0y0(1e-8).unwrap();
        assert!((j0 - 1.0).abs() < 1e-15);
        assert!(y0 < -10.0);
        let (j1, y1) = bessel_j1y1(1e-8).unwrap();
        assert!(j1.abs() < 1e-8);
        assert!(y1 < -1e7);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(bessel_j0y0(0.0), Err(Error::Domain { .. })));
        assert!(matches!(bessel_j1y1(-1.0), Err(Error::Domain { .. })));
        let p = Point::new(0.3, 0.1);
        assert!(matches!(green(1.0, p, p), Err(Error::Singularity)));
        assert!(matches!(
            green_normal_derivative(1.0, p, p, 0.2),
            Err(Error::Singularity)
        ));
    }

    #[test]
    fn switch_point_continuity() {
        let below = bessel01(SERIES_LIMIT);
        let above = bessel01(SERIES_LIMIT * (1.0 + 1e-15));
        for (a, b) in below.iter().zip(above.iter()) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn green_large_argument_decay() {
        let k = 1.0;
        let g = green(k, Point::new(0.0, 0.0), Point::new(100.0, 0.0)).unwrap();
        let asym = 0.25 * (2.0 / (PI * 100.0)).sqrt();
        assert!((g.norm() - asym).abs() / asym < 0.01);
    }

    #[test]
    fn normal_derivative_flat_surface_in_plane_is_zero() {
        let v = green_normal_derivative(2.0, Point::new(0.0, 0.0), Point::new(0.7, 0.0), 0.0)
            .unwrap();
        assert_eq!(v, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn normal_derivative_point_above_flat_surface() {
        let k = 2.0 * PI;
        let d = 0.37;
        let v = green_normal_derivative(k, Point::new(0.2, d), Point::new(0.2, 0.0), 0.0).unwrap();
        let want = Complex64::new(0.0, 0.25 * k) * hankel1(k * d).unwrap();
        assert!((v - want).norm() < 1e-14);
    }
}
