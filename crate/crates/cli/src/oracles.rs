//! Quick self-checks against independent references, run by `validate`.

use anyhow::Result;
use num_complex::Complex64;
use std::f64::consts::PI;
use surfpinn_core::autodiff::{MlpParams, NetShape};
use surfpinn_core::inverse::{evaluate_at, sample_collocation, simulate_observations, DataCase, TrainConfig};
use surfpinn_core::mom::{norm2, scattered_field, te_self, Polarization, Profile, ScatterProblem};
use surfpinn_core::specfun::{bessel_j0y0, bessel_j1y1, green, hankel0, Point};
use surfpinn_core::surface::{make_grid, SurfaceParams, SurfaceRealization};

pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn pass(&self) -> bool {
        self.value.is_finite() && self.value < self.tolerance
    }
}

pub fn run_all() -> Result<Vec<Check>> {
    let (te, tm) = flat_plate()?;
    Ok(vec![
        Check { name: "flat_plate_te_rms", value: te, tolerance: 0.05 },
        Check { name: "flat_plate_tm_rms", value: tm, tolerance: 0.05 },
        Check { name: "wronskian_relative", value: wronskian()?, tolerance: 1e-6 },
        Check { name: "green_far_field", value: far_field()?, tolerance: 0.01 },
        Check { name: "te_self_term", value: self_term(), tolerance: 0.01 },
        Check { name: "loss_gradient_vs_fd", value: loss_gradient()?, tolerance: 1e-5 },
        Check { name: "spatial_jet_vs_fd", value: spatial_jet(), tolerance: 1e-5 },
    ])
}

/// Interior rms error against the image solution `∓ exp(ik(x cos α − ζ sin α))`.
fn flat_plate() -> Result<(f64, f64)> {
    let (k, alpha, zeta) = (2.0 * PI, -PI / 4.0, 0.5);
    let grid = make_grid(8.0, 256)?;
    let flat = SurfaceRealization::flat(grid.clone(), 1.0);
    let mut errs = [0.0; 2];
    for (slot, (pol, r)) in [(Polarization::TE, -1.0), (Polarization::TM, 1.0)].into_iter().enumerate() {
        let p = ScatterProblem::new(pol, k, alpha, zeta, grid.clone())?;
        let psi = scattered_field(&p, &Profile::from(&flat))?;
        let (diff, want): (Vec<_>, Vec<_>) = grid
            .midpoints
            .iter()
            .zip(&psi)
            .filter(|(x, _)| x.abs() <= 4.0)
            .map(|(&x, &v)| {
                let w = Complex64::from_polar(r, k * (alpha.cos() * x - alpha.sin() * zeta));
                (v - w, w)
            })
            .unzip();
        errs[slot] = norm2(&diff) / norm2(&want);
    }
    Ok((errs[0], errs[1]))
}

/// `J1 Y0 − J0 Y1 = 2/(πx)` on a log-spaced sweep of `[0.05, 500]`.
fn wronskian() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..=1000 {
        let x = 0.05 * 1e4f64.powf(i as f64 / 1000.0);
        let (j0, y0) = bessel_j0y0(x)?;
        let (j1, y1) = bessel_j1y1(x)?;
        let exact = 2.0 / (PI * x);
        worst = worst.max(((j1 * y0 - j0 * y1) - exact).abs() / exact);
    }
    Ok(worst)
}

fn far_field() -> Result<f64> {
    let k = 2.0 * PI;
    let d = 100.0 / k;
    let g = green(k, Point::new(0.0, 0.0), Point::new(d * 0.6, d * 0.8))?;
    let asymptotic = 0.25 * (2.0 / (PI * 100.0)).sqrt();
    Ok((g.norm() - asymptotic).abs() / asymptotic)
}

/// Closed-form self-panel integral against `2 ∫₀^{Δs/2} (i/4) H0(kt) dt`
/// computed with `t = u²`, which removes the logarithmic singularity.
fn self_term() -> f64 {
    let (k, dx) = (2.0 * PI, 1.0 / 15.0);
    let mut worst: f64 = 0.0;
    for slope in [0.0, 0.5, 1.0] {
        let ds = dx * (1.0f64 + slope * slope).sqrt();
        let root = (0.5 * ds).sqrt();
        let n = 2000;
        let h = root / n as f64;
        let f = |u: f64| {
            if u == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                hankel0(k * u * u).expect("positive argument") * (2.0 * u)
            }
        };
        let mut s = f(0.0) + f(root);
        for i in 1..n {
            s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let reference = s * (h / 3.0) * Complex64::new(0.0, 0.5);
        let [re, im] = te_self(k, dx, slope);
        worst = worst.max((Complex64::new(re, im) - reference).norm() / reference.norm());
    }
    worst
}

/// Reverse-mode loss gradient against fourth-order central differences on a small
/// network, TE full data and TM phaseless data.
fn loss_gradient() -> Result<f64> {
    let surface = SurfaceRealization::generate(&SurfaceParams {
        half_length: 2.0,
        n_panels: 30,
        scale: 0.5,
        peak_to_trough: 0.3,
        taper_margin: 0.5,
        seed: 4,
    })?;
    let mut worst: f64 = 0.0;
    for (pol, case) in [(Polarization::TE, DataCase::A), (Polarization::TM, DataCase::B)] {
        let problem = ScatterProblem::new(pol, 2.0 * PI, -PI / 4.0, 0.5, surface.grid.clone())?;
        let obs = simulate_observations(&problem, &surface, case)?;
        let cfg = TrainConfig {
            polarization: pol,
            case,
            half_length: 2.0,
            n_obs: 30,
            n_inv: 30,
            depth: 2,
            width: 16,
            h_bound: 0.15,
            ..TrainConfig::default()
        };
        let coll = sample_collocation(1, &cfg);
        let params = MlpParams::init(cfg.shape(), cfg.half_length, cfg.h_bound, 9);
        let flat = params.flatten();
        let ev = evaluate_at(&params, &cfg, &obs, &coll, 1)?;
        let grads: Vec<f64> = ev
            .grads
            .iter()
            .flat_map(|l| l.weight.iter().chain(l.bias.iter()).copied())
            .collect();
        let loss_at = |theta: &[f64]| -> Result<f64> {
            let mut p = params.clone();
            p.set_flat(theta)?;
            Ok(evaluate_at(&p, &cfg, &obs, &coll, 1)?.record.loss)
        };
        let stride = flat.len() / 5;
        for i in (0..5).map(|j| j * stride + 3) {
            let h = 1e-3 * flat[i].abs().max(1.0);
            let at = |d: f64| {
                let mut theta = flat.clone();
                theta[i] += d * h;
                loss_at(&theta)
            };
            let fd = (8.0 * (at(1.0)? - at(-1.0)?) - (at(2.0)? - at(-2.0)?)) / (12.0 * h);
            worst = worst.max((grads[i] - fd).abs() / grads[i].abs().max(fd.abs()).max(1e-12));
        }
    }
    Ok(worst)
}

/// Network `h'`, `h''` against eighth-order central differences.
fn spatial_jet() -> f64 {
    let params = MlpParams::init(NetShape::new(3, 64), 4.0, 1.0, 12);
    let h = 0.1;
    let c1 = [1.0 / 280.0, -4.0 / 105.0, 0.2, -0.8, 0.0, 0.8, -0.2, 4.0 / 105.0, -1.0 / 280.0];
    let c2 = [-1.0 / 560.0, 8.0 / 315.0, -0.2, 1.6, -205.0 / 72.0, 1.6, -0.2, 8.0 / 315.0, -1.0 / 560.0];
    let mut worst: f64 = 0.0;
    for i in 0..21 {
        let x = -4.0 + 0.4 * i as f64;
        let v: Vec<f64> = (-4..=4).map(|j| params.eval_jet(x + j as f64 * h).v).collect();
        let d1 = v.iter().zip(c1).map(|(a, b)| a * b).sum::<f64>() / h;
        let d2 = v.iter().zip(c2).map(|(a, b)| a * b).sum::<f64>() / (h * h);
        let j = params.eval_jet(x);
        worst = worst
            .max((j.d1 - d1).abs() / j.d1.abs().max(1e-12))
            .max((j.d2 - d2).abs() / j.d2.abs().max(1e-12));
    }
    worst
}
