//! Gaussian-correlated random rough surfaces on a uniform midpoint grid.
//!
//! Pipeline: [`generate_gaussian_surface`] → [`taper_edges`] →
//! [`scale_to_peak_trough`] → [`derivatives_spectral`], bundled by
//! [`SurfaceRealization::generate`].

use crate::error::{Error, Result};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// `[-L, L]` split into `N` equal panels.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub half_length: f64,
    pub n_panels: usize,
    pub nodes: Vec<f64>,
    pub midpoints: Vec<f64>,
}

impl Grid {
    pub fn dx(&self) -> f64 {
        2.0 * self.half_length / self.n_panels as f64
    }

    pub fn len(&self) -> usize {
        self.n_panels
    }

    pub fn is_empty(&self) -> bool {
        self.n_panels == 0
    }
}

pub fn make_grid(half_length: f64, n_panels: usize) -> Result<Grid> {
    if n_panels == 0 {
        return Err(Error::InvalidArgument("grid needs at least one panel".into()));
    }
    if !(half_length > 0.0) || !half_length.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "half length must be positive, got {half_length}"
        )));
    }
    let dx = 2.0 * half_length / n_panels as f64;
    let nodes: Vec<f64> = (0..=n_panels).map(|j| j as f64 * dx - half_length).collect();
    let midpoints = nodes.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    Ok(Grid {
        half_length,
        n_panels,
        nodes,
        midpoints,
    })
}

/// Recovers the grid whose midpoints are `x`; the spacing must be uniform to
/// within `1e-9` relative.
pub fn grid_from_midpoints(x: &[f64]) -> Result<Grid> {
    let n = x.len();
    if n < 2 {
        return Err(Error::InvalidArgument("need at least two midpoints".into()));
    }
    let dx = (x[n - 1] - x[0]) / (n - 1) as f64;
    let half_length = 0.5 * dx * n as f64;
    let grid = make_grid(half_length, n)?;
    let off = grid
        .midpoints
        .iter()
        .zip(x)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if off > 1e-9 * half_length {
        return Err(Error::Validation(format!(
            "abscissae are not the midpoints of a uniform grid centred on 0 (off by {off:e})"
        )));
    }
    Ok(grid)
}

/// Stationary Gaussian process with a.c.f. `exp(-η²/l²)` sampled at the grid
/// midpoints, by circulant embedding on a periodic supergrid at least four
/// times longer than the grid plus the correlation tail.
pub fn generate_gaussian_surface(grid: &Grid, scale: f64, seed: u64) -> Result<Vec<f64>> {
    if !(scale > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "correlation length must be positive, got {scale}"
        )));
    }
    let dx = grid.dx();
    if dx >= 0.5 * scale {
        return Err(Error::Resolution { dx, scale });
    }
    let n = grid.len();
    // The covariance is negligible (< 1e-30) beyond 9 correlation lengths.
    let tail = (9.0 * scale / dx).ceil() as usize;
    let m = (2 * (n + tail)).max(4 * n).next_power_of_two();

    let mut spectrum: Vec<Complex64> = (0..m)
        .map(|i| {
            let lag = i.min(m - i) as f64 * dx;
            Complex64::new((-(lag * lag) / (scale * scale)).exp(), 0.0)
        })
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(m).process(&mut spectrum);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let norm = 1.0 / (m as f64).sqrt();
    let mut field: Vec<Complex64> = spectrum
        .iter()
        .map(|lambda| {
            let amp = lambda.re.max(0.0).sqrt() * norm;
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im) * amp
        })
        .collect();
    planner.plan_fft_forward(m).process(&mut field);
    Ok(field[..n].iter().map(|c| c.re).collect())
}

/// Edge window `w(x) = ¼(1 + tanh((x + L - margin)/s))(1 + tanh((L - margin - x)/s))`
/// with `s = margin / 4`.
pub fn taper_weight(x: f64, half_length: f64, margin: f64) -> f64 {
    let s = margin / 4.0;
    0.25 * (1.0 + ((x + half_length - margin) / s).tanh())
        * (1.0 + ((half_length - margin - x) / s).tanh())
}

pub fn taper_edges(heights: &[f64], grid: &Grid, margin: f64) -> Result<Vec<f64>> {
    if !(margin > 0.0 && margin < grid.half_length) {
        return Err(Error::InvalidArgument(format!(
            "taper margin {margin} must lie in (0, {})",
            grid.half_length
        )));
    }
    check_len(heights, grid)?;
    Ok(heights
        .iter()
        .zip(&grid.midpoints)
        .map(|(h, &x)| h * taper_weight(x, grid.half_length, margin))
        .collect())
}

pub fn peak_to_trough(heights: &[f64]) -> f64 {
    let (lo, hi) = heights
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &h| {
            (lo.min(h), hi.max(h))
        });
    hi - lo
}

/// Multiply by the constant that makes `max - min == target`.
pub fn scale_to_peak_trough(heights: &[f64], target: f64) -> Result<Vec<f64>> {
    if !(target > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "peak-to-trough target must be positive, got {target}"
        )));
    }
    let range = peak_to_trough(heights);
    if !(range > 0.0) {
        return Err(Error::DegenerateSurface);
    }
    let c = target / range;
    Ok(heights.iter().map(|h| h * c).collect())
}

/// First and second derivatives of periodic-continued samples by FFT.
pub fn derivatives_spectral(heights: &[f64], grid: &Grid) -> Result<(Vec<f64>, Vec<f64>)> {
    check_len(heights, grid)?;
    let n = heights.len();
    let period = 2.0 * grid.half_length;
    let mut planner = FftPlanner::new();
    let mut spec: Vec<Complex64> = heights.iter().map(|&h| Complex64::new(h, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut spec);

    let mut d1 = vec![Complex64::new(0.0, 0.0); n];
    let mut d2 = vec![Complex64::new(0.0, 0.0); n];
    for (i, c) in spec.iter().enumerate() {
        let signed = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
        let kappa = 2.0 * PI * signed / period;
        // The Nyquist mode of an even-length grid has no odd derivative.
        let first = if n.is_multiple_of(2) && i == n / 2 { 0.0 } else { kappa };
        d1[i] = c * Complex64::new(0.0, first);
        d2[i] = c * (-kappa * kappa);
    }
    let inv = planner.plan_fft_inverse(n);
    inv.process(&mut d1);
    inv.process(&mut d2);
    let scale = 1.0 / n as f64;
    Ok((
        d1.iter().map(|c| c.re * scale).collect(),
        d2.iter().map(|c| c.re * scale).collect(),
    ))
}

fn check_len(heights: &[f64], grid: &Grid) -> Result<()> {
    if heights.len() != grid.len() {
        return Err(Error::Shape(format!(
            "{} heights for a {}-panel grid",
            heights.len(),
            grid.len()
        )));
    }
    Ok(())
}

/// Parameters of a synthetic surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceParams {
    pub half_length: f64,
    pub n_panels: usize,
    pub scale: f64,
    /// Zero produces a flat surface.
    pub peak_to_trough: f64,
    pub taper_margin: f64,
    pub seed: u64,
}

/// Sampled surface with its first two derivatives at the grid midpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceRealization {
    pub grid: Grid,
    pub h: Vec<f64>,
    pub dh: Vec<f64>,
    pub d2h: Vec<f64>,
    pub scale: f64,
    pub peak_to_trough: f64,
}

impl SurfaceRealization {
    pub fn generate(p: &SurfaceParams) -> Result<Self> {
        let grid = make_grid(p.half_length, p.n_panels)?;
        if p.peak_to_trough == 0.0 {
            return Ok(Self::flat(grid, p.scale));
        }
        let raw = generate_gaussian_surface(&grid, p.scale, p.seed)?;
        let tapered = taper_edges(&raw, &grid, p.taper_margin)?;
        let h = scale_to_peak_trough(&tapered, p.peak_to_trough)?;
        Self::from_heights(grid, h, p.scale)
    }

    pub fn flat(grid: Grid, scale: f64) -> Self {
        let n = grid.len();
        Self {
            grid,
            h: vec![0.0; n],
            dh: vec![0.0; n],
            d2h: vec![0.0; n],
            scale,
            peak_to_trough: 0.0,
        }
    }

    /// Wrap measured or loaded heights, deriving `h'`, `h''` spectrally.
    pub fn from_heights(grid: Grid, h: Vec<f64>, scale: f64) -> Result<Self> {
        let (dh, d2h) = derivatives_spectral(&h, &grid)?;
        let peak_to_trough = peak_to_trough(&h);
        Ok(Self {
            grid,
            h,
            dh,
            d2h,
            scale,
            peak_to_trough,
        })
    }

    /// The trigonometric interpolant of `h` and its exact first two
    /// derivatives at arbitrary abscissae.
    pub fn sample_at(&self, xs: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.h.len();
        let mut spec: Vec<Complex64> = self.h.iter().map(|&h| Complex64::new(h, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut spec);
        let period = 2.0 * self.grid.half_length;
        let x0 = self.grid.midpoints[0];
        let modes: Vec<(f64, Complex64)> = spec
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let signed = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
                (2.0 * PI * signed / period, c / n as f64)
            })
            .collect();
        let m = xs.len();
        let (mut h, mut dh, mut d2h) = (Vec::with_capacity(m), Vec::with_capacity(m), Vec::with_capacity(m));
        for &x in xs {
            let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
            for &(w, c) in &modes {
                let e = c * Complex64::from_polar(1.0, w * (x - x0));
                v += e.re;
                d1 -= w * e.im;
                d2 -= w * w * e.re;
            }
            h.push(v);
            dh.push(d1);
            d2h.push(d2);
        }
        (h, dh, d2h)
    }

    /// [`Self::sample_at`] on the midpoints of another grid over the same
    /// interval.
    pub fn resample(&self, grid: Grid) -> Result<Self> {
        if grid.half_length != self.grid.half_length {
            return Err(Error::InvalidArgument(format!(
                "cannot resample from [-{0}, {0}] onto [-{1}, {1}]",
                self.grid.half_length, grid.half_length
            )));
        }
        let (h, dh, d2h) = self.sample_at(&grid.midpoints);
        Ok(Self {
            grid,
            peak_to_trough: peak_to_trough(&h),
            h,
            dh,
            d2h,
            scale: self.scale,
        })
    }

    pub fn max_height(&self) -> f64 {
        self.h.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}
