//! Experiment flags layered over a preset or a saved manifest.

use crate::manifest::Manifest;
use anyhow::{bail, Context, Result};
use clap::Args;
use std::path::PathBuf;
use surfpinn_core::autodiff::InitScheme;
use surfpinn_core::inverse::{DataCase, Experiment, Preset};
use surfpinn_core::mom::Polarization;

/// Lengths are in wavelengths of the reference wave (k = 2π).
#[derive(Debug, Clone, Default, Args)]
pub struct SpecArgs {
    /// Reuse the experiment recorded in a manifest instead of the preset.
    #[arg(long, global = true, value_name = "MANIFEST")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub polarization: Option<Polarization>,
    /// a: full complex data, b: phaseless amplitudes.
    #[arg(long, global = true)]
    pub case: Option<DataCase>,
    /// Wavenumber.
    #[arg(long, global = true)]
    pub k: Option<f64>,
    /// Grazing angle in radians (negative is downward).
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// Height of the observation line.
    #[arg(long, global = true)]
    pub zeta: Option<f64>,
    /// Observation height as a multiple of each surface's maximum.
    #[arg(long, global = true)]
    pub zeta_factor: Option<f64>,
    /// Correlation length.
    #[arg(long, global = true)]
    pub scale: Option<f64>,
    /// Peak-to-trough height; also sets the output bound to half of it.
    #[arg(long, global = true)]
    pub height: Option<f64>,
    #[arg(long, global = true)]
    pub half_length: Option<f64>,
    #[arg(long, global = true)]
    pub taper_margin: Option<f64>,
    /// Relative noise level ε (0.1 is 10%).
    #[arg(long, global = true)]
    pub noise: Option<f64>,
    #[arg(long, global = true)]
    pub n_obs: Option<usize>,
    #[arg(long, global = true)]
    pub n_inv: Option<usize>,
    #[arg(long, global = true)]
    pub n_b: Option<usize>,
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    #[arg(long, global = true)]
    pub width: Option<usize>,
    #[arg(long, global = true)]
    pub lr: Option<f64>,
    #[arg(long, global = true)]
    pub iterations: Option<usize>,
    #[arg(long, global = true)]
    pub h_bound: Option<f64>,
    #[arg(long, global = true)]
    pub init: Option<InitScheme>,
    #[arg(long, global = true)]
    pub field_weight: Option<f64>,
}

impl SpecArgs {
    /// Preset (or manifest) with every given flag applied.
    pub fn resolve(&self, preset: Preset) -> Result<Experiment> {
        let mut e = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                Manifest::parse(path, &text)?.experiment
            }
            None => preset.experiment(),
        };
        if let Some(h) = self.height {
            e = e.with_height(h);
        }
        let t = &mut e.train;
        set(&mut t.polarization, self.polarization);
        set(&mut t.case, self.case);
        set(&mut t.half_length, self.half_length);
        set(&mut t.n_obs, self.n_obs);
        set(&mut t.n_inv, self.n_inv);
        set(&mut t.n_b, self.n_b);
        set(&mut t.depth, self.depth);
        set(&mut t.width, self.width);
        set(&mut t.learning_rate, self.lr);
        set(&mut t.iterations, self.iterations);
        set(&mut t.h_bound, self.h_bound);
        set(&mut t.init, self.init);
        set(&mut t.field_weight, self.field_weight);
        set(&mut e.k, self.k);
        set(&mut e.alpha, self.alpha);
        set(&mut e.scale, self.scale);
        set(&mut e.taper_margin, self.taper_margin);
        set(&mut e.noise, self.noise);
        if let Some(z) = self.zeta {
            e.zeta = z;
            e.zeta_factor = None;
        }
        if self.zeta_factor.is_some() {
            e.zeta_factor = self.zeta_factor;
        }
        check(&e)?;
        Ok(e)
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

pub fn check(e: &Experiment) -> Result<()> {
    e.train.validate()?;
    if !(e.k > 0.0) || !e.alpha.is_finite() {
        bail!("need a positive wavenumber and a finite grazing angle");
    }
    if !(e.scale > 0.0) || !(e.peak_to_trough >= 0.0) || !(e.taper_margin >= 0.0) {
        bail!("surface scale must be positive and height, taper margin non-negative");
    }
    if !(e.noise >= 0.0) {
        bail!("noise level must be non-negative");
    }
    if let Some(f) = e.zeta_factor {
        if !(f > 1.0) {
            bail!("zeta factor must exceed 1 for the line to clear the surface");
        }
    }
    Ok(())
}
