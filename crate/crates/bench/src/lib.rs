//! Shared fixtures for the benchmarks.

use surfpinn_core::inverse::{ObservationSet, Preset, TrainConfig};
use surfpinn_core::mom::{Polarization, ScatterProblem};
use surfpinn_core::surface::{SurfaceParams, SurfaceRealization};

/// Baseline-statistics surface on `[-8, 8]` with `n` panels.
pub fn surface(n: usize) -> SurfaceRealization {
    SurfaceRealization::generate(&SurfaceParams {
        half_length: 8.0,
        n_panels: n,
        scale: 2.0 / 3.0,
        peak_to_trough: 0.4,
        taper_margin: 1.0,
        seed: 1,
    })
    .expect("valid surface parameters")
}

pub fn problem(pol: Polarization, s: &SurfaceRealization) -> ScatterProblem {
    ScatterProblem::new(pol, 2.0 * std::f64::consts::PI, -std::f64::consts::FRAC_PI_4, 0.5, s.grid.clone())
        .expect("valid problem")
}

/// Desk-preset data and training configuration.
pub fn desk() -> (TrainConfig, ObservationSet) {
    let exp = Preset::Desk.experiment();
    let (_, obs) = exp.synthesize(0).expect("desk preset synthesizes");
    (exp.train, obs)
}
