use proptest::prelude::*;
use surfpinn_core::surface::{
    generate_gaussian_surface, make_grid, peak_to_trough, scale_to_peak_trough, SurfaceParams,
    SurfaceRealization,
};

fn params(seed: u64, scale: f64, height: f64) -> SurfaceParams {
    SurfaceParams {
        half_length: 8.0,
        n_panels: 240,
        scale,
        peak_to_trough: height,
        taper_margin: 1.0,
        seed,
    }
}

#[test]
fn autocorrelation_at_one_correlation_length() {
    let grid = make_grid(8.0, 240).unwrap();
    let lag = 10; // 2/3 at dx = 1/15
    let (mut r0, mut rl, mut count0, mut countl) = (0.0, 0.0, 0usize, 0usize);
    for seed in 0..500 {
        let h = generate_gaussian_surface(&grid, 2.0 / 3.0, seed).unwrap();
        r0 += h.iter().map(|v| v * v).sum::<f64>();
        count0 += h.len();
        rl += h.iter().zip(&h[lag..]).map(|(a, b)| a * b).sum::<f64>();
        countl += h.len() - lag;
    }
    let ratio = (rl / countl as f64) / (r0 / count0 as f64);
    let expected = (-1.0f64).exp();
    assert!((ratio - expected).abs() < 0.05, "ρ(l)/ρ(0) = {ratio}");
    assert!((r0 / count0 as f64 - 1.0).abs() < 0.05);
}

#[test]
fn zero_crossings_fall_as_correlation_length_grows() {
    let grid = make_grid(8.0, 480).unwrap();
    let mean_crossings = |scale: f64| {
        (0..50)
            .map(|seed| {
                let h = generate_gaussian_surface(&grid, scale, seed).unwrap();
                h.windows(2).filter(|w| w[0].signum() != w[1].signum()).count() as f64
            })
            .sum::<f64>()
            / 50.0
    };
    let counts: Vec<f64> = [0.4, 2.0 / 3.0, 1.0, 1.6].into_iter().map(mean_crossings).collect();
    assert!(counts.windows(2).all(|w| w[0] > w[1]), "{counts:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn generation_is_deterministic(seed in any::<u64>(), scale in 0.3f64..2.0) {
        let p = params(seed, scale, 0.4);
        prop_assert_eq!(SurfaceRealization::generate(&p).unwrap(), SurfaceRealization::generate(&p).unwrap());
    }

    #[test]
    fn different_seeds_give_different_surfaces(seed in 0u64..u64::MAX) {
        let a = SurfaceRealization::generate(&params(seed, 0.7, 0.4)).unwrap();
        let b = SurfaceRealization::generate(&params(seed + 1, 0.7, 0.4)).unwrap();
        prop_assert_ne!(a.h, b.h);
    }

    #[test]
    fn realization_hits_height_and_vanishes_at_edges(seed in any::<u64>(), height in 0.05f64..1.5) {
        let s = SurfaceRealization::generate(&params(seed, 2.0 / 3.0, height)).unwrap();
        prop_assert!((s.peak_to_trough - height).abs() < 1e-12 * height);
        prop_assert!(s.h[0].abs() < 1e-3 * height && s.h[239].abs() < 1e-3 * height);
    }

    #[test]
    fn scaling_commutes(seed in any::<u64>(), target in 0.01f64..2.0, c in 0.1f64..10.0) {
        let grid = make_grid(4.0, 120).unwrap();
        let h = generate_gaussian_surface(&grid, 0.5, seed).unwrap();
        let scaled_input: Vec<f64> = h.iter().map(|v| v * c).collect();
        let a = scale_to_peak_trough(&h, target).unwrap();
        let b = scale_to_peak_trough(&scaled_input, target).unwrap();
        let d = scale_to_peak_trough(&h, c * target).unwrap();
        for i in 0..h.len() {
            prop_assert!((a[i] - b[i]).abs() <= 1e-12 * target);
            prop_assert!((a[i] * c - d[i]).abs() <= 1e-12 * c * target);
        }
        prop_assert!((peak_to_trough(&d) - c * target).abs() <= 1e-12 * c * target);
    }
}
