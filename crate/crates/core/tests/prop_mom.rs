use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;
use surfpinn_core::mom::{
    norm2, scattered_field, scattered_field_at, solve_for_rhs, Polarization, Profile, ScatterProblem,
};
use surfpinn_core::specfun::Point;
use surfpinn_core::surface::{make_grid, SurfaceParams, SurfaceRealization};

fn baseline_surface(seed: u64) -> SurfaceRealization {
    SurfaceRealization::generate(&SurfaceParams {
        half_length: 8.0,
        n_panels: 240,
        scale: 2.0 / 3.0,
        peak_to_trough: 0.4,
        taper_margin: 1.0,
        seed,
    })
    .unwrap()
}

fn rel_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let d: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm2(&d) / norm2(b)
}

#[test]
fn refinement_converges_monotonically() {
    let surface = baseline_surface(11);
    let probe: Vec<Point> = make_grid(8.0, 60)
        .unwrap()
        .midpoints
        .iter()
        .map(|&x| Point::new(x, 0.5))
        .collect();
    for pol in [Polarization::TE, Polarization::TM] {
        let field = |n: usize| {
            let s = surface.resample(make_grid(8.0, n).unwrap()).unwrap();
            let p = ScatterProblem::new(pol, 2.0 * PI, -PI / 4.0, 0.5, s.grid.clone()).unwrap();
            scattered_field_at(&p, &Profile::from(&s), &probe).unwrap()
        };
        let reference = field(480);
        let errors: Vec<f64> = [60, 120, 240].into_iter().map(|n| rel_diff(&field(n), &reference)).collect();
        assert!(errors.windows(2).all(|w| w[0] > w[1]), "{pol}: {errors:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn field_is_linear_in_the_excitation(
        seed in any::<u64>(),
        te in any::<bool>(),
        a in (-2.0f64..2.0, -2.0f64..2.0),
        b in (-2.0f64..2.0, -2.0f64..2.0),
    ) {
        let pol = if te { Polarization::TE } else { Polarization::TM };
        let s = SurfaceRealization::generate(&SurfaceParams {
            half_length: 2.0,
            n_panels: 40,
            scale: 0.5,
            peak_to_trough: 0.3,
            taper_margin: 0.5,
            seed,
        })
        .unwrap();
        let p = ScatterProblem::new(pol, 2.0 * PI, -PI / 4.0, 0.5, s.grid.clone()).unwrap();
        let prof = Profile::from(&s);
        let (a, b) = (Complex64::new(a.0, a.1), Complex64::new(b.0, b.1));
        let r1: Vec<Complex64> = (0..40).map(|i| Complex64::new((i as f64).sin(), 1.0)).collect();
        let r2: Vec<Complex64> = (0..40).map(|i| Complex64::new(0.5, (0.3 * i as f64).cos())).collect();
        let mixed: Vec<Complex64> = r1.iter().zip(&r2).map(|(x, y)| a * x + b * y).collect();
        let (_, f1) = solve_for_rhs(&p, &prof, &r1).unwrap();
        let (_, f2) = solve_for_rhs(&p, &prof, &r2).unwrap();
        let (_, fm) = solve_for_rhs(&p, &prof, &mixed).unwrap();
        let expected: Vec<Complex64> = f1.iter().zip(&f2).map(|(x, y)| a * x + b * y).collect();
        prop_assert!(rel_diff(&fm, &expected) < 1e-10);
    }

    #[test]
    fn arbitrary_points_agree_with_observation_line(seed in any::<u64>(), te in any::<bool>()) {
        let pol = if te { Polarization::TE } else { Polarization::TM };
        let s = SurfaceRealization::generate(&SurfaceParams {
            half_length: 2.0,
            n_panels: 40,
            scale: 0.5,
            peak_to_trough: 0.3,
            taper_margin: 0.5,
            seed,
        })
        .unwrap();
        let p = ScatterProblem::new(pol, 2.0 * PI, -PI / 3.0, 0.6, s.grid.clone()).unwrap();
        let prof = Profile::from(&s);
        let on_line = scattered_field(&p, &prof).unwrap();
        let at = scattered_field_at(&p, &prof, &p.observation_points()).unwrap();
        prop_assert_eq!(on_line, at);
    }

    #[test]
    fn flat_plate_reflects_specularly(alpha in -PI / 3.0..-PI / 6.0, te in any::<bool>()) {
        let pol = if te { Polarization::TE } else { Polarization::TM };
        let k = 2.0 * PI;
        let zeta = 0.5;
        let grid = make_grid(8.0, 256).unwrap();
        let flat = SurfaceRealization::flat(grid.clone(), 1.0);
        let p = ScatterProblem::new(pol, k, alpha, zeta, grid.clone()).unwrap();
        let psi = scattered_field(&p, &Profile::from(&flat)).unwrap();
        let r = if te { -1.0 } else { 1.0 };
        let (got, want): (Vec<_>, Vec<_>) = grid
            .midpoints
            .iter()
            .zip(&psi)
            .filter(|(x, _)| x.abs() <= 4.0)
            .map(|(&x, &v)| (v, Complex64::from_polar(r, k * (alpha.cos() * x - alpha.sin() * zeta))))
            .unzip();
        prop_assert!(rel_diff(&got, &want) < 0.05, "α = {alpha}: {}", rel_diff(&got, &want));
    }
}
