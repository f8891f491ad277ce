use crate::manifest::{Manifest, Outputs};
use crate::spec::{check, SpecArgs};
use crate::Common;
use anyhow::{bail, ensure, Context, Result};
use clap::ValueEnum;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use surfpinn_core::autodiff::write_checkpoint;
use surfpinn_core::inverse::{batch_evaluate, derive_seed, mean_std, train_with, Experiment, SEED_TRAIN};
use surfpinn_core::io::{self, FieldMetadata};
use surfpinn_core::surface::{grid_from_midpoints, SurfaceRealization};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// Relative noise level ε.
    Noise,
    /// Correlation length.
    Scale,
    /// Peak-to-trough height; ζ follows at 2.5 × max height unless given.
    Height,
    /// Grazing angle in radians.
    Incidence,
}

impl Common {
    fn runs_or(&self, default: usize) -> Result<usize> {
        let runs = self.runs.unwrap_or(default);
        ensure!(runs > 0, "--runs must be positive");
        Ok(runs)
    }

    fn seeds(&self, runs: usize) -> impl Iterator<Item = u64> {
        self.seed..self.seed + runs as u64
    }

    fn outputs(&self, command: &str, spec: &SpecArgs, exp: &Experiment, runs: usize) -> Result<Outputs> {
        let preset = spec.config.is_none().then_some(self.preset);
        let mut out = Outputs::new(
            &self.out_dir,
            self.manifest,
            Manifest::new(command, preset, self.seed, runs, self.workers, exp.clone()),
        )?;
        if let Some(c) = &spec.config {
            out.input(c);
        }
        Ok(out)
    }

    fn log(&self, msg: impl std::fmt::Display) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }
}

/// `stem.ext` for a single run, `stem_<seed>.ext` otherwise.
fn numbered(stem: &str, ext: &str, seed: u64, runs: usize) -> String {
    if runs == 1 {
        format!("{stem}.{ext}")
    } else {
        format!("{stem}_{seed}.{ext}")
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_surface(path: &Path, scale: f64) -> Result<SurfaceRealization> {
    let (x, h) = io::read_surface_csv(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    let grid = grid_from_midpoints(&x).with_context(|| format!("surface grid in {}", path.display()))?;
    Ok(SurfaceRealization::from_heights(grid, h, scale)?)
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

pub fn generate(c: &Common, spec: &SpecArgs) -> Result<()> {
    let exp = spec.resolve(c.preset)?;
    let runs = c.runs_or(1)?;
    let mut out = c.outputs("generate", spec, &exp, runs)?;
    let mut heights = Vec::with_capacity(runs);
    for seed in c.seeds(runs) {
        let s = SurfaceRealization::generate(&exp.surface_params(seed))?;
        out.write(&numbered("surface", "csv", seed, runs), &io::write_surface_csv(&s.grid.midpoints, &s.h)?)?;
        heights.push(s.peak_to_trough);
    }
    out.manifest.note("peak_to_trough", heights);
    let path = out.finish()?;
    println!("{}", path.display());
    Ok(())
}

pub fn forward(c: &Common, spec: &SpecArgs, surface: Option<&Path>) -> Result<()> {
    let mut exp = spec.resolve(c.preset)?;
    let runs = c.runs_or(1)?;
    if surface.is_some() && runs != 1 {
        bail!("--runs only applies when the surface is generated");
    }
    let loaded = match surface {
        Some(p) => {
            let s = load_surface(p, exp.scale)?;
            if let Some(l) = spec.half_length {
                ensure!(same(l, s.grid.half_length), "--half-length {l} conflicts with the surface file (L = {})", s.grid.half_length);
            }
            exp.train.half_length = s.grid.half_length;
            exp.train.n_obs = s.grid.len();
            exp.train.n_inv = exp.train.n_inv.max(s.grid.len());
            exp.peak_to_trough = s.peak_to_trough;
            check(&exp)?;
            Some(s)
        }
        None => None,
    };
    let mut out = c.outputs("forward", spec, &exp, runs)?;
    if let Some(p) = surface {
        out.input(p);
    }
    let mut zetas = Vec::with_capacity(runs);
    for seed in c.seeds(runs) {
        let (s, obs) = match &loaded {
            Some(s) => (s.clone(), exp.observe(s, seed)?),
            None => {
                let (s, obs) = exp.synthesize(seed)?;
                out.write(&numbered("surface", "csv", seed, runs), &io::write_surface_csv(&s.grid.midpoints, &s.h)?)?;
                (s, obs)
            }
        };
        let meta = FieldMetadata {
            polarization: exp.train.polarization,
            case: exp.train.case,
            k: exp.k,
            alpha: exp.alpha,
            zeta: obs.zeta,
            half_length: s.grid.half_length,
            noise: exp.noise,
            seed,
        };
        out.write(&numbered("field", "csv", seed, runs), &io::write_field_csv(&obs.points, &obs.values)?)?;
        out.write(&numbered("field", "meta", seed, runs), &io::to_kv(&meta)?)?;
        zetas.push(obs.zeta);
    }
    out.manifest.note("zeta", zetas);
    let path = out.finish()?;
    println!("{}", path.display());
    Ok(())
}

/// Takes the physics from the field metadata; flags given on the command line
/// must agree with it.
fn adopt(exp: &mut Experiment, spec: &SpecArgs, meta: &FieldMetadata, n_points: usize) -> Result<()> {
    let floats = [
        ("k", spec.k, meta.k),
        ("alpha", spec.alpha, meta.alpha),
        ("zeta", spec.zeta, meta.zeta),
        ("half-length", spec.half_length, meta.half_length),
    ];
    for (name, given, recorded) in floats {
        if let Some(v) = given {
            ensure!(same(v, recorded), "--{name} {v} conflicts with the field metadata ({name} = {recorded})");
        }
    }
    if let Some(p) = spec.polarization {
        ensure!(p == meta.polarization, "--polarization {p} conflicts with the field metadata ({})", meta.polarization);
    }
    if let Some(c) = spec.case {
        ensure!(c == meta.case, "--case {c} conflicts with the field metadata ({})", meta.case);
    }
    if let Some(n) = spec.n_obs {
        ensure!(n == n_points, "--n-obs {n} but the field file has {n_points} points");
    }
    if spec.zeta_factor.is_some() {
        bail!("--zeta-factor has no meaning for recorded data; ζ comes from the metadata");
    }
    exp.k = meta.k;
    exp.alpha = meta.alpha;
    exp.zeta = meta.zeta;
    exp.zeta_factor = None;
    exp.noise = meta.noise;
    exp.train.polarization = meta.polarization;
    exp.train.case = meta.case;
    exp.train.half_length = meta.half_length;
    exp.train.n_obs = n_points;
    check(exp)
}

pub fn reconstruct(c: &Common, spec: &SpecArgs, field: &Path, meta: Option<&Path>, truth: Option<&Path>) -> Result<()> {
    let mut exp = spec.resolve(c.preset)?;
    let runs = c.runs_or(1)?;
    let meta_path: PathBuf = meta.map_or_else(|| field.with_extension("meta"), Path::to_path_buf);
    let metadata: FieldMetadata = io::from_kv(&read(&meta_path)?).with_context(|| format!("parsing {}", meta_path.display()))?;
    let (points, values) = io::read_field_csv(&read(field)?).with_context(|| format!("parsing {}", field.display()))?;
    let obs = io::observation_set(points, values, &metadata)?;
    adopt(&mut exp, spec, &metadata, obs.len())?;

    let truth_h = match truth {
        Some(p) => {
            let (x, h) = io::read_surface_csv(&read(p)?).with_context(|| format!("parsing {}", p.display()))?;
            ensure!(
                x.len() == obs.len() && x.iter().zip(&obs.points).all(|(a, b)| same(*a, *b)),
                "truth abscissae in {} differ from the observation points",
                p.display()
            );
            Some(h)
        }
        None => None,
    };

    let mut out = c.outputs("reconstruct", spec, &exp, runs)?;
    out.input(field);
    out.input(&meta_path);
    if let Some(p) = truth {
        out.input(p);
    }
    let mut results = String::from(if truth_h.is_some() { "seed,final_loss,l2_error\n" } else { "seed,final_loss\n" });
    let mut errors = Vec::new();
    for seed in c.seeds(runs) {
        let mut cfg = exp.train.clone();
        cfg.seed = derive_seed(seed, SEED_TRAIN);
        let every = (cfg.iterations / 10).max(1);
        let outcome = train_with(&cfg, &obs, truth_h.as_deref(), |r| {
            if r.iteration % every == 0 {
                c.log(format_args!("seed {seed}: iteration {} loss {:.4e}", r.iteration, r.loss));
            }
        })?;
        out.write(&numbered("reconstruction", "csv", seed, runs), &io::write_surface_csv(&outcome.x, &outcome.h)?)?;
        out.write(&numbered("history", "csv", seed, runs), &io::write_history_csv(&outcome.history)?)?;
        out.write(&numbered("network", "txt", seed, runs), &write_checkpoint(&outcome.params))?;
        let loss = outcome.history.last().map_or(f64::NAN, |r| r.loss);
        match outcome.l2_error {
            Some(e) => {
                writeln!(results, "{seed},{loss},{e}")?;
                errors.push(e);
            }
            None => writeln!(results, "{seed},{loss}")?,
        }
    }
    out.write("results.csv", &results)?;
    if !errors.is_empty() {
        let (mean, std) = mean_std(&errors);
        out.manifest.note("l2_error_percent", &errors);
        out.manifest.note("l2_error_mean", mean);
        out.manifest.note("l2_error_std_population", std);
        println!("l2 error {mean:.3}% (population std {std:.3}) over {runs} run(s)");
    }
    let path = out.finish()?;
    println!("{}", path.display());
    Ok(())
}

fn sweep_point(base: &Experiment, spec: &SpecArgs, axis: Axis, v: f64) -> Result<Experiment> {
    let mut e = base.clone();
    match axis {
        Axis::Noise => e.noise = v,
        Axis::Scale => e.scale = v,
        Axis::Height => {
            e = e.with_height(v);
            if let Some(b) = spec.h_bound {
                e.train.h_bound = b;
            }
            if spec.zeta.is_none() && spec.zeta_factor.is_none() {
                e.zeta_factor = Some(2.5);
            }
        }
        Axis::Incidence => e.alpha = v,
    }
    check(&e)?;
    Ok(e)
}

pub fn sweep(c: &Common, spec: &SpecArgs, axis: Axis, values: &[f64]) -> Result<()> {
    ensure!(!values.is_empty(), "--values needs at least one entry");
    let base = spec.resolve(c.preset)?;
    let runs = c.runs_or(5)?;
    ensure!(runs >= 2, "a sweep needs at least two runs per point for its statistics");
    let points = values
        .iter()
        .map(|&v| sweep_point(&base, spec, axis, v))
        .collect::<Result<Vec<_>>>()?;
    let mut out = c.outputs("sweep", spec, &base, runs)?;
    out.manifest.note("axis", axis);
    out.manifest.note("values", values);
    let mut table = String::from("axis,value,mean,std,runs\n");
    let mut per_run = String::from("axis,value,seed,l2_error,final_loss\n");
    let name = axis.to_possible_value().expect("no skipped variants").get_name().to_string();
    let mut means = Vec::with_capacity(values.len());
    for (&v, exp) in values.iter().zip(&points) {
        let b = batch_evaluate(exp, runs, c.seed, c.workers)?;
        writeln!(table, "{name},{v},{},{},{runs}", b.mean, b.std)?;
        for r in &b.runs {
            writeln!(per_run, "{name},{v},{},{},{}", r.seed, r.l2_error, r.final_loss)?;
        }
        out.write("sweep.csv", &table)?;
        out.write("runs.csv", &per_run)?;
        c.log(format_args!("{name} = {v}: {:.3}% ± {:.3}", b.mean, b.std));
        means.push(b.mean);
    }
    out.manifest.note("means", &means);
    out.manifest.note("std_convention", "population");
    out.manifest.note("monotone_increasing", means.windows(2).all(|w| w[1] > w[0]));
    out.manifest.note("last_exceeds_first", means.last() > means.first());
    if axis == Axis::Noise {
        for (level, key) in [(0.15, "error_at_15pct"), (0.2, "error_at_20pct")] {
            if let Some(i) = values.iter().position(|v| same(*v, level)) {
                out.manifest.note(key, means[i]);
            }
        }
    }
    let path = out.finish()?;
    print!("{table}");
    println!("{}", path.display());
    Ok(())
}

pub fn validate(c: &Common, spec: &SpecArgs) -> Result<bool> {
    let exp = spec.resolve(c.preset)?;
    let mut out = c.outputs("validate", spec, &exp, 1)?;
    let checks = crate::oracles::run_all()?;
    let mut table = String::from("check,value,tolerance,pass\n");
    for ch in &checks {
        writeln!(table, "{},{},{},{}", ch.name, ch.value, ch.tolerance, ch.pass())?;
        println!("{:<28} {:>10.3e} < {:<8.1e} {}", ch.name, ch.value, ch.tolerance, if ch.pass() { "PASS" } else { "FAIL" });
    }
    out.write("validate.csv", &table)?;
    let all = checks.iter().all(|ch| ch.pass());
    out.manifest.note("all_passed", all);
    out.finish()?;
    Ok(all)
}
