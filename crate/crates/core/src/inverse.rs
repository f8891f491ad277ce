//! Surface reconstruction: observation handling, losses, Adam and the
//! training loop through the differentiable MOM.

use crate::autodiff::{InitScheme, Jet2, MlpParams, NetShape, Scalar, Tape, Var};
use crate::error::{Error, Result};
use crate::mom::{incident_field, DifferentiableMom, Polarization, Profile, ScatterProblem};
use crate::surface::{make_grid, SurfaceParams, SurfaceRealization};
use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Mul};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DataCase {
    /// Full complex scattered field.
    A,
    /// Total-field amplitude only.
    B,
}

impl fmt::Display for DataCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DataCase::A => "A",
            DataCase::B => "B",
        })
    }
}

impl FromStr for DataCase {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "A" => Ok(DataCase::A),
            "B" => Ok(DataCase::B),
            _ => Err(Error::Parse(format!("unknown data case {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldValues {
    Full(Vec<Complex64>),
    Phaseless(Vec<f64>),
}

impl FieldValues {
    pub fn len(&self) -> usize {
        match self {
            FieldValues::Full(v) => v.len(),
            FieldValues::Phaseless(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn case(&self) -> DataCase {
        match self {
            FieldValues::Full(_) => DataCase::A,
            FieldValues::Phaseless(_) => DataCase::B,
        }
    }
}

/// Measurements on the line `z = ζ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    pub points: Vec<f64>,
    pub zeta: f64,
    pub k: f64,
    pub alpha: f64,
    pub values: FieldValues,
}

impl ObservationSet {
    pub fn new(points: Vec<f64>, zeta: f64, k: f64, alpha: f64, values: FieldValues) -> Result<Self> {
        let set = Self {
            points,
            zeta,
            k,
            alpha,
            values,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.len() != self.values.len() || self.points.is_empty() {
            return Err(Error::Validation(format!(
                "{} observation points but {} values",
                self.points.len(),
                self.values.len()
            )));
        }
        if self.points.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Validation("observation points must be strictly increasing".into()));
        }
        if let FieldValues::Phaseless(a) = &self.values {
            if a.iter().any(|v| !(*v >= 0.0)) {
                return Err(Error::Validation("phaseless amplitudes must be non-negative".into()));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn case(&self) -> DataCase {
        self.values.case()
    }
}

/// Noise-free data from a forward solve on the surface's own grid
/// (observation abscissae are the panel midpoints).
pub fn simulate_observations(
    problem: &ScatterProblem,
    surface: &SurfaceRealization,
    case: DataCase,
) -> Result<ObservationSet> {
    let psi = crate::mom::scattered_field(problem, &Profile::from(surface))?;
    let values = match case {
        DataCase::A => FieldValues::Full(psi),
        DataCase::B => {
            let inc = incident_field(problem, &problem.observation_points());
            FieldValues::Phaseless(psi.iter().zip(&inc).map(|(s, i)| (s + i).norm()).collect())
        }
    };
    ObservationSet::new(
        problem.grid.midpoints.clone(),
        problem.zeta,
        problem.k,
        problem.alpha,
        values,
    )
}

/// `ψ (1 + εϑ)` with one `ϑ ~ U[-1, 1]` per point.
pub fn add_noise<T>(values: &[T], epsilon: f64, rng: &mut impl Rng) -> Vec<T>
where
    T: Copy + Mul<f64, Output = T>,
{
    if epsilon == 0.0 {
        return values.to_vec();
    }
    values
        .iter()
        .map(|&v| v * (1.0 + epsilon * rng.gen_range(-1.0..=1.0)))
        .collect()
}

pub fn add_noise_to(values: &FieldValues, epsilon: f64, rng: &mut impl Rng) -> FieldValues {
    match values {
        FieldValues::Full(v) => FieldValues::Full(add_noise(v, epsilon, rng)),
        FieldValues::Phaseless(v) => FieldValues::Phaseless(add_noise(v, epsilon, rng)),
    }
}

/// Piecewise-linear interpolation on increasing nodes; constant outside the
/// hull.
pub fn interpolate_linear<T>(xs: &[f64], ys: &[T], targets: &[f64]) -> Vec<T>
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T>,
{
    let last = xs.len() - 1;
    targets
        .iter()
        .map(|&t| {
            if t <= xs[0] {
                return ys[0];
            }
            if t >= xs[last] {
                return ys[last];
            }
            let i = xs.partition_point(|&x| x <= t) - 1;
            let w = (t - xs[i]) / (xs[i + 1] - xs[i]);
            if w == 0.0 {
                ys[i]
            } else {
                ys[i] * (1.0 - w) + ys[i + 1] * w
            }
        })
        .collect()
}

pub fn interpolate_observations(obs: &ObservationSet, targets: &[f64]) -> FieldValues {
    match &obs.values {
        FieldValues::Full(v) => FieldValues::Full(interpolate_linear(&obs.points, v, targets)),
        FieldValues::Phaseless(v) => {
            FieldValues::Phaseless(interpolate_linear(&obs.points, v, targets))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub polarization: Polarization,
    pub case: DataCase,
    pub half_length: f64,
    pub n_obs: usize,
    pub n_inv: usize,
    pub n_b: usize,
    pub learning_rate: f64,
    pub iterations: usize,
    pub seed: u64,
    pub depth: usize,
    pub width: usize,
    pub h_bound: f64,
    #[serde(default)]
    pub init: InitScheme,
    /// Known height at every boundary point.
    pub boundary_value: f64,
    /// Weight of the field term relative to the boundary term.
    pub field_weight: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            polarization: Polarization::TE,
            case: DataCase::A,
            half_length: 8.0,
            n_obs: 240,
            n_inv: 480,
            n_b: 10,
            learning_rate: 1e-3,
            iterations: 1500,
            seed: 0,
            depth: 4,
            width: 256,
            h_bound: 1.0,
            init: InitScheme::FanIn,
            boundary_value: 0.0,
            field_weight: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Validation(m.to_string()));
        if self.n_obs == 0 || self.n_obs > self.n_inv {
            return bad("need 0 < n_obs <= n_inv");
        }
        if self.n_b == 0 || !self.n_b.is_multiple_of(2) {
            return bad("n_b must be positive and even");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning rate must be positive");
        }
        if !(self.half_length > 0.0) || !(self.h_bound > 0.0) {
            return bad("half length and height bound must be positive");
        }
        if self.width == 0 && self.depth > 0 {
            return bad("hidden layers need a positive width");
        }
        if !(self.field_weight >= 0.0) {
            return bad("field weight must be non-negative");
        }
        Ok(())
    }

    pub fn shape(&self) -> NetShape {
        NetShape::new(self.depth, self.width)
    }
}

/// Per-iteration sampling: panel midpoints and boundary-constraint points.
#[derive(Debug, Clone, PartialEq)]
pub struct Collocation {
    pub n_t: usize,
    pub midpoints: Vec<f64>,
    pub boundary: Vec<f64>,
}

/// Deterministic under `(config.seed, t)`.
pub fn sample_collocation(t: usize, config: &TrainConfig) -> Collocation {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(t as u64 + 1);
    let n_t = rng.gen_range(config.n_obs..=config.n_inv);
    let l = config.half_length;
    let dx = 2.0 * l / n_t as f64;
    let midpoints = (1..=n_t).map(|j| (j as f64 - 0.5) * dx - l).collect();
    let half = config.n_b / 2;
    let boundary = (0..half)
        .map(|j| -l + j as f64 * dx)
        .chain((0..half).map(|j| l - j as f64 * dx))
        .collect();
    Collocation {
        n_t,
        midpoints,
        boundary,
    }
}

/// Boundary mean-square term `(1/N_b) Σ (h_j - target)²`.
fn boundary_term<'t>(tape: &'t Tape, heights: &[Var<'t>], target: f64) -> Var<'t> {
    let terms: Vec<Var<'t>> = heights.iter().map(|&h| (h - target).square()).collect();
    tape.sum(&terms) * (1.0 / heights.len().max(1) as f64)
}

/// Full data: `(w/N_t) Σ |ψ^NN - ψ^data|² + (1/N_b) Σ |h^NN - h|²`.
pub fn loss_case_a<'t>(
    tape: &'t Tape,
    psi: &[(Var<'t>, Var<'t>)],
    data: &[Complex64],
    boundary: &[Var<'t>],
    boundary_target: f64,
    field_weight: f64,
) -> Var<'t> {
    let terms: Vec<Var<'t>> = psi
        .iter()
        .zip(data)
        .flat_map(|(&(re, im), d)| [(re - d.re).square(), (im - d.im).square()])
        .collect();
    let field = tape.sum(&terms) * (field_weight / psi.len().max(1) as f64);
    field + boundary_term(tape, boundary, boundary_target)
}

/// Phaseless data: `(w/N_t) Σ (|ψ^NN + ψ_i| - |ψ_tot^data|)² + boundary`.
pub fn loss_case_b<'t>(
    tape: &'t Tape,
    psi: &[(Var<'t>, Var<'t>)],
    incident: &[Complex64],
    amplitude: &[f64],
    boundary: &[Var<'t>],
    boundary_target: f64,
    field_weight: f64,
) -> Var<'t> {
    let terms: Vec<Var<'t>> = psi
        .iter()
        .zip(incident)
        .zip(amplitude)
        .map(|((&(re, im), i), &a)| {
            let tr = re + i.re;
            let ti = im + i.im;
            ((tr.square() + ti.square()).sqrt() - a).square()
        })
        .collect();
    let field = tape.sum(&terms) * (field_weight / psi.len().max(1) as f64);
    field + boundary_term(tape, boundary, boundary_target)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            config: AdamConfig::default(),
        }
    }
}

/// One bias-corrected Adam update in place. Rejects non-finite gradients
/// without touching the parameters.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, lr: f64) -> Result<()> {
    if params.len() != grads.len() || state.m.len() != params.len() {
        return Err(Error::Shape(format!(
            "adam: {} params, {} grads, state for {}",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFinite {
            iteration: state.t as usize + 1,
            what: format!("gradient component {i}"),
        });
    }
    state.t += 1;
    let AdamConfig {
        beta1,
        beta2,
        epsilon,
    } = state.config;
    let c1 = 1.0 - beta1.powi(state.t as i32);
    let c2 = 1.0 - beta2.powi(state.t as i32);
    for ((p, &g), (m, v)) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        *p -= lr * (*m / c1) / ((*v / c2).sqrt() + epsilon);
    }
    Ok(())
}

/// `100 ‖H^NN - H‖ / ‖H‖`
pub fn l2_error(reconstructed: &[f64], truth: &[f64]) -> Result<f64> {
    if reconstructed.len() != truth.len() {
        return Err(Error::Shape(format!(
            "{} reconstructed vs {} true heights",
            reconstructed.len(),
            truth.len()
        )));
    }
    let den: f64 = truth.iter().map(|h| h * h).sum::<f64>().sqrt();
    if den == 0.0 {
        return Err(Error::DegenerateSurface);
    }
    let num: f64 = reconstructed
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(100.0 * num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub n_t: usize,
    pub loss: f64,
    pub field: f64,
    pub boundary: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: MlpParams,
    /// Reporting grid: the observation abscissae.
    pub x: Vec<f64>,
    pub h: Vec<f64>,
    pub history: Vec<IterationRecord>,
    /// Gradient norm per layer after the first iteration.
    pub first_layer_grad_norms: Vec<f64>,
    pub l2_error: Option<f64>,
}

/// Loss value and its gradients for one network state and collocation set.
pub struct Evaluation {
    pub record: IterationRecord,
    pub grads: Vec<crate::autodiff::Layer>,
}

fn check_consistency(config: &TrainConfig, obs: &ObservationSet) -> Result<()> {
    config.validate()?;
    obs.validate()?;
    if obs.case() != config.case {
        return Err(Error::Validation(format!(
            "configured for case {} but data are case {}",
            config.case,
            obs.case()
        )));
    }
    if obs.points[0] < -config.half_length || *obs.points.last().unwrap() > config.half_length {
        return Err(Error::Validation("observation points outside [-L, L]".into()));
    }
    Ok(())
}

/// Forward and reverse pass of the loss at iteration `t`.
pub fn evaluate(
    params: &MlpParams,
    config: &TrainConfig,
    obs: &ObservationSet,
    t: usize,
) -> Result<Evaluation> {
    let coll = sample_collocation(t, config);
    evaluate_at(params, config, obs, &coll, t)
}

pub fn evaluate_at(
    params: &MlpParams,
    config: &TrainConfig,
    obs: &ObservationSet,
    coll: &Collocation,
    t: usize,
) -> Result<Evaluation> {
    let n = coll.n_t;
    let xs: Vec<f64> = coll.midpoints.iter().chain(&coll.boundary).copied().collect();
    let (jets, cache) = params.forward_batch(&xs);
    let h: Vec<f64> = jets[..n].iter().map(|j| j.v).collect();
    let dh: Vec<f64> = jets[..n].iter().map(|j| j.d1).collect();
    let d2h: Vec<f64> = jets[..n].iter().map(|j| j.d2).collect();

    let tape = Tape::new();
    let hb: Vec<Var<'_>> = jets[n..].iter().map(|j| tape.var(j.v)).collect();
    let use_field = config.field_weight > 0.0;
    let mom = if use_field {
        let grid = make_grid(config.half_length, n)?;
        let problem = ScatterProblem::new(config.polarization, obs.k, obs.alpha, obs.zeta, grid)?;
        Some((
            DifferentiableMom::forward(&problem, &Profile::new(&h, &dh, Some(&d2h)))?,
            problem,
        ))
    } else {
        None
    };
    let psi: Vec<(Var<'_>, Var<'_>)> = match &mom {
        Some((m, _)) => m.scattered().iter().map(|z| (tape.var(z.re), tape.var(z.im))).collect(),
        None => Vec::new(),
    };
    let data = interpolate_observations(obs, &coll.midpoints);
    let (w, target) = (config.field_weight, config.boundary_value);
    let loss = match (&data, &mom) {
        (_, None) => loss_case_a(&tape, &psi, &[], &hb, target, 0.0),
        (FieldValues::Full(d), Some(_)) => loss_case_a(&tape, &psi, d, &hb, target, w),
        (FieldValues::Phaseless(a), Some((_, problem))) => {
            let inc = incident_field(problem, &problem.observation_points());
            loss_case_b(&tape, &psi, &inc, a, &hb, target, w)
        }
    };
    let boundary = hb.iter().map(|v| (v.value() - target).powi(2)).sum::<f64>() / hb.len().max(1) as f64;
    let loss_value = loss.value();
    if !loss_value.is_finite() {
        return Err(Error::NonFinite {
            iteration: t,
            what: "loss".into(),
        });
    }
    let g = tape.backward(loss.id);

    let mut bars = vec![Jet2::new(0.0, 0.0, 0.0); xs.len()];
    if let Some((m, _)) = &mom {
        let psi_bar: Vec<Complex64> = psi
            .iter()
            .map(|(re, im)| Complex64::new(g.of(re), g.of(im)))
            .collect();
        let pg = m.backward(&psi_bar)?;
        for j in 0..n {
            bars[j] = Jet2::new(pg.h[j], pg.dh[j], pg.d2h[j]);
        }
    }
    for (j, v) in hb.iter().enumerate() {
        bars[n + j].v = g.of(v);
    }
    let grads = params.backward_batch(&cache, &bars);
    let grad_norm = grads
        .iter()
        .flat_map(|l| l.weight.iter().chain(l.bias.iter()))
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt();
    Ok(Evaluation {
        record: IterationRecord {
            iteration: t,
            n_t: n,
            loss: loss_value,
            field: loss_value - boundary,
            boundary,
            grad_norm,
        },
        grads,
    })
}

/// Full training run. `truth`, when given, must be sampled on the
/// observation abscissae and yields the ℓ2 error.
pub fn train(config: &TrainConfig, obs: &ObservationSet, truth: Option<&[f64]>) -> Result<TrainOutcome> {
    train_with(config, obs, truth, |_| {})
}

/// [`train`] with a per-iteration callback.
pub fn train_with(
    config: &TrainConfig,
    obs: &ObservationSet,
    truth: Option<&[f64]>,
    mut on_iteration: impl FnMut(&IterationRecord),
) -> Result<TrainOutcome> {
    check_consistency(config, obs)?;
    if let Some(t) = truth {
        if t.len() != obs.len() {
            return Err(Error::Shape(format!(
                "{} true heights for {} observation points",
                t.len(),
                obs.len()
            )));
        }
    }
    let mut params = MlpParams::init_with(config.shape(), config.init, config.half_length, config.h_bound, config.seed);
    let mut state = AdamState::new(params.param_count());
    let mut history = Vec::with_capacity(config.iterations);
    let mut first_layer_grad_norms = Vec::new();
    let mut flat_grads = Vec::with_capacity(params.param_count());
    for t in 1..=config.iterations {
        let wrap = |e: Error| Error::AtIteration {
            iteration: t,
            source: Box::new(e),
        };
        let ev = evaluate(&params, config, obs, t).map_err(wrap)?;
        if t == 1 {
            first_layer_grad_norms = ev
                .grads
                .iter()
                .map(|l| {
                    l.weight
                        .iter()
                        .chain(l.bias.iter())
                        .map(|x| x * x)
                        .sum::<f64>()
                        .sqrt()
                })
                .collect();
        }
        flat_grads.clear();
        for l in &ev.grads {
            flat_grads.extend(l.weight.iter().copied());
            flat_grads.extend(l.bias.iter().copied());
        }
        let mut flat = params.flatten();
        adam_step(&mut flat, &flat_grads, &mut state, config.learning_rate).map_err(|e| match e {
            Error::NonFinite { what, .. } => Error::NonFinite { iteration: t, what },
            other => wrap(other),
        })?;
        params.set_flat(&flat)?;
        on_iteration(&ev.record);
        history.push(ev.record);
    }
    let h = params.eval(&obs.points);
    let l2 = truth.map(|t| l2_error(&h, t)).transpose()?;
    Ok(TrainOutcome {
        params,
        x: obs.points.clone(),
        h,
        history,
        first_layer_grad_norms,
        l2_error: l2,
    })
}

/// One synthetic experiment: random surface, simulated data, training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub k: f64,
    pub alpha: f64,
    pub zeta: f64,
    pub scale: f64,
    pub peak_to_trough: f64,
    pub taper_margin: f64,
    pub noise: f64,
    /// When set, ζ is this multiple of each realization's maximum height.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta_factor: Option<f64>,
    pub train: TrainConfig,
}

impl Default for Experiment {
    fn default() -> Self {
        Self {
            k: 2.0 * std::f64::consts::PI,
            alpha: -std::f64::consts::FRAC_PI_4,
            zeta: 0.5,
            scale: 2.0 / 3.0,
            peak_to_trough: 0.4,
            taper_margin: 1.0,
            noise: 0.0,
            zeta_factor: None,
            train: TrainConfig::default(),
        }
    }
}

impl Experiment {
    /// Sets the peak-to-trough height and the matching output bound.
    pub fn with_height(mut self, peak_to_trough: f64) -> Self {
        self.peak_to_trough = peak_to_trough;
        self.train.h_bound = 0.5 * peak_to_trough;
        self
    }
}

/// Named starting points for experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// L = 8, 240/480 points, 4×256, lr 1e-3, 1500 iterations.
    Baseline,
    /// k = 6.67π, α = −π/9, ζ = 0.6 and a 0.6 peak-to-trough height.
    Incident,
    /// L = 4, 120/240 points, 600 iterations at lr 3e-3.
    Desk,
    /// Baseline geometry over a flat plate.
    Flat,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Baseline, Preset::Incident, Preset::Desk, Preset::Flat];

    pub fn experiment(self) -> Experiment {
        let base = Experiment::default().with_height(0.4);
        match self {
            Preset::Baseline => base,
            Preset::Incident => Experiment {
                k: 6.67 * std::f64::consts::PI,
                alpha: -std::f64::consts::PI / 9.0,
                zeta: 0.6,
                ..base.with_height(0.6)
            },
            Preset::Desk => Experiment {
                train: TrainConfig {
                    half_length: 4.0,
                    n_obs: 120,
                    n_inv: 240,
                    iterations: 600,
                    learning_rate: 3e-3,
                    ..base.train.clone()
                },
                ..base
            },
            Preset::Flat => Experiment {
                peak_to_trough: 0.0,
                ..base
            },
        }
    }
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Preset::Baseline => "baseline",
            Preset::Incident => "incident",
            Preset::Desk => "desk",
            Preset::Flat => "flat",
        })
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.to_string() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Parse(format!("unknown preset {s:?}; expected baseline, incident, desk or flat")))
    }
}

/// Independent sub-seed for a named purpose.
pub fn derive_seed(seed: u64, purpose: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose);
    rng.next_u64()
}

pub const SEED_SURFACE: u64 = 1;
pub const SEED_NOISE: u64 = 2;
pub const SEED_TRAIN: u64 = 3;

impl Experiment {
    pub fn surface_params(&self, seed: u64) -> SurfaceParams {
        SurfaceParams {
            half_length: self.train.half_length,
            n_panels: self.train.n_obs,
            scale: self.scale,
            peak_to_trough: self.peak_to_trough,
            taper_margin: self.taper_margin,
            seed: derive_seed(seed, SEED_SURFACE),
        }
    }

    /// Observation height over a given realization.
    pub fn zeta_for(&self, surface: &SurfaceRealization) -> f64 {
        self.zeta_factor.map_or(self.zeta, |f| f * surface.max_height())
    }

    pub fn problem(&self, surface: &SurfaceRealization) -> Result<ScatterProblem> {
        ScatterProblem::new(
            self.train.polarization,
            self.k,
            self.alpha,
            self.zeta_for(surface),
            surface.grid.clone(),
        )
    }

    /// Ground truth and noisy observations for run `seed`.
    pub fn synthesize(&self, seed: u64) -> Result<(SurfaceRealization, ObservationSet)> {
        let surface = SurfaceRealization::generate(&self.surface_params(seed))?;
        let obs = self.observe(&surface, seed)?;
        Ok((surface, obs))
    }

    /// Noisy observations of a given surface, with the noise drawn for run
    /// `seed`.
    pub fn observe(&self, surface: &SurfaceRealization, seed: u64) -> Result<ObservationSet> {
        let problem = self.problem(surface)?;
        let mut obs = simulate_observations(&problem, surface, self.train.case)?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, SEED_NOISE));
        obs.values = add_noise_to(&obs.values, self.noise, &mut rng);
        Ok(obs)
    }

    pub fn run(&self, seed: u64) -> Result<RunRecord> {
        let (surface, obs) = self.synthesize(seed)?;
        let mut cfg = self.train.clone();
        cfg.seed = derive_seed(seed, SEED_TRAIN);
        let out = train(&cfg, &obs, Some(&surface.h))?;
        Ok(RunRecord {
            seed,
            l2_error: out.l2_error.unwrap_or(f64::NAN),
            final_loss: out.history.last().map_or(f64::NAN, |r| r.loss),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub l2_error: f64,
    pub final_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchSummary {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub runs: Vec<RunRecord>,
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Runs `seeds[i] = base_seed + i` on up to `workers` threads.
pub fn batch_evaluate(exp: &Experiment, n_runs: usize, base_seed: u64, workers: usize) -> Result<BatchSummary> {
    batch_with(n_runs, base_seed, workers, |seed| exp.run(seed))
}

pub fn batch_with(
    n_runs: usize,
    base_seed: u64,
    workers: usize,
    run: impl Fn(u64) -> Result<RunRecord> + Sync,
) -> Result<BatchSummary> {
    if n_runs < 2 {
        return Err(Error::InvalidArgument("batch statistics need at least two runs".into()));
    }
    let workers = workers.clamp(1, n_runs);
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results: Vec<Result<RunRecord>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                s.spawn(|| {
                    let mut mine = Vec::new();
                    loop {
                        let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                        if i >= n_runs {
                            break;
                        }
                        mine.push((i, run(base_seed + i as u64)));
                    }
                    mine
                })
            })
            .collect();
        let mut all: Vec<(usize, Result<RunRecord>)> =
            handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect();
        all.sort_by_key(|(i, _)| *i);
        all.into_iter().map(|(_, r)| r).collect()
    });
    let runs = results.into_iter().collect::<Result<Vec<_>>>()?;
    let errors: Vec<f64> = runs.iter().map(|r| r.l2_error).collect();
    let (mean, std) = mean_std(&errors);
    Ok(BatchSummary { mean, std, runs })
}
