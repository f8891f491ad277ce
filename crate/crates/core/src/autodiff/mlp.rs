//! Fully connected sigmoid network `h(x)` with second-order spatial jets.
//!
//! Input is normalised as `x̂ = x / x_scale`, so the input jet is seeded with
//! `d/dx = 1 / x_scale`; the linear output layer is multiplied by `h_bound`.
//! The batched path runs every layer as one matrix product over a block of
//! `[values | first derivatives | second derivatives]` columns and has an
//! explicit reverse rule ([`MlpParams::backward_batch`]).

use super::{Jet2, Scalar};
use crate::error::{Error, Result};
use ndarray::{s, Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Hidden-layer count and width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetShape {
    pub depth: usize,
    pub width: usize,
}

impl NetShape {
    pub fn new(depth: usize, width: usize) -> Self {
        Self { depth, width }
    }

    /// `(fan_out, fan_in)` of every affine map, input to output.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        if self.depth == 0 {
            return vec![(1, 1)];
        }
        let mut dims = vec![(self.width, 1)];
        dims.extend((1..self.depth).map(|_| (self.width, self.width)));
        dims.push((1, self.width));
        dims
    }
}

/// Weight and bias distributions at initialisation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitScheme {
    /// Weights and biases uniform in `±1/√fan_in`.
    #[default]
    FanIn,
    /// Weights uniform in `±√(6/(fan_in + fan_out))`, zero biases.
    Glorot,
}

impl InitScheme {
    /// `(weight, bias)` half-widths for one affine map.
    pub fn limits(self, fan_in: usize, fan_out: usize) -> (f64, f64) {
        match self {
            InitScheme::FanIn => {
                let r = 1.0 / (fan_in as f64).sqrt();
                (r, r)
            }
            InitScheme::Glorot => ((6.0 / (fan_in + fan_out) as f64).sqrt(), 0.0),
        }
    }
}

impl std::fmt::Display for InitScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InitScheme::FanIn => "fanin",
            InitScheme::Glorot => "glorot",
        })
    }
}

impl std::str::FromStr for InitScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fanin" => Ok(InitScheme::FanIn),
            "glorot" => Ok(InitScheme::Glorot),
            _ => Err(Error::Parse(format!("unknown init scheme {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `fan_out × fan_in`
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Layer {
    pub fn zeros(fan_out: usize, fan_in: usize) -> Self {
        Self {
            weight: Array2::zeros((fan_out, fan_in)),
            bias: Array1::zeros(fan_out),
        }
    }
}

/// Network parameters θ plus the fixed input/output normalisation.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<Layer>,
    pub x_scale: f64,
    pub h_bound: f64,
}

/// A layer with weights in an arbitrary scalar type (row-major).
#[derive(Debug, Clone)]
pub struct GenericLayer<S> {
    pub fan_out: usize,
    pub fan_in: usize,
    pub weight: Vec<S>,
    pub bias: Vec<S>,
}

/// Activations kept by [`MlpParams::forward_batch`] for the reverse pass.
pub struct MlpCache {
    points: usize,
    /// Input of every affine layer.
    inputs: Vec<Array2<f64>>,
    /// Pre-activation jets of every hidden layer.
    pre: Vec<Array2<f64>>,
}

impl MlpParams {
    /// Seeded initialisation with the default scheme.
    pub fn init(shape: NetShape, x_scale: f64, h_bound: f64, seed: u64) -> Self {
        Self::init_with(shape, InitScheme::default(), x_scale, h_bound, seed)
    }

    pub fn init_with(shape: NetShape, scheme: InitScheme, x_scale: f64, h_bound: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = shape
            .layer_dims()
            .into_iter()
            .map(|(fan_out, fan_in)| {
                let (w_lim, b_lim) = scheme.limits(fan_in, fan_out);
                let weight = Array2::from_shape_fn((fan_out, fan_in), |_| rng.gen_range(-w_lim..=w_lim));
                let bias = Array1::from_shape_fn(fan_out, |_| if b_lim > 0.0 { rng.gen_range(-b_lim..=b_lim) } else { 0.0 });
                Layer { weight, bias }
            })
            .collect();
        Self {
            layers,
            x_scale,
            h_bound,
        }
    }

    pub fn from_layers(layers: Vec<Layer>, x_scale: f64, h_bound: f64) -> Result<Self> {
        let p = Self {
            layers,
            x_scale,
            h_bound,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let first = self
            .layers
            .first()
            .ok_or_else(|| Error::Shape("network has no layers".into()))?;
        if first.weight.ncols() != 1 {
            return Err(Error::Shape("input layer must take one feature".into()));
        }
        for (i, pair) in self.layers.windows(2).enumerate() {
            if pair[0].weight.nrows() != pair[1].weight.ncols() {
                return Err(Error::Shape(format!("layers {i} and {} do not chain", i + 1)));
            }
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.bias.len() != l.weight.nrows() {
                return Err(Error::Shape(format!("layer {i} bias length")));
            }
            if l.weight.iter().chain(l.bias.iter()).any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!("layer {i} has non-finite entries")));
            }
        }
        if self.layers.last().map(|l| l.weight.nrows()) != Some(1) {
            return Err(Error::Shape("output layer must have one unit".into()));
        }
        if !(self.x_scale > 0.0) || !(self.h_bound > 0.0) {
            return Err(Error::InvalidArgument("normalisation bounds must be positive".into()));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.len() + l.bias.len())
            .sum()
    }

    /// Parameter tensors in a fixed order (weight, bias per layer).
    pub fn tensors(&self) -> impl Iterator<Item = &[f64]> {
        self.layers.iter().flat_map(|l| {
            [
                l.weight.as_slice().expect("standard layout"),
                l.bias.as_slice().expect("standard layout"),
            ]
        })
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.layers.iter_mut().flat_map(|l| {
            [
                l.weight.as_slice_mut().expect("standard layout"),
                l.bias.as_slice_mut().expect("standard layout"),
            ]
        })
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.tensors().flat_map(|t| t.iter().copied()).collect()
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                flat.len()
            )));
        }
        let mut offset = 0;
        for t in self.tensors_mut() {
            t.copy_from_slice(&flat[offset..offset + t.len()]);
            offset += t.len();
        }
        Ok(())
    }

    /// Zero-valued gradient container with the same shapes.
    pub fn zeros_like(&self) -> Vec<Layer> {
        self.layers
            .iter()
            .map(|l| Layer::zeros(l.weight.nrows(), l.weight.ncols()))
            .collect()
    }

    pub fn map_layers<S>(&self, mut f: impl FnMut(f64) -> S) -> Vec<GenericLayer<S>> {
        self.layers
            .iter()
            .map(|l| GenericLayer {
                fan_out: l.weight.nrows(),
                fan_in: l.weight.ncols(),
                weight: l.weight.iter().map(|&w| f(w)).collect(),
                bias: l.bias.iter().map(|&b| f(b)).collect(),
            })
            .collect()
    }

    /// `h`, `h'`, `h''` at one physical point.
    pub fn eval_jet(&self, x: f64) -> Jet2<f64> {
        let layers = self.map_layers(|w| w);
        mlp_forward(&layers, Jet2::seed(x / self.x_scale, 1.0 / self.x_scale), self.h_bound)
    }

    pub fn eval(&self, xs: &[f64]) -> Vec<f64> {
        self.forward_batch(xs).0.into_iter().map(|j| j.v).collect()
    }

    /// Jets at every point of `xs`, keeping what the reverse pass needs.
    pub fn forward_batch(&self, xs: &[f64]) -> (Vec<Jet2<f64>>, MlpCache) {
        let p = xs.len();
        let mut input = Array2::zeros((1, 3 * p));
        for (j, &x) in xs.iter().enumerate() {
            input[[0, j]] = x / self.x_scale;
            input[[0, p + j]] = 1.0 / self.x_scale;
        }
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(last);
        let mut a = input;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = layer.weight.dot(&a);
            z.slice_mut(s![.., ..p])
                .axis_iter_mut(Axis(1))
                .for_each(|mut col| col += &layer.bias);
            inputs.push(a);
            if i == last {
                a = z;
            } else {
                a = sigmoid_jets(&z, p);
                pre.push(z);
            }
        }
        let hb = self.h_bound;
        let jets = (0..p)
            .map(|j| Jet2::new(hb * a[[0, j]], hb * a[[0, p + j]], hb * a[[0, 2 * p + j]]))
            .collect();
        (
            jets,
            MlpCache {
                points: p,
                inputs,
                pre,
            },
        )
    }

    /// Parameter gradient given cotangents of the output jets.
    pub fn backward_batch(&self, cache: &MlpCache, bars: &[Jet2<f64>]) -> Vec<Layer> {
        let p = cache.points;
        assert_eq!(bars.len(), p, "cotangent count");
        let hb = self.h_bound;
        let mut zbar = Array2::zeros((1, 3 * p));
        for (j, b) in bars.iter().enumerate() {
            zbar[[0, j]] = hb * b.v;
            zbar[[0, p + j]] = hb * b.d1;
            zbar[[0, 2 * p + j]] = hb * b.d2;
        }
        let mut grads: Vec<Layer> = Vec::with_capacity(self.layers.len());
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let weight = zbar.dot(&cache.inputs[i].t());
            let bias = zbar.slice(s![.., ..p]).sum_axis(Axis(1));
            grads.push(Layer { weight, bias });
            if i > 0 {
                let abar = layer.weight.t().dot(&zbar);
                zbar = sigmoid_jets_backward(&abar, &cache.pre[i - 1], p);
            }
        }
        grads.reverse();
        grads
    }
}

/// Generic single-point forward pass; `x_normalized` must already carry the
/// input scaling in its derivative parts.
pub fn mlp_forward<S: Scalar>(
    layers: &[GenericLayer<S>],
    x_normalized: Jet2<S>,
    h_bound: f64,
) -> Jet2<S> {
    let mut a = vec![x_normalized];
    let last = layers.len() - 1;
    for (i, layer) in layers.iter().enumerate() {
        let mut next = Vec::with_capacity(layer.fan_out);
        for r in 0..layer.fan_out {
            let row = &layer.weight[r * layer.fan_in..(r + 1) * layer.fan_in];
            let mut acc = Jet2::constant(layer.bias[r]);
            for (w, x) in row.iter().zip(a.iter()) {
                acc = acc + Jet2::new(x.v * *w, x.d1 * *w, x.d2 * *w);
            }
            next.push(if i == last { acc } else { acc.sigmoid() });
        }
        a = next;
    }
    a[0].scale(h_bound)
}

fn sigmoid_jets(z: &Array2<f64>, p: usize) -> Array2<f64> {
    let mut a = Array2::zeros(z.raw_dim());
    for r in 0..z.nrows() {
        let zr = z.row(r);
        let mut ar = a.row_mut(r);
        for j in 0..p {
            let (zv, z1, z2) = (zr[j], zr[p + j], zr[2 * p + j]);
            let s = super::sigmoid(zv);
            let s1 = s * (1.0 - s);
            let s2 = s1 * (1.0 - 2.0 * s);
            ar[j] = s;
            ar[p + j] = s1 * z1;
            ar[2 * p + j] = s2 * z1 * z1 + s1 * z2;
        }
    }
    a
}

fn sigmoid_jets_backward(abar: &Array2<f64>, z: &Array2<f64>, p: usize) -> Array2<f64> {
    let mut zbar = Array2::zeros(z.raw_dim());
    for r in 0..z.nrows() {
        let zr = z.row(r);
        let br = abar.row(r);
        let mut out = zbar.row_mut(r);
        for j in 0..p {
            let (zv, z1, z2) = (zr[j], zr[p + j], zr[2 * p + j]);
            let (bv, b1, b2) = (br[j], br[p + j], br[2 * p + j]);
            let s = super::sigmoid(zv);
            let s1 = s * (1.0 - s);
            let s2 = s1 * (1.0 - 2.0 * s);
            let s3 = s2 * (1.0 - 2.0 * s) - 2.0 * s1 * s1;
            out[j] = bv * s1 + b1 * s2 * z1 + b2 * (s3 * z1 * z1 + s2 * z2);
            out[p + j] = b1 * s1 + 2.0 * b2 * s2 * z1;
            out[2 * p + j] = b2 * s1;
        }
    }
    zbar
}

const CHECKPOINT_MAGIC: &str = "surfpinn-mlp";
const CHECKPOINT_VERSION: u32 = 1;

/// Text checkpoint, version 1:
///
/// ```text
/// surfpinn-mlp 1
/// x_scale <f64>
/// h_bound <f64>
/// layers <count>
/// weight <fan_out> <fan_in>
/// <fan_out lines of fan_in comma-separated values>
/// bias <fan_out>
/// <one line of fan_out comma-separated values>
/// ...
/// ```
///
/// Values use the shortest decimal form that round-trips exactly.
pub fn write_checkpoint(params: &MlpParams) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let join = |vals: &mut dyn Iterator<Item = &f64>| {
        vals.map(|v| v.to_string()).collect::<Vec<_>>().join(",")
    };
    writeln!(out, "{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}").unwrap();
    writeln!(out, "x_scale {}", params.x_scale).unwrap();
    writeln!(out, "h_bound {}", params.h_bound).unwrap();
    writeln!(out, "layers {}", params.layers.len()).unwrap();
    for l in &params.layers {
        writeln!(out, "weight {} {}", l.weight.nrows(), l.weight.ncols()).unwrap();
        for row in l.weight.rows() {
            writeln!(out, "{}", join(&mut row.iter())).unwrap();
        }
        writeln!(out, "bias {}", l.bias.len()).unwrap();
        writeln!(out, "{}", join(&mut l.bias.iter())).unwrap();
    }
    out
}

pub fn read_checkpoint(text: &str) -> Result<MlpParams> {
    let mut lines = text.lines();
    let mut next = || {
        lines
            .next()
            .ok_or_else(|| Error::Parse("unexpected end of checkpoint".into()))
    };
    let parse_f = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|e| Error::Parse(format!("{s:?}: {e}")))
    };
    let parse_u = |s: &str| -> Result<usize> {
        s.trim()
            .parse::<usize>()
            .map_err(|e| Error::Parse(format!("{s:?}: {e}")))
    };
    let keyed = |line: &str, key: &str| -> Result<String> {
        line.strip_prefix(key)
            .map(|r| r.trim().to_string())
            .ok_or_else(|| Error::Parse(format!("expected `{key}`, found {line:?}")))
    };
    let header = next()?;
    if header.trim() != format!("{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}") {
        return Err(Error::Parse(format!("unsupported checkpoint header {header:?}")));
    }
    let x_scale = parse_f(&keyed(next()?, "x_scale")?)?;
    let h_bound = parse_f(&keyed(next()?, "h_bound")?)?;
    let count = parse_u(&keyed(next()?, "layers")?)?;
    let mut layers = Vec::with_capacity(count);
    let row_values = |line: &str, n: usize| -> Result<Vec<f64>> {
        let v: Vec<f64> = line.split(',').map(parse_f).collect::<Result<_>>()?;
        if v.len() != n {
            return Err(Error::Parse(format!("expected {n} values, found {}", v.len())));
        }
        Ok(v)
    };
    for _ in 0..count {
        let dims = keyed(next()?, "weight")?;
        let mut it = dims.split_whitespace();
        let fan_out = parse_u(it.next().unwrap_or(""))?;
        let fan_in = parse_u(it.next().unwrap_or(""))?;
        let mut w = Vec::with_capacity(fan_out * fan_in);
        for _ in 0..fan_out {
            w.extend(row_values(next()?, fan_in)?);
        }
        let n_bias = parse_u(&keyed(next()?, "bias")?)?;
        let b = row_values(next()?, n_bias)?;
        layers.push(Layer {
            weight: Array2::from_shape_vec((fan_out, fan_in), w)
                .map_err(|e| Error::Shape(e.to_string()))?,
            bias: Array1::from(b),
        });
    }
    MlpParams::from_layers(layers, x_scale, h_bound)
}
