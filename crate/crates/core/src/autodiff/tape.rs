use super::{bessel01_derivatives, sigmoid, Scalar};
use crate::error::{Error, Result};
use std::cell::RefCell;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Index of a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Default)]
struct Nodes {
    values: Vec<f64>,
    // parents/partials of node i live in [offsets[i], offsets[i + 1])
    offsets: Vec<usize>,
    parents: Vec<usize>,
    partials: Vec<f64>,
}

impl Nodes {
    fn push(&mut self, value: f64, parents: &[usize], partials: &[f64]) -> usize {
        if self.offsets.is_empty() {
            self.offsets.push(0);
        }
        let id = self.values.len();
        self.values.push(value);
        self.parents.extend_from_slice(parents);
        self.partials.extend_from_slice(partials);
        self.offsets.push(self.parents.len());
        id
    }
}

/// Reverse-mode recording of scalar operations.
///
/// Nodes may only reference earlier nodes, so the graph is acyclic by
/// construction. A tape is single-owner; create a fresh one (or [`clear`]
/// it) for every evaluation of the loss.
///
/// [`clear`]: Tape::clear
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Nodes>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&self) {
        *self.nodes.borrow_mut() = Nodes::default();
    }

    /// Independent input.
    pub fn var(&self, value: f64) -> Var<'_> {
        let id = self.nodes.borrow_mut().push(value, &[], &[]);
        Var {
            tape: self,
            id: VarId(id),
            value,
        }
    }

    pub fn constant(&self, value: f64) -> Var<'_> {
        self.var(value)
    }

    pub fn value(&self, id: VarId) -> f64 {
        self.nodes.borrow().values[id.0]
    }

    /// Record a node with the given parents and local partials
    /// `∂value/∂parent`.
    pub fn record(&self, parents: &[VarId], partials: &[f64], value: f64) -> Result<VarId> {
        if parents.len() != partials.len() {
            return Err(Error::Shape(format!(
                "{} parents but {} partials",
                parents.len(),
                partials.len()
            )));
        }
        let len = self.len();
        if let Some(p) = parents.iter().find(|p| p.0 >= len) {
            return Err(Error::InvalidArgument(format!(
                "parent {} not yet recorded (tape length {len})",
                p.0
            )));
        }
        let ids: Vec<usize> = parents.iter().map(|p| p.0).collect();
        Ok(VarId(self.nodes.borrow_mut().push(value, &ids, partials)))
    }

    pub fn var_from_id(&self, id: VarId) -> Var<'_> {
        Var {
            tape: self,
            id,
            value: self.value(id),
        }
    }

    fn push(&self, value: f64, parents: &[usize], partials: &[f64]) -> Var<'_> {
        let id = self.nodes.borrow_mut().push(value, parents, partials);
        Var {
            tape: self,
            id: VarId(id),
            value,
        }
    }

    /// Sum of many variables as a single node.
    pub fn sum<'t>(&'t self, terms: &[Var<'t>]) -> Var<'t> {
        let parents: Vec<usize> = terms.iter().map(|t| t.id.0).collect();
        let ones = vec![1.0; terms.len()];
        let value = terms.iter().map(|t| t.value).sum();
        self.push(value, &parents, &ones)
    }

    /// Gradient of `output` with respect to every node.
    pub fn backward(&self, output: VarId) -> Gradients {
        let nodes = self.nodes.borrow();
        let mut adjoint = vec![0.0; nodes.values.len()];
        adjoint[output.0] = 1.0;
        for i in (0..=output.0).rev() {
            let a = adjoint[i];
            if a == 0.0 {
                continue;
            }
            for k in nodes.offsets[i]..nodes.offsets[i + 1] {
                adjoint[nodes.parents[k]] += a * nodes.partials[k];
            }
        }
        Gradients { adjoint }
    }
}

/// Result of [`Tape::backward`].
#[derive(Debug, Clone)]
pub struct Gradients {
    adjoint: Vec<f64>,
}

impl Gradients {
    pub fn wrt(&self, id: VarId) -> f64 {
        self.adjoint.get(id.0).copied().unwrap_or(0.0)
    }

    pub fn of(&self, v: &Var<'_>) -> f64 {
        self.wrt(v.id)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.adjoint
    }
}

/// Tape-tracked real scalar.
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    pub id: VarId,
    value: f64,
}

impl std::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Var({}: {})", self.id.0, self.value)
    }
}

impl<'t> Var<'t> {
    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    fn unary(self, value: f64, partial: f64) -> Self {
        self.tape.push(value, &[self.id.0], &[partial])
    }

    fn binary(self, o: Self, value: f64, da: f64, db: f64) -> Self {
        self.tape.push(value, &[self.id.0, o.id.0], &[da, db])
    }
}

impl<'t> Add for Var<'t> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        self.binary(o, self.value + o.value, 1.0, 1.0)
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self.binary(o, self.value - o.value, 1.0, -1.0)
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        self.binary(o, self.value * o.value, o.value, self.value)
    }
}

impl<'t> Div for Var<'t> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let q = self.value / o.value;
        self.binary(o, q, 1.0 / o.value, -q / o.value)
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Self;
    fn neg(self) -> Self {
        self.unary(-self.value, -1.0)
    }
}

impl<'t> Add<f64> for Var<'t> {
    type Output = Self;
    fn add(self, c: f64) -> Self {
        self.unary(self.value + c, 1.0)
    }
}

impl<'t> Sub<f64> for Var<'t> {
    type Output = Self;
    fn sub(self, c: f64) -> Self {
        self.unary(self.value - c, 1.0)
    }
}

impl<'t> Mul<f64> for Var<'t> {
    type Output = Self;
    fn mul(self, c: f64) -> Self {
        self.unary(self.value * c, c)
    }
}

impl<'t> Scalar for Var<'t> {
    fn value(&self) -> f64 {
        self.value
    }
    fn constant_like(&self, v: f64) -> Self {
        self.tape.constant(v)
    }
    fn exp(self) -> Self {
        let e = self.value.exp();
        self.unary(e, e)
    }
    fn ln(self) -> Self {
        self.unary(self.value.ln(), 1.0 / self.value)
    }
    fn sin(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.unary(s, c)
    }
    fn cos(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.unary(c, -s)
    }
    fn sqrt(self) -> Self {
        let r = self.value.sqrt();
        self.unary(r, 0.5 / r)
    }
    fn sigmoid(self) -> Self {
        let s = sigmoid(self.value);
        self.unary(s, s * (1.0 - s))
    }
    fn bessel01(self) -> [Self; 4] {
        let b = crate::specfun::bessel01(self.value);
        let db = bessel01_derivatives(self.value, b);
        [
            self.unary(b[0], db[0]),
            self.unary(b[1], db[1]),
            self.unary(b[2], db[2]),
            self.unary(b[3], db[3]),
        ]
    }
}
