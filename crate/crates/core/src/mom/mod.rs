//! Method-of-moments discretisation of the Dirichlet (TE) and Neumann (TM)
//! boundary integral equations over a 1D perfectly conducting surface.
//!
//! Panels are the grid cells; unknowns live at the panel midpoints. Each
//! off-diagonal panel integral uses the trapezium rule on the two panel
//! endpoints, whose heights and slopes are averages of the neighbouring
//! midpoint samples (with a zero ghost beyond either end).
//!
//! Sign conventions, with `n'` the upward unit normal and `∂/∂n'` acting on
//! the source point:
//!
//! * TE: `∫ G u dL' = ψ_i` on the surface and `ψ_s = -∫ G u dL'` above it,
//!   where `u = ∂ψ/∂n'`. The minus sign is folded into `B_D`.
//! * TM: `ψ/2 - PV∫ ψ ∂G/∂n' dL' = ψ_i` on the surface and
//!   `ψ_s = ∫ ψ ∂G/∂n' dL'` above it.
//!
//! In both cases `ψ_s = B y` with `A y = Ψ_i`.

mod diff;
mod linalg;

pub use diff::{DifferentiableMom, ProfileGradient};
pub use linalg::{norm2, solve_linear, ComplexMatrix, ComplexVector, LuFactor};

use crate::autodiff::Scalar;
use crate::error::{Error, Result};
use crate::specfun::{Point, EULER_GAMMA};
use crate::surface::{Grid, SurfaceRealization};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    /// Dirichlet boundary condition.
    TE,
    /// Neumann boundary condition.
    TM,
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarization::TE => "TE",
            Polarization::TM => "TM",
        })
    }
}

impl FromStr for Polarization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "TE" => Ok(Polarization::TE),
            "TM" => Ok(Polarization::TM),
            _ => Err(Error::Parse(format!("unknown polarization {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterProblem {
    pub polarization: Polarization,
    pub k: f64,
    /// Grazing angle of the incident plane wave (negative means downward).
    pub alpha: f64,
    /// Height of the observation line.
    pub zeta: f64,
    pub grid: Grid,
}

impl ScatterProblem {
    pub fn new(polarization: Polarization, k: f64, alpha: f64, zeta: f64, grid: Grid) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidArgument(format!("wavenumber must be positive, got {k}")));
        }
        if !alpha.is_finite() || !zeta.is_finite() {
            return Err(Error::InvalidArgument("non-finite incidence or observation height".into()));
        }
        Ok(Self {
            polarization,
            k,
            alpha,
            zeta,
            grid,
        })
    }

    /// `(X_n, ζ)` for every panel midpoint.
    pub fn observation_points(&self) -> Vec<Point> {
        self.grid.midpoints.iter().map(|&x| Point::new(x, self.zeta)).collect()
    }

    fn check(&self, profile: &Profile<'_>) -> Result<()> {
        self.check_shapes(profile)?;
        let max_height = profile.h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(self.zeta > max_height) {
            return Err(Error::ObservationBelowSurface {
                zeta: self.zeta,
                max_height,
            });
        }
        Ok(())
    }

    fn check_shapes(&self, profile: &Profile<'_>) -> Result<()> {
        let n = self.grid.len();
        if profile.h.len() != n || profile.dh.len() != n {
            return Err(Error::Shape(format!(
                "surface has {} heights and {} slopes for {n} panels",
                profile.h.len(),
                profile.dh.len()
            )));
        }
        if let Some(c) = profile.d2h {
            if c.len() != n {
                return Err(Error::Shape(format!("{} curvatures for {n} panels", c.len())));
            }
        }
        if profile.h.iter().chain(profile.dh).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                iteration: 0,
                what: "surface samples".into(),
            });
        }
        Ok(())
    }
}

/// Surface samples at the panel midpoints.
#[derive(Debug, Clone, Copy)]
pub struct Profile<'a> {
    pub h: &'a [f64],
    pub dh: &'a [f64],
    /// Only the TM path reads this.
    pub d2h: Option<&'a [f64]>,
}

impl<'a> Profile<'a> {
    pub fn new(h: &'a [f64], dh: &'a [f64], d2h: Option<&'a [f64]>) -> Self {
        Self { h, dh, d2h }
    }

    fn curvature(&self) -> Result<&'a [f64]> {
        self.d2h
            .ok_or_else(|| Error::InvalidArgument("TM assembly needs second derivatives".into()))
    }
}

impl<'a> From<&'a SurfaceRealization> for Profile<'a> {
    fn from(s: &'a SurfaceRealization) -> Self {
        Self {
            h: &s.h,
            dh: &s.dh,
            d2h: Some(&s.d2h),
        }
    }
}

pub fn incident_field(problem: &ScatterProblem, points: &[Point]) -> ComplexVector {
    let (sa, ca) = problem.alpha.sin_cos();
    points
        .iter()
        .map(|p| Complex64::new(0.0, problem.k * (ca * p.x + sa * p.z)).exp())
        .collect()
}

/// `Ψ_i[l] = ψ_i(X_l, h_l)`
pub fn surface_incident(problem: &ScatterProblem, h: &[f64]) -> ComplexVector {
    let pts: Vec<Point> = problem
        .grid
        .midpoints
        .iter()
        .zip(h)
        .map(|(&x, &z)| Point::new(x, z))
        .collect();
    incident_field(problem, &pts)
}

/// Panel endpoint values from midpoint samples; `N + 1` entries.
pub fn node_values(mid: &[f64]) -> Vec<f64> {
    let n = mid.len();
    (0..=n)
        .map(|j| {
            let left = if j > 0 { mid[j - 1] } else { 0.0 };
            let right = if j < n { mid[j] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

/// TE integrand `G · √(1 + s²)` at a source node offset `(dx, dz)` from the
/// target, as `[re, im]`.
pub fn te_node<S: Scalar>(k: f64, dx: f64, dz: S, slope: S) -> [S; 2] {
    let d = (dz.square() + dx * dx).sqrt();
    let [j0, y0, _, _] = (d * k).bessel01();
    let w = (slope.square() + 1.0).sqrt() * 0.25;
    [-(y0 * w), j0 * w]
}

/// TM integrand `∂G/∂n' · √(1 + s²) = -(ik/4) H1(kd) (dz - s·dx) / d`.
pub fn tm_node<S: Scalar>(k: f64, dx: f64, dz: S, slope: S) -> [S; 2] {
    let d = (dz.square() + dx * dx).sqrt();
    let [_, _, j1, y1] = (d * k).bessel01();
    let q = (dz - slope * dx) / d * (0.25 * k);
    [y1 * q, -(j1 * q)]
}

/// Closed-form integral of the small-argument Green's function over a
/// straight panel of length `Δs = Δx √(1 + s²)` centred on the target.
pub fn te_self<S: Scalar>(k: f64, dx: f64, slope: S) -> [S; 2] {
    let ds = (slope.square() + 1.0).sqrt() * dx;
    let log = (ds * (0.25 * k)).ln() + (EULER_GAMMA - 1.0);
    [-(log * ds) * (0.5 / PI), ds * 0.25]
}

/// `1/2` minus the self-panel integral of the kernel's curvature limit
/// `κ/(4π)`.
pub fn tm_self<S: Scalar>(dx: f64, slope: S, curvature: S) -> [S; 2] {
    let limit = curvature / (slope.square() + 1.0) * (dx / (4.0 * PI));
    [-limit + 0.5, curvature.constant_like(0.0)]
}

type NodeKernel = fn(f64, f64, f64, f64) -> [f64; 2];

/// `F[t, j]` for every target `t` and node `j`, row-major.
fn node_table(k: f64, targets: &[Point], nodes_x: &[f64], hn: &[f64], sn: &[f64], f: NodeKernel) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(targets.len() * nodes_x.len());
    for t in targets {
        for j in 0..nodes_x.len() {
            let [re, im] = f(k, nodes_x[j] - t.x, hn[j] - t.z, sn[j]);
            out.push(Complex64::new(re, im));
        }
    }
    out
}

/// `M[t, l] = sign · Δx/2 · (F[t, l] + F[t, l + 1])`, skipping `l = t` when
/// `diagonal` is given.
fn panel_matrix(
    table: &[Complex64],
    rows: usize,
    n: usize,
    dx: f64,
    sign: f64,
    diagonal: Option<&[Complex64]>,
) -> ComplexMatrix {
    let w = sign * 0.5 * dx;
    let mut m = ComplexMatrix::zeros(rows, n);
    for t in 0..rows {
        let f = &table[t * (n + 1)..(t + 1) * (n + 1)];
        let row = m.row_mut(t);
        for l in 0..n {
            row[l] = (f[l] + f[l + 1]) * w;
        }
        if let Some(d) = diagonal {
            row[t] = d[t];
        }
    }
    m
}

fn surface_points(grid: &Grid, h: &[f64]) -> Vec<Point> {
    grid.midpoints.iter().zip(h).map(|(&x, &z)| Point::new(x, z)).collect()
}

/// Matrix signs `(A, B)` per polarization.
pub(crate) fn matrix_signs(p: Polarization) -> (f64, f64) {
    match p {
        Polarization::TE => (1.0, -1.0),
        Polarization::TM => (-1.0, 1.0),
    }
}

fn assemble(problem: &ScatterProblem, profile: &Profile<'_>) -> Result<(ComplexMatrix, ComplexMatrix)> {
    problem.check(profile)?;
    assemble_at(problem, profile, &problem.observation_points())
}

/// `A` and a `B` whose rows are the given field points.
fn assemble_at(
    problem: &ScatterProblem,
    profile: &Profile<'_>,
    obs: &[Point],
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let grid = &problem.grid;
    let (n, dx, k) = (grid.len(), grid.dx(), problem.k);
    let hn = node_values(profile.h);
    let sn = node_values(profile.dh);
    let (sa, sb) = matrix_signs(problem.polarization);
    let (kernel, diag): (NodeKernel, Vec<Complex64>) = match problem.polarization {
        Polarization::TE => (
            te_node::<f64>,
            profile
                .dh
                .iter()
                .map(|&s| {
                    let [re, im] = te_self(k, dx, s);
                    Complex64::new(re, im)
                })
                .collect(),
        ),
        Polarization::TM => {
            let c = profile.curvature()?;
            (
                tm_node::<f64>,
                profile
                    .dh
                    .iter()
                    .zip(c)
                    .map(|(&s, &c)| {
                        let [re, im] = tm_self(dx, s, c);
                        Complex64::new(re, im)
                    })
                    .collect(),
            )
        }
    };
    let surf = surface_points(grid, profile.h);
    let a_table = node_table(k, &surf, &grid.nodes, &hn, &sn, kernel);
    let a = panel_matrix(&a_table, n, n, dx, sa, Some(&diag));
    let b_table = node_table(k, obs, &grid.nodes, &hn, &sn, kernel);
    let b = panel_matrix(&b_table, obs.len(), n, dx, sb, None);
    Ok((a, b))
}

/// `(A_D, B_D)`; `B_D` already carries the minus sign of the scattered-field
/// representation.
pub fn assemble_dirichlet(problem: &ScatterProblem, h: &[f64], dh: &[f64]) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let mut p = problem.clone();
    p.polarization = Polarization::TE;
    assemble(&p, &Profile::new(h, dh, None))
}

pub fn assemble_neumann(
    problem: &ScatterProblem,
    h: &[f64],
    dh: &[f64],
    d2h: &[f64],
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let mut p = problem.clone();
    p.polarization = Polarization::TM;
    assemble(&p, &Profile::new(h, dh, Some(d2h)))
}

/// Surface unknown `y` and scattered field `B y` for an arbitrary right-hand
/// side.
pub fn solve_for_rhs(
    problem: &ScatterProblem,
    profile: &Profile<'_>,
    rhs: &[Complex64],
) -> Result<(ComplexVector, ComplexVector)> {
    let (a, b) = assemble(problem, profile)?;
    let y = solve_linear(&a, rhs)?;
    let psi = b.matvec(&y);
    Ok((y, psi))
}

/// `ψ_s = B A⁻¹ Ψ_i` at the observation points `(X_n, ζ)`.
pub fn scattered_field(problem: &ScatterProblem, profile: &Profile<'_>) -> Result<ComplexVector> {
    let rhs = surface_incident(problem, profile.h);
    Ok(solve_for_rhs(problem, profile, &rhs)?.1)
}

/// Scattered field at arbitrary points above the surface.
pub fn scattered_field_at(problem: &ScatterProblem, profile: &Profile<'_>, points: &[Point]) -> Result<ComplexVector> {
    problem.check_shapes(profile)?;
    let max_height = profile.h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if let Some(p) = points.iter().find(|p| !(p.z > max_height)) {
        return Err(Error::ObservationBelowSurface { zeta: p.z, max_height });
    }
    let (a, b) = assemble_at(problem, profile, points)?;
    let y = solve_linear(&a, &surface_incident(problem, profile.h))?;
    Ok(b.matvec(&y))
}
