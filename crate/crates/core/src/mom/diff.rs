//! Reverse-mode MOM: `ψ_s = B(h, h') A(h, h', h'')⁻¹ Ψ_i(h)` with a
//! hand-written backward pass.
//!
//! The forward pass runs the same node kernels as the plain solver, but with
//! [`Dual<2>`] inputs so every table entry also yields its partials with
//! respect to the local height offset and slope.

use super::{
    matrix_signs, node_values, panel_matrix, surface_incident, te_node, te_self, tm_node, tm_self,
    ComplexMatrix, ComplexVector, LuFactor, Polarization, Profile, ScatterProblem,
};
use crate::autodiff::{solve_adjoint, Dual};
use crate::error::Result;
use num_complex::Complex64;

type D2 = Dual<2>;

/// `∂F/∂dz` and `∂F/∂s` of one node contribution.
type Partials = [Complex64; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileGradient {
    pub h: Vec<f64>,
    pub dh: Vec<f64>,
    /// Zero for TE.
    pub d2h: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DifferentiableMom {
    polarization: Polarization,
    k: f64,
    alpha: f64,
    dx: f64,
    n: usize,
    lu: LuFactor,
    b: ComplexMatrix,
    rhs: ComplexVector,
    y: ComplexVector,
    psi_s: ComplexVector,
    a_partials: Vec<Partials>,
    b_partials: Vec<Partials>,
    diag_partials: Vec<Partials>,
}

fn split(f: [D2; 2]) -> (Complex64, Partials) {
    let [re, im] = f;
    (
        Complex64::new(re.v, im.v),
        [Complex64::new(re.d[0], im.d[0]), Complex64::new(re.d[1], im.d[1])],
    )
}

#[inline]
fn re_dot(a: Complex64, b: Complex64) -> f64 {
    a.re * b.re + a.im * b.im
}

impl DifferentiableMom {
    /// Unlike the plain solver this does not reject a surface that reaches
    /// the observation line: a surrogate in training may pass through such
    /// states.
    pub fn forward(problem: &ScatterProblem, profile: &Profile<'_>) -> Result<Self> {
        problem.check_shapes(profile)?;
        let grid = &problem.grid;
        let (n, dx, k) = (grid.len(), grid.dx(), problem.k);
        let hn = node_values(profile.h);
        let sn = node_values(profile.dh);
        let (sa, sb) = matrix_signs(problem.polarization);
        let kernel: fn(f64, f64, D2, D2) -> [D2; 2] = match problem.polarization {
            Polarization::TE => te_node::<D2>,
            Polarization::TM => tm_node::<D2>,
        };

        let mut diag = Vec::with_capacity(n);
        let mut diag_partials = Vec::with_capacity(n);
        match problem.polarization {
            Polarization::TE => {
                for &s in profile.dh {
                    let (v, p) = split(te_self(k, dx, D2::variable(s, 0)));
                    diag.push(v);
                    diag_partials.push(p);
                }
            }
            Polarization::TM => {
                let c = profile.curvature()?;
                for (&s, &c) in profile.dh.iter().zip(c) {
                    let (v, p) = split(tm_self(dx, D2::variable(s, 0), D2::variable(c, 1)));
                    diag.push(v);
                    diag_partials.push(p);
                }
            }
        }

        let table = |zs: &mut dyn Iterator<Item = (f64, f64)>| {
            let mut values = Vec::new();
            let mut partials = Vec::new();
            for (xt, zt) in zs {
                for j in 0..=n {
                    let (v, p) = split(kernel(
                        k,
                        grid.nodes[j] - xt,
                        D2::variable(hn[j] - zt, 0),
                        D2::variable(sn[j], 1),
                    ));
                    values.push(v);
                    partials.push(p);
                }
            }
            (values, partials)
        };
        let (a_vals, a_partials) = table(&mut grid.midpoints.iter().copied().zip(profile.h.iter().copied()));
        let a = panel_matrix(&a_vals, n, n, dx, sa, Some(&diag));
        let (b_vals, b_partials) = table(&mut grid.midpoints.iter().map(|&x| (x, problem.zeta)));
        let b = panel_matrix(&b_vals, n, n, dx, sb, None);

        let rhs = surface_incident(problem, profile.h);
        let lu = LuFactor::new(a)?;
        let y = lu.solve(&rhs)?;
        let psi_s = b.matvec(&y);
        Ok(Self {
            polarization: problem.polarization,
            k,
            alpha: problem.alpha,
            dx,
            n,
            lu,
            b,
            rhs,
            y,
            psi_s,
            a_partials,
            b_partials,
            diag_partials,
        })
    }

    pub fn scattered(&self) -> &[Complex64] {
        &self.psi_s
    }

    pub fn surface_unknown(&self) -> &[Complex64] {
        &self.y
    }

    pub fn surface_incident(&self) -> &[Complex64] {
        &self.rhs
    }

    /// Gradient with respect to the midpoint samples given
    /// `ψ̄ = ∂L/∂Re ψ_s + i ∂L/∂Im ψ_s`.
    pub fn backward(&self, psi_bar: &[Complex64]) -> Result<ProfileGradient> {
        let n = self.n;
        let (sa, sb) = matrix_signs(self.polarization);
        let y_bar = self.b.matvec_adjoint(psi_bar);
        let adj = solve_adjoint(&self.lu, &self.y, &y_bar)?;
        let b_bar = &adj.b_bar;

        let mut h = vec![0.0; n];
        let mut dh = vec![0.0; n];
        let mut d2h = vec![0.0; n];
        let mut hn = vec![0.0; n + 1];
        let mut sn = vec![0.0; n + 1];

        let db_dh = Complex64::new(0.0, self.k * self.alpha.sin());
        for l in 0..n {
            h[l] += re_dot(b_bar[l], db_dh * self.rhs[l]);
        }

        // A: Ā[t, l] = -b̄_t conj(y_l)
        let wa = sa * 0.5 * self.dx;
        for t in 0..n {
            let row = &self.a_partials[t * (n + 1)..(t + 1) * (n + 1)];
            let abar = |l: usize| -b_bar[t] * self.y[l].conj();
            for (j, p) in row.iter().enumerate() {
                let mut fbar = Complex64::new(0.0, 0.0);
                if j >= 1 && j - 1 != t {
                    fbar += abar(j - 1);
                }
                if j < n && j != t {
                    fbar += abar(j);
                }
                fbar *= wa;
                let g_dz = re_dot(fbar, p[0]);
                hn[j] += g_dz;
                h[t] -= g_dz;
                sn[j] += re_dot(fbar, p[1]);
            }
            let dbar = abar(t);
            let dp = &self.diag_partials[t];
            dh[t] += re_dot(dbar, dp[0]);
            if self.polarization == Polarization::TM {
                d2h[t] += re_dot(dbar, dp[1]);
            }
        }

        // B: B̄[m, l] = ψ̄_m conj(y_l)
        let wb = sb * 0.5 * self.dx;
        for (m, pb) in psi_bar.iter().enumerate() {
            let row = &self.b_partials[m * (n + 1)..(m + 1) * (n + 1)];
            for (j, p) in row.iter().enumerate() {
                let mut fbar = Complex64::new(0.0, 0.0);
                if j >= 1 {
                    fbar += pb * self.y[j - 1].conj();
                }
                if j < n {
                    fbar += pb * self.y[j].conj();
                }
                fbar *= wb;
                hn[j] += re_dot(fbar, p[0]);
                sn[j] += re_dot(fbar, p[1]);
            }
        }

        for j in 0..=n {
            if j >= 1 {
                h[j - 1] += 0.5 * hn[j];
                dh[j - 1] += 0.5 * sn[j];
            }
            if j < n {
                h[j] += 0.5 * hn[j];
                dh[j] += 0.5 * sn[j];
            }
        }
        Ok(ProfileGradient { h, dh, d2h })
    }
}
