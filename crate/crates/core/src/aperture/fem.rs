//! Taylor–Hood (P2 velocity / P1 pressure) discretisation of the axisymmetric,
//! swirl-free instationary Stokes problem
//!
//! ```text
//! −iωρ₀ v + ∇p − μ Δv = 0,   div v = 0
//! ```
//!
//! tested with weight r on the meridian mesh. No-slip on walls, v_r = 0 on the
//! axis, natural (pressure) data on the truncation surfaces. The global factor 2π
//! of the axisymmetric measure is left out of the matrix and restored in fluxes
//! and norms.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use faer::linalg::solvers::{Solve, SolveCore};
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{Argsort, Pair, SparseColMat, SymbolicSparseColMat};
use faer::{Conj, Mat};
use num_complex::Complex64;

use super::mesh::{BoundaryTag, MeridianMesh};
use super::ApertureDomain;
use crate::error::{LinerError, Result};
use crate::physics::GasParameters;

const FIXED: usize = usize::MAX;

/// Degree-5 rule on the reference triangle: (λ₀, λ₁, λ₂, weight), weights sum to 1.
const TRI_RULE: [(f64, f64, f64, f64); 7] = {
    const A1: f64 = 0.059715871789770;
    const B1: f64 = 0.470142064105115;
    const W1: f64 = 0.132394152788506;
    const A2: f64 = 0.797426985353087;
    const B2: f64 = 0.101286507323456;
    const W2: f64 = 0.125939180544827;
    [
        (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.225),
        (A1, B1, B1, W1),
        (B1, A1, B1, W1),
        (B1, B1, A1, W1),
        (A2, B2, B2, W2),
        (B2, A2, B2, W2),
        (B2, B2, A2, W2),
    ]
};

/// Three-point Gauss rule on [0, 1].
fn edge_rule() -> [(f64, f64); 3] {
    let d = 0.5 * (0.6f64).sqrt();
    [(0.5 - d, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + d, 5.0 / 18.0)]
}

/// Quadratic shape functions along an edge a–m–b at parameter t.
fn edge_shape(t: f64) -> [f64; 3] {
    [(1.0 - t) * (1.0 - 2.0 * t), 4.0 * t * (1.0 - t), t * (2.0 * t - 1.0)]
}

/// Limits applied by [`StokesSystem::solve_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Estimate the 1-norm condition number after factorisation.
    pub estimate_condition: bool,
    /// Reject the solve above this estimate.
    pub condition_limit: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { estimate_condition: true, condition_limit: 1e15 }
    }
}

struct Element {
    nodes: [usize; 6],
    area: f64,
    /// Gradients of the barycentric coordinates.
    grad: [[f64; 2]; 3],
    verts: [[f64; 2]; 3],
}

impl Element {
    fn point(&self, l: [f64; 3]) -> [f64; 2] {
        let mut p = [0.0; 2];
        for i in 0..3 {
            p[0] += l[i] * self.verts[i][0];
            p[1] += l[i] * self.verts[i][1];
        }
        p
    }

    /// P2 values and gradients at barycentric point `l`.
    fn p2(&self, l: [f64; 3]) -> ([f64; 6], [[f64; 2]; 6]) {
        let g = &self.grad;
        let mut n = [0.0; 6];
        let mut dn = [[0.0; 2]; 6];
        for i in 0..3 {
            n[i] = l[i] * (2.0 * l[i] - 1.0);
            let s = 4.0 * l[i] - 1.0;
            dn[i] = [s * g[i][0], s * g[i][1]];
        }
        for (k, (i, j)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
            n[3 + k] = 4.0 * l[i] * l[j];
            dn[3 + k] = [4.0 * (l[j] * g[i][0] + l[i] * g[j][0]), 4.0 * (l[j] * g[i][1] + l[i] * g[j][1])];
        }
        (n, dn)
    }
}

struct BoundaryQuad {
    tag: BoundaryTag,
    /// P2 nodes a, midpoint, b.
    nodes: [usize; 3],
    pa: [f64; 2],
    pb: [f64; 2],
}

impl BoundaryQuad {
    fn length(&self) -> f64 {
        (self.pb[0] - self.pa[0]).hypot(self.pb[1] - self.pa[1])
    }

    /// Outward unit normal (the fluid lies to the left of a → b).
    fn normal(&self) -> [f64; 2] {
        let len = self.length();
        [(self.pb[1] - self.pa[1]) / len, -(self.pb[0] - self.pa[0]) / len]
    }
}

/// Frequency-independent part of the discrete problem on one mesh.
///
/// The sparsity pattern and the symbolic LU factorisation are shared by all
/// frequencies solved on the same mesh.
pub struct StokesSystem {
    mesh: MeridianMesh,
    domain: Option<ApertureDomain>,
    /// P2 node coordinates: mesh vertices first, then edge midpoints.
    nodes: Vec<[f64; 2]>,
    elements: Vec<Element>,
    boundary: Vec<BoundaryQuad>,
    /// Equation index of (node, component), or FIXED.
    vel_dof: Vec<[usize; 2]>,
    n_vel: usize,
    n_total: usize,
    pattern: SymbolicSparseColMat<usize>,
    order: Argsort<usize>,
    rows: Vec<usize>,
    cols: Vec<usize>,
    stiff: Vec<f64>,
    mass: Vec<f64>,
    coupling: Vec<f64>,
    /// Load for unit pressure on SpherePlus and SphereMinus respectively.
    load_plus: Vec<f64>,
    load_minus: Vec<f64>,
    symbolic_lu: OnceLock<std::result::Result<SymbolicLu<usize>, String>>,
}

impl std::fmt::Debug for StokesSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StokesSystem")
            .field("vertices", &self.mesh.num_vertices())
            .field("unknowns", &self.n_total)
            .finish()
    }
}

impl StokesSystem {
    pub fn new(mesh: MeridianMesh, domain: Option<ApertureDomain>) -> Result<Arc<Self>> {
        let nv = mesh.num_vertices();
        let mut nodes = mesh.vertices.clone();
        let mut edge_node = std::collections::HashMap::with_capacity(3 * mesh.triangles.len() / 2 + 1);
        let mut elements = Vec::with_capacity(mesh.triangles.len());
        for t in &mesh.triangles {
            let mut en = [0usize; 3];
            for (k, (i, j)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
                let (a, b) = (t[i], t[j]);
                en[k] = *edge_node.entry((a.min(b), a.max(b))).or_insert_with(|| {
                    let (p, q) = (mesh.vertices[a], mesh.vertices[b]);
                    nodes.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
                    nodes.len() - 1
                });
            }
            let verts = [mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]];
            let area = super::mesh::signed_area(verts[0], verts[1], verts[2]);
            if area <= 0.0 {
                return Err(LinerError::Mesh("inverted triangle".into()));
            }
            let mut grad = [[0.0; 2]; 3];
            for i in 0..3 {
                let (j, k) = ((i + 1) % 3, (i + 2) % 3);
                grad[i] = [(verts[j][1] - verts[k][1]) / (2.0 * area), (verts[k][0] - verts[j][0]) / (2.0 * area)];
            }
            elements.push(Element { nodes: [t[0], t[1], t[2], en[0], en[1], en[2]], area, grad, verts });
        }

        let mut boundary = Vec::with_capacity(mesh.boundary.len());
        let mut fixed = vec![[false; 2]; nodes.len()];
        for e in &mesh.boundary {
            let m = *edge_node
                .get(&(e.a.min(e.b), e.a.max(e.b)))
                .ok_or_else(|| LinerError::Mesh("boundary edge not in any triangle".into()))?;
            let ids = [e.a, m, e.b];
            match e.tag {
                BoundaryTag::Wall => ids.iter().for_each(|&i| fixed[i] = [true, true]),
                BoundaryTag::Axis => ids.iter().for_each(|&i| fixed[i][0] = true),
                BoundaryTag::SpherePlus | BoundaryTag::SphereMinus => {}
            }
            boundary.push(BoundaryQuad { tag: e.tag, nodes: ids, pa: mesh.vertices[e.a], pb: mesh.vertices[e.b] });
        }
        let mut vel_dof = vec![[FIXED; 2]; nodes.len()];
        let mut n_vel = 0;
        for (i, f) in fixed.iter().enumerate() {
            for c in 0..2 {
                if !f[c] {
                    vel_dof[i][c] = n_vel;
                    n_vel += 1;
                }
            }
        }
        let n_total = n_vel + nv;

        let mut rows = Vec::new();
        let mut cols = Vec::new();
        let mut stiff = Vec::new();
        let mut mass = Vec::new();
        let mut coupling = Vec::new();
        let mut push = |r: usize, c: usize, k: f64, m: f64, b: f64| {
            rows.push(r);
            cols.push(c);
            stiff.push(k);
            mass.push(m);
            coupling.push(b);
        };
        for el in &elements {
            let mut kk = [[[0.0; 6]; 6]; 2];
            let mut mm = [[0.0; 6]; 6];
            let mut bb = [[[0.0; 6]; 3]; 2];
            for &(l0, l1, l2, w) in &TRI_RULE {
                let l = [l0, l1, l2];
                let [r, _] = el.point(l);
                let wq = w * el.area;
                let (n, dn) = el.p2(l);
                for i in 0..6 {
                    for j in 0..6 {
                        let gg = dn[i][0] * dn[j][0] + dn[i][1] * dn[j][1];
                        kk[1][i][j] += wq * r * gg;
                        kk[0][i][j] += wq * (r * gg + n[i] * n[j] / r);
                        mm[i][j] += wq * r * n[i] * n[j];
                    }
                    for k in 0..3 {
                        bb[0][k][i] -= wq * l[k] * (r * dn[i][0] + n[i]);
                        bb[1][k][i] -= wq * l[k] * r * dn[i][1];
                    }
                }
            }
            for c in 0..2 {
                for i in 0..6 {
                    let gi = vel_dof[el.nodes[i]][c];
                    if gi == FIXED {
                        continue;
                    }
                    for j in 0..6 {
                        let gj = vel_dof[el.nodes[j]][c];
                        if gj != FIXED {
                            push(gi, gj, kk[c][i][j], mm[i][j], 0.0);
                        }
                    }
                    for k in 0..3 {
                        let gp = n_vel + el.nodes[k];
                        let b = bb[c][k][i];
                        push(gp, gi, 0.0, 0.0, b);
                        push(gi, gp, 0.0, 0.0, b);
                    }
                }
            }
        }
        let pairs: Vec<Pair<usize, usize>> = rows.iter().zip(&cols).map(|(&row, &col)| Pair { row, col }).collect();
        let (pattern, order) = SymbolicSparseColMat::try_new_from_indices(n_total, n_total, &pairs)
            .map_err(|e| LinerError::Solver(format!("sparsity pattern: {e:?}")))?;

        let mut load_plus = vec![0.0; n_total];
        let mut load_minus = vec![0.0; n_total];
        for bq in &boundary {
            let load = match bq.tag {
                BoundaryTag::SpherePlus => &mut load_plus,
                BoundaryTag::SphereMinus => &mut load_minus,
                _ => continue,
            };
            let n = bq.normal();
            let len = bq.length();
            for (t, w) in edge_rule() {
                let r = (1.0 - t) * bq.pa[0] + t * bq.pb[0];
                let phi = edge_shape(t);
                for (k, &node) in bq.nodes.iter().enumerate() {
                    for c in 0..2 {
                        let g = vel_dof[node][c];
                        if g != FIXED {
                            // natural term moved to the right-hand side
                            load[g] -= w * len * r * phi[k] * n[c];
                        }
                    }
                }
            }
        }

        Ok(Arc::new(Self {
            mesh,
            domain,
            nodes,
            elements,
            boundary,
            vel_dof,
            n_vel,
            n_total,
            pattern,
            order,
            rows,
            cols,
            stiff,
            mass,
            coupling,
            load_plus,
            load_minus,
            symbolic_lu: OnceLock::new(),
        }))
    }

    pub fn mesh(&self) -> &MeridianMesh {
        &self.mesh
    }

    pub fn domain(&self) -> Option<&ApertureDomain> {
        self.domain.as_ref()
    }

    /// Total number of unknowns (free velocity components plus pressures).
    pub fn unknowns(&self) -> usize {
        self.n_total
    }

    pub fn p2_nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    fn matrix(&self, gas: &GasParameters, omega: f64) -> Result<SparseColMat<usize, Complex64>> {
        let mu = gas.dynamic_viscosity();
        let mass_coef = Complex64::new(0.0, -omega * gas.rho0);
        let values: Vec<Complex64> = (0..self.rows.len())
            .map(|i| Complex64::new(mu * self.stiff[i] + self.coupling[i], 0.0) + mass_coef * self.mass[i])
            .collect();
        SparseColMat::new_from_argsort(self.pattern.clone(), &self.order, &values)
            .map_err(|e| LinerError::Solver(format!("matrix assembly: {e:?}")))
    }

    fn symbolic(&self) -> Result<SymbolicLu<usize>> {
        self.symbolic_lu
            .get_or_init(|| SymbolicLu::try_new(self.pattern.as_ref()).map_err(|e| format!("{e:?}")))
            .clone()
            .map_err(|e| LinerError::Solver(format!("symbolic factorisation: {e}")))
    }

    /// Solves with the default pressure data p = +1/2 on SpherePlus and −1/2 on SphereMinus.
    pub fn solve(self: &Arc<Self>, gas: &GasParameters, omega: f64) -> Result<StokesSolution> {
        self.solve_with(gas, omega, Complex64::new(0.5, 0.0), Complex64::new(-0.5, 0.0), &SolverOptions::default())
    }

    pub fn solve_with(
        self: &Arc<Self>,
        gas: &GasParameters,
        omega: f64,
        p_plus: Complex64,
        p_minus: Complex64,
        opts: &SolverOptions,
    ) -> Result<StokesSolution> {
        gas.validate()?;
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(LinerError::invalid("angular frequency must be positive"));
        }
        let a = self.matrix(gas, omega)?;
        let lu = Lu::try_new_with_symbolic(self.symbolic()?, a.as_ref())
            .map_err(|e| LinerError::Solver(format!("numeric factorisation: {e:?}")))?;
        let rhs = Mat::<Complex64>::from_fn(self.n_total, 1, |i, _| p_plus * self.load_plus[i] + p_minus * self.load_minus[i]);
        let x = lu.solve(&rhs);
        if (0..self.n_total).any(|i| !x[(i, 0)].re.is_finite() || !x[(i, 0)].im.is_finite()) {
            return Err(LinerError::IllConditioned { condition: f64::INFINITY });
        }
        let condition = if opts.estimate_condition {
            let c = condition_estimate(&a, &lu, self.n_total);
            if !(c <= opts.condition_limit) {
                return Err(LinerError::IllConditioned { condition: c });
            }
            Some(c)
        } else {
            None
        };
        let mut velocity = vec![[Complex64::new(0.0, 0.0); 2]; self.nodes.len()];
        for (node, dofs) in self.vel_dof.iter().enumerate() {
            for c in 0..2 {
                if dofs[c] != FIXED {
                    velocity[node][c] = x[(dofs[c], 0)];
                }
            }
        }
        let pressure = (0..self.mesh.num_vertices()).map(|i| x[(self.n_vel + i, 0)]).collect();
        let unknowns = (0..self.n_total).map(|i| x[(i, 0)]).collect();
        Ok(StokesSolution {
            velocity,
            pressure,
            omega,
            gas: *gas,
            p_plus,
            p_minus,
            condition,
            unknowns,
            system: Arc::clone(self),
        })
    }
}

/// Hager–Higham estimate of ‖A‖₁‖A⁻¹‖₁.
fn condition_estimate(a: &SparseColMat<usize, Complex64>, lu: &Lu<usize, Complex64>, n: usize) -> f64 {
    let mut norm_a: f64 = 0.0;
    let ar = a.as_ref();
    for j in 0..n {
        let s: f64 = ar.val_of_col(j).iter().map(|v| v.norm()).sum();
        norm_a = norm_a.max(s);
    }
    let mut x = Mat::<Complex64>::from_fn(n, 1, |_, _| Complex64::new(1.0 / n as f64, 0.0));
    let mut est = 0.0;
    let mut last_j = usize::MAX;
    for iter in 0..5 {
        let y = lu.solve(&x);
        let new_est: f64 = (0..n).map(|i| y[(i, 0)].norm()).sum();
        if iter > 0 && new_est <= est {
            break;
        }
        est = new_est;
        let mut xi = Mat::<Complex64>::from_fn(n, 1, |i, _| {
            let v = y[(i, 0)];
            if v.norm() == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                v / v.norm()
            }
        });
        lu.solve_transpose_in_place_with_conj(Conj::Yes, xi.as_mut());
        let (j, zmax) = (0..n).map(|i| (i, xi[(i, 0)].norm())).fold((0, 0.0), |m, p| if p.1 > m.1 { p } else { m });
        let ztx: f64 = (0..n).map(|i| (xi[(i, 0)].conj() * x[(i, 0)]).re).sum();
        if zmax <= ztx || j == last_j {
            break;
        }
        last_j = j;
        x = Mat::<Complex64>::from_fn(n, 1, |i, _| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0));
    }
    norm_a * est
}

/// Discrete velocity and pressure fields at one frequency.
#[derive(Debug, Clone)]
pub struct StokesSolution {
    /// (v_r, v_z) at the P2 nodes [m/s].
    pub velocity: Vec<[Complex64; 2]>,
    /// Pressure at the mesh vertices [Pa].
    pub pressure: Vec<Complex64>,
    pub omega: f64,
    pub gas: GasParameters,
    pub p_plus: Complex64,
    pub p_minus: Complex64,
    /// 1-norm condition estimate, if requested.
    pub condition: Option<f64>,
    unknowns: Vec<Complex64>,
    system: Arc<StokesSystem>,
}

impl StokesSolution {
    pub fn system(&self) -> &Arc<StokesSystem> {
        &self.system
    }

    pub fn domain(&self) -> Option<&ApertureDomain> {
        self.system.domain()
    }

    /// Velocity at every P2 node lying on edges with the given tag.
    pub fn boundary_velocities(&self, tag: BoundaryTag) -> Vec<[Complex64; 2]> {
        let mut out = Vec::new();
        for bq in self.system.boundary.iter().filter(|b| b.tag == tag) {
            out.extend(bq.nodes.iter().map(|&n| self.velocity[n]));
        }
        out
    }

    /// Length-weighted mean pressure along the edges with the given tag.
    pub fn mean_pressure(&self, tag: BoundaryTag) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut len = 0.0;
        let verts = &self.system.mesh.vertices;
        for e in self.system.mesh.boundary.iter().filter(|e| e.tag == tag) {
            let l = (verts[e.b][0] - verts[e.a][0]).hypot(verts[e.b][1] - verts[e.a][1]);
            acc += 0.5 * l * (self.pressure[e.a] + self.pressure[e.b]);
            len += l;
        }
        acc / len
    }

    /// Evaluates the velocity at a barycentric point of element `el`.
    fn velocity_at(&self, el: &Element, n: &[f64; 6]) -> [Complex64; 2] {
        let mut v = [Complex64::new(0.0, 0.0); 2];
        for i in 0..6 {
            let vi = self.velocity[el.nodes[i]];
            v[0] += n[i] * vi[0];
            v[1] += n[i] * vi[1];
        }
        v
    }

    /// ‖v‖² = 2π∫|v|² r dA and ‖∇v‖² = 2π∫(|∇v_r|² + |v_r|²/r² + |∇v_z|²) r dA,
    /// evaluated by quadrature from the nodal fields.
    pub fn energy_norms(&self) -> (f64, f64) {
        let mut kin = 0.0;
        let mut grad = 0.0;
        for el in &self.system.elements {
            for &(l0, l1, l2, w) in &TRI_RULE {
                let l = [l0, l1, l2];
                let [r, _] = el.point(l);
                let (n, dn) = el.p2(l);
                let v = self.velocity_at(el, &n);
                let mut g = [[Complex64::new(0.0, 0.0); 2]; 2];
                for i in 0..6 {
                    let vi = self.velocity[el.nodes[i]];
                    for c in 0..2 {
                        g[c][0] += dn[i][0] * vi[c];
                        g[c][1] += dn[i][1] * vi[c];
                    }
                }
                let wq = 2.0 * PI * w * el.area * r;
                kin += wq * (v[0].norm_sqr() + v[1].norm_sqr());
                grad += wq
                    * (g[0][0].norm_sqr() + g[0][1].norm_sqr() + g[1][0].norm_sqr() + g[1][1].norm_sqr()
                        + v[0].norm_sqr() / (r * r));
            }
        }
        (kin, grad)
    }

    /// Relative residual of the discrete divergence constraint, ‖Bv‖₂ / ‖|B||v|‖₂.
    pub fn divergence_residual(&self) -> f64 {
        let s = &self.system;
        let nv = s.mesh.num_vertices();
        let mut res = vec![Complex64::new(0.0, 0.0); nv];
        let mut scale = vec![0.0; nv];
        for i in 0..s.rows.len() {
            let (r, c) = (s.rows[i], s.cols[i]);
            if r >= s.n_vel && c < s.n_vel {
                res[r - s.n_vel] += s.coupling[i] * self.unknowns[c];
                scale[r - s.n_vel] += (s.coupling[i] * self.unknowns[c].norm()).abs();
            }
        }
        let num: f64 = res.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let den: f64 = scale.iter().map(|z| z * z).sum::<f64>().sqrt();
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }

    /// Relative L² distance ‖v − v_ref‖ / ‖v_ref‖ with the axisymmetric weight.
    pub fn relative_l2_error(&self, reference: impl Fn(f64, f64) -> [Complex64; 2]) -> f64 {
        let mut err = 0.0;
        let mut norm = 0.0;
        for el in &self.system.elements {
            for &(l0, l1, l2, w) in &TRI_RULE {
                let l = [l0, l1, l2];
                let [r, z] = el.point(l);
                let (n, _) = el.p2(l);
                let v = self.velocity_at(el, &n);
                let v_ref = reference(r, z);
                let wq = w * el.area * r;
                err += wq * ((v[0] - v_ref[0]).norm_sqr() + (v[1] - v_ref[1]).norm_sqr());
                norm += wq * (v_ref[0].norm_sqr() + v_ref[1].norm_sqr());
            }
        }
        (err / norm).sqrt()
    }
}

/// Outward volume flux 2π∫ v·n r ds through the edges tagged `surface` [m³/s].
pub fn flux_through(sol: &StokesSolution, surface: BoundaryTag) -> Complex64 {
    let mut q = Complex64::new(0.0, 0.0);
    for bq in sol.system.boundary.iter().filter(|b| b.tag == surface) {
        let n = bq.normal();
        let len = bq.length();
        for (t, w) in edge_rule() {
            let r = (1.0 - t) * bq.pa[0] + t * bq.pb[0];
            let phi = edge_shape(t);
            let mut vn = Complex64::new(0.0, 0.0);
            for k in 0..3 {
                let v = sol.velocity[bq.nodes[k]];
                vn += phi[k] * (v[0] * n[0] + v[1] * n[1]);
            }
            q += w * len * r * vn;
        }
    }
    2.0 * PI * q
}

/// Single-hole Rayleigh conductivity K_R = iωρ₀(Q₊ − Q₋) / (2(p₊ − p₋)) [m].
pub fn rayleigh_single_hole(sol: &StokesSolution, gas: &GasParameters) -> Complex64 {
    let q_plus = flux_through(sol, BoundaryTag::SpherePlus);
    let q_minus = flux_through(sol, BoundaryTag::SphereMinus);
    let jump = sol.p_plus - sol.p_minus;
    Complex64::new(0.0, sol.omega * gas.rho0) * (q_plus - q_minus) / (2.0 * jump)
}

/// Meshes nothing: solves the aperture problem on `mesh` with ±1/2 Pa data.
pub fn solve_aperture(mesh: &MeridianMesh, gas: &GasParameters, omega: f64) -> Result<StokesSolution> {
    StokesSystem::new(mesh.clone(), None)?.solve(gas, omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aperture::mesh::{build_mesh, tube_mesh, MeshOptions};
    use crate::bessel::j0;

    fn gas() -> GasParameters {
        GasParameters::default()
    }

    #[test]
    fn quadrature_weights_sum_to_one() {
        let s: f64 = TRI_RULE.iter().map(|q| q.3).sum();
        assert!((s - 1.0).abs() < 1e-14);
        for q in TRI_RULE {
            assert!((q.0 + q.1 + q.2 - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn womersley_profile() {
        let g = gas();
        let omega = 2.0 * PI * 200.0;
        let (a, len) = (0.5e-3, 1e-3);
        let mesh = tube_mesh(a, len, &MeshOptions::new(0.05e-3, 3, g.nu), omega).unwrap();
        let sol = StokesSystem::new(mesh, None).unwrap().solve(&g, omega).unwrap();
        let k = (Complex64::new(0.0, omega / g.nu)).sqrt();
        // p = −1/2 at z = 0, +1/2 at z = len
        let amp = Complex64::new(1.0 / len, 0.0) / Complex64::new(0.0, omega * g.rho0);
        let exact = |r: f64, _z: f64| {
            let vz = amp * (1.0 - j0(k * r) / j0(k * a));
            [Complex64::new(0.0, 0.0), vz]
        };
        let err = sol.relative_l2_error(exact);
        assert!(err < 0.01, "relative L2 error {err}");
    }

    #[test]
    fn linearity_and_flux_balance() {
        let g = gas();
        let omega = 2.0 * PI * 1000.0;
        let dom = ApertureDomain::new(1e-3, 1e-3, 6.0).unwrap();
        let mesh = build_mesh(&dom, &MeshOptions::new(0.2e-3, 2, g.nu), omega).unwrap();
        let sys = StokesSystem::new(mesh, Some(dom)).unwrap();
        let opts = SolverOptions::default();
        let half = Complex64::new(0.5, 0.0);
        let s1 = sys.solve_with(&g, omega, half, -half, &opts).unwrap();
        let s2 = sys.solve_with(&g, omega, -half, half, &opts).unwrap();
        for (a, b) in s1.velocity.iter().zip(&s2.velocity) {
            for c in 0..2 {
                assert!((a[c] + b[c]).norm() <= 1e-10 * a[c].norm().max(1e-30));
            }
        }
        let qp = flux_through(&s1, BoundaryTag::SpherePlus);
        let qm = flux_through(&s1, BoundaryTag::SphereMinus);
        assert!((qp + qm).norm() <= 1e-6 * (qp - qm).norm());
        assert!(s1.divergence_residual() < 1e-8);
        for v in s1.boundary_velocities(BoundaryTag::Wall) {
            assert_eq!(v[0].norm() + v[1].norm(), 0.0);
        }
        for v in s1.boundary_velocities(BoundaryTag::Axis) {
            assert_eq!(v[0].norm(), 0.0);
        }
        let lambda = Complex64::new(0.3, -2.0);
        let s3 = sys.solve_with(&g, omega, lambda * half, -lambda * half, &opts).unwrap();
        let k1 = rayleigh_single_hole(&s1, &g);
        let k3 = rayleigh_single_hole(&s3, &g);
        assert!((k1 - k3).norm() < 1e-10 * k1.norm());
        // zero data gives the trivial solution
        let zero = Complex64::new(0.0, 0.0);
        let s0 = sys.solve_with(&g, omega, zero, zero, &opts).unwrap();
        assert_eq!(flux_through(&s0, BoundaryTag::SpherePlus).norm(), 0.0);
    }

    #[test]
    fn energy_identity_and_signs() {
        let g = gas();
        let omega = 2.0 * PI * 1000.0;
        let dom = ApertureDomain::new(1e-3, 1e-3, 6.0).unwrap();
        let mesh = build_mesh(&dom, &MeshOptions::new(0.1e-3, 3, g.nu), omega).unwrap();
        let sol = StokesSystem::new(mesh, Some(dom)).unwrap().solve(&g, omega).unwrap();
        let k = rayleigh_single_hole(&sol, &g);
        assert!(k.re > 0.0 && k.im < 0.0, "{k}");
        let (kin, grad) = sol.energy_norms();
        let lhs = Complex64::new(g.nu * grad, omega * kin);
        let rhs = -k / Complex64::new(0.0, omega * g.rho0 * g.rho0);
        assert!((lhs - rhs).norm() < 0.02 * rhs.norm(), "{lhs} vs {rhs}");
    }
}
