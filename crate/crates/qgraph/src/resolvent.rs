//! Explicit resolvent by variation of parameters, boundary projections and
//! the boundary-data solution formula built on them.

use crate::error::{Error, Result};
use crate::evans::{c_matrix, FundamentalFrame, GraphSolutions};
use crate::graph::{dirichlet_trace, gamma_trace, neumann_trace, BoundaryConditions, BoundaryData, StarGraph};
use crate::linalg::{self, CMat, CVec, C64, I};
use crate::quadrature::{cell_bounds, integrate, integrate_cells};

/// Nodes of the per-edge sampling grid.
pub const GRID_POINTS: usize = 513;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// A right-hand side `v` evaluated edge by edge.
pub trait Forcing: Sync {
    fn eval(&self, edge: usize, x: f64) -> C64;
}

impl<F: Fn(usize, f64) -> C64 + Sync> Forcing for F {
    fn eval(&self, edge: usize, x: f64) -> C64 {
        self(edge, x)
    }
}

/// Values on a uniform grid over `[0, length]`, linearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    pub length: f64,
    pub values: Vec<C64>,
}

impl SampledFunction {
    pub fn from_fn(length: f64, points: usize, f: impl Fn(f64) -> C64) -> Self {
        let values = (0..points).map(|k| f(length * k as f64 / (points - 1) as f64)).collect();
        SampledFunction { length, values }
    }

    pub fn nodes(&self) -> Vec<f64> {
        let m = self.values.len();
        (0..m).map(|k| self.length * k as f64 / (m - 1) as f64).collect()
    }

    pub fn eval(&self, x: f64) -> C64 {
        let m = self.values.len();
        let t = (x / self.length).clamp(0.0, 1.0) * (m - 1) as f64;
        let k = (t.floor() as usize).min(m - 2);
        let w = t - k as f64;
        self.values[k] * (1.0 - w) + self.values[k + 1] * w
    }
}

/// One sampled function per edge.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphFunction {
    pub edges: Vec<SampledFunction>,
}

impl GraphFunction {
    pub fn from_fn(g: &StarGraph, f: impl Fn(usize, f64) -> C64) -> Self {
        let edges = g
            .edges
            .iter()
            .enumerate()
            .map(|(j, e)| SampledFunction::from_fn(e.length, GRID_POINTS, |x| f(j, x)))
            .collect();
        GraphFunction { edges }
    }

    pub fn zero(g: &StarGraph) -> Self {
        Self::from_fn(g, |_, _| ZERO)
    }

    /// Sup-norm distance over the shared nodes.
    pub fn sup_distance(&self, other: &GraphFunction) -> f64 {
        self.edges
            .iter()
            .zip(&other.edges)
            .flat_map(|(a, b)| a.values.iter().zip(&b.values).map(|(x, y)| (x - y).norm()))
            .fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.edges.iter().flat_map(|e| e.values.iter().map(|z| z.norm())).fold(0.0, f64::max)
    }
}

impl Forcing for GraphFunction {
    fn eval(&self, edge: usize, x: f64) -> C64 {
        self.edges[edge].eval(x)
    }
}

/// Per edge, the `Y` column paired with the edge's `Z` solution.
#[derive(Debug, Clone, PartialEq)]
pub struct TauSelection {
    pub tau: Vec<usize>,
    /// `D_j = W(y_{τ_j, j}, z_{j,j})`.
    pub wronskian: Vec<C64>,
}

/// Picks the `Y` column with the largest Wronskian against `z_{j,j}`, edge by edge.
pub fn select_tau(frame: &FundamentalFrame) -> Result<TauSelection> {
    let n = frame.n();
    let mut tau = Vec::with_capacity(n);
    let mut wronskian = Vec::with_capacity(n);
    for j in 0..n {
        let (z, zp) = (frame.z[(j, j)], frame.zp[(j, j)]);
        let z_norm = z.norm().hypot(zp.norm());
        let mut best = (0, ZERO, 0.0);
        let mut y_norm: f64 = 0.0;
        for i in 0..n {
            let (y, yp) = (frame.y[(j, i)], frame.yp[(j, i)]);
            y_norm = y_norm.max(y.norm().hypot(yp.norm()));
            let w = y * zp - yp * z;
            if w.norm() > best.2 {
                best = (i, w, w.norm());
            }
        }
        if !(best.2 > 1e-10 * y_norm * z_norm) {
            return Err(Error::NoIndependentPartner { edge: j });
        }
        tau.push(best.0);
        wronskian.push(best.1);
    }
    Ok(TauSelection { tau, wronskian })
}

/// The resolvent `(H - λ)⁻¹` of one problem at one λ.
#[derive(Debug, Clone)]
pub struct Resolvent {
    pub lambda: C64,
    graph: StarGraph,
    bc: BoundaryConditions,
    sols: GraphSolutions,
    tau: TauSelection,
    /// `α₁ Z(0) + α₂ Z'(0)`.
    c: CMat,
    /// Column `j`: `α₁[:, j] y_τ(0) + α₂[:, j] y_τ'(0)`.
    w: CMat,
}

impl Resolvent {
    pub fn new(g: &StarGraph, bc: &BoundaryConditions, lambda: C64) -> Result<Self> {
        let n = g.n();
        let sols = GraphSolutions::new(g, bc, lambda)?;
        let frame = sols.frame(&vec![0.0; n])?;
        let tau = select_tau(&frame).map_err(|_| Error::OnSpectrum { lambda: lambda.re })?;
        let c = c_matrix(&frame, bc);
        if linalg::singular_ratio(&c) < 1e-13 {
            return Err(Error::OnSpectrum { lambda: lambda.re });
        }
        let mut w = CMat::zeros(n, n);
        for j in 0..n {
            let (y, yp) = (frame.y[(j, tau.tau[j])], frame.yp[(j, tau.tau[j])]);
            for r in 0..n {
                w[(r, j)] = bc.alpha1[(r, j)] * y + bc.alpha2[(r, j)] * yp;
            }
        }
        Ok(Resolvent { lambda, graph: g.clone(), bc: bc.clone(), sols, tau, c, w })
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn tau(&self) -> &TauSelection {
        &self.tau
    }

    pub fn solutions(&self) -> &GraphSolutions {
        &self.sols
    }

    fn bounds(&self, j: usize) -> Vec<f64> {
        let e = &self.graph.edges[j];
        cell_bounds(e.length, GRID_POINTS, &e.potential.knots())
    }

    /// `R_λ v`.
    pub fn apply<'a>(&self, v: &'a dyn Forcing) -> Result<ResolventApplication<'a>> {
        let n = self.n();
        let mut integrals = Vec::with_capacity(n);
        for j in 0..n {
            let bounds = self.bounds(j);
            let tj = self.tau.tau[j];
            let cells: Vec<(C64, C64)> = bounds
                .windows(2)
                .map(|w| {
                    let lo = integrate(|x| v.eval(j, x) * self.sols.y(tj, j, x).0, w[0], w[1]);
                    let hi = integrate(|x| v.eval(j, x) * self.sols.z(j, x).0, w[0], w[1]);
                    (lo, hi)
                })
                .collect();
            let mut below = vec![ZERO; bounds.len()];
            let mut above = vec![ZERO; bounds.len()];
            for k in 0..cells.len() {
                below[k + 1] = below[k] + cells[k].0;
            }
            for k in (0..cells.len()).rev() {
                above[k] = above[k + 1] + cells[k].1;
            }
            if !below.iter().chain(&above).all(|z| z.is_finite()) {
                return Err(Error::QuadratureFailure(format!("non-finite integral on edge {j}")));
            }
            integrals.push(EdgeIntegrals { bounds, below, above });
        }
        let rhs = CVec::from_fn(n, |r, _| {
            (0..n).map(|j| self.w[(r, j)] * integrals[j].above[0] / self.tau.wronskian[j]).sum()
        });
        let lu = linalg::solve(&self.c, &rhs).ok_or(Error::OnSpectrum { lambda: self.lambda.re })?;
        let (z_coeffs, cramer_lu_discrepancy) = if n <= 6 {
            let cr = linalg::cramer_solve(&self.c, &rhs).ok_or(Error::OnSpectrum { lambda: self.lambda.re })?;
            let d = linalg::max_abs_vec(&(&cr - &lu)) / linalg::max_abs_vec(&lu).max(f64::MIN_POSITIVE);
            (if n <= 3 { cr } else { lu }, if rhs.iter().all(|z| *z == ZERO) { 0.0 } else { d })
        } else {
            (lu, 0.0)
        };
        let mut coefficients = CVec::zeros(2 * n);
        coefficients.rows_mut(n, n).copy_from(&z_coeffs);
        Ok(ResolventApplication { resolvent: self.clone(), forcing: v, integrals, coefficients, cramer_lu_discrepancy })
    }
}

#[derive(Debug, Clone)]
struct EdgeIntegrals {
    bounds: Vec<f64>,
    /// `∫_0^{b_k} v y_τ`.
    below: Vec<C64>,
    /// `∫_{b_k}^ℓ v z`.
    above: Vec<C64>,
}

/// `R_λ v` in evaluable form.
pub struct ResolventApplication<'a> {
    resolvent: Resolvent,
    forcing: &'a dyn Forcing,
    integrals: Vec<EdgeIntegrals>,
    /// Frame coefficients; the `Y` half is always zero.
    pub coefficients: CVec,
    /// Relative gap between the Cramer and LU coefficient solves.
    pub cramer_lu_discrepancy: f64,
}

impl std::fmt::Debug for ResolventApplication<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ResolventApplication")
            .field("lambda", &self.resolvent.lambda)
            .field("coefficients", &self.coefficients)
            .field("cramer_lu_discrepancy", &self.cramer_lu_discrepancy)
            .finish()
    }
}

impl ResolventApplication<'_> {
    pub fn lambda(&self) -> C64 {
        self.resolvent.lambda
    }

    /// `(∫_x^ℓ v z, ∫_0^x v y_τ)` on edge `j`.
    fn partial_integrals(&self, j: usize, x: f64) -> (C64, C64) {
        let it = &self.integrals[j];
        let k = it.bounds.partition_point(|b| *b <= x).saturating_sub(1).min(it.bounds.len() - 1);
        let a = it.bounds[k];
        if x == a {
            return (it.above[k], it.below[k]);
        }
        let sols = &self.resolvent.sols;
        let tj = self.resolvent.tau.tau[j];
        let lo = integrate(|t| self.forcing.eval(j, t) * sols.y(tj, j, t).0, a, x);
        let hi = integrate(|t| self.forcing.eval(j, t) * sols.z(j, t).0, a, x);
        (it.above[k] - hi, it.below[k] + lo)
    }

    /// Variation-of-parameters particular solution and its derivative.
    pub fn particular(&self, j: usize, x: f64) -> (C64, C64) {
        let r = &self.resolvent;
        let (y, yp) = r.sols.y(r.tau.tau[j], j, x);
        let (z, zp) = r.sols.z(j, x);
        let (i1, i2) = self.partial_integrals(j, x);
        let d = r.tau.wronskian[j];
        (-(y * i1 + z * i2) / d, -(yp * i1 + zp * i2) / d)
    }

    /// `(u, u')` of `u = R_λ v` at `x` on edge `j`.
    pub fn value(&self, j: usize, x: f64) -> (C64, C64) {
        let n = self.resolvent.n();
        let (z, zp) = self.resolvent.sols.z(j, x);
        let (p, pp) = self.particular(j, x);
        let c = self.coefficients[n + j];
        (c * z + p, c * zp + pp)
    }

    /// `u''` from the equation, valid away from potential jumps.
    pub fn second_derivative(&self, j: usize, x: f64) -> C64 {
        let v = self.resolvent.graph.edges[j].potential.value_at(x);
        (v - self.resolvent.lambda) * self.value(j, x).0 - self.forcing.eval(j, x)
    }

    pub fn boundary_data(&self) -> BoundaryData {
        let n = self.resolvent.n();
        let mut bd = BoundaryData::zeros(n);
        for j in 0..n {
            let (u0, du0) = self.value(j, 0.0);
            let (ul, dul) = self.value(j, self.resolvent.graph.edges[j].length);
            bd.values_at_0[j] = u0;
            bd.derivs_at_0[j] = du0;
            bd.values_at_ell[j] = ul;
            bd.derivs_at_ell[j] = dul;
        }
        bd
    }

    /// `max |γ_Γ u|`.
    pub fn trace_residual(&self) -> f64 {
        let t = gamma_trace(&self.resolvent.bc, &self.boundary_data()).expect("dimensions match");
        linalg::max_abs_vec(&t)
    }

    /// `sup |-u'' + (V - λ) u - v|` at the grid cell midpoints, with `u''` taken
    /// as a central difference of the exact derivative. Relative to
    /// `1 + sup |u| + sup |u'|`, since the difference loses digits in proportion
    /// to `|u'|` and the solution is large next to an eigenvalue.
    pub fn ode_residual(&self) -> f64 {
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        let mut size: f64 = 1.0;
        for (j, e) in self.resolvent.graph.edges.iter().enumerate() {
            let knots = e.potential.knots();
            let step = e.length / (GRID_POINTS - 1) as f64;
            let mh = h * e.length.max(1.0);
            for k in 0..GRID_POINTS - 1 {
                let x = (k as f64 + 0.5) * step;
                if knots.iter().any(|s| (s - x).abs() < 4.0 * mh) {
                    continue;
                }
                let upp = (self.value(j, x + mh).1 - self.value(j, x - mh).1) / (2.0 * mh);
                let v = e.potential.value_at(x);
                let (u, du) = self.value(j, x);
                let r = -upp + (v - self.resolvent.lambda) * u - self.forcing.eval(j, x);
                worst = worst.max(r.norm());
                size = size.max(1.0 + u.norm() + du.norm());
            }
        }
        worst / size
    }

    /// The forcing sampled on the output grid.
    pub fn input(&self) -> GraphFunction {
        GraphFunction::from_fn(&self.resolvent.graph, |j, x| self.forcing.eval(j, x))
    }

    pub fn particular_sampled(&self) -> GraphFunction {
        GraphFunction::from_fn(&self.resolvent.graph, |j, x| self.particular(j, x).0)
    }

    pub fn output(&self) -> GraphFunction {
        GraphFunction::from_fn(&self.resolvent.graph, |j, x| self.value(j, x).0)
    }

    pub fn output_derivative(&self) -> GraphFunction {
        GraphFunction::from_fn(&self.resolvent.graph, |j, x| self.value(j, x).1)
    }
}

/// `R_λ v` in one call.
pub fn resolvent_apply<'a>(
    g: &StarGraph,
    bc: &BoundaryConditions,
    lambda: C64,
    v: &'a dyn Forcing,
) -> Result<ResolventApplication<'a>> {
    Resolvent::new(g, bc, lambda)?.apply(v)
}

/// Particular solution at one point, from a frame and τ choice.
pub fn particular_solution(
    g: &StarGraph,
    bc: &BoundaryConditions,
    lambda: C64,
    v: &dyn Forcing,
    edge: usize,
    x: f64,
) -> Result<C64> {
    Ok(resolvent_apply(g, bc, lambda, v)?.particular(edge, x).0)
}

/// Orthogonal decomposition of boundary data attached to a set of conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSet {
    pub delta1: CMat,
    pub delta2: CMat,
    /// `δ₁ - iδ₂`.
    pub combination: CMat,
    pub combination_inv: CMat,
    pub unitary: CMat,
    pub p_d: CMat,
    pub p_n: CMat,
    pub p_r: CMat,
    /// Orthonormal basis of `ran P_R` as columns.
    pub robin_basis: CMat,
    /// The Robin operator in that basis.
    pub robin_operator: CMat,
}

/// Residuals of the structural identities of a [`ProjectionSet`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionChecks {
    pub unitarity: f64,
    pub partition: f64,
    pub dirichlet_annihilation: f64,
    pub neumann_annihilation: f64,
    /// Relative to `1 + max |Λ|`.
    pub robin_hermitian: f64,
    pub idempotence: f64,
}

impl ProjectionChecks {
    pub fn max(&self) -> f64 {
        [
            self.unitarity,
            self.partition,
            self.dirichlet_annihilation,
            self.neumann_annihilation,
            self.robin_hermitian,
            self.idempotence,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Residuals of the three trace relations of a function satisfying the conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRelations {
    pub dirichlet: f64,
    pub neumann: f64,
    pub robin: f64,
}

impl TraceRelations {
    pub fn max(&self) -> f64 {
        self.dirichlet.max(self.neumann).max(self.robin)
    }
}

/// `diag(I, -I)` of size `2n`.
pub fn sign_matrix(n: usize) -> CMat {
    let mut s = linalg::identity(2 * n);
    for k in n..2 * n {
        s[(k, k)] = -s[(k, k)];
    }
    s
}

impl ProjectionSet {
    pub fn n(&self) -> usize {
        self.delta1.nrows() / 2
    }

    pub fn rank_d(&self) -> usize {
        rank_of_projector(&self.p_d)
    }

    pub fn rank_n(&self) -> usize {
        rank_of_projector(&self.p_n)
    }

    pub fn rank_r(&self) -> usize {
        self.robin_basis.ncols()
    }

    /// `M · diag(I, -I)`.
    pub fn tilde(&self, m: &CMat) -> CMat {
        m * sign_matrix(self.n())
    }

    /// The Robin operator lifted to `C^{2n}` (zero off `ran P_R`).
    pub fn robin_full(&self) -> CMat {
        let q = &self.robin_basis;
        q * &self.robin_operator * q.adjoint()
    }

    /// `(U + I)` restricted to `ran P_R`, inverted, and lifted.
    pub fn cayley_inverse_full(&self) -> CMat {
        let q = &self.robin_basis;
        if q.ncols() == 0 {
            return CMat::zeros(2 * self.n(), 2 * self.n());
        }
        let m = q.adjoint() * (&self.unitary + linalg::identity(2 * self.n())) * q;
        let inv = m.try_inverse().expect("checked when built");
        q * inv * q.adjoint()
    }

    pub fn checks(&self) -> ProjectionChecks {
        let dim = 2 * self.n();
        let id = linalg::identity(dim);
        let u = &self.unitary;
        let lam = &self.robin_operator;
        let idem = [&self.p_d, &self.p_n, &self.p_r]
            .into_iter()
            .map(|p| linalg::max_abs(&(p * p - p)).max(linalg::max_abs(&(p.adjoint() - p))))
            .fold(0.0, f64::max)
            .max(linalg::max_abs(&(&self.p_r * &self.robin_basis - &self.robin_basis)));
        ProjectionChecks {
            unitarity: linalg::max_abs(&(u.adjoint() * u - &id)),
            partition: linalg::max_abs(&(&self.p_d + &self.p_n + &self.p_r - &id)),
            dirichlet_annihilation: linalg::max_abs(&((u + &id) * &self.p_d)),
            neumann_annihilation: linalg::max_abs(&((u - &id) * &self.p_n)),
            robin_hermitian: if lam.ncols() == 0 {
                0.0
            } else {
                linalg::max_abs(&(lam.adjoint() - lam)) / (1.0 + linalg::max_abs(lam))
            },
            idempotence: idem,
        }
    }

    /// Trace relations for boundary data of a function with zero Γ-trace.
    ///
    /// Derivatives enter unsigned, as in the Γ-trace itself.
    pub fn trace_relations(&self, bd: &BoundaryData) -> TraceRelations {
        let b = dirichlet_trace(bd);
        let bp = &sign_matrix(self.n()) * neumann_trace(bd);
        let scale = linalg::max_abs_vec(&b).max(linalg::max_abs_vec(&bp)).max(1.0);
        TraceRelations {
            dirichlet: linalg::max_abs_vec(&(&self.p_d * &b)) / scale,
            neumann: linalg::max_abs_vec(&(&self.p_n * &bp)) / scale,
            robin: linalg::max_abs_vec(&(&self.p_r * &bp - self.robin_full() * &self.p_r * &b)) / scale,
        }
    }
}

/// Range of an orthogonal projector; its singular values are 0 or 1.
/// Orthonormal basis of the range of a Hermitian projector: pivoted
/// Gram–Schmidt on its columns, stopping at the rank given by the trace.
fn projector_range(p: &CMat) -> CMat {
    let rank = rank_of_projector(p);
    let mut rest: Vec<CVec> = (0..p.ncols()).map(|j| p.column(j).into_owned()).collect();
    let mut basis = CMat::zeros(p.nrows(), rank);
    for k in 0..rank {
        let pick = (0..rest.len()).max_by(|&a, &b| rest[a].norm().total_cmp(&rest[b].norm())).expect("columns left");
        let q = rest.swap_remove(pick).normalize();
        for v in rest.iter_mut() {
            for _ in 0..2 {
                let coeff = q.dotc(v);
                *v -= &q * coeff;
            }
        }
        basis.set_column(k, &q);
    }
    basis
}

fn rank_of_projector(p: &CMat) -> usize {
    p.trace().re.round() as usize
}

/// Builds `U`, the Dirichlet/Neumann/Robin projections and the Robin operator.
pub fn build_projections(bc: &BoundaryConditions) -> Result<ProjectionSet> {
    const TOL: f64 = 1e-10;
    let n = bc.n();
    let dim = 2 * n;
    let delta1 = bc.delta1();
    let delta2 = bc.delta2();
    let combination = &delta1 - &delta2 * I;
    if linalg::singular_ratio(&combination) < 1e-12 {
        return Err(Error::SingularDeltaCombination);
    }
    let combination_inv = combination.clone().try_inverse().ok_or(Error::SingularDeltaCombination)?;
    let unitary = -(&combination_inv * (&delta1 + &delta2 * I));
    let p_d = linalg::projector(&linalg::kernel_basis(&delta2, TOL));
    let p_n = linalg::projector(&linalg::kernel_basis(&delta1, TOL));
    let p_r = linalg::identity(dim) - &p_d - &p_n;
    let robin_basis = projector_range(&p_r);
    let r = robin_basis.ncols();
    let robin_operator = if r == 0 {
        CMat::zeros(0, 0)
    } else {
        let qa = robin_basis.adjoint();
        let plus = &qa * (&unitary + linalg::identity(dim)) * &robin_basis;
        let minus = &qa * (&unitary - linalg::identity(dim)) * &robin_basis;
        let inv = plus.try_inverse().ok_or(Error::SingularDeltaCombination)?;
        -(inv * minus) * I
    };
    Ok(ProjectionSet { delta1, delta2, combination, combination_inv, unitary, p_d, p_n, p_r, robin_basis, robin_operator })
}

/// Vectors pairing with resolvent traces in the boundary-data formula.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjustmentVectors {
    pub l: CVec,
    pub m: CVec,
    pub n: CVec,
    /// Gap between the two constructions of `m`.
    pub robin_gap: f64,
}

/// Adjustment vectors for boundary data `f` (a unit vector in the usual use).
pub fn adjustment_vectors(p: &ProjectionSet, f: &CVec) -> AdjustmentVectors {
    let g = &p.combination_inv * f;
    let l = p.tilde(&p.p_n) * &g * (-I);
    let robin_part = p.tilde(&p.p_r) * &g;
    let m = p.cayley_inverse_full() * &robin_part * (-2.0 * I);
    let n = -(&p.p_d * &g);
    let q = &p.robin_basis;
    let robin_gap = if q.ncols() == 0 {
        linalg::max_abs_vec(&m)
    } else {
        let dq = &p.delta2 * q;
        let alt = q * linalg::pinv(&dq, 1e-12) * &p.combination * &robin_part;
        linalg::max_abs_vec(&(alt - &m))
    };
    AdjustmentVectors { l, m, n, robin_gap }
}

/// `⟨a, b⟩ = Σ a_k conj(b_k)`.
fn inner(a: &CVec, b: &CVec) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y.conj()).sum()
}

/// Both sides of the boundary inner-product identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerProductCheck {
    pub direct: C64,
    pub boundary: C64,
}

impl InnerProductCheck {
    pub fn residual(&self) -> f64 {
        let scale = self.direct.norm().max(self.boundary.norm());
        if scale == 0.0 {
            0.0
        } else {
            (self.direct - self.boundary).norm() / scale
        }
    }
}

/// `(u_Γ, v)` computed by quadrature and from boundary traces of `R_{λ̄} v`,
/// where `u_Γ` solves the homogeneous equation with Γ-trace `f`.
pub fn inner_product_check(
    g: &StarGraph,
    bc: &BoundaryConditions,
    lambda: C64,
    f: &CVec,
    v: &dyn Forcing,
) -> Result<InnerProductCheck> {
    let sols = GraphSolutions::new(g, bc, lambda)?;
    let coeffs = sols.solve_trace(bc, f)?;
    let mut direct = ZERO;
    for (j, e) in g.edges.iter().enumerate() {
        let bounds = cell_bounds(e.length, GRID_POINTS, &e.potential.knots());
        direct += integrate_cells(|x| sols.combine(&coeffs, j, x).0 * v.eval(j, x).conj(), &bounds);
    }
    let p = build_projections(bc)?;
    let adj = adjustment_vectors(&p, f);
    let app = resolvent_apply(g, bc, lambda.conj(), v)?;
    let bd = app.boundary_data();
    let gd = dirichlet_trace(&bd);
    let gn = neumann_trace(&bd);
    let boundary = inner(&(&adj.l + &adj.m), &gd) + inner(&adj.n, &gn);
    Ok(InnerProductCheck { direct, boundary })
}

/// The solution with Γ-trace `e_i`, by the boundary-data formula and directly.
#[derive(Debug, Clone, PartialEq)]
pub struct UGamma {
    pub formula: GraphFunction,
    pub formula_derivative: GraphFunction,
    pub direct: GraphFunction,
    pub direct_derivative: GraphFunction,
}

impl UGamma {
    /// Sup-norm gap between the two value paths.
    pub fn discrepancy(&self) -> f64 {
        self.formula.sup_distance(&self.direct)
    }

    pub fn derivative_discrepancy(&self) -> f64 {
        self.formula_derivative.sup_distance(&self.direct_derivative)
    }
}

/// Traces of the kernel of `R_λ` with a point source on one edge.
struct KernelTraces<'s> {
    sols: &'s GraphSolutions,
    tau: TauSelection,
    /// Column `j`: `C⁻¹ w_j`.
    response: CMat,
    ends: Vec<[(C64, C64); 2]>,
}

impl<'s> KernelTraces<'s> {
    fn new(sols: &'s GraphSolutions, bc: &BoundaryConditions) -> Result<Self> {
        let n = sols.n();
        let frame = sols.frame(&vec![0.0; n])?;
        let tau = select_tau(&frame).map_err(|_| Error::OnSpectrum { lambda: sols.lambda.re })?;
        let c = c_matrix(&frame, bc);
        let mut response = CMat::zeros(n, n);
        for j in 0..n {
            let (y, yp) = (frame.y[(j, tau.tau[j])], frame.yp[(j, tau.tau[j])]);
            let w = CVec::from_fn(n, |r, _| bc.alpha1[(r, j)] * y + bc.alpha2[(r, j)] * yp);
            let a = if n <= 3 { linalg::cramer_solve(&c, &w) } else { linalg::solve(&c, &w) };
            response.set_column(j, &a.ok_or(Error::OnSpectrum { lambda: sols.lambda.re })?);
        }
        let ends = (0..n).map(|k| [sols.z(k, 0.0), sols.z(k, sols.lengths[k])]).collect();
        Ok(KernelTraces { sols, tau, response, ends })
    }

    /// Dirichlet and outward Neumann traces of the kernel at source point `t`
    /// on edge `j`, and their `t`-derivatives.
    fn at(&self, j: usize, t: f64) -> [(CVec, CVec); 2] {
        let n = self.sols.n();
        let d = self.tau.wronskian[j];
        let (yt, ypt) = self.sols.y(self.tau.tau[j], j, t);
        let (zt, zpt) = self.sols.z(j, t);
        let (y0, yp0) = self.sols.y(self.tau.tau[j], j, 0.0);
        let [(z0j, _), (zlj, zplj)] = self.ends[j];
        let _ = z0j;
        let build = |zs: C64, ys: C64| {
            let mut gd = CVec::zeros(2 * n);
            let mut gn = CVec::zeros(2 * n);
            for k in 0..n {
                let a = self.response[(k, j)] * zs / d;
                let [(z0, zp0), (zl, zpl)] = self.ends[k];
                gd[k] = a * zl;
                gd[n + k] = a * z0;
                gn[k] = a * zpl;
                gn[n + k] = -(a * zp0);
            }
            gd[j] -= zlj * ys / d;
            gd[n + j] -= y0 * zs / d;
            gn[j] -= zplj * ys / d;
            gn[n + j] += yp0 * zs / d;
            (gd, gn)
        };
        [build(zt, yt), build(zpt, ypt)]
    }
}

/// Solution of the homogeneous problem with Γ-trace `e_i`, two ways.
pub fn u_gamma(g: &StarGraph, bc: &BoundaryConditions, lambda: C64, i: usize) -> Result<UGamma> {
    let n = g.n();
    if i >= 2 * n {
        return Err(Error::DimensionMismatch { expected: 2 * n, found: i });
    }
    let e = linalg::unit(2 * n, i);
    let sols = GraphSolutions::new(g, bc, lambda)?;
    let coeffs = sols.solve_trace(bc, &e)?;
    let direct = GraphFunction::from_fn(g, |j, x| sols.combine(&coeffs, j, x).0);
    let direct_derivative = GraphFunction::from_fn(g, |j, x| sols.combine(&coeffs, j, x).1);

    let p = build_projections(bc)?;
    let adj = adjustment_vectors(&p, &e);
    let lm = &adj.l + &adj.m;
    let conj_bc = bc.conj();
    let conj_sols = GraphSolutions::new(g, &conj_bc, lambda)?;
    let kernel = KernelTraces::new(&conj_sols, &conj_bc)?;
    let pair = |a: &CVec, b: &CVec| -> C64 { a.iter().zip(b.iter()).map(|(x, y)| x * y).sum() };
    let mut formula = GraphFunction::zero(g);
    let mut formula_derivative = GraphFunction::zero(g);
    for j in 0..n {
        for (k, t) in formula.edges[j].nodes().into_iter().enumerate() {
            let [(gd, gn), (dgd, dgn)] = kernel.at(j, t);
            formula.edges[j].values[k] = pair(&lm, &gd) + pair(&adj.n, &gn);
            formula_derivative.edges[j].values[k] = pair(&lm, &dgd) + pair(&adj.n, &dgn);
        }
    }
    Ok(UGamma { formula, formula_derivative, direct, direct_derivative })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks;
    use crate::graph::{build_preset, compose, EdgeSpec, EndCondition, OriginCondition, Preset};
    use crate::linalg::{c, re};
    use crate::maps::{map_m2, PoleGuard};
    use crate::random;
    use std::f64::consts::PI;

    fn interval(potential: f64) -> StarGraph {
        StarGraph::new(vec![EdgeSpec::new(1.0, crate::graph::PotentialProfile::constant(1.0, potential))]).unwrap()
    }

    fn dirichlet1() -> BoundaryConditions {
        compose(&OriginCondition::Dirichlet, &EndCondition::Dirichlet, 1)
    }

    #[test]
    fn zero_forcing_gives_zero() {
        let g = interval(0.0);
        let v = |_: usize, _: f64| re(0.0);
        let app = resolvent_apply(&g, &dirichlet1(), re(2.0), &v).unwrap();
        assert!(app.coefficients.iter().all(|z| *z == re(0.0)));
        assert_eq!(app.output().sup_norm(), 0.0);
    }

    #[test]
    fn sine_forcing_at_zero() {
        let g = interval(0.0);
        let v = |_: usize, x: f64| re((PI * x).sin());
        let app = resolvent_apply(&g, &dirichlet1(), re(0.0), &v).unwrap();
        for x in [0.1, 0.37, 0.5, 0.93] {
            assert!((app.value(0, x).0 - re((PI * x).sin() / (PI * PI))).norm() < 1e-12);
        }
        assert!(app.trace_residual() < 1e-12);
    }

    #[test]
    fn constant_forcing_closed_form() {
        let g = interval(0.0);
        let v = |_: usize, _: f64| re(1.0);
        let app = resolvent_apply(&g, &dirichlet1(), re(-1.0), &v).unwrap();
        // -u'' + u = 1, u(0) = u(1) = 0
        let exact = |x: f64| 1.0 - ((x - 0.5).cosh() / 0.5f64.cosh());
        let out = app.output();
        for (x, u) in out.edges[0].nodes().into_iter().zip(&out.edges[0].values) {
            assert!((u - re(exact(x))).norm() < 1e-12);
        }
        assert!(app.ode_residual() < 1e-7);
    }

    #[test]
    fn indicator_forcing_on_barrier_end() {
        let b = benchmarks::barrier_end(1.0 / 3.0, -10.0);
        let v = |j: usize, _: f64| if j == 0 { re(1.0) } else { re(0.0) };
        for lam in [re(7.0), c(20.0, 0.5)] {
            let app = resolvent_apply(&b.graph, &b.bc, lam, &v).unwrap();
            assert!(app.trace_residual() < 1e-10);
            assert!(app.ode_residual() < 1e-7, "{}", app.ode_residual());
            assert!(app.cramer_lu_discrepancy < 1e-9);
        }
    }

    #[test]
    fn eigenvalue_rejected() {
        let g = interval(0.0);
        assert!(matches!(Resolvent::new(&g, &dirichlet1(), re(PI * PI)), Err(Error::OnSpectrum { .. })));
        let frame = GraphSolutions::new(&g, &dirichlet1(), re(PI * PI)).unwrap().frame(&[0.0]).unwrap();
        assert!(matches!(select_tau(&frame), Err(Error::NoIndependentPartner { edge: 0 })));
    }

    #[test]
    fn preset_projection_ranks() {
        let cases = [(Preset::Dirichlet, 4, 0, 0), (Preset::Neumann, 0, 4, 0), (Preset::Kirchhoff, 3, 1, 0)];
        for (preset, d, nn, r) in cases {
            let p = build_projections(&build_preset(&preset, 2)).unwrap();
            assert_eq!((p.rank_d(), p.rank_n(), p.rank_r()), (d, nn, r), "{preset:?}");
            assert!(p.checks().max() < 1e-10);
        }
    }

    #[test]
    fn random_projection_invariants() {
        let mut rng = random::rng(11);
        for k in 0..40 {
            let bc = random::random_bc(&mut rng, 1 + k % 4, k % 2 == 0);
            let p = build_projections(&bc).unwrap();
            assert!(p.checks().max() < 1e-10, "{:?}", p.checks());
            assert!(adjustment_vectors(&p, &linalg::unit(2 * bc.n(), 0)).robin_gap < 1e-9);
        }
    }

    #[test]
    fn trace_relations_for_resolvent_output() {
        let mut rng = random::rng(5);
        for k in 0..6 {
            let n = 1 + k % 3;
            let g = random::random_graph(&mut rng, n, 5.0);
            let bc = random::random_bc(&mut rng, n, k % 2 == 1);
            let p = build_projections(&bc).unwrap();
            let v = |j: usize, x: f64| c((1.0 + j as f64) * x.cos(), x * x);
            let app = resolvent_apply(&g, &bc, c(3.3, 0.7), &v).unwrap();
            assert!(p.trace_relations(&app.boundary_data()).max() < 1e-8);
        }
    }

    #[test]
    fn inner_product_identity_on_barrier_end() {
        let b = benchmarks::barrier_end(1.0 / 3.0, -10.0);
        let v = |j: usize, _: f64| if j == 0 { re(1.0) } else { re(0.0) };
        let chk = inner_product_check(&b.graph, &b.bc, re(7.0), &linalg::unit(4, 0), &v).unwrap();
        assert!(chk.residual() < 1e-6, "{chk:?}");
        let zero = inner_product_check(&b.graph, &b.bc, re(7.0), &CVec::zeros(4), &v).unwrap();
        assert_eq!(zero.residual(), 0.0);
    }

    #[test]
    fn inner_product_identity_random() {
        let mut rng = random::rng(21);
        for k in 0..6 {
            let g = random::random_graph(&mut rng, 3, 4.0);
            let bc = random::random_bc(&mut rng, 3, true);
            let f = CVec::from_fn(6, |r, _| c(r as f64 - 2.0, 0.5 * k as f64));
            let v = |j: usize, x: f64| c((x + j as f64).sin(), 0.3 * x);
            let lam = if k < 3 { re(2.5) } else { c(2.5, 0.8) };
            let chk = inner_product_check(&g, &bc, lam, &f, &v).unwrap();
            assert!(chk.residual() < 1e-6, "{k}: {chk:?}");
        }
    }

    #[test]
    fn u_gamma_paths_agree() {
        let mut rng = random::rng(8);
        for k in 0..6 {
            let n = 1 + k % 3;
            let g = random::random_graph(&mut rng, n, 4.0);
            let bc = random::random_bc(&mut rng, n, k % 2 == 0);
            let lam = c(4.1, if k % 3 == 0 { 0.0 } else { 0.4 });
            for i in 0..2 * n {
                let ug = u_gamma(&g, &bc, lam, i).unwrap();
                assert!(ug.discrepancy() < 1e-7, "{k} {i}: {}", ug.discrepancy());
                assert!(ug.derivative_discrepancy() < 1e-6);
            }
        }
    }

    #[test]
    fn u_gamma_derivative_reproduces_star_map() {
        let b = benchmarks::barrier_end(1.0 / 3.0, -10.0);
        let split = crate::graph::split_graph(&b.graph, &b.bc, &b.split).unwrap();
        let single = split.first();
        let star = &single.star[0];
        let j = single.cut.edge;
        let lam = re(7.0);
        let ug = u_gamma(&star.graph, &star.bc, lam, j).unwrap();
        let m2 = map_m2(single, lam, PoleGuard::none()).unwrap().value;
        let end = *ug.formula_derivative.edges[j].values.last().unwrap();
        assert!((end - m2).norm() < 1e-7 * (1.0 + m2.norm()), "{end} vs {m2}");
    }
}
