//! Fundamental solution frames and the Evans function.

use crate::error::{Error, Result};
use crate::graph::{gamma_trace, BoundaryConditions, BoundaryData, StarGraph};
use crate::linalg::{self, CMat, CVec, C64};
use crate::propagator::EdgeSolver;

/// The `2n` fundamental solutions of a graph problem at one λ.
///
/// Column `i` of `Y` starts at the origin with data `(-α₂*, α₁*)[:, i]`; the
/// diagonal `Z` solution on edge `i` starts at `ℓ_i` with `(-conj h_i, conj g_i)`.
#[derive(Debug, Clone)]
pub struct GraphSolutions {
    pub lambda: C64,
    pub lengths: Vec<f64>,
    solvers: Vec<EdgeSolver>,
    y_init: CMat,
    yp_init: CMat,
    z_end: Vec<C64>,
    zp_end: Vec<C64>,
}

impl GraphSolutions {
    pub fn new(g: &StarGraph, bc: &BoundaryConditions, lambda: C64) -> Result<Self> {
        let n = g.n();
        if bc.n() != n {
            return Err(Error::DimensionMismatch { expected: n, found: bc.n() });
        }
        let solvers = g.edges.iter().map(|e| EdgeSolver::new(e, lambda)).collect::<Result<Vec<_>>>()?;
        Ok(GraphSolutions {
            lambda,
            lengths: g.lengths(),
            solvers,
            y_init: -bc.alpha2.adjoint(),
            yp_init: bc.alpha1.adjoint(),
            z_end: bc.beta2.iter().map(|h| -h.conj()).collect(),
            zp_end: bc.beta1.iter().map(|g| g.conj()).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.lengths.len()
    }

    pub fn solver(&self, edge: usize) -> &EdgeSolver {
        &self.solvers[edge]
    }

    /// `(y_{i,j}, y'_{i,j})` at `x` on edge `j`.
    pub fn y(&self, i: usize, j: usize, x: f64) -> (C64, C64) {
        self.solvers[j].solve(0.0, self.y_init[(j, i)], self.yp_init[(j, i)], x)
    }

    /// `(z_{j,j}, z'_{j,j})` at `x` on edge `j`.
    pub fn z(&self, j: usize, x: f64) -> (C64, C64) {
        self.solvers[j].solve(self.lengths[j], self.z_end[j], self.zp_end[j], x)
    }

    /// Column `k` of the frame (`k < n`: Y columns, else Z) on edge `j`.
    pub fn column(&self, k: usize, j: usize, x: f64) -> (C64, C64) {
        let n = self.n();
        if k < n {
            self.y(k, j, x)
        } else if k - n == j {
            self.z(j, x)
        } else {
            (C64::new(0.0, 0.0), C64::new(0.0, 0.0))
        }
    }

    /// `Σ_k coeffs[k] · column k` on edge `j`.
    pub fn combine(&self, coeffs: &CVec, j: usize, x: f64) -> (C64, C64) {
        let mut u = C64::new(0.0, 0.0);
        let mut du = C64::new(0.0, 0.0);
        for k in 0..coeffs.len() {
            if coeffs[k] == C64::new(0.0, 0.0) {
                continue;
            }
            let (a, b) = self.column(k, j, x);
            u += coeffs[k] * a;
            du += coeffs[k] * b;
        }
        (u, du)
    }

    /// Boundary data of the combination.
    pub fn boundary_data(&self, coeffs: &CVec) -> BoundaryData {
        let n = self.n();
        let mut bd = BoundaryData::zeros(n);
        for j in 0..n {
            let (u0, du0) = self.combine(coeffs, j, 0.0);
            let (ul, dul) = self.combine(coeffs, j, self.lengths[j]);
            bd.values_at_0[j] = u0;
            bd.derivs_at_0[j] = du0;
            bd.values_at_ell[j] = ul;
            bd.derivs_at_ell[j] = dul;
        }
        bd
    }

    /// Matrix whose column `k` is the Γ-trace of frame column `k`.
    pub fn trace_matrix(&self, bc: &BoundaryConditions) -> CMat {
        let n = self.n();
        let mut m = CMat::zeros(2 * n, 2 * n);
        for k in 0..2 * n {
            let t = gamma_trace(bc, &self.boundary_data(&linalg::unit(2 * n, k))).expect("dimensions checked");
            m.set_column(k, &t);
        }
        m
    }

    /// Coefficients of the homogeneous solution with Γ-trace `f`.
    pub fn solve_trace(&self, bc: &BoundaryConditions, f: &CVec) -> Result<CVec> {
        linalg::solve(&self.trace_matrix(bc), f).ok_or(Error::OnSpectrum { lambda: self.lambda.re })
    }

    pub fn frame(&self, eval_point: &[f64]) -> Result<FundamentalFrame> {
        let n = self.n();
        if eval_point.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: eval_point.len() });
        }
        for (j, &x) in eval_point.iter().enumerate() {
            if !(x >= 0.0 && x <= self.lengths[j]) {
                return Err(Error::OutOfDomain { x, length: self.lengths[j] });
            }
        }
        let mut f = FundamentalFrame {
            y: CMat::zeros(n, n),
            yp: CMat::zeros(n, n),
            z: CMat::zeros(n, n),
            zp: CMat::zeros(n, n),
            lambda: self.lambda,
            eval_point: eval_point.to_vec(),
        };
        for j in 0..n {
            let x = eval_point[j];
            for i in 0..n {
                let (v, d) = self.y(i, j, x);
                f.y[(j, i)] = v;
                f.yp[(j, i)] = d;
            }
            let (v, d) = self.z(j, x);
            f.z[(j, j)] = v;
            f.zp[(j, j)] = d;
        }
        Ok(f)
    }
}

/// Values and derivatives of the fundamental solutions at a point `x⃗`.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalFrame {
    pub y: CMat,
    pub yp: CMat,
    pub z: CMat,
    pub zp: CMat,
    pub lambda: C64,
    pub eval_point: Vec<f64>,
}

impl FundamentalFrame {
    pub fn n(&self) -> usize {
        self.y.nrows()
    }

    /// The `2n × 2n` matrix `[[Y, Z], [Y', Z']]`.
    pub fn matrix(&self) -> CMat {
        let n = self.n();
        let mut f = CMat::zeros(2 * n, 2 * n);
        f.view_mut((0, 0), (n, n)).copy_from(&self.y);
        f.view_mut((0, n), (n, n)).copy_from(&self.z);
        f.view_mut((n, 0), (n, n)).copy_from(&self.yp);
        f.view_mut((n, n), (n, n)).copy_from(&self.zp);
        f
    }

    pub fn determinant(&self) -> C64 {
        linalg::det(&self.matrix())
    }
}

/// Evans function value at one λ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvansValue {
    pub value: C64,
    pub lambda: C64,
}

pub fn fundamental_frame(
    g: &StarGraph,
    bc: &BoundaryConditions,
    lambda: C64,
    eval_point: &[f64],
) -> Result<FundamentalFrame> {
    GraphSolutions::new(g, bc, lambda)?.frame(eval_point)
}

/// Evans function, evaluated at the origin.
pub fn evans(g: &StarGraph, bc: &BoundaryConditions, lambda: C64) -> Result<EvansValue> {
    let frame = fundamental_frame(g, bc, lambda, &vec![0.0; g.n()])?;
    Ok(EvansValue { value: frame.determinant(), lambda })
}

/// Evans function evaluated at an arbitrary point.
pub fn evans_at(g: &StarGraph, bc: &BoundaryConditions, lambda: C64, eval_point: &[f64]) -> Result<C64> {
    Ok(fundamental_frame(g, bc, lambda, eval_point)?.determinant())
}

/// `α₁ Z + α₂ Z'` for a frame evaluated at the origin.
pub fn c_matrix(frame: &FundamentalFrame, bc: &BoundaryConditions) -> CMat {
    &bc.alpha1 * &frame.z + &bc.alpha2 * &frame.zp
}

/// Largest relative change of the Evans function over the trial points.
pub fn x_independence_check(
    g: &StarGraph,
    bc: &BoundaryConditions,
    lambda: C64,
    points: &[Vec<f64>],
) -> Result<f64> {
    assert!(points.len() >= 2, "need at least two trial points");
    let sols = GraphSolutions::new(g, bc, lambda)?;
    let reference = sols.frame(&points[0])?.determinant();
    let mut worst = 0.0f64;
    for p in &points[1..] {
        let e = sols.frame(p)?.determinant();
        worst = worst.max((e - reference).norm() / (1.0 + reference.norm()));
    }
    Ok(worst)
}
