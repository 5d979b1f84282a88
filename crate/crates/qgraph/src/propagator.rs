//! Per-edge initial value problems `-u'' + V u = λ u`.
//!
//! Piecewise-constant potentials use exact transfer matrices; sampled ones an
//! adaptive Dormand–Prince 5(4) integrator with dense output.

use crate::error::{Error, Result};
use crate::graph::{EdgeSpec, PotentialProfile};
use crate::linalg::{re, C64};

/// Relative tolerance of the adaptive integrator.
pub const RK_RTOL: f64 = 1e-10;
/// Absolute tolerance of the adaptive integrator.
pub const RK_ATOL: f64 = 1e-12;
/// Largest accepted per-step change of the Wronskian, relative to `max(1, |Φ|²)`.
pub const WRONSKIAN_DRIFT: f64 = 1e-9;

const SERIES_CUTOFF: f64 = 1e-4;
const DOMAIN_TOL: f64 = 1e-12;

/// `(u, u')` at `x` for spectral parameter `lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    pub value: C64,
    pub deriv: C64,
    pub x: f64,
    pub lambda: C64,
}

impl StateVector {
    pub fn new(value: C64, deriv: C64, x: f64, lambda: C64) -> Self {
        StateVector { value, deriv, x, lambda }
    }
}

/// 2×2 matrix acting on `(u, u')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix(pub [[C64; 2]; 2]);

impl TransferMatrix {
    pub fn identity() -> Self {
        let (o, z) = (re(1.0), re(0.0));
        TransferMatrix([[o, z], [z, o]])
    }

    pub fn det(&self) -> C64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    /// `self · rhs`.
    pub fn then_after(&self, rhs: &TransferMatrix) -> TransferMatrix {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = [[re(0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        TransferMatrix(out)
    }

    pub fn inverse(&self) -> TransferMatrix {
        let m = &self.0;
        let d = self.det();
        TransferMatrix([[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]])
    }

    pub fn apply(&self, u: C64, du: C64) -> (C64, C64) {
        let m = &self.0;
        (m[0][0] * u + m[0][1] * du, m[1][0] * u + m[1][1] * du)
    }
}

/// Principal square root accurate in each component separately (the polar
/// form loses the small real part near the negative axis).
fn principal_sqrt(q: C64) -> C64 {
    let (x, y) = (q.re, q.im);
    if x == 0.0 && y == 0.0 {
        return re(0.0);
    }
    let r = q.norm();
    if x >= 0.0 {
        let t = ((r + x) / 2.0).sqrt();
        C64::new(t, y / (2.0 * t))
    } else {
        let t = ((r - x) / 2.0).sqrt();
        C64::new(y.abs() / (2.0 * t), t.copysign(y))
    }
}

/// `sin(ω d)/ω` with `ω² = q`, by series when `|ω d|` is small.
fn sinc_scaled(q: C64, d: f64) -> (C64, C64) {
    let z2 = q * d * d;
    if z2.norm() < SERIES_CUTOFF * SERIES_CUTOFF {
        let s = re(d) * (re(1.0) - z2 / 6.0 + z2 * z2 / 120.0);
        let cz = re(1.0) - z2 / 2.0 + z2 * z2 / 24.0;
        return (s, cz);
    }
    let w = principal_sqrt(q);
    let z = w * d;
    (z.sin() / w, z.cos())
}

/// Exact transfer across a constant potential `nu` over signed length `d`.
pub fn segment_transfer(lambda: C64, nu: f64, d: f64) -> TransferMatrix {
    let q = lambda - nu;
    let (s, cz) = sinc_scaled(q, d);
    TransferMatrix([[cz, s], [-q * s, cz]])
}

fn check_domain(x: f64, length: f64) -> Result<()> {
    if x < -DOMAIN_TOL || x > length + DOMAIN_TOL || !x.is_finite() {
        Err(Error::OutOfDomain { x, length })
    } else {
        Ok(())
    }
}

/// Knot intervals traversed going from `a` to `b`, in travel order.
fn cells(knots: &[f64], a: f64, b: f64) -> Vec<(f64, f64)> {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let mut pts = vec![lo];
    pts.extend(knots.iter().copied().filter(|&k| k > lo && k < hi));
    pts.push(hi);
    let mut out: Vec<(f64, f64)> = pts.windows(2).filter(|w| w[1] > w[0]).map(|w| (w[0], w[1])).collect();
    if a > b {
        out.reverse();
        for c in &mut out {
            *c = (c.1, c.0);
        }
    }
    out
}

fn exact_transfer(edge: &EdgeSpec, lambda: C64, a: f64, b: f64) -> TransferMatrix {
    let knots = edge.potential.knots();
    let mut t = TransferMatrix::identity();
    for (x0, x1) in cells(&knots, a, b) {
        let nu = edge.potential.value_within(0.5 * (x0 + x1), x0.min(x1), x0.max(x1));
        t = segment_transfer(lambda, nu, x1 - x0).then_after(&t);
    }
    t
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Fundamental matrix flattened row-major: `[u_a, u_b, u_a', u_b']`.
type Flat = [C64; 4];

fn rhs(v_minus_lambda: C64, y: &Flat) -> Flat {
    [y[2], y[3], v_minus_lambda * y[0], v_minus_lambda * y[1]]
}

fn axpy(y: &Flat, terms: &[(f64, &Flat)], h: f64) -> Flat {
    let mut out = *y;
    for (coef, k) in terms {
        for i in 0..4 {
            out[i] += k[i] * (coef * h);
        }
    }
    out
}

fn flat_det(y: &Flat) -> C64 {
    y[0] * y[3] - y[1] * y[2]
}

fn flat_norm2(y: &Flat) -> f64 {
    y.iter().map(|z| z.norm_sqr()).sum()
}

/// One accepted step with its continuous extension.
#[derive(Debug, Clone)]
struct DenseStep {
    x0: f64,
    h: f64,
    rcont: [Flat; 5],
}

impl DenseStep {
    fn eval(&self, x: f64) -> Flat {
        let th = (x - self.x0) / self.h;
        let th1 = 1.0 - th;
        let r = &self.rcont;
        let mut out = [re(0.0); 4];
        for i in 0..4 {
            out[i] = r[0][i] + (r[1][i] + (r[2][i] + (r[3][i] + r[4][i] * th1) * th) * th1) * th;
        }
        out
    }
}

/// Integrates the fundamental matrix across one cell on which `pot` is smooth.
fn integrate_cell(
    pot: &dyn Fn(f64) -> f64,
    lambda: C64,
    x0: f64,
    x1: f64,
    y0: Flat,
    steps: Option<&mut Vec<DenseStep>>,
) -> Result<Flat> {
    let span = x1 - x0;
    if span == 0.0 {
        return Ok(y0);
    }
    let dir = span.signum();
    let scale = (lambda - pot(x0)).norm().sqrt() + 1.0;
    let mut h = dir * (0.05 / scale).min(span.abs());
    let mut x = x0;
    let mut y = y0;
    let mut k1 = rhs(re(pot(x)) - lambda, &y);
    let mut sink = steps;
    let min_step = 1e-14 * (x0.abs() + x1.abs() + 1.0);
    let mut rejects = 0usize;
    while (x1 - x) * dir > 0.0 {
        if (x + h - x1) * dir > 0.0 {
            h = x1 - x;
        }
        let f = |t: f64| re(pot(t)) - lambda;
        let k2 = rhs(f(x + C2 * h), &axpy(&y, &[(A21, &k1)], h));
        let k3 = rhs(f(x + C3 * h), &axpy(&y, &[(A31, &k1), (A32, &k2)], h));
        let k4 = rhs(f(x + C4 * h), &axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h));
        let k5 = rhs(f(x + C5 * h), &axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h));
        let k6 = rhs(f(x + h), &axpy(&y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], h));
        let ynew = axpy(&y, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)], h);
        let xnew = if (x + h - x1).abs() <= min_step { x1 } else { x + h };
        let k7 = rhs(f(xnew), &ynew);

        let mut err = 0.0;
        for i in 0..4 {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
            let sc = RK_ATOL + RK_RTOL * y[i].norm().max(ynew[i].norm());
            err += (e.norm() / sc).powi(2);
        }
        let err = (err / 4.0).sqrt();
        let drift = (flat_det(&ynew) - flat_det(&y)).norm() / flat_norm2(&ynew).max(1.0);

        if err <= 1.0 && drift <= WRONSKIAN_DRIFT {
            if let Some(out) = sink.as_deref_mut() {
                let r2 = {
                    let mut r = [re(0.0); 4];
                    for i in 0..4 {
                        r[i] = ynew[i] - y[i];
                    }
                    r
                };
                let mut r3 = [re(0.0); 4];
                let mut r4 = [re(0.0); 4];
                let mut r5 = [re(0.0); 4];
                for i in 0..4 {
                    r3[i] = k1[i] * h - r2[i];
                    r4[i] = r2[i] - k7[i] * h - r3[i];
                    r5[i] = (k1[i] * D1 + k3[i] * D3 + k4[i] * D4 + k5[i] * D5 + k6[i] * D6 + k7[i] * D7) * h;
                }
                out.push(DenseStep { x0: x, h, rcont: [y, r2, r3, r4, r5] });
            }
            x = xnew;
            y = ynew;
            k1 = k7;
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= fac;
            rejects = 0;
        } else {
            let fac = if err > 1.0 { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.5 };
            h *= fac;
            rejects += 1;
            if h.abs() < min_step || rejects > 200 {
                return Err(Error::IntegrationFailure { x, reason: "step size underflow".into() });
            }
        }
    }
    Ok(y)
}

fn flat_to_transfer(y: &Flat) -> TransferMatrix {
    TransferMatrix([[y[0], y[1]], [y[2], y[3]]])
}

fn transfer_to_flat(t: &TransferMatrix) -> Flat {
    [t.0[0][0], t.0[0][1], t.0[1][0], t.0[1][1]]
}

/// Transfer matrix from `a` to `b` computed with the adaptive integrator,
/// whatever the profile kind.
pub fn adaptive_transfer(edge: &EdgeSpec, lambda: C64, a: f64, b: f64) -> Result<TransferMatrix> {
    check_domain(a, edge.length)?;
    check_domain(b, edge.length)?;
    let knots = edge.potential.knots();
    let mut y = transfer_to_flat(&TransferMatrix::identity());
    for (x0, x1) in cells(&knots, a, b) {
        let (lo, hi) = (x0.min(x1), x0.max(x1));
        let pot = |x: f64| edge.potential.value_within(x, lo, hi);
        y = integrate_cell(&pot, lambda, x0, x1, y, None)?;
    }
    Ok(flat_to_transfer(&y))
}

/// Dense fundamental-matrix trajectory `Φ(x)` with `Φ(0) = I`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    steps: Vec<DenseStep>,
    length: f64,
}

impl Trajectory {
    pub fn build(edge: &EdgeSpec, lambda: C64) -> Result<Self> {
        let knots = edge.potential.knots();
        let mut steps = Vec::new();
        let mut y = transfer_to_flat(&TransferMatrix::identity());
        for (x0, x1) in cells(&knots, 0.0, edge.length) {
            let pot = |x: f64| edge.potential.value_within(x, x0, x1);
            y = integrate_cell(&pot, lambda, x0, x1, y, Some(&mut steps))?;
        }
        Ok(Trajectory { steps, length: edge.length })
    }

    pub fn at(&self, x: f64) -> TransferMatrix {
        if x <= 0.0 || self.steps.is_empty() {
            return TransferMatrix::identity();
        }
        let x = x.min(self.length);
        let idx = self.steps.partition_point(|s| s.x0 <= x).saturating_sub(1);
        flat_to_transfer(&self.steps[idx].eval(x))
    }

    pub fn step_count(&self) -> usize {
        self.steps.len()
    }
}

/// Solver for one edge at fixed λ; cheap to query repeatedly.
#[derive(Debug, Clone)]
pub enum EdgeSolver {
    Exact { edge: EdgeSpec, lambda: C64 },
    Adaptive { trajectory: Trajectory, lambda: C64, length: f64 },
}

impl EdgeSolver {
    pub fn new(edge: &EdgeSpec, lambda: C64) -> Result<Self> {
        match edge.potential {
            PotentialProfile::PiecewiseConstant(_) => Ok(EdgeSolver::Exact { edge: edge.clone(), lambda }),
            PotentialProfile::Sampled(_) => Ok(EdgeSolver::Adaptive {
                trajectory: Trajectory::build(edge, lambda)?,
                lambda,
                length: edge.length,
            }),
        }
    }

    pub fn lambda(&self) -> C64 {
        match self {
            EdgeSolver::Exact { lambda, .. } | EdgeSolver::Adaptive { lambda, .. } => *lambda,
        }
    }

    pub fn length(&self) -> f64 {
        match self {
            EdgeSolver::Exact { edge, .. } => edge.length,
            EdgeSolver::Adaptive { length, .. } => *length,
        }
    }

    /// Maps `(u, u')` at `a` to `(u, u')` at `b`.
    pub fn transfer(&self, a: f64, b: f64) -> TransferMatrix {
        match self {
            EdgeSolver::Exact { edge, lambda } => exact_transfer(edge, *lambda, a, b),
            EdgeSolver::Adaptive { trajectory, .. } => {
                trajectory.at(b).then_after(&trajectory.at(a).inverse())
            }
        }
    }

    /// Solution with data `(u, u')` at `from` evaluated at `x`.
    pub fn solve(&self, from: f64, u: C64, du: C64, x: f64) -> (C64, C64) {
        self.transfer(from, x).apply(u, du)
    }
}

/// Propagates `from` to `to_x` along `edge`.
pub fn propagate(edge: &EdgeSpec, lambda: C64, from: StateVector, to_x: f64) -> Result<StateVector> {
    check_domain(from.x, edge.length)?;
    check_domain(to_x, edge.length)?;
    let t = match edge.potential {
        PotentialProfile::PiecewiseConstant(_) => exact_transfer(edge, lambda, from.x, to_x),
        PotentialProfile::Sampled(_) => adaptive_transfer(edge, lambda, from.x, to_x)?,
    };
    let (value, deriv) = t.apply(from.value, from.deriv);
    Ok(StateVector { value, deriv, x: to_x, lambda })
}

/// `φ(s) = 0, φ'(s) = 1` and `θ(s) = 1, θ'(s) = 0` at an anchor `s`.
#[derive(Debug, Clone)]
pub struct BasisPair {
    pub anchor: f64,
    pub phi: StateVector,
    pub theta: StateVector,
    solver: EdgeSolver,
}

impl BasisPair {
    /// `(φ, θ)` evaluated at `x`.
    pub fn at(&self, x: f64) -> Result<(StateVector, StateVector)> {
        check_domain(x, self.solver.length())?;
        let t = self.solver.transfer(self.anchor, x);
        let lambda = self.phi.lambda;
        let (p, dp) = t.apply(self.phi.value, self.phi.deriv);
        let (q, dq) = t.apply(self.theta.value, self.theta.deriv);
        Ok((StateVector::new(p, dp, x, lambda), StateVector::new(q, dq, x, lambda)))
    }
}

pub fn basis_pair(edge: &EdgeSpec, lambda: C64, anchor: f64) -> Result<BasisPair> {
    check_domain(anchor, edge.length)?;
    Ok(BasisPair {
        anchor,
        phi: StateVector::new(re(0.0), re(1.0), anchor, lambda),
        theta: StateVector::new(re(1.0), re(0.0), anchor, lambda),
        solver: EdgeSolver::new(edge, lambda)?,
    })
}

/// `a·b' − a'·b`.
pub fn wronskian(a: &StateVector, b: &StateVector) -> Result<C64> {
    if a.x != b.x {
        return Err(Error::MismatchedEvaluationPoint { a: a.x, b: b.x });
    }
    Ok(a.value * b.deriv - a.deriv * b.value)
}
