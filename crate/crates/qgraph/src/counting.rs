//! Real-axis zero and pole counting, and the counting identities.
//!
//! Zeros are found from sign changes on a grid uniform in `sign(λ)·√|λ|`, then
//! refined by bisection. A local minimum of `|f|` that nearly touches zero
//! without a sign change counts as a double zero.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evans::evans;
use crate::graph::{split_graph, BoundaryConditions, SplitResult, SplitSpec, StarGraph};
use crate::linalg::C64;
use crate::maps::{map_m1, map_m2, same_wire_maps, two_wire_maps, PoleGuard};

/// Grid and refinement settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountOptions {
    /// Grid points per unit of `√λ`.
    pub points_per_unit: usize,
    pub min_points: usize,
    /// Explicit grid size, overriding the density rule.
    pub grid: Option<usize>,
    /// Bisection tolerance in λ.
    pub refine_tol: f64,
    /// `|f|` below this fraction of the local scale marks a tangency.
    pub tangency: f64,
}

impl Default for CountOptions {
    fn default() -> Self {
        CountOptions { points_per_unit: 512, min_points: 64, grid: None, refine_tol: 1e-10, tangency: 1e-9 }
    }
}

impl CountOptions {
    pub fn with_grid(mut self, grid: usize) -> Self {
        self.grid = Some(grid);
        self
    }

    pub fn doubled(mut self) -> Self {
        self.points_per_unit *= 2;
        self.min_points *= 2;
        self.grid = self.grid.map(|g| 2 * g);
        self
    }
}

/// Zero or pole location with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub location: f64,
    pub multiplicity: u32,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CountReport {
    pub interval: (f64, f64),
    pub zeros: Vec<Root>,
    pub poles: Vec<Root>,
    /// Sum of zero multiplicities.
    pub count: u32,
    /// Zeros minus poles, for maps.
    pub delta_n: i64,
    pub warnings: Vec<String>,
}

impl CountReport {
    fn from_zeros(interval: (f64, f64), zeros: Vec<Root>, warnings: Vec<String>) -> Self {
        let count = zeros.iter().map(|z| z.multiplicity).sum();
        CountReport { interval, zeros, poles: Vec::new(), count, delta_n: count as i64, warnings }
    }

    pub fn pole_count(&self) -> u32 {
        self.poles.iter().map(|p| p.multiplicity).sum()
    }
}

fn to_t(lambda: f64) -> f64 {
    lambda.signum() * lambda.abs().sqrt()
}

fn from_t(t: f64) -> f64 {
    t.signum() * t * t
}

fn grid(interval: (f64, f64), opts: &CountOptions) -> Vec<f64> {
    let (t0, t1) = (to_t(interval.0), to_t(interval.1));
    let points = opts
        .grid
        .unwrap_or_else(|| ((t1 - t0) * opts.points_per_unit as f64).ceil() as usize)
        .max(opts.min_points)
        .max(2);
    (0..points)
        .map(|k| {
            if k == 0 {
                interval.0
            } else if k == points - 1 {
                interval.1
            } else {
                from_t(t0 + (t1 - t0) * k as f64 / (points - 1) as f64)
            }
        })
        .collect()
}

fn bisect<F: Fn(f64) -> Result<f64>>(f: &F, mut a: f64, mut fa: f64, mut b: f64, tol: f64) -> Result<f64> {
    while b - a > tol {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Golden-section minimum of `|f|` on `[a, b]`.
fn minimize_abs<F: Fn(f64) -> Result<f64>>(f: &F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c)?.abs(), f(d)?.abs());
    let mut iterations = 0;
    while b - a > tol && iterations < 200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?.abs();
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?.abs();
        }
        iterations += 1;
    }
    Ok(if fc < fd { (c, fc) } else { (d, fd) })
}

fn local_scale(values: &[f64], k: usize) -> f64 {
    let lo = k.saturating_sub(8);
    let hi = (k + 9).min(values.len());
    values[lo..hi].iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Zeros strictly inside the grid range, without endpoint handling.
fn scan<F>(f: &F, interval: (f64, f64), opts: &CountOptions) -> Result<(Vec<Root>, Vec<String>)>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let xs = grid(interval, opts);
    let values = xs.par_iter().map(|&x| f(x)).collect::<Result<Vec<f64>>>()?;
    if let Some(k) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::PoleAtLambda { lambda: xs[k], denominator: f64::INFINITY });
    }
    let mut zeros = Vec::new();
    let m = xs.len();
    let mut k = 0;
    while k + 1 < m {
        let (fa, fb) = (values[k], values[k + 1]);
        if fb == 0.0 && k + 2 < m {
            // zero sitting on a grid node
            let mult = if (values[k + 2] > 0.0) == (fa > 0.0) { 2 } else { 1 };
            zeros.push(Root { location: xs[k + 1], multiplicity: mult });
            k += 2;
            continue;
        }
        if fa != 0.0 && fb != 0.0 && (fa > 0.0) != (fb > 0.0) {
            let loc = bisect(f, xs[k], fa, xs[k + 1], opts.refine_tol)?;
            zeros.push(Root { location: loc, multiplicity: 1 });
        }
        k += 1;
    }
    // tangencies: local minima of |f| with no sign change on either side
    for k in 1..m.saturating_sub(1) {
        let (a, b, c) = (values[k - 1], values[k], values[k + 1]);
        let same_sign = (a > 0.0) == (b > 0.0) && (b > 0.0) == (c > 0.0) && a != 0.0 && b != 0.0 && c != 0.0;
        if !same_sign || !(b.abs() <= a.abs() && b.abs() <= c.abs()) {
            continue;
        }
        let scale = local_scale(&values, k);
        let (loc, min) = minimize_abs(f, xs[k - 1], xs[k + 1], opts.refine_tol)?;
        if min <= opts.tangency * scale {
            zeros.push(Root { location: loc, multiplicity: 2 });
        }
    }
    zeros.sort_by(|a, b| a.location.total_cmp(&b.location));

    let mut warnings = Vec::new();
    for w in zeros.windows(2) {
        let gap = (to_t(w[1].location) - to_t(w[0].location)).abs();
        let cell = (to_t(interval.1) - to_t(interval.0)) / (m - 1) as f64;
        if gap < 2.0 * cell {
            warnings.push(
                Error::GridTooCoarse(format!(
                    "zeros at {} and {} are closer than two grid cells",
                    w[0].location, w[1].location
                ))
                .to_string(),
            );
        }
    }
    Ok((zeros, warnings))
}

fn near_endpoint(zeros: &[Root], interval: (f64, f64), tol: f64) -> Option<f64> {
    zeros.iter().find_map(|z| {
        if (z.location - interval.0).abs() <= tol {
            Some(interval.0)
        } else if (z.location - interval.1).abs() <= tol {
            Some(interval.1)
        } else {
            None
        }
    })
}

/// Whether `f` has a zero within `tol` of `x`.
fn zero_at<F: Fn(f64) -> Result<f64>>(f: &F, x: f64, tol: f64) -> Result<bool> {
    let (a, b) = (f(x - tol)?, f(x + tol)?);
    Ok(f(x)? == 0.0 || a == 0.0 || b == 0.0 || (a > 0.0) != (b > 0.0))
}

/// Counts zeros of a real function on `interval`.
///
/// An endpoint within `refine_tol` of a zero is moved right by
/// `10·refine_tol`, with a warning.
pub fn count_zeros<F>(f: F, interval: (f64, f64), opts: &CountOptions) -> Result<CountReport>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if !(interval.0 < interval.1) {
        return Err(Error::GridTooCoarse(format!("empty interval [{}, {}]", interval.0, interval.1)));
    }
    let mut warnings = Vec::new();
    let mut iv = interval;
    let tol = opts.refine_tol;
    for end in [0, 1] {
        let x = if end == 0 { iv.0 } else { iv.1 };
        if zero_at(&f, x, tol)? {
            let moved = x + 10.0 * tol;
            warnings.push(format!("endpoint {x} is within {tol:e} of a zero; moved to {moved}"));
            if end == 0 {
                iv.0 = moved;
            } else {
                iv.1 = moved;
            }
        }
    }
    let (zeros, more) = scan(&f, iv, opts)?;
    warnings.extend(more);
    let zeros = zeros.into_iter().filter(|z| z.location > iv.0 && z.location < iv.1).collect();
    Ok(CountReport::from_zeros(interval, zeros, warnings))
}

/// Real part of `e^{-iφ} g(λ)`, with the phase fixed from a probe sample.
///
/// Evans functions of self-adjoint problems have constant phase on the real
/// axis, so this is a real function with the same zeros.
fn real_projection<G>(g: G, interval: (f64, f64)) -> Result<impl Fn(f64) -> Result<f64> + Sync>
where
    G: Fn(f64) -> Result<C64> + Sync,
{
    let probes = (0..7).map(|k| interval.0 + (interval.1 - interval.0) * (k as f64 + 0.5) / 7.0);
    let mut best = C64::new(0.0, 0.0);
    for x in probes {
        let v = g(x)?;
        if v.norm() > best.norm() {
            best = v;
        }
    }
    let phase = if best.norm() > 0.0 { best.conj() / best.norm() } else { C64::new(1.0, 0.0) };
    Ok(move |x: f64| g(x).map(|v| (v * phase).re))
}

/// Real-axis Evans function of a problem, up to a constant phase.
pub fn evans_real<'a>(
    g: &'a StarGraph,
    bc: &'a BoundaryConditions,
    interval: (f64, f64),
) -> Result<impl Fn(f64) -> Result<f64> + Sync + 'a> {
    real_projection(move |x| Ok(evans(g, bc, C64::new(x, 0.0))?.value), interval)
}

/// Eigenvalues of the problem on `interval`, with multiplicity.
pub fn count_eigenvalues(
    g: &StarGraph,
    bc: &BoundaryConditions,
    interval: (f64, f64),
    opts: &CountOptions,
) -> Result<CountReport> {
    count_zeros(evans_real(g, bc, interval)?, interval, opts)
}

/// Merges roots closer than `tol` (relative to `1 + |λ|`), summing multiplicities.
pub fn merge_roots(mut roots: Vec<Root>, tol: f64) -> Vec<Root> {
    roots.sort_by(|a, b| a.location.total_cmp(&b.location));
    let mut out: Vec<Root> = Vec::new();
    for r in roots {
        match out.last_mut() {
            Some(last) if (r.location - last.location).abs() <= tol * (1.0 + r.location.abs()) => {
                last.multiplicity += r.multiplicity;
            }
            _ => out.push(r),
        }
    }
    out
}

/// Order of `f` at `x` (positive for a zero, negative for a pole), read off
/// the growth of `|f|` between two distances on both sides.
fn local_order<F: Fn(f64) -> Result<f64>>(f: &F, x: f64, gap: f64) -> Result<i64> {
    let far = (1e-6 * (1.0 + x.abs())).min(0.1 * gap);
    let near = far / 10.0;
    let mut slope = 0.0;
    for side in [-1.0, 1.0] {
        let a = f(x + side * far)?.abs();
        let b = f(x + side * near)?.abs();
        slope += (b / a).log10();
    }
    Ok(-(slope / 2.0).round() as i64)
}

/// Zeros minus poles of a meromorphic map on `interval`.
///
/// Candidate poles are the merged zeros of the denominators. Their actual
/// order is measured on the map, so a singularity that cancels against a zero
/// of the numerator is not counted. Map zeros are counted on each pole-free
/// subinterval.
pub fn map_delta<F, D>(map: F, denominators: &[D], interval: (f64, f64), opts: &CountOptions) -> Result<CountReport>
where
    F: Fn(f64) -> Result<f64> + Sync,
    D: Fn(f64) -> Result<f64> + Sync,
{
    let tol = opts.refine_tol;
    let mut roots = Vec::new();
    let mut warnings = Vec::new();
    for d in denominators {
        if zero_at(d, interval.0, tol)? {
            return Err(Error::PoleOnBoundary { endpoint: interval.0 });
        }
        if zero_at(d, interval.1, tol)? {
            return Err(Error::PoleOnBoundary { endpoint: interval.1 });
        }
        let (z, w) = scan(d, interval, opts)?;
        roots.extend(z);
        warnings.extend(w);
    }
    let candidates = merge_roots(roots, 1e-7);
    if let Some(e) = near_endpoint(&candidates, interval, tol) {
        return Err(Error::PoleOnBoundary { endpoint: e });
    }
    let mut cuts = vec![interval.0];
    cuts.extend(candidates.iter().map(|p| p.location));
    cuts.push(interval.1);
    let mut zeros = Vec::new();
    for (k, w) in cuts.windows(2).enumerate() {
        let margin = |x: f64| 1e-8 * (1.0 + x.abs());
        let a = if k == 0 { w[0] } else { w[0] + margin(w[0]) };
        let b = if k + 2 == cuts.len() { w[1] } else { w[1] - margin(w[1]) };
        if !(a < b) {
            continue;
        }
        let sub = count_zeros(&map, (a, b), opts)?;
        warnings.extend(sub.warnings);
        zeros.extend(sub.zeros);
    }
    let mut poles = Vec::new();
    let mut point_zeros = Vec::new();
    for (k, c) in candidates.iter().enumerate() {
        let mut gap = (interval.0 - c.location).abs().min((interval.1 - c.location).abs());
        if k > 0 {
            gap = gap.min(c.location - candidates[k - 1].location);
        }
        if k + 1 < candidates.len() {
            gap = gap.min(candidates[k + 1].location - c.location);
        }
        for z in &zeros {
            gap = gap.min((z.location - c.location).abs());
        }
        let order = local_order(&map, c.location, gap)?;
        if order != -(c.multiplicity as i64) {
            warnings.push(format!(
                "denominator zero of order {} at {} is a map singularity of order {}",
                c.multiplicity, c.location, -order
            ));
        }
        if order < 0 {
            poles.push(Root { location: c.location, multiplicity: (-order).min(c.multiplicity as i64) as u32 });
        } else if order > 0 {
            point_zeros.push(Root { location: c.location, multiplicity: order as u32 });
        }
    }

    zeros.extend(point_zeros);
    zeros.sort_by(|a, b| a.location.total_cmp(&b.location));
    let count: u32 = zeros.iter().map(|z: &Root| z.multiplicity).sum();
    let pole_count: u32 = poles.iter().map(|p| p.multiplicity).sum();
    Ok(CountReport { interval, zeros, poles, count, delta_n: count as i64 - pole_count as i64, warnings })
}

/// Every term of a counting identity.
#[derive(Debug, Clone, PartialEq)]
pub struct CountingIdentity {
    pub interval: (f64, f64),
    pub full: CountReport,
    /// Pieces with Dirichlet conditions at the cuts, in identity order.
    pub pieces: Vec<(String, CountReport)>,
    pub map: CountReport,
}

impl CountingIdentity {
    pub fn piece_sum(&self) -> i64 {
        self.pieces.iter().map(|(_, r)| r.count as i64).sum()
    }

    pub fn holds(&self) -> bool {
        self.full.count as i64 == self.piece_sum() + self.map.delta_n
    }

    /// `"4 = 1 + 3 + 0"`.
    pub fn equation(&self) -> String {
        let mut terms: Vec<String> = self.pieces.iter().map(|(_, r)| r.count.to_string()).collect();
        terms.push(self.map.delta_n.to_string());
        format!("{} = {}", self.full.count, terms.join(" + "))
    }
}

/// Real-valued two-sided map (or its 2×2 determinant) for a split.
pub fn split_map(split: &SplitResult) -> impl Fn(f64) -> Result<f64> + Sync + '_ {
    move |x: f64| {
        let lambda = C64::new(x, 0.0);
        let guard = PoleGuard::none();
        let v = match split {
            SplitResult::Single(s) => map_m1(s, lambda, guard)?.value + map_m2(s, lambda, guard)?.value,
            SplitResult::SameWire(s) => same_wire_maps(s, lambda, guard)?.pair.det_sum(),
            SplitResult::TwoWires(s) => two_wire_maps(s, lambda, guard)?.pair.det_sum(),
        };
        Ok(v.re)
    }
}

/// Counts every term of `𝒩_full = Σ 𝒩_pieces + N` independently.
pub fn verify_counting(
    g: &StarGraph,
    bc: &BoundaryConditions,
    spec: &SplitSpec,
    interval: (f64, f64),
    opts: &CountOptions,
) -> Result<CountingIdentity> {
    let split = split_graph(g, bc, spec)?;
    let tol = opts.refine_tol;
    let full_f = evans_real(g, bc, interval)?;
    let pieces = split.counted_pieces();
    let piece_fs = pieces
        .iter()
        .map(|(_, p)| evans_real(&p.graph, &p.bc, interval))
        .collect::<Result<Vec<_>>>()?;

    for x in [interval.0, interval.1] {
        if zero_at(&full_f, x, tol)? {
            return Err(Error::EndpointOnSpectrum { endpoint: x, what: "full problem".into() });
        }
        for ((name, _), f) in pieces.iter().zip(&piece_fs) {
            if zero_at(f, x, tol)? {
                return Err(Error::EndpointOnSpectrum { endpoint: x, what: (*name).into() });
            }
        }
    }

    let full = count_zeros(&full_f, interval, opts)?;
    let mut piece_reports = Vec::new();
    for ((name, _), f) in pieces.iter().zip(&piece_fs) {
        piece_reports.push((name.to_string(), count_zeros(f, interval, opts)?));
    }
    let map = map_delta(split_map(&split), &piece_fs, interval, opts)?;
    Ok(CountingIdentity { interval, full, pieces: piece_reports, map })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_preset, EdgeSpec, Preset};
    use std::f64::consts::PI;

    fn sinc(x: f64) -> Result<f64> {
        let s = x.sqrt();
        Ok(s.sin() / s)
    }

    #[test]
    fn dirichlet_interval_zeros() {
        let r = count_zeros(sinc, (5.0, 60.0), &CountOptions::default()).unwrap();
        assert_eq!(r.count, 2);
        assert!((r.zeros[0].location - PI * PI).abs() < 1e-8);
        assert!((r.zeros[1].location - 4.0 * PI * PI).abs() < 1e-8);
    }

    #[test]
    fn no_zeros() {
        let r = count_zeros(|x: f64| Ok(1.0 + x * x), (-3.0, 3.0), &CountOptions::default()).unwrap();
        assert_eq!(r.count, 0);
    }

    #[test]
    fn tangency_counts_twice() {
        let f = |x: f64| Ok((x - 2.0).powi(2) * (x + 10.0));
        let r = count_zeros(f, (0.5, 5.0), &CountOptions::default()).unwrap();
        assert_eq!(r.count, 2, "{r:?}");
        assert_eq!(r.zeros.len(), 1);
        assert_eq!(r.zeros[0].multiplicity, 2);
    }

    #[test]
    fn endpoint_on_zero_is_nudged() {
        let r = count_zeros(sinc, (PI * PI, 60.0), &CountOptions::default()).unwrap();
        assert_eq!(r.count, 1);
        assert!(!r.warnings.is_empty());
    }

    #[test]
    fn additivity_and_refinement() {
        let opts = CountOptions::default();
        let a = count_zeros(sinc, (1.0, 30.0), &opts).unwrap().count;
        let b = count_zeros(sinc, (30.0, 200.0), &opts).unwrap().count;
        let c = count_zeros(sinc, (1.0, 200.0), &opts).unwrap().count;
        assert_eq!(a + b, c);
        let d = count_zeros(sinc, (1.0, 200.0), &opts.doubled()).unwrap().count;
        assert_eq!(c, d);
    }

    #[test]
    fn interval_eigenvalues() {
        let g = StarGraph::new(vec![EdgeSpec::free(1.0)]).unwrap();
        let bc = build_preset(&Preset::Dirichlet, 1);
        let r = count_eigenvalues(&g, &bc, (5.0, 100.0), &CountOptions::default()).unwrap();
        assert_eq!(r.count, 3);
        assert!((r.zeros[1].location - 4.0 * PI * PI).abs() < 1e-8);
    }

    #[test]
    fn merged_poles_sum_orders() {
        let roots = vec![
            Root { location: 1.0, multiplicity: 1 },
            Root { location: 1.0 + 1e-10, multiplicity: 1 },
            Root { location: 3.0, multiplicity: 1 },
        ];
        let m = merge_roots(roots, 1e-7);
        assert_eq!(m.len(), 2);
        assert_eq!(m[0].multiplicity, 2);
    }

    #[test]
    fn pole_on_boundary() {
        let map = |x: f64| Ok(x.sqrt().cos() / x.sqrt().sin());
        let den = [sinc];
        let err = map_delta(map, &den, (PI * PI, 30.0), &CountOptions::default()).unwrap_err();
        assert!(matches!(err, Error::PoleOnBoundary { .. }));
    }

    #[test]
    fn cotangent_delta() {
        // cot√λ on [1, 60]: zeros at (k+1/2)²π², poles at k²π², two of each
        let map = |x: f64| Ok(x.sqrt().cos() / x.sqrt().sin());
        let den = [sinc];
        let r = map_delta(map, &den, (1.0, 60.0), &CountOptions::default()).unwrap();
        assert_eq!(r.pole_count(), 2);
        assert_eq!(r.count, 2);
        assert_eq!(r.delta_n, 0);
    }

    #[test]
    fn cancelled_pole_is_not_counted() {
        // cot√λ·sin(√λ/2): the second factor vanishes at λ = 4π² where sin√λ does
        let map = |x: f64| Ok(x.sqrt().cos() / x.sqrt().sin() * (x.sqrt() / 2.0).sin());
        let den = [sinc];
        let r = map_delta(map, &den, (1.0, 60.0), &CountOptions::default()).unwrap();
        assert_eq!(r.pole_count(), 1);
        assert!((r.poles[0].location - PI * PI).abs() < 1e-6);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn double_denominator_zero_can_be_simple_pole() {
        let map = |x: f64| Ok(1.0 / (x - 7.0));
        let den = [|x: f64| Ok(x - 7.0), |x: f64| Ok(7.0 - x)];
        let r = map_delta(map, &den, (1.0, 20.0), &CountOptions::default()).unwrap();
        assert_eq!(r.poles.len(), 1);
        assert_eq!(r.poles[0].multiplicity, 1);
        assert_eq!(r.delta_n, -1);
    }
}
