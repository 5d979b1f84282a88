//! The four commands, as functions from a validated problem to text.

use rayon::prelude::*;
use serde_json::{json, Value};

use qgraph::benchmarks;
use qgraph::counting::{count_eigenvalues, split_map, verify_counting, CountOptions, CountReport, CountingIdentity};
use qgraph::evans::{evans, x_independence_check};
use qgraph::graph::{split_graph, SplitMode, SplitResult};
use qgraph::linalg::C64;
use qgraph::maps::{minor_identity_check, verify_double_split, verify_single_split};
use qgraph::random;
use qgraph::resolvent::{build_projections, u_gamma, Resolvent};
use qgraph::Error;
use rand::Rng;

use crate::error::{CliError, CliResult};
use crate::scenario::{Problem, Scenario};
use crate::table::{num, Table};

/// Caps rayon at `QGRAPH_THREADS` when set.
pub fn thread_pool() -> rayon::ThreadPool {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var("QGRAPH_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            b = b.num_threads(n);
        }
    }
    b.build().expect("thread pool")
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `lambda, E_re, E_im` and a column pair per counted piece.
pub fn evans_table(p: &Problem) -> CliResult<Table> {
    let split = p.split.as_ref().map(|s| split_graph(&p.graph, &p.bc, s)).transpose()?;
    let pieces = split.as_ref().map(|s| s.counted_pieces()).unwrap_or_default();
    let mut header = vec!["lambda".to_string(), "E_re".into(), "E_im".into()];
    for (name, _) in &pieces {
        header.push(format!("{name}_re"));
        header.push(format!("{name}_im"));
    }
    let rows = p
        .sweep
        .points()
        .into_par_iter()
        .map(|x| {
            let mut row = vec![num(x)];
            let mut push = |e: C64| {
                row.push(num(e.re));
                row.push(num(e.im));
            };
            push(evans(&p.graph, &p.bc, real(x))?.value);
            for (_, piece) in &pieces {
                push(evans(&piece.graph, &piece.bc, real(x))?.value);
            }
            Ok(row)
        })
        .collect::<qgraph::Result<Vec<_>>>()?;
    let mut t = Table::new(header);
    for r in rows {
        t.push(r);
    }
    Ok(t)
}

fn report_json(r: &CountReport) -> Value {
    let roots = |v: &[qgraph::counting::Root]| -> Vec<Value> {
        v.iter().map(|z| json!({ "location": z.location, "multiplicity": z.multiplicity })).collect()
    };
    json!({
        "interval": [r.interval.0, r.interval.1],
        "zeros": roots(&r.zeros),
        "poles": roots(&r.poles),
        "count": r.count,
        "delta_n": r.delta_n,
        "warnings": r.warnings,
    })
}

fn locations(r: &CountReport) -> String {
    let parts: Vec<String> = r
        .zeros
        .iter()
        .map(|z| if z.multiplicity == 1 { format!("{:.6}", z.location) } else { format!("{:.6} (x{})", z.location, z.multiplicity) })
        .collect();
    parts.join(", ")
}

/// Outcome of `count`: a readable summary followed by a JSON block.
#[derive(Debug, Clone, PartialEq)]
pub struct CountOutcome {
    pub text: String,
    pub identity: Option<CountingIdentity>,
    pub json: Value,
}

impl CountOutcome {
    pub fn holds(&self) -> bool {
        self.identity.as_ref().is_none_or(|i| i.holds())
    }
}

pub fn count(p: &Problem, opts: &CountOptions) -> CliResult<CountOutcome> {
    let interval = p.sweep.interval();
    let Some(spec) = &p.split else {
        let full = count_eigenvalues(&p.graph, &p.bc, interval, opts)?;
        let text = format!("interval [{}, {}]\nfull: {} [{}]\n", interval.0, interval.1, full.count, locations(&full));
        let json = json!({ "full": report_json(&full) });
        return Ok(CountOutcome { text, identity: None, json });
    };
    let id = verify_counting(&p.graph, &p.bc, spec, interval, opts)?;
    let mut text = format!("interval [{}, {}]\n", interval.0, interval.1);
    text.push_str(&format!("full: {} [{}]\n", id.full.count, locations(&id.full)));
    for (name, r) in &id.pieces {
        text.push_str(&format!("{name}: {} [{}]\n", r.count, locations(r)));
    }
    let poles: u32 = id.map.poles.iter().map(|q| q.multiplicity).sum();
    text.push_str(&format!("map: {} zeros, {} poles, N = {}\n", id.map.count, poles, id.map.delta_n));
    for w in id.full.warnings.iter().chain(id.pieces.iter().flat_map(|(_, r)| &r.warnings)).chain(&id.map.warnings) {
        text.push_str(&format!("warning: {w}\n"));
    }
    text.push_str(&format!("{} {}\n", id.equation(), if id.holds() { "PASS" } else { "FAIL" }));
    let pieces: Vec<Value> = id
        .pieces
        .iter()
        .map(|(name, r)| {
            let mut v = report_json(r);
            v["name"] = json!(name);
            v
        })
        .collect();
    let json = json!({
        "full": report_json(&id.full),
        "pieces": pieces,
        "map": report_json(&id.map),
        "equation": id.equation(),
        "holds": id.holds(),
    });
    Ok(CountOutcome { text, identity: Some(id), json })
}

/// Checks available to `verify`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    Single,
    Double,
    Minors,
    Resolvent,
    Projections,
    Ugamma,
    Abel,
}

impl std::str::FromStr for Check {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Ok(match s {
            "single" => Check::Single,
            "double" => Check::Double,
            "minors" => Check::Minors,
            "resolvent" => Check::Resolvent,
            "projections" => Check::Projections,
            "ugamma" => Check::Ugamma,
            "abel" => Check::Abel,
            other => {
                return Err(CliError::Invalid(format!(
                    "unknown check '{other}' (single, double, minors, resolvent, projections, ugamma, abel)"
                )))
            }
        })
    }
}

struct Row {
    quantity: String,
    lambda: Option<f64>,
    residual: Option<f64>,
    tolerance: f64,
}

impl Row {
    fn new(quantity: impl Into<String>, lambda: Option<f64>, residual: f64, tolerance: f64) -> Self {
        Row { quantity: quantity.into(), lambda, residual: Some(residual), tolerance }
    }

    fn skipped(quantity: impl Into<String>, lambda: f64, tolerance: f64) -> Self {
        Row { quantity: quantity.into(), lambda: Some(lambda), residual: None, tolerance }
    }

    fn status(&self) -> &'static str {
        match self.residual {
            None => "skipped",
            Some(r) if r <= self.tolerance => "pass",
            Some(_) => "fail",
        }
    }
}

/// Exact spectral hits make a sample meaningless rather than failed.
fn on_spectrum(e: &Error) -> bool {
    matches!(e, Error::OnSpectrum { .. } | Error::PoleAtLambda { .. } | Error::NoIndependentPartner { .. })
}

fn forcing(seed: u64, n: usize) -> impl Fn(usize, f64) -> C64 + Sync {
    let mut rng = random::rng(seed);
    let params: Vec<[f64; 4]> =
        (0..n).map(|_| [rng.gen_range(-2.0..2.0), rng.gen_range(0.5..6.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
    move |j, x| {
        let [a, w, b, c] = params[j];
        C64::new(a * (w * x).sin() + c, b * (w * x).cos())
    }
}

fn rows_at(p: &Problem, check: Check, x: f64, seed: u64) -> CliResult<Vec<Row>> {
    let lambda = real(x);
    let need_split = |what: &str| CliError::Invalid(format!("check '{what}' needs a matching split in the scenario"));
    let guarded = |quantity: &str, tol: f64, r: qgraph::Result<f64>| -> CliResult<Row> {
        match r {
            Ok(v) => Ok(Row::new(quantity, Some(x), v, tol)),
            Err(e) if on_spectrum(&e) => Ok(Row::skipped(quantity, x, tol)),
            Err(e) => Err(e.into()),
        }
    };
    match check {
        Check::Single => {
            let spec = p.split.as_ref().ok_or_else(|| need_split("single"))?;
            Ok(vec![guarded("single_split", 1e-7, verify_single_split(&p.graph, &p.bc, spec.cuts[0], lambda))?])
        }
        Check::Double => {
            let spec = p.split.as_ref().filter(|s| s.mode != SplitMode::SingleCut).ok_or_else(|| need_split("double"))?;
            Ok(vec![guarded("double_split", 1e-7, verify_double_split(&p.graph, &p.bc, spec, lambda))?])
        }
        Check::Minors => {
            let spec = p.split.as_ref().ok_or_else(|| need_split("minors"))?;
            let SplitResult::TwoWires(split) = split_graph(&p.graph, &p.bc, spec)? else {
                return Err(need_split("minors"));
            };
            Ok(vec![guarded("minor_identity", 1e-8, minor_identity_check(&split, lambda))?])
        }
        Check::Resolvent | Check::Projections => {
            let v = forcing(seed, p.graph.n());
            let names: &[(&str, f64)] = if check == Check::Resolvent {
                &[("trace", 1e-8), ("ode", 1e-7), ("cramer_lu", 1e-9)]
            } else {
                &[("trace_relations", 1e-8)]
            };
            let app = match Resolvent::new(&p.graph, &p.bc, lambda).and_then(|r| {
                let a = r.apply(&v)?;
                Ok((a.trace_residual(), a.ode_residual(), a.cramer_lu_discrepancy, a.boundary_data()))
            }) {
                Ok(a) => a,
                Err(e) if on_spectrum(&e) => return Ok(names.iter().map(|(q, t)| Row::skipped(*q, x, *t)).collect()),
                Err(e) => return Err(e.into()),
            };
            if check == Check::Resolvent {
                Ok(vec![Row::new("trace", Some(x), app.0, 1e-8), Row::new("ode", Some(x), app.1, 1e-7), Row::new("cramer_lu", Some(x), app.2, 1e-9)])
            } else {
                let rel = build_projections(&p.bc)?.trace_relations(&app.3);
                Ok(vec![Row::new("trace_relations", Some(x), rel.max(), 1e-8)])
            }
        }
        Check::Ugamma => {
            let mut rows = Vec::new();
            for i in 0..2 * p.graph.n() {
                let q = format!("ugamma_{i}");
                match u_gamma(&p.graph, &p.bc, lambda, i) {
                    Ok(u) => rows.push(Row::new(q, Some(x), u.discrepancy(), 1e-7)),
                    Err(e) if on_spectrum(&e) => rows.push(Row::skipped(q, x, 1e-7)),
                    Err(e) => return Err(e.into()),
                }
            }
            Ok(rows)
        }
        Check::Abel => {
            let mut rng = random::rng(seed ^ x.to_bits());
            let mut points = vec![vec![0.0; p.graph.n()]];
            points.extend((0..5).map(|_| random::random_point(&mut rng, &p.graph)));
            Ok(vec![guarded("eval_point", 1e-9, x_independence_check(&p.graph, &p.bc, lambda, &points))?])
        }
    }
}

/// Residual table `check, quantity, lambda, residual, tolerance, status` and
/// whether every evaluated row passed.
pub fn verify(p: &Problem, check: Check, name: &str, seed: u64) -> CliResult<(Table, bool)> {
    let mut rows = Vec::new();
    if check == Check::Projections {
        let c = build_projections(&p.bc)?.checks();
        for (q, v) in [
            ("unitarity", c.unitarity),
            ("partition", c.partition),
            ("dirichlet_annihilation", c.dirichlet_annihilation),
            ("neumann_annihilation", c.neumann_annihilation),
            ("robin_hermitian", c.robin_hermitian),
            ("idempotence", c.idempotence),
        ] {
            rows.push(Row::new(q, None, v, 1e-10));
        }
    }
    let per_lambda = p
        .sweep
        .points()
        .into_par_iter()
        .map(|x| rows_at(p, check, x, seed))
        .collect::<CliResult<Vec<_>>>()?;
    rows.extend(per_lambda.into_iter().flatten());

    let mut t = Table::new(["check", "quantity", "lambda", "residual", "tolerance", "status"]);
    let mut ok = true;
    for r in &rows {
        ok &= r.status() != "fail";
        t.push(vec![
            name.to_string(),
            r.quantity.clone(),
            r.lambda.map(num).unwrap_or_default(),
            r.residual.map(num).unwrap_or_default(),
            num(r.tolerance),
            r.status().to_string(),
        ]);
    }
    Ok((t, ok))
}

/// Plot scale factors of the reference figures: `(column, curve, factor)`.
pub fn figure_scales(name: &str) -> Vec<(&'static str, &'static str, f64)> {
    match name {
        "barrier_end" => vec![
            ("full", "Evans function of the full problem", 1.0),
            ("omega1", "Evans function of the outer interval", 15.0),
            ("omega2", "Evans function of the truncated star", 10.0),
            ("map", "M1 + M2", 1.0 / 25.0),
        ],
        "barrier_interior" => vec![
            ("full", "Evans function of the full problem", 0.1),
            ("omega1", "Evans function of the outer interval", 20.0),
            ("omega1_tilde", "Evans function of the middle interval", 20.0),
            ("omega2_tilde", "Evans function of the inner star", 1.0),
            ("map", "det of the two-sided 2x2 map", 1.0 / 1000.0),
        ],
        "two_wire" => vec![
            ("full", "Evans function of the full problem", 1.0),
            ("omega1", "Evans function of the first outer interval", 100.0),
            ("omega1_tilde", "Evans function of the second outer interval", 100.0),
            ("omega2_tilde", "Evans function of the inner star", 100.0),
            ("map", "det of the two-sided 2x2 map", 10.0),
        ],
        _ => Vec::new(),
    }
}

pub const EXAMPLES: [&str; 3] = ["barrier_end", "barrier_interior", "two_wire"];

/// Scenario, unscaled curves and scale metadata for one reference problem,
/// as `(file name, contents)`.
pub fn example(name: &str, samples: usize) -> CliResult<Vec<(String, String)>> {
    let b = benchmarks::by_name(name)
        .ok_or_else(|| CliError::Invalid(format!("unknown example '{name}' ({})", EXAMPLES.join(", "))))?;
    let scenario = Scenario::from_benchmark(&b, samples);
    let p = scenario.problem()?;
    let split = split_graph(&p.graph, &p.bc, p.split.as_ref().expect("reference problems are split"))?;
    let pieces = split.counted_pieces();
    let map = split_map(&split);

    let mut header = vec!["lambda", "full"];
    header.extend(pieces.iter().map(|(n, _)| *n));
    header.push("map");
    let rows = p
        .sweep
        .points()
        .into_par_iter()
        .map(|x| {
            let mut row = vec![num(x), num(evans(&p.graph, &p.bc, real(x))?.value.re)];
            for (_, piece) in &pieces {
                row.push(num(evans(&piece.graph, &piece.bc, real(x))?.value.re));
            }
            row.push(match map(x) {
                Ok(v) => num(v),
                Err(e) if on_spectrum(&e) => "nan".into(),
                Err(e) => return Err(e),
            });
            Ok(row)
        })
        .collect::<qgraph::Result<Vec<_>>>()?;
    let mut curves = Table::new(header);
    for r in rows {
        curves.push(r);
    }

    let mut scales = Table::new(["column", "curve", "scale"]);
    for (col, curve, factor) in figure_scales(name) {
        scales.push(vec![col.into(), curve.into(), num(factor)]);
    }
    Ok(vec![
        (format!("{name}.json"), scenario.to_json()),
        (format!("{name}.csv"), curves.render()),
        (format!("{name}_scales.csv"), scales.render()),
    ])
}
