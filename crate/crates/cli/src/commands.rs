use choquet::convex_order::{
    choquet_represent, convex_order_check, representation_cost, strassen_coupling, OrderCertificate,
};
use choquet::measures::{CostSpec, DiscreteMeasure, Point, PointMap};
use choquet::mot::{
    bclass_generate, extend, gamma_certify, gamma_certify_on_grid, mot_dual, mot_dual_symmetric,
    mot_primal, mti_check, mti_second_order_check, simplex_inequality_check,
    uniform_convexity_certify, uniform_smoothness_certify, BAtom, BoxGrid, CertifyOutcome, Domain,
    FunctionEvaluator, ModulusSpec, SecondOrderOutcome,
};
use choquet::ot::{
    kantorovich_dual, kantorovich_primal, kr_dual, kr_tight_check, multi_c_convexify,
    multimarginal_dual, multimarginal_primal, normalize_potentials, tight_support_report, MultiCost,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::input::{self, diagnostic, Source};
use crate::report::Table;
use crate::{CliError, Global, MeasuresArgs, Outcome, PairArgs, SampleSet};

type Inputs = Map<String, Value>;

fn to_json<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("library types serialize to JSON")
}

fn record(inputs: &mut Inputs, key: &str, src: &Source) {
    inputs.insert(key.into(), src.value.clone());
}

fn done(results: Value) -> Result<Outcome, CliError> {
    Ok(Outcome { results, negative: false, table: None })
}

fn load_pair(a: &PairArgs, inputs: &mut Inputs) -> Result<(DiscreteMeasure, DiscreteMeasure, CostSpec), CliError> {
    let (mu, nu) = load_measures(&a.mu, &a.nu, inputs)?;
    let cost = load_cost("cost", &a.cost, inputs)?;
    Ok((mu, nu, cost))
}

fn load_measures(mu: &str, nu: &str, inputs: &mut Inputs) -> Result<(DiscreteMeasure, DiscreteMeasure), CliError> {
    let ((mu, ms), (nu, ns)) = input::measure_pair(mu, nu)?;
    record(inputs, "mu", &ms);
    record(inputs, "nu", &ns);
    Ok((mu, nu))
}

fn load_cost(flag: &str, arg: &str, inputs: &mut Inputs) -> Result<CostSpec, CliError> {
    let (cost, src) = input::load::<CostSpec>(flag, arg)?;
    record(inputs, flag, &src);
    Ok(cost)
}

fn load_evaluator(flag: &str, arg: &str, inputs: &mut Inputs) -> Result<FunctionEvaluator, CliError> {
    let (f, src) = input::load::<FunctionEvaluator>(flag, arg)?;
    record(inputs, flag, &src);
    Ok(f)
}

fn load_points(flag: &str, arg: &str, inputs: &mut Inputs) -> Result<Vec<Point>, CliError> {
    let (pts, src) = input::points(flag, arg)?;
    record(inputs, flag, &src);
    Ok(pts)
}

fn load_domain(arg: &str, inputs: &mut Inputs) -> Result<Domain, CliError> {
    let (d, src) = input::load::<Domain>("domain", arg)?;
    d.validate().map_err(|e| diagnostic(&src.label, "/", e))?;
    record(inputs, "domain", &src);
    Ok(d)
}

#[derive(Deserialize)]
struct GridSpec {
    lower: Vec<f64>,
    upper: Vec<f64>,
    counts: Option<Vec<usize>>,
    step: Option<f64>,
}

fn load_grid(arg: &str, inputs: &mut Inputs) -> Result<BoxGrid, CliError> {
    let (spec, src) = input::load::<GridSpec>("grid", arg)?;
    let grid = match (spec.counts, spec.step) {
        (Some(c), None) => BoxGrid::new(spec.lower, spec.upper, c),
        (None, Some(s)) => BoxGrid::with_step(spec.lower, spec.upper, s),
        _ => return Err(diagnostic(&src.label, "/", "give exactly one of \"counts\" or \"step\"")),
    }
    .map_err(|e| diagnostic(&src.label, "/", e))?;
    record(inputs, "grid", &src);
    Ok(grid)
}

/// Sample points from `--points` or `--grid`, with the grid when one was given.
fn load_set(set: &SampleSet, inputs: &mut Inputs) -> Result<(Vec<Point>, Option<BoxGrid>), CliError> {
    match (&set.points, &set.grid) {
        (Some(p), None) => Ok((load_points("points", p, inputs)?, None)),
        (None, Some(g)) => {
            let grid = load_grid(g, inputs)?;
            Ok((grid.points(), Some(grid)))
        }
        _ => Err(CliError::Input("give exactly one of --points or --grid".into())),
    }
}

fn gamma_table(gamma: &PointMap<Vec<f64>>) -> Table {
    let dim = gamma.points().first().map_or(0, Point::dim);
    let mut header: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    header.extend((0..dim).map(|i| format!("gamma{i}")));
    let rows = gamma
        .iter()
        .map(|(p, g)| p.iter().copied().chain(g.iter().copied()).collect())
        .collect();
    Table { header, rows }
}

fn certify_outcome(out: CertifyOutcome, extra: Map<String, Value>) -> Result<Outcome, CliError> {
    let table = out.gamma().map(gamma_table);
    let negative = table.is_none();
    let mut results = extra;
    results.insert("certified".into(), Value::Bool(!negative));
    results.insert("outcome".into(), to_json(&out));
    Ok(Outcome { results: Value::Object(results), negative, table })
}

pub fn ot_solve(a: &PairArgs, g: &Global, inputs: &mut Inputs) -> Result<Outcome, CliError> {
    let (mu, nu, cost) = load_pair(a, inputs)?;
    let (coupling, value) = kantorovich_primal(&mu, &nu, &cost)?;
    let (pots, dual_value) = kantorovich_dual(&mu, &nu, &cost)?;
    let tight = tight_support_report(&pots, &coupling, &cost, g.tol)?;
    done(json!({
        "value": value,
        "dual_value": dual_value,
        "gap": (value - dual_value).abs(),
        "coupling": to_json(&coupling),
        "potentials": to_json(&pots),
        "tight_support": to_json(&tight),
    }))
}

pub fn ot_dual(a: &PairArgs, inputs: &mut Inputs) -> Result<Outcome, CliError> {
    let (mu, nu, cost) = load_pair(a, inputs)?;
    let (pots, value) = kantorovich_dual(&mu, &nu, &cost)?;
    done(json!({ "value": value, "potentials": to_json(&pots) }))
}

pub fn ot_kr(a: &PairArgs, g: &Global, inputs: &mut Inputs) -> Result<Outcome, CliError> {
    let (mu, nu, metric) = load_pair(a, inputs)?;
    let kr = kr_dual(&mu, &nu, &metric)?;
    let (coupling, primal) = kantorovich_primal(&mu, &nu, &metric)?;
    let tight = kr_tight_check(&kr.f, &coupling, &metric, g.tol)?;
    done(json!({
        "value": kr.value,
        "primal_value": primal,
        "gap": (kr.value - primal).abs(),
        "potential": to_json(&kr.f),
        "coupling": to_json(&coupling),
        "tight": tight,
    }))
}

fn multi_cost(src: &Source) -> Result<MultiCost, CliError> {
    match src.value.get("kind").and_then(Value::as_str) {
        Some("pairwise_sum" | "tensor") => src.parse(),
        _ => Ok(MultiCost::PairwiseSum { cost: src.parse()? }),
    }
}

pub fn ot_multi(measures: &[String], cost: &str, inputs: &mut Inputs) -> Result<Outcome, CliError> {
    let mut ms = Vec::new();
    let mut echoed = Vec::new();
    for (i, arg) in measures.iter().enumerate() {
        let (m, src) = input::measure(&format!("measure[{i}]"), arg)?;
        if let Some(first) = ms.first().map(DiscreteMeasure::dim) {
            if m.dim() != first {
                return Err(CliError::Input(format!(
                    "dimension mismatch: {} has dim {} but the first measure has dim {first}",
                    src.label,
                    m.dim()
                )));
            }
        }
        echoed.push(src.value.clone());
        ms.push(m);
    }
    inputs.insert("measures".into(), Value::Array(echoed));
    let src = input::source("cost", cost)?;
    let cost = multi_cost(&src)?;
    record(inputs, "cost", &src);
    let (coupling, value) = multimarginal_primal(&ms, &cost)?;
    let (pots, dual_value) = multimarginal_dual(&ms, &cost)?;
    let supports: Vec<Vec<Point>> = ms.iter().map(|m| m.points().to_vec()).collect();
    let convex = multi_c_convexify(&pots.f, &cost, &supports)?;
    let normalized = match normalize_potentials(&convex, &cost) {
        Ok(n) => to_json(&n),
        Err(e) => json!({ "error": e.to_string() }),
    };
    done(json!({
        "value": value,
        "dual_value": dual_value,
        "gap": (value - dual_value).abs(),
        "coupling": to_json(&coupling),
        "potentials": to_json(&pots),
        "convexified": to_json(&convex),
        "normalized": normalized,
    }))
}

pub fn order_check(a: &MeasuresArgs, inputs: &mut Inputs) -> Result<Outcome, CliError> {
    let (mu, nu) = load_measures(&a.mu, &a.nu, inputs)?;
    Ok(match convex_order_check(&mu, &nu)? {
        OrderCertificate::InOrder(c) => Outcome {
            results: json!({
                "in_order": true,
                "coupling": to_json(&c),
                "max_barycenter_residual": c.barycenter_residuals().into_iter().fold(0.0, f64::max),
            }),
            negative: false,
            table: None,
        },
        OrderCertificate::NotInOrder(w) => Outcome {
            results: json!({ "in_order": false, "witness": to_json(&w) }),
            negative: true,
            table: None,
        },
    })
}

pub fn order_couple(a: &MeasuresArgs, inputs: &mut Inputs) -> Result<Outcome, CliError> {
    let (mu, nu) = load_measures(&a.mu, &a.nu, inputs)?;
    let c = strassen_coupling(&mu, &nu)?;
    let residuals = c.barycenter_residuals();
    done(json!({
        "coupling": to_json(&c),
        "max_barycenter_residual": residuals.iter().copied().fold(0.0, f64::max),
        "barycenter_residuals": residuals,
    }))
}

pub fn order_decompose(a: &MeasuresArgs, cost: Option<&str>, inputs: &mut Inputs) -> Result<Outcome, CliError> {
    let (mu, nu) = load_measures(&a.mu, &a.nu, inputs)?;
    let cost = cost.map(|c| load_cost("cost", c, inputs)).transpose()?;
    let rep = choquet_represent(&mu, &nu)?;
    let mut results = json!({
        "fans": rep.entries.len(),
        "recomposition_error": rep.recomposition_error(&mu, &nu),
        "representation": to_json(&rep),
    });
    if let Some(c) = cost {
        results["cost"] = json!(representation_cost(&rep, &c)?);
    }
    done(results)
}

pub fn mot_solve(a: &PairArgs, inputs: &mut Inputs) -> Result<Outcome, CliError> {
    let (mu, nu, cost) = load_pair(a, inputs)?;
    let (coupling, value) = mot_primal(&mu, &nu, &cost)?;
    done(json!({
        "value": value,
        "coupling": to_json(&coupling),
        "max_barycenter_residual": coupling.barycenter_residuals().into_iter().fold(0.0, f64::max),
    }))
}

pub fn mot_dual_cmd(a: &PairArgs, inputs: &mut Inputs) -> Result<Outcome, CliError> {
    let (mu, nu, cost) = load_pair(a, inputs)?;
    let (dual, value) = mot_dual(&mu, &nu, &cost)?;
    done(json!({
        "value": value,
        "max_violation": dual.max_violation(&cost)?,
        "dual": to_json(&dual),
    }))
}

pub fn mot_dual_sym(a: &PairArgs, extra: Option<&str>, inputs: &mut Inputs) -> Result<Outcome, CliError> {
    let (mu, nu, cost) = load_pair(a, inputs)?;
    let extra = extra.map(|e| load_points("extra", e, inputs)).transpose()?.unwrap_or_default();
    let sym = mot_dual_symmetric(&mu, &nu, &cost, &extra)?;
    let (_, general) = mot_dual(&mu, &nu, &cost)?;
    done(json!({
        "value": sym.value,
        "general_value": general,
        "gap": general - sym.value,
        "dual": to_json(&sym),
    }))
}

pub fn class_check(
    f1: &str,
    f2: Option<&str>,
    cost: &str,
    domain: &str,
    g: &Global,
    inputs: &mut Inputs,
) -> Result<Outcome, CliError> {
    let e1 = load_evaluator("f1", f1, inputs)?;
    let e2 = f2.map(|f| load_evaluator("f2", f, inputs)).transpose()?.unwrap_or_else(|| e1.clone());
    let cost = load_cost("cost", cost, inputs)?;
    let domain = load_domain(domain, inputs)?;
    let out = simplex_inequality_check(&e1, &e2, &cost, &domain, g.samples, g.seed)?;
    Ok(Outcome { negative: !out.passed(), results: to_json(&out), table: None })
}

pub fn class_certify(
    f1: &str,
    f2: Option<&str>,
    cost: &str,
    set: &SampleSet,
    inputs: &mut Inputs,
) -> Result<Outcome, CliError> {
    let e1 = load_evaluator("f1", f1, inputs)?;
    let e2 = f2.map(|f| load_evaluator("f2", f, inputs)).transpose()?.unwrap_or_else(|| e1.clone());
    let cost = load_cost("cost", cost, inputs)?;
    let (pts, grid) = load_set(set, inputs)?;
    let s1 = e1.sample(&pts)?;
    let s2 = e2.sample(&pts)?;
    let out = match &grid {
        Some(grid) => gamma_certify_on_grid(&s1, &s2, &cost, grid)?,
        None => gamma_certify(&s1, &s2, &cost)?,
    };
    certify_outcome(out, Map::new())
}

pub fn class_extend(
    g: &str,
    cost: &str,
    set: &SampleSet,
    targets: &str,
    gamma: Option<&str>,
    lower: Option<&str>,
    inputs: &mut Inputs,
) -> Result<Outcome, CliError> {
    let eg = load_evaluator("g", g, inputs)?;
    let cost = load_cost("cost", cost, inputs)?;
    let (pts, _) = load_set(set, inputs)?;
    let targets = load_points("targets", targets, inputs)?;
    let lower = lower.map(|l| load_evaluator("lower", l, inputs)).transpose()?;
    let samples = eg.sample(&pts)?;
    let gamma = match gamma {
        Some(arg) => {
            let (gm, src) = input::load::<PointMap<Vec<f64>>>("gamma", arg)?;
            record(inputs, "gamma", &src);
            gm
        }
        // The extension needs gamma to hold against every sample, not just same-face ones.
        None => {
            match gamma_certify(&samples, &samples, &cost)? {
                CertifyOutcome::Certified { gamma, .. } => gamma,
                CertifyOutcome::Counterexample(cx) => {
                    return Ok(Outcome {
                        results: json!({ "certified": false, "counterexample": to_json(&cx) }),
                        negative: true,
                        table: None,
                    })
                }
            }
        }
    };
    let ext = extend(&samples, &cost, &gamma, &targets, lower.as_ref())?;
    let dim = targets.first().map_or(0, Point::dim);
    let mut header: Vec<String> = (0..dim).map(|i| format!("z{i}")).collect();
    header.extend(["value".to_string(), "base_value".to_string()]);
    let rows = ext
        .values
        .iter()
        .zip(&ext.base_values)
        .map(|((z, v), b)| z.iter().copied().chain([*v, *b]).collect())
        .collect();
    Ok(Outcome {
        results: json!({ "extension": to_json(&ext), "gamma": to_json(&gamma) }),
        negative: false,
        table: Some(Table { header, rows }),
    })
}

pub fn class_generate(atoms: &str, cost: &str, points: Option<&str>, inputs: &mut Inputs) -> Result<Outcome, CliError> {
    let (atoms, src) = input::load::<Vec<BAtom>>("atoms", atoms)?;
    record(inputs, "atoms", &src);
    let cost = load_cost("cost", cost, inputs)?;
    let f = bclass_generate(atoms, cost)?;
    let mut results = json!({ "evaluator": to_json(&f) });
    let mut table = None;
    if let Some(p) = points {
        let pts = load_points("points", p, inputs)?;
        let samples = f.sample(&pts)?;
        let dim = pts.first().map_or(0, Point::dim);
        let mut header: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
        header.push("value".into());
        let rows = samples.iter().map(|(p, v)| p.iter().copied().chain([*v]).collect()).collect();
        table = Some(Table { header, rows });
        results["samples"] = to_json(&samples);
    }
    Ok(Outcome { results, negative: false, table })
}

pub fn mti_check_cmd(cost: &str, domain: &str, g: &Global, inputs: &mut Inputs) -> Result<Outcome, CliError> {
    let cost = load_cost("cost", cost, inputs)?;
    let domain = load_domain(domain, inputs)?;
    let out = mti_check(&cost, &domain, g.samples, g.seed)?;
    Ok(Outcome { negative: !out.passed(), results: to_json(&out), table: None })
}

pub fn mti_hessian(cost: &str, grid: &str, h: f64, inputs: &mut Inputs) -> Result<Outcome, CliError> {
    let cost = load_cost("cost", cost, inputs)?;
    let grid = load_grid(grid, inputs)?;
    inputs.insert("h".into(), json!(h));
    let out = mti_second_order_check(&cost, &grid, h)?;
    let negative = matches!(out, SecondOrderOutcome::Violated { .. });
    Ok(Outcome { negative, results: to_json(&out), table: None })
}

pub fn modulus_certify(f: &str, sigma: &str, grid: &str, smooth: bool, inputs: &mut Inputs) -> Result<Outcome, CliError> {
    let f = load_evaluator("f", f, inputs)?;
    let (sigma, src) = input::load::<ModulusSpec>("sigma", sigma)?;
    record(inputs, "sigma", &src);
    let grid = load_grid(grid, inputs)?;
    let out = if smooth {
        uniform_smoothness_certify(&f, &sigma, &grid)?
    } else {
        uniform_convexity_certify(&f, &sigma, &grid)?
    };
    certify_outcome(out, Map::new())
}
