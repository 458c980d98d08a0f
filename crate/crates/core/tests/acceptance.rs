//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use choquet::convex_order::{
    convex_order_check, is_extreme_pair, represent_coupling, representation_cost,
    strassen_coupling, OrderCertificate,
};
use choquet::instances::{convex_order_pair, mean_preserving_spread, random_measure};
use choquet::measures::{CostSpec, DiscreteMeasure, Point, PointMap};
use choquet::mot::{
    extend, gamma_certify, mot_dual, mot_dual_symmetric, mot_primal, mti_check,
    mti_second_order_check, simplex_inequality_check, uniform_convexity_certify, BoxGrid,
    CertifyOutcome, Domain, FunctionEvaluator, ModulusSpec, SecondOrderOutcome, SimplexOutcome,
};
use choquet::ot::{
    kantorovich_dual, kantorovich_primal, kr_dual, kr_tight_check, multi_c_convexify_seeded,
    multimarginal_dual, multimarginal_primal, normalize_potentials, tight_support_report, MultiCost,
    ProductCost,
};
use common::oracles::{
    affine_independence_margin, atoms_of, max_dual_violation, mti_excess, tv_distance,
};
use common::{check_lp_against_oracle, RandomLp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn sized_measure(rng: &mut ChaCha8Rng, dim: usize, atoms: std::ops::RangeInclusive<usize>) -> DiscreteMeasure {
    let n = rng.random_range(atoms);
    random_measure(rng, dim, n, 2.0)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn line(xs: &[f64], ws: &[f64]) -> DiscreteMeasure {
    DiscreteMeasure::on_line(xs, ws).unwrap()
}

fn ot_cost(i: usize) -> CostSpec {
    match i % 3 {
        0 => CostSpec::euclidean(),
        1 => CostSpec::sq_euclidean(),
        _ => CostSpec::manhattan(),
    }
}

struct OtInstance {
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    cost: CostSpec,
}

fn ot_instances() -> Vec<OtInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    (0..50)
        .map(|i| {
            let dim = rng.random_range(1..=3);
            let m = rng.random_range(1..=12);
            let n = rng.random_range(1..=12);
            OtInstance {
                mu: random_measure(&mut rng, dim, m, 2.0),
                nu: random_measure(&mut rng, dim, n, 2.0),
                cost: ot_cost(i),
            }
        })
        .collect()
}

fn criterion_1_and_2() -> (Check, Check) {
    let start = Instant::now();
    let mut worst_gap: f64 = 0.0;
    let mut worst_off: f64 = 0.0;
    let mut c1: Result<(), String> = Ok(());
    let mut c2: Result<(), String> = Ok(());
    for (k, inst) in ot_instances().iter().enumerate() {
        let (pi, p) = kantorovich_primal(&inst.mu, &inst.nu, &inst.cost).unwrap();
        let (pots, d) = kantorovich_dual(&inst.mu, &inst.nu, &inst.cost).unwrap();
        let gap = (p - d).abs();
        worst_gap = worst_gap.max(gap / (1.0 + p.abs()));
        let viol = max_dual_violation(
            pots.phi.values(),
            &inst.mu,
            pots.psi.values(),
            &inst.nu,
            &inst.cost,
        );
        if c1.is_ok() && (gap > 1e-7 * (1.0 + p.abs()) || viol > 1e-9) {
            c1 = Err(format!("instance {k}: gap {gap:e}, dual violation {viol:e}"));
        }
        let rep = tight_support_report(&pots, &pi, &inst.cost, 1e-7).unwrap();
        worst_off = worst_off.max(rep.off_tight_mass);
        if c2.is_ok() && !rep.passed {
            c2 = Err(format!("instance {k}: off-tight mass {:e}", rep.off_tight_mass));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let c1 = c1
        .and_then(|_| ensure(secs < 5.0, || format!("runtime {secs:.2}s exceeds 5s")))
        .map(|_| format!("50 instances, max relative gap {worst_gap:.2e}, {secs:.2}s"));
    let c2 = c2.map(|_| format!("50 couplings tight, max off-tight mass {worst_off:.2e}"));
    (c1, c2)
}

fn criterion_3() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let dim = rng.random_range(1..=3);
        let mu = sized_measure(&mut rng, dim, 1..=8);
        let nu = sized_measure(&mut rng, dim, 1..=8);
        let metric = match k % 3 {
            0 => CostSpec::euclidean(),
            1 => CostSpec::manhattan(),
            _ => CostSpec::truncated_euclidean(1.5).unwrap(),
        };
        let kr = kr_dual(&mu, &nu, &metric).map_err(|e| e.to_string())?;
        let (_, two) = kantorovich_dual(&mu, &nu, &metric).unwrap();
        let (pi, _) = kantorovich_primal(&mu, &nu, &metric).unwrap();
        let gap = (kr.value - two).abs();
        worst = worst.max(gap);
        ensure(gap <= 1e-7, || format!("instance {k}: values differ by {gap:e}"))?;
        for (x, fx) in kr.f.iter() {
            for (y, fy) in kr.f.iter() {
                let d = metric.evaluate(x, y).unwrap();
                ensure(fx - fy <= d + 1e-9, || format!("instance {k}: potential not 1-Lipschitz"))?;
            }
        }
        ensure(kr_tight_check(&kr.f, &pi, &metric, 1e-7).unwrap(), || {
            format!("instance {k}: tightness check failed")
        })?;
    }
    Ok(format!("20 metric instances, max |single − two| {worst:.2e}, all tight"))
}

fn criterion_4() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    let mut sizes = Vec::new();
    for k in 0..8 {
        let marginals = if k < 4 { 3 } else { 4 };
        let dim = rng.random_range(1..=2);
        let ms: Vec<DiscreteMeasure> = (0..marginals)
            .map(|_| sized_measure(&mut rng, dim, 2..=6))
            .collect();
        let cost = MultiCost::PairwiseSum { cost: ot_cost(k) };
        let (coupling, p) = multimarginal_primal(&ms, &cost).map_err(|e| e.to_string())?;
        let (pots, d) = multimarginal_dual(&ms, &cost).map_err(|e| e.to_string())?;
        let gap = (p - d).abs();
        worst = worst.max(gap);
        ensure(gap <= 1e-7, || format!("k={marginals}: gap {gap:e}"))?;
        let pc = ProductCost::new(ms.iter().map(|m| m.points().to_vec()).collect(), &cost).unwrap();
        let f: Vec<Vec<f64>> = pots.f.iter().map(|m| m.values().to_vec()).collect();
        let viol = pc.max_violation(&f);
        ensure(viol <= 1e-9, || format!("k={marginals}: dual violation {viol:e}"))?;
        ensure(coupling.is_marginal_consistent(), || "inconsistent coupling".into())?;
        sizes.push(coupling.shape().iter().product::<usize>());
    }
    let mut two_worst: f64 = 0.0;
    for k in 0..10 {
        let dim = rng.random_range(1..=3);
        let a = sized_measure(&mut rng, dim, 1..=6);
        let b = sized_measure(&mut rng, dim, 1..=6);
        let c = ot_cost(k);
        let (_, m) =
            multimarginal_primal(&[a.clone(), b.clone()], &MultiCost::PairwiseSum { cost: c.clone() })
                .unwrap();
        let (_, t) = kantorovich_primal(&a, &b, &c).unwrap();
        two_worst = two_worst.max((m - t).abs());
        ensure((m - t).abs() <= 1e-8, || format!("k=2 instance {k}: {m} vs {t}"))?;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 20.0, || format!("runtime {secs:.2}s exceeds 20s"))?;
    Ok(format!(
        "8 instances (k=3,4; up to {} cells), max gap {worst:.2e}; k=2 max diff {two_worst:.2e}; {secs:.2}s",
        sizes.iter().max().unwrap()
    ))
}

fn criterion_5() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_seed: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    for k in 0..12 {
        let marginals = 2 + k % 3;
        let dim = rng.random_range(1..=2);
        let supports: Vec<Vec<Point>> = (0..marginals)
            .map(|_| {
                sized_measure(&mut rng, dim, 1..=5)
                    .points()
                    .to_vec()
            })
            .collect();
        let cost = MultiCost::PairwiseSum { cost: ot_cost(k) };
        let seed: Vec<Point> = supports
            .iter()
            .map(|s| s[rng.random_range(0..s.len())].clone())
            .collect();
        let pots = multi_c_convexify_seeded(&seed, &cost, &supports).map_err(|e| e.to_string())?;
        let pc = ProductCost::new(supports.clone(), &cost).unwrap();
        let f: Vec<Vec<f64>> = pots.f.iter().map(|m| m.values().to_vec()).collect();
        let viol = pc.max_violation(&f);
        ensure(viol <= 1e-9, || format!("instance {k}: infeasible by {viol:e}"))?;
        let mut c_seed = 0.0;
        for i in 0..marginals {
            for j in i + 1..marginals {
                c_seed += ot_cost(k).evaluate(&seed[i], &seed[j]).unwrap();
            }
        }
        let sum: f64 = pots.f.iter().zip(&seed).map(|(m, p)| m.get(p).unwrap()).sum();
        worst_seed = worst_seed.max((sum - c_seed).abs());
        ensure((sum - c_seed).abs() <= 1e-9, || format!("instance {k}: seed sum {sum} vs {c_seed}"))?;
        let norm = normalize_potentials(&pots, &cost).map_err(|e| e.to_string())?;
        let bound = (marginals.max(3) as f64) * pc.sup_norm();
        for m in &norm.potentials.f {
            worst_ratio = worst_ratio.max(m.sup_norm() / bound.max(1e-300));
            ensure(m.sup_norm() <= bound + 1e-9, || {
                format!("instance {k}: sup {} exceeds {bound}", m.sup_norm())
            })?;
        }
    }
    Ok(format!(
        "12 seeded instances (k=2..4), max |Σf − c| at seed {worst_seed:.2e}, max ‖f‖∞/bound {worst_ratio:.3}"
    ))
}

struct OrderPairs {
    in_order: Vec<(DiscreteMeasure, DiscreteMeasure)>,
    not_in_order: Vec<(DiscreteMeasure, DiscreteMeasure)>,
}

fn order_pairs() -> OrderPairs {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut in_order = Vec::new();
    let mut not_in_order = Vec::new();
    for k in 0..30 {
        let dim = rng.random_range(1..=3);
        let base = rng.random_range(1..=5);
        let spreads = rng.random_range(1..=5);
        let (mu, nu) = convex_order_pair(&mut rng, dim, base, spreads);
        in_order.push((mu.clone(), nu.clone()));
        if k % 2 == 0 {
            not_in_order.push((nu, mu));
        } else {
            let shift: Vec<f64> = (0..dim)
                .map(|_| {
                    let s: f64 = rng.random_range(0.1..0.5);
                    if rng.random_bool(0.5) {
                        s
                    } else {
                        -s
                    }
                })
                .collect();
            not_in_order.push((mu, nu.translated(&shift).unwrap()));
        }
    }
    OrderPairs {
        in_order,
        not_in_order,
    }
}

fn criterion_6(pairs: &OrderPairs) -> Check {
    let mut worst_res: f64 = 0.0;
    for (k, (mu, nu)) in pairs.in_order.iter().enumerate() {
        let c = strassen_coupling(mu, nu).map_err(|e| format!("pair {k}: {e}"))?;
        let res = c.barycenter_residuals().into_iter().fold(0.0, f64::max);
        worst_res = worst_res.max(res);
        ensure(res <= 1e-9, || format!("pair {k}: residual {res:e}"))?;
    }
    let mut min_sep = f64::INFINITY;
    for (k, (mu, nu)) in pairs.not_in_order.iter().enumerate() {
        match convex_order_check(mu, nu).unwrap() {
            OrderCertificate::InOrder(_) => return Err(format!("pair {k} reported in order")),
            OrderCertificate::NotInOrder(w) => {
                let f = |p: &[f64]| {
                    w.pieces
                        .iter()
                        .map(|pc| pc.intercept + pc.slope.iter().zip(p).map(|(a, b)| a * b).sum::<f64>())
                        .fold(f64::NEG_INFINITY, f64::max)
                };
                let im: f64 = mu.atoms().map(|(p, wt)| wt * f(p)).sum();
                let inu: f64 = nu.atoms().map(|(p, wt)| wt * f(p)).sum();
                min_sep = min_sep.min(im - inu);
                ensure(im > inu + 1e-10, || format!("pair {k}: ∫f dμ={im} ∫f dν={inu}"))?;
            }
        }
    }
    Ok(format!(
        "30 spread pairs in order (max residual {worst_res:.2e}); 30 refuted, min ∫f d(μ−ν) {min_sep:.3}"
    ))
}

fn criterion_7(pairs: &OrderPairs) -> Check {
    let cost = CostSpec::euclidean();
    let mut worst_tv: f64 = 0.0;
    let mut worst_cost: f64 = 0.0;
    let mut fans = 0;
    for (k, (mu, nu)) in pairs.in_order.iter().enumerate() {
        let coupling = strassen_coupling(mu, nu).unwrap();
        let rep = represent_coupling(&coupling).map_err(|e| format!("pair {k}: {e}"))?;
        let first: Vec<(Vec<f64>, f64)> =
            rep.entries.iter().map(|e| (e.fan.center.to_vec(), e.weight)).collect();
        let second: Vec<(Vec<f64>, f64)> = rep
            .entries
            .iter()
            .flat_map(|e| e.fan.atoms.iter().zip(&e.fan.lambdas).map(move |(a, l)| (a.to_vec(), e.weight * l)))
            .collect();
        let tv = tv_distance(&first, &atoms_of(mu)).max(tv_distance(&second, &atoms_of(nu)));
        worst_tv = worst_tv.max(tv);
        ensure(tv <= 1e-9, || format!("pair {k}: recomposition TV {tv:e}"))?;
        for e in &rep.entries {
            let m = e.fan.measure().unwrap();
            let chk = is_extreme_pair(&e.fan.center, &m);
            ensure(chk.extreme, || format!("pair {k}: {:?}", chk.reason))?;
            ensure(e.fan.atoms.len() <= mu.dim() + 1, || format!("pair {k}: too many atoms"))?;
            ensure(affine_independence_margin(&e.fan.atoms) > 1e-9, || {
                format!("pair {k}: dependent atoms")
            })?;
            fans += 1;
        }
        let rc = representation_cost(&rep, &cost).unwrap();
        let direct: f64 = coupling
            .entries()
            .map(|(x, y, m)| m * cost.evaluate(x, y).unwrap())
            .sum();
        worst_cost = worst_cost.max((rc - direct).abs());
        ensure((rc - direct).abs() <= 1e-9, || format!("pair {k}: cost {rc} vs {direct}"))?;
    }
    Ok(format!(
        "{fans} fans over 30 pairs, max TV {worst_tv:.2e}, max cost mismatch {worst_cost:.2e}"
    ))
}

fn criterion_8() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for k in 0..30 {
        let dim = rng.random_range(1..=2);
        let base = rng.random_range(1..=4);
        let mu = random_measure(&mut rng, dim, base, 2.0);
        let spreads = rng.random_range(1..=(8 - base).max(1));
        let nu = mean_preserving_spread(&mut rng, &mu, spreads);
        let cost = if k % 2 == 0 { CostSpec::euclidean() } else { CostSpec::sq_euclidean() };
        let (_, p) = mot_primal(&mu, &nu, &cost).map_err(|e| format!("instance {k}: {e}"))?;
        let (dual, d) = mot_dual(&mu, &nu, &cost).map_err(|e| format!("instance {k}: {e}"))?;
        let viol = dual.max_violation(&cost).unwrap();
        ensure(viol <= 1e-9, || format!("instance {k}: dual violation {viol:e}"))?;
        let gap = (p - d).abs();
        worst = worst.max(gap / (1.0 + p.abs()));
        ensure(gap <= 1e-7 * (1.0 + p.abs()), || format!("instance {k}: gap {gap:e}"))?;
    }
    let mu = line(&[-1.0, 1.0], &[0.5, 0.5]);
    let nu = line(&[-2.0, 0.0, 2.0], &[0.25, 0.5, 0.25]);
    let (_, v) = mot_primal(&mu, &nu, &CostSpec::euclidean()).unwrap();
    ensure((v - 1.0).abs() <= 1e-9, || format!("hand-derived instance value {v}"))?;
    Ok(format!("30 instances, max relative gap {worst:.2e}; hand instance value {v}"))
}

fn criterion_9() -> Check {
    let cost = CostSpec::euclidean();
    let mut gaps = Vec::new();
    for steps in [2usize, 4, 8] {
        let h = 1.0 / steps as f64;
        let grid: Vec<f64> = (0..=2 * steps).map(|i| -1.0 + i as f64 * h).collect();
        let inner: Vec<f64> = grid.iter().copied().filter(|x| x.abs() <= 0.5).collect();
        let mu = line(&inner, &vec![1.0 / inner.len() as f64; inner.len()]);
        let nu = line(&grid, &vec![1.0 / grid.len() as f64; grid.len()]);
        ensure(convex_order_check(&mu, &nu).unwrap().is_in_order(), || {
            format!("step {h}: pair not in convex order")
        })?;
        let (_, general) = mot_dual(&mu, &nu, &cost).unwrap();
        let points: Vec<Point> = grid.iter().map(|&x| Point::scalar(x)).collect();
        let sym = mot_dual_symmetric(&mu, &nu, &cost, &points).unwrap();
        let slack = general - sym.value;
        ensure(slack >= -1e-9, || format!("step {h}: symmetric exceeds general by {:e}", -slack))?;
        gaps.push(slack);
    }
    for w in gaps.windows(2) {
        ensure(w[1] <= w[0] + 1e-9, || format!("gap increased under refinement: {gaps:?}"))?;
    }
    Ok(format!(
        "gaps (general − symmetric) at steps 1/2, 1/4, 1/8: {:.3e}, {:.3e}, {:.3e}",
        gaps[0], gaps[1], gaps[2]
    ))
}

fn samples_on(points: &[Point], f: impl Fn(&[f64]) -> f64) -> PointMap<f64> {
    PointMap::from_fn(points, |p| f(p)).unwrap()
}

fn criterion_10() -> Check {
    let xs: Vec<Point> = (0..=16).map(|i| Point::scalar(-1.0 + i as f64 / 8.0)).collect();
    let plane = BoxGrid::with_step(vec![-1.0, -1.0], vec![1.0, 1.0], 0.25).unwrap().points();
    let bump = choquet::mot::bclass_generate(
        vec![
            choquet::mot::BAtom { y: Point::scalar(0.0), a: vec![0.5], b: 0.0 },
            choquet::mot::BAtom { y: Point::scalar(0.5), a: vec![-1.0], b: -0.2 },
        ],
        CostSpec::euclidean(),
    )
    .unwrap();
    let sq = |p: &[f64]| p.iter().map(|v| v * v).sum::<f64>();
    let cases: Vec<(&str, Vec<Point>, PointMap<f64>, PointMap<f64>, CostSpec)> = vec![
        ("x², zero cost", xs.clone(), samples_on(&xs, sq), samples_on(&xs, sq), CostSpec::zero()),
        (
            "x² − 0.1 vs x², zero cost",
            xs.clone(),
            samples_on(&xs, |p| sq(p) - 0.1),
            samples_on(&xs, sq),
            CostSpec::zero(),
        ),
        (
            "−x², squared distance",
            xs.clone(),
            samples_on(&xs, |p| -sq(p)),
            samples_on(&xs, |p| -sq(p)),
            CostSpec::sq_euclidean(),
        ),
        (
            "B-class sup, euclidean",
            xs.clone(),
            bump.sample(&xs).unwrap(),
            bump.sample(&xs).unwrap(),
            CostSpec::euclidean(),
        ),
        (
            "−‖x‖ on a planar grid, euclidean",
            plane.clone(),
            samples_on(&plane, |p| -sq(p).sqrt()),
            samples_on(&plane, |p| -sq(p).sqrt()),
            CostSpec::euclidean(),
        ),
    ];
    let mut total = 0;
    for (name, pts, f1, f2, cost) in cases {
        let out = gamma_certify(&f1, &f2, &cost).unwrap();
        ensure(out.gamma().is_some(), || format!("{name}: not certified"))?;
        let dom = Domain::Finite { points: pts };
        let e1 = FunctionEvaluator::Samples(f1);
        let e2 = FunctionEvaluator::Samples(f2);
        match simplex_inequality_check(&e1, &e2, &cost, &dom, 10_000, 10).unwrap() {
            SimplexOutcome::Passed { samples, .. } => {
                ensure(samples == 10_000, || format!("{name}: only {samples} samples drawn"))?;
                total += samples;
            }
            SimplexOutcome::Violated { witness, .. } => {
                return Err(format!("{name}: violation {:e}", witness.violation))
            }
        }
    }
    let neg = FunctionEvaluator::NegQuadratic;
    let found = match simplex_inequality_check(&neg, &neg, &CostSpec::zero(), &Domain::interval(-1.0, 1.0), 1_000, 10)
        .unwrap()
    {
        SimplexOutcome::Violated { sample, witness } => {
            let bar: f64 = witness.atoms.iter().zip(&witness.lambdas).map(|(a, l)| l * a[0]).sum();
            let direct: f64 =
                -bar * bar + witness.atoms.iter().zip(&witness.lambdas).map(|(a, l)| l * a[0] * a[0]).sum::<f64>();
            ensure((direct - witness.violation).abs() < 1e-12 && direct > 1e-8, || {
                "witness does not reproduce".into()
            })?;
            sample
        }
        SimplexOutcome::Passed { .. } => return Err("no witness for −x² in 1000 samples".into()),
    };
    Ok(format!(
        "5 certified pairs, {total} sampled inequalities without violation; −x² refuted at sample {found}"
    ))
}

fn criterion_11() -> Check {
    let grid = BoxGrid::with_step(vec![-1.0], vec![1.0], 1e-3).unwrap();
    let k = grid.points();
    let g = samples_on(&k, |p| p[0] * p[0]);
    let gamma = PointMap::from_fn(&k, |p| vec![-2.0 * p[0]]).unwrap();
    let lb = FunctionEvaluator::Quadratic { q: None, b: None, c: -0.5 };
    let mut targets = vec![Point::scalar(2.0), Point::scalar(-2.0), Point::scalar(1.5)];
    targets.extend(k.iter().cloned());
    let ext = extend(&g, &CostSpec::zero(), &gamma, &targets, Some(&lb)).map_err(|e| e.to_string())?;
    let at2 = ext.base_values[0];
    let oracle = (0..=200_000)
        .map(|i| -1.0 + i as f64 * 1e-5)
        .map(|y| y * y + 2.0 * y * (2.0 - y))
        .fold(f64::NEG_INFINITY, f64::max);
    ensure((at2 - 3.0).abs() <= 1e-5, || format!("g̃(2) = {at2}"))?;
    ensure((oracle - 3.0).abs() <= 1e-5, || format!("grid oracle {oracle}"))?;
    let mut restrict: f64 = 0.0;
    for (p, v) in k.iter().zip(&ext.base_values[3..]) {
        restrict = restrict.max((v - p[0] * p[0]).abs());
    }
    ensure(restrict <= 1e-9, || format!("restriction error {restrict:e}"))?;
    for ((z, v), b) in targets.iter().zip(ext.values.values()).zip(&ext.base_values) {
        let bound = z[0] * z[0] - 0.5;
        ensure(*v >= bound && *v == b.max(bound), || format!("join fails at {z:?}"))?;
    }
    Ok(format!("g̃(2) = {at2:.12}, restriction error {restrict:.2e}, join dominates bound"))
}

fn criterion_12() -> Check {
    let sigma = ModulusSpec::Power { p: 2.0, scale: 1.0 };
    let f = FunctionEvaluator::Quadratic { q: None, b: None, c: 0.0 };
    let grids = [
        BoxGrid::with_step(vec![-1.0], vec![1.0], 0.1).unwrap(),
        BoxGrid::with_step(vec![-1.0; 2], vec![1.0; 2], 0.25).unwrap(),
        BoxGrid::with_step(vec![-1.0; 3], vec![1.0; 3], 0.5).unwrap(),
    ];
    let mut sizes = Vec::new();
    for grid in &grids {
        let out = uniform_convexity_certify(&f, &sigma, grid).unwrap();
        let gamma = out
            .gamma()
            .ok_or_else(|| format!("‖x‖² not certified in R^{}", grid.dim()))?;
        let pts = grid.points();
        for (x, g) in gamma.iter() {
            for y in &pts {
                if !grid.same_face(x, y) {
                    continue;
                }
                let d2: f64 = x.iter().zip(y.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                let lhs = x.iter().map(|v| v * v).sum::<f64>()
                    + d2
                    + g.iter().zip(y.iter().zip(x.iter())).map(|(gi, (yi, xi))| gi * (yi - xi)).sum::<f64>();
                let rhs: f64 = y.iter().map(|v| v * v).sum();
                ensure(lhs <= rhs + 1e-9, || format!("certificate fails at {x:?}, {y:?}"))?;
            }
        }
        sizes.push(pts.len());
    }
    let line_grid = BoxGrid::with_step(vec![-1.0], vec![1.0], 0.1).unwrap();
    let out = uniform_convexity_certify(&FunctionEvaluator::AbsNorm, &sigma, &line_grid).unwrap();
    let CertifyOutcome::Counterexample(cx) = out else {
        return Err("|x| certified".into());
    };
    let x = cx.x[0];
    ensure(x.abs() < 1.0, || format!("failure at boundary point {x}"))?;
    ensure(cx.constraints.len() == 2, || format!("{} constraints", cx.constraints.len()))?;
    let combo: f64 = cx.constraints.iter().map(|c| c.weight * (x - c.y[0])).sum();
    let rhs: f64 = cx.constraints.iter().map(|c| c.weight * c.rhs).sum();
    ensure(combo.abs() < 1e-9 && rhs < 0.0, || "constraint pair is not contradictory".into())?;
    Ok(format!(
        "‖x‖² certified on grids of {sizes:?} points; |x| fails at x={x:.2} via y={:.2}, {:.2}",
        cx.constraints[0].y[0], cx.constraints[1].y[0]
    ))
}

fn criterion_13() -> Check {
    let dom = Domain::Box { lower: vec![-1.0, -1.0], upper: vec![1.0, 1.0] };
    for (name, c) in [
        ("euclidean", CostSpec::euclidean()),
        ("truncated euclidean", CostSpec::truncated_euclidean(0.5).unwrap()),
    ] {
        let out = mti_check(&c, &dom, 10_000, 13).unwrap();
        ensure(out.passed(), || format!("{name} violates: {:?}", out.witness()))?;
    }
    let gap = match mti_check(&CostSpec::sq_euclidean(), &dom, 10_000, 13).unwrap() {
        SimplexOutcome::Passed { max_abs_gap, .. } => max_abs_gap,
        other => return Err(format!("squared distance: {other:?}")),
    };
    ensure(gap <= 1e-9, || format!("squared distance gap {gap:e}"))?;
    let quartic =
        CostSpec::conical(vec![(1.0, CostSpec::sq_euclidean()), (1.0, CostSpec::power(4.0).unwrap())]).unwrap();
    let neg = CostSpec::scaled(-1.0, CostSpec::euclidean()).unwrap();
    let line_dom = Domain::interval(-1.0, 1.0);
    for (name, c) in [("−euclidean", &neg), ("quartic", &quartic)] {
        let out = mti_check(c, &line_dom, 10_000, 13).unwrap();
        let w = out.witness().ok_or_else(|| format!("{name}: no witness"))?;
        let e = mti_excess(c, w.base.as_ref().unwrap(), &w.atoms, &w.lambdas);
        ensure(e > 1e-8 && (e - w.violation).abs() < 1e-12, || format!("{name}: witness excess {e}"))?;
    }
    let grid = BoxGrid::with_step(vec![-1.0], vec![1.0], 0.125).unwrap();
    let second = |c: &CostSpec| mti_second_order_check(c, &grid, 1e-3).unwrap();
    ensure(matches!(second(&quartic), SecondOrderOutcome::Violated { .. }), || {
        "second-order check passes the quartic".into()
    })?;
    for c in [CostSpec::sq_euclidean(), CostSpec::linear(vec![1.5]).unwrap()] {
        ensure(matches!(second(&c), SecondOrderOutcome::Passed { .. }), || {
            format!("second-order check flags {:?}", c.kind())
        })?;
    }
    Ok(format!(
        "metrics pass 10^4 samples, squared distance max gap {gap:.2e}, −euclidean and quartic refuted, Hessian check consistent"
    ))
}

fn criterion_14() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut counts = [0usize; 3];
    for k in 0..100 {
        let inst = RandomLp::sample(&mut rng);
        check_lp_against_oracle(&inst).map_err(|e| format!("LP {k}: {e}"))?;
        let sol = choquet::lp::solve(&inst.program(), &Default::default()).unwrap();
        counts[sol.status as usize] += 1;
    }
    Ok(format!(
        "100 LPs agree with vertex enumeration ({} optimal, {} infeasible, {} unbounded)",
        counts[0], counts[1], counts[2]
    ))
}

fn run(results: &mut Vec<bool>, id: usize, name: &str, f: impl FnOnce() -> Check) {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(format!("panicked: {msg}"))
    });
    report(results, id, name, outcome, start.elapsed().as_secs_f64());
}

fn report(results: &mut Vec<bool>, id: usize, name: &str, outcome: Check, secs: f64) {
    let (tag, detail) = match &outcome {
        Ok(d) => ("PASS", d.as_str()),
        Err(d) => ("FAIL", d.as_str()),
    };
    println!("{tag} [{id:>2}] {name}: {detail} ({secs:.2}s)");
    results.push(outcome.is_ok());
}

fn main() {
    let start = Instant::now();
    let mut results = Vec::new();
    let t = Instant::now();
    let (c1, c2) = catch_unwind(criterion_1_and_2)
        .unwrap_or_else(|_| (Err("panicked".into()), Err("panicked".into())));
    let secs = t.elapsed().as_secs_f64();
    report(&mut results, 1, "OT strong duality", c1, secs);
    report(&mut results, 2, "tight support of optimal couplings", c2, secs);
    run(&mut results, 3, "Kantorovich–Rubinstein single potential", criterion_3);
    run(&mut results, 4, "multimarginal duality", criterion_4);
    run(&mut results, 5, "seeded c-convexification and normalization", criterion_5);
    let pairs = order_pairs();
    run(&mut results, 6, "convex order and martingale couplings", || criterion_6(&pairs));
    run(&mut results, 7, "fan decomposition", || criterion_7(&pairs));
    run(&mut results, 8, "martingale transport duality", criterion_8);
    run(&mut results, 9, "symmetric dual under grid refinement", criterion_9);
    run(&mut results, 10, "gamma certificates imply simplex inequalities", criterion_10);
    run(&mut results, 11, "extension operator", criterion_11);
    run(&mut results, 12, "uniform convexity certification", criterion_12);
    run(&mut results, 13, "martingale triangle inequality", criterion_13);
    run(&mut results, 14, "LP against vertex enumeration", criterion_14);
    let total = start.elapsed().as_secs_f64();
    let passed = results.iter().filter(|r| **r).count();
    let under = total < 60.0;
    println!(
        "{} total runtime {total:.2}s (limit 60s); {passed}/{} criteria passed",
        if under { "PASS" } else { "FAIL" },
        results.len()
    );
    if passed != results.len() || !under {
        std::process::exit(1);
    }
}
