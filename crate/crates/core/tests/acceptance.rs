//! End-to-end acceptance checks. Runs as a plain binary so every criterion
//! prints exactly one PASS/FAIL line; exits nonzero when any fails.

use std::f64::consts::{PI, TAU};
use std::time::Instant;

use levelends_core::annulus::{laurent_from_circles, DEFAULT_WINDOW};
use levelends_core::conformal::{dirichlet_solve, SubdomainMask, DEFAULT_MAX_ITERS, SOLVER_TOL};
use levelends_core::lab::{catalog, catalog_entry, run_scenario, Analysis, AnalysisOutcome, RunReport, Scenario};
use levelends_core::levelset::{angular_limit, count_ends, AngularSector, Endpoint, Schedule};
use levelends_core::meromorphic::{
    arc_df_integral, classify_boundedness, empirically_bounded, trace_regular,
    BoundednessVerdict, TailVerdict,
};
use levelends_core::weierstrass::{extract_h, gauss_winding};
use levelends_core::{AnnulusDomain, Complex64, HarmonicField, LaurentSeries, PolarGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn run(s: &Scenario) -> RunReport {
    run_scenario(s).unwrap_or_else(|e| panic!("{}: {e}", s.name))
}

fn ok_value(r: &RunReport, a: Analysis) -> Result<&Value, String> {
    match r.result(a) {
        Some(AnalysisOutcome::Ok { value }) => Ok(value),
        Some(AnalysisOutcome::Error { kind, message }) => Err(format!("{}: {} {kind}: {message}", r.scenario.name, a.name())),
        None => Err(format!("{}: no {} result", r.scenario.name, a.name())),
    }
}

fn end_counts(v: &Value) -> Vec<u64> {
    v["counts"].as_array().unwrap().iter().map(|c| c["ends"].as_u64().unwrap()).collect()
}

/// Closed form with random complex coefficients on
/// `lo..=5` and an optional log term.
fn random_field(rng: &mut ChaCha8Rng) -> (HarmonicField, u32) {
    let lo: i32 = rng.gen_range(-5..=1);
    let terms: Vec<(i32, Complex64)> = (lo..=5)
        .map(|m| {
            let mut a = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if m == lo {
                a = a / a.norm() * rng.gen_range(0.5..1.5);
            }
            (m, a)
        })
        .collect();
    let log_coeff = if rng.gen_bool(0.5) {
        0.0
    } else {
        rng.gen_range(0.5..2.0) * if rng.gen_bool(0.5) { -1.0 } else { 1.0 }
    };
    // ω = (c/z + Σ m a_m z^{m-1}) dz
    let p = if lo < 0 {
        (1 - lo) as u32
    } else if log_coeff != 0.0 {
        1
    } else {
        0
    };
    (HarmonicField::punctured(log_coeff, LaurentSeries::from_terms(terms).unwrap()), p)
}

fn random_fields() -> Vec<(HarmonicField, u32)> {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    (0..20).map(|_| random_field(&mut rng)).collect()
}

fn pole_law() -> Check {
    let mut details = Vec::new();
    for k in 1..=4u64 {
        let mut s = catalog_entry(&format!("pole_law_k{k}")).unwrap().scenario;
        s.grid.n_radial = 1024;
        s.grid.n_angular = 2048;
        let r = run(&s);
        let p = ok_value(&r, Analysis::Pole)?["pole_order"].as_u64().unwrap();
        let ends = ok_value(&r, Analysis::Ends)?;
        let counts = end_counts(ends);
        if p != k + 1 || counts.len() != 4 || counts.iter().any(|n| *n != 2 * k) || ends["level_independent"] != true {
            return Err(format!("k = {k}: p = {p}, ends {counts:?}"));
        }
        details.push(format!("k={k} p={p} ends={}", counts[0]));
    }
    Ok(details.join(", "))
}

fn parity() -> Check {
    let mut checked = 0;
    let mut refused = Vec::new();
    for e in catalog() {
        let mut s = e.scenario.clone();
        s.analyses = vec![Analysis::Pole, Analysis::Ends];
        let r = run(&s);
        match r.result(Analysis::Ends).unwrap() {
            AnalysisOutcome::Ok { value } => {
                let counts = end_counts(value);
                if counts.iter().any(|n| n % 2 == 1) {
                    return Err(format!("{}: {counts:?}", e.name));
                }
                checked += 1;
            }
            // no count exists: f ≡ 0 has no regular level, and an essential
            // singularity has infinitely many ends
            AnalysisOutcome::Error { kind, .. }
                if is_constant(&s)
                    || (kind == "Resolution"
                        && r.result(Analysis::Pole).unwrap().error_kind() == Some("NonMeromorphicSuspected")) =>
            {
                refused.push(e.name);
            }
            AnalysisOutcome::Error { kind, message } => return Err(format!("{}: {kind}: {message}", e.name)),
        }
    }
    let grid = PolarGrid::new(1e-3, 256, 512).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (i, (f, p)) in random_fields().into_iter().enumerate() {
        let t: f64 = rng.gen_range(-1.0..1.0);
        let schedule = Schedule::default_for(&f.domain(), &grid).unwrap();
        let cx = trace_regular(&f, t, &grid).map_err(|e| format!("random field {i}: {e}"))?;
        let n = count_ends(&cx, &cx.domain, &schedule).map_err(|e| e.to_string())?;
        let expected = if p >= 2 { 2 * (p as usize - 1) } else { n };
        if n % 2 == 1 || n != expected {
            return Err(format!("random field {i} (p = {p}) at t = {t}: {n} ends"));
        }
    }
    Ok(format!("{checked} catalog scenarios (no count for {refused:?}), 20 random fields"))
}

fn is_constant(s: &Scenario) -> bool {
    matches!(&s.field, levelends_core::lab::FieldSpec::Harmonic(h) if h.log_coeff == 0.0 && h.terms.is_empty())
}

fn boundedness() -> Check {
    let mut checked = 0;
    for e in catalog() {
        let levelends_core::lab::FieldSpec::Harmonic(h) = &e.scenario.field else {
            continue;
        };
        if h.inner_radius != 0.0 {
            continue;
        }
        let mut s = e.scenario.clone();
        s.analyses = vec![Analysis::Pole, Analysis::Boundedness];
        let r = run(&s);
        let p = ok_value(&r, Analysis::Pole)?["pole_order"].as_u64().unwrap();
        let bounded = ok_value(&r, Analysis::Boundedness)?["verdict"] == "Bounded";
        if bounded != (p == 0) {
            return Err(format!("{}: p = {p}, bounded = {bounded}", e.name));
        }
        checked += 1;
    }
    for (i, (f, p)) in random_fields().into_iter().enumerate() {
        let schedule = Schedule::geometric(&f.domain(), 0.5, 1e-4, 12).unwrap();
        let verdict = classify_boundedness(&f).map_err(|e| e.to_string())?;
        let analytic = verdict == BoundednessVerdict::Bounded;
        let empirical = empirically_bounded(&f, &schedule);
        if analytic != (p == 0) || empirical != analytic {
            return Err(format!("random field {i}: p = {p}, {verdict:?}, empirical {empirical}"));
        }
    }
    Ok(format!("{checked} catalog fields, 20 random fields"))
}

fn arc_integral() -> Check {
    let grid = PolarGrid::new(1e-3, 256, 512).unwrap();
    let schedule = Schedule::default_for(&AnnulusDomain::punctured(), &grid).unwrap();
    let mut details = Vec::new();
    // along the imaginary axis |∇ Re z| = 1 and |∇ Re 1/z| = 1/r²
    for (name, terms, finite, exact) in [
        ("bounded_end", (1, 1.0), true, 1.0 - 1e-3),
        ("dipole_end", (-1, 1.0), false, 1.0 / 1e-3 - 1.0),
    ] {
        let f = HarmonicField::punctured(0.0, LaurentSeries::from_real(&[terms]));
        let cx = trace_regular(&f, 0.0, &grid).map_err(|e| e.to_string())?;
        let arc = cx
            .arcs
            .iter()
            .find(|a| a.start == Endpoint::InnerLimit || a.end == Endpoint::InnerLimit)
            .ok_or(format!("{name}: no end arc"))?;
        let d = arc_df_integral(&f, &cx, arc.id, &schedule).map_err(|e| e.to_string())?;
        let verdict_ok = (d.verdict == TailVerdict::Finite) == finite;
        let rel = (d.value - exact).abs() / exact;
        if !verdict_ok || rel > 1e-2 {
            return Err(format!("{name}: {:?}, ∫|df| = {} vs {exact}", d.verdict, d.value));
        }
        details.push(format!("{name} {:?} ({:.4} vs {exact:.4})", d.verdict, d.value));
    }
    Ok(details.join(", "))
}

fn flux() -> Check {
    let bounded = LaurentSeries::from_terms(vec![
        (0, Complex64::new(0.7, 0.0)),
        (1, Complex64::new(-0.4, 1.1)),
        (3, Complex64::new(0.2, -0.5)),
    ])
    .unwrap();
    let mut worst: f64 = 0.0;
    for c in [-2.0, 0.5, 3.0] {
        let f = HarmonicField::punctured(c, bounded.clone());
        for r in [0.3, 0.9] {
            let v = f.flux(r).map_err(|e| e.to_string())?.value;
            worst = worst.max((v - TAU * c).abs());
        }
    }
    ensure(worst < 1e-9, format!("max |flux - 2πc| = {worst:.2e}"))
}

fn laurent_recovery() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let mut idx: Vec<i32> = (-10..=10).collect();
        for i in (1..idx.len()).rev() {
            idx.swap(i, rng.gen_range(0..=i));
        }
        let terms: Vec<(i32, Complex64)> = idx[..12]
            .iter()
            .map(|&m| (m, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
            .collect();
        let s = LaurentSeries::from_terms(terms).unwrap();
        let rec = laurent_from_circles(|z| Ok(s.eval_unchecked(z)), 0.5, 0.9, 1024, DEFAULT_WINDOW)
            .map_err(|e| e.to_string())?;
        let err = (-10..=10)
            .map(|m| (rec.series.coefficient(m) - s.coefficient(m)).norm())
            .fold(0.0, f64::max);
        worst = worst.max(err / s.max_abs());
    }
    ensure(worst < 1e-10, format!("10 series, max relative error {worst:.2e}"))
}

fn angular_limits() -> Check {
    let domain = AnnulusDomain::new(0.5).unwrap();
    let f = HarmonicField::closed_form(0.0, LaurentSeries::from_real(&[(1, 1.0)]), domain);
    let mut worst: f64 = 0.0;
    for k in 0..8 {
        let xi = Complex64::from_polar(0.5, TAU * k as f64 / 8.0 + 0.1);
        for alpha in [PI / 12.0, PI / 6.0, PI / 4.0] {
            let sector = AngularSector::new(&domain, xi, alpha, 0.3).map_err(|e| e.to_string())?;
            let v = angular_limit(&f, &sector, 30)
                .map_err(|e| e.to_string())?
                .value()
                .ok_or(format!("divergent at {xi}"))?;
            worst = worst.max((v - xi.re).abs());
        }
    }
    ensure(worst < 1e-6, format!("24 sectors, max |limit - Re ξ| = {worst:.2e}"))
}

fn end_limits() -> Check {
    let r = run(&catalog_entry("boundary_pole").unwrap().scenario);
    let counts = &ok_value(&r, Analysis::Ends)?["counts"][0];
    let limits = counts["end_limits"].as_array().unwrap();
    if limits.is_empty() {
        return Err("boundary_pole: no ends".into());
    }
    let mut worst: f64 = 0.0;
    for l in limits {
        let xi = &l["verdict"]["InnerPointLimit"]["xi"];
        let (Some(re), Some(im)) = (xi[0].as_f64(), xi[1].as_f64()) else {
            return Err(format!("boundary_pole: {}", l["verdict"]));
        };
        worst = worst.max(Complex64::new(re - 0.25, im).norm());
    }
    if worst > 1e-3 {
        return Err(format!("boundary_pole: distance {worst:.2e} from 1/4"));
    }
    let r = run(&catalog_entry("spiral_end").unwrap().scenario);
    let spiral = ok_value(&r, Analysis::Ends)?["counts"][0]["end_limits"].as_array().unwrap().clone();
    let all_wild = !spiral.is_empty() && spiral.iter().all(|l| l["verdict"].get("NonConvergent").is_some());
    ensure(
        all_wild,
        format!(
            "{} ends within {worst:.1e} of 1/4, spiral {} ends NonConvergent",
            limits.len(),
            spiral.len()
        ),
    )
}

fn harmonic_measure() -> Check {
    let grid = PolarGrid::new(0.25, 256, 512).unwrap();
    let z0 = Complex64::new(0.5, 0.0);
    let mask = SubdomainMask::full_annulus(&grid, z0).map_err(|e| e.to_string())?;
    let u = dirichlet_solve(&mask, SOLVER_TOL, DEFAULT_MAX_ITERS)
        .map_err(|e| e.to_string())?
        .value_at(z0);
    if (u - 0.5).abs() > 5e-3 {
        return Err(format!("solver u(0.5) = {u}"));
    }
    let r = run(&catalog_entry("full_annulus").unwrap().scenario);
    let v = ok_value(&r, Analysis::ConformalType)?;
    let u_mc = v["u_mc"].as_f64().ok_or("no Monte Carlo estimate")?;
    if (u_mc - 0.5).abs() > 0.02 {
        return Err(format!("Monte Carlo u(0.5) = {u_mc}"));
    }
    let r = run(&catalog_entry("punctured_disk").unwrap().scenario);
    let v = ok_value(&r, Analysis::ConformalType)?;
    let eps: Vec<f64> = serde_json::from_value(v["eps"].clone()).unwrap();
    let us: Vec<f64> = serde_json::from_value(v["u"].clone()).unwrap();
    let i = eps.iter().position(|e| *e == 1e-3).ok_or("ε = 1e-3 missing")?;
    let exact = 0.5f64.ln() / 1e-3f64.ln();
    let rel = (us[i] - exact).abs() / exact;
    if rel > 0.05 || v["verdict"] != "Parabolic" {
        return Err(format!("punctured disk u = {} vs {exact}, {}", us[i], v["verdict"]));
    }
    let mut verdicts = Vec::new();
    for (nr, na) in [(65, 128), (129, 256)] {
        let mut s = catalog_entry("half_annulus").unwrap().scenario;
        s.grid.n_radial = nr;
        s.grid.n_angular = na;
        let r = run(&s);
        verdicts.push(ok_value(&r, Analysis::ConformalType)?["verdict"].as_str().unwrap_or("?").to_string());
    }
    ensure(
        verdicts.iter().all(|v| v == "Hyperbolic"),
        format!(
            "solver {u:.6}, Monte Carlo {u_mc:.5}, punctured disk {:.5} vs {exact:.5}, half annulus {verdicts:?}",
            us[i]
        ),
    )
}

fn corollary() -> Check {
    let mut details = Vec::new();
    for (name, finite) in [
        ("catenoid_end", true),
        ("planar_end", true),
        ("enneper_end", true),
        ("unbounded_H_end", false),
    ] {
        let mut s = catalog_entry(name).unwrap().scenario;
        s.analyses = vec![Analysis::Equivalence, Analysis::Curvature];
        let r = run(&s);
        let v = ok_value(&r, Analysis::Equivalence)?;
        let legs = ["finite_curvature", "bounded_h", "finite_slices"];
        let agree = legs.iter().all(|l| v[*l]["Verdict"].as_bool() == Some(finite));
        if v["pass"] != true || !agree {
            return Err(format!("{name}: {v}"));
        }
        if name == "catenoid_end" {
            let area = ok_value(&r, Analysis::Curvature)?["verdict"]["Finite"]["area"]
                .as_f64()
                .ok_or("catenoid curvature not finite")?;
            let exact = 4.0 * PI * 0.64 / 1.64;
            if (area - exact).abs() > 1e-4 {
                return Err(format!("catenoid area {area} vs {exact}"));
            }
            details.push(format!("catenoid area {area:.6} vs {exact:.6}"));
        }
    }
    details.push("3 finite + 1 infinite equivalences".into());
    Ok(details.join(", "))
}

fn winding() -> Check {
    let radii = [0.2, 0.4, 0.6, 0.9];
    let mut worst: f64 = 0.0;
    for n in -3..=3 {
        let g = |z: Complex64| z.powi(n) * (0.3 * z).exp();
        for r in radii {
            let w = gauss_winding(g, r, 512).map_err(|e| e.to_string())?;
            if w != n {
                return Err(format!("n = {n}: winding {w} at r = {r}"));
            }
        }
        let h = extract_h(g, n, &radii).map_err(|e| e.to_string())?;
        for k in 0..64 {
            let z = Complex64::from_polar(0.15 + 0.8 * k as f64 / 64.0, 2.399963 * k as f64);
            let d = h.eval_unchecked(z) - 0.3 * z;
            // H is defined up to 2πi·k
            let im = d.im - TAU * (d.im / TAU).round();
            worst = worst.max(Complex64::new(d.re, im).norm());
        }
    }
    ensure(worst < 1e-8, format!("n = -3..3 at 4 radii, max |H - 0.3z| = {worst:.2e}"))
}

fn determinism(started: Instant) -> Check {
    let pass = || -> Vec<String> {
        catalog().iter().map(|e| run(&e.scenario).deterministic_json()).collect()
    };
    let (a, b) = std::thread::scope(|s| {
        let a = s.spawn(pass);
        let b = s.spawn(pass);
        (a.join().unwrap(), b.join().unwrap())
    });
    let differ: Vec<&str> = catalog()
        .iter()
        .zip(a.iter().zip(&b))
        .filter(|(_, (x, y))| x != y)
        .map(|(e, _)| e.name)
        .collect();
    let elapsed = started.elapsed().as_secs_f64();
    if !differ.is_empty() {
        return Err(format!("reports differ: {differ:?}"));
    }
    ensure(
        elapsed < 600.0,
        format!("{} reports identical, whole suite {elapsed:.1} s", a.len()),
    )
}

fn main() {
    let started = Instant::now();
    let criteria: [(&str, fn() -> Check); 11] = [
        ("pole order and end count law", pole_law),
        ("end counts are even", parity),
        ("bounded iff no pole", boundedness),
        ("arc integral of |df|", arc_integral),
        ("flux is 2πc", flux),
        ("Laurent recovery", laurent_recovery),
        ("angular limits of Re z", angular_limits),
        ("end limit points", end_limits),
        ("harmonic measure", harmonic_measure),
        ("curvature, H and slice equivalence", corollary),
        ("Gauss winding and H", winding),
    ];
    let mut results: Vec<(String, Check, f64)> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria
            .iter()
            .map(|(name, f)| {
                s.spawn(move || {
                    let t0 = Instant::now();
                    let r = std::panic::catch_unwind(f).unwrap_or_else(|e| {
                        Err(e
                            .downcast_ref::<String>()
                            .cloned()
                            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                            .unwrap_or_else(|| "panic".into()))
                    });
                    (name.to_string(), r, t0.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let t0 = Instant::now();
    let r = determinism(started);
    results.push(("determinism and runtime".into(), r, t0.elapsed().as_secs_f64()));

    let mut failed = 0;
    for (i, (name, r, secs)) in results.iter().enumerate() {
        let (tag, detail) = match r {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag} {name} [{secs:.1} s]: {detail}", i + 1);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
