use super::*;

/// A named scenario with a one-line description of where its expected
/// behavior comes from.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub provenance: &'static str,
    pub scenario: Scenario,
}

fn harmonic(log_coeff: f64, terms: &[(i32, f64)], inner_radius: f64) -> FieldSpec {
    FieldSpec::Harmonic(HarmonicSpec {
        log_coeff,
        terms: terms.iter().map(|&(m, a)| (m, a, 0.0)).collect(),
        inner_radius,
    })
}

fn weierstrass(n: i32, h: &[(i32, f64)], dh: &[(i32, f64)], r_prime: f64) -> FieldSpec {
    FieldSpec::Weierstrass(WeierstrassSpec {
        n,
        log_factor: h.iter().map(|&(m, a)| (m, a, 0.0)).collect(),
        dh: dh.iter().map(|&(m, a)| (m, a, 0.0)).collect(),
        r_prime,
    })
}

fn scenario(name: &str, field: FieldSpec, analyses: &[Analysis], grid: GridSpec, level: f64) -> Scenario {
    Scenario {
        format_version: FORMAT_VERSION,
        name: name.to_string(),
        field,
        analyses: analyses.to_vec(),
        grid,
        level,
        tolerances: ToleranceOverrides::default(),
        seed: 0,
        options: Options::default(),
    }
}

fn entry(name: &'static str, provenance: &'static str, s: Scenario) -> CatalogEntry {
    CatalogEntry {
        name,
        provenance,
        scenario: s,
    }
}

fn with_options(mut s: Scenario, options: Options) -> Scenario {
    s.options = options;
    s
}

fn conformal(spec: ConformalSpec) -> Options {
    Options {
        conformal: Some(spec),
        ..Options::default()
    }
}

/// The builtin examples, in listing order.
pub fn catalog() -> Vec<CatalogEntry> {
    use Analysis::*;
    let puncture_grid = GridSpec::new(1e-3, 256, 512);
    let harmonic_suite = [Trace, Ends, Pole, Flux, Boundedness];
    let surface_grid = |r_prime: f64| GridSpec {
        r_min: 1e-3,
        n_radial: 256,
        n_angular: 512,
        r_max: Some(r_prime),
    };
    let mut out = vec![
        entry(
            "log_end",
            "f = log|z|: pole order 1, circles as levels, no ends, flux 2π",
            scenario("log_end", harmonic(1.0, &[], 0.0), &harmonic_suite, puncture_grid, 0.5f64.ln()),
        ),
        entry(
            "dipole_end",
            "f = Re 1/z: pole order 2, two ends at every level",
            with_options(
                scenario("dipole_end", harmonic(0.0, &[(-1, 1.0)], 0.0), &harmonic_suite, puncture_grid, 0.0),
                Options {
                    levels: Some(vec![-0.5, 0.0, 0.5, 1.3]),
                    ..Options::default()
                },
            ),
        ),
        entry(
            "quadrupole_end",
            "f = Re 1/z²: pole order 3, four ends at every level",
            with_options(
                scenario("quadrupole_end", harmonic(0.0, &[(-2, 1.0)], 0.0), &harmonic_suite, puncture_grid, 0.0),
                Options {
                    levels: Some(vec![-0.5, 0.0, 0.5, 1.3]),
                    ..Options::default()
                },
            ),
        ),
        entry(
            "bounded_end",
            "f = Re z: removable puncture, bounded, finite ∫|df| along the end arcs",
            scenario("bounded_end", harmonic(0.0, &[(1, 1.0)], 0.0), &harmonic_suite, puncture_grid, 0.0),
        ),
        entry(
            "essential_end",
            "f = Re e^{1/z} sampled as a black box: not meromorphic at the puncture",
            scenario(
                "essential_end",
                FieldSpec::Builtin("essential_end".into()),
                &[Pole, Boundedness],
                GridSpec::new(1e-2, 16, 64),
                0.0,
            ),
        ),
        entry(
            "boundary_pole",
            "f = Re 1/(z - 1/4) on A(1/4, 1): the zero level ends at the boundary point 1/4",
            with_options(
                scenario(
                    "boundary_pole",
                    FieldSpec::Builtin("boundary_pole".into()),
                    &[Trace, Ends, AngularLimits],
                    GridSpec::new(0.25 + 1e-4, 256, 512),
                    0.0,
                ),
                Options {
                    limit_schedule: Some(ScheduleSpec {
                        top: 0.25 + 0.075,
                        bottom: 0.25 + 7.5e-11,
                        count: 12,
                    }),
                    // |f′| ~ 1600 near the first boundary point, so the
                    // samples must get well below 1e-9 before they settle
                    angular: Some(AngularOptions {
                        depth: 40,
                        ..AngularOptions::default()
                    }),
                    ..Options::default()
                },
            ),
        ),
        entry(
            "spiral_end",
            "sin(θ - log log 1/(r - 1/4)): a level curve spiralling onto the inner circle",
            with_options(
                scenario(
                    "spiral_end",
                    FieldSpec::Builtin("spiral_end".into()),
                    &[Trace, Ends],
                    GridSpec::new(0.25 + 1e-4, 256, 512),
                    0.0,
                ),
                Options {
                    limit_schedule: Some(ScheduleSpec {
                        top: 0.25 + 0.075,
                        bottom: 0.25 + 7.5e-11,
                        count: 12,
                    }),
                    ..Options::default()
                },
            ),
        ),
        entry(
            "angular_re_z",
            "f = Re z on A(1/2, 1): angular limits equal Re ξ at every boundary point",
            scenario(
                "angular_re_z",
                harmonic(0.0, &[(1, 1.0)], 0.5),
                &[AngularLimits, Flux],
                GridSpec::new(0.5 + 1e-3, 64, 128),
                0.0,
            ),
        ),
        entry(
            "catenoid_end",
            "g = z, dh = dz/z, R′ = 0.8: spherical area 4π·0.64/1.64, circles as horizontal slices",
            scenario(
                "catenoid_end",
                weierstrass(1, &[], &[(-1, 1.0)], 0.8),
                &[Pole, Ends, Curvature, Slice, Equivalence],
                surface_grid(0.8),
                -1.0,
            ),
        ),
        entry(
            "planar_end",
            "g = z, dh = dz, R′ = 0.8: bounded height, finite curvature",
            scenario(
                "planar_end",
                weierstrass(1, &[], &[(0, 1.0)], 0.8),
                &[Pole, Ends, Curvature, Slice, Equivalence],
                surface_grid(0.8),
                -0.5,
            ),
        ),
        entry(
            "enneper_end",
            "g = 1/z, dh = -dz/z³, R′ = 1: pole order 3, four ends on horizontal slices",
            scenario(
                "enneper_end",
                weierstrass(-1, &[], &[(-3, -1.0)], 1.0),
                &[Pole, Ends, Curvature, Slice, Equivalence],
                surface_grid(1.0),
                -0.5,
            ),
        ),
        entry(
            "unbounded_H_end",
            "g = z e^{1/z}, dh = dz/z: H unbounded, infinite curvature, wild slices",
            scenario(
                "unbounded_H_end",
                weierstrass(1, &[(-1, 1.0)], &[(-1, 1.0)], 0.8),
                &[Curvature, Slice, Equivalence],
                surface_grid(0.8),
                -1.0,
            ),
        ),
        entry(
            "halfspace_component",
            "catenoid end cut by x₃ = -1: the lower component reaches the puncture and is parabolic",
            scenario(
                "halfspace_component",
                weierstrass(1, &[], &[(-1, 1.0)], 0.8),
                &[ConformalType],
                GridSpec {
                    r_min: 1e-2,
                    n_radial: 64,
                    n_angular: 32,
                    r_max: Some(0.8),
                },
                -1.0,
            ),
        ),
        entry(
            "half_annulus",
            "{Re z ≥ 0} in A(1/4, 1): positive harmonic measure of the inner arc, hyperbolic",
            with_options(
                scenario(
                    "half_annulus",
                    harmonic(0.0, &[(1, 1.0)], 0.0),
                    &[ConformalType],
                    GridSpec::new(0.25, 65, 128),
                    0.0,
                ),
                conformal(ConformalSpec::Level {
                    side: Side::AtLeast,
                    seed_point: [0.5, 0.0],
                    mc_walks: None,
                }),
            ),
        ),
        entry(
            "full_annulus",
            "A(1/4, 1): u(1/2) = 1/2 from the log profile",
            with_options(
                scenario(
                    "full_annulus",
                    harmonic(0.0, &[], 0.0),
                    &[ConformalType],
                    GridSpec::new(0.25, 128, 256),
                    0.0,
                ),
                conformal(ConformalSpec::FullAnnulus {
                    basepoint: [0.5, 0.0],
                    mc_walks: Some(100_000),
                    mc_grid: Some(GridSpec::new(0.25, 33, 64)),
                }),
            ),
        ),
        entry(
            "punctured_disk",
            "inner circles ε → 0 around a puncture: u_ε = log(1/2)/log ε → 0, parabolic",
            with_options(
                scenario(
                    "punctured_disk",
                    harmonic(0.0, &[], 0.0),
                    &[ConformalType],
                    GridSpec::new(1e-3, 64, 16),
                    0.0,
                ),
                conformal(ConformalSpec::Shrinking {
                    basepoint: [0.5, 0.0],
                    eps: vec![1e-2, 1e-3, 1e-4],
                    steps_per_unit_log: 16.0,
                    n_angular: 16,
                }),
            ),
        ),
    ];
    for k in 1..=4 {
        let name: &'static str = ["pole_law_k1", "pole_law_k2", "pole_law_k3", "pole_law_k4"][k - 1];
        out.push(entry(
            name,
            "f = Re z^{-k} + 0.1 log|z|: pole order k + 1 and 2k ends at every level",
            with_options(
                scenario(
                    name,
                    harmonic(0.1, &[(-(k as i32), 1.0)], 0.0),
                    &[Pole, Ends],
                    puncture_grid,
                    0.0,
                ),
                Options {
                    levels: Some(vec![-0.5, 0.0, 0.5, 1.3]),
                    ..Options::default()
                },
            ),
        ));
    }
    out
}

pub fn catalog_entry(name: &str) -> Option<CatalogEntry> {
    catalog().into_iter().find(|e| e.name == name)
}

/// `name  provenance` lines, one per entry.
pub fn list_examples() -> String {
    let entries = catalog();
    let width = entries.iter().map(|e| e.name.len()).max().unwrap_or(0);
    entries
        .iter()
        .map(|e| format!("{:width$}  {}\n", e.name, e.provenance))
        .collect()
}
