//! Minimal-surface ends from Weierstrass data `g = z^n e^H`, `dh = h dz`.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annulus::{self, AnnulusDomain, CircleSamples, LaurentSeries, PolarGrid, COEFF_THRESHOLD};
use crate::error::{LabError, Result};
use crate::field::HarmonicField;
use crate::levelset::{count_ends, Schedule};
use crate::meromorphic::{arc_df_integral, trace_regular, DfIntegral};
use crate::LevelSetComplex;

type C = Complex64;
type Vec3 = [f64; 3];

const GL_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Eight-point Gauss–Legendre on `[a, b]`.
fn gauss8<F, T>(a: f64, b: f64, mut f: F) -> T
where
    F: FnMut(f64) -> T,
    T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let mut acc = (f(mid - half * GL_NODES[0]) + f(mid + half * GL_NODES[0])) * GL_WEIGHTS[0];
    for k in 1..4 {
        acc = acc + (f(mid - half * GL_NODES[k]) + f(mid + half * GL_NODES[k])) * GL_WEIGHTS[k];
    }
    acc * half
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct CVec3([C; 3]);

impl std::ops::Add for CVec3 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl std::ops::Mul<f64> for CVec3 {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        Self([self.0[0] * k, self.0[1] * k, self.0[2] * k])
    }
}

impl CVec3 {
    fn scale(self, k: C) -> Self {
        Self([self.0[0] * k, self.0[1] * k, self.0[2] * k])
    }

    fn re(self) -> Vec3 {
        [self.0[0].re, self.0[1].re, self.0[2].re]
    }
}

/// `g(z) = z^n e^{H(z)}` and `dh = h(z) dz` on `0 < |z| ≤ R′`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeierstrassData {
    pub gauss_winding: i32,
    pub log_factor: LaurentSeries,
    pub height_form: LaurentSeries,
    pub r_prime: f64,
}

impl WeierstrassData {
    pub fn new(gauss_winding: i32, log_factor: LaurentSeries, height_form: LaurentSeries, r_prime: f64) -> Result<Self> {
        if !(r_prime > 0.0 && r_prime <= 1.0) {
            return Err(LabError::InvalidArgument(format!("working radius {r_prime} outside (0, 1]")));
        }
        let residue = height_form.coefficient(-1);
        if residue.im != 0.0 {
            return Err(LabError::SlicePeriod {
                period: -TAU * residue.im,
            });
        }
        Ok(Self {
            gauss_winding,
            log_factor: log_factor.with_validity(0.0, 1.0),
            height_form: height_form.with_validity(0.0, 1.0),
            r_prime,
        })
    }

    pub fn domain(&self) -> AnnulusDomain {
        AnnulusDomain::punctured()
    }

    pub fn g(&self, z: C) -> C {
        z.powi(self.gauss_winding) * self.log_factor.eval_unchecked(z).exp()
    }

    /// `g′/g = n/z + H′`.
    pub fn log_derivative(&self, z: C) -> C {
        self.gauss_winding as f64 / z + self.log_factor.derivative().eval_unchecked(z)
    }

    /// `log|g|`, computed without forming `g`.
    pub fn log_abs_g(&self, z: C) -> f64 {
        self.gauss_winding as f64 * z.norm().ln() + self.log_factor.eval_unchecked(z).re
    }

    pub fn h(&self, z: C) -> C {
        self.height_form.eval_unchecked(z)
    }

    /// `Φ = (½(1/g − g), (i/2)(1/g + g), 1)·h`.
    fn phi(&self, z: C) -> CVec3 {
        let g = self.g(z);
        let h = self.h(z);
        let ig = g.inv();
        CVec3([0.5 * (ig - g) * h, C::new(0.0, 0.5) * (ig + g) * h, h])
    }

    /// Metric factor `½(|g| + 1/|g|)|h|`.
    pub fn metric_factor(&self, z: C) -> f64 {
        (self.log_abs_g(z).cosh()) * self.h(z).norm()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalImmersion {
    pub grid: PolarGrid,
    pub basepoint: C,
    /// Row-major `i·n_angular + j`, angles in `[0, 2π)`.
    pub positions: Vec<Vec3>,
    /// Real periods of `(x₁, x₂, x₃)` around the core circle.
    pub periods: Vec3,
    /// Per vertex: `max(|X_s·X_θ|, ||X_s|² − |X_θ|²|) / |X_s|²` from exact tangents.
    pub conformality: Vec<f64>,
    /// Worst plaquette circulation relative to the mesh scale.
    pub path_residual: f64,
}

impl MinimalImmersion {
    pub fn position(&self, i: usize, j: usize) -> Vec3 {
        self.positions[i * self.grid.n_angular() + j % self.grid.n_angular()]
    }

    pub fn max_conformality_residual(&self) -> f64 {
        self.conformality.iter().copied().fold(0.0, f64::max)
    }

    /// Largest five-point Laplacian in `(log r, θ)` over interior vertices,
    /// with the seam unwrapped by the recorded periods.
    pub fn laplacian_residual(&self) -> f64 {
        let (nr, na) = (self.grid.n_radial(), self.grid.n_angular());
        let (hs, ht) = (self.grid.log_step(), self.grid.angle_step());
        let at = |i: usize, j: isize| -> Vec3 {
            let jj = j.rem_euclid(na as isize) as usize;
            let turns = j.div_euclid(na as isize) as f64;
            let p = self.positions[i * na + jj];
            [
                p[0] + turns * self.periods[0],
                p[1] + turns * self.periods[1],
                p[2] + turns * self.periods[2],
            ]
        };
        let mut worst = 0.0f64;
        for i in 1..nr - 1 {
            for j in 0..na as isize {
                let c = at(i, j);
                let (n, s, e, w) = (at(i + 1, j), at(i - 1, j), at(i, j + 1), at(i, j - 1));
                for k in 0..3 {
                    let lap = (n[k] + s[k] - 2.0 * c[k]) / (hs * hs) + (e[k] + w[k] - 2.0 * c[k]) / (ht * ht);
                    worst = worst.max(lap.abs());
                }
            }
        }
        worst
    }
}

/// `∫ Φ dz` along the circle `|z| = r` from `a` to `b`.
fn angular_integral(data: &WeierstrassData, r: f64, a: f64, b: f64) -> CVec3 {
    gauss8(a, b, |th| {
        let z = C::from_polar(r, th);
        data.phi(z).scale(C::new(0.0, 1.0) * z)
    })
}

/// `∫ Φ dz` along the ray at angle `th` from radius `r0` to `r1`.
fn radial_integral(data: &WeierstrassData, th: f64, r0: f64, r1: f64) -> CVec3 {
    gauss8(r0.ln(), r1.ln(), |s| {
        let z = C::from_polar(s.exp(), th);
        data.phi(z).scale(z)
    })
}

/// Path integration of the Weierstrass representation over `grid`.
///
/// From the basepoint the path runs along `|z| = |b|` to the positive real
/// axis, down the real axis (the spine), then around each grid circle.
pub fn immerse(data: &WeierstrassData, grid: &PolarGrid, basepoint: C) -> Result<MinimalImmersion> {
    if grid.r_max() > data.r_prime * (1.0 + 1e-12) {
        return Err(LabError::Domain(format!(
            "grid reaches {} beyond the working radius {}",
            grid.r_max(),
            data.r_prime
        )));
    }
    let rb = basepoint.norm();
    if !(rb > 0.0 && rb <= data.r_prime * (1.0 + 1e-12)) {
        return Err(LabError::Domain(format!("basepoint {basepoint} outside 0 < |z| ≤ R′")));
    }
    let (nr, na) = (grid.n_radial(), grid.n_angular());
    for i in 0..nr {
        for j in 0..na {
            let lambda = data.metric_factor(grid.node(i, j));
            if !(lambda >= 1e-12) {
                return Err(LabError::DegenerateMetric {
                    vertex: format!("({i}, {j}) at {}", grid.node(i, j)),
                    lambda,
                });
            }
        }
    }

    // spine: basepoint → |b| on the real axis → every grid radius
    let to_axis = angular_integral(data, rb, basepoint.arg(), 0.0);
    let mut spine = vec![CVec3::default(); nr];
    let top = nr - 1;
    spine[top] = to_axis + radial_integral(data, 0.0, rb, grid.radius(top));
    for i in (0..top).rev() {
        spine[i] = spine[i + 1] + radial_integral(data, 0.0, grid.radius(i + 1), grid.radius(i));
    }

    let rows: Vec<(Vec<Vec3>, CVec3)> = (0..nr)
        .into_par_iter()
        .map(|i| {
            let r = grid.radius(i);
            let mut acc = spine[i];
            let mut row = Vec::with_capacity(na);
            for j in 0..na {
                row.push(acc.re());
                acc = acc + angular_integral(data, r, grid.angle(j), grid.angle(j) + grid.angle_step());
            }
            let full = acc + CVec3([-spine[i].0[0], -spine[i].0[1], -spine[i].0[2]]);
            (row, full)
        })
        .collect();
    let periods = rows[top].1.re();
    let positions: Vec<Vec3> = rows.into_iter().flat_map(|(row, _)| row).collect();

    let conformality: Vec<f64> = (0..nr * na)
        .into_par_iter()
        .map(|k| {
            let z = grid.node(k / na, k % na);
            let phi = data.phi(z);
            let xs = phi.scale(z).re();
            let xt = phi.scale(C::new(0.0, 1.0) * z).re();
            let dot = xs[0] * xt[0] + xs[1] * xt[1] + xs[2] * xt[2];
            let ns = xs[0] * xs[0] + xs[1] * xs[1] + xs[2] * xs[2];
            let nt = xt[0] * xt[0] + xt[1] * xt[1] + xt[2] * xt[2];
            dot.abs().max((ns - nt).abs()) / ns
        })
        .collect();

    // circulation of Φ around every plaquette (Cauchy: zero)
    let scale = positions
        .iter()
        .map(|p| p[0].abs().max(p[1].abs()).max(p[2].abs()))
        .fold(1.0, f64::max);
    let path_residual = (0..nr - 1)
        .into_par_iter()
        .map(|i| {
            let (r0, r1) = (grid.radius(i), grid.radius(i + 1));
            let mut worst = 0.0f64;
            for j in 0..na {
                let (a, b) = (grid.angle(j), grid.angle(j) + grid.angle_step());
                let loop_sum = radial_integral(data, a, r0, r1)
                    + angular_integral(data, r1, a, b)
                    + radial_integral(data, b, r1, r0)
                    + angular_integral(data, r0, b, a);
                let c = loop_sum.re();
                worst = worst.max(c[0].abs()).max(c[1].abs()).max(c[2].abs());
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
        / scale;

    Ok(MinimalImmersion {
        grid: *grid,
        basepoint,
        positions,
        periods,
        conformality,
        path_residual,
    })
}

/// ASCII polygon mesh: a `# format_version` comment, `v x y z` lines, then
/// 1-based quads `f i j k l`.
/// Seam quads are dropped when some coordinate has a nonzero period.
pub fn write_mesh<W: Write>(imm: &MinimalImmersion, mut out: W) -> Result<()> {
    let io = |e: std::io::Error| LabError::Evaluation(format!("mesh export: {e}"));
    let (nr, na) = (imm.grid.n_radial(), imm.grid.n_angular());
    writeln!(out, "# format_version {}", crate::lab::FORMAT_VERSION).map_err(io)?;
    for p in &imm.positions {
        writeln!(out, "v {:.12e} {:.12e} {:.12e}", p[0], p[1], p[2]).map_err(io)?;
    }
    let closed = imm.periods.iter().all(|p| p.abs() < 1e-9);
    let cols = if closed { na } else { na - 1 };
    for i in 0..nr - 1 {
        for j in 0..cols {
            let v = |a: usize, b: usize| a * na + (b % na) + 1;
            writeln!(out, "f {} {} {} {}", v(i, j), v(i, j + 1), v(i + 1, j + 1), v(i + 1, j)).map_err(io)?;
        }
    }
    Ok(())
}

/// Degree of `g` around `|z| = r` from the unwrapped argument.
pub fn gauss_winding<G>(g: G, r: f64, n_samples: usize) -> Result<i32>
where
    G: Fn(C) -> C,
{
    if n_samples < 8 {
        return Err(LabError::InvalidArgument("winding needs at least 8 samples".into()));
    }
    let count = |n: usize| -> (f64, f64) {
        let mut total = 0.0;
        let mut worst = 0.0f64;
        let mut prev = g(C::new(r, 0.0)).arg();
        for k in 1..=n {
            let a = g(C::from_polar(r, TAU * k as f64 / n as f64)).arg();
            let d = (a - prev + PI).rem_euclid(TAU) - PI;
            worst = worst.max(d.abs());
            total += d;
            prev = a;
        }
        (total / TAU, worst)
    };
    let (w1, step1) = count(n_samples);
    let (w2, _) = count(2 * n_samples);
    let residual = (w1 - w1.round()).abs() + (w1 - w2).abs();
    if residual >= 0.01 || step1 > 0.5 * PI || !w1.is_finite() {
        return Err(LabError::WindingUnresolved {
            residual: residual.max(step1 / TAU),
        });
    }
    Ok(w1.round() as i32)
}

/// Recovers `H = log(z^{-n} g)` from circles of the given radii.
///
/// Phases are unwrapped around each circle from `θ = 0`, and the anchors at
/// `θ = 0` are continued along the positive real axis so every circle uses
/// the same branch.
pub fn extract_h<G>(g: G, n: i32, radii: &[f64]) -> Result<LaurentSeries>
where
    G: Fn(C) -> C,
{
    let mut radii = radii.to_vec();
    radii.sort_by(f64::total_cmp);
    if radii.len() < 2 || radii[0] <= 0.0 {
        return Err(LabError::InvalidArgument("need at least two positive radii".into()));
    }
    for &r in &radii {
        let w = gauss_winding(&g, r, 1024)?;
        if w != n {
            return Err(LabError::Branch(format!("winding {w} on |z| = {r} differs from n = {n}")));
        }
    }
    let q = |z: C| g(z) * z.powi(-n);
    let samples = 1024;

    let mut anchor = q(C::new(radii[0], 0.0)).arg();
    let mut circles = Vec::with_capacity(radii.len());
    for (k, &r) in radii.iter().enumerate() {
        if k > 0 {
            let steps = 256;
            let (s0, s1) = (radii[k - 1].ln(), r.ln());
            let mut prev = anchor;
            for t in 1..=steps {
                let s = s0 + (s1 - s0) * t as f64 / steps as f64;
                let a = q(C::new(s.exp(), 0.0)).arg();
                prev += (a - prev + PI).rem_euclid(TAU) - PI;
            }
            anchor = prev;
        }
        let mut phase = anchor;
        let mut values = Vec::with_capacity(samples);
        for j in 0..samples {
            let z = C::from_polar(r, TAU * j as f64 / samples as f64);
            let v = q(z);
            if j > 0 {
                phase += (v.arg() - phase + PI).rem_euclid(TAU) - PI;
            }
            values.push(C::new(v.norm().ln(), phase));
        }
        let closing = q(C::new(r, 0.0)).arg();
        let back = phase + (closing - phase + PI).rem_euclid(TAU) - PI;
        if (back - anchor).abs() > 1e-6 {
            return Err(LabError::Branch(format!(
                "phase on |z| = {r} does not close up (jump {})",
                back - anchor
            )));
        }
        circles.push(CircleSamples::new(r, values)?);
    }
    // a logarithm carries absolute roundoff of order eps
    let rec = annulus::laurent_from_samples_with_floor(
        &circles[0],
        circles.last().unwrap(),
        annulus::DEFAULT_WINDOW,
        COEFF_THRESHOLD,
        1.0,
    )?;
    let h = rec.series.with_validity(0.0, 1.0);

    let mut worst = 0.0f64;
    for &r in &radii {
        for k in 0..16 {
            let z = C::from_polar(r, 0.37 + TAU * k as f64 / 16.0);
            let rebuilt = z.powi(n) * h.eval_unchecked(z).exp();
            let exact = g(z);
            worst = worst.max((rebuilt - exact).norm() / exact.norm());
        }
    }
    if worst > 1e-8 {
        return Err(LabError::NumericalNonconvergence {
            context: "z^n e^H does not reproduce g".into(),
            residual: worst,
        });
    }
    Ok(h)
}

/// Radii used to recover `H` from a black-box Gauss map.
pub fn default_h_radii(r_prime: f64) -> [f64; 4] {
    [0.2 * r_prime, 0.4 * r_prime, 0.6 * r_prime, 0.9 * r_prime]
}

/// True iff `H` has no significant negative-index coefficient.
pub fn classify_h_bounded(h: &LaurentSeries, tau: f64) -> bool {
    let scale = h.max_abs().max(1.0);
    h.terms().all(|(m, a)| m >= 0 || a.norm() <= tau * scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CurvatureVerdict {
    /// Spherical area of the Gauss image; total curvature is its negative.
    Finite { area: f64 },
    InfiniteSuspected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub radii: Vec<f64>,
    /// Spherical area over `r_j ≤ |z| ≤ R′`, one per schedule radius.
    pub partial: Vec<f64>,
    pub verdict: CurvatureVerdict,
    /// `area / 4π` when finite.
    pub sphere_multiple: Option<f64>,
}

const MAX_ANGULAR: usize = 1 << 20;

/// `∫₀^{2π} |g′/g|² sech²(log|g|) r² dθ` at `r = e^s`, refined until stable.
fn angular_area_density(data: &WeierstrassData, s: f64) -> Result<f64> {
    let r = s.exp();
    let density = |n: usize, offset: usize, stride: usize| -> f64 {
        (offset..n)
            .step_by(stride)
            .map(|k| {
                let z = C::from_polar(r, TAU * k as f64 / n as f64);
                let l = data.log_abs_g(z);
                let sech = if l.abs() > 350.0 { 0.0 } else { 1.0 / l.cosh() };
                data.log_derivative(z).norm_sqr() * sech * sech * r * r
            })
            .sum()
    };
    let mut n = 256;
    let mut sum = density(n, 0, 1);
    let mut prev = sum * TAU / n as f64;
    loop {
        // new nodes are the odd ones of the doubled rule
        sum += density(2 * n, 1, 2);
        n *= 2;
        let cur = sum * TAU / n as f64;
        if (cur - prev).abs() <= 1e-12 * cur.abs().max(1e-300) || (cur == 0.0 && prev == 0.0) {
            return Ok(cur);
        }
        if n >= MAX_ANGULAR {
            return Err(LabError::NumericalNonconvergence {
                context: format!("angular quadrature of the spherical area at r = {r}"),
                residual: (cur - prev).abs(),
            });
        }
        prev = cur;
    }
}

/// Default nested radii: twelve, geometric from `R′/2` to `R′/1000`.
pub fn default_curvature_schedule(r_prime: f64) -> Result<Schedule> {
    Schedule::geometric(&AnnulusDomain::punctured(), 0.5 * r_prime, 1e-3 * r_prime, 12)
}

/// Spherical area of the Gauss image over the nested annuli `[r_j, R′]`.
///
/// Increments with ratio below 0.9 over the last six annuli count as a
/// geometric tail, which is summed in closed form.
pub fn total_curvature(data: &WeierstrassData, schedule: &Schedule) -> Result<CurvatureReport> {
    let mut bounds = vec![data.r_prime.ln()];
    bounds.extend(schedule.radii().iter().map(|r| r.ln()));
    if bounds.windows(2).any(|w| w[1] >= w[0]) {
        return Err(LabError::InvalidArgument("schedule must lie below R′".into()));
    }
    let increments: Vec<f64> = bounds
        .windows(2)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|w| -> Result<f64> {
            let (hi, lo) = (w[0], w[1]);
            let panels = ((hi - lo) / 0.05).ceil().max(1.0) as usize;
            let h = (hi - lo) / panels as f64;
            let mut total = 0.0;
            for p in 0..panels {
                let a = lo + p as f64 * h;
                let mut err = None;
                let v = gauss8(a, a + h, |s| match angular_area_density(data, s) {
                    Ok(v) => v,
                    Err(e) => {
                        if err.is_none() {
                            err = Some(e);
                        }
                        f64::NAN
                    }
                });
                if v.is_nan() {
                    return Err(err.unwrap_or(LabError::NumericalNonconvergence {
                        context: "spherical area".into(),
                        residual: f64::NAN,
                    }));
                }
                total += v;
            }
            Ok(total)
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut partial = Vec::with_capacity(increments.len());
    let mut acc = 0.0;
    for inc in &increments {
        acc += inc;
        partial.push(acc);
    }
    let tail = &increments[increments.len().saturating_sub(6)..];
    let negligible = 1e-14 * acc.max(1e-300);
    let geometric = tail
        .windows(2)
        .all(|w| (w[0] <= negligible && w[1] <= negligible) || (w[0] > 0.0 && w[1] / w[0] < 0.9));
    let verdict = if geometric {
        let (a, b) = (tail[tail.len() - 2], tail[tail.len() - 1]);
        let q = if a > 0.0 { b / a } else { 0.0 };
        CurvatureVerdict::Finite {
            area: acc + b * q / (1.0 - q),
        }
    } else {
        CurvatureVerdict::InfiniteSuspected
    };
    let sphere_multiple = match verdict {
        CurvatureVerdict::Finite { area } => Some(area / (4.0 * PI)),
        CurvatureVerdict::InfiniteSuspected => None,
    };
    Ok(CurvatureReport {
        radii: schedule.radii().to_vec(),
        partial,
        verdict,
        sphere_multiple,
    })
}

/// `{x · ν = d}` in ℝ³.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub normal: Vec3,
    pub offset: f64,
}

impl Plane {
    pub fn new(normal: Vec3, offset: f64) -> Result<Self> {
        let len = (normal[0] * normal[0] + normal[1] * normal[1] + normal[2] * normal[2]).sqrt();
        if !(len > 0.0 && len.is_finite()) {
            return Err(LabError::InvalidArgument("plane normal must be nonzero".into()));
        }
        Ok(Self {
            normal: [normal[0] / len, normal[1] / len, normal[2] / len],
            offset: offset / len,
        })
    }

    pub fn horizontal(height: f64) -> Self {
        Self {
            normal: [0.0, 0.0, 1.0],
            offset: height,
        }
    }

    pub fn is_horizontal(&self) -> bool {
        self.normal[0].abs() < 1e-12 && self.normal[1].abs() < 1e-12
    }

    pub fn parallel_to(&self, other: &Plane) -> bool {
        let [a, b, c] = self.normal;
        let [x, y, z] = other.normal;
        let cross = [b * z - c * y, c * x - a * z, a * y - b * x];
        cross.iter().map(|v| v * v).sum::<f64>() < 1e-20
    }
}

/// The height function `X·ν − d` as an exact harmonic field, built from the
/// Laurent series of `ψ = ν·Φ`.
pub fn plane_height_field(data: &WeierstrassData, plane: &Plane) -> Result<HarmonicField> {
    let nu = plane.normal;
    let psi = |z: C| -> Result<C> {
        let p = data.phi(z).0;
        Ok(p[0] * nu[0] + p[1] * nu[1] + p[2] * nu[2])
    };
    let rec = annulus::laurent_from_circles(
        psi,
        0.05 * data.r_prime,
        0.9 * data.r_prime,
        1024,
        annulus::DEFAULT_WINDOW,
    )?;
    let (residue, primitive) = rec.series.integrate();
    let scale = rec.series.max_abs().max(1.0);
    if residue.im.abs() > 1e-9 * scale {
        return Err(LabError::SlicePeriod {
            period: -TAU * residue.im,
        });
    }
    let c = residue.re;
    let base = C::new(data.r_prime, 0.0);
    let shift = -plane.offset - c * data.r_prime.ln() - primitive.eval_unchecked(base).re;
    let analytic = primitive.add(&LaurentSeries::monomial(0, C::new(shift, 0.0)));
    Ok(HarmonicField::closed_form(c, analytic, AnnulusDomain::punctured()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SliceOutcome {
    Traced {
        complex: LevelSetComplex,
        ends: usize,
        components: usize,
    },
    /// `ν·Φ` is not meromorphic at the puncture, so the slice is expected to
    /// have infinitely many curves near the end.
    InfiniteSuspected { score: f64 },
}

impl SliceOutcome {
    pub fn is_finite(&self) -> bool {
        matches!(self, Self::Traced { .. })
    }
}

/// `X⁻¹(P)` traced as the zero level of `X·ν − d`.
pub fn plane_slice(data: &WeierstrassData, plane: &Plane, grid: &PolarGrid) -> Result<SliceOutcome> {
    if grid.r_max() > data.r_prime * (1.0 + 1e-12) {
        return Err(LabError::Domain(format!(
            "slice grid reaches {} beyond the working radius {}",
            grid.r_max(),
            data.r_prime
        )));
    }
    let field = match plane_height_field(data, plane) {
        Ok(f) => f,
        Err(LabError::NonMeromorphicSuspected { score }) => return Ok(SliceOutcome::InfiniteSuspected { score }),
        Err(e) => return Err(e),
    };
    let complex = trace_regular(&field, 0.0, grid)?;
    let schedule = Schedule::default_for(&field.domain(), grid)?;
    let ends = count_ends(&complex, &complex.domain, &schedule)?;
    let components = complex.components.len();
    Ok(SliceOutcome::Traced {
        complex,
        ends,
        components,
    })
}

/// `∫_α |∂x₃/∂η| ds` along an end arc of a horizontal slice.
pub fn vertical_flux(data: &WeierstrassData, height: f64, complex: &LevelSetComplex, arc: usize) -> Result<DfIntegral> {
    let x3 = plane_height_field(data, &Plane::horizontal(height))?;
    let schedule = Schedule::default_for(&x3.domain(), &complex.grid)?;
    arc_df_integral(&x3, complex, arc, &schedule)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Leg {
    /// `true` for the finite/bounded side of the equivalence.
    Verdict(bool),
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub finite_curvature: Leg,
    pub bounded_h: Leg,
    pub finite_slices: Leg,
    pub pass: bool,
}

/// Evaluates the three equivalent conditions and checks they agree.
pub fn check_corollary_equivalence(
    data: &WeierstrassData,
    p1: &Plane,
    p2: &Plane,
    grid: &PolarGrid,
) -> Result<EquivalenceReport> {
    if p1.parallel_to(p2) {
        return Err(LabError::InvalidArgument("the two planes must not be parallel".into()));
    }
    let leg = |r: Result<bool>| match r {
        Ok(v) => Leg::Verdict(v),
        Err(e) => Leg::Failed(e.to_string()),
    };
    let finite_curvature = leg(default_curvature_schedule(data.r_prime)
        .and_then(|s| total_curvature(data, &s))
        .map(|r| matches!(r.verdict, CurvatureVerdict::Finite { .. })));
    let bounded_h = leg(extract_h(|z| data.g(z), data.gauss_winding, &default_h_radii(data.r_prime))
        .map(|h| classify_h_bounded(&h, COEFF_THRESHOLD)));
    let finite_slices = leg((|| {
        let a = plane_slice(data, p1, grid)?;
        let b = plane_slice(data, p2, grid)?;
        Ok(a.is_finite() && b.is_finite())
    })());
    let pass = match (&finite_curvature, &bounded_h, &finite_slices) {
        (Leg::Verdict(a), Leg::Verdict(b), Leg::Verdict(c)) => a == b && b == c,
        _ => false,
    };
    Ok(EquivalenceReport {
        finite_curvature,
        bounded_h,
        finite_slices,
        pass,
    })
}
