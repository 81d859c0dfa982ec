//! Parabolic or hyperbolic: harmonic measure of the ideal boundary of grid
//! subdomains, by SOR and by random walks.

use std::collections::VecDeque;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annulus::PolarGrid;
use crate::error::{LabError, Result};
use crate::field::{sample_grid, HarmonicField};
use crate::weierstrass::{plane_height_field, Plane, WeierstrassData};

pub const SOR_OMEGA: f64 = 1.9;
pub const SOLVER_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITERS: usize = 200_000;
pub const MC_STEP_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    Exterior,
    Interior,
    /// `∂Ω` inside the annulus, or the outer circle: `u = 0`.
    SurfaceBoundary,
    /// The inner grid circle standing for `∂_R`: `u = 1`.
    IdealBoundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    AtLeast,
    AtMost,
}

impl Side {
    fn holds(self, v: f64, t: f64) -> bool {
        match self {
            Side::AtLeast => v >= t,
            Side::AtMost => v <= t,
        }
    }

    fn strict(self, v: f64, t: f64) -> bool {
        match self {
            Side::AtLeast => v > t,
            Side::AtMost => v < t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubdomainMask {
    pub grid: PolarGrid,
    /// Row-major `i·n_angular + j`.
    pub kinds: Vec<NodeKind>,
    pub basepoint: Complex64,
}

fn neighbors(grid: &PolarGrid, k: usize) -> [Option<usize>; 4] {
    let na = grid.n_angular();
    let (i, j) = (k / na, k % na);
    [
        (i + 1 < grid.n_radial()).then(|| k + na),
        (i > 0).then(|| k - na),
        Some(i * na + (j + 1) % na),
        Some(i * na + (j + na - 1) % na),
    ]
}

impl SubdomainMask {
    /// Grid component of `{k : inside(k)}` containing the node nearest to
    /// `seed`, with boundary roles assigned around it.
    pub fn from_predicate<P>(grid: &PolarGrid, seed: Complex64, inside: P) -> Result<Self>
    where
        P: Fn(usize) -> bool,
    {
        let (nr, na) = (grid.n_radial(), grid.n_angular());
        let (fi, fj) = grid.locate(seed);
        let (si, sj) = (fi.round(), fj.round() as usize % na);
        if !(si >= 1.0 && si <= (nr - 2) as f64) {
            return Err(LabError::Seed(format!("seed {seed} is not inside the grid")));
        }
        let start = si as usize * na + sj;
        if !inside(start) {
            return Err(LabError::Seed(format!("grid node nearest to {seed} is outside the region")));
        }
        let mut kinds = vec![NodeKind::Exterior; nr * na];
        kinds[start] = NodeKind::Interior;
        let mut queue = VecDeque::from([start]);
        while let Some(k) = queue.pop_front() {
            for nb in neighbors(grid, k).into_iter().flatten() {
                if kinds[nb] != NodeKind::Exterior {
                    continue;
                }
                let row = nb / na;
                kinds[nb] = if !inside(nb) || row == nr - 1 {
                    NodeKind::SurfaceBoundary
                } else if row == 0 {
                    NodeKind::IdealBoundary
                } else {
                    queue.push_back(nb);
                    NodeKind::Interior
                };
            }
        }
        Ok(Self {
            grid: *grid,
            kinds,
            basepoint: seed,
        })
    }

    /// The whole grid annulus.
    pub fn full_annulus(grid: &PolarGrid, basepoint: Complex64) -> Result<Self> {
        Self::from_predicate(grid, basepoint, |_| true)
    }

    pub fn count(&self, kind: NodeKind) -> usize {
        self.kinds.iter().filter(|k| **k == kind).count()
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.kinds.len()).filter(|k| self.kinds[*k] == NodeKind::Interior)
    }

    /// Checks the mask invariants.
    pub fn validate(&self) -> Result<()> {
        let n = self.grid.n_radial() * self.grid.n_angular();
        if self.kinds.len() != n {
            return Err(LabError::InvalidArgument("mask size does not match its grid".into()));
        }
        for k in self.interior_nodes() {
            if neighbors(&self.grid, k)
                .into_iter()
                .any(|nb| nb.map_or(true, |nb| self.kinds[nb] == NodeKind::Exterior))
            {
                return Err(LabError::InvariantViolation(format!("interior node {k} touches the exterior")));
            }
        }
        Ok(())
    }
}

/// Component of `{f ≥ t}` (or `≤`) containing `seed`.
pub fn mask_from_level(
    field: &HarmonicField,
    t: f64,
    side: Side,
    seed: Complex64,
    grid: &PolarGrid,
) -> Result<SubdomainMask> {
    let at_seed = field.eval(seed)?;
    if !side.strict(at_seed, t) {
        return Err(LabError::Seed(format!(
            "f(seed) = {at_seed} does not satisfy the side condition against {t}"
        )));
    }
    let values = sample_grid(grid, |z| field.probe(z));
    SubdomainMask::from_predicate(grid, seed, |k| side.holds(values[k], t))
}

/// Solution of the discrete Dirichlet problem on a mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletSolution {
    pub grid: PolarGrid,
    pub u: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

impl DirichletSolution {
    /// Bilinear value in `(log r, θ)`.
    pub fn value_at(&self, z: Complex64) -> f64 {
        let (nr, na) = (self.grid.n_radial(), self.grid.n_angular());
        let (fi, fj) = self.grid.locate(z);
        let fi = fi.clamp(0.0, (nr - 1) as f64);
        let i0 = (fi.floor() as usize).min(nr - 2);
        let j0 = fj.floor() as usize % na;
        let (a, b) = (fi - i0 as f64, fj - fj.floor());
        let u = |i: usize, j: usize| self.u[i * na + j % na];
        (1.0 - a) * ((1.0 - b) * u(i0, j0) + b * u(i0, j0 + 1)) + a * ((1.0 - b) * u(i0 + 1, j0) + b * u(i0 + 1, j0 + 1))
    }
}

/// Red-black SOR for the five-point Laplacian in `(log r, θ)`, with `u = 0`
/// on the surface boundary and `u = 1` on the ideal boundary.
pub fn dirichlet_solve(mask: &SubdomainMask, tol: f64, max_iters: usize) -> Result<DirichletSolution> {
    mask.validate()?;
    let grid = mask.grid;
    let (nr, na) = (grid.n_radial(), grid.n_angular());
    let (hs, ht) = (grid.log_step(), grid.angle_step());
    let (wa, wb) = (1.0 / (hs * hs), 1.0 / (ht * ht));
    let diag = 2.0 * (wa + wb);
    let mut u: Vec<f64> = mask
        .kinds
        .iter()
        .map(|k| if *k == NodeKind::IdealBoundary { 1.0 } else { 0.0 })
        .collect();
    if mask.count(NodeKind::IdealBoundary) == 0 {
        return Ok(DirichletSolution {
            grid,
            u,
            iterations: 0,
            residual: 0.0,
        });
    }
    let rows_with_interior: Vec<usize> = (1..nr - 1)
        .filter(|i| (0..na).any(|j| mask.kinds[i * na + j] == NodeKind::Interior))
        .collect();

    for iter in 1..=max_iters {
        let mut residual = 0.0f64;
        for color in 0..2 {
            let updates: Vec<(usize, f64, f64)> = rows_with_interior
                .par_iter()
                .flat_map_iter(|&i| {
                    let u = &u;
                    let j0 = (i + color) % 2;
                    (j0..na).step_by(2).filter_map(move |j| {
                        let k = i * na + j;
                        if mask.kinds[k] != NodeKind::Interior {
                            return None;
                        }
                        let e = i * na + (j + 1) % na;
                        let w = i * na + (j + na - 1) % na;
                        let gs = (wa * (u[k + na] + u[k - na]) + wb * (u[e] + u[w])) / diag;
                        Some((k, u[k] + SOR_OMEGA * (gs - u[k]), (gs - u[k]).abs()))
                    })
                })
                .collect();
            for (k, v, r) in updates {
                u[k] = v;
                residual = residual.max(r);
            }
        }
        if residual < tol {
            return Ok(DirichletSolution {
                grid,
                u,
                iterations: iter,
                residual,
            });
        }
        if iter == max_iters {
            return Err(LabError::NumericalNonconvergence {
                context: format!("SOR on a {nr}×{na} mask"),
                residual,
            });
        }
    }
    unreachable!("max_iters is at least one")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConformalVerdict {
    Parabolic,
    Hyperbolic,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicMeasureReport {
    /// Value at the finer resolution.
    pub u_solver: f64,
    pub u_coarse: f64,
    pub u_mc: Option<f64>,
    pub half_width: Option<f64>,
    pub resolutions: Vec<(usize, usize)>,
    pub delta: f64,
    pub verdict: ConformalVerdict,
}

/// Solves on `grid` and on its refinement and compares `u(z₀)` with
/// `δ = 10·|u_N − u_2N| + 1e-3` unless `delta` is given.
pub fn classify_type<B>(build: B, grid: &PolarGrid, delta: Option<f64>) -> Result<HarmonicMeasureReport>
where
    B: Fn(&PolarGrid) -> Result<SubdomainMask>,
{
    let fine_grid = grid.refined();
    let coarse_mask = build(grid)?;
    let fine_mask = build(&fine_grid)?;
    let z0 = coarse_mask.basepoint;
    let uc = dirichlet_solve(&coarse_mask, SOLVER_TOL, DEFAULT_MAX_ITERS)?.value_at(z0);
    let uf = dirichlet_solve(&fine_mask, SOLVER_TOL, DEFAULT_MAX_ITERS)?.value_at(z0);
    let delta = delta.unwrap_or(10.0 * (uc - uf).abs() + 1e-3);
    let verdict = if uc > delta && uf > delta {
        ConformalVerdict::Hyperbolic
    } else if uc < delta && uf < delta && uf <= uc {
        ConformalVerdict::Parabolic
    } else {
        ConformalVerdict::Indeterminate
    };
    Ok(HarmonicMeasureReport {
        u_solver: uf,
        u_coarse: uc,
        u_mc: None,
        half_width: None,
        resolutions: vec![
            (grid.n_radial(), grid.n_angular()),
            (fine_grid.n_radial(), fine_grid.n_angular()),
        ],
        delta,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShrinkingTrend {
    pub eps: Vec<f64>,
    pub u: Vec<f64>,
    /// Least-squares `C` in `u ≈ C / log(1/ε)`.
    pub fitted_c: f64,
    /// Fit of `1/u = α + β·log(1/ε)`.
    pub alpha: f64,
    pub beta: f64,
    pub r_squared: f64,
    pub verdict: ConformalVerdict,
}

/// Harmonic measure of shrinking inner circles `r = ε`.
///
/// A puncture is parabolic: `u_ε → 0` like `1/log(1/ε)`. The verdict is
/// Parabolic when `u_ε` strictly decreases and `1/u_ε` is linear in
/// `log(1/ε)` with positive slope.
pub fn shrinking_trend<B>(build: B, eps: &[f64], r_max: f64, steps_per_unit_log: f64, n_angular: usize) -> Result<ShrinkingTrend>
where
    B: Fn(&PolarGrid) -> Result<SubdomainMask>,
{
    if eps.len() < 3 || eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(LabError::InvalidArgument("need at least three decreasing ε".into()));
    }
    let mut u = Vec::with_capacity(eps.len());
    for &e in eps {
        let n_radial = ((r_max / e).ln() * steps_per_unit_log).ceil() as usize + 1;
        let grid = PolarGrid::with_outer(e, r_max, n_radial.max(3), n_angular)?;
        let mask = build(&grid)?;
        u.push(dirichlet_solve(&mask, SOLVER_TOL, DEFAULT_MAX_ITERS)?.value_at(mask.basepoint));
    }
    let logs: Vec<f64> = eps.iter().map(|e| (1.0 / e).ln()).collect();
    let fitted_c = u.iter().zip(&logs).map(|(u, l)| u * l).sum::<f64>() / u.len() as f64;

    let inv: Vec<f64> = u.iter().map(|v| 1.0 / v).collect();
    let n = logs.len() as f64;
    let (mx, my) = (logs.iter().sum::<f64>() / n, inv.iter().sum::<f64>() / n);
    let sxx: f64 = logs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().zip(&inv).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = inv.iter().map(|y| (y - my).powi(2)).sum();
    let beta = sxy / sxx;
    let alpha = my - beta * mx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 0.0 };

    let decreasing = u.windows(2).all(|w| w[1] < w[0]) && u.iter().all(|v| *v > 0.0);
    let verdict = if decreasing && beta > 0.0 && r_squared > 0.99 {
        ConformalVerdict::Parabolic
    } else {
        ConformalVerdict::Indeterminate
    };
    Ok(ShrinkingTrend {
        eps: eps.to_vec(),
        u,
        fitted_c,
        alpha,
        beta,
        r_squared,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub probability: f64,
    /// Wilson 95% half-width.
    pub half_width: f64,
    pub walks: u64,
    pub censored: u64,
    /// More than 1% of walks hit the step cap.
    pub flagged: bool,
}

fn wilson_half_width(hits: u64, n: u64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let z = 1.959_963_984_540_054;
    let (n, p) = (n as f64, hits as f64 / n as f64);
    let denom = 1.0 + z * z / n;
    z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom
}

/// Fraction of grid random walks from `z0` absorbed on the ideal boundary.
///
/// Steps are radial with probability `1/(2(1+a))` each way and angular with
/// `a/(2(1+a))`, `a = (h_s/h_θ)²`, which is the five-point stencil's own
/// weighting. The start node is drawn with the bilinear weights of `z0`.
/// Walk `k` uses ChaCha stream `k` of `seed`, so the estimate does not
/// depend on thread count.
pub fn mc_harmonic_measure(mask: &SubdomainMask, z0: Complex64, walks: u64, seed: u64) -> Result<McEstimate> {
    mask.validate()?;
    if walks < 10_000 {
        return Err(LabError::InvalidArgument("Monte Carlo needs at least 10^4 walks".into()));
    }
    if mask.count(NodeKind::IdealBoundary) == 0 {
        return Ok(McEstimate {
            probability: 0.0,
            half_width: 0.0,
            walks,
            censored: 0,
            flagged: false,
        });
    }
    let grid = mask.grid;
    let (nr, na) = (grid.n_radial(), grid.n_angular());
    let (fi, fj) = grid.locate(z0);
    if !(fi >= 0.0 && fi <= (nr - 1) as f64) {
        return Err(LabError::Domain(format!("{z0} is outside the grid")));
    }
    let i0 = (fi.floor() as usize).min(nr - 2);
    let j0 = fj.floor() as usize % na;
    let (a, b) = (fi - i0 as f64, fj - fj.floor());
    let corners = [
        (i0 * na + j0, (1.0 - a) * (1.0 - b)),
        (i0 * na + (j0 + 1) % na, (1.0 - a) * b),
        ((i0 + 1) * na + j0, a * (1.0 - b)),
        ((i0 + 1) * na + (j0 + 1) % na, a * b),
    ];
    let aspect = (grid.log_step() / grid.angle_step()).powi(2);
    let p_radial = 1.0 / (2.0 * (1.0 + aspect));

    // 0: surface, 1: ideal, 2: censored
    let outcome = |k: u64| -> u8 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k);
        let pick: f64 = rng.gen();
        let mut acc = 0.0;
        let mut node = corners[3].0;
        for (c, w) in corners {
            acc += w;
            if pick < acc {
                node = c;
                break;
            }
        }
        for _ in 0..MC_STEP_CAP {
            match mask.kinds[node] {
                NodeKind::IdealBoundary => return 1,
                NodeKind::SurfaceBoundary | NodeKind::Exterior => return 0,
                NodeKind::Interior => {}
            }
            let x: f64 = rng.gen();
            let (i, j) = (node / na, node % na);
            node = if x < p_radial {
                node + na
            } else if x < 2.0 * p_radial {
                node - na
            } else if x < 0.5 + p_radial {
                i * na + (j + 1) % na
            } else {
                i * na + (j + na - 1) % na
            };
        }
        2
    };
    let (hits, censored) = (0..walks)
        .into_par_iter()
        .map(|k| match outcome(k) {
            1 => (1u64, 0u64),
            2 => (0, 1),
            _ => (0, 0),
        })
        .reduce(|| (0, 0), |x, y| (x.0 + y.0, x.1 + y.1));
    let finished = walks - censored;
    Ok(McEstimate {
        probability: if finished == 0 { 0.0 } else { hits as f64 / finished as f64 },
        half_width: wilson_half_width(hits, finished),
        walks,
        censored,
        flagged: censored * 100 > walks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentCheck {
    pub side: Side,
    pub seed: Complex64,
    pub nodes: usize,
    pub touches_ideal: bool,
    /// Largest `x₃` (for `≤`) or smallest (for `≥`) over the component's nodes.
    pub extreme_height: f64,
    pub trend: Option<ShrinkingTrend>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfspaceReport {
    pub level: f64,
    pub components: Vec<ComponentCheck>,
    /// Sides with no grid nodes at all.
    pub vacuous: Vec<Side>,
    /// Some halfspace component came out hyperbolic.
    pub contradiction: bool,
}

/// Classifies each component of `{x₃ ≤ t}` and `{x₃ ≥ t}` that reaches the
/// puncture by shrinking the inner circle toward it.
pub fn halfspace_cross_check(data: &WeierstrassData, t: f64, grid: &PolarGrid) -> Result<HalfspaceReport> {
    let x3 = plane_height_field(data, &Plane::horizontal(0.0))?;
    let values = sample_grid(grid, |z| x3.probe(z));
    let (nr, na) = (grid.n_radial(), grid.n_angular());
    let steps_per_unit_log = 1.0 / grid.log_step();
    let mut components = Vec::new();
    let mut vacuous = Vec::new();
    let mut contradiction = false;
    for side in [Side::AtMost, Side::AtLeast] {
        let mut label = vec![usize::MAX; nr * na];
        let mut any = false;
        for start in 0..nr * na {
            if label[start] != usize::MAX || !side.holds(values[start], t) {
                continue;
            }
            any = true;
            let id = components.len();
            let mut members = vec![start];
            label[start] = id;
            let mut q = VecDeque::from([start]);
            while let Some(k) = q.pop_front() {
                for nb in neighbors(grid, k).into_iter().flatten() {
                    if label[nb] == usize::MAX && side.holds(values[nb], t) {
                        label[nb] = id;
                        members.push(nb);
                        q.push_back(nb);
                    }
                }
            }
            let touches_ideal = members.iter().any(|k| k / na == 0);
            let extreme_height = members
                .iter()
                .map(|k| values[*k])
                .fold(if side == Side::AtMost { f64::NEG_INFINITY } else { f64::INFINITY }, |a, b| {
                    if side == Side::AtMost {
                        a.max(b)
                    } else {
                        a.min(b)
                    }
                });
            // seed: strictly inside, on the row halfway down in log r
            let top_row = members.iter().map(|k| k / na).max().unwrap();
            let mid_row = (top_row / 2).max(1).min(nr - 2);
            let seed = members
                .iter()
                .filter(|k| *k / na == mid_row && side.strict(values[**k], t))
                .filter(|k| {
                    neighbors(grid, **k)
                        .into_iter()
                        .flatten()
                        .all(|nb| label[nb] == components.len() && nb / na != 0)
                })
                .min_by_key(|k| **k % na)
                .map(|k| grid.node(k / na, k % na));
            let trend = match (touches_ideal, seed) {
                (true, Some(seed)) => {
                    let r_top = grid.r_max();
                    let e0 = grid.r_min();
                    let eps = [e0, e0 * 1e-1, e0 * 1e-2];
                    let tr = shrinking_trend(
                        |g| mask_from_level(&x3, t, side, seed, g),
                        &eps,
                        r_top,
                        steps_per_unit_log,
                        na,
                    )?;
                    if tr.verdict == ConformalVerdict::Hyperbolic {
                        contradiction = true;
                    }
                    Some(tr)
                }
                _ => None,
            };
            components.push(ComponentCheck {
                side,
                seed: seed.unwrap_or(grid.node(members[0] / na, members[0] % na)),
                nodes: members.len(),
                touches_ideal,
                extreme_height,
                trend,
            });
        }
        if !any {
            vacuous.push(side);
        }
    }
    Ok(HalfspaceReport {
        level: t,
        components,
        vacuous,
        contradiction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annulus::{AnnulusDomain, LaurentSeries};

    fn on_annulus(c: f64, terms: &[(i32, f64)], big_r: f64) -> HarmonicField {
        HarmonicField::closed_form(c, LaurentSeries::from_real(terms), AnnulusDomain::new(big_r).unwrap())
    }

    fn z(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn mask_examples() {
        let grid = PolarGrid::new(0.25, 65, 128).unwrap();
        let re_z = on_annulus(0.0, &[(1, 1.0)], 0.25);
        let m = mask_from_level(&re_z, 0.0, Side::AtLeast, z(0.5, 0.0), &grid).unwrap();
        m.validate().unwrap();
        for k in m.interior_nodes() {
            assert!(grid.node(k / 128, k % 128).re >= 0.0);
        }
        // every interior-row node with Re z > 0 is interior
        for i in 1..64 {
            for j in 0..128 {
                if grid.node(i, j).re > 1e-12 {
                    assert_eq!(m.kinds[i * 128 + j], NodeKind::Interior);
                }
            }
        }

        let log = HarmonicField::punctured(1.0, LaurentSeries::zero());
        let m = mask_from_level(&log, 0.5f64.ln(), Side::AtMost, z(0.3, 0.0), &grid).unwrap();
        for k in m.interior_nodes() {
            assert!(grid.radius(k / 128) <= 0.5 + 1e-12);
        }
        assert!(m.count(NodeKind::IdealBoundary) == 128);

        let dip = on_annulus(0.0, &[(-1, 1.0)], 0.1);
        let grid = PolarGrid::new(0.1, 65, 128).unwrap();
        let m = mask_from_level(&dip, 0.0, Side::AtLeast, z(0.5, 0.0), &grid).unwrap();
        for k in m.interior_nodes() {
            assert!(grid.node(k / 128, k % 128).re >= 0.0);
        }
        assert!(matches!(
            mask_from_level(&dip, 0.0, Side::AtLeast, z(-0.5, 0.0), &grid),
            Err(LabError::Seed(_))
        ));
    }

    #[test]
    fn full_annulus_is_the_log_profile() {
        for (nr, na, tol) in [(128, 256, 2e-2), (256, 512, 5e-3)] {
            let grid = PolarGrid::new(0.25, nr, na).unwrap();
            let m = SubdomainMask::full_annulus(&grid, z(0.5, 0.0)).unwrap();
            let sol = dirichlet_solve(&m, SOLVER_TOL, DEFAULT_MAX_ITERS).unwrap();
            assert!((sol.value_at(z(0.5, 0.0)) - 0.5).abs() < tol);
            assert!(sol.u.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn no_ideal_boundary_gives_zero() {
        let grid = PolarGrid::new(0.25, 33, 64).unwrap();
        // a region bounded away from the inner circle
        let m = SubdomainMask::from_predicate(&grid, z(0.6, 0.0), |k| grid.radius(k / 64) > 0.4).unwrap();
        assert_eq!(m.count(NodeKind::IdealBoundary), 0);
        let sol = dirichlet_solve(&m, SOLVER_TOL, DEFAULT_MAX_ITERS).unwrap();
        assert!(sol.u.iter().all(|v| *v == 0.0));
        let mc = mc_harmonic_measure(&m, z(0.6, 0.0), 10_000, 1).unwrap();
        assert_eq!(mc.probability, 0.0);
    }

    #[test]
    fn half_annulus_is_hyperbolic_and_below_full() {
        let grid = PolarGrid::new(0.25, 65, 128).unwrap();
        let re_z = on_annulus(0.0, &[(1, 1.0)], 0.25);
        let build = |g: &PolarGrid| mask_from_level(&re_z, 0.0, Side::AtLeast, z(0.5, 0.0), g);
        let rep = classify_type(build, &grid, None).unwrap();
        assert_eq!(rep.verdict, ConformalVerdict::Hyperbolic);
        assert!(rep.u_solver > 0.0 && rep.u_solver < 0.5);
        assert!(rep.u_coarse > 0.0 && rep.u_coarse < 0.5);

        let full = classify_type(|g| SubdomainMask::full_annulus(g, z(0.5, 0.0)), &grid, None).unwrap();
        assert_eq!(full.verdict, ConformalVerdict::Hyperbolic);
        assert!((full.u_solver - 0.5).abs() < 1e-6);
    }

    #[test]
    fn punctured_disk_trend_is_parabolic() {
        let z0 = z(0.5, 0.0);
        let tr = shrinking_trend(|g| SubdomainMask::full_annulus(g, z0), &[1e-2, 1e-3, 1e-4], 1.0, 16.0, 16).unwrap();
        for (e, u) in tr.eps.iter().zip(&tr.u) {
            assert!((u - 0.5f64.ln() / e.ln()).abs() < 1e-6, "{u}");
        }
        assert_eq!(tr.verdict, ConformalVerdict::Parabolic);
        assert!((tr.fitted_c - 2f64.ln()).abs() < 0.2 * 2f64.ln());
    }

    #[test]
    fn monte_carlo_matches_exact_profiles() {
        let grid = PolarGrid::new(0.25, 33, 64).unwrap();
        let m = SubdomainMask::full_annulus(&grid, z(0.5, 0.0)).unwrap();
        let mc = mc_harmonic_measure(&m, z(0.5, 0.0), 100_000, 7).unwrap();
        assert!((mc.probability - 0.5).abs() < 0.02, "{mc:?}");
        assert!(mc.half_width < 0.01 && !mc.flagged);

        // inner sub-annulus A(0.25, 0.5], absorbing at 0.5
        let grid = PolarGrid::new(0.25, 65, 64).unwrap();
        let m = SubdomainMask::from_predicate(&grid, z(0.35, 0.0), |k| grid.radius(k / 64) < 0.5 - 1e-9).unwrap();
        let mc = mc_harmonic_measure(&m, z(0.35, 0.0), 100_000, 3).unwrap();
        let exact = (0.5f64 / 0.35).ln() / 2f64.ln();
        assert!((mc.probability - exact).abs() < 0.02, "{} vs {exact}", mc.probability);

        // same seed, same answer
        let again = mc_harmonic_measure(&m, z(0.35, 0.0), 100_000, 3).unwrap();
        assert_eq!(mc, again);
    }

    #[test]
    fn solver_and_walks_agree_on_half_annulus() {
        let grid = PolarGrid::new(0.25, 33, 64).unwrap();
        let re_z = on_annulus(0.0, &[(1, 1.0)], 0.25);
        let m = mask_from_level(&re_z, 0.0, Side::AtLeast, z(0.5, 0.0), &grid).unwrap();
        let u = dirichlet_solve(&m, SOLVER_TOL, DEFAULT_MAX_ITERS).unwrap().value_at(z(0.5, 0.0));
        let mc = mc_harmonic_measure(&m, z(0.5, 0.0), 100_000, 11).unwrap();
        assert!((u - mc.probability).abs() < 0.03f64.max(2.0 * mc.half_width));
    }

    #[test]
    fn catenoid_lower_component_is_parabolic_and_planar_upper_is_empty() {
        let cat = WeierstrassData::new(1, LaurentSeries::zero(), LaurentSeries::from_real(&[(-1, 1.0)]), 0.8).unwrap();
        let grid = PolarGrid::with_outer(1e-2, 0.8, 64, 32).unwrap();
        let rep = halfspace_cross_check(&cat, -1.0, &grid).unwrap();
        assert!(!rep.contradiction);
        let lower: Vec<_> = rep.components.iter().filter(|c| c.side == Side::AtMost).collect();
        assert_eq!(lower.len(), 1);
        assert!(lower[0].touches_ideal && lower[0].extreme_height <= -1.0);
        assert_eq!(lower[0].trend.as_ref().unwrap().verdict, ConformalVerdict::Parabolic);

        let planar = WeierstrassData::new(1, LaurentSeries::zero(), LaurentSeries::from_real(&[(0, 1.0)]), 0.8).unwrap();
        let rep = halfspace_cross_check(&planar, 2.0, &grid).unwrap();
        assert_eq!(rep.vacuous, vec![Side::AtLeast]);
        assert!(!rep.contradiction);
    }

    #[test]
    fn sor_nonconvergence_is_reported() {
        let grid = PolarGrid::new(0.25, 65, 128).unwrap();
        let m = SubdomainMask::full_annulus(&grid, z(0.5, 0.0)).unwrap();
        assert!(matches!(
            dirichlet_solve(&m, SOLVER_TOL, 3),
            Err(LabError::NumericalNonconvergence { .. })
        ));
    }
}
