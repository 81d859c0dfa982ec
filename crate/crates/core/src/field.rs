//! Harmonic functions on an annulus, the one-form `ω = df + i df*` and flux.
//!
//! A closed-form field is `f(z) = c·log|z| + Re F(z)` with `F` a finite
//! Laurent series. Its complex gradient `w = f_x − i f_y` satisfies
//! `ω = w(z) dz` with `w = c/z + F'(z)`, so everything that depends on `ω`
//! is exact coefficient arithmetic. The conjugate `f*` itself is never
//! built: its differential lives in `ω` and its period is the flux.

use std::f64::consts::PI;
use std::fmt;
use std::ops::RangeInclusive;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::annulus::{self, AnnulusDomain, CircleSamples, LaurentSeries, PolarGrid};
use crate::error::{LabError, Result};

/// Minimum node count for flux quadrature.
pub const FLUX_NODES_MIN: usize = 1024;

/// Real-valued black-box sampler.
pub type RealSampler = Arc<dyn Fn(Complex64) -> f64 + Send + Sync>;

/// `f = c·log|z| + Re F(z)` on an annulus.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedForm {
    pub log_coeff: f64,
    pub analytic: LaurentSeries,
    pub domain: AnnulusDomain,
}

/// Values on a polar grid, optionally backed by an exact sampler.
#[derive(Clone)]
pub struct SampledField {
    domain: AnnulusDomain,
    grid: PolarGrid,
    values: Vec<f64>,
    sampler: Option<RealSampler>,
}

impl fmt::Debug for SampledField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampledField")
            .field("domain", &self.domain)
            .field("grid", &self.grid)
            .field("exact_sampler", &self.sampler.is_some())
            .finish()
    }
}

impl SampledField {
    /// Samples `sampler` on every grid node.
    pub fn from_sampler(domain: AnnulusDomain, grid: PolarGrid, sampler: RealSampler) -> Result<Self> {
        grid.check_domain(&domain)?;
        let values = sample_grid(&grid, |z| sampler(z));
        Ok(Self {
            domain,
            grid,
            values,
            sampler: Some(sampler),
        })
    }

    /// Row-major node values (`i * n_angular + j`) without an exact sampler.
    pub fn from_values(domain: AnnulusDomain, grid: PolarGrid, values: Vec<f64>) -> Result<Self> {
        grid.check_domain(&domain)?;
        if values.len() != grid.n_radial() * grid.n_angular() {
            return Err(LabError::InvalidArgument(format!(
                "expected {} values, got {}",
                grid.n_radial() * grid.n_angular(),
                values.len()
            )));
        }
        Ok(Self {
            domain,
            grid,
            values,
            sampler: None,
        })
    }

    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn has_sampler(&self) -> bool {
        self.sampler.is_some()
    }

    fn node_value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n_angular() + j % self.grid.n_angular()]
    }

    /// Bilinear interpolation in `(log r, θ)`.
    fn interpolate(&self, z: Complex64) -> Result<f64> {
        let (fi, fj) = self.grid.locate(z);
        let last = (self.grid.n_radial() - 1) as f64;
        if !(-1e-9..=last + 1e-9).contains(&fi) {
            return Err(LabError::Domain(format!(
                "|z| = {} outside sampled grid [{}, {}]",
                z.norm(),
                self.grid.r_min(),
                self.grid.r_max()
            )));
        }
        let fi = fi.clamp(0.0, last);
        let i0 = (fi.floor() as usize).min(self.grid.n_radial() - 2);
        let j0 = fj.floor() as usize;
        let (ti, tj) = (fi - i0 as f64, fj - j0 as f64);
        let v00 = self.node_value(i0, j0);
        let v01 = self.node_value(i0, j0 + 1);
        let v10 = self.node_value(i0 + 1, j0);
        let v11 = self.node_value(i0 + 1, j0 + 1);
        Ok((1.0 - ti) * ((1.0 - tj) * v00 + tj * v01) + ti * ((1.0 - tj) * v10 + tj * v11))
    }

    /// Max 5-point Laplacian residual in `(log r, θ)` over interior nodes,
    /// in units of the value scale.
    pub fn laplace_residual(&self) -> f64 {
        let (hs, ht) = (self.grid.log_step(), self.grid.angle_step());
        let mut worst = 0.0f64;
        for i in 1..self.grid.n_radial() - 1 {
            for j in 0..self.grid.n_angular() {
                let jm = (j + self.grid.n_angular() - 1) % self.grid.n_angular();
                let u = self.node_value(i, j);
                let lap = (self.node_value(i + 1, j) - 2.0 * u + self.node_value(i - 1, j)) / (hs * hs)
                    + (self.node_value(i, j + 1) - 2.0 * u + self.node_value(i, jm)) / (ht * ht);
                worst = worst.max(lap.abs());
            }
        }
        worst
    }
}

/// Evaluates `f` on every node of `grid`, row-major, in parallel over rows.
pub fn sample_grid<F>(grid: &PolarGrid, f: F) -> Vec<f64>
where
    F: Fn(Complex64) -> f64 + Sync,
{
    let na = grid.n_angular();
    let mut values = vec![0.0; grid.n_radial() * na];
    values
        .par_chunks_mut(na)
        .enumerate()
        .for_each(|(i, row)| {
            for (j, v) in row.iter_mut().enumerate() {
                *v = f(grid.node(i, j));
            }
        });
    values
}

/// A harmonic function on an annular end.
#[derive(Debug, Clone)]
pub enum HarmonicField {
    ClosedForm(ClosedForm),
    Sampled(SampledField),
}

/// `ω = w(z) dz`, stored as the Laurent series of `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneForm {
    pub coeff_series: LaurentSeries,
    /// Meromorphy score from coefficient recovery; `None` for exact series.
    pub recovery_score: Option<f64>,
}

impl OneForm {
    pub fn exact(coeff_series: LaurentSeries) -> Self {
        Self {
            coeff_series,
            recovery_score: None,
        }
    }
}

/// Flux `∮_{|z|=r} ∂f/∂r ds` with the outward radial normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxValue {
    pub value: f64,
    pub contour_radius: f64,
}

impl HarmonicField {
    pub fn closed_form(log_coeff: f64, analytic: LaurentSeries, domain: AnnulusDomain) -> Self {
        let analytic = analytic.with_validity(domain.inner_radius(), 1.0);
        Self::ClosedForm(ClosedForm {
            log_coeff,
            analytic,
            domain,
        })
    }

    /// Closed form on the punctured disk.
    pub fn punctured(log_coeff: f64, analytic: LaurentSeries) -> Self {
        Self::closed_form(log_coeff, analytic, AnnulusDomain::punctured())
    }

    pub fn sampled(field: SampledField) -> Self {
        Self::Sampled(field)
    }

    pub fn domain(&self) -> AnnulusDomain {
        match self {
            Self::ClosedForm(cf) => cf.domain,
            Self::Sampled(s) => s.domain,
        }
    }

    pub fn as_closed_form(&self) -> Option<&ClosedForm> {
        match self {
            Self::ClosedForm(cf) => Some(cf),
            Self::Sampled(_) => None,
        }
    }

    /// `f(z)`: exact for closed forms, bilinear on the grid for sampled fields.
    pub fn eval(&self, z: Complex64) -> Result<f64> {
        self.domain().check(z)?;
        match self {
            Self::ClosedForm(cf) => Ok(cf.value(z)),
            Self::Sampled(s) => s.interpolate(z),
        }
    }

    /// Best available value of `f` without a domain check: the exact formula
    /// or sampler when there is one, grid interpolation otherwise.
    pub fn probe(&self, z: Complex64) -> f64 {
        match self {
            Self::ClosedForm(cf) => cf.value(z),
            Self::Sampled(s) => match &s.sampler {
                Some(f) => f(z),
                None => s.interpolate(z).unwrap_or(f64::NAN),
            },
        }
    }

    /// Whether [`probe`](Self::probe) is exact away from the grid.
    pub fn has_exact_values(&self) -> bool {
        match self {
            Self::ClosedForm(_) => true,
            Self::Sampled(s) => s.sampler.is_some(),
        }
    }

    /// `w(z) = f_x − i f_y`, the coefficient of `ω = w dz`.
    pub fn complex_gradient(&self, z: Complex64) -> Complex64 {
        match self {
            Self::ClosedForm(cf) => cf.log_coeff / z + cf.derivative().eval_unchecked(z),
            Self::Sampled(s) => {
                let h = match s.sampler {
                    Some(_) => 1e-6 * z.norm(),
                    None => 0.5 * z.norm() * s.grid.log_step().min(s.grid.angle_step()),
                };
                let fx = (self.probe(z + h) - self.probe(z - h)) / (2.0 * h);
                let dy = Complex64::new(0.0, h);
                let fy = (self.probe(z + dy) - self.probe(z - dy)) / (2.0 * h);
                Complex64::new(fx, -fy)
            }
        }
    }

    /// `|∇f|(z)`.
    pub fn gradient_norm(&self, z: Complex64) -> Result<f64> {
        self.domain().check(z)?;
        Ok(self.complex_gradient(z).norm())
    }

    /// `max(1, max |f|)` on the outer circle; the unit for relative tolerances.
    pub fn value_scale(&self) -> f64 {
        let n = 1024;
        (0..n)
            .map(|j| self.probe(Complex64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64)).abs())
            .fold(1.0, f64::max)
    }

    /// The one-form `ω = df + i df*`.
    pub fn omega(&self) -> Result<OneForm> {
        match self {
            Self::ClosedForm(cf) => {
                let mut w = cf.derivative();
                if cf.log_coeff != 0.0 {
                    w = w.add(&LaurentSeries::monomial(-1, Complex64::new(cf.log_coeff, 0.0)));
                }
                Ok(OneForm::exact(w.with_validity(cf.domain.inner_radius(), 1.0)))
            }
            Self::Sampled(s) => {
                let Some(sampler) = &s.sampler else {
                    return Err(LabError::InvalidArgument(
                        "one-form of a sampled field needs an exact sampler".into(),
                    ));
                };
                let (r1, r2) = recovery_radii(&s.domain);
                let rec = recover_harmonic(sampler.as_ref(), r1, r2, 1024, annulus::DEFAULT_WINDOW)?;
                let mut w = rec.analytic.derivative();
                if rec.log_coeff != 0.0 {
                    w = w.add(&LaurentSeries::monomial(-1, Complex64::new(rec.log_coeff, 0.0)));
                }
                Ok(OneForm {
                    coeff_series: w.with_validity(s.domain.inner_radius(), 1.0),
                    recovery_score: Some(rec.score),
                })
            }
        }
    }

    /// Trapezoid quadrature of `∮_{|z|=r} ∂f/∂r ds`.
    pub fn flux(&self, r: f64) -> Result<FluxValue> {
        self.domain().check(Complex64::new(r, 0.0))?;
        let n = match self {
            Self::ClosedForm(_) => FLUX_NODES_MIN,
            Self::Sampled(s) => FLUX_NODES_MIN.max(8 * s.grid.n_angular()),
        };
        let mut sum = 0.0;
        for j in 0..n {
            let e = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64);
            sum += (self.complex_gradient(r * e) * e).re;
        }
        Ok(FluxValue {
            value: sum * r * 2.0 * PI / n as f64,
            contour_radius: r,
        })
    }

    /// Adds a constant to the field.
    pub fn shifted(&self, t: f64) -> Self {
        match self {
            Self::ClosedForm(cf) => Self::ClosedForm(ClosedForm {
                analytic: cf.analytic.add(&LaurentSeries::monomial(0, Complex64::new(t, 0.0))),
                ..cf.clone()
            }),
            Self::Sampled(s) => {
                let sampler = s.sampler.clone().map(|f| -> RealSampler { Arc::new(move |z| f(z) + t) });
                Self::Sampled(SampledField {
                    values: s.values.iter().map(|v| v + t).collect(),
                    sampler,
                    ..s.clone()
                })
            }
        }
    }

    /// Multiplies the field by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        match self {
            Self::ClosedForm(cf) => Self::ClosedForm(ClosedForm {
                log_coeff: cf.log_coeff * lambda,
                analytic: cf.analytic.scaled(Complex64::new(lambda, 0.0)),
                domain: cf.domain,
            }),
            Self::Sampled(s) => {
                let sampler = s.sampler.clone().map(|f| -> RealSampler { Arc::new(move |z| lambda * f(z)) });
                Self::Sampled(SampledField {
                    values: s.values.iter().map(|v| lambda * v).collect(),
                    sampler,
                    ..s.clone()
                })
            }
        }
    }
}

impl ClosedForm {
    pub fn value(&self, z: Complex64) -> f64 {
        let log_part = if self.log_coeff == 0.0 {
            0.0
        } else {
            self.log_coeff * z.norm().ln()
        };
        log_part + self.analytic.eval_unchecked(z).re
    }

    fn derivative(&self) -> LaurentSeries {
        self.analytic.derivative()
    }
}

/// Radii used to recover holomorphic data from a black-box real sampler.
pub fn recovery_radii(domain: &AnnulusDomain) -> (f64, f64) {
    let big_r = domain.inner_radius();
    if big_r == 0.0 {
        (0.05, 0.9)
    } else {
        (big_r + 0.05 * (1.0 - big_r), big_r + 0.9 * (1.0 - big_r))
    }
}

/// Holomorphic data `(c, F)` of a real harmonic sampler recovered from circles.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicRecovery {
    pub log_coeff: f64,
    pub analytic: LaurentSeries,
    /// max(validation mismatch at the geometric-mean radius, spectral tail).
    pub score: f64,
}

/// Recovers `f = c log|z| + Re F` from real samples on two circles.
///
/// On `|z| = r` the Fourier modes are `f̂_0 = c log r + Re a_0` and, for
/// `m ≥ 1`, `2 f̂_m = a_m r^m + conj(a_{-m}) r^{-m}`; two radii fix every
/// unknown. A third circle at `sqrt(r1 r2)` validates the fit and the
/// spectrum must die out inside `window`.
pub fn recover_harmonic<F>(
    sampler: &F,
    r1: f64,
    r2: f64,
    n: usize,
    window: RangeInclusive<i32>,
) -> Result<HarmonicRecovery>
where
    F: Fn(Complex64) -> f64 + ?Sized,
{
    let real = |r: f64| -> Result<CircleSamples> {
        annulus::circle_sample(|z| Ok(Complex64::new(sampler(z), 0.0)), r, n)
    };
    let (s1, s2) = (real(r1)?, real(r2)?);
    let r3 = (r1 * r2).sqrt();
    let s3 = real(r3)?;
    let top = window.start().abs().max(window.end().abs());
    let modes = |s: &CircleSamples| annulus::fourier_coefficients(s, 0..=top);
    let (f1, f2, f3) = (modes(&s1)?, modes(&s2)?, modes(&s3)?);

    let c = (f2[0].1.re - f1[0].1.re) / (r2.ln() - r1.ln());
    let a0 = f1[0].1.re - c * r1.ln();
    let mut terms = vec![(0, Complex64::new(a0, 0.0))];
    let rho = r1 / r2;
    for m in 1..=top {
        let (a, b) = (f1[m as usize].1, f2[m as usize].1);
        let q = rho.powi(m);
        let det = q * q - 1.0;
        let x = 2.0 * (a * q - b) / det * r2.powi(-m);
        let y = 2.0 * (b * q - a) / det * r1.powi(m);
        if window.contains(&m) {
            terms.push((m, x));
        }
        if window.contains(&-m) {
            terms.push((-m, y.conj()));
        }
    }
    let raw = LaurentSeries::from_terms(terms)?;
    let scale = raw.max_abs().max(c.abs()).max(1.0);
    let analytic = raw.truncated(annulus::COEFF_THRESHOLD * scale);

    // validation on the middle circle
    let peak = f3.iter().map(|(_, v)| v.norm()).fold(0.0, f64::max).max(1e-300);
    let mut mismatch = 0.0f64;
    for (m, v) in &f3 {
        let predicted = if *m == 0 {
            Complex64::new(c * r3.ln(), 0.0) + raw.coefficient(0).re
        } else {
            0.5 * (raw.coefficient(*m) * r3.powi(*m) + raw.coefficient(-m).conj() * r3.powi(-m))
        };
        mismatch = mismatch.max((predicted - v).norm() / peak);
    }
    let tail_of = |s: &CircleSamples| -> Result<f64> {
        let all = annulus::fourier_coefficients(s, -((n / 2) as i32 - 1)..=((n / 2) as i32 - 1))?;
        let (mut inside, mut outside) = (0.0f64, 0.0f64);
        for (m, v) in all {
            if m.abs() <= top {
                inside = inside.max(v.norm());
            } else {
                outside = outside.max(v.norm());
            }
        }
        Ok(if outside == 0.0 { 0.0 } else { outside / inside.max(1e-300) })
    };
    let tail = tail_of(&s1)?.max(tail_of(&s2)?);
    let score = mismatch.max(tail);
    if score > annulus::COEFF_THRESHOLD {
        return Err(LabError::NonMeromorphicSuspected { score });
    }
    Ok(HarmonicRecovery {
        log_coeff: if c.abs() > annulus::COEFF_THRESHOLD * scale { c } else { 0.0 },
        analytic,
        score,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn dipole() -> HarmonicField {
        HarmonicField::punctured(0.0, LaurentSeries::from_real(&[(-1, 1.0)]))
    }

    #[test]
    fn eval_examples() {
        let log_end = HarmonicField::punctured(1.0, LaurentSeries::zero());
        assert!((log_end.eval(z(0.5, 0.0)).unwrap() - 0.5f64.ln()).abs() < 1e-15);

        let re_z = HarmonicField::punctured(0.0, LaurentSeries::from_real(&[(1, 1.0)]));
        assert!((re_z.eval(z(0.3, 0.4)).unwrap() - 0.3).abs() < 1e-15);

        let f = HarmonicField::punctured(2.0, LaurentSeries::from_real(&[(-1, 1.0)]));
        let v = f.eval(z(0.0, 0.5)).unwrap();
        assert!((v - 2.0 * 0.5f64.ln()).abs() < 1e-14);
        assert!((v + 1.3863).abs() < 1e-4);
    }

    #[test]
    fn eval_rejects_out_of_domain() {
        let f = HarmonicField::closed_form(
            0.0,
            LaurentSeries::from_real(&[(1, 1.0)]),
            AnnulusDomain::new(0.5).unwrap(),
        );
        assert!(matches!(f.eval(z(0.4, 0.0)), Err(LabError::Domain(_))));
        assert!(matches!(f.eval(z(1.1, 0.0)), Err(LabError::Domain(_))));
        assert!(matches!(f.gradient_norm(z(0.1, 0.0)), Err(LabError::Domain(_))));
        assert!(matches!(f.flux(0.3), Err(LabError::Domain(_))));
    }

    #[test]
    fn omega_examples() {
        let re_z = HarmonicField::punctured(0.0, LaurentSeries::from_real(&[(1, 1.0)]));
        let w = re_z.omega().unwrap().coeff_series;
        assert_eq!(w.terms().collect::<Vec<_>>(), vec![(0, z(1.0, 0.0))]);

        let log_end = HarmonicField::punctured(1.0, LaurentSeries::zero());
        let w = log_end.omega().unwrap().coeff_series;
        assert_eq!(w.terms().collect::<Vec<_>>(), vec![(-1, z(1.0, 0.0))]);

        let f = HarmonicField::punctured(0.0, LaurentSeries::from_real(&[(-2, 1.0)]));
        let w = f.omega().unwrap().coeff_series;
        assert_eq!(w.terms().collect::<Vec<_>>(), vec![(-3, z(-2.0, 0.0))]);
    }

    #[test]
    fn omega_reproduces_df_along_directions() {
        let f = HarmonicField::punctured(
            0.7,
            LaurentSeries::from_terms([(-2, z(0.4, -1.0)), (1, z(2.0, 0.5)), (3, z(0.0, 1.0))]).unwrap(),
        );
        let w = f.omega().unwrap().coeff_series;
        let h = 1e-6;
        for p in [z(0.3, 0.2), z(-0.5, 0.6), z(0.1, -0.8)] {
            for dir in [z(1.0, 0.0), z(0.0, 1.0), Complex64::from_polar(1.0, 0.7)] {
                let fd = (f.probe(p + h * dir) - f.probe(p - h * dir)) / (2.0 * h);
                let exact = (w.eval_unchecked(p) * dir).re;
                assert!((fd - exact).abs() < 1e-8 * exact.abs().max(1.0), "{p} {dir}");
            }
        }
    }

    #[test]
    fn omega_ignores_constants() {
        let f = dipole();
        assert_eq!(f.omega().unwrap(), f.shifted(3.5).omega().unwrap());
    }

    #[test]
    fn flux_examples() {
        let log_end = HarmonicField::punctured(1.0, LaurentSeries::zero());
        assert!((log_end.flux(0.7).unwrap().value - 2.0 * PI).abs() < 1e-12);

        let re_z = HarmonicField::punctured(0.0, LaurentSeries::from_real(&[(1, 1.0)]));
        assert!(re_z.flux(0.5).unwrap().value.abs() < 1e-14);

        let f = HarmonicField::punctured(3.0, LaurentSeries::from_real(&[(-1, 1.0)]));
        for r in [0.3, 0.9] {
            assert!((f.flux(r).unwrap().value - 6.0 * PI).abs() < 1e-9);
        }
    }

    #[test]
    fn flux_matches_independent_quadrature() {
        // midpoint rule on ∂f/∂r from finite differences of f, 4096 nodes
        let f = HarmonicField::punctured(3.0, LaurentSeries::from_real(&[(-1, 1.0), (2, -0.5)]));
        for r in [0.3, 0.9] {
            let n = 4096;
            let h = 1e-6 * r;
            let mut sum = 0.0;
            for j in 0..n {
                let th = 2.0 * PI * (j as f64 + 0.5) / n as f64;
                let e = Complex64::from_polar(1.0, th);
                sum += (f.probe((r + h) * e) - f.probe((r - h) * e)) / (2.0 * h);
            }
            let oracle = sum * r * 2.0 * PI / n as f64;
            assert!((oracle - 6.0 * PI).abs() < 1e-6);
            assert!((f.flux(r).unwrap().value - oracle).abs() < 1e-6);
        }
    }

    #[test]
    fn gradient_examples() {
        let re_z = HarmonicField::punctured(0.0, LaurentSeries::from_real(&[(1, 1.0)]));
        assert!((re_z.gradient_norm(z(0.2, -0.7)).unwrap() - 1.0).abs() < 1e-15);

        let log_end = HarmonicField::punctured(1.0, LaurentSeries::zero());
        let p = Complex64::from_polar(0.5, 1.1);
        assert!((log_end.gradient_norm(p).unwrap() - 2.0).abs() < 1e-14);

        let sq = HarmonicField::punctured(0.0, LaurentSeries::from_real(&[(2, 1.0)]));
        assert!((sq.gradient_norm(z(0.5, 0.0)).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sampled_field_matches_closed_form() {
        let exact = HarmonicField::punctured(0.5, LaurentSeries::from_real(&[(-1, 1.0), (1, 2.0)]));
        let grid = PolarGrid::new(0.05, 257, 512).unwrap();
        let e2 = exact.clone();
        let sampler: RealSampler = Arc::new(move |p| e2.probe(p));
        let sampled = HarmonicField::sampled(
            SampledField::from_sampler(AnnulusDomain::punctured(), grid, sampler).unwrap(),
        );
        for p in [z(0.3, 0.2), z(-0.5, 0.6), z(0.1, -0.8)] {
            let a = exact.eval(p).unwrap();
            assert!((sampled.eval(p).unwrap() - a).abs() < 1e-3 * a.abs().max(1.0));
            let ga = exact.gradient_norm(p).unwrap();
            assert!((sampled.gradient_norm(p).unwrap() - ga).abs() < 1e-6 * ga);
        }
        assert!(sampled.eval(z(0.01, 0.0)).is_err());
        assert!((sampled.flux(0.4).unwrap().value - PI).abs() < 1e-6);

        let omega = sampled.omega().unwrap();
        assert!(omega.recovery_score.unwrap() < 1e-8);
        let w = omega.coeff_series;
        assert!((w.coefficient(-2) - z(-1.0, 0.0)).norm() < 1e-8);
        assert!((w.coefficient(-1) - z(0.5, 0.0)).norm() < 1e-8);
        assert!((w.coefficient(0) - z(2.0, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn sampled_essential_singularity_is_flagged() {
        let grid = PolarGrid::new(1e-2, 65, 128).unwrap();
        let sampler: RealSampler = Arc::new(|p: Complex64| p.inv().exp().re);
        let f = HarmonicField::sampled(
            SampledField::from_sampler(AnnulusDomain::punctured(), grid, sampler).unwrap(),
        );
        assert!(matches!(f.omega(), Err(LabError::NonMeromorphicSuspected { .. })));
    }

    #[test]
    fn discrete_laplacian_is_second_order() {
        let f = HarmonicField::punctured(1.0, LaurentSeries::from_real(&[(-2, 0.1), (3, 1.0)]));
        let residual = |n: usize| {
            let grid = PolarGrid::new(0.2, n + 1, 4 * n).unwrap();
            let values = sample_grid(&grid, |p| f.probe(p));
            let s = SampledField::from_values(AnnulusDomain::punctured(), grid, values).unwrap();
            s.laplace_residual()
        };
        let (coarse, fine) = (residual(32), residual(64));
        assert!(fine < coarse / 3.0, "{coarse} -> {fine}");
    }
}
