//! Annular domains, log-polar grids, Laurent series and circle-sampled
//! coefficient recovery.
//!
//! Everything downstream works in the conformal cylinder coordinates
//! `(s, θ) = (log r, arg z)`. A [`PolarGrid`] is uniform in both.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Default Laurent truncation window `m ∈ [-32, 32]`.
pub const DEFAULT_WINDOW: RangeInclusive<i32> = -32..=32;

/// Relative zero threshold applied to recovered coefficients.
pub const COEFF_THRESHOLD: f64 = 1e-8;

/// Relative slack used when testing radii against a closed interval.
const RADIUS_SLACK: f64 = 1e-12;

/// The annulus `A(R, 1) = { R < |z| ≤ 1 }`; `R = 0` is the punctured disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusDomain {
    inner_radius: f64,
}

impl AnnulusDomain {
    pub fn new(inner_radius: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&inner_radius) {
            return Err(LabError::InvalidArgument(format!(
                "inner radius {inner_radius} not in [0, 1)"
            )));
        }
        Ok(Self { inner_radius })
    }

    pub fn punctured() -> Self {
        Self { inner_radius: 0.0 }
    }

    pub fn inner_radius(&self) -> f64 {
        self.inner_radius
    }

    pub fn outer_radius(&self) -> f64 {
        1.0
    }

    pub fn is_punctured(&self) -> bool {
        self.inner_radius == 0.0
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let r = z.norm();
        r > self.inner_radius && r <= 1.0 + RADIUS_SLACK
    }

    pub fn check(&self, z: Complex64) -> Result<()> {
        if self.contains(z) {
            Ok(())
        } else {
            Err(LabError::Domain(format!(
                "|z| = {} outside A({}, 1)",
                z.norm(),
                self.inner_radius
            )))
        }
    }
}

/// Tensor grid uniform in `log r` and `θ`.
///
/// Radial node `i` sits at `r_min · (r_max / r_min)^(i / (n_radial - 1))`,
/// angular node `j` at `2πj / n_angular`. The angular direction is periodic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarGrid {
    r_min: f64,
    r_max: f64,
    n_radial: usize,
    n_angular: usize,
}

impl PolarGrid {
    /// Grid on `[r_min, 1]`.
    pub fn new(r_min: f64, n_radial: usize, n_angular: usize) -> Result<Self> {
        Self::with_outer(r_min, 1.0, n_radial, n_angular)
    }

    pub fn with_outer(r_min: f64, r_max: f64, n_radial: usize, n_angular: usize) -> Result<Self> {
        if !(r_min > 0.0 && r_min < r_max && r_max <= 1.0 + RADIUS_SLACK) {
            return Err(LabError::InvalidArgument(format!(
                "grid radii must satisfy 0 < r_min < r_max <= 1, got [{r_min}, {r_max}]"
            )));
        }
        if n_radial < 2 {
            return Err(LabError::InvalidArgument(
                "grid needs at least two radial nodes".into(),
            ));
        }
        if n_angular < 8 || !n_angular.is_power_of_two() {
            return Err(LabError::InvalidArgument(format!(
                "n_angular must be a power of two >= 8, got {n_angular}"
            )));
        }
        Ok(Self {
            r_min,
            r_max,
            n_radial,
            n_angular,
        })
    }

    /// Errors unless the grid lies strictly inside `domain`.
    pub fn check_domain(&self, domain: &AnnulusDomain) -> Result<()> {
        if self.r_min <= domain.inner_radius() {
            return Err(LabError::Domain(format!(
                "grid r_min {} must exceed inner radius {}",
                self.r_min,
                domain.inner_radius()
            )));
        }
        Ok(())
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn n_radial(&self) -> usize {
        self.n_radial
    }

    pub fn n_angular(&self) -> usize {
        self.n_angular
    }

    /// Spacing in `s = log r`.
    pub fn log_step(&self) -> f64 {
        (self.r_max.ln() - self.r_min.ln()) / (self.n_radial - 1) as f64
    }

    pub fn angle_step(&self) -> f64 {
        2.0 * PI / self.n_angular as f64
    }

    pub fn log_radius(&self, i: usize) -> f64 {
        if i + 1 == self.n_radial {
            self.r_max.ln()
        } else {
            self.r_min.ln() + i as f64 * self.log_step()
        }
    }

    pub fn radius(&self, i: usize) -> f64 {
        if i + 1 == self.n_radial {
            self.r_max
        } else {
            self.log_radius(i).exp()
        }
    }

    pub fn angle(&self, j: usize) -> f64 {
        (j % self.n_angular) as f64 * self.angle_step()
    }

    pub fn node(&self, i: usize, j: usize) -> Complex64 {
        Complex64::from_polar(self.radius(i), self.angle(j))
    }

    /// Continuous node coordinates of `z`: `(i, j)` with `j ∈ [0, n_angular)`.
    pub fn locate(&self, z: Complex64) -> (f64, f64) {
        let s = z.norm().ln();
        let mut theta = z.arg();
        if theta < 0.0 {
            theta += 2.0 * PI;
        }
        let fi = (s - self.r_min.ln()) / self.log_step();
        let fj = theta / self.angle_step();
        (fi, fj % self.n_angular as f64)
    }

    /// Same radial range with both node counts doubled.
    pub fn refined(&self) -> Self {
        Self {
            n_radial: 2 * (self.n_radial - 1) + 1,
            n_angular: 2 * self.n_angular,
            ..*self
        }
    }
}

/// A finite Laurent series `Σ a_m z^m` with its annulus of validity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaurentSeries {
    m_min: i32,
    coeffs: Vec<Complex64>,
    validity: (f64, f64),
}

impl Default for LaurentSeries {
    fn default() -> Self {
        Self::zero()
    }
}

impl LaurentSeries {
    pub fn zero() -> Self {
        Self {
            m_min: 0,
            coeffs: Vec::new(),
            validity: (0.0, f64::INFINITY),
        }
    }

    /// Builds a series from `(m, a_m)` pairs; repeated indices add up.
    pub fn from_terms<I>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i32, Complex64)>,
    {
        let terms: Vec<_> = terms.into_iter().collect();
        if let Some((m, a)) = terms.iter().find(|(_, a)| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(LabError::InvalidArgument(format!(
                "coefficient a_{m} = {a} is not finite"
            )));
        }
        let Some(m_min) = terms.iter().map(|(m, _)| *m).min() else {
            return Ok(Self::zero());
        };
        let m_max = terms.iter().map(|(m, _)| *m).max().unwrap();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); (m_max - m_min + 1) as usize];
        for (m, a) in terms {
            coeffs[(m - m_min) as usize] += a;
        }
        Ok(Self {
            m_min,
            coeffs,
            validity: (0.0, f64::INFINITY),
        }
        .normalized())
    }

    /// Real coefficients, convenient for tests and catalogs.
    pub fn from_real(terms: &[(i32, f64)]) -> Self {
        Self::from_terms(terms.iter().map(|&(m, a)| (m, Complex64::new(a, 0.0))))
            .expect("finite coefficients")
    }

    pub fn monomial(m: i32, a: Complex64) -> Self {
        Self::from_terms([(m, a)]).expect("finite coefficient")
    }

    pub fn with_validity(mut self, r_lo: f64, r_hi: f64) -> Self {
        self.validity = (r_lo, r_hi);
        self
    }

    pub fn validity(&self) -> (f64, f64) {
        self.validity
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Smallest index carrying a nonzero coefficient.
    pub fn m_min(&self) -> Option<i32> {
        (!self.coeffs.is_empty()).then_some(self.m_min)
    }

    pub fn m_max(&self) -> Option<i32> {
        (!self.coeffs.is_empty()).then(|| self.m_min + self.coeffs.len() as i32 - 1)
    }

    pub fn coefficient(&self, m: i32) -> Complex64 {
        let k = m - self.m_min;
        if k < 0 || k as usize >= self.coeffs.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[k as usize]
        }
    }

    /// Nonzero `(m, a_m)` pairs in increasing `m`.
    pub fn terms(&self) -> impl Iterator<Item = (i32, Complex64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm_sqr() > 0.0)
            .map(move |(k, a)| (self.m_min + k as i32, *a))
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    fn normalized(mut self) -> Self {
        while self.coeffs.last().is_some_and(|a| a.norm_sqr() == 0.0) {
            self.coeffs.pop();
        }
        let lead = self.coeffs.iter().take_while(|a| a.norm_sqr() == 0.0).count();
        if lead == self.coeffs.len() {
            return Self {
                validity: self.validity,
                ..Self::zero()
            };
        }
        self.coeffs.drain(..lead);
        self.m_min += lead as i32;
        self
    }

    /// Drops coefficients with `|a_m| <= threshold`.
    pub fn truncated(&self, threshold: f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|a| if a.norm() > threshold { *a } else { Complex64::new(0.0, 0.0) })
            .collect();
        Self {
            m_min: self.m_min,
            coeffs,
            validity: self.validity,
        }
        .normalized()
    }

    fn radius_valid(&self, r: f64) -> bool {
        let (lo, hi) = self.validity;
        let needs_nonzero = self.m_min < 0 && !self.coeffs.is_empty();
        if needs_nonzero && r == 0.0 {
            return false;
        }
        r >= lo * (1.0 - RADIUS_SLACK) && r <= hi * (1.0 + RADIUS_SLACK)
    }

    /// `Σ a_m z^m`, after checking `|z|` against the validity annulus.
    pub fn evaluate(&self, z: Complex64) -> Result<Complex64> {
        if !self.radius_valid(z.norm()) {
            return Err(LabError::Domain(format!(
                "|z| = {} outside validity annulus [{}, {}]",
                z.norm(),
                self.validity.0,
                self.validity.1
            )));
        }
        Ok(self.eval_unchecked(z))
    }

    /// Horner evaluation of the nonnegative and negative parts separately.
    pub fn eval_unchecked(&self, z: Complex64) -> Complex64 {
        let zero = Complex64::new(0.0, 0.0);
        if self.coeffs.is_empty() {
            return zero;
        }
        let m_max = self.m_min + self.coeffs.len() as i32 - 1;
        let mut pos = zero;
        if m_max >= 0 {
            for m in (self.m_min.max(0)..=m_max).rev() {
                pos = pos * z + self.coefficient(m);
            }
            if self.m_min > 0 {
                pos *= z.powi(self.m_min);
            }
        }
        let mut neg = zero;
        if self.m_min < 0 {
            let w = z.inv();
            let top = (-self.m_min) as i32;
            let low = (-m_max).max(1);
            for k in (low..=top).rev() {
                neg = neg * w + self.coefficient(-k);
            }
            neg *= w.powi(low);
        }
        pos + neg
    }

    /// Termwise derivative.
    pub fn derivative(&self) -> Self {
        let terms = self
            .terms()
            .filter(|(m, _)| *m != 0)
            .map(|(m, a)| (m - 1, a * m as f64));
        Self::from_terms(terms)
            .expect("finite")
            .with_validity(self.validity.0, self.validity.1)
    }

    /// Splits off the residue: returns `(a_{-1}, G)` with
    /// `G' = series - a_{-1}/z` and `G` having no constant term.
    pub fn integrate(&self) -> (Complex64, Self) {
        let residue = self.coefficient(-1);
        let terms = self
            .terms()
            .filter(|(m, _)| *m != -1)
            .map(|(m, a)| (m + 1, a / (m + 1) as f64));
        let g = Self::from_terms(terms)
            .expect("finite")
            .with_validity(self.validity.0, self.validity.1);
        (residue, g)
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self::from_terms(self.terms().map(|(m, a)| (m, a * factor)))
            .expect("finite")
            .with_validity(self.validity.0, self.validity.1)
    }

    pub fn add(&self, other: &Self) -> Self {
        let lo = self.validity.0.max(other.validity.0);
        let hi = self.validity.1.min(other.validity.1);
        Self::from_terms(self.terms().chain(other.terms()))
            .expect("finite")
            .truncated(0.0)
            .with_validity(lo, hi)
    }

    /// Cauchy product of two finite series.
    pub fn mul(&self, other: &Self) -> Self {
        let mut terms = Vec::new();
        for (m, a) in self.terms() {
            for (k, b) in other.terms() {
                terms.push((m + k, a * b));
            }
        }
        let lo = self.validity.0.max(other.validity.0);
        let hi = self.validity.1.min(other.validity.1);
        Self::from_terms(terms).expect("finite").with_validity(lo, hi)
    }

    /// Same series with the powers shifted by `k` (multiplication by `z^k`).
    pub fn shifted(&self, k: i32) -> Self {
        Self::from_terms(self.terms().map(|(m, a)| (m + k, a)))
            .expect("finite")
            .with_validity(self.validity.0, self.validity.1)
    }
}

/// `n` samples of a complex field on the circle `|z| = radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleSamples {
    radius: f64,
    values: Vec<Complex64>,
}

impl CircleSamples {
    pub fn new(radius: f64, values: Vec<Complex64>) -> Result<Self> {
        if !values.len().is_power_of_two() {
            return Err(LabError::InvalidArgument(format!(
                "sample count {} is not a power of two",
                values.len()
            )));
        }
        Ok(Self { radius, values })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn angle(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.values.len() as f64
    }
}

/// Samples `field` at `r·e^{2πij/n}`, `j = 0..n`.
pub fn circle_sample<F>(field: F, r: f64, n: usize) -> Result<CircleSamples>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    if !n.is_power_of_two() {
        return Err(LabError::InvalidArgument(format!(
            "sample count {n} is not a power of two"
        )));
    }
    let values = (0..n)
        .map(|j| field(Complex64::from_polar(r, 2.0 * PI * j as f64 / n as f64)))
        .collect::<Result<Vec<_>>>()?;
    CircleSamples::new(r, values)
}

/// All `n` discrete Fourier coefficients, indexed by FFT bin.
fn spectrum(samples: &CircleSamples) -> Vec<Complex64> {
    let n = samples.len();
    let mut buf = samples.values.clone();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    buf
}

fn bin(m: i32, n: usize) -> usize {
    m.rem_euclid(n as i32) as usize
}

fn check_window(m_range: &RangeInclusive<i32>, n: usize) -> Result<()> {
    let half = (n / 2) as i32;
    if m_range.start() > m_range.end() {
        return Err(LabError::Range(format!("empty index range {m_range:?}")));
    }
    if m_range.start().abs() >= half || m_range.end().abs() >= half {
        return Err(LabError::Range(format!(
            "indices {m_range:?} violate |m| < n/2 = {half}"
        )));
    }
    Ok(())
}

/// `c_m = (1/n) Σ_j values[j] e^{-imθ_j}` for every `m` in `m_range`.
pub fn fourier_coefficients(
    samples: &CircleSamples,
    m_range: RangeInclusive<i32>,
) -> Result<Vec<(i32, Complex64)>> {
    check_window(&m_range, samples.len())?;
    let spec = spectrum(samples);
    Ok(m_range.map(|m| (m, spec[bin(m, samples.len())])).collect())
}

/// Result of two-radius Laurent recovery.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentRecovery {
    pub series: LaurentSeries,
    /// `max_m |a_m(r1) - a_m(r2)| / (1 + max_m |a_m|)` over the window.
    pub agreement: f64,
    /// Largest out-of-window Fourier mode relative to the largest in-window one.
    pub tail: f64,
}

impl LaurentRecovery {
    /// The quantity compared against the meromorphy tolerance.
    pub fn score(&self) -> f64 {
        self.agreement.max(self.tail)
    }
}

/// Two-radius recovery from precomputed circle samples.
///
/// Coefficients are estimated on each circle as `a_m = c_m r^{-m}`. The series
/// keeps the better-conditioned estimate for each index, with entries below
/// `COEFF_THRESHOLD · max(1, max |a_m|)` dropped. Fails with
/// `NonMeromorphicSuspected` when the two circles disagree or when the spectrum
/// does not die out inside the window.
pub fn laurent_from_samples(
    inner: &CircleSamples,
    outer: &CircleSamples,
    m_range: RangeInclusive<i32>,
    tol: f64,
) -> Result<LaurentRecovery> {
    let recovery = laurent_estimate(inner, outer, m_range)?;
    if recovery.score() > tol {
        return Err(LabError::NonMeromorphicSuspected {
            score: recovery.score(),
        });
    }
    Ok(recovery)
}

/// [`laurent_from_samples`] for values whose roundoff is absolute rather
/// than relative: noise is judged against `max(peak, value_floor)`.
pub fn laurent_from_samples_with_floor(
    inner: &CircleSamples,
    outer: &CircleSamples,
    m_range: RangeInclusive<i32>,
    tol: f64,
    value_floor: f64,
) -> Result<LaurentRecovery> {
    let recovery = estimate_with_floor(inner, outer, m_range, value_floor)?;
    if recovery.score() > tol {
        return Err(LabError::NonMeromorphicSuspected {
            score: recovery.score(),
        });
    }
    Ok(recovery)
}

/// Same as [`laurent_from_samples`] but never fails on the score.
pub fn laurent_estimate(
    inner: &CircleSamples,
    outer: &CircleSamples,
    m_range: RangeInclusive<i32>,
) -> Result<LaurentRecovery> {
    estimate_with_floor(inner, outer, m_range, 0.0)
}

fn estimate_with_floor(
    inner: &CircleSamples,
    outer: &CircleSamples,
    m_range: RangeInclusive<i32>,
    value_floor: f64,
) -> Result<LaurentRecovery> {
    if inner.len() != outer.len() {
        return Err(LabError::InvalidArgument(
            "circles must carry the same number of samples".into(),
        ));
    }
    if !(inner.radius() > 0.0 && inner.radius() < outer.radius()) {
        return Err(LabError::InvalidArgument(format!(
            "need 0 < r1 < r2, got r1 = {}, r2 = {}",
            inner.radius(),
            outer.radius()
        )));
    }
    let n = inner.len();
    check_window(&m_range, n)?;

    let spec_in = spectrum(inner);
    let spec_out = spectrum(outer);

    let estimate = |spec: &[Complex64], r: f64| -> Vec<Complex64> {
        m_range
            .clone()
            .map(|m| spec[bin(m, n)] * r.powi(-m))
            .collect()
    };
    let a_in = estimate(&spec_in, inner.radius());
    let a_out = estimate(&spec_out, outer.radius());

    // Roundoff in c_m is about eps·max|f| and gets multiplied by r^{-m}, so
    // negative indices are read off the inner circle and nonnegative ones off
    // the outer circle; disagreement below that noise floor is not counted.
    let peak = |s: &CircleSamples| s.values().iter().map(|v| v.norm()).fold(value_floor, f64::max);
    let (peak_in, peak_out) = (peak(inner), peak(outer));
    let noise_scale = 64.0 * f64::EPSILON;
    let mut best = Vec::with_capacity(a_in.len());
    let mut mismatch = 0.0f64;
    for ((m, x), y) in m_range.clone().zip(&a_in).zip(&a_out) {
        best.push(if m < 0 { *x } else { *y });
        let floor = noise_scale
            * (peak_in * inner.radius().powi(-m) + peak_out * outer.radius().powi(-m));
        mismatch = mismatch.max(((x - y).norm() - floor).max(0.0));
    }
    let max_a = best.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let agreement = mismatch / (1.0 + max_a);

    let tail = spectral_tail(&spec_in, &m_range, noise_scale * peak_in)
        .max(spectral_tail(&spec_out, &m_range, noise_scale * peak_out));

    let threshold = COEFF_THRESHOLD * max_a.max(1.0);
    let series = LaurentSeries::from_terms(m_range.clone().zip(best))?
        .truncated(threshold)
        .with_validity(inner.radius(), outer.radius());

    Ok(LaurentRecovery {
        series,
        agreement,
        tail,
    })
}

/// Ratio of the largest resolvable mode outside `window` to the largest inside.
/// Modes at or below `noise` are treated as zero.
fn spectral_tail(spec: &[Complex64], window: &RangeInclusive<i32>, noise: f64) -> f64 {
    let n = spec.len() as i32;
    let half = n / 2;
    let (mut inside, mut outside) = (0.0f64, 0.0f64);
    for m in (-half + 1)..half {
        let c = spec[bin(m, spec.len())].norm();
        if window.contains(&m) {
            inside = inside.max(c);
        } else {
            outside = outside.max(c);
        }
    }
    let outside = (outside - noise).max(0.0);
    if outside == 0.0 {
        0.0
    } else if inside == 0.0 {
        f64::INFINITY
    } else {
        outside / inside
    }
}

/// Samples `field` on `|z| = r1` and `|z| = r2` and recovers its Laurent series.
pub fn laurent_from_circles<F>(
    field: F,
    r1: f64,
    r2: f64,
    n: usize,
    m_range: RangeInclusive<i32>,
) -> Result<LaurentRecovery>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let inner = circle_sample(&field, r1, n)?;
    let outer = circle_sample(&field, r2, n)?;
    laurent_from_samples(&inner, &outer, m_range, COEFF_THRESHOLD)
}
