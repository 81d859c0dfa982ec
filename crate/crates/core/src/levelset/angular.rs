use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Tolerances;
use crate::annulus::AnnulusDomain;
use crate::error::{LabError, Result};
use crate::field::HarmonicField;

/// Stolz-type sector at `center ∈ ∂_R`, opening into the annulus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularSector {
    pub center: Complex64,
    pub half_angle: f64,
    pub radius: f64,
}

impl AngularSector {
    pub fn new(domain: &AnnulusDomain, center: Complex64, half_angle: f64, radius: f64) -> Result<Self> {
        let big_r = domain.inner_radius();
        if domain.is_punctured() {
            return Err(LabError::Domain("angular sectors need R > 0".into()));
        }
        if (center.norm() - big_r).abs() > 1e-12 * big_r.max(1.0) {
            return Err(LabError::Domain(format!("center {center} is not on |z| = {big_r}")));
        }
        if !(half_angle > 0.0 && half_angle < std::f64::consts::FRAC_PI_2) {
            return Err(LabError::InvalidArgument(format!("half angle {half_angle} outside (0, π/2)")));
        }
        if !(radius > 0.0 && radius < 1.0 - big_r) {
            return Err(LabError::Domain(format!("sector radius {radius} leaves A({big_r}, 1)")));
        }
        Ok(Self {
            center,
            half_angle,
            radius,
        })
    }

    /// The point at distance `rho` from the center, `beta` off the normal.
    pub fn point(&self, rho: f64, beta: f64) -> Complex64 {
        let normal = self.center.arg();
        self.center + Complex64::from_polar(rho, normal + beta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AngularLimit {
    Converged { value: f64, oscillation: f64 },
    Divergent { oscillation: f64 },
}

impl AngularLimit {
    pub fn value(&self) -> Option<f64> {
        match self {
            Self::Converged { value, .. } => Some(*value),
            Self::Divergent { .. } => None,
        }
    }
}

/// One generation of the staggered triangular mesh: five rays at distance
/// `rho`, four staggered rays halfway to the next generation.
fn generation(sector: &AngularSector, rho: f64) -> Vec<Complex64> {
    let a = sector.half_angle;
    let mut pts: Vec<Complex64> = [-1.0, -0.5, 0.0, 0.5, 1.0]
        .iter()
        .map(|k| sector.point(rho, k * a))
        .collect();
    pts.extend([-0.75, -0.25, 0.25, 0.75].iter().map(|k| sector.point(0.75 * rho, k * a)));
    pts
}

/// Estimates `lim f(z)` as `z → center` inside the sector, with tolerances
/// scaled to the field.
pub fn angular_limit(field: &HarmonicField, sector: &AngularSector, depth: usize) -> Result<AngularLimit> {
    angular_limit_with(field, sector, depth, &Tolerances::for_scale(field.value_scale()))
}

pub fn angular_limit_with(
    field: &HarmonicField,
    sector: &AngularSector,
    depth: usize,
    tol: &Tolerances,
) -> Result<AngularLimit> {
    if depth < 3 {
        return Err(LabError::InvalidArgument("angular limits need depth ≥ 3".into()));
    }
    let mut means = Vec::with_capacity(depth);
    let mut oscillations = Vec::with_capacity(depth);
    for g in 0..depth {
        let rho = sector.radius * 0.5f64.powi(g as i32);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut sum = 0.0;
        let pts = generation(sector, rho);
        for z in &pts {
            let v = if field.has_exact_values() {
                field.domain().check(*z)?;
                field.probe(*z)
            } else {
                field.eval(*z)?
            };
            lo = lo.min(v);
            hi = hi.max(v);
            sum += v;
        }
        means.push(sum / pts.len() as f64);
        oscillations.push(hi - lo);
    }
    let n = depth;
    let oscillation = oscillations[n - 3..].iter().copied().fold(0.0, f64::max);
    let cauchy = (n - 3..n - 1).all(|g| (means[g + 1] - means[g]).abs() < tol.limit_tol);
    if oscillation.is_finite() && oscillation < tol.limit_tol && cauchy {
        Ok(AngularLimit::Converged {
            value: means[n - 1],
            oscillation,
        })
    } else {
        Ok(AngularLimit::Divergent { oscillation })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annulus::LaurentSeries;
    use std::f64::consts::PI;

    fn annulus_field(log_coeff: f64, series: LaurentSeries) -> HarmonicField {
        HarmonicField::closed_form(log_coeff, series, AnnulusDomain::new(0.5).unwrap())
    }

    #[test]
    fn continuous_fields_have_their_boundary_values() {
        let d = AnnulusDomain::new(0.5).unwrap();
        let xi = Complex64::from_polar(0.5, PI / 3.0);
        let s = AngularSector::new(&d, xi, PI / 6.0, 0.25).unwrap();

        let re_z = annulus_field(0.0, LaurentSeries::from_real(&[(1, 1.0)]));
        let v = angular_limit(&re_z, &s, 30).unwrap().value().unwrap();
        assert!((v - 0.25).abs() < 1e-6);

        let log = annulus_field(1.0, LaurentSeries::zero());
        for k in 0..8 {
            let xi = Complex64::from_polar(0.5, 2.0 * PI * k as f64 / 8.0 + 0.1);
            let s = AngularSector::new(&d, xi, PI / 4.0, 0.3).unwrap();
            let v = angular_limit(&log, &s, 30).unwrap().value().unwrap();
            assert!((v - 0.5f64.ln()).abs() < 1e-6);
        }
    }

    #[test]
    fn boundary_pole_diverges() {
        let d = AnnulusDomain::new(0.5).unwrap();
        let f = annulus_field(0.0, LaurentSeries::zero());
        let pole = HarmonicField::sampled(
            crate::field::SampledField::from_sampler(
                d,
                crate::annulus::PolarGrid::new(0.51, 16, 16).unwrap(),
                std::sync::Arc::new(|z: Complex64| (z - 0.5).inv().re),
            )
            .unwrap(),
        );
        let s = AngularSector::new(&d, Complex64::new(0.5, 0.0), PI / 6.0, 0.25).unwrap();
        assert!(matches!(angular_limit(&pole, &s, 30).unwrap(), AngularLimit::Divergent { .. }));
        assert!(angular_limit(&f, &s, 30).unwrap().value().is_some());
    }

    #[test]
    fn sector_validation() {
        let d = AnnulusDomain::new(0.5).unwrap();
        let xi = Complex64::new(0.5, 0.0);
        assert!(AngularSector::new(&d, xi, PI / 2.0, 0.1).is_err());
        assert!(AngularSector::new(&d, xi, 0.3, 0.5).is_err());
        assert!(AngularSector::new(&d, Complex64::new(0.6, 0.0), 0.3, 0.1).is_err());
        assert!(AngularSector::new(&AnnulusDomain::punctured(), Complex64::new(0.0, 0.0), 0.3, 0.1).is_err());
        let s = AngularSector::new(&d, xi, 0.3, 0.1).unwrap();
        let f = annulus_field(0.0, LaurentSeries::from_real(&[(1, 1.0)]));
        assert!(angular_limit(&f, &s, 2).is_err());
        for k in 0..20 {
            let z = s.point(0.1 * 0.5f64.powi(k), 0.3);
            assert!(d.contains(z));
        }
    }
}
