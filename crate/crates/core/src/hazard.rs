//! Ground-motion prediction, residual sampling, and earthquake magnitude
//! distributions.
//!
//! Median peak ground acceleration is a product of five filters evaluated from
//! a coefficient table:
//!
//! ```text
//! ln PGA = ln G1(M) + ln G2(M, R) + ln G3(R) + ln G4(Vs30) + ln G5(B_depth)
//! ```
//!
//! and spectral acceleration is `Sa(T) = PGA · μ(M, R, Vs30, B_depth, T)`.
//! The filter shapes here are simple parametric forms (log-polynomial magnitude
//! scaling, geometric spreading with a near-source saturation depth, linear
//! anelastic decay, log-linear site and basin terms). Swapping in a different
//! calibration only requires a new coefficient file.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Magnitude scaling and style of faulting (G1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnitudeScaling {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub m_ref: f64,
    #[serde(default)]
    pub ln_style_factor: f64,
}

/// Geometric attenuation (G2): `-gamma · ln(sqrt(R² + h²) / r_ref)`, with a
/// saturation depth `h = h0 · exp(h_m · (M - m_ref))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometricAttenuation {
    pub gamma: f64,
    pub h0: f64,
    #[serde(default)]
    pub h_m: f64,
    pub m_ref: f64,
    pub r_ref: f64,
}

/// Regional anelastic attenuation (G3): `-q · R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnelasticAttenuation {
    pub q: f64,
}

/// Site amplification (G4): `bv · ln(Vs30 / v_ref)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteAmplification {
    pub bv: f64,
    pub v_ref: f64,
}

/// Basin scaling (G5): `a · ln(1 + B_depth / d_ref)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinScaling {
    pub a: f64,
    pub d_ref: f64,
}

/// Spectral shape table. Each row of coefficients belongs to one period;
/// between tabulated periods coefficients are interpolated linearly in ln T,
/// and held constant outside the tabulated range.
///
/// `ln μ = ln_mu0 + m_slope·(M - m_ref) + r_slope·ln((R + r_ref) / r_ref)
///        + vs30_slope·ln(Vs30 / v_ref) + basin_slope·B_depth`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralShape {
    pub periods: Vec<f64>,
    pub ln_mu0: Vec<f64>,
    pub m_slope: Vec<f64>,
    pub r_slope: Vec<f64>,
    pub vs30_slope: Vec<f64>,
    pub basin_slope: Vec<f64>,
    pub m_ref: f64,
    pub r_ref: f64,
    pub v_ref: f64,
}

/// Site- and distance-dependent part of a log median, see
/// [`GmpeCoefficients::site_terms`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteTerms {
    r: f64,
    ln_fixed: f64,
    m_slope: f64,
    m_ref: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmpeCoefficients {
    #[serde(default)]
    pub version: String,
    pub magnitude: MagnitudeScaling,
    pub attenuation: GeometricAttenuation,
    pub anelastic: AnelasticAttenuation,
    pub site: SiteAmplification,
    pub basin: BasinScaling,
    pub spectral_shape: SpectralShape,
    pub sigma_ln_pga: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub lat: f64,
    pub lon: f64,
    pub vs30: f64,
    pub basin_depth: f64,
}

impl Site {
    pub fn validate(&self) -> Result<()> {
        check_coords(self.lat, self.lon)?;
        if !(200.0..=1300.0).contains(&self.vs30) {
            log::warn!(
                "Vs30 {} m/s is outside the 200-1300 m/s validity range",
                self.vs30
            );
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarthquakeEvent {
    pub magnitude: f64,
    pub lat: f64,
    pub lon: f64,
}

impl EarthquakeEvent {
    pub fn new(magnitude: f64, lat: f64, lon: f64) -> Result<Self> {
        check_coords(lat, lon)?;
        if !magnitude.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "magnitude {magnitude} is not finite"
            )));
        }
        if !(5.0..=8.0).contains(&magnitude) {
            log::warn!("magnitude {magnitude} is outside the 5.0-8.0 validity range");
        }
        Ok(Self {
            magnitude,
            lat,
            lon,
        })
    }

    pub fn with_magnitude(self, magnitude: f64) -> Self {
        Self { magnitude, ..self }
    }
}

fn check_coords(lat: f64, lon: f64) -> Result<()> {
    if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
        return Err(Error::InvalidArgument(format!(
            "invalid coordinates ({lat}, {lon})"
        )));
    }
    Ok(())
}

/// Great-circle (haversine) distance between a site and an epicenter, in km.
pub fn source_distance(site: &Site, event: &EarthquakeEvent) -> Result<f64> {
    check_coords(site.lat, site.lon)?;
    check_coords(event.lat, event.lon)?;
    Ok(haversine_km(site.lat, site.lon, event.lat, event.lon))
}

pub fn haversine_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * a.sqrt().min(1.0).asin()
}

impl GmpeCoefficients {
    pub fn from_json(text: &str) -> Result<Self> {
        let coeffs: Self = serde_json::from_str(text)?;
        coeffs.validate()?;
        Ok(coeffs)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_ln_pga >= 0.0) {
            return Err(Error::Validation(format!(
                "sigma_ln_pga {} must be >= 0",
                self.sigma_ln_pga
            )));
        }
        let s = &self.spectral_shape;
        let n = s.periods.len();
        if n == 0 {
            return Err(Error::Validation("spectral_shape has no periods".into()));
        }
        for (name, col) in [
            ("ln_mu0", &s.ln_mu0),
            ("m_slope", &s.m_slope),
            ("r_slope", &s.r_slope),
            ("vs30_slope", &s.vs30_slope),
            ("basin_slope", &s.basin_slope),
        ] {
            if col.len() != n {
                return Err(Error::Validation(format!(
                    "spectral_shape.{name} has {} entries for {n} periods",
                    col.len()
                )));
            }
        }
        if s.periods.windows(2).any(|w| !(w[0] < w[1])) || s.periods[0] <= 0.0 {
            return Err(Error::Validation(
                "spectral_shape periods must be positive and increasing".into(),
            ));
        }
        if self.site.v_ref <= 0.0 || self.basin.d_ref <= 0.0 || self.attenuation.r_ref <= 0.0 {
            return Err(Error::Validation(
                "reference values must be positive".into(),
            ));
        }
        if s.r_ref <= 0.0 || s.v_ref <= 0.0 {
            return Err(Error::Validation(
                "spectral_shape reference values must be positive".into(),
            ));
        }
        Ok(())
    }

    /// The five log-filters `[ln G1, .., ln G5]`.
    pub fn log_filters(&self, m: f64, r: f64, site: &Site) -> [f64; 5] {
        let g1 = &self.magnitude;
        let dm = m - g1.m_ref;
        let ln_g1 = g1.c0 + g1.c1 * dm + g1.c2 * dm * dm + g1.ln_style_factor;

        let g2 = &self.attenuation;
        let h = g2.h0 * (g2.h_m * (m - g2.m_ref)).exp();
        let ln_g2 = -g2.gamma * ((r * r + h * h).sqrt() / g2.r_ref).ln();

        let ln_g3 = -self.anelastic.q * r;
        let ln_g4 = self.site.bv * (site.vs30 / self.site.v_ref).ln();
        let ln_g5 = self.basin.a * (1.0 + site.basin_depth / self.basin.d_ref).ln();
        [ln_g1, ln_g2, ln_g3, ln_g4, ln_g5]
    }

    /// Median PGA in g (residual term excluded).
    pub fn median_pga(&self, m: f64, r: f64, site: &Site) -> Result<f64> {
        self.median_im(m, &self.site_terms(r, site, None)?)
    }

    /// The magnitude-free parts of `ln PGA` and, for a spectral period, of
    /// `ln μ`, so repeated events at a fixed site skip them.
    pub fn site_terms(&self, r: f64, site: &Site, period: Option<f64>) -> Result<SiteTerms> {
        if !(r >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "distance {r} km must be >= 0"
            )));
        }
        let [_, _, ln_g3, ln_g4, ln_g5] = self.log_filters(self.magnitude.m_ref, r, site);
        let mut terms = SiteTerms {
            r,
            ln_fixed: ln_g3 + ln_g4 + ln_g5,
            m_slope: 0.0,
            m_ref: 0.0,
        };
        if let Some(period) = period {
            check_period(period)?;
            let s = &self.spectral_shape;
            let (i, j, w) = period_bracket(&s.periods, period);
            let lerp = |col: &[f64]| col[i] + w * (col[j] - col[i]);
            terms.ln_fixed += lerp(&s.ln_mu0)
                + lerp(&s.r_slope) * ((r + s.r_ref) / s.r_ref).ln()
                + lerp(&s.vs30_slope) * (site.vs30 / s.v_ref).ln()
                + lerp(&s.basin_slope) * site.basin_depth;
            terms.m_slope = lerp(&s.m_slope);
            terms.m_ref = s.m_ref;
        }
        Ok(terms)
    }

    /// Median intensity measure in g at magnitude `m` for precomputed terms.
    pub fn median_im(&self, m: f64, terms: &SiteTerms) -> Result<f64> {
        let g1 = &self.magnitude;
        let dm = m - g1.m_ref;
        let ln_g1 = g1.c0 + g1.c1 * dm + g1.c2 * dm * dm + g1.ln_style_factor;
        let g2 = &self.attenuation;
        let h = g2.h0 * (g2.h_m * (m - g2.m_ref)).exp();
        let ln_g2 = -g2.gamma * ((terms.r * terms.r + h * h).sqrt() / g2.r_ref).ln();
        let im = (ln_g1 + ln_g2 + terms.ln_fixed + terms.m_slope * (m - terms.m_ref)).exp();
        if !(im > 0.0 && im.is_finite()) {
            return Err(Error::Numerical(format!(
                "median intensity evaluated to {im}"
            )));
        }
        Ok(im)
    }

    /// Spectral shape factor μ at `period` seconds.
    pub fn spectral_shape(&self, m: f64, r: f64, site: &Site, period: f64) -> Result<f64> {
        check_period(period)?;
        let s = &self.spectral_shape;
        let (i, j, w) = period_bracket(&s.periods, period);
        let lerp = |col: &[f64]| col[i] + w * (col[j] - col[i]);
        let ln_mu = lerp(&s.ln_mu0)
            + lerp(&s.m_slope) * (m - s.m_ref)
            + lerp(&s.r_slope) * ((r + s.r_ref) / s.r_ref).ln()
            + lerp(&s.vs30_slope) * (site.vs30 / s.v_ref).ln()
            + lerp(&s.basin_slope) * site.basin_depth;
        Ok(ln_mu.exp())
    }

    /// Median spectral acceleration in g.
    pub fn spectral_accel(&self, m: f64, r: f64, site: &Site, period: f64) -> Result<f64> {
        self.median_im(m, &self.site_terms(r, site, Some(period))?)
    }
}

fn check_period(period: f64) -> Result<()> {
    if !(0.01..=5.0).contains(&period) {
        return Err(Error::InvalidArgument(format!(
            "period {period} s is outside 0.01-5 s"
        )));
    }
    Ok(())
}

// Indices and weight for linear interpolation in ln T, clamped at the ends.
fn period_bracket(periods: &[f64], t: f64) -> (usize, usize, f64) {
    let last = periods.len() - 1;
    if t <= periods[0] {
        return (0, 0, 0.0);
    }
    if t >= periods[last] {
        return (last, last, 0.0);
    }
    let j = periods.partition_point(|&p| p < t);
    let i = j - 1;
    let w = (t.ln() - periods[i].ln()) / (periods[j].ln() - periods[i].ln());
    (i, j, w)
}

/// One lognormal draw around `median`: `ln x ~ N(ln median, sigma_ln²)`.
pub fn sample_ground_motion<R: Rng + ?Sized>(
    median: f64,
    sigma_ln: f64,
    rng: &mut R,
) -> Result<f64> {
    if !(median > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "median {median} must be positive"
        )));
    }
    if !(sigma_ln >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sigma_ln {sigma_ln} must be >= 0"
        )));
    }
    if sigma_ln == 0.0 {
        return Ok(median);
    }
    let z: f64 = rng.sample(StandardNormal);
    Ok(median * (sigma_ln * z).exp())
}

/// Truncated exponential magnitude distribution with density
/// `β exp(-β(m - m_min)) / (1 - exp(-β(m_max - m_min)))` on `[m_min, m_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncExpMagnitude {
    pub beta: f64,
    pub m_min: f64,
    pub m_max: f64,
}

impl TruncExpMagnitude {
    pub fn new(beta: f64, m_min: f64, m_max: f64) -> Result<Self> {
        let d = Self { beta, m_min, m_max };
        d.validate()?;
        Ok(d)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let d: Self = serde_json::from_str(text)?;
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::Validation(format!(
                "beta {} must be positive",
                self.beta
            )));
        }
        if !(self.m_min < self.m_max) {
            return Err(Error::Validation(format!(
                "m_min {} must be below m_max {}",
                self.m_min, self.m_max
            )));
        }
        Ok(())
    }

    fn mass(&self) -> f64 {
        -(-self.beta * (self.m_max - self.m_min)).exp_m1()
    }

    pub fn pdf(&self, m: f64) -> f64 {
        if m < self.m_min || m > self.m_max {
            return 0.0;
        }
        self.beta * (-self.beta * (m - self.m_min)).exp() / self.mass()
    }

    pub fn cdf(&self, m: f64) -> f64 {
        if m <= self.m_min {
            0.0
        } else if m >= self.m_max {
            1.0
        } else {
            -(-self.beta * (m - self.m_min)).exp_m1() / self.mass()
        }
    }

    /// Closed-form inverse CDF.
    pub fn quantile(&self, u: f64) -> f64 {
        let m = self.m_min - (-u * self.mass()).ln_1p() / self.beta;
        m.clamp(self.m_min, self.m_max)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }
}

/// Shape, lower and upper bound of θ in `m = 8.0 − θ` for training magnitudes.
pub const TRAINING_THETA: TruncExpMagnitude = TruncExpMagnitude {
    beta: 15.0,
    m_min: 0.0,
    m_max: 1.5,
};
pub const TRAINING_M_MAX: f64 = 8.0;

/// Magnitude for surrogate training data: `8.0 − θ`, θ truncated exponential
/// with shape 15 on `[0, 1.5]`. Draws pile up near 8.0.
pub fn sample_training_magnitude<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    training_magnitude_from_theta(TRAINING_THETA.sample(rng))
}

pub fn training_magnitude_from_theta(theta: f64) -> f64 {
    TRAINING_M_MAX - theta
}

/// How event magnitudes are drawn for an outer Monte Carlo loop or a dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MagnitudeSampler {
    Fixed(f64),
    TruncExp(TruncExpMagnitude),
    /// `8.0 − θ` training sampler.
    Training,
    Uniform {
        lo: f64,
        hi: f64,
    },
}

impl MagnitudeSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            MagnitudeSampler::Fixed(m) => m,
            MagnitudeSampler::TruncExp(d) => d.sample(rng),
            MagnitudeSampler::Training => sample_training_magnitude(rng),
            MagnitudeSampler::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
        }
    }
}

impl From<TruncExpMagnitude> for MagnitudeSampler {
    fn from(d: TruncExpMagnitude) -> Self {
        MagnitudeSampler::TruncExp(d)
    }
}
