//! Optical inter-satellite link budget and packet success model.
//!
//! Received power follows the Gaussian-beam link equation with identical
//! transmit and receive telescopes. The squared pointing error
//! `X = θ_T² + θ_R²` is a sum of four squared zero-mean normals, i.e.
//! Gamma(shape 2, scale 2σ²). A packet survives when the SNR clears the
//! threshold, which reduces to `X` staying under a closed-form bound.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};

pub const ELECTRON_CHARGE: f64 = 1.602176634e-19;
pub const BOLTZMANN: f64 = 1.380649e-23;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm) * 1e-3
}

/// Link-budget constants, all in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkBudgetParams {
    pub wavelength: f64,
    pub transmit_power: f64,
    pub bandwidth: f64,
    pub tx_efficiency: f64,
    pub rx_efficiency: f64,
    pub telescope_diameter: f64,
    pub responsivity: f64,
    pub pointing_sigma: f64,
    pub dark_current: f64,
    pub noise_temperature: f64,
    pub load_resistance: f64,
    /// Linear SNR threshold (20 dB -> 100).
    pub snr_threshold: f64,
    pub electron_charge: f64,
    pub boltzmann: f64,
}

impl Default for LinkBudgetParams {
    fn default() -> Self {
        LinkBudgetParams {
            wavelength: 1550e-9,
            transmit_power: dbm_to_watts(10.0),
            bandwidth: 2e9,
            tx_efficiency: 0.8,
            rx_efficiency: 0.8,
            telescope_diameter: 75e-3,
            responsivity: 0.6,
            pointing_sigma: 6e-6,
            dark_current: 1e-9,
            noise_temperature: 500.0,
            load_resistance: 1000.0,
            snr_threshold: db_to_linear(20.0),
            electron_charge: ELECTRON_CHARGE,
            boltzmann: BOLTZMANN,
        }
    }
}

impl LinkBudgetParams {
    pub fn snr_threshold_db(&self) -> f64 {
        linear_to_db(self.snr_threshold)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("wavelength", self.wavelength),
            ("bandwidth", self.bandwidth),
            ("telescope_diameter", self.telescope_diameter),
            ("responsivity", self.responsivity),
            ("pointing_sigma", self.pointing_sigma),
            ("dark_current", self.dark_current),
            ("noise_temperature", self.noise_temperature),
            ("load_resistance", self.load_resistance),
            ("snr_threshold", self.snr_threshold),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.transmit_power >= 0.0) {
            return Err(Error::Config("transmit power must be non-negative".into()));
        }
        for (name, v) in [("tx_eff", self.tx_efficiency), ("rx_eff", self.rx_efficiency)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

/// `(πD/λ)²`, shared by both telescopes.
pub fn telescope_gain(params: &LinkBudgetParams) -> f64 {
    (PI * params.telescope_diameter / params.wavelength).powi(2)
}

fn check_distance(distance: f64) -> Result<()> {
    if distance > 0.0 && distance.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "link distance must be positive, got {distance}"
        )))
    }
}

/// Received power with zero pointing error.
fn peak_received_power(params: &LinkBudgetParams, distance: f64) -> f64 {
    let g = telescope_gain(params);
    let free_space = (params.wavelength / (4.0 * PI * distance)).powi(2);
    params.transmit_power * params.tx_efficiency * params.rx_efficiency * g * g * free_space
}

pub fn received_power(params: &LinkBudgetParams, distance: f64, pointing: f64) -> Result<f64> {
    check_distance(distance)?;
    let g = telescope_gain(params);
    Ok(peak_received_power(params, distance) * (-g * pointing.max(0.0)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseVariances {
    pub shot: f64,
    pub dark_current: f64,
    pub thermal: f64,
}

impl NoiseVariances {
    pub fn total(&self) -> f64 {
        self.dark_current + self.thermal + self.shot
    }
}

pub fn noise_variances(params: &LinkBudgetParams, received: f64) -> NoiseVariances {
    let q = params.electron_charge;
    NoiseVariances {
        shot: 2.0 * q * params.responsivity * received * params.bandwidth,
        dark_current: 2.0 * q * params.dark_current * params.bandwidth,
        thermal: 4.0 * params.boltzmann * params.noise_temperature * params.bandwidth
            / params.load_resistance,
    }
}

/// Linear SNR: received optical power over the summed current variances.
/// The ratio is taken exactly as the link model states it, without
/// converting power to photocurrent.
pub fn snr(params: &LinkBudgetParams, distance: f64, pointing: f64) -> Result<f64> {
    let p = received_power(params, distance, pointing)?;
    Ok(p / noise_variances(params, p).total())
}

pub fn data_rate(params: &LinkBudgetParams, snr: f64) -> f64 {
    params.bandwidth * (1.0 + snr.max(0.0)).log2()
}

/// CDF of `θ_T² + θ_R²` ~ Gamma(2, scale 2σ²).
pub fn pointing_cdf(params: &LinkBudgetParams, x: f64) -> f64 {
    let x = x.max(0.0);
    let scale = 2.0 * params.pointing_sigma * params.pointing_sigma;
    if scale == 0.0 {
        return if x > 0.0 { 1.0 } else { 0.0 };
    }
    let z = x / scale;
    1.0 - (-z).exp() * (1.0 + z)
}

/// Draw the squared pointing error from its four normal components.
pub fn sample_pointing<R: Rng + ?Sized>(params: &LinkBudgetParams, rng: &mut R) -> f64 {
    let normal = rand_distr::Normal::new(0.0, params.pointing_sigma).expect("finite sigma");
    (0..4)
        .map(|_| {
            let v: f64 = rng.sample(normal);
            v * v
        })
        .sum()
}

/// Largest squared pointing error for which the SNR still clears the
/// threshold, or `None` when no pointing error is good enough.
pub fn pointing_threshold(params: &LinkBudgetParams, distance: f64) -> Result<Option<f64>> {
    check_distance(distance)?;
    let shot_slope = 2.0 * params.electron_charge * params.responsivity * params.bandwidth;
    let noise = noise_variances(params, 0.0);
    let floor = noise.dark_current + noise.thermal;
    let gamma = params.snr_threshold;
    if gamma * shot_slope >= 1.0 {
        return Ok(None);
    }
    let required = gamma * floor / (1.0 - gamma * shot_slope);
    let peak = peak_received_power(params, distance);
    if required >= peak {
        return Ok(None);
    }
    Ok(Some((peak / required).ln() / telescope_gain(params)))
}

/// Probability that one packet on a link of the given length is received.
pub fn success_probability(params: &LinkBudgetParams, distance: f64) -> Result<f64> {
    Ok(match pointing_threshold(params, distance)? {
        None => 0.0,
        Some(x) => pointing_cdf(params, x),
    })
}

/// One Bernoulli(p) survival flag per packet.
pub fn sample_packet_mask<R: Rng + ?Sized>(p: f64, packets: usize, rng: &mut R) -> Vec<bool> {
    let p = p.clamp(0.0, 1.0);
    (0..packets).map(|_| rng.random_bool(p)).collect()
}

/// Summary of one link evaluated at zero pointing error.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LinkReport {
    pub distance_m: f64,
    pub received_power_w: f64,
    pub snr_db: f64,
    pub data_rate_bps: f64,
    pub success_probability: f64,
}

pub fn link_report(params: &LinkBudgetParams, distance: f64) -> Result<LinkReport> {
    let pr = received_power(params, distance, 0.0)?;
    let s = snr(params, distance, 0.0)?;
    Ok(LinkReport {
        distance_m: distance,
        received_power_w: pr,
        snr_db: linear_to_db(s),
        data_rate_bps: data_rate(params, s),
        success_probability: success_probability(params, distance)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::StreamKey;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn gain_values() {
        let p = LinkBudgetParams::default();
        assert!(rel(telescope_gain(&p), 2.3107814674766964e10) < 1e-12);
        let unit = LinkBudgetParams {
            wavelength: PI * 0.075,
            ..p.clone()
        };
        assert!((telescope_gain(&unit) - 1.0).abs() < 1e-12);
        let double = LinkBudgetParams {
            telescope_diameter: 0.15,
            ..p.clone()
        };
        assert!(rel(telescope_gain(&double), 4.0 * telescope_gain(&p)) < 1e-12);
    }

    #[test]
    fn received_power_values() {
        let p = LinkBudgetParams::default();
        // independent scalar evaluation of the link equation
        let pr = received_power(&p, 4.3106e6, 0.0).unwrap();
        assert!(rel(pr, 2.7981174814567786e-09) < 1e-6);
        let far = received_power(&p, 2.0 * 4.3106e6, 0.0).unwrap();
        assert!(rel(far * 4.0, pr) < 1e-12);
        let off = LinkBudgetParams {
            transmit_power: 0.0,
            ..p.clone()
        };
        assert_eq!(received_power(&off, 1e6, 0.0).unwrap(), 0.0);
        assert!(received_power(&p, 0.0, 0.0).is_err());
        assert!(received_power(&p, 1e6, 1e-10).unwrap() < received_power(&p, 1e6, 0.0).unwrap());
    }

    #[test]
    fn noise_values() {
        let p = LinkBudgetParams::default();
        let n = noise_variances(&p, 0.0);
        assert_eq!(n.shot, 0.0);
        assert!(rel(n.dark_current, 6.408706536e-19) < 1e-9);
        // 4 kB T B / R_L = 4 * 1.380649e-23 * 500 * 2e9 / 1000
        assert!(rel(n.thermal, 5.5225960e-14) < 1e-9);
    }

    #[test]
    fn snr_values() {
        let p = LinkBudgetParams::default();
        assert!(rel(snr(&p, 4.3106e6, 0.0).unwrap(), 50665.131019532884) < 1e-6);
        let off = LinkBudgetParams {
            transmit_power: 0.0,
            ..p.clone()
        };
        assert_eq!(snr(&off, 4.3106e6, 0.0).unwrap(), 0.0);
        let mut prev = f64::INFINITY;
        for i in 0..50 {
            let s = snr(&p, 4.3106e6, i as f64 * 2e-11).unwrap();
            assert!(s < prev);
            prev = s;
        }
    }

    #[test]
    fn rate_values() {
        let p = LinkBudgetParams::default();
        assert_eq!(data_rate(&p, 0.0), 0.0);
        assert!(rel(data_rate(&p, 1.0), 2e9) < 1e-15);
        assert!(rel(data_rate(&p, 3.0), 4e9) < 1e-15);
    }

    #[test]
    fn pointing_cdf_values() {
        let p = LinkBudgetParams::default();
        let s = 2.0 * p.pointing_sigma * p.pointing_sigma;
        assert_eq!(pointing_cdf(&p, 0.0), 0.0);
        assert_eq!(pointing_cdf(&p, -1.0), 0.0);
        assert!((pointing_cdf(&p, 2.0 * s) - 0.5939941502901619).abs() < 1e-12);
        assert!((pointing_cdf(&p, 1e3 * s) - 1.0).abs() < 1e-12);
        let mut prev = 0.0;
        for i in 0..100 {
            let f = pointing_cdf(&p, i as f64 * 0.1 * s);
            assert!(f >= prev);
            prev = f;
        }
    }

    #[test]
    fn pointing_cdf_matches_sampler() {
        let p = LinkBudgetParams::default();
        let s = 2.0 * p.pointing_sigma * p.pointing_sigma;
        let mut rng = StreamKey::root(11).rng();
        let n = 1_000_000;
        let draws: Vec<f64> = (0..n).map(|_| sample_pointing(&p, &mut rng)).collect();
        for mult in [0.5, 1.0, 2.0, 4.0] {
            let x = mult * s;
            let emp = draws.iter().filter(|&&d| d <= x).count() as f64 / n as f64;
            assert!((emp - pointing_cdf(&p, x)).abs() < 0.003, "x={mult}s");
        }
    }

    #[test]
    fn success_probability_limits() {
        let p = LinkBudgetParams::default();
        let off = LinkBudgetParams {
            transmit_power: 0.0,
            ..p.clone()
        };
        assert_eq!(success_probability(&off, 4.3106e6).unwrap(), 0.0);
        let steady = LinkBudgetParams {
            pointing_sigma: 1e-12,
            ..p.clone()
        };
        assert!(success_probability(&steady, 4.3106e6).unwrap() > 1.0 - 1e-12);
        assert!(success_probability(&p, -1.0).is_err());
        // reference closed-form value from an independent scalar script
        assert!((success_probability(&p, 4.3106e6).unwrap() - 0.8876919621856892).abs() < 1e-9);
    }

    #[test]
    fn success_probability_monotone() {
        let p = LinkBudgetParams::default();
        let grid = |i: usize| i as f64 / 19.0;
        let mut prev = 1.0;
        for i in 0..20 {
            let v = success_probability(&p, 5e5 + grid(i) * 2e7).unwrap();
            assert!(v <= prev);
            prev = v;
        }
        let mut prev = 1.0;
        for i in 0..20 {
            let q = LinkBudgetParams {
                snr_threshold: db_to_linear(10.0 + grid(i) * 30.0),
                ..p.clone()
            };
            let v = success_probability(&q, 4.3e6).unwrap();
            assert!(v <= prev);
            prev = v;
        }
        let mut prev = 0.0;
        for i in 0..20 {
            let q = LinkBudgetParams {
                transmit_power: dbm_to_watts(-20.0 + grid(i) * 40.0),
                ..p.clone()
            };
            let v = success_probability(&q, 4.3e6).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn inverse_square_factorization() {
        let p = LinkBudgetParams::default();
        let x = 3e-11;
        let base = received_power(&p, 1e6, x).unwrap() * 1e12;
        for l in [2e6, 5e6, 1.3e7] {
            assert!(rel(received_power(&p, l, x).unwrap() * l * l, base) < 1e-12);
        }
    }

    #[test]
    fn packet_masks() {
        let mut rng = StreamKey::root(3).rng();
        assert!(sample_packet_mask(1.0, 64, &mut rng).iter().all(|&b| b));
        assert!(sample_packet_mask(0.0, 64, &mut rng).iter().all(|&b| !b));
        let n = 1_000_000;
        let ones = sample_packet_mask(0.5, n, &mut rng).iter().filter(|&&b| b).count();
        let mean = ones as f64 / n as f64;
        assert!((0.4985..=0.5015).contains(&mean));
        let a = sample_packet_mask(0.3, 100, &mut StreamKey::root(9).rng());
        let b = sample_packet_mask(0.3, 100, &mut StreamKey::root(9).rng());
        assert_eq!(a, b);
    }

    #[test]
    fn threshold_db_round_trip() {
        let p = LinkBudgetParams::default();
        assert!((p.snr_threshold - 100.0).abs() < 1e-12);
        assert!((p.snr_threshold_db() - 20.0).abs() < 1e-12);
    }
}
