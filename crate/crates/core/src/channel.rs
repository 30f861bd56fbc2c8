//! Underwater acoustic link model.
//!
//! Attenuation follows Urick's form `A(l, f) = A0 * l^kappa * a(f)^l` with
//! Thorp's absorption coefficient. The absorption term is expressed in dB/km,
//! so the distance in its exponent is converted to kilometres while the
//! spreading term keeps metres. Small-scale fading is Rayleigh and the
//! modulation is BPSK, which gives the closed-form mean bit error rate used by
//! [`bit_error_prob`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nominal speed of sound used by the simulator, in m/s.
pub const NOMINAL_SOUND_SPEED: f64 = 1500.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Carrier frequency in kHz.
    pub frequency_khz: f64,
    /// Spreading factor, 1 (cylindrical) to 2 (spherical).
    pub spreading: f64,
    /// Constant attenuation factor `A0`.
    pub atten_const: f64,
    /// Transmit energy per bit `e_b`, J/bit.
    pub energy_per_bit: f64,
    /// Noise power spectral density `N0`, W/Hz.
    pub noise_density: f64,
    /// Packet size `M` in bits.
    pub packet_bits: u32,
    /// Bit rate `mu` in bit/s.
    pub bit_rate: f64,
}

impl Default for ChannelParams {
    /// Defaults with `e_b` already calibrated so that a 100 m link delivers a
    /// 512-bit packet with probability 0.9.
    fn default() -> Self {
        ChannelParams {
            frequency_khz: 10.0,
            spreading: 1.5,
            atten_const: 1.0,
            energy_per_bit: 1.248_499_360_889_659_5e-6,
            noise_density: 1e-12,
            packet_bits: 512,
            bit_rate: 10_000.0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("frequency_khz", self.frequency_khz),
            ("atten_const", self.atten_const),
            ("energy_per_bit", self.energy_per_bit),
            ("noise_density", self.noise_density),
            ("bit_rate", self.bit_rate),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("channel.{name} must be > 0, got {v}")));
            }
        }
        if !(1.0..=2.0).contains(&self.spreading) {
            return Err(Error::Config(format!(
                "channel.spreading must lie in [1, 2], got {}",
                self.spreading
            )));
        }
        if self.packet_bits == 0 {
            return Err(Error::Config("channel.packet_bits must be >= 1".into()));
        }
        Ok(())
    }

    /// Time on air for one packet, `M / mu`, in seconds.
    pub fn airtime(&self) -> f64 {
        f64::from(self.packet_bits) / self.bit_rate
    }

    /// Linear `e_b / N0`.
    pub fn ebn0(&self) -> f64 {
        self.energy_per_bit / self.noise_density
    }
}

/// Thorp absorption in dB/km for a frequency in kHz.
pub fn thorp_absorption_db_per_km(f_khz: f64) -> Result<f64> {
    if !(f_khz > 0.0) {
        return Err(Error::domain(
            "thorp_absorption_db_per_km",
            format!("frequency must be > 0 kHz, got {f_khz}"),
        ));
    }
    let f2 = f_khz * f_khz;
    Ok(2.75e-4 * f2 + 44.0 * f2 / (4100.0 + f_khz) + 0.11 * f2 / (1.0 + f2) + 1e-3)
}

/// Linear power attenuation over `distance_m` metres.
pub fn attenuation(distance_m: f64, params: &ChannelParams) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(Error::domain(
            "attenuation",
            format!("distance must be > 0 m, got {distance_m}"),
        ));
    }
    let absorption_per_km = 10f64.powf(thorp_absorption_db_per_km(params.frequency_khz)? / 10.0);
    Ok(params.atten_const
        * distance_m.powf(params.spreading)
        * absorption_per_km.powf(distance_m / 1000.0))
}

/// Mean received SNR, `e_b / (N0 * A(l, f))`.
pub fn mean_snr(distance_m: f64, params: &ChannelParams) -> Result<f64> {
    Ok(params.ebn0() / attenuation(distance_m, params)?)
}

/// Mean BPSK bit error probability under Rayleigh fading at mean SNR `snr`.
pub fn rayleigh_bpsk_ber(snr: f64) -> f64 {
    if snr <= 0.0 {
        return 0.5;
    }
    // 1 - sqrt(x/(1+x)) cancels badly for large x; use the conjugate form.
    let root = (snr / (1.0 + snr)).sqrt();
    0.5 * (1.0 / (1.0 + snr)) / (1.0 + root)
}

pub fn bit_error_prob(distance_m: f64, params: &ChannelParams) -> Result<f64> {
    Ok(rayleigh_bpsk_ber(mean_snr(distance_m, params)?))
}

/// Probability that all `bits` bits survive at bit error rate `pe`.
pub fn packet_success(pe: f64, bits: u32) -> f64 {
    // ln_1p keeps precision when pe is tiny and bits is large.
    (f64::from(bits) * (-pe).ln_1p()).exp()
}

/// Whole-packet delivery probability over a link of `distance_m`.
pub fn packet_delivery_prob(distance_m: f64, params: &ChannelParams) -> Result<f64> {
    Ok(packet_success(bit_error_prob(distance_m, params)?, params.packet_bits))
}

/// Sound speed polynomial in depth (m), temperature (deg C) and salinity (ppt).
///
/// The simulator itself uses [`NOMINAL_SOUND_SPEED`].
pub fn sound_speed(depth_m: f64, temp_c: f64, salinity_ppt: f64) -> f64 {
    let (h, t, s) = (depth_m, temp_c, salinity_ppt);
    -7.139e-13 * h.powi(3) * t + 2.374e-2 * t.powi(3) + 1.675e-7 * h * h - 5.304e-2 * t * t
        - 1.025e-2 * t * (s - 35.0)
        + 0.163 * h
        + 4.591 * t
        + 1.34 * (s - 35.0)
        + 1448.96
}

/// Finds `e_b` such that `packet_delivery_prob(distance_m) == target`, holding
/// every other parameter fixed. Bisection on `log(e_b)`.
pub fn calibrate_energy_per_bit(
    params: &ChannelParams,
    distance_m: f64,
    target: f64,
) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Calibration(format!(
            "target delivery probability must be in (0, 1), got {target}"
        )));
    }
    if !(distance_m > 0.0) {
        return Err(Error::Calibration(format!(
            "calibration distance must be > 0, got {distance_m}"
        )));
    }
    let eval = |log_eb: f64| -> Result<f64> {
        let p = ChannelParams {
            energy_per_bit: log_eb.exp(),
            ..*params
        };
        packet_delivery_prob(distance_m, &p)
    };
    let (mut lo, mut hi) = ((1e-30f64).ln(), (1e6f64).ln());
    if eval(lo)? > target || eval(hi)? < target {
        return Err(Error::Calibration(format!(
            "target {target} not bracketed at {distance_m} m"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if eval(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn thorp_hand_values() {
        // Term-by-term evaluation done outside the crate.
        assert!(rel_close(thorp_absorption_db_per_km(10.0).unwrap(), 1.207_970_501_794_705, 1e-12));
        assert!(rel_close(thorp_absorption_db_per_km(1.0).unwrap(), 0.067_004_090_465_740_06, 1e-12));
        assert!(thorp_absorption_db_per_km(20.0).unwrap() > thorp_absorption_db_per_km(10.0).unwrap());
    }

    #[test]
    fn thorp_rejects_non_positive_frequency() {
        assert!(matches!(thorp_absorption_db_per_km(0.0), Err(Error::Domain { .. })));
        assert!(thorp_absorption_db_per_km(-3.0).is_err());
        assert!(thorp_absorption_db_per_km(f64::NAN).is_err());
    }

    #[test]
    fn attenuation_cases() {
        let unit = ChannelParams {
            spreading: 1.0,
            ..ChannelParams::default()
        };
        let a1 = attenuation(1.0, &unit).unwrap();
        assert!((a1 - 1.0).abs() < 1e-3);

        let sq = ChannelParams {
            spreading: 2.0,
            frequency_khz: 1e-9,
            ..ChannelParams::default()
        };
        // Absorption is ~1e-3 dB/km at vanishing frequency; isolate spreading.
        let ratio = attenuation(200.0, &sq).unwrap() / attenuation(100.0, &sq).unwrap();
        assert!((ratio - 4.0).abs() < 1e-4);

        let p = ChannelParams::default();
        assert!(rel_close(attenuation(150.0, &p).unwrap(), 1_915.386_605_865_326, 1e-10));
        assert!(attenuation(0.0, &p).is_err());
    }

    #[test]
    fn snr_values() {
        let p = ChannelParams {
            energy_per_bit: 1e-6,
            noise_density: 1e-12,
            ..ChannelParams::default()
        };
        assert!(rel_close(mean_snr(100.0, &p).unwrap(), 972.568_714_208_256, 1e-10));
        assert!(mean_snr(150.0, &p).unwrap() < mean_snr(50.0, &p).unwrap());
    }

    #[test]
    fn ber_values() {
        assert!(rel_close(rayleigh_bpsk_ber(3.0), 0.066_987_298_107_780_7, 1e-12));
        assert!(rayleigh_bpsk_ber(1e6) < 1e-6);
        assert!((rayleigh_bpsk_ber(1e-12) - 0.5).abs() < 1e-6);
        assert_eq!(rayleigh_bpsk_ber(0.0), 0.5);
    }

    #[test]
    fn packet_success_values() {
        assert_eq!(packet_success(0.0, 4096), 1.0);
        assert!(rel_close(packet_success(0.5, 1), 0.5, 1e-12));
        assert!(rel_close(packet_success(1e-4, 1000), 0.904_832_893_558_556_2, 1e-10));
    }

    #[test]
    fn sound_speed_values() {
        assert!((sound_speed(0.0, 0.0, 35.0) - 1448.96).abs() < 1e-9);
        assert!(rel_close(sound_speed(1000.0, 10.0, 35.0), 1_676.466_361, 1e-9));
    }

    #[test]
    fn default_is_calibrated() {
        let p = ChannelParams::default();
        let pd = packet_delivery_prob(100.0, &p).unwrap();
        assert!((pd - 0.9).abs() < 1e-9, "{pd}");
        let eb = calibrate_energy_per_bit(&p, 100.0, 0.9).unwrap();
        assert!(rel_close(eb, p.energy_per_bit, 1e-8));
    }

    #[test]
    fn calibration_rejects_bad_target() {
        let p = ChannelParams::default();
        assert!(calibrate_energy_per_bit(&p, 100.0, 1.0).is_err());
        assert!(calibrate_energy_per_bit(&p, 0.0, 0.5).is_err());
    }

    #[test]
    fn validate_rejects_spreading_out_of_range() {
        let p = ChannelParams {
            spreading: 2.5,
            ..ChannelParams::default()
        };
        assert!(p.validate().is_err());
        assert!(ChannelParams::default().validate().is_ok());
    }
}
