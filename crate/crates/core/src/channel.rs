//! Channel and detector parameters.

use crate::error::{check_range, Error, Result};
use crate::scalar::{lit, to_f64, Real};

pub const DEFAULT_ETA_DET: f64 = 0.145;
pub const DEFAULT_P_DARK: f64 = 3e-6;
pub const DEFAULT_E_D: f64 = 0.015;
pub const DEFAULT_F: f64 = 1.16;
pub const DEFAULT_ALPHA_DB_PER_KM: f64 = 0.2;

/// Link and detector model shared by the analytic and Monte Carlo paths.
///
/// `eta_a`, `eta_b` already include detector efficiency.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelParams<T: Real> {
    pub eta_a: T,
    pub eta_b: T,
    /// Per detector, per time-bin.
    pub p_dark: T,
    pub e_d: T,
    pub alpha_db_per_km: T,
    pub f: T,
}

impl<T: Real> Default for ChannelParams<T> {
    fn default() -> Self {
        Self {
            eta_a: T::one(),
            eta_b: T::one(),
            p_dark: lit(DEFAULT_P_DARK),
            e_d: lit(DEFAULT_E_D),
            alpha_db_per_km: lit(DEFAULT_ALPHA_DB_PER_KM),
            f: lit(DEFAULT_F),
        }
    }
}

/// `10^(-alpha L / 10)`.
pub fn fiber_transmittance<T: Real>(alpha_db_per_km: T, length_km: T) -> T {
    lit::<T>(10.0).powf(-alpha_db_per_km * length_km / lit(10.0))
}

impl<T: Real> ChannelParams<T> {
    /// Noiseless, lossless link.
    pub fn ideal() -> Self {
        Self { p_dark: T::zero(), e_d: T::zero(), f: T::one(), ..Self::default() }
    }

    pub fn with_eta(mut self, eta_a: T, eta_b: T) -> Self {
        self.eta_a = eta_a;
        self.eta_b = eta_b;
        self
    }

    /// Sets both transmissivities from per-side fiber lengths.
    pub fn with_lengths(mut self, eta_det: T, length_a_km: T, length_b_km: T) -> Self {
        self.eta_a = eta_det * fiber_transmittance(self.alpha_db_per_km, length_a_km);
        self.eta_b = eta_det * fiber_transmittance(self.alpha_db_per_km, length_b_km);
        self
    }

    /// Charles in the middle: each side gets half of `total_km`.
    pub fn at_distance(self, eta_det: T, total_km: T) -> Self {
        let half = total_km / lit(2.0);
        self.with_lengths(eta_det, half, half)
    }

    pub fn validate(&self) -> Result<()> {
        check_range("eta_a", to_f64(self.eta_a), 0.0, 1.0, "[0, 1]")?;
        check_range("eta_b", to_f64(self.eta_b), 0.0, 1.0, "[0, 1]")?;
        check_range("p_dark", to_f64(self.p_dark), 0.0, 1.0, "[0, 1)")?;
        if self.p_dark >= T::one() {
            return Err(Error::OutOfRange { name: "p_dark", value: to_f64(self.p_dark), range: "[0, 1)" });
        }
        check_range("e_d", to_f64(self.e_d), 0.0, 1.0, "[0, 1]")?;
        check_range("alpha_db_per_km", to_f64(self.alpha_db_per_km), 0.0, f64::INFINITY, "[0, inf)")?;
        check_range("f", to_f64(self.f), 1.0, f64::INFINITY, "[1, inf)")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transmittance() {
        assert_eq!(fiber_transmittance(0.2f64, 0.0), 1.0);
        assert!((fiber_transmittance(0.2f64, 50.0) - 0.1).abs() < 1e-15);
        let p = ChannelParams::<f64>::default().at_distance(0.145, 100.0);
        assert!((p.eta_a - 0.0145).abs() < 1e-15);
        assert_eq!(p.eta_a, p.eta_b);
    }

    #[test]
    fn validation() {
        assert!(ChannelParams::<f64>::default().validate().is_ok());
        assert!(ChannelParams::<f64>::default().with_eta(1.1, 0.5).validate().is_err());
        let p = ChannelParams::<f64> { p_dark: 1.0, ..Default::default() };
        assert!(p.validate().is_err());
        let p = ChannelParams::<f64> { f: 0.9, ..Default::default() };
        assert!(p.validate().is_err());
        let p = ChannelParams::<f64> { e_d: f64::NAN, ..Default::default() };
        assert!(p.validate().is_err());
    }
}
