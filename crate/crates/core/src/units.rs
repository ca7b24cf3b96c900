//! Unit helpers. Frequencies are handled in Hz at module boundaries and in
//! angular rad/s inside the coupled-mode math; powers in watts externally,
//! dBm in configs and reports.

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Optical frequency (Hz) of a vacuum wavelength (m).
pub fn wavelength_to_frequency(wavelength_m: f64) -> f64 {
    SPEED_OF_LIGHT / wavelength_m
}

/// Vacuum wavelength (m) of an optical frequency (Hz).
pub fn frequency_to_wavelength(freq_hz: f64) -> f64 {
    SPEED_OF_LIGHT / freq_hz
}

/// First-order frequency offset (Hz) equivalent to a wavelength offset at a
/// reference wavelength: dnu = c * dlambda / lambda0^2. Sign is preserved,
/// so a positive wavelength offset maps to a positive frequency offset; the
/// caller applies the spectral direction.
pub fn wavelength_offset_to_frequency_offset(dlambda_m: f64, lambda0_m: f64) -> f64 {
    SPEED_OF_LIGHT * dlambda_m / (lambda0_m * lambda0_m)
}

/// Inverse of [`wavelength_offset_to_frequency_offset`].
pub fn frequency_offset_to_wavelength_offset(dnu_hz: f64, lambda0_m: f64) -> f64 {
    dnu_hz * lambda0_m * lambda0_m / SPEED_OF_LIGHT
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * (watts / 1e-3).log10()
}

pub fn db_to_ratio(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn ratio_to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn wavelength_frequency_round_trip() {
        let lambda = 1548.292e-9;
        let nu = wavelength_to_frequency(lambda);
        // < 0.01 pm round-trip error
        assert!((frequency_to_wavelength(nu) - lambda).abs() < 0.01e-12);
    }

    #[test]
    fn offset_34p5_pm_near_1548() {
        // c * dl / l^2 at the device resonance wavelength
        let dnu = wavelength_offset_to_frequency_offset(34.5e-12, 1548.292e-9);
        let expect = SPEED_OF_LIGHT * 34.5e-12 / (1548.292e-9 * 1548.292e-9);
        assert_relative_eq!(dnu, expect, max_relative = 1e-15);
        // ~4.31 GHz; agrees with the rounded 4.317 GHz figure at the 0.1% level
        assert_relative_eq!(dnu, 4.317e9, max_relative = 1e-3);
    }

    #[test]
    fn offset_400_pm_is_about_one_fsr() {
        let dnu = wavelength_offset_to_frequency_offset(400e-12, 1548.292e-9);
        assert_relative_eq!(dnu, 50.0e9, max_relative = 5e-3);
    }

    #[test]
    fn zero_offset_maps_to_zero() {
        assert_eq!(wavelength_offset_to_frequency_offset(0.0, 1548.292e-9), 0.0);
    }

    #[test]
    fn offset_round_trip() {
        let l0 = 1550.0e-9;
        let dl = -20e-12;
        let dnu = wavelength_offset_to_frequency_offset(dl, l0);
        assert_relative_eq!(
            frequency_offset_to_wavelength_offset(dnu, l0),
            dl,
            max_relative = 1e-14
        );
    }

    #[test]
    fn dbm_watts() {
        assert_relative_eq!(dbm_to_watts(0.0), 1e-3, max_relative = 1e-15);
        assert_relative_eq!(dbm_to_watts(10.0), 1e-2, max_relative = 1e-15);
        assert_relative_eq!(watts_to_dbm(1e-5), -20.0, max_relative = 1e-12);
    }
}
