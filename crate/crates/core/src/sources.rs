//! Spectral models of the signal and attack light.
//!
//! A source is a normalized spectral density (delta line, Gaussian, or
//! Lorentzian) around a center frequency. The effective transmission of a
//! finite-linewidth source through the (possibly shifted) resonator is the
//! spectral average of the port transmission, evaluated by adaptive
//! quadrature; a delta line reduces to the pointwise value.

use crate::error::Error;
use crate::resonator::{
    drop_transmission, through_transmission, CouplingRates, ResonatorGeometry,
};
use crate::units::{self, TWO_PI};
use crate::Result;

/// Spectral lineshape of a source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineShape {
    /// Ideal CW line (zero width).
    Delta,
    Gaussian,
    Lorentzian,
}

/// Resonator output port.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Port {
    Drop,
    Through,
}

/// A light source described by its (unit-integral) spectral density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceSpectrum {
    /// Center optical frequency (Hz).
    pub center_hz: f64,
    /// Full width at half maximum (Hz); zero for a delta line.
    pub fwhm_hz: f64,
    pub shape: LineShape,
    /// Mean optical power (W); bookkeeping only, the density is normalized.
    pub mean_power_w: f64,
}

impl SourceSpectrum {
    pub fn new(center_hz: f64, fwhm_hz: f64, shape: LineShape, mean_power_w: f64) -> Result<Self> {
        if !(center_hz > 0.0) {
            return Err(Error::domain("source center frequency must be positive"));
        }
        if !(fwhm_hz >= 0.0) {
            return Err(Error::domain("source linewidth must be non-negative"));
        }
        if mean_power_w < 0.0 {
            return Err(Error::domain("source power must be non-negative"));
        }
        let is_delta = shape == LineShape::Delta;
        if is_delta != (fwhm_hz == 0.0) {
            return Err(Error::validation(
                "shape is delta exactly when the linewidth is zero",
            ));
        }
        Ok(SourceSpectrum {
            center_hz,
            fwhm_hz,
            shape,
            mean_power_w,
        })
    }

    pub fn delta(center_hz: f64, mean_power_w: f64) -> Result<Self> {
        Self::new(center_hz, 0.0, LineShape::Delta, mean_power_w)
    }

    /// Spectral density (1/Hz) at an offset from the line center. Not
    /// meaningful for a delta line.
    fn density(&self, offset_hz: f64) -> f64 {
        match self.shape {
            LineShape::Delta => 0.0,
            LineShape::Gaussian => {
                let sigma = self.fwhm_hz / (8.0 * std::f64::consts::LN_2).sqrt();
                let z = offset_hz / sigma;
                (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
            }
            LineShape::Lorentzian => {
                let hw = 0.5 * self.fwhm_hz;
                hw / (std::f64::consts::PI * (offset_hz * offset_hz + hw * hw))
            }
        }
    }

    /// On-chip signal powers above ~1 uW start to drive the photorefractive
    /// response themselves; the model neglects that contribution.
    pub fn exceeds_pr_safe_power(&self) -> bool {
        self.mean_power_w > 1e-6
    }
}

/// Pulse-train bookkeeping for the pulsed QKD source. Transmission is
/// computed spectrally; this only carries per-pulse energy and duty factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseTrain {
    pub rep_rate_hz: f64,
    pub pulse_width_s: f64,
}

impl PulseTrain {
    pub fn new(rep_rate_hz: f64, pulse_width_s: f64) -> Result<Self> {
        if !(rep_rate_hz > 0.0) {
            return Err(Error::domain("repetition rate must be positive"));
        }
        if !(pulse_width_s > 0.0 && pulse_width_s * rep_rate_hz < 1.0) {
            return Err(Error::domain(
                "pulse width must be positive and shorter than the period",
            ));
        }
        Ok(PulseTrain {
            rep_rate_hz,
            pulse_width_s,
        })
    }

    /// 100 ps pulses at 625 MHz.
    pub fn default_qkd() -> Self {
        PulseTrain {
            rep_rate_hz: 625e6,
            pulse_width_s: 100e-12,
        }
    }

    pub fn duty_factor(&self) -> f64 {
        self.pulse_width_s * self.rep_rate_hz
    }

    pub fn energy_per_pulse_j(&self, mean_power_w: f64) -> f64 {
        mean_power_w / self.rep_rate_hz
    }

    /// Spectral FWHM of a transform-limited Gaussian pulse of this width
    /// (time-bandwidth product 0.441).
    pub fn transform_limited_fwhm_hz(&self) -> f64 {
        0.441 / self.pulse_width_s
    }
}

/// Named source presets used by the CLI and the characterization scenarios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourcePreset {
    /// CW signal laser aligned to the signal-mode resonance near 1550.68 nm.
    CwSignal155068,
    /// Gain-switched pulsed signal with its quoted 10 GHz Gaussian linewidth.
    PulsedSignal10Ghz,
    /// Tunable attack laser (delta line) at an arbitrary wavelength.
    TunableAttack { wavelength_nm: f64 },
}

/// Build a preset source for the given device geometry. Signal presets are
/// centered on the signal-mode resonance (within ~15 pm of 1550.68 nm for
/// the default device) and kept below the 1 uW photorefractive guard.
pub fn preset(name: SourcePreset, geometry: &ResonatorGeometry) -> Result<SourceSpectrum> {
    match name {
        SourcePreset::CwSignal155068 => {
            SourceSpectrum::delta(geometry.signal_resonance_hz(), 0.5e-6)
        }
        SourcePreset::PulsedSignal10Ghz => SourceSpectrum::new(
            geometry.signal_resonance_hz(),
            10e9,
            LineShape::Gaussian,
            0.5e-6,
        ),
        SourcePreset::TunableAttack { wavelength_nm } => {
            if !(wavelength_nm > 0.0) {
                return Err(Error::validation("attack wavelength must be positive"));
            }
            SourceSpectrum::delta(units::wavelength_to_frequency(wavelength_nm * 1e-9), 1e-3)
        }
    }
}

const QUAD_REL_TOL: f64 = 1e-8;
const QUAD_MAX_DEPTH: u32 = 48;

/// Effective power transmission of a source through the shifted resonator:
/// the source-weighted average of the port transmission. Exact pointwise
/// value for a delta line.
pub fn effective_transmission(
    source: &SourceSpectrum,
    rates: &CouplingRates,
    geometry: &ResonatorGeometry,
    pr_shift_rad: f64,
    port: Port,
) -> Result<f64> {
    let port_t = |nu: f64| -> f64 {
        let d = geometry.detuning_from_nearest_mode(nu, pr_shift_rad);
        match port {
            Port::Drop => drop_transmission(d, rates),
            Port::Through => through_transmission(d, rates),
        }
    };
    if source.shape == LineShape::Delta {
        return Ok(port_t(source.center_hz));
    }

    let kappa_hz = rates.total() / TWO_PI;
    let half_window = (20.0 * source.fwhm_hz).max(20.0 * kappa_hz);
    let lo = source.center_hz - half_window;
    let hi = source.center_hz + half_window;
    let panels = panel_edges(source, geometry, pr_shift_rad, kappa_hz, lo, hi);

    let weighted = |nu: f64| source.density(nu - source.center_hz) * port_t(nu);
    let density = |nu: f64| source.density(nu - source.center_hz);

    let num = integrate(&weighted, &panels, QUAD_REL_TOL, "effective transmission")?;
    let den = integrate(&density, &panels, QUAD_REL_TOL, "source normalization")?;
    if !(den > 0.0) {
        return Err(Error::domain("source spectrum has no weight in the window"));
    }
    Ok((num / den).clamp(0.0, 1.0))
}

/// Signal attenuation (dB, >= 0) caused by a resonance shift, relative to
/// the cold cavity.
pub fn attenuation_db(
    source: &SourceSpectrum,
    rates: &CouplingRates,
    geometry: &ResonatorGeometry,
    pr_shift_rad: f64,
    port: Port,
) -> Result<f64> {
    let cold = effective_transmission(source, rates, geometry, 0.0, port)?;
    let hot = effective_transmission(source, rates, geometry, pr_shift_rad, port)?;
    if !(hot > 0.0) {
        return Err(Error::domain("shifted transmission vanished"));
    }
    Ok(units::ratio_to_db(cold / hot))
}

/// Solve for the Gaussian source FWHM that reproduces a target drop-port
/// attenuation at a given resonance shift. Attenuation decreases strictly
/// with the linewidth, so a bisection brackets the answer.
pub fn fit_gaussian_fwhm_to_attenuation(
    rates: &CouplingRates,
    geometry: &ResonatorGeometry,
    pr_shift_rad: f64,
    target_db: f64,
) -> Result<f64> {
    let center = geometry.signal_resonance_hz();
    let att = |fwhm: f64| -> Result<f64> {
        let s = SourceSpectrum::new(center, fwhm, LineShape::Gaussian, 0.5e-6)?;
        attenuation_db(&s, rates, geometry, pr_shift_rad, Port::Drop)
    };
    let kappa_hz = rates.total() / TWO_PI;
    let mut lo = 1e-3 * kappa_hz;
    let mut hi = 20.0 * kappa_hz;
    let a_lo = att(lo)?;
    let a_hi = att(hi)?;
    if target_db > a_lo || target_db < a_hi {
        return Err(Error::infeasible(format!(
            "target attenuation {target_db:.3} dB outside the attainable range \
             [{a_hi:.3}, {a_lo:.3}] dB at this shift"
        )));
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let a = att(mid)?;
        if (a - target_db).abs() < 1e-5 {
            return Ok(mid);
        }
        if a > target_db {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Subdivision seed points: the source core and every shifted resonance in
/// the window, so the adaptive pass cannot step over a narrow feature.
fn panel_edges(
    source: &SourceSpectrum,
    geometry: &ResonatorGeometry,
    pr_shift_rad: f64,
    kappa_hz: f64,
    lo: f64,
    hi: f64,
) -> Vec<f64> {
    let mut edges = vec![lo, hi];
    for k in [8.0, 2.0, 0.5] {
        edges.push(source.center_hz - k * source.fwhm_hz);
        edges.push(source.center_hz + k * source.fwhm_hz);
    }
    edges.push(source.center_hz);
    let shift_hz = pr_shift_rad / TWO_PI;
    let m_lo = ((lo - geometry.base_resonance_hz - shift_hz) / geometry.fsr_hz).floor() as i64;
    let m_hi = ((hi - geometry.base_resonance_hz - shift_hz) / geometry.fsr_hz).ceil() as i64;
    for m in m_lo..=m_hi {
        let res = geometry.base_resonance_hz + m as f64 * geometry.fsr_hz + shift_hz;
        for k in [-8.0, -2.0, -0.5, 0.0, 0.5, 2.0, 8.0] {
            edges.push(res + k * kappa_hz);
        }
    }
    edges.retain(|x| x.is_finite() && *x >= lo && *x <= hi);
    edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
    edges.dedup_by(|a, b| (*a - *b).abs() < 1.0);
    edges
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

/// Adaptive Simpson over pre-seeded panels with a global relative tolerance.
fn integrate(
    f: &impl Fn(f64) -> f64,
    edges: &[f64],
    rel_tol: f64,
    context: &str,
) -> Result<f64> {
    // crude first pass to set the absolute error budget
    let mut rough = 0.0;
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        rough += simpson(a, b, f(a), f(0.5 * (a + b)), f(b)).abs();
    }
    let eps_total = rel_tol * rough.max(f64::MIN_POSITIVE);
    let eps_panel = eps_total / (edges.len() - 1) as f64;

    let mut total = 0.0;
    let mut spilled = 0.0;
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let m = 0.5 * (a + b);
        let (fa, fm, fb) = (f(a), f(m), f(b));
        let whole = simpson(a, b, fa, fm, fb);
        total += adaptive(
            f,
            a,
            b,
            fa,
            fm,
            fb,
            whole,
            eps_panel,
            QUAD_MAX_DEPTH,
            &mut spilled,
        );
    }
    if spilled > eps_total {
        return Err(Error::Numerical {
            context: format!("{context}: adaptive quadrature depth exhausted"),
            requested: eps_total,
            achieved: spilled,
        });
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn adaptive(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
    spilled: &mut f64,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * eps || depth == 0 {
        if depth == 0 && delta.abs() > 15.0 * eps {
            *spilled += delta.abs() / 15.0;
        }
        return left + right + delta / 15.0;
    }
    adaptive(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1, spilled)
        + adaptive(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1, spilled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resonator::{rates_from_q, Detuning, SplitPolicy};
    use approx::assert_relative_eq;

    fn device() -> (CouplingRates, ResonatorGeometry) {
        let geom = ResonatorGeometry::default_device();
        let rates = rates_from_q(
            6.6e4,
            TWO_PI * geom.base_resonance_hz,
            SplitPolicy::EqualThirds,
        )
        .unwrap();
        (rates, geom)
    }

    /// erfc via Abramowitz-Stegun 7.1.26 (|error| < 1.5e-7), enough for the
    /// 1e-4 comparisons below.
    fn erfc(x: f64) -> f64 {
        let sign = if x < 0.0 { -1.0 } else { 1.0 };
        let x = x.abs();
        let t = 1.0 / (1.0 + 0.3275911 * x);
        let poly = t
            * (0.254829592
                + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
        let erf = 1.0 - poly * (-x * x).exp();
        if sign < 0.0 {
            1.0 + erf
        } else {
            1.0 - erf
        }
    }

    /// Closed-form spectral average of a peak-normalized Lorentzian (HWHM g)
    /// under a Gaussian of std sigma, both centered at zero.
    fn voigt_center(g: f64, sigma: f64) -> f64 {
        let z = g / (std::f64::consts::SQRT_2 * sigma);
        (std::f64::consts::PI / 2.0).sqrt() * (g / sigma) * (z * z).exp() * erfc(z)
    }

    #[test]
    fn delta_line_equals_pointwise() {
        let (rates, geom) = device();
        let src = SourceSpectrum::delta(geom.signal_resonance_hz(), 0.5e-6).unwrap();
        let t = effective_transmission(&src, &rates, &geom, 0.0, Port::Drop).unwrap();
        let direct = drop_transmission(Detuning::from_angular(0.0), &rates);
        assert_eq!(t, direct);
    }

    #[test]
    fn narrow_gaussian_converges_to_delta() {
        let (rates, geom) = device();
        let kappa_hz = rates.total() / TWO_PI;
        let src = SourceSpectrum::new(
            geom.signal_resonance_hz(),
            kappa_hz / 1000.0,
            LineShape::Gaussian,
            0.5e-6,
        )
        .unwrap();
        let t = effective_transmission(&src, &rates, &geom, 0.0, Port::Drop).unwrap();
        let direct = drop_transmission(Detuning::from_angular(0.0), &rates);
        assert_relative_eq!(t, direct, max_relative = 1e-4);
    }

    #[test]
    fn narrow_lorentzian_converges_to_delta() {
        let (rates, geom) = device();
        let kappa_hz = rates.total() / TWO_PI;
        let src = SourceSpectrum::new(
            geom.signal_resonance_hz(),
            kappa_hz / 1000.0,
            LineShape::Lorentzian,
            0.5e-6,
        )
        .unwrap();
        let t = effective_transmission(&src, &rates, &geom, 0.0, Port::Drop).unwrap();
        let direct = drop_transmission(Detuning::from_angular(0.0), &rates);
        // Lorentzian tails are heavy; the window truncates ~1.6% of the mass
        // but the ratio normalization keeps the average close.
        assert_relative_eq!(t, direct, max_relative = 2e-3);
    }

    #[test]
    fn gaussian_average_matches_voigt_closed_form() {
        let (rates, geom) = device();
        let g = rates.half_linewidth() / TWO_PI; // Lorentzian HWHM in Hz
        for fwhm in [2e9, 5e9, 10e9] {
            let sigma = fwhm / (8.0f64 * std::f64::consts::LN_2).sqrt();
            let src = SourceSpectrum::new(
                geom.signal_resonance_hz(),
                fwhm,
                LineShape::Gaussian,
                0.5e-6,
            )
            .unwrap();
            let t = effective_transmission(&src, &rates, &geom, 0.0, Port::Drop).unwrap();
            let peak = drop_transmission(Detuning::from_angular(0.0), &rates);
            assert_relative_eq!(t / peak, voigt_center(g, sigma), max_relative = 1e-5);
        }
    }

    #[test]
    fn attenuation_decreases_with_linewidth() {
        // Broader sources blunt the fuse once the shift exceeds kappa/2.
        let (rates, geom) = device();
        let shift = 2.0 * rates.total(); // well past half linewidth
        let mut last = f64::INFINITY;
        for fwhm in [0.5e9, 1e9, 2e9, 4e9, 8e9, 16e9] {
            let src = SourceSpectrum::new(
                geom.signal_resonance_hz(),
                fwhm,
                LineShape::Gaussian,
                0.5e-6,
            )
            .unwrap();
            let a = attenuation_db(&src, &rates, &geom, shift, Port::Drop).unwrap();
            assert!(a < last, "attenuation must fall with linewidth");
            last = a;
        }
    }

    #[test]
    fn effective_transmission_bounded_and_continuous() {
        let (rates, geom) = device();
        let src = SourceSpectrum::new(
            geom.signal_resonance_hz(),
            10e9,
            LineShape::Gaussian,
            0.5e-6,
        )
        .unwrap();
        let mut prev: Option<f64> = None;
        for k in 0..=40 {
            let shift = TWO_PI * 0.25e9 * k as f64;
            let t = effective_transmission(&src, &rates, &geom, shift, Port::Drop).unwrap();
            assert!((0.0..=1.0).contains(&t));
            if let Some(p) = prev {
                assert!((t - p).abs() < 0.05, "jump at step {k}");
            }
            prev = Some(t);
        }
    }

    #[test]
    fn presets_have_documented_centers() {
        let geom = ResonatorGeometry::default_device();
        let cw = preset(SourcePreset::CwSignal155068, &geom).unwrap();
        let lambda_nm = units::frequency_to_wavelength(cw.center_hz) * 1e9;
        assert!((lambda_nm - 1550.68).abs() < 0.02, "cw at {lambda_nm} nm");
        assert_eq!(cw.shape, LineShape::Delta);
        assert!(!cw.exceeds_pr_safe_power());

        let pulsed = preset(SourcePreset::PulsedSignal10Ghz, &geom).unwrap();
        assert_eq!(pulsed.shape, LineShape::Gaussian);
        assert_eq!(pulsed.fwhm_hz, 10e9);

        let attack = preset(
            SourcePreset::TunableAttack {
                wavelength_nm: 1548.292,
            },
            &geom,
        )
        .unwrap();
        assert_relative_eq!(attack.center_hz, 193.63e12, max_relative = 1e-4);
    }

    #[test]
    fn invalid_sources_rejected() {
        assert!(SourceSpectrum::new(1e14, 0.0, LineShape::Gaussian, 1e-6).is_err());
        assert!(SourceSpectrum::new(1e14, 1e9, LineShape::Delta, 1e-6).is_err());
        assert!(SourceSpectrum::new(-1.0, 0.0, LineShape::Delta, 1e-6).is_err());
        assert!(PulseTrain::new(625e6, 2e-9).is_err());
        assert!(preset(
            SourcePreset::TunableAttack {
                wavelength_nm: -3.0
            },
            &ResonatorGeometry::default_device()
        )
        .is_err());
    }

    #[test]
    fn pulse_train_bookkeeping() {
        let train = PulseTrain::default_qkd();
        assert_relative_eq!(train.duty_factor(), 0.0625, max_relative = 1e-12);
        assert_relative_eq!(
            train.energy_per_pulse_j(1e-3),
            1.6e-12,
            max_relative = 1e-12
        );
        assert_relative_eq!(train.transform_limited_fwhm_hz(), 4.41e9, max_relative = 1e-12);
    }

    #[test]
    fn fwhm_fit_round_trips() {
        let (rates, geom) = device();
        let shift = TWO_PI * 7.2e9;
        let src =
            SourceSpectrum::new(geom.signal_resonance_hz(), 4.5e9, LineShape::Gaussian, 0.5e-6)
                .unwrap();
        let target = attenuation_db(&src, &rates, &geom, shift, Port::Drop).unwrap();
        let fitted = fit_gaussian_fwhm_to_attenuation(&rates, &geom, shift, target).unwrap();
        assert_relative_eq!(fitted, 4.5e9, max_relative = 1e-3);
        // unattainable target is rejected
        assert!(fit_gaussian_fwhm_to_attenuation(&rates, &geom, shift, 200.0).is_err());
    }
}
