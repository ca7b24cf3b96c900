use fuse_core::attacks::{self, AttackDrive, AttackScenario, PhysicsContext};
use fuse_core::photorefractive;
use fuse_core::qkd::{self, ChannelCalibrationBase, ChannelTargets, DecoyParams};
use fuse_core::sources::{self, LineShape, Port, SourcePreset, SourceSpectrum};
use fuse_core::units;

#[test]
#[ignore]
fn probe_numbers() {
    let ctx = PhysicsContext::default_device().unwrap();
    println!(
        "kappa/2pi = {:.6} GHz, max_shift = {:.4} GHz ({:.2} pm), p_ref = {:.6e} W, gamma = {}",
        ctx.rates.total() / units::TWO_PI / 1e9,
        ctx.pr.max_shift / units::TWO_PI / 1e9,
        ctx.pr.max_shift / units::TWO_PI / 1e9 * 8.0,
        ctx.pr.p_ref_w,
        ctx.pr.exponent
    );

    // shift at 10 dBm resonant
    let s10 = photorefractive::steady_state(
        1e-2,
        ctx.geometry.base_resonance_hz,
        &ctx.pr,
        &ctx.rates,
        &ctx.geometry,
    )
    .unwrap();
    println!("shift(10 dBm) = {:.3} pm = {:.4} GHz", s10.shift_pm(&ctx.geometry), s10.shift / units::TWO_PI / 1e9);

    // pulsed attenuation with 10 GHz Gaussian at that shift
    let pulsed10 = sources::preset(SourcePreset::PulsedSignal10Ghz, &ctx.geometry).unwrap();
    let att10ghz =
        sources::attenuation_db(&pulsed10, &ctx.rates, &ctx.geometry, s10.shift, Port::Drop)
            .unwrap();
    println!("attenuation(10 GHz gaussian @ 10 dBm shift) = {att10ghz:.3} dB");

    // CW attenuation
    let cw = sources::preset(SourcePreset::CwSignal155068, &ctx.geometry).unwrap();
    let att_cw =
        sources::attenuation_db(&cw, &ctx.rates, &ctx.geometry, s10.shift, Port::Drop).unwrap();
    println!("attenuation(CW @ 10 dBm shift) = {att_cw:.3} dB");

    // fitted effective linewidth for 10.70 dB
    let fitted =
        sources::fit_gaussian_fwhm_to_attenuation(&ctx.rates, &ctx.geometry, s10.shift, 10.70)
            .unwrap();
    println!("fitted FWHM for 10.70 dB = {:.4} GHz", fitted / 1e9);
    let eff = SourceSpectrum::new(
        ctx.geometry.signal_resonance_hz(),
        fitted,
        LineShape::Gaussian,
        0.5e-6,
    )
    .unwrap();

    // attenuation at -20 dBm with the fitted source
    let s20 = photorefractive::steady_state(
        1e-5,
        ctx.geometry.base_resonance_hz,
        &ctx.pr,
        &ctx.rates,
        &ctx.geometry,
    )
    .unwrap();
    let att_m20 =
        sources::attenuation_db(&eff, &ctx.rates, &ctx.geometry, s20.shift, Port::Drop).unwrap();
    println!(
        "shift(-20 dBm) = {:.3} pm; fitted-source attenuation = {att_m20:.4} dB",
        s20.shift_pm(&ctx.geometry)
    );

    // sweep baseline and -200 pm required power
    let target = units::dbm_to_watts(-20.0);
    let base_nm = units::frequency_to_wavelength(ctx.geometry.base_resonance_hz) * 1e9;
    let p0 = attacks::required_power(target, base_nm, &ctx).unwrap();
    let p200 = attacks::required_power(target, base_nm - 0.200, &ctx).unwrap();
    let p200r = attacks::required_power(target, base_nm + 0.200, &ctx).unwrap();
    println!(
        "required: resonant {:.3} dBm, -200 pm {:.3} dBm (delta {:.3} dB), +200 pm {:.3} dBm",
        units::watts_to_dbm(p0.on_chip_power_w),
        units::watts_to_dbm(p200.on_chip_power_w),
        units::watts_to_dbm(p200.on_chip_power_w) - units::watts_to_dbm(p0.on_chip_power_w),
        units::watts_to_dbm(p200r.on_chip_power_w),
    );

    // -20 pm vs +20 pm attenuation at fixed tx
    let pm20 = attacks::required_power(target, base_nm - 0.020, &ctx).unwrap();
    println!(
        "-20 pm: required {:.3} dBm converged={}",
        units::watts_to_dbm(pm20.on_chip_power_w),
        pm20.converged
    );

    // SKR chain
    let params = DecoyParams::default_three_intensity();
    let channel = qkd::calibrate_channel(
        &ChannelTargets {
            sifted_rate_per_pulse: 4.9708e-4,
            qber: 0.0201,
        },
        &ChannelCalibrationBase::default_operating_point(),
        &params,
    )
    .unwrap();
    println!(
        "calibrated channel: eta_det = {:.6e}, e_d = {:.6e}",
        channel.detector_efficiency, channel.misalignment_error
    );
    let r0 = qkd::skr(&params, &channel).unwrap();
    println!(
        "R0 = {:.6e} bit/pulse = {:.3} kbit/s, qber {:.5}",
        r0.skr_per_pulse,
        r0.skr_bps / 1e3,
        r0.qber
    );
    let points = qkd::skr_vs_attack(
        &[units::dbm_to_watts(-30.0), units::dbm_to_watts(-25.0), units::dbm_to_watts(-23.0),
          units::dbm_to_watts(-21.0), units::dbm_to_watts(-20.0), units::dbm_to_watts(-19.0),
          units::dbm_to_watts(-17.0), units::dbm_to_watts(-15.0), units::dbm_to_watts(0.0),
          units::dbm_to_watts(10.0)],
        &eff,
        &ctx,
        &channel,
        &params,
    )
    .unwrap();
    for p in &points {
        println!(
            "attack {:+6.1} dBm: att {:.4} dB, skr ratio {:.5}",
            units::watts_to_dbm(p.attack_power_w),
            p.attenuation_db,
            p.report.skr_per_pulse / r0.skr_per_pulse
        );
    }

    // timeseries crossings at 0 dBm
    let scenario = AttackScenario::new(
        base_nm,
        AttackDrive::Forward {
            on_chip_power_w: 1e-3,
        },
        vec![(5.0, 65.0)],
    )
    .unwrap();
    let samples = attacks::run_timeseries(&scenario, &cw, 0.01, 90.0, &ctx).unwrap();
    let steady = samples[(64.9f64 / 0.01) as usize].transmission;
    let drop_total = 1.0 - steady;
    let t90_rise = samples
        .iter()
        .find(|s| s.t_s > 5.0 && (1.0 - s.transmission) >= 0.9 * drop_total)
        .map(|s| s.t_s);
    let t90_fall = samples
        .iter()
        .find(|s| s.t_s > 65.0 && (1.0 - s.transmission) <= 0.1 * drop_total)
        .map(|s| s.t_s);
    println!("steady transmission {steady:.5}; rise90 at {t90_rise:?}, fall90 at {t90_fall:?}");
}
