use ndarray::{s, Array2};
use spnkit::fingerprint::{dark_fingerprint, prnu_reference, suppress_hot_pixels};
use spnkit::matcher::{half_swap, match_report};
use spnkit::sensor::{capture, dark_density, generate_profile, CONSTANTS};
use spnkit::{
    CaptureSettings, Decision, Optics, ProfileSpec, RawFrame, RotationMode, SceneField, SensorProfile,
    SuppressionConfig, WaveletConfig,
};

const T_COLD: f64 = 293.15;
const T_WARM: f64 = 318.15;

fn pearson(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let (ma, mb) = (a.mean().unwrap(), b.mean().unwrap());
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        ab += (x - ma) * (y - mb);
        aa += (x - ma).powi(2);
        bb += (y - mb).powi(2);
    }
    ab / (aa * bb).sqrt()
}

fn sensor(seed: u64) -> SensorProfile {
    generate_profile(&ProfileSpec { seed, ..Default::default() }).unwrap()
}

fn flat_frames(p: &SensorProfile, n: u64) -> Vec<RawFrame> {
    let flux = SceneField::flux_for_fill(p, 0.5, 0.01);
    let scene = SceneField::flat_field(p.height, p.width, flux, p.cfa).unwrap();
    let settings = CaptureSettings::illuminated(0.01, T_COLD, Optics::Pinhole);
    (0..n).map(|k| capture(p, &settings, &scene, k).unwrap()).collect()
}

/// Exposure at which the warm dark frame averages half the well.
fn half_well_dark_exposure(p: &SensorProfile) -> f64 {
    let rate = dark_density(p, T_WARM).unwrap() * p.detector_area() / CONSTANTS.q;
    0.5 * p.well_capacity / rate
}

fn dark_frame(p: &SensorProfile, temperature: f64, optics: Optics, index: u64) -> RawFrame {
    let scene = SceneField::flat_field(p.height, p.width, 0.0, p.cfa).unwrap();
    let settings = CaptureSettings { optics, ..CaptureSettings::dark(half_well_dark_exposure(p), temperature) };
    capture(p, &settings, &scene, index).unwrap()
}

#[test]
fn prnu_reference_recovers_green_pnu() {
    let p = sensor(5);
    let fp = prnu_reference(&flat_frames(&p, 50), &WaveletConfig::default()).unwrap();
    let truth = p.pnu_map.slice(s![0..;2, 1..;2]).mapv(|k| k - 1.0);
    let r = pearson(&fp.channels[1], &truth);
    assert!(r > 0.5, "{r}");
}

#[test]
fn dark_fingerprint_matches_prnu_and_warms_up() {
    let p = sensor(6);
    let wavelet = WaveletConfig::default();
    let reference = prnu_reference(&flat_frames(&p, 100), &wavelet).unwrap();
    let suppression = SuppressionConfig::default();
    let report = |t| {
        let probe = dark_fingerprint(&[dark_frame(&p, t, Optics::Pinhole, 500)], &wavelet, Some(&suppression)).unwrap();
        match_report(&reference, &probe, 0.01, RotationMode::default()).unwrap()
    };
    let (cold, warm) = (report(T_COLD), report(T_WARM));
    for r in [&cold, &warm] {
        let controls = [r.rho_90, r.rho_180, r.rho_270].map(f64::abs);
        assert!(r.rho_0 > 0.0);
        assert!(controls.iter().all(|&c| r.rho_0 >= 10.0 * c), "{r:?}");
        assert_eq!(r.decision, Decision::Match);
    }
    assert!(warm.rho_0 > cold.rho_0, "warm {} cold {}", warm.rho_0, cold.rho_0);
    assert!((warm.temperature_c.unwrap() - 45.0).abs() < 1e-9);
}

#[test]
fn half_swapped_reference_does_not_match_dark_probe() {
    let p = sensor(7);
    let wavelet = WaveletConfig::default();
    let reference = prnu_reference(&flat_frames(&p, 30), &wavelet).unwrap();
    let probe = dark_fingerprint(&[dark_frame(&p, T_WARM, Optics::Pinhole, 900)], &wavelet, None).unwrap();
    let swapped = half_swap(&reference).unwrap();
    let r = match_report(&swapped, &probe, 0.01, RotationMode::default()).unwrap();
    assert_eq!(r.decision, Decision::NoMatch);
    for v in [r.rho_0, r.rho_90, r.rho_180, r.rho_270] {
        assert!(v.abs() < 0.05, "{r:?}");
    }
    // swapping the swapped reference back restores alignment
    assert!(r.rho_flipped > 0.1);
}

#[test]
fn hot_pixels_are_found_in_dark_frames() {
    for (seed, temperature) in [(40, T_WARM), (41, 305.0)] {
        let p = sensor(seed);
        let frame = dark_frame(&p, temperature, Optics::Pinhole, 0);
        let (_, mask) = suppress_hot_pixels(&frame.to_f64(), &SuppressionConfig::default()).unwrap();
        let truth = p.hot_pixel_map.iter().filter(|&&h| h).count();
        let found = p.hot_pixel_map.iter().zip(&mask).filter(|(&h, &m)| h && m).count();
        assert_eq!(truth, 66);
        assert!(found as f64 >= 0.95 * truth as f64, "{found}/{truth} at {temperature} K");
    }
}

#[test]
fn suppressed_dark_fingerprint_has_no_extreme_values() {
    let p = sensor(9);
    let frame = dark_frame(&p, T_WARM, Optics::Pinhole, 1);
    let fp = dark_fingerprint(&[frame], &WaveletConfig::default(), Some(&SuppressionConfig::default())).unwrap();
    for c in &fp.channels {
        let sd = c.std(0.0);
        let worst = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(worst <= 10.0 * sd, "max {worst} vs sd {sd}");
    }
}

#[test]
fn dark_fingerprint_ignores_optics() {
    let p = sensor(10);
    let wavelet = WaveletConfig::default();
    let s = SuppressionConfig::default();
    let pin = dark_fingerprint(&[dark_frame(&p, T_WARM, Optics::Pinhole, 3)], &wavelet, Some(&s)).unwrap();
    let lens = dark_frame(&p, T_WARM, Optics::Lens { vignetting_alpha: 0.4 }, 3);
    let lens = dark_fingerprint(&[lens], &wavelet, Some(&s)).unwrap();
    assert_eq!(pin.channels, lens.channels);
}

#[test]
fn every_fingerprint_is_centred_and_unit_norm() {
    let p = generate_profile(&ProfileSpec { width: 64, height: 64, seed: 2, ..Default::default() }).unwrap();
    let wavelet = WaveletConfig::default();
    let prnu = prnu_reference(&flat_frames(&p, 3), &wavelet).unwrap();
    let dark = dark_fingerprint(&[dark_frame(&p, T_WARM, Optics::Pinhole, 0)], &wavelet, None).unwrap();
    for fp in [prnu, dark] {
        for c in &fp.channels {
            assert!(c.mean().unwrap().abs() < 1e-12);
            assert!((c.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
            for row in c.rows() {
                assert!(row.mean().unwrap().abs() < 1e-12);
            }
            for col in c.columns() {
                assert!(col.mean().unwrap().abs() < 1e-12);
            }
        }
    }
}
