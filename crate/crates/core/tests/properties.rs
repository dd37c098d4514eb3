use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use proptest::prelude::*;

use reflectarray::comms::{gray_demap, gray_map, multitone, qpsk_modulate, FrameSpec};
use reflectarray::layout::{
    generate_layout, perturb_layout, progressive_phase, signed_phase, steering_angle, stub_delay,
    stub_length, PerturbMode,
};
use reflectarray::mask::{export_mask, import_json, MaskFormat};
use reflectarray::patch::{
    effective_permittivity, patch_length, patch_width, resonant_frequency, SubstrateSpec,
};
use reflectarray::wavefront::{
    array_factor, array_factor_weighted, frequency_grid, reflectance_spectrum, ElementResponse,
};
use reflectarray::{wavenumber, SPEED_OF_LIGHT};

fn substrate() -> impl Strategy<Value = SubstrateSpec> {
    (1.0f64..12.0, 0.5e-6f64..20e-6).prop_map(|(er, h)| SubstrateSpec::new(er, h).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn width_falls_with_frequency_and_permittivity(
        f in 0.3e12f64..3e12, df in 0.01f64..0.5, er in 1.0f64..12.0, der in 0.01f64..3.0,
    ) {
        let s = SubstrateSpec::new(er, 2e-6).unwrap();
        let s_hi = SubstrateSpec::new(er + der, 2e-6).unwrap();
        let w = patch_width(f, &s).unwrap();
        prop_assert!(patch_width(f * (1.0 + df), &s).unwrap() < w);
        prop_assert!(patch_width(f, &s_hi).unwrap() < w);
    }

    #[test]
    fn length_falls_with_frequency(f in 0.3e12f64..3e12, df in 0.01f64..0.5, s in substrate()) {
        if let (Ok(a), Ok(b)) = (patch_length(f, &s), patch_length(f * (1.0 + df), &s)) {
            prop_assert!(b < a);
        }
    }

    #[test]
    fn effective_permittivity_is_bounded(s in substrate(), w in 10e-6f64..1e-3) {
        let e = effective_permittivity(&s, w).unwrap();
        let er = s.relative_permittivity;
        prop_assert!(e >= (er + 1.0) / 2.0 - 1e-12);
        prop_assert!(e <= er + 1e-12);
    }

    #[test]
    fn resonance_inverts_length(f in 0.3e12f64..3e12, s in substrate()) {
        if let Ok(len) = patch_length(f, &s) {
            let back = resonant_frequency(len, &s).unwrap();
            prop_assert!((back / f - 1.0).abs() < 1e-6, "{back} vs {f}");
        }
    }

    #[test]
    fn steering_round_trip(theta in -1.2f64..1.2, f in 0.5e12f64..2e12) {
        let k0 = wavenumber(f);
        let d = 0.5 * SPEED_OF_LIGHT / f;
        let step = -signed_phase(progressive_phase(k0, d, theta, 0.0).unwrap());
        prop_assert!((steering_angle(step, k0, d).unwrap() - theta).abs() < 1e-9);
    }

    #[test]
    fn stub_is_linear_in_phase(a in 0.0f64..PI, b in 0.0f64..PI, s in substrate()) {
        let la = stub_length(a, 1e12, &s).unwrap();
        let lb = stub_length(b, 1e12, &s).unwrap();
        let lab = stub_length(a + b, 1e12, &s).unwrap();
        prop_assert!((lab - la - lb).abs() <= 1e-12 * lab.max(1e-9));
        let er = s.relative_permittivity;
        prop_assert!((stub_delay(lab, 1e12, er) - (a + b)).abs() < 1e-9);
    }

    #[test]
    fn json_mask_round_trip(
        rows in 1usize..6, cols in 1usize..9, step in -FRAC_PI_2..FRAC_PI_2,
        tol in 0.0f64..0.2, seed in any::<u64>(),
    ) {
        let l = generate_layout(rows, cols, 1e12, &SubstrateSpec::su8(), step).unwrap();
        let l = perturb_layout(&l, tol, PerturbMode::Random, seed).unwrap();
        let back = import_json(&export_mask(&l, MaskFormat::Json).unwrap()).unwrap();
        prop_assert_eq!(back, l);
    }

    #[test]
    fn array_factor_matches_direct_sum(
        rows in 1usize..5, cols in 1usize..5, step in -FRAC_PI_2..FRAC_PI_2,
        tol in 0.0f64..0.3, seed in any::<u64>(),
        f in 0.7e12f64..1.3e12, inc in -0.6f64..0.6,
        angles in prop::collection::vec(-FRAC_PI_2..FRAC_PI_2, 1..20),
    ) {
        let s = SubstrateSpec::su8();
        let l = generate_layout(rows, cols, 1e12, &s, step).unwrap();
        let l = perturb_layout(&l, tol, PerturbMode::Random, seed).unwrap();
        let pattern = array_factor(&l, f, &angles, inc).unwrap();
        let k0 = TAU * f / 3e8;
        let n = l.elements.len() as f64;
        for (ai, &theta) in angles.iter().enumerate() {
            let direct: Complex64 = l
                .elements
                .iter()
                .map(|e| {
                    let delay = 2.0 * k0 * 2.75f64.sqrt() * e.stub_length;
                    Complex64::from_polar(1.0, k0 * e.x * (theta.sin() - inc.sin()) - delay)
                })
                .sum::<Complex64>()
                / n;
            prop_assert!((pattern.normalized(0, ai) - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn rows_do_not_move_the_lobe(rows in 1usize..8, cols in 4usize..40, step in -1.5f64..1.5) {
        let s = SubstrateSpec::su8();
        let angles: Vec<f64> = (-900..=900).map(|i| (i as f64 * 0.1).to_radians()).collect();
        let one = generate_layout(1, cols, 1e12, &s, step).unwrap();
        let many = generate_layout(rows, cols, 1e12, &s, step).unwrap();
        let a = array_factor(&one, 1e12, &angles, 0.0).unwrap().main_lobe(0).unwrap();
        let b = array_factor(&many, 1e12, &angles, 0.0).unwrap().main_lobe(0).unwrap();
        prop_assert!((a.angle - b.angle).abs() < 1e-9);
        prop_assert!((a.gain_db - b.gain_db).abs() < 1e-9);
    }

    #[test]
    fn electrical_size_is_what_matters(
        n in 1usize..16, scale in 0.2f64..5.0, k0 in 1e3f64..1e5, inc in -0.5f64..0.5,
        phases in prop::collection::vec(0.0f64..TAU, 16),
    ) {
        let x: Vec<f64> = (0..n).map(|i| i as f64 * 1.5e-4).collect();
        let xs: Vec<f64> = x.iter().map(|v| v * scale).collect();
        let w: Vec<Complex64> = phases[..n].iter().map(|&p| Complex64::from_polar(1.0, p)).collect();
        let angles = [-1.0, -0.3, 0.0, 0.4, 1.2];
        let a = array_factor_weighted(&x, &w, k0, &angles, inc);
        let b = array_factor_weighted(&xs, &w, k0 / scale, &angles, inc);
        for (p, q) in a.iter().zip(&b) {
            prop_assert!((p - q).norm() < 1e-9);
        }
    }

    #[test]
    fn reflectance_is_a_fraction(
        q in 1.0f64..60.0, eta in 0.0f64..=1.0, pol in 0.0f64..PI, tol in 0.0f64..0.2,
        det in -0.5f64..0.5, seed in any::<u64>(),
    ) {
        let l = generate_layout(3, 12, 1e12, &SubstrateSpec::su8(), FRAC_PI_2).unwrap();
        let l = perturb_layout(&l, tol, PerturbMode::Random, seed).unwrap();
        let r = ElementResponse::for_layout(&l, q, eta).unwrap().with_polarization(pol);
        let freqs = frequency_grid(0.6e12, 1.4e12, 60).unwrap();
        let spec = reflectance_spectrum(&l, &r, &freqs, det).unwrap();
        prop_assert!(spec.reflectance.iter().all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v)));
    }

    #[test]
    fn higher_q_narrows_the_dip(q in 2.0f64..40.0, dq in 1.0f64..10.0) {
        let l = generate_layout(1, 85, 1e12, &SubstrateSpec::su8(), FRAC_PI_2).unwrap();
        let freqs = frequency_grid(0.5e12, 1.5e12, 2001).unwrap();
        let width = |q: f64| {
            let r = ElementResponse::for_layout(&l, q, 0.9).unwrap();
            reflectance_spectrum(&l, &r, &freqs, 0.0).unwrap().width_at_half_depth().unwrap()
        };
        prop_assert!(width(q + dq) < width(q));
    }

    #[test]
    fn gray_round_trip(b0 in 0u8..2, b1 in 0u8..2) {
        let s = gray_map(b0, b1);
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        prop_assert_eq!(gray_demap(s), (b0, b1));
    }

    #[test]
    fn waveforms_have_unit_power(
        bits in prop::collection::vec(0u8..2, 200..400), sps in 2usize..9,
        tones in prop::collection::vec(0.1e9f64..7e9, 1..6),
    ) {
        let mut bits = bits;
        bits.truncate(bits.len() / 2 * 2);
        let w = qpsk_modulate(&bits, &FrameSpec::default(), sps).unwrap();
        prop_assert!((w.mean_power() - 1.0).abs() < 1e-9);
        let m = multitone(&tones, 16e9, 1e-7).unwrap();
        prop_assert!((m.mean_power() - 1.0).abs() < 1e-9);
    }
}
