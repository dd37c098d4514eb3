//! Values computed independently of the crate (closed forms evaluated by
//! hand or by quadrature here) and compared against the library.

use std::f64::consts::{FRAC_PI_2, PI};

use reflectarray::comms::{
    channel_apply, multitone, simulate_multitone, simulate_qpsk, theoretical_qpsk_ber, tone_snr,
    FrameSpec, MultitoneRun, QpskRun,
};
use reflectarray::layout::{generate_layout, stub_length, StubWaveNumber};
use reflectarray::layout::generate_layout_with;
use reflectarray::link::{free_space_path_loss, medium_loss};
use reflectarray::mask::{export_mask, MaskFormat};
use reflectarray::patch::{PatchGeometry, SubstrateSpec};

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs()
}

/// Gaussian tail Q(x) by composite Simpson over [x, x + 12].
fn q_function(x: f64) -> f64 {
    let n = 20_000;
    let h = 12.0 / n as f64;
    let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * PI).sqrt();
    let mut s = pdf(x) + pdf(x + 12.0);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * pdf(x + i as f64 * h);
    }
    s * h / 3.0
}

fn qpsk_ber_oracle(ebn0_db: f64) -> f64 {
    q_function((2.0 * 10f64.powf(ebn0_db / 10.0)).sqrt())
}

#[test]
fn su8_patch_at_one_terahertz() {
    let p = PatchGeometry::synthesize(1e12, &SubstrateSpec::su8()).unwrap();
    assert!(close(p.width, 109.5445e-6, 1e-5), "{}", p.width);
    assert!(close(p.effective_permittivity, 2.65701, 1e-5));
    assert!(close(p.length, 89.712e-6, 1e-4), "{}", p.length);
}

#[test]
fn scaled_patch_resonances() {
    let s = SubstrateSpec::su8();
    let p = PatchGeometry::synthesize(1e12, &s).unwrap();
    assert!(close(p.scaled(1.1, &s).unwrap().resonant_frequency, 0.90993e12, 1e-4));
    assert!(close(p.scaled(0.9, &s).unwrap().resonant_frequency, 1.1098e12, 1e-4));
}

#[test]
fn quarter_turn_stubs() {
    let s = SubstrateSpec::su8();
    assert!(close(stub_length(FRAC_PI_2, 1e12, &s).unwrap(), 22.613e-6, 1e-4));
    let eff = generate_layout_with(1, 2, 1e12, &s, FRAC_PI_2, StubWaveNumber::Effective).unwrap();
    assert!(close(eff.elements[1].stub_length, 23.006e-6, 1e-4));
}

#[test]
fn path_losses() {
    assert!(close(free_space_path_loss(1.0, 1.025e12).unwrap(), 92.656, 1e-5));
    assert!(close(medium_loss(2.0, 0.1).unwrap(), 0.86859, 1e-5));
}

#[test]
fn qpsk_theory_matches_quadrature() {
    for db in [-2.0, 0.0, 2.25, 4.0, 6.0, 8.0, 9.6, 12.0] {
        let a = theoretical_qpsk_ber(db);
        let b = qpsk_ber_oracle(db);
        assert!(close(a, b, 1e-8), "{db} dB: {a} vs {b}");
    }
    assert!(close(theoretical_qpsk_ber(2.25), 0.033448, 1e-4));
    assert!(close(theoretical_qpsk_ber(9.6), 9.74e-6, 1e-3));
}

#[test]
fn simulated_ber_follows_theory() {
    let spec = FrameSpec::default();
    for (i, db) in [0.0, 2.0, 4.0, 6.0, 8.0].into_iter().enumerate() {
        let run = QpskRun {
            ebn0_db: db,
            gain_db: 0.0,
            frames: 50,
            samples_per_symbol: 4,
            seed: 100 + i as u64,
        };
        let out = simulate_qpsk(&spec, &run).unwrap();
        let n = out.report.total_data_bits as f64;
        assert!(n >= 1e5);
        let p = qpsk_ber_oracle(db);
        let sigma = (p * (1.0 - p) / n).sqrt();
        assert!(
            (out.report.ber - p).abs() <= 3.0 * sigma,
            "{db} dB: {} vs {p} (sigma {sigma})",
            out.report.ber
        );
        assert_eq!(out.sync_failures, 0);
    }
}

#[test]
fn tone_snr_estimate_tracks_truth() {
    let tones = [1e9, 2e9, 3e9, 4e9, 5e9];
    let tx = multitone(&tones, 16e9, 1e-6).unwrap();
    for (i, per_tone) in [0.0, 10.0, 20.0, 30.0, 40.0].into_iter().enumerate() {
        // composite has unit power, so each tone carries 1/5
        let noise_db = -per_tone - 10.0 * 5f64.log10();
        let rx = channel_apply(&tx, 0.0, noise_db, 40 + i as u64).unwrap();
        for t in tone_snr(&rx, &tones).unwrap() {
            assert!((t.snr_db - per_tone).abs() < 0.5, "{per_tone}: {}", t.snr_db);
        }
    }
}

#[test]
fn fixed_seeds_are_reproducible() {
    let spec = FrameSpec::default();
    let run = QpskRun {
        ebn0_db: 3.0,
        gain_db: -1.0,
        frames: 5,
        samples_per_symbol: 4,
        seed: 9,
    };
    assert_eq!(simulate_qpsk(&spec, &run).unwrap(), simulate_qpsk(&spec, &run).unwrap());

    let mt = MultitoneRun {
        tones: vec![1e9, 3e9],
        sample_rate: 16e9,
        duration: 1e-6,
        reference_snr_db: 20.0,
        gain_db: 0.0,
        seed: 4,
    };
    assert_eq!(simulate_multitone(&mt).unwrap(), simulate_multitone(&mt).unwrap());

    let l = generate_layout(6, 6, 1e12, &SubstrateSpec::su8(), FRAC_PI_2).unwrap();
    for fmt in [MaskFormat::Svg, MaskFormat::Json, MaskFormat::Csv] {
        assert_eq!(export_mask(&l, fmt).unwrap(), export_mask(&l, fmt).unwrap());
    }
}
