use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context as _};
use clap::ValueEnum;
use rayon::prelude::*;
use serde::Serialize;

use reflectarray::comms::{
    build_frame, channel_apply, multitone, periodogram, qpsk_modulate, simulate_multitone,
    simulate_qpsk, theoretical_qpsk_ber, MultitoneRun, QpskOutcome, QpskRun, ToneSnr,
};
use reflectarray::config::ProjectConfig;
use reflectarray::layout::{generate_layout_with, perturb_layout, ArrayLayout, PerturbMode};
use reflectarray::link::{calibrate_distance, link_report, LinkGeometry, LinkReport};
use reflectarray::mask::{export_mask, MaskFormat};
use reflectarray::patch::{validate_substrate, PatchGeometry, SubstrateReport, SubstrateSpec};
use reflectarray::wavefront::{
    angle_grid, array_factor, frequency_grid, radiation_pattern, reflectance_spectrum,
    ElementResponse, RadiationPattern,
};

use crate::output::{config_hash, OutputDir};

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or arguments: exit code 2.
    Usage(anyhow::Error),
    /// Model or I/O failure: exit code 1.
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<reflectarray::Error> for CliError {
    fn from(e: reflectarray::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

type CmdResult = Result<(), CliError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Surface {
    Reflectarray,
    MetalSheet,
}

pub struct Context {
    cfg: ProjectConfig,
    out_root: PathBuf,
    hash: String,
}

fn usage(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Usage(e.into())
}

fn parse_perturb(spec: &str) -> Result<(PerturbMode, f64), CliError> {
    let (mode, tol) = spec
        .split_once(':')
        .ok_or_else(|| usage(anyhow!("perturbation `{spec}` must be uniform:<t> or random:<t>")))?;
    let mode = match mode {
        "uniform" => PerturbMode::UniformScale,
        "random" => PerturbMode::Random,
        other => return Err(usage(anyhow!("unknown perturbation mode `{other}`"))),
    };
    let tol: f64 = tol
        .parse()
        .map_err(|_| usage(anyhow!("perturbation tolerance `{tol}` is not a number")))?;
    if !(0.0..1.0).contains(&tol) {
        return Err(usage(anyhow!("perturbation tolerance must lie in [0, 1)")));
    }
    Ok((mode, tol))
}

#[derive(Serialize)]
struct DesignReport {
    substrate: SubstrateSpec,
    patch: PatchGeometry,
    validation: SubstrateReport,
}

#[derive(Serialize)]
struct LinkOutput {
    surface: Surface,
    geometry: LinkGeometry,
    report: LinkReport,
}

#[derive(Serialize)]
struct SimulationOutput {
    surface: Surface,
    link: LinkReport,
    reference_snr_db: f64,
    relative_gain_db: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    qpsk: Option<QpskSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    multitone: Option<Vec<ToneSnr>>,
}

#[derive(Serialize)]
struct QpskSummary {
    outcome: QpskOutcome,
    sync_failure: bool,
    theoretical_ber: f64,
}

impl Context {
    pub fn new(config: Option<&Path>, overrides: &[String], out_root: PathBuf) -> Result<Self, CliError> {
        let text = match config {
            Some(p) => Some(
                std::fs::read_to_string(p)
                    .with_context(|| format!("cannot read config {}", p.display()))
                    .map_err(CliError::Usage)?,
            ),
            None => None,
        };
        let cfg = ProjectConfig::load(text.as_deref(), overrides)
            .context("invalid configuration")
            .map_err(CliError::Usage)?;
        let hash = config_hash(&serde_json::to_vec(&cfg).map_err(anyhow::Error::from)?);
        Ok(Context { cfg, out_root, hash })
    }

    fn out(&self, command: &str) -> Result<OutputDir, CliError> {
        Ok(OutputDir::new(self.out_root.clone(), command, self.hash.clone())?)
    }

    fn base_layout(&self, phase_step: f64) -> Result<ArrayLayout, CliError> {
        let c = &self.cfg;
        Ok(generate_layout_with(
            c.rows,
            c.cols,
            c.design_frequency,
            &c.substrate,
            phase_step,
            c.stub_wave_number,
        )?)
    }

    fn layout_for(&self, perturb: Option<&str>) -> Result<ArrayLayout, CliError> {
        let layout = self.base_layout(self.cfg.phase_step)?;
        match perturb {
            Some(spec) => {
                let (mode, tol) = parse_perturb(spec)?;
                Ok(perturb_layout(&layout, tol, mode, self.cfg.seeds.layout)?)
            }
            None => Ok(layout),
        }
    }

    fn surface_layout(&self, surface: Surface) -> Result<ArrayLayout, CliError> {
        match surface {
            Surface::Reflectarray => self.base_layout(self.cfg.phase_step),
            Surface::MetalSheet => self.base_layout(0.0),
        }
    }

    fn link_pattern(&self, layout: &ArrayLayout) -> Result<RadiationPattern, CliError> {
        let angles = angle_grid(self.cfg.pattern.angle_step_deg)?;
        let mut angles = angles;
        // make sure the receiver direction is sampled exactly
        let rx = self.cfg.geometry.rx_angle;
        if !angles.iter().any(|&a| (a - rx).abs() < 1e-12) {
            angles.push(rx);
            angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        }
        Ok(array_factor(
            layout,
            self.cfg.chain.carrier_frequency_hz,
            &angles,
            self.cfg.geometry.incidence_angle,
        )?)
    }

    /// Geometry calibrated on the reflectarray, with both surfaces' reports.
    fn calibrated_links(&self, surface: Surface) -> Result<(LinkGeometry, LinkReport, LinkReport), CliError> {
        let c = &self.cfg;
        let reference = self.link_pattern(&self.surface_layout(Surface::Reflectarray)?)?;
        let geometry = calibrate_distance(&c.chain, &c.geometry, &reference, c.simulation.calibration_snr_db)?;
        let ref_report = link_report(&c.chain, &geometry, &reference)?;
        let surf_report = match surface {
            Surface::Reflectarray => ref_report,
            Surface::MetalSheet => {
                let p = self.link_pattern(&self.surface_layout(surface)?)?;
                link_report(&c.chain, &geometry, &p)?
            }
        };
        Ok((geometry, ref_report, surf_report))
    }

    pub fn design(&self) -> CmdResult {
        let c = &self.cfg;
        let patch = PatchGeometry::synthesize(c.design_frequency, &c.substrate)?;
        let validation = validate_substrate(&c.substrate, c.design_frequency)?;
        let out = self.out("design")?;
        println!("width                  {:10.3} um", patch.width * 1e6);
        println!("length                 {:10.3} um", patch.length * 1e6);
        println!("effective permittivity {:10.4}", patch.effective_permittivity);
        println!("resonant frequency     {:10.6} THz", patch.resonant_frequency / 1e12);
        println!(
            "thickness window       {:.3}-{:.3} um: {}",
            validation.lower_bound * 1e6,
            validation.upper_bound * 1e6,
            if validation.passed() { "ok".to_string() } else { format!("{:?}", validation.warnings) }
        );
        out.write_json(
            "design.json",
            &DesignReport {
                substrate: c.substrate,
                patch,
                validation,
            },
        )?;
        Ok(())
    }

    pub fn layout(&self, perturb: Option<&str>) -> CmdResult {
        let layout = self.layout_for(perturb)?;
        let out = self.out("layout")?;
        out.write("layout.json", &export_mask(&layout, MaskFormat::Json)?)?;
        out.write("elements.csv", &export_mask(&layout, MaskFormat::Csv)?)?;
        let (w, h) = layout.extent();
        let min_stub = layout
            .elements
            .iter()
            .map(|e| e.stub_length)
            .filter(|&s| s > 0.0)
            .fold(f64::INFINITY, f64::min);
        println!("elements        {} x {}", layout.rows, layout.cols);
        println!("pitch           {:.3} um", layout.pitch * 1e6);
        println!("panel           {:.4} x {:.4} mm", w * 1e3, h * 1e3);
        println!("steering angle  {:.3} deg", layout.steering_angle.to_degrees());
        if min_stub.is_finite() {
            println!("shortest stub   {:.3} um", min_stub * 1e6);
        }
        Ok(())
    }

    pub fn export(&self, format: MaskFormat, perturb: Option<&str>) -> CmdResult {
        let layout = self.layout_for(perturb)?;
        let out = self.out("export")?;
        let path = out.write(&format!("mask.{}", format.extension()), &export_mask(&layout, format)?)?;
        println!("{}", path.display());
        Ok(())
    }

    pub fn pattern(&self, perturb: Option<&str>, frequencies: &[f64]) -> CmdResult {
        let layout = self.layout_for(perturb)?;
        let freqs = if frequencies.is_empty() {
            vec![self.cfg.design_frequency]
        } else {
            frequencies.to_vec()
        };
        let angles = angle_grid(self.cfg.pattern.angle_step_deg)?;
        let pattern = radiation_pattern(&layout, &freqs, &angles, self.cfg.pattern.incidence)?;
        let mut csv = String::from("freq_hz,angle_deg,power_db\n");
        for fi in 0..freqs.len() {
            for (ai, a) in angles.iter().enumerate() {
                let _ = writeln!(csv, "{},{},{}", freqs[fi], a.to_degrees(), pattern.power_db(fi, ai));
            }
        }
        self.out("pattern")?.write("pattern.csv", csv.as_bytes())?;
        for (fi, f) in freqs.iter().enumerate() {
            let lobe = pattern.main_lobe(fi)?;
            println!(
                "main lobe at {:.4} THz: {:.2} deg, {:.2} dB",
                f / 1e12,
                lobe.angle.to_degrees(),
                lobe.gain_db
            );
        }
        Ok(())
    }

    pub fn spectrum(&self, perturb: Option<&str>, cross_pol: bool) -> CmdResult {
        let c = &self.cfg;
        let layout = self.layout_for(perturb)?;
        let pol = if cross_pol {
            c.element.polarization_angle + std::f64::consts::FRAC_PI_2
        } else {
            c.element.polarization_angle
        };
        let response = ElementResponse::for_layout(&layout, c.element.quality_factor, c.element.peak_coupling)?
            .with_polarization(pol);
        let freqs = frequency_grid(c.spectrum.start_hz, c.spectrum.stop_hz, c.spectrum.points)?;
        let spectrum = reflectance_spectrum(&layout, &response, &freqs, c.spectrum.detector_angle)?;
        let mut csv = String::from("freq_hz,reflectance\n");
        for (f, r) in spectrum.frequencies.iter().zip(&spectrum.reflectance) {
            let _ = writeln!(csv, "{f},{r}");
        }
        self.out("spectrum")?.write("spectrum.csv", csv.as_bytes())?;
        let flat = spectrum.reflectance.iter().all(|&r| (r - 1.0).abs() < 1e-12);
        match spectrum.dip() {
            Some(_) if flat => println!("flat spectrum (no dip)"),
            Some(d) => println!(
                "dip at {:.4} THz, reflectance {:.4}",
                d.frequency / 1e12,
                d.reflectance
            ),
            None => println!("empty spectrum"),
        }
        Ok(())
    }

    pub fn link(&self, surface: Surface, calibrate: bool) -> CmdResult {
        let c = &self.cfg;
        let (geometry, report) = if calibrate {
            let (g, _, r) = self.calibrated_links(surface)?;
            (g, r)
        } else {
            let p = self.link_pattern(&self.surface_layout(surface)?)?;
            (c.geometry, link_report(&c.chain, &c.geometry, &p)?)
        };
        println!("{report}");
        println!("{:<22}{:>12.4} m", "total distance", geometry.total_distance());
        self.out("link")?.write_json(
            "link.json",
            &LinkOutput {
                surface,
                geometry,
                report,
            },
        )?;
        Ok(())
    }

    pub fn simulate(&self, surface: Surface, tones: bool, dump_waveform: bool) -> CmdResult {
        let c = &self.cfg;
        let s = &c.simulation;
        let (_, reference, link) = self.calibrated_links(surface)?;
        let relative_gain_db = link.snr_db - reference.snr_db;
        let seed = c.seeds.simulation;
        let out = self.out("simulate")?;

        let mut result = SimulationOutput {
            surface,
            link,
            reference_snr_db: reference.snr_db,
            relative_gain_db,
            qpsk: None,
            multitone: None,
        };

        if tones {
            let run = MultitoneRun {
                tones: s.tones_hz.clone(),
                sample_rate: s.tone_sample_rate,
                duration: s.tone_duration,
                reference_snr_db: s.calibration_snr_db,
                gain_db: relative_gain_db,
                seed,
            };
            let report = simulate_multitone(&run)?;
            let detected = report.iter().filter(|t| t.detected()).count();
            for t in &report {
                println!(
                    "tone {:>6.3} GHz  SNR {:>8.2} dB  {}",
                    t.frequency / 1e9,
                    t.snr_db,
                    if t.detected() { "detected" } else { "-" }
                );
            }
            println!("{detected}/{} tones detected", report.len());

            let rx = channel_apply(
                &multitone(&run.tones, run.sample_rate, run.duration)?,
                run.gain_db,
                -run.reference_snr_db,
                run.seed,
            )?;
            let mut csv = String::from("freq_hz,power_db\n");
            for (f, p) in periodogram(&rx)? {
                let _ = writeln!(csv, "{f},{}", 10.0 * p.max(1e-300).log10());
            }
            out.write("multitone_spectrum.csv", csv.as_bytes())?;
            if dump_waveform {
                let path = out.path("multitone_rx.iq");
                rx.save(&path).map_err(anyhow::Error::from)?;
                out.write_sidecar(&path)?;
            }
            result.multitone = Some(report);
        } else {
            let run = QpskRun {
                ebn0_db: s.ebn0_db,
                gain_db: relative_gain_db,
                frames: s.frames,
                samples_per_symbol: s.samples_per_symbol,
                seed,
            };
            let outcome = simulate_qpsk(&c.frame, &run)?;
            let r = &outcome.report;
            println!("surface          {surface:?}");
            println!("Eb/N0            {:.2} dB", outcome.received_ebn0_db);
            println!("bits             {}", r.total_data_bits);
            println!("bit errors       {}", r.bit_errors);
            println!("BER              {:.4} (theory {:.4})", r.ber, theoretical_qpsk_ber(outcome.received_ebn0_db));
            println!("effective rate   {:.2} Mb/s", r.effective_rate / 1e6);
            println!(
                "sync             {}",
                if outcome.sync_failed() {
                    format!("FAILED in {}/{} frames", outcome.sync_failures, outcome.frames)
                } else {
                    "locked".to_string()
                }
            );
            if dump_waveform {
                let payload = vec![0u8; c.frame.data_bits];
                let bits = build_frame(&c.frame, &payload, seed)?;
                let tx = qpsk_modulate(&bits, &c.frame, s.samples_per_symbol)?;
                let path = out.path("qpsk_tx.iq");
                tx.save(&path).map_err(anyhow::Error::from)?;
                out.write_sidecar(&path)?;
            }
            result.qpsk = Some(QpskSummary {
                sync_failure: outcome.sync_failed(),
                theoretical_ber: theoretical_qpsk_ber(outcome.received_ebn0_db),
                outcome,
            });
        }
        out.write_json("simulate.json", &result)?;
        Ok(())
    }

    pub fn sweep_tolerance(&self) -> CmdResult {
        let c = &self.cfg;
        let base = self.base_layout(c.phase_step)?;
        let freqs = frequency_grid(c.spectrum.start_hz, c.spectrum.stop_hz, c.spectrum.points)?;
        let rows: Vec<(usize, u64, f64, f64)> = (0..c.sweep.trials)
            .into_par_iter()
            .map(|i| -> reflectarray::Result<_> {
                let seed = c.seeds.layout.wrapping_add(i as u64);
                let l = perturb_layout(&base, c.sweep.relative_tolerance, PerturbMode::Random, seed)?;
                let r = ElementResponse::for_layout(&l, c.element.quality_factor, c.element.peak_coupling)?
                    .with_polarization(c.element.polarization_angle);
                let dip = reflectance_spectrum(&l, &r, &freqs, c.spectrum.detector_angle)?
                    .dip()
                    .expect("non-empty grid");
                Ok((i, seed, dip.frequency, dip.reflectance))
            })
            .collect::<reflectarray::Result<_>>()?;
        let mut csv = String::from("trial,seed,dip_hz,dip_reflectance\n");
        for (i, seed, f, r) in &rows {
            let _ = writeln!(csv, "{i},{seed},{f},{r}");
        }
        self.out("sweep tolerance")?.write("sweep_tolerance.csv", csv.as_bytes())?;
        let n = rows.len() as f64;
        let mean = rows.iter().map(|r| r.2).sum::<f64>() / n;
        let std = (rows.iter().map(|r| (r.2 - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt();
        println!(
            "{} trials at +/-{:.1}%: dip {:.4} THz (std {:.4} THz)",
            rows.len(),
            100.0 * c.sweep.relative_tolerance,
            mean / 1e12,
            std / 1e12
        );
        Ok(())
    }

    pub fn sweep_ber(&self) -> CmdResult {
        let c = &self.cfg;
        let rows: Vec<(f64, QpskOutcome)> = c
            .sweep
            .ebn0_db
            .par_iter()
            .enumerate()
            .map(|(i, &e)| {
                let run = QpskRun {
                    ebn0_db: e,
                    gain_db: 0.0,
                    frames: c.simulation.frames,
                    samples_per_symbol: c.simulation.samples_per_symbol,
                    seed: c.seeds.simulation.wrapping_add(i as u64),
                };
                simulate_qpsk(&c.frame, &run).map(|o| (e, o))
            })
            .collect::<reflectarray::Result<_>>()?;
        let mut csv = String::from("ebn0_db,ber,theory,bits\n");
        for (e, o) in &rows {
            let t = theoretical_qpsk_ber(*e);
            let _ = writeln!(csv, "{e},{},{t},{}", o.report.ber, o.report.total_data_bits);
            println!("{e:>6.2} dB  BER {:.5}  theory {t:.5}", o.report.ber);
        }
        self.out("sweep ber")?.write("sweep_ber.csv", csv.as_bytes())?;
        Ok(())
    }
}
