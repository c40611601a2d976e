//! End-to-end pipeline orchestration and the sweep harness.
//!
//! A pipeline run renders (or ingests) the object and reference fringe
//! stacks, demodulates both, spatially unwraps the reference plane into the
//! minimum phase map, unwraps the object by the geometric constraint (or the
//! dual-frequency baseline), optionally corrects residual wraps, and
//! evaluates against ground truth when it is known. Every intermediate is
//! written to the output directory: stacks as PGM, phase maps as FPHM, the
//! report as JSON. Stages pass full-precision grids in memory; the files are
//! products, not the data path.
//!
//! All stages are deterministic given the configuration: per-stack RNG seeds
//! are derived from the base seed by role, and sweep cells sharing a
//! (noise, seed) pair reuse the same low-frequency stack across ratios.

use std::f64::consts::TAU;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::demod::{four_step_phase, FringeStack, DEFAULT_MODULATION_THRESHOLD};
use crate::error::{Error, Result};
use crate::metrics::{difference_map, evaluate, EvalReport};
use crate::raster::{fphm, pgm, Grid, Mask, Unit};
use crate::spatial::{quality_guided_unwrap, UnwrappedPhaseMap};
use crate::synth::{
    height_field, phase_from_height, render_fringes, Carrier, DfpGeometry, FringeParams,
    GaussianPeak, SceneKind, SceneSpec,
};
use crate::temporal::{
    dual_frequency_unwrap, geometric_unwrap, has_residual_wraps, residual_correct,
    unit_frequency_phase, FrequencyPair, MinPhaseMap,
};

/// Unwrapping method selected for a pipeline run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "geometric")]
    Geometric,
    /// Geometric unwrap followed unconditionally by residual correction.
    #[serde(rename = "geometric+correct")]
    GeometricCorrect,
    #[serde(rename = "dual-frequency")]
    DualFrequency,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Method::Geometric => "geometric",
            Method::GeometricCorrect => "geometric+correct",
            Method::DualFrequency => "dual-frequency",
        };
        f.write_str(s)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geometric" => Ok(Method::Geometric),
            "geometric+correct" => Ok(Method::GeometricCorrect),
            "dual-frequency" => Ok(Method::DualFrequency),
            other => Err(Error::InvalidParam(format!(
                "unknown method {other:?}; expected geometric, geometric+correct or dual-frequency"
            ))),
        }
    }
}

/// Complete, reproducible description of one experiment.
///
/// Serializes as a single JSON document; command-line flags override
/// individual fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub scene: SceneSpec,
    pub geometry: DfpGeometry,
    pub fringe: FringeParams,
    pub method: Method,
    /// Low fringe frequency in fringes per image; dual-frequency only.
    pub low_frequency: Option<f64>,
    pub out_dir: PathBuf,
    pub modulation_threshold: f64,
    /// Seed pixel for the reference-plane spatial unwrap; defaults to the
    /// highest-modulation pixel.
    pub seed_pixel: Option<(usize, usize)>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        // One centered bump standing 2 mm off the reference plane; the apex
        // stays well inside a single fringe period of phase.
        Self {
            scene: SceneSpec {
                width: 624,
                height: 441,
                kind: SceneKind::GaussianPeaks {
                    peaks: vec![GaussianPeak {
                        center_x_px: 312.0,
                        center_y_px: 220.0,
                        sigma_px: 60.0,
                        height_mm: 10.0,
                    }],
                },
                offset_mm: 2.0,
            },
            geometry: DfpGeometry::default(),
            fringe: FringeParams::default(),
            method: Method::Geometric,
            low_frequency: None,
            out_dir: PathBuf::from("out"),
            modulation_threshold: DEFAULT_MODULATION_THRESHOLD,
            seed_pixel: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.scene.validate()?;
        self.geometry.validate()?;
        self.fringe.validate()?;
        if self.modulation_threshold < 0.0 {
            return Err(Error::InvalidParam(format!(
                "modulation threshold must be >= 0, got {}",
                self.modulation_threshold
            )));
        }
        if self.method == Method::DualFrequency {
            let high = self.fringe.frequency(self.scene.width);
            match self.low_frequency {
                None => {
                    return Err(Error::InvalidParam(
                        "dual-frequency method requires low_frequency".into(),
                    ))
                }
                Some(low) if !(low > 0.0 && low < high) => {
                    return Err(Error::InvalidParam(format!(
                        "low_frequency must satisfy 0 < low < {high}, got {low}"
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Derive a per-role RNG seed from the base seed (FNV-1a over the tag).
pub fn derive_seed(base: u64, tag: &str) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64 ^ base;
    for b in tag.as_bytes() {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Fringe frequency on the reference plane for a pattern period, holding the
/// pixel pitch implied by the configured (period, fringes_per_mm) pair fixed.
fn fringes_per_mm_for_period(geometry: &DfpGeometry, base: &FringeParams, period_px: f64) -> f64 {
    geometry.fringes_per_mm * base.period_px / period_px
}

/// In-memory products of a simulation run.
#[derive(Debug, Clone)]
pub struct SimulatedScene {
    pub object_stack: FringeStack,
    pub reference_stack: FringeStack,
    /// Low-frequency object stack, present when `low_frequency` is set.
    pub low_stack: Option<FringeStack>,
    /// Ground-truth continuous object phase (carrier plus height shift).
    pub truth_phase: Grid,
    pub truth_height: Grid,
    pub scene_mask: Mask,
}

/// Render all stacks and ground truth for the configured scene.
pub fn simulate(config: &PipelineConfig) -> Result<SimulatedScene> {
    config.validate()?;
    let (truth_height, scene_mask) = height_field(&config.scene)?;
    let delta = phase_from_height(&truth_height, &config.geometry)?;

    let truth_phase = Grid::from_fn(
        config.scene.width,
        config.scene.height,
        Unit::Radians,
        |x, y| TAU * x as f64 / config.fringe.period_px + delta.get(x, y),
    )?;

    let base_seed = config.fringe.rng_seed;
    let object_params = FringeParams {
        rng_seed: derive_seed(base_seed, "object"),
        ..config.fringe
    };
    let reference_params = FringeParams {
        rng_seed: derive_seed(base_seed, "reference"),
        ..config.fringe
    };
    let object_stack = render_fringes(&delta, &object_params, Carrier::Object)?;
    let reference_stack = render_fringes(&delta, &reference_params, Carrier::Reference)?;

    let low_stack = match config.low_frequency {
        Some(low) => {
            let period_low = config.scene.width as f64 / low;
            let geometry_low = DfpGeometry {
                fringes_per_mm: fringes_per_mm_for_period(
                    &config.geometry,
                    &config.fringe,
                    period_low,
                ),
                ..config.geometry
            };
            let delta_low = phase_from_height(&truth_height, &geometry_low)?;
            let low_params = FringeParams {
                period_px: period_low,
                rng_seed: derive_seed(base_seed, "low"),
                ..config.fringe
            };
            Some(render_fringes(&delta_low, &low_params, Carrier::Object)?)
        }
        None => None,
    };

    Ok(SimulatedScene {
        object_stack,
        reference_stack,
        low_stack,
        truth_phase,
        truth_height,
        scene_mask,
    })
}

/// Round and clamp a rendered intensity grid to the 8-bit PGM range.
fn to_pgm_grid(grid: &Grid) -> Grid {
    grid.map(Unit::Intensity, |v| v.round().clamp(0.0, 255.0))
}

fn write_stack(
    stack: &FringeStack,
    dir: &Path,
    prefix: &str,
    files: &mut Vec<PathBuf>,
) -> Result<()> {
    for (n, img) in stack.images().iter().enumerate() {
        let path = dir.join(format!("{prefix}_{n}.pgm"));
        pgm::write_image(&to_pgm_grid(img), 255, &path)?;
        files.push(path);
    }
    Ok(())
}

/// Write a simulation to disk: one PGM per stack image, ground-truth phase
/// and height as FPHM, and the configuration as a JSON sidecar.
pub fn write_simulation(sim: &SimulatedScene, config: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let dir = &config.out_dir;
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();

    write_stack(&sim.object_stack, dir, "object", &mut files)?;
    write_stack(&sim.reference_stack, dir, "reference", &mut files)?;
    if let Some(low) = &sim.low_stack {
        write_stack(low, dir, "low", &mut files)?;
    }

    let truth_phase_path = dir.join("truth_phase.fphm");
    fphm::write_phase_map(&sim.truth_phase, &sim.scene_mask, &truth_phase_path)?;
    files.push(truth_phase_path);

    let truth_height_path = dir.join("truth_height.fphm");
    fphm::write_phase_map(&sim.truth_height, &sim.scene_mask, &truth_height_path)?;
    files.push(truth_height_path);

    let sidecar = dir.join("simulation.json");
    fs::write(&sidecar, serde_json::to_string_pretty(config)?)?;
    files.push(sidecar);

    Ok(files)
}

/// Result of one pipeline run.
#[derive(Debug)]
pub struct PipelineOutcome {
    pub final_map: UnwrappedPhaseMap,
    /// Evaluation of the final map, when ground truth is available.
    pub report: Option<EvalReport>,
    /// Evaluation of the geometric output before residual correction, when
    /// correction was applied and ground truth is available.
    pub uncorrected_report: Option<EvalReport>,
    pub correction_applied: bool,
    pub files: Vec<PathBuf>,
}

fn stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(name))
}

#[derive(Serialize)]
struct ReportFile<'a> {
    method: String,
    correction_applied: bool,
    report: Option<&'a EvalReport>,
    uncorrected_report: Option<&'a EvalReport>,
}

/// Run the processing pipeline on explicit stacks.
///
/// `truth` supplies the ground-truth phase and evaluation mask for synthetic
/// runs; pass `None` for externally captured stacks.
pub fn run_pipeline_on(
    config: &PipelineConfig,
    object_stack: &FringeStack,
    reference_stack: &FringeStack,
    low_stack: Option<&FringeStack>,
    truth: Option<(&Grid, &Mask)>,
) -> Result<PipelineOutcome> {
    config.validate()?;
    let dir = &config.out_dir;
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let threshold = config.modulation_threshold;

    let wrapped_object = stage("demod-object", four_step_phase(object_stack, threshold))?;
    let wrapped_reference = stage(
        "demod-reference",
        four_step_phase(reference_stack, threshold),
    )?;

    let reference_unwrapped = stage(
        "unwrap-reference",
        quality_guided_unwrap(&wrapped_reference, config.seed_pixel),
    )?;
    let phi_min = MinPhaseMap::from_unwrapped(reference_unwrapped);

    let mut correction_applied = false;
    let mut geometric_map: Option<UnwrappedPhaseMap> = None;
    let final_map = match config.method {
        Method::Geometric | Method::GeometricCorrect => {
            let geo = stage(
                "unwrap-geometric",
                geometric_unwrap(&wrapped_object, &phi_min),
            )?;
            let apply = config.method == Method::GeometricCorrect || has_residual_wraps(&geo);
            if apply {
                correction_applied = true;
                let corrected = stage(
                    "correct",
                    residual_correct(&geo, Some(&wrapped_object.modulation)),
                )?;
                geometric_map = Some(geo);
                corrected
            } else {
                geo
            }
        }
        Method::DualFrequency => {
            let low = low_stack.ok_or_else(|| {
                Error::InvalidParam("dual-frequency method requires a low-frequency stack".into())
                    .in_stage("demod-low")
            })?;
            let wrapped_low = stage("demod-low", four_step_phase(low, threshold))?;
            let phi1 = unit_frequency_phase(&wrapped_low);
            let freqs = stage(
                "unwrap-dual",
                FrequencyPair::new(
                    config.low_frequency.unwrap_or(1.0),
                    config.fringe.frequency(config.scene.width),
                ),
            )?;
            stage(
                "unwrap-dual",
                dual_frequency_unwrap(&phi1, &wrapped_object, &freqs),
            )?
        }
    };

    let mut report = None;
    let mut uncorrected_report = None;
    if let Some((truth_phase, truth_mask)) = truth {
        report = Some(stage(
            "evaluate",
            evaluate(&final_map, truth_phase, truth_mask, true),
        )?);
        if let Some(geo) = &geometric_map {
            uncorrected_report = Some(stage(
                "evaluate",
                evaluate(geo, truth_phase, truth_mask, true),
            )?);
        }
        let piston = report.as_ref().map_or(0.0, |r| r.piston_removed);
        let diff = stage("evaluate", difference_map(&final_map, truth_phase, piston))?;
        let path = dir.join("abs_error.fphm");
        fphm::write_phase_map(&diff, &final_map.mask, &path)?;
        files.push(path);
    }

    let all_valid = Mask::all_valid(wrapped_object.phase.width(), wrapped_object.phase.height())?;
    let writes: [(&str, &Grid, &Mask); 5] = [
        (
            "wrapped_object.fphm",
            &wrapped_object.phase,
            &wrapped_object.mask,
        ),
        (
            "modulation_object.fphm",
            &wrapped_object.modulation,
            &all_valid,
        ),
        (
            "wrapped_reference.fphm",
            &wrapped_reference.phase,
            &wrapped_reference.mask,
        ),
        (
            "modulation_reference.fphm",
            &wrapped_reference.modulation,
            &all_valid,
        ),
        ("phi_min.fphm", &phi_min.phase, &phi_min.mask),
    ];
    for (name, grid, mask) in writes {
        let path = dir.join(name);
        fphm::write_phase_map(grid, mask, &path)?;
        files.push(path);
    }
    if let Some(geo) = &geometric_map {
        let path = dir.join("unwrapped_geometric.fphm");
        fphm::write_phase_map(&geo.phase, &geo.mask, &path)?;
        files.push(path);
    }
    let final_name = match (config.method, correction_applied) {
        (Method::DualFrequency, _) => "unwrapped_dual.fphm",
        (_, true) => "unwrapped_corrected.fphm",
        (_, false) => "unwrapped_geometric.fphm",
    };
    let path = dir.join(final_name);
    fphm::write_phase_map(&final_map.phase, &final_map.mask, &path)?;
    files.push(path);

    let report_path = dir.join("report.json");
    let file = ReportFile {
        method: config.method.to_string(),
        correction_applied,
        report: report.as_ref(),
        uncorrected_report: uncorrected_report.as_ref(),
    };
    fs::write(&report_path, serde_json::to_string_pretty(&file)?)?;
    files.push(report_path);

    Ok(PipelineOutcome {
        final_map,
        report,
        uncorrected_report,
        correction_applied,
        files,
    })
}

/// Simulate the configured scene, write the simulation products, and run the
/// pipeline against the generated stacks with ground truth attached.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineOutcome> {
    let sim = stage("simulate", simulate(config))?;
    let mut sim_files = stage("simulate", write_simulation(&sim, config))?;
    let mut outcome = run_pipeline_on(
        config,
        &sim.object_stack,
        &sim.reference_stack,
        sim.low_stack.as_ref(),
        Some((&sim.truth_phase, &sim.scene_mask)),
    )?;
    sim_files.append(&mut outcome.files);
    outcome.files = sim_files;
    Ok(outcome)
}

/// One cell of the ratio/noise/seed sweep: both methods on the same stacks.
#[derive(Debug, Clone, Serialize)]
pub struct SweepCell {
    pub ratio: f64,
    pub noise_sigma: f64,
    pub seed: u64,
    pub dual_order_errors: usize,
    pub dual_order_error_rate: f64,
    pub geometric_order_errors: usize,
    pub geometric_order_error_rate: f64,
    pub valid_pixels: usize,
}

/// Run the dual-frequency versus geometric comparison over a grid of
/// frequency ratios, noise levels, and seeds.
///
/// The low-frequency pattern has unit frequency (one fringe per image), as
/// the conventional baseline requires, and is rendered once per
/// (noise, seed) pair and shared across ratios. The fringe frequency on the
/// reference plane scales with the pattern frequency, holding the pixel
/// pitch fixed. Cells are returned ordered by (ratio, noise, seed).
pub fn run_sweep(
    config: &PipelineConfig,
    ratios: &[f64],
    noise_levels: &[f64],
    seeds: &[u64],
) -> Result<Vec<SweepCell>> {
    if ratios.is_empty() || noise_levels.is_empty() || seeds.is_empty() {
        return Err(Error::InvalidParam(
            "sweep requires non-empty ratios, noise levels and seeds".into(),
        ));
    }
    for &r in ratios {
        let ok = r.is_finite() && r > 1.0;
        if !ok {
            return Err(Error::InvalidParam(format!(
                "frequency ratio must exceed 1, got {r}"
            )));
        }
    }
    config.scene.validate()?;
    config.geometry.validate()?;
    config.fringe.validate()?;

    let width = config.scene.width as f64;
    let (truth_height, scene_mask) = height_field(&config.scene)?;
    let low_period = width; // unit frequency: one fringe per image
    let geometry_low = DfpGeometry {
        fringes_per_mm: fringes_per_mm_for_period(&config.geometry, &config.fringe, low_period),
        ..config.geometry
    };
    let delta_low = phase_from_height(&truth_height, &geometry_low)?;

    let mut cells = Vec::with_capacity(ratios.len() * noise_levels.len() * seeds.len());
    for &noise in noise_levels {
        for &seed in seeds {
            let low_params = FringeParams {
                period_px: low_period,
                noise_sigma: noise,
                rng_seed: derive_seed(seed, &format!("sweep-low-n{noise}")),
                ..config.fringe
            };
            let low_stack = render_fringes(&delta_low, &low_params, Carrier::Object)?;
            let wrapped_low = four_step_phase(&low_stack, config.modulation_threshold)?;
            let phi1 = unit_frequency_phase(&wrapped_low);

            for &ratio in ratios {
                let period_high = width / ratio;
                let geometry_high = DfpGeometry {
                    fringes_per_mm: fringes_per_mm_for_period(
                        &config.geometry,
                        &config.fringe,
                        period_high,
                    ),
                    ..config.geometry
                };
                let delta_high = phase_from_height(&truth_height, &geometry_high)?;
                let truth_phase = Grid::from_fn(
                    truth_height.width(),
                    truth_height.height(),
                    Unit::Radians,
                    |x, y| TAU * x as f64 / period_high + delta_high.get(x, y),
                )?;

                let object_params = FringeParams {
                    period_px: period_high,
                    noise_sigma: noise,
                    rng_seed: derive_seed(seed, &format!("sweep-object-n{noise}-r{ratio}")),
                    ..config.fringe
                };
                let reference_params = FringeParams {
                    period_px: period_high,
                    noise_sigma: noise,
                    rng_seed: derive_seed(seed, &format!("sweep-reference-n{noise}-r{ratio}")),
                    ..config.fringe
                };
                let object_stack = render_fringes(&delta_high, &object_params, Carrier::Object)?;
                let reference_stack =
                    render_fringes(&delta_high, &reference_params, Carrier::Reference)?;

                let wrapped_object = four_step_phase(&object_stack, config.modulation_threshold)?;
                let wrapped_reference =
                    four_step_phase(&reference_stack, config.modulation_threshold)?;

                let phi_min = MinPhaseMap::from_unwrapped(quality_guided_unwrap(
                    &wrapped_reference,
                    config.seed_pixel,
                )?);
                let geometric = geometric_unwrap(&wrapped_object, &phi_min)?;
                let freqs = FrequencyPair::new(1.0, ratio)?;
                let dual = dual_frequency_unwrap(&phi1, &wrapped_object, &freqs)?;

                let geo_report = evaluate(&geometric, &truth_phase, &scene_mask, true)?;
                let dual_report = evaluate(&dual, &truth_phase, &scene_mask, true)?;

                cells.push(SweepCell {
                    ratio,
                    noise_sigma: noise,
                    seed,
                    dual_order_errors: dual_report.order_error_count,
                    dual_order_error_rate: dual_report.order_error_rate,
                    geometric_order_errors: geo_report.order_error_count,
                    geometric_order_error_rate: geo_report.order_error_rate,
                    valid_pixels: dual_report.valid_pixel_count,
                });
            }
        }
    }

    cells.sort_by(|a, b| {
        a.ratio
            .total_cmp(&b.ratio)
            .then(a.noise_sigma.total_cmp(&b.noise_sigma))
            .then(a.seed.cmp(&b.seed))
    });
    Ok(cells)
}

/// Render sweep cells as a tab-separated table with a header row.
pub fn sweep_table(cells: &[SweepCell]) -> String {
    let mut out = String::from(
        "ratio\tnoise_sigma\tseed\tdual_order_errors\tdual_order_error_rate\t\
         geometric_order_errors\tgeometric_order_error_rate\tvalid_pixels\n",
    );
    for c in cells {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{:.6}\t{}\t{:.6}\t{}\n",
            c.ratio,
            c.noise_sigma,
            c.seed,
            c.dual_order_errors,
            c.dual_order_error_rate,
            c.geometric_order_errors,
            c.geometric_order_error_rate,
            c.valid_pixels
        ));
    }
    out
}
