//! Command-line interface for the fringekit profilometry toolkit.
//!
//! Subcommands cover the full measurement loop: `simulate` renders synthetic
//! fringe stacks, `demod` recovers wrapped phase, `unwrap-spatial` /
//! `unwrap-geometric` / `unwrap-dual` / `correct` apply the individual
//! unwrapping stages to FPHM files, `evaluate` scores an estimate against
//! ground truth, `pipeline` runs everything end to end, and `sweep` compares
//! the geometric and dual-frequency methods over ratio/noise/seed grids.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use fringekit::demod::{four_step_phase, FringeStack, WrappedPhaseMap};
use fringekit::metrics::{difference_map, evaluate};
use fringekit::pipeline::{
    run_pipeline, run_pipeline_on, run_sweep, simulate, sweep_table, write_simulation, Method,
    PipelineConfig,
};
use fringekit::raster::{fphm, pgm};
use fringekit::spatial::{itoh_unwrap_grid, quality_guided_unwrap, Provenance, UnwrappedPhaseMap};
use fringekit::temporal::{
    dual_frequency_unwrap, geometric_unwrap, residual_correct, unit_frequency_phase, FrequencyPair,
    MinPhaseMap,
};
use fringekit::{Mask, Unit};

#[derive(Parser)]
#[command(
    name = "fringekit",
    version,
    about = "Fringe projection profilometry toolkit: simulate, demodulate, unwrap, evaluate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Shared configuration flags. A JSON config file supplies the baseline;
/// explicit flags override individual fields.
#[derive(Args, Debug, Default)]
struct ConfigArgs {
    /// JSON pipeline configuration file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Base RNG seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Fringe period in pixels on the projected pattern.
    #[arg(long, value_name = "F")]
    period_px: Option<f64>,
    /// Intensity noise standard deviation.
    #[arg(long, value_name = "F")]
    noise_sigma: Option<f64>,
    /// Unwrapping method: geometric, geometric+correct or dual-frequency.
    #[arg(long, value_name = "NAME")]
    method: Option<String>,
    /// High/low frequency ratio; sets the low frequency for dual-frequency.
    #[arg(long, value_name = "F")]
    ratio: Option<f64>,
    /// Seed pixel for the reference-plane unwrap, as X,Y.
    #[arg(long, value_name = "X,Y")]
    seed_pixel: Option<String>,
    /// Modulation threshold for the validity mask.
    #[arg(long, value_name = "F")]
    mod_threshold: Option<f64>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut config = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing config {}", path.display()))?
            }
            None => PipelineConfig::default(),
        };
        if let Some(out) = &self.out {
            config.out_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            config.fringe.rng_seed = seed;
        }
        if let Some(period) = self.period_px {
            config.fringe.period_px = period;
        }
        if let Some(noise) = self.noise_sigma {
            config.fringe.noise_sigma = noise;
        }
        if let Some(method) = &self.method {
            config.method = method.parse::<Method>()?;
        }
        if let Some(ratio) = self.ratio {
            let ok = ratio.is_finite() && ratio > 1.0;
            if !ok {
                bail!("--ratio must exceed 1, got {ratio}");
            }
            config.low_frequency = Some(config.fringe.frequency(config.scene.width) / ratio);
        }
        if let Some(raw) = &self.seed_pixel {
            config.seed_pixel = Some(parse_pixel(raw)?);
        }
        if let Some(t) = self.mod_threshold {
            config.modulation_threshold = t;
        }
        Ok(config)
    }
}

fn parse_pixel(raw: &str) -> Result<(usize, usize)> {
    let (x, y) = raw
        .split_once(',')
        .with_context(|| format!("--seed-pixel expects X,Y, got {raw:?}"))?;
    Ok((
        x.trim().parse().context("seed pixel X")?,
        y.trim().parse().context("seed pixel Y")?,
    ))
}

fn parse_list<T: std::str::FromStr>(raw: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .with_context(|| format!("parsing {what} entry {s:?}"))
        })
        .collect()
}

#[derive(Subcommand)]
enum Command {
    /// Render synthetic fringe stacks and ground truth for a scene.
    Simulate {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Demodulate four phase-shifted PGM images into wrapped phase (FPHM).
    Demod {
        /// The four images in shift order I0 I1 I2 I3.
        #[arg(num_args = 4, value_name = "PGM")]
        images: Vec<PathBuf>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Spatially unwrap a wrapped phase map (reference plane).
    UnwrapSpatial {
        /// Wrapped phase FPHM.
        phase: PathBuf,
        /// Modulation FPHM used as the quality map.
        modulation: PathBuf,
        /// Algorithm: quality-guided (default) or itoh.
        #[arg(long, default_value = "quality-guided")]
        algorithm: String,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Unwrap a wrapped phase map against a reference-plane minimum phase map.
    UnwrapGeometric {
        /// Wrapped object phase FPHM.
        wrapped: PathBuf,
        /// Continuous reference-plane phase FPHM.
        phi_min: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Unwrap a high-frequency wrapped phase with a continuous low-frequency phase.
    UnwrapDual {
        /// Low-frequency phase FPHM (continuous, or wrapped with --fold-unit).
        low: PathBuf,
        /// High-frequency wrapped phase FPHM.
        high: PathBuf,
        /// Low fringe frequency in fringes per image.
        #[arg(long, value_name = "F")]
        low_freq: f64,
        /// High fringe frequency in fringes per image.
        #[arg(long, value_name = "F")]
        high_freq: f64,
        /// Treat the low input as a wrapped unit-frequency phase and fold it
        /// into one continuous turn first.
        #[arg(long)]
        fold_unit: bool,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Remove residual wraps from an unwrapped phase map.
    Correct {
        /// Unwrapped phase FPHM.
        input: PathBuf,
        /// Optional modulation FPHM guiding the anchor column.
        #[arg(long, value_name = "PATH")]
        quality: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Score an estimate against a ground-truth phase map.
    Evaluate {
        /// Estimated phase FPHM.
        estimate: PathBuf,
        /// Ground-truth phase FPHM.
        truth: PathBuf,
        /// Keep any global 2*pi*n piston instead of removing it.
        #[arg(long)]
        keep_piston: bool,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Run the full pipeline: simulate (or ingest), demodulate, unwrap, evaluate.
    Pipeline {
        /// Four object-stack PGMs; omit to simulate the configured scene.
        #[arg(long, num_args = 4, value_name = "PGM")]
        object_pgm: Option<Vec<PathBuf>>,
        /// Four reference-stack PGMs; required with --object-pgm.
        #[arg(long, num_args = 4, value_name = "PGM")]
        reference_pgm: Option<Vec<PathBuf>>,
        /// Four low-frequency object PGMs for the dual-frequency method.
        #[arg(long, num_args = 4, value_name = "PGM")]
        low_pgm: Option<Vec<PathBuf>>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Compare dual-frequency and geometric unwrapping over a parameter grid.
    Sweep {
        /// Comma-separated frequency ratios.
        #[arg(long, value_name = "LIST", default_value = "4,8,16,32")]
        ratios: String,
        /// Comma-separated noise standard deviations.
        #[arg(long, value_name = "LIST", default_value = "2.0")]
        noise_sigmas: String,
        /// Comma-separated RNG seeds.
        #[arg(long, value_name = "LIST", default_value = "1,2,3,4,5,6,7,8,9,10")]
        seeds: String,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

fn load_stack(paths: &[PathBuf]) -> Result<FringeStack> {
    let mut images = Vec::with_capacity(4);
    for p in paths {
        let (grid, _) = pgm::read_image(p).with_context(|| format!("reading {}", p.display()))?;
        images.push(grid);
    }
    let images: [_; 4] = images
        .try_into()
        .map_err(|_| anyhow::anyhow!("expected exactly four images"))?;
    Ok(FringeStack::new(images)?)
}

/// Rebuild a wrapped phase map from phase and modulation FPHM files.
fn wrapped_from_files(phase: &PathBuf, modulation: &PathBuf) -> Result<WrappedPhaseMap> {
    let (phase_grid, mask) = fphm::read_phase_map(phase)?;
    let (mod_grid, _) = fphm::read_phase_map(modulation)?;
    Ok(WrappedPhaseMap {
        modulation: mod_grid.retag(Unit::Intensity),
        phase: phase_grid,
        mask,
    })
}

fn write_unwrapped(
    map: &UnwrappedPhaseMap,
    config: &PipelineConfig,
    name: &str,
) -> Result<PathBuf> {
    fs::create_dir_all(&config.out_dir)?;
    let path = config.out_dir.join(name);
    fphm::write_phase_map(&map.phase, &map.mask, &path)?;
    Ok(path)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate { cfg } => {
            let config = cfg.resolve()?;
            let sim = simulate(&config)?;
            let files = write_simulation(&sim, &config)?;
            println!(
                "wrote {} files to {}",
                files.len(),
                config.out_dir.display()
            );
        }
        Command::Demod { images, cfg } => {
            let config = cfg.resolve()?;
            let stack = load_stack(&images)?;
            let wrapped = four_step_phase(&stack, config.modulation_threshold)?;
            fs::create_dir_all(&config.out_dir)?;
            let phase_path = config.out_dir.join("phase.fphm");
            fphm::write_phase_map(&wrapped.phase, &wrapped.mask, &phase_path)?;
            let all_valid =
                Mask::all_valid(wrapped.modulation.width(), wrapped.modulation.height())?;
            let mod_path = config.out_dir.join("modulation.fphm");
            fphm::write_phase_map(&wrapped.modulation, &all_valid, &mod_path)?;
            println!("{}", phase_path.display());
            println!("{}", mod_path.display());
        }
        Command::UnwrapSpatial {
            phase,
            modulation,
            algorithm,
            cfg,
        } => {
            let config = cfg.resolve()?;
            let wrapped = wrapped_from_files(&phase, &modulation)?;
            let out = match algorithm.as_str() {
                "quality-guided" => quality_guided_unwrap(&wrapped, config.seed_pixel)?,
                "itoh" => itoh_unwrap_grid(&wrapped, config.seed_pixel)?,
                other => bail!("unknown algorithm {other:?}; expected quality-guided or itoh"),
            };
            let path = write_unwrapped(&out, &config, "unwrapped_spatial.fphm")?;
            println!("{} ({})", path.display(), out.provenance);
        }
        Command::UnwrapGeometric {
            wrapped,
            phi_min,
            cfg,
        } => {
            let config = cfg.resolve()?;
            let (phase_grid, mask) = fphm::read_phase_map(&wrapped)?;
            let wrapped_map = WrappedPhaseMap {
                modulation: phase_grid.clone().retag(Unit::Intensity),
                phase: phase_grid,
                mask,
            };
            let (min_phase, min_mask) = fphm::read_phase_map(&phi_min)?;
            let phi_min = MinPhaseMap {
                phase: min_phase,
                mask: min_mask,
            };
            let out = geometric_unwrap(&wrapped_map, &phi_min)?;
            let path = write_unwrapped(&out, &config, "unwrapped_geometric.fphm")?;
            println!("{}", path.display());
        }
        Command::UnwrapDual {
            low,
            high,
            low_freq,
            high_freq,
            fold_unit,
            cfg,
        } => {
            let config = cfg.resolve()?;
            let (low_phase, low_mask) = fphm::read_phase_map(&low)?;
            let (high_phase, high_mask) = fphm::read_phase_map(&high)?;
            let low_map = if fold_unit {
                let as_wrapped = WrappedPhaseMap {
                    modulation: low_phase.clone().retag(Unit::Intensity),
                    phase: low_phase,
                    mask: low_mask,
                };
                unit_frequency_phase(&as_wrapped)
            } else {
                UnwrappedPhaseMap {
                    phase: low_phase,
                    mask: low_mask,
                    provenance: Provenance::DualFrequency,
                }
            };
            let high_map = WrappedPhaseMap {
                modulation: high_phase.clone().retag(Unit::Intensity),
                phase: high_phase,
                mask: high_mask,
            };
            let freqs = FrequencyPair::new(low_freq, high_freq)?;
            let out = dual_frequency_unwrap(&low_map, &high_map, &freqs)?;
            let path = write_unwrapped(&out, &config, "unwrapped_dual.fphm")?;
            println!("{}", path.display());
        }
        Command::Correct {
            input,
            quality,
            cfg,
        } => {
            let config = cfg.resolve()?;
            let (phase_grid, mask) = fphm::read_phase_map(&input)?;
            let map = UnwrappedPhaseMap {
                phase: phase_grid,
                mask,
                provenance: Provenance::Geometric,
            };
            let quality_grid = match &quality {
                Some(p) => Some(fphm::read_phase_map(p)?.0.retag(Unit::Intensity)),
                None => None,
            };
            let out = residual_correct(&map, quality_grid.as_ref())?;
            let path = write_unwrapped(&out, &config, "corrected.fphm")?;
            println!("{}", path.display());
        }
        Command::Evaluate {
            estimate,
            truth,
            keep_piston,
            cfg,
        } => {
            let config = cfg.resolve()?;
            let (est_phase, est_mask) = fphm::read_phase_map(&estimate)?;
            let (truth_phase, truth_mask) = fphm::read_phase_map(&truth)?;
            let est = UnwrappedPhaseMap {
                phase: est_phase,
                mask: est_mask,
                provenance: Provenance::Geometric,
            };
            let report = evaluate(&est, &truth_phase, &truth_mask, !keep_piston)?;
            fs::create_dir_all(&config.out_dir)?;
            let report_json = serde_json::to_string_pretty(&report)?;
            fs::write(config.out_dir.join("report.json"), &report_json)?;
            let diff = difference_map(&est, &truth_phase, report.piston_removed)?;
            fphm::write_phase_map(&diff, &est.mask, config.out_dir.join("abs_error.fphm"))?;
            println!("{report_json}");
        }
        Command::Pipeline {
            object_pgm,
            reference_pgm,
            low_pgm,
            cfg,
        } => {
            let config = cfg.resolve()?;
            let outcome = match (&object_pgm, &reference_pgm) {
                (Some(obj), Some(reference)) => {
                    let object_stack = load_stack(obj)?;
                    let reference_stack = load_stack(reference)?;
                    let low_stack = match &low_pgm {
                        Some(paths) => Some(load_stack(paths)?),
                        None => None,
                    };
                    run_pipeline_on(
                        &config,
                        &object_stack,
                        &reference_stack,
                        low_stack.as_ref(),
                        None,
                    )?
                }
                (None, None) => run_pipeline(&config)?,
                _ => bail!("--object-pgm and --reference-pgm must be given together"),
            };
            match &outcome.report {
                Some(report) => println!("{}", serde_json::to_string_pretty(report)?),
                None => println!(
                    "pipeline complete ({} files, correction {})",
                    outcome.files.len(),
                    if outcome.correction_applied {
                        "applied"
                    } else {
                        "not needed"
                    }
                ),
            }
        }
        Command::Sweep {
            ratios,
            noise_sigmas,
            seeds,
            cfg,
        } => {
            let config = cfg.resolve()?;
            let ratios: Vec<f64> = parse_list(&ratios, "ratios")?;
            let noise: Vec<f64> = parse_list(&noise_sigmas, "noise sigmas")?;
            let seeds: Vec<u64> = parse_list(&seeds, "seeds")?;
            let cells = run_sweep(&config, &ratios, &noise, &seeds)?;
            let table = sweep_table(&cells);
            fs::create_dir_all(&config.out_dir)?;
            fs::write(config.out_dir.join("sweep.tsv"), &table)?;
            print!("{table}");
        }
    }
    Ok(())
}
