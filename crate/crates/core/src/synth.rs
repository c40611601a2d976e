//! Digital twin of the DFP optical path.
//!
//! Builds synthetic height fields, converts height to phase with a classical
//! crossed-optical-axes model, and renders noisy four-step fringe stacks for
//! the reference plane and the object. Everything is deterministic given the
//! RNG seed, so rendered stacks double as reproducible test fixtures.

use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::demod::FringeStack;
use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::raster::{Grid, Mask, Unit};

/// Number of phase shifts in a stack; image `n` carries offset `n*pi/2`.
pub const SHIFT_COUNT: usize = 4;

/// Camera / projector / reference-plane arrangement.
///
/// `standoff_mm` is the distance from the camera-projector plane to the
/// reference plane, `baseline_mm` the camera-projector separation, and
/// `fringes_per_mm` the projected fringe frequency measured on the
/// reference plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DfpGeometry {
    pub standoff_mm: f64,
    pub baseline_mm: f64,
    pub fringes_per_mm: f64,
}

impl Default for DfpGeometry {
    fn default() -> Self {
        // Desk-scale rig: ~70 cm standoff, ~30 cm baseline.
        Self {
            standoff_mm: 700.0,
            baseline_mm: 300.0,
            fringes_per_mm: 0.05,
        }
    }
}

impl DfpGeometry {
    pub fn validate(&self) -> Result<()> {
        require_positive(self.standoff_mm, "standoff_mm")?;
        require_positive(self.baseline_mm, "baseline_mm")?;
        require_positive(self.fringes_per_mm, "fringes_per_mm")
    }
}

/// One Gaussian bump on the height field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPeak {
    pub center_x_px: f64,
    pub center_y_px: f64,
    pub sigma_px: f64,
    pub height_mm: f64,
}

/// Circular cut-out in a plate scene; interior pixels are invalid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hole {
    pub center_x_px: f64,
    pub center_y_px: f64,
    pub radius_px: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SceneKind {
    FlatPlane,
    GaussianPeaks { peaks: Vec<GaussianPeak> },
    PlateWithHoles { thickness_mm: f64, holes: Vec<Hole> },
    Step { riser_mm: f64 },
}

/// Synthetic scene: a non-negative height field over the reference plane.
///
/// Heights are measured toward the camera, so the reference plane is the
/// pixelwise phase minimum of every admissible scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    #[serde(flatten)]
    pub kind: SceneKind,
    /// Uniform stand-up of the whole object above the reference plane.
    pub offset_mm: f64,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidDimensions {
                width: self.width,
                height: self.height,
            });
        }
        require_non_negative(self.offset_mm, "offset_mm")?;
        match &self.kind {
            SceneKind::FlatPlane => {}
            SceneKind::GaussianPeaks { peaks } => {
                for p in peaks {
                    require_positive(p.sigma_px, "peak sigma_px")?;
                    require_non_negative(p.height_mm, "peak height_mm")?;
                }
            }
            SceneKind::PlateWithHoles {
                thickness_mm,
                holes,
            } => {
                require_non_negative(*thickness_mm, "plate thickness_mm")?;
                for h in holes {
                    require_non_negative(h.radius_px, "hole radius_px")?;
                }
            }
            SceneKind::Step { riser_mm } => {
                require_non_negative(*riser_mm, "step riser_mm")?;
            }
        }
        Ok(())
    }
}

/// Optional intensity quantization applied after noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantize {
    None,
    EightBit,
}

/// Fringe pattern parameters for one rendered stack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeParams {
    /// Pixels per fringe; frequency in fringes per image is `width / period_px`.
    pub period_px: f64,
    /// Mean intensity A.
    pub mean: f64,
    /// Modulation amplitude B.
    pub amplitude: f64,
    /// Standard deviation of additive Gaussian intensity noise.
    pub noise_sigma: f64,
    pub quantize: Quantize,
    pub rng_seed: u64,
}

impl Default for FringeParams {
    fn default() -> Self {
        Self {
            period_px: 18.0,
            mean: 128.0,
            amplitude: 100.0,
            noise_sigma: 0.0,
            quantize: Quantize::None,
            rng_seed: 7,
        }
    }
}

impl FringeParams {
    pub fn validate(&self) -> Result<()> {
        require_positive(self.period_px, "period_px")?;
        require_positive(self.amplitude, "amplitude")?;
        require_non_negative(self.mean, "mean")?;
        require_non_negative(self.noise_sigma, "noise_sigma")?;
        if self.quantize == Quantize::EightBit {
            let fits = self.mean - self.amplitude >= 0.0 && self.mean + self.amplitude <= 255.0;
            if !fits {
                return Err(Error::InvalidParam(format!(
                    "A±B must stay within 0..=255 for 8-bit output: A={} B={}",
                    self.mean, self.amplitude
                )));
            }
        }
        Ok(())
    }

    /// Fringe frequency in fringes per image for the given image width.
    pub fn frequency(&self, width: usize) -> f64 {
        width as f64 / self.period_px
    }
}

/// Which surface a stack is rendered for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Carrier {
    /// Reference plane: carrier only, the object phase input is ignored.
    Reference,
    /// Object: carrier plus the per-pixel phase shift.
    Object,
}

/// Deterministic height field and validity mask for a scene.
pub fn height_field(scene: &SceneSpec) -> Result<(Grid, Mask)> {
    scene.validate()?;
    let (w, h) = (scene.width, scene.height);
    let mut mask = Mask::all_valid(w, h)?;

    let grid = match &scene.kind {
        SceneKind::FlatPlane => Grid::filled(w, h, Unit::Millimeters, scene.offset_mm)?,
        SceneKind::GaussianPeaks { peaks } => Grid::from_fn(w, h, Unit::Millimeters, |x, y| {
            let mut v = scene.offset_mm;
            for p in peaks {
                let dx = x as f64 - p.center_x_px;
                let dy = y as f64 - p.center_y_px;
                v += p.height_mm * (-(dx * dx + dy * dy) / (2.0 * p.sigma_px * p.sigma_px)).exp();
            }
            v
        })?,
        SceneKind::PlateWithHoles {
            thickness_mm,
            holes,
        } => {
            let level = scene.offset_mm + thickness_mm;
            let grid = Grid::from_fn(w, h, Unit::Millimeters, |x, y| {
                let inside = holes.iter().any(|hole| {
                    let dx = x as f64 - hole.center_x_px;
                    let dy = y as f64 - hole.center_y_px;
                    dx * dx + dy * dy <= hole.radius_px * hole.radius_px
                });
                if inside {
                    f64::NAN
                } else {
                    level
                }
            })?;
            for y in 0..h {
                for x in 0..w {
                    if grid.get(x, y).is_nan() {
                        mask.set(x, y, false);
                    }
                }
            }
            grid
        }
        SceneKind::Step { riser_mm } => Grid::from_fn(w, h, Unit::Millimeters, |x, _| {
            if x < w / 2 {
                scene.offset_mm
            } else {
                scene.offset_mm + riser_mm
            }
        })?,
    };

    Ok((grid, mask))
}

/// Phase shift produced by a height field under the crossed-optical-axes
/// model: `dphi = 2*pi * f_r * d * h / (L - h)`.
///
/// Zero height maps to zero shift and the shift grows monotonically with
/// height, so the reference plane is the pixelwise phase minimum. NaN heights
/// (mask-invalid pixels) propagate to NaN shifts.
pub fn phase_from_height(heights: &Grid, geom: &DfpGeometry) -> Result<Grid> {
    geom.validate()?;
    let scale = TAU * geom.fringes_per_mm * geom.baseline_mm;
    let standoff = geom.standoff_mm;
    for y in 0..heights.height() {
        for x in 0..heights.width() {
            let h = heights.get(x, y);
            if h.is_finite() && h >= standoff {
                return Err(Error::HeightExceedsStandoff {
                    height: h,
                    standoff,
                });
            }
        }
    }
    Ok(heights.map(Unit::Radians, |h| scale * h / (standoff - h)))
}

/// Render a four-step fringe stack.
///
/// `I_n(x, y) = A + B * cos(2*pi*x/period + dphi + n*pi/2)` with `dphi` taken
/// from `delta_phi` for [`Carrier::Object`] and zero for
/// [`Carrier::Reference`]. Pixels where `delta_phi` is NaN render at the mean
/// intensity with no fringe, mimicking background that receives no pattern;
/// demodulation then rejects them by modulation. Gaussian noise is drawn from
/// a stream seeded by `rng_seed`, image by image in row-major order, so equal
/// seeds give bit-identical stacks.
pub fn render_fringes(
    delta_phi: &Grid,
    params: &FringeParams,
    carrier: Carrier,
) -> Result<FringeStack> {
    params.validate()?;
    let (w, h) = (delta_phi.width(), delta_phi.height());
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let noise = if params.noise_sigma > 0.0 {
        Some(
            Normal::new(0.0, params.noise_sigma)
                .map_err(|e| Error::InvalidParam(format!("noise distribution: {e}")))?,
        )
    } else {
        None
    };

    let mut images = Vec::with_capacity(SHIFT_COUNT);
    for n in 0..SHIFT_COUNT {
        let shift = n as f64 * TAU / 4.0;
        let mut grid = Grid::from_fn(w, h, Unit::Intensity, |x, y| {
            let carrier_phase = TAU * x as f64 / params.period_px;
            let dphi = match carrier {
                Carrier::Reference => 0.0,
                Carrier::Object => delta_phi.get(x, y),
            };
            if dphi.is_nan() {
                params.mean
            } else {
                params.mean + params.amplitude * (carrier_phase + dphi + shift).cos()
            }
        })?;
        if let Some(dist) = &noise {
            for v in grid.values_mut() {
                *v += dist.sample(&mut rng);
            }
        }
        if params.quantize == Quantize::EightBit {
            for v in grid.values_mut() {
                *v = v.round().clamp(0.0, 255.0);
            }
        }
        images.push(grid);
    }

    let images: [Grid; SHIFT_COUNT] = images.try_into().expect("exactly four images");
    FringeStack::new(images)
}
