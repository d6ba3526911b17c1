//! Iterative Fourier-transform hologram design with mixed-region amplitude
//! freedom (MRAF).
//!
//! Each iteration takes the current image plane back to the modulator,
//! applies the device constraint, propagates forward, records the trap
//! metrics and then mixes the result with the target: inside the signal
//! region amplitudes are reset to `sqrt(p)*|F0|`, outside they keep
//! `sqrt(1-p)` of their current value. Phases always carry over. With
//! `p = 1` and a signal region covering the whole image this is
//! Gerchberg-Saxton.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{HoloError, Result};
use crate::field::{fft_forward, fft_inverse, power, ComplexField, Pixel, Plane, TrapLayout};
use crate::metrics::{incident_power, run_metrics};
use crate::quantize::{constrain, DeviceModel, DisplayedHologram};

pub const DEFAULT_MIXING: f64 = 0.7;
pub const DEFAULT_ITERATIONS: usize = 20;
pub const DEFAULT_SIGNAL_SIZE: usize = 200;

/// Image-plane boolean mask; `true` marks the signal region.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl RegionMask {
    pub fn from_data(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(HoloError::Shape(format!("{width}x{height} mask cannot hold {} entries", data.len())));
        }
        if !data.iter().any(|&b| b) {
            return Err(HoloError::Config("signal region is empty".into()));
        }
        Ok(RegionMask { width, height, data })
    }

    pub fn full(width: usize, height: usize) -> Result<Self> {
        Self::from_data(width, height, vec![true; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn contains(&self, p: Pixel) -> bool {
        p.x < self.width && p.y < self.height && self.data[p.y * self.width + p.x]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

/// Axis-aligned `region_width x region_height` rectangle whose middle pixel
/// (rounded up and to the left) is `center`.
pub fn make_mask(
    width: usize,
    height: usize,
    region_width: usize,
    region_height: usize,
    center: Pixel,
) -> Result<RegionMask> {
    if region_width == 0 || region_height == 0 {
        return Err(HoloError::Config("signal region must be at least 1x1".into()));
    }
    let (hw, hh) = (region_width / 2, region_height / 2);
    if hw > center.x || hh > center.y || center.x - hw + region_width > width || center.y - hh + region_height > height
    {
        return Err(HoloError::Bounds(format!(
            "{region_width}x{region_height} region around ({}, {}) does not fit in {width}x{height}",
            center.x, center.y
        )));
    }
    let (x0, y0) = (center.x - hw, center.y - hh);
    let mut data = vec![false; width * height];
    for y in y0..y0 + region_height {
        data[y * width + x0..y * width + x0 + region_width].fill(true);
    }
    RegionMask::from_data(width, height, data)
}

/// One MRAF mixing step. `target_amplitudes` holds `|F0|` per pixel.
pub fn mix_step(current: &ComplexField, target_amplitudes: &[f64], mask: &RegionMask, p: f64) -> Result<ComplexField> {
    if target_amplitudes.len() != current.len() || mask.width != current.width() || mask.height != current.height()
    {
        return Err(HoloError::Shape("image, target and mask sizes differ".into()));
    }
    let (signal, noise) = (p.sqrt(), (1.0 - p).sqrt());
    let values = current
        .values()
        .iter()
        .zip(target_amplitudes)
        .zip(&mask.data)
        .map(|((&v, &a0), &inside)| {
            let norm = v.norm_sqr().sqrt();
            if inside {
                with_amplitude(v, norm, signal * a0)
            } else {
                with_amplitude(v, norm, noise * norm)
            }
        })
        .collect();
    ComplexField::from_values(current.width(), current.height(), current.plane(), values)
}

/// `amp * v / |v|`; the origin is taken to have phase 0.
pub(crate) fn with_amplitude(v: Complex64, norm: f64, amp: f64) -> Complex64 {
    if norm > 0.0 {
        v * (amp / norm)
    } else {
        Complex64::new(amp, 0.0)
    }
}

/// Where the signal region sits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalRegion {
    /// The whole image plane.
    Full,
    /// Rectangle centered on the trap grid.
    Centered { width: usize, height: usize },
    Mask(RegionMask),
}

impl Default for SignalRegion {
    fn default() -> Self {
        SignalRegion::Centered { width: DEFAULT_SIGNAL_SIZE, height: DEFAULT_SIGNAL_SIZE }
    }
}

impl SignalRegion {
    pub fn resolve(&self, width: usize, height: usize, layout: &TrapLayout) -> Result<RegionMask> {
        let mask = match self {
            SignalRegion::Full => RegionMask::full(width, height)?,
            SignalRegion::Centered { width: rw, height: rh } => make_mask(width, height, *rw, *rh, layout.centroid())?,
            SignalRegion::Mask(m) => {
                if m.width != width || m.height != height {
                    return Err(HoloError::Shape(format!(
                        "{}x{} mask for a {width}x{height} image",
                        m.width, m.height
                    )));
                }
                m.clone()
            }
        };
        if let Some(p) = layout.pixels().into_iter().find(|&p| !mask.contains(p)) {
            return Err(HoloError::Config(format!("trap at ({}, {}) lies outside the signal region", p.x, p.y)));
        }
        Ok(mask)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MrafConfig {
    /// Mixing parameter `p` in `[0, 1]`.
    pub mixing: f64,
    pub iterations: usize,
    pub signal: SignalRegion,
    pub device: DeviceModel,
    #[serde(default)]
    pub target_power: TargetPower,
}

impl Default for MrafConfig {
    fn default() -> Self {
        MrafConfig {
            mixing: DEFAULT_MIXING,
            iterations: DEFAULT_ITERATIONS,
            signal: SignalRegion::default(),
            device: DeviceModel::default(),
            target_power: TargetPower::default(),
        }
    }
}

impl MrafConfig {
    pub fn for_device(device: DeviceModel) -> Self {
        MrafConfig { device, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.mixing) {
            return Err(HoloError::Config(format!("mixing parameter must lie in [0, 1], got {}", self.mixing)));
        }
        if self.iterations == 0 {
            return Err(HoloError::Config("at least one iteration is required".into()));
        }
        self.target_power.validate()?;
        self.device.validate()
    }
}

/// Trap metrics of the image produced after each iteration's device constraint.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub cv: Vec<f64>,
    pub efficiency: Vec<f64>,
}

impl ConvergenceTrace {
    pub fn len(&self) -> usize {
        self.cv.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cv.is_empty()
    }
}

/// Per-iteration observer for [`mraf_run_with`].
pub trait IterationObserver {
    /// Called with the constrained hologram and the image it produces, before mixing.
    fn observe(&mut self, iteration: usize, displayed: &DisplayedHologram, image: &ComplexField);
}

impl<F: FnMut(usize, &DisplayedHologram, &ComplexField)> IterationObserver for F {
    fn observe(&mut self, iteration: usize, displayed: &DisplayedHologram, image: &ComplexField) {
        self(iteration, displayed, image)
    }
}

/// How much power the amplitude target `|F0|` is given inside the signal region.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetPower {
    /// Whatever the first constrained hologram actually puts into the signal region.
    #[default]
    FirstPass,
    /// All of the incident power.
    Incident,
    /// A fixed fraction of the incident power.
    Fraction(f64),
}

impl TargetPower {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TargetPower::Fraction(f) if !(f > 0.0 && f.is_finite()) => {
                Err(HoloError::Config(format!("target power fraction must be positive, got {f}")))
            }
            _ => Ok(()),
        }
    }
}

fn region_power(field: &ComplexField, mask: &RegionMask) -> f64 {
    field.values().iter().zip(&mask.data).filter(|(_, &m)| m).map(|(v, _)| v.norm_sqr()).sum()
}

/// `|F0|` scaled so that it carries `goal` power.
fn target_amplitudes(target: &ComplexField, goal: f64) -> Result<Vec<f64>> {
    let p = power(target);
    if !(p > 0.0) {
        return Err(HoloError::DegenerateInput("target image carries no power".into()));
    }
    if !(goal > 0.0) {
        return Err(HoloError::DegenerateInput("the constrained hologram puts no power in the signal region".into()));
    }
    let k = (goal / p).sqrt();
    Ok(target.values().iter().map(|v| v.norm() * k).collect())
}

pub fn mraf_run(
    target: &ComplexField,
    layout: &TrapLayout,
    cfg: &MrafConfig,
) -> Result<(DisplayedHologram, ConvergenceTrace)> {
    mraf_run_with(target, layout, cfg, &mut |_: usize, _: &DisplayedHologram, _: &ComplexField| {})
}

pub fn mraf_run_with(
    target: &ComplexField,
    layout: &TrapLayout,
    cfg: &MrafConfig,
    observer: &mut dyn IterationObserver,
) -> Result<(DisplayedHologram, ConvergenceTrace)> {
    cfg.validate()?;
    if target.plane() != Plane::Image {
        return Err(HoloError::Shape("MRAF starts from an image-plane target".into()));
    }
    let (w, h) = (target.width(), target.height());
    let mask = cfg.signal.resolve(w, h, layout)?;
    let incident = incident_power(w, h);
    let mut amplitudes = match cfg.target_power {
        TargetPower::FirstPass => None,
        TargetPower::Incident => Some(target_amplitudes(target, incident)?),
        TargetPower::Fraction(f) => Some(target_amplitudes(target, f * incident)?),
    };

    let mut trace = ConvergenceTrace::default();
    let mut image = target.clone();
    let mut displayed = None;
    for r in 0..cfg.iterations {
        let shown = constrain(&fft_inverse(&image), cfg.device)?;
        let produced = fft_forward(&shown.realize());
        let m = run_metrics(&produced, layout, incident)?;
        trace.cv.push(m.cv);
        trace.efficiency.push(m.efficiency);
        observer.observe(r + 1, &shown, &produced);
        if r + 1 < cfg.iterations {
            if amplitudes.is_none() {
                amplitudes = Some(target_amplitudes(target, region_power(&produced, &mask))?);
            }
            image = mix_step(&produced, amplitudes.as_deref().unwrap(), &mask, cfg.mixing)?;
        }
        displayed = Some(shown);
    }
    Ok((displayed.expect("at least one iteration"), trace))
}
