//! Turning an ideal complex hologram into something a modulator can show.
//!
//! The DMD displays a binary amplitude pattern (`0` blocks a pixel, `1`
//! passes it). The PSLM displays unit amplitude with one of `m` evenly spaced
//! phase levels `2*pi*k/m`. Both can be driven by plain rounding or by error
//! diffusion along a scan path.

use std::f64::consts::TAU;
use std::fmt;
use std::ops::{AddAssign, Mul, Sub};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{HoloError, Result};
use crate::field::{ComplexField, Plane};

pub const DEFAULT_PHASE_LEVELS: u32 = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DeviceModel {
    /// Binary amplitude micromirror array.
    Dmd,
    /// Phase-only modulator with `levels` phase steps over `2*pi`.
    Pslm { levels: u32 },
}

impl DeviceModel {
    pub fn pslm(levels: u32) -> Result<Self> {
        if levels < 2 {
            return Err(HoloError::Config(format!("a phase modulator needs at least 2 levels, got {levels}")));
        }
        Ok(DeviceModel::Pslm { levels })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DeviceModel::Dmd => Ok(()),
            DeviceModel::Pslm { levels } => DeviceModel::pslm(levels).map(|_| ()),
        }
    }

    /// Number of distinct pixel states.
    pub fn states(&self) -> u32 {
        match *self {
            DeviceModel::Dmd => 2,
            DeviceModel::Pslm { levels } => levels,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DeviceModel::Dmd => "dmd",
            DeviceModel::Pslm { .. } => "pslm",
        }
    }
}

impl Default for DeviceModel {
    fn default() -> Self {
        DeviceModel::Pslm { levels: DEFAULT_PHASE_LEVELS }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanOrder {
    /// Rows top to bottom, each row left to right.
    #[default]
    Raster,
    /// Rows top to bottom, alternating direction; kernels are mirrored on reversed rows.
    Serpentine,
}

impl FromStr for ScanOrder {
    type Err = HoloError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raster" => Ok(ScanOrder::Raster),
            "serpentine" => Ok(ScanOrder::Serpentine),
            other => Err(HoloError::Config(format!("unknown scan order '{other}'"))),
        }
    }
}

/// One destination of a pixel's quantization error: `weight / denominator`
/// of it goes to the pixel `dx` columns ahead along the scan direction and
/// `dy` rows down.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelTap {
    pub dx: i32,
    pub dy: i32,
    pub weight: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DitherKernel {
    taps: Vec<KernelTap>,
    denominator: u32,
}

impl DitherKernel {
    /// Builds a kernel whose integer weights must sum to `denominator` and whose
    /// taps only reach pixels the scan has not visited yet.
    pub fn new(taps: Vec<KernelTap>, denominator: u32) -> Result<Self> {
        if denominator == 0 {
            return Err(HoloError::Config("kernel denominator must be positive".into()));
        }
        let total: u64 = taps.iter().map(|t| u64::from(t.weight)).sum();
        if total != u64::from(denominator) {
            return Err(HoloError::Config(format!("kernel weights sum to {total}/{denominator}, not 1")));
        }
        if let Some(t) = taps.iter().find(|t| t.dy < 0 || (t.dy == 0 && t.dx <= 0)) {
            return Err(HoloError::Config(format!(
                "kernel tap ({}, {}) points at an already processed pixel",
                t.dx, t.dy
            )));
        }
        Ok(DitherKernel { taps, denominator })
    }

    /// Next pixel on the scan line 5/16; on the following line, behind 3/16,
    /// below 7/16, ahead 1/16.
    pub fn five_sixteenths() -> Self {
        Self::from_weights([5, 3, 7, 1])
    }

    /// The classical Floyd-Steinberg set: ahead 7/16; behind-below 3/16,
    /// below 5/16, ahead-below 1/16.
    pub fn floyd_steinberg() -> Self {
        Self::from_weights([7, 3, 5, 1])
    }

    fn from_weights([ahead, behind_below, below, ahead_below]: [u32; 4]) -> Self {
        let tap = |dx, dy, weight| KernelTap { dx, dy, weight };
        DitherKernel::new(
            vec![tap(1, 0, ahead), tap(-1, 1, behind_below), tap(0, 1, below), tap(1, 1, ahead_below)],
            16,
        )
        .expect("built-in kernel is valid")
    }

    pub fn taps(&self) -> &[KernelTap] {
        &self.taps
    }

    pub fn denominator(&self) -> u32 {
        self.denominator
    }

    pub fn weight(&self, tap: &KernelTap) -> f64 {
        f64::from(tap.weight) / f64::from(self.denominator)
    }
}

impl Default for DitherKernel {
    fn default() -> Self {
        Self::five_sixteenths()
    }
}

/// Named kernels selectable from configuration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelChoice {
    #[default]
    #[serde(rename = "five-sixteenths")]
    FiveSixteenths,
    #[serde(rename = "floyd-steinberg")]
    FloydSteinberg,
}

impl KernelChoice {
    pub fn kernel(self) -> DitherKernel {
        match self {
            KernelChoice::FiveSixteenths => DitherKernel::five_sixteenths(),
            KernelChoice::FloydSteinberg => DitherKernel::floyd_steinberg(),
        }
    }
}

impl FromStr for KernelChoice {
    type Err = HoloError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "five-sixteenths" => Ok(KernelChoice::FiveSixteenths),
            "floyd-steinberg" => Ok(KernelChoice::FloydSteinberg),
            other => Err(HoloError::Config(format!("unknown dither kernel '{other}'"))),
        }
    }
}

/// What a modulator shows: a binary state (DMD) or a phase level index (PSLM)
/// per pixel, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisplayedHologram {
    device: DeviceModel,
    width: usize,
    height: usize,
    values: Vec<u32>,
}

impl DisplayedHologram {
    pub fn new(device: DeviceModel, width: usize, height: usize, values: Vec<u32>) -> Result<Self> {
        device.validate()?;
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(HoloError::Shape(format!(
                "{width}x{height} hologram cannot hold {} values",
                values.len()
            )));
        }
        let states = device.states();
        if let Some(v) = values.iter().find(|&&v| v >= states) {
            return Err(HoloError::Config(format!("state {v} is not displayable on a {}-state device", states)));
        }
        Ok(DisplayedHologram { device, width, height, values })
    }

    pub fn device(&self) -> DeviceModel {
        self.device
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    /// Fraction of DMD mirrors in state `1` (or of PSLM pixels off level 0).
    pub fn fill_factor(&self) -> f64 {
        self.values.iter().filter(|&&v| v != 0).count() as f64 / self.values.len() as f64
    }

    pub fn realize(&self) -> ComplexField {
        realize(self)
    }
}

/// Unit phasor for phase level `k` of `m`.
pub fn level_phasor(k: u32, m: u32) -> Complex64 {
    Complex64::from_polar(1.0, TAU * f64::from(k) / f64::from(m))
}

/// Index of the phase level nearest `phase`; halfway cases go to the lower level.
pub fn nearest_level(phase: f64, m: u32) -> u32 {
    let step = TAU / f64::from(m);
    let t = phase.rem_euclid(TAU) / step;
    let k = (t - 0.5).ceil() as i64;
    k.rem_euclid(i64::from(m)) as u32
}

/// The hologram-plane field the device actually produces under uniform unit
/// illumination.
pub fn realize(displayed: &DisplayedHologram) -> ComplexField {
    let values = match displayed.device {
        DeviceModel::Dmd => displayed.values.iter().map(|&s| Complex64::new(f64::from(s), 0.0)).collect(),
        DeviceModel::Pslm { levels } => {
            let table: Vec<Complex64> = (0..levels).map(|k| level_phasor(k, levels)).collect();
            displayed.values.iter().map(|&k| table[k as usize]).collect()
        }
    };
    ComplexField::from_values(displayed.width, displayed.height, Plane::Hologram, values)
        .expect("displayed hologram dimensions are valid")
}

fn dmd_state(v: Complex64) -> u32 {
    // phase in (-pi/2, pi/2]
    u32::from(v.re > 0.0 || (v.re == 0.0 && v.im > 0.0))
}

/// Mirrors on (`1`) exactly where the hologram phase lies in `(-pi/2, pi/2]`.
pub fn round_dmd(hologram: &ComplexField) -> DisplayedHologram {
    let values = hologram.values().iter().map(|&v| dmd_state(v)).collect();
    DisplayedHologram { device: DeviceModel::Dmd, width: hologram.width(), height: hologram.height(), values }
}

/// Nearest phase level per pixel; amplitude is discarded.
pub fn round_pslm(hologram: &ComplexField, device: DeviceModel) -> Result<DisplayedHologram> {
    let DeviceModel::Pslm { levels } = device else {
        return Err(HoloError::Config("phase rounding needs a phase modulator".into()));
    };
    device.validate()?;
    let values = hologram.values().iter().map(|v| nearest_level(v.arg(), levels)).collect();
    Ok(DisplayedHologram { device, width: hologram.width(), height: hologram.height(), values })
}

/// Outcome of an error-diffusion pass.
#[derive(Clone, Debug, PartialEq)]
pub struct Diffusion<V> {
    /// Displayed state per pixel.
    pub states: Vec<u32>,
    /// Quantization error per pixel: accumulated input minus displayed value.
    pub errors: Vec<V>,
    /// Error sent to positions outside the array.
    pub dropped: V,
}

/// Generic error diffusion over a row-major buffer. `quantize` maps the
/// accumulated value at a pixel to a state and the value that state displays.
pub fn diffuse<V>(
    mut acc: Vec<V>,
    width: usize,
    height: usize,
    kernel: &DitherKernel,
    scan: ScanOrder,
    mut quantize: impl FnMut(V) -> (u32, V),
) -> Result<Diffusion<V>>
where
    V: Copy + Default + AddAssign + Sub<Output = V> + Mul<f64, Output = V>,
{
    if width == 0 || height == 0 || acc.len() != width * height {
        return Err(HoloError::Shape(format!("{width}x{height} array cannot hold {} values", acc.len())));
    }
    let taps: Vec<(i64, i64, f64)> =
        kernel.taps().iter().map(|t| (i64::from(t.dx), i64::from(t.dy), kernel.weight(t))).collect();
    let mut states = vec![0u32; acc.len()];
    let mut errors = vec![V::default(); acc.len()];
    let mut dropped = V::default();
    let (w, h) = (width as i64, height as i64);

    for y in 0..h {
        let reversed = scan == ScanOrder::Serpentine && y % 2 == 1;
        let dir = if reversed { -1 } else { 1 };
        for i in 0..w {
            let x = if reversed { w - 1 - i } else { i };
            let idx = (y * w + x) as usize;
            let value = acc[idx];
            let (state, shown) = quantize(value);
            let err = value - shown;
            states[idx] = state;
            errors[idx] = err;
            for &(dx, dy, weight) in &taps {
                let (nx, ny) = (x + dx * dir, y + dy);
                if nx >= 0 && nx < w && ny < h {
                    acc[(ny * w + nx) as usize] += err * weight;
                } else {
                    dropped += err * weight;
                }
            }
        }
    }
    Ok(Diffusion { states, errors, dropped })
}

/// Binary error diffusion of greyscale values; accumulated values `>= 0.5` become `1`.
pub fn diffuse_binary(
    values: &[f64],
    width: usize,
    height: usize,
    kernel: &DitherKernel,
    scan: ScanOrder,
) -> Result<Diffusion<f64>> {
    diffuse(values.to_vec(), width, height, kernel, scan, |v| if v >= 0.5 { (1, 1.0) } else { (0, 0.0) })
}

/// Vector error diffusion onto unit phasors at `levels` phase steps.
pub fn diffuse_phase(
    values: &[Complex64],
    width: usize,
    height: usize,
    levels: u32,
    kernel: &DitherKernel,
    scan: ScanOrder,
) -> Result<Diffusion<Complex64>> {
    DeviceModel::pslm(levels)?;
    diffuse(values.to_vec(), width, height, kernel, scan, |v| {
        let k = nearest_level(v.arg(), levels);
        (k, level_phasor(k, levels))
    })
}

/// Error-diffusion dithering of the real part of `hologram`, affinely
/// rescaled so its minimum maps to 0 and its maximum to 1.
pub fn dither_dmd(hologram: &ComplexField, kernel: &DitherKernel, scan: ScanOrder) -> Result<DisplayedHologram> {
    let (lo, hi) = hologram
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v.re), hi.max(v.re)));
    let span = hi - lo;
    if !(span > 0.0 && span.is_finite()) {
        return Err(HoloError::DegenerateInput("real part of the hologram is constant".into()));
    }
    let grey: Vec<f64> = hologram.values().iter().map(|v| (v.re - lo) / span).collect();
    let d = diffuse_binary(&grey, hologram.width(), hologram.height(), kernel, scan)?;
    DisplayedHologram::new(DeviceModel::Dmd, hologram.width(), hologram.height(), d.states)
}

/// Vector error-diffusion dithering of the complex hologram, rescaled so the
/// largest magnitude is 1.
pub fn dither_pslm(
    hologram: &ComplexField,
    device: DeviceModel,
    kernel: &DitherKernel,
    scan: ScanOrder,
) -> Result<DisplayedHologram> {
    let DeviceModel::Pslm { levels } = device else {
        return Err(HoloError::Config("phase dithering needs a phase modulator".into()));
    };
    let peak = hologram.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(HoloError::DegenerateInput("hologram is zero everywhere".into()));
    }
    let scaled: Vec<Complex64> = hologram.values().iter().map(|v| v / peak).collect();
    let d = diffuse_phase(&scaled, hologram.width(), hologram.height(), levels, kernel, scan)?;
    DisplayedHologram::new(device, hologram.width(), hologram.height(), d.states)
}

/// Hologram-plane constraint used by the iterative loop: binary rounding on
/// the DMD, amplitude discard plus phase rounding on the PSLM.
pub fn constrain(hologram: &ComplexField, device: DeviceModel) -> Result<DisplayedHologram> {
    match device {
        DeviceModel::Dmd => Ok(round_dmd(hologram)),
        DeviceModel::Pslm { .. } => round_pslm(hologram, device),
    }
}

impl fmt::Display for DeviceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeviceModel::Dmd => write!(f, "dmd"),
            DeviceModel::Pslm { levels } => write!(f, "pslm({levels})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn field(values: Vec<Complex64>, w: usize, h: usize) -> ComplexField {
        ComplexField::from_values(w, h, Plane::Hologram, values).unwrap()
    }

    fn pslm() -> DeviceModel {
        DeviceModel::pslm(256).unwrap()
    }

    #[test]
    fn dmd_rounding_of_constants() {
        let ones = field(vec![Complex64::new(1.0, 0.0); 12], 4, 3);
        assert!(round_dmd(&ones).values().iter().all(|&v| v == 1));
        let neg = field(vec![Complex64::new(-1.0, 0.0); 12], 4, 3);
        assert!(round_dmd(&neg).values().iter().all(|&v| v == 0));
    }

    #[test]
    fn dmd_rounding_boundaries() {
        let vals = vec![
            Complex64::new(0.0, 0.0),
            Complex64::from_polar(1.0, PI / 2.0),
            Complex64::new(0.0, -1.0),
            Complex64::from_polar(1.0, 0.49 * PI),
            Complex64::from_polar(1.0, -0.49 * PI),
            Complex64::from_polar(1.0, 0.51 * PI),
        ];
        let d = round_dmd(&field(vals, 6, 1));
        assert_eq!(d.values(), &[0, 1, 0, 1, 1, 0]);
    }

    #[test]
    fn pslm_rounding_two_levels() {
        let vals = [0.1, PI - 0.1, PI + 0.1, -0.1].iter().map(|&p| Complex64::from_polar(1.0, p)).collect();
        let d = round_pslm(&field(vals, 4, 1), DeviceModel::pslm(2).unwrap()).unwrap();
        assert_eq!(d.values(), &[0, 1, 1, 0]);
    }

    #[test]
    fn pslm_rounding_recovers_levels() {
        let levels: Vec<u32> = (0..256).collect();
        let vals = levels.iter().map(|&k| level_phasor(k, 256).scale(0.3)).collect();
        let d = round_pslm(&field(vals, 16, 16), pslm()).unwrap();
        assert_eq!(d.values(), levels.as_slice());
    }

    #[test]
    fn pslm_rounding_needs_phase_device() {
        let f = field(vec![Complex64::new(1.0, 0.0); 4], 2, 2);
        assert!(round_pslm(&f, DeviceModel::Dmd).is_err());
        assert!(DeviceModel::pslm(1).is_err());
    }

    #[test]
    fn halfway_phase_goes_to_lower_level() {
        assert_eq!(nearest_level(0.5 * TAU / 4.0, 4), 0);
        assert_eq!(nearest_level(1.5 * TAU / 4.0, 4), 1);
        assert_eq!(nearest_level(1.5000001 * TAU / 4.0, 4), 2);
    }

    #[test]
    fn realize_states() {
        let d = DisplayedHologram::new(DeviceModel::Dmd, 3, 1, vec![1, 1, 1]).unwrap();
        assert!(d.realize().values().iter().all(|v| *v == Complex64::new(1.0, 0.0)));
        let p = DisplayedHologram::new(pslm(), 1, 1, vec![64]).unwrap();
        let v = p.realize().values()[0];
        assert!((v.norm() - 1.0).abs() < 1e-15);
        assert!((v.arg() - PI / 2.0).abs() < 1e-15);
        assert!(DisplayedHologram::new(DeviceModel::Dmd, 1, 1, vec![2]).is_err());
        assert!(DisplayedHologram::new(pslm(), 2, 1, vec![0]).is_err());
    }

    #[test]
    fn kernel_validation() {
        assert!(DitherKernel::new(vec![KernelTap { dx: 1, dy: 0, weight: 3 }], 4).is_err());
        assert!(DitherKernel::new(vec![KernelTap { dx: -1, dy: 0, weight: 1 }], 1).is_err());
        assert!(DitherKernel::new(vec![KernelTap { dx: 0, dy: 0, weight: 1 }], 1).is_err());
        assert!(DitherKernel::new(vec![KernelTap { dx: 2, dy: -1, weight: 1 }], 1).is_err());
        assert!(DitherKernel::new(vec![KernelTap { dx: -3, dy: 2, weight: 1 }], 1).is_ok());
    }

    #[test]
    fn right_neighbour_trace() {
        let k = DitherKernel::new(vec![KernelTap { dx: 1, dy: 0, weight: 1 }], 1).unwrap();
        let d = diffuse_binary(&[0.5; 5], 5, 1, &k, ScanOrder::Raster).unwrap();
        assert_eq!(d.states, vec![1, 0, 1, 0, 1]);
        assert_eq!(d.errors, vec![-0.5, 0.0, -0.5, 0.0, -0.5]);
        assert_eq!(d.dropped, -0.5);
    }

    #[test]
    fn zeros_stay_dark() {
        let d = diffuse_binary(&[0.0; 30], 6, 5, &DitherKernel::default(), ScanOrder::Raster).unwrap();
        assert!(d.states.iter().all(|&s| s == 0));
        assert!(d.errors.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn half_grey_alternates() {
        for kernel in [DitherKernel::five_sixteenths(), DitherKernel::floyd_steinberg()] {
            let (w, h) = (64, 48);
            let d = diffuse_binary(&vec![0.5; w * h], w, h, &kernel, ScanOrder::Raster).unwrap();
            let mean = d.states.iter().map(|&s| f64::from(s)).sum::<f64>() / (w * h) as f64;
            assert!((mean - 0.5).abs() <= 1.0 / (w * h) as f64, "mean {mean}");
        }
    }

    #[test]
    fn serpentine_mirrors_taps() {
        // Error only flows along the scan direction, so on the reversed row the
        // last pixel is processed first.
        let k = DitherKernel::new(vec![KernelTap { dx: 1, dy: 0, weight: 1 }], 1).unwrap();
        let d = diffuse_binary(&[0.5; 6], 3, 2, &k, ScanOrder::Serpentine).unwrap();
        assert_eq!(d.states, vec![1, 0, 1, 1, 0, 1]);
    }

    #[test]
    fn on_level_unit_vectors_unchanged() {
        let vals: Vec<Complex64> = (0..20).map(|k| level_phasor(k * 13 % 256, 256)).collect();
        let d = diffuse_phase(&vals, 5, 4, 256, &DitherKernel::default(), ScanOrder::Raster).unwrap();
        for (i, v) in vals.iter().enumerate() {
            assert_eq!(level_phasor(d.states[i], 256), *v);
            assert!(d.errors[i].norm() < 1e-15);
        }
    }

    #[test]
    fn half_vector_error() {
        let d = diffuse_phase(&[Complex64::new(0.5, 0.0)], 1, 1, 256, &DitherKernel::default(), ScanOrder::Raster)
            .unwrap();
        assert_eq!(d.states, vec![0]);
        assert_eq!(d.errors, vec![Complex64::new(-0.5, 0.0)]);
    }

    #[test]
    fn degenerate_dither_inputs() {
        let flat = field(vec![Complex64::new(0.3, 0.7); 9], 3, 3);
        assert!(matches!(
            dither_dmd(&flat, &DitherKernel::default(), ScanOrder::Raster),
            Err(HoloError::DegenerateInput(_))
        ));
        let zero = field(vec![Complex64::new(0.0, 0.0); 9], 3, 3);
        assert!(matches!(
            dither_pslm(&zero, pslm(), &DitherKernel::default(), ScanOrder::Raster),
            Err(HoloError::DegenerateInput(_))
        ));
    }

    #[test]
    fn parse_choices() {
        assert_eq!("five-sixteenths".parse::<KernelChoice>().unwrap(), KernelChoice::FiveSixteenths);
        assert_eq!("floyd-steinberg".parse::<KernelChoice>().unwrap().kernel(), DitherKernel::floyd_steinberg());
        assert!("bayer".parse::<KernelChoice>().is_err());
        assert_eq!("serpentine".parse::<ScanOrder>().unwrap(), ScanOrder::Serpentine);
    }
}
