//! Complex optical fields and propagation between the modulator (hologram)
//! plane and the focal (image) plane of the lens.
//!
//! Transforms are unitary (`1/sqrt(W*H)` in each direction) with the zero
//! frequency at pixel `(W/2, H/2)` (integer division) of both planes, so a
//! trap at image pixel `(W/2 + kx, H/2 + ky)` corresponds to the plane wave
//! `exp(2*pi*i*(kx*x/W + ky*y/H))` across the hologram.

use std::cell::RefCell;
use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{HoloError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Plane {
    Hologram,
    Image,
}

impl Plane {
    fn conjugate(self) -> Plane {
        match self {
            Plane::Hologram => Plane::Image,
            Plane::Image => Plane::Hologram,
        }
    }
}

/// Pixel coordinate; `x` is the column, `y` the row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pixel {
    pub x: usize,
    pub y: usize,
}

impl Pixel {
    pub const fn new(x: usize, y: usize) -> Self {
        Pixel { x, y }
    }
}

/// A `width x height` array of complex amplitudes in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    width: usize,
    height: usize,
    plane: Plane,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(width: usize, height: usize, plane: Plane) -> Result<Self> {
        Self::from_values(width, height, plane, vec![Complex64::new(0.0, 0.0); width * height])
    }

    pub fn constant(width: usize, height: usize, plane: Plane, value: Complex64) -> Result<Self> {
        Self::from_values(width, height, plane, vec![value; width * height])
    }

    pub fn from_values(width: usize, height: usize, plane: Plane, values: Vec<Complex64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(HoloError::Shape(format!("field dimensions must be positive, got {width}x{height}")));
        }
        if values.len() != width * height {
            return Err(HoloError::Shape(format!(
                "{width}x{height} field needs {} values, got {}",
                width * height,
                values.len()
            )));
        }
        Ok(ComplexField { width, height, plane, values })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        plane: Plane,
        mut f: impl FnMut(Pixel) -> Complex64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(Pixel::new(x, y)));
            }
        }
        Self::from_values(width, height, plane, values)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn plane(&self) -> Plane {
        self.plane
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Pixel `(W/2, H/2)`, the optical axis.
    pub fn center(&self) -> Pixel {
        Pixel::new(self.width / 2, self.height / 2)
    }

    pub fn contains(&self, p: Pixel) -> bool {
        p.x < self.width && p.y < self.height
    }

    pub fn get(&self, p: Pixel) -> Option<Complex64> {
        self.contains(p).then(|| self.values[p.y * self.width + p.x])
    }

    pub fn set(&mut self, p: Pixel, value: Complex64) -> Result<()> {
        if !self.contains(p) {
            return Err(HoloError::Bounds(format!(
                "pixel ({}, {}) outside {}x{} field",
                p.x, p.y, self.width, self.height
            )));
        }
        self.values[p.y * self.width + p.x] = value;
        Ok(())
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    /// Same values, relabelled plane.
    pub fn with_plane(mut self, plane: Plane) -> Self {
        self.plane = plane;
        self
    }

    pub fn scale(&self, k: Complex64) -> ComplexField {
        ComplexField { values: self.values.iter().map(|v| v * k).collect(), ..self.clone() }
    }

    fn same_shape(&self, other: &ComplexField) -> bool {
        self.width == other.width && self.height == other.height && self.plane == other.plane
    }
}

/// Sum of `|value|^2` over all pixels.
pub fn power(field: &ComplexField) -> f64 {
    field.values.iter().map(|v| v.norm_sqr()).sum()
}

/// Element-wise sum of fields that share size and plane.
pub fn superpose(fields: &[ComplexField]) -> Result<ComplexField> {
    let (first, rest) = fields
        .split_first()
        .ok_or_else(|| HoloError::Shape("cannot superpose an empty list of fields".into()))?;
    let mut out = first.clone();
    for f in rest {
        if !f.same_shape(first) {
            return Err(HoloError::Shape(format!(
                "cannot superpose {}x{} {:?} field with {}x{} {:?} field",
                f.width, f.height, f.plane, first.width, first.height, first.plane
            )));
        }
        for (o, v) in out.values.iter_mut().zip(&f.values) {
            *o += v;
        }
    }
    Ok(out)
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft(len, direction))
}

const BLOCK: usize = 16;

/// `dst[c * rows + r] = src[r * cols + c]`, in cache-sized tiles.
fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    for r0 in (0..rows).step_by(BLOCK) {
        for c0 in (0..cols).step_by(BLOCK) {
            for r in r0..(r0 + BLOCK).min(rows) {
                for c in c0..(c0 + BLOCK).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

/// Cyclic shift of a `w x h` row-major array so that element `(sx, sy)`
/// lands at the origin, with an optional scale.
fn shifted_copy(src: &[Complex64], dst: &mut [Complex64], w: usize, h: usize, sx: usize, sy: usize, scale: f64) {
    for y in 0..h {
        let s = &src[((y + sy) % h) * w..][..w];
        let d = &mut dst[y * w..][..w];
        let (tail, head) = d.split_at_mut(w - sx);
        tail.copy_from_slice(&s[sx..]);
        head.copy_from_slice(&s[..sx]);
        if scale != 1.0 {
            d.iter_mut().for_each(|v| *v *= scale);
        }
    }
}

fn transform(field: &ComplexField, direction: FftDirection) -> ComplexField {
    let (w, h) = (field.width, field.height);
    let zero = Complex64::new(0.0, 0.0);
    let row_fft = plan(w, direction);
    let col_fft = plan(h, direction);
    let mut scratch = vec![zero; row_fft.get_inplace_scratch_len().max(col_fft.get_inplace_scratch_len())];

    // Optical axis to index 0, transform rows, then columns.
    let mut a = vec![zero; w * h];
    let mut b = vec![zero; w * h];
    shifted_copy(&field.values, &mut a, w, h, w / 2, h / 2, 1.0);
    row_fft.process_with_scratch(&mut a, &mut scratch);
    transpose(&a, &mut b, h, w);
    col_fft.process_with_scratch(&mut b, &mut scratch);
    transpose(&b, &mut a, w, h);

    // Index 0 back to the optical axis, normalized.
    let norm = 1.0 / ((w * h) as f64).sqrt();
    shifted_copy(&a, &mut b, w, h, w.div_ceil(2), h.div_ceil(2), norm);
    ComplexField { width: w, height: h, plane: field.plane.conjugate(), values: b }
}

/// Hologram plane to image plane.
pub fn fft_forward(field: &ComplexField) -> ComplexField {
    transform(field, FftDirection::Forward)
}

/// Image plane to hologram plane; exact inverse of [`fft_forward`].
pub fn fft_inverse(field: &ComplexField) -> ComplexField {
    transform(field, FftDirection::Inverse)
}

/// Seed for every random draw made while building targets.
///
/// Trap phases come from ChaCha8 seeded with this value, one `f64` draw
/// in `[0, 1)` per trap scaled by `2*pi`, in trap order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

/// Regular rectangular trap grid in image-plane pixels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrapLayout {
    pub rows: usize,
    pub cols: usize,
    /// Center-to-center distance; one more than the number of dark pixels between traps.
    pub spacing: usize,
    /// Top-left trap.
    pub offset: Pixel,
}

impl TrapLayout {
    pub fn grid(rows: usize, cols: usize, spacing: usize, offset: Pixel) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(HoloError::Config(format!("trap grid must have at least one row and column, got {rows}x{cols}")));
        }
        if spacing == 0 && rows * cols > 1 {
            return Err(HoloError::Config("trap spacing must be at least 1".into()));
        }
        Ok(TrapLayout { rows, cols, spacing, offset })
    }

    pub fn single(at: Pixel) -> Self {
        TrapLayout { rows: 1, cols: 1, spacing: 1, offset: at }
    }

    /// Grid whose middle trap (rounded towards the top-left) sits on `center`.
    pub fn centered_on(rows: usize, cols: usize, spacing: usize, center: Pixel) -> Result<Self> {
        let half_w = spacing * (cols.max(1) - 1) / 2;
        let half_h = spacing * (rows.max(1) - 1) / 2;
        if half_w > center.x || half_h > center.y {
            return Err(HoloError::Bounds(format!(
                "{rows}x{cols} grid with spacing {spacing} does not fit around ({}, {})",
                center.x, center.y
            )));
        }
        Self::grid(rows, cols, spacing, Pixel::new(center.x - half_w, center.y - half_h))
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Trap pixels in row-major order.
    pub fn pixels(&self) -> Vec<Pixel> {
        let mut out = Vec::with_capacity(self.len());
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.push(Pixel::new(self.offset.x + c * self.spacing, self.offset.y + r * self.spacing));
            }
        }
        out
    }

    /// Inclusive bounding box `(top_left, bottom_right)`.
    pub fn bounds(&self) -> (Pixel, Pixel) {
        let br = Pixel::new(
            self.offset.x + (self.cols - 1) * self.spacing,
            self.offset.y + (self.rows - 1) * self.spacing,
        );
        (self.offset, br)
    }

    /// Integer centroid of the bounding box.
    pub fn centroid(&self) -> Pixel {
        let (tl, br) = self.bounds();
        Pixel::new((tl.x + br.x) / 2, (tl.y + br.y) / 2)
    }

    pub fn check_fits(&self, width: usize, height: usize) -> Result<()> {
        let (_, br) = self.bounds();
        if br.x >= width || br.y >= height {
            return Err(HoloError::Bounds(format!(
                "{}x{} trap grid reaches ({}, {}), outside {width}x{height} array",
                self.rows, self.cols, br.x, br.y
            )));
        }
        Ok(())
    }
}

/// Image-plane target: each trap pixel holds `exp(i*theta_n)/sqrt(N)` with a
/// random `theta_n`, everything else is zero.
pub fn build_target(layout: &TrapLayout, width: usize, height: usize, seed: RngSeed) -> Result<ComplexField> {
    layout.check_fits(width, height)?;
    let mut field = ComplexField::zeros(width, height, Plane::Image)?;
    let amp = 1.0 / (layout.len() as f64).sqrt();
    let mut rng = seed.rng();
    for p in layout.pixels() {
        let theta = rng.gen::<f64>() * TAU;
        field.set(p, Complex64::from_polar(amp, theta))?;
    }
    Ok(field)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpticalConfig {
    /// Lens focal length, meters.
    pub focal_length: f64,
    /// Meters.
    pub wavelength: f64,
    /// Modulator pixel size on both axes, meters.
    pub pixel_pitch: f64,
}

impl OpticalConfig {
    pub fn new(focal_length: f64, wavelength: f64, pixel_pitch: f64) -> Result<Self> {
        let cfg = OpticalConfig { focal_length, wavelength, pixel_pitch };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if ok(self.focal_length) && ok(self.wavelength) && ok(self.pixel_pitch) {
            Ok(())
        } else {
            Err(HoloError::Config(format!("optical parameters must be positive and finite: {self:?}")))
        }
    }

    /// Lateral focal-plane displacement that maps to one image-plane pixel on an
    /// `n`-pixel wide modulator.
    pub fn image_pixel(&self, n: usize) -> f64 {
        self.focal_length * self.wavelength / (n as f64 * self.pixel_pitch)
    }
}

/// A single trap, positioned relative to the lens focal point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trap {
    pub x0: f64,
    pub y0: f64,
    /// Axial displacement out of the focal plane.
    pub z0: f64,
    pub amplitude: f64,
    pub phase: f64,
}

impl Trap {
    pub fn at(x0: f64, y0: f64, z0: f64) -> Self {
        Trap { x0, y0, z0, amplitude: 1.0, phase: 0.0 }
    }
}

/// Hologram of one trap: a tilted plane wave carrying the lateral position,
/// plus a quadratic lens term for the axial offset.
pub fn analytic_trap_hologram(trap: &Trap, cfg: &OpticalConfig, width: usize, height: usize) -> Result<ComplexField> {
    cfg.validate()?;
    if !(trap.amplitude >= 0.0) {
        return Err(HoloError::Config(format!("trap amplitude must be non-negative, got {}", trap.amplitude)));
    }
    let k = TAU / (cfg.focal_length * cfg.wavelength);
    let defocus = trap.z0 / (2.0 * cfg.focal_length);
    let (cx, cy) = ((width / 2) as f64, (height / 2) as f64);
    ComplexField::from_fn(width, height, Plane::Hologram, |p| {
        let x = (p.x as f64 - cx) * cfg.pixel_pitch;
        let y = (p.y as f64 - cy) * cfg.pixel_pitch;
        let phase = k * (trap.x0 * x + trap.y0 * y + defocus * (x * x + y * y));
        Complex64::from_polar(trap.amplitude, trap.phase + phase)
    })
}
