//! Figures of merit for a simulated image plane.

use serde::{Deserialize, Serialize};

use crate::error::{HoloError, Result};
use crate::field::{power, ComplexField, Pixel, TrapLayout};

/// `|F|^2` read at each trap pixel, in layout order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrapIntensities {
    pub layout: TrapLayout,
    pub values: Vec<f64>,
}

impl TrapIntensities {
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.total() / self.values.len() as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub cv: f64,
    pub efficiency: f64,
    pub total_image_power: f64,
    pub incident_power: f64,
}

/// Power of uniform unit-amplitude illumination over a `width x height` modulator.
pub fn incident_power(width: usize, height: usize) -> f64 {
    (width * height) as f64
}

pub fn trap_intensities(image: &ComplexField, layout: &TrapLayout) -> Result<TrapIntensities> {
    layout.check_fits(image.width(), image.height())?;
    let values = layout
        .pixels()
        .into_iter()
        .map(|p| image.get(p).expect("layout checked against image").norm_sqr())
        .collect();
    Ok(TrapIntensities { layout: layout.clone(), values })
}

/// Population standard deviation of the trap intensities over their mean.
pub fn coefficient_of_variation(ti: &TrapIntensities) -> Result<f64> {
    cv_of(&ti.values)
}

pub(crate) fn cv_of(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(HoloError::UndefinedMetric("no trap intensities".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if !(mean > 0.0) {
        return Err(HoloError::UndefinedMetric(format!("mean trap intensity is {mean}")));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok(var.sqrt() / mean)
}

/// Fraction of the incident power landing on the trap pixels.
///
/// On a DMD only the trap pixels themselves count; their mirror images in
/// the -1 order and the 0th order are not part of the layout.
pub fn efficiency(image: &ComplexField, layout: &TrapLayout, incident_power: f64) -> Result<f64> {
    if !(incident_power > 0.0) {
        return Err(HoloError::UndefinedMetric(format!("incident power must be positive, got {incident_power}")));
    }
    Ok(trap_intensities(image, layout)?.total() / incident_power)
}

/// Cv and efficiency together; a zero trap mean reports `cv = NaN` instead of failing.
pub fn run_metrics(image: &ComplexField, layout: &TrapLayout, incident_power: f64) -> Result<RunMetrics> {
    let ti = trap_intensities(image, layout)?;
    let cv = match coefficient_of_variation(&ti) {
        Ok(cv) => cv,
        Err(HoloError::UndefinedMetric(_)) => f64::NAN,
        Err(e) => return Err(e),
    };
    Ok(RunMetrics {
        cv,
        efficiency: efficiency(image, layout, incident_power)?,
        total_image_power: power(image),
        incident_power,
    })
}

/// Power in the 0, +1 and -1 diffraction orders as fractions of the incident power.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderPowers {
    pub zeroth: f64,
    pub plus_one: f64,
    pub minus_one: f64,
}

impl OrderPowers {
    pub fn total(&self) -> f64 {
        self.zeroth + self.plus_one + self.minus_one
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Window {
    x0: i64,
    y0: i64,
    x1: i64,
    y1: i64,
}

impl Window {
    fn overlaps(&self, o: &Window) -> bool {
        self.x0 <= o.x1 && o.x0 <= self.x1 && self.y0 <= o.y1 && o.y0 <= self.y1
    }

    fn sum(&self, image: &ComplexField) -> Result<f64> {
        let (w, h) = (image.width() as i64, image.height() as i64);
        if self.x0 < 0 || self.y0 < 0 || self.x1 >= w || self.y1 >= h {
            return Err(HoloError::Bounds(format!("order window {self:?} leaves the {w}x{h} image")));
        }
        let mut total = 0.0;
        for y in self.y0..=self.y1 {
            for x in self.x0..=self.x1 {
                total += image.get(Pixel::new(x as usize, y as usize)).unwrap().norm_sqr();
            }
        }
        Ok(total)
    }
}

/// Sums power over the trap grid's footprint (+1 order), its point
/// reflection through the optical axis (-1 order), and an equal footprint
/// centered on the optical axis (0th order).
pub fn order_powers(image: &ComplexField, layout: &TrapLayout, incident_power: f64) -> Result<OrderPowers> {
    if !(incident_power > 0.0) {
        return Err(HoloError::UndefinedMetric(format!("incident power must be positive, got {incident_power}")));
    }
    layout.check_fits(image.width(), image.height())?;
    let c = image.center();
    let (cx, cy) = (c.x as i64, c.y as i64);
    let (tl, br) = layout.bounds();
    let plus = Window { x0: tl.x as i64, y0: tl.y as i64, x1: br.x as i64, y1: br.y as i64 };
    let minus = Window { x0: 2 * cx - plus.x1, y0: 2 * cy - plus.y1, x1: 2 * cx - plus.x0, y1: 2 * cy - plus.y0 };
    let (hw, hh) = ((plus.x1 - plus.x0) / 2, (plus.y1 - plus.y0) / 2);
    let zero = Window {
        x0: cx - hw,
        y0: cy - hh,
        x1: cx - hw + (plus.x1 - plus.x0),
        y1: cy - hh + (plus.y1 - plus.y0),
    };
    if plus.overlaps(&minus) || plus.overlaps(&zero) || minus.overlaps(&zero) {
        return Err(HoloError::Config("diffraction order windows overlap; move the traps off axis".into()));
    }
    Ok(OrderPowers {
        zeroth: zero.sum(image)? / incident_power,
        plus_one: plus.sum(image)? / incident_power,
        minus_one: minus.sum(image)? / incident_power,
    })
}
