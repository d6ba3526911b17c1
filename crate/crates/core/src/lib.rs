//! Hologram generation for arrays of optical tweezers.
//!
//! The crate simulates two kinds of modulator, a binary-amplitude digital
//! micromirror device (DMD) and a phase-only spatial light modulator (PSLM),
//! and three ways of computing what they display: plain rounding,
//! error-diffusion dithering and the MRAF iterative Fourier transform
//! algorithm. A seeded benchmark harness compares them on trap uniformity
//! (coefficient of variation) and efficiency.
//!
//! ```
//! use holotrap::prelude::*;
//!
//! let layout = TrapLayout::centered_on(4, 4, 5, Pixel::new(32, 32))?;
//! let target = build_target(&layout, 64, 64, RngSeed(1))?;
//! let shown = round_pslm(&fft_inverse(&target), DeviceModel::pslm(256)?)?;
//! let image = fft_forward(&shown.realize());
//! let m = run_metrics(&image, &layout, incident_power(64, 64))?;
//! assert!(m.efficiency > 0.5);
//! # Ok::<(), holotrap::HoloError>(())
//! ```

pub mod bench;
pub mod cli;
pub mod error;
pub mod field;
pub mod io;
pub mod metrics;
pub mod mraf;
pub mod quantize;

pub use error::{HoloError, Result};
pub use num_complex::Complex64;

pub mod prelude {
    pub use crate::bench::{
        convergence_study, run_once, run_sweep, simulate, AggregateStats, Algorithm, ExperimentConfig, GridShift,
    };
    pub use crate::error::{HoloError, Result};
    pub use crate::field::{
        analytic_trap_hologram, build_target, fft_forward, fft_inverse, power, superpose, ComplexField,
        OpticalConfig, Pixel, Plane, RngSeed, Trap, TrapLayout,
    };
    pub use crate::metrics::{
        coefficient_of_variation, efficiency, incident_power, order_powers, run_metrics, trap_intensities,
        OrderPowers, RunMetrics, TrapIntensities,
    };
    pub use crate::mraf::{make_mask, mix_step, mraf_run, ConvergenceTrace, MrafConfig, RegionMask, SignalRegion};
    pub use crate::quantize::{
        dither_dmd, dither_pslm, realize, round_dmd, round_pslm, DeviceModel, DisplayedHologram, DitherKernel,
        KernelChoice, ScanOrder,
    };
    pub use num_complex::Complex64;
}
