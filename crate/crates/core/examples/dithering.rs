// Rounding against error diffusion on both modulators.

use holotrap::prelude::*;

pub fn run_example() -> holotrap::Result<()> {
    let n = 128;
    let layout = TrapLayout::centered_on(6, 6, 5, Pixel::new(n / 2 + 28, n / 2 + 28))?;
    let hologram = fft_inverse(&build_target(&layout, n, n, RngSeed(3))?);
    let pslm = DeviceModel::pslm(16)?;

    let candidates = [
        ("dmd rounding", round_dmd(&hologram)),
        ("dmd dithering", dither_dmd(&hologram, &DitherKernel::five_sixteenths(), ScanOrder::Raster)?),
        ("dmd floyd-steinberg", dither_dmd(&hologram, &DitherKernel::floyd_steinberg(), ScanOrder::Serpentine)?),
        ("pslm rounding, 16 levels", round_pslm(&hologram, pslm)?),
        ("pslm dithering, 16 levels", dither_pslm(&hologram, pslm, &DitherKernel::five_sixteenths(), ScanOrder::Raster)?),
    ];
    println!("{:<28} {:>8} {:>8}", "", "c_v", "eff");
    for (name, shown) in &candidates {
        let m = run_metrics(&fft_forward(&shown.realize()), &layout, incident_power(n, n))?;
        println!("{name:<28} {:>8.3} {:>8.3}", m.cv, m.efficiency);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
