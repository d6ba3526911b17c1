// A binary mirror array shows a single trap with its conjugate and a DC spot.

use holotrap::prelude::*;

pub fn run_example() -> holotrap::Result<()> {
    let n = 256;
    let layout = TrapLayout::single(Pixel::new(n / 2 + 40, n / 2));
    let target = build_target(&layout, n, n, RngSeed(1))?;
    let hologram = fft_inverse(&target);

    let shown = round_dmd(&hologram);
    println!("mirrors on: {:.1}%", shown.fill_factor() * 100.0);
    let image = fft_forward(&shown.realize());
    let orders = order_powers(&image, &layout, incident_power(n, n))?;
    println!("0th order   {:.4}", orders.zeroth);
    println!("+1st order  {:.4}   (1/pi^2 = {:.4})", orders.plus_one, 1.0 / std::f64::consts::PI.powi(2));
    println!("-1st order  {:.4}", orders.minus_one);

    let dithered = dither_dmd(&hologram, &DitherKernel::five_sixteenths(), ScanOrder::Raster)?;
    let o = order_powers(&fft_forward(&dithered.realize()), &layout, incident_power(n, n))?;
    println!("dithered: 0th {:.4}, +1st {:.4}", o.zeroth, o.plus_one);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
