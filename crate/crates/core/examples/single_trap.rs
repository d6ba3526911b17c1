// One trap from its analytic hologram, displaced laterally and refocused.

use holotrap::prelude::*;

const N: usize = 128;

fn brightest(image: &ComplexField) -> (Pixel, f64) {
    let int = image.intensity();
    let (i, &peak) = int.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    (Pixel::new(i % image.width(), i / image.width()), peak / int.iter().sum::<f64>())
}

pub fn run_example() -> holotrap::Result<()> {
    // 1064 nm through a 200 mm lens, 8 um pixels.
    let optics = OpticalConfig::new(0.2, 1.064e-6, 8e-6)?;
    let px = optics.image_pixel(N);
    println!("one image pixel = {:.2} um", px * 1e6);

    for (dx, dy) in [(0, 0), (12, 0), (-7, 20)] {
        let trap = Trap::at(dx as f64 * px, dy as f64 * px, 0.0);
        let holo = analytic_trap_hologram(&trap, &optics, N, N)?;
        let (at, share) = brightest(&fft_forward(&holo));
        println!("trap at ({dx:+}, {dy:+}) px lands on {at:?}, {:.1}% of the power", share * 100.0);
        assert_eq!((at.x as i64, at.y as i64), (N as i64 / 2 + dx, N as i64 / 2 + dy));
    }

    // An axial offset spreads the focal-plane spot.
    let defocused = analytic_trap_hologram(&Trap::at(0.0, 0.0, 2e-4), &optics, N, N)?;
    let (_, share) = brightest(&fft_forward(&defocused));
    println!("z0 = 200 um: peak pixel holds {:.2}% of the power", share * 100.0);

    // Two traps superpose field by field.
    let pair = superpose(&[
        analytic_trap_hologram(&Trap::at(-10.0 * px, 0.0, 0.0), &optics, N, N)?,
        analytic_trap_hologram(&Trap::at(10.0 * px, 0.0, 0.0), &optics, N, N)?,
    ])?;
    let img = fft_forward(&pair).intensity();
    let (l, r) = (img[N / 2 * N + N / 2 - 10], img[N / 2 * N + N / 2 + 10]);
    println!("pair: left {l:.1}, right {r:.1}");
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
