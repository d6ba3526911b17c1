use std::f64::consts::PI;

use holotrap::quantize::{diffuse_binary, diffuse_phase, level_phasor, nearest_level};
use holotrap::prelude::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn wrap(a: f64) -> f64 {
    let t = (a + PI).rem_euclid(2.0 * PI) - PI;
    if t <= -PI { t + 2.0 * PI } else { t }
}

fn random_phasors(w: usize, h: usize, seed: u64) -> ComplexField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vals =
        (0..w * h).map(|_| Complex64::from_polar(rng.gen_range(0.1..2.0), rng.gen_range(-PI..PI))).collect();
    ComplexField::from_values(w, h, Plane::Hologram, vals).unwrap()
}

#[test]
fn kernel_weights_sum_exactly() {
    for k in [DitherKernel::five_sixteenths(), DitherKernel::floyd_steinberg()] {
        let num: u32 = k.taps().iter().map(|t| t.weight).sum();
        assert_eq!(num, k.denominator());
        assert!(k.taps().iter().all(|t| t.dy > 0 || (t.dy == 0 && t.dx > 0)));
    }
    let right = DitherKernel::five_sixteenths();
    let first = right.taps().iter().find(|t| (t.dx, t.dy) == (1, 0)).unwrap();
    assert_eq!((first.weight, right.denominator()), (5, 16));
}

#[test]
fn binary_bookkeeping_closes() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (w, h) = (97, 61);
    let grey: Vec<f64> = (0..w * h).map(|_| rng.gen::<f64>()).collect();
    for kernel in [DitherKernel::five_sixteenths(), DitherKernel::floyd_steinberg()] {
        for scan in [ScanOrder::Raster, ScanOrder::Serpentine] {
            let d = diffuse_binary(&grey, w, h, &kernel, scan).unwrap();
            let shown: f64 = d.states.iter().map(|&s| s as f64).sum();
            let input: f64 = grey.iter().sum();
            assert!((input - shown - d.dropped).abs() < 1e-10, "{scan:?}");
        }
    }
}

#[test]
fn phase_bookkeeping_closes() {
    let f = random_phasors(80, 50, 7);
    let peak = f.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
    let scaled: Vec<Complex64> = f.values().iter().map(|v| v / peak).collect();
    for m in [2, 8, 256] {
        let d = diffuse_phase(&scaled, 80, 50, m, &DitherKernel::five_sixteenths(), ScanOrder::Raster).unwrap();
        let input: Complex64 = scaled.iter().sum();
        let shown: Complex64 = d.states.iter().map(|&k| level_phasor(k, m)).sum();
        assert!((input - shown - d.dropped).norm() < 1e-10, "m={m}");
        assert!(d.states.iter().all(|&k| k < m));
    }
}

#[test]
fn uniform_grey_averages_half() {
    let (w, h) = (64, 48);
    for kernel in [DitherKernel::five_sixteenths(), DitherKernel::floyd_steinberg()] {
        let d = diffuse_binary(&vec![0.5; w * h], w, h, &kernel, ScanOrder::Raster).unwrap();
        let mean = d.states.iter().map(|&s| s as f64).sum::<f64>() / (w * h) as f64;
        assert!((mean - 0.5).abs() <= 1.0 / (w * h) as f64 + 1e-15, "mean {mean}");
    }
}

#[test]
fn right_neighbour_trace() {
    let k = DitherKernel::new(vec![holotrap::quantize::KernelTap { dx: 1, dy: 0, weight: 1 }], 1).unwrap();
    let d = diffuse_binary(&[0.5; 5], 5, 1, &k, ScanOrder::Raster).unwrap();
    assert_eq!(d.states, vec![1, 0, 1, 0, 1]);
}

#[test]
fn dmd_single_trap_orders() {
    // A trap 32 px right of the axis on a 512 px array gives 16 px fringes.
    let n = 512;
    let at = Pixel::new(n / 2 + 32, n / 2);
    let layout = TrapLayout::single(at);
    let target = build_target(&layout, n, n, RngSeed(11)).unwrap();
    let shown = round_dmd(&fft_inverse(&target));
    let img = fft_forward(&shown.realize());
    let o = order_powers(&img, &layout, incident_power(n, n)).unwrap();
    let theory = 1.0 / (PI * PI);
    assert!((o.plus_one - theory).abs() / theory < 0.05, "+1 order {}", o.plus_one);
    assert!((o.minus_one - theory).abs() / theory < 0.05, "-1 order {}", o.minus_one);
    assert!((o.zeroth - 0.25).abs() / 0.25 < 0.05, "0th order {}", o.zeroth);
    assert!((shown.fill_factor() - 0.5).abs() < 1e-12);
}

#[test]
fn pslm_single_trap_keeps_power() {
    let n = 512;
    for at in [Pixel::new(n / 2, n / 2), Pixel::new(n / 2 + 37, n / 2 - 90)] {
        let layout = TrapLayout::single(at);
        let target = build_target(&layout, n, n, RngSeed(2)).unwrap();
        let shown = round_pslm(&fft_inverse(&target), DeviceModel::pslm(256).unwrap()).unwrap();
        let eff = efficiency(&fft_forward(&shown.realize()), &layout, incident_power(n, n)).unwrap();
        assert!(eff >= 0.99, "{eff}");
    }
}

#[test]
fn centered_trap_gives_constant_level() {
    let layout = TrapLayout::single(Pixel::new(32, 32));
    let target = build_target(&layout, 64, 64, RngSeed(5)).unwrap();
    let shown = round_pslm(&fft_inverse(&target), DeviceModel::pslm(256).unwrap()).unwrap();
    assert!(shown.values().iter().all(|&k| k == shown.values()[0]));
}

proptest! {
    #[test]
    fn rounding_error_bounded(phase in -10.0f64..10.0, m in 2u32..1024) {
        let k = nearest_level(phase, m);
        prop_assert!(k < m);
        let err = wrap(phase - 2.0 * PI * k as f64 / m as f64).abs();
        prop_assert!(err <= PI / m as f64 + 1e-12);
    }

    #[test]
    fn pslm_rounding_idempotent(seed in any::<u64>(), m in 2u32..300) {
        let dev = DeviceModel::pslm(m).unwrap();
        let once = round_pslm(&random_phasors(9, 7, seed), dev).unwrap();
        let twice = round_pslm(&once.realize(), dev).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn dmd_rounding_idempotent(seed in any::<u64>()) {
        let once = round_dmd(&random_phasors(11, 5, seed));
        let twice = round_dmd(&once.realize());
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn dither_states_valid(seed in any::<u64>(), serp in any::<bool>()) {
        let f = random_phasors(13, 9, seed);
        let scan = if serp { ScanOrder::Serpentine } else { ScanOrder::Raster };
        let d = dither_dmd(&f, &DitherKernel::floyd_steinberg(), scan).unwrap();
        prop_assert!(d.values().iter().all(|&s| s <= 1));
        let p = dither_pslm(&f, DeviceModel::pslm(16).unwrap(), &DitherKernel::five_sixteenths(), scan).unwrap();
        prop_assert!(p.values().iter().all(|&s| s < 16));
    }
}
