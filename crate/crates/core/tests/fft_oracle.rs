use std::f64::consts::TAU;

use holotrap::prelude::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Centered unitary DFT written straight from the definition, with index
/// offsets `n - floor(N/2)` on both sides.
fn naive(field: &ComplexField, sign: f64) -> Vec<Complex64> {
    let (w, h) = (field.width(), field.height());
    let (cx, cy) = ((w / 2) as f64, (h / 2) as f64);
    let norm = 1.0 / ((w * h) as f64).sqrt();
    let mut out = vec![Complex64::new(0.0, 0.0); w * h];
    for v in 0..h {
        for u in 0..w {
            let mut acc = Complex64::new(0.0, 0.0);
            for y in 0..h {
                for x in 0..w {
                    let phase = sign
                        * TAU
                        * ((u as f64 - cx) * (x as f64 - cx) / w as f64 + (v as f64 - cy) * (y as f64 - cy) / h as f64);
                    acc += field.values()[y * w + x] * Complex64::from_polar(1.0, phase);
                }
            }
            out[v * w + u] = acc * norm;
        }
    }
    out
}

fn random_field(w: usize, h: usize, plane: Plane, seed: u64) -> ComplexField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vals = (0..w * h).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    ComplexField::from_values(w, h, plane, vals).unwrap()
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn matches_naive_dft_up_to_32() {
    let mut worst: f64 = 0.0;
    for h in 1..=32 {
        for w in 1..=32 {
            let f = random_field(w, h, Plane::Hologram, (w * 100 + h) as u64);
            let fwd = fft_forward(&f);
            worst = worst.max(max_diff(fwd.values(), &naive(&f, -1.0)));
            let g = f.clone().with_plane(Plane::Image);
            worst = worst.max(max_diff(fft_inverse(&g).values(), &naive(&g, 1.0)));
        }
    }
    assert!(worst < 1e-9, "max abs deviation {worst:e}");
}

#[test]
fn parseval_512() {
    for seed in 0..2 {
        let f = random_field(512, 512, Plane::Hologram, seed);
        let p = power(&f);
        let rel = (power(&fft_forward(&f)) - p).abs() / p;
        assert!(rel < 1e-12, "relative power change {rel:e}");
    }
}

#[test]
fn round_trip_512() {
    let f = random_field(512, 512, Plane::Hologram, 9);
    let back = fft_inverse(&fft_forward(&f));
    assert!(max_diff(back.values(), f.values()) < 1e-12);
    assert_eq!(back.plane(), Plane::Hologram);
}

#[test]
fn impulse_and_plane_wave_512() {
    let mut d = ComplexField::zeros(512, 512, Plane::Hologram).unwrap();
    d.set(d.center(), Complex64::new(1.0, 0.0)).unwrap();
    let flat = fft_forward(&d);
    for v in flat.values() {
        assert!((v - Complex64::new(1.0 / 512.0, 0.0)).norm() < 1e-15);
    }
    let back = fft_forward(&ComplexField::constant(512, 512, Plane::Hologram, Complex64::new(1.0, 0.0)).unwrap());
    assert!((back.get(back.center()).unwrap().re - 512.0).abs() < 1e-9);
    let rest: f64 = back.values().iter().map(|v| v.norm_sqr()).sum::<f64>() - back.get(back.center()).unwrap().norm_sqr();
    assert!(rest < 1e-18 * 512.0 * 512.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn linear(w in 1usize..24, h in 1usize..24, s1 in any::<u64>(), s2 in any::<u64>(),
              ar in -3.0f64..3.0, ai in -3.0f64..3.0) {
        let f = random_field(w, h, Plane::Hologram, s1);
        let g = random_field(w, h, Plane::Hologram, s2);
        let a = Complex64::new(ar, ai);
        let lhs = fft_forward(&superpose(&[f.scale(a), g.clone()]).unwrap());
        let rhs = superpose(&[fft_forward(&f).scale(a), fft_forward(&g)]).unwrap();
        prop_assert!(max_diff(lhs.values(), rhs.values()) < 1e-12);
    }

    #[test]
    fn power_preserved(w in 1usize..40, h in 1usize..40, s in any::<u64>()) {
        let f = random_field(w, h, Plane::Image, s);
        let p = power(&f);
        prop_assert!((power(&fft_inverse(&f)) - p).abs() <= 1e-12 * p);
    }
}
