// Iterating with the signal window mixed against the free region.

use holotrap::prelude::*;

pub fn run_example() -> holotrap::Result<()> {
    let n = 192;
    let layout = TrapLayout::centered_on(10, 10, 5, Pixel::new(n / 2 + 36, n / 2 + 36))?;
    let target = build_target(&layout, n, n, RngSeed(11))?;

    for p in [1.0, 0.7, 0.4] {
        let cfg = MrafConfig {
            mixing: p,
            iterations: 12,
            signal: SignalRegion::Centered { width: 70, height: 70 },
            ..MrafConfig::for_device(DeviceModel::pslm(256)?)
        };
        let (_, trace) = mraf_run(&target, &layout, &cfg)?;
        let cv: Vec<String> = trace.cv.iter().step_by(2).map(|c| format!("{c:.3}")).collect();
        println!("p = {p}: c_v {}  eff {:.3}", cv.join(" "), trace.efficiency.last().unwrap());
    }

    // The same thing through the benchmark harness, median over seeds.
    let mut exp = ExperimentConfig::new(DeviceModel::Dmd, Algorithm::Mraf, vec![]).with_runs(4);
    exp.width = n;
    exp.height = n;
    exp.signal = SignalRegion::Centered { width: 60, height: 60 };
    let study = convergence_study(&exp, (6, 6), 10)?;
    for (i, (cv, eff)) in study.median_cv.iter().zip(&study.median_eff).enumerate() {
        println!("dmd 6x6 iteration {:>2}: c_v {cv:.3}  eff {eff:.4}", i + 1);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
