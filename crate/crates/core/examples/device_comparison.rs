// Median accuracy and efficiency of every algorithm on both modulators.

use holotrap::prelude::*;

pub fn run_example() -> holotrap::Result<()> {
    let grids = vec![(2, 2), (4, 4), (8, 8)];
    println!("{:<6} {:<10} {:>6} {:>8} {:>8}", "device", "algorithm", "grid", "c_v", "eff");
    for device in [DeviceModel::pslm(256)?, DeviceModel::Dmd] {
        for alg in Algorithm::ALL {
            let mut cfg = ExperimentConfig::new(device, alg, grids.clone()).with_runs(5).with_seed(2);
            cfg.width = 160;
            cfg.height = 160;
            cfg.iterations = 8;
            cfg.signal = SignalRegion::Centered { width: 60, height: 60 };
            let agg = run_sweep(&cfg)?;
            for p in &agg.points {
                let grid = format!("{}x{}", p.rows, p.cols);
                println!("{:<6} {:<10} {grid:>6} {:>8.3} {:>8.3}", device.name(), alg.name(), p.median_cv, p.median_eff);
            }
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
