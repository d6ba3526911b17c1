// Driving a benchmark from a JSON configuration, as the command line does.

use holotrap::cli::{bench_rows, CliConfig};
use holotrap::prelude::*;

const CONFIG: &str = r#"{
  "devices": ["dmd"],
  "algorithms": ["rounding", "dithering"],
  "grids": [[3, 3], [5, 5]],
  "runs": 6,
  "seed": 42,
  "width": 128,
  "height": 128,
  "kernel": "floyd-steinberg",
  "scan": "serpentine"
}"#;

pub fn run_example() -> holotrap::Result<()> {
    let cfg = CliConfig::from_json(CONFIG)?;
    let mut out = csv::Writer::from_writer(std::io::stdout());
    for &device in &cfg.devices {
        for &alg in &cfg.algorithms {
            let agg = run_sweep(&cfg.experiment(device, alg)?)?;
            for row in bench_rows(device, &agg) {
                out.serialize(row).map_err(|e| HoloError::Parse(e.to_string()))?;
            }
        }
    }
    out.flush()?;

    // Unknown keys are refused.
    assert!(CliConfig::from_json(r#"{"run": 3}"#).is_err());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
