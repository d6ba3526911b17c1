// Writing a hologram and its simulated focal plane to disk and reading them back.

use holotrap::io::{hologram_from_pgm, hologram_to_pgm, IntensityFormat, IntensityMap, Pgm};
use holotrap::prelude::*;

pub fn run_example() -> holotrap::Result<()> {
    let dir = tempfile::tempdir()?;
    let n = 96;
    let layout = TrapLayout::centered_on(3, 3, 5, Pixel::new(n / 2 + 20, n / 2 + 20))?;
    let hologram = fft_inverse(&build_target(&layout, n, n, RngSeed(9))?);

    for device in [DeviceModel::Dmd, DeviceModel::pslm(1024)?] {
        let shown = constrain_for(device, &hologram)?;
        let path = dir.path().join(format!("{}.pgm", device.name()));
        let pgm = hologram_to_pgm(&shown);
        pgm.write(&path)?;
        let back = hologram_from_pgm(&Pgm::read(&path)?, device)?;
        assert_eq!(back, shown);
        println!("{}: maxval {}, {} bytes", path.display(), pgm.maxval, std::fs::metadata(&path)?.len());
    }

    let image = fft_forward(&round_dmd(&hologram).realize());
    let map = IntensityMap::from_field(&image);
    for format in [IntensityFormat::Pfm, IntensityFormat::Csv] {
        let path = dir.path().join(format!("intensity.{}", format.extension()));
        map.write(&path, format)?;
        let back = IntensityMap::read(&path, format)?;
        let worst = map.values.iter().zip(&back.values).map(|(a, b)| (a - b).abs()).fold(0.0f32, f32::max);
        println!("{}: {}x{}, max round-trip error {worst:e}", path.display(), back.width, back.height);
    }
    Ok(())
}

fn constrain_for(device: DeviceModel, hologram: &ComplexField) -> holotrap::Result<DisplayedHologram> {
    match device {
        DeviceModel::Dmd => Ok(round_dmd(hologram)),
        pslm => round_pslm(hologram, pslm),
    }
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
