//! Writes a small cube as ENVI, then reads the same pixels back from BSQ,
//! BIL and BIP layouts and checks they agree.

use oilspill::io::{self, ByteOrder, DataType, EnviHeader, Interleave};
use oilspill::HyperspectralCube;

fn layout(cube: &HyperspectralCube, interleave: Interleave) -> Vec<u8> {
    let (w, h, n) = (cube.width(), cube.height(), cube.band_count());
    let mut order = Vec::with_capacity(w * h * n);
    for y in 0..h {
        for x in 0..w {
            for b in 0..n {
                order.push((y, x, b));
            }
        }
    }
    match interleave {
        Interleave::Bsq => order.sort_by_key(|&(y, x, b)| (b, y, x)),
        Interleave::Bil => order.sort_by_key(|&(y, x, b)| (y, b, x)),
        Interleave::Bip => {}
    }
    order
        .iter()
        .flat_map(|&(y, x, b)| (cube.band(b)[y * w + x] as f32).to_be_bytes())
        .collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (w, h, n) = (5, 4, 3);
    let values: Vec<f64> = (0..w * h * n).map(|i| i as f64 * 0.25).collect();
    let cube = HyperspectralCube::new(w, h, n, values, Some(vec![450.0, 550.0, 650.0]))?;

    let dir = std::env::temp_dir().join("oilspill-envi-example");
    std::fs::create_dir_all(&dir)?;
    let header = io::write_envi_f32(&cube, &dir.join("cube"))?;
    let back = io::read_envi(&header)?;
    println!("round trip through {}: {}", header.display(), back == cube);

    for interleave in [Interleave::Bsq, Interleave::Bil, Interleave::Bip] {
        let hdr = EnviHeader {
            samples: w,
            lines: h,
            bands: n,
            interleave,
            data_type: DataType::Float32,
            byte_order: ByteOrder::Big,
            header_offset: 0,
            wavelengths: None,
        };
        let loaded = io::load_cube(&hdr, &layout(&cube, interleave))?;
        println!("{interleave:?} big-endian matches: {}", loaded.values() == cube.values());
    }
    Ok(())
}
