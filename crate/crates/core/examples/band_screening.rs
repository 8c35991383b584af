//! Estimates per-band noise on the reference scene and shows which bands the
//! adaptive threshold removes.

use oilspill::noise;
use oilspill::scene::{generate_scene, SceneSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SceneSpec::reference();
    let (cube, _) = generate_scene(&spec, 7)?;
    let (screened, report) = noise::screen_bands(&cube)?;

    println!("threshold {:.5}", report.threshold);
    for (b, (&est, &planted)) in report.sigma.iter().zip(&spec.noise_sigma).enumerate() {
        let verdict = if report.kept.contains(&b) { "keep" } else { "drop" };
        println!("band {b:3}: estimated {est:.5}  planted {planted:.5}  {verdict}");
    }
    let dropped: Vec<usize> = (0..cube.band_count()).filter(|b| !report.kept.contains(b)).collect();
    println!("dropped {dropped:?}");
    println!("planted {:?}", spec.severe_band_indices);
    println!("{} bands remain", screened.band_count());
    Ok(())
}
