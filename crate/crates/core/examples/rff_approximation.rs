//! How closely random Fourier features reproduce the Gaussian kernel as the
//! number of frequencies grows.
//!
//! ```text
//! cargo run --release --example rff_approximation
//! ```

use rffkm::cli::{rff_probe, rff_probe_tsv};
use rffkm::data::FeatureMatrix;
use rffkm::features::{gaussian_kernel, map_features, sample_rff, KernelSpec};

fn main() -> rffkm::error::Result<()> {
    let spec = KernelSpec::new(1.0)?;
    let x = [0.2, -0.4, 0.1];
    let y = [-0.3, 0.1, 0.5];
    let exact = gaussian_kernel(x[..].into(), y[..].into(), &spec)?;
    println!("k(x, y) = {exact:.6}");

    for dim in [16, 256, 4096] {
        let map = sample_rff(3, dim, &spec, 42)?;
        let px = map.map_point(x[..].into())?;
        let py = map.map_point(y[..].into())?;
        let approx: f64 = px.iter().zip(&py).map(|(a, b)| a * b).sum();
        println!("D = {dim:>5}: <phi(x), phi(y)> = {approx:.6}  (error {:+.2e})", approx - exact);
    }

    // mapping a whole matrix; every row lands on the unit sphere
    let data = FeatureMatrix::from_rows(&[vec![0.0, 1.0, 2.0], vec![3.0, -1.0, 0.5]])?;
    let mapped = map_features(&data, &sample_rff(3, 64, &spec, 7)?)?;
    for row in mapped.matrix().rows() {
        println!("row norm {:.15}", row.dot(&row).sqrt());
    }

    println!("\nerror statistics over 100 pairs in the unit ball:");
    print!("{}", rff_probe_tsv(&rff_probe(5, 1.0, &[64, 256, 1024, 4096], 100, 0)?));
    Ok(())
}
