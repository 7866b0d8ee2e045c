//! Compare the feature-space solver against the exact kernel-trick oracle on a
//! small problem.

use rffkm::features::KernelSpec;
use rffkm::kpkm::{fit_kpkm, KpkmConfig};
use rffkm::oracles::{exact_kpkm, kkm_cost_kernel, make_blobs, BlobSpec};

fn main() -> rffkm::error::Result<()> {
    let spec = KernelSpec::new(3.0)?;
    println!("seed  D      approx cost  exact cost");
    for seed in 0..5 {
        let blobs = make_blobs(&BlobSpec::new(40, 3, 2, 4.0, seed))?;
        for dim in [16, 4096] {
            let config = KpkmConfig::new(3).with_seed(seed).with_kernel(spec).with_rff_dim(dim);
            let approx = fit_kpkm(&blobs.data, &config)?;
            let exact = exact_kpkm(&blobs.data, &config)?;
            println!(
                "{seed:>4}  {dim:<5}  {:>11.5}  {:>10.5}",
                kkm_cost_kernel(&blobs.data, &approx.assignments, &spec)?,
                kkm_cost_kernel(&blobs.data, &exact.assignments, &spec)?
            );
        }
    }
    Ok(())
}
