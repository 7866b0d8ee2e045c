//! Accuracy against the number of random features on overlapping blobs.

use rffkm::cli::{dim_sweep, dim_sweep_tsv};
use rffkm::data::LabelVector;
use rffkm::features::{recommended_dim, KernelSpec};
use rffkm::kpkm::KpkmConfig;
use rffkm::oracles::{make_blobs, BlobSpec};

fn main() -> rffkm::error::Result<()> {
    let blobs = make_blobs(&BlobSpec::new(300, 3, 2, 3.0, 9))?;
    let labels = LabelVector::new(blobs.labels.clone())?;
    let base = KpkmConfig::new(3).with_kernel(KernelSpec::new(2.0)?);
    let dims: Vec<usize> = (5..=100).step_by(5).collect();
    let seeds: Vec<u64> = (0..20).collect();

    let rows = dim_sweep(&blobs.data, &labels, &base, &dims, &seeds)?;
    print!("{}", dim_sweep_tsv(&rows));
    println!("recommended D for k = 3: {}", recommended_dim(3));
    Ok(())
}
