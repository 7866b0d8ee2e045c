//! Single-view kernel power k-means on synthetic blobs.

use rffkm::features::KernelSpec;
use rffkm::kpkm::{fit_kpkm, KpkmConfig};
use rffkm::metrics::score;
use rffkm::oracles::{make_blobs, BlobSpec};

fn main() -> rffkm::error::Result<()> {
    let blobs = make_blobs(&BlobSpec::new(600, 4, 2, 6.0, 1))?;
    let config = KpkmConfig::new(4).with_seed(1).with_kernel(KernelSpec::new(5.0)?);
    let result = fit_kpkm(&blobs.data, &config)?;

    let scores = score(&result.assignments, &blobs.labels)?;
    println!(
        "D = {}, iterations = {}, converged = {}, final s = {:.1}",
        config.rff_dim_or_default(),
        result.iterations_run,
        result.converged,
        result.final_s
    );
    println!("ACC {:.3}  NMI {:.3}  Purity {:.3}", scores.acc, scores.nmi, scores.purity);

    println!("\niter        s   objective");
    for p in result.trace.iter().step_by(5) {
        println!("{:>4}  {:>7.2}  {:.6e}", p.iteration, p.s, p.objective);
    }
    Ok(())
}
