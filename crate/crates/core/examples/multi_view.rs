//! Possibilistic multi-view clustering: one informative view, one pure-noise
//! view, and the effect of freezing the typicalities.

use ndarray::{Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rffkm::data::FeatureMatrix;
use rffkm::features::KernelSpec;
use rffkm::metrics::accuracy;
use rffkm::mkpkm::{fit_mkpkm, MkpkmConfig};
use rffkm::oracles::{make_blobs, BlobSpec};

fn standardize(x: &FeatureMatrix) -> rffkm::error::Result<FeatureMatrix> {
    let a = x.as_array();
    let mean = a.mean_axis(Axis(0)).expect("non-empty");
    FeatureMatrix::new((a - &mean) / &a.std_axis(Axis(0), 0.0))
}

fn main() -> rffkm::error::Result<()> {
    let blobs = make_blobs(&BlobSpec::new(300, 3, 2, 10.0, 5))?;
    let informative = standardize(&blobs.data)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let noise = FeatureMatrix::new(Array2::from_shape_simple_fn((300, 2), || StandardNormal.sample(&mut rng)))?;
    let views = [informative, noise];
    let specs = [KernelSpec::new(2.0)?; 2];

    for lambda in [0.1, 1.0, 10.0, 100.0, 1000.0] {
        let result = fit_mkpkm(&views, &specs, &MkpkmConfig::new(3).with_seed(5).with_lambda(lambda))?;
        println!(
            "lambda {lambda:>5}: alpha = [{:.4}, {:.4}], ACC {:.3}, {} sweeps",
            result.state.alpha.as_slice()[0],
            result.state.alpha.as_slice()[1],
            accuracy(&result.assignments, &blobs.labels)?,
            result.iterations_run
        );
    }

    let frozen = fit_mkpkm(&views, &specs, &MkpkmConfig::new(3).with_seed(5).with_possibilistic(false))?;
    println!("typicalities frozen at 1: ACC {:.3}", accuracy(&frozen.assignments, &blobs.labels)?);
    Ok(())
}
