//! Ready-made problem setups: two disjoint uniforms and a synthetic
//! two-source position estimate.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::cdf::{CdfSpec, SampleSet};
use crate::grid::Domain;
use crate::Result;

/// `F0` uniform on `[0,1]²`, `G0` uniform on `[2,3]²`, domain `[0,3]²`.
pub fn two_uniforms() -> (Domain, CdfSpec, CdfSpec) {
    let domain = Domain::new(vec![0.0, 0.0], vec![3.0, 3.0]).expect("valid box");
    let f0 = CdfSpec::UniformBox {
        lower: vec![0.0, 0.0],
        upper: vec![1.0, 1.0],
    };
    let g0 = CdfSpec::UniformBox {
        lower: vec![2.0, 2.0],
        upper: vec![3.0, 3.0],
    };
    (domain, f0, g0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct UuvSynthetic {
    pub domain: Domain,
    /// Primary sensor readings, clustered around `f_mean`.
    pub f_samples: SampleSet,
    /// Secondary source, clustered around `g_mean`.
    pub g_samples: SampleSet,
    pub f_mean: [f64; 2],
    pub g_mean: [f64; 2],
}

pub const UUV_F_MEAN: [f64; 2] = [3.5, 4.0];
pub const UUV_G_MEAN: [f64; 2] = [6.0, 6.5];
pub const UUV_SIGMA: f64 = 0.8;

/// Seeded Gaussian position samples on `[0,10]²` for two sources with offset
/// means; draws outside the domain are rejected.
pub fn uuv_synthetic(seed: u64, samples_per_source: usize) -> Result<UuvSynthetic> {
    let domain = Domain::new(vec![0.0, 0.0], vec![10.0, 10.0])?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, UUV_SIGMA).expect("positive sigma");
    let mut draw = |mean: [f64; 2]| -> Result<SampleSet> {
        let mut pts = Vec::with_capacity(samples_per_source);
        while pts.len() < samples_per_source {
            let p = vec![mean[0] + normal.sample(&mut rng), mean[1] + normal.sample(&mut rng)];
            if domain.contains(&p) {
                pts.push(p);
            }
        }
        SampleSet::new(pts, None)
    };
    let f_samples = draw(UUV_F_MEAN)?;
    let g_samples = draw(UUV_G_MEAN)?;
    Ok(UuvSynthetic {
        domain,
        f_samples,
        g_samples,
        f_mean: UUV_F_MEAN,
        g_mean: UUV_G_MEAN,
    })
}
