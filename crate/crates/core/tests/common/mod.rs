use lowrank_core::matrix::DenseMatrix;
use lowrank_core::operators::{MeasurementOp, ProblemInstance};
use lowrank_core::rng::{mix_seed, stream};
use lowrank_core::synth::{add_noise, gen_low_rank, gen_mask, SyntheticSpec};
use rand_distr::{Distribution, StandardNormal};

/// Noiseless matrix-completion instance with the default operator scaling.
pub fn completion_instance(n: usize, rank: usize, ratio: f64, seed: u64) -> ProblemInstance {
    let spec = SyntheticSpec {
        n1: n,
        n2: n,
        rank,
        sample_ratio: ratio,
        noise_sigma: 0.0,
        seed,
    };
    let truth = gen_low_rank(&spec).unwrap();
    let mask = gen_mask(&spec).unwrap();
    let op = MeasurementOp::entry_sampling_scaled(n, n, mask).unwrap();
    ProblemInstance::noiseless(op, truth, rank).unwrap()
}

/// Completion instance with additive Gaussian measurement noise.
#[allow(dead_code)]
pub fn noisy_completion_instance(
    n: usize,
    rank: usize,
    ratio: f64,
    sigma: f64,
    seed: u64,
) -> ProblemInstance {
    let spec = SyntheticSpec {
        n1: n,
        n2: n,
        rank,
        sample_ratio: ratio,
        noise_sigma: sigma,
        seed,
    };
    let truth = gen_low_rank(&spec).unwrap();
    let mask = gen_mask(&spec).unwrap();
    let op = MeasurementOp::entry_sampling_scaled(n, n, mask).unwrap();
    let clean = lowrank_core::operators::apply_op(&op, &truth).unwrap();
    let y = add_noise(&clean, sigma, mix_seed(seed, &[99])).unwrap();
    ProblemInstance::new(op, y, rank, Some(truth), false).unwrap()
}

/// Gaussian sensing ensemble instance (standard normal entries).
#[allow(dead_code)]
pub fn gaussian_instance(n: usize, m: usize, rank: usize, seed: u64) -> ProblemInstance {
    let mut rng = stream(seed);
    let sensing: Vec<DenseMatrix> = (0..m)
        .map(|_| DenseMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng)))
        .collect();
    let op = MeasurementOp::dense_ensemble(sensing).unwrap();
    let l = DenseMatrix::from_fn(n, rank, |_, _| StandardNormal.sample(&mut rng));
    let r = DenseMatrix::from_fn(rank, n, |_, _| StandardNormal.sample(&mut rng));
    ProblemInstance::noiseless(op, l.matmul(&r).unwrap(), rank).unwrap()
}
