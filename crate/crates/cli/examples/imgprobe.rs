use lowrank_cli::experiments::{image_complete, ImageTask};
use lowrank_cli::config::{RunConfig, SolverKind};
use lowrank_cli::pixmap::synthetic_test_image;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let size: usize = args[1].parse().unwrap();
    let rank: usize = args[2].parse().unwrap();
    let ratio: f64 = args[3].parse().unwrap();
    let batch: usize = args[4].parse().unwrap();
    let outers: usize = args[5].parse().unwrap();
    let which = args.get(6).cloned().unwrap_or("svrg".into());
    let seed: u64 = args.get(7).map(|s| s.parse().unwrap()).unwrap_or(3);
    let kind = SolverKind::parse(&which).unwrap();

    let img = synthetic_test_image(size);
    let task = ImageTask { source: img, observed_fraction: ratio, mask_seed: seed, rank, per_channel: false };
    let mut base = RunConfig::default();
    base.batch_size = batch;
    base.outer_iterations = outers;
    if let Ok(v) = std::env::var("BBMAX") {
        base.bb_clamp_max = Some(v.parse().unwrap());
    }
    let t0 = std::time::Instant::now();
    let out = image_complete(&task, kind, &base).unwrap();
    println!("{which} size={size} r={rank} rho={ratio} b={batch} K={outers}: psnr={:.2} ssim={:.4} grads={} term={} dt={:.1}s",
        out.psnr, out.ssim, out.gradient_evaluations, out.terminated, t0.elapsed().as_secs_f64());

    if std::env::var("TRACE").is_ok() {
        use lowrank_core::operators::{MeasurementOp, ProblemInstance};
        use lowrank_core::synth::{gen_mask, SyntheticSpec};
        let spec = SyntheticSpec { n1: size, n2: size, rank, sample_ratio: ratio, noise_sigma: 0.0, seed };
        let mask = gen_mask(&spec).unwrap();
        let truth = synthetic_test_image(size).luminance();
        let op = MeasurementOp::entry_sampling_scaled(size, size, mask).unwrap();
        let inst = ProblemInstance::noiseless(op, truth, rank).unwrap();
        let scfg = base.solver_config(kind, &inst, lowrank_core::rng::mix_seed(seed, &[0x696d67, 0])).unwrap();
        let run = lowrank_cli::experiments::run_solver(kind, &inst, &scfg, &base).unwrap();
        for row in &run.trace.rows {
            if row.outer_index % 10 == 0 || row.outer_index + 5 > base.outer_iterations {
                eprintln!("  k={:<4} res={:.4e} err={:?} step={:.5}", row.outer_index, row.residual_sq, row.relative_error, row.step);
            }
        }
    }
}
