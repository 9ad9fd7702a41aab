// scratch calibration harness; not part of the deliverable surface
use lowrank_core::matrix::DenseMatrix;
use lowrank_core::operators::{MeasurementOp, ProblemInstance};
use lowrank_core::solvers::*;
use lowrank_core::synth::*;

fn completion(n: usize, rank: usize, ratio: f64, seed: u64) -> ProblemInstance {
    let spec = SyntheticSpec { n1: n, n2: n, rank, sample_ratio: ratio, noise_sigma: 0.0, seed };
    let truth = gen_low_rank(&spec).unwrap();
    let mask = gen_mask(&spec).unwrap();
    let op = MeasurementOp::entry_sampling_scaled(n, n, mask).unwrap();
    ProblemInstance::noiseless(op, truth, rank).unwrap()
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(20);
    let rank: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(2);
    let ratio: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(0.6);
    let batch: usize = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(1);
    let which = args.get(5).cloned().unwrap_or_else(|| "svrg".into());
    let seed: u64 = args.get(6).map(|s| s.parse().unwrap()).unwrap_or(7);
    let inner: Option<usize> = args.get(7).map(|s| s.parse().unwrap());

    let inst = completion(n, rank, ratio, seed);
    let m = inst.measurement_count();
    let full = default_full_step(&inst, seed).unwrap();
    let stoch = default_stochastic_step(&inst, batch).unwrap();
    eprintln!("m={m} default_full={full:.5} default_stoch={stoch:.6}");

    let clamp_mult: f64 = std::env::var("CLAMP_MULT")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(1.9);
    let outers: usize = std::env::var("OUTERS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(60);

    let mut cfg = SolverConfig::new(seed);
    cfg.outer_iterations = outers;
    cfg.tolerance = std::env::var("TOL").ok().and_then(|v| v.parse().ok()).unwrap_or(1e-8);
    cfg.batch_size = batch;
    cfg.inner_iterations = inner;
    let t0 = std::time::Instant::now();
    let out = match which.as_str() {
        "svrg" => {
            cfg.step = StepRule::BarzilaiBorwein {
                fallback: stoch,
                clamp_min: 1e-12,
                clamp_max: clamp_mult * stoch,
            };
            svrg_arm(&inst, &cfg).unwrap()
        }
        "svrgfix" => {
            cfg.step = StepRule::Fixed(stoch);
            svrg_arm(&inst, &cfg).unwrap()
        }
        "svp" => {
            cfg.step = StepRule::bb(full);
            cfg.outer_iterations = 400;
            svp(&inst, &cfg).unwrap()
        }
        "niht" => {
            cfg.step = StepRule::Fixed(full);
            cfg.outer_iterations = 400;
            niht(&inst, &cfg).unwrap()
        }
        "stoiht" => {
            cfg.step = StepRule::Fixed(stoch);
            stoiht(&inst, &cfg).unwrap()
        }
        other => panic!("unknown solver {other}"),
    };
    let dt = t0.elapsed().as_secs_f64();
    let _ = DenseMatrix::zeros(1, 1);
    for row in out.trace.rows.iter().take(8) {
        eprintln!(
            "  k={:<3} res={:.3e} err={:?} step={:.5} grads={}",
            row.outer_index, row.residual_sq, row.relative_error, row.step, row.gradient_evaluations
        );
    }
    let f = out.trace.final_row();
    if let Some(u) = out.trace.evaluations_to_residual(1e-6) { eprintln!("  crossing 1e-6 at {u} units"); }
    println!(
        "{which} n={n} r={rank} rho={ratio} b={batch}: k={} err={:.3e} res={:.3e} grads={} term={} dt={dt:.2}s",
        f.outer_index,
        f.relative_error.unwrap_or(f64::NAN),
        f.residual_sq,
        f.gradient_evaluations,
        out.terminated,
        );
}
