//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use qsvd_core::matcore::{svd, MatR};
use qsvd_core::models::{two_state_generator, RateModel, TwoStateGenerator};
use qsvd_core::odeflow::{propagate_matrix, propagator, seed_factors};
use qsvd_core::pipeline::{run_qsvd, write_csv, RunConfig};
use qsvd_core::qsim::{dilation_statevector, evolve_sigma_phase, Backend, Fidelity, NoiseSpec};
use qsvd_core::svdeom::{mpea, reconstruct_phi, snapshot_from_weights, FactorFlow, SvdFactors};
use qsvd_core::Tolerances;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn demo_flow(n_steps: usize) -> (FactorFlow<f64>, TwoStateGenerator) {
    let g = two_state_generator(RateModel::demo()).unwrap();
    let tol = Tolerances::default();
    let h = (1e4 - 50.0) / n_steps as f64;
    let seeds = seed_factors(&g, 50.0, h, 500, &tol).unwrap();
    (FactorFlow::from_seeds(seeds, &g, h, &tol).unwrap(), g)
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let run = run_qsvd(&RunConfig { mode: Fidelity::Exact, ..RunConfig::default() });
    let secs = start.elapsed().as_secs_f64();
    match run {
        Ok(r) => {
            let dev = r.summary.max_abs_dev_p_d;
            (dev <= 1e-3 && secs < 10.0, format!("max |dP_D| = {dev:.2e} (<= 1e-3), runtime {secs:.2} s (< 10 s)"))
        }
        Err(e) => (false, format!("run failed: {e}")),
    }
}

// max over steps of ‖reconstruct_phi − Φ‖_max, and the terminal gap
fn flow_gaps(n_steps: usize) -> (f64, f64) {
    let (mut flow, g) = demo_flow(n_steps);
    let tol = Tolerances::default();
    let mut phi = propagator(&g, 0.0, 50.0, 20_000).unwrap();
    let mut t = 50.0;
    let mut worst: f64 = 0.0;
    let mut last = 0.0;
    for _ in 0..n_steps {
        flow.step(&g, &tol).unwrap();
        phi = propagate_matrix(&g, &phi, t, flow.factors.t, 200).unwrap();
        t = flow.factors.t;
        last = (&reconstruct_phi(&flow.factors, &tol).unwrap() - &phi).max_abs();
        worst = worst.max(last);
    }
    (worst, last)
}

fn factor_flow_fidelity() -> Outcome {
    let (worst, end400) = flow_gaps(400);
    let (_, end800) = flow_gaps(800);
    let ratio = end400 / end800;
    (
        worst <= 1e-4 && ratio >= 1.8,
        format!("max gap {worst:.2e} (<= 1e-4), terminal gap ratio h/(h/2) = {ratio:.2} (>= 1.8)"),
    )
}

fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> MatR<f64> {
    let m = MatR::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let r = svd(&m).unwrap();
    r.u.matmul(&r.v.transpose())
}

fn unit_vector(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

fn dilation_brute_force() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let tol = Tolerances::default().unitarity;
    let mut worst: f64 = 0.0;
    for n in [2usize, 4] {
        for _ in 0..50 {
            let m = MatR::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let r = svd(&m).unwrap();
            // contraction: largest singular value scaled into (0, 1)
            let phi = m.scale(rng.random_range(0.2..0.99) / r.s[0]);
            let r = svd(&phi).unwrap();
            let f = SvdFactors::from_parts(0.0, r.u, r.v, &r.s).unwrap();
            let v0 = unit_vector(n, &mut rng);
            let (amps, acc) = dilation_statevector(&v0, &f, tol).unwrap();
            let target = phi.matvec(&v0);
            for (a, t) in amps.iter().zip(&target) {
                worst = worst.max((a - Complex64::new(t / f.sigma1, 0.0)).norm());
            }
            let norm2: f64 = target.iter().map(|x| x * x).sum();
            worst = worst.max((acc - norm2 / (f.sigma1 * f.sigma1)).abs());
        }
    }
    let mut acc_err: f64 = 0.0;
    for n in [2usize, 4] {
        let q = random_orthogonal(n, &mut rng);
        let f = SvdFactors::from_parts(0.0, q, MatR::identity(n), &vec![1.0; n]).unwrap();
        let (_, acc) = dilation_statevector(&unit_vector(n, &mut rng), &f, tol).unwrap();
        acc_err = acc_err.max((acc - 1.0).abs());
    }
    (
        worst <= 1e-10 && acc_err <= 1e-10,
        format!("max amplitude error {worst:.2e} (<= 1e-10), unitary acceptance |1 - a| = {acc_err:.2e}"),
    )
}

fn structure_invariants() -> Outcome {
    let (mut flow, g) = demo_flow(400);
    let tol = Tolerances::default();
    let (mut ou, mut ov, mut modulus): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut first_exact = true;
    let mut skew = true;
    for _ in 0..400 {
        let mid = flow.step(&g, &tol).unwrap();
        let f = &flow.factors;
        ou = ou.max(f.u.orthogonality_error());
        ov = ov.max(f.v.orthogonality_error());
        for z in &f.sigma_plus {
            modulus = modulus.max((z.norm() - 1.0).abs());
        }
        first_exact &= f.sigma_plus[0] == Complex64::new(1.0, 0.0);
        skew &= mid.z == mid.z.transpose().scale(-1.0) && mid.w == mid.w.transpose().scale(-1.0);
    }
    let pass = ou <= 1e-9 && ov <= 1e-9 && modulus <= 1e-9 && first_exact && skew;
    (
        pass,
        format!(
            "orthogonality U {ou:.1e} V {ov:.1e}, | |s+| - 1 | {modulus:.1e} (<= 1e-9), s+_1 == 1: {first_exact}, Z/W exactly skew: {skew}"
        ),
    )
}

fn scaling_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let tol = Tolerances::default();
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let n = 2 + i % 4;
        let u = random_orthogonal(n, &mut rng);
        let s1 = rng.random_range(0.5..20.0);
        let mut tilde: Vec<f64> = (1..n).map(|_| rng.random_range(0.05..0.95)).collect();
        tilde.sort_by(|a, b| b.partial_cmp(a).unwrap());
        tilde.insert(0, 1.0);
        let sigma: Vec<f64> = tilde.iter().map(|x| x * s1).collect();
        let a = MatR::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let (x, y) = match (
            snapshot_from_weights(&u, &sigma, &a, 0.0, &tol),
            snapshot_from_weights(&u, &tilde, &a, 0.0, &tol),
        ) {
            (Ok(x), Ok(y)) => (x, y),
            // near-equal random draws are legitimately rejected
            (Err(_), Err(_)) => continue,
            _ => return (false, format!("guards disagree on factor set {i}")),
        };
        let rel = |p: f64, q: f64| (p - q).abs() / p.abs().max(1.0);
        for (p, q) in x.z.as_slice().iter().zip(y.z.as_slice()).chain(x.w.as_slice().iter().zip(y.w.as_slice())) {
            worst = worst.max(rel(*p, *q));
        }
        for (p, q) in x.lplus.iter().zip(&y.lplus) {
            worst = worst.max(rel(*p, *q));
        }
    }
    (worst <= 1e-12, format!("max entrywise difference {worst:.2e} over 100 factor sets (<= 1e-12)"))
}

fn mpea_order() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (a, b, c) = (
        MatR::from_fn(3, 3, |_, _| rng.random_range(-2.0..2.0)),
        MatR::from_fn(3, 3, |_, _| rng.random_range(-2.0..2.0)),
        MatR::from_fn(3, 3, |_, _| rng.random_range(-2.0..2.0)),
    );
    let (t, h) = (1.3, 0.2);
    let affine = |s: f64| a.axpy(s, &b);
    let e_aff = (&mpea(&affine(t), &affine(t - h), &affine(t - 2.0 * h)).unwrap() - &affine(t + h / 2.0)).max_abs();
    let quad = |s: f64| affine(s).axpy(s * s, &c);
    let defect = &mpea(&quad(t), &quad(t - h), &quad(t - 2.0 * h)).unwrap() - &quad(t + h / 2.0);
    let expect = c.scale(h * h / 12.0);
    let e_quad = (&defect - &expect).max_abs();
    (
        e_aff <= 1e-12 && e_quad <= 1e-10,
        format!("affine error {e_aff:.1e} (<= 1e-12), quadratic defect - c h^2/12 = {e_quad:.1e} (<= 1e-10)"),
    )
}

fn shot_noise_scaling() -> Outcome {
    let shots = [10_000u64, 100_000, 1_000_000];
    let seeds = 12u64;
    let mut pts = Vec::new();
    for &n in &shots {
        let mut sum = 0.0;
        for seed in 0..seeds {
            let cfg = RunConfig { mode: Fidelity::Sampled, n_shots: n, rng_seed: seed, ..RunConfig::default() };
            match run_qsvd(&cfg) {
                Ok(r) => sum += r.summary.terminal_dev_p_d,
                Err(e) => return (false, format!("sampled run n={n} seed={seed} failed: {e}")),
            }
        }
        pts.push(((n as f64).log10(), (sum / seeds as f64).log10()));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let slope =
        pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let means: Vec<String> = pts.iter().map(|p| format!("{:.2e}", 10f64.powf(p.1))).collect();
    (
        (slope + 0.5).abs() <= 0.1,
        format!("slope {slope:.3} (-0.5 +/- 0.1), mean terminal |dP_D| {} over {seeds} seeds", means.join(" / ")),
    )
}

fn noise_degradation() -> Outcome {
    let noise = NoiseSpec { p1: 1e-3, p2: 1e-2, p_ro: 1e-2 };
    let runs = 10;
    let mut sums = vec![0.0; 400];
    for seed in 0..runs {
        let cfg = RunConfig { mode: Fidelity::Noisy, noise, rng_seed: seed, ..RunConfig::default() };
        match run_qsvd(&cfg) {
            Ok(r) => {
                for (s, rec) in sums.iter_mut().zip(&r.records[1..]) {
                    *s += (rec.p_d_qsvd - rec.p_d_ref).abs();
                }
            }
            Err(e) => return (false, format!("noisy run seed {seed} aborted: {e}")),
        }
    }
    let windows: Vec<f64> = sums.chunks(50).map(|c| c.iter().sum::<f64>() / (50 * runs) as f64).collect();
    let monotone = windows.windows(2).all(|w| w[1] >= w[0]);
    let text: Vec<String> = windows.iter().map(|w| format!("{w:.2e}")).collect();
    (monotone, format!("{runs} runs finite, 50-step window means {}", text.join(" ")))
}

fn phase_reconstruction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let backend = Backend::sampled(1_000_000);
    let mut worst: f64 = 0.0;
    for n in [2usize, 4, 8] {
        let mut phases: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        phases[0] = 0.0;
        let out = match evolve_sigma_phase(&phases, &vec![0.0; n], 1.0, &backend, 77, n as u64) {
            Ok(o) => o,
            Err(e) => return (false, format!("N = {n}: {e}")),
        };
        for ((est, truth), se) in out.phases.iter().zip(&phases).zip(&out.stderr).skip(1) {
            worst = worst.max((est - truth).abs() / se);
        }
    }
    (worst <= 3.0, format!("max |phi_hat - phi| / stderr = {worst:.2} (<= 3) for N = 2, 4, 8"))
}

fn determinism() -> Outcome {
    let bytes = |mode, noise| {
        let cfg = RunConfig { mode, noise, n_shots: 100_000, rng_seed: 31, ..RunConfig::default() };
        let run = run_qsvd(&cfg).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &run.records).unwrap();
        buf
    };
    let noise = NoiseSpec { p1: 1e-3, p2: 1e-2, p_ro: 1e-2 };
    let sampled = bytes(Fidelity::Sampled, NoiseSpec::NONE) == bytes(Fidelity::Sampled, NoiseSpec::NONE);
    let noisy = bytes(Fidelity::Noisy, noise) == bytes(Fidelity::Noisy, noise);
    (sampled && noisy, format!("byte-identical trajectories: sampled {sampled}, noisy {noisy}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("oracle equivalence (exact mode vs reference)", oracle_equivalence),
        ("factor-flow fidelity", factor_flow_fidelity),
        ("dilation brute force", dilation_brute_force),
        ("structure invariants", structure_invariants),
        ("scaling invariance", scaling_invariance),
        ("MPEA order", mpea_order),
        ("shot-noise scaling", shot_noise_scaling),
        ("noise degradation and stability", noise_degradation),
        ("phase reconstruction", phase_reconstruction),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (pass, detail) = check();
        println!("criterion {:>2} {} {name}: {detail}", i + 1, if pass { "PASS" } else { "FAIL" });
        if !pass {
            failed += 1;
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
