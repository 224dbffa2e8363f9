//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::Instant;

use qaheat::encoding::QuboProblem;
use qaheat::linalg::{norm2, DenseMatrix};
use qaheat::solver::{two_block_operators, ExactBlockSolver};
use qaheat::{
    assemble_system, check_convergence_condition, classical_gauss_seidel, condition_number, decode, direct_solve,
    encode, estimate_resources, gs_sweep, iterate, partition, relative_error, solve_exhaustive, solve_sa, Backend,
    BinaryEncoding, HeatProblem, IterationTrace, LinearSystem, SamplerParams, SolveConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SUITE_SEED: u64 = 2024;

type Outcome = Result<String, String>;
type Check = Box<dyn FnOnce(&mut Vec<IterationTrace>) -> Outcome>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn demo() -> (HeatProblem, LinearSystem, Vec<f64>) {
    let p = HeatProblem::demo();
    let sys = assemble_system(&p).unwrap();
    let x = direct_solve(&sys).unwrap();
    (p, sys, x)
}

fn qubo_config(backend: Backend, gamma: f64, seed: u64) -> SolveConfig {
    SolveConfig {
        blocks: 27,
        bits: 3,
        scale: 50.0,
        offset: 0.0,
        gamma,
        tolerance: 1e-12,
        max_iters: 30,
        backend,
        sampler: SamplerParams {
            num_reads: 20,
            sweeps: 200,
            seed,
            ..SamplerParams::default()
        },
    }
}

fn random_dense(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| rng.gen_range(-2.0..2.0)).collect())
        .collect()
}

fn energy_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED);
    let mut checked = 0usize;
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.gen_range(1..=4);
        let r = rng.gen_range(1..=3);
        let a = random_dense(&mut rng, n, n);
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
        let d: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let sys = LinearSystem::from_dense(&a, &b).unwrap();
        let enc = BinaryEncoding::new(r, c, d).unwrap();
        let q = encode(&sys, &enc).unwrap();
        for mask in 0u64..1 << q.size() {
            let bits: Vec<bool> = (0..q.size()).map(|l| mask >> l & 1 == 1).collect();
            let x = decode(&bits, &enc).unwrap();
            let direct = norm2(&sys.residual_vector(&x).unwrap()).powi(2);
            let via = q.energy(&bits).unwrap() + q.offset;
            let rel = (direct - via).abs() / direct.abs().max(q.offset.abs()).max(1.0);
            worst = worst.max(rel);
            ensure(rel <= 1e-9, || format!("direct {direct} vs qubo {via}"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} bitstrings, worst relative gap {worst:.1e}"))
}

fn bilinear_exactness() -> Outcome {
    let (p, _, x) = demo();
    let mut worst = 0.0f64;
    for (row, &t) in x.iter().enumerate() {
        let (i, j) = p.node_of_row(row);
        let (xc, yc) = (p.coordinate(i), p.coordinate(j));
        worst = worst.max((t - 100.0 * xc * yc / (p.length * p.length)).abs());
    }
    ensure(worst <= 1e-9, || format!("max deviation {worst:e}"))?;
    Ok(format!("{} nodes, max deviation {worst:.1e}", x.len()))
}

fn resource_counts() -> Outcome {
    let full = estimate_resources(81, 7, 1).map_err(|e| e.to_string())?;
    let blocked = estimate_resources(81, 7, 11).map_err(|e| e.to_string())?;
    ensure(full.full_system_qubits == 567, || {
        format!("{} qubits", full.full_system_qubits)
    })?;
    ensure(blocked.block_size == 8 && blocked.qubits_per_block == 56, || {
        format!("block {} / {} qubits", blocked.block_size, blocked.qubits_per_block)
    })?;
    Ok("567 qubits for the full system, 56 per block of 8".into())
}

fn exact_block_config() -> SolveConfig {
    SolveConfig {
        blocks: 9,
        tolerance: 1e-10,
        max_iters: 200,
        backend: Backend::Exact,
        ..SolveConfig::default()
    }
}

fn classical_block_convergence() -> Outcome {
    let (_, sys, x) = demo();
    let start = Instant::now();
    let trace = iterate(&sys, &exact_block_config(), Some(&x)).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(trace.converged, || {
        format!("not converged after {}", trace.iterations())
    })?;
    let res = trace.residuals();
    ensure(res.windows(2).all(|w| w[1] <= w[0]), || "residual increased".into())?;
    ensure(elapsed.as_secs_f64() < 1.0, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "residual {:.1e} after {} iterations in {:.0?}",
        res.last().unwrap(),
        trace.iterations(),
        elapsed
    ))
}

fn quantized_floor(config: &SolveConfig, x: &[f64]) -> f64 {
    let enc = config.initial_encoding(x.len()).unwrap();
    let q: Vec<f64> = x.iter().enumerate().map(|(i, &v)| enc.quantize(i, v)).collect();
    relative_error(&q, x).unwrap()
}

fn plateau(traces: &mut Vec<IterationTrace>) -> Outcome {
    let (_, sys, x) = demo();
    let config = qubo_config(Backend::Exhaustive, 1.0, SUITE_SEED);
    let trace = iterate(&sys, &config, Some(&x)).map_err(|e| e.to_string())?;
    let e = trace.errors();
    let floor = quantized_floor(&config, &x);
    let classical = classical_gauss_seidel(&sys, 1e-12, 2000, Some(&x)).map_err(|e| e.to_string())?;
    let classical_e = *classical.errors().last().unwrap();
    let last = *e.last().unwrap();
    ensure(last >= floor, || {
        format!("final error {last} below quantized floor {floor}")
    })?;
    ensure(e[19] - e[9] <= 1e-12, || format!("e20 - e10 = {:e}", e[19] - e[9]))?;
    ensure(classical_e < 1e-8, || format!("classical error {classical_e:e}"))?;
    let summary = format!(
        "e30 {last:.4} >= floor {floor:.4}, e20-e10 {:.1e}, classical {classical_e:.1e}",
        e[19] - e[9]
    );
    traces.push(trace);
    traces.push(classical);
    Ok(summary)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn shrink_improvement(traces: &mut Vec<IterationTrace>) -> Outcome {
    let (_, sys, x) = demo();
    let fixed =
        iterate(&sys, &qubo_config(Backend::Exhaustive, 1.0, SUITE_SEED), Some(&x)).map_err(|e| e.to_string())?;
    let shrunk =
        iterate(&sys, &qubo_config(Backend::Exhaustive, 0.8, SUITE_SEED), Some(&x)).map_err(|e| e.to_string())?;
    let (e_fixed, e_shrunk) = (*fixed.errors().last().unwrap(), *shrunk.errors().last().unwrap());
    ensure(e_shrunk * 10.0 <= e_fixed, || {
        format!("e30 {e_shrunk:e} vs {e_fixed:e}")
    })?;

    let sa: Vec<IterationTrace> = (1..=5)
        .map(|seed| iterate(&sys, &qubo_config(Backend::Annealing, 0.8, seed), Some(&x)))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let medians: Vec<f64> = (0..30)
        .map(|k| median(sa.iter().map(|t| t.records[k].relative_error.unwrap()).collect()))
        .collect();
    if let Some(k) = medians.windows(2).position(|w| w[1] >= w[0]) {
        return Err(format!(
            "median error rose at k={}: {:e} -> {:e}",
            k + 2,
            medians[k],
            medians[k + 1]
        ));
    }
    let summary = format!(
        "e30 {e_shrunk:.2e} vs {e_fixed:.2e} ({:.0}x); SA median {:.2e} -> {:.2e} strictly decreasing",
        e_fixed / e_shrunk,
        medians[0],
        medians[29]
    );
    traces.extend([fixed, shrunk]);
    traces.extend(sa);
    Ok(summary)
}

/// Encoded random systems, random QUBOs and encoded heat blocks, all with
/// at most 12 binary variables.
fn corpus() -> Vec<QuboProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED ^ 0x5a);
    let mut out = Vec::new();
    for _ in 0..40 {
        let n = rng.gen_range(1..=4);
        let r = rng.gen_range(1..=3);
        let a = random_dense(&mut rng, n, n);
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let sys = LinearSystem::from_dense(&a, &b).unwrap();
        out.push(encode(&sys, &BinaryEncoding::uniform(n, r, 1.5, 1.0).unwrap()).unwrap());
    }
    for _ in 0..30 {
        let n = rng.gen_range(1..=12);
        let mut q = QuboProblem::new((0..n).map(|_| rng.gen_range(-2.0..2.0)).collect());
        for l in 0..n {
            for k in l + 1..n {
                if rng.gen_bool(0.5) {
                    q.add_interaction(l, k, rng.gen_range(-2.0..2.0));
                }
            }
        }
        out.push(q);
    }
    let (_, sys, _) = demo();
    for (blocks, bits) in [(27, 3), (27, 4), (21, 3)] {
        for range in partition(81, blocks).unwrap().blocks() {
            let a = sys.a.principal_block(range.clone());
            let block = LinearSystem::new(a, sys.b[range.clone()].to_vec()).unwrap();
            let enc = BinaryEncoding::uniform(range.len(), bits, 50.0, 0.0).unwrap();
            out.push(encode(&block, &enc).unwrap());
        }
    }
    out.retain(|q| q.size() <= 12);
    out
}

fn sa_oracle_agreement() -> Outcome {
    let problems = corpus();
    let params = SamplerParams {
        num_reads: 50,
        seed: SUITE_SEED,
        ..SamplerParams::default()
    };
    for (idx, q) in problems.iter().enumerate() {
        let exact = solve_exhaustive(q).map_err(|e| e.to_string())?.best().energy;
        let sa = solve_sa(q, &params).map_err(|e| e.to_string())?.best().energy;
        ensure(sa == exact, || {
            format!("problem {idx} ({} bits): sa {sa} vs {exact}", q.size())
        })?;
    }
    Ok(format!("{} problems, all minima matched", problems.len()))
}

fn convergence_condition() -> Outcome {
    let (_, sys, _) = demo();
    let heat = check_convergence_condition(&sys, &partition(81, 2).unwrap()).map_err(|e| e.to_string())?;
    ensure(heat.sufficient, || format!("heat half-split rejected: {heat:?}"))?;
    let bad = LinearSystem::from_dense(&[vec![1.0, 2.0], vec![2.0, 1.0]], &[1.0, 1.0]).unwrap();
    let bad_report = check_convergence_condition(&bad, &partition(2, 2).unwrap()).map_err(|e| e.to_string())?;
    ensure(!bad_report.sufficient, || {
        format!("[[1,2],[2,1]] accepted: {bad_report:?}")
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED);
    let parts = partition(4, 2).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let mut a = random_dense(&mut rng, 4, 4);
        for (i, row) in a.iter_mut().enumerate() {
            row[i] += 5.0;
        }
        let b: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sys = LinearSystem::from_dense(&a, &b).unwrap();
        let exact = direct_solve(&sys).unwrap();
        let (m1, m2): (DenseMatrix, DenseMatrix) = two_block_operators(&sys, &parts).map_err(|e| e.to_string())?;
        let mut x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut prev: Option<Vec<f64>> = None;
        for _ in 0..5 {
            x = gs_sweep(&sys, &parts, &x, &mut ExactBlockSolver)
                .map_err(|e| e.to_string())?
                .x;
            let err: Vec<f64> = x.iter().zip(&exact).map(|(u, v)| u - v).collect();
            if let Some(p) = &prev {
                let scale = norm2(p);
                if scale > 1e-12 {
                    let pred: Vec<f64> = [m1.mul_vec(&p[0..2]).unwrap(), m2.mul_vec(&p[2..4]).unwrap()].concat();
                    let gap = pred.iter().zip(&err).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max) / scale;
                    worst = worst.max(gap);
                }
            }
            prev = Some(err);
        }
    }
    ensure(worst <= 1e-8, || format!("contraction mismatch {worst:e}"))?;
    Ok(format!(
        "heat split norms {:.3}/{:.3}, [[1,2],[2,1]] rejected, operator gap {worst:.1e}",
        heat.first_block_norm, heat.second_block_norm
    ))
}

fn sweep_determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("qaheat-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let cfg = dir.join("sweep.ini");
    std::fs::write(
        &cfg,
        "[problem]\nm = 6\n[solver]\nmax_iters = 8\nnum_reads = 10\nsweeps = 200\nnoise_p = 0.01\n\
         [sweep]\nbackends = sa, exhaustive, exact\nbits = 2, 3\nblocks = 5, 9\ngammas = 1.0, 0.8\nseeds = 1, 2, 3\n",
    )
    .map_err(|e| e.to_string())?;
    let run = |name: &str| -> Result<Vec<u8>, String> {
        let status = Command::new(env!("CARGO_BIN_EXE_qaheat"))
            .arg("sweep")
            .arg(&cfg)
            .arg("--out-dir")
            .arg(dir.join(name))
            .output()
            .map_err(|e| e.to_string())?
            .status;
        ensure(status.success(), || format!("sweep exited with {status}"))?;
        std::fs::read(dir.join(name).join("sweep.csv")).map_err(|e| e.to_string())
    };
    let (a, b) = (run("a")?, run("b")?);
    let _ = std::fs::remove_dir_all(&dir);
    ensure(a == b, || "combined CSV differs between runs".into())?;
    Ok(format!("72 combinations, {} bytes identical", a.len()))
}

fn error_residual_bound(traces: &[IterationTrace]) -> Outcome {
    let (_, sys, _) = demo();
    let kappa = condition_number(&sys).map_err(|e| e.to_string())?.kappa;
    let mut points = 0;
    let mut tightest = 0.0f64;
    for t in traces {
        for r in &t.records {
            let Some(e) = r.relative_error else { continue };
            ensure(e <= kappa * r.residual * (1.0 + 1e-6), || {
                format!("k={}: e {e:e} > kappa {kappa} * r {:e}", r.k, r.residual)
            })?;
            if r.residual > 0.0 {
                tightest = tightest.max(e / (kappa * r.residual));
            }
            points += 1;
        }
    }
    ensure(points > 0, || "no trace points".into())?;
    Ok(format!(
        "{points} points, kappa {kappa:.3}, max e/(kappa r) {tightest:.3}"
    ))
}

fn main() -> ExitCode {
    let (_, sys, x) = demo();
    let mut traces = vec![iterate(&sys, &exact_block_config(), Some(&x)).unwrap()];
    let checks: Vec<(&str, Check)> = vec![
        ("QUBO energy identity", Box::new(|_| energy_identity())),
        ("bilinear exactness", Box::new(|_| bilinear_exactness())),
        ("resource counts", Box::new(|_| resource_counts())),
        (
            "classical block GS convergence",
            Box::new(|_| classical_block_convergence()),
        ),
        ("plateau with fixed interval", Box::new(plateau)),
        ("shrink improvement", Box::new(shrink_improvement)),
        ("SA oracle agreement", Box::new(|_| sa_oracle_agreement())),
        ("two-block convergence condition", Box::new(|_| convergence_condition())),
        ("sweep determinism", Box::new(|_| sweep_determinism())),
        (
            "error-residual bound",
            Box::new(|t: &mut Vec<IterationTrace>| error_residual_bound(t)),
        ),
    ];
    let mut failed = 0;
    for (n, (name, check)) in checks.into_iter().enumerate() {
        let start = Instant::now();
        let outcome =
            catch_unwind(AssertUnwindSafe(|| check(&mut traces))).unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.1}s]", n + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} [{secs:.1}s]", n + 1);
            }
        }
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
