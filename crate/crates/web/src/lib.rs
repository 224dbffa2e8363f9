//! Browser bindings: solve the demo plate, trace the error, and show the
//! values one variable can take at a given shrink iteration.

use qaheat::{
    assemble_system, direct_solve, grid_to_field, iterate, shrink_encoding, Backend, BinaryEncoding, HeatProblem,
    IterationTrace, SamplerParams, SolveConfig,
};
use wasm_bindgen::prelude::*;

/// Parameters shared by the solve entry points.
#[derive(Debug, Clone, Copy)]
pub struct DemoParams<'a> {
    pub m: usize,
    pub blocks: usize,
    pub bits: usize,
    pub gamma: f64,
    pub iterations: usize,
    pub backend: &'a str,
    pub seed: u64,
}

fn run(p: &DemoParams) -> qaheat::Result<(HeatProblem, IterationTrace)> {
    let problem = HeatProblem::new(p.m, 1.0, qaheat::Boundary::ramp());
    let system = assemble_system(&problem)?;
    let exact = direct_solve(&system)?;
    let config = SolveConfig {
        blocks: p.blocks,
        bits: p.bits,
        scale: 50.0,
        offset: 0.0,
        gamma: p.gamma,
        tolerance: 1e-12,
        max_iters: p.iterations,
        backend: Backend::parse(p.backend)?,
        sampler: SamplerParams {
            num_reads: 10,
            sweeps: 200,
            seed: p.seed,
            ..SamplerParams::default()
        },
    };
    let trace = iterate(&system, &config, Some(&exact))?;
    Ok((problem, trace))
}

/// Final temperatures on the `(m+1)^2` node grid, row `j` major, boundary included.
pub fn field_values(p: &DemoParams) -> qaheat::Result<Vec<f64>> {
    let (problem, trace) = run(p)?;
    let x = trace
        .solution()
        .map(<[f64]>::to_vec)
        .unwrap_or_else(|| vec![0.0; problem.unknowns()]);
    Ok(grid_to_field(&x, &problem)?.values().to_vec())
}

/// Relative error after each iteration.
pub fn error_values(p: &DemoParams) -> qaheat::Result<Vec<f64>> {
    Ok(run(p)?.1.errors())
}

/// Every value one variable can represent at iteration `k`, centred on `center`.
pub fn level_values(bits: usize, scale: f64, gamma: f64, k: usize, center: f64) -> qaheat::Result<Vec<f64>> {
    let initial = BinaryEncoding::uniform(1, bits, scale, 0.0)?;
    // The first iteration always uses the configured interval.
    let enc = if k <= 1 {
        initial
    } else {
        shrink_encoding(&initial, &[center], gamma, k)?
    };
    let (lo, _) = enc.interval(0);
    Ok((0..1usize << bits).map(|q| lo + q as f64 * enc.step(0)).collect())
}

fn js(e: qaheat::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub fn solve_field(
    m: usize,
    blocks: usize,
    bits: usize,
    gamma: f64,
    iterations: usize,
    backend: &str,
    seed: u64,
) -> Result<Vec<f64>, JsError> {
    field_values(&DemoParams {
        m,
        blocks,
        bits,
        gamma,
        iterations,
        backend,
        seed,
    })
    .map_err(js)
}

#[wasm_bindgen]
pub fn error_trace(
    m: usize,
    blocks: usize,
    bits: usize,
    gamma: f64,
    iterations: usize,
    backend: &str,
    seed: u64,
) -> Result<Vec<f64>, JsError> {
    error_values(&DemoParams {
        m,
        blocks,
        bits,
        gamma,
        iterations,
        backend,
        seed,
    })
    .map_err(js)
}

#[wasm_bindgen]
pub fn encoding_levels(bits: usize, scale: f64, gamma: f64, k: usize, center: f64) -> Result<Vec<f64>, JsError> {
    level_values(bits, scale, gamma, k, center).map_err(js)
}
