//! `solve` and `sweep` drivers: run the block iteration and write data files.

use std::fs;
use std::path::{Path, PathBuf};

use qaheat::{
    assemble_system, condition_number, direct_solve, grid_to_field, iterate, Backend, HeatProblem, IterationTrace,
    LinearSystem, SolveConfig, TemperatureField,
};
use rayon::prelude::*;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::error::HarnessError;
use crate::render;

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub const TRACE_HEADER: [&str; 6] = [
    "k",
    "residual",
    "relative_error",
    "clipped_blocks",
    "best_energy_sum",
    "halfwidth_max",
];

pub const SWEEP_HEADER: [&str; 8] = ["backend", "R", "D", "gamma", "seed", "k", "residual", "relative_error"];

/// Everything the solver needs, built once per problem.
pub struct Prepared {
    pub problem: HeatProblem,
    pub system: LinearSystem,
    pub exact: Vec<f64>,
}

impl Prepared {
    pub fn new(config: &ExperimentConfig) -> Result<Self, HarnessError> {
        let problem = config.problem.heat_problem();
        let system = assemble_system(&problem)?;
        let exact = direct_solve(&system)?;
        Ok(Self { problem, system, exact })
    }

    /// Reference for relative errors; `None` when the solution is zero.
    pub fn reference(&self) -> Option<&[f64]> {
        self.exact.iter().any(|&v| v != 0.0).then_some(self.exact.as_slice())
    }
}

pub fn write_trace(path: &Path, trace: &IterationTrace) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TRACE_HEADER)?;
    for r in &trace.records {
        w.write_record([
            r.k.to_string(),
            fmt_f64(r.residual),
            r.relative_error.map(fmt_f64).unwrap_or_default(),
            r.clipped_blocks.len().to_string(),
            fmt_f64(r.energy_sum()),
            fmt_f64(r.halfwidth_max),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_field(path: &Path, field: &TemperatureField) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(render::FIELD_HEADER)?;
    for (i, j, x, y, t) in field.nodes() {
        w.write_record([i.to_string(), j.to_string(), fmt_f64(x), fmt_f64(y), fmt_f64(t)])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug)]
pub struct SolveReport {
    pub trace: IterationTrace,
    pub kappa: f64,
    pub out_dir: PathBuf,
}

impl SolveReport {
    /// 0 when converged, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.trace.converged {
            0
        } else {
            2
        }
    }
}

/// Runs one solve and writes `trace.csv`, `field.csv` and `summary.json`
/// (plus `field.pgm` when requested).
pub fn run_solve(config: &ExperimentConfig) -> Result<SolveReport, HarnessError> {
    let prepared = Prepared::new(config)?;
    let trace = iterate(&prepared.system, &config.solver, prepared.reference())?;
    let kappa = condition_number(&prepared.system)?;

    let out_dir = config.out_dir();
    fs::create_dir_all(&out_dir)?;
    write_trace(&out_dir.join("trace.csv"), &trace)?;
    let x = trace
        .solution()
        .map(<[f64]>::to_vec)
        .unwrap_or_else(|| vec![0.0; prepared.system.dim()]);
    let field = grid_to_field(&x, &prepared.problem)?;
    write_field(&out_dir.join("field.csv"), &field)?;
    if config.output.pgm {
        fs::write(
            out_dir.join("field.pgm"),
            render::pgm(&render::FieldGrid::from_field(&field)),
        )?;
    }

    let last = trace.last();
    let s = &config.solver;
    let summary = json!({
        "backend": s.backend.name(),
        "m": config.problem.m,
        "unknowns": prepared.system.dim(),
        "blocks": s.blocks,
        "bits": s.bits,
        "gamma": s.gamma,
        "seed": s.sampler.seed,
        "tolerance": s.tolerance,
        "iterations": trace.iterations(),
        "converged": trace.converged,
        "residual_kind": if trace.absolute_residual { "absolute" } else { "relative" },
        "final_residual": last.map(|r| r.residual),
        "final_relative_error": last.and_then(|r| r.relative_error),
        "kappa_estimate": kappa.kappa,
        "kappa_converged": kappa.converged,
    });
    fs::write(
        out_dir.join("summary.json"),
        serde_json::to_string_pretty(&summary).expect("json values are finite") + "\n",
    )?;
    Ok(SolveReport {
        trace,
        kappa: kappa.kappa,
        out_dir,
    })
}

/// One point of the sweep grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Combination {
    pub backend: String,
    pub bits: usize,
    pub blocks: usize,
    pub gamma: f64,
    pub seed: u64,
}

impl Combination {
    pub fn label(&self) -> String {
        format!(
            "{}_R{}_D{}_g{}_s{}",
            self.backend,
            self.bits,
            self.blocks,
            fmt_f64(self.gamma),
            self.seed
        )
    }

    fn solve_config(&self, base: &SolveConfig) -> Result<SolveConfig, HarnessError> {
        let mut c = base.clone();
        c.backend = Backend::parse(&self.backend)?;
        c.bits = self.bits;
        c.blocks = self.blocks;
        c.gamma = self.gamma;
        c.sampler.seed = self.seed;
        Ok(c)
    }
}

/// Cartesian product in the fixed order backend, R, D, gamma, seed.
pub fn combinations(config: &ExperimentConfig) -> Vec<Combination> {
    let s = &config.sweep;
    let mut out = Vec::new();
    for backend in &s.backends {
        for &bits in &s.bits {
            for &blocks in &s.blocks {
                for &gamma in &s.gammas {
                    for &seed in &s.seeds {
                        out.push(Combination {
                            backend: Backend::parse(backend).map_or(backend.clone(), |b| b.name().to_string()),
                            bits,
                            blocks,
                            gamma,
                            seed,
                        });
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug)]
pub struct SweepEntry {
    pub combination: Combination,
    pub outcome: Result<IterationTrace, String>,
}

#[derive(Debug)]
pub struct SweepReport {
    pub entries: Vec<SweepEntry>,
    pub out_dir: PathBuf,
}

impl SweepReport {
    pub fn failures(&self) -> usize {
        self.entries.iter().filter(|e| e.outcome.is_err()).count()
    }

    /// 0 when every combination ran (converged or not), 1 if any failed.
    pub fn exit_code(&self) -> i32 {
        if self.failures() == 0 {
            0
        } else {
            1
        }
    }
}

/// Runs every combination (in parallel) and writes one trace per
/// combination under `sweep/`, the combined `sweep.csv`, and
/// `sweep_summary.csv`. A failing combination is recorded, not fatal.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepReport, HarnessError> {
    config.require_sweep()?;
    let prepared = Prepared::new(config)?;
    let out_dir = config.out_dir();
    let trace_dir = out_dir.join("sweep");
    fs::create_dir_all(&trace_dir)?;

    let combos = combinations(config);
    let entries: Vec<SweepEntry> = combos
        .into_par_iter()
        .map(|combination| {
            let outcome = combination
                .solve_config(&config.solver)
                .and_then(|c| Ok(iterate(&prepared.system, &c, prepared.reference())?))
                .and_then(|trace| {
                    write_trace(&trace_dir.join(format!("{}.csv", combination.label())), &trace)?;
                    Ok(trace)
                })
                .map_err(|e| e.to_string());
            SweepEntry { combination, outcome }
        })
        .collect();

    let mut combined = csv::Writer::from_path(out_dir.join("sweep.csv"))?;
    combined.write_record(SWEEP_HEADER)?;
    let mut summary = csv::Writer::from_path(out_dir.join("sweep_summary.csv"))?;
    summary.write_record([
        "backend",
        "R",
        "D",
        "gamma",
        "seed",
        "status",
        "iterations",
        "converged",
        "final_residual",
        "final_relative_error",
        "message",
    ])?;
    for entry in &entries {
        let c = &entry.combination;
        let key = [
            c.backend.clone(),
            c.bits.to_string(),
            c.blocks.to_string(),
            fmt_f64(c.gamma),
            c.seed.to_string(),
        ];
        match &entry.outcome {
            Ok(trace) => {
                for r in &trace.records {
                    let mut row = key.to_vec();
                    row.extend([
                        r.k.to_string(),
                        fmt_f64(r.residual),
                        r.relative_error.map(fmt_f64).unwrap_or_default(),
                    ]);
                    combined.write_record(&row)?;
                }
                let last = trace.last();
                let mut row = key.to_vec();
                row.extend([
                    "ok".to_string(),
                    trace.iterations().to_string(),
                    trace.converged.to_string(),
                    last.map(|r| fmt_f64(r.residual)).unwrap_or_default(),
                    last.and_then(|r| r.relative_error).map(fmt_f64).unwrap_or_default(),
                    String::new(),
                ]);
                summary.write_record(&row)?;
            }
            Err(message) => {
                let mut row = key.to_vec();
                row.extend([
                    "failed".to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    message.clone(),
                ]);
                summary.write_record(&row)?;
            }
        }
    }
    combined.flush()?;
    summary.flush()?;
    Ok(SweepReport { entries, out_dir })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_round_trips() {
        for v in [0.1, 1.0, 1e-20, 123456.789, -2.5e300, 0.0] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn combinations_follow_fixed_order() {
        let c = ExperimentConfig::from_str(
            "[sweep]\nbackends = exact, anneal\nbits = 2, 3\nblocks = 9\ngammas = 1, 0.8\nseeds = 1, 2\n",
        )
        .unwrap();
        let combos = combinations(&c);
        assert_eq!(combos.len(), 16);
        assert_eq!(combos[0].label(), "exact_R2_D9_g1.0_s1");
        assert_eq!(combos[1].label(), "exact_R2_D9_g1.0_s2");
        assert_eq!(combos[2].label(), "exact_R2_D9_g0.8_s1");
        assert_eq!(combos[15].label(), "sa_R3_D9_g0.8_s2");
    }
}
