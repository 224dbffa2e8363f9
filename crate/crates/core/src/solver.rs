//! Block Gauss-Seidel outer loop with QUBO (or exact) block solves and
//! per-iteration interval shrinking.

use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use crate::encoding::{decode, encode, saturated_variables, BinaryEncoding};
use crate::error::{check_len, Error, Result};
use crate::linalg::{norm2, spectral_norm, DenseMatrix, LinearSystem, LuFactor};
use crate::sampler::{AnnealingSampler, ExhaustiveSampler, Sampler, SamplerParams};

/// Contiguous, ordered, non-overlapping blocks covering `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    blocks: Vec<Range<usize>>,
}

impl BlockPartition {
    pub fn from_ranges(n: usize, blocks: Vec<Range<usize>>) -> Result<Self> {
        let mut next = 0;
        for r in &blocks {
            if r.start != next || r.end <= r.start {
                return Err(Error::InvalidArgument(format!(
                    "blocks must be non-empty and contiguous from 0, found {r:?} after {next}"
                )));
            }
            next = r.end;
        }
        if next != n {
            return Err(Error::InvalidArgument(format!(
                "blocks cover 0..{next}, expected 0..{n}"
            )));
        }
        Ok(Self { blocks })
    }

    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.blocks.last().map_or(0, |r| r.end)
    }

    pub fn max_block_size(&self) -> usize {
        self.blocks.iter().map(|r| r.len()).max().unwrap_or(0)
    }
}

/// `D` blocks of size `ceil(N/D)` or `floor(N/D)`, larger ones first.
pub fn partition(n: usize, blocks: usize) -> Result<BlockPartition> {
    if blocks == 0 || blocks > n {
        return Err(Error::InvalidArgument(format!(
            "block count must be in 1..={n}, got {blocks}"
        )));
    }
    let base = n / blocks;
    let larger = n % blocks;
    let mut start = 0;
    let ranges = (0..blocks)
        .map(|p| {
            let len = base + usize::from(p < larger);
            let r = start..start + len;
            start += len;
            r
        })
        .collect();
    Ok(BlockPartition { blocks: ranges })
}

/// Result of solving one diagonal block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSolution {
    pub x: Vec<f64>,
    /// Lowest QUBO energy seen, when the block went through a sampler.
    pub energy: Option<f64>,
    /// Some variable decoded onto an end of its interval.
    pub clipped: bool,
}

pub trait BlockSolver {
    /// Solves `A_pp x_p = rhs` for block `index` spanning `range`.
    fn solve_block(&mut self, index: usize, range: Range<usize>, subsystem: &LinearSystem) -> Result<BlockSolution>;
}

/// Dense Gaussian elimination on each block.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactBlockSolver;

impl BlockSolver for ExactBlockSolver {
    fn solve_block(&mut self, _: usize, _: Range<usize>, subsystem: &LinearSystem) -> Result<BlockSolution> {
        let lu = LuFactor::new(&subsystem.a.to_dense())?;
        Ok(BlockSolution {
            x: lu.solve(&subsystem.b)?,
            energy: None,
            clipped: false,
        })
    }
}

/// Encode, sample, decode the lowest-energy read.
pub struct QuboBlockSolver<'a> {
    pub sampler: &'a dyn Sampler,
    pub params: SamplerParams,
    /// Encoding for the full unknown vector; blocks use their slice of it.
    pub encoding: BinaryEncoding,
    /// Outer iteration, mixed into per-block seeds.
    pub iteration: usize,
}

impl BlockSolver for QuboBlockSolver<'_> {
    fn solve_block(&mut self, index: usize, range: Range<usize>, subsystem: &LinearSystem) -> Result<BlockSolution> {
        let enc = self.encoding.slice(range);
        let qubo = encode(subsystem, &enc)?;
        let params = SamplerParams {
            seed: block_seed(self.params.seed, self.iteration, index),
            ..self.params.clone()
        };
        let set = self.sampler.sample(&qubo, &params)?;
        let best = set.best();
        Ok(BlockSolution {
            x: decode(&best.bits, &enc)?,
            energy: Some(best.energy),
            clipped: !saturated_variables(&best.bits, enc.bits()).is_empty(),
        })
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for the sampler call of `block` at outer iteration `iteration`.
pub fn block_seed(seed: u64, iteration: usize, block: usize) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(iteration as u64)) ^ block as u64)
}

/// Block right-hand side `b_p - sum_{q != p} A_pq x_q` and the diagonal block.
fn block_subsystem(system: &LinearSystem, range: Range<usize>, x: &[f64]) -> Result<LinearSystem> {
    let rhs = range
        .clone()
        .map(|row| {
            let coupled: f64 = system
                .a
                .row(row)
                .iter()
                .filter(|(j, _)| !range.contains(j))
                .map(|&(j, v)| v * x[j])
                .sum();
            system.b[row] - coupled
        })
        .collect();
    LinearSystem::new(system.a.principal_block(range), rhs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub x: Vec<f64>,
    pub block_energies: Vec<Option<f64>>,
    pub clipped_blocks: Vec<usize>,
}

/// One Gauss-Seidel pass: blocks in ascending order, each seeing the
/// already-updated values of earlier blocks.
pub fn gs_sweep(
    system: &LinearSystem,
    partition: &BlockPartition,
    x_prev: &[f64],
    solver: &mut dyn BlockSolver,
) -> Result<SweepOutcome> {
    check_len(system.dim(), x_prev.len())?;
    check_len(system.dim(), partition.dim())?;
    let mut x = x_prev.to_vec();
    let mut block_energies = Vec::with_capacity(partition.len());
    let mut clipped_blocks = Vec::new();
    for (p, range) in partition.blocks().iter().enumerate() {
        let sub = block_subsystem(system, range.clone(), &x)?;
        let sol = solver.solve_block(p, range.clone(), &sub)?;
        check_len(range.len(), sol.x.len())?;
        x[range.clone()].copy_from_slice(&sol.x);
        block_energies.push(sol.energy);
        if sol.clipped {
            clipped_blocks.push(p);
        }
    }
    Ok(SweepOutcome {
        x,
        block_energies,
        clipped_blocks,
    })
}

/// Encoding for outer iteration `k >= 1`: half-width `c_i gamma^(k-1)`
/// centred on `center`, where `c_i` comes from `initial`.
pub fn shrink_encoding(initial: &BinaryEncoding, center: &[f64], gamma: f64, k: usize) -> Result<BinaryEncoding> {
    check_len(initial.len(), center.len())?;
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "shrink factor must lie in (0, 1], got {gamma}"
        )));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("iteration index starts at 1".into()));
    }
    let factor = gamma.powi(k as i32 - 1);
    let half: Vec<f64> = initial.scale().iter().map(|c| c * factor).collect();
    BinaryEncoding::centered(initial.bits(), center, &half)
}

/// Normalised residual `||A x - b|| / ||b||`; absolute when `b = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub value: f64,
    pub absolute: bool,
}

pub fn residual(system: &LinearSystem, x: &[f64]) -> Result<Residual> {
    let r = norm2(&system.residual_vector(x)?);
    let nb = norm2(&system.b);
    Ok(if nb > 0.0 {
        Residual {
            value: r / nb,
            absolute: false,
        }
    } else {
        Residual {
            value: r,
            absolute: true,
        }
    })
}

pub fn relative_error(x: &[f64], exact: &[f64]) -> Result<f64> {
    check_len(exact.len(), x.len())?;
    let ne = norm2(exact);
    if ne == 0.0 {
        return Err(Error::InvalidArgument("relative error against a zero solution".into()));
    }
    let diff: Vec<f64> = x.iter().zip(exact).map(|(a, b)| a - b).collect();
    Ok(norm2(&diff) / ne)
}

/// How each block is solved.
#[derive(Clone)]
pub enum Backend {
    /// Continuous block solves by Gaussian elimination.
    Exact,
    /// QUBO block solves by full enumeration.
    Exhaustive,
    /// QUBO block solves by simulated annealing.
    Annealing,
    Custom(Arc<dyn Sampler>),
}

impl Backend {
    pub fn name(&self) -> &str {
        match self {
            Backend::Exact => "exact",
            Backend::Exhaustive => "exhaustive",
            Backend::Annealing => "sa",
            Backend::Custom(s) => s.name(),
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "exact" => Ok(Backend::Exact),
            "exhaustive" => Ok(Backend::Exhaustive),
            "sa" | "anneal" | "annealing" => Ok(Backend::Annealing),
            other => Err(Error::InvalidArgument(format!(
                "unknown backend '{other}' (expected exact, exhaustive or sa)"
            ))),
        }
    }
}

impl fmt::Debug for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub blocks: usize,
    pub bits: usize,
    /// Initial `c`; the first interval is `[-d, 2c - d)`.
    pub scale: f64,
    pub offset: f64,
    pub gamma: f64,
    pub tolerance: f64,
    pub max_iters: usize,
    pub backend: Backend,
    pub sampler: SamplerParams,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            blocks: 9,
            bits: 3,
            scale: 50.0,
            offset: 0.0,
            gamma: 0.8,
            tolerance: 1e-4,
            max_iters: 50,
            backend: Backend::Annealing,
            sampler: SamplerParams::default(),
        }
    }
}

impl SolveConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.blocks == 0 || self.blocks > n {
            return Err(Error::InvalidArgument(format!(
                "blocks must be in 1..={n}, got {}",
                self.blocks
            )));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "gamma must lie in (0, 1], got {}",
                self.gamma
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
        }
        self.initial_encoding(n)?;
        if !matches!(self.backend, Backend::Exact) {
            self.sampler.validate()?;
        }
        Ok(())
    }

    pub fn initial_encoding(&self, n: usize) -> Result<BinaryEncoding> {
        BinaryEncoding::uniform(n, self.bits, self.scale, self.offset)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub x: Vec<f64>,
    pub residual: f64,
    pub relative_error: Option<f64>,
    pub block_energies: Vec<Option<f64>>,
    pub clipped_blocks: Vec<usize>,
    /// Largest encoding half-width used during this iteration.
    pub halfwidth_max: f64,
}

impl IterationRecord {
    /// Sum of the blocks' best QUBO energies (0 when no block was sampled).
    pub fn energy_sum(&self) -> f64 {
        self.block_energies.iter().flatten().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
    pub converged: bool,
    /// Residuals are absolute because `b = 0`.
    pub absolute_residual: bool,
}

impl IterationTrace {
    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn solution(&self) -> Option<&[f64]> {
        self.last().map(|r| r.x.as_slice())
    }

    pub fn errors(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.relative_error).collect()
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.residual).collect()
    }
}

/// Block Gauss-Seidel from `x = 0`.
pub fn iterate(system: &LinearSystem, config: &SolveConfig, exact_solution: Option<&[f64]>) -> Result<IterationTrace> {
    iterate_from(system, config, &vec![0.0; system.dim()], exact_solution)
}

/// Block Gauss-Seidel from `x0`.
///
/// Iteration 1 uses the configured interval. With `gamma < 1`, iteration
/// `k >= 2` re-centres every variable on `x^(k-1)` with half-width
/// `c gamma^(k-1)`. Stops once the residual reaches the tolerance or after
/// `max_iters` sweeps.
pub fn iterate_from(
    system: &LinearSystem,
    config: &SolveConfig,
    x0: &[f64],
    exact_solution: Option<&[f64]>,
) -> Result<IterationTrace> {
    let n = system.dim();
    config.validate(n)?;
    check_len(n, x0.len())?;
    if let Some(e) = exact_solution {
        check_len(n, e.len())?;
    }
    let parts = partition(n, config.blocks)?;
    let initial = config.initial_encoding(n)?;
    let mut encoding = initial.clone();
    let sampler: Option<&dyn Sampler> = match &config.backend {
        Backend::Exact => None,
        Backend::Exhaustive => Some(&ExhaustiveSampler),
        Backend::Annealing => Some(&AnnealingSampler),
        Backend::Custom(s) => Some(s.as_ref()),
    };
    let error_of = |x: &[f64]| -> Result<Option<f64>> { exact_solution.map(|e| relative_error(x, e)).transpose() };

    let mut trace = IterationTrace::default();
    let mut x = x0.to_vec();
    for k in 1..=config.max_iters {
        if k > 1 && config.gamma < 1.0 {
            encoding = shrink_encoding(&initial, &x, config.gamma, k)?;
        }
        let halfwidth_max = encoding.scale().iter().copied().fold(0.0, f64::max);
        let outcome = match sampler {
            None => gs_sweep(system, &parts, &x, &mut ExactBlockSolver)?,
            Some(sampler) => {
                let mut solver = QuboBlockSolver {
                    sampler,
                    params: config.sampler.clone(),
                    encoding: encoding.clone(),
                    iteration: k,
                };
                gs_sweep(system, &parts, &x, &mut solver)?
            }
        };
        x = outcome.x;
        let res = residual(system, &x)?;
        trace.absolute_residual = res.absolute;
        trace.records.push(IterationRecord {
            k,
            relative_error: error_of(&x)?,
            x: x.clone(),
            residual: res.value,
            block_energies: outcome.block_energies,
            clipped_blocks: outcome.clipped_blocks,
            halfwidth_max,
        });
        if res.value <= config.tolerance {
            trace.converged = true;
            break;
        }
    }
    Ok(trace)
}

/// Norms of the two-block Gauss-Seidel error propagators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceReport {
    /// `||A11^-1 A12 A22^-1 A21||`, which propagates the first block's error.
    pub first_block_norm: f64,
    /// `||A22^-1 A21 A11^-1 A12||`, which propagates the second block's error.
    pub second_block_norm: f64,
    /// Both norms below one.
    pub sufficient: bool,
}

/// Error propagators `(M1, M2)` of two-block Gauss-Seidel with exact block
/// solves: `e1^(k) = M1 e1^(k-1)` for `k >= 2` and `e2^(k) = M2 e2^(k-1)`.
pub fn two_block_operators(system: &LinearSystem, parts: &BlockPartition) -> Result<(DenseMatrix, DenseMatrix)> {
    if parts.len() != 2 {
        return Err(Error::InvalidArgument(format!(
            "convergence check needs exactly two blocks, got {}",
            parts.len()
        )));
    }
    check_len(system.dim(), parts.dim())?;
    let a = system.a.to_dense();
    let (r1, r2) = (parts.blocks()[0].clone(), parts.blocks()[1].clone());
    let a11 = LuFactor::new(&a.submatrix(r1.clone(), r1.clone()))?;
    let a22 = LuFactor::new(&a.submatrix(r2.clone(), r2.clone()))?;
    let a12 = a.submatrix(r1.clone(), r2.clone());
    let a21 = a.submatrix(r2, r1);
    let g1 = a11.solve_matrix(&a12)?; // A11^-1 A12
    let g2 = a22.solve_matrix(&a21)?; // A22^-1 A21
    Ok((g1.matmul(&g2)?, g2.matmul(&g1)?))
}

pub fn check_convergence_condition(system: &LinearSystem, parts: &BlockPartition) -> Result<ConvergenceReport> {
    let (m1, m2) = two_block_operators(system, parts)?;
    let first = spectral_norm(&m1)?.value;
    let second = spectral_norm(&m2)?.value;
    Ok(ConvergenceReport {
        first_block_norm: first,
        second_block_norm: second,
        sufficient: first < 1.0 && second < 1.0,
    })
}
