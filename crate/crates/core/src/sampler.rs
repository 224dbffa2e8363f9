//! QUBO minimisation backends: exhaustive enumeration and seeded simulated
//! annealing with optional post-hoc bit-flip noise.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::encoding::QuboProblem;
use crate::error::{Error, Result};

/// Largest problem [`solve_exhaustive`] will enumerate.
pub const EXHAUSTIVE_LIMIT: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerParams {
    pub num_reads: usize,
    pub sweeps: usize,
    /// `None` picks `0.1 / max|coeff|`.
    pub beta_initial: Option<f64>,
    /// `None` picks `10 / min nonzero |coeff|`.
    pub beta_final: Option<f64>,
    pub seed: u64,
    /// Per-bit flip probability applied to every returned read.
    pub noise_p: f64,
}

impl Default for SamplerParams {
    fn default() -> Self {
        Self {
            num_reads: 100,
            sweeps: 1000,
            beta_initial: None,
            beta_final: None,
            seed: 0,
            noise_p: 0.0,
        }
    }
}

impl SamplerParams {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_reads == 0 {
            return Err(Error::InvalidArgument("num_reads must be at least 1".into()));
        }
        if self.sweeps == 0 {
            return Err(Error::InvalidArgument("sweeps must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.noise_p) {
            return Err(Error::InvalidArgument(format!(
                "noise_p must lie in [0, 1), got {}",
                self.noise_p
            )));
        }
        for beta in [self.beta_initial, self.beta_final].into_iter().flatten() {
            if !(beta > 0.0) || !beta.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "inverse temperature {beta} must be positive"
                )));
            }
        }
        if let (Some(b0), Some(b1)) = (self.beta_initial, self.beta_final) {
            if b1 < b0 {
                return Err(Error::InvalidArgument(format!(
                    "beta_final ({b1}) must not be below beta_initial ({b0})"
                )));
            }
        }
        Ok(())
    }

    /// Schedule endpoints for `problem`, filling in the defaults.
    pub fn beta_range(&self, problem: &QuboProblem) -> (f64, f64) {
        let (max, min) = problem.coefficient_range().unwrap_or((1.0, 1.0));
        let b0 = self.beta_initial.unwrap_or(0.1 / max);
        let b1 = self.beta_final.unwrap_or(10.0 / min).max(b0);
        (b0, b1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub bits: Vec<bool>,
    pub energy: f64,
    pub occurrences: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    /// Distinct bitstrings ordered by energy, then lexicographically.
    pub samples: Vec<Sample>,
    pub params: SamplerParams,
    pub best: usize,
}

impl SampleSet {
    /// Aggregates raw reads into distinct samples with recomputed energies.
    pub fn from_reads(problem: &QuboProblem, reads: Vec<Vec<bool>>, params: SamplerParams) -> Result<Self> {
        let mut counts: BTreeMap<Vec<bool>, usize> = BTreeMap::new();
        for bits in reads {
            *counts.entry(bits).or_insert(0) += 1;
        }
        let mut samples = counts
            .into_iter()
            .map(|(bits, occurrences)| {
                Ok(Sample {
                    energy: problem.energy(&bits)?,
                    bits,
                    occurrences,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if samples.is_empty() {
            return Err(Error::Sampler("no reads returned".into()));
        }
        samples.sort_by(|a, b| a.energy.total_cmp(&b.energy).then_with(|| a.bits.cmp(&b.bits)));
        Ok(Self {
            samples,
            params,
            best: 0,
        })
    }

    pub fn best(&self) -> &Sample {
        &self.samples[self.best]
    }

    pub fn total_reads(&self) -> usize {
        self.samples.iter().map(|s| s.occurrences).sum()
    }
}

/// A QUBO minimisation backend.
pub trait Sampler: Send + Sync {
    fn name(&self) -> &str;
    fn sample(&self, problem: &QuboProblem, params: &SamplerParams) -> Result<SampleSet>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ExhaustiveSampler;

impl Sampler for ExhaustiveSampler {
    fn name(&self) -> &str {
        "exhaustive"
    }

    fn sample(&self, problem: &QuboProblem, params: &SamplerParams) -> Result<SampleSet> {
        let mut set = solve_exhaustive(problem)?;
        set.params = params.clone();
        Ok(set)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AnnealingSampler;

impl Sampler for AnnealingSampler {
    fn name(&self) -> &str {
        "sa"
    }

    fn sample(&self, problem: &QuboProblem, params: &SamplerParams) -> Result<SampleSet> {
        solve_sa(problem, params)
    }
}

pub fn energy(problem: &QuboProblem, bits: &[bool]) -> Result<f64> {
    problem.energy(bits)
}

/// Dense symmetric coupling matrix, zero diagonal.
fn coupling_matrix(problem: &QuboProblem) -> Vec<f64> {
    let n = problem.size();
    let mut j = vec![0.0; n * n];
    for (&(l, k), &v) in &problem.quadratic {
        j[l * n + k] += v;
        j[k * n + l] += v;
    }
    j
}

fn mask_to_bits(mask: u64, n: usize) -> Vec<bool> {
    (0..n).map(|l| mask >> l & 1 == 1).collect()
}

/// Global minimum by Gray-code enumeration of all `2^n` states.
///
/// Energies are tracked incrementally; candidates within rounding distance
/// of the incumbent are re-scored exactly so ties resolve to the
/// lexicographically smallest bitstring.
pub fn solve_exhaustive(problem: &QuboProblem) -> Result<SampleSet> {
    problem.validate()?;
    let n = problem.size();
    if n > EXHAUSTIVE_LIMIT {
        return Err(Error::TooLarge {
            size: n,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let coupling = coupling_matrix(problem);
    let mut field = problem.linear.clone();
    let scale = problem
        .coefficient_range()
        .map_or(1.0, |(max, _)| max * (n.max(1) as f64));
    let tie_tol = 1e-9 * scale;

    let mut state: u64 = 0;
    let mut e = 0.0;
    let mut best_mask = 0u64;
    let mut best_e = 0.0;
    let exact = |mask: u64| problem.energy(&mask_to_bits(mask, n));

    for step in 1u64..(1u64 << n) {
        let l = step.trailing_zeros() as usize;
        let on = state >> l & 1 == 0;
        if on {
            e += field[l];
        } else {
            e -= field[l];
        }
        state ^= 1 << l;
        let delta = if on { 1.0 } else { -1.0 };
        let row = &coupling[l * n..(l + 1) * n];
        for (f, &c) in field.iter_mut().zip(row) {
            *f += delta * c;
        }

        if e < best_e - tie_tol {
            best_e = e;
            best_mask = state;
        } else if e <= best_e + tie_tol {
            let (cand, inc) = (exact(state)?, exact(best_mask)?);
            let cand_bits = mask_to_bits(state, n);
            let inc_bits = mask_to_bits(best_mask, n);
            if cand < inc || (cand == inc && cand_bits < inc_bits) {
                best_e = e;
                best_mask = state;
            }
        }
    }

    let bits = mask_to_bits(best_mask, n);
    Ok(SampleSet {
        samples: vec![Sample {
            energy: problem.energy(&bits)?,
            bits,
            occurrences: 1,
        }],
        params: SamplerParams {
            num_reads: 1,
            ..SamplerParams::default()
        },
        best: 0,
    })
}

/// Geometric inverse-temperature ladder.
pub fn geometric_schedule(beta_initial: f64, beta_final: f64, sweeps: usize) -> Vec<f64> {
    if sweeps <= 1 {
        return vec![beta_final; sweeps];
    }
    let ratio = (beta_final / beta_initial).ln() / (sweeps - 1) as f64;
    (0..sweeps).map(|s| beta_initial * (ratio * s as f64).exp()).collect()
}

/// RNG for one read; a pure function of the master seed and read index.
fn read_rng(seed: u64, read: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(read as u64);
    rng
}

fn anneal_once(
    problem: &QuboProblem,
    coupling: &[f64],
    schedule: &[f64],
    noise_p: f64,
    mut rng: ChaCha8Rng,
) -> Vec<bool> {
    let n = problem.size();
    let mut bits: Vec<bool> = (0..n).map(|_| rng.gen::<bool>()).collect();
    let mut field = problem.linear.clone();
    for l in 0..n {
        if bits[l] {
            for (f, &c) in field.iter_mut().zip(&coupling[l * n..(l + 1) * n]) {
                *f += c;
            }
        }
    }
    for &beta in schedule {
        for l in 0..n {
            let delta = if bits[l] { -field[l] } else { field[l] };
            let barrier = beta * delta;
            // exp(-37) is below the resolution of a uniform f64 draw.
            if barrier <= 0.0 || (barrier < 37.0 && rng.gen::<f64>() < (-barrier).exp()) {
                let sign = if bits[l] { -1.0 } else { 1.0 };
                bits[l] = !bits[l];
                for (f, &c) in field.iter_mut().zip(&coupling[l * n..(l + 1) * n]) {
                    *f += sign * c;
                }
            }
        }
    }
    if noise_p > 0.0 {
        apply_bit_flip_noise(&mut bits, noise_p, &mut rng);
    }
    bits
}

/// Flips each bit independently with probability `p`.
pub fn apply_bit_flip_noise<R: Rng + ?Sized>(bits: &mut [bool], p: f64, rng: &mut R) {
    for b in bits.iter_mut() {
        if rng.gen::<f64>() < p {
            *b = !*b;
        }
    }
}

/// Single-spin-flip Metropolis annealing, `num_reads` independent reads.
pub fn solve_sa(problem: &QuboProblem, params: &SamplerParams) -> Result<SampleSet> {
    params.validate()?;
    problem.validate()?;
    let (b0, b1) = params.beta_range(problem);
    let schedule = geometric_schedule(b0, b1, params.sweeps);
    let coupling = coupling_matrix(problem);
    let run = |read: usize| {
        anneal_once(
            problem,
            &coupling,
            &schedule,
            params.noise_p,
            read_rng(params.seed, read),
        )
    };

    #[cfg(feature = "parallel")]
    let reads: Vec<Vec<bool>> = {
        use rayon::prelude::*;
        (0..params.num_reads).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let reads: Vec<Vec<bool>> = (0..params.num_reads).map(run).collect();

    let mut resolved = params.clone();
    resolved.beta_initial = Some(b0);
    resolved.beta_final = Some(b1);
    SampleSet::from_reads(problem, reads, resolved)
}
