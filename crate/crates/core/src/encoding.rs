//! Fixed-point binary encoding of real unknowns and the least-squares QUBO.
//!
//! Variable `i` is represented with `R` bits as
//! `x_i = c_i * sum_r q(i,r) 2^-r - d_i`, covering `[-d_i, 2 c_i - d_i)`.
//! Substituting into `||A x - b||^2` gives a quadratic form over the bits
//! whose constant `||A d + b||^2` is kept aside as [`QuboProblem::offset`].
//! Bit `(i, r)` lives at flat position `i * R + r`.

use std::collections::BTreeMap;
use std::ops::Range;

use crate::error::{check_len, Error, Result};
use crate::linalg::LinearSystem;

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryEncoding {
    bits: usize,
    scale: Vec<f64>,
    offset: Vec<f64>,
}

impl BinaryEncoding {
    pub fn new(bits: usize, scale: Vec<f64>, offset: Vec<f64>) -> Result<Self> {
        if bits == 0 {
            return Err(Error::InvalidArgument("need at least one bit per variable".into()));
        }
        // 2^-r underflows long before this, and bit masks are u64 elsewhere.
        if bits > 52 {
            return Err(Error::InvalidArgument(format!("{bits} bits per variable is too many")));
        }
        check_len(scale.len(), offset.len())?;
        if let Some(i) = scale.iter().position(|&c| !(c > 0.0) || !c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "scale of variable {i} must be positive and finite, got {}",
                scale[i]
            )));
        }
        if let Some(i) = offset.iter().position(|d| !d.is_finite()) {
            return Err(Error::InvalidArgument(format!("offset of variable {i} is not finite")));
        }
        Ok(Self { bits, scale, offset })
    }

    /// Same `(c, d)` for all `n` variables.
    pub fn uniform(n: usize, bits: usize, scale: f64, offset: f64) -> Result<Self> {
        Self::new(bits, vec![scale; n], vec![offset; n])
    }

    /// Encoding whose interval is `[center_i - half_width_i, center_i + half_width_i)`.
    pub fn centered(bits: usize, center: &[f64], half_width: &[f64]) -> Result<Self> {
        check_len(center.len(), half_width.len())?;
        let offset = center.iter().zip(half_width).map(|(x, h)| h - x).collect();
        Self::new(bits, half_width.to_vec(), offset)
    }

    pub fn len(&self) -> usize {
        self.scale.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scale.is_empty()
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    pub fn num_qubits(&self) -> usize {
        self.len() * self.bits
    }

    /// Half-open interval `[lo, hi)` representable for variable `i`.
    pub fn interval(&self, i: usize) -> (f64, f64) {
        (-self.offset[i], 2.0 * self.scale[i] - self.offset[i])
    }

    /// Spacing between adjacent representable values of variable `i`.
    pub fn step(&self, i: usize) -> f64 {
        self.scale[i] * (2.0f64).powi(1 - self.bits as i32)
    }

    /// Weight `c_i 2^-r` of bit `r` of variable `i`.
    pub fn bit_weight(&self, i: usize, r: usize) -> f64 {
        self.scale[i] * (2.0f64).powi(-(r as i32))
    }

    pub fn index(&self, var: usize, bit: usize) -> Result<usize> {
        if var >= self.len() {
            return Err(Error::OutOfRange(format!(
                "variable {var} out of range for {} variables",
                self.len()
            )));
        }
        logical_index(var, bit, self.bits)
    }

    /// Encoding restricted to a contiguous variable range.
    pub fn slice(&self, range: Range<usize>) -> BinaryEncoding {
        BinaryEncoding {
            bits: self.bits,
            scale: self.scale[range.clone()].to_vec(),
            offset: self.offset[range].to_vec(),
        }
    }

    /// Nearest representable value to `value` for variable `i` (clamped into
    /// the interval).
    pub fn quantize(&self, i: usize, value: f64) -> f64 {
        let levels = (1u64 << self.bits) - 1;
        let step = self.step(i);
        let k = ((value + self.offset[i]) / step).round().clamp(0.0, levels as f64);
        k * step - self.offset[i]
    }
}

pub fn logical_index(var: usize, bit: usize, bits: usize) -> Result<usize> {
    if bits == 0 {
        return Err(Error::InvalidArgument("bits per variable must be at least 1".into()));
    }
    if bit >= bits {
        return Err(Error::OutOfRange(format!("bit {bit} out of range for {bits} bits")));
    }
    var.checked_mul(bits)
        .and_then(|v| v.checked_add(bit))
        .ok_or_else(|| Error::OutOfRange(format!("variable {var} overflows the index space")))
}

/// Inverse of [`logical_index`]: `(l / R, l mod R)`.
pub fn inverse_index(index: usize, bits: usize) -> Result<(usize, usize)> {
    if bits == 0 {
        return Err(Error::InvalidArgument("bits per variable must be at least 1".into()));
    }
    Ok((index / bits, index % bits))
}

/// QUBO `H(q) = sum_l a_l q_l + sum_{l<k} b_lk q_l q_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboProblem {
    pub linear: Vec<f64>,
    /// Strictly upper-triangular couplings keyed by `(l, k)` with `l < k`.
    pub quadratic: BTreeMap<(usize, usize), f64>,
    /// Constant dropped from the objective; `energy + offset` is the
    /// least-squares residual for encoded problems.
    pub offset: f64,
}

impl QuboProblem {
    pub fn new(linear: Vec<f64>) -> Self {
        Self {
            linear,
            quadratic: BTreeMap::new(),
            offset: 0.0,
        }
    }

    pub fn size(&self) -> usize {
        self.linear.len()
    }

    /// Adds a coupling; `l == k` folds into the linear term since `q^2 = q`.
    pub fn add_interaction(&mut self, l: usize, k: usize, value: f64) {
        assert!(l < self.size() && k < self.size(), "coupling index out of range");
        if l == k {
            self.linear[l] += value;
        } else {
            *self.quadratic.entry((l.min(k), l.max(k))).or_insert(0.0) += value;
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.size();
        if self.linear.iter().any(|v| !v.is_finite())
            || self.quadratic.values().any(|v| !v.is_finite())
            || !self.offset.is_finite()
        {
            return Err(Error::InvalidArgument("QUBO has non-finite coefficients".into()));
        }
        if let Some(&(l, k)) = self.quadratic.keys().find(|&&(l, k)| l >= k || k >= n) {
            return Err(Error::OutOfRange(format!("invalid coupling key ({l}, {k})")));
        }
        Ok(())
    }

    pub fn energy(&self, bits: &[bool]) -> Result<f64> {
        check_len(self.size(), bits.len())?;
        let mut e: f64 = self.linear.iter().zip(bits).filter(|(_, &q)| q).map(|(a, _)| a).sum();
        for (&(l, k), &v) in &self.quadratic {
            if bits[l] && bits[k] {
                e += v;
            }
        }
        Ok(e)
    }

    /// Largest coefficient magnitude and smallest non-negligible one.
    pub fn coefficient_range(&self) -> Option<(f64, f64)> {
        let mags = || self.linear.iter().chain(self.quadratic.values()).map(|v| v.abs());
        let max = mags().fold(0.0, f64::max);
        if max == 0.0 {
            return None;
        }
        let floor = 1e-12 * max;
        let min = mags().filter(|&v| v > floor).fold(f64::INFINITY, f64::min);
        Some((max, min))
    }
}

/// Builds the QUBO whose energy plus offset equals `||A decode(q) - b||^2`.
pub fn encode(system: &LinearSystem, enc: &BinaryEncoding) -> Result<QuboProblem> {
    let n = system.dim();
    check_len(n, enc.len())?;
    let bits = enc.bits();

    // Dense columns of A: n is a block size here.
    let mut cols = vec![vec![0.0; n]; n];
    #[allow(clippy::needless_range_loop)]
    for k in 0..n {
        for &(i, v) in system.a.row(k) {
            cols[i][k] = v;
        }
    }
    let gram = |i: usize, j: usize| -> f64 { cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum() };

    // t = A d + b
    let target: Vec<f64> = system
        .a
        .mul_vec(enc.offset())?
        .into_iter()
        .zip(&system.b)
        .map(|(ad, b)| ad + b)
        .collect();
    let offset: f64 = target.iter().map(|t| t * t).sum();

    let mut qubo = QuboProblem::new(vec![0.0; n * bits]);
    qubo.offset = offset;
    for (i, col) in cols.iter().enumerate() {
        let proj: f64 = col.iter().zip(&target).map(|(a, t)| a * t).sum();
        for r in 0..bits {
            qubo.linear[i * bits + r] = -2.0 * proj * enc.bit_weight(i, r);
        }
    }
    for i in 0..n {
        for j in i..n {
            let g = gram(i, j);
            if g == 0.0 {
                continue;
            }
            for r in 0..bits {
                let s_start = if i == j { r } else { 0 };
                for s in s_start..bits {
                    let l = i * bits + r;
                    let k = j * bits + s;
                    let w = g * enc.bit_weight(i, r) * enc.bit_weight(j, s);
                    // b(l,k) and b(k,l) merge into one entry; the diagonal
                    // appears once and folds into the linear term.
                    let value = if l == k { w } else { 2.0 * w };
                    qubo.add_interaction(l, k, value);
                }
            }
        }
    }
    Ok(qubo)
}

pub fn decode(bits: &[bool], enc: &BinaryEncoding) -> Result<Vec<f64>> {
    check_len(enc.num_qubits(), bits.len())?;
    let r_bits = enc.bits();
    Ok(bits
        .chunks_exact(r_bits)
        .enumerate()
        .map(|(i, chunk)| {
            let s: f64 = chunk
                .iter()
                .enumerate()
                .filter(|(_, &q)| q)
                .map(|(r, _)| (2.0f64).powi(-(r as i32)))
                .sum();
            enc.scale()[i] * s - enc.offset()[i]
        })
        .collect())
}

/// Variables whose bits are all zero or all one, i.e. decoded onto an end of
/// their interval.
pub fn saturated_variables(bits: &[bool], r_bits: usize) -> Vec<usize> {
    bits.chunks_exact(r_bits)
        .enumerate()
        .filter(|(_, c)| c.iter().all(|&q| q) || c.iter().all(|&q| !q))
        .map(|(i, _)| i)
        .collect()
}

/// Smallest `R >= 1` with `2c / 2^R <= eps`.
pub fn required_bits(scale: f64, accuracy: f64) -> Result<u32> {
    if !(scale > 0.0) || !(accuracy > 0.0) || !scale.is_finite() || !accuracy.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "scale and accuracy must be positive, got c={scale}, eps={accuracy}"
        )));
    }
    let ratio = 2.0 * scale / accuracy;
    let mut r = ratio.log2().ceil().max(1.0) as u32;
    // Guard against log2 rounding either way.
    while r > 1 && ratio / (2.0f64).powi(r as i32 - 1) <= 1.0 {
        r -= 1;
    }
    while ratio / (2.0f64).powi(r as i32) > 1.0 {
        r += 1;
    }
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResourceReport {
    /// Logical qubits to encode the whole system at once (`N R`).
    pub full_system_qubits: usize,
    /// Largest block size, `ceil(N / D)`.
    pub block_size: usize,
    /// Logical qubits per block solve (`ceil(N / D) R`).
    pub qubits_per_block: usize,
    /// Couplers removed by splitting into `D` blocks, `N^2 R^2 (1 - 1/D^2)`.
    pub connectivity_reduction: f64,
}

pub fn estimate_resources(n: usize, bits: usize, blocks: usize) -> Result<ResourceReport> {
    if blocks == 0 || blocks > n {
        return Err(Error::InvalidArgument(format!(
            "block count must be in 1..={n}, got {blocks}"
        )));
    }
    if bits == 0 {
        return Err(Error::InvalidArgument("bits per variable must be at least 1".into()));
    }
    let block_size = n.div_ceil(blocks);
    let nr = (n * bits) as f64;
    let d = blocks as f64;
    Ok(ResourceReport {
        full_system_qubits: n * bits,
        block_size,
        qubits_per_block: block_size * bits,
        connectivity_reduction: nr * nr * (1.0 - 1.0 / (d * d)),
    })
}
