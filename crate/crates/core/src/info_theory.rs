//! Finite-alphabet information measures.
//!
//! All quantities are in bits. Probabilities below [`PROB_FLOOR`] are treated
//! as exact zeros and `0 log 0 = 0` throughout.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probabilities below this are exact zeros for every logarithmic sum.
pub const PROB_FLOOR: f64 = 1e-300;

/// Accepted deviation of a total from one without touching the entries.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Deviations up to this are renormalized away; anything larger is rejected.
pub const RENORMALIZE_TOL: f64 = 1e-9;

/// Default duality-gap tolerance for [`channel_capacity_ba`], in bits.
pub const BA_DEFAULT_TOL: f64 = 1e-10;
pub const BA_DEFAULT_MAX_ITER: usize = 100_000;

/// Validates a probability vector in place. Tiny negative round-off is
/// clamped, small normalization drift is removed.
fn normalize_in_place(probs: &mut [f64], what: &str) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution(format!("{what}: empty support")));
    }
    for p in probs.iter_mut() {
        if !p.is_finite() {
            return Err(Error::InvalidDistribution(format!("{what}: non-finite entry {p}")));
        }
        if *p < 0.0 {
            if *p < -1e-15 {
                return Err(Error::InvalidDistribution(format!("{what}: negative entry {p}")));
            }
            *p = 0.0;
        }
    }
    let total: f64 = probs.iter().sum();
    let deviation = (total - 1.0).abs();
    if deviation > RENORMALIZE_TOL {
        return Err(Error::InvalidDistribution(format!(
            "{what}: entries sum to {total}, not 1"
        )));
    }
    if deviation > 0.0 {
        probs.iter_mut().for_each(|p| *p /= total);
    }
    Ok(())
}

/// `-sum p log2 p` over a slice that is assumed to be a distribution.
pub(crate) fn entropy_of(probs: &[f64]) -> f64 {
    let h: f64 = probs
        .iter()
        .filter(|&&p| p > PROB_FLOOR)
        .map(|&p| -p * p.log2())
        .sum();
    h.max(0.0)
}

/// Binary entropy without a domain check; callers guarantee `p` in [0, 1].
pub(crate) fn h2(p: f64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    let q = 1.0 - p;
    let mut h = 0.0;
    if p > PROB_FLOOR {
        h -= p * p.log2();
    }
    if q > PROB_FLOOR {
        h -= q * q.log2();
    }
    h
}

/// Binary entropy `-p log2 p - (1-p) log2 (1-p)`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("binary entropy needs p in [0, 1], got {p}")));
    }
    Ok(h2(p))
}

/// A probability mass function over `{0, .., n-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        normalize_in_place(&mut probs, "pmf")?;
        Ok(Self { probs })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDistribution("uniform over an empty alphabet".into()));
        }
        Ok(Self {
            probs: vec![1.0 / n as f64; n],
        })
    }

    pub fn point_mass(n: usize, at: usize) -> Result<Self> {
        if at >= n {
            return Err(Error::Domain(format!("point mass at {at} outside alphabet of size {n}")));
        }
        let mut probs = vec![0.0; n];
        probs[at] = 1.0;
        Ok(Self { probs })
    }

    /// `[1 - p, p]`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("Bernoulli parameter {p} outside [0, 1]")));
        }
        Ok(Self {
            probs: vec![1.0 - p, p],
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn alphabet_size(&self) -> usize {
        self.probs.len()
    }

    pub fn total_variation(&self, other: &Pmf) -> Result<f64> {
        if self.probs.len() != other.probs.len() {
            return Err(Error::Dimension(format!(
                "total variation between alphabets of size {} and {}",
                self.probs.len(),
                other.probs.len()
            )));
        }
        Ok(0.5
            * self
                .probs
                .iter()
                .zip(&other.probs)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }
}

impl TryFrom<Vec<f64>> for Pmf {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Pmf::new(v)
    }
}

impl From<Pmf> for Vec<f64> {
    fn from(p: Pmf) -> Self {
        p.probs
    }
}

/// Joint law over a product of finite alphabets, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawJoint", into = "RawJoint")]
pub struct JointPmf {
    dims: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawJoint {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl TryFrom<RawJoint> for JointPmf {
    type Error = Error;

    fn try_from(r: RawJoint) -> Result<Self> {
        JointPmf::new(r.dims, r.data)
    }
}

impl From<JointPmf> for RawJoint {
    fn from(j: JointPmf) -> Self {
        RawJoint {
            dims: j.dims,
            data: j.data,
        }
    }
}

impl JointPmf {
    pub fn new(dims: Vec<usize>, mut data: Vec<f64>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::Dimension(format!("joint pmf needs positive dims, got {dims:?}")));
        }
        let size: usize = dims.iter().product();
        if size != data.len() {
            return Err(Error::Dimension(format!(
                "dims {dims:?} need {size} entries, got {}",
                data.len()
            )));
        }
        normalize_in_place(&mut data, "joint pmf")?;
        Ok(Self { dims, data })
    }

    /// Product law of independent marginals, axis order as given.
    pub fn product(marginals: &[&Pmf]) -> Result<Self> {
        if marginals.is_empty() {
            return Err(Error::Dimension("product of zero marginals".into()));
        }
        let mut data = vec![1.0];
        for m in marginals {
            data = data
                .iter()
                .flat_map(|&a| m.probs().iter().map(move |&b| a * b))
                .collect();
        }
        let dims = marginals.iter().map(|m| m.alphabet_size()).collect();
        JointPmf::new(dims, data)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dims.len()];
        for k in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.dims[k + 1];
        }
        strides
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        let flat: usize = index.iter().zip(self.strides()).map(|(i, s)| i * s).sum();
        self.data[flat]
    }

    /// Sums out every axis not listed in `keep`; the result keeps the order of `keep`.
    pub fn marginalize(&self, keep: &[usize]) -> Result<JointPmf> {
        if keep.is_empty() || keep.iter().any(|&a| a >= self.ndim()) {
            return Err(Error::Dimension(format!(
                "cannot keep axes {keep:?} of a {}-axis joint",
                self.ndim()
            )));
        }
        let mut seen = vec![false; self.ndim()];
        for &a in keep {
            if std::mem::replace(&mut seen[a], true) {
                return Err(Error::Dimension(format!("axis {a} repeated in {keep:?}")));
            }
        }
        let out_dims: Vec<usize> = keep.iter().map(|&a| self.dims[a]).collect();
        let mut out_strides = vec![1; keep.len()];
        for k in (0..keep.len().saturating_sub(1)).rev() {
            out_strides[k] = out_strides[k + 1] * out_dims[k + 1];
        }
        let mut out = vec![0.0; out_dims.iter().product()];
        let mut idx = vec![0usize; self.ndim()];
        for &p in &self.data {
            let flat: usize = keep
                .iter()
                .zip(&out_strides)
                .map(|(&a, s)| idx[a] * s)
                .sum();
            out[flat] += p;
            for k in (0..idx.len()).rev() {
                idx[k] += 1;
                if idx[k] < self.dims[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        JointPmf::new(out_dims, out)
    }

    pub fn marginal(&self, axis: usize) -> Result<Pmf> {
        let m = self.marginalize(&[axis])?;
        Pmf::new(m.data)
    }

    /// Swaps two axes of a 2-axis joint.
    pub fn transpose(&self) -> Result<JointPmf> {
        self.require_axes(2)?;
        let (r, c) = (self.dims[0], self.dims[1]);
        let mut data = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                data[j * r + i] = self.data[i * c + j];
            }
        }
        Ok(JointPmf {
            dims: vec![c, r],
            data,
        })
    }

    fn require_axes(&self, n: usize) -> Result<()> {
        if self.ndim() != n {
            return Err(Error::Dimension(format!(
                "expected a {n}-axis joint, got dims {:?}",
                self.dims
            )));
        }
        Ok(())
    }
}

/// Row-stochastic channel law `P(output | input)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct TransitionMatrix {
    rows: usize,
    cols: usize,
    p: Vec<f64>,
}

impl TransitionMatrix {
    pub fn new(rows: usize, cols: usize, mut p: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || p.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} transition matrix with {} entries",
                p.len()
            )));
        }
        for (i, row) in p.chunks_mut(cols).enumerate() {
            normalize_in_place(row, &format!("transition row {i}"))?;
        }
        Ok(Self { rows, cols, p })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged transition matrix".into()));
        }
        Self::new(r, c, rows.into_iter().flatten().collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.p[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, input: usize, output: usize) -> f64 {
        self.p[input * self.cols + output]
    }

    /// Joint law of (input, output) for the given input distribution.
    pub fn joint(&self, input: &Pmf) -> Result<JointPmf> {
        self.check_input(input)?;
        let data = (0..self.rows)
            .flat_map(|x| self.row(x).iter().map(move |&w| input.probs()[x] * w))
            .collect();
        JointPmf::new(vec![self.rows, self.cols], data)
    }

    /// Output law induced by `input`.
    pub fn output(&self, input: &Pmf) -> Result<Pmf> {
        self.check_input(input)?;
        let mut q = vec![0.0; self.cols];
        for (x, &px) in input.probs().iter().enumerate() {
            for (qy, &w) in q.iter_mut().zip(self.row(x)) {
                *qy += px * w;
            }
        }
        Pmf::new(q)
    }

    /// Largest absolute entrywise difference.
    pub fn linf_distance(&self, other: &TransitionMatrix) -> Result<f64> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension("matrices of different shape".into()));
        }
        Ok(self
            .p
            .iter()
            .zip(&other.p)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    fn check_input(&self, input: &Pmf) -> Result<()> {
        if input.alphabet_size() != self.rows {
            return Err(Error::Dimension(format!(
                "input pmf over {} symbols for a channel with {} inputs",
                input.alphabet_size(),
                self.rows
            )));
        }
        Ok(())
    }
}

impl TryFrom<Vec<Vec<f64>>> for TransitionMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        TransitionMatrix::from_rows(rows)
    }
}

impl From<TransitionMatrix> for Vec<Vec<f64>> {
    fn from(m: TransitionMatrix) -> Self {
        m.p.chunks(m.cols).map(<[f64]>::to_vec).collect()
    }
}

pub fn entropy(p: &Pmf) -> f64 {
    entropy_of(p.probs())
}

pub fn joint_entropy(j: &JointPmf) -> f64 {
    entropy_of(j.data())
}

/// `I(A; B)` for a 2-axis joint.
pub fn mutual_information(j: &JointPmf) -> Result<f64> {
    j.require_axes(2)?;
    let a = j.marginal(0)?;
    let b = j.marginal(1)?;
    let cols = j.dims()[1];
    let mut mi = 0.0;
    for (k, &p) in j.data().iter().enumerate() {
        if p > PROB_FLOOR {
            let (x, y) = (k / cols, k % cols);
            mi += p * (p / (a.probs()[x] * b.probs()[y])).log2();
        }
    }
    Ok(mi.max(0.0))
}

/// `H(A | B)` where `given_axis` names B.
pub fn conditional_entropy(j: &JointPmf, given_axis: usize) -> Result<f64> {
    j.require_axes(2)?;
    if given_axis > 1 {
        return Err(Error::Dimension(format!("axis {given_axis} of a 2-axis joint")));
    }
    let h_given = entropy(&j.marginal(given_axis)?);
    Ok((joint_entropy(j) - h_given).max(0.0))
}

/// `I(A; B | C)` for axes of a 3-axis joint.
pub fn conditional_mutual_information(
    j: &JointPmf,
    a: usize,
    b: usize,
    given: usize,
) -> Result<f64> {
    j.require_axes(3)?;
    let abc = j.marginalize(&[a, b, given])?;
    let ac = j.marginalize(&[a, given])?;
    let bc = j.marginalize(&[b, given])?;
    let c = j.marginal(given)?;
    let (nb, nc) = (abc.dims()[1], abc.dims()[2]);
    let mut cmi = 0.0;
    for (k, &p) in abc.data().iter().enumerate() {
        if p > PROB_FLOOR {
            let (x, y, z) = (k / (nb * nc), (k / nc) % nb, k % nc);
            let num = p * c.probs()[z];
            let den = ac.data()[x * nc + z] * bc.data()[y * nc + z];
            cmi += p * (num / den).log2();
        }
    }
    Ok(cmi.max(0.0))
}

/// Result of a Blahut–Arimoto run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Capacity {
    /// Mutual information achieved by `input`; the capacity lies in
    /// `[bits, bits + gap]`.
    pub bits: f64,
    pub input: Pmf,
    pub iterations: usize,
    pub gap: f64,
}

/// Lower and upper capacity bounds at one Blahut–Arimoto iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaBounds {
    pub lower: f64,
    pub upper: f64,
}

/// Alternating-maximization capacity iteration, exposed step by step.
#[derive(Debug, Clone)]
pub struct BlahutArimoto<'a> {
    channel: &'a TransitionMatrix,
    input: Vec<f64>,
    divergence: Vec<f64>,
}

impl<'a> BlahutArimoto<'a> {
    pub fn new(channel: &'a TransitionMatrix) -> Self {
        let n = channel.rows();
        Self {
            channel,
            input: vec![1.0 / n as f64; n],
            divergence: vec![0.0; n],
        }
    }

    pub fn input(&self) -> &[f64] {
        &self.input
    }

    /// Evaluates the bounds at the current input, then moves to the next iterate.
    pub fn step(&mut self) -> BaBounds {
        let bounds = self.bounds();
        let peak = self.divergence.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for (p, d) in self.input.iter_mut().zip(&self.divergence) {
            *p *= (d - peak).exp2();
            total += *p;
        }
        self.input.iter_mut().for_each(|p| *p /= total);
        bounds
    }

    /// Refreshes `D(W(.|x) || q)` for every x and returns the bounds at the current input.
    pub fn bounds(&mut self) -> BaBounds {
        let w = self.channel;
        let mut q = vec![0.0; w.cols()];
        for (x, &px) in self.input.iter().enumerate() {
            for (qy, &wy) in q.iter_mut().zip(w.row(x)) {
                *qy += px * wy;
            }
        }
        for (x, d) in self.divergence.iter_mut().enumerate() {
            *d = w
                .row(x)
                .iter()
                .zip(&q)
                .filter(|(&wy, _)| wy > PROB_FLOOR)
                .map(|(&wy, &qy)| wy * (wy / qy).log2())
                .sum();
        }
        let lower = self
            .input
            .iter()
            .zip(&self.divergence)
            .map(|(p, d)| p * d)
            .sum::<f64>()
            .max(0.0);
        let upper = self
            .divergence
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
            .max(lower);
        BaBounds { lower, upper }
    }
}

/// Capacity of a discrete memoryless channel, stopping when the duality gap
/// `max_x D(W(.|x) || q) - I(p; W)` drops to `tol`.
pub fn channel_capacity_ba(w: &TransitionMatrix, tol: f64, max_iter: usize) -> Result<Capacity> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let mut ba = BlahutArimoto::new(w);
    let mut gap = f64::INFINITY;
    for it in 0..max_iter.max(1) {
        let input = ba.input().to_vec();
        let b = ba.step();
        gap = b.upper - b.lower;
        if gap <= tol {
            return Ok(Capacity {
                bits: b.lower,
                input: Pmf::new(input)?,
                iterations: it + 1,
                gap,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        gap,
    })
}

/// Plug-in mutual information with its Miller–Madow corrected companion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiEstimate {
    pub plug_in: f64,
    pub corrected: f64,
}

fn counted_entropy<K: Ord>(counts: &BTreeMap<K, u64>, n: f64) -> f64 {
    counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Empirical `I(A; B)` of paired samples.
///
/// The correction adds `(k_A - 1) + (k_B - 1) - (k_AB - 1)` over `2 N ln 2`,
/// with `k` counting occupied bins.
pub fn plug_in_mi_estimate(samples: &[(usize, usize)]) -> Result<MiEstimate> {
    if samples.is_empty() {
        return Err(Error::Empty("mutual information of zero samples".into()));
    }
    let mut ca = BTreeMap::new();
    let mut cb = BTreeMap::new();
    let mut cab = BTreeMap::new();
    for &(a, b) in samples {
        *ca.entry(a).or_insert(0u64) += 1;
        *cb.entry(b).or_insert(0u64) += 1;
        *cab.entry((a, b)).or_insert(0u64) += 1;
    }
    let n = samples.len() as f64;
    let plug_in = counted_entropy(&ca, n) + counted_entropy(&cb, n) - counted_entropy(&cab, n);
    let bins = |k: usize| k as f64 - 1.0;
    let correction =
        (bins(ca.len()) + bins(cb.len()) - bins(cab.len())) / (2.0 * n * std::f64::consts::LN_2);
    Ok(MiEstimate {
        plug_in,
        corrected: plug_in + correction,
    })
}
