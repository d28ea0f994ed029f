//! Mod-Λ channel numerics for lattices of dimension one and two.
//!
//! The fundamental region is the parallelepiped `Ω = {G u : u ∈ [-1/2, 1/2)^m}`.
//! The wrapped Gaussian density is evaluated either by the direct lattice sum
//! or, when that needs more terms, by its Poisson dual over `G^{-T} Z^m`;
//! both are the same theta series.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimensions with quadrature support.
pub const MAX_DIM: usize = 2;

/// Successive quadrature estimates must agree this closely (bits).
pub const ENTROPY_TOL: f64 = 1e-8;

/// Successive estimates of `∫_Ω f` must agree this closely.
const MASS_TOL: f64 = 1e-10;

/// Largest quadrature grid, in points.
const MAX_QUADRATURE_POINTS: usize = 1 << 24;

/// Gaussian tail cut, in standard deviations per dimension.
const DIRECT_TAIL_SIGMAS: f64 = 10.0;

/// Dual terms are dropped once their weight falls below this.
const DUAL_WEIGHT_FLOOR: f64 = 1e-18;

const REGION_SLACK: f64 = 1e-9;

/// Lattice `Λ = G Z^m` with per-dimension noise variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLattice", into = "RawLattice")]
pub struct LatticeSpec {
    m: usize,
    g: Vec<f64>,
    g_inv: Vec<f64>,
    volume: f64,
    pub sigma0_sq: f64,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
}

#[derive(Serialize, Deserialize)]
struct RawLattice {
    m: usize,
    g: Vec<Vec<f64>>,
    #[serde(default = "default_sigma0")]
    sigma0_sq: f64,
    sigma1_sq: f64,
    sigma2_sq: f64,
}

fn default_sigma0() -> f64 {
    1.0
}

impl TryFrom<RawLattice> for LatticeSpec {
    type Error = Error;

    fn try_from(r: RawLattice) -> Result<Self> {
        if r.g.len() != r.m {
            return Err(Error::Dimension(format!(
                "generator has {} rows, m = {}",
                r.g.len(),
                r.m
            )));
        }
        LatticeSpec::new(r.g, r.sigma0_sq, r.sigma1_sq, r.sigma2_sq)
    }
}

impl From<LatticeSpec> for RawLattice {
    fn from(s: LatticeSpec) -> Self {
        RawLattice {
            m: s.m,
            g: s.g.chunks(s.m).map(<[f64]>::to_vec).collect(),
            sigma0_sq: s.sigma0_sq,
            sigma1_sq: s.sigma1_sq,
            sigma2_sq: s.sigma2_sq,
        }
    }
}

impl LatticeSpec {
    /// `g` is given row by row; lattice points are `G u` for integer column vectors `u`.
    pub fn new(g: Vec<Vec<f64>>, sigma0_sq: f64, sigma1_sq: f64, sigma2_sq: f64) -> Result<Self> {
        let m = g.len();
        if m == 0 || m > MAX_DIM {
            return Err(Error::Dimension(format!("lattice dimension {m} not in 1..={MAX_DIM}")));
        }
        if g.iter().any(|row| row.len() != m) {
            return Err(Error::Dimension("generator matrix must be square".into()));
        }
        let g: Vec<f64> = g.into_iter().flatten().collect();
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec("generator has non-finite entries".into()));
        }
        for (name, s) in [("sigma0_sq", sigma0_sq), ("sigma1_sq", sigma1_sq), ("sigma2_sq", sigma2_sq)] {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidSpec(format!("{name} must be positive, got {s}")));
            }
        }
        let det = if m == 1 { g[0] } else { g[0] * g[3] - g[1] * g[2] };
        let scale = g.iter().fold(0.0f64, |a, v| a.max(v.abs())).powi(m as i32);
        if det.abs() <= 1e-12 * scale || det == 0.0 {
            return Err(Error::InvalidSpec("generator matrix is singular".into()));
        }
        let g_inv = if m == 1 {
            vec![1.0 / g[0]]
        } else {
            vec![g[3] / det, -g[1] / det, -g[2] / det, g[0] / det]
        };
        Ok(Self {
            m,
            g,
            g_inv,
            volume: det.abs(),
            sigma0_sq,
            sigma1_sq,
            sigma2_sq,
        })
    }

    /// The integer lattice in one dimension.
    pub fn integers(sigma1_sq: f64, sigma2_sq: f64) -> Result<Self> {
        Self::new(vec![vec![1.0]], 1.0, sigma1_sq, sigma2_sq)
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    /// `V(Λ) = |det G|`.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn generator(&self) -> Vec<Vec<f64>> {
        self.g.chunks(self.m).map(<[f64]>::to_vec).collect()
    }

    /// `G u`.
    pub fn point(&self, u: &[f64]) -> Vec<f64> {
        mat_vec(&self.g, self.m, u)
    }

    /// `G^{-1} x`.
    pub fn coordinates(&self, x: &[f64]) -> Vec<f64> {
        mat_vec(&self.g_inv, self.m, x)
    }

    /// Largest norm of a point of Ω, attained at a vertex of the parallelepiped.
    pub fn region_radius(&self) -> f64 {
        (0..1usize << self.m)
            .map(|mask| {
                let u: Vec<f64> = (0..self.m)
                    .map(|i| if mask >> i & 1 == 1 { 0.5 } else { -0.5 })
                    .collect();
                norm(&self.point(&u))
            })
            .fold(0.0, f64::max)
    }

    /// Whether `x` lies in Ω up to a small slack for round-off.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.coordinates(x)
            .iter()
            .all(|&u| (-0.5 - REGION_SLACK..0.5 + REGION_SLACK).contains(&u))
    }

    fn check_vector(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.m {
            return Err(Error::Dimension(format!("vector of length {} for m = {}", x.len(), self.m)));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite vector {x:?}")));
        }
        Ok(())
    }
}

fn mat_vec(a: &[f64], m: usize, v: &[f64]) -> Vec<f64> {
    (0..m)
        .map(|i| (0..m).map(|j| a[i * m + j] * v[j]).sum())
        .collect()
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

fn norm(v: &[f64]) -> f64 {
    norm_sq(v).sqrt()
}

/// Integer offsets `k` with `u - k ∈ [-1/2, 1/2)`.
fn nearest_offsets(u: &[f64]) -> Vec<f64> {
    u.iter()
        .map(|&c| {
            let mut k = (c + 0.5).floor();
            let frac = c - k;
            if frac >= 0.5 {
                k += 1.0;
            } else if frac < -0.5 {
                k -= 1.0;
            }
            k
        })
        .collect()
}

/// The element of Ω congruent to `x` modulo Λ.
pub fn mod_lambda_reduce(x: &[f64], spec: &LatticeSpec) -> Result<Vec<f64>> {
    spec.check_vector(x)?;
    Ok(reduce_unchecked(x, spec))
}

fn reduce_unchecked(x: &[f64], spec: &LatticeSpec) -> Vec<f64> {
    let k = nearest_offsets(&spec.coordinates(x));
    if k.iter().all(|&c| c == 0.0) {
        return x.to_vec();
    }
    let shift = spec.point(&k);
    x.iter().zip(shift).map(|(a, b)| a - b).collect()
}

/// How the theta series is summed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaMethod {
    /// Sum over lattice points near the argument.
    Direct,
    /// Fourier series over the dual lattice.
    Dual,
}

/// Density of `N mod Λ` for `N ~ N(0, sigma_sq I_m)`, with its series terms precomputed.
#[derive(Debug, Clone)]
pub struct WrappedGaussian {
    m: usize,
    sigma_sq: f64,
    method: ThetaMethod,
    /// Lattice points (direct) or dual points (dual), flattened.
    points: Vec<f64>,
    /// Dual coefficients `exp(-2 π² σ² |k|²) / V`; empty for direct.
    weights: Vec<f64>,
    norm: f64,
}

impl WrappedGaussian {
    /// Picks whichever series needs fewer terms.
    pub fn new(spec: &LatticeSpec, sigma_sq: f64) -> Result<Self> {
        let (direct_r, dual_r) = Self::radii(spec, sigma_sq)?;
        let m = spec.m as i32;
        let direct_terms = direct_r.powi(m) / spec.volume;
        let dual_terms = dual_r.powi(m) * spec.volume;
        let method = if direct_terms <= dual_terms {
            ThetaMethod::Direct
        } else {
            ThetaMethod::Dual
        };
        Self::with_method(spec, sigma_sq, method)
    }

    pub fn with_method(spec: &LatticeSpec, sigma_sq: f64, method: ThetaMethod) -> Result<Self> {
        let (direct_r, dual_r) = Self::radii(spec, sigma_sq)?;
        let m = spec.m;
        let (points, weights, norm) = match method {
            ThetaMethod::Direct => {
                let pts = enumerate_points(&spec.g, &spec.g_inv, m, direct_r);
                (pts, Vec::new(), (2.0 * PI * sigma_sq).powf(-(m as f64) / 2.0))
            }
            ThetaMethod::Dual => {
                // dual generator G^{-T}; its inverse is G^T
                let dual_g = transpose(&spec.g_inv, m);
                let dual_g_inv = transpose(&spec.g, m);
                let pts = enumerate_points(&dual_g, &dual_g_inv, m, dual_r);
                let w = pts
                    .chunks(m)
                    .map(|k| (-2.0 * PI * PI * sigma_sq * norm_sq(k)).exp() / spec.volume)
                    .collect();
                (pts, w, 1.0)
            }
        };
        Ok(Self {
            m,
            sigma_sq,
            method,
            points,
            weights,
            norm,
        })
    }

    /// Enumeration radii for the direct and the dual series.
    fn radii(spec: &LatticeSpec, sigma_sq: f64) -> Result<(f64, f64)> {
        if !(sigma_sq > 0.0 && sigma_sq.is_finite()) {
            return Err(Error::Domain(format!("variance must be positive, got {sigma_sq}")));
        }
        let m = spec.m as f64;
        let cut = DIRECT_TAIL_SIGMAS * (m * sigma_sq).sqrt() + spec.region_radius();
        // |n' + b| <= cut with n' anywhere in Ω needs |b| <= cut + region radius
        let direct = cut + spec.region_radius();
        let dual = (-DUAL_WEIGHT_FLOOR.ln() / (2.0 * PI * PI * sigma_sq)).sqrt();
        Ok((direct, dual))
    }

    pub fn method(&self) -> ThetaMethod {
        self.method
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma_sq
    }

    pub fn terms(&self) -> usize {
        self.points.len() / self.m
    }

    /// Density at `n`; no region check.
    pub fn density(&self, n: &[f64]) -> f64 {
        match self.method {
            ThetaMethod::Direct => {
                let two_s2 = 2.0 * self.sigma_sq;
                self.norm
                    * self
                        .points
                        .chunks(self.m)
                        .map(|b| {
                            let d: f64 = n.iter().zip(b).map(|(a, c)| (a + c) * (a + c)).sum();
                            (-d / two_s2).exp()
                        })
                        .sum::<f64>()
            }
            ThetaMethod::Dual => self
                .points
                .chunks(self.m)
                .zip(&self.weights)
                .map(|(k, w)| {
                    let phase: f64 = n.iter().zip(k).map(|(a, b)| a * b).sum();
                    w * (2.0 * PI * phase).cos()
                })
                .sum::<f64>()
                .max(0.0),
        }
    }
}

fn transpose(a: &[f64], m: usize) -> Vec<f64> {
    (0..m * m).map(|k| a[(k % m) * m + k / m]).collect()
}

/// All points `G u`, `u` integer, with norm at most `radius`, in a fixed order.
fn enumerate_points(g: &[f64], g_inv: &[f64], m: usize, radius: f64) -> Vec<f64> {
    // |u_i| = |row_i(G^{-1}) . b| <= |row_i(G^{-1})| radius
    let bounds: Vec<i64> = (0..m)
        .map(|i| (norm(&g_inv[i * m..(i + 1) * m]) * radius).ceil() as i64 + 1)
        .collect();
    let mut out = Vec::new();
    let mut u = vec![0i64; m];
    let mut push = |u: &[i64]| {
        let uf: Vec<f64> = u.iter().map(|&c| c as f64).collect();
        let b = mat_vec(g, m, &uf);
        if norm(&b) <= radius {
            out.extend(b);
        }
    };
    if m == 1 {
        for a in -bounds[0]..=bounds[0] {
            u[0] = a;
            push(&u);
        }
    } else {
        for a in -bounds[0]..=bounds[0] {
            for c in -bounds[1]..=bounds[1] {
                u[0] = a;
                u[1] = c;
                push(&u);
            }
        }
    }
    out
}

/// `f_{Λ,σ²}(n')` for `n'` in Ω.
pub fn wrapped_gaussian_pdf(n_prime: &[f64], spec: &LatticeSpec, sigma_sq: f64) -> Result<f64> {
    spec.check_vector(n_prime)?;
    if !spec.contains(n_prime) {
        return Err(Error::Domain(format!("{n_prime:?} is outside the fundamental region")));
    }
    Ok(WrappedGaussian::new(spec, sigma_sq)?.density(n_prime))
}

/// Converged quadrature over Ω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    /// `-∫ f log2 f`.
    pub entropy_bits: f64,
    /// `∫ f`.
    pub mass: f64,
    /// Grid points per dimension at the accepted level.
    pub points_per_dim: usize,
}

/// Midpoint sums of `f` and `-f log2 f` on an `n^m` grid over Ω.
fn midpoint_sums(spec: &LatticeSpec, wg: &WrappedGaussian, n: usize) -> (f64, f64) {
    let m = spec.m;
    let total = n.pow(m as u32);
    let chunk = 4096;
    let partial: Vec<(f64, f64)> = (0..total.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut mass = 0.0;
            let mut ent = 0.0;
            let mut u = vec![0.0; m];
            for idx in c * chunk..((c + 1) * chunk).min(total) {
                let mut rest = idx;
                for ui in u.iter_mut() {
                    *ui = -0.5 + ((rest % n) as f64 + 0.5) / n as f64;
                    rest /= n;
                }
                let f = wg.density(&spec.point(&u));
                mass += f;
                if f > 1e-300 {
                    ent -= f * f.log2();
                }
            }
            (mass, ent)
        })
        .collect();
    let cell = spec.volume / total as f64;
    let (mass, ent) = partial
        .iter()
        .fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d));
    (mass * cell, ent * cell)
}

/// Integrates the wrapped density and its entropy over Ω, doubling the grid
/// until successive levels agree.
pub fn wrapped_gaussian_quadrature(spec: &LatticeSpec, sigma_sq: f64) -> Result<Quadrature> {
    let wg = WrappedGaussian::new(spec, sigma_sq)?;
    let sigma = sigma_sq.sqrt();
    // the coarsest grid must resolve the peak along every generator direction
    let widest = (0..spec.m)
        .map(|j| norm(&(0..spec.m).map(|i| spec.g[i * spec.m + j]).collect::<Vec<_>>()))
        .fold(0.0, f64::max);
    let mut n = ((4.0 * widest / sigma).ceil() as usize).max(16).next_power_of_two();
    let (mut mass, mut ent) = midpoint_sums(spec, &wg, n);
    let mut levels = 1;
    loop {
        let next = n * 2;
        if next.pow(spec.m as u32) > MAX_QUADRATURE_POINTS {
            return Err(Error::NonConvergence {
                iterations: levels,
                gap: f64::NAN,
            });
        }
        let (m2, e2) = midpoint_sums(spec, &wg, next);
        levels += 1;
        let done = (e2 - ent).abs() < ENTROPY_TOL && (m2 - mass).abs() < MASS_TOL;
        n = next;
        mass = m2;
        ent = e2;
        if done {
            return Ok(Quadrature {
                entropy_bits: ent,
                mass,
                points_per_dim: n,
            });
        }
    }
}

/// `h(Λ, σ²)` in bits.
pub fn wrapped_gaussian_entropy(spec: &LatticeSpec, sigma_sq: f64) -> Result<f64> {
    Ok(wrapped_gaussian_quadrature(spec, sigma_sq)?.entropy_bits)
}

/// The pieces of the mod-Λ feedback secrecy capacity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModLambdaCapacity {
    pub entropy_bits: f64,
    pub log2_volume: f64,
    pub capacity_bits: f64,
}

/// `log2 V(Λ) - h(Λ, σ1²)`, with the pieces.
pub fn mod_lambda_report(spec: &LatticeSpec) -> Result<ModLambdaCapacity> {
    let entropy_bits = wrapped_gaussian_entropy(spec, spec.sigma1_sq)?;
    let log2_volume = spec.volume.log2();
    Ok(ModLambdaCapacity {
        entropy_bits,
        log2_volume,
        capacity_bits: (log2_volume - entropy_bits).max(0.0),
    })
}

/// Secrecy capacity of the mod-Λ channel with feedback; depends on σ1² only.
pub fn mod_lambda_capacity(spec: &LatticeSpec) -> Result<f64> {
    Ok(mod_lambda_report(spec)?.capacity_bits)
}

/// A uniform point of Ω.
pub fn sample_uniform_region<R: Rng + ?Sized>(spec: &LatticeSpec, rng: &mut R) -> Vec<f64> {
    let u: Vec<f64> = (0..spec.m).map(|_| rng.random::<f64>() - 0.5).collect();
    reduce_unchecked(&spec.point(&u), spec)
}

/// Outputs at the destination and wiretapper.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModLambdaOutputs {
    pub y: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
}

/// Draws noise with per-dimension variances σ1², σ2² and one combined noise draw per use.
pub struct ModLambdaSampler<'a> {
    spec: &'a LatticeSpec,
    main: Normal<f64>,
    wiretap: Normal<f64>,
}

impl<'a> ModLambdaSampler<'a> {
    pub fn new(spec: &'a LatticeSpec) -> Result<Self> {
        let normal = |s2: f64| {
            Normal::new(0.0, s2.sqrt()).map_err(|e| Error::InvalidSpec(format!("noise variance: {e}")))
        };
        Ok(Self {
            spec,
            main: normal(spec.sigma1_sq)?,
            wiretap: normal(spec.sigma2_sq)?,
        })
    }

    /// `(y, z)` for one channel use.
    pub fn transmit<R: Rng + ?Sized>(&self, x: &[f64], x1: &[f64], rng: &mut R) -> (Vec<f64>, Vec<f64>) {
        let m = self.spec.m;
        let mut y = Vec::with_capacity(m);
        let mut z = Vec::with_capacity(m);
        for i in 0..m {
            y.push(x[i] + x1[i] + self.main.sample(rng));
            z.push(x[i] + x1[i] + self.wiretap.sample(rng));
        }
        (reduce_unchecked(&y, self.spec), reduce_unchecked(&z, self.spec))
    }
}

pub fn sample_mod_lambda<R: Rng + ?Sized>(
    spec: &LatticeSpec,
    x: &[Vec<f64>],
    x1: &[Vec<f64>],
    rng: &mut R,
) -> Result<ModLambdaOutputs> {
    if x.len() != x1.len() {
        return Err(Error::Dimension(format!("{} source vs {} feedback vectors", x.len(), x1.len())));
    }
    for v in x.iter().chain(x1) {
        spec.check_vector(v)?;
    }
    let sampler = ModLambdaSampler::new(spec)?;
    let mut out = ModLambdaOutputs::default();
    for (a, b) in x.iter().zip(x1) {
        let (y, z) = sampler.transmit(a, b, rng);
        out.y.push(y);
        out.z.push(z);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use crate::stats::{chi_squared_gof, chi_squared_uniformity};
    use proptest::prelude::*;

    fn hex(s1: f64) -> LatticeSpec {
        LatticeSpec::new(vec![vec![1.0, 0.5], vec![0.0, 3f64.sqrt() / 2.0]], 1.0, s1, 0.25).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(LatticeSpec::new(vec![vec![1.0, 2.0], vec![2.0, 4.0]], 1.0, 1.0, 1.0).is_err());
        assert!(LatticeSpec::new(vec![vec![1.0]], 1.0, 0.0, 1.0).is_err());
        assert!(LatticeSpec::new(vec![vec![1.0; 3]; 3], 1.0, 1.0, 1.0).is_err());
        let s = hex(0.1);
        assert!((s.volume() - 3f64.sqrt() / 2.0).abs() < 1e-15);
        let json = r#"{"m": 1, "g": [[1.0]], "sigma1_sq": 0.09, "sigma2_sq": 0.25, "sigma0_sq": 0.01}"#;
        let parsed: LatticeSpec = serde_json::from_str(json).unwrap();
        assert_eq!(parsed.volume(), 1.0);
        assert_eq!(parsed.sigma1_sq, 0.09);
    }

    #[test]
    fn reduce_examples() {
        let z = LatticeSpec::integers(0.1, 0.1).unwrap();
        let r = mod_lambda_reduce(&[0.7], &z).unwrap();
        assert!((r[0] + 0.3).abs() < 1e-15);
        assert_eq!(mod_lambda_reduce(&[0.25], &z).unwrap(), vec![0.25]);
        assert_eq!(mod_lambda_reduce(&[-0.5], &z).unwrap(), vec![-0.5]);
        assert_eq!(mod_lambda_reduce(&[0.5], &z).unwrap(), vec![-0.5]);
        assert!(mod_lambda_reduce(&[f64::NAN], &z).is_err());
        assert!(mod_lambda_reduce(&[0.1, 0.2], &z).is_err());

        let two = LatticeSpec::new(vec![vec![2.0, 0.0], vec![0.0, 2.0]], 1.0, 1.0, 1.0).unwrap();
        let r = mod_lambda_reduce(&[3.1, -2.9], &two).unwrap();
        // per-coordinate oracle for diagonal G: x - 2 floor(x / 2 + 1/2)
        let oracle: Vec<f64> = [3.1f64, -2.9].iter().map(|x| x - 2.0 * (x / 2.0 + 0.5).floor()).collect();
        for (a, b) in r.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((r[0] + 0.9).abs() < 1e-12 && (r[1] + 0.9).abs() < 1e-12);
    }

    #[test]
    fn pdf_limits() {
        let wide = LatticeSpec::integers(1e4, 1.0).unwrap();
        for k in 0..=20 {
            let x = -0.5 + k as f64 / 20.0 * 0.999;
            let f = wrapped_gaussian_pdf(&[x], &wide, 1e4).unwrap();
            assert!((f - 1.0).abs() < 1e-10, "f({x}) = {f}");
        }
        let narrow = LatticeSpec::integers(1e-4, 1.0).unwrap();
        let f = wrapped_gaussian_pdf(&[0.0], &narrow, 1e-4).unwrap();
        let peak = (2.0 * PI * 1e-4f64).powf(-0.5);
        assert!((f / peak - 1.0).abs() < 1e-12);
        assert!(wrapped_gaussian_pdf(&[0.7], &narrow, 1e-4).is_err());
    }

    #[test]
    fn pdf_matches_brute_force_theta_sum() {
        let z = LatticeSpec::integers(0.25, 1.0).unwrap();
        // 10^6-term direct sum at 50 digits
        let oracle = 0.999_999_994_649_424;
        let f = wrapped_gaussian_pdf(&[0.25], &z, 0.25).unwrap();
        assert!((f - oracle).abs() < 1e-13, "{f}");
    }

    #[test]
    fn direct_and_dual_series_agree() {
        for spec in [LatticeSpec::integers(1.0, 1.0).unwrap(), hex(1.0)] {
            for s2 in [0.05, 0.2, 0.6] {
                let a = WrappedGaussian::with_method(&spec, s2, ThetaMethod::Direct).unwrap();
                let b = WrappedGaussian::with_method(&spec, s2, ThetaMethod::Dual).unwrap();
                let mut rng = substream(4, 0);
                for _ in 0..50 {
                    let p = sample_uniform_region(&spec, &mut rng);
                    let (fa, fb) = (a.density(&p), b.density(&p));
                    assert!((fa - fb).abs() < 1e-12 * fa.max(1.0), "{fa} vs {fb} at {p:?}");
                }
            }
        }
    }

    #[test]
    fn entropy_limits() {
        let wide = LatticeSpec::integers(1e4, 1.0).unwrap();
        assert!(wrapped_gaussian_entropy(&wide, 1e4).unwrap().abs() < 1e-6);
        let narrow = LatticeSpec::integers(1e-4, 1.0).unwrap();
        let h = wrapped_gaussian_entropy(&narrow, 1e-4).unwrap();
        let gaussian = 0.5 * (2.0 * PI * std::f64::consts::E * 1e-4).log2();
        assert!((h - gaussian).abs() < 1e-3);
    }

    #[test]
    fn entropy_matches_fine_trapezoid_oracle() {
        let z = LatticeSpec::integers(0.09, 1.0).unwrap();
        // periodic trapezoid on 10^7 points with a 41-term theta sum
        let oracle = -0.041_894_882_391_980_55;
        let h = wrapped_gaussian_entropy(&z, 0.09).unwrap();
        assert!((h - oracle).abs() < 1e-6, "{h}");
        let c = mod_lambda_capacity(&z).unwrap();
        assert!((c + oracle).abs() < 1e-6);
    }

    #[test]
    fn hexagonal_lattice_matches_grid_oracle() {
        // 10^6-point midpoint grid, 17x17 lattice points
        let spec = hex(0.04);
        let q = wrapped_gaussian_quadrature(&spec, 0.04).unwrap();
        assert!((q.mass - 1.0).abs() < 1e-8);
        assert!((q.entropy_bits - (-0.686_170_142_631_885_9)).abs() < 1e-6);
        let r = mod_lambda_report(&spec).unwrap();
        assert!((r.capacity_bits - 0.478_651_392_992_463_95).abs() < 1e-6);
    }

    #[test]
    fn density_integrates_to_one() {
        let z = LatticeSpec::integers(1.0, 1.0).unwrap();
        for s in [0.1f64, 0.3, 1.0] {
            let q = wrapped_gaussian_quadrature(&z, s * s).unwrap();
            assert!((q.mass - 1.0).abs() < 1e-8, "sigma {s}: {}", q.mass);
        }
    }

    #[test]
    fn entropy_monotone_and_capacity_nonincreasing() {
        let z = LatticeSpec::integers(1.0, 1.0).unwrap();
        let sigmas = [0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 1.0, 3.0];
        let hs: Vec<f64> = sigmas
            .iter()
            .map(|s: &f64| wrapped_gaussian_entropy(&z, s * s).unwrap())
            .collect();
        for w in hs.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "{hs:?}");
        }
        assert!(hs.iter().all(|&h| h <= 1e-8));
        let caps: Vec<f64> = sigmas
            .iter()
            .map(|s| mod_lambda_capacity(&LatticeSpec::integers(s * s, 1.0).unwrap()).unwrap())
            .collect();
        for w in caps.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
        assert!(caps.iter().all(|&c| c >= 0.0));
    }

    #[test]
    fn capacity_small_sigma_closed_form() {
        let z = LatticeSpec::integers(1e-4, 1.0).unwrap();
        let c = mod_lambda_capacity(&z).unwrap();
        let closed = (1.0 / (0.01 * (2.0 * PI * std::f64::consts::E).sqrt())).log2();
        assert!((c - closed).abs() < 1e-3);
        let wide = LatticeSpec::integers(1e4, 1.0).unwrap();
        assert!(mod_lambda_capacity(&wide).unwrap() <= 1e-6);
    }

    #[test]
    fn sampling_without_noise_is_identity() {
        let spec = LatticeSpec::new(vec![vec![1.0]], 1e-20, 1e-20, 1e-20).unwrap();
        let x = vec![vec![0.1], vec![-0.4], vec![0.49]];
        let out = sample_mod_lambda(&spec, &x, &vec![vec![0.0]; 3], &mut substream(2, 0)).unwrap();
        for (a, b) in x.iter().zip(&out.y) {
            assert!((a[0] - b[0]).abs() < 1e-8);
        }
    }

    #[test]
    fn uniform_feedback_makes_wiretap_output_uniform() {
        let spec = LatticeSpec::integers(0.01, 0.0025).unwrap();
        let sampler = ModLambdaSampler::new(&spec).unwrap();
        let mut rng = substream(21, 0);
        let bins = 64;
        let x = [0.3];
        let samples: Vec<usize> = (0..1_000_000)
            .map(|_| {
                let x1 = sample_uniform_region(&spec, &mut rng);
                let (_, z) = sampler.transmit(&x, &x1, &mut rng);
                (((z[0] + 0.5) * bins as f64) as usize).min(bins - 1)
            })
            .collect();
        let (_, p) = chi_squared_uniformity(&samples, bins).unwrap();
        assert!(p > 0.01, "p = {p}");
    }

    #[test]
    fn wrapped_noise_follows_density() {
        let spec = LatticeSpec::integers(0.01, 0.09).unwrap();
        let sampler = ModLambdaSampler::new(&spec).unwrap();
        let wg = WrappedGaussian::new(&spec, 0.09).unwrap();
        let mut rng = substream(8, 0);
        let bins = 64;
        let x = [0.2];
        let mut counts = vec![0u64; bins];
        for _ in 0..200_000 {
            let x1 = sample_uniform_region(&spec, &mut rng);
            let (_, z) = sampler.transmit(&x, &x1, &mut rng);
            let e = mod_lambda_reduce(&[z[0] - x[0] - x1[0]], &spec).unwrap()[0];
            counts[(((e + 0.5) * bins as f64) as usize).min(bins - 1)] += 1;
        }
        // bin probabilities from the density by a fine midpoint rule
        let expected: Vec<f64> = (0..bins)
            .map(|b| {
                let lo = -0.5 + b as f64 / bins as f64;
                (0..200)
                    .map(|k| wg.density(&[lo + (k as f64 + 0.5) / (200.0 * bins as f64)]))
                    .sum::<f64>()
                    / (200.0 * bins as f64)
            })
            .collect();
        let (_, p) = chi_squared_gof(&counts, &expected).unwrap();
        assert!(p > 0.01, "p = {p}");
    }

    proptest! {
        #[test]
        fn reduce_is_idempotent(a in -50.0f64..50.0, b in -50.0f64..50.0) {
            let spec = hex(0.1);
            let r = mod_lambda_reduce(&[a, b], &spec).unwrap();
            prop_assert!(spec.contains(&r));
            prop_assert_eq!(mod_lambda_reduce(&r, &spec).unwrap(), r);
        }

        #[test]
        fn reduce_ignores_lattice_shifts(
            a in -5.0f64..5.0, b in -5.0f64..5.0, u in -20i32..20, v in -20i32..20
        ) {
            let spec = hex(0.1);
            let shift = spec.point(&[u as f64, v as f64]);
            let r1 = mod_lambda_reduce(&[a, b], &spec).unwrap();
            let r2 = mod_lambda_reduce(&[a + shift[0], b + shift[1]], &spec).unwrap();
            for (p, q) in r1.iter().zip(&r2) {
                prop_assert!((p - q).abs() < 1e-9);
            }
        }
    }
}
