//! Modulo-additive wiretap channels with destination feedback.
//!
//! At each use the source sends `x`, the destination sends `x1`, and
//!
//! ```text
//! y0 = x + x1 + n0  (mod |Y0|)   at the source
//! y  = x + x1 + n1  (mod |Y|)    at the destination
//! z  = x + x1 + n2  (mod |Z|)    at the wiretapper
//! ```
//!
//! with `(n0, n1, n2)` drawn i.i.d. from a joint noise law.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info_theory::{JointPmf, Pmf, TransitionMatrix, PROB_FLOOR};

/// Column of the erasure symbol in half-duplex equivalent channels `{0, erasure, 1}`.
pub const ERASURE: usize = 1;

/// Alphabet sizes and noise law of a modulo-additive channel with feedback.
#[derive(Debug, Clone, PartialEq)]
pub struct ModAddChannelSpec {
    pub x_size: usize,
    pub x1_size: usize,
    pub y0_size: usize,
    pub y_size: usize,
    pub z_size: usize,
    /// Joint law of `(N0, N1, N2)` with dims `(|Y0|, |Y|, |Z|)`.
    noise: JointPmf,
}

impl ModAddChannelSpec {
    pub fn new(
        x_size: usize,
        x1_size: usize,
        y0_size: usize,
        y_size: usize,
        z_size: usize,
        noise: JointPmf,
    ) -> Result<Self> {
        if [x_size, x1_size, y0_size, y_size, z_size].contains(&0) {
            return Err(Error::InvalidSpec("alphabet sizes must be positive".into()));
        }
        if x_size > y_size || x_size > z_size {
            return Err(Error::InvalidSpec(format!(
                "|X| = {x_size} must not exceed |Y| = {y_size} or |Z| = {z_size}"
            )));
        }
        if noise.dims() != [y0_size, y_size, z_size] {
            return Err(Error::InvalidSpec(format!(
                "noise law dims {:?} do not match (|Y0|, |Y|, |Z|) = ({y0_size}, {y_size}, {z_size})",
                noise.dims()
            )));
        }
        Ok(Self {
            x_size,
            x1_size,
            y0_size,
            y_size,
            z_size,
            noise,
        })
    }

    /// Builds a spec from a law of `(N1, N2)` with `N0` independent and uniform.
    pub fn with_uniform_feedback_noise(
        x_size: usize,
        x1_size: usize,
        y0_size: usize,
        n1n2: &JointPmf,
    ) -> Result<Self> {
        if n1n2.ndim() != 2 {
            return Err(Error::Dimension(format!(
                "(N1, N2) law must have 2 axes, got {:?}",
                n1n2.dims()
            )));
        }
        let (y_size, z_size) = (n1n2.dims()[0], n1n2.dims()[1]);
        let n0 = Pmf::uniform(y0_size)?;
        let data = n0
            .probs()
            .iter()
            .flat_map(|&a| n1n2.data().iter().map(move |&b| a * b))
            .collect();
        let noise = JointPmf::new(vec![y0_size, y_size, z_size], data)?;
        Self::new(x_size, x1_size, y0_size, y_size, z_size, noise)
    }

    pub fn noise(&self) -> &JointPmf {
        &self.noise
    }

    /// Law of `(N1, N2)`.
    pub fn main_wiretap_noise(&self) -> JointPmf {
        self.noise.marginalize(&[1, 2]).expect("3-axis noise law")
    }

    pub fn main_noise(&self) -> Pmf {
        self.noise.marginal(1).expect("3-axis noise law")
    }

    pub fn wiretap_noise(&self) -> Pmf {
        self.noise.marginal(2).expect("3-axis noise law")
    }

    /// `P(y | x)` with the feedback silent.
    pub fn main_channel(&self) -> TransitionMatrix {
        additive_channel(self.x_size, &self.main_noise())
    }

    /// `P(z | x)` with the feedback silent.
    pub fn wiretap_channel(&self) -> TransitionMatrix {
        additive_channel(self.x_size, &self.wiretap_noise())
    }

    fn check_symbol(&self, what: &str, s: usize, size: usize) -> Result<()> {
        if s >= size {
            return Err(Error::Domain(format!("{what} symbol {s} outside alphabet of size {size}")));
        }
        Ok(())
    }
}

/// `P(out | x) = noise(out - x mod q)` for inputs `0..x_size`.
pub(crate) fn additive_channel(x_size: usize, noise: &Pmf) -> TransitionMatrix {
    let q = noise.alphabet_size();
    let mut p = vec![0.0; x_size * q];
    for x in 0..x_size {
        for (n, &pn) in noise.probs().iter().enumerate() {
            p[x * q + (x + n) % q] += pn;
        }
    }
    TransitionMatrix::new(x_size, q, p).expect("shifted rows of a pmf")
}

/// Correlation structure between the main and wiretap BSC noises.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Correlation {
    Independent,
    /// `N1 = N2 + N'`: the main channel is a degraded wiretap channel.
    #[serde(alias = "degraded-main")]
    DegradedMain,
    /// `N2 = N1 + N'`: the wiretap channel is a degraded main channel.
    #[serde(alias = "degraded-wiretap")]
    DegradedWiretap,
    Noiseless,
    /// Arbitrary 2x2 law of `(N1, N2)`, rows indexed by `N1`.
    Custom(Vec<Vec<f64>>),
}

/// Binary symmetric wiretap channel with flip probabilities `eps` (main) and
/// `delta` (wiretap).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BscWiretapSpec {
    pub eps: f64,
    pub delta: f64,
    #[serde(default = "default_correlation")]
    pub correlation: Correlation,
}

fn default_correlation() -> Correlation {
    Correlation::Independent
}

impl BscWiretapSpec {
    pub fn new(eps: f64, delta: f64, correlation: Correlation) -> Result<Self> {
        let spec = Self {
            eps,
            delta,
            correlation,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eps", self.eps), ("delta", self.delta)] {
            if !(0.0..=0.5).contains(&v) {
                return Err(Error::InvalidSpec(format!("{name} = {v} outside [0, 1/2]")));
            }
        }
        match &self.correlation {
            Correlation::DegradedMain if self.delta > self.eps => Err(Error::InvalidSpec(format!(
                "degraded main channel needs delta <= eps, got eps = {}, delta = {}",
                self.eps, self.delta
            ))),
            Correlation::DegradedWiretap if self.eps > self.delta => {
                Err(Error::InvalidSpec(format!(
                    "degraded wiretap channel needs eps <= delta, got eps = {}, delta = {}",
                    self.eps, self.delta
                )))
            }
            Correlation::Noiseless if self.eps != 0.0 || self.delta != 0.0 => Err(
                Error::InvalidSpec("noiseless case needs eps = delta = 0".into()),
            ),
            Correlation::Custom(rows) => {
                let law = custom_law(rows)?;
                let n1 = law.marginal(0)?.probs()[1];
                let n2 = law.marginal(1)?.probs()[1];
                if (n1 - self.eps).abs() > 1e-9 || (n2 - self.delta).abs() > 1e-9 {
                    return Err(Error::InvalidSpec(format!(
                        "custom law has Pr(N1=1) = {n1}, Pr(N2=1) = {n2}; expected {} and {}",
                        self.eps, self.delta
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Flip probability of the auxiliary noise `N'` in the degraded cases.
    pub fn n_prime(&self) -> Option<f64> {
        match self.correlation {
            Correlation::DegradedMain => Some(degraded_flip(self.eps, self.delta)),
            Correlation::DegradedWiretap => Some(degraded_flip(self.delta, self.eps)),
            _ => None,
        }
    }

    /// Law of `(N1, N2)` as a 2x2 joint.
    pub fn noise_law(&self) -> Result<JointPmf> {
        self.validate()?;
        let (e, d) = (self.eps, self.delta);
        let data = match &self.correlation {
            Correlation::Independent => {
                vec![(1.0 - e) * (1.0 - d), (1.0 - e) * d, e * (1.0 - d), e * d]
            }
            Correlation::Noiseless => vec![1.0, 0.0, 0.0, 0.0],
            Correlation::DegradedMain => {
                // P(n1, n2) = P(n2) P(n' = n1 xor n2)
                let f = degraded_flip(e, d);
                vec![(1.0 - d) * (1.0 - f), d * f, (1.0 - d) * f, d * (1.0 - f)]
            }
            Correlation::DegradedWiretap => {
                // P(n1, n2) = P(n1) P(n' = n1 xor n2)
                let f = degraded_flip(d, e);
                vec![(1.0 - e) * (1.0 - f), (1.0 - e) * f, e * f, e * (1.0 - f)]
            }
            Correlation::Custom(rows) => return custom_law(rows),
        };
        JointPmf::new(vec![2, 2], data)
    }
}

/// `(larger - smaller) / (1 - 2 smaller)`: flip probability that turns
/// BSC(smaller) into BSC(larger) when cascaded.
fn degraded_flip(larger: f64, smaller: f64) -> f64 {
    if larger == smaller {
        0.0
    } else {
        (larger - smaller) / (1.0 - 2.0 * smaller)
    }
}

fn custom_law(rows: &[Vec<f64>]) -> Result<JointPmf> {
    if rows.len() != 2 || rows.iter().any(|r| r.len() != 2) {
        return Err(Error::InvalidSpec("custom BSC noise law must be 2x2".into()));
    }
    JointPmf::new(vec![2, 2], rows.iter().flatten().copied().collect())
}

/// Binary alphabets everywhere, `N0` uniform and independent.
pub fn bsc_to_modadd(spec: &BscWiretapSpec) -> Result<ModAddChannelSpec> {
    ModAddChannelSpec::with_uniform_feedback_noise(2, 2, 2, &spec.noise_law()?)
}

/// `P(y, z | x)` for every source symbol, with the feedback drawn from a fixed law.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardLaw {
    x_size: usize,
    y_size: usize,
    z_size: usize,
    p: Vec<f64>,
}

impl ForwardLaw {
    pub fn slice(&self, x: usize) -> JointPmf {
        let n = self.y_size * self.z_size;
        JointPmf::new(
            vec![self.y_size, self.z_size],
            self.p[x * n..(x + 1) * n].to_vec(),
        )
        .expect("conditional slices are distributions")
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.p[(x * self.y_size + y) * self.z_size + z]
    }

    pub fn main(&self) -> TransitionMatrix {
        self.collapse(|y, _| y, self.y_size)
    }

    pub fn wiretap(&self) -> TransitionMatrix {
        self.collapse(|_, z| z, self.z_size)
    }

    fn collapse(&self, pick: impl Fn(usize, usize) -> usize, cols: usize) -> TransitionMatrix {
        let mut out = vec![0.0; self.x_size * cols];
        for x in 0..self.x_size {
            for y in 0..self.y_size {
                for z in 0..self.z_size {
                    out[x * cols + pick(y, z)] += self.get(x, y, z);
                }
            }
        }
        TransitionMatrix::new(self.x_size, cols, out).expect("marginal of a channel law")
    }

    /// Joint law of `(X, Y, Z)` under the input distribution `p_x`.
    pub fn joint(&self, p_x: &Pmf) -> Result<JointPmf> {
        if p_x.alphabet_size() != self.x_size {
            return Err(Error::Dimension(format!(
                "input pmf over {} symbols, channel has {} inputs",
                p_x.alphabet_size(),
                self.x_size
            )));
        }
        let n = self.y_size * self.z_size;
        let data = self
            .p
            .iter()
            .enumerate()
            .map(|(k, &w)| p_x.probs()[k / n] * w)
            .collect();
        JointPmf::new(vec![self.x_size, self.y_size, self.z_size], data)
    }
}

/// Channel law seen by the destination and wiretapper when the feedback
/// symbol is drawn from `x1_pmf` independently of everything else.
pub fn forward_law(spec: &ModAddChannelSpec, x1_pmf: &Pmf) -> Result<ForwardLaw> {
    if x1_pmf.alphabet_size() != spec.x1_size {
        return Err(Error::Dimension(format!(
            "feedback pmf over {} symbols, spec has |X1| = {}",
            x1_pmf.alphabet_size(),
            spec.x1_size
        )));
    }
    let (ys, zs) = (spec.y_size, spec.z_size);
    let n1n2 = spec.main_wiretap_noise();
    let mut p = vec![0.0; spec.x_size * ys * zs];
    for x in 0..spec.x_size {
        for (x1, &p1) in x1_pmf.probs().iter().enumerate() {
            if p1 <= PROB_FLOOR {
                continue;
            }
            for n1 in 0..ys {
                for n2 in 0..zs {
                    let pn = n1n2.get(&[n1, n2]);
                    let y = (x + x1 + n1) % ys;
                    let z = (x + x1 + n2) % zs;
                    p[(x * ys + y) * zs + z] += p1 * pn;
                }
            }
        }
    }
    Ok(ForwardLaw {
        x_size: spec.x_size,
        y_size: ys,
        z_size: zs,
        p,
    })
}

/// Removes a known feedback symbol from a destination observation.
pub fn cancel_feedback(y: usize, x1: usize, y_size: usize) -> usize {
    (y + y_size - x1 % y_size) % y_size
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Domain(format!("{name} = {v} outside [0, 1]")));
    }
    Ok(())
}

/// Main channel of the half-duplex scheme: erased with probability `t`,
/// otherwise BSC(`eps`). Outputs ordered `{0, erasure, 1}`.
pub fn halfduplex_equivalent_main(eps: f64, t: f64) -> Result<TransitionMatrix> {
    check_unit("eps", eps)?;
    check_unit("t", t)?;
    let keep = 1.0 - t;
    let right = keep * (1.0 - eps);
    let wrong = keep - right;
    TransitionMatrix::from_rows(vec![vec![right, t, wrong], vec![wrong, t, right]])
}

/// Wiretap flip probability `delta + t - 2 delta t` under Bernoulli(`t`) feedback.
pub fn halfduplex_equivalent_wiretap(delta: f64, t: f64) -> Result<f64> {
    check_unit("delta", delta)?;
    check_unit("t", t)?;
    Ok(delta + t - 2.0 * delta * t)
}

/// Operating point of the half-duplex scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfDuplexParams {
    /// `Pr{X = 1}`.
    pub mu: f64,
    /// Fraction of uses spent sending feedback.
    pub t: f64,
    pub delta_hat: f64,
}

impl HalfDuplexParams {
    pub fn new(mu: f64, t: f64, delta: f64) -> Result<Self> {
        check_unit("mu", mu)?;
        Ok(Self {
            mu,
            t,
            delta_hat: halfduplex_equivalent_wiretap(delta, t)?,
        })
    }
}

/// Received symbols at the source, destination and wiretapper.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChannelOutputs {
    pub y0: Vec<usize>,
    pub y: Vec<usize>,
    pub z: Vec<usize>,
}

/// Draws noise triples from a spec's noise law.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    spec: ModAddChannelSpec,
    index: WeightedIndex<f64>,
}

impl ChannelSampler {
    pub fn new(spec: &ModAddChannelSpec) -> Result<Self> {
        let index = WeightedIndex::new(spec.noise().data().iter().copied())
            .map_err(|e| Error::InvalidDistribution(format!("noise law: {e}")))?;
        Ok(Self {
            spec: spec.clone(),
            index,
        })
    }

    pub fn spec(&self) -> &ModAddChannelSpec {
        &self.spec
    }

    /// `(n0, n1, n2)`.
    pub fn noise<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize, usize) {
        let k = self.index.sample(rng);
        let (ys, zs) = (self.spec.y_size, self.spec.z_size);
        (k / (ys * zs), (k / zs) % ys, k % zs)
    }

    /// One channel use; returns `(y0, y, z)`. Symbols are assumed in range.
    pub fn transmit<R: Rng + ?Sized>(&self, x: usize, x1: usize, rng: &mut R) -> (usize, usize, usize) {
        let (n0, n1, n2) = self.noise(rng);
        let s = &self.spec;
        (
            (x + x1 + n0) % s.y0_size,
            (x + x1 + n1) % s.y_size,
            (x + x1 + n2) % s.z_size,
        )
    }
}

/// Passes the symbol vectors through the channel with i.i.d. noise.
pub fn sample_symbols<R: Rng + ?Sized>(
    spec: &ModAddChannelSpec,
    x: &[usize],
    x1: &[usize],
    rng: &mut R,
) -> Result<ChannelOutputs> {
    if x.len() != x1.len() {
        return Err(Error::Dimension(format!(
            "source sends {} symbols, feedback {}",
            x.len(),
            x1.len()
        )));
    }
    for (&a, &b) in x.iter().zip(x1) {
        spec.check_symbol("source", a, spec.x_size)?;
        spec.check_symbol("feedback", b, spec.x1_size)?;
    }
    let sampler = ChannelSampler::new(spec)?;
    let mut out = ChannelOutputs::default();
    for (&a, &b) in x.iter().zip(x1) {
        let (y0, y, z) = sampler.transmit(a, b, rng);
        out.y0.push(y0);
        out.y.push(y);
        out.z.push(z);
    }
    Ok(out)
}
