//! Monte Carlo and exact checks of the destination-key feedback schemes.
//!
//! Every trial draws from its own substream of the configured seed and the
//! codebook from a reserved one, so reports do not depend on how rayon
//! schedules the trials.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{
    cancel_feedback, halfduplex_equivalent_main, halfduplex_equivalent_wiretap, ChannelSampler,
    ModAddChannelSpec, ERASURE,
};
use crate::error::{Error, Result};
use crate::files::AnyChannel;
use crate::info_theory::{mutual_information, plug_in_mi_estimate, JointPmf, Pmf, TransitionMatrix};
use crate::lattice::{mod_lambda_reduce, sample_uniform_region, LatticeSpec, ModLambdaSampler, WrappedGaussian};
use crate::rng::{substream, CODEBOOK_STREAM};
use crate::stats::{chi_squared_counts_uniform, wilson_interval};

pub use crate::stats::chi_squared_uniformity;

/// Largest codebook, in symbols.
pub const CODEBOOK_SYMBOL_CAP: u128 = 1 << 24;

/// Largest number of terms [`exact_small_system`] will enumerate.
pub const EXACT_TERM_CAP: u128 = 1 << 20;

/// Longest wiretapper digest used for the leakage estimate.
pub const MAX_DIGEST_LEN: usize = 8;

/// Expected samples per (message, digest) cell required before the digest grows.
pub const DIGEST_CELL_SAMPLES: u128 = 10;

/// Uniformity bins per lattice dimension for m = 1 and m = 2.
const LATTICE_BINS: [usize; 2] = [64, 8];

/// Random code: `m_size` words of `n` i.i.d. symbols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub m_size: usize,
    pub n: usize,
    words: Vec<usize>,
    pub source_pmf: Pmf,
    pub seed: u64,
}

impl Codebook {
    /// A codebook with given words, for exact checks.
    pub fn from_words(words: Vec<Vec<usize>>, source_pmf: Pmf) -> Result<Self> {
        let m_size = words.len();
        if m_size == 0 {
            return Err(Error::Empty("codebook without words".into()));
        }
        let n = words[0].len();
        if n == 0 || words.iter().any(|w| w.len() != n) {
            return Err(Error::Dimension("codewords must share a positive length".into()));
        }
        let q = source_pmf.alphabet_size();
        if words.iter().flatten().any(|&s| s >= q) {
            return Err(Error::Domain(format!("codeword symbol outside alphabet of size {q}")));
        }
        Ok(Self {
            m_size,
            n,
            words: words.into_iter().flatten().collect(),
            source_pmf,
            seed: 0,
        })
    }

    pub fn word(&self, w: usize) -> &[usize] {
        &self.words[w * self.n..(w + 1) * self.n]
    }

    pub fn words(&self) -> impl Iterator<Item = &[usize]> {
        self.words.chunks(self.n)
    }
}

fn check_budget(what: &'static str, requested: u128, limit: u128) -> Result<()> {
    if requested > limit {
        return Err(Error::Budget {
            what,
            requested,
            limit,
        });
    }
    Ok(())
}

pub fn generate_codebook(m_size: usize, n: usize, source_pmf: &Pmf, seed: u64) -> Result<Codebook> {
    if m_size == 0 || n == 0 {
        return Err(Error::Domain(format!("codebook needs M >= 1 and n >= 1, got {m_size}, {n}")));
    }
    check_budget("codebook symbols", m_size as u128 * n as u128, CODEBOOK_SYMBOL_CAP)?;
    let dist = WeightedIndex::new(source_pmf.probs())
        .map_err(|e| Error::InvalidDistribution(format!("source pmf: {e}")))?;
    let mut rng = substream(seed, CODEBOOK_STREAM);
    let words = (0..m_size * n).map(|_| dist.sample(&mut rng)).collect();
    Ok(Codebook {
        m_size,
        n,
        words,
        source_pmf: source_pmf.clone(),
        seed,
    })
}

/// Maximum-likelihood decoder for a memoryless channel; ties go to the
/// lowest message index and `None` observations (erasures) carry no information.
struct Decoder {
    log_lik: Vec<f64>,
    cols: usize,
}

impl Decoder {
    fn new(w: &TransitionMatrix) -> Self {
        let log_lik = (0..w.rows())
            .flat_map(|x| w.row(x).iter().map(|p| p.ln()).collect::<Vec<_>>())
            .collect();
        Self { log_lik, cols: w.cols() }
    }

    fn decode(&self, book: &Codebook, obs: &[Option<usize>]) -> usize {
        let mut best = 0;
        let mut best_ll = f64::NEG_INFINITY;
        for (w, word) in book.words().enumerate() {
            let mut ll = 0.0;
            for (&x, o) in word.iter().zip(obs) {
                if let Some(y) = o {
                    ll += self.log_lik[x * self.cols + y];
                    if ll == f64::NEG_INFINITY {
                        break;
                    }
                }
            }
            if ll > best_ll {
                best = w;
                best_ll = ll;
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimScheme {
    FullDuplex,
    HalfDuplex,
    ModLambda,
}

impl SimScheme {
    pub fn name(self) -> &'static str {
        match self {
            SimScheme::FullDuplex => "full_duplex",
            SimScheme::HalfDuplex => "half_duplex",
            SimScheme::ModLambda => "mod_lambda",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub scheme: SimScheme,
    /// Block length.
    pub n: usize,
    /// Number of messages.
    pub m_size: usize,
    pub trials: usize,
    pub seed: u64,
    /// Feedback fraction of the half-duplex scheme.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// Codeword symbol law; uniform when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_pmf: Option<Vec<f64>>,
    pub channel: AnyChannel,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidSpec("trials must be at least 1".into()));
        }
        if self.m_size < 2 {
            return Err(Error::InvalidSpec(format!("m_size must be at least 2, got {}", self.m_size)));
        }
        if self.n == 0 {
            return Err(Error::InvalidSpec("block length must be positive".into()));
        }
        match (self.scheme, &self.channel) {
            (SimScheme::ModLambda, AnyChannel::Lattice(_)) => {}
            (SimScheme::ModLambda, _) => {
                return Err(Error::InvalidSpec("mod_lambda needs a lattice channel".into()))
            }
            (_, AnyChannel::Lattice(_)) => {
                return Err(Error::InvalidSpec(format!(
                    "{} needs a discrete channel",
                    self.scheme.name()
                )))
            }
            _ => {}
        }
        if self.scheme == SimScheme::HalfDuplex {
            match self.t {
                Some(t) if (0.0..=1.0).contains(&t) => {}
                Some(t) => return Err(Error::InvalidSpec(format!("t = {t} outside [0, 1]"))),
                None => return Err(Error::InvalidSpec("half_duplex needs the feedback fraction t".into())),
            }
        }
        Ok(())
    }

    fn discrete(&self) -> Result<ModAddChannelSpec> {
        match &self.channel {
            AnyChannel::Discrete(c) => c.to_spec(),
            AnyChannel::Lattice(_) => Err(Error::InvalidSpec("expected a discrete channel".into())),
        }
    }

    fn source(&self, x_size: usize) -> Result<Pmf> {
        match &self.source_pmf {
            Some(p) => {
                let p = Pmf::new(p.clone())?;
                if p.alphabet_size() != x_size {
                    return Err(Error::Dimension(format!(
                        "source pmf over {} symbols, channel has |X| = {x_size}",
                        p.alphabet_size()
                    )));
                }
                Ok(p)
            }
            None => Pmf::uniform(x_size),
        }
    }
}

/// Half-duplex measurements against the equivalent-channel formulas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfDuplexStats {
    pub t: f64,
    pub symbols: u64,
    /// Rows indexed by `x`, columns ordered `{0, erasure, 1}`.
    pub empirical_main: TransitionMatrix,
    pub analytic_main: TransitionMatrix,
    pub main_linf: f64,
    pub wiretap_flip_rate: f64,
    pub delta_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub scheme: SimScheme,
    pub n: usize,
    pub m_size: usize,
    pub trials: usize,
    pub seed: u64,
    pub errors: u64,
    pub p_e_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Pearson χ² of the wiretapper symbols against uniform; absent with too few samples.
    pub chi2_stat: Option<f64>,
    pub chi2_pvalue: Option<f64>,
    pub chi2_cells: usize,
    pub z_samples: u64,
    /// Plug-in `I(W; digest(Z))` and its Miller–Madow correction.
    pub mi_estimate_bits: f64,
    pub mi_corrected_bits: f64,
    /// Leading wiretapper symbols in the digest.
    pub digest_len: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_duplex: Option<HalfDuplexStats>,
    pub notes: String,
}

/// Digest length: as long as possible up to `min(n, 8)` while every
/// (message, digest) cell still expects [`DIGEST_CELL_SAMPLES`] samples.
pub fn digest_len(m_size: usize, q: usize, n: usize, trials: usize) -> usize {
    let cap = n.min(MAX_DIGEST_LEN);
    let mut len = 1;
    while len < cap {
        let cells = (q as u128).checked_pow(len as u32 + 1).and_then(|c| c.checked_mul(m_size as u128));
        match cells {
            Some(c) if c * DIGEST_CELL_SAMPLES <= trials as u128 => len += 1,
            _ => break,
        }
    }
    len
}

fn digest(symbols: &[usize], q: usize, len: usize) -> usize {
    symbols[..len].iter().rev().fold(0, |acc, &s| acc * q + s)
}

struct Trial {
    error: bool,
    message: usize,
    digest: usize,
    z_counts: Vec<u64>,
    main_counts: Vec<u64>,
    flips: u64,
}

struct Tally {
    errors: u64,
    pairs: Vec<(usize, usize)>,
    z_counts: Vec<u64>,
    main_counts: Vec<u64>,
    flips: u64,
}

/// Aggregates trial outcomes in trial order.
fn tally(trials: Vec<Trial>, cells: usize, main_cells: usize) -> Tally {
    let mut t = Tally {
        errors: 0,
        pairs: Vec::with_capacity(trials.len()),
        z_counts: vec![0; cells],
        main_counts: vec![0; main_cells],
        flips: 0,
    };
    for tr in trials {
        t.errors += tr.error as u64;
        t.pairs.push((tr.message, tr.digest));
        for (a, b) in t.z_counts.iter_mut().zip(&tr.z_counts) {
            *a += b;
        }
        for (a, b) in t.main_counts.iter_mut().zip(&tr.main_counts) {
            *a += b;
        }
        t.flips += tr.flips;
    }
    t
}

fn report(cfg: &SimConfig, t: &Tally, digest_len: usize, notes: String) -> Result<SimReport> {
    let pe = wilson_interval(t.errors, cfg.trials as u64)?;
    let z_samples: u64 = t.z_counts.iter().sum();
    let (chi2_stat, chi2_pvalue) = match chi_squared_counts_uniform(&t.z_counts) {
        Ok((s, p)) => (Some(s), Some(p)),
        Err(Error::TooFewSamples { .. }) => (None, None),
        Err(e) => return Err(e),
    };
    let mi = plug_in_mi_estimate(&t.pairs)?;
    Ok(SimReport {
        scheme: cfg.scheme,
        n: cfg.n,
        m_size: cfg.m_size,
        trials: cfg.trials,
        seed: cfg.seed,
        errors: t.errors,
        p_e_hat: pe.estimate,
        ci_lo: pe.ci_lo,
        ci_hi: pe.ci_hi,
        chi2_stat,
        chi2_pvalue,
        chi2_cells: t.z_counts.len(),
        z_samples,
        mi_estimate_bits: mi.plug_in,
        mi_corrected_bits: mi.corrected,
        digest_len,
        half_duplex: None,
        notes,
    })
}

/// Runs the scheme named in the configuration.
pub fn run(cfg: &SimConfig) -> Result<SimReport> {
    match cfg.scheme {
        SimScheme::FullDuplex => run_full_duplex(cfg),
        SimScheme::HalfDuplex => run_half_duplex(cfg),
        SimScheme::ModLambda => run_mod_lambda(cfg),
    }
}

fn require_scheme(cfg: &SimConfig, s: SimScheme) -> Result<()> {
    cfg.validate()?;
    if cfg.scheme != s {
        return Err(Error::InvalidSpec(format!(
            "configuration is for {}, not {}",
            cfg.scheme.name(),
            s.name()
        )));
    }
    Ok(())
}

/// Full-duplex scheme: the destination sends a uniform key word over `Z^n`,
/// cancels it from what it hears and decodes by maximum likelihood.
pub fn run_full_duplex(cfg: &SimConfig) -> Result<SimReport> {
    require_scheme(cfg, SimScheme::FullDuplex)?;
    let spec = cfg.discrete()?;
    if spec.x1_size != spec.z_size {
        return Err(Error::InvalidSpec(format!(
            "full-duplex scheme sends feedback over Z: need |X1| = |Z|, got {} and {}",
            spec.x1_size, spec.z_size
        )));
    }
    let book = generate_codebook(cfg.m_size, cfg.n, &cfg.source(spec.x_size)?, cfg.seed)?;
    let sampler = ChannelSampler::new(&spec)?;
    let decoder = Decoder::new(&spec.main_channel());
    let (q, n) = (spec.z_size, cfg.n);
    let len = digest_len(cfg.m_size, q, n, cfg.trials);
    let trials = (0..cfg.trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = substream(cfg.seed, k as u64);
            let w = rng.random_range(0..cfg.m_size);
            let key: Vec<usize> = (0..n).map(|_| rng.random_range(0..q)).collect();
            let mut obs = Vec::with_capacity(n);
            let mut z = Vec::with_capacity(n);
            for (&x, &x1) in book.word(w).iter().zip(&key) {
                let (_, y, zi) = sampler.transmit(x, x1, &mut rng);
                obs.push(Some(cancel_feedback(y, x1, spec.y_size)));
                z.push(zi);
            }
            let mut z_counts = vec![0u64; q];
            for &s in &z {
                z_counts[s] += 1;
            }
            Trial {
                error: decoder.decode(&book, &obs) != w,
                message: w,
                digest: digest(&z, q, len),
                z_counts,
                main_counts: Vec::new(),
                flips: 0,
            }
        })
        .collect();
    let t = tally(trials, q, 0);
    report(
        cfg,
        &t,
        len,
        format!(
            "ML decoding after key cancellation; leakage digest of the first {len} wiretapper symbols"
        ),
    )
}

/// Half-duplex scheme on binary channels: the destination sends 1 with
/// probability `t` and hears an erasure at those instants; the source never
/// learns when.
pub fn run_half_duplex(cfg: &SimConfig) -> Result<SimReport> {
    require_scheme(cfg, SimScheme::HalfDuplex)?;
    let spec = cfg.discrete()?;
    if [spec.x_size, spec.x1_size, spec.y_size, spec.z_size] != [2, 2, 2, 2] {
        return Err(Error::InvalidSpec("half-duplex simulation needs binary alphabets".into()));
    }
    let t = cfg.t.expect("validated");
    let eps = spec.main_noise().probs()[1];
    let delta = spec.wiretap_noise().probs()[1];
    let book = generate_codebook(cfg.m_size, cfg.n, &cfg.source(2)?, cfg.seed)?;
    let sampler = ChannelSampler::new(&spec)?;
    let decoder = Decoder::new(&spec.main_channel());
    let n = cfg.n;
    let len = digest_len(cfg.m_size, 2, n, cfg.trials);
    let trials = (0..cfg.trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = substream(cfg.seed, k as u64);
            let w = rng.random_range(0..cfg.m_size);
            let mut obs = Vec::with_capacity(n);
            let mut z = Vec::with_capacity(n);
            let mut main_counts = vec![0u64; 6];
            let mut flips = 0;
            for &x in book.word(w) {
                let x1 = rng.random_bool(t) as usize;
                let (_, y, zi) = sampler.transmit(x, x1, &mut rng);
                let (o, col) = if x1 == 1 { (None, ERASURE) } else { (Some(y), 2 * y) };
                obs.push(o);
                main_counts[x * 3 + col] += 1;
                flips += (zi != x) as u64;
                z.push(zi);
            }
            let z_counts = vec![z.iter().filter(|&&s| s == 0).count() as u64, z.iter().filter(|&&s| s == 1).count() as u64];
            Trial {
                error: decoder.decode(&book, &obs) != w,
                message: w,
                digest: digest(&z, 2, len),
                z_counts,
                main_counts,
                flips,
            }
        })
        .collect();
    let tl = tally(trials, 2, 6);
    let symbols = (cfg.trials * n) as u64;
    let mut empty_rows = Vec::new();
    let rows: Vec<Vec<f64>> = (0..2)
        .map(|x| {
            let c = &tl.main_counts[x * 3..x * 3 + 3];
            let total: u64 = c.iter().sum();
            if total == 0 {
                empty_rows.push(x);
                vec![1.0 / 3.0; 3]
            } else {
                c.iter().map(|&v| v as f64 / total as f64).collect()
            }
        })
        .collect();
    let empirical_main = TransitionMatrix::from_rows(rows)?;
    let analytic_main = halfduplex_equivalent_main(eps, t)?;
    let mut notes = format!(
        "ML decoding with self-erasures; leakage digest of the first {len} wiretapper symbols"
    );
    if !empty_rows.is_empty() {
        notes.push_str(&format!("; input rows {empty_rows:?} never sent, shown as uniform"));
    }
    let mut rep = report(cfg, &tl, len, notes)?;
    rep.half_duplex = Some(HalfDuplexStats {
        t,
        symbols,
        main_linf: empirical_main.linf_distance(&analytic_main)?,
        empirical_main,
        analytic_main,
        wiretap_flip_rate: tl.flips as f64 / symbols as f64,
        delta_hat: halfduplex_equivalent_wiretap(delta, t)?,
    });
    Ok(rep)
}

/// Index of the uniformity bin containing `z`, with `bins` cells per dimension.
pub fn lattice_bin(spec: &LatticeSpec, z: &[f64], bins: usize) -> usize {
    spec.coordinates(z).iter().rev().fold(0, |acc, &u| {
        let b = (((u + 0.5) * bins as f64).floor().max(0.0) as usize).min(bins - 1);
        acc * bins + b
    })
}

/// Mod-Λ scheme: codewords and key vectors uniform over the fundamental
/// region, decoding by maximum likelihood under the wrapped main-channel noise.
pub fn run_mod_lambda(cfg: &SimConfig) -> Result<SimReport> {
    require_scheme(cfg, SimScheme::ModLambda)?;
    let spec = match &cfg.channel {
        AnyChannel::Lattice(l) => l.clone(),
        AnyChannel::Discrete(_) => unreachable!("validated"),
    };
    let (n, m) = (cfg.n, spec.dim());
    check_budget("codebook symbols", (cfg.m_size * n * m) as u128, CODEBOOK_SYMBOL_CAP)?;
    let mut rng = substream(cfg.seed, CODEBOOK_STREAM);
    let book: Vec<Vec<f64>> = (0..cfg.m_size * n).map(|_| sample_uniform_region(&spec, &mut rng)).collect();
    let sampler = ModLambdaSampler::new(&spec)?;
    let density = WrappedGaussian::new(&spec, spec.sigma1_sq)?;
    let bins = LATTICE_BINS[m - 1];
    let cells = bins.pow(m as u32);
    let coarse = 1usize << m;
    let len = digest_len(cfg.m_size, coarse, n, cfg.trials);
    let trials = (0..cfg.trials)
        .into_par_iter()
        .map(|k| -> Result<Trial> {
            let mut rng = substream(cfg.seed, k as u64);
            let w = rng.random_range(0..cfg.m_size);
            let mut obs = Vec::with_capacity(n);
            let mut z_counts = vec![0u64; cells];
            let mut coarse_z = Vec::with_capacity(n);
            for i in 0..n {
                let x = &book[w * n + i];
                let key = sample_uniform_region(&spec, &mut rng);
                let (y, z) = sampler.transmit(x, &key, &mut rng);
                let diff: Vec<f64> = y.iter().zip(&key).map(|(a, b)| a - b).collect();
                obs.push(mod_lambda_reduce(&diff, &spec)?);
                z_counts[lattice_bin(&spec, &z, bins)] += 1;
                coarse_z.push(lattice_bin(&spec, &z, 2));
            }
            let mut best = 0;
            let mut best_ll = f64::NEG_INFINITY;
            for c in 0..cfg.m_size {
                let mut ll = 0.0;
                for (i, o) in obs.iter().enumerate() {
                    let d: Vec<f64> = o.iter().zip(&book[c * n + i]).map(|(a, b)| a - b).collect();
                    ll += density.density(&mod_lambda_reduce(&d, &spec)?).ln();
                }
                if ll > best_ll {
                    best = c;
                    best_ll = ll;
                }
            }
            Ok(Trial {
                error: best != w,
                message: w,
                digest: digest(&coarse_z, coarse, len),
                z_counts,
                main_counts: Vec::new(),
                flips: 0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let t = tally(trials, cells, 0);
    report(
        cfg,
        &t,
        len,
        format!(
            "ML decoding under the wrapped main-channel density; uniformity over {cells} cells of the fundamental region; digest of {len} symbols quantised to {coarse} cells"
        ),
    )
}

/// Exact error probability and leakage of a small code.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactSmallSystem {
    pub p_e: f64,
    pub mi_w_z_bits: f64,
}

fn digits(mut v: usize, base: usize, out: &mut [usize]) {
    for d in out.iter_mut() {
        *d = v % base;
        v /= base;
    }
}

/// Enumerates every message, feedback word and noise realisation of a
/// full-duplex block with feedback drawn i.i.d. from `feedback_pmf`.
/// Returns the ML error probability after key cancellation and `I(W; Z^n)`.
pub fn exact_small_system(
    codebook: &Codebook,
    spec: &ModAddChannelSpec,
    feedback_pmf: &Pmf,
) -> Result<ExactSmallSystem> {
    let (mm, n) = (codebook.m_size, codebook.n);
    let (ys, zs, qx1) = (spec.y_size, spec.z_size, spec.x1_size);
    if feedback_pmf.alphabet_size() != qx1 {
        return Err(Error::Dimension(format!(
            "feedback pmf over {} symbols, spec has |X1| = {qx1}",
            feedback_pmf.alphabet_size()
        )));
    }
    if codebook.words.iter().any(|&x| x >= spec.x_size) {
        return Err(Error::Domain("codeword symbol outside the input alphabet".into()));
    }
    let pow = |b: usize| (b as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    let terms = (mm as u128)
        .saturating_mul(pow(qx1))
        .saturating_mul(pow(ys * zs));
    check_budget("exact enumeration terms", terms, EXACT_TERM_CAP)?;
    let (nf, nn, ny, nz) = (pow(qx1) as usize, pow(ys * zs) as usize, pow(ys) as usize, pow(zs) as usize);

    let noise = spec.main_wiretap_noise();
    let mut pwz = vec![0.0; mm * nz];
    let mut pwy = vec![0.0; mm * ny];
    let mut key = vec![0; n];
    let mut nd = vec![0; n];
    for f in 0..nf {
        digits(f, qx1, &mut key);
        let pf: f64 = key.iter().map(|&s| feedback_pmf.probs()[s]).product();
        if pf == 0.0 {
            continue;
        }
        for e in 0..nn {
            digits(e, ys * zs, &mut nd);
            let pn: f64 = nd.iter().map(|&d| noise.data()[d]).product();
            if pn == 0.0 {
                continue;
            }
            let p = pf * pn / mm as f64;
            for w in 0..mm {
                let (mut yi, mut zi) = (0, 0);
                for i in (0..n).rev() {
                    let x = codebook.word(w)[i];
                    let (n1, n2) = (nd[i] / zs, nd[i] % zs);
                    let y = (x + key[i] + n1) % ys;
                    let z = (x + key[i] + n2) % zs;
                    yi = yi * ys + cancel_feedback(y, key[i], ys);
                    zi = zi * zs + z;
                }
                pwy[w * ny + yi] += p;
                pwz[w * nz + zi] += p;
            }
        }
    }

    let decoder = Decoder::new(&spec.main_channel());
    let mut yv = vec![0; n];
    let mut correct = 0.0;
    for yi in 0..ny {
        digits(yi, ys, &mut yv);
        let obs: Vec<Option<usize>> = yv.iter().map(|&s| Some(s)).collect();
        let w_hat = decoder.decode(codebook, &obs);
        correct += pwy[w_hat * ny + yi];
    }
    let joint = JointPmf::new(vec![mm, nz], pwz)?;
    Ok(ExactSmallSystem {
        p_e: (1.0 - correct).max(0.0),
        mi_w_z_bits: mutual_information(&joint)?,
    })
}
