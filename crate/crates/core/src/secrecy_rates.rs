//! Secrecy rate expressions: no-feedback lower bound, public-discussion
//! bounds, full-duplex feedback capacity and the half-duplex scheme.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{forward_law, ForwardLaw, ModAddChannelSpec};
use crate::error::{Error, Result};
use crate::info_theory::{
    channel_capacity_ba, conditional_mutual_information, h2, mutual_information, JointPmf, Pmf,
    TransitionMatrix, BA_DEFAULT_MAX_ITER, BA_DEFAULT_TOL,
};

/// Largest input alphabet accepted by the simplex search.
pub const MAX_SIMPLEX_ALPHABET: usize = 4;

/// Tolerance for recognising degraded or independent noise structures.
pub const STRUCTURE_TOL: f64 = 1e-9;

/// Smallest objective increase accepted by the simplex polish.
const POLISH_MIN_GAIN: f64 = 1e-14;

/// Smallest `(mu, t)` grid accepted by [`halfduplex_optimize`].
pub const MIN_HALFDUPLEX_GRID: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    NoFeedback,
    PublicLower,
    PublicUpper,
    PublicClosedForm,
    FullDuplex,
    HalfDuplex,
    HalfDuplexGeneral,
}

/// Parameters at which a reported rate is attained.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AchievingParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<Pmf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feedback: Option<Pmf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub scheme: Scheme,
    pub rate_bits: f64,
    pub achieving_params: Option<AchievingParams>,
    pub notes: String,
}

impl RateReport {
    fn optimized(scheme: Scheme, rate: f64, params: AchievingParams, notes: String) -> Self {
        Self {
            scheme,
            rate_bits: rate.max(0.0),
            achieving_params: Some(params),
            notes,
        }
    }

    fn input(scheme: Scheme, rate: f64, input: Pmf, notes: String) -> Self {
        Self::optimized(
            scheme,
            rate,
            AchievingParams {
                input: Some(input),
                ..Default::default()
            },
            notes,
        )
    }
}

/// Result of a search over the input simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexOptimum {
    pub value: f64,
    pub input: Pmf,
}

/// All compositions of `steps` into `k` parts, in lexicographic order.
fn compositions(steps: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(left: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for a in 0..=left {
            cur.push(a);
            rec(left - a, k - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(steps, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Maximises `f` over distributions on `k` symbols: every grid point with
/// denominator `steps`, then pairwise mass transfers from the best one with a
/// halving step size.
pub fn simplex_maximize<F>(k: usize, steps: usize, f: F) -> Result<SimplexOptimum>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    if k > MAX_SIMPLEX_ALPHABET {
        return Err(Error::AlphabetTooLarge {
            size: k,
            limit: MAX_SIMPLEX_ALPHABET,
        });
    }
    if k == 0 || steps == 0 {
        return Err(Error::Domain(format!("simplex search needs k >= 1 and steps >= 1, got {k}, {steps}")));
    }
    let points: Vec<Vec<f64>> = compositions(steps, k)
        .into_iter()
        .map(|c| c.into_iter().map(|a| a as f64 / steps as f64).collect())
        .collect();
    let values = points
        .par_iter()
        .map(|p| f(p))
        .collect::<Result<Vec<f64>>>()?;
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    let mut p = points[best].clone();
    let mut v = values[best];
    let mut h = 1.0 / steps as f64;
    let mut rounds = 0;
    while h > 1e-12 && rounds < 10_000 {
        rounds += 1;
        let mut improved = false;
        for i in 0..k {
            for j in 0..k {
                if i == j || p[i] <= 0.0 {
                    continue;
                }
                let d = h.min(p[i]);
                let mut cand = p.clone();
                cand[i] -= d;
                cand[j] += d;
                let val = f(&cand)?;
                // gains below round-off would only make the point drift
                if val > v + POLISH_MIN_GAIN {
                    p = cand;
                    v = val;
                    improved = true;
                }
            }
        }
        if !improved {
            h /= 2.0;
        }
    }
    Ok(SimplexOptimum {
        value: v,
        input: Pmf::new(p)?,
    })
}

/// `(X, Y, Z)` joint for the input `p` through a fixed forward law.
fn joint_xyz(law: &ForwardLaw, p: &[f64]) -> Result<JointPmf> {
    law.joint(&Pmf::new(p.to_vec())?)
}

/// Mutual information between two axes of a 3-axis joint.
fn mi_axes(j: &JointPmf, a: usize, b: usize) -> Result<f64> {
    mutual_information(&j.marginalize(&[a, b])?)
}

fn silent_law(spec: &ModAddChannelSpec) -> Result<ForwardLaw> {
    forward_law(spec, &Pmf::point_mass(spec.x1_size, 0)?)
}

fn check_simplex_alphabet(spec: &ModAddChannelSpec) -> Result<()> {
    if spec.x_size > MAX_SIMPLEX_ALPHABET {
        return Err(Error::AlphabetTooLarge {
            size: spec.x_size,
            limit: MAX_SIMPLEX_ALPHABET,
        });
    }
    Ok(())
}

/// `max_{P_X} [I(X;Y) - I(X;Z)]^+` with the feedback silent (auxiliary set to the input).
pub fn no_feedback_secrecy_lower(spec: &ModAddChannelSpec, grid_steps: usize) -> Result<RateReport> {
    check_simplex_alphabet(spec)?;
    let law = silent_law(spec)?;
    let opt = simplex_maximize(spec.x_size, grid_steps, |p| {
        let j = joint_xyz(&law, p)?;
        Ok(mi_axes(&j, 0, 1)? - mi_axes(&j, 0, 2)?)
    })?;
    Ok(RateReport::input(
        Scheme::NoFeedback,
        opt.value,
        opt.input,
        "lower bound: auxiliary variable restricted to V = X".into(),
    ))
}

/// Noise structure that makes the public-discussion bounds tight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tightness {
    /// `P(y,z|x) = P(y|x) P(z|x)`.
    Independent,
    /// `X -> Y -> Z`.
    DegradedWiretap,
    /// `X -> Z -> Y`.
    DegradedMain,
}

/// Tight cases satisfied by the channel with the feedback silent, in the
/// order they are checked.
pub fn detect_tightness(spec: &ModAddChannelSpec) -> Result<Vec<Tightness>> {
    let law = silent_law(spec)?;
    // full-support input so the conditional independences are properties of the channel
    let j = law.joint(&Pmf::uniform(spec.x_size)?)?;
    let mut out = Vec::new();
    if conditional_mutual_information(&j, 1, 2, 0)? <= STRUCTURE_TOL {
        out.push(Tightness::Independent);
    }
    if conditional_mutual_information(&j, 0, 2, 1)? <= STRUCTURE_TOL {
        out.push(Tightness::DegradedWiretap);
    }
    if conditional_mutual_information(&j, 0, 1, 2)? <= STRUCTURE_TOL {
        out.push(Tightness::DegradedMain);
    }
    Ok(out)
}

/// Lower and upper bounds on the public-discussion key capacity, and the
/// exact value where the noise structure pins it down.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublicBounds {
    pub lower: RateReport,
    pub upper: RateReport,
    pub tightness: Vec<Tightness>,
    pub closed_form: Option<RateReport>,
}

pub fn public_discussion_bounds(spec: &ModAddChannelSpec, grid_steps: usize) -> Result<PublicBounds> {
    check_simplex_alphabet(spec)?;
    let law = silent_law(spec)?;
    let k = spec.x_size;
    let xz = simplex_maximize(k, grid_steps, |p| {
        let j = joint_xyz(&law, p)?;
        Ok(mi_axes(&j, 0, 1)? - mi_axes(&j, 0, 2)?)
    })?;
    let yz = simplex_maximize(k, grid_steps, |p| {
        let j = joint_xyz(&law, p)?;
        Ok(mi_axes(&j, 0, 1)? - mi_axes(&j, 1, 2)?)
    })?;
    let xy = simplex_maximize(k, grid_steps, |p| mi_axes(&joint_xyz(&law, p)?, 0, 1))?;
    let xy_given_z = simplex_maximize(k, grid_steps, |p| {
        conditional_mutual_information(&joint_xyz(&law, p)?, 0, 1, 2)
    })?;

    let branches = format!(
        "max[I(X;Y)-I(X;Z)] = {:.12}, max[I(X;Y)-I(Y;Z)] = {:.12}",
        xz.value, yz.value
    );
    let lower = if xz.value >= yz.value {
        RateReport::input(Scheme::PublicLower, xz.value, xz.input.clone(), format!("{branches}; active: I(X;Z) branch"))
    } else {
        RateReport::input(Scheme::PublicLower, yz.value, yz.input.clone(), format!("{branches}; active: I(Y;Z) branch"))
    };
    let branches = format!(
        "max I(X;Y) = {:.12}, max I(X;Y|Z) = {:.12}",
        xy.value, xy_given_z.value
    );
    let upper = if xy.value <= xy_given_z.value {
        RateReport::input(Scheme::PublicUpper, xy.value, xy.input, format!("{branches}; active: I(X;Y) branch"))
    } else {
        RateReport::input(Scheme::PublicUpper, xy_given_z.value, xy_given_z.input, format!("{branches}; active: I(X;Y|Z) branch"))
    };

    let tightness = detect_tightness(spec)?;
    let closed_form = if tightness.contains(&Tightness::DegradedMain) {
        Some(RateReport {
            scheme: Scheme::PublicClosedForm,
            rate_bits: 0.0,
            achieving_params: None,
            notes: "main channel degraded (X -> Z -> Y): key capacity is zero".into(),
        })
    } else if tightness.contains(&Tightness::DegradedWiretap) {
        Some(RateReport::input(
            Scheme::PublicClosedForm,
            xz.value,
            xz.input,
            "wiretap channel degraded (X -> Y -> Z): max[I(X;Y)-I(X;Z)]".into(),
        ))
    } else if tightness.contains(&Tightness::Independent) {
        Some(RateReport::input(
            Scheme::PublicClosedForm,
            yz.value,
            yz.input,
            "independent main and wiretap channels: max[I(X;Y)-I(Y;Z)]".into(),
        ))
    } else {
        None
    };
    Ok(PublicBounds {
        lower,
        upper,
        tightness,
        closed_form,
    })
}

/// Capacity of the main channel with the feedback silent, which the
/// destination-key scheme attains as a secrecy rate.
pub fn full_duplex_secrecy_capacity(spec: &ModAddChannelSpec) -> Result<RateReport> {
    full_duplex_secrecy_capacity_with(spec, BA_DEFAULT_TOL, BA_DEFAULT_MAX_ITER)
}

pub fn full_duplex_secrecy_capacity_with(
    spec: &ModAddChannelSpec,
    tol: f64,
    max_iter: usize,
) -> Result<RateReport> {
    let cap = channel_capacity_ba(&spec.main_channel(), tol, max_iter)?;
    let feedback = Pmf::uniform(spec.z_size)?;
    Ok(RateReport::optimized(
        Scheme::FullDuplex,
        cap.bits,
        AchievingParams {
            input: Some(cap.input),
            feedback: Some(feedback),
            ..Default::default()
        },
        format!(
            "main-channel capacity, Blahut-Arimoto {} iterations, duality gap {:.3e}; feedback uniform over |Z| = {}",
            cap.iterations, cap.gap, spec.z_size
        ),
    ))
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Domain(format!("{name} = {v} outside [0, 1]")));
    }
    Ok(())
}

/// Unclamped half-duplex rate; the caller applies the outer `[.]^+`.
fn halfduplex_raw(eps: f64, delta: f64, mu: f64, t: f64) -> f64 {
    let dh = delta + t - 2.0 * delta * t;
    (1.0 - t) * (h2(eps + mu - 2.0 * mu * eps) - h2(eps)) - (h2(dh + mu - 2.0 * mu * dh) - h2(dh))
}

/// Secrecy rate of the half-duplex scheme at input bias `mu` and feedback fraction `t`.
pub fn halfduplex_rate(eps: f64, delta: f64, mu: f64, t: f64) -> Result<f64> {
    check_unit("eps", eps)?;
    check_unit("delta", delta)?;
    check_unit("mu", mu)?;
    check_unit("t", t)?;
    Ok(halfduplex_raw(eps, delta, mu, t).max(0.0))
}

/// Maximises `f` on `[lo, hi]` to about `1e-12` in the argument.
fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > 1e-12 {
        if fa >= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b);
        }
    }
    let x = (lo + hi) / 2.0;
    (x, f(x))
}

/// `(rate, mu, t)` ordered lexicographically.
fn lex_greater(a: (f64, f64, f64), b: (f64, f64, f64)) -> bool {
    a.0.total_cmp(&b.0)
        .then(a.1.total_cmp(&b.1))
        .then(a.2.total_cmp(&b.2))
        .is_gt()
}

/// Best `(mu, t)` for the half-duplex scheme: a `(grid + 1)^2` grid on the
/// unit square, then alternating golden-section line searches around the
/// best cell until a sweep gains less than `refine_tol`.
pub fn halfduplex_optimize(eps: f64, delta: f64, grid: usize, refine_tol: f64) -> Result<RateReport> {
    check_unit("eps", eps)?;
    check_unit("delta", delta)?;
    if grid < MIN_HALFDUPLEX_GRID {
        return Err(Error::Domain(format!("grid {grid} < {MIN_HALFDUPLEX_GRID}")));
    }
    if refine_tol.is_nan() || refine_tol <= 0.0 {
        return Err(Error::Domain(format!("refine_tol must be positive, got {refine_tol}")));
    }
    let f = |mu: f64, t: f64| halfduplex_raw(eps, delta, mu, t);
    let g = grid as f64;
    let mut best = (0..=grid)
        .into_par_iter()
        .map(|i| {
            let mu = i as f64 / g;
            (0..=grid)
                .map(|k| {
                    let t = k as f64 / g;
                    (f(mu, t), mu, t)
                })
                .fold((f64::NEG_INFINITY, 0.0, 0.0), |a, b| if lex_greater(b, a) { b } else { a })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((f64::NEG_INFINITY, 0.0, 0.0), |a, b| if lex_greater(b, a) { b } else { a });
    // the centre point is always a candidate so the result never falls below it
    let centre = (f(0.5, 0.5), 0.5, 0.5);
    if lex_greater(centre, best) {
        best = centre;
    }

    let cell = 1.0 / g;
    let (mut rate, mut mu, mut t) = best;
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        let before = rate;
        let (m2, r2) = golden_section(|m| f(m, t), (mu - cell).max(0.0), (mu + cell).min(1.0));
        if r2 > rate {
            mu = m2;
            rate = r2;
        }
        let (t2, r3) = golden_section(|s| f(mu, s), (t - cell).max(0.0), (t + cell).min(1.0));
        if r3 > rate {
            t = t2;
            rate = r3;
        }
        if rate - before < refine_tol || sweeps >= 1000 {
            break;
        }
    }
    Ok(RateReport::optimized(
        Scheme::HalfDuplex,
        rate,
        AchievingParams {
            mu: Some(mu),
            t: Some(t),
            feedback: Some(Pmf::bernoulli(t)?),
            ..Default::default()
        },
        format!("grid {grid}x{grid} plus {sweeps} coordinate sweeps; clamp applied after optimisation"),
    ))
}

/// Destination channel of the general half-duplex scheme: the destination
/// hears `Y = X + N1` while its feedback symbol is 0 and an erasure
/// otherwise. The erasure is the last output column.
pub fn halfduplex_general_main(spec: &ModAddChannelSpec, p_x1: &Pmf) -> Result<TransitionMatrix> {
    if p_x1.alphabet_size() != spec.x1_size {
        return Err(Error::Dimension(format!(
            "feedback pmf over {} symbols, spec has |X1| = {}",
            p_x1.alphabet_size(),
            spec.x1_size
        )));
    }
    let listen = p_x1.probs()[0];
    let main = spec.main_channel();
    let cols = spec.y_size + 1;
    let mut rows = Vec::with_capacity(spec.x_size);
    for x in 0..spec.x_size {
        let mut row: Vec<f64> = main.row(x).iter().map(|p| listen * p).collect();
        row.push(1.0 - listen);
        debug_assert_eq!(row.len(), cols);
        rows.push(row);
    }
    TransitionMatrix::from_rows(rows)
}

/// `[I(X; Ŷ) - I(X; Z)]^+` for the half-duplex scheme with arbitrary
/// source and feedback distributions.
pub fn halfduplex_general_rate(spec: &ModAddChannelSpec, p_x: &Pmf, p_x1: &Pmf) -> Result<f64> {
    if p_x.alphabet_size() != spec.x_size {
        return Err(Error::Dimension(format!(
            "input pmf over {} symbols, spec has |X| = {}",
            p_x.alphabet_size(),
            spec.x_size
        )));
    }
    let main = halfduplex_general_main(spec, p_x1)?;
    let wiretap = forward_law(spec, p_x1)?.wiretap();
    let ixy = mutual_information(&main.joint(p_x)?)?;
    let ixz = mutual_information(&wiretap.joint(p_x)?)?;
    Ok((ixy - ixz).max(0.0))
}

/// [`halfduplex_general_rate`] wrapped as a report.
pub fn halfduplex_general_report(spec: &ModAddChannelSpec, p_x: &Pmf, p_x1: &Pmf) -> Result<RateReport> {
    Ok(RateReport {
        scheme: Scheme::HalfDuplexGeneral,
        rate_bits: halfduplex_general_rate(spec, p_x, p_x1)?,
        achieving_params: None,
        notes: format!("evaluated at P_X = {:?}, P_X1 = {:?}", p_x.probs(), p_x1.probs()),
    })
}
