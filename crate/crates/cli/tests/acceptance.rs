//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Run with `cargo test -p wiretap-cli --test acceptance -- --nocapture --test-threads=1`.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wiretap_cli::commands::{compare_row, CaseArg};
use wiretap_core::channels::{bsc_to_modadd, forward_law, BscWiretapSpec, Correlation, ModAddChannelSpec};
use wiretap_core::feedback_sim::{exact_small_system, run_full_duplex, run_half_duplex, Codebook, SimConfig, SimScheme};
use wiretap_core::files::{AnyChannel, ChannelFile};
use wiretap_core::info_theory::{binary_entropy, channel_capacity_ba, entropy, JointPmf, Pmf, TransitionMatrix};
use wiretap_core::lattice::{
    mod_lambda_capacity, mod_lambda_reduce, wrapped_gaussian_entropy, wrapped_gaussian_quadrature, LatticeSpec,
};
use wiretap_core::secrecy_rates::{full_duplex_secrecy_capacity, halfduplex_optimize, halfduplex_rate};

fn h(p: f64) -> f64 {
    binary_entropy(p).unwrap()
}

/// Collects sub-check outcomes and prints the criterion line.
struct Criterion {
    id: u32,
    start: Instant,
    limit: Option<Duration>,
    checks: Vec<(String, bool)>,
}

impl Criterion {
    fn new(id: u32, limit_secs: Option<u64>) -> Self {
        Self {
            id,
            start: Instant::now(),
            limit: limit_secs.map(Duration::from_secs),
            checks: Vec::new(),
        }
    }

    fn check(&mut self, what: impl Into<String>, ok: bool) {
        self.checks.push((what.into(), ok));
    }

    fn finish(mut self) {
        let elapsed = self.start.elapsed();
        if let Some(limit) = self.limit {
            self.check(format!("runtime {:.2}s < {}s", elapsed.as_secs_f64(), limit.as_secs()), elapsed < limit);
        }
        let ok = self.checks.iter().all(|c| c.1);
        println!("criterion {}: {}", self.id, if ok { "PASS" } else { "FAIL" });
        for (what, pass) in &self.checks {
            println!("    [{}] {what}", if *pass { "ok" } else { "FAIL" });
        }
        assert!(ok, "criterion {} failed", self.id);
    }
}

fn bsc_channel(eps: f64, delta: f64, c: Correlation) -> AnyChannel {
    AnyChannel::Discrete(ChannelFile::Bsc {
        bsc: BscWiretapSpec::new(eps, delta, c).unwrap(),
    })
}

/// Random pmf with some exact zeros.
fn random_pmf(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..k)
            .map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random::<f64>() })
            .collect();
        let s: f64 = v.iter().sum();
        if s > 0.0 {
            return v.into_iter().map(|a| a / s).collect();
        }
    }
}

#[test]
fn criterion_1_one_time_pad_exact() {
    let mut c = Criterion::new(1, Some(10));
    let mut worst_tv: f64 = 0.0;
    for q in 2..=8 {
        let noiseless = JointPmf::new(vec![q, q], {
            let mut d = vec![0.0; q * q];
            d[0] = 1.0;
            d
        })
        .unwrap();
        let spec = ModAddChannelSpec::with_uniform_feedback_noise(q, q, q, &noiseless).unwrap();
        let law = forward_law(&spec, &Pmf::uniform(q).unwrap()).unwrap().wiretap();
        let uniform = Pmf::uniform(q).unwrap();
        for x in 0..q {
            let row = Pmf::new(law.row(x).to_vec()).unwrap();
            worst_tv = worst_tv.max(row.total_variation(&uniform).unwrap());
        }
    }
    c.check(format!("max TV((x + X1) mod q, uniform) over q in 2..=8 = {worst_tv:e} <= 1e-15"), worst_tv <= 1e-15);

    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let mut worst_mi: f64 = 0.0;
    for _ in 0..50 {
        let q = rng.random_range(2..=4usize);
        let n = rng.random_range(1..=3usize);
        let x_size = rng.random_range(2..=q);
        let y_size = rng.random_range(x_size..=4);
        let y0 = rng.random_range(1..=3usize);
        let m = rng.random_range(2..=4usize);
        let noise = JointPmf::new(vec![y0, y_size, q], random_pmf(&mut rng, y0 * y_size * q)).unwrap();
        let spec = ModAddChannelSpec::new(x_size, q, y0, y_size, q, noise).unwrap();
        let words: Vec<Vec<usize>> = (0..m).map(|_| (0..n).map(|_| rng.random_range(0..x_size)).collect()).collect();
        let book = Codebook::from_words(words, Pmf::uniform(x_size).unwrap()).unwrap();
        let r = exact_small_system(&book, &spec, &Pmf::uniform(q).unwrap()).unwrap();
        worst_mi = worst_mi.max(r.mi_w_z_bits);
    }
    c.check(format!("max exact I(W;Z) over 50 random instances = {worst_mi:e} <= 1e-12 bits"), worst_mi <= 1e-12);
    c.finish();
}

#[test]
fn criterion_2_full_duplex_capacity() {
    let mut c = Criterion::new(2, Some(5));
    let spec = bsc_to_modadd(&BscWiretapSpec::new(0.1, 0.2, Correlation::Independent).unwrap()).unwrap();
    let r = full_duplex_secrecy_capacity(&spec).unwrap().rate_bits;
    let target = 1.0 - h(0.1);
    c.check(format!("BSC(0.1): {r:.12} vs 1 - H(0.1) = {target:.12} within 1e-6"), (r - target).abs() < 1e-6);

    let noise = Pmf::new(vec![0.5, 0.2, 0.15, 0.1, 0.05]).unwrap();
    let rows: Vec<Vec<f64>> = (0..5)
        .map(|x| (0..5).map(|y| noise.probs()[(y + 5 - x) % 5]).collect())
        .collect();
    let cap = channel_capacity_ba(&TransitionMatrix::from_rows(rows).unwrap(), 1e-10, 100_000).unwrap();
    let closed = 5f64.log2() - entropy(&noise);
    c.check(
        format!("q=5 cyclic: BA {:.12} vs log2 5 - H(noise) = {closed:.12} within 1e-6", cap.bits),
        (cap.bits - closed).abs() < 1e-6,
    );
    c.finish();
}

#[test]
fn criterion_3_bsc_case_table() {
    let mut c = Criterion::new(3, None);
    let tol = 1e-9;
    let near = |a: f64, b: f64| (a - b).abs() <= tol;
    let row_check = |c: &mut Criterion, label: &str, case, eps, delta, want: (f64, f64, f64)| {
        let r = compare_row(eps, delta, case, 32, 64).unwrap();
        let cp = r.c_s_p.unwrap_or(f64::NAN);
        c.check(
            format!(
                "{label} (eps={eps}, delta={delta}): (C_s, C_s^p, C_s^f) = ({:.12}, {:.12}, {:.12}) vs ({:.12}, {:.12}, {:.12})",
                r.c_s, cp, r.c_s_f, want.0, want.1, want.2
            ),
            near(r.c_s, want.0) && near(cp, want.1) && near(r.c_s_f, want.2),
        );
        r
    };
    row_check(&mut c, "case 1 noiseless", CaseArg::Noiseless, 0.0, 0.0, (0.0, 0.0, 1.0));
    row_check(&mut c, "case 2 independent", CaseArg::Independent, 0.1, 0.1, (0.0, h(0.18) - h(0.1), 1.0 - h(0.1)));
    row_check(&mut c, "case 3 degraded main", CaseArg::DegradedMain, 0.1, 0.05, (0.0, 0.0, 1.0 - h(0.1)));
    row_check(&mut c, "case 4 degraded wiretap", CaseArg::DegradedWiretap, 0.1, 0.3, (h(0.3) - h(0.1), h(0.3) - h(0.1), 1.0 - h(0.1)));

    // equality of C_s^f and C_s^p exactly on the boundary
    for (case, eps, delta, boundary) in [
        (CaseArg::Independent, 0.1, 0.1, false),
        (CaseArg::Independent, 0.1, 0.5, true),
        (CaseArg::Independent, 0.3, 0.5, true),
        (CaseArg::DegradedWiretap, 0.1, 0.3, false),
        (CaseArg::DegradedWiretap, 0.1, 0.5, true),
        (CaseArg::DegradedWiretap, 0.2, 0.5, true),
    ] {
        let r = compare_row(eps, delta, case, 32, 16).unwrap();
        let cp = r.c_s_p.unwrap();
        let equal = (r.c_s_f - cp).abs() <= tol;
        c.check(
            format!(
                "{case:?} (eps={eps}, delta={delta}): C_s^f = {:.12} >= C_s^p = {cp:.12}, equality {equal} (expected {boundary})",
                r.c_s_f
            ),
            r.c_s_f >= cp - tol && equal == boundary,
        );
    }
    c.finish();
}

#[test]
fn criterion_4_half_duplex() {
    let mut c = Criterion::new(4, None);
    let r = halfduplex_rate(0.0, 0.0, 0.5, 0.5).unwrap();
    c.check(format!("halfduplex_rate(0, 0, 1/2, 1/2) = {r} == 1/2"), r == 0.5);

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let eps: f64 = rng.random();
        let delta: f64 = rng.random();
        let v = halfduplex_rate(eps, delta, 0.5, 0.5).unwrap();
        worst = worst.max((v - (1.0 - h(eps)) / 2.0).abs());
    }
    c.check(format!("max |R(eps, delta, 1/2, 1/2) - (1 - H(eps))/2| over 20 random eps = {worst:e} <= 1e-12"), worst <= 1e-12);

    let opt = halfduplex_optimize(0.0, 0.0, 64, 1e-12).unwrap();
    let p = opt.achieving_params.clone().unwrap();
    let (mu, t, rate) = (p.mu.unwrap(), p.t.unwrap(), opt.rate_bits);
    c.check(
        format!("halfduplex_optimize(0, 0) = (mu, t, R) = ({mu:.9}, {t:.9}, {rate:.9}) vs (1/2, 1/2, 1/2) within 1e-6"),
        (mu - 0.5).abs() <= 1e-6 && (t - 0.5).abs() <= 1e-6 && (rate - 0.5).abs() <= 1e-6,
    );

    let mut min_rate = f64::INFINITY;
    for i in 0..9 {
        for k in 0..9 {
            let (eps, delta) = (i as f64 / 8.0, k as f64 / 8.0);
            if eps == 0.5 {
                continue;
            }
            min_rate = min_rate.min(halfduplex_optimize(eps, delta, 32, 1e-10).unwrap().rate_bits);
        }
    }
    c.check(format!("min R* over 9x9 grid with eps != 1/2 = {min_rate:.9} > 0"), min_rate > 0.0);
    c.finish();
}

#[test]
fn criterion_5_half_duplex_equivalent_channel() {
    let mut c = Criterion::new(5, Some(30));
    let cfg = SimConfig {
        scheme: SimScheme::HalfDuplex,
        n: 1000,
        m_size: 2,
        trials: 1000,
        seed: 5,
        t: Some(0.25),
        source_pmf: None,
        channel: bsc_channel(0.1, 0.2, Correlation::Independent),
    };
    let hd = run_half_duplex(&cfg).unwrap().half_duplex.unwrap();
    let target = TransitionMatrix::from_rows(vec![vec![0.675, 0.25, 0.075], vec![0.075, 0.25, 0.675]]).unwrap();
    let linf = hd.empirical_main.linf_distance(&target).unwrap();
    c.check(format!("{} symbols simulated", hd.symbols), hd.symbols == 1_000_000);
    c.check(format!("L-inf(empirical main, analytic) = {linf:.6} < 0.01"), linf < 0.01);
    c.check(
        format!("wiretap flip rate {:.6} within 0.002 of 0.35", hd.wiretap_flip_rate),
        (hd.wiretap_flip_rate - 0.35).abs() <= 0.002,
    );
    c.finish();
}

#[test]
fn criterion_6_full_duplex_simulation() {
    let mut c = Criterion::new(6, Some(60));
    let cfg = SimConfig {
        scheme: SimScheme::FullDuplex,
        n: 64,
        m_size: 16,
        trials: 10_000,
        seed: 6,
        t: None,
        source_pmf: None,
        channel: bsc_channel(0.05, 0.1, Correlation::Independent),
    };
    let r = run_full_duplex(&cfg).unwrap();
    c.check(format!("p_e_hat = {} < 0.01", r.p_e_hat), r.p_e_hat < 0.01);
    let p = r.chi2_pvalue.unwrap_or(0.0);
    c.check(format!("chi-squared uniformity of Z symbols: p = {p:.6} > 0.001"), p > 0.001);
    c.check(
        format!(
            "corrected digest MI = {:.6} < 0.01 bits (plug-in {:.6}, digest of {} symbols)",
            r.mi_corrected_bits, r.mi_estimate_bits, r.digest_len
        ),
        r.mi_corrected_bits < 0.01,
    );
    c.finish();
}

#[test]
fn criterion_7_mod_lambda_numerics() {
    let mut c = Criterion::new(7, Some(60));
    let pi_e = 2.0 * std::f64::consts::PI * std::f64::consts::E;

    let small = LatticeSpec::integers(1e-4, 1.0).unwrap();
    let hs = wrapped_gaussian_entropy(&small, 1e-4).unwrap();
    let closed_h = 0.5 * (pi_e * 1e-4).log2();
    c.check(format!("sigma=0.01: h = {hs:.9} vs {closed_h:.9} within 1e-3"), (hs - closed_h).abs() <= 1e-3);
    let cap = mod_lambda_capacity(&small).unwrap();
    let closed_c = (1.0 / (0.01 * pi_e.sqrt())).log2();
    c.check(format!("sigma=0.01: capacity = {cap:.9} vs {closed_c:.9} within 1e-3"), (cap - closed_c).abs() <= 1e-3);

    let wide = LatticeSpec::integers(1e4, 1.0).unwrap();
    let cw = mod_lambda_capacity(&wide).unwrap();
    c.check(format!("sigma=100: capacity = {cw:e} <= 1e-6"), cw <= 1e-6);

    for s in [0.1f64, 0.3, 1.0] {
        let q = wrapped_gaussian_quadrature(&LatticeSpec::integers(s * s, 1.0).unwrap(), s * s).unwrap();
        c.check(format!("sigma={s}: integral of f = {:.12} within 1e-8 of 1", q.mass), (q.mass - 1.0).abs() <= 1e-8);
    }

    let g = vec![vec![1.0, 0.4], vec![0.3, 1.2]];
    let spec = LatticeSpec::new(g, 1.0, 0.05, 0.2).unwrap();
    let hh = wrapped_gaussian_entropy(&spec, 0.05).unwrap();
    let cap2 = mod_lambda_capacity(&spec).unwrap();
    let det: f64 = 1.0 * 1.2 - 0.4 * 0.3;
    c.check(
        format!("m=2, G=[[1,0.4],[0.3,1.2]]: capacity {cap2:.9} vs log2|det G| - h = {:.9} within 1e-6", det.log2() - hh),
        (cap2 - (det.log2() - hh).max(0.0)).abs() <= 1e-6,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut failures = 0;
    for _ in 0..10_000 {
        let x = [rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0)];
        let r = mod_lambda_reduce(&x, &spec).unwrap();
        if mod_lambda_reduce(&r, &spec).unwrap() != r {
            failures += 1;
        }
    }
    c.check(format!("reduce idempotent on 10^4 random points ({failures} failures)"), failures == 0);
    c.finish();
}

fn strip_timestamp(text: &str) -> String {
    text.lines().filter(|l| !l.trim_start().starts_with("\"timestamp\"")).collect::<Vec<_>>().join("\n")
}

fn simulate(bin: &str, input: &Path, out: &Path, threads: usize) -> String {
    let status = Command::new(bin)
        .env_remove("WIRETAP_SEED")
        .args(["simulate", input.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", &threads.to_string()])
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    std::fs::read_to_string(out.with_extension("json")).unwrap()
}

#[test]
fn criterion_8_determinism() {
    let mut c = Criterion::new(8, None);
    let bin = env!("CARGO_BIN_EXE_wiretap");
    let dir = tempfile::tempdir().unwrap();
    let configs = [
        r#"{"scheme": "full_duplex", "n": 32, "m_size": 8, "trials": 3000, "seed": 81,
            "channel": {"bsc": {"eps": 0.1, "delta": 0.2, "correlation": "independent"}}}"#,
        r#"{"scheme": "half_duplex", "n": 200, "m_size": 4, "trials": 500, "seed": 82, "t": 0.3,
            "channel": {"bsc": {"eps": 0.1, "delta": 0.05, "correlation": "degraded_main"}}}"#,
        r#"{"scheme": "mod_lambda", "n": 6, "m_size": 4, "trials": 300, "seed": 83,
            "channel": {"m": 1, "g": [[1.0]], "sigma1_sq": 0.01, "sigma2_sq": 0.04}}"#,
    ];
    for (i, cfg) in configs.iter().enumerate() {
        let input = dir.path().join(format!("cfg{i}.json"));
        std::fs::write(&input, cfg).unwrap();
        let first = simulate(bin, &input, &dir.path().join(format!("a{i}")), 1);
        // re-run from the emitted manifest with other thread counts
        let manifest = dir.path().join(format!("a{i}.json"));
        let second = simulate(bin, &manifest, &dir.path().join(format!("b{i}")), 4);
        let third = simulate(bin, &manifest, &dir.path().join(format!("c{i}")), 2);
        let same = strip_timestamp(&first) == strip_timestamp(&second) && strip_timestamp(&first) == strip_timestamp(&third);
        c.check(format!("config {i}: threads 1, 4 and 2 give identical reports modulo timestamp"), same);
    }
    c.finish();
}
