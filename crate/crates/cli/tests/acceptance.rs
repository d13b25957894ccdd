//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line per criterion. Exits nonzero if any criterion outside
//! `KNOWN_RED` fails.
//!
//! Monte Carlo runs are shared between criteria where the scenario is the same.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use ecdm::inference::{structure_stat, StructureHypothesis};
use ecdm::kernel::{index_sets, w_stat};
use ecdm::simulation::{run_monte_carlo, Coupling, Distribution, SimReport, SimScenario};
use ecdm::PairedSample;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const REPS: usize = 2000;

/// Criteria whose failure is expected at desk scale and documented in the
/// README. They still print FAIL, but do not fail the test target.
const KNOWN_RED: [usize; 1] = [4];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// Monte Carlo reports keyed by scenario, computed once.
#[derive(Default)]
struct Runs {
    cache: BTreeMap<(usize, u8, u8, usize), SimReport>,
}

impl Runs {
    fn get(&mut self, p: usize, coupling: Coupling, dist: Distribution, n: Option<usize>) -> &SimReport {
        let key = (p, coupling as u8, dist as u8, n.unwrap_or(0));
        self.cache.entry(key).or_insert_with(|| {
            let seed = 20_240_000 + p as u64;
            let mut sc = SimScenario::standard(p, coupling, dist, REPS, seed);
            if let Some(n) = n {
                sc = sc.with_n(n);
            }
            let t = Instant::now();
            let run = run_monte_carlo(&sc, 1).expect("simulation");
            eprintln!(
                "  [run p = {p}, n = {}, {coupling:?}, {dist:?}: {:.1} s]",
                sc.sample_size(),
                t.elapsed().as_secs_f64()
            );
            run.report
        })
    }
}

// Direct transcription of the reference algorithm on plain nested vectors.
// Rows are 1-based in the comments and 0-based in the code.

fn take(x: &[Vec<f64>], from: usize, to: usize) -> Vec<Vec<f64>> {
    if to < from {
        return Vec::new();
    }
    x[from - 1..to].to_vec()
}

fn half(which: usize, k: usize, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = x.len();
    let n1 = n.div_ceil(2);
    let n2 = n - n1;
    let f = k / 2;
    if which == 1 {
        if f >= n1 {
            take(x, f - n1 + 1, f)
        } else {
            let mut v = take(x, 1, f);
            v.extend(take(x, f + n2 + 1, n));
            v
        }
    } else if f <= n1 {
        take(x, f + 1, f + n2)
    } else {
        let mut v = take(x, 1, f - n1);
        v.extend(take(x, f + 1, n));
        v
    }
}

fn mean(rows: &[Vec<f64>]) -> Vec<f64> {
    let p = rows[0].len();
    (0..p).map(|c| rows.iter().map(|r| r[c]).sum::<f64>() / rows.len() as f64).collect()
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn quad(a: &[f64], s: &[Vec<f64>], b: &[f64]) -> f64 {
    a.iter().enumerate().map(|(r, ar)| ar * dot(&s[r], b)).sum()
}

struct Literal {
    t: f64,
    w1: f64,
    w2: f64,
    t0: f64,
    /// Sum of absolute summands, the natural scale for rounding error.
    scale: [f64; 4],
}

fn literal(x1: &[Vec<f64>], x2: &[Vec<f64>], sigma0: &[Vec<f64>]) -> Literal {
    let n = x1.len();
    let n1 = n.div_ceil(2) as f64;
    let n2 = n as f64 - n1;
    let u = 2.0 * n1 * n2 / ((n1 - 1.0) * (n2 - 1.0) * n as f64 * (n as f64 - 1.0));
    let un = n1 * n2 / ((n1 - 1.0) * (n2 - 1.0));
    let c = 2.0 / (n as f64 * (n as f64 - 1.0));
    let norm0: f64 = sigma0.iter().flatten().map(|v| v * v).sum();
    let mut m = BTreeMap::new();
    for k in 3..=2 * n - 1 {
        for (i, x) in [(1, x1), (2, x2)] {
            for j in 1..=2 {
                m.insert((i, j, k), mean(&half(j, k, x)));
            }
        }
    }
    let (mut t, mut w1, mut w2, mut s0) = (0.0, 0.0, 0.0, 0.0);
    let mut scale = [0.0; 4];
    for j in 2..=n {
        for i in 1..j {
            let k = i + j;
            let a1 = diff(&x1[i - 1], &m[&(1, 1, k)]);
            let b1 = diff(&x1[j - 1], &m[&(1, 2, k)]);
            let a2 = diff(&x2[i - 1], &m[&(2, 1, k)]);
            let b2 = diff(&x2[j - 1], &m[&(2, 2, k)]);
            let d = dot(&a1, &b1) * dot(&a2, &b2);
            t += d;
            w1 += dot(&a1, &b1).powi(2);
            w2 += dot(&a2, &b2).powi(2);
            let d0 = un * d - n1 * quad(&a1, sigma0, &a2) / (n1 - 1.0) - n2 * quad(&b1, sigma0, &b2) / (n2 - 1.0);
            s0 += d0;
            scale[0] += d.abs();
            scale[3] += (un * d).abs()
                + (n1 * quad(&a1, sigma0, &a2) / (n1 - 1.0)).abs()
                + (n2 * quad(&b1, sigma0, &b2) / (n2 - 1.0)).abs();
        }
    }
    scale[0] *= u;
    scale[1] = u * w1;
    scale[2] = u * w2;
    scale[3] = c * scale[3] + norm0;
    Literal { t: u * t, w1: u * w1, w2: u * w2, t0: c * s0 + norm0, scale }
}

fn rel_err(got: f64, want: f64, scale: f64) -> f64 {
    (got - want).abs() / want.abs().max(scale).max(f64::MIN_POSITIVE)
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    while cases < 200 {
        let n = rng.random_range(4..=12);
        let p = rng.random_range(2..=8);
        for p1 in 1..p {
            let p2 = p - p1;
            let loc: Vec<f64> = (0..p).map(|_| rng.random_range(-5.0..5.0)).collect();
            let spread: Vec<f64> = (0..p).map(|_| rng.random_range(0.1..3.0)).collect();
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    (0..p)
                        .map(|c| loc[c] + spread[c] * rng.sample::<f64, _>(StandardNormal))
                        .collect()
                })
                .collect();
            let sigma0: Vec<Vec<f64>> = (0..p1)
                .map(|_| (0..p2).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let x1: Vec<Vec<f64>> = rows.iter().map(|r| r[..p1].to_vec()).collect();
            let x2: Vec<Vec<f64>> = rows.iter().map(|r| r[p1..].to_vec()).collect();
            let want = literal(&x1, &x2, &sigma0);

            let sample = PairedSample::from_row_major(n, p, rows.concat(), p1).unwrap();
            let hyp = StructureHypothesis::new(
                Array2::from_shape_vec((p1, p2), sigma0.concat()).unwrap(),
            )
            .unwrap();
            let got = [
                ecdm::t_hat(&sample),
                w_stat(&sample, 1).unwrap(),
                w_stat(&sample, 2).unwrap(),
                structure_stat(&sample, &hyp).unwrap(),
            ];
            let expected = [want.t, want.w1, want.w2, want.t0];
            for q in 0..4 {
                worst = worst.max(rel_err(got[q], expected[q], want.scale[q]));
            }
            cases += 1;
            if cases == 200 {
                break;
            }
        }
    }
    outcome(
        worst <= 1e-10,
        format!("{cases} matrices, max relative error {worst:.2e} (tolerance 1e-10)"),
    )
}

fn criterion_2() -> Outcome {
    let mut checked = 0usize;
    for n in 4..=64usize {
        let n1 = n.div_ceil(2);
        let n2 = n - n1;
        let mut sets = Vec::new();
        for k in 3..=2 * n - 1 {
            let (v1, v2) = index_sets(n, k).unwrap();
            let mut all: Vec<usize> = v1.iter().chain(&v2).copied().collect();
            all.sort_unstable();
            let partition = all == (1..=n).collect::<Vec<_>>();
            if v1.len() != n1 || v2.len() != n2 || !partition {
                return outcome(false, format!("n = {n}, k = {k}: sizes or partition broken"));
            }
            sets.push((v1, v2));
        }
        for j in 2..=n {
            for i in 1..j {
                let (v1, v2) = &sets[i + j - 3];
                if !v1.contains(&i) || !v2.contains(&j) {
                    return outcome(false, format!("n = {n}, pair ({i}, {j}) not split"));
                }
                checked += 1;
            }
        }
    }
    outcome(true, format!("n in [4, 64], all k, {checked} pairs"))
}

fn criterion_3() -> Outcome {
    let sc = SimScenario::standard(200, Coupling::SharedCoordinateCaseB, Distribution::GaussianI, REPS, 3)
        .with_n(50);
    let r = run_monte_carlo(&sc, 1).unwrap().report;
    let o = &r.oracle;
    let checks = [
        ("T", &r.t_hat, o.delta),
        ("W1", &r.w1, o.tr_sigma1_sq),
        ("W2", &r.w2, o.tr_sigma2_sq),
        ("SR", &r.delta_sr, o.delta),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, m, target) in checks {
        let z = (m.mean - target) / m.se;
        pass &= z.abs() <= 3.0;
        parts.push(format!("{name} z = {z:+.2}"));
    }
    outcome(pass, parts.join(", "))
}

fn criterion_4(runs: &mut Runs) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for p in [64, 256] {
        let size = runs.get(p, Coupling::NullCaseA, Distribution::GaussianI, None).rejection.rate;
        pass &= (0.03..=0.07).contains(&size);
        parts.push(format!("p = {p}: size {size:.4}"));
    }
    outcome(pass, parts.join(", ") + " (band [0.03, 0.07])")
}

fn criterion_5(runs: &mut Runs) -> Outcome {
    let r = runs.get(512, Coupling::SharedCoordinateCaseB, Distribution::GaussianI, None);
    let l = r.oracle.l_pop.unwrap();
    let power = r.rejection.rate;
    outcome(
        (power - l).abs() <= 0.05,
        format!("p = 512, n = {}: power {power:.4}, L = {l:.4}", r.oracle.n),
    )
}

fn criterion_6(runs: &mut Runs) -> Outcome {
    let r = runs.get(1000, Coupling::NullCaseA, Distribution::GaussianI, Some(128));
    outcome(r.ks_null <= 0.05, format!("p = 1000, n = 128: KS distance {:.4}", r.ks_null))
}

fn criterion_7(runs: &mut Runs) -> Outcome {
    let alt = runs.get(256, Coupling::SharedCoordinateCaseB, Distribution::GaussianI, None);
    let k = alt.oracle.k_pop.unwrap();
    let alt_ratio = alt.t_hat.variance / (k * k);
    let null = runs.get(256, Coupling::NullCaseA, Distribution::GaussianI, None);
    let d = null.oracle.delta_scale_pop;
    let null_ratio = null.t_hat.variance / (d * d);
    let band = 0.8..=1.25;
    outcome(
        band.contains(&alt_ratio) && band.contains(&null_ratio),
        format!("p = 256: Var/K^2 = {alt_ratio:.3} (alternative), Var/delta^2 = {null_ratio:.3} (null)"),
    )
}

fn criterion_8(runs: &mut Runs) -> Outcome {
    let r = runs.get(256, Coupling::NullCaseA, Distribution::T10III, None);
    let ours = (r.rejection.rate - 0.05).abs();
    let sr = (r.sr_rejection.rate - 0.05).abs();
    outcome(
        ours < sr && sr > 0.03,
        format!(
            "t10 null, p = 256: ECDM size {:.4}, SR size {:.4}",
            r.rejection.rate, r.sr_rejection.rate
        ),
    )
}

const GRID: [usize; 4] = [16, 64, 256, 512];
/// Median of 1/κ̂ under the null is near 2 median(χ²_1) ≈ 0.91 in the limit.
const INV_KAPPA_BOUND: f64 = 5.0;

fn criterion_9(runs: &mut Runs) -> Outcome {
    let mut pass = true;
    let mut kappas = Vec::new();
    let mut inv = Vec::new();
    let mut worst_z: f64 = 0.0;
    for p in GRID {
        let alt = runs.get(p, Coupling::SharedCoordinateCaseB, Distribution::GaussianI, None);
        kappas.push(alt.median_kappa.unwrap());
        let z = (alt.rv.mean - alt.oracle.rho_pop) / alt.rv.se;
        if z.abs() > worst_z.abs() {
            worst_z = z;
        }
        pass &= z.abs() <= 3.0;
        let null = runs.get(p, Coupling::NullCaseA, Distribution::GaussianI, None);
        inv.push(null.median_inv_kappa.unwrap());
    }
    pass &= kappas.windows(2).all(|w| w[1] < w[0]);
    pass &= inv.iter().all(|&v| v <= INV_KAPPA_BOUND);
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" > ");
    outcome(
        pass,
        format!(
            "p in {GRID:?}: median kappa {}; null median 1/kappa max {:.3}; worst rho z = {worst_z:+.2}",
            fmt(&kappas),
            inv.iter().cloned().fold(0.0, f64::max)
        ),
    )
}

/// Coverage is judged on the null grid points with p >= 256; the smaller
/// point is reported alongside for reference.
fn criterion_10(runs: &mut Runs) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for p in [64, 256, 512] {
        let c = runs.get(p, Coupling::NullCaseA, Distribution::GaussianI, None).coverage.rate;
        if p >= 256 {
            pass &= (c - 0.95).abs() <= 0.02;
            parts.push(format!("p = {p}: coverage {c:.4}"));
        } else {
            parts.push(format!("(p = {p}: {c:.4}, not judged)"));
        }
    }
    outcome(pass, parts.join(", "))
}

fn simulate(config: &Path, out: &Path, workers: usize) -> Vec<u8> {
    let status = Command::new(env!("CARGO_BIN_EXE_ecdm"))
        .args(["simulate", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(["--workers", &workers.to_string()])
        .output()
        .expect("run ecdm");
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    std::fs::read(out.join("replications.csv")).unwrap()
}

fn criterion_11() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("scenario.toml");
    std::fs::write(
        &config,
        "coupling = \"shared_coordinate_case_b\"\n\
         distribution = \"chisq_ii\"\n\
         replications = 200\n\
         seed = 11\n\
         [covariance]\n\
         p1 = 32\n\
         p2 = 32\n",
    )
    .unwrap();
    let one = simulate(&config, &dir.path().join("w1"), 1);
    let eight = simulate(&config, &dir.path().join("w8"), 8);
    outcome(
        one == eight && !one.is_empty(),
        format!("workers 1 vs 8: {} bytes, identical = {}", one.len(), one == eight),
    )
}

type Check = Box<dyn FnOnce(&mut Runs) -> Outcome>;

fn main() {
    let mut runs = Runs::default();
    let criteria: Vec<(&str, Check)> = vec![
        ("oracle equivalence", Box::new(|_| criterion_1())),
        ("index-set laws", Box::new(|_| criterion_2())),
        ("unbiasedness", Box::new(|_| criterion_3())),
        ("size calibration", Box::new(criterion_4)),
        ("power tracking", Box::new(criterion_5)),
        ("asymptotic normality", Box::new(criterion_6)),
        ("variance laws", Box::new(criterion_7)),
        ("robustness contrast", Box::new(criterion_8)),
        ("diagnostics", Box::new(criterion_9)),
        ("CI coverage", Box::new(criterion_10)),
        ("determinism", Box::new(|_| criterion_11())),
    ];
    let mut unexpected = 0;
    let mut red = Vec::new();
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let id = i + 1;
        let t = Instant::now();
        let o = check(&mut runs);
        let verdict = match (o.pass, KNOWN_RED.contains(&id)) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        if !o.pass {
            red.push(id);
            unexpected += usize::from(!KNOWN_RED.contains(&id));
        }
        println!(
            "criterion {id:>2} {name:<22} {verdict}  {} [{:.1} s]",
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    if red.is_empty() {
        println!("all criteria passed");
    } else {
        println!("failed criteria: {red:?}; known failures: {KNOWN_RED:?}");
    }
    if unexpected > 0 {
        std::process::exit(1);
    }
}
