//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sigdtw::corpus::{write_corpus, P_RANGE, X_RANGE, Y_RANGE};
use sigdtw::evaluation::det_curve;
use sigdtw::matcher::dtw;
use sigdtw::protocol::{Condition, Experiment, GenuineScore, ImpostorScore};
use sigdtw::{
    delta, delta_regression, demo_signal, generate_corpus, generate_corpus_with, min_dcf,
    simple_diff, CorpusManifest, DcfParams, DeltaConfig, ScoreSet, Split, SynthParams,
};

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn secs(d: Duration) -> String {
    format!("{:.3} s", d.as_secs_f64())
}

// ---------------------------------------------------------------- criterion 1

/// Slope of the ordinary least-squares line through the replicate-padded
/// window around `l`.
fn ols_slope(signal: &[f64], l: usize, m: usize) -> f64 {
    let last = signal.len() as isize - 1;
    let ks: Vec<f64> = (-(m as isize)..=m as isize).map(|k| k as f64).collect();
    let ys: Vec<f64> = (-(m as isize)..=m as isize)
        .map(|k| signal[(l as isize + k).clamp(0, last) as usize])
        .collect();
    let n = ks.len() as f64;
    let k_mean = ks.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let num: f64 = ks
        .iter()
        .zip(&ys)
        .map(|(k, y)| (k - k_mean) * (y - y_mean))
        .sum();
    let den: f64 = ks.iter().map(|k| (k - k_mean) * (k - k_mean)).sum();
    num / den
}

fn delta_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let signal: Vec<f64> = (0..50).map(|_| rng.random_range(-100.0..100.0)).collect();
        for m in 1..=7 {
            let fast = delta_regression(&signal, m);
            for (l, v) in fast.iter().enumerate() {
                worst = worst.max((v - ols_slope(&signal, l, m)).abs());
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(
        worst <= 1e-9 && elapsed < Duration::from_secs(5),
        format!(
            "100 sequences x m=1..7, max |error| {worst:.3e} (tol 1e-9), {}",
            secs(elapsed)
        ),
    )
}

// ---------------------------------------------------------------- criterion 2

/// Minimum path cost by walking every monotone path with an explicit stack.
fn enumerate_paths(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let cost = |i: usize, j: usize| -> f64 {
        a[i].iter()
            .zip(&b[j])
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let (n, m) = (a.len(), b.len());
    let mut best = f64::INFINITY;
    let mut stack = vec![(0usize, 0usize, cost(0, 0))];
    while let Some((i, j, acc)) = stack.pop() {
        if i == n - 1 && j == m - 1 {
            best = best.min(acc);
            continue;
        }
        for (di, dj) in [(1, 0), (0, 1), (1, 1)] {
            let (ni, nj) = (i + di, j + dj);
            if ni < n && nj < m {
                stack.push((ni, nj, acc + cost(ni, nj)));
            }
        }
    }
    best
}

fn dtw_oracle_check() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut self_worst: f64 = 0.0;
    let matrix = |rows: usize, dim: usize, rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
        (0..rows)
            .map(|_| (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect()
    };
    for _ in 0..200 {
        let dim = rng.random_range(1..=4);
        let (la, lb) = (rng.random_range(1..=8), rng.random_range(1..=8));
        let a = matrix(la, dim, &mut rng);
        let b = matrix(lb, dim, &mut rng);
        worst = worst.max((dtw(&a, &b).unwrap().accumulated - enumerate_paths(&a, &b)).abs());
        let same = dtw(&a, &a).unwrap();
        self_worst = self_worst.max(same.accumulated.abs().max(same.normalized.abs()));
    }
    let elapsed = start.elapsed();
    ensure(
        worst <= 1e-9 && self_worst == 0.0 && elapsed < Duration::from_secs(10),
        format!(
            "200 pairs L<=8 D<=4, max |error| {worst:.3e} (tol 1e-9), max dtw(a,a) {self_worst}, {}",
            secs(elapsed)
        ),
    )
}

// ---------------------------------------------------------------- criterion 3

fn score_set(genuine: &[f64], impostor: &[f64]) -> ScoreSet {
    ScoreSet {
        condition: Condition::RandomForgery,
        delta_points: 1,
        genuine: genuine
            .iter()
            .map(|&score| GenuineScore {
                user_id: 1,
                sample_index: 1,
                score,
            })
            .collect(),
        impostor: impostor
            .iter()
            .map(|&score| ImpostorScore {
                claimed_user_id: 1,
                source_user_id: 2,
                sample_index: 1,
                score,
            })
            .collect(),
        skipped_users: Vec::new(),
    }
}

/// DCF minimum over the 2N+1 threshold positions: every distinct score,
/// every midpoint between neighbours, and one position outside each end.
fn brute_force_dcf(genuine: &[f64], impostor: &[f64], params: &DcfParams) -> f64 {
    let mut distinct: Vec<f64> = genuine.iter().chain(impostor).copied().collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let mut positions = vec![distinct[0] - 1.0];
    for w in distinct.windows(2) {
        positions.push(w[0]);
        positions.push((w[0] + w[1]) / 2.0);
    }
    positions.push(*distinct.last().unwrap());
    positions.push(distinct.last().unwrap() + 1.0);
    positions
        .iter()
        .map(|&t| {
            let p_miss = genuine.iter().filter(|s| **s < t).count() as f64 / genuine.len() as f64;
            let p_fa = impostor.iter().filter(|s| **s >= t).count() as f64 / impostor.len() as f64;
            params.c_miss * p_miss * params.p_target + params.c_fa * p_fa * (1.0 - params.p_target)
        })
        .fold(f64::INFINITY, f64::min)
}

fn min_dcf_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let params = DcfParams::default();
    let mut worst: f64 = 0.0;
    let mut monotone = true;
    for set in 0..100 {
        let separation = rng.random_range(0.0..3.0);
        let coarse = set % 2 == 0;
        let draw = |shift: f64, rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..200)
                .map(|_| {
                    let v: f64 = rng.random_range(-2.0..2.0) + shift;
                    if coarse {
                        (v * 10.0).round() / 10.0
                    } else {
                        v
                    }
                })
                .collect()
        };
        let genuine = draw(separation, &mut rng);
        let impostor = draw(0.0, &mut rng);
        let (got, threshold) = min_dcf(&score_set(&genuine, &impostor), &params).unwrap();
        worst = worst.max((got - brute_force_dcf(&genuine, &impostor, &params)).abs());
        let curve = det_curve(&genuine, &impostor).unwrap();
        let pts = &curve.points;
        monotone &= pts.windows(2).all(|w| {
            w[0].threshold < w[1].threshold && w[0].p_fa >= w[1].p_fa && w[0].p_miss <= w[1].p_miss
        });
        monotone &= (pts[0].p_fa, pts[0].p_miss) == (1.0, 0.0);
        monotone &= (pts[pts.len() - 1].p_fa, pts[pts.len() - 1].p_miss) == (0.0, 1.0);
        monotone &= pts.iter().any(|p| p.threshold == threshold);
    }
    let elapsed = start.elapsed();
    ensure(
        worst <= 1e-12 && monotone && elapsed < Duration::from_secs(5),
        format!(
            "100 sets of 200+200, max |error| {worst:.3e} (tol 1e-12), DET monotone: {monotone}, {}",
            secs(elapsed)
        ),
    )
}

// ---------------------------------------------------------------- criterion 4

fn compact_corpus() -> CorpusManifest {
    let params = SynthParams {
        extent: 0.3,
        pressure_scale: 0.2,
        ..SynthParams::new(10, 10, 10, 7)
    };
    generate_corpus_with(&params).unwrap()
}

/// Maps raw x, y and p through seeded integer affine maps that keep every
/// value inside the tablet ranges.
fn affine_copy(corpus: &CorpusManifest, seed: u64) -> (CorpusManifest, [(i32, i32); 3]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all = || {
        corpus
            .users
            .iter()
            .flat_map(|u| u.genuine.iter().chain(&u.skilled))
            .flat_map(|s| &s.samples)
    };
    type Channel = (fn(&sigdtw::Sample) -> i32, (i32, i32));
    let channels: [Channel; 3] = [(|s| s.x, X_RANGE), (|s| s.y, Y_RANGE), (|s| s.p, P_RANGE)];
    let maps = channels.map(|(get, (lo, hi))| {
        let min = all().map(get).min().unwrap();
        let max = all().map(get).max().unwrap();
        let feasible: Vec<i32> = [2, 3]
            .into_iter()
            .filter(|s| s * (max - min) <= hi - lo)
            .collect();
        assert!(
            !feasible.is_empty(),
            "corpus too wide for an integer rescale"
        );
        let scale = feasible[rng.random_range(0..feasible.len())];
        let offset = rng.random_range(lo - scale * min..=hi - scale * max);
        (scale, offset)
    });
    let mut out = corpus.clone();
    for user in &mut out.users {
        for sig in user.genuine.iter_mut().chain(user.skilled.iter_mut()) {
            for s in &mut sig.samples {
                s.x = maps[0].0 * s.x + maps[0].1;
                s.y = maps[1].0 * s.y + maps[1].1;
                s.p = maps[2].0 * s.p + maps[2].1;
            }
            sig.validate().unwrap();
        }
    }
    (out, maps)
}

fn affine_invariance(
    corpus: &CorpusManifest,
    moved: &CorpusManifest,
    maps: &[(i32, i32); 3],
) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut changed = 0usize;
    let mut trials = 0usize;
    for p in [1, 3, 5, 7, 9, 11, 13, 15] {
        let cfg = DeltaConfig::new(p).unwrap();
        let a = Experiment::prepare(corpus, cfg, Split::default()).unwrap();
        let b = Experiment::prepare(moved, cfg, Split::default()).unwrap();
        let (ta, tb) = (a.trials().unwrap(), b.trials().unwrap());
        trials += ta.len();
        changed += ta
            .iter()
            .zip(&tb)
            .filter(|(x, y)| x.predicted_user != y.predicted_user)
            .count();
        for (sa, sb) in [
            (a.random_scores().unwrap(), b.random_scores().unwrap()),
            (a.skilled_scores().unwrap(), b.skilled_scores().unwrap()),
        ] {
            for (x, y) in sa
                .genuine_scores()
                .iter()
                .chain(&sa.impostor_scores())
                .zip(sb.genuine_scores().iter().chain(&sb.impostor_scores()))
            {
                worst = worst.max((x - y).abs());
            }
        }
    }
    ensure(
        changed == 0 && worst <= 1e-6,
        format!(
            "10 users, x/y/p mapped by (scale, offset) {maps:?}, P=1..15: {changed}/{trials} predictions changed, max score change {worst:.3e} (tol 1e-6)"
        ),
    )
}

// ---------------------------------------------------------------- criterion 5

fn sample_std(v: &[f64]) -> f64 {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

fn noise_robustness() -> Outcome {
    let start = Instant::now();
    let x = demo_signal(7);
    let smooth = delta(&x, DeltaConfig::new(15).unwrap());
    let rough = simple_diff(&x);
    let ratio = sample_std(&smooth[220..=380]) / sample_std(&rough[220..=380]);
    let elapsed = start.elapsed();
    ensure(
        ratio <= 0.25 && elapsed < Duration::from_secs(1),
        format!(
            "seed 7, std ratio P=15 / one-sample diff over 220..=380 = {ratio:.4} (bound 0.25), {}",
            secs(elapsed)
        ),
    )
}

// ---------------------------------------------------------------- criterion 6

/// `(P, identification rate, min DCF random, min DCF skilled)` from the
/// first recorded sweep of the seed-7, 50-user corpus.
const SWEEP_FIXTURE: [(u32, f64, f64, f64); 8] = [
    (1, 0.996, 0.00715183673, 0.04238),
    (3, 1.0, 0.00337387755, 0.04192),
    (5, 1.0, 0.00192326531, 0.03914),
    (7, 1.0, 0.000965714286, 0.03234),
    (9, 1.0, 0.00064244898, 0.02832),
    (11, 1.0, 0.000404081633, 0.02474),
    (13, 1.0, 0.000323265306, 0.02796),
    (15, 1.0, 0.00024244898, 0.02914),
];

fn summary_rows(dir: &Path) -> BTreeMap<u32, (f64, f64, f64)> {
    let text = fs::read_to_string(dir.join("sweep_summary.csv")).unwrap();
    text.lines()
        .skip(1)
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            let num = |i: usize| f[i].parse::<f64>().unwrap();
            (f[0].parse().unwrap(), (num(1), num(2), num(4)))
        })
        .collect()
}

fn trend(results: &Path, elapsed: Duration) -> Outcome {
    let rows = summary_rows(results);
    let (id1, dcf1, _) = rows[&1];
    let (id11, dcf11, _) = rows[&11];
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(1e-3);
    let fixture_ok = SWEEP_FIXTURE.iter().all(|&(p, id, r, s)| {
        rows.get(&p)
            .is_some_and(|&(gi, gr, gs)| close(gi, id) && close(gr, r) && close(gs, s))
    });
    ensure(
        id11 >= id1 && dcf11 <= dcf1 && fixture_ok && elapsed < Duration::from_secs(600),
        format!(
            "id(11)={id11} >= id(1)={id1}, min_dcf_random(11)={dcf11} <= min_dcf_random(1)={dcf1}, fixtures match: {fixture_ok}, {}",
            secs(elapsed)
        ),
    )
}

// ---------------------------------------------------------------- criterion 7

fn protocol_counts() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for n in [2usize, 5, 10] {
        let corpus = generate_corpus(n, 10, 10, 7).unwrap();
        let exp = Experiment::prepare(&corpus, DeltaConfig::default(), Split::default()).unwrap();
        let random = exp.random_scores().unwrap();
        let skilled = exp.skilled_scores().unwrap();
        let got = (
            random.genuine.len(),
            random.impostor.len(),
            skilled.impostor.len(),
        );
        let want = (n * 5, n * (n - 1) * 5, n * 10);
        ok &= got == want && exp.trials().unwrap().len() == n * 5;
        details.push(format!("n={n}: {got:?}"));
    }
    ensure(
        ok,
        format!("(genuine, random, skilled) {}", details.join(", ")),
    )
}

// ---------------------------------------------------------------- criterion 8

fn dtw_speed() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut matrix = || -> Vec<[f64; 8]> {
        (0..800)
            .map(|_| std::array::from_fn(|_| rng.random_range(-2.0..2.0)))
            .collect()
    };
    let (a, b) = (matrix(), matrix());
    dtw(&a, &b).unwrap();
    let times: Vec<Duration> = (0..5)
        .map(|_| {
            let t = Instant::now();
            std::hint::black_box(dtw(std::hint::black_box(&a), &b).unwrap());
            t.elapsed()
        })
        .collect();
    let slowest = *times.iter().max().unwrap();
    ensure(
        slowest < Duration::from_millis(50),
        format!(
            "800x8 vs 800x8, slowest of 5 calls {:.2} ms (limit 50 ms)",
            slowest.as_secs_f64() * 1e3
        ),
    )
}

// ---------------------------------------------------------------- criterion 9

fn sigdtw(jobs: usize, args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_sigdtw"))
        .arg("--jobs")
        .arg(jobs.to_string())
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "sigdtw {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(
                    path.strip_prefix(root).unwrap().to_path_buf(),
                    fs::read(&path).unwrap(),
                );
            }
        }
    }
    out
}

/// Runs every CLI step behind criteria 4-6 with `jobs` workers under `root`
/// and returns the time spent synthesizing and sweeping the 50-user corpus.
fn cli_runs(root: &Path, jobs: usize, compact: &Path, moved: &Path) -> Duration {
    let s = |p: &Path| p.to_str().unwrap().to_string();
    for (name, corpus) in [("compact", compact), ("moved", moved)] {
        let out = s(&root.join(name));
        let c = s(corpus);
        sigdtw(
            jobs,
            &["identify", "--corpus", &c, "--window", "11", "--out", &out],
        );
        for cond in ["random", "skilled"] {
            sigdtw(
                jobs,
                &[
                    "verify",
                    "--corpus",
                    &c,
                    "--condition",
                    cond,
                    "--window",
                    "11",
                    "--out",
                    &out,
                ],
            );
        }
    }
    sigdtw(
        jobs,
        &[
            "--seed",
            "7",
            "demo-signal",
            "--window",
            "15",
            "--out",
            &s(&root.join("demo/demo.csv")),
        ],
    );
    let start = Instant::now();
    let sweep_corpus = s(&root.join("sweep/corpus"));
    sigdtw(
        jobs,
        &[
            "--seed",
            "7",
            "synth",
            "--users",
            "50",
            "--genuine",
            "10",
            "--skilled",
            "10",
            "--out",
            &sweep_corpus,
        ],
    );
    sigdtw(
        jobs,
        &[
            "sweep",
            "--corpus",
            &sweep_corpus,
            "--windows",
            "1,3,5,7,9,11,13,15",
            "--out",
            &s(&root.join("sweep/results")),
        ],
    );
    start.elapsed()
}

fn determinism(serial: &Path, parallel: &Path) -> Outcome {
    let a = tree(serial);
    let b = tree(parallel);
    let differing: Vec<_> = a
        .keys()
        .chain(b.keys())
        .filter(|k| a.get(*k) != b.get(*k))
        .map(|k| k.display().to_string())
        .collect();
    ensure(
        differing.is_empty() && !a.is_empty(),
        format!(
            "{} files compared between --jobs 1 and --jobs 8, differing: {differing:?}",
            a.len()
        ),
    )
}

// ---------------------------------------------------------------- driver

fn main() {
    let mut failures = 0;
    let mut report = |id: u32, name: &str, check: &mut dyn FnMut() -> Outcome| {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {id} ({name}): {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL criterion {id} ({name}): {detail}");
            }
        }
    };

    let work = tempfile::tempdir().unwrap();
    let serial = work.path().join("jobs1");
    let parallel = work.path().join("jobs8");
    let compact = compact_corpus();
    let (moved, maps) = affine_copy(&compact, 44);
    let compact_dir = work.path().join("corpora/compact");
    let moved_dir = work.path().join("corpora/moved");
    write_corpus(&compact, &compact_dir).unwrap();
    write_corpus(&moved, &moved_dir).unwrap();

    report(1, "delta oracle", &mut delta_oracle);
    report(2, "DTW oracle", &mut dtw_oracle_check);
    report(3, "min-DCF oracle", &mut min_dcf_oracle);
    report(4, "affine invariance", &mut || {
        affine_invariance(&compact, &moved, &maps)
    });
    report(5, "noise robustness", &mut noise_robustness);

    let serial_run = panic::catch_unwind(AssertUnwindSafe(|| {
        cli_runs(&serial, 1, &compact_dir, &moved_dir)
    }));
    report(6, "window trend", &mut || match &serial_run {
        Ok(elapsed) => trend(&serial.join("sweep/results"), *elapsed),
        Err(_) => Err("CLI runs with --jobs 1 failed".into()),
    });
    report(7, "protocol counts", &mut protocol_counts);
    report(8, "DTW speed", &mut dtw_speed);
    report(9, "determinism", &mut || {
        if serial_run.is_err() {
            return Err("CLI runs with --jobs 1 failed".into());
        }
        cli_runs(&parallel, 8, &compact_dir, &moved_dir);
        determinism(&serial, &parallel)
    });

    println!("{} of 9 criteria passed", 9 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
