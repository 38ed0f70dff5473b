//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::path::Path;
use std::time::{Duration, Instant};

use bowen::geometry::{box_counting_dim, sample_limit_set, SampleStrategy};
use bowen::hypotheses::PRIMITIVITY_P_MAX;
use bowen::maps::continuants;
use bowen::symbolic::find_primitivity;
use bowen::systems::{self, bundled, GraphLayer, GraphLetter, SimilarityLayer};
use bowen::thermo::{
    ab_dimension_bounds, bowen_dimension_with, certify_primitivity, partition, theta_bounds, theta_chain_holds,
    AbBounds, DimensionResult, FamilyRule, PressureOptions, Strategy as Method,
};
use bowen::{compose_norm, distortion_constant, GraphSchedule, Incidence, Letter, SystemSpec, Word};
use bowen_cli::{config, execute, load_config, Command, Loaded};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

/// Randomised cases per invariant.
const CASES: u32 = 256;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn dimension(loaded: &Loaded, strategy: Method, n_max: usize, tol: f64) -> Result<DimensionResult, String> {
    let opts = PressureOptions {
        strategy,
        ..Default::default()
    };
    bowen_dimension_with(&loaded.system, loaded.t_bracket(), n_max, tol, &opts).map_err(|e| e.to_string())
}

fn load(name: &str) -> Result<Loaded, String> {
    load_config(name).map_err(|e| e.to_string())
}

fn cantor() -> Outcome {
    let start = Instant::now();
    let l = load("cantor3")?;
    let d = dimension(&l, Method::MatrixExact, 30, 1e-5)?;
    let elapsed = start.elapsed();
    let target = 2f64.ln() / 3f64.ln();
    check(
        d.lo <= target && target <= d.hi,
        format!("[{}, {}] misses {target}", d.lo, d.hi),
    )?;
    check(d.hi - d.lo <= 2e-4, format!("width {}", d.hi - d.lo))?;
    check(elapsed < Duration::from_secs(1), format!("took {elapsed:?}"))?;
    Ok(format!("[{:.7}, {:.7}] in {elapsed:.2?}", d.lo, d.hi))
}

fn alternating() -> Outcome {
    let l = load("alternating")?;
    let d = dimension(&l, Method::MatrixExact, 30, 1e-5)?;
    let target = 2.0 / 3.0;
    check(
        d.lo <= target && target <= d.hi,
        format!("[{}, {}] misses 2/3", d.lo, d.hi),
    )?;
    check(d.hi - d.lo <= 2e-4, format!("width {}", d.hi - d.lo))?;
    Ok(format!("[{:.7}, {:.7}]", d.lo, d.hi))
}

fn cf12_bracket() -> Result<DimensionResult, String> {
    let l = load("cf12")?;
    dimension(&l, Method::EnumerateExact, 18, 1e-4)
}

fn continued_fractions() -> Outcome {
    let start = Instant::now();
    let l = load("cf12")?;
    let d = cf12_bracket()?;
    check(
        0.52 <= d.lo && d.hi <= 0.54,
        format!("[{}, {}] not inside [0.52, 0.54]", d.lo, d.hi),
    )?;
    let cloud = sample_limit_set(&l.system, 20, 20_000, SampleStrategy::RandomAdmissible { seed: 7 })
        .map_err(|e| e.to_string())?;
    let window = l.file.run.scale_window.expect("cf12 names a scale window");
    let fit = box_counting_dim(&cloud, window).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(
        (fit.slope - d.midpoint()).abs() <= 0.03,
        format!("box count {} vs {}", fit.slope, d.midpoint()),
    )?;
    check(elapsed < Duration::from_secs(60), format!("took {elapsed:?}"))?;
    Ok(format!(
        "[{:.5}, {:.5}], box count {:.4}, {elapsed:.2?}",
        d.lo, d.hi, fit.slope
    ))
}

fn rate_ratio() -> Outcome {
    let l = load("ab-half")?;
    let point = match ab_dimension_bounds(&l.system, l.system.horizon()).map_err(|e| e.to_string())? {
        AbBounds::Bounds { point: Some(p), .. } => p,
        other => return Err(format!("no point estimate: {other:?}")),
    };
    check((point - 0.5).abs() <= 0.02, format!("point {point}"))?;
    let d = dimension(&l, Method::Auto, l.n_max(), 1e-4)?;
    check(
        d.lo <= point && point <= d.hi,
        format!("[{}, {}] misses {point}", d.lo, d.hi),
    )?;
    Ok(format!("a/b = {point}, bracket [{:.5}, {:.5}]", d.lo, d.hi))
}

fn elliptic() -> Outcome {
    let r = systems::elliptic_lower_bound(2, 20.0, 30.0, 1.0, &[1.2]).map_err(|e| e.to_string())?;
    check(r.threshold == 4.0 / 3.0, format!("lower bound {}", r.threshold))?;
    let lattice = systems::lattice_poles(20.0, 30.0).len();
    check(lattice >= 200, format!("only {lattice} lattice poles"))?;
    match &r.rows[0] {
        systems::EllipticRow::Found {
            poles, z, growth_ok, ..
        } => {
            let z5 = z.iter().find(|p| p.0 == 5).map(|p| p.1).unwrap_or(0.0);
            check(*growth_ok && z5 >= 32.0, format!("Z_5(1.2) = {z5}"))?;
            Ok(format!("bound 4/3, {poles} of {lattice} poles, Z_5(1.2) = {z5:.2}"))
        }
        other => Err(format!("t = 1.2 gave {other:?}")),
    }
}

fn ascending() -> Outcome {
    let l = load("cf-ascending")?;
    let a = dimension(&l, Method::EnumerateExact, 18, 1e-4)?;
    let b = cf12_bracket()?;
    let gap = (a.lo - b.lo).abs().max((a.hi - b.hi).abs());
    check(gap <= 1e-3, format!("[{}, {}] vs [{}, {}]", a.lo, a.hi, b.lo, b.hi))?;
    Ok(format!("[{:.5}, {:.5}] vs [{:.5}, {:.5}]", a.lo, a.hi, b.lo, b.hi))
}

/// Disjoint similarities on `[0, 1]` with the given relative sizes.
fn similarity_layer(weights: &[f64], fill: f64) -> SimilarityLayer {
    let total: f64 = weights.iter().sum();
    let gap = (1.0 - fill) / weights.len() as f64;
    let mut offset = 0.0;
    let (mut ratios, mut offsets) = (Vec::new(), Vec::new());
    for w in weights {
        let r = fill * w / total;
        ratios.push(r);
        offsets.push(offset);
        offset += r + gap;
    }
    SimilarityLayer { ratios, offsets }
}

fn layers() -> impl Strategy<Value = Vec<SimilarityLayer>> {
    prop::collection::vec(
        (prop::collection::vec(0.2f64..1.0, 2..=4), 0.3f64..0.95).prop_map(|(w, f)| similarity_layer(&w, f)),
        1..=3,
    )
}

fn cf_digits() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::btree_set(1u32..=6, 1..=3), 1..=3)
        .prop_map(|d| d.into_iter().map(|s| s.into_iter().map(f64::from).collect()).collect())
}

/// Single-vertex similarity system with random incidence matrices.
fn matrix_system(k: usize, mats: &[Vec<Vec<bool>>], h: usize) -> Option<SystemSpec> {
    let r = 1.0 / (k as f64 + 1.0);
    let layer = GraphLayer {
        vertices: 1,
        letters: (0..k)
            .map(|i| GraphLetter {
                label: i.to_string(),
                initial: 0,
                terminal: 0,
                ratio: r * (1.0 - 0.1 * i as f64),
                offset: i as f64 * (r + r / k as f64),
            })
            .collect(),
    };
    let inc: Vec<Incidence> = mats
        .iter()
        .map(|m| Incidence::Matrix(m[..k].iter().map(|r| r[..k].to_vec()).collect()))
        .collect();
    systems::build_graph_system("random", 1, &[layer], &inc, h).ok()
}

fn runner() -> TestRunner {
    TestRunner::new(Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    })
}

fn property<S: Strategy>(
    name: &str,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<String, String> {
    runner()
        .run(&strategy, test)
        .map(|_| format!("{name} ({CASES} cases)"))
        .map_err(|e| format!("{name}: {e}"))
}

fn z_hi(s: &SystemSpec, m: usize, n: usize, t: f64) -> Result<f64, TestCaseError> {
    partition(s, m, n, t, Method::Auto)
        .map(|v| v.hi)
        .map_err(|e| TestCaseError::fail(e.to_string()))
}

fn invariants() -> Outcome {
    let mut passed = Vec::new();

    passed.push(property(
        "Z decreasing and log-convex in t",
        (
            layers(),
            cf_digits(),
            2usize..=7,
            0.0f64..0.45,
            0.0f64..0.27,
            any::<bool>(),
        ),
        |(ls, digits, n, a, gap, use_cf)| {
            let s = if use_cf {
                systems::build_cf_system("cf", &digits, &[], n)
            } else {
                systems::build_similarity_system("sim", &ls, &[], n)
            }
            .map_err(|e| TestCaseError::fail(e.to_string()))?;
            let (t0, t2) = (a, a + 2.0 * gap + 0.01);
            let t1 = 0.5 * (t0 + t2);
            let (z0, z1, z2) = (z_hi(&s, 1, n, t0)?, z_hi(&s, 1, n, t1)?, z_hi(&s, 1, n, t2)?);
            prop_assert!(z2 <= z1 * (1.0 + 1e-12) && z1 <= z0 * (1.0 + 1e-12));
            prop_assert!(z1.ln() <= 0.5 * (z0.ln() + z2.ln()) + 1e-12);
            Ok(())
        },
    )?);

    passed.push(property(
        "Z_n(t+e) <= eta^(ne) Z_n(t)",
        (layers(), 1usize..=8, 0.0f64..0.9, 0.0f64..0.1),
        |(ls, n, t, eps)| {
            let s = systems::build_similarity_system("sim", &ls, &[], n).unwrap();
            let eta = s.contraction().eta_single;
            let bound = eta.powf(n as f64 * eps) * z_hi(&s, 1, n, t)?;
            prop_assert!(z_hi(&s, 1, n, t + eps)? <= bound * (1.0 + 1e-12));
            Ok(())
        },
    )?);

    passed.push(property(
        "distortion K = 4 on continued-fraction words to depth 8",
        prop::collection::vec(1u32..=12, 1..=8),
        |digits| {
            let d: Vec<f64> = digits.iter().map(|&x| x as f64).collect();
            let s = systems::build_cf_system("cf", &d.iter().map(|&x| vec![x]).collect::<Vec<_>>(), &[], 8)
                .map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert!(distortion_constant(&s).unwrap() <= 4.0);
            // |φ_ω'(x)| = 1/(q_{n-1}x + q_n)², extreme at the ends of [0, 1].
            let (q_prev, q) = continuants(d.iter().cloned());
            let (sup, inf) = (1.0 / (q * q), 1.0 / ((q_prev + q) * (q_prev + q)));
            prop_assert!(sup <= 4.0 * inf * (1.0 + 1e-12));
            let norm = compose_norm(&Word::new(1, vec![0; d.len()]), &s).unwrap();
            prop_assert!(norm.lo <= sup * (1.0 + 1e-9) && norm.hi >= sup * (1.0 - 1e-9));
            prop_assert!(norm.hi <= 4.0 * inf * (1.0 + 1e-9));
            Ok(())
        },
    )?);

    let matrix = || prop::collection::vec(prop::collection::vec(prop::bool::weighted(0.75), 4), 4);
    passed.push(property(
        "splitting bounds with primitivity constants",
        (
            2usize..=4,
            prop::collection::vec(matrix(), 1..=3),
            1usize..=3,
            1usize..=3,
            0.05f64..=1.0,
        ),
        |(k, mats, m, n, t)| {
            let Some(s) = matrix_system(k, &mats, 12) else {
                return Ok(());
            };
            let Some(cert) = certify_primitivity(&s, 3).map_err(|e| TestCaseError::fail(e.to_string()))? else {
                return Ok(());
            };
            let p = cert.p;
            if m + p + n > s.horizon() {
                return Ok(());
            }
            let kk = distortion_constant(&s).unwrap();
            let joined = z_hi(&s, 1, m + p + n, t)?;
            let split = z_hi(&s, 1, m, t)? * z_hi(&s, m + p + 1, m + p + n, t)?;
            prop_assert!(joined >= kk.powf(-2.0 * t) * cert.q.powf(t) * split * (1.0 - 1e-12));
            let whole = z_hi(&s, 1, m + n, t)?;
            prop_assert!(whole <= kk.powf(t) * z_hi(&s, 1, m, t)? * z_hi(&s, m + 1, m + n, t)? * (1.0 + 1e-12));
            Ok(())
        },
    )?);

    let names: Vec<&str> = config::BUNDLED.iter().map(|(n, _)| *n).collect();
    let loaded: Vec<Loaded> = names.iter().map(|n| load(n)).collect::<Result<_, _>>()?;
    passed.push(property(
        "theta_N <= theta_Phi <= B <= d on bundled systems",
        (
            0..loaded.len(),
            2usize..=6,
            prop::sample::select(vec![1e-2, 1e-3, 1e-4]),
        ),
        |(i, n, tol)| {
            let l = &loaded[i];
            let n = n.min(l.system.horizon());
            let opts = PressureOptions::default();
            let d = bowen_dimension_with(&l.system, l.t_bracket(), n, 1e-3, &opts)
                .map_err(|e| TestCaseError::fail(format!("{}: {e}", l.system.name())))?;
            let theta = theta_bounds(&FamilyRule::Finite, tol).unwrap();
            prop_assert!(theta_chain_holds(&theta, d.hi, l.system.dim()), "{}", l.system.name());
            Ok(())
        },
    )?);

    let bowen_hi: Vec<f64> = loaded
        .iter()
        .map(|l| dimension(l, l.file.run.strategy, l.n_max(), l.file.run.tol).map(|d| d.hi))
        .collect::<Result<_, _>>()?;
    passed.push(property(
        "box-counting oracle <= Bowen hi + 0.05 on bundled systems",
        (0..loaded.len(), any::<u64>()),
        |(i, seed)| {
            let l = &loaded[i];
            let window = l.file.run.scale_window.unwrap_or(bowen_cli::DEFAULT_SCALE_WINDOW);
            let cloud = sample_limit_set(
                &l.system,
                l.depth(),
                l.file.run.max_points,
                SampleStrategy::RandomAdmissible { seed },
            )
            .map_err(|e| TestCaseError::fail(e.to_string()))?;
            let fit = box_counting_dim(&cloud, window).map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert!(
                fit.slope <= bowen_hi[i] + 0.05,
                "{}: {} vs {}",
                l.system.name(),
                fit.slope,
                bowen_hi[i]
            );
            Ok(())
        },
    )?);

    Ok(passed.join("; "))
}

fn constructions() -> Outcome {
    let s = bundled::pinched2(12).map_err(|e| e.to_string())?;
    let pinched = systems::reblock_pinched(&s, &[2, 4, 6, 8, 10, 12]).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for t in [0.3, 0.5, 0.8] {
        for n in 1..=5 {
            let a = partition(&s, 1, pinched.pinch_times[n - 1], t, Method::Auto)
                .map_err(|e| e.to_string())?
                .hi;
            let b = partition(&pinched.system, 1, n, t, Method::Auto)
                .map_err(|e| e.to_string())?
                .hi;
            worst = worst.max((a - b).abs() / a);
        }
    }
    check(
        worst <= systems::IDENTITY_RTOL,
        format!("pinched identity off by {worst:e}"),
    )?;

    let g = bundled::golden_p1(20).map_err(|e| e.to_string())?;
    let cert = certify_primitivity(&g, PRIMITIVITY_P_MAX)
        .map_err(|e| e.to_string())?
        .ok_or("golden-p1 not primitive")?;
    check(cert.p == 1, format!("golden-p1 has p = {}", cert.p))?;
    let mut dims = Vec::new();
    for ell in 2..=4 {
        for t in [0.3, 0.5, 0.8] {
            let sub = systems::extract_subsystem_g_bounded(&g, &cert, ell, t).map_err(|e| e.to_string())?;
            for m in 1..=sub.system.horizon() {
                let zs = partition(&sub.system, 1, m, t, Method::Auto)
                    .map_err(|e| e.to_string())?
                    .hi;
                let zf = partition(&g, 1, m * (ell + cert.p), t, Method::Auto)
                    .map_err(|e| e.to_string())?
                    .hi;
                check(
                    zs <= zf * (1.0 + 1e-12),
                    format!("ell {ell}, m {m}, t {t}: {zs} > {zf}"),
                )?;
            }
        }
        let sub = systems::extract_subsystem_g_bounded(&g, &cert, ell, 0.4).map_err(|e| e.to_string())?;
        let opts = PressureOptions::default();
        let d = bowen_dimension_with(&sub.system, (0.0, 1.0), sub.system.horizon(), 1e-5, &opts)
            .map_err(|e| e.to_string())?;
        dims.push(d.midpoint());
    }
    check(
        dims.windows(2).all(|w| w[0] <= w[1] + 1e-5),
        format!("B over ell = {dims:?}"),
    )?;
    Ok(format!(
        "pinched identity within {worst:.1e}; B(S_ell) for ell = 2, 3, 4: {dims:.4?}"
    ))
}

fn letter_matrix(s: &GraphSchedule, n: usize) -> Vec<Vec<u32>> {
    let k = s.alphabet(n).len();
    (0..k)
        .map(|a| (0..k).map(|b| s.allowed(n, a, b) as u32).collect())
        .collect()
}

fn mat_mul(a: &[Vec<u32>], b: &[Vec<u32>]) -> Vec<Vec<u32>> {
    (0..a.len())
        .map(|i| {
            (0..b[0].len())
                .map(|j| (0..b.len()).map(|k| a[i][k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

fn primitivity() -> Outcome {
    let full = bundled::cantor3(10).map_err(|e| e.to_string())?;
    let p_full = certify_primitivity(&full, PRIMITIVITY_P_MAX)
        .map_err(|e| e.to_string())?
        .map(|c| c.p);
    check(p_full == Some(0), format!("full matrices gave {p_full:?}"))?;

    let letters: Vec<Letter> = (0..3).map(|i| Letter::new(i.to_string(), 0, 0)).collect();
    let shift = Incidence::Matrix((0..3).map(|i| (0..3).map(|j| j == (i + 1) % 3).collect()).collect());
    let perm = GraphSchedule::new(vec![1; 13], vec![letters; 12], vec![shift; 11]).map_err(|e| e.to_string())?;
    let p_perm = find_primitivity(&perm, PRIMITIVITY_P_MAX, |_| 1.0).map_err(|e| e.to_string())?;
    check(
        p_perm.is_none(),
        format!("permutation schedule gave p = {:?}", p_perm.map(|c| c.p)),
    )?;

    let fixture: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/crafted_p2.json"))
            .map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let get = |k: &str| -> Vec<Vec<u32>> { serde_json::from_value(fixture[k].clone()).expect("fixture matrix") };
    let crafted = bundled::crafted_p2(12).map_err(|e| e.to_string())?;
    let m1 = letter_matrix(crafted.schedule(), 1);
    check(
        m1 == get("letter_incidence"),
        "letter incidence differs from the fixture",
    )?;
    let m2 = mat_mul(&m1, &m1);
    let m3 = mat_mul(&m2, &m1);
    check(
        m2 == get("product_2") && m3 == get("product_3"),
        "matrix products differ from the fixture",
    )?;
    check(
        m2.iter().flatten().any(|&x| x == 0) && m3.iter().flatten().all(|&x| x > 0),
        "fixture is not p = 2",
    )?;
    let p = certify_primitivity(&crafted, PRIMITIVITY_P_MAX)
        .map_err(|e| e.to_string())?
        .map(|c| c.p);
    check(p == Some(2), format!("crafted schedule gave {p:?}"))?;
    Ok("full: p = 0, cyclic permutation: none, crafted: p = 2".into())
}

fn determinism() -> Outcome {
    let threads = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(4)
        .max(2);
    let mut checked = Vec::new();
    for name in ["cf12", "golden-p1", "elliptic-q2"] {
        let l = load(name)?;
        let mut runs = Vec::new();
        for n in [1, threads, threads] {
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| e.to_string())?;
            pool.install(|| execute(Command::Report, &l, dir.path()))
                .map_err(|e| e.to_string())?;
            let read = |f: &str| std::fs::read(dir.path().join(f)).map_err(|e| e.to_string());
            runs.push((read("pressure.csv")?, read("points.csv")?));
        }
        check(
            runs.windows(2).all(|w| w[0] == w[1]),
            format!("{name}: CSV bytes differ"),
        )?;
        checked.push(name);
    }
    Ok(format!("{} identical at 1 and {threads} threads", checked.join(", ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("middle-thirds Cantor set", cantor),
        ("alternating-ratio system", alternating),
        ("continued fractions {1, 2}", continued_fractions),
        ("growth-rate ratio system", rate_ratio),
        ("elliptic model q = 2", elliptic),
        ("ascending continued fractions", ascending),
        ("invariant suite", invariants),
        ("construction identities", constructions),
        ("primitivity checker", primitivity),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!(
                "criterion {:>2} PASS  {name}: {detail} [{:.2?}]",
                i + 1,
                start.elapsed()
            ),
            Err(why) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name}: {why} [{:.2?}]", i + 1, start.elapsed());
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
