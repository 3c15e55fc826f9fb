//! Acceptance suite. Prints one PASS/FAIL line per criterion, then fails the
//! test if any criterion failed.
//!
//! Run with `cargo test -p binrobust-cli --test acceptance -- --nocapture`.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use binrobust::imagecore::Mask2D;
use binrobust::morphology::perturb_to_area;
use binrobust::ngldm::{compute_ngldm, lde, ldlgle, Ngldm, NgldmParams};
use binrobust::phantom::{generate_corpus, PhantomConfig};
use binrobust::pipeline::{
    prepare, resolve_spacing, run_experiment, Comparison, ExperimentConfig, MaskVariant, Subject,
};
use binrobust::quantize::{quantize, BinningSpec, LevelImage};
use binrobust::similarity::{lins_ccc, pearson, spearman, PairedSample};

const ORACLE_CASES: usize = 1000;
const ORACLE_BUDGET: Duration = Duration::from_secs(5);
const WORKED_TOL: f64 = 1e-6;
const WORKED_LDE: f64 = 0.0806481;
const WORKED_LDLGLE: f64 = 0.0479398;
const PERMUTATION_CASES: usize = 500;
const PERMUTATIONS_PER_CASE: usize = 50;
const SELF_CCC_TOL: f64 = 1e-12;
const METRIC_PAIRS: usize = 1000;
const CCC_WORKED_TOL: f64 = 1e-9;
const PHANTOM_SEED: u64 = 7;
const CENTRAL_BUDGET: Duration = Duration::from_secs(60);
const STATIC_CCC_FLOOR: f64 = 0.95;
const CCC_GAP: f64 = 0.02;
const LDE_CCC_FLOOR: f64 = 0.95;
const DYNAMIC: &str = "dynamic:32";
const STATIC: &str = "static:0,255,32";

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(name: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { name, pass, detail }
}

/// Per-pixel recount straight from the definition.
fn brute_force_counts(levels: &[u32], roi: &[bool], w: usize, h: usize, n_levels: usize, alpha: u32) -> Vec<u64> {
    let mut counts = vec![0u64; n_levels * 9];
    for y in 0..h {
        for x in 0..w {
            if !roi[y * w + x] {
                continue;
            }
            let c = levels[y * w + x];
            let mut dep = 0;
            for ny in 0..h {
                for nx in 0..w {
                    let cheb = (nx as i64 - x as i64).abs().max((ny as i64 - y as i64).abs());
                    if cheb == 1 && roi[ny * w + nx] && levels[ny * w + nx].abs_diff(c) <= alpha {
                        dep += 1;
                    }
                }
            }
            counts[(c as usize - 1) * 9 + dep] += 1;
        }
    }
    counts
}

fn ngldm_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut mismatches = 0;
    for _ in 0..ORACLE_CASES {
        let (w, h) = (rng.gen_range(1..=8), rng.gen_range(1..=8));
        let n_levels = rng.gen_range(1..=4u32);
        let alpha = rng.gen_range(0..=1u32);
        let levels: Vec<u32> = (0..w * h).map(|_| rng.gen_range(1..=n_levels)).collect();
        let mut roi: Vec<bool> = (0..w * h).map(|_| rng.gen_bool(0.7)).collect();
        let k = rng.gen_range(0..w * h);
        roi[k] = true;
        let img = LevelImage::new(w, h, levels.clone(), n_levels).unwrap();
        let mask = Mask2D::new(w, h, roi.clone()).unwrap();
        let m = compute_ngldm(&img, &mask, NgldmParams { alpha, distance: 1 }).unwrap();
        if m.counts() != brute_force_counts(&levels, &roi, w, h, n_levels as usize, alpha).as_slice() {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        "ngldm oracle equivalence",
        mismatches == 0 && elapsed < ORACLE_BUDGET,
        format!("{ORACLE_CASES} cases, {mismatches} mismatches, {:.2}s", elapsed.as_secs_f64()),
    )
}

fn worked_example() -> Outcome {
    let img = LevelImage::new(3, 3, vec![1, 1, 2, 1, 2, 2, 2, 2, 2], 2).unwrap();
    let m = compute_ngldm(&img, &Mask2D::full(3, 3).unwrap(), NgldmParams::default()).unwrap();
    let expected = [((1, 3), 3), ((2, 3), 2), ((2, 4), 1), ((2, 5), 2), ((2, 6), 1)];
    let counts_ok = expected.iter().all(|&((i, j), c)| m.get(i, j) == c) && m.total() == 9;
    let (a, b) = (lde::<f64>(&m).unwrap(), ldlgle::<f64>(&m).unwrap());
    outcome(
        "worked 3x3 regression",
        counts_ok && (a - WORKED_LDE).abs() < WORKED_TOL && (b - WORKED_LDLGLE).abs() < WORKED_TOL,
        format!("counts_ok={counts_ok} lde={a:.7} ldlgle={b:.7}"),
    )
}

fn row_weight(m: &Ngldm, i: usize) -> f64 {
    (1..=m.max_dependence())
        .map(|j| m.get(i, j) as f64 / (j * j) as f64)
        .sum()
}

fn permutation_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut lde_changed, mut ldlgle_missed, mut sensitive, mut degenerate) = (0, 0, 0, 0);
    for case in 0..PERMUTATION_CASES {
        let n_levels = rng.gen_range(2..=6);
        let max_dep = 9;
        let mut counts: Vec<u64> = (0..n_levels * max_dep)
            .map(|_| if rng.gen_bool(0.4) { rng.gen_range(1..20) } else { 0 })
            .collect();
        if case % 25 == 0 {
            // identical rows: every permutation leaves ldlgle unchanged
            let row: Vec<u64> = counts[..max_dep].to_vec();
            for r in 0..n_levels {
                counts[r * max_dep..(r + 1) * max_dep].copy_from_slice(&row);
            }
        }
        if counts.iter().all(|&c| c == 0) {
            counts[0] = 1;
        }
        let m = Ngldm::from_counts(n_levels, max_dep, counts).unwrap();
        let base_lde = lde::<f64>(&m).unwrap();
        let base_ldlgle = ldlgle::<f64>(&m).unwrap();
        let rows_with_mass = m.level_totals().iter().filter(|&&t| t > 0).count();
        let weights: Vec<f64> = (1..=n_levels).map(|i| row_weight(&m, i)).collect();
        let weights_differ = weights.iter().any(|&w| w != weights[0]);
        let mut any_change = false;
        for _ in 0..PERMUTATIONS_PER_CASE {
            let mut perm: Vec<usize> = (1..=n_levels).collect();
            perm.shuffle(&mut rng);
            let p = m.permute_levels(&perm).unwrap();
            if lde::<f64>(&p).unwrap() != base_lde {
                lde_changed += 1;
            }
            if ldlgle::<f64>(&p).unwrap() != base_ldlgle {
                any_change = true;
            }
        }
        if rows_with_mass >= 2 && weights_differ {
            sensitive += 1;
            if !any_change {
                ldlgle_missed += 1;
            }
        } else {
            degenerate += 1;
        }
    }
    outcome(
        "lde permutation invariance",
        lde_changed == 0 && ldlgle_missed == 0 && sensitive > 0,
        format!(
            "{PERMUTATION_CASES} matrices, lde changes={lde_changed}, ldlgle unchanged in {ldlgle_missed}/{sensitive} sensitive matrices ({degenerate} with equal row weights)"
        ),
    )
}

fn metric_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut self_err: f64 = 0.0;
    let (mut bound_violations, mut monotone_violations) = (0, 0);
    for _ in 0..METRIC_PAIRS {
        let n = rng.gen_range(3..40);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let slope = rng.gen_range(-2.0..2.0);
        let y: Vec<f64> = x.iter().map(|v| slope * v + rng.gen_range(-3.0..3.0) + 1.0).collect();
        let xx = PairedSample::new(x.clone(), x.clone()).unwrap();
        self_err = self_err.max((lins_ccc(&xx).unwrap() - 1.0).abs());
        let s = PairedSample::new(x.clone(), y.clone()).unwrap();
        if lins_ccc(&s).unwrap().abs() > pearson(&s).unwrap().abs() + 1e-15 {
            bound_violations += 1;
        }
        let mapped = PairedSample::new(x.iter().map(|v| v.exp()).collect(), y.iter().map(|v| v * v * v).collect()).unwrap();
        if spearman(&mapped).unwrap() != spearman(&s).unwrap() {
            monotone_violations += 1;
        }
    }
    let a: f64 = lins_ccc(&PairedSample::new(vec![1.0, 2.0, 3.0], vec![2.0, 3.0, 4.0]).unwrap()).unwrap();
    let b: f64 = lins_ccc(&PairedSample::new(vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]).unwrap()).unwrap();
    let worked = (a - 4.0 / 7.0).abs() < CCC_WORKED_TOL && (b - 4.0 / 11.0).abs() < CCC_WORKED_TOL;
    outcome(
        "metric identities",
        self_err < SELF_CCC_TOL && bound_violations == 0 && monotone_violations == 0 && worked,
        format!(
            "max|ccc(x,x)-1|={self_err:.1e}, |ccc|>|r| in {bound_violations}/{METRIC_PAIRS}, spearman changed in {monotone_violations}, 4/7->{a:.9} 4/11->{b:.9}"
        ),
    )
}

fn phantom_subjects() -> Vec<Subject> {
    generate_corpus(&PhantomConfig::bright_rim(PHANTOM_SEED))
        .unwrap()
        .into_iter()
        .map(|p| Subject {
            image_id: p.image_id,
            image: p.image,
            bbox: p.bbox,
        })
        .collect()
}

fn phantom_config() -> ExperimentConfig {
    ExperimentConfig {
        binning_specs: vec![STATIC.parse().unwrap(), DYNAMIC.parse().unwrap()],
        comparisons: vec![Comparison::OrigVsEroded],
        ..ExperimentConfig::default()
    }
}

fn central_effect_and_lde(subjects: &[Subject]) -> (Outcome, Outcome) {
    let cfg = phantom_config();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let start = Instant::now();
    let out = pool.install(|| run_experiment(subjects, &cfg)).unwrap();
    let elapsed = start.elapsed();
    let d = out.report.block(DYNAMIC, Comparison::OrigVsEroded).unwrap();
    let s = out.report.block(STATIC, Comparison::OrigVsEroded).unwrap();
    let (dl, sl) = (d.feature("ldlgle").unwrap(), s.feature("ldlgle").unwrap());
    let metrics = ["pearson", "spearman", "lins_ccc"];
    let vals: Vec<(f64, f64)> = metrics
        .iter()
        .map(|m| (sl.metric(m).unwrap_or(f64::NAN), dl.metric(m).unwrap_or(f64::NAN)))
        .collect();
    let strictly_higher = vals.iter().all(|(st, dy)| st > dy);
    let (ccc_s, ccc_d) = vals[2];
    let central = outcome(
        "central effect (ldlgle, orig_vs_eroded)",
        strictly_higher && ccc_s > STATIC_CCC_FLOOR && ccc_d < ccc_s - CCC_GAP && elapsed < CENTRAL_BUDGET,
        format!(
            "static/dynamic pearson {:.4}/{:.4} spearman {:.4}/{:.4} ccc {:.4}/{:.4}, n={}, {:.1}s single-threaded",
            vals[0].0,
            vals[0].1,
            vals[1].0,
            vals[1].1,
            ccc_s,
            ccc_d,
            sl.n_pairs,
            elapsed.as_secs_f64()
        ),
    );
    let lde_d = d.feature("lde").unwrap().lins_ccc.unwrap_or(f64::NAN);
    let lde_s = s.feature("lde").unwrap().lins_ccc.unwrap_or(f64::NAN);
    let lde_out = outcome(
        "lde robustness under both binnings",
        lde_d > LDE_CCC_FLOOR && lde_s > LDE_CCC_FLOOR,
        format!("ccc(lde) static={lde_s:.4} dynamic={lde_d:.4}"),
    );
    (central, lde_out)
}

fn level_stability(subjects: &[Subject]) -> Outcome {
    let cfg = phantom_config();
    let target = resolve_spacing(subjects, cfg.target_spacing).unwrap();
    let static_spec: BinningSpec = STATIC.parse().unwrap();
    let dynamic_spec: BinningSpec = DYNAMIC.parse().unwrap();
    let (mut static_unstable, mut dynamic_changed, mut checked) = (0, 0, 0);
    for subject in subjects {
        let prepared = prepare(subject, target, &cfg).unwrap();
        let orig = prepared.mask(MaskVariant::Original).unwrap();
        let eroded = prepared.mask(MaskVariant::Eroded).unwrap();
        let surviving = orig.intersection(eroded).unwrap();
        let changed = |spec: &BinningSpec| {
            let a = quantize(&prepared.image, orig, spec).unwrap();
            let b = quantize(&prepared.image, eroded, spec).unwrap();
            surviving
                .bits()
                .iter()
                .zip(a.levels().iter().zip(b.levels()))
                .any(|(&k, (la, lb))| k && la != lb)
        };
        checked += 1;
        static_unstable += changed(&static_spec) as usize;
        dynamic_changed += changed(&dynamic_spec) as usize;
    }
    outcome(
        "static-binning level stability",
        static_unstable == 0 && dynamic_changed > 0,
        format!("{checked} images: static changed in {static_unstable}, dynamic changed in {dynamic_changed}"),
    )
}

fn perturbation_contract() -> Outcome {
    let mut violations = Vec::new();
    let margin = 12;
    for side in 5..=50usize {
        let n = side + 2 * margin;
        let mask = Mask2D::from_fn(n, n, |x, y| (margin..margin + side).contains(&x) && (margin..margin + side).contains(&y)).unwrap();
        let area = (side * side) as f64;
        let shrunk = perturb_to_area(&mask, 0.8).unwrap().mask.area() as f64;
        let grown = perturb_to_area(&mask, 1.2).unwrap().mask.area() as f64;
        if shrunk > 0.8 * area || grown < 1.2 * area {
            violations.push(side);
        }
    }
    let exact = |side: usize, ratio: f64, expect: usize| {
        let n = side + 2 * margin;
        let mask = Mask2D::from_fn(n, n, |x, y| (margin..margin + side).contains(&x) && (margin..margin + side).contains(&y)).unwrap();
        let out = perturb_to_area(&mask, ratio).unwrap().mask;
        let square = Mask2D::from_fn(n, n, |x, y| {
            let o = margin + side / 2 - expect / 2;
            (o..o + expect).contains(&x) && (o..o + expect).contains(&y)
        })
        .unwrap();
        out == square
    };
    let exact_ok = exact(10, 0.8, 8) && exact(20, 0.8, 16) && exact(10, 1.2, 12);
    outcome(
        "perturbation contract",
        violations.is_empty() && exact_ok,
        format!("sides 5..50 violations={violations:?}, exact cases ok={exact_ok}"),
    )
}

fn run_cli(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_binrobust"))
        .args(args)
        .status()
        .map(|s| s.success())
        .unwrap_or(false)
}

fn determinism(dir: &Path) -> Outcome {
    let s = |p: &Path| p.to_str().unwrap().to_string();
    let corpus = dir.join("corpus");
    let manifest = corpus.join("manifest.csv");
    let (a, b) = (dir.join("a"), dir.join("b"));
    let ok = run_cli(&["phantom", "--n-images", "12", "--seed", "11", "--out-dir", &s(&corpus)])
        && run_cli(&["run", "--manifest", &s(&manifest), "--out-dir", &s(&a)])
        && run_cli(&["run", "--manifest", &s(&manifest), "--out-dir", &s(&b)]);
    let same = |name: &str| match (fs::read(a.join(name)), fs::read(b.join(name))) {
        (Ok(x), Ok(y)) => !x.is_empty() && x == y,
        _ => false,
    };
    let (features, report) = (ok && same("features.csv"), ok && same("report.json"));
    outcome(
        "determinism of `run`",
        ok && features && report,
        format!("commands ok={ok}, features.csv identical={features}, report.json identical={report}"),
    )
}

#[test]
fn acceptance() {
    let tmp = tempfile::tempdir().unwrap();
    let subjects = phantom_subjects();
    let (central, lde_out) = central_effect_and_lde(&subjects);
    let outcomes = vec![
        ngldm_oracle(),
        worked_example(),
        permutation_invariance(),
        metric_identities(),
        central,
        lde_out,
        level_stability(&subjects),
        perturbation_contract(),
        determinism(tmp.path()),
    ];
    for o in &outcomes {
        println!("{} {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.name, o.detail);
    }
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.pass).map(|o| o.name).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
