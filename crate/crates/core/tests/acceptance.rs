//! Acceptance suite: one PASS/FAIL line per criterion.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use rarebn::baselines::{DiscriminantKind, DiscriminantModel, Population};
use rarebn::dataset::CsvSource;
use rarebn::eval::{self, fcv, volume_ratio, ConfusionCounts};
use rarebn::inference::{posterior, CaseRecord, SkipReason};
use rarebn::infometrics::{conditional_mutual_information, mutual_information, JointCounts};
use rarebn::schema::Schema;
use rarebn::structure::{train, NetworkModel};
use rarebn::synthgen::{analytic_posterior, generate_to, GenConfig, SchemaSettings, TruthModel};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn config(value: serde_json::Value) -> GenConfig {
    serde_json::from_value(value).expect("fixture config")
}

fn generate(cfg: &GenConfig) -> (Vec<u8>, TruthModel) {
    let mut bytes = Vec::new();
    let truth = generate_to(cfg, &mut bytes).expect("generation");
    (bytes, truth)
}

/// Rows of a generated CSV as header-keyed cases.
fn cases(bytes: &[u8]) -> Vec<CaseRecord> {
    let mut rdr = csv::Reader::from_reader(bytes);
    let header = rdr.headers().unwrap().clone();
    rdr.records()
        .map(|row| {
            let row = row.unwrap();
            let mut case = CaseRecord::new();
            for (name, value) in header.iter().zip(row.iter()).skip(1) {
                case.set(name, 0, value);
            }
            case.class = Some(row[0].to_string());
            case
        })
        .collect()
}

fn categorical(name: &str, outcomes: &[&str], good: &[f64], bad: &[f64]) -> serde_json::Value {
    json!({"name": name, "kind": "categorical", "outcomes": outcomes, "given": {"good": good, "bad": bad}})
}

fn continuous(name: &str, good: (f64, f64), bad: (f64, f64)) -> serde_json::Value {
    json!({"name": name, "kind": "continuous",
           "given": {"good": {"mean": good.0, "sd": good.1}, "bad": {"mean": bad.0, "sd": bad.1}}})
}

/// Six informative fields, one of them a planted child of `a`, plus two
/// class-independent noise fields.
fn structure_fixture(n: u64, seed: u64) -> GenConfig {
    config(json!({
        "n": n, "seed": seed, "prior": 0.2,
        "variables": [
            categorical("a", &["0", "1", "2"], &[0.6, 0.3, 0.1], &[0.2, 0.3, 0.5]),
            {"name": "b", "kind": "dependent", "parent": "a", "outcomes": ["x", "y", "z"],
             "given": {"good": {"0": [0.9, 0.05, 0.05], "1": [0.05, 0.9, 0.05], "2": [0.05, 0.05, 0.9]},
                       "bad":  {"0": [0.8, 0.1, 0.1], "1": [0.1, 0.8, 0.1], "2": [0.1, 0.1, 0.8]}}},
            categorical("c", &["p", "q"], &[0.75, 0.25], &[0.35, 0.65]),
            categorical("d", &["0", "1", "2", "3"], &[0.4, 0.3, 0.2, 0.1], &[0.1, 0.2, 0.3, 0.4]),
            continuous("e", (0.0, 1.0), (1.2, 1.0)),
            continuous("f", (10.0, 2.0), (7.5, 2.0)),
            {"name": "noise_cat", "kind": "categorical_noise", "outcomes": ["u", "v", "w"], "probs": [0.3, 0.3, 0.4]},
            {"name": "noise_num", "kind": "continuous_noise", "mean": 0.0, "sd": 1.0}
        ],
        "schema": {"t_prime": 0.95}
    }))
}

fn four_pass_guarantee() -> Outcome {
    let cfg = structure_fixture(50_000, 1);
    let (bytes, truth) = generate(&cfg);
    let schema = truth.schema(&cfg.schema);
    let source = CsvSource::from_bytes(bytes);
    let start = Instant::now();
    let model = train(&schema, &source).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(source.passes() == 4, || format!("source saw {} passes", source.passes()))?;
    ensure(model.training.passes == 4, || format!("model records {} passes", model.training.passes))?;
    for window in [2, 3] {
        let mut s = schema.clone();
        s.window = window;
        let src = CsvSource::from_bytes(generate(&structure_fixture(2_000, 2)).0);
        train(&s, &src).map_err(|e| e.to_string())?;
        ensure(src.passes() == 4, || format!("window {window}: {} passes", src.passes()))?;
    }
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!("passes=4, 50k rows trained in {elapsed:.2?}"))
}

fn brute_mi(p: &[Vec<f64>]) -> f64 {
    let px: Vec<f64> = p.iter().map(|r| r.iter().sum()).collect();
    let py: Vec<f64> = (0..p[0].len()).map(|j| p.iter().map(|r| r[j]).sum()).collect();
    let mut mi = 0.0;
    for (i, row) in p.iter().enumerate() {
        for (j, &pxy) in row.iter().enumerate() {
            if pxy > 0.0 {
                mi += pxy * (pxy / (px[i] * py[j])).log2();
            }
        }
    }
    mi
}

fn brute_cmi(p: &[Vec<Vec<f64>>]) -> f64 {
    let (nz, nx, ny) = (p.len(), p[0].len(), p[0][0].len());
    let mut cmi = 0.0;
    for z in 0..nz {
        let pz: f64 = p[z].iter().flatten().sum();
        for x in 0..nx {
            let pxz: f64 = p[z][x].iter().sum();
            for y in 0..ny {
                let pyz: f64 = (0..nx).map(|i| p[z][i][y]).sum();
                let pxyz = p[z][x][y];
                if pxyz > 0.0 {
                    cmi += pxyz * (pz * pxyz / (pxz * pyz)).log2();
                }
            }
        }
    }
    cmi
}

fn information_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let dims = [rng.random_range(1..=4usize), rng.random_range(1..=4usize), rng.random_range(1..=4usize)];
        let mut counts: Vec<u64> = (0..dims.iter().product::<usize>())
            .map(|_| if rng.random_bool(0.2) { 0 } else { rng.random_range(1..1000) })
            .collect();
        if counts.iter().all(|&c| c == 0) {
            counts[0] = 1;
        }
        let t = counts.iter().sum::<u64>() as f64;
        let p3: Vec<Vec<Vec<f64>>> = (0..dims[0])
            .map(|z| {
                (0..dims[1])
                    .map(|x| (0..dims[2]).map(|y| counts[(z * dims[1] + x) * dims[2] + y] as f64 / t).collect())
                    .collect()
            })
            .collect();
        let cmi = conditional_mutual_information(&JointCounts::from_counts(&dims, counts.clone()))
            .map_err(|e| e.to_string())?;
        worst = worst.max((cmi - brute_cmi(&p3)).abs());

        let d2 = [dims[0], dims[1] * dims[2]];
        let p2: Vec<Vec<f64>> =
            (0..d2[0]).map(|i| (0..d2[1]).map(|j| counts[i * d2[1] + j] as f64 / t).collect()).collect();
        let mi = mutual_information(&JointCounts::from_counts(&d2, counts)).map_err(|e| e.to_string())?;
        worst = worst.max((mi - brute_mi(&p2)).abs());
    }
    let elapsed = start.elapsed();
    ensure(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!("200 joints, max deviation {worst:.1e}"))
}

fn rate_arithmetic() -> Outcome {
    let c =
        fcv(ConfusionCounts { tp: 134_131, fn_: 635_611 - 134_131, fp: 1, tn: 1 }, None).map_err(|e| e.to_string())?;
    ensure(c.c_text() == "21.10", || format!("C = {}", c.c_text()))?;
    let v1 = volume_ratio(309_784, 202_500);
    ensure(v1 == "1.5:1", || format!("V = {v1}"))?;
    let v2 = volume_ratio(134_305, 134_131);
    ensure(v2 == "1.0:1", || format!("V = {v2}"))?;
    Ok(format!("C={}%, V={v1}, V={v2}", c.c_text()))
}

fn spd(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(d, d) * 0.5
}

fn discriminant_identity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let mut compared = 0;
    for _ in 0..100 {
        let d = rng.random_range(1..=5usize);
        let s = spd(&mut rng, d);
        let m1 = DVector::from_fn(d, |_, _| rng.random_range(-3.0..3.0));
        let m2 = DVector::from_fn(d, |_, _| rng.random_range(-3.0..3.0));
        let (n1, n2) = (rng.random_range(2..1000usize), rng.random_range(2..1000usize));
        let lin = DiscriminantModel::from_parameters(
            DiscriminantKind::Linear,
            m1.clone(),
            m2.clone(),
            s.clone(),
            s.clone(),
            n1,
            n2,
        )
        .map_err(|e| e.to_string())?;
        let quad = DiscriminantModel::from_parameters(DiscriminantKind::Quadratic, m1, m2, s.clone(), s, n1, n2)
            .map_err(|e| e.to_string())?;
        for _ in 0..20 {
            let y: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..5.0)).collect();
            let l = lin.lda_score(&y).map_err(|e| e.to_string())?;
            let q = quad.qda_score(&y).map_err(|e| e.to_string())?;
            worst = worst.max((q - 2.0 * l).abs());
            if (l - lin.cutoff).abs() > 1e-6 {
                let (a, b) = (lin.classify(&y).unwrap(), quad.classify(&y).unwrap());
                ensure(a == b, || format!("labels differ at {y:?}: {a:?} vs {b:?}"))?;
                compared += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(worst <= 1e-9, || format!("max |Q - 2L| = {worst:e}"))?;
    let boundary = DiscriminantModel::from_parameters(
        DiscriminantKind::Linear,
        DVector::from_element(1, 2.0),
        DVector::from_element(1, 0.0),
        DMatrix::from_element(1, 1, 1.0),
        DMatrix::from_element(1, 1, 1.0),
        10,
        10,
    )
    .unwrap();
    ensure(boundary.classify(&[1.0]).unwrap() == Population::First, || "midpoint not in population 1".into())?;
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!("100 fixtures, max |Q - 2L| = {worst:.1e}, {compared} labels agree"))
}

fn posterior_oracle() -> Outcome {
    let start = Instant::now();
    let settings = SchemaSettings { t_prime: Some(1.0), max_parents: Some(0), max_bins: Some(8), ..Default::default() };
    let variables = json!([
        categorical("a", &["0", "1", "2"], &[0.5, 0.3, 0.2], &[0.2, 0.3, 0.5]),
        categorical("b", &["p", "q"], &[0.7, 0.3], &[0.4, 0.6]),
        categorical("c", &["0", "1", "2", "3"], &[0.25, 0.25, 0.25, 0.25], &[0.1, 0.2, 0.3, 0.4]),
        continuous("d", (0.0, 1.0), (0.8, 1.0)),
        continuous("e", (5.0, 2.0), (4.0, 1.5))
    ]);
    let train_cfg =
        config(json!({"n": 100_000, "seed": 5, "prior": 0.1, "variables": variables.clone(), "schema": settings}));
    let test_cfg = config(json!({"n": 5_000, "seed": 55, "prior": 0.1, "variables": variables}));
    let (bytes, truth) = generate(&train_cfg);
    let schema = truth.schema(&train_cfg.schema);
    let model = train(&schema, &CsvSource::from_bytes(bytes)).map_err(|e| e.to_string())?;
    ensure(model.dependencies.is_empty(), || "u = 0 model has dependencies".into())?;
    let held_out = cases(&generate(&test_cfg).0);
    let mut abs = 0.0;
    for case in &held_out {
        let learned = posterior(&model, case).map_err(|e| e.to_string())?;
        let exact = analytic_posterior(&truth, case).map_err(|e| e.to_string())?;
        abs += (learned.probabilities[model.class_index("bad").unwrap()] - exact[1]).abs();
    }
    let mae = abs / held_out.len() as f64;
    ensure(mae < 0.02, || format!("mean absolute error {mae:.4}"))?;

    // Naive-Bayes check on categorical fields from raw counts.
    let nb_cfg = config(json!({
        "n": 20_000, "seed": 6, "prior": 0.3,
        "variables": [
            categorical("a", &["0", "1", "2"], &[0.5, 0.3, 0.2], &[0.2, 0.3, 0.5]),
            categorical("b", &["p", "q"], &[0.7, 0.3], &[0.4, 0.6]),
            categorical("c", &["0", "1", "2", "3"], &[0.25, 0.25, 0.25, 0.25], &[0.1, 0.2, 0.3, 0.4])
        ],
        "schema": {"t_prime": 1.0, "max_parents": 0}
    }));
    let (bytes, truth) = generate(&nb_cfg);
    let schema = truth.schema(&nb_cfg.schema);
    let records = cases(&bytes);
    let model = train(&schema, &CsvSource::from_bytes(bytes)).map_err(|e| e.to_string())?;
    ensure(model.nodes.len() == 3, || format!("{} nodes selected", model.nodes.len()))?;
    let mut class_counts: HashMap<String, f64> = HashMap::new();
    let mut cell: HashMap<(String, String, String), f64> = HashMap::new();
    for r in &records {
        let c = r.class.clone().unwrap();
        *class_counts.entry(c.clone()).or_default() += 1.0;
        for ((var, _), v) in &r.values {
            *cell.entry((c.clone(), var.clone(), v.clone())).or_default() += 1.0;
        }
    }
    ensure(cell.len() == 2 * (3 + 2 + 4), || "fixture has zero cells".into())?;
    let n = records.len() as f64;
    let mut worst = 0.0f64;
    for r in records.iter().take(2_000) {
        let joint: Vec<f64> = model
            .classes()
            .iter()
            .map(|c| {
                let nc = class_counts[c];
                r.values.iter().fold(nc / n, |acc, ((var, _), v)| acc * cell[&(c.clone(), var.clone(), v.clone())] / nc)
            })
            .collect();
        let z: f64 = joint.iter().sum();
        let post = posterior(&model, r).map_err(|e| e.to_string())?;
        for (p, j) in post.probabilities.iter().zip(&joint) {
            worst = worst.max((p - j / z).abs());
        }
    }
    let elapsed = start.elapsed();
    ensure(worst <= 1e-12, || format!("naive-Bayes deviation {worst:e}"))?;
    within(elapsed, Duration::from_secs(30))?;
    Ok(format!("MAE {mae:.4} over {} held-out cases, naive-Bayes deviation {worst:.1e}", held_out.len()))
}

fn structure_recovery() -> Outcome {
    let start = Instant::now();
    let cfg = structure_fixture(50_000, 7);
    let (bytes, truth) = generate(&cfg);
    let schema: Schema = truth.schema(&cfg.schema);
    let model = train(&schema, &CsvSource::from_bytes(bytes)).map_err(|e| e.to_string())?;
    let mut selected: Vec<&str> = model.nodes.iter().map(|n| n.name.as_str()).collect();
    selected.sort();
    ensure(selected == ["a", "b", "c", "d", "e", "f"], || format!("selected {selected:?}"))?;
    let top = model.pair_scores.first().ok_or("no candidate pairs")?;
    let mut pair = [top.first.as_str(), top.second.as_str()];
    pair.sort();
    ensure(pair == ["a", "b"], || format!("top CMI pair {pair:?}"))?;
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(30))?;
    Ok(format!("selected {selected:?}, top pair a-b with CMI {:.4} bits", top.cmi))
}

fn pruning_property() -> Outcome {
    let start = Instant::now();
    // `flag=1` only ever occurs with bad, `mark=z` only with good.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut text = String::from("class,level,flag,mark\n");
    for _ in 0..2_000 {
        let bad = rng.random_bool(0.15);
        let level = if rng.random_bool(if bad { 0.7 } else { 0.3 }) { "hi" } else { "lo" };
        let flag = if bad && rng.random_bool(0.3) { "1" } else { "0" };
        let mark = if !bad && rng.random_bool(0.2) {
            "z"
        } else if rng.random_bool(0.5) {
            "x"
        } else {
            "y"
        };
        text.push_str(&format!("{},{level},{flag},{mark}\n", if bad { "bad" } else { "good" }));
    }
    let mut pruned = 0;
    for max_parents in [0, 1] {
        let schema = rarebn::schema::parse_schema(&format!(
            "class class\nvar level categorical\nvar flag categorical\nvar mark categorical\nt_prime 1\nt_field 1\nmax_parents {max_parents}\nsmoothing 0\n"
        ))
        .map_err(|e| e.to_string())?;
        let model = train(&schema, &CsvSource::from_bytes(text.clone())).map_err(|e| e.to_string())?;
        for r in cases(text.as_bytes()) {
            let post = posterior(&model, &r).map_err(|e| e.to_string())?;
            ensure(post.probabilities.iter().all(|&p| p > 0.0 && p < 1.0), || {
                format!("degenerate posterior {:?}", post.probabilities)
            })?;
            let logged = |node: &str| post.skipped.iter().any(|s| s.node == node && s.reason == SkipReason::Pruned);
            if max_parents == 0 {
                // Independent nodes: a zero-count cell is exactly what triggers pruning.
                let expect_flag = r.get("flag", 0) == Some("1");
                let expect_mark = r.get("mark", 0) == Some("z");
                ensure(logged("flag") == expect_flag && logged("mark") == expect_mark, || {
                    format!("pruning log {:?}", post.skipped)
                })?;
            }
            pruned += post.skipped.iter().filter(|s| s.reason == SkipReason::Pruned).count();
        }
    }
    ensure(pruned > 0, || "fixture produced no pruned nodes".into())?;
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!("{pruned} pruned nodes logged, all posteriors inside (0,1)"))
}

fn sweep_monotonicity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (scores, actual): (Vec<f64>, Vec<bool>) = (0..10_000)
        .map(|_| {
            let pos = rng.random_bool(0.1);
            let s: f64 = rng.random::<f64>();
            (if pos { s.sqrt() } else { s * s }, pos)
        })
        .unzip();
    let rows = eval::sweep(&scores, &actual, &eval::default_grid()).map_err(|e| e.to_string())?;
    ensure(rows.len() == 17, || format!("{} rows", rows.len()))?;
    for w in rows.windows(2) {
        let (a, b) = (&w[0].counts, &w[1].counts);
        ensure(b.fp <= a.fp && b.tp <= a.tp, || format!("not monotone at {:?}", w[1].threshold))?;
    }
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("TP {}→{}, FP {}→{}", rows[0].counts.tp, rows[16].counts.tp, rows[0].counts.fp, rows[16].counts.fp))
}

fn prior_fallback() -> Outcome {
    let start = Instant::now();
    let cfg = structure_fixture(5_000, 10);
    let (bytes, truth) = generate(&cfg);
    let records = cases(&bytes);
    let model = train(&truth.schema(&cfg.schema), &CsvSource::from_bytes(bytes)).map_err(|e| e.to_string())?;
    let mut case = CaseRecord::new();
    for v in &truth.variables {
        case.set(&v.name, 0, "?");
    }
    let post = posterior(&model, &case).map_err(|e| e.to_string())?;
    let n = records.len() as f64;
    let freq: Vec<f64> = model
        .classes()
        .iter()
        .map(|c| records.iter().filter(|r| r.class.as_deref() == Some(c.as_str())).count() as f64 / n)
        .collect();
    ensure(post.probabilities == freq, || format!("{:?} vs {freq:?}", post.probabilities))?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("posterior {:?} equals class frequencies", post.probabilities))
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let code = rarebn::cli::run(std::iter::once("rarebn").chain(args.iter().copied()));
    ensure(code == 0, || format!("`{}` exited with {code}", args.join(" ")))
}

fn determinism() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg_path = dir.path().join("config.json");
    fs::write(&cfg_path, serde_json::to_string(&structure_fixture(20_000, 11)).unwrap()).map_err(|e| e.to_string())?;
    let p = |name: &str| dir.path().join(name).display().to_string();
    let cfg = cfg_path.display().to_string();
    for run in ["one", "two"] {
        run_cli(&["gen", "--config", &cfg, "--out", &p(run)])?;
        let schema = format!("{}/schema.txt", p(run));
        let data = format!("{}/data.csv", p(run));
        run_cli(&["train", "--schema", &schema, "--data", &data, "--out", &p(&format!("{run}.model.json"))])?;
    }
    for file in ["one/data.csv", "one/truth.json", "one/schema.txt", "one.model.json"] {
        let other = file.replace("one", "two");
        let same = fs::read(dir.path().join(file)).unwrap() == fs::read(dir.path().join(&other)).unwrap();
        ensure(same, || format!("{file} and {other} differ"))?;
    }
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok("gen and train outputs byte-identical across runs".into())
}

fn throughput_config() -> GenConfig {
    let mut variables = Vec::new();
    for i in 0..8 {
        let shift = 0.05 * (i as f64 + 1.0);
        variables.push(categorical(
            &format!("cat{i}"),
            &["a", "b", "c", "d"],
            &[0.4, 0.3, 0.2, 0.1],
            &[0.4 - shift, 0.3, 0.2, 0.1 + shift],
        ));
    }
    for i in 0..2 {
        variables.push(json!({"name": format!("dep{i}"), "kind": "dependent", "parent": format!("cat{i}"),
            "outcomes": ["x", "y"],
            "given": {"good": {"a": [0.8, 0.2], "b": [0.6, 0.4], "c": [0.4, 0.6], "d": [0.2, 0.8]},
                      "bad":  {"a": [0.6, 0.4], "b": [0.4, 0.6], "c": [0.2, 0.8], "d": [0.1, 0.9]}},
            "missing_rate": 0.05}));
    }
    for i in 0..6 {
        variables.push(continuous(&format!("num{i}"), (0.0, 1.0), (0.3 + 0.1 * i as f64, 1.0)));
    }
    for i in 0..2 {
        variables.push(json!({"name": format!("noise{i}"), "kind": "categorical_noise",
            "outcomes": ["u", "v", "w"], "probs": [0.2, 0.3, 0.5]}));
    }
    for i in 0..2 {
        variables.push(json!({"name": format!("hum{i}"), "kind": "continuous_noise", "mean": 1.0, "sd": 3.0}));
    }
    config(json!({"n": 1_000_000, "seed": 12, "prior": 0.1, "variables": variables}))
}

fn throughput() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = throughput_config();
    let cfg_path = dir.path().join("config.json");
    fs::write(&cfg_path, serde_json::to_string(&cfg).unwrap()).map_err(|e| e.to_string())?;
    let s = |p: &Path| p.display().to_string();
    let out = dir.path().join("data");
    run_cli(&["gen", "--config", &s(&cfg_path), "--out", &s(&out)])?;
    let model = dir.path().join("model.json");
    let start = Instant::now();
    run_cli(&[
        "train",
        "--schema",
        &s(&out.join("schema.txt")),
        "--data",
        &s(&out.join("data.csv")),
        "--out",
        &s(&model),
    ])?;
    let trained = start.elapsed();
    let pred = dir.path().join("pred.csv");
    run_cli(&[
        "classify",
        "--model",
        &s(&model),
        "--data",
        &s(&out.join("data.csv")),
        "--threshold",
        "0.5",
        "--out",
        &s(&pred),
    ])?;
    let elapsed = start.elapsed();
    let m = NetworkModel::load(&model).map_err(|e| e.to_string())?;
    ensure(m.training.rows == 1_000_000 && m.training.passes == 4, || format!("training stats {:?}", m.training))?;
    within(elapsed, Duration::from_secs(300))?;
    Ok(format!("1M rows x 20 vars: train {trained:.1?}, train + classify {elapsed:.1?}"))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("four-pass guarantee", four_pass_guarantee),
        ("MI/CMI oracle equivalence", information_oracle),
        ("rate and ratio arithmetic", rate_arithmetic),
        ("QDA/LDA identity", discriminant_identity),
        ("posterior oracle", posterior_oracle),
        ("structure recovery", structure_recovery),
        ("pruning property", pruning_property),
        ("sweep monotonicity", sweep_monotonicity),
        ("prior fallback", prior_fallback),
        ("determinism", determinism),
        ("desk-scale throughput", throughput),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match std::panic::catch_unwind(check) {
            Ok(Ok(detail)) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Ok(Err(why)) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
            Err(_) => {
                failed += 1;
                println!("FAIL {:>2} {name}: panicked", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
