//! Acceptance suite. Runs every criterion in order, prints one PASS/FAIL line
//! per criterion with the measured values, and exits non-zero if any fails.
//! Experiment criteria drive the `rafic` binary exactly as a user would.

use std::collections::BTreeMap;
use std::f64::consts::{LN_10, LN_2};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rafic::core::learners::*;
use rafic::core::*;
use rafic::results::{read_csv, ResultRow, WALL_TIME_COLUMN};

type Check = Result<(bool, String), String>;

struct Workspace {
    _tmp: tempfile::TempDir,
    root: PathBuf,
}

impl Workspace {
    fn path(&self, name: &str) -> String {
        self.root.join(name).to_string_lossy().into_owned()
    }
}

fn cli(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_rafic"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "rafic {} exited with {}: {}",
            args.first().unwrap_or(&""),
            out.status,
            String::from_utf8_lossy(&out.stderr).trim()
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn recall(ws: &Workspace, reference: &str, candidate: &str, nprobe: Option<usize>) -> Result<f64, String> {
    let (eval, text) = (ws.path("a/eval.rafc"), ws.path("a/text.rafc"));
    let n = nprobe.map(|n| n.to_string());
    let mut args = vec![
        "eval-recall",
        "--index",
        reference,
        "--candidate",
        candidate,
        "--corpus",
        &eval,
        "--text-embeddings",
        &text,
        "--num-queries",
        "200",
        "--top",
        "20",
    ];
    if let Some(n) = &n {
        args.extend(["--nprobe", n]);
    }
    let out = cli(&args)?;
    out.split('\t')
        .nth(1)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| format!("unexpected eval-recall output {out:?}"))
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_std(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Mean test accuracy over seeds, keyed by (train, eval, method, A, setting).
fn seed_means(rows: &[ResultRow]) -> BTreeMap<(String, String, Method, usize, MetaRetrieval), f64> {
    let mut groups: BTreeMap<_, Vec<f64>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.dataset_train.clone(), r.dataset_eval.clone(), r.method, r.a, r.meta_retrieval))
            .or_default()
            .push(r.test_accuracy);
    }
    groups.into_iter().map(|(k, v)| (k, mean(&v))).collect()
}

fn load(path: &str) -> Result<Vec<ResultRow>, String> {
    read_csv(Path::new(path)).map_err(|e| e.to_string())
}

// 1. Exact search against an independent scan.

fn oracle_scan(rows: &[Vec<f32>], query: &[f64], a: usize) -> Vec<(String, f64)> {
    let norm = query.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut scored: Vec<(String, f64)> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let s = r.iter().zip(query).map(|(&x, q)| f64::from(x) * q / norm).sum();
            (format!("row{i:04}"), s)
        })
        .collect();
    scored.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then_with(|| x.0.cmp(&y.0)));
    scored.truncate(a);
    scored
}

fn criterion_1() -> Check {
    let data = generate_synthetic(&SyntheticSpec {
        n_classes: 10,
        per_class: 10,
        corpus_per_class: 70,
        distractor_fraction: 0.3,
        seed: 101,
        ..SyntheticSpec::default()
    })
    .map_err(|e| e.to_string())?;
    let mut vectors = Vec::new();
    let mut meta = Vec::new();
    let mut rows = Vec::new();
    for (i, (_, v)) in data.retrieval.rows().take(1000).enumerate() {
        vectors.extend_from_slice(v);
        meta.push(RowMeta::new(format!("row{i:04}"), "x", Split::Train));
        rows.push(v.to_vec());
    }
    if rows.len() != 1000 {
        return Err(format!("fixture has {} rows", rows.len()));
    }
    let corpus = EmbeddingCorpus::new(64, vectors, meta).map_err(|e| e.to_string())?;
    let index = VectorIndex::build(corpus, IndexKind::Exact).map_err(|e| e.to_string())?;
    let queries: Vec<Vec<f64>> = data.eval.rows().take(50).map(|(_, v)| v.iter().map(|&x| f64::from(x) * 3.0).collect()).collect();
    let (mut order_mismatch, mut worst) = (0, 0.0f64);
    for q in &queries {
        for a in [1, 5, 20] {
            let hits = index.search(q, a).map_err(|e| e.to_string())?;
            let want = oracle_scan(&rows, q, a);
            if hits.len() != want.len() || hits.iter().zip(&want).any(|(h, w)| h.id != w.0) {
                order_mismatch += 1;
            }
            for (h, w) in hits.iter().zip(&want) {
                worst = worst.max((h.score - w.1).abs());
            }
        }
    }
    Ok((
        order_mismatch == 0 && worst <= 1e-6,
        format!("150 result lists, {order_mismatch} id/order mismatches, max score gap {worst:.1e}"),
    ))
}

// 2. IVF recall.

fn criterion_2(ws: &Workspace) -> Check {
    let retrieval = ws.path("a/retrieval.rafc");
    cli(&["build-index", "--retrieval-corpus", &retrieval, "--out", &ws.path("a/ivf.json"), "--mode", "ivf", "--nlist", "64", "--nprobe", "8"])?;
    cli(&["build-index", "--retrieval-corpus", &retrieval, "--out", &ws.path("a/exact.json"), "--mode", "exact"])?;
    let mut curve = Vec::new();
    for nprobe in [1, 2, 4, 8] {
        curve.push(recall(ws, &ws.path("a/exact.json"), &ws.path("a/ivf.json"), Some(nprobe))?);
    }
    let monotone = curve.windows(2).all(|w| w[1] >= w[0]);
    Ok((
        curve[3] >= 0.9 && monotone,
        format!("recall@20 at nprobe 1/2/4/8 = {curve:.4?}, monotone {monotone}"),
    ))
}

// 3. Compact index.

fn criterion_3(ws: &Workspace) -> Check {
    let out = ws.path("a/compact.json");
    cli(&[
        "build-compact-index",
        "--index",
        &ws.path("a/ivf.json"),
        "--corpus",
        &ws.path("a/eval.rafc"),
        "--text-embeddings",
        &ws.path("a/text.rafc"),
        "--out",
        &out,
        "--per-image-k",
        "20",
        "--per-class-k",
        "100",
    ])?;
    let r = recall(ws, &ws.path("a/ivf.json"), &out, None)?;
    let rows = rafic::index_file::load_index(Path::new(&out)).map_err(|e| e.to_string())?.len();
    Ok((r >= 0.95, format!("recall@20 vs full index = {r:.4} over 200 queries; {rows} rows kept")))
}

// 4. Finite differences.

const EPS: f64 = 1e-3;

/// Independent forward pass returning the weighted mean CE and the sign
/// pattern of every hidden pre-activation.
fn oracle_loss(p: &MlpParams, rows: &[Vec<f64>], labels: &[usize], w: &[f64]) -> (f64, Vec<bool>) {
    let mut num = 0.0;
    let mut signs = Vec::new();
    for (r, x) in rows.iter().enumerate() {
        let mut h = x.clone();
        for (li, l) in p.layers.iter().enumerate() {
            let mut z: Vec<f64> = (0..l.outputs)
                .map(|o| l.bias[o] + (0..l.inputs).map(|i| l.weights[o * l.inputs + i] * h[i]).sum::<f64>())
                .collect();
            if li + 1 < p.layers.len() {
                signs.extend(z.iter().map(|&v| v > 0.0));
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            h = z;
        }
        let m = h.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + h.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        num += w[r] * (lse - h[labels[r]]);
    }
    (num / w.iter().sum::<f64>(), signs)
}

fn hidden_margin(p: &MlpParams, x: &[f64]) -> f64 {
    let mut h = x.to_vec();
    let mut margin = f64::INFINITY;
    for l in &p.layers[..p.layers.len() - 1] {
        h = (0..l.outputs)
            .map(|o| {
                let z = l.bias[o] + (0..l.inputs).map(|i| l.weights[o * l.inputs + i] * h[i]).sum::<f64>();
                margin = margin.min(z.abs());
                z.max(0.0)
            })
            .collect();
    }
    margin
}

/// Relative error with the denominator floored at 1e-3 of the largest entry,
/// where central-difference truncation is as large as the entry itself.
fn worst_rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    let scale = analytic.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-3 * scale))
        .fold(0.0, f64::max)
}

fn criterion_4() -> Check {
    let data = generate_synthetic(&SyntheticSpec {
        corpus_per_class: 30,
        ..SyntheticSpec::default()
    })
    .map_err(|e| e.to_string())?;
    let index = VectorIndex::build(data.retrieval.clone(), IndexKind::Exact).map_err(|e| e.to_string())?;
    let sampler = EpisodeSampler::new(&data.eval, &data.text, Split::Train);
    let cfg = EpisodeConfig {
        a_augment: 2,
        ..EpisodeConfig::default()
    };
    let features = |i: u64| -> Result<(FeatureMatrix, FeatureMatrix), String> {
        let aug = augment(sampler.sample(&cfg, i).map_err(|e| e.to_string())?, &index, &cfg).map_err(|e| e.to_string())?;
        build_features(&aug, true).map_err(|e| e.to_string())
    };

    // MAML network [65, 128, 32, 10] on real support rows with the
    // similarity channel and similarity-weighted retrieved terms.
    let dims = MamlConfig::default().dims(65, 10);
    let params = MlpParams::init_orthogonal(&dims, 3, false);
    let (mut rows, mut labels, mut weights) = (Vec::new(), Vec::new(), Vec::new());
    let mut episode = 0;
    while rows.len() < 12 {
        let (s, _) = features(episode)?;
        episode += 1;
        for i in 0..s.rows() {
            if rows.len() < 12 && hidden_margin(&params, s.row(i)) > 5.0 * EPS {
                rows.push(s.row(i).to_vec());
                labels.push(s.labels[i]);
                weights.push(s.weights[i]);
            }
        }
    }
    let retrieved = weights.iter().filter(|&&w| w < 1.0).count();
    let flat_x: Vec<f64> = rows.concat();
    let (loss, grad) = mlp_backward(&params, &flat_x, &labels, &weights).map_err(|e| e.to_string())?;
    let (oracle, signs) = oracle_loss(&params, &rows, &labels, &weights);
    if (loss - oracle).abs() > 1e-12 {
        return Err(format!("loss {loss} disagrees with oracle {oracle}"));
    }
    let flat = params.to_flat();
    let mut numeric = Vec::with_capacity(flat.len());
    let mut kinks = 0;
    for i in 0..flat.len() {
        let mut probe = |delta: f64| {
            let mut f = flat.clone();
            f[i] += delta;
            let (l, s) = oracle_loss(&MlpParams::from_flat(&dims, &f).unwrap(), &rows, &labels, &weights);
            kinks += usize::from(s != signs);
            l
        };
        numeric.push((probe(EPS) - probe(-EPS)) / (2.0 * EPS));
    }
    let maml_err = worst_rel_err(&grad.to_flat(), &numeric);

    // ProtoNet head [65, 64] on a full augmented episode.
    let proto = ProtoConfig::default();
    let pdims = proto.dims(65);
    let head = MlpParams::init_orthogonal(&pdims, 5, false);
    let (s, q) = features(100)?;
    let out = protonet_episode(&head, &s, &q, &proto, true).map_err(|e| e.to_string())?;
    let pflat = head.to_flat();
    let pnumeric: Vec<f64> = (0..pflat.len())
        .map(|i| {
            let at = |delta: f64| {
                let mut f = pflat.clone();
                f[i] += delta;
                protonet_episode(&MlpParams::from_flat(&pdims, &f).unwrap(), &s, &q, &proto, false).unwrap().loss
            };
            (at(EPS) - at(-EPS)) / (2.0 * EPS)
        })
        .collect();
    let proto_err = worst_rel_err(&out.grad.unwrap().to_flat(), &pnumeric);

    Ok((
        maml_err < 1e-4 && proto_err < 1e-4 && kinks == 0,
        format!(
            "MAML {dims:?}: {} coords, worst rel err {maml_err:.1e} ({retrieved} weighted retrieved rows, {kinks} kink crossings); ProtoNet {pdims:?}: {} coords, worst {proto_err:.1e}",
            flat.len(),
            pflat.len()
        ),
    ))
}

// 5. Closed forms.

fn criterion_5() -> Check {
    let mut notes = Vec::new();
    let ce = |n: usize| cross_entropy(&vec![0.0; n], n, &[n - 1], &[1.0]).map(|g| g.loss);
    let ce_ok = ce(2).map_err(|e| e.to_string())? == LN_2 && ce(10).map_err(|e| e.to_string())? == LN_10;
    notes.push(format!("CE(uniform) = ln N exactly: {ce_ok}"));

    let logits = [0.3, -1.2, 2.0, 0.5, 0.1, -0.4];
    let g = cross_entropy(&logits, 3, &[2, 0], &[0.0, 1.0]).map_err(|e| e.to_string())?;
    let zero_ok = g.d_logits[..3].iter().all(|&v| v == 0.0);
    notes.push(format!("zero-weight row gradient is zero: {zero_ok}"));

    let params = MlpParams::init_orthogonal(&[3, 4, 2], 1, false);
    let mut s = FeatureMatrix::new(3, 2);
    s.push([1.0, 0.0, 0.5], 0, 1.0, Origin::Support);
    s.push([0.0, 1.0, 0.2], 1, 0.4, Origin::Retrieved);
    let cfg = MamlConfig {
        inner_steps: 0,
        ..MamlConfig::default()
    };
    let rates = InnerRates { support: 0.5, retrieval: 0.5 };
    let id_ok = maml_inner_adapt(&params, &s, rates, &cfg).map_err(|e| e.to_string())?.params == params;
    notes.push(format!("inner_steps = 0 is the identity: {id_ok}"));

    let mut support = FeatureMatrix::new(2, 2);
    support.push([0.0, 0.0], 0, 1.0, Origin::Support);
    support.push([2.0, 2.0], 0, 1.0, Origin::Support);
    support.push([5.0, -1.0], 1, 1.0, Origin::Support);
    let mut query = FeatureMatrix::new(2, 2);
    query.push([1.0, 1.0], 0, 1.0, Origin::Query);
    let identity = MlpParams {
        layers: vec![Dense::identity(2)],
    };
    let out = protonet_episode(&identity, &support, &query, &ProtoConfig::default(), false).map_err(|e| e.to_string())?;
    let proto_ok = out.prototypes[0] == [1.0, 1.0];
    notes.push(format!("prototype of (0,0),(2,2) = {:?}", out.prototypes[0]));

    Ok((ce_ok && zero_ok && id_ok && proto_ok, notes.join("; ")))
}

// 6. Zero-noise sanity.

fn criterion_6() -> Check {
    let data = generate_synthetic(&SyntheticSpec {
        intra_class_noise: 0.0,
        text_noise: 0.0,
        ..SyntheticSpec::default()
    })
    .map_err(|e| e.to_string())?;
    let index = VectorIndex::build(data.retrieval.clone(), IndexKind::Exact).map_err(|e| e.to_string())?;
    let task = TaskData {
        corpus: &data.eval,
        text: &data.text,
        index: &index,
    };
    let mut cfg = RunConfig::default();
    cfg.options.test_episodes = 100;
    let mut all = true;
    let mut notes = Vec::new();
    for method in [Method::ZeroShot, Method::Lr, Method::ProtoNet] {
        let acc = run_seed(method, &task, &task, &cfg, 0).map_err(|e| e.to_string())?.test_accuracy;
        all &= acc == 1.0;
        notes.push(format!("{method} {acc:.4}"));
    }
    Ok((all, format!("{} over 100 episodes", notes.join(", "))))
}

// 7, 8, 9, 11. Experiments through the command line.

fn sweep(ws: &Workspace, out: &str, extra: &[&str]) -> Result<Vec<ResultRow>, String> {
    let (eval, text, index) = (ws.path("a/eval.rafc"), ws.path("a/text.rafc"), ws.path("a/ivf.json"));
    let mut args = vec![
        "run", "sweep", "--corpus", &eval, "--text-embeddings", &text, "--index", &index, "--name", "syn-a",
        "--seeds", "0,1,2,3,4", "--out", out,
    ];
    args.extend(extra);
    cli(&args)?;
    load(out)
}

fn criterion_7(ws: &Workspace) -> Check {
    let rows = sweep(
        ws,
        &ws.path("c7.csv"),
        &["--method", "lr", "--method", "maml", "--method", "protonet", "--augment", "0", "--augment", "5"],
    )?;
    let m = seed_means(&rows);
    let get = |method, a| m.get(&("syn-a".into(), "syn-a".into(), method, a, MetaRetrieval::None)).copied();
    let lr0 = get(Method::Lr, 0).ok_or("no LR A=0 rows")?;
    let mut pass = true;
    let mut notes = vec![format!("LR A=0 {lr0:.4}")];
    for method in [Method::Maml, Method::ProtoNet] {
        let (a0, a5) = (get(method, 0).ok_or("missing rows")?, get(method, 5).ok_or("missing rows")?);
        let trend = a5 >= a0 + 0.02;
        let beats = a0 > lr0 && a5 > lr0;
        pass &= trend && beats;
        notes.push(format!(
            "{method} A=0 {a0:.4} A=5 {a5:.4} (trend {}, beats LR {})",
            if trend { "ok" } else { "NO" },
            if beats { "ok" } else { "NO" }
        ));
    }
    Ok((pass, notes.join("; ")))
}

fn criterion_8(ws: &Workspace) -> Check {
    let base = ["--method", "protonet", "--augment", "1", "--augment", "2", "--augment", "5"];
    let mut none_args = base.to_vec();
    none_args.extend(["--meta-retrieval", "none"]);
    let mut both_args = base.to_vec();
    both_args.extend(["--meta-retrieval", "both"]);
    let none = seed_means(&sweep(ws, &ws.path("c8-none.csv"), &none_args)?);
    let both = seed_means(&sweep(ws, &ws.path("c8-both.csv"), &both_args)?);
    let mut pass = true;
    let mut notes = Vec::new();
    for a in [1, 2, 5] {
        let key = |mr| ("syn-a".to_string(), "syn-a".to_string(), Method::ProtoNet, a, mr);
        let (n, b) = (none[&key(MetaRetrieval::None)], both[&key(MetaRetrieval::Both)]);
        pass &= b >= n - 0.01;
        notes.push(format!("A={a}: none {n:.4} both {b:.4}"));
    }
    Ok((pass, format!("ProtoNet {}", notes.join(", "))))
}

fn criterion_9(ws: &Workspace) -> Check {
    cli(&["gen-synthetic", "--out", &ws.path("b"), "--seed", "8", "--class-prefix", "alt-"])?;
    cli(&["build-index", "--retrieval-corpus", &ws.path("b/retrieval.rafc"), "--out", &ws.path("b/ivf.json")])?;
    let out = ws.path("c9.csv");
    cli(&[
        "run",
        "cross-eval",
        "--corpus",
        &ws.path("a/eval.rafc"),
        "--text-embeddings",
        &ws.path("a/text.rafc"),
        "--index",
        &ws.path("a/ivf.json"),
        "--name",
        "syn-a",
        "--corpus-b",
        &ws.path("b/eval.rafc"),
        "--text-embeddings-b",
        &ws.path("b/text.rafc"),
        "--index-b",
        &ws.path("b/ivf.json"),
        "--name-b",
        "syn-b",
        "--method",
        "maml",
        "--method",
        "protonet",
        "--method",
        "zs",
        "--augment",
        "5",
        "--seeds",
        "0,1,2,3,4",
        "--out",
        &out,
    ])?;
    let rows = load(&out)?;
    let m = seed_means(&rows);
    let mut pass = true;
    let mut notes = Vec::new();
    for method in [Method::Maml, Method::ProtoNet] {
        for (own, other) in [("syn-a", "syn-b"), ("syn-b", "syn-a")] {
            let key = |train: &str| (train.to_string(), own.to_string(), method, 5, MetaRetrieval::None);
            let same = *m.get(&key(own)).ok_or("missing same-dataset rows")?;
            let cross = *m.get(&key(other)).ok_or("missing cross-dataset rows")?;
            pass &= cross <= same + 0.02;
            notes.push(format!("{method} on {own}: same {same:.4} cross {cross:.4}"));
        }
    }
    let zs: Vec<&ResultRow> = rows.iter().filter(|r| r.method == Method::ZeroShot).collect();
    let mut by_eval: BTreeMap<(String, u64), Vec<(f64, f64)>> = BTreeMap::new();
    for r in &zs {
        by_eval.entry((r.dataset_eval.clone(), r.seed)).or_default().push((r.test_accuracy, r.accuracy_std));
    }
    let zs_ok = zs.len() == 20 && by_eval.values().all(|v| v.len() == 2 && v[0] == v[1]);
    pass &= zs_ok;
    notes.push(format!("ZS rows identical across training datasets: {zs_ok}"));
    Ok((pass, notes.join("; ")))
}

/// CSV bytes with the wall-time column blanked.
fn without_wall_time(path: &str) -> Result<String, String> {
    let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
    Ok(text
        .lines()
        .map(|l| {
            let mut f: Vec<&str> = l.split(',').collect();
            if f.len() > WALL_TIME_COLUMN {
                f[WALL_TIME_COLUMN] = "";
            }
            f.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n"))
}

fn criterion_10(ws: &Workspace) -> Check {
    // The criterion 8 command, run again in a fresh process.
    sweep(
        ws,
        &ws.path("c10-both.csv"),
        &["--method", "protonet", "--augment", "1", "--augment", "2", "--augment", "5", "--meta-retrieval", "both"],
    )?;
    let rerun_ok = without_wall_time(&ws.path("c8-both.csv"))? == without_wall_time(&ws.path("c10-both.csv"))?;
    // Every method with coarse and fine retrieval meta-learning, twice.
    let short = [
        "--augment", "0", "--augment", "2", "--meta-retrieval", "both", "--max-steps", "10", "--test-episodes", "20",
        "--val-episodes", "10",
    ];
    sweep(ws, &ws.path("c10-x.csv"), &short)?;
    sweep(ws, &ws.path("c10-y.csv"), &short)?;
    let short_ok = without_wall_time(&ws.path("c10-x.csv"))? == without_wall_time(&ws.path("c10-y.csv"))?;
    Ok((
        rerun_ok && short_ok,
        format!("criterion 8 rerun identical: {rerun_ok}; all-method sweep rerun identical: {short_ok}"),
    ))
}

fn criterion_11(ws: &Workspace) -> Check {
    let rows = load(&ws.path("c7.csv"))?;
    let accs: Vec<f64> = rows
        .iter()
        .filter(|r| r.method == Method::ProtoNet && r.a == 5)
        .map(|r| r.test_accuracy)
        .collect();
    if accs.len() != 5 {
        return Err(format!("expected 5 ProtoNet A=5 rows, found {}", accs.len()));
    }
    let sd = sample_std(&accs);
    Ok((sd <= 0.02, format!("ProtoNet A=5 seed accuracies {accs:?}, std {sd:.4}")))
}

struct Criterion<'a> {
    id: u32,
    title: &'a str,
    budget_secs: Option<f64>,
    run: Box<dyn FnOnce() -> Check + 'a>,
}

fn main() {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let ws = Workspace {
        root: tmp.path().to_path_buf(),
        _tmp: tmp,
    };
    if let Err(e) = cli(&["gen-synthetic", "--out", &ws.path("a")]) {
        eprintln!("setup failed: {e}");
        std::process::exit(1);
    }
    let criteria = vec![
        Criterion { id: 1, title: "exact search equals brute-force scan", budget_secs: Some(5.0), run: Box::new(criterion_1) },
        Criterion { id: 2, title: "IVF recall and monotonicity", budget_secs: Some(30.0), run: Box::new(|| criterion_2(&ws)) },
        Criterion { id: 3, title: "compact index recall", budget_secs: Some(60.0), run: Box::new(|| criterion_3(&ws)) },
        Criterion { id: 4, title: "gradients match finite differences", budget_secs: Some(60.0), run: Box::new(criterion_4) },
        Criterion { id: 5, title: "closed-form checks", budget_secs: None, run: Box::new(criterion_5) },
        Criterion { id: 6, title: "zero-noise sanity", budget_secs: None, run: Box::new(criterion_6) },
        Criterion { id: 7, title: "accuracy grows with A", budget_secs: Some(600.0), run: Box::new(|| criterion_7(&ws)) },
        Criterion { id: 8, title: "retrieval meta-learning holds up", budget_secs: Some(600.0), run: Box::new(|| criterion_8(&ws)) },
        Criterion { id: 9, title: "cross-evaluation structure", budget_secs: Some(600.0), run: Box::new(|| criterion_9(&ws)) },
        Criterion { id: 10, title: "deterministic CSV", budget_secs: None, run: Box::new(|| criterion_10(&ws)) },
        Criterion { id: 11, title: "seed stability", budget_secs: None, run: Box::new(|| criterion_11(&ws)) },
    ];
    let mut failed = 0;
    for c in criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let secs = start.elapsed().as_secs_f64();
        let in_budget = c.budget_secs.is_none_or(|b| secs < b);
        let (pass, detail) = match outcome {
            Ok((ok, detail)) => (ok && in_budget, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let budget = c.budget_secs.map_or(String::new(), |b| format!(" / {b:.0} s"));
        println!(
            "{} criterion {:>2} {}: {detail} [{secs:.1} s{budget}]",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.title
        );
        failed += usize::from(!pass);
    }
    println!("{failed} of 11 criteria failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
