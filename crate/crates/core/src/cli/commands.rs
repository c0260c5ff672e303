use std::collections::BTreeMap;
use std::io::Write;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::config::{BackendConfig, ClusteringConfig, PruningConfig, RunConfig};
use super::{AttributeArgs, ClusterArgs, IngestArgs, OracleArgs, PruneArgs, ServeArgs, SynthArgs};
use crate::clustering::{elbow, inertia_curve, kmeans, purity, random_partition_baseline, standardize, KMeansConfig, PurityReport};
use crate::dataset::{
    load_blimp, prepare_corpus, synth_paradigms, write_blimp_dir, CorpusManifest, Split, SynthCategory, SynthSpec,
};
use crate::error::{Error, Result};
use crate::evaluator::{
    serve, serve_tcp_once, CachedEvaluator, Evaluator, ExternalEvaluator, NativeClassifier, PlantedDesign,
    PlantedEvaluator, PlantedGameSpec,
};
use crate::model::{ModelTopology, ShvMatrix};
use crate::pruning::{
    impact_report, prune_matrix, random_cluster_experiment, CellFailure, ClusterTest, RandomClusterOutcome, RankBy,
};
use crate::report::{
    file_digest, impact_svg, inertia_svg, read_clusters_csv, read_json, read_reference_csv, read_shv_csv,
    sidecar_path, write_clusters_csv, write_inertia_csv, write_json, write_prune_csv, write_shv_csv, write_text,
    ClusterRow, Provenance, ShvSidecar,
};
use crate::seed::derive_seed;
use crate::shapley::{exact_shv, shv_matrix, MAX_EXACT_HEADS};

type DynEvaluator = Arc<dyn Evaluator<f64>>;

struct Backend {
    evaluator: DynEvaluator,
    cache: Option<(PathBuf, Arc<CachedEvaluator<f64, DynEvaluator>>)>,
    categories: BTreeMap<String, String>,
    /// Paradigm ids of the corpus, in corpus order, when one was loaded.
    corpus_paradigms: Vec<String>,
    corpus_digest: Option<String>,
}

impl Backend {
    fn open(config: &RunConfig) -> Result<Self> {
        let mut categories = BTreeMap::new();
        let mut corpus_paradigms = Vec::new();
        let (evaluator, corpus_digest): (DynEvaluator, Option<String>) = match &config.backend {
            BackendConfig::Planted { spec } => {
                let path = config.resolve(spec);
                let spec: PlantedGameSpec<f64> = read_json(&path)?;
                for p in &spec.paradigms {
                    categories.insert(p.id.clone(), p.category.clone());
                }
                (Arc::new(PlantedEvaluator::new(spec)?), Some(file_digest(&path)?))
            }
            BackendConfig::Native { corpus, layers, heads_per_layer, model } => {
                let load = load_blimp(config.resolve(corpus), false)?;
                for w in &load.warnings {
                    warn!("{w}");
                }
                let manifest = CorpusManifest::build(&load.paradigms, Vec::new())?;
                for p in &load.paradigms {
                    categories.insert(p.id.clone(), p.category.clone());
                }
                let prepared = prepare_corpus(&load.paradigms, config.seed)?;
                let topology = ModelTopology::new(*layers, *heads_per_layer)?;
                let classifier =
                    NativeClassifier::train(topology, &prepared, model.clone(), derive_seed(config.seed, "native"))?;
                (Arc::new(classifier), Some(manifest.corpus_digest))
            }
            BackendConfig::External { timeout_secs, corpus, .. } => {
                let transport = config.backend.transport()?.expect("external backend has a transport");
                let mut digest = None;
                if let Some(corpus) = corpus {
                    let load = load_blimp(config.resolve(corpus), false)?;
                    for p in &load.paradigms {
                        categories.insert(p.id.clone(), p.category.clone());
                        corpus_paradigms.push(p.id.clone());
                    }
                    digest = Some(CorpusManifest::build(&load.paradigms, Vec::new())?.corpus_digest);
                }
                let ev = ExternalEvaluator::connect(&transport, Duration::from_secs_f64(*timeout_secs))?;
                (Arc::new(ev), digest)
            }
        };
        let mut backend = Backend {
            evaluator,
            cache: None,
            categories,
            corpus_paradigms,
            corpus_digest,
        };
        if let Some(path) = &config.cache {
            let path = config.resolve(path);
            let cached = Arc::new(CachedEvaluator::new(Arc::clone(&backend.evaluator)));
            if path.exists() {
                let n = cached.load(&path)?;
                info!("loaded {n} cached evaluations from {}", path.display());
            }
            backend.evaluator = cached.clone();
            backend.cache = Some((path, cached));
        }
        Ok(backend)
    }

    fn save_cache(&self) -> Result<()> {
        if let Some((path, cached)) = &self.cache {
            cached.save(path)?;
            let stats = cached.stats();
            info!("cache: {} hits, {} misses", stats.hits, stats.misses);
        }
        Ok(())
    }
}

fn out_dir(flag: Option<PathBuf>, config: Option<&RunConfig>) -> PathBuf {
    flag.or_else(|| config.map(RunConfig::output_dir))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn toml_file<V: for<'de> Deserialize<'de>>(path: &Path) -> Result<V> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Parse {
        file: path.to_path_buf(),
        line: e.span().map(|s| text[..s.start].matches('\n').count() + 1).unwrap_or(0),
        message: e.message().to_string(),
    })
}

#[derive(Serialize)]
struct ManifestOutput<'a> {
    provenance: Provenance,
    manifest: &'a CorpusManifest,
}

pub fn ingest(args: IngestArgs) -> Result<()> {
    let load = load_blimp(&args.corpus, args.strict)?;
    if load.paradigms.is_empty() {
        return Err(Error::Input(format!("no .jsonl paradigms in {}", args.corpus.display())));
    }
    for w in &load.warnings {
        warn!("{w}");
    }
    let manifest = CorpusManifest::build(&load.paradigms, load.warnings)?;
    let provenance = Provenance::new("ingest", &serde_json::json!({ "strict": args.strict }), Some(manifest.corpus_digest.clone()))?;
    write_json(args.out.join("manifest.json"), &ManifestOutput { provenance, manifest: &manifest })?;
    println!("{} paradigms, corpus digest {}", manifest.paradigms.len(), manifest.corpus_digest);
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SynthFile {
    #[serde(default)]
    seed: u64,
    /// Empty means one category per template family.
    #[serde(default)]
    categories: Vec<SynthCategory>,
    paradigms_per_category: usize,
    pairs_per_paradigm: usize,
    planted: Option<PlantedDesign>,
}

pub fn synth(args: SynthArgs) -> Result<()> {
    let mut file: SynthFile = toml_file(&args.spec)?;
    if let Some(seed) = args.seed {
        file.seed = seed;
    }
    let spec = if file.categories.is_empty() {
        SynthSpec::three_families(file.paradigms_per_category, file.pairs_per_paradigm)
    } else {
        SynthSpec {
            categories: file.categories.clone(),
            paradigms_per_category: file.paradigms_per_category,
            pairs_per_paradigm: file.pairs_per_paradigm,
        }
    };
    let paradigms = synth_paradigms(&spec, file.seed)?;
    let planted = file
        .planted
        .as_ref()
        .map(|design| {
            let ids: Vec<(String, String)> = paradigms.iter().map(|p| (p.id.clone(), p.category.clone())).collect();
            design.build::<f64>(&ids, derive_seed(file.seed, "planted"))
        })
        .transpose()?;

    write_blimp_dir(args.out.join("corpus"), &paradigms)?;
    let manifest = CorpusManifest::build(&paradigms, Vec::new())?;
    let provenance = Provenance::new("synth", &file, Some(manifest.corpus_digest.clone()))?;
    write_json(args.out.join("manifest.json"), &ManifestOutput { provenance, manifest: &manifest })?;
    if let Some(game) = &planted {
        write_json(args.out.join("planted.json"), game)?;
    }
    println!("{} paradigms written to {}", paradigms.len(), args.out.display());
    Ok(())
}

pub fn attribute(args: AttributeArgs) -> Result<()> {
    let mut config = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if args.sequential {
        config.parallel = false;
        config.estimator.batch = 1;
    }
    if let Some(m) = args.max_permutations {
        config.estimator.max_permutations = m;
    }
    if let Some(b) = args.batch {
        config.estimator.batch = b;
    }
    config.require_convergence |= args.require_convergence;
    config.estimator.seed = config.seed;
    config.validate()?;
    let out = out_dir(args.out, Some(&config));

    let backend = Backend::open(&config)?;
    let served = backend.evaluator.paradigms();
    let paradigms = if !config.paradigms.is_empty() {
        if let Some(p) = config.paradigms.iter().find(|p| !served.is_empty() && !served.contains(p)) {
            return Err(Error::UnknownParadigm(p.clone()));
        }
        config.paradigms.clone()
    } else if !served.is_empty() {
        served
    } else if !backend.corpus_paradigms.is_empty() {
        backend.corpus_paradigms.clone()
    } else {
        return Err(Error::Config("backend cannot list paradigms; set `paradigms` or a corpus".into()));
    };
    let report = shv_matrix(&backend.evaluator, &paradigms, &config.estimator, config.parallel)?;
    backend.save_cache()?;

    let csv_path = out.join("shv.csv");
    write_shv_csv(&csv_path, &report.matrix)?;
    let provenance = Provenance::new("attribute", &config, backend.corpus_digest.clone())?;
    let categories = paradigms
        .iter()
        .filter_map(|p| backend.categories.get(p).map(|c| (p.clone(), c.clone())))
        .collect();
    let sidecar = ShvSidecar::new(provenance, backend.evaluator.backend_id(), &config.estimator, categories, &report);
    write_json(sidecar_path(&csv_path), &sidecar)?;
    let evaluations: usize = report.runs.iter().map(|r| r.evaluations).sum();
    println!(
        "{} paradigms attributed, {} evaluations, budget exhausted: {}",
        report.matrix.rows.len(),
        evaluations,
        report.budget_exhausted()
    );

    if let Some(first) = report.failures.first() {
        return Err(Error::evaluation(
            None,
            format!(
                "{} of {} paradigms failed; first `{}`: {}",
                report.failures.len(),
                paradigms.len(),
                first.paradigm,
                first.error
            ),
        ));
    }
    if config.require_convergence && report.budget_exhausted() {
        let n = report.runs.iter().filter(|r| r.budget_exhausted).count();
        return Err(Error::Budget(format!(
            "{n} paradigms hit max_permutations = {} before every head converged",
            config.estimator.max_permutations
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct ClusterOutput {
    provenance: Provenance,
    k: usize,
    k_selected_by: &'static str,
    inertia: f64,
    iterations: usize,
    sizes: Vec<usize>,
    standardized: bool,
}

#[derive(Serialize)]
struct RandomBaseline {
    runs: usize,
    mean: f64,
    sd: f64,
}

#[derive(Serialize)]
struct PurityOutput {
    provenance: Provenance,
    k: usize,
    reference: String,
    report: PurityReport,
    random_baseline: Option<RandomBaseline>,
}

pub fn cluster(args: ClusterArgs) -> Result<()> {
    let config = args.config.as_deref().map(RunConfig::load).transpose()?;
    let mut cc: ClusteringConfig = config.as_ref().map(|c| c.clustering.clone()).unwrap_or_default();
    let seed = args.seed.or(config.as_ref().map(|c| c.seed)).unwrap_or(0);
    if args.k.is_some() {
        cc.k = args.k;
    }
    if let Some(r) = args.restarts {
        cc.restarts = r;
    }
    match (args.k_min, args.k_max) {
        (Some(lo), Some(hi)) => cc.k_range = Some([lo, hi]),
        (None, None) => {}
        _ => return Err(Error::Config("--k-min and --k-max go together".into())),
    }
    let out = out_dir(args.out, config.as_ref());

    let shv = read_shv_csv(&args.shv)?;
    let n = shv.rows.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("clustering needs at least 2 paradigms, got {n}")));
    }
    let sidecar_file = sidecar_path(&args.shv);
    let sidecar: Option<ShvSidecar> = sidecar_file.exists().then(|| read_json(&sidecar_file)).transpose()?;
    let (reference, reference_name) = match &args.reference {
        Some(path) => (read_reference_csv(path)?, path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default()),
        None => (sidecar.as_ref().map(|s| s.categories.clone()).unwrap_or_default(), "sidecar categories".to_string()),
    };
    let [lo, hi] = cc.k_range.unwrap_or([1, n.min(12)]);
    let hi = hi.min(n);
    if cc.restarts == 0 || lo == 0 || lo > hi {
        return Err(Error::Config(format!("invalid k range [{lo}, {hi}] for {n} paradigms or zero restarts")));
    }
    if let Some(k) = cc.k {
        if k == 0 || k > n {
            return Err(Error::Config(format!("k = {k} outside 1..={n}")));
        }
    }

    let rows = if cc.standardize { standardize(&shv.means())? } else { shv.means() };
    let curve = inertia_curve(&rows, lo..=hi, cc.restarts, seed)?;
    let (k, selected_by) = match cc.k {
        Some(k) => (k, "given"),
        None => (elbow(&curve).expect("non-empty k range"), "elbow"),
    };
    let model = kmeans(&rows, &KMeansConfig { k, restarts: cc.restarts, seed })?;

    let mut provenance = Provenance::new("cluster", &(&cc, seed, k), sidecar.as_ref().and_then(|s| s.provenance.corpus_digest.clone()))?
        .with_input("shv", &args.shv)?;
    if let Some(r) = &args.reference {
        provenance = provenance.with_input("reference", r)?;
    }
    let ids = shv.paradigm_ids();
    let assignments: Vec<ClusterRow> = ids
        .iter()
        .zip(&model.assignments)
        .map(|(p, &c)| ClusterRow {
            paradigm: p.to_string(),
            category: reference.get(*p).cloned().unwrap_or_default(),
            cluster: c,
        })
        .collect();
    write_clusters_csv(out.join("clusters.csv"), &assignments)?;
    write_inertia_csv(out.join("inertia.csv"), &curve)?;
    write_text(out.join("inertia.svg"), &inertia_svg(&curve))?;
    let mut sizes = vec![0; k];
    for &a in &model.assignments {
        sizes[a] += 1;
    }
    write_json(
        out.join("clusters.json"),
        &ClusterOutput {
            provenance: provenance.clone(),
            k,
            k_selected_by: selected_by,
            inertia: model.inertia,
            iterations: model.iterations,
            sizes,
            standardized: cc.standardize,
        },
    )?;
    println!("k = {k} ({selected_by}), inertia {}", model.inertia);

    let covered = ids.iter().all(|p| reference.get(*p).is_some_and(|c| !c.is_empty()));
    if covered {
        let candidate: BTreeMap<String, usize> = assignments.iter().map(|r| (r.paradigm.clone(), r.cluster)).collect();
        let reference: BTreeMap<String, String> =
            ids.iter().map(|p| (p.to_string(), reference[*p].clone())).collect();
        let report = purity(&candidate, &reference)?;
        let labels: Vec<String> = reference.values().cloned().collect();
        let random_baseline = (cc.baseline_runs > 0)
            .then(|| random_partition_baseline(k, cc.baseline_runs, derive_seed(seed, "purity-baseline"), &labels))
            .transpose()?
            .map(|(mean, sd)| RandomBaseline { runs: cc.baseline_runs, mean, sd });
        println!("purity {:.4}, reverse purity {:.4}", report.purity, report.reverse_purity);
        write_json(
            out.join("purity.json"),
            &PurityOutput { provenance, k, reference: reference_name, report, random_baseline },
        )?;
    } else {
        info!("no complete reference labelling; purity skipped");
    }
    Ok(())
}

#[derive(Serialize)]
struct ImpactOutput<'a> {
    provenance: Provenance,
    pruning: &'a PruningConfig,
    baseline: BTreeMap<String, Option<f64>>,
    failures: Vec<CellFailure>,
    clusters: Vec<ClusterTest<f64, usize>>,
    random: RandomClusterOutcome,
}

pub fn prune(args: PruneArgs) -> Result<()> {
    let mut config = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(n) = args.n {
        config.pruning.n = n;
    }
    if let Some(a) = args.alpha {
        config.pruning.impact.alpha = a;
    }
    if let Some(r) = args.random_runs {
        config.pruning.random_runs = r;
    }
    if args.sequential {
        config.parallel = false;
    }
    if args.exclude_self {
        config.pruning.impact.include_self = false;
    }
    if args.absolute {
        config.pruning.rank = RankBy::Absolute;
    }
    config.validate()?;
    let out = out_dir(args.out, Some(&config));

    let shv = read_shv_csv(&args.shv)?;
    let clusters = read_clusters_csv(&args.clusters)?;
    let labels: BTreeMap<String, usize> = clusters.iter().map(|r| (r.paradigm.clone(), r.cluster)).collect();
    let ids = shv.paradigm_ids();
    if labels.len() != ids.len() || ids.iter().any(|p| !labels.contains_key(*p)) {
        return Err(Error::Input("clusters CSV and SHV CSV list different paradigms".into()));
    }
    let d = shv.topology.total();
    if config.pruning.n > d {
        return Err(Error::Config(format!("cannot prune {} of {d} heads", config.pruning.n)));
    }
    let sizes = if config.pruning.random_sizes.is_empty() {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for c in labels.values() {
            *counts.entry(*c).or_default() += 1;
        }
        let mut s: Vec<usize> = counts.into_values().collect();
        s.sort_unstable_by(|a, b| b.cmp(a));
        s
    } else {
        config.pruning.random_sizes.clone()
    };
    if let Some(s) = sizes.iter().find(|&&s| s == 0 || s > ids.len()) {
        return Err(Error::Config(format!("random cluster size {s} outside 1..={}", ids.len())));
    }

    let backend = Backend::open(&config)?;
    let report = prune_matrix(
        &backend.evaluator,
        &shv,
        config.pruning.n,
        config.pruning.rank,
        config.pruning.split,
        config.parallel,
    )?;
    backend.save_cache()?;
    write_prune_csv(out.join("prune.csv"), &report.matrix)?;

    let tests = impact_report(&report.matrix, &labels, &config.pruning.impact)?;
    let random = random_cluster_experiment(
        &report.matrix,
        &sizes,
        config.pruning.random_runs,
        &config.pruning.impact,
        derive_seed(config.seed, "random-clusters"),
    )?;
    for t in &tests {
        match &t.test {
            Some(r) => println!(
                "cluster {}: t = {:.4}, p = {:.3e}, adjusted p = {:.3e}, significant: {}",
                t.cluster, r.t_statistic, r.p_value, r.adjusted_p, t.significant
            ),
            None => println!("cluster {}: undefined ({})", t.cluster, t.undefined.as_deref().unwrap_or("")),
        }
    }
    println!("random clusters significant: {} of {}", random.significant, random.runs);
    write_text(out.join("impact.svg"), &impact_svg(&tests))?;

    let provenance = Provenance::new("prune", &config, backend.corpus_digest.clone())?
        .with_input("shv", &args.shv)?
        .with_input("clusters", &args.clusters)?;
    let baseline = report
        .matrix
        .paradigms
        .iter()
        .cloned()
        .zip(report.matrix.baseline.iter().copied())
        .collect();
    let failures = report.failures.clone();
    write_json(
        out.join("impact.json"),
        &ImpactOutput { provenance, pruning: &config.pruning, baseline, failures, clusters: tests, random },
    )?;
    if !report.failures.is_empty() {
        return Err(Error::evaluation(
            None,
            format!("{} prune evaluations failed; see impact.json", report.failures.len()),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct ComparisonRow {
    paradigm: String,
    head: String,
    exact: f64,
    estimate: f64,
    abs_error: f64,
}

#[derive(Serialize)]
struct ParadigmComparison {
    paradigm: String,
    max_abs_error: f64,
    /// Heads with |exact| >= 0.02 whose estimate has the other sign.
    sign_mismatches: usize,
}

#[derive(Serialize)]
struct ComparisonOutput {
    provenance: Provenance,
    max_abs_error: f64,
    sign_mismatches: usize,
    paradigms: Vec<ParadigmComparison>,
}

pub const SIGN_THRESHOLD: f64 = 0.02;

pub fn oracle(args: OracleArgs) -> Result<()> {
    let spec: PlantedGameSpec<f64> = read_json(&args.planted)?;
    spec.validate()?;
    let total = spec.topology.total();
    if total > MAX_EXACT_HEADS {
        return Err(Error::Budget(format!("exact enumeration is limited to {MAX_EXACT_HEADS} heads, game has {total}")));
    }
    let all: Vec<String> = spec.paradigms.iter().map(|p| p.id.clone()).collect();
    let ids = if args.paradigm.is_empty() { all.clone() } else { args.paradigm.clone() };
    if let Some(p) = ids.iter().find(|p| !all.contains(p)) {
        return Err(Error::UnknownParadigm(p.clone()));
    }
    let estimate = args.compare.as_deref().map(read_shv_csv).transpose()?;
    if let Some(e) = &estimate {
        if e.topology != spec.topology {
            return Err(Error::Topology("compared SHV CSV has a different topology".into()));
        }
    }

    let topology = spec.topology;
    let ev = PlantedEvaluator::new(spec)?;
    let rows = ids.iter().map(|p| exact_shv(&ev, p, Split::Dev)).collect::<Result<Vec<_>>>()?;
    let exact = ShvMatrix::new(topology, rows)?;
    write_shv_csv(args.out.join("oracle.csv"), &exact)?;

    let Some(estimate) = estimate else {
        println!("exact SHVs for {} paradigms written to {}", ids.len(), args.out.display());
        return Ok(());
    };
    let labels = topology.column_labels();
    let mut table = Vec::new();
    let mut summary = Vec::new();
    for row in &exact.rows {
        let Some(est) = estimate.row(&row.paradigm_id) else { continue };
        let mut max_err: f64 = 0.0;
        let mut mismatches = 0;
        for (i, (x, e)) in row.estimates.iter().zip(&est.estimates).enumerate() {
            let err = (x.mean - e.mean).abs();
            max_err = max_err.max(err);
            if x.mean.abs() >= SIGN_THRESHOLD && x.mean.signum() != e.mean.signum() {
                mismatches += 1;
            }
            table.push(ComparisonRow {
                paradigm: row.paradigm_id.clone(),
                head: labels[i].clone(),
                exact: x.mean,
                estimate: e.mean,
                abs_error: err,
            });
        }
        println!("{}: max abs error {:.6}, sign mismatches {}", row.paradigm_id, max_err, mismatches);
        summary.push(ParadigmComparison { paradigm: row.paradigm_id.clone(), max_abs_error: max_err, sign_mismatches: mismatches });
    }
    if summary.is_empty() {
        return Err(Error::Input("compared SHV CSV shares no paradigm with the planted game".into()));
    }
    let path = args.out.join("comparison.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    for r in &table {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    let max_abs_error = summary.iter().map(|s| s.max_abs_error).fold(0.0, f64::max);
    let sign_mismatches = summary.iter().map(|s| s.sign_mismatches).sum();
    let compare = args.compare.as_ref().expect("estimate implies --compare");
    let provenance = Provenance::new("oracle", &ids, Some(file_digest(&args.planted)?))?.with_input("estimate", compare)?;
    write_json(
        args.out.join("comparison.json"),
        &ComparisonOutput { provenance, max_abs_error, sign_mismatches, paradigms: summary },
    )?;
    println!("max abs error {max_abs_error:.6}, sign mismatches {sign_mismatches}");
    Ok(())
}

pub fn serve_planted(args: ServeArgs) -> Result<()> {
    let spec: PlantedGameSpec<f64> = read_json(&args.planted)?;
    let ev = PlantedEvaluator::new(spec)?;
    match &args.tcp {
        Some(addr) => {
            let listener = TcpListener::bind(addr).map_err(|e| Error::Protocol(format!("bind {addr}: {e}")))?;
            let local = listener.local_addr().map_err(|e| Error::Protocol(e.to_string()))?;
            let mut stdout = std::io::stdout();
            writeln!(stdout, "{local}").and_then(|_| stdout.flush()).map_err(|e| Error::Protocol(e.to_string()))?;
            serve_tcp_once(&ev, &listener)
        }
        None => serve(&ev, std::io::stdin().lock(), std::io::stdout().lock()),
    }
}
