use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};

use disclose_core::abstraction::{
    build_distillation_corpus, distillation_items, generate_abstractions, AbstractError, AbstractionSet,
    GenerateOptions, Strategy,
};
use disclose_core::config::AppConfig;
use disclose_core::corpus::{
    filter_posts, parse_brat, read_jsonl_path, sample_posts, sharegpt_filter, split_by_time, split_dataset,
    write_jsonl_atomic, LanguageScores, PrecomputedLanguageScores, SplitSizes, StopwordLanguageId, Turn,
};
use disclose_core::detect::{Detector, OracleTagger, PluginRegistry, SegmentStrategy};
use disclose_core::eval::evaluate;
use disclose_core::importance::{rate_span, RatingRecord};
use disclose_core::llm::LlmClient;
use disclose_core::{AnnotationSet, DisclosureSpan, Document, Layer, Thread};
use disclose_service::ServiceState;

use crate::error::{CliError, CliResult, Kind};

/// Writes `bytes` to a temp file beside `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let fail = |e: std::io::Error| CliError::new(Kind::Internal, format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::new(Kind::Internal, e))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn write_records<T: Serialize>(path: &Path, items: &[T]) -> CliResult<()> {
    write_jsonl_atomic(path, items).map_err(|e| CliError::new(Kind::Internal, e))
}

/// Maps `f` over `items` on up to `workers` threads; output keeps input order.
/// The first error (by input position) wins.
fn par_map<T: Sync, U: Send>(
    items: &[T],
    workers: usize,
    f: impl Fn(&T) -> CliResult<U> + Sync,
) -> CliResult<Vec<U>> {
    let next = AtomicUsize::new(0);
    let workers = workers.clamp(1, items.len().max(1));
    let mut results: Vec<(usize, CliResult<U>)> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                s.spawn(|| {
                    let mut local = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= items.len() {
                            break;
                        }
                        local.push((i, f(&items[i])));
                    }
                    local
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    });
    results.sort_by_key(|(i, _)| *i);
    results.into_iter().map(|(_, r)| r).collect()
}

fn group_sets(spans: Vec<DisclosureSpan>, annotator: &str, layer: Layer) -> Vec<AnnotationSet> {
    let mut by_doc: BTreeMap<String, AnnotationSet> = BTreeMap::new();
    for s in spans {
        by_doc
            .entry(s.doc_id.clone())
            .or_insert_with(|| AnnotationSet::new(s.doc_id.clone(), annotator, layer))
            .spans
            .push(s);
    }
    by_doc.into_values().collect()
}

fn doc_index(docs: &[Document]) -> HashMap<&str, &Document> {
    docs.iter().map(|d| (d.id.as_str(), d)).collect()
}

fn llm_client(cfg: &AppConfig) -> CliResult<LlmClient> {
    let provider = LlmClient::provider_from_config(&cfg.llm)?;
    Ok(LlmClient::from_config(provider, &cfg.llm)?)
}

pub struct DetectArgs {
    pub input: PathBuf,
    pub out: PathBuf,
    pub strategy: Option<SegmentStrategy>,
    pub oracle_gold: Option<PathBuf>,
}

pub fn detect(cfg: &AppConfig, args: DetectArgs) -> CliResult<Value> {
    let docs: Vec<Document> = read_jsonl_path(&args.input)?;
    let mut dcfg = cfg.detection.clone();
    if let Some(s) = args.strategy {
        dcfg.strategy = s;
    }
    let mut registry = PluginRegistry::with_defaults();
    if let Some(path) = &args.oracle_gold {
        let gold: Vec<DisclosureSpan> = read_jsonl_path(path)?;
        registry.register_tagger("oracle", Arc::new(OracleTagger::new(gold)));
        dcfg.tagger = "oracle".into();
    }
    let detector = Detector::from_config(&dcfg, &registry)?;
    let sets = par_map(&docs, cfg.llm.max_concurrency, |doc| {
        if doc.text.trim().is_empty() {
            return Ok(Vec::new());
        }
        Ok(detector.detect(doc)?.spans)
    })?;
    let spans: Vec<DisclosureSpan> = sets.into_iter().flatten().collect();
    write_records(&args.out, &spans)?;
    Ok(json!({"documents": docs.len(), "spans": spans.len(), "model_versions": detector.model_versions()}))
}

pub struct EvalArgs {
    pub pred: PathBuf,
    pub gold: PathBuf,
    pub docs: Option<PathBuf>,
    pub report: PathBuf,
    pub table: Option<PathBuf>,
}

pub fn eval(args: EvalArgs) -> CliResult<(Value, String)> {
    let pred = group_sets(read_jsonl_path(&args.pred)?, "pred", Layer::Predicted);
    let mut gold = group_sets(read_jsonl_path(&args.gold)?, "gold", Layer::Gold);
    for set in &mut gold {
        set.normalize();
    }
    let docs: Option<Vec<Document>> = args.docs.as_deref().map(read_jsonl_path).transpose()?;
    let report = evaluate(&pred, &gold, docs.as_deref())?;
    write_json(&args.report, &report)?;
    let table = report.to_table();
    if let Some(path) = &args.table {
        write_atomic(path, table.as_bytes())?;
    }
    let avg = |p: &Option<disclose_core::eval::Prf>| p.as_ref().map(|p| p.f1);
    Ok((
        json!({
            "classes": report.averaged_over.len(),
            "exact_f1": avg(&report.averages.exact),
            "partial_f1": avg(&report.averages.partial),
            "token_f1": avg(&report.averages.token),
        }),
        table,
    ))
}

pub struct AbstractArgs {
    pub input: PathBuf,
    pub docs: PathBuf,
    pub strategy: Strategy,
    pub out: PathBuf,
    pub with_thought: bool,
}

pub fn abstract_spans(cfg: &AppConfig, args: AbstractArgs) -> CliResult<Value> {
    let spans: Vec<DisclosureSpan> = read_jsonl_path(&args.input)?;
    let docs: Vec<Document> = read_jsonl_path(&args.docs)?;
    let index = doc_index(&docs);
    let client = llm_client(cfg)?;
    let detector = Detector::from_config(&cfg.detection, &PluginRegistry::with_defaults())?;
    let opts = GenerateOptions {
        with_thought: args.with_thought,
        ..GenerateOptions::default()
    };
    let results = par_map(&spans, cfg.llm.max_concurrency, |span| {
        let doc = index
            .get(span.doc_id.as_str())
            .ok_or_else(|| CliError::input(format!("span refers to unknown document {}", span.doc_id)))?;
        match generate_abstractions(doc, span, args.strategy, &opts, detector.splitter(), &client) {
            Ok(set) => Ok(Ok(set)),
            // per-span data problems are reported, not fatal
            Err(e @ (AbstractError::CrossesSentence { .. } | AbstractError::PartialResult { .. })) => {
                Ok(Err(json!({"doc_id": span.doc_id, "start": span.start, "end": span.end, "reason": e.to_string()})))
            }
            Err(e) => Err(e.into()),
        }
    })?;
    let mut sets: Vec<AbstractionSet> = Vec::new();
    let mut skipped = Vec::new();
    for r in results {
        match r {
            Ok(set) => sets.push(set),
            Err(v) => skipped.push(v),
        }
    }
    write_records(&args.out, &sets)?;
    Ok(json!({"written": sets.len(), "skipped": skipped, "provider_calls": client.provider_calls()}))
}

pub struct RateArgs {
    pub input: PathBuf,
    pub threads: PathBuf,
    pub out: PathBuf,
    pub with_thought: bool,
}

pub fn rate(cfg: &AppConfig, args: RateArgs) -> CliResult<Value> {
    let spans: Vec<DisclosureSpan> = read_jsonl_path(&args.input)?;
    let threads: Vec<Thread> = read_jsonl_path(&args.threads)?;
    let mut by_doc: HashMap<&str, &Thread> = HashMap::new();
    for t in &threads {
        t.validate()?;
        for d in &t.documents {
            by_doc.insert(d.id.as_str(), t);
        }
    }
    let client = llm_client(cfg)?;
    let records = par_map(&spans, cfg.llm.max_concurrency, |span| {
        let thread = by_doc
            .get(span.doc_id.as_str())
            .ok_or_else(|| CliError::input(format!("no thread holds document {}", span.doc_id)))?;
        let r = rate_span(span, thread, &client, args.with_thought)?;
        Ok(RatingRecord::from(&r))
    })?;
    write_records(&args.out, &records)?;
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for r in &records {
        *counts.entry(r.level.to_string()).or_default() += 1;
    }
    Ok(json!({"rated": records.len(), "levels": counts}))
}

pub struct DistillArgs {
    pub docs: PathBuf,
    pub gold: PathBuf,
    pub out: PathBuf,
    pub temperature: f64,
}

pub fn distill(cfg: &AppConfig, args: DistillArgs) -> CliResult<Value> {
    let docs: Vec<Document> = read_jsonl_path(&args.docs)?;
    let gold = group_sets(read_jsonl_path(&args.gold)?, "gold", Layer::Gold);
    let detector = Detector::from_config(&cfg.detection, &PluginRegistry::with_defaults())?;
    let items = distillation_items(&docs, &gold, detector.splitter())?;
    let client = llm_client(cfg)?;
    let summary = build_distillation_corpus(&items, &client, args.temperature, &args.out)?;
    if let Some(reason) = &summary.aborted {
        return Err(CliError::new(
            Kind::Provider,
            format!("stopped after {} records: {reason}", summary.written),
        ));
    }
    Ok(json!({
        "items": items.len(),
        "written": summary.written,
        "already_present": summary.already_present,
        "skipped": summary.skipped,
    }))
}

pub struct IngestBratArgs {
    pub dir: PathBuf,
    pub annotator: String,
    pub layer: Layer,
    pub docs_out: PathBuf,
    pub spans_out: PathBuf,
}

/// Reads `<name>.txt` / `<name>.ann` pairs. The file stem is both document and thread id.
pub fn ingest_brat(args: IngestBratArgs) -> CliResult<Value> {
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| CliError::input(format!("{}: {e}", p.display())));
    let mut anns: Vec<PathBuf> = std::fs::read_dir(&args.dir)
        .map_err(|e| CliError::input(format!("{}: {e}", args.dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "ann"))
        .collect();
    anns.sort();
    let mut docs = Vec::new();
    let mut spans = Vec::new();
    for ann in &anns {
        let stem = ann.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        let text = read(&ann.with_extension("txt"))?;
        let set = parse_brat(&read(ann)?, &text, &stem, &args.annotator, args.layer)
            .map_err(|e| CliError::input(format!("{}: {e}", ann.display())))?;
        spans.extend(set.spans);
        docs.push(Document::body(stem.clone(), stem, text));
    }
    write_records(&args.docs_out, &docs)?;
    write_records(&args.spans_out, &spans)?;
    Ok(json!({"documents": docs.len(), "spans": spans.len()}))
}

pub struct FilterRedditArgs {
    pub input: PathBuf,
    pub out: PathBuf,
    pub report: Option<PathBuf>,
    pub lang_scores: Option<PathBuf>,
    pub sample: Option<usize>,
    pub seed: u64,
}

pub fn filter_reddit(args: FilterRedditArgs) -> CliResult<Value> {
    let records: Vec<Value> = read_jsonl_path(&args.input)?;
    let pre = match &args.lang_scores {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::input(format!("{}: {e}", p.display())))?;
            Some(PrecomputedLanguageScores(
                serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", p.display())))?,
            ))
        }
        None => None,
    };
    let model = StopwordLanguageId;
    let scores = match &pre {
        Some(p) => LanguageScores::Precomputed(p),
        None => LanguageScores::Model(&model),
    };
    let (kept, report) = filter_posts(records, &scores);
    let kept = match args.sample {
        Some(n) => sample_posts(kept, n, args.seed),
        None => kept,
    };
    write_records(&args.out, &kept)?;
    if let Some(path) = &args.report {
        write_json(path, &report)?;
    }
    Ok(json!({"report": report, "written": kept.len()}))
}

pub fn filter_sharegpt(input: &Path, out: &Path) -> CliResult<Value> {
    let turns: Vec<Turn> = read_jsonl_path(input)?;
    let n = turns.len();
    let kept = sharegpt_filter(turns);
    write_records(out, &kept)?;
    Ok(json!({"input": n, "kept": kept.len()}))
}

pub struct SplitArgs {
    pub input: PathBuf,
    pub out_dir: PathBuf,
    pub sizes: SplitSizes,
    pub seed: u64,
    pub time_field: Option<String>,
}

pub fn split(args: SplitArgs) -> CliResult<Value> {
    let units: Vec<Value> = read_jsonl_path(&args.input)?;
    let split = match &args.time_field {
        Some(field) => {
            if let Some(i) = units.iter().position(|u| u.get(field).and_then(Value::as_f64).is_none()) {
                return Err(CliError::input(format!("record {} has no numeric `{field}`", i + 1)));
            }
            split_by_time(units, args.sizes, |u| u[field.as_str()].as_f64().expect("checked"))?
        }
        None => split_dataset(units, args.sizes, args.seed)?,
    };
    std::fs::create_dir_all(&args.out_dir).map_err(|e| CliError::new(Kind::Internal, e))?;
    for (name, part) in [("train", &split.train), ("dev", &split.dev), ("test", &split.test)] {
        write_records(&args.out_dir.join(format!("{name}.jsonl")), part)?;
    }
    if !split.unused.is_empty() {
        write_records(&args.out_dir.join("unused.jsonl"), &split.unused)?;
    }
    Ok(json!({
        "train": split.train.len(),
        "dev": split.dev.len(),
        "test": split.test.len(),
        "unused": split.unused.len(),
    }))
}

pub fn serve(cfg: &AppConfig) -> CliResult<Value> {
    let state = Arc::new(ServiceState::from_config(cfg, &PluginRegistry::with_defaults())?);
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::new(Kind::Internal, e))?;
    rt.block_on(disclose_service::serve(state, &cfg.service))
        .map_err(|e| CliError::new(Kind::Internal, e))?;
    Ok(json!({"stopped": true}))
}
