use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context as _, Result};
use log::{info, warn};

use healthrank::corpus::{ingest_documents, load_topics, Corpus, Document};
use healthrank::credibility::{
    extract_all, predict_credibility, rank_credibility, train_forest, CredibleSiteList,
    ForestModel, LabeledPage, PageRankClient, RankMode,
};
use healthrank::eval::{help_harm_report, load_qrels, EvalParams};
use healthrank::fusion::{compose_preset, Preset, Resolver, RrfConfig};
use healthrank::retrieval::{
    build_index, load_silver, search_topics, tune_params, Bm25Params, InvertedIndex, TuneResult,
};
use healthrank::scorer_io::{load_evidence, load_run, write_run};
use healthrank::supportiveness::{rerank_supportiveness, VoteConfig};
use healthrank::RankedRun;

use crate::config::PipelineConfig;
use crate::{Dimension, ParamsChoice};

pub struct Context {
    pub config: PipelineConfig,
    pub depth: Option<usize>,
}

pub fn index(ctx: &Context) -> Result<()> {
    let cfg = &ctx.config;
    let source = cfg.resolve(&cfg.corpus.documents);
    let (corpus, report) = ingest_documents(&source, cfg.source_format()?)?;
    for r in &report.rejected {
        warn!("record {}: {}", r.record, r.reason);
    }
    corpus.save(&cfg.store_dir())?;
    let index = build_index(&corpus)?;
    index.save(&cfg.index_dir())?;
    info!(
        "indexed {} documents, {} terms",
        index.num_docs(),
        index.num_terms()
    );
    println!("{report}");
    Ok(())
}

pub fn search(ctx: &Context, choice: ParamsChoice) -> Result<()> {
    let cfg = &ctx.config;
    let (params, tag) = match choice {
        ParamsChoice::Standard => (Bm25Params::new(cfg.bm25.k1, cfg.bm25.b)?, "bm25"),
        ParamsChoice::Tuned => {
            let path = cfg.tuned_path();
            let text = fs::read_to_string(&path)
                .with_context(|| format!("reading {} (run `tune` first)", path.display()))?;
            let tuned: TuneResult = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", path.display()))?;
            (tuned.params, "bm25_tuned")
        }
    };
    let index = InvertedIndex::load(&cfg.index_dir())?;
    let topics = load_topics(&cfg.resolve(&cfg.corpus.topics))?;
    let depth = ctx.depth.unwrap_or(cfg.bm25.depth);
    info!(
        "searching {} topics with k1={} b={} depth={depth}",
        topics.len(),
        params.k1,
        params.b
    );
    let run = search_topics(&index, params, &topics, depth, tag);
    write_out(&run, &cfg.run_path(tag))
}

pub fn tune(ctx: &Context) -> Result<()> {
    let cfg = &ctx.config;
    let silver = cfg
        .bm25
        .silver
        .as_ref()
        .ok_or_else(|| anyhow!("bm25.silver is not configured"))?;
    let silver = load_silver(&cfg.resolve(silver))?;
    if silver.is_empty() {
        bail!("silver topic file is empty");
    }
    let index = InvertedIndex::load(&cfg.index_dir())?;
    let depth = ctx.depth.unwrap_or(cfg.bm25.depth);
    let best = tune_params(&index, &silver, &cfg.grid()?, depth)?;
    let path = cfg.tuned_path();
    fs::create_dir_all(cfg.work())?;
    fs::write(&path, serde_json::to_string_pretty(&best)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    println!(
        "k1={} b={} mrr={:.6}",
        best.params.k1, best.params.b, best.mrr
    );
    Ok(())
}

pub fn rerank(ctx: &Context, dimension: Dimension) -> Result<()> {
    match dimension {
        Dimension::Support => rerank_support(ctx),
        Dimension::Credibility => rerank_credibility(ctx),
    }
}

fn rerank_support(ctx: &Context) -> Result<()> {
    let cfg = &ctx.config;
    if cfg.support.evidence.is_empty() {
        bail!("support.evidence has no models configured");
    }
    let corpus = Corpus::load(&cfg.store_dir())?;
    let domains = corpus.domains();
    let sites = load_sites(cfg)?.unwrap_or_default();
    let available = available_runs(cfg)?;
    let usefulness = Resolver::new(&available, RrfConfig::new(cfg.fusion.k)?)
        .resolve(&cfg.support.usefulness)?;
    let vote = VoteConfig {
        k: cfg.support.k,
        tie_default: cfg.support.tie_default,
    };
    for (model, path) in &cfg.support.evidence {
        let judgments = load_evidence(&cfg.resolve(path))?;
        let out = rerank_supportiveness(
            &judgments,
            &usefulness,
            &domains,
            &sites,
            vote,
            &format!("support-{model}"),
        )?;
        for (topic, stance) in &out.stances {
            info!(
                "{model} topic {topic}: {:?} ({}-{}{})",
                stance.decided,
                stance.support_votes,
                stance.dissuade_votes,
                if stance.tie_broken_by_credible_sites {
                    ", credible-site tie-break"
                } else {
                    ""
                }
            );
        }
        let report = cfg.reports_dir().join(format!("stances-{model}.json"));
        fs::create_dir_all(cfg.reports_dir())?;
        fs::write(&report, serde_json::to_string_pretty(&out.stances)? + "\n")?;
        write_out(&out.run, &cfg.run_path(model))?;
    }
    Ok(())
}

fn rerank_credibility(ctx: &Context) -> Result<()> {
    let cfg = &ctx.config;
    let model = forest(ctx)?;
    let corpus = Corpus::load(&cfg.store_dir())?;
    let available = available_runs(cfg)?;
    let candidates = Resolver::new(&available, RrfConfig::new(cfg.fusion.k)?)
        .resolve(&cfg.credibility.candidates)?;

    let mut docs: Vec<&Document> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (_, list) in candidates.iter() {
        for d in list {
            if seen.insert(d.doc_id.as_str()) {
                let doc = corpus
                    .get(&d.doc_id)
                    .ok_or_else(|| anyhow!("candidate {} is not in the corpus", d.doc_id))?;
                docs.push(doc);
            }
        }
    }
    docs.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    let pagerank = match cfg.pagerank() {
        Some(pr) => PageRankClient::from_config(&pr)?,
        None => {
            warn!("no pagerank source configured; every domain is treated as unranked");
            PageRankClient::from_fixture(HashMap::new())
        }
    };
    let features = extract_all(&docs, &pagerank)?;
    let scores: HashMap<String, f64> = docs
        .iter()
        .zip(&features)
        .map(|(d, f)| (d.doc_id.clone(), predict_credibility(&model, f)))
        .collect();
    let domains = corpus.domains();

    let empty = CredibleSiteList::default();
    let rf = rank_credibility(
        &candidates,
        &scores,
        &domains,
        &empty,
        RankMode::ClassifierOnly,
        "rf",
    )?;
    write_out(&rf, &cfg.run_path("rf"))?;
    match load_sites(cfg)? {
        Some(sites) => {
            let boosted = rank_credibility(
                &candidates,
                &scores,
                &domains,
                &sites,
                RankMode::ClassifierPlusSites,
                "rf_sites",
            )?;
            write_out(&boosted, &cfg.run_path("rf_sites"))?;
        }
        None => warn!("credibility.sites is not configured; skipping rf_sites"),
    }
    Ok(())
}

fn forest(ctx: &Context) -> Result<ForestModel> {
    let cfg = &ctx.config;
    if let Some(path) = &cfg.credibility.model {
        return Ok(ForestModel::load(&cfg.resolve(path))?);
    }
    let training = cfg
        .credibility
        .training
        .as_ref()
        .ok_or_else(|| anyhow!("credibility needs either `model` or `training`"))?;
    let training = cfg.resolve(training);
    let rows = healthrank::credibility::read_labeled_csv(&training)?;
    let pages = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let features = r.features().ok_or_else(|| {
                anyhow!(
                    "{}: row {} lacks smog/pagerank/css_rule_count",
                    training.display(),
                    i + 2
                )
            })?;
            Ok(LabeledPage::new(&r.url, &r.topic, features, r.score)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let model = train_forest(&pages, cfg.forest_params(), cfg.seed)?;
    info!(
        "trained {} trees on {} pages with seed {}",
        model.trees.len(),
        pages.len(),
        cfg.seed
    );
    fs::create_dir_all(cfg.work())?;
    model.save(&cfg.forest_path())?;
    Ok(model)
}

pub fn fuse(ctx: &Context, preset: &str) -> Result<()> {
    let cfg = &ctx.config;
    let definition = match cfg.fusion.presets.get(preset) {
        Some(components) => Preset {
            id: preset.to_string(),
            components: components.clone(),
        },
        None => Preset::builtin(preset).ok_or_else(|| anyhow!("unknown preset {preset:?}"))?,
    };
    let available = available_runs(cfg)?;
    let depth = ctx.depth.unwrap_or(cfg.fusion.depth);
    let run = compose_preset(
        &definition,
        &available,
        RrfConfig::new(cfg.fusion.k)?,
        depth,
    )?;
    write_out(&run, &cfg.run_path(preset))
}

pub fn eval(ctx: &Context, run: &str) -> Result<()> {
    let cfg = &ctx.config;
    let path = {
        let direct = PathBuf::from(run);
        if direct.exists() {
            direct
        } else {
            cfg.run_path(run)
        }
    };
    let qrels = cfg
        .eval
        .qrels
        .as_ref()
        .ok_or_else(|| anyhow!("eval.qrels is not configured"))?;
    let qrels = load_qrels(&cfg.resolve(qrels))?;
    let ranked = load_run(&path)?;
    let params = EvalParams::new(cfg.eval.p, ctx.depth.or(cfg.eval.depth))?;
    let report = help_harm_report(&ranked, &qrels, params)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| ranked.tag.clone());
    let dir = cfg.reports_dir();
    fs::create_dir_all(&dir)?;
    fs::write(dir.join(format!("{name}.json")), report.to_json()? + "\n")?;
    fs::write(
        dir.join(format!("{name}.topics.tsv")),
        report.to_topic_tsv(),
    )?;
    print!("{}", report.to_summary_tsv());
    Ok(())
}

fn load_sites(cfg: &PipelineConfig) -> Result<Option<CredibleSiteList>> {
    cfg.credibility
        .sites
        .as_ref()
        .map(|p| Ok(CredibleSiteList::load(&cfg.resolve(p))?))
        .transpose()
}

/// Runs named in the config plus every `*.run` in the work directory.
fn available_runs(cfg: &PipelineConfig) -> Result<HashMap<String, RankedRun>> {
    let mut runs = HashMap::new();
    for (id, path) in &cfg.runs {
        runs.insert(id.clone(), load_run(&cfg.resolve(path))?);
    }
    let dir = cfg.runs_dir();
    if dir.is_dir() {
        let mut paths: Vec<PathBuf> = fs::read_dir(&dir)?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()?;
        paths.retain(|p| p.extension().is_some_and(|e| e == "run"));
        paths.sort();
        for path in paths {
            let id = path.file_stem().unwrap().to_string_lossy().into_owned();
            if cfg.runs.contains_key(&id) {
                bail!(
                    "model {id} is both configured in [runs] and present in {}",
                    dir.display()
                );
            }
            runs.insert(id, load_run(&path)?);
        }
    }
    Ok(runs)
}

fn write_out(run: &RankedRun, path: &Path) -> Result<()> {
    write_run(run, path)?;
    info!("wrote {} ({} topics)", path.display(), run.num_topics());
    println!("{}", path.display());
    Ok(())
}
