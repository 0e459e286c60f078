use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use finex_core::baseline::optics_build;
use finex_core::finex::finex_build_report;
use finex_core::io::{load_index, load_matrix, load_sets, load_vectors, save_index, write_labeling};
use finex_core::validate::{check_exact, exact_equivalent, BruteNeighborhoods};
use finex_core::{
    border_recall, epsilon_star_query, minpts_star_query, query_clustering, Backend, Dataset, Error,
    Labeling, Metric, NeighborProvider, ObjectId, RecordMap, SeedOrder,
};
use finex_service::{AppState, Loaded};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::Serialize;

use crate::args::{
    BuildArgs, Cli, Command, CompareArgs, DataKind, InputArgs, ParamArgs, QueryArgs, ServeArgs,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("server: {0}")]
    Server(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(Error::EpsilonOutOfRange { .. } | Error::MinPtsOutOfRange { .. }) => 4,
            CliError::Core(Error::InvalidParameter(_) | Error::IncompatibleBackend { .. }) => 2,
            CliError::Core(_) | CliError::Server(_) => 3,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

struct Input {
    data: Arc<Dataset>,
    records: RecordMap,
}

fn load_input(args: &InputArgs, kind: DataKind) -> Result<Input> {
    if args.standardize && kind != DataKind::Vectors {
        return Err(CliError::Usage(
            "--standardize applies to vector data only".into(),
        ));
    }
    let path: &Path = &args.input;
    let (data, records) = match kind {
        DataKind::Sets => {
            let (sets, records) = load_sets(path)?;
            (Dataset::from_sets(sets)?, records)
        }
        DataKind::Vectors => {
            let vectors = load_vectors(path, args.standardize, args.header)?;
            let n = vectors.len();
            (Dataset::from_vectors(vectors)?, RecordMap::identity(n))
        }
        DataKind::Matrix => {
            let data = load_matrix(path)?;
            let n = data.len();
            (data, RecordMap::identity(n))
        }
    };
    Ok(Input {
        data: Arc::new(data),
        records,
    })
}

fn check_kind(params: &ParamArgs) -> Result<Metric> {
    let metric = Metric::from(params.metric);
    if DataKind::for_metric(metric) != params.data {
        return Err(CliError::Usage(format!(
            "metric {} cannot be used with {:?} data",
            metric.name(),
            params.data
        )));
    }
    if !(params.epsilon >= 0.0 && params.epsilon.is_finite()) {
        return Err(CliError::Usage(format!(
            "epsilon must be finite and non-negative, got {}",
            params.epsilon
        )));
    }
    if params.minpts == 0 {
        return Err(CliError::Usage("MinPts must be at least 1".into()));
    }
    Ok(metric)
}

fn seed_order(seed: Option<u64>, n: usize) -> SeedOrder {
    match seed {
        None => SeedOrder::Ascending,
        Some(s) => {
            let mut ids: Vec<ObjectId> = (0..n).map(ObjectId::from_index).collect();
            ids.shuffle(&mut StdRng::seed_from_u64(s));
            SeedOrder::Custom(ids)
        }
    }
}

fn provider(input: &Input, args: &InputArgs, epsilon: f64) -> Result<NeighborProvider> {
    let backend = args
        .backend
        .unwrap_or_else(|| Backend::default_for(input.data.metric()));
    Ok(NeighborProvider::build(
        Arc::clone(&input.data),
        epsilon,
        backend,
    )?)
}

fn emit<T: Serialize>(json: bool, summary: &T, text: impl FnOnce() -> String) {
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(summary).expect("summary serializes")
        );
    } else {
        println!("{}", text());
    }
}

#[derive(Serialize)]
struct BuildSummary {
    records: usize,
    n: usize,
    dedup_ratio: f64,
    epsilon: f64,
    min_pts: u64,
    core_count: usize,
    range_queries: u64,
    distance_computations: u64,
    reinsertions: u64,
    build_millis: f64,
    out: String,
}

fn build(args: BuildArgs, json: bool) -> Result<()> {
    check_kind(&args.params)?;
    let input = load_input(&args.input, args.params.data)?;
    let p = &args.params;
    let started = Instant::now();
    let provider = provider(&input, &args.input, p.epsilon)?;
    let seed = seed_order(p.seed, input.data.len());
    let (index, report) = finex_build_report(&provider, p.epsilon, p.minpts, &seed)?;
    let millis = started.elapsed().as_secs_f64() * 1e3;
    save_index(&args.out, &index)?;
    let s = BuildSummary {
        records: input.records.records(),
        n: index.len(),
        dedup_ratio: input.records.records() as f64 / index.len() as f64,
        epsilon: p.epsilon,
        min_pts: p.minpts,
        core_count: index.core_count(),
        range_queries: report.range_queries,
        distance_computations: provider.build_distance_computations() + report.distance_computations,
        reinsertions: report.total_reinsertions(),
        build_millis: millis,
        out: args.out.display().to_string(),
    };
    emit(json, &s, || {
        format!(
            "built {}: n = {} ({} records, dedup ratio {:.3}), {} cores, {} distance computations, {} reinsertions, {:.1} ms",
            s.out, s.n, s.records, s.dedup_ratio, s.core_count, s.distance_computations, s.reinsertions, s.build_millis
        )
    });
    Ok(())
}

#[derive(Serialize)]
struct QuerySummary {
    query: &'static str,
    value: f64,
    mode: &'static str,
    clusters: usize,
    noise_objects: usize,
    noise_percent: f64,
    candidates: u64,
    candidates_added: u64,
    distance_computations: u64,
    millis: f64,
    out: String,
}

fn noise_percent(labeling: &Labeling, records: &RecordMap) -> f64 {
    let noise = records
        .as_slice()
        .iter()
        .filter(|&&o| labeling.is_noise(o))
        .count();
    100.0 * noise as f64 / records.records() as f64
}

fn query(args: QueryArgs, json: bool) -> Result<()> {
    if args.approx && args.epsilon_star.is_none() {
        return Err(CliError::Usage("--approx applies to --epsilon-star only".into()));
    }
    let index = load_index(&args.index, None)?;
    let input = load_input(&args.input, DataKind::for_metric(index.metric()))?;
    index.check_dataset(&input.data)?;
    let started = Instant::now();
    let (labeling, stats, query, value, mode) = match (args.epsilon_star, args.minpts_star) {
        (Some(es), None) if args.approx => {
            let l = query_clustering(index.ordering(), es)?;
            (l, Default::default(), "epsilon_star", es, "approx")
        }
        (Some(es), None) => {
            // candidate verification reads distances directly; no index needed
            let scan = NeighborProvider::build(
                Arc::clone(&input.data),
                index.params().epsilon,
                Backend::BruteForce,
            )?;
            let q = epsilon_star_query(&index, &scan, es)?;
            (q.labeling, q.stats, "epsilon_star", es, "exact")
        }
        (None, Some(ms)) => {
            let p = provider(&input, &args.input, index.params().epsilon)?;
            let q = minpts_star_query(&index, &p, ms)?;
            (q.labeling, q.stats, "minpts_star", ms as f64, "exact")
        }
        _ => {
            return Err(CliError::Usage(
                "give exactly one of --epsilon-star or --minpts-star".into(),
            ))
        }
    };
    let millis = started.elapsed().as_secs_f64() * 1e3;
    write_labeling(&args.out, &labeling, &input.records)?;
    let s = QuerySummary {
        query,
        value,
        mode,
        clusters: labeling.num_clusters(),
        noise_objects: labeling.noise_count(),
        noise_percent: noise_percent(&labeling, &input.records),
        candidates: stats.candidates,
        candidates_added: stats.candidates_added,
        distance_computations: stats.distance_computations,
        millis,
        out: args.out.display().to_string(),
    };
    emit(json, &s, || {
        format!(
            "{} = {} ({}): {} clusters, {} noise objects ({:.1}% of records), {} candidates verified ({} added), {} distance computations, {:.2} ms",
            s.query, s.value, s.mode, s.clusters, s.noise_objects, s.noise_percent, s.candidates, s.candidates_added,
            s.distance_computations, s.millis
        )
    });
    Ok(())
}

#[derive(Serialize)]
struct CompareRow {
    epsilon_star: f64,
    finex_recall: f64,
    optics_recall: f64,
    exact_clusters: usize,
    query_exact: bool,
    query_distance_computations: u64,
}

fn compare(args: CompareArgs, json: bool) -> Result<()> {
    check_kind(&args.params)?;
    let p = &args.params;
    if let Some(bad) = args
        .epsilon_stars
        .iter()
        .find(|&&e| !(0.0..=p.epsilon).contains(&e))
    {
        return Err(Error::EpsilonOutOfRange {
            requested: *bad,
            epsilon: p.epsilon,
            min_pts: p.minpts,
        }
        .into());
    }
    let input = load_input(&args.input, p.data)?;
    let provider = provider(&input, &args.input, p.epsilon)?;
    let seed = seed_order(p.seed, input.data.len());
    let (index, _) = finex_build_report(&provider, p.epsilon, p.minpts, &seed)?;
    let optics = optics_build(&provider, p.epsilon, p.minpts, &seed)?;
    let brute = BruteNeighborhoods::new(&input.data, p.epsilon);

    let mut rows = Vec::new();
    for &es in &args.epsilon_stars {
        let exact = brute.dbscan(es, p.minpts);
        let q = epsilon_star_query(&index, &provider, es)?;
        let query_exact = check_exact(&brute, &q.labeling, es, p.minpts).is_ok()
            && exact_equivalent(&brute, &q.labeling, &exact, es).is_ok();
        rows.push(CompareRow {
            epsilon_star: es,
            finex_recall: border_recall(&query_clustering(index.ordering(), es)?, &exact)?,
            optics_recall: border_recall(&query_clustering(&optics, es)?, &exact)?,
            exact_clusters: exact.num_clusters(),
            query_exact,
            query_distance_computations: q.stats.distance_computations,
        });
    }
    emit(json, &rows, || {
        let mut out = format!(
            "{:>10}  {:>8}  {:>8}  {:>8}  {:>6}  {:>10}\n",
            "eps*", "FINEX", "OPTICS", "clusters", "exact", "distances"
        );
        for r in &rows {
            out.push_str(&format!(
                "{:>10.4}  {:>8.3}  {:>8.3}  {:>8}  {:>6}  {:>10}\n",
                r.epsilon_star,
                r.finex_recall,
                r.optics_recall,
                r.exact_clusters,
                if r.query_exact { "yes" } else { "NO" },
                r.query_distance_computations
            ));
        }
        out.trim_end().to_string()
    });
    Ok(())
}

fn serve(args: ServeArgs) -> Result<()> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(CliError::Server)?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind((args.host.as_str(), args.port))
            .await
            .map_err(CliError::Server)?;
        let addr = listener.local_addr().map_err(CliError::Server)?;
        let state = AppState::empty();
        let loader = state.clone();
        let loading = tokio::task::spawn_blocking(move || -> Result<()> {
            let index = load_index(&args.index, None)?;
            let input = load_input(&args.input, DataKind::for_metric(index.metric()))?;
            index.check_dataset(&input.data)?;
            let p = provider(&input, &args.input, index.params().epsilon)?;
            loader.set(Loaded::new(index, p, args.with_baselines)?);
            Ok(())
        });
        eprintln!("listening on http://{addr} (loading index)");
        let server = tokio::spawn(finex_service::serve(listener, state));
        loading.await.expect("loader task panicked")?;
        eprintln!("index loaded");
        server
            .await
            .expect("server task panicked")
            .map_err(CliError::Server)
    })
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Build(a) => build(a, cli.json),
        Command::Query(a) => query(a, cli.json),
        Command::Compare(a) => compare(a, cli.json),
        Command::Serve(a) => serve(a),
    }
}
