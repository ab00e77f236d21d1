use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context};
use margin_core::algorithms::{run, write_trace_csv, Algorithm, Mode};
use margin_core::generate::{generate, GeneratorSpec};
use margin_core::ProblemInstance;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::summary::summarize;
use crate::{algorithm_config, default_mode, load_instance, print_json, write_json, BatchArgs, Global, Status};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BatchPlan {
    #[serde(default)]
    instances: Vec<GeneratorSpec>,
    #[serde(default)]
    files: Vec<PathBuf>,
    algorithms: Vec<Algorithm>,
    mode: Option<Mode>,
}

#[derive(Debug, Serialize)]
struct JobResult {
    instance: String,
    algorithm: Algorithm,
    summary: Option<String>,
    passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn short_hash(bytes: &[u8]) -> String {
    hex::encode(&Sha256::digest(bytes)[..6])
}

/// Instance source plus the stem its output files share.
struct Source {
    instance: ProblemInstance,
    stem: String,
    /// Canonical text the job hash is taken over.
    key: String,
}

pub fn cmd_batch(global: &Global, args: &BatchArgs) -> anyhow::Result<Status> {
    let text = fs::read_to_string(&args.plan)
        .with_context(|| format!("reading {}", args.plan.display()))?;
    let plan: BatchPlan =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", args.plan.display()))?;
    if plan.algorithms.is_empty() || (plan.instances.is_empty() && plan.files.is_empty()) {
        bail!("the batch plan needs at least one instance and one algorithm");
    }
    for spec in &plan.instances {
        spec.validate()?;
    }
    fs::create_dir_all(&global.out_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()?;

    let sources: Vec<anyhow::Result<Source>> = pool.install(|| {
        let generated = plan.instances.par_iter().map(|spec| {
            let key = serde_json::to_string(spec)?;
            let instance = generate(spec)?;
            let stem = format!("{}-{}", spec.default_name(), short_hash(key.as_bytes()));
            let path = global.out_dir.join(format!("{stem}.json"));
            fs::write(&path, instance.to_json()? + "\n")
                .with_context(|| format!("writing {}", path.display()))?;
            Ok(Source { instance, stem, key })
        });
        let loaded = plan.files.par_iter().map(|path| {
            let instance = load_instance(path, global)?;
            let key = instance.to_json()?;
            let stem = format!("{}-{}", instance.name(), short_hash(key.as_bytes()));
            Ok(Source { instance, stem, key })
        });
        generated.chain(loaded).collect()
    });

    let mut results = Vec::new();
    let mut ready = Vec::new();
    for s in sources {
        match s {
            Ok(s) => ready.push(s),
            Err(e) => results.push(JobResult {
                instance: String::new(),
                algorithm: plan.algorithms[0],
                summary: None,
                passed: false,
                error: Some(format!("{e:#}")),
            }),
        }
    }
    if !results.is_empty() {
        print_json(&results)?;
        bail!("{} batch instances could not be prepared", results.len());
    }

    let jobs: Vec<(&Source, Algorithm)> = ready
        .iter()
        .flat_map(|s| plan.algorithms.iter().map(move |&a| (s, a)))
        .collect();
    let results: Vec<JobResult> = pool.install(|| {
        jobs.par_iter()
            .map(|&(source, algorithm)| {
                let mode = plan.mode.unwrap_or_else(|| default_mode(algorithm));
                let outcome = run_job(global, source, algorithm, mode);
                match outcome {
                    Ok((file, passed)) => JobResult {
                        instance: source.instance.name().to_string(),
                        algorithm,
                        summary: Some(file),
                        passed,
                        error: None,
                    },
                    Err(e) => JobResult {
                        instance: source.instance.name().to_string(),
                        algorithm,
                        summary: None,
                        passed: false,
                        error: Some(format!("{e:#}")),
                    },
                }
            })
            .collect()
    });
    print_json(&results)?;
    if results.iter().any(|r| r.error.is_some()) {
        bail!("some batch jobs failed to run");
    }
    Ok(if results.iter().all(|r| r.passed) { Status::Ok } else { Status::Violation })
}

fn run_job(
    global: &Global,
    source: &Source,
    algorithm: Algorithm,
    mode: Mode,
) -> anyhow::Result<(String, bool)> {
    let config = algorithm_config(global, mode)?;
    let job_key = format!("{}\n{}", source.key, serde_json::to_string(&(algorithm, &config))?);
    let stem = format!(
        "{}-{}-{}",
        source.stem,
        algorithm.short_name(),
        short_hash(job_key.as_bytes())
    );
    let outcome = run(algorithm, &source.instance, &config)?;
    let summary = summarize(&source.instance, &config, &outcome)?;
    let csv = global.out_dir.join(format!("{stem}.csv"));
    write_trace_csv(&outcome.trace, fs::File::create(&csv)?)?;
    let file = format!("{stem}.summary.json");
    write_json(&global.out_dir.join(&file), &summary)?;
    if global.dump_alpha {
        if let Some(dump) = margin_core::algorithms::alpha_dump(&outcome.trace) {
            write_json(&global.out_dir.join(format!("{stem}.alpha.json")), &dump)?;
        }
    }
    Ok((file, summary.passed()))
}
