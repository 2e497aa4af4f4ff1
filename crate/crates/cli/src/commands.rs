use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;
use m2o::actors::KeyRegistry;
use m2o::batch;
use m2o::costmodel::{self, TimingModel};
use m2o::crypto::rng::seeded;
use m2o::crypto::KeySize;
use m2o::netsim::{self, evaluate, scenario_suite, ScenarioResult, SimError};

use crate::config::RunConfig;
use crate::{usage, CalibrateArgs, CostsArgs, RunArgs, SuiteArgs};

pub const SUITE_GROUP_SIZES: [usize; 3] = [2, 3, 10];

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn sim_error(e: SimError) -> anyhow::Error {
    match e {
        SimError::Config(msg) => usage(msg),
        other => other.into(),
    }
}

pub fn run(args: RunArgs) -> anyhow::Result<bool> {
    let cfg = RunConfig::resolve(&args.sim, args.nc, args.scenario.as_deref(), args.out.as_deref())?;
    let group = cfg.group(cfg.nc)?;
    let suite = scenario_suite(&group, cfg.seed);
    let Some(scenario) = suite.iter().find(|s| s.name == cfg.scenario) else {
        let names: Vec<_> = suite.iter().map(|s| s.name).collect();
        return Err(usage(format!("unknown scenario `{}` (known: {})", cfg.scenario, names.join(", "))));
    };

    let (_, transcript) = netsim::run_fresh(&group, cfg.key_size, &scenario.script, cfg.seed).map_err(sim_error)?;
    emit(cfg.out.as_deref().map(Path::new), &transcript.dump())?;

    let verdict = evaluate(scenario, &transcript);
    let recon = costmodel::reconcile(&transcript, cfg.nc)?;
    eprintln!("scenario {} nc={}: {}", verdict.name, cfg.nc, if verdict.passed { "as expected" } else { "MISMATCH" });
    for f in &verdict.failures {
        eprintln!("  {f}");
    }
    for (id, a) in &transcript.actors {
        eprintln!("  {id} {} {} at {}", a.role, a.status, a.step);
    }
    eprint!("{}", recon.render());
    // only a clean run has to land on the formulas
    let recon_ok = scenario.name != "honest" || recon.is_clean();
    Ok(verdict.passed && recon_ok)
}

fn suite_for(nc: usize, cfg: &RunConfig) -> anyhow::Result<Vec<(ScenarioResult, Option<String>)>> {
    let group = cfg.group(nc)?;
    let registry = KeyRegistry::provision(&group, cfg.key_size, &mut seeded(cfg.seed, u64::MAX));
    let mut rows = Vec::new();
    for s in scenario_suite(&group, cfg.seed) {
        let row = match netsim::run(&group, &registry, &s.script, cfg.seed) {
            Ok(t) => (evaluate(&s, &t), None),
            Err(SimError::Config(msg)) => return Err(usage(msg)),
            Err(e) => (ScenarioResult { name: s.name, nc, passed: false, failures: vec![] }, Some(e.to_string())),
        };
        rows.push(row);
    }
    Ok(rows)
}

pub fn scenarios(args: SuiteArgs) -> anyhow::Result<bool> {
    let cfg = RunConfig::resolve(&args.sim, None, None, args.out.as_deref())?;
    let per_nc: Vec<_> = batch::map(SUITE_GROUP_SIZES.to_vec(), |nc| suite_for(nc, &cfg));
    let mut table = format!("{:<22} {:>4}  {:<6} notes\n", "scenario", "nc", "result");
    let mut all = true;
    for rows in per_nc {
        for (r, err) in rows? {
            all &= r.passed;
            let notes = err.unwrap_or_else(|| r.failures.join("; "));
            writeln!(table, "{:<22} {:>4}  {:<6} {notes}", r.name, r.nc, if r.passed { "pass" } else { "FAIL" })?;
        }
    }
    emit(cfg.out.as_deref().map(Path::new), &table)?;
    Ok(all)
}

pub fn parse_range(s: &str) -> anyhow::Result<std::ops::RangeInclusive<usize>> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| usage(format!("bad range `{s}`")));
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (num(a)?, num(b.strip_prefix('=').unwrap_or(b))?),
        None => {
            let v = num(s)?;
            (v, v)
        }
    };
    if a < 2 || a > b {
        return Err(usage(format!("range `{s}` must be non-empty and start at 2 or more")));
    }
    Ok(a..=b)
}

fn load_timing(name: &str) -> anyhow::Result<TimingModel> {
    if let Some(t) = TimingModel::preset(name) {
        return Ok(t);
    }
    let text = std::fs::read_to_string(name)
        .map_err(|e| usage(format!("`{name}` is neither a preset nor a readable file: {e}")))?;
    TimingModel::from_toml(&text).map_err(|e| usage(format!("{name}: {e}")))
}

pub fn costs(args: CostsArgs) -> anyhow::Result<bool> {
    let range = parse_range(&args.range)?;
    let timing = load_timing(&args.timing_preset)?;
    let rows = costmodel::cost_table(range, &timing).map_err(|e| usage(e.to_string()))?;
    emit(args.out.as_deref(), &costmodel::to_csv(&rows))?;
    Ok(true)
}

pub fn calibrate(args: CalibrateArgs) -> anyhow::Result<bool> {
    let key_size: KeySize = args.key_size.parse().map_err(usage)?;
    if args.iterations < costmodel::MIN_ITERATIONS {
        return Err(usage(format!(
            "--iterations must be at least {}, got {}",
            costmodel::MIN_ITERATIONS,
            args.iterations
        )));
    }
    let model = costmodel::calibrate(args.iterations, key_size)?;
    emit(args.out.as_deref(), &model.to_toml())?;
    Ok(true)
}
