use crate::config::RunConfig;
use crate::CliError;
use aigwave::aig::{check_equiv_default, write_aiger_file, EquivVerdict};
use aigwave::analysis::{self, svg, OperatorHistogram, PermutationReport, StudyConfig};
use aigwave::designer::{self, resyn2_baseline, CircuitScore, OperatorSequence, SequenceScore};
use aigwave::manifest::{circuit_name, load_split, read_circuit, Manifest, Split};
use aigwave::policy::{self, load_policy, save_policy, Checkpoint, PolicyError};
use aigwave::{Aig, EnvConfig, FeatureKind, OperatorId, Registry, SeedTree, SynthEnv, TrainConfig};
use anyhow::{anyhow, Context};
use rayon::prelude::*;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

const MEMO_CAPACITY: usize = 1 << 16;

fn action_space(cfg: &RunConfig) -> (Arc<Registry>, Vec<String>) {
    if cfg.action_space == "extended" {
        (Arc::new(Registry::extended()), analysis::action_space_names(&OperatorId::ALL))
    } else {
        (Arc::new(Registry::core()), analysis::action_space_names(&OperatorId::CORE))
    }
}

fn env_config(cfg: &RunConfig, names: Vec<String>) -> EnvConfig {
    EnvConfig { horizon: cfg.horizon, reward_scheme: cfg.scheme, feature_kind: cfg.features, action_space: names, ..EnvConfig::default() }
}

fn train_config(cfg: &RunConfig) -> TrainConfig {
    TrainConfig {
        max_steps: cfg.train_steps,
        learning_rate: cfg.learning_rate,
        entropy_bonus: cfg.entropy_bonus,
        seed: cfg.seed,
        hidden_units: cfg.hidden_units,
        ..TrainConfig::default()
    }
}

fn manifest(cfg: &RunConfig) -> Result<(PathBuf, Manifest), CliError> {
    let path = cfg.manifest.clone().ok_or_else(|| CliError::Usage("this command needs --manifest".into()))?;
    let m = Manifest::load(&path)?;
    Ok((path, m))
}

/// Every manifest entry, in file order.
fn load_all(m: &Manifest) -> anyhow::Result<Vec<(String, Aig)>> {
    m.entries.iter().map(|e| Ok((e.name(), read_circuit(&e.path)?))).collect()
}

fn train_split(m: &Manifest) -> anyhow::Result<Vec<(String, Aig)>> {
    let data = load_split(m, Split::Train)?;
    if data.is_empty() {
        return Err(anyhow!("manifest lists no train circuits"));
    }
    Ok(data)
}

/// Creates the output directory and records the resolved config in it.
fn prepare_out(cfg: &RunConfig) -> anyhow::Result<PathBuf> {
    fs::create_dir_all(&cfg.out).with_context(|| format!("cannot create {}", cfg.out.display()))?;
    fs::write(cfg.out.join("config.toml"), cfg.to_toml())?;
    Ok(cfg.out.clone())
}

fn file_name(p: &Path) -> String {
    p.file_name().map_or_else(|| p.display().to_string(), |f| f.to_string_lossy().into_owned())
}

fn load_checkpoint(path: &Path, cfg: &RunConfig, names: &[String]) -> Result<Checkpoint, CliError> {
    let ckpt = load_policy(path).with_context(|| format!("cannot load checkpoint {}", path.display()))?;
    if let Err(PolicyError::SchemaMismatch(msg)) = ckpt.check_compatible(names, cfg.features) {
        let space = if ckpt.action_space.len() == OperatorId::ALL.len() { "extended" } else { "core" };
        return Err(anyhow!("{msg}\nhint: rerun with --action-space {space} --features {}, or retrain the policy with the current settings", ckpt.feature_kind.name()).into());
    }
    Ok(ckpt)
}

pub fn train(cfg: &RunConfig) -> Result<(), CliError> {
    let (_, m) = manifest(cfg)?;
    let data = train_split(&m)?;
    let (registry, names) = action_space(cfg);
    let ec = env_config(cfg, names);
    let tc = train_config(cfg);
    let env = SynthEnv::new(ec.clone(), registry)?.with_memo(MEMO_CAPACITY);
    let out = prepare_out(cfg)?;
    let outcome = policy::train(&data, &env, &tc, |_| {})?;
    let mut log = csv::Writer::from_path(out.join("train_log.csv"))?;
    for row in &outcome.log {
        log.serialize(row)?;
    }
    log.flush()?;
    let ckpt_path = out.join("policy.json");
    save_policy(&Checkpoint::new(outcome.params, &ec, &tc), &ckpt_path)?;
    let tail = &outcome.log[outcome.log.len() - (outcome.log.len() / 10).max(1).min(outcome.log.len())..];
    println!("trained on {} circuits for {} episodes", data.len(), tc.max_steps);
    if !tail.is_empty() {
        println!("final mean episode return: {:.6}", tail.iter().map(|r| r.ret).sum::<f64>() / tail.len() as f64);
    }
    println!("checkpoint: {}", ckpt_path.display());
    Ok(())
}

fn write_scores(score: &SequenceScore, path: &Path) -> anyhow::Result<()> {
    designer::write_score_csv(score, fs::File::create(path)?)?;
    Ok(())
}

pub fn design(cfg: &RunConfig, checkpoint: &Path) -> Result<(), CliError> {
    let (mpath, m) = manifest(cfg)?;
    let (registry, names) = action_space(cfg);
    let ckpt = load_checkpoint(checkpoint, cfg, &names)?;
    let data = train_split(&m)?;
    let out = prepare_out(cfg)?;
    let d = designer::design(&data, &ckpt.params, &names, cfg.seq_len, cfg.candidates, cfg.scheme, &registry, &mut SeedTree::new(cfg.seed).stream("design"))?;
    let mut seq = d.best_sequence().clone();
    seq.provenance.checkpoint = Some(file_name(checkpoint));
    seq.provenance.seed = Some(cfg.seed);
    seq.provenance.corpus = Some(format!("{} (train)", file_name(&mpath)));
    seq.provenance.metric = Some(cfg.scheme.name().into());
    fs::write(out.join("sequence.txt"), seq.to_text())?;
    designer::write_candidates_csv(&d, fs::File::create(out.join("candidates.csv"))?)?;
    write_scores(d.best_score(), &out.join("scores.csv"))?;
    println!("best of {} candidates: mean {} ratio {:.4}", d.candidates.len(), cfg.scheme.name(), d.best_score().aggregate);
    println!("{}", seq.ops.join("; "));
    println!("sequence: {}", out.join("sequence.txt").display());
    Ok(())
}

/// Flips the first output so verification has something to catch.
fn corrupt(aig: &Aig) -> Aig {
    let mut b = aig.to_builder();
    for (i, &o) in aig.outputs().iter().enumerate() {
        b.add_output(if i == 0 { !o } else { o });
    }
    b.build()
}

pub fn optimize(cfg: &RunConfig, sequence: Option<&Path>, circuits: &[PathBuf], inject_fault: bool) -> Result<(), CliError> {
    let seq = match sequence {
        Some(p) => OperatorSequence::parse(&fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?),
        None => resyn2_baseline(),
    };
    let registry = Registry::extended();
    seq.validate(&registry).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut paths: Vec<PathBuf> = circuits.to_vec();
    if cfg.manifest.is_some() {
        paths.extend(manifest(cfg)?.1.entries.into_iter().map(|e| e.path));
    }
    if paths.is_empty() {
        return Err(CliError::Usage("no circuits given; pass files or --manifest".into()));
    }
    let out = prepare_out(cfg)?;
    let results: Vec<anyhow::Result<(String, Aig, CircuitScore, Aig)>> = paths
        .par_iter()
        .map(|p| {
            let name = circuit_name(p);
            let aig = read_circuit(p)?;
            let (score, optimized) = designer::score_circuit(&seq, &name, &aig, &registry)?;
            Ok((name, aig, score, if inject_fault { corrupt(&optimized) } else { optimized }))
        })
        .collect();
    let mut rows = Vec::new();
    let mut failed = 0;
    for (p, r) in paths.iter().zip(results) {
        let (name, input, score, optimized) = match r {
            Ok(x) => x,
            Err(e) => {
                eprintln!("{}: {e:#}", p.display());
                failed += 1;
                continue;
            }
        };
        if cfg.verify {
            match check_equiv_default(&input, &optimized)? {
                EquivVerdict::Inequivalent { counterexample, output } => {
                    let bits: String = counterexample.iter().map(|&b| if b { '1' } else { '0' }).collect();
                    eprintln!("{name}: NOT EQUIVALENT at output {output}; counterexample (input 0 first): {bits}");
                    failed += 1;
                    continue;
                }
                v => println!("{name}: verified ({})", if matches!(v, EquivVerdict::EquivalentExhaustive) { "exhaustive" } else { "sampled" }),
            }
        }
        write_aiger_file(out.join(format!("{name}.aig")), &optimized)?;
        println!("{name}: area {} -> {} ({:.4}), delay {} -> {} ({:.4})", score.init_area, score.final_area, score.area_ratio, score.init_delay, score.final_delay, score.delay_ratio);
        rows.push(score);
    }
    let aggregate = designer::mean(rows.iter().map(|c| if cfg.scheme == aigwave::RewardScheme::AreaFirst { c.area_ratio } else { c.delay_ratio }));
    let score = SequenceScore { scheme: cfg.scheme, per_circuit: rows, aggregate };
    write_scores(&score, &out.join("report.csv"))?;
    println!("mean area ratio {:.4}, mean delay ratio {:.4}", score.mean_area_ratio(), score.mean_delay_ratio());
    if failed > 0 {
        return Err(anyhow!("{failed} of {} circuits failed", paths.len()).into());
    }
    Ok(())
}

fn write_plot(out: &Path, study: &str, cfg: &RunConfig, title: &str, y: &str, cats: &[String], series: &[svg::Series]) -> anyhow::Result<()> {
    if !cfg.plot {
        return Ok(());
    }
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ").to_string();
    let path = out.join(svg::plot_file_name(study, cfg.scheme.name(), &stamp));
    fs::write(&path, svg::bar_chart(title, y, cats, series))?;
    println!("plot: {}", path.display());
    Ok(())
}

fn study_seeds(cfg: &RunConfig) -> Vec<u64> {
    (0..cfg.study_seeds as u64).map(|i| cfg.seed + i).collect()
}

pub fn report(cfg: &RunConfig, study: &str, checkpoint: Option<&Path>, sequence: Option<&Path>) -> Result<(), CliError> {
    let study = analysis::check_study(study).map_err(|e| CliError::Usage(format!("{e}; expected one of {}", analysis::STUDIES.join(", "))))?;
    let (registry, names) = action_space(cfg);
    let seeds = SeedTree::new(cfg.seed);
    let csv_path = cfg.out.join(format!("{study}_{}.csv", cfg.scheme.name()));
    match study {
        "distribution" => {
            let ckpt_path = checkpoint.ok_or_else(|| CliError::Usage("distribution needs --checkpoint".into()))?;
            let ckpt = load_checkpoint(ckpt_path, cfg, &names)?;
            let out = prepare_out(cfg)?;
            let pooled = analysis::operator_distribution(&ckpt.params, &names, cfg.samples, &mut seeds.stream("distribution"))?;
            let mut per_step: Vec<OperatorHistogram> = Vec::new();
            if cfg.manifest.is_some() {
                let data = train_split(&manifest(cfg)?.1)?;
                let env = SynthEnv::new(env_config(cfg, names.clone()), registry)?.with_memo(MEMO_CAPACITY);
                for (name, aig) in &data {
                    let (_, steps) = analysis::rollout_distribution(&env, &ckpt.params, aig, cfg.episodes, seeds.child("rollout").child(name))?;
                    if per_step.is_empty() {
                        per_step = steps;
                    } else {
                        for (acc, h) in per_step.iter_mut().zip(steps) {
                            acc.counts.iter_mut().zip(&h.counts).for_each(|(a, b)| *a += b);
                            acc.n += h.n;
                        }
                    }
                }
            }
            let mut rows: Vec<(Option<usize>, &OperatorHistogram)> = vec![(None, &pooled)];
            rows.extend(per_step.iter().enumerate().map(|(t, h)| (Some(t), h)));
            analysis::write_histogram_csv(&rows, fs::File::create(&csv_path)?)?;
            for (n, f) in names.iter().zip(pooled.frequencies()) {
                println!("{n:>12} {f:.4}");
            }
            let range = (!per_step.is_empty()).then(|| {
                (0..names.len())
                    .map(|a| per_step.iter().map(|h| h.frequencies()[a]).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), f| (lo.min(f), hi.max(f))))
                    .collect()
            });
            let s = svg::Series { label: "pooled".into(), values: pooled.frequencies(), range };
            write_plot(&out, study, cfg, "Operator distribution", "frequency", &names, &[s])?;
        }
        "permutation" => {
            let (_, m) = manifest(cfg)?;
            let seq = match (sequence, checkpoint) {
                (Some(p), _) => OperatorSequence::parse(&fs::read_to_string(p)?),
                (None, Some(c)) => {
                    let ckpt = load_checkpoint(c, cfg, &names)?;
                    designer::sample_sequence(&ckpt.params, &names, cfg.seq_len, &mut seeds.stream("permutation"))?
                }
                (None, None) => return Err(CliError::Usage("permutation needs --sequence or --checkpoint".into())),
            };
            seq.validate(&registry).map_err(|e| CliError::Usage(e.to_string()))?;
            let data = load_all(&m)?;
            let out = prepare_out(cfg)?;
            let mut report = PermutationReport::default();
            for (name, aig) in &data {
                let row = analysis::permutation_study(&seq, name, aig, cfg.shuffles, cfg.scheme, &registry, &mut seeds.child("shuffle").stream(name))?;
                println!("{name}: mean {:.4} max {:.4} min {:.4} std {:.4}", row.mean, row.max, row.min, row.std);
                report.rows.push(row);
            }
            analysis::write_permutation_csv(&report, fs::File::create(&csv_path)?)?;
            let cats: Vec<String> = report.rows.iter().map(|r| r.circuit.clone()).collect();
            let s = svg::Series { label: "mean".into(), values: report.rows.iter().map(|r| r.mean).collect(), range: Some(report.rows.iter().map(|r| (r.min, r.max)).collect()) };
            write_plot(&out, study, cfg, "Shuffled sequences", &format!("final {} ratio", cfg.scheme.name()), &cats, &[s])?;
        }
        "ablation" => {
            let (_, m) = manifest(cfg)?;
            let data = load_all(&m)?;
            let out = prepare_out(cfg)?;
            let sc = StudyConfig { seeds: study_seeds(cfg), max_nodes: cfg.max_nodes, schemes: vec![cfg.scheme], ..StudyConfig::default() };
            let r = analysis::feature_ablation(&data, &FeatureKind::ALL, &env_config(cfg, names), &train_config(cfg), registry, &sc)?;
            analysis::write_ablation_csv(&r, fs::File::create(&csv_path)?)?;
            for row in &r.rows {
                println!("{:>12} {}", row.circuit, row.values.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(" "));
            }
            let cats: Vec<String> = r.rows.iter().map(|x| x.circuit.clone()).collect();
            let series: Vec<svg::Series> = r
                .columns
                .iter()
                .enumerate()
                .map(|(k, (_, kind))| svg::Series { label: kind.name().into(), values: r.rows.iter().map(|x| x.values[k]).collect(), range: None })
                .collect();
            write_plot(&out, study, cfg, "Feature ablation", &format!("final {} ratio", cfg.scheme.name()), &cats, &series)?;
        }
        "extended" => {
            let (_, m) = manifest(cfg)?;
            let data = train_split(&m)?;
            let out = prepare_out(cfg)?;
            let sc = StudyConfig { seeds: study_seeds(cfg), seq_len: cfg.seq_len, n_candidates: cfg.candidates, schemes: vec![cfg.scheme], ..StudyConfig::default() };
            let rows = analysis::extended_operator_study(&data, &env_config(cfg, Vec::new()), &train_config(cfg), &sc)?;
            analysis::write_extended_csv(&rows, fs::File::create(&csv_path)?)?;
            for r in &rows {
                println!("{:>9} {}: area {:.4} delay {:.4}", r.action_space, r.scheme.name(), r.mean_area_ratio, r.mean_delay_ratio);
            }
            let cats = vec!["area".to_string(), "delay".to_string()];
            let series: Vec<svg::Series> = rows.iter().map(|r| svg::Series { label: r.action_space.clone(), values: vec![r.mean_area_ratio, r.mean_delay_ratio], range: None }).collect();
            write_plot(&out, study, cfg, "Core vs extended operators", "mean ratio", &cats, &series)?;
        }
        _ => unreachable!("check_study only returns known names"),
    }
    println!("report: {}", csv_path.display());
    Ok(())
}

pub fn stats(cfg: &RunConfig, circuits: &[PathBuf]) -> Result<(), CliError> {
    let mut paths = circuits.to_vec();
    if cfg.manifest.is_some() {
        paths.extend(manifest(cfg)?.1.entries.into_iter().map(|e| e.path));
    }
    if paths.is_empty() {
        return Err(CliError::Usage("no circuits given; pass files or --manifest".into()));
    }
    let mut w = csv::Writer::from_writer(std::io::stdout());
    w.write_record(["circuit", "inputs", "outputs", "ands", "levels", "pct_ands", "pct_nots"])?;
    for p in &paths {
        let aig = read_circuit(p)?;
        let s = aig.stats();
        w.write_record([
            circuit_name(p),
            aig.num_inputs().to_string(),
            aig.num_outputs().to_string(),
            s.nodes.to_string(),
            s.levels.to_string(),
            format!("{:.4}", s.pct_ands),
            format!("{:.4}", s.pct_nots),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn import(input: &Path, output: &Path) -> Result<(), CliError> {
    if input == output {
        return Err(CliError::Usage("refusing to overwrite the input file".into()));
    }
    let aig = read_circuit(input)?;
    write_aiger_file(output, &aig)?;
    println!("{}: {} inputs, {} outputs, {} ands, {} levels", output.display(), aig.num_inputs(), aig.num_outputs(), aig.num_ands(), aig.depth());
    Ok(())
}
