use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{anyhow, Context, Result};
use serde::Serialize;
use serde_json::Value;
use symtrace_core::llm::{generate_batch, GenerationRequest};
use symtrace_core::problems::{
    generate_logicasker_with, load_problems, save_problems, split_even, GeneratorConfig, Problem,
    ProblemFormat,
};
use symtrace_core::rules::{verify_trajectory, StepVerdict, VerdictStatus};
use symtrace_core::supervision::{
    build_dpo_pairs, export_dpo_dataset, export_prm_dataset, export_sft_dataset, group_by_problem,
    judgments_from_labels, judgments_from_scores, mc_label, read_jsonl, score_trajectory,
    select_trajectories, write_jsonl, PreferencePair, PrmScore, RemoteScorer, Scorer, StepLabel,
    SymbolicScorer,
};
use symtrace_core::trajectory::{
    build_sampling_prompt_with, parse_trajectory, read_trajectories, write_trajectories, Trajectory,
};
use symtrace_core::Label;
use tracing::{info, warn};

use crate::config::{PipelineConfig, ScorerKind};
use crate::{
    Cli, Command, DpoPairsArgs, ExportArgs, ExportKind, GenProblemsArgs, InputFormat,
    InvariantViolation, LabelArgs, ProblemInput, SampleArgs, ScoreArgs, SelectArgs, VerifyArgs,
};

pub fn run(cli: Cli) -> Result<()> {
    let mut config = PipelineConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::GenProblems(a) => gen_problems(&mut config, a),
        Command::Sample(a) => sample(&mut config, a),
        Command::Label(a) => label(&mut config, a),
        Command::Verify(a) => verify(&config, a),
        Command::Score(a) => score(&mut config, a),
        Command::Select(a) => select(&mut config, a),
        Command::DpoPairs(a) => dpo_pairs(&mut config, a),
        Command::Export(a) => export(&config, a),
        Command::Evaluate(a) => {
            let problems = load_problem_map(&config, &a.input)?;
            let trajs = load_traces(&pick(a.traces, &config.paths.traces, "--traces")?)?;
            print!("{}", evaluate(&trajs, &problems)?);
            Ok(())
        }
    }
}

fn pick(flag: Option<PathBuf>, configured: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
    flag.or_else(|| configured.clone())
        .ok_or_else(|| anyhow!("{name} is required (flag or config `paths`)"))
}

fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

fn load_problem_map(
    config: &PipelineConfig,
    input: &ProblemInput,
) -> Result<HashMap<String, Problem>> {
    let path = pick(input.problems.clone(), &config.paths.problems, "--problems")?;
    let format = match input.format {
        InputFormat::Native => ProblemFormat::NativeJson,
        InputFormat::Folio => ProblemFormat::FolioJson,
    };
    let problems = load_problems(&path, format)?;
    let mut map = HashMap::with_capacity(problems.len());
    for p in problems {
        let id = p.id.clone();
        if map.insert(id.clone(), p).is_some() {
            return Err(InvariantViolation(format!(
                "duplicate problem id `{id}` in {}",
                path.display()
            ))
            .into());
        }
    }
    Ok(map)
}

fn load_traces(path: &Path) -> Result<Vec<Trajectory>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_trajectories(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn save_traces(path: &Path, trajs: &[Trajectory]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_trajectories(std::io::BufWriter::new(file), trajs)
        .with_context(|| format!("writing {}", path.display()))
}

fn problem_for<'a>(problems: &'a HashMap<String, Problem>, t: &Trajectory) -> Result<&'a Problem> {
    problems.get(&t.problem_id).ok_or_else(|| {
        InvariantViolation(format!(
            "trajectory {} refers to unknown problem `{}`",
            t.id(),
            t.problem_id
        ))
        .into()
    })
}

fn gen_problems(config: &mut PipelineConfig, a: GenProblemsArgs) -> Result<()> {
    let s = &mut config.problems;
    set(&mut s.lengths, a.lengths);
    set(&mut s.count, a.count);
    set(&mut s.seed, a.seed);
    set(&mut s.distractors, a.distractors);
    config.validate()?;
    let out = pick(a.out, &config.paths.problems, "--out")?;
    let s = &config.problems;
    let generator = GeneratorConfig {
        distractors: s.distractors,
        ..Default::default()
    };
    let problems = generate_logicasker_with(s.count, &s.lengths, s.seed, &generator)?;
    for (i, p) in problems.iter().enumerate() {
        p.validate(i)?;
    }
    let (train, dev, test) = split_even(&problems, s.seed);
    let splits: HashMap<String, _> = train
        .iter()
        .chain(&dev)
        .chain(&test)
        .map(|p| (p.id.clone(), p.split))
        .collect();
    let problems: Vec<Problem> = problems
        .into_iter()
        .map(|mut p| {
            p.split = splits[&p.id];
            p
        })
        .collect();
    save_problems(&out, &problems)?;
    let trues = problems.iter().filter(|p| p.label == Label::True).count();
    println!(
        "wrote {} problems to {} (True {}, False {}; train {}, dev {}, test {})",
        problems.len(),
        out.display(),
        trues,
        problems.len() - trues,
        train.len(),
        dev.len(),
        test.len()
    );
    Ok(())
}

fn sample(config: &mut PipelineConfig, a: SampleArgs) -> Result<()> {
    set(&mut config.generation.n, a.n);
    set(&mut config.generation.seed, a.seed);
    set(&mut config.backend.temperature, a.temperature);
    set(&mut config.backend.parallelism, a.parallelism);
    config.validate()?;
    let out = pick(a.out, &config.paths.traces, "--out")?;
    let problems = sorted_problems(load_problem_map(config, &a.input)?);
    let backend = config.make_backend();
    let opts = config.prompt_options();
    let g = &config.generation;
    let b = &config.backend;

    let mut keys = Vec::new();
    let mut reqs = Vec::new();
    for p in &problems {
        let prompt = build_sampling_prompt_with(p, &opts);
        for i in 0..g.n {
            let seed = g.seed.wrapping_add(i as u64);
            keys.push((p, i, seed));
            reqs.push(GenerationRequest::from_prompt(
                &prompt,
                b.model.clone(),
                b.temperature,
                b.max_tokens,
                Some(seed),
            ));
        }
    }
    let responses = generate_batch(backend.as_ref(), &reqs, b.parallelism);
    let generator = backend.id();
    let mut trajs = Vec::new();
    let (mut gen_failures, mut parse_failures) = (0, 0);
    for ((p, i, seed), resp) in keys.into_iter().zip(responses) {
        let resp = match resp {
            Ok(r) => r,
            Err(e) => {
                warn!(problem = %p.id, sample = i, "generation failed: {e}");
                gen_failures += 1;
                continue;
            }
        };
        match parse_trajectory(&resp.text, &p.id) {
            Ok(mut t) => {
                t.generator = generator.clone();
                t.seed_meta = BTreeMap::from([
                    ("sample_index".to_string(), Value::from(i)),
                    ("seed".to_string(), Value::from(seed)),
                    ("temperature".to_string(), Value::from(b.temperature)),
                    ("model".to_string(), Value::from(b.model.clone())),
                ]);
                trajs.push(t);
            }
            Err(e) => {
                warn!(problem = %p.id, sample = i, "unparseable trajectory: {e}");
                parse_failures += 1;
            }
        }
    }
    save_traces(&out, &trajs)?;
    let mut answers: BTreeMap<String, usize> = BTreeMap::new();
    for t in &trajs {
        *answers
            .entry(t.final_answer.map_or("none".into(), |l| l.to_string()))
            .or_default() += 1;
    }
    println!(
        "wrote {} trajectories to {} ({} generation failures, {} parse failures)",
        trajs.len(),
        out.display(),
        gen_failures,
        parse_failures
    );
    println!(
        "answers: {}",
        answers
            .iter()
            .map(|(k, v)| format!("{k} {v}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    Ok(())
}

fn sorted_problems(map: HashMap<String, Problem>) -> Vec<Problem> {
    let mut v: Vec<Problem> = map.into_values().collect();
    v.sort_by(|a, b| a.id.cmp(&b.id));
    v
}

fn label(config: &mut PipelineConfig, a: LabelArgs) -> Result<()> {
    set(&mut config.mc.n_samples, a.n_samples);
    set(&mut config.mc.k, a.k);
    set(&mut config.mc.temperature, a.temperature);
    set(&mut config.backend.parallelism, a.parallelism);
    if a.max_prompt_chars.is_some() {
        config.mc.max_prompt_chars = a.max_prompt_chars;
    }
    config.validate()?;
    let out = pick(a.out, &config.paths.labels, "--out")?;
    let problems = load_problem_map(config, &a.input)?;
    let trajs = load_traces(&pick(a.traces, &config.paths.traces, "--traces")?)?;
    let backend = config.make_backend();
    let mc = config.mc_config();
    let mut labels: Vec<StepLabel> = Vec::new();
    let mut skipped = 0;
    for t in &trajs {
        let problem = problem_for(&problems, t)?;
        if t.steps.is_empty() {
            warn!(trajectory = %t.id(), "no steps to label");
            continue;
        }
        let result = mc_label(problem, t, backend.as_ref(), &mc)?;
        for s in &result.skipped {
            warn!(trajectory = %s.trajectory_id, step = s.step_index, "prefix skipped: {}", s.reason);
        }
        skipped += result.skipped.len();
        labels.extend(result.labels);
        info!(trajectory = %t.id(), "labeled");
    }
    write_jsonl(&out, &labels)?;
    let positive = labels.iter().filter(|l| l.is_positive()).count();
    println!(
        "wrote {} step labels for {} trajectories to {} (+1: {}, -1: {}, skipped prefixes: {})",
        labels.len(),
        trajs.len(),
        out.display(),
        positive,
        labels.len() - positive,
        skipped
    );
    Ok(())
}

#[derive(Serialize)]
struct VerdictRecord<'a> {
    trajectory_id: String,
    problem_id: &'a str,
    verdicts: Vec<StepVerdict>,
}

fn verify(config: &PipelineConfig, a: VerifyArgs) -> Result<()> {
    let out = pick(a.out, &config.paths.verdicts, "--out")?;
    let problems = load_problem_map(config, &a.input)?;
    let trajs = load_traces(&pick(a.traces, &config.paths.traces, "--traces")?)?;
    let mut records = Vec::with_capacity(trajs.len());
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for t in &trajs {
        let verdicts = verify_trajectory(problem_for(&problems, t)?, t);
        for v in &verdicts {
            let key = match v.status {
                VerdictStatus::VerifiedByRule => "verified by rule",
                VerdictStatus::VerifiedSemantically => "verified semantically",
                VerdictStatus::Invalid => "invalid",
                VerdictStatus::Unparseable => "unparseable",
            };
            *counts.entry(key.into()).or_default() += 1;
        }
        records.push(VerdictRecord {
            trajectory_id: t.id(),
            problem_id: &t.problem_id,
            verdicts,
        });
    }
    write_jsonl(&out, &records)?;
    println!(
        "wrote verdicts for {} trajectories to {}",
        records.len(),
        out.display()
    );
    for (k, v) in counts {
        println!("  {k}: {v}");
    }
    Ok(())
}

fn score(config: &mut PipelineConfig, a: ScoreArgs) -> Result<()> {
    set(&mut config.scorer.kind, a.scorer);
    if a.scorer_url.is_some() {
        config.scorer.url = a.scorer_url;
    }
    let out = pick(a.out, &config.paths.scores, "--out")?;
    let problems = load_problem_map(config, &a.input)?;
    let trajs = load_traces(&pick(a.traces, &config.paths.traces, "--traces")?)?;
    let scorer: Box<dyn Scorer> = match config.scorer.kind {
        ScorerKind::Symbolic => Box::new(SymbolicScorer),
        ScorerKind::Remote => {
            let url = config
                .scorer
                .url
                .clone()
                .ok_or_else(|| anyhow!("the remote scorer needs --scorer-url or scorer.url"))?;
            Box::new(RemoteScorer::new(
                url,
                Duration::from_secs(config.scorer.timeout_s.max(1)),
            ))
        }
    };
    let scores = trajs
        .iter()
        .map(|t| {
            Ok(score_trajectory(
                t,
                problem_for(&problems, t)?,
                scorer.as_ref(),
            )?)
        })
        .collect::<Result<Vec<PrmScore>>>()?;
    write_jsonl(&out, &scores)?;
    let mean = if scores.is_empty() {
        0.0
    } else {
        scores.iter().map(|s| s.trajectory_prob).sum::<f64>() / scores.len() as f64
    };
    println!(
        "wrote {} scores to {} (mean trajectory probability {mean:.4})",
        scores.len(),
        out.display()
    );
    Ok(())
}

fn select(config: &mut PipelineConfig, a: SelectArgs) -> Result<()> {
    set(&mut config.selection.step_threshold, a.threshold);
    config.validate()?;
    let out = pick(a.out, &config.paths.selected, "--out")?;
    let problems = load_problem_map(config, &a.input)?;
    let trajs = load_traces(&pick(a.traces, &config.paths.traces, "--traces")?)?;
    let judgments = match (a.scores, a.labels) {
        (_, Some(labels)) => judgments_from_labels(&read_jsonl::<StepLabel>(&labels)?, &trajs),
        (scores, None) => {
            let path = pick(scores, &config.paths.scores, "--scores or --labels")?;
            judgments_from_scores(
                &read_jsonl::<PrmScore>(&path)?,
                config.selection.step_threshold,
            )
        }
    };
    let selected = select_trajectories(&trajs, &judgments, &problems);
    save_traces(&out, &selected)?;
    println!(
        "selected {} of {} trajectories into {}",
        selected.len(),
        trajs.len(),
        out.display()
    );
    Ok(())
}

fn dpo_pairs(config: &mut PipelineConfig, a: DpoPairsArgs) -> Result<()> {
    set(&mut config.dpo.threshold, a.threshold);
    config.validate()?;
    let out = pick(a.out, &config.paths.pairs, "--out")?;
    let trajs = load_traces(&pick(a.traces, &config.paths.traces, "--traces")?)?;
    let scores: Vec<PrmScore> = read_jsonl(&pick(a.scores, &config.paths.scores, "--scores")?)?;
    let groups = group_by_problem(&trajs, &scores);
    let grouped: usize = groups.values().map(Vec::len).sum();
    if grouped < scores.len() {
        return Err(InvariantViolation(format!(
            "{} scores refer to trajectories missing from the trace file",
            scores.len() - grouped
        ))
        .into());
    }
    let pairs = build_dpo_pairs(&groups, config.dpo.threshold);
    write_jsonl(&out, &pairs)?;
    println!(
        "wrote {} preference pairs over {} problems to {}",
        pairs.len(),
        groups.len(),
        out.display()
    );
    Ok(())
}

fn export(config: &PipelineConfig, a: ExportArgs) -> Result<()> {
    let problems = load_problem_map(config, &a.input)?;
    let opts = config.prompt_options();
    let p = &config.paths;
    let (out, written) = match a.kind {
        ExportKind::Prm => {
            let out = pick(a.out, &p.prm, "--out")?;
            let trajs = load_traces(&pick(a.traces, &p.traces, "--traces")?)?;
            let labels: Vec<StepLabel> = read_jsonl(&pick(a.labels, &p.labels, "--labels")?)?;
            (
                out.clone(),
                export_prm_dataset(&labels, &trajs, &problems, &opts, &out)?,
            )
        }
        ExportKind::Sft => {
            let out = pick(a.out, &p.sft, "--out")?;
            let selected = load_traces(&pick(a.selected, &p.selected, "--selected")?)?;
            (
                out.clone(),
                export_sft_dataset(&selected, &problems, &opts, &out)?,
            )
        }
        ExportKind::Dpo => {
            let out = pick(a.out, &p.dpo, "--out")?;
            let trajs = load_traces(&pick(a.traces, &p.traces, "--traces")?)?;
            let pairs: Vec<PreferencePair> = read_jsonl(&pick(a.pairs, &p.pairs, "--pairs")?)?;
            (
                out.clone(),
                export_dpo_dataset(&pairs, &trajs, &problems, &opts, &out)?,
            )
        }
    };
    println!("wrote {written} records to {}", out.display());
    Ok(())
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Evaluation {
    pub total: usize,
    pub correct: usize,
    /// Keyed by (gold, predicted); a missing answer is "none".
    pub confusion: BTreeMap<(String, String), usize>,
    pub total_steps: usize,
    pub total_formulas: usize,
}

impl Evaluation {
    pub fn accuracy(&self) -> f64 {
        ratio(self.correct, self.total)
    }

    pub fn mean_steps(&self) -> f64 {
        ratio(self.total_steps, self.total)
    }

    pub fn mean_formulas(&self) -> f64 {
        ratio(self.total_formulas, self.total)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

impl std::fmt::Display for Evaluation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "trajectories: {}", self.total)?;
        writeln!(
            f,
            "accuracy: {} ({}/{})",
            self.accuracy(),
            self.correct,
            self.total
        )?;
        writeln!(f, "confusion (gold -> predicted):")?;
        for ((gold, predicted), n) in &self.confusion {
            writeln!(f, "  {gold} -> {predicted}: {n}")?;
        }
        writeln!(f, "mean steps per trajectory: {}", self.mean_steps())?;
        writeln!(f, "mean formulas per trajectory: {}", self.mean_formulas())
    }
}

/// Accuracy against gold labels plus shape statistics. Trajectories without
/// a final answer count as incorrect.
pub fn evaluate(trajs: &[Trajectory], problems: &HashMap<String, Problem>) -> Result<Evaluation> {
    let mut e = Evaluation::default();
    for t in trajs {
        let gold = problem_for(problems, t)?.label;
        e.total += 1;
        if t.final_answer == Some(gold) {
            e.correct += 1;
        }
        let predicted = t.final_answer.map_or("none".to_string(), |l| l.to_string());
        *e.confusion
            .entry((gold.to_string(), predicted))
            .or_default() += 1;
        e.total_steps += t.steps.len();
        e.total_formulas += t.formula_count();
    }
    Ok(e)
}
