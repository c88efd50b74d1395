use std::io::Write;
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use tabenc::align::{generate, Task, TemplateSet};
use tabenc::curation::{
    mask_report, read_token_scores_csv, read_token_scores_jsonl, to_jsonl, FilterRules, NotChecked,
    SlmConfig, TupleFilter, TupleSample,
};
use tabenc::gradients::gradient_suite;
use tabenc::hybrid::{serialize_variant, variant_ids, CANONICAL};
use tabenc::model::{Model, ModelConfig};
use tabenc::numerics::Checkpoint;
use tabenc::pretrain::{
    pretrain as pretrain_encoder, retrieval_eval, train_adapter_proxy, ColumnHead,
    ContrastiveConfig,
};
use tabenc::table::{
    clean as clean_table, to_json, CleanReport, HorizontalPolicy, RejectReason, RuleEvent, RuleId,
    RuleSet,
};

use crate::io::{load_table, load_tables, read_text, require_file, table_files, write_atomic};
use crate::{
    AlignTask, CleanArgs, CliError, EncodeArgs, FilterArgs, FilterMode, GenAlignArgs,
    GradcheckArgs, PretrainArgs, SerializeArgs,
};

/// Fallback seed for stochastic commands.
pub const SEED_ENV: &str = "TABENC_SEED";

fn say(out: &mut dyn Write, line: impl std::fmt::Display) -> Result<(), CliError> {
    writeln!(out, "{line}").map_err(CliError::output)
}

/// `--seed`, then `TABENC_SEED`, then the config file.
fn resolve_seed(flag: Option<u64>, config: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    if let Ok(v) = std::env::var(SEED_ENV) {
        return v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{SEED_ENV}={v:?} is not an unsigned integer")));
    }
    config.ok_or_else(|| {
        CliError::Usage(format!(
            "a seed is required: pass --seed, set {SEED_ENV} or add \"seed\" to the config"
        ))
    })
}

#[derive(Debug, Serialize)]
struct ReportFile<'a> {
    table: &'a str,
    accepted: bool,
    fired_rules: Vec<RuleId>,
    reasons: Vec<RejectReason>,
    log: &'a [RuleEvent],
}

fn report_json(name: &str, r: &CleanReport) -> String {
    let reasons = match &r.verdict {
        tabenc::table::Verdict::Rejected(v) => v.clone(),
        tabenc::table::Verdict::Accepted(_) => Vec::new(),
    };
    let file = ReportFile {
        table: name,
        accepted: r.is_accepted(),
        fired_rules: r.fired_rules(),
        reasons,
        log: &r.log,
    };
    let mut s = serde_json::to_string_pretty(&file).expect("report serializes");
    s.push('\n');
    s
}

fn disable_rule(rules: &mut RuleSet, id: &str) -> Result<(), CliError> {
    match id {
        "horizontal-transpose" => rules.horizontal = HorizontalPolicy::Ignore,
        "duplicate-column" => rules.duplicate_columns = false,
        "underscore-column" => rules.underscore_columns = false,
        "long-field-column" => rules.long_fields = false,
        "nan-column" => rules.nan_columns = false,
        "nan-row" => rules.nan_rows = false,
        "first-value-is-name" => rules.first_value_is_name = false,
        other => return Err(CliError::Usage(format!("unknown cleaning rule {other:?}"))),
    }
    Ok(())
}

pub fn clean(a: &CleanArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut rules = match &a.rules {
        Some(p) => {
            require_file(p)?;
            serde_json::from_str(&read_text(p)?)
                .map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?
        }
        None => RuleSet::default(),
    };
    for id in &a.disable {
        disable_rule(&mut rules, id)?;
    }
    let files = table_files(&a.input)?;
    let (mut accepted, mut rejected, mut bad) = (0, 0, 0);
    for path in &files {
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("table")
            .to_string();
        let table = match load_table(path) {
            Ok(t) => t,
            Err(e) if a.skip_bad => {
                say(out, format!("skipped {}: {e}", path.display()))?;
                bad += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let report = clean_table(&table, &rules);
        write_atomic(
            &a.output.join("reports").join(format!("{stem}.json")),
            report_json(table.name(), &report).as_bytes(),
        )?;
        match report.table() {
            Some(t) => {
                write_atomic(
                    &a.output.join("tables").join(format!("{stem}.json")),
                    to_json(t).as_bytes(),
                )?;
                accepted += 1;
            }
            None => rejected += 1,
        }
    }
    let mut summary = format!(
        "{} tables, {accepted} accepted, {rejected} rejected",
        files.len()
    );
    if bad > 0 {
        summary.push_str(&format!(", {bad} unreadable"));
    }
    say(out, summary)
}

/// Contents of the `--config` file for `pretrain`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub model: ModelConfig,
    pub contrastive: ContrastiveConfig,
    /// Adapter proxy-training steps after encoder pretraining.
    pub adapter_steps: usize,
}

pub fn pretrain(a: &PretrainArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg: RunConfig = match &a.config {
        Some(p) => {
            require_file(p)?;
            serde_json::from_str(&read_text(p)?)
                .map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?
        }
        None => RunConfig::default(),
    };
    let seed = resolve_seed(a.seed, cfg.seed)?;
    if let Some(s) = a.steps {
        cfg.contrastive.steps = s;
    }
    if let Some(s) = a.adapter_steps {
        cfg.adapter_steps = s;
    }
    cfg.model
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    cfg.contrastive
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;

    // One stream of derived seeds: init, encoder training, adapter training, evaluation.
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    let init_seed = seeds.next_u64();
    let train = ContrastiveConfig {
        seed: seeds.next_u64(),
        ..cfg.contrastive.clone()
    };
    let adapter_train = ContrastiveConfig {
        seed: seeds.next_u64(),
        steps: cfg.adapter_steps,
        ..cfg.contrastive.clone()
    };
    let eval = ContrastiveConfig {
        seed: seeds.next_u64(),
        ..cfg.contrastive.clone()
    };

    let tables = load_tables(&a.tables)?;
    if tables.is_empty() {
        return Err(CliError::Data(format!(
            "no tables in {}",
            a.tables.display()
        )));
    }
    let mut model = Model::init(cfg.model.clone(), init_seed).map_err(CliError::data)?;
    let (encoder, losses) = pretrain_encoder(&tables, &model.embedder, &train, &model.encoder)
        .map_err(CliError::data)?;
    model.encoder = encoder;
    if cfg.adapter_steps > 0 {
        let (adapter, _) = train_adapter_proxy(
            &tables,
            &model.embedder,
            &adapter_train,
            &model.encoder,
            &model.adapter,
        )
        .map_err(CliError::data)?;
        model.adapter = adapter;
    }

    write_atomic(&a.checkpoint, &model.to_checkpoint().to_bytes())?;
    let mut csv = String::from("step,loss\n");
    for (i, l) in losses.iter().enumerate() {
        csv.push_str(&format!("{i},{l:?}\n"));
    }
    write_atomic(&a.losses, csv.as_bytes())?;

    if let (Some(first), Some(last)) = (losses.first(), losses.last()) {
        say(
            out,
            format!(
                "steps: {}, first loss: {first:.6}, last loss: {last:.6}",
                losses.len()
            ),
        )?;
    }
    let acc = retrieval_eval(
        &tables,
        &model.embedder,
        &model.encoder,
        ColumnHead::EncoderPool,
        &eval,
    )
    .map_err(CliError::data)?;
    say(out, format!("retrieval top-1 accuracy: {acc:.4}"))?;
    if cfg.adapter_steps > 0 {
        let acc = retrieval_eval(
            &tables,
            &model.embedder,
            &model.encoder,
            ColumnHead::Adapter(&model.adapter),
            &eval,
        )
        .map_err(CliError::data)?;
        say(out, format!("adapter retrieval top-1 accuracy: {acc:.4}"))?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct EncodedColumn<'a> {
    name: &'a str,
    vectors: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize)]
struct EncodedTable<'a> {
    table: &'a str,
    columns: Vec<EncodedColumn<'a>>,
}

pub fn encode(a: &EncodeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    require_file(&a.table)?;
    require_file(&a.checkpoint)?;
    let ckpt = Checkpoint::from_bytes(&std::fs::read(&a.checkpoint).map_err(CliError::data)?)
        .map_err(CliError::data)?;
    let model = Model::from_checkpoint(&ckpt).map_err(CliError::data)?;
    // Row order cannot affect C(T); sorting rows first makes the bytes agree too.
    let table = load_table(&a.table)?.canonical_row_order();
    let c = model.column_embeddings(&table).map_err(CliError::data)?;
    let (k, d) = (c.shape()[1], c.shape()[2]);
    let columns = table
        .columns()
        .iter()
        .enumerate()
        .map(|(j, col)| EncodedColumn {
            name: &col.name,
            vectors: (0..k)
                .map(|q| c.data()[(j * k + q) * d..(j * k + q + 1) * d].to_vec())
                .collect(),
        })
        .collect();
    let mut text = serde_json::to_string(&EncodedTable {
        table: table.name(),
        columns,
    })
    .map_err(CliError::data)?;
    text.push('\n');
    match &a.output {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => out.write_all(text.as_bytes()).map_err(CliError::output),
    }
}

pub fn serialize(a: &SerializeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if a.list_variants {
        say(out, CANONICAL)?;
        for id in variant_ids() {
            say(out, id)?;
        }
        return Ok(());
    }
    if a.variant != CANONICAL && !variant_ids().contains(&a.variant) {
        return Err(CliError::Usage(format!(
            "unknown variant {:?}; run with --list-variants to see the choices",
            a.variant
        )));
    }
    require_file(&a.table)?;
    let table = load_table(&a.table)?;
    let repr = serialize_variant(&table, &a.variant, a.values_per_col).map_err(CliError::data)?;
    let repr = if a.wrap { repr.wrapped() } else { repr };
    say(out, repr.text)
}

fn load_templates(dir: Option<&Path>) -> Result<TemplateSet, CliError> {
    match dir {
        None => Ok(TemplateSet::default()),
        Some(d) => {
            let col = d.join("column_prediction.txt");
            let cell = d.join("cell_prediction.txt");
            require_file(&col)?;
            require_file(&cell)?;
            TemplateSet::from_texts(&read_text(&col)?, &read_text(&cell)?)
                .map_err(|e| CliError::Usage(e.to_string()))
        }
    }
}

pub fn gen_align(a: &GenAlignArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let seed = resolve_seed(a.seed, None)?;
    let templates = load_templates(a.templates.as_deref())?;
    let tables = load_tables(&a.tables)?;
    if tables.is_empty() && a.count > 0 {
        return Err(CliError::Data(format!(
            "no tables in {}",
            a.tables.display()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(a.count);
    let mut skipped = 0usize;
    for i in 0..a.count {
        let task = match a.task {
            AlignTask::ColumnPrediction => Task::ColumnPrediction,
            AlignTask::CellPrediction => Task::CellPrediction,
            AlignTask::Both if i % 2 == 0 => Task::ColumnPrediction,
            AlignTask::Both => Task::CellPrediction,
        };
        let sample_seed = rng.next_u64();
        // Tables are visited round-robin; one without a usable cell passes
        // the turn to the next.
        let mut made = None;
        for offset in 0..tables.len() {
            let t = &tables[(i + offset) % tables.len()];
            match generate(task, t, sample_seed, &templates) {
                Ok(s) => {
                    made = Some(s);
                    break;
                }
                Err(_) => skipped += 1,
            }
        }
        samples.push(made.ok_or_else(|| {
            CliError::Data(format!("no table can produce a {} sample", task.as_str()))
        })?);
    }
    write_atomic(&a.output, tabenc::align::export_jsonl(&samples).as_bytes())?;
    say(
        out,
        format!(
            "{} samples written ({skipped} table draws skipped)",
            samples.len()
        ),
    )
}

pub fn filter(a: &FilterArgs, out: &mut dyn Write) -> Result<(), CliError> {
    require_file(&a.input)?;
    let text = read_text(&a.input)?;
    let lines = match a.mode {
        FilterMode::Slm => {
            let cfg = SlmConfig {
                threshold: a.threshold,
                inclusive: !a.strict,
                ..SlmConfig::default()
            };
            let is_csv = a
                .input
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
            let rows = if is_csv {
                read_token_scores_csv(&text)
            } else {
                read_token_scores_jsonl(&text)
            }
            .map_err(CliError::data)?;
            to_jsonl(&mask_report(&rows, &cfg).map_err(|e| CliError::Usage(e.to_string()))?)
        }
        FilterMode::Tuple => {
            let mut rules = FilterRules::default();
            for id in &a.disable {
                match id.as_str() {
                    "table-redefinition" => rules.table_redefinition = false,
                    "kind-mismatch" => rules.kind_mismatch = false,
                    "comment-only" => rules.comment_only = false,
                    other => return Err(CliError::Usage(format!("unknown tuple rule {other:?}"))),
                }
            }
            let filter = TupleFilter::new(rules);
            let samples = TupleSample::read_jsonl(&text).map_err(CliError::data)?;
            let verdicts: Vec<_> = samples
                .iter()
                .map(|s| filter.apply(s, &NotChecked))
                .collect();
            to_jsonl(&verdicts)
        }
    };
    match &a.output {
        Some(p) => write_atomic(p, lines.as_bytes()),
        None => out.write_all(lines.as_bytes()).map_err(CliError::output),
    }
}

pub fn gradcheck(a: &GradcheckArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let reports = gradient_suite(a.seed).map_err(CliError::data)?;
    let mut failed = 0;
    for r in &reports {
        let status = if r.passed() { "ok" } else { "FAIL" };
        say(
            out,
            format!(
                "{status:4} {:28} max rel err {:.3e} over {} entries",
                r.name, r.max_rel_err, r.checked
            ),
        )?;
        failed += usize::from(!r.passed());
    }
    if failed > 0 {
        return Err(CliError::Data(format!(
            "{failed} of {} gradient checks failed",
            reports.len()
        )));
    }
    say(out, format!("all {} gradient checks passed", reports.len()))
}
