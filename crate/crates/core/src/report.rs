//! Run manifests, CSV reports and deterministic SVG figures.
//!
//! Every CLI command resolves its inputs into a [`RunConfig`], executes it
//! into an output directory, and records a [`RunManifest`] with enough
//! information to re-execute the run bit-for-bit against fixtures. Figures
//! are generated directly as SVG text so identical inputs produce
//! byte-identical files.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::administration::{administer, PromptContext, SessionPlan, SessionResult};
use crate::analysis::{
    consistency, nearest_population, sae, sample_contexts, steer, BaselineTable, FoundationStat,
    SteeringResult,
};
use crate::donation::{estimate, parse_decline_patterns, DialogScript, DonationEstimate};
use crate::error::{Error, Result};
use crate::questionnaire::{Foundation, FoundationScores, Questionnaire};
use crate::respondent::{
    BackendKind, CacheStore, CachingRespondent, FixtureRespondent, HttpRespondent, MockRespondent,
    ModelConfig, Respondent,
};
use crate::tsne::{embed, PointSet, TsneParams};

/// Resolved, replayable configuration of one command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum RunConfig {
    Administer {
        backend: ModelConfig,
        context: PromptContext,
        plan: SessionPlan,
        /// Questionnaire file; bundled MFQ when absent.
        questionnaire: Option<String>,
        /// Completion cache for live backends.
        cache: Option<String>,
    },
    Compare {
        /// Score CSV files produced by other commands.
        sessions: Vec<String>,
        /// Baseline file; bundled table when absent.
        baselines: Option<String>,
    },
    Consistency {
        backend: ModelConfig,
        plan: SessionPlan,
        corpus: String,
        contexts: usize,
        seed: u64,
        max_chars: usize,
        questionnaire: Option<String>,
        cache: Option<String>,
    },
    Steer {
        backend: ModelConfig,
        plan: SessionPlan,
        target: Foundation,
        /// Candidate catalog; bundled catalog when absent.
        catalog: Option<String>,
        questionnaire: Option<String>,
        cache: Option<String>,
    },
    Embed {
        points: String,
        params: TsneParams,
    },
    Donate {
        backend: ModelConfig,
        context: PromptContext,
        episodes: usize,
        seed: u64,
        script: Option<String>,
        patterns: Option<String>,
        cache: Option<String>,
    },
    Render {
        figure: String,
        input: String,
    },
}

/// Record of one executed run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: RunConfig,
    pub seed: u64,
    pub config_fingerprints: Vec<String>,
    pub timestamp: u64,
    /// Artifact file names relative to the manifest's directory.
    pub artifacts: Vec<String>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<RunManifest> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Report(format!("manifest {}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Report(format!("serialize manifest: {e}")))?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// Build the respondent stack a config describes.
pub fn build_respondent(config: &ModelConfig, cache: Option<&Path>) -> Result<Box<dyn Respondent>> {
    config.validate()?;
    let inner: Box<dyn Respondent> = match config.backend {
        BackendKind::Http => Box::new(HttpRespondent::new(config.clone())?),
        BackendKind::Mock => Box::new(MockRespondent::from_name(&config.target)?),
        BackendKind::Fixture => Box::new(FixtureRespondent::open_dir(Path::new(&config.target))?),
    };
    match cache {
        Some(path) => {
            let store = std::sync::Arc::new(CacheStore::open(path)?);
            Ok(Box::new(CachingRespondent::new(
                BoxedRespondent(inner),
                store,
                true,
            )))
        }
        None => Ok(inner),
    }
}

/// Adapter so a boxed respondent can sit inside generic wrappers.
pub struct BoxedRespondent(pub Box<dyn Respondent>);

impl Respondent for BoxedRespondent {
    fn complete(&self, prompt: &str) -> Result<String> {
        self.0.complete(prompt)
    }

    fn fingerprint_params(&self) -> crate::respondent::FingerprintParams {
        self.0.fingerprint_params()
    }
}

fn load_questionnaire(path: &Option<String>) -> Result<Questionnaire> {
    match path {
        Some(p) => Questionnaire::load_path(Path::new(p)),
        None => Ok(Questionnaire::bundled()),
    }
}

fn fmt3(v: f64) -> String {
    format!("{v:.3}")
}

fn round4(v: f64) -> f64 {
    (v * 10_000.0).round() / 10_000.0
}

/// Scores CSV: one row per labeled score set, three decimals.
pub fn scores_csv(rows: &[(String, FoundationScores)]) -> String {
    let mut out = String::from("label,harm,fairness,ingroup,authority,purity\n");
    for (label, scores) in rows {
        out.push_str(&csv_escape(label));
        for v in scores.as_array() {
            out.push(',');
            out.push_str(&fmt3(v));
        }
        out.push('\n');
    }
    out
}

/// Parse a scores CSV produced by [`scores_csv`].
pub fn parse_scores_csv(text: &str) -> Result<Vec<(String, FoundationScores)>> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Report(format!("scores file: {e}")))?;
        if record.len() != 6 {
            return Err(Error::Report(format!(
                "scores file: expected 6 columns, found {}",
                record.len()
            )));
        }
        let mut vals = [0f64; 5];
        for (i, v) in vals.iter_mut().enumerate() {
            *v = record[1 + i]
                .trim()
                .parse()
                .map_err(|e| Error::Report(format!("scores file: bad number: {e}")))?;
        }
        rows.push((record[0].to_string(), FoundationScores::from_array(vals)));
    }
    if rows.is_empty() {
        return Err(Error::Report("scores file has no rows".into()));
    }
    Ok(rows)
}

fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Table-1-style comparison: one row per (session, baseline) with the SAE,
/// nearest row flagged.
pub fn compare_csv(sessions: &[(String, FoundationScores)], table: &BaselineTable) -> String {
    let mut out = String::from("session,population,affiliation,sae,nearest\n");
    for (label, scores) in sessions {
        let (nearest, _) = nearest_population(scores, table);
        for row in &table.rows {
            let d = sae(scores, &row.scores);
            let flag =
                row.population == nearest.population && row.affiliation == nearest.affiliation;
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                csv_escape(label),
                row.population.name(),
                row.affiliation.name(),
                fmt3(d),
                if flag { "1" } else { "0" }
            ));
        }
    }
    out
}

/// Session JSON document: the full result plus the appendix-style
/// per-question std listing rounded to four decimals.
#[derive(Debug, Serialize, Deserialize)]
pub struct SessionDocument {
    #[serde(flatten)]
    pub result: SessionResult,
    pub question_stds: Vec<f64>,
}

pub fn session_json(result: &SessionResult) -> String {
    let doc = SessionDocument {
        question_stds: result.question_stds().iter().map(|v| round4(*v)).collect(),
        result: result.clone(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("session serializes");
    text.push('\n');
    text
}

fn consistency_csv(stats: &[FoundationStat]) -> String {
    let mut out = String::from("foundation,mean,std,min,q1,median,q3,max\n");
    for s in stats {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            s.foundation.name(),
            fmt3(s.mean),
            format_args!("{:.4}", s.std),
            fmt3(s.min),
            fmt3(s.q1),
            fmt3(s.median),
            fmt3(s.q3),
            fmt3(s.max)
        ));
    }
    out
}

fn steering_csv(result: &SteeringResult) -> String {
    let mut out = String::from("prompt,harm,fairness,ingroup,authority,purity,objective,winner\n");
    for row in &result.table {
        let winner = row.prompt == result.winner_prompt;
        out.push_str(&csv_escape(&row.prompt));
        for v in row.scores.as_array() {
            out.push(',');
            out.push_str(&fmt3(v));
        }
        out.push_str(&format!(
            ",{:.4},{}\n",
            row.objective,
            if winner { "1" } else { "0" }
        ));
    }
    out
}

fn donation_csv(est: &DonationEstimate) -> String {
    let mut out = String::from(
        "context,n,declined,d10,d20,d50,d100,d250,ambiguous,p_declined,p10,p20,p50,p100,p250,expected,std\n",
    );
    out.push_str(&csv_escape(&est.context.label()));
    out.push_str(&format!(",{}", est.n));
    for c in est.counts {
        out.push_str(&format!(",{c}"));
    }
    out.push_str(&format!(",{}", est.ambiguous));
    for p in est.probabilities {
        out.push_str(&format!(",{p:.3}"));
    }
    out.push_str(&format!(",{:.2},{:.2}\n", est.expected, est.std));
    out
}

fn embedding_csv(labels: &[String], coords: &[[f64; 2]]) -> String {
    let mut out = String::from("label,x,y\n");
    for (label, point) in labels.iter().zip(coords) {
        out.push_str(&format!(
            "{},{:.6},{:.6}\n",
            csv_escape(label),
            point[0],
            point[1]
        ));
    }
    out
}

fn trace_csv(trace: &[(usize, f64)]) -> String {
    let mut out = String::from("iteration,kl\n");
    for (iter, kl) in trace {
        out.push_str(&format!("{iter},{kl:.6}\n"));
    }
    out
}

fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<String> {
    std::fs::write(dir.join(name), contents)?;
    Ok(name.to_string())
}

/// Execute a resolved run into `out_dir`; returns the artifact names and
/// the config fingerprints involved.
pub fn execute(config: &RunConfig, out_dir: &Path) -> Result<(Vec<String>, Vec<String>)> {
    std::fs::create_dir_all(out_dir)?;
    match config {
        RunConfig::Administer {
            backend,
            context,
            plan,
            questionnaire,
            cache,
        } => {
            let q = load_questionnaire(questionnaire)?;
            let respondent = build_respondent(backend, cache.as_deref().map(Path::new))?;
            let result = administer(&q, respondent.as_ref(), plan, context)?;
            let mut artifacts = Vec::new();
            artifacts.push(write_artifact(
                out_dir,
                "session.json",
                &session_json(&result),
            )?);
            let rows = vec![(context.label(), result.scores)];
            artifacts.push(write_artifact(out_dir, "scores.csv", &scores_csv(&rows))?);
            Ok((artifacts, vec![result.config_fingerprint.clone()]))
        }
        RunConfig::Compare {
            sessions,
            baselines,
        } => {
            if sessions.is_empty() {
                return Err(Error::Config(
                    "compare needs at least one session file".into(),
                ));
            }
            let table = match baselines {
                Some(p) => BaselineTable::load_path(Path::new(p))?,
                None => BaselineTable::bundled(),
            };
            let mut rows = Vec::new();
            for file in sessions {
                let text = std::fs::read_to_string(file)?;
                rows.extend(parse_scores_csv(&text)?);
            }
            let artifacts = vec![write_artifact(
                out_dir,
                "compare.csv",
                &compare_csv(&rows, &table),
            )?];
            Ok((artifacts, Vec::new()))
        }
        RunConfig::Consistency {
            backend,
            plan,
            corpus,
            contexts,
            seed,
            max_chars,
            questionnaire,
            cache,
        } => {
            let q = load_questionnaire(questionnaire)?;
            let respondent = build_respondent(backend, cache.as_deref().map(Path::new))?;
            let sampled = sample_contexts(Path::new(corpus), *contexts, *seed, *max_chars)?;
            let report = consistency(&q, respondent.as_ref(), plan, &sampled, corpus, *seed)?;
            let mut artifacts = Vec::new();
            let mut json = serde_json::to_string_pretty(&report)
                .map_err(|e| Error::Report(format!("serialize consistency report: {e}")))?;
            json.push('\n');
            artifacts.push(write_artifact(out_dir, "consistency.json", &json)?);
            artifacts.push(write_artifact(
                out_dir,
                "consistency.csv",
                &consistency_csv(&report.stats),
            )?);
            artifacts.push(write_artifact(
                out_dir,
                "consistency_sessions.csv",
                &scores_csv(&report.sessions),
            )?);
            Ok((artifacts, Vec::new()))
        }
        RunConfig::Steer {
            backend,
            plan,
            target,
            catalog,
            questionnaire,
            cache,
        } => {
            let q = load_questionnaire(questionnaire)?;
            let respondent = build_respondent(backend, cache.as_deref().map(Path::new))?;
            let candidates: Vec<String> = match catalog {
                Some(p) => crate::analysis::load_steering_catalog(&std::fs::read_to_string(p)?)?
                    .into_iter()
                    .map(|c| c.prompt)
                    .collect(),
                None => crate::analysis::bundled_steering_catalog()
                    .into_iter()
                    .map(|c| c.prompt)
                    .collect(),
            };
            let result = steer(&q, respondent.as_ref(), plan, &candidates, *target)?;
            let mut artifacts = Vec::new();
            let mut json = serde_json::to_string_pretty(&result)
                .map_err(|e| Error::Report(format!("serialize steering result: {e}")))?;
            json.push('\n');
            artifacts.push(write_artifact(out_dir, "steering.json", &json)?);
            artifacts.push(write_artifact(
                out_dir,
                "steering.csv",
                &steering_csv(&result),
            )?);
            Ok((artifacts, Vec::new()))
        }
        RunConfig::Embed { points, params } => {
            let set = PointSet::load_path(Path::new(points))?;
            let embedding = embed(&set, params)?;
            let artifacts = vec![
                write_artifact(
                    out_dir,
                    "embedding.csv",
                    &embedding_csv(&embedding.labels, &embedding.coords),
                )?,
                write_artifact(out_dir, "kl_trace.csv", &trace_csv(&embedding.trace))?,
            ];
            Ok((artifacts, Vec::new()))
        }
        RunConfig::Donate {
            backend,
            context,
            episodes,
            seed,
            script,
            patterns,
            cache,
        } => {
            let script = match script {
                Some(p) => DialogScript::load_path(Path::new(p))?,
                None => DialogScript::bundled(),
            };
            let pattern_text = match patterns {
                Some(p) => std::fs::read_to_string(p)?,
                None => crate::donation::BUNDLED_DECLINE_PATTERNS.to_string(),
            };
            let patterns = parse_decline_patterns(&pattern_text);
            // Donation episodes replay sequences, so the cache never reuses.
            let respondent = match cache {
                Some(path) => {
                    let store = std::sync::Arc::new(CacheStore::open(Path::new(path))?);
                    let inner = build_respondent(backend, None)?;
                    Box::new(CachingRespondent::new(BoxedRespondent(inner), store, false))
                        as Box<dyn Respondent>
                }
                None => build_respondent(backend, None)?,
            };
            let est = estimate(
                respondent.as_ref(),
                &script,
                context,
                *episodes,
                *seed,
                &patterns,
            )?;
            let mut artifacts = Vec::new();
            let mut json = serde_json::to_string_pretty(&est)
                .map_err(|e| Error::Report(format!("serialize donation estimate: {e}")))?;
            json.push('\n');
            artifacts.push(write_artifact(out_dir, "donation.json", &json)?);
            artifacts.push(write_artifact(
                out_dir,
                "donation.csv",
                &donation_csv(&est),
            )?);
            Ok((artifacts, Vec::new()))
        }
        RunConfig::Render { figure, input } => {
            let text = std::fs::read_to_string(input)?;
            let svg = render_figure(figure, &text)?;
            let artifacts = vec![write_artifact(out_dir, "figure.svg", &svg)?];
            Ok((artifacts, Vec::new()))
        }
    }
}

/// Execute a config and record its manifest in the output directory.
pub fn execute_with_manifest(config: &RunConfig, out_dir: &Path, seed: u64) -> Result<RunManifest> {
    let (artifacts, fingerprints) = execute(config, out_dir)?;
    let manifest = RunManifest {
        command: command_name(config).to_string(),
        config: config.clone(),
        seed,
        config_fingerprints: fingerprints,
        timestamp: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        artifacts,
    };
    manifest.save(&out_dir.join("manifest.json"))?;
    Ok(manifest)
}

pub fn command_name(config: &RunConfig) -> &'static str {
    match config {
        RunConfig::Administer { .. } => "administer",
        RunConfig::Compare { .. } => "compare",
        RunConfig::Consistency { .. } => "consistency",
        RunConfig::Steer { .. } => "steer",
        RunConfig::Embed { .. } => "embed",
        RunConfig::Donate { .. } => "donate",
        RunConfig::Render { .. } => "render",
    }
}

/// Re-execute a manifest into `out_dir` and byte-compare every artifact
/// against the originals next to the manifest.
pub fn replay(manifest_path: &Path, out_dir: &Path) -> Result<Vec<(String, bool)>> {
    let manifest = RunManifest::load(manifest_path)?;
    let original_dir = manifest_path
        .parent()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    let (artifacts, _) = execute(&manifest.config, out_dir)?;
    // Carry the manifest along so the replay directory is self-describing.
    std::fs::copy(manifest_path, out_dir.join("manifest.json"))?;
    let mut results = Vec::new();
    for name in &manifest.artifacts {
        if !artifacts.contains(name) {
            results.push((name.clone(), false));
            continue;
        }
        let original = std::fs::read(original_dir.join(name))?;
        let replayed = std::fs::read(out_dir.join(name))?;
        results.push((name.clone(), original == replayed));
    }
    Ok(results)
}

// ---------------------------------------------------------------------------
// SVG rendering

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 400.0;
const MARGIN: f64 = 48.0;
const PALETTE: [&str; 8] = [
    "#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860", "#da8bc3", "#8c8c8c",
];

fn svg_escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn fx(v: f64) -> String {
    format!("{v:.2}")
}

fn svg_open(out: &mut String) {
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_W}\" height=\"{SVG_H}\" viewBox=\"0 0 {SVG_W} {SVG_H}\">\n"
    ));
    out.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{SVG_W}\" height=\"{SVG_H}\" fill=\"#ffffff\"/>\n"
    ));
}

fn svg_text(out: &mut String, x: f64, y: f64, size: u32, anchor: &str, text: &str) {
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"{size}\" text-anchor=\"{anchor}\">{}</text>\n",
        fx(x),
        fx(y),
        svg_escape(text)
    ));
}

/// Grouped bar chart of one or more foundation score sets on the 0..=5 axis.
pub fn render_bar_chart(rows: &[(String, FoundationScores)]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Report(
            "bar chart needs at least one score row".into(),
        ));
    }
    let mut out = String::new();
    svg_open(&mut out);
    let plot_w = SVG_W - 2.0 * MARGIN;
    let plot_h = SVG_H - 2.0 * MARGIN;
    let y_of = |v: f64| MARGIN + plot_h * (1.0 - v / 5.0);

    for tick in 0..=5 {
        let y = y_of(tick as f64);
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#dddddd\"/>\n",
            fx(MARGIN),
            fx(y),
            fx(SVG_W - MARGIN),
            fx(y)
        ));
        svg_text(
            &mut out,
            MARGIN - 8.0,
            y + 4.0,
            11,
            "end",
            &tick.to_string(),
        );
    }

    let groups = Foundation::all();
    let group_w = plot_w / groups.len() as f64;
    let bar_w = (group_w * 0.8) / rows.len() as f64;
    for (gi, foundation) in groups.into_iter().enumerate() {
        let group_x = MARGIN + gi as f64 * group_w;
        for (ri, (_, scores)) in rows.iter().enumerate() {
            let v = scores.get(foundation);
            let x = group_x + group_w * 0.1 + ri as f64 * bar_w;
            let y = y_of(v);
            out.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>\n",
                fx(x),
                fx(y),
                fx(bar_w),
                fx(y_of(0.0) - y),
                PALETTE[ri % PALETTE.len()]
            ));
        }
        svg_text(
            &mut out,
            group_x + group_w / 2.0,
            SVG_H - MARGIN + 16.0,
            12,
            "middle",
            foundation.name(),
        );
    }
    for (ri, (label, _)) in rows.iter().enumerate() {
        let y = 16.0 + 14.0 * ri as f64;
        out.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{}\"/>\n",
            fx(MARGIN),
            fx(y - 9.0),
            PALETTE[ri % PALETTE.len()]
        ));
        svg_text(&mut out, MARGIN + 14.0, y, 11, "start", label);
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Labeled 2-D scatter of an embedding.
pub fn render_scatter(points: &[(String, f64, f64)]) -> Result<String> {
    if points.is_empty() {
        return Err(Error::Report("scatter needs at least one point".into()));
    }
    let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, x, y) in points {
        min_x = min_x.min(*x);
        max_x = max_x.max(*x);
        min_y = min_y.min(*y);
        max_y = max_y.max(*y);
    }
    let pad_x = ((max_x - min_x) * 0.1).max(1e-9);
    let pad_y = ((max_y - min_y) * 0.1).max(1e-9);
    min_x -= pad_x;
    max_x += pad_x;
    min_y -= pad_y;
    max_y += pad_y;

    let sx = |x: f64| MARGIN + (SVG_W - 2.0 * MARGIN) * (x - min_x) / (max_x - min_x);
    let sy = |y: f64| SVG_H - MARGIN - (SVG_H - 2.0 * MARGIN) * (y - min_y) / (max_y - min_y);

    let mut out = String::new();
    svg_open(&mut out);
    out.push_str(&format!(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#999999\"/>\n",
        fx(MARGIN),
        fx(MARGIN),
        fx(SVG_W - 2.0 * MARGIN),
        fx(SVG_H - 2.0 * MARGIN)
    ));
    for (i, (label, x, y)) in points.iter().enumerate() {
        let cx = sx(*x);
        let cy = sy(*y);
        out.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"{}\"/>\n",
            fx(cx),
            fx(cy),
            PALETTE[i % PALETTE.len()]
        ));
        svg_text(&mut out, cx + 6.0, cy - 6.0, 10, "start", label);
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Box-and-whisker summary per foundation from a consistency report.
pub fn render_box(stats: &[FoundationStat]) -> Result<String> {
    if stats.is_empty() {
        return Err(Error::Report("box plot needs at least one stat row".into()));
    }
    let mut out = String::new();
    svg_open(&mut out);
    let plot_h = SVG_H - 2.0 * MARGIN;
    let y_of = |v: f64| MARGIN + plot_h * (1.0 - v / 5.0);
    for tick in 0..=5 {
        let y = y_of(tick as f64);
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#dddddd\"/>\n",
            fx(MARGIN),
            fx(y),
            fx(SVG_W - MARGIN),
            fx(y)
        ));
        svg_text(
            &mut out,
            MARGIN - 8.0,
            y + 4.0,
            11,
            "end",
            &tick.to_string(),
        );
    }
    let group_w = (SVG_W - 2.0 * MARGIN) / stats.len() as f64;
    for (i, s) in stats.iter().enumerate() {
        let cx = MARGIN + group_w * (i as f64 + 0.5);
        let half = group_w * 0.18;
        let color = PALETTE[i % PALETTE.len()];
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\"/>\n",
            fx(cx),
            fx(y_of(s.min)),
            fx(cx),
            fx(y_of(s.max))
        ));
        out.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{color}\" fill-opacity=\"0.35\" stroke=\"{color}\"/>\n",
            fx(cx - half),
            fx(y_of(s.q3)),
            fx(half * 2.0),
            fx((y_of(s.q1) - y_of(s.q3)).max(0.5))
        ));
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            fx(cx - half),
            fx(y_of(s.median)),
            fx(cx + half),
            fx(y_of(s.median))
        ));
        svg_text(
            &mut out,
            cx,
            SVG_H - MARGIN + 16.0,
            12,
            "middle",
            s.foundation.name(),
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Dispatch on figure type: `bars` (scores CSV), `scatter` (embedding CSV)
/// or `box` (consistency CSV).
pub fn render_figure(kind: &str, input: &str) -> Result<String> {
    match kind {
        "bars" => render_bar_chart(&parse_scores_csv(input)?),
        "scatter" => {
            let set = PointSet::load_csv(input)?;
            let points: Vec<(String, f64, f64)> = set
                .labels
                .iter()
                .zip(&set.coords)
                .map(|(l, c)| {
                    if c.len() != 2 {
                        Err(Error::Report("scatter input must be 2-D".into()))
                    } else {
                        Ok((l.clone(), c[0], c[1]))
                    }
                })
                .collect::<Result<_>>()?;
            render_scatter(&points)
        }
        "box" => {
            let mut reader = csv::ReaderBuilder::new().from_reader(input.as_bytes());
            let mut stats = Vec::new();
            for record in reader.records() {
                let record = record.map_err(|e| Error::Report(format!("stats file: {e}")))?;
                if record.len() != 8 {
                    return Err(Error::Report("stats file: expected 8 columns".into()));
                }
                let foundation = Foundation::from_name(&record[0])
                    .ok_or_else(|| Error::Report(format!("unknown foundation {:?}", &record[0])))?;
                let num = |i: usize| -> Result<f64> {
                    record[i]
                        .trim()
                        .parse()
                        .map_err(|e| Error::Report(format!("stats file: bad number: {e}")))
                };
                stats.push(FoundationStat {
                    foundation,
                    mean: num(1)?,
                    std: num(2)?,
                    min: num(3)?,
                    q1: num(4)?,
                    median: num(5)?,
                    q3: num(6)?,
                    max: num(7)?,
                });
            }
            render_box(&stats)
        }
        other => Err(Error::Config(format!(
            "unknown figure type {other:?}; expected bars, scatter or box"
        ))),
    }
}
