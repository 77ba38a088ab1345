//! Automated proxies for completeness, precision and consistency, banded 1-5.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::generation::Pipeline;
use crate::retrieval::Document;
use crate::text::content_tokens;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("reference text has no content tokens")]
    EmptyReference,
    #[error("consistency needs at least 2 runs, got {0}")]
    TooFewRuns(usize),
}

/// Lower-inclusive bands: [0, .2) -> 1, [.2, .4) -> 2, [.4, .6) -> 3, [.6, .8) -> 4, [.8, 1] -> 5.
pub fn band(fraction: f64) -> u8 {
    match fraction {
        f if f >= 0.8 => 5,
        f if f >= 0.6 => 4,
        f if f >= 0.4 => 3,
        f if f >= 0.2 => 2,
        _ => 1,
    }
}

/// 5 when every run matched, otherwise by the modal share: >= .8 -> 4, >= .6 -> 3, >= .4 -> 2, else 1.
pub fn consistency_band(matches: usize, runs: usize) -> u8 {
    if runs > 0 && matches == runs {
        return 5;
    }
    let share = if runs == 0 { 0.0 } else { matches as f64 / runs as f64 };
    match share {
        s if s >= 0.8 => 4,
        s if s >= 0.6 => 3,
        s if s >= 0.4 => 2,
        _ => 1,
    }
}

fn token_set(text: &str) -> BTreeSet<String> {
    content_tokens(text).into_iter().collect()
}

/// Share of the reference's distinct content tokens that occur in the answer.
pub fn completeness(answer_text: &str, reference: &Document) -> Result<(f64, u8), EvalError> {
    let reference = token_set(&reference.text);
    if reference.is_empty() {
        return Err(EvalError::EmptyReference);
    }
    let answer = token_set(answer_text);
    let fraction = reference.intersection(&answer).count() as f64 / reference.len() as f64;
    Ok((fraction, band(fraction)))
}

/// Share of the answer's distinct content tokens found anywhere in the references.
pub fn precision(answer_text: &str, references: &[Document]) -> Result<(f64, u8), EvalError> {
    let union: BTreeSet<String> = references.iter().flat_map(|d| token_set(&d.text)).collect();
    if union.is_empty() {
        return Err(EvalError::EmptyReference);
    }
    let answer = token_set(answer_text);
    if answer.is_empty() {
        return Ok((0.0, 1));
    }
    let fraction = answer.intersection(&union).count() as f64 / answer.len() as f64;
    Ok((fraction, band(fraction)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsistencyResult {
    pub runs: usize,
    pub matches: usize,
    pub band: u8,
    /// Most frequent answer text; ties go to the lexicographically smallest.
    pub modal_text: Option<String>,
    pub errors: usize,
}

/// Calls `run` `runs` times. Failed runs never match.
pub fn consistency_of<E>(
    runs: usize,
    mut run: impl FnMut() -> Result<String, E>,
) -> Result<ConsistencyResult, EvalError> {
    if runs < 2 {
        return Err(EvalError::TooFewRuns(runs));
    }
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut errors = 0;
    for _ in 0..runs {
        match run() {
            Ok(text) => *counts.entry(text).or_default() += 1,
            Err(_) => errors += 1,
        }
    }
    let modal = counts.iter().fold(None::<(&String, usize)>, |best, (text, &n)| match best {
        Some((_, m)) if m >= n => best,
        _ => Some((text, n)),
    });
    let matches = modal.map_or(0, |(_, n)| n);
    Ok(ConsistencyResult {
        runs,
        matches,
        band: consistency_band(matches, runs),
        modal_text: modal.map(|(t, _)| t.clone()),
        errors,
    })
}

pub fn consistency(question: &str, pipeline: &Pipeline, runs: usize) -> Result<ConsistencyResult, EvalError> {
    consistency_of(runs, || pipeline.answer(question).map(|a| a.text))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub question: String,
    /// Pipeline category of the first run, or the error it raised.
    pub category: String,
    /// Absent when the answer cites no documents.
    pub completeness_fraction: Option<f64>,
    pub completeness_band: Option<u8>,
    pub precision_fraction: Option<f64>,
    pub precision_band: Option<u8>,
    pub consistency_runs: usize,
    pub consistency_matches: usize,
    pub consistency_band: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetadata {
    pub model_id: String,
    pub provider: String,
    pub scorer: String,
    pub reference: String,
    pub band_convention: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metadata: EvalMetadata,
    pub reports: Vec<MetricReport>,
}

pub fn evaluate_question(pipeline: &Pipeline, question: &str, runs: usize) -> Result<MetricReport, EvalError> {
    let mut report = MetricReport {
        question: question.to_string(),
        category: String::new(),
        completeness_fraction: None,
        completeness_band: None,
        precision_fraction: None,
        precision_band: None,
        consistency_runs: runs,
        consistency_matches: 0,
        consistency_band: 1,
    };
    match pipeline.answer(question) {
        Ok(answer) => {
            report.category = answer.category.to_string();
            let docs: Vec<Document> =
                answer.cited_doc_ids.iter().filter_map(|id| pipeline.index().document(id).cloned()).collect();
            if let Some(first) = docs.first() {
                if let Ok((f, b)) = completeness(&answer.text, first) {
                    report.completeness_fraction = Some(f);
                    report.completeness_band = Some(b);
                }
                if let Ok((f, b)) = precision(&answer.text, &docs) {
                    report.precision_fraction = Some(f);
                    report.precision_band = Some(b);
                }
            }
        }
        Err(e) => report.category = format!("error: {e}"),
    }
    let c = consistency(question, pipeline, runs)?;
    report.consistency_matches = c.matches;
    report.consistency_band = c.band;
    Ok(report)
}

pub fn evaluate(pipeline: &Pipeline, questions: &[String], runs: usize) -> Result<EvalReport, EvalError> {
    let reports = questions.iter().map(|q| evaluate_question(pipeline, q, runs)).collect::<Result<Vec<_>, _>>()?;
    Ok(EvalReport {
        metadata: EvalMetadata {
            model_id: pipeline.model().id.clone(),
            provider: pipeline.providers().llm.name().to_string(),
            scorer: "token-overlap proxy over lowercased content tokens; not a human rating".into(),
            reference: "the documents cited by the answer; this favours precision".into(),
            band_convention: "lower-inclusive bands at 0.2, 0.4, 0.6, 0.8; consistency bands below 5 are interpolated"
                .into(),
        },
        reports,
    })
}

/// One question per line; blank lines and `#` comments are skipped.
pub fn parse_questions(text: &str) -> Vec<String> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(String::from).collect()
}

fn cell(v: Option<f64>, b: Option<u8>) -> String {
    match (v, b) {
        (Some(v), Some(b)) => format!("{v:.2} ({b})"),
        _ => "-".into(),
    }
}

impl EvalReport {
    pub fn table(&self) -> String {
        let width = self.reports.iter().map(|r| r.question.chars().count()).max().unwrap_or(8).clamp(8, 60);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:<18}  {:>12}  {:>12}  {:>11}",
            "question", "category", "completeness", "precision", "consistency"
        );
        for r in &self.reports {
            let q: String = r.question.chars().take(width).collect();
            let category: String = r.category.chars().take(18).collect();
            let _ = writeln!(
                out,
                "{q:<width$}  {category:<18}  {:>12}  {:>12}  {:>11}",
                cell(r.completeness_fraction, r.completeness_band),
                cell(r.precision_fraction, r.precision_band),
                format!("{}/{} ({})", r.consistency_matches, r.consistency_runs, r.consistency_band),
            );
        }
        out
    }
}
