use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::{InstanceOutcome, SkipReason};
use crate::conllu::Number;
use crate::heuristics::N_BUCKETS;

/// One bucket (`"0"`..`"5"`) or the `"overall"` row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub bucket: String,
    pub n: usize,
    pub correct: usize,
    pub n_singular: usize,
    pub correct_singular: usize,
    pub n_plural: usize,
    pub correct_plural: usize,
    pub accuracy: Option<f64>,
    pub accuracy_singular: Option<f64>,
    pub accuracy_plural: Option<f64>,
}

fn ratio(a: usize, b: usize) -> Option<f64> {
    (b > 0).then(|| a as f64 / b as f64)
}

impl ReportRow {
    fn tally<'a>(bucket: String, outcomes: impl Iterator<Item = &'a InstanceOutcome>) -> Self {
        let mut row = ReportRow {
            bucket,
            n: 0,
            correct: 0,
            n_singular: 0,
            correct_singular: 0,
            n_plural: 0,
            correct_plural: 0,
            accuracy: None,
            accuracy_singular: None,
            accuracy_plural: None,
        };
        for o in outcomes {
            row.n += 1;
            row.correct += o.correct as usize;
            match o.number {
                Number::Sing => {
                    row.n_singular += 1;
                    row.correct_singular += o.correct as usize;
                }
                Number::Plur => {
                    row.n_plural += 1;
                    row.correct_plural += o.correct as usize;
                }
            }
        }
        row.accuracy = ratio(row.correct, row.n);
        row.accuracy_singular = ratio(row.correct_singular, row.n_singular);
        row.accuracy_plural = ratio(row.correct_plural, row.n_plural);
        row
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: String,
    pub model_id: String,
    pub condition: String,
    /// Buckets 0..5 followed by the overall row.
    pub rows: Vec<ReportRow>,
    pub skipped: BTreeMap<SkipReason, usize>,
}

impl EvalReport {
    pub fn from_outcomes(
        task: &str,
        model_id: &str,
        condition: &str,
        outcomes: &[InstanceOutcome],
        skipped: BTreeMap<SkipReason, usize>,
    ) -> Self {
        let mut rows: Vec<ReportRow> = (0..N_BUCKETS)
            .map(|b| ReportRow::tally(b.to_string(), outcomes.iter().filter(|o| o.bucket == b)))
            .collect();
        rows.push(ReportRow::tally("overall".into(), outcomes.iter()));
        EvalReport {
            task: task.to_string(),
            model_id: model_id.to_string(),
            condition: condition.to_string(),
            rows,
            skipped,
        }
    }

    pub fn overall(&self) -> &ReportRow {
        self.rows.last().expect("overall row")
    }

    pub fn bucket(&self, b: usize) -> &ReportRow {
        &self.rows[b]
    }

    /// Pooled accuracy over several buckets.
    pub fn pooled_accuracy(&self, buckets: &[usize]) -> Option<f64> {
        let (c, n) = buckets.iter().fold((0, 0), |(c, n), &b| (c + self.rows[b].correct, n + self.rows[b].n));
        ratio(c, n)
    }

    pub fn skipped_total(&self) -> usize {
        self.skipped.values().sum()
    }

    /// Cell-wise mean of reports over the same task and condition, each
    /// report weighted equally. Counts are summed.
    pub fn average(reports: &[EvalReport], model_id: &str) -> Option<EvalReport> {
        let first = reports.first()?;
        let mut out = first.clone();
        out.model_id = model_id.to_string();
        let mean = |f: &dyn Fn(&EvalReport) -> Option<f64>| {
            let vals: Vec<f64> = reports.iter().filter_map(f).collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        };
        for (i, row) in out.rows.iter_mut().enumerate() {
            let sum = |f: fn(&ReportRow) -> usize| reports.iter().map(|r| f(&r.rows[i])).sum::<usize>();
            row.n = sum(|r| r.n);
            row.correct = sum(|r| r.correct);
            row.n_singular = sum(|r| r.n_singular);
            row.correct_singular = sum(|r| r.correct_singular);
            row.n_plural = sum(|r| r.n_plural);
            row.correct_plural = sum(|r| r.correct_plural);
            row.accuracy = mean(&|r| r.rows[i].accuracy);
            row.accuracy_singular = mean(&|r| r.rows[i].accuracy_singular);
            row.accuracy_plural = mean(&|r| r.rows[i].accuracy_plural);
        }
        out.skipped = BTreeMap::new();
        for r in reports {
            for (k, v) in &r.skipped {
                *out.skipped.entry(*k).or_default() += v;
            }
        }
        Some(out)
    }
}

pub const REPORT_HEADER: [&str; 10] = [
    "task",
    "model",
    "condition",
    "bucket",
    "n",
    "accuracy",
    "n_singular",
    "accuracy_singular",
    "n_plural",
    "accuracy_plural",
];

fn fmt_acc(a: Option<f64>) -> String {
    a.map(|a| format!("{a:.6}")).unwrap_or_default()
}

/// One row per bucket per report; unset accuracies are empty cells.
pub fn write_report_csv<W: Write>(reports: &[EvalReport], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER)?;
    for r in reports {
        for row in &r.rows {
            w.write_record([
                r.task.clone(),
                r.model_id.clone(),
                r.condition.clone(),
                row.bucket.clone(),
                row.n.to_string(),
                fmt_acc(row.accuracy),
                row.n_singular.to_string(),
                fmt_acc(row.accuracy_singular),
                row.n_plural.to_string(),
                fmt_acc(row.accuracy_plural),
            ])?;
        }
    }
    w.flush()
}

/// Per-instance outcome log.
pub fn write_outcomes<W: Write>(outcomes: &[InstanceOutcome], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "sent_id",
        "kind",
        "target_index",
        "bucket",
        "number",
        "correct_form",
        "wrong_form",
        "logprob_correct",
        "logprob_wrong",
        "correct",
    ])?;
    for o in outcomes {
        w.write_record([
            o.sent_id.clone(),
            o.kind.as_str().to_string(),
            o.target_index.to_string(),
            o.bucket.to_string(),
            o.number.as_str().to_string(),
            o.correct_form.clone(),
            o.wrong_form.clone(),
            format!("{:.6}", o.logprob_correct),
            format!("{:.6}", o.logprob_wrong),
            (o.correct as u8).to_string(),
        ])?;
    }
    w.flush()
}
