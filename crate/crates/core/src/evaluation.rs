//! Micro and macro precision, recall and F1 over block test sets.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::blocking::Block;
use crate::disambiguate::{predict_author, Aggregation};
use crate::encoders::Encoders;
use crate::error::{Error, Result};
use crate::neural::Network;
use crate::pipeline::{Split, SplitAssignment, VariateMode};
use crate::scalar::Real;

/// Which name forms test records are predicted with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvalMode {
    /// Each test record twice, once with full names and once abbreviated.
    All,
    /// Each test record once, abbreviated.
    Anv,
}

impl EvalMode {
    pub fn label(self) -> &'static str {
        match self {
            EvalMode::All => "All",
            EvalMode::Anv => "ANV",
        }
    }

    pub fn variate_modes(self) -> &'static [VariateMode] {
        match self {
            EvalMode::All => &[VariateMode::Full, VariateMode::Anv],
            EvalMode::Anv => &[VariateMode::Anv],
        }
    }
}

impl std::str::FromStr for EvalMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "ALL" => Ok(EvalMode::All),
            "ANV" => Ok(EvalMode::Anv),
            _ => Err(Error::Config(format!("unknown evaluation mode `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_class: Vec<ClassMetrics>,
    pub micro_precision: f64,
    pub macro_precision: f64,
    pub micro_recall: f64,
    pub macro_recall: f64,
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub instances: usize,
    pub mode: Option<EvalMode>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else if p == r {
        p
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Scores predictions against truths. Macro averages run over the classes
/// that occur in `truths`; micro averages pool all counts.
pub fn micro_macro_report(truths: &[usize], preds: &[usize], n_classes: usize) -> Result<EvalReport> {
    if truths.len() != preds.len() {
        return Err(Error::LengthMismatch(truths.len(), preds.len()));
    }
    if let Some(&c) = truths.iter().chain(preds).find(|&&c| c >= n_classes) {
        return Err(Error::Config(format!("class {c} out of range for {n_classes} classes")));
    }
    let mut tp = vec![0usize; n_classes];
    let mut fp = vec![0usize; n_classes];
    let mut fneg = vec![0usize; n_classes];
    for (&t, &p) in truths.iter().zip(preds) {
        if t == p {
            tp[t] += 1;
        } else {
            fp[p] += 1;
            fneg[t] += 1;
        }
    }
    let per_class: Vec<ClassMetrics> = (0..n_classes)
        .map(|c| {
            let precision = ratio(tp[c], tp[c] + fp[c]);
            let recall = ratio(tp[c], tp[c] + fneg[c]);
            ClassMetrics {
                precision,
                recall,
                f1: harmonic(precision, recall),
                support: tp[c] + fneg[c],
            }
        })
        .collect();

    let supported: Vec<&ClassMetrics> = per_class.iter().filter(|m| m.support > 0).collect();
    let mean = |f: fn(&ClassMetrics) -> f64| {
        if supported.is_empty() {
            0.0
        } else {
            supported.iter().map(|m| f(m)).sum::<f64>() / supported.len() as f64
        }
    };
    let (tp_all, fp_all, fn_all): (usize, usize, usize) = (tp.iter().sum(), fp.iter().sum(), fneg.iter().sum());
    let micro_precision = ratio(tp_all, tp_all + fp_all);
    let micro_recall = ratio(tp_all, tp_all + fn_all);
    Ok(EvalReport {
        macro_precision: mean(|m| m.precision),
        macro_recall: mean(|m| m.recall),
        macro_f1: mean(|m| m.f1),
        micro_precision,
        micro_recall,
        micro_f1: harmonic(micro_precision, micro_recall),
        per_class,
        instances: truths.len(),
        mode: None,
    })
}

/// Truth and predicted class of every test prediction of a block.
pub fn block_predictions<T: Real>(
    network: &Network<T>,
    block: &Block,
    split: &SplitAssignment,
    mode: EvalMode,
    encoders: &Encoders<T>,
    aggregation: Aggregation,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let test = split.entries(Split::Test);
    if test.is_empty() {
        return Err(Error::Empty(format!("TEST set of block `{}`", block.variate_key)));
    }
    let mut truths = Vec::new();
    let mut preds = Vec::new();
    for &vm in mode.variate_modes() {
        for &i in &test {
            let e = &block.entries[i];
            let record = block.record_of(e);
            let target = &record.authors[e.position].display_name;
            let p = predict_author(network, &block.authors, record, target, vm, encoders, aggregation)?;
            truths.push(e.class);
            preds.push(p.chosen);
        }
    }
    Ok((truths, preds))
}

pub fn evaluate_block<T: Real>(
    network: &Network<T>,
    block: &Block,
    split: &SplitAssignment,
    mode: EvalMode,
    encoders: &Encoders<T>,
    aggregation: Aggregation,
) -> Result<EvalReport> {
    let (truths, preds) = block_predictions(network, block, split, mode, encoders, aggregation)?;
    let mut report = micro_macro_report(&truths, &preds, block.n_classes())?;
    report.mode = Some(mode);
    Ok(report)
}

/// Reports of one block in both modes, one column of the results table.
#[derive(Clone, Debug)]
pub struct BlockColumn {
    pub block: String,
    pub anv: Option<EvalReport>,
    pub all: Option<EvalReport>,
}

type Metric = fn(&EvalReport) -> f64;

/// Tab-separated table with one metric row per mode and one column per
/// block.
pub fn results_table(columns: &[BlockColumn]) -> String {
    let rows: [(&str, Metric); 6] = [
        ("MaAP", |r| r.macro_precision),
        ("MaAR", |r| r.macro_recall),
        ("MaAF1", |r| r.macro_f1),
        ("MiAP", |r| r.micro_precision),
        ("MiAR", |r| r.micro_recall),
        ("MiAF1", |r| r.micro_f1),
    ];
    let mut out = String::new();
    let header: Vec<String> = columns.iter().map(|c| format!("'{}'", c.block)).collect();
    writeln!(out, "\t{}", header.join("\t")).unwrap();
    for (name, metric) in rows {
        for (label, pick) in [
            (
                "ANV",
                (|c: &BlockColumn| c.anv.as_ref()) as fn(&BlockColumn) -> Option<&EvalReport>,
            ),
            ("All", |c: &BlockColumn| c.all.as_ref()),
        ] {
            let cells: Vec<String> = columns
                .iter()
                .map(|c| pick(c).map_or_else(|| "-".to_string(), |r| format!("{:.3}", metric(r))))
                .collect();
            writeln!(out, "{name} ({label})\t{}", cells.join("\t")).unwrap();
        }
    }
    out
}
