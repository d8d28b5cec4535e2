//! Line-delimited corpus store.
//!
//! The first line is the version header `ndcorpus/1`. Every following line
//! is one record as a JSON object with a fixed field order, terminated by
//! `\n`. A final line without its terminator is treated as truncated.

use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::record::BibRecord;
use crate::error::{Error, Result};

pub const STORE_HEADER: &str = "ndcorpus/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StoreSummary {
    pub records: usize,
    pub mentions: usize,
}

/// Serializes records to any writer. Fails on the first duplicate key.
pub fn write_records<'a, W: Write>(
    out: &mut W,
    records: impl IntoIterator<Item = &'a BibRecord>,
) -> Result<StoreSummary> {
    let io = |e: std::io::Error| Error::io("<store>", e);
    let mut seen = HashSet::new();
    let mut summary = StoreSummary {
        records: 0,
        mentions: 0,
    };
    writeln!(out, "{STORE_HEADER}").map_err(io)?;
    for rec in records {
        if !seen.insert(rec.record_key.clone()) {
            return Err(Error::DuplicateKey(rec.record_key.clone()));
        }
        let line = serde_json::to_string(rec).expect("records always serialize");
        out.write_all(line.as_bytes()).map_err(io)?;
        out.write_all(b"\n").map_err(io)?;
        summary.records += 1;
        summary.mentions += rec.authors.len();
    }
    Ok(summary)
}

/// Writes a store atomically: the file appears only if every record was valid.
pub fn write_corpus_store<'a>(
    records: impl IntoIterator<Item = &'a BibRecord>,
    path: impl AsRef<Path>,
) -> Result<StoreSummary> {
    let path = path.as_ref();
    let tmp = path.with_extension("partial");
    let file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    let mut out = BufWriter::new(file);
    let summary = match write_records(&mut out, records) {
        Ok(s) => s,
        Err(e) => {
            drop(out);
            let _ = fs::remove_file(&tmp);
            return Err(match e {
                Error::Io { source, .. } => Error::io(path, source),
                other => other,
            });
        }
    };
    out.flush().map_err(|e| Error::io(path, e))?;
    drop(out);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(summary)
}

pub fn read_corpus_store(path: impl AsRef<Path>) -> Result<Vec<BibRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let format = |line: usize, message: String| Error::Format {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut line = String::new();
    let mut records = Vec::new();
    let mut keys = HashSet::new();
    let mut lineno = 0;
    loop {
        line.clear();
        let n = reader.read_line(&mut line).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        lineno += 1;
        if !line.ends_with('\n') {
            return Err(format(lineno, "truncated line".into()));
        }
        let body = &line[..line.len() - 1];
        if lineno == 1 {
            if body != STORE_HEADER {
                return Err(format(1, format!("expected header `{STORE_HEADER}`, found `{body}`")));
            }
            continue;
        }
        let rec: BibRecord = serde_json::from_str(body).map_err(|e| format(lineno, e.to_string()))?;
        rec.validate().map_err(|e| format(lineno, e.to_string()))?;
        if !keys.insert(rec.record_key.clone()) {
            return Err(format(lineno, format!("duplicate record key `{}`", rec.record_key)));
        }
        records.push(rec);
    }
    if lineno == 0 {
        return Err(format(1, "missing header".into()));
    }
    Ok(records)
}
