use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde_json::Value;

use super::{Problem, ProblemError, Source, Statement};
use crate::label::Label;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemFormat {
    /// One native problem object per line.
    NativeJson,
    /// FOLIO releases: JSON lines or a JSON array of story/conclusion records.
    FolioJson,
}

pub fn load_problems(path: &Path, format: ProblemFormat) -> Result<Vec<Problem>, ProblemError> {
    let text = fs::read_to_string(path).map_err(|source| ProblemError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_problems(&text, format)
}

pub fn parse_problems(text: &str, format: ProblemFormat) -> Result<Vec<Problem>, ProblemError> {
    let problems = match format {
        ProblemFormat::NativeJson => parse_native(text)?,
        ProblemFormat::FolioJson => parse_folio(text)?,
    };
    for (i, p) in problems.iter().enumerate() {
        p.validate(i)?;
    }
    Ok(problems)
}

fn parse_native(text: &str) -> Result<Vec<Problem>, ProblemError> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(index, line)| {
            serde_json::from_str(line).map_err(|e| ProblemError::Format {
                index,
                message: e.to_string(),
            })
        })
        .collect()
}

fn folio_records(text: &str) -> Result<Vec<Value>, ProblemError> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        return match serde_json::from_str(trimmed) {
            Ok(Value::Array(items)) => Ok(items),
            Ok(_) => unreachable!("leading `[` parses as an array"),
            Err(e) => Err(ProblemError::Format {
                index: 0,
                message: e.to_string(),
            }),
        };
    }
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(index, line)| {
            serde_json::from_str(line).map_err(|e| ProblemError::Format {
                index,
                message: e.to_string(),
            })
        })
        .collect()
}

fn parse_folio(text: &str) -> Result<Vec<Problem>, ProblemError> {
    let records = folio_records(text)?;
    let mut out = Vec::with_capacity(records.len());
    for (index, rec) in records.into_iter().enumerate() {
        let format_err = |message: String| ProblemError::Format { index, message };
        let obj = rec
            .as_object()
            .ok_or_else(|| format_err("record is not an object".into()))?;
        // FOLIO v1 stores premises as a list; v2 as newline-separated text.
        let premises: Vec<String> = match obj.get("premises") {
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| v.as_str().map(str::to_string))
                .collect::<Option<_>>()
                .ok_or_else(|| format_err("premises must be strings".into()))?,
            Some(Value::String(s)) => s
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_string)
                .collect(),
            _ => return Err(format_err("missing `premises`".into())),
        };
        let conclusion = obj
            .get("conclusion")
            .and_then(Value::as_str)
            .ok_or_else(|| format_err("missing `conclusion`".into()))?;
        let label_text = obj
            .get("label")
            .and_then(Value::as_str)
            .ok_or_else(|| format_err("missing `label`".into()))?;
        let label = Label::from_answer(label_text)
            .ok_or_else(|| format_err(format!("unknown label `{label_text}`")))?;
        let id = match obj.get("example_id").or_else(|| obj.get("id")) {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            _ => format!("folio-{index}"),
        };
        let mut meta = BTreeMap::new();
        for key in ["story_id", "premises-FOL", "conclusion-FOL"] {
            if let Some(v) = obj.get(key) {
                meta.insert(key.replace('-', "_"), v.clone());
            }
        }
        out.push(Problem {
            id,
            source: Source::Folio,
            premises: premises.into_iter().map(Statement::nl).collect(),
            hypothesis: Statement::nl(conclusion),
            label,
            meta,
            split: None,
        });
    }
    Ok(out)
}

/// Writes problems as native JSON lines.
pub fn write_problems<W: Write>(mut w: W, problems: &[Problem]) -> std::io::Result<()> {
    for p in problems {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn save_problems(path: &Path, problems: &[Problem]) -> Result<(), ProblemError> {
    let io_err = |source| ProblemError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::create(path).map_err(io_err)?;
    write_problems(BufWriter::new(file), problems).map_err(io_err)
}
