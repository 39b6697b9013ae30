//! Text format for graph-policy weights: named tensor sections, each with a
//! shape header followed by one line per row.
//!
//! ```text
//! # comments and blank lines are ignored
//! tensor vertex_encoder.weight 32 4
//! 0.12 -0.5 0.0 1.0
//! ...
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rollplan_core::policy::{Matrix, PolicyWeights, WeightsError};

#[derive(Debug, thiserror::Error)]
pub enum WeightsFileError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{0}")]
    Weights(WeightsError),
}

fn syntax(line: usize, message: impl Into<String>) -> WeightsFileError {
    WeightsFileError::Syntax { line, message: message.into() }
}

pub fn parse_weights(text: &str) -> Result<PolicyWeights, WeightsFileError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let mut tensors = BTreeMap::new();
    while let Some((no, header)) = lines.next() {
        let parts: Vec<&str> = header.split_whitespace().collect();
        let [kw, name, rows, cols] = parts[..] else {
            return Err(syntax(no, "expected `tensor <name> <rows> <cols>`"));
        };
        if kw != "tensor" {
            return Err(syntax(no, "expected `tensor <name> <rows> <cols>`"));
        }
        let rows: usize = rows.parse().map_err(|_| syntax(no, "bad row count"))?;
        let cols: usize = cols.parse().map_err(|_| syntax(no, "bad column count"))?;
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let (no, row) = lines.next().ok_or_else(|| syntax(no, format!("tensor `{name}` ends after {r} of {rows} rows")))?;
            let before = data.len();
            for v in row.split_whitespace() {
                data.push(v.parse::<f64>().map_err(|_| syntax(no, format!("`{v}` is not a number")))?);
            }
            if data.len() - before != cols {
                return Err(syntax(no, format!("row has {} values, tensor `{name}` has {cols} columns", data.len() - before)));
            }
        }
        let m = Matrix::new(rows, cols, data).expect("size checked");
        if tensors.insert(name.to_string(), m).is_some() {
            return Err(syntax(no, format!("tensor `{name}` appears twice")));
        }
    }
    PolicyWeights::new(tensors).map_err(WeightsFileError::Weights)
}

pub fn weights_to_text(w: &PolicyWeights) -> String {
    let mut out = format!("# graph policy weights, hidden width {}\n", w.hidden());
    for (name, m) in w.tensors() {
        writeln!(out, "tensor {name} {} {}", m.rows(), m.cols()).unwrap();
        for row in m.data().chunks(m.cols()) {
            let line: Vec<String> = row.iter().map(|x| format!("{x:e}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
    }
    out
}
