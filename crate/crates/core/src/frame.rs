//! Column-oriented numeric table with a binary outcome.

use std::io::Read;

#[derive(Debug, thiserror::Error)]
pub enum FrameError {
    #[error("unknown column {0:?}")]
    UnknownColumn(String),
    #[error("column {name:?} has {got} rows, expected {expected}")]
    Ragged { name: String, got: usize, expected: usize },
    #[error("row {row}: cannot parse {column}={value:?}")]
    Parse { row: usize, column: String, value: String },
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Frame {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
    pub outcome: Vec<bool>,
    /// Grouping key per row (the change id); empty when not tracked.
    pub groups: Vec<String>,
    /// Member key per row (the reviewer id); empty when not tracked.
    pub members: Vec<String>,
}

impl Frame {
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>, outcome: Vec<bool>) -> Result<Self, FrameError> {
        let n = outcome.len();
        for (name, col) in names.iter().zip(&columns) {
            if col.len() != n {
                return Err(FrameError::Ragged { name: name.clone(), got: col.len(), expected: n });
            }
        }
        Ok(Frame { names, columns, outcome, groups: Vec::new(), members: Vec::new() })
    }

    pub fn nrows(&self) -> usize {
        self.outcome.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Result<&[f64], FrameError> {
        self.index_of(name).map(|i| self.columns[i].as_slice()).ok_or_else(|| FrameError::UnknownColumn(name.to_string()))
    }

    pub fn outcome_f64(&self) -> Vec<f64> {
        self.outcome.iter().map(|&y| if y { 1.0 } else { 0.0 }).collect()
    }

    /// (#TRUE, #FALSE)
    pub fn class_counts(&self) -> (usize, usize) {
        let t = self.outcome.iter().filter(|&&y| y).count();
        (t, self.outcome.len() - t)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Frame {
        let pick = |v: &Vec<String>| if v.is_empty() { Vec::new() } else { rows.iter().map(|&r| v[r].clone()).collect() };
        Frame {
            names: self.names.clone(),
            columns: self.columns.iter().map(|c| rows.iter().map(|&r| c[r]).collect()).collect(),
            outcome: rows.iter().map(|&r| self.outcome[r]).collect(),
            groups: pick(&self.groups),
            members: pick(&self.members),
        }
    }

    pub fn select_columns(&self, names: &[String]) -> Result<Frame, FrameError> {
        let mut columns = Vec::with_capacity(names.len());
        for n in names {
            columns.push(self.column(n)?.to_vec());
        }
        Ok(Frame {
            names: names.to_vec(),
            columns,
            outcome: self.outcome.clone(),
            groups: self.groups.clone(),
            members: self.members.clone(),
        })
    }

    /// Rows where `name == value`.
    pub fn filter_eq(&self, name: &str, value: f64) -> Result<Frame, FrameError> {
        let col = self.column(name)?;
        let rows: Vec<usize> = (0..self.nrows()).filter(|&r| col[r] == value).collect();
        Ok(self.select_rows(&rows))
    }

    /// Values of row `r` for the given columns.
    pub fn row(&self, r: usize, indices: &[usize]) -> Vec<f64> {
        indices.iter().map(|&i| self.columns[i][r]).collect()
    }
}

pub(crate) fn parse_cell(text: &str) -> Option<f64> {
    match text {
        "true" | "TRUE" | "True" => Some(1.0),
        "false" | "FALSE" | "False" => Some(0.0),
        other => other.parse().ok(),
    }
}

/// Reads a CSV where `outcome` is the response, `change_id`/`reviewer` are keys and every other
/// column except `created_at` is numeric (booleans read as 0/1).
pub fn read_frame_csv<R: Read>(input: R) -> Result<Frame, FrameError> {
    let mut reader = csv::Reader::from_reader(input);
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let find = |n: &str| headers.iter().position(|h| h == n);
    let outcome_idx = find("outcome").ok_or_else(|| FrameError::MissingColumn("outcome".into()))?;
    let group_idx = find("change_id");
    let member_idx = find("reviewer");
    let skip = ["outcome", "change_id", "reviewer", "created_at"];
    let numeric: Vec<usize> = (0..headers.len()).filter(|&i| !skip.contains(&headers[i].as_str())).collect();

    let mut frame = Frame {
        names: numeric.iter().map(|&i| headers[i].clone()).collect(),
        columns: vec![Vec::new(); numeric.len()],
        ..Frame::default()
    };
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let parse_err = |i: usize| FrameError::Parse { row: row + 1, column: headers[i].clone(), value: record[i].to_string() };
        for (slot, &i) in numeric.iter().enumerate() {
            frame.columns[slot].push(parse_cell(&record[i]).ok_or_else(|| parse_err(i))?);
        }
        let y = parse_cell(&record[outcome_idx]).ok_or_else(|| parse_err(outcome_idx))?;
        frame.outcome.push(y != 0.0);
        if let Some(g) = group_idx {
            frame.groups.push(record[g].to_string());
        }
        if let Some(m) = member_idx {
            frame.members.push(record[m].to_string());
        }
    }
    Ok(frame)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_instance_layout() {
        let text = "change_id,reviewer,created_at,x,flag,outcome\nc1,r1,2020-01-01T00:00:00Z,1.5,true,true\nc1,r2,2020-01-01T00:00:00Z,2,false,false\n";
        let f = read_frame_csv(text.as_bytes()).unwrap();
        assert_eq!(f.names, ["x", "flag"]);
        assert_eq!(f.columns, vec![vec![1.5, 2.0], vec![1.0, 0.0]]);
        assert_eq!(f.outcome, [true, false]);
        assert_eq!(f.groups, ["c1", "c1"]);
        assert_eq!(f.members, ["r1", "r2"]);
        let only_flagged = f.filter_eq("flag", 1.0).unwrap();
        assert_eq!(only_flagged.nrows(), 1);
        assert_eq!(only_flagged.members, ["r1"]);
    }

    #[test]
    fn bad_cell_reports_row() {
        let text = "x,outcome\n1,true\nabc,false\n";
        assert_eq!(read_frame_csv(text.as_bytes()).unwrap_err().to_string(), "row 2: cannot parse x=\"abc\"");
    }
}
