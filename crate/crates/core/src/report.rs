//! Experiment reports: typed tables that serialise to JSON or CSV.
//!
//! Every numeric cell says whether it is exact (an integer or a `"p/q"`
//! string) or floating (an `f64` with a note on where its error comes from).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::arith::{format_rational, Rational};
use crate::equidist::{orbit_table, EtConstants, OrbitRow};
use crate::error::{Error, Result};
use crate::schmidt::ConstructionState;
use crate::sierpinski::SierpinskiState;
use crate::TOOL_VERSION;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Cell {
    Exact { value: String },
    Float { value: f64, note: String },
    Text { value: String },
    Flag { value: bool },
}

impl Cell {
    pub fn rational(x: &Rational) -> Self {
        Cell::Exact { value: format_rational(x) }
    }

    pub fn int(x: impl ToString) -> Self {
        Cell::Exact { value: x.to_string() }
    }

    pub fn float(value: f64, note: &str) -> Self {
        Cell::Float { value, note: note.to_string() }
    }

    /// The CSV rendering. Floats use the shortest representation that
    /// round-trips.
    pub fn render(&self) -> String {
        match self {
            Cell::Exact { value } | Cell::Text { value } => value.clone(),
            Cell::Float { value, .. } => format!("{value:e}"),
            Cell::Flag { value } => value.to_string(),
        }
    }

    fn tag(&self) -> &'static str {
        match self {
            Cell::Exact { .. } => "exact",
            Cell::Float { .. } => "float",
            Cell::Text { .. } => "text",
            Cell::Flag { .. } => "flag",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    /// CSV with a header row; each header carries the cell tag, e.g.
    /// `star[exact]`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header: Vec<String> = self
            .columns
            .iter()
            .enumerate()
            .map(|(i, c)| match self.rows.first() {
                Some(r) => format!("{c}[{}]", r[i].tag()),
                None => c.clone(),
            })
            .collect();
        let csv_err = |e: csv::Error| Error::Invalid(e.to_string());
        w.write_record(&header).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub tool_version: String,
    pub command: Vec<String>,
    pub descriptors: BTreeMap<String, String>,
    /// false whenever a toy plan, schedule or cap took part
    pub certified: bool,
    pub tables: Vec<Table>,
}

impl ExperimentReport {
    pub fn new(command: Vec<String>, certified: bool) -> Self {
        Self {
            tool_version: TOOL_VERSION.to_string(),
            command,
            descriptors: BTreeMap::new(),
            certified,
            tables: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    /// All tables, one CSV block each, separated by a `# name` line.
    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::new();
        for t in &self.tables {
            out.push_str(&format!("# {}\n", t.name));
            out.push_str(&t.to_csv()?);
        }
        Ok(out)
    }
}

const ET_NOTE: &str = "f64 sum of f64 Weyl sums";

pub fn orbit_rows_table(base: u64, rows: &[OrbitRow]) -> Table {
    Table {
        name: format!("orbit base {base}"),
        columns: ["N", "extreme", "star", "H", "weyl_first_over_N", "et_bound"].map(String::from).to_vec(),
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    Cell::int(r.n),
                    Cell::rational(&r.extreme),
                    Cell::rational(&r.star),
                    Cell::int(r.h),
                    Cell::float(r.weyl_first, "|S_1|/N from exact phases, f64 cos/sin"),
                    Cell::float(r.et_bound, ET_NOTE),
                ]
            })
            .collect(),
    }
}

pub fn schmidt_steps_table(state: &ConstructionState) -> Table {
    Table {
        name: "schmidt steps".into(),
        columns: [
            "m",
            "s",
            "width",
            "chosen_index",
            "xi",
            "candidates",
            "phase_evaluations",
            "best_objective",
            "lemma_ratio",
            "nested",
        ]
        .map(String::from)
        .to_vec(),
        rows: state
            .steps
            .iter()
            .map(|s| {
                vec![
                    Cell::int(s.m),
                    Cell::int(s.s),
                    Cell::int(s.width),
                    Cell::int(s.chosen_index),
                    Cell::rational(&s.xi),
                    Cell::int(s.candidate_count),
                    Cell::int(s.phase_evaluations),
                    Cell::float(s.best_objective, "compensated f64 cosine sum"),
                    Cell::float(s.lemma_ratio, "f64"),
                    Cell::Flag { value: s.nested },
                ]
            })
            .collect(),
    }
}

pub fn sierpinski_steps_table(state: &SierpinskiState) -> Table {
    Table {
        name: "sierpinski steps".into(),
        columns: ["n", "k", "digit", "chosen_measure", "cell_length", "survives"].map(String::from).to_vec(),
        rows: state
            .steps
            .iter()
            .map(|s| {
                vec![
                    Cell::int(s.n),
                    Cell::int(s.k),
                    Cell::int(s.digit),
                    Cell::rational(&s.measures[s.digit as usize]),
                    Cell::rational(&s.cell_length),
                    Cell::Flag { value: s.survives },
                ]
            })
            .collect(),
    }
}

/// Report for a Schmidt state: the step log and the orbit of `xi` in each
/// of `bases`.
pub fn schmidt_report(
    state: &ConstructionState,
    bases: &[u64],
    lengths: &[usize],
    command: Vec<String>,
) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new(command, state.certified());
    rep.descriptors.insert("schedule".into(), state.schedule.describe());
    rep.descriptors.insert(
        "plan".into(),
        format!(
            "horizon {}, r = {:?}, s = {:?}, certified = {}",
            state.plan.horizon, state.plan.r, state.plan.s, state.plan.certified
        ),
    );
    rep.descriptors.insert("steps".into(), state.m.to_string());
    rep.descriptors.insert("xi".into(), format_rational(&state.xi));
    rep.tables.push(schmidt_steps_table(state));
    for &b in bases {
        let rows = orbit_table(&state.xi, b, lengths, EtConstants::default())?;
        rep.tables.push(orbit_rows_table(b, &rows));
    }
    Ok(rep)
}

/// Report for a Sierpinski state: the step log and the orbit of the
/// constructed prefix value in each of `bases`.
pub fn sierpinski_report(
    state: &SierpinskiState,
    bases: &[u64],
    lengths: &[usize],
    command: Vec<String>,
) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new(command, state.certified());
    let x = state.digits.value();
    rep.descriptors.insert("eps".into(), format_rational(&state.params.eps));
    rep.descriptors.insert("base".into(), state.params.base.to_string());
    rep.descriptors.insert("mode".into(), format!("{:?}", state.mode).to_lowercase());
    rep.descriptors.insert("digits".into(), state.digits.to_string());
    rep.tables.push(sierpinski_steps_table(state));
    for &b in bases {
        let rows = orbit_table(&x, b, lengths, EtConstants::default())?;
        rep.tables.push(orbit_rows_table(b, &rows));
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;

    #[test]
    fn csv_headers_carry_tags() {
        let rows = orbit_table(&rat(1, 7), 10, &[6, 12], EtConstants::default()).unwrap();
        let t = orbit_rows_table(10, &rows);
        let csv = t.to_csv().unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "N[exact],extreme[exact],star[exact],H[exact],weyl_first_over_N[float],et_bound[float]"
        );
        assert!(lines.next().unwrap().starts_with("6,"));
        let rep = ExperimentReport { tables: vec![t], ..ExperimentReport::new(vec!["x".into()], true) };
        let back: ExperimentReport = serde_json::from_str(&rep.to_json()).unwrap();
        assert_eq!(back, rep);
    }
}
