use std::path::Path;

use crate::{Error, Result};

pub(crate) const MISSING: &str = "—";

/// A report table. `None` cells render as [`MISSING`].
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<Option<String>>>,
}

impl Table {
    pub(crate) fn new(headers: &[&str]) -> Self {
        Self {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, row: Vec<Option<String>>) {
        assert_eq!(row.len(), self.headers.len(), "row width must match the header");
        self.rows.push(row);
    }

    fn cells(&self) -> impl Iterator<Item = Vec<&str>> + '_ {
        self.rows
            .iter()
            .map(|r| r.iter().map(|c| c.as_deref().unwrap_or(MISSING)).collect())
    }

    pub(crate) fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers)?;
        for row in self.cells() {
            w.write_record(row)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Invariant(format!("csv buffer: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Invariant(e.to_string()))
    }

    /// Column-aligned text; the first column is left-aligned, the rest right.
    pub(crate) fn to_text(&self) -> String {
        let mut widths: Vec<usize> = self.headers.iter().map(|h| h.chars().count()).collect();
        for row in self.cells() {
            for (w, c) in widths.iter_mut().zip(&row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |cells: Vec<&str>| -> String {
            let parts: Vec<String> = cells
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (c, &w))| {
                    let pad = " ".repeat(w - c.chars().count());
                    if i == 0 {
                        format!("{c}{pad}")
                    } else {
                        format!("{pad}{c}")
                    }
                })
                .collect();
            parts.join("  ").trim_end().to_string()
        };
        let mut out = line(self.headers.iter().map(String::as_str).collect());
        out.push('\n');
        let rule: usize = widths.iter().sum::<usize>() + 2 * widths.len().saturating_sub(1);
        out.push_str(&"-".repeat(rule));
        out.push('\n');
        for row in self.cells() {
            out.push_str(&line(row));
            out.push('\n');
        }
        out
    }

    pub(crate) fn write(&self, csv_path: Option<&Path>, text_path: Option<&Path>) -> Result<()> {
        if let Some(p) = csv_path {
            std::fs::write(p, self.to_csv()?).map_err(|e| Error::io(p, e))?;
        }
        if let Some(p) = text_path {
            std::fs::write(p, self.to_text()).map_err(|e| Error::io(p, e))?;
        }
        Ok(())
    }
}

/// Four decimals, as in the printed tables.
pub(crate) fn fixed4(v: f64) -> String {
    format!("{v:.4}")
}

/// Shortest text that parses back to the same `f64`.
pub(crate) fn exact(v: f64) -> String {
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new(&["model", "mu_1"]);
        assert_eq!(t.to_csv().unwrap(), "model,mu_1\n");
    }

    #[test]
    fn missing_cells_are_marked() {
        let mut t = Table::new(&["model", "ndcg"]);
        t.push(vec![Some("VSM".into()), None]);
        assert_eq!(t.to_csv().unwrap(), "model,ndcg\nVSM,—\n");
        assert!(t.to_text().contains('—'));
    }

    #[test]
    fn text_columns_align() {
        let mut t = Table::new(&["model", "ndcg"]);
        t.push(vec![Some("Att-Item-kNN".into()), Some(fixed4(0.123456))]);
        t.push(vec![Some("VSM".into()), Some(fixed4(1.0))]);
        let text = t.to_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[2], "Att-Item-kNN  0.1235");
        assert_eq!(lines[3], "VSM           1.0000");
        assert_eq!(lines[0].len(), lines[2].len());
    }

    #[test]
    fn exact_format_round_trips() {
        for v in [0.1 + 0.2, 1.0 / 3.0, 0.7333333333333333, 1e-17, 0.0] {
            assert_eq!(exact(v).parse::<f64>().unwrap(), v);
        }
    }
}
