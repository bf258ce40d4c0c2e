//! CSV import into the store and filtered export.

use std::io::{Read, Write};

use incidentdb_core::model::{read_csv, write_csv, CsvError};
use serde::Serialize;

use crate::query::QueryFilter;
use crate::store::{Source, Store, StoreEntry};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RowOutcome {
    Accepted { row: usize, serial_no: u64 },
    Rejected { row: usize, code: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Default)]
pub struct IngestReport {
    pub accepted: usize,
    pub rejected: usize,
    pub outcomes: Vec<RowOutcome>,
}

impl IngestReport {
    pub fn rejections(&self) -> impl Iterator<Item = &RowOutcome> {
        self.outcomes.iter().filter(|o| matches!(o, RowOutcome::Rejected { .. }))
    }
}

/// Parses incident CSV and appends every well-formed row. Rows are numbered
/// from 1, header excluded. A bad header or unreadable input fails the
/// whole import.
pub fn import_csv<R: Read>(store: &mut Store, reader: R, source: Source) -> Result<IngestReport, CsvError> {
    let rows = read_csv(&store.options().schema, reader)?;
    let mut parsed = Vec::new();
    let mut report = IngestReport::default();
    let mut parse_failures = Vec::new();
    for (i, row) in rows.into_iter().enumerate() {
        match row {
            Ok(r) => parsed.push((i + 1, r)),
            Err(e) => {
                parse_failures.push(RowOutcome::Rejected { row: e.row, code: "parse_error".into(), reason: e.reason })
            }
        }
    }
    let results = store.append_batch(parsed.iter().map(|(_, r)| r), source);
    let mut outcomes: Vec<RowOutcome> = parsed
        .iter()
        .zip(results)
        .map(|((row, _), res)| match res {
            Ok(serial_no) => RowOutcome::Accepted { row: *row, serial_no },
            Err(e) => RowOutcome::Rejected { row: *row, code: e.code().into(), reason: e.to_string() },
        })
        .collect();
    outcomes.extend(parse_failures);
    outcomes.sort_by_key(|o| match o {
        RowOutcome::Accepted { row, .. } | RowOutcome::Rejected { row, .. } => *row,
    });
    report.accepted = outcomes.iter().filter(|o| matches!(o, RowOutcome::Accepted { .. })).count();
    report.rejected = outcomes.len() - report.accepted;
    report.outcomes = outcomes;
    Ok(report)
}

/// Writes matching records (with their serials) as incident CSV. Paging in
/// the filter applies. Returns the number of rows written.
pub fn export_csv<W: Write>(entries: &[StoreEntry], filter: &QueryFilter, writer: W) -> Result<usize, CsvError> {
    let (_, page) = filter.apply(entries);
    write_csv(writer, page.into_iter().map(|e| &e.record))
}
