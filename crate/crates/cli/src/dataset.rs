//! Simile dataset ingestion: tab-separated `source<TAB>target` rows.

use std::path::Path;

use chimera_core::eval::SimilePair;

use crate::errors::CliError;

/// Rows loaded plus how many malformed rows were dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadedDataset {
    pub pairs: Vec<SimilePair>,
    pub skipped_rows: usize,
}

/// Read a TSV of simile rewrites. The first two columns are the literal
/// source sentence and its simile rewrite; extra columns are ignored and
/// rows with fewer than two non-empty fields are counted as skipped.
pub fn load_simile_tsv(
    path: &Path,
    has_header: bool,
    limit: Option<usize>,
) -> Result<LoadedDataset, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(has_header)
        .flexible(true)
        .from_path(path)
        .map_err(|e| CliError::input(format!("cannot read dataset {}: {e}", path.display())))?;

    let mut pairs = Vec::new();
    let mut skipped_rows = 0usize;
    for record in reader.records() {
        if let Some(limit) = limit {
            if pairs.len() >= limit {
                break;
            }
        }
        let record =
            record.map_err(|e| CliError::input(format!("bad row in {}: {e}", path.display())))?;
        let source = record.get(0).map(str::trim).unwrap_or_default();
        let target = record.get(1).map(str::trim).unwrap_or_default();
        if source.is_empty() || target.is_empty() {
            skipped_rows += 1;
            continue;
        }
        pairs.push(SimilePair {
            source: source.to_string(),
            target: target.to_string(),
        });
    }
    Ok(LoadedDataset {
        pairs,
        skipped_rows,
    })
}
