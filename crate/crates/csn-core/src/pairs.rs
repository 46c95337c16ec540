//! Sparse user-pair score storage shared by the similarity and hybrid
//! matrices: row-major adjacency with sorted columns, zero entries implicit.

use std::io::{self, BufRead, Write};
use std::path::PathBuf;

use crate::error::{CsnError, Result};

/// Scores over ordered user pairs (i, j). Absent pairs score zero. Rows are
/// sorted by column and hold only finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct PairScores {
    rows: Vec<Vec<(u32, f64)>>,
}

impl PairScores {
    pub fn new(user_count: usize) -> Self {
        Self {
            rows: vec![Vec::new(); user_count],
        }
    }

    /// Assemble from per-row (column, value) lists; rows are sorted here.
    /// Panics on non-finite values, out-of-range or duplicate columns —
    /// those are construction bugs, not input errors.
    pub fn from_rows(rows: Vec<Vec<(u32, f64)>>) -> Self {
        let user_count = rows.len();
        let mut rows = rows;
        for row in &mut rows {
            row.sort_unstable_by_key(|&(j, _)| j);
            for w in row.windows(2) {
                assert!(w[0].0 != w[1].0, "duplicate column {}", w[0].0);
            }
            for &(j, v) in row.iter() {
                assert!((j as usize) < user_count, "column {j} out of range");
                assert!(v.is_finite(), "non-finite score {v} at column {j}");
            }
        }
        Self { rows }
    }

    pub fn user_count(&self) -> usize {
        self.rows.len()
    }

    /// Number of stored (nonzero) pairs.
    pub fn stored_pairs(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn get(&self, i: u32, j: u32) -> f64 {
        let row = &self.rows[i as usize];
        match row.binary_search_by_key(&j, |&(c, _)| c) {
            Ok(pos) => row[pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn insert(&mut self, i: u32, j: u32, value: f64) {
        assert!(value.is_finite(), "non-finite score {value}");
        assert!((j as usize) < self.rows.len(), "column {j} out of range");
        let row = &mut self.rows[i as usize];
        match row.binary_search_by_key(&j, |&(c, _)| c) {
            Ok(pos) => row[pos].1 = value,
            Err(pos) => row.insert(pos, (j, value)),
        }
    }

    pub fn row(&self, i: u32) -> &[(u32, f64)] {
        &self.rows[i as usize]
    }

    /// All stored entries in ascending (row, column) order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |&(j, v)| (i as u32, j, v)))
    }

    pub fn transposed(&self) -> Self {
        let mut rows = vec![Vec::new(); self.rows.len()];
        for (i, j, v) in self.iter() {
            rows[j as usize].push((i, v));
        }
        // scatter order is already sorted by the inner index
        Self { rows }
    }

    /// Write "i<TAB>j<TAB>score" lines in ascending pair order. `id_of`
    /// translates dense indices back to caller-facing ids.
    pub fn write_tsv<W: Write>(&self, mut w: W, id_of: impl Fn(u32) -> u64) -> io::Result<()> {
        for (i, j, v) in self.iter() {
            writeln!(w, "{}\t{}\t{}", id_of(i), id_of(j), v)?;
        }
        Ok(())
    }

    /// Read triples written by [`write_tsv`](Self::write_tsv) with identity
    /// ids (dense indices).
    pub fn read_tsv<R: BufRead>(r: R, user_count: usize) -> Result<Self> {
        let path = PathBuf::from("<pair scores>");
        let mut out = Self::new(user_count);
        for (idx, line) in r.lines().enumerate() {
            let line = line.map_err(|source| CsnError::Io {
                path: path.clone(),
                source,
            })?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut fields = trimmed.split('\t');
            let bad = || CsnError::Parse {
                path: path.clone(),
                line: idx + 1,
                message: format!("expected \"i<TAB>j<TAB>score\", got {trimmed:?}"),
            };
            let i: u32 = fields.next().and_then(|f| f.parse().ok()).ok_or_else(bad)?;
            let j: u32 = fields.next().and_then(|f| f.parse().ok()).ok_or_else(bad)?;
            let v: f64 = fields.next().and_then(|f| f.parse().ok()).ok_or_else(bad)?;
            if fields.next().is_some() {
                return Err(bad());
            }
            if i as usize >= user_count || j as usize >= user_count {
                return Err(CsnError::Parse {
                    path: path.clone(),
                    line: idx + 1,
                    message: format!("pair ({i}, {j}) outside user count {user_count}"),
                });
            }
            if !v.is_finite() {
                return Err(CsnError::Parse {
                    path: path.clone(),
                    line: idx + 1,
                    message: format!("non-finite score {v}"),
                });
            }
            out.rows[i as usize].push((j, v));
        }
        for row in &mut out.rows {
            row.sort_unstable_by_key(|&(j, _)| j);
        }
        Ok(out)
    }
}
