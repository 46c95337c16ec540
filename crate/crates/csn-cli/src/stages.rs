//! Shared plumbing between subcommands: file loading, id mapping, and staged
//! outputs that later stages read back.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use csn_core::{load_network, LoadedNetwork, SplitPair};
use serde::Serialize;

pub fn load(social: &Path, behavior: &Path) -> Result<LoadedNetwork> {
    load_network(social, behavior).context("graph-core: loading coupled network")
}

/// Parse a two-column id file (same format the edge lists use).
pub fn read_pair_file(path: &Path) -> Result<Vec<(u64, u64)>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut pairs = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.with_context(|| format!("reading {}", path.display()))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let parse = |field: Option<&str>| -> Result<u64> {
            let Some(field) = field else {
                bail!("{}:{}: expected two fields", path.display(), idx + 1);
            };
            field
                .parse()
                .with_context(|| format!("{}:{}: bad id {field:?}", path.display(), idx + 1))
        };
        let a = parse(fields.next())?;
        let b = parse(fields.next())?;
        if fields.next().is_some() {
            bail!("{}:{}: trailing fields", path.display(), idx + 1);
        }
        pairs.push((a, b));
    }
    Ok(pairs)
}

/// Map held-out (user, item) pairs in original ids onto the dense indices of
/// a loaded training network. Pairs naming users or items absent from the
/// training files cannot be scored and are dropped; the count is returned so
/// callers can report it.
pub fn map_test_pairs(loaded: &LoadedNetwork, pairs: &[(u64, u64)]) -> (Vec<(u32, u32)>, usize) {
    let mut mapped = Vec::with_capacity(pairs.len());
    let mut dropped = 0usize;
    for &(user, item) in pairs {
        match (
            loaded.user_ids.binary_search(&user),
            loaded.item_ids.binary_search(&item),
        ) {
            (Ok(u), Ok(i)) => mapped.push((u as u32, i as u32)),
            _ => dropped += 1,
        }
    }
    mapped.sort_unstable();
    mapped.dedup();
    (mapped, dropped)
}

/// Assemble a split from staged files: the training network plus mapped
/// held-out pairs. Warns on stderr when pairs had to be dropped.
pub fn staged_split(loaded: &LoadedNetwork, test_path: &Path, seed: u64) -> Result<SplitPair> {
    let raw = read_pair_file(test_path)?;
    let (test, dropped) = map_test_pairs(loaded, &raw);
    if dropped > 0 {
        eprintln!(
            "warning: dropped {dropped} of {} held-out pairs naming users or items absent from the training files",
            raw.len()
        );
    }
    if test.is_empty() {
        bail!(
            "no held-out pair in {} maps onto the training network",
            test_path.display()
        );
    }
    Ok(SplitPair {
        train: loaded.network.clone(),
        test,
        seed,
    })
}

/// Write pretty JSON with a trailing newline, to a file or stdout.
pub fn write_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let rendered = serde_json::to_string_pretty(value).context("rendering json")?;
    match out {
        Some(path) => {
            let mut file = File::create(path)
                .with_context(|| format!("writing {}", path.display()))?;
            file.write_all(rendered.as_bytes())?;
            file.write_all(b"\n")?;
        }
        None => println!("{rendered}"),
    }
    Ok(())
}

pub fn create_out(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    let file = File::create(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(BufWriter::new(file))
}
