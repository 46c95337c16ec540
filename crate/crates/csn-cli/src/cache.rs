//! Content-addressed cache for influence matrices.
//!
//! The expensive stage of a sweep is building the influence matrix, and it
//! depends only on the social layer and a handful of parameters. Cache files
//! are keyed by a digest of the canonical network bytes plus those
//! parameters, so a key can never go stale: different inputs hash to a
//! different key and simply miss.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use csn_core::{
    lin_influence, lout_influence, rwr_influence, CoupledNetwork, InfluenceKind, InfluenceMatrix,
    PairScores, TanimotoForm,
};
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        let _ = write!(out, "{byte:02x}");
    }
    out
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let mut file =
        File::open(path).with_context(|| format!("hashing input {}", path.display()))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        let _ = write!(out, "{byte:02x}");
    }
    Ok(out)
}

/// Canonical byte representation of a network: counts, then both sorted edge
/// lists in dense indices. Loading the same files always reproduces it.
pub fn network_digest(net: &CoupledNetwork) -> String {
    let mut bytes = Vec::new();
    bytes.extend_from_slice(
        format!("{} {}\n", net.user_count(), net.item_count()).as_bytes(),
    );
    for (a, b) in net.social_edges() {
        bytes.extend_from_slice(format!("{a} {b}\n").as_bytes());
    }
    bytes.extend_from_slice(b"--\n");
    for (u, i) in net.behavior_edges() {
        bytes.extend_from_slice(format!("{u} {i}\n").as_bytes());
    }
    sha256_hex(&bytes)
}

/// Everything the influence computation depends on besides the network.
#[derive(Debug, Clone, Copy)]
pub struct InfluenceSpec {
    pub kind: InfluenceKind,
    pub damping: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub tanimoto: TanimotoForm,
    pub transpose: bool,
}

impl InfluenceSpec {
    fn key(&self, net: &CoupledNetwork) -> String {
        // Only the parameters that feed the selected kind enter the key, so
        // e.g. a walk cache survives a change of the overlap form.
        let params = match self.kind {
            InfluenceKind::Rwr => format!(
                "rwr c={} tol={} iters={}",
                self.damping, self.tol, self.max_iters
            ),
            InfluenceKind::Lin => format!("lin form={}", self.tanimoto),
            InfluenceKind::Lout => format!("lout form={}", self.tanimoto),
        };
        let text = format!(
            "{} {} transpose={}",
            network_digest(net),
            params,
            self.transpose
        );
        sha256_hex(text.as_bytes())[..16].to_string()
    }

    pub fn cache_file(&self, dir: &Path, net: &CoupledNetwork) -> PathBuf {
        dir.join(format!("sim-{}-{}.tsv", self.kind, self.key(net)))
    }

    fn compute(&self, net: &CoupledNetwork) -> Result<InfluenceMatrix> {
        let matrix = match self.kind {
            InfluenceKind::Rwr => rwr_influence(net, self.damping, self.tol, self.max_iters)
                .context("similarity: walk failed")?,
            InfluenceKind::Lin => lin_influence(net, self.tanimoto),
            InfluenceKind::Lout => lout_influence(net, self.tanimoto),
        };
        Ok(if self.transpose { matrix.transposed() } else { matrix })
    }
}

/// Computed or loaded influence matrix, with a note of where it came from.
pub struct InfluenceSource {
    pub matrix: InfluenceMatrix,
    pub cache_file: Option<PathBuf>,
    pub from_cache: bool,
}

/// Fetch the influence matrix for `spec`, via `cache_dir` when given.
pub fn influence_with_cache(
    net: &CoupledNetwork,
    spec: &InfluenceSpec,
    cache_dir: Option<&Path>,
) -> Result<InfluenceSource> {
    let Some(dir) = cache_dir else {
        return Ok(InfluenceSource {
            matrix: spec.compute(net)?,
            cache_file: None,
            from_cache: false,
        });
    };
    let path = spec.cache_file(dir, net);
    if path.is_file() {
        let file = File::open(&path)
            .with_context(|| format!("opening cached matrix {}", path.display()))?;
        let scores = PairScores::read_tsv(BufReader::new(file), net.user_count())
            .with_context(|| format!("reading cached matrix {}", path.display()))?;
        let matrix = InfluenceMatrix {
            kind: spec.kind,
            damping: (spec.kind == InfluenceKind::Rwr).then_some(spec.damping),
            scores,
        };
        return Ok(InfluenceSource {
            matrix,
            cache_file: Some(path),
            from_cache: true,
        });
    }
    let matrix = spec.compute(net)?;
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating cache dir {}", dir.display()))?;
    let file = File::create(&path)
        .with_context(|| format!("writing cached matrix {}", path.display()))?;
    let mut w = BufWriter::new(file);
    // Dense indices; scores print in shortest round-trip form, so a reload
    // reproduces the exact floats.
    matrix
        .scores
        .write_tsv(&mut w, |u| u as u64)
        .with_context(|| format!("writing cached matrix {}", path.display()))?;
    Ok(InfluenceSource {
        matrix,
        cache_file: Some(path),
        from_cache: false,
    })
}
