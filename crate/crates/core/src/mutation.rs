//! Chunk-level mutations on decision seeds.
//!
//! A chunk is any node of record type. Mutations edit the seed of a base
//! file and regenerate it, so lengths, checksums and other derived fields
//! stay consistent.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decisionstream::{AltSource, ChoiceEvent, EventKind};
use crate::engine::{self, EngineError, ExecOptions, Output};
use crate::runtime::ParseNode;
use crate::templatelang::{TemplateUnit, TypeRef};

/// Attempts made by [`random_smart_mutation`] before giving up.
pub const MAX_ATTEMPTS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MutationError {
    #[error("no applicable mutation")]
    NoApplicableMutation,
    #[error("{0}")]
    NotApplicable(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationOp {
    Abstract,
    Replace,
    Delete,
    Insert,
}

impl MutationOp {
    pub const ALL: [MutationOp; 4] = [
        MutationOp::Abstract,
        MutationOp::Replace,
        MutationOp::Delete,
        MutationOp::Insert,
    ];
}

/// A parsed or generated file together with its seed and event log.
#[derive(Debug, Clone)]
pub struct SeedFile {
    pub name: String,
    pub file: Vec<u8>,
    pub seed: Vec<u8>,
    pub tree: ParseNode,
    pub events: Vec<ChoiceEvent>,
}

impl SeedFile {
    pub fn from_output(name: impl Into<String>, out: Output) -> Self {
        Self {
            name: name.into(),
            file: out.file,
            seed: out.seed,
            tree: out.tree,
            events: out.events,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkRecord {
    /// Index of the owning file in the pool.
    pub base: usize,
    pub node_id: usize,
    pub name: String,
    pub type_name: String,
    pub seed_span: (usize, usize),
    pub file_span: (usize, usize),
    pub optional: bool,
    /// Seed span of the lookahead call that ends where the chunk starts.
    pub lookahead_before: Option<(usize, usize)>,
    /// Seed span of the lookahead call that starts where the chunk ends.
    pub lookahead_after: Option<(usize, usize)>,
}

impl ChunkRecord {
    /// Deletable and insertable: gated by a lookahead and followed by another.
    pub fn is_movable(&self) -> bool {
        self.lookahead_before.is_some() && self.lookahead_after.is_some()
    }

    /// Seed bytes removed by a delete and carried by an insert.
    fn movable_span(&self) -> Option<(usize, usize)> {
        Some((self.lookahead_before?.0, self.lookahead_after?.0))
    }
}

fn lookahead(ev: Option<&ChoiceEvent>) -> Option<(usize, usize)> {
    ev.filter(|e| e.kind == EventKind::LookaheadCall).map(|e| e.seed_span)
}

/// Record-typed nodes of `f`, in pre-order.
pub fn chunks_of(unit: &TemplateUnit, f: &SeedFile, base: usize) -> Vec<ChunkRecord> {
    let mut out = Vec::new();
    for n in f.tree.walk().into_iter().skip(1) {
        if !matches!(unit.resolve_type(&n.type_name), Some(TypeRef::Record(_))) {
            continue;
        }
        let before = n
            .events
            .0
            .checked_sub(1)
            .and_then(|i| lookahead(f.events.get(i)))
            .filter(|s| s.1 == n.decision_span.0);
        let after = lookahead(f.events.get(n.events.1)).filter(|s| s.0 == n.decision_span.1);
        out.push(ChunkRecord {
            base,
            node_id: n.id,
            name: n.name.clone(),
            type_name: n.type_name.clone(),
            seed_span: n.decision_span,
            file_span: n.file_span,
            optional: n.optional,
            lookahead_before: before,
            lookahead_after: after,
        });
    }
    out
}

/// Files and their chunks, grouped by type.
#[derive(Debug, Clone, Default)]
pub struct ChunkPool {
    pub files: Vec<SeedFile>,
    pub chunks: Vec<ChunkRecord>,
    by_type: BTreeMap<String, Vec<usize>>,
}

impl ChunkPool {
    pub fn add(&mut self, unit: &TemplateUnit, f: SeedFile) -> usize {
        let base = self.files.len();
        for c in chunks_of(unit, &f, base) {
            self.by_type
                .entry(c.type_name.clone())
                .or_default()
                .push(self.chunks.len());
            self.chunks.push(c);
        }
        self.files.push(f);
        base
    }

    /// Chunk indices of the given type.
    pub fn of_type(&self, type_name: &str) -> &[usize] {
        self.by_type.get(type_name).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn chunks_in(&self, base: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.chunks.len()).filter(move |&i| self.chunks[i].base == base)
    }
}

/// Parses every file; files the template rejects are skipped and returned by name.
pub fn index_corpus(
    unit: &TemplateUnit,
    files: impl IntoIterator<Item = (String, Vec<u8>)>,
    opts: &ExecOptions,
) -> (ChunkPool, Vec<(String, EngineError)>) {
    let mut pool = ChunkPool::default();
    let mut rejected = Vec::new();
    for (name, bytes) in files {
        match engine::parse(unit, &bytes, opts) {
            Ok(out) => {
                pool.add(unit, SeedFile::from_output(name, out));
            }
            Err(e) => rejected.push((name, e)),
        }
    }
    (pool, rejected)
}

/// Regenerates `target` from fresh random decisions.
pub fn smart_abstract(
    unit: &TemplateUnit,
    pool: &ChunkPool,
    target: usize,
    rng_seed: u64,
    opts: &ExecOptions,
) -> Result<Output, MutationError> {
    let c = &pool.chunks[target];
    let alt = AltSource::Random(ChaCha8Rng::seed_from_u64(rng_seed));
    Ok(engine::run_with_splice(
        unit,
        &pool.files[c.base].seed,
        c.seed_span,
        c.node_id,
        alt,
        opts,
    )?)
}

/// Regenerates `target` from the decisions of `donor`, a chunk of the same type.
pub fn smart_replace(
    unit: &TemplateUnit,
    pool: &ChunkPool,
    target: usize,
    donor: usize,
    opts: &ExecOptions,
) -> Result<Output, MutationError> {
    let (c, d) = (&pool.chunks[target], &pool.chunks[donor]);
    if c.type_name != d.type_name {
        return Err(MutationError::NotApplicable(format!(
            "cannot replace {} with {}",
            c.type_name, d.type_name
        )));
    }
    let bytes = pool.files[d.base].seed[d.seed_span.0..d.seed_span.1].to_vec();
    Ok(engine::run_with_splice(
        unit,
        &pool.files[c.base].seed,
        c.seed_span,
        c.node_id,
        AltSource::Bytes(bytes),
        opts,
    )?)
}

fn generate_exact(unit: &TemplateUnit, seed: &[u8], opts: &ExecOptions) -> Result<Output, MutationError> {
    let out = engine::generate_from_seed(unit, seed, opts)?;
    if out.seed.len() != seed.len() {
        return Err(MutationError::NotApplicable(format!(
            "regeneration used {} of {} decision bytes",
            out.seed.len(),
            seed.len()
        )));
    }
    Ok(out)
}

/// Removes an optional chunk together with the lookahead that selected it.
pub fn smart_delete(
    unit: &TemplateUnit,
    pool: &ChunkPool,
    target: usize,
    opts: &ExecOptions,
) -> Result<Output, MutationError> {
    let c = &pool.chunks[target];
    let (a, b) = c
        .movable_span()
        .ok_or_else(|| MutationError::NotApplicable(format!("{} is not optional", c.name)))?;
    let base = &pool.files[c.base].seed;
    let mut seed = base[..a].to_vec();
    seed.extend_from_slice(&base[b..]);
    generate_exact(unit, &seed, opts)
}

/// Seed offsets in `base` where a lookahead call starts, i.e. where an
/// optional chunk could be inserted.
pub fn insertion_points(pool: &ChunkPool, base: usize) -> Vec<usize> {
    let mut v: Vec<usize> = pool.files[base]
        .events
        .iter()
        .filter(|e| e.kind == EventKind::LookaheadCall)
        .map(|e| e.seed_span.0)
        .collect();
    v.dedup();
    v
}

/// Inserts the lookahead and decisions of chunk `donor` at seed offset `at` of file `base`.
pub fn smart_insert(
    unit: &TemplateUnit,
    pool: &ChunkPool,
    base: usize,
    at: usize,
    donor: usize,
    opts: &ExecOptions,
) -> Result<Output, MutationError> {
    let d = &pool.chunks[donor];
    let (a, b) = d
        .movable_span()
        .ok_or_else(|| MutationError::NotApplicable(format!("{} is not optional", d.name)))?;
    let base_seed = &pool.files[base].seed;
    if at > base_seed.len() {
        return Err(MutationError::NotApplicable(format!("offset {at} outside the seed")));
    }
    let mut seed = base_seed[..at].to_vec();
    seed.extend_from_slice(&pool.files[d.base].seed[a..b]);
    seed.extend_from_slice(&base_seed[at..]);
    let out = generate_exact(unit, &seed, opts)?;
    let want = (
        at + d.seed_span.0 - a,
        at + d.seed_span.1 - a,
    );
    let placed = out
        .tree
        .walk()
        .iter()
        .any(|n| n.type_name == d.type_name && n.decision_span == want);
    if !placed {
        return Err(MutationError::NotApplicable(format!(
            "inserted {} did not regenerate at seed offset {at}",
            d.type_name
        )));
    }
    Ok(out)
}

/// One line of the mutation log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutationRecord {
    pub op: MutationOp,
    pub base: String,
    pub target_type: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub donor: Option<String>,
    pub result_bytes: usize,
    pub ok: bool,
}

impl MutationRecord {
    pub fn to_jsonl(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

fn pick<R: Rng>(rng: &mut R, v: &[usize]) -> Option<usize> {
    (!v.is_empty()).then(|| v[rng.random_range(0..v.len())])
}

fn try_op<R: Rng>(
    unit: &TemplateUnit,
    pool: &ChunkPool,
    op: MutationOp,
    rng: &mut R,
    opts: &ExecOptions,
) -> Option<(MutationRecord, Result<Output, MutationError>)> {
    let all: Vec<usize> = (0..pool.chunks.len()).collect();
    let record = |c: &ChunkRecord, donor: Option<&ChunkRecord>, base: usize| MutationRecord {
        op,
        base: pool.files[base].name.clone(),
        target_type: c.type_name.clone(),
        donor: donor.map(|d| format!("{}:{}", pool.files[d.base].name, d.name)),
        result_bytes: 0,
        ok: false,
    };
    match op {
        MutationOp::Abstract => {
            let t = pick(rng, &all)?;
            let c = &pool.chunks[t];
            Some((record(c, None, c.base), smart_abstract(unit, pool, t, rng.random(), opts)))
        }
        MutationOp::Replace => {
            let t = pick(rng, &all)?;
            let c = &pool.chunks[t];
            let d = pick(rng, pool.of_type(&c.type_name))?;
            Some((
                record(c, Some(&pool.chunks[d]), c.base),
                smart_replace(unit, pool, t, d, opts),
            ))
        }
        MutationOp::Delete => {
            let movable: Vec<usize> = all.iter().copied().filter(|&i| pool.chunks[i].is_movable()).collect();
            let t = pick(rng, &movable)?;
            let c = &pool.chunks[t];
            Some((record(c, None, c.base), smart_delete(unit, pool, t, opts)))
        }
        MutationOp::Insert => {
            let movable: Vec<usize> = all.iter().copied().filter(|&i| pool.chunks[i].is_movable()).collect();
            let d = pick(rng, &movable)?;
            let base = rng.random_range(0..pool.files.len());
            let points = insertion_points(pool, base);
            let at = *points.get(rng.random_range(0..points.len().max(1)))?;
            let dc = &pool.chunks[d];
            Some((record(dc, Some(dc), base), smart_insert(unit, pool, base, at, d, opts)))
        }
    }
}

/// Applies a random applicable mutation, retrying up to [`MAX_ATTEMPTS`] times.
pub fn random_smart_mutation<R: Rng>(
    unit: &TemplateUnit,
    pool: &ChunkPool,
    rng: &mut R,
    opts: &ExecOptions,
) -> Result<(MutationRecord, Output), MutationError> {
    match random_smart_mutation_logged(unit, pool, rng, opts) {
        (mut log, Some(out)) => Ok((log.pop().expect("successful attempt is logged"), out)),
        (_, None) => Err(MutationError::NoApplicableMutation),
    }
}

/// Like [`random_smart_mutation`] but also returns a record for every failed attempt.
pub fn random_smart_mutation_logged<R: Rng>(
    unit: &TemplateUnit,
    pool: &ChunkPool,
    rng: &mut R,
    opts: &ExecOptions,
) -> (Vec<MutationRecord>, Option<Output>) {
    let mut log = Vec::new();
    if pool.files.is_empty() {
        return (log, None);
    }
    for _ in 0..MAX_ATTEMPTS {
        let op = MutationOp::ALL[rng.random_range(0..MutationOp::ALL.len())];
        if let Some((mut rec, res)) = try_op(unit, pool, op, rng, opts) {
            match res {
                Ok(out) => {
                    rec.result_bytes = out.file.len();
                    rec.ok = true;
                    log.push(rec);
                    return (log, Some(out));
                }
                Err(_) => log.push(rec),
            }
        }
    }
    (log, None)
}
