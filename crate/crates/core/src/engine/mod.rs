//! Dual-mode template interpreter.
//!
//! The same walk over the syntax tree either generates a file from decision
//! bytes or parses a file and records the decision bytes that regenerate it.

mod builtins;
pub mod checksum;
pub mod codec;
mod declare;
mod expr;

use thiserror::Error;

use crate::decisionstream::{
    AltSource, ChoiceEvent, DecisionStream, DsError, EventKind, EVIL_MODULUS, EVIL_RESIDUE,
};
use crate::runtime::{BufferError, FileBuffer, ParseNode, Scope, TreeBuilder, Value, DEFAULT_BUDGET};
use crate::templatelang::ast::{Stmt, StmtKind};
use crate::templatelang::{Span, TemplateUnit};

pub use codec::{CodecRegistry, DecodeError, StreamCodec};
pub use expr::eval_binop_int;

pub const DEFAULT_STEP_LIMIT: u64 = 10_000_000;
pub const MAX_CALL_DEPTH: usize = 256;
/// In generation, `FEof()` reports end of file with probability 1/FEOF_CHOICES.
pub const FEOF_CHOICES: usize = 8;
/// Hint mode replaces a bad array length with `byte % HINT_LENGTH_MODULUS`.
pub const HINT_LENGTH_MODULUS: u8 = 16;
pub const DEFAULT_CODEC_MAXLEN: i64 = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("byte budget of {budget} exceeded writing {len} byte(s) at offset {offset}")]
    BudgetExceeded {
        offset: usize,
        len: usize,
        budget: usize,
    },
    #[error("decision seed exhausted at byte {0}")]
    SeedExhausted(usize),
    #[error("invalid field access: {0}")]
    InvalidFieldAccess(String),
    #[error("template returned {0}")]
    TemplateReturn(i64),
    #[error("reservation conflict at offset {offset}")]
    ReservationConflict { offset: usize },
    #[error("offset {offset} out of range")]
    OutOfRange { offset: usize },
    #[error("file rejected: {0}")]
    ParseRejected(String),
    #[error("value of `{field}` at offset {offset} cannot be generated")]
    UnrepresentableValue { field: String, offset: usize },
    #[error("{} trailing byte(s) after offset {consumed}", .size - .consumed)]
    TrailingBytes { consumed: usize, size: usize },
    #[error("splice misaligned: {0}")]
    SpliceMisaligned(String),
    #[error("unknown checksum algorithm {0}")]
    ChecksumAlgoUnknown(i64),
    #[error("byte at offset {offset} was never written")]
    Gap { offset: usize },
    #[error("step limit exceeded")]
    StepLimit,
    #[error("call depth limit exceeded")]
    RecursionLimit,
    #[error("{span}: {message}")]
    Runtime { span: Span, message: String },
}

impl EngineError {
    /// True for verdicts about the input file rather than engine or template faults.
    pub fn is_rejection(&self) -> bool {
        matches!(
            self,
            EngineError::ParseRejected(_)
                | EngineError::UnrepresentableValue { .. }
                | EngineError::TrailingBytes { .. }
        )
    }
}

impl From<DsError> for EngineError {
    fn from(e: DsError) -> Self {
        match e {
            DsError::SeedExhausted(at) => EngineError::SeedExhausted(at),
            DsError::SpliceMisaligned(m) => EngineError::SpliceMisaligned(m),
            DsError::Unrepresentable => EngineError::UnrepresentableValue {
                field: String::new(),
                offset: 0,
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExecOptions {
    pub budget: usize,
    /// Initial evil flag when parsing (generation takes it from the stream).
    pub evil: bool,
    /// Accept files with bytes after the last consumed offset.
    pub allow_trailing: bool,
    pub step_limit: u64,
    pub codecs: CodecRegistry,
}

impl Default for ExecOptions {
    fn default() -> Self {
        Self {
            budget: DEFAULT_BUDGET,
            evil: true,
            allow_trailing: false,
            step_limit: DEFAULT_STEP_LIMIT,
            codecs: CodecRegistry::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Output {
    pub file: Vec<u8>,
    pub tree: ParseNode,
    pub seed: Vec<u8>,
    pub events: Vec<ChoiceEvent>,
    /// Ids of the input declarations that executed.
    pub coverage: Vec<usize>,
    pub warnings: Vec<String>,
    /// Decision bytes taken from the alternate source of a splice.
    pub splice_consumed: Option<usize>,
}

impl Output {
    /// True when some evil gate in the seed fired.
    pub fn evil_taken(&self) -> bool {
        self.events.iter().any(|e| {
            e.kind == EventKind::EvilGate
                && self.seed.get(e.seed_span.0).is_some_and(|&b| b % EVIL_MODULUS == EVIL_RESIDUE)
        })
    }
}

enum Flow {
    Normal,
    Break,
    Continue,
    Return(Value),
}

struct Exec<'u> {
    unit: &'u TemplateUnit,
    opts: &'u ExecOptions,
    parsing: bool,
    ds: DecisionStream,
    buf: FileBuffer,
    scope: Scope,
    tree: TreeBuilder,
    hint_mode: bool,
    big_endian: bool,
    coverage: Vec<bool>,
    steps: u64,
    depth: usize,
    /// First unrepresentable value seen while parsing; reported unless the template rejects first.
    deferred: Option<EngineError>,
    splice_target: Option<usize>,
    splice_used: Option<usize>,
    warnings: Vec<String>,
}

type EResult<T> = Result<T, EngineError>;

fn buffer_err(e: BufferError, parsing: bool) -> EngineError {
    match e {
        BufferError::OutOfRange { offset, .. } => EngineError::OutOfRange { offset },
        BufferError::BudgetExceeded {
            offset,
            len,
            budget,
        } => EngineError::BudgetExceeded {
            offset,
            len,
            budget,
        },
        BufferError::ReservationConflict { offset } => EngineError::ReservationConflict { offset },
        BufferError::EndOfFile { offset } if parsing => {
            EngineError::ParseRejected(format!("unexpected end of file at offset {offset}"))
        }
        BufferError::EndOfFile { offset } => EngineError::OutOfRange { offset },
    }
}

impl<'u> Exec<'u> {
    fn new(unit: &'u TemplateUnit, opts: &'u ExecOptions, ds: DecisionStream, buf: FileBuffer) -> Self {
        Self {
            unit,
            opts,
            parsing: ds.is_parsing(),
            ds,
            buf,
            scope: Scope::new(),
            tree: TreeBuilder::new("file"),
            hint_mode: false,
            big_endian: false,
            coverage: vec![false; unit.decls.len()],
            steps: 0,
            depth: 0,
            deferred: None,
            splice_target: None,
            splice_used: None,
            warnings: Vec::new(),
        }
    }

    fn err(&self, span: Span, message: impl Into<String>) -> EngineError {
        EngineError::Runtime {
            span,
            message: message.into(),
        }
    }

    fn buf_err(&self, e: BufferError) -> EngineError {
        buffer_err(e, self.parsing)
    }

    /// Records an unrepresentable value while parsing and carries on.
    fn defer(&mut self, r: Result<(), DsError>, field: &str, offset: usize) -> EResult<()> {
        match r {
            Ok(()) => Ok(()),
            Err(DsError::Unrepresentable) => {
                if self.deferred.is_none() {
                    self.deferred = Some(EngineError::UnrepresentableValue {
                        field: field.to_string(),
                        offset,
                    });
                }
                Ok(())
            }
            Err(e) => Err(e.into()),
        }
    }

    fn step(&mut self) -> EResult<()> {
        self.steps += 1;
        if self.steps > self.opts.step_limit {
            return Err(EngineError::StepLimit);
        }
        Ok(())
    }

    fn run(&mut self) -> EResult<()> {
        let flow = self.exec_block(&self.unit.toplevel)?;
        if let Flow::Return(v) = flow {
            let code = v.as_int().unwrap_or(0);
            if code < 0 {
                if self.parsing {
                    let why = self
                        .warnings
                        .last()
                        .cloned()
                        .unwrap_or_else(|| format!("template returned {code}"));
                    return Err(EngineError::ParseRejected(why));
                }
                return Err(EngineError::TemplateReturn(code));
            }
        }
        Ok(())
    }

    fn exec_block(&mut self, body: &'u [Stmt]) -> EResult<Flow> {
        for s in body {
            match self.exec(s)? {
                Flow::Normal => {}
                other => return Ok(other),
            }
        }
        Ok(Flow::Normal)
    }

    fn exec(&mut self, s: &'u Stmt) -> EResult<Flow> {
        self.step()?;
        match &s.kind {
            StmtKind::Decl(d) => {
                if d.local {
                    self.declare_local(d, s.span)?;
                    Ok(Flow::Normal)
                } else {
                    self.declare_input(d, s.span)
                }
            }
            StmtKind::If { cond, then, els } => {
                if self.eval(cond)?.truthy() {
                    self.exec(then)
                } else if let Some(e) = els {
                    self.exec(e)
                } else {
                    Ok(Flow::Normal)
                }
            }
            StmtKind::While { cond, body } => {
                while self.eval(cond)?.truthy() {
                    self.step()?;
                    match self.exec(body)? {
                        Flow::Break => break,
                        Flow::Return(v) => return Ok(Flow::Return(v)),
                        _ => {}
                    }
                }
                Ok(Flow::Normal)
            }
            StmtKind::DoWhile { body, cond } => {
                loop {
                    self.step()?;
                    match self.exec(body)? {
                        Flow::Break => break,
                        Flow::Return(v) => return Ok(Flow::Return(v)),
                        _ => {}
                    }
                    if !self.eval(cond)?.truthy() {
                        break;
                    }
                }
                Ok(Flow::Normal)
            }
            StmtKind::For {
                init,
                cond,
                step,
                body,
            } => {
                if let Some(i) = init {
                    self.exec(i)?;
                }
                loop {
                    self.step()?;
                    if let Some(c) = cond {
                        if !self.eval(c)?.truthy() {
                            break;
                        }
                    }
                    match self.exec(body)? {
                        Flow::Break => break,
                        Flow::Return(v) => return Ok(Flow::Return(v)),
                        _ => {}
                    }
                    if let Some(st) = step {
                        self.eval(st)?;
                    }
                }
                Ok(Flow::Normal)
            }
            StmtKind::Switch { scrutinee, cases } => {
                let v = self.eval(scrutinee)?;
                let mut start = None;
                for (i, c) in cases.iter().enumerate() {
                    if let Some(l) = &c.label {
                        if self.eval(l)?.loose_eq(&v) {
                            start = Some(i);
                            break;
                        }
                    }
                }
                let start = start.or_else(|| cases.iter().position(|c| c.label.is_none()));
                if let Some(start) = start {
                    for c in &cases[start..] {
                        match self.exec_block(&c.body)? {
                            Flow::Normal => {}
                            Flow::Break => break,
                            other => return Ok(other),
                        }
                    }
                }
                Ok(Flow::Normal)
            }
            StmtKind::Break => Ok(Flow::Break),
            StmtKind::Continue => Ok(Flow::Continue),
            StmtKind::Return(e) => {
                let v = match e {
                    Some(e) => self.eval(e)?,
                    None => Value::Void,
                };
                Ok(Flow::Return(v))
            }
            StmtKind::Expr(e) => {
                self.eval(e)?;
                Ok(Flow::Normal)
            }
            StmtKind::Block(b) => self.exec_block(b),
            StmtKind::Empty => Ok(Flow::Normal),
        }
    }

    fn finish(self) -> Output {
        let file_end = self.buf.high_water();
        let seed_end = self.ds.cursor();
        let ev_end = self.ds.events().len();
        let tree = self.tree.finish(file_end, seed_end, ev_end);
        let coverage = self
            .coverage
            .iter()
            .enumerate()
            .filter(|(_, &c)| c)
            .map(|(i, _)| i)
            .collect();
        let (seed, events) = self.ds.into_parts();
        Output {
            file: self.buf.into_bytes(),
            tree,
            seed,
            events,
            coverage,
            warnings: self.warnings,
            splice_consumed: self.splice_used,
        }
    }
}

fn finish_generation(mut ex: Exec<'_>) -> EResult<Output> {
    ex.run()?;
    if ex.ds.is_splicing() {
        ex.ds.splice_finish()?;
    }
    if let Some(offset) = ex.buf.first_gap() {
        return Err(EngineError::Gap { offset });
    }
    Ok(ex.finish())
}

/// Generates a file. The stream supplies every decision and the initial evil flag.
pub fn generate(unit: &TemplateUnit, ds: DecisionStream, opts: &ExecOptions) -> EResult<Output> {
    assert!(!ds.is_parsing(), "generation needs a generating stream");
    let ex = Exec::new(unit, opts, ds, FileBuffer::for_generation(opts.budget));
    finish_generation(ex)
}

/// Generates from explicit seed bytes with the evil flag from `opts`.
pub fn generate_from_seed(unit: &TemplateUnit, seed: &[u8], opts: &ExecOptions) -> EResult<Output> {
    generate(
        unit,
        DecisionStream::from_seed(seed.to_vec()).with_evil(opts.evil),
        opts,
    )
}

/// Generates from a seeded PRNG; the consumed bytes come back as `Output::seed`.
pub fn generate_random(unit: &TemplateUnit, rng_seed: u64, opts: &ExecOptions) -> EResult<Output> {
    generate(
        unit,
        DecisionStream::random(rng_seed).with_evil(opts.evil),
        opts,
    )
}

/// Parses `file` and returns the tree and the canonical seed that regenerates it.
pub fn parse(unit: &TemplateUnit, file: &[u8], opts: &ExecOptions) -> EResult<Output> {
    if file.len() > opts.budget {
        return Err(EngineError::ParseRejected(format!(
            "file of {} bytes exceeds the budget of {}",
            file.len(),
            opts.budget
        )));
    }
    let ds = DecisionStream::for_parse().with_evil(opts.evil);
    let mut ex = Exec::new(unit, opts, ds, FileBuffer::for_parsing(file, opts.budget));
    ex.run()?;
    if let Some(e) = ex.deferred.take() {
        return Err(e);
    }
    if let Some(offset) = ex.buf.first_gap() {
        return Err(EngineError::ParseRejected(format!(
            "byte at offset {offset} is not covered by the template"
        )));
    }
    let consumed = ex.buf.high_water();
    if consumed < file.len() && !opts.allow_trailing {
        return Err(EngineError::TrailingBytes {
            consumed,
            size: file.len(),
        });
    }
    let mut out = ex.finish();
    out.file = file.to_vec();
    Ok(out)
}

/// Regenerates from `base_seed`, replacing the decision bytes in `span` with
/// `alt` while node `target` is being generated. The suffix after `span` must
/// be consumed exactly.
pub fn run_with_splice(
    unit: &TemplateUnit,
    base_seed: &[u8],
    span: (usize, usize),
    target: usize,
    alt: AltSource,
    opts: &ExecOptions,
) -> EResult<Output> {
    if span.0 > span.1 || span.1 > base_seed.len() {
        return Err(EngineError::SpliceMisaligned(format!(
            "span {:?} outside a seed of {} bytes",
            span,
            base_seed.len()
        )));
    }
    let ds = DecisionStream::splice(
        base_seed[..span.0].to_vec(),
        alt,
        base_seed[span.1..].to_vec(),
    )
    .with_evil(opts.evil);
    let mut ex = Exec::new(unit, opts, ds, FileBuffer::for_generation(opts.budget));
    ex.splice_target = Some(target);
    finish_generation(ex)
}
