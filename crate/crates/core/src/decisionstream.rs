//! Invertible codec between generator choices and decision-seed bytes.
//!
//! Generation reads bytes from a seed, a PRNG or a splice of several sources;
//! parsing emits the canonical bytes that make generation repeat what was
//! observed.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::runtime::value::{int_from_bytes, int_to_bytes, mask, normalize};

pub const EVIL_MODULUS: u8 = 128;
pub const EVIL_RESIDUE: u8 = 127;
pub const DEFAULT_PREF_PROB: f64 = 0.25;
/// Unconstrained integers: `control % 4 < SMALL_CLASSES` picks a one-byte payload.
pub const SMALL_CLASSES: u8 = 3;
const FULL_CONTROL: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    GenFromSeed,
    GenRandom,
    ParseRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    EvilGate,
    IndexChoice,
    RawBytes,
    LookaheadCall,
    StreamSwitch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChoiceEvent {
    pub kind: EventKind,
    pub seed_span: (usize, usize),
    pub node_id: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DsError {
    #[error("decision seed exhausted at byte {0}")]
    SeedExhausted(usize),
    #[error("value cannot be produced by the generator")]
    Unrepresentable,
    #[error("splice misaligned: {0}")]
    SpliceMisaligned(String),
}

/// Choice for a scalar integer.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChoiceSpec {
    pub candidates: Vec<i64>,
    pub width: u8,
    pub signed: bool,
    pub big_endian: bool,
    pub bounds: Option<(i64, i64)>,
}

impl ChoiceSpec {
    pub fn unconstrained(width: u8, signed: bool) -> Self {
        Self {
            width,
            signed,
            ..Self::default()
        }
    }

    fn bound_width(&self) -> Option<(i128, usize)> {
        let (lo, hi) = self.bounds?;
        let n = hi as i128 - lo as i128 + 1;
        let mut w = 0;
        while (1i128 << (8 * w)) < n {
            w += 1;
        }
        Some((n, w))
    }
}

/// Choice between preferred and possible byte-string tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenSpec {
    pub preferred: Vec<Vec<u8>>,
    pub possible: Vec<Vec<u8>>,
    pub pref_prob: f64,
    pub width: usize,
}

impl TokenSpec {
    fn threshold(&self) -> u16 {
        (self.pref_prob.clamp(0.0, 1.0) * 256.0).floor() as u16
    }
}

/// Replacement source used inside a splice.
#[derive(Debug, Clone)]
pub enum AltSource {
    Bytes(Vec<u8>),
    Random(ChaCha8Rng),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Prefix,
    Alt,
    Suffix,
}

#[derive(Debug, Clone)]
struct Splice {
    prefix: Vec<u8>,
    alt: AltSource,
    suffix: Vec<u8>,
    phase: Phase,
    pos: usize,
}

#[derive(Debug, Clone)]
enum Source {
    Seed(Vec<u8>),
    Random(ChaCha8Rng),
    Splice(Box<Splice>),
    Record,
}

#[derive(Debug, Clone)]
pub struct DecisionStream {
    mode: Mode,
    source: Source,
    /// Bytes consumed (generation) or emitted (parsing) so far.
    record: Vec<u8>,
    evil: bool,
    events: Vec<ChoiceEvent>,
    group: Option<(EventKind, usize, usize)>,
    node_id: Option<usize>,
    lookahead_pending: bool,
}

fn index_width(k: usize) -> usize {
    if k <= 256 {
        1
    } else if k <= 65_536 {
        2
    } else {
        4
    }
}

fn le_value(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .rev()
        .fold(0u64, |acc, &b| acc << 8 | b as u64)
}

impl DecisionStream {
    fn with_source(mode: Mode, source: Source) -> Self {
        Self {
            mode,
            source,
            record: Vec::new(),
            evil: true,
            events: Vec::new(),
            group: None,
            node_id: None,
            lookahead_pending: false,
        }
    }

    pub fn from_seed(seed: Vec<u8>) -> Self {
        Self::with_source(Mode::GenFromSeed, Source::Seed(seed))
    }

    pub fn random(rng_seed: u64) -> Self {
        Self::with_source(
            Mode::GenRandom,
            Source::Random(ChaCha8Rng::seed_from_u64(rng_seed)),
        )
    }

    pub fn for_parse() -> Self {
        Self::with_source(Mode::ParseRecord, Source::Record)
    }

    /// Reads `prefix`, then `alt` for the target node, then `suffix`.
    pub fn splice(prefix: Vec<u8>, alt: AltSource, suffix: Vec<u8>) -> Self {
        Self::with_source(
            Mode::GenFromSeed,
            Source::Splice(Box::new(Splice {
                prefix,
                alt,
                suffix,
                phase: Phase::Prefix,
                pos: 0,
            })),
        )
    }

    pub fn with_evil(mut self, enabled: bool) -> Self {
        self.evil = enabled;
        self
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn is_parsing(&self) -> bool {
        self.mode == Mode::ParseRecord
    }

    pub fn cursor(&self) -> usize {
        self.record.len()
    }

    /// Seed bytes consumed so far, or emitted so far when parsing.
    pub fn consumed(&self) -> &[u8] {
        &self.record
    }

    pub fn events(&self) -> &[ChoiceEvent] {
        &self.events
    }

    pub fn evil_enabled(&self) -> bool {
        self.evil
    }

    /// Sets the evil flag and returns its previous value.
    pub fn set_evil(&mut self, enabled: bool) -> bool {
        std::mem::replace(&mut self.evil, enabled)
    }

    pub fn set_node(&mut self, id: Option<usize>) {
        self.node_id = id;
    }

    /// True if the last logged event was a lookahead call; clears the flag.
    pub fn take_lookahead_pending(&mut self) -> bool {
        std::mem::take(&mut self.lookahead_pending)
    }

    pub fn into_parts(self) -> (Vec<u8>, Vec<ChoiceEvent>) {
        (self.record, self.events)
    }

    // ---- event log ----

    fn log(&mut self, kind: EventKind, start: usize) {
        if self.group.is_some() {
            return;
        }
        self.lookahead_pending = kind == EventKind::LookaheadCall;
        self.events.push(ChoiceEvent {
            kind,
            seed_span: (start, self.record.len()),
            node_id: self.node_id,
        });
    }

    /// Starts an event that covers every byte until the matching `end_group`.
    pub fn begin_group(&mut self, kind: EventKind) {
        match &mut self.group {
            Some((_, _, depth)) => *depth += 1,
            None => self.group = Some((kind, self.record.len(), 0)),
        }
    }

    pub fn end_group(&mut self) {
        match self.group {
            Some((_, _, depth)) if depth > 0 => {
                self.group.as_mut().unwrap().2 -= 1;
            }
            Some((kind, start, _)) => {
                self.group = None;
                self.log(kind, start);
            }
            None => {}
        }
    }

    /// Zero-length marker event.
    pub fn mark(&mut self, kind: EventKind) {
        let at = self.record.len();
        self.log(kind, at);
    }

    // ---- byte sources ----

    fn next_byte(&mut self) -> Result<u8, DsError> {
        let at = self.record.len();
        let b = match &mut self.source {
            Source::Seed(seed) => *seed.get(at).ok_or(DsError::SeedExhausted(at))?,
            Source::Random(rng) => rng.random::<u8>(),
            Source::Record => panic!("parse-mode stream cannot supply decisions"),
            Source::Splice(s) => loop {
                match s.phase {
                    Phase::Prefix => {
                        if s.pos < s.prefix.len() {
                            s.pos += 1;
                            break s.prefix[s.pos - 1];
                        }
                        s.phase = Phase::Alt;
                        s.pos = 0;
                    }
                    Phase::Alt => match &mut s.alt {
                        AltSource::Bytes(b) => {
                            if s.pos < b.len() {
                                s.pos += 1;
                                break b[s.pos - 1];
                            }
                            return Err(DsError::SpliceMisaligned(format!(
                                "spliced chunk needs more than {} decision bytes",
                                b.len()
                            )));
                        }
                        AltSource::Random(rng) => {
                            s.pos += 1;
                            break rng.random::<u8>();
                        }
                    },
                    Phase::Suffix => {
                        if s.pos < s.suffix.len() {
                            s.pos += 1;
                            break s.suffix[s.pos - 1];
                        }
                        return Err(DsError::SpliceMisaligned(
                            "generation after the splice needs more decision bytes than the base seed has"
                                .into(),
                        ));
                    }
                }
            },
        };
        self.record.push(b);
        Ok(b)
    }

    fn take(&mut self, n: usize, kind: EventKind) -> Result<Vec<u8>, DsError> {
        let start = self.record.len();
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(self.next_byte()?);
        }
        self.log(kind, start);
        Ok(out)
    }

    fn emit(&mut self, bytes: &[u8], kind: EventKind) {
        let start = self.record.len();
        self.record.extend_from_slice(bytes);
        self.log(kind, start);
    }

    // ---- splice control, driven by the engine ----

    pub fn is_splicing(&self) -> bool {
        matches!(self.source, Source::Splice(_))
    }

    /// Called when the spliced node begins; it must start exactly at the prefix end.
    pub fn splice_target_begin(&mut self) -> Result<(), DsError> {
        if let Source::Splice(s) = &mut self.source {
            let aligned = match s.phase {
                Phase::Prefix => s.pos == s.prefix.len(),
                Phase::Alt => s.pos == 0,
                Phase::Suffix => false,
            };
            if !aligned {
                return Err(DsError::SpliceMisaligned(
                    "target node does not start at the splice boundary".into(),
                ));
            }
            s.phase = Phase::Alt;
            s.pos = 0;
        }
        Ok(())
    }

    /// Called when the spliced node completes. Returns bytes taken from the alternate source.
    pub fn splice_target_end(&mut self) -> Result<usize, DsError> {
        if let Source::Splice(s) = &mut self.source {
            if s.phase != Phase::Alt {
                return Err(DsError::SpliceMisaligned(
                    "target node completed outside the splice".into(),
                ));
            }
            if let AltSource::Bytes(b) = &s.alt {
                if s.pos != b.len() {
                    return Err(DsError::SpliceMisaligned(format!(
                        "spliced chunk used {} of {} decision bytes",
                        s.pos,
                        b.len()
                    )));
                }
            }
            let used = s.pos;
            s.phase = Phase::Suffix;
            s.pos = 0;
            return Ok(used);
        }
        Ok(0)
    }

    /// Verifies that the whole suffix was consumed.
    pub fn splice_finish(&self) -> Result<(), DsError> {
        if let Source::Splice(s) = &self.source {
            if s.phase != Phase::Suffix {
                return Err(DsError::SpliceMisaligned(
                    "target node was never completed".into(),
                ));
            }
            if s.pos != s.suffix.len() {
                return Err(DsError::SpliceMisaligned(format!(
                    "{} decision byte(s) of the base seed left over after the splice",
                    s.suffix.len() - s.pos
                )));
            }
        }
        Ok(())
    }

    // ---- generation ----

    /// Consumes a gate byte when evil decisions are enabled.
    pub fn evil_gate(&mut self) -> Result<bool, DsError> {
        if !self.evil {
            return Ok(false);
        }
        let b = self.take(1, EventKind::EvilGate)?[0];
        Ok(b % EVIL_MODULUS == EVIL_RESIDUE)
    }

    pub fn choose_index(&mut self, k: usize) -> Result<usize, DsError> {
        assert!(k >= 1, "choice over an empty set");
        if k == 1 && !self.evil {
            return Ok(0);
        }
        let raw = self.take(index_width(k), EventKind::IndexChoice)?;
        Ok((le_value(&raw) % k as u64) as usize)
    }

    pub fn raw(&mut self, n: usize) -> Result<Vec<u8>, DsError> {
        self.take(n, EventKind::RawBytes)
    }

    /// Fills `n` bytes in one event (random payloads).
    pub fn raw_fill(&mut self, n: usize) -> Result<Vec<u8>, DsError> {
        if let Source::Random(rng) = &mut self.source {
            let start = self.record.len();
            let mut out = vec![0u8; n];
            rng.fill_bytes(&mut out);
            self.record.extend_from_slice(&out);
            self.log(EventKind::RawBytes, start);
            return Ok(out);
        }
        self.raw(n)
    }

    pub fn choose_value(&mut self, spec: &ChoiceSpec) -> Result<i64, DsError> {
        let w = spec.width;
        if self.evil_gate()? {
            let raw = self.raw(w as usize)?;
            return Ok(int_from_bytes(&raw, spec.signed, spec.big_endian));
        }
        if !spec.candidates.is_empty() {
            let i = self.choose_index(spec.candidates.len())?;
            return Ok(normalize(spec.candidates[i], w, spec.signed));
        }
        if let Some((n, bw)) = spec.bound_width() {
            let raw = self.raw(bw)?;
            let r = le_value(&raw) as i128 % n;
            let v = spec.bounds.unwrap().0 as i128 + r;
            return Ok(normalize(v as i64, w, spec.signed));
        }
        let c = self.raw(1)?[0];
        if c % 4 < SMALL_CLASSES {
            let p = self.raw(1)?[0];
            Ok(normalize(p as i64, w, spec.signed))
        } else {
            let raw = self.raw(w as usize)?;
            Ok(int_from_bytes(&raw, spec.signed, spec.big_endian))
        }
    }

    pub fn choose_token(&mut self, spec: &TokenSpec) -> Result<Option<Vec<u8>>, DsError> {
        if spec.preferred.is_empty() && spec.possible.is_empty() {
            return Ok(None);
        }
        if self.evil_gate()? {
            return Ok(Some(self.raw(spec.width)?));
        }
        let bp = self.take(1, EventKind::IndexChoice)?[0] as u16;
        let list = if bp < spec.threshold() {
            &spec.preferred
        } else {
            &spec.possible
        };
        if list.is_empty() {
            return Ok(None);
        }
        let list = list.clone();
        let i = self.choose_index(list.len())?;
        Ok(Some(list[i].clone()))
    }

    /// Whole-array choice among byte strings (string literals, mined magic).
    pub fn choose_bytes(&mut self, candidates: &[Vec<u8>], len: usize) -> Result<Vec<u8>, DsError> {
        if self.evil_gate()? {
            return self.raw(len);
        }
        let i = self.choose_index(candidates.len())?;
        Ok(candidates[i].clone())
    }

    // ---- parsing ----

    pub fn emit_gate(&mut self, evil: bool) {
        if self.evil {
            let b = if evil { EVIL_RESIDUE } else { 0 };
            self.emit(&[b], EventKind::EvilGate);
        }
    }

    pub fn emit_index(&mut self, index: usize, k: usize) {
        if k == 1 && !self.evil {
            return;
        }
        let bytes = (index as u64).to_le_bytes();
        self.emit(&bytes[..index_width(k)], EventKind::IndexChoice);
    }

    pub fn emit_raw(&mut self, bytes: &[u8]) {
        self.emit(bytes, EventKind::RawBytes);
    }

    /// Evil encoding, used even when evil is off so that parsing can go on
    /// after an unrepresentable value; the caller reports the error.
    fn emit_evil(&mut self, raw: &[u8]) -> Result<(), DsError> {
        let enabled = self.evil;
        self.emit(&[EVIL_RESIDUE], EventKind::EvilGate);
        self.emit_raw(raw);
        if enabled {
            Ok(())
        } else {
            Err(DsError::Unrepresentable)
        }
    }

    /// Emits the canonical encoding of observed value `v`.
    pub fn record_value(&mut self, spec: &ChoiceSpec, v: i64) -> Result<(), DsError> {
        let w = spec.width;
        let observed = mask(v, w);
        if !spec.candidates.is_empty() {
            if let Some(i) = spec.candidates.iter().position(|&c| mask(c, w) == observed) {
                self.emit_gate(false);
                self.emit_index(i, spec.candidates.len());
                return Ok(());
            }
        } else if let Some((_, bw)) = spec.bound_width() {
            let (lo, hi) = spec.bounds.unwrap();
            if lo <= v && v <= hi {
                self.emit_gate(false);
                let off = (v as i128 - lo as i128) as u64;
                self.emit_raw(&off.to_le_bytes()[..bw]);
                return Ok(());
            }
        } else {
            self.emit_gate(false);
            if observed <= 255 {
                self.emit_raw(&[0, observed as u8]);
            } else {
                let mut bytes = vec![FULL_CONTROL];
                bytes.extend(int_to_bytes(v, w, spec.big_endian));
                self.emit_raw(&bytes);
            }
            return Ok(());
        }
        self.emit_evil(&int_to_bytes(v, w, spec.big_endian))
    }

    /// Emits the encoding of an observed token (`None`: no token available).
    /// Returns what generation will see.
    pub fn record_token(
        &mut self,
        spec: &TokenSpec,
        observed: Option<&[u8]>,
    ) -> Result<Option<Vec<u8>>, DsError> {
        if spec.preferred.is_empty() && spec.possible.is_empty() {
            return Ok(None);
        }
        let thr = spec.threshold();
        let find = |list: &[Vec<u8>], t: &[u8]| list.iter().position(|x| x.as_slice() == t);
        match observed {
            None => {
                if spec.preferred.is_empty() && thr > 0 {
                    self.emit_gate(false);
                    self.emit(&[0], EventKind::IndexChoice);
                    Ok(None)
                } else if spec.possible.is_empty() && thr <= 255 {
                    self.emit_gate(false);
                    self.emit(&[thr as u8], EventKind::IndexChoice);
                    Ok(None)
                } else {
                    Err(DsError::Unrepresentable)
                }
            }
            Some(t) => {
                if thr > 0 {
                    if let Some(i) = find(&spec.preferred, t) {
                        self.emit_gate(false);
                        self.emit(&[0], EventKind::IndexChoice);
                        self.emit_index(i, spec.preferred.len());
                        return Ok(Some(t.to_vec()));
                    }
                }
                if thr <= 255 {
                    if let Some(i) = find(&spec.possible, t) {
                        self.emit_gate(false);
                        self.emit(&[thr as u8], EventKind::IndexChoice);
                        self.emit_index(i, spec.possible.len());
                        return Ok(Some(t.to_vec()));
                    }
                }
                self.emit_evil(t).map(|_| Some(t.to_vec()))
            }
        }
    }

    pub fn record_bytes(&mut self, candidates: &[Vec<u8>], observed: &[u8]) -> Result<(), DsError> {
        match candidates.iter().position(|c| c.as_slice() == observed) {
            Some(i) => {
                self.emit_gate(false);
                self.emit_index(i, candidates.len());
                Ok(())
            }
            None => self.emit_evil(observed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seeded(bytes: &[u8]) -> DecisionStream {
        DecisionStream::from_seed(bytes.to_vec())
    }

    #[test]
    fn gate_disabled_consumes_nothing() {
        let mut ds = seeded(&[]).with_evil(false);
        assert!(!ds.evil_gate().unwrap());
        assert_eq!(ds.cursor(), 0);
    }

    #[test]
    fn gate_rule() {
        for (b, evil) in [(127u8, true), (255, true), (126, false), (0, false)] {
            assert_eq!(seeded(&[b]).evil_gate().unwrap(), evil, "byte {b}");
        }
        assert_eq!(seeded(&[]).evil_gate(), Err(DsError::SeedExhausted(0)));
    }

    #[test]
    fn index_rule() {
        assert_eq!(seeded(&[7]).choose_index(5).unwrap(), 2);
        assert_eq!(seeded(&[3]).choose_index(5).unwrap(), 3);
        let mut forced = seeded(&[]).with_evil(false);
        assert_eq!(forced.choose_index(1).unwrap(), 0);
        assert_eq!(forced.cursor(), 0);
        let mut wide = seeded(&[0x2C, 0x01]);
        assert_eq!(wide.choose_index(1000).unwrap(), 300);
        assert_eq!(wide.cursor(), 2);

        let mut p = DecisionStream::for_parse();
        p.emit_index(3, 5);
        assert_eq!(p.consumed(), &[3]);
    }

    #[test]
    fn set_evil_reports_previous() {
        let mut ds = DecisionStream::random(1);
        assert!(ds.set_evil(false));
        assert!(!ds.set_evil(false));
        let prev = ds.set_evil(false);
        ds.set_evil(prev);
        assert!(!ds.evil_enabled());
    }

    #[test]
    fn full_class_inverse() {
        let spec = ChoiceSpec::unconstrained(4, false);
        let mut p = DecisionStream::for_parse().with_evil(false);
        p.record_value(&spec, 300).unwrap();
        assert_eq!(p.consumed(), &[3, 0x2C, 0x01, 0x00, 0x00]);
        let mut g = DecisionStream::from_seed(p.consumed().to_vec()).with_evil(false);
        assert_eq!(g.choose_value(&spec).unwrap(), 300);
    }

    #[test]
    fn token_threshold_boundary() {
        let spec = TokenSpec {
            preferred: vec![b"PLTE".to_vec()],
            possible: vec![b"IDAT".to_vec()],
            pref_prob: 0.25,
            width: 4,
        };
        let mut g = seeded(&[64, 0]).with_evil(false);
        assert_eq!(g.choose_token(&spec).unwrap(), Some(b"IDAT".to_vec()));
        let mut g = seeded(&[63]).with_evil(false);
        assert_eq!(g.choose_token(&spec).unwrap(), Some(b"PLTE".to_vec()));
    }

    #[test]
    fn splice_phases() {
        let mut ds = DecisionStream::splice(vec![1], AltSource::Bytes(vec![2, 3]), vec![4]);
        assert_eq!(ds.raw(1).unwrap(), [1]);
        ds.splice_target_begin().unwrap();
        assert_eq!(ds.raw(2).unwrap(), [2, 3]);
        assert_eq!(ds.splice_target_end().unwrap(), 2);
        assert_eq!(ds.raw(1).unwrap(), [4]);
        ds.splice_finish().unwrap();
        assert!(matches!(ds.raw(1), Err(DsError::SpliceMisaligned(_))));
    }

    #[test]
    fn groups_log_one_event() {
        let mut ds = seeded(&[0, 1, 2]);
        ds.begin_group(EventKind::LookaheadCall);
        ds.evil_gate().unwrap();
        ds.choose_index(3).unwrap();
        ds.end_group();
        assert_eq!(ds.events().len(), 1);
        assert_eq!(ds.events()[0].seed_span, (0, 2));
        assert!(ds.take_lookahead_pending());
        assert!(!ds.take_lookahead_pending());
    }
}
