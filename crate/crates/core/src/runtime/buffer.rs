//! Output/input byte store shared by both execution modes.

use thiserror::Error;

pub const DEFAULT_BUDGET: usize = 65_536;

const WRITTEN: u8 = 1;
const RESERVED: u8 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BufferError {
    #[error("offset {offset} is out of range (limit {limit})")]
    OutOfRange { offset: usize, limit: usize },
    #[error("writing {len} byte(s) at offset {offset} exceeds the budget of {budget}")]
    BudgetExceeded {
        offset: usize,
        len: usize,
        budget: usize,
    },
    #[error("byte at offset {offset} conflicts with a reservation")]
    ReservationConflict { offset: usize },
    #[error("unexpected end of file at offset {offset}")]
    EndOfFile { offset: usize },
}

/// How much of a byte range is already fixed by lookahead or earlier I/O.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Determined {
    None,
    Partial,
    Full(Vec<u8>),
}

#[derive(Debug, Clone)]
pub struct FileBuffer {
    bytes: Vec<u8>,
    flags: Vec<u8>,
    reserved: Vec<u8>,
    position: usize,
    budget: usize,
    high_water: usize,
    /// `Some(size)` when parsing an existing file.
    parse_size: Option<usize>,
}

impl FileBuffer {
    pub fn for_generation(budget: usize) -> Self {
        Self {
            bytes: Vec::new(),
            flags: Vec::new(),
            reserved: Vec::new(),
            position: 0,
            budget,
            high_water: 0,
            parse_size: None,
        }
    }

    /// Parse-mode buffer. `budget` is the generation budget the file is
    /// checked against so that budget-dependent decisions match.
    pub fn for_parsing(file: &[u8], budget: usize) -> Self {
        Self {
            bytes: file.to_vec(),
            flags: vec![0; file.len()],
            reserved: vec![0; file.len()],
            position: 0,
            budget,
            high_water: 0,
            parse_size: Some(file.len()),
        }
    }

    pub fn position(&self) -> usize {
        self.position
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn high_water(&self) -> usize {
        self.high_water
    }

    pub fn is_parsing(&self) -> bool {
        self.parse_size.is_some()
    }

    /// Total size in parse mode, high-water mark in generation mode.
    pub fn size(&self) -> usize {
        self.parse_size.unwrap_or(self.high_water)
    }

    fn ensure(&mut self, end: usize) {
        if self.flags.len() < end {
            self.bytes.resize(end, 0);
            self.flags.resize(end, 0);
            self.reserved.resize(end, 0);
        }
    }

    pub fn seek(&mut self, offset: usize) -> Result<(), BufferError> {
        let limit = self.parse_size.unwrap_or(self.budget);
        if offset > limit {
            return Err(BufferError::OutOfRange { offset, limit });
        }
        self.position = offset;
        Ok(())
    }

    pub fn write(&mut self, data: &[u8]) -> Result<(), BufferError> {
        let start = self.position;
        let end = start + data.len();
        if end > self.budget {
            return Err(BufferError::BudgetExceeded {
                offset: start,
                len: data.len(),
                budget: self.budget,
            });
        }
        self.ensure(end);
        for (i, &b) in data.iter().enumerate() {
            let o = start + i;
            if self.flags[o] & RESERVED != 0 && self.reserved[o] != b {
                return Err(BufferError::ReservationConflict { offset: o });
            }
        }
        self.bytes[start..end].copy_from_slice(data);
        for f in &mut self.flags[start..end] {
            *f |= WRITTEN;
        }
        self.position = end;
        self.high_water = self.high_water.max(end);
        Ok(())
    }

    /// Parse mode: consumes `len` bytes at the current position.
    pub fn read(&mut self, len: usize) -> Result<Vec<u8>, BufferError> {
        let start = self.position;
        let size = self.size();
        if start + len > size {
            return Err(BufferError::EndOfFile { offset: size });
        }
        let end = start + len;
        for f in &mut self.flags[start..end] {
            *f |= WRITTEN;
        }
        self.position = end;
        self.high_water = self.high_water.max(end);
        Ok(self.bytes[start..end].to_vec())
    }

    /// Peeks file bytes in parse mode without consuming them.
    pub fn peek(&self, offset: usize, len: usize) -> Option<&[u8]> {
        let size = self.parse_size?;
        (offset + len <= size).then(|| &self.bytes[offset..offset + len])
    }

    pub fn reserve(&mut self, offset: usize, data: &[u8]) -> Result<(), BufferError> {
        let end = offset + data.len();
        let limit = self.parse_size.unwrap_or(self.budget);
        if end > limit {
            return Err(BufferError::OutOfRange { offset: end, limit });
        }
        self.ensure(end);
        for (i, &b) in data.iter().enumerate() {
            let o = offset + i;
            let f = self.flags[o];
            let clash = (f & RESERVED != 0 && self.reserved[o] != b)
                || (f & WRITTEN != 0 && self.bytes[o] != b);
            if clash {
                return Err(BufferError::ReservationConflict { offset: o });
            }
        }
        for (i, &b) in data.iter().enumerate() {
            self.flags[offset + i] |= RESERVED;
            self.reserved[offset + i] = b;
        }
        Ok(())
    }

    /// Value of a byte that is already fixed (written, consumed or reserved).
    pub fn determined_byte(&self, offset: usize) -> Option<u8> {
        let f = *self.flags.get(offset)?;
        if f & WRITTEN != 0 {
            Some(self.bytes[offset])
        } else if f & RESERVED != 0 {
            Some(self.reserved[offset])
        } else {
            None
        }
    }

    pub fn reserved_byte(&self, offset: usize) -> Option<u8> {
        let f = *self.flags.get(offset)?;
        (f & RESERVED != 0).then(|| self.reserved[offset])
    }

    /// Reservation state of `[offset, offset+len)`.
    pub fn reservations(&self, offset: usize, len: usize) -> Determined {
        if len == 0 {
            return Determined::None;
        }
        let got: Vec<Option<u8>> = (offset..offset + len)
            .map(|o| self.reserved_byte(o))
            .collect();
        if got.iter().all(Option::is_none) {
            Determined::None
        } else if got.iter().all(Option::is_some) {
            Determined::Full(got.into_iter().map(Option::unwrap).collect())
        } else {
            Determined::Partial
        }
    }

    pub fn determined(&self, offset: usize, len: usize) -> Determined {
        let got: Vec<Option<u8>> = (offset..offset + len)
            .map(|o| self.determined_byte(o))
            .collect();
        if len == 0 || got.iter().all(Option::is_none) {
            Determined::None
        } else if got.iter().all(Option::is_some) {
            Determined::Full(got.into_iter().map(Option::unwrap).collect())
        } else {
            Determined::Partial
        }
    }

    /// Bytes in `[start, end)` as currently known (unwritten bytes read as 0).
    pub fn slice(&self, start: usize, end: usize) -> Vec<u8> {
        (start..end)
            .map(|o| match self.flags.get(o) {
                Some(f) if f & WRITTEN != 0 => self.bytes[o],
                _ => 0,
            })
            .collect()
    }

    /// First offset below the high-water mark that was never written.
    pub fn first_gap(&self) -> Option<usize> {
        (0..self.high_water).find(|&o| self.flags[o] & WRITTEN == 0)
    }

    /// Unwritten reservation below the high-water mark.
    pub fn unwritten_reservation(&self) -> Option<usize> {
        (0..self.high_water).find(|&o| self.flags[o] & RESERVED != 0 && self.flags[o] & WRITTEN == 0)
    }

    pub fn into_bytes(mut self) -> Vec<u8> {
        self.bytes.truncate(self.high_water);
        self.bytes
    }

    pub fn contents(&self) -> &[u8] {
        &self.bytes[..self.high_water.min(self.bytes.len())]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seek_on_fresh_buffer() {
        let mut b = FileBuffer::for_generation(DEFAULT_BUDGET);
        b.seek(0).unwrap();
        assert_eq!(b.position(), 0);
        assert_eq!(b.high_water(), 0);
    }

    #[test]
    fn seek_past_budget() {
        let mut b = FileBuffer::for_generation(16);
        assert!(b.seek(16).is_ok());
        assert_eq!(
            b.seek(17),
            Err(BufferError::OutOfRange {
                offset: 17,
                limit: 16
            })
        );
    }

    #[test]
    fn signature_write_and_fixup() {
        let mut b = FileBuffer::for_generation(DEFAULT_BUDGET);
        b.write(&[0x89, 0x50, 0x4E, 0x47, 0x0D, 0x0A, 0x1A, 0x0A]).unwrap();
        assert_eq!(b.high_water(), 8);
        b.write(&[0, 0, 0, 9]).unwrap();
        b.write(b"body").unwrap();
        let end = b.position();
        b.seek(8).unwrap();
        b.write(&[0, 0, 0, 4]).unwrap();
        b.seek(end).unwrap();
        assert_eq!(b.position(), 16);
        assert_eq!(b.high_water(), 16);
        assert_eq!(&b.contents()[8..12], &[0, 0, 0, 4]);
    }

    #[test]
    fn budget_is_enforced() {
        let mut b = FileBuffer::for_generation(4);
        b.write(&[1, 2, 3]).unwrap();
        assert!(matches!(
            b.write(&[4, 5]),
            Err(BufferError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn reservations() {
        let mut b = FileBuffer::for_generation(DEFAULT_BUDGET);
        b.reserve(1, &[3]).unwrap();
        b.reserve(1, &[3]).unwrap();
        assert_eq!(
            b.reserve(1, &[4]),
            Err(BufferError::ReservationConflict { offset: 1 })
        );
        assert_eq!(b.reservations(0, 2), Determined::Partial);
        assert_eq!(b.reservations(1, 1), Determined::Full(vec![3]));
        b.write(&[7, 3]).unwrap();
        b.reserve(2, &[9]).unwrap();
        assert_eq!(
            b.write(&[8]),
            Err(BufferError::ReservationConflict { offset: 2 })
        );
        let mut c = FileBuffer::for_generation(DEFAULT_BUDGET);
        c.reserve(0, &[1]).unwrap();
        assert_eq!(
            c.write(&[2]),
            Err(BufferError::ReservationConflict { offset: 0 })
        );
    }

    #[test]
    fn gaps_are_detected() {
        let mut b = FileBuffer::for_generation(DEFAULT_BUDGET);
        b.seek(2).unwrap();
        b.write(&[1]).unwrap();
        assert_eq!(b.first_gap(), Some(0));
    }

    #[test]
    fn parse_reads() {
        let mut b = FileBuffer::for_parsing(b"MINI", DEFAULT_BUDGET);
        assert_eq!(b.read(2).unwrap(), b"MI");
        assert_eq!(b.determined_byte(1), Some(b'I'));
        assert_eq!(b.determined_byte(2), None);
        assert!(matches!(b.read(3), Err(BufferError::EndOfFile { .. })));
        assert_eq!(b.size(), 4);
    }
}
