//! Byte-stream codecs for `<codec=...>` regions.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("decode failed: {0}")]
pub struct DecodeError(pub String);

/// An invertible transformation between raw bytes and their stored form.
pub trait StreamCodec: Send + Sync {
    fn encode(&self, raw: &[u8]) -> Vec<u8>;
    fn decode(&self, stored: &[u8]) -> Result<Vec<u8>, DecodeError>;
}

/// Codecs by name. The default registry holds `zlib_stored`.
#[derive(Clone)]
pub struct CodecRegistry {
    codecs: HashMap<String, Arc<dyn StreamCodec>>,
}

impl CodecRegistry {
    pub fn empty() -> Self {
        Self {
            codecs: HashMap::new(),
        }
    }

    pub fn register(&mut self, name: &str, codec: Arc<dyn StreamCodec>) {
        self.codecs.insert(name.to_string(), codec);
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn StreamCodec>> {
        self.codecs.get(name).cloned()
    }

    pub fn names(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.codecs.keys().map(String::as_str).collect();
        v.sort_unstable();
        v
    }
}

impl Default for CodecRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register("zlib_stored", Arc::new(crate::formats::ZlibStored));
        r
    }
}

impl fmt::Debug for CodecRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.names()).finish()
    }
}
