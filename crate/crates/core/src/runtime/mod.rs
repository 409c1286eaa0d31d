//! Values, scopes, the file buffer and the parse tree.

pub mod buffer;
pub mod scope;
pub mod tree;
pub mod value;

pub use buffer::{BufferError, Determined, FileBuffer, DEFAULT_BUDGET};
pub use scope::{Binding, Scope};
pub use tree::{NodeStart, ParseNode, TreeBuilder};
pub use value::{RecordValue, Value};
