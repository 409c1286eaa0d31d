//! Variable bindings. Lookup is dynamic: innermost frame first, globals last.

use crate::runtime::value::{normalize, Value};
use crate::templatelang::Ident;

#[derive(Debug, Clone)]
pub struct Binding {
    pub value: Value,
    /// Integer width of a scalar local, used to truncate on assignment.
    pub width: Option<(u8, bool)>,
    pub input: bool,
}

#[derive(Debug, Default)]
struct Frame {
    vars: Vec<(Ident, Binding)>,
}

impl Frame {
    fn find(&self, name: &str) -> Option<usize> {
        self.vars.iter().rposition(|(n, _)| &**n == name)
    }
}

#[derive(Debug)]
pub struct Scope {
    frames: Vec<Frame>,
}

impl Default for Scope {
    fn default() -> Self {
        Self::new()
    }
}

impl Scope {
    pub fn new() -> Self {
        Self {
            frames: vec![Frame::default()],
        }
    }

    pub fn push(&mut self) {
        self.frames.push(Frame::default());
    }

    /// Pops the innermost frame and returns its input fields in declaration order.
    pub fn pop(&mut self) -> Vec<(Ident, Value)> {
        let frame = self.frames.pop().expect("global frame is never popped");
        frame
            .vars
            .into_iter()
            .filter(|(_, b)| b.input)
            .map(|(n, b)| (n, b.value))
            .collect()
    }

    pub fn depth(&self) -> usize {
        self.frames.len()
    }

    /// Binds in the innermost frame. Re-declaring a name in the same frame
    /// replaces the value in place.
    pub fn declare(&mut self, name: Ident, binding: Binding) {
        let frame = self.frames.last_mut().unwrap();
        match frame.find(&name) {
            Some(i) => frame.vars[i].1 = binding,
            None => frame.vars.push((name, binding)),
        }
    }

    pub fn lookup(&self, name: &str) -> Option<&Binding> {
        self.frames
            .iter()
            .rev()
            .find_map(|f| f.find(name).map(|i| &f.vars[i].1))
    }

    pub fn lookup_mut(&mut self, name: &str) -> Option<&mut Binding> {
        for f in self.frames.iter_mut().rev() {
            if let Some(i) = f.find(name) {
                return Some(&mut f.vars[i].1);
            }
        }
        None
    }

    /// Assigns to an existing binding, truncating integers to its width.
    pub fn assign(&mut self, name: &str, value: Value) -> bool {
        match self.lookup_mut(name) {
            Some(b) => {
                b.value = match (value, b.width) {
                    (Value::Int(v), Some((w, s))) => Value::Int(normalize(v, w, s)),
                    (v, _) => v,
                };
                true
            }
            None => false,
        }
    }
}
