//! Parse tree shared by generation and parsing.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseNode {
    pub id: usize,
    pub name: String,
    #[serde(rename = "type")]
    pub type_name: String,
    #[serde(rename = "file")]
    pub file_span: (usize, usize),
    #[serde(rename = "seed")]
    pub decision_span: (usize, usize),
    pub optional: bool,
    /// Set when the node was produced at an offset below the high-water mark (after `FSeek`).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub rewrite: bool,
    /// Indices into the event log recorded while this node was open.
    #[serde(skip)]
    pub events: (usize, usize),
    pub children: Vec<ParseNode>,
}

impl ParseNode {
    /// Pre-order traversal.
    pub fn walk(&self) -> Vec<&ParseNode> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(n.children.iter().rev());
        }
        out
    }

    pub fn find(&self, id: usize) -> Option<&ParseNode> {
        self.walk().into_iter().find(|n| n.id == id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree serializes")
    }

    /// Shape equality ignoring event indices.
    pub fn same_shape(&self, other: &ParseNode) -> bool {
        self.id == other.id
            && self.name == other.name
            && self.type_name == other.type_name
            && self.file_span == other.file_span
            && self.decision_span == other.decision_span
            && self.optional == other.optional
            && self.rewrite == other.rewrite
            && self.children.len() == other.children.len()
            && self
                .children
                .iter()
                .zip(&other.children)
                .all(|(a, b)| a.same_shape(b))
    }
}

pub struct NodeStart {
    pub name: String,
    pub type_name: String,
    pub file_start: usize,
    pub seed_start: usize,
    pub event_start: usize,
    pub optional: bool,
    pub rewrite: bool,
}

/// Builds the tree while the template executes.
pub struct TreeBuilder {
    stack: Vec<ParseNode>,
    next_id: usize,
}

impl TreeBuilder {
    pub fn new(root_type: &str) -> Self {
        let root = ParseNode {
            id: 0,
            name: String::new(),
            type_name: root_type.to_string(),
            file_span: (0, 0),
            decision_span: (0, 0),
            optional: false,
            rewrite: false,
            events: (0, 0),
            children: Vec::new(),
        };
        Self {
            stack: vec![root],
            next_id: 1,
        }
    }

    pub fn current_id(&self) -> usize {
        self.stack.last().unwrap().id
    }

    pub fn begin(&mut self, s: NodeStart) -> usize {
        let id = self.next_id;
        self.next_id += 1;
        self.stack.push(ParseNode {
            id,
            name: s.name,
            type_name: s.type_name,
            file_span: (s.file_start, s.file_start),
            decision_span: (s.seed_start, s.seed_start),
            optional: s.optional,
            rewrite: s.rewrite,
            events: (s.event_start, s.event_start),
            children: Vec::new(),
        });
        id
    }

    pub fn end(&mut self, file_end: usize, seed_end: usize, event_end: usize) -> usize {
        let mut node = self.stack.pop().expect("unbalanced tree");
        node.file_span.1 = file_end.max(node.file_span.0);
        node.decision_span.1 = seed_end;
        node.events.1 = event_end;
        let id = node.id;
        self.stack
            .last_mut()
            .expect("root stays on the stack")
            .children
            .push(node);
        id
    }

    pub fn finish(mut self, file_end: usize, seed_end: usize, event_end: usize) -> ParseNode {
        // Nodes left open by an early `return` are closed at the current position.
        while self.stack.len() > 1 {
            self.end(file_end, seed_end, event_end);
        }
        let mut root = self.stack.pop().unwrap();
        root.file_span = (0, file_end);
        root.decision_span = (0, seed_end);
        root.events = (0, event_end);
        root
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn start(name: &str, at: usize) -> NodeStart {
        NodeStart {
            name: name.into(),
            type_name: "T".into(),
            file_start: at,
            seed_start: at,
            event_start: 0,
            optional: false,
            rewrite: false,
        }
    }

    #[test]
    fn ids_are_preorder_and_json_shape() {
        let mut t = TreeBuilder::new("file");
        t.begin(start("a", 0));
        t.begin(start("b", 0));
        t.end(2, 1, 0);
        t.end(4, 2, 0);
        t.begin(start("c", 4));
        t.end(5, 2, 0);
        let root = t.finish(5, 2, 0);
        let ids: Vec<usize> = root.walk().iter().map(|n| n.id).collect();
        assert_eq!(ids, [0, 1, 2, 3]);
        let v: serde_json::Value = serde_json::from_str(&root.to_json()).unwrap();
        assert_eq!(v["children"][0]["file"], serde_json::json!([0, 4]));
        assert_eq!(v["children"][0]["children"][0]["seed"], serde_json::json!([0, 1]));
        assert_eq!(v["children"][1]["type"], "T");
        assert!(v["children"][1].get("rewrite").is_none());
    }
}
