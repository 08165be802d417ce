//! Plain-text edge lists.
//!
//! One edge per line as `tail head weight`, separated by whitespace. `#`
//! starts a comment that runs to the end of the line and blank lines are
//! ignored. Nodes are numbered in order of first appearance.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use edgemargin::Digraph;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

pub fn parse_edge_list(text: &str) -> Result<Digraph, ParseError> {
    let mut labels: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut seen = HashSet::new();
    let mut edges = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let [tail, head, weight] = fields[..] else {
            return Err(err(
                line,
                format!("expected `tail head weight`, found {} fields", fields.len()),
            ));
        };
        let weight: f64 = weight
            .parse()
            .map_err(|_| err(line, format!("weight `{weight}` is not a number")))?;
        if !(weight.is_finite() && weight > 0.0) {
            return Err(err(line, format!("weight {weight} must be finite and positive")));
        }
        if tail == head {
            return Err(err(line, format!("self-loop on `{tail}`")));
        }
        if !seen.insert((tail.to_string(), head.to_string())) {
            return Err(err(line, format!("duplicate edge `{tail}` -> `{head}`")));
        }
        let mut node = |label: &str| {
            *index.entry(label.to_string()).or_insert_with(|| {
                labels.push(label.to_string());
                labels.len() - 1
            })
        };
        let (t, h) = (node(tail), node(head));
        edges.push((t, h, weight));
    }

    let n = labels.len();
    Digraph::new(n, edges)
        .and_then(|g| g.with_labels(labels))
        .map_err(|e| err(0, e.to_string()))
}

/// Serializes with node labels and shortest round-trip weights, so parsing
/// the output reproduces the graph exactly.
pub fn to_edge_list(g: &Digraph) -> String {
    let mut out = String::from("# tail head weight\n");
    for e in g.edges() {
        let _ = writeln!(out, "{} {} {}", g.label(e.tail), g.label(e.head), e.weight);
    }
    out
}
