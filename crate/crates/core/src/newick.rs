//! Newick reading and writing.
//!
//! Accepted dialect: `subtree ';'` where a subtree is a leaf label or a
//! parenthesised list of at least two subtrees followed by an optional
//! label. Any subtree may carry a `:length`, which is validated and dropped.
//! Labels are bare (no whitespace or `(),:;'`) or single-quoted with `''`
//! as the escaped quote.

use crate::combinatorics::to_decimal;
use crate::error::{Error, Result};
use crate::timing::EdgeLengthReport;
use crate::tree::{Edge, PhyloTree};

pub fn parse_newick(text: &str) -> Result<PhyloTree> {
    Parser::new(text).parse()
}

struct Parser<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
    children: Vec<Vec<usize>>,
    labels: Vec<Option<String>>,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            text,
            bytes: text.as_bytes(),
            pos: 0,
            children: Vec::new(),
            labels: Vec::new(),
        }
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            position: self.pos,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn new_vertex(&mut self, parent: Option<usize>) -> usize {
        let id = self.children.len();
        self.children.push(Vec::new());
        self.labels.push(None);
        if let Some(p) = parent {
            self.children[p].push(id);
        }
        id
    }

    fn parse(mut self) -> Result<PhyloTree> {
        self.skip_ws();
        if self.pos == self.bytes.len() || self.peek() == Some(';') {
            return Err(Error::EmptyTree);
        }

        let mut open: Vec<usize> = Vec::new();
        let mut root = None;
        loop {
            // Expecting the start of a subtree.
            self.skip_ws();
            let parent = open.last().copied();
            match self.peek() {
                Some('(') => {
                    self.pos += 1;
                    let v = self.new_vertex(parent);
                    root.get_or_insert(v);
                    open.push(v);
                    continue;
                }
                Some(c) if c == ')' || c == ',' || c == ';' || c == ':' => {
                    return self.error(format!("expected a subtree, found '{c}'"));
                }
                None => return self.error("unexpected end of input"),
                Some(_) => {
                    let v = self.new_vertex(parent);
                    root.get_or_insert(v);
                    match self.label()? {
                        Some(label) => self.labels[v] = Some(label),
                        None => return self.error("expected a leaf label"),
                    }
                    self.branch_length()?;
                }
            }

            // A subtree has just been closed.
            loop {
                self.skip_ws();
                match self.peek() {
                    Some(',') => {
                        if open.is_empty() {
                            return self.error("',' outside parentheses");
                        }
                        self.pos += 1;
                        break;
                    }
                    Some(')') => {
                        let Some(v) = open.pop() else {
                            return self.error("unbalanced parenthesis: unexpected ')'");
                        };
                        self.pos += 1;
                        self.skip_ws();
                        self.labels[v] = self.label()?;
                        self.branch_length()?;
                    }
                    Some(';') => {
                        if !open.is_empty() {
                            return self.error("unbalanced parenthesis: missing ')'");
                        }
                        self.pos += 1;
                        self.skip_ws();
                        if self.pos != self.bytes.len() {
                            return self.error("trailing input after ';'");
                        }
                        let root = root.expect("at least one vertex was parsed");
                        return PhyloTree::from_adjacency(root, self.children, self.labels)
                            .map(|(tree, _)| tree);
                    }
                    None if !open.is_empty() => {
                        return self.error("unbalanced parenthesis: missing ')'");
                    }
                    None => return self.error("missing terminating ';'"),
                    Some(c) => return self.error(format!("unexpected '{c}'")),
                }
            }
        }
    }

    fn label(&mut self) -> Result<Option<String>> {
        match self.peek() {
            Some('\'') => {
                let start = self.pos;
                self.pos += 1;
                let mut label = String::new();
                loop {
                    match self.peek() {
                        None => {
                            self.pos = start;
                            return self.error("unterminated quoted label");
                        }
                        Some('\'') => {
                            self.pos += 1;
                            if self.peek() == Some('\'') {
                                label.push('\'');
                                self.pos += 1;
                            } else {
                                break;
                            }
                        }
                        Some(c) => {
                            label.push(c);
                            self.pos += c.len_utf8();
                        }
                    }
                }
                if label.is_empty() {
                    self.pos = start;
                    return self.error("empty quoted label");
                }
                Ok(Some(label))
            }
            _ => {
                let start = self.pos;
                while let Some(c) = self.peek() {
                    if is_reserved(c) {
                        break;
                    }
                    self.pos += c.len_utf8();
                }
                Ok((self.pos > start).then(|| self.text[start..self.pos].to_string()))
            }
        }
    }

    fn branch_length(&mut self) -> Result<()> {
        self.skip_ws();
        if self.peek() != Some(':') {
            return Ok(());
        }
        self.pos += 1;
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E') {
                self.pos += 1;
            } else {
                break;
            }
        }
        let token = &self.text[start..self.pos];
        if token.parse::<f64>().is_err() {
            self.pos = start;
            return self.error(format!("invalid branch length '{token}'"));
        }
        Ok(())
    }
}

fn is_reserved(c: char) -> bool {
    c.is_whitespace() || matches!(c, '(' | ')' | ',' | ':' | ';' | '\'')
}

fn quote_label(label: &str) -> String {
    if !label.is_empty() && !label.chars().any(is_reserved) {
        label.to_string()
    } else {
        format!("'{}'", label.replace('\'', "''"))
    }
}

/// Writes the topology; with `lengths`, every edge is annotated with its
/// expected length rounded to `precision` significant digits.
pub fn write_newick(
    tree: &PhyloTree,
    lengths: Option<&EdgeLengthReport>,
    precision: usize,
) -> Result<String> {
    let Some(report) = lengths else {
        return Ok(write_newick_with(tree, |_| None));
    };
    if let Some(edge) = tree.edges().find(|e| report.length(*e).is_none()) {
        return Err(Error::MissingEdge(tree.name(edge.child)));
    }
    Ok(write_newick_with(tree, |edge| {
        report.length(edge).map(|x| to_decimal(x, precision))
    }))
}

/// Writes the topology, appending `:annotation` to each edge for which
/// `annotate` returns a value.
pub fn write_newick_with<F>(tree: &PhyloTree, annotate: F) -> String
where
    F: Fn(Edge) -> Option<String>,
{
    enum Step {
        Enter(usize),
        Exit(usize),
        Comma,
    }

    let mut out = String::new();
    let mut stack = vec![Step::Enter(0)];
    while let Some(step) = stack.pop() {
        match step {
            Step::Comma => out.push(','),
            Step::Enter(i) => {
                let v = crate::tree::VertexId::from_index(i);
                let children = tree.children(v);
                if children.is_empty() {
                    stack.push(Step::Exit(i));
                    continue;
                }
                out.push('(');
                stack.push(Step::Exit(i));
                for (k, c) in children.iter().enumerate().rev() {
                    stack.push(Step::Enter(c.index()));
                    if k > 0 {
                        stack.push(Step::Comma);
                    }
                }
            }
            Step::Exit(i) => {
                let v = crate::tree::VertexId::from_index(i);
                if !tree.is_leaf(v) {
                    out.push(')');
                }
                if let Some(label) = tree.label(v) {
                    out.push_str(&quote_label(label));
                }
                if let Some(parent) = tree.parent(v) {
                    if let Some(text) = annotate(Edge { parent, child: v }) {
                        out.push(':');
                        out.push_str(&text);
                    }
                }
            }
        }
    }
    out.push(';');
    out
}
