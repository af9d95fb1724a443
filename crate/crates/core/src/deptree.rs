//! Dependency trees, LCA queries and contextual sub-tree pruning.
//!
//! A [`SubTree`] keeps the tokens on the tree path between a trigger span
//! and an entity span (up to their lowest common ancestor) together with
//! every token within `dist` undirected hops of that path. A negative
//! `dist` keeps the whole sentence. [`AdjMatrix`] is the induced
//! undirected adjacency with self-loops that the GCN consumes.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use thiserror::Error;

use crate::corpus::Span;
use crate::ndgrad::Tensor;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("empty tree")]
    Empty,
    #[error("{heads} heads but {deprels} relation labels")]
    LengthMismatch { heads: usize, deprels: usize },
    #[error("token {token} has head {head} outside 0..={n}")]
    HeadOutOfRange { token: usize, head: usize, n: usize },
    #[error("self-headed token {token}")]
    SelfHeaded { token: usize },
    #[error("cycle detected through tokens {tokens:?}")]
    Cycle { tokens: Vec<usize> },
    #[error("no root token")]
    NoRoot,
    #[error("multiple roots: tokens {tokens:?}")]
    MultipleRoots { tokens: Vec<usize> },
    #[error("span {span} outside 1..={n}")]
    SpanOutOfRange { span: Span, n: usize },
    #[error("node set is not connected in the tree")]
    Disconnected,
}

/// Rooted dependency tree over tokens `1..=n`.
#[derive(Clone, Debug, PartialEq)]
pub struct DepTree {
    /// `heads[i - 1]` is the head of token `i`.
    heads: Vec<usize>,
    deprels: Vec<String>,
    /// `children[i]` for `i` in `0..=n`; index 0 is the virtual root.
    children: Vec<Vec<usize>>,
    depth: Vec<usize>,
    root: usize,
}

impl DepTree {
    /// Builds a tree from 1-based head indices (0 = root).
    pub fn build<S: AsRef<str>>(heads: &[usize], deprels: &[S]) -> Result<Self, TreeError> {
        let n = heads.len();
        if n == 0 {
            return Err(TreeError::Empty);
        }
        if deprels.len() != n {
            return Err(TreeError::LengthMismatch { heads: n, deprels: deprels.len() });
        }
        for (i, &h) in heads.iter().enumerate() {
            if h > n {
                return Err(TreeError::HeadOutOfRange { token: i + 1, head: h, n });
            }
            if h == i + 1 {
                return Err(TreeError::SelfHeaded { token: i + 1 });
            }
        }

        // 0 = unvisited, 1 = on current walk, 2 = finished.
        let mut state = vec![0u8; n + 1];
        let mut depth = vec![0usize; n + 1];
        state[0] = 2;
        for start in 1..=n {
            let mut walk = Vec::new();
            let mut node = start;
            while state[node] == 0 {
                state[node] = 1;
                walk.push(node);
                node = heads[node - 1];
            }
            if state[node] == 1 {
                let from = walk.iter().position(|&w| w == node).unwrap_or(0);
                let mut tokens = walk[from..].to_vec();
                tokens.sort_unstable();
                return Err(TreeError::Cycle { tokens });
            }
            let mut d = if node == 0 { 0 } else { depth[node] };
            for &w in walk.iter().rev() {
                d += 1;
                depth[w] = d;
                state[w] = 2;
            }
        }

        let roots: Vec<usize> = (1..=n).filter(|&i| heads[i - 1] == 0).collect();
        let root = match roots.as_slice() {
            [] => return Err(TreeError::NoRoot),
            [r] => *r,
            _ => return Err(TreeError::MultipleRoots { tokens: roots }),
        };

        let mut children = vec![Vec::new(); n + 1];
        for (i, &h) in heads.iter().enumerate() {
            children[h].push(i + 1);
        }
        Ok(DepTree {
            heads: heads.to_vec(),
            deprels: deprels.iter().map(|s| String::from(s.as_ref())).collect(),
            children,
            depth,
            root,
        })
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    /// Head of `node`, `0` for the root.
    pub fn head(&self, node: usize) -> usize {
        self.heads[node - 1]
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        match self.heads[node - 1] {
            0 => None,
            h => Some(h),
        }
    }

    pub fn deprel(&self, node: usize) -> &str {
        &self.deprels[node - 1]
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    /// Depth below the virtual root; the root token has depth 1.
    pub fn depth(&self, node: usize) -> usize {
        self.depth[node]
    }

    /// Undirected neighbours: head (if any) followed by children.
    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.parent(node).into_iter().chain(self.children[node].iter().copied())
    }

    /// `node` and all of its ancestors, bottom-up.
    pub fn ancestors(&self, node: usize) -> Vec<usize> {
        let mut out = vec![node];
        let mut cur = node;
        while let Some(p) = self.parent(cur) {
            out.push(p);
            cur = p;
        }
        out
    }

    fn lca_pair(&self, mut a: usize, mut b: usize) -> usize {
        while self.depth[a] > self.depth[b] {
            a = self.heads[a - 1];
        }
        while self.depth[b] > self.depth[a] {
            b = self.heads[b - 1];
        }
        while a != b {
            a = self.heads[a - 1];
            b = self.heads[b - 1];
        }
        a
    }

    /// Deepest node that is an ancestor (inclusive) of every node in
    /// `a ∪ b`.
    ///
    /// Panics if both sets are empty or a node is out of range.
    pub fn lca(&self, a: &[usize], b: &[usize]) -> usize {
        let mut nodes = a.iter().chain(b.iter()).copied();
        let first = nodes.next().expect("lca of empty node sets");
        nodes.fold(first, |acc, x| self.lca_pair(acc, x))
    }

    /// Contextual sub-tree between a trigger span and an entity span.
    pub fn contextual_subtree(&self, trigger: Span, entity: Span, dist: i32) -> Result<SubTree, TreeError> {
        let n = self.len();
        for span in [trigger, entity] {
            if !span.within(n) {
                return Err(TreeError::SpanOutOfRange { span, n });
            }
        }
        if dist < 0 {
            return Ok(SubTree::from_nodes(n, (1..=n).collect(), trigger, entity, None));
        }

        let trigger_nodes: Vec<usize> = trigger.indices().collect();
        let entity_nodes: Vec<usize> = entity.indices().collect();
        let lca = self.lca(&trigger_nodes, &entity_nodes);

        let mut hops = vec![usize::MAX; n + 1];
        let mut queue = VecDeque::new();
        for &start in trigger_nodes.iter().chain(entity_nodes.iter()) {
            let mut node = start;
            loop {
                if hops[node] == 0 {
                    break;
                }
                hops[node] = 0;
                queue.push_back(node);
                if node == lca {
                    break;
                }
                node = self.heads[node - 1];
            }
        }
        let limit = dist as usize;
        while let Some(node) = queue.pop_front() {
            if hops[node] == limit {
                continue;
            }
            for next in self.neighbors(node) {
                if hops[next] == usize::MAX {
                    hops[next] = hops[node] + 1;
                    queue.push_back(next);
                }
            }
        }
        let nodes = (1..=n).filter(|&i| hops[i] <= limit).collect();
        Ok(SubTree::from_nodes(n, nodes, trigger, entity, Some(lca)))
    }

    /// Undirected adjacency with self-loops induced on `sub`'s nodes.
    pub fn adjacency(&self, sub: &SubTree) -> Result<AdjMatrix, TreeError> {
        let m = sub.nodes.len();
        if m == 0 {
            return Err(TreeError::Disconnected);
        }
        let mut values = vec![0u8; m * m];
        for (i, &node) in sub.nodes.iter().enumerate() {
            values[i * m + i] = 1;
            if let Some(j) = self.parent(node).and_then(|p| sub.position(p)) {
                values[i * m + j] = 1;
                values[j * m + i] = 1;
            }
        }
        let adj = AdjMatrix::from_values(m, values);
        if !adj.is_connected() {
            return Err(TreeError::Disconnected);
        }
        Ok(adj)
    }

    /// Graphviz rendering of the edges kept by `sub`.
    pub fn to_dot<S: AsRef<str>>(&self, sub: &SubTree, words: &[S]) -> String {
        let mut out = String::from("digraph subtree {\n");
        for &node in &sub.nodes {
            let word = words.get(node - 1).map(|w| w.as_ref()).unwrap_or("");
            let _ = writeln!(out, "  n{node} [label=\"{}\"];", escape(word));
        }
        for &node in &sub.nodes {
            if let Some(h) = self.parent(node).filter(|&h| sub.contains(h)) {
                let _ = writeln!(out, "  n{h} -> n{node} [label=\"{}\"];", escape(self.deprel(node)));
            }
        }
        out.push_str("}\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Pruned node set with trigger and entity positions in local indexing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubTree {
    /// Retained token indices in sentence order.
    pub nodes: Vec<usize>,
    local: Vec<Option<usize>>,
    pub trigger_positions: Vec<usize>,
    pub entity_positions: Vec<usize>,
    /// LCA of trigger and entity; `None` for whole-tree sub-trees.
    pub lca: Option<usize>,
}

impl SubTree {
    fn from_nodes(n: usize, nodes: Vec<usize>, trigger: Span, entity: Span, lca: Option<usize>) -> Self {
        let mut local = vec![None; n + 1];
        for (i, &node) in nodes.iter().enumerate() {
            local[node] = Some(i);
        }
        let positions = |span: Span| span.indices().filter_map(|t| local[t]).collect::<Vec<_>>();
        SubTree {
            trigger_positions: positions(trigger),
            entity_positions: positions(entity),
            nodes,
            local,
            lca,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Local position of an original token index.
    pub fn position(&self, node: usize) -> Option<usize> {
        self.local.get(node).copied().flatten()
    }

    pub fn contains(&self, node: usize) -> bool {
        self.position(node).is_some()
    }

    /// Retained words in sentence order, space separated.
    pub fn render<S: AsRef<str>>(&self, words: &[S]) -> String {
        let kept: Vec<&str> = self.nodes.iter().filter_map(|&i| words.get(i - 1)).map(|w| w.as_ref()).collect();
        kept.join(" ")
    }

    /// Zero-based row indices into a full-sentence matrix.
    pub fn rows(&self) -> Vec<usize> {
        self.nodes.iter().map(|&i| i - 1).collect()
    }
}

/// Symmetric 0/1 adjacency with unit diagonal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdjMatrix {
    size: usize,
    values: Vec<u8>,
    degrees: Vec<usize>,
}

impl AdjMatrix {
    fn from_values(size: usize, values: Vec<u8>) -> Self {
        let degrees = values.chunks(size).map(|row| row.iter().map(|&v| v as usize).sum()).collect();
        AdjMatrix { size, values, degrees }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.values[i * self.size + j]
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// Applies a consistent relabelling: new node `k` is old node `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let m = self.size;
        let mut values = vec![0u8; m * m];
        for i in 0..m {
            for j in 0..m {
                values[i * m + j] = self.get(perm[i], perm[j]);
            }
        }
        Self::from_values(m, values)
    }

    /// Row-normalised `D^-1 Ã` as a dense tensor.
    pub fn normalized(&self) -> Tensor {
        let m = self.size;
        let mut data = vec![0.0; m * m];
        for i in 0..m {
            let d = self.degrees[i] as f64;
            for j in 0..m {
                data[i * m + j] = self.get(i, j) as f64 / d;
            }
        }
        Tensor::matrix(m, m, data)
    }

    fn is_connected(&self) -> bool {
        let m = self.size;
        let mut seen = vec![false; m];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for (j, s) in seen.iter_mut().enumerate() {
                if self.get(i, j) == 1 && !*s {
                    *s = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Formats a node set as `{a, b, c}` for diagnostics.
pub fn format_nodes(nodes: &[usize]) -> String {
    let parts: Vec<String> = nodes.iter().map(|n| format!("{n}")).collect();
    format!("{{{}}}", parts.join(", "))
}
