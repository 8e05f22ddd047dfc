//! Dependency trees, their root-to-leaf unrolls and per-node unroll counts.

use crate::corpus::{LabelInventory, RawToken, Vocabulary};
use crate::error::TreeError;

/// A validated dependency parse. Node `i` is the token at surface position
/// `i + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DependencyTree {
    words: Vec<usize>,
    labels: Vec<usize>,
    parents: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    surfaces: Vec<String>,
    root: usize,
}

/// Root-to-leaf path of node indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Unroll {
    pub path: Vec<usize>,
}

/// Number of unrolls through each node and the matching learning-rate
/// discount.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeStats {
    pub n: Vec<usize>,
    pub discount: Vec<f64>,
}

/// Checks that head links form a single rooted tree, returning each token's
/// parent as a 0-based node index.
pub fn check_structure(tokens: &[RawToken]) -> Result<Vec<Option<usize>>, TreeError> {
    let len = tokens.len();
    let mut parents = Vec::with_capacity(len);
    let mut roots = Vec::new();
    for (i, tok) in tokens.iter().enumerate() {
        match tok.head {
            0 => {
                roots.push(i + 1);
                parents.push(None);
            }
            h if h > len => {
                return Err(TreeError::HeadOutOfRange {
                    position: i + 1,
                    head: h,
                    len,
                })
            }
            h => parents.push(Some(h - 1)),
        }
    }
    match roots.len() {
        0 => return Err(TreeError::NoRoot),
        1 => {}
        _ => return Err(TreeError::MultipleRoots(roots)),
    }

    // 0 = unvisited, 1 = on the current chase, 2 = known to reach the root.
    let mut state = vec![0u8; len];
    for start in 0..len {
        let mut chain = Vec::new();
        let mut node = start;
        loop {
            match state[node] {
                2 => break,
                1 => {
                    let from = chain.iter().position(|&n| n == node).unwrap_or(0);
                    let mut cycle: Vec<usize> = chain[from..].iter().map(|&n| n + 1).collect();
                    cycle.sort_unstable();
                    return Err(TreeError::CycleDetected(cycle));
                }
                _ => {}
            }
            state[node] = 1;
            chain.push(node);
            match parents[node] {
                Some(p) => node = p,
                None => break,
            }
        }
        for n in chain {
            state[n] = 2;
        }
    }
    Ok(parents)
}

pub fn validate_tree(
    tokens: &[RawToken],
    vocab: &Vocabulary,
    labels: &LabelInventory,
) -> Result<DependencyTree, TreeError> {
    let parents = check_structure(tokens)?;
    let words = tokens.iter().map(|t| vocab.map_token(&t.surface)).collect();
    let tree_labels = tokens
        .iter()
        .zip(&parents)
        .map(|(t, p)| match p {
            None => labels.root_id(),
            Some(_) => labels.id_or_root(&t.label),
        })
        .collect();
    let surfaces = tokens.iter().map(|t| t.surface.clone()).collect();
    DependencyTree::from_parents(words, tree_labels, parents, surfaces)
}

impl DependencyTree {
    /// Builds a tree from per-node parent links. Surfaces are used only for
    /// debug dumps.
    pub fn from_parents(
        words: Vec<usize>,
        labels: Vec<usize>,
        parents: Vec<Option<usize>>,
        surfaces: Vec<String>,
    ) -> Result<Self, TreeError> {
        let len = parents.len();
        assert_eq!(words.len(), len);
        assert_eq!(labels.len(), len);
        assert_eq!(surfaces.len(), len);
        let tokens: Vec<RawToken> = parents
            .iter()
            .enumerate()
            .map(|(i, p)| RawToken {
                position: i + 1,
                surface: String::new(),
                head: p.map_or(0, |p| p + 1),
                label: String::new(),
            })
            .collect();
        check_structure(&tokens)?;
        let mut children = vec![Vec::new(); len];
        let mut root = 0;
        for (i, p) in parents.iter().enumerate() {
            match p {
                Some(p) => children[*p].push(i),
                None => root = i,
            }
        }
        Ok(DependencyTree {
            words,
            labels,
            parents,
            children,
            surfaces,
            root,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn word(&self, node: usize) -> usize {
        self.words[node]
    }

    pub fn words(&self) -> &[usize] {
        &self.words
    }

    pub fn label(&self, node: usize) -> usize {
        self.labels[node]
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parents[node]
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        self.children[node].is_empty()
    }

    pub fn surface(&self, node: usize) -> &str {
        &self.surfaces[node]
    }

    /// True when every node has at most one child.
    pub fn is_chain(&self) -> bool {
        self.children.iter().all(|c| c.len() <= 1)
    }

    /// One unroll per leaf, depth-first with children in surface order.
    pub fn unrolls(&self) -> Vec<Unroll> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        // (node, next child to visit)
        let mut stack = vec![(self.root, 0usize)];
        path.push(self.root);
        while let Some((node, next)) = stack.last_mut() {
            let node = *node;
            if self.children[node].is_empty() {
                out.push(Unroll { path: path.clone() });
            }
            if let Some(&child) = self.children[node].get(*next) {
                *next += 1;
                stack.push((child, 0));
                path.push(child);
            } else {
                stack.pop();
                path.pop();
            }
        }
        out
    }

    /// Leaf count under each node.
    pub fn node_stats(&self) -> NodeStats {
        let mut n = vec![0usize; self.len()];
        for node in self.post_order() {
            n[node] = if self.is_leaf(node) {
                1
            } else {
                self.children[node].iter().map(|&c| n[c]).sum()
            };
        }
        let discount = n.iter().map(|&k| 1.0 / k as f64).collect();
        NodeStats { n, discount }
    }

    fn post_order(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.len());
        let mut stack = vec![self.root];
        while let Some(node) = stack.pop() {
            order.push(node);
            stack.extend(self.children[node].iter().copied());
        }
        order.reverse();
        order
    }

    /// Nodes from the root down to the parent of `node`.
    pub fn ancestors(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = self.parents[node];
        while let Some(p) = cur {
            out.push(p);
            cur = self.parents[p];
        }
        out.reverse();
        out
    }

    /// Labels of the nodes on the path root..=node. The first entry is the
    /// root's reserved label.
    pub fn label_sequence(&self, node: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.ancestors(node).iter().map(|&a| self.labels[a]).collect();
        out.push(self.labels[node]);
        out
    }

    /// One line per unroll, surfaces joined by `→`.
    pub fn dump_unrolls(&self) -> String {
        let mut out = String::new();
        for u in self.unrolls() {
            let line: Vec<&str> = u.path.iter().map(|&i| self.surfaces[i].as_str()).collect();
            out.push_str(&line.join("→"));
            out.push('\n');
        }
        out
    }
}

pub fn extract_unrolls(tree: &DependencyTree) -> Vec<Unroll> {
    tree.unrolls()
}

pub fn node_stats(tree: &DependencyTree) -> NodeStats {
    tree.node_stats()
}

pub fn ancestor_sequence(tree: &DependencyTree, node: usize) -> Vec<usize> {
    tree.ancestors(node)
}

pub fn label_sequence(tree: &DependencyTree, node: usize) -> Vec<usize> {
    tree.label_sequence(node)
}
