//! Category DAG loading and hierarchical levels.
//!
//! Categories form a rooted directed acyclic graph. A category's level is
//! its distance from the root: 0 for the root itself, 1 for its direct
//! children, and so on. With multiple parents the shortest path counts by
//! default; [`LevelRule::Longest`] is available for sensitivity analysis.

use std::collections::HashMap;
use std::collections::VecDeque;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed edge line {content:?} (expected \"parent,child\")")]
    MalformedLine {
        path: String,
        line: usize,
        content: String,
    },
    #[error("self-loop on {name:?}")]
    SelfLoop { name: String },
    #[error("cycle detected: {}", cycle.join(" -> "))]
    CycleDetected { cycle: Vec<String> },
    #[error("root {root:?} does not appear in the edge list")]
    RootMissing { root: String },
    #[error("question has an empty category list")]
    EmptyCategoryList,
    #[error("invalid level table: {reason}")]
    InvalidLevels { reason: String },
}

/// How the level of a multi-parent node is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum LevelRule {
    /// Shortest path from the root (breadth-first distance).
    #[default]
    Shortest,
    /// Longest path from the root.
    Longest,
}

/// Per-load diagnostics.
#[derive(Debug, Clone, Default, Serialize)]
pub struct TreeSummary {
    pub nodes: usize,
    pub edges: usize,
    pub duplicate_edges: usize,
    pub unreachable: Vec<String>,
}

/// Result of [`KnowledgeTree::question_hierarchy`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hierarchy {
    /// Maximum level over the resolvable categories; `None` if none resolve.
    pub level: Option<u32>,
    /// Categories ignored because they are unknown or unreachable.
    pub ignored: usize,
}

/// An immutable rooted DAG of categories with precomputed levels.
#[derive(Debug, Clone)]
pub struct KnowledgeTree {
    names: Vec<String>,
    index: HashMap<String, usize>,
    levels: Vec<Option<u32>>,
    root: usize,
    rule: LevelRule,
}

impl KnowledgeTree {
    /// Builds the tree from `parent -> child` pairs.
    ///
    /// Duplicate edges are dropped (counted in the summary); self-loops and
    /// cycles are errors, as is a root that never appears.
    pub fn from_edges<S: AsRef<str>>(
        edges: &[(S, S)],
        root: &str,
        rule: LevelRule,
    ) -> Result<(Self, TreeSummary), TreeError> {
        let mut names: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let intern = |name: &str, names: &mut Vec<String>, index: &mut HashMap<String, usize>| {
            if let Some(&i) = index.get(name) {
                i
            } else {
                let i = names.len();
                names.push(name.to_string());
                index.insert(name.to_string(), i);
                i
            }
        };

        let mut children: Vec<Vec<usize>> = Vec::new();
        let mut seen_edges = std::collections::HashSet::new();
        let mut duplicate_edges = 0usize;
        let mut edge_count = 0usize;
        for (parent, child) in edges {
            let (parent, child) = (parent.as_ref(), child.as_ref());
            if parent == child {
                return Err(TreeError::SelfLoop {
                    name: parent.to_string(),
                });
            }
            let p = intern(parent, &mut names, &mut index);
            let c = intern(child, &mut names, &mut index);
            children.resize(names.len(), Vec::new());
            if !seen_edges.insert((p, c)) {
                duplicate_edges += 1;
                continue;
            }
            children[p].push(c);
            edge_count += 1;
        }
        children.resize(names.len(), Vec::new());

        let root_idx = *index.get(root).ok_or_else(|| TreeError::RootMissing {
            root: root.to_string(),
        })?;

        if let Some(cycle) = find_cycle(&children) {
            return Err(TreeError::CycleDetected {
                cycle: cycle.into_iter().map(|i| names[i].clone()).collect(),
            });
        }

        let levels = match rule {
            LevelRule::Shortest => bfs_levels(&children, root_idx),
            LevelRule::Longest => longest_levels(&children, root_idx),
        };

        let mut unreachable: Vec<String> = levels
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_none())
            .map(|(i, _)| names[i].clone())
            .collect();
        unreachable.sort();

        let summary = TreeSummary {
            nodes: names.len(),
            edges: edge_count,
            duplicate_edges,
            unreachable,
        };
        Ok((
            KnowledgeTree {
                names,
                index,
                levels,
                root: root_idx,
                rule,
            },
            summary,
        ))
    }

    /// Rebuilds a queryable tree from a `(category, level)` table, as
    /// produced by [`KnowledgeTree::write_levels_csv`]. Edges are not
    /// retained, so only level lookups are meaningful.
    pub fn from_levels<S: AsRef<str>>(
        root: &str,
        pairs: &[(S, Option<u32>)],
    ) -> Result<Self, TreeError> {
        let mut names = Vec::with_capacity(pairs.len());
        let mut index = HashMap::with_capacity(pairs.len());
        let mut levels = Vec::with_capacity(pairs.len());
        for (name, level) in pairs {
            let name = name.as_ref();
            if index.insert(name.to_string(), names.len()).is_some() {
                return Err(TreeError::InvalidLevels {
                    reason: format!("duplicate category {name:?}"),
                });
            }
            names.push(name.to_string());
            levels.push(*level);
        }
        let root_idx = *index.get(root).ok_or_else(|| TreeError::RootMissing {
            root: root.to_string(),
        })?;
        if levels[root_idx] != Some(0) {
            return Err(TreeError::InvalidLevels {
                reason: format!("root {root:?} must have level 0"),
            });
        }
        Ok(KnowledgeTree {
            names,
            index,
            levels,
            root: root_idx,
            rule: LevelRule::Shortest,
        })
    }

    pub fn root(&self) -> &str {
        &self.names[self.root]
    }

    pub fn rule(&self) -> LevelRule {
        self.rule
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    /// The stored level, or `None` for unknown or unreachable categories.
    pub fn category_level(&self, category: &str) -> Option<u32> {
        self.index.get(category).and_then(|&i| self.levels[i])
    }

    pub fn contains(&self, category: &str) -> bool {
        self.index.contains_key(category)
    }

    /// Maximum level over the given categories; unknown or unreachable
    /// names are ignored and tallied.
    pub fn question_hierarchy<S: AsRef<str>>(
        &self,
        categories: &[S],
    ) -> Result<Hierarchy, TreeError> {
        if categories.is_empty() {
            return Err(TreeError::EmptyCategoryList);
        }
        let mut level: Option<u32> = None;
        let mut ignored = 0usize;
        for c in categories {
            match self.category_level(c.as_ref()) {
                Some(l) => level = Some(level.map_or(l, |cur| cur.max(l))),
                None => ignored += 1,
            }
        }
        Ok(Hierarchy { level, ignored })
    }

    /// All categories with their levels, sorted by name.
    pub fn levels_sorted(&self) -> Vec<(&str, Option<u32>)> {
        let mut rows: Vec<(&str, Option<u32>)> = self
            .names
            .iter()
            .map(|n| (n.as_str(), self.levels[self.index[n]]))
            .collect();
        rows.sort_by(|a, b| a.0.cmp(b.0));
        rows
    }

    /// Writes the `category,level` table (unreachable -> empty field).
    pub fn write_levels_csv(&self, writer: impl Write) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["category", "level"])?;
        for (name, level) in self.levels_sorted() {
            let level = level.map(|l| l.to_string()).unwrap_or_default();
            w.write_record([name, &level])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parses a `category,level` table written by [`Self::write_levels_csv`].
    pub fn read_levels_csv(reader: impl Read, root: &str) -> Result<Self, TreeError> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let mut pairs: Vec<(String, Option<u32>)> = Vec::new();
        for (i, record) in r.records().enumerate() {
            let record = record.map_err(|e| TreeError::InvalidLevels {
                reason: format!("row {}: {e}", i + 2),
            })?;
            if record.len() != 2 {
                return Err(TreeError::InvalidLevels {
                    reason: format!("row {}: expected 2 fields, got {}", i + 2, record.len()),
                });
            }
            let name = record[0].to_string();
            let level = if record[1].is_empty() {
                None
            } else {
                Some(record[1].parse::<u32>().map_err(|e| TreeError::InvalidLevels {
                    reason: format!("row {}: bad level {:?}: {e}", i + 2, &record[1]),
                })?)
            };
            pairs.push((name, level));
        }
        Self::from_levels(root, &pairs)
    }
}

/// Reads a `parent,child` edge list (UTF-8, `#` comments, blank lines
/// ignored) and builds the tree.
pub fn load_tree(
    path: impl AsRef<Path>,
    root: &str,
    rule: LevelRule,
) -> Result<(KnowledgeTree, TreeSummary), TreeError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| TreeError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut edges: Vec<(String, String)> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| TreeError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split(',');
        let parent = fields.next().map(str::trim).unwrap_or_default();
        let child = fields.next().map(str::trim).unwrap_or_default();
        if parent.is_empty() || child.is_empty() || fields.next().is_some() {
            return Err(TreeError::MalformedLine {
                path: path.display().to_string(),
                line: idx + 1,
                content: trimmed.to_string(),
            });
        }
        edges.push((parent.to_string(), child.to_string()));
    }
    KnowledgeTree::from_edges(&edges, root, rule)
}

/// Breadth-first distance from `root`; `None` for unreachable nodes.
fn bfs_levels(children: &[Vec<usize>], root: usize) -> Vec<Option<u32>> {
    let mut levels = vec![None; children.len()];
    levels[root] = Some(0);
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        let next = levels[u].unwrap() + 1;
        for &v in &children[u] {
            if levels[v].is_none() {
                levels[v] = Some(next);
                queue.push_back(v);
            }
        }
    }
    levels
}

/// Longest-path distance from `root` over the DAG; `None` if unreachable.
fn longest_levels(children: &[Vec<usize>], root: usize) -> Vec<Option<u32>> {
    let order = topological_order(children);
    let mut levels: Vec<Option<u32>> = vec![None; children.len()];
    levels[root] = Some(0);
    for &u in &order {
        let Some(du) = levels[u] else { continue };
        for &v in &children[u] {
            let candidate = du + 1;
            if levels[v].is_none_or(|dv| dv < candidate) {
                levels[v] = Some(candidate);
            }
        }
    }
    levels
}

/// Kahn's algorithm; assumes acyclicity was already checked.
fn topological_order(children: &[Vec<usize>]) -> Vec<usize> {
    let n = children.len();
    let mut indegree = vec![0usize; n];
    for adj in children {
        for &v in adj {
            indegree[v] += 1;
        }
    }
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for &v in &children[u] {
            indegree[v] -= 1;
            if indegree[v] == 0 {
                queue.push_back(v);
            }
        }
    }
    order
}

/// Iterative three-color DFS; returns one cycle as a node path
/// `[a, b, ..., a]` if any exists.
fn find_cycle(children: &[Vec<usize>]) -> Option<Vec<usize>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        White,
        Gray,
        Black,
    }
    let n = children.len();
    let mut color = vec![Color::White; n];
    let mut parent: Vec<Option<usize>> = vec![None; n];

    for start in 0..n {
        if color[start] != Color::White {
            continue;
        }
        // Stack holds (node, next child index to visit).
        let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
        color[start] = Color::Gray;
        while let Some(&mut (u, ref mut next)) = stack.last_mut() {
            if *next < children[u].len() {
                let v = children[u][*next];
                *next += 1;
                match color[v] {
                    Color::White => {
                        color[v] = Color::Gray;
                        parent[v] = Some(u);
                        stack.push((v, 0));
                    }
                    Color::Gray => {
                        let mut cycle = vec![v];
                        let mut cur = u;
                        while cur != v {
                            cycle.push(cur);
                            cur = parent[cur].expect("gray node has a parent on the stack");
                        }
                        cycle.push(v);
                        cycle.reverse();
                        return Some(cycle);
                    }
                    Color::Black => {}
                }
            } else {
                color[u] = Color::Black;
                stack.pop();
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn edges(list: &[(&str, &str)]) -> Vec<(String, String)> {
        list.iter()
            .map(|(p, c)| (p.to_string(), c.to_string()))
            .collect()
    }

    fn tree(list: &[(&str, &str)], root: &str) -> KnowledgeTree {
        KnowledgeTree::from_edges(&edges(list), root, LevelRule::Shortest)
            .unwrap()
            .0
    }

    #[test]
    fn root_children_are_level_one() {
        let t = tree(&[("root", "A"), ("root", "B")], "root");
        assert_eq!(t.category_level("root"), Some(0));
        assert_eq!(t.category_level("A"), Some(1));
        assert_eq!(t.category_level("B"), Some(1));
    }

    #[test]
    fn cycle_is_an_error() {
        let err =
            KnowledgeTree::from_edges(&edges(&[("A", "B"), ("B", "A")]), "A", LevelRule::Shortest)
                .unwrap_err();
        match err {
            TreeError::CycleDetected { cycle } => {
                assert_eq!(cycle.first(), cycle.last());
                assert!(cycle.len() >= 3);
            }
            other => panic!("expected cycle error, got {other:?}"),
        }
    }

    #[test]
    fn self_loop_is_rejected() {
        let err =
            KnowledgeTree::from_edges(&edges(&[("A", "A")]), "A", LevelRule::Shortest).unwrap_err();
        assert!(matches!(err, TreeError::SelfLoop { .. }));
    }

    #[test]
    fn multi_parent_node_takes_shortest_path() {
        // X has parents at levels 2 and 4; its level is 2 + 1 = 3.
        let t = tree(
            &[
                ("root", "p1"),
                ("p1", "p2"),
                ("root", "q1"),
                ("q1", "q2"),
                ("q2", "q3"),
                ("q3", "q4"),
                ("p2", "X"),
                ("q4", "X"),
            ],
            "root",
        );
        assert_eq!(t.category_level("p2"), Some(2));
        assert_eq!(t.category_level("q4"), Some(4));
        assert_eq!(t.category_level("X"), Some(3));
    }

    #[test]
    fn longest_rule_takes_longest_path() {
        let (t, _) = KnowledgeTree::from_edges(
            &edges(&[("root", "a"), ("a", "b"), ("root", "b")]),
            "root",
            LevelRule::Longest,
        )
        .unwrap();
        assert_eq!(t.category_level("b"), Some(2));
        let (t, _) = KnowledgeTree::from_edges(
            &edges(&[("root", "a"), ("a", "b"), ("root", "b")]),
            "root",
            LevelRule::Shortest,
        )
        .unwrap();
        assert_eq!(t.category_level("b"), Some(1));
    }

    #[test]
    fn unknown_category_level_is_absent() {
        let t = tree(&[("root", "A")], "root");
        assert_eq!(t.category_level("missing"), None);
    }

    #[test]
    fn duplicate_edges_deduped_with_warning() {
        let (t, summary) = KnowledgeTree::from_edges(
            &edges(&[("root", "A"), ("root", "A")]),
            "root",
            LevelRule::Shortest,
        )
        .unwrap();
        assert_eq!(summary.duplicate_edges, 1);
        assert_eq!(summary.edges, 1);
        assert_eq!(t.category_level("A"), Some(1));
    }

    #[test]
    fn unreachable_node_retained_without_level() {
        let (t, summary) = KnowledgeTree::from_edges(
            &edges(&[("root", "A"), ("B", "C")]),
            "root",
            LevelRule::Shortest,
        )
        .unwrap();
        assert!(t.contains("B"));
        assert_eq!(t.category_level("B"), None);
        assert_eq!(summary.unreachable, vec!["B".to_string(), "C".to_string()]);
    }

    #[test]
    fn missing_root_is_an_error() {
        let err = KnowledgeTree::from_edges(&edges(&[("A", "B")]), "root", LevelRule::Shortest)
            .unwrap_err();
        assert!(matches!(err, TreeError::RootMissing { .. }));
    }

    #[test]
    fn hierarchy_is_max_level() {
        let t = tree(
            &[
                ("root", "l1"),
                ("l1", "l2"),
                ("l2", "l3"),
                ("l3", "l4"),
                ("l4", "l5"),
            ],
            "root",
        );
        let h = t.question_hierarchy(&["l2", "l5", "l3"]).unwrap();
        assert_eq!(h.level, Some(5));
        assert_eq!(h.ignored, 0);
    }

    #[test]
    fn hierarchy_of_root_only_is_zero() {
        let t = tree(&[("root", "A")], "root");
        let h = t.question_hierarchy(&["root"]).unwrap();
        assert_eq!(h.level, Some(0));
    }

    #[test]
    fn hierarchy_ignores_unknown_categories() {
        let t = tree(
            &[("root", "a"), ("a", "b"), ("b", "c"), ("c", "d")],
            "root",
        );
        let h = t.question_hierarchy(&["d", "nope"]).unwrap();
        assert_eq!(h.level, Some(4));
        assert_eq!(h.ignored, 1);
    }

    #[test]
    fn hierarchy_of_empty_list_is_an_error() {
        let t = tree(&[("root", "A")], "root");
        let err = t.question_hierarchy::<&str>(&[]).unwrap_err();
        assert!(matches!(err, TreeError::EmptyCategoryList));
    }

    #[test]
    fn hierarchy_absent_when_nothing_resolves() {
        let t = tree(&[("root", "A")], "root");
        let h = t.question_hierarchy(&["x", "y"]).unwrap();
        assert_eq!(h.level, None);
        assert_eq!(h.ignored, 2);
    }

    #[test]
    fn load_tree_parses_comments_and_blanks() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        use std::io::Write as _;
        writeln!(f, "# taxonomy").unwrap();
        writeln!(f).unwrap();
        writeln!(f, "root,A").unwrap();
        writeln!(f, " root , B ").unwrap();
        let (t, _) = load_tree(f.path(), "root", LevelRule::Shortest).unwrap();
        assert_eq!(t.category_level("B"), Some(1));
    }

    #[test]
    fn malformed_edge_line_is_an_error() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        use std::io::Write as _;
        writeln!(f, "root,A,extra").unwrap();
        let err = load_tree(f.path(), "root", LevelRule::Shortest).unwrap_err();
        assert!(matches!(err, TreeError::MalformedLine { line: 1, .. }));
    }

    #[test]
    fn levels_csv_roundtrip() {
        let t = tree(&[("root", "A"), ("root", "B"), ("C", "D")], "root");
        let mut buf = Vec::new();
        t.write_levels_csv(&mut buf).unwrap();
        let back = KnowledgeTree::read_levels_csv(buf.as_slice(), "root").unwrap();
        for name in ["root", "A", "B", "C", "D"] {
            assert_eq!(back.category_level(name), t.category_level(name), "{name}");
        }
    }

    #[test]
    fn from_levels_requires_zero_level_root() {
        let err = KnowledgeTree::from_levels("root", &[("root", Some(1))]).unwrap_err();
        assert!(matches!(err, TreeError::InvalidLevels { .. }));
    }

    /// Shortest root-to-target distance by enumerating every simple path.
    fn brute_force_level(children: &[Vec<usize>], root: usize, target: usize) -> Option<u32> {
        fn walk(
            children: &[Vec<usize>],
            u: usize,
            target: usize,
            depth: u32,
            visited: &mut Vec<bool>,
            best: &mut Option<u32>,
        ) {
            if u == target {
                *best = Some(best.map_or(depth, |b: u32| b.min(depth)));
                return;
            }
            for &v in &children[u] {
                if !visited[v] {
                    visited[v] = true;
                    walk(children, v, target, depth + 1, visited, best);
                    visited[v] = false;
                }
            }
        }
        let mut visited = vec![false; children.len()];
        visited[root] = true;
        let mut best = None;
        walk(children, root, target, 0, &mut visited, &mut best);
        best
    }

    /// Random DAG as edges i -> j with i < j, so acyclicity holds by
    /// construction; node 0 is the root.
    fn arb_dag() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
        (2usize..=12).prop_flat_map(|n| {
            let pairs: Vec<(usize, usize)> = (0..n)
                .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                .collect();
            let len = pairs.len();
            (
                Just(n),
                proptest::collection::vec(proptest::bool::weighted(0.35), len).prop_map(
                    move |mask| {
                        pairs
                            .iter()
                            .zip(&mask)
                            .filter(|(_, &keep)| keep)
                            .map(|(&e, _)| e)
                            .collect::<Vec<_>>()
                    },
                ),
            )
        })
    }

    fn named_edges(edges: &[(usize, usize)]) -> Vec<(String, String)> {
        edges
            .iter()
            .map(|&(p, c)| (format!("n{p}"), format!("n{c}")))
            .collect()
    }

    fn adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
        let mut children = vec![Vec::new(); n];
        for &(p, c) in edges {
            children[p].push(c);
        }
        children
    }

    proptest! {
        #[test]
        fn bfs_matches_all_paths_oracle((n, dag) in arb_dag()) {
            prop_assume!(dag.iter().any(|&(p, _)| p == 0));
            let named = named_edges(&dag);
            let (t, _) = KnowledgeTree::from_edges(&named, "n0", LevelRule::Shortest).unwrap();
            let children = adjacency(n, &dag);
            for v in 0..n {
                let expected = brute_force_level(&children, 0, v);
                prop_assert_eq!(t.category_level(&format!("n{v}")), expected, "node {}", v);
            }
        }

        #[test]
        fn adding_an_edge_never_raises_levels((n, dag) in arb_dag(), extra in (0usize..64, 0usize..64)) {
            prop_assume!(dag.iter().any(|&(p, _)| p == 0));
            if n < 2 {
                return Ok(());
            }
            let p = extra.0 % (n - 1);
            let c = p + 1 + extra.1 % (n - p - 1);
            if dag.contains(&(p, c)) {
                return Ok(());
            }

            let named = named_edges(&dag);
            let (before, _) = KnowledgeTree::from_edges(&named, "n0", LevelRule::Shortest).unwrap();
            let mut extended = dag.clone();
            extended.push((p, c));
            let (after, _) =
                KnowledgeTree::from_edges(&named_edges(&extended), "n0", LevelRule::Shortest).unwrap();

            for v in 0..n {
                let name = format!("n{v}");
                match (before.category_level(&name), after.category_level(&name)) {
                    (Some(b), Some(a)) => prop_assert!(a <= b),
                    (Some(_), None) => prop_assert!(false, "node {} became unreachable", v),
                    _ => {}
                }
            }
        }

        #[test]
        fn reachable_levels_bounded_by_node_count((n, dag) in arb_dag()) {
            prop_assume!(dag.iter().any(|&(p, _)| p == 0));
            let (t, _) = KnowledgeTree::from_edges(&named_edges(&dag), "n0", LevelRule::Shortest).unwrap();
            for v in 0..n {
                if let Some(l) = t.category_level(&format!("n{v}")) {
                    prop_assert!((l as usize) < n);
                }
            }
        }

        #[test]
        fn hierarchy_permutation_invariant(perm in proptest::sample::subsequence(vec!["a","b","c","d","nope"], 1..5)) {
            let t = tree(&[("root", "a"), ("a", "b"), ("b", "c"), ("c", "d")], "root");
            let forward = t.question_hierarchy(&perm).unwrap();
            let mut reversed = perm.clone();
            reversed.reverse();
            let backward = t.question_hierarchy(&reversed).unwrap();
            prop_assert_eq!(forward, backward);
        }
    }
}
