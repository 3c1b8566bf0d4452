use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::io::atomic_write;

/// Parse whitespace-separated label pairs. Lines that are blank or start
/// with `#` are skipped; ids follow first appearance; duplicate and reversed
/// pairs collapse; self-loops are kept.
pub fn parse_edge_list(text: &str, origin: &Path) -> Result<SparseGraph> {
    let mut ids: HashMap<&str, usize> = HashMap::new();
    let mut labels: Vec<String> = Vec::new();
    let mut edges = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(Error::Parse {
                path: origin.to_path_buf(),
                line: ln + 1,
                reason: format!("expected 2 labels, found {}", tokens.len()),
            });
        }
        let mut id = |t| -> usize {
            *ids.entry(t).or_insert_with(|| {
                labels.push(t.to_string());
                labels.len() - 1
            })
        };
        let (a, b) = (id(tokens[0]), id(tokens[1]));
        edges.push((a, b));
    }
    SparseGraph::new(labels.len(), edges)?.with_labels(labels)
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<SparseGraph> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text, path)
}

/// One line per edge, using labels when the graph has them.
pub fn save_edge_list(graph: &SparseGraph, path: impl AsRef<Path>) -> Result<()> {
    let mut s = String::new();
    for &(i, j) in graph.edges() {
        let _ = writeln!(s, "{} {}", graph.label(i), graph.label(j));
    }
    atomic_write(path.as_ref(), s.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<SparseGraph> {
        parse_edge_list(s, Path::new("test"))
    }

    #[test]
    fn undirected_duplicates_collapse() {
        let g = parse("a b\nb a\n").unwrap();
        assert_eq!((g.n_nodes(), g.n_edges()), (2, 1));
        assert_eq!(g.labels().unwrap(), ["a", "b"]);
    }

    #[test]
    fn comments_skipped_and_self_loops_kept() {
        let g = parse("# comment\na a\n").unwrap();
        assert_eq!((g.n_nodes(), g.n_edges(), g.n_self_loops()), (1, 1, 1));
    }

    #[test]
    fn malformed_line_reports_its_number() {
        match parse("a b\n\nc d e\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert_eq!(parse("").unwrap().n_nodes(), 0);
    }

    #[test]
    fn permuted_lines_give_the_same_labelled_graph() {
        let a = parse("x y\ny z\nz w\n").unwrap();
        let b = parse("z w\nx y\ny z\n").unwrap();
        let named = |g: &SparseGraph| {
            let mut e: Vec<(String, String)> = g
                .edges()
                .iter()
                .map(|&(i, j)| {
                    let (u, v) = (g.label(i), g.label(j));
                    if u <= v {
                        (u, v)
                    } else {
                        (v, u)
                    }
                })
                .collect();
            e.sort();
            e
        };
        assert_eq!(named(&a), named(&b));
    }

    #[test]
    fn save_then_load_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.txt");
        let g = parse("a b\nb c\nc c\n").unwrap();
        save_edge_list(&g, &p).unwrap();
        assert_eq!(load_edge_list(&p).unwrap(), g);
    }
}
