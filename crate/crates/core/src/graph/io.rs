use std::fs;
use std::path::Path;

use super::Graph;
use crate::error::{Error, Result};

/// `n k` header, then one `u v` line per undirected edge with `u < v`, ascending.
pub fn format_edge_list(g: &Graph) -> String {
    let mut out = format!("{} {}\n", g.n(), g.k());
    for (u, v) in g.edges() {
        out.push_str(&format!("{u} {v}\n"));
    }
    out
}

pub fn write_edge_list(g: &Graph, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_edge_list(g))?;
    Ok(())
}

pub fn read_edge_list(path: impl AsRef<Path>) -> Result<Graph> {
    parse_edge_list(&fs::read_to_string(path)?)
}

pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let perr = |line: usize, message: String| Error::Parse { line, message };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or_else(|| perr(1, "empty file".into()))?;
    let nums = parse_pair(header).map_err(|m| perr(hline + 1, m))?;
    let (n, k) = nums;
    if n == 0 || k < 2 {
        return Err(perr(hline + 1, format!("invalid header n={n} k={k}")));
    }
    let mut lists: Vec<Vec<usize>> = vec![Vec::with_capacity(k); n];
    let mut edges = 0usize;
    for (i, line) in lines {
        let (u, v) = parse_pair(line).map_err(|m| perr(i + 1, m))?;
        if u >= n || v >= n {
            return Err(perr(i + 1, format!("vertex out of range in edge {u} {v}")));
        }
        if u >= v {
            return Err(perr(i + 1, format!("edge {u} {v} must satisfy u < v")));
        }
        lists[u].push(v);
        lists[v].push(u);
        edges += 1;
    }
    if let Some((v, row)) = lists.iter().enumerate().find(|(_, r)| r.len() != k) {
        return Err(perr(0, format!("vertex {v} has degree {} but header declares k={k}", row.len())));
    }
    debug_assert_eq!(edges * 2, n * k);
    Graph::from_neighbor_lists(lists).map_err(|e| perr(0, e.to_string()))
}

fn parse_pair(line: &str) -> std::result::Result<(usize, usize), String> {
    let mut it = line.split_whitespace();
    let mut next = || -> std::result::Result<usize, String> {
        let tok = it.next().ok_or_else(|| format!("expected two integers in `{line}`"))?;
        tok.parse().map_err(|_| format!("not an integer: `{tok}`"))
    };
    let pair = (next()?, next()?);
    if it.next().is_some() {
        return Err(format!("trailing tokens in `{line}`"));
    }
    Ok(pair)
}
