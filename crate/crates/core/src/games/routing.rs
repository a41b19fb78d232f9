use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{CongestionGame, Facility, TypeActions};
use crate::error::{Error, Result};

pub const DEFAULT_PATH_CAP: usize = 10_000;

/// A directed edge; edges become the game's facilities, in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub name: String,
    pub from: String,
    pub to: String,
    pub loss: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Terminals {
    pub type_name: String,
    pub source: String,
    pub dest: String,
}

/// Builds a routing game whose action set for each type is every simple
/// directed path between its terminals. Paths are listed in depth-first
/// order following the edge list.
pub fn make_routing_game(
    n: usize,
    edges: Vec<Edge>,
    terminals: &[Terminals],
    path_cap: usize,
) -> Result<CongestionGame> {
    let mut out: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, e) in edges.iter().enumerate() {
        out.entry(e.from.as_str()).or_default().push(i);
    }
    let mut types = Vec::with_capacity(terminals.len());
    for t in terminals {
        let mut paths = Vec::new();
        let mut visited = vec![t.source.as_str()];
        let mut path = Vec::new();
        dfs(&edges, &out, &t.source, &t.dest, &mut visited, &mut path, &mut paths, path_cap)?;
        if paths.is_empty() {
            return Err(Error::validation(format!(
                "type {:?}: no path from {:?} to {:?}",
                t.type_name, t.source, t.dest
            )));
        }
        types.push(TypeActions { name: t.type_name.clone(), actions: paths });
    }
    let facilities = edges.into_iter().map(|e| Facility { name: e.name, loss: e.loss }).collect();
    CongestionGame::new(n, facilities, types)
}

#[allow(clippy::too_many_arguments)]
fn dfs<'a>(
    edges: &'a [Edge],
    out: &HashMap<&'a str, Vec<usize>>,
    at: &str,
    dest: &str,
    visited: &mut Vec<&'a str>,
    path: &mut Vec<usize>,
    paths: &mut Vec<Vec<usize>>,
    cap: usize,
) -> Result<()> {
    if at == dest {
        if paths.len() == cap {
            return Err(Error::CapExceeded(format!("more than {cap} simple paths to {dest:?}")));
        }
        paths.push(path.clone());
        return Ok(());
    }
    let Some(next) = out.get(at) else { return Ok(()) };
    for &i in next {
        let to = edges[i].to.as_str();
        if visited.contains(&to) {
            continue;
        }
        visited.push(to);
        path.push(i);
        dfs(edges, out, to, dest, visited, path, paths, cap)?;
        path.pop();
        visited.pop();
    }
    Ok(())
}
