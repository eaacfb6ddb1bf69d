//! Per-time network statistics and the largest common connected component.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph_gen::BitMatrix;

/// Summary statistics of one (possibly directed) graph in a series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkSummary {
    /// `1ᵀA1 / (n(n-1))`.
    pub edge_density: f64,
    /// Mean directed shortest-path length over ordered pairs; `None` when the
    /// graph is not strongly connected.
    pub avg_path_length: Option<f64>,
    /// `1ᵀ(Aᵀ∘A)1 / 1ᵀA1`; `None` for an empty graph.
    pub reciprocity: Option<f64>,
    /// `‖A_t − A_{t−1}‖_F`, zero for the first graph.
    pub frobenius_step: f64,
}

fn check_series(series: &[BitMatrix]) -> Result<usize> {
    let n = series.first().map_or(0, BitMatrix::n);
    for g in series {
        if g.n() != n {
            return Err(Error::DimensionMismatch { expected: n, found: g.n() });
        }
        if !g.has_zero_diagonal() {
            return Err(Error::InvalidInput("adjacency matrices must have a zero diagonal".into()));
        }
    }
    Ok(n)
}

/// Mean shortest directed path length, or `None` if some vertex cannot reach another.
pub fn average_path_length(g: &BitMatrix) -> Option<f64> {
    let n = g.n();
    if n < 2 {
        return None;
    }
    let words = n.div_ceil(64);
    let mut total = 0u64;
    for s in 0..n {
        let mut visited = vec![0u64; words];
        visited[s / 64] |= 1 << (s % 64);
        let mut frontier = vec![s];
        let mut reached = 1usize;
        let mut depth = 0u64;
        while !frontier.is_empty() {
            depth += 1;
            let mut next_bits = vec![0u64; words];
            for &u in &frontier {
                for (nb, w) in next_bits.iter_mut().zip(g.row_words(u)) {
                    *nb |= w;
                }
            }
            let mut next = Vec::new();
            for (w, (nb, vis)) in next_bits.iter_mut().zip(visited.iter_mut()).enumerate() {
                let mut fresh = *nb & !*vis;
                *vis |= fresh;
                while fresh != 0 {
                    next.push(w * 64 + fresh.trailing_zeros() as usize);
                    fresh &= fresh - 1;
                }
            }
            reached += next.len();
            total += depth * next.len() as u64;
            frontier = next;
        }
        if reached < n {
            return None;
        }
    }
    Some(total as f64 / (n * (n - 1)) as f64)
}

/// Density, path length, reciprocity and control-chart step of each graph.
pub fn network_summaries(series: &[BitMatrix]) -> Result<Vec<NetworkSummary>> {
    let n = check_series(series)?;
    let pairs = (n * n.saturating_sub(1)) as f64;
    let mut out = Vec::with_capacity(series.len());
    for (t, g) in series.iter().enumerate() {
        let ones = g.count_ones();
        let mutual = g.and_count(&g.transpose());
        out.push(NetworkSummary {
            edge_density: if pairs > 0.0 { ones as f64 / pairs } else { 0.0 },
            avg_path_length: average_path_length(g),
            reciprocity: if ones > 0 { Some(mutual as f64 / ones as f64) } else { None },
            frobenius_step: if t == 0 { 0.0 } else { libm::sqrt(g.xor_count(&series[t - 1]) as f64) },
        });
    }
    Ok(out)
}

/// Control chart: `‖A_t − A_{t−1}‖_F` for `t = 1..m`.
pub fn control_chart(series: &[BitMatrix]) -> Result<Vec<f64>> {
    check_series(series)?;
    Ok(series.windows(2).map(|w| libm::sqrt(w[1].xor_count(&w[0]) as f64)).collect())
}

// Weakly connected components of `g` restricted to `part`, each sorted.
fn split_part(g: &BitMatrix, part: &[usize], label: &mut [usize]) -> Vec<Vec<usize>> {
    const NONE: usize = usize::MAX;
    for &v in part {
        label[v] = NONE - 1;
    }
    let mut components = Vec::new();
    for &start in part {
        if label[start] != NONE - 1 {
            continue;
        }
        let id = components.len();
        label[start] = id;
        let mut comp = vec![start];
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for &v in part {
                if label[v] == NONE - 1 && (g.get(u, v) || g.get(v, u)) {
                    label[v] = id;
                    comp.push(v);
                    stack.push(v);
                }
            }
        }
        comp.sort_unstable();
        components.push(comp);
    }
    for &v in part {
        label[v] = NONE;
    }
    components
}

/// The largest vertex set that induces a (weakly) connected subgraph in every
/// graph, with the series restricted to it.
///
/// Parts of the vertex set are split along the components of every graph
/// until nothing changes. Any set connected in all graphs stays inside one
/// part, and every final part is connected in all graphs, so the largest part
/// is the exact answer. Sets of fewer than two vertices count as empty; ties
/// go to the part with the smallest vertex.
pub fn largest_common_component(series: &[BitMatrix]) -> Result<(Vec<usize>, Vec<BitMatrix>)> {
    let n = check_series(series)?;
    if series.is_empty() || n < 2 {
        return Ok((Vec::new(), Vec::new()));
    }
    let mut parts: Vec<Vec<usize>> = vec![(0..n).collect()];
    let mut label = vec![usize::MAX; n];
    loop {
        let mut changed = false;
        for g in series {
            let mut next = Vec::with_capacity(parts.len());
            for part in &parts {
                if part.len() < 2 {
                    continue;
                }
                let comps = split_part(g, part, &mut label);
                if comps.len() > 1 {
                    changed = true;
                }
                next.extend(comps.into_iter().filter(|c| c.len() >= 2));
            }
            if next.len() != parts.len() {
                changed = true;
            }
            parts = next;
        }
        if !changed {
            break;
        }
    }
    let best = parts.into_iter().fold(Vec::<usize>::new(), |best, p| {
        if p.len() > best.len() || (p.len() == best.len() && !p.is_empty() && p[0] < best[0]) {
            p
        } else {
            best
        }
    });
    let restricted = if best.is_empty() { Vec::new() } else { series.iter().map(|g| g.induced(&best)).collect() };
    Ok((best, restricted))
}
