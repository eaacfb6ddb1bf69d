//! Text and binary file formats.
//!
//! Floats are written with 17 significant digits (`{:.16e}`), so every value
//! reads back bit-for-bit. All writers go through [`write_atomic`].

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use lppmirror_core::localizer::PiecewiseLinearFit;
use lppmirror_core::summaries::NetworkSummary;
use lppmirror_core::{
    AdjacencyTimeSeries, BitMatrix, DissimilarityKind, DissimilarityMatrix, IsoMirror, LatentTrajectorySet, Matrix,
    MirrorEmbedding,
};

use crate::error::{Error, Result};

/// Round-trip float formatting.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(contents).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_f64(path: &Path, line: usize, s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::parse(path, line, format!("bad number `{s}`")))
}

fn parse_usize(path: &Path, line: usize, s: &str) -> Result<usize> {
    s.trim().parse::<usize>().map_err(|_| Error::parse(path, line, format!("bad index `{s}`")))
}

/// Name of the edge list for time index `i`.
pub fn snapshot_name(i: usize) -> String {
    format!("snapshot_{i}.edges")
}

/// `# n = N` / `# directed = BOOL` header, then one `u v` pair per line.
pub fn edge_list_text(g: &BitMatrix, directed: bool) -> String {
    let mut s = format!("# n = {}\n# directed = {directed}\n", g.n());
    for (u, v) in g.edges(directed) {
        let _ = writeln!(s, "{u} {v}");
    }
    s
}

pub fn write_edge_list(path: &Path, g: &BitMatrix, directed: bool) -> Result<()> {
    write_atomic(path, edge_list_text(g, directed).as_bytes())
}

/// Reads an edge list, returning the matrix and its directedness.
pub fn read_edge_list(path: &Path) -> Result<(BitMatrix, bool)> {
    let text = read_text(path)?;
    let mut n = None;
    let mut directed = false;
    let mut edges = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let no = no + 1;
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('#') {
            if let Some((key, value)) = header.split_once('=') {
                match key.trim() {
                    "n" => n = Some(parse_usize(path, no, value)?),
                    "directed" => {
                        directed = value
                            .trim()
                            .parse::<bool>()
                            .map_err(|_| Error::parse(path, no, "directed must be true or false"))?
                    }
                    _ => {}
                }
            }
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(u), Some(v), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::parse(path, no, "expected `u v`"));
        };
        let (u, v) = (parse_usize(path, no, u)?, parse_usize(path, no, v)?);
        if u == v {
            return Err(Error::parse(path, no, "self-loop"));
        }
        edges.push((u, v));
    }
    let n = n.ok_or_else(|| Error::parse(path, 1, "missing `# n = ...` header"))?;
    let g = BitMatrix::from_edges(n, &edges, directed).map_err(|e| Error::parse(path, 0, e.to_string()))?;
    Ok((g, directed))
}

pub fn times_csv_text(times: &[f64]) -> String {
    let mut s = String::from("index,time\n");
    for (i, t) in times.iter().enumerate() {
        let _ = writeln!(s, "{i},{}", fmt_f64(*t));
    }
    s
}

pub fn read_times_csv(path: &Path) -> Result<Vec<f64>> {
    let text = read_text(path)?;
    let mut times = Vec::new();
    for (no, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let (i, t) = line.split_once(',').ok_or_else(|| Error::parse(path, no + 1, "expected `index,time`"))?;
        if parse_usize(path, no + 1, i)? != times.len() {
            return Err(Error::parse(path, no + 1, "indices must run 0, 1, 2, ..."));
        }
        times.push(parse_f64(path, no + 1, t)?);
    }
    Ok(times)
}

/// Writes `snapshot_<i>.edges` for every time plus `times.csv`; returns the paths.
pub fn write_tsg_dir(dir: &Path, tsg: &AdjacencyTimeSeries, directed: bool) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (i, g) in tsg.graphs.iter().enumerate() {
        let path = dir.join(snapshot_name(i));
        write_edge_list(&path, g, directed)?;
        written.push(path);
    }
    let path = dir.join("times.csv");
    write_atomic(&path, times_csv_text(&tsg.times).as_bytes())?;
    written.push(path);
    Ok(written)
}

/// Reads a directory written by [`write_tsg_dir`]; `true` if any snapshot is directed.
pub fn read_tsg_dir(dir: &Path) -> Result<(AdjacencyTimeSeries, bool)> {
    let times = read_times_csv(&dir.join("times.csv"))?;
    let mut graphs = Vec::with_capacity(times.len());
    let mut directed = false;
    for i in 0..times.len() {
        let (g, d) = read_edge_list(&dir.join(snapshot_name(i)))?;
        directed |= d;
        graphs.push(g);
    }
    let tsg = AdjacencyTimeSeries::new(times, graphs)
        .map_err(|e| Error::parse(&dir.join("times.csv"), 0, format!("misaligned snapshots: {e}")))?;
    Ok((tsg, directed))
}

/// `vertex,t_0,...` header with the sampled times, then one row per vertex.
pub fn latent_csv_text(latents: &LatentTrajectorySet) -> String {
    let mut s = String::from("vertex");
    for t in &latents.times {
        let _ = write!(s, ",{}", fmt_f64(*t));
    }
    s.push('\n');
    for j in 0..latents.n {
        let _ = write!(s, "{j}");
        for x in latents.positions.row(j) {
            let _ = write!(s, ",{}", fmt_f64(*x));
        }
        s.push('\n');
    }
    s
}

pub fn read_latent_csv(path: &Path) -> Result<LatentTrajectorySet> {
    let text = read_text(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::parse(path, 1, "empty file"))?;
    let times =
        header.split(',').skip(1).map(|t| parse_f64(path, 1, t)).collect::<Result<Vec<_>>>()?;
    let mut data = Vec::new();
    let mut rows = 0;
    for (no, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let vals = line.split(',').skip(1).map(|v| parse_f64(path, no + 2, v)).collect::<Result<Vec<_>>>()?;
        if vals.len() != times.len() {
            return Err(Error::parse(path, no + 2, "row length differs from header"));
        }
        data.extend(vals);
        rows += 1;
    }
    let positions = Matrix::from_row_major(rows, times.len(), data)?;
    Ok(LatentTrajectorySet::new(times, positions)?)
}

const SNAPSHOT_MAGIC: &[u8; 8] = b"LPPTSG01";

/// Binary snapshot: magic, `n` and `m` as little-endian `u64`, the `m` times
/// as little-endian `f64`, then per graph the strict upper triangle in
/// row-major order packed eight entries per byte, least significant bit first.
pub fn snapshot_bytes(tsg: &AdjacencyTimeSeries) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(SNAPSHOT_MAGIC);
    out.extend_from_slice(&(tsg.n as u64).to_le_bytes());
    out.extend_from_slice(&(tsg.m() as u64).to_le_bytes());
    for t in &tsg.times {
        out.extend_from_slice(&t.to_le_bytes());
    }
    for g in &tsg.graphs {
        let mut byte = 0u8;
        let mut filled = 0;
        for i in 0..tsg.n {
            for j in (i + 1)..tsg.n {
                if g.get(i, j) {
                    byte |= 1 << filled;
                }
                filled += 1;
                if filled == 8 {
                    out.push(byte);
                    byte = 0;
                    filled = 0;
                }
            }
        }
        if filled > 0 {
            out.push(byte);
        }
    }
    out
}

pub fn read_snapshot(path: &Path) -> Result<AdjacencyTimeSeries> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_snapshot(&bytes).map_err(|m| Error::parse(path, 0, m))
}

fn parse_snapshot(bytes: &[u8]) -> std::result::Result<AdjacencyTimeSeries, String> {
    let take = |at: usize, len: usize| bytes.get(at..at + len).ok_or_else(|| "truncated snapshot".to_string());
    if take(0, 8)? != SNAPSHOT_MAGIC {
        return Err("not an lppmirror snapshot".into());
    }
    let word = |at: usize| -> std::result::Result<u64, String> {
        Ok(u64::from_le_bytes(take(at, 8)?.try_into().expect("8 bytes")))
    };
    let n = word(8)? as usize;
    let m = word(16)? as usize;
    let mut at = 24;
    let mut times = Vec::with_capacity(m);
    for _ in 0..m {
        times.push(f64::from_bits(word(at)?));
        at += 8;
    }
    let pairs = n * n.saturating_sub(1) / 2;
    let per_graph = pairs.div_ceil(8);
    let mut graphs = Vec::with_capacity(m);
    for _ in 0..m {
        let chunk = take(at, per_graph)?;
        at += per_graph;
        let mut g = BitMatrix::new(n);
        let mut k = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                if chunk[k / 8] >> (k % 8) & 1 == 1 {
                    g.set(i, j, true);
                    g.set(j, i, true);
                }
                k += 1;
            }
        }
        graphs.push(g);
    }
    if at != bytes.len() {
        return Err("trailing bytes after snapshot".into());
    }
    AdjacencyTimeSeries::new(times, graphs).map_err(|e| e.to_string())
}

/// `m` header-less rows of `m` comma-separated values.
pub fn dissimilarity_csv_text(d: &DissimilarityMatrix) -> String {
    matrix_csv(&d.values)
}

fn matrix_csv(m: &Matrix) -> String {
    let mut s = String::new();
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| fmt_f64(*v)).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn read_dissimilarity_csv(path: &Path, kind: DissimilarityKind) -> Result<DissimilarityMatrix> {
    let text = read_text(path)?;
    let mut data = Vec::new();
    let mut rows = 0;
    for (no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        for v in line.split(',') {
            data.push(parse_f64(path, no + 1, v)?);
        }
        rows += 1;
    }
    if data.len() != rows * rows {
        return Err(Error::parse(path, rows, "dissimilarity matrix must be square"));
    }
    Ok(DissimilarityMatrix::new(Matrix::from_row_major(rows, rows, data)?, kind)?)
}

/// `time,psi_1,...,psi_c` header, one row per time.
pub fn mirror_csv_text(times: &[f64], me: &MirrorEmbedding) -> String {
    let mut s = String::from("time");
    for k in 1..=me.kept {
        let _ = write!(s, ",psi_{k}");
    }
    s.push('\n');
    for (i, t) in times.iter().enumerate() {
        s.push_str(&fmt_f64(*t));
        for v in me.coords.row(i) {
            let _ = write!(s, ",{}", fmt_f64(*v));
        }
        s.push('\n');
    }
    s
}

/// `index,eigenvalue`, decreasing.
pub fn spectrum_csv_text(me: &MirrorEmbedding) -> String {
    let mut s = String::from("index,eigenvalue\n");
    for (i, v) in me.spectrum.iter().enumerate() {
        let _ = writeln!(s, "{},{}", i + 1, fmt_f64(*v));
    }
    s
}

/// Comment header with `k_used` and the neighbor rule, then `time,value`.
pub fn iso_csv_text(times: &[f64], iso: &IsoMirror) -> String {
    let k = iso.k_used.map_or_else(|| "none".to_string(), |k| k.to_string());
    let mut s = format!("# k_used = {k}\n# knn = union\ntime,value\n");
    for (t, v) in times.iter().zip(&iso.values) {
        let _ = writeln!(s, "{},{}", fmt_f64(*t), fmt_f64(*v));
    }
    s
}

/// Flat `key = value` block.
pub fn fit_block_text(fit: &PiecewiseLinearFit, statistic: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "t_hat = {}", fmt_f64(fit.t_hat));
    let _ = writeln!(s, "t_hat_index = {}", fit.t_hat_index);
    let _ = writeln!(s, "alpha = {}", fmt_f64(fit.alpha));
    let _ = writeln!(s, "beta_left = {}", fmt_f64(fit.beta_left));
    let _ = writeln!(s, "beta_right = {}", fmt_f64(fit.beta_right));
    let _ = writeln!(s, "objective = {}", fmt_f64(fit.objective));
    let _ = writeln!(s, "slope_change = {}", fmt_f64(statistic));
    let _ = writeln!(s, "tied_knots = {}", fit.tied_knots);
    s
}

pub const FIT_CSV_HEADER: &str = "t_hat,alpha,beta_left,beta_right,objective";

pub fn fit_csv_row(fit: &PiecewiseLinearFit) -> String {
    [fit.t_hat, fit.alpha, fit.beta_left, fit.beta_right, fit.objective].map(fmt_f64).join(",")
}

pub fn fit_csv_text(fit: &PiecewiseLinearFit) -> String {
    format!("{FIT_CSV_HEADER}\n{}\n", fit_csv_row(fit))
}

/// Parses a `key = value` block into pairs, in order.
pub fn parse_key_values(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

pub fn summaries_csv_text(times: &[f64], rows: &[NetworkSummary]) -> String {
    let mut s = String::from("time,edge_density,avg_path_length,reciprocity,frobenius_step\n");
    for (t, r) in times.iter().zip(rows) {
        let apl = r.avg_path_length.map_or_else(|| "disconnected".to_string(), fmt_f64);
        let rec = r.reciprocity.map_or_else(|| "undefined".to_string(), fmt_f64);
        let _ = writeln!(s, "{},{},{apl},{rec},{}", fmt_f64(*t), fmt_f64(r.edge_density), fmt_f64(r.frobenius_step));
    }
    s
}

/// `time,frobenius_step` for `t = 1..m`.
pub fn control_chart_csv_text(times: &[f64], steps: &[f64]) -> String {
    let mut s = String::from("time,frobenius_step\n");
    for (t, v) in times.iter().skip(1).zip(steps) {
        let _ = writeln!(s, "{},{}", fmt_f64(*t), fmt_f64(*v));
    }
    s
}
