//! Monte Carlo localization experiments and bootstrap detection.
//!
//! Replicate `r` of a run with master seed `s` draws its walk from
//! `derive_seed(s, TAG_REPLICATE, r, 0)` and its graphs from
//! `derive_seed(s, TAG_REPLICATE, r, 1)`. Replicates run in parallel on the
//! rayon pool and are aggregated in index order, so results do not depend on
//! the thread count.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use lppmirror_core::linalg::pairwise_sum;
use lppmirror_core::localizer::detection_statistic;
use lppmirror_core::pipeline::{localize_signals, simulate, Signal};
use lppmirror_core::rng::{derive_seed, TAG_REPLICATE};
use lppmirror_core::WalkConfig;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::formats::fmt_f64;

/// Largest tolerated fraction of failed replicates in a localization run.
pub const MC_FAILURE_LIMIT: f64 = 0.01;
/// Largest tolerated fraction of failed replicates in a bootstrap null.
pub const BOOTSTRAP_FAILURE_LIMIT: f64 = 0.05;

/// One simulated setting: walk, graph size and ASE dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSetting {
    pub walk: WalkConfig,
    pub n: usize,
    pub ase_dim: usize,
}

impl McSetting {
    pub fn new(walk: WalkConfig, n: usize) -> Self {
        Self { walk, n, ase_dim: 1 }
    }

    fn describe(&self) -> String {
        let w = &self.walk;
        format!(
            "m={};c={};delta={};p={};q={};t_star={};n={};ase_dim={}",
            w.m,
            fmt_f64(w.c),
            fmt_f64(w.delta),
            fmt_f64(w.p),
            fmt_f64(w.q),
            fmt_f64(w.t_star_frac),
            self.n,
            self.ase_dim
        )
    }
}

/// Hex SHA-256 of a run description.
pub fn digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Mean squared localization error with its normal-approximation interval.
#[derive(Debug, Clone, PartialEq)]
pub struct McReport {
    pub label: String,
    pub n: usize,
    pub m: usize,
    pub mse: f64,
    pub std: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub replicates: usize,
    pub failures: usize,
    /// Fraction of replicates in which every knot tied.
    pub exact_tie_fraction: f64,
    pub config_digest: String,
    /// `(t_hat - t_star)^2` per successful replicate, in replicate order.
    pub squared_errors: Vec<f64>,
}

impl McReport {
    /// Aggregates squared errors by pairwise summation in the given order.
    pub fn from_squared_errors(label: &str, n: usize, m: usize, squared_errors: Vec<f64>) -> Self {
        let r = squared_errors.len();
        let mse = pairwise_sum(&squared_errors) / r as f64;
        let dev: Vec<f64> = squared_errors.iter().map(|x| (x - mse) * (x - mse)).collect();
        let std = if r > 1 { (pairwise_sum(&dev) / (r - 1) as f64).sqrt() } else { 0.0 };
        let half = 1.96 * std / (r as f64).sqrt();
        Self {
            label: label.to_string(),
            n,
            m,
            mse,
            std,
            ci_low: mse - half,
            ci_high: mse + half,
            replicates: r,
            failures: 0,
            exact_tie_fraction: 0.0,
            config_digest: String::new(),
            squared_errors,
        }
    }
}

pub const REPORT_CSV_HEADER: &str =
    "label,n,m,replicates,failures,mse,std,ci_low,ci_high,exact_tie_fraction,config_digest";

pub fn report_csv_row(r: &McReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        r.label,
        r.n,
        r.m,
        r.replicates,
        r.failures,
        fmt_f64(r.mse),
        fmt_f64(r.std),
        fmt_f64(r.ci_low),
        fmt_f64(r.ci_high),
        fmt_f64(r.exact_tie_fraction),
        r.config_digest
    )
}

pub fn report_csv_text(reports: &[McReport]) -> String {
    let mut s = format!("{REPORT_CSV_HEADER}\n");
    for r in reports {
        s.push_str(&report_csv_row(r));
        s.push('\n');
    }
    s
}

/// Per-replicate outcome: `(t_hat, tied_knots)` per signal, or the failure.
pub type Outcome = std::result::Result<Vec<(f64, usize)>, String>;

/// Seeds of replicate `r`: `(walk, graphs)`.
pub fn replicate_seeds(master: u64, r: usize) -> (u64, u64) {
    (derive_seed(master, TAG_REPLICATE, r as u64, 0), derive_seed(master, TAG_REPLICATE, r as u64, 1))
}

/// Simulates replicate `r` and localizes every signal on the shared graphs.
pub fn run_replicate(setting: &McSetting, signals: &[Signal], master: u64, r: usize) -> Outcome {
    let (walk_seed, graph_seed) = replicate_seeds(master, r);
    let tsg = simulate(&setting.walk.with_seed(walk_seed), setting.n, graph_seed).map_err(|e| e.to_string())?;
    let fits = localize_signals(&tsg, signals, setting.ase_dim).map_err(|e| e.to_string())?;
    Ok(fits.iter().map(|f| (f.t_hat, f.tied_knots)).collect())
}

fn run_range(setting: &McSetting, signals: &[Signal], master: u64, range: std::ops::Range<usize>) -> Vec<Outcome> {
    range.into_par_iter().map(|r| run_replicate(setting, signals, master, r)).collect()
}

fn run_digest(setting: &McSetting, signals: &[Signal], replicates: usize, seed: u64) -> String {
    let labels: Vec<String> = signals.iter().map(Signal::label).collect();
    digest(&format!("{};signals={};replicates={replicates};seed={seed}", setting.describe(), labels.join("+")))
}

fn check_failures(outcomes: &[Outcome], limit: f64) -> Result<usize> {
    let failed: Vec<&String> = outcomes.iter().filter_map(|o| o.as_ref().err()).collect();
    if failed.len() as f64 > limit * outcomes.len() as f64 {
        return Err(Error::TooManyFailures {
            failed: failed.len(),
            total: outcomes.len(),
            limit: 100.0 * limit,
            first: failed[0].clone(),
        });
    }
    Ok(failed.len())
}

fn reports_from_outcomes(
    setting: &McSetting,
    signals: &[Signal],
    outcomes: &[Outcome],
    digest: &str,
) -> Result<Vec<McReport>> {
    let failures = check_failures(outcomes, MC_FAILURE_LIMIT)?;
    let t_star = setting.walk.t_star_frac;
    let knots = setting.walk.m.saturating_sub(2);
    Ok(signals
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let ok: Vec<(f64, usize)> = outcomes.iter().filter_map(|o| o.as_ref().ok()).map(|v| v[k]).collect();
            let sq = ok.iter().map(|(t, _)| (t - t_star) * (t - t_star)).collect();
            let mut rep = McReport::from_squared_errors(&s.label(), setting.n, setting.walk.m, sq);
            rep.failures = failures;
            rep.exact_tie_fraction = ok.iter().filter(|(_, tied)| *tied == knots).count() as f64 / ok.len().max(1) as f64;
            rep.config_digest = digest.to_string();
            rep
        })
        .collect())
}

/// Monte Carlo MSE of `t_hat` for several signals sharing each replicate's graphs.
pub fn mc_localization_multi(
    setting: &McSetting,
    signals: &[Signal],
    replicates: usize,
    seed: u64,
) -> Result<Vec<McReport>> {
    if replicates < 2 {
        return Err(Error::Config("at least 2 replicates are required".into()));
    }
    let outcomes = run_range(setting, signals, seed, 0..replicates);
    reports_from_outcomes(setting, signals, &outcomes, &run_digest(setting, signals, replicates, seed))
}

/// Monte Carlo MSE of `t_hat` for one signal.
pub fn mc_localization(setting: &McSetting, signal: Signal, replicates: usize, seed: u64) -> Result<McReport> {
    Ok(mc_localization_multi(setting, &[signal], replicates, seed)?.remove(0))
}

/// One report per ISOMAP target dimension, all from the same replicates.
pub fn dimension_sweep(setting: &McSetting, d_values: &[usize], replicates: usize, seed: u64) -> Result<Vec<McReport>> {
    let signals: Vec<Signal> = d_values.iter().map(|&d| Signal::IsoMirror(d)).collect();
    mc_localization_multi(setting, &signals, replicates, seed)
}

fn outcome_line(r: usize, o: &Outcome) -> String {
    match o {
        Ok(v) => {
            let mut s = format!("{r},ok");
            for (t, tied) in v {
                let _ = write!(s, ",{},{tied}", fmt_f64(*t));
            }
            s
        }
        Err(e) => format!("{r},fail,{}", e.replace(['\n', ','], " ")),
    }
}

fn parse_outcome_line(line: &str, signals: usize) -> Option<(usize, Outcome)> {
    let mut parts = line.split(',');
    let r = parts.next()?.parse().ok()?;
    match parts.next()? {
        "ok" => {
            let vals: Vec<&str> = parts.collect();
            if vals.len() != 2 * signals {
                return None;
            }
            let mut v = Vec::with_capacity(signals);
            for pair in vals.chunks(2) {
                v.push((pair[0].parse().ok()?, pair[1].parse().ok()?));
            }
            Some((r, Ok(v)))
        }
        "fail" => Some((r, Err(parts.collect::<Vec<_>>().join(",")))),
        _ => None,
    }
}

/// As [`mc_localization_multi`], logging each replicate to `checkpoint` and
/// skipping replicates already logged by an earlier, interrupted run.
///
/// `chunk` replicates are simulated between log flushes.
pub fn mc_localization_resumable(
    setting: &McSetting,
    signals: &[Signal],
    replicates: usize,
    seed: u64,
    checkpoint: &Path,
    chunk: usize,
) -> Result<Vec<McReport>> {
    if replicates < 2 {
        return Err(Error::Config("at least 2 replicates are required".into()));
    }
    let digest = run_digest(setting, signals, replicates, seed);
    let header = format!("# digest = {digest}");
    let mut outcomes: Vec<Option<Outcome>> = vec![None; replicates];
    if let Ok(text) = fs::read_to_string(checkpoint) {
        let mut lines = text.lines();
        if lines.next() != Some(header.as_str()) {
            return Err(Error::Checkpoint { path: checkpoint.to_path_buf(), reason: "digest differs".into() });
        }
        // a torn final line from an interrupted write is simply recomputed
        for (r, o) in lines.filter_map(|l| parse_outcome_line(l, signals.len())) {
            if r < replicates {
                outcomes[r] = Some(o);
            }
        }
    }
    if let Some(dir) = checkpoint.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut log = fs::OpenOptions::new().create(true).append(true).open(checkpoint).map_err(|e| Error::io(checkpoint, e))?;
    if log.metadata().map(|m| m.len() == 0).unwrap_or(true) {
        writeln!(log, "{header}").map_err(|e| Error::io(checkpoint, e))?;
    }
    let missing: Vec<usize> = (0..replicates).filter(|r| outcomes[*r].is_none()).collect();
    for block in missing.chunks(chunk.max(1)) {
        let done: Vec<(usize, Outcome)> =
            block.par_iter().map(|&r| (r, run_replicate(setting, signals, seed, r))).collect();
        let mut text = String::new();
        for (r, o) in &done {
            text.push_str(&outcome_line(*r, o));
            text.push('\n');
        }
        log.write_all(text.as_bytes()).and_then(|_| log.sync_data()).map_err(|e| Error::io(checkpoint, e))?;
        for (r, o) in done {
            outcomes[r] = Some(o);
        }
    }
    let outcomes: Vec<Outcome> = outcomes.into_iter().map(|o| o.expect("every replicate computed")).collect();
    reports_from_outcomes(setting, signals, &outcomes, &digest)
}

/// Type-7 (linear interpolation) sample quantile.
pub fn quantile(values: &[f64], prob: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return f64::NAN;
    }
    let h = (v.len() - 1) as f64 * prob.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// Master seed of the bootstrap null draws for a run seeded with `seed`.
pub fn null_master_seed(seed: u64) -> u64 {
    derive_seed(seed, TAG_REPLICATE, u64::MAX, 1)
}

/// Master seed of fresh alternative draws for a run seeded with `seed`.
pub fn power_master_seed(seed: u64) -> u64 {
    derive_seed(seed, TAG_REPLICATE, u64::MAX, 2)
}

/// Bootstrap null draws of the slope-change statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct NullDistribution {
    pub statistics: Vec<f64>,
    pub failures: usize,
}

/// Slope-change statistic of replicate `r`.
pub fn replicate_statistic(setting: &McSetting, master: u64, r: usize) -> std::result::Result<f64, String> {
    let (walk_seed, graph_seed) = replicate_seeds(master, r);
    let tsg = simulate(&setting.walk.with_seed(walk_seed), setting.n, graph_seed).map_err(|e| e.to_string())?;
    let fit = localize_signals(&tsg, &[Signal::MirrorDim1], setting.ase_dim).map_err(|e| e.to_string())?;
    Ok(detection_statistic(&fit[0]))
}

fn statistics(setting: &McSetting, replicates: usize, seed: u64) -> Result<NullDistribution> {
    let draws: Vec<std::result::Result<f64, String>> =
        (0..replicates).into_par_iter().map(|r| replicate_statistic(setting, seed, r)).collect();
    let failed: Vec<&String> = draws.iter().filter_map(|d| d.as_ref().err()).collect();
    if failed.len() as f64 > BOOTSTRAP_FAILURE_LIMIT * replicates as f64 {
        return Err(Error::TooManyFailures {
            failed: failed.len(),
            total: replicates,
            limit: 100.0 * BOOTSTRAP_FAILURE_LIMIT,
            first: failed[0].clone(),
        });
    }
    let failures = failed.len();
    Ok(NullDistribution { statistics: draws.into_iter().filter_map(|d| d.ok()).collect(), failures })
}

/// Simulates `replicates` null series (`p = q`) through the full pipeline.
pub fn bootstrap_null(setting: &McSetting, replicates: usize, seed: u64) -> Result<NullDistribution> {
    if setting.walk.p != setting.walk.q {
        return Err(Error::Config("the bootstrap null needs p = q".into()));
    }
    statistics(setting, replicates, seed)
}

/// Bootstrap test outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub observed: f64,
    pub critical_value: f64,
    /// `(#{null >= observed} + 1) / (R + 1)`.
    pub p_value: f64,
    /// `observed > critical_value`.
    pub reject: bool,
    pub level: f64,
    pub replicates: usize,
    pub failures: usize,
}

/// Critical value, p-value and decision from null draws.
pub fn detection_from_null(null: &NullDistribution, observed: f64, level: f64) -> Detection {
    let s = &null.statistics;
    let critical_value = quantile(s, 1.0 - level);
    let exceed = s.iter().filter(|x| **x >= observed).count();
    Detection {
        observed,
        critical_value,
        p_value: (exceed + 1) as f64 / (s.len() + 1) as f64,
        reject: observed > critical_value,
        level,
        replicates: s.len(),
        failures: null.failures,
    }
}

/// Full bootstrap test of an observed slope change against the null walk.
pub fn bootstrap_detect(
    null_setting: &McSetting,
    observed: f64,
    replicates: usize,
    level: f64,
    seed: u64,
) -> Result<(Detection, NullDistribution)> {
    if replicates < 100 {
        return Err(Error::Config("the bootstrap needs at least 100 replicates".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!("level {level} must lie in (0, 1)")));
    }
    let null = bootstrap_null(null_setting, replicates, seed)?;
    Ok((detection_from_null(&null, observed, level), null))
}

/// Fraction of fresh replicates whose statistic exceeds `critical_value`.
pub fn rejection_rate(setting: &McSetting, critical_value: f64, replicates: usize, seed: u64) -> Result<(f64, Vec<f64>)> {
    let draws = statistics(setting, replicates, seed)?;
    let rejected = draws.statistics.iter().filter(|s| **s > critical_value).count();
    Ok((rejected as f64 / draws.statistics.len().max(1) as f64, draws.statistics))
}

/// gnuplot script drawing MSE with CI bars against `x_column` of `csv`,
/// whose report columns start after `offset` leading columns.
pub fn mse_plot_script(csv: &str, x_column: usize, offset: usize, x_label: &str, title: &str) -> String {
    format!(
        "# gnuplot script\n\
         set datafile separator ','\n\
         set title '{title}'\n\
         set xlabel '{x_label}'\n\
         set ylabel 'MSE of changepoint estimate'\n\
         set logscale y\n\
         plot '{csv}' using {x_column}:{}:{}:{} skip 1 with yerrorlines title 'MSE (95% CI)'\n",
        offset + 6,
        offset + 8,
        offset + 9
    )
}

/// gnuplot script for a null histogram with the critical value marked.
pub fn detection_plot_script(null_csv: &str, critical_value: f64, observed: f64) -> String {
    format!(
        "# gnuplot script\n\
         set datafile separator ','\n\
         set title 'Bootstrap null distribution of |beta_R - beta_L|'\n\
         set xlabel 'slope change'\n\
         set ylabel 'count'\n\
         binwidth = {bw}\n\
         bin(x) = binwidth * floor(x / binwidth)\n\
         set arrow from {c},graph 0 to {c},graph 1 nohead lc rgb 'red'\n\
         set arrow from {o},graph 0 to {o},graph 1 nohead lc rgb 'blue'\n\
         plot '{null_csv}' using (bin($2)):(1.0) skip 1 smooth freq with boxes title 'null'\n",
        bw = fmt_f64((critical_value / 20.0).max(1e-6)),
        c = fmt_f64(critical_value),
        o = fmt_f64(observed)
    )
}

/// Text table in the layout of the method comparison, with the community
/// detection rows marked as not implemented.
pub fn method_table_text(reports: &[McReport]) -> String {
    let mut s = String::from("method,n,m,mse,ci_low,ci_high\n");
    for r in reports {
        let _ = writeln!(s, "{},{},{},{},{},{}", r.label, r.n, r.m, fmt_f64(r.mse), fmt_f64(r.ci_low), fmt_f64(r.ci_high));
    }
    s.push_str("leiden_modularity,,,not implemented,,\nlouvain_modularity,,,not implemented,,\n");
    s
}
