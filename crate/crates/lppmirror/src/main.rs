use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lppmirror::config::{parse_pipeline, RunConfig};
use lppmirror::experiments::{self, McSetting};
use lppmirror::formats::{self, fmt_f64};
use lppmirror::manifest::Manifest;
use lppmirror_core::localizer::detection_statistic;
use lppmirror_core::lpp_sim::{simulate_walk, true_dmv_matrix};
use lppmirror_core::pipeline::{analyze, AnalysisOptions, AseDim, Signal};
use lppmirror_core::spectral_embed::ProcrustesMode;
use lppmirror_core::summaries::{control_chart, largest_common_component, network_summaries};
use lppmirror_core::{graph_gen, AdjacencyTimeSeries};

const THREADS_VAR: &str = "LPPMIRROR_THREADS";
const ASE_AUTO_MAX: usize = 10;

#[derive(Parser)]
#[command(name = "lppmirror", version, about = "Changepoint localization for latent position network time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a random walk latent position series and its graphs.
    Simulate(SimulateArgs),
    /// Estimate the mirror of an observed series and localize its changepoint.
    Analyze(AnalyzeArgs),
    /// Monte Carlo MSE of the changepoint estimate.
    Mc(McArgs),
    /// Monte Carlo MSE across ISOMAP target dimensions.
    SweepDim(McArgs),
    /// Bootstrap test for a changepoint.
    Detect(DetectArgs),
    /// Per-time network statistics and the Frobenius control chart.
    Summaries(SummariesArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the binary snapshot `series.lpptsg`.
    #[arg(long)]
    binary: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Procrustes {
    Frobenius,
    Givens,
}

#[derive(Args)]
struct SeriesArgs {
    /// Directory of edge lists with `times.csv`, or a binary snapshot file.
    #[arg(long)]
    input: PathBuf,
    /// Keep time indices A..=B (0-based, inclusive).
    #[arg(long, value_name = "A:B", value_parser = parse_window)]
    time_window: Option<(usize, usize)>,
    /// Restrict to the largest vertex set connected in every graph.
    #[arg(long)]
    common_component: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    series: SeriesArgs,
    #[arg(long)]
    out: PathBuf,
    /// ASE dimension, or `auto` for the median profile-likelihood elbow.
    #[arg(long, default_value = "1", value_parser = parse_ase_dim)]
    ase_dim: AseDim,
    #[arg(long, default_value_t = 1)]
    cmds_dim: usize,
    #[arg(long)]
    use_isomap: bool,
    #[arg(long, value_enum, default_value = "frobenius")]
    procrustes: Procrustes,
    /// Run a bootstrap test against the null walk of this config.
    #[arg(long)]
    null_config: Option<PathBuf>,
    #[arg(long, default_value_t = 300)]
    replicates: usize,
    #[arg(long, default_value_t = 0.05)]
    level: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct McArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured replicate count.
    #[arg(long)]
    replicates: Option<usize>,
    /// Overrides the configured ASE dimension.
    #[arg(long)]
    ase_dim: Option<usize>,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Observed series; simulated from the config walk when absent.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    level: Option<f64>,
    #[arg(long)]
    ase_dim: Option<usize>,
}

#[derive(Args)]
struct SummariesArgs {
    #[command(flatten)]
    series: SeriesArgs,
    #[arg(long)]
    out: PathBuf,
}

fn parse_window(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or("expected A:B")?;
    let a: usize = a.trim().parse().map_err(|_| format!("bad start `{a}`"))?;
    let b: usize = b.trim().parse().map_err(|_| format!("bad end `{b}`"))?;
    if a > b {
        return Err(format!("start {a} exceeds end {b}"));
    }
    Ok((a, b))
}

fn parse_ase_dim(s: &str) -> Result<AseDim, String> {
    if s == "auto" {
        return Ok(AseDim::Auto { max: ASE_AUTO_MAX });
    }
    match s.parse::<usize>() {
        Ok(d) if d >= 1 => Ok(AseDim::Fixed(d)),
        _ => Err(format!("expected a positive integer or `auto`, got `{s}`")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("lppmirror: error: {e:#}");
        return ExitCode::FAILURE;
    }
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Analyze(a) => analyze_cmd(a),
        Command::Mc(a) => mc(a),
        Command::SweepDim(a) => sweep(a),
        Command::Detect(a) => detect(a),
        Command::Summaries(a) => summaries(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lppmirror: error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let n: usize = v.parse().with_context(|| format!("{THREADS_VAR}={v} is not a thread count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn load_config(path: &Path, seed: Option<u64>) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn simulate(a: SimulateArgs) -> anyhow::Result<()> {
    let cfg = load_config(&a.config, a.seed)?;
    let walk = cfg.walk_config()?;
    let (walk_seed, graph_seed) = experiments::replicate_seeds(cfg.seed, 0);
    let latents = simulate_walk(&walk.with_seed(walk_seed), cfg.graph.n)?;
    let tsg = graph_gen::sample_tsg(&latents, graph_seed)?;
    let mut man = Manifest::new("simulate", cfg.seed);
    man.config = Some(cfg.to_toml_string());
    for p in formats::write_tsg_dir(&a.out, &tsg, false)? {
        man.record(p);
    }
    man.write(&a.out.join("latents.csv"), formats::latent_csv_text(&latents).as_bytes())?;
    let truth = true_dmv_matrix(&walk)?;
    man.write(&a.out.join("true_dmv.csv"), formats::dissimilarity_csv_text(&truth).as_bytes())?;
    if a.binary {
        man.write(&a.out.join("series.lpptsg"), &formats::snapshot_bytes(&tsg))?;
    }
    man.finish(&a.out)?;
    println!("wrote {} graphs on {} vertices to {}", tsg.m(), tsg.n, a.out.display());
    Ok(())
}

struct Prepared {
    /// Series as read, after windowing and vertex restriction.
    raw: AdjacencyTimeSeries,
    /// Symmetrized copy for embedding.
    undirected: AdjacencyTimeSeries,
    directed: bool,
    vertices: Option<Vec<usize>>,
}

fn prepare(s: &SeriesArgs) -> anyhow::Result<Prepared> {
    let (mut tsg, directed) = if s.input.is_dir() {
        formats::read_tsg_dir(&s.input)?
    } else {
        (formats::read_snapshot(&s.input)?, false)
    };
    if let Some((a, b)) = s.time_window {
        tsg = tsg.window(a, b).with_context(|| format!("time window {a}:{b} on {} graphs", tsg.m()))?;
    }
    let mut vertices = None;
    if s.common_component {
        let (v, graphs) = largest_common_component(&tsg.graphs)?;
        if v.is_empty() {
            bail!("the graphs share no connected vertex set");
        }
        tsg = AdjacencyTimeSeries::new(tsg.times.clone(), graphs)?;
        vertices = Some(v);
    }
    let undirected = if directed {
        AdjacencyTimeSeries::new(tsg.times.clone(), tsg.graphs.iter().map(|g| g.symmetrized()).collect())?
    } else {
        tsg.clone()
    };
    Ok(Prepared { raw: tsg, undirected, directed, vertices })
}

fn vertices_text(v: &[usize]) -> String {
    v.iter().map(|i| format!("{i}\n")).collect()
}

fn analyze_cmd(a: AnalyzeArgs) -> anyhow::Result<()> {
    let prep = prepare(&a.series)?;
    let tsg = &prep.undirected;
    let opts = AnalysisOptions {
        ase_dim: a.ase_dim,
        cmds_dim: a.cmds_dim,
        use_isomap: a.use_isomap,
        procrustes: match a.procrustes {
            Procrustes::Frobenius => ProcrustesMode::Frobenius,
            Procrustes::Givens => ProcrustesMode::GivensRefined,
        },
    };
    let res = analyze(tsg, &opts)?;
    let mut man = Manifest::new("analyze", a.seed);
    man.config = Some(format!(
        "input = {:?}\nase_dim = {}\ncmds_dim = {}\nuse_isomap = {}\ndirected_input = {}\ntime_window = {:?}\ncommon_component = {}",
        a.series.input.display().to_string(),
        res.ase_dim,
        a.cmds_dim,
        a.use_isomap,
        prep.directed,
        a.series.time_window.map(|(s, e)| format!("{s}:{e}")).unwrap_or_else(|| "all".into()),
        a.series.common_component
    ));
    let out = &a.out;
    man.write(&out.join("dhat.csv"), formats::dissimilarity_csv_text(&res.dissimilarity).as_bytes())?;
    man.write(&out.join("mirror.csv"), formats::mirror_csv_text(&tsg.times, &res.mirror).as_bytes())?;
    man.write(&out.join("spectrum.csv"), formats::spectrum_csv_text(&res.mirror).as_bytes())?;
    if let Some(iso) = &res.iso {
        man.write(&out.join("iso.csv"), formats::iso_csv_text(&tsg.times, iso).as_bytes())?;
    }
    let stat = detection_statistic(&res.fit);
    let mut block = formats::fit_block_text(&res.fit, stat);
    block.push_str(&format!("ase_dim = {}\n", res.ase_dim));
    man.write(&out.join("fit.txt"), block.as_bytes())?;
    man.write(&out.join("fit.csv"), formats::fit_csv_text(&res.fit).as_bytes())?;
    if let Some(v) = &prep.vertices {
        man.write(&out.join("vertices.txt"), vertices_text(v).as_bytes())?;
    }
    println!("t_hat = {} (index {})", fmt_f64(res.fit.t_hat), res.fit.t_hat_index);
    if let Some(path) = &a.null_config {
        let null_cfg = RunConfig::load(path)?;
        let mut setting = McSetting::new(null_cfg.null_walk_config_at(tsg.m())?, tsg.n);
        setting.ase_dim = res.ase_dim;
        let (det, null) = experiments::bootstrap_detect(
            &setting,
            stat,
            a.replicates,
            a.level,
            experiments::null_master_seed(a.seed),
        )?;
        write_detection(&mut man, out, &det, &null.statistics, None)?;
    }
    man.finish(out)?;
    Ok(())
}

fn detection_text(det: &experiments::Detection, power: Option<(f64, usize)>) -> String {
    let mut s = format!(
        "observed = {}\ncritical_value = {}\np_value = {}\nreject = {}\nlevel = {}\nreplicates = {}\nfailures = {}\n",
        fmt_f64(det.observed),
        fmt_f64(det.critical_value),
        fmt_f64(det.p_value),
        det.reject,
        fmt_f64(det.level),
        det.replicates,
        det.failures
    );
    if let Some((rate, r)) = power {
        s.push_str(&format!("power = {}\npower_replicates = {r}\n", fmt_f64(rate)));
    }
    s
}

fn write_detection(
    man: &mut Manifest,
    out: &Path,
    det: &experiments::Detection,
    null: &[f64],
    power: Option<(f64, usize)>,
) -> anyhow::Result<()> {
    man.write(&out.join("detection.txt"), detection_text(det, power).as_bytes())?;
    let mut csv = String::from("replicate,statistic\n");
    for (r, s) in null.iter().enumerate() {
        csv.push_str(&format!("{r},{}\n", fmt_f64(*s)));
    }
    man.write(&out.join("null.csv"), csv.as_bytes())?;
    let gp = experiments::detection_plot_script("null.csv", det.critical_value, det.observed);
    man.write(&out.join("detection.gp"), gp.as_bytes())?;
    println!(
        "slope change {} vs critical value {}: p = {}, {}",
        fmt_f64(det.observed),
        fmt_f64(det.critical_value),
        fmt_f64(det.p_value),
        if det.reject { "reject" } else { "do not reject" }
    );
    Ok(())
}

fn mc(a: McArgs) -> anyhow::Result<()> {
    let cfg = load_config(&a.config, a.seed)?;
    let sec = cfg.mc.clone().context("config has no [mc] section")?;
    let replicates = a.replicates.unwrap_or(sec.replicates);
    let signals = sec.pipelines.iter().map(|p| parse_pipeline(p)).collect::<Result<Vec<Signal>, _>>()?;
    if signals.is_empty() {
        bail!("[mc] pipelines is empty");
    }
    let n_values = sec.n_values.clone().unwrap_or_else(|| vec![cfg.graph.n]);
    let m_values = sec.m_values.clone().unwrap_or_else(|| vec![cfg.walk.m]);
    let mut man = Manifest::new("mc", cfg.seed);
    man.config = Some(cfg.to_toml_string());
    let mut reports = Vec::new();
    for &m in &m_values {
        for &n in &n_values {
            let mut setting = McSetting::new(cfg.walk_config_at(m)?, n);
            setting.ase_dim = a.ase_dim.unwrap_or(sec.ase_dim);
            let ck = a.out.join(format!("checkpoint_n{n}_m{m}.log"));
            let rows = experiments::mc_localization_resumable(&setting, &signals, replicates, cfg.seed, &ck, 64)?;
            man.record(ck);
            for r in &rows {
                println!("n={n} m={m} {}: mse = {} [{}, {}]", r.label, fmt_f64(r.mse), fmt_f64(r.ci_low), fmt_f64(r.ci_high));
            }
            reports.extend(rows);
        }
    }
    man.write(&a.out.join("mc.csv"), experiments::report_csv_text(&reports).as_bytes())?;
    man.write(&a.out.join("table.csv"), experiments::method_table_text(&reports).as_bytes())?;
    let (x, label) = if m_values.len() > 1 { (3, "m") } else { (2, "n") };
    let gp = experiments::mse_plot_script("mc.csv", x, 0, label, "Changepoint localization MSE");
    man.write(&a.out.join("mc.gp"), gp.as_bytes())?;
    man.finish(&a.out)?;
    Ok(())
}

fn sweep(a: McArgs) -> anyhow::Result<()> {
    let cfg = load_config(&a.config, a.seed)?;
    let sec = cfg.sweep.clone().context("config has no [sweep] section")?;
    if sec.d_values.is_empty() || sec.d_values.contains(&0) {
        bail!("[sweep] d_values must be positive");
    }
    let mut setting = McSetting::new(cfg.walk_config()?, cfg.graph.n);
    setting.ase_dim = a.ase_dim.unwrap_or(sec.ase_dim);
    let replicates = a.replicates.unwrap_or(sec.replicates);
    let reports = experiments::dimension_sweep(&setting, &sec.d_values, replicates, cfg.seed)?;
    let mut csv = format!("d,{}\n", experiments::REPORT_CSV_HEADER);
    for (d, r) in sec.d_values.iter().zip(&reports) {
        csv.push_str(&format!("{d},{}\n", experiments::report_csv_row(r)));
        println!("d={d}: mse = {} [{}, {}]", fmt_f64(r.mse), fmt_f64(r.ci_low), fmt_f64(r.ci_high));
    }
    let mut man = Manifest::new("sweep-dim", cfg.seed);
    man.config = Some(cfg.to_toml_string());
    man.write(&a.out.join("sweep.csv"), csv.as_bytes())?;
    let gp = experiments::mse_plot_script("sweep.csv", 1, 1, "iso-mirror dimension d", "MSE by mirror dimension");
    man.write(&a.out.join("sweep.gp"), gp.as_bytes())?;
    man.finish(&a.out)?;
    Ok(())
}

fn detect(a: DetectArgs) -> anyhow::Result<()> {
    let cfg = load_config(&a.config, a.seed)?;
    let sec = cfg.detect.clone().context("config has no [detect] section")?;
    let replicates = a.replicates.unwrap_or(sec.replicates);
    let level = a.level.unwrap_or(sec.level);
    let ase_dim = a.ase_dim.unwrap_or(sec.ase_dim);
    let observed_tsg = match &a.input {
        Some(p) => {
            let prep = prepare(&SeriesArgs { input: p.clone(), time_window: None, common_component: false })?;
            prep.undirected
        }
        None => {
            let (ws, gs) = experiments::replicate_seeds(cfg.seed, 0);
            lppmirror_core::pipeline::simulate(&cfg.walk_config()?.with_seed(ws), cfg.graph.n, gs)?
        }
    };
    let fit = lppmirror_core::pipeline::localize_signals(&observed_tsg, &[Signal::MirrorDim1], ase_dim)?;
    let observed = detection_statistic(&fit[0]);
    let mut null_setting = McSetting::new(cfg.null_walk_config_at(observed_tsg.m())?, observed_tsg.n);
    null_setting.ase_dim = ase_dim;
    let (det, null) =
        experiments::bootstrap_detect(&null_setting, observed, replicates, level, experiments::null_master_seed(cfg.seed))?;
    let power = if sec.power_replicates > 0 {
        let mut alt = McSetting::new(cfg.walk_config_at(observed_tsg.m())?, observed_tsg.n);
        alt.ase_dim = ase_dim;
        let (rate, _) = experiments::rejection_rate(
            &alt,
            det.critical_value,
            sec.power_replicates,
            experiments::power_master_seed(cfg.seed),
        )?;
        Some((rate, sec.power_replicates))
    } else {
        None
    };
    let mut man = Manifest::new("detect", cfg.seed);
    man.config = Some(cfg.to_toml_string());
    write_detection(&mut man, &a.out, &det, &null.statistics, power)?;
    man.finish(&a.out)?;
    Ok(())
}

fn summaries(a: SummariesArgs) -> anyhow::Result<()> {
    let prep = prepare(&a.series)?;
    let tsg = &prep.raw;
    let rows = network_summaries(&tsg.graphs)?;
    let chart = control_chart(&tsg.graphs)?;
    let mut man = Manifest::new("summaries", 0);
    man.write(&a.out.join("summaries.csv"), formats::summaries_csv_text(&tsg.times, &rows).as_bytes())?;
    man.write(&a.out.join("control_chart.csv"), formats::control_chart_csv_text(&tsg.times, &chart).as_bytes())?;
    if let Some(v) = &prep.vertices {
        man.write(&a.out.join("vertices.txt"), vertices_text(v).as_bytes())?;
    }
    man.finish(&a.out)?;
    println!("{} graphs on {} vertices", tsg.m(), tsg.n);
    Ok(())
}
