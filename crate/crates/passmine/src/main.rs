//! Pipeline CLI: ingest -> discover -> analyze -> report, plus the
//! synthetic season generator and an all-stage `run`.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use passmine::analytics;
use passmine::canonical_json;
use passmine::config::{load_config, RunConfig};
use passmine::discovery::{discover_team, DiscoveryResult};
use passmine::events::{build_possessions, parse_events, InputFormat};
use passmine::preprocess::{densify, normalize, DensifiedSequence};
use passmine::report;
use passmine::synth::{generate_season, PlantSpec, SynthSpec};

#[derive(Parser)]
#[command(name = "passmine", about = "Recurring pass-sequence mining and analytics")]
struct Cli {
    /// Flat key=value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for all stages.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker count for the mining stage.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Seed for synthetic generation.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Restrict processing to one team.
    #[arg(long, global = true)]
    team: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct MatchFlags {
    #[arg(long)]
    local_threshold: Option<f64>,
    #[arg(long)]
    global_threshold: Option<f64>,
    #[arg(long)]
    min_positions: Option<usize>,
    #[arg(long)]
    max_outlier_run: Option<usize>,
    #[arg(long)]
    max_outlier_fraction: Option<f64>,
    #[arg(long)]
    max_stall: Option<usize>,
}

#[derive(Args)]
struct SynthFlags {
    #[arg(long, default_value_t = 2)]
    teams: usize,
    #[arg(long, default_value_t = 2)]
    games: usize,
    /// Possessions per team per game.
    #[arg(long, default_value_t = 10)]
    possessions: usize,
    #[arg(long, default_value_t = 10)]
    passes_min: usize,
    #[arg(long, default_value_t = 16)]
    passes_max: usize,
    /// Plant the template into this many possessions of the first team.
    #[arg(long, default_value_t = 0)]
    plant_copies: usize,
    #[arg(long, default_value_t = 0.5)]
    jitter: f64,
    /// Null mode: possessions confined to bands over 12 units apart.
    #[arg(long, default_value_t = false)]
    banded: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Parse events and write densified per-team sequences.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Mine patterns from the ingested sequences.
    Discover {
        #[command(flatten)]
        matching: MatchFlags,
    },
    /// Compute tables, clusters, and spread rows from discovery results.
    Analyze,
    /// Render SVGs and per-team tables.
    Report,
    /// Generate a synthetic season CSV and its ground truth.
    Synth {
        #[command(flatten)]
        synth: SynthFlags,
    },
    /// All stages: ingest, discover, analyze, report.
    Run {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "csv")]
        format: String,
        #[command(flatten)]
        matching: MatchFlags,
    },
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Internal(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

fn input_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(m)) => {
            eprintln!("input error: {m}");
            ExitCode::from(1)
        }
        Err(CliError::Internal(m)) => {
            eprintln!("internal error: {m}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = match &cli.config {
        Some(path) => load_config(path).map_err(input_err)?,
        None => RunConfig::default(),
    };
    config.out_dir = cli.out.clone();
    config.jobs = cli.jobs.max(1);
    config.seed = cli.seed;
    config.team_filter = cli.team.clone();

    match cli.command {
        Command::Ingest { input, format } => {
            cmd_ingest(&config, &input, &format)?;
        }
        Command::Discover { matching } => {
            apply_match_flags(&mut config, &matching);
            cmd_discover(&config)?;
        }
        Command::Analyze => cmd_analyze(&config)?,
        Command::Report => cmd_report(&config)?,
        Command::Synth { synth } => cmd_synth(&config, &synth)?,
        Command::Run {
            input,
            format,
            matching,
        } => {
            apply_match_flags(&mut config, &matching);
            cmd_ingest(&config, &input, &format)?;
            cmd_discover(&config)?;
            cmd_analyze(&config)?;
            cmd_report(&config)?;
        }
    }
    Ok(())
}

fn apply_match_flags(config: &mut RunConfig, flags: &MatchFlags) {
    let p = &mut config.params;
    if let Some(v) = flags.local_threshold {
        p.local_threshold = v;
    }
    if let Some(v) = flags.global_threshold {
        p.global_threshold = v;
    }
    if let Some(v) = flags.min_positions {
        p.min_positions = v;
        p.self_exclusion_band = v;
    }
    if let Some(v) = flags.max_outlier_run {
        p.max_outlier_run = v;
    }
    if let Some(v) = flags.max_outlier_fraction {
        p.max_outlier_fraction = v;
    }
    if let Some(v) = flags.max_stall {
        p.max_stall = v;
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(input_err)?;
    }
    std::fs::write(path, bytes).map_err(input_err)
}

fn cmd_ingest(config: &RunConfig, input: &Path, format: &str) -> Result<(), CliError> {
    let format = match format {
        "csv" => InputFormat::Csv,
        "json" => InputFormat::Json,
        other => return Err(CliError::Input(format!("unknown format {other:?}"))),
    };
    let file = std::fs::File::open(input)
        .map_err(|e| CliError::Input(format!("{}: {e}", input.display())))?;
    let events = parse_events(std::io::BufReader::new(file), format).map_err(input_err)?;
    let possessions = build_possessions(&events, &config.policy);

    let mut by_team: BTreeMap<String, Vec<DensifiedSequence>> = BTreeMap::new();
    for possession in &possessions {
        if let Some(team) = &config.team_filter {
            if &possession.team_id != team {
                continue;
            }
        }
        let normalized = normalize(possession, &config.field).map_err(input_err)?;
        let dense = densify(&normalized, config.densify_step);
        by_team.entry(dense.team_id.clone()).or_default().push(dense);
    }

    for (team, seqs) in &by_team {
        let path = config.out_dir.join("sequences").join(format!("{team}.json"));
        write_file(&path, canonical_json(seqs).as_bytes())?;
        println!(
            "ingested team {team}: {} sequences, {} passes",
            seqs.len(),
            seqs.iter().map(|s| s.n_passes).sum::<usize>()
        );
    }
    Ok(())
}

fn load_sequences(config: &RunConfig) -> Result<BTreeMap<String, Vec<DensifiedSequence>>, CliError> {
    let dir = config.out_dir.join("sequences");
    let entries = std::fs::read_dir(&dir)
        .map_err(|e| CliError::Input(format!("{}: {e} (run ingest first)", dir.display())))?;
    let mut by_team = BTreeMap::new();
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|x| x == "json").unwrap_or(false))
        .collect();
    paths.sort();
    for path in paths {
        let team = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| CliError::Input(format!("bad sequence file name {}", path.display())))?
            .to_string();
        if let Some(filter) = &config.team_filter {
            if &team != filter {
                continue;
            }
        }
        let text = std::fs::read_to_string(&path).map_err(input_err)?;
        let seqs: Vec<DensifiedSequence> = serde_json::from_str(&text).map_err(input_err)?;
        by_team.insert(team, seqs);
    }
    Ok(by_team)
}

fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    Ok(pool.install(f))
}

fn cmd_discover(config: &RunConfig) -> Result<(), CliError> {
    let by_team = load_sequences(config)?;
    for (team, seqs) in &by_team {
        let result = with_pool(config.jobs, || discover_team(seqs, &config.params))?;
        let path = config.out_dir.join("results").join(format!("{team}.json"));
        write_file(&path, canonical_json(&result).as_bytes())?;
        println!("team {team}: {} patterns", result.matches.len());
    }
    Ok(())
}

fn load_results(config: &RunConfig) -> Result<Vec<(String, DiscoveryResult)>, CliError> {
    let dir = config.out_dir.join("results");
    let entries = std::fs::read_dir(&dir)
        .map_err(|e| CliError::Input(format!("{}: {e} (run discover first)", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|x| x == "json").unwrap_or(false))
        .collect();
    paths.sort();
    let mut results = Vec::new();
    for path in paths {
        let team = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        if let Some(filter) = &config.team_filter {
            if &team != filter {
                continue;
            }
        }
        let text = std::fs::read_to_string(&path).map_err(input_err)?;
        let result: DiscoveryResult = serde_json::from_str(&text).map_err(input_err)?;
        results.push((team, result));
    }
    Ok(results)
}

fn sequence_index(
    by_team: &BTreeMap<String, Vec<DensifiedSequence>>,
) -> HashMap<String, DensifiedSequence> {
    by_team
        .values()
        .flatten()
        .map(|s| (s.seq_id.clone(), s.clone()))
        .collect()
}

fn cmd_analyze(config: &RunConfig) -> Result<(), CliError> {
    let by_team = load_sequences(config)?;
    let results = load_results(config)?;
    let seqs = sequence_index(&by_team);
    let season_passes: HashMap<String, usize> = by_team
        .iter()
        .map(|(team, seqs)| (team.clone(), seqs.iter().map(|s| s.n_passes).sum()))
        .collect();

    let rows = analytics::table1(&results, &seqs, &season_passes);
    let league = config.out_dir.join("league");
    write_file(&league.join("table1.csv"), report::table1_csv(&rows).as_bytes())?;
    for row in &rows {
        let path = config.out_dir.join(&row.team_id).join("table1.csv");
        write_file(&path, report::table1_csv(std::slice::from_ref(row)).as_bytes())?;
    }

    let tally = analytics::table2(&results, &seqs);
    write_file(&league.join("table2.csv"), report::table2_csv(&tally).as_bytes())?;

    let mut clusters = Vec::new();
    for (_, result) in &results {
        clusters.extend(analytics::cluster_occurrences(result));
    }
    for (i, c) in clusters.iter_mut().enumerate() {
        c.cluster_id = i;
    }
    write_file(&league.join("clusters.json"), canonical_json(&clusters).as_bytes())?;

    let spreads = analytics::spread_rows(&results, &seqs, &config.field);
    write_file(&league.join("spreads.csv"), report::spreads_csv(&spreads).as_bytes())?;

    let total: usize = results.iter().map(|(_, r)| r.matches.len()).sum();
    println!(
        "analyzed {} teams, {} matches, {} clusters",
        results.len(),
        total,
        clusters.len()
    );
    Ok(())
}

fn cmd_report(config: &RunConfig) -> Result<(), CliError> {
    let by_team = load_sequences(config)?;
    let results = load_results(config)?;
    let seqs = sequence_index(&by_team);
    let style = report::PitchStyle::default();

    let mut n_svgs = 0usize;
    for (team, result) in &results {
        for (i, m) in result.matches.iter().enumerate() {
            let svg = report::render_match(m, &seqs, &style);
            let path = config
                .out_dir
                .join(team)
                .join("matches")
                .join(format!("match_{i:04}.svg"));
            write_file(&path, svg.as_bytes())?;
            n_svgs += 1;
        }
    }

    let league = config.out_dir.join("league");
    let spreads = analytics::spread_rows(&results, &seqs, &config.field);
    match report::render_spread_scatter(&spreads) {
        Ok(svg) => write_file(&league.join("spreads.svg"), svg.as_bytes())?,
        Err(_) => println!("no matches to plot; skipping spreads.svg"),
    }
    let mut clusters = Vec::new();
    for (_, result) in &results {
        clusters.extend(analytics::cluster_occurrences(result));
    }
    match report::render_overlap_chart(&clusters) {
        Ok(svg) => write_file(&league.join("overlaps.svg"), svg.as_bytes())?,
        Err(_) => println!("no clusters to plot; skipping overlaps.svg"),
    }
    println!("rendered {n_svgs} match SVGs");
    Ok(())
}

fn cmd_synth(config: &RunConfig, flags: &SynthFlags) -> Result<(), CliError> {
    let spec = SynthSpec {
        seed: config.seed,
        teams: flags.teams,
        games: flags.games,
        possessions_per_game: flags.possessions,
        passes_min: flags.passes_min,
        passes_max: flags.passes_max,
        plant: if flags.plant_copies > 0 {
            Some(PlantSpec {
                team_index: 0,
                copies: flags.plant_copies,
                jitter: flags.jitter,
            })
        } else {
            None
        },
        banded: flags.banded,
    };
    let (events, truth) = generate_season(&spec);
    let mut csv = Vec::new();
    passmine::events::write_events_csv(&mut csv, &events)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    write_file(&config.out_dir.join("season.csv"), &csv)?;
    write_file(
        &config.out_dir.join("ground_truth.json"),
        canonical_json(&truth).as_bytes(),
    )?;
    println!(
        "synthesized {} events, {} planted copies",
        events.len(),
        truth.planted.len()
    );
    Ok(())
}
