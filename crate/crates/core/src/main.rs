use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use vroad::blind_road::{load_map, save_map, MapBuilder, DEFAULT_MIN_RECORD_SPACING, DEFAULT_SNAP_RADIUS};
use vroad::geometry::Point2;
use vroad::sensors::Environment;
use vroad::sim::{self, SimConfig, SimError};
use vroad::wayfinding::{expand_path, plan_by_label, GlobalPath, WayfindingError, DEFAULT_PATH_SPACING};

#[derive(Parser)]
#[command(name = "vroad", version, about = "Record, plan and simulate virtual blind roads")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a PoI map from recorded trajectories and tagged places.
    BuildRoad {
        /// Trajectory files: {"points": [[x, y], ...]}
        #[arg(required = true)]
        trajectories: Vec<PathBuf>,
        /// Tag file: [{"label": "...", "x": 0.0, "y": 0.0}, ...]
        #[arg(long)]
        tags: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MIN_RECORD_SPACING)]
        spacing: f64,
        #[arg(long, default_value_t = DEFAULT_SNAP_RADIUS)]
        snap_radius: f64,
    },
    /// Plan the shortest route between two labels.
    Plan {
        map: PathBuf,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        /// Write the expanded path here.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_PATH_SPACING)]
        spacing: f64,
    },
    /// Walk a simulated user along a planned route.
    Simulate {
        map: PathBuf,
        env: PathBuf,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        /// Overridden by the VROAD_SEED environment variable.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Trajectory CSV destination.
        #[arg(short, long)]
        output: PathBuf,
        /// Print per-tick guidance internals as CSV on stdout.
        #[arg(long)]
        trace: bool,
    },
    /// Deviation of a trajectory from a path.
    Stats { trajectory: PathBuf, path: PathBuf },
}

enum Failure {
    Usage(String),
    Route(String),
    Input(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Route(_) => 2,
            Failure::Input(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Route(m) | Failure::Input(m) => m,
        }
    }
}

impl From<WayfindingError> for Failure {
    fn from(e: WayfindingError) -> Self {
        match e {
            WayfindingError::UnknownLabel(_) | WayfindingError::NoPath(..) => Failure::Route(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Wayfinding(w) => w.into(),
            other => Failure::Input(other.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    serde_json::from_str(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

#[derive(Deserialize)]
struct Trajectory {
    points: Vec<[f64; 2]>,
}

#[derive(Deserialize)]
struct Tag {
    label: String,
    x: f64,
    y: f64,
}

fn load(path: &Path) -> Result<vroad::blind_road::PoIGraph, Failure> {
    let (graph, _) = load_map(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok(graph)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::BuildRoad { trajectories, tags, output, spacing, snap_radius } => {
            if !(spacing > 0.0) || !(snap_radius > 0.0) {
                return Err(Failure::Usage("--spacing and --snap-radius must be positive".into()));
            }
            let tags: Vec<Tag> = parse(&tags)?;
            let tags: Vec<(String, Point2)> = tags.into_iter().map(|t| (t.label, Point2::new(t.x, t.y))).collect();
            let mut builder = MapBuilder::new(spacing, snap_radius);
            for path in &trajectories {
                let t: Trajectory = parse(path)?;
                let mut road = vroad::blind_road::VirtualBlindRoad::new(spacing);
                for [x, y] in t.points {
                    road.record_point(Point2::new(x, y));
                }
                let tagged = builder
                    .add_recording(&road, &tags)
                    .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
                eprintln!("{}: {} points, tagged {}", path.display(), road.len(), tagged.join(", "));
            }
            let (graph, road) = builder.finish().map_err(|e| Failure::Input(e.to_string()))?;
            write(&output, &save_map(&graph, &road))?;
            println!("{} nodes, {} edges", graph.nodes().len(), graph.edges().len());
        }
        Command::Plan { map, from, to, output, spacing } => {
            if !(spacing > 0.0) {
                return Err(Failure::Usage("--spacing must be positive".into()));
            }
            let graph = load(&map)?;
            let route = plan_by_label(&graph, &from, &to)?;
            let labels: Vec<&str> = route
                .node_ids
                .iter()
                .map(|id| graph.node(id).map_or(id.as_str(), |n| n.label.as_str()))
                .collect();
            println!("route: {}", labels.join(","));
            println!("cost: {:.3}", route.total_cost);
            if let Some(out) = output {
                let path = expand_path(&graph, &route, spacing)?;
                write(&out, &path.to_json())?;
            }
        }
        Command::Simulate { map, env, from, to, seed, config, output, trace } => {
            let seed = match std::env::var("VROAD_SEED") {
                Ok(s) => s.trim().parse().map_err(|_| Failure::Usage(format!("VROAD_SEED={s:?} is not a seed")))?,
                Err(_) => seed,
            };
            let graph = load(&map)?;
            let env = Environment::from_json(&read(&env)?).map_err(|e| Failure::Input(e.to_string()))?;
            let cfg = match config {
                Some(p) => SimConfig::from_json(&read(&p)?).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?,
                None => SimConfig::default(),
            };
            let record = sim::run_scenario(&env, &graph, &from, &to, &cfg, seed)?;
            write(&output, &sim::trajectory_csv(&record))?;
            if trace {
                print!("{}", sim::trace_csv(&record));
            }
            let stats = sim::deviation_stats(&record, &record.path.points).map_err(|e| Failure::Input(e.to_string()))?;
            eprintln!(
                "{:?} after {:.1} s, max {:.3} m, avg {:.3} m",
                record.outcome,
                record.samples.len() as f64 * cfg.walker.dt,
                stats.max,
                stats.avg
            );
        }
        Command::Stats { trajectory, path } => {
            let rows = sim::read_trajectory_csv(&read(&trajectory)?)
                .map_err(|e| Failure::Input(format!("{}: {e}", trajectory.display())))?;
            let path = GlobalPath::from_json(&read(&path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            let positions: Vec<Point2> = rows.iter().map(|r| Point2::new(r.x, r.y)).collect();
            let stats = sim::deviation_stats_of(&positions, &path.points).map_err(|e| Failure::Input(e.to_string()))?;
            println!("{:>12} {:>12} {:>12}", "max_dev", "avg_dev", "variance");
            println!("{:>12.6} {:>12.6} {:>12.6}", stats.max, stats.avg, stats.variance);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
