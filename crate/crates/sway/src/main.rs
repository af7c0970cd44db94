use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sway::assistant::{ModelClient, StubClient, DEFAULT_CONTEXT_BUDGET};
use sway::core::coordination::{DataBasis, Direction};
use sway::core::{CoordinationScheme, EncodingManifest, Point};
use sway::session::{ExportFlavor, SessionService, SessionStore};
use sway::svg::render_static;

#[derive(Parser)]
#[command(name = "sway", version, about = "Author animations for SVG data visualizations")]
struct Cli {
    /// Directory holding one subdirectory per session.
    #[arg(long, env = "SWAY_DATA_DIR", default_value = "sway-data", global = true)]
    data_dir: PathBuf,
    /// Prompt size limit in estimated tokens.
    #[arg(long, env = "SWAY_CONTEXT_BUDGET", default_value_t = DEFAULT_CONTEXT_BUDGET, global = true)]
    budget: usize,
    /// Extra canned replies for the offline assistant.
    #[arg(long, env = "SWAY_STUB_DIR", global = true)]
    stub_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create a session from an SVG file and print its id.
    New {
        svg: PathBuf,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        styles: Option<PathBuf>,
    },
    /// Send a request to the assistant.
    Prompt {
        session: String,
        text: String,
        /// Version to iterate on; repeatable.
        #[arg(long = "base")]
        base: Vec<u64>,
        /// PNG screenshot attached to the request.
        #[arg(long)]
        screenshot: Option<PathBuf>,
    },
    /// Set how a track staggers its elements.
    Coord {
        session: String,
        version: u64,
        track: usize,
        #[command(flatten)]
        scheme: SchemeArgs,
        /// Maximum extra delay across the group in ms.
        #[arg(long)]
        offset: Option<f64>,
    },
    /// Set a track's delay and duration in ms.
    Timing {
        session: String,
        version: u64,
        track: usize,
        #[arg(long)]
        delay: f64,
        #[arg(long)]
        duration: f64,
    },
    /// Print the frame at time `t` as JSON, or write it into a static SVG.
    Preview {
        session: String,
        version: u64,
        #[arg(long, short = 't')]
        t: f64,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Write an export artifact.
    Export {
        session: String,
        version: u64,
        #[arg(long, value_enum)]
        flavor: Flavor,
        #[arg(long, short = 'o')]
        out: Option<PathBuf>,
    },
    /// Run the validator and invariant checks on a version.
    Check { session: String, version: u64 },
    /// List sessions, or the versions and transcript of one session.
    Show { session: Option<String> },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
}

#[derive(Args)]
struct SchemeArgs {
    #[arg(long, value_enum)]
    mode: Mode,
    #[arg(long, value_enum, default_value_t = Order::Ascending)]
    direction: Order,
    /// Data mode: order by rank or by raw value.
    #[arg(long, value_enum, default_value_t = Basis::Rank)]
    basis: Basis,
    /// Data mode: `data-*` attribute to read (bounding-box diagonal otherwise).
    #[arg(long)]
    attribute: Option<String>,
    /// Radius mode: center as `x,y` relative to the viewBox.
    #[arg(long, value_parser = parse_point)]
    center: Option<Point>,
    #[arg(long, value_parser = parse_point)]
    start: Option<Point>,
    #[arg(long, value_parser = parse_point)]
    end: Option<Point>,
    /// Sketch mode: polyline vertex `x,y`; repeatable.
    #[arg(long = "point", value_parser = parse_point)]
    points: Vec<Point>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Data,
    Radius,
    Projection,
    Sketch,
    Layer,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    Ascending,
    Descending,
}

#[derive(Clone, Copy, ValueEnum)]
enum Basis {
    Rank,
    Value,
}

#[derive(Clone, Copy, ValueEnum)]
enum Flavor {
    Program,
    Script,
    Baked,
}

fn parse_point(s: &str) -> Result<Point, String> {
    let (x, y) = s.split_once(',').ok_or("expected x,y")?;
    let x: f64 = x.trim().parse().map_err(|_| format!("bad x in {s:?}"))?;
    let y: f64 = y.trim().parse().map_err(|_| format!("bad y in {s:?}"))?;
    Ok(Point::new(x, y))
}

fn client(cli: &Cli) -> Result<Arc<dyn ModelClient>> {
    #[cfg(feature = "remote")]
    if let Some(c) = sway::assistant::ChatCompletionsClient::from_env(cli.budget) {
        return Ok(Arc::new(c));
    }
    let mut stub = StubClient::builtin();
    if let Some(dir) = &cli.stub_dir {
        stub.load_dir(dir)?;
    }
    Ok(Arc::new(stub))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

impl SchemeArgs {
    fn scheme(self) -> Result<CoordinationScheme> {
        let direction = match self.direction {
            Order::Ascending => Direction::Ascending,
            Order::Descending => Direction::Descending,
        };
        Ok(match self.mode {
            Mode::Data => CoordinationScheme::DataCentric {
                direction,
                basis: match self.basis {
                    Basis::Rank => DataBasis::Rank,
                    Basis::Value => DataBasis::Value,
                },
                attribute: self.attribute,
            },
            Mode::Radius => CoordinationScheme::LayoutRadius { center: self.center.context("--center is required for radius mode")? },
            Mode::Projection => CoordinationScheme::LayoutProjection {
                start: self.start.context("--start is required for projection mode")?,
                end: self.end.context("--end is required for projection mode")?,
            },
            Mode::Sketch => CoordinationScheme::LayoutSketch { polyline: self.points },
            Mode::Layer => CoordinationScheme::LayerCentric { direction },
            Mode::Random => CoordinationScheme::Random { seed: self.seed },
        })
    }
}

fn write_out(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn main() -> Result<()> {
    tracing_subscriber::fmt().with_env_filter(tracing_subscriber::EnvFilter::from_default_env()).with_writer(std::io::stderr).init();
    let cli = Cli::parse();
    let service = SessionService::new(SessionStore::new(&cli.data_dir), client(&cli)?).with_budget(cli.budget);

    match cli.command {
        Command::New { svg, manifest, styles } => {
            let bytes = std::fs::read(&svg).with_context(|| format!("reading {}", svg.display()))?;
            let manifest: Option<EncodingManifest> = match manifest {
                Some(p) => Some(serde_json::from_str(&read_text(&p)?).with_context(|| format!("parsing {}", p.display()))?),
                None => None,
            };
            let styles = styles.as_deref().map(read_text).transpose()?;
            let session = service.create_session(&bytes, styles, manifest)?;
            println!("{}", session.id);
        }
        Command::Prompt { session, text, base, screenshot } => {
            let png = screenshot.map(|p| std::fs::read(&p).with_context(|| format!("reading {}", p.display()))).transpose()?;
            let outcome = service.post_message(&session, &text, &base, png)?;
            println!("{}", outcome.entry.text);
            if let Some(v) = outcome.version {
                println!("Version {}:", v.id);
                for (k, g) in v.clips.iter().enumerate() {
                    println!("  track {k}: {} on {}", g.clip.title, g.clip.selector);
                }
                for w in &v.warnings {
                    println!("  warning: {}", w.rationale);
                }
            }
        }
        Command::Coord { session, version, track, scheme, offset } => {
            let v = service.set_coordination(&session, version, track, scheme.scheme()?, offset)?;
            println!("{}", serde_json::to_string_pretty(&v.clips[track])?);
        }
        Command::Timing { session, version, track, delay, duration } => {
            let v = service.set_timeline(&session, version, track, delay, duration)?;
            println!("{}", serde_json::to_string_pretty(&v.clips[track])?);
        }
        Command::Preview { session, version, t, svg } => {
            let snapshot = service.preview(&session, version, t)?;
            match svg {
                Some(path) => {
                    let s = service.session(&session)?;
                    std::fs::write(&path, render_static(&s.document, &snapshot))?;
                }
                None => println!("{}", serde_json::to_string_pretty(&snapshot)?),
            }
        }
        Command::Export { session, version, flavor, out } => {
            let flavor = match flavor {
                Flavor::Program => ExportFlavor::Program,
                Flavor::Script => ExportFlavor::Script,
                Flavor::Baked => ExportFlavor::Baked,
            };
            write_out(out.as_deref(), &service.export(&session, version, flavor)?)?;
        }
        Command::Check { session, version } => {
            let report = service.check(&session, version)?;
            print!("{report}");
            if !report.passed() {
                bail!("version {version} failed its checks");
            }
        }
        Command::Show { session: None } => {
            for id in service.store().list()? {
                println!("{id}");
            }
        }
        Command::Show { session: Some(id) } => {
            let s = service.session(&id)?;
            for h in &s.history {
                let role = match h.role {
                    sway::session::Role::User => "user",
                    sway::session::Role::Assistant => "assistant",
                };
                let produced = h.produced_version.map(|v| format!(" -> version {v}")).unwrap_or_default();
                println!("[{role}] {}{produced}", h.text);
            }
            for v in &s.versions {
                let active = if s.active_version == Some(v.id) { " (active)" } else { "" };
                println!("version {}{active}: {} tracks, {} warnings", v.id, v.clips.len(), v.warnings.len());
            }
        }
        Command::Serve { addr } => {
            tracing::info!(client = service.client_name(), data_dir = %cli.data_dir.display(), "listening on {addr}");
            let app = sway::api::router(Arc::new(service));
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(addr).await?;
                axum::serve(listener, app).await
            })?;
        }
    }
    Ok(())
}
