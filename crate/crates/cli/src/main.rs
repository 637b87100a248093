use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use qd_cli::{envelope, error_report, find, run, CliError, Command, Options, Scenario};

#[derive(Parser)]
#[command(name = "qd", version, about = "Quadrature-domain toolkit: batch runs over scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Bergman kernel reproducing check and closed-form comparison.
    Kernel(Common),
    /// Span-membership traces on nested node grids.
    Membership(Common),
    /// Extract and verify the quadrature identity.
    Identity(Common),
    /// Polynomial-multiplier table for the QDP property.
    QdpCheck(Common),
    /// Homotopy traces (dilation, straight-line, schedule).
    Homotopy(Common),
    /// Deform a convex base through a kernel-span Jacobian.
    Deform(Common),
    /// Chord-arc paths and ratio estimates.
    ChordArc(Common),
    /// List catalog scenarios.
    Catalog(Common),
}

#[derive(Args)]
struct Common {
    /// Catalog scenario id.
    #[arg(long)]
    scenario: Option<String>,
    /// Inline JSON scenario, or a path to one.
    #[arg(long, conflicts_with = "scenario")]
    spec: Option<String>,
    /// Report destination (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for SVG figures.
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Omit the timestamp so reports are byte-identical across runs.
    #[arg(long)]
    no_timestamp: bool,
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    max_degree: Option<usize>,
    /// Homotopy mode: dilation, straight-line or schedule.
    #[arg(long)]
    mode: Option<String>,
    /// Worker threads for the parallel core.
    #[arg(long, env = "QD_THREADS")]
    threads: Option<usize>,
}

fn split(sub: Sub) -> (Command, Common) {
    match sub {
        Sub::Kernel(c) => (Command::Kernel, c),
        Sub::Membership(c) => (Command::Membership, c),
        Sub::Identity(c) => (Command::Identity, c),
        Sub::QdpCheck(c) => (Command::QdpCheck, c),
        Sub::Homotopy(c) => (Command::Homotopy, c),
        Sub::Deform(c) => (Command::Deform, c),
        Sub::ChordArc(c) => (Command::ChordArc, c),
        Sub::Catalog(c) => (Command::Catalog, c),
    }
}

fn load(common: &Common) -> Result<Option<Scenario>, CliError> {
    match (&common.scenario, &common.spec) {
        (Some(id), _) => find(id).map(Some),
        (None, Some(spec)) => {
            let text = if spec.trim_start().starts_with('{') {
                spec.clone()
            } else {
                fs::read_to_string(spec)?
            };
            Scenario::parse(&text).map(Some)
        }
        (None, None) => Ok(None),
    }
}

fn write_svgs(dir: &Path, svgs: &[(String, String)]) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    for (name, body) in svgs {
        fs::write(dir.join(name), body)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, common) = split(cli.command);
    if let Some(n) = common.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let timestamp = (!common.no_timestamp).then(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    });
    let opts = Options {
        seed: common.seed,
        frames: common.frames,
        max_degree: common.max_degree,
        mode: common.mode.clone(),
        svg: common.svg.clone(),
    };

    let loaded = load(&common);
    let id = match &loaded {
        Ok(Some(s)) => Some(s.id.clone()),
        _ => common.scenario.clone(),
    };
    let outcome = loaded.and_then(|s| {
        let out = run(cmd, s.as_ref(), &opts)?;
        if let Some(dir) = &opts.svg {
            write_svgs(dir, &out.svgs)?;
        }
        Ok((s, out))
    });
    let (report, code) = match &outcome {
        Ok((s, out)) => {
            let seed = s.as_ref().map(|s| opts.seed.unwrap_or(s.seed));
            (envelope(cmd, id.as_deref(), seed, out, timestamp), out.exit_code())
        }
        Err(e) => {
            eprintln!("qd: {e}");
            (error_report(cmd, id.as_deref(), e, timestamp), 1)
        }
    };
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    let written = match &common.out {
        Some(path) => fs::write(path, &text),
        None => std::io::stdout().write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("qd: cannot write report: {e}");
        return ExitCode::from(1);
    }
    ExitCode::from(code as u8)
}
