use clap::{Parser, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;
use varpois_cli::commands::{dispatch, Command, Options};
use varpois_cli::dsl::{parse_session_with, Session};
use varpois_cli::report::{Item, Report};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "varpois", version, about = "Variational Poisson calculus from the command line")]
struct Cli {
    #[arg(long, value_enum, default_value = "text", global = true)]
    format: Format,
    /// Degree bound for rational solution searches.
    #[arg(long, global = true)]
    degree_bound: Option<u32>,
    /// Session file with `vars`, `params` and definitions.
    #[arg(long, global = true)]
    seed_file: Option<PathBuf>,
    /// Number of variables, overriding the session file.
    #[arg(long, global = true)]
    vars: Option<usize>,
    /// Constant parameters, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    params: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

fn session(cli: &Cli) -> varpois::Result<Session> {
    let mut prefix = String::new();
    if let Some(n) = cli.vars {
        prefix.push_str(&format!("vars {n}\n"));
    }
    if !cli.params.is_empty() {
        prefix.push_str(&format!("params {}\n", cli.params.join(" ")));
    }
    let mut s = parse_session_with(&prefix, Session::default())?;
    if let Some(path) = &cli.seed_file {
        let src = std::fs::read_to_string(path).map_err(|e| varpois::Error::Parse {
            line: 0,
            col: 0,
            msg: format!("cannot read {}: {e}", path.display()),
        })?;
        s = parse_session_with(&src, s)?;
        if let Some(n) = cli.vars {
            s.config.ell = n;
        }
    }
    Ok(s)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("VARPOIS_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // Fails only if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let report = match session(&cli) {
        Ok(s) => dispatch(
            &cli.command,
            &s,
            &Options {
                degree_bound: cli.degree_bound,
            },
        ),
        Err(e) => {
            let mut r = Report::new(cli.command.name());
            r.push(Item::error("session", e));
            r
        }
    };
    match cli.format {
        Format::Json => println!("{}", report.to_json()),
        Format::Text => print!("{}", report.to_text()),
    }
    ExitCode::from(report.exit_code() as u8)
}
