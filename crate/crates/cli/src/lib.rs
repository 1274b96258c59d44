//! Command-line driver for drowsegate.
//!
//! Exit codes: 0 success, 2 invalid input or configuration, 3 runtime
//! abort, 4 benchmark budget exceeded.

pub mod commands;
pub mod error;
pub mod report;
pub mod settings;
pub mod source;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{value_parser, Arg, ArgMatches, Command};

pub use error::{CliError, CliResult};
pub use settings::Settings;

fn setting_args() -> Vec<Arg> {
    let mut args = vec![Arg::new("config")
        .long("config")
        .value_name("PATH")
        .value_parser(value_parser!(PathBuf))
        .help("key=value config file; flags override it")];
    for key in settings::KEYS {
        args.push(Arg::new(*key).long(*key).value_name("VALUE").help(settings::help(key)));
    }
    args
}

fn positional(name: &'static str, help: &'static str) -> Arg {
    Arg::new(name)
        .required(true)
        .value_parser(value_parser!(PathBuf))
        .help(help)
}

pub fn command() -> Command {
    let sub = |name: &'static str, about: &'static str| Command::new(name).about(about).args(setting_args());
    Command::new("drowsegate")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Drowsiness detection from grayscale video")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(
            sub("detect", "Run the pipeline over a frame source and log alarm events")
                .arg(positional("source", "directory of PGM/PPM frames or a .y4m file")),
        )
        .subcommand(
            sub(
                "eval-eyes",
                "Static open/closed accuracy over open/ and closed/ image sets",
            )
            .arg(positional("dataset", "directory with open/ and closed/ subdirectories")),
        )
        .subcommand(
            sub("compare-thresholds", "White-percentage gap of each binarization method")
                .arg(positional("open", "directory of open-eye windows or face chips"))
                .arg(positional("closed", "directory of closed-eye windows or face chips")),
        )
        .subcommand(
            sub("calibrate", "Sweep the threshold coefficient over labeled sequences").arg(positional(
                "dir",
                "directory of <name>.closures sidecars with observations",
            )),
        )
        .subcommand(
            sub("bench", "Per-stage latency and throughput over a frame source")
                .arg(positional("source", "directory of PGM/PPM frames or a .y4m file"))
                .arg(
                    Arg::new("closures")
                        .long("closures")
                        .value_name("PATH")
                        .value_parser(value_parser!(PathBuf))
                        .help("closure sidecar for detection-latency measurement"),
                ),
        )
}

/// Defaults, then `--config`, then explicit flags.
pub fn resolve_settings(m: &ArgMatches) -> CliResult<Settings> {
    let mut s = Settings::default();
    if let Some(path) = m.get_one::<PathBuf>("config") {
        s.apply_file(path)?;
    }
    for key in settings::KEYS {
        if let Some(v) = m.get_one::<String>(key) {
            s.apply(key, v).map_err(|e| CliError::Usage(format!("--{e}")))?;
        }
    }
    Ok(s)
}

fn path<'a>(m: &'a ArgMatches, id: &str) -> &'a Path {
    m.get_one::<PathBuf>(id).expect("required argument")
}

fn dispatch(m: &ArgMatches) -> CliResult<()> {
    let (name, sub) = m.subcommand().expect("subcommand required");
    let s = resolve_settings(sub)?;
    match name {
        "detect" => commands::detect::detect(&s, path(sub, "source")),
        "eval-eyes" => commands::eval::eval_eyes(&s, path(sub, "dataset")),
        "compare-thresholds" => commands::compare::compare_thresholds(&s, path(sub, "open"), path(sub, "closed")),
        "calibrate" => commands::calibrate::calibrate(&s, path(sub, "dir")),
        "bench" => commands::detect::bench(
            &s,
            path(sub, "source"),
            sub.get_one::<PathBuf>("closures").map(PathBuf::as_path),
        ),
        _ => unreachable!("unknown subcommand {name}"),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(&matches) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("drowsegate: {e}");
            e.exit_code()
        }
    }
}
