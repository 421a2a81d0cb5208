//! `gammaflag`: one JSON document on stdout, diagnostics on stderr, exit 0 only when checks pass.

mod commands;
mod config;

use clap::Parser;
use commands::{CmdResult, Outcome};
use config::{expand_args, Cli, Command, Format, RunConfig};
use serde_json::json;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

const EXIT_FAILED: u8 = 1;
const EXIT_ERROR: u8 = 2;

fn command_name(c: Command) -> &'static str {
    match c {
        Command::Describe => "describe",
        Command::Spectra => "spectra",
        Command::PositivePoint => "positive-point",
        Command::Mirror => "mirror",
        Command::Integrals => "integrals",
        Command::Gamma => "gamma",
        Command::Asymptotics => "asymptotics",
    }
}

fn run(c: Command, cfg: &RunConfig) -> CmdResult {
    match c {
        Command::Describe => commands::describe(cfg),
        Command::Spectra => commands::spectra(cfg),
        Command::PositivePoint => commands::positive_point(cfg),
        Command::Mirror => commands::mirror_cmd(cfg),
        Command::Integrals => commands::integrals(cfg),
        Command::Gamma => commands::gamma(cfg),
        Command::Asymptotics => commands::asymptotics(cfg),
    }
}

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("GAMMAFLAG_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| format!("GAMMAFLAG_THREADS must be a positive integer, got '{v}'"))?;
    if n == 0 {
        return Err("GAMMAFLAG_THREADS must be positive".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn file_stem(command: &str, label: &str) -> String {
    let safe: String = label.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
    format!("{command}_{safe}")
}

fn write_plots(dir: &Path, stem: &str, out: &Outcome) -> Result<Vec<String>, String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let mut written = vec![];
    for (name, series) in &out.plots {
        let path = dir.join(format!("{stem}_{name}.dat"));
        let mut text = String::new();
        for (x, y) in series {
            text.push_str(&format!("{x:e} {y:e}\n"));
        }
        std::fs::write(&path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        written.push(path.display().to_string());
    }
    Ok(written)
}

fn write_csv(out: &Outcome) -> Result<(), String> {
    let mut w = csv::Writer::from_writer(std::io::stdout());
    w.write_record(&out.header).map_err(|e| e.to_string())?;
    for r in &out.rows {
        w.write_record(r).map_err(|e| e.to_string())?;
    }
    w.flush().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let args = match expand_args(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_ERROR);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let name = command_name(cli.command);
    let label = cli.run.label().unwrap_or_default();
    let result = init_threads().and_then(|_| run(cli.command, &cli.run));
    let mut out = match result {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            if cli.run.format() == Format::Json {
                let doc = json!({ "command": name, "space": label, "ok": false, "error": e });
                println!("{}", serde_json::to_string_pretty(&doc).expect("error document serializes"));
            }
            return ExitCode::from(EXIT_ERROR);
        }
    };
    if let Some(dir) = &cli.run.emit_plot_data {
        match write_plots(dir, &file_stem(name, &label), &out) {
            Ok(files) => {
                for f in &files {
                    eprintln!("wrote {f}");
                }
                out.doc["plot_files"] = json!(files);
            }
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_ERROR);
            }
        }
    }
    match cli.run.format() {
        Format::Json => {
            out.doc["command"] = json!(name);
            out.doc["ok"] = json!(out.ok);
            let mut stdout = std::io::stdout().lock();
            let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&out.doc).expect("document serializes"));
        }
        Format::Csv => {
            if let Err(e) = write_csv(&out) {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_ERROR);
            }
        }
    }
    if out.ok {
        ExitCode::SUCCESS
    } else {
        eprintln!("{name}: checks failed");
        ExitCode::from(EXIT_FAILED)
    }
}
