#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use args::{Cli, Command, Format};

const EXIT_DOMAIN: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_IO: u8 = 4;

fn exit_code(e: &ctstat::Error) -> u8 {
    match e {
        ctstat::Error::Domain(_) | ctstat::Error::Capability(_) => EXIT_DOMAIN,
        ctstat::Error::Numeric(_) | ctstat::Error::Accuracy { .. } => EXIT_NUMERIC,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut common = cli.common.clone();
    let format = *common.format.get_or_insert(match cli.command {
        Command::Compare(_) => Format::Json,
        _ => Format::Csv,
    });
    let config = json!({
        "ctstat": env!("CARGO_PKG_VERSION"),
        "argv": std::env::args().collect::<Vec<_>>(),
        "common": common,
        "run": cli.command,
    });

    let payload = match commands::run(&cli.command, &common) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("ctstat {}: {e}", cli.command.name());
            return ExitCode::from(exit_code(&e));
        }
    };

    let written = match &common.output {
        Some(path) => File::create(path).and_then(|f| {
            let mut w = BufWriter::new(f);
            output::write(&mut w, &config, &payload, format)?;
            w.flush()
        }),
        None => output::write(&mut io::stdout().lock(), &config, &payload, format),
    };
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ctstat: cannot write output: {e}");
            ExitCode::from(EXIT_IO)
        }
    }
}
