use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use telag_core::encode_sign_changes;

use crate::io::{read_ticks, write_symbols};
use crate::{data, parse_session, CliError};

#[derive(Args)]
pub struct EncodeArgs {
    /// Tick CSV with timestamp and price columns
    pub ticks: PathBuf,
    /// Label recorded in the output; defaults to the input file stem
    #[arg(long)]
    pub label: Option<String>,
    /// Time-of-day filter START,END applied to the encoded events
    #[arg(long)]
    pub session: Option<String>,
    /// Output symbol file; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &EncodeArgs) -> Result<(), CliError> {
    let session = args.session.as_deref().map(parse_session).transpose()?;
    let ticks = read_ticks(&args.ticks)?;
    let stem = args.ticks.file_stem().and_then(|s| s.to_str()).unwrap_or("series");
    let label = args.label.as_deref().unwrap_or(stem);
    let mut series = encode_sign_changes(&ticks, label)
        .map_err(|e| data(format!("{}: {e}", args.ticks.display())))?;
    if let Some((start, end)) = session {
        series = series.filter_session(start, end);
    }

    let mut buf = Vec::new();
    write_symbols(&series, &mut buf).map_err(|e| data(format!("encoding failed: {e}")))?;
    match &args.out {
        Some(path) => fs::write(path, buf).map_err(|e| data(format!("{}: {e}", path.display()))),
        None => {
            if std::io::stdout().write_all(&buf).is_err() {
                std::process::exit(0);
            }
            Ok(())
        }
    }
}
