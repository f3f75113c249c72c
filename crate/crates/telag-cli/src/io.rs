//! File formats: tick CSV, symbol files, series manifests, and report
//! output.
//!
//! Timestamps travel as decimal seconds in files and as integer nanoseconds
//! in memory; parsing is exact decimal arithmetic, so writing a series and
//! reading it back reproduces the identical timestamps.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use telag_core::{encode_sign_changes, SymbolSeries, Tick, NANOS_PER_SEC};

use crate::{data, CliError};

/// Parses decimal seconds ("12.5", "-3", "0.000000001") into exact
/// nanoseconds. At most nine fractional digits are representable.
pub fn parse_decimal_seconds(text: &str) -> Result<i64, String> {
    let s = text.trim();
    let (negative, rest) = match s.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, s),
    };
    let (int_part, frac_part) = match rest.split_once('.') {
        Some((i, f)) => (i, f),
        None => (rest, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(format!("empty timestamp {text:?}"));
    }
    if int_part.chars().any(|c| !c.is_ascii_digit())
        || frac_part.chars().any(|c| !c.is_ascii_digit())
    {
        return Err(format!("timestamp {text:?} is not a plain decimal number"));
    }
    if frac_part.len() > 9 {
        return Err(format!("timestamp {text:?} has sub-nanosecond digits"));
    }
    let secs: i64 = if int_part.is_empty() {
        0
    } else {
        int_part.parse().map_err(|_| format!("timestamp {text:?} out of range"))?
    };
    let mut frac: i64 = if frac_part.is_empty() { 0 } else { frac_part.parse().unwrap() };
    frac *= 10i64.pow(9 - frac_part.len() as u32);
    let magnitude = secs
        .checked_mul(NANOS_PER_SEC)
        .and_then(|ns| ns.checked_add(frac))
        .ok_or_else(|| format!("timestamp {text:?} out of range"))?;
    Ok(if negative { -magnitude } else { magnitude })
}

/// Formats nanoseconds as decimal seconds with nine fractional digits.
pub fn format_seconds(t_ns: i64) -> String {
    let sign = if t_ns < 0 { "-" } else { "" };
    let mag = t_ns.unsigned_abs();
    format!("{sign}{}.{:09}", mag / NANOS_PER_SEC as u64, mag % NANOS_PER_SEC as u64)
}

/// Reads a tick CSV. The header must name `timestamp` and `price` columns;
/// extra columns are ignored. Timestamps must be non-decreasing and prices
/// positive; violations name the offending line.
// The `!(price > 0.0)` form keeps NaN on the rejecting branch.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn read_ticks(path: &Path) -> Result<Vec<Tick>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| data(format!("{}: {e}", path.display())))?;
    let headers = reader.headers().map_err(|e| data(format!("{}: {e}", path.display())))?;
    let col = |name: &str| headers.iter().position(|h| h == name);
    let t_col = col("timestamp")
        .ok_or_else(|| data(format!("{}: missing 'timestamp' column", path.display())))?;
    let p_col =
        col("price").ok_or_else(|| data(format!("{}: missing 'price' column", path.display())))?;

    let mut ticks = Vec::new();
    let mut prev_ns = i64::MIN;
    for record in reader.records() {
        let record = record.map_err(|e| data(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(0, |p| p.line());
        let at = |msg: String| data(format!("{}:{line}: {msg}", path.display()));
        let t_ns = parse_decimal_seconds(&record[t_col]).map_err(at)?;
        let price: f64 =
            record[p_col].parse().map_err(|_| at(format!("bad price {:?}", &record[p_col])))?;
        if !(price > 0.0) {
            return Err(at(format!("price {price} must be positive")));
        }
        if t_ns < prev_ns {
            return Err(at("timestamps must be non-decreasing".into()));
        }
        prev_ns = t_ns;
        ticks.push(Tick::new(t_ns, price));
    }
    Ok(ticks)
}

/// Reads a symbol file: a `# alphabet_size=K label=NAME` directive, a
/// `timestamp,symbol` header, then one event per line.
pub fn read_symbols(path: &Path) -> Result<SymbolSeries, CliError> {
    let text = fs::read_to_string(path).map_err(|e| data(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate();

    let (_, directive) = lines.next().filter(|(_, l)| l.starts_with('#')).ok_or_else(|| {
        data(format!("{}:1: expected a '# alphabet_size=...' line", path.display()))
    })?;
    let alphabet: u32 = directive[1..]
        .split_whitespace()
        .find_map(|tok| tok.strip_prefix("alphabet_size="))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| data(format!("{}:1: bad or missing alphabet_size", path.display())))?;
    let label = directive
        .split_once("label=")
        .map(|(_, rest)| rest.trim().to_string())
        .filter(|l| !l.is_empty())
        .ok_or_else(|| data(format!("{}:1: missing label", path.display())))?;

    match lines.next() {
        Some((_, "timestamp,symbol")) => {}
        _ => return Err(data(format!("{}:2: expected header 'timestamp,symbol'", path.display()))),
    }

    let mut times = Vec::new();
    let mut symbols = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let n = idx + 1;
        let at = |msg: String| data(format!("{}:{n}: {msg}", path.display()));
        let (t, s) =
            line.split_once(',').ok_or_else(|| at("expected 'timestamp,symbol'".into()))?;
        times.push(parse_decimal_seconds(t).map_err(at)?);
        symbols.push(s.trim().parse().map_err(|_| at(format!("bad symbol {s:?}")))?);
    }
    SymbolSeries::new(times, symbols, alphabet, label)
        .map_err(|e| data(format!("{}: {e}", path.display())))
}

/// Writes a series in the symbol-file format read by [`read_symbols`].
pub fn write_symbols(series: &SymbolSeries, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "# alphabet_size={} label={}", series.alphabet_size(), series.label())?;
    writeln!(out, "timestamp,symbol")?;
    for (&t, &s) in series.times_ns().iter().zip(series.symbols()) {
        writeln!(out, "{},{s}", format_seconds(t))?;
    }
    Ok(())
}

/// Loads a series from either format: symbol files are detected by their
/// leading `#` directive, anything else is read as ticks and encoded into
/// binary price-change symbols. The optional session window keeps only
/// events inside that time of day.
pub fn load_series(
    path: &Path,
    label: Option<&str>,
    session: Option<(f64, f64)>,
) -> Result<SymbolSeries, CliError> {
    let mut head = [0u8; 1];
    let is_symbols = fs::File::open(path)
        .and_then(|mut f| std::io::Read::read(&mut f, &mut head))
        .map_err(|e| data(format!("{}: {e}", path.display())))?
        == 1
        && head[0] == b'#';

    let mut series = if is_symbols {
        read_symbols(path)?
    } else {
        let ticks = read_ticks(path)?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("series");
        encode_sign_changes(&ticks, label.unwrap_or(stem))
            .map_err(|e| data(format!("{}: {e}", path.display())))?
    };
    if let Some(name) = label {
        if name != series.label() {
            series = SymbolSeries::new(
                series.times_ns().to_vec(),
                series.symbols().to_vec(),
                series.alphabet_size(),
                name,
            )
            .map_err(|e| data(format!("{}: {e}", path.display())))?;
        }
    }
    if let Some((start, end)) = session {
        series = series.filter_session(start, end);
    }
    Ok(series)
}

/// One manifest row; `path` is already resolved against the manifest's
/// directory.
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: String,
    pub group: String,
}

/// Reads a manifest CSV with columns `path,label,group`.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, CliError> {
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| data(format!("{}: {e}", path.display())))?;
    let headers = reader.headers().map_err(|e| data(format!("{}: {e}", path.display())))?;
    let col = |name: &str| -> Result<usize, CliError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| data(format!("{}: missing '{name}' column", path.display())))
    };
    let (p_col, l_col, g_col) = (col("path")?, col("label")?, col("group")?);

    let mut entries = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| data(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(0, |p| p.line());
        if record[p_col].is_empty() || record[l_col].is_empty() || record[g_col].is_empty() {
            return Err(data(format!(
                "{}:{line}: path, label, and group must all be non-empty",
                path.display()
            )));
        }
        entries.push(ManifestEntry {
            path: base.join(&record[p_col]),
            label: record[l_col].to_string(),
            group: record[g_col].to_string(),
        });
    }
    if entries.is_empty() {
        return Err(data(format!("{}: manifest lists no series", path.display())));
    }
    Ok(entries)
}

/// Shortest exact rendering of a float; tiny magnitudes switch to
/// scientific notation instead of a wall of leading zeros.
pub fn fmt_float(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-4 {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| data(format!("{}: {e}", dir.display())))
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| data(format!("{}: {e}", path.display())))
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| data(format!("serialization failed: {e}")))
}

/// Writes the fully resolved parameters of a run next to its outputs.
pub fn write_run_config<T: Serialize>(
    dir: &Path,
    command: &str,
    params: &T,
) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct RunConfig<'a, T> {
        command: &'a str,
        params: &'a T,
    }
    write_file(dir, "run_config.json", &to_json_pretty(&RunConfig { command, params })?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_seconds_exact_round_trip() {
        for ns in [0i64, 1, 999_999_999, 1_000_000_000, 86_400_123_456_789, -2_500_000_000] {
            assert_eq!(parse_decimal_seconds(&format_seconds(ns)).unwrap(), ns);
        }
    }

    #[test]
    fn decimal_seconds_accepts_short_fractions() {
        assert_eq!(parse_decimal_seconds("12.5").unwrap(), 12_500_000_000);
        assert_eq!(parse_decimal_seconds("3").unwrap(), 3_000_000_000);
        assert_eq!(parse_decimal_seconds(".25").unwrap(), 250_000_000);
    }

    #[test]
    fn decimal_seconds_rejects_junk() {
        for bad in ["", "1e3", "1.2.3", "abc", "1.0000000001", "-"] {
            assert!(parse_decimal_seconds(bad).is_err(), "{bad:?} accepted");
        }
    }
}
