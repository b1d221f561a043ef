//! CSV writers. Every file has a header row, comma delimiters, `.` decimals
//! and LF line endings. Floats use Rust's shortest round-trip formatting so
//! output is byte-identical across reruns.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use csv::{Terminator, WriterBuilder};

use crate::attack::AttackOutcome;
use crate::bench::BenchRow;
use crate::metrics::{BatchSummary, ExitProfile, MetricsRecord};

pub const TIPS_HEADER: [&str; 2] = ["time", "tip_count"];
pub const TIP_HIST_HEADER: [&str; 2] = ["tip_count", "probability"];
pub const APPROVAL_HEADER: [&str; 3] = ["tx_id", "issue_time", "t_A"];
pub const CW_HEADER: [&str; 3] = ["tx_id", "elapsed", "weight"];
pub const EXIT_PROFILE_HEADER: [&str; 2] = ["rank", "probability"];
pub const SCALING_HEADER: [&str; 7] = ["lambda", "selector", "alpha", "mean_tips", "std_tips", "mean_tA", "std_tA"];
pub const ATTACK_HEADER: [&str; 7] =
    ["kind", "selector", "alpha", "kappa", "attacker_size", "honest_tips", "confidence_of_double_spend"];
pub const BENCH_HEADER: [&str; 5] = ["selector", "alpha", "weights_updated", "n", "seconds"];

/// Writes `header` followed by one record per row.
pub fn write_csv<W, I, R>(out: W, header: &[&str], rows: I) -> io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = WriterBuilder::new().terminator(Terminator::Any(b'\n')).from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>())?;
    }
    w.flush()
}

pub fn write_tips<W: Write>(out: W, record: &MetricsRecord) -> io::Result<()> {
    write_csv(out, &TIPS_HEADER, record.tip_series.iter().map(|&(t, l)| [t.to_string(), l.to_string()]))
}

pub fn write_tip_hist<W: Write>(out: W, record: &MetricsRecord) -> io::Result<()> {
    write_csv(out, &TIP_HIST_HEADER, record.tip_histogram().into_iter().map(|(l, p)| [l.to_string(), p.to_string()]))
}

pub fn write_approval<W: Write>(out: W, record: &MetricsRecord) -> io::Result<()> {
    write_csv(
        out,
        &APPROVAL_HEADER,
        record.approval_times.iter().map(|a| [a.tx.to_string(), a.issue_time.to_string(), a.t_a.to_string()]),
    )
}

pub fn write_cw<W: Write>(out: W, record: &MetricsRecord) -> io::Result<()> {
    write_csv(
        out,
        &CW_HEADER,
        record.cw_trajectories.iter().flat_map(|traj| {
            traj.points.iter().map(move |&(e, w)| [traj.tx.to_string(), e.to_string(), w.to_string()])
        }),
    )
}

/// Ranks start at 1.
pub fn write_exit_profile<W: Write>(out: W, profile: &ExitProfile) -> io::Result<()> {
    write_csv(
        out,
        &EXIT_PROFILE_HEADER,
        profile.probabilities.iter().enumerate().map(|(i, p)| [(i + 1).to_string(), p.to_string()]),
    )
}

pub fn write_scaling<W: Write>(out: W, rows: &[BatchSummary]) -> io::Result<()> {
    write_csv(
        out,
        &SCALING_HEADER,
        rows.iter().map(|r| {
            [
                r.lambda.to_string(),
                r.selector.label().to_string(),
                r.selector.alpha().to_string(),
                r.mean_tips.to_string(),
                r.std_tips.to_string(),
                r.mean_ta.to_string(),
                r.std_ta.to_string(),
            ]
        }),
    )
}

pub fn write_attack<W: Write>(out: W, rows: &[AttackOutcome]) -> io::Result<()> {
    write_csv(
        out,
        &ATTACK_HEADER,
        rows.iter().map(|r| {
            [
                r.kind.label().to_string(),
                r.selector.label().to_string(),
                r.selector.alpha().to_string(),
                r.kappa.to_string(),
                r.attacker_size.to_string(),
                r.honest_tips.to_string(),
                r.confidence.to_string(),
            ]
        }),
    )
}

pub fn write_bench<W: Write>(out: W, rows: &[BenchRow]) -> io::Result<()> {
    write_csv(
        out,
        &BENCH_HEADER,
        rows.iter().map(|r| {
            [
                r.selector.label().to_string(),
                r.selector.alpha().to_string(),
                r.weights_updated.to_string(),
                r.n.to_string(),
                r.seconds.to_string(),
            ]
        }),
    )
}

/// Creates (or truncates) `dir/name` and hands a buffered writer to `f`.
pub fn write_file<F>(dir: &Path, name: &str, f: F) -> io::Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> io::Result<()>,
{
    fs::create_dir_all(dir)?;
    let mut out = BufWriter::new(File::create(dir.join(name))?);
    f(&mut out)?;
    out.flush()
}

/// `key=value` lines in the given order, for `config_used.txt`.
pub fn write_config_used<W: Write>(mut out: W, entries: &[(String, String)]) -> io::Result<()> {
    for (k, v) in entries {
        writeln!(out, "{k}={v}")?;
    }
    Ok(())
}
