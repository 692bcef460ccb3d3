//! `mseg`: build, evaluate and export measure segments from the command line.
//!
//! One subcommand per construction: `segment-build` for finite and σ-finite
//! common segments, `oseg-build` for open segments behind the fuzzed or
//! exact interval adapter, `refute` for window-family refutation
//! certificates.  Exit codes: 0 success, 2 bad input or configuration, 3
//! numerical resolution or capacity failure.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mseg_core::counterexample::{refute_half_set, refute_half_set_periodized};
use mseg_core::density::{Density, DensityFamily};
use mseg_core::interval_set::IntervalSet;
use mseg_core::oseg::{
    block_chain_gap, common_o_segment, BlockSpace, IntervalSpace, OpenSegment, SpaceAdapter,
};
use mseg_core::segment::common_segment;
use mseg_core::sigma::{exhaust, glue, half_line_prefix};
use mseg_core::Error;

/// Calibration threshold deciding the success exit code of build commands.
const PASS_TOL: f64 = 1e-6;
/// Open-segment builds run against the coarser acceptance threshold.
const OSEG_PASS_TOL: f64 = 1e-4;

#[derive(Parser)]
#[command(name = "mseg", version, about = "Common segments and O-segments for families of densities")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a common segment for a density family and export it as JSONL.
    SegmentBuild(SegmentArgs),
    /// Build a common O-segment behind an interval-space adapter.
    OsegBuild(OsegArgs),
    /// Produce a refutation certificate for a candidate half-measure set.
    Refute(RefuteArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exact,
    Fuzzed,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Jsonl,
    Csv,
}

#[derive(Args)]
struct SegmentArgs {
    /// JSON file holding an array of densities.
    #[arg(long)]
    densities: PathBuf,
    #[arg(long, default_value_t = 10)]
    depth: usize,
    /// Solver tolerance for chord root-finding.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Build a σ-finite segment covering [0, horizon) instead of a finite one.
    #[arg(long)]
    horizon: Option<f64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Jsonl)]
    format: Format,
    /// Print the set at this parameter instead of the full export.
    #[arg(long)]
    at: Option<f64>,
}

#[derive(Args)]
struct OsegArgs {
    /// JSON file holding [f] or [f, g]; g defaults to the constant 1.
    #[arg(long, required_unless_present = "block_demo")]
    densities: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    depth: u32,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Mode::Fuzzed)]
    mode: Mode,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Jsonl)]
    format: Format,
    #[arg(long)]
    at: Option<f64>,
    /// Instead of a build, sweep random block-space chains of this many
    /// blocks and emit a CSV of their largest measure jumps.
    #[arg(long)]
    block_demo: Option<usize>,
}

#[derive(Args)]
struct RefuteArgs {
    /// JSON file holding the candidate set (list of intervals).
    #[arg(long)]
    set: PathBuf,
    #[arg(long, default_value_t = 1024)]
    q_max: u32,
    /// Fold the set into the unit interval first.
    #[arg(long)]
    periodize: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::SegmentBuild(a) => cmd_segment_build(a),
        Cmd::OsegBuild(a) => cmd_oseg_build(a),
        Cmd::Refute(a) => cmd_refute(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Parse(_) | Error::Validation(_) | Error::Range(_) | Error::Domain(_)
                | Error::Capacity(_) => {
                    if matches!(e, Error::Capacity(_)) {
                        ExitCode::from(3)
                    } else {
                        ExitCode::from(2)
                    }
                }
                _ => ExitCode::from(3),
            }
        }
    }
}

fn check_config(depth: usize, tol: f64) -> Result<(), Error> {
    if depth > 14 {
        return Err(Error::Validation(format!("depth {depth} exceeds the cap 14")));
    }
    if tol < 1e-12 {
        return Err(Error::Validation(format!("tolerance {tol} below the floor 1e-12")));
    }
    Ok(())
}

fn read_densities(path: &PathBuf) -> Result<Vec<Density>, Error> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn write_output(out: &Option<PathBuf>, bytes: &[u8]) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, bytes)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| Error::Parse(format!("stdout: {e}"))),
    }
}

fn cmd_segment_build(a: SegmentArgs) -> Result<ExitCode, Error> {
    check_config(a.depth, a.tol)?;
    let members = read_densities(&a.densities)?;
    let family = DensityFamily::new(members)?;

    if let Some(horizon) = a.horizon {
        let ex = exhaust(&family, half_line_prefix, horizon, 8)?;
        let seg = glue(&ex, &family, a.depth.min(8))?;
        if let Some(t) = a.at {
            println!("{}", seg.evaluate(t)?);
            return Ok(ExitCode::SUCCESS);
        }
        let mut buf = Vec::new();
        seg.export_jsonl(&mut buf, 1 << a.depth.min(8))?;
        write_output(&a.out, &buf)?;
        let mut worst = 0.0f64;
        for b in seg.boundaries() {
            let set = seg.evaluate(*b)?;
            for f in &seg.densities().members {
                worst = worst.max((f.integrate_over(&set)? - b).abs());
            }
        }
        eprintln!("max boundary calibration error: {worst:.3e}");
        return Ok(exit_by_tol(worst, PASS_TOL));
    }

    let family = family.normalize()?;
    let universe = IntervalSet::interval(0.0, 1.0);
    let seg = common_segment(&family, &universe, a.depth, a.tol)?;
    if let Some(t) = a.at {
        println!("{}", seg.evaluate(t)?);
        return Ok(ExitCode::SUCCESS);
    }
    let mut buf = Vec::new();
    match a.format {
        Format::Jsonl => seg
            .export_jsonl(&mut buf)
            .map_err(|e| Error::Parse(format!("export: {e}")))?,
        Format::Csv => {
            let n = seg.table().len() - 1;
            buf.extend_from_slice(b"t,measure\n");
            for (m, set) in seg.table().iter().enumerate() {
                buf.extend_from_slice(
                    format!("{},{}\n", m as f64 / n as f64, set.measure()).as_bytes(),
                );
            }
        }
    }
    write_output(&a.out, &buf)?;
    let report = seg.verify();
    eprintln!("max calibration error: {:.3e}", report.worst_error());
    if !report.ok(PASS_TOL) {
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn oseg_export(seg: &OpenSegment, f: &Density, g: &Density) -> Result<Vec<u8>, Error> {
    let mut buf = Vec::new();
    for (r, set) in seg.entries() {
        let rec = serde_json::json!({
            "t": r,
            "set": set,
            "mu": [f.integrate_over(set)?, g.integrate_over(set)?],
        });
        buf.extend_from_slice(rec.to_string().as_bytes());
        buf.push(b'\n');
    }
    Ok(buf)
}

fn cmd_oseg_build(a: OsegArgs) -> Result<ExitCode, Error> {
    check_config(a.depth as usize, a.tol)?;

    if let Some(n) = a.block_demo {
        let bs = BlockSpace::new(n)?;
        let mut buf = Vec::from(&b"chain,max_jump\n"[..]);
        let mut all_ok = true;
        for trial in 0..1000u64 {
            // cheap seeded thresholds; determinism matters, distribution does not
            let ths: Vec<f64> = (0..n)
                .map(|i| {
                    let x = (a.seed ^ trial)
                        .wrapping_mul(6364136223846793005)
                        .wrapping_add(i as u64 * 1442695040888963407);
                    (x >> 11) as f64 / (1u64 << 53) as f64
                })
                .collect();
            let jump = block_chain_gap(&bs, &ths)?;
            all_ok &= jump >= 0.5;
            let chain = ths
                .iter()
                .map(|t| format!("{t:.6}"))
                .collect::<Vec<_>>()
                .join("|");
            buf.extend_from_slice(format!("{chain},{jump}\n").as_bytes());
        }
        write_output(&a.out, &buf)?;
        return Ok(if all_ok { ExitCode::SUCCESS } else { ExitCode::from(3) });
    }

    let members = read_densities(a.densities.as_ref().unwrap())?;
    let (f, g) = match members.len() {
        1 => (members[0].clone(), Density::constant(1.0)),
        2 => (members[0].clone(), members[1].clone()),
        n => {
            return Err(Error::Validation(format!(
                "oseg-build takes one or two densities, got {n}"
            )))
        }
    };
    let universe = IntervalSet::open_interval(0.0, 1.0);
    let sp: Box<dyn SpaceAdapter> = match a.mode {
        Mode::Exact => Box::new(IntervalSpace::exact(universe)?),
        Mode::Fuzzed => Box::new(IntervalSpace::fuzzed(universe, a.seed)?),
    };
    let seg = common_o_segment(sp.as_ref(), &f, &g, &IntervalSet::empty(), a.depth)?;
    if let Some(t) = a.at {
        println!("{}", seg.evaluate(t)?);
        return Ok(ExitCode::SUCCESS);
    }
    let buf = oseg_export(&seg, &f, &g)?;
    write_output(&a.out, &buf)?;
    let mut worst = 0.0f64;
    for (r, set) in seg.entries() {
        worst = worst.max((f.integrate_over(set)? - r).abs());
        worst = worst.max((g.integrate_over(set)? - r).abs());
    }
    eprintln!("max calibration error: {worst:.3e}");
    Ok(exit_by_tol(worst, OSEG_PASS_TOL))
}

fn cmd_refute(a: RefuteArgs) -> Result<ExitCode, Error> {
    let text = fs::read_to_string(&a.set)
        .map_err(|e| Error::Parse(format!("{}: {e}", a.set.display())))?;
    let e: IntervalSet = serde_json::from_str(&text)
        .map_err(|e| Error::Parse(format!("{}: {e}", a.set.display())))?;
    let cert = if a.periodize {
        refute_half_set_periodized(&e, a.q_max)?
    } else {
        refute_half_set(&e, a.q_max)?
    };
    let mut bytes = cert.to_json().to_string().into_bytes();
    bytes.push(b'\n');
    write_output(&a.out, &bytes)?;
    eprintln!(
        "violated at q = {} ({} indices)",
        cert.q,
        cert.violations.len()
    );
    Ok(ExitCode::SUCCESS)
}

fn exit_by_tol(worst: f64, tol: f64) -> ExitCode {
    if worst <= tol {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    }
}
