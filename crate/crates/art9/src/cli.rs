//! Command-line front end.
//!
//! Exit status: 0 on success, 1 on domain errors (assembly, range, illegal
//! instruction, timeout), 2 on usage errors (bad arguments, unreadable
//! input files).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use art9_core::isa::{assemble, disassemble};
use art9_core::sim::{run_functional, run_pipelined, write_trace_csv, MachineState, MemoryKind};
use art9_core::techmodel::{self, Estimate, Overrides};
use art9_core::transpiler::{transpile, TranspileOptions, DEFAULT_SPILL_BASE, DEFAULT_STACK_TOP};
use art9_core::ProgramImage;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{fixture_workloads, format_table, run_bench};
use crate::digest::state_digest;
use crate::formats::{parse_netlist, parse_tech_library, parse_tmem, write_tmem};

#[derive(Debug, Parser)]
#[command(name = "art9", version, about = "Toolchain for the ART-9 balanced-ternary RISC core")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Assemble ART-9 source into a .tmem image.
    Asm {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Disassemble a .tmem image.
    Disasm {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a program (.tmem image, or .s source) and print its final state.
    Run(RunArgs),
    /// Translate RV-32I assembly into ART-9 assembly.
    Transpile {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write the assembled image.
        #[arg(long)]
        image: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_STACK_TOP, allow_negative_numbers = true)]
        stack_top: i32,
        #[arg(long, default_value_t = DEFAULT_SPILL_BASE)]
        spill_base: i16,
        #[arg(long)]
        no_peephole: bool,
    },
    /// Estimate frequency, power and DMIPS/W.
    Estimate(EstimateArgs),
    /// Run every fixture benchmark in both simulator modes.
    Bench,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Functional,
    Pipeline,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Functional)]
    pub mode: Mode,
    /// Instruction budget (functional) or cycle budget (pipeline).
    #[arg(long, default_value_t = 10_000_000)]
    pub max_cycles: u64,
    /// Write a per-cycle CSV trace (pipeline mode).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Benchmark iterations the program performs, for per-iteration figures.
    #[arg(long)]
    pub iterations: Option<u64>,
    /// Initial TDM contents.
    #[arg(long)]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub tech: Option<PathBuf>,
    #[arg(long)]
    pub netlist: Option<PathBuf>,
    #[arg(long)]
    pub cycles_per_iter: Option<f64>,
    /// Total cycles, divided by --iterations.
    #[arg(long)]
    pub cycles: Option<f64>,
    #[arg(long)]
    pub iterations: Option<f64>,
    #[arg(long)]
    pub dmips_per_mhz: Option<f64>,
    #[arg(long)]
    pub freq_mhz: Option<f64>,
    #[arg(long)]
    pub power_w: Option<f64>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Domain(m) => m,
        }
    }
}

fn domain(e: impl std::fmt::Display) -> CliError {
    CliError::Domain(e.to_string())
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| domain(format!("{}: {e}", path.display())))
}

fn read_tmem(path: &Path) -> Result<ProgramImage, CliError> {
    parse_tmem(&read(path)?).map_err(|e| domain(format!("{}: {e}", path.display())))
}

/// A `.tmem` image, or assembly source when the extension is `.s`/`.asm`.
fn read_program(path: &Path) -> Result<ProgramImage, CliError> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("s" | "asm") => assemble(&read(path)?).map_err(|e| domain(format!("{}: {e}", path.display()))),
        _ => read_tmem(path),
    }
}

/// Sends `text` to `path`, or to `out` when no path is given.
fn emit(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => write_file(p, text),
        None => out.write_all(text.as_bytes()).map_err(domain),
    }
}

fn run(args: &RunArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if args.trace.is_some() && args.mode != Mode::Pipeline {
        return Err(CliError::Usage("--trace needs --mode pipeline".into()));
    }
    if args.iterations == Some(0) {
        return Err(CliError::Usage("--iterations must be positive".into()));
    }
    let image = read_program(&args.input)?;
    let data = args.data.as_deref().map(read_tmem).transpose()?;
    let mut state = MachineState::new();
    if let Some(d) = &data {
        state.load_image(d, MemoryKind::Tdm).map_err(domain)?;
    }
    state.load_image(&image, MemoryKind::Tim).map_err(domain)?;
    let mut report = String::new();
    match args.mode {
        Mode::Functional => {
            run_functional(&mut state, args.max_cycles).map_err(domain)?;
            report.push_str(&state_digest(&state));
            if let Some(n) = args.iterations {
                writeln!(report, "retired_per_iteration: {}", state.retired as f64 / n as f64).unwrap();
            }
        }
        Mode::Pipeline => {
            let stats = run_pipelined(&mut state, args.max_cycles, args.trace.is_some()).map_err(domain)?;
            report.push_str(&state_digest(&state));
            writeln!(report, "cycles: {}", stats.cycles).unwrap();
            writeln!(report, "load_use_stalls: {}", stats.load_use_stalls).unwrap();
            writeln!(report, "branch_value_stalls: {}", stats.branch_value_stalls).unwrap();
            writeln!(report, "branch_squashes: {}", stats.branch_squashes).unwrap();
            writeln!(report, "ipc: {:.4}", stats.ipc()).unwrap();
            if let Some(n) = args.iterations {
                let cpi = stats.cycles as f64 / n as f64;
                writeln!(report, "cycles_per_iteration: {cpi}").unwrap();
                let d = techmodel::dmips_per_mhz(cpi).map_err(domain)?;
                writeln!(report, "dmips_per_mhz: {d:.4}").unwrap();
            }
            if let Some(path) = &args.trace {
                let mut csv = String::new();
                write_trace_csv(&stats, &mut csv).expect("writing to a string");
                write_file(path, &csv)?;
            }
        }
    }
    out.write_all(report.as_bytes()).map_err(domain)
}

fn dmips_per_mhz_of(a: &EstimateArgs) -> Result<f64, CliError> {
    let usage = |m: &str| CliError::Usage(m.into());
    let sources = [a.dmips_per_mhz.is_some(), a.cycles_per_iter.is_some(), a.cycles.is_some()];
    if sources.iter().filter(|&&s| s).count() != 1 {
        return Err(usage("give exactly one of --dmips-per-mhz, --cycles-per-iter, --cycles"));
    }
    if a.iterations.is_some() != a.cycles.is_some() {
        return Err(usage("--cycles and --iterations go together"));
    }
    if let Some(d) = a.dmips_per_mhz {
        return Ok(d);
    }
    let cpi = match (a.cycles_per_iter, a.cycles, a.iterations) {
        (Some(c), _, _) => c,
        (None, Some(c), Some(n)) => c / n,
        _ => unreachable!("checked above"),
    };
    techmodel::dmips_per_mhz(cpi).map_err(domain)
}

pub fn format_estimate(e: &Estimate, with_gates: bool) -> String {
    let mut s = String::new();
    if with_gates {
        writeln!(s, "total_gates: {}", e.total_gates).unwrap();
    }
    writeln!(s, "critical_delay_ps: {:.1}", e.critical_delay_ps).unwrap();
    writeln!(s, "frequency_mhz: {:.3}", e.frequency_mhz).unwrap();
    writeln!(s, "power_w: {:.4e}", e.power_w).unwrap();
    writeln!(s, "dmips_per_mhz: {:.4}", e.dmips_per_mhz).unwrap();
    writeln!(s, "dmips: {:.3}", e.dmips).unwrap();
    writeln!(s, "dmips_per_watt: {:.4e}", e.dmips_per_watt).unwrap();
    s
}

fn estimate(a: &EstimateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let dmpm = dmips_per_mhz_of(a)?;
    let text = match (&a.tech, &a.netlist) {
        (Some(t), Some(n)) => {
            let lib = parse_tech_library(&read(t)?).map_err(|e| domain(format!("{}: {e}", t.display())))?;
            let nl = parse_netlist(&read(n)?).map_err(|e| domain(format!("{}: {e}", n.display())))?;
            let ov = Overrides { frequency_mhz: a.freq_mhz, power_w: a.power_w };
            format_estimate(&techmodel::estimate(&nl, &lib, dmpm, ov).map_err(domain)?, true)
        }
        (None, None) => {
            let (Some(f), Some(p)) = (a.freq_mhz, a.power_w) else {
                return Err(CliError::Usage("without --tech/--netlist, give --freq-mhz and --power-w".into()));
            };
            format_estimate(&techmodel::estimate_measured(dmpm, f, p).map_err(domain)?, false)
        }
        _ => return Err(CliError::Usage("--tech and --netlist go together".into())),
    };
    out.write_all(text.as_bytes()).map_err(domain)
}

/// Executes one parsed command, writing results to `out` and side notes to
/// `err`.
pub fn execute(cmd: &Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::Asm { input, output } => {
            let img = assemble(&read(input)?).map_err(|e| domain(format!("{}: {e}", input.display())))?;
            emit(output.as_deref(), &write_tmem(&img), out)
        }
        Command::Disasm { input, output } => emit(output.as_deref(), &disassemble(&read_tmem(input)?), out),
        Command::Run(args) => run(args, out),
        Command::Transpile { input, output, image, stack_top, spill_base, no_peephole } => {
            let opts = TranspileOptions { stack_top: *stack_top, spill_base: *spill_base, peephole: !no_peephole };
            let t = transpile(&read(input)?, &opts).map_err(|e| domain(format!("{}: {e}", input.display())))?;
            if let Some(p) = image {
                write_file(p, &write_tmem(&t.image))?;
            }
            let stats = format!("{}\n", t.stats);
            match output {
                Some(p) => {
                    write_file(p, &t.asm)?;
                    out.write_all(stats.as_bytes()).map_err(domain)
                }
                None => {
                    out.write_all(t.asm.as_bytes()).map_err(domain)?;
                    err.write_all(stats.as_bytes()).map_err(domain)
                }
            }
        }
        Command::Estimate(a) => estimate(a, out),
        Command::Bench => {
            let workloads = fixture_workloads().map_err(domain)?;
            let mut rows = Vec::new();
            for r in run_bench(&workloads) {
                rows.push(r.map_err(domain)?);
            }
            out.write_all(format_table(&rows).as_bytes()).map_err(domain)
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit status. Diagnostics go to `err` as one line.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return 2;
            }
            let _ = write!(out, "{e}");
            return 0;
        }
    };
    match execute(&cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.exit_code()
        }
    }
}
