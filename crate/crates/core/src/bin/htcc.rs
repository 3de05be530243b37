use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use indexmap::IndexMap;

use htcc::emit::{emit_program, EmitConfig, Target};
use htcc::eval::{parse_values, Evaluator, Value};
use htcc::frontend::ast::dump_ast;
use htcc::frontend::lexer::dump_tokens;
use htcc::frontend::{parse_source, tokenize, FrontendError};
use htcc::pipeline::{self, check_net, HtccError};
use htcc::refine::{ListMode, RefineConfig};
use htcc::simnet::{cycle_report, render_trace, simulate, SimOptions, Status, DEFAULT_MAX_CYCLES};

#[derive(Parser)]
#[command(name = "htcc", version, about = "Compile a small functional language to Handel-C process networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write Handel-C for a program
    Compile {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "de2-70")]
        target: TargetArg,
        /// Override the clock pin of the target
        #[arg(long)]
        clock_pin: Option<String>,
        /// Override the reset pin of the target
        #[arg(long)]
        reset_pin: Option<String>,
        /// Leave out the reset pin line
        #[arg(long)]
        no_reset: bool,
        /// Output path; `-` for stdout. Defaults to the input with `.hcc`
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// Evaluate a function on arguments
    Run {
        #[command(flatten)]
        common: Common,
        /// Comma-separated arguments: words, [lists] and (tuples)
        #[arg(long, default_value = "")]
        args: String,
    },
    /// Simulate the compiled network
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Bus values such as INPUT0=5 or INPUT1=[1,2,3]
        #[arg(long = "inputs", value_name = "BUS=VALUE")]
        inputs: Vec<String>,
        /// Entry arguments instead of bus values
        #[arg(long)]
        args: Option<String>,
        /// Write the channel trace here
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Shuffle the scheduling order with this seed
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_MAX_CYCLES)]
        max_cycles: u64,
    },
    /// Compare evaluation and simulation on random inputs
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1000)]
        cases: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Print the report as JSON
        #[arg(long)]
        json: bool,
    },
    /// Print an intermediate form
    Emit {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "net")]
        kind: EmitKind,
    },
}

#[derive(Args)]
struct Common {
    file: PathBuf,
    /// Function to compile or run; defaults to the one nothing else calls
    #[arg(long)]
    entry: Option<String>,
    #[arg(long, default_value = "vector")]
    list_mode: ListModeArg,
    /// Element count of a list parameter, NAME=N
    #[arg(long = "vec-len", value_name = "NAME=N")]
    vec_len: Vec<String>,
    /// Rounds to unroll a recursive entry function
    #[arg(long)]
    unroll: Option<u32>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetArg {
    #[value(name = "de2-70")]
    De270,
    De4,
    Generic,
}

#[derive(Clone, Copy, ValueEnum)]
enum ListModeArg {
    Vector,
    Stream,
}

#[derive(Clone, Copy, ValueEnum)]
enum EmitKind {
    Tokens,
    Ast,
    Types,
    Net,
}

impl Common {
    fn refine_config(&self) -> Result<RefineConfig, HtccError> {
        let mut vec_lens = Vec::new();
        for item in &self.vec_len {
            let (name, n) = item
                .split_once('=')
                .ok_or_else(|| HtccError::Usage(format!("--vec-len expects NAME=N, got `{item}`")))?;
            let n: u32 = n
                .parse()
                .ok()
                .filter(|&n| n >= 1)
                .ok_or_else(|| HtccError::Usage(format!("--vec-len {name}: `{n}` is not a positive count")))?;
            vec_lens.push((name.to_string(), n));
        }
        if self.unroll == Some(0) {
            return Err(HtccError::Usage("--unroll must be at least 1".into()));
        }
        Ok(RefineConfig {
            list_mode: match self.list_mode {
                ListModeArg::Vector => ListMode::Vector,
                ListModeArg::Stream => ListMode::Stream,
            },
            vec_lens,
            unroll: self.unroll,
            entry: self.entry.clone(),
        })
    }

    fn source(&self) -> Result<String, HtccError> {
        pipeline::read_source(&self.file)
    }
}

fn write_atomically(path: &Path, text: &str) -> Result<(), HtccError> {
    let io = |e: std::io::Error| HtccError::Io(format!("{}: {e}", path.display()));
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, text).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        io(e)
    })
}

fn parse_args(text: &str) -> Result<Vec<Value>, HtccError> {
    parse_values(text).map_err(|e| HtccError::Usage(format!("--args: {e}")))
}

fn run(cli: Cli) -> Result<(), HtccError> {
    match cli.command {
        Command::Compile {
            common,
            target,
            clock_pin,
            reset_pin,
            no_reset,
            output,
        } => {
            let cfg = common.refine_config()?;
            let (_, net) = pipeline::compile(&common.source()?, &cfg)?;
            let mut ecfg = EmitConfig::for_target(match target {
                TargetArg::De270 => Target::De270,
                TargetArg::De4 => Target::De4,
                TargetArg::Generic => Target::Generic,
            });
            if let Some(p) = clock_pin {
                ecfg.clock_pin = p;
            }
            if let Some(p) = reset_pin {
                ecfg.reset_pin = p;
            }
            ecfg.include_reset &= !no_reset;
            let text = emit_program(&net, &ecfg).source;
            match output {
                Some(p) if p.as_os_str() == "-" => print!("{text}"),
                Some(p) => write_atomically(&p, &text)?,
                None => write_atomically(&common.file.with_extension("hcc"), &text)?,
            }
        }
        Command::Run { common, args } => {
            let prog = pipeline::typecheck(&common.source()?)?;
            let entry = match &common.entry {
                Some(e) => e.clone(),
                None => htcc::refine::default_entry(&prog).ok_or_else(|| HtccError::Usage("empty program".into()))?,
            };
            let v = Evaluator::new(&prog).run(&entry, &parse_args(&args)?)?;
            println!("{}", v.hex());
        }
        Command::Simulate {
            common,
            inputs,
            args,
            trace,
            seed,
            max_cycles,
        } => {
            let (prog, net) = pipeline::compile(&common.source()?, &common.refine_config()?)?;
            let bus_values: IndexMap<String, Value> = match args {
                Some(a) => {
                    let given = parse_args(&a)?;
                    let unit = prog.unit(&net.entry).expect("entry exists");
                    let given = if given.len() + net.fixed_params.len() == unit.params.len() {
                        pipeline::full_args(&net, given)
                    } else {
                        given
                    };
                    pipeline::bus_inputs(&net, &given)?
                }
                None => {
                    let mut m = IndexMap::new();
                    for item in &inputs {
                        let (bus, value) = item
                            .split_once('=')
                            .ok_or_else(|| HtccError::Usage(format!("--inputs expects BUS=VALUE, got `{item}`")))?;
                        let mut vs = parse_args(value)?;
                        if vs.len() != 1 {
                            return Err(HtccError::Usage(format!("--inputs {bus}: expected one value")));
                        }
                        m.insert(bus.to_string(), vs.remove(0));
                    }
                    m
                }
            };
            let opts = SimOptions {
                max_cycles,
                trace: trace.is_some(),
                schedule_seed: seed,
            };
            let r = simulate(&net, &bus_values, &opts)?;
            for (bus, v) in &r.outputs {
                println!("{bus} = {}", v.hex());
            }
            if let Some(v) = pipeline::result_value(&net, &prog.unit(&net.entry).expect("entry exists").ret, &r) {
                println!("result = {}", v.hex());
            }
            print!("{}", cycle_report(&r));
            if let Some(p) = trace {
                std::fs::write(&p, render_trace(&r)).map_err(|e| HtccError::Io(format!("{}: {e}", p.display())))?;
            }
            if r.status != Status::Completed {
                return Err(HtccError::SimStatus(r.status));
            }
        }
        Command::Check {
            common,
            cases,
            seed,
            json,
        } => {
            let (prog, net) = pipeline::compile(&common.source()?, &common.refine_config()?)?;
            let name = common.file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let report = check_net(&name, &prog, &net, cases, seed, &SimOptions::default());
            if json {
                println!("{}", report.to_json());
            } else {
                print!("{}", report.render_text());
            }
            if !report.passed() {
                return Err(HtccError::CheckFailed(format!("{} mismatches", report.mismatch_count)));
            }
        }
        Command::Emit { common, kind } => {
            let src = common.source()?;
            let text = match kind {
                EmitKind::Tokens => dump_tokens(&tokenize(&src).map_err(FrontendError::from)?),
                EmitKind::Ast => dump_ast(&parse_source(&src)?),
                EmitKind::Types => pipeline::typecheck(&src)?.table.dump(),
                EmitKind::Net => pipeline::compile(&src, &common.refine_config()?)?.1.dump(),
            };
            print!("{text}");
        }
    }
    Ok(())
}

fn file_of(cli: &Cli) -> String {
    let common = match &cli.command {
        Command::Compile { common, .. }
        | Command::Run { common, .. }
        | Command::Simulate { common, .. }
        | Command::Check { common, .. }
        | Command::Emit { common, .. } => common,
    };
    common.file.display().to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let file = file_of(&cli);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let color = std::env::var("HTCC_COLOR").map(|v| v != "never").unwrap_or(true) && std::io::stderr().is_terminal();
            let text = e.render(&file);
            if color {
                eprintln!("\x1b[1;31merror\x1b[0m: {text}");
            } else {
                eprintln!("error: {text}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
