use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use supconf::pipeline::{
    cmd_abstract, cmd_codegen, cmd_derive, cmd_pipeline, cmd_run, cmd_testgen, cmd_validate, Exit, PipelineConfig,
    Workspace,
};
use supconf::testgen::Method;

/// Safety-supervisor conformance toolchain.
#[derive(Parser)]
#[command(name = "supconf", version)]
struct Cli {
    /// JSON configuration file; its directory is the default base directory.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory that relative artifact paths resolve against.
    #[arg(long, global = true)]
    dir: Option<PathBuf>,
    #[command(flatten)]
    paths: PathFlags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct PathFlags {
    #[arg(long, global = true)]
    policy: Option<PathBuf>,
    #[arg(long, global = true)]
    interface: Option<PathBuf>,
    #[arg(long, global = true)]
    sfsm: Option<PathBuf>,
    #[arg(long, global = true)]
    fsm: Option<PathBuf>,
    #[arg(long, global = true)]
    fsm_text: Option<PathBuf>,
    #[arg(long, global = true)]
    suite: Option<PathBuf>,
    #[arg(long, global = true)]
    concrete_suite: Option<PathBuf>,
    #[arg(long, global = true)]
    program: Option<PathBuf>,
    #[arg(long, global = true)]
    log: Option<PathBuf>,
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Args)]
struct GenFlags {
    /// Test generation method: h or w.
    #[arg(long)]
    method: Option<Method>,
    /// Fault-domain bound; defaults to the reference state count.
    #[arg(long)]
    m: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Derive the reference SFSM from the policy.
    Derive,
    /// Abstract the reference to a minimized FSM.
    Abstract,
    /// Generate the abstract and concrete test suites.
    Testgen(GenFlags),
    /// Generate the supervisor program.
    Codegen {
        /// Inject a fault, `output|transfer|add-state[:seed]`.
        #[arg(long)]
        mutate: Option<String>,
    },
    /// Execute the suite against the program.
    Run,
    /// Run the suite, log and static validators.
    Validate,
    /// Run every stage in order.
    Pipeline {
        #[command(flatten)]
        gen: GenFlags,
        #[arg(long)]
        mutate: Option<String>,
    },
}

fn workspace(cli: &Cli) -> Result<Workspace, String> {
    let (mut config, config_dir) = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read `{}`: {e}", path.display()))?;
            let dir = path.parent().map(PathBuf::from).unwrap_or_default();
            (PipelineConfig::from_json(&text).map_err(|e| e.to_string())?, dir)
        }
        None => (PipelineConfig::default(), PathBuf::new()),
    };
    let p = &cli.paths;
    let overrides = [
        (&p.policy, &mut config.policy),
        (&p.interface, &mut config.interface),
        (&p.sfsm, &mut config.sfsm),
        (&p.fsm, &mut config.fsm),
        (&p.suite, &mut config.suite),
        (&p.concrete_suite, &mut config.concrete_suite),
        (&p.program, &mut config.program),
        (&p.log, &mut config.log),
        (&p.report, &mut config.report),
    ];
    for (flag, slot) in overrides {
        if let Some(v) = flag {
            *slot = v.clone();
        }
    }
    if p.fsm_text.is_some() {
        config.fsm_text = p.fsm_text.clone();
    }
    if let Some(seed) = p.seed {
        config.seed = seed;
    }
    let (gen, mutate) = match &cli.command {
        Command::Testgen(gen) => (Some(gen), None),
        Command::Codegen { mutate } => (None, mutate.as_ref()),
        Command::Pipeline { gen, mutate } => (Some(gen), mutate.as_ref()),
        _ => (None, None),
    };
    if let Some(gen) = gen {
        if let Some(method) = gen.method {
            config.method = method;
        }
        if gen.m.is_some() {
            config.m = gen.m;
        }
    }
    if let Some(spec) = mutate {
        config.mutate = Some(spec.clone());
    }
    let base = cli.dir.clone().unwrap_or(config_dir);
    Workspace::new(config, base).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(Exit::Usage.code() as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let ws = match workspace(&cli) {
        Ok(ws) => ws,
        Err(msg) => {
            eprintln!("supconf: {msg}");
            return ExitCode::from(Exit::Usage.code() as u8);
        }
    };
    let result = match cli.command {
        Command::Derive => cmd_derive(&ws),
        Command::Abstract => cmd_abstract(&ws),
        Command::Testgen(_) => cmd_testgen(&ws),
        Command::Codegen { .. } => cmd_codegen(&ws),
        Command::Run => cmd_run(&ws),
        Command::Validate => cmd_validate(&ws),
        Command::Pipeline { .. } => cmd_pipeline(&ws),
    };
    match result {
        Ok(outcome) => {
            for line in &outcome.lines {
                println!("{line}");
            }
            ExitCode::from(outcome.exit.code() as u8)
        }
        Err(e) => {
            eprintln!("supconf: {e}");
            ExitCode::from(e.exit().code() as u8)
        }
    }
}
