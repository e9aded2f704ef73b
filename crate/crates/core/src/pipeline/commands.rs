use std::path::{Path, PathBuf};

use serde_json::json;

use super::{Exit, Outcome, PipelineError, Workspace};
use crate::abstraction::{abstract_to_fsm, complete_with_idle, extract_classes, minimize, ClassAlphabet};
use crate::codegen::{analyze, generate_code, inject_fault, parse_program, Fault, FaultKind, GclProgram};
use crate::fsm::Fsm;
use crate::harness::{run_suite, validate_log, ExecutionLog, Wrapper};
use crate::model::Interface;
use crate::policy::{derive_reference, Policy};
use crate::report::content_hash;
use crate::sfsm::Sfsm;
use crate::testgen::{concretize, generate_h, generate_w, validate_h, ConcreteSuite, Method, TestSuite};

struct Artifact {
    path: PathBuf,
    text: String,
    hash: String,
}

fn read(ws: &Workspace, rel: &Path) -> Result<Artifact, PipelineError> {
    let path = ws.path(rel);
    let text = std::fs::read_to_string(&path).map_err(|source| PipelineError::Read {
        path: path.clone(),
        source,
    })?;
    let hash = content_hash(text.as_bytes());
    Ok(Artifact { path, text, hash })
}

fn write(ws: &Workspace, rel: &Path, text: &str) -> Result<String, PipelineError> {
    let path = ws.path(rel);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| PipelineError::Write {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(&path, text).map_err(|source| PipelineError::Write {
        path: path.clone(),
        source,
    })?;
    Ok(content_hash(text.as_bytes()))
}

fn format_err(path: &Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn check_upstream(artifact: &Artifact, recorded: Option<&str>, upstream: &Artifact) -> Result<(), PipelineError> {
    if recorded == Some(upstream.hash.as_str()) {
        Ok(())
    } else {
        Err(PipelineError::HashMismatch {
            artifact: artifact.path.clone(),
            upstream: upstream.path.clone(),
            recorded: recorded.unwrap_or("nothing").to_string(),
            actual: upstream.hash.clone(),
        })
    }
}

/// The reference as later stages see it: interface, SFSM, classes and the
/// idle completion.
struct Reference {
    iface: Interface,
    sfsm: Artifact,
    classes: ClassAlphabet,
    completed: Sfsm,
}

fn load_reference(ws: &Workspace) -> Result<Reference, PipelineError> {
    let iface_file = read(ws, &ws.config.interface)?;
    let iface = Interface::from_json(&iface_file.text).map_err(|e| format_err(&iface_file.path, e))?;
    let sfsm = read(ws, &ws.config.sfsm)?;
    let (r, upstream) = Sfsm::from_json(&sfsm.text, &iface).map_err(|e| format_err(&sfsm.path, e))?;
    let policy = read(ws, &ws.config.policy)?;
    check_upstream(&sfsm, upstream.as_deref(), &policy)?;
    let classes = extract_classes(&r, &iface).map_err(|e| format_err(&sfsm.path, e))?;
    let completed = complete_with_idle(&r, &classes);
    Ok(Reference {
        iface,
        sfsm,
        classes,
        completed,
    })
}

fn load_fsm(ws: &Workspace, reference: &Reference) -> Result<(Fsm, Artifact), PipelineError> {
    let file = read(ws, &ws.config.fsm)?;
    let (fsm, upstream) = Fsm::from_json(&file.text).map_err(|e| format_err(&file.path, e))?;
    check_upstream(&file, upstream.as_deref(), &reference.sfsm)?;
    Ok((fsm, file))
}

fn load_suite(ws: &Workspace, fsm_file: &Artifact) -> Result<(TestSuite, Artifact), PipelineError> {
    let file = read(ws, &ws.config.suite)?;
    let suite = TestSuite::from_json(&file.text).map_err(|e| format_err(&file.path, e))?;
    check_upstream(&file, suite.meta.reference_hash.as_deref(), fsm_file)?;
    Ok((suite, file))
}

fn load_program(ws: &Workspace, reference: &Reference) -> Result<(GclProgram, Artifact), PipelineError> {
    let file = read(ws, &ws.config.program)?;
    let prog = parse_program(&file.text).map_err(|e| format_err(&file.path, e))?;
    check_upstream(&file, prog.reference_hash.as_deref(), &reference.sfsm)?;
    Ok((prog, file))
}

/// Derives the reference SFSM from the policy and writes the interface and
/// SFSM artifacts.
pub fn cmd_derive(ws: &Workspace) -> Result<Outcome, PipelineError> {
    let policy_file = read(ws, &ws.config.policy)?;
    let policy = Policy::load(&policy_file.path).map_err(|e| format_err(&policy_file.path, e))?;
    let r = derive_reference(&policy).map_err(|e| format_err(&policy_file.path, e))?;
    write(ws, &ws.config.interface, &policy.iface.to_json())?;
    write(ws, &ws.config.sfsm, &r.to_json(&policy.iface, Some(&policy_file.hash)))?;
    Ok(Outcome::pass(vec![format!(
        "derive: {} controller transitions, {} risk states, {} reference transitions",
        policy.controller_transitions().count(),
        r.states.len(),
        r.transitions.len()
    )]))
}

/// Abstracts the completed reference to a minimized FSM.
pub fn cmd_abstract(ws: &Workspace) -> Result<Outcome, PipelineError> {
    let reference = load_reference(ws)?;
    let full = abstract_to_fsm(&reference.completed, &reference.classes, &reference.iface)
        .map_err(|e| format_err(&reference.sfsm.path, e))?;
    let fsm = minimize(&full);
    write(ws, &ws.config.fsm, &fsm.to_json(Some(&reference.sfsm.hash)))?;
    if let Some(text_path) = &ws.config.fsm_text {
        write(ws, text_path, &fsm.to_text())?;
    }
    let mut lines = vec![format!(
        "abstract: {} classes ({} uncovered input valuations), {} states, {} after minimization",
        reference.classes.len(),
        reference.classes.uncovered,
        full.n(),
        fsm.n()
    )];
    if fsm.n() < full.n() {
        lines.push("abstract: the reference has equivalent risk states".into());
    }
    Ok(Outcome::pass(lines))
}

/// Generates the abstract and concrete test suites.
pub fn cmd_testgen(ws: &Workspace) -> Result<Outcome, PipelineError> {
    let reference = load_reference(ws)?;
    let (fsm, fsm_file) = load_fsm(ws, &reference)?;
    let m = ws.config.m.unwrap_or(fsm.n());
    if m < fsm.n() {
        return Err(PipelineError::Usage(format!(
            "m = {m} is below the reference state count n = {}",
            fsm.n()
        )));
    }
    let generated = match ws.config.method {
        Method::H => generate_h(&fsm, m),
        Method::W => generate_w(&fsm, m),
    };
    let mut suite = generated.map_err(|e| format_err(&fsm_file.path, e))?;
    suite.meta.reference_hash = Some(fsm_file.hash.clone());
    let suite_hash = write(ws, &ws.config.suite, &suite.to_json())?;
    let concrete = concretize(&suite, &reference.classes).map_err(|e| format_err(&fsm_file.path, e))?;
    write(
        ws,
        &ws.config.concrete_suite,
        &concrete.to_json(&reference.iface, Some(&suite_hash)),
    )?;
    Ok(Outcome::pass(vec![format!(
        "testgen: {}-Method, m = {m}, n = {}, {} cases, {} input symbols",
        suite.meta.method,
        suite.meta.n,
        suite.cases.len(),
        suite.total_length()
    )]))
}

fn parse_fault(spec: &str, default_seed: u64) -> Result<Fault, PipelineError> {
    if spec.contains(':') {
        spec.parse().map_err(PipelineError::Usage)
    } else {
        let kind: FaultKind = spec.parse().map_err(PipelineError::Usage)?;
        Ok(Fault {
            kind,
            seed: default_seed,
        })
    }
}

/// Generates the supervisor program, optionally with an injected fault.
pub fn cmd_codegen(ws: &Workspace) -> Result<Outcome, PipelineError> {
    let reference = load_reference(ws)?;
    let mut prog = generate_code(&reference.completed, &reference.classes, &reference.iface);
    prog.interface_path = ws.config.interface.to_string_lossy().replace('\\', "/");
    prog.reference_hash = Some(reference.sfsm.hash.clone());
    let mut lines = Vec::new();
    if let Some(spec) = &ws.config.mutate {
        let fault = parse_fault(spec, ws.config.seed)?;
        prog = inject_fault(&prog, fault, &reference.iface).map_err(|e| PipelineError::Usage(e.to_string()))?;
        lines.push(format!("codegen: injected fault {fault}"));
    }
    write(ws, &ws.config.program, &prog.render(&reference.iface))?;
    lines.insert(
        0,
        format!(
            "codegen: {} commands over {} control states",
            prog.commands.len(),
            prog.states.len()
        ),
    );
    Ok(Outcome::pass(lines))
}

/// Executes the suite against the program and writes the execution log.
pub fn cmd_run(ws: &Workspace) -> Result<Outcome, PipelineError> {
    let reference = load_reference(ws)?;
    let (fsm, fsm_file) = load_fsm(ws, &reference)?;
    let (suite, suite_file) = load_suite(ws, &fsm_file)?;
    let (prog, prog_file) = load_program(ws, &reference)?;
    let wrapper = Wrapper::new(&reference.classes, &reference.completed, &reference.iface);
    let (verdicts, mut log) = run_suite(&suite, &prog, &fsm, &wrapper).map_err(|e| format_err(&prog_file.path, e))?;
    log.summary.suite_hash = Some(suite_file.hash);
    log.summary.program_hash = Some(prog_file.hash);
    write(ws, &ws.config.log, &log.to_jsonl())?;
    let mut lines = vec![format!(
        "run: {} cases, {} passed, {} failed",
        log.summary.cases, log.summary.passed, log.summary.failed
    )];
    if let Some((i, v)) = verdicts.iter().enumerate().find(|(_, v)| !v.is_pass()) {
        lines.push(format!("run: case {i} {v}"));
    }
    let exit = if log.all_passed() { Exit::Pass } else { Exit::Fail };
    Ok(Outcome { exit, lines })
}

/// Runs the suite validator, the log validator and the static analyzer and
/// writes an aggregated report.
pub fn cmd_validate(ws: &Workspace) -> Result<Outcome, PipelineError> {
    let reference = load_reference(ws)?;
    let (fsm, fsm_file) = load_fsm(ws, &reference)?;
    let (suite, suite_file) = load_suite(ws, &fsm_file)?;
    let (prog, prog_file) = load_program(ws, &reference)?;
    let log_file = read(ws, &ws.config.log)?;
    let log = ExecutionLog::from_jsonl(&log_file.text).map_err(|e| format_err(&log_file.path, e))?;
    check_upstream(&log_file, log.summary.suite_hash.as_deref(), &suite_file)?;
    check_upstream(&log_file, log.summary.program_hash.as_deref(), &prog_file)?;

    let concrete_file = read(ws, &ws.config.concrete_suite)?;
    let (concrete, recorded) = ConcreteSuite::from_json(&concrete_file.text, &reference.iface)
        .map_err(|e| format_err(&concrete_file.path, e))?;
    check_upstream(&concrete_file, recorded.as_deref(), &suite_file)?;
    let expected = concretize(&suite, &reference.classes).map_err(|e| format_err(&suite_file.path, e))?;
    let concrete_ok = concrete == expected;

    let val_h = validate_h(&suite, &fsm);
    let val_log = validate_log(&log, &suite, &reference.classes);
    let analysis = analyze(&prog, &reference.completed, fsm.n());
    let validators_ok = val_h.passed() && val_log.passed() && analysis.passed() && concrete_ok;
    let exit = if !validators_ok {
        Exit::ValidatorError
    } else if !log.all_passed() {
        Exit::Fail
    } else {
        Exit::Pass
    };
    let report = json!({
        "val_h": val_h,
        "val_log": val_log,
        "static_analysis": analysis,
        "concrete_suite_matches": concrete_ok,
        "cases": log.summary.cases,
        "passed": log.summary.passed,
        "failed": log.summary.failed,
        "exit_code": exit.code(),
    });
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    write(ws, &ws.config.report, &text)?;

    let mut lines = vec![
        format!("validate: Val_H {val_h}"),
        format!("validate: Val_log {val_log}"),
        format!(
            "validate: static analysis {} (guards {}, states {}, m = {}, n = {})",
            if analysis.passed() { "pass" } else { "fail" },
            if analysis.guards_match { "match" } else { "differ" },
            if analysis.states_match { "match" } else { "differ" },
            analysis.state_count_m,
            analysis.reference_n
        ),
    ];
    if !concrete_ok {
        lines.push("validate: concrete suite does not match the abstract suite".into());
    }
    Ok(Outcome { exit, lines })
}

/// All stages in order. The exit status is the worst of `run` and
/// `validate`.
pub fn cmd_pipeline(ws: &Workspace) -> Result<Outcome, PipelineError> {
    let mut lines = Vec::new();
    let mut exit = Exit::Pass;
    for stage in [
        cmd_derive,
        cmd_abstract,
        cmd_testgen,
        cmd_codegen,
        cmd_run,
        cmd_validate,
    ] {
        let out = stage(ws)?;
        lines.extend(out.lines);
        exit = exit.max(out.exit);
    }
    Ok(Outcome { exit, lines })
}
