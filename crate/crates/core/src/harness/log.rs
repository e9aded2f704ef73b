use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{HarnessError, Verdict};
use crate::abstraction::ClassAlphabet;
use crate::model::{Output, Valuation};
use crate::report::ValidationReport;
use crate::testgen::TestSuite;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub case_idx: usize,
    pub step_idx: usize,
    pub input_symbol: String,
    pub input_valuation: Valuation,
    pub observed_output_valuation: Output,
    /// `None` when the observed output lies outside the reference range.
    pub observed_symbol: Option<String>,
    pub expected_symbol: String,
    pub step_verdict: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogSummary {
    pub cases: usize,
    pub passed: usize,
    pub failed: usize,
    pub suite_hash: Option<String>,
    #[serde(default)]
    pub program_hash: Option<String>,
    pub verdicts: Vec<Verdict>,
}

/// Per-step records ordered by (case, step), followed by a summary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionLog {
    pub entries: Vec<LogEntry>,
    pub summary: LogSummary,
}

impl ExecutionLog {
    pub fn new(entries: Vec<LogEntry>, verdicts: Vec<Verdict>) -> ExecutionLog {
        let passed = verdicts.iter().filter(|v| v.is_pass()).count();
        ExecutionLog {
            entries,
            summary: LogSummary {
                cases: verdicts.len(),
                passed,
                failed: verdicts.len() - passed,
                suite_hash: None,
                program_hash: None,
                verdicts,
            },
        }
    }

    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    /// JSON Lines: one entry per line, the summary last.
    pub fn to_jsonl(&self) -> String {
        let mut text = String::new();
        for e in &self.entries {
            text.push_str(&serde_json::to_string(e).expect("entry serializes"));
            text.push('\n');
        }
        text.push_str(&serde_json::to_string(&self.summary).expect("summary serializes"));
        text.push('\n');
        text
    }

    pub fn from_jsonl(text: &str) -> Result<ExecutionLog, HarnessError> {
        let lines: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        let ((last_no, last), body) = lines.split_last().ok_or(HarnessError::Log {
            line: 1,
            message: "empty log".into(),
        })?;
        let bad = |line: usize, e: serde_json::Error| HarnessError::Log {
            line,
            message: e.to_string(),
        };
        let summary = serde_json::from_str(last).map_err(|e| bad(*last_no, e))?;
        let entries = body
            .iter()
            .map(|(n, l)| serde_json::from_str(l).map_err(|e| bad(*n, e)))
            .collect::<Result<_, _>>()?;
        Ok(ExecutionLog { entries, summary })
    }
}

/// First violation found by [`validate_log`], tagged with its clause.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum LogViolation {
    CaseMissing {
        case: usize,
    },
    CaseRepeated {
        case: usize,
    },
    CaseOutOfOrder {
        case: usize,
        position: usize,
    },
    CaseUnknown {
        case: usize,
    },
    StepIndex {
        case: usize,
        position: usize,
        found: usize,
    },
    StepMismatch {
        case: usize,
        step: usize,
        expected: String,
        found: String,
    },
    StepMissing {
        case: usize,
        step: usize,
    },
    StepExtra {
        case: usize,
        step: usize,
    },
    ValuationMismatch {
        case: usize,
        step: usize,
    },
    StepVerdict {
        case: usize,
        step: usize,
    },
    CaseVerdict {
        case: usize,
    },
    Summary {
        message: String,
    },
}

impl LogViolation {
    pub fn clause(&self) -> &'static str {
        use LogViolation::*;
        match self {
            CaseMissing { .. } | CaseRepeated { .. } | CaseOutOfOrder { .. } | CaseUnknown { .. } => "a",
            StepIndex { .. } | StepMismatch { .. } | StepMissing { .. } | StepExtra { .. } => "b",
            ValuationMismatch { .. } => "c",
            StepVerdict { .. } | CaseVerdict { .. } | Summary { .. } => "d",
        }
    }
}

impl fmt::Display for LogViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use LogViolation::*;
        write!(f, "clause ({}): ", self.clause())?;
        match self {
            CaseMissing { case } => write!(f, "case {case} is missing"),
            CaseRepeated { case } => write!(f, "case {case} appears more than once"),
            CaseOutOfOrder { case, position } => write!(f, "case {case} logged at position {position}"),
            CaseUnknown { case } => write!(f, "case {case} is not in the suite"),
            StepIndex { case, position, found } => {
                write!(f, "case {case}: entry {position} carries step index {found}")
            }
            StepMismatch {
                case,
                step,
                expected,
                found,
            } => write!(f, "case {case}, step {step}: input {found}, suite has {expected}"),
            StepMissing { case, step } => write!(f, "case {case}: step {step} is missing"),
            StepExtra { case, step } => write!(f, "case {case}: step {step} is not in the suite"),
            ValuationMismatch { case, step } => {
                write!(
                    f,
                    "case {case}, step {step}: input valuation is not the class representative"
                )
            }
            StepVerdict { case, step } => write!(f, "case {case}, step {step}: verdict contradicts the symbols"),
            CaseVerdict { case } => write!(f, "case {case}: verdict contradicts its steps"),
            Summary { message } => write!(f, "summary: {message}"),
        }
    }
}

/// Checks that a log faithfully records an execution of `suite`. Clauses
/// are checked in order over the whole log.
pub fn validate_log(log: &ExecutionLog, suite: &TestSuite, classes: &ClassAlphabet) -> ValidationReport<LogViolation> {
    match check(log, suite, classes) {
        Ok(()) => ValidationReport::Pass,
        Err(v) => ValidationReport::Fail(v),
    }
}

fn check(log: &ExecutionLog, suite: &TestSuite, classes: &ClassAlphabet) -> Result<(), LogViolation> {
    use LogViolation::*;

    // Consecutive entries with the same case index form one run.
    let mut runs: Vec<(usize, Vec<&LogEntry>)> = Vec::new();
    for e in &log.entries {
        match runs.last_mut() {
            Some((c, run)) if *c == e.case_idx => run.push(e),
            _ => runs.push((e.case_idx, vec![e])),
        }
    }

    // (a)
    let expected: Vec<usize> = (0..suite.cases.len()).filter(|&c| !suite.cases[c].is_empty()).collect();
    let mut seen = BTreeSet::new();
    for (position, (case, _)) in runs.iter().enumerate() {
        if *case >= suite.cases.len() {
            return Err(CaseUnknown { case: *case });
        }
        if !seen.insert(*case) {
            return Err(CaseRepeated { case: *case });
        }
        match expected.get(position) {
            Some(&want) if want == *case => {}
            Some(&want) if want < *case => return Err(CaseMissing { case: want }),
            _ => return Err(CaseOutOfOrder { case: *case, position }),
        }
    }
    if let Some(&want) = expected.get(runs.len()) {
        return Err(CaseMissing { case: want });
    }
    if log.summary.verdicts.len() != suite.cases.len() || log.summary.cases != suite.cases.len() {
        return Err(Summary {
            message: format!(
                "{} verdicts for {} cases, summary claims {}",
                log.summary.verdicts.len(),
                suite.cases.len(),
                log.summary.cases
            ),
        });
    }

    // (b)
    for (case, run) in &runs {
        let symbols = &suite.cases[*case];
        for (position, e) in run.iter().enumerate() {
            if e.step_idx != position {
                return Err(StepIndex {
                    case: *case,
                    position,
                    found: e.step_idx,
                });
            }
            match symbols.get(position) {
                None => {
                    return Err(StepExtra {
                        case: *case,
                        step: position,
                    })
                }
                Some(&x) if suite.alphabet[x] != e.input_symbol => {
                    return Err(StepMismatch {
                        case: *case,
                        step: position,
                        expected: suite.alphabet[x].clone(),
                        found: e.input_symbol.clone(),
                    })
                }
                Some(_) => {}
            }
        }
        if run.len() < symbols.len() {
            return Err(StepMissing {
                case: *case,
                step: run.len(),
            });
        }
    }

    // (c)
    for e in &log.entries {
        let rep = classes.get(&e.input_symbol).map(|c| &c.representative);
        if rep != Some(&e.input_valuation) {
            return Err(ValuationMismatch {
                case: e.case_idx,
                step: e.step_idx,
            });
        }
    }

    // (d)
    let mut first_fail: Vec<Option<usize>> = vec![None; suite.cases.len()];
    for e in &log.entries {
        let matches = e.observed_symbol.as_deref() == Some(e.expected_symbol.as_str());
        let claimed = match e.step_verdict.as_str() {
            "PASS" => true,
            "FAIL" => false,
            _ => !matches,
        };
        if claimed != matches {
            return Err(StepVerdict {
                case: e.case_idx,
                step: e.step_idx,
            });
        }
        if !matches && first_fail[e.case_idx].is_none() {
            first_fail[e.case_idx] = Some(e.step_idx);
        }
    }
    for (case, (v, ff)) in log.summary.verdicts.iter().zip(&first_fail).enumerate() {
        let consistent = match (v, ff) {
            (Verdict::Pass, None) => true,
            (Verdict::Fail { step, .. }, Some(f)) => step == f,
            _ => false,
        };
        if !consistent {
            return Err(CaseVerdict { case });
        }
    }
    let passed = log.summary.verdicts.iter().filter(|v| v.is_pass()).count();
    if log.summary.passed != passed || log.summary.failed != suite.cases.len() - passed {
        return Err(Summary {
            message: format!(
                "counts {}/{} disagree with verdicts",
                log.summary.passed, log.summary.failed
            ),
        });
    }
    Ok(())
}
