use std::collections::BTreeMap;

use serde::Serialize;

use super::GclProgram;
use crate::sfsm::Sfsm;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct GuardDiff {
    /// `state=S & guard` entries of the reference absent from the program.
    pub missing: Vec<String>,
    /// Program entries absent from the reference.
    pub extra: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct StateDiff {
    pub missing: Vec<String>,
    pub extra: Vec<String>,
    /// `(program, reference)` initial states when they differ.
    pub initial: Option<(String, String)>,
    /// Commands whose next state differs from the reference transition.
    pub retargeted: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StaticAnalysisReport {
    pub guards_match: bool,
    pub guard_diff: GuardDiff,
    pub states_match: bool,
    pub state_diff: StateDiff,
    /// Number of control states of the program.
    pub state_count_m: usize,
    /// State count of the minimized reference abstraction.
    pub reference_n: usize,
    pub m_equals_n: bool,
    pub flat_structure_ok: bool,
}

impl StaticAnalysisReport {
    pub fn passed(&self) -> bool {
        self.guards_match && self.states_match && self.m_equals_n && self.flat_structure_ok
    }
}

fn key(state: &str, guard: &str) -> String {
    format!("state={state} & {guard}")
}

fn multiset(keys: impl Iterator<Item = String>) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for k in keys {
        *m.entry(k).or_insert(0) += 1;
    }
    m
}

fn surplus(a: &BTreeMap<String, usize>, b: &BTreeMap<String, usize>) -> Vec<String> {
    let mut out = Vec::new();
    for (k, &n) in a {
        let other = b.get(k).copied().unwrap_or(0);
        out.extend(std::iter::repeat_n(k.clone(), n.saturating_sub(other)));
    }
    out
}

/// Compares `p` against the completed reference `r` without executing it.
/// `reference_n` is the state count of the minimized abstraction of `r`.
pub fn analyze(p: &GclProgram, r: &Sfsm, reference_n: usize) -> StaticAnalysisReport {
    let code = multiset(p.commands.iter().map(|c| key(&c.state_test, &c.guard.to_string())));
    let spec = multiset(r.transitions.iter().map(|t| key(&t.src, &t.guard.to_string())));
    let guard_diff = GuardDiff {
        missing: surplus(&spec, &code),
        extra: surplus(&code, &spec),
    };

    let code_states = p.mentioned_states();
    let spec_states: std::collections::BTreeSet<&str> = r.states.iter().map(String::as_str).collect();
    let targets: BTreeMap<String, &str> = r
        .transitions
        .iter()
        .map(|t| (key(&t.src, &t.guard.to_string()), t.tgt.as_str()))
        .collect();
    let retargeted = p
        .commands
        .iter()
        .filter_map(|c| {
            let k = key(&c.state_test, &c.guard.to_string());
            match targets.get(&k) {
                Some(&t) if t != c.next_state => Some(format!("{k}: next={}, expected {t}", c.next_state)),
                _ => None,
            }
        })
        .collect();
    let state_diff = StateDiff {
        missing: spec_states.difference(&code_states).map(|s| s.to_string()).collect(),
        extra: code_states.difference(&spec_states).map(|s| s.to_string()).collect(),
        initial: (p.initial != r.initial).then(|| (p.initial.clone(), r.initial.clone())),
        retargeted,
    };

    let declared: std::collections::BTreeSet<&str> = p.states.iter().map(String::as_str).collect();
    let flat_structure_ok = code.values().all(|&n| n == 1)
        && p.commands
            .iter()
            .all(|c| declared.contains(c.state_test.as_str()) && declared.contains(c.next_state.as_str()));

    let state_count_m = code_states.len();
    StaticAnalysisReport {
        guards_match: guard_diff.missing.is_empty() && guard_diff.extra.is_empty(),
        guard_diff,
        states_match: state_diff == StateDiff::default(),
        state_diff,
        state_count_m,
        reference_n,
        m_equals_n: state_count_m == reference_n,
        flat_structure_ok,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codegen::tests::fixture;
    use crate::model::Guard;

    #[test]
    fn generated_program_passes() {
        let (_, done, _, prog) = fixture();
        let report = analyze(&prog, &done, done.states.len());
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.state_count_m, 5);
    }

    #[test]
    fn edited_guard_atom_is_a_diff_pair() {
        let (_, done, _, mut prog) = fixture();
        let i = prog
            .commands
            .iter()
            .position(|c| c.guard.to_string().contains("near"))
            .unwrap();
        let original = prog.commands[i].guard.to_string();
        let edited = original.replacen("near", "away", 1);
        prog.commands[i].guard = Guard::parse(&edited).unwrap();
        let report = analyze(&prog, &done, done.states.len());
        assert!(!report.guards_match);
        let st = &prog.commands[i].state_test;
        assert_eq!(report.guard_diff.missing, [key(st, &original)]);
        assert_eq!(report.guard_diff.extra, [key(st, &edited)]);
    }

    #[test]
    fn extra_state_counts() {
        let (_, done, _, mut prog) = fixture();
        prog.states.push("HSx".into());
        let report = analyze(&prog, &done, done.states.len());
        assert!(!report.states_match);
        assert_eq!(report.state_diff.extra, ["HSx"]);
        assert_eq!(report.state_count_m, done.states.len() + 1);
        assert!(!report.m_equals_n);
    }

    #[test]
    fn retargeted_command_detected() {
        let (_, done, _, mut prog) = fixture();
        let c = prog.commands.iter_mut().find(|c| c.next_state != c.state_test).unwrap();
        c.next_state = c.state_test.clone();
        let report = analyze(&prog, &done, done.states.len());
        assert!(report.guards_match);
        assert_eq!(report.state_diff.retargeted.len(), 1);
    }
}
