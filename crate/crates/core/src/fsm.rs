//! Deterministic, input-complete Mealy machines over finite symbol alphabets.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FsmError {
    #[error("malformed FSM file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("line {line}: {message}")]
    Text { line: usize, message: String },
    #[error("undeclared {kind} `{name}`")]
    Undeclared { kind: &'static str, name: String },
    #[error("duplicate {kind} `{name}`")]
    Duplicate { kind: &'static str, name: String },
    #[error("no transition for state `{state}` on input `{input}`")]
    Missing { state: String, input: String },
    #[error("two transitions for state `{state}` on input `{input}`")]
    Nondeterministic { state: String, input: String },
    #[error("machine has no states")]
    Empty,
}

/// Index-based FSM. `table[s][i] = (output, next)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fsm {
    pub states: Vec<String>,
    pub initial: usize,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub table: Vec<Vec<(usize, usize)>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FsmTransition {
    pub src: String,
    #[serde(rename = "in")]
    pub input: String,
    #[serde(rename = "out")]
    pub output: String,
    pub tgt: String,
}

#[derive(Serialize, Deserialize)]
struct FsmFile {
    states: Vec<String>,
    initial: String,
    inputs: Vec<String>,
    outputs: Vec<String>,
    transitions: Vec<FsmTransition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    upstream_hash: Option<String>,
}

fn index_of(names: &[String], kind: &'static str) -> Result<HashMap<String, usize>, FsmError> {
    let mut map = HashMap::with_capacity(names.len());
    for (i, n) in names.iter().enumerate() {
        if map.insert(n.clone(), i).is_some() {
            return Err(FsmError::Duplicate { kind, name: n.clone() });
        }
    }
    Ok(map)
}

impl Fsm {
    /// Builds a machine from named transitions, checking that the transition
    /// function is total and deterministic.
    pub fn from_transitions(
        states: Vec<String>,
        initial: &str,
        inputs: Vec<String>,
        outputs: Vec<String>,
        transitions: &[FsmTransition],
    ) -> Result<Fsm, FsmError> {
        if states.is_empty() {
            return Err(FsmError::Empty);
        }
        let s_idx = index_of(&states, "state")?;
        let i_idx = index_of(&inputs, "input")?;
        let o_idx = index_of(&outputs, "output")?;
        let lookup = |map: &HashMap<String, usize>, kind: &'static str, name: &str| {
            map.get(name).copied().ok_or_else(|| FsmError::Undeclared {
                kind,
                name: name.to_string(),
            })
        };
        let initial = lookup(&s_idx, "state", initial)?;
        let mut table: Vec<Vec<Option<(usize, usize)>>> = vec![vec![None; inputs.len()]; states.len()];
        for t in transitions {
            let s = lookup(&s_idx, "state", &t.src)?;
            let i = lookup(&i_idx, "input", &t.input)?;
            let o = lookup(&o_idx, "output", &t.output)?;
            let n = lookup(&s_idx, "state", &t.tgt)?;
            if table[s][i].replace((o, n)).is_some() {
                return Err(FsmError::Nondeterministic {
                    state: t.src.clone(),
                    input: t.input.clone(),
                });
            }
        }
        let table = table
            .into_iter()
            .enumerate()
            .map(|(s, row)| {
                row.into_iter()
                    .enumerate()
                    .map(|(i, cell)| {
                        cell.ok_or_else(|| FsmError::Missing {
                            state: states[s].clone(),
                            input: inputs[i].clone(),
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Fsm {
            states,
            initial,
            inputs,
            outputs,
            table,
        })
    }

    pub fn n(&self) -> usize {
        self.states.len()
    }

    pub fn step(&self, state: usize, input: usize) -> (usize, usize) {
        self.table[state][input]
    }

    /// Output sequence produced from `state` on `inputs`, and the final state.
    pub fn run_from(&self, mut state: usize, inputs: &[usize]) -> (Vec<usize>, usize) {
        let mut outs = Vec::with_capacity(inputs.len());
        for &i in inputs {
            let (o, n) = self.table[state][i];
            outs.push(o);
            state = n;
        }
        (outs, state)
    }

    pub fn run(&self, inputs: &[usize]) -> Vec<usize> {
        self.run_from(self.initial, inputs).0
    }

    /// State reached from the initial state by `inputs`.
    pub fn reach(&self, inputs: &[usize]) -> usize {
        self.run_from(self.initial, inputs).1
    }

    /// Output symbols for an input sequence.
    pub fn run_symbols(&self, inputs: &[usize]) -> Vec<&str> {
        self.run(inputs).into_iter().map(|o| self.outputs[o].as_str()).collect()
    }

    pub fn input_index(&self, symbol: &str) -> Option<usize> {
        self.inputs.iter().position(|s| s == symbol)
    }

    pub fn output_index(&self, symbol: &str) -> Option<usize> {
        self.outputs.iter().position(|s| s == symbol)
    }

    /// Reachable states in breadth-first discovery order (inputs in
    /// declaration order).
    pub fn reachable(&self) -> Vec<usize> {
        let mut seen = vec![false; self.n()];
        let mut order = vec![self.initial];
        seen[self.initial] = true;
        let mut queue = VecDeque::from([self.initial]);
        while let Some(s) = queue.pop_front() {
            for &(_, n) in &self.table[s] {
                if !seen[n] {
                    seen[n] = true;
                    order.push(n);
                    queue.push_back(n);
                }
            }
        }
        order
    }

    pub fn transitions(&self) -> Vec<FsmTransition> {
        let mut out = Vec::with_capacity(self.n() * self.inputs.len());
        for (s, row) in self.table.iter().enumerate() {
            for (i, &(o, n)) in row.iter().enumerate() {
                out.push(FsmTransition {
                    src: self.states[s].clone(),
                    input: self.inputs[i].clone(),
                    output: self.outputs[o].clone(),
                    tgt: self.states[n].clone(),
                });
            }
        }
        out
    }

    pub fn to_json(&self, upstream_hash: Option<&str>) -> String {
        let file = FsmFile {
            states: self.states.clone(),
            initial: self.states[self.initial].clone(),
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
            transitions: self.transitions(),
            upstream_hash: upstream_hash.map(str::to_string),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("fsm serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<(Fsm, Option<String>), FsmError> {
        let file: FsmFile = serde_json::from_str(text)?;
        let fsm = Fsm::from_transitions(file.states, &file.initial, file.inputs, file.outputs, &file.transitions)?;
        Ok((fsm, file.upstream_hash))
    }

    /// Plain-text rendering: `@initial`, `@states`, `@inputs` and `@outputs`
    /// headers, then one `src in out tgt` line per transition.
    pub fn to_text(&self) -> String {
        let mut text = format!(
            "@initial {}\n@states {}\n@inputs {}\n@outputs {}\n",
            self.states[self.initial],
            self.states.join(" "),
            self.inputs.join(" "),
            self.outputs.join(" ")
        );
        for t in self.transitions() {
            text.push_str(&format!("{} {} {} {}\n", t.src, t.input, t.output, t.tgt));
        }
        text
    }

    /// Parses the plain-text rendering. Without a `@states` header, states
    /// are declared in order of first appearance.
    pub fn from_text(text: &str) -> Result<Fsm, FsmError> {
        let mut initial = None;
        let mut states: Option<Vec<String>> = None;
        let mut inputs = None;
        let mut outputs = None;
        let mut transitions = Vec::new();
        let mut seen_states: Vec<String> = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            let words: Vec<&str> = line.split_whitespace().collect();
            let Some(first) = words.first() else { continue };
            let rest = || words[1..].iter().map(|w| w.to_string()).collect::<Vec<_>>();
            match *first {
                "@initial" if words.len() == 2 => initial = Some(words[1].to_string()),
                "@states" => states = Some(rest()),
                "@inputs" => inputs = Some(rest()),
                "@outputs" => outputs = Some(rest()),
                w if w.starts_with('@') => {
                    return Err(FsmError::Text {
                        line: line_no,
                        message: format!("unknown or malformed header `{line}`"),
                    })
                }
                _ if words.len() == 4 => {
                    for s in [words[0], words[3]] {
                        if !seen_states.iter().any(|x| x == s) {
                            seen_states.push(s.to_string());
                        }
                    }
                    transitions.push(FsmTransition {
                        src: words[0].into(),
                        input: words[1].into(),
                        output: words[2].into(),
                        tgt: words[3].into(),
                    });
                }
                _ => {
                    return Err(FsmError::Text {
                        line: line_no,
                        message: "expected `src in out tgt`".into(),
                    })
                }
            }
        }
        let missing = |what: &str| FsmError::Text {
            line: 0,
            message: format!("missing {what} header"),
        };
        let initial = initial.ok_or_else(|| missing("@initial"))?;
        let states = states.unwrap_or_else(|| {
            if let Some(pos) = seen_states.iter().position(|s| *s == initial) {
                let s = seen_states.remove(pos);
                seen_states.insert(0, s);
            } else {
                seen_states.insert(0, initial.clone());
            }
            seen_states
        });
        Fsm::from_transitions(
            states,
            &initial,
            inputs.ok_or_else(|| missing("@inputs"))?,
            outputs.ok_or_else(|| missing("@outputs"))?,
            &transitions,
        )
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Two states; input `t` toggles and reports the new state, `k` keeps it.
    pub(crate) fn toggle() -> Fsm {
        let tr = |s: &str, i: &str, o: &str, t: &str| FsmTransition {
            src: s.into(),
            input: i.into(),
            output: o.into(),
            tgt: t.into(),
        };
        Fsm::from_transitions(
            vec!["s0".into(), "s1".into()],
            "s0",
            vec!["k".into(), "t".into()],
            vec!["lo".into(), "hi".into()],
            &[
                tr("s0", "k", "lo", "s0"),
                tr("s0", "t", "hi", "s1"),
                tr("s1", "k", "hi", "s1"),
                tr("s1", "t", "lo", "s0"),
            ],
        )
        .unwrap()
    }

    #[test]
    fn json_and_text_round_trip() {
        let m = toggle();
        let (back, up) = Fsm::from_json(&m.to_json(Some("h"))).unwrap();
        assert_eq!(back, m);
        assert_eq!(up.as_deref(), Some("h"));
        assert_eq!(Fsm::from_text(&m.to_text()).unwrap(), m);
    }

    #[test]
    fn text_without_states_header_uses_appearance_order() {
        let text = "@initial b\n@inputs x\n@outputs o\na x o b\nb x o a\n";
        let m = Fsm::from_text(text).unwrap();
        assert_eq!(m.states, ["b", "a"]);
        assert_eq!(m.initial, 0);
    }

    #[test]
    fn partial_machine_rejected() {
        let mut ts = toggle().transitions();
        ts.pop();
        let err = Fsm::from_transitions(
            vec!["s0".into(), "s1".into()],
            "s0",
            vec!["k".into(), "t".into()],
            vec!["lo".into(), "hi".into()],
            &ts,
        )
        .unwrap_err();
        assert!(matches!(err, FsmError::Missing { .. }));
    }

    #[test]
    fn runs() {
        let m = toggle();
        assert_eq!(m.run_symbols(&[1, 0, 1]), ["hi", "hi", "lo"]);
        assert_eq!(m.reach(&[1]), 1);
        assert_eq!(m.reachable(), [0, 1]);
    }
}
