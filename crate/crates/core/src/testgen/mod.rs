//! Complete FSM test suites: H-Method generation, the W-Method baseline,
//! the independent suite validator and concretization to input valuations.

mod generate;
mod validate;

pub use generate::{characterization_set, distinguishing_lengths, generate_h, generate_w, state_cover};
pub use validate::{validate_h, HViolation};

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::ClassAlphabet;
use crate::model::{Interface, InterfaceError, Valuation};

#[derive(Debug, Error)]
pub enum TestgenError {
    #[error("m = {m} is below the reference state count n = {n}")]
    MBelowN { m: usize, n: usize },
    #[error("reference is not minimal: {0}")]
    NotMinimal(String),
    #[error("symbol `{0}` is not in the alphabet")]
    UnknownSymbol(String),
    #[error("malformed suite file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed suite file: {0}")]
    Format(String),
    #[error("case {case}, step {step}: {source}")]
    Valuation {
        case: usize,
        step: usize,
        source: InterfaceError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    H,
    W,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::H => "H",
            Method::W => "W",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "h" | "H" => Ok(Method::H),
            "w" | "W" => Ok(Method::W),
            other => Err(format!("unknown method `{other}`, expected h or w")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteMeta {
    pub method: Method,
    pub m: usize,
    pub n: usize,
    #[serde(default)]
    pub reference_hash: Option<String>,
}

/// Abstract suite over class symbols. Cases are stored prefix-reduced and
/// in lexicographic order of symbol indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestSuite {
    pub alphabet: Vec<String>,
    pub cases: Vec<Vec<usize>>,
    pub meta: SuiteMeta,
}

#[derive(Serialize, Deserialize)]
struct SuiteFile {
    meta: SuiteMeta,
    alphabet: Vec<String>,
    cases: Vec<Vec<String>>,
}

impl TestSuite {
    pub fn symbols(&self, case: &[usize]) -> Vec<&str> {
        case.iter().map(|&i| self.alphabet[i].as_str()).collect()
    }

    /// Total number of input symbols over all cases.
    pub fn total_length(&self) -> usize {
        self.cases.iter().map(Vec::len).sum()
    }

    pub fn to_json(&self) -> String {
        let file = SuiteFile {
            meta: self.meta.clone(),
            alphabet: self.alphabet.clone(),
            cases: self
                .cases
                .iter()
                .map(|c| self.symbols(c).into_iter().map(str::to_string).collect())
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("suite serializes");
        text.push('\n');
        text
    }

    /// Parses a suite file. Rejects unknown symbols, `m < n` and stored cases
    /// that are proper prefixes of other cases.
    pub fn from_json(text: &str) -> Result<TestSuite, TestgenError> {
        let file: SuiteFile = serde_json::from_str(text)?;
        let index: HashMap<&str, usize> = file.alphabet.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        if index.len() != file.alphabet.len() {
            return Err(TestgenError::Format("duplicate alphabet symbol".into()));
        }
        if file.meta.n == 0 || file.meta.m < file.meta.n {
            return Err(TestgenError::Format(format!(
                "meta requires m >= n >= 1, found m = {}, n = {}",
                file.meta.m, file.meta.n
            )));
        }
        let cases = file
            .cases
            .iter()
            .map(|c| {
                c.iter()
                    .map(|s| {
                        index
                            .get(s.as_str())
                            .copied()
                            .ok_or_else(|| TestgenError::UnknownSymbol(s.clone()))
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut sorted: Vec<&Vec<usize>> = cases.iter().collect();
        sorted.sort();
        for pair in sorted.windows(2) {
            if pair[1].starts_with(pair[0]) {
                return Err(TestgenError::Format("a stored case is a prefix of another".into()));
            }
        }
        Ok(TestSuite {
            alphabet: file.alphabet,
            cases,
            meta: file.meta,
        })
    }
}

/// A suite over input valuations, case-for-case parallel to its abstract
/// suite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcreteSuite {
    pub meta: SuiteMeta,
    pub cases: Vec<Vec<Valuation>>,
}

impl ConcreteSuite {
    /// Serializes with valuation keys in declaration order. `suite_hash` is
    /// the content hash of the abstract suite file.
    pub fn to_json(&self, iface: &Interface, suite_hash: Option<&str>) -> String {
        let mut root = serde_json::Map::new();
        root.insert(
            "meta".into(),
            serde_json::to_value(&self.meta).expect("meta serializes"),
        );
        if let Some(h) = suite_hash {
            root.insert("suite_hash".into(), h.into());
        }
        let cases = self
            .cases
            .iter()
            .map(|c| serde_json::Value::Array(c.iter().map(|v| iface.ordered_json(v)).collect()))
            .collect();
        root.insert("cases".into(), serde_json::Value::Array(cases));
        let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(root)).expect("suite serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str, iface: &Interface) -> Result<(ConcreteSuite, Option<String>), TestgenError> {
        #[derive(Deserialize)]
        struct File {
            meta: SuiteMeta,
            #[serde(default)]
            suite_hash: Option<String>,
            cases: Vec<Vec<Valuation>>,
        }
        let file: File = serde_json::from_str(text)?;
        for (case, c) in file.cases.iter().enumerate() {
            for (step, v) in c.iter().enumerate() {
                iface
                    .check_exact(v, iface.inputs())
                    .map_err(|source| TestgenError::Valuation { case, step, source })?;
            }
        }
        Ok((
            ConcreteSuite {
                meta: file.meta,
                cases: file.cases,
            },
            file.suite_hash,
        ))
    }
}

/// Substitutes every symbol by its class representative.
pub fn concretize(suite: &TestSuite, classes: &ClassAlphabet) -> Result<ConcreteSuite, TestgenError> {
    let reps = suite
        .alphabet
        .iter()
        .map(|s| {
            classes
                .get(s)
                .map(|c| &c.representative)
                .ok_or_else(|| TestgenError::UnknownSymbol(s.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ConcreteSuite {
        meta: suite.meta.clone(),
        cases: suite
            .cases
            .iter()
            .map(|c| c.iter().map(|&i| reps[i].clone()).collect())
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fsm::tests::toggle;

    fn suite() -> TestSuite {
        TestSuite {
            alphabet: vec!["k".into(), "t".into()],
            cases: vec![vec![0, 1], vec![1]],
            meta: SuiteMeta {
                method: Method::H,
                m: 2,
                n: 2,
                reference_hash: Some("ab".into()),
            },
        }
    }

    #[test]
    fn json_round_trip() {
        let s = suite();
        assert_eq!(TestSuite::from_json(&s.to_json()).unwrap(), s);
        assert!(s.to_json().contains("\"method\": \"H\""));
    }

    #[test]
    fn stored_prefix_rejected() {
        let mut s = suite();
        s.cases.push(vec![0]);
        assert!(matches!(
            TestSuite::from_json(&s.to_json()),
            Err(TestgenError::Format(_))
        ));
    }

    #[test]
    fn bad_meta_rejected() {
        let mut s = suite();
        s.meta.m = 1;
        assert!(TestSuite::from_json(&s.to_json()).is_err());
        let text = suite().to_json().replace("\"t\"\n    ]", "\"q\"\n    ]");
        assert!(matches!(TestSuite::from_json(&text), Err(TestgenError::UnknownSymbol(q)) if q == "q"));
    }

    #[test]
    fn one_state_h_suite_covers_every_input() {
        let m = crate::fsm::Fsm {
            states: vec!["s".into()],
            initial: 0,
            inputs: vec!["a".into(), "b".into(), "c".into()],
            outputs: vec!["x".into(), "y".into()],
            table: vec![vec![(0, 0), (1, 0), (0, 0)]],
        };
        let s = generate_h(&m, 1).unwrap();
        assert_eq!(s.cases, [vec![0], vec![1], vec![2]]);
        let w = generate_w(&m, 1).unwrap();
        assert_eq!(w.cases, s.cases);
    }

    #[test]
    fn generated_toggle_suite_validates() {
        let m = toggle();
        for mm in [2, 3] {
            let s = generate_h(&m, mm).unwrap();
            assert!(validate_h(&s, &m).passed(), "m = {mm}");
            let w = generate_w(&m, mm).unwrap();
            assert!(validate_h(&w, &m).passed(), "W suite, m = {mm}");
        }
        assert!(matches!(generate_h(&m, 1), Err(TestgenError::MBelowN { m: 1, n: 2 })));
    }
}
