use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use super::TestSuite;
use crate::fsm::Fsm;
use crate::report::ValidationReport;

/// First violated condition found by [`validate_h`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "clause")]
pub enum HViolation {
    #[serde(rename = "meta")]
    Meta { message: String },
    /// Clause (a): no sequence of the suite reaches `state`.
    #[serde(rename = "a")]
    NoStateCover { state: String },
    /// Clause (b): no access sequence of `state` has all its extensions up to
    /// the bound; `access` is the shortest candidate.
    #[serde(rename = "b")]
    MissingExtension {
        state: String,
        access: Vec<String>,
        extension: Vec<String>,
    },
    /// Clause (c): two traversal sequences reach distinct states and no
    /// common extension in the suite tells them apart.
    #[serde(rename = "c")]
    Undistinguished { alpha: Vec<String>, beta: Vec<String> },
}

impl HViolation {
    pub fn clause(&self) -> &'static str {
        match self {
            HViolation::Meta { .. } => "meta",
            HViolation::NoStateCover { .. } => "a",
            HViolation::MissingExtension { .. } => "b",
            HViolation::Undistinguished { .. } => "c",
        }
    }
}

impl fmt::Display for HViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let seq = |s: &[String]| if s.is_empty() { "ε".to_string() } else { s.join(".") };
        match self {
            HViolation::Meta { message } => write!(f, "suite metadata: {message}"),
            HViolation::NoStateCover { state } => write!(f, "clause (a): no test prefix reaches state `{state}`"),
            HViolation::MissingExtension {
                state,
                access,
                extension,
            } => write!(
                f,
                "clause (b): state `{state}` accessed by {} lacks extension {}",
                seq(access),
                seq(extension)
            ),
            HViolation::Undistinguished { alpha, beta } => write!(
                f,
                "clause (c): {} and {} reach distinct states but are not distinguished",
                seq(alpha),
                seq(beta)
            ),
        }
    }
}

/// Checks the H-condition on the prefix closure of `suite`.
///
/// The state cover is read off the suite itself: the initial state is
/// accessed by the empty sequence, every other state by its first access
/// sequence in shortlex order whose extensions up to length `m − n + 1` are
/// all present.
pub fn validate_h(suite: &TestSuite, reference: &Fsm) -> ValidationReport<HViolation> {
    match check(suite, reference) {
        Ok(()) => ValidationReport::Pass,
        Err(v) => ValidationReport::Fail(v),
    }
}

fn check(suite: &TestSuite, r: &Fsm) -> Result<(), HViolation> {
    let meta = |message: String| HViolation::Meta { message };
    if suite.alphabet != r.inputs {
        return Err(meta("alphabet differs from the reference inputs".into()));
    }
    if suite.meta.n != r.n() {
        return Err(meta(format!(
            "n = {} but the reference has {} states",
            suite.meta.n,
            r.n()
        )));
    }
    if suite.meta.m < suite.meta.n {
        return Err(meta(format!("m = {} is below n = {}", suite.meta.m, suite.meta.n)));
    }
    let sigma = r.inputs.len();
    if suite.cases.iter().flatten().any(|&x| x >= sigma) {
        return Err(meta("case symbol outside the alphabet".into()));
    }
    let k = suite.meta.m - suite.meta.n + 1;
    let names = |s: &[usize]| -> Vec<String> { s.iter().map(|&x| r.inputs[x].clone()).collect() };

    let mut closure: BTreeSet<Vec<usize>> = BTreeSet::new();
    closure.insert(Vec::new());
    for case in &suite.cases {
        for len in 1..=case.len() {
            closure.insert(case[..len].to_vec());
        }
    }

    let mut shortlex: Vec<&Vec<usize>> = closure.iter().collect();
    shortlex.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    let mut reaching: Vec<Vec<&Vec<usize>>> = vec![Vec::new(); r.n()];
    for seq in &shortlex {
        reaching[r.reach(seq)].push(seq);
    }

    // (a)
    for (s, seqs) in reaching.iter().enumerate() {
        if seqs.is_empty() {
            return Err(HViolation::NoStateCover {
                state: r.states[s].clone(),
            });
        }
    }

    // (b)
    let extensions = all_words(sigma, k);
    let first_missing = |access: &[usize]| {
        extensions.iter().find(|w| {
            let mut seq = access.to_vec();
            seq.extend(w.iter());
            !closure.contains(&seq)
        })
    };
    let mut cover: Vec<Vec<usize>> = Vec::with_capacity(r.n());
    for (s, seqs) in reaching.iter().enumerate() {
        let candidates: &[&Vec<usize>] = if s == r.initial { &seqs[..1] } else { seqs };
        match candidates.iter().find(|v| first_missing(v).is_none()) {
            Some(v) => cover.push((*v).clone()),
            None => {
                return Err(HViolation::MissingExtension {
                    state: r.states[s].clone(),
                    access: names(candidates[0]),
                    extension: names(first_missing(candidates[0]).expect("candidate lacks an extension")),
                })
            }
        }
    }
    cover.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));

    // (c)
    let mut traversal: Vec<Vec<usize>> = Vec::new();
    let mut listed = BTreeSet::new();
    for v in &cover {
        for w in &extensions {
            let mut seq = v.clone();
            seq.extend(w.iter());
            if listed.insert(seq.clone()) {
                traversal.push(seq);
            }
        }
    }
    let profiles: Vec<(usize, HashMap<&[usize], usize>)> = traversal
        .iter()
        .map(|alpha| {
            let state = r.reach(alpha);
            let mut last = HashMap::new();
            for seq in closure.range(alpha.clone()..).take_while(|s| s.starts_with(alpha)) {
                let gamma = &seq[alpha.len()..];
                if let Some(out) = r.run_from(state, gamma).0.last() {
                    last.insert(gamma, *out);
                }
            }
            (state, last)
        })
        .collect();
    for i in 0..traversal.len() {
        for j in i + 1..traversal.len() {
            let ((sa, pa), (sb, pb)) = (&profiles[i], &profiles[j]);
            if sa == sb {
                continue;
            }
            let (small, large) = if pa.len() <= pb.len() { (pa, pb) } else { (pb, pa) };
            let separated = small.iter().any(|(g, o)| large.get(g).is_some_and(|p| p != o));
            if !separated {
                return Err(HViolation::Undistinguished {
                    alpha: names(&traversal[i]),
                    beta: names(&traversal[j]),
                });
            }
        }
    }
    Ok(())
}

/// Words of length `0..=k` in shortlex order.
fn all_words(sigma: usize, k: usize) -> Vec<Vec<usize>> {
    let mut words = vec![Vec::new()];
    let mut start = 0;
    for _ in 0..k {
        let end = words.len();
        for i in start..end {
            for x in 0..sigma {
                let mut w = words[i].clone();
                w.push(x);
                words.push(w);
            }
        }
        start = end;
    }
    words
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fsm::tests::toggle;
    use crate::testgen::{generate_h, Method, SuiteMeta};

    fn with_cases(cases: Vec<Vec<usize>>) -> TestSuite {
        TestSuite {
            alphabet: vec!["k".into(), "t".into()],
            cases,
            meta: SuiteMeta {
                method: Method::H,
                m: 2,
                n: 2,
                reference_hash: None,
            },
        }
    }

    #[test]
    fn empty_sequence_only_fails_clause_a() {
        let report = validate_h(&with_cases(vec![]), &toggle());
        assert_eq!(report.violation().unwrap().clause(), "a");
    }

    #[test]
    fn missing_extension_fails_clause_b() {
        // Reaches s1 via t but never extends t by k.
        let report = validate_h(&with_cases(vec![vec![0, 0], vec![1, 1]]), &toggle());
        match report.violation().unwrap() {
            HViolation::MissingExtension { state, extension, .. } => {
                assert_eq!(state, "s1");
                assert_eq!(extension, &["k"]);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn hand_built_complete_suite_passes() {
        // V = {ε, t}; V·Σ = {k, t, tk, tt}; every pair is separated by one
        // more symbol.
        let cases = vec![vec![0, 0], vec![1, 0, 0], vec![1, 1, 0]];
        assert!(validate_h(&with_cases(cases), &toggle()).passed());
    }

    #[test]
    fn each_deleted_case_is_reported() {
        let m = toggle();
        let suite = generate_h(&m, 2).unwrap();
        for i in 0..suite.cases.len() {
            let mut cut = suite.clone();
            cut.cases.remove(i);
            assert!(!validate_h(&cut, &m).passed(), "deleting case {i} went unnoticed");
        }
    }

    #[test]
    fn meta_mismatch() {
        let mut s = with_cases(vec![]);
        s.meta.n = 3;
        s.meta.m = 3;
        assert_eq!(validate_h(&s, &toggle()).violation().unwrap().clause(), "meta");
    }
}
