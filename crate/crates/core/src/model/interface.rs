use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::valuation::Valuation;

/// Phases every risk factor must be able to take: inactive, active, mitigated.
pub const REQUIRED_PHASES: [&str; 3] = ["0", "a", "m"];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InterfaceError {
    #[error("duplicate sort `{0}`")]
    DuplicateSort(String),
    #[error("sort `{0}` has no values")]
    EmptySort(String),
    #[error("sort `{sort}` lists value `{value}` twice")]
    DuplicateValue { sort: String, value: String },
    #[error("`{0}` is not a valid identifier")]
    BadIdentifier(String),
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("variable `{var}` has undeclared sort `{sort}`")]
    UnknownSort { var: String, sort: String },
    #[error("factor `{var}` has sort `{sort}` lacking phase `{phase}`")]
    MissingPhase { var: String, sort: String, phase: String },
    #[error("interface declares no {0} variables")]
    EmptyKind(&'static str),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("value `{value}` is not in the sort of `{var}`")]
    ValueNotInSort { var: String, value: String },
    #[error("valuation is missing variable `{0}`")]
    Unbound(String),
    #[error("valuation binds `{0}`, which is outside the expected variable set")]
    Unexpected(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sort {
    pub name: String,
    pub values: Vec<String>,
}

impl Sort {
    pub fn new<S: Into<String>>(name: impl Into<String>, values: impl IntoIterator<Item = S>) -> Self {
        Sort {
            name: name.into(),
            values: values.into_iter().map(Into::into).collect(),
        }
    }

    pub fn position(&self, value: &str) -> Option<usize> {
        self.values.iter().position(|v| v == value)
    }
}

/// Role of a variable in the supervisor's syntactic interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarKind {
    /// Monitored input.
    #[serde(rename = "I")]
    Monitored,
    /// Controlled output.
    #[serde(rename = "O")]
    Controlled,
    /// Both monitored and controlled.
    #[serde(rename = "IO")]
    MonitoredControlled,
    /// Risk factor.
    #[serde(rename = "F")]
    Factor,
}

impl VarKind {
    pub fn is_input(self) -> bool {
        matches!(self, VarKind::Monitored | VarKind::MonitoredControlled)
    }

    pub fn is_output(self) -> bool {
        matches!(self, VarKind::Controlled | VarKind::MonitoredControlled)
    }

    pub fn is_factor(self) -> bool {
        self == VarKind::Factor
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarDecl {
    pub name: String,
    pub sort: String,
    pub kind: VarKind,
}

impl VarDecl {
    pub fn new(name: impl Into<String>, sort: impl Into<String>, kind: VarKind) -> Self {
        VarDecl {
            name: name.into(),
            sort: sort.into(),
            kind,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct InterfaceFile {
    sorts: Vec<Sort>,
    vars: Vec<VarDecl>,
}

/// Syntactic interface of the supervisor: finite sorts and the variables
/// split into monitored (I), controlled (O) and factor (F) sets.
///
/// Declaration order is significant. It fixes canonical enumeration of
/// valuations, output printing and risk-state naming.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "InterfaceFile", into = "InterfaceFile")]
pub struct Interface {
    sorts: Vec<Sort>,
    vars: Vec<VarDecl>,
    var_sort: Vec<usize>,
    by_name: HashMap<String, usize>,
    inputs: Vec<usize>,
    outputs: Vec<usize>,
    factors: Vec<usize>,
}

impl TryFrom<InterfaceFile> for Interface {
    type Error = InterfaceError;

    fn try_from(file: InterfaceFile) -> Result<Self, Self::Error> {
        Interface::new(file.sorts, file.vars)
    }
}

impl From<Interface> for InterfaceFile {
    fn from(iface: Interface) -> Self {
        InterfaceFile {
            sorts: iface.sorts,
            vars: iface.vars,
        }
    }
}

pub(crate) fn is_var_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Values may start with a digit so that phases like `0` and discretized
/// ranges are expressible.
pub(crate) fn is_value_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Interface {
    pub fn new(sorts: Vec<Sort>, vars: Vec<VarDecl>) -> Result<Self, InterfaceError> {
        let mut sort_names = HashMap::new();
        for (idx, sort) in sorts.iter().enumerate() {
            if !is_var_ident(&sort.name) {
                return Err(InterfaceError::BadIdentifier(sort.name.clone()));
            }
            if sort_names.insert(sort.name.clone(), idx).is_some() {
                return Err(InterfaceError::DuplicateSort(sort.name.clone()));
            }
            if sort.values.is_empty() {
                return Err(InterfaceError::EmptySort(sort.name.clone()));
            }
            let mut seen = HashSet::new();
            for value in &sort.values {
                if !is_value_ident(value) {
                    return Err(InterfaceError::BadIdentifier(value.clone()));
                }
                if !seen.insert(value.as_str()) {
                    return Err(InterfaceError::DuplicateValue {
                        sort: sort.name.clone(),
                        value: value.clone(),
                    });
                }
            }
        }

        let mut by_name = HashMap::new();
        let mut var_sort = Vec::with_capacity(vars.len());
        let (mut inputs, mut outputs, mut factors) = (Vec::new(), Vec::new(), Vec::new());
        for (idx, var) in vars.iter().enumerate() {
            if !is_var_ident(&var.name) {
                return Err(InterfaceError::BadIdentifier(var.name.clone()));
            }
            if by_name.insert(var.name.clone(), idx).is_some() {
                return Err(InterfaceError::DuplicateVariable(var.name.clone()));
            }
            let sort_idx = *sort_names.get(&var.sort).ok_or_else(|| InterfaceError::UnknownSort {
                var: var.name.clone(),
                sort: var.sort.clone(),
            })?;
            var_sort.push(sort_idx);
            if var.kind.is_input() {
                inputs.push(idx);
            }
            if var.kind.is_output() {
                outputs.push(idx);
            }
            if var.kind.is_factor() {
                let sort = &sorts[sort_idx];
                for phase in REQUIRED_PHASES {
                    if sort.position(phase).is_none() {
                        return Err(InterfaceError::MissingPhase {
                            var: var.name.clone(),
                            sort: sort.name.clone(),
                            phase: phase.to_string(),
                        });
                    }
                }
                factors.push(idx);
            }
        }
        if inputs.is_empty() {
            return Err(InterfaceError::EmptyKind("monitored"));
        }
        if outputs.is_empty() {
            return Err(InterfaceError::EmptyKind("controlled"));
        }
        if factors.is_empty() {
            return Err(InterfaceError::EmptyKind("factor"));
        }

        Ok(Interface {
            sorts,
            vars,
            var_sort,
            by_name,
            inputs,
            outputs,
            factors,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Pretty JSON with fields in declaration order.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("interface serializes")
    }

    pub fn sorts(&self) -> &[Sort] {
        &self.sorts
    }

    pub fn vars(&self) -> &[VarDecl] {
        &self.vars
    }

    pub fn var(&self, name: &str) -> Option<&VarDecl> {
        self.by_name.get(name).map(|&i| &self.vars[i])
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    /// Values of the sort of the variable at `var_idx`, in listing order.
    pub fn domain_of(&self, var_idx: usize) -> &[String] {
        &self.sorts[self.var_sort[var_idx]].values
    }

    pub fn domain(&self, name: &str) -> Option<&[String]> {
        self.var_index(name).map(|i| self.domain_of(i))
    }

    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn names(&self, indices: &[usize]) -> Vec<&str> {
        indices.iter().map(|&i| self.vars[i].name.as_str()).collect()
    }

    /// Checks that `v` binds exactly the variables at `indices`, each to a
    /// value of its sort.
    pub fn check_exact(&self, v: &Valuation, indices: &[usize]) -> Result<(), InterfaceError> {
        for &i in indices {
            let name = &self.vars[i].name;
            let value = v.get(name).ok_or_else(|| InterfaceError::Unbound(name.clone()))?;
            if !self.domain_of(i).iter().any(|d| d == value) {
                return Err(InterfaceError::ValueNotInSort {
                    var: name.clone(),
                    value: value.to_string(),
                });
            }
        }
        for (name, _) in v.iter() {
            match self.var_index(name) {
                None => return Err(InterfaceError::UnknownVariable(name.to_string())),
                Some(i) if !indices.contains(&i) => return Err(InterfaceError::Unexpected(name.to_string())),
                Some(_) => {}
            }
        }
        Ok(())
    }

    pub fn all_vars(&self) -> Vec<usize> {
        (0..self.vars.len()).collect()
    }

    /// JSON object for `v` with keys in declaration order.
    pub fn ordered_json(&self, v: &Valuation) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for var in &self.vars {
            if let Some(value) = v.get(&var.name) {
                map.insert(var.name.clone(), serde_json::Value::String(value.to_string()));
            }
        }
        for (name, value) in v.iter() {
            if !self.by_name.contains_key(name) {
                map.insert(name.to_string(), serde_json::Value::String(value.to_string()));
            }
        }
        serde_json::Value::Object(map)
    }

    /// Risk-state name of a factor valuation: the concatenation of
    /// `<factor><phase>` for every factor not in phase `0`, or `0` when all
    /// factors are inactive (e.g. `HSm`, `HSaHCm`).
    pub fn risk_state_name(&self, v: &Valuation) -> String {
        let mut name = String::new();
        for &f in &self.factors {
            let var = &self.vars[f].name;
            match v.get(var) {
                Some("0") | None => {}
                Some(phase) => {
                    name.push_str(var);
                    name.push_str(phase);
                }
            }
        }
        if name.is_empty() {
            name.push('0');
        }
        name
    }

    /// Canonical rank of a valuation over `indices`: first variable most
    /// significant, values ranked by sort listing order.
    pub fn rank(&self, v: &Valuation, indices: &[usize]) -> Option<u128> {
        let mut rank: u128 = 0;
        for &i in indices {
            let dom = self.domain_of(i);
            let pos = dom.iter().position(|d| Some(d.as_str()) == v.get(&self.vars[i].name))?;
            rank = rank.checked_mul(dom.len() as u128)?.checked_add(pos as u128)?;
        }
        Some(rank)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn small_iface() -> Interface {
        Interface::new(
            vec![
                Sort::new("AB", ["a", "b"]),
                Sort::new("Bit", ["0", "1"]),
                Sort::new("Phase", ["0", "a", "m"]),
                Sort::new("Mode", ["run", "stop"]),
            ],
            vec![
                VarDecl::new("x", "AB", VarKind::Monitored),
                VarDecl::new("y", "Bit", VarKind::Monitored),
                VarDecl::new("out", "Mode", VarKind::Controlled),
                VarDecl::new("HS", "Phase", VarKind::Factor),
            ],
        )
        .unwrap()
    }

    #[test]
    fn derived_sets_follow_declaration_order() {
        let iface = small_iface();
        assert_eq!(iface.names(iface.inputs()), ["x", "y"]);
        assert_eq!(iface.names(iface.outputs()), ["out"]);
        assert_eq!(iface.names(iface.factors()), ["HS"]);
    }

    #[test]
    fn factor_without_mitigated_phase_is_rejected() {
        let err = Interface::new(
            vec![Sort::new("P", ["0", "a"]), Sort::new("B", ["t", "f"])],
            vec![
                VarDecl::new("i", "B", VarKind::Monitored),
                VarDecl::new("o", "B", VarKind::Controlled),
                VarDecl::new("f", "P", VarKind::Factor),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, InterfaceError::MissingPhase { ref phase, .. } if phase == "m"));
    }

    #[test]
    fn rejects_duplicates_and_missing_kinds() {
        let sorts = vec![Sort::new("B", ["t", "f"]), Sort::new("P", ["0", "a", "m"])];
        let dup = Interface::new(
            sorts.clone(),
            vec![
                VarDecl::new("i", "B", VarKind::Monitored),
                VarDecl::new("i", "B", VarKind::Controlled),
            ],
        );
        assert_eq!(dup.unwrap_err(), InterfaceError::DuplicateVariable("i".into()));
        let no_factor = Interface::new(
            sorts,
            vec![
                VarDecl::new("i", "B", VarKind::Monitored),
                VarDecl::new("o", "B", VarKind::Controlled),
            ],
        );
        assert_eq!(no_factor.unwrap_err(), InterfaceError::EmptyKind("factor"));
    }

    #[test]
    fn json_round_trip_keeps_field_order() {
        let iface = small_iface();
        let text = iface.to_json();
        assert!(text.find("\"sorts\"").unwrap() < text.find("\"vars\"").unwrap());
        assert_eq!(Interface::from_json(&text).unwrap(), iface);
    }

    #[test]
    fn risk_state_names() {
        let iface = small_iface();
        let mut v = Valuation::new();
        v.insert("HS", "0");
        assert_eq!(iface.risk_state_name(&v), "0");
        v.insert("HS", "m");
        assert_eq!(iface.risk_state_name(&v), "HSm");
    }

    #[test]
    fn check_exact_reports_each_failure_kind() {
        let iface = small_iface();
        let inputs = iface.inputs().to_vec();
        let ok = Valuation::from_pairs([("x", "a"), ("y", "1")]);
        assert!(iface.check_exact(&ok, &inputs).is_ok());
        let missing = Valuation::from_pairs([("x", "a")]);
        assert_eq!(
            iface.check_exact(&missing, &inputs),
            Err(InterfaceError::Unbound("y".into()))
        );
        let bad = Valuation::from_pairs([("x", "c"), ("y", "1")]);
        assert!(matches!(
            iface.check_exact(&bad, &inputs),
            Err(InterfaceError::ValueNotInSort { .. })
        ));
        let extra = Valuation::from_pairs([("x", "a"), ("y", "1"), ("out", "run")]);
        assert_eq!(
            iface.check_exact(&extra, &inputs),
            Err(InterfaceError::Unexpected("out".into()))
        );
    }
}
