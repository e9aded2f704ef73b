use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::interface::Interface;

/// Reserved output symbol for a step that changes no controlled variable.
pub const IDLE_SYMBOL: &str = "__idle__";

/// Finite map from variable names to value names.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Valuation(BTreeMap<String, String>);

impl Valuation {
    pub fn new() -> Self {
        Valuation(BTreeMap::new())
    }

    pub fn from_pairs<K: Into<String>, V: Into<String>>(pairs: impl IntoIterator<Item = (K, V)>) -> Self {
        Valuation(pairs.into_iter().map(|(k, v)| (k.into(), v.into())).collect())
    }

    pub fn insert(&mut self, var: impl Into<String>, value: impl Into<String>) {
        self.0.insert(var.into(), value.into());
    }

    pub fn get(&self, var: &str) -> Option<&str> {
        self.0.get(var).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    /// `self|_X`: keeps exactly the bindings whose names are in `names`.
    pub fn restrict<'a>(&self, names: impl IntoIterator<Item = &'a str>) -> Valuation {
        let mut out = BTreeMap::new();
        for name in names {
            if let Some(v) = self.0.get(name) {
                out.insert(name.to_string(), v.clone());
            }
        }
        Valuation(out)
    }

    /// Restriction to the variables at `indices` of `iface`.
    pub fn restrict_to(&self, iface: &Interface, indices: &[usize]) -> Valuation {
        self.restrict(iface.names(indices))
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        f.write_str("}")
    }
}

/// Output of one supervisor step: either a valuation of the controlled
/// variables or the reserved idle marker.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Output {
    Idle,
    Values(Valuation),
}

impl Output {
    /// FSM output symbol: `v1=c1&v2=c2` in declaration order, or `__idle__`.
    pub fn symbol(&self, iface: &Interface) -> String {
        match self {
            Output::Idle => IDLE_SYMBOL.to_string(),
            Output::Values(v) => print_output(v, iface),
        }
    }

    pub fn is_idle(&self) -> bool {
        matches!(self, Output::Idle)
    }

    pub fn to_json(&self, iface: &Interface) -> serde_json::Value {
        match self {
            Output::Idle => serde_json::Value::String(IDLE_SYMBOL.to_string()),
            Output::Values(v) => iface.ordered_json(v),
        }
    }
}

impl Serialize for Output {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Output::Idle => serializer.serialize_str(IDLE_SYMBOL),
            Output::Values(v) => v.serialize(serializer),
        }
    }
}

impl<'de> Deserialize<'de> for Output {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Marker(String),
            Values(Valuation),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Marker(s) if s == IDLE_SYMBOL => Ok(Output::Idle),
            Repr::Marker(s) => Err(serde::de::Error::custom(format!(
                "expected an output object or \"{IDLE_SYMBOL}\", found \"{s}\""
            ))),
            Repr::Values(v) => Ok(Output::Values(v)),
        }
    }
}

/// Prints an output valuation as the FSM output symbol: `v=val` atoms over
/// the controlled variables joined by `&`, in declaration order.
pub fn print_output(o: &Valuation, iface: &Interface) -> String {
    let mut parts = Vec::with_capacity(iface.outputs().len());
    for &i in iface.outputs() {
        let name = &iface.vars()[i].name;
        if let Some(value) = o.get(name) {
            parts.push(format!("{name}={value}"));
        }
    }
    parts.join("&")
}

/// The finite space of valuations over a list of variables, enumerated in
/// canonical order (first variable most significant, values in sort order).
#[derive(Debug, Clone)]
pub struct ValuationSpace<'a> {
    names: Vec<&'a str>,
    domains: Vec<&'a [String]>,
}

impl<'a> ValuationSpace<'a> {
    pub fn new(iface: &'a Interface, indices: &[usize]) -> Self {
        ValuationSpace {
            names: iface.names(indices),
            domains: indices.iter().map(|&i| iface.domain_of(i)).collect(),
        }
    }

    /// Space over the monitored variables.
    pub fn inputs(iface: &'a Interface) -> Self {
        Self::new(iface, iface.inputs())
    }

    pub fn names(&self) -> &[&'a str] {
        &self.names
    }

    pub fn domains(&self) -> &[&'a [String]] {
        &self.domains
    }

    /// Number of valuations, saturating at `u128::MAX`.
    pub fn size(&self) -> u128 {
        self.domains
            .iter()
            .try_fold(1u128, |acc, d| acc.checked_mul(d.len() as u128))
            .unwrap_or(u128::MAX)
    }

    /// Iterates value-index tuples in canonical order.
    pub fn digits(&self) -> DigitIter {
        DigitIter {
            radices: self.domains.iter().map(|d| d.len()).collect(),
            current: Some(vec![0; self.domains.len()]),
        }
    }

    pub fn valuation(&self, digits: &[usize]) -> Valuation {
        Valuation::from_pairs(
            self.names
                .iter()
                .zip(&self.domains)
                .zip(digits)
                .map(|((n, d), &i)| (*n, d[i].as_str())),
        )
    }

    pub fn iter(&self) -> impl Iterator<Item = Valuation> + '_ {
        self.digits().map(move |d| self.valuation(&d))
    }
}

pub struct DigitIter {
    radices: Vec<usize>,
    current: Option<Vec<usize>>,
}

impl Iterator for DigitIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.take()?;
        let mut next = out.clone();
        let mut pos = next.len();
        loop {
            if pos == 0 {
                break;
            }
            pos -= 1;
            next[pos] += 1;
            if next[pos] < self.radices[pos] {
                self.current = Some(next);
                break;
            }
            next[pos] = 0;
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::interface::tests::small_iface;
    use proptest::prelude::*;

    #[test]
    fn enumeration_is_odometer_ordered() {
        let iface = small_iface();
        let all: Vec<String> = ValuationSpace::inputs(&iface).iter().map(|v| v.to_string()).collect();
        assert_eq!(all, ["{x=a, y=0}", "{x=a, y=1}", "{x=b, y=0}", "{x=b, y=1}"]);
    }

    #[test]
    fn output_symbol_uses_declaration_order() {
        let iface = crate::model::Interface::new(
            vec![
                crate::model::Sort::new("M", ["normal", "stopped"]),
                crate::model::Sort::new("N", ["off", "on"]),
                crate::model::Sort::new("P", ["0", "a", "m"]),
            ],
            vec![
                crate::model::VarDecl::new("i", "N", crate::model::VarKind::Monitored),
                crate::model::VarDecl::new("safmod", "M", crate::model::VarKind::Controlled),
                crate::model::VarDecl::new("notif", "N", crate::model::VarKind::Controlled),
                crate::model::VarDecl::new("HS", "P", crate::model::VarKind::Factor),
            ],
        )
        .unwrap();
        let o = Valuation::from_pairs([("notif", "on"), ("safmod", "stopped")]);
        assert_eq!(print_output(&o, &iface), "safmod=stopped&notif=on");
        assert_eq!(Output::Idle.symbol(&iface), IDLE_SYMBOL);
    }

    #[test]
    fn output_serde() {
        let idle: Output = serde_json::from_str("\"__idle__\"").unwrap();
        assert_eq!(idle, Output::Idle);
        let v: Output = serde_json::from_str(r#"{"o":"x"}"#).unwrap();
        assert_eq!(v, Output::Values(Valuation::from_pairs([("o", "x")])));
        assert!(serde_json::from_str::<Output>("\"idle\"").is_err());
    }

    proptest! {
        #[test]
        fn restriction_composes(
            pairs in proptest::collection::btree_map("[a-e]", "[0-2]", 0..5),
            xs in proptest::collection::btree_set("[a-e]", 0..5),
            ys in proptest::collection::btree_set("[a-e]", 0..5),
        ) {
            let v = Valuation::from_pairs(pairs);
            let lhs = v.restrict(xs.iter().map(String::as_str)).restrict(ys.iter().map(String::as_str));
            let both: Vec<&str> = xs.intersection(&ys).map(String::as_str).collect();
            prop_assert_eq!(lhs, v.restrict(both));
        }
    }
}
