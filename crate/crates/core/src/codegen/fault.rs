use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{GclError, GclProgram};
use crate::model::{Interface, Output, ValuationSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaultKind {
    Output,
    Transfer,
    AddState,
}

impl FaultKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FaultKind::Output => "output",
            FaultKind::Transfer => "transfer",
            FaultKind::AddState => "add-state",
        }
    }
}

impl FromStr for FaultKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "output" => Ok(FaultKind::Output),
            "transfer" => Ok(FaultKind::Transfer),
            "add-state" => Ok(FaultKind::AddState),
            other => Err(format!(
                "unknown fault kind `{other}`, expected output, transfer or add-state"
            )),
        }
    }
}

/// A seeded fault, written `kind:seed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fault {
    pub kind: FaultKind,
    pub seed: u64,
}

impl FromStr for Fault {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, seed) = s
            .split_once(':')
            .ok_or_else(|| format!("expected kind:seed, found `{s}`"))?;
        Ok(Fault {
            kind: kind.parse()?,
            seed: seed.parse().map_err(|_| format!("invalid seed `{seed}`"))?,
        })
    }
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind.as_str(), self.seed)
    }
}

fn other_output(iface: &Interface, current: &Output, rng: &mut ChaCha8Rng) -> Output {
    let mut options: Vec<Output> = ValuationSpace::new(iface, iface.outputs())
        .iter()
        .map(Output::Values)
        .collect();
    options.push(Output::Idle);
    options.retain(|o| o != current);
    options.choose(rng).cloned().unwrap_or(Output::Idle)
}

/// Returns a copy of `p` with one deliberate fault, deterministic in the
/// seed:
/// an output fault replaces one command's outputs, a transfer fault
/// redirects one command, and an added state copies the target of one
/// command with one output altered.
pub fn inject_fault(p: &GclProgram, fault: Fault, iface: &Interface) -> Result<GclProgram, GclError> {
    if p.commands.is_empty() {
        return Err(GclError::Fault("program has no commands".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(fault.seed);
    let mut q = p.clone();
    let idx = rng.gen_range(0..q.commands.len());
    match fault.kind {
        FaultKind::Output => {
            let c = &mut q.commands[idx];
            c.outputs = other_output(iface, &c.outputs, &mut rng);
        }
        FaultKind::Transfer => {
            let current = q.commands[idx].next_state.clone();
            let options: Vec<&String> = q.states.iter().filter(|s| **s != current).collect();
            let target = options
                .choose(&mut rng)
                .ok_or_else(|| GclError::Fault("a transfer fault needs at least two states".into()))?;
            q.commands[idx].next_state = (*target).clone();
        }
        FaultKind::AddState => {
            let target = q.commands[idx].next_state.clone();
            let mut name = format!("{target}x");
            while q.states.contains(&name) {
                name.push('x');
            }
            let mut copies: Vec<_> = p.commands.iter().filter(|c| c.state_test == target).cloned().collect();
            if copies.is_empty() {
                return Err(GclError::Fault(format!("state `{target}` has no commands to copy")));
            }
            for c in &mut copies {
                c.state_test = name.clone();
                if c.next_state == target {
                    c.next_state = name.clone();
                }
            }
            let altered = rng.gen_range(0..copies.len());
            copies[altered].outputs = other_output(iface, &copies[altered].outputs, &mut rng);
            q.commands[idx].next_state = name.clone();
            q.commands.extend(copies);
            q.states.push(name);
        }
    }
    Ok(q)
}
