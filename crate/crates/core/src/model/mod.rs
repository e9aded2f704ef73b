//! Domain types shared by every stage: the supervisor interface, valuations
//! and the guard language.

pub mod guard;
pub mod interface;
pub mod valuation;

pub use guard::{parse_guard, satisfying_valuations, CompiledGuard, Guard, GuardError};
pub(crate) use interface::is_var_ident;
pub use interface::{Interface, InterfaceError, Sort, VarDecl, VarKind, REQUIRED_PHASES};
pub use valuation::{print_output, Output, Valuation, ValuationSpace, IDLE_SYMBOL};
