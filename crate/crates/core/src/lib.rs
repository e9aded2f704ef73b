pub mod abstraction;
pub mod codegen;
pub mod fsm;
pub mod harness;
pub mod model;
pub mod pipeline;
pub mod policy;
pub mod report;
pub mod sfsm;
pub mod testgen;
