pub mod automata;
pub mod cert;
pub mod config;
pub mod expr;
pub mod hybrid;
pub mod ltl;
pub mod registry;
pub mod sim;
pub mod trace_io;
