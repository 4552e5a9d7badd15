pub mod ast;
pub mod automata;
pub mod catalog;
pub mod cli;
pub mod corpus;
pub mod differential;
pub mod engines;
pub mod external;
pub mod input_gen;
pub mod sl;
