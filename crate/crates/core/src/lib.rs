pub mod cli;
pub mod evaluation;
pub mod fusion;
pub mod graph;
pub mod input;
pub mod neighborhood_attention;
pub mod relation_attention;
pub mod seed;
pub mod tensor;
pub mod training;
