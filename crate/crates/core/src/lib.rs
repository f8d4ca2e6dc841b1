pub mod annotate;
pub mod cli;
pub mod config;
pub mod emit;
pub mod evaluate;
pub mod ingest;
pub mod leakcheck;
pub mod llm;
pub mod prompts;
