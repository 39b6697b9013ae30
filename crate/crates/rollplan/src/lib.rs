//! File formats, scenario generation, batch experiments and the command
//! line around `rollplan-core`.

pub mod cli;
pub mod experiment;
pub mod generate;
pub mod logfile;
pub mod mapfile;
pub mod output;
pub mod report;
pub mod scenariofile;
pub mod weightsfile;
pub mod wire;
