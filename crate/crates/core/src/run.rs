//! Compile, solve and analyze in one call.

use hubforge_lp::{solve, Solution, SolveOptions, Status, StructureError};
use thiserror::Error;

use crate::analysis::{analyze, AnalysisError, ScenarioResult};
use crate::compile::{compile, CompileError, CompiledModel};
use crate::model::HubModel;
use crate::profiles::ProfileSet;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error("malformed LP: {0}")]
    Structure(#[from] StructureError),
    #[error("solver finished {0}")]
    NotOptimal(Status),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

#[derive(Clone, Debug)]
pub struct Run {
    pub model: HubModel,
    pub compiled: CompiledModel,
    pub solution: Solution,
    pub result: ScenarioResult,
}

pub fn run_model(model: HubModel, profiles: &ProfileSet, opts: &SolveOptions) -> Result<Run, RunError> {
    let compiled = compile(&model, profiles)?;
    let solution = solve(&compiled.lp, opts)?;
    if solution.status != Status::Optimal {
        return Err(RunError::NotOptimal(solution.status));
    }
    let result = analyze(&model, &compiled, &solution)?;
    Ok(Run { model, compiled, solution, result })
}
