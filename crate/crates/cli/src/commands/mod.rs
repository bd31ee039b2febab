pub mod besov;
pub mod converge;
pub mod simulate;
pub mod solver;
pub mod wick;

use serde_json::Value;

/// `(passed, aborted)` plus the JSON body placed under `results` in the report.
pub type CommandResult = Result<(crate::Outcome, Value), crate::CliError>;

/// Finite numbers as JSON numbers, everything else as `null`.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}
