//! Report envelope, CSV rendering and writing to a file or stdout.

use std::fs;
use std::io::Write;
use std::path::Path;

use pinney::ode::State;
use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;
use crate::error::CliError;

pub const SCHEMA_ID: &str = "pinney-report/1";

#[derive(Serialize)]
struct Tool {
    name: &'static str,
    version: &'static str,
}

#[derive(Serialize)]
struct ErrorBody {
    reason: &'static str,
    message: String,
}

#[derive(Serialize)]
struct Envelope<'a> {
    schema: &'static str,
    tool: Tool,
    command: &'a str,
    config: &'a RunConfig,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<ErrorBody>,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<Value>,
}

fn tool() -> Tool {
    Tool {
        name: "pinney",
        version: env!("CARGO_PKG_VERSION"),
    }
}

pub fn json_report(command: &str, config: &RunConfig, result: Value) -> Result<String, CliError> {
    render(&Envelope {
        schema: SCHEMA_ID,
        tool: tool(),
        command,
        config,
        status: "ok",
        error: None,
        result: Some(result),
    })
}

pub fn json_error(command: &str, config: &RunConfig, err: &CliError) -> Result<String, CliError> {
    render(&Envelope {
        schema: SCHEMA_ID,
        tool: tool(),
        command,
        config,
        status: "error",
        error: Some(ErrorBody {
            reason: err.reason_code(),
            message: err.to_string(),
        }),
        result: None,
    })
}

fn render(envelope: &Envelope) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(envelope).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// `t,x,v` rows with 17 significant digits and LF line endings.
pub fn csv(samples: &[State]) -> String {
    let mut out = String::from("t,x,v\n");
    for s in samples {
        out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", s.t, s.x, s.v));
    }
    out
}

pub fn to_value<T: Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Io(e.to_string()))
}

pub fn write(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Io(e.to_string()))
        }
    }
}
