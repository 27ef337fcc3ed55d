use std::process::ExitCode;

use serde_json::Value;

/// Command output: a JSON document and its human-readable rendering.
#[derive(Debug)]
pub struct Report {
    json: Value,
    lines: Vec<String>,
}

impl Report {
    pub fn new(json: Value) -> Self {
        Report { json, lines: Vec::new() }
    }

    pub fn line(mut self, text: String) -> Self {
        self.lines.push(drop_negative_zero(&text));
        self
    }

    pub fn with_json(mut self, json: Value) -> Self {
        self.json = json;
        self
    }

    pub fn extend_json(&mut self, key: &str, value: Value) {
        if let Value::Object(map) = &mut self.json {
            map.insert(key.into(), value);
        }
    }

    pub fn print(&self, json: bool) {
        if json {
            println!("{}", serde_json::to_string_pretty(&self.json).expect("JSON values serialize"));
        } else {
            for l in &self.lines {
                println!("{l}");
            }
        }
    }
}

/// Rewrites `-0.000000` (a tiny negative rounded to six places) as `0.000000`.
fn drop_negative_zero(text: &str) -> String {
    const NEG: &str = "-0.000000";
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(pos) = rest.find(NEG) {
        let preceded_by_digit = out
            .chars()
            .chain(rest[..pos].chars())
            .last()
            .is_some_and(|c| c.is_ascii_digit());
        let followed_by_digit = rest[pos + NEG.len()..].starts_with(|c: char| c.is_ascii_digit());
        out.push_str(&rest[..pos]);
        if preceded_by_digit || followed_by_digit {
            out.push_str(NEG);
        } else {
            out.push_str(&NEG[1..]);
        }
        rest = &rest[pos + NEG.len()..];
    }
    out.push_str(rest);
    out
}

#[derive(Debug)]
pub enum CliError {
    /// Well-formed input on which the computation is undefined or fails.
    Domain(String),
    /// Unreadable or malformed input.
    Parse(String),
    /// A completed check whose verdict is negative.
    Rejected(Report),
}

impl From<qlandauer::Error> for CliError {
    fn from(e: qlandauer::Error) -> Self {
        if e.is_parse_error() {
            CliError::Parse(e.to_string())
        } else {
            CliError::Domain(e.to_string())
        }
    }
}

impl CliError {
    pub fn exit(self, json: bool) -> ExitCode {
        match self {
            CliError::Domain(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(1)
            }
            CliError::Parse(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(2)
            }
            CliError::Rejected(report) => {
                report.print(json);
                ExitCode::from(1)
            }
        }
    }
}
