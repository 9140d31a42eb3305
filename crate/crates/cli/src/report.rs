use std::fmt::Display;

use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Output {
    Table,
    Json,
}

/// Usage or input problem; maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl<E: Display> From<E> for UsageError {
    fn from(e: E) -> Self {
        UsageError(e.to_string())
    }
}

pub type Outcome = Result<Report, UsageError>;

/// What a subcommand hands back: JSON fields, table lines, and whether every
/// requested check held.
#[derive(Debug)]
pub struct Report {
    command: &'static str,
    seed: u64,
    ok: bool,
    fields: Map<String, Value>,
    lines: Vec<String>,
}

impl Report {
    pub fn new(command: &'static str, seed: u64) -> Self {
        Self {
            command,
            seed,
            ok: true,
            fields: Map::new(),
            lines: Vec::new(),
        }
    }

    pub fn field(&mut self, key: &str, value: impl serde::Serialize) -> &mut Self {
        let v = serde_json::to_value(value).expect("report fields serialize");
        self.fields.insert(key.to_string(), v);
        self
    }

    pub fn line(&mut self, text: impl Into<String>) -> &mut Self {
        self.lines.push(text.into());
        self
    }

    /// Records a check; any failing check makes the run exit with 1.
    pub fn check(&mut self, passed: bool) -> &mut Self {
        self.ok &= passed;
        self
    }

    pub fn ok(&self) -> bool {
        self.ok
    }

    pub fn render(&self, output: Output) -> String {
        match output {
            Output::Json => {
                let mut all = self.fields.clone();
                all.insert("command".into(), Value::from(self.command));
                all.insert("seed".into(), Value::from(self.seed));
                all.insert("ok".into(), Value::from(self.ok));
                let mut text = serde_json::to_string_pretty(&Value::Object(all)).expect("json");
                text.push('\n');
                text
            }
            Output::Table => {
                let mut text = format!("keisler {} (seed {})\n", self.command, self.seed);
                for l in &self.lines {
                    text.push_str("  ");
                    text.push_str(l);
                    text.push('\n');
                }
                text.push_str(if self.ok { "result: ok\n" } else { "result: CHECK FAILED\n" });
                text
            }
        }
    }
}
