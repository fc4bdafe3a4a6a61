//! Deterministic task reports in JSON and text form.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    /// A verification task that met its tolerance.
    Pass,
    /// A verification task that did not.
    Fail,
    /// A compute/bind task with nothing to verify.
    Computed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskReport {
    pub name: String,
    pub status: TaskStatus,
    /// Max-entry residual of the verification, when one applies and is
    /// finite.
    pub residual: Option<f64>,
    pub outputs: serde_json::Value,
}

impl TaskReport {
    pub fn new(
        name: &str,
        status: TaskStatus,
        residual: Option<f64>,
        outputs: serde_json::Value,
    ) -> Self {
        TaskReport {
            name: name.to_owned(),
            status,
            residual: residual.filter(|r| r.is_finite()),
            outputs,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub tasks: Vec<TaskReport>,
}

impl Report {
    pub fn any_failed(&self) -> bool {
        self.tasks.iter().any(|t| t.status == TaskStatus::Fail)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut passed = 0usize;
        let mut failed = 0usize;
        let mut computed = 0usize;
        for task in &self.tasks {
            let status = match task.status {
                TaskStatus::Pass => {
                    passed += 1;
                    "PASS"
                }
                TaskStatus::Fail => {
                    failed += 1;
                    "FAIL"
                }
                TaskStatus::Computed => {
                    computed += 1;
                    "computed"
                }
            };
            match task.residual {
                Some(r) => out.push_str(&format!(
                    "task {}: {} (residual {:.3e})\n",
                    task.name, status, r
                )),
                None => out.push_str(&format!("task {}: {}\n", task.name, status)),
            }
        }
        out.push_str(&format!(
            "summary: {} tasks, {passed} passed, {failed} failed, {computed} computed\n",
            self.tasks.len()
        ));
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Text,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "text" => Ok(Format::Text),
            other => Err(format!("unknown format `{other}` (expected json or text)")),
        }
    }
}
