//! Pass/fail bookkeeping for the acceptance suite in `tests/acceptance.rs`.

use std::time::{Duration, Instant};

/// Outcome of one acceptance criterion.
#[derive(Clone, Debug)]
pub struct Verdict {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Option<Duration>,
}

impl Verdict {
    pub fn line(&self) -> String {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        let time = match self.budget {
            Some(b) => format!("{:.2} s of {:.0} s", self.elapsed.as_secs_f64(), b.as_secs_f64()),
            None => format!("{:.2} s", self.elapsed.as_secs_f64()),
        };
        format!("{tag}  {}: {} [{time}]", self.name, self.detail)
    }
}

/// Runs criteria in order and prints one line per criterion as it finishes.
#[derive(Default)]
pub struct Suite {
    verdicts: Vec<Verdict>,
}

impl Suite {
    /// `check` returns whether the numerical condition holds plus a summary;
    /// exceeding `budget` also fails the criterion.
    pub fn run<F>(&mut self, name: &'static str, budget: Option<Duration>, check: F)
    where
        F: FnOnce() -> Result<(bool, String), String>,
    {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        let in_time = budget.is_none_or(|b| elapsed <= b);
        let detail = if ok && !in_time { format!("{detail}; over time budget") } else { detail };
        let verdict = Verdict { name, passed: ok && in_time, detail, elapsed, budget };
        println!("{}", verdict.line());
        self.verdicts.push(verdict);
    }

    pub fn failures(&self) -> usize {
        self.verdicts.iter().filter(|v| !v.passed).count()
    }

    pub fn summary(&self) -> String {
        format!("{} criteria: {} passed, {} failed", self.verdicts.len(), self.verdicts.len() - self.failures(), self.failures())
    }
}
