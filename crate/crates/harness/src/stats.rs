//! Fuzzing counters.

use std::time::Duration;

use serde::Serialize;

use crate::outcome::Outcome;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Stats {
    pub iterations: u64,
    pub valid: u64,
    pub invalid: u64,
    pub crashes: u64,
    pub timeouts: u64,
    /// Iterations where no input could be produced.
    pub gen_failed: u64,
    pub elapsed_secs: f64,
}

impl Stats {
    pub fn record(&mut self, o: Option<Outcome>) {
        self.iterations += 1;
        match o {
            Some(Outcome::Valid) => self.valid += 1,
            Some(Outcome::Invalid) => self.invalid += 1,
            Some(Outcome::Crash) => self.crashes += 1,
            Some(Outcome::Timeout) => self.timeouts += 1,
            None => self.gen_failed += 1,
        }
    }

    pub fn merge(&mut self, other: &Stats) {
        self.iterations += other.iterations;
        self.valid += other.valid;
        self.invalid += other.invalid;
        self.crashes += other.crashes;
        self.timeouts += other.timeouts;
        self.gen_failed += other.gen_failed;
        self.elapsed_secs = self.elapsed_secs.max(other.elapsed_secs);
    }

    pub fn is_consistent(&self) -> bool {
        self.valid + self.invalid + self.crashes + self.timeouts + self.gen_failed == self.iterations
    }

    pub fn valid_pct(&self) -> f64 {
        if self.iterations == 0 {
            0.0
        } else {
            100.0 * self.valid as f64 / self.iterations as f64
        }
    }

    pub fn execs_per_sec(&self) -> f64 {
        if self.elapsed_secs > 0.0 {
            self.iterations as f64 / self.elapsed_secs
        } else {
            0.0
        }
    }

    pub fn set_elapsed(&mut self, d: Duration) {
        self.elapsed_secs = d.as_secs_f64();
    }

    /// One-line progress report.
    pub fn line(&self) -> String {
        serde_json::json!({
            "iters": self.iterations,
            "valid%": (self.valid_pct() * 100.0).round() / 100.0,
            "crashes": self.crashes,
            "execs/s": self.execs_per_sec().round(),
        })
        .to_string()
    }

    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("stats serialize");
        v["execs_per_sec"] = self.execs_per_sec().into();
        serde_json::to_string_pretty(&v).expect("stats serialize")
    }
}
