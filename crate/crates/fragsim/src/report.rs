//! Suite reports and their JSON form.

use std::collections::BTreeMap;
use std::time::Duration;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Rule {
    #[serde(rename = "<")]
    Below,
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">")]
    Above,
}

impl Rule {
    fn holds(self, statistic: f64, threshold: f64) -> bool {
        match self {
            Rule::Below => statistic < threshold,
            Rule::AtMost => statistic <= threshold,
            Rule::Above => statistic > threshold,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Rule::Below => "<",
            Rule::AtMost => "<=",
            Rule::Above => ">",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub statistic: f64,
    pub rule: Rule,
    pub threshold: f64,
    pub sample_size: usize,
    pub pass: bool,
    /// Timing varies between runs, so it is shown but never serialized.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl Check {
    pub fn new(name: &str, statistic: f64, rule: Rule, threshold: f64, sample_size: usize) -> Self {
        Self {
            name: name.to_string(),
            statistic,
            rule,
            threshold,
            sample_size,
            // NaN never passes
            pass: rule.holds(statistic, threshold),
            wall_time: Duration::ZERO,
        }
    }

    pub fn timed(mut self, wall_time: Duration) -> Self {
        self.wall_time = wall_time;
        self
    }

    pub fn summary(&self) -> String {
        format!(
            "{} {}: {:.6e} {} {:.6e} (n = {}, {:.2} s)",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.statistic,
            self.rule.symbol(),
            self.threshold,
            self.sample_size,
            self.wall_time.as_secs_f64()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub claim: String,
    pub seed: u64,
    pub replicas: usize,
    pub config: BTreeMap<String, String>,
    pub notes: Vec<String>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl SuiteReport {
    pub fn new(suite: &str, claim: &str, seed: u64, replicas: usize, config: BTreeMap<String, String>) -> Self {
        Self {
            suite: suite.to_string(),
            claim: claim.to_string(),
            seed,
            replicas,
            config,
            notes: Vec::new(),
            checks: Vec::new(),
            pass: true,
        }
    }

    pub fn push(&mut self, check: Check) {
        self.pass &= check.pass;
        self.checks.push(check);
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    /// Pretty JSON with a trailing newline; identical inputs give identical
    /// bytes.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn summary(&self) -> String {
        let mut out = format!(
            "{} {} (seed {}, {} replicas)\n",
            if self.pass { "PASS" } else { "FAIL" },
            self.suite,
            self.seed,
            self.replicas
        );
        for c in &self.checks {
            out.push_str("  ");
            out.push_str(&c.summary());
            out.push('\n');
        }
        for n in &self.notes {
            out.push_str("  note: ");
            out.push_str(n);
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overall_pass_is_the_conjunction() {
        let mut r = SuiteReport::new("x", "claim", 1, 10, BTreeMap::new());
        r.push(Check::new("a", 0.01, Rule::Below, 0.02, 10));
        assert!(r.pass);
        r.push(Check::new("b", 0.0, Rule::AtMost, 0.0, 10));
        assert!(r.pass);
        r.push(Check::new("c", f64::NAN, Rule::Below, 1.0, 10));
        assert!(!r.pass);
        r.push(Check::new("d", 2.0, Rule::Above, 1.0, 10));
        assert!(!r.pass);
    }

    #[test]
    fn wall_time_stays_out_of_the_json() {
        let mut a = SuiteReport::new("x", "claim", 1, 10, BTreeMap::new());
        let mut b = a.clone();
        a.push(Check::new("k", 0.5, Rule::Below, 1.0, 3).timed(Duration::from_millis(5)));
        b.push(Check::new("k", 0.5, Rule::Below, 1.0, 3).timed(Duration::from_millis(900)));
        assert_eq!(a.to_json(), b.to_json());
        assert!(a.to_json().contains("\"rule\": \"<\""));
    }
}
