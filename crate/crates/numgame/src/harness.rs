//! Batch yes/no querying of chat-completion endpoints.
//!
//! The protocol mirrors the behavioral task: for every example set, every
//! target in the domain is queried separately ("does {target} belong to the
//! same concept as {examples}?"), the run is repeated for a number of trials,
//! and valid yes/no answers are averaged into p(yes) per (set, target) cell.
//!
//! The harness speaks a single chat-completion-shaped HTTP contract
//! (`{"model", "messages", "temperature"}` in, `choices[0].message.content`
//! out) with pluggable auth headers, so one client covers many providers.
//! Requests run on a bounded worker pool with exponential-backoff retries.
//! Every trial lands in an append-only JSONL log which doubles as a resume
//! checkpoint and is sufficient to recompute the response matrix exactly.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::engine::ExampleSet;
use crate::error::{Error, Result};
use crate::eval::ResponseMatrix;

/// Default prompt; `{examples}` and `{target}` are substituted per query.
pub const DEFAULT_PROMPT_TEMPLATE: &str = "Here is a set of numbers that share a common \
     mathematical concept: {examples}. Does the number {target} belong to the same concept? \
     Answer only yes or no.";

/// Default environment variable holding the API key.
pub const DEFAULT_API_KEY_ENV: &str = "NUMGAME_API_KEY";

/// Parsed verdict of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Yes,
    No,
    Invalid,
}

/// One persisted query outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub set_id: String,
    pub target: u32,
    pub trial_index: u32,
    pub raw_text: String,
    pub parsed: Verdict,
    pub latency_ms: u64,
    pub attempt_count: u32,
}

/// Retry policy for transient failures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_backoff_ms: u64,
    pub request_timeout_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            initial_backoff_ms: 250,
            request_timeout_ms: 30_000,
        }
    }
}

/// How credentials are attached to requests. Keys always come from the
/// environment, never from flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuthScheme {
    /// `Authorization: Bearer <key>`.
    Bearer,
    /// A custom header name carrying the key verbatim.
    Header(String),
    /// No credentials (local mock endpoints).
    None,
}

/// A full query job over sets x targets x trials.
#[derive(Debug, Clone)]
pub struct QueryJob {
    pub sets: Vec<ExampleSet>,
    pub domain_max: u32,
    pub trials: u32,
    pub prompt_template: String,
    pub endpoint: String,
    pub model_name: String,
    pub temperature: Option<f64>,
    pub max_parallel: usize,
    pub retry: RetryPolicy,
    pub auth: AuthScheme,
    pub api_key_env: String,
    /// Hard cap on requests issued this run; exceeding it stops gracefully
    /// with partial results.
    pub max_requests: Option<u64>,
}

impl QueryJob {
    pub fn new(sets: Vec<ExampleSet>, endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        QueryJob {
            sets,
            domain_max: 100,
            trials: 10,
            prompt_template: DEFAULT_PROMPT_TEMPLATE.to_string(),
            endpoint: endpoint.into(),
            model_name: model.into(),
            temperature: None,
            max_parallel: 4,
            retry: RetryPolicy::default(),
            auth: AuthScheme::Bearer,
            api_key_env: DEFAULT_API_KEY_ENV.to_string(),
            max_requests: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::validation("query job", "trials must be >= 1"));
        }
        if self.max_parallel < 1 {
            return Err(Error::validation("query job", "max_parallel must be >= 1"));
        }
        if self.sets.is_empty() {
            return Err(Error::validation("query job", "no example sets"));
        }
        for set in &self.sets {
            set.validate(self.domain_max)?;
        }
        validate_template(&self.prompt_template)?;
        Ok(())
    }
}

fn validate_template(template: &str) -> Result<()> {
    for slot in ["{examples}", "{target}"] {
        if !template.contains(slot) {
            return Err(Error::Template(format!("template is missing the {slot} slot")));
        }
    }
    Ok(())
}

/// Substitute the example list and target into the template.
pub fn build_prompt(template: &str, examples: &[u32], target: u32) -> Result<String> {
    validate_template(template)?;
    let examples = examples
        .iter()
        .map(|n| n.to_string())
        .collect::<Vec<_>>()
        .join(", ");
    Ok(template
        .replace("{examples}", &examples)
        .replace("{target}", &target.to_string()))
}

/// Tolerant yes/no parsing: case-insensitive, ignores surrounding
/// punctuation, accepts a leading yes/no token. Everything else is Invalid.
pub fn parse_response(raw: &str) -> Verdict {
    let trimmed = raw.trim_start_matches(|c: char| !c.is_ascii_alphanumeric());
    let token: String = trimmed
        .chars()
        .take_while(|c| c.is_ascii_alphabetic())
        .collect::<String>()
        .to_ascii_lowercase();
    match token.as_str() {
        "yes" => Verdict::Yes,
        "no" => Verdict::No,
        _ => Verdict::Invalid,
    }
}

/// Outcome of a harness run.
#[derive(Debug)]
pub struct RunOutcome {
    pub matrix: ResponseMatrix,
    pub records: Vec<TrialRecord>,
    pub planned: u64,
    pub executed: u64,
    /// True when the request budget cut the plan short.
    pub partial: bool,
    /// Cells with zero valid trials, filled with the set mean.
    pub filled_cells: usize,
}

/// Read a JSONL trial log back into records.
pub fn read_trial_log(path: impl AsRef<Path>) -> Result<Vec<TrialRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TrialRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            location: format!("line {}", i + 1),
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Aggregate trial records into a response matrix.
///
/// p(yes) = yes / (yes + no) over valid trials; invalid trials are excluded.
/// Cells with zero valid trials take the set's mean p(yes) (0 when the whole
/// set is invalid) and are counted in the returned fill total. Sets with no
/// records at all are omitted, which is how budget-truncated runs stay
/// partial rather than fabricated.
pub fn matrix_from_trials(
    records: &[TrialRecord],
    sets: &[ExampleSet],
    domain_max: u32,
    agent: &str,
) -> (ResponseMatrix, usize) {
    let mut tallies: BTreeMap<&str, Vec<(u32, u32)>> = BTreeMap::new();
    let known: BTreeSet<&str> = sets.iter().map(|s| s.id.as_str()).collect();
    for record in records {
        if !known.contains(record.set_id.as_str()) || record.target < 1 || record.target > domain_max
        {
            continue;
        }
        let tally = tallies
            .entry(record.set_id.as_str())
            .or_insert_with(|| vec![(0, 0); domain_max as usize]);
        let cell = &mut tally[(record.target - 1) as usize];
        match record.parsed {
            Verdict::Yes => cell.0 += 1,
            Verdict::No => cell.1 += 1,
            Verdict::Invalid => {}
        }
    }

    let mut matrix = ResponseMatrix::new(agent, domain_max);
    let mut counts: BTreeMap<String, Vec<u32>> = BTreeMap::new();
    let mut filled = 0usize;
    for (set_id, tally) in tallies {
        let observed: Vec<f64> = tally
            .iter()
            .filter(|(y, n)| y + n > 0)
            .map(|&(y, n)| y as f64 / (y + n) as f64)
            .collect();
        let fill = if observed.is_empty() {
            0.0
        } else {
            observed.iter().sum::<f64>() / observed.len() as f64
        };
        let mut values = Vec::with_capacity(domain_max as usize);
        let mut trial_counts = Vec::with_capacity(domain_max as usize);
        for &(y, n) in &tally {
            let total = y + n;
            trial_counts.push(total);
            if total == 0 {
                filled += 1;
                values.push(fill);
            } else {
                values.push(y as f64 / total as f64);
            }
        }
        matrix
            .insert_row(set_id.to_string(), values)
            .expect("aggregated probabilities are in range");
        counts.insert(set_id.to_string(), trial_counts);
    }
    matrix.trial_counts = Some(counts);
    (matrix, filled)
}

enum RequestOutcome {
    Answer { text: String, attempts: u32 },
    Failed { message: String, attempts: u32 },
    FatalAuth(String),
}

fn issue_request(
    client: &reqwest::blocking::Client,
    job: &QueryJob,
    api_key: Option<&str>,
    prompt: &str,
) -> RequestOutcome {
    let mut body = json!({
        "model": job.model_name,
        "messages": [{"role": "user", "content": prompt}],
    });
    if let Some(t) = job.temperature {
        body["temperature"] = json!(t);
    }

    let mut last_error = String::new();
    for attempt in 1..=job.retry.max_attempts {
        if attempt > 1 {
            let backoff = job.retry.initial_backoff_ms.saturating_mul(1 << (attempt - 2));
            std::thread::sleep(Duration::from_millis(backoff));
        }
        let mut request = client.post(&job.endpoint).json(&body);
        match (&job.auth, api_key) {
            (AuthScheme::Bearer, Some(key)) => {
                request = request.header("authorization", format!("Bearer {key}"));
            }
            (AuthScheme::Header(name), Some(key)) => {
                request = request.header(name.as_str(), key);
            }
            _ => {}
        }
        match request.send() {
            Ok(response) => {
                let status = response.status();
                if status == reqwest::StatusCode::UNAUTHORIZED
                    || status == reqwest::StatusCode::FORBIDDEN
                {
                    return RequestOutcome::FatalAuth(format!("endpoint returned {status}"));
                }
                if !status.is_success() {
                    last_error = format!("status {status}");
                    continue;
                }
                match response.json::<serde_json::Value>() {
                    Ok(value) => {
                        let text = value["choices"][0]["message"]["content"]
                            .as_str()
                            .or_else(|| value["choices"][0]["text"].as_str())
                            .unwrap_or_default()
                            .to_string();
                        return RequestOutcome::Answer {
                            text,
                            attempts: attempt,
                        };
                    }
                    Err(e) => {
                        last_error = format!("bad response body: {e}");
                        continue;
                    }
                }
            }
            Err(e) => {
                last_error = e.to_string();
                continue;
            }
        }
    }
    RequestOutcome::Failed {
        message: last_error,
        attempts: job.retry.max_attempts,
    }
}

/// Run the full job: all (set, target, trial) queries on a bounded worker
/// pool, records appended to the JSONL log at `log_path` (also the resume
/// checkpoint when `resume` is set), results aggregated deterministically.
pub fn run_job(job: &QueryJob, log_path: impl AsRef<Path>, resume: bool) -> Result<RunOutcome> {
    job.validate()?;
    let log_path = log_path.as_ref();

    let api_key = match &job.auth {
        AuthScheme::None => None,
        _ => match std::env::var(&job.api_key_env) {
            Ok(key) if !key.is_empty() => Some(key),
            _ => {
                return Err(Error::Auth(format!(
                    "environment variable {} is not set",
                    job.api_key_env
                )))
            }
        },
    };

    let mut prior_records = Vec::new();
    if resume && log_path.exists() {
        prior_records = read_trial_log(log_path)?;
    }
    let done: BTreeSet<(String, u32, u32)> = prior_records
        .iter()
        .map(|r| (r.set_id.clone(), r.target, r.trial_index))
        .collect();

    // Task order is fixed: sets in input order, targets ascending, trials
    // ascending. The budget, if any, cuts this ordered plan.
    let mut tasks: Vec<(usize, u32, u32)> = Vec::new();
    for (set_idx, _) in job.sets.iter().enumerate() {
        for target in 1..=job.domain_max {
            for trial in 0..job.trials {
                tasks.push((set_idx, target, trial));
            }
        }
    }
    let full_plan = tasks.len() as u64;
    tasks.retain(|(set_idx, target, trial)| {
        !done.contains(&(job.sets[*set_idx].id.clone(), *target, *trial))
    });
    let mut partial = false;
    if let Some(budget) = job.max_requests {
        if (tasks.len() as u64) > budget {
            tasks.truncate(budget as usize);
            partial = true;
        }
    }
    let planned = tasks.len() as u64;

    let client = reqwest::blocking::Client::builder()
        .timeout(Duration::from_millis(job.retry.request_timeout_ms))
        .build()
        .map_err(|e| Error::Http {
            attempts: 0,
            message: e.to_string(),
        })?;

    let log_file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(log_path)
        .map_err(|e| Error::io(log_path.display().to_string(), e))?;

    let slots: Mutex<Vec<Option<TrialRecord>>> = Mutex::new(vec![None; tasks.len()]);
    let log_writer = Mutex::new(log_file);
    let next_task = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let auth_error: Mutex<Option<String>> = Mutex::new(None);

    std::thread::scope(|scope| {
        for _ in 0..job.max_parallel.min(tasks.len().max(1)) {
            scope.spawn(|| {
                loop {
                    if abort.load(Ordering::Relaxed) {
                        break;
                    }
                    let index = next_task.fetch_add(1, Ordering::Relaxed);
                    if index >= tasks.len() {
                        break;
                    }
                    let (set_idx, target, trial) = tasks[index];
                    let set = &job.sets[set_idx];
                    let prompt = build_prompt(&job.prompt_template, &set.examples, target)
                        .expect("template validated up front");
                    let start = Instant::now();
                    let outcome = issue_request(&client, job, api_key.as_deref(), &prompt);
                    let latency_ms = start.elapsed().as_millis() as u64;
                    let record = match outcome {
                        RequestOutcome::Answer { text, attempts } => TrialRecord {
                            set_id: set.id.clone(),
                            target,
                            trial_index: trial,
                            parsed: parse_response(&text),
                            raw_text: text,
                            latency_ms,
                            attempt_count: attempts,
                        },
                        RequestOutcome::Failed { message, attempts } => TrialRecord {
                            set_id: set.id.clone(),
                            target,
                            trial_index: trial,
                            raw_text: format!("<request failed: {message}>"),
                            parsed: Verdict::Invalid,
                            latency_ms,
                            attempt_count: attempts,
                        },
                        RequestOutcome::FatalAuth(message) => {
                            *auth_error.lock().unwrap() = Some(message);
                            abort.store(true, Ordering::Relaxed);
                            break;
                        }
                    };
                    // Persist in completion order so a crash loses at most
                    // in-flight requests; aggregation is order-independent.
                    {
                        let mut writer = log_writer.lock().unwrap();
                        let line = serde_json::to_string(&record).expect("record serializes");
                        let _ = writeln!(writer, "{line}");
                    }
                    slots.lock().unwrap()[index] = Some(record);
                }
            });
        }
    });

    if let Some(message) = auth_error.lock().unwrap().take() {
        return Err(Error::Auth(message));
    }

    let new_records: Vec<TrialRecord> = slots
        .into_inner()
        .unwrap()
        .into_iter()
        .flatten()
        .collect();
    let executed = new_records.len() as u64;

    let mut records = prior_records;
    records.extend(new_records);
    records.sort_by(|a, b| {
        let pos = |r: &TrialRecord| {
            (
                job.sets.iter().position(|s| s.id == r.set_id),
                r.target,
                r.trial_index,
            )
        };
        pos(a).cmp(&pos(b))
    });

    let (matrix, filled_cells) = matrix_from_trials(&records, &job.sets, job.domain_max, &job.model_name);
    Ok(RunOutcome {
        matrix,
        records,
        planned: full_plan,
        executed,
        partial,
        filled_cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_prompt_matches_contract() {
        let prompt = build_prompt(DEFAULT_PROMPT_TEMPLATE, &[2, 8], 16).unwrap();
        assert_eq!(
            prompt,
            "Here is a set of numbers that share a common mathematical concept: 2, 8. \
             Does the number 16 belong to the same concept? Answer only yes or no."
        );
    }

    #[test]
    fn prompt_repeats_value_in_both_slots() {
        let prompt = build_prompt(DEFAULT_PROMPT_TEMPLATE, &[15], 15).unwrap();
        assert_eq!(prompt.matches("15").count(), 2);
    }

    #[test]
    fn template_missing_slot_is_an_error() {
        assert!(matches!(
            build_prompt("examples: {examples}", &[1], 2),
            Err(Error::Template(_))
        ));
        assert!(matches!(
            build_prompt("target: {target}", &[1], 2),
            Err(Error::Template(_))
        ));
    }

    #[test]
    fn parse_response_cases() {
        assert_eq!(parse_response("Yes."), Verdict::Yes);
        assert_eq!(parse_response("  YES"), Verdict::Yes);
        assert_eq!(parse_response("no, it does not"), Verdict::No);
        assert_eq!(parse_response("\"No\""), Verdict::No);
        assert_eq!(parse_response("It depends"), Verdict::Invalid);
        assert_eq!(parse_response(""), Verdict::Invalid);
        assert_eq!(parse_response("yesterday"), Verdict::Invalid);
    }

    fn record(set_id: &str, target: u32, trial: u32, parsed: Verdict) -> TrialRecord {
        TrialRecord {
            set_id: set_id.to_string(),
            target,
            trial_index: trial,
            raw_text: String::new(),
            parsed,
            latency_ms: 0,
            attempt_count: 1,
        }
    }

    #[test]
    fn aggregation_excludes_invalid_trials() {
        let sets = vec![ExampleSet::new("s", vec![1])];
        let records = vec![
            record("s", 1, 0, Verdict::Yes),
            record("s", 1, 1, Verdict::No),
            record("s", 1, 2, Verdict::Invalid),
            record("s", 2, 0, Verdict::Yes),
            record("s", 2, 1, Verdict::Yes),
        ];
        let (matrix, filled) = matrix_from_trials(&records, &sets, 3, "mock");
        let row = &matrix.rows["s"];
        assert_eq!(row[0], 0.5);
        assert_eq!(row[1], 1.0);
        // Target 3 has no trials: filled with the set mean (0.75).
        assert_eq!(filled, 1);
        assert!((row[2] - 0.75).abs() < 1e-12);
        let counts = &matrix.trial_counts.as_ref().unwrap()["s"];
        assert_eq!(counts, &vec![2, 2, 0]);
    }

    #[test]
    fn job_validation_catches_bad_fields() {
        let mut job = QueryJob::new(vec![ExampleSet::new("s", vec![1])], "http://x", "m");
        job.trials = 0;
        assert!(job.validate().is_err());
        job.trials = 1;
        job.max_parallel = 0;
        assert!(job.validate().is_err());
        job.max_parallel = 1;
        job.prompt_template = "no slots".to_string();
        assert!(job.validate().is_err());
    }
}
