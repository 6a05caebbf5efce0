//! HTTP advisor client: `POST {"prompt": ...}` and read back `{"completion": ...}`.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::prompt::{parse_answer, render_prompt, render_repair, AdvisorRequest};
use super::{Advisor, AdvisorResponse, AdvisorStats, ResponseStatus};
use crate::envs::Action;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RemoteConfig {
    pub endpoint: String,
    /// Header that carries the API key, e.g. `Authorization` or `x-api-key`.
    pub api_key_header: String,
    /// Environment variable holding the API key; unset or empty sends no header.
    pub api_key_env: String,
    pub timeout_ms: u64,
    /// Extra attempts after the first transport failure.
    pub retries: u32,
    pub retry_backoff_ms: u64,
    /// Concurrent requests per trigger batch.
    pub parallelism: usize,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            api_key_header: "Authorization".into(),
            api_key_env: "VARL_ADVISOR_API_KEY".into(),
            timeout_ms: 30_000,
            retries: 2,
            retry_backoff_ms: 200,
            parallelism: 4,
        }
    }
}

impl RemoteConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.endpoint.starts_with("http://") || self.endpoint.starts_with("https://")) {
            return Err(Error::Config(format!("advisor endpoint {:?} is not an http(s) URL", self.endpoint)));
        }
        if self.parallelism == 0 || self.timeout_ms == 0 {
            return Err(Error::Config("advisor parallelism and timeout must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct PromptBody<'a> {
    prompt: &'a str,
}

#[derive(Deserialize)]
struct CompletionBody {
    completion: String,
}

/// Final answer for one rendered prompt (transport failures are not cached).
#[derive(Debug, Clone)]
struct Answer {
    text: String,
    action: Option<Action>,
}

#[derive(Default)]
struct Counters {
    network_calls: AtomicU64,
    repairs: AtomicU64,
}

pub struct RemoteAdvisor {
    config: RemoteConfig,
    agent: ureq::Agent,
    api_key: Option<String>,
    cache: HashMap<String, Answer>,
    stats: AdvisorStats,
}

impl std::fmt::Debug for RemoteAdvisor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteAdvisor")
            .field("endpoint", &self.config.endpoint)
            .field("cached", &self.cache.len())
            .field("stats", &self.stats)
            .finish()
    }
}

impl RemoteAdvisor {
    pub fn new(config: RemoteConfig) -> Result<Self> {
        config.validate()?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .build()
            .new_agent();
        let api_key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        Ok(Self {
            config,
            agent,
            api_key,
            cache: HashMap::new(),
            stats: AdvisorStats::default(),
        })
    }

    pub fn cache_len(&self) -> usize {
        self.cache.len()
    }

    fn post(&self, prompt: &str, counters: &Counters) -> std::result::Result<String, String> {
        let mut last = String::new();
        for attempt in 0..=self.config.retries {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(self.config.retry_backoff_ms << (attempt - 1).min(6)));
            }
            counters.network_calls.fetch_add(1, Ordering::Relaxed);
            let mut req = self.agent.post(&self.config.endpoint);
            if let Some(key) = &self.api_key {
                req = req.header(self.config.api_key_header.as_str(), key.as_str());
            }
            let result = req
                .send_json(PromptBody { prompt })
                .and_then(|mut resp| resp.body_mut().read_json::<CompletionBody>());
            match result {
                Ok(body) => return Ok(body.completion),
                Err(e) => {
                    log::debug!("advisor attempt {} failed: {e}", attempt + 1);
                    last = e.to_string();
                }
            }
        }
        Err(last)
    }

    /// One prompt, with a single repair round on an unparseable reply.
    fn ask(&self, prompt: &str, req: &AdvisorRequest, counters: &Counters) -> std::result::Result<Answer, String> {
        let text = self.post(prompt, counters)?;
        if let Some(action) = parse_answer(&text, &req.space, &req.labels) {
            return Ok(Answer {
                text,
                action: Some(action),
            });
        }
        counters.repairs.fetch_add(1, Ordering::Relaxed);
        let retry = self.post(&render_repair(prompt, &text), counters)?;
        let action = parse_answer(&retry, &req.space, &req.labels);
        Ok(Answer { text: retry, action })
    }
}

impl Advisor for RemoteAdvisor {
    fn advise(&mut self, requests: &[AdvisorRequest]) -> Vec<AdvisorResponse> {
        let prompts: Vec<String> = requests.iter().map(render_prompt).collect();
        // Unique prompts not yet cached, in first-seen order.
        let mut pending: Vec<usize> = Vec::new();
        let mut seen: HashMap<&str, ()> = HashMap::new();
        for (i, p) in prompts.iter().enumerate() {
            if !self.cache.contains_key(p) && seen.insert(p.as_str(), ()).is_none() {
                pending.push(i);
            }
        }
        let counters = Counters::default();
        let results: Vec<Mutex<Option<(std::result::Result<Answer, String>, Duration)>>> =
            pending.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = self.config.parallelism.min(pending.len());
        let this = &*self;
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let j = next.fetch_add(1, Ordering::Relaxed);
                    let Some(&i) = pending.get(j) else { break };
                    let start = Instant::now();
                    let answer = this.ask(&prompts[i], &requests[i], &counters);
                    *results[j].lock().expect("result slot") = Some((answer, start.elapsed()));
                });
            }
        });

        let mut fresh: HashMap<&str, (std::result::Result<Answer, String>, Duration)> = HashMap::new();
        for (j, slot) in results.into_iter().enumerate() {
            let (answer, latency) = slot.into_inner().expect("result slot").expect("every pending prompt is asked");
            fresh.insert(prompts[pending[j]].as_str(), (answer, latency));
        }
        self.stats.network_calls += counters.network_calls.load(Ordering::Relaxed);
        self.stats.repairs += counters.repairs.load(Ordering::Relaxed);

        let mut responses = Vec::with_capacity(requests.len());
        for (i, prompt) in prompts.iter().enumerate() {
            self.stats.requests += 1;
            let first_use = pending.binary_search(&i).is_ok();
            let response = match (self.cache.get(prompt), fresh.get(prompt.as_str())) {
                (Some(answer), _) => {
                    self.stats.cache_hits += 1;
                    to_response(answer, true, Duration::ZERO)
                }
                (None, Some((Ok(answer), latency))) => {
                    let r = to_response(answer, !first_use, *latency);
                    self.cache.insert(prompt.clone(), answer.clone());
                    if !first_use {
                        self.stats.cache_hits += 1;
                    }
                    r
                }
                (None, Some((Err(e), latency))) => {
                    if first_use {
                        log::warn!("advisor unreachable after {} attempts: {e}", self.config.retries + 1);
                    }
                    AdvisorResponse {
                        suggested_action: String::new(),
                        parsed_action: None,
                        status: ResponseStatus::TransportFailure,
                        cached: false,
                        latency: *latency,
                    }
                }
                (None, None) => unreachable!("prompt neither cached nor pending"),
            };
            match response.status {
                ResponseStatus::ParseFailure => self.stats.parse_failures += 1,
                ResponseStatus::TransportFailure => self.stats.transport_failures += 1,
                ResponseStatus::Parsed => {}
            }
            responses.push(response);
        }
        responses
    }

    fn stats(&self) -> AdvisorStats {
        self.stats
    }
}

fn to_response(answer: &Answer, cached: bool, latency: Duration) -> AdvisorResponse {
    AdvisorResponse {
        suggested_action: answer.text.clone(),
        parsed_action: answer.action.clone(),
        status: if answer.action.is_some() {
            ResponseStatus::Parsed
        } else {
            ResponseStatus::ParseFailure
        },
        cached,
        latency,
    }
}
