//! Chat-completion client for OpenAI-compatible endpoints.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use serde_json::json;

use super::{propose_via, Completer, ProposalRequest, ProposeError, Proposer};
use pps::Program;

/// Endpoint settings. Credentials are read from the environment variable
/// named by `api_key_env`, never stored here.
#[derive(Debug, Clone, PartialEq)]
pub struct EndpointConfig {
    pub base_url: String,
    pub api_key_env: String,
    pub model: String,
    pub temperature: f64,
    pub max_retries: usize,
    pub timeout_secs: u64,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            base_url: "https://api.openai.com/v1".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            model: "gpt-4o".into(),
            temperature: 1.0,
            max_retries: 2,
            timeout_secs: 120,
        }
    }
}

impl EndpointConfig {
    /// Defaults overridden by `POMDP_CODER_BASE_URL`, `POMDP_CODER_API_KEY_ENV`
    /// and `POMDP_CODER_MODEL`.
    pub fn from_env() -> Self {
        let mut c = Self::default();
        if let Ok(v) = std::env::var("POMDP_CODER_BASE_URL") {
            c.base_url = v;
        }
        if let Ok(v) = std::env::var("POMDP_CODER_API_KEY_ENV") {
            c.api_key_env = v;
        }
        if let Ok(v) = std::env::var("POMDP_CODER_MODEL") {
            c.model = v;
        }
        c
    }
}

pub struct HttpProposer {
    cfg: EndpointConfig,
    agent: ureq::Agent,
    log_dir: Option<PathBuf>,
    counter: AtomicUsize,
}

impl HttpProposer {
    pub fn new(cfg: EndpointConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(cfg.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        HttpProposer { cfg, agent, log_dir: None, counter: AtomicUsize::new(0) }
    }

    /// Writes every prompt and raw response under `dir`.
    pub fn with_log_dir(mut self, dir: PathBuf) -> Self {
        self.log_dir = Some(dir);
        self
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.cfg
    }

    fn log(&self, n: usize, what: &str, text: &str) {
        if let Some(dir) = &self.log_dir {
            if std::fs::create_dir_all(dir).is_ok() {
                let _ = std::fs::write(dir.join(format!("{n:05}-{what}.txt")), text);
            }
        }
    }

    fn attempt(&self, prompt: &str) -> Result<String, (bool, String, Option<u16>)> {
        let url = format!("{}/chat/completions", self.cfg.base_url.trim_end_matches('/'));
        let body = json!({
            "model": self.cfg.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.cfg.temperature,
        });
        let mut req = self.agent.post(&url).header("Content-Type", "application/json");
        if let Ok(key) = std::env::var(&self.cfg.api_key_env) {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req.send_json(&body).map_err(|e| (true, e.to_string(), None))?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| (true, e.to_string(), None))?;
        if !(200..300).contains(&status) {
            let retry = status == 429 || status >= 500;
            return Err((retry, text, Some(status)));
        }
        let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| (false, e.to_string(), None))?;
        v["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| (false, format!("missing choices[0].message.content in {text}"), None))
    }
}

impl Completer for HttpProposer {
    fn complete(&self, prompt: &str) -> Result<String, ProposeError> {
        let n = self.counter.fetch_add(1, Ordering::Relaxed);
        self.log(n, "prompt", prompt);
        let attempts = self.cfg.max_retries + 1;
        let mut last = (String::new(), None);
        for i in 0..attempts {
            match self.attempt(prompt) {
                Ok(text) => {
                    self.log(n, "response", &text);
                    return Ok(text);
                }
                Err((retry, msg, status)) => {
                    self.log(n, &format!("error{i}"), &msg);
                    if !retry {
                        return Err(ProposeError::BadResponse(msg));
                    }
                    last = (msg, status);
                    if i + 1 < attempts {
                        std::thread::sleep(Duration::from_millis(200 << i.min(5)));
                    }
                }
            }
        }
        Err(match last {
            (body, Some(status)) => ProposeError::Status { status, attempts, body },
            (msg, None) => ProposeError::Transport { attempts, msg },
        })
    }
}

impl Proposer for HttpProposer {
    fn propose(&self, req: &ProposalRequest) -> Result<Program, ProposeError> {
        propose_via(self, req)
    }
}
