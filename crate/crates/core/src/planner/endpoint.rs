//! Chat-completions client for a remote planner.

use std::time::Duration;

use serde_json::json;

use super::{Completion, PlanError};

pub const ENV_URL: &str = "COMPNAV_ENDPOINT_URL";
pub const ENV_API_KEY: &str = "COMPNAV_API_KEY";
pub const ENV_MODEL: &str = "COMPNAV_MODEL";
pub const DEFAULT_MODEL: &str = "gpt-4o";

#[derive(Clone)]
pub struct EndpointConfig {
    pub url: String,
    pub api_key: String,
    pub model: String,
    pub temperature: f64,
    pub timeout: Duration,
}

impl std::fmt::Debug for EndpointConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EndpointConfig")
            .field("url", &self.url)
            .field("api_key", &"<redacted>")
            .field("model", &self.model)
            .field("temperature", &self.temperature)
            .field("timeout", &self.timeout)
            .finish()
    }
}

impl EndpointConfig {
    pub fn new(url: impl Into<String>, api_key: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            api_key: api_key.into(),
            model: model.into(),
            temperature: 0.0,
            timeout: Duration::from_secs(60),
        }
    }

    /// Reads the endpoint URL, key and model from the environment. The model
    /// defaults to [`DEFAULT_MODEL`].
    pub fn from_env() -> Result<Self, PlanError> {
        let var = |name: &str| std::env::var(name).ok().filter(|v| !v.trim().is_empty());
        let url = var(ENV_URL).ok_or_else(|| PlanError::Config(format!("{ENV_URL} is not set")))?;
        let key = var(ENV_API_KEY).ok_or_else(|| PlanError::Config(format!("{ENV_API_KEY} is not set")))?;
        let model = var(ENV_MODEL).unwrap_or_else(|| DEFAULT_MODEL.to_string());
        Ok(Self::new(url, key, model))
    }
}

impl Completion for EndpointConfig {
    fn model(&self) -> &str {
        &self.model
    }

    fn complete(&self, prompt: &str) -> Result<(String, serde_json::Value), PlanError> {
        let body = json!({
            "model": self.model,
            "temperature": self.temperature,
            "messages": [{"role": "user", "content": prompt}],
        });
        log::debug!("planner request to {}: {}", self.url, body);
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .build()
            .into();
        let mut resp = agent
            .post(&self.url)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body)
            .map_err(|e| match e {
                ureq::Error::StatusCode(code @ (401 | 403)) => {
                    PlanError::Auth(format!("endpoint rejected the API key (HTTP {code})"))
                }
                ureq::Error::StatusCode(code) => PlanError::Network(format!("endpoint returned HTTP {code}")),
                other => PlanError::Network(other.to_string()),
            })?;
        let value: serde_json::Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| PlanError::Network(format!("malformed response body: {e}")))?;
        log::debug!("planner response: {value}");
        let content = value["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| PlanError::Network("response has no choices[0].message.content".into()))?
            .to_string();
        let metadata = json!({
            "id": value.get("id"),
            "model": value.get("model"),
            "usage": value.get("usage"),
        });
        Ok((content, metadata))
    }
}
