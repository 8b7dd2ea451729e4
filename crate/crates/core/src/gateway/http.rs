use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use ureq::Agent;

use super::{ChatExchange, ChatMessage, ChatTransport, GatewayError, RetryPolicy};

/// Chat-completions over HTTP(S): `POST {base_url}/chat/completions` with a
/// bearer token.
pub struct HttpTransport {
    agent: Agent,
    endpoint: String,
    auth_header: String,
    retry: RetryPolicy,
}

#[derive(Serialize)]
struct RequestBody<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct ResponseBody {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ResponseMessage,
}

#[derive(Deserialize)]
struct ResponseMessage {
    #[serde(default)]
    content: Option<String>,
}

enum Attempt {
    Retry(String),
    Fail(GatewayError),
}

impl HttpTransport {
    pub fn new(base_url: &str, api_key: &str, retry: RetryPolicy) -> Self {
        let agent: Agent = Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(120)))
            .build()
            .into();
        Self {
            agent,
            endpoint: format!("{}/chat/completions", base_url.trim_end_matches('/')),
            auth_header: format!("Bearer {api_key}"),
            retry,
        }
    }

    fn attempt(&self, exchange: &ChatExchange) -> Result<String, Attempt> {
        let body = RequestBody {
            model: &exchange.params.model,
            messages: &exchange.messages,
            temperature: exchange.params.temperature,
            max_tokens: exchange.params.max_tokens,
        };
        let mut response = self
            .agent
            .post(&self.endpoint)
            .header("Authorization", &self.auth_header)
            .send_json(&body)
            .map_err(|e| Attempt::Retry(e.to_string()))?;
        let status = response.status().as_u16();
        if status == 401 || status == 403 {
            return Err(Attempt::Fail(GatewayError::Auth(format!("status {status}"))));
        }
        if status == 429 || status >= 500 {
            return Err(Attempt::Retry(format!("status {status}")));
        }
        if !(200..300).contains(&status) {
            let body = response.body_mut().read_to_string().unwrap_or_default();
            return Err(Attempt::Fail(GatewayError::Upstream { status, body }));
        }
        let parsed: ResponseBody =
            response.body_mut().read_json().map_err(|e| Attempt::Fail(GatewayError::Protocol(e.to_string())))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| Attempt::Fail(GatewayError::Protocol("response has no message content".into())))
    }
}

impl ChatTransport for HttpTransport {
    fn send(&self, exchange: &ChatExchange) -> Result<String, GatewayError> {
        let attempts = self.retry.max_attempts.max(1);
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                thread::sleep(self.retry.base_delay * 2u32.pow(attempt - 1));
            }
            match self.attempt(exchange) {
                Ok(text) => return Ok(text),
                Err(Attempt::Fail(e)) => return Err(e),
                Err(Attempt::Retry(message)) => {
                    log::warn!("chat request attempt {} failed: {message}", attempt + 1);
                    last = message;
                }
            }
        }
        Err(GatewayError::Network { attempts, message: last })
    }
}
