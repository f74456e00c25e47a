//! Chat completion providers: a retrying HTTP client and a scripted mock.

use std::collections::VecDeque;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{FaithError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "system".into(),
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "user".into(),
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "assistant".into(),
            content: content.into(),
        }
    }
}

/// One ordered message list in, one text completion out.
pub trait ChatProvider: Send + Sync {
    fn complete(&self, messages: &[ChatMessage], temperature: f64) -> Result<String>;
}

const MAX_ATTEMPTS: usize = 3;

/// JSON-over-HTTP provider.
///
/// Wire: POST `{"model", "messages": [{"role", "content"}], "temperature"}`
/// and expect `{"content": "..."}` back. Timeouts, non-2xx statuses and
/// malformed bodies are retried with exponential backoff up to three attempts
/// in total, then surfaced as a provider error.
pub struct HttpChatProvider {
    endpoint: String,
    api_key: Option<String>,
    model: String,
    backoff: Duration,
    client: reqwest::blocking::Client,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
}

#[derive(Deserialize)]
struct ChatResponse {
    content: String,
}

impl HttpChatProvider {
    pub fn new(
        endpoint: impl Into<String>,
        api_key: Option<String>,
        model: impl Into<String>,
    ) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(60))
            .build()
            .map_err(|e| FaithError::Provider(format!("chat client: {e}")))?;
        Ok(HttpChatProvider {
            endpoint: endpoint.into(),
            api_key,
            model: model.into(),
            backoff: Duration::from_millis(250),
            client,
        })
    }

    /// Shrinks the retry backoff; meant for tests against local servers.
    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }

    fn attempt(&self, messages: &[ChatMessage], temperature: f64) -> Result<String> {
        let mut request = self.client.post(&self.endpoint).json(&ChatRequest {
            model: &self.model,
            messages,
            temperature,
        });
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response = request
            .send()
            .map_err(|e| FaithError::Provider(format!("chat request: {e}")))?;
        let status = response.status();
        if !status.is_success() {
            return Err(FaithError::Provider(format!("chat endpoint returned {status}")));
        }
        let parsed: ChatResponse = response
            .json()
            .map_err(|e| FaithError::Provider(format!("chat response body: {e}")))?;
        Ok(parsed.content)
    }
}

impl ChatProvider for HttpChatProvider {
    fn complete(&self, messages: &[ChatMessage], temperature: f64) -> Result<String> {
        let mut last_error = None;
        for attempt in 0..MAX_ATTEMPTS {
            if attempt > 0 {
                std::thread::sleep(self.backoff * 2u32.pow(attempt as u32 - 1));
            }
            match self.attempt(messages, temperature) {
                Ok(content) => return Ok(content),
                Err(e) => last_error = Some(e),
            }
        }
        Err(last_error.expect("at least one attempt"))
    }
}

#[derive(Debug, Clone)]
pub enum MockReply {
    Text(String),
    Fail(String),
}

/// Deterministic in-memory provider for tests and offline runs.
///
/// Either plays a finite script (exhaustion is a provider error) or cycles a
/// fixed reply list forever. Every call's messages are recorded.
pub struct MockChat {
    script: Mutex<VecDeque<MockReply>>,
    cycle: Option<Vec<String>>,
    cursor: Mutex<usize>,
    calls: Mutex<Vec<Vec<ChatMessage>>>,
}

impl MockChat {
    pub fn script<S: Into<String>, I: IntoIterator<Item = S>>(replies: I) -> Self {
        MockChat {
            script: Mutex::new(replies.into_iter().map(|s| MockReply::Text(s.into())).collect()),
            cycle: None,
            cursor: Mutex::new(0),
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn script_with(replies: Vec<MockReply>) -> Self {
        MockChat {
            script: Mutex::new(replies.into()),
            cycle: None,
            cursor: Mutex::new(0),
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn repeating<S: Into<String>, I: IntoIterator<Item = S>>(replies: I) -> Self {
        let cycle: Vec<String> = replies.into_iter().map(Into::into).collect();
        assert!(!cycle.is_empty(), "repeating mock needs at least one reply");
        MockChat {
            script: Mutex::new(VecDeque::new()),
            cycle: Some(cycle),
            cursor: Mutex::new(0),
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn calls(&self) -> Vec<Vec<ChatMessage>> {
        self.calls.lock().unwrap().clone()
    }
}

impl ChatProvider for MockChat {
    fn complete(&self, messages: &[ChatMessage], _temperature: f64) -> Result<String> {
        self.calls.lock().unwrap().push(messages.to_vec());
        if let Some(cycle) = &self.cycle {
            let mut cursor = self.cursor.lock().unwrap();
            let reply = cycle[*cursor % cycle.len()].clone();
            *cursor += 1;
            return Ok(reply);
        }
        match self.script.lock().unwrap().pop_front() {
            Some(MockReply::Text(t)) => Ok(t),
            Some(MockReply::Fail(msg)) => Err(FaithError::Provider(msg)),
            None => Err(FaithError::Provider("mock script exhausted".into())),
        }
    }
}
