use std::sync::OnceLock;
use std::time::Duration;

use serde_json::{json, Value};
use ureq::Agent;
use vqanle_core::gateway::{Embedder, GatewayError, GenerationRequest, Generator};

#[derive(Debug, Clone)]
pub struct RemoteConfig {
    /// Base URL; `/chat/completions` and `/embeddings` are appended.
    pub base_url: String,
    pub model: String,
    pub token: Option<String>,
    pub embedding_model: Option<String>,
    pub timeout: Duration,
}

/// Client for a chat-completions style server hosting the vision model.
pub struct RemoteGateway {
    config: RemoteConfig,
    agent: Agent,
    dimension: OnceLock<usize>,
}

/// Request body: one user message holding the prompt and, when present, the
/// image as a PNG data URL.
pub fn chat_body(model: &str, req: &GenerationRequest) -> Value {
    let mut content = vec![json!({"type": "text", "text": req.prompt})];
    if let Some(img) = &req.image {
        content.push(json!({"type": "image_url", "image_url": {"url": format!("data:image/png;base64,{img}")}}));
    }
    let p = &req.params;
    json!({
        "model": model,
        "messages": [{"role": "user", "content": content}],
        "max_tokens": p.max_new_tokens,
        "temperature": p.temperature,
        "top_p": p.top_p,
        "top_k": p.top_k,
        "do_sample": p.do_sample,
        "stream": false,
    })
}

pub fn parse_chat_response(v: &Value, tag: &str) -> Result<String, GatewayError> {
    if let Some(err) = v.get("error") {
        return Err(GatewayError::Backend { tag: tag.into(), message: err.to_string() });
    }
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| GatewayError::Backend { tag: tag.into(), message: format!("response has no choices[0].message.content: {v}") })
}

pub fn parse_embedding_response(v: &Value) -> Result<Vec<f64>, GatewayError> {
    let tag = "embed";
    if let Some(err) = v.get("error") {
        return Err(GatewayError::Backend { tag: tag.into(), message: err.to_string() });
    }
    let arr = v
        .pointer("/data/0/embedding")
        .and_then(Value::as_array)
        .ok_or_else(|| GatewayError::Backend { tag: tag.into(), message: "response has no data[0].embedding".into() })?;
    arr.iter()
        .map(|x| x.as_f64().ok_or_else(|| GatewayError::Backend { tag: tag.into(), message: "non-numeric embedding value".into() }))
        .collect()
}

impl RemoteGateway {
    pub fn new(config: RemoteConfig) -> Self {
        let agent: Agent = Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        RemoteGateway { config, agent, dimension: OnceLock::new() }
    }

    fn post(&self, path: &str, body: &Value, tag: &str) -> Result<Value, GatewayError> {
        let url = format!("{}/{path}", self.config.base_url.trim_end_matches('/'));
        let mut req = self.agent.post(&url);
        if let Some(t) = &self.config.token {
            req = req.header("Authorization", &format!("Bearer {t}"));
        }
        let transport = |message: String| GatewayError::Transport { tag: tag.into(), message };
        let mut resp = req.send_json(body).map_err(|e| transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| transport(e.to_string()))?;
        if status == 429 || status >= 500 {
            return Err(transport(format!("HTTP {status}: {text}")));
        }
        if status >= 400 {
            return Err(GatewayError::Backend { tag: tag.into(), message: format!("HTTP {status}: {text}") });
        }
        serde_json::from_str(&text).map_err(|e| GatewayError::Backend { tag: tag.into(), message: format!("bad JSON: {e}") })
    }
}

impl Generator for RemoteGateway {
    fn model(&self) -> &str {
        &self.config.model
    }

    fn generate(&self, req: &GenerationRequest) -> Result<String, GatewayError> {
        req.validate()?;
        let v = self.post("chat/completions", &chat_body(&self.config.model, req), &req.tag)?;
        parse_chat_response(&v, &req.tag)
    }
}

impl Embedder for RemoteGateway {
    fn embed(&self, text: &str) -> Result<Vec<f64>, GatewayError> {
        let model = self.config.embedding_model.as_deref().unwrap_or(&self.config.model);
        let v = self.post("embeddings", &json!({"model": model, "input": text}), "embed")?;
        let vec = parse_embedding_response(&v)?;
        let dim = *self.dimension.get_or_init(|| vec.len());
        if vec.is_empty() || vec.len() != dim {
            return Err(GatewayError::Config(format!("embedding dimension changed from {dim} to {}", vec.len())));
        }
        Ok(vec)
    }
}
