//! Live HTTP/JSON clients.
//!
//! Chat uses the widely implemented chat-completions schema with inline
//! base64 image parts. Image generation and embedding use small JSON bodies
//! (`{model, prompt, images, size}` and `{model, input: [{image}]}`) that most
//! gateway services accept or can be adapted to. Credentials are read from
//! environment variables only.

use std::time::Duration;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use reqwest::blocking::Client;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::retry::{Attempt, RetryPolicy};
use super::{
    ChatPart, ChatProvider, ChatRequest, EmbeddingProvider, GeneratedImage, ImageGenRequest,
    ImageMetadata, ImageProvider, ProviderError, ResponseFormat,
};
use crate::picture::Picture;

pub const CHAT_KEY_VAR: &str = "COLLAGE_CHAT_API_KEY";
pub const IMAGE_KEY_VAR: &str = "COLLAGE_IMAGE_API_KEY";
pub const EMBED_KEY_VAR: &str = "COLLAGE_EMBED_API_KEY";

/// Where and how to reach one provider. Never carries the credential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub endpoint: String,
    pub model: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default)]
    pub retry: RetryPolicy,
}

fn default_timeout() -> u64 {
    120
}

struct HttpCore {
    client: Client,
    endpoint: String,
    api_key: Option<String>,
    retry: RetryPolicy,
}

impl HttpCore {
    fn new(cfg: &EndpointConfig, key_var: &str) -> Result<Self, ProviderError> {
        if cfg.endpoint.trim().is_empty() {
            return Err(ProviderError::NotConfigured(format!("endpoint for {key_var} provider")));
        }
        let client = Client::builder()
            .timeout(Duration::from_secs(cfg.timeout_secs))
            .build()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        Ok(Self {
            client,
            endpoint: cfg.endpoint.clone(),
            api_key: std::env::var(key_var).ok().filter(|k| !k.is_empty()),
            retry: cfg.retry,
        })
    }

    /// POSTs the same body on every attempt and returns the parsed JSON reply.
    fn post(&self, body: Vec<u8>, refusal_markers: &[&str]) -> Result<Value, ProviderError> {
        self.retry.run(|_| {
            let mut req = self
                .client
                .post(&self.endpoint)
                .header("content-type", "application/json")
                .body(body.clone());
            if let Some(key) = &self.api_key {
                req = req.bearer_auth(key);
            }
            let resp = match req.send() {
                Ok(r) => r,
                Err(e) => return Attempt::Retry(ProviderError::Transport(e.to_string())),
            };
            let status = resp.status().as_u16();
            let text = resp.text().unwrap_or_default();
            classify(status, text, refusal_markers)
        })
    }
}

fn classify(status: u16, text: String, refusal_markers: &[&str]) -> Attempt<Value> {
    match status {
        200..=299 => match serde_json::from_str(&text) {
            Ok(v) => Attempt::Done(v),
            Err(e) => Attempt::Fatal(ProviderError::Decode(format!("response body is not JSON: {e}"))),
        },
        401 | 403 => Attempt::Fatal(ProviderError::Auth { status }),
        429 => Attempt::Retry(ProviderError::RateLimited { attempts: 1 }),
        500..=599 => Attempt::Retry(ProviderError::Transport(format!("HTTP {status}: {}", snippet(&text)))),
        _ if refusal_markers.iter().any(|m| text.contains(m)) => {
            Attempt::Fatal(ProviderError::ContentRefusal(snippet(&text)))
        }
        _ => Attempt::Fatal(ProviderError::Transport(format!("HTTP {status}: {}", snippet(&text)))),
    }
}

fn snippet(text: &str) -> String {
    text.chars().take(300).collect()
}

fn data_url(p: &Picture) -> String {
    format!("data:image/png;base64,{}", B64.encode(p.png()))
}

pub struct HttpChat {
    core: HttpCore,
    model: String,
}

impl HttpChat {
    pub fn new(cfg: &EndpointConfig) -> Result<Self, ProviderError> {
        Ok(Self { core: HttpCore::new(cfg, CHAT_KEY_VAR)?, model: cfg.model.clone() })
    }

    pub fn body(&self, request: &ChatRequest) -> Value {
        let content: Vec<Value> = request
            .user_parts
            .iter()
            .map(|p| match p {
                ChatPart::Text(t) => json!({"type": "text", "text": t}),
                ChatPart::Image(i) => json!({"type": "image_url", "image_url": {"url": data_url(i)}}),
            })
            .collect();
        let mut body = json!({
            "model": self.model,
            "temperature": request.temperature,
            "messages": [
                {"role": "system", "content": request.system_prompt},
                {"role": "user", "content": content},
            ],
        });
        if request.response_format == ResponseFormat::StructuredJson {
            body["response_format"] = json!({"type": "json_object"});
        }
        body
    }
}

impl ChatProvider for HttpChat {
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        request.check()?;
        let body = serde_json::to_vec(&self.body(request)).expect("json body");
        let reply = self.core.post(body, &[])?;
        reply["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| ProviderError::Decode("reply has no choices[0].message.content".into()))
    }
}

pub struct HttpImage {
    core: HttpCore,
    model: String,
}

impl HttpImage {
    pub fn new(cfg: &EndpointConfig) -> Result<Self, ProviderError> {
        Ok(Self { core: HttpCore::new(cfg, IMAGE_KEY_VAR)?, model: cfg.model.clone() })
    }
}

impl ImageProvider for HttpImage {
    fn generate(&self, request: &ImageGenRequest) -> Result<GeneratedImage, ProviderError> {
        request.check()?;
        let body = json!({
            "model": self.model,
            "prompt": request.prompt_blocks.join("\n\n"),
            "images": request.condition_images.iter().map(|i| B64.encode(i.png())).collect::<Vec<_>>(),
            "size": format!("{}x{}", request.target_width, request.target_height),
            "n": 1,
            "response_format": "b64_json",
        });
        let reply = self.core.post(
            serde_json::to_vec(&body).expect("json body"),
            &["content_policy", "safety", "moderation"],
        )?;
        let b64 = reply["data"][0]["b64_json"]
            .as_str()
            .ok_or_else(|| ProviderError::Decode("reply has no data[0].b64_json".into()))?;
        let bytes = B64.decode(b64).map_err(|e| ProviderError::Decode(e.to_string()))?;
        let image = Picture::decode(&bytes).map_err(|e| ProviderError::Decode(e.to_string()))?;
        Ok(GeneratedImage {
            metadata: ImageMetadata { provider: self.model.clone(), ..Default::default() },
            image,
        })
    }
}

pub struct HttpEmbed {
    core: HttpCore,
    model: String,
    dimension: usize,
}

impl HttpEmbed {
    pub fn new(cfg: &EndpointConfig, dimension: usize) -> Result<Self, ProviderError> {
        Ok(Self { core: HttpCore::new(cfg, EMBED_KEY_VAR)?, model: cfg.model.clone(), dimension })
    }
}

impl EmbeddingProvider for HttpEmbed {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, image: &Picture) -> Result<Vec<f64>, ProviderError> {
        let body = json!({"model": self.model, "input": [{"image": B64.encode(image.png())}]});
        let reply = self.core.post(serde_json::to_vec(&body).expect("json body"), &[])?;
        let arr = reply["data"][0]["embedding"]
            .as_array()
            .ok_or_else(|| ProviderError::Decode("reply has no data[0].embedding".into()))?;
        arr.iter()
            .map(|v| v.as_f64().ok_or_else(|| ProviderError::Decode("non-numeric embedding value".into())))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_classification() {
        assert!(matches!(classify(200, "{}".into(), &[]), Attempt::Done(_)));
        assert!(matches!(classify(200, "oops".into(), &[]), Attempt::Fatal(ProviderError::Decode(_))));
        assert!(matches!(classify(403, String::new(), &[]), Attempt::Fatal(ProviderError::Auth { status: 403 })));
        assert!(matches!(classify(429, String::new(), &[]), Attempt::Retry(ProviderError::RateLimited { .. })));
        assert!(matches!(classify(502, String::new(), &[]), Attempt::Retry(ProviderError::Transport(_))));
        assert!(matches!(
            classify(400, "{\"code\":\"content_policy_violation\"}".into(), &["content_policy"]),
            Attempt::Fatal(ProviderError::ContentRefusal(_))
        ));
        assert!(matches!(classify(404, String::new(), &["x"]), Attempt::Fatal(ProviderError::Transport(_))));
    }

    #[test]
    fn missing_endpoint_is_not_configured() {
        let cfg = EndpointConfig {
            endpoint: String::new(),
            model: "m".into(),
            timeout_secs: 1,
            retry: RetryPolicy::default(),
        };
        assert!(matches!(HttpChat::new(&cfg), Err(ProviderError::NotConfigured(_))));
    }
}
