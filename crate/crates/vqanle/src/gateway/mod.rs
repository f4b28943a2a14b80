//! Generation and embedding backends: a scripted mock, a remote
//! chat-completions client, and wrappers for retries and an in-flight cap.

mod mock;
mod remote;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use log::warn;
use vqanle_core::gateway::{Embedder, GatewayError, GenerationRequest, Generator};

pub use mock::{MockEmbedder, MockGateway, MockScript, ScriptedReply};
pub use remote::{chat_body, parse_chat_response, parse_embedding_response, RemoteConfig, RemoteGateway};

/// Environment variable naming the remote backend base URL.
pub const ENV_BACKEND_URL: &str = "VQANLE_BACKEND_URL";
/// Environment variable holding the bearer token for the remote backend.
pub const ENV_API_TOKEN: &str = "VQANLE_API_TOKEN";

/// Retries transport failures up to `max_retries` times with doubling backoff.
/// Backend errors are returned immediately.
pub struct Retrying<T> {
    pub inner: T,
    pub max_retries: u32,
    pub backoff: Duration,
}

impl<T> Retrying<T> {
    pub fn new(inner: T, max_retries: u32, backoff: Duration) -> Self {
        Retrying { inner, max_retries, backoff }
    }

    fn run<R>(&self, what: &str, mut f: impl FnMut() -> Result<R, GatewayError>) -> Result<R, GatewayError> {
        let mut attempt = 0;
        loop {
            match f() {
                Err(e) if e.is_retryable() && attempt < self.max_retries => {
                    attempt += 1;
                    warn!("{what}: attempt {attempt} failed ({e}); retrying");
                    if !self.backoff.is_zero() {
                        thread::sleep(self.backoff * (1 << (attempt - 1).min(6)));
                    }
                }
                other => return other,
            }
        }
    }
}

impl<T: Generator> Generator for Retrying<T> {
    fn model(&self) -> &str {
        self.inner.model()
    }
    fn generate(&self, request: &GenerationRequest) -> Result<String, GatewayError> {
        self.run(&request.tag, || self.inner.generate(request))
    }
}

impl<T: Embedder> Embedder for Retrying<T> {
    fn embed(&self, text: &str) -> Result<Vec<f64>, GatewayError> {
        self.run("embed", || self.inner.embed(text))
    }
}

/// Caps the number of concurrent calls into `inner`.
pub struct InFlight<T> {
    inner: T,
    cap: usize,
    active: Mutex<usize>,
    freed: Condvar,
    peak: AtomicUsize,
}

struct Permit<'a, T>(&'a InFlight<T>);

impl<T> Drop for Permit<'_, T> {
    fn drop(&mut self) {
        let mut n = self.0.active.lock().unwrap_or_else(|e| e.into_inner());
        *n -= 1;
        self.0.freed.notify_one();
    }
}

impl<T> InFlight<T> {
    pub fn new(inner: T, cap: usize) -> Self {
        InFlight { inner, cap: cap.max(1), active: Mutex::new(0), freed: Condvar::new(), peak: AtomicUsize::new(0) }
    }

    /// Highest number of simultaneous calls observed.
    pub fn peak(&self) -> usize {
        self.peak.load(Ordering::SeqCst)
    }

    fn acquire(&self) -> Permit<'_, T> {
        let mut n = self.active.lock().unwrap_or_else(|e| e.into_inner());
        while *n >= self.cap {
            n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n += 1;
        self.peak.fetch_max(*n, Ordering::SeqCst);
        Permit(self)
    }
}

impl<T: Generator> Generator for InFlight<T> {
    fn model(&self) -> &str {
        self.inner.model()
    }
    fn generate(&self, request: &GenerationRequest) -> Result<String, GatewayError> {
        let _permit = self.acquire();
        self.inner.generate(request)
    }
}

impl<T: Embedder> Embedder for InFlight<T> {
    fn embed(&self, text: &str) -> Result<Vec<f64>, GatewayError> {
        let _permit = self.acquire();
        self.inner.embed(text)
    }
}
