use std::time::Duration;

use crate::error::IngestError;

/// What the client needs from one HTTP GET.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    /// Parsed `Retry-After`, seconds form only.
    pub retry_after: Option<Duration>,
    pub body: String,
}

pub trait Transport: Send + Sync {
    /// Connection-level failures are `Err`; any HTTP status is `Ok`.
    fn get(&self, url: &str) -> Result<HttpResponse, String>;
}

impl<T: Transport + ?Sized> Transport for std::sync::Arc<T> {
    fn get(&self, url: &str) -> Result<HttpResponse, String> {
        (**self).get(url)
    }
}

pub struct ReqwestTransport {
    client: reqwest::blocking::Client,
}

impl ReqwestTransport {
    pub fn new(user_agent: &str, timeout: Duration) -> Result<Self, IngestError> {
        let client = reqwest::blocking::Client::builder()
            .user_agent(user_agent)
            .timeout(timeout)
            .build()
            .map_err(|e| IngestError::Transport { url: String::new(), attempts: 0, detail: e.to_string() })?;
        Ok(Self { client })
    }
}

impl Transport for ReqwestTransport {
    fn get(&self, url: &str) -> Result<HttpResponse, String> {
        let resp = self.client.get(url).send().map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let retry_after = resp
            .headers()
            .get(reqwest::header::RETRY_AFTER)
            .and_then(|v| v.to_str().ok())
            .and_then(|s| s.trim().parse::<u64>().ok())
            .map(Duration::from_secs);
        let body = resp.text().map_err(|e| e.to_string())?;
        Ok(HttpResponse { status, retry_after, body })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { attempts: 3, base_delay: Duration::from_secs(1) }
    }
}

impl RetryPolicy {
    /// Wait before retry number `retry` (1-based): base, 2 base, 4 base, ...
    /// A server `Retry-After` takes precedence when longer.
    pub fn delay(&self, retry: u32, retry_after: Option<Duration>) -> Duration {
        let backoff = self.base_delay * 2u32.saturating_pow(retry.saturating_sub(1));
        retry_after.map_or(backoff, |r| r.max(backoff))
    }
}

fn retryable(status: u16) -> bool {
    status == 429 || status >= 500
}

/// GET with retries on connection errors, 429 and 5xx. Other statuses are
/// returned as-is so callers can treat 404 as "no data".
pub fn get_with_retry(
    transport: &dyn Transport,
    url: &str,
    policy: &RetryPolicy,
    sleep: &dyn Fn(Duration),
) -> Result<HttpResponse, IngestError> {
    let attempts = policy.attempts.max(1);
    let mut last = String::new();
    for attempt in 1..=attempts {
        let retry_after = match transport.get(url) {
            Ok(r) if !retryable(r.status) => return Ok(r),
            Ok(r) => {
                last = format!("HTTP {}", r.status);
                r.retry_after
            }
            Err(e) => {
                last = e;
                None
            }
        };
        if attempt < attempts {
            log::debug!("retrying {url} after {last}");
            sleep(policy.delay(attempt, retry_after));
        }
    }
    Err(IngestError::Transport { url: url.to_string(), attempts, detail: last })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Mutex;

    struct Scripted(Mutex<Vec<Result<HttpResponse, String>>>);

    impl Transport for Scripted {
        fn get(&self, _url: &str) -> Result<HttpResponse, String> {
            self.0.lock().unwrap().remove(0)
        }
    }

    fn ok(status: u16) -> Result<HttpResponse, String> {
        Ok(HttpResponse { status, retry_after: None, body: String::new() })
    }

    #[test]
    fn backoff_doubles_and_honours_throttle() {
        let p = RetryPolicy::default();
        assert_eq!(p.delay(1, None), Duration::from_secs(1));
        assert_eq!(p.delay(2, None), Duration::from_secs(2));
        assert_eq!(p.delay(2, Some(Duration::from_secs(30))), Duration::from_secs(30));
        assert_eq!(p.delay(2, Some(Duration::from_millis(10))), Duration::from_secs(2));
    }

    #[test]
    fn recovers_after_transient_failures() {
        let t = Scripted(Mutex::new(vec![Err("reset".into()), ok(503), ok(200)]));
        let waits = Mutex::new(Vec::new());
        let r = get_with_retry(&t, "u", &RetryPolicy::default(), &|d| waits.lock().unwrap().push(d)).unwrap();
        assert_eq!(r.status, 200);
        assert_eq!(*waits.lock().unwrap(), [Duration::from_secs(1), Duration::from_secs(2)]);
    }

    #[test]
    fn gives_up_after_three_attempts() {
        let t = Scripted(Mutex::new(vec![ok(500), ok(429), ok(502), ok(200)]));
        let err = get_with_retry(&t, "u", &RetryPolicy::default(), &|_| {}).unwrap_err();
        assert!(matches!(err, IngestError::Transport { attempts: 3, ref detail, .. } if detail == "HTTP 502"));
    }

    #[test]
    fn client_errors_are_not_retried() {
        let t = Scripted(Mutex::new(vec![ok(404)]));
        assert_eq!(get_with_retry(&t, "u", &RetryPolicy::default(), &|_| panic!("slept")).unwrap().status, 404);
    }
}
