//! Gerrit REST client and raw-document normalization.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::thread;
use std::time::{Duration, Instant};

use base64::Engine;
use serde_json::Value;

use super::jsonl::parse_timestamp;
use super::IngestError;
use crate::model::{
    AccountRef, ChangeRecord, ChangeStatus, FileChange, MessageRecord, RevisionRecord, Timestamp, VoteRecord,
};

/// Cross-site-scripting guard Gerrit prepends to every JSON response.
pub const JSON_GUARD: &[u8] = b")]}'";

/// Detail options requested with every change query.
pub const DETAIL_OPTIONS: [&str; 5] = ["DETAILED_LABELS", "MESSAGES", "DETAILED_ACCOUNTS", "ALL_REVISIONS", "ALL_FILES"];

/// Removes the leading guard line if present, then parses the JSON body.
pub fn strip_json_guard(body: &[u8]) -> Result<Value, IngestError> {
    let mut rest = body;
    if rest.starts_with(JSON_GUARD) {
        rest = &rest[JSON_GUARD.len()..];
        if rest.starts_with(b"\r\n") {
            rest = &rest[2..];
        } else if rest.starts_with(b"\n") {
            rest = &rest[1..];
        }
    }
    let consumed = body.len() - rest.len();
    serde_json::from_slice(rest).map_err(|e| {
        let offset = consumed + byte_offset(rest, e.line(), e.column());
        IngestError::Json { offset, message: e.to_string() }
    })
}

fn byte_offset(text: &[u8], line: usize, column: usize) -> usize {
    let mut offset = 0;
    for (i, l) in text.split(|b| *b == b'\n').enumerate() {
        if i + 1 == line {
            return offset + column.saturating_sub(1);
        }
        offset += l.len() + 1;
    }
    text.len()
}

#[derive(Debug, Clone)]
pub struct IngestConfig {
    pub base_url: String,
    pub query: String,
    pub page_size: usize,
    pub start_offset: usize,
    pub auth: Option<(String, String)>,
    /// Requests per second; non-positive disables pacing.
    pub rate_limit: f64,
    pub retry: RetryPolicy,
}

impl IngestConfig {
    pub fn new(base_url: impl Into<String>, query: impl Into<String>) -> Self {
        IngestConfig {
            base_url: base_url.into(),
            query: query.into(),
            page_size: 500,
            start_offset: 0,
            auth: None,
            rate_limit: 4.0,
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_attempts: 5, base_delay: Duration::from_millis(500), max_delay: Duration::from_secs(30) }
    }
}

impl RetryPolicy {
    fn delay(&self, attempt: u32) -> Duration {
        let factor = 1u32.checked_shl(attempt.saturating_sub(1)).unwrap_or(u32::MAX);
        self.base_delay.saturating_mul(factor).min(self.max_delay)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: Vec<u8>,
}

/// A transient transport failure (connection reset, timeout, DNS).
#[derive(Debug, Clone, thiserror::Error)]
#[error("{0}")]
pub struct TransportError(pub String);

pub trait Transport {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
    authorization: Option<String>,
}

impl UreqTransport {
    pub fn new(auth: Option<(String, String)>) -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(120)))
            .build();
        let authorization = auth.map(|(user, pass)| {
            let token = base64::engine::general_purpose::STANDARD.encode(format!("{user}:{pass}"));
            format!("Basic {token}")
        });
        UreqTransport { agent: config.into(), authorization }
    }
}

impl Transport for UreqTransport {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
        let mut request = self.agent.get(url).header("Accept", "application/json");
        if let Some(auth) = &self.authorization {
            request = request.header("Authorization", auth);
        }
        let mut response = request.call().map_err(|e| TransportError(e.to_string()))?;
        let status = response.status().as_u16();
        let body = response
            .body_mut()
            .with_config()
            .limit(u64::MAX)
            .read_to_vec()
            .map_err(|e| TransportError(e.to_string()))?;
        Ok(HttpResponse { status, body })
    }
}

/// Query URL for one page. Authenticated requests use Gerrit's `/a/` prefix.
pub fn change_query_url(config: &IngestConfig, offset: usize) -> String {
    let base = config.base_url.trim_end_matches('/');
    let prefix = if config.auth.is_some() { "/a" } else { "" };
    let query: String = url::form_urlencoded::byte_serialize(config.query.as_bytes()).collect();
    let mut out = format!("{base}{prefix}/changes/?q={query}&n={}&start={offset}", config.page_size);
    for opt in DETAIL_OPTIONS {
        out.push_str("&o=");
        out.push_str(opt);
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FetchSummary {
    pub requests: usize,
    pub changes: usize,
    pub offsets: Vec<usize>,
}

struct Pacer {
    interval: Option<Duration>,
    last: Option<Instant>,
}

impl Pacer {
    fn new(rate: f64) -> Self {
        let interval = (rate > 0.0 && rate.is_finite()).then(|| Duration::from_secs_f64(1.0 / rate));
        Pacer { interval, last: None }
    }

    fn wait(&mut self) {
        if let (Some(interval), Some(last)) = (self.interval, self.last) {
            let elapsed = last.elapsed();
            if elapsed < interval {
                thread::sleep(interval - elapsed);
            }
        }
        self.last = Some(Instant::now());
    }
}

/// Pages through every change matching the query, handing each raw document to `sink` in
/// server order. Pagination continues while the last document of a page carries
/// `_more_changes: true`. Documents already seen in this run are skipped.
pub fn fetch_changes<T, F>(config: &IngestConfig, transport: &T, mut sink: F) -> Result<FetchSummary, IngestError>
where
    T: Transport + ?Sized,
    F: FnMut(Value) -> Result<(), IngestError>,
{
    if config.page_size == 0 {
        return Err(IngestError::Normalize("page_size must be at least 1".into()));
    }
    let mut summary = FetchSummary::default();
    let mut pacer = Pacer::new(config.rate_limit);
    let mut seen: HashSet<String> = HashSet::new();
    let mut offset = config.start_offset;

    loop {
        let url = change_query_url(config, offset);
        let response = get_with_retry(config, transport, &url, offset, &mut pacer)?;
        summary.requests += 1;
        summary.offsets.push(offset);
        if (400..500).contains(&response.status) {
            let message = String::from_utf8_lossy(&response.body).trim().to_string();
            return Err(IngestError::Http { status: response.status, message });
        }
        let page = match strip_json_guard(&response.body)? {
            Value::Array(items) => items,
            other => {
                return Err(IngestError::Json { offset: 0, message: format!("expected a JSON array, got {other}") })
            }
        };
        let more = page
            .last()
            .and_then(|doc| doc.get("_more_changes"))
            .and_then(Value::as_bool)
            .unwrap_or(false);
        let page_len = page.len();
        for doc in page {
            let key = doc_key(&doc);
            if key.as_ref().is_some_and(|k| !seen.insert(k.clone())) {
                continue;
            }
            summary.changes += 1;
            sink(doc)?;
        }
        if !more || page_len == 0 {
            break;
        }
        offset += config.page_size;
    }
    Ok(summary)
}

fn get_with_retry<T: Transport + ?Sized>(
    config: &IngestConfig,
    transport: &T,
    url: &str,
    offset: usize,
    pacer: &mut Pacer,
) -> Result<HttpResponse, IngestError> {
    let attempts = config.retry.max_attempts.max(1);
    let mut last_error = String::new();
    for attempt in 1..=attempts {
        pacer.wait();
        match transport.get(url) {
            Ok(resp) if resp.status >= 500 => last_error = format!("HTTP {}", resp.status),
            Ok(resp) => return Ok(resp),
            Err(e) => last_error = e.0,
        }
        log::warn!("request for offset {offset} failed (attempt {attempt}/{attempts}): {last_error}");
        if attempt < attempts {
            thread::sleep(config.retry.delay(attempt));
        }
    }
    Err(IngestError::Network { offset, attempts, message: last_error })
}

fn doc_key(doc: &Value) -> Option<String> {
    doc.get("id")
        .and_then(Value::as_str)
        .map(str::to_string)
        .or_else(|| doc.get("_number").map(|n| n.to_string()))
}

fn account_id(value: &Value) -> Option<String> {
    match value.get("_account_id")? {
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        _ => None,
    }
}

fn account_ref(value: &Value) -> Option<AccountRef> {
    let id = account_id(value)?;
    let field = |k: &str| value.get(k).and_then(Value::as_str).unwrap_or("").to_string();
    let name = value.get("name").and_then(Value::as_str).map(str::to_string).unwrap_or_else(|| field("username"));
    Some(AccountRef::new(id, name, field("email")))
}

fn time_of(value: Option<&Value>) -> Option<Timestamp> {
    value.and_then(Value::as_str).and_then(parse_timestamp)
}

fn remember(accounts: &mut BTreeMap<String, AccountRef>, acc: AccountRef) {
    let entry = accounts.entry(acc.account_id.clone()).or_insert_with(|| acc.clone());
    if entry.display_name.is_empty() {
        entry.display_name = acc.display_name;
    }
    if entry.email.is_empty() {
        entry.email = acc.email;
    }
}

/// Maps one Gerrit `ChangeInfo` document to a [`ChangeRecord`] plus the accounts it mentions.
pub fn normalize(raw: &Value) -> Result<(ChangeRecord, Vec<AccountRef>), IngestError> {
    let missing = |f: &str| IngestError::Normalize(format!("missing {f}"));
    let change_id = doc_key(raw).ok_or_else(|| missing("id"))?;
    let project = raw.get("project").and_then(Value::as_str).ok_or_else(|| missing("project"))?.to_string();
    let created_at = time_of(raw.get("created")).ok_or_else(|| missing("created"))?;
    let status_text = raw.get("status").and_then(Value::as_str).ok_or_else(|| missing("status"))?;
    let status: ChangeStatus = status_text.parse().map_err(|e| IngestError::Normalize(format!("{e}")))?;
    let owner_value = raw.get("owner").ok_or_else(|| missing("owner"))?;
    let owner_ref = account_ref(owner_value).ok_or_else(|| missing("owner._account_id"))?;

    let mut accounts: BTreeMap<String, AccountRef> = BTreeMap::new();
    let owner = owner_ref.account_id.clone();
    remember(&mut accounts, owner_ref);

    let closed_at = if status.is_closed() {
        let closed = time_of(raw.get("submitted"))
            .or_else(|| time_of(raw.get("updated")))
            .ok_or_else(|| missing("updated"))?;
        Some(closed.max(created_at))
    } else {
        None
    };

    let mut invited_reviewers = BTreeSet::new();
    let reviewer_values: Vec<&Value> = match raw.get("reviewers") {
        Some(Value::Object(map)) => map.get("REVIEWER").and_then(Value::as_array).map(|a| a.iter().collect()).unwrap_or_default(),
        Some(Value::Array(list)) => list.iter().collect(),
        _ => Vec::new(),
    };
    for r in reviewer_values {
        if let Some(acc) = account_ref(r) {
            invited_reviewers.insert(acc.account_id.clone());
            remember(&mut accounts, acc);
        }
    }

    let mut messages = Vec::new();
    for m in raw.get("messages").and_then(Value::as_array).into_iter().flatten() {
        let Some(author) = m.get("author").and_then(account_ref) else { continue };
        let Some(timestamp) = time_of(m.get("date")) else { continue };
        let text = m.get("message").and_then(Value::as_str).unwrap_or("").to_string();
        messages.push(MessageRecord { author: author.account_id.clone(), timestamp: timestamp.max(created_at), text });
        remember(&mut accounts, author);
    }
    messages.sort_by(|a, b| a.timestamp.cmp(&b.timestamp));

    let mut votes = Vec::new();
    if let Some(labels) = raw.get("labels").and_then(Value::as_object) {
        for (label, info) in labels {
            for v in info.get("all").and_then(Value::as_array).into_iter().flatten() {
                let Some(voter) = account_ref(v) else { continue };
                let value = v.get("value").and_then(Value::as_i64).unwrap_or(0);
                if !crate::model::valid_vote_value(value) {
                    return Err(IngestError::Normalize(format!("vote value {value} out of range")));
                }
                let timestamp = time_of(v.get("date"))
                    .or_else(|| messages.iter().find(|m| m.author == voter.account_id).map(|m| m.timestamp))
                    .or(closed_at)
                    .unwrap_or(created_at);
                votes.push(VoteRecord {
                    reviewer: voter.account_id.clone(),
                    label: label.clone(),
                    value: value as i8,
                    timestamp,
                });
                remember(&mut accounts, voter);
            }
        }
    }

    let mut revisions = Vec::new();
    let mut description = None;
    let current = raw.get("current_revision").and_then(Value::as_str);
    if let Some(revs) = raw.get("revisions").and_then(Value::as_object) {
        for (sha, rev) in revs {
            let number = rev.get("_number").and_then(Value::as_u64).unwrap_or(0) as u32;
            let rev_created = time_of(rev.get("created")).unwrap_or(created_at);
            let mut files: Vec<FileChange> = rev
                .get("files")
                .and_then(Value::as_object)
                .into_iter()
                .flatten()
                // Gerrit's magic entries (/COMMIT_MSG, /MERGE_LIST) are not source files.
                .filter(|(path, _)| !path.starts_with('/'))
                .map(|(path, info)| FileChange {
                    path: path.clone(),
                    lines_inserted: info.get("lines_inserted").and_then(Value::as_u64).unwrap_or(0),
                    lines_deleted: info.get("lines_deleted").and_then(Value::as_u64).unwrap_or(0),
                })
                .collect();
            files.sort_by(|a, b| a.path.cmp(&b.path));
            if Some(sha.as_str()) == current {
                description = rev.pointer("/commit/message").and_then(Value::as_str).map(str::to_string);
            }
            revisions.push(RevisionRecord { number, created_at: rev_created, files });
        }
    }
    revisions.sort_by_key(|r| r.number);
    if revisions.is_empty() || revisions[0].number != 1 || revisions.windows(2).any(|w| w[0].number == w[1].number) {
        return Err(IngestError::Normalize(format!("change {change_id}: revisions must be numbered from 1")));
    }

    let subject = raw.get("subject").and_then(Value::as_str).unwrap_or("").to_string();
    let change = ChangeRecord {
        change_id,
        project,
        created_at,
        closed_at,
        status,
        owner,
        description: description.unwrap_or_else(|| subject.clone()),
        subject,
        invited_reviewers,
        messages,
        votes,
        revisions,
    };
    Ok((change, accounts.into_values().collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;
    use std::cell::RefCell;

    #[test]
    fn guard_is_stripped() {
        let v = strip_json_guard(b")]}'\n[{\"_number\":1}]").unwrap();
        assert_eq!(v, json!([{"_number": 1}]));
    }

    #[test]
    fn guard_is_optional() {
        assert_eq!(strip_json_guard(b"[{\"_number\":1}]").unwrap(), json!([{"_number": 1}]));
    }

    #[test]
    fn malformed_body_reports_offset() {
        match strip_json_guard(b")]}'\n{bad") {
            Err(IngestError::Json { offset, .. }) => assert!(offset >= 5, "offset {offset}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn raw_change(status: &str) -> Value {
        json!({
            "id": "proj~master~I1",
            "project": "proj",
            "created": "2020-01-01 00:00:00.000000000",
            "updated": "2020-01-03 00:00:00.000000000",
            "submitted": "2020-01-02 00:00:00.000000000",
            "status": status,
            "subject": "Fix thing",
            "owner": {"_account_id": 1, "name": "Owner", "email": "o@x.org"},
            "reviewers": {"REVIEWER": [
                {"_account_id": 2, "name": "A", "email": "a@x.org"},
                {"_account_id": 3, "name": "B", "email": "b@x.org"}
            ]},
            "labels": {"Code-Review": {"all": [
                {"_account_id": 2, "value": 2, "date": "2020-01-01 10:00:00.000000000"},
                {"_account_id": 3, "value": 0}
            ]}},
            "messages": [
                {"author": {"_account_id": 2}, "date": "2020-01-01 10:00:00.000000000", "message": "Patch Set 1: Code-Review+2"},
                {"date": "2020-01-01 11:00:00.000000000", "message": "system message without author"}
            ],
            "current_revision": "abc",
            "revisions": {"abc": {"_number": 1, "created": "2020-01-01 00:00:00.000000000",
                "commit": {"message": "Fix thing\n\nLonger text"},
                "files": {"/COMMIT_MSG": {"lines_inserted": 7}, "src/a.c": {"lines_inserted": 4, "lines_deleted": 2}}}}
        })
    }

    #[test]
    fn normalizes_reviewers_and_votes() {
        let (c, accounts) = normalize(&raw_change("MERGED")).unwrap();
        assert_eq!(c.change_id, "proj~master~I1");
        assert_eq!(c.invited_reviewers, BTreeSet::from(["2".to_string(), "3".to_string()]));
        assert_eq!(c.votes.len(), 2);
        assert_eq!((c.votes[0].reviewer.as_str(), c.votes[0].value), ("2", 2));
        assert_eq!(c.votes[1].value, 0);
        assert_eq!(c.messages.len(), 1);
        assert_eq!(c.revisions[0].files.len(), 1);
        assert_eq!(c.description, "Fix thing\n\nLonger text");
        assert_eq!(c.closed_at, parse_timestamp("2020-01-02T00:00:00Z"));
        assert_eq!(accounts.len(), 3);
    }

    #[test]
    fn new_status_maps_to_open() {
        let (c, _) = normalize(&raw_change("NEW")).unwrap();
        assert_eq!(c.status, ChangeStatus::Open);
        assert_eq!(c.closed_at, None);
    }

    #[test]
    fn draft_status_rejected() {
        assert!(matches!(normalize(&raw_change("DRAFT")), Err(IngestError::Normalize(_))));
    }

    #[test]
    fn abandoned_without_submitted_uses_updated() {
        let mut raw = raw_change("ABANDONED");
        raw.as_object_mut().unwrap().remove("submitted");
        let (c, _) = normalize(&raw).unwrap();
        assert_eq!(c.closed_at, parse_timestamp("2020-01-03T00:00:00Z"));
    }

    struct PagedServer {
        pages: Vec<usize>,
        requests: RefCell<Vec<String>>,
    }

    impl Transport for PagedServer {
        fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
            self.requests.borrow_mut().push(url.to_string());
            let idx = self.requests.borrow().len() - 1;
            let start: usize = self.pages[..idx].iter().sum();
            let n = self.pages[idx];
            let mut docs: Vec<Value> = (start..start + n).map(|i| json!({"id": format!("c{i}"), "status": "MERGED"})).collect();
            if idx + 1 < self.pages.len() {
                docs.last_mut().unwrap()["_more_changes"] = json!(true);
            }
            let mut body = b")]}'\n".to_vec();
            body.extend(serde_json::to_vec(&docs).unwrap());
            Ok(HttpResponse { status: 200, body })
        }
    }

    fn test_config() -> IngestConfig {
        let mut cfg = IngestConfig::new("https://review.example.org/", "status:merged");
        cfg.rate_limit = 0.0;
        cfg.retry.base_delay = Duration::ZERO;
        cfg
    }

    #[test]
    fn pagination_follows_more_changes() {
        let server = PagedServer { pages: vec![500, 120], requests: RefCell::default() };
        let mut got = Vec::new();
        let summary = fetch_changes(&test_config(), &server, |d| {
            got.push(d);
            Ok(())
        })
        .unwrap();
        assert_eq!(summary.changes, 620);
        assert_eq!(summary.offsets, vec![0, 500]);
        assert!(got.iter().all(|d| d["status"] == "MERGED"));
        let first = &server.requests.borrow()[0];
        assert!(first.starts_with("https://review.example.org/changes/?q=status%3Amerged&n=500&start=0"), "{first}");
        for opt in DETAIL_OPTIONS {
            assert!(first.contains(&format!("o={opt}")));
        }
    }

    #[test]
    fn single_page_issues_one_request() {
        let server = PagedServer { pages: vec![3], requests: RefCell::default() };
        let summary = fetch_changes(&test_config(), &server, |_| Ok(())).unwrap();
        assert_eq!(summary.requests, 1);
        assert_eq!(server.requests.borrow().len(), 1);
    }

    struct Failing(u16);

    impl Transport for Failing {
        fn get(&self, _url: &str) -> Result<HttpResponse, TransportError> {
            match self.0 {
                0 => Err(TransportError("connection reset".into())),
                s => Ok(HttpResponse { status: s, body: b"Bad query".to_vec() }),
            }
        }
    }

    #[test]
    fn client_errors_surface_server_message() {
        let err = fetch_changes(&test_config(), &Failing(400), |_| Ok(())).unwrap_err();
        assert_eq!(err.to_string(), "HTTP 400: Bad query");
    }

    #[test]
    fn network_failure_is_resumable() {
        let mut cfg = test_config();
        cfg.start_offset = 1000;
        cfg.retry.max_attempts = 3;
        let err = fetch_changes(&cfg, &Failing(0), |_| Ok(())).unwrap_err();
        assert_eq!(err.resume_offset(), Some(1000));
        assert!(err.to_string().contains("after 3 attempts"));
    }
}
