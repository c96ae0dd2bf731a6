use std::collections::BTreeMap;
use std::net::TcpListener;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use threadtoc::http::RetryPolicy;
use threadtoc::llm::{
    bindings, complete, complete_all, render, Backend, Catalog, CompletionRequest, HttpBackend, LlmError, MockBackend,
    Prompt, PromptTemplate, RecordingBackend, ReplayBackend, Task, TemplateBody,
};

fn request(prompt: &str, task: Task, input: &str, seed: u64) -> CompletionRequest {
    CompletionRequest {
        prompt: Prompt::Text(prompt.to_string()),
        max_tokens: 64,
        temperature: 0.0,
        seed,
        stop_sequences: vec![],
        task,
        input: input.to_string(),
    }
}

#[test]
fn labeling_template_renders_the_debate_quote() {
    let catalog = Catalog::bundled();
    let p = render(catalog.template("gpt35").unwrap(), &bindings([("text", "A vs B")])).unwrap();
    let Prompt::Text(text) = p else { panic!("text prompt expected") };
    assert!(text.starts_with("Generate a single descriptive phrase"));
    assert!(text.ends_with("Debate: \"\"\"A vs B\"\"\""));
}

#[test]
fn template_without_placeholders_is_verbatim() {
    let t = PromptTemplate::text("plain", Task::Labeling, "Nothing to fill {here");
    assert_eq!(render(&t, &BTreeMap::new()).unwrap(), Prompt::Text("Nothing to fill {here".into()));
}

#[test]
fn missing_input_binding_is_an_error() {
    let catalog = Catalog::bundled();
    let err = render(catalog.template("frame-gpt35").unwrap(), &bindings([("instruction", "x")])).unwrap_err();
    assert!(matches!(err, LlmError::MissingBinding(n) if n == "input"));
}

#[test]
fn template_defaults_yield_to_caller_bindings() {
    let catalog = Catalog::bundled();
    let t = catalog.template("t0-qa").unwrap();
    let Prompt::Text(a) = render(t, &bindings([("text", "X")])).unwrap() else { unreachable!() };
    assert!(a.contains("Question: What is the title of the discussion?"));
    let Prompt::Text(b) = render(t, &bindings([("text", "X"), ("output_type", "topic")])).unwrap() else { unreachable!() };
    assert!(b.contains("What is the topic of the discussion?"));
}

#[test]
fn every_catalog_template_renders_with_full_bindings() {
    let catalog = Catalog::bundled();
    let all = bindings([
        ("text", "T"),
        ("input_type", "debate"),
        ("output_type", "title"),
        ("instruction", "I"),
        ("input", "N"),
        ("frames", "[]"),
        ("authors", "A"),
    ]);
    assert!(catalog.templates().len() >= 25);
    for t in catalog.templates() {
        let p = render(t, &all).unwrap();
        assert!(!p.canonical().contains("{text}"), "{}", t.template_id);
        if let TemplateBody::Chat(turns) = &t.body {
            assert_eq!(turns.len(), 2);
        }
    }
    assert!(catalog.for_model("gpt-4", Task::Framing).is_some());
    assert!(catalog.for_model("bloom", Task::Labeling).is_some());
}

#[test]
fn chat_template_renders_roles() {
    let catalog = Catalog::bundled();
    let p = render(catalog.template("frame-chat").unwrap(), &bindings([("instruction", "sys"), ("input", "usr")])).unwrap();
    let Prompt::Chat(turns) = p else { panic!("chat prompt expected") };
    assert_eq!((turns[0].role.as_str(), turns[0].content.as_str()), ("system", "sys"));
    assert_eq!((turns[1].role.as_str(), turns[1].content.as_str()), ("user", "usr"));
}

#[test]
fn mock_is_deterministic_and_follows_its_contract() {
    let mock = MockBackend::default();
    let label = request("p", Task::Labeling, "one two three four five six", 3);
    let a = complete(&label, &mock).unwrap();
    assert_eq!(a.text, "LABEL(one two three four five)");
    assert_eq!(complete(&label, &mock).unwrap().text, a.text);

    let frame = request("frame prompt", Task::Framing, "x", 3);
    let f1 = complete(&frame, &mock).unwrap().text;
    assert_eq!(complete(&frame, &mock).unwrap().text, f1);
    let parsed: Vec<String> = serde_json::from_str(&f1).unwrap();
    assert_eq!(parsed.len(), 3);
    let texts: std::collections::HashSet<String> =
        (0..20).map(|s| complete(&request("frame prompt", Task::Framing, "x", s), &mock).unwrap().text).collect();
    assert!(texts.len() > 1, "seed changes the rotation");
}

#[test]
fn replay_serves_recorded_text_and_misses_unknown_prompts() {
    let mock = MockBackend::default();
    let recorder = RecordingBackend::new(&mock);
    let known = request("known prompt", Task::Labeling, "alpha beta", 0);
    complete(&known, &recorder).unwrap();
    let replay = ReplayBackend::from_jsonl(&recorder.to_jsonl()).unwrap();
    assert_eq!(replay.len(), 1);
    assert_eq!(complete(&known, &replay).unwrap().text, "LABEL(alpha beta)");
    let unknown = request("unknown prompt", Task::Labeling, "alpha beta", 0);
    let err = complete(&unknown, &replay).unwrap_err();
    assert!(matches!(err, LlmError::TranscriptMiss(h) if h == unknown.prompt.sha256()));
}

#[test]
fn malformed_transcript_lines_are_reported() {
    let err = ReplayBackend::from_jsonl("{\"prompt_sha256\":\"a\",\"response\":\"b\"}\nnot json\n").unwrap_err();
    assert!(matches!(err, LlmError::Transcript { line: 2, .. }));
}

#[test]
fn stop_sequences_apply_to_every_backend() {
    let mock = MockBackend::default();
    let mut r = request("p", Task::Labeling, "cut here please", 0);
    r.stop_sequences = vec![" here".into()];
    assert_eq!(complete(&r, &mock).unwrap().text, "LABEL(cut");
}

#[test]
fn batches_keep_request_order() {
    let mock = MockBackend::default();
    let reqs: Vec<CompletionRequest> =
        (0..40).map(|i| request(&format!("p{i}"), Task::Labeling, &format!("w{i}"), 0)).collect();
    let out = complete_all(&reqs, &mock, 8);
    for (i, r) in out.into_iter().enumerate() {
        assert_eq!(r.unwrap().text, format!("LABEL(w{i})"));
    }
}

#[test]
fn unreachable_http_backend_fails_fast() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let retry = RetryPolicy {
        max_attempts: 2,
        initial_backoff: Duration::from_millis(10),
        max_backoff: Duration::from_millis(20),
        total_timeout: Duration::from_secs(2),
    };
    let backend = HttpBackend::new(format!("http://127.0.0.1:{port}/v1"), "m", None, retry);
    let err = complete(&request("p", Task::Labeling, "", 0), &backend).unwrap_err();
    assert!(matches!(err, LlmError::BackendUnavailable(_)), "{err}");
}

#[test]
fn silent_server_hits_the_total_timeout() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = listener.local_addr().unwrap().port();
    let _hold = std::thread::spawn(move || {
        let conns: Vec<_> = listener.incoming().take(4).collect();
        std::thread::sleep(Duration::from_secs(10));
        drop(conns);
    });
    let retry = RetryPolicy {
        max_attempts: 2,
        initial_backoff: Duration::from_millis(10),
        max_backoff: Duration::from_millis(20),
        total_timeout: Duration::from_millis(800),
    };
    let backend = HttpBackend::new(format!("http://127.0.0.1:{port}"), "m", None, retry);
    let start = Instant::now();
    assert!(complete(&request("p", Task::Labeling, "", 0), &backend).is_err());
    assert!(start.elapsed() < Duration::from_secs(5), "{:?}", start.elapsed());
}

fn plain_value() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9 .,!?]{0,12}"
}

proptest! {
    #[test]
    fn rendering_is_injective_in_bindings(a in plain_value(), b in plain_value(), c in plain_value(), d in plain_value()) {
        let t = PromptTemplate::text("t", Task::Labeling, "{input_type}|{output_type}: {text}");
        let render_with = |x: &str, y: &str| {
            render(&t, &bindings([("input_type", x), ("output_type", "o"), ("text", y)])).unwrap()
        };
        prop_assert_eq!(render_with(&a, &b) == render_with(&c, &d), a == c && b == d);
    }
}

struct Probe;
impl Backend for Probe {
    fn backend_id(&self) -> String {
        "probe".into()
    }
    fn complete(&self, r: &CompletionRequest) -> Result<threadtoc::llm::CompletionResult, LlmError> {
        Ok(threadtoc::llm::CompletionResult {
            text: r.prompt.sha256(),
            backend_id: self.backend_id(),
            latency: Duration::ZERO,
            prompt_tokens: None,
            completion_tokens: None,
        })
    }
}

#[test]
fn custom_backends_plug_into_the_gateway() {
    let r = request("abc", Task::Framing, "", 0);
    assert_eq!(complete(&r, &Probe).unwrap().text, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

fn read_request(stream: &mut std::net::TcpStream) -> String {
    use std::io::Read;
    let mut buf = Vec::new();
    let mut chunk = [0u8; 1024];
    loop {
        let n = stream.read(&mut chunk).unwrap();
        buf.extend_from_slice(&chunk[..n]);
        let text = String::from_utf8_lossy(&buf).to_string();
        if let Some(end) = text.find("\r\n\r\n") {
            let length = text[..end]
                .lines()
                .find_map(|l| l.to_ascii_lowercase().strip_prefix("content-length:").map(|v| v.trim().parse::<usize>().unwrap()))
                .unwrap_or(0);
            if buf.len() >= end + 4 + length {
                return text;
            }
        }
        if n == 0 {
            return String::from_utf8_lossy(&buf).to_string();
        }
    }
}

#[test]
fn http_backend_retries_rate_limits_and_reads_chat_answers() {
    use std::io::Write;
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = listener.local_addr().unwrap().port();
    let server = std::thread::spawn(move || {
        let mut seen = Vec::new();
        for (i, conn) in listener.incoming().take(2).enumerate() {
            let mut s = conn.unwrap();
            seen.push(read_request(&mut s));
            let (status, body) = if i == 0 {
                ("429 Too Many Requests", "{}".to_string())
            } else {
                ("200 OK", r#"{"choices":[{"message":{"content":"Economic, Morality"}}],"usage":{"prompt_tokens":12,"completion_tokens":3}}"#.to_string())
            };
            write!(s, "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}", body.len()).unwrap();
        }
        seen
    });
    let retry = RetryPolicy {
        max_attempts: 3,
        initial_backoff: Duration::from_millis(10),
        max_backoff: Duration::from_millis(20),
        total_timeout: Duration::from_secs(10),
    };
    let backend = HttpBackend::new(format!("http://127.0.0.1:{port}/v1"), "gpt-4", Some("secret".into()), retry);
    let catalog = Catalog::bundled();
    let prompt = render(catalog.template("frame-chat").unwrap(), &bindings([("instruction", "sys"), ("input", "usr")])).unwrap();
    let req = CompletionRequest { prompt, ..request("", Task::Framing, "", 5) };
    let out = complete(&req, &backend).unwrap();
    assert_eq!(out.text, "Economic, Morality");
    assert_eq!((out.prompt_tokens, out.completion_tokens), (Some(12), Some(3)));
    let seen = server.join().unwrap();
    assert!(seen[1].starts_with("POST /v1/chat/completions"));
    assert!(seen[1].to_ascii_lowercase().contains("authorization: bearer secret"));
    assert!(seen[1].contains(r#""model": "gpt-4""#), "{}", seen[1]);
}
