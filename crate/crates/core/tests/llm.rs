use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use synroute_core::llm::{
    build_prompt, run_task, sampling_plan, Backend, CompletionRequest, HttpBackend, LlmError, MockBackend, Task,
    WireFormat, PLAN_NAMES,
};

/// (headers, body) of each request a test server received.
type Seen = Arc<Mutex<Vec<(String, String)>>>;
type PlanRow = (&'static str, &'static [(f64, f64, u32)]);

/// Serves `replies` in order, one connection each, and keeps the request
/// bodies and headers it saw.
fn serve(replies: Vec<(u16, String)>) -> (String, Seen) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/complete", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&seen);
    thread::spawn(move || {
        for (status, body) in replies {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream);
            let mut headers = String::new();
            let mut len = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                headers.push_str(&line);
            }
            let mut req = vec![0; len];
            reader.read_exact(&mut req).unwrap();
            log.lock().unwrap().push((headers, String::from_utf8(req).unwrap()));
            let mut stream = reader.into_inner();
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
    });
    (url, seen)
}

fn request(prompt: &str) -> CompletionRequest {
    CompletionRequest {
        prompt: prompt.into(),
        target: "CCO".into(),
        temperature: 0.6,
        top_p: 0.5,
        repeat: 0,
        max_tokens: 64,
    }
}

#[test]
fn server_error_body_is_preserved() {
    let (url, _) = serve(vec![(500, r#"{"error":"model overloaded"}"#.into())]);
    let backend = HttpBackend::new(&url, None, Duration::from_secs(5), WireFormat::Plain, None);
    assert_eq!(
        backend.complete(&request("p")),
        Err(LlmError::Backend {
            status: 500,
            body: r#"{"error":"model overloaded"}"#.into()
        })
    );
}

#[test]
fn plain_format_round_trip() {
    let (url, seen) = serve(vec![(200, r#"{"text":"{\"reactions\":[]}"}"#.into())]);
    let backend = HttpBackend::new(
        &url,
        Some("s3cret".into()),
        Duration::from_secs(5),
        WireFormat::Plain,
        None,
    );
    assert_eq!(backend.complete(&request("hello")).unwrap(), r#"{"reactions":[]}"#);
    let (headers, body) = seen.lock().unwrap()[0].clone();
    assert!(headers.to_ascii_lowercase().contains("authorization: bearer s3cret"));
    let v: serde_json::Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["prompt"], "hello");
    assert_eq!(v["temperature"], 0.6);
    assert_eq!(v["top_p"], 0.5);
    assert_eq!(v["max_tokens"], 64);
}

#[test]
fn openai_chat_format_round_trip() {
    let reply = r#"{"choices":[{"message":{"role":"assistant","content":"route"}}]}"#;
    let (url, seen) = serve(vec![(200, reply.into()), (200, r#"{"choices":[]}"#.into())]);
    let backend = HttpBackend::new(
        &url,
        None,
        Duration::from_secs(5),
        WireFormat::OpenaiChat,
        Some("m1".into()),
    );
    assert_eq!(backend.complete(&request("hi")).unwrap(), "route");
    let (_, body) = seen.lock().unwrap()[0].clone();
    let v: serde_json::Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["model"], "m1");
    assert_eq!(v["messages"][0]["role"], "user");
    assert_eq!(v["messages"][0]["content"], "hi");
    // a 200 without the expected field is a backend error, not a response
    assert!(matches!(
        backend.complete(&request("hi")),
        Err(LlmError::Backend { status: 200, .. })
    ));
}

#[test]
fn unreachable_server_is_a_transport_error() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let backend = HttpBackend::new(
        &format!("http://127.0.0.1:{port}/"),
        None,
        Duration::from_secs(2),
        WireFormat::Plain,
        None,
    );
    assert!(matches!(backend.complete(&request("p")), Err(LlmError::Transport(_))));
}

#[test]
fn plans_and_task_defaults() {
    let table: [PlanRow; 6] = [
        ("frozen-only", &[(0.1, 0.1, 1)]),
        ("low-only", &[(0.6, 0.5, 5)]),
        ("medium-only", &[(1.0, 0.7, 5)]),
        ("high-only", &[(1.5, 0.9, 5)]),
        ("frugal", &[(0.1, 0.1, 1), (0.6, 0.5, 1), (1.0, 0.7, 1), (1.5, 0.9, 1)]),
        ("greedy", &[(0.1, 0.1, 1), (0.6, 0.5, 2), (1.0, 0.7, 3), (1.5, 0.9, 4)]),
    ];
    assert_eq!(PLAN_NAMES.len(), table.len());
    for (name, want) in table {
        let plan = sampling_plan(name).unwrap();
        let got: Vec<(f64, f64, u32)> = plan
            .settings
            .iter()
            .map(|s| (s.temperature, s.top_p, s.repeats))
            .collect();
        assert_eq!(got, want, "{name}");
        assert_eq!(
            plan.total_inferences(),
            want.iter().map(|w| w.2 as usize).sum::<usize>()
        );
        assert_eq!(plan.expand().len(), plan.total_inferences());
    }
    assert_eq!(sampling_plan("greedy").unwrap().total_inferences(), 10);
    assert!(matches!(sampling_plan("eager"), Err(LlmError::UnknownPlan(_))));

    let tasks = [
        ("llm-benchmark", "frozen-only", 5, 25),
        ("synthesis-planning", "greedy", 5, 25),
        ("synthesizable-analog", "high-only", 10, 50),
        ("hit-expansion", "high-only", 20, 100),
    ];
    for (name, plan, k, n_syn) in tasks {
        let d = name.parse::<Task>().unwrap().defaults();
        assert_eq!((d.plan, d.k, d.n_syn), (plan, k, n_syn), "{name}");
    }
    assert!("planning".parse::<Task>().is_err());
}

#[test]
fn greedy_run_over_mock_replays_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let mock = MockBackend::new(dir.path());
    let plan = sampling_plan("greedy").unwrap();
    let targets: Vec<String> = ["CCO", "c1ccccc1", "CC(=O)O"].map(String::from).to_vec();
    for t in &targets {
        for (s, r) in plan.expand() {
            // bytes a parser would choke on still come back verbatim
            let text = format!("{t} @ {} {} #{r}\n\t{{\"x\": \"é\"}}  ", s.temperature, s.top_p);
            mock.put(t, s.temperature, s.top_p, r, &text).unwrap();
        }
    }
    let records = run_task(&targets, &plan, "Plan a route.", &mock, 4);
    assert_eq!(records.len(), 30);
    for (i, rec) in records.iter().enumerate() {
        let (s, r) = plan.expand()[i % 10];
        assert_eq!(rec.target_smiles, targets[i / 10]);
        assert_eq!((rec.temperature, rec.top_p, rec.repeat), (s.temperature, s.top_p, r));
        let want = format!(
            "{} @ {} {} #{r}\n\t{{\"x\": \"é\"}}  ",
            targets[i / 10],
            s.temperature,
            s.top_p
        );
        assert_eq!(rec.response.as_deref(), Some(want.as_str()));
        assert!(rec.error.is_none());
    }
    assert_eq!(run_task(&targets, &plan, "Plan a route.", &mock, 1), records);

    // a missing file is a per-request failure, not a stop
    let (s, r) = plan.expand()[3];
    std::fs::remove_file(mock.path_for("CCO", s.temperature, s.top_p, r)).unwrap();
    let again = run_task(&targets, &plan, "Plan a route.", &mock, 3);
    assert_eq!(again.iter().filter(|x| x.error.is_some()).count(), 1);
    assert!(again[3].error.as_deref().unwrap().contains("404"));
}

#[test]
fn prompts_are_deterministic() {
    let a = build_prompt("CCO", "Plan.\n").unwrap();
    assert_eq!(a, build_prompt("  CCO\n", "Plan.").unwrap());
    assert!(a.contains("CCO") && a.contains("Plan."));
    assert_ne!(a, build_prompt("CCN", "Plan.").unwrap());
    assert_eq!(build_prompt("   ", "Plan."), Err(LlmError::EmptyTarget));
    assert_eq!(
        MockBackend::key("CCO", 0.6, 0.5, 1),
        MockBackend::key("CCO", 0.6, 0.5, 1)
    );
    assert_ne!(
        MockBackend::key("CCO", 0.6, 0.5, 1),
        MockBackend::key("CCO", 0.6, 0.5, 2)
    );
}
