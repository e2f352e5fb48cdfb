use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

use pomdp_coder::envs::{Env, Kind};
use pomdp_coder::proposer::{
    build_initial_prompt, build_refinement_prompt, extract_program, Completer, EndpointConfig, HttpProposer, ProposalRequest,
    ProposeError, Proposer, ScriptedProposer,
};
use pps::{ComponentKind, Program};

fn tiger_schema() -> Arc<pomdp_core::DomainSchema> {
    Env::new("tiger").unwrap().domain().schema.clone()
}

const TIGER_TRANSITION: &str = "def transition_func(state, action):\n    return copy(state)\n";

#[test]
fn initial_prompt_lists_schema_and_examples() {
    let schema = tiger_schema();
    let examples: Vec<String> = (0..5).map(|i| format!("empty_state -> TigerState(tiger_location={})", i % 2)).collect();
    let req = ProposalRequest::initial(ComponentKind::Initial, schema.clone(), examples);
    let text = build_initial_prompt(&req).unwrap();
    assert!(text.contains("class TigerState:"));
    assert!(text.contains("def initial_func(empty_state):"));
    assert_eq!(text.matches("empty_state -> TigerState").count(), 5);
    assert!(text.contains("Do not overfit to the specific samples."));
    assert!(!text.contains("pyro"));
    assert_eq!(text, build_initial_prompt(&req).unwrap());

    let empty = ProposalRequest::initial(ComponentKind::Initial, schema, vec![]);
    assert!(build_initial_prompt(&empty).unwrap().contains("should model.\n\n\n\nHere is the template"));
}

#[test]
fn refinement_prompt_requires_errors() {
    let schema = tiger_schema();
    let prev = Program::parse(TIGER_TRANSITION, ComponentKind::Transition, schema).unwrap();
    let empty = ProposalRequest::refinement(prev.clone(), String::new());
    assert_eq!(build_refinement_prompt(&empty), Err(ProposeError::EmptyErrors));
    let req = ProposalRequest::refinement(prev, "Here are some samples\nx -> y\n".into());
    let text = build_refinement_prompt(&req).unwrap();
    assert!(text.contains("return copy(state)"));
    assert!(text.contains("x -> y"));
    assert_eq!(text, build_refinement_prompt(&req).unwrap());
    assert!(build_initial_prompt(&req).is_err());
}

#[test]
fn extraction_uses_the_last_block() {
    let schema = tiger_schema();
    let one = format!("Sure.\n```python\n{TIGER_TRANSITION}```\n");
    assert!(extract_program(&one, ComponentKind::Transition, schema.clone()).is_ok());
    assert_eq!(extract_program("no code at all", ComponentKind::Transition, schema.clone()), Err(ProposeError::NoCodeBlock));
    let two = format!("```python\nnot valid(\n```\nrevised:\n```python\n{TIGER_TRANSITION}```");
    assert!(extract_program(&two, ComponentKind::Transition, schema.clone()).is_ok());
    let two_bad_last = format!("```python\n{TIGER_TRANSITION}```\n```\nnot valid(\n```");
    assert!(matches!(extract_program(&two_bad_last, ComponentKind::Transition, schema), Err(ProposeError::Parse(_))));
}

#[test]
fn scripted_queue_advances_then_repeats() {
    let schema = tiger_schema();
    let truth = Kind::Tiger.sources()[1];
    let p = ScriptedProposer::new().with_queue(ComponentKind::Transition, vec!["bad".into(), truth.into()]);
    let req = ProposalRequest::initial(ComponentKind::Transition, schema.clone(), vec![]);
    assert!(p.propose(&req).is_err());
    let gt = Program::from_file_contents(truth, schema).unwrap();
    assert_eq!(p.propose(&req).unwrap(), gt);
    assert_eq!(p.propose(&req).unwrap(), gt);
    assert_eq!(p.calls(ComponentKind::Transition), 3);
}

#[test]
fn scripted_queue_loads_from_a_directory() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("transition.pps"), "broken").unwrap();
    std::fs::write(dir.path().join("transition_1.pps"), Kind::Tiger.sources()[1]).unwrap();
    std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let p = ScriptedProposer::from_dir(dir.path()).unwrap();
    let req = ProposalRequest::initial(ComponentKind::Transition, tiger_schema(), vec![]);
    assert!(p.propose(&req).is_err());
    assert!(p.propose(&req).is_ok());
}

/// Serves `responses` in order, one per connection, and counts requests.
fn mock_server(responses: Vec<(u16, String)>) -> (String, Arc<AtomicUsize>, thread::JoinHandle<Vec<String>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let h = hits.clone();
    let handle = thread::spawn(move || {
        let mut bodies = Vec::new();
        for (status, body) in responses {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                if line == "\r\n" || line.is_empty() {
                    break;
                }
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            bodies.push(String::from_utf8(buf).unwrap());
            h.fetch_add(1, Ordering::SeqCst);
            let mut stream = stream;
            write!(stream, "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}", body.len())
                .unwrap();
        }
        bodies
    });
    (url, hits, handle)
}

fn config(url: String, max_retries: usize) -> EndpointConfig {
    EndpointConfig {
        base_url: url,
        api_key_env: "POMDP_CODER_TEST_NO_SUCH_KEY".into(),
        model: "mock".into(),
        temperature: 0.5,
        max_retries,
        timeout_secs: 10,
    }
}

#[test]
fn http_proposer_parses_a_canned_reply_and_logs_it() {
    let content = format!("Here it is.\n```python\n{TIGER_TRANSITION}```");
    let body = serde_json::json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string();
    let (url, hits, handle) = mock_server(vec![(200, body)]);
    let logs = tempfile::tempdir().unwrap();
    let p = HttpProposer::new(config(url, 0)).with_log_dir(logs.path().join("llm"));
    let req = ProposalRequest::initial(ComponentKind::Transition, tiger_schema(), vec![]);
    let prog = p.propose(&req).unwrap();
    assert_eq!(prog.kind(), ComponentKind::Transition);
    assert_eq!(hits.load(Ordering::SeqCst), 1);
    let sent: serde_json::Value = serde_json::from_str(&handle.join().unwrap()[0]).unwrap();
    assert_eq!(sent["model"], "mock");
    assert_eq!(sent["temperature"], 0.5);
    assert_eq!(sent["messages"][0]["role"], "user");
    assert_eq!(sent["messages"][0]["content"], req.prompt().unwrap());
    assert!(logs.path().join("llm/00000-prompt.txt").exists());
    assert!(logs.path().join("llm/00000-response.txt").exists());
}

#[test]
fn http_server_errors_are_retried_then_surfaced() {
    let (url, hits, handle) = mock_server(vec![(500, "{}".into()); 3]);
    let p = HttpProposer::new(config(url, 2));
    let err = p.complete("hello").unwrap_err();
    assert_eq!(hits.load(Ordering::SeqCst), 3);
    assert!(matches!(err, ProposeError::Status { status: 500, attempts: 3, .. }), "{err}");
    handle.join().unwrap();
}
