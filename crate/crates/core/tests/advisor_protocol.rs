//! Remote advisor against the bundled mock server.

use varl::advisor::mock::{MockConfig, MockMode, MockServer};
use varl::advisor::remote::{RemoteAdvisor, RemoteConfig};
use varl::advisor::{run_trigger, Advisor, AdvisorRequest, ResponseStatus, TriggerSchedule};
use varl::buffers::{GuidanceBuffer, ReplayBuffer, Transition};
use varl::envs::{make_task, Action, Task};

fn server(mode: MockMode, fail_first: usize) -> MockServer {
    MockServer::start(MockConfig { mode, fail_first }, 0).unwrap()
}

fn client(server: &MockServer, retries: u32) -> RemoteAdvisor {
    RemoteAdvisor::new(RemoteConfig {
        endpoint: server.url(),
        retries,
        retry_backoff_ms: 1,
        timeout_ms: 5_000,
        ..RemoteConfig::default()
    })
    .unwrap()
}

fn grid_request(task: &dyn Task, x: f64) -> AdvisorRequest {
    AdvisorRequest::new(task, &[x, 0.0, 0.5, 0.5, 0.5 - x, 0.5], &Action::Discrete(0))
}

#[test]
fn fixed_reply_round_trips() {
    let task = make_task("sparse-grid").unwrap();
    let mock = server(MockMode::Fixed("action: 2".into()), 0);
    let mut advisor = client(&mock, 0);
    let out = advisor.advise(&[grid_request(task.as_ref(), 0.0)]);
    assert_eq!(out[0].status, ResponseStatus::Parsed);
    assert_eq!(out[0].parsed_action, Some(Action::Discrete(2)));
    assert_eq!(mock.hits(), 1);
}

#[test]
fn oracle_mode_answers_with_the_oracle_action() {
    let task = make_task("sparse-grid").unwrap();
    let mock = server(MockMode::Oracle, 0);
    let mut advisor = client(&mock, 0);
    let req = grid_request(task.as_ref(), 0.0);
    let out = advisor.advise(std::slice::from_ref(&req));
    assert_eq!(out[0].parsed_action, Some(task.oracle_action(&req.state)));
}

#[test]
fn out_of_space_reply_is_rejected_and_nothing_is_stored() {
    let task = make_task("sparse-grid").unwrap();
    let spec = task.spec().clone();
    let mock = server(MockMode::Fixed("action: 9".into()), 0);
    let mut advisor = client(&mock, 0);
    let mut replay = ReplayBuffer::new(16, spec.state_dim, spec.action_space.clone()).unwrap();
    let s = grid_request(task.as_ref(), 0.0).state;
    replay
        .push(Transition {
            state: s.clone(),
            action: Action::Discrete(1),
            reward: 0.0,
            next_state: s,
            terminal: false,
            truncated: false,
        })
        .unwrap();
    let mut guidance = GuidanceBuffer::new(spec.action_space.clone(), None);
    let schedule = TriggerSchedule::new([1], 500).unwrap();
    let record = run_trigger(&schedule, 1, &replay, task.as_ref(), &mut advisor, &mut guidance).unwrap();
    assert_eq!((record.requested, record.added, record.parse_failures), (1, 0, 1));
    assert!(guidance.is_empty());
    // One ask plus one repair round.
    assert_eq!(mock.hits(), 2);
    assert_eq!(advisor.stats().repairs, 1);
}

#[test]
fn repeated_request_is_served_from_cache() {
    let task = make_task("sparse-grid").unwrap();
    let mock = server(MockMode::Oracle, 0);
    let mut advisor = client(&mock, 0);
    let req = grid_request(task.as_ref(), 1.0 / 6.0);
    let first = advisor.advise(std::slice::from_ref(&req));
    assert!(!first[0].cached);
    let hits = mock.hits();
    let calls = advisor.stats().network_calls;
    let second = advisor.advise(std::slice::from_ref(&req));
    assert!(second[0].cached);
    assert_eq!(second[0].parsed_action, first[0].parsed_action);
    assert_eq!(mock.hits(), hits);
    assert_eq!(advisor.stats().network_calls, calls);
    assert_eq!(advisor.stats().cache_hits, 1);
}

#[test]
fn duplicates_within_a_batch_cost_one_call() {
    let task = make_task("sparse-grid").unwrap();
    let mock = server(MockMode::Oracle, 0);
    let mut advisor = client(&mock, 0);
    let req = grid_request(task.as_ref(), 0.5);
    let out = advisor.advise(&[req.clone(), req.clone(), req]);
    assert!(out.iter().all(|r| r.status == ResponseStatus::Parsed));
    assert_eq!(mock.hits(), 1);
}

#[test]
fn transient_failure_is_retried() {
    let task = make_task("sparse-grid").unwrap();
    let mock = server(MockMode::Oracle, 1);
    let mut advisor = client(&mock, 2);
    let out = advisor.advise(&[grid_request(task.as_ref(), 0.0)]);
    assert_eq!(out[0].status, ResponseStatus::Parsed);
    assert_eq!(mock.hits(), 2);
}

#[test]
fn persistent_failure_skips_the_pair_and_is_not_cached() {
    let task = make_task("sparse-grid").unwrap();
    let spec = task.spec().clone();
    let mock = server(MockMode::Oracle, usize::MAX);
    let mut advisor = client(&mock, 2);
    let mut replay = ReplayBuffer::new(16, spec.state_dim, spec.action_space.clone()).unwrap();
    for i in 0..3 {
        let s = grid_request(task.as_ref(), i as f64 / 6.0).state;
        replay
            .push(Transition {
                state: s.clone(),
                action: Action::Discrete(3),
                reward: 0.0,
                next_state: s,
                terminal: false,
                truncated: false,
            })
            .unwrap();
    }
    let mut guidance = GuidanceBuffer::new(spec.action_space.clone(), None);
    let schedule = TriggerSchedule::new([3], 500).unwrap();
    let record = run_trigger(&schedule, 3, &replay, task.as_ref(), &mut advisor, &mut guidance).unwrap();
    assert_eq!((record.requested, record.added, record.transport_failures), (3, 0, 3));
    assert!(guidance.is_empty());
    // Three prompts, each tried once plus two retries.
    assert_eq!(mock.hits(), 9);
    assert_eq!(advisor.cache_len(), 0);
}
