//! Sequential vs data-parallel minibatch work on a point-push sized agent.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use varl::buffers::{ReplayBuffer, Transition};
use varl::envs::make_env;
use varl::sac::{SacAgent, SacConfig};
use varl::Execution;

fn replay(n: usize) -> ReplayBuffer {
    let mut env = make_env("point-push").unwrap();
    let spec = env.spec().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut buf = ReplayBuffer::new(n, spec.state_dim, spec.action_space.clone()).unwrap();
    let mut s = env.reset(0);
    while buf.len() < n {
        let a = spec.action_space.sample(&mut rng);
        let r = env.step(&a).unwrap();
        buf.push(Transition {
            state: s.clone(),
            action: a,
            reward: r.reward,
            next_state: r.next_state.clone(),
            terminal: r.done && !r.truncated,
            truncated: r.truncated,
        })
        .unwrap();
        s = if r.done { env.reset(buf.len() as u64) } else { r.next_state };
    }
    buf
}

fn bench(c: &mut Criterion) {
    let buf = replay(4096);
    let spec = make_env("point-push").unwrap().spec().clone();
    let mut group = c.benchmark_group("sac_update");
    for batch in [64usize, 256] {
        for exec in [Execution::Sequential, Execution::Parallel] {
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let cfg = SacConfig { batch_size: batch, execution: exec, ..SacConfig::default() };
            let mut agent = SacAgent::new(spec.state_dim, &spec.action_space, cfg, &mut rng).unwrap();
            let label = format!("{exec:?}").to_lowercase();
            group.bench_with_input(BenchmarkId::new(format!("critic/{label}"), batch), &batch, |b, &n| {
                b.iter(|| {
                    let mb = buf.sample_refs(n, &mut rng).unwrap();
                    let noise = agent.sample_noise(n, &mut rng);
                    agent.critic_update(&mb, &noise).unwrap()
                })
            });
            group.bench_with_input(BenchmarkId::new(format!("actor/{label}"), batch), &batch, |b, &n| {
                b.iter(|| {
                    let mb = buf.sample_refs(n, &mut rng).unwrap();
                    let states: Vec<&[f64]> = mb.iter().map(|t| t.state.as_slice()).collect();
                    let noise = agent.sample_noise(n, &mut rng);
                    agent.baseline_policy_loss(&states, &noise).unwrap()
                })
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
