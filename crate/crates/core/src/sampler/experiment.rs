use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use rand::SeedableRng;

use super::{run_chain, ChainOutput, Method, SamplerConfig, SamplerError};
use crate::respondent::{Respondent, RespondentError};
use crate::seeds::{derive_seed, ChainRng, Stream};

/// The six objects of the reference color study.
pub const DEFAULT_OBJECTS: [&str; 6] = ["Chocolate", "Lemon", "Strawberry", "Grass", "Eggshell", "Lavender"];

/// Identity and seeds of one chain within an experiment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainTask {
    pub object_index: usize,
    pub object: String,
    pub chain_id: usize,
    pub method: Method,
    pub sampler_seed: u64,
    pub respondent_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainRun {
    pub task: ChainTask,
    pub output: ChainOutput,
}

/// Runs `cfg.chains` chains per object with seeds derived from `cfg.seed`.
///
/// `factory` builds a fresh respondent per chain. Up to `concurrency` chains
/// run at once; results come back in (object, chain) order regardless. A chain
/// whose respondent cannot be built or fails mid-way is returned flagged
/// incomplete instead of stopping the run.
pub fn run_experiment<F>(
    objects: &[String],
    cfg: &SamplerConfig,
    factory: F,
    concurrency: usize,
) -> Result<Vec<ChainRun>, SamplerError>
where
    F: Fn(&ChainTask) -> Result<Box<dyn Respondent + Send>, RespondentError> + Sync,
{
    if objects.is_empty() {
        return Err(SamplerError::NoObjects);
    }
    cfg.validate()?;
    let tasks: Vec<ChainTask> = objects
        .iter()
        .enumerate()
        .flat_map(|(object_index, object)| {
            (0..cfg.chains).map(move |chain_id| ChainTask {
                object_index,
                object: object.clone(),
                chain_id,
                method: cfg.method,
                sampler_seed: derive_seed(cfg.seed, object_index, chain_id, Stream::Sampler),
                respondent_seed: derive_seed(cfg.seed, object_index, chain_id, Stream::Respondent),
            })
        })
        .collect();

    let run_one = |task: &ChainTask| -> ChainOutput {
        match factory(task) {
            Ok(mut respondent) => {
                let mut rng = ChainRng::seed_from_u64(task.sampler_seed);
                run_chain(&task.object, task.chain_id, &mut respondent, cfg, &mut rng)
            }
            Err(e) => ChainOutput {
                object: task.object.clone(),
                chain_id: task.chain_id,
                method: cfg.method,
                samples: Vec::new(),
                records: Vec::new(),
                accept_count: 0,
                complete: false,
                failure: Some(e.to_string()),
            },
        }
    };

    let workers = concurrency.clamp(1, tasks.len());
    let outputs: Vec<ChainOutput> = if workers == 1 {
        tasks.iter().map(run_one).collect()
    } else {
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<ChainOutput>>> = Mutex::new(vec![None; tasks.len()]);
        thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(task) = tasks.get(i) else { break };
                    let out = run_one(task);
                    slots.lock().unwrap_or_else(|e| e.into_inner())[i] = Some(out);
                });
            }
        });
        slots
            .into_inner()
            .unwrap_or_else(|e| e.into_inner())
            .into_iter()
            .map(|o| o.expect("every task ran"))
            .collect()
    };

    Ok(tasks.into_iter().zip(outputs).map(|(task, output)| ChainRun { task, output }).collect())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::respondent::{LatticeTarget, Oracle, TargetSpec};

    fn objects(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn oracle_factory(target: Arc<LatticeTarget>) -> impl Fn(&ChainTask) -> Result<Box<dyn Respondent + Send>, RespondentError> + Sync {
        move |task| Ok(Box::new(Oracle::new(target.clone(), task.respondent_seed)))
    }

    fn target() -> Arc<LatticeTarget> {
        Arc::new(LatticeTarget::from_spec(&TargetSpec::gaussian([30.0, 60.0, 30.0], [15.0, 10.0, 10.0])).unwrap())
    }

    #[test]
    fn defaults_give_two_thousand_samples_per_object() {
        let cfg = SamplerConfig::for_method(Method::Mcmc);
        let runs = run_experiment(&objects(&["Chocolate"]), &cfg, oracle_factory(target()), 1).unwrap();
        assert_eq!(runs.len(), 4);
        assert_eq!(runs.iter().map(|r| r.output.samples.len()).sum::<usize>(), 2000);
    }

    #[test]
    fn six_objects_make_twenty_four_chains() {
        let cfg = SamplerConfig { iterations: 5, ..SamplerConfig::for_method(Method::Gibbs) };
        let runs = run_experiment(&objects(&DEFAULT_OBJECTS), &cfg, oracle_factory(target()), 3).unwrap();
        assert_eq!(runs.len(), 24);
        for (i, run) in runs.iter().enumerate() {
            assert_eq!(run.task.object, DEFAULT_OBJECTS[i / 4]);
            assert_eq!(run.task.chain_id, i % 4);
        }
    }

    #[test]
    fn reruns_and_parallelism_are_bitwise_identical() {
        let cfg = SamplerConfig { iterations: 50, seed: 9, ..SamplerConfig::for_method(Method::Mcmc) };
        let t = target();
        let objs = objects(&["Lemon", "Grass"]);
        let a = run_experiment(&objs, &cfg, oracle_factory(t.clone()), 1).unwrap();
        let b = run_experiment(&objs, &cfg, oracle_factory(t.clone()), 4).unwrap();
        assert_eq!(a, b);
        let c = run_experiment(&objs, &SamplerConfig { seed: 10, ..cfg }, oracle_factory(t), 1).unwrap();
        assert_ne!(a[0].output.samples, c[0].output.samples);
    }

    #[test]
    fn failed_factory_flags_the_chain_and_continues() {
        let t = target();
        let factory = move |task: &ChainTask| -> Result<Box<dyn Respondent + Send>, RespondentError> {
            if task.chain_id == 1 {
                Err(RespondentError::TransportError("unreachable".into()))
            } else {
                Ok(Box::new(Oracle::new(t.clone(), task.respondent_seed)))
            }
        };
        let cfg = SamplerConfig { iterations: 10, ..SamplerConfig::default() };
        let runs = run_experiment(&objects(&["Lemon"]), &cfg, factory, 2).unwrap();
        assert!(!runs[1].output.complete);
        assert!(runs.iter().enumerate().all(|(i, r)| r.output.complete == (i != 1)));
    }

    #[test]
    fn rejects_empty_object_list() {
        let cfg = SamplerConfig::default();
        assert_eq!(run_experiment(&[], &cfg, oracle_factory(target()), 1).unwrap_err(), SamplerError::NoObjects);
    }
}
