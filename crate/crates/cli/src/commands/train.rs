use std::sync::Mutex;

use utsgan::dataset::{filter_class, save_ucr, Dataset};
use utsgan::trainer::{train_in, RunDir, TrainingConfig, TrainingData};

use crate::args::TrainArgs;
use crate::failure::{CmdResult, Failure};
use crate::settings::{class_ids, Settings};

/// One (dataset, class, mode, seed) run.
struct Job<'a> {
    name: &'a str,
    data: &'a Dataset,
    class_id: usize,
    cfg: TrainingConfig,
}

impl Job<'_> {
    fn label(&self) -> String {
        let raw = self.data.raw_class(self.class_id).unwrap_or_default();
        format!("{} class {raw} {} seed {}", self.name, self.cfg.mode, self.cfg.seed)
    }
}

pub fn run(args: &TrainArgs) -> CmdResult {
    let mut s = Settings::from_file(args.sel.config.as_deref())?
        .with_selection(&args.sel)
        .with_spectral(&args.spectral)
        .with_filter(&args.runs);
    for (key, value) in [
        ("epochs", &args.epochs),
        ("checkpoints", &args.checkpoints),
        ("batch-size", &args.batch_size),
        ("n-critic", &args.n_critic),
        ("lambda", &args.lambda),
        ("dz", &args.dz),
        ("jobs", &args.jobs),
    ] {
        s.set(key, value.as_ref());
    }
    s.flag("resume", args.resume);

    let base = s.training_config()?;
    let modes = s.modes()?;
    let seeds = s.seeds()?;
    let jobs_limit: usize = s.parse("jobs", 1)?;
    if jobs_limit == 0 {
        return Err(Failure::user("--jobs must be at least 1"));
    }
    let resume = s.bool("resume")?;
    let out = s.out_root();

    let sources = s.sources()?;
    let datasets: Vec<Dataset> = sources.iter().map(|src| src.load()).collect::<CmdResult<_>>()?;
    let mut jobs = Vec::new();
    for (src, d) in sources.iter().zip(&datasets) {
        for class_id in class_ids(d, s.classes().as_deref())? {
            for &mode in &modes {
                for &seed in &seeds {
                    jobs.push(Job {
                        name: &src.name,
                        data: d,
                        class_id,
                        cfg: TrainingConfig { mode, seed, ..base.clone() },
                    });
                }
            }
        }
    }

    let queue = Mutex::new(jobs.iter().rev().collect::<Vec<_>>());
    let failures = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..jobs_limit.min(jobs.len()) {
            scope.spawn(|| loop {
                let Some(job) = queue.lock().unwrap().pop() else {
                    break;
                };
                match run_one(job, &out, resume) {
                    Ok(msg) => println!("{}: {msg}", job.label()),
                    Err(e) => {
                        eprintln!("{}: failed: {e}", job.label());
                        failures.lock().unwrap().push(job.label());
                    }
                }
            });
        }
    });
    let failures = failures.into_inner().unwrap();
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::runtime(format!("{} of {} runs failed: {}", failures.len(), jobs.len(), failures.join("; "))))
    }
}

fn run_one(job: &Job, out: &std::path::Path, resume: bool) -> Result<String, Failure> {
    let class = filter_class(job.data, job.class_id)?;
    let data = TrainingData::new(job.name, job.class_id, &class, &job.cfg)?;
    let dir = RunDir::new(out, job.name, job.class_id, job.cfg.mode, job.cfg.seed);
    save_ucr(&dir.path().join("real.tsv"), &class.to_tensor(), &job.class_id.to_string())?;
    let outcome = train_in(&dir, &data, &job.cfg, resume)?;
    let epochs: Vec<usize> = outcome.checkpoints.iter().map(|c| c.0).collect();
    Ok(format!("{} steps, checkpoints at epochs {epochs:?} in {}", outcome.steps, dir.path().display()))
}
