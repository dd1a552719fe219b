use std::fs;
use std::path::Path;

use utsgan::dataset::{filter_class, Dataset};
use utsgan::evaluation::{fid_report, train_fcn, FcnConfig, TrainedClassifier, REPORT_HEADER};
use utsgan::trainer::RunDir;

use crate::args::EvaluateArgs;
use crate::failure::{CmdResult, Failure};
use crate::settings::{class_ids, Settings};
use crate::table;

pub fn run(args: &EvaluateArgs) -> CmdResult {
    let mut s = Settings::from_file(args.sel.config.as_deref())?
        .with_selection(&args.sel)
        .with_filter(&args.runs_filter);
    s.set("runs", args.runs.as_ref());
    s.set("samples", args.samples.as_ref());
    s.set("fcn-epochs", args.fcn_epochs.as_ref());

    let runs: usize = s.parse("runs", utsgan::evaluation::DEFAULT_RUNS)?;
    if runs == 0 {
        return Err(Failure::user("--runs must be at least 1"));
    }
    let samples: Option<usize> = s.get("samples").map(|_| s.parse("samples", 0)).transpose()?;
    let fcn = FcnConfig {
        max_epochs: s.parse("fcn-epochs", FcnConfig::default().max_epochs)?,
        ..FcnConfig::default()
    };
    let modes = s.modes()?;
    let seeds = s.seeds()?;
    let out = s.out_root();

    let mut new_rows = Vec::new();
    for src in s.sources()? {
        let d = src.load()?;
        let classes = class_ids(&d, s.classes().as_deref())?;
        let mut classifier = None;
        for class_id in classes {
            let real = filter_class(&d, class_id)?.to_tensor();
            for &mode in &modes {
                for &seed in &seeds {
                    let dir = RunDir::new(&out, &src.name, class_id, mode, seed);
                    let checkpoints = dir.checkpoints()?;
                    if checkpoints.is_empty() {
                        return Err(Failure::user(format!("no checkpoints in {}; run train first", dir.path().display())));
                    }
                    if classifier.is_none() {
                        classifier = Some(load_or_train(&out.join(&src.name).join("classifier.ckpt"), &d, &fcn)?);
                    }
                    let cls = classifier.as_ref().unwrap();
                    let mut lines = vec![REPORT_HEADER.to_string()];
                    for (epoch, path) in &checkpoints {
                        let report = fid_report(path, &real, cls, runs, samples, seed)?;
                        println!(
                            "{} class {} {mode} seed {seed} epoch {epoch}: FID {:.4} ± {:.4} (median {:.4}, {runs} runs)",
                            src.name,
                            d.raw_class(class_id).unwrap_or_default(),
                            report.fid_mean,
                            report.fid_std,
                            report.median()
                        );
                        lines.push(report.csv_row());
                        new_rows.push(table::Row::from_report(&report, seed));
                    }
                    let path = dir.path().join("fid.csv");
                    fs::write(&path, lines.join("\n") + "\n").map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))?;
                }
            }
        }
    }

    let path = out.join("comparison.csv");
    let rows = table::upsert(table::read(&path).map_err(Failure::Runtime)?, new_rows);
    table::write(&path, &rows).map_err(Failure::Runtime)?;
    println!("comparison table: {}", path.display());
    for (epoch, wins, pairs) in table::unified_wins(&rows) {
        println!("epoch {epoch}: unified FID <= serial in {wins} of {pairs} paired runs");
    }
    Ok(())
}

/// The per-dataset classifier shared by every run, trained on demand.
fn load_or_train(path: &Path, d: &Dataset, cfg: &FcnConfig) -> CmdResult<TrainedClassifier> {
    if path.exists() {
        let c = TrainedClassifier::load(path)?;
        if c.model.series_len() != d.series_len() {
            return Err(Failure::user(format!(
                "{} expects series of length {}, dataset has {}",
                path.display(),
                c.model.series_len(),
                d.series_len()
            )));
        }
        return Ok(c);
    }
    println!("training the FCN classifier for {} ({} series)", d.name, d.len());
    let c = train_fcn(d, cfg)?;
    c.save(path)?;
    println!(
        "classifier validation accuracy {:.3} at epoch {} of {}; saved to {}",
        c.val_acc,
        c.best_epoch,
        c.epochs_run,
        path.display()
    );
    Ok(c)
}
