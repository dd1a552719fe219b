use utsgan::dataset::save_ucr;
use utsgan::evaluation::generate;
use utsgan::trainer::Trainer;

use crate::args::GenerateArgs;
use crate::failure::{CmdResult, Failure};

pub fn run(args: &GenerateArgs) -> CmdResult {
    if args.count == 0 {
        return Err(Failure::user("--count must be at least 1"));
    }
    if !args.checkpoint.is_file() {
        return Err(Failure::user(format!("checkpoint {} does not exist", args.checkpoint.display())));
    }
    let (trainer, info) = Trainer::load(&args.checkpoint)?;
    let series = generate(&trainer, info.data_scale, args.count, args.seed);
    let path = args.output.clone().unwrap_or_else(|| {
        let run = args.checkpoint.parent().unwrap_or(std::path::Path::new("."));
        run.join("generated").join(format!("epoch{}-seed{}.tsv", info.epoch, args.seed))
    });
    save_ucr(&path, &series, &info.class_id.to_string())?;
    println!("{} series of length {} written to {}", args.count, series.shape()[1], path.display());
    Ok(())
}
