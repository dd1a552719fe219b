use std::fs;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use utsgan::dataset::load_ucr;
use utsgan::evaluation::generate;
use utsgan::nn::sample_latent;
use utsgan::plot::{image_grid, loss_curves, overlay, plot_losses};
use utsgan::spectral::SpectrogramImage;
use utsgan::trainer::{read_losses, RunDir, Trainer, TrainingConfig};

use crate::args::PlotArgs;
use crate::failure::{CmdResult, Failure};

pub fn run(args: &PlotArgs) -> CmdResult {
    let dir = RunDir(args.run.clone());
    let require = |p: &std::path::Path, what: &str| {
        if p.is_file() {
            Ok(())
        } else {
            Err(Failure::user(format!("{} is missing {what} ({})", args.run.display(), p.display())))
        }
    };
    require(&dir.config(), "the config echo")?;
    require(&dir.losses(), "the loss log")?;
    let real_path = dir.path().join("real.tsv");
    require(&real_path, "the real-series copy written by train")?;
    let checkpoints = dir.checkpoints()?;
    if checkpoints.is_empty() {
        return Err(Failure::user(format!("{} has no checkpoints", args.run.display())));
    }
    if args.samples == 0 {
        return Err(Failure::user("--samples must be at least 1"));
    }

    let text = fs::read_to_string(dir.config()).map_err(|e| Failure::runtime(format!("{}: {e}", dir.config().display())))?;
    let cfg = TrainingConfig::from_kv(&text)?;
    let plots = dir.path().join("plots");
    fs::create_dir_all(&plots).map_err(|e| Failure::runtime(format!("{}: {e}", plots.display())))?;

    let rows = read_losses(&dir.losses())?;
    let loss_path = plots.join("loss.png");
    let extent = plot_losses(&rows, cfg.mode, &loss_path)?;
    println!(
        "{} ({} curve(s) over {} epochs, y axis {:.4} to {:.4})",
        loss_path.display(),
        loss_curves(&rows, cfg.mode).len(),
        extent.1,
        extent.2,
        extent.3
    );

    let real = load_ucr(&real_path, None)?;
    let k = args.samples.min(real.len());
    let picks: Vec<usize> = (0..k).map(|i| i * real.len() / k).collect();
    let real_rows = real.select(&picks);
    for (epoch, path) in &checkpoints {
        let (trainer, info) = Trainer::load(path)?;
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        let z = sample_latent(2, trainer.bundle.d_z, &mut rng);
        let batch = trainer.bundle.g.eval(&z);
        let per = batch.len() / 2;
        let images = (0..2)
            .map(|i| {
                let t = utsgan_autograd::Tensor::new(&batch.shape()[1..], batch.data()[i * per..(i + 1) * per].to_vec());
                SpectrogramImage::from_network(&t)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let grid_path = plots.join(format!("spectrograms-epoch{epoch}.png"));
        image_grid(&images).save(&grid_path)?;

        let generated = generate(&trainer, info.data_scale, k, args.seed);
        let (canvas, extent) = overlay(&generated, &real_rows);
        let overlay_path = plots.join(format!("overlay-epoch{epoch}.png"));
        canvas.save(&overlay_path)?;
        println!(
            "{}, {} ({k} generated in red over {k} real in blue, y axis {:.3} to {:.3})",
            grid_path.display(),
            overlay_path.display(),
            extent.2,
            extent.3
        );
    }
    Ok(())
}
