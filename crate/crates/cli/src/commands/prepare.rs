use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};
use utsgan::dataset::{filter_class, peak_rescale};
use utsgan::plot::image_grid;
use utsgan::spectral::{series_to_image, Colormap};

use crate::args::PrepareArgs;
use crate::failure::{CmdResult, Failure};
use crate::settings::{class_ids, Settings};

/// Bumped whenever the rendering or the layout of a corpus changes.
const CORPUS_VERSION: u32 = 1;
const PREVIEW_COUNT: usize = 8;

pub fn run(args: &PrepareArgs) -> CmdResult {
    let s = Settings::from_file(args.sel.config.as_deref())?
        .with_selection(&args.sel)
        .with_spectral(&args.spectral);
    let cfg = s.training_config()?;
    let out = s.out_root();
    for src in s.sources()? {
        let d = src.load()?;
        let classes = class_ids(&d, s.classes().as_deref())?;
        let stft = cfg.stft(d.series_len())?;

        let mut hasher = Sha256::new();
        hasher.update(src.bytes()?);
        hasher.update(format!("v{CORPUS_VERSION};size={};nfft={};hop={};classes={classes:?}", cfg.image_size, stft.n_fft(), stft.hop()));
        let key: String = hasher.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect();
        let dir = out.join(&src.name).join("spectrograms").join(&key);

        if is_complete(&dir) {
            println!("{}: cached corpus at {}", src.name, dir.display());
            continue;
        }
        let tmp = dir.with_extension("partial");
        if tmp.exists() {
            fs::remove_dir_all(&tmp).map_err(|e| Failure::runtime(format!("{}: {e}", tmp.display())))?;
        }
        let images_dir = tmp.join("images");
        fs::create_dir_all(&images_dir).map_err(|e| Failure::runtime(format!("{}: {e}", images_dir.display())))?;

        let mut index = String::from("row\tclass\tfile\n");
        let mut preview = Vec::new();
        let mut count = 0;
        for &c in &classes {
            let class = filter_class(&d, c)?;
            let rows: Vec<usize> = (0..d.len()).filter(|&i| d.labels()[i] == c).collect();
            for (row, series) in rows.iter().zip(class.rows()) {
                let (scaled, _) = peak_rescale(series);
                let img = series_to_image(&scaled, &stft, Colormap::viridis(), cfg.image_size, cfg.image_size)?;
                let file = format!("images/row-{row:05}.png");
                img.write_png(&tmp.join(&file))?;
                index.push_str(&format!("{row}\t{}\t{file}\n", d.raw_class(c).unwrap_or_default()));
                if preview.len() < PREVIEW_COUNT {
                    preview.push(img);
                }
                count += 1;
            }
        }
        write(&tmp.join("index.tsv"), &index)?;
        write(
            &tmp.join("settings.txt"),
            &format!(
                "dataset = {}\ntrain = {}\ntest = {}\nimage-size = {}\nnfft = {}\nhop = {}\nclasses = {}\n",
                src.name,
                src.train.display(),
                src.test.as_ref().map_or_else(|| "none".into(), |t| t.display().to_string()),
                cfg.image_size,
                stft.n_fft(),
                stft.hop(),
                classes.iter().map(|&c| d.raw_class(c).unwrap_or_default()).collect::<Vec<_>>().join(",")
            ),
        )?;
        image_grid(&preview).save(&tmp.join("preview.png"))?;
        fs::rename(&tmp, &dir).map_err(|e| Failure::runtime(format!("{}: {e}", dir.display())))?;
        println!("{}: rendered {count} images into {}", src.name, dir.display());
    }
    Ok(())
}

fn write(path: &Path, text: &str) -> CmdResult {
    fs::write(path, text).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))
}

/// A corpus is complete when its index exists and names only files that do.
fn is_complete(dir: &Path) -> bool {
    let Ok(index) = fs::read_to_string(dir.join("index.tsv")) else {
        return false;
    };
    index
        .lines()
        .skip(1)
        .all(|l| l.rsplit('\t').next().is_some_and(|f| dir.join(f).is_file()))
}
