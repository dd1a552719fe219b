//! The global comparison table: one row per (dataset, class, mode, seed,
//! epoch), replaced in place when a run is evaluated again.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use utsgan::evaluation::FidReport;
use utsgan::trainer::Mode;

pub const HEADER: &str = "dataset,class,mode,seed,epoch,runs,samples_per_run,fid_mean,fid_std,classifier_val_acc";

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub dataset: String,
    pub class_id: usize,
    pub mode: Mode,
    pub seed: u64,
    pub epoch: usize,
    pub runs: usize,
    pub samples_per_run: usize,
    pub fid_mean: f64,
    pub fid_std: f64,
    pub classifier_val_acc: f64,
}

type Key = (String, usize, String, u64, usize);

impl Row {
    pub fn from_report(r: &FidReport, seed: u64) -> Self {
        Row {
            dataset: r.dataset.clone(),
            class_id: r.class_id,
            mode: r.mode,
            seed,
            epoch: r.epoch,
            runs: r.runs,
            samples_per_run: r.samples_per_run,
            fid_mean: r.fid_mean,
            fid_std: r.fid_std,
            classifier_val_acc: r.classifier_val_acc,
        }
    }

    fn key(&self) -> Key {
        (self.dataset.clone(), self.class_id, self.mode.to_string(), self.seed, self.epoch)
    }

    fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.dataset,
            self.class_id,
            self.mode,
            self.seed,
            self.epoch,
            self.runs,
            self.samples_per_run,
            self.fid_mean,
            self.fid_std,
            self.classifier_val_acc
        )
    }

    fn parse(line: &str) -> Option<Self> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 10 {
            return None;
        }
        Some(Row {
            dataset: f[0].to_string(),
            class_id: f[1].parse().ok()?,
            mode: f[2].parse().ok()?,
            seed: f[3].parse().ok()?,
            epoch: f[4].parse().ok()?,
            runs: f[5].parse().ok()?,
            samples_per_run: f[6].parse().ok()?,
            fid_mean: f[7].parse().ok()?,
            fid_std: f[8].parse().ok()?,
            classifier_val_acc: f[9].parse().ok()?,
        })
    }
}

pub fn read(path: &Path) -> anyhow::Result<Vec<Row>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = fs::read_to_string(path)?;
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| Row::parse(l).ok_or_else(|| anyhow::anyhow!("{}:{}: malformed row", path.display(), i + 2)))
        .collect()
}

pub fn write(path: &Path, rows: &[Row]) -> anyhow::Result<()> {
    let mut text = String::from(HEADER);
    text.push('\n');
    for r in rows {
        text.push_str(&r.to_csv());
        text.push('\n');
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

/// Replaces rows with matching keys and adds the rest; output is sorted by
/// key so the file does not depend on evaluation order.
pub fn upsert(existing: Vec<Row>, new: Vec<Row>) -> Vec<Row> {
    let mut map: BTreeMap<Key, Row> = existing.into_iter().map(|r| (r.key(), r)).collect();
    for r in new {
        map.insert(r.key(), r);
    }
    map.into_values().collect()
}

/// For each epoch: in how many (dataset, class, seed) groups with both
/// modes present the unified FID mean is at most the serial one, and how
/// many such groups there are.
pub fn unified_wins(rows: &[Row]) -> Vec<(usize, usize, usize)> {
    let mut pairs: BTreeMap<(usize, String, usize, u64), [Option<f64>; 2]> = BTreeMap::new();
    for r in rows {
        let slot = match r.mode {
            Mode::Unified => 0,
            Mode::Serial => 1,
        };
        pairs.entry((r.epoch, r.dataset.clone(), r.class_id, r.seed)).or_default()[slot] = Some(r.fid_mean);
    }
    let mut by_epoch: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for ((epoch, ..), [u, s]) in pairs {
        if let (Some(u), Some(s)) = (u, s) {
            let e = by_epoch.entry(epoch).or_default();
            e.0 += (u <= s) as usize;
            e.1 += 1;
        }
    }
    by_epoch.into_iter().map(|(e, (w, n))| (e, w, n)).collect()
}
