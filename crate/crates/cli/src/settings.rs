//! Option merging (defaults < config file < flags) and dataset resolution.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use utsgan::dataset::{load_ucr, Dataset};
use utsgan::trainer::{parse_kv, Mode, TrainingConfig, CONFIG_KEYS};

use crate::args::{RunFilter, Selection, Spectral};
use crate::failure::{CmdResult, Failure, UserError};

/// Keys that only the command line layer understands.
const CLI_KEYS: &[&str] = &[
    "dataset",
    "class",
    "include-test",
    "out",
    "runs",
    "samples",
    "fcn-epochs",
    "jobs",
    "resume",
];

/// Merged options as flag-named strings.
#[derive(Debug, Default)]
pub struct Settings(BTreeMap<String, String>);

impl Settings {
    /// Reads `config` (if any) and rejects keys that are not flag names.
    pub fn from_file(config: Option<&Path>) -> CmdResult<Self> {
        let mut s = Settings::default();
        let Some(path) = config else {
            return Ok(s);
        };
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::user(format!("cannot read config file {}: {e}", path.display())))?;
        for (k, v) in parse_kv(&text)? {
            if !CLI_KEYS.contains(&k.as_str()) && !CONFIG_KEYS.contains(&k.as_str()) {
                return Err(Failure::user(format!("{}: unknown key {k:?}", path.display())));
            }
            s.0.insert(k, v);
        }
        Ok(s)
    }

    pub fn set(&mut self, key: &str, value: Option<impl ToString>) {
        if let Some(v) = value {
            self.0.insert(key.to_string(), v.to_string());
        }
    }

    pub fn flag(&mut self, key: &str, on: bool) {
        if on {
            self.0.insert(key.to_string(), "true".into());
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn bool(&self, key: &str) -> CmdResult<bool> {
        match self.get(key) {
            None | Some("false") => Ok(false),
            Some("true") => Ok(true),
            Some(v) => Err(Failure::user(format!("{key} must be true or false, got {v:?}"))),
        }
    }

    pub fn parse<T: std::str::FromStr>(&self, key: &str, default: T) -> CmdResult<T> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| Failure::user(format!("bad value {v:?} for {key}"))),
        }
    }

    fn list(&self, key: &str) -> Option<Vec<String>> {
        self.get(key).map(|v| v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
    }

    /// Applies the selection flags over the file values.
    pub fn with_selection(mut self, sel: &Selection) -> Self {
        if !sel.dataset.is_empty() {
            self.0.insert("dataset".into(), sel.dataset.join(","));
        }
        self.set("class", sel.class.as_ref());
        self.flag("include-test", sel.include_test);
        self.set("out", sel.out.as_ref().map(|p| p.display()));
        self
    }

    pub fn with_spectral(mut self, s: &Spectral) -> Self {
        self.set("image-size", s.image_size.as_ref());
        self.set("nfft", s.nfft.as_ref());
        self.set("hop", s.hop.as_ref());
        self
    }

    pub fn with_filter(mut self, f: &RunFilter) -> Self {
        self.set("mode", f.mode.as_ref());
        self.set("seed", f.seed.as_ref());
        self
    }

    /// Training configuration from every model key present. `mode` and
    /// `seed` are lists at this layer and are set per run.
    pub fn training_config(&self) -> CmdResult<TrainingConfig> {
        let mut cfg = TrainingConfig::default();
        for key in CONFIG_KEYS {
            if matches!(*key, "mode" | "seed") {
                continue;
            }
            if let Some(v) = self.get(key) {
                cfg.set(key, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn modes(&self) -> CmdResult<Vec<Mode>> {
        match self.list("mode") {
            None => Ok(vec![Mode::Unified]),
            Some(v) => v.iter().map(|m| m.parse::<Mode>().map_err(Failure::from)).collect(),
        }
    }

    pub fn seeds(&self) -> CmdResult<Vec<u64>> {
        match self.list("seed") {
            None => Ok(vec![0]),
            Some(v) => v
                .iter()
                .map(|s| s.parse().map_err(|_| Failure::user(format!("bad seed {s:?}"))))
                .collect(),
        }
    }

    /// `--out`, else `$UTSGAN_OUT`, else `runs`.
    pub fn out_root(&self) -> PathBuf {
        if let Some(o) = self.get("out") {
            return PathBuf::from(o);
        }
        std::env::var_os("UTSGAN_OUT").map_or_else(|| PathBuf::from("runs"), PathBuf::from)
    }

    pub fn sources(&self) -> CmdResult<Vec<Source>> {
        let specs = self.list("dataset").unwrap_or_default();
        if specs.is_empty() {
            return Err(Failure::user("no dataset given; pass --dataset"));
        }
        let include_test = self.bool("include-test")?;
        specs.iter().map(|s| Source::resolve(s, include_test)).collect()
    }

    pub fn classes(&self) -> Option<Vec<String>> {
        self.list("class")
    }
}

/// Where one dataset's files live.
#[derive(Clone, Debug)]
pub struct Source {
    pub name: String,
    pub train: PathBuf,
    pub test: Option<PathBuf>,
}

impl Source {
    /// Accepts a directory, a `_TRAIN.tsv` file, or a name under
    /// `$UTSGAN_UCR_DIR`. Missing files are reported here.
    pub fn resolve(spec: &str, include_test: bool) -> CmdResult<Self> {
        let path = PathBuf::from(spec);
        let path = if path.exists() {
            path
        } else {
            match std::env::var_os("UTSGAN_UCR_DIR") {
                Some(root) if Path::new(&root).join(spec).is_dir() => Path::new(&root).join(spec),
                _ => return Err(Failure::user(format!("dataset {spec:?} not found (and not under $UTSGAN_UCR_DIR)"))),
            }
        };
        let (name, train) = if path.is_dir() {
            let name = path
                .file_name()
                .and_then(|n| n.to_str())
                .ok_or_else(|| Failure::user(format!("cannot name dataset at {}", path.display())))?
                .to_string();
            let train = path.join(format!("{name}_TRAIN.tsv"));
            (name, train)
        } else {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            let name = stem.strip_suffix("_TRAIN").unwrap_or(stem).to_string();
            (name, path.clone())
        };
        if !train.is_file() {
            return Err(Failure::user(format!("training split {} does not exist", train.display())));
        }
        let test = if include_test {
            let t = train.with_file_name(format!("{name}_TEST.tsv"));
            if !t.is_file() {
                return Err(Failure::user(format!("--include-test: {} does not exist", t.display())));
            }
            Some(t)
        } else {
            None
        };
        Ok(Source { name, train, test })
    }

    pub fn load(&self) -> CmdResult<Dataset> {
        let d = load_ucr(&self.train, self.test.as_deref()).user()?;
        d.check_class_count()?;
        Ok(d)
    }

    /// Raw file bytes, for cache keys.
    pub fn bytes(&self) -> CmdResult<Vec<u8>> {
        let mut out = fs::read(&self.train).user()?;
        if let Some(t) = &self.test {
            out.extend(fs::read(t).user()?);
        }
        Ok(out)
    }
}

/// Class ids for the requested raw labels, or every class.
pub fn class_ids(d: &Dataset, labels: Option<&[String]>) -> CmdResult<Vec<usize>> {
    let Some(labels) = labels else {
        return Ok(d.class_ids());
    };
    labels
        .iter()
        .map(|l| {
            d.raw_classes().iter().position(|c| c == l).ok_or_else(|| {
                Failure::user(format!("{} has no class {l:?}; classes are {:?}", d.name, d.raw_classes()))
            })
        })
        .collect()
}
