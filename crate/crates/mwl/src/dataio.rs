//! Dataset manifests, recording and ratings files, and the persisted
//! intermediate artifacts of the pipeline.
//!
//! Text formats:
//! - recordings: one sample per line, one column per channel, separated by
//!   whitespace or commas; blank lines and `#` comments are skipped
//! - ratings: `subject rest simkap` per line (comma or whitespace separated,
//!   optional header); an empty or `-` cell marks a missing rating
//! - feature matrices: CSV `subject_id,condition,index_id,label,synthetic,<features…>`
//! - index series: long CSV `subject_id,condition,index_id,window,value`
//!
//! Floats are written with Rust's shortest round-trip formatting, so a text
//! round trip is bit exact.

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use mwl_core::bandindex::{IndexId, IndexSeries};
use mwl_core::features::RowKey;
use mwl_core::linalg::Matrix;
use mwl_core::recording::{STEW_CHANNELS, STEW_SAMPLING_RATE_HZ};
use mwl_core::{Condition, EegRecording, FeatureMatrix, Rating, WorkloadClass};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MwlError, Result};

/// One recording file listed in a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the manifest root unless absolute.
    pub path: PathBuf,
    pub subject_id: u32,
    pub condition: Condition,
}

/// Describes where a dataset lives and how to read it.
///
/// JSON schema:
/// ```json
/// {
///   "root": "relative/to/manifest/dir",
///   "sampling_rate_hz": 128.0,
///   "channel_names": ["AF3", "F7", "..."],
///   "n_samples": 19200,
///   "ratings": "ratings.txt",
///   "recordings": [{"path": "sub01_lo.txt", "subject_id": 1, "condition": "rest"}]
/// }
/// ```
/// `n_samples` and `ratings` are optional. Without a ratings file every
/// recording is unlabelled and dropped by feature extraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    #[serde(default)]
    pub root: PathBuf,
    pub sampling_rate_hz: f64,
    pub channel_names: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratings: Option<PathBuf>,
    #[serde(default)]
    pub recordings: Vec<ManifestEntry>,
}

impl DatasetManifest {
    /// Reads a manifest; a relative `root` is resolved against the manifest's
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        let mut m: DatasetManifest =
            serde_json::from_str(&text).map_err(|source| MwlError::Json { path: path.to_path_buf(), source })?;
        if m.root.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            m.root = base.join(&m.root);
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    /// Field-by-field problems; empty when the manifest is usable.
    pub fn validate(&self) -> Vec<String> {
        let mut errors = Vec::new();
        if !(self.sampling_rate_hz > 0.0 && self.sampling_rate_hz.is_finite()) {
            errors.push(format!("sampling_rate_hz: must be positive, got {}", self.sampling_rate_hz));
        }
        if self.channel_names.is_empty() {
            errors.push("channel_names: must not be empty".into());
        }
        let mut seen = HashSet::new();
        for name in &self.channel_names {
            if !seen.insert(name) {
                errors.push(format!("channel_names: duplicate channel `{name}`"));
            }
        }
        if self.n_samples == Some(0) {
            errors.push("n_samples: must be positive".into());
        }
        if let Some(r) = &self.ratings {
            let p = self.resolve(r);
            if !p.is_file() {
                errors.push(format!("ratings: file {} does not exist", p.display()));
            }
        }
        let mut pairs = HashSet::new();
        for (i, e) in self.recordings.iter().enumerate() {
            let p = self.resolve(&e.path);
            if !p.is_file() {
                errors.push(format!("recordings[{i}].path: file {} does not exist", p.display()));
            }
            if !pairs.insert((e.subject_id, e.condition)) {
                errors.push(format!(
                    "recordings[{i}]: duplicate entry for subject {} / {}",
                    e.subject_id, e.condition
                ));
            }
        }
        errors
    }
}

/// Recordings and ratings read from a manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub recordings: Vec<EegRecording>,
    pub ratings: Vec<Rating>,
    /// Recordings dropped because their rating is missing.
    pub unrated: Vec<(u32, Condition)>,
}

/// Loads every recording of a manifest (in parallel) and joins ratings by
/// subject and condition. Recordings without a rating are dropped and logged
/// when a ratings file is given.
pub fn load_dataset(manifest: &DatasetManifest) -> Result<Dataset> {
    let errors = manifest.validate();
    if !errors.is_empty() {
        return Err(MwlError::Validation(errors));
    }
    let ratings = match &manifest.ratings {
        Some(p) => read_ratings(&manifest.resolve(p))?,
        None => Vec::new(),
    };
    let n_ch = manifest.channel_names.len();
    let loaded: Vec<Result<EegRecording>> = manifest
        .recordings
        .par_iter()
        .map(|e| {
            let path = manifest.resolve(&e.path);
            let samples = read_matrix(&path, Some(n_ch), manifest.n_samples)?;
            EegRecording::new(e.subject_id, e.condition, samples, manifest.sampling_rate_hz, manifest.channel_names.clone())
                .map_err(MwlError::from)
        })
        .collect();
    let rated: HashSet<(u32, Condition)> = ratings.iter().map(|r| (r.subject_id, r.condition)).collect();
    let mut recordings = Vec::with_capacity(loaded.len());
    let mut unrated = Vec::new();
    for rec in loaded {
        let rec = rec?;
        if manifest.ratings.is_some() && !rated.contains(&(rec.subject_id, rec.condition)) {
            warn!("subject {} / {}: no rating, recording dropped", rec.subject_id, rec.condition);
            unrated.push((rec.subject_id, rec.condition));
            continue;
        }
        recordings.push(rec);
    }
    recordings.sort_by_key(|r| (r.subject_id, r.condition));
    info!("loaded {} recordings, {} ratings", recordings.len(), ratings.len());
    Ok(Dataset { recordings, ratings, unrated })
}

/// Reads a numeric text matrix. `cols` and `rows`, when given, are checked.
pub fn read_matrix(path: &Path, cols: Option<usize>, rows: Option<usize>) -> Result<Matrix> {
    let file = open(path)?;
    let mut data = Vec::new();
    let mut width = cols;
    let mut n_rows = 0usize;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| MwlError::io(path, e))?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let before = data.len();
        for cell in content.split(|c: char| c == ',' || c.is_whitespace()).filter(|c| !c.is_empty()) {
            let v: f64 = cell
                .parse()
                .map_err(|_| MwlError::parse(path, i + 1, format!("non-numeric cell `{cell}`")))?;
            data.push(v);
        }
        let got = data.len() - before;
        match width {
            Some(w) if w != got => {
                return Err(MwlError::parse(path, i + 1, format!("ragged row: {got} values, expected {w}")));
            }
            None => width = Some(got),
            _ => {}
        }
        n_rows += 1;
    }
    if let Some(expected) = rows {
        if expected != n_rows {
            return Err(MwlError::RowCount { path: path.to_path_buf(), expected, got: n_rows });
        }
    }
    Ok(Matrix::from_vec(n_rows, width.unwrap_or(0), data)?)
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    let mut w = create(path)?;
    let mut line = String::new();
    for i in 0..m.rows() {
        line.clear();
        for (j, v) in m.row(i).iter().enumerate() {
            if j > 0 {
                line.push(' ');
            }
            line.push_str(&v.to_string());
        }
        line.push('\n');
        w.write_all(line.as_bytes()).map_err(|e| MwlError::io(path, e))?;
    }
    w.flush().map_err(|e| MwlError::io(path, e))
}

/// Reads `subject rest simkap` lines. A first line whose leading cell is not
/// an integer is treated as a header.
pub fn read_ratings(path: &Path) -> Result<Vec<Rating>> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut first = true;
    for (i, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let is_first = std::mem::replace(&mut first, false);
        let cells: Vec<&str> = if content.contains(',') {
            content.split(',').map(str::trim).collect()
        } else {
            content.split_whitespace().collect()
        };
        let Ok(subject_id) = cells[0].parse::<u32>() else {
            if is_first {
                continue;
            }
            return Err(MwlError::parse(path, i + 1, format!("subject id `{}` is not an integer", cells[0])));
        };
        if cells.len() != 3 {
            return Err(MwlError::parse(path, i + 1, format!("expected 3 cells, found {}", cells.len())));
        }
        if !seen.insert(subject_id) {
            return Err(MwlError::parse(path, i + 1, format!("subject {subject_id} listed twice")));
        }
        for (cell, condition) in cells[1..].iter().zip(Condition::ALL) {
            if cell.is_empty() || *cell == "-" {
                continue;
            }
            let score: i64 =
                cell.parse().map_err(|_| MwlError::parse(path, i + 1, format!("rating `{cell}` is not an integer")))?;
            let rating = Rating::new(subject_id, condition, score).map_err(|e| MwlError::parse(path, i + 1, e.to_string()))?;
            out.push(rating);
        }
    }
    Ok(out)
}

pub fn write_ratings(path: &Path, ratings: &[Rating]) -> Result<()> {
    let mut by_subject: BTreeMap<u32, [Option<u8>; 2]> = BTreeMap::new();
    for r in ratings {
        by_subject.entry(r.subject_id).or_default()[r.condition as usize] = Some(r.score);
    }
    let mut text = String::from("subject_id,rest,simkap\n");
    let cell = |s: Option<u8>| s.map_or_else(|| "-".to_string(), |v| v.to_string());
    for (id, [rest, simkap]) in by_subject {
        text.push_str(&format!("{id},{},{}\n", cell(rest), cell(simkap)));
    }
    write_text(path, &text)
}

/// Builds a manifest for a directory in the conventional STEW layout:
/// `sub{NN}_lo.txt` (rest), `sub{NN}_hi.txt` (SIMKAP) and `ratings.txt`.
pub fn stew_manifest(dir: &Path) -> Result<DatasetManifest> {
    let entries = fs::read_dir(dir).map_err(|e| MwlError::io(dir, e))?;
    let mut recordings = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| MwlError::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some((subject_id, condition)) = parse_stew_name(&name) {
            recordings.push(ManifestEntry { path: PathBuf::from(name), subject_id, condition });
        }
    }
    if recordings.is_empty() {
        return Err(MwlError::MissingInput {
            path: dir.to_path_buf(),
            hint: "no sub{NN}_{lo|hi}.txt files found".into(),
        });
    }
    recordings.sort_by_key(|e| (e.subject_id, e.condition));
    let ratings = dir.join("ratings.txt");
    Ok(DatasetManifest {
        root: dir.to_path_buf(),
        sampling_rate_hz: STEW_SAMPLING_RATE_HZ,
        channel_names: STEW_CHANNELS.iter().map(|c| c.to_string()).collect(),
        n_samples: None,
        ratings: ratings.is_file().then(|| PathBuf::from("ratings.txt")),
        recordings,
    })
}

/// `sub07_hi.txt` → (7, Simkap).
pub fn parse_stew_name(name: &str) -> Option<(u32, Condition)> {
    let stem = name.strip_suffix(".txt")?.strip_prefix("sub")?;
    let (id, cond) = stem.split_once('_')?;
    if id.is_empty() || !id.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let condition = match cond {
        "lo" => Condition::Rest,
        "hi" => Condition::Simkap,
        _ => return None,
    };
    Some((id.parse().ok()?, condition))
}

pub fn stew_file_name(subject_id: u32, condition: Condition) -> String {
    let tag = match condition {
        Condition::Rest => "lo",
        Condition::Simkap => "hi",
    };
    format!("sub{subject_id:02}_{tag}.txt")
}

/// Writes recordings and ratings in the STEW layout plus a `manifest.json`
/// describing them. Returns the manifest path.
pub fn write_stew_layout(dir: &Path, recordings: &[EegRecording], ratings: &[Rating]) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| MwlError::io(dir, e))?;
    let first = recordings.first();
    recordings.par_iter().try_for_each(|r| write_matrix(&dir.join(stew_file_name(r.subject_id, r.condition)), &r.samples))?;
    write_ratings(&dir.join("ratings.txt"), ratings)?;
    let manifest = DatasetManifest {
        root: PathBuf::from("."),
        sampling_rate_hz: first.map_or(STEW_SAMPLING_RATE_HZ, |r| r.sampling_rate_hz),
        channel_names: first.map_or_else(
            || STEW_CHANNELS.iter().map(|c| c.to_string()).collect(),
            |r| r.channel_names.clone(),
        ),
        n_samples: first.map(|r| r.n_samples()),
        ratings: Some(PathBuf::from("ratings.txt")),
        recordings: recordings
            .iter()
            .map(|r| ManifestEntry {
                path: PathBuf::from(stew_file_name(r.subject_id, r.condition)),
                subject_id: r.subject_id,
                condition: r.condition,
            })
            .collect(),
    };
    let path = dir.join("manifest.json");
    manifest.save(&path)?;
    Ok(path)
}

const FM_KEY_COLUMNS: [&str; 5] = ["subject_id", "condition", "index_id", "label", "synthetic"];

pub fn save_feature_matrix(fm: &FeatureMatrix, path: &Path) -> Result<()> {
    let csv_err = |source| MwlError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_writer(create(path)?);
    let header: Vec<&str> = FM_KEY_COLUMNS.iter().copied().chain(fm.columns().iter().map(String::as_str)).collect();
    w.write_record(&header).map_err(csv_err)?;
    for i in 0..fm.n_rows() {
        let k = fm.keys()[i];
        let mut rec = vec![
            k.subject_id.to_string(),
            k.condition.to_string(),
            k.index_id.to_string(),
            fm.labels()[i].to_string(),
            fm.synthetic()[i].to_string(),
        ];
        rec.extend(fm.row(i).iter().map(f64::to_string));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| MwlError::io(path, e))
}

pub fn load_feature_matrix(path: &Path) -> Result<FeatureMatrix> {
    let csv_err = |source| MwlError::Csv { path: path.to_path_buf(), source };
    let mut r = csv::Reader::from_reader(open(path)?);
    let header = r.headers().map_err(csv_err)?.clone();
    if header.len() < FM_KEY_COLUMNS.len() || FM_KEY_COLUMNS.iter().zip(header.iter()).any(|(a, b)| *a != b) {
        return Err(MwlError::parse(path, 1, format!("header must start with {}", FM_KEY_COLUMNS.join(","))));
    }
    let columns: Vec<String> = header.iter().skip(FM_KEY_COLUMNS.len()).map(str::to_string).collect();
    let (mut keys, mut labels, mut synthetic, mut rows) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(csv_err)?;
        if rec.len() != header.len() {
            return Err(MwlError::parse(path, line, format!("{} cells, expected {}", rec.len(), header.len())));
        }
        let bad = |what: &str, cell: &str| MwlError::parse(path, line, format!("invalid {what} `{cell}`"));
        let subject_id = rec[0].parse().map_err(|_| bad("subject_id", &rec[0]))?;
        let condition: Condition = rec[1].parse().map_err(|_| bad("condition", &rec[1]))?;
        let index_id: IndexId = rec[2].parse().map_err(|_| bad("index_id", &rec[2]))?;
        labels.push(rec[3].parse::<WorkloadClass>().map_err(|_| bad("label", &rec[3]))?);
        synthetic.push(rec[4].parse::<bool>().map_err(|_| bad("synthetic", &rec[4]))?);
        keys.push(RowKey { subject_id, condition, index_id });
        let row = rec
            .iter()
            .skip(FM_KEY_COLUMNS.len())
            .map(|c| c.parse::<f64>().map_err(|_| bad("value", c)))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(FeatureMatrix::new(columns, keys, labels, synthetic, rows)?)
}

pub fn save_index_series(series: &[IndexSeries], path: &Path) -> Result<()> {
    let mut text = String::from("subject_id,condition,index_id,window,value\n");
    for s in series {
        for (w, v) in s.values.iter().enumerate() {
            text.push_str(&format!("{},{},{},{w},{v}\n", s.subject_id, s.condition, s.index_id));
        }
    }
    write_text(path, &text)
}

/// Reads the long index-series CSV; windows must be contiguous from 0.
pub fn load_index_series(path: &Path) -> Result<Vec<IndexSeries>> {
    let csv_err = |source| MwlError::Csv { path: path.to_path_buf(), source };
    let mut r = csv::Reader::from_reader(open(path)?);
    let mut map: BTreeMap<(u32, Condition, IndexId), Vec<f64>> = BTreeMap::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(csv_err)?;
        if rec.len() != 5 {
            return Err(MwlError::parse(path, line, format!("{} cells, expected 5", rec.len())));
        }
        let bad = |what: &str, cell: &str| MwlError::parse(path, line, format!("invalid {what} `{cell}`"));
        let sid: u32 = rec[0].parse().map_err(|_| bad("subject_id", &rec[0]))?;
        let cond: Condition = rec[1].parse().map_err(|_| bad("condition", &rec[1]))?;
        let id: IndexId = rec[2].parse().map_err(|_| bad("index_id", &rec[2]))?;
        let window: usize = rec[3].parse().map_err(|_| bad("window", &rec[3]))?;
        let value: f64 = rec[4].parse().map_err(|_| bad("value", &rec[4]))?;
        let values = map.entry((sid, cond, id)).or_default();
        if window != values.len() {
            return Err(MwlError::parse(path, line, format!("window {window} out of order, expected {}", values.len())));
        }
        values.push(value);
    }
    let mut out: Vec<IndexSeries> = map
        .into_iter()
        .map(|((subject_id, condition, index_id), values)| IndexSeries { index_id, subject_id, condition, values })
        .collect();
    out.sort_by_key(|s| (s.subject_id, s.condition, IndexId::ALL.iter().position(|i| *i == s.index_id)));
    Ok(out)
}

/// Magic bytes of the binary recording container.
pub const RECORDING_MAGIC: &[u8; 8] = b"MWLEEG01";

#[derive(Debug, Serialize, Deserialize)]
struct RecordingHeader {
    subject_id: u32,
    condition: Condition,
    sampling_rate_hz: f64,
    channel_names: Vec<String>,
    n_samples: usize,
}

/// Binary container: magic, `u32` LE header length, JSON header, then the
/// samples as row-major `f64` LE.
pub fn write_recording(path: &Path, rec: &EegRecording) -> Result<()> {
    let header = RecordingHeader {
        subject_id: rec.subject_id,
        condition: rec.condition,
        sampling_rate_hz: rec.sampling_rate_hz,
        channel_names: rec.channel_names.clone(),
        n_samples: rec.n_samples(),
    };
    let json = serde_json::to_vec(&header).map_err(|source| MwlError::Json { path: path.to_path_buf(), source })?;
    let mut bytes = Vec::with_capacity(12 + json.len() + 8 * rec.samples.as_slice().len());
    bytes.extend_from_slice(RECORDING_MAGIC);
    bytes.extend_from_slice(&(json.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&json);
    for v in rec.samples.as_slice() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    write_bytes(path, &bytes)
}

pub fn read_recording(path: &Path) -> Result<EegRecording> {
    let mut bytes = Vec::new();
    open(path)?.read_to_end(&mut bytes).map_err(|e| MwlError::io(path, e))?;
    let corrupt = |msg: &str| MwlError::parse(path, 0, msg.to_string());
    if bytes.len() < 12 || &bytes[..8] != RECORDING_MAGIC {
        return Err(corrupt("not an MWLEEG01 recording"));
    }
    let n = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let body = bytes.get(12..12 + n).ok_or_else(|| corrupt("truncated header"))?;
    let header: RecordingHeader =
        serde_json::from_slice(body).map_err(|source| MwlError::Json { path: path.to_path_buf(), source })?;
    let data = &bytes[12 + n..];
    let expected = header.n_samples * header.channel_names.len() * 8;
    if data.len() != expected {
        return Err(corrupt(&format!("{} data bytes, expected {expected}", data.len())));
    }
    let values: Vec<f64> = data.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    let samples = Matrix::from_vec(header.n_samples, header.channel_names.len(), values)?;
    Ok(EegRecording::new(header.subject_id, header.condition, samples, header.sampling_rate_hz, header.channel_names)?)
}

/// Writes any serializable value as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|source| MwlError::Json { path: path.to_path_buf(), source })?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|source| MwlError::Json { path: path.to_path_buf(), source })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_bytes(path, text.as_bytes())
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| MwlError::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| MwlError::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    let mut s = String::new();
    open(path)?.read_to_string(&mut s).map_err(|e| MwlError::io(path, e))?;
    Ok(s)
}

/// Opens a file, mapping "not found" to [`MwlError::MissingInput`].
pub fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            MwlError::MissingInput { path: path.to_path_buf(), hint: "file not found".into() }
        } else {
            MwlError::io(path, e)
        }
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| MwlError::io(parent, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| MwlError::io(path, e))
}
