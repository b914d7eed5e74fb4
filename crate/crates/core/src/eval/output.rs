//! Sweep rows, CSV rendering and the resume journal.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const RESULT_HEADER: &str =
    "sweep_value,method,mean_rate_bits,std_rate,mean_gamma_f,mean_gamma_w,mean_runtime_s,trials_ok,trials_failed";

pub const TIMING_HEADER: &str = "n_t,method,mean_s,std_s";

/// Aggregate over the trials of one (sweep point, method) pair. Means are `None`
/// when every trial failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sweep_value: f64,
    pub method: String,
    pub mean_rate_bits: Option<f64>,
    pub std_rate: Option<f64>,
    pub mean_gamma_f: Option<f64>,
    pub mean_gamma_w: Option<f64>,
    pub mean_runtime_s: Option<f64>,
    pub trials_ok: usize,
    pub trials_failed: usize,
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ResultRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.sweep_value,
            self.method,
            cell(self.mean_rate_bits),
            cell(self.std_rate),
            cell(self.mean_gamma_f),
            cell(self.mean_gamma_w),
            cell(self.mean_runtime_s),
            self.trials_ok,
            self.trials_failed
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub n_t: usize,
    pub method: String,
    pub mean_s: f64,
    pub std_s: f64,
}

impl TimingRow {
    pub fn csv(&self) -> String {
        format!("{},{},{},{}", self.n_t, self.method, self.mean_s, self.std_s)
    }
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

/// `# config_sha256=<hash>`, the header, then one line per row.
pub fn render_csv(hash: &str, header: &str, lines: impl IntoIterator<Item = String>) -> String {
    let mut s = format!("# config_sha256={hash}\n{header}\n");
    for l in lines {
        s.push_str(&l);
        s.push('\n');
    }
    s
}

/// Writes via a temporary file so a crash never leaves a truncated CSV behind.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum JournalLine<R> {
    Header { config_sha256: String },
    Point { point: usize, rows: Vec<R> },
}

/// Append-only record of finished sweep points, keyed by the config hash.
pub struct Journal<R> {
    path: PathBuf,
    pub done: Vec<(usize, Vec<R>)>,
}

impl<R: Serialize + for<'de> Deserialize<'de>> Journal<R> {
    /// Reopens a journal written for `hash`; a missing, foreign or unreadable one is restarted.
    pub fn open(path: &Path, hash: &str) -> Result<Self> {
        let mut done = Vec::new();
        let mut reusable = false;
        if let Ok(f) = File::open(path) {
            let mut lines = BufReader::new(f).lines();
            if let Some(Ok(first)) = lines.next() {
                if let Ok(JournalLine::<R>::Header { config_sha256 }) = serde_json::from_str(&first) {
                    reusable = config_sha256 == hash;
                }
            }
            if reusable {
                for line in lines {
                    // A torn final line from an interrupted run is dropped.
                    match line.ok().and_then(|l| serde_json::from_str::<JournalLine<R>>(&l).ok()) {
                        Some(JournalLine::Point { point, rows }) => done.push((point, rows)),
                        _ => break,
                    }
                }
            }
        }
        let journal = Self { path: path.to_path_buf(), done };
        if reusable {
            // Rewrite so that a dropped torn line does not precede new entries.
            journal.rewrite(hash)?;
        } else {
            let header: JournalLine<R> = JournalLine::Header { config_sha256: hash.to_string() };
            fs::write(path, format!("{}\n", serde_json::to_string(&header)?))?;
        }
        Ok(journal)
    }

    fn rewrite(&self, hash: &str) -> Result<()> {
        let mut s = serde_json::to_string(&JournalLine::<R>::Header { config_sha256: hash.to_string() })?;
        s.push('\n');
        for (point, rows) in &self.done {
            s.push_str(&serde_json::to_string(&JournalLine::Point { point: *point, rows: rows.iter().collect::<Vec<&R>>() })?);
            s.push('\n');
        }
        write_atomic(&self.path, &s)
    }

    pub fn rows_for(&self, point: usize) -> Option<&Vec<R>> {
        self.done.iter().find(|(p, _)| *p == point).map(|(_, r)| r)
    }

    pub fn record(&mut self, point: usize, rows: Vec<R>) -> Result<()> {
        let line = serde_json::to_string(&JournalLine::Point { point, rows: rows.iter().collect::<Vec<&R>>() })?;
        let mut f = OpenOptions::new().append(true).open(&self.path)?;
        writeln!(f, "{line}")?;
        self.done.push((point, rows));
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v: f64) -> ResultRow {
        ResultRow {
            sweep_value: v,
            method: "Best+MO".into(),
            mean_rate_bits: Some(1.5),
            std_rate: Some(0.25),
            mean_gamma_f: None,
            mean_gamma_w: None,
            mean_runtime_s: Some(0.0),
            trials_ok: 2,
            trials_failed: 0,
        }
    }

    #[test]
    fn csv_leaves_failed_means_empty() {
        let mut r = row(-10.0);
        r.mean_rate_bits = None;
        r.std_rate = None;
        r.trials_ok = 0;
        r.trials_failed = 3;
        assert_eq!(r.csv(), "-10,Best+MO,,,,,0,0,3");
        let text = render_csv("ab", RESULT_HEADER, [row(0.5).csv()]);
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("# config_sha256=ab\nsweep_value,"));
    }

    #[test]
    fn mean_std_matches_hand_values() {
        assert_eq!(mean_std(&[]), None);
        let (m, s) = mean_std(&[1.0, 3.0]).unwrap();
        assert_eq!((m, s), (2.0, 1.0));
    }

    #[test]
    fn journal_resumes_only_for_the_same_hash_and_drops_torn_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snr.journal.jsonl");
        let mut j = Journal::<ResultRow>::open(&path, "h1").unwrap();
        j.record(0, vec![row(0.0)]).unwrap();
        j.record(1, vec![row(1.0)]).unwrap();
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        write!(f, "{{\"point\":2,\"rows\":[{{\"sweep").unwrap();
        drop(f);

        let mut again = Journal::<ResultRow>::open(&path, "h1").unwrap();
        assert_eq!(again.done.len(), 2);
        assert_eq!(again.rows_for(1).unwrap()[0], row(1.0));
        again.record(2, vec![row(2.0)]).unwrap();
        assert_eq!(Journal::<ResultRow>::open(&path, "h1").unwrap().done.len(), 3);

        assert!(Journal::<ResultRow>::open(&path, "other").unwrap().done.is_empty());
        assert!(Journal::<ResultRow>::open(&path, "h1").unwrap().done.is_empty());
    }
}
