//! CSV / JSON artifacts.
//!
//! Every CSV starts with one `#` comment line carrying the seed and config
//! hash, followed by a header row. Files are staged in a hidden directory
//! and moved into place only when the whole command succeeds.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};

use esprit_precoder_core::design::{phase_increment_profile, DesignTrace};
use esprit_precoder_core::{AngleGrid, ArrayConfig, CMatrix, Precoder, C64};

/// Collects output files in a staging directory under `out_dir`.
pub struct OutputSet {
    out_dir: PathBuf,
    staging: PathBuf,
    files: Vec<String>,
    stamp: String,
}

impl OutputSet {
    pub fn create(out_dir: &Path, seed: u64, config_hash: &str) -> Result<Self> {
        fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
        let staging = out_dir.join(format!(".staging-{}", std::process::id()));
        if staging.exists() {
            fs::remove_dir_all(&staging)?;
        }
        fs::create_dir(&staging).with_context(|| format!("creating {}", staging.display()))?;
        Ok(OutputSet {
            out_dir: out_dir.to_path_buf(),
            staging,
            files: Vec::new(),
            stamp: format!("# seed={seed} config_sha256={config_hash}"),
        })
    }

    fn register(&mut self, name: &str) -> Result<PathBuf> {
        ensure!(
            !name.contains(['/', '\\']) && !name.starts_with('.'),
            "bad output file name {name:?}"
        );
        ensure!(!self.files.iter().any(|f| f == name), "output {name} written twice");
        self.files.push(name.to_string());
        Ok(self.staging.join(name))
    }

    /// Write a CSV with the stamp line and `header`.
    pub fn csv<I, R>(&mut self, name: &str, header: &[String], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let path = self.register(name)?;
        let mut file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        writeln!(file, "{}", self.stamp)?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(header)?;
        for row in rows {
            let row: Vec<String> = row.into_iter().collect();
            ensure!(
                row.len() == header.len(),
                "{name}: row has {} fields, header {}",
                row.len(),
                header.len()
            );
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn json(&mut self, name: &str, value: &serde_json::Value) -> Result<()> {
        let path = self.register(name)?;
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }

    /// Move staged files into `out_dir` and return their final paths.
    pub fn commit(self) -> Result<Vec<PathBuf>> {
        let mut out = Vec::with_capacity(self.files.len());
        for name in &self.files {
            let dest = self.out_dir.join(name);
            fs::rename(self.staging.join(name), &dest).with_context(|| format!("moving {}", dest.display()))?;
            out.push(dest);
        }
        fs::remove_dir_all(&self.staging)?;
        Ok(out)
    }

    /// Remove everything staged so far.
    pub fn discard(self) {
        let _ = fs::remove_dir_all(&self.staging);
    }
}

/// Shortest round-trip decimal representation.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn precoder_header(m: usize) -> Vec<String> {
    let mut h = vec!["antenna".to_string()];
    for b in 0..m {
        h.push(format!("beam{b}_re"));
        h.push(format!("beam{b}_im"));
    }
    h
}

pub fn precoder_rows(f: &Precoder) -> Vec<Vec<String>> {
    let m = f.matrix();
    (0..m.nrows())
        .map(|k| {
            let mut row = vec![k.to_string()];
            for b in 0..m.ncols() {
                row.push(num(m[(k, b)].re));
                row.push(num(m[(k, b)].im));
            }
            row
        })
        .collect()
}

/// Parse a precoder CSV written by [`precoder_rows`].
pub fn read_precoder(path: &Path) -> Result<Precoder> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let header = r.headers()?.clone();
    let cols = header.len();
    if cols < 3 || (cols - 1) % 2 != 0 || &header[0] != "antenna" {
        bail!("{}: not a precoder CSV", path.display());
    }
    let m = (cols - 1) / 2;
    let mut entries = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        ensure!(
            rec.len() == cols,
            "{}: row {k} has {} fields",
            path.display(),
            rec.len()
        );
        let mut row = Vec::with_capacity(m);
        for b in 0..m {
            let re: f64 = rec[1 + 2 * b].parse().with_context(|| format!("row {k}"))?;
            let im: f64 = rec[2 + 2 * b].parse().with_context(|| format!("row {k}"))?;
            row.push(C64::new(re, im));
        }
        entries.push(row);
    }
    ensure!(!entries.is_empty(), "{}: no rows", path.display());
    let n = entries.len();
    Ok(Precoder::new(CMatrix::from_fn(n, m, |k, b| entries[k][b])))
}

pub fn beampattern_table(arr: &ArrayConfig, f: &Precoder, grid: &AngleGrid) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let bp = arr.beampattern(f, grid)?;
    let mut header = vec!["angle_deg".to_string()];
    header.extend((0..bp.ncols()).map(|b| format!("beam{b}_mag")));
    let rows = grid
        .angles()
        .iter()
        .enumerate()
        .map(|(g, theta)| {
            let mut row = vec![num(*theta)];
            row.extend((0..bp.ncols()).map(|b| num(bp[(g, b)].norm())));
            row
        })
        .collect();
    Ok((header, rows))
}

pub fn phase_table(f: &Precoder) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let m = f.num_beams();
    let profiles = (0..m)
        .map(|b| phase_increment_profile(f.matrix(), b))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut header = vec!["element".to_string()];
    header.extend((0..m).map(|b| format!("beam{b}_rad")));
    let rows = (0..f.num_antennas().saturating_sub(1))
        .map(|k| {
            let mut row = vec![k.to_string()];
            row.extend(profiles.iter().map(|p| num(p[k])));
            row
        })
        .collect();
    Ok((header, rows))
}

pub fn trace_table(trace: &DesignTrace) -> (Vec<String>, Vec<Vec<String>>) {
    let header = ["iteration", "synthesis_error", "sip_error", "objective"]
        .map(String::from)
        .to_vec();
    let rows = trace
        .records
        .iter()
        .map(|r| {
            vec![
                r.iteration.to_string(),
                num(r.synthesis_error),
                num(r.sip_error),
                num(r.objective),
            ]
        })
        .collect();
    (header, rows)
}
