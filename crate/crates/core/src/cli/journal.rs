//! On-disk scan journal: one line per finished job, checksummed, so an
//! interrupted run resumes without recomputing and without trusting a
//! half-written tail line.

use crate::error::{Error, Result};
use crate::rates::{JobOutcome, RunResult};
use sha2::{Digest, Sha256};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Mutex;

/// Append-only journal bound to one config fingerprint. Successful cells
/// carry the exact probability bits, so a resumed table is identical to
/// an uninterrupted one; failures are recorded for diagnostics only and
/// get retried on resume.
pub struct Journal {
    file: Mutex<File>,
    fingerprint: String,
}

fn checksum(fingerprint: &str, payload: &str) -> String {
    let mut h = Sha256::new();
    h.update(fingerprint.as_bytes());
    h.update(b" ");
    h.update(payload.as_bytes());
    format!("{:x}", h.finalize())[..8].to_string()
}

fn tau_field(tau_index: Option<usize>) -> String {
    match tau_index {
        Some(j) => j.to_string(),
        None => "base".into(),
    }
}

impl Journal {
    /// Start a fresh journal, truncating whatever was there.
    pub fn create(path: &Path, fingerprint: &str) -> Result<Self> {
        let mut file = File::create(path)?;
        writeln!(file, "journal {fingerprint}")?;
        Ok(Self { file: Mutex::new(file), fingerprint: fingerprint.to_string() })
    }

    /// Reopen for appending after [`Journal::load`].
    pub fn append(path: &Path, fingerprint: &str) -> Result<Self> {
        let file = OpenOptions::new().append(true).open(path)?;
        Ok(Self { file: Mutex::new(file), fingerprint: fingerprint.to_string() })
    }

    /// Record one finished job. Writing is serialized and flushed per
    /// line; a write failure is reported but does not stop the scan.
    pub fn record(&self, job: &JobOutcome) {
        let payload = match &job.outcome {
            Ok(r) => format!(
                "cell {} {} {:016x} {}",
                job.e0_index,
                tau_field(job.tau_index),
                r.probability.to_bits(),
                u8::from(r.flagged),
            ),
            Err(msg) => format!(
                "fail {} {} {}",
                job.e0_index,
                tau_field(job.tau_index),
                msg.replace(['\n', '\r'], " "),
            ),
        };
        let sum = checksum(&self.fingerprint, &payload);
        let mut f = self.file.lock().expect("journal writer poisoned");
        if let Err(e) = writeln!(f, "{payload} {sum}").and_then(|()| f.sync_data()) {
            eprintln!("journal write failed: {e}");
        }
    }

    /// Read back the cells finished by a previous run. The header must
    /// carry the active fingerprint; a journal from a different
    /// configuration is refused rather than silently mixed in. Lines that
    /// fail their checksum (a torn final write) are skipped.
    pub fn load(path: &Path, fingerprint: &str) -> Result<Vec<JobOutcome>> {
        let reader = BufReader::new(File::open(path)?);
        let mut lines = reader.lines();
        let header = match lines.next() {
            Some(l) => l?,
            None => return Err(Error::Config("resume journal is empty".into())),
        };
        if header != format!("journal {fingerprint}") {
            return Err(Error::Config(
                "resume journal was written by a different configuration".into(),
            ));
        }
        let mut out = Vec::new();
        for line in lines {
            let line = line?;
            let Some((payload, sum)) = line.rsplit_once(' ') else { continue };
            if checksum(fingerprint, payload) != sum {
                continue;
            }
            let mut parts = payload.split(' ');
            if parts.next() != Some("cell") {
                continue;
            }
            let (Some(row), Some(col), Some(bits), Some(flag), None) =
                (parts.next(), parts.next(), parts.next(), parts.next(), parts.next())
            else {
                continue;
            };
            let Ok(e0_index) = row.parse::<usize>() else { continue };
            let tau_index = if col == "base" {
                None
            } else if let Ok(j) = col.parse::<usize>() {
                Some(j)
            } else {
                continue;
            };
            let Ok(bits) = u64::from_str_radix(bits, 16) else { continue };
            out.push(JobOutcome {
                e0_index,
                tau_index,
                outcome: Ok(RunResult {
                    probability: f64::from_bits(bits),
                    flagged: flag == "1",
                }),
            });
        }
        Ok(out)
    }
}
