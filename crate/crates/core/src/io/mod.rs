//! On-disk formats: EEGR raw recordings, SEGB feature datasets, STTC
//! model checkpoints, and CSV ingestion.
//!
//! All numeric payloads are little-endian; floats are IEEE-754 single
//! precision. Headers are fixed-width and validated on read, and every
//! writer goes through write-temp-then-rename so partial files never
//! land under the target name.

use crate::error::{Error, Result};
use crate::model::{ModelConfig, ModelParams};
use crate::signal::{FeatureSegment, RawRecording};
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

const EEGR_MAGIC: &[u8; 4] = b"EEGR";
const SEGB_MAGIC: &[u8; 4] = b"SEGB";
const STTC_MAGIC: &[u8; 4] = b"STTC";
const FORMAT_VERSION: u32 = 1;

// ── byte-level helpers ───────────────────────────────────────────────

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8], what: &'static str) -> Self {
        Reader { bytes, pos: 0, what }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Format(format!(
                "{} file truncated at byte {}",
                self.what, self.pos
            )));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn magic(&mut self, expect: &[u8; 4]) -> Result<()> {
        let got = self.take(4)?;
        if got != expect {
            return Err(Error::Format(format!(
                "{} file has magic {:?}, expected {:?}",
                self.what,
                String::from_utf8_lossy(got),
                String::from_utf8_lossy(expect)
            )));
        }
        Ok(())
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn version(&mut self) -> Result<()> {
        let v = self.u32()?;
        if v != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "{} file has format version {v}, this build reads {FORMAT_VERSION}",
                self.what
            )));
        }
        Ok(())
    }

    fn f32_slice(&mut self, count: usize) -> Result<Vec<f32>> {
        let raw = self.take(count * 4)?;
        Ok(raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Format(format!(
                "{} file has {} trailing bytes",
                self.what,
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn push_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn push_f32(buf: &mut Vec<u8>, v: f32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Write bytes to a sibling temp file, then rename over the target.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let n = TMP_COUNTER.fetch_add(1, Ordering::Relaxed);
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp.{}.{n}", std::process::id()));
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

// ── EEGR: one raw recording per file ─────────────────────────────────

pub fn eegr_bytes(rec: &RawRecording) -> Vec<u8> {
    let mut buf = Vec::with_capacity(32 + rec.data.len() * 4);
    buf.extend_from_slice(EEGR_MAGIC);
    push_u32(&mut buf, FORMAT_VERSION);
    push_u32(&mut buf, rec.channels as u32);
    push_u32(&mut buf, rec.samples as u32);
    push_f32(&mut buf, rec.sample_rate as f32);
    push_u32(&mut buf, rec.trial_id);
    push_u32(&mut buf, rec.label as u32);
    push_f32(&mut buf, rec.intensity);
    for &v in &rec.data {
        push_f32(&mut buf, v);
    }
    buf
}

pub fn write_eegr(path: &Path, rec: &RawRecording) -> Result<()> {
    atomic_write(path, &eegr_bytes(rec))
}

pub fn read_eegr(path: &Path) -> Result<RawRecording> {
    let bytes = std::fs::read(path)?;
    let mut r = Reader::new(&bytes, "EEGR");
    r.magic(EEGR_MAGIC)?;
    r.version()?;
    let channels = r.u32()? as usize;
    let samples = r.u32()? as usize;
    let sample_rate = r.f32()? as f64;
    let trial_id = r.u32()?;
    let label = r.u32()? as usize;
    let intensity = r.f32()?;
    let data = r.f32_slice(channels * samples)?;
    r.finish()?;
    let mut rec = RawRecording::new(sample_rate, channels, samples, data, trial_id, label)?;
    rec.intensity = intensity;
    Ok(rec)
}

// ── SEGB: a dataset of feature segments ──────────────────────────────

/// A SEGB file in memory: uniform segment shape plus the class count the
/// features were labelled against.
#[derive(Debug, Clone)]
pub struct SegbDataset {
    pub windows: usize,
    pub channels: usize,
    pub bands: usize,
    pub classes: usize,
    pub segments: Vec<FeatureSegment>,
}

impl SegbDataset {
    pub fn new(classes: usize, segments: Vec<FeatureSegment>) -> Result<Self> {
        let first = segments
            .first()
            .ok_or_else(|| Error::Config("a SEGB dataset needs at least one segment".into()))?;
        let (windows, channels, bands) = (first.windows, first.channels, first.bands);
        for (i, seg) in segments.iter().enumerate() {
            if (seg.windows, seg.channels, seg.bands) != (windows, channels, bands) {
                return Err(Error::Shape(format!(
                    "segment {i} has shape {}×{}×{}, expected {windows}×{channels}×{bands}",
                    seg.windows, seg.channels, seg.bands
                )));
            }
            if seg.label >= classes {
                return Err(Error::Config(format!(
                    "segment {i} has label {} outside {classes} classes",
                    seg.label
                )));
            }
        }
        Ok(SegbDataset { windows, channels, bands, classes, segments })
    }
}

pub fn segb_bytes(ds: &SegbDataset) -> Vec<u8> {
    let per = ds.windows * ds.channels * ds.bands;
    let mut buf = Vec::with_capacity(28 + ds.segments.len() * (12 + per * 4));
    buf.extend_from_slice(SEGB_MAGIC);
    push_u32(&mut buf, FORMAT_VERSION);
    push_u32(&mut buf, ds.windows as u32);
    push_u32(&mut buf, ds.channels as u32);
    push_u32(&mut buf, ds.bands as u32);
    push_u32(&mut buf, ds.classes as u32);
    push_u32(&mut buf, ds.segments.len() as u32);
    for seg in &ds.segments {
        push_u32(&mut buf, seg.trial_id);
        push_u32(&mut buf, seg.label as u32);
        push_f32(&mut buf, seg.intensity);
        for &v in &seg.features {
            push_f32(&mut buf, v);
        }
    }
    buf
}

pub fn write_segb(path: &Path, ds: &SegbDataset) -> Result<()> {
    atomic_write(path, &segb_bytes(ds))
}

pub fn read_segb(path: &Path) -> Result<SegbDataset> {
    let bytes = std::fs::read(path)?;
    let mut r = Reader::new(&bytes, "SEGB");
    r.magic(SEGB_MAGIC)?;
    r.version()?;
    let windows = r.u32()? as usize;
    let channels = r.u32()? as usize;
    let bands = r.u32()? as usize;
    let classes = r.u32()? as usize;
    let count = r.u32()? as usize;
    if windows == 0 || channels == 0 || bands == 0 || classes < 2 {
        return Err(Error::Format("SEGB header has degenerate dimensions".into()));
    }
    let per = windows * channels * bands;
    let mut segments = Vec::with_capacity(count);
    for i in 0..count {
        let trial_id = r.u32()?;
        let label = r.u32()? as usize;
        let intensity = r.f32()?;
        if label >= classes {
            return Err(Error::Format(format!(
                "segment {i} has label {label} outside {classes} classes"
            )));
        }
        let features = r.f32_slice(per)?;
        segments.push(FeatureSegment {
            windows,
            channels,
            bands,
            features,
            label,
            trial_id,
            intensity,
        });
    }
    r.finish()?;
    Ok(SegbDataset { windows, channels, bands, classes, segments })
}

// ── STTC: model checkpoints ──────────────────────────────────────────

pub fn checkpoint_bytes(cfg: &ModelConfig, params: &ModelParams) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(STTC_MAGIC);
    push_u32(&mut buf, FORMAT_VERSION);
    for v in [
        cfg.channels,
        cfg.windows,
        cfg.bands,
        cfg.spatial_dim,
        cfg.temporal_dim,
        cfg.hidden_dim,
        cfg.classes,
        cfg.spatial_heads,
        cfg.temporal_heads,
        cfg.encoder_layers,
        cfg.attention_window,
    ] {
        push_u32(&mut buf, v as u32);
    }
    params.visit(&mut |_, t| {
        for &v in t.data() {
            push_f32(&mut buf, v);
        }
    });
    buf
}

pub fn write_checkpoint(path: &Path, cfg: &ModelConfig, params: &ModelParams) -> Result<()> {
    atomic_write(path, &checkpoint_bytes(cfg, params))
}

pub fn read_checkpoint(path: &Path) -> Result<(ModelConfig, ModelParams)> {
    let bytes = std::fs::read(path)?;
    let mut r = Reader::new(&bytes, "STTC");
    r.magic(STTC_MAGIC)?;
    r.version()?;
    let mut dims = [0usize; 11];
    for d in dims.iter_mut() {
        *d = r.u32()? as usize;
    }
    let cfg = ModelConfig {
        channels: dims[0],
        windows: dims[1],
        bands: dims[2],
        spatial_dim: dims[3],
        temporal_dim: dims[4],
        hidden_dim: dims[5],
        classes: dims[6],
        spatial_heads: dims[7],
        temporal_heads: dims[8],
        encoder_layers: dims[9],
        attention_window: dims[10],
    };
    cfg.validate()?;
    let mut params = ModelParams::init(&cfg, 0)?;
    let mut read_err = None;
    params.visit_mut(&mut |t| {
        if read_err.is_some() {
            return;
        }
        match r.f32_slice(t.numel()) {
            Ok(vals) => t.data_mut().copy_from_slice(&vals),
            Err(e) => read_err = Some(e),
        }
    });
    if let Some(e) = read_err {
        return Err(e);
    }
    r.finish()?;
    Ok((cfg, params))
}

// ── CSV ingestion ────────────────────────────────────────────────────

/// Sidecar metadata for a CSV recording.
#[derive(Debug, Clone)]
pub struct CsvMetadata {
    pub sample_rate: f64,
    pub trial_id: u32,
    pub label: usize,
    pub intensity: f32,
}

/// Parse a `time,ch0,ch1,...` CSV body into a recording. Errors carry
/// 1-based line numbers.
pub fn parse_recording_csv(text: &str, meta: &CsvMetadata) -> Result<RawRecording> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Format("CSV is empty".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.first() != Some(&"time") || cols.len() < 2 {
        return Err(Error::Format(
            "line 1: header must be \"time,ch0,ch1,...\"".into(),
        ));
    }
    for (i, col) in cols[1..].iter().enumerate() {
        let expected = format!("ch{i}");
        if *col != expected {
            return Err(Error::Format(format!(
                "line 1: column {} is \"{col}\", expected \"{expected}\"",
                i + 2
            )));
        }
    }
    let channels = cols.len() - 1;
    let mut columns: Vec<Vec<f32>> = vec![Vec::new(); channels];
    let mut rows = 0usize;
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != channels + 1 {
            return Err(Error::Format(format!(
                "line {}: {} fields, expected {}",
                idx + 1,
                fields.len(),
                channels + 1
            )));
        }
        for (c, field) in fields[1..].iter().enumerate() {
            let v: f32 = field.parse().map_err(|_| {
                Error::Format(format!("line {}: \"{field}\" is not a number", idx + 1))
            })?;
            if !v.is_finite() {
                return Err(Error::Format(format!("line {}: non-finite sample", idx + 1)));
            }
            columns[c].push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Format("CSV has a header but no samples".into()));
    }
    let mut data = Vec::with_capacity(channels * rows);
    for col in &columns {
        data.extend_from_slice(col);
    }
    let mut rec =
        RawRecording::new(meta.sample_rate, channels, rows, data, meta.trial_id, meta.label)?;
    rec.intensity = meta.intensity;
    Ok(rec)
}

/// Render a recording as `time,ch0,ch1,...` CSV. Values use the shortest
/// representation that round-trips the underlying single-precision bits.
pub fn recording_to_csv(rec: &RawRecording) -> String {
    let mut out = String::from("time");
    for c in 0..rec.channels {
        out.push_str(&format!(",ch{c}"));
    }
    out.push('\n');
    for t in 0..rec.samples {
        out.push_str(&format!("{}", t as f64 / rec.sample_rate));
        for c in 0..rec.channels {
            out.push_str(&format!(",{}", rec.data[c * rec.samples + t]));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests;
