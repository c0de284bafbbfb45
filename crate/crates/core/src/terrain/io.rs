//! Binary and CSV grid formats.
//!
//! Binary files share one little-endian header: a six-byte magic, then
//! width, height, num_classes, num_samples as u32. Sample stacks carry f32
//! probabilities in (sample, row, col, class) order, label maps u32 labels,
//! variance maps f64 values (num_classes and num_samples are written as 1).

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{LabelMap, RiskCostMap, SampleStack, VarianceMap, INGEST_DRIFT};
use crate::error::{Error, Result};

pub const STACK_MAGIC: &[u8; 6] = b"RSEG1\0";
pub const LABEL_MAGIC: &[u8; 6] = b"RLBL1\0";
pub const VARIANCE_MAGIC: &[u8; 6] = b"RVAR1\0";

const HEADER_LEN: usize = 6 + 4 * 4;

struct Header {
    width: usize,
    height: usize,
    num_classes: usize,
    num_samples: usize,
}

fn encode_header(magic: &[u8; 6], dims: [usize; 4]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN);
    out.extend_from_slice(magic);
    for d in dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out
}

fn decode_header<'a>(bytes: &'a [u8], magic: &[u8; 6]) -> Result<(Header, &'a [u8])> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::MalformedHeader(format!(
            "file is {} bytes, header needs {HEADER_LEN}",
            bytes.len()
        )));
    }
    if &bytes[..6] != magic {
        return Err(Error::MalformedHeader(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&bytes[..6]),
            String::from_utf8_lossy(magic)
        )));
    }
    let field = |i: usize| {
        let at = 6 + 4 * i;
        u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize
    };
    Ok((
        Header {
            width: field(0),
            height: field(1),
            num_classes: field(2),
            num_samples: field(3),
        },
        &bytes[HEADER_LEN..],
    ))
}

fn payload_len(dims: &[usize], elem: usize) -> Result<usize> {
    dims.iter()
        .try_fold(elem, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::MalformedHeader(format!("dimensions {dims:?} overflow")))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn write_sample_stack(path: impl AsRef<Path>, stack: &SampleStack) -> Result<()> {
    let mut out = encode_header(
        STACK_MAGIC,
        [
            stack.width(),
            stack.height(),
            stack.num_classes(),
            stack.num_samples(),
        ],
    );
    out.reserve(stack.probs().len() * 4);
    for p in stack.probs() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    write_bytes(path.as_ref(), &out)
}

/// Reads an RSEG1 file. Pixels whose probabilities drift from one by at most
/// [`INGEST_DRIFT`] are renormalised; larger drift is an error.
pub fn read_sample_stack(path: impl AsRef<Path>) -> Result<SampleStack> {
    let bytes = read_bytes(path.as_ref())?;
    let (h, payload) = decode_header(&bytes, STACK_MAGIC)?;
    if h.num_samples < 1 || h.num_classes < 2 {
        return Err(Error::MalformedHeader(format!(
            "need num_samples >= 1 and num_classes >= 2, got S={} C={}",
            h.num_samples, h.num_classes
        )));
    }
    let expected = payload_len(&[h.width, h.height, h.num_classes, h.num_samples], 4)?;
    if payload.len() != expected {
        return Err(Error::DimensionMismatch(format!(
            "header implies {expected} payload bytes, file has {}",
            payload.len()
        )));
    }
    let probs = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    SampleStack::renormalized(
        h.width,
        h.height,
        h.num_classes,
        h.num_samples,
        probs,
        INGEST_DRIFT,
    )
}

pub fn write_label_map(path: impl AsRef<Path>, labels: &LabelMap) -> Result<()> {
    let mut out = encode_header(
        LABEL_MAGIC,
        [labels.width(), labels.height(), labels.num_classes(), 1],
    );
    for l in labels.labels() {
        out.extend_from_slice(&l.to_le_bytes());
    }
    write_bytes(path.as_ref(), &out)
}

pub fn read_label_map(path: impl AsRef<Path>) -> Result<LabelMap> {
    let bytes = read_bytes(path.as_ref())?;
    let (h, payload) = decode_header(&bytes, LABEL_MAGIC)?;
    let expected = payload_len(&[h.width, h.height], 4)?;
    if payload.len() != expected {
        return Err(Error::DimensionMismatch(format!(
            "header implies {expected} payload bytes, file has {}",
            payload.len()
        )));
    }
    let labels = payload
        .chunks_exact(4)
        .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    LabelMap::new(h.width, h.height, h.num_classes, labels)
}

pub fn write_variance_map(path: impl AsRef<Path>, variance: &VarianceMap) -> Result<()> {
    let mut out = encode_header(VARIANCE_MAGIC, [variance.width(), variance.height(), 1, 1]);
    for v in variance.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    write_bytes(path.as_ref(), &out)
}

pub fn read_variance_map(path: impl AsRef<Path>) -> Result<VarianceMap> {
    let bytes = read_bytes(path.as_ref())?;
    let (h, payload) = decode_header(&bytes, VARIANCE_MAGIC)?;
    let expected = payload_len(&[h.width, h.height], 8)?;
    if payload.len() != expected {
        return Err(Error::DimensionMismatch(format!(
            "header implies {expected} payload bytes, file has {}",
            payload.len()
        )));
    }
    let values = payload
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    VarianceMap::new(h.width, h.height, values)
}

fn write_grid<T>(
    path: &Path,
    width: usize,
    values: &[T],
    fmt: impl Fn(&T) -> String,
) -> Result<()> {
    let mut out = Vec::new();
    for row in values.chunks(width.max(1)) {
        let line: Vec<String> = row.iter().map(&fmt).collect();
        writeln!(out, "{}", line.join(",")).expect("write to Vec");
    }
    write_bytes(path, &out)
}

/// Parses a CSV grid into (width, height, values).
fn read_grid<T>(
    path: &Path,
    parse: impl Fn(&str) -> Option<T>,
) -> Result<(usize, usize, Vec<T>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut width = None;
    let mut values = Vec::new();
    let mut height = 0;
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let before = values.len();
        for cell in line.split(',') {
            let v = parse(cell.trim()).ok_or_else(|| {
                Error::parse(
                    format!("{}:{}", path.display(), n + 1),
                    format!("bad cell {cell:?}"),
                )
            })?;
            values.push(v);
        }
        let w = values.len() - before;
        match width {
            None => width = Some(w),
            Some(expected) if expected != w => {
                return Err(Error::DimensionMismatch(format!(
                    "{}:{}: row has {w} cells, expected {expected}",
                    path.display(),
                    n + 1
                )))
            }
            _ => {}
        }
        height += 1;
    }
    let width = width.ok_or_else(|| Error::parse(path.display().to_string(), "empty grid"))?;
    Ok((width, height, values))
}

pub fn write_label_map_csv(path: impl AsRef<Path>, labels: &LabelMap) -> Result<()> {
    write_grid(path.as_ref(), labels.width(), labels.labels(), |l| {
        l.to_string()
    })
}

pub fn read_label_map_csv(path: impl AsRef<Path>, num_classes: usize) -> Result<LabelMap> {
    let (w, h, labels) = read_grid(path.as_ref(), |s| s.parse::<u32>().ok())?;
    LabelMap::new(w, h, num_classes, labels)
}

pub fn write_variance_map_csv(path: impl AsRef<Path>, variance: &VarianceMap) -> Result<()> {
    write_grid(path.as_ref(), variance.width(), variance.values(), |v| {
        v.to_string()
    })
}

pub fn read_variance_map_csv(path: impl AsRef<Path>) -> Result<VarianceMap> {
    let (w, h, values) = read_grid(path.as_ref(), |s| s.parse::<f64>().ok())?;
    VarianceMap::new(w, h, values)
}

/// Cost grid with `inf` for impassable pixels.
pub fn write_cost_map_csv(path: impl AsRef<Path>, map: &RiskCostMap) -> Result<()> {
    write_grid(path.as_ref(), map.width(), map.raw(), |c| {
        if c.is_finite() {
            c.to_string()
        } else {
            "inf".to_string()
        }
    })
}

pub fn read_cost_map_csv(path: impl AsRef<Path>) -> Result<RiskCostMap> {
    let (w, h, values) = read_grid(path.as_ref(), |s| {
        if s == "inf" {
            Some(None)
        } else {
            s.parse::<f64>().ok().map(Some)
        }
    })?;
    RiskCostMap::from_costs(w, h, values)
}

