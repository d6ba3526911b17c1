//! File formats: binary PGM for displayed holograms, PFM or CSV for
//! intensity maps. Every writer goes through a temporary file in the target
//! directory that is renamed into place, so a failed write leaves nothing
//! behind.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{HoloError, Result};
use crate::field::ComplexField;
use crate::quantize::{DeviceModel, DisplayedHologram};

/// Writes `path` atomically: `fill` writes into a temporary sibling which is
/// renamed over `path` only if it succeeds.
pub fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = std::io::BufWriter::new(tmp.as_file_mut());
        fill(&mut w)?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| HoloError::Io(e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(|e| HoloError::Parse(e.to_string()))?;
        writeln!(w)?;
        Ok(())
    })
}

/// Greyscale netpbm image, 8 bit when `maxval < 256`, else 16 bit big-endian.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u32,
    pub data: Vec<u32>,
}

impl Pgm {
    pub fn encode(&self, w: &mut dyn Write) -> Result<()> {
        if self.maxval == 0 || self.maxval > 65535 {
            return Err(HoloError::Config(format!("PGM maxval must be in 1..=65535, got {}", self.maxval)));
        }
        if self.data.len() != self.width * self.height {
            return Err(HoloError::Shape("PGM data does not match its dimensions".into()));
        }
        write!(w, "P5\n{} {}\n{}\n", self.width, self.height, self.maxval)?;
        if self.maxval < 256 {
            let bytes: Vec<u8> = self.data.iter().map(|&v| v as u8).collect();
            w.write_all(&bytes)?;
        } else {
            let bytes: Vec<u8> = self.data.iter().flat_map(|&v| (v as u16).to_be_bytes()).collect();
            w.write_all(&bytes)?;
        }
        Ok(())
    }

    pub fn decode(r: &mut dyn BufRead) -> Result<Pgm> {
        let magic = header_token(r)?;
        if magic != "P5" {
            return Err(HoloError::Parse(format!("expected binary PGM (P5), found '{magic}'")));
        }
        let width = header_number(r)?;
        let height = header_number(r)?;
        let maxval = header_number(r)? as u32;
        if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
            return Err(HoloError::Parse(format!("bad PGM header {width}x{height} maxval {maxval}")));
        }
        let n = width * height;
        let data: Vec<u32> = if maxval < 256 {
            let mut buf = vec![0u8; n];
            r.read_exact(&mut buf)?;
            buf.into_iter().map(u32::from).collect()
        } else {
            let mut buf = vec![0u8; 2 * n];
            r.read_exact(&mut buf)?;
            buf.chunks_exact(2).map(|c| u32::from(u16::from_be_bytes([c[0], c[1]]))).collect()
        };
        if let Some(v) = data.iter().find(|&&v| v > maxval) {
            return Err(HoloError::Parse(format!("PGM sample {v} exceeds maxval {maxval}")));
        }
        Ok(Pgm { width, height, maxval, data })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, |w| self.encode(w))
    }

    pub fn read(path: &Path) -> Result<Pgm> {
        Self::decode(&mut BufReader::new(fs::File::open(path)?))
    }
}

/// Reads one whitespace-delimited header token, skipping `#` comments. The
/// single whitespace byte after the token is consumed.
fn header_token(r: &mut dyn BufRead) -> Result<String> {
    let mut tok = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        if r.read(&mut byte)? == 0 {
            if tok.is_empty() {
                return Err(HoloError::Parse("unexpected end of header".into()));
            }
            break;
        }
        let b = byte[0];
        if b == b'#' && tok.is_empty() {
            let mut line = Vec::new();
            r.read_until(b'\n', &mut line)?;
            continue;
        }
        if b.is_ascii_whitespace() {
            if tok.is_empty() {
                continue;
            }
            break;
        }
        tok.push(b);
    }
    String::from_utf8(tok).map_err(|_| HoloError::Parse("header is not ASCII".into()))
}

fn header_number(r: &mut dyn BufRead) -> Result<usize> {
    let t = header_token(r)?;
    t.parse().map_err(|_| HoloError::Parse(format!("bad header number '{t}'")))
}

/// DMD states as 0/255; PSLM level indices verbatim with `maxval = m - 1`.
pub fn hologram_to_pgm(d: &DisplayedHologram) -> Pgm {
    let (maxval, data) = match d.device() {
        DeviceModel::Dmd => (255, d.values().iter().map(|&s| s * 255).collect()),
        DeviceModel::Pslm { levels } => (levels - 1, d.values().to_vec()),
    };
    Pgm { width: d.width(), height: d.height(), maxval, data }
}

pub fn hologram_from_pgm(pgm: &Pgm, device: DeviceModel) -> Result<DisplayedHologram> {
    let values = match device {
        DeviceModel::Dmd => pgm
            .data
            .iter()
            .map(|&v| match v {
                0 => Ok(0),
                v if v == pgm.maxval => Ok(1),
                v => Err(HoloError::Parse(format!("DMD bitmap holds intermediate value {v}"))),
            })
            .collect::<Result<Vec<_>>>()?,
        DeviceModel::Pslm { levels } => {
            if pgm.maxval + 1 != levels {
                return Err(HoloError::Parse(format!(
                    "level map has maxval {} but the device has {levels} levels",
                    pgm.maxval
                )));
            }
            pgm.data.clone()
        }
    };
    DisplayedHologram::new(device, pgm.width, pgm.height, values)
}

/// Single-channel float image, row-major from the top row.
#[derive(Clone, Debug, PartialEq)]
pub struct IntensityMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f32>,
}

impl IntensityMap {
    pub fn from_field(field: &ComplexField) -> Self {
        IntensityMap {
            width: field.width(),
            height: field.height(),
            values: field.values().iter().map(|v| v.norm_sqr() as f32).collect(),
        }
    }

    /// Portable float map (`Pf`, little-endian, bottom row first).
    pub fn encode_pfm(&self, w: &mut dyn Write) -> Result<()> {
        write!(w, "Pf\n{} {}\n-1.0\n", self.width, self.height)?;
        let mut bytes = Vec::with_capacity(4 * self.values.len());
        for row in self.values.chunks_exact(self.width).rev() {
            for v in row {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        w.write_all(&bytes)?;
        Ok(())
    }

    pub fn decode_pfm(r: &mut dyn BufRead) -> Result<Self> {
        let magic = header_token(r)?;
        if magic != "Pf" {
            return Err(HoloError::Parse(format!("expected greyscale PFM (Pf), found '{magic}'")));
        }
        let width = header_number(r)?;
        let height = header_number(r)?;
        let scale: f32 = header_token(r)?.parse().map_err(|_| HoloError::Parse("bad PFM scale".into()))?;
        if width == 0 || height == 0 || scale == 0.0 {
            return Err(HoloError::Parse("bad PFM header".into()));
        }
        let mut bytes = vec![0u8; 4 * width * height];
        r.read_exact(&mut bytes)?;
        let little = scale < 0.0;
        let floats: Vec<f32> = bytes
            .chunks_exact(4)
            .map(|c| {
                let b = [c[0], c[1], c[2], c[3]];
                if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) }
            })
            .collect();
        let values = floats.chunks_exact(width).rev().flatten().copied().collect();
        Ok(IntensityMap { width, height, values })
    }

    /// One CSV row per image row.
    pub fn encode_csv(&self, w: &mut dyn Write) -> Result<()> {
        let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        for row in self.values.chunks_exact(self.width) {
            out.write_record(row.iter().map(|v| v.to_string())).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn decode_csv(r: &mut dyn Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(r);
        let mut values = Vec::new();
        let mut width = 0;
        let mut height = 0;
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            if height == 0 {
                width = rec.len();
            }
            for field in rec.iter() {
                values.push(field.trim().parse::<f32>().map_err(|_| HoloError::Parse(format!("bad float '{field}'")))?);
            }
            height += 1;
        }
        if width == 0 || values.len() != width * height {
            return Err(HoloError::Parse("intensity CSV is empty or ragged".into()));
        }
        Ok(IntensityMap { width, height, values })
    }

    pub fn write(&self, path: &Path, format: IntensityFormat) -> Result<()> {
        write_atomic(path, |w| match format {
            IntensityFormat::Pfm => self.encode_pfm(w),
            IntensityFormat::Csv => self.encode_csv(w),
        })
    }

    pub fn read(path: &Path, format: IntensityFormat) -> Result<Self> {
        let mut r = BufReader::new(fs::File::open(path)?);
        match format {
            IntensityFormat::Pfm => Self::decode_pfm(&mut r),
            IntensityFormat::Csv => Self::decode_csv(&mut r),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntensityFormat {
    #[default]
    Pfm,
    Csv,
}

impl IntensityFormat {
    pub fn extension(self) -> &'static str {
        match self {
            IntensityFormat::Pfm => "pfm",
            IntensityFormat::Csv => "csv",
        }
    }
}

pub(crate) fn csv_err(e: csv::Error) -> HoloError {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => HoloError::Io(io),
            other => HoloError::Parse(format!("{other:?}")),
        }
    } else {
        HoloError::Parse(e.to_string())
    }
}
