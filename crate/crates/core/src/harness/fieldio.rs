//! Binary field files and 8-bit previews.
//!
//! A field record is the 4-byte magic `MASF`, then little-endian `u32`
//! version (1), height, width and channels, then `H·W·C` little-endian `f64`
//! values in row-major `(h, w, c)` order. A file may hold several records
//! back to back; dataset files use this to store one point per record.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{Field, Shape};

pub const MAGIC: &[u8; 4] = b"MASF";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 20;

pub fn encode_field(field: &Field, out: &mut Vec<u8>) {
    let s = field.shape();
    out.reserve(HEADER_LEN + 8 * s.len());
    out.extend_from_slice(MAGIC);
    for v in [VERSION, s.height as u32, s.width as u32, s.channels as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in field.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

/// Decodes every record in `bytes`. `origin` is only used in error messages.
pub fn decode_fields(bytes: &[u8], origin: &Path) -> Result<Vec<Field>> {
    let bad = |reason: String| Error::Format {
        path: origin.to_path_buf(),
        reason,
    };
    let mut fields = Vec::new();
    let mut rest = bytes;
    while !rest.is_empty() {
        if rest.len() < HEADER_LEN {
            return Err(bad(format!("truncated header ({} bytes)", rest.len())));
        }
        if &rest[..4] != MAGIC {
            return Err(bad("missing MASF magic".into()));
        }
        let word = |i: usize| u32::from_le_bytes(rest[4 + 4 * i..8 + 4 * i].try_into().unwrap());
        let version = word(0);
        if version != VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let shape = Shape::new(word(1) as usize, word(2) as usize, word(3) as usize)
            .map_err(|e| bad(e.to_string()))?;
        let body = 8 * shape.len();
        if rest.len() < HEADER_LEN + body {
            return Err(bad(format!(
                "record of shape {shape} needs {body} data bytes, {} left",
                rest.len() - HEADER_LEN
            )));
        }
        let data = rest[HEADER_LEN..HEADER_LEN + body]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        fields.push(Field::new(shape, data).map_err(|e| bad(e.to_string()))?);
        rest = &rest[HEADER_LEN + body..];
    }
    if fields.is_empty() {
        return Err(bad("file holds no field records".into()));
    }
    Ok(fields)
}

pub fn save_fields(path: &Path, fields: &[Field]) -> Result<()> {
    let mut bytes = Vec::new();
    for f in fields {
        encode_field(f, &mut bytes);
    }
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    w.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn save_field(path: &Path, field: &Field) -> Result<()> {
    save_fields(path, std::slice::from_ref(field))
}

pub fn load_fields(path: &Path) -> Result<Vec<Field>> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    decode_fields(&bytes, path)
}

/// Loads a file that must hold exactly one record.
pub fn load_field(path: &Path) -> Result<Field> {
    let mut fields = load_fields(path)?;
    if fields.len() != 1 {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: format!("expected one field record, found {}", fields.len()),
        });
    }
    Ok(fields.pop().unwrap())
}

/// Maps `[−1, 1]` affinely onto `[0, 255]`, clamping outside values.
pub fn to_byte(v: f64) -> u8 {
    ((v + 1.0) * 127.5).round().clamp(0.0, 255.0) as u8
}

/// Binary PGM for one channel, PPM for three; other channel counts preview channel 0.
pub fn encode_preview(field: &Field) -> Vec<u8> {
    let s = field.shape();
    let rgb = s.channels == 3;
    let mut out = format!(
        "{}\n{} {}\n255\n",
        if rgb { "P6" } else { "P5" },
        s.width,
        s.height
    )
    .into_bytes();
    for h in 0..s.height {
        for w in 0..s.width {
            if rgb {
                for c in 0..3 {
                    out.push(to_byte(field.get(h, w, c)));
                }
            } else {
                out.push(to_byte(field.get(h, w, 0)));
            }
        }
    }
    out
}

/// File extension matching [`encode_preview`]'s output.
pub fn preview_extension(shape: Shape) -> &'static str {
    if shape.channels == 3 {
        "ppm"
    } else {
        "pgm"
    }
}

pub fn save_preview(path: &Path, field: &Field) -> Result<()> {
    std::fs::write(path, encode_preview(field)).map_err(|e| Error::io(path, e))
}
