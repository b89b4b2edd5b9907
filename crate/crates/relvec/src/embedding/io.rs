//! Readers and writers for the word2vec text and binary formats.
//!
//! Both formats start with an ASCII header line `<vocab_size> <dim>`. Text
//! entries are `<token> <f1> ... <fK>` lines; binary entries are the token
//! bytes terminated by a single space followed by K little-endian 32-bit
//! floats, with an optional trailing newline per entry.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};

use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{EmbeddingError, EmbeddingStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingFormat {
    Word2VecText,
    Word2VecBinary,
}

impl EmbeddingFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "text" | "word2vec-text" => Some(EmbeddingFormat::Word2VecText),
            "binary" | "word2vec-binary" => Some(EmbeddingFormat::Word2VecBinary),
            _ => None,
        }
    }
}

pub fn load_embeddings(path: &Path, format: EmbeddingFormat) -> Result<EmbeddingStore, EmbeddingError> {
    let file = File::open(path).map_err(|source| EmbeddingError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = BufReader::new(file);
    match format {
        EmbeddingFormat::Word2VecText => read_text(path, &mut reader),
        EmbeddingFormat::Word2VecBinary => read_binary(path, &mut reader),
    }
}

pub fn save_embeddings(
    store: &EmbeddingStore,
    path: &Path,
    format: EmbeddingFormat,
) -> Result<(), EmbeddingError> {
    let file = File::create(path).map_err(|source| EmbeddingError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut writer = BufWriter::new(file);
    let res = match format {
        EmbeddingFormat::Word2VecText => write_text(store, &mut writer),
        EmbeddingFormat::Word2VecBinary => write_binary(store, &mut writer),
    };
    res.and_then(|()| writer.flush()).map_err(|source| EmbeddingError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_header(path: &Path, line: &str) -> Result<(usize, usize), EmbeddingError> {
    let header_err = |detail: &str| EmbeddingError::MalformedHeader {
        path: path.display().to_string(),
        detail: detail.to_string(),
    };
    let mut parts = line.split_whitespace();
    let vocab = parts
        .next()
        .ok_or_else(|| header_err("missing vocabulary size"))?
        .parse::<usize>()
        .map_err(|_| header_err("vocabulary size is not an integer"))?;
    let dim = parts
        .next()
        .ok_or_else(|| header_err("missing dimension"))?
        .parse::<usize>()
        .map_err(|_| header_err("dimension is not an integer"))?;
    if parts.next().is_some() {
        return Err(header_err("trailing fields after '<vocab> <dim>'"));
    }
    if dim == 0 {
        return Err(header_err("dimension must be at least 1"));
    }
    Ok((vocab, dim))
}

fn read_text<R: BufRead>(path: &Path, reader: &mut R) -> Result<EmbeddingStore, EmbeddingError> {
    let io_err = |source| EmbeddingError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut header = String::new();
    reader.read_line(&mut header).map_err(io_err)?;
    let (vocab, dim) = parse_header(path, header.trim_end())?;

    let mut rows: Vec<(String, Vec<f64>)> = Vec::with_capacity(vocab);
    for (row, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        if rows.len() == vocab {
            return Err(EmbeddingError::MalformedRow {
                path: path.display().to_string(),
                row,
                detail: format!("more rows than the declared vocabulary size {vocab}"),
            });
        }
        let mut fields = line.split_ascii_whitespace();
        let token = fields
            .next()
            .ok_or_else(|| EmbeddingError::MalformedRow {
                path: path.display().to_string(),
                row,
                detail: "missing token".to_string(),
            })?
            .to_string();
        let mut values = Vec::with_capacity(dim);
        for field in fields {
            // Promote from 32-bit: file values are single precision even in
            // the text serialization.
            let v = field
                .parse::<f32>()
                .map_err(|_| EmbeddingError::MalformedRow {
                    path: path.display().to_string(),
                    row,
                    detail: format!("unparseable value {field:?}"),
                })?;
            values.push(v as f64);
        }
        if values.len() != dim {
            return Err(EmbeddingError::DimensionMismatch {
                row,
                token,
                expected: dim,
                found: values.len(),
            });
        }
        rows.push((token, values));
    }
    if rows.len() != vocab {
        return Err(EmbeddingError::MalformedHeader {
            path: path.display().to_string(),
            detail: format!("header declares {vocab} rows, file contains {}", rows.len()),
        });
    }
    EmbeddingStore::from_rows(dim, rows)
}

fn read_binary<R: BufRead>(path: &Path, reader: &mut R) -> Result<EmbeddingStore, EmbeddingError> {
    let io_err = |source| EmbeddingError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut header = Vec::new();
    reader.read_until(b'\n', &mut header).map_err(io_err)?;
    let header = String::from_utf8(header).map_err(|_| EmbeddingError::MalformedHeader {
        path: path.display().to_string(),
        detail: "header is not valid UTF-8".to_string(),
    })?;
    let (vocab, dim) = parse_header(path, header.trim_end())?;

    let mut rows: Vec<(String, Vec<f64>)> = Vec::with_capacity(vocab);
    for row in 0..vocab {
        let mut token_bytes = Vec::new();
        reader.read_until(b' ', &mut token_bytes).map_err(io_err)?;
        if token_bytes.last() == Some(&b' ') {
            token_bytes.pop();
        } else {
            return Err(EmbeddingError::MalformedRow {
                path: path.display().to_string(),
                row,
                detail: "unexpected end of file while reading token".to_string(),
            });
        }
        // Tolerate a newline terminating the previous entry.
        while token_bytes.first() == Some(&b'\n') || token_bytes.first() == Some(&b'\r') {
            token_bytes.remove(0);
        }
        let token = String::from_utf8(token_bytes).map_err(|_| EmbeddingError::MalformedRow {
            path: path.display().to_string(),
            row,
            detail: "token is not valid UTF-8".to_string(),
        })?;
        let mut values = Vec::with_capacity(dim);
        for _ in 0..dim {
            let v = reader
                .read_f32::<LittleEndian>()
                .map_err(|_| EmbeddingError::MalformedRow {
                    path: path.display().to_string(),
                    row,
                    detail: "unexpected end of file while reading values".to_string(),
                })?;
            values.push(v as f64);
        }
        rows.push((token, values));
    }
    let mut trailing = Vec::new();
    reader.read_to_end(&mut trailing).map_err(io_err)?;
    if trailing.iter().any(|b| *b != b'\n' && *b != b'\r') {
        return Err(EmbeddingError::MalformedHeader {
            path: path.display().to_string(),
            detail: format!("file contains data beyond the declared {vocab} rows"),
        });
    }
    EmbeddingStore::from_rows(dim, rows)
}

fn write_text<W: Write>(store: &EmbeddingStore, writer: &mut W) -> std::io::Result<()> {
    writeln!(writer, "{} {}", store.len(), store.dim())?;
    for i in 0..store.len() {
        write!(writer, "{}", store.token(i))?;
        for v in store.row(i) {
            // Values entered the store as f32, so the narrowing is lossless
            // and the shortest f32 representation round-trips.
            write!(writer, " {}", *v as f32)?;
        }
        writeln!(writer)?;
    }
    Ok(())
}

fn write_binary<W: Write>(store: &EmbeddingStore, writer: &mut W) -> std::io::Result<()> {
    writeln!(writer, "{} {}", store.len(), store.dim())?;
    for i in 0..store.len() {
        write!(writer, "{} ", store.token(i))?;
        for v in store.row(i) {
            writer.write_f32::<LittleEndian>(*v as f32)?;
        }
        writer.write_all(b"\n")?;
    }
    Ok(())
}
