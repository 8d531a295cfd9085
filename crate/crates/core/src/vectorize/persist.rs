//! Embedding files: a CSV (`article_id,x0,..`) and a binary form made of a
//! one-line JSON header followed by little-endian row-major `f64` values.

use std::io::{BufRead, Read, Write};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{Embedding, UmapParams};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingHeader {
    pub shape: [usize; 2],
    pub seed: u64,
    pub params: UmapParams,
    pub article_ids: Vec<String>,
}

pub fn write_embedding_csv<W: Write>(emb: &Embedding, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["article_id".to_string()];
    header.extend((0..emb.dim()).map(|d| format!("x{d}")));
    w.write_record(&header)?;
    for (id, row) in emb.article_ids.iter().zip(emb.coordinates.rows()) {
        let mut rec = vec![id.clone()];
        rec.extend(row.iter().map(|x| x.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<embedding csv>", e))?;
    Ok(())
}

pub fn read_embedding_csv<R: Read>(input: R) -> Result<Embedding> {
    let mut r = csv::Reader::from_reader(input);
    let dim = r.headers()?.len().saturating_sub(1);
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        ids.push(rec.get(0).unwrap_or_default().to_string());
        for field in rec.iter().skip(1) {
            values.push(field.parse::<f64>().map_err(|e| Error::Record {
                index: i + 1,
                reason: e.to_string(),
            })?);
        }
    }
    let coordinates = Array2::from_shape_vec((ids.len(), dim), values)
        .map_err(|e| Error::Invalid(e.to_string()))?;
    Ok(Embedding {
        article_ids: ids,
        coordinates,
    })
}

pub fn write_embedding_bin<W: Write>(emb: &Embedding, params: &UmapParams, mut out: W) -> Result<()> {
    let header = EmbeddingHeader {
        shape: [emb.len(), emb.dim()],
        seed: params.seed,
        params: params.clone(),
        article_ids: emb.article_ids.clone(),
    };
    let io = |e| Error::io("<embedding bin>", e);
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n").map_err(io)?;
    for x in emb.coordinates.iter() {
        out.write_all(&x.to_le_bytes()).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_embedding_bin<R: BufRead>(mut input: R) -> Result<(EmbeddingHeader, Embedding)> {
    let io = |e| Error::io("<embedding bin>", e);
    let mut line = String::new();
    input.read_line(&mut line).map_err(io)?;
    let header: EmbeddingHeader = serde_json::from_str(&line)?;
    let [n, d] = header.shape;
    let mut buf = vec![0u8; n * d * 8];
    input.read_exact(&mut buf).map_err(io)?;
    let values = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let coordinates =
        Array2::from_shape_vec((n, d), values).map_err(|e| Error::Invalid(e.to_string()))?;
    let emb = Embedding {
        article_ids: header.article_ids.clone(),
        coordinates,
    };
    Ok((header, emb))
}
