//! Columnar binary file of representation records.
//!
//! Header: magic `ACCREPR`, `u32` version, `u32` width, `u64` count. Then one
//! column at a time: sent ids, kinds, positions, regions, upos tags, labels,
//! attractor flags, and finally the `count × width` little-endian `f32`
//! matrix. Strings are `u16`-length-prefixed.

use std::io::{self, Read, Write};

use super::{Region, ReprRecord};
use crate::conllu::Number;
use crate::extraction::AgreementKind;

const MAGIC: &[u8; 7] = b"ACCREPR";
const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("not a representation file (bad magic)")]
    BadMagic,
    #[error("unsupported representation file version {0}")]
    Version(u32),
    #[error("record {index} has width {found}, expected {expected}")]
    Width { index: usize, found: usize, expected: usize },
    #[error("corrupt column: {0}")]
    Corrupt(&'static str),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u16).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

pub fn write_records<W: Write>(mut out: W, records: &[ReprRecord]) -> Result<(), StoreError> {
    let width = records.first().map_or(0, |r| r.vector.len());
    if let Some((index, r)) = records.iter().enumerate().find(|(_, r)| r.vector.len() != width) {
        return Err(StoreError::Width { index, found: r.vector.len(), expected: width });
    }
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(width as u32).to_le_bytes());
    buf.extend_from_slice(&(records.len() as u64).to_le_bytes());
    for r in records {
        put_str(&mut buf, &r.sent_id);
    }
    buf.extend(records.iter().map(|r| (r.kind == AgreementKind::SubjVerb) as u8));
    for r in records {
        buf.extend_from_slice(&(r.position as u32).to_le_bytes());
    }
    buf.extend(records.iter().map(|r| r.region.code()));
    for r in records {
        put_str(&mut buf, &r.upos);
    }
    buf.extend(records.iter().map(|r| (r.label == Number::Plur) as u8));
    buf.extend(records.iter().map(|r| r.has_attractor as u8));
    for r in records {
        for x in &r.vector {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

struct Cursor<'a> {
    data: &'a [u8],
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], StoreError> {
        if self.data.len() < n {
            return Err(StoreError::Corrupt("truncated"));
        }
        let (head, rest) = self.data.split_at(n);
        self.data = rest;
        Ok(head)
    }
    fn u16(&mut self) -> Result<u16, StoreError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2")))
    }
    fn u32(&mut self) -> Result<u32, StoreError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4")))
    }
    fn u64(&mut self) -> Result<u64, StoreError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8")))
    }
    fn string(&mut self) -> Result<String, StoreError> {
        let n = self.u16()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| StoreError::Corrupt("non-UTF-8 string"))
    }
}

pub fn read_records<R: Read>(mut input: R) -> Result<Vec<ReprRecord>, StoreError> {
    let mut data = Vec::new();
    input.read_to_end(&mut data)?;
    let mut c = Cursor { data: &data };
    if c.take(MAGIC.len()).map_err(|_| StoreError::BadMagic)? != MAGIC {
        return Err(StoreError::BadMagic);
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(StoreError::Version(version));
    }
    let width = c.u32()? as usize;
    let n = c.u64()? as usize;
    let ids = (0..n).map(|_| c.string()).collect::<Result<Vec<_>, _>>()?;
    let kinds = c.take(n)?.to_vec();
    let positions = (0..n).map(|_| c.u32().map(|p| p as usize)).collect::<Result<Vec<_>, _>>()?;
    let regions = c
        .take(n)?
        .iter()
        .map(|&b| Region::from_code(b).ok_or(StoreError::Corrupt("region code")))
        .collect::<Result<Vec<_>, _>>()?;
    let upos = (0..n).map(|_| c.string()).collect::<Result<Vec<_>, _>>()?;
    let labels = c.take(n)?.to_vec();
    let attractors = c.take(n)?.to_vec();
    let matrix = c.take(n * width * 4)?;
    if !c.data.is_empty() {
        return Err(StoreError::Corrupt("trailing bytes"));
    }
    let mut out = Vec::with_capacity(n);
    for (i, (sent_id, upos)) in ids.into_iter().zip(upos).enumerate() {
        let row = &matrix[i * width * 4..(i + 1) * width * 4];
        out.push(ReprRecord {
            sent_id,
            kind: if kinds[i] == 1 { AgreementKind::SubjVerb } else { AgreementKind::ObjPp },
            position: positions[i],
            region: regions[i],
            upos,
            vector: row.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().expect("4"))).collect(),
            label: if labels[i] == 1 { Number::Plur } else { Number::Sing },
            has_attractor: attractors[i] == 1,
        });
    }
    Ok(out)
}
