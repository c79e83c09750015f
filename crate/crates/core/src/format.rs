//! Little-endian binary framing shared by checkpoint and score-cache files.
//!
//! Every file is `magic (4 bytes) ‖ version (u32) ‖ body ‖ SHA-256(all
//! preceding bytes)`.

use sha2::{Digest, Sha256};

use crate::{Error, Result};

pub const CHECKSUM_LEN: usize = 32;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex_string(&Sha256::digest(bytes))
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Appends fields to a byte buffer.
#[derive(Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new(magic: &[u8; 4], version: u32) -> Self {
        let mut w = Self { buf: Vec::new() };
        w.buf.extend_from_slice(magic);
        w.u32(version);
        w
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f32(&mut self, v: f32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn bytes(&mut self, v: &[u8]) {
        self.buf.extend_from_slice(v);
    }

    /// `u32` length prefix followed by UTF-8 bytes.
    pub fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }

    pub fn finish(mut self) -> Vec<u8> {
        let digest = Sha256::digest(&self.buf);
        self.buf.extend_from_slice(&digest);
        self.buf
    }
}

/// Checks framing and walks the body.
pub struct Reader<'a> {
    body: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    /// Verifies magic, checksum and version, in that order.
    pub fn open(bytes: &'a [u8], magic: &[u8; 4], version: u32) -> Result<Self> {
        if bytes.len() < 4 || &bytes[..4] != magic {
            return Err(Error::Format(format!(
                "expected magic {:?}",
                String::from_utf8_lossy(magic)
            )));
        }
        if bytes.len() < 8 + CHECKSUM_LEN {
            return Err(Error::Checksum);
        }
        let (payload, digest) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
        if Sha256::digest(payload).as_slice() != digest {
            return Err(Error::Checksum);
        }
        let found = u32::from_le_bytes(payload[4..8].try_into().unwrap());
        if found != version {
            return Err(Error::Version {
                found,
                expected: version,
            });
        }
        Ok(Self {
            body: payload,
            pos: 8,
        })
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.body.len() {
            return Err(Error::Format("unexpected end of body".into()));
        }
        let s = &self.body[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn bytes(&mut self, n: usize) -> Result<&'a [u8]> {
        self.take(n)
    }

    pub fn str(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|e| Error::Format(format!("invalid utf-8: {e}")))
    }

    pub fn f32_vec(&mut self, n: usize) -> Result<Vec<f32>> {
        let raw = self.take(n.checked_mul(4).ok_or_else(|| Error::Format("length overflow".into()))?)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub fn finish(self) -> Result<()> {
        if self.pos == self.body.len() {
            Ok(())
        } else {
            Err(Error::Format(format!(
                "{} trailing bytes",
                self.body.len() - self.pos
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn framing_errors_are_distinct() {
        let mut w = Writer::new(b"TEST", 2);
        w.u32(7);
        w.str("hello");
        let bytes = w.finish();

        let mut r = Reader::open(&bytes, b"TEST", 2).unwrap();
        assert_eq!(r.u32().unwrap(), 7);
        assert_eq!(r.str().unwrap(), "hello");
        r.finish().unwrap();

        assert!(matches!(Reader::open(&bytes, b"XXXX", 2), Err(Error::Format(_))));
        assert!(matches!(Reader::open(&bytes, b"TEST", 3), Err(Error::Version { found: 2, .. })));
        assert!(matches!(
            Reader::open(&bytes[..bytes.len() - 1], b"TEST", 2),
            Err(Error::Checksum)
        ));
    }

    #[test]
    fn sha_hex_is_lowercase_64() {
        let h = sha256_hex(b"abc");
        assert_eq!(h, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
