//! Fixed-length bit blocks with XOR.
//!
//! Bit `j` lives in byte `j / 8` at position `j % 8` (LSB first). Bits past
//! `len` in the last byte are kept zero so that equality is bytewise.

use std::ops::BitXorAssign;

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitBlock {
    len: usize,
    bytes: Vec<u8>,
}

impl BitBlock {
    pub fn zeros(len: usize) -> Self {
        BitBlock {
            len,
            bytes: vec![0; len.div_ceil(8)],
        }
    }

    /// Takes the first `len` bits of `bytes`.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Self {
        let mut block = BitBlock {
            len,
            bytes: bytes[..len.div_ceil(8)].to_vec(),
        };
        block.clear_tail();
        block
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn get(&self, idx: usize) -> bool {
        assert!(idx < self.len, "bit index {idx} out of range {}", self.len);
        self.bytes[idx / 8] >> (idx % 8) & 1 == 1
    }

    pub fn set(&mut self, idx: usize, value: bool) {
        assert!(idx < self.len, "bit index {idx} out of range {}", self.len);
        let mask = 1u8 << (idx % 8);
        if value {
            self.bytes[idx / 8] |= mask;
        } else {
            self.bytes[idx / 8] &= !mask;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.bytes.iter().all(|&b| b == 0)
    }

    /// Copy of bits `[start, start + len)`.
    pub fn slice(&self, start: usize, len: usize) -> BitBlock {
        assert!(start + len <= self.len);
        if start.is_multiple_of(8) {
            return BitBlock::from_bytes(&self.bytes[start / 8..], len);
        }
        let mut out = BitBlock::zeros(len);
        for j in 0..len {
            out.set(j, self.get(start + j));
        }
        out
    }

    pub fn append(&mut self, other: &BitBlock) {
        if self.len.is_multiple_of(8) {
            self.bytes.extend_from_slice(&other.bytes);
            self.len += other.len;
            return;
        }
        let start = self.len;
        self.len += other.len;
        self.bytes.resize(self.len.div_ceil(8), 0);
        for j in 0..other.len {
            if other.get(j) {
                self.set(start + j, true);
            }
        }
    }

    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a BitBlock>) -> BitBlock {
        let mut out = BitBlock::default();
        for p in parts {
            out.append(p);
        }
        out
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 8;
        if rem != 0 {
            if let Some(last) = self.bytes.last_mut() {
                *last &= (1u8 << rem) - 1;
            }
        }
    }
}

impl BitXorAssign<&BitBlock> for BitBlock {
    fn bitxor_assign(&mut self, rhs: &BitBlock) {
        assert_eq!(self.len, rhs.len, "XOR of blocks with different lengths");
        for (a, b) in self.bytes.iter_mut().zip(&rhs.bytes) {
            *a ^= b;
        }
    }
}

impl std::fmt::Debug for BitBlock {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s: String = (0..self.len).map(|j| if self.get(j) { '1' } else { '0' }).collect();
        write!(f, "BitBlock({s})")
    }
}
