//! Systematic Reed-Solomon erasure code with a Cauchy parity matrix.
//!
//! Coded block `j < m` is message block `j`; block `m + r` is
//! `sum_c C[r][c] * message[c]` with `C[r][c] = 1 / (x_r + y_c)`,
//! `x_r = m + r`, `y_c = c`, each row then scaled so its first entry is 1.
//! Every `m x m` submatrix of `[I; C]` is invertible, so any `m` blocks
//! recover the message; with `m = 1` the code is plain repetition.

use crate::bits::BitBlock;
use crate::error::{Error, Result};
use crate::gf::Field;

#[derive(Clone, Debug)]
pub struct ErasureCode {
    m: usize,
    n: usize,
    field: Field,
    parity: Vec<Vec<u16>>,
}

impl ErasureCode {
    /// GF(256) when `n <= 255`, GF(65536) otherwise.
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if m == 0 || m > n {
            return Err(Error::Erasure(format!("need 1 <= m <= n, got m={m}, n={n}")));
        }
        let field = if n <= 255 {
            Field::gf256()
        } else {
            Field::for_size(n + 1)?
        };
        let parity = (0..n - m)
            .map(|r| {
                let row: Vec<u16> = (0..m).map(|c| field.inv(((m + r) ^ c) as u16)).collect();
                let scale = field.inv(row[0]);
                row.iter().map(|&x| field.mul(x, scale)).collect()
            })
            .collect();
        Ok(ErasureCode { m, n, field, parity })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Bits per field symbol; block lengths must be multiples of this.
    pub fn symbol_bits(&self) -> usize {
        self.field.bits() as usize
    }

    fn generator_row(&self, j: usize) -> Vec<u16> {
        if j < self.m {
            (0..self.m).map(|c| u16::from(c == j)).collect()
        } else {
            self.parity[j - self.m].clone()
        }
    }

    fn symbols(&self, block: &BitBlock) -> Vec<u16> {
        let bytes = block.as_bytes();
        match self.symbol_bits() {
            8 => bytes.iter().map(|&b| u16::from(b)).collect(),
            _ => bytes.chunks(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect(),
        }
    }

    fn block(&self, symbols: &[u16], len: usize) -> BitBlock {
        let bytes: Vec<u8> = match self.symbol_bits() {
            8 => symbols.iter().map(|&s| s as u8).collect(),
            _ => symbols.iter().flat_map(|s| s.to_le_bytes()).collect(),
        };
        BitBlock::from_bytes(&bytes, len)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if !len.is_multiple_of(self.symbol_bits()) {
            return Err(Error::Erasure(format!(
                "block length {len} is not a multiple of the {}-bit symbol",
                self.symbol_bits()
            )));
        }
        Ok(())
    }

    fn combine(&self, rows: &[Vec<u16>], inputs: &[Vec<u16>], len: usize) -> Vec<BitBlock> {
        let symbols = inputs.first().map_or(0, Vec::len);
        rows.iter()
            .map(|row| {
                let mut out = vec![0u16; symbols];
                for (coef, input) in row.iter().zip(inputs) {
                    if *coef == 0 {
                        continue;
                    }
                    for (o, &x) in out.iter_mut().zip(input) {
                        *o ^= self.field.mul(*coef, x);
                    }
                }
                self.block(&out, len)
            })
            .collect()
    }

    /// `m` equal-length blocks in, `n` blocks out; the first `m` are the input.
    pub fn encode(&self, message: &[BitBlock]) -> Result<Vec<BitBlock>> {
        if message.len() != self.m {
            return Err(Error::Erasure(format!(
                "expected {} message blocks, got {}",
                self.m,
                message.len()
            )));
        }
        let len = message[0].len();
        if message.iter().any(|b| b.len() != len) {
            return Err(Error::Erasure("message blocks differ in length".into()));
        }
        self.check_len(len)?;
        let inputs: Vec<Vec<u16>> = message.iter().map(|b| self.symbols(b)).collect();
        let mut out = message.to_vec();
        out.extend(self.combine(&self.parity, &inputs, len));
        Ok(out)
    }

    /// Recovers the message from any `m` distinct `(index, block)` pairs.
    pub fn decode(&self, received: &[(usize, BitBlock)]) -> Result<Vec<BitBlock>> {
        let mut chosen: Vec<&(usize, BitBlock)> = Vec::with_capacity(self.m);
        let mut seen = vec![false; self.n];
        for item in received {
            if item.0 >= self.n {
                return Err(Error::Erasure(format!("block index {} >= n = {}", item.0, self.n)));
            }
            if !std::mem::replace(&mut seen[item.0], true) {
                chosen.push(item);
            }
            if chosen.len() == self.m {
                break;
            }
        }
        if chosen.len() < self.m {
            return Err(Error::Erasure(format!(
                "need {} distinct blocks, got {}",
                self.m,
                chosen.len()
            )));
        }
        let len = chosen[0].1.len();
        if chosen.iter().any(|(_, b)| b.len() != len) {
            return Err(Error::Erasure("received blocks differ in length".into()));
        }
        self.check_len(len)?;
        if chosen.iter().all(|(j, _)| *j < self.m) {
            let mut out = vec![BitBlock::zeros(len); self.m];
            for (j, b) in chosen {
                out[*j] = b.clone();
            }
            return Ok(out);
        }
        let rows: Vec<Vec<u16>> = chosen.iter().map(|(j, _)| self.generator_row(*j)).collect();
        let inverse = self
            .field
            .invert(&rows)
            .ok_or_else(|| Error::Erasure("singular generator submatrix".into()))?;
        let inputs: Vec<Vec<u16>> = chosen.iter().map(|(_, b)| self.symbols(b)).collect();
        Ok(self.combine(&inverse, &inputs, len))
    }
}
