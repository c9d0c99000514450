//! Binary extension fields GF(2^8) and GF(2^16) via log/antilog tables.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Field {
    bits: u32,
    exp: Vec<u16>,
    log: Vec<u16>,
}

impl Field {
    /// GF(256) with the primitive polynomial `x^8 + x^4 + x^3 + x^2 + 1`.
    pub fn gf256() -> Self {
        Field::with_poly(8, 0x11d)
    }

    /// GF(65536) with the primitive polynomial `x^16 + x^12 + x^3 + x + 1`.
    pub fn gf65536() -> Self {
        Field::with_poly(16, 0x1100b)
    }

    /// Smallest supported field with at least `elements` distinct values.
    pub fn for_size(elements: usize) -> Result<Self> {
        if elements <= 256 {
            Ok(Field::gf256())
        } else if elements <= 65536 {
            Ok(Field::gf65536())
        } else {
            Err(Error::Erasure(format!(
                "no supported field has {elements} distinct elements"
            )))
        }
    }

    fn with_poly(bits: u32, poly: u32) -> Self {
        let size = 1usize << bits;
        let order = size - 1;
        let mut exp = vec![0u16; 2 * order];
        let mut log = vec![0u16; size];
        let mut x: u32 = 1;
        for (i, slot) in exp.iter_mut().take(order).enumerate() {
            *slot = x as u16;
            log[x as usize] = i as u16;
            x <<= 1;
            if x & (1 << bits) != 0 {
                x ^= poly;
            }
        }
        debug_assert_eq!(x, 1, "polynomial is not primitive");
        for i in order..2 * order {
            exp[i] = exp[i - order];
        }
        Field { bits, exp, log }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Number of elements.
    pub fn size(&self) -> usize {
        1 << self.bits
    }

    fn order(&self) -> usize {
        self.size() - 1
    }

    pub fn mul(&self, a: u16, b: u16) -> u16 {
        if a == 0 || b == 0 {
            return 0;
        }
        self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize]
    }

    pub fn inv(&self, a: u16) -> u16 {
        assert!(a != 0, "zero has no inverse");
        self.exp[(self.order() - self.log[a as usize] as usize) % self.order()]
    }

    pub fn div(&self, a: u16, b: u16) -> u16 {
        self.mul(a, self.inv(b))
    }

    /// Inverts a square matrix by Gauss-Jordan elimination.
    pub fn invert(&self, matrix: &[Vec<u16>]) -> Option<Vec<Vec<u16>>> {
        let n = matrix.len();
        let mut a: Vec<Vec<u16>> = matrix.to_vec();
        let mut inv: Vec<Vec<u16>> = (0..n).map(|r| (0..n).map(|c| u16::from(r == c)).collect()).collect();
        for col in 0..n {
            let pivot = (col..n).find(|&r| a[r][col] != 0)?;
            a.swap(col, pivot);
            inv.swap(col, pivot);
            let scale = self.inv(a[col][col]);
            for c in 0..n {
                a[col][c] = self.mul(a[col][c], scale);
                inv[col][c] = self.mul(inv[col][c], scale);
            }
            for r in 0..n {
                if r != col && a[r][col] != 0 {
                    let f = a[r][col];
                    for c in 0..n {
                        a[r][c] ^= self.mul(f, a[col][c]);
                        inv[r][c] ^= self.mul(f, inv[col][c]);
                    }
                }
            }
        }
        Some(inv)
    }
}
