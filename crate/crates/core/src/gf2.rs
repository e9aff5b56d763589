//! Packed GF(2) vectors and matrices.
//!
//! Bit `i` of a vector lives in word `i / 64` at bit position `i % 64`, so
//! index 0 is the least significant bit of word 0. Bits past `len` are kept
//! zero. The hex form follows the same order: hex digit `j` carries bits
//! `4j..4j+4` with bit `4j` as its least significant bit, and the digits are
//! written lowest first, so the most significant digit comes last.

use std::fmt;
use std::ops::{BitXor, BitXorAssign};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

const WORD: usize = 64;

fn words_for(len: usize) -> usize {
    len.div_ceil(WORD)
}

/// Mask of the valid bits in the last word of a `len`-bit vector.
fn tail_mask(len: usize) -> u64 {
    match len % WORD {
        0 => u64::MAX,
        k => (1u64 << k) - 1,
    }
}

/// `(1 << bits) - 1` without overflow at 64.
pub(crate) fn low_mask(bits: usize) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "HexVector", into = "HexVector")]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        BitVector {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut v = BitVector::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            v.set(i, b);
        }
        v
    }

    /// The low `len` bits of `word`; `len` is at most 64.
    pub fn from_word(word: u64, len: usize) -> Self {
        assert!(len <= WORD, "from_word takes at most 64 bits");
        let mut v = BitVector::zeros(len);
        if len > 0 {
            v.words[0] = word & low_mask(len);
        }
        v
    }

    /// Parses a string of `0`/`1` characters, first character = bit 0.
    /// Spaces and underscores are ignored.
    pub fn parse_bits(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '_')
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!("bad bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BitVector::from_bits(&bits))
    }

    /// Indicator vector of `indices` in a vector of length `len`.
    pub fn indicator(len: usize, indices: &[usize]) -> Result<Self> {
        let mut v = BitVector::zeros(len);
        for &i in indices {
            if i >= len {
                return Err(Error::invalid(format!("index {i} out of range for length {len}")));
            }
            v.set(i, true);
        }
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let bit = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= bit;
        } else {
            self.words[i / WORD] &= !bit;
        }
    }

    /// The vector as a single word; `None` if it is longer than 64 bits.
    pub fn to_word(&self) -> Option<u64> {
        match self.words.len() {
            0 => Some(0),
            1 => Some(self.words[0]),
            _ => None,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let tz = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * WORD + tz)
            })
        })
    }

    /// Number of set bits.
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// GF(2) inner product.
    pub fn dot(&self, other: &BitVector) -> Result<bool> {
        check_dim("inner product", self.len, other.len)?;
        let ones: u32 = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum();
        Ok(ones & 1 == 1)
    }

    pub fn try_xor(&self, other: &BitVector) -> Result<BitVector> {
        check_dim("xor", self.len, other.len)?;
        let mut out = self.clone();
        out.xor_words(&other.words);
        Ok(out)
    }

    fn xor_words(&mut self, words: &[u64]) {
        for (a, b) in self.words.iter_mut().zip(words) {
            *a ^= b;
        }
    }

    /// Bits `start..start + len` as a new vector.
    pub fn slice(&self, start: usize, len: usize) -> Result<BitVector> {
        if start + len > self.len {
            return Err(Error::invalid(format!(
                "slice {start}..{} out of range for length {}",
                start + len,
                self.len
            )));
        }
        let mut out = BitVector::zeros(len);
        if start % WORD == 0 {
            let first = start / WORD;
            let nw = out.words.len();
            out.words.copy_from_slice(&self.words[first..first + nw]);
            if let Some(last) = out.words.last_mut() {
                *last &= tail_mask(len);
            }
        } else {
            for i in 0..len {
                out.set(i, self.get(start + i));
            }
        }
        Ok(out)
    }

    pub fn to_bit_string(&self) -> String {
        self.iter().map(|b| if b { '1' } else { '0' }).collect()
    }

    pub fn to_hex(&self) -> String {
        const DIGITS: &[u8; 16] = b"0123456789abcdef";
        (0..self.len.div_ceil(4))
            .map(|j| {
                let nibble = (self.words[(4 * j) / WORD] >> ((4 * j) % WORD)) & 0xf;
                DIGITS[nibble as usize] as char
            })
            .collect()
    }

    pub fn from_hex(hex: &str, len: usize) -> Result<Self> {
        let digits = len.div_ceil(4);
        if hex.len() != digits {
            return Err(Error::Parse(format!(
                "hex string {hex:?} has {} digits, a {len}-bit vector needs {digits}",
                hex.len()
            )));
        }
        let mut v = BitVector::zeros(len);
        for (j, c) in hex.chars().enumerate() {
            let nibble = c
                .to_digit(16)
                .ok_or_else(|| Error::Parse(format!("bad hex digit {c:?}")))? as u64;
            v.words[(4 * j) / WORD] |= nibble << ((4 * j) % WORD);
        }
        if let Some(&last) = v.words.last() {
            if last & !tail_mask(len) != 0 {
                return Err(Error::Parse(format!(
                    "hex string {hex:?} sets bits beyond length {len}"
                )));
            }
        }
        Ok(v)
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({})", self.to_bit_string())
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bit_string())
    }
}

/// Panics on length mismatch; use [`BitVector::try_xor`] for checked XOR.
impl BitXor for &BitVector {
    type Output = BitVector;

    fn bitxor(self, rhs: &BitVector) -> BitVector {
        self.try_xor(rhs).expect("xor of vectors with different lengths")
    }
}

impl BitXorAssign<&BitVector> for BitVector {
    fn bitxor_assign(&mut self, rhs: &BitVector) {
        assert_eq!(self.len, rhs.len, "xor of vectors with different lengths");
        self.xor_words(&rhs.words);
    }
}

#[derive(Serialize, Deserialize)]
struct HexVector {
    len: usize,
    hex: String,
}

impl TryFrom<HexVector> for BitVector {
    type Error = Error;

    fn try_from(h: HexVector) -> Result<Self> {
        BitVector::from_hex(&h.hex, h.len)
    }
}

impl From<BitVector> for HexVector {
    fn from(v: BitVector) -> Self {
        HexVector {
            len: v.len,
            hex: v.to_hex(),
        }
    }
}

/// Row-major GF(2) matrix.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "HexMatrix", into = "HexMatrix")]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BitVector>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        BitMatrix {
            rows,
            cols,
            data: vec![BitVector::zeros(cols); rows],
        }
    }

    pub fn identity(k: usize) -> Self {
        let mut m = BitMatrix::zeros(k, k);
        for i in 0..k {
            m.data[i].set(i, true);
        }
        m
    }

    /// Builds a matrix from rows of equal length. An empty row list is a
    /// `0 x cols` matrix.
    pub fn from_rows(rows: Vec<BitVector>, cols: usize) -> Result<Self> {
        for row in &rows {
            check_dim("matrix row", cols, row.len())?;
        }
        Ok(BitMatrix {
            rows: rows.len(),
            cols,
            data: rows,
        })
    }

    /// Rows given as `0`/`1` strings.
    pub fn parse_rows(rows: &[&str]) -> Result<Self> {
        let parsed = rows
            .iter()
            .map(|r| BitVector::parse_bits(r))
            .collect::<Result<Vec<_>>>()?;
        let cols = parsed.first().map_or(0, BitVector::len);
        BitMatrix::from_rows(parsed, cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &BitVector {
        &self.data[i]
    }

    pub fn row_vectors(&self) -> &[BitVector] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[i].get(j)
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        self.data[i].set(j, value)
    }

    /// `G y`: bit `i` of the result is the inner product of row `i` with `y`.
    pub fn matvec(&self, y: &BitVector) -> Result<BitVector> {
        check_dim("matrix-vector product", self.cols, y.len())?;
        let mut out = BitVector::zeros(self.rows);
        for (i, row) in self.data.iter().enumerate() {
            let ones: u32 = row
                .words
                .iter()
                .zip(&y.words)
                .map(|(a, b)| (a & b).count_ones())
                .sum();
            if ones & 1 == 1 {
                out.set(i, true);
            }
        }
        Ok(out)
    }

    /// `v G`: the GF(2) sum of the rows selected by `v`.
    pub fn vecmat(&self, v: &BitVector) -> Result<BitVector> {
        check_dim("vector-matrix product", self.rows, v.len())?;
        let mut out = BitVector::zeros(self.cols);
        for i in v.iter_ones() {
            out.xor_words(&self.data[i].words);
        }
        Ok(out)
    }

    /// Sum of the rows indexed by `subset`. Rejects an empty subset,
    /// out-of-range indices and repeated indices.
    pub fn row_combination(&self, subset: &[usize]) -> Result<BitVector> {
        if subset.is_empty() {
            return Err(Error::invalid("row combination needs a nonempty index set"));
        }
        let mut seen = BitVector::zeros(self.rows);
        let mut out = BitVector::zeros(self.cols);
        for &i in subset {
            if i >= self.rows {
                return Err(Error::invalid(format!(
                    "row index {i} out of range for {} rows",
                    self.rows
                )));
            }
            if seen.get(i) {
                return Err(Error::invalid(format!("row index {i} repeated")));
            }
            seen.set(i, true);
            out.xor_words(&self.data[i].words);
        }
        Ok(out)
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows);
        for (i, row) in self.data.iter().enumerate() {
            for j in row.iter_ones() {
                t.data[j].set(i, true);
            }
        }
        t
    }

    /// Rank over GF(2) by row reduction.
    pub fn rank(&self) -> usize {
        let mut rows: Vec<Vec<u64>> = self.data.iter().map(|r| r.words.clone()).collect();
        let mut rank = 0;
        for col in 0..self.cols {
            let (w, bit) = (col / WORD, 1u64 << (col % WORD));
            let Some(pivot) = (rank..rows.len()).find(|&i| rows[i][w] & bit != 0) else {
                continue;
            };
            rows.swap(rank, pivot);
            let pivot_row = rows[rank].clone();
            for (i, row) in rows.iter_mut().enumerate() {
                if i != rank && row[w] & bit != 0 {
                    for (a, b) in row.iter_mut().zip(&pivot_row) {
                        *a ^= b;
                    }
                }
            }
            rank += 1;
            if rank == rows.len() {
                break;
            }
        }
        rank
    }

    /// Basis of the right null space `{x : G x = 0}`, one vector per row of
    /// the result.
    pub fn null_space(&self) -> BitMatrix {
        // reduced row echelon form, tracking pivot columns
        let mut rows: Vec<BitVector> = self.data.clone();
        let mut pivots = Vec::new();
        let mut rank = 0;
        for col in 0..self.cols {
            let Some(p) = (rank..rows.len()).find(|&i| rows[i].get(col)) else {
                continue;
            };
            rows.swap(rank, p);
            let pivot_row = rows[rank].clone();
            for (i, row) in rows.iter_mut().enumerate() {
                if i != rank && row.get(col) {
                    *row ^= &pivot_row;
                }
            }
            pivots.push(col);
            rank += 1;
        }
        let is_pivot = BitVector::indicator(self.cols, &pivots).expect("pivot columns in range");
        let basis = (0..self.cols)
            .filter(|&free| !is_pivot.get(free))
            .map(|free| {
                let mut x = BitVector::zeros(self.cols);
                x.set(free, true);
                for (r, &pc) in pivots.iter().enumerate() {
                    if rows[r].get(free) {
                        x.set(pc, true);
                    }
                }
                x
            })
            .collect();
        BitMatrix::from_rows(basis, self.cols).expect("null space rows have matrix width")
    }

    /// Each row packed into one word; `None` if there are more than 64 columns.
    pub fn row_words(&self) -> Option<Vec<u64>> {
        self.data.iter().map(BitVector::to_word).collect()
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{} [", self.rows, self.cols)?;
        for row in &self.data {
            writeln!(f, "  {row}")?;
        }
        write!(f, "]")
    }
}

#[derive(Serialize, Deserialize)]
struct HexMatrix {
    rows: usize,
    cols: usize,
    hex_rows: Vec<String>,
}

impl TryFrom<HexMatrix> for BitMatrix {
    type Error = Error;

    fn try_from(h: HexMatrix) -> Result<Self> {
        check_dim("matrix row count", h.rows, h.hex_rows.len())?;
        let rows = h
            .hex_rows
            .iter()
            .map(|s| BitVector::from_hex(s, h.cols))
            .collect::<Result<Vec<_>>>()?;
        BitMatrix::from_rows(rows, h.cols)
    }
}

impl From<BitMatrix> for HexMatrix {
    fn from(m: BitMatrix) -> Self {
        HexMatrix {
            rows: m.rows,
            cols: m.cols,
            hex_rows: m.data.iter().map(BitVector::to_hex).collect(),
        }
    }
}

/// Parity of a word.
#[inline]
pub(crate) fn parity(w: u64) -> bool {
    w.count_ones() & 1 == 1
}

/// Spreads the low bits of `value` onto the positions listed in `positions`
/// (bit `j` of `value` goes to bit `positions[j]`).
#[inline]
pub(crate) fn scatter(value: u64, positions: &[usize]) -> u64 {
    let mut out = 0u64;
    for (j, &p) in positions.iter().enumerate() {
        out |= ((value >> j) & 1) << p;
    }
    out
}

/// Inverse of [`scatter`].
#[inline]
pub(crate) fn gather(word: u64, positions: &[usize]) -> u64 {
    let mut out = 0u64;
    for (j, &p) in positions.iter().enumerate() {
        out |= ((word >> p) & 1) << j;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bv(s: &str) -> BitVector {
        BitVector::parse_bits(s).unwrap()
    }

    #[test]
    fn matvec_examples() {
        let id = BitMatrix::identity(3);
        assert_eq!(id.matvec(&bv("101")).unwrap(), bv("101"));

        let ones = BitMatrix::parse_rows(&["111"]).unwrap();
        assert_eq!(ones.matvec(&bv("101")).unwrap(), bv("0"));

        let g = BitMatrix::parse_rows(&["110", "011"]).unwrap();
        assert_eq!(g.matvec(&bv("111")).unwrap(), bv("00"));
    }

    #[test]
    fn matvec_rejects_wrong_length() {
        let g = BitMatrix::identity(3);
        let err = g.matvec(&bv("10")).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 3, found: 2, .. }));
    }

    #[test]
    fn row_combination_examples() {
        let id = BitMatrix::identity(3);
        assert_eq!(id.row_combination(&[0, 2]).unwrap(), bv("101"));
        let g = BitMatrix::parse_rows(&["110", "011"]).unwrap();
        assert_eq!(g.row_combination(&[0, 1]).unwrap(), bv("101"));
        for i in 0..2 {
            assert_eq!(&g.row_combination(&[i]).unwrap(), g.row(i));
        }
        assert!(g.row_combination(&[]).is_err());
        assert!(g.row_combination(&[2]).is_err());
        assert!(g.row_combination(&[1, 1]).is_err());
    }

    #[test]
    fn weight_examples() {
        assert_eq!(bv("0000").weight(), 0);
        assert_eq!(bv("1111").weight(), 4);
        assert_eq!(bv("1010").weight(), 2);
    }

    #[test]
    fn rank_examples() {
        assert_eq!(BitMatrix::identity(5).rank(), 5);
        assert_eq!(BitMatrix::zeros(3, 4).rank(), 0);
        assert_eq!(BitMatrix::parse_rows(&["11", "11"]).unwrap().rank(), 1);
    }

    #[test]
    fn hex_bit_order() {
        // bits 0 and 2 set -> first digit 0b0101
        let v = bv("10100");
        assert_eq!(v.to_hex(), "50");
        assert_eq!(BitVector::from_hex("50", 5).unwrap(), v);
        // most significant digit last
        let w = bv("00001");
        assert_eq!(w.to_hex(), "01");
        assert!(BitVector::from_hex("0f", 5).is_err());
        assert!(BitVector::from_hex("5", 5).is_err());
        assert!(BitVector::from_hex("5g", 5).is_err());
    }

    #[test]
    fn slice_crosses_words() {
        let mut v = BitVector::zeros(200);
        for i in (0..200).step_by(3) {
            v.set(i, true);
        }
        let s = v.slice(61, 70).unwrap();
        for i in 0..70 {
            assert_eq!(s.get(i), v.get(61 + i));
        }
        let aligned = v.slice(64, 65).unwrap();
        for i in 0..65 {
            assert_eq!(aligned.get(i), v.get(64 + i));
        }
        assert_eq!(aligned.words()[1] >> 1, 0);
        assert!(v.slice(150, 51).is_err());
    }

    #[test]
    fn null_space_is_orthogonal_and_complementary() {
        let g = BitMatrix::parse_rows(&["1000110", "0100101", "0010011", "0001111"]).unwrap();
        let h = g.null_space();
        assert_eq!(h.rows(), 3);
        assert_eq!(h.rank(), 3);
        for row in h.row_vectors() {
            assert_eq!(g.matvec(row).unwrap().weight(), 0);
        }
    }

    #[test]
    fn linearity_exhaustive_small() {
        let g = BitMatrix::parse_rows(&[
            "101100111010",
            "011011000111",
            "110001101101",
            "000111010011",
        ])
        .unwrap();
        for a in 0u64..1 << 12 {
            let va = BitVector::from_word(a, 12);
            let ga = g.matvec(&va).unwrap();
            for b in (0u64..1 << 12).step_by(37) {
                let vb = BitVector::from_word(b, 12);
                let lhs = g.matvec(&(&va ^ &vb)).unwrap();
                let rhs = &ga ^ &g.matvec(&vb).unwrap();
                assert_eq!(lhs, rhs);
            }
        }
    }

    fn arb_matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = BitMatrix> {
        (1..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| {
            proptest::collection::vec(proptest::collection::vec(any::<bool>(), c), r).prop_map(
                move |rows| {
                    BitMatrix::from_rows(rows.iter().map(|b| BitVector::from_bits(b)).collect(), c)
                        .unwrap()
                },
            )
        })
    }

    proptest! {
        #[test]
        fn matvec_is_linear(g in arb_matrix(10, 150), seed_a in any::<u64>(), seed_b in any::<u64>()) {
            let cols = g.cols();
            let mk = |seed: u64| {
                let mut v = BitVector::zeros(cols);
                let mut s = seed;
                for i in 0..cols {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    v.set(i, s >> 63 == 1);
                }
                v
            };
            let (a, b) = (mk(seed_a), mk(seed_b));
            let lhs = g.matvec(&(&a ^ &b)).unwrap();
            let rhs = &g.matvec(&a).unwrap() ^ &g.matvec(&b).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn row_combination_matches_transpose_view(g in arb_matrix(12, 80), mask in 1u64..4096) {
            let subset: Vec<usize> = (0..g.rows()).filter(|&i| (mask >> i) & 1 == 1).collect();
            prop_assume!(!subset.is_empty());
            let ind = BitVector::indicator(g.rows(), &subset).unwrap();
            prop_assert_eq!(g.row_combination(&subset).unwrap(), g.transpose().matvec(&ind).unwrap());
        }

        #[test]
        fn xor_weight_triangle(a in proptest::collection::vec(any::<bool>(), 0..300), flips in proptest::collection::vec(any::<bool>(), 300)) {
            let va = BitVector::from_bits(&a);
            let vb = BitVector::from_bits(&flips[..a.len()]);
            prop_assert!((&va ^ &vb).weight() <= va.weight() + vb.weight());
            prop_assert_eq!((&va ^ &va).weight(), 0);
        }

        #[test]
        fn hex_round_trip(bits in proptest::collection::vec(any::<bool>(), 0..200)) {
            let v = BitVector::from_bits(&bits);
            prop_assert_eq!(BitVector::from_hex(&v.to_hex(), v.len()).unwrap(), v.clone());
            let json = serde_json::to_string(&v).unwrap();
            prop_assert_eq!(serde_json::from_str::<BitVector>(&json).unwrap(), v);
        }
    }
}
