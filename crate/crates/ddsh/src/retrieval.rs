//! Hamming-space retrieval over bit-packed codes.
//!
//! Codes pack 64 bits per word, bit set iff the entry is +1. Rows are
//! padded to a word boundary with zero bits; distances mask the padding
//! so it can never contribute.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array2;
use thiserror::Error;

use crate::coder::CodeMatrix;

/// Magic bytes of the packed codes file format.
pub const CODES_MAGIC: &[u8; 4] = b"DDBC";
/// Current codes file format version.
pub const CODES_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("code length mismatch: {0}")]
    LengthMismatch(String),
    #[error("radius {radius} out of range 0..={c}")]
    RadiusOutOfRange { radius: u32, c: usize },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic bytes in codes file")]
    BadMagic,
    #[error("unsupported codes version {0}")]
    BadVersion(u32),
    #[error("empty codes file")]
    Empty,
}

/// n rows of c-bit codes, 64 bits per word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedCodes {
    n: usize,
    c: usize,
    words_per_row: usize,
    words: Vec<u64>,
}

impl PackedCodes {
    /// Pack a +/-1 code matrix; bit set means +1.
    pub fn pack(codes: &CodeMatrix) -> Self {
        let n = codes.n();
        let c = codes.c();
        let words_per_row = c.div_ceil(64);
        let mut words = vec![0u64; n * words_per_row];
        for i in 0..n {
            for k in 0..c {
                if codes.get(i, k) == 1 {
                    words[i * words_per_row + k / 64] |= 1u64 << (k % 64);
                }
            }
        }
        Self {
            n,
            c,
            words_per_row,
            words,
        }
    }

    pub fn unpack(&self) -> CodeMatrix {
        let entries = Array2::from_shape_fn((self.n, self.c), |(i, k)| {
            if self.words[i * self.words_per_row + k / 64] >> (k % 64) & 1 == 1 {
                1i8
            } else {
                -1i8
            }
        });
        CodeMatrix::new(entries).expect("unpack emits only +/-1")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.words[i * self.words_per_row..(i + 1) * self.words_per_row]
    }

    pub fn save(&self, path: &Path) -> Result<(), RetrievalError> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(CODES_MAGIC)?;
        w.write_u32::<LittleEndian>(CODES_VERSION)?;
        w.write_u64::<LittleEndian>(self.n as u64)?;
        w.write_u64::<LittleEndian>(self.c as u64)?;
        for word in &self.words {
            w.write_u64::<LittleEndian>(*word)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, RetrievalError> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != CODES_MAGIC {
            return Err(RetrievalError::BadMagic);
        }
        let version = r.read_u32::<LittleEndian>()?;
        if version != CODES_VERSION {
            return Err(RetrievalError::BadVersion(version));
        }
        let n = r.read_u64::<LittleEndian>()? as usize;
        let c = r.read_u64::<LittleEndian>()? as usize;
        if n == 0 || c == 0 {
            return Err(RetrievalError::Empty);
        }
        let words_per_row = c.div_ceil(64);
        let mut words = vec![0u64; n * words_per_row];
        r.read_u64_into::<LittleEndian>(&mut words)?;
        Ok(Self {
            n,
            c,
            words_per_row,
            words,
        })
    }
}

fn last_word_mask(c: usize) -> u64 {
    match c % 64 {
        0 => u64::MAX,
        rem => (1u64 << rem) - 1,
    }
}

/// Popcount of the masked XOR; equals (c - b1'b2) / 2 on unpacked codes.
pub fn hamming_distance(a: &[u64], b: &[u64], c: usize) -> Result<u32, RetrievalError> {
    let words = c.div_ceil(64);
    if a.len() != words || b.len() != words {
        return Err(RetrievalError::LengthMismatch(format!(
            "rows have {} and {} words, c = {c} needs {words}",
            a.len(),
            b.len()
        )));
    }
    let mut total = 0u32;
    for w in 0..words {
        let mask = if w + 1 == words {
            last_word_mask(c)
        } else {
            u64::MAX
        };
        total += ((a[w] ^ b[w]) & mask).count_ones();
    }
    Ok(total)
}

/// Full database ordering for one query: ascending distance, ties by
/// ascending id.
#[derive(Debug, Clone)]
pub struct Ranking {
    pub query_id: usize,
    /// (database id, Hamming distance), sorted.
    pub entries: Vec<(usize, u32)>,
}

pub fn rank(
    query_id: usize,
    query: &[u64],
    db: &PackedCodes,
    top_k: Option<usize>,
) -> Result<Ranking, RetrievalError> {
    let mut entries = Vec::with_capacity(db.n());
    for id in 0..db.n() {
        entries.push((id, hamming_distance(query, db.row(id), db.c())?));
    }
    entries.sort_unstable_by_key(|&(id, dist)| (dist, id));
    if let Some(k) = top_k {
        entries.truncate(k);
    }
    Ok(Ranking { query_id, entries })
}

/// All database ids within the given Hamming radius, ascending id.
pub fn lookup_within_radius(
    query: &[u64],
    db: &PackedCodes,
    radius: u32,
) -> Result<Vec<usize>, RetrievalError> {
    if radius as usize > db.c() {
        return Err(RetrievalError::RadiusOutOfRange {
            radius,
            c: db.c(),
        });
    }
    let mut hits = Vec::new();
    for id in 0..db.n() {
        if hamming_distance(query, db.row(id), db.c())? <= radius {
            hits.push(id);
        }
    }
    Ok(hits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn random_codes(n: usize, c: usize, seed: u64) -> CodeMatrix {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        CodeMatrix::random(n, c, &mut rng)
    }

    #[test]
    fn distance_identical_and_opposite() {
        let codes = CodeMatrix::new(Array2::from_elem((2, 12), 1i8)).unwrap();
        let packed = PackedCodes::pack(&codes);
        assert_eq!(
            hamming_distance(packed.row(0), packed.row(1), 12).unwrap(),
            0
        );

        let mut entries = Array2::from_elem((2, 12), 1i8);
        entries.row_mut(1).fill(-1);
        let packed = PackedCodes::pack(&CodeMatrix::new(entries).unwrap());
        assert_eq!(
            hamming_distance(packed.row(0), packed.row(1), 12).unwrap(),
            12
        );
    }

    #[test]
    fn packed_distance_matches_dot_product_identity() {
        for &c in &[12usize, 24, 32, 48, 64, 65, 100] {
            let codes = random_codes(30, c, c as u64);
            let packed = PackedCodes::pack(&codes);
            for i in 0..30 {
                for j in 0..30 {
                    let packed_dist =
                        hamming_distance(packed.row(i), packed.row(j), c).unwrap() as i64;
                    let dot = codes.dot(i, j);
                    assert_eq!(packed_dist, (c as i64 - dot) / 2, "c={c} i={i} j={j}");
                }
            }
        }
    }

    #[test]
    fn distance_length_mismatch() {
        assert!(matches!(
            hamming_distance(&[0u64], &[0u64, 1], 12),
            Err(RetrievalError::LengthMismatch(_))
        ));
    }

    #[test]
    fn rank_matches_naive_oracle() {
        let db_codes = random_codes(100, 24, 5);
        let q_codes = random_codes(3, 24, 6);
        let db = PackedCodes::pack(&db_codes);
        let queries = PackedCodes::pack(&q_codes);
        for q in 0..3 {
            let ranking = rank(q, queries.row(q), &db, None).unwrap();
            // Naive oracle over unpacked vectors.
            let mut naive: Vec<(usize, u32)> = (0..100)
                .map(|id| {
                    let diff = (0..24)
                        .filter(|&k| q_codes.get(q, k) != db_codes.get(id, k))
                        .count();
                    (id, diff as u32)
                })
                .collect();
            naive.sort_by_key(|&(id, d)| (d, id));
            assert_eq!(ranking.entries, naive);
        }
    }

    #[test]
    fn rank_self_match_first_and_truncation() {
        let db_codes = random_codes(10, 16, 9);
        let db = PackedCodes::pack(&db_codes);
        let ranking = rank(0, db.row(4), &db, None).unwrap();
        assert_eq!(ranking.entries[0].1, 0);
        // Distance-zero ties resolve to the smallest id; row 4's code may
        // repeat but id 4 must appear among the leading zeros.
        assert!(ranking
            .entries
            .iter()
            .take_while(|&&(_, d)| d == 0)
            .any(|&(id, _)| id == 4));

        let top = rank(0, db.row(4), &db, Some(3)).unwrap();
        assert_eq!(top.entries.len(), 3);
        assert_eq!(&top.entries[..], &ranking.entries[..3]);

        let single = PackedCodes::pack(&random_codes(1, 16, 10));
        let r = rank(0, db.row(0), &single, None).unwrap();
        assert_eq!(r.entries.len(), 1);
    }

    #[test]
    fn radius_lookup_consistent_with_rank() {
        let db = PackedCodes::pack(&random_codes(60, 20, 13));
        let q = PackedCodes::pack(&random_codes(1, 20, 14));
        let full = rank(0, q.row(0), &db, None).unwrap();
        for radius in [0u32, 1, 3, 7, 20] {
            let hits = lookup_within_radius(q.row(0), &db, radius).unwrap();
            let mut expected: Vec<usize> = full
                .entries
                .iter()
                .filter(|&&(_, d)| d <= radius)
                .map(|&(id, _)| id)
                .collect();
            expected.sort_unstable();
            assert_eq!(hits, expected, "radius {radius}");
        }
        // Radius c returns everything.
        assert_eq!(lookup_within_radius(q.row(0), &db, 20).unwrap().len(), 60);
        assert!(lookup_within_radius(q.row(0), &db, 21).is_err());
    }

    #[test]
    fn codes_file_roundtrip() {
        let codes = random_codes(17, 33, 3);
        let packed = PackedCodes::pack(&codes);
        let f = tempfile::NamedTempFile::new().unwrap();
        packed.save(f.path()).unwrap();
        let back = PackedCodes::load(f.path()).unwrap();
        assert_eq!(packed, back);

        let mut f = tempfile::NamedTempFile::new().unwrap();
        std::io::Write::write_all(&mut f, b"WHATwhat").unwrap();
        assert!(matches!(
            PackedCodes::load(f.path()),
            Err(RetrievalError::BadMagic)
        ));
    }

    proptest! {
        #[test]
        fn pack_unpack_roundtrip(
            n in 1usize..12,
            c in 1usize..130,
            seed in 0u64..1000
        ) {
            let codes = random_codes(n, c, seed);
            let packed = PackedCodes::pack(&codes);
            prop_assert_eq!(packed.unpack(), codes);
        }

        #[test]
        fn hamming_is_a_metric(seed in 0u64..500) {
            let codes = random_codes(3, 19, seed);
            let p = PackedCodes::pack(&codes);
            let d = |i: usize, j: usize| hamming_distance(p.row(i), p.row(j), 19).unwrap();
            // Symmetry, identity, triangle inequality.
            prop_assert_eq!(d(0, 1), d(1, 0));
            prop_assert_eq!(d(0, 0), 0);
            prop_assert!((codes.row(0) == codes.row(1)) == (d(0, 1) == 0));
            prop_assert!(d(0, 2) <= d(0, 1) + d(1, 2));
        }
    }
}
