use num_bigint::BigUint;
use num_traits::Zero;

use super::{MathError, PrimeField};

/// Square matrix of non-negative integers, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Matrix {
    dim: usize,
    entries: Vec<BigUint>,
}

impl Matrix {
    pub fn new(dim: usize, entries: Vec<BigUint>) -> Result<Self, MathError> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(MathError::DimensionMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        Ok(Self { dim, entries })
    }

    pub fn from_rows<R: AsRef<[u64]>>(rows: &[R]) -> Result<Self, MathError> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(MathError::DimensionMismatch { expected: dim, got: row.len() });
            }
            entries.extend(row.iter().map(|&v| BigUint::from(v)));
        }
        Self::new(dim, entries)
    }

    pub fn filled(dim: usize, value: u64) -> Self {
        Self { dim, entries: vec![BigUint::from(value); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::filled(dim, 0);
        for i in 0..dim {
            m.entries[i * dim + i] = BigUint::from(1u32);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> &BigUint {
        &self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[BigUint] {
        &self.entries
    }

    pub(crate) fn map(&self, f: impl Fn(&BigUint) -> BigUint) -> Self {
        Self { dim: self.dim, entries: self.entries.iter().map(f).collect() }
    }

    pub(crate) fn to_u64(&self) -> Option<Vec<u64>> {
        self.entries.iter().map(num_traits::ToPrimitive::to_u64).collect()
    }

    pub fn to_rows_u64(&self) -> Option<Vec<Vec<u64>>> {
        let flat = self.to_u64()?;
        Some(flat.chunks(self.dim).map(<[u64]>::to_vec).collect())
    }
}

/// Exponent-side matrix: every entry a canonical residue mod `p - 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExponentMatrix(Matrix);

/// Group-side matrix: every entry a canonical residue mod `p`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupMatrix(Matrix);

impl ExponentMatrix {
    /// Reduces every entry mod `p - 1`.
    pub fn new(field: &PrimeField, m: Matrix) -> Self {
        Self(m.map(|v| field.reduce_exp(v)))
    }

    pub fn from_rows<R: AsRef<[u64]>>(field: &PrimeField, rows: &[R]) -> Result<Self, MathError> {
        Ok(Self::new(field, Matrix::from_rows(rows)?))
    }

    /// `scalar * self` entrywise mod `p - 1`.
    pub fn scale(&self, field: &PrimeField, scalar: &BigUint) -> Self {
        Self(self.0.map(|v| field.mul_exp(v, scalar)))
    }

    /// Matrix product over `Z_{p-1}`.
    pub fn matmul(&self, field: &PrimeField, rhs: &ExponentMatrix) -> Result<Self, MathError> {
        check_dims(self.dim(), rhs.dim())?;
        let d = self.dim();
        let mut out = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let mut acc = BigUint::zero();
                for k in 0..d {
                    acc += self.0.get(i, k) * rhs.0.get(k, j);
                }
                out.push(field.reduce_exp(&acc));
            }
        }
        Ok(Self(Matrix::new(d, out)?))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn get(&self, row: usize, col: usize) -> &BigUint {
        self.0.get(row, col)
    }
}

impl GroupMatrix {
    /// Reduces every entry mod `p`.
    pub fn new(field: &PrimeField, m: Matrix) -> Self {
        Self(m.map(|v| field.reduce(v)))
    }

    pub fn from_rows<R: AsRef<[u64]>>(field: &PrimeField, rows: &[R]) -> Result<Self, MathError> {
        Ok(Self::new(field, Matrix::from_rows(rows)?))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn get(&self, row: usize, col: usize) -> &BigUint {
        self.0.get(row, col)
    }

    pub fn is_all_units(&self) -> bool {
        self.0.entries.iter().all(|v| !v.is_zero())
    }
}

pub(crate) fn check_dims(a: usize, b: usize) -> Result<(), MathError> {
    if a != b {
        return Err(MathError::DimensionMismatch { expected: a, got: b });
    }
    Ok(())
}

/// Rank of `m` over the field `Z_p`, by Gaussian elimination with modular inverses.
pub fn rank_over_zp(m: &Matrix, field: &PrimeField) -> usize {
    let d = m.dim();
    let mut rows: Vec<Vec<BigUint>> = m
        .entries()
        .chunks(d)
        .map(|r| r.iter().map(|v| field.reduce(v)).collect())
        .collect();
    let p = field.modulus();
    let mut rank = 0;
    for col in 0..d {
        let Some(pivot) = (rank..d).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, pivot);
        let inv = field.inv(&rows[rank][col]).expect("pivot is nonzero");
        let pivot_row: Vec<BigUint> = rows[rank].iter().map(|v| field.mul(v, &inv)).collect();
        for (r, row) in rows.iter_mut().enumerate() {
            if r == rank || row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone();
            for (c, cell) in row.iter_mut().enumerate().skip(col) {
                let sub = field.mul(&factor, &pivot_row[c]);
                *cell = (&*cell + p - sub) % p;
            }
        }
        rows[rank] = pivot_row;
        rank += 1;
    }
    rank
}

/// Row-major concatenation of fixed-width little-endian elements.
pub fn encode_matrix(m: &Matrix, field: &PrimeField) -> Vec<u8> {
    let width = field.element_width();
    let mut out = Vec::with_capacity(m.entries().len() * width);
    for v in m.entries() {
        let mut le = v.to_bytes_le();
        assert!(le.len() <= width, "entry wider than the field element width");
        le.resize(width, 0);
        out.extend_from_slice(&le);
    }
    out
}

fn decode_entries(bytes: &[u8], field: &PrimeField, dim: usize, bound: &BigUint) -> Result<Matrix, MathError> {
    let width = field.element_width();
    let expected = dim * dim * width;
    if bytes.len() != expected {
        return Err(MathError::Encoding(format!(
            "expected {expected} bytes for a {dim}x{dim} matrix, got {}",
            bytes.len()
        )));
    }
    let entries = bytes
        .chunks(width)
        .map(|c| {
            let v = BigUint::from_bytes_le(c);
            if &v >= bound {
                Err(MathError::Encoding("matrix entry out of canonical range".into()))
            } else {
                Ok(v)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Matrix::new(dim, entries)
}

pub fn decode_group_matrix(bytes: &[u8], field: &PrimeField, dim: usize) -> Result<GroupMatrix, MathError> {
    Ok(GroupMatrix(decode_entries(bytes, field, dim, field.modulus())?))
}

pub fn decode_exponent_matrix(bytes: &[u8], field: &PrimeField, dim: usize) -> Result<ExponentMatrix, MathError> {
    Ok(ExponentMatrix(decode_entries(bytes, field, dim, field.order())?))
}

/// Length in bytes of one encoded `dim x dim` matrix.
pub fn encoded_matrix_len(field: &PrimeField, dim: usize) -> usize {
    dim * dim * field.element_width()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::suite::DetRng;
    use proptest::prelude::*;

    fn f7() -> PrimeField {
        PrimeField::from_u64(7).unwrap()
    }

    #[test]
    fn rank_examples() {
        let f = f7();
        assert_eq!(rank_over_zp(&Matrix::identity(4), &f), 4);
        assert_eq!(rank_over_zp(&Matrix::filled(4, 0), &f), 0);
        assert_eq!(rank_over_zp(&Matrix::from_rows(&[[1, 2], [2, 4]]).unwrap(), &f), 1);
        // singular mod 7 only: det = 1*9 - 2*1 = 7
        assert_eq!(rank_over_zp(&Matrix::from_rows(&[[1, 2], [1, 9]]).unwrap(), &f), 1);
    }

    // Independent oracle: rank as the size of the largest non-vanishing minor,
    // by enumerating square submatrices and expanding determinants.
    fn det_mod(m: &[Vec<i64>], p: i64) -> i64 {
        let n = m.len();
        if n == 1 {
            return m[0][0].rem_euclid(p);
        }
        let mut acc = 0i64;
        for c in 0..n {
            let minor: Vec<Vec<i64>> = m[1..]
                .iter()
                .map(|r| r.iter().enumerate().filter(|(j, _)| *j != c).map(|(_, v)| *v).collect())
                .collect();
            let sign = if c % 2 == 0 { 1 } else { -1 };
            acc = (acc + sign * m[0][c] * det_mod(&minor, p)).rem_euclid(p);
        }
        acc
    }

    fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        (0..n)
            .flat_map(|first| {
                subsets(n, k - 1)
                    .into_iter()
                    .filter(move |rest| rest.iter().all(|&r| r > first))
                    .map(move |mut rest| {
                        rest.insert(0, first);
                        rest
                    })
            })
            .collect()
    }

    fn minor_rank(rows: &[Vec<i64>], p: i64) -> usize {
        let n = rows.len();
        for k in (1..=n).rev() {
            for rs in subsets(n, k) {
                for cs in subsets(n, k) {
                    let sub: Vec<Vec<i64>> =
                        rs.iter().map(|&r| cs.iter().map(|&c| rows[r][c]).collect()).collect();
                    if det_mod(&sub, p) != 0 {
                        return k;
                    }
                }
            }
        }
        0
    }

    proptest! {
        #[test]
        fn rank_matches_minor_oracle(
            p in prop::sample::select(vec![2u64, 3, 5, 7, 11]),
            dim in 1usize..=3,
            seed in any::<u64>(),
        ) {
            let f = PrimeField::from_u64(p).unwrap();
            let mut rng = DetRng::new("rank-oracle", &seed.to_be_bytes());
            let rows: Vec<Vec<u64>> = (0..dim).map(|_| (0..dim).map(|_| rng.below(p)).collect()).collect();
            let m = Matrix::from_rows(&rows).unwrap();
            let irows: Vec<Vec<i64>> = rows.iter().map(|r| r.iter().map(|&v| v as i64).collect()).collect();
            prop_assert_eq!(rank_over_zp(&m, &f), minor_rank(&irows, p as i64));
        }

        #[test]
        fn encoding_round_trip(seed in any::<u64>(), dim in 1usize..5) {
            let f = PrimeField::from_u64(65537).unwrap();
            let mut rng = DetRng::new("enc", &seed.to_be_bytes());
            let rows: Vec<Vec<u64>> = (0..dim).map(|_| (0..dim).map(|_| rng.below(65537)).collect()).collect();
            let m = GroupMatrix::from_rows(&f, &rows).unwrap();
            let bytes = encode_matrix(m.matrix(), &f);
            prop_assert_eq!(bytes.len(), dim * dim * 3);
            // independent decoder
            let decoded: Vec<u64> = bytes
                .chunks(3)
                .map(|c| c[0] as u64 | (c[1] as u64) << 8 | (c[2] as u64) << 16)
                .collect();
            prop_assert_eq!(decoded, rows.concat());
            prop_assert_eq!(decode_group_matrix(&bytes, &f, dim).unwrap(), m);
        }
    }

    #[test]
    fn encoding_small_example() {
        let f = f7();
        let m = GroupMatrix::from_rows(&f, &[[3, 0], [6, 1]]).unwrap();
        assert_eq!(encode_matrix(m.matrix(), &f), vec![0x03, 0x00, 0x06, 0x01]);
    }

    #[test]
    fn decode_rejects_out_of_range_and_bad_length() {
        let f = f7();
        assert!(decode_group_matrix(&[7, 0, 0, 0], &f, 2).is_err());
        assert!(decode_group_matrix(&[1, 0, 0], &f, 2).is_err());
        // 6 is a valid group element but not a canonical exponent mod 6
        assert!(decode_group_matrix(&[6, 0, 0, 0], &f, 2).is_ok());
        assert!(decode_exponent_matrix(&[6, 0, 0, 0], &f, 2).is_err());
    }

    #[test]
    fn keygen_style_scaling_example() {
        let f = f7();
        let base = ExponentMatrix::from_rows(&f, &[[1, 2], [3, 6]]).unwrap();
        // BaseX entries are taken mod 6, so 6 reduces to 0 before scaling.
        let p = base.scale(&f, &BigUint::from(5u32));
        assert_eq!(p.matrix().to_rows_u64().unwrap(), vec![vec![5, 4], vec![3, 0]]);
    }
}
