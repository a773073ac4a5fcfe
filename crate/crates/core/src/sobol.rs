//! Unscrambled Sobol' sequence with Joe-Kuo direction numbers.
//!
//! Points are produced in Gray-code order starting with the all-zeros point,
//! so for one dimension the prefix is `0, 0.5, 0.75, 0.25, ...`.

use crate::error::{Error, Result};

const BITS: usize = 32;

/// `(s, a, m_1..m_s)` for dimensions 2.. from `new-joe-kuo-6.21201`.
/// Dimension 1 is the van der Corput sequence and is handled separately.
const JOE_KUO: &[(u32, u32, &[u32])] = &[
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
    (5, 11, &[1, 1, 5, 1, 1]),
    (5, 13, &[1, 1, 1, 3, 11]),
    (5, 14, &[1, 3, 5, 5, 31]),
    (6, 1, &[1, 3, 3, 9, 7, 49]),
    (6, 13, &[1, 1, 1, 15, 21, 21]),
    (6, 16, &[1, 3, 1, 13, 27, 49]),
    (6, 19, &[1, 1, 1, 15, 7, 5]),
    (6, 22, &[1, 3, 1, 15, 13, 25]),
    (6, 25, &[1, 1, 5, 5, 19, 61]),
    (7, 1, &[1, 3, 7, 11, 23, 15, 103]),
    (7, 4, &[1, 3, 7, 13, 13, 15, 69]),
];

/// Largest dimension covered by the built-in direction-number table.
pub const MAX_DIM: usize = JOE_KUO.len() + 1;

fn direction_numbers(dim_index: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if dim_index == 0 {
        for (k, vk) in v.iter_mut().enumerate() {
            *vk = 1 << (31 - k);
        }
        return v;
    }
    let (s, a, m) = JOE_KUO[dim_index - 1];
    let s = s as usize;
    for k in 0..s {
        v[k] = m[k] << (31 - k);
    }
    for k in s..BITS {
        let mut x = v[k - s] ^ (v[k - s] >> s);
        for l in 1..s {
            if (a >> (s - 1 - l)) & 1 == 1 {
                x ^= v[k - l];
            }
        }
        v[k] = x;
    }
    v
}

/// Iterator over points of a `dim`-dimensional Sobol' sequence.
#[derive(Debug, Clone)]
pub struct Sobol {
    directions: Vec<[u32; BITS]>,
    state: Vec<u32>,
    index: u64,
}

impl Sobol {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension", "must be at least 1"));
        }
        if dim > MAX_DIM {
            return Err(Error::Capability(format!(
                "Sobol' direction numbers cover dimensions up to {MAX_DIM}, requested {dim}"
            )));
        }
        Ok(Self {
            directions: (0..dim).map(direction_numbers).collect(),
            state: vec![0; dim],
            index: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.state.len()
    }
}

impl Iterator for Sobol {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        if self.index >= 1u64 << BITS {
            return None;
        }
        if self.index > 0 {
            let c = (self.index - 1).trailing_ones() as usize;
            for (x, v) in self.state.iter_mut().zip(&self.directions) {
                *x ^= v[c];
            }
        }
        self.index += 1;
        let scale = 1.0 / (1u64 << BITS) as f64;
        Some(self.state.iter().map(|&x| f64::from(x) * scale).collect())
    }
}

/// First `m` points of the `d`-dimensional sequence.
pub fn sample_centers(d: usize, m: usize) -> Result<Vec<Vec<f64>>> {
    if m == 0 {
        return Err(Error::invalid("component count", "must be at least 1"));
    }
    Ok(Sobol::new(d)?.take(m).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_prefix() {
        let pts: Vec<f64> = sample_centers(1, 4).unwrap().into_iter().map(|p| p[0]).collect();
        assert_eq!(pts, vec![0.0, 0.5, 0.75, 0.25]);
    }

    #[test]
    fn matches_reference_generator() {
        // Unscrambled Joe-Kuo points from an independent reference implementation.
        let pts: Vec<Vec<f64>> = Sobol::new(10).unwrap().take(778).collect();
        assert_eq!(
            pts[7],
            vec![0.125, 0.625, 0.375, 0.125, 0.125, 0.375, 0.625, 0.625, 0.625, 0.875]
        );
        assert_eq!(
            pts[777],
            vec![
                0.6923828125, 0.9365234375, 0.1630859375, 0.2744140625, 0.6357421875,
                0.3564453125, 0.1904296875, 0.7626953125, 0.3486328125, 0.3232421875
            ]
        );
    }

    #[test]
    fn rejects_unsupported_dimension() {
        assert!(matches!(Sobol::new(MAX_DIM + 1), Err(Error::Capability(_))));
        assert!(Sobol::new(0).is_err());
    }

    #[test]
    fn points_stay_in_unit_cube_and_are_deterministic() {
        let a = sample_centers(10, 500).unwrap();
        let b = sample_centers(10, 500).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().flatten().all(|&x| (0.0..1.0).contains(&x)));
    }
}
