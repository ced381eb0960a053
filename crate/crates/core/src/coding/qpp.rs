use super::qpp_table::QPP_TABLE;
use crate::error::{Error, Result};

/// Supported interleaver block sizes, ascending.
pub fn supported_block_sizes() -> impl Iterator<Item = usize> {
    QPP_TABLE.iter().map(|&(k, _, _)| k as usize)
}

/// Largest supported block size not exceeding `max_k`.
pub fn largest_supported_at_most(max_k: usize) -> Option<usize> {
    supported_block_sizes().take_while(|&k| k <= max_k).last()
}

fn coefficients(k: usize) -> Result<(usize, usize)> {
    match QPP_TABLE.binary_search_by_key(&k, |&(kk, _, _)| kk as usize) {
        Ok(i) => Ok((QPP_TABLE[i].1 as usize, QPP_TABLE[i].2 as usize)),
        Err(i) => Err(Error::UnsupportedBlockSize {
            k,
            below: i.checked_sub(1).map(|j| QPP_TABLE[j].0 as usize),
            above: QPP_TABLE.get(i).map(|e| e.0 as usize),
        }),
    }
}

/// Quadratic permutation `π(i) = (f1·i + f2·i²) mod K` for a supported `K`.
///
/// The second constituent encoder sees `u'_i = u_{π(i)}`.
pub fn qpp_interleave(k: usize) -> Result<Vec<usize>> {
    let (f1, f2) = coefficients(k)?;
    // f1·i + f2·i² evaluated incrementally: π(i+1) = π(i) + g(i), g(i+1) = g(i) + 2·f2.
    let mut perm = Vec::with_capacity(k);
    let mut pi = 0usize;
    let mut step = (f1 + f2) % k;
    for _ in 0..k {
        perm.push(pi);
        pi = (pi + step) % k;
        step = (step + 2 * f2) % k;
    }
    Ok(perm)
}

/// Inverse of a permutation given as an index table.
pub fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}
