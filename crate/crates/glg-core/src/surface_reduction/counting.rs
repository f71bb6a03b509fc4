//! Critical-orbit counts `C(2g - 2 + n, d)` and the matching partitions of the
//! zero set of `lambda^{1,0}`.

use crate::error::{Error, Result};
use itertools::Itertools;

fn zero_count(g: u32, n: u32) -> Result<u32> {
    if g == 0 && n == 0 {
        return Err(Error::OutOfRange("closed surfaces need genus at least 1".into()));
    }
    let total = 2 * g as i64 - 2 + n as i64;
    if total < 0 {
        return Err(Error::OutOfRange(format!("2g - 2 + n = {total} is negative")));
    }
    Ok(total as u32)
}

pub fn count_critical_orbits(g: u32, d: u32, n: u32) -> Result<u64> {
    let total = zero_count(g, n)?;
    if d > total {
        return Err(Error::OutOfRange(format!("d = {d} exceeds 2g - 2 + n = {total}")));
    }
    let k = d.min(total - d) as u64;
    let mut out: u64 = 1;
    for i in 0..k {
        out = out * (total as u64 - i) / (i + 1);
    }
    Ok(out)
}

/// All `d`-element subsets of the `2g - 2 + n` zeros (the zeros of `Psi+`), in lexicographic order.
pub fn enumerate_zero_partitions(g: u32, d: u32, n: u32) -> Result<Vec<Vec<u32>>> {
    let total = zero_count(g, n)?;
    if d > total {
        return Err(Error::OutOfRange(format!("d = {d} exceeds 2g - 2 + n = {total}")));
    }
    Ok((0..total).combinations(d as usize).collect())
}
