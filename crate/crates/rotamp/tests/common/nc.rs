//! Brute-force non-crossing partition sums in exact rational arithmetic.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

pub type Partition = Vec<Vec<usize>>;

/// Non-crossing partitions of `elems` (sorted). With `even_blocks`, only partitions whose
/// blocks all have even size.
pub fn non_crossing(elems: &[usize], even_blocks: bool) -> Vec<Partition> {
    if elems.is_empty() {
        return vec![Vec::new()];
    }
    if even_blocks && elems.len() % 2 == 1 {
        return Vec::new();
    }
    let mut out = Vec::new();
    grow(vec![elems[0]], &elems[1..], even_blocks, &mut Vec::new(), &mut out);
    out
}

/// Extends the open block `block` with members drawn from `rest`; every gap between
/// consecutive members, and everything after the last one, is partitioned independently.
fn grow(
    block: Vec<usize>,
    rest: &[usize],
    even: bool,
    gaps: &mut Vec<Partition>,
    out: &mut Vec<Partition>,
) {
    if !even || block.len() % 2 == 0 {
        for tail in non_crossing(rest, even) {
            let mut p = vec![block.clone()];
            for g in gaps.iter() {
                p.extend(g.iter().cloned());
            }
            p.extend(tail);
            out.push(p);
        }
    }
    for i in 0..rest.len() {
        for inner in non_crossing(&rest[..i], even) {
            let mut b = block.clone();
            b.push(rest[i]);
            gaps.push(inner);
            grow(b, &rest[i + 1..], even, gaps, out);
            gaps.pop();
        }
    }
}

pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().expect("finite rational")
}

fn pow(x: &BigRational, e: usize) -> BigRational {
    (0..e).fold(BigRational::one(), |acc, _| acc * x)
}

/// Partitions of `1..=size` with no block inside `1..=ell`.
pub fn restricted(size: usize, ell: usize, even_blocks: bool) -> Vec<Partition> {
    let elems: Vec<usize> = (1..=size).collect();
    non_crossing(&elems, even_blocks)
        .into_iter()
        .filter(|p| p.iter().all(|b| b.iter().any(|&x| x > ell)))
        .collect()
}

/// `sum over NC(k + j, j)` of `prod kappa_{|S|}`; `kappa[i]` is `kappa_{i+1}`.
pub fn square_coefficient(kappa: &[BigRational], k: usize, j: usize) -> BigRational {
    restricted(k + j, j, false)
        .iter()
        .map(|p| p.iter().map(|b| kappa[b.len() - 1].clone()).product::<BigRational>())
        .fold(BigRational::zero(), |a, b| a + b)
}

/// `gamma`-weighted sum over even partitions; `kappa[i]` is `kappa_{2(i+1)}`. `bar` selects
/// the odd-minimum weight `gamma^{o(pi)}` instead of `gamma^{e(pi)}`.
fn rect_sum(kappa: &[BigRational], gamma: &BigRational, size: usize, ell: usize, bar: bool) -> BigRational {
    restricted(size, ell, true)
        .iter()
        .map(|p| {
            let weighted = p.iter().filter(|b| (b[0] % 2 == 0) != bar).count();
            let prod: BigRational = p.iter().map(|b| kappa[b.len() / 2 - 1].clone()).product();
            prod * pow(gamma, weighted)
        })
        .fold(BigRational::zero(), |a, b| a + b)
}

/// Rectangular `c_{r,j}` (or `bar c_{r,j}`) for `r >= 1` by enumeration.
pub fn rect_coefficient(kappa: &[BigRational], gamma: &BigRational, r: usize, j: usize, bar: bool) -> BigRational {
    assert!(r >= 1);
    if r % 2 == 1 {
        rect_sum(kappa, gamma, r + 2 * j + 1, 2 * j + 1, bar)
    } else {
        rect_sum(kappa, gamma, r + 2 * j, 2 * j, bar)
    }
}

/// `m_k = sum over NC(k)` of `prod kappa_{|S|}`.
pub fn square_moment(kappa: &[BigRational], k: usize) -> BigRational {
    square_coefficient(kappa, k, 0)
}

/// `m_{2k} = sum over NC'(2k)` of `gamma^{e(pi)} prod kappa_{|S|}`.
pub fn rect_moment(kappa: &[BigRational], gamma: &BigRational, k: usize) -> BigRational {
    rect_sum(kappa, gamma, 2 * k, 0, false)
}
