//! Exact counts and probabilities of ranked trees.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::tree::PhyloTree;

pub type BigCount = BigUint;
pub type Rational = BigRational;

/// Pascal's triangle up to row `N`.
#[derive(Debug, Clone)]
pub struct BinomialTable {
    rows: Vec<Vec<BigCount>>,
    zero: BigCount,
}

impl BinomialTable {
    pub fn new(max: usize) -> Self {
        let mut rows: Vec<Vec<BigCount>> = Vec::with_capacity(max + 1);
        for n in 0..=max {
            let mut row = Vec::with_capacity(n + 1);
            row.push(BigCount::one());
            for k in 1..n {
                let prev = &rows[n - 1];
                row.push(&prev[k - 1] + &prev[k]);
            }
            if n > 0 {
                row.push(BigCount::one());
            }
            rows.push(row);
        }
        BinomialTable {
            rows,
            zero: BigCount::zero(),
        }
    }

    pub fn max(&self) -> usize {
        self.rows.len() - 1
    }

    /// `C(n, k)`, zero when `k > n`. Panics if `n` exceeds the table size.
    pub fn get(&self, n: usize, k: usize) -> &BigCount {
        assert!(
            n <= self.max(),
            "C({n}, {k}) outside a table of size {}",
            self.max()
        );
        self.rows[n].get(k).unwrap_or(&self.zero)
    }

    /// `C(n, k)` with signed arguments; zero outside `0 <= k <= n`.
    pub(crate) fn get_signed(&self, n: isize, k: isize) -> &BigCount {
        if n < 0 || k < 0 || k > n {
            &self.zero
        } else {
            self.get(n as usize, k as usize)
        }
    }
}

pub fn binomial_table(max: usize) -> BinomialTable {
    BinomialTable::new(max)
}

pub fn factorial(n: usize) -> BigCount {
    (1..=n as u64).fold(BigCount::one(), |acc, k| acc * k)
}

fn interior_leaf_product(tree: &PhyloTree) -> BigCount {
    tree.interior_vertices()
        .map(|v| BigCount::from(tree.leaves_below(v) - 1))
        .product()
}

/// Number of rank functions, `|V°|! / prod_v h(v)` with `h(v)` the number of
/// interior vertices in the subtree at `v`. On binary trees `h(v) = n_v - 1`.
pub fn count_rank_functions(tree: &PhyloTree) -> Result<BigCount> {
    let interior = tree.interior_count();
    if interior == 0 {
        return Err(Error::NoInteriorVertex);
    }
    let hooks: BigCount = tree
        .interior_vertices()
        .map(|v| BigCount::from(tree.interior_below(v)))
        .product();
    let (count, remainder) = factorial(interior).div_rem(&hooks);
    assert!(remainder.is_zero(), "rank-function count is not an integer");
    Ok(count)
}

/// Yule probability of one particular ranking of a binary topology.
pub fn yule_ranked_prob(tree: &PhyloTree) -> Result<Rational> {
    tree.require_binary()?;
    let n = tree.leaf_count();
    Ok(ratio(interior_leaf_product(tree), factorial(n - 1)))
}

/// Yule probability of a labelled binary topology,
/// `2^(n-1) / (n! prod (n_v - 1))`.
pub fn yule_topology_prob(tree: &PhyloTree) -> Result<Rational> {
    tree.require_binary()?;
    let n = tree.leaf_count();
    let numer = BigCount::from(2u32).pow(n as u32 - 1);
    Ok(ratio(numer, factorial(n) * interior_leaf_product(tree)))
}

pub(crate) fn ratio(numer: BigCount, denom: BigCount) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub(crate) fn rational_from(n: usize) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn rational_to_f64(value: &Rational) -> f64 {
    // Shift both parts into f64 range before dividing.
    let numer = value.numer();
    let denom = value.denom();
    let shift = numer.bits().max(denom.bits()).saturating_sub(1000);
    let n = (numer >> shift).to_f64().unwrap_or(f64::NAN);
    let d = (denom >> shift).to_f64().unwrap_or(f64::NAN);
    if d == 0.0 {
        return if n.is_sign_negative() { -0.0 } else { 0.0 };
    }
    n / d
}

/// Decimal rendering with `significant` digits, rounded half away from zero,
/// trailing fractional zeros removed.
pub fn to_decimal(value: &Rational, significant: usize) -> String {
    let significant = significant.max(1);
    if value.is_zero() {
        return "0".to_string();
    }
    let negative = value.is_negative();
    let x = value.abs();
    let ten = BigInt::from(10);
    let pow10 = |e: i64| -> Rational {
        let p = Pow::pow(&ten, e.unsigned_abs());
        if e >= 0 {
            Rational::from_integer(p)
        } else {
            Rational::new(BigInt::one(), p)
        }
    };

    // Find e with 10^(e-1) <= x < 10^e.
    let mut e = x.numer().to_string().len() as i64 - x.denom().to_string().len() as i64;
    while x >= pow10(e) {
        e += 1;
    }
    while x < pow10(e - 1) {
        e -= 1;
    }

    let digits_wanted = significant as i64;
    let scaled = &x * pow10(digits_wanted - e);
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    let mut mantissa = (scaled + half).floor().to_integer();
    if mantissa == Pow::pow(&ten, significant) {
        mantissa /= &ten;
        e += 1;
    }

    let digits = mantissa.to_string();
    let mut text = if e <= 0 {
        format!("0.{}{}", "0".repeat((-e) as usize), digits)
    } else if e >= digits_wanted {
        format!("{}{}", digits, "0".repeat((e - digits_wanted) as usize))
    } else {
        let (int, frac) = digits.split_at(e as usize);
        format!("{int}.{frac}")
    };
    if text.contains('.') {
        while text.ends_with('0') {
            text.pop();
        }
        if text.ends_with('.') {
            text.pop();
        }
    }
    if negative {
        text.insert(0, '-');
    }
    text
}
