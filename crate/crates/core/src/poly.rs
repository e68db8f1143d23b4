//! Exact characteristic polynomials of integer matrices.
//!
//! Coefficients are listed from the constant term upward; polynomials are monic.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Deterministic Miller-Rabin for 64-bit integers.
fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Primes just below 2^61, largest first.
fn primes() -> &'static [u64] {
    static PRIMES: OnceLock<Vec<u64>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let mut out = Vec::new();
        let mut c = (1u64 << 61) - 1;
        while out.len() < 64 {
            if is_prime(c) {
                out.push(c);
            }
            c -= 2;
        }
        out
    })
}

fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn powmod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1u64;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a, p);
        }
        a = mulmod(a, a, p);
        e >>= 1;
    }
    r
}

fn invmod(a: u64, p: u64) -> u64 {
    powmod(a, p - 2, p)
}

/// Characteristic polynomial over `Z/p` via Hessenberg reduction.
fn charpoly_mod(m: &[Vec<i64>], p: u64) -> Vec<u64> {
    let n = m.len();
    let mut h: Vec<Vec<u64>> = m
        .iter()
        .map(|row| row.iter().map(|&x| x.rem_euclid(p as i64) as u64).collect())
        .collect();
    let sub = |a: u64, b: u64| if a >= b { a - b } else { a + p - b };
    let add = |a: u64, b: u64| {
        let s = a + b;
        if s >= p {
            s - p
        } else {
            s
        }
    };
    for col in 0..n.saturating_sub(2) {
        let pivot = (col + 1..n).find(|&r| h[r][col] != 0);
        let Some(piv) = pivot else { continue };
        if piv != col + 1 {
            h.swap(piv, col + 1);
            for row in h.iter_mut() {
                row.swap(piv, col + 1);
            }
        }
        let inv = invmod(h[col + 1][col], p);
        for r in col + 2..n {
            if h[r][col] == 0 {
                continue;
            }
            let f = mulmod(h[r][col], inv, p);
            // Row r -= f * row (col+1), then column (col+1) += f * column r.
            for c in 0..n {
                let t = mulmod(f, h[col + 1][c], p);
                h[r][c] = sub(h[r][c], t);
            }
            for row in h.iter_mut() {
                let t = mulmod(f, row[r], p);
                row[col + 1] = add(row[col + 1], t);
            }
        }
    }
    // p_k(x) = (x - h_kk) p_{k-1} - sum_i h_ik (prod_{j=i+1..k} h_{j,j-1}) p_{i-1}
    let mut polys: Vec<Vec<u64>> = vec![vec![1]];
    for k in 0..n {
        let prev = &polys[k];
        let mut next = vec![0u64; k + 2];
        for (i, &c) in prev.iter().enumerate() {
            next[i + 1] = add(next[i + 1], c);
            next[i] = sub(next[i], mulmod(h[k][k], c, p));
        }
        let mut prod = 1u64;
        for i in (0..k).rev() {
            prod = mulmod(prod, h[i + 1][i], p);
            if prod == 0 {
                break;
            }
            let coef = mulmod(h[i][k], prod, p);
            if coef == 0 {
                continue;
            }
            for (j, &c) in polys[i].iter().enumerate() {
                next[j] = sub(next[j], mulmod(coef, c, p));
            }
        }
        polys.push(next);
    }
    polys.pop().expect("at least the constant polynomial")
}

/// Bits needed to hold every coefficient in absolute value, via row-norm Hadamard bounds.
fn coefficient_bits(m: &[Vec<i64>]) -> f64 {
    let n = m.len();
    let max_norm = m
        .iter()
        .map(|row| row.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt())
        .fold(0.0f64, f64::max);
    // |c_k| <= C(n,k) B^k <= (1 + B)^n
    n as f64 * (1.0 + max_norm).log2() + 2.0
}

/// Exact characteristic polynomial `det(xI - M)` by Chinese remaindering.
pub fn charpoly(m: &[Vec<i64>]) -> Vec<BigInt> {
    let n = m.len();
    assert!(m.iter().all(|r| r.len() == n), "matrix must be square");
    let needed = (coefficient_bits(m) / 60.0).ceil() as usize + 1;
    let primes = primes();
    assert!(needed <= primes.len(), "matrix too large for exact reconstruction");
    let mut modulus = BigInt::one();
    let mut acc = vec![BigInt::zero(); n + 1];
    for &p in &primes[..needed] {
        let r = charpoly_mod(m, p);
        let pb = BigInt::from(p);
        let inv = {
            let mm = (&modulus % &pb).to_u64().expect("reduced below p");
            BigInt::from(invmod(mm, p))
        };
        for (a, &ri) in acc.iter_mut().zip(&r) {
            // a' ≡ a (mod modulus), a' ≡ ri (mod p)
            let diff = (BigInt::from(ri) - &*a) % &pb;
            let t = ((diff * &inv) % &pb + &pb) % &pb;
            *a += &modulus * t;
        }
        modulus *= pb;
    }
    let half = &modulus >> 1;
    for a in acc.iter_mut() {
        if *a > half {
            *a -= &modulus;
        }
    }
    acc
}

/// Berkowitz's division-free algorithm over the integers.
pub fn charpoly_berkowitz(m: &[Vec<i64>]) -> Vec<BigInt> {
    let n = m.len();
    if n == 0 {
        return vec![BigInt::one()];
    }
    let a: Vec<Vec<BigInt>> = m.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
    // vect holds coefficients from highest degree down.
    let mut vect: Vec<BigInt> = vec![BigInt::one(), -a[0][0].clone()];
    for r in 1..n {
        // Toeplitz column for the leading (r+1)x(r+1) block.
        let rvec: Vec<BigInt> = (0..r).map(|j| a[r][j].clone()).collect();
        let cvec: Vec<BigInt> = (0..r).map(|i| a[i][r].clone()).collect();
        let mut col = vec![BigInt::one(), -a[r][r].clone()];
        let mut s = cvec.clone();
        for _ in 0..r {
            let val: BigInt = rvec.iter().zip(&s).map(|(x, y)| x * y).sum();
            col.push(-val);
            s = (0..r).map(|i| (0..r).map(|j| &a[i][j] * &s[j]).sum()).collect();
        }
        let mut next = vec![BigInt::zero(); r + 2];
        for (i, c) in col.iter().enumerate().take(r + 2) {
            for (j, v) in vect.iter().enumerate() {
                if i + j < r + 2 {
                    next[i + j] += c * v;
                }
            }
        }
        vect = next;
    }
    vect.reverse();
    vect
}

pub fn mul(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn pow(a: &[BigInt], e: usize) -> Vec<BigInt> {
    let mut r = vec![BigInt::one()];
    for _ in 0..e {
        r = mul(&r, a);
    }
    r
}

/// Maximum coefficient difference relative to the largest coefficient magnitude.
pub fn relative_residual(a: &[BigInt], b: &[BigInt]) -> f64 {
    let len = a.len().max(b.len());
    let zero = BigInt::zero();
    let mut num = BigInt::zero();
    let mut scale = BigInt::one();
    for i in 0..len {
        let x = a.get(i).unwrap_or(&zero);
        let y = b.get(i).unwrap_or(&zero);
        let d = (x - y).abs();
        if d > num {
            num = d;
        }
        for v in [x.abs(), y.abs()] {
            if v > scale {
                scale = v;
            }
        }
    }
    if num.is_zero() {
        return 0.0;
    }
    ratio_f64(&num, &scale)
}

fn ratio_f64(num: &BigInt, den: &BigInt) -> f64 {
    let shift = den.bits().saturating_sub(60);
    let n = (num >> shift).to_f64().unwrap_or(f64::INFINITY);
    let d = (den >> shift).to_f64().unwrap_or(f64::INFINITY);
    n / d
}
