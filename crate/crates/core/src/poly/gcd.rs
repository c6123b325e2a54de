//! Multivariate gcd over Q.
//!
//! The common case for lifts of stable maps is a trivial gcd, so
//! [`gcd_homogeneous`] first tries to certify that over a few primes by
//! restricting to a random line. Only when that fails does it fall back to
//! the recursive content/primitive-part algorithm.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sparse::{Monomial, SparsePoly};

const PRIMES: [u64; 3] = [2_147_483_647, 2_147_483_629, 2_147_483_587];

/// Monic gcd of two polynomials (leading coefficient one in graded-lex).
/// `gcd(0, 0) = 0`.
pub fn gcd(a: &SparsePoly, b: &SparsePoly) -> SparsePoly {
    gcd_rec(a, b).monic()
}

/// Monic gcd of a family of homogeneous polynomials.
pub fn gcd_homogeneous(polys: &[SparsePoly]) -> SparsePoly {
    let nvars = polys.first().map(|p| p.nvars()).unwrap_or(0);
    let nonzero: Vec<&SparsePoly> = polys.iter().filter(|p| !p.is_zero()).collect();
    if nonzero.is_empty() {
        return SparsePoly::zero(nvars);
    }
    // Monomial part first: it is cheap and common (Cremona-type factors).
    let mono = nonzero
        .iter()
        .filter_map(|p| p.monomial_content())
        .reduce(|a, b| a.gcd(&b))
        .unwrap_or_else(|| Monomial::one(nvars));
    let mono_poly = SparsePoly::term(mono.clone(), BigRational::one());
    let stripped: Vec<SparsePoly> = nonzero
        .iter()
        .map(|p| p.div_exact(&mono_poly).expect("monomial content divides"))
        .collect();
    if stripped.len() == 1 {
        return stripped[0].monic().mul(&mono_poly);
    }
    if modular_certifies_trivial(&stripped) {
        return mono_poly;
    }
    // Smallest polynomials first keeps intermediate gcds small.
    let mut order: Vec<&SparsePoly> = stripped.iter().collect();
    order.sort_by_key(|p| p.len());
    let mut g = order[0].clone();
    for p in &order[1..] {
        if g.is_constant() {
            break;
        }
        g = gcd_rec(&g, p);
    }
    if g.is_constant() {
        return mono_poly;
    }
    g.monic().mul(&mono_poly)
}

fn gcd_rec(a: &SparsePoly, b: &SparsePoly) -> SparsePoly {
    let nvars = a.nvars();
    if a.is_zero() {
        return b.clone();
    }
    if b.is_zero() {
        return a.clone();
    }
    if a.is_constant() || b.is_constant() {
        return SparsePoly::one(nvars);
    }
    let (ma, mb) = (a.monomial_content().unwrap(), b.monomial_content().unwrap());
    let mg = ma.gcd(&mb);
    let a_mono = SparsePoly::term(ma, BigRational::one());
    let b_mono = SparsePoly::term(mb, BigRational::one());
    let a = a.div_exact(&a_mono).unwrap();
    let b = b.div_exact(&b_mono).unwrap();
    let mono = SparsePoly::term(mg, BigRational::one());
    if a.is_constant() || b.is_constant() {
        return mono;
    }

    let var = choose_var(&a, &b);
    let Some(v) = var else {
        return mono;
    };
    let ca = content(&a, v);
    let cb = content(&b, v);
    let c = gcd_rec(&ca, &cb);
    let pa = a.div_exact(&ca).expect("content divides");
    let pb = b.div_exact(&cb).expect("content divides");

    let (mut r0, mut r1) = if pa.degree_in(v) >= pb.degree_in(v) { (pa, pb) } else { (pb, pa) };
    let g = loop {
        if r1.degree_in(v) == 0 {
            break SparsePoly::one(nvars);
        }
        let r = pseudo_rem(&r0, &r1, v);
        if r.is_zero() {
            break r1;
        }
        r0 = r1;
        r1 = primitive_part(&r, v);
    };
    let g = primitive_part(&g, v);
    c.mul(&g).mul(&mono)
}

/// Variable of lowest max-degree among those present in both inputs, else
/// any variable present in either.
fn choose_var(a: &SparsePoly, b: &SparsePoly) -> Option<usize> {
    let n = a.nvars();
    let both = (0..n)
        .filter(|&v| a.degree_in(v) > 0 && b.degree_in(v) > 0)
        .min_by_key(|&v| a.degree_in(v).max(b.degree_in(v)));
    both.or_else(|| (0..n).find(|&v| a.degree_in(v) > 0 || b.degree_in(v) > 0))
}

/// Gcd of the coefficients of `p` viewed as a polynomial in `var`.
fn content(p: &SparsePoly, var: usize) -> SparsePoly {
    let coeffs = p.to_univariate(var);
    let mut nz = coeffs.into_iter().filter(|c| !c.is_zero());
    let mut g = nz.next().unwrap_or_else(|| SparsePoly::zero(p.nvars()));
    for c in nz {
        if g.is_constant() {
            break;
        }
        g = gcd_rec(&g, &c);
    }
    if g.is_constant() {
        SparsePoly::one(p.nvars())
    } else {
        g.monic()
    }
}

fn primitive_part(p: &SparsePoly, var: usize) -> SparsePoly {
    if p.is_zero() {
        return p.clone();
    }
    let c = content(p, var);
    let q = p.div_exact(&c).expect("content divides");
    q.primitive_integer().0
}

fn lead_coeff(p: &SparsePoly, var: usize) -> SparsePoly {
    p.to_univariate(var).pop().unwrap_or_else(|| SparsePoly::zero(p.nvars()))
}

/// Pseudo-remainder of `a` by `b` in `var`.
fn pseudo_rem(a: &SparsePoly, b: &SparsePoly, var: usize) -> SparsePoly {
    let db = b.degree_in(var);
    let lcb = lead_coeff(b, var);
    let mut r = a.clone();
    while !r.is_zero() && r.degree_in(var) >= db {
        let dr = r.degree_in(var);
        let lcr = lead_coeff(&r, var);
        let mut shift = Monomial::one(r.nvars());
        shift.0[var] = dr - db;
        let sub = b.mul(&lcr).mul_term(&shift, &BigRational::one());
        r = r.mul(&lcb).sub(&sub);
        if r.len() > 64 {
            r = r.primitive_integer().0;
        }
    }
    r
}

/// Restricts every polynomial to a random line `a + s b` modulo a prime and
/// checks whether the univariate gcd is constant. Requires homogeneous
/// inputs with nonzero leading values `F_i(b)`, so the restriction keeps
/// full degree; then a constant univariate gcd proves the true gcd is 1.
fn modular_certifies_trivial(polys: &[SparsePoly]) -> bool {
    let nvars = polys[0].nvars();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0067_6364_5f6d_6f64);
    for &p in &PRIMES {
        let a: Vec<u64> = (0..nvars).map(|_| rng.random_range(1..p)).collect();
        let b: Vec<u64> = (0..nvars).map(|_| rng.random_range(1..p)).collect();
        let mut ok = true;
        let mut g: Option<Vec<u64>> = None;
        for poly in polys {
            let d = poly.total_degree().unwrap_or(0) as usize;
            let Some(coefs) = poly_mod(poly, p) else {
                ok = false;
                break;
            };
            if eval_mod(&coefs, &b, p) == 0 {
                ok = false;
                break;
            }
            let xs: Vec<u64> = (0..=d as u64).collect();
            let ys: Vec<u64> = xs
                .iter()
                .map(|&s| {
                    let pt: Vec<u64> = a.iter().zip(&b).map(|(ai, bi)| (ai + s * bi % p) % p).collect();
                    eval_mod(&coefs, &pt, p)
                })
                .collect();
            let uni = interpolate(&xs, &ys, p);
            g = Some(match g {
                None => uni,
                Some(prev) => upoly_gcd(prev, uni, p),
            });
            if g.as_ref().map(|v| v.len() <= 1).unwrap_or(false) {
                break;
            }
        }
        if ok {
            return g.map(|v| v.len() <= 1).unwrap_or(false);
        }
    }
    false
}

/// Coefficients reduced mod p; `None` if some denominator vanishes mod p.
fn poly_mod(poly: &SparsePoly, p: u64) -> Option<Vec<(u64, Vec<u32>)>> {
    let pb = BigInt::from(p);
    poly.terms()
        .map(|(m, c)| {
            let num = c.numer().mod_floor(&pb).to_u64()?;
            let den = c.denom().mod_floor(&pb).to_u64()?;
            if den == 0 {
                return None;
            }
            Some((mulmod(num, invmod(den, p), p), m.0.to_vec()))
        })
        .collect()
}

fn eval_mod(coefs: &[(u64, Vec<u32>)], x: &[u64], p: u64) -> u64 {
    let mut acc = 0u64;
    for (c, e) in coefs {
        let mut t = *c;
        for (xi, &ei) in x.iter().zip(e) {
            if ei > 0 {
                t = mulmod(t, powmod(*xi, ei as u64, p), p);
            }
        }
        acc = (acc + t) % p;
    }
    acc
}

fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn powmod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1u64;
    a %= p;
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

/// Newton interpolation mod p; returns coefficients, lowest degree first,
/// trimmed of trailing zeros.
fn interpolate(xs: &[u64], ys: &[u64], p: u64) -> Vec<u64> {
    let n = xs.len();
    let mut dd = ys.to_vec();
    for j in 1..n {
        for i in (j..n).rev() {
            let num = (dd[i] + p - dd[i - 1]) % p;
            let den = (xs[i] + p - xs[i - j]) % p;
            dd[i] = mulmod(num, invmod(den, p), p);
        }
    }
    let mut coef = vec![0u64; n];
    for i in (0..n).rev() {
        // coef = coef * (s - xs[i]) + dd[i]
        let mut next = vec![0u64; n];
        for d in 0..n {
            if coef[d] == 0 {
                continue;
            }
            if d + 1 < n {
                next[d + 1] = (next[d + 1] + coef[d]) % p;
            }
            next[d] = (next[d] + p - mulmod(coef[d], xs[i], p)) % p;
        }
        next[0] = (next[0] + dd[i]) % p;
        coef = next;
    }
    trim(coef)
}

fn trim(mut v: Vec<u64>) -> Vec<u64> {
    while v.last() == Some(&0) {
        v.pop();
    }
    v
}

fn upoly_gcd(mut a: Vec<u64>, mut b: Vec<u64>, p: u64) -> Vec<u64> {
    a = trim(a);
    b = trim(b);
    while !b.is_empty() {
        let r = upoly_rem(&a, &b, p);
        a = b;
        b = r;
    }
    a
}

fn upoly_rem(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let inv = invmod(b[db], p);
    while r.len() > db {
        let lead = *r.last().unwrap();
        let shift = r.len() - 1 - db;
        if lead != 0 {
            let f = mulmod(lead, inv, p);
            for (i, &bi) in b.iter().enumerate() {
                r[shift + i] = (r[shift + i] + p - mulmod(f, bi, p)) % p;
            }
        }
        r.pop();
        r = trim(r);
    }
    r
}

/// Whether `g` is a nonzero rational constant.
pub fn is_unit(g: &SparsePoly) -> bool {
    g.is_constant() && !g.is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(n: usize, j: usize) -> SparsePoly {
        SparsePoly::var(n, j)
    }

    fn qi(v: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(v))
    }

    #[test]
    fn gcd_of_products_recovers_common_factor() {
        let (a, b, c) = (x(3, 0), x(3, 1), x(3, 2));
        let common = a.add(&b.scale(&qi(2))).sub(&c);
        let f = common.mul(&a.mul(&a).add(&c.mul(&b)));
        let g = common.mul(&b.mul(&b).sub(&a.mul(&c)));
        let got = gcd(&f, &g);
        assert_eq!(got, common.monic());
    }

    #[test]
    fn coprime_homogeneous_family_is_certified() {
        let (a, b, c) = (x(3, 0), x(3, 1), x(3, 2));
        let f = vec![b.mul(&c), b.mul(&b).add(&c.mul(&c)).sub(&a.mul(&c)), c.mul(&c)];
        assert!(modular_certifies_trivial(&f));
        assert!(is_unit(&gcd_homogeneous(&f)));
    }

    #[test]
    fn shared_monomial_is_extracted() {
        let (a, b, c) = (x(3, 0), x(3, 1), x(3, 2));
        let abc = a.mul(&b).mul(&c);
        let f = vec![abc.mul(&a), abc.mul(&b), abc.mul(&c)];
        assert_eq!(gcd_homogeneous(&f), abc);
    }

    #[test]
    fn interpolation_roundtrip() {
        let p = PRIMES[0];
        let coefs = vec![3u64, 0, 5, 7];
        let xs: Vec<u64> = (0..4).collect();
        let ys: Vec<u64> = xs
            .iter()
            .map(|&s| coefs.iter().rev().fold(0, |acc, &c| (mulmod(acc, s, p) + c) % p))
            .collect();
        assert_eq!(interpolate(&xs, &ys, p), coefs);
    }
}
