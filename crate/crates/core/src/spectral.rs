//! Eigenvalues of small dense nonsymmetric matrices.
//!
//! Householder reduction to upper Hessenberg form followed by the
//! Francis double-shift QR iteration. Only eigenvalues are produced.

use crate::error::{Error, Result};
use crate::tensor::Matrix;

const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

/// All eigenvalues as `(re, im)` pairs, in no particular order.
pub fn eigenvalues(w: &Matrix) -> Result<Vec<(f64, f64)>> {
    let n = w.rows();
    if n != w.cols() {
        return Err(Error::config(format!("eigenvalues of a {:?} matrix", w.shape())));
    }
    if !w.is_finite() {
        return Err(Error::non_finite("eigenvalue input"));
    }
    // 1-based working copy, row-major with stride n + 1
    let mut a = vec![0.0; (n + 1) * (n + 1)];
    for i in 0..n {
        for j in 0..n {
            a[(i + 1) * (n + 1) + j + 1] = w.get(i, j);
        }
    }
    let mut h = Work { a, stride: n + 1 };
    hessenberg(&mut h, n);
    hqr(&mut h, n)
}

/// Largest eigenvalue magnitude.
pub fn spectral_radius(w: &Matrix) -> Result<f64> {
    Ok(eigenvalues(w)?
        .into_iter()
        .map(|(re, im)| re.hypot(im))
        .fold(0.0, f64::max))
}

struct Work {
    a: Vec<f64>,
    stride: usize,
}

impl Work {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.stride + j]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.a[i * self.stride + j]
    }
}

fn hessenberg(h: &mut Work, n: usize) {
    let mut v = vec![0.0; n + 1];
    for k in 1..n.saturating_sub(1) {
        // column k, rows k+1..=n
        let norm = (k + 1..=n).map(|i| h.at(i, k).powi(2)).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = h.at(k + 1, k);
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        for i in k + 1..=n {
            v[i] = h.at(i, k);
        }
        v[k + 1] -= alpha;
        let vnorm = (k + 1..=n).map(|i| v[i] * v[i]).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for x in &mut v[k + 1..=n] {
            *x /= vnorm;
        }
        for j in 1..=n {
            let s: f64 = (k + 1..=n).map(|i| v[i] * h.at(i, j)).sum();
            for i in k + 1..=n {
                *h.at_mut(i, j) -= 2.0 * v[i] * s;
            }
        }
        for i in 1..=n {
            let s: f64 = (k + 1..=n).map(|j| h.at(i, j) * v[j]).sum();
            for j in k + 1..=n {
                *h.at_mut(i, j) -= 2.0 * s * v[j];
            }
        }
        for i in k + 2..=n {
            *h.at_mut(i, k) = 0.0;
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

fn hqr(h: &mut Work, n: usize) -> Result<Vec<(f64, f64)>> {
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];
    let mut anorm = 0.0;
    for i in 1..=n {
        for j in i.saturating_sub(1).max(1)..=n {
            anorm += h.at(i, j).abs();
        }
    }
    let mut nn = n;
    let mut t = 0.0;
    let (mut p, mut q, mut r): (f64, f64, f64);
    let (mut x, mut y, mut z, mut w);
    while nn >= 1 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l >= 2 {
                let mut s = h.at(l - 1, l - 1).abs() + h.at(l, l).abs();
                if s == 0.0 {
                    s = anorm;
                }
                if h.at(l, l - 1).abs() + s == s {
                    *h.at_mut(l, l - 1) = 0.0;
                    break;
                }
                l -= 1;
            }
            x = h.at(nn, nn);
            if l == nn {
                wr[nn] = x + t;
                wi[nn] = 0.0;
                nn -= 1;
                break;
            }
            y = h.at(nn - 1, nn - 1);
            w = h.at(nn, nn - 1) * h.at(nn - 1, nn);
            if l == nn - 1 {
                p = 0.5 * (y - x);
                q = p * p + w;
                z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    z = p + sign(z, p);
                    wr[nn - 1] = x + z;
                    wr[nn] = if z != 0.0 { x - w / z } else { x + z };
                    wi[nn - 1] = 0.0;
                    wi[nn] = 0.0;
                } else {
                    wr[nn - 1] = x + p;
                    wr[nn] = x + p;
                    wi[nn - 1] = -z;
                    wi[nn] = z;
                }
                nn -= 2;
                break;
            }
            if its == MAX_SWEEPS_PER_EIGENVALUE {
                return Err(Error::Construction(
                    "QR iteration did not converge".to_string(),
                ));
            }
            if its == 10 || its == 20 {
                // exceptional shift
                t += x;
                for i in 1..=nn {
                    *h.at_mut(i, i) -= x;
                }
                let s = h.at(nn, nn - 1).abs() + h.at(nn - 1, nn - 2).abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            let mut m = nn - 2;
            loop {
                z = h.at(m, m);
                r = x - z;
                let s0 = y - z;
                p = (r * s0 - w) / h.at(m + 1, m) + h.at(m, m + 1);
                q = h.at(m + 1, m + 1) - z - r - s0;
                r = h.at(m + 2, m + 1);
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = h.at(m, m - 1).abs() * (q.abs() + r.abs());
                let v = p.abs() * (h.at(m - 1, m - 1).abs() + z.abs() + h.at(m + 1, m + 1).abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nn {
                *h.at_mut(i, i - 2) = 0.0;
                if i != m + 2 {
                    *h.at_mut(i, i - 3) = 0.0;
                }
            }
            let mut k = m;
            while k < nn {
                if k != m {
                    p = h.at(k, k - 1);
                    q = h.at(k + 1, k - 1);
                    r = if k != nn - 1 { h.at(k + 2, k - 1) } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign((p * p + q * q + r * r).sqrt(), p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            *h.at_mut(k, k - 1) = -h.at(k, k - 1);
                        }
                    } else {
                        *h.at_mut(k, k - 1) = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nn {
                        p = h.at(k, j) + q * h.at(k + 1, j);
                        if k != nn - 1 {
                            p += r * h.at(k + 2, j);
                            *h.at_mut(k + 2, j) -= p * z;
                        }
                        *h.at_mut(k + 1, j) -= p * y;
                        *h.at_mut(k, j) -= p * x;
                    }
                    let mmin = nn.min(k + 3);
                    for i in l..=mmin {
                        p = x * h.at(i, k) + y * h.at(i, k + 1);
                        if k != nn - 1 {
                            p += z * h.at(i, k + 2);
                            *h.at_mut(i, k + 2) -= p * r;
                        }
                        *h.at_mut(i, k + 1) -= p * q;
                        *h.at_mut(i, k) -= p;
                    }
                }
                k += 1;
            }
            if l >= nn - 1 {
                break;
            }
        }
    }
    Ok((1..=n).map(|i| (wr[i], wi[i])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(mut v: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    #[test]
    fn diagonal() {
        let m = Matrix::from_vec(3, 3, vec![2.0, 0.0, 0.0, 0.0, -0.5, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let ev = sorted(eigenvalues(&m).unwrap());
        assert_eq!(ev, vec![(-0.5, 0.0), (1.0, 0.0), (2.0, 0.0)]);
    }

    #[test]
    fn rotation_block() {
        let m = Matrix::from_vec(2, 2, vec![0.0, -2.0, 2.0, 0.0]).unwrap();
        let ev = sorted(eigenvalues(&m).unwrap());
        assert!((ev[0].1 + 2.0).abs() < 1e-12 && (ev[1].1 - 2.0).abs() < 1e-12);
        assert!((spectral_radius(&m).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn companion_matrix_roots() {
        // x^3 - 6x^2 + 11x - 6 = (x-1)(x-2)(x-3)
        let m = Matrix::from_vec(3, 3, vec![6.0, -11.0, 6.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]).unwrap();
        let ev = sorted(eigenvalues(&m).unwrap());
        for (got, want) in ev.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got.0 - want).abs() < 1e-10 && got.1.abs() < 1e-10);
        }
    }

    #[test]
    fn trivial_sizes() {
        assert!(eigenvalues(&Matrix::zeros(0, 0)).unwrap().is_empty());
        assert_eq!(eigenvalues(&Matrix::scalar(-3.0)).unwrap(), vec![(-3.0, 0.0)]);
        assert!(eigenvalues(&Matrix::zeros(2, 3)).is_err());
    }
}
