//! Roots of univariate complex polynomials (Aberth–Ehrlich) with
//! multiplicity recovery by clustering.

use num_complex::Complex64;

const MAX_ITERS: usize = 800;
const CLUSTER_RADIUS: f64 = 1e-3;

/// A root together with its multiplicity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Root {
    pub value: Complex64,
    pub multiplicity: u32,
}

pub fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

pub fn derivative(coeffs: &[Complex64]) -> Vec<Complex64> {
    coeffs.iter().enumerate().skip(1).map(|(i, &c)| c * i as f64).collect()
}

/// Removes leading coefficients with `|c| <= tol`.
pub fn trim(coeffs: &[Complex64], tol: f64) -> Vec<Complex64> {
    let mut v = coeffs.to_vec();
    while v.last().map_or(false, |c| c.norm() <= tol) {
        v.pop();
    }
    v
}

/// All roots of `Σ coeffs[i] z^i`, counted with multiplicity (length = degree).
pub fn aberth(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len().saturating_sub(1);
    if n == 0 {
        return Vec::new();
    }
    let lead = coeffs[n];
    let radius = (0..n).map(|i| (coeffs[i] / lead).norm().powf(1.0 / (n - i) as f64)).fold(0.0, f64::max).max(1e-3);
    let mut z: Vec<Complex64> =
        (0..n).map(|j| Complex64::from_polar(radius, std::f64::consts::TAU * j as f64 / n as f64 + 0.4)).collect();
    let dp = derivative(coeffs);
    for _ in 0..MAX_ITERS {
        let mut max_step: f64 = 0.0;
        for j in 0..n {
            let p = horner(coeffs, z[j]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / horner(&dp, z[j]);
            let repulsion: Complex64 = (0..n)
                .filter(|&l| l != j)
                .map(|l| {
                    let d = z[j] - z[l];
                    if d.norm() == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        d.inv()
                    }
                })
                .sum();
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if w.is_finite() {
                z[j] -= w;
                max_step = max_step.max(w.norm() / z[j].norm().max(1.0));
            }
        }
        if max_step < 1e-16 {
            break;
        }
    }
    z
}

/// Roots grouped into clusters; each cluster's centroid is reported with the
/// cluster size as multiplicity. Returns `(roots, ill_conditioned)` where the
/// flag is raised when distinct clusters sit close together or a centroid
/// fails the residual re-check.
pub fn clustered_roots(coeffs: &[Complex64]) -> (Vec<Root>, bool) {
    let raw = aberth(coeffs);
    let mut used = vec![false; raw.len()];
    let mut out = Vec::new();
    for i in 0..raw.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let mut members = vec![raw[i]];
        // grow the cluster transitively
        let mut changed = true;
        while changed {
            changed = false;
            for j in 0..raw.len() {
                if used[j] {
                    continue;
                }
                if members.iter().any(|m| (raw[j] - m).norm() <= CLUSTER_RADIUS * m.norm().max(1.0)) {
                    used[j] = true;
                    members.push(raw[j]);
                    changed = true;
                }
            }
        }
        let centroid = members.iter().sum::<Complex64>() / members.len() as f64;
        out.push(Root { value: centroid, multiplicity: members.len() as u32 });
    }
    let mut ill = false;
    for a in 0..out.len() {
        for b in a + 1..out.len() {
            let scale = out[a].value.norm().max(out[b].value.norm()).max(1.0);
            if (out[a].value - out[b].value).norm() < 10.0 * CLUSTER_RADIUS * scale {
                ill = true;
            }
        }
    }
    // refine each centroid, then re-check p, p', ... up to the multiplicity
    let scale: f64 = coeffs.iter().map(|c| c.norm()).sum();
    for r in out.iter_mut() {
        // an m-fold root is a simple root of the (m-1)-th derivative
        let mut base = coeffs.to_vec();
        for _ in 1..r.multiplicity {
            base = derivative(&base);
        }
        let db = derivative(&base);
        let start = r.value;
        for _ in 0..4 {
            let step = horner(&base, r.value) / horner(&db, r.value);
            if step.is_finite() {
                r.value -= step;
            }
        }
        if !r.value.is_finite() || (r.value - start).norm() > CLUSTER_RADIUS * start.norm().max(1.0) {
            r.value = start;
        }
        let mut d = coeffs.to_vec();
        for _ in 0..r.multiplicity {
            let mag = r.value.norm().max(1.0).powi(d.len() as i32);
            if horner(&d, r.value).norm() > 1e-6 * scale * mag {
                ill = true;
            }
            d = derivative(&d);
        }
    }
    (out, ill)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn simple_roots_of_cubic() {
        // (z - 1)(z + 2)(z - i) expanded
        let roots_true = [c(1.0, 0.0), c(-2.0, 0.0), c(0.0, 1.0)];
        let mut coeffs = vec![c(1.0, 0.0)];
        for r in roots_true {
            let mut next = vec![c(0.0, 0.0); coeffs.len() + 1];
            for (i, &a) in coeffs.iter().enumerate() {
                next[i + 1] += a;
                next[i] -= a * r;
            }
            coeffs = next;
        }
        let (roots, ill) = clustered_roots(&coeffs);
        assert!(!ill);
        assert_eq!(roots.len(), 3);
        for t in roots_true {
            assert!(roots.iter().any(|r| (r.value - t).norm() < 1e-12 && r.multiplicity == 1));
        }
    }

    #[test]
    fn triple_root_is_clustered() {
        // (z - 0.5)^3 = z^3 - 1.5 z^2 + 0.75 z - 0.125
        let coeffs = [c(-0.125, 0.0), c(0.75, 0.0), c(-1.5, 0.0), c(1.0, 0.0)];
        let (roots, _) = clustered_roots(&coeffs);
        assert_eq!(roots.len(), 1);
        assert_eq!(roots[0].multiplicity, 3);
        assert!((roots[0].value - c(0.5, 0.0)).norm() < 1e-8);
    }
}
