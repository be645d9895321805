use std::f64::consts::PI;

/// Normalised associated Legendre values `N_{lm} P_l^m(z)` for
/// `0 ≤ m ≤ l ≤ cutoff`, with `N_{lm}² = (2l+1)/(4π) · (l-m)!/(l+m)!`.
///
/// Stored in triangular order `l(l+1)/2 + m`.
#[derive(Clone, Debug)]
pub struct LegendreTable {
    cutoff: usize,
    values: Vec<f64>,
}

#[inline]
fn tri(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// Coefficient `α_{lm} = √((l² - m²)/(4l² - 1))` of the three-term
/// recurrence `z p_l = α_{l+1} p_{l+1} + α_l p_{l-1}`.
#[inline]
pub(crate) fn recurrence_alpha(l: usize, m: usize) -> f64 {
    let (l, m) = (l as f64, m as f64);
    ((l * l - m * m) / (4.0 * l * l - 1.0)).sqrt()
}

impl LegendreTable {
    pub fn new(cutoff: usize, z: f64) -> Self {
        let mut values = vec![0.0; tri(cutoff, cutoff) + 1];
        Self::fill(cutoff, z, &mut values);
        Self { cutoff, values }
    }

    pub(crate) fn fill(cutoff: usize, z: f64, values: &mut [f64]) {
        let s = (1.0 - z * z).max(0.0).sqrt();
        let mut pmm = 1.0 / (4.0 * PI).sqrt();
        for m in 0..=cutoff {
            if m > 0 {
                pmm *= s * ((2 * m + 1) as f64 / (2 * m) as f64).sqrt();
            }
            values[tri(m, m)] = pmm;
            if m == cutoff {
                break;
            }
            let mut prev = pmm;
            let mut cur = (2 * m + 3) as f64;
            cur = cur.sqrt() * z * pmm;
            values[tri(m + 1, m)] = cur;
            for l in (m + 2)..=cutoff {
                let next = (z * cur - recurrence_alpha(l - 1, m) * prev) / recurrence_alpha(l, m);
                values[tri(l, m)] = next;
                prev = cur;
                cur = next;
            }
        }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    #[inline]
    pub fn get(&self, l: usize, m: usize) -> f64 {
        self.values[tri(l, m)]
    }

    pub(crate) fn stride(cutoff: usize) -> usize {
        tri(cutoff, cutoff) + 1
    }

    pub(crate) fn index(l: usize, m: usize) -> usize {
        tri(l, m)
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes in decreasing order.
///
/// Newton iteration on `P_n` from the Tricomi initial guesses; exact for
/// polynomials of degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        nodes[n - 1 - i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_monomials() {
        let (x, w) = gauss_legendre(9);
        for p in 0..=17 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
            let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "degree {p}: {q} vs {exact}");
        }
    }

    #[test]
    fn low_order_closed_forms() {
        let z = 0.37;
        let t = LegendreTable::new(3, z);
        let c = 1.0 / (4.0 * PI).sqrt();
        assert!((t.get(0, 0) - c).abs() < 1e-15);
        assert!((t.get(1, 0) - c * 3f64.sqrt() * z).abs() < 1e-15);
        // N_11 P_1^1 = sqrt(3/(8π)) sinθ
        let s = (1.0 - z * z).sqrt();
        assert!((t.get(1, 1) - (3.0 / (8.0 * PI)).sqrt() * s).abs() < 1e-15);
        // N_20 P_2 = sqrt(5/4π) (3z²-1)/2
        assert!((t.get(2, 0) - (5.0 / (4.0 * PI)).sqrt() * (3.0 * z * z - 1.0) / 2.0).abs() < 1e-15);
    }
}
