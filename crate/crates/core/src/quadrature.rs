//! Gauss–Legendre rules and composite tensor-product panels.

use std::f64::consts::PI;

/// Nodes and weights of an n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A composite rule on an interval: equal panels, each carrying a Gauss–Legendre rule.
#[derive(Debug, Clone)]
pub struct CompositeRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl CompositeRule {
    pub fn new(a: f64, b: f64, panels: usize, order: usize) -> Self {
        let gl = GaussLegendre::new(order);
        let panels = panels.max(1);
        let width = (b - a) / panels as f64;
        let mut points = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let lo = a + p as f64 * width;
            let mid = lo + 0.5 * width;
            for (x, w) in gl.nodes.iter().zip(&gl.weights) {
                points.push(mid + 0.5 * width * x);
                weights.push(0.5 * width * w);
            }
        }
        Self { points, weights }
    }

    /// Panels of width at most `panel_width` covering [a, b].
    pub fn with_panel_width(a: f64, b: f64, panel_width: f64, order: usize) -> Self {
        let panels = ((b - a) / panel_width).ceil().max(1.0) as usize;
        Self::new(a, b, panels, order)
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(*x))
            .sum()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Axis-aligned box `[lo, hi]` integrated with a composite rule on each axis.
#[derive(Debug, Clone)]
pub struct BoxRule {
    pub axes: [CompositeRule; 3],
}

impl BoxRule {
    pub fn new(lo: [f64; 3], hi: [f64; 3], panel_width: f64, order: usize) -> Self {
        let axis = |i: usize| CompositeRule::with_panel_width(lo[i], hi[i], panel_width, order);
        Self {
            axes: [axis(0), axis(1), axis(2)],
        }
    }

    pub fn cube(center: [f64; 3], half_width: f64, panel_width: f64, order: usize) -> Self {
        let lo = [center[0] - half_width, center[1] - half_width, center[2] - half_width];
        let hi = [center[0] + half_width, center[1] + half_width, center[2] + half_width];
        Self::new(lo, hi, panel_width, order)
    }

    pub fn node_count(&self) -> usize {
        self.axes.iter().map(CompositeRule::len).product()
    }

    /// Integrates a vector-valued density. Each x slab is summed on its own (y row, then z)
    /// and the slabs are combined in index order, so the result is bit-identical no matter
    /// how many threads evaluate the slabs.
    pub fn integrate<const N: usize>(&self, f: impl Fn([f64; 3]) -> [f64; N] + Sync) -> [f64; N] {
        let [ax, ay, az] = &self.axes;
        let slab = |x: f64| {
            let mut acc = [0.0; N];
            for (y, wy) in ay.points.iter().zip(&ay.weights) {
                let mut row = [0.0; N];
                for (z, wz) in az.points.iter().zip(&az.weights) {
                    let v = f([x, *y, *z]);
                    for c in 0..N {
                        row[c] += wz * v[c];
                    }
                }
                for c in 0..N {
                    acc[c] += wy * row[c];
                }
            }
            acc
        };
        let nx = ax.len();
        let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(nx).max(1);
        let mut slabs = vec![[0.0; N]; nx];
        if threads == 1 {
            for (i, out) in slabs.iter_mut().enumerate() {
                *out = slab(ax.points[i]);
            }
        } else {
            let chunk = nx.div_ceil(threads);
            std::thread::scope(|scope| {
                for (c, part) in slabs.chunks_mut(chunk).enumerate() {
                    let slab = &slab;
                    scope.spawn(move || {
                        for (i, out) in part.iter_mut().enumerate() {
                            *out = slab(ax.points[c * chunk + i]);
                        }
                    });
                }
            });
        }
        let mut total = [0.0; N];
        for (s, wx) in slabs.iter().zip(&ax.weights) {
            for c in 0..N {
                total[c] += wx * s[c];
            }
        }
        total
    }

    /// Largest |f| over nodes lying on the outer layer of each axis.
    pub fn boundary_max(&self, f: impl Fn([f64; 3]) -> f64) -> f64 {
        let [ax, ay, az] = &self.axes;
        let edge = |r: &CompositeRule, i: usize| i == 0 || i + 1 == r.len();
        let mut worst: f64 = 0.0;
        for (i, x) in ax.points.iter().enumerate() {
            for (j, y) in ay.points.iter().enumerate() {
                for (l, z) in az.points.iter().enumerate() {
                    if edge(ax, i) || edge(ay, j) || edge(az, l) {
                        worst = worst.max(f([*x, *y, *z]).abs());
                    }
                }
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn weights_sum_to_two() {
        for n in 1..40 {
            let gl = GaussLegendre::new(n);
            let s: f64 = gl.weights.iter().sum();
            assert_relative_eq!(s, 2.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        let gl = GaussLegendre::new(6);
        for deg in 0..12 {
            let got = gl.integrate(-1.0, 1.0, |x| x.powi(deg));
            let want = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((got - want).abs() < 1e-14, "degree {deg}: {got} vs {want}");
        }
    }

    #[test]
    fn gaussian_in_a_box() {
        let rule = BoxRule::cube([0.3, -0.2, 0.1], 8.0, 1.0, 10);
        let [v] = rule.integrate(|p| {
            let r2 = (p[0] - 0.3).powi(2) + (p[1] + 0.2).powi(2) + (p[2] - 0.1).powi(2);
            [(-r2).exp()]
        });
        assert_relative_eq!(v, PI.powf(1.5), max_relative = 1e-12);
    }

    #[test]
    fn composite_matches_exponential() {
        let rule = CompositeRule::with_panel_width(0.0, 10.0, 1.0, 8);
        let v = rule.integrate(|x| (-x).exp());
        assert_relative_eq!(v, 1.0 - (-10.0f64).exp(), max_relative = 1e-14);
    }
}
