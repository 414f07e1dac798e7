//! One-dimensional quadrature.
//!
//! The adaptive integrator keeps a priority queue of panels. Each panel holds
//! Simpson estimates on the whole panel and on its two halves; their
//! difference gives the Richardson error estimate and the extrapolated value
//! that is actually summed. The worst panel is bisected until the total
//! estimated error drops below `max(abs_tol, rel_tol·|I|)`. A panel that would
//! have to be refined past `max_depth` turns the call into an error rather
//! than a silently inaccurate answer.
//!
//! Narrow features are only resolved if some panel samples them, so callers
//! with a known peak location should pass it as a breakpoint.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Maximum number of bisections applied to any initial panel.
    pub max_depth: u32,
    /// Number of equal panels each breakpoint segment starts with.
    pub initial_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { rel_tol: 1e-10, abs_tol: 0.0, max_depth: 30, initial_panels: 16 }
    }
}

impl QuadOptions {
    pub fn with_tolerance(rel_tol: f64, abs_tol: f64) -> Self {
        QuadOptions { rel_tol, abs_tol, ..Default::default() }
    }

    pub fn max_depth(mut self, depth: u32) -> Self {
        self.max_depth = depth;
        self
    }

    pub fn initial_panels(mut self, n: usize) -> Self {
        self.initial_panels = n.max(1);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    /// f at a, a+h/4, a+h/2, a+3h/4, b.
    f: [f64; 5],
    value: f64,
    err: f64,
    depth: u32,
}

impl Panel {
    fn new(a: f64, b: f64, f: [f64; 5], depth: u32) -> Self {
        let h = b - a;
        let coarse = h / 6.0 * (f[0] + 4.0 * f[2] + f[4]);
        let fine = h / 12.0 * (f[0] + 4.0 * f[1] + 2.0 * f[2] + 4.0 * f[3] + f[4]);
        let diff = fine - coarse;
        let err = if diff.is_finite() { diff.abs() / 15.0 } else { f64::INFINITY };
        Panel { a, b, f, value: fine + diff / 15.0, err, depth }
    }
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err).then_with(|| other.a.total_cmp(&self.a))
    }
}

fn make_panel<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, evals: &mut usize) -> Panel {
    let h = b - a;
    let vals = [f(a), f(a + 0.25 * h), f(a + 0.5 * h), f(a + 0.75 * h), f(b)];
    *evals += 5;
    Panel::new(a, b, vals, 0)
}

fn bisect<F: FnMut(f64) -> f64>(f: &mut F, p: &Panel, evals: &mut usize) -> (Panel, Panel) {
    let h = p.b - p.a;
    let m = p.a + 0.5 * h;
    let l1 = f(p.a + 0.125 * h);
    let l3 = f(p.a + 0.375 * h);
    let r1 = f(p.a + 0.625 * h);
    let r3 = f(p.a + 0.875 * h);
    *evals += 4;
    let left = Panel::new(p.a, m, [p.f[0], l1, p.f[1], l3, p.f[2]], p.depth + 1);
    let right = Panel::new(m, p.b, [p.f[2], r1, p.f[3], r3, p.f[4]], p.depth + 1);
    (left, right)
}

/// Sorted, de-duplicated, finite breakpoints clipped to `[lo, hi]`, always
/// including both ends.
pub fn clip_breaks(lo: f64, hi: f64, interior: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut edges = vec![lo, hi];
    edges.extend(interior.into_iter().filter(|t| t.is_finite() && *t > lo && *t < hi));
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    edges
}

/// Integrates `f` over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<QuadResult> {
    integrate_breaks(f, &[a, b], opts)
}

/// Integrates `f` over `[edges[0], edges[last]]`, starting with panels that
/// never straddle an interior edge. Edges must be ascending.
pub fn integrate_breaks<F: FnMut(f64) -> f64>(mut f: F, edges: &[f64], opts: &QuadOptions) -> Result<QuadResult> {
    assert!(edges.len() >= 2, "need at least two edges");
    let mut evals = 0;
    let mut heap = BinaryHeap::new();
    for seg in edges.windows(2) {
        let (lo, hi) = (seg[0], seg[1]);
        if hi <= lo {
            continue;
        }
        let n = opts.initial_panels.max(1);
        let w = (hi - lo) / n as f64;
        for i in 0..n {
            let a = lo + w * i as f64;
            let b = if i + 1 == n { hi } else { lo + w * (i + 1) as f64 };
            heap.push(make_panel(&mut f, a, b, &mut evals));
        }
    }
    if heap.is_empty() {
        return Ok(QuadResult { value: 0.0, error: 0.0, evaluations: evals });
    }

    let mut total: f64 = heap.iter().map(|p| p.value).sum();
    let mut total_err: f64 = heap.iter().map(|p| p.err).sum();
    let mut since_resum = 0usize;
    loop {
        let tol = opts.abs_tol.max(opts.rel_tol * total.abs());
        if total_err <= tol {
            // Refresh the running sums before trusting them.
            let exact: f64 = heap.iter().map(|p| p.value).sum();
            let exact_err: f64 = heap.iter().map(|p| p.err).sum();
            let tol = opts.abs_tol.max(opts.rel_tol * exact.abs());
            if exact_err <= tol {
                return Ok(QuadResult { value: exact, error: exact_err, evaluations: evals });
            }
            total = exact;
            total_err = exact_err;
            continue;
        }
        let worst = heap.pop().expect("heap is non-empty");
        if worst.depth >= opts.max_depth || !worst.err.is_finite() {
            return Err(Error::Quadrature { lo: worst.a, hi: worst.b, error: total_err, tol });
        }
        let (left, right) = bisect(&mut f, &worst, &mut evals);
        total += left.value + right.value - worst.value;
        total_err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
        since_resum += 1;
        if since_resum >= 256 {
            total = heap.iter().map(|p| p.value).sum();
            total_err = heap.iter().map(|p| p.err).sum();
            since_resum = 0;
        }
    }
}

/// Iterated integral ∫ dx ∫ dy f(x, y). `inner_edges(x)` supplies the
/// breakpoints of the inner integral at each outer abscissa.
pub fn integrate_2d<F, E>(f: F, outer_edges: &[f64], inner_edges: E, opts: &QuadOptions) -> Result<QuadResult>
where
    F: Fn(f64, f64) -> f64,
    E: Fn(f64) -> Vec<f64>,
{
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let inner_evals = RefCell::new(0usize);
    let outer = integrate_breaks(
        |x| {
            if failure.borrow().is_some() {
                return 0.0;
            }
            let edges = inner_edges(x);
            match integrate_breaks(|y| f(x, y), &edges, opts) {
                Ok(r) => {
                    *inner_evals.borrow_mut() += r.evaluations;
                    r.value
                }
                Err(e) => {
                    *failure.borrow_mut() = Some(e);
                    0.0
                }
            }
        },
        outer_edges,
        opts,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let mut r = outer?;
    r.evaluations = inner_evals.into_inner();
    Ok(r)
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
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
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Composite Gauss–Legendre rule: every breakpoint segment is cut into
/// `panels` equal panels, each integrated with an `order`-point rule.
pub fn fixed_grid<F: FnMut(f64) -> f64>(mut f: F, edges: &[f64], panels: usize, order: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(order);
    let mut sum = 0.0;
    for seg in edges.windows(2) {
        let w = (seg[1] - seg[0]) / panels as f64;
        for i in 0..panels {
            let a = seg[0] + w * i as f64;
            let mid = a + 0.5 * w;
            let half = 0.5 * w;
            let panel: f64 = nodes.iter().zip(&weights).map(|(x, wt)| wt * f(mid + half * x)).sum();
            sum += half * panel;
        }
    }
    sum
}
