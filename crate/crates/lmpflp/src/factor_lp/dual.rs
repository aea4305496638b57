use super::analytic::{m_integral_form, v_of_z};
use super::model::FactorError;

/// Discretized dual solution certifying an upper bound on the reduced
/// program (and hence on the plain one).
///
/// Matrices are indexed `[i][j]` with 0-based client indices; `a`, `b` are
/// used for `j < i`, `c` for `j ≥ i`.
#[derive(Debug, Clone)]
pub struct DualWitness {
    pub q: usize,
    pub z: f64,
    pub t: f64,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub n: Vec<f64>,
    pub m: f64,
    /// Largest discrete column sum.
    pub v: f64,
    /// `V(z)` of the continuous solution.
    pub v_cont: f64,
    pub m_cont: f64,
    pub value: f64,
    pub max_violation: f64,
}

#[derive(Clone, Copy)]
enum Edge {
    At(f64),
    Diag,
}

impl Edge {
    fn at(self, y: f64) -> f64 {
        match self {
            Edge::At(v) => v,
            Edge::Diag => y,
        }
    }
}

#[derive(Clone, Copy)]
enum Weight {
    Flat(f64),
    /// `1/(1 - z - y)`.
    Band(f64),
}

/// Region `y ∈ [y0, y1]`, `x ∈ [lo(y), hi(y)]` carrying a density.
#[derive(Clone, Copy)]
struct Piece {
    y0: f64,
    y1: f64,
    lo: Edge,
    hi: Edge,
    w: Weight,
}

impl Piece {
    /// Exact integral over `[ys0, ys1] × [xs0, xs1]`.
    fn integrate(&self, ys0: f64, ys1: f64, xs0: f64, xs1: f64) -> f64 {
        let a = self.y0.max(ys0);
        let b = self.y1.min(ys1);
        if b <= a {
            return 0.0;
        }
        let len = |y: f64| (self.hi.at(y).min(xs1) - self.lo.at(y).max(xs0)).max(0.0);
        let mut cuts = vec![a, b, xs0, xs1];
        for e in [self.lo, self.hi] {
            if let Edge::At(v) = e {
                cuts.push(v);
            }
        }
        cuts.retain(|&p| p >= a && p <= b);
        cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
        cuts.dedup();
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let (p, q) = (w[0], w[1]);
            let (lp, lq) = (len(p), len(q));
            total += match self.w {
                Weight::Flat(c) => c * (lp + lq) / 2.0 * (q - p),
                Weight::Band(z) => {
                    let slope = (lq - lp) / (q - p);
                    let k = lp + slope * (1.0 - z - p);
                    let (up, uq) = (1.0 - z - p, 1.0 - z - q);
                    k * (up / uq).ln() - slope * (up - uq)
                }
            };
        }
        total
    }
}

struct Continuous {
    a: Vec<Piece>,
    b: Vec<Piece>,
    c: Vec<Piece>,
}

fn continuous(z: f64) -> Continuous {
    let y = z * z / (1.0 - z);
    let flat = |v: f64| Weight::Flat(v);
    let mut a = vec![Piece { y0: z, y1: 1.0 - z, lo: Edge::At(z), hi: Edge::Diag, w: flat(1.0 / (1.0 - z)) }];
    let mut b = vec![Piece { y0: z, y1: 1.0 - z, lo: Edge::At(0.0), hi: Edge::Diag, w: flat(1.0 / (1.0 - z)) }];
    if z > 0.0 {
        a.push(Piece { y0: 1.0 - z, y1: 1.0 - y, lo: Edge::At(0.0), hi: Edge::At(z), w: flat(1.0 / z) });
        a.push(Piece { y0: 1.0 - y, y1: 1.0, lo: Edge::At(z), hi: Edge::At(0.5), w: flat(1.0 / (0.5 - z)) });
        b.push(Piece { y0: 1.0 - z - y, y1: 1.0 - z, lo: Edge::At(z), hi: Edge::At(0.5), w: flat(1.0 / (0.5 - z)) });
    }
    let mut c = vec![Piece { y0: z, y1: 1.0 - z, lo: Edge::Diag, hi: Edge::At(1.0), w: flat(1.0 / (1.0 - z)) }];
    if z > 0.0 {
        c.push(Piece { y0: 0.0, y1: z, lo: Edge::Diag, hi: Edge::At(1.0 - z), w: Weight::Band(z) });
    }
    Continuous { a, b, c }
}

fn cell(pieces: &[Piece], q: usize, i: usize, j: usize) -> f64 {
    let qf = q as f64;
    let (ys0, ys1) = (i as f64 / qf, (i + 1) as f64 / qf);
    let (xs0, xs1) = (j as f64 / qf, (j + 1) as f64 / qf);
    qf * pieces.iter().map(|p| p.integrate(ys0, ys1, xs0, xs1)).sum::<f64>()
}

/// Builds the discretized dual witness for `q` clients at `z = d/q`.
pub fn discrete_dual(q: usize, z: f64, t: f64) -> Result<DualWitness, FactorError> {
    if q == 0 {
        return Err(FactorError::EmptyCluster);
    }
    if !(0.0..=1.0 / 3.0 + 1e-12).contains(&z) {
        return Err(FactorError::Invalid(format!("z = {z} outside [0, 1/3]")));
    }
    let dz = z * q as f64;
    if (dz - dz.round()).abs() > 1e-9 {
        return Err(FactorError::Invalid(format!("z·q = {dz} is not an integer")));
    }
    if !(t > 0.0) {
        return Err(FactorError::BadT);
    }
    let cont = continuous(z);
    let mut a = vec![vec![0.0; q]; q];
    let mut b = vec![vec![0.0; q]; q];
    let mut c = vec![vec![0.0; q]; q];
    for i in 0..q {
        for j in 0..i {
            a[i][j] = cell(&cont.a, q, i, j);
            b[i][j] = cell(&cont.b, q, i, j);
        }
        for j in i..q {
            c[i][j] = cell(&cont.c, q, i, j);
        }
        c[i][i] += cell(&cont.a, q, i, i);
    }

    let mut viol = 0.0f64;
    for i in 0..q {
        let s: f64 = (0..i).map(|j| a[i][j]).sum::<f64>() + (i..q).map(|j| c[i][j]).sum::<f64>();
        viol = viol.max((s - 1.0).abs());
    }
    for j in 0..q {
        let mut p = 0.0;
        for i in j + 1..q {
            p += b[i][j] - a[i][j];
            viol = viol.max(-p);
        }
    }
    let mut v = 0.0f64;
    for j in 0..q {
        let s = (j + 1..q).map(|i| a[i][j] + b[i][j]).sum::<f64>()
            + (0..j).map(|i| a[j][i]).sum::<f64>()
            + (0..=j).map(|i| c[i][j]).sum::<f64>();
        v = v.max(s);
    }
    let n: Vec<f64> = (0..q)
        .map(|i| {
            let mb = (0..i).map(|j| b[i][j]).fold(0.0, f64::max);
            let mc = (i..q).map(|j| c[i][j]).fold(0.0, f64::max);
            mb.max(mc)
        })
        .collect();
    let m: f64 = n.iter().sum();
    let v_cont = v_of_z(z);
    let m_cont = m_integral_form(z);
    viol = viol.max(v - v_cont).max(m - m_cont);
    let value = v + t * (m - 1.0).max(0.0);
    if viol > 1e-8 {
        return Err(FactorError::Infeasible(viol));
    }
    Ok(DualWitness { q, z, t, a, b, c, n, m, v, v_cont, m_cont, value, max_violation: viol.max(0.0) })
}
