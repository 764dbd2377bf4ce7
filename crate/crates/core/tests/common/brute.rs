use nalgebra::{DMatrix, DVector};

pub struct Equilibrium {
    pub value: f64,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

fn subsets(n: usize) -> Vec<Vec<usize>> {
    (1u32..(1 << n)).map(|mask| (0..n).filter(|&i| mask & (1 << i) != 0).collect()).collect()
}

/// Every equilibrium with equal-size supports, found by solving the
/// indifference equations on each support pair.
pub fn support_enumeration(j: &DMatrix<f64>) -> Vec<Equilibrium> {
    let (rows, cols) = j.shape();
    let mut found = Vec::new();
    for s in subsets(rows) {
        for t in subsets(cols).into_iter().filter(|t| t.len() == s.len()) {
            let k = s.len();
            // detector: J[S,T] q - v = 0, sum q = 1
            let mut m = DMatrix::zeros(k + 1, k + 1);
            let mut rhs = DVector::zeros(k + 1);
            for (a, &i) in s.iter().enumerate() {
                for (b, &c) in t.iter().enumerate() {
                    m[(a, b)] = j[(i, c)];
                }
                m[(a, k)] = -1.0;
            }
            for b in 0..k {
                m[(k, b)] = 1.0;
            }
            rhs[k] = 1.0;
            let Some(qs) = m.clone().lu().solve(&rhs) else { continue };
            // attacker: p^T J[S,T] - v = 0, sum p = 1
            let mut m2 = DMatrix::zeros(k + 1, k + 1);
            for (b, &c) in t.iter().enumerate() {
                for (a, &i) in s.iter().enumerate() {
                    m2[(b, a)] = j[(i, c)];
                }
                m2[(b, k)] = -1.0;
            }
            for a in 0..k {
                m2[(k, a)] = 1.0;
            }
            let Some(ps) = m2.lu().solve(&rhs) else { continue };
            if qs.rows(0, k).min() < -1e-12 || ps.rows(0, k).min() < -1e-12 {
                continue;
            }
            let mut q = vec![0.0; cols];
            let mut p = vec![0.0; rows];
            for (b, &c) in t.iter().enumerate() {
                q[c] = qs[b];
            }
            for (a, &i) in s.iter().enumerate() {
                p[i] = ps[a];
            }
            let v = qs[k];
            let qv = DVector::from_vec(q.clone());
            let pv = DVector::from_vec(p.clone());
            let rows_ok = (j * &qv).iter().all(|&x| x <= v + 1e-10);
            let cols_ok = (j.transpose() * &pv).iter().all(|&x| x >= v - 1e-10);
            if rows_ok && cols_ok {
                found.push(Equilibrium { value: v, p, q });
            }
        }
    }
    found
}
