use crate::compiler::QuboModel;

/// Dense view of a QUBO for the inner loops of the solvers.
#[derive(Debug, Clone)]
pub struct QuboIndex {
    pub names: Vec<String>,
    pub offset: f64,
    pub linear: Vec<f64>,
    /// `(i, j, coupling)` with `i < j`.
    pub pairs: Vec<(usize, usize, f64)>,
    pub neighbors: Vec<Vec<(usize, f64)>>,
}

impl QuboIndex {
    pub fn new(model: &QuboModel) -> Self {
        let names = model.binaries();
        let pos = |n: &str| names.iter().position(|m| m == n).expect("binary owned by model");
        let mut linear = vec![0.0; names.len()];
        let mut pairs = Vec::new();
        let mut neighbors = vec![Vec::new(); names.len()];
        for (m, c) in model.quadratic.terms() {
            match m.vars() {
                [v] => linear[pos(v)] += c,
                [a, b] => {
                    let (i, j) = (pos(a), pos(b));
                    let (i, j) = (i.min(j), i.max(j));
                    pairs.push((i, j, c));
                    neighbors[i].push((j, c));
                    neighbors[j].push((i, c));
                }
                _ => {}
            }
        }
        QuboIndex { names, offset: model.offset, linear, pairs, neighbors }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Energy recomputed from scratch.
    pub fn energy(&self, bits: &[u8]) -> f64 {
        let mut e = self.offset;
        for (i, &b) in bits.iter().enumerate() {
            if b == 1 {
                e += self.linear[i];
            }
        }
        for &(i, j, c) in &self.pairs {
            if bits[i] == 1 && bits[j] == 1 {
                e += c;
            }
        }
        e
    }

    /// Energy change from flipping bit `i`.
    pub fn flip_delta(&self, bits: &[u8], i: usize) -> f64 {
        let field: f64 = self.linear[i] + self.neighbors[i].iter().filter(|(j, _)| bits[*j] == 1).map(|(_, c)| c).sum::<f64>();
        if bits[i] == 0 {
            field
        } else {
            -field
        }
    }

    /// Largest coefficient magnitude, at least 1e-12.
    pub fn max_abs_coefficient(&self) -> f64 {
        self.linear.iter().chain(self.pairs.iter().map(|(_, _, c)| c)).map(|c| c.abs()).fold(1e-12, f64::max)
    }
}
