use num_complex::Complex;

use crate::error::{Error, Result};
use crate::Scalar;

/// Largest number of target qubits a [`GateKind::Dense`] payload may act on.
pub const MAX_DENSE_TARGETS: usize = 3;

/// Row-major square complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T> {
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn identity(dim: usize) -> Self {
        let mut data = vec![Complex::new(T::zero(), T::zero()); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = Complex::new(T::one(), T::zero());
        }
        Self { dim, data }
    }

    pub fn from_rows(rows: Vec<Vec<Complex<T>>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidGate("matrix must be square and non-empty".into()));
        }
        Ok(Self {
            dim,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        self.data[row * self.dim + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex<T>) {
        self.data[row * self.dim + col] = value;
    }

    pub fn adjoint(&self) -> Self {
        let mut out = self.clone();
        for r in 0..self.dim {
            for c in 0..self.dim {
                out.set(r, c, self.get(c, r).conj());
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        let n = self.dim;
        let mut out = vec![Complex::new(T::zero(), T::zero()); n * n];
        for r in 0..n {
            for k in 0..n {
                let a = self.get(r, k);
                for c in 0..n {
                    out[r * n + c] = out[r * n + c] + a * rhs.get(k, c);
                }
            }
        }
        Self { dim: n, data: out }
    }

    pub fn scale(&self, factor: Complex<T>) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * factor).collect(),
        }
    }

    /// Largest entry of `|self - other|`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (*a - *b).norm())
            .fold(T::zero(), T::max)
    }

    /// `max |M†M - I|` over all entries.
    pub fn unitarity_deviation(&self) -> T {
        self.adjoint()
            .matmul(self)
            .max_abs_diff(&Self::identity(self.dim))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GateKind<T> {
    X,
    Y,
    Z,
    H,
    /// Rotation about the y axis by the given angle in radians.
    Ry(T),
    /// `diag(1, e^{iφ})`.
    Phase(T),
    Swap,
    /// Arbitrary unitary on up to [`MAX_DENSE_TARGETS`] targets. Target `j`
    /// is bit `j` of the matrix row/column index.
    Dense(DenseMatrix<T>),
}

/// An elementary unitary on `targets`, active only when every qubit in
/// `controls` is `|1⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct Gate<T> {
    kind: GateKind<T>,
    targets: Vec<usize>,
    controls: Vec<usize>,
}

impl<T: Scalar> Gate<T> {
    fn single(kind: GateKind<T>, target: usize) -> Self {
        Self {
            kind,
            targets: vec![target],
            controls: Vec::new(),
        }
    }

    pub fn x(target: usize) -> Self {
        Self::single(GateKind::X, target)
    }

    pub fn y(target: usize) -> Self {
        Self::single(GateKind::Y, target)
    }

    pub fn z(target: usize) -> Self {
        Self::single(GateKind::Z, target)
    }

    pub fn h(target: usize) -> Self {
        Self::single(GateKind::H, target)
    }

    pub fn ry(target: usize, theta: T) -> Self {
        Self::single(GateKind::Ry(theta), target)
    }

    pub fn phase(target: usize, phi: T) -> Self {
        Self::single(GateKind::Phase(phi), target)
    }

    pub fn swap(a: usize, b: usize) -> Result<Self> {
        if a == b {
            return Err(Error::InvalidGate(format!("swap needs two distinct qubits, got {a} twice")));
        }
        Ok(Self {
            kind: GateKind::Swap,
            targets: vec![a, b],
            controls: Vec::new(),
        })
    }

    /// Dense unitary on `targets`; rejects non-unitary payloads.
    pub fn dense(targets: Vec<usize>, matrix: DenseMatrix<T>) -> Result<Self> {
        if targets.is_empty() || targets.len() > MAX_DENSE_TARGETS {
            return Err(Error::InvalidGate(format!(
                "dense unitary must act on 1..={MAX_DENSE_TARGETS} targets, got {}",
                targets.len()
            )));
        }
        if matrix.dim() != 1 << targets.len() {
            return Err(Error::InvalidGate(format!(
                "{}x{} matrix for {} targets",
                matrix.dim(),
                matrix.dim(),
                targets.len()
            )));
        }
        let gate = Self {
            kind: GateKind::Dense(matrix),
            targets,
            controls: Vec::new(),
        };
        gate.check_disjoint()?;
        gate.check_unitary()?;
        Ok(gate)
    }

    /// Controlled Ry, the environment's workhorse.
    pub fn cry(control: usize, target: usize, theta: T) -> Result<Self> {
        Self::ry(target, theta).controlled(control)
    }

    /// Add one more control qubit.
    pub fn controlled(mut self, control: usize) -> Result<Self> {
        self.controls.push(control);
        self.check_disjoint()?;
        Ok(self)
    }

    pub fn kind(&self) -> &GateKind<T> {
        &self.kind
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn controls(&self) -> &[usize] {
        &self.controls
    }

    /// All qubits the gate touches, controls included.
    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.targets.iter().chain(&self.controls).copied()
    }

    pub fn arity(&self) -> usize {
        self.targets.len() + self.controls.len()
    }

    fn check_disjoint(&self) -> Result<()> {
        let all: Vec<usize> = self.qubits().collect();
        for (i, q) in all.iter().enumerate() {
            if all[i + 1..].contains(q) {
                return Err(Error::InvalidGate(format!("qubit {q} used more than once in one gate")));
            }
        }
        Ok(())
    }

    pub(crate) fn check_unitary(&self) -> Result<()> {
        if let GateKind::Dense(m) = &self.kind {
            let deviation = m.unitarity_deviation();
            if deviation > T::tolerance() {
                return Err(Error::NonUnitary {
                    deviation: deviation.as_f64(),
                });
            }
        }
        Ok(())
    }

    pub fn adjoint(&self) -> Self {
        let kind = match &self.kind {
            GateKind::Ry(t) => GateKind::Ry(-*t),
            GateKind::Phase(p) => GateKind::Phase(-*p),
            GateKind::Dense(m) => GateKind::Dense(m.adjoint()),
            k => k.clone(),
        };
        Self {
            kind,
            targets: self.targets.clone(),
            controls: self.controls.clone(),
        }
    }

    /// Matrix of the gate on its targets alone (controls excluded).
    pub fn matrix(&self) -> DenseMatrix<T> {
        let c = |re: f64, im: f64| Complex::new(T::lit(re), T::lit(im));
        let rows = match &self.kind {
            GateKind::X => vec![vec![c(0., 0.), c(1., 0.)], vec![c(1., 0.), c(0., 0.)]],
            GateKind::Y => vec![vec![c(0., 0.), c(0., -1.)], vec![c(0., 1.), c(0., 0.)]],
            GateKind::Z => vec![vec![c(1., 0.), c(0., 0.)], vec![c(0., 0.), c(-1., 0.)]],
            GateKind::H => {
                let s = T::FRAC_1_SQRT_2();
                let p = Complex::new(s, T::zero());
                vec![vec![p, p], vec![p, -p]]
            }
            GateKind::Ry(theta) => {
                let half = *theta / T::lit(2.0);
                let (s, co) = (Complex::new(half.sin(), T::zero()), Complex::new(half.cos(), T::zero()));
                vec![vec![co, -s], vec![s, co]]
            }
            GateKind::Phase(phi) => vec![
                vec![c(1., 0.), c(0., 0.)],
                vec![c(0., 0.), Complex::from_polar(T::one(), *phi)],
            ],
            GateKind::Swap => {
                let mut m = DenseMatrix::identity(4);
                m.set(1, 1, c(0., 0.));
                m.set(2, 2, c(0., 0.));
                m.set(1, 2, c(1., 0.));
                m.set(2, 1, c(1., 0.));
                return m;
            }
            GateKind::Dense(m) => return m.clone(),
        };
        DenseMatrix::from_rows(rows).expect("fixed gate matrices are square")
    }

    /// Apply in place to a full amplitude vector. Indices must already be
    /// validated against the register size.
    pub(crate) fn apply(&self, amps: &mut [Complex<T>]) {
        let ctrl_mask = self.controls.iter().fold(0usize, |m, &c| m | (1 << c));
        let active = |i: usize| i & ctrl_mask == ctrl_mask;
        match &self.kind {
            GateKind::X => for_pairs(amps.len(), self.targets[0], |i, j| {
                if active(i) {
                    amps.swap(i, j);
                }
            }),
            GateKind::Z => for_pairs(amps.len(), self.targets[0], |i, j| {
                if active(i) {
                    amps[j] = -amps[j];
                }
            }),
            GateKind::Phase(phi) => {
                let w = Complex::from_polar(T::one(), *phi);
                for_pairs(amps.len(), self.targets[0], |i, j| {
                    if active(i) {
                        amps[j] = amps[j] * w;
                    }
                })
            }
            GateKind::Swap => {
                let (a, b) = (1usize << self.targets[0], 1usize << self.targets[1]);
                for i in 0..amps.len() {
                    if i & a != 0 && i & b == 0 && active(i) {
                        amps.swap(i, i ^ a ^ b);
                    }
                }
            }
            GateKind::Dense(m) if self.targets.len() > 1 => apply_dense(amps, &self.targets, ctrl_mask, m),
            _ => {
                let m = self.matrix();
                let (m00, m01, m10, m11) = (m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1));
                for_pairs(amps.len(), self.targets[0], |i, j| {
                    if active(i) {
                        let (a, b) = (amps[i], amps[j]);
                        amps[i] = m00 * a + m01 * b;
                        amps[j] = m10 * a + m11 * b;
                    }
                })
            }
        }
    }
}

/// Visit every index pair `(i, i | 1<<target)` with the target bit of `i` clear.
fn for_pairs(len: usize, target: usize, mut f: impl FnMut(usize, usize)) {
    let bit = 1usize << target;
    let low = bit - 1;
    for k in 0..len / 2 {
        let i = ((k >> target) << (target + 1)) | (k & low);
        f(i, i | bit);
    }
}

fn apply_dense<T: Scalar>(amps: &mut [Complex<T>], targets: &[usize], ctrl_mask: usize, m: &DenseMatrix<T>) {
    let dim = m.dim();
    let target_mask = targets.iter().fold(0usize, |acc, &t| acc | (1 << t));
    let offsets: Vec<usize> = (0..dim)
        .map(|s| {
            targets
                .iter()
                .enumerate()
                .filter(|(j, _)| s >> j & 1 == 1)
                .fold(0usize, |acc, (_, &t)| acc | (1 << t))
        })
        .collect();
    let mut local = vec![Complex::new(T::zero(), T::zero()); dim];
    for base in 0..amps.len() {
        if base & target_mask != 0 || base & ctrl_mask != ctrl_mask {
            continue;
        }
        for (s, off) in offsets.iter().enumerate() {
            local[s] = amps[base | off];
        }
        for (r, off) in offsets.iter().enumerate() {
            amps[base | off] = (0..dim).fold(Complex::new(T::zero(), T::zero()), |acc, c| acc + m.get(r, c) * local[c]);
        }
    }
}
