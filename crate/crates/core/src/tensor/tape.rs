use super::Tensor;
use crate::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Value(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul { a: Value, b: Value },
    Transpose { a: Value },
    Add { a: Value, b: Value },
    Sub { a: Value, b: Value },
    Mul { a: Value, b: Value },
    AddRow { mat: Value, row: Value },
    Sigmoid { a: Value },
    Tanh { a: Value },
    Softmax { a: Value },
    Concat { a: Value, b: Value },
    SliceCols { a: Value, start: usize },
    StackRows { rows: Vec<Value> },
    Embed { table: Value, id: usize },
    Sum { a: Value },
    CrossEntropy { dist: Value, target: usize },
}

struct Node {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    op: Op,
}

/// A dynamic computation tape recording rank-2 tensor operations.
///
/// Nodes are appended in topological order (inputs always precede their
/// consumers), so one reverse sweep in [`Tape::backward`] visits every node
/// exactly once and accumulates gradients linearly in fan-out.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    grads: Vec<Vec<f64>>,
    backward_done: bool,
}

const PROB_FLOOR: f64 = 1e-12;

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Inserts a tensor as a leaf. Gradients for any leaf can be read back
    /// with [`Tape::grad`] after [`Tape::backward`].
    pub fn leaf(&mut self, t: &Tensor) -> Value {
        debug_assert_eq!(t.shape().len(), 2, "tape works with rank-2 tensors");
        self.push(t.rows(), t.cols(), t.data().to_vec(), Op::Leaf)
    }

    /// Leaf filled with ones.
    pub fn ones(&mut self, rows: usize, cols: usize) -> Value {
        self.push(rows, cols, vec![1.0; rows * cols], Op::Leaf)
    }

    fn push(&mut self, rows: usize, cols: usize, data: Vec<f64>, op: Op) -> Value {
        debug_assert_eq!(data.len(), rows * cols);
        self.nodes.push(Node {
            rows,
            cols,
            data,
            op,
        });
        Value(self.nodes.len() - 1)
    }

    fn node(&self, v: Value) -> &Node {
        &self.nodes[v.0]
    }

    pub fn data(&self, v: Value) -> &[f64] {
        &self.node(v).data
    }

    pub fn shape(&self, v: Value) -> (usize, usize) {
        let n = self.node(v);
        (n.rows, n.cols)
    }

    /// Copies a node's current values out as an owned tensor.
    pub fn tensor(&self, v: Value) -> Tensor {
        let n = self.node(v);
        Tensor::new(vec![n.rows, n.cols], n.data.clone()).expect("node data consistent")
    }

    /// Value of a `[1, 1]` node.
    pub fn scalar(&self, v: Value) -> f64 {
        let n = self.node(v);
        debug_assert_eq!(n.data.len(), 1, "scalar() on non-scalar node");
        n.data[0]
    }

    // ---- forward operations -------------------------------------------

    /// `a[m,k] × b[k,n] -> [m,n]`.
    pub fn matmul(&mut self, a: Value, b: Value) -> Result<Value> {
        let (m, k) = self.shape(a);
        let (k2, n) = self.shape(b);
        if k != k2 {
            return Err(Error::Shape(format!(
                "matmul: [{m}x{k}] incompatible with [{k2}x{n}]"
            )));
        }
        let data = matmul_raw(self.data(a), self.data(b), m, k, n);
        Ok(self.push(m, n, data, Op::MatMul { a, b }))
    }

    pub fn transpose(&mut self, a: Value) -> Value {
        let (r, c) = self.shape(a);
        let data = transpose_raw(self.data(a), r, c);
        self.push(c, r, data, Op::Transpose { a })
    }

    pub fn add(&mut self, a: Value, b: Value) -> Result<Value> {
        self.zip("add", a, b, |x, y| x + y, |a, b| Op::Add { a, b })
    }

    pub fn sub(&mut self, a: Value, b: Value) -> Result<Value> {
        self.zip("sub", a, b, |x, y| x - y, |a, b| Op::Sub { a, b })
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: Value, b: Value) -> Result<Value> {
        self.zip("mul", a, b, |x, y| x * y, |a, b| Op::Mul { a, b })
    }

    fn zip(
        &mut self,
        name: &str,
        a: Value,
        b: Value,
        f: impl Fn(f64, f64) -> f64,
        op: impl Fn(Value, Value) -> Op,
    ) -> Result<Value> {
        let (ra, ca) = self.shape(a);
        let (rb, cb) = self.shape(b);
        if (ra, ca) != (rb, cb) {
            return Err(Error::Shape(format!(
                "{name}: [{ra}x{ca}] vs [{rb}x{cb}]"
            )));
        }
        let data = self
            .data(a)
            .iter()
            .zip(self.data(b))
            .map(|(&x, &y)| f(x, y))
            .collect();
        Ok(self.push(ra, ca, data, op(a, b)))
    }

    /// Adds a `[1, c]` row vector to every row of a `[r, c]` matrix.
    pub fn add_row(&mut self, mat: Value, row: Value) -> Result<Value> {
        let (r, c) = self.shape(mat);
        let (rr, rc) = self.shape(row);
        if rr != 1 || rc != c {
            return Err(Error::Shape(format!(
                "add_row: matrix [{r}x{c}] with row [{rr}x{rc}]"
            )));
        }
        let row_data = self.data(row).to_vec();
        let data = self
            .data(mat)
            .iter()
            .enumerate()
            .map(|(i, &x)| x + row_data[i % c])
            .collect();
        Ok(self.push(r, c, data, Op::AddRow { mat, row }))
    }

    pub fn sigmoid(&mut self, a: Value) -> Value {
        let (r, c) = self.shape(a);
        let data = self.data(a).iter().map(|&x| sigmoid(x)).collect();
        self.push(r, c, data, Op::Sigmoid { a })
    }

    pub fn tanh(&mut self, a: Value) -> Value {
        let (r, c) = self.shape(a);
        let data = self.data(a).iter().map(|&x| x.tanh()).collect();
        self.push(r, c, data, Op::Tanh { a })
    }

    /// Softmax over the whole buffer (max-subtracted for stability). The
    /// result keeps the input's shape and sums to 1.
    pub fn softmax(&mut self, a: Value) -> Result<Value> {
        let (r, c) = self.shape(a);
        let x = self.data(a);
        if x.is_empty() {
            return Err(Error::Shape("softmax of an empty tensor".into()));
        }
        let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = x.iter().map(|&v| (v - m).exp()).collect();
        let sum: f64 = exps.iter().sum();
        let data = exps.iter().map(|&e| e / sum).collect();
        Ok(self.push(r, c, data, Op::Softmax { a }))
    }

    /// Concatenates along columns: `[r, ca] ++ [r, cb] -> [r, ca + cb]`.
    pub fn concat(&mut self, a: Value, b: Value) -> Result<Value> {
        let (ra, ca) = self.shape(a);
        let (rb, cb) = self.shape(b);
        if ra != rb {
            return Err(Error::Shape(format!(
                "concat: row counts differ, [{ra}x{ca}] vs [{rb}x{cb}]"
            )));
        }
        let mut data = Vec::with_capacity(ra * (ca + cb));
        for i in 0..ra {
            data.extend_from_slice(&self.data(a)[i * ca..(i + 1) * ca]);
            data.extend_from_slice(&self.data(b)[i * cb..(i + 1) * cb]);
        }
        Ok(self.push(ra, ca + cb, data, Op::Concat { a, b }))
    }

    /// Column range `[start, start + len)` of every row.
    pub fn slice_cols(&mut self, a: Value, start: usize, len: usize) -> Result<Value> {
        let (r, c) = self.shape(a);
        if start + len > c {
            return Err(Error::Shape(format!(
                "slice_cols: [{start}, {}) out of [{r}x{c}]",
                start + len
            )));
        }
        let mut data = Vec::with_capacity(r * len);
        for i in 0..r {
            data.extend_from_slice(&self.data(a)[i * c + start..i * c + start + len]);
        }
        Ok(self.push(r, len, data, Op::SliceCols { a, start }))
    }

    /// Stacks `[1, c]` row vectors into an `[n, c]` matrix.
    pub fn stack_rows(&mut self, rows: &[Value]) -> Result<Value> {
        if rows.is_empty() {
            return Err(Error::Shape("stack_rows of zero rows".into()));
        }
        let (_, c) = self.shape(rows[0]);
        let mut data = Vec::with_capacity(rows.len() * c);
        for &v in rows {
            let (r, vc) = self.shape(v);
            if r != 1 || vc != c {
                return Err(Error::Shape(format!(
                    "stack_rows: expected [1x{c}], got [{r}x{vc}]"
                )));
            }
            data.extend_from_slice(self.data(v));
        }
        Ok(self.push(
            rows.len(),
            c,
            data,
            Op::StackRows {
                rows: rows.to_vec(),
            },
        ))
    }

    /// Row lookup in an embedding table `[V, d] -> [1, d]`.
    pub fn embed(&mut self, table: Value, id: usize) -> Result<Value> {
        let (v, d) = self.shape(table);
        if id >= v {
            return Err(Error::TokenOutOfRange { id, size: v });
        }
        let data = self.data(table)[id * d..(id + 1) * d].to_vec();
        Ok(self.push(1, d, data, Op::Embed { table, id }))
    }

    /// Sum of all elements, as a `[1, 1]` scalar.
    pub fn sum(&mut self, a: Value) -> Value {
        let s: f64 = self.data(a).iter().sum();
        self.push(1, 1, vec![s], Op::Sum { a })
    }

    /// Negative log-likelihood of `target` under a probability vector:
    /// `-ln(max(dist[target], 1e-12))`, as a `[1, 1]` scalar.
    pub fn cross_entropy(&mut self, dist: Value, target: usize) -> Result<Value> {
        let n = self.data(dist).len();
        if target >= n {
            return Err(Error::TokenOutOfRange {
                id: target,
                size: n,
            });
        }
        // f64::max ignores NaN, which would launder a poisoned input into
        // a finite loss; keep NaN flowing so callers can abort on it.
        let raw = self.data(dist)[target];
        let p = if raw.is_nan() { raw } else { raw.max(PROB_FLOOR) };
        Ok(self.push(1, 1, vec![-p.ln()], Op::CrossEntropy { dist, target }))
    }

    // ---- backward ------------------------------------------------------

    /// Reverse sweep from a `[1, 1]` loss node. After this call every node's
    /// gradient holds `d loss / d node`. Calling it twice on one tape is an
    /// error; graphs are rebuilt per forward pass instead of reset.
    pub fn backward(&mut self, loss: Value) -> Result<()> {
        if self.backward_done {
            return Err(Error::BackwardTwice);
        }
        let (r, c) = self.shape(loss);
        if (r, c) != (1, 1) {
            return Err(Error::Shape(format!(
                "backward needs a [1x1] loss, got [{r}x{c}]"
            )));
        }
        self.backward_done = true;
        self.grads = self.nodes.iter().map(|n| vec![0.0; n.data.len()]).collect();
        self.grads[loss.0][0] = 1.0;

        for i in (0..self.nodes.len()).rev() {
            // Gradient buffers never alias their inputs (inputs strictly
            // precede node i), so take the output grad by value.
            let g = std::mem::take(&mut self.grads[i]);
            match self.nodes[i].op.clone() {
                Op::Leaf => {}
                Op::MatMul { a, b } => {
                    let (m, k) = self.shape(a);
                    let (_, n) = self.shape(b);
                    let bt = transpose_raw(self.data(b), k, n);
                    let da = matmul_raw(&g, &bt, m, n, k);
                    let at = transpose_raw(self.data(a), m, k);
                    let db = matmul_raw(&at, &g, k, m, n);
                    accumulate(&mut self.grads[a.0], &da);
                    accumulate(&mut self.grads[b.0], &db);
                }
                Op::Transpose { a } => {
                    let (r, c) = self.shape(a);
                    let da = transpose_raw(&g, c, r);
                    accumulate(&mut self.grads[a.0], &da);
                }
                Op::Add { a, b } => {
                    accumulate(&mut self.grads[a.0], &g);
                    accumulate(&mut self.grads[b.0], &g);
                }
                Op::Sub { a, b } => {
                    accumulate(&mut self.grads[a.0], &g);
                    for (dst, gi) in self.grads[b.0].iter_mut().zip(&g) {
                        *dst -= gi;
                    }
                }
                Op::Mul { a, b } => {
                    for j in 0..g.len() {
                        self.grads[a.0][j] += g[j] * self.nodes[b.0].data[j];
                    }
                    for j in 0..g.len() {
                        self.grads[b.0][j] += g[j] * self.nodes[a.0].data[j];
                    }
                }
                Op::AddRow { mat, row } => {
                    let c = self.nodes[row.0].data.len();
                    accumulate(&mut self.grads[mat.0], &g);
                    for (j, gi) in g.iter().enumerate() {
                        self.grads[row.0][j % c] += gi;
                    }
                }
                Op::Sigmoid { a } => {
                    for j in 0..g.len() {
                        let s = self.nodes[i].data[j];
                        self.grads[a.0][j] += g[j] * s * (1.0 - s);
                    }
                }
                Op::Tanh { a } => {
                    for j in 0..g.len() {
                        let t = self.nodes[i].data[j];
                        self.grads[a.0][j] += g[j] * (1.0 - t * t);
                    }
                }
                Op::Softmax { a } => {
                    let y = &self.nodes[i].data;
                    let dot: f64 = g.iter().zip(y).map(|(gi, yi)| gi * yi).sum();
                    for j in 0..g.len() {
                        self.grads[a.0][j] += y[j] * (g[j] - dot);
                    }
                }
                Op::Concat { a, b } => {
                    let (ra, ca) = self.shape(a);
                    let (_, cb) = self.shape(b);
                    let c = ca + cb;
                    for i_row in 0..ra {
                        for j in 0..ca {
                            self.grads[a.0][i_row * ca + j] += g[i_row * c + j];
                        }
                        for j in 0..cb {
                            self.grads[b.0][i_row * cb + j] += g[i_row * c + ca + j];
                        }
                    }
                }
                Op::SliceCols { a, start } => {
                    let (r, c) = self.shape(a);
                    let len = self.nodes[i].cols;
                    for i_row in 0..r {
                        for j in 0..len {
                            self.grads[a.0][i_row * c + start + j] += g[i_row * len + j];
                        }
                    }
                }
                Op::StackRows { rows } => {
                    let c = self.nodes[i].cols;
                    for (i_row, v) in rows.iter().enumerate() {
                        accumulate(&mut self.grads[v.0], &g[i_row * c..(i_row + 1) * c]);
                    }
                }
                Op::Embed { table, id } => {
                    let d = g.len();
                    accumulate(&mut self.grads[table.0][id * d..(id + 1) * d], &g);
                }
                Op::Sum { a } => {
                    for dst in self.grads[a.0].iter_mut() {
                        *dst += g[0];
                    }
                }
                Op::CrossEntropy { dist, target } => {
                    let p = self.nodes[dist.0].data[target];
                    // Below the floor the forward value is a constant.
                    if p >= PROB_FLOOR {
                        self.grads[dist.0][target] -= g[0] / p;
                    }
                }
            }
            self.grads[i] = g;
        }
        Ok(())
    }

    /// Gradient of the loss w.r.t. a node, available after [`Tape::backward`].
    pub fn grad(&self, v: Value) -> Option<&[f64]> {
        if self.backward_done {
            Some(&self.grads[v.0])
        } else {
            None
        }
    }

    /// Gradient as an owned tensor with the node's shape.
    pub fn grad_tensor(&self, v: Value) -> Option<Tensor> {
        let (r, c) = self.shape(v);
        self.grad(v)
            .map(|g| Tensor::new(vec![r, c], g.to_vec()).expect("grad shape consistent"))
    }
}

/// Numerically stable logistic sigmoid; output is strictly inside (0, 1)
/// for all finite inputs. Past |x| ≈ 36.7 the exact value rounds to 0 or 1
/// in f64, so the tails are clamped to the nearest open-interval neighbors.
pub fn sigmoid(x: f64) -> f64 {
    let s = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    s.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

fn matmul_raw(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for p in 0..k {
            let av = a[i * k + p];
            if av == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    out
}

fn transpose_raw(a: &[f64], r: usize, c: usize) -> Vec<f64> {
    let mut out = vec![0.0; r * c];
    for i in 0..r {
        for j in 0..c {
            out[j * r + i] = a[i * c + j];
        }
    }
    out
}

fn accumulate(dst: &mut [f64], src: &[f64]) {
    debug_assert_eq!(dst.len(), src.len());
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(rows: usize, cols: usize, data: &[f64]) -> Tensor {
        Tensor::matrix(rows, cols, data.to_vec()).unwrap()
    }

    #[test]
    fn matmul_identity() {
        let mut tape = Tape::new();
        let a = tape.leaf(&t(2, 2, &[1.0, 0.0, 0.0, 1.0]));
        let b = tape.leaf(&t(2, 1, &[3.0, 4.0]));
        let c = tape.matmul(a, b).unwrap();
        assert_eq!(tape.data(c), &[3.0, 4.0]);
        assert_eq!(tape.shape(c), (2, 1));
    }

    #[test]
    fn matmul_dot() {
        let mut tape = Tape::new();
        let a = tape.leaf(&t(1, 2, &[1.0, 2.0]));
        let b = tape.leaf(&t(2, 1, &[3.0, 4.0]));
        let c = tape.matmul(a, b).unwrap();
        assert_eq!(tape.data(c), &[11.0]);
    }

    #[test]
    fn matmul_shape_mismatch_errors() {
        let mut tape = Tape::new();
        let a = tape.leaf(&t(1, 3, &[1.0, 2.0, 3.0]));
        let b = tape.leaf(&t(2, 1, &[3.0, 4.0]));
        assert!(matches!(tape.matmul(a, b), Err(crate::Error::Shape(_))));
    }

    #[test]
    fn sigmoid_values() {
        let mut tape = Tape::new();
        let x = tape.leaf(&Tensor::row(vec![0.0, -50.0, 1.0]));
        let y = tape.sigmoid(x);
        let out = tape.data(y);
        assert_eq!(out[0], 0.5);
        assert!(out[1] > 0.0 && out[1] < 1e-20 && out[1].is_finite());
        assert!((out[2] - 0.7310585786).abs() < 1e-9);
    }

    #[test]
    fn tanh_values() {
        let mut tape = Tape::new();
        let x = tape.leaf(&Tensor::row(vec![0.0, 50.0]));
        let y = tape.tanh(x);
        assert_eq!(tape.data(y)[0], 0.0);
        assert!((tape.data(y)[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn softmax_symmetry_and_stability() {
        let mut tape = Tape::new();
        let a = tape.leaf(&Tensor::row(vec![0.0, 0.0]));
        let sa = tape.softmax(a).unwrap();
        assert_eq!(tape.data(sa), &[0.5, 0.5]);

        let b = tape.leaf(&Tensor::row(vec![1000.0, 1000.0, 1000.0]));
        let sb = tape.softmax(b).unwrap();
        for &p in tape.data(sb) {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_direct_formula() {
        // Independent route: plain exp ratios without max subtraction.
        let xs = [1.0_f64, 2.0, 3.0];
        let denom: f64 = xs.iter().map(|&x| x.exp()).sum();
        let expected: Vec<f64> = xs.iter().map(|&x| x.exp() / denom).collect();

        let mut tape = Tape::new();
        let x = tape.leaf(&Tensor::row(xs.to_vec()));
        let s = tape.softmax(x).unwrap();
        for (got, want) in tape.data(s).iter().zip(&expected) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((tape.data(s)[0] - 0.09003057317038046).abs() < 1e-12);
    }

    #[test]
    fn elementwise_identities() {
        let mut tape = Tape::new();
        let a = tape.leaf(&Tensor::row(vec![1.5, -2.0, 0.25]));
        let ones = tape.ones(1, 3);
        let zeros = tape.leaf(&Tensor::row(vec![0.0; 3]));
        let a1 = tape.mul(a, ones).unwrap();
        let a0 = tape.mul(a, zeros).unwrap();
        assert_eq!(tape.data(a1), tape.data(a));
        assert_eq!(tape.data(a0), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn concat_cases() {
        let mut tape = Tape::new();
        let empty = tape.leaf(&Tensor::row(vec![]));
        let x = tape.leaf(&Tensor::row(vec![7.0, 8.0]));
        let ex = tape.concat(empty, x).unwrap();
        assert_eq!(tape.data(ex), &[7.0, 8.0]);

        let a = tape.leaf(&Tensor::row(vec![1.0]));
        let b = tape.leaf(&Tensor::row(vec![2.0]));
        let ab = tape.concat(a, b).unwrap();
        assert_eq!(tape.data(ab), &[1.0, 2.0]);
    }

    #[test]
    fn embed_is_row_extraction() {
        let mut tape = Tape::new();
        let table = tape.leaf(&t(3, 2, &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]));
        let e = tape.embed(table, 1).unwrap();
        assert_eq!(tape.data(e), &[2.0, 3.0]);
        assert!(matches!(
            tape.embed(table, 3),
            Err(crate::Error::TokenOutOfRange { id: 3, size: 3 })
        ));
    }

    #[test]
    fn embed_gradient_hits_selected_row_only() {
        let mut tape = Tape::new();
        let table = tape.leaf(&t(3, 2, &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]));
        let e = tape.embed(table, 1).unwrap();
        let loss = tape.sum(e);
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(table).unwrap(), &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn embed_same_id_twice_doubles_gradient() {
        // Two paths through the same row must sum: d(sum(e1 + e2))/d row = 2.
        let mut tape = Tape::new();
        let table = tape.leaf(&t(2, 2, &[0.0, 1.0, 2.0, 3.0]));
        let e1 = tape.embed(table, 0).unwrap();
        let e2 = tape.embed(table, 0).unwrap();
        let s = tape.add(e1, e2).unwrap();
        let loss = tape.sum(s);
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(table).unwrap(), &[2.0, 2.0, 0.0, 0.0]);
    }

    #[test]
    fn cross_entropy_values() {
        let mut tape = Tape::new();
        let onehot = tape.leaf(&Tensor::row(vec![0.0, 1.0, 0.0]));
        let l0 = tape.cross_entropy(onehot, 1).unwrap();
        assert_eq!(tape.scalar(l0), 0.0);

        let v = 5;
        let uniform = tape.leaf(&Tensor::row(vec![1.0 / v as f64; v]));
        let lu = tape.cross_entropy(uniform, 2).unwrap();
        assert!((tape.scalar(lu) - (v as f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn backward_twice_is_an_error() {
        let mut tape = Tape::new();
        let x = tape.leaf(&Tensor::scalar(2.0));
        let y = tape.mul(x, x).unwrap();
        tape.backward(y).unwrap();
        assert_eq!(tape.grad(x).unwrap(), &[4.0]);
        assert!(matches!(tape.backward(y), Err(crate::Error::BackwardTwice)));
    }

    #[test]
    fn fan_out_accumulates_linearly() {
        // x feeds two consumers; the single reverse sweep must sum both paths.
        let mut tape = Tape::new();
        let x = tape.leaf(&Tensor::row(vec![3.0]));
        let a = tape.add(x, x).unwrap(); // 2x
        let b = tape.mul(x, x).unwrap(); // x^2
        let s = tape.add(a, b).unwrap();
        let loss = tape.sum(s);
        tape.backward(loss).unwrap();
        // d(2x + x^2)/dx = 2 + 2x = 8
        assert_eq!(tape.grad(x).unwrap(), &[8.0]);
    }

    #[test]
    fn slice_and_stack_round_trip() {
        let mut tape = Tape::new();
        let r0 = tape.leaf(&Tensor::row(vec![1.0, 2.0]));
        let r1 = tape.leaf(&Tensor::row(vec![3.0, 4.0]));
        let m = tape.stack_rows(&[r0, r1]).unwrap();
        assert_eq!(tape.shape(m), (2, 2));
        let col = tape.slice_cols(m, 1, 1).unwrap();
        assert_eq!(tape.data(col), &[2.0, 4.0]);
    }

    proptest! {
        #[test]
        fn softmax_sums_to_one_and_shift_invariant(
            xs in proptest::collection::vec(-30.0_f64..30.0, 1..12),
            shift in -100.0_f64..100.0,
        ) {
            let mut tape = Tape::new();
            let a = tape.leaf(&Tensor::row(xs.clone()));
            let sa = tape.softmax(a).unwrap();
            let sum: f64 = tape.data(sa).iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);

            let shifted: Vec<f64> = xs.iter().map(|x| x + shift).collect();
            let b = tape.leaf(&Tensor::row(shifted));
            let sb = tape.softmax(b).unwrap();
            for (p, q) in tape.data(sa).iter().zip(tape.data(sb)) {
                prop_assert!((p - q).abs() < 1e-12);
            }
        }

        #[test]
        fn sigmoid_strictly_inside_unit_interval(x in -700.0_f64..700.0) {
            let s = sigmoid(x);
            prop_assert!(s > 0.0 && s < 1.0);
        }
    }
}
