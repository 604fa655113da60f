use super::{Tape, Tensor, Value};
use crate::Result;

/// Checks the tape's analytic gradients against central finite differences.
///
/// `f` rebuilds the scalar function of interest on a fresh tape from leaf
/// values for `params`; it is called once per perturbed coordinate. Returns
/// the worst relative error over all parameter coordinates, where the
/// denominator is floored at 1e-3 so finite-difference noise on near-zero
/// gradients does not register as error.
pub fn grad_check<F>(f: &F, params: &[Tensor], step: f64) -> Result<f64>
where
    F: Fn(&mut Tape, &[Value]) -> Result<Value>,
{
    let analytic = analytic_grads(f, params)?;

    let eval = |params: &[Tensor]| -> Result<f64> {
        let mut tape = Tape::new();
        let leaves: Vec<Value> = params.iter().map(|p| tape.leaf(p)).collect();
        let loss = f(&mut tape, &leaves)?;
        Ok(tape.scalar(loss))
    };

    let mut worst = 0.0_f64;
    let mut work: Vec<Tensor> = params.to_vec();
    for (pi, param) in params.iter().enumerate() {
        for j in 0..param.numel() {
            let orig = param.data()[j];
            work[pi].data_mut()[j] = orig + step;
            let up = eval(&work)?;
            work[pi].data_mut()[j] = orig - step;
            let down = eval(&work)?;
            work[pi].data_mut()[j] = orig;

            let numeric = (up - down) / (2.0 * step);
            let a = analytic[pi].data()[j];
            let denom = a.abs().max(numeric.abs()).max(1e-3);
            worst = worst.max((a - numeric).abs() / denom);
        }
    }
    Ok(worst)
}

/// One forward/backward pass; gradients per parameter, in order.
pub fn analytic_grads<F>(f: &F, params: &[Tensor]) -> Result<Vec<Tensor>>
where
    F: Fn(&mut Tape, &[Value]) -> Result<Value>,
{
    let mut tape = Tape::new();
    let leaves: Vec<Value> = params.iter().map(|p| tape.leaf(p)).collect();
    let loss = f(&mut tape, &leaves)?;
    tape.backward(loss)?;
    Ok(leaves
        .iter()
        .map(|&v| tape.grad_tensor(v).expect("backward has run"))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng as _;

    const STEP: f64 = 1e-5;
    const TOL: f64 = 1e-5;

    fn random_tensor(rows: usize, cols: usize, seed: u64) -> Tensor {
        let mut rng = rng_from_seed(seed);
        let data = (0..rows * cols)
            .map(|_| rng.random_range(-2.0..2.0))
            .collect();
        Tensor::matrix(rows, cols, data).unwrap()
    }

    #[test]
    fn matmul_gradient_matches_finite_differences() {
        let a = random_tensor(3, 4, 1);
        let b = random_tensor(4, 2, 2);
        let f = |tape: &mut Tape, p: &[Value]| {
            let c = tape.matmul(p[0], p[1])?;
            Ok(tape.sum(c))
        };
        let err = grad_check(&f, &[a, b], STEP).unwrap();
        assert!(err < 1e-6, "matmul grad err {err}");
    }

    #[test]
    fn activation_gradients() {
        let x = random_tensor(1, 6, 3);
        let sig = |tape: &mut Tape, p: &[Value]| {
            let y = tape.sigmoid(p[0]);
            Ok(tape.sum(y))
        };
        let tan = |tape: &mut Tape, p: &[Value]| {
            let y = tape.tanh(p[0]);
            Ok(tape.sum(y))
        };
        assert!(grad_check(&sig, std::slice::from_ref(&x), STEP).unwrap() < TOL);
        assert!(grad_check(&tan, std::slice::from_ref(&x), STEP).unwrap() < TOL);
    }

    #[test]
    fn elementwise_gradients() {
        let a = random_tensor(2, 3, 4);
        let b = random_tensor(2, 3, 5);
        for op in 0..3 {
            let f = move |tape: &mut Tape, p: &[Value]| {
                let y = match op {
                    0 => tape.add(p[0], p[1])?,
                    1 => tape.sub(p[0], p[1])?,
                    _ => tape.mul(p[0], p[1])?,
                };
                // a nonlinearity so the two inputs get distinct gradients
                let y = tape.tanh(y);
                Ok(tape.sum(y))
            };
            let err = grad_check(&f, &[a.clone(), b.clone()], STEP).unwrap();
            assert!(err < TOL, "op {op} grad err {err}");
        }
    }

    #[test]
    fn concat_gradient_splits_back() {
        let a = random_tensor(1, 3, 6);
        let b = random_tensor(1, 2, 7);
        let f = |tape: &mut Tape, p: &[Value]| {
            let c = tape.concat(p[0], p[1])?;
            let y = tape.tanh(c);
            Ok(tape.sum(y))
        };
        assert!(grad_check(&f, &[a, b], STEP).unwrap() < TOL);
    }

    #[test]
    fn softmax_and_cross_entropy_gradients() {
        let x = random_tensor(1, 5, 8);
        let f = |tape: &mut Tape, p: &[Value]| {
            let s = tape.softmax(p[0])?;
            tape.cross_entropy(s, 2)
        };
        assert!(grad_check(&f, std::slice::from_ref(&x), STEP).unwrap() < TOL);
    }

    #[test]
    fn embed_gradient_matches_finite_differences() {
        let table = random_tensor(4, 3, 9);
        let f = |tape: &mut Tape, p: &[Value]| {
            let e0 = tape.embed(p[0], 2)?;
            let e1 = tape.embed(p[0], 2)?;
            let s = tape.add(e0, e1)?;
            let y = tape.tanh(s);
            Ok(tape.sum(y))
        };
        assert!(grad_check(&f, std::slice::from_ref(&table), STEP).unwrap() < TOL);
    }

    #[test]
    fn slice_stack_addrow_transpose_gradients() {
        let m = random_tensor(3, 4, 10);
        let r = random_tensor(1, 4, 11);
        let f = |tape: &mut Tape, p: &[Value]| {
            let s = tape.add_row(p[0], p[1])?;
            let left = tape.slice_cols(s, 0, 2)?;
            let right = tape.slice_cols(s, 2, 2)?;
            let prod = tape.mul(left, right)?;
            let t = tape.transpose(prod);
            let y = tape.tanh(t);
            Ok(tape.sum(y))
        };
        assert!(grad_check(&f, &[m, r], STEP).unwrap() < TOL);
    }
}
