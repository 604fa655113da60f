use super::GruValues;
use crate::tensor::{Tape, Value};
use crate::Result;

/// One GRU step.
///
/// With update gate `u` and reset gate `r` stacked in the gate matrices:
///
/// ```text
/// [u | r] = sigmoid(x W_g + h U_g + b_g)
/// cand    = tanh(x W_c + (r ∘ h) U_c + b_c)
/// h'      = (1 - u) ∘ h + u ∘ cand
/// ```
pub fn gru_step(tape: &mut Tape, p: &GruValues, x: Value, h_prev: Value) -> Result<Value> {
    let (_, two_h) = tape.shape(p.state_gates);
    let hidden = two_h / 2;

    let xg = tape.matmul(x, p.input_gates)?;
    let hg = tape.matmul(h_prev, p.state_gates)?;
    let sum = tape.add(xg, hg)?;
    let gates_pre = tape.add(sum, p.gate_bias)?;
    let gates = tape.sigmoid(gates_pre);
    let update = tape.slice_cols(gates, 0, hidden)?;
    let reset = tape.slice_cols(gates, hidden, hidden)?;

    let xc = tape.matmul(x, p.input_cand)?;
    let reset_h = tape.mul(reset, h_prev)?;
    let hc = tape.matmul(reset_h, p.state_cand)?;
    let sum_c = tape.add(xc, hc)?;
    let cand_pre = tape.add(sum_c, p.cand_bias)?;
    let cand = tape.tanh(cand_pre);

    let ones = tape.ones(1, hidden);
    let keep = tape.sub(ones, update)?;
    let kept = tape.mul(keep, h_prev)?;
    let new = tape.mul(update, cand)?;
    tape.add(kept, new)
}
