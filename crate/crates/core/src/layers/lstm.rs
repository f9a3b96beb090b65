//! LSTM cell and backpropagation through time.
//!
//! Gate equations over the concatenation `[h_prev, x_t]`:
//!
//! ```text
//! f_t = σ(W_f·[h_prev, x_t] + b_f)        forget gate
//! i_t = σ(W_i·[h_prev, x_t] + b_i)        input gate
//! c̃_t = tanh(W_c·[h_prev, x_t] + b_c)     candidate cell
//! c_t = f_t ⊙ c_prev + i_t ⊙ c̃_t
//! o_t = σ(W_o·[h_prev, x_t] + b_o)        output gate
//! h_t = o_t ⊙ tanh(c_t)
//! ```
//!
//! Gate combinations are elementwise products. No peephole connections.

use crate::error::{Error, Result};
use crate::layers::glorot_uniform;
use crate::tensor::rng::SeededRng;
use crate::tensor::{matvec, matvec_transposed, sigmoid, Scalar, Tensor};

#[derive(Clone, Debug)]
pub struct LstmCell<T = f32> {
    /// Gate weights, each `[H × (H+D)]`.
    pub w_f: Tensor<T>,
    pub w_i: Tensor<T>,
    pub w_c: Tensor<T>,
    pub w_o: Tensor<T>,
    /// Gate biases, each `[H]`.
    pub b_f: Tensor<T>,
    pub b_i: Tensor<T>,
    pub b_c: Tensor<T>,
    pub b_o: Tensor<T>,
}

#[derive(Clone, Debug)]
pub struct LstmState<T> {
    pub h: Tensor<T>,
    pub c: Tensor<T>,
}

impl<T: Scalar> LstmState<T> {
    pub fn zeros(hidden: usize) -> Self {
        LstmState {
            h: Tensor::zeros([hidden]),
            c: Tensor::zeros([hidden]),
        }
    }
}

/// Per-step activations captured for BPTT.
#[derive(Clone, Debug)]
pub struct LstmStepCache<T> {
    concat: Vec<T>,
    f: Vec<T>,
    i: Vec<T>,
    ctilde: Vec<T>,
    o: Vec<T>,
    c_prev: Vec<T>,
    tanh_c: Vec<T>,
}

/// Gradients for all eight parameter tensors.
#[derive(Clone, Debug)]
pub struct LstmGrads<T> {
    pub w_f: Tensor<T>,
    pub w_i: Tensor<T>,
    pub w_c: Tensor<T>,
    pub w_o: Tensor<T>,
    pub b_f: Tensor<T>,
    pub b_i: Tensor<T>,
    pub b_c: Tensor<T>,
    pub b_o: Tensor<T>,
}

impl<T: Scalar> LstmGrads<T> {
    pub fn zeros(hidden: usize, input: usize) -> Self {
        let w = || Tensor::zeros([hidden, hidden + input]);
        let b = || Tensor::zeros([hidden]);
        LstmGrads {
            w_f: w(),
            w_i: w(),
            w_c: w(),
            w_o: w(),
            b_f: b(),
            b_i: b(),
            b_c: b(),
            b_o: b(),
        }
    }
}

impl<T: Scalar> LstmCell<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        w_f: Tensor<T>,
        w_i: Tensor<T>,
        w_c: Tensor<T>,
        w_o: Tensor<T>,
        b_f: Tensor<T>,
        b_i: Tensor<T>,
        b_c: Tensor<T>,
        b_o: Tensor<T>,
    ) -> Result<Self> {
        let shape = w_f.shape().to_vec();
        if shape.len() != 2 {
            return Err(Error::shape(
                "lstm_new",
                format!("gate weights must be [H×(H+D)], got {shape:?}"),
            ));
        }
        let hidden = shape[0];
        if shape[1] <= hidden {
            return Err(Error::shape(
                "lstm_new",
                format!("gate width {} must exceed hidden size {hidden}", shape[1]),
            ));
        }
        for (name, w) in [("w_i", &w_i), ("w_c", &w_c), ("w_o", &w_o)] {
            if w.shape() != shape.as_slice() {
                return Err(Error::shape(
                    "lstm_new",
                    format!("{name} shape {:?} differs from w_f {shape:?}", w.shape()),
                ));
            }
        }
        for (name, b) in [("b_f", &b_f), ("b_i", &b_i), ("b_c", &b_c), ("b_o", &b_o)] {
            if b.shape() != [hidden] {
                return Err(Error::shape(
                    "lstm_new",
                    format!("{name} shape {:?} does not match hidden {hidden}", b.shape()),
                ));
            }
        }
        Ok(LstmCell {
            w_f,
            w_i,
            w_c,
            w_o,
            b_f,
            b_i,
            b_c,
            b_o,
        })
    }

    /// Glorot weights; forget-gate bias starts at 1 so early training does
    /// not wash the cell state out over long sequences.
    pub fn init(input_dim: usize, hidden: usize, rng: &mut SeededRng) -> Self {
        let width = hidden + input_dim;
        let mut w = || glorot_uniform::<T>([hidden, width], width, hidden, rng);
        let w_f = w();
        let w_i = w();
        let w_c = w();
        let w_o = w();
        LstmCell {
            w_f,
            w_i,
            w_c,
            w_o,
            b_f: Tensor::filled([hidden], T::one()),
            b_i: Tensor::zeros([hidden]),
            b_c: Tensor::zeros([hidden]),
            b_o: Tensor::zeros([hidden]),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_f.shape()[0]
    }

    pub fn input_dim(&self) -> usize {
        self.w_f.shape()[1] - self.hidden()
    }

    pub fn step(&self, x: &Tensor<T>, prev: &LstmState<T>) -> Result<LstmState<T>> {
        Ok(self.step_cached(x, prev)?.0)
    }

    pub fn step_cached(
        &self,
        x: &Tensor<T>,
        prev: &LstmState<T>,
    ) -> Result<(LstmState<T>, LstmStepCache<T>)> {
        let hidden = self.hidden();
        let input = self.input_dim();
        if x.shape() != [input] {
            return Err(Error::shape(
                "lstm_step",
                format!("input {:?} vs expected [{input}]", x.shape()),
            ));
        }
        if prev.h.shape() != [hidden] || prev.c.shape() != [hidden] {
            return Err(Error::shape(
                "lstm_step",
                format!(
                    "state shapes {:?}/{:?} vs expected [{hidden}]",
                    prev.h.shape(),
                    prev.c.shape()
                ),
            ));
        }
        let mut concat = Vec::with_capacity(hidden + input);
        concat.extend_from_slice(prev.h.data());
        concat.extend_from_slice(x.data());

        let gate = |w: &Tensor<T>, b: &Tensor<T>| -> Result<Vec<T>> {
            let mut v = matvec(w, &concat)?;
            for (vi, &bi) in v.iter_mut().zip(b.data()) {
                *vi = *vi + bi;
            }
            Ok(v)
        };
        let f: Vec<T> = gate(&self.w_f, &self.b_f)?.into_iter().map(sigmoid).collect();
        let i: Vec<T> = gate(&self.w_i, &self.b_i)?.into_iter().map(sigmoid).collect();
        let ctilde: Vec<T> = gate(&self.w_c, &self.b_c)?.into_iter().map(|v| v.tanh()).collect();
        let o: Vec<T> = gate(&self.w_o, &self.b_o)?.into_iter().map(sigmoid).collect();

        let c_prev = prev.c.data();
        let mut c_new = Vec::with_capacity(hidden);
        for j in 0..hidden {
            c_new.push(f[j] * c_prev[j] + i[j] * ctilde[j]);
        }
        let tanh_c: Vec<T> = c_new.iter().map(|v| v.tanh()).collect();
        let mut h_new = Vec::with_capacity(hidden);
        for j in 0..hidden {
            h_new.push(o[j] * tanh_c[j]);
        }

        let cache = LstmStepCache {
            concat,
            f,
            i,
            ctilde,
            o,
            c_prev: c_prev.to_vec(),
            tanh_c,
        };
        Ok((
            LstmState {
                h: Tensor::from_vec([hidden], h_new)?,
                c: Tensor::from_vec([hidden], c_new)?,
            },
            cache,
        ))
    }

    /// One reverse step. `dh`/`dc` are the loss gradients flowing into this
    /// step's `h_t` and `c_t` (the latter from step t+1). Accumulates
    /// parameter gradients into `grads` and returns `(dx, dh_prev, dc_prev)`.
    pub fn backward_step(
        &self,
        cache: &LstmStepCache<T>,
        dh: &[T],
        dc_in: &[T],
        grads: &mut LstmGrads<T>,
    ) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
        let hidden = self.hidden();
        let input = self.input_dim();
        let one = T::one();

        let mut dpre_f = vec![T::zero(); hidden];
        let mut dpre_i = vec![T::zero(); hidden];
        let mut dpre_c = vec![T::zero(); hidden];
        let mut dpre_o = vec![T::zero(); hidden];
        let mut dc_prev = vec![T::zero(); hidden];

        for j in 0..hidden {
            let o = cache.o[j];
            let tc = cache.tanh_c[j];
            let f = cache.f[j];
            let i = cache.i[j];
            let ct = cache.ctilde[j];

            let dc_total = dc_in[j] + dh[j] * o * (one - tc * tc);
            dpre_o[j] = dh[j] * tc * o * (one - o);
            dpre_f[j] = dc_total * cache.c_prev[j] * f * (one - f);
            dpre_i[j] = dc_total * ct * i * (one - i);
            dpre_c[j] = dc_total * i * (one - ct * ct);
            dc_prev[j] = dc_total * f;
        }

        // dW_g += outer(dpre_g, concat); db_g += dpre_g
        let width = hidden + input;
        let accumulate = |w_grad: &mut Tensor<T>, b_grad: &mut Tensor<T>, dpre: &[T]| {
            let wd = w_grad.data_mut();
            for (j, &g) in dpre.iter().enumerate() {
                if g == T::zero() {
                    continue;
                }
                let row = &mut wd[j * width..(j + 1) * width];
                for (rw, &cv) in row.iter_mut().zip(&cache.concat) {
                    *rw = *rw + g * cv;
                }
            }
            let bd = b_grad.data_mut();
            for (b, &g) in bd.iter_mut().zip(dpre) {
                *b = *b + g;
            }
        };
        accumulate(&mut grads.w_f, &mut grads.b_f, &dpre_f);
        accumulate(&mut grads.w_i, &mut grads.b_i, &dpre_i);
        accumulate(&mut grads.w_c, &mut grads.b_c, &dpre_c);
        accumulate(&mut grads.w_o, &mut grads.b_o, &dpre_o);

        // dconcat = Σ_g W_gᵀ · dpre_g, summed in fixed gate order.
        let mut dconcat = matvec_transposed(&self.w_f, &dpre_f)?;
        for (d, v) in dconcat.iter_mut().zip(matvec_transposed(&self.w_i, &dpre_i)?) {
            *d = *d + v;
        }
        for (d, v) in dconcat.iter_mut().zip(matvec_transposed(&self.w_c, &dpre_c)?) {
            *d = *d + v;
        }
        for (d, v) in dconcat.iter_mut().zip(matvec_transposed(&self.w_o, &dpre_o)?) {
            *d = *d + v;
        }

        let dh_prev = Tensor::from_vec([hidden], dconcat[..hidden].to_vec())?;
        let dx = Tensor::from_vec([input], dconcat[hidden..].to_vec())?;
        Ok((dx, dh_prev, Tensor::from_vec([hidden], dc_prev)?))
    }

    /// Runs the cell over a sequence from a zero initial state, returning
    /// per-step states and the caches BPTT needs.
    pub fn forward_sequence(
        &self,
        inputs: &[Tensor<T>],
    ) -> Result<(Vec<LstmState<T>>, Vec<LstmStepCache<T>>)> {
        let mut state = LstmState::zeros(self.hidden());
        let mut states = Vec::with_capacity(inputs.len());
        let mut caches = Vec::with_capacity(inputs.len());
        for x in inputs {
            let (next, cache) = self.step_cached(x, &state)?;
            state = next.clone();
            states.push(next);
            caches.push(cache);
        }
        Ok((states, caches))
    }

    /// Backpropagation through time over a cached forward pass.
    ///
    /// `upstream_h[t]` is the loss gradient at `h_t`. Both the hidden-state
    /// and the cell-state recurrences are accumulated. Returns parameter
    /// gradients and the per-step input gradients.
    pub fn backward_through_time(
        &self,
        caches: &[LstmStepCache<T>],
        upstream_h: &[Tensor<T>],
    ) -> Result<(LstmGrads<T>, Vec<Tensor<T>>)> {
        if caches.len() != upstream_h.len() {
            return Err(Error::shape(
                "lstm_bptt",
                format!(
                    "{} cached steps vs {} upstream gradients",
                    caches.len(),
                    upstream_h.len()
                ),
            ));
        }
        let hidden = self.hidden();
        let mut grads = LstmGrads::zeros(hidden, self.input_dim());
        let mut dx_steps = vec![Tensor::zeros([self.input_dim()]); caches.len()];
        let mut dh_next = vec![T::zero(); hidden];
        let mut dc_next = vec![T::zero(); hidden];

        for t in (0..caches.len()).rev() {
            let mut dh = upstream_h[t].data().to_vec();
            for (d, &n) in dh.iter_mut().zip(&dh_next) {
                *d = *d + n;
            }
            let (dx, dh_prev, dc_prev) = self.backward_step(&caches[t], &dh, &dc_next, &mut grads)?;
            dx_steps[t] = dx;
            dh_next = dh_prev.into_data();
            dc_next = dc_prev.into_data();
        }
        Ok((grads, dx_steps))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::gradcheck::{gradient_check, DEFAULT_STEP};

    fn zero_cell(input: usize, hidden: usize) -> LstmCell<f64> {
        LstmCell::new(
            Tensor::zeros([hidden, hidden + input]),
            Tensor::zeros([hidden, hidden + input]),
            Tensor::zeros([hidden, hidden + input]),
            Tensor::zeros([hidden, hidden + input]),
            Tensor::zeros([hidden]),
            Tensor::zeros([hidden]),
            Tensor::zeros([hidden]),
            Tensor::zeros([hidden]),
        )
        .unwrap()
    }

    #[test]
    fn zero_cell_zero_state_stays_zero() {
        let cell = zero_cell(2, 3);
        let x = Tensor::from_vec([2], vec![0.7, -0.3]).unwrap();
        let state = cell.step(&x, &LstmState::zeros(3)).unwrap();
        // gates are σ(0)=0.5, candidate tanh(0)=0, so c and h stay 0
        assert!(state.c.data().iter().all(|&v| v == 0.0));
        assert!(state.h.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_cell_halves_carried_cell_state() {
        let cell = zero_cell(2, 3);
        let x = Tensor::from_vec([2], vec![0.7, -0.3]).unwrap();
        let c0 = vec![0.4, -1.0, 2.0];
        let prev = LstmState {
            h: Tensor::zeros([3]),
            c: Tensor::from_vec([3], c0.clone()).unwrap(),
        };
        let state = cell.step(&x, &prev).unwrap();
        for j in 0..3 {
            let c_want = 0.5 * c0[j];
            let h_want = 0.5 * c_want.tanh();
            assert!((state.c.data()[j] - c_want).abs() < 1e-15);
            assert!((state.h.data()[j] - h_want).abs() < 1e-15);
        }
    }

    #[test]
    fn hidden_state_is_bounded_by_one() {
        let mut rng = SeededRng::new(5);
        let cell = LstmCell::<f64>::init(3, 4, &mut rng);
        let mut state = LstmState::zeros(4);
        for k in 0..50 {
            let x_data: Vec<f64> = (0..3).map(|_| rng.uniform_in(-3.0, 3.0) * (k as f64)).collect();
            let x = Tensor::from_vec([3], x_data).unwrap();
            state = cell.step(&x, &state).unwrap();
            assert!(state.h.data().iter().all(|&v| v.abs() <= 1.0));
        }
    }

    // Sum-of-h loss over the full sequence, FD-checked for every parameter
    // tensor of the cell.
    fn bptt_check(seq_len: usize, input: usize, hidden: usize, seed: u64) {
        let mut rng = SeededRng::new(seed);
        let cell = LstmCell::<f64>::init(input, hidden, &mut rng);
        let inputs: Vec<Tensor<f64>> = (0..seq_len)
            .map(|_| {
                let data: Vec<f64> = (0..input).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
                Tensor::from_vec([input], data).unwrap()
            })
            .collect();
        let (states, caches) = cell.forward_sequence(&inputs).unwrap();
        let upstream: Vec<Tensor<f64>> = states.iter().map(|_| Tensor::filled([hidden], 1.0)).collect();
        let (grads, dx) = cell.backward_through_time(&caches, &upstream).unwrap();

        let loss_with = |cell: &LstmCell<f64>| -> crate::error::Result<f64> {
            let (states, _) = cell.forward_sequence(&inputs)?;
            Ok(states.iter().fold(0.0, |acc, s| acc + s.h.sum()))
        };

        type Param<'a> = (&'a Tensor<f64>, &'a Tensor<f64>, usize);
        let params: Vec<Param> = vec![
            (&cell.w_f, &grads.w_f, 0),
            (&cell.w_i, &grads.w_i, 1),
            (&cell.w_c, &grads.w_c, 2),
            (&cell.w_o, &grads.w_o, 3),
            (&cell.b_f, &grads.b_f, 4),
            (&cell.b_i, &grads.b_i, 5),
            (&cell.b_c, &grads.b_c, 6),
            (&cell.b_o, &grads.b_o, 7),
        ];
        for (tensor, grad, slot) in params {
            let err = gradient_check(
                |probe| {
                    let mut c = cell.clone();
                    match slot {
                        0 => c.w_f = probe.clone(),
                        1 => c.w_i = probe.clone(),
                        2 => c.w_c = probe.clone(),
                        3 => c.w_o = probe.clone(),
                        4 => c.b_f = probe.clone(),
                        5 => c.b_i = probe.clone(),
                        6 => c.b_c = probe.clone(),
                        _ => c.b_o = probe.clone(),
                    }
                    loss_with(&c)
                },
                tensor,
                grad,
                DEFAULT_STEP,
            )
            .unwrap();
            assert!(err < 1e-4, "param slot {slot} grad err {err}");
        }

        // input gradients too
        for (t, x) in inputs.iter().enumerate() {
            let err = gradient_check(
                |probe| {
                    let mut modified = inputs.clone();
                    modified[t] = probe.clone();
                    let (states, _) = cell.forward_sequence(&modified)?;
                    Ok(states.iter().fold(0.0, |acc, s| acc + s.h.sum()))
                },
                x,
                &dx[t],
                DEFAULT_STEP,
            )
            .unwrap();
            assert!(err < 1e-4, "input at step {t} grad err {err}");
        }
    }

    #[test]
    fn single_step_gradients_match_finite_differences() {
        bptt_check(1, 3, 4, 21);
    }

    #[test]
    fn three_step_bptt_matches_finite_differences() {
        bptt_check(3, 2, 3, 22);
    }

    #[test]
    fn zero_upstream_gives_zero_grads() {
        let mut rng = SeededRng::new(11);
        let cell = LstmCell::<f64>::init(2, 3, &mut rng);
        let inputs: Vec<Tensor<f64>> = (0..3)
            .map(|_| Tensor::from_vec([2], vec![rng.uniform(), rng.uniform()]).unwrap())
            .collect();
        let (_, caches) = cell.forward_sequence(&inputs).unwrap();
        let upstream = vec![Tensor::zeros([3]); 3];
        let (grads, dx) = cell.backward_through_time(&caches, &upstream).unwrap();
        assert!(grads.w_f.data().iter().all(|&v| v == 0.0));
        assert!(grads.b_o.data().iter().all(|&v| v == 0.0));
        assert!(dx.iter().all(|t| t.data().iter().all(|&v| v == 0.0)));
    }
}
