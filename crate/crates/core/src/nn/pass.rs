//! Forward and backward passes for a single example, with reusable buffers.

use alloc::vec;
use alloc::vec::Vec;

use super::kernels::*;
use super::real::Real;
use super::{NetworkSpec, NnError, ParamSet, CONV1_B, CONV1_W, CONV2_B, CONV2_W, CONV3_B, CONV3_W, FC_B, FC_W};
use crate::tilemap::Tile;

/// A minibatch as (one-hot active channels, target action) pairs.
pub type Batch<'a> = [(&'a [u8], Tile)];

/// Activation and gradient buffers sized for one [`NetworkSpec`].
#[derive(Debug, Clone)]
pub struct Workspace<F> {
    a1: Vec<F>,
    a2: Vec<F>,
    pooled: Vec<F>,
    pool_arg: Vec<u32>,
    a3: Vec<F>,
    logits: Vec<F>,
    probs: Vec<F>,
    log_sum: F,
    max_logit: F,
    d_logits: Vec<F>,
    d_a3: Vec<F>,
    d_pooled: Vec<F>,
    d_a2: Vec<F>,
    d_a1: Vec<F>,
}

impl<F: Real> Workspace<F> {
    pub fn new(spec: &NetworkSpec) -> Self {
        let [(s, _, c1), (_, _, c2), (p, _, _), (_, _, c3)] = spec.layer_shapes();
        let a = spec.action_count;
        Self {
            a1: vec![F::ZERO; s * s * c1],
            a2: vec![F::ZERO; s * s * c2],
            pooled: vec![F::ZERO; p * p * c2],
            pool_arg: vec![0; p * p * c2],
            a3: vec![F::ZERO; p * p * c3],
            logits: vec![F::ZERO; a],
            probs: vec![F::ZERO; a],
            log_sum: F::ZERO,
            max_logit: F::ZERO,
            d_logits: vec![F::ZERO; a],
            d_a3: vec![F::ZERO; p * p * c3],
            d_pooled: vec![F::ZERO; p * p * c2],
            d_a2: vec![F::ZERO; s * s * c2],
            d_a1: vec![F::ZERO; s * s * c1],
        }
    }

    /// Runs the network and returns the action probabilities.
    pub fn forward(&mut self, spec: &NetworkSpec, params: &ParamSet<F>, active: &[u8]) -> &[F] {
        let t = &params.tensors;
        let [c1, c2, c3] = spec.conv_channels;
        let (s, p) = (spec.crop_size, spec.pooled_size());
        debug_assert_eq!(active.len(), s * s);
        conv_onehot_forward(active, s, spec.input_channels, &t[CONV1_W], &t[CONV1_B], c1, &mut self.a1);
        relu_inplace(&mut self.a1);
        conv_forward(&self.a1, s, c1, &t[CONV2_W], &t[CONV2_B], c2, &mut self.a2);
        relu_inplace(&mut self.a2);
        maxpool_forward(&self.a2, s, c2, &mut self.pooled, &mut self.pool_arg);
        conv_forward(&self.pooled, p, c2, &t[CONV3_W], &t[CONV3_B], c3, &mut self.a3);
        relu_inplace(&mut self.a3);
        dense_forward(&self.a3, &t[FC_W], &t[FC_B], &mut self.logits);
        let (log_sum, max) = softmax(&self.logits, &mut self.probs);
        self.log_sum = log_sum;
        self.max_logit = max;
        &self.probs
    }

    pub fn logits(&self) -> &[F] {
        &self.logits
    }

    /// `-ln p[target]` from the last forward pass.
    pub fn cross_entropy(&self, target: Tile) -> F {
        -((self.logits[usize::from(target)] - self.max_logit) - self.log_sum)
    }

    /// Which rectifiers fired and which inputs won each pooling window in
    /// the last forward pass. Finite differences are only meaningful when a
    /// perturbation leaves this unchanged.
    pub fn pattern(&self) -> Vec<u32> {
        let fired = |v: &Vec<F>| v.iter().map(|&x| u32::from(x > F::ZERO)).collect::<Vec<_>>();
        let mut out = fired(&self.a1);
        out.extend(fired(&self.a2));
        out.extend(fired(&self.a3));
        out.extend(&self.pool_arg);
        out
    }

    /// Forward plus backward for one example. Adds `scale ×` the gradient of
    /// its cross-entropy into `grads` and returns the unscaled loss.
    pub fn accumulate(
        &mut self,
        spec: &NetworkSpec,
        params: &ParamSet<F>,
        active: &[u8],
        target: Tile,
        scale: F,
        grads: &mut ParamSet<F>,
    ) -> F {
        self.forward(spec, params, active);
        let loss = self.cross_entropy(target);
        let t = &params.tensors;
        let g = &mut grads.tensors;
        let [c1, c2, c3] = spec.conv_channels;
        let (s, p) = (spec.crop_size, spec.pooled_size());

        for (d, &pr) in self.d_logits.iter_mut().zip(&self.probs) {
            *d = pr * scale;
        }
        self.d_logits[usize::from(target)] -= scale;

        let (fc_w, rest) = g[FC_W..].split_at_mut(1);
        dense_backward(&self.a3, &t[FC_W], &self.d_logits, &mut fc_w[0], &mut rest[0], &mut self.d_a3);
        relu_backward(&self.a3, &mut self.d_a3);

        let (w3, rest) = g[CONV3_W..].split_at_mut(1);
        conv_backward(
            &self.pooled,
            p,
            c2,
            &t[CONV3_W],
            &self.d_a3,
            c3,
            &mut w3[0],
            &mut rest[0],
            Some(&mut self.d_pooled),
        );
        maxpool_backward(&self.d_pooled, &self.pool_arg, &mut self.d_a2);
        relu_backward(&self.a2, &mut self.d_a2);

        let (w2, rest) = g[CONV2_W..].split_at_mut(1);
        conv_backward(
            &self.a1,
            s,
            c1,
            &t[CONV2_W],
            &self.d_a2,
            c2,
            &mut w2[0],
            &mut rest[0],
            Some(&mut self.d_a1),
        );
        relu_backward(&self.a1, &mut self.d_a1);

        let (w1, rest) = g[CONV1_W..].split_at_mut(1);
        conv_onehot_backward(active, s, spec.input_channels, &self.d_a1, c1, &mut w1[0], &mut rest[0]);
        loss
    }
}

fn check_batch(spec: &NetworkSpec, batch: &Batch<'_>) -> Result<(), NnError> {
    if batch.is_empty() {
        return Err(NnError::Empty);
    }
    for &(active, target) in batch {
        if usize::from(target) >= spec.action_count {
            return Err(NnError::TargetOutOfRange {
                target,
                actions: spec.action_count,
            });
        }
        if active.len() != spec.crop_size * spec.crop_size
            || active.iter().any(|&c| usize::from(c) >= spec.input_channels)
        {
            return Err(NnError::ShapeMismatch {
                crop: spec.crop_size,
                channels: spec.input_channels,
                found_crop: libm::sqrt(active.len() as f64) as usize,
                found_channels: active.iter().map(|&c| usize::from(c) + 1).max().unwrap_or(0),
            });
        }
    }
    Ok(())
}

/// Mean cross-entropy over the batch (forward only).
pub fn loss<F: Real>(spec: &NetworkSpec, params: &ParamSet<F>, batch: &Batch<'_>) -> Result<F, NnError> {
    check_batch(spec, batch)?;
    let mut ws = Workspace::new(spec);
    let mut total = F::ZERO;
    for &(active, target) in batch {
        ws.forward(spec, params, active);
        total += ws.cross_entropy(target);
    }
    Ok(total / F::from_f64(batch.len() as f64))
}

/// Mean cross-entropy and its gradient with respect to every parameter.
pub fn loss_and_gradients<F: Real>(
    spec: &NetworkSpec,
    params: &ParamSet<F>,
    batch: &Batch<'_>,
) -> Result<(F, ParamSet<F>), NnError> {
    check_batch(spec, batch)?;
    let mut ws = Workspace::new(spec);
    let mut grads = ParamSet::zeros(spec);
    let scale = F::ONE / F::from_f64(batch.len() as f64);
    let mut total = F::ZERO;
    for &(active, target) in batch {
        total += ws.accumulate(spec, params, active, target, scale, &mut grads);
    }
    Ok((total * scale, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{NetworkState, FC_B};
    use crate::rng;
    use rand::Rng;

    fn random_batch(rng: &mut rng::PodRng, spec: &NetworkSpec, n: usize) -> Vec<(Vec<u8>, Tile)> {
        (0..n)
            .map(|_| {
                let active = (0..spec.crop_size * spec.crop_size)
                    .map(|_| rng.gen_range(0..spec.input_channels as u8))
                    .collect();
                (active, rng.gen_range(0..spec.action_count as Tile))
            })
            .collect()
    }

    #[test]
    fn zero_network_is_uniform() {
        let spec = NetworkSpec::new(5, 9, [4, 4, 8], 8).unwrap();
        let params = ParamSet::<f32>::zeros(&spec);
        let mut ws = Workspace::new(&spec);
        let active = vec![0u8; 25];
        let probs = ws.forward(&spec, &params, &active).to_vec();
        assert!(probs.iter().all(|&p| (p - 0.125).abs() < 1e-7));
        let l: f32 = loss(&spec, &params, &[(&active[..], 3)]).unwrap();
        assert!((l - 8f32.ln()).abs() < 1e-6);
        assert!((l - 2.0794).abs() < 1e-4);
    }

    #[test]
    fn outputs_are_probability_vectors() {
        let spec = NetworkSpec::new(7, 9, [6, 6, 10], 8).unwrap();
        let mut rng = rng::seeded(8);
        let mut state = NetworkState::init(&spec, 1);
        // blow up the output layer to force extreme logits
        for w in &mut state.params.tensors[FC_W] {
            *w *= 1e4;
        }
        let mut ws = Workspace::new(&spec);
        for (active, _) in random_batch(&mut rng, &spec, 50) {
            let p = ws.forward(&spec, &state.params, &active);
            let sum: f32 = p.iter().sum();
            assert!((sum - 1.0).abs() < 1e-6);
            assert!(p.iter().all(|v| v.is_finite() && *v >= 0.0));
        }
    }

    #[test]
    fn logit_gradient_is_softmax_minus_onehot() {
        let spec = NetworkSpec::new(5, 9, [4, 4, 8], 8).unwrap();
        let mut rng = rng::seeded(2);
        let state = NetworkState::init(&spec, 5);
        let batch = random_batch(&mut rng, &spec, 1);
        let refs: Vec<(&[u8], Tile)> = batch.iter().map(|(a, t)| (&a[..], *t)).collect();
        let (_, grads) = loss_and_gradients(&spec, &state.params, &refs).unwrap();
        let mut ws = Workspace::new(&spec);
        let probs = ws.forward(&spec, &state.params, &batch[0].0).to_vec();
        // the output bias gradient is exactly dL/dlogits
        for (k, (&g, &p)) in grads.tensors[FC_B].iter().zip(&probs).enumerate() {
            let onehot = if k == usize::from(batch[0].1) { 1.0 } else { 0.0 };
            assert!((g - (p - onehot)).abs() < 1e-6);
        }
    }

    #[test]
    fn gradients_match_central_differences() {
        let spec = NetworkSpec::new(5, 9, [4, 4, 8], 8).unwrap();
        let mut rng = rng::seeded(12);
        let params: ParamSet<f64> = NetworkState::init(&spec, 7).params.cast();
        let mut params = params;
        for b in [CONV1_B, CONV2_B, CONV3_B, FC_B] {
            for v in &mut params.tensors[b] {
                *v = rng.gen_range(-0.1..0.1);
            }
        }
        let batch = random_batch(&mut rng, &spec, 4);
        let refs: Vec<(&[u8], Tile)> = batch.iter().map(|(a, t)| (&a[..], *t)).collect();
        let (_, grads) = loss_and_gradients(&spec, &params, &refs).unwrap();
        let h = 1e-3;
        let mut worst = 0.0f64;
        let mut checked = 0;
        for tensor in 0..8 {
            for i in 0..params.tensors[tensor].len() {
                let mut plus = params.clone();
                plus.tensors[tensor][i] += h;
                let mut minus = params.clone();
                minus.tensors[tensor][i] -= h;
                let numeric = (loss(&spec, &plus, &refs).unwrap() - loss(&spec, &minus, &refs).unwrap()) / (2.0 * h);
                let analytic = grads.tensors[tensor][i];
                let denom = analytic.abs().max(numeric.abs());
                if denom < 1e-7 {
                    continue;
                }
                let rel = (analytic - numeric).abs() / denom;
                if rel > 1e-3 {
                    // a rectifier or pooling switch inside ±h; not a bug
                    let mut ws = Workspace::new(&spec);
                    let mut patterns = [&plus, &minus, &params].map(|p| {
                        refs.iter()
                            .flat_map(|(a, _)| {
                                ws.forward(&spec, p, a);
                                ws.pattern()
                            })
                            .collect::<Vec<_>>()
                    });
                    let base = patterns[2].clone();
                    assert!(
                        patterns.iter_mut().any(|p| *p != base),
                        "tensor {tensor}[{i}]: analytic {analytic} numeric {numeric}"
                    );
                    continue;
                }
                worst = worst.max(rel);
                checked += 1;
            }
        }
        assert!(checked > 600, "{checked}");
        assert!(worst < 1e-3);
    }
}
