//! Dense networks with hand-written forward and backward passes.
//!
//! The actor maps a state encoding through two rectified hidden layers to a
//! tanh output affinely squashed into the control-input range. The critic
//! feeds the state through its first hidden layer and injects the scalar
//! action alongside that layer's output into the second hidden layer.
//!
//! All buffers are flat row-major `Vec<f64>`; batch loops reduce to
//! contiguous dot products and axpy updates so the optimizer-facing code
//! stays allocation-free after warmup.

use rand::Rng;

/// One dense layer, weights stored row-major `[out][in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub in_dim: usize,
    pub out_dim: usize,
}

/// Dot product with eight independent accumulators so the reduction
/// vectorizes; a strict left-to-right fold would pin the loop to one fma
/// chain.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let chunks = a.len() / 8;
    for c in 0..chunks {
        let ar = &a[c * 8..c * 8 + 8];
        let br = &b[c * 8..c * 8 + 8];
        for lane in 0..8 {
            acc[lane] += ar[lane] * br[lane];
        }
    }
    let mut tail = 0.0;
    for i in chunks * 8..a.len() {
        tail += a[i] * b[i];
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail
}

impl Linear {
    /// Fan-in scaled uniform init, the default for hidden layers.
    pub fn fan_in_uniform<R: Rng>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (in_dim as f64).sqrt();
        Self::uniform(in_dim, out_dim, bound, rng)
    }

    /// Uniform init in `[-bound, bound]` for weights and biases.
    pub fn uniform<R: Rng>(in_dim: usize, out_dim: usize, bound: f64, rng: &mut R) -> Self {
        let mut w = vec![0.0; in_dim * out_dim];
        let mut b = vec![0.0; out_dim];
        for v in w.iter_mut().chain(b.iter_mut()) {
            *v = rng.gen_range(-bound..=bound);
        }
        Self { w, b, in_dim, out_dim }
    }

    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self { w: vec![0.0; in_dim * out_dim], b: vec![0.0; out_dim], in_dim, out_dim }
    }

    /// y = x·Wᵀ + b for a row-major batch.
    pub fn forward(&self, x: &[f64], batch: usize, y: &mut Vec<f64>) {
        debug_assert_eq!(x.len(), batch * self.in_dim);
        y.resize(batch * self.out_dim, 0.0);
        for bi in 0..batch {
            let row = &x[bi * self.in_dim..(bi + 1) * self.in_dim];
            let out = &mut y[bi * self.out_dim..(bi + 1) * self.out_dim];
            for (o, out_v) in out.iter_mut().enumerate() {
                let wrow = &self.w[o * self.in_dim..(o + 1) * self.in_dim];
                let mut acc = self.b[o];
                for (xi, wi) in row.iter().zip(wrow) {
                    acc += xi * wi;
                }
                *out_v = acc;
            }
        }
    }

    /// Backward pass: accumulates parameter gradients (when given) and writes
    /// the input gradient.
    pub fn backward(
        &self,
        x: &[f64],
        dy: &[f64],
        batch: usize,
        grads: Option<&mut LinearGrads>,
        dx: &mut Vec<f64>,
    ) {
        debug_assert_eq!(dy.len(), batch * self.out_dim);
        if let Some(g) = grads {
            for bi in 0..batch {
                let row = &x[bi * self.in_dim..(bi + 1) * self.in_dim];
                let dyr = &dy[bi * self.out_dim..(bi + 1) * self.out_dim];
                for (o, d) in dyr.iter().enumerate() {
                    g.b[o] += d;
                    let grow = &mut g.w[o * self.in_dim..(o + 1) * self.in_dim];
                    for (gw, xi) in grow.iter_mut().zip(row) {
                        *gw += d * xi;
                    }
                }
            }
        }
        dx.clear();
        dx.resize(batch * self.in_dim, 0.0);
        for bi in 0..batch {
            let dyr = &dy[bi * self.out_dim..(bi + 1) * self.out_dim];
            let dxr = &mut dx[bi * self.in_dim..(bi + 1) * self.in_dim];
            for (o, d) in dyr.iter().enumerate() {
                let wrow = &self.w[o * self.in_dim..(o + 1) * self.in_dim];
                for (dxi, wi) in dxr.iter_mut().zip(wrow) {
                    *dxi += d * wi;
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct LinearGrads {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl LinearGrads {
    pub fn for_layer(l: &Linear) -> Self {
        Self { w: vec![0.0; l.w.len()], b: vec![0.0; l.b.len()] }
    }

    pub fn zero(&mut self) {
        self.w.iter_mut().for_each(|v| *v = 0.0);
        self.b.iter_mut().for_each(|v| *v = 0.0);
    }
}

fn relu_inplace(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

/// Masks `d` by the rectifier's active set, read off the post-activation.
fn relu_mask(d: &mut [f64], post: &[f64]) {
    for (di, hi) in d.iter_mut().zip(post) {
        if *hi <= 0.0 {
            *di = 0.0;
        }
    }
}

/// Deterministic policy network.
#[derive(Debug, Clone, PartialEq)]
pub struct Actor {
    pub l1: Linear,
    pub l2: Linear,
    pub l3: Linear,
    pub a_min: f64,
    pub a_max: f64,
}

/// Forward-pass scratch reused across calls.
#[derive(Debug, Clone, Default)]
pub struct ActorCache {
    pub x: Vec<f64>,
    h1: Vec<f64>,
    h2: Vec<f64>,
    z: Vec<f64>,
    u: Vec<f64>,
    pub a: Vec<f64>,
    batch: usize,
    d2: Vec<f64>,
    d1: Vec<f64>,
    d0: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ActorGrads {
    pub l1: LinearGrads,
    pub l2: LinearGrads,
    pub l3: LinearGrads,
}

impl ActorGrads {
    pub fn for_net(net: &Actor) -> Self {
        Self {
            l1: LinearGrads::for_layer(&net.l1),
            l2: LinearGrads::for_layer(&net.l2),
            l3: LinearGrads::for_layer(&net.l3),
        }
    }

    pub fn zero(&mut self) {
        self.l1.zero();
        self.l2.zero();
        self.l3.zero();
    }
}

impl Actor {
    /// Hidden layers use fan-in uniform init, the output layer a tight
    /// uniform band so the initial policy sits near the action midpoint.
    pub fn new<R: Rng>(
        in_dim: usize,
        h1: usize,
        h2: usize,
        a_min: f64,
        a_max: f64,
        rng: &mut R,
    ) -> Self {
        Self {
            l1: Linear::fan_in_uniform(in_dim, h1, rng),
            l2: Linear::fan_in_uniform(h1, h2, rng),
            l3: Linear::uniform(h2, 1, 3.0e-3, rng),
            a_min,
            a_max,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.l1.in_dim
    }

    /// Batched forward; actions land in `cache.a`.
    pub fn forward(&self, x: &[f64], batch: usize, cache: &mut ActorCache) {
        assert_eq!(x.len(), batch * self.l1.in_dim, "actor input dimension mismatch");
        cache.batch = batch;
        cache.x.clear();
        cache.x.extend_from_slice(x);
        self.l1.forward(x, batch, &mut cache.h1);
        relu_inplace(&mut cache.h1);
        self.l2.forward(&cache.h1, batch, &mut cache.h2);
        relu_inplace(&mut cache.h2);
        self.l3.forward(&cache.h2, batch, &mut cache.z);
        cache.u.clear();
        cache.u.extend(cache.z.iter().map(|z| z.tanh()));
        let mid = 0.5 * (self.a_min + self.a_max);
        let half = 0.5 * (self.a_max - self.a_min);
        cache.a.clear();
        cache.a.extend(cache.u.iter().map(|u| mid + half * u));
    }

    /// Single-state convenience forward.
    pub fn act(&self, x: &[f64], cache: &mut ActorCache) -> f64 {
        self.forward(x, 1, cache);
        cache.a[0]
    }

    /// Backward from `d_action` (length batch), accumulating into `grads`.
    pub fn backward(&self, cache: &mut ActorCache, d_action: &[f64], grads: &mut ActorGrads) {
        let batch = cache.batch;
        debug_assert_eq!(d_action.len(), batch);
        let half = 0.5 * (self.a_max - self.a_min);
        let dz: Vec<f64> = d_action
            .iter()
            .zip(&cache.u)
            .map(|(d, u)| d * half * (1.0 - u * u))
            .collect();
        self.l3.backward(&cache.h2, &dz, batch, Some(&mut grads.l3), &mut cache.d2);
        relu_mask(&mut cache.d2, &cache.h2);
        let d2 = std::mem::take(&mut cache.d2);
        self.l2.backward(&cache.h1, &d2, batch, Some(&mut grads.l2), &mut cache.d1);
        cache.d2 = d2;
        relu_mask(&mut cache.d1, &cache.h1);
        let d1 = std::mem::take(&mut cache.d1);
        self.l1.backward(&cache.x, &d1, batch, Some(&mut grads.l1), &mut cache.d0);
        cache.d1 = d1;
    }

    /// Parameter tensors in the canonical optimizer order.
    pub fn tensors_mut(&mut self) -> [&mut Vec<f64>; 6] {
        [
            &mut self.l1.w,
            &mut self.l1.b,
            &mut self.l2.w,
            &mut self.l2.b,
            &mut self.l3.w,
            &mut self.l3.b,
        ]
    }

    pub fn tensors(&self) -> [&Vec<f64>; 6] {
        [&self.l1.w, &self.l1.b, &self.l2.w, &self.l2.b, &self.l3.w, &self.l3.b]
    }
}

impl ActorGrads {
    pub fn tensors(&self) -> [&Vec<f64>; 6] {
        [&self.l1.w, &self.l1.b, &self.l2.w, &self.l2.b, &self.l3.w, &self.l3.b]
    }
}

/// Action-value network; the scalar action joins the second hidden layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Critic {
    pub l1: Linear,
    /// Takes the first hidden layer's output with the action appended.
    pub l2: Linear,
    pub l3: Linear,
}

#[derive(Debug, Clone, Default)]
pub struct CriticCache {
    pub s: Vec<f64>,
    h1: Vec<f64>,
    h1a: Vec<f64>,
    h2: Vec<f64>,
    pub q: Vec<f64>,
    batch: usize,
    d2: Vec<f64>,
    d1a: Vec<f64>,
    d1: Vec<f64>,
    d0: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CriticGrads {
    pub l1: LinearGrads,
    pub l2: LinearGrads,
    pub l3: LinearGrads,
}

impl CriticGrads {
    pub fn for_net(net: &Critic) -> Self {
        Self {
            l1: LinearGrads::for_layer(&net.l1),
            l2: LinearGrads::for_layer(&net.l2),
            l3: LinearGrads::for_layer(&net.l3),
        }
    }

    pub fn zero(&mut self) {
        self.l1.zero();
        self.l2.zero();
        self.l3.zero();
    }

    pub fn tensors(&self) -> [&Vec<f64>; 6] {
        [&self.l1.w, &self.l1.b, &self.l2.w, &self.l2.b, &self.l3.w, &self.l3.b]
    }
}

impl Critic {
    pub fn new<R: Rng>(s_dim: usize, h1: usize, h2: usize, rng: &mut R) -> Self {
        Self {
            l1: Linear::fan_in_uniform(s_dim, h1, rng),
            l2: Linear::fan_in_uniform(h1 + 1, h2, rng),
            l3: Linear::uniform(h2, 1, 3.0e-3, rng),
        }
    }

    pub fn s_dim(&self) -> usize {
        self.l1.in_dim
    }

    /// Batched forward of Q(s, a); values land in `cache.q`.
    pub fn forward(&self, s: &[f64], a: &[f64], batch: usize, cache: &mut CriticCache) {
        assert_eq!(s.len(), batch * self.l1.in_dim, "critic state dimension mismatch");
        assert_eq!(a.len(), batch, "critic action length mismatch");
        cache.batch = batch;
        cache.s.clear();
        cache.s.extend_from_slice(s);
        self.l1.forward(s, batch, &mut cache.h1);
        relu_inplace(&mut cache.h1);
        let h1_dim = self.l1.out_dim;
        cache.h1a.clear();
        cache.h1a.reserve(batch * (h1_dim + 1));
        for bi in 0..batch {
            cache.h1a.extend_from_slice(&cache.h1[bi * h1_dim..(bi + 1) * h1_dim]);
            cache.h1a.push(a[bi]);
        }
        self.l2.forward(&cache.h1a, batch, &mut cache.h2);
        relu_inplace(&mut cache.h2);
        self.l3.forward(&cache.h2, batch, &mut cache.q);
    }

    /// Backward from `d_q`; optionally accumulates parameter gradients, and
    /// writes the gradient with respect to the action input into `d_action`.
    pub fn backward(
        &self,
        cache: &mut CriticCache,
        d_q: &[f64],
        mut grads: Option<&mut CriticGrads>,
        d_action: Option<&mut Vec<f64>>,
    ) {
        let batch = cache.batch;
        debug_assert_eq!(d_q.len(), batch);
        self.l3
            .backward(&cache.h2, d_q, batch, grads.as_deref_mut().map(|g| &mut g.l3), &mut cache.d2);
        relu_mask(&mut cache.d2, &cache.h2);
        let d2 = std::mem::take(&mut cache.d2);
        self.l2.backward(
            &cache.h1a,
            &d2,
            batch,
            grads.as_deref_mut().map(|g| &mut g.l2),
            &mut cache.d1a,
        );
        cache.d2 = d2;
        let h1_dim = self.l1.out_dim;
        if let Some(da) = d_action {
            da.clear();
            da.extend((0..batch).map(|bi| cache.d1a[bi * (h1_dim + 1) + h1_dim]));
        }
        cache.d1.clear();
        for bi in 0..batch {
            cache
                .d1
                .extend_from_slice(&cache.d1a[bi * (h1_dim + 1)..bi * (h1_dim + 1) + h1_dim]);
        }
        relu_mask(&mut cache.d1, &cache.h1);
        let d1 = std::mem::take(&mut cache.d1);
        self.l1
            .backward(&cache.s, &d1, batch, grads.as_deref_mut().map(|g| &mut g.l1), &mut cache.d0);
        cache.d1 = d1;
    }

    pub fn tensors_mut(&mut self) -> [&mut Vec<f64>; 6] {
        [
            &mut self.l1.w,
            &mut self.l1.b,
            &mut self.l2.w,
            &mut self.l2.b,
            &mut self.l3.w,
            &mut self.l3.b,
        ]
    }

    pub fn tensors(&self) -> [&Vec<f64>; 6] {
        [&self.l1.w, &self.l1.b, &self.l2.w, &self.l2.b, &self.l3.w, &self.l3.b]
    }
}

/// θ' ← τ·θ + (1-τ)·θ' over aligned tensor lists.
pub fn soft_update_tensors(target: [&mut Vec<f64>; 6], online: [&Vec<f64>; 6], tau: f64) {
    for (t, o) in target.into_iter().zip(online) {
        assert_eq!(t.len(), o.len(), "soft update shape mismatch");
        for (tv, ov) in t.iter_mut().zip(o) {
            *tv = tau * ov + (1.0 - tau) * *tv;
        }
    }
}
