use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Descriptor of an independent random stream: a master seed plus a stream
/// index.
///
/// The generator is ChaCha8 keyed by `seed` with `stream` selecting the
/// ChaCha stream, so replication `r` always sees stream `r` regardless of
/// which thread draws from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub const fn new(seed: u64, stream: u64) -> Self {
        RngStream { seed, stream }
    }

    /// Fresh generator positioned at the start of the stream.
    pub fn rng(&self) -> StreamRng {
        let mut inner = ChaCha8Rng::seed_from_u64(self.seed);
        inner.set_stream(self.stream);
        StreamRng { inner }
    }

    /// Child stream `k`, independent of the parent and of its siblings.
    pub fn substream(&self, k: u64) -> RngStream {
        RngStream { seed: splitmix64(self.seed ^ splitmix64(self.stream.wrapping_add(0x5851_f42d_4c95_7f2d))), stream: k }
    }
}

/// Generator state for one [`RngStream`].
#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: ChaCha8Rng,
}

impl StreamRng {
    /// Uniform draw on `[0, 1)` with 53 random bits.
    pub fn unit(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Affine image of one unit draw on `[lo, hi]`; consumes a draw even when
    /// `lo == hi` so stream positions do not depend on the ranges.
    pub fn affine_unit(&mut self, lo: f64, hi: f64) -> f64 {
        let u = self.unit();
        if lo == hi {
            return lo;
        }
        let v = lo + (hi - lo) * u;
        if v >= hi {
            hi.next_down()
        } else {
            v
        }
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.random::<u64>()
    }
}

/// Uniform draw on `[lo, hi)`.
pub fn uniform(rng: &mut StreamRng, lo: f64, hi: f64) -> f64 {
    assert!(lo < hi, "uniform needs lo < hi");
    rng.affine_unit(lo, hi)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}
