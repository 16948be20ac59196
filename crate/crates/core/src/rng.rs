use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Samples are generated in fixed-size chunks, each with its own ChaCha
/// stream, so output does not depend on how chunks are scheduled.
pub(crate) const CHUNK: usize = 1 << 16;

pub(crate) fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

/// Fills `out` chunk by chunk, calling `fill(rng, chunk_index, slice)`.
pub(crate) fn fill_chunked<T, F>(out: &mut [T], seed: u64, fill: F)
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize, &mut [T]) + Sync,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        out.par_chunks_mut(CHUNK)
            .enumerate()
            .for_each(|(k, slice)| fill(&mut chunk_rng(seed, k), k, slice));
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (k, slice) in out.chunks_mut(CHUNK).enumerate() {
            fill(&mut chunk_rng(seed, k), k, slice);
        }
    }
}
