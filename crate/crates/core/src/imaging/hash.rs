use super::{resize_to, GrayImage};

/// 64-bit average hash.
///
/// The image is reduced to 8x8 by nearest-neighbour sampling; bit
/// `r * 8 + c` (counting from the least significant bit) is set when pixel
/// `(r, c)` is strictly brighter than the mean of the 64 samples. A flat
/// image therefore hashes to zero.
pub fn average_hash(img: &GrayImage) -> u64 {
    let small = resize_to(img, 8, 8);
    let sum: u32 = small.data().iter().map(|&v| u32::from(v)).sum();
    // v > sum / 64  <=>  64 v > sum
    small
        .data()
        .iter()
        .enumerate()
        .filter(|&(_, &v)| 64 * u32::from(v) > sum)
        .fold(0u64, |acc, (k, _)| acc | (1 << k))
}

pub fn hamming(a: u64, b: u64) -> u32 {
    (a ^ b).count_ones()
}
