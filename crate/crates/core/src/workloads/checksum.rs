/// Wrapping 32-bit sum of the bytes. This is the critical-section payload of
/// the mutex and semaphore workload benchmarks.
pub fn additive_checksum(bytes: &[u8]) -> u32 {
    bytes.iter().fold(0u32, |acc, &b| acc.wrapping_add(b as u32))
}
