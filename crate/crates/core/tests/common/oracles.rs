//! Independent reference implementations for the workload kernels, written
//! the slow, obvious way.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sfpbench::workloads::adpcm::{adpcm_codec, mean_square_error};
use sfpbench::workloads::sobel::sobel_pipeline;
use sfpbench::workloads::{crc32, Graph, GrayImage, Matrix, UNREACHABLE};

/// Bit-at-a-time reflected CRC-32 (polynomial 0xEDB88320).
pub fn crc32_bitwise(bytes: &[u8]) -> u32 {
    let mut crc = 0xFFFF_FFFFu32;
    for &b in bytes {
        crc ^= b as u32;
        for _ in 0..8 {
            crc = if crc & 1 == 1 {
                (crc >> 1) ^ 0xEDB8_8320
            } else {
                crc >> 1
            };
        }
    }
    !crc
}

pub fn crc_check(cases: usize, seed: u64) -> Result<(), String> {
    if crc32(b"123456789") != 0xCBF4_3926 {
        return Err(format!("CRC-32(\"123456789\") = {:#010x}", crc32(b"123456789")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..cases {
        let len = rng.gen_range(0..300);
        let data: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
        if crc32(&data) != crc32_bitwise(&data) {
            return Err(format!("CRC mismatch on {data:?}"));
        }
    }
    Ok(())
}

/// All-pairs shortest paths; `None` is unreachable.
pub fn floyd_warshall(n: usize, edges: &[(usize, usize, i64)]) -> Vec<Vec<Option<u64>>> {
    let mut d = vec![vec![None; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = Some(0);
    }
    for &(u, v, w) in edges {
        let w = w as u64;
        if d[u][v].is_none_or(|old| w < old) {
            d[u][v] = Some(w);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(a), Some(b)) = (d[i][k], d[k][j]) {
                    if d[i][j].is_none_or(|old| a + b < old) {
                        d[i][j] = Some(a + b);
                    }
                }
            }
        }
    }
    d
}

pub fn dijkstra_vs_floyd(cases: usize, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        let n = rng.gen_range(1..=8);
        let m = rng.gen_range(0..=n * n);
        // self loops, parallel edges and zero weights all allowed
        let edges: Vec<(usize, usize, i64)> = (0..m)
            .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..=50)))
            .collect();
        let g = Graph::new(n, &edges).map_err(|e| e.to_string())?;
        let fw = floyd_warshall(n, &edges);
        for (s, row) in fw.iter().enumerate() {
            let got = g.shortest_paths(s);
            let want: Vec<u64> = row.iter().map(|d| d.unwrap_or(UNREACHABLE)).collect();
            if got != want {
                return Err(format!("case {case}, source {s}: {got:?} != {want:?} for {edges:?}"));
            }
        }
    }
    Ok(())
}

const GAUSS: [[i32; 3]; 3] = [[1, 2, 1], [2, 4, 2], [1, 2, 1]];
const KX: [[i32; 3]; 3] = [[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]];
const KY: [[i32; 3]; 3] = [[-1, -2, -1], [0, 0, 0], [1, 2, 1]];

/// 3x3 correlation with replicated borders.
fn convolve(w: usize, h: usize, px: &[i32], k: &[[i32; 3]; 3], x: usize, y: usize) -> i32 {
    let mut acc = 0;
    for (ky, row) in k.iter().enumerate() {
        for (kx, &c) in row.iter().enumerate() {
            let sx = (x as i64 + kx as i64 - 1).clamp(0, w as i64 - 1) as usize;
            let sy = (y as i64 + ky as i64 - 1).clamp(0, h as i64 - 1) as usize;
            acc += c * px[sy * w + sx];
        }
    }
    acc
}

pub fn sobel_reference(img: &GrayImage) -> Vec<u8> {
    let (w, h) = (img.width, img.height);
    let src: Vec<i32> = img.pixels.iter().map(|&p| p as i32).collect();
    let mut blurred = vec![0i32; w * h];
    for y in 0..h {
        for x in 0..w {
            let s = convolve(w, h, &src, &GAUSS, x, y);
            blurred[y * w + x] = (s as f64 / 16.0).round() as i32;
        }
    }
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let gx = convolve(w, h, &blurred, &KX, x, y);
            let gy = convolve(w, h, &blurred, &KY, x, y);
            out.push((gx.abs() + gy.abs()).min(255) as u8);
        }
    }
    out
}

pub fn sobel_vs_convolution(cases: usize, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        let px: Vec<u8> = (0..16 * 16).map(|_| rng.gen()).collect();
        let img = GrayImage::new(16, 16, px);
        let got = sobel_pipeline(&img).map_err(|e| e.to_string())?;
        if got.pixels != sobel_reference(&img) {
            return Err(format!("case {case}: Sobel output differs from direct convolution"));
        }
    }
    Ok(())
}

/// Step sizes of the IMA/DVI reference codec.
const IMA_STEPS: [i32; 89] = [
    7, 8, 9, 10, 11, 12, 13, 14, 16, 17, 19, 21, 23, 25, 28, 31, 34, 37, 41, 45, 50, 55, 60, 66, 73, 80, 88, 97, 107,
    118, 130, 143, 157, 173, 190, 209, 230, 253, 279, 307, 337, 371, 408, 449, 494, 544, 598, 658, 724, 796, 876, 963,
    1060, 1166, 1282, 1411, 1552, 1707, 1878, 2066, 2272, 2499, 2749, 3024, 3327, 3660, 4026, 4428, 4871, 5358, 5894,
    6484, 7132, 7845, 8630, 9493, 10442, 11487, 12635, 13899, 15289, 16818, 18500, 20350, 22385, 24623, 27086, 29794,
    32767,
];
const IMA_INDEX: [i32; 16] = [-1, -1, -1, -1, 2, 4, 6, 8, -1, -1, -1, -1, 2, 4, 6, 8];

/// Encoder of the classic DVI reference code, returning what its decoder
/// reconstructs (the encoder tracks the same predictor).
pub fn ima_reference_roundtrip(samples: &[i16]) -> Vec<i16> {
    let (mut valpred, mut index) = (0i32, 0usize);
    let mut out = Vec::with_capacity(samples.len());
    for &val in samples {
        let mut step = IMA_STEPS[index];
        let mut diff = val as i32 - valpred;
        let sign = if diff < 0 { 8 } else { 0 };
        if sign != 0 {
            diff = -diff;
        }
        let mut delta = 0;
        let mut vpdiff = step >> 3;
        if diff >= step {
            delta = 4;
            diff -= step;
            vpdiff += step;
        }
        step >>= 1;
        if diff >= step {
            delta |= 2;
            diff -= step;
            vpdiff += step;
        }
        step >>= 1;
        if diff >= step {
            delta |= 1;
            vpdiff += step;
        }
        valpred = if sign != 0 { valpred - vpdiff } else { valpred + vpdiff }.clamp(-32768, 32767);
        delta |= sign;
        index = (index as i32 + IMA_INDEX[delta as usize]).clamp(0, 88) as usize;
        out.push(valpred as i16);
    }
    out
}

pub fn seeded_signal(rng: &mut ChaCha8Rng, len: usize) -> Vec<i16> {
    let (f1, f2) = (rng.gen_range(8.0..200.0), rng.gen_range(3.0..40.0));
    let (a1, a2) = (rng.gen_range(1000.0..12000.0), rng.gen_range(0.0..6000.0));
    let noise = rng.gen_range(0.0..1500.0);
    (0..len)
        .map(|i| {
            let t = i as f64;
            let v = a1 * (std::f64::consts::TAU * t / f1).sin()
                + a2 * (std::f64::consts::TAU * t / f2).cos()
                + rng.gen_range(-noise..=noise);
            v.round().clamp(-32768.0, 32767.0) as i16
        })
        .collect()
}

/// MSE of the codec under test must not exceed the reference codec's MSE
/// on the same signal. Returns the worst ratio seen.
pub fn adpcm_within_reference(cases: usize, seed: u64) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let len = rng.gen_range(256..4096);
        let x = seeded_signal(&mut rng, len);
        let out = adpcm_codec(&x);
        if out.encoded.len() != len.div_ceil(2) {
            return Err(format!("case {case}: {} bytes for {len} samples", out.encoded.len()));
        }
        let ours = mean_square_error(&x, &out.decoded);
        let bound = mean_square_error(&x, &ima_reference_roundtrip(&x));
        if ours > bound {
            return Err(format!("case {case}: MSE {ours} above reference bound {bound}"));
        }
        if bound > 0.0 {
            worst = worst.max(ours / bound);
        }
    }
    Ok(worst)
}

pub fn matmul_triple_loop(n: usize, a: &[i64], b: &[i64]) -> Vec<i64> {
    let mut c = vec![0i64; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0i64;
            for k in 0..n {
                s = s.wrapping_add(a[i * n + k].wrapping_mul(b[k * n + j]));
            }
            c[i * n + j] = s;
        }
    }
    c
}

pub fn matrix_vs_triple_loop(cases: usize, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        let a: Vec<i64> = (0..25).map(|_| rng.gen_range(-1000..=1000)).collect();
        let b: Vec<i64> = (0..25).map(|_| rng.gen_range(-1000..=1000)).collect();
        let got = Matrix::from_rows(5, a.clone())
            .multiply(&Matrix::from_rows(5, b.clone()))
            .map_err(|e| e.to_string())?;
        if got.as_slice() != matmul_triple_loop(5, &a, &b) {
            return Err(format!("case {case}: product differs"));
        }
    }
    Ok(())
}
