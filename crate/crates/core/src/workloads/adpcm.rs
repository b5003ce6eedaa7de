//! IMA ADPCM: 16-bit PCM to 4-bit codes and back.
//!
//! Codes are packed two per byte, first sample in the low nibble, so N
//! samples take ceil(N/2) bytes. Encoder and decoder both start from a zero
//! predictor and step index 0.

pub const STEP_TABLE: [i32; 89] = [
    7, 8, 9, 10, 11, 12, 13, 14, 16, 17, 19, 21, 23, 25, 28, 31, 34, 37, 41, 45, 50, 55, 60, 66, 73, 80, 88, 97, 107,
    118, 130, 143, 157, 173, 190, 209, 230, 253, 279, 307, 337, 371, 408, 449, 494, 544, 598, 658, 724, 796, 876, 963,
    1060, 1166, 1282, 1411, 1552, 1707, 1878, 2066, 2272, 2499, 2749, 3024, 3327, 3660, 4026, 4428, 4871, 5358, 5894,
    6484, 7132, 7845, 8630, 9493, 10442, 11487, 12635, 13899, 15289, 16818, 18500, 20350, 22385, 24623, 27086, 29794,
    32767,
];

pub const INDEX_TABLE: [i32; 16] = [-1, -1, -1, -1, 2, 4, 6, 8, -1, -1, -1, -1, 2, 4, 6, 8];

#[derive(Clone, Copy, Debug, Default)]
struct State {
    predicted: i32,
    index: i32,
}

impl State {
    /// Applies one code to the predictor, exactly as the decoder does.
    fn advance(&mut self, code: u8) -> i16 {
        let step = STEP_TABLE[self.index as usize];
        let mut diff = step >> 3;
        if code & 4 != 0 {
            diff += step;
        }
        if code & 2 != 0 {
            diff += step >> 1;
        }
        if code & 1 != 0 {
            diff += step >> 2;
        }
        if code & 8 != 0 {
            self.predicted -= diff;
        } else {
            self.predicted += diff;
        }
        self.predicted = self.predicted.clamp(i16::MIN as i32, i16::MAX as i32);
        self.index = (self.index + INDEX_TABLE[code as usize]).clamp(0, 88);
        self.predicted as i16
    }

    fn quantize(&self, sample: i16) -> u8 {
        let step = STEP_TABLE[self.index as usize];
        let mut diff = sample as i32 - self.predicted;
        let mut code = 0u8;
        if diff < 0 {
            code = 8;
            diff = -diff;
        }
        let mut s = step;
        if diff >= s {
            code |= 4;
            diff -= s;
        }
        s >>= 1;
        if diff >= s {
            code |= 2;
            diff -= s;
        }
        s >>= 1;
        if diff >= s {
            code |= 1;
        }
        code
    }
}

pub fn adpcm_encode(samples: &[i16]) -> Vec<u8> {
    let mut st = State::default();
    let mut out = vec![0u8; samples.len().div_ceil(2)];
    for (i, &x) in samples.iter().enumerate() {
        let code = st.quantize(x);
        st.advance(code);
        out[i / 2] |= code << (4 * (i % 2));
    }
    out
}

/// Decodes the first `count` codes of `encoded`.
pub fn adpcm_decode(encoded: &[u8], count: usize) -> Vec<i16> {
    let mut st = State::default();
    (0..count.min(encoded.len() * 2))
        .map(|i| st.advance((encoded[i / 2] >> (4 * (i % 2))) & 0xF))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdpcmOutput {
    pub encoded: Vec<u8>,
    pub decoded: Vec<i16>,
}

/// One full pass of the benchmark kernel: encode, then decode.
pub fn adpcm_codec(samples: &[i16]) -> AdpcmOutput {
    let encoded = adpcm_encode(samples);
    let decoded = adpcm_decode(&encoded, samples.len());
    AdpcmOutput { encoded, decoded }
}

/// Mean squared error between two equally long signals.
pub fn mean_square_error(a: &[i16], b: &[i16]) -> f64 {
    assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return 0.0;
    }
    let sum: f64 = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    sum / a.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_to_one_size() {
        let x = vec![100i16; 1000];
        assert_eq!(adpcm_encode(&x).len(), 500);
        assert_eq!(adpcm_encode(&x[..999]).len(), 500);
    }

    #[test]
    fn silence_stays_below_smallest_step() {
        let out = adpcm_codec(&[0; 256]);
        assert!(out.decoded.iter().all(|v| v.unsigned_abs() as i32 <= STEP_TABLE[0]));
    }

    #[test]
    fn tracks_a_slow_ramp() {
        let x: Vec<i16> = (0..2000).map(|i| (i * 8) as i16).collect();
        let out = adpcm_codec(&x);
        let tail = &out.decoded[200..];
        for (i, v) in tail.iter().enumerate() {
            assert!((*v as i32 - x[200 + i] as i32).abs() < 64, "sample {}", 200 + i);
        }
    }
}
