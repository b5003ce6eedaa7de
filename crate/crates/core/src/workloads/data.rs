//! Seeded default datasets and the file formats that can replace them.
//!
//! Formats: binary (P5) or plain (P2) PGM for images; edge-list text for
//! graphs (`nodes N` then one `from to weight` per line, `#` comments);
//! raw 16-bit little-endian PCM for signals.

use std::f64::consts::TAU;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Graph, GrayImage, Matrix, WorkloadError};

pub const DEFAULT_SEED: u64 = 0x5F9B_E7C4;
pub const IMAGE_SIDE: usize = 64;
pub const GRAPH_NODES: usize = 16;
pub const GRAPH_EDGES: usize = 40;
pub const SIGNAL_LEN: usize = 4096;
pub const MATRIX_DIM: usize = 8;
pub const BLOCK_LEN: usize = 1024;

/// Inputs of the complete applications and workload benchmarks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorkloadData {
    pub seed: u64,
    pub graph: Graph,
    pub image: GrayImage,
    pub signal: Vec<i16>,
    /// Critical-section payload of the mutex and semaphore workloads.
    pub block: Vec<u8>,
    pub matrix_dim: usize,
}

impl Default for WorkloadData {
    fn default() -> Self {
        Self::generate(DEFAULT_SEED)
    }
}

impl WorkloadData {
    pub fn generate(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        WorkloadData {
            seed,
            graph: random_graph(&mut rng, GRAPH_NODES, GRAPH_EDGES),
            image: synthetic_image(&mut rng, IMAGE_SIDE),
            signal: synthetic_signal(&mut rng, SIGNAL_LEN),
            block: random_bytes(&mut rng, BLOCK_LEN),
            matrix_dim: MATRIX_DIM,
        }
    }

    /// Generator for the per-iteration random payloads of APEX APP 3.
    pub fn payload_rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ 0xA5A5_0003)
    }

    pub fn load_image(path: &Path) -> Result<GrayImage, WorkloadError> {
        parse_pgm(&read(path)?)
    }

    pub fn load_graph(path: &Path) -> Result<Graph, WorkloadError> {
        let bytes = read(path)?;
        parse_edge_list(&String::from_utf8_lossy(&bytes))
    }

    pub fn load_signal(path: &Path) -> Result<Vec<i16>, WorkloadError> {
        parse_s16le(&read(path)?)
    }
}

fn read(path: &Path) -> Result<Vec<u8>, WorkloadError> {
    std::fs::read(path).map_err(|e| WorkloadError::Parse(format!("{}: {e}", path.display())))
}

pub fn random_bytes(rng: &mut impl Rng, len: usize) -> Vec<u8> {
    let mut v = vec![0u8; len];
    rng.fill(&mut v[..]);
    v
}

/// A ring through every node (so everything is reachable from 0) plus
/// random extra edges without self loops or duplicates.
pub fn random_graph(rng: &mut impl Rng, nodes: usize, edges: usize) -> Graph {
    let mut list: Vec<(usize, usize, i64)> = (0..nodes)
        .map(|i| (i, (i + 1) % nodes, rng.gen_range(1..=100)))
        .collect();
    let max = nodes * (nodes - 1);
    while list.len() < edges.min(max) {
        let (u, v) = (rng.gen_range(0..nodes), rng.gen_range(0..nodes));
        if u != v && !list.iter().any(|&(a, b, _)| a == u && b == v) {
            list.push((u, v, rng.gen_range(1..=100)));
        }
    }
    Graph::new(nodes, &list).expect("generated graph is valid")
}

/// Diagonal gradient with a bright rectangle, a dark disc and mild noise.
pub fn synthetic_image(rng: &mut impl Rng, side: usize) -> GrayImage {
    let c = side as f64 / 2.0;
    let mut px = Vec::with_capacity(side * side);
    for y in 0..side {
        for x in 0..side {
            let mut v = ((x + y) * 160 / (2 * side)) as i32 + 40;
            if (side / 8..side * 3 / 8).contains(&x) && (side / 8..side / 2).contains(&y) {
                v = 220;
            }
            let (dx, dy) = (x as f64 - c * 1.2, y as f64 - c * 1.2);
            if dx * dx + dy * dy < (side as f64 / 6.0).powi(2) {
                v = 15;
            }
            v += rng.gen_range(-6..=6);
            px.push(v.clamp(0, 255) as u8);
        }
    }
    GrayImage::new(side, side, px)
}

/// Two sines plus uniform noise, well inside the 16-bit range.
pub fn synthetic_signal(rng: &mut impl Rng, len: usize) -> Vec<i16> {
    (0..len)
        .map(|i| {
            let t = i as f64;
            let v = 9000.0 * (TAU * t / 64.0).sin() + 3000.0 * (TAU * t / 9.5).sin() + rng.gen_range(-400.0..400.0);
            v.round().clamp(i16::MIN as f64, i16::MAX as f64) as i16
        })
        .collect()
}

/// Two n x n matrices filled from `payload` (cycled), entries in -128..=127.
pub fn matrices_from(payload: &[u8], n: usize) -> (Matrix, Matrix) {
    let at = |i: usize| {
        if payload.is_empty() {
            0
        } else {
            payload[i % payload.len()] as i8 as i64
        }
    };
    let a = Matrix::from_rows(n, (0..n * n).map(at).collect());
    let b = Matrix::from_rows(n, (0..n * n).map(|i| at(i + n * n)).collect());
    (a, b)
}

pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage, WorkloadError> {
    let bad = |m: &str| WorkloadError::Parse(format!("PGM: {m}"));
    let mut pos = 0;
    let mut token = || -> Option<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        (pos > start).then(|| String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = token().ok_or_else(|| bad("empty file"))?;
    let mut num = |what: &str| -> Result<usize, WorkloadError> {
        token()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad(&format!("missing {what}")))
    };
    let width = num("width")?;
    let height = num("height")?;
    let maxval = num("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(bad("only 8-bit images are supported"));
    }
    let scale = |v: usize| ((v.min(maxval) * 255 + maxval / 2) / maxval) as u8;
    let pixels = match magic.as_str() {
        "P5" => {
            // exactly one whitespace byte separates the header from the raster
            let start = pos + 1;
            let raw = bytes
                .get(start..start + width * height)
                .ok_or_else(|| bad("truncated raster"))?;
            raw.iter().map(|&v| scale(v as usize)).collect()
        }
        "P2" => (0..width * height)
            .map(|_| num("pixel").map(scale))
            .collect::<Result<Vec<_>, _>>()?,
        _ => return Err(bad("expected P2 or P5")),
    };
    Ok(GrayImage::new(width, height, pixels))
}

pub fn parse_edge_list(text: &str) -> Result<Graph, WorkloadError> {
    let bad = |line: usize, m: &str| WorkloadError::Parse(format!("edge list line {line}: {m}"));
    let mut nodes = None;
    let mut edges = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match (nodes, fields.as_slice()) {
            (None, ["nodes", n]) => nodes = Some(n.parse::<usize>().map_err(|_| bad(i + 1, "bad node count"))?),
            (None, _) => return Err(bad(i + 1, "expected `nodes N` first")),
            (Some(_), [u, v, w]) => {
                let p = |s: &str| s.parse::<i64>().map_err(|_| bad(i + 1, "bad number"));
                let (u, v) = (p(u)?, p(v)?);
                if u < 0 || v < 0 {
                    return Err(bad(i + 1, "negative node index"));
                }
                edges.push((u as usize, v as usize, p(w)?));
            }
            (Some(_), _) => return Err(bad(i + 1, "expected `from to weight`")),
        }
    }
    Graph::new(nodes.ok_or_else(|| bad(0, "no `nodes` line"))?, &edges)
}

pub fn parse_s16le(bytes: &[u8]) -> Result<Vec<i16>, WorkloadError> {
    if !bytes.len().is_multiple_of(2) {
        return Err(WorkloadError::Parse(
            "signal length is not a whole number of samples".into(),
        ));
    }
    Ok(bytes
        .chunks_exact(2)
        .map(|c| i16::from_le_bytes([c[0], c[1]]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_have_documented_shape() {
        let d = WorkloadData::default();
        assert_eq!(d.graph.nodes(), 16);
        assert_eq!(d.graph.edge_count(), 40);
        assert_eq!((d.image.width, d.image.height), (64, 64));
        assert_eq!(d.signal.len(), 4096);
        assert_eq!(d.block.len(), 1024);
        assert!(d
            .graph
            .shortest_paths(0)
            .iter()
            .all(|&x| x != super::super::UNREACHABLE));
    }

    #[test]
    fn seeds_reproduce() {
        assert_eq!(WorkloadData::generate(9), WorkloadData::generate(9));
        assert_ne!(WorkloadData::generate(9).signal, WorkloadData::generate(10).signal);
    }

    #[test]
    fn pgm_formats() {
        let p2 = b"P2\n# c\n3 2\n255\n0 1 2\n3 4 5\n";
        let img = parse_pgm(p2).unwrap();
        assert_eq!(img.pixels, vec![0, 1, 2, 3, 4, 5]);
        let mut p5 = b"P5 2 2 255\n".to_vec();
        p5.extend([9, 8, 7, 6]);
        assert_eq!(parse_pgm(&p5).unwrap().pixels, vec![9, 8, 7, 6]);
        assert!(parse_pgm(b"P6 1 1 255\n\0\0\0").is_err());
    }

    #[test]
    fn edge_list() {
        let g = parse_edge_list("# demo\nnodes 3\n0 1 4\n1 2 1 # tail\n").unwrap();
        assert_eq!(g.shortest_paths(0), vec![0, 4, 5]);
        assert!(matches!(
            parse_edge_list("nodes 2\n0 1 -3\n"),
            Err(WorkloadError::NegativeWeight { .. })
        ));
        assert!(parse_edge_list("0 1 2\n").is_err());
    }

    #[test]
    fn raw_signal() {
        assert_eq!(parse_s16le(&[1, 0, 0xFF, 0xFF]).unwrap(), vec![1, -1]);
        assert!(parse_s16le(&[1]).is_err());
    }

    #[test]
    fn matrices_cycle_the_payload() {
        let (a, b) = matrices_from(&[1, 2, 255], 2);
        assert_eq!(a.as_slice(), &[1, 2, -1, 1]);
        assert_eq!(b.as_slice(), &[2, -1, 1, 2]);
    }
}
