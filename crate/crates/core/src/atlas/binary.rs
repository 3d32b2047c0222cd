use super::bundle::AtlasBundle;
use super::colors::ColorMode;

/// Bytes per point: x, y as f32, topic as i32, one u16 legend index per
/// color mode.
pub const POINT_RECORD_BYTES: usize = 4 + 4 + 4 + 2 * ColorMode::ALL.len();

/// Packed little-endian point stream in point order, no header.
pub fn encode_points(bundle: &AtlasBundle) -> Vec<u8> {
    let mut out = Vec::with_capacity(bundle.points.len() * POINT_RECORD_BYTES);
    for (i, p) in bundle.points.iter().enumerate() {
        out.extend_from_slice(&p.x.to_le_bytes());
        out.extend_from_slice(&p.y.to_le_bytes());
        out.extend_from_slice(&(p.topic_id as i32).to_le_bytes());
        for t in &bundle.color_tables {
            out.extend_from_slice(&t.indices[i].to_le_bytes());
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PackedPoint {
    pub x: f32,
    pub y: f32,
    pub topic_id: i32,
    pub colors: [u16; 4],
}

pub fn decode_points(bytes: &[u8]) -> Option<Vec<PackedPoint>> {
    if !bytes.len().is_multiple_of(POINT_RECORD_BYTES) {
        return None;
    }
    Some(
        bytes
            .chunks_exact(POINT_RECORD_BYTES)
            .map(|c| {
                let f = |o: usize| f32::from_le_bytes(c[o..o + 4].try_into().expect("4 bytes"));
                let u = |o: usize| u16::from_le_bytes(c[o..o + 2].try_into().expect("2 bytes"));
                PackedPoint {
                    x: f(0),
                    y: f(4),
                    topic_id: i32::from_le_bytes(c[8..12].try_into().expect("4 bytes")),
                    colors: [u(12), u(14), u(16), u(18)],
                }
            })
            .collect(),
    )
}
