use super::category::{CategoryLibrary, LOOP_SAMPLES};
use super::{CHUNK_SAMPLES, SAMPLE_RATE};
use crate::episode::SoundCategoryId;
use crate::error::{Error, Result};
use crate::scene::{Geodesic, Point, Pose, SceneGrid};

/// 0.25 s of two-channel audio at the agent's ears.
#[derive(Debug, Clone, PartialEq)]
pub struct BinauralChunk {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl BinauralChunk {
    pub fn silent() -> Self {
        Self {
            left: vec![0.0; CHUNK_SAMPLES],
            right: vec![0.0; CHUNK_SAMPLES],
        }
    }

    pub fn new(left: Vec<f64>, right: Vec<f64>) -> Result<Self> {
        for ch in [&left, &right] {
            if ch.len() != CHUNK_SAMPLES {
                return Err(Error::ChunkLength {
                    expected: CHUNK_SAMPLES,
                    actual: ch.len(),
                });
            }
            if ch.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("binaural chunk".into()));
            }
        }
        Ok(Self { left, right })
    }

    pub fn is_silent(&self) -> bool {
        self.left.iter().chain(&self.right).all(|&x| x == 0.0)
    }

    pub fn swapped(&self) -> Self {
        Self {
            left: self.right.clone(),
            right: self.left.clone(),
        }
    }
}

/// A goal's emitter as seen by the renderer.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceState {
    pub position: Point,
    pub category: SoundCategoryId,
    pub offset_s: f64,
    /// Reached goals stop emitting.
    pub active: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedChunk {
    pub chunk: BinauralChunk,
    /// Indices of active sources that contributed nothing because no path reaches them.
    pub unreachable_sources: Vec<usize>,
}

/// Left/right gains for a source at relative bearing `beta_deg`
/// (counterclockwise positive, so positive bearings favour the left ear).
pub fn pan_gains(beta_deg: f64) -> (f64, f64) {
    // Straight behind is exactly centered, whichever sign the bearing carries.
    let s = if beta_deg.abs() == 180.0 { 0.0 } else { beta_deg.to_radians().sin() };
    (0.5 * (1.0 + s), 0.5 * (1.0 - s))
}

pub fn attenuation(geodesic: f64) -> f64 {
    1.0 / geodesic.max(1.0)
}

/// First loop sample heard at episode time `t0` for a source started at `offset_s`.
fn loop_start(t0: f64, offset_s: f64) -> usize {
    ((t0 + offset_s) * SAMPLE_RATE).round() as usize % LOOP_SAMPLES
}

/// Renders the chunk heard at `pose` over `[t0, t0 + 0.25)`.
pub fn render_binaural(
    grid: &SceneGrid,
    library: &CategoryLibrary,
    pose: Pose,
    sources: &[SourceState],
    t0: f64,
) -> Result<RenderedChunk> {
    let here = grid.snap_to_cell(pose.position)?;
    let distances = sources
        .iter()
        .map(|s| {
            if !s.active {
                return Ok(Geodesic::Unreachable);
            }
            let there = grid.snap_to_cell(s.position)?;
            Ok(match grid.steps_between(here, there) {
                Some(steps) => Geodesic::Reachable(crate::episode::steps_to_meters(steps)),
                None => Geodesic::Unreachable,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    render_with_distances(library, pose, sources, &distances, t0)
}

/// [`render_binaural`] with caller-supplied geodesic distances, one per source.
pub fn render_with_distances(
    library: &CategoryLibrary,
    pose: Pose,
    sources: &[SourceState],
    distances: &[Geodesic],
    t0: f64,
) -> Result<RenderedChunk> {
    if distances.len() != sources.len() {
        return Err(Error::Shape(format!(
            "{} distances for {} sources",
            distances.len(),
            sources.len()
        )));
    }
    let mut chunk = BinauralChunk::silent();
    let mut unreachable_sources = Vec::new();
    for (k, (src, dist)) in sources.iter().zip(distances).enumerate() {
        if !src.active {
            continue;
        }
        let Geodesic::Reachable(d) = *dist else {
            unreachable_sources.push(k);
            continue;
        };
        let wave = library.waveform(src.category)?;
        let beta = if src.position == pose.position {
            0.0
        } else {
            pose.relative_bearing_deg(&src.position)
        };
        let (gl, gr) = pan_gains(beta);
        let att = attenuation(d);
        let (gain_l, gain_r) = (att * gl, att * gr);
        let start = loop_start(t0, src.offset_s);
        for n in 0..CHUNK_SAMPLES {
            let x = wave[(start + n) % LOOP_SAMPLES];
            chunk.left[n] += gain_l * x;
            chunk.right[n] += gain_r * x;
        }
    }
    Ok(RenderedChunk {
        chunk,
        unreachable_sources,
    })
}
