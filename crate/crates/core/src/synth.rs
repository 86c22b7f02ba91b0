//! Synthetic ceiling-camera scenes with known ground truth, and a simple
//! threshold detector that finds the rendered people in fragment rasters.
//!
//! People are bright capsules lying along the radial direction, so after
//! unwarping they stand upright with the head at the top of the fragment.
//! Everyone circles the centre at the same angular speed, which keeps the
//! spacing between people fixed.

use std::collections::VecDeque;
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::OmniFrame;
use crate::geometry::{DetectionBox, OmniCameraModel, Point2};
use crate::label::{
    DetectionProvider, FragmentDetections, FrameAnnotation, Keypoint, LabelError, NormBox, PoseDetection, ProviderKind,
};

const BACKGROUND: f64 = 40.0;
const TEXTURE: f64 = 20.0;
const PERSON: f64 = 220.0;
/// Capsule length and width as fractions of the image side.
const LENGTH: f64 = 0.16;
const WIDTH: f64 = 0.06;
/// Range of capsule centre radii as fractions of the outer radius.
const RADIUS_RANGE: (f64, f64) = (0.55, 0.7);
/// Radial wobble as a fraction of the outer radius.
const WOBBLE: f64 = 0.03;
const JITTER_DEG: f64 = 10.0;
/// Resolution the movement speeds are quoted at.
const SPEED_SCALE: f64 = 32.0;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("image side {0} is too small (need at least 64)")]
    TooSmall(usize),
    #[error("{0} people do not fit around the annulus")]
    TooCrowded(usize),
    #[error("fps must be positive, got {0}")]
    Fps(f64),
    #[error("noise amplitude {0} must be within [0, 60]")]
    Noise(f64),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Movement {
    Limited,
    #[default]
    Moderate,
    High,
}

impl Movement {
    /// Slowest per-person displacement, in pixels per frame at 32×32.
    pub fn low_res_speed(self) -> f64 {
        match self {
            Movement::Limited => 0.05,
            Movement::Moderate => 0.5,
            Movement::High => 2.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticScene {
    pub persons: usize,
    pub movement: Movement,
    /// Uniform per-pixel noise amplitude in grey levels.
    pub noise: f64,
    /// Square image side in pixels.
    pub size: usize,
    pub fps: f64,
    pub seed: u64,
}

impl Default for SyntheticScene {
    fn default() -> Self {
        Self {
            persons: 3,
            movement: Movement::Moderate,
            noise: 8.0,
            size: 512,
            fps: 15.0,
            seed: 0,
        }
    }
}

impl SyntheticScene {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.size < 64 {
            return Err(SynthError::TooSmall(self.size));
        }
        if self.fps.is_nan() || self.fps <= 0.0 {
            return Err(SynthError::Fps(self.fps));
        }
        if !(0.0..=60.0).contains(&self.noise) {
            return Err(SynthError::Noise(self.noise));
        }
        // Neighbours must keep a clear gap even with worst-case jitter at the
        // innermost radius.
        if self.persons > 0 {
            let cam = self.camera();
            let r_min = RADIUS_RANGE.0 * cam.radius_outer;
            let gap = TAU / self.persons as f64 - 2.0 * JITTER_DEG.to_radians();
            if self.persons > 1 && gap * r_min < 2.0 * WIDTH * self.size as f64 {
                return Err(SynthError::TooCrowded(self.persons));
            }
        }
        Ok(())
    }

    pub fn camera(&self) -> OmniCameraModel {
        let s = self.size as f64;
        OmniCameraModel::centered(self.size, self.size, 0.12 * s, s / 2.0 - 4.0)
    }
}

/// Motion of one person in polar coordinates about the camera centre.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PersonTrack {
    pub angle0: f64,
    /// Angular speed in radians per frame.
    pub omega: f64,
    pub radius: f64,
    pub wobble: f64,
    pub wobble_phase: f64,
}

impl PersonTrack {
    /// Capsule centre as (angle, radius) at a frame.
    pub fn polar(&self, frame: u64) -> (f64, f64) {
        let f = frame as f64;
        let angle = (self.angle0 + self.omega * f).rem_euclid(TAU);
        let r = self.radius + self.wobble * (self.wobble_phase + 0.05 * f).sin();
        (angle, r)
    }
}

/// One rendered person in omni pixels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Capsule {
    /// Centre of the inner end cap.
    pub foot: Point2,
    /// Centre of the outer end cap.
    pub head: Point2,
    pub half_width: f64,
}

impl Capsule {
    pub fn bounding_box(&self) -> DetectionBox {
        let x0 = self.foot.x.min(self.head.x) - self.half_width;
        let y0 = self.foot.y.min(self.head.y) - self.half_width;
        let x1 = self.foot.x.max(self.head.x) + self.half_width;
        let y1 = self.foot.y.max(self.head.y) + self.half_width;
        DetectionBox::new(x0, y0, x1 - x0, y1 - y0, 1.0)
    }

    fn distance(&self, p: Point2) -> f64 {
        let (dx, dy) = (self.head.x - self.foot.x, self.head.y - self.foot.y);
        let len2 = dx * dx + dy * dy;
        let t = if len2 > 0.0 {
            (((p.x - self.foot.x) * dx + (p.y - self.foot.y) * dy) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        p.dist(Point2::new(self.foot.x + t * dx, self.foot.y + t * dy))
    }
}

/// Deterministic frame-by-frame renderer.
#[derive(Clone, Debug)]
pub struct SyntheticRenderer {
    scene: SyntheticScene,
    camera: OmniCameraModel,
    tracks: Vec<PersonTrack>,
    background: Vec<u8>,
}

impl SyntheticRenderer {
    pub fn new(scene: SyntheticScene) -> Result<Self, SynthError> {
        scene.validate()?;
        let camera = scene.camera();
        let s = scene.size as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(scene.seed);
        let r_out = camera.radius_outer;
        let radii: Vec<f64> = (0..scene.persons)
            .map(|_| rng.gen_range(RADIUS_RANGE.0..=RADIUS_RANGE.1) * r_out)
            .collect();
        let r_min = radii.iter().copied().fold(f64::INFINITY, f64::min);
        let speed = scene.movement.low_res_speed() * s / SPEED_SCALE;
        let omega = if scene.persons > 0 { speed / r_min } else { 0.0 };
        let phase = rng.gen_range(0.0..TAU);
        let tracks = radii
            .into_iter()
            .enumerate()
            .map(|(i, radius)| PersonTrack {
                angle0: phase
                    + TAU * i as f64 / scene.persons as f64
                    + rng.gen_range(-JITTER_DEG..=JITTER_DEG).to_radians(),
                omega,
                radius,
                wobble: WOBBLE * r_out,
                wobble_phase: rng.gen_range(0.0..TAU),
            })
            .collect();
        let (cx, cy) = (camera.center_x, camera.center_y);
        let mut background = vec![0u8; scene.size * scene.size];
        for y in 0..scene.size {
            for x in 0..scene.size {
                let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                if dx.hypot(dy) <= camera.radius_outer + 3.0 {
                    let v = BACKGROUND + TEXTURE * (x as f64 * 0.11).sin() * (y as f64 * 0.07).cos();
                    background[y * scene.size + x] = v.round() as u8;
                }
            }
        }
        Ok(Self {
            scene,
            camera,
            tracks,
            background,
        })
    }

    pub fn scene(&self) -> &SyntheticScene {
        &self.scene
    }

    pub fn camera(&self) -> &OmniCameraModel {
        &self.camera
    }

    pub fn tracks(&self) -> &[PersonTrack] {
        &self.tracks
    }

    pub fn capsules(&self, frame: u64) -> Vec<Capsule> {
        let s = self.scene.size as f64;
        let half_len = LENGTH * s / 2.0;
        let (cx, cy) = (self.camera.center_x, self.camera.center_y);
        self.tracks
            .iter()
            .map(|t| {
                let (a, r) = t.polar(frame);
                let at = |rr: f64| Point2::new(cx + rr * a.cos(), cy + rr * a.sin());
                Capsule {
                    foot: at(r - half_len),
                    head: at(r + half_len),
                    half_width: WIDTH * s / 2.0,
                }
            })
            .collect()
    }

    pub fn render(&self, frame: u64) -> OmniFrame {
        let n = self.scene.size;
        let mut data = self.background.clone();
        for c in self.capsules(frame) {
            let b = c.bounding_box();
            let x0 = b.x.floor().max(0.0) as usize;
            let y0 = b.y.floor().max(0.0) as usize;
            let x1 = ((b.x + b.w).ceil() as usize).min(n - 1);
            let y1 = ((b.y + b.h).ceil() as usize).min(n - 1);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    if c.distance(Point2::new(x as f64, y as f64)) <= c.half_width {
                        data[y * n + x] = PERSON as u8;
                    }
                }
            }
        }
        if self.scene.noise > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(self.scene.seed);
            rng.set_stream(frame + 1);
            let amp = self.scene.noise.round() as i32;
            for (v, bg) in data.iter_mut().zip(&self.background) {
                // Pixels outside the image circle stay black.
                if *bg > 0 || *v > 0 {
                    *v = (*v as i32 + rng.gen_range(-amp..=amp)).clamp(0, 255) as u8;
                }
            }
        }
        OmniFrame::new(n, n, 1, data)
            .expect("scene buffer")
            .with_stamp(frame, frame as f64 / self.scene.fps)
    }

    /// Ground truth for a frame: capsule boxes (score 1) and head points,
    /// normalised like any annotation.
    pub fn truth(&self, frame: u64) -> FrameAnnotation {
        let n = self.scene.size;
        let caps = self.capsules(frame);
        FrameAnnotation {
            frame,
            ts: frame as f64 / self.scene.fps,
            accepted: true,
            boxes: caps
                .iter()
                .map(|c| NormBox::from_pixels(&c.bounding_box(), n, n))
                .collect(),
            points: Some(
                caps.iter()
                    .map(|c| [c.head.x / n as f64, c.head.y / n as f64])
                    .collect(),
            ),
            error: None,
        }
    }
}

/// Frames and ground truth of a rendered scene.
#[derive(Clone, Debug)]
pub struct SyntheticDataset {
    pub camera: OmniCameraModel,
    pub frames: Vec<OmniFrame>,
    pub truth: Vec<FrameAnnotation>,
}

pub fn render_synthetic(scene: &SyntheticScene, frames: usize) -> Result<SyntheticDataset, SynthError> {
    let r = SyntheticRenderer::new(scene.clone())?;
    Ok(SyntheticDataset {
        camera: *r.camera(),
        frames: (0..frames as u64).map(|i| r.render(i)).collect(),
        truth: (0..frames as u64).map(|i| r.truth(i)).collect(),
    })
}

/// Bright-blob detector that stands in for a trained network on synthetic
/// scenes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleDetector {
    pub threshold: u8,
    pub min_area: usize,
    /// Blobs touching the left or right fragment edge are cut off by the
    /// fragment border and usually seen whole by the neighbour.
    pub keep_edge_blobs: bool,
    /// Blobs whose bounding boxes come within this many pixels of each
    /// other are merged. Bridges the comb gaps interlacing leaves in
    /// moving people.
    #[serde(default)]
    pub merge_gap: usize,
}

impl Default for OracleDetector {
    fn default() -> Self {
        Self {
            threshold: 128,
            min_area: 20,
            keep_edge_blobs: false,
            merge_gap: 0,
        }
    }
}

/// Connected bright region.
#[derive(Clone, Debug, PartialEq)]
struct Blob {
    x0: usize,
    y0: usize,
    x1: usize,
    y1: usize,
    area: usize,
    sum: u64,
    sum_x: f64,
    sum_y: f64,
}

impl Blob {
    fn near(&self, o: &Blob, gap: usize) -> bool {
        self.x0 <= o.x1 + gap && o.x0 <= self.x1 + gap && self.y0 <= o.y1 + gap && o.y0 <= self.y1 + gap
    }

    fn absorb(&mut self, o: &Blob) {
        self.x0 = self.x0.min(o.x0);
        self.y0 = self.y0.min(o.y0);
        self.x1 = self.x1.max(o.x1);
        self.y1 = self.y1.max(o.y1);
        self.area += o.area;
        self.sum += o.sum;
        self.sum_x += o.sum_x;
        self.sum_y += o.sum_y;
    }
}

/// Merges blobs until no two are within `gap` pixels of each other.
fn merge_close(mut blobs: Vec<Blob>, gap: usize) -> Vec<Blob> {
    let mut merged = true;
    while merged {
        merged = false;
        let mut out: Vec<Blob> = Vec::with_capacity(blobs.len());
        for b in blobs {
            match out.iter_mut().find(|o| o.near(&b, gap)) {
                Some(o) => {
                    o.absorb(&b);
                    merged = true;
                }
                None => out.push(b),
            }
        }
        blobs = out;
    }
    blobs
}

impl OracleDetector {
    fn blobs(&self, raster: &OmniFrame) -> Vec<Blob> {
        let luma = if raster.channels() == 1 {
            raster.clone()
        } else {
            raster.to_luma()
        };
        let (w, h) = (luma.width(), luma.height());
        let px = luma.data();
        let mut seen = vec![false; w * h];
        let mut blobs = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..w * h {
            if seen[start] || px[start] < self.threshold {
                continue;
            }
            seen[start] = true;
            queue.push_back(start);
            let mut b = Blob {
                x0: usize::MAX,
                y0: usize::MAX,
                x1: 0,
                y1: 0,
                area: 0,
                sum: 0,
                sum_x: 0.0,
                sum_y: 0.0,
            };
            while let Some(i) = queue.pop_front() {
                let (x, y) = (i % w, i / w);
                b.x0 = b.x0.min(x);
                b.y0 = b.y0.min(y);
                b.x1 = b.x1.max(x);
                b.y1 = b.y1.max(y);
                b.area += 1;
                b.sum += px[i] as u64;
                b.sum_x += x as f64;
                b.sum_y += y as f64;
                let mut visit = |j: usize| {
                    if !seen[j] && px[j] >= self.threshold {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                };
                if x > 0 {
                    visit(i - 1);
                }
                if x + 1 < w {
                    visit(i + 1);
                }
                if y > 0 {
                    visit(i - w);
                }
                if y + 1 < h {
                    visit(i + w);
                }
            }
            blobs.push(b);
        }
        if self.merge_gap > 0 {
            blobs = merge_close(blobs, self.merge_gap);
        }
        blobs.retain(|b| {
            let on_edge = b.x0 == 0 || b.x1 + 1 == w;
            b.area >= self.min_area && (self.keep_edge_blobs || !on_edge)
        });
        blobs
    }

    fn score(&self, b: &Blob) -> f64 {
        let mean = b.sum as f64 / b.area as f64;
        let t = self.threshold as f64;
        0.5 + 0.5 * ((mean - t) / (255.0 - t)).clamp(0.0, 1.0)
    }

    /// `[x, y, w, h, score]` per blob, in raster pixels.
    pub fn detect_boxes(&self, raster: &OmniFrame) -> Vec<[f64; 5]> {
        self.blobs(raster)
            .iter()
            .map(|b| {
                [
                    b.x0 as f64,
                    b.y0 as f64,
                    (b.x1 - b.x0 + 1) as f64,
                    (b.y1 - b.y0 + 1) as f64,
                    self.score(b),
                ]
            })
            .collect()
    }

    /// Five keypoints per blob: top, left, centroid, right, bottom.
    pub fn detect_poses(&self, raster: &OmniFrame) -> Vec<Vec<[f64; 3]>> {
        self.blobs(raster)
            .iter()
            .map(|b| {
                let c = self.score(b);
                let (mx, my) = (b.sum_x / b.area as f64, b.sum_y / b.area as f64);
                vec![
                    [mx, b.y0 as f64, c],
                    [b.x0 as f64, my, c],
                    [mx, my, c],
                    [b.x1 as f64, my, c],
                    [mx, b.y1 as f64, c],
                ]
            })
            .collect()
    }
}

/// [`OracleDetector`] as an in-process provider.
#[derive(Clone, Debug)]
pub struct OracleProvider {
    pub name: String,
    pub kind: ProviderKind,
    pub detector: OracleDetector,
}

impl OracleProvider {
    pub fn new(name: impl Into<String>, kind: ProviderKind) -> Self {
        Self {
            name: name.into(),
            kind,
            detector: OracleDetector::default(),
        }
    }
}

impl DetectionProvider for OracleProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn kind(&self) -> ProviderKind {
        self.kind
    }

    fn detect(&mut self, frame: u64, fragment: usize, raster: &OmniFrame) -> Result<FragmentDetections, LabelError> {
        let mut out = FragmentDetections {
            fragment_index: fragment,
            ..Default::default()
        };
        match self.kind {
            ProviderKind::BoxDetector => {
                out.boxes = self
                    .detector
                    .detect_boxes(raster)
                    .into_iter()
                    .map(|[x, y, w, h, s]| {
                        let mut b = DetectionBox::new(x, y, w, h, s).with_source(self.name.as_str());
                        b.frame_index = frame;
                        b.fragment = Some(fragment);
                        b
                    })
                    .collect();
            }
            ProviderKind::PoseEstimator => {
                out.poses = self
                    .detector
                    .detect_poses(raster)
                    .into_iter()
                    .map(|kps| PoseDetection {
                        keypoints: kps.into_iter().map(|[x, y, c]| Keypoint::new(x, y, c)).collect(),
                        fragment_index: fragment,
                    })
                    .collect();
            }
        }
        Ok(out)
    }
}
