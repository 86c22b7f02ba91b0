//! External detection providers.
//!
//! A provider is a long-running process that reads one JSON request per line
//! on stdin and answers with one JSON line on stdout:
//!
//! ```text
//! → {"v":1,"frame":12,"fragment":0,"image":"/tmp/.../f12_g0.ppm","kind":"boxes"}
//! ← {"v":1,"boxes":[[x,y,w,h,score],...]}
//! → {"v":1,"frame":12,"fragment":1,"image":"...","kind":"pose"}
//! ← {"v":1,"poses":[[[x,y,c],...],...]}
//! ```
//!
//! The raster is written as binary PGM/PPM before the request is sent.
//! Coordinates in replies are fragment pixels.

use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::frame::OmniFrame;
use crate::geometry::{unwarp_frame, DetectionBox, FragmentMap};

use super::{Keypoint, LabelError, PoseDetection};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProviderKind {
    BoxDetector,
    PoseEstimator,
}

impl ProviderKind {
    /// Value of the request's `kind` field.
    pub fn wire_name(self) -> &'static str {
        match self {
            ProviderKind::BoxDetector => "boxes",
            ProviderKind::PoseEstimator => "pose",
        }
    }
}

fn default_timeout() -> f64 {
    10.0
}

fn default_workers() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProviderSpec {
    pub name: String,
    pub kind: ProviderKind,
    /// Program and arguments.
    pub command: Vec<String>,
    /// Fragment count used for this provider.
    pub k: usize,
    /// Seconds to wait for each reply.
    #[serde(default = "default_timeout")]
    pub timeout: f64,
    /// Concurrent provider processes.
    #[serde(default = "default_workers")]
    pub workers: usize,
}

impl ProviderSpec {
    pub fn validate(&self) -> Result<(), LabelError> {
        let bad = |m: String| Err(LabelError::InvalidProvider(format!("{}: {m}", self.name)));
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if self.command.is_empty() {
            return bad("empty command".into());
        }
        if self.timeout.is_nan() || self.timeout <= 0.0 {
            return bad(format!("timeout {} must be positive", self.timeout));
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct Request {
    pub v: u32,
    pub frame: u64,
    pub fragment: usize,
    pub image: String,
    pub kind: String,
}

#[derive(Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct Reply {
    pub v: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boxes: Option<Vec<[f64; 5]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poses: Option<Vec<Vec<[f64; 3]>>>,
}

/// Detections reported for one fragment, in fragment pixels.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FragmentDetections {
    pub fragment_index: usize,
    pub boxes: Vec<DetectionBox>,
    pub poses: Vec<PoseDetection>,
}

pub fn encode_request(frame: u64, fragment: usize, image: &Path, kind: ProviderKind) -> String {
    serde_json::to_string(&Request {
        v: PROTOCOL_VERSION,
        frame,
        fragment,
        image: image.display().to_string(),
        kind: kind.wire_name().to_string(),
    })
    .expect("request serializes")
}

/// Parses and validates one reply line.
pub fn parse_reply(
    line: &str,
    kind: ProviderKind,
    source: &str,
    frame: u64,
    fragment: usize,
) -> Result<FragmentDetections, LabelError> {
    let bad = |detail: String| LabelError::Protocol {
        provider: source.to_string(),
        detail,
    };
    let reply: Reply = serde_json::from_str(line.trim()).map_err(|e| bad(format!("{e}: {line:?}")))?;
    if reply.v != PROTOCOL_VERSION {
        return Err(bad(format!("protocol version {}", reply.v)));
    }
    let mut out = FragmentDetections {
        fragment_index: fragment,
        ..Default::default()
    };
    match kind {
        ProviderKind::BoxDetector => {
            let boxes = reply.boxes.ok_or_else(|| bad("reply lacks \"boxes\"".into()))?;
            for [x, y, w, h, score] in boxes {
                if ![x, y, w, h, score].iter().all(|v| v.is_finite()) || w <= 0.0 || h <= 0.0 {
                    return Err(bad(format!("invalid box [{x},{y},{w},{h},{score}]")));
                }
                if !(0.0..=1.0).contains(&score) {
                    return Err(bad(format!("score {score} outside [0, 1]")));
                }
                let mut b = DetectionBox::new(x, y, w, h, score).with_source(source);
                b.frame_index = frame;
                b.fragment = Some(fragment);
                out.boxes.push(b);
            }
        }
        ProviderKind::PoseEstimator => {
            let poses = reply.poses.ok_or_else(|| bad("reply lacks \"poses\"".into()))?;
            for kps in poses {
                let keypoints: Vec<Keypoint> = kps.into_iter().map(|[x, y, c]| Keypoint::new(x, y, c)).collect();
                if keypoints
                    .iter()
                    .any(|k| !k.point.is_finite() || !(0.0..=1.0).contains(&k.confidence))
                {
                    return Err(bad("invalid keypoint".into()));
                }
                if keypoints.iter().all(|k| k.confidence <= 0.0) {
                    // A pose without any visible keypoint carries no information.
                    continue;
                }
                out.poses.push(PoseDetection {
                    keypoints,
                    fragment_index: fragment,
                });
            }
        }
    }
    Ok(out)
}

/// Anything that can look at fragment rasters and report detections.
pub trait DetectionProvider {
    fn name(&self) -> &str;

    fn kind(&self) -> ProviderKind;

    fn detect(&mut self, frame: u64, fragment: usize, raster: &OmniFrame) -> Result<FragmentDetections, LabelError>;

    /// Runs every fragment of one frame. Implementations may parallelise.
    fn detect_all(&mut self, frame: u64, rasters: &[OmniFrame]) -> Result<Vec<FragmentDetections>, LabelError> {
        rasters
            .iter()
            .enumerate()
            .map(|(i, r)| self.detect(frame, i, r))
            .collect()
    }
}

/// Unwarps every fragment and collects the provider's detections, tagged
/// with their fragment index.
pub fn harvest_fragments<P: DetectionProvider + ?Sized>(
    frame: &OmniFrame,
    provider: &mut P,
    maps: &[FragmentMap],
) -> Result<Vec<FragmentDetections>, LabelError> {
    let rasters = maps
        .iter()
        .map(|m| unwarp_frame(frame, m))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = provider.detect_all(frame.index, &rasters)?;
    for (det, map) in out.iter_mut().zip(maps) {
        det.fragment_index = map.fragment_index;
        for b in &mut det.boxes {
            b.fragment = Some(map.fragment_index);
        }
        for p in &mut det.poses {
            p.fragment_index = map.fragment_index;
        }
    }
    Ok(out)
}

struct Session {
    id: usize,
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl Session {
    fn spawn(spec: &ProviderSpec, id: usize) -> Result<Self, LabelError> {
        let mut child = Command::new(&spec.command[0])
            .args(&spec.command[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| LabelError::ProviderIo {
                provider: spec.name.clone(),
                detail: format!("cannot start {:?}: {e}", spec.command[0]),
            })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Self {
            id,
            child,
            stdin,
            lines,
        })
    }

    fn kill(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        self.kill();
    }
}

/// Provider backed by `workers` child processes speaking the line protocol.
pub struct ProcessProvider {
    spec: ProviderSpec,
    sessions: Vec<Option<Session>>,
    scratch: tempfile::TempDir,
}

impl ProcessProvider {
    pub fn spawn(spec: ProviderSpec) -> Result<Self, LabelError> {
        spec.validate()?;
        let scratch = tempfile::Builder::new()
            .prefix("omnicount-provider-")
            .tempdir()
            .map_err(|e| LabelError::ProviderIo {
                provider: spec.name.clone(),
                detail: e.to_string(),
            })?;
        let sessions = (0..spec.workers)
            .map(|id| Session::spawn(&spec, id).map(Some))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            spec,
            sessions,
            scratch,
        })
    }

    pub fn spec(&self) -> &ProviderSpec {
        &self.spec
    }

    fn run(
        spec: &ProviderSpec,
        scratch: &Path,
        slot: &mut Option<Session>,
        id: usize,
        frame: u64,
        fragment: usize,
        raster: &OmniFrame,
    ) -> Result<FragmentDetections, LabelError> {
        if slot.is_none() {
            *slot = Some(Session::spawn(spec, id)?);
        }
        let session = slot.as_mut().expect("session present");
        let io_err = |detail: String| LabelError::ProviderIo {
            provider: spec.name.clone(),
            detail,
        };
        let path: PathBuf = scratch.join(format!("w{}_f{frame}_g{fragment}.ppm", session.id));
        std::fs::write(&path, raster.encode_pnm()).map_err(|e| io_err(format!("{}: {e}", path.display())))?;
        let request = encode_request(frame, fragment, &path, spec.kind);
        let sent = writeln!(session.stdin, "{request}").and_then(|_| session.stdin.flush());
        let reply = match sent {
            Err(e) => Err(io_err(format!("write failed: {e}"))),
            Ok(()) => match session.lines.recv_timeout(Duration::from_secs_f64(spec.timeout)) {
                Ok(Ok(line)) => Ok(line),
                Ok(Err(e)) => Err(io_err(format!("read failed: {e}"))),
                Err(RecvTimeoutError::Timeout) => Err(LabelError::ProviderTimeout {
                    provider: spec.name.clone(),
                    frame,
                    fragment,
                    seconds: spec.timeout,
                }),
                Err(RecvTimeoutError::Disconnected) => Err(io_err("provider exited".into())),
            },
        };
        let _ = std::fs::remove_file(&path);
        match reply {
            Ok(line) => parse_reply(&line, spec.kind, &spec.name, frame, fragment),
            Err(e) => {
                // The stream is out of step with our requests; start over.
                if let Some(mut s) = slot.take() {
                    s.kill();
                }
                Err(e)
            }
        }
    }
}

impl DetectionProvider for ProcessProvider {
    fn name(&self) -> &str {
        &self.spec.name
    }

    fn kind(&self) -> ProviderKind {
        self.spec.kind
    }

    fn detect(&mut self, frame: u64, fragment: usize, raster: &OmniFrame) -> Result<FragmentDetections, LabelError> {
        Self::run(
            &self.spec,
            self.scratch.path(),
            &mut self.sessions[0],
            0,
            frame,
            fragment,
            raster,
        )
    }

    fn detect_all(&mut self, frame: u64, rasters: &[OmniFrame]) -> Result<Vec<FragmentDetections>, LabelError> {
        let workers = self.sessions.len();
        if workers == 1 || rasters.len() <= 1 {
            return rasters
                .iter()
                .enumerate()
                .map(|(i, r)| self.detect(frame, i, r))
                .collect();
        }
        let spec = &self.spec;
        let scratch = self.scratch.path();
        let mut results: Vec<Option<Result<FragmentDetections, LabelError>>> =
            (0..rasters.len()).map(|_| None).collect();
        thread::scope(|scope| {
            let handles: Vec<_> = self
                .sessions
                .iter_mut()
                .enumerate()
                .map(|(id, slot)| {
                    scope.spawn(move || {
                        (id..rasters.len())
                            .step_by(workers)
                            .map(|i| (i, Self::run(spec, scratch, slot, id, frame, i, &rasters[i])))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            for h in handles {
                for (i, r) in h.join().expect("provider worker panicked") {
                    results[i] = Some(r);
                }
            }
        });
        results.into_iter().map(|r| r.expect("every fragment ran")).collect()
    }
}
