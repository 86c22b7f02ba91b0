use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::mpsc::{sync_channel, Receiver, SyncSender};
use std::thread;
use std::time::{Duration, Instant};

use anyhow::Result;
use log::{debug, info, warn};
use omnicount_core::eval::CountRow;
use omnicount_core::frame::{load_frame, OmniFrame};
use omnicount_core::geometry::OmniCameraModel;
use omnicount_core::label::{read_annotations, NormBox};
use omnicount_core::temporal::{Degrader, ScalePlan};
use serde::{Deserialize, Serialize};

use super::{degrade_frame, degraded_camera, detect_frame, scene_camera, spawn_providers, ProviderRun};
use crate::config::SceneConfig;
use crate::dataset::{list_frame_files, Dataset};

/// One line of the count stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub ts: f64,
    pub frame: u64,
    pub count: usize,
    /// Surviving boxes, normalised to the detector input. Never written in
    /// privacy mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boxes: Option<Vec<NormBox>>,
}

pub enum CountSource {
    Dataset(Dataset),
    /// Frames dropped into a directory, processed in file-name order.
    Watch {
        dir: PathBuf,
        poll: Duration,
        /// Stop after this long without a new frame.
        idle_timeout: Duration,
        max_frames: Option<usize>,
    },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CountOptions {
    /// Overrides `count.threshold` from the config.
    pub threshold: Option<f64>,
    pub privacy: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CountSummary {
    pub frames: usize,
    pub records: usize,
    pub failed: usize,
    /// Present when the dataset has ground truth.
    pub exact_match_rate: Option<f64>,
    pub mean_absolute_error: Option<f64>,
}

type Item = (u64, Result<OmniFrame>);

const QUEUE: usize = 2;

fn ingest_dataset(ds: &Dataset, fps: f64, tx: SyncSender<Item>) {
    for i in 0..ds.len() {
        if tx.send((i as u64, ds.frame(i, fps))).is_err() {
            return;
        }
    }
}

fn ingest_watch(dir: &Path, poll: Duration, idle: Duration, max: Option<usize>, fps: f64, tx: SyncSender<Item>) {
    let mut done: BTreeSet<PathBuf> = BTreeSet::new();
    let mut retried: BTreeSet<PathBuf> = BTreeSet::new();
    let mut last_new = Instant::now();
    let mut index = 0u64;
    loop {
        let files = match list_frame_files(dir) {
            Ok(f) => f,
            Err(e) => {
                let _ = tx.send((index, Err(e)));
                return;
            }
        };
        for name in files {
            let path = dir.join(&name);
            if done.contains(&path) {
                continue;
            }
            let frame = match load_frame(&path) {
                Ok(f) => Ok(f),
                // The file may still be being written; give it one more poll.
                Err(e) if retried.insert(path.clone()) => {
                    debug!("deferring {}: {e}", path.display());
                    continue;
                }
                Err(e) => Err(e.into()),
            };
            done.insert(path);
            last_new = Instant::now();
            let frame = frame.map(|f| f.with_stamp(index, index as f64 / fps));
            if tx.send((index, frame)).is_err() {
                return;
            }
            index += 1;
            if max.is_some_and(|m| index as usize >= m) {
                return;
            }
        }
        if last_new.elapsed() >= idle {
            return;
        }
        thread::sleep(poll);
    }
}

/// Square-crops and reconstructs frames through the scale plan.
/// `first` is a frame already taken off `rx`.
fn degrade_stage(
    plan: ScalePlan,
    fps: f64,
    camera: OmniCameraModel,
    first: Option<Item>,
    rx: Receiver<Item>,
    tx: SyncSender<Item>,
) {
    let mut degrader = match Degrader::new(plan, fps) {
        Ok(d) => d,
        Err(e) => {
            let _ = tx.send((0, Err(e.into())));
            return;
        }
    };
    for (i, frame) in first.into_iter().chain(rx) {
        let out = frame.and_then(|f| degrade_frame(&mut degrader, &camera, &f));
        if tx.send((i, out)).is_err() {
            return;
        }
    }
}

/// Counts people per frame and writes one JSON record per counted frame.
///
/// Stages run on their own threads joined by small bounded queues:
/// ingest, then degrade and reconstruct (when `count.plan` is set), then
/// detection, fusion and output on the calling thread.
pub fn cmd_count(
    cfg: &SceneConfig,
    source: CountSource,
    opts: &CountOptions,
    out: &mut dyn Write,
) -> Result<CountSummary> {
    let threshold = opts.threshold.unwrap_or(cfg.count.threshold);
    let plan = cfg.count.plan.as_deref().map(|name| cfg.plan(name)).transpose()?;
    let fps = cfg.fps;
    let truth: Option<BTreeMap<u64, usize>> = match &source {
        CountSource::Dataset(ds) => match &ds.ground_truth {
            Some(gt) => Some(
                read_annotations(gt)?
                    .into_iter()
                    .map(|a| (a.frame, a.points.as_ref().map_or(a.boxes.len(), Vec::len)))
                    .collect(),
            ),
            None => None,
        },
        CountSource::Watch { .. } => None,
    };

    let mut summary = CountSummary::default();
    let mut rows = Vec::new();
    let mut runs: Option<Vec<ProviderRun>> = None;
    let mut full_camera: Option<OmniCameraModel> = cfg.camera;

    let (tx_in, rx_in) = sync_channel::<Item>(QUEUE);
    thread::scope(|scope| -> Result<()> {
        match &source {
            CountSource::Dataset(ds) => {
                scope.spawn(move || ingest_dataset(ds, fps, tx_in));
            }
            CountSource::Watch {
                dir,
                poll,
                idle_timeout,
                max_frames,
            } => {
                let (dir, poll, idle, max) = (dir.clone(), *poll, *idle_timeout, *max_frames);
                scope.spawn(move || ingest_watch(&dir, poll, idle, max, fps, tx_in));
            }
        }

        // The degrade stage needs the camera, known once the first frame
        // arrives, so it is started lazily.
        let mut rx_in = Some(rx_in);
        let mut first: Option<Item> = None;
        if plan.is_some() && full_camera.is_none() {
            first = rx_in.as_ref().and_then(|rx| rx.recv().ok());
            if let Some((_, Ok(f))) = &first {
                full_camera = Some(scene_camera(cfg, f.width(), f.height())?);
            }
        }
        let stream: Box<dyn Iterator<Item = Item>> = match (&plan, full_camera) {
            (Some(plan), Some(cam)) => {
                let (tx_mid, rx_mid) = sync_channel::<Item>(QUEUE);
                let upstream = rx_in.take().expect("input queue");
                let (plan, first) = (plan.clone(), first.take());
                scope.spawn(move || degrade_stage(plan, fps, cam, first, upstream, tx_mid));
                Box::new(rx_mid.into_iter())
            }
            _ => Box::new(first.into_iter().chain(rx_in.take().expect("input queue"))),
        };

        for (i, frame) in stream {
            summary.frames += 1;
            let f = match frame {
                Ok(f) => f,
                Err(e) => {
                    warn!("frame {i}: {e:#}");
                    summary.failed += 1;
                    continue;
                }
            };
            if i % cfg.count.every as u64 != 0 {
                continue;
            }
            if runs.is_none() {
                let cam = match (&plan, full_camera) {
                    (Some(p), Some(c)) => degraded_camera(&c, p.net_res),
                    _ => scene_camera(cfg, f.width(), f.height())?,
                };
                runs = Some(spawn_providers(cfg, &cam)?);
            }
            let boxes = match detect_frame(runs.as_mut().expect("providers"), &f, cfg.nms_threshold) {
                Ok(b) => b,
                Err(e) => {
                    warn!("frame {i}: {e}");
                    summary.failed += 1;
                    continue;
                }
            };
            let kept: Vec<_> = boxes.into_iter().filter(|b| b.score >= threshold).collect();
            let rec = CountRecord {
                ts: f.timestamp,
                frame: f.index,
                count: kept.len(),
                boxes: (!opts.privacy).then(|| {
                    kept.iter()
                        .map(|b| NormBox::from_pixels(b, f.width(), f.height()))
                        .collect()
                }),
            };
            serde_json::to_writer(&mut *out, &rec)?;
            out.write_all(b"\n")?;
            out.flush()?;
            summary.records += 1;
            if let Some(t) = truth.as_ref().and_then(|t| t.get(&rec.frame)) {
                rows.push(CountRow {
                    frame: rec.frame,
                    predicted: rec.count,
                    truth: *t,
                });
            }
        }
        Ok(())
    })?;

    if truth.is_some() {
        let report = omnicount_core::eval::CountReport::from_rows(rows);
        summary.exact_match_rate = Some(report.exact_match_rate);
        summary.mean_absolute_error = Some(report.mean_absolute_error);
    }
    info!(
        "counted {} of {} frames ({} failed)",
        summary.records, summary.frames, summary.failed
    );
    Ok(summary)
}
