use std::time::Instant;

use anyhow::Result;
use log::info;
use omnicount_core::frame::OmniFrame;
use omnicount_core::geometry::{build_fragment_maps, unwarp_frame, OmniCameraModel, UnwarpConfig};
use omnicount_core::temporal::{canonical_kernels, interlace, Degrader, FrameRing, ScalePlan};
use serde::{Deserialize, Serialize};

use super::scene_camera;
use crate::config::SceneConfig;
use crate::dataset::Dataset;

/// Side of the reference omni frame used for the unwarp timing.
pub const UNWARP_SOURCE: usize = 1024;
pub const UNWARP_FRAGMENT: usize = 448;
pub const UNWARP_K: usize = 3;
/// Low-resolution side used for the interlace timing.
pub const INTERLACE_RES: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BenchOptions {
    /// Timed repetitions of the unwarp and scale-plan stages.
    pub iterations: usize,
    /// Interlace calls per timed batch; the batch is repeated `iterations` times.
    pub interlace_batch: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            iterations: 30,
            interlace_batch: 1000,
        }
    }
}

/// Summary statistics of repeated timings, milliseconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub iterations: usize,
    pub median_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
}

impl Timing {
    fn from_samples(mut ms: Vec<f64>) -> Self {
        ms.sort_by(f64::total_cmp);
        let n = ms.len();
        let median = if n == 0 {
            0.0
        } else if n % 2 == 1 {
            ms[n / 2]
        } else {
            0.5 * (ms[n / 2 - 1] + ms[n / 2])
        };
        Self {
            iterations: n,
            median_ms: median,
            min_ms: ms.first().copied().unwrap_or(0.0),
            max_ms: ms.last().copied().unwrap_or(0.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnwarpBench {
    pub source: [usize; 2],
    pub fragments: usize,
    pub fragment: [usize; 2],
    /// All fragments of one frame, maps prebuilt.
    pub per_frame: Timing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterlaceBench {
    pub kernel: String,
    pub scale_res: usize,
    /// Time for one interlaced frame.
    pub per_frame: Timing,
    pub frames_per_second: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanBench {
    pub name: String,
    pub net_res: usize,
    pub scale_res: usize,
    /// Downscale, ring update and reconstruction of one square input frame.
    pub per_frame: Timing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub unwarp: UnwarpBench,
    pub interlace: InterlaceBench,
    pub plans: Vec<PlanBench>,
    /// Input side of the scale-plan timings.
    pub plan_input: usize,
}

fn time_ms(f: impl FnOnce()) -> f64 {
    let t = Instant::now();
    f();
    t.elapsed().as_secs_f64() * 1e3
}

/// Smooth RGB test pattern, so no stage can take a shortcut on flat input.
fn pattern(side: usize, channels: usize, seed: u64) -> OmniFrame {
    let data = (0..side * side * channels)
        .map(|i| {
            let p = i / channels;
            let (x, y) = ((p % side) as u64, (p / side) as u64);
            ((x * 7 + y * 13 + (i % channels) as u64 * 29 + seed * 31) % 251) as u8
        })
        .collect();
    OmniFrame::new(side, side, channels, data).expect("pattern buffer")
}

pub fn bench_unwarp(iterations: usize) -> Result<UnwarpBench> {
    let camera = OmniCameraModel::centered(
        UNWARP_SOURCE,
        UNWARP_SOURCE,
        0.1 * UNWARP_SOURCE as f64,
        UNWARP_SOURCE as f64 / 2.0,
    );
    let cfg = UnwarpConfig {
        k: UNWARP_K,
        fragment_height: UNWARP_FRAGMENT,
        fragment_width: Some(UNWARP_FRAGMENT),
        ..Default::default()
    };
    let maps = build_fragment_maps(&camera, &cfg)?;
    let frame = pattern(UNWARP_SOURCE, 3, 0);
    // One untimed pass warms caches and the allocator.
    for m in &maps {
        unwarp_frame(&frame, m)?;
    }
    let mut samples = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let mut result = Ok(());
        samples.push(time_ms(|| {
            for m in &maps {
                if let Err(e) = unwarp_frame(&frame, m).map(std::hint::black_box) {
                    result = Err(e);
                }
            }
        }));
        result?;
    }
    Ok(UnwarpBench {
        source: [UNWARP_SOURCE, UNWARP_SOURCE],
        fragments: maps.len(),
        fragment: [UNWARP_FRAGMENT, UNWARP_FRAGMENT],
        per_frame: Timing::from_samples(samples),
    })
}

pub fn bench_interlace(batches: usize, batch: usize, fps: f64) -> Result<InterlaceBench> {
    let kernel = canonical_kernels()
        .into_iter()
        .find(|k| k.name == "k2")
        .expect("k2 ships");
    let mut ring = FrameRing::new(kernel.max_age() + 1, fps);
    for i in 0..ring.capacity() {
        ring.push_frame(pattern(INTERLACE_RES, 1, i as u64).with_stamp(i as u64, i as f64 / fps))?;
    }
    interlace(&ring, &kernel)?;
    let batch = batch.max(1);
    let mut samples = Vec::with_capacity(batches);
    for _ in 0..batches {
        let ms = time_ms(|| {
            for _ in 0..batch {
                std::hint::black_box(interlace(std::hint::black_box(&ring), &kernel).expect("history is full"));
            }
        });
        samples.push(ms / batch as f64);
    }
    let per_frame = Timing::from_samples(samples);
    Ok(InterlaceBench {
        kernel: kernel.name,
        scale_res: INTERLACE_RES,
        frames_per_second: 1e3 / per_frame.median_ms.max(1e-9),
        per_frame,
    })
}

fn bench_plan(name: &str, plan: &ScalePlan, input: &OmniFrame, iterations: usize, fps: f64) -> Result<PlanBench> {
    let mut degrader = Degrader::new(plan.clone(), fps)?;
    let mut index = 0u64;
    let mut step = |degrader: &mut Degrader| {
        let f = input.clone().with_stamp(index, index as f64 / fps);
        index += 1;
        degrader.process(&f)
    };
    for _ in 0..plan.history() {
        step(&mut degrader)?;
    }
    let mut samples = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let mut result = Ok(None);
        samples.push(time_ms(|| result = step(&mut degrader)));
        result?;
    }
    Ok(PlanBench {
        name: name.to_string(),
        net_res: plan.net_res,
        scale_res: plan.scale_res,
        per_frame: Timing::from_samples(samples),
    })
}

/// Times the unwarp, interlace and scale-plan stages. The unwarp and
/// interlace figures use fixed reference inputs so reports compare across
/// machines; scale plans run on the dataset's first frame when one is given.
pub fn cmd_bench(cfg: &SceneConfig, ds: Option<&Dataset>, opts: &BenchOptions) -> Result<BenchReport> {
    let iterations = opts.iterations.max(1);
    let unwarp = bench_unwarp(iterations)?;
    let interlace = bench_interlace(iterations, opts.interlace_batch, cfg.fps)?;

    let input = match ds.filter(|d| !d.is_empty()) {
        Some(d) => {
            let f = d.frame(0, cfg.fps)?;
            let cam = scene_camera(cfg, f.width(), f.height())?;
            let (x0, y0, side) = cam.square_crop();
            f.crop_square(x0, y0, side)
        }
        None => pattern(512, 1, 0),
    };
    let plans: Vec<(String, ScalePlan)> = if cfg.plans.is_empty() {
        let k2 = canonical_kernels()
            .into_iter()
            .find(|k| k.name == "k2")
            .expect("k2 ships");
        vec![
            ("linear32".to_string(), ScalePlan::linear(160, 32)?),
            ("k2-32".to_string(), ScalePlan::interlaced(160, 32, k2)?),
        ]
    } else {
        cfg.plans
            .iter()
            .map(|p| Ok((p.name.clone(), cfg.plan(&p.name)?)))
            .collect::<Result<_>>()?
    };
    let plans = plans
        .iter()
        .map(|(name, plan)| bench_plan(name, plan, &input, iterations, cfg.fps))
        .collect::<Result<Vec<_>>>()?;

    let report = BenchReport {
        unwarp,
        interlace,
        plans,
        plan_input: input.width(),
    };
    info!(
        "unwarp {:.2} ms/frame, interlace {:.0} frames/s",
        report.unwarp.per_frame.median_ms, report.interlace.frames_per_second
    );
    Ok(report)
}
