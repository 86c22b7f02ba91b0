//! Bright-blob detector speaking the provider wire protocol on
//! stdin/stdout. Stands in for a trained network on synthetic scenes.

use std::io::{self, BufRead, Write};
use std::path::Path;

use anyhow::{Context, Result};
use clap::Parser;
use omnicount_core::frame::load_frame;
use omnicount_core::label::{Reply, Request, PROTOCOL_VERSION};
use omnicount_core::synth::OracleDetector;

#[derive(Debug, Parser)]
#[command(name = "omnicount-oracle", version)]
struct Args {
    /// Grey level a pixel must reach to belong to a blob.
    #[arg(long, default_value_t = 128)]
    threshold: u8,
    /// Smallest blob, in pixels.
    #[arg(long, default_value_t = 20)]
    min_area: usize,
    /// Also report blobs cut by the fragment's left or right edge.
    #[arg(long)]
    keep_edge: bool,
    /// Merge blobs closer than this many pixels, for interlaced input.
    #[arg(long, default_value_t = 0)]
    merge_gap: usize,
}

fn answer(det: &OracleDetector, line: &str) -> Result<Reply> {
    let req: Request = serde_json::from_str(line).with_context(|| format!("bad request {line:?}"))?;
    anyhow::ensure!(req.v == PROTOCOL_VERSION, "unsupported protocol version {}", req.v);
    let raster = load_frame(Path::new(&req.image))?;
    let mut reply = Reply {
        v: PROTOCOL_VERSION,
        ..Default::default()
    };
    match req.kind.as_str() {
        "boxes" => reply.boxes = Some(det.detect_boxes(&raster)),
        "pose" => reply.poses = Some(det.detect_poses(&raster)),
        other => anyhow::bail!("unknown request kind {other:?}"),
    }
    Ok(reply)
}

fn main() -> Result<()> {
    let args = Args::parse();
    let det = OracleDetector {
        threshold: args.threshold,
        min_area: args.min_area,
        keep_edge_blobs: args.keep_edge,
        merge_gap: args.merge_gap,
    };
    let stdin = io::stdin().lock();
    let mut stdout = io::stdout().lock();
    for line in stdin.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        // A request we cannot serve gets a reply without detections, which
        // the caller rejects straight away instead of waiting for a timeout.
        let reply = match answer(&det, &line) {
            Ok(reply) => serde_json::to_value(reply)?,
            Err(e) => {
                eprintln!("omnicount-oracle: {e:#}");
                serde_json::json!({ "v": PROTOCOL_VERSION, "error": format!("{e:#}") })
            }
        };
        serde_json::to_writer(&mut stdout, &reply)?;
        stdout.write_all(b"\n")?;
        stdout.flush()?;
    }
    Ok(())
}
