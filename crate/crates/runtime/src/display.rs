//! Where finished frames go.

use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;

use splitfov_core::Image;

pub trait DisplaySink {
    fn show(&mut self, frame_id: u64, frame: &Image) -> io::Result<()>;
}

/// Discards frames.
#[derive(Debug, Default)]
pub struct NullSink;

impl DisplaySink for NullSink {
    fn show(&mut self, _: u64, _: &Image) -> io::Result<()> {
        Ok(())
    }
}

/// Writes every `every`-th frame as `frame_NNNNN.ppm` under `dir`.
#[derive(Debug)]
pub struct PpmSink {
    dir: PathBuf,
    every: u64,
}

impl PpmSink {
    pub fn new(dir: impl Into<PathBuf>, every: u64) -> io::Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(PpmSink { dir, every: every.max(1) })
    }
}

impl DisplaySink for PpmSink {
    fn show(&mut self, frame_id: u64, frame: &Image) -> io::Result<()> {
        if frame_id % self.every != 0 {
            return Ok(());
        }
        let path = self.dir.join(format!("frame_{frame_id:05}.ppm"));
        frame.write_ppm(BufWriter::new(File::create(path)?))
    }
}

/// Keeps every frame in memory.
#[derive(Debug, Default)]
pub struct CollectSink {
    pub frames: Vec<(u64, Image)>,
}

impl DisplaySink for CollectSink {
    fn show(&mut self, frame_id: u64, frame: &Image) -> io::Result<()> {
        self.frames.push((frame_id, frame.clone()));
        Ok(())
    }
}
