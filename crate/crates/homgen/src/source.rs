use std::path::PathBuf;

use homgen_core::image::ImageBuffer;
use homgen_core::pipeline::FrameSource;

use crate::pnm;

/// Frame sequences stored as PNM files, read on demand.
#[derive(Debug, Clone)]
pub struct FileSource {
    sequences: Vec<Vec<PathBuf>>,
}

impl FileSource {
    pub fn new(sequences: Vec<Vec<PathBuf>>) -> Self {
        Self { sequences }
    }

    pub fn path(&self, sequence: usize, index: usize) -> &PathBuf {
        &self.sequences[sequence][index]
    }
}

impl FrameSource for FileSource {
    fn sequence_count(&self) -> usize {
        self.sequences.len()
    }

    fn sequence_len(&self, sequence: usize) -> usize {
        self.sequences[sequence].len()
    }

    fn frame(&self, sequence: usize, index: usize) -> homgen_core::Result<ImageBuffer> {
        pnm::read(&self.sequences[sequence][index]).map_err(|e| homgen_core::Error::Source(e.to_string()))
    }
}
