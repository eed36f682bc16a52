//! Map files, fixation lists, dataset manifests and the synthetic generator.

mod blur;
mod fixations;
mod manifest;
mod pgm;
mod synth;

pub use blur::{blur_fixations, default_sigma, REFERENCE_SIGMA};
pub use fixations::{format_fixations, load_fixations, parse_fixations, FixationsByFrame};
pub use manifest::{
    frame_file_name, rescale_coord, resize_bilinear, Dataset, DatasetManifest, GroupLabel,
    VideoData, VideoRecord,
};
pub use pgm::{decode_pgm, encode_pgm, load_map, quantize, write_map};
pub use synth::{blob, generate_synthetic, synth_video, SynthConfig, SynthVideo};
