#![allow(dead_code)]

pub mod npy_oracle;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use horizon_gt::frame_source::{FfmpegDecoder, SyntheticSource};
use horizon_gt::FrameDims;

pub fn dims(w: u32, h: u32) -> FrameDims {
    FrameDims::new(w, h).unwrap()
}

pub fn synthetic(name: &str, n: usize, w: u32, h: u32) -> Arc<SyntheticSource> {
    Arc::new(SyntheticSource::new(name, n, dims(w, h)).unwrap())
}

/// Writes `n` PNG frames of `w x h` into `dir/name` and returns that directory.
pub fn png_dir(root: &Path, name: &str, n: usize, w: u32, h: u32) -> PathBuf {
    let dir = root.join(name);
    SyntheticSource::new(name, n, dims(w, h))
        .unwrap()
        .write_png_sequence(&dir)
        .unwrap();
    dir
}

const FAKE_FFPROBE: &str = r#"#!/usr/bin/env python3
# Stand-in for ffprobe. The "video" is a text file: one "WxH" token per frame,
# or "WxH*COUNT" for runs, optionally followed by "broken".
import sys
path = sys.argv[-1]
tokens = open(path).read().split()
if "broken" in tokens:
    sys.stderr.write("Invalid data found when processing input\n")
    sys.exit(1)
for tok in tokens:
    size, _, count = tok.partition("*")
    w, h = size.split("x")
    for _ in range(int(count or 1)):
        print(f"{w},{h}")
"#;

const FAKE_FFMPEG: &str = r#"#!/usr/bin/env python3
# Stand-in for ffmpeg: emits solid RGB24 frames whose colour encodes the index.
import re, sys
args = sys.argv[1:]
path = args[args.index("-i") + 1]
sel = args[args.index("-vf") + 1]
first, last = map(int, re.search(r"between\(n\\,(\d+)\\,(\d+)\)", sel).groups())
limit = int(args[args.index("-frames:v") + 1])
sizes = []
for tok in open(path).read().split():
    size, _, count = tok.partition("*")
    w, h = map(int, size.split("x"))
    sizes += [(w, h)] * int(count or 1)
out = sys.stdout.buffer
emitted = 0
for n in range(first, min(last, len(sizes) - 1) + 1):
    if emitted == limit:
        break
    w, h = sizes[n]
    out.write(bytes([(n * 37) % 256, (n * 11 + 5) % 256, 200]) * (w * h))
    emitted += 1
"#;

/// Builds executable stand-ins for ffprobe and ffmpeg in `dir`.
pub fn fake_decoder(dir: &Path) -> FfmpegDecoder {
    use std::os::unix::fs::PermissionsExt;
    std::fs::create_dir_all(dir).unwrap();
    let write = |name: &str, body: &str| {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        std::fs::set_permissions(&p, std::fs::Permissions::from_mode(0o755)).unwrap();
        p
    };
    FfmpegDecoder {
        ffprobe: write("fake-ffprobe", FAKE_FFPROBE),
        ffmpeg: write("fake-ffmpeg", FAKE_FFMPEG),
    }
}

/// Writes a fake video description understood by [`fake_decoder`].
pub fn fake_video(dir: &Path, name: &str, tokens: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, tokens).unwrap();
    p
}

/// Expected solid colour of fake video frame `n`.
pub fn fake_frame_rgb(n: usize) -> [u8; 3] {
    [((n * 37) % 256) as u8, ((n * 11 + 5) % 256) as u8, 200]
}
