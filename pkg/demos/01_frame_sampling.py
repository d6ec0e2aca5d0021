"""Where the key frames and motion chunks of a clip come from.

Run: python3 demos/01_frame_sampling.py
"""

import numpy as np

from minbvqa.ingest import VideoAsset
from minbvqa.preprocess import (
    PreprocessConfig,
    downsampled_size,
    extract_chunk_indices,
    plan_chunks,
    preprocess_video,
    select_key_frame_indices,
)

# A 4 second clip at 10 fps has 40 frames. One key frame per second lands
# in the middle of each second.
idx = select_key_frame_indices(40, 10, 1)
print("key frames of a 40-frame 10 fps clip:", idx)

# Each key frame owns a short chunk centred on it. Near the start the
# indices are clamped, so the chunk repeats the first frame.
for c in idx[:2]:
    print(f"chunk around frame {c}:", extract_chunk_indices(c, 40, 5, 1))
print("chunk around frame 0:", extract_chunk_indices(0, 40, 5, 1))

# Motion features are cheaper at half the key-frame rate: chunks 1 and 3
# are copied from their computed neighbours.
print("chunk plan at half rate:", plan_chunks(len(idx), 1, 0.5))

# NTSC rates are handled exactly (29.97 is treated as 2997/100).
print("two key frames/s of 299 frames at 29.97 fps:", select_key_frame_indices(299, 29.97, 2)[:6], "...")

# Spatial downsampling keeps the aspect ratio and never upsamples.
print("1080x1920 at short side 448 ->", downsampled_size(1080, 1920, 448))
print("360x640 at short side 448 ->", downsampled_size(360, 640, 448))

# The whole thing on a random clip.
frames = np.random.default_rng(0).integers(0, 256, (40, 90, 160, 3), dtype=np.uint8)
clip = VideoAsset.from_array(frames, fps=10, video_id="noise-clip")
video = preprocess_video(clip, PreprocessConfig(r_a=1, r_b=0.5, l_s=45, l_t=32, t=5))
for key, chunk in zip(video.key_frames, video.chunks):
    src = "computed" if chunk.broadcast_from is None else f"copied from {chunk.broadcast_from}"
    print(f"key {key.index}: source {key.source_index}, image {key.image.shape}, "
          f"chunk {chunk.tensor.shape} {src}")
