"""Binary PGM (P5) image input/output, 8-bit and 16-bit."""

from __future__ import annotations

import numpy as np


def write_pgm(path, image: np.ndarray, maxval: int = 65535) -> None:
    """Write an integer-valued image as binary PGM; maxval 255 or 65535."""
    if maxval not in (255, 65535):
        raise ValueError("maxval must be 255 or 65535")
    img = np.asarray(image)
    if img.ndim != 2:
        raise ValueError("PGM images are 2-D")
    if np.any(img < 0) or np.any(img > maxval):
        raise ValueError("pixel values outside [0, maxval]")
    data = img.astype(">u2" if maxval == 65535 else "u1")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n{maxval}\n".encode("ascii"))
        fh.write(data.tobytes())


def read_pgm(path) -> tuple[np.ndarray, int]:
    """Read a binary PGM; returns (image as int array, maxval)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if not raw.startswith(b"P5"):
        raise ValueError("not a binary PGM (P5) file")
    # header = magic, width, height, maxval as whitespace-separated tokens,
    # with '#' comment lines allowed
    tokens = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            while pos < len(raw) and raw[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        tokens.append(raw[start:pos])
    pos += 1  # single whitespace after maxval
    width, height, maxval = int(tokens[0]), int(tokens[1]), int(tokens[2])
    if maxval not in (255, 65535):
        raise ValueError(f"unsupported maxval {maxval}")
    dtype = ">u2" if maxval == 65535 else "u1"
    count = width * height
    img = np.frombuffer(raw, dtype=dtype, count=count, offset=pos)
    return img.reshape(height, width).astype(np.int64), maxval
