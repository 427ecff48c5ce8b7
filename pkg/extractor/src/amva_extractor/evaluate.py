"""Evaluator loop: the scoring side of the activation-mapping wire protocol.

The parent process writes one float32 AMVT tensor (a masked H x W x C image)
per request to our stdin; we reply with one ASCII float line on stdout: the
cosine agreement between the masked image's embedding and the original
image's embedding, cached at startup. EOF on stdin ends the loop cleanly;
a malformed tensor exits nonzero.
"""

from __future__ import annotations

import sys

from . import amvt
from .model import DEFAULT_SIZE, cosine, embed, load_image, load_model


def evaluator_loop(model_source: str, image_path: str, size: int = DEFAULT_SIZE,
                   stdin=None, stdout=None) -> int:
    stdin = stdin if stdin is not None else sys.stdin.buffer
    stdout = stdout if stdout is not None else sys.stdout

    model = load_model(model_source)
    reference = embed(model, load_image(image_path, size=size))

    while True:
        try:
            tensor = amvt.read_stream(stdin)
        except amvt.AmvtError as e:
            print(f"malformed tensor on stdin: {e}", file=sys.stderr)
            return 2
        if tensor is None:
            return 0
        if tensor.ndim != 3:
            print(f"expected an (H, W, C) tensor, got shape {tensor.shape}", file=sys.stderr)
            return 2
        score = cosine(embed(model, tensor), reference)
        print(repr(score), file=stdout, flush=True)
