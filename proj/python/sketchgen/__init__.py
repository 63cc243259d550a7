"""Sketch tokenization, wire codec, models, geometry and dataset tools.

Sketches are plain dicts in the JSON object format; the native module exchanges JSON text.
"""
import json

from . import _sketchgen
from ._sketchgen import (
    NUM_BINS,
    DecodeError,
    GeometryError,
    InvalidSketchError,
    JsonFormatError,
    WireParseError,
    dequantize,
    nucleus_probs,
    quantize,
    token_groups,
)

__all__ = [
    "NUM_BINS", "DecodeError", "GeometryError", "InvalidSketchError", "JsonFormatError",
    "WireParseError", "Model", "decode", "dedup", "dequantize", "encode", "normalize",
    "nucleus_probs", "parse", "quantize", "random_sketch", "render", "render_svg", "schema",
    "serialize", "solve", "token_groups", "uniform_baseline_nll", "validate",
]


def _dump(sketch):
    return sketch if isinstance(sketch, str) else json.dumps(sketch)


def schema():
    return _sketchgen.schema()


def validate(sketch, concatenated=False):
    return _sketchgen.validate(_dump(sketch), concatenated)


def encode(sketch):
    return _sketchgen.encode(_dump(sketch))


def decode(triplets):
    return json.loads(_sketchgen.decode([(int(d), float(c), bool(f)) for d, c, f in triplets]))


def serialize(sketch):
    return _sketchgen.serialize(_dump(sketch))


def parse(data):
    return json.loads(_sketchgen.parse(bytes(data)))


def random_sketch(seed, min_entities=1, max_entities=8, quantized=False):
    return json.loads(_sketchgen.random_sketch(seed, min_entities, max_entities, quantized))


def uniform_baseline_nll(sketch, representation="triplet"):
    return _sketchgen.uniform_baseline_nll(_dump(sketch), representation)


def solve(sketch, tol=1e-9, max_iter=100):
    solved, report = _sketchgen.solve(_dump(sketch), tol, max_iter)
    return json.loads(solved), report


def normalize(sketch):
    return json.loads(_sketchgen.normalize(_dump(sketch)))


def render(sketch, resolution=128):
    return _sketchgen.render(_dump(sketch), resolution)


def render_svg(sketch, size=256):
    return _sketchgen.render_svg(_dump(sketch), size)


def dedup(corpus, threshold=0.1, resolution=128):
    return _sketchgen.dedup([_dump(s) for s in corpus], threshold, resolution)


class Model:
    """Triplet or byte decoder; `config` takes the keys of the JSON model config."""

    def __init__(self, config=None, _native=None):
        self._m = _native if _native is not None else _sketchgen.Model(json.dumps(config or {}))

    @property
    def config(self):
        return json.loads(self._m.config)

    def nll_bits(self, sketch):
        return self._m.nll_bits(_dump(sketch))

    def train(self, corpus, steps, batch_size=8, seed=0):
        return self._m.train([_dump(s) for s in corpus], steps, batch_size, seed)

    def sample(self, seed=0, top_p=0.9, max_tokens=1024):
        out = dict(self._m.sample(seed, top_p, max_tokens))
        out["sketch"] = json.loads(out["sketch"])
        return out

    def save(self, path):
        self._m.save(str(path))

    @classmethod
    def load(cls, path):
        return cls(_native=_sketchgen.Model.load(str(path)))
