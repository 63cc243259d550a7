import math

import pytest

import sketchgen

LINE_POINT = {
    "objects": [
        {"kind": "line", "is_construction": True, "start": {"x": 0.0, "y": 0.1},
         "end": {"x": -0.5, "y": 0.2}},
        {"kind": "point", "is_construction": False, "point": {"x": 0.0, "y": 0.1}},
    ]
}


def test_encode_line_point():
    tokens = [t for t in sketchgen.encode(LINE_POINT) if not t["referrable"]]
    assert len(tokens) == 13
    assert [t["d"] for t in tokens[:3]] == [0, 0, 1]
    assert tokens[-1]["f"] and tokens[-1]["field"] == "objects.kind"


def test_round_trips():
    for seed in range(20):
        s = sketchgen.random_sketch(seed)
        triplets = [(t["d"], t["c"], t["f"]) for t in sketchgen.encode(s) if not t["referrable"]]
        assert sketchgen.decode(triplets) == s
        assert sketchgen.parse(sketchgen.serialize(s)) == s


def test_quantization():
    assert sketchgen.quantize(0.0, "coordinate") == 128
    assert sketchgen.dequantize(255, "coordinate") == 1.0
    with pytest.raises(IndexError):
        sketchgen.dequantize(256, "coordinate")


def test_validate_and_errors():
    bad = {"objects": [{"kind": "fix", "entities": [0]}]}
    assert sketchgen.validate(bad)
    with pytest.raises(ValueError):
        sketchgen.serialize(bad)
    with pytest.raises(ValueError):
        sketchgen.parse(b"\xff\xff")


def test_geometry():
    image = sketchgen.render(LINE_POINT, 32)
    assert image.shape == (32, 32) and image.sum() == 1
    solved, report = sketchgen.solve(LINE_POINT)
    assert report["converged"] and solved == LINE_POINT
    assert sketchgen.render_svg(LINE_POINT).startswith("<?xml")


def test_dedup_identity():
    corpus = [sketchgen.random_sketch(seed, min_entities=2) for seed in range(6)]
    reps, cluster = sketchgen.dedup(corpus + corpus)
    assert len(cluster) == 12
    assert all(cluster[i] == cluster[i + 6] for i in range(6))


def test_model_uniform_and_sampling(tmp_path):
    model = sketchgen.Model({"d_model": 16, "num_blocks": 1, "num_heads": 2})
    s = sketchgen.random_sketch(3)
    assert math.isfinite(model.nll_bits(s))
    sample = model.sample(seed=5, max_tokens=256)
    assert sample["valid"]
    path = tmp_path / "m.bin"
    model.save(path)
    again = sketchgen.Model.load(path)
    assert again.sample(seed=5, max_tokens=256) == sample
    curve = model.train([s], steps=3, batch_size=1)
    assert len(curve) == 3 and all(math.isfinite(b) for b in curve)


def test_nucleus():
    probs = sketchgen.nucleus_probs([0.5, 0.3, 0.2], 0.7)
    assert probs[0] == 0.625 and probs[2] == 0.0
