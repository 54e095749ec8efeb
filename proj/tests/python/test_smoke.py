"""Smoke tests for the python bindings. Runs standalone or under pytest."""

import os
import struct
import tempfile

import ctts


def test_mu_law_round_trip():
    assert ctts.mu_law_decode(128) == 0.0
    for c in range(256):
        assert ctts.mu_law_encode(ctts.mu_law_decode(c)) == c


def test_tokenize():
    ids = ctts.tokenize("ab", 96)
    assert len(ids) == 4
    assert ids[0] == 1 and ids[-1] == 2
    assert all(i > 3 for i in ids[1:-1])


def test_model_round_trip():
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "m.ctts")
        written = ctts.init_random(path, preset="optimized", dims="tiny", seed=7)
        assert written == os.path.getsize(path)

        rep = ctts.footprint(path)
        assert rep["total_bytes"] == written
        assert {c["name"] for c in rep["components"]} == {"frontend", "acoustic", "vocoder"}
        comp_bytes = sum(c["bytes"] for c in rep["components"])
        assert rep["header_bytes"] + rep["manifest_bytes"] + comp_bytes == written

        out = ctts.synth(path, "hello world", seed=3)
        again = ctts.synth(path, "hello world", seed=3)
        assert out["pcm"] == again["pcm"]
        assert len(out["pcm"]) > 0
        assert out["sample_rate"] == 24000
        assert out["frames"] * 64 * 2 == len(out["pcm"])  # tiny frame_hop is 64

        samples = struct.unpack("<%dh" % (len(out["pcm"]) // 2), out["pcm"])
        assert any(s != 0 for s in samples)


def test_bad_input_raises():
    try:
        ctts.init_random("/nonexistent-dir/m.ctts", preset="typo")
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError for a bad preset")

    try:
        ctts.footprint("/nonexistent-dir/m.ctts")
    except IOError:
        pass
    else:
        raise AssertionError("expected IOError for a missing model")


if __name__ == "__main__":
    for name in sorted(k for k in globals() if k.startswith("test_")):
        globals()[name]()
        print(name, "ok")
    print("python smoke tests passed")
