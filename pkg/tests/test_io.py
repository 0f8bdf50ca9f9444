import json

import numpy as np
import pytest

from pointline.errors import PointLineError
from pointline.geometry import Alignment
from pointline.harness import GenConfig, gen_instance, run_error_sweep
from pointline.io import (
    alignment_from_dict,
    alignment_to_dict,
    dumps_pairs,
    dumps_rows,
    fmt,
    loads_pairs,
    loads_rows,
    parse_record_line,
    read_pairs,
)


@pytest.mark.parametrize("kind", ["csv", "json"])
def test_pairs_roundtrip_exact(kind, rng):
    inst = gen_instance(GenConfig(n=50, seed=3, k=0.2))
    w = rng.uniform(0, 3, 50)
    A, w2 = loads_pairs(dumps_pairs(inst.pairs, w, kind), kind)
    assert A.points.tobytes() == inst.pairs.points.tobytes()
    assert A.normals.tobytes() == inst.pairs.normals.tobytes()
    assert A.offsets.tobytes() == inst.pairs.offsets.tobytes()
    np.testing.assert_array_equal(w2, w)


def test_csv_header_and_unweighted():
    inst = gen_instance(GenConfig(n=5))
    text = dumps_pairs(inst.pairs)
    assert text.splitlines()[0] == "px,py,vx,vy,b"
    _, w = loads_pairs(text)
    assert w is None


def test_bad_inputs():
    with pytest.raises(PointLineError):
        loads_pairs("a,b,c\n1,2,3\n")
    with pytest.raises(PointLineError):
        loads_pairs("px,py,vx,vy,b\n1,2,0,1,x\n")
    with pytest.raises(PointLineError):
        loads_pairs("px,py,vx,vy,b\n1,2,0,1,nan\n")
    with pytest.raises(PointLineError):
        loads_pairs("px,py,vx,vy,b\n")
    with pytest.raises(PointLineError):
        loads_pairs("{not json", "json")


def test_read_pairs_detects_json(tmp_path):
    inst = gen_instance(GenConfig(n=5))
    p = tmp_path / "inst.json"
    p.write_text(dumps_pairs(inst.pairs, fmt_name="json"))
    A, _ = read_pairs(p)
    np.testing.assert_array_equal(A.points, inst.pairs.points)


def test_parse_record_line():
    assert parse_record_line("") is None
    assert parse_record_line("# comment") is None
    assert parse_record_line("px,py,vx,vy,b,w") is None
    p, (v, b), w = parse_record_line("1,2,0,1,3")
    assert p == (1, 2) and v == (0, 1) and b == 3 and w == 1.0
    assert parse_record_line("1,2,0,1,3,0.5")[2] == 0.5
    for bad in ["1,2,3", "1,2,0,1,x", "1,2,0,1,inf"]:
        with pytest.raises(PointLineError):
            parse_record_line(bad)


def test_alignment_roundtrip():
    a = Alignment.from_angle(2.1, (3.5, -1.25))
    d = json.loads(json.dumps(alignment_to_dict(a)))
    b = alignment_from_dict(d)
    np.testing.assert_array_equal(a.rotation, b.rotation)
    c = alignment_from_dict({"theta": d["theta"], "t": d["t"]})
    np.testing.assert_allclose(c.rotation, a.rotation, atol=1e-15)
    with pytest.raises(PointLineError):
        alignment_from_dict({"t": [0, 0]})
    with pytest.raises(PointLineError):
        alignment_from_dict({"R": [[2, 0], [0, 2]], "t": [0, 0]})


def test_fmt_is_lossless(rng):
    for x in rng.normal(size=1000) * 10.0 ** rng.integers(-20, 20, 1000):
        assert float(fmt(x)) == x


def test_rows_roundtrip():
    rows = run_error_sweep(n=10, ks=[0.1, 0.3], solvers=["lms"], repeats=2, seed=1)
    back = loads_rows(dumps_rows(rows))
    assert back == rows
    assert json.loads(dumps_rows(rows, "json")) == rows
