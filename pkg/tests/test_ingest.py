import json
import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from videval.geometry import Box, DegenerateBoxError, FrameSize
from videval.ingest import (AnnotationError, Detection, GroundTruthFrame, GroundTruthObject, filter_boxes,
                            frame_identity, group_by_video, load_voc_dir, load_yolo_dir, manifest_to_json,
                            parse_detections, parse_manifest, parse_voc, parse_yolo_labels, write_yolo_labels)

CLASSES = ["diver", "fish"]

VOC_ONE = """<annotation>
  <filename>vid7_000012.jpg</filename>
  <size><width>640</width><height>480</height><depth>3</depth></size>
  <object><name>diver</name><bndbox><xmin>64</xmin><ymin>48</ymin><xmax>128</xmax><ymax>96</ymax></bndbox></object>
</annotation>"""


# --- VOC -------------------------------------------------------------------

def test_parse_voc_single_object():
    f = parse_voc(VOC_ONE)
    assert f.key == ("vid7", 12)
    assert len(f.objects) == 1
    assert f.objects[0].object_class == "diver"
    assert f.objects[0].box.as_tuple() == pytest.approx((0.1, 0.1, 0.2, 0.2), abs=1e-15)


def test_parse_voc_no_objects():
    doc = "<annotation><filename>a_1.jpg</filename><size><width>10</width><height>10</height></size></annotation>"
    assert parse_voc(doc).objects == ()


def test_parse_voc_truncated_reports_offset():
    with pytest.raises(AnnotationError) as exc:
        parse_voc(VOC_ONE[:150])
    assert exc.value.offset is not None and 0 < exc.value.offset <= 150


def test_parse_voc_missing_size():
    doc = VOC_ONE.replace("<size><width>640</width><height>480</height><depth>3</depth></size>", "")
    with pytest.raises(AnnotationError, match="size"):
        parse_voc(doc)
    f = parse_voc(doc, FrameSize(640, 480))
    assert f.objects[0].box.as_tuple() == pytest.approx((0.1, 0.1, 0.2, 0.2))


def test_parse_voc_identity_override():
    assert parse_voc(VOC_ONE, identity=("other", 3)).key == ("other", 3)


def test_parse_voc_degenerate_box():
    doc = VOC_ONE.replace("<xmax>128</xmax>", "<xmax>64</xmax>")
    with pytest.raises(DegenerateBoxError, match="frame=12"):
        parse_voc(doc)


def test_voc_golden_fixtures(fixtures_dir):
    frames = load_voc_dir(fixtures_dir / "voc_golden")
    expected = {
        ("clip01", 0): [("diver", (0.1, 0.1, 0.2, 0.2))],
        ("clip01", 1): [],
        ("clip02", 5): [(" Diver ".strip(), (0.0, 0.0, 0.5, 0.5)), ("diver", (0.5, 0.5, 1.0, 1.0))],
        ("clip03", 2): [("diver", (-0.1, 0.2, 0.5, 0.6)), ("diver", (0.25, 0.25, 0.75, 0.75))],
    }
    assert [f.key for f in frames] == sorted(expected)
    for f in frames:
        got = [(o.object_class, o.box.as_tuple()) for o in f.objects]
        assert len(got) == len(expected[f.key])
        for (gc, gb), (ec, eb) in zip(got, expected[f.key]):
            assert gc == ec
            assert gb == pytest.approx(eb, abs=1e-15)


def test_voc_malformed_fixture(fixtures_dir):
    with pytest.raises(AnnotationError, match="malformed XML"):
        load_voc_dir(fixtures_dir / "voc_malformed")


def test_frame_identity():
    assert frame_identity("dive_site_3_000120.xml") == ("dive_site_3", 120)
    assert frame_identity("v_7") == ("v", 7)
    with pytest.raises(AnnotationError):
        frame_identity("noindex.xml")


# --- YOLO ------------------------------------------------------------------

def test_parse_yolo_full_frame():
    f = parse_yolo_labels("0 0.5 0.5 1.0 1.0", "v", 0, CLASSES)
    assert f.objects == (GroundTruthObject("diver", Box(0.0, 0.0, 1.0, 1.0)),)


def test_parse_yolo_center_to_corner():
    f = parse_yolo_labels("0 0.15 0.15 0.1 0.1\n", "v", 0, CLASSES)
    assert f.objects[0].box.as_tuple() == pytest.approx((0.1, 0.1, 0.2, 0.2), abs=1e-15)


@pytest.mark.parametrize("line, lineno", [
    ("0 0.5 0.5 1.0", 2),
    ("0 0.5 0.5 abc 1.0", 2),
    ("0 0.5 1.5 0.2 0.2", 2),
    ("5 0.5 0.5 0.2 0.2", 2),
    ("0 0.5 0.5 0.0 0.2", 2),
])
def test_parse_yolo_line_errors(line, lineno):
    with pytest.raises(AnnotationError) as exc:
        parse_yolo_labels("1 0.5 0.5 0.2 0.2\n" + line, "v", 0, CLASSES)
    assert exc.value.line == lineno


def test_write_yolo():
    f = GroundTruthFrame("v", 0, (GroundTruthObject("diver", Box(0.1, 0.1, 0.2, 0.2)),))
    assert write_yolo_labels(f, CLASSES) == "0 0.150000 0.150000 0.100000 0.100000\n"
    assert write_yolo_labels(GroundTruthFrame("v", 0), CLASSES) == ""


def test_write_yolo_class_lookup_is_case_insensitive():
    f = GroundTruthFrame("v", 0, (GroundTruthObject(" FISH", Box(0, 0, 1, 1)),))
    assert write_yolo_labels(f, CLASSES).startswith("1 ")


@st.composite
def frames(draw):
    objs = []
    for _ in range(draw(st.integers(0, 6))):
        x0 = draw(st.floats(0, 0.98))
        y0 = draw(st.floats(0, 0.98))
        x1 = draw(st.floats(x0 + 0.01, 1.0))
        y1 = draw(st.floats(y0 + 0.01, 1.0))
        objs.append(GroundTruthObject(draw(st.sampled_from(CLASSES)), Box(x0, y0, x1, y1)))
    return GroundTruthFrame("v", 0, tuple(objs))


@given(frames())
def test_yolo_round_trip(frame):
    text = write_yolo_labels(frame, CLASSES)
    back = parse_yolo_labels(text, "v", 0, CLASSES)
    assert len(back.objects) == len(frame.objects)
    for a, b in zip(frame.objects, back.objects):
        assert a.object_class == b.object_class
        assert np.max(np.abs(np.subtract(a.box.as_tuple(), b.box.as_tuple()))) <= 1e-6
    assert write_yolo_labels(back, CLASSES) == text


# --- detections ------------------------------------------------------------

def _det_line(**kw):
    rec = {"video_id": "v", "frame_index": 3, "class": "diver", "confidence": 0.9, "box": [0.1, 0.1, 0.2, 0.2]}
    rec.update(kw)
    return json.dumps(rec)


def test_parse_detections_one_line():
    (d,) = parse_detections(_det_line())
    assert d == Detection("v", 3, "diver", 0.9, Box(0.1, 0.1, 0.2, 0.2))


def test_parse_detections_bad_confidence():
    with pytest.raises(AnnotationError) as exc:
        parse_detections(_det_line() + "\n" + _det_line(confidence=1.5))
    assert exc.value.line == 2


def test_parse_detections_skip_policy(caplog):
    text = "\n".join([_det_line(), "{not json", _det_line(frame_index=4)])
    diags = []
    with caplog.at_level(logging.WARNING):
        dets = parse_detections(text, on_error="skip", diagnostics=diags)
    assert len(dets) == 2
    assert len(diags) == 1 and "line 2" in diags[0]
    assert sum("skipping detection" in r.message for r in caplog.records) == 1


@pytest.mark.parametrize("kw", [
    {"box": [0.2, 0.1, 0.1, 0.2]},
    {"box": [0.1, 0.1, 1.2, 0.2]},
    {"box": [0.1, 0.1, 0.2]},
    {"frame_index": -1},
    {"frame_index": 1.5},
    {"class": ""},
    {"confidence": "high"},
])
def test_parse_detections_rejects(kw):
    with pytest.raises(AnnotationError):
        parse_detections(_det_line(**kw))


def test_parse_detections_missing_key():
    with pytest.raises(AnnotationError, match="missing"):
        parse_detections('{"video_id": "v"}')


# --- filter ----------------------------------------------------------------

def _frame(*boxes):
    return GroundTruthFrame("v", 0, tuple(GroundTruthObject("diver", Box(*b)) for b in boxes))


def test_filter_clamp():
    out, diags = filter_boxes([_frame((-0.1, 0.2, 0.5, 0.6))], "clamp")
    assert out[0].objects[0].box == Box(0.0, 0.2, 0.5, 0.6)
    assert [d.action for d in diags] == ["clamped"]


def test_filter_reject():
    out, diags = filter_boxes([_frame((-0.1, 0.2, 0.5, 0.6), (0.1, 0.1, 0.2, 0.2))], "reject")
    assert [o.box for o in out[0].objects] == [Box(0.1, 0.1, 0.2, 0.2)]
    assert len(diags) == 1 and diags[0].object_index == 0 and diags[0].action == "dropped"


def test_filter_clamp_fully_outside():
    out, diags = filter_boxes([_frame((1.1, 0.2, 1.5, 0.6))], "clamp")
    assert out[0].objects == ()
    assert diags[0].reason == "degenerate after clipping"


def test_filter_default_is_reject():
    out, _ = filter_boxes([_frame((-0.1, 0.2, 0.5, 0.6))])
    assert out[0].objects == ()


def test_filter_rejects_unknown_policy():
    with pytest.raises(ValueError):
        filter_boxes([], "ignore")


coord = st.one_of(st.floats(-0.5, 1.5), st.sampled_from([float("nan"), float("inf"), -float("inf")]))


@settings(max_examples=300)
@given(st.lists(st.tuples(coord, coord, coord, coord), max_size=6), st.sampled_from(["reject", "clamp"]))
def test_filter_never_emits_invalid_box(raw, policy):
    out, diags = filter_boxes([_frame(*raw)], policy)
    assert all(o.box.is_valid() for o in out[0].objects)
    dropped = sum(d.action == "dropped" for d in diags)
    assert len(out[0].objects) + dropped == len(raw)


@settings(max_examples=200)
@given(st.text(max_size=300))
def test_voc_parser_fuzz_never_leaks_invalid_box(noise):
    doc = VOC_ONE[: len(VOC_ONE) // 2] + noise + VOC_ONE[len(VOC_ONE) // 2:]
    try:
        frame = parse_voc(doc)
    except (AnnotationError, DegenerateBoxError):
        return
    out, _ = filter_boxes([frame])
    assert all(o.box.is_valid() for o in out[0].objects)


@settings(max_examples=200)
@given(st.lists(st.tuples(st.integers(-2, 3), *[st.floats(-1, 2, allow_nan=False)] * 4), max_size=5))
def test_yolo_parser_fuzz(rows):
    text = "\n".join(" ".join(str(v) for v in r) for r in rows)
    try:
        frame = parse_yolo_labels(text, "v", 0, CLASSES)
    except AnnotationError:
        return
    out, _ = filter_boxes([frame])
    assert all(o.box.is_valid() for o in out[0].objects)


# --- manifest / grouping -----------------------------------------------------

def test_manifest_round_trip(fixtures_dir):
    ms = parse_manifest((fixtures_dir / "corpus" / "manifest.json").read_text())
    assert list(ms) == ["pool01", "pool02", "ocean01"]
    assert ms["ocean01"].environment_tag == "ocean" and ms["ocean01"].fps == 20.0
    assert parse_manifest(manifest_to_json(ms.values())) == ms


def test_manifest_defaults_fps():
    ms = parse_manifest('[{"video_id": "a", "frame_count": 3, "width": 10, "height": 20}]')
    assert ms["a"].fps == 20.0 and ms["a"].frame_size == FrameSize(10, 20)
    assert ms["a"].split_tag is None


def test_manifest_files_override_identity(tmp_path):
    (tmp_path / "gt").mkdir()
    (tmp_path / "gt" / "shot_b.txt").write_text("0 0.5 0.5 0.2 0.2\n")
    (tmp_path / "gt" / "shot_a.txt").write_text("0 0.5 0.5 0.4 0.4\n")
    ms = parse_manifest('[{"video_id": "clip", "frame_count": 2, "width": 10, "height": 10,'
                        ' "files": ["shot_b", "shot_a"]}]')
    frames = load_yolo_dir(tmp_path / "gt", CLASSES, ms)
    assert [f.key for f in frames] == [("clip", 0), ("clip", 1)]
    assert frames[0].objects[0].box.width == pytest.approx(0.2)


def test_manifest_errors():
    with pytest.raises(AnnotationError):
        parse_manifest("{")
    with pytest.raises(AnnotationError, match="duplicate"):
        parse_manifest('[{"video_id": "a", "frame_count": 1, "width": 1, "height": 1},'
                       ' {"video_id": "a", "frame_count": 1, "width": 1, "height": 1}]')
    with pytest.raises(AnnotationError):
        parse_manifest('[{"video_id": "a", "frame_count": 0, "width": 1, "height": 1}]')


def test_group_by_video_rejects_duplicates():
    with pytest.raises(AnnotationError, match="duplicate"):
        group_by_video([GroundTruthFrame("v", 1), GroundTruthFrame("v", 1)])
