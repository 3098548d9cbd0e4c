import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ribbonlab.brush import BrushKind
from ribbonlab.errors import (ContractError, ParseError, ProtocolError,
                              StrokeNotFoundError)
from ribbonlab.geom import Pose, UnitQuat, Vec3
from ribbonlab.session import (Erase, Redo, Session, SetBrush, StrokeBegin,
                               StrokeEnd, StrokePoint, Undo, event_from_dict,
                               event_to_dict, load_session, read_event_log,
                               read_pose_jsonl, replay, save_session,
                               write_event_log, write_pose_jsonl)

from conftest import random_pose_stream, rng


def stroke_events(t0: float, n: int = 4, x0: float = 0.0, brush=None):
    # motion along +Z so identity-frame strip rulings sweep a real quad strip
    events = [StrokeBegin(brush=brush)]
    for i in range(n):
        events.append(StrokePoint(pose=Pose(
            position=Vec3(x0, 0.0, 0.05 * i),
            orientation=UnitQuat.identity(),
            timestamp=t0 + 0.1 * i, trigger=True)))
    events.append(StrokeEnd())
    return events


class TestApplyEvent:
    def test_single_undo(self):
        s = Session()
        for ev in stroke_events(0.0):
            s.apply_event(ev)
        s.apply_event(Undo())
        assert len(s.strokes) == 0
        assert s.correction_count == 1
        assert s.redo_depth == 1

    def test_redo_round_trip(self):
        s = Session()
        for ev in stroke_events(0.0):
            s.apply_event(ev)
        digest_before = s.strokes_digest()
        s.apply_event(Undo())
        s.apply_event(Redo())
        assert len(s.strokes) == 1
        assert s.correction_count == 2
        assert s.strokes_digest() == digest_before

    def test_undo_on_empty_session_not_counted(self):
        s = Session()
        s.apply_event(Undo())
        s.apply_event(Redo())
        assert s.correction_count == 0
        assert len(s.strokes) == 0

    def test_point_outside_stroke_rejected(self):
        s = Session()
        with pytest.raises(ProtocolError):
            s.apply_event(StrokePoint(pose=Pose(
                position=Vec3(0, 0, 0), orientation=UnitQuat.identity(),
                timestamp=0.0, trigger=True)))

    def test_erase_unknown_id(self):
        s = Session()
        with pytest.raises(StrokeNotFoundError):
            s.apply_event(Erase(stroke_id=7))

    def test_erase_is_undoable_and_counted(self):
        s = Session()
        for ev in stroke_events(0.0):
            s.apply_event(ev)
        sid = s.strokes[0].stroke_id
        s.apply_event(Erase(stroke_id=sid))
        assert len(s.strokes) == 0
        assert s.correction_count == 1
        s.apply_event(Undo())
        assert [st.stroke_id for st in s.strokes] == [sid]
        assert s.correction_count == 2

    def test_new_stroke_clears_redo(self):
        s = Session()
        for ev in stroke_events(0.0):
            s.apply_event(ev)
        s.apply_event(Undo())
        assert s.redo_depth == 1
        for ev in stroke_events(10.0, x0=1.0):
            s.apply_event(ev)
        assert s.redo_depth == 0

    def test_brush_switch_applies_at_begin(self):
        s = Session()
        s.apply_event(SetBrush(brush=BrushKind.NORMAL))
        for ev in stroke_events(0.0):
            s.apply_event(ev)
        s.apply_event(SetBrush(brush=BrushKind.STRIP))
        for ev in stroke_events(10.0, x0=1.0):
            s.apply_event(ev)
        assert s.strokes[0].brush is BrushKind.NORMAL
        assert s.strokes[1].brush is BrushKind.STRIP

    def test_double_begin_rejected(self):
        s = Session()
        s.apply_event(StrokeBegin())
        with pytest.raises(ProtocolError):
            s.apply_event(StrokeBegin())

    def test_undo_redo_identity_on_content(self):
        s = Session()
        for t0, x0 in ((0.0, 0.0), (10.0, 1.0), (20.0, 2.0)):
            for ev in stroke_events(t0, x0=x0):
                s.apply_event(ev)
        before = s.state_doc()
        before.pop("correction_count")
        s.apply_event(Undo())
        s.apply_event(Redo())
        after = s.state_doc()
        after.pop("correction_count")
        assert before == after


def random_event_log(seed: int, length: int = 60):
    """Generator of random valid event sequences."""
    r = rng(seed)
    events = []
    t = 0.0
    open_stroke = False
    live_ids = []
    next_id = 0
    undo_stack = 0
    redo_stack = 0
    points = 0
    for _ in range(length):
        roll = r.random()
        if open_stroke:
            if roll < 0.7:
                t += 0.05
                events.append(StrokePoint(pose=Pose(
                    position=Vec3(float(r.normal()), float(r.normal()),
                                  float(r.normal())),
                    orientation=UnitQuat.identity(), timestamp=t, trigger=True)))
                points += 1
            else:
                events.append(StrokeEnd())
                open_stroke = False
                live_ids.append(next_id)
                next_id += 1
                undo_stack += 1
                redo_stack = 0
        else:
            if roll < 0.35:
                brush = BrushKind.NORMAL if r.random() < 0.5 else BrushKind.STRIP
                events.append(StrokeBegin(brush=brush))
                open_stroke = True
            elif roll < 0.5 and live_ids:
                idx = int(r.integers(0, len(live_ids)))
                events.append(Erase(stroke_id=live_ids.pop(idx)))
                undo_stack += 1
                redo_stack = 0
            elif roll < 0.7:
                events.append(Undo())
            elif roll < 0.85:
                events.append(Redo())
            else:
                events.append(SetBrush(
                    brush=BrushKind.NORMAL if r.random() < 0.5 else BrushKind.STRIP))
    return events


class TestReplay:
    def test_empty_log(self):
        s = replay([])
        assert len(s.strokes) == 0
        assert s.correction_count == 0

    def test_replay_equals_incremental_random_logs(self):
        for seed in range(40):
            events = random_event_log(seed)
            incremental = Session()
            applied = []

            def safe_apply(sess, ev):
                try:
                    sess.apply_event(ev)
                    return True
                except (ProtocolError, StrokeNotFoundError):
                    return False

            for ev in events:
                if safe_apply(incremental, ev):
                    applied.append(ev)
            replayed = replay(applied)
            assert replayed.state_doc() == incremental.state_doc()
            assert replayed.strokes_digest() == incremental.strokes_digest()

    def test_correction_count_monotone(self):
        for seed in range(10):
            s = Session()
            last = 0
            for ev in random_event_log(seed, length=40):
                try:
                    s.apply_event(ev)
                except (ProtocolError, StrokeNotFoundError):
                    continue
                assert s.correction_count >= last
                last = s.correction_count


class TestSerialization:
    def test_event_dict_round_trip(self):
        events = random_event_log(3, length=50)
        for ev in events:
            assert event_from_dict(event_to_dict(ev)) == ev

    def test_event_log_file_round_trip(self, tmp_path):
        events = random_event_log(4, length=50)
        path = str(tmp_path / "events.jsonl")
        write_event_log(events, path)
        assert read_event_log(path) == events

    def test_pose_jsonl_round_trip_exact(self, tmp_path):
        r = rng(5)
        poses = random_pose_stream(r, 30)
        path = str(tmp_path / "poses.jsonl")
        write_pose_jsonl(poses, path)
        assert read_pose_jsonl(path) == poses

    def test_parse_error_carries_line_number(self, tmp_path):
        path = str(tmp_path / "bad.jsonl")
        with open(path, "w") as fh:
            fh.write('{"t": 0.0, "p": [0,0,0], "q": [1,0,0,0], "trig": true}\n')
            fh.write("this is not json\n")
        with pytest.raises(ParseError) as err:
            read_pose_jsonl(path)
        assert err.value.line == 2

    def test_non_unit_pose_rejected_at_ingestion(self, tmp_path):
        path = str(tmp_path / "bad.jsonl")
        with open(path, "w") as fh:
            fh.write('{"t": 0.0, "p": [0,0,0], "q": [1,0,0.1,0], "trig": true}\n')
        with pytest.raises(ParseError):
            read_pose_jsonl(path)

    def test_save_load_save_byte_identical(self, tmp_path):
        s = Session()
        for ev in random_event_log(6, length=80):
            try:
                s.apply_event(ev)
            except (ProtocolError, StrokeNotFoundError):
                continue
        p1 = str(tmp_path / "one.json")
        p2 = str(tmp_path / "two.json")
        save_session(s, p1)
        loaded = load_session(p1)
        save_session(loaded, p2)
        assert open(p1, "rb").read() == open(p2, "rb").read()

    def test_load_detects_digest_mismatch(self, tmp_path):
        s = Session()
        for ev in stroke_events(0.0):
            s.apply_event(ev)
        path = str(tmp_path / "sess.json")
        save_session(s, path)
        doc = json.loads(open(path).read())
        doc["built_strokes_digest"] = "sha256:" + "0" * 64
        open(path, "w").write(json.dumps(doc))
        with pytest.raises(ContractError):
            load_session(path)

    def test_elapsed_spans_pose_timestamps(self):
        s = Session()
        for ev in stroke_events(2.0):
            s.apply_event(ev)
        for ev in stroke_events(10.0, x0=1.0):
            s.apply_event(ev)
        assert abs(s.elapsed - (10.3 - 2.0)) < 1e-12
        assert s.started_at == 2.0


@given(st.lists(st.sampled_from(["undo", "redo", "stroke", "erase", "brush"]),
                min_size=0, max_size=30))
@settings(max_examples=60)
def test_property_replay_matches_incremental(ops):
    """Replay of whatever was applied incrementally reproduces the state."""
    s = Session()
    applied = []
    t = [0.0]
    live = []

    def do(ev):
        try:
            s.apply_event(ev)
            applied.append(ev)
            return True
        except (ProtocolError, StrokeNotFoundError):
            return False

    for op in ops:
        if op == "stroke":
            t[0] += 1.0
            ok = True
            for ev in stroke_events(t[0]):
                ok = do(ev) and ok
            if ok:
                live.append(s.strokes[-1].stroke_id)
        elif op == "erase":
            if live:
                sid = live.pop()
                do(Erase(stroke_id=sid))
            else:
                do(Erase(stroke_id=999))
        elif op == "undo":
            do(Undo())
            live[:] = [st_.stroke_id for st_ in s.strokes]
        elif op == "redo":
            do(Redo())
            live[:] = [st_.stroke_id for st_ in s.strokes]
        else:
            do(SetBrush(brush=BrushKind.NORMAL))
    assert replay(applied).state_doc() == s.state_doc()
