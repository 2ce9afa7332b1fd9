import json

import numpy as np
import pytest

from swimtrack.geometry import BBox, iou
from swimtrack.metrics import clear_mot, evaluate_tracking, id_metrics
from swimtrack.tracker import TrajectoryEntry

from oracles import best_trajectory_weight


def box_at(x, y=0.0, w=10.0, h=10.0):
    return BBox(float(x), float(y), w, h)


def grid_tracks(n_ids, frames, spacing=100.0):
    """Well-separated constant tracks: id i sits at x = spacing * i."""
    return {
        i: {f: box_at(spacing * i) for f in frames}
        for i in range(1, n_ids + 1)
    }


def random_trajectories(rng, max_ids=5, max_frame=6):
    lanes = [0.0, 4.0, 8.0, 40.0, 80.0, 200.0]
    out = {}
    for i in range(1, int(rng.integers(0, max_ids + 1)) + 1):
        hist = {}
        for f in range(max_frame):
            if rng.random() < 0.7:
                hist[f] = box_at(float(rng.choice(lanes)), float(rng.choice([0.0, 30.0])))
        if hist:
            out[i] = hist
    return out


class TestClearMot:
    def test_identical_tracks(self):
        gt = grid_tracks(3, range(5))
        r = clear_mot(gt, gt)
        assert r.mota == 1.0
        assert (r.fn, r.fp, r.idsw) == (0, 0, 0)
        assert r.num_gt == 15

    def test_one_miss_one_spurious_over_hundred(self):
        gt = grid_tracks(10, range(1, 11))
        hyp = {i: dict(h) for i, h in gt.items()}
        del hyp[3][5]                      # one miss
        hyp[99] = {7: box_at(5000.0)}      # one spurious box
        r = clear_mot(gt, hyp)
        assert (r.fn, r.fp, r.idsw) == (1, 1, 0)
        assert r.num_gt == 100
        assert r.mota == pytest.approx(0.98)

    def test_identity_split_mid_sequence(self):
        gt = {1: {f: box_at(0) for f in range(1, 5)}}
        hyp = {
            1: {1: box_at(0), 2: box_at(0)},
            2: {3: box_at(0), 4: box_at(0)},
        }
        r = clear_mot(gt, hyp)
        assert (r.fn, r.fp, r.idsw) == (0, 0, 1)
        assert r.mota == pytest.approx(0.75)

    def test_no_ground_truth_is_not_applicable(self):
        r = clear_mot({}, {1: {0: box_at(0)}})
        assert r.mota is None
        assert r.num_gt == 0
        assert r.fp == 1

    def test_previous_correspondence_persists_over_better_newcomer(self):
        gt = {1: {1: box_at(0), 2: box_at(0)}}
        hyp = {
            1: {1: box_at(0), 2: box_at(2)},   # drifted but still above gate
            2: {2: box_at(0)},                 # perfect overlap newcomer
        }
        r = clear_mot(gt, hyp)
        assert r.idsw == 0
        assert r.fp == 1

    def test_persistence_breaks_below_gate(self):
        gt = {1: {1: box_at(0), 2: box_at(0)}}
        hyp = {
            1: {1: box_at(0), 2: box_at(8)},   # iou 0.11, below gate
            2: {2: box_at(0)},
        }
        r = clear_mot(gt, hyp)
        assert r.idsw == 1
        assert r.fp == 1

    def test_switch_counted_across_gap(self):
        gt = {1: {1: box_at(0), 2: box_at(500), 3: box_at(0)}}
        hyp = {
            1: {1: box_at(0)},
            2: {3: box_at(0)},
        }
        r = clear_mot(gt, hyp)
        assert r.idsw == 1
        assert r.fn == 1

    def test_switch_back_counts_again(self):
        gt = {1: {f: box_at(0) for f in range(1, 4)}}
        hyp = {
            1: {1: box_at(0), 3: box_at(0)},
            2: {2: box_at(0)},
        }
        r = clear_mot(gt, hyp)
        assert r.idsw == 2
        assert r.fp == 0

    def test_mota_may_go_negative(self):
        gt = {1: {0: box_at(0)}}
        hyp = {i: {0: box_at(1000.0 * i)} for i in range(2, 7)}
        r = clear_mot(gt, hyp)
        assert r.mota is not None
        assert r.mota < 0

    def test_interpolated_entries_scored_as_ordinary(self):
        gt = grid_tracks(2, range(4))
        hyp_plain = {i: dict(h) for i, h in gt.items()}
        hyp_flagged = {
            i: {f: TrajectoryEntry(b, 0.0, True) for f, b in h.items()}
            for i, h in gt.items()
        }
        assert clear_mot(gt, hyp_plain) == clear_mot(gt, hyp_flagged)


class TestIdMetrics:
    def test_identical_tracks(self):
        gt = grid_tracks(4, range(6))
        r = id_metrics(gt, gt)
        assert r.idf1 == 1.0
        assert r.idp == 1.0 and r.idr == 1.0
        assert r.idtp == 24 and r.idfp == 0 and r.idfn == 0

    def test_nine_of_ten_frames(self):
        gt = {1: {f: box_at(0) for f in range(10)}}
        hyp = {1: {f: box_at(0 if f < 9 else 100.0) for f in range(10)}}
        r = id_metrics(gt, hyp)
        assert (r.idtp, r.idfp, r.idfn) == (9, 1, 1)
        assert r.idf1 == pytest.approx(0.90)
        assert r.idp == pytest.approx(0.90)
        assert r.idr == pytest.approx(0.90)

    def test_identity_split_halves_f1(self):
        gt = {1: {f: box_at(0) for f in range(1, 5)}}
        hyp = {
            1: {1: box_at(0), 2: box_at(0)},
            2: {3: box_at(0), 4: box_at(0)},
        }
        r = id_metrics(gt, hyp)
        assert (r.idtp, r.idfp, r.idfn) == (2, 2, 2)
        assert r.idf1 == pytest.approx(0.50)

    def test_empty_inputs_not_applicable(self):
        r = id_metrics({}, {})
        assert r.idf1 is None and r.idp is None and r.idr is None
        assert (r.idtp, r.idfp, r.idfn) == (0, 0, 0)

    def test_empty_hypothesis(self):
        gt = grid_tracks(2, range(3))
        r = id_metrics(gt, {})
        assert r.idtp == 0 and r.idfn == 6
        assert r.idp is None
        assert r.idr == 0.0
        assert r.idf1 == 0.0

    def test_prefers_max_weight_over_max_cardinality(self):
        # pairing both hyp tracks naively would cost the big 10-frame match
        gt = {
            1: {f: box_at(0) for f in range(10)},
            2: {f: box_at(500) for f in range(3)},
        }
        hyp = {
            1: {f: box_at(0) for f in range(3)},
            2: {f: box_at(0) for f in range(3, 10)},
        }
        r = id_metrics(gt, hyp)
        assert r.idtp == 7

    def test_matches_exhaustive_matching_oracle(self):
        rng = np.random.default_rng(91)
        for _ in range(60):
            gt = random_trajectories(rng)
            hyp = random_trajectories(rng)
            r = id_metrics(gt, hyp)
            gt_ids = sorted(gt)
            hyp_ids = sorted(hyp)
            weights = np.zeros((len(gt_ids), len(hyp_ids)), dtype=int)
            for i, g in enumerate(gt_ids):
                for j, h in enumerate(hyp_ids):
                    weights[i, j] = sum(
                        1
                        for f in set(gt[g]) & set(hyp[h])
                        if iou(gt[g][f], hyp[h][f]) >= 0.5
                    )
            expect = best_trajectory_weight(weights)
            assert r.idtp == expect
            assert r.idfn == sum(len(h) for h in gt.values()) - expect
            assert r.idfp == sum(len(h) for h in hyp.values()) - expect

    def test_harmonic_mean_identity(self):
        rng = np.random.default_rng(92)
        checked = 0
        for _ in range(80):
            r = id_metrics(random_trajectories(rng), random_trajectories(rng))
            if r.idp is None or r.idr is None or r.idp + r.idr == 0:
                continue
            checked += 1
            assert r.idf1 == pytest.approx(
                2 * r.idp * r.idr / (r.idp + r.idr), abs=1e-12
            )
        assert checked > 20


class TestOrderInvariance:
    def test_insertion_order_does_not_matter(self):
        rng = np.random.default_rng(93)
        for _ in range(20):
            gt = random_trajectories(rng)
            hyp = random_trajectories(rng)

            def shuffled(trajs):
                ids = list(trajs)
                rng.shuffle(ids)
                return {
                    i: dict(sorted(trajs[i].items(), key=lambda kv: -kv[0]))
                    for i in ids
                }

            assert clear_mot(gt, hyp) == clear_mot(shuffled(gt), shuffled(hyp))
            assert id_metrics(gt, hyp) == id_metrics(shuffled(gt), shuffled(hyp))


class TestEvaluateTracking:
    def test_gate_validated(self):
        with pytest.raises(ValueError):
            evaluate_tracking({}, {}, iou_gate=1.2)

    def test_report_json_roundtrip(self):
        gt = grid_tracks(2, range(4))
        report = evaluate_tracking(gt, gt, sequence="seq01")
        payload = json.loads(report.to_json())
        assert payload["MOTA"] == 1.0
        assert payload["IDF1"] == 1.0
        assert payload["sequence"] == "seq01"
        assert payload["counts"]["GT"] == 8
        assert "higher is better" in payload["metric_direction"]

    def test_report_not_applicable_rendering(self):
        report = evaluate_tracking({}, {})
        payload = json.loads(report.to_json())
        assert payload["MOTA"] == "NOT-APPLICABLE"
        text = report.to_text()
        assert "NOT-APPLICABLE" in text

    def test_report_text_format(self):
        gt = grid_tracks(1, range(2))
        text = evaluate_tracking(gt, gt).to_text()
        assert "metrics (higher is better):" in text
        assert "MOTA: 1.000000" in text

    def test_count_identities(self):
        rng = np.random.default_rng(94)
        for _ in range(30):
            gt = random_trajectories(rng)
            hyp = random_trajectories(rng)
            report = evaluate_tracking(gt, hyp)
            n_gt = sum(len(h) for h in gt.values())
            n_hyp = sum(len(h) for h in hyp.values())
            assert report.ident.idtp + report.ident.idfn == n_gt
            assert report.ident.idtp + report.ident.idfp == n_hyp
            assert report.clear.num_gt == n_gt
