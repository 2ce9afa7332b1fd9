import numpy as np
import pytest
from sklearn.base import clone

from swimtrack.estimator import IouAssociationTracker
from swimtrack.geometry import BBox


def drifting_detections(n_agents=3, n_frames=20, spacing=60.0, drop=()):
    """(n, 5) detection array: agent i at x = spacing*i + frame."""
    rows = []
    for f in range(1, n_frames + 1):
        for i in range(n_agents):
            if (f, i) in drop:
                continue
            rows.append((f, spacing * i + f, 0.0, 10.0, 10.0))
    return np.array(rows, dtype=float)


def gt_array(n_agents=3, n_frames=20, spacing=60.0):
    rows = []
    for f in range(1, n_frames + 1):
        for i in range(n_agents):
            rows.append((f, i + 1, spacing * i + f, 0.0, 10.0, 10.0))
    return np.array(rows, dtype=float)


class TestParamProtocol:
    def test_get_params_round_trip(self):
        est = IouAssociationTracker(tau_match=0.4, k=5)
        params = est.get_params()
        assert params["tau_match"] == 0.4
        assert params["k"] == 5
        assert set(params) == {
            "tau_match", "tau_ambiguous", "alpha", "k", "population_mode",
            "spawn_delay", "arena", "boundary_margin", "enable_interaction",
            "enable_refind",
        }

    def test_set_params_chains(self):
        est = IouAssociationTracker().set_params(alpha=0.7, enable_refind=False)
        assert est.alpha == 0.7
        assert est.enable_refind is False

    def test_clone_preserves_params(self):
        est = IouAssociationTracker(population_mode="fixed", spawn_delay=3)
        dup = clone(est)
        assert dup.get_params() == est.get_params()

    def test_invalid_params_raise_at_fit(self):
        est = IouAssociationTracker(tau_match=2.0)
        with pytest.raises(ValueError):
            est.fit(drifting_detections())


class TestPredict:
    def test_output_shape_and_columns(self):
        det = drifting_detections()
        out = IouAssociationTracker().fit_predict(det)
        assert out.shape == (len(det), 7)
        assert set(out[:, 1]) == {1.0, 2.0, 3.0}
        keys = list(zip(out[:, 0], out[:, 1]))
        assert keys == sorted(keys)

    def test_ids_stay_constant_per_agent(self):
        out = IouAssociationTracker().fit_predict(drifting_detections())
        for tid in (1.0, 2.0, 3.0):
            rows = out[out[:, 1] == tid]
            assert len(set(rows[:, 2] - rows[:, 0])) == 1

    def test_gap_interpolated_with_zero_conf(self):
        det = drifting_detections(drop={(5, 0), (6, 0)})
        out = IouAssociationTracker().fit_predict(det)
        assert out.shape[0] == 60
        gap = out[(out[:, 1] == 1.0) & (out[:, 0] >= 5) & (out[:, 0] <= 6)]
        assert list(gap[:, 6]) == [0.0, 0.0]
        assert list(gap[:, 2]) == [pytest.approx(5.0), pytest.approx(6.0)]
        assert np.all(out[out[:, 6] > 0][:, 6] == 1.0)

    def test_empty_input(self):
        out = IouAssociationTracker().predict(np.empty((0, 5)))
        assert out.shape == (0, 7)

    def test_six_column_input_keeps_confidence(self):
        det = np.array([[1, 0, 0, 10, 10, 0.75], [2, 1, 0, 10, 10, 0.5]])
        out = IouAssociationTracker().fit_predict(det)
        assert list(out[:, 6]) == [0.75, 0.5]

    def test_bad_shapes_rejected(self):
        est = IouAssociationTracker()
        with pytest.raises(ValueError):
            est.predict(np.zeros((3, 4)))
        with pytest.raises(ValueError):
            est.predict(np.array([[1, 0, 0, -5, 10]]))
        with pytest.raises(ValueError):
            est.predict(np.array([[1.5, 0, 0, 10, 10]]))

    def test_fit_sets_frame_count(self):
        est = IouAssociationTracker().fit(drifting_detections(n_frames=8))
        assert est.n_frames_ == 8


class TestScore:
    def test_perfect_tracking_scores_one(self):
        assert IouAssociationTracker().score(drifting_detections(), gt_array()) == 1.0

    def test_dropout_without_refind_scores_below_one(self):
        det = drifting_detections(drop={(5, 0), (6, 0)})
        gt = gt_array()
        with_refind = IouAssociationTracker().score(det, gt)
        without = IouAssociationTracker(enable_refind=False).score(det, gt)
        assert with_refind == 1.0
        assert without < with_refind

    def test_empty_ground_truth_raises(self):
        with pytest.raises(ValueError, match="MOTA"):
            IouAssociationTracker().score(drifting_detections(), np.empty((0, 6)))


def test_docstring_example():
    det = np.array([[1, 0, 0, 10, 10], [2, 2, 0, 10, 10]])
    out = IouAssociationTracker().fit_predict(det)
    assert list(out[:, 1]) == [1.0, 1.0]
