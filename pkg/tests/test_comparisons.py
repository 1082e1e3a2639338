import io
import json

import numpy as np
import pytest

from topchoice import (
    ComparisonDesign,
    Dataset,
    NoiseModel,
    ParamVector,
    ParseError,
    ValidationError,
    connectivity_threshold,
    expected_adjacency_unbiased,
    fiedler_prefix_curve,
    ingest,
    laplacian,
    sample_dataset,
    spectrum,
    weighted_adjacency,
)
from topchoice.comparisons import (
    WeightedAdjacency,
    connected_components,
    resolve_weight,
    weight_constant,
    weight_one,
    write_csv,
)


def make_ds(n, obs):
    return Dataset(n, [str(i) for i in range(n)], obs)


# -- ingestion ----------------------------------------------------------


def test_ingest_csv_example():
    ds = ingest(io.StringIO("a,a,b\nc,b,c\n"))
    assert ds.n_items == 3
    assert ds.item_labels == ("a", "b", "c")
    assert ds.sets == ((0, 1), (1, 2))
    assert list(ds.winners) == [0, 2]


def test_ingest_empty_file_warns():
    with pytest.warns(UserWarning):
        ds = ingest(io.StringIO(""))
    assert ds.n_items == 0 and ds.m == 0


def test_ingest_winner_not_member():
    with pytest.raises(ParseError):
        ingest(io.StringIO("a,b,c\n"))


def test_ingest_duplicate_member():
    with pytest.raises(ParseError) as err:
        ingest(io.StringIO("a,a,b\nb,b,b\n"))
    assert err.value.line == 2


def test_ingest_singleton_set():
    with pytest.raises(ParseError):
        ingest(io.StringIO("a,a\n"))


def test_ingest_skips_comments_and_blanks():
    ds = ingest(io.StringIO("#winner,members...\n\na,a,b\n"))
    assert ds.m == 1


def test_ingest_jsonl():
    lines = "\n".join(
        json.dumps({"set": ["a", "b", "c"], "winner": "a"})
        for _ in range(2)
    )
    ds = ingest(io.StringIO(lines), format="jsonl")
    assert ds.n_items == 3 and ds.m == 2
    assert list(ds.winners) == [0, 0]


def test_csv_roundtrip():
    ds = make_ds(4, [((0, 1, 2), 1), ((2, 3), 3)])
    buf = io.StringIO()
    write_csv(ds, buf)
    back = ingest(io.StringIO(buf.getvalue()))
    assert back.m == ds.m
    # indices may be remapped (first-appearance order) but labels agree
    for orig_set, orig_win, new_set, new_win in zip(
        ds.sets, ds.winners, back.sets, back.winners
    ):
        assert {ds.item_labels[i] for i in orig_set} == {
            back.item_labels[i] for i in new_set
        }
        assert ds.item_labels[orig_win] == back.item_labels[new_win]


def test_dataset_validation():
    with pytest.raises(ValidationError):
        make_ds(3, [((0, 0), 0)])  # duplicate
    with pytest.raises(ValidationError):
        make_ds(3, [((0,), 0)])  # singleton
    with pytest.raises(ValidationError):
        make_ds(3, [((0, 1), 2)])  # winner outside set
    with pytest.raises(ValidationError):
        make_ds(2, [((0, 5), 0)])  # index out of range


# -- weighted adjacency --------------------------------------------------


def test_weighted_adjacency_hand_example():
    # two observations, one pair and one triple, unit weight, n/m = 3/2
    ds = make_ds(3, [((0, 1), 0), ((0, 1, 2), 2)])
    A = weighted_adjacency(ds, 1.0).entries
    assert A[0, 1] == pytest.approx(3.0)
    assert A[0, 2] == pytest.approx(1.5)
    assert A[1, 2] == pytest.approx(1.5)


def test_weighted_adjacency_single_pair():
    ds = make_ds(2, [((0, 1), 0)])
    A = weighted_adjacency(ds, 1.0).entries
    assert A[0, 1] == pytest.approx(2.0)


def test_weighted_adjacency_round_robin_quarter_weight():
    # double round robin: every off-diagonal entry is 1/(2(n-1))
    n = 6
    design = ComparisonDesign.round_robin(n, 2)
    ds = sample_dataset(
        NoiseModel.gumbel(1.0), ParamVector.zeros(n, 1.0), design, seed=0
    )
    A = weighted_adjacency(ds, 0.25).entries
    off = A[~np.eye(n, dtype=bool)]
    assert off == pytest.approx(np.full(off.size, 1 / (2 * (n - 1))))


def test_weight_linearity():
    ds = make_ds(4, [((0, 1), 0), ((1, 2, 3), 2), ((0, 3), 3)])
    A1 = weighted_adjacency(ds, weight_one).entries
    A7 = weighted_adjacency(ds, weight_constant(7.0)).entries
    assert A7 == pytest.approx(7.0 * A1)


def test_empty_dataset_rejected():
    ds = Dataset(3, ["a", "b", "c"], [])
    with pytest.raises(ValidationError):
        weighted_adjacency(ds, 1.0)


def test_resolve_weight_specs():
    assert resolve_weight("1")(5) == 1.0
    assert resolve_weight("1/k^2")(4) == pytest.approx(1 / 16)
    assert resolve_weight("const:0.25")(9) == 0.25
    assert resolve_weight(0.5)(3) == 0.5
    w = resolve_weight("matched", NoiseModel.gumbel(1.0))
    assert w(2) == pytest.approx(1 / 4)  # (k/(beta k^2))^2 at k=2
    with pytest.raises(ValidationError):
        resolve_weight("matched")
    with pytest.raises(ValidationError):
        resolve_weight("bogus")


# -- Laplacian spectra ---------------------------------------------------


def test_complete_graph_spectrum():
    A = np.ones((4, 4)) - np.eye(4)
    spec = spectrum(A)
    assert spec.eigenvalues == pytest.approx([0, 4, 4, 4], abs=1e-9)
    assert spec.fiedler == pytest.approx(4.0, abs=1e-9)


def test_path_graph_spectrum():
    A = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float)
    spec = spectrum(A)
    assert spec.eigenvalues == pytest.approx([0, 1, 3], abs=1e-9)


def test_disconnected_edges_fiedler_zero():
    A = np.zeros((4, 4))
    A[0, 1] = A[1, 0] = 1.0
    A[2, 3] = A[3, 2] = 1.0
    assert spectrum(A).fiedler == pytest.approx(0.0, abs=1e-10)


def test_laplacian_rows_sum_to_zero():
    rng = np.random.default_rng(0)
    M = rng.random((8, 8))
    M = np.triu(M, 1)
    M = M + M.T
    L = laplacian(M)
    assert np.max(np.abs(L.sum(axis=1))) < 1e-10
    assert np.max(np.abs(L @ np.ones(8))) < 1e-10


def test_spectrum_rejects_huge_n():
    with pytest.raises(ValidationError):
        spectrum(np.zeros((2001, 2001)))


def test_adjacency_validation():
    with pytest.raises(ValidationError):
        WeightedAdjacency(np.array([[0.0, 1.0], [2.0, 0.0]]))  # asymmetric
    with pytest.raises(ValidationError):
        WeightedAdjacency(np.array([[1.0, 0.0], [0.0, 0.0]]))  # diagonal
    with pytest.raises(ValidationError):
        WeightedAdjacency(np.array([[0.0, -1.0], [-1.0, 0.0]]))  # negative


def test_fiedler_monotone_under_entry_increase():
    rng = np.random.default_rng(4)
    for _ in range(20):
        M = np.triu(rng.random((6, 6)) * (rng.random((6, 6)) < 0.6), 1)
        M = M + M.T
        base = spectrum(M).fiedler
        bump = M.copy()
        i, j = rng.integers(0, 6, 2)
        while i == j:
            j = rng.integers(0, 6)
        bump[i, j] += 0.5
        bump[j, i] = bump[i, j]
        assert spectrum(bump).fiedler >= base - 1e-9


def test_connectivity_iff_positive_fiedler():
    rng = np.random.default_rng(9)
    for trial in range(200):
        n = int(rng.integers(3, 9))
        m = int(rng.integers(1, 8))
        obs = []
        for _ in range(m):
            k = int(rng.integers(2, min(4, n) + 1))
            items = tuple(int(v) for v in rng.choice(n, size=k, replace=False))
            obs.append((items, items[0]))
        ds = make_ds(n, obs)
        fied = spectrum(weighted_adjacency(ds, 1.0)).fiedler
        connected = len(connected_components(ds)) == 1
        assert (fied > 1e-10) == connected, (trial, fied, connected)


# -- prefix curves -------------------------------------------------------


def double_round_robin_ds(n):
    design = ComparisonDesign.round_robin(n, 2)
    return sample_dataset(
        NoiseModel.gumbel(1.0), ParamVector.zeros(n, 1.0), design, seed=0
    )


def test_prefix_curve_landmarks():
    ds = double_round_robin_ds(20)
    curve = dict(fiedler_prefix_curve(ds, "1/k^2", step=190))
    assert curve[190] == pytest.approx(10 / 38, abs=1e-9)
    assert curve[380] == pytest.approx(20 / 38, abs=1e-9)


def test_prefix_curve_step_larger_than_m():
    ds = make_ds(2, [((0, 1), 0)])
    curve = fiedler_prefix_curve(ds, "1", step=10)
    assert curve == [(1, pytest.approx(4.0))]


def test_prefix_curve_final_point_matches_full_adjacency():
    ds = double_round_robin_ds(6)
    curve = fiedler_prefix_curve(ds, "1/k^2", step=7)
    full = spectrum(weighted_adjacency(ds, "1/k^2")).fiedler
    assert curve[-1][0] == ds.m
    assert curve[-1][1] == pytest.approx(full, abs=1e-12)


def test_connectivity_threshold_examples():
    ds = make_ds(3, [((0, 1), 0), ((1, 2), 2), ((0, 2), 0)])
    assert connectivity_threshold(ds) == 2
    ds = make_ds(4, [((0, 1), 0), ((0, 1), 1)])
    assert connectivity_threshold(ds) is None
    ds = make_ds(2, [((0, 1), 1)])
    assert connectivity_threshold(ds) == 1


def test_connectivity_threshold_matches_prefix_fiedler():
    rng = np.random.default_rng(21)
    for _ in range(10):
        n = int(rng.integers(4, 7))
        obs = []
        for _ in range(12):
            k = int(rng.integers(2, 4))
            items = tuple(int(v) for v in rng.choice(n, size=k, replace=False))
            obs.append((items, items[0]))
        ds = make_ds(n, obs)
        threshold = connectivity_threshold(ds)
        curve = dict(fiedler_prefix_curve(ds, "1", step=1))
        positive = [mm for mm, f in sorted(curve.items()) if f > 1e-10]
        if threshold is None:
            assert not positive
        else:
            assert positive and positive[0] == threshold


# -- unbiased designs ----------------------------------------------------


def test_unbiased_pair_design():
    ub = expected_adjacency_unbiased(10, {2: 1.0}, 1.0)
    off = ub.adjacency.entries[~np.eye(10, dtype=bool)]
    assert off == pytest.approx(np.full(90, 2 / 9))
    assert ub.fiedler == pytest.approx(1.8)


def test_unbiased_triples_quarter_weight():
    ub = expected_adjacency_unbiased(10, {3: 1.0}, "1/k^2")
    assert ub.fiedler == pytest.approx(0.6)


def test_unbiased_two_items():
    ub = expected_adjacency_unbiased(2, {2: 1.0}, 1.0)
    assert ub.adjacency.entries[0, 1] == pytest.approx(2.0)
    assert ub.fiedler == pytest.approx(1.0)


def test_unbiased_mix_must_sum_to_one():
    with pytest.raises(ValidationError):
        expected_adjacency_unbiased(5, {2: 0.5, 3: 0.6}, 1.0)


def test_each_pair_equal_spectrum_is_flat():
    # equal pair counts: every nonzero Laplacian eigenvalue equals
    # n * entry (the matrix is a scaled complete graph)
    n = 8
    design = ComparisonDesign.round_robin(n, 2)
    ds = sample_dataset(
        NoiseModel.gumbel(1.0), ParamVector.zeros(n, 1.0), design, seed=3
    )
    adj = weighted_adjacency(ds, 0.25)
    spec = spectrum(adj)
    entry = adj.entries[0, 1]
    assert spec.eigenvalues[0] == pytest.approx(0.0, abs=1e-9)
    assert spec.eigenvalues[1:] == pytest.approx(
        np.full(n - 1, n * entry), abs=1e-9
    )
    assert spec.fiedler == pytest.approx(n / (2 * (n - 1)), abs=1e-9)


def test_unbiased_dense_spectrum_vs_formula_factor():
    # the closed-form prediction and the dense spectrum of the expected
    # matrix deliberately differ by exactly n^2/(n-1)^2
    n = 10
    ub = expected_adjacency_unbiased(n, {2: 1.0}, 1.0)
    dense = spectrum(ub.adjacency).fiedler
    assert dense == pytest.approx(ub.fiedler * n**2 / (n - 1) ** 2, rel=1e-9)
