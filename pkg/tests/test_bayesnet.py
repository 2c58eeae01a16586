import itertools
import json

import numpy as np
import pytest

from cicheck.bayesnet import (Dataset, DiscreteBayesNet, NetworkFormatError, forward_sample, load_network,
                              sample_cpts, save_network)
from cicheck.graphs import DAG, sample_er_dag


def small_net():
    g = DAG(3, {(0, 2), (1, 2)}, ("A", "B", "C"))
    return sample_cpts(g, [2, 3, 2], alpha=1.0, seed=5)


def test_cpt_rows_are_distributions():
    bn = sample_cpts(sample_er_dag(6, 0.5, 2), [3] * 6, alpha=0.5, seed=1)
    for v, t in enumerate(bn.cpts):
        assert t.shape == (bn.n_rows(v), 3)
        assert np.allclose(t.sum(axis=1), 1.0, atol=1e-12)


def test_row_index_last_parent_fastest():
    bn = small_net()
    assert bn.row_index(2, {0: 0, 1: 1}) == 1
    assert bn.row_index(2, {0: 1, 1: 0}) == 3
    assert bn.n_rows(2) == 6


def test_json_round_trip(tmp_path):
    bn = small_net()
    path = tmp_path / "net.json"
    save_network(bn, path)
    back = load_network(path)
    assert back.dag == bn.dag and back.cards == bn.cards
    for a, b in zip(back.cpts, bn.cpts):
        assert np.array_equal(a, b)
    assert list(json.loads(path.read_text())) == ["n", "names", "cards", "edges", "cpts"]


def test_strict_network_format():
    obj = small_net().to_json()
    with pytest.raises(NetworkFormatError, match="unknown"):
        DiscreteBayesNet.from_json({**obj, "extra": 1})
    bad = json.loads(json.dumps(obj))
    bad["cpts"]["C"][4] = [0.7, 0.7]
    with pytest.raises(NetworkFormatError, match="row 4"):
        DiscreteBayesNet.from_json(bad)


def test_sampling_is_seeded():
    bn = small_net()
    a, b = forward_sample(bn, 500, seed=3), forward_sample(bn, 500, seed=3)
    assert np.array_equal(a.data, b.data)
    assert not np.array_equal(a.data, forward_sample(bn, 500, seed=4).data)
    with pytest.raises(ValueError):
        forward_sample(bn, 0, seed=1)


def test_sample_frequencies_match_exact_joint():
    bn = small_net()
    m = 40_000
    data = forward_sample(bn, m, seed=11).data
    for a, b, c in itertools.product(range(2), range(3), range(2)):
        p = bn.cpts[0][0, a] * bn.cpts[1][0, b] * bn.cpts[2][a * 3 + b, c]
        freq = np.mean((data[:, 0] == a) & (data[:, 1] == b) & (data[:, 2] == c))
        assert abs(freq - p) < 5 * np.sqrt(p * (1 - p) / m) + 1e-9


def test_csv_round_trip():
    ds = forward_sample(small_net(), 50, seed=2)
    back = Dataset.from_csv(ds.to_csv())
    assert back.names == ds.names and np.array_equal(back.data, ds.data)
