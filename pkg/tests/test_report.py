import math

import pandas as pd
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stream_verify.report import History, aitken, format_summary, rate, rate_report, summary_table

NDOF = [9, 49, 225, 961, 3969]


def _history(name='run', **columns):
    rows = [{'ndof': n, **{k: v[i] for k, v in columns.items()}} for i, n in enumerate(NDOF)]
    return History.from_rows(rows, name)


def _summary_history(name, limit):
    beta_h = [limit + 0.5 ** k for k in range(len(NDOF))]
    return _history(name, beta_h=beta_h, beta0_hat=[0.9] * 5, beta0=[0.8] * 5, rho_uq=[1.5] * 5,
                    rho_ex=[1e-3] * 5)


class TestHistory:
    def test_ndof_must_increase(self):
        with pytest.raises(ValueError):
            History.from_rows([{'ndof': 9}, {'ndof': 9}])

    def test_needs_ndof(self):
        with pytest.raises(ValueError):
            History(pd.DataFrame({'error': [1.0]}))

    def test_read_csv(self, tmp_path):
        path = tmp_path / 'square-poly_lambda1_uniform.csv'
        _history(error=[n ** -0.5 for n in NDOF]).frame.to_csv(path, index=False)
        history = History.read_csv(path)
        assert history.name == 'square-poly_lambda1_uniform'
        assert len(history) == len(NDOF)
        assert history.last['ndof'] == NDOF[-1]


class TestRate:
    def test_half_order(self):
        history = _history(error=[3.0 * n ** -0.5 for n in NDOF])
        assert rate(history, 'error') == pytest.approx(0.5, abs=1e-12)

    def test_constant_column(self):
        assert rate(_history(kappa=[0.25] * 5), 'kappa') == pytest.approx(0.0, abs=1e-12)

    def test_window_uses_the_tail(self):
        # the first level would spoil a full fit
        error = [1.0] + [n ** -1.0 for n in NDOF[1:]]
        assert rate(_history(error=error), 'error', window=4) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize('bad', [0.0, -1.0, math.nan])
    def test_non_positive_values_are_skipped(self, bad):
        assert rate(_history(mu_hat=[1.0, 0.5, 0.25, bad, 0.1]), 'mu_hat') is None

    @given(st.lists(st.floats(1e-3, 1e3), min_size=5, max_size=5), st.floats(1e-6, 1e6), st.floats(1e-3, 1e3))
    def test_invariant_under_rescaling(self, values, scale, ndof_scale):
        base = rate(_history(error=values), 'error')
        scaled = _history(error=[scale * v for v in values])
        assert rate(scaled, 'error') == pytest.approx(base, abs=1e-9)
        shifted = History.from_rows({'ndof': ndof_scale * n, 'error': v} for n, v in zip(NDOF, values))
        assert rate(shifted, 'error') == pytest.approx(base, abs=1e-9)

    def test_needs_two_levels(self):
        with pytest.raises(ValueError):
            rate(History.from_rows([{'ndof': 9, 'error': 1.0}]), 'error')

    def test_report(self):
        report = rate_report(_history('demo', error=[n ** -0.5 for n in NDOF], mu_hat=[0.0] * 5))
        assert 'run: demo' in report
        assert 'error        0.5000' in report
        assert 'mu_hat       skipped' in report


class TestAitken:
    def test_geometric_sequence(self):
        assert aitken([2.0 + 0.5 ** k for k in range(5)]) == pytest.approx(2.0, abs=1e-12)

    def test_constant_sequence(self):
        assert aitken([0.75, 0.75, 0.75]) == 0.75

    def test_needs_three_values(self):
        with pytest.raises(ValueError):
            aitken([1.0, 2.0])

    @given(st.floats(-10.0, 10.0), st.floats(0.1, 10.0), st.floats(0.1, 0.9))
    def test_recovers_geometric_limits(self, limit, scale, ratio):
        values = [limit + scale * ratio ** k for k in range(3)]
        assert aitken(values) == pytest.approx(limit, abs=1e-9)

    @given(st.floats(-10.0, 10.0), st.floats(0.1, 10.0), st.floats(0.1, 0.9), st.floats(0.1, 10.0),
           st.floats(-10.0, 10.0), st.booleans())
    def test_commutes_with_affine_maps(self, limit, scale, ratio, a, c, flip):
        a = -a if flip else a
        values = [limit + scale * ratio ** k for k in range(3)]
        mapped = aitken([a * x + c for x in values])
        assert mapped == pytest.approx(a * aitken(values) + c, rel=1e-8, abs=1e-8)


class TestSummary:
    def test_rows_and_columns(self):
        table = summary_table([_summary_history('a', 1.0), _summary_history('b', 0.5)])
        assert list(table.index) == ['beta', 'beta0_hat', 'beta0', 'rho_uq', 'rho_ex']
        assert list(table.columns) == ['a', 'b']
        assert table.loc['beta', 'a'] == pytest.approx(1.0, abs=1e-12)
        assert table.loc['beta', 'b'] == pytest.approx(0.5, abs=1e-12)
        assert table.loc['rho_ex', 'b'] == 1e-3

    def test_short_history_uses_the_last_value(self):
        rows = [{'ndof': 9, 'beta_h': 0.99, 'beta0_hat': 0.9, 'beta0': 0.8, 'rho_uq': 1.0, 'rho_ex': 0.1},
                {'ndof': 49, 'beta_h': 0.98, 'beta0_hat': 0.9, 'beta0': 0.8, 'rho_uq': 1.0, 'rho_ex': 0.1}]
        table = summary_table([History.from_rows(rows, 'short')])
        assert table.loc['beta', 'short'] == 0.98

    def test_format(self):
        text = format_summary(summary_table([_summary_history('a', 1.0)]))
        assert '1.0000000' in text and 'rho_uq' in text
