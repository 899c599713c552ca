"""
Post-processing of refinement histories: empirical rates, Aitken
extrapolation and the summary table across runs.
"""

import math
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
import pandas as pd

RATE_WINDOW = 4
RATE_COLUMNS = ('error', 'eta', 'kappa', 'kappa_nc', 'mu_res', 'mu_hat', 'one_minus_J', 'error_J', 'rho_ex')
SUMMARY_ROWS = ('beta', 'beta0_hat', 'beta0', 'rho_uq', 'rho_ex')
AITKEN_TOL = 1e-14


class History:
    """Per-level records of one run, ordered by strictly increasing ndof."""

    def __init__(self, frame: pd.DataFrame, name: str = ''):
        if 'ndof' not in frame.columns:
            raise ValueError("history needs an 'ndof' column")
        ndof = frame['ndof'].to_numpy()
        if len(ndof) > 1 and not np.all(np.diff(ndof) > 0):
            raise ValueError("ndof must be strictly increasing along the history")
        self.frame = frame.reset_index(drop=True)
        self.name = name

    @classmethod
    def from_rows(cls, rows: Iterable[dict], name: str = '') -> 'History':
        return cls(pd.DataFrame(list(rows)), name)

    @classmethod
    def read_csv(cls, path) -> 'History':
        path = Path(path)
        return cls(pd.read_csv(path), path.stem)

    def __len__(self) -> int:
        return len(self.frame)

    def column(self, name: str) -> np.ndarray:
        return self.frame[name].to_numpy(dtype=float)

    @property
    def last(self) -> pd.Series:
        return self.frame.iloc[-1]


def rate(history: History, column: str, window: int = RATE_WINDOW) -> Optional[float]:
    """Least-squares decay rate of `column` against ndof over the last `window` levels.

    Returns -slope of log(column) vs log(ndof), or None when the column has
    non-positive or missing values in the window.
    """
    if len(history) < 2:
        raise ValueError("a rate needs at least 2 levels")
    tail = history.frame.tail(window)
    values = tail[column].to_numpy(dtype=float)
    if not np.all(np.isfinite(values)) or np.any(values <= 0.0):
        print(f"  ⚠️  {column}: non-positive values in the last {len(tail)} levels, skipped")
        return None
    ndof = tail['ndof'].to_numpy(dtype=float)
    slope, _ = np.polyfit(np.log(ndof), np.log(values), 1)
    return float(-slope)


def rates(history: History, columns: Iterable[str] = RATE_COLUMNS, window: int = RATE_WINDOW) -> dict:
    return {c: rate(history, c, window) for c in columns if c in history.frame.columns}


def aitken(values) -> float:
    """Aitken delta^2 extrapolation from the last three values."""
    x = np.asarray(values, dtype=float)
    if len(x) < 3:
        raise ValueError("Aitken extrapolation needs at least 3 values")
    x0, x1, x2 = x[-3:]
    denominator = x2 - 2.0 * x1 + x0
    if abs(denominator) <= AITKEN_TOL * max(abs(x0), abs(x1), abs(x2)):
        print("  ⚠️  Aitken denominator vanishes; returning the last value")
        return float(x2)
    return float(x2 - (x2 - x1) ** 2 / denominator)


def rate_report(history: History, window: int = RATE_WINDOW) -> str:
    lines = [f"# empirical rates vs ndof, least squares over the last {window} levels",
             f"# run: {history.name or '-'}  levels: {len(history)}  finest ndof: {int(history.last['ndof'])}"]
    for column, value in rates(history, window=window).items():
        lines.append(f"{column:<12} {'skipped' if value is None else f'{value:.4f}'}")
    return "\n".join(lines) + "\n"


def summary_table(histories: Iterable[History]) -> pd.DataFrame:
    """Rows beta (Aitken of beta_h), beta0_hat, beta0, rho_uq, rho_ex; one column per run."""
    columns = {}
    for h in histories:
        beta_h = h.column('beta_h')
        beta_h = beta_h[np.isfinite(beta_h)]
        beta = aitken(beta_h) if len(beta_h) >= 3 else (beta_h[-1] if len(beta_h) else math.nan)
        last = h.last
        columns[h.name or f"run{len(columns)}"] = [beta, last['beta0_hat'], last['beta0'], last['rho_uq'],
                                                   last['rho_ex']]
    return pd.DataFrame(columns, index=list(SUMMARY_ROWS))


def format_summary(table: pd.DataFrame) -> str:
    return table.to_string(float_format=lambda x: f"{x:.7f}") + "\n"
