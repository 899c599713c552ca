"""
Benchmark runner: drives a refinement history and writes its outputs.

Output layout under <output_dir>/<run_name>/:
    history.csv            one row per level
    history.dat            the same columns, whitespace separated, '#' header (gnuplot)
    certificates/level_XX.txt
    rates.txt
    matrices/level_XX_<name>.coo   only with export_matrices
The run log goes to <LOG_DIR>/<benchmark>_<strategy>_<timestamp>.log.
"""

import time
from datetime import datetime
from pathlib import Path

import pandas as pd

from .assembly import export_coo, gamma_gram, linearised_matrix
from .benchmarks import BenchmarkConfig
from .config import DENSE_LIMIT, LOG_DIR
from .errors import StreamVerifyError
from .mesh import save_mesh
from .report import History, rate_report
from .solve import LevelRecord, RefinementStrategy, drive


class RunLog:
    """Console lines mirrored into the run log."""

    def __init__(self, path: Path, echo: bool = True):
        self.path = path
        self.echo = echo
        self.lines = []

    def __call__(self, line: str = ''):
        self.lines.append(line)
        if self.echo:
            print(line)

    def save(self) -> Path:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text("\n".join(self.lines) + "\n")
        return self.path


def _status_line(record: LevelRecord) -> str:
    c = record.certificate
    icon = '✓' if c.verified else ('❌' if c.reason and 'singular' in c.reason else '⚠️ ')
    line = (f"  {icon} level {record.level:2d}  ndof={c.ndof:<8d} error={record.error:.3e}  "
            f"beta_h={c.beta_h:.7f}  kappa={c.kappa:.3e}  mu_hat={c.mu_hat:.3e}")
    if c.verified:
        line += f"  beta0={c.beta0:.7f}  rho_ex={c.rho_ex:.3e}"
    else:
        line += f"  ({c.reason})"
    return line


def _write_history(rows: list, out_dir: Path):
    frame = pd.DataFrame(rows)
    frame.to_csv(out_dir / 'history.csv', index=False, float_format='%.17g')
    with open(out_dir / 'history.dat', 'w') as f:
        f.write('# ' + ' '.join(frame.columns) + '\n')
        frame.to_csv(f, sep=' ', index=False, header=False, float_format='%.17g')
    return frame


def run(config: BenchmarkConfig) -> int:
    """Run one benchmark history; returns the process exit code."""
    strategy = RefinementStrategy.parse(config.strategy)
    stamp = datetime.now().strftime('%Y%m%d_%H%M%S')
    log = RunLog(Path(LOG_DIR) / f"{config.benchmark}_{strategy.value}_{stamp}.log", echo=config.verbose)
    out_dir = config.output_dir / config.run_name
    (out_dir / 'certificates').mkdir(parents=True, exist_ok=True)

    log("=" * 60)
    log(f"STREAM VERIFY - {config.benchmark}")
    log("=" * 60)
    log(f"  lambda:     {config.lam:g}")
    log(f"  refinement: {strategy.value} (theta = {config.theta})")
    log(f"  max ndof:   {config.max_ndof}")
    log(f"  tol_eig:    {config.tol_eig:g}   tol_eig_J: {config.tol_eig_J:g}")
    log(f"  output:     {out_dir}")
    log(f"  date:       {datetime.now().isoformat()}")
    log()

    rows = []
    start = time.time()

    def on_level(record: LevelRecord, grams):
        rows.append(record.row())
        (out_dir / 'certificates' / f"level_{record.level:02d}.txt").write_text(record.certificate.to_text())
        if config.export_matrices and grams.ndof <= DENSE_LIMIT:
            _export_level(record, grams, out_dir / 'matrices')
        _write_history(rows, out_dir)
        log(_status_line(record))

    try:
        benchmark = config.build()
        history = drive(benchmark, strategy, config.max_ndof, config.theta, config.tol_eig, config.tol_eig_J,
                        verbose=config.verbose, on_level=on_level)
    except StreamVerifyError as e:
        log(f"\n❌ {type(e).__name__}: {e}")
        log.save()
        return 1

    if len(history) >= 2:
        report = rate_report(History.from_rows(rows, config.run_name))
        (out_dir / 'rates.txt').write_text(report)
    else:
        report = "# fewer than 2 levels, no rates\n"

    verified = sum(r.certificate.verified for r in history)
    log()
    log("=" * 60)
    log("RUN COMPLETE")
    log("=" * 60)
    log(f"\n✅ Levels: {len(history)}   verified: {verified}/{len(history)}")
    log(f"⏱️  Total time: {(time.time() - start) / 60:.1f} minutes")
    if history:
        last = history[-1].certificate
        log(f"📊 Finest level: ndof={last.ndof}  beta0_hat={last.beta0_hat:.7f}  "
            f"beta0={last.beta0:.7f}  rho_ex={last.rho_ex:.7f}  rho_uq={last.rho_uq:.7f}")
    log()
    log(report.rstrip())
    log(f"\n📝 Log saved to: {log.path}")
    log.save()
    return 0


def _export_level(record: LevelRecord, grams, directory: Path):
    directory.mkdir(parents=True, exist_ok=True)
    prefix = directory / f"level_{record.level:02d}"
    Jv = grams.smooth(record.v)
    matrices = {
        'A_nc': grams.A_nc,
        'A_J': grams.A_J,
        'B_J': grams.B_J,
        'D': linearised_matrix(Jv, grams),
        'B_gamma': gamma_gram(record.v, grams, Jv),
    }
    for name, matrix in matrices.items():
        export_coo(matrix, f"{prefix}_{name}.coo")
    save_mesh(record.mesh, f"{prefix}_mesh.txt")
    Path(f"{prefix}_state.txt").write_text("\n".join(repr(float(x)) for x in record.v.coef) + "\n")
