"""
Run output: CSV files with metadata headers and minimal SVG polyline plots
"""
import logging
import os
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import matplotlib
import numpy as np

matplotlib.use('Agg')  # headless
import matplotlib.pyplot as plt  # noqa: E402

from pendula.config import OUTPUT_DIR  # noqa: E402

logger = logging.getLogger(__name__)

# Fixed ids and no timestamp, so reruns give identical SVG bytes; text stays text
SVG_RC = {'svg.hashsalt': 'pendula', 'svg.fonttype': 'none'}


def _literal(text: str) -> str:
    """Keep $ from switching matplotlib into mathtext."""
    return str(text).replace('$', r'\$')


def format_value(value) -> str:
    """repr-precision floats so identical runs give identical bytes."""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


class RunRecorder:
    """Write run artefacts into one output directory"""

    def __init__(self, out_dir: str = OUTPUT_DIR, metadata: Optional[Dict[str, object]] = None):
        self.out_dir = out_dir
        self.metadata = dict(metadata or {})
        self.written: List[str] = []
        os.makedirs(self.out_dir, exist_ok=True)

    def path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[object]],
                  extra_metadata: Optional[Dict[str, object]] = None) -> str:
        """
        Write a CSV preceded by ``# key: value`` metadata lines.

        Args:
            name: File name inside the output directory
            header: Column names
            rows: Row sequences
            extra_metadata: Per-file metadata appended after the run metadata

        Returns:
            Path of the written file
        """
        meta = dict(self.metadata)
        meta.update(extra_metadata or {})
        target = self.path(name)
        with open(target, 'w', encoding='utf-8', newline='\n') as fh:
            for key, value in meta.items():
                if isinstance(value, (list, tuple)):
                    value = "; ".join(format_value(v) for v in value) if value else "none"
                fh.write(f"# {key}: {format_value(value)}\n")
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(format_value(v) for v in row) + "\n")
        self.written.append(target)
        logger.debug("wrote %s", target)
        return target

    def write_svg(self, name: str, series: Sequence[Tuple[str, np.ndarray, np.ndarray]],
                  title: str = "", xlabel: str = "", ylabel: str = "") -> str:
        """
        Plot (label, xs, ys) series as polylines and save them as SVG.

        Returns:
            Path of the written file
        """
        target = self.path(name)
        with plt.rc_context(SVG_RC):
            fig, ax = plt.subplots(figsize=(6.4, 4.0))
            try:
                for label, x, y in series:
                    ax.plot(np.asarray(x, float), np.asarray(y, float), linewidth=1, label=_literal(label))
                ax.set_title(_literal(title))
                ax.set_xlabel(_literal(xlabel))
                ax.set_ylabel(_literal(ylabel))
                if series:
                    ax.legend(loc='upper right', fontsize='small')
                fig.savefig(target, format='svg', metadata={'Date': None})
            finally:
                plt.close(fig)
        self.written.append(target)
        logger.debug("wrote %s", target)
        return target

    # Typed writers ---------------------------------------------------------

    def write_trajectory(self, traj, name: str = 'trajectory.csv',
                         extra_metadata: Optional[Dict[str, object]] = None) -> str:
        n = traj.n
        header = ['t'] + [f'q{i}' for i in range(1, n + 1)] + [f'p{i}' for i in range(1, n + 1)] + ['H']
        rows = (
            [traj.times[k], *traj.q[k], *traj.p[k], traj.energies[k]] for k in range(len(traj))
        )
        meta = {'energy_drift': traj.energy_drift}
        meta.update(extra_metadata or {})
        return self.write_csv(name, header, rows, meta)

    def write_lyapunov(self, result, name: str = 'lyapunov.csv',
                       extra_metadata: Optional[Dict[str, object]] = None) -> str:
        dim = result.exponents.size
        header = ['checkpoint_time'] + [f'lambda_{k}' for k in range(1, dim + 1)]
        rows = [[t, *np.sort(est)[::-1]] for t, est in zip(result.history_times, result.history)]
        rows.append(['final', *result.exponents])
        meta = {
            'T': result.T_total,
            'reorth_period': result.reorth_period,
            'verdict': result.verdict,
            'energy_drift': result.energy_drift,
            'warnings': result.warnings,
        }
        meta.update(extra_metadata or {})
        return self.write_csv(name, header, rows, meta)

    def write_com_spectrum(self, omegas: np.ndarray, amplitudes: np.ndarray, name: str = 'com_spectrum.csv',
                           extra_metadata: Optional[Dict[str, object]] = None) -> str:
        return self.write_csv(name, ['omega', 'amplitude'], zip(omegas, amplitudes), extra_metadata)

    def write_com_series(self, series, name: str = 'com.csv') -> str:
        return self.write_csv(name, ['t', 'q_bar', 'p_bar'], zip(series.times, series.q_bar, series.p_bar))

    def write_branch_diagram(self, diagram, name: str = 'branch.csv',
                             extra_metadata: Optional[Dict[str, object]] = None) -> str:
        meta = {'warnings': diagram.warnings,
                'bifurcations': [f"{b.axis}@{b.kappa!r}" for b in diagram.bifurcations]}
        meta.update(extra_metadata or {})
        return self.write_csv(name, ['kappa', 'x_eq', 'y_eq', 'class'], diagram.rows(), meta)

    def write_stability_map(self, stability, name: str = 'stability.csv',
                            extra_metadata: Optional[Dict[str, object]] = None) -> str:
        return self.write_csv(name, ['x', 'kappa', 'stable'], stability.rows(), extra_metadata)

    def write_levelset(self, levelset, name: str = 'levelset.csv',
                       extra_metadata: Optional[Dict[str, object]] = None) -> str:
        meta = {'level': levelset.level, 'warnings': levelset.warnings,
                'critical_points': [f"({p.x!r},{p.y!r}) F={p.value!r} {p.kind}" for p in levelset.critical_points]}
        meta.update(extra_metadata or {})
        return self.write_csv(name, ['x', 'y', 'F'], levelset.rows(), meta)
