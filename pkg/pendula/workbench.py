"""
Main workbench: runs scenarios and writes their artefacts
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Dict, Iterable, List, Optional

import numpy as np

from pendula.analysis import (
    bifurcation_interval,
    centre_of_mass,
    com_residual,
    com_spectrum,
    critical_couplings,
    dominant_frequency,
    lyapunov_spectrum,
)
from pendula.config import CHAOS_THRESHOLD
from pendula.dynamics import (
    CoupledSystem,
    bounded_motion_certificate,
    double_well,
    hamiltonian,
    potential_warnings,
    state_from_values,
)
from pendula.errors import DomainError, NoOscillationError
from pendula.graph_core import (
    edge_connectivity,
    enumerate_single_letter_partitions,
    find_sign_eigenvectors,
    graph_from_spec,
    is_connected,
    partition_counts,
    sign_vector_from_entries,
    sign_vector_to_partition,
    spectrum,
    verify_odd_balanced,
)
from pendula.integrator import IntegratorConfig, integrate
from pendula.output import RunRecorder
from pendula.reduced_bifurcation import (
    detect_pitchfork,
    double_cusp_levelset,
    reduce,
    transversal_stability_map,
)
from pendula.scenario import LYAPUNOV_TABLE, LyapunovTableRow, ScenarioConfig, parse_vector

logger = logging.getLogger(__name__)

# Partition enumeration is brute force over 3^n patterns
PARTITION_ENUMERATION_MAX_N = 8


def run_tasks(fn: Callable, items: Iterable, jobs: int = 1) -> List:
    """
    Map fn over items, in order. jobs > 1 uses a process pool.

    Results come back in input order either way, so outputs do not depend on jobs.
    """
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
        return list(pool.map(fn, items))


def lyapunov_row_task(args) -> Dict:
    """Worker for one Lyapunov table row: (row, T, reorth_period, integrator config)."""
    row, T, reorth_period, cfg = args
    sys = CoupledSystem(graph_from_spec(row.graph), double_well(), row.kappa)
    s0 = state_from_values(sys, row.ic)
    result = lyapunov_spectrum(sys, s0, T=T, reorth_period=reorth_period, cfg=cfg)
    return {
        'label': row.label,
        'energy': hamiltonian(sys, s0),
        'reference_energy': row.energy,
        'reference_regime': row.regime,
        'exponents': result.exponents,
        'max_exponent': result.max_exponent,
        'verdict': result.verdict,
        'pairing_error': result.pairing_error,
        'exponent_sum': result.exponent_sum,
        'energy_drift': result.energy_drift,
        'warnings': result.warnings,
    }


def _scan_task(args) -> Dict:
    sys, entries, kappas, xs = args
    v = sign_vector_from_entries(sys.graph, entries)
    rs = reduce(sys, v)
    diagram = detect_pitchfork(rs, kappas)
    stability = transversal_stability_map(sys, v, xs, kappas)
    return {'vector': v, 'reduced': rs, 'diagram': diagram, 'stability': stability}


class PendulaWorkbench:
    """Workbench orchestrator: one scenario, one output directory"""

    def __init__(self, config: Optional[ScenarioConfig] = None, recorder: Optional[RunRecorder] = None):
        self.config = config or ScenarioConfig()
        self._recorder = recorder

    @property
    def recorder(self) -> RunRecorder:
        if self._recorder is None:
            self._recorder = RunRecorder(self.config.out, self.config.as_metadata())
        return self._recorder

    def _metadata(self, cfg: IntegratorConfig, warnings: Iterable[str] = ()) -> Dict[str, object]:
        meta = cfg.as_metadata()
        meta['warnings'] = list(warnings)
        return meta

    # ------------------------------------------------------------------
    # Graph facts
    # ------------------------------------------------------------------

    def spectrum_report(self) -> Dict:
        """
        Laplacian spectrum, edge-connectivity, sign eigenvectors, critical couplings and intervals.

        Returns:
            Report dictionary (no files written)
        """
        g = graph_from_spec(self.config.graph)
        sys = self.config.build_system()
        spec = spectrum(g)
        report = {
            'graph': self.config.graph,
            'n': g.n,
            'edges': len(g.edges),
            'eigenvalues': spec.eigenvalues,
            'edge_connectivity': edge_connectivity(g),
            'connected': is_connected(g),
            'sign_vectors': find_sign_eigenvectors(g),
            'critical_couplings': critical_couplings(sys),
            'intervals': [],
            'warnings': list(potential_warnings(sys.potential)),
        }
        if report['connected'] and g.n >= 2:
            report['intervals'] = bifurcation_interval(sys)
            for iv in report['intervals']:
                if iv.exceeds_stated:
                    report['warnings'].append(
                        f"{iv.branch}: largest critical coupling {iv.spectral_upper:.6g} exceeds the N/(2 kappa') "
                        f"bound {iv.upper:.6g}; the edge-connectivity bound {iv.guaranteed_upper:.6g} still holds")
        else:
            report['warnings'].append("graph is disconnected: no bifurcation interval")
        return report

    def partitions_report(self) -> Dict:
        """Sign eigenvectors with their partitions, counts and odd-balanced verdicts."""
        g = graph_from_spec(self.config.graph)
        entries = []
        for v in find_sign_eigenvectors(g):
            partition = sign_vector_to_partition(v)
            odd_balanced = verify_odd_balanced(g, partition)
            entries.append({
                'vector': v,
                'partition': partition,
                'counts': partition_counts(v, g) if odd_balanced else None,
                'odd_balanced': odd_balanced,
            })
        report = {'graph': self.config.graph, 'n': g.n, 'entries': entries, 'enumerated': None}
        if g.n <= PARTITION_ENUMERATION_MAX_N:
            report['enumerated'] = enumerate_single_letter_partitions(g, max_n=PARTITION_ENUMERATION_MAX_N)
        return report

    # ------------------------------------------------------------------
    # Time integration
    # ------------------------------------------------------------------

    def simulate(self, with_com: Optional[bool] = None) -> Dict:
        """
        Integrate the scenario, write trajectory CSV and SVG (and COM CSVs on request).

        Returns:
            Summary dictionary with energy drift, bounded-motion certificate and file paths
        """
        cfg = self.config.integrator_config()
        sys = self.config.build_system()
        s0 = self.config.initial_state(sys)
        traj = integrate(sys, s0, self.config.T, cfg)
        warnings = list(potential_warnings(sys.potential))
        files = [self.recorder.write_trajectory(traj, extra_metadata=self._metadata(cfg, warnings))]
        files.append(self.recorder.write_svg(
            'trajectory.svg',
            [(f'q{i + 1}', traj.times, traj.q[:, i]) for i in range(sys.n)],
            title=f"{self.config.graph}, kappa = {sys.kappa:g}", xlabel='t', ylabel='q_i',
        ))
        summary = {
            'n': sys.n,
            'kappa': sys.kappa,
            'samples': len(traj),
            'initial_energy': float(traj.energies[0]),
            'energy_drift': traj.energy_drift,
            'max_abs_q': float(np.max(np.abs(traj.q))),
            'certificate': bounded_motion_certificate(sys, s0) if sys.n >= 2 else None,
            'trajectory': traj,
            'warnings': warnings,
            'files': files,
        }
        if with_com if with_com is not None else self.config.com:
            summary.update(self._com_outputs(traj))
        return summary

    def _com_outputs(self, traj) -> Dict:
        series = centre_of_mass(traj)
        files = [self.recorder.write_com_series(series)]
        omegas, amplitudes = com_spectrum(series)
        result = {'com_residual': com_residual(series), 'dominant_frequency': None}
        try:
            result['dominant_frequency'] = dominant_frequency(series)
        except (NoOscillationError, DomainError) as e:
            logger.warning("no dominant frequency: %s", e)
        files.append(self.recorder.write_com_spectrum(omegas, amplitudes, extra_metadata={
            'dominant_frequency': result['dominant_frequency'] if result['dominant_frequency'] is not None else 'none',
        }))
        result['com_files'] = files
        return result

    def com(self) -> Dict:
        """Simulate and analyse the centre of mass."""
        return self.simulate(with_com=True)

    def lyapunov(self) -> Dict:
        cfg = self.config.integrator_config()
        sys = self.config.build_system()
        s0 = self.config.initial_state(sys)
        result = lyapunov_spectrum(sys, s0, T=self.config.lyapunov_T, reorth_period=self.config.reorth_period, cfg=cfg)
        path = self.recorder.write_lyapunov(result, extra_metadata=cfg.as_metadata())
        return {'result': result, 'files': [path], 'warnings': result.warnings}

    def table1(self, rows: Optional[List[LyapunovTableRow]] = None, T: Optional[float] = None) -> Dict:
        """
        Reproduce the published Lyapunov table with magnitude-class verdicts.

        Rows run as independent tasks; order and content do not depend on jobs.
        """
        rows = rows if rows is not None else LYAPUNOV_TABLE
        T = T if T is not None else self.config.lyapunov_T
        cfg = self.config.integrator_config()
        tasks = [(row, T, self.config.reorth_period, cfg) for row in rows]
        results = run_tasks(lyapunov_row_task, tasks, self.config.jobs)
        header = ['row', 'energy', 'reference_energy', 'max_exponent', 'verdict', 'reference_regime',
                  'pairing_error', 'exponent_sum', 'energy_drift']
        table = [[r['label'], r['energy'], r['reference_energy'], r['max_exponent'], r['verdict'],
                  r['reference_regime'], r['pairing_error'], r['exponent_sum'], r['energy_drift']] for r in results]
        warnings = [f"{r['label']}: {w}" for r in results for w in r['warnings']]
        meta = cfg.as_metadata()
        meta.update({'T': T, 'reorth_period': self.config.reorth_period, 'chaos_threshold': CHAOS_THRESHOLD,
                     'warnings': warnings})
        path = self.recorder.write_csv('table1.csv', header, table, meta)
        matches = sum(1 for r in results if r['verdict'] == r['reference_regime'])
        return {'rows': results, 'matches': matches, 'files': [path], 'warnings': warnings}

    # ------------------------------------------------------------------
    # Bifurcations and level sets
    # ------------------------------------------------------------------

    def scan(self) -> Dict:
        """
        Branch diagrams and transversal stability maps for each sign eigenvector over the kappa grid.
        """
        sys = self.config.build_system()
        kappas = self.config.kappas
        if kappas.size < 2:
            raise DomainError("scan needs a kappa grid (--kappa-range start:stop:count)")
        if self.config.sign_vector:
            vectors = [sign_vector_from_entries(sys.graph, [int(x) for x in parse_vector(self.config.sign_vector)])]
        else:
            vectors = find_sign_eigenvectors(sys.graph)
        warnings = []
        invariant = []
        for v in vectors:
            report = verify_odd_balanced(sys.graph, sign_vector_to_partition(v))
            if report:
                invariant.append(v)
            else:
                warnings.append(f"sign vector {v.entries} skipped: its partition is not odd-balanced ({report.message})")
        vectors = invariant
        if not vectors:
            raise DomainError(f"graph {self.config.graph} has no sign eigenvector with an invariant subspace")
        tasks = [(sys, v.entries, kappas, self.config.xs) for v in vectors]
        results = run_tasks(_scan_task, tasks, self.config.jobs)
        files = []
        for k, item in enumerate(results, start=1):
            v = item['vector']
            meta = {'sign_vector': list(v.entries), 'eigenvalue': v.eigenvalue,
                    'd_pm': item['reduced'].d_pm, 'd_0': item['reduced'].d_0}
            files.append(self.recorder.write_branch_diagram(item['diagram'], f'branch_{k}.csv', meta))
            files.append(self.recorder.write_stability_map(item['stability'], f'stability_{k}.csv', meta))
            rows = item['diagram'].rows()
            files.append(self.recorder.write_svg(
                f'branch_{k}.svg',
                [(cls, np.array([r[0] for r in rows if r[3] == cls]), np.array([r[1] for r in rows if r[3] == cls]))
                 for cls in ('center', 'saddle') if any(r[3] == cls for r in rows)],
                title=f"equilibria along v = {v.entries}", xlabel='kappa', ylabel='x_eq',
            ))
            warnings.extend(item['diagram'].warnings)
        return {'results': results, 'files': files, 'warnings': warnings}

    def levelset(self) -> Dict:
        axis = self.config.grid_axis
        result = double_cusp_levelset(self.config.a, self.config.alpha, self.config.beta, axis, axis,
                                      level=self.config.level)
        path = self.recorder.write_levelset(result, extra_metadata={
            'a': self.config.a, 'alpha': self.config.alpha, 'beta': self.config.beta})
        return {'result': result, 'files': [path], 'warnings': result.warnings}
