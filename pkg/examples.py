#!/usr/bin/env python3
"""
Example usage of the coupled pendula workbench
"""
import tempfile

from pendula.scenario import LYAPUNOV_TABLE, ScenarioConfig
from pendula.workbench import PendulaWorkbench


def example_workflow():
    """Walk through one graph: spectrum, patterns, simulation and a pitchfork scan"""

    print("=" * 80)
    print("COUPLED PENDULA - EXAMPLE WORKFLOW")
    print("=" * 80)

    out_dir = tempfile.mkdtemp(prefix='pendula-')
    config = ScenarioConfig(graph='complete:3', kappa=1 / 8, ic='1/5,1/7,1/10,0,0,0', T=200.0,
                            kappa_range='0.1:0.3:41', x_range='-1:1:21', out=out_dir)
    workbench = PendulaWorkbench(config)

    print("\n1. GRAPH SPECTRUM")
    print("-" * 80)
    report = workbench.spectrum_report()
    print(f"Eigenvalues: {', '.join(f'{v:.4g}' for v in report['eigenvalues'])}")
    print(f"Edge-connectivity: {report['edge_connectivity']}")
    for cc in report['critical_couplings']:
        print(f"Critical coupling: kappa = {cc.kappa:.6g} (lambda = {cc.eigenvalue:.4g}, multiplicity {cc.multiplicity})")

    print("\n2. ANTI-SYNCHRONY PATTERNS")
    print("-" * 80)
    for entry in workbench.partitions_report()['entries']:
        v = entry['vector']
        if entry['counts'] is not None:
            d_pm, d_0 = entry['counts']
            print(f"  v = {v.entries}: {entry['partition'].describe()}  d_pm = {d_pm}, d_0 = {d_0}")
        else:
            print(f"  v = {v.entries}: not odd-balanced")

    print("\n3. SIMULATION")
    print("-" * 80)
    summary = workbench.simulate(with_com=True)
    print(f"Initial energy: {summary['initial_energy']:.4f}")
    print(f"Energy drift:   {summary['energy_drift']:.2e}")
    print(f"Bounded motion certified: {summary['certificate']}")
    if summary['dominant_frequency'] is not None:
        print(f"Centre-of-mass frequency: {summary['dominant_frequency']:.4f}")

    print("\n4. PITCHFORK SCAN")
    print("-" * 80)
    scan = workbench.scan()
    for item in scan['results']:
        for point in item['diagram'].bifurcations:
            print(f"  v = {item['vector'].entries}: {point.axis}-axis pitchfork at kappa = {point.kappa:.4g} "
                  f"(predicted {point.predicted:.4g})")

    print(f"\nFiles written to {out_dir}:")
    for path in workbench.recorder.written:
        print(f"  ✓ {path}")

    print("\n" + "=" * 80)
    print("EXAMPLE COMPLETE")
    print("=" * 80)


def regimes_example():
    """Short Lyapunov runs on two rows of the published table"""

    print("\n" + "=" * 80)
    print("REGULAR VERSUS CHAOTIC")
    print("=" * 80)

    workbench = PendulaWorkbench(ScenarioConfig(out=tempfile.mkdtemp(prefix='pendula-')))
    report = workbench.table1(rows=[LYAPUNOV_TABLE[0], LYAPUNOV_TABLE[1]], T=2000.0)

    for row in report['rows']:
        print(f"\n{row['label']}")
        print("-" * 80)
        print(f"  Energy: {row['energy']:.4f} (published {row['reference_energy']:.2f})")
        print(f"  Max exponent: {row['max_exponent']:.3e} -> {row['verdict']} (published {row['reference_regime']})")

    print(f"\n{'=' * 80}")
    print(f"SUMMARY: {report['matches']} of {len(report['rows'])} regimes match at T = 2000")
    print(f"{'=' * 80}")


if __name__ == '__main__':
    example_workflow()
    print("\n" * 2)
    regimes_example()
