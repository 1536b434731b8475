#!/usr/bin/env python3
"""
Command-line interface for the coupled pendula workbench
"""
import argparse
import logging
import sys

from pendula import __version__
from pendula.config import LOG_LEVEL
from pendula.errors import PendulaError
from pendula.scenario import ScenarioConfig
from pendula.workbench import PendulaWorkbench


def print_banner(title):
    print(f"\n{'=' * 70}")
    print(title)
    print(f"{'=' * 70}")


def print_warnings(warnings):
    for message in warnings:
        print(f"  ! {message}")


def print_files(files):
    for path in files:
        print(f"✓ Wrote {path}")


def print_spectrum(report):
    """Print graph facts in a readable format"""
    print_banner(f"GRAPH {report['graph']}: {report['n']} nodes, {report['edges']} edges")

    print("\nLaplacian eigenvalues:")
    print("  " + ", ".join(f"{v:.6g}" for v in report['eigenvalues']))
    print(f"\nEdge-connectivity: {report['edge_connectivity']}")

    print("\nSign eigenvectors:")
    if not report['sign_vectors']:
        print("  none")
    for v in report['sign_vectors']:
        kind = 'bivalent' if v.is_bivalent else 'trivalent'
        print(f"  {v.entries}  lambda = {v.eigenvalue}  ({kind})")

    print("\nCritical couplings of the origin:")
    if not report['critical_couplings']:
        print("  none (no negative c10 / c01)")
    for cc in report['critical_couplings']:
        print(f"  kappa = {cc.kappa:.6g}  (lambda = {cc.eigenvalue:.6g}, {cc.branch}, multiplicity {cc.multiplicity})")

    if report['intervals']:
        print("\nBifurcation intervals:")
        for iv in report['intervals']:
            print(f"  {iv.branch}: bound [{iv.lower:.6g}, {iv.upper:.6g}] (guaranteed up to {iv.guaranteed_upper:.6g})  "
                  f"spectral range [{iv.spectral_lower:.6g}, {iv.spectral_upper:.6g}]")
    print_warnings(report['warnings'])
    print()


def spectrum_command(args, workbench):
    """Handle spectrum command"""
    print_spectrum(workbench.spectrum_report())


def partitions_command(args, workbench):
    """Handle partitions command"""
    report = workbench.partitions_report()
    print_banner(f"ANTI-SYNCHRONY PATTERNS OF {report['graph']}")
    if not report['entries']:
        print("\nNo bivalent or trivalent eigenvectors.")
    for entry in report['entries']:
        v = entry['vector']
        print(f"\n  v = {v.entries}  lambda = {v.eigenvalue}")
        print(f"    partition {entry['partition'].describe()}")
        if entry['counts'] is not None:
            d_pm, d_0 = entry['counts']
            print(f"    d_pm = {d_pm}, d_0 = {d_0}  ✓ odd-balanced")
        else:
            print(f"    ✗ not odd-balanced: {entry['odd_balanced'].message}")
    if report['enumerated'] is not None:
        print(f"\nBrute-force single-letter odd-balanced partitions: {len(report['enumerated'])}")
        for pattern, partition in report['enumerated']:
            print(f"  {pattern}  {partition.describe()}")
    print()


def simulate_command(args, workbench):
    """Handle simulate command"""
    summary = workbench.simulate()
    print_banner(f"SIMULATION {workbench.config.graph}, kappa = {summary['kappa']:g}, T = {workbench.config.T:g}")
    print(f"  Samples:           {summary['samples']}")
    print(f"  Initial energy H:  {summary['initial_energy']:.6f}")
    print(f"  Energy drift:      {summary['energy_drift']:.3e}")
    print(f"  max |q_i|:         {summary['max_abs_q']:.6f}")
    if summary['certificate'] is not None:
        verdict = "bounded (H <= 2 - N)" if summary['certificate'] else "not certified"
        print(f"  Certificate:       {verdict}")
    if 'com_residual' in summary:
        _print_com(summary)
    print_warnings(summary['warnings'])
    print_files(summary['files'] + summary.get('com_files', []))
    print()


def _print_com(summary):
    print(f"  COM residual:      {summary['com_residual']:.3e}")
    if summary['dominant_frequency'] is not None:
        print(f"  COM frequency:     {summary['dominant_frequency']:.6f}")
    else:
        print("  COM frequency:     none (no oscillation)")


def com_command(args, workbench):
    """Handle com command"""
    summary = workbench.com()
    print_banner(f"CENTRE OF MASS {workbench.config.graph}, kappa = {summary['kappa']:g}")
    print(f"  Energy drift:      {summary['energy_drift']:.3e}")
    _print_com(summary)
    print_files(summary['files'] + summary['com_files'])
    print()


def lyapunov_command(args, workbench):
    """Handle lyapunov command"""
    report = workbench.lyapunov()
    result = report['result']
    print_banner(f"LYAPUNOV SPECTRUM {workbench.config.graph}, kappa = {workbench.config.kappa:g}, "
                 f"T = {result.T_total:g}")
    print("  " + ", ".join(f"{x:+.3e}" for x in result.exponents))
    print(f"  Sum: {result.exponent_sum:+.3e}   pairing error: {result.pairing_error:.3e}")
    print(f"  Verdict: {result.verdict}")
    print_warnings(result.warnings)
    print_files(report['files'])
    print()


def table1_command(args, workbench):
    """Handle table1 command"""
    report = workbench.table1()
    print_banner(f"LYAPUNOV TABLE (T = {workbench.config.lyapunov_T:g})")
    print(f"  {'row':<15} {'E':>8} {'E ref':>7} {'max lambda':>11}  verdict   reference")
    for row in report['rows']:
        mark = "✓" if row['verdict'] == row['reference_regime'] else "✗"
        print(f"  {row['label']:<15} {row['energy']:8.4f} {row['reference_energy']:7.2f} "
              f"{row['max_exponent']:11.3e}  {row['verdict']:<8}  {row['reference_regime']:<8} {mark}")
    print(f"\n  {report['matches']}/{len(report['rows'])} regimes match the reference classification")
    print_warnings(report['warnings'])
    print_files(report['files'])
    print()


def scan_command(args, workbench):
    """Handle scan command"""
    report = workbench.scan()
    print_banner(f"PITCHFORK SCAN {workbench.config.graph}, kappa in {workbench.config.kappa_range}")
    for item in report['results']:
        v = item['vector']
        rs = item['reduced']
        print(f"\n  v = {v.entries}  lambda = {v.eigenvalue}  (d_pm = {rs.d_pm}, d_0 = {rs.d_0})")
        if not item['diagram'].bifurcations:
            print("    no pitchfork detected on the grid")
        for point in item['diagram'].bifurcations:
            print(f"    {point.axis}-axis pitchfork at kappa = {point.kappa:.6g} (predicted {point.predicted:.6g})")
            nd = point.nondegeneracy
            if nd is not None:
                print(f"      d3/ds3 = {nd.third_derivative:.6g} (closed form {nd.third_derivative_closed:.6g}), "
                      f"d2/dkappa ds = {nd.mixed_derivative:.6g} (closed form {nd.mixed_derivative_closed:.6g})")
        stable = item['stability'].stable
        print(f"    transversally stable cells: {int(stable.sum())}/{stable.size}")
    print_warnings(report['warnings'])
    print_files(report['files'])
    print()


def levelset_command(args, workbench):
    """Handle levelset command"""
    report = workbench.levelset()
    result = report['result']
    cfg = workbench.config
    print_banner(f"DOUBLE CUSP a = {cfg.a:g}, alpha = {cfg.alpha:g}, beta = {cfg.beta:g}")
    print(f"\n  Critical points ({len(result.critical_points)}):")
    for p in result.critical_points:
        print(f"    ({p.x:+.6f}, {p.y:+.6f})  F = {p.value:+.6f}  {p.kind}")
    print_warnings(result.warnings)
    print_files(report['files'])
    print()


COMMANDS = {
    'spectrum': spectrum_command,
    'partitions': partitions_command,
    'simulate': simulate_command,
    'lyapunov': lyapunov_command,
    'table1': table1_command,
    'scan': scan_command,
    'com': com_command,
    'levelset': levelset_command,
}


def build_parser():
    parser = argparse.ArgumentParser(
        description='Coupled pendula network workbench',
        formatter_class=argparse.RawDescriptionHelpFormatter
    )
    parser.add_argument('--version', action='version', version=f'pendula {__version__}')

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='Scenario file with key = value lines')
    common.add_argument('--graph', help='path:N, cycle:N, complete:N, star:N, random:N:p:seed or an edge-list file')
    common.add_argument('--potential', help='double-well, harmonic or a file of "l m c_lm" lines')
    common.add_argument('--kappa', help='Coupling strength (fractions like 1/5 allowed)')
    common.add_argument('--kappa-range', dest='kappa_range', help='Coupling grid start:stop:count')
    common.add_argument('--ic', help='Initial condition q1..qN,p1..pN (comma separated)')
    common.add_argument('--T', dest='T',
                        help='Integration time (also the Lyapunov time when --lyapunov-T is not given)')
    common.add_argument('--lyapunov-T', dest='lyapunov_T', help='Lyapunov integration time')
    common.add_argument('--tol', help='Absolute and relative integrator tolerance')
    common.add_argument('--method', choices=['rk45', 'rk4'], help='Integrator')
    common.add_argument('--out', help='Output directory')
    common.add_argument('--jobs', help='Worker processes for table1 and scan')
    common.add_argument('--seed', help='Seed for random initial conditions')

    subparsers = parser.add_subparsers(dest='command', help='Available commands')

    subparsers.add_parser('spectrum', parents=[common], help='Laplacian spectrum, connectivity, critical couplings')
    subparsers.add_parser('partitions', parents=[common], help='Sign eigenvectors and odd-balanced partitions')
    simulate_parser = subparsers.add_parser('simulate', parents=[common], help='Integrate a scenario')
    simulate_parser.add_argument('--com', action='store_const', const='true', default=None,
                                 help='Also write centre-of-mass series and spectrum')
    subparsers.add_parser('lyapunov', parents=[common], help='Lyapunov spectrum of a scenario')
    subparsers.add_parser('table1', parents=[common], help='Reproduce the seven-row Lyapunov table')
    scan_parser = subparsers.add_parser('scan', parents=[common], help='Pitchfork branches and transversal stability')
    scan_parser.add_argument('--x-range', dest='x_range', help='Transversal map x grid start:stop:count')
    scan_parser.add_argument('--sign-vector', dest='sign_vector', help='Restrict to one sign vector, e.g. -1,0,1')
    subparsers.add_parser('com', parents=[common], help='Centre-of-mass frequency analysis')
    levelset_parser = subparsers.add_parser('levelset', parents=[common], help='Double cusp level sets')
    levelset_parser.add_argument('--a', help='x^2 y^2 coefficient')
    levelset_parser.add_argument('--alpha', help='x^2 coefficient')
    levelset_parser.add_argument('--beta', help='y^2 coefficient')
    levelset_parser.add_argument('--level', help='Level c for the sign pattern')
    levelset_parser.add_argument('--grid', help='Grid start:stop:count on both axes')
    return parser


OVERRIDE_KEYS = ('graph', 'potential', 'kappa', 'kappa_range', 'ic', 'T', 'lyapunov_T', 'tol', 'method',
                 'out', 'jobs', 'seed', 'com', 'x_range', 'sign_vector', 'a', 'alpha', 'beta', 'level', 'grid')

# Commands whose horizon is lyapunov_T; a bare --T sets it
LYAPUNOV_COMMANDS = ('lyapunov', 'table1')


def main(argv=None):
    """Main CLI entry point"""
    logging.basicConfig(level=LOG_LEVEL, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return 0

    try:
        overrides = {key: getattr(args, key, None) for key in OVERRIDE_KEYS}
        if args.command in LYAPUNOV_COMMANDS and overrides['lyapunov_T'] is None:
            overrides['lyapunov_T'] = overrides['T']
        config = ScenarioConfig.load(args.config, overrides)
        COMMANDS[args.command](args, PendulaWorkbench(config))
    except PendulaError as e:
        print(f"Error: {e}", file=sys.stderr)
        return e.exit_code
    return 0


if __name__ == '__main__':
    sys.exit(main())
