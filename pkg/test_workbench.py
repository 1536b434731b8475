#!/usr/bin/env python3
"""
Tests for scenario configuration, run output, the workbench commands and the CLI
"""
import os
import sys
import tempfile
from xml.etree import ElementTree

import numpy as np

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import pendula_cli
from pendula.errors import ConfigError, DomainError
from pendula.output import RunRecorder
from pendula.scenario import LYAPUNOV_TABLE, ScenarioConfig, parse_number, parse_range, parse_vector
from pendula.workbench import PendulaWorkbench, run_tasks


def read_lines(path):
    with open(path, 'r', encoding='utf-8') as fh:
        return fh.read().splitlines()


def data_lines(path):
    """CSV lines without the per-run output directory line"""
    return [line for line in read_lines(path) if not line.startswith('# out:')]


def test_parse_helpers():
    """Test numbers, vectors and ranges from scenario text"""
    print("Testing scenario parsing helpers...")

    assert parse_number('1/7') == 1 / 7
    assert parse_number(' 0.25 ') == 0.25
    assert parse_vector('1/5, 1/7 0,0') == (0.2, 1 / 7, 0.0, 0.0)
    assert np.allclose(parse_range('0:1:5'), [0, 0.25, 0.5, 0.75, 1.0])

    for call in (lambda: parse_number('abc'), lambda: parse_number('1/0'), lambda: parse_vector(' , '),
                 lambda: parse_range('0:1'), lambda: parse_range('1:0:5'), lambda: parse_range('0:1:x')):
        try:
            call()
            assert False, "bad scenario text should be rejected"
        except ConfigError:
            pass

    print("✓ Scenario parsing helpers work")


def test_scenario_file():
    """Test scenario files and command-line overrides"""
    print("Testing scenario files...")

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, 'k2.cfg')
        with open(path, 'w') as fh:
            fh.write("# K2 chaotic row\ngraph = path:3\nkappa = 1/2\nic = \"1/5, 1/10, 1/7, 0, 0, 0\"\n"
                     "lyapunov-T = 200\ncom = yes\n")
        config = ScenarioConfig.load(path, {'kappa': '0.3', 'T': None})
        assert config.graph == 'path:3'
        assert config.kappa == 0.3
        assert config.lyapunov_T == 200.0
        assert config.com is True
        sys_p3 = config.build_system()
        assert sys_p3.n == 3
        assert np.allclose(config.initial_state(sys_p3).q, [0.2, 0.1, 1 / 7])

        commented = os.path.join(tmp, 'commented.cfg')
        with open(commented, 'w') as fh:
            fh.write("graph = cycle:4   # square\nkappa = '1/8'\n")
        assert ScenarioConfig.load(commented).graph == 'cycle:4'
        assert ScenarioConfig.load(commented).kappa == 0.125

        with open(commented, 'a') as fh:
            fh.write("lonely-key\n")
        try:
            ScenarioConfig.load(commented)
            assert False, "line without a value should be rejected"
        except ConfigError:
            pass

        with open(path, 'a') as fh:
            fh.write("colour = blue\n")
        try:
            ScenarioConfig.load(path)
            assert False, "unknown key should be rejected"
        except ConfigError:
            pass

        try:
            ScenarioConfig.load(os.path.join(tmp, 'missing.cfg'))
            assert False, "missing file should be rejected"
        except ConfigError:
            pass

    try:
        ScenarioConfig.load(None, {'kappa': 'strong'})
        assert False, "bad number should be rejected"
    except ConfigError:
        pass

    print("✓ Scenario files work")


def test_config_hash():
    """Test the hash follows run content, not output location"""
    print("Testing config hash...")

    base = ScenarioConfig(graph='complete:2', kappa=0.2)
    assert base.config_hash() == ScenarioConfig(graph='complete:2', kappa=0.2).config_hash()
    assert base.config_hash() == base.updated(out='/tmp/elsewhere', jobs=4).config_hash()
    assert base.config_hash() != base.updated(kappa=0.5).config_hash()
    meta = base.as_metadata()
    assert meta['config_hash'] == base.config_hash()
    assert meta['tool'].startswith('pendula ')

    tol = base.updated(tol=1e-8).integrator_config()
    assert tol.abs_tol == tol.rel_tol == 1e-8

    seeded = base.initial_state(base.build_system())
    assert np.allclose(seeded.q, base.initial_state(base.build_system()).q)
    assert np.allclose(seeded.p, 0.0)

    print("✓ Config hash works")


def test_run_tasks():
    """Test task results keep input order with and without workers"""
    print("Testing task runner...")

    assert run_tasks(abs, [-1, 2, -3]) == [1, 2, 3]
    assert run_tasks(abs, [-1, 2, -3], jobs=2) == [1, 2, 3]
    assert run_tasks(abs, []) == []

    print("✓ Task runner works")


def test_simulate_outputs():
    """Test simulate writes deterministic CSV and SVG files"""
    print("Testing simulate outputs...")

    with tempfile.TemporaryDirectory() as tmp:
        outputs = []
        for name in ('first', 'second'):
            config = ScenarioConfig(graph='complete:2', kappa=0.2, ic='1/5,1/7,0,0', T=10.0,
                                    out=os.path.join(tmp, name))
            summary = PendulaWorkbench(config).simulate()
            assert summary['samples'] == 201
            assert summary['certificate'] is True
            assert abs(summary['initial_energy'] - (-1.9205)) < 1e-3
            assert all(os.path.exists(path) for path in summary['files'])
            outputs.append(summary['files'][0])

        first = data_lines(outputs[0])
        assert first == data_lines(outputs[1])
        assert any(line.startswith('# config_hash: ') for line in first)
        assert any(line.startswith('# energy_drift: ') for line in first)
        assert 't,q1,q2,p1,p2,H' in first
        assert len([line for line in first if not line.startswith('#')]) == 202

    print("✓ Simulate outputs work")


def test_com_outputs():
    """Test centre-of-mass files and frequency"""
    print("Testing centre-of-mass outputs...")

    with tempfile.TemporaryDirectory() as tmp:
        config = ScenarioConfig(graph='complete:3', kappa=0.3, ic='0.3,-0.1,0.2,0,0,0', T=60.0, out=tmp)
        summary = PendulaWorkbench(config).com()
        assert summary['com_residual'] <= 1e-4
        assert summary['dominant_frequency'] is not None
        assert 0.5 < summary['dominant_frequency'] < 1.5
        assert [os.path.basename(p) for p in summary['com_files']] == ['com.csv', 'com_spectrum.csv']

    print("✓ Centre-of-mass outputs work")


def test_svg_output():
    """Test SVG plots stay well-formed with markup characters in labels"""
    print("Testing SVG output...")

    with tempfile.TemporaryDirectory() as tmp:
        recorder = RunRecorder(tmp)
        xs = np.linspace(0.0, 1.0, 11)
        paths = [recorder.write_svg(name, [('a&b', xs, xs ** 2), ('$q$', xs, -xs)],
                                    title='edges<1 & 2>', xlabel='t', ylabel='q_i')
                 for name in ('first.svg', 'second.svg')]
        root = ElementTree.parse(paths[0]).getroot()
        assert root.tag.endswith('svg')
        text = ''.join(root.itertext())
        assert 'a&b' in text and 'edges<1 & 2>' in text and '$q$' in text
        assert read_lines(paths[0]) == read_lines(paths[1])
        assert recorder.written == paths

    print("✓ SVG output works")


def test_short_lyapunov_warns():
    """Test a too-short Lyapunov run records a convergence warning"""
    print("Testing Lyapunov command...")

    with tempfile.TemporaryDirectory() as tmp:
        config = ScenarioConfig(graph='complete:2', kappa=0.2, ic='1/5,1/7,0,0', lyapunov_T=100.0, out=tmp)
        report = PendulaWorkbench(config).lyapunov()
        assert report['warnings']
        lines = read_lines(report['files'][0])
        warning_line = [line for line in lines if line.startswith('# warnings: ')]
        assert warning_line and 'not converged' in warning_line[0]
        assert lines[-1].startswith('final,')

    print("✓ Lyapunov command works")


def test_lyapunov_table_command():
    """Test the table command on a short horizon"""
    print("Testing table1 command...")

    with tempfile.TemporaryDirectory() as tmp:
        config = ScenarioConfig(out=tmp)
        report = PendulaWorkbench(config).table1(rows=LYAPUNOV_TABLE[:2], T=100.0)
        assert [row['label'] for row in report['rows']] == ['K2 kappa=1/5', 'K2 kappa=1/2']
        for row in report['rows']:
            assert abs(row['energy'] - row['reference_energy']) <= 0.005
            assert abs(row['exponent_sum']) <= 1e-6
        lines = data_lines(report['files'][0])
        assert len([line for line in lines if not line.startswith('#')]) == 3

    print("✓ table1 command works")


def test_spectrum_and_partitions():
    """Test the graph reports"""
    print("Testing spectrum and partitions reports...")

    report = PendulaWorkbench(ScenarioConfig(graph='path:5')).spectrum_report()
    assert report['edge_connectivity'] == 1
    assert len(report['critical_couplings']) == 4
    assert any('exceeds' in w for w in report['warnings'])

    report = PendulaWorkbench(ScenarioConfig(graph='complete:2')).spectrum_report()
    assert [v.entries for v in report['sign_vectors']] == [(1, -1)]
    assert report['warnings'] == []

    report = PendulaWorkbench(ScenarioConfig(graph='cycle:4')).partitions_report()
    assert len(report['entries']) == 5
    assert all(entry['counts'] is not None for entry in report['entries'])
    assert report['enumerated']

    print("✓ Spectrum and partitions reports work")


def test_scan():
    """Test branch diagrams and stability maps from the scan command"""
    print("Testing scan command...")

    with tempfile.TemporaryDirectory() as tmp:
        config = ScenarioConfig(graph='complete:2', kappa_range='0.1:0.4:31', x_range='-1:1:5', out=tmp)
        report = PendulaWorkbench(config).scan()
        assert len(report['results']) == 1
        points = report['results'][0]['diagram'].bifurcations
        assert len(points) == 1 and abs(points[0].kappa - 0.25) <= 0.01 + 1e-12
        assert len(report['files']) == 3
        assert report['warnings'] == []

        try:
            PendulaWorkbench(config.updated(kappa_range=None)).scan()
            assert False, "scan without a grid should be rejected"
        except DomainError:
            pass

        graph_file = os.path.join(tmp, 'six.txt')
        with open(graph_file, 'w') as fh:
            fh.write("n 6\n1 2\n1 3\n2 5\n2 6\n4 5\n4 6\n")
        try:
            PendulaWorkbench(config.updated(graph=graph_file, sign_vector='1,1,-1,-1,0,0')).scan()
            assert False, "a pattern without invariant subspace should leave nothing to scan"
        except DomainError:
            pass

    print("✓ Scan command works")


def test_levelset():
    """Test the level-set command output"""
    print("Testing levelset command...")

    with tempfile.TemporaryDirectory() as tmp:
        config = ScenarioConfig(a=1.0, alpha=-1.0, beta=1.0, level=0.0, grid='-1:1:11', out=tmp)
        report = PendulaWorkbench(config).levelset()
        assert len(report['result'].critical_points) == 3
        lines = data_lines(report['files'][0])
        assert len([line for line in lines if not line.startswith('#')]) == 1 + 121

    print("✓ levelset command works")


def test_cli_exit_codes():
    """Test the CLI maps success and bad input to exit codes"""
    print("Testing CLI exit codes...")

    with tempfile.TemporaryDirectory() as tmp:
        assert pendula_cli.main([]) == 0
        assert pendula_cli.main(['spectrum', '--graph', 'complete:3', '--out', tmp]) == 0
        assert pendula_cli.main(['levelset', '--a', '1', '--alpha', '-1', '--beta', '1',
                                 '--grid', '-1:1:11', '--out', tmp]) == 0
        assert pendula_cli.main(['simulate', '--graph', 'complete:2', '--ic', '1,2,3', '--out', tmp]) == 2
        assert pendula_cli.main(['spectrum', '--graph', 'wheel:5', '--out', tmp]) == 2
        assert pendula_cli.main(['simulate', '--kappa', 'strong', '--out', tmp]) == 2

        lyapunov_dir = os.path.join(tmp, 'lyapunov')
        assert pendula_cli.main(['lyapunov', '--graph', 'complete:2', '--kappa', '1/5', '--ic', '1/5,1/7,0,0',
                                 '--T', '100', '--out', lyapunov_dir]) == 0
        assert '# T: 100.0' in read_lines(os.path.join(lyapunov_dir, 'lyapunov.csv'))

    print("✓ CLI exit codes work")


def run_all_tests():
    """Run all tests"""
    print("=" * 80)
    print("RUNNING WORKBENCH TESTS")
    print("=" * 80)
    print()

    tests = [
        test_parse_helpers,
        test_scenario_file,
        test_config_hash,
        test_run_tasks,
        test_simulate_outputs,
        test_com_outputs,
        test_svg_output,
        test_short_lyapunov_warns,
        test_lyapunov_table_command,
        test_spectrum_and_partitions,
        test_scan,
        test_levelset,
        test_cli_exit_codes,
    ]

    passed = 0
    failed = 0

    for test in tests:
        try:
            test()
            passed += 1
        except AssertionError as e:
            print(f"✗ {test.__name__} failed: {e}")
            failed += 1
        except Exception as e:
            print(f"✗ {test.__name__} error: {e}")
            failed += 1

    print()
    print("=" * 80)
    print(f"RESULTS: {passed} passed, {failed} failed")
    print("=" * 80)

    if failed > 0:
        sys.exit(1)


if __name__ == '__main__':
    run_all_tests()
