import numpy as np
import pandas as pd
import pytest

from app.core.errors import FitError, ParseError
from app.schemas import EquivalenceClassReport, FitReport
from app.services.effects import FPR_GRID, EffectBounds, roc_auc
from app.services.equivalence import EquivalenceClass, Provenance
from app.services.io import (
    Dataset,
    format_graph,
    parse_graph,
    read_dataset,
    read_graph,
    read_json,
    read_matrix_csv,
    write_dataset,
    write_graphs,
    write_json,
    write_matrix_csv,
    write_roc_csv,
)
from tests.conftest import make_graph


def test_graph_text_format(confounded_chain):
    text = format_graph(confounded_chain, comment='confounded chain')
    assert text.splitlines() == ['# confounded chain', 'd=4', '0 -> 1', '1 -> 2', '2 -> 3', '1 <-> 3']
    assert parse_graph(text) == confounded_chain


def test_parse_graph_accepts_comments_and_blank_lines():
    g = parse_graph('# header\n\nd = 3\n  2 -> 0   # trailing\n1<->2\n')
    assert g == make_graph(3, [(2, 0)], [(1, 2)])


@pytest.mark.parametrize('text, line', [
    ('d=3\n0 -> 5\n', 2),
    ('d=3\n0 => 1\n', 2),
    ('d=3\n1 -> 1\n', 2),
    ('0 -> 1\nd=3\n', 1),
    ('d=3\nd=4\n', 2),
])
def test_parse_graph_errors_carry_positions(text, line):
    with pytest.raises(ParseError) as info:
        parse_graph(text, source='g.txt')
    assert info.value.line == line
    assert info.value.source == 'g.txt'
    assert f'line {line}' in str(info.value)


def test_parse_graph_needs_a_header():
    with pytest.raises(ParseError):
        parse_graph('# nothing here\n')


def test_graph_files(tmp_path, confounded_chain, single_district):
    paths = write_graphs([confounded_chain, single_district], tmp_path / 'out', prefix='sample')
    assert [p.name for p in paths] == ['sample_0000.txt', 'sample_0001.txt']
    assert read_graph(paths[1]) == single_district


def test_read_dataset(tmp_path):
    path = tmp_path / 'data.csv'
    path.write_text('a,b\n1,2\n3.5,-4\n0,1e-3\n')
    dataset = read_dataset(path)
    assert dataset.columns == ['a', 'b']
    assert dataset.n == 3 and dataset.d == 2
    np.testing.assert_allclose(dataset.X[:, 1], [2.0, -4.0, 1e-3])


@pytest.mark.parametrize('body, line, column', [
    ('a,b\n1,2\n3,x\n', 3, 'b'),
    ('a,b\n1,\n3,4\n', 2, 'b'),
    ('a,b\nfoo,2\n', 2, 'a'),
])
def test_read_dataset_reports_bad_cells(tmp_path, body, line, column):
    path = tmp_path / 'bad.csv'
    path.write_text(body)
    with pytest.raises(ParseError) as info:
        read_dataset(path)
    assert (info.value.line, info.value.column) == (line, column)


def test_read_dataset_rejects_empty_files(tmp_path):
    path = tmp_path / 'empty.csv'
    path.write_text('')
    with pytest.raises(ParseError):
        read_dataset(path)


def test_dataset_transforms(tmp_path, rng):
    X = np.exp(rng.standard_normal((40, 3)))
    dataset = Dataset.from_array(X, 'memory')
    assert dataset.columns == ['X1', 'X2', 'X3']
    standard = dataset.standardize()
    np.testing.assert_allclose(standard.X.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(standard.X.std(axis=0, ddof=1), 1.0)
    assert standard.standardized
    logged = dataset.log_transform()
    np.testing.assert_allclose(logged.X, np.log(X))
    assert dataset.permute([2, 0, 1]).columns == ['X3', 'X1', 'X2']

    path = tmp_path / 'roundtrip.csv'
    write_dataset(dataset, path)
    np.testing.assert_allclose(read_dataset(path).X, X)


def test_dataset_transform_errors():
    constant = Dataset.from_array(np.array([[1.0, 2.0], [1.0, 3.0], [1.0, 5.0]]), 'memory')
    with pytest.raises(FitError):
        constant.standardize()
    with pytest.raises(FitError):
        Dataset.from_array(np.array([[1.0, -2.0], [2.0, 3.0]]), 'memory').log_transform()


def test_report_files(tmp_path, confounded_chain):
    members = {confounded_chain: Provenance.COLLIDER}
    ec = EquivalenceClass(reference=confounded_chain, zeta=-1.5, epsilon=1e-10, members=members)
    path = tmp_path / 'class.json'
    text = write_json(EquivalenceClassReport.from_class(ec), path)
    assert '"collider-identical"' in text
    restored = read_json(EquivalenceClassReport, path).to_class()
    assert restored.members == ec.members
    assert restored.zeta == ec.zeta

    with pytest.raises(ParseError):
        read_json(FitReport, path)


def test_matrix_and_roc_tables(tmp_path):
    M = np.array([[1.0, 0.25], [0.5, 1.0]])
    write_matrix_csv(M, tmp_path / 'm.csv', labels=['x', 'y'])
    np.testing.assert_array_equal(read_matrix_csv(tmp_path / 'm.csv'), M)

    truth = EffectBounds(np.array([[1, 0, 0], [0.5, 1, 0], [0, 0, 1]], dtype=float))
    curve = roc_auc(truth, truth)
    write_roc_csv([curve, None], tmp_path / 'roc.csv', average=np.ones_like(FPR_GRID), grid=FPR_GRID)
    table = pd.read_csv(tmp_path / 'roc.csv', dtype={'replicate': str})
    assert set(table['replicate']) == {'0', 'mean'}
    assert (table['replicate'] == 'mean').sum() == len(FPR_GRID)
