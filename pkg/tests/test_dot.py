import pytest

from sunnpest.core.errors import InputError
from sunnpest.frontends.dot import export_dot, select_tree, tree_to_dot


def test_phase_tree_export(bundle):
    source = export_dot(bundle)
    assert 'digraph phase_m2 {' in source
    assert source.count('->') == bundle.classifier.node_count - 1
    assert '≤' in source
    assert 'label=yes' in source and 'label=no' in source


def test_stage_tree_export(bundle):
    tree, name = select_tree(bundle, 'stage:3', 1)
    assert tree is bundle.ratios.forests[2].trees[1]
    assert name == 'stage3_tree1_m2'
    assert 'value ' in tree_to_dot(tree, name).source


@pytest.mark.parametrize(('which', 'index'), [('leaves', 0), ('stage:6', 0), ('stage:0', 0), ('stage:1', 99)])
def test_bad_selection(bundle, which, index):
    with pytest.raises(InputError):
        export_dot(bundle, which, index)
