"""DOT export of trained trees for review outside the tool."""

import re

import graphviz

from sunnpest.core.bundle import ModelBundle
from sunnpest.core.errors import InputError
from sunnpest.core.trees import TreeModel

_WHICH = re.compile(r'^(phase|stage:(\d+))$')


def tree_to_dot(tree: TreeModel, title: str = 'tree') -> graphviz.Digraph:
    """One DOT node per tree node, named by its index; internal nodes read `name ≤ threshold`."""
    dot = graphviz.Digraph(name=title, comment=title)
    dot.attr(rankdir='TB')
    dot.attr('node', shape='box', style='rounded', fontname='helvetica')

    for index, node in enumerate(tree.nodes):
        if node.is_leaf:
            if tree.kind == 'classifier':
                assert node.distribution is not None
                top = max(range(len(tree.classes)), key=lambda i: (node.distribution[i], -i))
                shares = ' '.join(f'{p:.3g}' for p in node.distribution)
                label = f'phase {tree.classes[top]}\\nsamples {node.n_samples}\\n[{shares}]'
            else:
                label = f'value {node.value:.6g}\\nsamples {node.n_samples}'
            dot.node(str(index), label, style='rounded,filled', fillcolor='#e8f4e8')
        else:
            label = f'{tree.feature_names[node.feature]} ≤ {node.threshold:.6g}\\nsamples {node.n_samples}'
            dot.node(str(index), label)
            dot.edge(str(index), str(node.left), label='yes')
            dot.edge(str(index), str(node.right), label='no')
    return dot


def select_tree(bundle: ModelBundle, which: str, tree_index: int = 0) -> tuple[TreeModel, str]:
    """Resolve `phase` or `stage:<s>` (plus a tree index for forests) to a tree and a graph name."""
    match = _WHICH.match(which.strip().lower())
    if match is None:
        raise InputError(f'--which must be "phase" or "stage:<1-5>", got {which!r}')
    if match.group(2) is None:
        return bundle.classifier, f'phase_{bundle.spec.model_id}'
    stage = int(match.group(2))
    if not 1 <= stage <= len(bundle.ratios.forests):
        raise InputError(f'stage must lie in 1..{len(bundle.ratios.forests)}, got {stage}')
    trees = bundle.ratios.forests[stage - 1].trees
    if not 0 <= tree_index < len(trees):
        raise InputError(f'stage {stage} forest has {len(trees)} trees, no tree {tree_index}')
    return trees[tree_index], f'stage{stage}_tree{tree_index}_{bundle.spec.model_id}'


def export_dot(bundle: ModelBundle, which: str = 'phase', tree_index: int = 0) -> str:
    tree, name = select_tree(bundle, which, tree_index)
    return tree_to_dot(tree, name).source
