from fractions import Fraction

import pytest

from src.errors import (BadParameter, MalformedFile, NotADag,
                        SearchInconclusive, UnsupportedScale)
from src.poset_dag import (CustomInstance, DagFamily, boundary_fraction,
                           boundary_slack, equiv_classes, get_family,
                           instance, load_custom_family, ordered_subsets,
                           save_custom_family, to_custom_instance,
                           validate_approx_symmetry)
from src.zoo import maj_z_1d, maj_z_2d

LINE = DagFamily.line()
GRID = DagFamily.grid2d()
TREE = DagFamily.binary_tree()


def class_sets(eq):
    return {frozenset(c) for c in eq.classes}


class TestInstances:
    def test_line(self):
        inst = instance(LINE, 3)
        assert inst.communication == (1, 2, 3)
        assert inst.initial == (0,)
        assert inst.parents[2] == (1,)
        assert inst.boundary == frozenset({0, 3})

    def test_grid(self):
        inst = instance(GRID, 2)
        assert len(inst.nodes) == 9
        assert len(inst.communication) == 4
        assert inst.parents[(2, 1)] == ((1, 1), (2, 0))
        assert set(inst.communication) == {(1, 1), (1, 2), (2, 1), (2, 2)}

    def test_tree(self):
        inst = instance(TREE, 2)
        assert len(inst.nodes) == 7
        assert inst.initial == ("",)
        assert inst.boundary == frozenset({"", "00", "01", "10", "11"})
        assert inst.parents["01"] == ("0",)

    def test_scale_must_be_positive(self):
        with pytest.raises(BadParameter):
            instance(LINE, 0)

    @pytest.mark.parametrize("family", [LINE, GRID, TREE])
    def test_parents_and_nesting(self, family):
        previous = None
        for n in range(1, 6):
            inst = instance(family, n)
            node_set = set(inst.nodes)
            assert set(inst.initial) | set(inst.communication) == node_set
            assert not set(inst.initial) & set(inst.communication)
            for v in inst.communication:
                assert len(inst.parents[v]) == family.d
                assert set(inst.parents[v]) <= node_set
            for u, v in inst.graph.edges():
                assert not (u in inst.communication and v in inst.initial)
            if previous is not None:
                assert set(previous.nodes) <= node_set
                assert set(previous.communication) <= set(inst.communication)
                assert set(previous.initial) <= set(inst.initial)
            previous = inst


class TestBoundaryFraction:
    def test_examples(self):
        assert boundary_fraction(LINE, 9) == pytest.approx(0.2)
        assert boundary_fraction(GRID, 3) == 0.75
        assert boundary_fraction(TREE, 3) == 0.6

    @pytest.mark.parametrize("n", range(1, 33))
    def test_line_and_grid_formulas(self, n):
        assert boundary_fraction(LINE, n) == float(Fraction(2, n + 1))
        assert boundary_fraction(GRID, n) == float(Fraction(4 * n, (n + 1) ** 2))

    @pytest.mark.parametrize("n", range(1, 17))
    def test_tree_formula(self, n):
        assert boundary_fraction(TREE, n) == float(Fraction(2 ** n + 1, 2 ** (n + 1) - 1))

    def test_slack_normalizations(self):
        by_nodes, by_comm = boundary_slack(LINE, 3)
        assert by_nodes == pytest.approx(2.0)
        assert by_comm == pytest.approx(8.0 / 3.0)


class TestEquivalence:
    def test_line(self):
        eq = equiv_classes(LINE)
        assert class_sets(eq) == {frozenset({(1,)})}

    def test_grid(self):
        eq = equiv_classes(GRID)
        assert class_sets(eq) == {
            frozenset({(1,), (2,)}),
            frozenset({(1, 2)}),
            frozenset({(2, 1)}),
        }
        assert eq.equivalent((1,), (2,))
        assert not eq.equivalent((1, 2), (2, 1))
        assert list(eq.pairs()) == [((2,), (1,))]

    def test_tree(self):
        eq = equiv_classes(TREE)
        assert not eq.equivalent((1,), (2,))
        assert all(len(c) == 1 for c in eq.classes)

    def test_grid_witness_search_matches_lattice_rule(self):
        lattice = equiv_classes(GRID)
        witness = equiv_classes(GRID, scale=6, method="witness")
        assert class_sets(lattice) == class_sets(witness)

    @pytest.mark.parametrize("family", [LINE, GRID, TREE])
    def test_partition(self, family):
        eq = equiv_classes(family)
        members = [s for c in eq.classes for s in c]
        assert len(members) == len(set(members))
        assert set(members) == set(ordered_subsets(eq.index_count))

    def test_lattice_rule_rejects_tree(self):
        with pytest.raises(BadParameter):
            equiv_classes(TREE, method="lattice")


def grid_as_custom(ns):
    return DagFamily.custom(2, {n: to_custom_instance(instance(GRID, n)) for n in ns}, name="grid-copy")


class TestCustomFamily:
    def test_file_round_trip(self, tmp_path):
        path = tmp_path / "grid.json"
        save_custom_family(grid_as_custom([1, 2, 3]), str(path))
        family = load_custom_family(str(path))
        for n in (1, 2, 3):
            assert len(instance(family, n).nodes) == len(instance(GRID, n).nodes)
            assert boundary_fraction(family, n) == boundary_fraction(GRID, n)
        assert get_family(f"file:{path}").d == 2

    def test_missing_scale(self):
        with pytest.raises(UnsupportedScale):
            instance(grid_as_custom([1, 2]), 3)

    def test_witness_search_reports_missing_witnesses(self):
        family = grid_as_custom([3])
        eq = equiv_classes(family, scale=3)
        assert eq.equivalent((1,), (2,))
        assert ((1, 2), (2, 1)) in eq.inconclusive
        with pytest.raises(SearchInconclusive):
            equiv_classes(family, scale=3, strict=True)

    def test_cycle_detected(self):
        data = CustomInstance(
            nodes=(0, 1, 2),
            initial=(0,),
            edges=((0, 1), (1, 2), (2, 1)),
            parent_order={1: (0,), 2: (1,)},
        )
        family = DagFamily.custom(1, {1: data, 2: data})
        with pytest.raises(NotADag) as exc:
            validate_approx_symmetry(family, 2)
        assert exc.value.cycle

    def test_edge_into_initial_node_rejected(self):
        data = CustomInstance(
            nodes=(0, 1),
            initial=(0,),
            edges=((0, 1), (1, 0)),
            parent_order={1: (0,)},
        )
        with pytest.raises(MalformedFile):
            instance(DagFamily.custom(1, {1: data}), 1)

    def test_malformed_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"d": 1}', encoding="utf-8")
        with pytest.raises(MalformedFile):
            load_custom_family(str(path))


class TestApproxSymmetry:
    def test_grid_vanishing(self):
        report = validate_approx_symmetry(GRID, 16)
        assert report.trend == "vanishing-consistent"
        assert report.in_degree_ok and report.cayley_ok
        assert all(s.acyclic for s in report.scales)

    def test_tree_non_vanishing(self):
        report = validate_approx_symmetry(TREE, 12)
        assert report.trend == "non-vanishing"
        assert not report.cayley_ok

    def test_line_vanishing(self):
        report = validate_approx_symmetry(LINE, 8)
        assert report.trend == "vanishing-consistent"
        assert report.scales[2].in_degree_histogram == {1: 3}

    def test_kernel_conditions(self):
        report = validate_approx_symmetry(GRID, 4, kernel=maj_z_2d(0.3))
        assert report.kernel_d_ok is True
        assert report.kernel_positive is False
        assert validate_approx_symmetry(GRID, 4, kernel=maj_z_1d(0.3)).kernel_d_ok is False

    def test_needs_two_scales(self):
        with pytest.raises(BadParameter):
            validate_approx_symmetry(LINE, 1)
