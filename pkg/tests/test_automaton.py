import pytest

from freewalk.automaton import START, build_automaton, fellow_travel_time
from freewalk.errors import BudgetError

from oracles import bfs_relative_spheres


class TestStructure:
    def test_vertices_and_symbols(self, z2z3):
        aut = build_automaton(z2z3, cap=2)
        assert aut.vertices == (START, 0, 1)
        syms = aut.symbols()
        # Z/2 contributes one nontrivial label, Z/3 contributes two
        assert len(syms) == 3
        assert len(set(syms)) == 3

    def test_follows_blocks_same_factor(self, z2z3):
        aut = build_automaton(z2z3, cap=2)
        assert not aut.follows((1, 1), (1, 2))
        assert aut.follows((0, 1), (1, 2))

    def test_adjacency_has_finitely_many_rows(self, f2, z2z3):
        for group in (f2, z2z3):
            aut = build_automaton(group, cap=2)
            rows = aut.adjacency_rows()
            n = len(group.factors)
            assert len(rows) == n + 1
            assert len(set(rows.values())) <= n + 1
            assert rows[START] == frozenset(range(n))
            for k in range(n):
                assert k not in rows[k]


class TestBijection:
    @pytest.mark.parametrize("cap", [1, 2])
    def test_spheres_match_independent_bfs(self, f2, cap):
        aut = build_automaton(f2, cap)
        spheres = bfs_relative_spheres(f2, 5, cap=cap)
        for n in range(6):
            elems = [e for _, e in aut.enumerate_sphere(n)]
            assert len(elems) == len(set(elems))  # each element exactly once
            assert set(elems) == set(spheres[n])
            assert aut.sphere_size(n) == len(spheres[n])

    def test_finite_factor_spheres(self, z2z3):
        aut = build_automaton(z2z3, cap=2)
        spheres = bfs_relative_spheres(z2z3, 5, cap=2)
        for n in range(6):
            assert set(e for _, e in aut.enumerate_sphere(n)) == set(spheres[n])

    def test_capped_growth_rate(self, f2):
        # with unit syllables each factor offers two labels, so the capped
        # relative spheres grow like 4 * 2^(n-1)
        aut = build_automaton(f2, cap=1)
        for n in range(1, 10):
            assert aut.sphere_size(n) == 4 * 2 ** (n - 1)

    def test_paths_are_relative_geodesics(self, z2z3):
        aut = build_automaton(z2z3, cap=2)
        for n in range(5):
            for path, elem in aut.enumerate_sphere(n):
                assert z2z3.rel_length(elem) == len(path)

    def test_round_trip(self, f2):
        aut = build_automaton(f2, cap=2)
        for _, elem in aut.enumerate_sphere(3):
            assert aut.element_of(aut.path_of(elem)) == elem

    def test_rejects_nonalternating_path(self, f2):
        aut = build_automaton(f2, cap=2)
        with pytest.raises(ValueError):
            aut.element_of(((0, (1,)), (0, (1,))))

    def test_rejects_syllable_beyond_cap(self, f2):
        aut = build_automaton(f2, cap=2)
        with pytest.raises(ValueError):
            aut.path_of(((0, (3,)),))

    def test_canonical_order_is_stable(self, z2z3):
        aut = build_automaton(z2z3, cap=2)
        first = [e for _, e in aut.enumerate_sphere(3)]
        second = [e for _, e in aut.enumerate_sphere(3)]
        assert first == second

    def test_enumeration_budget(self, f2):
        aut = build_automaton(f2, cap=2)
        with pytest.raises(BudgetError):
            list(aut.enumerate_sphere(5, budget=10))


class TestFellowTravel:
    def test_identical_geodesics_share_everything(self, f2):
        g = ((0, (1,)), (1, (2,)), (0, (-1,)))
        geo = f2.rel_geodesic((), g)
        assert fellow_travel_time(f2, geo, geo) == len(geo) == 4

    def test_diverging_geodesics_share_origin(self, f2):
        geo1 = f2.rel_geodesic((), ((0, (1,)), (1, (1,))))
        geo2 = f2.rel_geodesic((), ((1, (1,)), (0, (1,))))
        assert fellow_travel_time(f2, geo1, geo2) == 1

    def test_shared_prefix_counts(self, f2):
        prefix = ((0, (1,)), (1, (1,)))
        geo1 = f2.rel_geodesic((), prefix + ((0, (2,)),))
        geo2 = f2.rel_geodesic((), prefix + ((0, (-1,)),))
        # origin plus the two prefix vertices
        assert fellow_travel_time(f2, geo1, geo2) == 3

    def test_thickened_count_is_larger(self, f2):
        geo1 = f2.rel_geodesic((), ((0, (1,)), (1, (1,))))
        geo2 = f2.rel_geodesic((), ((0, (1,)), (1, (-1,))))
        base = fellow_travel_time(f2, geo1, geo2)
        thick = fellow_travel_time(f2, geo1, geo2, c=1)
        assert thick >= base


class TestExports:
    def test_dot_output(self, z2z3):
        dot = build_automaton(z2z3, cap=2).to_dot()
        assert dot.startswith("digraph")
        assert "start" in dot

    def test_sphere_csv(self, f2, tmp_path):
        out = tmp_path / "spheres.csv"
        build_automaton(f2, cap=1).sphere_csv(out, 4)
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "n,cap,count"
        assert len(lines) == 6
        assert lines[1].split(",") == ["0", "1", "1"]
