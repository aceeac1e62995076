"""Generation-bias metric tests.

The oracle below re-implements the three metrics with plain Python loops,
straight from their definitions: per (template, style), the population
variance across descriptors of per-cell mean probabilities, summed over the
styles in scope and averaged over templates (the summed-cluster variant sums
member probabilities before the variance).
"""
import json
import random
import warnings

import numpy as np
import pytest

from hb.genbias import (ClusterSpec, StyleGrid, axis_filtered_fgb,
                        build_gen_bias_report, cluster_styles, full_gen_bias,
                        ingest_style_vectors, load_style_manifest,
                        mean_style_profiles, normalize_style_vector,
                        partial_gen_bias, summed_cluster_gen_bias)


# ---------------------------------------------------------------------------
# Brute-force oracle

def oracle_cell_mean(vectors, s):
    return sum(v[s] for v in vectors) / len(vectors)


def oracle_variance(xs):
    m = sum(xs) / len(xs)
    return sum((x - m) ** 2 for x in xs) / len(xs)


def oracle_metric(cells, style_indices, summed):
    """cells: {(template, descriptor): [vector, ...]} (no empty cells)."""
    templates = sorted({t for t, _ in cells})
    total = 0.0
    for t in templates:
        descriptors = sorted(d for (tt, d) in cells if tt == t)
        if summed:
            sums = [sum(oracle_cell_mean(cells[(t, d)], s) for s in style_indices)
                    for d in descriptors]
            total += oracle_variance(sums)
        else:
            for s in style_indices:
                means = [oracle_cell_mean(cells[(t, d)], s) for d in descriptors]
                total += oracle_variance(means)
    return 1000.0 * total / len(templates)


def random_grid(rng, n_templates=None, n_styles=None, n_descriptors=None,
                max_cell=4):
    T = n_templates or rng.randint(1, 3)
    S = n_styles or rng.randint(2, 5)
    D = n_descriptors or rng.randint(2, 10)
    manifest = [f"style_{k}" for k in range(S)]
    cells = {}
    for t in range(T):
        for d in range(D):
            vectors = []
            for _ in range(rng.randint(1, max_cell)):
                raw = [rng.random() for _ in range(S)]
                total = sum(raw)
                vectors.append([x / total for x in raw])
            cells[(f"t{t}", f"d{d}")] = vectors
    axes = {f"d{d}": ("axis_a" if d % 2 == 0 else "axis_b") for d in range(D)}
    return StyleGrid(manifest, cells, axes), cells, manifest


class TestMetricOracle:
    def test_hand_computed_fgb(self):
        # T=1, S=2; descriptor means [0.8, 0.2] and [0.6, 0.4]:
        # Var_d over {0.8, 0.6} = 0.01, over {0.2, 0.4} = 0.01 -> x1000 = 20
        grid = StyleGrid(["s0", "s1"],
                         {("t", "d1"): [[0.8, 0.2]], ("t", "d2"): [[0.6, 0.4]]},
                         {"d1": "a", "d2": "a"})
        assert full_gen_bias(grid) == pytest.approx(20.0, abs=1e-9)
        single = ClusterSpec("one", ("s0",))
        assert partial_gen_bias(grid, single) == pytest.approx(10.0, abs=1e-9)

    def test_identical_profiles_zero(self):
        vec = [0.25, 0.25, 0.5]
        grid = StyleGrid(["a", "b", "c"],
                         {("t", f"d{i}"): [vec, vec] for i in range(4)},
                         {f"d{i}": "x" for i in range(4)})
        assert full_gen_bias(grid) == pytest.approx(0.0, abs=1e-12)

    def test_oracle_equivalence_100_random_grids(self):
        rng = random.Random(42)
        for _ in range(100):
            grid, cells, manifest = random_grid(rng)
            S = len(manifest)
            assert full_gen_bias(grid) == pytest.approx(
                oracle_metric(cells, range(S), summed=False), abs=1e-9)
            size = rng.randint(1, S)
            members = tuple(manifest[k] for k in rng.sample(range(S), size))
            cluster = ClusterSpec("c", members)
            idx = [manifest.index(m) for m in members]
            assert partial_gen_bias(grid, cluster) == pytest.approx(
                oracle_metric(cells, idx, summed=False), abs=1e-9)
            assert summed_cluster_gen_bias(grid, cluster) == pytest.approx(
                oracle_metric(cells, idx, summed=True), abs=1e-9)

    def test_pgb_all_styles_equals_fgb(self):
        rng = random.Random(1)
        for _ in range(20):
            grid, _, manifest = random_grid(rng)
            cluster = ClusterSpec("all", tuple(manifest))
            assert partial_gen_bias(grid, cluster) == pytest.approx(
                full_gen_bias(grid), abs=1e-12)

    def test_pgb_additivity_over_partitions(self):
        rng = random.Random(2)
        for _ in range(20):
            grid, _, manifest = random_grid(rng)
            names = list(manifest)
            rng.shuffle(names)
            cut = rng.randint(1, len(names))
            parts = [names[:cut], names[cut:]]
            total = sum(partial_gen_bias(grid, ClusterSpec(f"p{i}", tuple(p)))
                        for i, p in enumerate(parts) if p)
            assert total == pytest.approx(full_gen_bias(grid), abs=1e-9)

    def test_singleton_pgb_equals_scgb(self):
        rng = random.Random(3)
        for _ in range(20):
            grid, _, manifest = random_grid(rng)
            cluster = ClusterSpec("solo", (rng.choice(manifest),))
            assert partial_gen_bias(grid, cluster) == pytest.approx(
                summed_cluster_gen_bias(grid, cluster), abs=1e-12)

    def test_anticorrelated_pair_scgb_zero_pgb_positive(self):
        # member styles sum to a constant across descriptors
        grid = StyleGrid(
            ["s0", "s1", "s2"],
            {("t", "d0"): [[0.1, 0.4, 0.5]], ("t", "d1"): [[0.4, 0.1, 0.5]]},
            {"d0": "x", "d1": "x"})
        cluster = ClusterSpec("pair", ("s0", "s1"))
        assert summed_cluster_gen_bias(grid, cluster) == pytest.approx(0.0, abs=1e-12)
        assert partial_gen_bias(grid, cluster) > 1.0

    def test_permutation_invariance(self):
        rng = random.Random(4)
        grid, cells, manifest = random_grid(rng, n_templates=2, n_styles=4,
                                            n_descriptors=5)
        fgb = full_gen_bias(grid)
        # permute style order (and cells consistently)
        perm = list(range(4))
        rng.shuffle(perm)
        cells_p = {key: [[v[perm[k]] for k in range(4)] for v in vecs]
                   for key, vecs in cells.items()}
        manifest_p = [manifest[perm[k]] for k in range(4)]
        grid_p = StyleGrid(manifest_p, cells_p, grid.descriptor_axis)
        assert full_gen_bias(grid_p) == pytest.approx(fgb, abs=1e-12)
        # renaming descriptors reorders them without changing the value
        cells_r = {(t, "z" + d): vecs for (t, d), vecs in cells.items()}
        grid_r = StyleGrid(manifest, cells_r,
                           {"z" + d: a for d, a in grid.descriptor_axis.items()})
        assert full_gen_bias(grid_r) == pytest.approx(fgb, abs=1e-12)

    def test_single_descriptor_degenerate_warns(self):
        grid = StyleGrid(["s0", "s1"], {("t", "d0"): [[0.5, 0.5]]}, {"d0": "x"})
        with pytest.warns(UserWarning, match="single descriptor"):
            assert full_gen_bias(grid) == 0.0


class TestProfiles:
    def test_two_point_cell_mean(self):
        grid = StyleGrid(["s0", "s1"], {("t", "d"): [[1.0, 0.0], [0.0, 1.0]]},
                         {"d": "x"})
        profiles = mean_style_profiles(grid)
        assert profiles.cell_means[("t", "d")] == pytest.approx([0.5, 0.5])

    def test_identical_vectors_propagate(self):
        vec = [0.2, 0.3, 0.5]
        grid = StyleGrid(["a", "b", "c"],
                         {(t, d): [vec] for t in "tu" for d in "de"},
                         {"d": "x", "e": "x"})
        profiles = mean_style_profiles(grid)
        for d in "de":
            assert profiles.descriptor_means[d] == pytest.approx(vec)
        assert profiles.global_mean == pytest.approx(vec)

    def test_double_average_matches_oracle(self):
        rng = random.Random(5)
        grid, cells, manifest = random_grid(rng, n_templates=2, n_styles=3,
                                            n_descriptors=4)
        profiles = mean_style_profiles(grid)
        for d in grid.descriptors():
            expected = []
            for s in range(3):
                per_template = [oracle_cell_mean(cells[(t, d)], s)
                                for t in grid.templates()]
                expected.append(sum(per_template) / len(per_template))
            assert profiles.descriptor_means[d] == pytest.approx(expected,
                                                                 abs=1e-12)

    def test_incomplete_grid_warns_and_excludes(self):
        grid = StyleGrid(["s0", "s1"],
                         {("t0", "d0"): [[0.5, 0.5]], ("t0", "d1"): [[0.9, 0.1]],
                          ("t1", "d0"): [[0.4, 0.6]]},
                         {"d0": "x", "d1": "x"})
        with pytest.warns(UserWarning, match="coverage"):
            profiles = mean_style_profiles(grid)
        assert ("t1", "d1") in profiles.missing_cells
        # d1's mean comes from t0 alone
        assert profiles.descriptor_means["d1"] == pytest.approx([0.9, 0.1])

    def test_empty_grid_rejected(self):
        grid = StyleGrid(["s0"], {}, {})
        with pytest.raises(ValueError):
            mean_style_profiles(grid)


class TestIngestion:
    def _write(self, tmp_path, styles, responses, sentences, manifest):
        paths = {}
        paths["styles"] = tmp_path / "styles.jsonl"
        paths["styles"].write_text(
            "".join(json.dumps(r) + "\n" for r in styles))
        paths["responses"] = tmp_path / "responses.jsonl"
        paths["responses"].write_text(
            "".join(json.dumps(r) + "\n" for r in responses))
        paths["sentences"] = tmp_path / "sentences.jsonl"
        paths["sentences"].write_text(
            "".join(json.dumps(r) + "\n" for r in sentences))
        paths["manifest"] = tmp_path / "manifest.json"
        paths["manifest"].write_text(json.dumps({"styles": manifest}))
        return paths

    def _sentence(self, sid="s1", descriptor="blind", axis="ability",
                  template_id="love_pnp"):
        return {"id": sid, "text": "I love blind kids.", "descriptor_text": descriptor,
                "axis": axis, "bucket": "", "noun_singular": "kid",
                "gender_class": "unspecified", "template_id": template_id,
                "variants": []}

    def test_round_trip(self, tmp_path):
        paths = self._write(
            tmp_path,
            styles=[{"response_id": "r1", "probs": [0.5, 0.5]},
                    {"response_id": "r2", "probs": [0.25, 0.75]}],
            responses=[{"response_id": "r1", "sentence_id": "s1", "text": "x"},
                       {"response_id": "r2", "sentence_id": "s1", "text": "y"}],
            sentences=[self._sentence()],
            manifest=["s0", "s1"])
        grid = ingest_style_vectors(paths["styles"], paths["responses"],
                                    paths["sentences"], paths["manifest"])
        assert grid.cell_count("love_pnp", "blind") == 2
        assert grid.descriptor_axis == {"blind": "ability"}

    def test_bad_sum_rejected(self, tmp_path):
        paths = self._write(
            tmp_path,
            styles=[{"response_id": "r1", "probs": [0.5, 0.4]}],
            responses=[{"response_id": "r1", "sentence_id": "s1", "text": "x"}],
            sentences=[self._sentence()], manifest=["s0", "s1"])
        with pytest.raises(ValueError, match="sums to"):
            ingest_style_vectors(paths["styles"], paths["responses"],
                                 paths["sentences"], paths["manifest"])

    def test_manifest_drives_dimension(self, tmp_path):
        # a 5-dim vector against a 5-name manifest is fine
        probs = [0.2] * 5
        paths = self._write(
            tmp_path,
            styles=[{"response_id": "r1", "probs": probs}],
            responses=[{"response_id": "r1", "sentence_id": "s1", "text": "x"}],
            sentences=[self._sentence()],
            manifest=[f"s{i}" for i in range(5)])
        grid = ingest_style_vectors(paths["styles"], paths["responses"],
                                    paths["sentences"], paths["manifest"])
        assert grid.style_count == 5

    def test_wrong_dimension_rejected(self, tmp_path):
        paths = self._write(
            tmp_path,
            styles=[{"response_id": "r1", "probs": [0.5, 0.5]}],
            responses=[{"response_id": "r1", "sentence_id": "s1", "text": "x"}],
            sentences=[self._sentence()],
            manifest=["s0", "s1", "s2"])
        from hb.errors import SchemaError
        with pytest.raises(SchemaError, match="length"):
            ingest_style_vectors(paths["styles"], paths["responses"],
                                 paths["sentences"], paths["manifest"])

    def test_dangling_reference_rejected(self, tmp_path):
        paths = self._write(
            tmp_path,
            styles=[{"response_id": "ghost", "probs": [0.5, 0.5]}],
            responses=[{"response_id": "r1", "sentence_id": "s1", "text": "x"}],
            sentences=[self._sentence()], manifest=["s0", "s1"])
        from hb.errors import JoinError
        with pytest.raises(JoinError, match="ghost"):
            ingest_style_vectors(paths["styles"], paths["responses"],
                                 paths["sentences"], paths["manifest"])

    def test_renormalized_to_exact_one(self):
        vec = normalize_style_vector([0.50001, 0.49995], 2)
        assert float(vec.sum()) == pytest.approx(1.0, abs=1e-15)


class TestAxisFilter:
    def test_axis_restriction(self):
        rng = random.Random(6)
        grid, cells, manifest = random_grid(rng, n_templates=2, n_styles=3,
                                            n_descriptors=6)
        sub_cells = {key: vecs for key, vecs in cells.items()
                     if grid.descriptor_axis[key[1]] == "axis_a"}
        expected = oracle_metric(sub_cells, range(3), summed=False)
        assert axis_filtered_fgb(grid, "axis_a") == pytest.approx(expected,
                                                                  abs=1e-9)

    def test_single_descriptor_axis_degenerate(self):
        grid = StyleGrid(["s0", "s1"],
                         {("t", "d0"): [[0.5, 0.5]], ("t", "d1"): [[0.1, 0.9]]},
                         {"d0": "lonely", "d1": "other"})
        with pytest.warns(UserWarning, match="single descriptor"):
            assert axis_filtered_fgb(grid, "lonely") == 0.0

    def test_report_shape(self):
        rng = random.Random(7)
        grid, _, manifest = random_grid(rng, n_templates=2, n_styles=4,
                                        n_descriptors=5)
        clusters = [ClusterSpec("front", tuple(manifest[:2])),
                    ClusterSpec("back", tuple(manifest[2:]))]
        report = build_gen_bias_report(grid, clusters)
        assert set(report.per_cluster) == {"front", "back"}
        total = sum(pgb for pgb, _ in report.per_cluster.values())
        assert total == pytest.approx(report.fgb_x1000, abs=1e-9)


class TestClusterStyles:
    def _grid_from_series(self, series):
        """series: dict style -> list of values across responses; rows are
        renormalized but relative co-movement is preserved by construction."""
        names = sorted(series)
        n = len(next(iter(series.values())))
        cells = {}
        for i in range(n):
            row = [series[name][i] for name in names]
            total = sum(row)
            cells[("t", f"d{i}")] = [[v / total for v in row]]
        return StyleGrid(names, cells, {f"d{i}": "x" for i in range(n)})

    def test_identical_series_merge_at_zero(self):
        rng = random.Random(8)
        base = [rng.random() + 0.5 for _ in range(12)]
        other = [rng.random() + 0.5 for _ in range(12)]
        grid = self._grid_from_series({"a": base, "b": base, "c": other})
        dendrogram = cluster_styles(grid)
        first = dendrogram.merges[0]
        assert {dendrogram.leaves[first[0]], dendrogram.leaves[first[1]]} == {"a", "b"}
        assert first[2] == pytest.approx(0.0, abs=1e-9)

    def test_correlated_pair_merges_first(self):
        rng = random.Random(9)
        s1 = [rng.random() + 1 for _ in range(40)]
        s2 = [v + rng.gauss(0, 0.01) for v in s1]  # corr ~ 0.99
        s3 = [rng.random() + 1 for _ in range(40)]
        # independent oracle: direct correlation computation
        corr = np.corrcoef(np.array([s1, s2, s3]))
        assert corr[0, 1] > max(corr[0, 2], corr[1, 2])
        grid = self._grid_from_series({"s1": s1, "s2": s2, "s3": s3})
        dendrogram = cluster_styles(grid)
        first = dendrogram.merges[0]
        names = {dendrogram.leaves[first[0]], dendrogram.leaves[first[1]]}
        assert names == {"s1", "s2"}

    def test_comoving_synonyms_share_subtree(self):
        rng = random.Random(10)
        driver = [rng.random() + 1 for _ in range(60)]
        series = {
            "warm": [v + rng.gauss(0, 0.02) for v in driver],
            "caring": [v + rng.gauss(0, 0.02) for v in driver],
            "noise1": [rng.random() + 1 for _ in range(60)],
            "noise2": [rng.random() + 1 for _ in range(60)],
        }
        grid = self._grid_from_series(series)
        dendrogram = cluster_styles(grid)
        first_height = dendrogram.merges[0][2]
        members = dendrogram.flat_cluster_containing("warm", first_height)
        assert members == {"warm", "caring"}

    def test_constant_style_isolated_with_warning(self):
        grid = StyleGrid(
            ["flat", "x", "y"],
            {("t", "d0"): [[0.2, 0.5, 0.3]], ("t", "d1"): [[0.2, 0.3, 0.5]],
             ("t", "d2"): [[0.2, 0.4, 0.4]]},
            {f"d{i}": "x" for i in range(3)})
        with pytest.warns(UserWarning, match="constant"):
            dendrogram = cluster_styles(grid)
        assert dendrogram.isolated == ("flat",)
        assert dendrogram.flat_cluster_containing("flat", 10.0) == {"flat"}

    def test_average_linkage_matches_direct_recomputation(self):
        # Oracle: naive agglomeration recomputing mean pairwise distance
        # between clusters from the original matrix at every step.
        rng = random.Random(11)
        S, N = 6, 30
        data = [[rng.random() for _ in range(S)] for _ in range(N)]
        data = [[v / sum(row) for v in row] for row in data]

        corr = np.corrcoef(np.array(data).T)
        dist = 1 - corr

        clusters = {i: [i] for i in range(S)}
        next_id = S
        oracle_merges = []
        while len(clusters) > 1:
            best = None
            for a in sorted(clusters):
                for b in sorted(clusters):
                    if a >= b:
                        continue
                    d_ab = float(np.mean([dist[i, j] for i in clusters[a]
                                          for j in clusters[b]]))
                    if best is None or d_ab < best[0] or (
                            d_ab == best[0] and (a, b) < best[1:]):
                        best = (d_ab, a, b)
            d_ab, a, b = best
            clusters[next_id] = clusters.pop(a) + clusters.pop(b)
            oracle_merges.append((a, b, d_ab))
            next_id += 1

        grid = StyleGrid([f"s{k}" for k in range(S)],
                         {("t", f"d{i}"): [row] for i, row in enumerate(data)},
                         {f"d{i}": "x" for i in range(N)})
        dendrogram = cluster_styles(grid)
        assert len(dendrogram.merges) == len(oracle_merges)
        for got, want in zip(dendrogram.merges, oracle_merges):
            assert got[:2] == want[:2]
            assert got[2] == pytest.approx(want[2], abs=1e-9)

    def test_too_small_inputs_rejected(self):
        grid = StyleGrid(["only"], {("t", "d0"): [[1.0]], ("t", "d1"): [[1.0]]},
                         {"d0": "x", "d1": "x"})
        with pytest.raises(ValueError):
            cluster_styles(grid)
