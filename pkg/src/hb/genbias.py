"""Style-based generation bias.

Ingests per-response style probability vectors, indexes them by (template,
descriptor), and measures how much the mean style profile varies across
descriptors: the full metric sums per-style population variances across
descriptors and averages over templates; the two per-cluster variants
restrict the style sum to a cluster, either summing variances of member
styles or summing member probabilities before taking the variance. All
reported values are scaled by 1000.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import JoinError, SchemaError
from .jsonl import read_jsonl

STYLE_SUM_TOLERANCE = 1e-4


@dataclass(frozen=True)
class ClusterSpec:
    name: str
    member_styles: tuple

    @classmethod
    def from_record(cls, rec):
        return cls(name=rec["name"], member_styles=tuple(rec["styles"]))


def load_cluster_specs(path):
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    clusters = [ClusterSpec.from_record(rec) for rec in data["clusters"]]
    seen = set()
    for spec in clusters:
        overlap = seen & set(spec.member_styles)
        if overlap:
            raise SchemaError(f"style {sorted(overlap)} in more than one cluster",
                              path=path)
        seen |= set(spec.member_styles)
    return clusters


def load_style_manifest(path):
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    names = data["styles"] if isinstance(data, dict) else data
    if len(set(names)) != len(names):
        raise SchemaError("duplicate style names in manifest", path=path)
    return tuple(names)


def normalize_style_vector(probs, style_count, where=""):
    """Validate and renormalize one probability vector to sum exactly 1."""
    if len(probs) != style_count:
        raise SchemaError(
            f"{where}style vector has length {len(probs)}, expected {style_count}")
    arr = np.asarray(probs, dtype=float)
    if np.any(arr < 0) or np.any(arr > 1):
        raise ValueError(f"{where}style probabilities must lie in [0, 1]")
    total = float(arr.sum())
    if abs(total - 1.0) > STYLE_SUM_TOLERANCE:
        raise ValueError(
            f"{where}style vector sums to {total:.6f}, expected 1 +/- "
            f"{STYLE_SUM_TOLERANCE}")
    return arr / total


class StyleGrid:
    """Per-response style vectors indexed by (template_id, descriptor)."""

    def __init__(self, manifest, cells, descriptor_axis, response_ids=None):
        self.manifest = tuple(manifest)
        self.cells = {key: np.asarray(vecs, dtype=float)
                      for key, vecs in cells.items()}
        self.descriptor_axis = dict(descriptor_axis)
        self.response_ids = {key: tuple(ids) for key, ids in (response_ids or {}).items()}
        for key, block in self.cells.items():
            if block.ndim != 2 or block.shape[1] != len(self.manifest):
                raise ValueError(f"cell {key}: expected (N, {len(self.manifest)}) block")

    @property
    def style_count(self):
        return len(self.manifest)

    def templates(self):
        return sorted({t for t, _ in self.cells})

    def descriptors(self):
        return sorted({d for _, d in self.cells})

    def cell_count(self, template_id, descriptor):
        block = self.cells.get((template_id, descriptor))
        return 0 if block is None else block.shape[0]

    def style_index(self, name):
        try:
            return self.manifest.index(name)
        except ValueError:
            raise KeyError(f"style not in manifest: {name!r}") from None

    def filter_axis(self, axis):
        keep = {d for d, a in self.descriptor_axis.items() if a == axis}
        cells = {(t, d): block for (t, d), block in self.cells.items() if d in keep}
        rids = {key: ids for key, ids in self.response_ids.items() if key in cells}
        return StyleGrid(self.manifest, cells,
                         {d: axis for d in keep}, rids)

    def iter_responses(self):
        """Deterministic (template, descriptor, index, response_id, vector)."""
        for (t, d) in sorted(self.cells):
            block = self.cells[(t, d)]
            ids = self.response_ids.get((t, d), tuple(None for _ in range(block.shape[0])))
            for i in range(block.shape[0]):
                yield t, d, i, ids[i], block[i]


def ingest_style_vectors(styles_source, responses_source, dataset, manifest):
    """Join style records to responses to sentences and build a StyleGrid.

    styles records: {response_id, probs}; responses: {response_id,
    sentence_id, ...}; dataset: sentences file or preloaded id -> record map;
    manifest: style-name list or path to one.
    """
    if not isinstance(manifest, (list, tuple)):
        manifest = load_style_manifest(manifest)
    manifest = tuple(manifest)

    if isinstance(dataset, dict):
        sentence_index = dataset
    else:
        sentence_index = {rec["id"]: rec for _, rec in read_jsonl(dataset)}

    response_meta = {}
    contexts = {}
    for line_no, rec in read_jsonl(responses_source):
        rid = rec.get("response_id")
        if rid is None:
            raise JoinError(f"{responses_source}:{line_no}: missing response_id")
        if rid in response_meta:
            raise JoinError(f"{responses_source}:{line_no}: duplicate response_id {rid!r}")
        sid = rec.get("sentence_id")
        meta = sentence_index.get(sid)
        if meta is None:
            raise JoinError(
                f"{responses_source}:{line_no}: response {rid!r} references "
                f"unknown sentence_id {sid!r}")
        response_meta[rid] = meta
        if "context" in rec:
            contexts[rid] = rec["context"]

    cells = {}
    cell_ids = {}
    descriptor_axis = {}
    seen = set()
    for line_no, rec in read_jsonl(styles_source):
        rid = rec.get("response_id")
        if rid is None:
            raise JoinError(f"{styles_source}:{line_no}: missing response_id")
        if rid in seen:
            raise JoinError(f"{styles_source}:{line_no}: duplicate response_id {rid!r}")
        seen.add(rid)
        meta = response_meta.get(rid)
        if meta is None:
            raise JoinError(
                f"{styles_source}:{line_no}: style record references unknown "
                f"response_id {rid!r}")
        vec = normalize_style_vector(rec.get("probs", []), len(manifest),
                                     where=f"{styles_source}:{line_no}: ")
        key = (meta["template_id"], meta["descriptor_text"])
        cells.setdefault(key, []).append(vec)
        cell_ids.setdefault(key, []).append(rid)
        descriptor_axis[meta["descriptor_text"]] = meta["axis"]

    grid = StyleGrid(manifest, cells, descriptor_axis, cell_ids)
    grid.contexts = contexts
    return grid


@dataclass(frozen=True)
class StyleProfiles:
    templates: tuple
    descriptors: tuple
    cell_means: dict        # (template_id, descriptor) -> vector
    descriptor_means: dict  # descriptor -> vector (mean of its cell means)
    global_mean: np.ndarray
    missing_cells: tuple = ()


def mean_style_profiles(grid):
    """Unweighted cell means, per-descriptor means, and the global mean.

    Cells with no responses are excluded from the affected averages and
    reported as coverage warnings.
    """
    templates = grid.templates()
    descriptors = grid.descriptors()
    if not templates or not descriptors:
        raise ValueError("empty style grid")

    cell_means = {}
    missing = []
    for t in templates:
        for d in descriptors:
            block = grid.cells.get((t, d))
            if block is None or block.shape[0] == 0:
                missing.append((t, d))
            else:
                cell_means[(t, d)] = block.mean(axis=0)
    if missing:
        warnings.warn(
            f"style grid coverage: {len(missing)} of "
            f"{len(templates) * len(descriptors)} cells have no responses")

    descriptor_means = {}
    for d in descriptors:
        rows = [cell_means[(t, d)] for t in templates if (t, d) in cell_means]
        descriptor_means[d] = np.mean(rows, axis=0)
    global_mean = np.mean(list(descriptor_means.values()), axis=0)
    return StyleProfiles(templates=tuple(templates), descriptors=tuple(descriptors),
                         cell_means=cell_means, descriptor_means=descriptor_means,
                         global_mean=global_mean, missing_cells=tuple(missing))


def _resolve_cluster(grid, cluster):
    indices = [grid.style_index(name) for name in cluster.member_styles]
    if len(set(indices)) != len(indices):
        raise ValueError(f"cluster {cluster.name!r} repeats a style")
    return indices


def _per_template_matrices(grid, profiles=None):
    """For each template: (descriptor list, D_t x S matrix of cell means)."""
    profiles = profiles or mean_style_profiles(grid)
    out = []
    for t in profiles.templates:
        present = [d for d in profiles.descriptors if (t, d) in profiles.cell_means]
        matrix = np.stack([profiles.cell_means[(t, d)] for d in present])
        out.append((t, present, matrix))
    return out


def _warn_if_degenerate(present, template_id):
    if len(present) < 2:
        warnings.warn(
            f"template {template_id!r} has a single descriptor; its variance "
            f"contribution is 0")


def full_gen_bias(grid, profiles=None):
    """Across-descriptor variance of mean style profiles, summed over styles,
    averaged over templates, times 1000."""
    total = 0.0
    per_template = _per_template_matrices(grid, profiles)
    for t, present, matrix in per_template:
        _warn_if_degenerate(present, t)
        total += matrix.var(axis=0).sum()
    return float(1000.0 * total / len(per_template))


def partial_gen_bias(grid, cluster, profiles=None):
    """Contribution of one style cluster: the style sum is restricted to the
    cluster's members."""
    indices = _resolve_cluster(grid, cluster)
    total = 0.0
    per_template = _per_template_matrices(grid, profiles)
    for t, present, matrix in per_template:
        _warn_if_degenerate(present, t)
        total += matrix[:, indices].var(axis=0).sum()
    return float(1000.0 * total / len(per_template))


def summed_cluster_gen_bias(grid, cluster, profiles=None):
    """Sum member-style probabilities per (template, descriptor) first, then
    take the across-descriptor variance."""
    indices = _resolve_cluster(grid, cluster)
    total = 0.0
    per_template = _per_template_matrices(grid, profiles)
    for t, present, matrix in per_template:
        _warn_if_degenerate(present, t)
        total += matrix[:, indices].sum(axis=1).var()
    return float(1000.0 * total / len(per_template))


def axis_filtered_fgb(grid, axis):
    """Full metric restricted to descriptors of one axis."""
    sub = grid.filter_axis(axis)
    if not sub.cells:
        raise ValueError(f"no descriptors with axis {axis!r} in grid")
    return full_gen_bias(sub)


@dataclass(frozen=True)
class GenBiasReport:
    fgb_x1000: float
    per_cluster: dict = field(default_factory=dict)  # name -> (pgb, scgb)
    axis_filter: str = ""


def build_gen_bias_report(grid, clusters=(), axis=None):
    sub = grid.filter_axis(axis) if axis else grid
    profiles = mean_style_profiles(sub)
    per_cluster = {}
    for cluster in clusters:
        per_cluster[cluster.name] = (
            partial_gen_bias(sub, cluster, profiles),
            summed_cluster_gen_bias(sub, cluster, profiles),
        )
    return GenBiasReport(fgb_x1000=full_gen_bias(sub, profiles),
                         per_cluster=per_cluster, axis_filter=axis or "")


# ---------------------------------------------------------------------------
# Agglomerative clustering of styles

@dataclass(frozen=True)
class Dendrogram:
    leaves: tuple           # style names, leaf node k is leaves[k]
    merges: tuple           # (node_a, node_b, height); merge k creates node len(leaves)+k
    isolated: tuple = ()    # constant styles excluded from clustering

    def flat_cluster_containing(self, style_name, height_threshold):
        """Members of the cluster holding style_name after applying every
        merge at height <= height_threshold."""
        if style_name in self.isolated:
            return {style_name}
        members = {i: {name} for i, name in enumerate(self.leaves)}
        next_id = len(self.leaves)
        for a, b, height in self.merges:
            if height <= height_threshold and a in members and b in members:
                members[next_id] = members.pop(a) | members.pop(b)
            next_id += 1
        for group in members.values():
            if style_name in group:
                return group
        raise KeyError(f"style not in dendrogram: {style_name!r}")


def cluster_styles(grid, linkage="average", distance="pearson"):
    """Hierarchically cluster styles by the correlation of their probability
    series across all responses (average linkage over 1 - Pearson r).

    Styles whose series is constant have no defined correlation and are
    returned as isolated leaves with a warning.
    """
    if linkage != "average":
        raise ValueError(f"unsupported linkage: {linkage}")
    if distance != "pearson":
        raise ValueError(f"unsupported distance: {distance}")
    vectors = [vec for *_ignored, vec in grid.iter_responses()]
    if len(vectors) < 2 or grid.style_count < 2:
        raise ValueError("need >= 2 styles and >= 2 responses to cluster")
    data = np.stack(vectors)  # responses x styles

    constant = data.max(axis=0) == data.min(axis=0)
    isolated = tuple(grid.manifest[k] for k in range(grid.style_count)
                     if constant[k])
    if isolated:
        warnings.warn(
            f"styles with constant probability series are isolated: "
            f"{', '.join(isolated)}")
    active = [k for k in range(grid.style_count) if not constant[k]]
    names = tuple(grid.manifest[k] for k in active)
    if len(active) < 2:
        return Dendrogram(leaves=names, merges=(), isolated=isolated)

    corr = np.corrcoef(data[:, active].T)
    dist = 1.0 - corr
    np.fill_diagonal(dist, 0.0)

    # Average linkage: cluster distance is the mean pairwise leaf distance,
    # maintained with the weighted Lance-Williams update.
    clusters = {i: 1 for i in range(len(active))}  # node id -> leaf count
    dmat = {(i, j): dist[i, j] for i in range(len(active))
            for j in range(i + 1, len(active))}
    merges = []
    next_id = len(active)
    while len(clusters) > 1:
        (a, b), height = min(dmat.items(), key=lambda kv: (kv[1], kv[0]))
        size_a, size_b = clusters.pop(a), clusters.pop(b)
        for c in clusters:
            da = dmat.pop((min(a, c), max(a, c)))
            db = dmat.pop((min(b, c), max(b, c)))
            dmat[(min(next_id, c), max(next_id, c))] = (
                (size_a * da + size_b * db) / (size_a + size_b))
        del dmat[(a, b)]
        clusters[next_id] = size_a + size_b
        merges.append((a, b, height))
        next_id += 1

    return Dendrogram(leaves=names, merges=tuple(merges), isolated=isolated)
