"""Caption and embedding evaluation: cosine similarities, Frechet distance,
retrieval recall, and lexical overlap.

All metrics operate on caller-supplied embeddings, so any encoder can sit
behind them; the batch evaluator wires in the package's toy text embedder by
default.  Batch evaluation consumes JSONL records (one object per line with
``id`` and ``caption``, optionally ``view_embeddings``) and emits a single
JSON report.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .latents import embed_text

STOPWORDS = frozenset({"a", "an", "the", "of", "with", "and", "is", "it"})

_WORD_RE = re.compile(r"[a-z0-9]+")


def cosine_similarity(a, b) -> float:
    """Standard cosine in [-1, 1]; a pair with any zero vector scores 0."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("cosine_similarity needs two equal-length vectors")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def multiview_text_similarity(view_embeddings, text_embedding) -> float:
    """Mean cosine between each view embedding and the text embedding."""
    views = np.asarray(view_embeddings, dtype=np.float64)
    if views.ndim != 2 or views.shape[0] == 0:
        raise ValueError("view embeddings must be a nonempty (n, d) array")
    return float(np.mean([cosine_similarity(v, text_embedding) for v in views]))


def _psd_sqrt(mat: np.ndarray, clamp: float = 1e-10) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition.

    Negative eigenvalues are roundoff artifacts (magnitude below ~1e-10 for
    the covariance products built here) and clamp to 0; anything more
    negative means the input was not PSD.
    """
    sym = (mat + mat.T) / 2.0
    evals, evecs = np.linalg.eigh(sym)
    if evals.min() < -clamp * max(abs(evals.max()), 1.0):
        raise ValueError("matrix is not positive semidefinite")
    evals = np.clip(evals, 0.0, None)
    return (evecs * np.sqrt(evals)) @ evecs.T


def fid(a, b) -> float:
    """Frechet distance between Gaussian fits of two embedding sets.

    ||mu_a - mu_b||^2 + Tr(Sa + Sb - 2 (Sa^(1/2) Sb Sa^(1/2))^(1/2)) with
    population covariances; the cross term uses the symmetric PSD root so the
    result is real and nonnegative by construction.  Bit-identical inputs
    return exactly 0.
    """
    A = np.asarray(a, dtype=np.float64)
    B = np.asarray(b, dtype=np.float64)
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[1]:
        raise ValueError("embedding sets must be (n, d) with equal d")
    if A.shape[0] < 2 or B.shape[0] < 2:
        raise ValueError("each embedding set needs at least 2 vectors")
    if A.shape == B.shape and np.array_equal(A, B):
        return 0.0
    mu_a = A.mean(axis=0)
    mu_b = B.mean(axis=0)
    ca = A - mu_a
    cb = B - mu_b
    sigma_a = (ca.T @ ca) / A.shape[0]
    sigma_b = (cb.T @ cb) / B.shape[0]
    root_a = _psd_sqrt(sigma_a)
    inner = _psd_sqrt(root_a @ sigma_b @ root_a)
    val = float(np.sum((mu_a - mu_b) ** 2) + np.trace(sigma_a + sigma_b) - 2.0 * np.trace(inner))
    return max(val, 0.0)


def recall_at_k(queries, gallery, ground_truth: dict[int, int], ks) -> dict[int, float]:
    """Fraction of queries whose true gallery item ranks in the top k.

    Gallery items are ranked by descending cosine to the query; exact ties
    break toward the lower gallery index.
    """
    Q = np.asarray(queries, dtype=np.float64)
    G = np.asarray(gallery, dtype=np.float64)
    if Q.ndim != 2 or G.ndim != 2 or Q.shape[1] != G.shape[1]:
        raise ValueError("queries and gallery must be (n, d) with equal d")
    ks = sorted(int(k) for k in ks)
    if not ks or ks[0] < 1 or ks[-1] > G.shape[0]:
        raise ValueError("every k must satisfy 1 <= k <= gallery size")
    hits = {k: 0 for k in ks}
    for qi in range(Q.shape[0]):
        if qi not in ground_truth:
            raise KeyError(f"missing ground-truth entry for query {qi}")
        truth = ground_truth[qi]
        sims = np.array([cosine_similarity(Q[qi], g) for g in G])
        order = np.lexsort((np.arange(len(sims)), -sims))
        rank = int(np.flatnonzero(order == truth)[0])
        for k in ks:
            if rank < k:
                hits[k] += 1
    n = Q.shape[0]
    return {k: hits[k] / n for k in ks}


def _content_tokens(text: str) -> list[str]:
    return [t for t in _WORD_RE.findall(text.lower()) if t not in STOPWORDS]


def lexical_similarity(a: str, b: str) -> float:
    """Stopword-filtered bag-of-words F1 between two strings.

    Emptiness is judged after stopword filtering: both empty gives 1,
    exactly one empty gives 0.
    """
    ta = Counter(_content_tokens(a))
    tb = Counter(_content_tokens(b))
    if not ta and not tb:
        return 1.0
    if not ta or not tb:
        return 0.0
    overlap = sum((ta & tb).values())
    if overlap == 0:
        return 0.0
    precision = overlap / sum(ta.values())
    recall = overlap / sum(tb.values())
    return 2.0 * precision * recall / (precision + recall)


# ---------------------------------------------------------------------------
# batch evaluation over JSONL caption records
# ---------------------------------------------------------------------------

@dataclass
class MetricReport:
    clip_image_text: float | None
    clip_text_text: float
    fid: float
    recall_at: dict[int, float]
    lexical_sim: float

    def to_json_dict(self) -> dict:
        return {
            "clip_image_text": self.clip_image_text,
            "clip_text_text": self.clip_text_text,
            "fid": self.fid,
            "recall_at": {str(k): v for k, v in self.recall_at.items()},
            "lexical_sim": self.lexical_sim,
        }


def read_jsonl(path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def evaluate_captions(
    pred_records: list[dict],
    gt_records: list[dict],
    embedder=None,
    ks=(1, 5, 10),
    embed_seed: int = 0,
) -> MetricReport:
    """Score predicted captions against ground truth, paired by ``id``.

    ``embedder`` maps a caption string to a vector (defaults to the toy text
    embedder).  clip_image_text is the mean multi-view similarity between
    each prediction's ``view_embeddings`` and its caption embedding, and is
    None when no record carries view embeddings.
    """
    if embedder is None:
        def embedder(text):
            return embed_text(text, embed_seed)

    gt_by_id = {r["id"]: r for r in gt_records}
    pairs = [(p, gt_by_id[p["id"]]) for p in pred_records if p["id"] in gt_by_id]
    if not pairs:
        raise ValueError("no overlapping ids between prediction and ground-truth records")

    pred_vecs = np.array([embedder(p["caption"]) for p, _ in pairs])
    gt_vecs = np.array([embedder(g["caption"]) for _, g in pairs])

    text_text = float(np.mean([cosine_similarity(pv, gv) for pv, gv in zip(pred_vecs, gt_vecs)]))
    lex = float(np.mean([lexical_similarity(p["caption"], g["caption"]) for p, g in pairs]))

    ks = [k for k in ks if k <= gt_vecs.shape[0]]
    recall = (
        recall_at_k(pred_vecs, gt_vecs, {i: i for i in range(len(pairs))}, ks) if ks else {}
    )
    f = fid(pred_vecs, gt_vecs) if len(pairs) >= 2 else 0.0

    image_text_scores = []
    for p, _ in pairs:
        views = p.get("view_embeddings")
        if views:
            image_text_scores.append(multiview_text_similarity(views, embedder(p["caption"])))
    image_text = float(np.mean(image_text_scores)) if image_text_scores else None

    return MetricReport(
        clip_image_text=image_text,
        clip_text_text=text_text,
        fid=f,
        recall_at=recall,
        lexical_sim=lex,
    )
