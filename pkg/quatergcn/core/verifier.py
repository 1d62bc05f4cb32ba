"""Run the Laplacian property suites over seeded graph corpora."""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from rich.table import Table

from ..utils.formats import parse_qmatrix
from ..utils.logger import get_logger
from ..utils.rng import substream
from .config import DsbmConfig, VerifierTolerances
from .errors import PropertyError
from .graph import Digraph, canonical_adjacency, generate_dsbm, reconstruct_adjacency
from .laplacian import (
    LaplacianBundle,
    build_quaternionic,
    classical_laplacian,
    sign_magnetic_laplacian,
    sign_magnetic_decomposition,
)
from .quaternion import QMatrix, hermitian_deviation, hermitian_eig

logger = get_logger("verifier")

PROPERTIES = ("thm1", "thm2", "thm3", "psd", "lambda_max", "hermitian", "orthogonality", "reconstruction")
REGIMES = ("undirected", "symmetric-digon", "signed-digon", "dsbm")

PASS, FAIL, SKIP = "pass", "fail", "skip"


@dataclass(frozen=True)
class Outcome:
    status: str
    violation: float = 0.0


def _compare(difference: float, tol: float) -> Outcome:
    return Outcome(PASS if difference <= tol else FAIL, difference)


def _max_abs(*arrays: np.ndarray) -> float:
    return float(max((np.max(np.abs(a), initial=0.0) for a in arrays), default=0.0))


def _has_asymmetric_digon(a: np.ndarray) -> bool:
    return bool(np.any((a != 0) & (a.T != 0) & (a != a.T)))


def _has_symmetric_digon(a: np.ndarray) -> bool:
    return bool(np.any((a != 0) & (a == a.T)))


def _has_mixed_sign_digon(a: np.ndarray) -> bool:
    return bool(np.any(a * a.T < 0))


def check_thm1(g: Digraph, bundle: LaplacianBundle, tol: VerifierTolerances) -> Outcome:
    a = g.adjacency
    if not np.array_equal(a, a.T) or np.any(a < 0) or np.any(bundle.Dbar == 0):
        return Outcome(SKIP)
    lq = bundle.Lq
    return _compare(_max_abs(lq.comp0 - classical_laplacian(g), lq.comp1, lq.comp2, lq.comp3), tol.exact)


def check_thm2(g: Digraph, bundle: LaplacianBundle, tol: VerifierTolerances) -> Outcome:
    if _has_asymmetric_digon(g.adjacency):
        return Outcome(SKIP)
    lsigma = sign_magnetic_laplacian(g).Lsigma
    lq = bundle.Lq
    return _compare(_max_abs(lq.comp0 - lsigma.real, lq.comp1 - lsigma.imag, lq.comp2, lq.comp3), tol.algebraic)


def check_thm3(g: Digraph, bundle: LaplacianBundle, tol: VerifierTolerances) -> Outcome:
    if _has_symmetric_digon(g.adjacency):
        return Outcome(SKIP)
    return _compare(bundle.Hq.max_abs_diff(sign_magnetic_decomposition(g)), tol.algebraic)


def _extreme_eigenvalues(q: QMatrix) -> Tuple[float, float]:
    values = hermitian_eig(q, tol=1e-9 * max(q.norm(), 1.0)).eigenvalues
    return float(values[0]), float(values[-1])


def check_psd(g: Digraph, bundle: LaplacianBundle, tol: VerifierTolerances) -> Outcome:
    # the bound is only provable when both directions of every digon share a sign
    if _has_mixed_sign_digon(g.adjacency):
        return Outcome(SKIP)
    worst = 0.0
    for q in (bundle.Lq, bundle.Lq_norm):
        if q is None:
            continue
        lowest, _ = _extreme_eigenvalues(q)
        worst = max(worst, -lowest / max(q.norm(), 1.0))
    return _compare(worst, tol.spectral)


def check_lambda_max(g: Digraph, bundle: LaplacianBundle, tol: VerifierTolerances) -> Outcome:
    if bundle.Lq_norm is None or _has_mixed_sign_digon(g.adjacency):
        return Outcome(SKIP)
    _, highest = _extreme_eigenvalues(bundle.Lq_norm)
    return _compare(max(0.0, highest - 2.0), tol.spectral)


def check_hermitian(g: Digraph, bundle: LaplacianBundle, tol: VerifierTolerances) -> Outcome:
    worst = max(hermitian_deviation(q)[0] for q in (bundle.Hq, bundle.Lq))
    if bundle.Lq_norm is not None:
        worst = max(worst, hermitian_deviation(bundle.Lq_norm)[0])
    return _compare(worst, tol.hermitian)


def check_orthogonality(g: Digraph, bundle: LaplacianBundle, tol: VerifierTolerances) -> Outcome:
    r, i1, i2, i3 = bundle.Hq.components
    groups = (r != 0).astype(int) + (i1 != 0) + ((i2 != 0) | (i3 != 0))
    np.fill_diagonal(groups, 0)
    offending = int(np.count_nonzero(groups > 1))
    return Outcome(PASS if offending == 0 else FAIL, float(offending))


def check_reconstruction(g: Digraph, bundle: LaplacianBundle, tol: VerifierTolerances) -> Outcome:
    recovered = reconstruct_adjacency(bundle.Hq)
    return _compare(_max_abs(recovered - canonical_adjacency(g.adjacency)), tol.exact)


CHECKS: Dict[str, Callable[[Digraph, LaplacianBundle, VerifierTolerances], Outcome]] = {
    "thm1": check_thm1,
    "thm2": check_thm2,
    "thm3": check_thm3,
    "psd": check_psd,
    "lambda_max": check_lambda_max,
    "hermitian": check_hermitian,
    "orthogonality": check_orthogonality,
    "reconstruction": check_reconstruction,
}


def parse_properties(names: Optional[Iterable[str]]) -> List[str]:
    """Validate property names; ``None`` or ``all`` selects every property."""
    if names is None:
        return list(PROPERTIES)
    selected = [name.strip() for name in names if name.strip()]
    if selected == ["all"]:
        return list(PROPERTIES)
    unknown = [name for name in selected if name not in CHECKS]
    if unknown:
        raise PropertyError(f"unknown propert{'y' if len(unknown) == 1 else 'ies'}: {', '.join(unknown)} "
                            f"(choose from {', '.join(PROPERTIES)})")
    return [name for name in PROPERTIES if name in selected]


def dsbm_configs(count: int, seed_base: int = 0, max_nodes: int = 40) -> List[DsbmConfig]:
    """Small generator configurations for the ``dsbm`` regime, one per seed.

    Cluster count, size, direction bias, digon share and signedness are drawn
    per seed; graphs stay within ``max_nodes`` nodes whenever it is at least 8.
    """
    configs = []
    for seed in range(seed_base, seed_base + count):
        rng = substream(seed, "verify-dsbm")
        clusters = int(rng.integers(2, 5))
        per_cluster = int(rng.integers(2, max(2, max_nodes // clusters) + 1))
        configs.append(
            DsbmConfig(
                nodes_per_cluster=per_cluster,
                clusters=clusters,
                intra_prob=0.5,
                inter_prob=0.3,
                direction_prob=float(rng.random()),
                digon_fraction=float(rng.random()),
                signed=bool(rng.random() < 0.5),
                seed=seed,
            )
        )
    return configs


def regime_graph(regime: str, seed: int, max_nodes: int = 40) -> Digraph:
    """Random test graph of a named regime.

    ``undirected``: symmetric positive integer weights. ``symmetric-digon``:
    single edges and equal-weight digons. ``signed-digon``: signed weights,
    mostly asymmetric digons, one sign per node pair. ``dsbm``: a generated
    graph from :func:`dsbm_configs`.
    """
    if regime not in REGIMES:
        raise PropertyError(f"unknown regime '{regime}' (choose from {', '.join(REGIMES)})")
    if regime == "dsbm":
        return generate_dsbm(dsbm_configs(1, seed, max_nodes)[0])
    rng = substream(seed, "verify", REGIMES.index(regime))
    n = int(rng.integers(4, max_nodes + 1))

    pattern = np.zeros((n, n), dtype=bool)
    order = rng.permutation(n)
    pattern[order[:-1], order[1:]] = True
    pattern |= rng.random((n, n)) < 0.15
    us, vs = np.nonzero(np.triu(pattern | pattern.T, k=1))

    w1 = rng.integers(1, 6, size=us.size).astype(np.float64)
    w2 = rng.integers(1, 6, size=us.size).astype(np.float64)
    kind = rng.random(us.size)
    forward = rng.random(us.size) < 0.5
    a = np.zeros((n, n))

    if regime == "undirected":
        a[us, vs] = w1
        a[vs, us] = w1
    elif regime == "symmetric-digon":
        digon = kind < 0.4
        a[us[digon], vs[digon]] = w1[digon]
        a[vs[digon], us[digon]] = w1[digon]
        out, back = ~digon & forward, ~digon & ~forward
        a[us[out], vs[out]] = w1[out]
        a[vs[back], us[back]] = w1[back]
    else:
        sign = np.where(rng.random(us.size) < 0.5, -1.0, 1.0)
        asym = kind < 0.55
        sym = (kind >= 0.55) & (kind < 0.7)
        single = kind >= 0.7
        a[us[asym], vs[asym]] = sign[asym] * w1[asym]
        a[vs[asym], us[asym]] = sign[asym] * w2[asym]
        a[us[sym], vs[sym]] = sign[sym] * w1[sym]
        a[vs[sym], us[sym]] = sign[sym] * w1[sym]
        out, back = single & forward, single & ~forward
        a[us[out], vs[out]] = sign[out] * w1[out]
        a[vs[back], us[back]] = sign[back] * w1[back]
    return Digraph(a)


@dataclass(frozen=True)
class CorpusMember:
    """Recipe for one corpus graph; rebuilt inside worker processes."""

    seed: int
    regime: Optional[str] = None
    dsbm: Optional[DsbmConfig] = None
    max_nodes: int = 40

    def build(self) -> Digraph:
        if self.dsbm is not None:
            return generate_dsbm(self.dsbm)
        return regime_graph(self.regime or "undirected", self.seed, self.max_nodes)


def _verify_member(args: Tuple[CorpusMember, Sequence[str], VerifierTolerances]) -> Dict[str, Outcome]:
    member, properties, tol = args
    g = member.build()
    bundle = build_quaternionic(g)
    return {name: CHECKS[name](g, bundle, tol) for name in properties}


@dataclass
class PropertyReport:
    name: str
    passed: int = 0
    failed: int = 0
    skipped: int = 0
    worst: float = 0.0
    failing_seeds: List[int] = field(default_factory=list)

    @property
    def status(self) -> str:
        if self.failed:
            return FAIL
        return PASS if self.passed else SKIP

    def record(self, seed: int, outcome: Outcome) -> None:
        if outcome.status == SKIP:
            self.skipped += 1
            return
        self.worst = max(self.worst, outcome.violation)
        if outcome.status == PASS:
            self.passed += 1
        else:
            self.failed += 1
            self.failing_seeds.append(seed)


@dataclass
class VerificationReport:
    """Per-property counts; ``passed + failed + skipped`` equals the corpus size."""

    corpus: str
    size: int
    properties: Dict[str, PropertyReport]

    @property
    def ok(self) -> bool:
        return all(p.failed == 0 for p in self.properties.values())

    def to_key_value(self) -> str:
        lines = [f"corpus={self.corpus} size={self.size}"]
        for p in self.properties.values():
            seeds = ",".join(str(s) for s in p.failing_seeds)
            lines.append(
                f"property={p.name} status={p.status} passed={p.passed} failed={p.failed} "
                f"skipped={p.skipped} worst={p.worst!r} failing_seeds={seeds}"
            )
        lines.append(f"result={'pass' if self.ok else 'fail'}")
        return "\n".join(lines) + "\n"

    def to_table(self) -> Table:
        table = Table(title=f"Verification: {self.corpus} ({self.size} graphs)")
        table.add_column("Property", style="cyan")
        table.add_column("Status")
        table.add_column("Passed", justify="right")
        table.add_column("Failed", justify="right")
        table.add_column("Skipped", justify="right")
        table.add_column("Worst violation", justify="right")
        table.add_column("Failing seeds")
        colours = {PASS: "green", FAIL: "red", SKIP: "yellow"}
        for p in self.properties.values():
            table.add_row(
                p.name,
                f"[{colours[p.status]}]{p.status}[/{colours[p.status]}]",
                str(p.passed),
                str(p.failed),
                str(p.skipped),
                f"{p.worst:.3g}",
                ",".join(str(s) for s in p.failing_seeds[:10]),
            )
        return table


def _run(
    corpus: str,
    members: Sequence[CorpusMember],
    properties: Optional[Iterable[str]],
    tolerances: Optional[VerifierTolerances],
    workers: int,
) -> VerificationReport:
    selected = parse_properties(properties)
    tol = tolerances or VerifierTolerances()
    jobs = [(member, selected, tol) for member in members]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_verify_member, jobs))
    else:
        outcomes = [_verify_member(job) for job in jobs]

    reports = {name: PropertyReport(name) for name in selected}
    for member, result in zip(members, outcomes):
        for name, outcome in result.items():
            reports[name].record(member.seed, outcome)

    report = VerificationReport(corpus, len(members), reports)
    for p in reports.values():
        if p.failed:
            logger.warning("property_failed", property=p.name, failed=p.failed, seeds=p.failing_seeds[:10])
    logger.info("corpus_verified", corpus=corpus, size=len(members), ok=report.ok)
    return report


def verify_corpus(
    configs: Sequence[DsbmConfig],
    properties: Optional[Iterable[str]] = None,
    tolerances: Optional[VerifierTolerances] = None,
    workers: int = 1,
) -> VerificationReport:
    """Verify every generated DSBM graph against the selected properties."""
    members = [CorpusMember(seed=cfg.seed, dsbm=cfg) for cfg in configs]
    seeds = [cfg.seed for cfg in configs]
    corpus = f"dsbm:seeds={min(seeds, default=0)}..{max(seeds, default=0)}"
    return _run(corpus, members, properties, tolerances, workers)


def verify_regime(
    regime: str,
    count: int = 100,
    seed_base: int = 0,
    properties: Optional[Iterable[str]] = None,
    tolerances: Optional[VerifierTolerances] = None,
    workers: int = 1,
    max_nodes: int = 40,
) -> VerificationReport:
    """Verify ``count`` random graphs of a named regime, seeds ``seed_base ..``."""
    if regime not in REGIMES:
        raise PropertyError(f"unknown regime '{regime}' (choose from {', '.join(REGIMES)})")
    if regime == "dsbm":
        return verify_corpus(dsbm_configs(count, seed_base, max_nodes), properties, tolerances, workers)
    members = [CorpusMember(seed=seed_base + i, regime=regime, max_nodes=max_nodes) for i in range(count)]
    corpus = f"{regime}:seeds={seed_base}..{seed_base + count - 1}"
    return _run(corpus, members, properties, tolerances, workers)


def verify_graph(
    g: Digraph,
    properties: Optional[Iterable[str]] = None,
    tolerances: Optional[VerifierTolerances] = None,
    label: str = "input",
) -> VerificationReport:
    """Verify a single loaded graph."""
    selected = parse_properties(properties)
    tol = tolerances or VerifierTolerances()
    bundle = build_quaternionic(g)
    reports = {name: PropertyReport(name) for name in selected}
    for name in selected:
        reports[name].record(0, CHECKS[name](g, bundle, tol))
    return VerificationReport(label, 1, reports)


@dataclass(frozen=True)
class MatrixCheck:
    path: str
    deviation: float
    index: Optional[Tuple[int, int]]
    tol: float

    @property
    def ok(self) -> bool:
        return self.deviation <= self.tol

    def to_key_value(self) -> str:
        where = "" if self.index is None else f"{self.index[0]},{self.index[1]}"
        status = "pass" if self.ok else "fail"
        return (
            f"matrix={self.path}\nproperty=hermitian status={status} "
            f"deviation={self.deviation!r} index={where}\nresult={status}\n"
        )


def verify_matrix_file(path: Path, tol: float = 0.0) -> MatrixCheck:
    """Check that a stored quaternion matrix is Hermitian and locate the worst entry."""
    q = parse_qmatrix(Path(path).read_text(encoding="utf-8"))
    deviation, index = hermitian_deviation(q)
    return MatrixCheck(str(path), deviation, index if deviation > tol else None, tol)
