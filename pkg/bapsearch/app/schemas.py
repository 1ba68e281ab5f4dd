from __future__ import annotations

from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

from .services.effects import RocCurve
from .services.equivalence import EquivalenceClass, Provenance
from .services.gaussian_model import Parameters
from .services.graph_core import GraphClass, MixedGraph
from .services.ricf_fit import DistrictTerm, FitResult
from .services.search import RestartTrace, SearchConfig, SearchResult

SCHEMA_VERSION = '1.0'


def _matrix(M: np.ndarray) -> List[List[float]]:
    return [[float(x) for x in row] for row in np.asarray(M)]


class GraphModel(BaseModel):
    d: int = Field(ge=0)
    directed: List[Tuple[int, int]] = Field(default_factory=list)
    bidirected: List[Tuple[int, int]] = Field(default_factory=list)

    @classmethod
    def from_graph(cls, g: MixedGraph) -> 'GraphModel':
        return cls(d=g.d, directed=sorted(g.directed), bidirected=sorted(g.bidirected))

    def to_graph(self) -> MixedGraph:
        return MixedGraph(self.d, frozenset(self.directed), frozenset(self.bidirected))


class ParametersModel(BaseModel):
    B: List[List[float]]
    Omega: List[List[float]]

    @classmethod
    def from_parameters(cls, theta: Parameters) -> 'ParametersModel':
        return cls(B=_matrix(theta.B), Omega=_matrix(theta.Omega))

    def to_parameters(self, g: MixedGraph) -> Parameters:
        return Parameters(g, np.array(self.B, dtype=float).reshape(g.d, g.d), np.array(self.Omega, dtype=float).reshape(g.d, g.d))


class DistrictTermModel(BaseModel):
    district: List[int]
    parents: List[int]
    loglik: float
    score: float
    converged: bool
    iterations: int

    @classmethod
    def from_term(cls, term: DistrictTerm) -> 'DistrictTermModel':
        return cls(
            district=list(term.district),
            parents=list(term.parents),
            loglik=term.loglik,
            score=term.score,
            converged=term.converged,
            iterations=term.iterations,
        )


class FitReport(BaseModel):
    schema_version: str = SCHEMA_VERSION
    kind: Literal['fit'] = 'fit'
    graph: GraphModel
    n: int
    loglik: float
    score: float
    converged: bool
    iterations: int
    parameters: ParametersModel
    districts: List[DistrictTermModel] = Field(default_factory=list)

    @classmethod
    def from_result(cls, result: FitResult) -> 'FitReport':
        return cls(
            graph=GraphModel.from_graph(result.graph),
            n=result.n,
            loglik=result.loglik,
            score=result.score,
            converged=result.converged,
            iterations=result.iterations,
            parameters=ParametersModel.from_parameters(result.theta_hat),
            districts=[DistrictTermModel.from_term(t) for t in result.per_district],
        )


class SearchSettings(BaseModel):
    restarts: int = Field(1, ge=1)
    max_in_degree: Optional[int] = Field(None, ge=0)
    graph_class: GraphClass = GraphClass.BAP
    neighbor_subset: Optional[int] = Field(None, ge=1)
    seed: Optional[int] = None
    forward_only: bool = False
    forward_restart: bool = False
    threads: int = Field(1, ge=1)

    @classmethod
    def from_config(cls, cfg: SearchConfig) -> 'SearchSettings':
        seed = cfg.seed if isinstance(cfg.seed, int) or cfg.seed is None else None
        return cls(
            restarts=cfg.restarts,
            max_in_degree=cfg.max_in_degree,
            graph_class=cfg.graph_class,
            neighbor_subset=cfg.neighbor_subset,
            seed=seed,
            forward_only=cfg.forward_only,
            forward_restart=cfg.forward_restart,
            threads=cfg.threads,
        )


class TraceStepModel(BaseModel):
    step: int
    elapsed: float
    score: float
    graph: GraphModel


class RestartTraceModel(BaseModel):
    index: int
    start: str
    error: Optional[str] = None
    steps: List[TraceStepModel] = Field(default_factory=list)

    @classmethod
    def from_trace(cls, trace: RestartTrace) -> 'RestartTraceModel':
        return cls(
            index=trace.index,
            start=trace.start,
            error=trace.error,
            steps=[
                TraceStepModel(step=s.step, elapsed=s.elapsed, score=s.score, graph=GraphModel.from_graph(s.graph))
                for s in trace.steps
            ],
        )


class SearchReport(BaseModel):
    schema_version: str = SCHEMA_VERSION
    kind: Literal['search'] = 'search'
    config: SearchSettings
    best: FitReport
    skipped_restarts: int = 0
    restarts: List[RestartTraceModel] = Field(default_factory=list)

    @classmethod
    def from_result(cls, result: SearchResult, cfg: SearchConfig) -> 'SearchReport':
        return cls(
            config=SearchSettings.from_config(cfg),
            best=FitReport.from_result(result.fit),
            skipped_restarts=result.trace.skipped,
            restarts=[RestartTraceModel.from_trace(r) for r in result.trace.restarts],
        )


class MemberModel(BaseModel):
    graph: GraphModel
    provenance: Provenance


class EquivalenceClassReport(BaseModel):
    schema_version: str = SCHEMA_VERSION
    kind: Literal['equivalence_class'] = 'equivalence_class'
    reference: GraphModel
    zeta: float
    epsilon: float
    members: List[MemberModel] = Field(default_factory=list)

    @classmethod
    def from_class(cls, ec: EquivalenceClass) -> 'EquivalenceClassReport':
        return cls(
            reference=GraphModel.from_graph(ec.reference),
            zeta=ec.zeta,
            epsilon=ec.epsilon,
            members=[MemberModel(graph=GraphModel.from_graph(g), provenance=ec.members[g]) for g in ec.graphs],
        )

    def to_class(self) -> EquivalenceClass:
        ec = EquivalenceClass(reference=self.reference.to_graph(), zeta=self.zeta, epsilon=self.epsilon)
        for m in self.members:
            ec.members[m.graph.to_graph()] = m.provenance
        return ec


class RocModel(BaseModel):
    fpr: List[float] = Field(default_factory=list)
    tpr: List[float] = Field(default_factory=list)
    auc: Optional[float] = Field(None, ge=0.0, le=1.0)
    positives: int = 0
    negatives: int = 0

    @classmethod
    def from_curve(cls, curve: RocCurve) -> 'RocModel':
        return cls(
            fpr=[float(x) for x in curve.fpr],
            tpr=[float(x) for x in curve.tpr],
            auc=curve.auc,
            positives=curve.positives,
            negatives=curve.negatives,
        )


class SimulationConfig(BaseModel):
    replicates: int = Field(20, ge=1)
    d: int = Field(8, ge=2)
    max_in_degree: Optional[int] = Field(2, ge=0)
    n: int = Field(1000, ge=2)
    restarts: int = Field(30, ge=1)
    epsilon: float = Field(1e-10, ge=0.0)
    seed: int = 0
    threads: int = Field(1, ge=1)
    standardize: bool = True
    forward_search: bool = True
    use_true_parameters: bool = False
    search_max_in_degree: Optional[int] = Field(None, ge=0)
    burn_in: Optional[int] = Field(None, ge=1)


class ReplicateReport(BaseModel):
    index: int
    error: Optional[str] = None
    truth: Optional[GraphModel] = None
    truth_parameters: Optional[ParametersModel] = None
    truth_score: Optional[float] = None
    estimate: Optional[GraphModel] = None
    estimate_score: Optional[float] = None
    skipped_restarts: int = 0
    truth_class: List[MemberModel] = Field(default_factory=list)
    estimate_class: List[MemberModel] = Field(default_factory=list)
    truth_bounds: List[List[float]] = Field(default_factory=list)
    estimate_bounds: List[List[float]] = Field(default_factory=list)
    failed_members: int = 0
    roc: Optional[RocModel] = None


class AverageRocModel(BaseModel):
    fpr: List[float]
    tpr: List[float]


class SimulationReport(BaseModel):
    schema_version: str = SCHEMA_VERSION
    kind: Literal['simulation'] = 'simulation'
    config: SimulationConfig
    replicates: List[ReplicateReport] = Field(default_factory=list)
    mean_auc: Optional[float] = Field(None, ge=0.0, le=1.0)
    auc_defined: int = 0
    failed_replicates: int = 0
    average_roc: Optional[AverageRocModel] = None


class CompareConfig(BaseModel):
    bap_restarts: int = Field(10, ge=1)
    dag_restarts: int = Field(10, ge=1)
    max_in_degree: Optional[int] = Field(None, ge=0)
    neighbor_subset: Optional[int] = Field(None, ge=1)
    log_transform: bool = False
    standardize: bool = True
    inject_best_dag: bool = True
    seed: Optional[int] = None
    threads: int = Field(1, ge=1)


class ComparisonReport(BaseModel):
    schema_version: str = SCHEMA_VERSION
    kind: Literal['comparison'] = 'comparison'
    dataset: str
    columns: List[str]
    n: int
    config: CompareConfig
    dag: SearchReport
    bap: SearchReport
    score_difference: float


REPORT_MODELS: Dict[str, type] = {
    'fit': FitReport,
    'search': SearchReport,
    'equivalence_class': EquivalenceClassReport,
    'simulation': SimulationReport,
    'comparison': ComparisonReport,
    'simulation_config': SimulationConfig,
}
