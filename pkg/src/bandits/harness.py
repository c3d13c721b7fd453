"""
Experiment orchestration.

An ExperimentConfig (JSON validated by pydantic) names an instance, a list of
policies, the horizon T and the replication count. Every (policy, run) cell
gets a fresh policy and its own random stream keyed by
(base_seed, policy_index, run_index), so results do not depend on how cells
are scheduled across worker processes.
"""

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from config import Config, logger, threads
from utils import TRAINING_STREAM, ConfigError, StructuralError, fail, load_json, run_stream
from bandits.analysis import gap_table
from bandits.env import ProblemInstance, RegretAccumulator, regret_step, simulate_step
from bandits.linear import FeatureMatrix, LinearInstance, generate_features, load_training_matrix
from bandits.policies import make_policy


class InstanceSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["explicit", "synthetic", "linear", "file"]
    K: Optional[int] = Field(default=None, ge=1)
    L: Optional[int] = Field(default=None, ge=1)
    w: Optional[List[float]] = None
    w1: float = Config.SYNTHETIC_WEIGHTS[0]
    w2: float = Config.SYNTHETIC_WEIGHTS[1]
    w3: float = Config.SYNTHETIC_WEIGHTS[2]
    m: int = Field(default=Config.TRAINING_ROWS, ge=0)
    seed: int = Field(default=0, ge=0)
    path: Optional[str] = None
    features: Optional[str] = None
    beta: Optional[List[float]] = None
    training: Optional[str] = None

    @model_validator(mode="after")
    def _check_kind(self):
        needed = {
            "explicit": ("K", "w"),
            "synthetic": ("K", "L"),
            "linear": ("K", "features", "beta"),
            "file": ("path",),
        }[self.kind]
        missing = [name for name in needed if getattr(self, name) is None]
        if missing:
            raise ValueError(f"instance kind '{self.kind}' needs {missing}")
        return self


class PolicySpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    label: Optional[str] = None
    lam: Optional[float] = Field(default=None, gt=0)
    sigma: Optional[float] = Field(default=None, ge=0)
    delta: Optional[float] = Field(default=None, gt=0, lt=1)
    d: Optional[int] = Field(default=None, ge=1, le=256)

    @field_validator("name")
    @classmethod
    def _known(cls, value: str) -> str:
        value = value.lower().strip()
        if value not in Config.VALID_POLICIES:
            raise ValueError(f"unknown policy '{value}'; expected one of {Config.VALID_POLICIES}")
        return value

    def params(self) -> Dict[str, float]:
        return {k: v for k, v in (("lam", self.lam), ("sigma", self.sigma), ("delta", self.delta)) if v is not None}


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    instance: InstanceSpec
    policies: List[PolicySpec] = Field(min_length=1)
    T: int = Field(ge=1)
    runs: int = Field(default=Config.DEFAULT_RUNS, ge=1)
    base_seed: int = Field(default=0, ge=0)
    output_dir: Optional[str] = None
    checkpoints: Optional[List[int]] = None
    error_bar_scale: float = Field(default=Config.ERROR_BAR_SCALE, ge=0)
    reference_curve: bool = False


def load_experiment_config(source: Union[str, Dict[str, Any]]) -> ExperimentConfig:
    """Parse a config file path or dict; pydantic failures become ConfigError."""
    data = load_json(source) if isinstance(source, str) else source
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        fail(ConfigError, f"Invalid experiment config: {e}")


def checkpoint_grid(T: int, n: int = Config.CHECKPOINTS, explicit: Optional[List[int]] = None) -> List[int]:
    """Geometrically spaced steps in 1..T, always ending at T."""
    if explicit:
        points = {int(c) for c in explicit if 1 <= int(c) <= T}
    else:
        points = set(np.unique(np.round(np.geomspace(1, T, num=min(n, T))).astype(int)).tolist())
    points.add(T)
    return sorted(points)


def generate_synthetic_instance(L: int, K: int, w1: float = Config.SYNTHETIC_WEIGHTS[0],
                                w2: float = Config.SYNTHETIC_WEIGHTS[1], w3: float = Config.SYNTHETIC_WEIGHTS[2],
                                seed: int = 0, m: int = 0) -> Tuple[ProblemInstance, Optional[np.ndarray]]:
    """
    K items at w1, K at w2 and L-2K at w3, plus an optional m x L matrix of
    Bernoulli clicks drawn from those weights.
    """
    if L < 2 * K:
        fail(StructuralError, f"Synthetic instance needs L >= 2K, got L={L}, K={K}")
    w = np.concatenate((np.full(K, w1), np.full(K, w2), np.full(L - 2 * K, w3)))
    instance = ProblemInstance(L=L, K=K, w=w)
    if m <= 0:
        return instance, None
    rng = run_stream(seed, purpose=TRAINING_STREAM)
    training = (rng.random((m, L)) < w).astype(float)
    logger.info(f"Drew a {m} x {L} synthetic training matrix (seed {seed})")
    return instance, training


@dataclass
class ResolvedInstance:
    instance: ProblemInstance
    training: Optional[np.ndarray] = None
    features: Optional[FeatureMatrix] = None

    def features_for(self, d: Optional[int]) -> Optional[FeatureMatrix]:
        if self.features is not None:
            if d is not None and d != self.features.d:
                fail(ConfigError, f"Policy asks for d={d}, the linear instance has d={self.features.d}")
            return self.features
        if self.training is None:
            return None
        return generate_features(self.training, d or Config.FEATURE_DIM, self.instance.K)


def resolve_instance(spec: InstanceSpec) -> ResolvedInstance:
    if spec.kind == "explicit":
        resolved = ResolvedInstance(ProblemInstance.from_weights(spec.w, spec.K))
    elif spec.kind == "file":
        resolved = ResolvedInstance(ProblemInstance.from_json(spec.path))
    elif spec.kind == "synthetic":
        instance, training = generate_synthetic_instance(spec.L, spec.K, spec.w1, spec.w2, spec.w3,
                                                         seed=spec.seed, m=spec.m)
        resolved = ResolvedInstance(instance, training=training)
    else:
        features = FeatureMatrix.from_json(spec.features)
        linear = LinearInstance(features=features, beta=spec.beta)
        features.check_norm(spec.K)
        return ResolvedInstance(ProblemInstance(L=features.L, K=spec.K, w=linear.weights), features=features)
    if spec.training:
        training = load_training_matrix(spec.training)
        if training.shape[1] != resolved.instance.L:
            fail(ConfigError, f"Training matrix has {training.shape[1]} columns, instance has L={resolved.instance.L}")
        resolved.training = training
    return resolved


@dataclass
class CellTask:
    instance: ProblemInstance
    policy: str
    label: str
    params: Dict[str, float]
    features: Optional[FeatureMatrix]
    T: int
    base_seed: int
    policy_index: int
    run_index: int
    checkpoints: List[int]


@dataclass
class RunRecord:
    policy: str
    policy_index: int
    run: int
    T: int
    final_regret: float
    realized_reward: int
    seconds: float
    trajectory: List[Tuple[int, float]] = field(default_factory=list)


def run_cell(task: CellTask) -> RunRecord:
    """T rounds of select / simulate / update for one (policy, run) pair."""
    rng = run_stream(task.base_seed, task.policy_index, task.run_index)
    inst = task.instance
    policy = make_policy(task.policy, inst.L, inst.K, features=task.features, instance=inst, **task.params)
    acc = RegretAccumulator(checkpoints=task.checkpoints)
    start = time.perf_counter()
    for t in range(1, task.T + 1):
        S = policy.select(t, rng)
        f = simulate_step(inst, S, rng)
        policy.update(S, f)
        regret_step(acc, inst, S, f)
    seconds = time.perf_counter() - start
    logger.debug(f"{task.label} run {task.run_index}: Reg({task.T}) = {acc.cum_regret:.4f} in {seconds:.2f}s")
    return RunRecord(policy=task.label, policy_index=task.policy_index, run=task.run_index, T=task.T,
                     final_regret=acc.cum_regret, realized_reward=acc.realized_reward, seconds=seconds,
                     trajectory=[(int(t), float(r)) for t, r in acc.trajectory])


@dataclass
class PolicySummary:
    policy: str
    mean: float
    std: float
    min: float
    max: float
    mean_seconds: float


@dataclass
class ExperimentResult:
    config: Dict[str, Any]
    L: int
    K: int
    T: int
    runs: int
    checkpoints: List[int]
    labels: List[str]
    records: List[RunRecord]
    min_gap: Optional[float] = None

    def records_for(self, label: str) -> List[RunRecord]:
        return [r for r in self.records if r.policy == label]

    def summaries(self) -> List[PolicySummary]:
        """Per-policy aggregates; std is the population standard deviation, 0 for one run."""
        out = []
        for label in self.labels:
            rows = self.records_for(label)
            finals = np.array([r.final_regret for r in rows])
            out.append(PolicySummary(policy=label, mean=float(finals.mean()), std=float(finals.std()),
                                     min=float(finals.min()), max=float(finals.max()),
                                     mean_seconds=float(np.mean([r.seconds for r in rows]))))
        return out

    def mean_trajectory(self, label: str) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(checkpoints, mean regret, std regret) across runs."""
        rows = self.records_for(label)
        if not rows or not rows[0].trajectory:
            fail(StructuralError, f"No trajectory recorded for {label}")
        values = np.array([[r for _, r in rec.trajectory] for rec in rows])
        steps = np.array([t for t, _ in rows[0].trajectory])
        return steps, values.mean(axis=0), values.std(axis=0)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config,
            "L": self.L, "K": self.K, "T": self.T, "runs": self.runs,
            "checkpoints": self.checkpoints,
            "labels": self.labels,
            "min_gap": self.min_gap,
            "aggregates": [asdict(s) for s in self.summaries()],
            "records": [asdict(r) for r in self.records],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentResult":
        try:
            records = [RunRecord(**{**r, "trajectory": [tuple(p) for p in r["trajectory"]]})
                       for r in data["records"]]
            return cls(config=data["config"], L=data["L"], K=data["K"], T=data["T"], runs=data["runs"],
                       checkpoints=list(data["checkpoints"]), labels=list(data["labels"]),
                       records=records, min_gap=data.get("min_gap"))
        except (KeyError, TypeError) as e:
            fail(StructuralError, f"Malformed result document: {e}")


def _labels(policies: List[PolicySpec], features: Dict[int, Optional[FeatureMatrix]],
            inst: ProblemInstance) -> List[str]:
    labels = []
    for i, spec in enumerate(policies):
        if spec.label:
            label = spec.label
        else:
            label = make_policy(spec.name, inst.L, inst.K, features=features[i], instance=inst,
                                **spec.params()).display_name
        if label in labels:
            fail(ConfigError, f"Duplicate policy label '{label}'; set distinct 'label' fields")
        labels.append(label)
    return labels


def run_experiment(config: Union[ExperimentConfig, Dict[str, Any], str],
                   workers: Optional[int] = None) -> ExperimentResult:
    """
    Run every (policy, run) cell and assemble the result in (policy, run) order.
    workers defaults to CASCADE_BANDITS_THREADS; 1 runs in-process.
    """
    if not isinstance(config, ExperimentConfig):
        config = load_experiment_config(config)
    resolved = resolve_instance(config.instance)
    inst = resolved.instance
    features_by_d: Dict[Optional[int], Optional[FeatureMatrix]] = {}
    features: Dict[int, Optional[FeatureMatrix]] = {}
    for i, spec in enumerate(config.policies):
        if spec.name in Config.LINEAR_POLICIES:
            if spec.d not in features_by_d:
                features_by_d[spec.d] = resolved.features_for(spec.d)
            features[i] = features_by_d[spec.d]
            if features[i] is None:
                fail(ConfigError, f"Policy {spec.name} needs features: use a synthetic instance with m > 0, "
                                  f"a training matrix or a linear instance")
        else:
            features[i] = None
    labels = _labels(config.policies, features, inst)
    checkpoints = checkpoint_grid(config.T, explicit=config.checkpoints)
    tasks = [
        CellTask(instance=inst, policy=spec.name, label=labels[i], params=spec.params(), features=features[i],
                 T=config.T, base_seed=config.base_seed, policy_index=i, run_index=run, checkpoints=checkpoints)
        for i, spec in enumerate(config.policies)
        for run in range(config.runs)
    ]
    pool = workers or threads()
    logger.info(f"Running {len(config.policies)} policies x {config.runs} runs, T={config.T}, "
                f"L={inst.L}, K={inst.K} on {pool} worker(s)")
    if pool == 1:
        records = [run_cell(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=pool) as executor:
            records = list(executor.map(run_cell, tasks))
    records.sort(key=lambda r: (r.policy_index, r.run))
    min_gap = gap_table(inst.w, inst.K).min_gap if inst.K < inst.L else None
    result = ExperimentResult(config=config.model_dump(mode="json"), L=inst.L, K=inst.K, T=config.T,
                              runs=config.runs, checkpoints=checkpoints, labels=labels, records=records,
                              min_gap=min_gap)
    for s in result.summaries():
        logger.info(f"{s.policy}: mean Reg({config.T}) = {s.mean:.4g} ± {s.std:.4g}")
    return result
