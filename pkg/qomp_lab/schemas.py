from typing import Dict, List, Optional

from pydantic import BaseModel, Field, root_validator, validator

from qomp_lab.qomp import AccessMode
from qomp_lab.quantum_primitives import FailureHandling, NoiseMode


class StrictBaseModel(BaseModel):
    class Config:
        extra = "forbid"


# INSTANCE MODELS
class MatrixPayload(StrictBaseModel):
    n: int = Field(..., example=2)
    m: int = Field(..., example=2)
    real: List[float] = Field(..., example=[1.0, 0.0, 0.0, 1.0])
    imag: List[float] = Field(..., example=[0.0, 0.0, 0.0, 0.0])

    @root_validator(skip_on_failure=True)
    def check_entry_count(cls, values):
        expected = values["n"] * values["m"]
        if len(values["real"]) != expected or len(values["imag"]) != expected:
            raise ValueError(f"matrix of shape {values['n']}x{values['m']} needs {expected} entries")
        return values


class InstancePayload(StrictBaseModel):
    dictionary: MatrixPayload
    signal: MatrixPayload
    support: Optional[List[int]] = Field(None, example=[0, 3])


class X3CPayload(StrictBaseModel):
    N: int = Field(..., example=6)
    triples: List[List[int]] = Field(..., example=[[0, 1, 2], [3, 4, 5]])


class ReducedInstancePayload(StrictBaseModel):
    dictionary: MatrixPayload
    signal: MatrixPayload
    eps_bound: float = Field(..., example=0.7071)
    sound_bound: float = Field(..., example=0.4082)
    equivalence_epsilon: float = Field(..., example=0.3674)
    cover: Optional[List[int]] = Field(None, example=[0, 1])


# RUN MODELS
class LedgerSnapshotExport(StrictBaseModel):
    label: str = Field(..., example="iteration-1")
    counts: Dict[str, int]


class LedgerExport(StrictBaseModel):
    u_s: int = Field(..., example=120)
    u_s_dag: int = Field(..., example=120)
    u_d: int = Field(..., example=240)
    u_d_dag: int = Field(..., example=240)
    aux_gates: int = Field(..., example=0)
    per_iteration: List[LedgerSnapshotExport] = []


class BudgetExport(StrictBaseModel):
    eps_i: float
    eps_f: float
    eps_1re: float
    eps_1im: float
    eps_2re: float
    eps_2im: float
    eps_1phi: float
    eps_1nphi: float
    eps_2phi: float
    eps_2nphi: float
    eps_w: float
    eta: float
    gamma: float


class ComplexVector(StrictBaseModel):
    real: List[float]
    imag: List[float]


class RunRecord(StrictBaseModel):
    solver: str = Field(..., example="qomp")
    status: str = Field(..., example="converged")
    support: List[int] = Field(..., example=[7])
    iterations: int = Field(..., example=1)
    residual_norms: List[float] = Field(..., example=[0.0])
    seed: Optional[int] = Field(None, example=7)
    ledger: Optional[LedgerExport] = None
    budget: Optional[BudgetExport] = None
    coefficients: Optional[ComplexVector] = None
    planted_support: Optional[List[int]] = None


class CertificatesExport(StrictBaseModel):
    mi_condition: bool
    erc_value: Optional[float] = None
    identifiable: Optional[bool] = None


class TomographyReportExport(StrictBaseModel):
    support: List[int]
    coefficients: ComplexVector
    reconstruction_error: float
    epsilon: float
    success: bool
    ledger: LedgerExport
    certificates: CertificatesExport
    budgets: Dict[str, float]
    seed: Optional[int] = None


class MuEstimateExport(StrictBaseModel):
    estimate: float = Field(..., example=0.12)
    tolerance: float = Field(..., example=0.03)
    classical_value: float = Field(..., example=0.11)
    classical_cost: int = Field(..., example=4960)
    ledger: LedgerExport
    seed: Optional[int] = None


class PolynomialExport(StrictBaseModel):
    chebyshev_coeffs: List[float]
    degree: int
    scale: float
    region: str
    epsilon: float


# CONFIG MODELS
class SweepSpec(StrictBaseModel):
    parameter: str = Field(..., example="m")
    values: List[float] = Field(..., example=[64, 256, 1024])
    solver: str = Field("qomp", example="qomp")

    @validator("solver")
    def check_solver(cls, value):
        if value not in ("omp", "qomp", "recovery"):
            raise ValueError("solver must be one of omp, qomp, recovery")
        return value


class BenchGrid(StrictBaseModel):
    n: List[int] = Field([64, 256, 1024], example=[64, 256])
    m: List[int] = Field([128, 512, 2048], example=[128, 512])
    k: List[int] = Field([1, 4, 16], example=[1, 4])


POSITIVE_FIELDS = ("n", "m", "sparsity", "trials", "epsilon", "delta")
SWEEPABLE_FIELDS = ("n", "m", "sparsity", "epsilon", "eta", "gamma", "delta", "eps_i", "eps_f")


class ExperimentConfig(StrictBaseModel):
    n: int = Field(16, example=16)
    m: int = Field(32, example=32)
    sparsity: int = Field(2, example=2)
    trials: int = Field(1, example=50)
    seed: Optional[int] = Field(None, example=7)
    epsilon: float = Field(0.1, example=0.1)
    eta: float = Field(0.25, example=0.25)
    gamma: Optional[float] = Field(None, example=0.5)
    delta: float = Field(0.1, example=0.1)
    noise: NoiseMode = Field(NoiseMode.EXACT, example="stochastic")
    failure_handling: FailureHandling = Field(FailureHandling.AMPLIFIED, example="amplified")
    access: AccessMode = Field(AccessMode.ORACULAR, example="oracular")
    max_iterations: Optional[int] = Field(None, example=8)
    eps_i: Optional[float] = Field(None, example=0.01)
    eps_f: Optional[float] = Field(None, example=0.05)
    dictionary_kind: str = Field("gaussian", example="union_of_bases")
    incoherence: Optional[float] = Field(None, example=0.3)
    instance: Optional[str] = Field(None, example="instances/planted.json")
    ground_size: int = Field(6, example=9)
    triple_count: int = Field(4, example=6)
    planted: bool = Field(True, example=True)
    output: Optional[str] = Field(None, example="runs/qomp.json")
    sweep: Optional[SweepSpec] = None
    bench: BenchGrid = BenchGrid()

    @validator(*POSITIVE_FIELDS)
    def check_positive(cls, value, field):
        if value <= 0:
            raise ValueError(f"{field.name} must be positive")
        return value

    @validator("eta")
    def check_eta(cls, value):
        if not 0 <= value < 1:
            raise ValueError("eta must lie in [0, 1)")
        return value

    @validator("gamma", "eps_i", "eps_f", "incoherence")
    def check_optional_positive(cls, value, field):
        if value is not None and value <= 0:
            raise ValueError(f"{field.name} must be positive")
        return value

    @validator("dictionary_kind")
    def check_dictionary_kind(cls, value):
        if value not in ("gaussian", "union_of_bases"):
            raise ValueError("dictionary_kind must be gaussian or union_of_bases")
        return value

    @validator("ground_size")
    def check_ground_size(cls, value):
        if value < 3 or value % 3:
            raise ValueError("ground_size must be a positive multiple of 3")
        return value

    @root_validator(skip_on_failure=True)
    def check_seed_and_sweep(cls, values):
        if values["noise"] is not NoiseMode.EXACT and values.get("seed") is None:
            raise ValueError(f"a seed is required for {values['noise'].value} noise")
        sweep = values.get("sweep")
        if sweep is not None and sweep.parameter not in SWEEPABLE_FIELDS:
            raise ValueError(f"sweep parameter {sweep.parameter} is not a sweepable config field")
        return values
