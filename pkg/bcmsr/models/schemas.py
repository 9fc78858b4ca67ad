from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from bcmsr.core.config import (
    DEFAULT_SEED,
    DEFAULT_TRIALS,
    EXHAUSTIVE_CELL_LIMIT,
    GRID_RESOLUTION,
    PMF_SUM_TOL,
)


ExampleName = Literal["dueck1", "dueck2", "blackwell"]
BoundName = Literal["nofeedback", "inner1", "inner2", "outer"]
OutputFormat = Literal["csv", "json", "svg"]
SimulationMode = Literal["exhaustive", "monte_carlo"]
ColoringMethod = Literal["random", "balanced", "universal"]

# Largest N*R for which the key alphabet still fits a signed 64-bit color index
MAX_KEY_BITS = 62


class DueckParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    noise_case: Literal[1, 2] = Field(1, description="1: Z0 -> Z1 -> Z2, 2: Z1 -> Z0 -> Z2")
    p: float = Field(..., ge=0.0, le=0.5, description="P(Z0 = 1)")
    q: float = Field(..., ge=0.0, le=0.5, description="crossover from Z0 to Z1")
    r: float = Field(..., ge=0.0, le=0.5, description="crossover into Z2")
    alpha1: float = Field(0.5, ge=0.0, le=1.0, description="P(X0 = 0)")
    alpha2: float = Field(0.5, ge=0.0, le=1.0, description="P(X1 = 0)")
    alpha3: float = Field(0.5, ge=0.0, le=1.0, description="P(X2 = 0)")

    @property
    def balanced_inputs(self) -> bool:
        return self.alpha1 == self.alpha2 == self.alpha3 == 0.5


class BlackwellParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    p: float = Field(..., ge=0.0, le=0.5, description="output noise Bern(p)")
    alpha: float = Field(1.0 / 3.0, ge=0.0, le=1.0)
    beta: float = Field(1.0 / 3.0, ge=0.0, le=1.0)
    alpha1: float = Field(1.0 / 3.0, ge=0.0, le=1.0, description="P(X = 0) for the outer bound")
    alpha2: float = Field(1.0 / 3.0, ge=0.0, le=1.0, description="P(X = 1) for the outer bound")

    @model_validator(mode="after")
    def check_simplex(self):
        if self.alpha + self.beta > 1.0 + PMF_SUM_TOL:
            raise ValueError(f"alpha + beta must not exceed 1, got {self.alpha + self.beta}")
        if self.alpha1 + self.alpha2 > 1.0 + PMF_SUM_TOL:
            raise ValueError(f"alpha1 + alpha2 must not exceed 1, got {self.alpha1 + self.alpha2}")
        return self


class VariableSpec(BaseModel):
    name: str = Field(..., min_length=1)
    size: int = Field(..., ge=1)


class DistributionRecord(BaseModel):
    """Dense joint pmf in row-major order over the declared variables."""

    variables: List[VariableSpec] = Field(..., min_length=1)
    table: List[float]

    @model_validator(mode="after")
    def check_table(self):
        cells = 1
        for variable in self.variables:
            cells *= variable.size
        if len(self.table) != cells:
            raise ValueError(f"table has {len(self.table)} entries, the alphabets need {cells}")
        return self


class KeySimConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    blocklength: int = Field(..., ge=1, description="N, symbols per feedback block")
    key_rate: float = Field(..., ge=0.0, description="R, key bits per symbol")
    channel: List[List[float]] = Field(..., description="per-symbol P(y1, y2), rows indexed by y1")
    trials: int = Field(DEFAULT_TRIALS, ge=1)
    seed: int = Field(DEFAULT_SEED, ge=0, lt=2**64)
    mode: SimulationMode = "exhaustive"
    coloring: ColoringMethod = "random"
    workers: int = Field(4, ge=1)

    @field_validator("channel")
    @classmethod
    def check_channel(cls, value: List[List[float]]):
        if not value or not value[0]:
            raise ValueError("channel pmf must be a non-empty matrix")
        width = len(value[0])
        if any(len(row) != width for row in value):
            raise ValueError("channel pmf rows must have equal length")
        if any(cell < 0 for row in value for cell in row):
            raise ValueError("channel pmf entries must be nonnegative")
        total = sum(sum(row) for row in value)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"channel pmf must sum to 1, got {total}")
        return value

    @model_validator(mode="after")
    def check_key_size(self):
        if self.blocklength * self.key_rate > MAX_KEY_BITS:
            raise ValueError(f"N*R = {self.blocklength * self.key_rate} exceeds {MAX_KEY_BITS} key bits")
        return self

    @property
    def y1_size(self) -> int:
        return len(self.channel)

    @property
    def y2_size(self) -> int:
        return len(self.channel[0])

    @property
    def exhaustive_cells(self) -> int:
        return (self.y1_size * self.y2_size) ** self.blocklength

    @property
    def exhaustive_capable(self) -> bool:
        return self.exhaustive_cells <= EXHAUSTIVE_CELL_LIMIT


class KeySimReport(BaseModel):
    mode: SimulationMode
    coloring: ColoringMethod
    blocklength: int
    key_rate: float
    gamma: int = Field(..., description="number of key values, round(2^(N*R))")
    trials: int
    empirical_key_entropy: float
    conditional_key_entropy: float
    uniformity_distance: float
    leakage: float
    standard_error: Optional[float] = None
    entropy_ceiling: float = Field(..., description="min{log2 gamma, N*H(Y1|Y2) + |Y1| log2(N+1)}")
    slack: float = Field(..., description="log2 gamma minus the conditional key entropy")

    def summary(self) -> str:
        error = f" +/- {self.standard_error:.4f}" if self.standard_error is not None else ""
        return (
            f"{self.mode}: gamma={self.gamma} H(K)={self.empirical_key_entropy:.4f} "
            f"H(K|Y2^N)={self.conditional_key_entropy:.4f}{error} "
            f"leakage={self.leakage:.4f} tv={self.uniformity_distance:.4f}"
        )


class OtpReport(BaseModel):
    message_bits: int
    trials: int
    decode_ok: bool
    decode_failures: int
    message_leakage: float = Field(..., description="I(W; W xor P, Y2^N) in bits, the sum of the next two")
    pad_nonuniformity: float = Field(..., description="b - H(P), from reducing K modulo 2^b")
    view_leakage: float = Field(..., description="H(P) - H(P | Y2^N), revealed by the eavesdropper block")
    leakage_per_bit: float


class FrontierRow(BaseModel):
    rate: float
    gamma: int
    conditional_key_entropy: float
    normalized_entropy: float


class SweepRow(BaseModel):
    p: float
    sum_in1: float
    sum_in2: float
    sum_out: float
    sum_nofb: float


class RowRecord(BaseModel):
    label: Optional[str]
    text: str
    rhs: float


class RegionRecord(BaseModel):
    bound: str
    source: Literal["closed", "generic"]
    variables: Tuple[str, str]
    rows: List[RowRecord]
    facets: List[RowRecord] = Field(default_factory=list, description="rows supporting an edge of the polygon")
    vertices: List[Tuple[float, float]]
    max_sum_rate: float


class CrossCheckRow(BaseModel):
    label: str
    closed: Optional[float]
    generic: Optional[float]
    deviation: Optional[float]
    status: Literal["reproduced", "flagged", "closed-only", "generic-only"]


class CrossCheckReport(BaseModel):
    bound: str
    rows: List[CrossCheckRow]

    @property
    def flagged(self) -> List[CrossCheckRow]:
        return [row for row in self.rows if row.status == "flagged"]


class CheckResult(BaseModel):
    name: str
    passed: bool
    deviation: float = 0.0
    tolerance: float = 0.0
    detail: str = ""
    notes: List[str] = Field(default_factory=list)


class VerifyReport(BaseModel):
    passed: bool
    checks: List[CheckResult]


class RunConfig(BaseModel):
    """Parsed command line, optionally merged with a JSON config file."""

    command: Literal["region", "sweep", "fme", "simulate", "verify"]
    example: Optional[ExampleName] = None
    params: Dict[str, Any] = Field(default_factory=dict)
    output_format: OutputFormat = "json"
    output_path: Optional[str] = None
    grid: int = Field(GRID_RESOLUTION, ge=2)
