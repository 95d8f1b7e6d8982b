"""Domain entities for benchmark configuration and result records"""

from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Dict, Any, List, Optional, Tuple

from .param_set import ParamSet
from .reduction_strategy import ReductionStrategy
from ..exceptions import UsageError

BENCH_KERNELS = (
    'ntt3', 'ct_ntt', 'four_step', 'intt', 'vecmodmul', 'matmodmul',
    'bconv', 'polymul', 'rescale', 'he_add', 'hpsm', 'lazyreduce', 'hemult',
)

# Report columns, in order
RECORD_FIELDS = (
    'kernel', 'N', 'R', 'C', 'L', 'Lp', 'H', 'V', 'W', 'batch', 'strategy',
    'use_bat', 'iters', 'min_us', 'median_us', 'mean_us', 'throughput_per_s',
    'mults', 'perm_ops', 'verified',
)


@dataclass
class BenchConfig:
    """One CLI invocation: a kernel over a batch sweep and a strategy sweep"""

    kernel: str
    param_set: ParamSet
    batch: List[int] = field(default_factory=lambda: [1])
    strategies: List[ReductionStrategy] = field(
        default_factory=lambda: [ReductionStrategy.BARRETT64]
    )
    use_bat: bool = True
    iters: int = 5
    warmup: int = 1
    seed: int = 0
    bp: int = 8
    rc: Optional[Tuple[int, int]] = None
    mat_shape: Tuple[int, int, int] = (512, 256, 256)
    check_output: bool = True
    inject_fault: bool = False
    parallel_verify: bool = False
    output: Optional[Path] = None
    format: str = 'csv'

    def __post_init__(self):
        """Validate configuration"""
        if self.kernel not in BENCH_KERNELS:
            raise UsageError(f"Unknown kernel {self.kernel!r}; choose from {', '.join(BENCH_KERNELS)}")
        if not self.batch or any(b < 1 for b in self.batch):
            raise UsageError(f"Batch sizes must be >= 1, got {self.batch}")
        if self.iters < 1:
            raise UsageError(f"iters must be >= 1, got {self.iters}")
        if self.warmup < 0:
            raise UsageError(f"warmup must be >= 0, got {self.warmup}")
        if not self.strategies:
            raise UsageError("At least one reduction strategy is required")
        if self.format not in ('csv', 'json'):
            raise UsageError(f"Unknown report format {self.format!r}")
        if not 0 <= self.seed < (1 << 64):
            raise UsageError(f"Seed {self.seed} is not a 64-bit value")
        if self.rc is not None and self.rc[0] * self.rc[1] != self.param_set.N:
            raise UsageError(f"--rc {self.rc[0]},{self.rc[1]} does not multiply to N={self.param_set.N}")
        if any(d < 1 for d in self.mat_shape):
            raise UsageError(f"Matrix shape {self.mat_shape} must be positive")
        if self.output is not None:
            self.output = Path(self.output)

    def with_kernel(self, kernel: str) -> 'BenchConfig':
        """Copy of this configuration for another kernel"""
        data = {k: getattr(self, k) for k in self.__dataclass_fields__}
        data['kernel'] = kernel
        return BenchConfig(**data)


@dataclass
class BenchRecord:
    """Timing and op-count summary of one (kernel, batch, strategy) cell"""

    kernel: str
    N: int = 0
    R: int = 0
    C: int = 0
    L: int = 0
    Lp: int = 0
    H: int = 0
    V: int = 0
    W: int = 0
    batch: int = 1
    strategy: str = ''
    use_bat: bool = True
    iters: int = 1
    min_us: float = 0.0
    median_us: float = 0.0
    mean_us: float = 0.0
    throughput_per_s: float = 0.0
    mults: int = 0
    perm_ops: int = 0
    verified: bool = False

    # JSON-only extras
    modmuls: int = 0
    bytes_lhs: int = 0
    shift_adds: int = 0
    mxu_utilization: float = 0.0
    label: str = ''

    def to_row(self) -> Dict[str, Any]:
        """CSV columns in fixed order"""
        return {name: getattr(self, name) for name in RECORD_FIELDS}

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'BenchRecord':
        """Rebuild a record from a CSV row or JSON object"""
        kwargs = {}
        for name, f in cls.__dataclass_fields__.items():
            if name not in data:
                continue
            value = data[name]
            if f.type in (bool, 'bool') and isinstance(value, str):
                value = value.strip().lower() in ('true', '1', 'yes')
            elif f.type in (int, 'int'):
                value = int(value)
            elif f.type in (float, 'float'):
                value = float(value)
            kwargs[name] = value
        return cls(**kwargs)
