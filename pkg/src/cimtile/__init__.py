"""Behavioral simulator of a two-layer stacked SRAM/eDRAM in-memory
matrix compute tile: in-situ transpose, element-wise multiply/add through
an analog front end with an in-memory LFSR counter ADC, binary-activation
MAC, and an energy/latency/throughput cost model with Monte-Carlo
mismatch and calibration support.
"""

from .core import (
    AnalogSample,
    Layer,
    MatrixParseError,
    MatrixRangeError,
    MatrixShapeError,
    MatrixTile,
    SampleSource,
    TileError,
    load_matrix,
    save_matrix,
    seeded_rng,
)
from .config import TileConfig, VariationConfig, default_config, load_config
from .arrays import (
    BusContentionError,
    OverlappingAssignmentError,
    RetentionError,
    ScheduleError,
    SwapDirection,
    TEdramArray,
    TSramArray,
    UnreachableTargetError,
    Via3dMap,
    inter_layer_transfer,
    refresh,
)
from .transpose import compile_transpose, execute_transpose, transpose_tile
from .analog import (
    ComparatorModel,
    ComparatorPolarity,
    DacModel,
    RampModel,
    analog_add,
    analog_multiply,
    dac_convert,
    delay_to_pulses,
)
from .lfsr import (
    CalibrationRecord,
    LfsrLut,
    LfsrState,
    ShortCycleError,
    WordConverter,
    build_lut,
    calibrate,
    count_pulses,
    lfsr_step,
)
from .compute import (
    EwiseJob,
    EwiseOp,
    EwiseResult,
    MacJob,
    MacResult,
    WordBank,
    run_ewise,
    run_mac,
)
from .metrics import (
    ConversionPipeline,
    CostLedger,
    EnobReport,
    ThroughputReport,
    energy_rollup,
    estimate_enob,
    linearity_sweep,
    throughput,
)

__version__ = "0.1.0"
