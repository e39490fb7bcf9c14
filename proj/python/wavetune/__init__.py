"""Wave-aware GPU kernel auto-tuning: python surface over the C++ core."""

from wavetune._core import (  # noqa: F401
    AttnTiles,
    BilinearCoeffs,
    ConfigRegistry,
    DenseGemm,
    DualTable,
    FlashAttention,
    GemmTiles,
    GridPoint,
    GroundEntry,
    GroupedGemm,
    HardwareSpec,
    MacroConfig,
    MicroConfig,
    ProfileRecord,
    Regime,
    SamplingPlan,
    SyntheticKernelGround,
    TableArtifact,
    Tuned,
    build_plan,
    build_tables,
    instantiate_workload,
    load_tables,
    map_workload,
    parse_workload,
    predict_latency,
    read_records,
    run_profile_sim,
    save_tables,
    simulate,
    tune,
    wave_count,
    workload_to_string,
    write_records,
)

__all__ = [name for name in dir() if not name.startswith("_")]
