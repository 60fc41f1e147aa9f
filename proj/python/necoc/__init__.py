"""N-ary error correcting output code ensembles."""

from ._necoc import (
    ActivationKind,
    CodingMatrix,
    Dataset,
    DecodeResult,
    EnsembleModel,
    MetaPartition,
    NecocError,
    NetworkParams,
    NetworkSpec,
    OptimizerKind,
    ScheduleKind,
    Sharing,
    SharingStrategy,
    TrainConfig,
    __version__,
    class_merge_degree,
    column_partition,
    decode,
    decode_batch,
    dev_split,
    ensemble_codes,
    evaluate_accuracy,
    fit,
    generate_coding_matrix,
    hamming_distance,
    init_params,
    load_csv,
    load_ensemble,
    load_idx,
    lr_at,
    mean_row_distance,
    min_row_distance,
    parameter_counts,
    predict,
    predict_ensemble,
    prefix_columns,
    pretrain_single,
    read_matrix_file,
    read_params,
    relabel,
    run_sweep,
    save_ensemble,
    standardize,
    suggested_learner_range,
    synth_blobs,
    train_ensemble,
    validate,
    write_matrix_file,
    write_params,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
