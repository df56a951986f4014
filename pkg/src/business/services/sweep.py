from typing import Iterable, List, Sequence

import numpy as np

from src.business.models import RegistrationModel
from src.business.services.metrics import evaluate_registration
from src.business.services.training import predict_field, train
from src.config import logger
from src.data.schemas import NetworkConfig, RegistrationPair, SweepRow

sweep_logger = logger.getChild("sweep")


def sweep_k(
    k_values: Iterable[int],
    config: NetworkConfig,
    train_pairs: Sequence[RegistrationPair],
    eval_pairs: Sequence[RegistrationPair],
    epochs: int,
) -> List[SweepRow]:
    """Train one model per SGA stride and report mean Dice before/after registration."""
    rows = []
    for k in k_values:
        run_config = config.model_copy(update={"stride_k": [int(k)] * config.stages})
        run_config = NetworkConfig.model_validate(run_config.model_dump())
        model = RegistrationModel(run_config)
        train(model, train_pairs, run_config, epochs)

        before, after, folding = [], [], []
        for pair in eval_pairs:
            field = predict_field(model, pair.moving, pair.fixed)
            identity = np.zeros_like(field)
            before.append(evaluate_registration(pair.fixed_labels, pair.moving_labels, identity).dice_mean)
            report = evaluate_registration(pair.fixed_labels, pair.moving_labels, field, pair.pair_id)
            after.append(report.dice_mean)
            folding.append(report.njd_percent)
        row = SweepRow(
            stride_k=int(k),
            dice_before=float(np.nanmean(before)),
            dice_after=float(np.nanmean(after)),
            njd_percent=float(np.mean(folding)),
        )
        sweep_logger.info(
            f"K={k}: dice {row.dice_before:.4f} -> {row.dice_after:.4f}, njd {row.njd_percent:.3f}%"
        )
        rows.append(row)
    return rows
