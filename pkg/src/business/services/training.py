from typing import Callable, Optional, Sequence

import numpy as np

from src.business.autodiff import Tensor, adam_step, backward, get_tape, init_adam_state, no_grad
from src.business.models import RegistrationModel, forward, predict_flow
from src.business.services.losses import loss_terms
from src.business.services.metrics import dice, mean_dice
from src.business.services.transform import label_transform
from src.config import logger
from src.data.schemas import EpochRecord, NetworkConfig, RegistrationPair, TrainingResult
from src.errors import ConfigException, TrainingDivergedException

training_logger = logger.getChild("training")

EpochCallback = Callable[[EpochRecord], None]


def volume_tensor(volume: np.ndarray) -> Tensor:
    """[D,H,W] array -> [1,1,D,H,W] tensor."""
    return Tensor(np.asarray(volume, dtype=np.float64)[None, None])


def predict_field(model: RegistrationModel, moving: np.ndarray, fixed: np.ndarray) -> np.ndarray:
    """Displacement field [3,D,H,W] for one pair, without recording gradients."""
    with no_grad():
        flow = predict_flow(model, volume_tensor(moving), volume_tensor(fixed))
    return flow.data[0]


def validation_dice(model: RegistrationModel, pairs: Sequence[RegistrationPair]) -> float:
    scores = []
    for pair in pairs:
        field = predict_field(model, pair.moving, pair.fixed)
        warped = label_transform(pair.moving_labels, field)
        scores.append(mean_dice(dice(pair.fixed_labels, warped)))
    return float(np.nanmean(scores))


def train(
    model: RegistrationModel,
    pairs: Sequence[RegistrationPair],
    config: Optional[NetworkConfig] = None,
    epochs: int = 1,
    val_pairs: Optional[Sequence[RegistrationPair]] = None,
    on_epoch: Optional[EpochCallback] = None,
) -> TrainingResult:
    """
    Minimise sim + lambda * reg with Adam at batch size 1.

    Args:
        model: Network whose parameters are updated in place
        pairs: Training pairs, visited in a seeded random order each epoch
        config: Loss and optimiser settings (defaults to the model's config)
        epochs: Number of passes over the training pairs
        val_pairs: When given, the parameters of the best-validating epoch are restored at the end
        on_epoch: Called with each epoch's record

    Returns:
        Per-epoch loss history and the best validation epoch, if any
    """
    config = config or model.config
    if not pairs:
        raise ConfigException("Training needs at least one registration pair")
    params = model.parameters()
    state = init_adam_state(params, config.lr)
    rng = np.random.default_rng(config.seed)
    history = []
    best_epoch, best_dice, best_state = None, None, None

    training_logger.info(
        f"Training {model.param_count()} parameters on {len(pairs)} pairs for {epochs} epochs "
        f"(lr={config.lr}, lambda={config.lambda_reg}, sim={config.sim_kind})"
    )
    for epoch in range(1, epochs + 1):
        sums = np.zeros(3)
        for step, position in enumerate(rng.permutation(len(pairs))):
            pair = pairs[position]
            moving, fixed = volume_tensor(pair.moving), volume_tensor(pair.fixed)
            try:
                warped, flow = forward(model, moving, fixed)
                total, sim, reg = loss_terms(fixed, warped, flow, config)
                if not np.isfinite(total.item()):
                    raise TrainingDivergedException(
                        epoch, step, pair.pair_id, f"loss is {total.item()} (sim={sim.item()}, reg={reg.item()})"
                    )
                grads = backward(total)
            except Exception:
                # a failed step must not leave its partial graph on the shared tape
                get_tape().clear()
                raise
            adam_step(params, grads, state)
            sums += (sim.item(), reg.item(), total.item())

        sim_avg, reg_avg, total_avg = sums / len(pairs)
        record = EpochRecord(epoch=epoch, sim_loss=sim_avg, reg_loss=reg_avg, total=total_avg)
        if val_pairs:
            record.val_dice = validation_dice(model, val_pairs)
            if best_dice is None or record.val_dice > best_dice:
                best_epoch, best_dice, best_state = epoch, record.val_dice, model.state_dict()
        history.append(record)
        training_logger.info(
            f"Epoch {epoch}/{epochs}: sim={sim_avg:.6f} reg={reg_avg:.6f} total={total_avg:.6f}"
            + (f" val_dice={record.val_dice:.4f}" if record.val_dice is not None else "")
        )
        if on_epoch is not None:
            on_epoch(record)

    if best_state is not None:
        model.load_state_dict(best_state)
        training_logger.info(f"Restored parameters of epoch {best_epoch} (val dice {best_dice:.4f})")
    return TrainingResult(history=history, best_epoch=best_epoch, best_val_dice=best_dice)
