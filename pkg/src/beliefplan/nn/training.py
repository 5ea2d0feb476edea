"""Mini-batch training loop over a labeled corpus file."""
import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..data import read_records
from ..errors import TrainingDivergedError
from .autodiff import Tensor, bce_loss, no_grad
from .checkpoint import save_checkpoint
from .optim import AdamState, adam_step, collect_grads, zero_grads
from .unet import UNetParams, init_unet, unet_forward


@dataclass
class TrainConfig:
    batch_size: int = 32
    epochs: int = 120
    # (epoch threshold, learning rate); None threshold = rest of training.
    lr_schedule: tuple = ((100, 1e-4), (None, 1e-5))
    seed: int = 0
    early_stop_patience: int = None
    depth: int = 4
    base_channels: int = 16
    holdout: int = 100
    dtype: str = "float64"

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        thresholds = [t for t, _ in self.lr_schedule if t is not None]
        if thresholds != sorted(thresholds):
            raise ValueError("lr_schedule thresholds must increase")

    def lr_at(self, epoch: int) -> float:
        for threshold, lr in self.lr_schedule:
            if threshold is None or epoch <= threshold:
                return lr
        return self.lr_schedule[-1][1]


@dataclass
class TrainResult:
    checkpoint_path: str
    log_path: str
    best_epoch: int
    best_test_loss: float
    epochs_run: int
    history: list = field(default_factory=list)


def load_corpus(dataset_path):
    """Stack the corpus into (N,3,H,W) inputs and (N,1,H,W) labels."""
    xs, ys = [], []
    for _, stack in read_records(dataset_path):
        xs.append(np.stack([stack.O.values, stack.T.values, stack.I.values]))
        ys.append(stack.L.values[None])
    if not xs:
        raise ValueError(f"{dataset_path}: no records")
    return (np.stack(xs).astype(np.float32), np.stack(ys).astype(np.float32))


def evaluate_bce(params: UNetParams, x: np.ndarray, y: np.ndarray,
                 batch_size: int, dtype) -> float:
    total = 0.0
    with no_grad():
        for i in range(0, x.shape[0], batch_size):
            xb = x[i:i + batch_size].astype(dtype)
            yb = y[i:i + batch_size].astype(dtype)
            loss = bce_loss(unet_forward(params, Tensor(xb)), Tensor(yb))
            total += float(loss.data) * xb.shape[0]
    return total / x.shape[0]


def train(dataset_path, config: TrainConfig, checkpoint_path, log_path) -> TrainResult:
    """Shuffled mini-batch Adam on BCE. The checkpoint holds the weights of
    the best test-loss epoch; with no holdout the training loss selects.

    The loss log is tab-separated: epoch, train BCE, test BCE, lr.
    """
    x, y = load_corpus(dataset_path)
    n = x.shape[0]
    if config.holdout >= n:
        raise ValueError(f"holdout {config.holdout} >= corpus size {n}")
    n_train = n - config.holdout
    x_train, y_train = x[:n_train], y[:n_train]
    x_test, y_test = x[n_train:], y[n_train:]

    dtype = np.dtype(config.dtype).type
    rng = np.random.default_rng(config.seed)
    params = init_unet(config.depth, config.base_channels, rng, dtype=dtype)
    state = AdamState.for_params(params)

    best_test = math.inf
    best_epoch = 0
    best_snapshot = params.copy_data()
    history = []
    t0 = time.perf_counter()

    with open(log_path, "w") as log:
        log.write("# epoch\ttrain_bce\ttest_bce\tlr\n")
        for epoch in range(1, config.epochs + 1):
            lr = config.lr_at(epoch)
            perm = rng.permutation(n_train)
            total = 0.0
            for i in range(0, n_train, config.batch_size):
                idx = perm[i:i + config.batch_size]
                xb = x_train[idx].astype(dtype)
                yb = y_train[idx].astype(dtype)
                zero_grads(params)
                loss = bce_loss(unet_forward(params, Tensor(xb)), Tensor(yb))
                lval = float(loss.data)
                if not math.isfinite(lval):
                    raise TrainingDivergedError(
                        f"non-finite training loss at epoch {epoch} "
                        f"(batch starting at {i}, lr {lr:g})")
                loss.backward()
                adam_step(params, collect_grads(params), state, lr)
                total += lval * len(idx)
            train_loss = total / n_train
            if config.holdout > 0:
                test_loss = evaluate_bce(params, x_test, y_test,
                                         config.batch_size, dtype)
            else:
                test_loss = train_loss
            if not math.isfinite(test_loss):
                raise TrainingDivergedError(f"non-finite test loss at epoch {epoch}")
            log.write(f"{epoch}\t{train_loss:.6f}\t{test_loss:.6f}\t{lr:g}\n")
            log.flush()
            history.append((epoch, train_loss, test_loss, lr))
            if test_loss < best_test:
                best_test = test_loss
                best_epoch = epoch
                best_snapshot = params.copy_data()
            elif (config.early_stop_patience is not None
                  and epoch - best_epoch >= config.early_stop_patience):
                break

    params.load_data(best_snapshot)
    save_checkpoint(params, checkpoint_path)
    return TrainResult(str(checkpoint_path), str(log_path), best_epoch,
                       best_test, len(history), history)
