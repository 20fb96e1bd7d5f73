"""Three-phase training (analog pretrain, clustering, digital fine-tune) and SNR sweeps."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import modem as mdm
from ..autonet import checkpoint, tape
from ..autonet.network import CodecParams, build_graph, decode, encode, init_params, layer_sizes
from ..autonet.optim import AdamState, adam_step
from ..clustering import ClusterFit, Constellation, atomic_write_text, fit
from ..core import Rng, Stream, complex_to_reals
from ..errors import ConfigError
from ..metrics import EvalReport, SnrPoint, modulation_error_stats, psnr_from_mse
from ..quantizer import UniformQuantizer, grid_for_order, initial_distance
from .config import ExperimentConfig
from .data import Dataset, load_dataset

log = logging.getLogger("idmc")

PHASE_ANALOG, PHASE_CLUSTER, PHASE_FINETUNE, PHASE_STE, PHASE_EVAL = 1, 2, 3, 4, 5
MIN_DISTANCE = 1e-6

CHECKPOINT_MODE = {"analog": "analog", "idmc_r": "regular", "ste_baseline": "regular", "idmc_i": "irregular"}


def _stream(config: ExperimentConfig, phase: int, purpose: Stream) -> Rng:
    return Rng(config.seed, 16 * phase + int(purpose))


@dataclass
class TrainResult:
    path: Path
    params: CodecParams
    epoch_losses: list[float] = field(default_factory=list)
    initial_loss: float = math.nan
    distance_history: list[float] = field(default_factory=list)


def _lr_for_epoch(config: ExperimentConfig, epoch: int, epochs: int) -> float:
    if epoch >= int(config.lr_drop_at * epochs):
        return config.lr * config.lr_drop_factor
    return config.lr


def _check_architecture(params: CodecParams, config: ExperimentConfig, data: Dataset) -> None:
    enc, dec = layer_sizes(data.n, config.k, config.hidden_layers, config.width)
    expected = list(zip(enc[:-1], enc[1:])) + list(zip(dec[:-1], dec[1:]))
    if params.shape_table() != expected:
        raise ConfigError(
            f"checkpoint architecture {params.shape_table()} does not match config "
            f"(n={data.n}, k={config.k}, layers={config.hidden_layers}, width={config.width})"
        )


def train(params: CodecParams, data: Dataset, config: ExperimentConfig, epochs: int, phase: int,
          modem_for=None, train_distance: bool = False) -> TrainResult:
    """Adam over (theta, phi[, d]) with one channel SNR drawn per batch.

    ``modem_for(params)`` returns the modem for a digital system, or is None for
    the analog channel.
    """
    shuffle = _stream(config, phase, Stream.SHUFFLE)
    noise_rng = _stream(config, phase, Stream.NOISE)
    snr_rng = _stream(config, phase, Stream.SNR)
    lo, hi = config.snr_train_range
    state = AdamState()
    result = TrainResult(Path(), params)
    n_train, k = data.train.shape[0], config.k
    for epoch in range(epochs):
        lr = _lr_for_epoch(config, epoch, epochs)
        perm = shuffle.permutation(n_train)
        losses = []
        for start in range(0, n_train, config.batch_size):
            idx = perm[start:start + config.batch_size]
            snr = float(snr_rng.uniform(lo, hi))
            noise = mdm.channel_noise((idx.size, k), mdm.ChannelConfig(snr), noise_rng)
            if modem_for is None:
                def channel(y, _d, noise=noise):
                    return tape.add_noise(y, complex_to_reals(noise))
            else:
                modem = modem_for(params)

                def channel(y, d, modem=modem, noise=noise):
                    return tape.ste_modem(y, modem, noise, d)

            graph = build_graph(data.train[idx], snr, params, channel, train_distance)
            tape.backward(graph.loss)
            loss = float(graph.loss.value)
            if math.isnan(result.initial_loss):
                result.initial_loss = loss
            losses.append(loss)

            arrays = params.arrays()
            grads = [leaf.grad if leaf.grad is not None else np.zeros_like(leaf.value) for leaf in graph.leaves]
            lrs = [lr] * len(arrays)
            if graph.distance is not None:
                arrays = arrays + [np.asarray(params.distance)]
                grads = grads + [np.asarray(0.0 if graph.distance.grad is None else graph.distance.grad)]
                lrs.append(lr * config.distance_lr_scale)
            new = adam_step(arrays, grads, lrs, state)
            if graph.distance is not None:
                # keep the step strictly positive
                distance = max(float(new.pop()), MIN_DISTANCE)
                params = params.replace_arrays(new, distance=distance)
            else:
                params = params.replace_arrays(new)
        result.epoch_losses.append(float(np.mean(losses)))
        if params.distance is not None:
            result.distance_history.append(params.distance)
        log.info("phase %d epoch %d/%d loss %.6f%s", phase, epoch + 1, epochs, result.epoch_losses[-1],
                 "" if params.distance is None else f" d {params.distance:.5f}")
    result.params = params
    return result


def _data(config, data):
    return load_dataset(config) if data is None else data


def run_phase1_analog(config: ExperimentConfig, out, data: Dataset | None = None) -> TrainResult:
    """Train the analog codec (no modem) and write its checkpoint."""
    data = _data(config, data)
    params = init_params(data.n, config.k, _stream(config, PHASE_ANALOG, Stream.INIT),
                         config.hidden_layers, config.width)
    result = train(params, data, config, config.epochs_analog, PHASE_ANALOG)
    checkpoint.save(out, result.params, "analog")
    result.path = Path(out)
    return result


def _load_analog(path, config, data) -> CodecParams:
    params, mode = checkpoint.load(path)
    if mode != "analog":
        raise ConfigError(f"{path} is a {mode} checkpoint; the pretrained analog model is required")
    _check_architecture(params, config, data)
    return params


def sample_symbols(params: CodecParams, data: Dataset, config: ExperimentConfig, rng: Rng) -> np.ndarray:
    """Normalised encoder symbols pooled over ``cluster_sample_images`` training images."""
    count = config.cluster_sample_images
    if count > data.train.shape[0]:
        raise ValueError(f"requested {count} images, dataset has {data.train.shape[0]}")
    idx = rng.choice(data.train.shape[0], count)
    snrs = rng.uniform(*config.snr_train_range, size=count)
    pooled = [mdm.normalize_power(encode(data.train[i], float(s), params)[0]) for i, s in zip(idx, snrs)]
    return np.concatenate(pooled)


def run_phase2_cluster(analog_checkpoint, config: ExperimentConfig, out, data: Dataset | None = None) -> ClusterFit:
    """Cluster pooled encoder symbols into ``order`` points and write the constellation file."""
    data = _data(config, data)
    params = _load_analog(analog_checkpoint, config, data)
    samples = sample_symbols(params, data, config, _stream(config, PHASE_CLUSTER, Stream.SNR))
    result = fit(samples, config.order, _stream(config, PHASE_CLUSTER, Stream.CLUSTER),
                 config.cluster_max_iters, config.cluster_init)
    result.constellation.save(out)
    log.info("phase 2: %d-point constellation from %d symbols, %d iterations, converged=%s",
             config.order, samples.size, result.iterations, result.converged)
    return result


def calibration_distance(params: CodecParams, data: Dataset, config: ExperimentConfig) -> float:
    """Initial step from the first training batch, encoded at mid-range SNR."""
    lo, hi = config.snr_train_range
    y = mdm.normalize_power(encode(data.train[:config.batch_size], 0.5 * (lo + hi), params))
    _, b_pos = grid_for_order(config.order)
    return initial_distance(complex_to_reals(y), b_pos)


def _regular_modem_for(config):
    b_neg, b_pos = grid_for_order(config.order)
    return lambda p: mdm.Modem.regular(UniformQuantizer(p.distance, b_neg, b_pos))


def run_phase3_finetune(analog_checkpoint, config: ExperimentConfig, out, constellation=None,
                        data: Dataset | None = None) -> TrainResult:
    """Fine-tune the pretrained codec through the discrete chain.

    In ``analog`` mode training simply continues without a modem, which gives
    the analog reference the same epoch budget as the digital systems.
    """
    data = _data(config, data)
    params = _load_analog(analog_checkpoint, config, data)
    epochs = config.epochs_finetune
    if config.mode == "idmc_r":
        params.distance = calibration_distance(params, data, config)
        log.info("phase 3: initial distance %.6f", params.distance)
        result = train(params, data, config, epochs, PHASE_FINETUNE, _regular_modem_for(config), True)
    elif config.mode == "idmc_i":
        if constellation is None:
            raise ConfigError("idmc_i fine-tuning needs a constellation file")
        const = _load_constellation(constellation)
        modem = mdm.Modem.irregular(const)
        result = train(params, data, config, epochs, PHASE_FINETUNE, lambda p: modem)
    elif config.mode == "analog":
        result = train(params, data, config, epochs, PHASE_FINETUNE)
    else:
        raise ConfigError(f"mode {config.mode!r} has no fine-tuning phase")
    checkpoint.save(out, result.params, CHECKPOINT_MODE[config.mode])
    result.path = Path(out)
    return result


def run_ste_baseline(config: ExperimentConfig, out, data: Dataset | None = None) -> TrainResult:
    """Digital system trained from scratch on a fixed grid (step ``ste_distance``).

    Uses the combined epoch budget of the analog and fine-tuning phases.
    """
    data = _data(config, data)
    params = init_params(data.n, config.k, _stream(config, PHASE_ANALOG, Stream.INIT),
                         config.hidden_layers, config.width)
    params.distance = config.ste_distance
    epochs = config.epochs_analog + config.epochs_finetune
    result = train(params, data, config, epochs, PHASE_STE, _regular_modem_for(config), False)
    checkpoint.save(out, result.params, "regular")
    result.path = Path(out)
    return result


def _load_constellation(path) -> Constellation:
    try:
        return Constellation.load(path)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read constellation {path}: {exc}") from exc


def modem_from(params: CodecParams, mode: str, config: ExperimentConfig, constellation=None):
    if mode == "analog":
        return None
    if mode == "regular":
        return _regular_modem_for(config)(params)
    if constellation is None:
        raise ConfigError("irregular checkpoint needs a constellation file")
    const = constellation if isinstance(constellation, Constellation) else _load_constellation(constellation)
    return mdm.Modem.irregular(const)


def evaluate_sweep(checkpoint_path, config: ExperimentConfig, constellation=None,
                   data: Dataset | None = None, csv_out=None) -> EvalReport:
    """PSNR/MSE of the full chain on the test set at every grid SNR."""
    if not config.snr_eval_grid:
        raise ValueError("empty SNR grid")
    data = _data(config, data)
    params, mode = checkpoint.load(checkpoint_path)
    if mode != CHECKPOINT_MODE[config.mode]:
        raise ConfigError(f"checkpoint mode {mode!r} does not match config mode {config.mode!r}")
    _check_architecture(params, config, data)
    modem = modem_from(params, mode, config, constellation)
    report = EvalReport(config.mode, None if modem is None else modem.order, config.cbr, config.seed,
                        float(data.max_value))
    base = _stream(config, PHASE_EVAL, Stream.EVAL)
    for j, snr in enumerate(config.snr_eval_grid):
        report.points.append(evaluate_point(params, modem, data, config, snr, base.substream(j)))
    if csv_out is not None:
        atomic_write_text(csv_out, report.to_csv())
    return report


def evaluate_point(params, modem, data: Dataset, config: ExperimentConfig, snr_db, rng: Rng) -> SnrPoint:
    ch = mdm.ChannelConfig(None if snr_db is None else float(snr_db))
    cond = config.snr_conditioning_noiseless if ch.is_noiseless else ch.snr_db
    y = mdm.normalize_power(encode(data.test, cond, params))
    z = y if modem is None else mdm.modulate(y, modem)
    sq_err, usage, mod_err = 0.0, None, None
    for _ in range(config.eval_repeats):
        z_hat = mdm.transmit(z, ch, rng)
        y_hat = z_hat if modem is None else mdm.demodulate(z_hat, modem)
        x_hat = decode(y_hat, cond, params)
        sq_err += float(np.mean((x_hat - data.test) ** 2))
    mse = sq_err / config.eval_repeats * data.max_value**2
    if modem is not None:
        mod_err = modulation_error_stats(y, z)
        usage = np.bincount(modem.indices(z).ravel(), minlength=modem.order)
    return SnrPoint(None if ch.is_noiseless else ch.snr_db, psnr_from_mse(mse, data.max_value), mse, mod_err, usage)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    checkpoint: Path
    report: EvalReport
    csv: Path
    constellation: Path | None = None
    analog_checkpoint: Path | None = None
    train_results: list = field(default_factory=list)


def run_experiment(config: ExperimentConfig, workdir, analog_checkpoint=None,
                   data: Dataset | None = None) -> ExperimentResult:
    """Every phase the configured mode needs, then the evaluation sweep.

    Artifacts land in ``workdir`` under names derived from mode, order and
    seed.  A pretrained ``analog_checkpoint`` may be passed to skip phase 1.
    """
    data = _data(config, data)
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    tag = f"{config.mode}_M{config.order}_s{config.seed}" if config.mode != "analog" else f"analog_s{config.seed}"
    results = []
    constellation = None
    if config.mode == "ste_baseline":
        res = run_ste_baseline(config, workdir / f"{tag}.ckpt", data)
        results.append(res)
        analog = None
    else:
        if analog_checkpoint is None:
            res = run_phase1_analog(config, workdir / f"pretrain_s{config.seed}.ckpt", data)
            results.append(res)
            analog_checkpoint = res.path
        analog = Path(analog_checkpoint)
        if config.mode == "idmc_i":
            constellation = workdir / f"{tag}.const"
            run_phase2_cluster(analog, config, constellation, data)
        res = run_phase3_finetune(analog, config, workdir / f"{tag}.ckpt", constellation, data)
        results.append(res)
    csv_path = workdir / f"{tag}.csv"
    report = evaluate_sweep(res.path, config, constellation, data, csv_path)
    return ExperimentResult(config, res.path, report, csv_path, constellation, analog, results)
