import numpy as np
import pytest

from idmc.autonet import checkpoint
from idmc.autonet.network import init_params
from idmc.clustering import Constellation
from idmc.core import Rng
from idmc.errors import ConfigError
from idmc.pipeline import (
    ExperimentConfig,
    evaluate_sweep,
    load_dataset,
    parse_config,
    run_phase1_analog,
    run_phase2_cluster,
    run_phase3_finetune,
    run_ste_baseline,
)
from idmc.pipeline.pnm import PNMError, decode_pnm, encode_pnm, read_pnm, write_pnm
from idmc.pipeline.run import _stream, PHASE_ANALOG, sample_symbols
from idmc.core import Stream
from idmc.quantizer import UniformQuantizer, quantize

SMALL = dict(train_size=256, test_size=64, batch_size=32, epochs_analog=3, epochs_finetune=2, lr=1e-3,
             cluster_sample_images=64, snr_eval_grid=(0.0, 10.0, 20.0))


@pytest.fixture(scope="module")
def small():
    cfg = ExperimentConfig(**SMALL)
    return cfg, load_dataset(cfg)


@pytest.fixture(scope="module")
def pretrained(small, tmp_path_factory):
    cfg, data = small
    path = tmp_path_factory.mktemp("pre") / "analog.ckpt"
    return run_phase1_analog(cfg.replace(mode="analog"), path, data)


# -- config -----------------------------------------------------------------

def test_parse_config_types():
    cfg = parse_config("""
        # comment
        mode = idmc_i
        order = 64
        cbr = 1/6          # fraction
        snr_eval_grid = 0, 10, noiseless
        lr = 1e-3
    """)
    assert cfg.mode == "idmc_i" and cfg.order == 64
    assert cfg.cbr == pytest.approx(1 / 6)
    assert cfg.snr_eval_grid == (0.0, 10.0, None)


@pytest.mark.parametrize("text", [
    "bogus = 1", "order = four", "mode = fancy", "order = 8\nmode = idmc_r", "cbr = 0", "cbr = 2",
    "snr_train_range = 20, 0", "snr_eval_grid = ", "order = 4\norder = 16", "no equals sign",
    "dataset = directory",
])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_config_round_trip():
    cfg = ExperimentConfig(mode="idmc_i", order=8, snr_eval_grid=(0.0, None))
    assert parse_config(cfg.to_text()) == cfg


def test_non_square_order_allowed_for_irregular():
    assert parse_config("mode = idmc_i\norder = 8").order == 8


@pytest.mark.parametrize("cbr, n", [(1 / 24, 64), (1 / 6, 64), (1 / 24, 3072), (0.3, 7)])
def test_cbr_accounting(cbr, n):
    cfg = ExperimentConfig(cbr=cbr, image_height=n, image_width=1)
    assert cfg.k >= 1
    assert abs(cfg.k / cfg.n - cbr) <= 1 / cfg.n


# -- images and datasets ----------------------------------------------------

@pytest.mark.parametrize("shape, maxval", [((5, 7), 255), ((4, 3, 3), 255), ((2, 2), 65535)])
def test_pnm_round_trip(tmp_path, np_rng, shape, maxval):
    px = np_rng.integers(0, maxval + 1, size=shape)
    write_pnm(tmp_path / "a.pnm", px, maxval)
    back, mv = read_pnm(tmp_path / "a.pnm")
    assert mv == maxval
    assert np.array_equal(back.reshape(shape), px)


def test_pnm_header_comments():
    data = b"P5\n# made by hand\n2 1\n# depth\n255\n\x00\xff"
    px, mv = decode_pnm(data)
    assert px.ravel().tolist() == [0, 255]


@pytest.mark.parametrize("data", [b"P2\n1 1\n255\n0", b"P5\n2 2\n255\n\x00", b"P5\n0 2\n255\n", b"P5\n1 1\n70000\n\x00\x00"])
def test_pnm_rejects(data):
    with pytest.raises(PNMError):
        decode_pnm(data)


def test_synthetic_is_seed_deterministic():
    cfg = ExperimentConfig(train_size=16, test_size=4)
    a, b = load_dataset(cfg), load_dataset(cfg)
    assert np.array_equal(a.train, b.train) and np.array_equal(a.test, b.test)
    c = load_dataset(cfg.replace(data_seed=1))
    assert not np.array_equal(a.train, c.train)
    assert a.train.min() >= 0 and a.train.max() <= 1 and a.train.shape == (16, 64)


def test_directory_dataset(tmp_path, np_rng):
    for i in range(6):
        write_pnm(tmp_path / f"img{i:02d}.ppm", np_rng.integers(0, 256, (4, 4, 3)))
    cfg = ExperimentConfig(dataset="directory", dataset_dir=str(tmp_path), image_height=4, image_width=4,
                           image_channels=3, train_size=4, test_size=2)
    data = load_dataset(cfg)
    assert data.train.shape == (4, 48) and data.test.shape == (2, 48) and data.bit_depth == 8
    with pytest.raises(ConfigError):
        load_dataset(cfg.replace(train_size=10))
    with pytest.raises(ConfigError):
        load_dataset(cfg.replace(image_height=5))


# -- phases -----------------------------------------------------------------

def test_phase1_zero_epochs_is_initialisation(small, tmp_path):
    cfg, data = small
    cfg = cfg.replace(mode="analog", epochs_analog=0)
    run_phase1_analog(cfg, tmp_path / "a.ckpt", data)
    init = init_params(data.n, cfg.k, _stream(cfg, PHASE_ANALOG, Stream.INIT), cfg.hidden_layers, cfg.width)
    checkpoint.save(tmp_path / "b.ckpt", init, "analog")
    assert (tmp_path / "a.ckpt").read_bytes() == (tmp_path / "b.ckpt").read_bytes()


def test_phase1_deterministic(small, pretrained, tmp_path):
    cfg, data = small
    again = run_phase1_analog(cfg.replace(mode="analog"), tmp_path / "a.ckpt", data)
    assert again.path.read_bytes() == pretrained.path.read_bytes()
    assert again.epoch_losses == pretrained.epoch_losses


def test_phase1_learns(pretrained):
    assert pretrained.epoch_losses[-1] < pretrained.initial_loss


def test_phase2_writes_order_points(small, pretrained, tmp_path):
    cfg, data = small
    cfg = cfg.replace(mode="idmc_i", order=16)
    res = run_phase2_cluster(pretrained.path, cfg, tmp_path / "c.txt", data)
    const = Constellation.load(tmp_path / "c.txt")
    assert const.order == 16
    assert np.array_equal(const.points, res.constellation.points)
    run_phase2_cluster(pretrained.path, cfg, tmp_path / "d.txt", data)
    assert (tmp_path / "c.txt").read_bytes() == (tmp_path / "d.txt").read_bytes()


def test_phase2_beats_best_uniform_grid(small, pretrained, tmp_path):
    cfg, data = small
    cfg = cfg.replace(mode="idmc_i", order=16)
    res = run_phase2_cluster(pretrained.path, cfg, tmp_path / "c.txt", data)
    params, _ = checkpoint.load(pretrained.path)
    from idmc.pipeline.run import PHASE_CLUSTER

    samples = sample_symbols(params, data, cfg, _stream(cfg, PHASE_CLUSTER, Stream.SNR))
    fitted = np.sqrt(res.objective / samples.size)
    best = np.inf
    for d in np.geomspace(0.02, 4.0, 64):
        q = UniformQuantizer(d, -2, 1)
        z = quantize(samples.real, q) + 1j * quantize(samples.imag, q)
        best = min(best, np.sqrt(np.mean(np.abs(samples - z) ** 2)))
    assert fitted <= best


def test_phase2_too_many_images(small, pretrained, tmp_path):
    cfg, data = small
    with pytest.raises(ValueError):
        run_phase2_cluster(pretrained.path, cfg.replace(mode="idmc_i", cluster_sample_images=10**6),
                           tmp_path / "c.txt", data)


def test_phase3_zero_epochs_keeps_weights(small, pretrained, tmp_path):
    cfg, data = small
    cfg = cfg.replace(mode="idmc_r", order=16, epochs_finetune=0)
    run_phase3_finetune(pretrained.path, cfg, tmp_path / "r.ckpt", data=data)
    a, _ = checkpoint.load(pretrained.path)
    b, mode = checkpoint.load(tmp_path / "r.ckpt")
    assert mode == "regular" and b.distance > 0
    for x, y in zip(a.arrays(), b.arrays()):
        assert np.array_equal(x, y)


def test_phase3_learns_distance(small, pretrained, tmp_path):
    cfg, data = small
    cfg = cfg.replace(mode="idmc_r", order=16, epochs_finetune=1)
    d0 = run_phase3_finetune(pretrained.path, cfg.replace(epochs_finetune=0), tmp_path / "a.ckpt", data=data)
    d1 = run_phase3_finetune(pretrained.path, cfg, tmp_path / "b.ckpt", data=data)
    assert d1.params.distance != d0.params.distance


def test_phase3_needs_constellation(small, pretrained, tmp_path):
    cfg, data = small
    with pytest.raises(ConfigError):
        run_phase3_finetune(pretrained.path, cfg.replace(mode="idmc_i"), tmp_path / "i.ckpt", data=data)


def test_phase3_rejects_mismatched_architecture(small, pretrained, tmp_path):
    cfg, data = small
    with pytest.raises(ConfigError):
        run_phase3_finetune(pretrained.path, cfg.replace(mode="idmc_r", cbr=1 / 6), tmp_path / "x.ckpt", data=data)
    with pytest.raises(ConfigError):
        run_phase3_finetune(pretrained.path, cfg.replace(mode="idmc_r", hidden_width=17), tmp_path / "x.ckpt",
                            data=data)


def test_phase3_rejects_digital_checkpoint(small, pretrained, tmp_path):
    cfg, data = small
    cfg = cfg.replace(mode="idmc_r", epochs_finetune=0)
    run_phase3_finetune(pretrained.path, cfg, tmp_path / "r.ckpt", data=data)
    with pytest.raises(ConfigError):
        run_phase3_finetune(tmp_path / "r.ckpt", cfg, tmp_path / "again.ckpt", data=data)


def test_idmc_i_finetune_and_evaluate(small, pretrained, tmp_path):
    cfg, data = small
    cfg = cfg.replace(mode="idmc_i", order=4)
    run_phase2_cluster(pretrained.path, cfg, tmp_path / "c.txt", data)
    res = run_phase3_finetune(pretrained.path, cfg, tmp_path / "i.ckpt", tmp_path / "c.txt", data)
    rep = evaluate_sweep(res.path, cfg, tmp_path / "c.txt", data, tmp_path / "i.csv")
    assert [p.snr_db for p in rep.points] == [0.0, 10.0, 20.0]
    usage = rep.points[0].constellation_usage
    assert usage.size == 4 and usage.sum() == data.test.shape[0] * cfg.k
    assert (tmp_path / "i.csv").read_text().startswith("snr_db,psnr_db,mse,mode,order,cbr,seed\n")


def test_ste_baseline_checkpoint(small, tmp_path):
    cfg, data = small
    cfg = cfg.replace(mode="ste_baseline", order=4)
    a = run_ste_baseline(cfg, tmp_path / "s.ckpt", data)
    params, mode = checkpoint.load(a.path)
    assert mode == "regular" and params.distance == 1.0
    rep = evaluate_sweep(a.path, cfg, data=data)
    assert len(rep.points) == 3
    b = run_ste_baseline(cfg, tmp_path / "t.ckpt", data)
    assert a.path.read_bytes() == b.path.read_bytes()


def test_evaluate_noiseless_is_distortion_only(small, pretrained):
    cfg, data = small
    cfg = cfg.replace(mode="analog", snr_eval_grid=(None,))
    rep = evaluate_sweep(pretrained.path, cfg, data=data)
    from idmc.autonet.network import decode, encode
    from idmc.modem import normalize_power
    from idmc.metrics import psnr

    params, _ = checkpoint.load(pretrained.path)
    mu = cfg.snr_train_range[1]
    x_hat = decode(normalize_power(encode(data.test, mu, params)), mu, params)
    assert rep.points[0].snr_db is None
    assert rep.points[0].psnr_db == pytest.approx(psnr(data.test, x_hat, 8), abs=1e-9)


def test_evaluate_mode_mismatch(small, pretrained):
    cfg, data = small
    with pytest.raises(ConfigError):
        evaluate_sweep(pretrained.path, cfg.replace(mode="idmc_r"), data=data)
