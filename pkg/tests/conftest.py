import time

import numpy as np
import pytest

from unimesh.adapter import MeshHeadAdapter, init_recoverable
from unimesh.latents import LatentSimulator
from unimesh.sdf import SdfScene, decode, marching_cubes
from unimesh.training import TrainConfig, make_synthetic_dataset, train

SIM_SEED = 11
DATASET_SEED = 5
ADAPTER_SEED = 7
TRAIN_SEED = 123


@pytest.fixture(scope="session")
def sim() -> LatentSimulator:
    return LatentSimulator(seed=SIM_SEED)


@pytest.fixture(scope="session")
def ideal_adapter(sim) -> MeshHeadAdapter:
    """Exact inverse of the simulator: forward(A z + b) == z."""
    pinv_A = np.linalg.pinv(sim.A)
    return MeshHeadAdapter(
        base_W=pinv_A,
        lora_B=np.zeros((16, 4)),
        lora_A=np.zeros((4, 32)),
        bias=-pinv_A @ sim.b,
        rank=4,
        alpha=8.0,
    )


@pytest.fixture(scope="session")
def trained_setup(sim):
    """The full recoverable-task training run shared by acceptance tests."""
    dataset = make_synthetic_dataset(sim, n_shapes=32, points_per_shape=256, seed=DATASET_SEED)
    adapter = init_recoverable(sim, seed=ADAPTER_SEED)
    base_before = adapter.base_W.copy()
    cfg = TrainConfig(steps=2000, batch_size=8, learning_rate=1e-2, seed=TRAIN_SEED)
    t0 = time.perf_counter()
    report = train(adapter, dataset, cfg)
    elapsed = time.perf_counter() - t0
    return {
        "sim": sim,
        "dataset": dataset,
        "adapter": adapter,
        "report": report,
        "elapsed": elapsed,
        "base_before": base_before,
        "cfg": cfg,
    }


@pytest.fixture(scope="session")
def sphere_mesh():
    return marching_cubes(SdfScene.sphere(0.6), 64, ((-1, -1, -1), (1, 1, 1)))


@pytest.fixture(scope="session")
def default_mesh():
    return marching_cubes(decode(np.zeros(16)), 48, ((-1.2, -1.2, -1.2), (1.2, 1.2, 1.2)))
