import numpy as np
import pytest
import torch
from PIL import Image

from tinynets import IMAGES_PER_CLASS, N_CLASSES, make_net


@pytest.fixture(scope="session")
def image_folder(tmp_path_factory):
    """Class-subdirectory folder of 54 small generated images."""
    root = tmp_path_factory.mktemp("images")
    rng = np.random.default_rng(0)
    base = np.array([[200, 60, 60], [60, 200, 60], [60, 60, 200]])
    for cls in range(N_CLASSES):
        d = root / f"class{cls}"
        d.mkdir()
        for k in range(IMAGES_PER_CLASS):
            pixels = rng.integers(0, 70, size=(24, 24, 3)) + base[cls]
            img = Image.fromarray(pixels.clip(0, 255).astype("uint8"))
            img.save(d / f"img{k:02d}.png")
    return root


@pytest.fixture(scope="session")
def scripted_models(tmp_path_factory):
    """Two seeded TinyNets of different widths saved as TorchScript."""
    d = tmp_path_factory.mktemp("models")
    paths = []
    for width, seed in ((4, 1), (16, 2)):
        net = make_net(width, seed)
        path = d / f"tiny{width}.pt"
        torch.jit.save(torch.jit.script(net), str(path))
        paths.append(str(path))
    return paths
