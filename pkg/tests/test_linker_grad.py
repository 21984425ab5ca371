"""Finite-difference validation of the analytic gradients.

Central differences are only meaningful where the loss is differentiable,
so coordinates whose +/-h evaluations cross a ReLU kink (detected by
comparing activation sign patterns) are redrawn.
"""

import numpy as np
import pytest

from tracklinker.linker import model

H = 1e-4
REL_TOL = 1e-4


def random_params(rng):
    params = model.init_params(int(rng.integers(2 ** 31)), dtype=np.float64)
    for name, arr in params.tensors.items():
        if name.endswith(".beta"):
            arr[:] = rng.uniform(0.2, 0.7, arr.shape) * rng.choice([-1.0, 1.0], arr.shape)
        elif name.endswith(".gamma"):
            arr[:] = rng.uniform(0.7, 1.3, arr.shape)
    return params


def relu_signs(cache):
    signs = [layer["act"] > 0
             for key in ("t_caches", "s_caches")
             for layer in cache["windows"][key]]
    signs.append(cache["h"] > 0)
    return signs


def loss_and_signs(params, wa, wb, label, smoothing):
    logits, cache = model.forward_batch(params, wa, wb, train=True)
    value, _ = model.batch_loss(logits, label, smoothing)
    return value, relu_signs(cache)


def run_gradient_check(draws, coords_per_tensor, seed, max_retries=30):
    rng = np.random.default_rng(seed)
    checked = 0
    worst = 0.0
    for _ in range(draws):
        params = random_params(rng)
        wa = rng.uniform(0.0, 1.1, (1, 30, 5))
        wb = rng.uniform(0.0, 1.1, (1, 30, 5))
        label = np.array([int(rng.integers(0, 2))])
        smoothing = float(rng.choice([0.0, 0.1]))
        logits, cache = model.forward_batch(params, wa, wb, train=True)
        _, dlogits = model.batch_loss(logits, label, smoothing)
        grads = model.backward_batch(params, cache, dlogits)
        for name in sorted(grads):
            arr = params.tensors[name]
            done = 0
            for _ in range(max_retries):
                if done == coords_per_tensor:
                    break
                idx = tuple(int(rng.integers(0, s)) for s in arr.shape)
                original = arr[idx]
                arr[idx] = original + H
                up, signs_up = loss_and_signs(params, wa, wb, label, smoothing)
                arr[idx] = original - H
                down, signs_down = loss_and_signs(params, wa, wb, label, smoothing)
                arr[idx] = original
                if any((a != b).any() for a, b in zip(signs_up, signs_down)):
                    continue  # kink inside the interval; derivative undefined
                fd = (up - down) / (2.0 * H)
                analytic = grads[name][idx]
                rel = abs(fd - analytic) / max(abs(fd), abs(analytic), 1e-6)
                worst = max(worst, rel)
                assert rel <= REL_TOL, (f"{name}{idx}: analytic {analytic:.8g} "
                                        f"vs finite difference {fd:.8g} (rel {rel:.2e})")
                checked += 1
                done += 1
    return checked, worst


def test_gradients_match_finite_differences():
    checked, worst = run_gradient_check(draws=12, coords_per_tensor=2, seed=101)
    assert checked >= 12 * len([k for k in model.architecture()
                                if model.is_learnable(k)])
    assert worst <= REL_TOL


def test_gradcheck_covers_every_tensor_kind():
    rng = np.random.default_rng(5)
    params = random_params(rng)
    wa = rng.uniform(0.0, 1.1, (1, 30, 5))
    wb = rng.uniform(0.0, 1.1, (1, 30, 5))
    logits, cache = model.forward_batch(params, wa, wb, train=True)
    _, dlogits = model.batch_loss(logits, np.array([1]), 0.1)
    grads = model.backward_batch(params, cache, dlogits)
    kinds = {name.split(".")[-1] for name in grads}
    assert kinds == {"w", "b", "gamma", "beta"}
