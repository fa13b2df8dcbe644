"""Regenerates the selftest fixtures from independent numpy reference code."""

import json
import math
import pathlib

import numpy as np

HERE = pathlib.Path(__file__).parent


def jacobian(x, y, h):
    r2 = x * x + y * y
    d = math.sqrt(r2 + h * h)
    return np.array([[-y / r2, 0.0, x / r2, 0.0], [x / d, 0.0, y / d, 0.0]])


def ekf_posterior():
    rows = []
    rng = np.random.default_rng(7)
    for _ in range(4):
        a = rng.normal(size=(4, 4))
        mp = a @ a.T * 0.02 + np.eye(4) * 1e-3
        x, y = rng.normal() * 5.0, 1.0 + 15.0 * rng.random()
        qm = np.diag([1e-4 + rng.random() * 1e-2, 1e-3 + rng.random()])
        hj = jacobian(x, y, 50.0)
        s = qm + hj @ mp @ hj.T
        k = mp @ hj.T @ np.linalg.inv(s)
        post = (np.eye(4) - k @ hj) @ mp
        post = 0.5 * (post + post.T)
        rows.append({"prior_mse": mp.tolist(), "position": [x, y], "altitude_m": 50.0,
                     "meas_cov": qm.tolist(), "posterior_mse": post.tolist()})
    return {"kind": "ekf_posterior", "tolerance": 1e-10, "rows": rows}


def model_constants():
    p, nsym, nt, nr, noise, rcs, lam, h = 0.1, 1e4, 16, 16, 1e-11, 0.2, 0.01, 50.0
    fp = 4.0 * math.pi
    rho = p * nsym * nt * nr / noise * rcs * lam * lam / fp**3
    snr = p * (lam / fp) ** 2 / noise
    return {"kind": "model_constants", "tolerance": 1e-12,
            "rows": [{"n_tx": nt, "y_min_m": 1.0, "sensing_gain": rho,
                      "channel_snr": snr, "gamma_max": snr * nt / (1.0 + h * h)}]}


if __name__ == "__main__":
    (HERE / "ekf_posterior.json").write_text(json.dumps(ekf_posterior(), indent=1) + "\n")
    (HERE / "model_constants.json").write_text(json.dumps(model_constants(), indent=1) + "\n")
