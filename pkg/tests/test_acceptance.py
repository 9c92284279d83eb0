"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""
import contextlib
import filecmp
import json
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import random_expsum
from oracles import bessel_zero_bisect
from gpmemory.cli import main
from gpmemory.disk import DiskGeometry, Mode, PolarField, bessel_zero, eigenfunction_value, mode_set, polar_grid
from gpmemory.kernels import ConstantKernel, ExpSumKernel, khat_zeros
from gpmemory.moments import CertifyThresholds, certify, lemma1_scenario
from gpmemory.reductions import (
    cubic_roots,
    gp_to_damped_wave,
    memory_wave_cubic,
    simulate_damped_wave,
    stability_interval,
)
from gpmemory.simulate import (
    ModalProblem,
    residue_solution,
    residue_weights,
    simulate_disk,
    solve_modal_exact,
    solve_modal_quadrature,
)
from gpmemory.symbols import root_sequence

UNIT = DiskGeometry(1.0)
TWO_TERM = ExpSumKernel(((1.0, 1.0), (1.0, 2.0)))
CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture
def criterion(capsys):
    @contextlib.contextmanager
    def run(label, budget=None):
        t0 = time.perf_counter()
        ok = False
        try:
            yield
            ok = True
        finally:
            dt = time.perf_counter() - t0
            if ok and budget is not None and dt > budget:
                ok = False
                msg = f"runtime {dt:.1f}s over {budget}s"
            else:
                msg = f"{dt:.2f}s"
            with capsys.disabled():
                print(f"\n[{'PASS' if ok else 'FAIL'}] {label} ({msg})")
            if budget is not None:
                assert dt <= budget, f"{label}: {dt:.1f}s exceeds {budget}s"

    return run


def test_ac01_bessel_zeros(criterion):
    with criterion("AC1 Bessel zeros vs bisection oracle, interlacing m<=10 n<=40", budget=5):
        for n, m in ((1, 0), (1, 1), (2, 0)):
            ref = float(bessel_zero_bisect(m, n))
            assert abs(bessel_zero(m, n) - ref) <= 1e-12 * ref
        mu = np.array([[bessel_zero(m, n) for n in range(1, 42)] for m in range(12)])
        for m in range(11):
            for n in range(40):
                assert mu[m, n] < mu[m + 1, n] < mu[m, n + 1]


def test_ac02_orthonormality(criterion):
    with criterion("AC2 eigenbasis orthonormality m<=5 n<=5", budget=30):
        for R in (1.0, 2.5):
            geom = DiskGeometry(R)
            modes = mode_set(5, 5, geom)
            grid = polar_grid(geom, n_alpha=64, panels=32, order=16)
            w = (grid.r_weights * grid.r)[:, None] * (2 * np.pi / grid.alpha.size)
            phis = [PolarField.sample(lambda r, a, md=md: eigenfunction_value(md, geom, r, a), grid).values for md in modes]
            gram = np.array([[np.sum(w * p * np.conj(q)) for q in phis] for p in phis])
            assert np.max(np.abs(gram - np.eye(len(modes)))) < 1e-8


def test_ac03_khat_zero_interlacing(criterion):
    rng = np.random.default_rng(303)
    with criterion("AC3 Khat zeros real and interlacing, 200 kernels", budget=5):
        for _ in range(200):
            k = random_expsum(rng, max_terms=6)
            zs = khat_zeros(k)
            assert len(zs) == len(k) - 1 and all(z.imag == 0 for z in zs)
            poles = np.sort(-k.rates)
            zr = np.sort([z.real for z in zs])
            assert np.all(poles[:-1] < zr) and np.all(zr < poles[1:])


def test_ac04_clustering(criterion):
    with criterion("AC4 root clustering at -1.5, slope -1", budget=5):
        seq = root_sequence(TWO_TERM, 1, range(1, 41), UNIT, target=-1.5)
        d = seq.distances
        assert np.all(np.diff(d[3:]) < 0)
        slope = seq.clustering_slope()
        assert abs(slope + 1) <= 0.15, slope
        assert d[19] < 1e-3


def test_ac05_solver_triple(criterion):
    rng = np.random.default_rng(505)
    modes = mode_set(2, 3, UNIT)
    with criterion("AC5 exact / quadrature / residue agree to 1e-5, order 2", budget=60):
        done = 0
        while done < 20:
            k = random_expsum(rng, max_terms=3, c_range=(0.1, 1.0), g_range=(0.5, 3.0))
            allowed = [md for md in modes if md.lambda_sq * k.mu <= 36.0]
            if not allowed:
                continue
            lam2 = allowed[rng.integers(len(allowed))].lambda_sq
            xi = complex(rng.normal(), rng.normal())
            p = ModalProblem(lam2, k, xi)
            ex = solve_modal_exact(p, 10.0, 1e-3)
            cq = solve_modal_quadrature(p, 10.0, 1e-3)
            rs = residue_solution(k, lam2, xi, ex.times)
            assert ex.sup_distance(cq) < 1e-5
            assert np.max(np.abs(ex.values - rs)) < 1e-5
            assert np.max(np.abs(cq.values - rs)) < 1e-5
            done += 1
        p = ModalProblem(Mode.of(0, 1, UNIT).lambda_sq, TWO_TERM, 1.0)
        errs = []
        for h in (0.04, 0.02, 0.01):
            tr = solve_modal_quadrature(p, 10.0, h)
            errs.append(np.max(np.abs(tr.values - residue_solution(TWO_TERM, p.lambda_sq, 1.0, tr.times))))
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(np.abs(orders - 2.0) <= 0.2), orders


def test_ac06_residue_completeness(criterion):
    rng = np.random.default_rng(606)
    with criterion("AC6 residue weights sum to one, 100 symbols"):
        for _ in range(100):
            k = random_expsum(rng, max_terms=5)
            _, w = residue_weights(k, float(rng.uniform(0.1, 500.0)))
            assert abs(np.sum(w) - 1) < 1e-10


def test_ac07_obstruction_pair(criterion):
    cfg = json.loads((CONFIGS / "certify.json").read_text())
    th = CertifyThresholds(**cfg.get("certify", {}).get("thresholds", {}))
    sched = (5, 10, 15, 20, 25)
    with criterion("AC7 obstructed two-term vs unobstructed constant", budget=30):
        xi = lemma1_scenario(sched[-1])
        a = certify(TWO_TERM, UNIT, 4.0, sched, th, xi)
        b = certify(ConstantKernel(1.0), UNIT, 4.0, sched, th, xi)
        assert a.verdict == "obstructed" and a.growth >= 1e3
        assert b.verdict == "unobstructed" and b.growth <= 10


def test_ac08_reduction_exactness(criterion):
    rng = np.random.default_rng(808)
    with criterion("AC8 single-exponential GP equals damped wave to 1e-6"):
        for _ in range(10):
            q, g, w = rng.uniform(0.2, 3.0, 3)
            xi, a, b = rng.uniform(-1, 1, 3)
            u = lambda t, a=a, b=b: a + b * t
            wave = simulate_damped_wave(gp_to_damped_wave(q, g, u, omega=w, theta0=xi, du=lambda t, b=b: b), 10.0, 0.01)
            gp = solve_modal_exact(ModalProblem(w * w, ExpSumKernel(((q, g),)), xi, u), 10.0, 0.01)
            assert wave.sup_distance(gp) < 1e-6


def test_ac09_stability_interval(criterion):
    rng = np.random.default_rng(909)
    with criterion("AC9 stability interval (0, alpha gamma), sharp, omega-free"):
        for _ in range(10):
            al, g = rng.uniform(0.1, 5.0, 2)
            iv = stability_interval(al, g)
            assert iv.strict == (0.0, al * g) and iv.marginal == (0.0, al * g)
            assert iv.classify(0.0) == iv.classify(al * g) == "marginal"
            for w2 in (0.01, 0.1, 1.0, 10.0, 100.0):
                lo = np.max(cubic_roots(*memory_wave_cubic(al, al * g * (1 - 1e-3), g, w2)).real)
                hi = np.max(cubic_roots(*memory_wave_cubic(al, al * g * (1 + 1e-3), g, w2)).real)
                assert lo < 0 < hi
            assert stability_interval(al, g, "as_written").strict == (-al * g, 0.0)


def test_ac10_decay(criterion):
    with criterion("AC10 unforced disk decay below 1e-3 by t=50"):
        mode = Mode.of(0, 1, UNIT)
        grid = polar_grid(UNIT, n_alpha=16, panels=8)
        xi = PolarField.sample(lambda r, a: eigenfunction_value(mode, UNIT, r, a).real, grid)
        sol = simulate_disk(UNIT, TWO_TERM, xi, modes=[mode], T=50.0, h=0.01, n_snapshots=2)
        assert sol.times[-1] >= 50.0
        assert sol.norms[-1] < 1e-3 * sol.norms[0]


def test_ac11_cli_determinism(criterion, tmp_path):
    with criterion("AC11 byte-identical CLI outputs across runs and thread counts"):
        for cfg in sorted(CONFIGS.glob("*.json")):
            dirs = []
            for i, threads in enumerate((1, 4, 4)):
                d = tmp_path / f"{cfg.stem}-{i}"
                assert main([str(cfg), "--out", str(d), "--threads", str(threads)]) == 0
                dirs.append(d)
            names = sorted(p.name for p in dirs[0].iterdir() if p.name != "manifest.json")
            assert names
            for d in dirs[1:]:
                assert sorted(p.name for p in d.iterdir() if p.name != "manifest.json") == names
                _, mismatch, errors = filecmp.cmpfiles(dirs[0], d, names, shallow=False)
                assert not mismatch and not errors, (cfg.name, mismatch, errors)
