"""Game data: problem specification, validation, and block partitioning.

All time-varying coefficients are matrix polynomials in t (degree <= 4),
which keeps evaluation exact and covers constant-coefficient problems as
degree zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MAX_POLY_DEGREE = 4


class PolyMatrix:
    """Matrix-valued polynomial of t: coeffs[k] is the coefficient of t**k.

    coeffs has shape (degree+1, p, q). Evaluation uses Horner's scheme, so
    constant matrices (degree 0) evaluate with a single copy.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        c = np.asarray(coeffs, dtype=float)
        if c.ndim == 2:
            c = c[None, :, :]
        if c.ndim != 3:
            raise ValueError(f"PolyMatrix coefficients must be (deg+1, p, q), got shape {c.shape}")
        if c.shape[0] - 1 > MAX_POLY_DEGREE:
            raise ValueError(f"polynomial degree {c.shape[0] - 1} exceeds {MAX_POLY_DEGREE}")
        self.coeffs = c

    @classmethod
    def constant(cls, value) -> "PolyMatrix":
        return cls(np.atleast_2d(np.asarray(value, dtype=float)))

    @classmethod
    def zeros(cls, p: int, q: int) -> "PolyMatrix":
        return cls(np.zeros((1, p, q)))

    @property
    def shape(self):
        return self.coeffs.shape[1:]

    @property
    def degree(self) -> int:
        return self.coeffs.shape[0] - 1

    def __call__(self, t: float) -> np.ndarray:
        out = self.coeffs[-1].copy()
        for k in range(self.coeffs.shape[0] - 2, -1, -1):
            out *= t
            out += self.coeffs[k]
        return out

    def deriv(self) -> "PolyMatrix":
        if self.degree == 0:
            return PolyMatrix.zeros(*self.shape)
        ks = np.arange(1, self.degree + 1)
        return PolyMatrix(self.coeffs[1:] * ks[:, None, None])

    def block(self, rows: slice, cols: slice) -> "PolyMatrix":
        return PolyMatrix(self.coeffs[:, rows, cols])

    @property
    def T(self) -> "PolyMatrix":
        return PolyMatrix(np.swapaxes(self.coeffs, 1, 2))

    def is_zero(self, tol: float = 0.0) -> bool:
        return bool(np.max(np.abs(self.coeffs)) <= tol)

    def is_constant(self) -> bool:
        return self.degree == 0 or np.all(self.coeffs[1:] == 0.0)

    def __repr__(self):
        return f"PolyMatrix(shape={self.shape}, degree={self.degree})"


def as_poly(value, name: str, shape: tuple[int, int]) -> PolyMatrix:
    """Coerce a constant array or a PolyMatrix to a PolyMatrix of the given shape."""
    pm = value if isinstance(value, PolyMatrix) else PolyMatrix.constant(value)
    if pm.shape != shape:
        raise ValueError(f"{name}: expected shape {shape}, got {pm.shape}")
    return pm


def poly_hstack(blocks: list[PolyMatrix]) -> PolyMatrix:
    deg = max(b.degree for b in blocks)
    padded = [np.pad(b.coeffs, ((0, deg - b.degree), (0, 0), (0, 0))) for b in blocks]
    return PolyMatrix(np.concatenate(padded, axis=2))


def poly_vstack(blocks: list[PolyMatrix]) -> PolyMatrix:
    deg = max(b.degree for b in blocks)
    padded = [np.pad(b.coeffs, ((0, deg - b.degree), (0, 0), (0, 0))) for b in blocks]
    return PolyMatrix(np.concatenate(padded, axis=1))


def poly_blockdiag(blocks: list[PolyMatrix]) -> PolyMatrix:
    rows = []
    sizes = [b.shape for b in blocks]
    for i, b in enumerate(blocks):
        row = []
        for j, (p, q) in enumerate(sizes):
            row.append(b if i == j else PolyMatrix.zeros(b.shape[0], q))
        rows.append(poly_hstack(row))
    return poly_vstack(rows)


@dataclass(frozen=True)
class GameSpec:
    """All data of the cheap-control game.

    Slow state x in R^n, fast state y in R^m (m > 1). The minimizer's
    control cost carries epsilon**2; the first m1 diagonal fast-state
    weights lam_1..lam_m1 are positive, the remaining ones identically zero.
    """

    n: int
    m: int
    l: int
    m1: int
    t_f: float
    epsilon: float
    A1: PolyMatrix
    A2: PolyMatrix
    A3: PolyMatrix
    A4: PolyMatrix
    C1: PolyMatrix
    C2: PolyMatrix
    D1: PolyMatrix
    lam: PolyMatrix  # shape (1, m): diagonal entries of the fast-state weight
    G: PolyMatrix
    F1: np.ndarray
    x0: np.ndarray
    y0: np.ndarray

    def __post_init__(self):
        n, m, l = self.n, self.m, self.l
        coerced = {
            "A1": as_poly(self.A1, "A1", (n, n)),
            "A2": as_poly(self.A2, "A2", (n, m)),
            "A3": as_poly(self.A3, "A3", (m, n)),
            "A4": as_poly(self.A4, "A4", (m, m)),
            "C1": as_poly(self.C1, "C1", (n, l)),
            "C2": as_poly(self.C2, "C2", (m, l)),
            "D1": as_poly(self.D1, "D1", (n, n)),
            "lam": as_poly(self.lam, "lam", (1, m)),
            "G": as_poly(self.G, "G", (l, l)),
        }
        for name, pm in coerced.items():
            object.__setattr__(self, name, pm)
        F1 = np.atleast_2d(np.asarray(self.F1, dtype=float))
        if F1.shape != (n, n):
            raise ValueError(f"F1: expected shape {(n, n)}, got {F1.shape}")
        x0 = np.asarray(self.x0, dtype=float).reshape(-1)
        y0 = np.asarray(self.y0, dtype=float).reshape(-1)
        if x0.shape != (n,):
            raise ValueError(f"x0: expected length {n}, got {x0.shape}")
        if y0.shape != (m,):
            raise ValueError(f"y0: expected length {m}, got {y0.shape}")
        object.__setattr__(self, "F1", F1)
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "y0", y0)

    @property
    def N(self) -> int:
        return self.n + self.m

    @property
    def z0(self) -> np.ndarray:
        return np.concatenate([self.x0, self.y0])

    def with_epsilon(self, epsilon: float) -> "GameSpec":
        from dataclasses import replace

        return replace(self, epsilon=epsilon)

    def A_full(self) -> PolyMatrix:
        return poly_vstack([poly_hstack([self.A1, self.A2]), poly_hstack([self.A3, self.A4])])

    def C_full(self) -> PolyMatrix:
        return poly_vstack([self.C1, self.C2])

    def D2(self, t: float) -> np.ndarray:
        return np.diag(self.lam(t)[0])

    def D_full(self, t: float) -> np.ndarray:
        D = np.zeros((self.N, self.N))
        D[: self.n, : self.n] = self.D1(t)
        D[self.n:, self.n:] = self.D2(t)
        return D

    def F_full(self) -> np.ndarray:
        F = np.zeros((self.N, self.N))
        F[: self.n, : self.n] = self.F1
        return F

    def G_inv(self, t: float) -> np.ndarray:
        return np.linalg.inv(self.G(t))

    def Sv(self, t: float) -> np.ndarray:
        C = self.C_full()(t)
        return C @ np.linalg.solve(self.G(t), C.T)


@dataclass
class Check:
    name: str
    ok: bool
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list[Check] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def add(self, name: str, ok: bool, detail: str = ""):
        self.checks.append(Check(name, bool(ok), detail))

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.ok]

    def summary(self) -> str:
        lines = [f"[{'ok' if c.ok else 'FAIL'}] {c.name}" + (f": {c.detail}" if c.detail else "") for c in self.checks]
        lines.append("all invariants pass" if self.ok else f"{len(self.failures())} check(s) failed")
        return "\n".join(lines)


def time_grid(t_f: float, k: int = 201) -> np.ndarray:
    return np.linspace(0.0, t_f, k)


def _sym_min_eig(M: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(0.5 * (M + M.T)).min())


def validate_spec(
    spec: GameSpec,
    grid_points: int = 201,
    tol_psd: float = 1e-10,
    tol_pd: float = 1e-12,
    tol_zero: float = 1e-12,
) -> ValidationReport:
    """Check the standing hypotheses on the game data.

    Dimension mismatches raise at GameSpec construction; here the sign and
    symmetry conditions are checked on a uniform grid, reporting the worst
    grid point for each failure.
    """
    rep = ValidationReport()
    if not (spec.m > 1):
        rep.add("m > 1", False, f"m = {spec.m}")
    else:
        rep.add("m > 1", True)
    rep.add("1 <= m1 < m", 1 <= spec.m1 < spec.m, f"m1 = {spec.m1}, m = {spec.m}")
    rep.add("t_f > 0", spec.t_f > 0, f"t_f = {spec.t_f}")
    rep.add("epsilon > 0", spec.epsilon > 0, f"epsilon = {spec.epsilon}")

    sF = np.linalg.norm(spec.F1)
    eF = _sym_min_eig(spec.F1)
    sym_ok = np.allclose(spec.F1, spec.F1.T, atol=tol_zero * (1 + sF))
    rep.add("F1 symmetric PSD", sym_ok and eF >= -tol_psd * (1 + sF), f"min eigenvalue {eF:.3e}")

    ts = time_grid(spec.t_f, grid_points)
    worst_D1, worst_D1_t = np.inf, 0.0
    worst_G, worst_G_t = np.inf, 0.0
    for t in ts:
        D1 = spec.D1(t)
        e = _sym_min_eig(D1)
        if e < worst_D1:
            worst_D1, worst_D1_t = e, t
        Gt = spec.G(t)
        e = _sym_min_eig(Gt)
        if e < worst_G:
            worst_G, worst_G_t = e, t
    nD1 = max(np.linalg.norm(spec.D1(t)) for t in (0.0, spec.t_f))
    nG = max(np.linalg.norm(spec.G(t)) for t in (0.0, spec.t_f))
    rep.add(
        "D1 PSD on [0,t_f]",
        worst_D1 >= -tol_psd * (1 + nD1),
        f"min eigenvalue {worst_D1:.3e} at t = {worst_D1_t:.4f}",
    )
    rep.add(
        "G positive definite on [0,t_f]",
        worst_G >= tol_pd * (1 + nG),
        "G not positive definite" if worst_G < tol_pd * (1 + nG) else f"min eigenvalue {worst_G:.3e} at t = {worst_G_t:.4f}",
    )

    lam_grid = np.array([spec.lam(t)[0] for t in ts])  # (grid, m)
    for p in range(spec.m1):
        vals = lam_grid[:, p]
        imin = int(np.argmin(vals))
        ok = vals[imin] > 0
        # grid minimum plus a root check of the degree-<=4 coefficient polynomial
        cp = spec.lam.coeffs[:, 0, p]
        if ok and len(cp) > 1 and np.any(cp[1:] != 0.0):
            roots = np.roots(cp[::-1])
            real = roots[np.abs(roots.imag) < 1e-10].real
            ok = not np.any((real >= 0) & (real <= spec.t_f))
        rep.add(
            f"lambda_{p + 1} positive on [0,t_f]",
            ok,
            "" if ok else f"lambda_{p + 1} not positive on [0,t_f] (min {vals[imin]:.3e} at t = {ts[imin]:.4f})",
        )
    for r in range(spec.m1, spec.m):
        cz = np.max(np.abs(spec.lam.coeffs[:, 0, r]))
        rep.add(f"lambda_{r + 1} identically zero", cz <= tol_zero, f"max coefficient magnitude {cz:.3e}")
    return rep


@dataclass(frozen=True)
class BlockPartition:
    """Blocks of the assembled game matrices split at (n, m1, m-m1).

    Su_scaled holds B B^T; the 1/epsilon**2 factor is applied only by the
    exact solver, never here, so nothing in the asymptotic construction can
    touch an epsilon**-2 quantity.
    """

    n: int
    m: int
    m1: int
    spec: GameSpec
    Abar1: PolyMatrix
    Abar2: PolyMatrix
    Abar3: PolyMatrix
    Abar4: PolyMatrix
    Abar5: PolyMatrix
    Abar6: PolyMatrix
    Abar7: PolyMatrix
    Abar8: PolyMatrix
    Abar9: PolyMatrix
    lam1: PolyMatrix  # shape (1, m1), the positive diagonal entries
    B: np.ndarray
    F: np.ndarray
    Su_scaled: np.ndarray
    assumption_A2_satisfied: bool

    def Lambda(self, t: float) -> np.ndarray:
        return np.diag(self.lam1(t)[0])

    def Lambda_sqrt(self, t: float) -> np.ndarray:
        return np.diag(np.sqrt(self.lam1(t)[0]))

    def A(self, t: float) -> np.ndarray:
        return self.spec.A_full()(t)

    def D(self, t: float) -> np.ndarray:
        return self.spec.D_full(t)

    def Sv(self, t: float) -> np.ndarray:
        return self.spec.Sv(t)

    def Sv_block(self, i: int, j: int, t: float) -> np.ndarray:
        s = self._splits()
        Sv = self.Sv(t)
        return Sv[s[i]:s[i + 1], s[j]:s[j + 1]]

    def Sv1(self, t: float) -> np.ndarray:
        C1 = self.spec.C1(t)
        return C1 @ np.linalg.solve(self.spec.G(t), C1.T)

    def _splits(self):
        return (0, self.n, self.n + self.m1, self.n + self.m)


def partition(spec: GameSpec, tol_zero: float = 1e-12) -> BlockPartition:
    """Split A(t) and S_v(t) at the (slow, positive-weight fast, zero-weight fast) boundaries."""
    n, m, m1 = spec.n, spec.m, spec.m1
    m2 = m - m1
    Abar2 = spec.A2.block(slice(None), slice(0, m1))
    Abar3 = spec.A2.block(slice(None), slice(m1, m))
    Abar4 = spec.A3.block(slice(0, m1), slice(None))
    Abar7 = spec.A3.block(slice(m1, m), slice(None))
    Abar5 = spec.A4.block(slice(0, m1), slice(0, m1))
    Abar6 = spec.A4.block(slice(0, m1), slice(m1, m))
    Abar8 = spec.A4.block(slice(m1, m), slice(0, m1))
    Abar9 = spec.A4.block(slice(m1, m), slice(m1, m))
    B = np.zeros((n + m, m))
    B[n:, :] = np.eye(m)
    F = spec.F_full()
    return BlockPartition(
        n=n,
        m=m,
        m1=m1,
        spec=spec,
        Abar1=spec.A1,
        Abar2=Abar2,
        Abar3=Abar3,
        Abar4=Abar4,
        Abar5=Abar5,
        Abar6=Abar6,
        Abar7=Abar7,
        Abar8=Abar8,
        Abar9=Abar9,
        lam1=spec.lam.block(slice(None), slice(0, m1)),
        B=B,
        F=F,
        Su_scaled=B @ B.T,
        assumption_A2_satisfied=Abar3.is_zero(tol_zero) if m2 > 0 else True,
    )
