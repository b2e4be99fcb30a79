"""Shared builders for the test suite."""
import numpy as np

from anampc.empc import solve_mpqp
from anampc.mpc import AffineModel, MpcSpec, condense, move_block
from anampc.polykit import Polytope, QpProblem


def saturation_qp():
    """min 1/2 u^2 - p u, -1 <= u <= 1, p in [-2, 2]."""
    from anampc.mpc import QpMpc

    return QpMpc(H=np.array([[1.0]]), F=np.array([[-1.0]]), c=np.zeros(1),
                 G=np.array([[1.0], [-1.0]]), w=np.array([1.0, 1.0]), K=np.zeros((2, 1)),
                 T=np.eye(1), Np=1, Nc=1, nu=1)


def saturation_controller():
    return solve_mpqp(saturation_qp(), Polytope.box([-2.0], [2.0]))


def _feasible_on(qp, domain) -> bool:
    """The feasible parameter set is convex, so checking the domain's vertices suffices."""
    from anampc.polykit import LpProblem, solve_lp, vertices

    for v in vertices(domain):
        _, A, b = qp.parametric(v)
        if not solve_lp(LpProblem(np.zeros(A.shape[1]), A, b)).optimal:
            return False
    return True


def random_instance(rng: np.random.Generator, with_disturbance: bool | None = None):
    """Random small MPC: n <= 3, Np <= 4, Nc <= 2, scalar input in [-1, 1],
    optional box on the first state; q <= 12 after de-duplication.  Redrawn
    until the QP is feasible on the whole parameter box."""
    while True:
        n = int(rng.integers(1, 4))
        Np = int(rng.integers(2, 5))
        Nc = int(rng.integers(1, 3))
        nnu = int(rng.integers(0, 2)) if with_disturbance is None else int(with_disturbance)
        A = rng.normal(size=(n, n))
        A *= rng.uniform(0.5, 1.1) / max(1e-9, np.abs(np.linalg.eigvals(A)).max())
        B = rng.normal(size=(n, 1))
        Bnu = rng.normal(size=(n, nnu)) * 0.3
        C = rng.normal(size=(1, n))
        model = AffineModel(A, B, Bnu, np.zeros(n), C, np.zeros((1, 1)), np.zeros((1, nnu)),
                            np.zeros(1))
        Hx = hx = None
        if rng.random() < 0.5:
            Hx = np.zeros((2, n))
            Hx[0, 0], Hx[1, 0] = 1.0, -1.0
            hx = np.array([4.0, 4.0])
        spec = MpcSpec(Np, Np, [[float(rng.uniform(2.0, 20.0))]], [[float(rng.uniform(0.01, 0.1))]],
                       [[float(rng.uniform(0, 0.3))]], [0.0], [0.0], np.zeros(n), Hx, hx,
                       np.array([[1.0], [-1.0]]), np.array([1.0, 1.0]))
        qp = move_block(condense(model, spec), Nc)
        domain = Polytope.box(-np.full(n + nnu, 2.5), np.full(n + nnu, 2.5))
        if _feasible_on(qp, domain):
            return model, spec, qp, domain


def buck_pipeline(capacitor="ceramic"):
    from anampc.harness import reference_config, run_pipeline

    return run_pipeline(reference_config(capacitor), check_samples=0)


def solve_lifted(model: AffineModel, spec: MpcSpec, p):
    """Full MPC with explicit state, output and input variables, solved by the QP kernel."""
    from anampc.polykit import solve_qp

    n, nu, Np = model.n, model.nu, spec.Np
    x0, nu_val = p[:n], p[n:]
    # variables: u_0..u_{Np-1}, x_1..x_Np
    nv = Np * nu + Np * n
    iu = lambda i: slice(i * nu, (i + 1) * nu)
    ix = lambda i: slice(Np * nu + (i - 1) * n, Np * nu + i * n)
    Aeq, beq = [], []
    for i in range(Np):
        row = np.zeros((n, nv))
        row[:, ix(i + 1)] = np.eye(n)
        row[:, iu(i)] = -model.B
        rhs = model.Bnu @ nu_val + model.b
        if i == 0:
            rhs = rhs + model.A @ x0
        else:
            row[:, ix(i)] = -model.A
        Aeq.append(row)
        beq.append(rhs)
    Aeq, beq = np.vstack(Aeq), np.concatenate(beq)
    H = np.zeros((nv, nv))
    f = np.zeros(nv)
    Q, R, Rd = spec.Q, spec.R, spec.R_delta
    for i in range(Np):
        # y_i = C x_i + D u_i + Dnu nu + d, with x_0 fixed
        Sy = np.zeros((model.ny, nv))
        Sy[:, iu(i)] = model.D
        off = model.Dnu @ nu_val + model.d - spec.y_r
        if i == 0:
            off = off + model.C @ x0
        else:
            Sy[:, ix(i)] = model.C
        H += 2 * Sy.T @ Q @ Sy
        f += 2 * Sy.T @ Q @ off
        Su = np.zeros((nu, nv))
        Su[:, iu(i)] = np.eye(nu)
        H += 2 * Su.T @ R @ Su
        f += -2 * Su.T @ R @ spec.u_r
        if i > 0:
            Sd = np.zeros((nu, nv))
            Sd[:, iu(i)] = np.eye(nu)
            Sd[:, iu(i - 1)] = -np.eye(nu)
            H += 2 * Sd.T @ Rd @ Sd
    # equality constraints as two inequalities keep the kernel's interface
    Ain = [Aeq, -Aeq]
    bin_ = [beq + 1e-12, -beq + 1e-12]
    for i in range(Np):
        if spec.Hu.shape[0]:
            row = np.zeros((spec.Hu.shape[0], nv))
            row[:, iu(i)] = spec.Hu
            Ain.append(row)
            bin_.append(spec.hu)
        if spec.Hx.shape[0]:
            row = np.zeros((spec.Hx.shape[0], nv))
            if i == 0:
                Ain.append(row)
                bin_.append(spec.hx - spec.Hx @ x0)
            else:
                row[:, ix(i)] = spec.Hx
                Ain.append(row)
                bin_.append(spec.hx)
    # regularize the state block so the Hessian is definite; states are pinned by the equalities
    H[Np * nu:, Np * nu:] += 1e-9 * np.eye(Np * n)
    res = solve_qp(QpProblem(0.5 * (H + H.T), f, np.vstack(Ain), np.concatenate(bin_)))
    return res


def max_overlap_radius(regions) -> float:
    """Largest Chebyshev radius of a pairwise region intersection (0 when all are disjoint)."""
    from anampc.polykit import chebyshev, normalize

    worst = 0.0
    for i in range(len(regions)):
        for j in range(i + 1, len(regions)):
            c = chebyshev(normalize(regions[i].poly.intersect(regions[j].poly)))
            worst = max(worst, c.radius)
    return worst


def continuity_error(ctrl, rng, per_facet: int = 50) -> float:
    """Largest law disagreement between regions meeting at sampled facet points."""
    from anampc.polykit import chebyshev

    worst = 0.0
    for r in ctrl.regions:
        A, b = r.poly.A, r.poly.b
        for j in range(A.shape[0]):
            ball = chebyshev(r.poly, A_eq=A[j:j + 1], b_eq=b[j:j + 1])
            if ball.empty or ball.radius <= 1e-9:
                continue
            a = A[j] / np.linalg.norm(A[j])
            D = rng.normal(size=(per_facet, A.shape[1]))
            D -= np.outer(D @ a, a)
            D /= np.maximum(np.linalg.norm(D, axis=1, keepdims=True), 1e-300)
            P = ball.center + 0.99 * ball.radius * rng.uniform(0, 1, (per_facet, 1)) * D
            for other in ctrl.regions:
                inside = other.poly.contains_many(P, 1e-11)
                if inside.any():
                    diff = P[inside] @ (other.K - r.K).T + (other.l - r.l)
                    worst = max(worst, float(np.abs(diff).max()))
    return worst
