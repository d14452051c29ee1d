"""Ground states, thresholds and the radial solver on a few small problems.

Run with ``python3 demos/groundstate_tour.py``; takes a few seconds.
"""

from hardycrit.coefficients import make_h_preset
from hardycrit.fields import Field, ground_state, lambda_N, nu_of, talenti
from hardycrit.energy import mountain_pass_level, sobolev_quotient_QA
from hardycrit.obstructions import nonexistence_audit
from hardycrit.problem import ProblemSpec
from hardycrit.solver import SolverOptions, nearest_ground_state, solve_radial
from hardycrit.thresholds import best_sobolev


def main():
    print("N  A/Lambda  Q_A(w)/S  (1-A/Lambda)^((N-1)/N)  level")
    for N in (3, 4, 5):
        S = best_sobolev(N)
        for frac in (0.1, 0.5, 0.9):
            A = frac * lambda_N(N)
            spec = ProblemSpec.make(N, A)
            w = Field.single(ground_state(N, A))
            q = sobolev_quotient_QA(A, w) / S
            print(f"{N}  {frac:7.2f}  {q:.10f}  {(1 - frac) ** ((N - 1) / N):.10f}  "
                  f"{mountain_pass_level(spec, w):.8f}")

    spec = ProblemSpec.make(4, 0.5)
    r = solve_radial(spec, Field.single(talenti(4, 5.0)), SolverOptions(tolerance=1e-9))
    mu, dist = nearest_ground_state(r.field, spec)
    print(f"\nradial descent from a Talenti bubble (N=4, A=0.5): {r.iterations} iterations, "
          f"J = {r.J:.10f}, nearest w_mu at mu = {mu:.4f}, max rel distance {dist:.1e}")

    h = make_h_preset("bump_near_zero", {"h0": 0.0, "c1": 0.2, "exponent": nu_of(0.1, 3),
                                         "delta": 0.2, "dip": 0.02}, 3)
    spec = ProblemSpec.make(3, 0.1, h)
    r = solve_radial(spec, Field.single(ground_state(3, 0.1)))
    print(f"perturbed problem (N=3, A=0.1): J = {r.J:.6f} below c* = {r.threshold['value']:.6f}")

    h = make_h_preset("radial_power", {"amplitude": 0.05, "exponent": 1.0}, 3)
    v = nonexistence_audit(ProblemSpec.make(3, 0.1, h))
    print(f"increasing radial h: {v.verdict.value}, witness integral {v.witness_value:.6f}")


if __name__ == "__main__":
    main()
