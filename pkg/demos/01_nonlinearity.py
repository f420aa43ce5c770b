"""Check the structural identities of the built-in nonlinearities.

Every field F = grad G must satisfy Euler's relation U.F(U) = (p+1) G(U),
scale like F(lam U) = lam^p F(U), and agree with a finite-difference gradient
of G.  We sample random points and print the worst residual of each identity.
"""

from liouville_lab.nonlinearity import GradientCoupled, QuadraticSystem, ScalarPower, ScalarQuadratic, check_identities

fields = [ScalarPower(p=3.0), ScalarPower(p=1.5), ScalarQuadratic(), GradientCoupled(q=0.0, beta=1.0),
          GradientCoupled(q=1.0, beta=-0.5), QuadraticSystem(2.0)]

print(f"{'field':<22}{'p':>5}{'N':>3}{'euler':>12}{'homog':>12}{'gradient':>12}  ok")
for fld in fields:
    rep = check_identities(fld, samples=500)
    print(f"{fld.name:<22}{fld.p:>5g}{fld.N:>3}{rep.euler:>12.2e}{rep.homogeneity:>12.2e}{rep.gradient:>12.2e}"
          f"  {rep.passed}")
