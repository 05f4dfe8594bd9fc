# Analytic variance decomposition of the Ishigami function.
from math import pi
a, b = 7.0, 0.1
V1 = 0.5 * (1 + b * pi**4 / 5) ** 2
V2 = a**2 / 8
V13 = b**2 * pi**8 * (1 / 18 - 1 / 50)
V = V1 + V2 + V13
print("ST1", (V1 + V13) / V, "ST2", V2 / V, "ST3", V13 / V)
