"""Call on a call: the critical spot and the K1 = 0 limit."""

from jmfbm import (CompoundCallSpec, ModelParams, TimeWindow, VanillaCallSpec,
                   call_price, compound_call_price, critical_price)

p = ModelParams(r=0.05, sigma=0.2, hurst=0.8, lam=1.0, k=-0.1, sigma_j=0.25)

print("Buy at T1 = 0.5 for K1 a call struck at 100 expiring T2 = 1")
for k1 in (0.0, 3.0, 6.0, 10.0):
    spec = CompoundCallSpec(k1, 0.5, 100.0, 1.0)
    star = critical_price(p, spec)
    res = compound_call_price(p, 100.0, spec, critical=star)
    print(f"  K1 = {k1:4.1f}: S1* = {star.value:9.4f}  price {res.value:.6f}")

van = call_price(p, 100.0, VanillaCallSpec(100.0, TimeWindow(0.0, 1.0))).value
print(f"With K1 = 0 the compound is the inner call itself: vanilla {van:.6f}")
