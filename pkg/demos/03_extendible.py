"""Holder-extendible call: the extension band [L, M] and its premium."""

from jmfbm import (ExtendibleCallSpec, ModelParams, critical_value_residuals,
                   critical_values, extendible_call_price, mfbm_extendible_price)

p = ModelParams(r=0.05, sigma=0.2, hurst=0.8, lam=1.0, k=-0.1, sigma_j=0.25)

print("Strike 100 at T1 = 0.5, extendible to T2 = 1 at strike 105 for premium A")
for a in (0.5, 2.0, 5.0):
    spec = ExtendibleCallSpec(100.0, 0.5, 105.0, 1.0, a)
    lm = critical_values(p, spec)
    res = extendible_call_price(p, 100.0, spec)
    worst = max(abs(x) for x in critical_value_residuals(p, spec, lm))
    print(f"  A = {a:3.1f}: L = {lm.lower:8.4f}  M = {lm.upper:8.4f}  "
          f"price {res.value:.6f}  residual {worst:.1e}")
print("A dearer extension narrows the band and lowers the price.")

no_jumps = p.replace(lam=0.0)
spec = ExtendibleCallSpec(100.0, 0.5, 105.0, 1.0, 2.0)
print("Without jumps the series collapses to the single mixed-fBm formula:")
print(f"  series {extendible_call_price(no_jumps, 100.0, spec).value:.15f}")
print(f"  closed {mfbm_extendible_price(no_jumps, 100.0, spec).value:.15f}")
