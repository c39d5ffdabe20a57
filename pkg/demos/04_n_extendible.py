"""Several successive extensions, each with its own strike and premium."""

from jmfbm import (ExtendibleCallSpec, ExtensionStage, ModelParams, NExtendibleSpec,
                   SeriesControl, extendible_call_price, n_extendible_critical_values,
                   n_extendible_price)

p = ModelParams(r=0.05, sigma=0.2, hurst=0.7, lam=0.5, k=-0.05, sigma_j=0.2)
control = SeriesControl(tail_tolerance=1e-8)
stages = [ExtensionStage(0.5, 100.0), ExtensionStage(1.0, 105.0, 2.0),
          ExtensionStage(1.5, 110.0, 1.5), ExtensionStage(2.0, 115.0, 1.0)]

for n in (1, 2, 3):
    spec = NExtendibleSpec(tuple(stages[: n + 1]))
    levels = n_extendible_critical_values(p, spec, control)
    res = n_extendible_price(p, 100.0, spec, control)
    bands = "  ".join(f"[{lo:.3f}, {hi:.3f}]" for lo, hi in levels)
    print(f"N = {n}: price {res.value:.8f}  bands {bands}")

one = extendible_call_price(p, 100.0, ExtendibleCallSpec(100.0, 0.5, 105.0, 1.0, 2.0), control)
print(f"single-extension formula for comparison: {one.value:.8f}")
print("Each added right is worth something, so the price rises with N.")
