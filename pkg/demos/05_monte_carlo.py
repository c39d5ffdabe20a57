"""Checking the closed forms against simulation."""

from jmfbm import (CompoundCallSpec, ExtendibleCallSpec, McConfig, ModelParams, TimeWindow,
                   VanillaCallSpec, call_price, compound_call_price, extendible_call_price,
                   mc_compound_price, mc_extendible_price, mc_vanilla_price)

cfg = McConfig(paths=400_000, seed=7)
van = VanillaCallSpec(100.0, TimeWindow(0.0, 1.5))
cmp = CompoundCallSpec(6.0, 0.5, 100.0, 1.0)
ext = ExtendibleCallSpec(100.0, 0.5, 105.0, 1.0, 2.0)

for h in (0.5, 0.8):
    p = ModelParams(r=0.05, sigma=0.2, hurst=h, lam=1.0, k=-0.1, sigma_j=0.25)
    print(f"H = {h}")
    rows = [
        ("vanilla", call_price(p, 100.0, van).value, mc_vanilla_price(p, 100.0, van, cfg)),
        ("compound", compound_call_price(p, 100.0, cmp).value,
         mc_compound_price(p, 100.0, cmp, cfg, "analytic")),
        ("extendible", extendible_call_price(p, 100.0, ext).value,
         mc_extendible_price(p, 100.0, ext, cfg, "analytic")),
        ("extendible, simulated roll", extendible_call_price(p, 100.0, ext).value,
         mc_extendible_price(p, 100.0, ext, cfg, "simulated")),
    ]
    for name, exact, est in rows:
        print(f"  {name:27s} closed {exact:9.5f}  MC {est.mean:9.5f} +/- {est.std_error:.5f}  "
              f"z {est.z_score(exact):+6.2f}")
print("With an analytic inner call the simulation agrees at every H. Rolling the "
      "simulated path to T2 agrees only at H = 1/2: the closed forms treat the "
      "T1 and T2 log-returns with the nested variance convention, while the "
      "simulator uses the exact fBm covariance.")
