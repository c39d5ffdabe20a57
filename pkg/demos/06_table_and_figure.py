"""Reference table and difference surface, through the command line."""

from pathlib import Path

from jmfbm.cli import main

configs = Path(__file__).parent / "configs"

print("Extendible prices by model (merton: H = 1/2, mfbm: no jumps)")
main(["table", "--config", str(configs / "table1.conf"),
      "--t1-list", "1,0.5", "--k1-list", "10,11,12,13,14"])

print()
print("How far the full model sits from each reduction")
main(["figure", "--config", str(configs / "figure1.conf"),
      "--t1-list", "0.25,0.5,0.75,1", "--k1-list", "0.8,1,1.2,1.4"])
