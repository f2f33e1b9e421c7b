"""
Shift schemes against noise injection
=====================================

Each mechanism runs on the same data and the same channel noise, so Bob's
model is identical everywhere and only Eve's view changes. Injection needs
``d`` secret scalars per agent per round; the shift needs one.
"""

from modshift import ExperimentConfig
from modshift.experiment import fig2_grid, fig3_grid, grid_table, run_grid

base = ExperimentConfig(d=20, K=20, m_k=200, rounds=80)
grid = {**fig2_grid(base), **fig3_grid(base)}
table = grid_table(run_grid(grid, repeats=2))

print(f"{'mechanism':>13} {'Bob loss':>10} {'Eve loss':>12} {'|w_E - w_B|':>12} {'secret scalars':>15}")
for label, row in sorted(table.items(), key=lambda kv: -kv[1]["final_loss_eve"]):
    print(
        f"{label:>13} {row['final_loss_bob']:10.4f} {row['final_loss_eve']:12.2f}"
        f" {row['final_shift_vs_bob']:12.3f} {row['ledger_total']:15.0f}"
    )
