"""Why the minimax penalty criterion disagrees with size minimization.

Builds a dataset with a confusable class pair whose hardest rows hide a
third competitor. The size criterion happily truncates every multi-class
set; the stratified minimax criterion notices that the few surviving
two-class sets stop covering and keeps the gentler penalty.
"""

from fractions import Fraction

from strataconf import (
    GeneratorConfig,
    LambdaGrid,
    MethodParams,
    SplitSpec,
    generate,
    split_dataset,
    tune_lambda_adaptive,
    tune_lambda_size,
)

config = GeneratorConfig(
    n_classes=3,
    n_samples=9000,
    seed=0,
    sharpness=4.0,
    confusion_pairs=((0, 1, 4.0),),
    noise_sd=1.45,
    ambiguous_fraction=0.12,
)
third = Fraction(1, 3)
tune, _, _ = split_dataset(generate(config), SplitSpec((third, third, third), 0))

grid = LambdaGrid((0.0, 0.1, 0.25))
params = MethodParams("raps", alpha=0.1)

size = tune_lambda_size(tune, grid, k_reg=1, params=params)
adaptive = tune_lambda_adaptive(tune, grid, k_reg=1, params=params)

print("per-penalty records (inner 50/50 split of the tuning set):")
print(f"{'lambda':>8} {'avg size':>9} {'max violation':>14} {'multi sets':>11}")
for record in adaptive.records:
    print(f"{record.lam:>8.3f} {record.avg_size:>9.3f} "
          f"{record.max_violation:>14.3f} {record.multi_label_count:>11}")

print(f"\nsize criterion picks      lambda = {size.chosen_lambda}")
print(f"adaptive criterion picks  lambda = {adaptive.chosen_lambda}")
