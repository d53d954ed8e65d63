"""
Digital biomarkers from day-level summaries
===========================================

Every feature of a day is cut into intervals and each interval becomes a
binary biomarker. A two-day window gives one flat 0/1 vector.
"""

from glumarker import default_binning_config, digitize, encode_window
from glumarker.core_types import DayRecord, compute_range_stats

cfg = default_binning_config()

# the meal size scheme: an explicit no-entry bin, then four value intervals
meal = cfg.schemes["total_meal_size"]
print(meal.bin_labels)
print(digitize(150.0, meal))   # one-hot at [120, 200)
print(digitize(None, meal))    # nothing logged -> no-entry

# edges belong to the bin that starts there
print(meal.bin_labels[meal.bin_index(120.0)])

###############################################################################
# Raw glucose readings become the TIR / TAR / TBR fractions of a day

stats = compute_range_stats([65, 90, 140, 175, 181, 240])
print(stats)

prior = DayRecord("P1", 1, stats, total_bolus=28.0, total_meal_bolus=14.0,
                  total_correction_bolus=None, total_meal_size=180.0)
present = DayRecord("P1", 2, compute_range_stats([100, 120, 150]), 40.0, 22.0, 6.0, 310.0)

vec = encode_window(prior, present, cfg)
print(vec.values.shape)        # 70 biomarkers
for (feature, day), label in vec.active().items():
    print(f"{day:8s} {feature:24s} {label}")
