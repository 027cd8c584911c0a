"""Print every interval metric for FeO in sample 15415.

    python scripts/worked_example.py
"""
from compextract.intervals import (Interval, intersection, length, midpoint, midpoint_abs_err,
                                   midpoint_rel_err, precision, recall)

truth = Interval(0.199, 0.202)
estimate = Interval(0.08, 0.202)

rel = midpoint_rel_err(truth, estimate)
print(f"truth     {truth.lo} - {truth.hi}  (midpoint {midpoint(truth):.4f}, length {length(truth):.3f})")
print(f"estimate  {estimate.lo} - {estimate.hi}  (midpoint {midpoint(estimate):.4f}, length {length(estimate):.3f})")
print(f"overlap   {intersection(truth, estimate)}")
print(f"abs err   {midpoint_abs_err(truth, estimate):.4f}")
print(f"rel err   {rel.value:.2f}%" + ("  (small truth midpoint, read with care)" if rel.sensitive else ""))
print(f"precision {precision(truth, estimate):.4f}")
print(f"recall    {recall(truth, estimate):.4f}")
