"""
A tour of the synchronization metrics
=====================================

Two noisy oscillators share a frequency.  Halfway through, the second one
flips to anti-phase.  The script shows how each metric reports the flip.
"""

import numpy as np

import phasesync as ps

# two regions, 210 samples at a 2 s sampling interval
rng = np.random.default_rng(1)
tr = 2.0
t = np.arange(210) * tr
flip = np.where(np.arange(t.size) < 105, 0.0, np.pi)
x = np.cos(2 * np.pi * 0.05 * t) + 0.3 * rng.standard_normal(t.size)
y = np.cos(2 * np.pi * 0.05 * t + flip) + 0.3 * rng.standard_normal(t.size)
data = ps.RoiDataset(np.vstack([x, y]), tr, ["left", "right"])

# band-pass 0.03-0.07 Hz, then read the phase off the analytic signal
phases = ps.extract_phases(data)
px, py = phases.phases

# instantaneous metrics: coherence ignores the sign of the relation, CRP keeps it
dphi = ps.phase_difference(px, py)
coh = ps.phase_coherence(dphi)
crp = ps.crp(dphi)
first, second = slice(30, 95), slice(120, 185)
print("mean coherence  before/after flip: %.2f / %.2f" % (coh[first].mean(), coh[second].mean()))
print("mean CRP        before/after flip: %+.2f / %+.2f" % (crp[first].mean(), crp[second].mean()))

# windowed metrics over 30-sample trailing windows.  Circ-circ correlates
# deviations from each series' own mean direction; over whole cycles that
# direction is barely defined, so its sign can flip even for locked series.
for metric in ("plv", "circ_circ", "toroidal"):
    series = ps.sliding_apply(metric, px, py, 30)
    v = series.values
    # values[k] belongs to sample offset + k
    at = lambda sample: v[sample - series.offset]
    print("%-10s w30 at samples 90 / 130 / 200: %+.2f %+.2f %+.2f"
          % (metric, at(90), at(130), at(200)))

# the same comparison for every pair of a multi-region recording
tensor = ps.pairwise_tensor(phases, "crp")
print("CRP tensor shape (pairs, samples):", tensor.values.shape)
