#!/usr/bin/env python3
"""Preset calibration sweep: expert completion-time means vs the published
envelopes, plus the headline safety/performance contrasts.

This is the harness that was used to freeze the NOVICE/EXPERT presets; it is
kept runnable so any future preset change can be re-checked the same way.

    python scripts/calibrate_presets.py --seeds 20
"""

import argparse
import statistics
import sys
import time

from vitreosim.analytics import load_reference_summaries
from vitreosim.sessionlog import replay
from vitreosim.synth import EXPERT, NOVICE, generate_session
from vitreosim.tasks import TaskKind


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=20)
    args = ap.parse_args(argv)

    summaries = load_reference_summaries()
    t0 = time.time()
    ok = True
    for kind in TaskKind:
        ref = summaries[(kind.value, "efficiency_s", "combined", "expert")]
        for profile in (EXPERT, NOVICE):
            times, touches, extras = [], [], []
            for seed in range(1, args.seeds + 1):
                rep = replay(generate_session(kind, profile, seed=seed,
                                              run_index=(seed % 3) + 1))
                times.append(rep.completion_time_s)
                touches.append(rep.retinal_touches)
                ms = rep.module_specific
                extras.append(ms.get("sphere_exits",
                                     ms.get("grasps", ms.get("laser_spots", 0))))
            mean_t = statistics.mean(times)
            line = (f"{kind.value:<10s} {profile.name:<6s} "
                    f"time {mean_t:7.2f}s [{min(times):6.2f}, {max(times):6.2f}]  "
                    f"touches {statistics.mean(touches):5.2f}  "
                    f"task-metric {statistics.mean(extras):7.2f}")
            if profile.name == "expert":
                inside = ref.min <= mean_t <= ref.max
                ok &= inside
                line += (f"  envelope [{ref.min}, {ref.max}] "
                         f"{'OK' if inside else '** OUTSIDE **'}")
            print(line)
    print(f"\nelapsed {time.time() - t0:.1f}s; "
          f"{'all expert envelopes satisfied' if ok else 'ENVELOPE FAILURES'}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
