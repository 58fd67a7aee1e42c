#!/usr/bin/env python3
"""Regenerate the bundled scenario JSON files in src/socnav/scenarios/.

The office layouts share one structure: a central block splitting the room
into two routes of similar length, clutter on the right, and a hand-authored
user path swinging left through the preference point. Layout variants only
reshuffle the clutter."""

import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "socnav" / "scenarios"

WALLS_10x10 = [[0, 0, 10, 0.1], [0, 9.9, 10, 10], [0, 0, 0.1, 10], [9.9, 0, 10, 10]]


def office_layout(k: int) -> dict:
    rng = random.Random(1000 + k)
    rects = [r[:] for r in WALLS_10x10]
    rects.append([2.8, 3.0, 4.0, 7.0])  # divider left of the direct route
    for _ in range(8 + k % 4):
        w = rng.uniform(0.35, 0.9)
        h = rng.uniform(0.35, 0.9)
        x = rng.uniform(5.4, 9.4 - w)
        y = rng.uniform(1.4, 8.4 - h)
        rects.append([round(x, 2), round(y, 2), round(x + w, 2), round(y + h, 2)])
    return {
        "name": f"upf_office_{k:02d}",
        "map": {"size_m": [10, 10], "resolution_m": 0.1, "origin_m": [0, 0],
                "rectangles_m": rects},
        "robot": {"start_pose": [4.6, 0.8, 1.5707963267948966],
                  "goal_m": [4.6, 9.2], "radius_m": 0.6},
        "pedestrians": [],
        "preference_point_m": [1.4, 5.0],
        "ground_truth_path_m": [[4.6, 0.8], [1.5, 2.8], [1.5, 7.2], [4.6, 9.2]],
        "sim": {"tick_s": 0.1, "max_duration_s": 60.0},
        "seed": 0,
    }


def corridor() -> dict:
    rects = [[0, 0, 10, 0.1], [0, 3.9, 10, 4.0], [0, 0, 0.1, 4.0], [9.9, 0, 10, 4.0],
             [3.0, 0.1, 3.6, 1.4], [5.5, 2.6, 6.1, 3.9], [7.5, 0.1, 8.0, 1.6]]
    return {
        "name": "corridor",
        "map": {"size_m": [10, 4], "resolution_m": 0.05, "origin_m": [0, 0],
                "rectangles_m": rects},
        "robot": {"start_pose": [0.8, 2.0, 0.0], "goal_m": [9.2, 2.0],
                  "radius_m": 0.6},
        "pedestrians": [
            {"id": 1, "policy": "scripted", "start_m": [4.6, 2.9],
             "waypoints": [[0.0, 4.6, 2.9]], "preferred_speed_mps": 1.2,
             "radius_m": 0.3},
            {"id": 2, "policy": "scripted", "start_m": [6.8, 1.2],
             "waypoints": [[0.0, 6.8, 1.2]], "preferred_speed_mps": 1.2,
             "radius_m": 0.3},
        ],
        "preference_point_m": None,
        "sim": {"tick_s": 0.1, "max_duration_s": 40.0},
        "perception": {"c_scale": 1.0},
        "seed": 0,
    }


def crossing() -> dict:
    corners = [
        ([8.8, 1.6], [1.2, 8.4]),
        ([1.2, 8.6], [8.8, 1.4]),
        ([8.4, 8.8], [1.6, 1.2]),
        ([1.2, 4.4], [8.8, 5.6]),
        ([5.4, 8.8], [4.6, 1.2]),
    ]
    peds = [{"id": i + 1, "policy": "reciprocal", "start_m": s, "goal_m": g,
             "preferred_speed_mps": 1.2, "radius_m": 0.3}
            for i, (s, g) in enumerate(corners)]
    return {
        "name": "crossing",
        "map": {"size_m": [10, 10], "resolution_m": 0.05, "origin_m": [0, 0],
                "rectangles_m": [r[:] for r in WALLS_10x10]},
        "robot": {"start_pose": [1.2, 1.2, 0.7853981633974483],
                  "goal_m": [8.8, 8.8], "radius_m": 0.6},
        "pedestrians": peds,
        "preference_point_m": None,
        "sim": {"tick_s": 0.1, "max_duration_s": 40.0},
        "perception": {"c_scale": 0.08, "eps_d": 0.35, "association_gate": 0.4},
        "seed": 0,
    }


def aggressive() -> dict:
    return {
        "name": "aggressive",
        "map": {"size_m": [10, 10], "resolution_m": 0.05, "origin_m": [0, 0],
                "rectangles_m": [r[:] for r in WALLS_10x10]},
        "robot": {"start_pose": [1.2, 5.0, 0.0], "goal_m": [8.8, 5.0],
                  "radius_m": 0.6},
        "pedestrians": [
            {"id": 1, "policy": "scripted", "start_m": [8.8, 5.0],
             "waypoints": [[0.0, 1.2, 5.0]], "preferred_speed_mps": 1.2,
             "radius_m": 0.3},
        ],
        "preference_point_m": None,
        "sim": {"tick_s": 0.1, "max_duration_s": 30.0},
        "perception": {"c_scale": 0.12},
        "seed": 0,
    }


def distracted() -> dict:
    return {
        "name": "distracted",
        "map": {"size_m": [10, 10], "resolution_m": 0.05, "origin_m": [0, 0],
                "rectangles_m": [r[:] for r in WALLS_10x10]},
        "robot": {"start_pose": [1.2, 5.0, 0.0], "goal_m": [8.8, 5.0],
                  "radius_m": 0.6},
        "pedestrians": [
            {"id": 1, "policy": "scripted", "start_m": [5.0, 8.2],
             "waypoints": [[0.0, 5.0, 1.8], [2.2, 5.0, 8.2]],
             "preferred_speed_mps": 1.2, "radius_m": 0.3},
        ],
        "preference_point_m": None,
        "sim": {"tick_s": 0.1, "max_duration_s": 30.0},
        "perception": {"c_scale": 0.12},
        "seed": 0,
    }


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    scenarios = [corridor(), crossing(), aggressive(), distracted()]
    for k in range(1, 11):
        scenarios.append(office_layout(k))
    base = office_layout(1)
    base["name"] = "upf_office"
    scenarios.append(base)
    for sc in scenarios:
        path = OUT / f"{sc['name']}.json"
        path.write_text(json.dumps(sc, indent=2) + "\n")
        print("wrote", path)


if __name__ == "__main__":
    main()
