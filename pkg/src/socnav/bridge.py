"""Live bridge: streams world snapshots over a WebSocket and accepts user
commands, preference points, goals, and mode changes.

Wire protocol v1: one JSON object per frame, {"v": 1, "type": ..., "seq": n,
"payload": {...}}. Server frames: hello (costmap patch + config), snapshot
(one per tick), map (re-issued costmap patch after a preference change or
reset), error. Client frames: user_cmd {v, omega}, set_preference {x, y},
set_goal {x, y}, set_mode {variant}, pause, resume, reset {scenario?}.
Client messages take effect at the next tick boundary. One authoritative
simulation; clients are views plus command sources.
"""

from __future__ import annotations

import asyncio
import json
import time

import numpy as np
import websockets

from .costmap import UpfParams, build_costmap
from .harness import EpisodeRunner, Scenario, load_scenario
from .local_planner import VARIANTS

PROTOCOL_VERSION = 1
MAP_PATCH_MAX_CELLS = 120  # per axis, downsampled for the wire


def _map_patch(scenario: Scenario, preference_point=None,
               robot_position=None) -> dict:
    """Costmap max-pooled onto a coarse grid the cockpit can shade; includes
    the preference valley when a preference point is active."""
    grid = scenario.grid
    upf = None
    if preference_point is not None and robot_position is not None:
        if tuple(preference_point) != tuple(robot_position):
            upf = UpfParams(preference_point=tuple(preference_point),
                            robot_position=tuple(robot_position))
    cost = build_costmap(grid, upf).cost
    step = max(1, int(np.ceil(max(grid.width_cells, grid.height_cells)
                              / MAP_PATCH_MAX_CELLS)))
    h, w = cost.shape
    ph, pw = (h + step - 1) // step, (w + step - 1) // step
    padded = np.zeros((ph * step, pw * step), dtype=cost.dtype)
    padded[:h, :w] = cost
    coarse = padded.reshape(ph, step, pw, step).max(axis=(1, 3))
    return {
        "width": pw, "height": ph,
        "resolution": grid.resolution * step,
        "origin": [grid.origin[0], grid.origin[1]],
        "cost": coarse.tolist(),
    }


class BridgeServer:
    """One authoritative simulation stepped in real time, fanned out to any
    number of WebSocket sessions."""

    def __init__(self, scenario: Scenario, variant: str = "ss-mpc-dcbf",
                 host: str = "127.0.0.1", port: int = 8765,
                 seed: int | None = None, realtime: bool = True):
        self.scenario = scenario
        self.variant = variant
        self.host = host
        self.port = port
        self.seed = seed
        self.realtime = realtime
        self.runner = EpisodeRunner(scenario, variant=variant, seed=seed)
        self.seq = 0
        self.paused = False
        self.clients: set = set()
        self._inbox: asyncio.Queue = asyncio.Queue()
        self._stop = asyncio.Event()
        self._map_dirty = False

    # -- framing ---------------------------------------------------------

    def _frame(self, type_: str, payload: dict) -> str:
        self.seq += 1
        return json.dumps({"v": PROTOCOL_VERSION, "type": type_,
                           "seq": self.seq, "payload": payload},
                          separators=(",", ":"))

    def _current_map_patch(self) -> dict:
        pose = self.runner.world.robot.pose
        return _map_patch(self.scenario, self.runner.preference_point,
                          (pose.x, pose.y))

    def _hello_payload(self) -> dict:
        cfg = self.runner.planner_cfg
        return {
            "scenario": self.scenario.name,
            "variant": self.runner.variant or "ss-mpc-dcbf",
            "tick_s": self.scenario.tick,
            "map": self._current_map_patch(),
            "bounds": {"v": list(cfg.v_bounds), "omega": list(cfg.omega_bounds)},
            "goal": list(self.runner.goal),
            "robot_radius": self.scenario.robot_radius,
        }

    def snapshot_payload(self) -> dict:
        r = self.runner
        world = r.world
        pose = world.robot.pose
        rec = r.records[-1] if r.records else None
        tracks = []
        for track, area in r.tracked:
            tracks.append({
                "id": track.id,
                "pos": [float(track.position[0]), float(track.position[1])],
                "vel": [float(track.velocity[0]), float(track.velocity[1])],
                "area": {"heading": area.heading, "sigma_h": area.sigma_h,
                         "sigma_s": area.sigma_s, "sigma_r": area.sigma_r,
                         "c_scale": area.c_scale},
            })
        return {
            "t": world.t,
            "paused": self.paused,
            "done": r.done,
            "success": r.success,
            "variant": r.variant or "ss-mpc-dcbf",
            "robot": {"pose": [pose.x, pose.y, pose.theta],
                      "cmd": list(world.robot.last_input),
                      "radius": world.robot.radius},
            "pedestrians": [{"id": p.id,
                             "pos": [float(p.position[0]), float(p.position[1])],
                             "vel": [float(p.velocity[0]), float(p.velocity[1])],
                             "radius": p.radius}
                            for p in world.pedestrians],
            "tracks": tracks,
            "global_path": [[float(x), float(y)]
                            for x, y in r.path.waypoints[::5]],
            "goal": list(r.goal),
            "preference_point": (list(r.preference_point)
                                 if r.preference_point else None),
            "eta": rec["eta"] if rec else 0.0,
            "h_min": rec["h_min"] if rec else None,
            "collision": world.collided_ever,
            "solver_status": rec["solver"]["status"] if rec else None,
        }

    # -- message handling --------------------------------------------------

    def _apply(self, msg: dict) -> dict | None:
        """Apply one client message at a tick boundary; returns an error
        payload when rejected."""
        mtype = msg.get("type")
        payload = msg.get("payload") or {}
        try:
            if mtype == "user_cmd":
                self.runner.submit_user_command((float(payload["v"]),
                                                 float(payload["omega"])))
            elif mtype == "set_preference":
                self.runner.set_preference((float(payload["x"]),
                                            float(payload["y"])))
                self._map_dirty = True
            elif mtype == "set_goal":
                self.runner.set_goal((float(payload["x"]), float(payload["y"])))
            elif mtype == "set_mode":
                variant = payload.get("variant")
                if variant not in VARIANTS:
                    raise ValueError(f"unknown planner variant {variant!r}")
                self.runner.set_variant(variant)
            elif mtype == "pause":
                self.paused = True
            elif mtype == "resume":
                self.paused = False
            elif mtype == "reset":
                name = payload.get("scenario")
                scenario = load_scenario(name) if name else self.scenario
                self.scenario = scenario
                self.runner = EpisodeRunner(scenario,
                                            variant=self.variant,
                                            seed=self.seed)
                self._map_dirty = True
            else:
                raise ValueError(f"unknown message type {mtype!r}")
        except (KeyError, TypeError, ValueError) as e:
            return {"message": str(e), "rejected": mtype}
        return None

    async def _broadcast(self, frame: str) -> None:
        stale = []
        for ws in list(self.clients):
            try:
                await ws.send(frame)
            except websockets.ConnectionClosed:
                stale.append(ws)
        for ws in stale:
            self.clients.discard(ws)

    async def _handler(self, ws) -> None:
        self.clients.add(ws)
        try:
            await ws.send(self._frame("hello", self._hello_payload()))
            await ws.send(self._frame("snapshot", self.snapshot_payload()))
            async for raw in ws:
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError as e:
                    await ws.send(self._frame("error", {"message": str(e)}))
                    continue
                await self._inbox.put((ws, msg))
        except websockets.ConnectionClosed:
            pass
        finally:
            self.clients.discard(ws)

    async def _sim_loop(self) -> None:
        next_tick = time.monotonic()
        while not self._stop.is_set():
            # Client messages apply at the tick boundary, never mid-tick.
            while not self._inbox.empty():
                ws, msg = self._inbox.get_nowait()
                err = self._apply(msg)
                if err is not None:
                    try:
                        await ws.send(self._frame("error", err))
                    except websockets.ConnectionClosed:
                        pass
            if self._map_dirty:
                self._map_dirty = False
                await self._broadcast(self._frame("map", self._current_map_patch()))
            if not self.paused and not self.runner.done:
                self.runner.tick()
            await self._broadcast(self._frame("snapshot", self.snapshot_payload()))
            if self.realtime:
                next_tick += self.scenario.tick
                delay = next_tick - time.monotonic()
                if delay > 0:
                    await asyncio.sleep(delay)
                else:
                    next_tick = time.monotonic()
            else:
                await asyncio.sleep(0)

    def stop(self) -> None:
        self._stop.set()

    async def serve_forever(self) -> None:
        async with websockets.serve(self._handler, self.host, self.port):
            await self._sim_loop()


def serve(scenario: Scenario, port: int = 8765, host: str = "127.0.0.1",
          variant: str = "ss-mpc-dcbf", seed: int | None = None) -> None:
    """Run the bridge until interrupted (one tick per T seconds, real time)."""
    server = BridgeServer(scenario, variant=variant, host=host, port=port,
                          seed=seed)
    asyncio.run(server.serve_forever())
