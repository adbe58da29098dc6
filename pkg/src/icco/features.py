"""Relative-geometry features derived from the global state and instructions.

The coordination encoder and trajectory posterior condition on the raw state
and instruction vectors; prepending these deterministic per-agent features
spares the networks from rediscovering coordinate subtraction and vector
normalization through TD gradients, which dominates learning time at small
scale. Every offset is emitted as a unit direction plus a separate distance,
so direction-dependent rewards (cosine alignment, distance deltas) become
near-linear readouts of the features.
"""

from __future__ import annotations

import torch

from .config import ScenarioConfig

_EPS = 1e-8


def _unit(v: torch.Tensor) -> torch.Tensor:
    return v / v.norm(dim=-1, keepdim=True).clamp_min(_EPS)


class StateFeatures:
    """Maps (state, flattened instructions) to per-agent relative features.

    Works on arbitrary leading batch dimensions; the feature vector is
    concatenated to the raw inputs by the consuming network.
    """

    def __init__(self, scenario: ScenarioConfig, n_waypoints: int):
        self.n = scenario.n_agents
        self.m = scenario.n_resources
        self.k = n_waypoints
        # state layout mirrors ResourceWorld.state_vector
        n, m = self.n, self.m
        self.pos_end = 2 * n
        self.res_start = 6 * n
        self.inv_start = 6 * n + 2 * m

    @property
    def per_agent(self) -> int:
        # waypoints: unit+dist each; nearest waypoint unit+dist; trail unit;
        # invader unit+dist; home unit+dist; two nearest resources unit+dist
        return 3 * self.k + 3 + 2 + 3 + 3 + 6

    @property
    def dim(self) -> int:
        return self.n * self.per_agent

    @property
    def core_per_agent(self) -> int:
        # unit directions: nearest waypoint, trail, invader, nearest resource
        return 8

    def _blocks(self, state: torch.Tensor, instr_flat: torch.Tensor):
        lead = state.shape[:-1]
        n, m, k = self.n, self.m, self.k
        pos = state[..., : self.pos_end].reshape(*lead, n, 2)
        res = state[..., self.res_start : self.res_start + 2 * m].reshape(*lead, m, 2)
        inv = state[..., self.inv_start : self.inv_start + 2].reshape(*lead, 1, 2)
        wps = instr_flat.reshape(*lead, n, k, 2)

        wp_off = wps - pos.unsqueeze(-2)  # (..., n, k, 2)
        wp_dist = wp_off.norm(dim=-1)
        near_dist, near_idx = wp_dist.min(dim=-1)
        near_off = torch.gather(
            wp_off, -2, near_idx.unsqueeze(-1).unsqueeze(-1).expand(*near_idx.shape, 1, 2)
        ).squeeze(-2)
        if k > 1:
            trail = torch.diff(wps, dim=-2)
            trail_idx = near_idx.clamp(max=k - 2)
            trail_dir = torch.gather(
                trail, -2, trail_idx.unsqueeze(-1).unsqueeze(-1).expand(*trail_idx.shape, 1, 2)
            ).squeeze(-2)
        else:
            trail_dir = near_off

        inv_off = inv - pos
        home_off = -pos
        res_off = res.unsqueeze(-3) - pos.unsqueeze(-2)  # (..., n, m, 2)
        res_dist = res_off.norm(dim=-1)
        order = res_dist.argsort(dim=-1)
        take = order[..., : min(2, m)]
        near_res = torch.gather(res_off, -2, take.unsqueeze(-1).expand(*take.shape, 2))
        if m < 2:
            pad = torch.zeros(*near_res.shape[:-2], 2 - m, 2, dtype=state.dtype)
            near_res = torch.cat([near_res, pad], dim=-2)
        return wp_off, near_off, near_dist, trail_dir, inv_off, home_off, near_res

    def __call__(self, state: torch.Tensor, instr_flat: torch.Tensor) -> torch.Tensor:
        lead = state.shape[:-1]
        n, k = self.n, self.k
        wp_off, near_off, near_dist, trail_dir, inv_off, home_off, near_res = self._blocks(
            state, instr_flat
        )
        parts = [
            _unit(wp_off).reshape(*lead, n, 2 * k),
            wp_off.norm(dim=-1),
            _unit(near_off),
            near_dist.unsqueeze(-1),
            _unit(trail_dir),
            _unit(inv_off),
            inv_off.norm(dim=-1, keepdim=True),
            _unit(home_off),
            home_off.norm(dim=-1, keepdim=True),
            _unit(near_res).reshape(*lead, n, 4),
            near_res.norm(dim=-1),
        ]
        return torch.cat(parts, dim=-1).reshape(*lead, self.dim)

    def core(self, state: torch.Tensor, instr_flat: torch.Tensor) -> torch.Tensor:
        """Per-agent 8-dim coordination summary used to seed the latent mean:
        unit directions to the nearest waypoint, along the trail, to the
        invader, and to the nearest resource."""
        lead = state.shape[:-1]
        _, near_off, _, trail_dir, inv_off, _, near_res = self._blocks(state, instr_flat)
        parts = [
            _unit(near_off),
            _unit(trail_dir),
            _unit(inv_off),
            _unit(near_res[..., 0, :]),
        ]
        return torch.cat(parts, dim=-1).reshape(*lead, self.n * self.core_per_agent)
