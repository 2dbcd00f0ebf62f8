"""Resilient erasure-coded edge storage: planner, codecs and a simulated world."""

from ._core import (  # noqa: F401
    CodingPlan,
    DeviceProfile,
    RdriveError,
    World,
    cost,
    cost_lower_bound,
    decrypt_block,
    device_availability,
    encrypt_block,
    join_key,
    make_guid,
    parse_command,
    plan,
    render_command,
    rs_decode,
    rs_encode,
    split_key,
    system_availability,
)

__all__ = [
    "CodingPlan",
    "DeviceProfile",
    "RdriveError",
    "World",
    "cost",
    "cost_lower_bound",
    "decrypt_block",
    "device_availability",
    "encrypt_block",
    "join_key",
    "make_guid",
    "parse_command",
    "plan",
    "render_command",
    "rs_decode",
    "rs_encode",
    "split_key",
    "system_availability",
]
