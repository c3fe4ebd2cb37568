"""
Binary checkpoint format, little-endian:

    offset  size  field
    0       5     magic b"UWHDN"
    5       2     schema version (uint16)
    7       32    SHA-256 of the architecture config (canonical JSON)
    39      8     payload length in bytes (uint64)
    47      32    SHA-256 of the payload
    79      n     payload

The payload is a `torch.save` archive of an ordered mapping with, in this order: architecture,
config, hdn, restoration, generator_optimizer, discriminator_optimizer, counters, rng.
"""

import hashlib
import io
import json
import logging
import os
import struct
from pathlib import Path
from typing import Any

import numpy as np
import torch

from uwdehaze.config import TrainConfig
from uwdehaze.errors import CheckpointError, ConfigError
from uwdehaze.networks import ArchitectureConfig
from uwdehaze.state import TrainState, build_state

logger = logging.getLogger(__name__)

MAGIC = b"UWHDN"
SCHEMA_VERSION = 1
HEADER = struct.Struct("<5sH32sQ32s")
PAYLOAD_KEYS: tuple[str, ...] = (
    "architecture",
    "config",
    "hdn",
    "restoration",
    "generator_optimizer",
    "discriminator_optimizer",
    "counters",
    "rng",
)


def _payload(state: TrainState) -> dict[str, Any]:
    return {
        "architecture": state.config.architecture.to_dict(),
        "config": state.config.to_dict(),
        "hdn": state.hdn.state_dict(),
        "restoration": state.restoration.state_dict(),
        "generator_optimizer": state.generator_optimizer.state_dict(),
        "discriminator_optimizer": state.discriminator_optimizer.state_dict(),
        "counters": {"epoch": state.epoch, "step": state.step},
        "rng": {
            "numpy": json.dumps(state.rng.bit_generator.state),
            "torch": torch.get_rng_state(),
        },
    }


def save_checkpoint(state: TrainState, path: Path | str) -> Path:
    """
    Write the full training state. The file appears atomically: it is written beside the
    target and renamed into place.

    :rtype: Path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    buffer = io.BytesIO()
    torch.save(_payload(state), buffer)
    payload = buffer.getvalue()
    header = HEADER.pack(
        MAGIC,
        SCHEMA_VERSION,
        state.config.architecture.config_hash(),
        len(payload),
        hashlib.sha256(payload).digest(),
    )

    partial = path.with_name(path.name + ".partial")
    partial.write_bytes(header + payload)
    os.replace(partial, path)
    logger.debug("Saved checkpoint at step %d to %s", state.step, path)

    return path


def read_checkpoint(path: Path | str) -> dict[str, Any]:
    """
    Validate a checkpoint file and return its payload mapping without building any networks.

    :raises CheckpointError: If the file is missing, truncated, corrupt or of another schema.
    """
    path = Path(path)

    try:
        data = path.read_bytes()
    except OSError as error:
        raise CheckpointError(f'Unable to read checkpoint "{path}": {error}') from error

    if len(data) < HEADER.size:
        raise CheckpointError(f'The checkpoint "{path}" is truncated (no complete header).')

    magic, version, config_hash, length, digest = HEADER.unpack_from(data)

    if magic != MAGIC:
        raise CheckpointError(f'The file "{path}" is not a checkpoint (bad magic {magic!r}).')

    if version != SCHEMA_VERSION:
        raise CheckpointError(
            f'The checkpoint "{path}" uses schema version {version}; this build reads '
            f"version {SCHEMA_VERSION}."
        )

    payload = data[HEADER.size :]

    if len(payload) != length:
        raise CheckpointError(
            f'The checkpoint "{path}" is truncated: expected {length} payload bytes, found '
            f"{len(payload)}."
        )

    if hashlib.sha256(payload).digest() != digest:
        raise CheckpointError(f'The checkpoint "{path}" is corrupt (payload digest mismatch).')

    try:
        contents = torch.load(io.BytesIO(payload), map_location="cpu", weights_only=True)
    except Exception as error:
        raise CheckpointError(f'Unable to decode checkpoint "{path}": {error}') from error

    if missing := [key for key in PAYLOAD_KEYS if key not in contents]:
        raise CheckpointError(
            f"The checkpoint \"{path}\" lacks the section(s): {', '.join(missing)}."
        )

    try:
        architecture = ArchitectureConfig.from_dict(contents["architecture"])
    except (ConfigError, TypeError) as error:
        raise CheckpointError(
            f'The checkpoint "{path}" holds an invalid architecture: {error}'
        ) from error

    if architecture.config_hash() != config_hash:
        raise CheckpointError(
            f'The checkpoint "{path}" header hash does not match its architecture section.'
        )

    return contents


def load_checkpoint(path: Path | str, config: TrainConfig | None = None) -> TrainState:
    """
    Rebuild a training state from a checkpoint.

    :param config: The config to continue under. Its architecture must hash to the one the
        checkpoint was written with; optimizer hyperparameters are taken from it. When
        omitted, the stored config is used.
    :rtype: TrainState
    :raises CheckpointError: On any unreadable file or architecture mismatch.
    """
    contents = read_checkpoint(path)
    stored = ArchitectureConfig.from_dict(contents["architecture"])

    if config is None:
        try:
            config = TrainConfig.from_dict(contents["config"])
        except ConfigError as error:
            raise CheckpointError(
                f'The checkpoint "{path}" holds an invalid training config: {error}'
            ) from error
    elif config.architecture.config_hash() != stored.config_hash():
        raise CheckpointError(
            f'The checkpoint "{path}" was written for architecture {stored.to_dict()}, which '
            f"does not match the requested {config.architecture.to_dict()} (config hash mismatch)."
        )

    state = build_state(config)

    try:
        state.hdn.load_state_dict(contents["hdn"])
        state.restoration.load_state_dict(contents["restoration"])
        state.generator_optimizer.load_state_dict(contents["generator_optimizer"])
        state.discriminator_optimizer.load_state_dict(contents["discriminator_optimizer"])
    except (RuntimeError, ValueError, KeyError) as error:
        raise CheckpointError(f'The checkpoint "{path}" does not fit the networks: {error}') from error

    for optimizer in (state.generator_optimizer, state.discriminator_optimizer):
        for group in optimizer.param_groups:
            group["lr"] = config.learning_rate
            group["betas"] = (config.beta1, config.beta2)

    rng = np.random.default_rng()
    rng.bit_generator.state = json.loads(contents["rng"]["numpy"])
    state.rng = rng
    torch.set_rng_state(contents["rng"]["torch"])
    state.epoch = int(contents["counters"]["epoch"])
    state.step = int(contents["counters"]["step"])

    return state
