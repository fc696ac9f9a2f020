"""Shared shape of a service: attach once, then feed inputs in order.

A service is a single logical event loop. The session host delivers
upstream responses and clock advances one at a time; each delivery yields
a UI delta of components to remove and documents to present.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..acts import IslNode, UpstreamResponse


@dataclass(frozen=True)
class ServiceUpdate:
    """What the host must remove and present, in that order."""

    remove: tuple[str, ...] = ()
    present: tuple[IslNode, ...] = ()

    def __bool__(self) -> bool:
        return bool(self.remove or self.present)


class Service:
    name = "service"

    def configure(self, descriptor: dict[str, str]) -> None:
        """Adopt engine descriptor fields the service understands.

        Called once, before attach. The default ignores everything."""

    def attach(self) -> ServiceUpdate:
        """First delivery after the handshake: the initial UI."""
        raise NotImplementedError

    def handle(self, response: UpstreamResponse) -> ServiceUpdate:
        raise NotImplementedError

    def advance(self, sim_seconds: int) -> ServiceUpdate:
        """Push simulated time forward; services without clocks ignore it."""
        return ServiceUpdate()
