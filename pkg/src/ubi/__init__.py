"""Device-independent interaction toolkit.

Services describe their interaction with users as trees of interaction acts;
interaction engines combine those acts with per-device customization forms to
generate concrete user interfaces and hand user actions back as responses.
"""

__version__ = "0.1.0"
