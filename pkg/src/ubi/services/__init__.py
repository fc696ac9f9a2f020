from .base import Service, ServiceUpdate
from .calendar import (
    CalendarError,
    CalendarEvent,
    CalendarService,
    MalformedPayload,
    UnknownEvent,
)
from .broker import BrokerService, UnknownResponse

__all__ = [
    "BrokerService",
    "CalendarError",
    "CalendarEvent",
    "CalendarService",
    "MalformedPayload",
    "Service",
    "ServiceUpdate",
    "UnknownEvent",
    "UnknownResponse",
]
