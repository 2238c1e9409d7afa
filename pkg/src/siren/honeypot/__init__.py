"""Low-interaction honeypot: fake shell, stalled file reads, one-way control channel."""

from siren.honeypot.activity import ActivitySimulator
from siren.honeypot.control import ControlCommand, ControlListener, parse_datagram, send_control
from siren.honeypot.events import EventLog, SessionEvent, VirtualClock
from siren.honeypot.export import Manifest, export_sessions, parse_archive
from siren.honeypot.server import Honeypot, HoneypotConfig
from siren.honeypot.shell import Session, Shell, Staller, read_file_stalled
from siren.honeypot.vfs import VirtualFs, resolve

__all__ = [
    "ActivitySimulator", "ControlCommand", "ControlListener", "EventLog", "Honeypot", "HoneypotConfig",
    "Manifest", "Session", "SessionEvent", "Shell", "Staller", "VirtualClock", "VirtualFs",
    "export_sessions", "parse_archive", "parse_datagram", "read_file_stalled", "resolve", "send_control",
]
